//! Closed-form entropy bounds for the analytic, entire and functional classes,
//! including an accuracy far below the `f64` range.

use entropy_grid::bounds::{analytic_bounds, entire_bounds, functional_upper, Eps};
use entropy_grid::classes::{AnalyticClassParams, EntireClassParams, FunctionalClassParams};

fn show(label: &str, lower: Option<f64>, upper: Option<f64>, xp: bool) {
    let f = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6e}"));
    println!("{label:<32} ln H in [{}, {}]{}", f(lower), f(upper), if xp { "  (extended precision)" } else { "" });
}

fn main() -> entropy_grid::Result<()> {
    let analytic = AnalyticClassParams::new(0.5, 2)?;
    for v in [1e-3, 1e-6, 1e-12] {
        let b = analytic_bounds(&analytic, Eps::new(v)?);
        show(&format!("analytic rho=0.5 q=2 eps={v:e}"), b.lower_ln, b.upper_ln, b.xp_used);
    }

    let entire = EntireClassParams::standard(2, 1.0)?;
    for eps in [Eps::new(1e-6)?, Eps::new(1e-100)?, Eps::from_ln(-70000.0)?] {
        let b = entire_bounds(&entire, eps);
        show(&format!("entire Q=2 tau=1 eps={eps}"), b.lower_ln, b.upper_ln, b.xp_used);
    }

    let functional = FunctionalClassParams::new(1, 0.5)?;
    let b = functional_upper(&functional, Eps::new(1e-3)?)?;
    show("functional q=1 rho=0.5 eps=1e-3", b.lower_ln, b.upper_ln, b.xp_used);
    println!("gamma = {:.4}", b.details["gamma"]);
    Ok(())
}
