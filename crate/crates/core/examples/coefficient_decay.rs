//! Chebyshev coefficients of a pole-sum function on the ρ = 0.5 ellipse and
//! the decay rate fitted from its shell norms.

use entropy_grid::chebyshev::{compute_coeffs, shell_norm, IntervalBox, Norm};
use entropy_grid::classes::estimate_rho;
use entropy_grid::generators::gen_analytic;

fn main() -> entropy_grid::Result<()> {
    let rho = 0.5;
    for d in [1usize, 2] {
        let spec = gen_analytic(d, rho, 3, 11)?;
        let series = compute_coeffs(|x| spec.eval(x), 30, 64, &IntervalBox::unit(d))?;
        let norms = (0..=30)
            .map(|j| shell_norm(&series, j, Norm::L2).map(|n| n.value))
            .collect::<entropy_grid::Result<Vec<_>>>()?;
        let head: Vec<String> = norms[..6].iter().map(|v| format!("{v:.3e}")).collect();
        println!("d={d} first shell norms {}", head.join(" "));
        println!("d={d} fitted rho = {:.4}", estimate_rho(&norms)?);
    }
    Ok(())
}
