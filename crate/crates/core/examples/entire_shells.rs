//! Sup-norm shell estimates of a band-limited function against the factorial
//! envelope of its entire class.

use entropy_grid::chebyshev::{compute_coeffs, shell_norm, IntervalBox, Norm};
use entropy_grid::classes::EntireClassParams;
use entropy_grid::generators::gen_bandlimited;

fn main() -> entropy_grid::Result<()> {
    let q = 2;
    let spec = gen_bandlimited(q, 1.0, 4, 3)?;
    let class = EntireClassParams::new(q as u32, q as f64, vec![1.0; q], 2.0)?;
    let series = compute_coeffs(|x| spec.eval(x), 15, 40, &IntervalBox::unit(q))?;
    for n in 1..=15u64 {
        let measured = shell_norm(&series, n, Norm::Sup { grid: 64 })?.value;
        let bound = class.ln_lambda(n).exp();
        println!("N={n:>2} sup|S_N|={measured:.3e} Lambda(N)={bound:.3e} ratio={:.2e}", measured / bound);
    }
    Ok(())
}
