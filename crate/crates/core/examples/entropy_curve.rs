//! A 13-point ε-sweep of the ball entropy bracket written as CSV, with greedy
//! net sizes as the empirical column.

use entropy_grid::bounds::{ball_bounds, eps_grid, write_curve_csv};
use entropy_grid::netgen::{greedy_net, required_samples, sample_ball, NetConfig};

fn main() -> entropy_grid::Result<()> {
    let d = 2;
    let cfg = NetConfig::default();
    let mut rows = Vec::new();
    let mut empirical = Vec::new();
    for eps in eps_grid(0.9, 0.1, 13)? {
        rows.push(ball_bounds(d, 1.0, eps)?);
        let m = required_samples(d as usize, eps.value(), 0.01, &cfg)?;
        let samples = sample_ball(d as usize, m.count as usize, 1)?;
        let net = greedy_net(&samples, eps.value() / 2.0)?;
        empirical.push(Some((net.len() as f64).ln()));
    }
    write_curve_csv(std::io::stdout().lock(), &rows, Some(&empirical))
}
