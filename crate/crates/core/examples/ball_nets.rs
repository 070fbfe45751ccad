//! Greedy ε-nets of the unit ball and of an ellipsoid, checked for coverage
//! and separation on fresh samples.

use entropy_grid::netgen::{greedy_net, net_ellipsoid, required_samples, sample_ball, verify_net, NetConfig};

fn main() -> entropy_grid::Result<()> {
    let cfg = NetConfig::default();
    for d in 1..=3usize {
        let eps = 0.25;
        let count = required_samples(d, eps, 0.01, &cfg)?;
        let samples = sample_ball(d, count.count as usize, 42)?;
        let net = greedy_net(&samples, eps / 2.0)?;
        let report = verify_net(&net, &sample_ball(d, 2000, 43)?)?;
        let (lo, hi) = (d as f64 * (1.0 / (2.0 * eps)).ln(), d as f64 * (12.0 / eps).ln());
        println!(
            "d={d} samples={} |net|={} ln|net|={:.3} bracket=[{lo:.3}, {hi:.3}] coverage={:.3}",
            count.count,
            net.len(),
            (net.len() as f64).ln(),
            report.coverage
        );
    }

    let net = net_ellipsoid(&[0.0, 1.0], &[2.0, 0.5], 0.3, 0.01, 7, true, &cfg)?;
    println!("ellipsoid radii (2, 0.5): {} points, first {:?}", net.len(), net.points[0]);
    Ok(())
}
