//! Exact packing and covering numbers of a small point cloud, showing
//! `C_{2ε} ≤ N_ε ≤ C_ε`.

use entropy_grid::netgen::{brute_capacity, brute_covering};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> entropy_grid::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    for eps in [0.15, 0.25, 0.4] {
        let c2 = brute_capacity(&points, 2.0 * eps)?;
        let n = brute_covering(&points, eps)?;
        let c1 = brute_capacity(&points, eps)?;
        println!("eps={eps}: C_2eps={c2} <= N_eps={n} <= C_eps={c1}");
        assert!(c2 <= n && n <= c1);
    }
    Ok(())
}
