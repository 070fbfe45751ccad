//! Build a product-net codebook for an analytic class, then encode and decode
//! a class member and report the reconstruction error.

use entropy_grid::classes::AnalyticClassParams;
use entropy_grid::cli::suites::random_member;
use entropy_grid::codec::{build_codebook, decode, encode, roundtrip_report};

fn main() -> entropy_grid::Result<()> {
    let class = AnalyticClassParams::new(0.5, 2)?;
    let eps = 0.25;
    let cb = build_codebook(&class, eps, 0.01, 0)?;
    println!("shells M={} eta1={:.4} sizes={:?} ln|codebook|={:.2}", cb.m, cb.eta1, cb.shell_sizes, cb.log_size);
    println!("hash {}", cb.hash);

    for seed in 0..3 {
        let f = random_member(&class, seed)?;
        let code = encode(&f, &cb)?;
        let g = decode(&code, &cb)?;
        let r = roundtrip_report(&f, &cb)?;
        println!(
            "member {seed}: indices {:?} error {:.4} (quantization {:.4}, truncation {:.4}) decoded terms {}",
            code.indices,
            r.total,
            r.quantization,
            r.truncation,
            g.len()
        );
        assert!(r.total <= eps);
    }
    Ok(())
}
