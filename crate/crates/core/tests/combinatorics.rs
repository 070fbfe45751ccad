use std::collections::HashSet;

use entropy_grid::combinatorics::{
    binomial, cum_dim, enumerate_shell, factorial, shell_dim, stirling_bounds,
};
use num_bigint::BigUint;
use num_traits::ToPrimitive;

const N_MAX: u64 = 12;
const D_MAX: u32 = 8;

#[test]
fn cumulative_dimension_is_sum_of_shells() {
    for d in 1..=D_MAX {
        for n in 0..=N_MAX {
            let sum: BigUint = (0..=n).map(|j| shell_dim(j, d).unwrap()).sum();
            assert_eq!(sum, cum_dim(n, d).unwrap(), "n={n} d={d}");
        }
    }
}

#[test]
fn weighted_shell_sums() {
    for d in 1..=D_MAX {
        for n in 0..=N_MAX {
            let target = binomial(n + d as u64, d as u64 + 1);
            let first: BigUint = (0..=n).map(|j| shell_dim(j, d).unwrap() * j).sum();
            assert_eq!(first, &target * d, "first identity n={n} d={d}");

            let second: BigUint = (0..=n).map(|j| shell_dim(j, d).unwrap() * (n - j)).sum();
            assert_eq!(second, target, "second identity n={n} d={d}");

            // Starting at j = 1 drops the constant shell, which contributes exactly n.
            let from_one: BigUint = (1..=n).map(|j| shell_dim(j, d).unwrap() * (n - j)).sum();
            assert_eq!(from_one + n, target, "j=1 offset n={n} d={d}");
        }
    }
}

fn binomial_bracket(n: u64, d: u32) -> (f64, f64, f64) {
    let c = binomial(n + d as u64, d as u64 + 1).to_f64().unwrap();
    let dp1 = d as f64 + 1.0;
    let m = (n + d as u64) as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let lo = (2.0 * m / dp1).powf(dp1) / (8.0 * (two_pi * dp1).sqrt());
    let hi = 2.0 / two_pi.sqrt() * (std::f64::consts::E * m / dp1).powf(dp1);
    (lo, c, hi)
}

#[test]
fn binomial_upper_bracket_holds_on_grid() {
    for n in 1..=N_MAX {
        for d in 1..=D_MAX {
            let (_, c, hi) = binomial_bracket(n, d);
            assert!(c <= hi, "n={n} d={d}: {c} > {hi}");
        }
    }
}

#[test]
fn binomial_lower_bracket_fails_only_when_n_is_small_against_d() {
    let mut failures = Vec::new();
    for n in 1..=N_MAX {
        for d in 1..=D_MAX {
            let (lo, c, _) = binomial_bracket(n, d);
            if lo > c {
                failures.push((n, d));
            }
        }
    }
    assert_eq!(
        failures,
        vec![(1, 5), (1, 6), (1, 7), (1, 8), (2, 7), (2, 8)],
        "lower bracket failure set changed"
    );
    for n in 1..=N_MAX {
        for d in 1..=D_MAX {
            if n as u32 >= d + 2 {
                let (lo, c, _) = binomial_bracket(n, d);
                assert!(lo <= c, "n={n} d={d}");
            }
        }
    }
}

#[test]
fn power_minus_log_inequality() {
    for alpha in [0.25, 0.5, 1.0, 2.0_f64] {
        let floor = (std::f64::consts::E * alpha).ln() / alpha;
        for i in 1..=100 {
            let x = 0.1 * i as f64;
            let lhs = x.powf(alpha) - x.ln();
            assert!(lhs >= floor - 1e-12, "x={x} alpha={alpha}: {lhs} < {floor}");
        }
    }
}

#[test]
fn stirling_brackets_factorial() {
    for k in 1..=20u64 {
        let s = stirling_bounds(k).unwrap();
        assert!(!s.in_log);
        let exact = factorial(k).to_f64().unwrap();
        assert!(s.lower <= exact && exact <= s.upper, "k={k}");
    }
    assert!(stirling_bounds(0).is_err());
}

#[test]
fn shell_enumeration_is_complete_and_sorted() {
    for d in 1..=5u32 {
        for n in 0..=8u64 {
            let shell = enumerate_shell(n, d).unwrap();
            assert_eq!(
                BigUint::from(shell.len()),
                shell_dim(n, d).unwrap(),
                "n={n} d={d}"
            );
            let unique: HashSet<_> = shell.iter().map(|m| m.degrees().to_vec()).collect();
            assert_eq!(unique.len(), shell.len());
            assert!(shell.iter().all(|m| m.order() == n && m.dim() == d as usize));
            assert!(shell.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
