//! Exact shell combinatorics and the Stirling sandwich.
//!
//! Binomials are exact [`BigUint`]s; conversion to `f64` or to natural logs
//! happens only where a bound is evaluated.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest shell that [`enumerate_shell`] materializes by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 22;

/// A multi-index `k = (k_1, ..., k_d)` of non-negative degrees.
///
/// Ordering is graded: first by order `|k|_1`, then lexicographically. This is
/// the order used for serialized coefficient tables and codebook shells.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(degrees: Vec<u32>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(invalid("multi-index must have at least one entry"));
        }
        Ok(MultiIndex(degrees))
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k|_1`.
    pub fn order(&self) -> u64 {
        self.0.iter().map(|&k| k as u64).sum()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn check_dim(d: u32) -> Result<()> {
    if d == 0 {
        return Err(invalid("dimension d must be at least 1"));
    }
    Ok(())
}

/// Number of multi-indices of order `n` in dimension `d`: `C(n+d-1, d-1)`.
pub fn shell_dim(n: u64, d: u32) -> Result<BigUint> {
    check_dim(d)?;
    Ok(binomial(n + d as u64 - 1, d as u64 - 1))
}

/// Number of multi-indices of order at most `n`: `C(n+d, d)`.
pub fn cum_dim(n: u64, d: u32) -> Result<BigUint> {
    check_dim(d)?;
    Ok(binomial(n + d as u64, d as u64))
}

/// `shell_dim` as a machine integer, when it fits.
pub fn shell_dim_usize(n: u64, d: u32) -> Result<usize> {
    let b = shell_dim(n, d)?;
    b.to_usize().ok_or_else(|| Error::CapExceeded {
        what: format!("shell dimension C({}+{}-1, {}-1)", n, d, d),
        requested: b.to_string(),
        limit: usize::MAX.to_string(),
    })
}

/// All multi-indices of order `n` in dimension `d`, lexicographically ascending.
pub fn enumerate_shell(n: u64, d: u32) -> Result<Vec<MultiIndex>> {
    enumerate_shell_capped(n, d, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_shell_capped(n: u64, d: u32, cap: usize) -> Result<Vec<MultiIndex>> {
    check_dim(d)?;
    let size = shell_dim(n, d)?;
    if size > BigUint::from(cap) {
        return Err(Error::CapExceeded {
            what: format!("shell enumeration (n={n}, d={d})"),
            requested: size.to_string(),
            limit: cap.to_string(),
        });
    }
    let n = u32::try_from(n).map_err(|_| invalid("shell order too large"))?;
    let mut out = Vec::with_capacity(size.to_usize().unwrap_or(0));
    let mut current = vec![0u32; d as usize];
    fill(&mut current, 0, n, &mut out);
    Ok(out)
}

fn fill(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    let last = current.len() - 1;
    if pos == last {
        current[pos] = remaining;
        out.push(MultiIndex(current.to_vec()));
        return;
    }
    for k in 0..=remaining {
        current[pos] = k;
        fill(current, pos + 1, remaining - k, out);
    }
}

/// Stirling bracket `sqrt(2πk)(k/e)^k ≤ k! ≤ 2 sqrt(2πk)(k/e)^k`.
///
/// When the values would overflow an `f64`, both ends are returned as natural
/// logs and `in_log` is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StirlingBounds {
    pub lower: f64,
    pub upper: f64,
    pub in_log: bool,
}

impl StirlingBounds {
    pub fn ln_lower(&self) -> f64 {
        if self.in_log {
            self.lower
        } else {
            self.lower.ln()
        }
    }

    pub fn ln_upper(&self) -> f64 {
        if self.in_log {
            self.upper
        } else {
            self.upper.ln()
        }
    }
}

pub fn stirling_bounds(k: u64) -> Result<StirlingBounds> {
    if k == 0 {
        return Err(invalid("stirling_bounds requires k >= 1"));
    }
    let kf = k as f64;
    let ln_lower = 0.5 * (2.0 * std::f64::consts::PI * kf).ln() + kf * (kf.ln() - 1.0);
    let ln_upper = ln_lower + std::f64::consts::LN_2;
    if ln_upper > crate::precision::XP_THRESHOLD {
        Ok(StirlingBounds {
            lower: ln_lower,
            upper: ln_upper,
            in_log: true,
        })
    } else {
        Ok(StirlingBounds {
            lower: ln_lower.exp(),
            upper: ln_upper.exp(),
            in_log: false,
        })
    }
}

/// Exact `k!`.
pub fn factorial(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * i)
}

/// `ln(k!)` via an exact product for small `k` and the log-gamma series above.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 171 {
        return (1..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64 + 1.0;
    // Stirling series for ln Γ(x); the truncation error is below 1e-15 for x > 170.
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_shell(n: u32, d: usize) -> Vec<Vec<u32>> {
        // odometer over [0, n]^d, filtered by order
        let mut out = Vec::new();
        let mut k = vec![0u32; d];
        loop {
            if k.iter().sum::<u32>() == n {
                out.push(k.clone());
            }
            let mut axis = d;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if k[axis] < n {
                    k[axis] += 1;
                    break;
                }
                k[axis] = 0;
            }
        }
    }

    #[test]
    fn shell_dim_examples() {
        assert_eq!(shell_dim(0, 3).unwrap(), BigUint::from(1u32));
        assert_eq!(shell_dim(2, 2).unwrap(), BigUint::from(3u32));
        let brute = brute_force_shell(5, 4).len();
        assert_eq!(brute, 56);
        assert_eq!(shell_dim(5, 4).unwrap(), BigUint::from(brute));
        assert!(shell_dim(3, 0).is_err());
    }

    #[test]
    fn shell_dim_is_exact_beyond_u64() {
        let big = shell_dim(400, 40).unwrap();
        assert!(big.bits() > 64);
        // Pascal: C(439, 39) = C(438, 39) + C(438, 38)
        let sum = shell_dim(399, 40).unwrap() + shell_dim(400, 39).unwrap();
        assert_eq!(big, sum);
    }

    #[test]
    fn cum_dim_examples() {
        assert_eq!(cum_dim(3, 2).unwrap(), BigUint::from(10u32));
        assert_eq!(cum_dim(0, 5).unwrap(), BigUint::from(1u32));
        let direct: BigUint = (0..=6).map(|j| shell_dim(j, 3).unwrap()).sum();
        assert_eq!(direct, BigUint::from(84u32));
        assert_eq!(cum_dim(6, 3).unwrap(), direct);
    }

    #[test]
    fn enumerate_shell_examples() {
        let two = enumerate_shell(2, 2).unwrap();
        let got: Vec<&[u32]> = two.iter().map(|k| k.degrees()).collect();
        assert_eq!(got, vec![&[0, 2][..], &[1, 1], &[2, 0]]);

        let zero = enumerate_shell(0, 4).unwrap();
        assert_eq!(zero.len(), 1);
        assert_eq!(zero[0].degrees(), &[0, 0, 0, 0]);

        let three = enumerate_shell(3, 3).unwrap();
        let mut oracle = brute_force_shell(3, 3);
        oracle.sort();
        assert_eq!(three.len(), 10);
        assert_eq!(three.first().unwrap().degrees(), &[0, 0, 3]);
        assert_eq!(three.last().unwrap().degrees(), &[3, 0, 0]);
        let got: Vec<Vec<u32>> = three.iter().map(|k| k.degrees().to_vec()).collect();
        assert_eq!(got, oracle);
    }

    #[test]
    fn enumerate_shell_respects_cap() {
        assert!(matches!(
            enumerate_shell_capped(10, 5, 100),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn multi_index_order_is_graded_lex() {
        let a = MultiIndex::new(vec![2, 0]).unwrap();
        let b = MultiIndex::new(vec![0, 3]).unwrap();
        let c = MultiIndex::new(vec![1, 2]).unwrap();
        assert!(a < b);
        assert!(b < c);
        assert!(MultiIndex::new(vec![]).is_err());
    }

    #[test]
    fn stirling_examples() {
        let s1 = stirling_bounds(1).unwrap();
        assert!((s1.lower - 0.922_137).abs() < 1e-5);
        assert!((s1.upper - 1.844_274).abs() < 1e-5);
        assert!(s1.lower <= 1.0 && 1.0 <= s1.upper);

        let s5 = stirling_bounds(5).unwrap();
        assert!((s5.lower - 118.019).abs() < 1e-2);
        assert!((s5.upper - 236.039).abs() < 1e-2);

        for k in 1..=20u64 {
            let s = stirling_bounds(k).unwrap();
            let exact = factorial(k).to_f64().unwrap();
            assert!(s.lower <= exact && exact <= s.upper, "k={k}");
        }
        assert!(stirling_bounds(0).is_err());
    }

    #[test]
    fn stirling_switches_to_log_form() {
        let s = stirling_bounds(1000).unwrap();
        assert!(s.in_log);
        let exact = crate::precision::ln_biguint(&factorial(1000));
        assert!(s.ln_lower() <= exact && exact <= s.ln_upper());
    }

    #[test]
    fn ln_factorial_matches_exact() {
        for k in [0u64, 1, 5, 20, 170, 171, 300, 1000] {
            let exact = crate::precision::ln_biguint(&factorial(k).max(BigUint::one()));
            assert!((ln_factorial(k) - exact).abs() < 1e-9 * exact.max(1.0), "k={k}");
        }
    }
}
