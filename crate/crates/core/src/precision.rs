//! Log-domain arithmetic.
//!
//! The bound evaluators are written once, generically over [`Real`], and run
//! either on `f64` or on [`Wide`], a 256-bit software float. The `f64` path is
//! the default; callers switch to [`Wide`] when an intermediate natural-log
//! magnitude exceeds [`XP_THRESHOLD`] or when a floor lands too close to an
//! integer to trust double rounding.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// Natural-log magnitude beyond which values no longer fit an `f64`.
pub const XP_THRESHOLD: f64 = 700.0;

/// Binary precision of [`Wide`] in bits.
pub const WIDE_PRECISION: usize = 256;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

/// Scalar field used by the generic bound formulas.
pub trait Real:
    Clone
    + PartialOrd
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn from_biguint(n: &BigUint) -> Self;
    fn to_f64(&self) -> f64;
    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn floor(&self) -> Self;
    fn pi() -> Self;

    fn e() -> Self {
        Self::from_f64(1.0).exp()
    }

    fn powf(&self, e: &Self) -> Self {
        (self.ln() * e.clone()).exp()
    }

    fn is_finite(&self) -> bool {
        self.to_f64().is_finite()
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_biguint(n: &BigUint) -> Self {
        n.to_f64().unwrap_or(f64::INFINITY)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn e() -> Self {
        std::f64::consts::E
    }
    fn powf(&self, e: &Self) -> Self {
        f64::powf(*self, *e)
    }
}

/// 256-bit binary float backed by `astro-float`.
#[derive(Clone)]
pub struct Wide(BigFloat);

impl Wide {
    pub fn parse(s: &str) -> Self {
        CONSTS.with(|cc| {
            Wide(BigFloat::parse(
                s,
                Radix::Dec,
                WIDE_PRECISION,
                RM,
                &mut cc.borrow_mut(),
            ))
        })
    }

    /// Decimal rendering with the full working precision.
    pub fn to_decimal(&self) -> String {
        CONSTS.with(|cc| {
            self.0
                .format(Radix::Dec, RM, &mut cc.borrow_mut())
                .unwrap_or_else(|_| "NaN".to_string())
        })
    }
}

impl fmt::Debug for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Wide({})", self.to_decimal())
    }
}

impl PartialEq for Wide {
    fn eq(&self, other: &Self) -> bool {
        self.0.partial_cmp(&other.0) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Wide {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl Add for Wide {
    type Output = Wide;
    fn add(self, rhs: Wide) -> Wide {
        Wide(self.0.add(&rhs.0, WIDE_PRECISION, RM))
    }
}

impl Sub for Wide {
    type Output = Wide;
    fn sub(self, rhs: Wide) -> Wide {
        Wide(self.0.sub(&rhs.0, WIDE_PRECISION, RM))
    }
}

impl Mul for Wide {
    type Output = Wide;
    fn mul(self, rhs: Wide) -> Wide {
        Wide(self.0.mul(&rhs.0, WIDE_PRECISION, RM))
    }
}

impl Div for Wide {
    type Output = Wide;
    fn div(self, rhs: Wide) -> Wide {
        Wide(self.0.div(&rhs.0, WIDE_PRECISION, RM))
    }
}

impl Neg for Wide {
    type Output = Wide;
    fn neg(self) -> Wide {
        Wide(self.0.neg())
    }
}

impl Real for Wide {
    fn from_f64(x: f64) -> Self {
        Wide(BigFloat::from_f64(x, WIDE_PRECISION))
    }
    fn from_biguint(n: &BigUint) -> Self {
        Wide::parse(&n.to_str_radix(10))
    }
    fn to_f64(&self) -> f64 {
        self.to_decimal().parse::<f64>().unwrap_or(f64::NAN)
    }
    fn ln(&self) -> Self {
        CONSTS.with(|cc| Wide(self.0.ln(WIDE_PRECISION, RM, &mut cc.borrow_mut())))
    }
    fn exp(&self) -> Self {
        CONSTS.with(|cc| Wide(self.0.exp(WIDE_PRECISION, RM, &mut cc.borrow_mut())))
    }
    fn sqrt(&self) -> Self {
        Wide(self.0.sqrt(WIDE_PRECISION, RM))
    }
    fn floor(&self) -> Self {
        Wide(self.0.floor())
    }
    fn pi() -> Self {
        CONSTS.with(|cc| Wide(cc.borrow_mut().pi(WIDE_PRECISION, RM)))
    }
    fn powf(&self, e: &Self) -> Self {
        CONSTS.with(|cc| Wide(self.0.pow(&e.0, WIDE_PRECISION, RM, &mut cc.borrow_mut())))
    }
    fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }
}

/// Natural log of an exact non-negative integer without converting it to `f64`.
pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        if let Some(v) = n.to_f64() {
            if v.is_finite() {
                return v.ln();
            }
        }
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln(Σ exp(x_i))`, stable for arbitrarily large or small terms.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Distance from `x` to the nearest integer.
pub(crate) fn integer_gap(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Floors closer than this to an integer are recomputed in [`Wide`].
pub(crate) const FLOOR_GUARD: f64 = 1e-9;

/// Evaluate a floor both ways: in `f64`, and in [`Wide`] when the `f64`
/// argument sits within [`FLOOR_GUARD`] of an integer. Returns the floor and
/// whether the wide path was taken.
pub(crate) fn guarded_floor<F, G>(fast: F, wide: G) -> (f64, bool)
where
    F: FnOnce() -> f64,
    G: FnOnce() -> Wide,
{
    let x = fast();
    if x.is_finite() && integer_gap(x) > FLOOR_GUARD * x.abs().max(1.0) {
        (x.floor(), false)
    } else {
        (wide().floor().to_f64(), true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_matches_f64_on_elementary_functions() {
        let x = Wide::from_f64(2.5);
        assert!((x.ln().to_f64() - 2.5f64.ln()).abs() < 1e-15);
        assert!((x.exp().to_f64() - 2.5f64.exp()).abs() < 1e-12);
        assert!((Wide::pi().to_f64() - std::f64::consts::PI).abs() < 1e-16);
        assert!((Wide::e().to_f64() - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(Wide::from_f64(-2.5).floor().to_f64(), -3.0);
        assert_eq!(Wide::from_f64(7.0).floor().to_f64(), 7.0);
    }

    #[test]
    fn wide_holds_values_beyond_f64_range() {
        let big = Wide::from_f64(1e300) * Wide::from_f64(1e300);
        assert!(!big.to_f64().is_finite());
        assert!((big.ln().to_f64() - 600.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn ln_biguint_agrees_for_small_and_huge() {
        let n = BigUint::from(120u32);
        assert!((ln_biguint(&n) - 120f64.ln()).abs() < 1e-15);
        let huge = BigUint::from(3u32).pow(2000);
        assert!((ln_biguint(&huge) - 2000.0 * 3f64.ln()).abs() < 1e-9);
        assert_eq!(ln_biguint(&BigUint::from(0u32)), f64::NEG_INFINITY);
    }

    #[test]
    fn log_sum_exp_handles_overflowing_terms() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_sum_exp(&[0.0, 0.0_f64.ln()]) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn guarded_floor_switches_to_wide_near_integers() {
        let (v, xp) = guarded_floor(|| 7.85, || Wide::from_f64(7.85));
        assert_eq!((v, xp), (7.0, false));
        let (v, xp) = guarded_floor(
            || 3.0 - 1e-13,
            || Wide::from_f64(3.0) - Wide::parse("1e-40"),
        );
        assert_eq!((v, xp), (2.0, true));
    }
}
