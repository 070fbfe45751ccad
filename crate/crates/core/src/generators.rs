//! Seeded test-function generators.
//!
//! * Pole sums: rational functions whose poles sit on the boundary of a
//!   Bernstein poly-ellipse, hence analytic inside it with geometric
//!   coefficient decay.
//! * Band-limited sums of complex exponentials, entire of exponential type.
//!
//! Both are real on real arguments by conjugate pairing.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seed::rng_from_seed;

pub const POLE_SUM_VERSION: &str = "pole-sum/1";
pub const BANDLIMITED_VERSION: &str = "bandlimited/1";

/// Largest admissible ρ for pole-sum generation.
pub const MAX_RHO: f64 = 0.95;

/// Amplitude cap for pole-sum terms.
pub const AMPLITUDE_CAP: f64 = 1.0;

/// Default node budget for density normalization.
pub const DEFAULT_DENSITY_CAP: usize = 1 << 20;

/// Uniform draw from `(-π, π]`.
fn uniform_angle(rng: &mut ChaCha20Rng) -> f64 {
    PI - 2.0 * PI * rng.gen::<f64>()
}

/// Uniform draw from the complex disc of the given radius, by rejection from the square.
fn uniform_disc(rng: &mut ChaCha20Rng, radius: f64) -> Complex64 {
    loop {
        let re = rng.gen_range(-1.0..1.0);
        let im = rng.gen_range(-1.0..1.0);
        if re * re + im * im <= 1.0 {
            return Complex64::new(re * radius, im * radius);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleTerm {
    pub theta: Vec<f64>,
    pub a: Complex64,
}

/// A pole sum `Σ a_j ∏_m (w_{j,m} - z_m)^{-1}` plus its conjugate mirror.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleSumSpec {
    pub generator: String,
    pub dim: usize,
    pub rho: f64,
    pub seed: Option<u64>,
    pub terms: Vec<PoleTerm>,
}

impl PoleSumSpec {
    pub fn new(dim: usize, rho: f64, terms: Vec<PoleTerm>) -> Result<Self> {
        let spec = PoleSumSpec {
            generator: POLE_SUM_VERSION.to_string(),
            dim,
            rho,
            seed: None,
            terms,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(self.rho > 0.0 && self.rho <= MAX_RHO) {
            return Err(invalid(format!("rho must lie in (0, {MAX_RHO}], got {}", self.rho)));
        }
        if self.terms.is_empty() {
            return Err(invalid("pole sum needs at least one term"));
        }
        for t in &self.terms {
            if t.theta.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: t.theta.len(),
                });
            }
            if !(t.a.norm() <= AMPLITUDE_CAP) {
                return Err(invalid(format!("amplitude {} exceeds cap {AMPLITUDE_CAP}", t.a)));
            }
        }
        Ok(())
    }

    /// Pole `x(θ) + i·y(θ)` on the ellipse with semi-axes `(ρ ± 1/ρ)/2`.
    pub fn pole(&self, theta: f64) -> Complex64 {
        let inv = 1.0 / self.rho;
        Complex64::new(
            0.5 * (self.rho + inv) * theta.cos(),
            0.5 * (self.rho - inv) * theta.sin(),
        )
    }

    pub fn poles(&self, term: usize) -> Vec<Complex64> {
        self.terms[term].theta.iter().map(|&t| self.pole(t)).collect()
    }

    pub fn eval_complex(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut direct = t.a;
            let mut mirror = t.a.conj();
            for (&theta, &zm) in t.theta.iter().zip(z) {
                let w = self.pole(theta);
                direct /= w - zm;
                mirror /= w.conj() - zm;
            }
            acc += direct + mirror;
        }
        Ok(acc)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.eval_complex(&z)?.re)
    }
}

/// Draw a pole sum with `m` terms on the ρ-ellipse boundary.
pub fn gen_analytic(d: usize, rho: f64, m: usize, seed: u64) -> Result<PoleSumSpec> {
    if m == 0 {
        return Err(invalid("term count must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let terms = (0..m)
        .map(|_| {
            let theta = (0..d).map(|_| uniform_angle(&mut rng)).collect();
            let a = uniform_disc(&mut rng, AMPLITUDE_CAP);
            PoleTerm { theta, a }
        })
        .collect();
    let mut spec = PoleSumSpec::new(d, rho, terms)?;
    spec.seed = Some(seed);
    Ok(spec)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Tensor Gauss–Legendre integral of `f` over `[-1, 1]^d`.
pub fn integrate_unit_box<F>(f: F, d: usize, m: usize, cap: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let total = (m as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(Error::CapExceeded {
            what: format!("Gauss-Legendre grid {m}^{d}"),
            requested: total.to_string(),
            limit: cap.to_string(),
        });
    }
    let (x, w) = gauss_legendre(m);
    let mut acc = 0.0;
    let mut point = vec![0.0; d];
    for flat in 0..total as usize {
        let mut rem = flat;
        let mut weight = 1.0;
        for axis in (0..d).rev() {
            let i = rem % m;
            rem /= m;
            point[axis] = x[i];
            weight *= w[i];
        }
        acc += weight * f(&point)?;
    }
    Ok(acc)
}

type RealFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// The density `g = f²/Z` on `[-1, 1]^d` with Lebesgue normalization.
#[derive(Clone)]
pub struct Density {
    dim: usize,
    z: f64,
    f: Arc<RealFn>,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("dim", &self.dim)
            .field("z", &self.z)
            .finish()
    }
}

/// Smallest admissible normalizer for a density.
pub const MIN_NORMALIZER: f64 = 1e-12;

impl Density {
    /// Normalize `f²` for an arbitrary evaluator.
    pub fn from_evaluator<F>(f: F, dim: usize, m: usize) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        let z = integrate_unit_box(|x| Ok(f(x)?.powi(2)), dim, m, DEFAULT_DENSITY_CAP)?;
        if !(z >= MIN_NORMALIZER) {
            return Err(Error::Degenerate(format!(
                "normalizer {z:e} is below {MIN_NORMALIZER:e}"
            )));
        }
        Ok(Density {
            dim,
            z,
            f: Arc::new(f),
        })
    }

    pub fn normalizer(&self) -> f64 {
        self.z
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((self.f)(x)?.powi(2) / self.z)
    }
}

pub fn gen_density(spec: &PoleSumSpec, m: usize) -> Result<Density> {
    let s = spec.clone();
    Density::from_evaluator(move |x| s.eval(x), spec.dim, m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandTerm {
    pub w: Vec<Complex64>,
    pub a: Complex64,
}

/// `F(z) = Σ a_j exp(i z·w_j) + Σ ā_j exp(-i z·w̄_j)` with type `vmax` per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandlimitedSpec {
    pub generator: String,
    pub dim: usize,
    pub vmax: f64,
    pub seed: Option<u64>,
    pub terms: Vec<BandTerm>,
}

impl BandlimitedSpec {
    pub fn new(dim: usize, vmax: f64, terms: Vec<BandTerm>) -> Result<Self> {
        let spec = BandlimitedSpec {
            generator: BANDLIMITED_VERSION.to_string(),
            dim,
            vmax,
            seed: None,
            terms,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the premises of the type bound `|F(z)| ≤ exp(vmax·|z|₁)`:
    /// `Σ 2|a_j| ≤ 1` and `|w_{j,m}| ≤ vmax`.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(self.vmax.is_finite() && self.vmax > 0.0) {
            return Err(invalid(format!("vmax must be positive, got {}", self.vmax)));
        }
        if self.terms.is_empty() {
            return Err(invalid("band-limited sum needs at least one term"));
        }
        let mut mass = 0.0;
        for t in &self.terms {
            if t.w.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: t.w.len(),
                });
            }
            if let Some(w) = t.w.iter().find(|w| !(w.norm() <= self.vmax * (1.0 + 1e-12))) {
                return Err(invalid(format!("frequency {w} exceeds vmax {}", self.vmax)));
            }
            mass += 2.0 * t.a.norm();
        }
        if mass > 1.0 + 1e-12 {
            return Err(invalid(format!("total amplitude 2·Σ|a_j| = {mass} exceeds 1")));
        }
        Ok(())
    }

    pub fn eval_complex(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        let i = Complex64::new(0.0, 1.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let dot: Complex64 = t.w.iter().zip(z).map(|(w, zm)| w * zm).sum();
            let dot_conj: Complex64 = t.w.iter().zip(z).map(|(w, zm)| w.conj() * zm).sum();
            acc += t.a * (i * dot).exp() + t.a.conj() * (-i * dot_conj).exp();
        }
        Ok(acc)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.eval_complex(&z)?.re)
    }
}

/// Draw `m` terms with `|w_{j,m}| ≤ vmax/(2m)` and `|a_j| ≤ 1/(2m)`.
pub fn gen_bandlimited(q: usize, vmax: f64, m: usize, seed: u64) -> Result<BandlimitedSpec> {
    if m == 0 {
        return Err(invalid("term count must be at least 1"));
    }
    if !(vmax.is_finite() && vmax > 0.0) {
        return Err(invalid(format!("vmax must be positive, got {vmax}")));
    }
    let mut rng = rng_from_seed(seed);
    let w_radius = vmax / (2.0 * m as f64);
    let a_radius = 1.0 / (2.0 * m as f64);
    let terms = (0..m)
        .map(|_| {
            let w = (0..q).map(|_| uniform_disc(&mut rng, w_radius)).collect();
            let a = uniform_disc(&mut rng, a_radius);
            BandTerm { w, a }
        })
        .collect();
    let mut spec = BandlimitedSpec::new(q, vmax, terms)?;
    spec.seed = Some(seed);
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn single_pole() -> PoleSumSpec {
        PoleSumSpec::new(
            1,
            0.5,
            vec![PoleTerm {
                theta: vec![FRAC_PI_2],
                a: Complex64::new(1.0, 0.0),
            }],
        )
        .unwrap()
    }

    #[test]
    fn single_pole_closed_form() {
        let s = single_pole();
        let w = s.pole(FRAC_PI_2);
        assert!(w.re.abs() < 1e-15 && (w.im + 0.75).abs() < 1e-15);
        for &x in &[-0.9, -0.3, 0.0, 0.2, 0.77] {
            let expect = -2.0 * x / (x * x + 0.5625);
            assert!((s.eval(&[x]).unwrap() - expect).abs() < 1e-12);
        }
        assert!(s.eval(&[0.0]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn generated_specs_are_real_on_reals_and_deterministic() {
        let mut rng = rng_from_seed(77);
        for d in 1..=3 {
            let s = gen_analytic(d, 0.5, 4, 13).unwrap();
            assert_eq!(s, gen_analytic(d, 0.5, 4, 13).unwrap());
            assert_ne!(s, gen_analytic(d, 0.5, 4, 14).unwrap());
            let b = gen_bandlimited(d, 3.0, 4, 13).unwrap();
            assert_eq!(b, gen_bandlimited(d, 3.0, 4, 13).unwrap());
            for _ in 0..100 {
                let z: Vec<Complex64> = (0..d).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
                assert!(s.eval_complex(&z).unwrap().im.abs() < 1e-12);
                assert!(b.eval_complex(&z).unwrap().im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pole_sum_validation() {
        assert!(gen_analytic(1, 0.96, 1, 0).is_err());
        assert!(gen_analytic(1, 0.0, 1, 0).is_err());
        assert!(gen_analytic(1, 0.5, 0, 0).is_err());
        assert!(gen_analytic(0, 0.5, 1, 0).is_err());
        let big = PoleTerm {
            theta: vec![0.0],
            a: Complex64::new(1.0, 1.0),
        };
        assert!(PoleSumSpec::new(1, 0.5, vec![big]).is_err());
        let s = gen_analytic(2, 0.3, 5, 1).unwrap();
        for t in &s.terms {
            assert!(t.a.norm() <= 1.0);
            assert!(t.theta.iter().all(|&th| th > -PI && th <= PI));
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_low_degree() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let expect = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg + 1) as f64 };
                assert!((got - expect).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn density_examples() {
        for d in 1..=3 {
            let g = Density::from_evaluator(|_| Ok(3.0), d, 4).unwrap();
            let x = vec![0.1; d];
            assert!((g.eval(&x).unwrap() - 0.5f64.powi(d as i32)).abs() < 1e-14);
        }

        let g = gen_density(&single_pole(), 200).unwrap();
        let exact_z = integrate_unit_box(|x| Ok(single_pole().eval(x)?.powi(2)), 1, 400, 1 << 20).unwrap();
        assert!((g.normalizer() - exact_z).abs() < 1e-10 * exact_z);
        let mass = integrate_unit_box(|x| g.eval(x), 1, 400, 1 << 20).unwrap();
        assert!((mass - 1.0).abs() < 1e-6);
        for i in 0..1000 {
            let x = -1.0 + 2.0 * i as f64 / 999.0;
            assert!(g.eval(&[x]).unwrap() >= 0.0);
        }

        assert!(matches!(
            Density::from_evaluator(|_| Ok(0.0), 1, 8),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn bandlimited_examples() {
        let b = BandlimitedSpec::new(
            1,
            2.0,
            vec![BandTerm {
                w: vec![Complex64::new(2.0, 0.0)],
                a: Complex64::new(0.5, 0.0),
            }],
        )
        .unwrap();
        for &x in &[-1.3, 0.0, 0.4, 2.5] {
            assert!((b.eval(&[x]).unwrap() - (2.0 * x).cos()).abs() < 1e-14);
        }
        assert_eq!(b.eval(&[0.0]).unwrap(), 1.0);

        let mut rng = rng_from_seed(4);
        for q in 1..=3 {
            let s = gen_bandlimited(q, 2.5, 6, 99).unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..q).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let l1: f64 = x.iter().map(|v: &f64| v.abs()).sum();
                assert!(s.eval(&x).unwrap().abs() <= (2.5 * l1).exp());
            }
        }
        assert!(gen_bandlimited(1, 0.0, 1, 0).is_err());
        assert!(BandlimitedSpec::new(
            1,
            1.0,
            vec![BandTerm {
                w: vec![Complex64::new(2.0, 0.0)],
                a: Complex64::new(0.5, 0.0)
            }]
        )
        .is_err());
    }

    #[test]
    fn spec_json_carries_version_and_seed() {
        let s = gen_analytic(2, 0.5, 2, 42).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["generator"], POLE_SUM_VERSION);
        assert_eq!(v["seed"], 42);
        let back: PoleSumSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
        let b = gen_bandlimited(2, 1.0, 2, 42).unwrap();
        let back: BandlimitedSpec = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(back, b);
    }
}
