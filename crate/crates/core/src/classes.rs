//! Compact function classes described by shell-radius sequences.
//!
//! A class is a set of functions whose order-`j` shells satisfy `‖S_j f‖ ≤ Δ_j`.
//! [`ShellSpec`] captures the sequence together with the norm-equivalence
//! constants of the product construction; the concrete parameterizations are
//! [`AnalyticClassParams`], [`EntireClassParams`] and [`FunctionalClassParams`].

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::bounds::Eps;
use crate::chebyshev::{shell_norm, ChebSeries, Norm, DEFAULT_SUP_GRID};
use crate::combinatorics::{binomial, ln_factorial, shell_dim};
use crate::error::{invalid, Error, Result};
use crate::precision::{guarded_floor, log_sum_exp, Real, Wide};

/// Slack applied to grid-based sup-norm estimates in membership checks.
pub const SUP_SAFETY_FACTOR: f64 = 1.05;

/// Relative slack for exact (coefficient-space) L² comparisons.
pub const L2_TOLERANCE: f64 = 1e-12;

/// The class `A_ρ`: `‖S_n f‖_{L²} ≤ ρ^n` on `[-1, 1]^q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticClassParams {
    pub rho: f64,
    pub q: u32,
}

impl AnalyticClassParams {
    pub fn new(rho: f64, q: u32) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid(format!("rho must lie in (0, 1), got {rho}")));
        }
        if q == 0 {
            return Err(invalid("dimension q must be at least 1"));
        }
        Ok(AnalyticClassParams { rho, q })
    }

    pub fn ln_delta(&self, j: u64) -> f64 {
        j as f64 * self.rho.ln()
    }

    pub fn delta(&self, j: u64) -> f64 {
        self.rho.powi(j as i32)
    }

    pub fn bdim(&self, j: u64) -> BigUint {
        shell_dim(j, self.q).expect("q >= 1")
    }

    pub fn shell_spec(&self) -> ShellSpec {
        let (rho, q) = (self.rho, self.q);
        ShellSpec {
            name: format!("analytic(rho={rho}, q={q})"),
            ln_delta: Arc::new(move |j| j as f64 * rho.ln()),
            bdim: Arc::new(move |j| shell_dim(j, q).expect("q >= 1")),
            p: 2.0,
            r: 2.0,
            ln_a: Arc::new(|_| 0.0),
            ln_b: Arc::new(|_| 0.0),
            tail_exponent: 2.0,
            ratio_certificate: Some(RatioCertificate { from: 0, ratio: rho }),
        }
    }
}

/// `Σ_{j>n} ρ^j = ρ^{n+1}/(1-ρ)`.
pub fn analytic_tail_l1(rho: f64, n: u64) -> f64 {
    rho.powi(n as i32 + 1) / (1.0 - rho)
}

/// `(Σ_{j>n} ρ^{2j})^{1/2} = ρ^{n+1}/√(1-ρ²)`.
pub fn analytic_tail_l2(rho: f64, n: u64) -> f64 {
    rho.powi(n as i32 + 1) / (1.0 - rho * rho).sqrt()
}

/// The class `B_Q(r, τ)`: `‖S_N F‖_{L∞(I_r)} ≤ Λ(N)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntireClassParams {
    #[serde(rename = "Q")]
    pub big_q: u32,
    pub tau: f64,
    pub radii: Vec<f64>,
    /// Constant in front of `Λ`: 1 for the class definition, 2 for the shell bound
    /// satisfied by functions of exponential type.
    pub c0: f64,
}

impl EntireClassParams {
    pub fn new(big_q: u32, tau: f64, radii: Vec<f64>, c0: f64) -> Result<Self> {
        if big_q == 0 {
            return Err(invalid("Q must be at least 1"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid(format!("tau must be positive, got {tau}")));
        }
        if radii.len() != big_q as usize {
            return Err(Error::DimensionMismatch {
                expected: big_q as usize,
                got: radii.len(),
            });
        }
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(invalid(format!("box radius must be positive, got {r}")));
        }
        if c0 != 1.0 && c0 != 2.0 {
            return Err(invalid(format!("constant factor must be 1 or 2, got {c0}")));
        }
        Ok(EntireClassParams {
            big_q,
            tau,
            radii,
            c0,
        })
    }

    /// Unit box and `c0 = 1`.
    pub fn standard(big_q: u32, tau: f64) -> Result<Self> {
        EntireClassParams::new(big_q, tau, vec![1.0; big_q as usize], 1.0)
    }

    /// Whether `τ ∈ [1, Q/(2e^{3/2}π)]`, the range in which the bounds are stated.
    pub fn in_stated_range(&self) -> bool {
        self.tau >= 1.0 && self.tau <= self.big_q as f64 / (2.0 * E.powf(1.5) * PI)
    }

    /// `ln C = (Q/2) ln(2π/Q)`.
    pub fn ln_c(&self) -> f64 {
        let q = self.big_q as f64;
        0.5 * q * (2.0 * PI / q).ln()
    }

    /// `ln Λ(N)`, with `Λ(0) = c0·C`.
    pub fn ln_lambda(&self, n: u64) -> f64 {
        let base = self.c0.ln() + self.ln_c();
        if n == 0 {
            return base;
        }
        let nf = n as f64;
        base + 0.5 * self.big_q as f64 * nf.ln() + nf * self.tau.ln() - ln_factorial(n)
    }

    /// First `N ≥ 1` from which `Λ(N+1)/Λ(N) ≤ 1/2` is guaranteed by
    /// `τ e^{Q/(2N)}/(N+1) ≤ 1/2`.
    pub fn halving_index(&self) -> u64 {
        let q = self.big_q as f64;
        let mut n = 1u64;
        while self.tau * (q / (2.0 * n as f64)).exp() / (n as f64 + 1.0) > 0.5 {
            n += 1;
        }
        n
    }

    pub fn shell_spec(&self) -> ShellSpec {
        let me = self.clone();
        let q = self.big_q;
        let qf = q as f64;
        ShellSpec {
            name: format!("entire(Q={q}, tau={}, c0={})", self.tau, self.c0),
            ln_delta: Arc::new(move |j| me.ln_lambda(j)),
            bdim: Arc::new(move |j| shell_dim(j, q).expect("Q >= 1")),
            p: 1.0,
            r: 1.0,
            ln_a: Arc::new(|_| 0.0),
            // B_{n,1} = n (ln n + 1)^Q
            ln_b: Arc::new(move |n| {
                let nf = (n as f64).max(1.0);
                nf.ln() + qf * (nf.ln() + 1.0).ln()
            }),
            tail_exponent: 1.0,
            ratio_certificate: Some(RatioCertificate {
                from: self.halving_index(),
                ratio: 0.5,
            }),
        }
    }
}

/// Functionals of exponential type on the coefficient sequences of `A_ρ`.
///
/// The Lipschitz constraint of the class is recorded by `lipschitz` but has no
/// constructive membership test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalClassParams {
    pub q: u32,
    pub rho: f64,
    pub lipschitz: f64,
}

impl FunctionalClassParams {
    pub fn new(q: u32, rho: f64) -> Result<Self> {
        AnalyticClassParams::new(rho, q)?;
        Ok(FunctionalClassParams {
            q,
            rho,
            lipschitz: 1.0,
        })
    }

    pub fn analytic(&self) -> AnalyticClassParams {
        AnalyticClassParams {
            rho: self.rho,
            q: self.q,
        }
    }

    /// `γ = 2e ln(1/ε) / (q ln(1/ρ))`.
    pub fn gamma(&self, eps: Eps) -> f64 {
        2.0 * E * (-eps.ln()) / (self.q as f64 * (1.0 / self.rho).ln())
    }
}

/// Any of the supported classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassParams {
    Analytic(AnalyticClassParams),
    Entire(EntireClassParams),
    Functional(FunctionalClassParams),
}

impl ClassParams {
    pub fn dim(&self) -> usize {
        match self {
            ClassParams::Analytic(a) => a.q as usize,
            ClassParams::Entire(e) => e.big_q as usize,
            ClassParams::Functional(f) => f.q as usize,
        }
    }
}

/// Geometric-tail certificate: `Δ_{j+1} ≤ ratio·Δ_j` for all `j ≥ from`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCertificate {
    pub from: u64,
    pub ratio: f64,
}

type SeqFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;
type DimFn = Arc<dyn Fn(u64) -> BigUint + Send + Sync>;

/// Shell radii `Δ_j`, shell dimensions `b_j`, and the norm constants
/// `A_{M,p}`, `B_{N,r}` of the product construction. All sequences are in
/// natural-log form.
#[derive(Clone)]
pub struct ShellSpec {
    pub name: String,
    pub ln_delta: SeqFn,
    pub bdim: DimFn,
    pub p: f64,
    pub r: f64,
    pub ln_a: SeqFn,
    pub ln_b: SeqFn,
    /// Exponent `t` of the tail `(Σ_{n≥m} Δ_n^t)^{1/t}`; 2 for L²-orthogonal shells,
    /// 1 for the triangle-inequality tail.
    pub tail_exponent: f64,
    pub ratio_certificate: Option<RatioCertificate>,
}

impl fmt::Debug for ShellSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShellSpec")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("r", &self.r)
            .field("tail_exponent", &self.tail_exponent)
            .field("ratio_certificate", &self.ratio_certificate)
            .finish()
    }
}

/// Largest shell index scanned when locating a tail index.
pub const MAX_TAIL_SCAN: u64 = 1 << 24;

impl ShellSpec {
    /// Natural log of the tail `(Σ_{n≥m} Δ_n^t)^{1/t}` for every `m ≤ end`,
    /// where `end` is far enough that the certified remainder is negligible
    /// relative to `target_ln`.
    fn tail_table(&self, target_ln: f64) -> Result<Vec<f64>> {
        let cert = self.ratio_certificate.ok_or_else(|| {
            Error::NonSummable(format!("{} has no geometric-tail certificate", self.name))
        })?;
        if !(cert.ratio > 0.0 && cert.ratio < 1.0) {
            return Err(Error::NonSummable(format!(
                "certificate ratio {} is not in (0, 1)",
                cert.ratio
            )));
        }
        let t = self.tail_exponent;
        let ln_rt = t * cert.ratio.ln();
        // ln of Σ_{n>j} Δ_n^t ≤ Δ_j^t r^t / (1 - r^t) for j ≥ from
        let remainder = |j: u64| t * (self.ln_delta)(j) + ln_rt - (-ln_rt.exp()).ln_1p();
        let mut end = cert.from;
        while remainder(end) > t * target_ln - 40.0 {
            end += 1;
            if end > MAX_TAIL_SCAN {
                return Err(Error::NonSummable(format!(
                    "{}: tail does not fall below the target within {MAX_TAIL_SCAN} shells",
                    self.name
                )));
            }
        }
        for j in cert.from..end {
            let step = (self.ln_delta)(j + 1) - (self.ln_delta)(j);
            if step > cert.ratio.ln() + 1e-12 {
                return Err(Error::NonSummable(format!(
                    "{}: ratio certificate violated at shell {j}",
                    self.name
                )));
            }
        }
        let mut table = vec![0.0; end as usize + 1];
        let mut acc = remainder(end);
        for j in (0..=end).rev() {
            acc = log_sum_exp(&[acc, t * (self.ln_delta)(j)]);
            table[j as usize] = acc / t;
        }
        Ok(table)
    }

    /// `N(η) = min{m : (Σ_{n≥m} Δ_n^t)^{1/t} ≤ η}` given `ln η`.
    pub fn tail_index(&self, ln_eta: f64) -> Result<u64> {
        let table = self.tail_table(ln_eta)?;
        Ok(table
            .iter()
            .position(|&v| v <= ln_eta)
            .unwrap_or(table.len()) as u64)
    }
}

/// Shell radius in value and natural-log form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellRadius {
    pub value: f64,
    pub ln: f64,
}

pub fn shell_radius(class: &ClassParams, j: u64) -> ShellRadius {
    let ln = match class {
        ClassParams::Analytic(a) => a.ln_delta(j),
        ClassParams::Entire(e) => e.ln_lambda(j),
        ClassParams::Functional(f) => f.analytic().ln_delta(j),
    };
    let value = match class {
        ClassParams::Analytic(a) => a.delta(j),
        ClassParams::Functional(f) => f.analytic().delta(j),
        ClassParams::Entire(_) => ln.exp(),
    };
    ShellRadius { value, ln }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationKind {
    UpperN1,
    LowerN2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationIndex {
    pub value: i64,
    pub xp_used: bool,
}

fn analytic_n1_arg<R: Real>(ln_eps: R, rho: R) -> R {
    let one = R::from_f64(1.0);
    let two = R::from_f64(2.0);
    let ln_inv_sqrt = -(one.clone() - rho.clone() * rho.clone()).sqrt().ln();
    (two.ln() - ln_eps + ln_inv_sqrt) / (one / rho).ln()
}

fn analytic_n2_arg<R: Real>(ln_eps: R, rho: R) -> R {
    let one = R::from_f64(1.0);
    (-(R::from_f64(2.0).ln() + ln_eps)) / (one / rho).ln()
}

/// `X = ln(4/ε) + (Q/2) ln(2eπτ/Q)`.
pub(crate) fn entire_x<R: Real>(ln_eps: R, q: R, tau: R) -> R {
    let two = R::from_f64(2.0);
    R::from_f64(4.0).ln() - ln_eps
        + q.clone() / two.clone() * (two * R::e() * R::pi() * tau / q).ln()
}

/// `B = ln(C/(4√(2πeτ)ε))`.
pub(crate) fn entire_b<R: Real>(ln_eps: R, q: R, tau: R) -> R {
    let two = R::from_f64(2.0);
    let ln_c = q.clone() / two.clone() * (two.clone() * R::pi() / q).ln();
    ln_c - (R::from_f64(4.0) * (two * R::pi() * R::e() * tau).sqrt()).ln() - ln_eps
}

fn entire_n1_arg<R: Real>(ln_eps: R, q: R, tau: R) -> R {
    let x = entire_x(ln_eps, q.clone(), tau.clone());
    let two = R::from_f64(2.0);
    two.clone() * x.clone() / (x.ln() - (R::e() * tau).ln()) + (q - R::from_f64(1.0)) / two
}

fn entire_n2_arg<R: Real>(ln_eps: R, q: R, tau: R) -> R {
    let b = entire_b(ln_eps, q, tau.clone());
    b.clone() / (b.ln() - (R::e() * tau).ln()) - R::from_f64(0.5)
}

/// `ln` of the ε-threshold below which the analytic upper bound is stated.
pub fn analytic_upper_threshold_ln(c: &AnalyticClassParams) -> f64 {
    let (rho, q) = (c.rho, c.q as f64);
    (2.0f64).ln() - 0.5 * (1.0 - rho * rho).ln()
        + (q + 1.0) * (1.0 / rho).ln() * (4.5 * (rho.powi(-2) - 1.0) * (q + 1.0)).ln()
}

/// `ln` of `(2πeτ/Q)^{Q/2} 4 / ((eτ)^{1/2} exp(e²τ))`.
pub fn entire_upper_threshold_ln(c: &EntireClassParams) -> f64 {
    let (q, tau) = (c.big_q as f64, c.tau);
    0.5 * q * (2.0 * PI * E * tau / q).ln() + 4f64.ln() - 0.5 * (E * tau).ln() - E * E * tau
}

/// `ξ_τ = 16 a ln(a)/e + 2` with `a = max{3e²τ, 128}`.
pub fn xi_tau(tau: f64) -> f64 {
    let a = (3.0 * E * E * tau).max(128.0);
    16.0 * a * a.ln() / E + 2.0
}

/// `ln` of `(2π/Q)^{Q/2} ξ^{-2ξ} / (4√(2πeτ))`.
pub fn entire_lower_threshold_ln(c: &EntireClassParams) -> f64 {
    let (q, tau) = (c.big_q as f64, c.tau);
    let xi = xi_tau(tau);
    0.5 * q * (2.0 * PI / q).ln() - (4.0 * (2.0 * PI * E * tau).sqrt()).ln() - 2.0 * xi * xi.ln()
}

fn floor_index<F, G>(fast: F, wide: G) -> TruncationIndex
where
    F: FnOnce() -> f64,
    G: FnOnce() -> Wide,
{
    let (v, xp) = guarded_floor(fast, wide);
    TruncationIndex {
        value: v as i64,
        xp_used: xp,
    }
}

/// The truncation indices `N₁` (upper bound) and `N₂` (lower bound).
pub fn truncation_index(class: &ClassParams, eps: Eps, kind: TruncationKind) -> Result<TruncationIndex> {
    let le = eps.ln();
    match (class, kind) {
        (ClassParams::Functional(f), k) => truncation_index(&ClassParams::Analytic(f.analytic()), eps, k),
        (ClassParams::Analytic(a), TruncationKind::UpperN1) => {
            let rho = a.rho;
            let idx = floor_index(
                || analytic_n1_arg(le, rho),
                || analytic_n1_arg(Wide::from_f64(le), Wide::from_f64(rho)),
            );
            if idx.value < 0 {
                return Err(Error::ValidityRange {
                    condition: format!(
                        "eps <= 2/sqrt(1-rho^2) = {:.6} so that N1 >= 0",
                        2.0 / (1.0 - rho * rho).sqrt()
                    ),
                });
            }
            Ok(idx)
        }
        (ClassParams::Analytic(a), TruncationKind::LowerN2) => {
            if le >= 0.5f64.ln() {
                return Err(Error::ValidityRange {
                    condition: "eps < 1/2".to_string(),
                });
            }
            let rho = a.rho;
            let idx = floor_index(
                || analytic_n2_arg(le, rho),
                || analytic_n2_arg(Wide::from_f64(le), Wide::from_f64(rho)),
            );
            Ok(TruncationIndex {
                value: idx.value - 1,
                xp_used: idx.xp_used,
            })
        }
        (ClassParams::Entire(e), TruncationKind::UpperN1) => {
            let thr = entire_upper_threshold_ln(e);
            if le > thr {
                return Err(Error::ValidityRange {
                    condition: format!(
                        "eps <= (2 pi e tau/Q)^(Q/2) * 4/((e tau)^(1/2) exp(e^2 tau)) = {:.6e}",
                        thr.exp()
                    ),
                });
            }
            let (q, tau) = (e.big_q as f64, e.tau);
            if entire_x(le, q, tau) <= E * tau {
                return Err(Error::ValidityRange {
                    condition: "ln(4/eps) + (Q/2) ln(2 e pi tau/Q) > e tau".to_string(),
                });
            }
            Ok(floor_index(
                || entire_n1_arg(le, q, tau),
                || entire_n1_arg(Wide::from_f64(le), Wide::from_f64(q), Wide::from_f64(tau)),
            ))
        }
        (ClassParams::Entire(e), TruncationKind::LowerN2) => {
            let thr = entire_lower_threshold_ln(e);
            if le > thr {
                return Err(Error::ValidityRange {
                    condition: format!(
                        "ln eps <= ln((2 pi/Q)^(Q/2) xi^(-2 xi)/(4 sqrt(2 pi e tau))) = {thr:.6}"
                    ),
                });
            }
            let (q, tau) = (e.big_q as f64, e.tau);
            Ok(floor_index(
                || entire_n2_arg(le, q, tau),
                || entire_n2_arg(Wide::from_f64(le), Wide::from_f64(q), Wide::from_f64(tau)),
            ))
        }
    }
}

/// One step of the functional-class schedules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub r: f64,
    pub v: f64,
    pub ell: u64,
}

/// `r_j = ρ^ℓ`, `v_j = 1/(2e^{3/2}πρ^ℓ)` for the `ℓ` with `C(q+ℓ-1, q) < j ≤ C(q+ℓ, q)`.
pub fn schedule_rv(fc: &FunctionalClassParams, j: u64) -> Result<Schedule> {
    if j == 0 {
        return Err(invalid("schedule index j starts at 1"));
    }
    let q = fc.q as u64;
    let target = BigUint::from(j);
    let mut ell = 0u64;
    while binomial(q + ell, q) < target {
        ell += 1;
    }
    let r = fc.rho.powi(ell as i32);
    Ok(Schedule {
        r,
        v: 1.0 / (2.0 * E.powf(1.5) * PI * r),
        ell,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellCheck {
    pub j: u64,
    pub measured: f64,
    pub allowed: f64,
    pub lower_estimate: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub shells: Vec<ShellCheck>,
    pub pass: bool,
    pub first_failure: Option<u64>,
}

/// Shell-by-shell membership test up to the series' maximal order.
///
/// Analytic classes use exact L² shell norms; the entire class uses the
/// grid sup-norm estimate compared against `Λ(j)·SUP_SAFETY_FACTOR`.
pub fn membership_check(s: &ChebSeries, class: &ClassParams, grid: Option<usize>) -> Result<MembershipReport> {
    if s.dim() != class.dim() {
        return Err(Error::DimensionMismatch {
            expected: class.dim(),
            got: s.dim(),
        });
    }
    let max = s.max_order().unwrap_or(0);
    let mut shells = Vec::with_capacity(max as usize + 1);
    for j in 0..=max {
        let allowed = shell_radius(class, j).value;
        let check = match class {
            ClassParams::Entire(_) => {
                let n = shell_norm(
                    s,
                    j,
                    Norm::Sup {
                        grid: grid.unwrap_or(DEFAULT_SUP_GRID),
                    },
                )?;
                ShellCheck {
                    j,
                    measured: n.value,
                    allowed,
                    lower_estimate: true,
                    pass: n.value <= allowed * SUP_SAFETY_FACTOR,
                }
            }
            _ => {
                let n = shell_norm(s, j, Norm::L2)?;
                ShellCheck {
                    j,
                    measured: n.value,
                    allowed,
                    lower_estimate: false,
                    pass: n.value <= allowed * (1.0 + L2_TOLERANCE),
                }
            }
        };
        shells.push(check);
    }
    let first_failure = shells.iter().find(|c| !c.pass).map(|c| c.j);
    Ok(MembershipReport {
        pass: first_failure.is_none(),
        first_failure,
        shells,
    })
}

/// Minimum number of trailing nonzero shell norms used by [`estimate_rho`].
pub const MIN_FIT_POINTS: usize = 5;

/// `exp(slope)` of the least-squares fit of `ln ‖S_n‖` against `n` over the
/// longest trailing run of nonzero norms.
pub fn estimate_rho(shell_norms: &[f64]) -> Result<f64> {
    let last = shell_norms
        .iter()
        .rposition(|&v| v > 0.0)
        .ok_or_else(|| Error::Degenerate("all shell norms are zero".to_string()))?;
    let mut first = last;
    while first > 0 && shell_norms[first - 1] > 0.0 {
        first -= 1;
    }
    let n = last - first + 1;
    if n < MIN_FIT_POINTS {
        return Err(Error::Degenerate(format!(
            "need at least {MIN_FIT_POINTS} trailing nonzero shell norms, got {n}"
        )));
    }
    let xs: Vec<f64> = (first..=last).map(|i| i as f64).collect();
    let ys: Vec<f64> = shell_norms[first..=last].iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok((sxy / sxx).exp())
}

/// Scale a series so that every shell satisfies `‖S_j‖ ≤ ρ^j · (1 - 1e-12)`.
/// Returns the scaled series and the factor applied.
pub fn rescale_into_analytic(s: &ChebSeries, class: &AnalyticClassParams) -> Result<(ChebSeries, f64)> {
    if s.dim() != class.q as usize {
        return Err(Error::DimensionMismatch {
            expected: class.q as usize,
            got: s.dim(),
        });
    }
    let max = s.max_order().unwrap_or(0);
    let mut factor = f64::INFINITY;
    for j in 0..=max {
        let n = shell_norm(s, j, Norm::L2)?.value;
        if n > 0.0 {
            factor = factor.min(class.delta(j) / n);
        }
    }
    if !factor.is_finite() {
        return Err(Error::Degenerate("series is identically zero".to_string()));
    }
    let factor = factor * (1.0 - 1e-12);
    Ok((s.scaled(factor), factor))
}

/// `b_j` as `f64` (may be infinite for huge shells).
pub fn bdim_f64(spec: &ShellSpec, j: u64) -> f64 {
    (spec.bdim)(j).to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::IntervalBox;

    fn analytic(rho: f64, q: u32) -> ClassParams {
        ClassParams::Analytic(AnalyticClassParams::new(rho, q).unwrap())
    }

    #[test]
    fn shell_radius_examples() {
        assert_eq!(shell_radius(&analytic(0.5, 1), 3).value, 0.125);
        let e = ClassParams::Entire(EntireClassParams::standard(2, 1.0).unwrap());
        assert!((shell_radius(&e, 3).value - PI / 2.0).abs() < 1e-12);
        let e2 = EntireClassParams::standard(2, 1.7).unwrap();
        assert!((shell_radius(&ClassParams::Entire(e2.clone()), 1).value - PI * 1.7).abs() < 1e-12);
        assert!((shell_radius(&ClassParams::Entire(e2), 0).value - PI).abs() < 1e-12);
    }

    #[test]
    fn class_parameter_validation() {
        assert!(AnalyticClassParams::new(1.0, 1).is_err());
        assert!(AnalyticClassParams::new(0.5, 0).is_err());
        assert!(EntireClassParams::new(2, 1.0, vec![1.0], 1.0).is_err());
        assert!(EntireClassParams::new(2, 1.0, vec![1.0, 1.0], 3.0).is_err());
        assert!(EntireClassParams::new(2, -1.0, vec![1.0, 1.0], 1.0).is_err());
        assert!(!EntireClassParams::standard(2, 1.0).unwrap().in_stated_range());
        assert!(EntireClassParams::standard(30, 1.0).unwrap().in_stated_range());
        assert!(!EntireClassParams::standard(28, 1.0).unwrap().in_stated_range());
    }

    #[test]
    fn truncation_index_examples() {
        let a = analytic(0.5, 1);
        let n1 = truncation_index(&a, Eps::new(0.01).unwrap(), TruncationKind::UpperN1).unwrap();
        assert_eq!(n1.value, 7);
        let n2 = truncation_index(&a, Eps::new(0.01).unwrap(), TruncationKind::LowerN2).unwrap();
        assert_eq!(n2.value, 4);
        assert!(truncation_index(&a, Eps::new(0.6).unwrap(), TruncationKind::LowerN2).is_err());
        assert!(truncation_index(&a, Eps::new(10.0).unwrap(), TruncationKind::UpperN1).is_err());

        let e = ClassParams::Entire(EntireClassParams::standard(30, 1.0).unwrap());
        let n1 = truncation_index(&e, Eps::new(1e-9).unwrap(), TruncationKind::UpperN1).unwrap();
        assert_eq!(n1.value, 31);
        assert!(matches!(
            truncation_index(&e, Eps::new(0.01).unwrap(), TruncationKind::UpperN1),
            Err(Error::ValidityRange { .. })
        ));
        assert!(matches!(
            truncation_index(&e, Eps::new(1e-9).unwrap(), TruncationKind::LowerN2),
            Err(Error::ValidityRange { .. })
        ));
        let tiny = Eps::from_ln(-70_000.0).unwrap();
        let n2 = truncation_index(&e, tiny, TruncationKind::LowerN2).unwrap();
        assert!(n2.value > 0);
    }

    #[test]
    fn guarded_floor_engages_near_integers() {
        // ε with N₁'s argument exactly 3: (ln(2/ε) + ln(1/√(1-ρ²)))/ln 2 = 3
        let rho: f64 = 0.5;
        let ln_eps = 2f64.ln() - 0.5 * (1.0 - rho * rho).ln() - 3.0 * 2f64.ln();
        let idx = truncation_index(&analytic(rho, 1), Eps::from_ln(ln_eps).unwrap(), TruncationKind::UpperN1).unwrap();
        assert!(idx.xp_used);
        assert!(idx.value == 2 || idx.value == 3);
    }

    #[test]
    fn n1_tail_property() {
        for &rho in &[0.3, 0.5, 0.8] {
            for &eps in &[0.5, 0.1, 1e-3, 1e-6] {
                let n1 = truncation_index(&analytic(rho, 1), Eps::new(eps).unwrap(), TruncationKind::UpperN1)
                    .unwrap()
                    .value as i32;
                let tail: f64 = (n1 + 1..n1 + 2000).map(|n| rho.powi(2 * n)).sum();
                assert!(tail <= eps * eps / 4.0 * (1.0 + 1e-12), "rho={rho} eps={eps}");
            }
        }
    }

    #[test]
    fn analytic_shell_spec_consistency() {
        let c = AnalyticClassParams::new(0.5, 3).unwrap();
        let spec = c.shell_spec();
        for j in 0..40 {
            let lhs = (spec.ln_delta)(j) + (spec.ln_delta)(1);
            assert!((lhs - (spec.ln_delta)(j + 1)).abs() < 1e-12);
        }
        for n in [0u64, 3, 10] {
            let l1: f64 = (n + 1..n + 3000).map(|j| 0.5f64.powi(j as i32)).sum();
            assert!((analytic_tail_l1(0.5, n) - l1).abs() < 1e-12);
            let l2: f64 = (n + 1..n + 3000).map(|j| 0.25f64.powi(j as i32)).sum::<f64>().sqrt();
            assert!((analytic_tail_l2(0.5, n) - l2).abs() < 1e-12);
        }
        // N(η) with the L² tail: the least m with ρ^m/√(1-ρ²) ≤ η
        let eta: f64 = 0.005;
        let m = spec.tail_index(eta.ln()).unwrap();
        assert!(analytic_tail_l2(0.5, m - 1) <= eta);
        assert!(analytic_tail_l2(0.5, m - 2) > eta);
    }

    #[test]
    fn entire_ratio_decay() {
        for (q, tau) in [(30u32, 1.0), (40, 1.2)] {
            let e = EntireClassParams::standard(q, tau).unwrap();
            let start = (q as f64 / (q as f64 / (2.0 * tau)).ln()).ceil() as u64;
            for n in start..=60 {
                let ratio = (e.ln_lambda(n + 1) - e.ln_lambda(n)).exp();
                assert!(ratio <= 0.5, "Q={q} N={n} ratio={ratio}");
            }
            assert!(e.halving_index() <= 60);
            let spec = e.shell_spec();
            assert!(spec.tail_index((1e-9f64).ln()).is_ok());
        }
    }

    #[test]
    fn schedule_examples_and_partition() {
        let fc = FunctionalClassParams::new(2, 0.5).unwrap();
        let s1 = schedule_rv(&fc, 1).unwrap();
        assert_eq!((s1.ell, s1.r), (0, 1.0));
        let s3 = schedule_rv(&fc, 3).unwrap();
        assert_eq!((s3.ell, s3.r), (1, 0.5));
        let s5 = schedule_rv(&fc, 5).unwrap();
        assert_eq!((s5.ell, s5.r), (2, 0.25));
        assert!((s1.v - 1.0 / (2.0 * E.powf(1.5) * PI)).abs() < 1e-15);
        assert!(schedule_rv(&fc, 0).is_err());

        for q in 1..=4u32 {
            let fc = FunctionalClassParams::new(q, 0.5).unwrap();
            let mut counts = std::collections::BTreeMap::new();
            for j in 1..=500u64 {
                let ell = schedule_rv(&fc, j).unwrap().ell;
                let lo = binomial(q as u64 + ell - 1, q as u64);
                let hi = binomial(q as u64 + ell, q as u64);
                let bj = BigUint::from(j);
                assert!(lo < bj && bj <= hi);
                *counts.entry(ell).or_insert(0u64) += 1;
            }
            // every complete level ℓ has exactly shell_dim(ℓ, q) members
            let last = *counts.keys().next_back().unwrap();
            for (&ell, &n) in &counts {
                if ell < last {
                    assert_eq!(BigUint::from(n), shell_dim(ell, q).unwrap());
                }
            }
        }
    }

    #[test]
    fn membership_examples() {
        let u1 = IntervalBox::unit(1);
        let a = analytic(0.5, 1);
        let zero = membership_check(&ChebSeries::zero(u1.clone()), &a, None).unwrap();
        assert!(zero.pass && zero.shells.iter().all(|c| c.measured == 0.0));

        let s = ChebSeries::from_pairs(u1.clone(), vec![(vec![1], 0.6)]).unwrap();
        let r = membership_check(&s, &a, None).unwrap();
        assert!(!r.pass);
        assert_eq!(r.first_failure, Some(1));

        let boundary = ChebSeries::from_pairs(u1.clone(), (0..10).map(|k| (vec![k], 0.5f64.powi(k as i32)))).unwrap();
        assert!(membership_check(&boundary, &a, None).unwrap().pass);

        assert!(membership_check(&boundary, &analytic(0.5, 2), None).is_err());
    }

    #[test]
    fn estimate_rho_examples() {
        let g: Vec<f64> = (1..=10).map(|n| 0.5f64.powi(n)).collect();
        assert!((estimate_rho(&g).unwrap() - 0.5).abs() < 1e-9);
        let c: Vec<f64> = (0..12).map(|n| 7.0 * 0.3f64.powi(n)).collect();
        assert!((estimate_rho(&c).unwrap() - 0.3).abs() < 1e-9);
        assert!(estimate_rho(&[1.0, 0.5, 0.0, 0.1, 0.05]).is_err());
        assert!(estimate_rho(&[0.0; 8]).is_err());
    }

    #[test]
    fn rescaling_produces_members() {
        let u2 = IntervalBox::unit(2);
        let s = ChebSeries::from_pairs(u2, vec![(vec![0, 0], 3.0), (vec![1, 0], 2.0), (vec![1, 1], -1.0)]).unwrap();
        let c = AnalyticClassParams::new(0.3, 2).unwrap();
        let (m, f) = rescale_into_analytic(&s, &c).unwrap();
        assert!(f > 0.0);
        assert!(membership_check(&m, &ClassParams::Analytic(c), None).unwrap().pass);
    }

    #[test]
    fn class_params_json_is_tagged() {
        let c = ClassParams::Entire(EntireClassParams::standard(2, 1.0).unwrap());
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["kind"], "entire");
        assert_eq!(v["Q"], 2);
        let back: ClassParams = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
