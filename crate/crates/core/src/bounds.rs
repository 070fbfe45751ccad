//! Closed-form metric-entropy bounds in the natural-log domain.
//!
//! Two scales are in use. [`Scale::Entropy`] estimates carry `H_ε` itself
//! (already a logarithm of a count, possibly negative for vacuous lower
//! bounds); [`Scale::LogEntropy`] estimates carry `ln H_ε`, which is the only
//! representable form for the functional-class bound. Every evaluator flags
//! violated validity conditions instead of failing, except where a bound has
//! no meaning at all.

use std::collections::BTreeMap;
use std::f64::consts::{E, LN_2, PI};
use std::fmt;
use std::io;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::classes::{
    analytic_upper_threshold_ln, entire_b, entire_lower_threshold_ln, entire_upper_threshold_ln, entire_x,
    truncation_index, AnalyticClassParams, ClassParams, EntireClassParams, FunctionalClassParams, ShellSpec,
    TruncationKind,
};
use crate::combinatorics::ln_factorial;
use crate::error::{invalid, Error, Result};
use crate::precision::{ln_biguint, log_sum_exp, Real, Wide, XP_THRESHOLD};

/// Accuracy parameter stored by its natural logarithm, so that values far
/// below the `f64` range (`ε = e^{-70000}`) stay representable.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Eps {
    ln: f64,
    value: f64,
}

impl Eps {
    pub fn new(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(invalid(format!("eps must be positive and finite, got {value}")));
        }
        Ok(Eps { ln: value.ln(), value })
    }

    pub fn from_ln(ln: f64) -> Result<Self> {
        if !ln.is_finite() {
            return Err(invalid(format!("ln eps must be finite, got {ln}")));
        }
        Ok(Eps { ln, value: ln.exp() })
    }

    pub fn ln(self) -> f64 {
        self.ln
    }

    /// `ε` as `f64`; zero when it underflows.
    pub fn value(self) -> f64 {
        self.value
    }

    pub fn halved(self) -> Eps {
        Eps {
            ln: self.ln - LN_2,
            value: self.value / 2.0,
        }
    }
}

impl fmt::Display for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.value();
        if v > 0.0 {
            write!(f, "{v:.5e}")
        } else {
            write!(f, "exp({})", self.ln)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// `lower_ln`/`upper_ln` hold `H_ε = ln N(ε)`.
    Entropy,
    /// `lower_ln`/`upper_ln` hold `ln H_ε`.
    LogEntropy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub eps: f64,
    pub eps_ln: f64,
    pub scale: Scale,
    pub lower_ln: Option<f64>,
    pub upper_ln: Option<f64>,
    pub valid_lower: bool,
    pub valid_upper: bool,
    pub lower_violation: Option<String>,
    pub upper_violation: Option<String>,
    pub xp_used: bool,
    pub warnings: Vec<String>,
    pub details: BTreeMap<String, f64>,
}

impl EntropyEstimate {
    fn new(eps: Eps, scale: Scale) -> Self {
        EntropyEstimate {
            eps: eps.value(),
            eps_ln: eps.ln(),
            scale,
            lower_ln: None,
            upper_ln: None,
            valid_lower: false,
            valid_upper: false,
            lower_violation: None,
            upper_violation: None,
            xp_used: false,
            warnings: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    /// An estimate with neither bound available.
    pub fn unavailable(eps: Eps, scale: Scale, reason: impl Into<String>) -> Self {
        let reason = reason.into();
        let mut e = EntropyEstimate::new(eps, scale);
        e.lower_violation = Some(reason.clone());
        e.upper_violation = Some(reason);
        e
    }

    /// `ln H` of the upper bound, whatever the scale; `None` if `H ≤ 0`.
    pub fn upper_log_entropy(&self) -> Option<f64> {
        to_log_entropy(self.scale, self.upper_ln)
    }

    /// `ln H` of the lower bound, whatever the scale; `None` if `H ≤ 0`.
    pub fn lower_log_entropy(&self) -> Option<f64> {
        to_log_entropy(self.scale, self.lower_ln)
    }

    /// Lower ≤ upper whenever both are present and valid.
    pub fn is_consistent(&self) -> bool {
        match (self.lower_ln, self.upper_ln) {
            (Some(l), Some(u)) if self.valid_lower && self.valid_upper => l <= u,
            _ => true,
        }
    }
}

fn to_log_entropy(scale: Scale, v: Option<f64>) -> Option<f64> {
    match scale {
        Scale::LogEntropy => v,
        Scale::Entropy => v.filter(|h| *h > 0.0).map(f64::ln),
    }
}

/// Evaluate in `f64` and switch to [`Wide`] when the result or a flagged
/// intermediate exceeds [`XP_THRESHOLD`] in magnitude.
fn with_xp<F, G>(fast: F, wide: G, force: bool) -> (Option<f64>, bool)
where
    F: FnOnce() -> Option<f64>,
    G: FnOnce() -> Option<Wide>,
{
    if !force {
        match fast() {
            Some(v) if v.is_finite() && v.abs() <= XP_THRESHOLD => return (Some(v), false),
            None => return (None, false),
            _ => {}
        }
    }
    (wide().map(|w| w.to_f64()), true)
}

fn zero<R: Real>() -> R {
    R::from_f64(0.0)
}

/// `ln` of the analytic-class upper bound: `(4e^{q+1}/√(2π))·base^{q+1}`.
fn analytic_upper_ln<R: Real>(le: R, rho: R, q: R) -> Option<R> {
    let one = R::from_f64(1.0);
    let two = R::from_f64(2.0);
    let qp = q + one.clone();
    let ln_inv_rho = -rho.ln();
    let base = one.clone()
        + (two.ln() + rho.ln() - (one - rho.clone() * rho).sqrt().ln() - le) / (qp.clone() * ln_inv_rho);
    if !(base > zero()) {
        return None;
    }
    let c = R::from_f64(4.0).ln() + qp.clone() - (two * R::pi()).sqrt().ln();
    Some(c + qp * base.ln())
}

/// `ln` of the analytic-class lower bound: `(2^{q+1}/(8√(2π(q+1))))·base^{q+1}`.
fn analytic_lower_ln<R: Real>(le: R, rho: R, q: R) -> Option<R> {
    let one = R::from_f64(1.0);
    let two = R::from_f64(2.0);
    let qp = q + one.clone();
    let ln_inv_rho = -rho.ln();
    let base = one + (two.clone() * rho.ln() - R::from_f64(4.0).ln() - le) / (qp.clone() * ln_inv_rho);
    if !(base > zero()) {
        return None;
    }
    let c = qp.clone() * two.clone().ln() - R::from_f64(8.0).ln() - (two * R::pi() * qp.clone()).sqrt().ln();
    Some(c + qp * base.ln())
}

fn entire_upper_ln<R: Real>(le: R, q: R, tau: R) -> Option<R> {
    let x = entire_x(le.clone(), q.clone(), tau.clone());
    if !(x > zero()) {
        return None;
    }
    let et = (R::e() * tau).ln();
    let den = x.ln() - et.clone();
    let lninv = -le;
    if !(den > zero() && lninv > R::from_f64(1.0)) {
        return None;
    }
    let one = R::from_f64(1.0);
    let two = R::from_f64(2.0);
    let last = R::from_f64(5.0) * lninv.ln() + two.clone() * (q.clone() + one.clone()).ln() + R::from_f64(6.0) * et;
    if !(last > zero()) {
        return None;
    }
    let inner = x / den + R::from_f64(0.75) * q.clone();
    let c = (two.clone() / (R::from_f64(3.0) * (two.clone() * R::pi()).sqrt())).ln();
    Some(c + q.clone() * (two * R::e() / q.clone()).ln() + (q + one) * inner.ln() + last.ln())
}

fn entire_lower_ln<R: Real>(le: R, q: R, tau: R) -> Option<R> {
    let g = entire_b(le, q.clone(), tau.clone());
    if !(g > zero()) {
        return None;
    }
    let den = g.ln() - (R::e() * tau).ln();
    if !(den > zero()) {
        return None;
    }
    let r = g / den;
    let a = r.clone() - R::from_f64(2.5) + q.clone();
    let b = r - R::from_f64(1.5);
    if !(a > zero() && b > zero()) {
        return None;
    }
    let c = -R::from_f64(16.0).ln() - (R::pi() * q.clone()).sqrt().ln() - q.clone() * q.clone().ln();
    Some(c + q * a.ln() + b.ln())
}

/// Analytic class `A_ρ` bounds, reported as `ln H`.
pub fn analytic_bounds(p: &AnalyticClassParams, eps: Eps) -> EntropyEstimate {
    let le = eps.ln();
    let (rho, q) = (p.rho, p.q as f64);
    let force = le.abs() > XP_THRESHOLD;
    let mut est = EntropyEstimate::new(eps, Scale::LogEntropy);

    let (upper, xu) = with_xp(
        || analytic_upper_ln(le, rho, q),
        || analytic_upper_ln(Wide::from_f64(le), Wide::from_f64(rho), Wide::from_f64(q)),
        force,
    );
    let (lower, xl) = with_xp(
        || analytic_lower_ln(le, rho, q),
        || analytic_lower_ln(Wide::from_f64(le), Wide::from_f64(rho), Wide::from_f64(q)),
        force,
    );
    est.xp_used = xu || xl;
    est.upper_ln = upper;
    est.lower_ln = lower;
    if upper.is_none() {
        est.warnings.push("upper bound: base of the power is non-positive; not evaluated".into());
    }
    if lower.is_none() {
        est.warnings.push("lower bound: base of the power is non-positive; not evaluated".into());
    }

    let thr = analytic_upper_threshold_ln(p);
    est.valid_upper = le < thr && upper.is_some();
    if le >= thr {
        est.upper_violation = Some(format!(
            "eps < (2/sqrt(1-rho^2))((9/2)(rho^-2-1)(q+1))^((q+1)ln(1/rho)) = {:.6e}",
            thr.exp()
        ));
    }
    est.valid_lower = le < 0.5f64.ln() && lower.is_some();
    if le >= 0.5f64.ln() {
        est.lower_violation = Some("eps < 1/2".into());
    }
    est.details.insert("upper_threshold_ln".into(), thr);
    est.details.insert("pivot_ln".into(), analytic_pivot_ln(p, eps));
    let class = ClassParams::Analytic(*p);
    for (key, kind) in [("N1", TruncationKind::UpperN1), ("N2", TruncationKind::LowerN2)] {
        if let Ok(idx) = truncation_index(&class, eps, kind) {
            est.details.insert(key.into(), idx.value as f64);
        }
    }
    est
}

/// `ln` of `(ln(1/ρ)/(q+1)!)·(ln(1/ε)/ln(1/ρ))^{q+1}`.
pub fn analytic_pivot_ln(p: &AnalyticClassParams, eps: Eps) -> f64 {
    let l = (1.0 / p.rho).ln();
    let qp = p.q as u64 + 1;
    l.ln() - ln_factorial(qp) + qp as f64 * ((-eps.ln()).ln() - l.ln())
}

/// Largest ε accepted by the asymptotic envelopes.
pub const ENVELOPE_MAX_EPS: f64 = 1e-6;

fn envelope_gate(eps: Eps) -> Result<f64> {
    let lninv = -eps.ln();
    if eps.ln() > ENVELOPE_MAX_EPS.ln() || lninv.ln() <= 1.0 {
        return Err(Error::ValidityRange {
            condition: format!("eps <= {ENVELOPE_MAX_EPS:e} and lnln(1/eps) > 1"),
        });
    }
    Ok(lninv)
}

/// The factors `(lo, hi)` bracketing `H / pivot` for the analytic class.
pub fn analytic_envelope(p: &AnalyticClassParams, eps: Eps) -> Result<(f64, f64)> {
    let lninv = envelope_gate(eps)?;
    let (rho, q) = (p.rho, p.q as f64);
    let lo = 1.0 - 2.0 * (q + 1.0) * (2.0 / rho).ln() / lninv;
    let hi = 1.0
        + (2.0 * (q + 1.0) * (1.0 / rho).ln() / lninv)
            * (lninv.ln() + (18.0 * (1.0 - rho * rho).sqrt() / rho.powf(q)).ln());
    Ok((lo, hi))
}

/// Entire class `B_Q(r, τ)` bounds, reported as `ln H`.
pub fn entire_bounds(p: &EntireClassParams, eps: Eps) -> EntropyEstimate {
    let le = eps.ln();
    let (q, tau) = (p.big_q as f64, p.tau);
    let force = le.abs() > XP_THRESHOLD;
    let mut est = EntropyEstimate::new(eps, Scale::LogEntropy);
    let w = |v: f64| Wide::from_f64(v);

    let (upper, xu) = with_xp(
        || entire_upper_ln(le, q, tau),
        || entire_upper_ln(w(le), w(q), w(tau)),
        force,
    );
    let (lower, xl) = with_xp(
        || entire_lower_ln(le, q, tau),
        || entire_lower_ln(w(le), w(q), w(tau)),
        force,
    );
    est.xp_used = xu || xl;
    est.upper_ln = upper;
    est.lower_ln = lower;
    if upper.is_none() {
        est.warnings.push("upper bound: formula undefined at this eps (log of a non-positive quantity)".into());
    }
    if lower.is_none() {
        est.warnings.push("lower bound: formula undefined at this eps (log of a non-positive quantity)".into());
    }
    if !p.in_stated_range() {
        est.warnings.push(format!(
            "tau = {tau} lies outside [1, Q/(2 e^(3/2) pi)] = [1, {:.6}]",
            q / (2.0 * E.powf(1.5) * PI)
        ));
    }

    let thr_u = entire_upper_threshold_ln(p);
    est.valid_upper = le <= thr_u && upper.is_some();
    if le > thr_u {
        est.upper_violation = Some(format!(
            "eps <= (2 pi e tau/Q)^(Q/2) 4/((e tau)^(1/2) exp(e^2 tau)) = {:.6e}",
            thr_u.exp()
        ));
    }
    let thr_l = entire_lower_threshold_ln(p);
    est.valid_lower = le <= thr_l && lower.is_some();
    if le > thr_l {
        est.lower_violation = Some(format!(
            "ln eps <= ln((2 pi/Q)^(Q/2) xi^(-2 xi)/(4 sqrt(2 pi e tau))) = {thr_l:.6}"
        ));
    }
    est.details.insert("upper_threshold_ln".into(), thr_u);
    est.details.insert("lower_threshold_ln".into(), thr_l);
    est
}

/// `ln` of the (lower, upper) asymptotic envelope of `H` for the entire class.
pub fn entire_envelope(p: &EntireClassParams, eps: Eps) -> Result<(f64, f64)> {
    if eps.ln() > ENVELOPE_MAX_EPS.ln() {
        return Err(Error::ValidityRange {
            condition: format!("eps <= {ENVELOPE_MAX_EPS:e}"),
        });
    }
    let l = -eps.ln();
    let q = p.big_q as f64;
    let lnqf = ln_factorial(p.big_q as u64);
    let lo = -LN_2 - lnqf + (q + 1.0) * l.ln() - q * (2.0 * l.ln()).ln();
    let hi = -lnqf + (q + 1.0) * (2.0 * l).ln() - q * l.ln().ln();
    Ok((lo, hi))
}

fn functional_terms<R: Real>(gamma: R, q: R) -> (R, R) {
    let one = R::from_f64(1.0);
    let two = R::from_f64(2.0);
    let expo = (q.clone() * gamma.ln()).exp() * (R::from_f64(1.5).exp() / R::pi() + two.clone() * R::e()).ln();
    let c = (R::from_f64(26.0) * q.clone() / (R::from_f64(3.0) * (two * R::pi()).sqrt())).ln();
    let t1 = c + expo + q.clone() * gamma.ln() + gamma.ln().ln();
    let t2 = (q + one) * gamma.ln();
    (t1, t2)
}

/// Functional-class upper bound, reported as `ln H`. The lower bound is not
/// available.
pub fn functional_upper(fc: &FunctionalClassParams, eps: Eps) -> Result<EntropyEstimate> {
    let le = eps.ln();
    let (rho, q) = (fc.rho, fc.q as f64);
    let thr_a = analytic_upper_threshold_ln(&fc.analytic());
    let thr_b = (4.0 * rho.powf(q) / (1.0 - rho * rho).sqrt()).ln();
    let thr = thr_a.min(thr_b);
    if le >= thr {
        return Err(Error::ValidityRange {
            condition: format!(
                "eps < min{{{:.6e}, 4 rho^q/sqrt(1-rho^2) = {:.6e}}}",
                thr_a.exp(),
                thr_b.exp()
            ),
        });
    }
    let gamma = fc.gamma(eps);
    if !(gamma > 1.0) {
        return Err(Error::ValidityRange {
            condition: format!("gamma > 1, i.e. eps < rho^(q/(2e)) = {:.6e}", rho.powf(q / (2.0 * E))),
        });
    }
    let expo = gamma.powf(q) * (E.powf(1.5) / PI + 2.0 * E).ln();
    let (up, xp) = with_xp(
        || {
            let (t1, t2) = functional_terms(gamma, q);
            Some(log_sum_exp(&[t1, t2]))
        },
        || {
            let g = Wide::from_f64(gamma);
            let (t1, t2) = functional_terms(g, Wide::from_f64(q));
            let m = if t1 > t2 { t1.clone() } else { t2.clone() };
            Some(m.clone() + ((t1 - m.clone()).exp() + (t2 - m).exp()).ln())
        },
        expo > XP_THRESHOLD || le.abs() > XP_THRESHOLD,
    );
    let mut est = EntropyEstimate::new(eps, Scale::LogEntropy);
    est.upper_ln = up;
    est.valid_upper = up.is_some();
    est.lower_violation = Some("lower bound not available for this class".into());
    est.xp_used = xp;
    est.details.insert("gamma".into(), gamma);
    est.details.insert("exponent".into(), expo);
    est.details.insert("threshold_ln".into(), thr);
    Ok(est)
}

/// Entropy of the radius-`r` ball in `R^d`: `d ln(r/(2ε)) ≤ H ≤ d ln max(3r/ε, 1)`.
pub fn ball_bounds(d: u32, r: f64, eps: Eps) -> Result<EntropyEstimate> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    let le = eps.ln();
    let df = d as f64;
    let mut est = EntropyEstimate::new(eps, Scale::Entropy);
    est.lower_ln = Some(df * (r.ln() - LN_2 - le));
    est.upper_ln = Some(df * ((3.0 * r).ln() - le).max(0.0));
    est.valid_lower = true;
    est.valid_upper = true;
    Ok(est)
}

fn weighted_sum<R: Real>(terms: &[(BigUint, f64)]) -> R {
    terms
        .iter()
        .fold(zero::<R>(), |acc, (b, t)| acc + R::from_biguint(b) * R::from_f64(*t))
}

/// Shell-sum bounds for a general [`ShellSpec`], reported as `H`.
///
/// `lower = Σ_{j<N} b_j ln(Δ_j/(2B_N ε))` and
/// `upper = Σ_{j<M} b_j ln max(6 M^{1/p} Δ_j/(A_M ε), 1)`.
pub fn abstract_bounds(spec: &ShellSpec, eps: Eps, n: u64, m: u64) -> Result<EntropyEstimate> {
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    if m == 0 {
        return Err(invalid("M must be at least 1"));
    }
    let le = eps.ln();
    let required = spec.tail_index(eps.halved().ln())?;
    if m < required {
        return Err(invalid(format!(
            "M = {m} is below N(eps/2) = {required} for {}",
            spec.name
        )));
    }
    let ln_bn = (spec.ln_b)(n);
    let lower_terms: Vec<(BigUint, f64)> = (0..n)
        .map(|j| ((spec.bdim)(j), (spec.ln_delta)(j) - LN_2 - ln_bn - le))
        .collect();
    let m_pow = if spec.p.is_infinite() { 0.0 } else { (m as f64).ln() / spec.p };
    let ln_am = (spec.ln_a)(m);
    let upper_terms: Vec<(BigUint, f64)> = (0..m)
        .map(|j| {
            let t = 6f64.ln() + m_pow - ln_am + (spec.ln_delta)(j) - le;
            ((spec.bdim)(j), t.max(0.0))
        })
        .collect();

    let mut est = EntropyEstimate::new(eps, Scale::Entropy);
    let huge = lower_terms
        .iter()
        .chain(&upper_terms)
        .any(|(b, _)| ln_biguint(b) > XP_THRESHOLD);
    let (lower, upper) = if huge {
        est.xp_used = true;
        (
            weighted_sum::<Wide>(&lower_terms).to_f64(),
            weighted_sum::<Wide>(&upper_terms).to_f64(),
        )
    } else {
        (weighted_sum::<f64>(&lower_terms), weighted_sum::<f64>(&upper_terms))
    };
    if let Some(j) = lower_terms.iter().position(|(_, t)| *t < 0.0) {
        est.warnings.push(format!("lower sum has negative terms from shell {j} on"));
    }
    est.lower_ln = Some(lower);
    est.upper_ln = Some(upper);
    est.valid_lower = true;
    est.valid_upper = true;
    est.details.insert("N".into(), n as f64);
    est.details.insert("M".into(), m as f64);
    est.details.insert("N_eps_half".into(), required as f64);
    Ok(est)
}

/// Bounds for any class at one ε: analytic and entire closed forms, or the
/// functional upper bound.
pub fn class_bounds(class: &ClassParams, eps: Eps) -> Result<EntropyEstimate> {
    match class {
        ClassParams::Analytic(a) => Ok(analytic_bounds(a, eps)),
        ClassParams::Entire(e) => Ok(entire_bounds(e, eps)),
        ClassParams::Functional(f) => functional_upper(f, eps),
    }
}

/// `n` log-spaced values from `first` to `last` inclusive.
pub fn eps_grid(first: f64, last: f64, n: usize) -> Result<Vec<Eps>> {
    let a = Eps::new(first)?.ln();
    let b = Eps::new(last)?.ln();
    match n {
        0 => Err(invalid("grid needs at least one point")),
        1 => Ok(vec![Eps::from_ln(a)?]),
        _ => (0..n)
            .map(|i| Eps::from_ln(a + (b - a) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Header of curve CSV files.
pub const CURVE_HEADER: [&str; 6] = ["eps", "lower_ln", "upper_ln", "valid_lower", "valid_upper", "xp_used"];

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Write a bound curve as CSV. `empirical`, when given, adds an
/// `empirical_ln` column aligned with `rows`.
pub fn write_curve_csv<W: io::Write>(out: W, rows: &[EntropyEstimate], empirical: Option<&[Option<f64>]>) -> Result<()> {
    if let Some(e) = empirical {
        if e.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: e.len(),
            });
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<&str> = CURVE_HEADER.to_vec();
    if empirical.is_some() {
        header.push("empirical_ln");
    }
    w.write_record(&header)?;
    for (i, r) in rows.iter().enumerate() {
        let eps = if r.eps > 0.0 {
            format!("{:.5e}", r.eps)
        } else {
            format!("exp({})", r.eps_ln)
        };
        let mut rec = vec![
            eps,
            na(r.lower_ln),
            na(r.upper_ln),
            r.valid_lower.to_string(),
            r.valid_upper.to_string(),
            r.xp_used.to_string(),
        ];
        if let Some(e) = empirical {
            rec.push(na(e[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
