//! Seeded validation suites shared by the `verify` subcommands and the tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{compute_coeffs, shell_norm, ChebSeries, IntervalBox, Norm};
use crate::classes::{estimate_rho, rescale_into_analytic, AnalyticClassParams, EntireClassParams};
use crate::codec::{build_codebook, roundtrip_report};
use crate::error::{invalid, Result};
use crate::generators::{gen_analytic, gen_bandlimited};
use crate::netgen::{brute_capacity, brute_covering, net_ellipsoid, NetConfig};
use crate::seed::{derive_seed, rng_from_seed};

/// Pole parameter of generated members, relative to the class parameter.
pub const MEMBER_RHO_FACTOR: f64 = 0.9;

/// A random member of `A_ρ`: a pole sum projected onto its Chebyshev
/// coefficients and scaled onto the class boundary.
pub fn random_member(class: &AnalyticClassParams, seed: u64) -> Result<ChebSeries> {
    let q = class.q as usize;
    let order = if q == 1 { 24 } else { 14 };
    let spec = gen_analytic(q, class.rho * MEMBER_RHO_FACTOR, 3, seed)?;
    let s = compute_coeffs(|x| spec.eval(x), order, 2 * order as usize + 8, &IntervalBox::unit(q))?;
    Ok(rescale_into_analytic(&s, class)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundtripConfig {
    pub rhos: Vec<f64>,
    pub qs: Vec<u32>,
    pub eps: Vec<f64>,
    pub members: usize,
    pub delta: f64,
    pub seed: u64,
}

impl Default for RoundtripConfig {
    fn default() -> Self {
        RoundtripConfig {
            rhos: vec![0.3, 0.5],
            qs: vec![1, 2],
            eps: vec![0.5, 0.25],
            members: 20,
            delta: 0.01,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodebookSummary {
    pub rho: f64,
    pub q: u32,
    pub eps: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub eta1: f64,
    pub log_size: f64,
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundtripCase {
    pub rho: f64,
    pub q: u32,
    pub eps: f64,
    pub member_seed: u64,
    pub error: f64,
    pub quantization: f64,
    pub truncation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub config: RoundtripConfig,
    pub codebooks: Vec<CodebookSummary>,
    pub cases: Vec<RoundtripCase>,
    pub failures: usize,
    pub pass: bool,
}

/// Encode/decode generated members and check the reconstruction error.
pub fn roundtrip_suite(cfg: &RoundtripConfig) -> Result<RoundtripReport> {
    let mut codebooks = Vec::new();
    let mut cases = Vec::new();
    for &rho in &cfg.rhos {
        for &q in &cfg.qs {
            let class = AnalyticClassParams::new(rho, q)?;
            for &eps in &cfg.eps {
                let label = format!("roundtrip/codebook/{rho}/{q}/{eps}");
                let cb = build_codebook(&class, eps, cfg.delta, derive_seed(cfg.seed, &label))?;
                codebooks.push(CodebookSummary {
                    rho,
                    q,
                    eps,
                    m: cb.m,
                    eta1: cb.eta1,
                    log_size: cb.log_size,
                    hash: cb.hash.clone(),
                });
                for i in 0..cfg.members {
                    let member_seed = derive_seed(cfg.seed, &format!("roundtrip/member/{rho}/{q}/{i}"));
                    let s = random_member(&class, member_seed)?;
                    let r = roundtrip_report(&s, &cb)?;
                    cases.push(RoundtripCase {
                        rho,
                        q,
                        eps,
                        member_seed,
                        error: r.total,
                        quantization: r.quantization,
                        truncation: r.truncation,
                        pass: r.total <= eps,
                    });
                }
            }
        }
    }
    let failures = cases.iter().filter(|c| !c.pass).count();
    Ok(RoundtripReport {
        config: cfg.clone(),
        codebooks,
        cases,
        failures,
        pass: failures == 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub dims: Vec<usize>,
    pub rho: f64,
    pub order: u32,
    pub seeds: usize,
    pub terms: usize,
    pub nodes: usize,
    pub window: [f64; 2],
    pub min_pass: usize,
    pub seed: u64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            dims: vec![1, 2],
            rho: 0.5,
            order: 30,
            seeds: 20,
            terms: 3,
            nodes: 64,
            window: [0.45, 0.55],
            min_pass: 18,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCase {
    pub dim: usize,
    pub seed: u64,
    pub rho_hat: f64,
    pub shell_norms: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub config: DecayConfig,
    pub cases: Vec<DecayCase>,
    /// Passing seeds per entry of `config.dims`.
    pub passed: Vec<usize>,
    pub pass: bool,
}

/// Fit the geometric decay rate of pole-sum shell norms.
pub fn decay_suite(cfg: &DecayConfig) -> Result<DecayReport> {
    let mut cases = Vec::new();
    let mut passed = Vec::new();
    for &d in &cfg.dims {
        let mut ok = 0;
        for i in 0..cfg.seeds {
            let seed = derive_seed(cfg.seed, &format!("decay/{d}/{i}"));
            let spec = gen_analytic(d, cfg.rho, cfg.terms, seed)?;
            let s = compute_coeffs(|x| spec.eval(x), cfg.order, cfg.nodes, &IntervalBox::unit(d))?;
            let norms = (0..=cfg.order as u64)
                .map(|j| shell_norm(&s, j, Norm::L2).map(|n| n.value))
                .collect::<Result<Vec<_>>>()?;
            let rho_hat = estimate_rho(&norms)?;
            let pass = rho_hat >= cfg.window[0] && rho_hat <= cfg.window[1];
            ok += pass as usize;
            cases.push(DecayCase {
                dim: d,
                seed,
                rho_hat,
                shell_norms: norms,
                pass,
            });
        }
        passed.push(ok);
    }
    let pass = passed.iter().all(|&n| n >= cfg.min_pass);
    Ok(DecayReport {
        config: cfg.clone(),
        cases,
        passed,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntireConfig {
    pub dims: Vec<usize>,
    pub vmax: f64,
    pub max_order: u32,
    pub seeds: usize,
    pub terms: usize,
    pub nodes: usize,
    pub grid: usize,
    pub seed: u64,
}

impl Default for EntireConfig {
    fn default() -> Self {
        EntireConfig {
            dims: vec![1, 2],
            vmax: 1.0,
            max_order: 15,
            seeds: 20,
            terms: 4,
            nodes: 40,
            grid: 64,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntireShell {
    pub n: u64,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntireCase {
    pub dim: usize,
    pub seed: u64,
    pub shells: Vec<EntireShell>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntireReport {
    pub config: EntireConfig,
    pub cases: Vec<EntireCase>,
    pub violations: usize,
    pub pass: bool,
}

/// Compare sup-norm shell estimates of band-limited functions with
/// `2(2π/Q)^{Q/2} N^{Q/2} (v·r)^N / N!` on the unit box.
pub fn entire_suite(cfg: &EntireConfig) -> Result<EntireReport> {
    let mut cases = Vec::new();
    for &q in &cfg.dims {
        let radii = vec![1.0; q];
        let tau = cfg.vmax * radii.iter().sum::<f64>();
        let class = EntireClassParams::new(q as u32, tau, radii, 2.0)?;
        for i in 0..cfg.seeds {
            let seed = derive_seed(cfg.seed, &format!("entire/{q}/{i}"));
            let spec = gen_bandlimited(q, cfg.vmax, cfg.terms, seed)?;
            let s = compute_coeffs(|x| spec.eval(x), cfg.max_order, cfg.nodes, &IntervalBox::unit(q))?;
            let shells = (1..=cfg.max_order as u64)
                .map(|n| {
                    let measured = shell_norm(&s, n, Norm::Sup { grid: cfg.grid })?.value;
                    let bound = class.ln_lambda(n).exp();
                    Ok(EntireShell {
                        n,
                        measured,
                        bound,
                        pass: measured <= bound * crate::classes::SUP_SAFETY_FACTOR,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let pass = shells.iter().all(|s| s.pass);
            cases.push(EntireCase {
                dim: q,
                seed,
                shells,
                pass,
            });
        }
    }
    let violations = cases.iter().flat_map(|c| &c.shells).filter(|s| !s.pass).count();
    Ok(EntireReport {
        config: cfg.clone(),
        cases,
        violations,
        pass: violations == 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichConfig {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub min_points: usize,
    pub max_points: usize,
    pub seed: u64,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        SandwichConfig {
            dims: vec![1, 2, 3],
            trials: 50,
            min_points: 8,
            max_points: 64,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichCase {
    pub dim: usize,
    pub points: usize,
    pub eps: f64,
    pub capacity_2eps: usize,
    pub covering_eps: usize,
    pub capacity_eps: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub config: SandwichConfig,
    pub cases: Vec<SandwichCase>,
    pub failures: usize,
    pub pass: bool,
}

/// Exact packing and covering counts on random point clouds in `[0, 1]^d`;
/// checks `C_{2ε} ≤ N_ε ≤ C_ε` as integers.
pub fn sandwich_suite(cfg: &SandwichConfig) -> Result<SandwichReport> {
    if cfg.dims.is_empty() || cfg.min_points == 0 || cfg.min_points > cfg.max_points {
        return Err(invalid("sandwich suite needs dims and 1 <= min_points <= max_points"));
    }
    let mut cases = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let d = cfg.dims[t % cfg.dims.len()];
        let mut rng = rng_from_seed(derive_seed(cfg.seed, &format!("sandwich/{t}")));
        let n = rng.gen_range(cfg.min_points..=cfg.max_points);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
        let eps = rng.gen_range(0.1..0.4) * (d as f64).sqrt();
        let c2 = brute_capacity(&points, 2.0 * eps)?;
        let cov = brute_covering(&points, eps)?;
        let c1 = brute_capacity(&points, eps)?;
        cases.push(SandwichCase {
            dim: d,
            points: n,
            eps,
            capacity_2eps: c2,
            covering_eps: cov,
            capacity_eps: c1,
            pass: c2 <= cov && cov <= c1,
        });
    }
    let failures = cases.iter().filter(|c| !c.pass).count();
    Ok(SandwichReport {
        config: cfg.clone(),
        cases,
        failures,
        pass: failures == 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallConfig {
    pub dims: Vec<usize>,
    pub eps: Vec<f64>,
    pub seeds: usize,
    pub radius: f64,
    pub delta: f64,
    pub seed: u64,
}

impl Default for BallConfig {
    fn default() -> Self {
        BallConfig {
            dims: vec![1, 2, 3],
            eps: vec![0.5, 0.25],
            seeds: 10,
            radius: 1.0,
            delta: 0.01,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCase {
    pub dim: usize,
    pub eps: f64,
    pub seed: u64,
    pub size: usize,
    pub ln_size: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallReport {
    pub config: BallConfig,
    pub cases: Vec<BallCase>,
    pub failures: usize,
    pub pass: bool,
}

/// Greedy nets of the radius-`r` ball against `d ln(r/2ε) ≤ ln|C| ≤ d ln(12r/ε)`.
pub fn ball_suite(cfg: &BallConfig) -> Result<BallReport> {
    let net_cfg = NetConfig::from_env()?;
    let mut cases = Vec::new();
    for &d in &cfg.dims {
        for &eps in &cfg.eps {
            for i in 0..cfg.seeds {
                let seed = derive_seed(cfg.seed, &format!("ball/{d}/{eps}/{i}"));
                let net = net_ellipsoid(&vec![0.0; d], &vec![cfg.radius; d], eps, cfg.delta, seed, false, &net_cfg)?;
                let df = d as f64;
                let ln_size = (net.len() as f64).ln();
                let lower = df * (cfg.radius / (2.0 * eps)).ln();
                let upper = df * (12.0 * cfg.radius / eps).ln();
                cases.push(BallCase {
                    dim: d,
                    eps,
                    seed,
                    size: net.len(),
                    ln_size,
                    lower,
                    upper,
                    pass: lower <= ln_size && ln_size <= upper,
                });
            }
        }
    }
    let failures = cases.iter().filter(|c| !c.pass).count();
    Ok(BallReport {
        config: cfg.clone(),
        cases,
        failures,
        pass: failures == 0,
    })
}
