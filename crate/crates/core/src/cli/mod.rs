//! Command-line front end.
//!
//! Every subcommand produces one artifact. With `--out PATH` the artifact is
//! written to `PATH` and a run manifest to `PATH.manifest.json`; without it the
//! artifact goes to stdout and nothing is written to disk.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure, 3 I/O error.

pub mod suites;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::f64::consts::LN_10;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{
    abstract_bounds, analytic_envelope, ball_bounds, class_bounds, entire_envelope, eps_grid, write_curve_csv,
    EntropyEstimate, Eps, Scale,
};
use crate::chebyshev::{compute_coeffs, ChebSeries, IntervalBox};
use crate::classes::{
    truncation_index, AnalyticClassParams, ClassParams, EntireClassParams, FunctionalClassParams, TruncationKind,
};
use crate::codec::{build_codebook_with, decode, encode, Code, Codebook, DEFAULT_STORAGE_CAP, HASH_ALGORITHM};
use crate::error::Error;
use crate::generators::{
    gen_analytic, gen_bandlimited, BandlimitedSpec, PoleSumSpec, BANDLIMITED_VERSION, POLE_SUM_VERSION,
};
use crate::netgen::{net_ellipsoid, NetConfig, MAX_SAMPLES_ENV};
use crate::seed::{derive_seed, sha256_hex};
use crate::VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Suffix appended to `--out` for the run manifest.
pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Parser, Debug)]
#[command(name = "entropy-grid", version, about = "Metric-entropy bounds, ε-nets and codebooks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate random test functions.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Chebyshev coefficients of a generated function.
    Coeffs(CoeffsArgs),
    /// Evaluate entropy bounds at one ε.
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Sweep bounds over a log-spaced ε grid (CSV).
    Curve(CurveArgs),
    /// Build randomized ε-nets.
    #[command(subcommand)]
    Net(NetCmd),
    /// Codebook construction.
    #[command(subcommand)]
    Codebook(CodebookCmd),
    /// Quantize a coefficient series with a codebook.
    Encode(EncodeArgs),
    /// Reconstruct a series from a code.
    Decode(DecodeArgs),
    /// Run a validation suite.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Args, Debug, Clone)]
struct OutArg {
    /// Artifact path; a manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct EpsArg {
    #[arg(long, required_unless_present = "ln_eps", conflicts_with = "ln_eps")]
    eps: Option<f64>,
    /// Natural log of ε, for values below the f64 range.
    #[arg(long, allow_hyphen_values = true)]
    ln_eps: Option<f64>,
}

impl EpsArg {
    fn get(&self) -> Result<Eps, CliError> {
        match (self.eps, self.ln_eps) {
            (Some(v), _) => Ok(Eps::new(v)?),
            (None, Some(l)) => Ok(Eps::from_ln(l)?),
            (None, None) => Err(CliError::Usage("--eps or --ln-eps is required".into())),
        }
    }
}

#[derive(Subcommand, Debug)]
enum GenCmd {
    /// Pole sum on the boundary of the ρ-ellipse.
    Analytic {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 3)]
        terms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Band-limited sum of complex exponentials.
    Bandlimited {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        vmax: f64,
        #[arg(long, default_value_t = 4)]
        terms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args, Debug)]
struct CoeffsArgs {
    /// Generator spec (JSON from `gen`).
    #[arg(long)]
    spec: PathBuf,
    /// Maximal total order.
    #[arg(long)]
    order: u32,
    /// Quadrature nodes per axis; defaults to 2·order + 8.
    #[arg(long)]
    nodes: Option<usize>,
    /// Box radii (band-limited specs only); defaults to the unit box.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Subcommand, Debug)]
enum BoundsCmd {
    Analytic {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        q: u32,
        #[command(flatten)]
        eps: EpsArg,
        #[command(flatten)]
        out: OutArg,
    },
    Entire {
        #[arg(long = "Q", alias = "big-q")]
        big_q: u32,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
        #[command(flatten)]
        eps: EpsArg,
        #[command(flatten)]
        out: OutArg,
    },
    Functional {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        rho: f64,
        #[command(flatten)]
        eps: EpsArg,
        #[command(flatten)]
        out: OutArg,
    },
    Ball {
        #[arg(long)]
        dim: u32,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[command(flatten)]
        eps: EpsArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Shell sums for the analytic or entire shell sequence.
    Abstract {
        #[command(flatten)]
        class: ClassArgs,
        /// Lower-bound shell count; defaults to N₂ + 1.
        #[arg(long)]
        n: Option<u64>,
        /// Upper-bound shell count; defaults to N₁ + 1.
        #[arg(long)]
        m: Option<u64>,
        #[command(flatten)]
        eps: EpsArg,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ClassKind {
    Analytic,
    Entire,
    Functional,
    Ball,
}

#[derive(Args, Debug, Clone)]
struct ClassArgs {
    #[arg(long, value_enum)]
    class: ClassKind,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long = "Q", alias = "big-q")]
    big_q: Option<u32>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    /// Ball dimension.
    #[arg(long)]
    dim: Option<u32>,
    /// Ball radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
}

fn need<T>(v: Option<T>, flag: &str, class: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --class {class}")))
}

impl ClassArgs {
    fn params(&self) -> Result<ClassParams, CliError> {
        Ok(match self.class {
            ClassKind::Analytic => ClassParams::Analytic(AnalyticClassParams::new(
                need(self.rho, "rho", "analytic")?,
                need(self.q, "q", "analytic")?,
            )?),
            ClassKind::Entire => {
                let q = need(self.big_q, "Q", "entire")?;
                ClassParams::Entire(EntireClassParams::new(
                    q,
                    need(self.tau, "tau", "entire")?,
                    vec![1.0; q as usize],
                    self.c0,
                )?)
            }
            ClassKind::Functional => ClassParams::Functional(FunctionalClassParams::new(
                need(self.q, "q", "functional")?,
                need(self.rho, "rho", "functional")?,
            )?),
            ClassKind::Ball => return Err(CliError::Usage("ball is not a function class".into())),
        })
    }
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    eps_from: f64,
    #[arg(long)]
    eps_to: f64,
    #[arg(long, default_value_t = 13)]
    points: usize,
    /// Add greedy-net ln-sizes (ball curves with dim ≤ 3).
    #[arg(long)]
    empirical: bool,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Subcommand, Debug)]
enum NetCmd {
    /// Net of the Euclidean ball of radius `radius` centered at the origin.
    Ball {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        include_center: bool,
        #[command(flatten)]
        out: OutArg,
    },
    Ellipsoid {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        include_center: bool,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand, Debug)]
enum CodebookCmd {
    Build {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// Geometric decay of pole-sum shell norms.
    Decay {
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 30)]
        order: u32,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 3)]
        terms: usize,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        #[arg(long, default_value_t = 18)]
        min_pass: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Sup-norm shell bound for band-limited functions.
    Entire {
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        vmax: f64,
        #[arg(long, default_value_t = 15)]
        max_order: u32,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 4)]
        terms: usize,
        #[arg(long, default_value_t = 40)]
        nodes: usize,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact packing/covering sandwich on random point clouds.
    Sandwich {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        dim: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 8)]
        min_points: usize,
        #[arg(long, default_value_t = 64)]
        max_points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Codebook reconstruction error on generated class members.
    Roundtrip {
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5")]
        rhos: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        qs: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.25")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        members: usize,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Lib(e) => match e {
                Error::Io(_) | Error::Csv(_) => EXIT_IO,
                Error::InvalidParameter(_) => EXIT_USAGE,
                _ => EXIT_VALIDATION,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
        }
    }
}

/// Digest of one file named in a manifest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to regenerate an artifact: re-running `argv` with the
/// recorded environment reproduces the output digests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub env: BTreeMap<String, Option<String>>,
    pub formats: BTreeMap<String, String>,
}

/// Path of the manifest accompanying `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(MANIFEST_SUFFIX);
    PathBuf::from(s)
}

struct Outcome {
    command: &'static str,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    out: Option<PathBuf>,
    artifact: String,
    pass: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new(command: &'static str, out: &OutArg, artifact: String) -> Self {
        Outcome {
            command,
            seed: None,
            inputs: Vec::new(),
            out: out.out.clone(),
            artifact,
            pass: true,
            notes: Vec::new(),
        }
    }

    fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(CliError::Io)
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read_input(path)?;
    Ok(serde_json::from_str(&text).map_err(Error::from)?)
}

/// Decimal rendering of `exp(ln)`, also beyond the `f64` range.
pub fn render_exp(ln: f64) -> String {
    if ln.abs() < 700.0 {
        return format!("{:.6e}", ln.exp());
    }
    let x = ln / LN_10;
    let e = x.floor();
    format!("{:.6}e{}", 10f64.powf(x - e), e as i64)
}

fn render(est: &EntropyEstimate, v: Option<f64>) -> Option<String> {
    v.map(|x| match est.scale {
        Scale::Entropy => format!("{x:.6e}"),
        Scale::LogEntropy => render_exp(x),
    })
}

fn bounds_artifact(class: serde_json::Value, est: &EntropyEstimate, extra: serde_json::Value) -> Result<String, CliError> {
    to_json(&json!({
        "class": class,
        "estimate": est,
        "rendered": {
            "lower": render(est, est.lower_ln),
            "upper": render(est, est.upper_ln),
        },
        "extra": extra,
    }))
}

fn run_gen(cmd: &GenCmd) -> Result<Outcome, CliError> {
    match cmd {
        GenCmd::Analytic {
            dim,
            rho,
            terms,
            seed,
            out,
        } => {
            let spec = gen_analytic(*dim, *rho, *terms, *seed)?;
            Ok(Outcome::new("gen analytic", out, to_json(&spec)?).seed(*seed))
        }
        GenCmd::Bandlimited {
            dim,
            vmax,
            terms,
            seed,
            out,
        } => {
            let spec = gen_bandlimited(*dim, *vmax, *terms, *seed)?;
            Ok(Outcome::new("gen bandlimited", out, to_json(&spec)?).seed(*seed))
        }
    }
}

fn run_coeffs(a: &CoeffsArgs) -> Result<Outcome, CliError> {
    let text = read_input(&a.spec)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    let generator = value.get("generator").and_then(|g| g.as_str()).unwrap_or_default().to_string();
    let nodes = a.nodes.unwrap_or(2 * a.order as usize + 8);
    let series = if generator == POLE_SUM_VERSION {
        let spec: PoleSumSpec = serde_json::from_value(value).map_err(Error::from)?;
        spec.validate()?;
        if a.radii.is_some() {
            return Err(CliError::Usage("--radii applies to band-limited specs only".into()));
        }
        compute_coeffs(|x| spec.eval(x), a.order, nodes, &IntervalBox::unit(spec.dim))?
    } else if generator == BANDLIMITED_VERSION {
        let spec: BandlimitedSpec = serde_json::from_value(value).map_err(Error::from)?;
        spec.validate()?;
        let domain = match &a.radii {
            Some(r) => IntervalBox::new(r.clone())?,
            None => IntervalBox::unit(spec.dim),
        };
        if domain.dim() != spec.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.dim,
                got: domain.dim(),
            }
            .into());
        }
        compute_coeffs(|x| spec.eval(x), a.order, nodes, &domain)?
    } else {
        return Err(Error::InvalidParameter(format!("unknown generator {generator:?} in spec")).into());
    };
    let mut o = Outcome::new("coeffs", &a.out, to_json(&series)?);
    o.inputs.push(a.spec.clone());
    Ok(o)
}

fn run_bounds(cmd: &BoundsCmd) -> Result<Outcome, CliError> {
    match cmd {
        BoundsCmd::Analytic { rho, q, eps, out } => {
            let p = AnalyticClassParams::new(*rho, *q)?;
            let e = eps.get()?;
            let est = class_bounds(&ClassParams::Analytic(p), e)?;
            let envelope = analytic_envelope(&p, e).ok().map(|(lo, hi)| json!({"lo_factor": lo, "hi_factor": hi}));
            let art = bounds_artifact(json!(ClassParams::Analytic(p)), &est, json!({ "envelope": envelope }))?;
            Ok(Outcome::new("bounds analytic", out, art))
        }
        BoundsCmd::Entire {
            big_q,
            tau,
            c0,
            eps,
            out,
        } => {
            let p = EntireClassParams::new(*big_q, *tau, vec![1.0; *big_q as usize], *c0)?;
            let e = eps.get()?;
            let est = class_bounds(&ClassParams::Entire(p.clone()), e)?;
            let envelope = entire_envelope(&p, e).ok().map(|(lo, hi)| json!({"lo_ln": lo, "hi_ln": hi}));
            let class = ClassParams::Entire(p);
            let idx = |k| truncation_index(&class, e, k).ok().map(|i| i.value);
            let extra = json!({
                "envelope": envelope,
                "N1": idx(TruncationKind::UpperN1),
                "N2": idx(TruncationKind::LowerN2),
            });
            let art = bounds_artifact(json!(class), &est, extra)?;
            Ok(Outcome::new("bounds entire", out, art))
        }
        BoundsCmd::Functional { q, rho, eps, out } => {
            let p = FunctionalClassParams::new(*q, *rho)?;
            let est = class_bounds(&ClassParams::Functional(p), eps.get()?)?;
            let art = bounds_artifact(json!(ClassParams::Functional(p)), &est, json!({}))?;
            Ok(Outcome::new("bounds functional", out, art))
        }
        BoundsCmd::Ball { dim, radius, eps, out } => {
            let est = ball_bounds(*dim, *radius, eps.get()?)?;
            let art = bounds_artifact(json!({"kind": "ball", "dim": dim, "radius": radius}), &est, json!({}))?;
            Ok(Outcome::new("bounds ball", out, art))
        }
        BoundsCmd::Abstract { class, n, m, eps, out } => {
            let params = class.params()?;
            let spec = match &params {
                ClassParams::Analytic(a) => a.shell_spec(),
                ClassParams::Entire(e) => e.shell_spec(),
                ClassParams::Functional(_) => {
                    return Err(CliError::Usage("abstract bounds take --class analytic or entire".into()))
                }
            };
            let e = eps.get()?;
            let mut notes = Vec::new();
            let n = match n {
                Some(n) => *n,
                None => match truncation_index(&params, e, TruncationKind::LowerN2) {
                    Ok(i) => (i.value + 1).max(1) as u64,
                    Err(Error::ValidityRange { .. }) => {
                        notes.push("N2 undefined at this eps; using N = 1".to_string());
                        1
                    }
                    Err(err) => return Err(err.into()),
                },
            };
            let m = match m {
                Some(m) => *m,
                None => match truncation_index(&params, e, TruncationKind::UpperN1) {
                    Ok(i) => (i.value + 1).max(1) as u64,
                    Err(Error::ValidityRange { .. }) => {
                        let m = spec.tail_index(e.halved().ln())?.max(1);
                        notes.push(format!("N1 undefined at this eps; using M = N(eps/2) = {m}"));
                        m
                    }
                    Err(err) => return Err(err.into()),
                },
            };
            let est = abstract_bounds(&spec, e, n, m)?;
            let art = bounds_artifact(json!(params), &est, json!({"shell_spec": spec.name}))?;
            let mut o = Outcome::new("bounds abstract", out, art);
            o.notes = notes;
            Ok(o)
        }
    }
}

fn run_curve(a: &CurveArgs) -> Result<Outcome, CliError> {
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let grid = eps_grid(a.eps_from, a.eps_to, a.points)?;
    let rows: Vec<EntropyEstimate> = if a.class.class == ClassKind::Ball {
        let d = need(a.class.dim, "dim", "ball")?;
        grid.iter()
            .map(|&e| ball_bounds(d, a.class.radius, e))
            .collect::<crate::Result<_>>()?
    } else {
        let params = a.class.params()?;
        grid.iter()
            .map(|&e| match class_bounds(&params, e) {
                Ok(est) => Ok(est),
                Err(Error::ValidityRange { condition }) => {
                    Ok(EntropyEstimate::unavailable(e, Scale::LogEntropy, condition))
                }
                Err(err) => Err(err),
            })
            .collect::<crate::Result<_>>()?
    };
    let empirical = if a.empirical {
        let d = match (a.class.class, a.class.dim) {
            (ClassKind::Ball, Some(d)) if d <= 3 => d as usize,
            _ => return Err(CliError::Usage("--empirical needs --class ball with --dim <= 3".into())),
        };
        let cfg = NetConfig::from_env()?;
        let sizes = grid
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let net = net_ellipsoid(
                    &vec![0.0; d],
                    &vec![a.class.radius; d],
                    e.value(),
                    a.delta,
                    derive_seed(a.seed, &format!("curve/{i}")),
                    false,
                    &cfg,
                )?;
                Ok(Some((net.len() as f64).ln()))
            })
            .collect::<crate::Result<Vec<_>>>()?;
        Some(sizes)
    } else {
        None
    };
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &rows, empirical.as_deref())?;
    let text = String::from_utf8(buf).expect("CSV output is UTF-8");
    let mut o = Outcome::new("curve", &a.out, text);
    if a.empirical {
        o.seed = Some(a.seed);
    }
    Ok(o)
}

fn run_net(cmd: &NetCmd) -> Result<Outcome, CliError> {
    let cfg = NetConfig::from_env()?;
    let (name, net, seed, out) = match cmd {
        NetCmd::Ball {
            dim,
            radius,
            eps,
            delta,
            seed,
            include_center,
            out,
        } => (
            "net ball",
            net_ellipsoid(&vec![0.0; *dim], &vec![*radius; *dim], *eps, *delta, *seed, *include_center, &cfg)?,
            *seed,
            out,
        ),
        NetCmd::Ellipsoid {
            center,
            radii,
            eps,
            delta,
            seed,
            include_center,
            out,
        } => (
            "net ellipsoid",
            net_ellipsoid(center, radii, *eps, *delta, *seed, *include_center, &cfg)?,
            *seed,
            out,
        ),
    };
    let mut o = Outcome::new(name, out, to_json(&net)?).seed(seed);
    if net.guarantee_void {
        o.notes.push(format!(
            "sample cap {} reached; the probabilistic coverage guarantee is void",
            cfg.max_samples
        ));
    }
    Ok(o)
}

fn run_codebook(cmd: &CodebookCmd) -> Result<Outcome, CliError> {
    let CodebookCmd::Build {
        rho,
        q,
        eps,
        delta,
        seed,
        out,
    } = cmd;
    let class = AnalyticClassParams::new(*rho, *q)?;
    let cfg = NetConfig::from_env()?;
    let cb = build_codebook_with(&class, *eps, *delta, *seed, &cfg, DEFAULT_STORAGE_CAP)?;
    let mut o = Outcome::new("codebook build", out, to_json(&cb)?).seed(*seed);
    if cb.guarantee_void {
        o.notes.push("sample cap reached in at least one shell; coverage guarantee is void".into());
    }
    Ok(o)
}

fn load_codebook(path: &Path) -> Result<Codebook, CliError> {
    Ok(Codebook::from_json(&read_input(path)?)?)
}

fn run_encode(a: &EncodeArgs) -> Result<Outcome, CliError> {
    let series: ChebSeries = parse_json(&a.series)?;
    let cb = load_codebook(&a.codebook)?;
    let code = encode(&series, &cb)?;
    let mut o = Outcome::new("encode", &a.out, to_json(&code)?);
    o.inputs = vec![a.series.clone(), a.codebook.clone()];
    Ok(o)
}

fn run_decode(a: &DecodeArgs) -> Result<Outcome, CliError> {
    let code: Code = parse_json(&a.code)?;
    let cb = load_codebook(&a.codebook)?;
    let s = decode(&code, &cb)?;
    let mut o = Outcome::new("decode", &a.out, to_json(&s)?);
    o.inputs = vec![a.code.clone(), a.codebook.clone()];
    Ok(o)
}

fn run_verify(cmd: &VerifyCmd) -> Result<Outcome, CliError> {
    match cmd {
        VerifyCmd::Decay {
            dims,
            rho,
            order,
            seeds,
            terms,
            nodes,
            min_pass,
            seed,
            out,
        } => {
            let cfg = suites::DecayConfig {
                dims: dims.clone(),
                rho: *rho,
                order: *order,
                seeds: *seeds,
                terms: *terms,
                nodes: *nodes,
                min_pass: *min_pass,
                seed: *seed,
                ..Default::default()
            };
            let r = suites::decay_suite(&cfg)?;
            let mut o = Outcome::new("verify decay", out, to_json(&r)?).seed(*seed);
            o.pass = r.pass;
            Ok(o)
        }
        VerifyCmd::Entire {
            dims,
            vmax,
            max_order,
            seeds,
            terms,
            nodes,
            grid,
            seed,
            out,
        } => {
            let cfg = suites::EntireConfig {
                dims: dims.clone(),
                vmax: *vmax,
                max_order: *max_order,
                seeds: *seeds,
                terms: *terms,
                nodes: *nodes,
                grid: *grid,
                seed: *seed,
            };
            let r = suites::entire_suite(&cfg)?;
            let mut o = Outcome::new("verify entire", out, to_json(&r)?).seed(*seed);
            o.pass = r.pass;
            Ok(o)
        }
        VerifyCmd::Sandwich {
            dim,
            trials,
            min_points,
            max_points,
            seed,
            out,
        } => {
            let cfg = suites::SandwichConfig {
                dims: dim.clone(),
                trials: *trials,
                min_points: *min_points,
                max_points: *max_points,
                seed: *seed,
            };
            let r = suites::sandwich_suite(&cfg)?;
            let mut o = Outcome::new("verify sandwich", out, to_json(&r)?).seed(*seed);
            o.pass = r.pass;
            Ok(o)
        }
        VerifyCmd::Roundtrip {
            rhos,
            qs,
            eps,
            members,
            delta,
            seed,
            out,
        } => {
            let cfg = suites::RoundtripConfig {
                rhos: rhos.clone(),
                qs: qs.clone(),
                eps: eps.clone(),
                members: *members,
                delta: *delta,
                seed: *seed,
            };
            let r = suites::roundtrip_suite(&cfg)?;
            let mut o = Outcome::new("verify roundtrip", out, to_json(&r)?).seed(*seed);
            o.pass = r.pass;
            Ok(o)
        }
    }
}

fn dispatch(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Gen(c) => run_gen(c),
        Command::Coeffs(a) => run_coeffs(a),
        Command::Bounds(c) => run_bounds(c),
        Command::Curve(a) => run_curve(a),
        Command::Net(c) => run_net(c),
        Command::Codebook(c) => run_codebook(c),
        Command::Encode(a) => run_encode(a),
        Command::Decode(a) => run_decode(a),
        Command::Verify(c) => run_verify(c),
    }
}

fn digest(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path).map_err(CliError::Io)?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

fn write_outputs(o: &Outcome, argv: &[String]) -> Result<(), CliError> {
    let Some(out) = &o.out else {
        print!("{}", o.artifact);
        return Ok(());
    };
    fs::write(out, &o.artifact).map_err(CliError::Io)?;
    let manifest = Manifest {
        tool: "entropy-grid".into(),
        version: VERSION.into(),
        command: o.command.into(),
        argv: argv.to_vec(),
        seed: o.seed,
        inputs: o.inputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
        outputs: vec![FileDigest {
            path: out.display().to_string(),
            sha256: sha256_hex(o.artifact.as_bytes()),
        }],
        env: BTreeMap::from([(MAX_SAMPLES_ENV.to_string(), std::env::var(MAX_SAMPLES_ENV).ok())]),
        formats: BTreeMap::from([
            ("pole_sum".to_string(), POLE_SUM_VERSION.to_string()),
            ("bandlimited".to_string(), BANDLIMITED_VERSION.to_string()),
            ("codebook_hash".to_string(), HASH_ALGORITHM.to_string()),
        ]),
    };
    fs::write(manifest_path(out), to_json(&manifest)?).map_err(CliError::Io)?;
    Ok(())
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let outcome = match dispatch(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return e.exit_code();
        }
    };
    for n in &outcome.notes {
        eprintln!("warning: {n}");
    }
    if let Err(e) = write_outputs(&outcome, &argv) {
        eprintln!("error: {}", e.message());
        return e.exit_code();
    }
    if outcome.pass {
        EXIT_OK
    } else {
        eprintln!("error: validation suite reported failures");
        EXIT_VALIDATION
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_beyond_f64() {
        assert_eq!(render_exp(0.0), "1.000000e0");
        let s = render_exp(10_000.0 * LN_10);
        assert!(s.ends_with("e10000"), "{s}");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with_args(["entropy-grid", "bounds", "analytic", "--rho", "0.5"]), EXIT_USAGE);
        assert_eq!(main_with_args(["entropy-grid", "frobnicate"]), EXIT_USAGE);
        assert_eq!(main_with_args(["entropy-grid", "--help"]), EXIT_OK);
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(manifest_path(Path::new("a/b.json")), PathBuf::from("a/b.json.manifest.json"));
    }
}
