//! Acceptance suite: one check per criterion, each with a wall-clock budget.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see the
//! per-criterion report.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use entropy_grid::bounds::{
    abstract_bounds, analytic_bounds, analytic_envelope, analytic_pivot_ln, entire_bounds, eps_grid,
    functional_upper, Eps,
};
use entropy_grid::classes::{
    entire_upper_threshold_ln, truncation_index, AnalyticClassParams, ClassParams, EntireClassParams,
    FunctionalClassParams, TruncationKind,
};
use entropy_grid::cli::suites::{
    ball_suite, decay_suite, entire_suite, random_member, roundtrip_suite, sandwich_suite, BallConfig,
    DecayConfig, EntireConfig, RoundtripConfig, SandwichConfig,
};

const LOG_SLACK: f64 = 1e-9;

const ANCHOR_N1: i64 = 7;
const ANCHOR_GAMMA: f64 = 54.18;
const ANCHOR_GAMMA_TOL: f64 = 0.01;
const ANCHOR_FUNCTIONAL_UPPER_LN: f64 = 111.0;
const ANCHOR_FUNCTIONAL_UPPER_TOL: f64 = 0.2;
const ANCHOR_ENTIRE_THRESHOLD: f64 = 3.2e-7;
const ANCHOR_ENTIRE_REL_TOL: f64 = 0.05;

struct Outcome {
    id: usize,
    name: &'static str,
    budget: Duration,
    elapsed: Duration,
    result: Result<String, String>,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.result.is_ok() && self.elapsed < self.budget
    }

    fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let msg = match &self.result {
            Ok(m) => m.clone(),
            Err(m) => m.clone(),
        };
        let over = if self.elapsed >= self.budget {
            format!(" [over budget {:?}]", self.budget)
        } else {
            String::new()
        };
        format!(
            "[{status}] {}. {} ({:.3}s){over}: {msg}",
            self.id,
            self.name,
            self.elapsed.as_secs_f64()
        )
    }
}

fn run(id: usize, name: &'static str, budget_s: u64, f: impl FnOnce() -> Result<String, String>) -> Outcome {
    let t = Instant::now();
    let result = f();
    Outcome {
        id,
        name,
        budget: Duration::from_secs(budget_s),
        elapsed: t.elapsed(),
        result,
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn eps(v: f64) -> Eps {
    Eps::new(v).unwrap()
}

fn roundtrip() -> Result<String, String> {
    let cfg = RoundtripConfig::default();
    ensure(
        cfg.rhos == [0.3, 0.5] && cfg.qs == [1, 2] && cfg.eps == [0.5, 0.25] && cfg.members == 20,
        || "unexpected default configuration".into(),
    )?;
    let r = roundtrip_suite(&cfg).map_err(|e| e.to_string())?;
    ensure(r.cases.len() == 2 * 2 * 2 * 20, || format!("{} cases", r.cases.len()))?;
    let worst = r.cases.iter().map(|c| c.error / c.eps).fold(0.0, f64::max);
    let over = r.cases.iter().filter(|c| c.error > c.eps || c.error.is_nan()).count();
    ensure(over == 0 && r.failures == 0 && r.pass, || {
        format!("{over} members with error > eps")
    })?;
    Ok(format!("{} members, max error/eps = {worst:.3}", r.cases.len()))
}

fn decay() -> Result<String, String> {
    let cfg = DecayConfig::default();
    ensure(
        cfg.dims == [1, 2] && cfg.rho == 0.5 && cfg.order == 30 && cfg.seeds == 20 && cfg.window == [0.45, 0.55],
        || "unexpected default configuration".into(),
    )?;
    let r = decay_suite(&cfg).map_err(|e| e.to_string())?;
    for (d, &p) in cfg.dims.iter().zip(&r.passed) {
        ensure(p >= 18, || format!("d={d}: {p}/20 seeds in window"))?;
    }
    Ok(format!("seeds in [0.45, 0.55] per dim: {:?}/20", r.passed))
}

fn entire() -> Result<String, String> {
    let cfg = EntireConfig::default();
    ensure(
        cfg.dims == [1, 2] && cfg.max_order == 15 && cfg.seeds == 20,
        || "unexpected default configuration".into(),
    )?;
    let r = entire_suite(&cfg).map_err(|e| e.to_string())?;
    let checks: usize = r.cases.iter().map(|c| c.shells.len()).sum();
    ensure(r.violations == 0 && r.pass, || format!("{} violations", r.violations))?;
    Ok(format!("{checks} shell checks, 0 violations"))
}

fn sandwich() -> Result<String, String> {
    let cfg = SandwichConfig::default();
    ensure(
        cfg.trials == 50 && cfg.max_points <= 64 && cfg.dims.iter().all(|&d| d <= 3),
        || "unexpected default configuration".into(),
    )?;
    let r = sandwich_suite(&cfg).map_err(|e| e.to_string())?;
    ensure(r.cases.len() == 50, || format!("{} instances", r.cases.len()))?;
    for c in &r.cases {
        ensure(c.capacity_2eps <= c.covering_eps && c.covering_eps <= c.capacity_eps, || {
            format!("d={} n={} eps={}: {} {} {}", c.dim, c.points, c.eps, c.capacity_2eps, c.covering_eps, c.capacity_eps)
        })?;
    }
    ensure(r.failures == 0 && r.pass, || format!("{} failures", r.failures))?;
    let nontrivial = r.cases.iter().filter(|c| c.covering_eps > 1).count();
    Ok(format!("50 instances, {nontrivial} with covering number > 1"))
}

fn ball() -> Result<String, String> {
    let cfg = BallConfig::default();
    ensure(
        cfg.dims == [1, 2, 3] && cfg.eps == [0.5, 0.25] && cfg.seeds == 10 && cfg.radius == 1.0,
        || "unexpected default configuration".into(),
    )?;
    let r = ball_suite(&cfg).map_err(|e| e.to_string())?;
    for c in &r.cases {
        ensure(c.lower <= c.ln_size && c.ln_size <= c.upper, || {
            format!("d={} eps={} seed={}: {} not in [{}, {}]", c.dim, c.eps, c.seed, c.ln_size, c.lower, c.upper)
        })?;
    }
    ensure(r.failures == 0 && r.pass, || format!("{} failures", r.failures))?;
    Ok(format!("{} nets inside the bracket", r.cases.len()))
}

fn consistency() -> Result<String, String> {
    let sweep = eps_grid(1e-1, 1e-13, 13).map_err(|e| e.to_string())?;
    let mut checked = 0usize;
    for rho in [0.3, 0.5, 0.7] {
        for q in [1u32, 2, 3] {
            let p = AnalyticClassParams::new(rho, q).unwrap();
            for &e in &sweep {
                let b = analytic_bounds(&p, e);
                if let (true, true, Some(lo), Some(hi)) = (b.valid_lower, b.valid_upper, b.lower_ln, b.upper_ln) {
                    ensure(lo <= hi + LOG_SLACK, || format!("analytic rho={rho} q={q} eps={e}: {lo} > {hi}"))?;
                    checked += 1;
                }
            }
        }
    }
    let analytic_checked = checked;
    // The entire lower bound only becomes valid far below the f64 range.
    let deep: Vec<Eps> = (0..13)
        .map(|i| Eps::from_ln(-10f64 * 1e5f64.powf(i as f64 / 12.0)).unwrap())
        .collect();
    for big_q in [1u32, 2, 5] {
        for tau in [1.0, 0.5] {
            let p = EntireClassParams::standard(big_q, tau).unwrap();
            for &e in sweep.iter().chain(&deep) {
                let b = entire_bounds(&p, e);
                if let (true, true, Some(lo), Some(hi)) = (b.valid_lower, b.valid_upper, b.lower_ln, b.upper_ln) {
                    ensure(lo <= hi + LOG_SLACK, || format!("entire Q={big_q} tau={tau} eps={e}: {lo} > {hi}"))?;
                    checked += 1;
                }
            }
        }
    }
    let entire_checked = checked - analytic_checked;
    ensure(analytic_checked > 0 && entire_checked > 0, || {
        format!("valid grid points: analytic {analytic_checked}, entire {entire_checked}")
    })?;

    let mut widths = Vec::new();
    for q in [1u32, 2] {
        let p = AnalyticClassParams::new(0.5, q).unwrap();
        let class = ClassParams::Analytic(p);
        let spec = p.shell_spec();
        let mut prev = f64::INFINITY;
        for v in [1e-8, 1e-10, 1e-12] {
            let e = eps(v);
            let (lo, hi) = analytic_envelope(&p, e).map_err(|e| e.to_string())?;
            ensure(hi - lo < prev, || format!("q={q} eps={v}: envelope width {} did not shrink", hi - lo))?;
            prev = hi - lo;
            widths.push(hi - lo);
            let n1 = truncation_index(&class, e, TruncationKind::UpperN1).unwrap().value as u64;
            let n2 = truncation_index(&class, e, TruncationKind::LowerN2).unwrap().value as u64;
            let s = abstract_bounds(&spec, e, n2 + 1, n1 + 1).map_err(|e| e.to_string())?;
            let pivot = analytic_pivot_ln(&p, e);
            let upper = (s.upper_log_entropy().ok_or("no upper")? - pivot).exp();
            let lower = (s.lower_log_entropy().ok_or("no lower")? - pivot).exp();
            for (side, r) in [("upper", upper), ("lower", lower)] {
                ensure(lo - LOG_SLACK <= r && r <= hi + LOG_SLACK, || {
                    format!("q={q} eps={v}: {side} ratio {r} outside [{lo}, {hi}]")
                })?;
            }
        }
    }
    Ok(format!(
        "valid sweep points: analytic {analytic_checked}, entire {entire_checked}; envelope widths {widths:.3?}"
    ))
}

fn anchors() -> Result<String, String> {
    let a = ClassParams::Analytic(AnalyticClassParams::new(0.5, 1).unwrap());
    let n1 = truncation_index(&a, eps(0.01), TruncationKind::UpperN1)
        .map_err(|e| e.to_string())?
        .value;
    ensure(n1 == ANCHOR_N1, || format!("N1 = {n1}"))?;

    let fc = FunctionalClassParams::new(1, 0.5).unwrap();
    let f = functional_upper(&fc, eps(1e-3)).map_err(|e| e.to_string())?;
    let gamma = f.details["gamma"];
    let up = f.upper_ln.ok_or("functional upper missing")?;
    ensure((gamma - ANCHOR_GAMMA).abs() <= ANCHOR_GAMMA_TOL, || format!("gamma = {gamma}"))?;
    ensure((up - ANCHOR_FUNCTIONAL_UPPER_LN).abs() <= ANCHOR_FUNCTIONAL_UPPER_TOL, || {
        format!("functional upper_ln = {up}")
    })?;

    let ec = EntireClassParams::standard(30, 1.0).unwrap();
    let thr = entire_upper_threshold_ln(&ec).exp();
    ensure((thr / ANCHOR_ENTIRE_THRESHOLD - 1.0).abs() <= ANCHOR_ENTIRE_REL_TOL, || {
        format!("entire threshold = {thr:e}")
    })?;
    Ok(format!("N1 = {n1}, gamma = {gamma:.4}, upper_ln = {up:.3}, threshold = {thr:.4e}"))
}

fn cli_commands(series: &str) -> Vec<(&'static str, Vec<String>)> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        ("gen-analytic", s(&["gen", "analytic", "--dim", "2", "--rho", "0.5", "--seed", "3", "--out", "gen_a.json"])),
        ("gen-bandlimited", s(&["gen", "bandlimited", "--dim", "2", "--vmax", "1", "--seed", "3", "--out", "gen_b.json"])),
        ("coeffs", s(&["coeffs", "--spec", "gen_a.json", "--order", "8", "--out", "coeffs.json"])),
        ("bounds-analytic", s(&["bounds", "analytic", "--rho", "0.5", "--q", "2", "--eps", "1e-6", "--out", "b_a.json"])),
        ("bounds-entire", s(&["bounds", "entire", "--Q", "2", "--tau", "1", "--ln-eps", "-70000", "--out", "b_e.json"])),
        ("bounds-functional", s(&["bounds", "functional", "--q", "1", "--rho", "0.5", "--eps", "1e-3", "--out", "b_f.json"])),
        ("bounds-ball", s(&["bounds", "ball", "--dim", "3", "--eps", "0.1", "--out", "b_b.json"])),
        ("bounds-abstract", s(&["bounds", "abstract", "--class", "analytic", "--rho", "0.5", "--q", "1", "--eps", "1e-4", "--out", "b_s.json"])),
        ("curve", s(&["curve", "--class", "ball", "--dim", "2", "--eps-from", "0.5", "--eps-to", "0.1", "--points", "5", "--empirical", "--seed", "4", "--out", "curve.csv"])),
        ("net-ball", s(&["net", "ball", "--dim", "2", "--eps", "0.25", "--seed", "5", "--out", "net_b.json"])),
        ("net-ellipsoid", s(&["net", "ellipsoid", "--center", "0.5,-1", "--radii", "1,0.5", "--eps", "0.25", "--seed", "5", "--out", "net_e.json"])),
        ("codebook-build", s(&["codebook", "build", "--rho", "0.5", "--q", "1", "--eps", "0.25", "--seed", "6", "--out", "cb.json"])),
        ("encode", s(&["encode", "--series", series, "--codebook", "cb.json", "--out", "code.json"])),
        ("decode", s(&["decode", "--code", "code.json", "--codebook", "cb.json", "--out", "decoded.json"])),
        ("verify-decay", s(&["verify", "decay", "--seeds", "5", "--min-pass", "4", "--seed", "7", "--out", "v_d.json"])),
        ("verify-entire", s(&["verify", "entire", "--seeds", "3", "--seed", "7", "--out", "v_e.json"])),
        ("verify-sandwich", s(&["verify", "sandwich", "--dim", "2", "--trials", "10", "--seed", "7", "--out", "v_s.json"])),
        ("verify-roundtrip", s(&["verify", "roundtrip", "--rhos", "0.5", "--qs", "1", "--eps", "0.5", "--members", "3", "--seed", "7", "--out", "v_r.json"])),
    ]
}

/// Command name, artifact bytes and manifest bytes.
type Artifacts = Vec<(String, Vec<u8>, Vec<u8>)>;

fn run_all_commands(dir: &Path) -> Result<Artifacts, String> {
    let member = random_member(&AnalyticClassParams::new(0.5, 1).unwrap(), 11).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("member.json"), serde_json::to_vec(&member).unwrap()).map_err(|e| e.to_string())?;
    let mut artifacts = Vec::new();
    for (name, args) in cli_commands("member.json") {
        let out = Command::new(env!("CARGO_BIN_EXE_entropy-grid"))
            .args(&args)
            .current_dir(dir)
            .env_remove("ENTROPY_GRID_MAX_SAMPLES")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!("{name} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
        })?;
        let path = dir.join(args.last().unwrap());
        let manifest = dir.join(format!("{}.manifest.json", args.last().unwrap()));
        let a = std::fs::read(&path).map_err(|e| format!("{name}: {e}"))?;
        let m = std::fs::read(&manifest).map_err(|e| format!("{name} manifest: {e}"))?;
        artifacts.push((name.to_string(), a, m));
    }
    Ok(artifacts)
}

fn determinism() -> Result<String, String> {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_all_commands(a.path())?;
    let second = run_all_commands(b.path())?;
    for ((name, a1, m1), (_, a2, m2)) in first.iter().zip(&second) {
        ensure(a1 == a2, || format!("{name}: artifact differs between runs"))?;
        ensure(m1 == m2, || format!("{name}: manifest differs between runs"))?;
    }
    Ok(format!("{} commands byte-identical across two runs", first.len()))
}

#[test]
fn acceptance_criteria() {
    let outcomes = vec![
        run(1, "roundtrip guarantee", 60, roundtrip),
        run(2, "coefficient decay", 120, decay),
        run(3, "entire shell bound", 120, entire),
        run(4, "packing-covering sandwich", 60, sandwich),
        run(5, "ball entropy bracket", 120, ball),
        run(6, "bound consistency", 5, consistency),
        run(7, "numeric anchors", 1, anchors),
        run(8, "CLI determinism", 30, determinism),
    ];
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
