//! Randomized greedy ε-nets on balls and ellipsoids, and exact brute-force
//! packing and covering numbers for small point sets.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seed::rng_from_seed;

/// Default cap on the number of samples drawn for one net.
pub const DEFAULT_MAX_SAMPLES: u64 = 2_000_000;

/// Environment variable overriding [`DEFAULT_MAX_SAMPLES`].
pub const MAX_SAMPLES_ENV: &str = "ENTROPY_GRID_MAX_SAMPLES";

/// Largest point set accepted by the exact searches.
pub const BRUTE_FORCE_POINT_CAP: usize = 512;

/// Largest net size explored by the exact set-cover search, per connected component.
pub const BRUTE_FORCE_NET_CAP: usize = 24;

const PARALLEL_SCAN_THRESHOLD: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub max_samples: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            max_samples: DEFAULT_MAX_SAMPLES,
        }
    }
}

impl NetConfig {
    /// Default config, with the cap taken from `ENTROPY_GRID_MAX_SAMPLES` when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(MAX_SAMPLES_ENV) {
            Ok(v) => {
                let max_samples = v
                    .trim()
                    .parse::<u64>()
                    .ok()
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| invalid(format!("{MAX_SAMPLES_ENV} must be a positive integer, got {v:?}")))?;
                Ok(NetConfig { max_samples })
            }
            Err(_) => Ok(NetConfig::default()),
        }
    }
}

/// Sample count for a probabilistic ε/2-net of the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCount {
    pub count: u64,
    /// Natural log of the uncapped requirement.
    pub required_ln: f64,
    /// Set when the requirement exceeded the cap; the probabilistic guarantee is void.
    pub guarantee_void: bool,
}

/// `⌈(4/ε)^d · ln((12/ε)^d / δ)⌉`, capped at `cfg.max_samples`.
pub fn required_samples(d: usize, eps: f64, delta: f64, cfg: &NetConfig) -> Result<SampleCount> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let df = d as f64;
    let log_arg = df * (12.0 / eps).ln() - delta.ln();
    if log_arg <= 0.0 {
        return Ok(SampleCount {
            count: 1,
            required_ln: f64::NEG_INFINITY,
            guarantee_void: false,
        });
    }
    let required_ln = df * (4.0 / eps).ln() + log_arg.ln();
    if required_ln > (cfg.max_samples as f64).ln() {
        return Ok(SampleCount {
            count: cfg.max_samples,
            required_ln,
            guarantee_void: true,
        });
    }
    let value = (4.0 / eps).powi(d as i32) * log_arg;
    Ok(SampleCount {
        count: (value.ceil() as u64).clamp(1, cfg.max_samples),
        required_ln,
        guarantee_void: false,
    })
}

/// `m` i.i.d. uniform points in the Euclidean unit ball of `R^d`.
pub fn sample_ball(d: usize, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let inv_d = 1.0 / d as f64;
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u: f64 = rng.gen();
        if norm == 0.0 {
            continue;
        }
        let scale = u.powf(inv_d) / norm;
        out.push(g.into_iter().map(|v| v * scale).collect());
    }
    Ok(out)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A finite ε-net with its construction metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsNet {
    pub dim: usize,
    pub eps: f64,
    pub separation: f64,
    pub norm: String,
    pub seed: Option<u64>,
    pub sample_count: u64,
    pub guarantee_void: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
}

impl EpsNet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and distance of the nearest point; ties resolve to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> Result<(usize, f64)> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut best = (0usize, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d = euclidean(p, x);
            if d < best.1 {
                best = (i, d);
            }
        }
        if self.points.is_empty() {
            return Err(invalid("net is empty"));
        }
        Ok(best)
    }
}

fn too_close(kept: &[Vec<f64>], p: &[f64], sep: f64) -> bool {
    if kept.len() >= PARALLEL_SCAN_THRESHOLD {
        kept.par_iter().any(|q| euclidean(q, p) < sep)
    } else {
        kept.iter().any(|q| euclidean(q, p) < sep)
    }
}

fn greedy_points(seeded: Vec<Vec<f64>>, points: &[Vec<f64>], sep: f64) -> Vec<Vec<f64>> {
    let mut kept = seeded;
    for p in points {
        if !too_close(&kept, p, sep) {
            kept.push(p.clone());
        }
    }
    kept
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let d = points.first().map(Vec::len).ok_or_else(|| invalid("point set is empty"))?;
    if d == 0 {
        return Err(invalid("points must have at least one coordinate"));
    }
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    Ok(d)
}

/// Keep each point, in order, iff it lies at distance `≥ sep` from all kept points.
pub fn greedy_net(points: &[Vec<f64>], sep: f64) -> Result<EpsNet> {
    let d = check_points(points)?;
    if !(sep.is_finite() && sep > 0.0) {
        return Err(invalid(format!("separation must be positive, got {sep}")));
    }
    Ok(EpsNet {
        dim: d,
        eps: 2.0 * sep,
        separation: sep,
        norm: "euclidean".to_string(),
        seed: None,
        sample_count: points.len() as u64,
        guarantee_void: false,
        center: None,
        radii: None,
        points: greedy_points(Vec::new(), points, sep),
    })
}

/// An ε-net of the ellipsoid `{center + radii∘y : |y| ≤ 1}`.
///
/// The unit-ball net is built at `eps' = eps / max r_j` and scaled. When
/// `include_center` is set the center is the first net point.
pub fn net_ellipsoid(
    center: &[f64],
    radii: &[f64],
    eps: f64,
    delta: f64,
    seed: u64,
    include_center: bool,
    cfg: &NetConfig,
) -> Result<EpsNet> {
    let d = center.len();
    if d == 0 || radii.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: radii.len(),
        });
    }
    if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(invalid(format!("ellipsoid radius must be positive, got {r}")));
    }
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let eps_unit = eps / rmax;
    let count = required_samples(d, eps_unit, delta, cfg)?;
    let samples = sample_ball(d, count.count as usize, seed)?;
    let seeded = if include_center { vec![vec![0.0; d]] } else { Vec::new() };
    let unit = greedy_points(seeded, &samples, eps_unit / 2.0);
    let points = unit
        .into_iter()
        .map(|y| y.iter().zip(radii).zip(center).map(|((yj, rj), cj)| cj + rj * yj).collect())
        .collect();
    Ok(EpsNet {
        dim: d,
        eps,
        separation: rmin * eps_unit / 2.0,
        norm: "euclidean".to_string(),
        seed: Some(seed),
        sample_count: count.count,
        guarantee_void: count.guarantee_void,
        center: Some(center.to_vec()),
        radii: Some(radii.to_vec()),
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetReport {
    /// Largest distance from a test point to its nearest net point.
    pub coverage: f64,
    /// Smallest pairwise distance in the net; absent for single-point nets.
    pub min_pairwise: Option<f64>,
    pub covered: bool,
    pub separated: bool,
    pub pass: bool,
}

pub fn verify_net(net: &EpsNet, test_points: &[Vec<f64>]) -> Result<NetReport> {
    if let Some(p) = test_points.iter().find(|p| p.len() != net.dim) {
        return Err(Error::DimensionMismatch {
            expected: net.dim,
            got: p.len(),
        });
    }
    if net.points.is_empty() {
        return Err(invalid("net is empty"));
    }
    let coverage = test_points
        .par_iter()
        .map(|x| {
            net.points
                .iter()
                .map(|p| euclidean(p, x))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    let min_pairwise = (0..net.points.len())
        .into_par_iter()
        .map(|i| {
            net.points[i + 1..]
                .iter()
                .map(|q| euclidean(&net.points[i], q))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    let min_pairwise = min_pairwise.is_finite().then_some(min_pairwise);
    let covered = coverage <= net.eps;
    let separated = min_pairwise.is_none_or(|m| m >= net.separation * (1.0 - 1e-12));
    Ok(NetReport {
        coverage,
        min_pairwise,
        covered,
        separated,
        pass: covered && separated,
    })
}

/// Fixed-width bitset over at most [`BRUTE_FORCE_POINT_CAP`] elements.
#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn and_not(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & !b).collect())
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            let mut b = bits;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let t = b.trailing_zeros() as usize;
                b &= b - 1;
                Some(w * 64 + t)
            })
        })
    }
    fn first(&self) -> Option<usize> {
        self.iter().next()
    }
}

/// `adj[i]` = points `j ≠ i` with `related(i, j)`.
fn relation(points: &[Vec<f64>], related: impl Fn(f64) -> bool) -> Vec<Bits> {
    let n = points.len();
    let mut adj = vec![Bits::empty(n); n];
    for i in 0..n {
        for j in i + 1..n {
            if related(euclidean(&points[i], &points[j])) {
                adj[i].set(j);
                adj[j].set(i);
            }
        }
    }
    adj
}

fn components(adj: &[Bits]) -> Vec<Bits> {
    let n = adj.len();
    let mut seen = Bits::empty(n);
    let mut out = Vec::new();
    for s in 0..n {
        if seen.get(s) {
            continue;
        }
        let mut comp = Bits::empty(n);
        let mut stack = vec![s];
        comp.set(s);
        seen.set(s);
        while let Some(v) = stack.pop() {
            for u in adj[v].iter() {
                if !seen.get(u) {
                    seen.set(u);
                    comp.set(u);
                    stack.push(u);
                }
            }
        }
        out.push(comp);
    }
    out
}

fn check_brute(points: &[Vec<f64>], eps: f64) -> Result<()> {
    if points.len() > BRUTE_FORCE_POINT_CAP {
        return Err(Error::CapExceeded {
            what: "brute-force point set".to_string(),
            requested: points.len().to_string(),
            limit: BRUTE_FORCE_POINT_CAP.to_string(),
        });
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if !points.is_empty() {
        check_points(points)?;
    }
    Ok(())
}

/// Size of a clique cover of `cand` in the conflict graph, an upper bound on
/// any independent set inside `cand`.
fn clique_cover_bound(adj: &[Bits], cand: &Bits) -> usize {
    let mut rest = cand.clone();
    let mut cliques = 0;
    while let Some(v) = rest.first() {
        rest.clear(v);
        let mut common = adj[v].and(&rest);
        while let Some(u) = common.first() {
            rest.clear(u);
            common = common.and(&adj[u]);
        }
        cliques += 1;
    }
    cliques
}

fn max_independent(adj: &[Bits], mut cand: Bits, mut size: usize, best: &mut usize) {
    // A vertex with at most one neighbour in `cand` belongs to some maximum independent set.
    loop {
        let Some(v) = cand.iter().find(|&v| adj[v].and(&cand).count() <= 1) else {
            break;
        };
        cand = cand.and_not(&adj[v]);
        cand.clear(v);
        size += 1;
    }
    if cand.is_empty() {
        *best = (*best).max(size);
        return;
    }
    if size + clique_cover_bound(adj, &cand) <= *best {
        return;
    }
    let v = cand
        .iter()
        .max_by_key(|&v| (adj[v].and(&cand).count(), std::cmp::Reverse(v)))
        .expect("non-empty");
    let mut without_nbrs = cand.and_not(&adj[v]);
    without_nbrs.clear(v);
    max_independent(adj, without_nbrs, size + 1, best);
    let mut without_v = cand;
    without_v.clear(v);
    max_independent(adj, without_v, size, best);
}

/// Exact maximal number of points of `points` that are pairwise more than `eps` apart.
///
/// Separation is strict so that packing and covering numbers sandwich each
/// other even when distances tie exactly.
pub fn brute_capacity(points: &[Vec<f64>], eps: f64) -> Result<usize> {
    check_brute(points, eps)?;
    let conflict = relation(points, |d| d <= eps);
    let mut total = 0;
    for comp in components(&conflict) {
        let mut best = 0;
        max_independent(&conflict, comp, 0, &mut best);
        total += best;
    }
    Ok(total)
}

struct CoverSearch<'a> {
    /// `reach[c]` = points within `eps` of `c`, including `c`; symmetric.
    reach: &'a [Bits],
    /// `shadow[u]` = points sharing at least one potential center with `u`.
    shadow: Vec<Bits>,
    best: usize,
}

impl CoverSearch<'_> {
    /// Points of `uncovered` that pairwise share no center in `pool`; each needs its own.
    fn disjoint_bound(&self, uncovered: &Bits, order: &[usize]) -> usize {
        let mut blocked = Bits::empty(self.reach.len());
        let mut picks = 0;
        for &u in order {
            if uncovered.get(u) && !blocked.get(u) {
                picks += 1;
                for (w, s) in blocked.0.iter_mut().zip(&self.shadow[u].0) {
                    *w |= s;
                }
            }
        }
        picks
    }

    fn search(&mut self, uncovered: &Bits, pool: &Bits, chosen: usize) {
        if uncovered.is_empty() {
            self.best = self.best.min(chosen);
            return;
        }
        if chosen + 1 >= self.best {
            return;
        }
        // Uncovered points ordered by how few centers remain for them.
        let mut order: Vec<(usize, usize)> = uncovered
            .iter()
            .map(|u| (self.reach[u].and(pool).count(), u))
            .collect();
        if order.iter().any(|&(n, _)| n == 0) {
            return;
        }
        order.sort_unstable();
        let ordered: Vec<usize> = order.iter().map(|&(_, u)| u).collect();
        let max_gain = pool
            .iter()
            .map(|c| self.reach[c].and(uncovered).count())
            .max()
            .unwrap_or(0);
        let need = uncovered
            .count()
            .div_ceil(max_gain)
            .max(self.disjoint_bound(uncovered, &ordered));
        if chosen + need >= self.best {
            return;
        }
        let target = ordered[0];
        let mut options: Vec<(usize, usize)> = self.reach[target]
            .and(pool)
            .iter()
            .map(|c| (c, self.reach[c].and(uncovered).count()))
            .collect();
        options.sort_by_key(|&(c, g)| (std::cmp::Reverse(g), c));
        let mut remaining = pool.clone();
        for (c, _) in options {
            let next = uncovered.and_not(&self.reach[c]);
            self.search(&next, &remaining, chosen + 1);
            // Later branches never pick `c` again.
            remaining.clear(c);
        }
    }
}

fn greedy_cover(reach: &[Bits], comp: &Bits) -> usize {
    let mut uncovered = comp.clone();
    let mut used = 0;
    while !uncovered.is_empty() {
        let c = comp
            .iter()
            .max_by_key(|&c| (reach[c].and(&uncovered).count(), std::cmp::Reverse(c)))
            .expect("non-empty");
        uncovered = uncovered.and_not(&reach[c]);
        used += 1;
    }
    used
}

/// Exact minimal number of points of `points` whose closed `eps`-balls cover `points`.
pub fn brute_covering(points: &[Vec<f64>], eps: f64) -> Result<usize> {
    check_brute(points, eps)?;
    let near = relation(points, |d| d <= eps);
    let reach: Vec<Bits> = near
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let mut r = b.clone();
            r.set(i);
            r
        })
        .collect();
    let mut total = 0;
    for comp in components(&near) {
        let upper = greedy_cover(&reach, &comp);
        let shadow: Vec<Bits> = (0..reach.len())
            .map(|u| {
                let mut acc = Bits::empty(reach.len());
                for c in reach[u].iter() {
                    for (w, r) in acc.0.iter_mut().zip(&reach[c].0) {
                        *w |= r;
                    }
                }
                acc
            })
            .collect();
        let mut s = CoverSearch {
            reach: &reach,
            shadow,
            best: upper,
        };
        s.search(&comp, &comp, 0);
        let exact = s.best;
        if exact > BRUTE_FORCE_NET_CAP {
            return Err(Error::CapExceeded {
                what: "brute-force net size in one component".to_string(),
                requested: exact.to_string(),
                limit: BRUTE_FORCE_NET_CAP.to_string(),
            });
        }
        total += exact;
    }
    Ok(total)
}
