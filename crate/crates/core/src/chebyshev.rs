//! Multivariate Chebyshev analysis on axis-aligned boxes.
//!
//! The basis is the orthonormal family `p_0 = 1`, `p_m = √2·T_m` under the
//! product Chebyshev weight, scaled to a box `I_r = ∏[-r_j, r_j]`. Coefficients
//! are computed with the tensor Gauss–Chebyshev rule; shells group the
//! coefficients of equal total degree.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{enumerate_shell, shell_dim_usize, MultiIndex};
use crate::error::{invalid, Error, Result};

/// Default quadrature-node budget (total nodes `m^d`).
pub const DEFAULT_NODE_CAP: usize = 1 << 22;

/// Default nodes per axis for sup-norm estimation.
pub const DEFAULT_SUP_GRID: usize = 64;

/// The box `∏[-r_j, r_j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct IntervalBox {
    radii: Vec<f64>,
}

impl IntervalBox {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(invalid("box must have at least one axis"));
        }
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(invalid(format!("box radius must be positive and finite, got {r}")));
        }
        Ok(IntervalBox { radii })
    }

    /// `[-1, 1]^d`.
    pub fn unit(d: usize) -> Self {
        IntervalBox {
            radii: vec![1.0; d.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn contains(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (axis, (&v, &r)) in x.iter().zip(&self.radii).enumerate() {
            if !(v.abs() <= r) {
                return Err(Error::OutsideBox {
                    axis,
                    value: v,
                    radius: r,
                });
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for IntervalBox {
    type Error = Error;
    fn try_from(radii: Vec<f64>) -> Result<Self> {
        IntervalBox::new(radii)
    }
}

impl From<IntervalBox> for Vec<f64> {
    fn from(b: IntervalBox) -> Vec<f64> {
        b.radii
    }
}

/// A finitely supported Chebyshev expansion on a box.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebSeries {
    domain: IntervalBox,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl ChebSeries {
    pub fn new(domain: IntervalBox, coeffs: BTreeMap<MultiIndex, f64>) -> Result<Self> {
        let d = domain.dim();
        for (k, v) in &coeffs {
            if k.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: k.dim(),
                });
            }
            if !v.is_finite() {
                return Err(invalid(format!("coefficient at {k:?} is not finite")));
            }
        }
        Ok(ChebSeries { domain, coeffs })
    }

    pub fn zero(domain: IntervalBox) -> Self {
        ChebSeries {
            domain,
            coeffs: BTreeMap::new(),
        }
    }

    /// Build from `(degrees, value)` pairs; later duplicates overwrite earlier ones.
    pub fn from_pairs<I>(domain: IntervalBox, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut coeffs = BTreeMap::new();
        for (k, v) in pairs {
            coeffs.insert(MultiIndex::new(k)?, v);
        }
        ChebSeries::new(domain, coeffs)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &IntervalBox {
        &self.domain
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.coeffs
    }

    pub fn coeff(&self, k: &MultiIndex) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest order present, or `None` for the empty series.
    pub fn max_order(&self) -> Option<u64> {
        self.coeffs.keys().next_back().map(MultiIndex::order)
    }

    /// Euclidean norm of all coefficients (the weighted L² norm by Parseval).
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Coefficient-space L² distance between two series on the same box.
    pub fn l2_distance(&self, other: &ChebSeries) -> Result<f64> {
        if self.domain != other.domain {
            return Err(invalid("series live on different boxes"));
        }
        let mut acc = 0.0;
        for (k, v) in &self.coeffs {
            let d = v - other.coeff(k);
            acc += d * d;
        }
        for (k, v) in &other.coeffs {
            if !self.coeffs.contains_key(k) {
                acc += v * v;
            }
        }
        Ok(acc.sqrt())
    }

    /// Multiply every coefficient by `factor`.
    pub fn scaled(&self, factor: f64) -> ChebSeries {
        ChebSeries {
            domain: self.domain.clone(),
            coeffs: self.coeffs.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
        }
    }

    /// Order-`j` coefficients as a dense vector in lexicographic index order.
    pub fn shell_vector(&self, j: u64) -> Result<Vec<f64>> {
        let idx = enumerate_shell(j, self.dim() as u32)?;
        Ok(idx.iter().map(|k| self.coeff(k)).collect())
    }

    /// Inverse of [`ChebSeries::shell_vector`]: shell `j` is `shells[j]`.
    /// Exact zeros are dropped.
    pub fn from_shell_vectors(domain: IntervalBox, shells: &[Vec<f64>]) -> Result<Self> {
        let d = domain.dim() as u32;
        let mut coeffs = BTreeMap::new();
        for (j, v) in shells.iter().enumerate() {
            let size = shell_dim_usize(j as u64, d)?;
            if v.len() != size {
                return Err(Error::DimensionMismatch {
                    expected: size,
                    got: v.len(),
                });
            }
            for (k, &c) in enumerate_shell(j as u64, d)?.into_iter().zip(v) {
                if c != 0.0 {
                    coeffs.insert(k, c);
                }
            }
        }
        ChebSeries::new(domain, coeffs)
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffEntry {
    k: Vec<u32>,
    v: f64,
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    dim: usize,
    radii: Vec<f64>,
    coeffs: Vec<CoeffEntry>,
}

impl Serialize for ChebSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesRepr {
            dim: self.dim(),
            radii: self.domain.radii.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, &v)| CoeffEntry {
                    k: k.degrees().to_vec(),
                    v,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChebSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SeriesRepr::deserialize(d)?;
        let domain = IntervalBox::new(repr.radii).map_err(D::Error::custom)?;
        if domain.dim() != repr.dim {
            return Err(D::Error::custom(format!(
                "dim {} does not match {} radii",
                repr.dim,
                domain.dim()
            )));
        }
        ChebSeries::from_pairs(domain, repr.coeffs.into_iter().map(|e| (e.k, e.v)))
            .map_err(D::Error::custom)
    }
}

/// Values `p_0(x), ..., p_n(x)` of the orthonormal basis at a real point.
pub fn basis_values(n: usize, x: f64) -> Vec<f64> {
    let mut t = Vec::with_capacity(n + 1);
    t.push(1.0);
    if n >= 1 {
        t.push(x);
    }
    for m in 1..n {
        let next = 2.0 * x * t[m] - t[m - 1];
        t.push(next);
    }
    for v in t.iter_mut().skip(1) {
        *v *= std::f64::consts::SQRT_2;
    }
    t
}

/// Classical `T_m(z)` by the three-term recurrence.
pub fn chebyshev_t(m: u32, z: Complex64) -> Complex64 {
    let (mut prev, mut cur) = (Complex64::new(1.0, 0.0), z);
    if m == 0 {
        return prev;
    }
    for _ in 1..m {
        let next = 2.0 * z * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `∏_j p_{k_j}(z_j / r_j)` at a complex point.
pub fn eval_poly(k: &MultiIndex, z: &[Complex64], domain: &IntervalBox) -> Result<Complex64> {
    let d = domain.dim();
    if k.dim() != d || z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if k.dim() != d { k.dim() } else { z.len() },
        });
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for ((&kj, &zj), &rj) in k.degrees().iter().zip(z).zip(domain.radii()) {
        let t = chebyshev_t(kj, zj / rj);
        acc *= if kj == 0 { t } else { t * std::f64::consts::SQRT_2 };
    }
    Ok(acc)
}

/// Gauss–Chebyshev nodes `r·cos((2i+1)π/(2m))`, `i = 0..m`.
pub fn gauss_chebyshev_nodes(m: usize, r: f64) -> Vec<f64> {
    (0..m)
        .map(|i| r * ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos())
        .collect()
}

/// Chebyshev extrema `r·cos(iπ/(g-1))`, `i = 0..g`.
pub fn chebyshev_extrema(g: usize, r: f64) -> Vec<f64> {
    (0..g)
        .map(|i| r * (i as f64 * std::f64::consts::PI / (g - 1) as f64).cos())
        .collect()
}

fn check_node_budget(m: usize, d: usize, cap: usize) -> Result<usize> {
    let total = (m as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(Error::CapExceeded {
            what: format!("tensor grid {m}^{d}"),
            requested: total.to_string(),
            limit: cap.to_string(),
        });
    }
    Ok(total as usize)
}

/// Evaluate `f` on the full tensor grid built from per-axis node lists.
/// Values are stored with the first axis varying slowest.
fn tabulate<F>(nodes: &[Vec<f64>], f: &F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let d = nodes.len();
    let sizes: Vec<usize> = nodes.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut x = vec![0.0; d];
            let mut rem = flat;
            for axis in (0..d).rev() {
                x[axis] = nodes[axis][rem % sizes[axis]];
                rem /= sizes[axis];
            }
            let v = f(&x)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Evaluator(format!("non-finite value at {x:?}")))
            }
        })
        .collect()
}

/// Chebyshev coefficients of all orders `≤ n_max` by the tensor Gauss–Chebyshev rule
/// with `m` nodes per axis.
pub fn compute_coeffs<F>(f: F, n_max: u32, m: usize, domain: &IntervalBox) -> Result<ChebSeries>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    compute_coeffs_capped(f, n_max, m, domain, DEFAULT_NODE_CAP)
}

pub fn compute_coeffs_capped<F>(
    f: F,
    n_max: u32,
    m: usize,
    domain: &IntervalBox,
    node_cap: usize,
) -> Result<ChebSeries>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let d = domain.dim();
    if m < n_max as usize + 1 {
        return Err(invalid(format!(
            "need at least n_max + 1 = {} nodes per axis, got {m}",
            n_max + 1
        )));
    }
    check_node_budget(m, d, node_cap)?;
    let nodes: Vec<Vec<f64>> = domain
        .radii()
        .iter()
        .map(|&r| gauss_chebyshev_nodes(m, r))
        .collect();
    let mut data = tabulate(&nodes, &f)?;

    // basis[k][i] = p_k(cos θ_i) / m
    let kn = n_max as usize + 1;
    let basis: Vec<Vec<f64>> = (0..kn)
        .map(|k| {
            let scale = if k == 0 { 1.0 } else { std::f64::consts::SQRT_2 } / m as f64;
            (0..m)
                .map(|i| {
                    let theta = (2 * i + 1) as f64 * std::f64::consts::PI / (2 * m) as f64;
                    scale * (k as f64 * theta).cos()
                })
                .collect()
        })
        .collect();

    // Contract one axis at a time, replacing its node dimension by a degree dimension.
    let mut shape = vec![m; d];
    for axis in 0..d {
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut next = vec![0.0; outer * kn * inner];
        for o in 0..outer {
            for (k, bk) in basis.iter().enumerate() {
                let dst = &mut next[(o * kn + k) * inner..(o * kn + k + 1) * inner];
                for (i, &w) in bk.iter().enumerate() {
                    let src = &data[(o * m + i) * inner..(o * m + i + 1) * inner];
                    for (a, &b) in dst.iter_mut().zip(src) {
                        *a += w * b;
                    }
                }
            }
        }
        shape[axis] = kn;
        data = next;
    }

    let mut coeffs = BTreeMap::new();
    for n in 0..=n_max as u64 {
        for k in enumerate_shell(n, d as u32)? {
            let flat = k
                .degrees()
                .iter()
                .fold(0usize, |acc, &kj| acc * kn + kj as usize);
            coeffs.insert(k, data[flat]);
        }
    }
    ChebSeries::new(domain.clone(), coeffs)
}

/// The order-`j` part `S_j`.
pub fn shell_project(s: &ChebSeries, j: u64) -> ChebSeries {
    ChebSeries {
        domain: s.domain.clone(),
        coeffs: s
            .coeffs
            .iter()
            .filter(|(k, _)| k.order() == j)
            .map(|(k, &v)| (k.clone(), v))
            .collect(),
    }
}

/// The partial sum `s_n`: all orders `< n`.
pub fn partial_sum(s: &ChebSeries, n: u64) -> ChebSeries {
    ChebSeries {
        domain: s.domain.clone(),
        coeffs: s
            .coeffs
            .iter()
            .filter(|(k, _)| k.order() < n)
            .map(|(k, &v)| (k.clone(), v))
            .collect(),
    }
}

fn max_degree_per_axis(s: &ChebSeries) -> Vec<usize> {
    let mut out = vec![0usize; s.dim()];
    for k in s.coeffs.keys() {
        for (o, &kj) in out.iter_mut().zip(k.degrees()) {
            *o = (*o).max(kj as usize);
        }
    }
    out
}

fn eval_with_tables(s: &ChebSeries, tables: &[Vec<f64>]) -> f64 {
    s.coeffs
        .iter()
        .map(|(k, &c)| {
            k.degrees()
                .iter()
                .zip(tables)
                .fold(c, |acc, (&kj, t)| acc * t[kj as usize])
        })
        .sum()
}

/// Evaluate the series at a real point of its box.
pub fn eval_series(s: &ChebSeries, x: &[f64]) -> Result<f64> {
    s.domain.contains(x)?;
    let degs = max_degree_per_axis(s);
    let tables: Vec<Vec<f64>> = x
        .iter()
        .zip(s.domain.radii())
        .zip(&degs)
        .map(|((&xj, &rj), &n)| basis_values(n, xj / rj))
        .collect();
    Ok(eval_with_tables(s, &tables))
}

/// Evaluate the series at a complex point; no domain restriction.
pub fn eval_series_complex(s: &ChebSeries, z: &[Complex64]) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in &s.coeffs {
        acc += c * eval_poly(k, z, &s.domain)?;
    }
    Ok(acc)
}

/// Norm used for shell measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Norm {
    L2,
    Sup { grid: usize },
}

impl Norm {
    pub fn sup_default() -> Self {
        Norm::Sup {
            grid: DEFAULT_SUP_GRID,
        }
    }
}

/// A measured shell norm; `lower_estimate` is set for grid-based sup norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellNorm {
    pub value: f64,
    pub lower_estimate: bool,
}

/// `‖S_j(s)‖` in the requested norm.
pub fn shell_norm(s: &ChebSeries, j: u64, norm: Norm) -> Result<ShellNorm> {
    shell_norm_capped(s, j, norm, DEFAULT_NODE_CAP)
}

pub fn shell_norm_capped(s: &ChebSeries, j: u64, norm: Norm, node_cap: usize) -> Result<ShellNorm> {
    let shell = shell_project(s, j);
    match norm {
        Norm::L2 => Ok(ShellNorm {
            value: shell.l2_norm(),
            lower_estimate: false,
        }),
        Norm::Sup { grid } => {
            if grid < 2 {
                return Err(invalid("sup-norm grid needs at least 2 nodes per axis"));
            }
            if shell.is_empty() {
                return Ok(ShellNorm {
                    value: 0.0,
                    lower_estimate: true,
                });
            }
            Ok(ShellNorm {
                value: sup_on_extrema(&shell, grid, node_cap)?,
                lower_estimate: true,
            })
        }
    }
}

/// Max of `|s|` over the tensor Chebyshev-extrema grid.
pub fn sup_on_extrema(s: &ChebSeries, grid: usize, node_cap: usize) -> Result<f64> {
    let d = s.dim();
    let total = check_node_budget(grid, d, node_cap)?;
    let degs = max_degree_per_axis(s);
    // tables[axis][i][k] = p_k(cos(iπ/(g-1)))
    let tables: Vec<Vec<Vec<f64>>> = degs
        .iter()
        .map(|&n| {
            (0..grid)
                .map(|i| {
                    let theta = i as f64 * std::f64::consts::PI / (grid - 1) as f64;
                    (0..=n)
                        .map(|k| {
                            if k == 0 {
                                1.0
                            } else {
                                std::f64::consts::SQRT_2 * (k as f64 * theta).cos()
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let max = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut at: Vec<Vec<f64>> = vec![Vec::new(); d];
            for axis in (0..d).rev() {
                at[axis] = tables[axis][rem % grid].clone();
                rem /= grid;
            }
            eval_with_tables(s, &at).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(max)
}

/// Weighted L² inner product of two functions under the tensor Gauss–Chebyshev rule.
pub fn quadrature_inner<F, G>(f: F, g: G, m: usize, domain: &IntervalBox) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    G: Fn(&[f64]) -> Result<f64> + Sync,
{
    let d = domain.dim();
    let total = check_node_budget(m, d, DEFAULT_NODE_CAP)?;
    let nodes: Vec<Vec<f64>> = domain
        .radii()
        .iter()
        .map(|&r| gauss_chebyshev_nodes(m, r))
        .collect();
    let prod = |x: &[f64]| -> Result<f64> { Ok(f(x)? * g(x)?) };
    let values = tabulate(&nodes, &prod)?;
    Ok(pairwise_sum(&values) / total as f64)
}

/// Pairwise summation in fixed index order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
