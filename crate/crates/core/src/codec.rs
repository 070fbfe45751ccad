//! Product-of-shell-balls codebooks for the analytic class.
//!
//! A function is truncated to its first `M` shells; each shell's coefficient
//! vector is quantized to the nearest point of an `η₁`-net of the ball of
//! radius `ρ^j` in `R^{b_j}`. With `η₁ = ε/(2√M)` the quantization error is at
//! most `ε/2` and the truncation tail at most `ε/2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::Eps;
use crate::chebyshev::{shell_norm, ChebSeries, IntervalBox, Norm};
use crate::classes::{truncation_index, AnalyticClassParams, ClassParams, TruncationKind, L2_TOLERANCE};
use crate::combinatorics::shell_dim_usize;
use crate::error::{invalid, Error, Result};
use crate::netgen::{net_ellipsoid, required_samples, EpsNet, NetConfig};
use crate::seed::{derive_seed, sha256_hex};

/// Identifier of the digest stored in codebook files.
pub const HASH_ALGORITHM: &str = "sha256 of canonical JSON (sorted keys, compact, hash field removed)";

/// Upper limit on the projected number of stored coordinates (samples plus
/// codewords) over all shells.
pub const DEFAULT_STORAGE_CAP: u64 = 1 << 26;

/// Compact JSON with object keys in sorted order.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&v)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub class: AnalyticClassParams,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub eta1: f64,
    pub shell_dims: Vec<usize>,
    pub shell_radii: Vec<f64>,
    pub shell_sizes: Vec<usize>,
    /// `Σ_j ln |net_j|`.
    pub log_size: f64,
    pub guarantee_void: bool,
    pub shells: Vec<EpsNet>,
    pub hash_algorithm: String,
    pub hash: String,
}

impl Codebook {
    /// Digest of the codebook with its `hash` field removed.
    pub fn compute_hash(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("hash");
        }
        Ok(sha256_hex(serde_json::to_string(&v)?.as_bytes()))
    }

    /// Parse a codebook and check its stored digest.
    pub fn from_json(text: &str) -> Result<Self> {
        let cb: Codebook = serde_json::from_str(text)?;
        let found = cb.compute_hash()?;
        if found != cb.hash {
            return Err(Error::HashMismatch {
                expected: cb.hash.clone(),
                found,
            });
        }
        Ok(cb)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Code {
    pub codebook_hash: String,
    pub indices: Vec<usize>,
}

/// Build the codebook for `class` at accuracy `eps`; the per-shell nets fail
/// jointly with probability at most `delta`.
pub fn build_codebook(class: &AnalyticClassParams, eps: f64, delta: f64, seed: u64) -> Result<Codebook> {
    build_codebook_with(class, eps, delta, seed, &NetConfig::default(), DEFAULT_STORAGE_CAP)
}

pub fn build_codebook_with(
    class: &AnalyticClassParams,
    eps: f64,
    delta: f64,
    seed: u64,
    cfg: &NetConfig,
    storage_cap: u64,
) -> Result<Codebook> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let e = Eps::new(eps)?;
    let n1 = truncation_index(&ClassParams::Analytic(*class), e, TruncationKind::UpperN1)?.value;
    let m = n1 as usize + 1;
    let eta1 = eps / (2.0 * (m as f64).sqrt());
    let shell_delta = delta / m as f64;

    let mut dims = Vec::with_capacity(m);
    let mut radii = Vec::with_capacity(m);
    let mut total: u64 = 0;
    for j in 0..m {
        let b = shell_dim_usize(j as u64, class.q)?;
        let r = class.delta(j as u64);
        let samples = required_samples(b, eta1 / r, shell_delta, cfg)?.count;
        // packing bound on the greedy net size at separation η₁/2
        let packing = (b as f64 * (1.0 + 4.0 * r / eta1).ln()).exp();
        let projected = (samples as f64 + packing.min(samples as f64)) * b as f64;
        if projected > storage_cap as f64 {
            return Err(Error::CapExceeded {
                what: format!("codebook storage at shell {j} (b_j = {b})"),
                requested: format!("{projected:.3e} coordinates"),
                limit: storage_cap.to_string(),
            });
        }
        total = total.saturating_add(projected as u64);
        if total > storage_cap {
            return Err(Error::CapExceeded {
                what: format!("total codebook storage through shell {j} (b_j = {b})"),
                requested: format!("{total} coordinates"),
                limit: storage_cap.to_string(),
            });
        }
        dims.push(b);
        radii.push(r);
    }

    let shells: Vec<EpsNet> = (0..m)
        .into_par_iter()
        .map(|j| {
            let b = dims[j];
            net_ellipsoid(
                &vec![0.0; b],
                &vec![radii[j]; b],
                eta1,
                shell_delta,
                derive_seed(seed, &format!("codebook/shell/{j}")),
                true,
                cfg,
            )
        })
        .collect::<Result<_>>()?;

    let shell_sizes: Vec<usize> = shells.iter().map(EpsNet::len).collect();
    let mut cb = Codebook {
        class: *class,
        eps,
        delta,
        seed,
        m,
        eta1,
        shell_dims: dims,
        shell_radii: radii,
        log_size: shell_sizes.iter().map(|&n| (n as f64).ln()).sum(),
        shell_sizes,
        guarantee_void: shells.iter().any(|s| s.guarantee_void),
        shells,
        hash_algorithm: HASH_ALGORITHM.to_string(),
        hash: String::new(),
    };
    cb.hash = cb.compute_hash()?;
    Ok(cb)
}

fn check_input(s: &ChebSeries, cb: &Codebook) -> Result<()> {
    let q = cb.class.q as usize;
    if s.dim() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: s.dim(),
        });
    }
    if s.domain() != &IntervalBox::unit(q) {
        return Err(invalid("codebooks quantize series on the unit box only"));
    }
    for j in 0..cb.m {
        let norm = shell_norm(s, j as u64, Norm::L2)?.value;
        let allowed = cb.shell_radii[j];
        if norm > allowed * (1.0 + L2_TOLERANCE) {
            return Err(Error::NonMember {
                shell: j,
                norm,
                allowed,
            });
        }
    }
    Ok(())
}

/// Encode and also return the per-shell quantization distances.
pub fn encode_with_distances(s: &ChebSeries, cb: &Codebook) -> Result<(Code, Vec<f64>)> {
    check_input(s, cb)?;
    let mut indices = Vec::with_capacity(cb.m);
    let mut dists = Vec::with_capacity(cb.m);
    for (j, net) in cb.shells.iter().enumerate() {
        let v = s.shell_vector(j as u64)?;
        let (idx, d) = net.nearest(&v)?;
        indices.push(idx);
        dists.push(d);
    }
    Ok((
        Code {
            codebook_hash: cb.hash.clone(),
            indices,
        },
        dists,
    ))
}

/// Map each of the first `M` shells to its nearest codeword.
pub fn encode(s: &ChebSeries, cb: &Codebook) -> Result<Code> {
    Ok(encode_with_distances(s, cb)?.0)
}

pub fn decode(code: &Code, cb: &Codebook) -> Result<ChebSeries> {
    if code.codebook_hash != cb.hash {
        return Err(Error::HashMismatch {
            expected: cb.hash.clone(),
            found: code.codebook_hash.clone(),
        });
    }
    if code.indices.len() != cb.m {
        return Err(Error::DimensionMismatch {
            expected: cb.m,
            got: code.indices.len(),
        });
    }
    let mut shells = Vec::with_capacity(cb.m);
    for (j, (&idx, net)) in code.indices.iter().zip(&cb.shells).enumerate() {
        let p = net.points.get(idx).ok_or(Error::IndexOutOfRange {
            shell: j,
            index: idx,
            size: net.len(),
        })?;
        shells.push(p.clone());
    }
    ChebSeries::from_shell_vectors(IntervalBox::unit(cb.class.q as usize), &shells)
}

/// Split of the reconstruction error into its two parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub total: f64,
    /// `(Σ_{j<M} d_j²)^{1/2}`.
    pub quantization: f64,
    /// `(Σ_{j≥M} ‖S_j‖²)^{1/2}`.
    pub truncation: f64,
    pub per_shell: Vec<f64>,
    pub code: Code,
}

pub fn roundtrip_report(s: &ChebSeries, cb: &Codebook) -> Result<RoundtripReport> {
    let (code, per_shell) = encode_with_distances(s, cb)?;
    let q2: f64 = per_shell.iter().map(|d| d * d).sum();
    let max = s.max_order().unwrap_or(0);
    let mut t2 = 0.0;
    for j in cb.m as u64..=max {
        let n = shell_norm(s, j, Norm::L2)?.value;
        t2 += n * n;
    }
    Ok(RoundtripReport {
        total: (q2 + t2).sqrt(),
        quantization: q2.sqrt(),
        truncation: t2.sqrt(),
        per_shell,
        code,
    })
}

/// `‖s − decode(encode(s))‖_{L²}`, computed in coefficient space.
pub fn roundtrip_error(s: &ChebSeries, cb: &Codebook) -> Result<f64> {
    Ok(roundtrip_report(s, cb)?.total)
}
