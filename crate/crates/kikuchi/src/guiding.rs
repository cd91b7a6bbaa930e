//! Guiding states, the disjoint-tuple fraction α_ℓ, overlaps with the
//! high-energy subspace and amplitude-amplification sizing.
//!
//! For a tensor with entries `T_S`, the builder accumulates
//! `Γ(W) = Σ T_{S_1}⋯T_{S_c}` over ordered c-tuples of pairwise disjoint observed
//! subsets with union `W`. Every unordered decomposition therefore contributes
//! `c!` times.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binom_f64, factorial_f64, ln_binom, mask_of, SubsetIndexer};
use crate::error::{Error, Result};
use crate::kikuchi::{spike_lift, spike_lift_embedded, KikuchiOperator};
use crate::linalg::{dot, DenseSym};
use crate::model::{SparseSignedTensor, SpikeVector};
use crate::scalar::Scalar;
use crate::spectral::{top_eigs, DetectionThresholds, EigOptions};

/// Largest basis for which a guiding state is materialised.
pub const GUIDING_DIM_CAP: u64 = 20_000_000;
/// Largest operator diagonalised densely in [`overlap_report`].
pub const DENSE_CAP: usize = 4000;

#[derive(Clone, Debug)]
pub struct GuidingState<T> {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub c: usize,
    /// Unit vector over ranked ℓ-subsets.
    pub amplitudes: Vec<T>,
    /// Unnormalised `Γ` (see module docs; the asymmetric builder rescales it).
    pub raw: Vec<T>,
    /// `Σ T_{S_1}²⋯T_{S_c}²` over ordered disjoint tuples; the tuple count for ±1 entries.
    pub chi_sq: f64,
    /// Number of ordered disjoint tuples.
    pub ordered_tuples: f64,
    pub alpha_ell: f64,
    /// `α_ℓ c^{−ℓ}`.
    pub beta_sq: f64,
    /// Postselection success probability of the one-hot merge applied to
    /// `|φ⟩^{⊗c}`: `‖Γ‖² c^{−ℓ} / (Σ_S T_S²)^c`.
    pub prep_success_probability: f64,
    pub support: usize,
}

type Layer = HashMap<u128, (f64, f64, f64)>;

fn entries_of(t: &SparseSignedTensor) -> Vec<(u128, f64)> {
    t.iter().map(|(s, w)| (mask_of(s), w as f64)).collect()
}

/// Layers 1..c-1 of the disjoint-union recursion: union mask ↦ (Σ Π T, Σ Π T², count).
fn partial_layers(entries: &[(u128, f64)], c: usize) -> Layer {
    let mut layer: Layer = HashMap::new();
    if c == 0 {
        layer.insert(0, (1.0, 1.0, 1.0));
        return layer;
    }
    for &(s, w) in entries {
        let e = layer.entry(s).or_default();
        e.0 += w;
        e.1 += w * w;
        e.2 += 1.0;
    }
    for _ in 1..c {
        let mut next: Layer = HashMap::new();
        for (&u, &(a, b, n)) in &layer {
            for &(s, w) in entries {
                if u & s == 0 {
                    let e = next.entry(u | s).or_default();
                    e.0 += a * w;
                    e.1 += b * w * w;
                    e.2 += n;
                }
            }
        }
        layer = next;
    }
    layer
}

/// Fraction of ordered c-tuples of observed entries that are pairwise disjoint.
pub fn alpha_ell(t: &SparseSignedTensor, c: usize) -> f64 {
    let m = t.len() as f64;
    if c <= 1 {
        return if c == 0 || m > 0.0 { 1.0 } else { 0.0 };
    }
    if m == 0.0 {
        return 0.0;
    }
    disjoint_tuple_count(t, c) / m.powi(c as i32)
}

/// Number of ordered c-tuples of observed entries that are pairwise disjoint.
pub fn disjoint_tuple_count(t: &SparseSignedTensor, c: usize) -> f64 {
    let entries = entries_of(t);
    if c == 0 {
        return 1.0;
    }
    let layer: Vec<(u128, f64)> = partial_layers(&entries, c - 1).into_iter().map(|(u, v)| (u, v.2)).collect();
    layer
        .par_iter()
        .map(|&(u, n)| n * entries.iter().filter(|&&(s, _)| u & s == 0).count() as f64)
        .sum()
}

/// `|Γ_ℓ⟩` for a tensor whose order divides ℓ.
pub fn build_guiding<T: Scalar>(t: &SparseSignedTensor, ell: usize) -> Result<GuidingState<T>> {
    let (n, k) = (t.n, t.k);
    if !ell.is_multiple_of(k) || ell > n {
        return Err(Error::InvalidParams(format!("ell = {ell} must be a multiple of k = {k} and at most n = {n}")));
    }
    let c = ell / k;
    let dim = crate::combinatorics::binom_u128(n as u64, ell as u64).unwrap_or(u128::MAX);
    if dim > GUIDING_DIM_CAP as u128 {
        return Err(Error::DimensionCap { dim: dim.min(u64::MAX as u128) as u64, cap: GUIDING_DIM_CAP });
    }
    let ix = SubsetIndexer::new(n, ell);
    let entries = entries_of(t);
    let prev = partial_layers(&entries, c.saturating_sub(1));
    let mut raw = vec![0.0f64; dim as usize];
    let mut chi_sq = 0.0;
    let mut tuples = 0.0;
    if c == 0 {
        raw[0] = 1.0;
        chi_sq = 1.0;
        tuples = 1.0;
    } else {
        for (&u, &(a, b, cnt)) in &prev {
            for &(s, w) in &entries {
                if u & s == 0 {
                    raw[ix.rank_mask(u | s) as usize] += a * w;
                    chi_sq += b * w * w;
                    tuples += cnt;
                }
            }
        }
    }
    let norm_sq: f64 = raw.iter().map(|x| x * x).sum();
    let support = raw.iter().filter(|x| **x != 0.0).count();
    let m = entries.len() as f64;
    let alpha = if c == 0 { 1.0 } else if m == 0.0 { 0.0 } else { tuples / m.powi(c as i32) };
    let wsq: f64 = entries.iter().map(|e| e.1 * e.1).sum();
    let prep = if wsq == 0.0 { 0.0 } else { norm_sq * (c as f64).powi(-(ell as i32)) / wsq.powi(c as i32) };
    let inv = if norm_sq > 0.0 { 1.0 / norm_sq.sqrt() } else { 0.0 };
    Ok(GuidingState {
        n,
        k,
        ell,
        c,
        amplitudes: raw.iter().map(|&x| T::of(x * inv)).collect(),
        raw: raw.into_iter().map(T::of).collect(),
        chi_sq,
        ordered_tuples: tuples,
        alpha_ell: alpha,
        beta_sq: alpha * (c.max(1) as f64).powi(-(ell as i32)),
        prep_success_probability: prep,
        support,
    })
}

/// Guiding state of a block-embedded tensor on `N = k n` variables, scaled as
/// `Γ_U = q^{−c/2} χ^{−1} Σ_{valid partitions} Π T` with `q = m/n^k` and
/// `χ = C(n,c)^{k/2} (c!)^{(k−1)/2}`. `m` is the sampling rate of the instance.
pub fn asym_guiding<T: Scalar>(t_embedded: &SparseSignedTensor, ell: usize, m: f64) -> Result<GuidingState<T>> {
    let block = t_embedded
        .block_size()
        .ok_or_else(|| Error::InvalidParams("asym_guiding needs a block-embedded tensor".into()))?;
    let k = t_embedded.k;
    let mut g = build_guiding::<f64>(t_embedded, ell)?;
    let c = g.c;
    let q = m / (block as f64).powi(k as i32);
    let chi = binom_f64(block, c).powf(k as f64 / 2.0) * factorial_f64(c).powf((k as f64 - 1.0) / 2.0);
    // ordered tuples count each partition c! times
    let s = 1.0 / (factorial_f64(c) * q.powf(c as f64 / 2.0) * chi);
    Ok(GuidingState {
        n: g.n,
        k,
        ell,
        c,
        amplitudes: g.amplitudes.iter().map(|&x| T::of(x)).collect(),
        raw: std::mem::take(&mut g.raw).into_iter().map(|x| T::of(x * s)).collect(),
        chi_sq: g.chi_sq,
        ordered_tuples: g.ordered_tuples,
        alpha_ell: g.alpha_ell,
        beta_sq: g.beta_sq,
        prep_success_probability: g.prep_success_probability,
        support: g.support,
    })
}

/// `E|Γ⟩ = ρ^c m^{c/2} n^{−ℓ/2} (c!)^{(k−1)/2} |z̃⟩`: the scalar in front of `|z̃⟩`.
pub fn asym_mean_scale(n: usize, k: usize, ell: usize, m: f64, rho: f64) -> f64 {
    let c = ell / k;
    rho.powi(c as i32) * m.powf(c as f64 / 2.0) * (n as f64).powf(-(ell as f64) / 2.0) * factorial_f64(c).powf((k as f64 - 1.0) / 2.0)
}

/// `L = ⌈prefactor · (C(n,k)/m)^{ℓ/(2k)}⌉`.
pub fn amp_amp_reps(n: usize, k: usize, ell: usize, m: f64, prefactor: f64) -> u64 {
    let e = ell as f64 / (2.0 * k as f64) * (ln_binom(n as f64, k as f64) - m.ln());
    (prefactor * e.exp()).ceil().max(1.0) as u64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OverlapConfig {
    pub gamma: f64,
    pub kappa: f64,
    /// `0 < ε < γ`.
    pub eps: f64,
    pub nu: f64,
    /// Split fraction used for the guiding state.
    pub zeta: f64,
    pub prefactor: f64,
    pub dense_cap: usize,
    pub seed: u64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig { gamma: 0.1, kappa: 1.0, eps: 0.05, nu: 0.5, zeta: 0.5, prefactor: 1.0, dense_cap: DENSE_CAP, seed: 0 }
    }
}

/// `ξ = ℓ!/((ℓ/k)! (k!)^{ℓ/k}) · ρεν/(4A) · (ρ²ζ)^{ℓ/k}` with `A = 1+κ−(1−γ)ρ`.
pub fn xi_constant(k: usize, ell: usize, rho: f64, cfg: &OverlapConfig) -> f64 {
    let c = ell / k;
    let a = 1.0 + cfg.kappa - (1.0 - cfg.gamma) * rho;
    let part = factorial_f64(ell) / (factorial_f64(c) * factorial_f64(k).powi(c as i32));
    part * rho * cfg.eps * cfg.nu / (4.0 * a) * (rho * rho * cfg.zeta).powi(c as i32)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OverlapReport {
    pub lambda_star: f64,
    pub high_energy_dim: usize,
    /// `⟨Γ|Π_{≥λ*}|Γ⟩` for the normalised guiding state.
    pub zeta_sq: f64,
    /// `ξ (m/C(n,k))^{ℓ/k}`.
    pub xi_bound: f64,
    /// `⟨z^{⊙ℓ}|Π_{≥λ*}|z^{⊙ℓ}⟩`.
    pub z_overlap: f64,
    /// `ερ/(1+κ−(1−γ)ρ)`.
    pub z_bound: f64,
    #[serde(rename = "L")]
    pub l_measured: u64,
    #[serde(rename = "L_bound")]
    pub l_bound: u64,
    pub method: String,
}

/// Eigenpairs of `op` with eigenvalue at least `lambda_star`.
pub fn high_energy_pairs(op: &KikuchiOperator, lambda_star: f64, dense_cap: usize, seed: u64) -> (Vec<(f64, Vec<f64>)>, &'static str) {
    if op.dim <= dense_cap {
        let a: DenseSym<f64> = match op.explicit() {
            Some(c) => c.to_dense(),
            None => DenseSym::from_operator(op),
        };
        let e = a.eigh();
        let pairs = (0..op.dim).rev().take_while(|&j| e.values[j] >= lambda_star).map(|j| (e.values[j], e.vector(j))).collect();
        return (pairs, "dense");
    }
    let mut count = 4usize;
    loop {
        let count_now = count.min(op.dim);
        let r = top_eigs::<f64, _>(op, &EigOptions { count: count_now, tol: 1e-10, max_iter: Some(20_000), seed, ..Default::default() });
        let below = r.values.iter().any(|&v| v < lambda_star);
        if below || count_now == op.dim || count >= 256 {
            if !below {
                log::warn!("high-energy subspace truncated at {count_now} vectors");
            }
            let pairs = r.values.into_iter().zip(r.vectors).filter(|(v, _)| *v >= lambda_star).collect();
            return (pairs, "lanczos");
        }
        count *= 2;
    }
}

fn projected_mass(pairs: &[(f64, Vec<f64>)], x: &[f64]) -> f64 {
    pairs.iter().map(|(_, v)| dot(v, x).powi(2)).sum()
}

/// Overlaps of the guiding state and of `z^{⊙ℓ}` (or `z̃` for a block spike) with
/// the eigenspace of `K(t_kikuchi)` above `λ*`.
pub fn overlap_report(
    t_kikuchi: &SparseSignedTensor,
    guiding: &GuidingState<f64>,
    z: &SpikeVector,
    th: &DetectionThresholds,
    rho: f64,
    m: f64,
    cfg: &OverlapConfig,
) -> Result<OverlapReport> {
    let ell = guiding.ell;
    let op = KikuchiOperator::build(t_kikuchi, ell)?;
    let (pairs, method) = high_energy_pairs(&op, th.lambda_star, cfg.dense_cap, cfg.seed);
    if pairs.is_empty() {
        return Err(Error::Degenerate(format!("no eigenvalue at or above lambda* = {}", th.lambda_star)));
    }
    let zeta_sq = projected_mass(&pairs, &guiding.amplitudes);
    let zl = if z.block_size.is_some() { spike_lift_embedded(z, ell) } else { spike_lift(z, ell) };
    let z_overlap = projected_mass(&pairs, &zl);
    let (n, k) = (t_kikuchi.n, t_kikuchi.k);
    let xi_bound = xi_constant(k, ell, rho, cfg) * (m / binom_f64(n, k)).powf(ell as f64 / k as f64);
    let a = 1.0 + cfg.kappa - (1.0 - cfg.gamma) * rho;
    let l_measured = if zeta_sq > 0.0 { (1.0 / zeta_sq.sqrt()).ceil() as u64 } else { u64::MAX };
    Ok(OverlapReport {
        lambda_star: th.lambda_star,
        high_energy_dim: pairs.len(),
        zeta_sq,
        xi_bound,
        z_overlap,
        z_bound: cfg.eps * rho / a,
        l_measured,
        l_bound: (cfg.prefactor / xi_bound.sqrt()).ceil() as u64,
        method: method.to_string(),
    })
}

/// Lower bound on α_ℓ: `1 − (c choose 2)(k²/n + 4k ln n/m)`.
pub fn alpha_lower_bound(n: usize, k: usize, c: usize, m: f64) -> f64 {
    let pairs = (c * c.saturating_sub(1) / 2) as f64;
    1.0 - pairs * ((k * k) as f64 / n as f64 + 4.0 * k as f64 * (n as f64).ln() / m)
}
