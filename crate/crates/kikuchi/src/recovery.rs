//! Voting-matrix recovery, Gaussian rounding, boosting and the correlation-sweep harness.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::SubsetIndexer;
use crate::error::{Error, Result};
use crate::kikuchi::KikuchiOperator;
use crate::linalg::{dot, norm, normalize, DenseSym};
use crate::model::{
    sample_asymmetric_simple, sample_simple, symmetric_embed, AsymmetricTensorSample, ProblemParams, SparseSignedTensor, SpikeVector,
};
use crate::rng::{derive, purpose, stream, Rng};
use crate::scalar::Scalar;
use crate::spectral::{top_eigs, EigOptions};

/// `V_ij = Σ_{U,V} v_U v_V 1(UΔV = {i,j})` for `i ≠ j`, summed over ordered pairs.
#[derive(Clone, Debug)]
pub struct VotingMatrix<T> {
    pub n: usize,
    pub m: DenseSym<T>,
}

impl<T: Scalar> VotingMatrix<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m.get(i, j)
    }

    /// `(𝟙 + V)/n`.
    pub fn one_rdm(&self) -> DenseSym<T> {
        let n = T::of(self.n as f64);
        DenseSym::from_fn(self.n, |i, j| (self.m.get(i, j) + if i == j { T::one() } else { T::zero() }) / n)
    }

    /// `zᵀ V z`.
    pub fn quadratic(&self, z: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += z[i] * self.m.get(i, j).f64() * z[j];
            }
        }
        s
    }
}

/// Builds `V(v)` from a vector over ranked ℓ-subsets of `[n]`.
pub fn voting_matrix<T: Scalar>(v: &[T], n: usize, ell: usize) -> Result<VotingMatrix<T>> {
    let ix = SubsetIndexer::new(n, ell);
    if v.len() as u64 != ix.dim() {
        return Err(Error::InvalidParams(format!("vector length {} != C({n},{ell}) = {}", v.len(), ix.dim())));
    }
    if ell == 0 {
        return Ok(VotingMatrix { n, m: DenseSym::zeros(n) });
    }
    // pairs (W+i, W+j) over (ℓ−1)-subsets W: V = 2 Σ_W g_W g_Wᵀ off the diagonal
    let iw = SubsetIndexer::new(n, ell - 1);
    let chunk = 1024u64;
    let s = (0..iw.dim().div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0f64; n * n];
            let mut g: Vec<(usize, f64)> = Vec::with_capacity(n);
            for w in c * chunk..((c + 1) * chunk).min(iw.dim()) {
                let mw = iw.unrank_mask(w);
                g.clear();
                for i in 0..n {
                    if mw >> i & 1 == 0 {
                        let x = v[ix.rank_mask(mw | 1u128 << i) as usize].f64();
                        if x != 0.0 {
                            g.push((i, x));
                        }
                    }
                }
                for (a, &(i, xi)) in g.iter().enumerate() {
                    let row = &mut acc[i * n..(i + 1) * n];
                    for &(j, xj) in &g[a + 1..] {
                        row[j] += xi * xj;
                    }
                }
            }
            acc
        })
        .reduce(
            || vec![0.0f64; n * n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let m = DenseSym::from_fn(n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => T::zero(),
        std::cmp::Ordering::Less => T::of(2.0 * s[i * n + j]),
        std::cmp::Ordering::Greater => T::of(2.0 * s[j * n + i]),
    });
    Ok(VotingMatrix { n, m })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    TopEigvec,
    Gaussian1rdm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryResult {
    /// Unit vector.
    pub candidate: Vec<f64>,
    pub signs: Vec<i8>,
    pub correlation: Option<f64>,
    pub boosted: bool,
    pub strategy: Option<Strategy>,
    pub trials: usize,
}

/// `|xᵀz| / (‖x‖‖z‖)`.
pub fn correlation(x: &[f64], z: &[f64]) -> f64 {
    let d = norm(x) * norm(z);
    if d == 0.0 {
        0.0
    } else {
        (dot(x, z).abs() / d).min(1.0)
    }
}

/// Mean over blocks of the per-block correlation. Block sign flips leave an
/// embedded instance unchanged, so only this quantity is identifiable.
pub fn block_correlation(x: &[f64], z: &SpikeVector) -> f64 {
    let Some(b) = z.block_size else {
        return correlation(x, &z.to_f64());
    };
    let zf = z.to_f64();
    let nb = z.num_blocks();
    (0..nb).map(|i| correlation(&x[i * b..(i + 1) * b], &zf[i * b..(i + 1) * b])).sum::<f64>() / nb as f64
}

fn sign_round(x: &[f64]) -> Vec<i8> {
    x.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect()
}

pub fn weak_recover(v: &VotingMatrix<f64>, seed: u64, strategy: Strategy, reference: Option<&SpikeVector>) -> RecoveryResult {
    let n = v.n;
    let candidate = match strategy {
        Strategy::TopEigvec => {
            let e = v.m.eigh();
            e.vector(n - 1)
        }
        Strategy::Gaussian1rdm => {
            let e = v.one_rdm().eigh();
            let lo = e.values.iter().copied().fold(f64::INFINITY, f64::min);
            if lo < -1e-9 {
                log::warn!("(1+V)/n has eigenvalue {lo:.3e}; clamping negatives to 0");
            }
            let mut rng = stream(seed, purpose::ROUNDING);
            let mut x = vec![0.0; n];
            for j in 0..n {
                let g: f64 = StandardNormal.sample(&mut rng);
                let a = e.values[j].max(0.0).sqrt() * g;
                for i in 0..n {
                    x[i] += a * e.vectors[i * n + j];
                }
            }
            normalize(&mut x);
            x
        }
    };
    let correlation = reference.map(|z| block_correlation(&candidate, z));
    RecoveryResult { signs: sign_round(&candidate), candidate, correlation, boosted: false, strategy: Some(strategy), trials: 1 }
}

/// Tensor accepted by [`boost`].
pub enum BoostTensor<'a> {
    /// Entries on k-subsets; contraction uses all orderings of each subset.
    Symmetric(&'a SparseSignedTensor),
    /// Full ordered-tuple tensor `T'` over `[n]^k`; contraction is symmetrised
    /// over the k modes.
    Full(&'a AsymmetricTensorSample),
}

/// One round of tensor power iteration `x̂ = T' · x^{⊗(k−1)}`, normalised.
pub fn boost(t: BoostTensor<'_>, x: &[f64], reference: Option<&SpikeVector>) -> Result<RecoveryResult> {
    let (n, k) = match &t {
        BoostTensor::Symmetric(s) => (s.n, s.k),
        BoostTensor::Full(a) => (a.n, a.k),
    };
    if x.len() != n {
        return Err(Error::InvalidParams(format!("candidate length {} != n = {n}", x.len())));
    }
    let mut y = vec![0.0f64; n];
    let mut add = |s: &[u32], w: f64| {
        for p in 0..k {
            let mut prod = w;
            for (q, &j) in s.iter().enumerate() {
                if q != p {
                    prod *= x[j as usize];
                }
            }
            y[s[p] as usize] += prod;
        }
    };
    match t {
        BoostTensor::Symmetric(s) => {
            // (k-1)! orderings per position; a common factor, dropped
            for (sub, w) in s.iter() {
                add(sub, w as f64);
            }
        }
        BoostTensor::Full(a) => {
            for (tup, w) in a.iter() {
                add(tup, w as f64);
            }
        }
    }
    if normalize(&mut y) == 0.0 {
        return Err(Error::Degenerate("boosting contraction vanished".into()));
    }
    let correlation = reference.map(|z| correlation(&y, &z.to_f64()));
    Ok(RecoveryResult { signs: sign_round(&y), candidate: y, correlation, boosted: true, strategy: None, trials: 1 })
}

/// Unit vector with overlap exactly `r` against `z/√n` and a random orthogonal part.
pub fn seeded_candidate(z: &SpikeVector, r: f64, rng: &mut Rng) -> Vec<f64> {
    let mut zu = z.to_f64();
    normalize(&mut zu);
    let mut g: Vec<f64> = (0..zu.len()).map(|_| StandardNormal.sample(rng)).collect();
    let p = dot(&g, &zu);
    g.iter_mut().zip(&zu).for_each(|(gi, zi)| *gi -= p * zi);
    normalize(&mut g);
    let s = (1.0 - r * r).max(0.0).sqrt();
    zu.iter().zip(&g).map(|(a, b)| r * a + s * b).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Symmetric,
    Asymmetric,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig2Config {
    pub setting: Setting,
    /// Variables (per block in the asymmetric setting).
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub rhos: Vec<f64>,
    /// Fraction of all entries observed (of `C(n,k)` or of `n^k`).
    pub obs_fractions: Vec<f64>,
    pub trials: usize,
    /// Eigenvectors mixed into the voting vector.
    pub top: usize,
    pub seed: u64,
    pub max_basis: usize,
    pub tol: f64,
}

impl Fig2Config {
    pub fn symmetric() -> Self {
        Fig2Config {
            setting: Setting::Symmetric,
            n: 20,
            k: 4,
            ell: 6,
            rhos: vec![0.0, 0.25, 0.5, 1.0],
            obs_fractions: vec![0.02, 0.05, 0.1, 0.2],
            trials: 30,
            top: 3,
            seed: 2024,
            max_basis: 120,
            tol: 1e-6,
        }
    }

    pub fn asymmetric() -> Self {
        Fig2Config {
            setting: Setting::Asymmetric,
            n: 7,
            k: 4,
            ell: 6,
            rhos: vec![0.0, 1.0],
            obs_fractions: vec![0.1, 0.3],
            trials: 30,
            top: 3,
            seed: 2024,
            max_basis: 40,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig2Trial {
    pub rho: f64,
    pub obs_fraction: f64,
    pub trial: usize,
    pub seed: u64,
    pub entries: usize,
    pub correlation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig2Cell {
    pub setting: Setting,
    pub rho: f64,
    pub obs_fraction: f64,
    pub trials: usize,
    pub mean_corr: f64,
    pub std_corr: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig2Result {
    pub cells: Vec<Fig2Cell>,
    pub records: Vec<Fig2Trial>,
}

impl Fig2Result {
    pub fn cell(&self, rho: f64, obs: f64) -> Option<&Fig2Cell> {
        self.cells.iter().find(|c| c.rho == rho && c.obs_fraction == obs)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["setting", "rho", "obs_fraction", "trials", "mean_corr", "std_corr"])
            .map_err(|e| Error::Parse(e.to_string()))?;
        for c in &self.cells {
            let setting = match c.setting {
                Setting::Symmetric => "symmetric",
                Setting::Asymmetric => "asymmetric",
            };
            w.write_record([
                setting.to_string(),
                c.rho.to_string(),
                c.obs_fraction.to_string(),
                c.trials.to_string(),
                format!("{:.6}", c.mean_corr),
                format!("{:.6}", c.std_corr),
            ])
            .map_err(|e| Error::Parse(e.to_string()))?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Parse(e.to_string()))?).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Random Gaussian mixture of the top `top` Kikuchi eigenvectors, normalised.
pub fn voting_vector<T: Scalar>(t: &SparseSignedTensor, ell: usize, top: usize, seed: u64, max_basis: usize, tol: f64) -> Result<Vec<f64>> {
    let op = KikuchiOperator::build(t, ell)?;
    let opts = EigOptions { count: top.clamp(1, op.dim), tol, seed, max_basis, ..Default::default() };
    let eig = top_eigs::<T, _>(&op, &opts);
    let mut rng = stream(seed, purpose::COMBINATION);
    let mut v = vec![0.0f64; op.dim];
    for e in &eig.vectors {
        let g: f64 = StandardNormal.sample(&mut rng);
        v.iter_mut().zip(e).for_each(|(a, b)| *a += g * b.f64());
    }
    if normalize(&mut v) == 0.0 {
        return Err(Error::Degenerate("eigenvector mixture vanished".into()));
    }
    Ok(v)
}

/// One correlation-sweep trial: top eigenvectors, random Gaussian mixture, voting matrix,
/// top eigenvector of `V`.
pub fn fig2_trial<T: Scalar>(t: &SparseSignedTensor, z: &SpikeVector, ell: usize, top: usize, seed: u64, max_basis: usize, tol: f64) -> Result<f64> {
    let v = voting_vector::<T>(t, ell, top, seed, max_basis, tol)?;
    let vm = voting_matrix(&v, t.n, ell)?;
    Ok(weak_recover(&vm, seed, Strategy::TopEigvec, Some(z)).correlation.unwrap())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverConfig {
    pub ell: usize,
    pub top: usize,
    pub strategy: Strategy,
    /// Follow weak recovery with one tensor power-iteration round.
    pub boost: bool,
    pub max_basis: usize,
    pub tol: f64,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        RecoverConfig { ell: 6, top: 1, strategy: Strategy::TopEigvec, boost: false, max_basis: 120, tol: 1e-6 }
    }
}

/// Kikuchi eigenvectors, voting matrix, rounding, and optionally a boost.
pub fn recover(t: &SparseSignedTensor, cfg: &RecoverConfig, seed: u64, reference: Option<&SpikeVector>) -> Result<RecoveryResult> {
    let v = voting_vector::<f64>(t, cfg.ell, cfg.top, seed, cfg.max_basis, cfg.tol)?;
    let vm = voting_matrix(&v, t.n, cfg.ell)?;
    let weak = weak_recover(&vm, seed, cfg.strategy, reference);
    if !cfg.boost {
        return Ok(weak);
    }
    let mut r = boost(BoostTensor::Symmetric(t), &weak.candidate, reference)?;
    r.strategy = weak.strategy;
    Ok(r)
}

/// Mean recovery correlation per (ρ, observation fraction) cell. Instances for
/// different fractions share the seed, so larger fractions extend smaller ones.
pub fn fig2_experiment(cfg: &Fig2Config) -> Result<Fig2Result> {
    let mut jobs = vec![];
    for (ri, &rho) in cfg.rhos.iter().enumerate() {
        for &obs in &cfg.obs_fractions {
            for trial in 0..cfg.trials {
                jobs.push((ri, rho, obs, trial));
            }
        }
    }
    let records: Vec<Fig2Trial> = jobs
        .par_iter()
        .map(|&(ri, rho, obs, trial)| {
            let seed = derive(derive(cfg.seed, ri as u64), trial as u64);
            let (t, z) = match cfg.setting {
                Setting::Symmetric => {
                    let total = crate::combinatorics::binom_f64(cfg.n, cfg.k);
                    let p = ProblemParams::new(cfg.n, cfg.k, cfg.ell, (obs * total).round(), rho, seed);
                    sample_simple(&p)?
                }
                Setting::Asymmetric => {
                    let total = (cfg.n as f64).powi(cfg.k as i32);
                    let p = ProblemParams::new(cfg.n, cfg.k, cfg.ell, (obs * total).round(), rho, seed);
                    let (a, z) = sample_asymmetric_simple(&p)?;
                    (symmetric_embed(&a), z)
                }
            };
            let correlation = fig2_trial::<f64>(&t, &z, cfg.ell, cfg.top, derive(seed, 7), cfg.max_basis, cfg.tol)?;
            Ok(Fig2Trial { rho, obs_fraction: obs, trial, seed, entries: t.len(), correlation })
        })
        .collect::<Result<_>>()?;
    let mut cells = vec![];
    for &rho in &cfg.rhos {
        for &obs in &cfg.obs_fractions {
            let c: Vec<f64> = records.iter().filter(|r| r.rho == rho && r.obs_fraction == obs).map(|r| r.correlation).collect();
            let mean = c.iter().sum::<f64>() / c.len() as f64;
            let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (c.len().max(2) - 1) as f64;
            cells.push(Fig2Cell { setting: cfg.setting, rho, obs_fraction: obs, trials: c.len(), mean_corr: mean, std_corr: var.sqrt() });
        }
    }
    Ok(Fig2Result { cells, records })
}
