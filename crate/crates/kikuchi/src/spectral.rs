//! Top eigenpairs of the Kikuchi operator and the detection rule.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{kikuchi_stats, ln_binom};
use crate::kikuchi::KikuchiOperator;
use crate::linalg::{axpy, dot, norm, normalize, scale, DenseSym, LinearOperator};
use crate::model::SparseSignedTensor;
use crate::rng::{purpose, stream};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Lanczos,
    Power,
}

#[derive(Clone, Debug)]
pub struct EigOptions {
    pub count: usize,
    /// Relative residual tolerance, scaled by the largest Ritz magnitude.
    pub tol: f64,
    /// Matvec budget; `None` uses `10 ℓ ln(dim)` where known, else 10·ln(dim)·10.
    pub max_iter: Option<usize>,
    pub seed: u64,
    pub method: Method,
    /// Largest Krylov basis kept in memory.
    pub max_basis: usize,
    /// Stop as soon as the top Ritz value reaches this level (a Ritz value never
    /// exceeds the true top eigenvalue).
    pub stop_above: Option<f64>,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            count: 1,
            tol: 1e-6,
            max_iter: None,
            seed: 0,
            method: Method::Lanczos,
            max_basis: 300,
            stop_above: None,
        }
    }
}

pub fn default_max_iter(ell: usize, dim: usize) -> usize {
    ((10 * ell.max(1)) as f64 * (dim.max(2) as f64).ln()).ceil() as usize
}

#[derive(Clone, Debug)]
pub struct EigResult<T> {
    /// Descending.
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
    /// Operator applications used.
    pub iterations: usize,
    /// `‖K v − λ v‖` per returned pair.
    pub residuals: Vec<T>,
    pub converged: bool,
}

impl<T: Scalar> EigResult<T> {
    pub fn top(&self) -> T {
        self.values[0]
    }
}

/// Largest `opts.count` eigenpairs of a symmetric operator.
pub fn top_eigs<T: Scalar, O: LinearOperator<T> + ?Sized>(op: &O, opts: &EigOptions) -> EigResult<T> {
    let dim = op.dim();
    assert!(opts.count >= 1 && opts.count <= dim.max(1), "count out of range");
    if dim == 0 {
        return EigResult { values: vec![], vectors: vec![], iterations: 0, residuals: vec![], converged: true };
    }
    match opts.method {
        Method::Lanczos => lanczos(op, opts),
        Method::Power => power(op, opts),
    }
}

fn random_start<T: Scalar>(dim: usize, seed: u64, salt: u64) -> Vec<T> {
    let mut rng = stream(crate::rng::derive(seed, salt), purpose::EIGEN_START);
    let mut v: Vec<T> = (0..dim)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            T::of(g)
        })
        .collect();
    normalize(&mut v);
    v
}

fn orthogonalize<T: Scalar>(basis: &[Vec<T>], w: &mut [T], coeffs: Option<&mut [f64]>) {
    let mut acc = vec![0.0; basis.len()];
    let before = norm(w).f64();
    for pass in 0..2 {
        for (i, q) in basis.iter().enumerate() {
            let h = dot(q, w);
            acc[i] += h.f64();
            axpy(-h, q, w);
        }
        // second pass only after heavy cancellation
        if pass == 0 && norm(w).f64() > std::f64::consts::FRAC_1_SQRT_2 * before {
            break;
        }
    }
    if let Some(c) = coeffs {
        c.copy_from_slice(&acc);
    }
}

/// Thick-restart Lanczos with full reorthogonalisation.
fn lanczos<T: Scalar, O: LinearOperator<T> + ?Sized>(op: &O, opts: &EigOptions) -> EigResult<T> {
    let dim = op.dim();
    let count = opts.count;
    let max_iter = opts.max_iter.unwrap_or_else(|| default_max_iter(10, dim)).max(count);
    let mbasis = opts.max_basis.max(2 * count + 10).min(dim);
    let keep = (count + (mbasis - count) / 3).min(mbasis.saturating_sub(1)).max(count);

    let mut q: Vec<Vec<T>> = Vec::with_capacity(mbasis);
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut r = random_start::<T>(dim, opts.seed, 0);
    let mut rnorm = 1.0f64;
    let mut iters = 0usize;
    let mut restarts = 1u64;
    let mut ritz: (Vec<f64>, Vec<Vec<f64>>) = (vec![], vec![]);
    let mut w = vec![T::zero(); dim];
    let mut converged = false;

    loop {
        // extend the basis by the normalised residual
        if rnorm <= 1e-10 * ritz.0.first().map_or(1.0, |v: &f64| v.abs().max(1.0)) || rnorm.is_nan() {
            if q.len() >= dim {
                converged = true;
                break;
            }
            r = random_start::<T>(dim, opts.seed, restarts);
            restarts += 1;
            orthogonalize(&q, &mut r, None);
            if normalize(&mut r).f64() < 1e-8 {
                converged = true;
                break;
            }
        } else {
            scale(T::of(1.0 / rnorm), &mut r);
        }
        let j = q.len();
        q.push(std::mem::take(&mut r));
        op.apply(&q[j], &mut w);
        iters += 1;
        let mut coeffs = vec![0.0; j + 1];
        orthogonalize(&q, &mut w, Some(&mut coeffs));
        for row in h.iter_mut() {
            row.push(0.0);
        }
        h.push(vec![0.0; j + 1]);
        for i in 0..=j {
            h[i][j] = coeffs[i];
            h[j][i] = coeffs[i];
        }
        rnorm = norm(&w).f64();
        r = std::mem::replace(&mut w, vec![T::zero(); dim]);

        let full = q.len() == mbasis || q.len() == dim;
        let check = full || iters >= max_iter || (q.len() >= count && q.len().is_multiple_of(4));
        if !check {
            continue;
        }
        let hs = DenseSym::from_fn(q.len(), |a, b| 0.5 * (h[a][b] + h[b][a]));
        let eig = hs.eigh();
        let jn = q.len();
        let order: Vec<usize> = (0..jn).rev().collect();
        let vals: Vec<f64> = order.iter().map(|&c| eig.values[c]).collect();
        let vecs: Vec<Vec<f64>> = order.iter().map(|&c| eig.vector(c)).collect();
        let scale_ref = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        let nconv = (0..count.min(jn)).take_while(|&i| rnorm * vecs[i][jn - 1].abs() <= opts.tol * scale_ref).count();
        ritz = (vals, vecs);
        let hit = opts.stop_above.is_some_and(|s| ritz.0[0] >= s);
        if (nconv == count && jn >= count) || q.len() == dim || hit {
            converged = nconv == count || q.len() == dim;
            break;
        }
        if iters >= max_iter {
            break;
        }
        if full {
            // thick restart: keep the leading Ritz vectors, continue from r
            let kept: Vec<Vec<T>> = (0..keep).map(|i| combine(&q, &ritz.1[i])).collect();
            q = kept;
            h = (0..keep)
                .map(|a| (0..keep).map(|b| if a == b { ritz.0[a] } else { 0.0 }).collect())
                .collect();
            ritz.1.iter_mut().for_each(|v| v.clear());
        }
    }

    if ritz.0.len() < count || ritz.1.first().is_none_or(|v| v.len() != q.len()) {
        let hs = DenseSym::from_fn(q.len(), |a, b| 0.5 * (h[a][b] + h[b][a]));
        let eig = hs.eigh();
        let jn = q.len();
        ritz = ((0..jn).rev().map(|c| eig.values[c]).collect(), (0..jn).rev().map(|c| eig.vector(c)).collect());
    }
    let take = count.min(q.len());
    let mut values = Vec::with_capacity(take);
    let mut vectors = Vec::with_capacity(take);
    let mut residuals = Vec::with_capacity(take);
    for i in 0..take {
        let mut v = combine(&q, &ritz.1[i]);
        normalize(&mut v);
        let lam = T::of(ritz.0[i]);
        op.apply(&v, &mut w);
        axpy(-lam, &v, &mut w);
        residuals.push(norm(&w));
        values.push(lam);
        vectors.push(v);
    }
    EigResult { values, vectors, iterations: iters, residuals, converged }
}

fn combine<T: Scalar>(q: &[Vec<T>], coeffs: &[f64]) -> Vec<T> {
    let mut v = vec![T::zero(); q[0].len()];
    for (qi, &c) in q.iter().zip(coeffs) {
        axpy(T::of(c), qi, &mut v);
    }
    v
}

/// Shifted power iteration with deflation. The shift is a Gershgorin-style bound
/// estimated from the first Rayleigh quotients, so the top algebraic eigenvalue
/// dominates.
fn power<T: Scalar, O: LinearOperator<T> + ?Sized>(op: &O, opts: &EigOptions) -> EigResult<T> {
    let dim = op.dim();
    let max_iter = opts.max_iter.unwrap_or_else(|| default_max_iter(10, dim));
    let mut w = vec![T::zero(); dim];
    // crude norm estimate for the shift
    let mut x = random_start::<T>(dim, opts.seed, 0);
    let mut shift = 0.0f64;
    for _ in 0..5 {
        op.apply(&x, &mut w);
        shift = shift.max(norm(&w).f64());
        x.copy_from_slice(&w);
        normalize(&mut x);
    }
    let shift = T::of(shift * 1.01);
    let mut iters = 5;
    let mut values = vec![];
    let mut vectors: Vec<Vec<T>> = vec![];
    let mut residuals = vec![];
    let mut converged = true;
    for e in 0..opts.count {
        let mut x = random_start::<T>(dim, opts.seed, e as u64 + 1);
        orthogonalize(&vectors, &mut x, None);
        normalize(&mut x);
        let mut lam = T::zero();
        let mut ok = false;
        let mut res = T::infinity();
        while iters < max_iter {
            op.apply(&x, &mut w);
            iters += 1;
            lam = dot(&x, &w);
            let mut rv = w.clone();
            axpy(-lam, &x, &mut rv);
            res = norm(&rv);
            if res.f64() <= opts.tol * lam.abs().f64().max(f64::MIN_POSITIVE) {
                ok = true;
                break;
            }
            axpy(shift, &x, &mut w);
            orthogonalize(&vectors, &mut w, None);
            normalize(&mut w);
            std::mem::swap(&mut x, &mut w);
        }
        converged &= ok;
        values.push(lam);
        residuals.push(res);
        vectors.push(x);
    }
    EigResult { values, vectors, iterations: iters, residuals, converged }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureProbs {
    /// `d_max > (1+κ) d`.
    pub degree: f64,
    /// Random-case norm bound fails.
    pub random_norm: f64,
    /// Planted eigenvalue below `λ*`.
    pub planted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionThresholds {
    pub lambda_star: f64,
    pub random_bound: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub eps_prob: f64,
    pub d: f64,
    pub m: f64,
    pub valid: bool,
    pub failure_probs: FailureProbs,
}

/// `λ* = (1−γ) ρ d` and `√(2(1+κ)(1+ε) d ln C(n,ℓ))`, with failure probabilities
/// evaluated in log space and clipped to 1.
pub fn thresholds(n: usize, k: usize, ell: usize, m: f64, rho: f64, gamma: f64, kappa: f64, eps_prob: f64) -> DetectionThresholds {
    let d = kikuchi_stats(n, k, ell, m).d;
    let ln_dim = ln_binom(n as f64, ell as f64);
    let lambda_star = (1.0 - gamma) * rho * d;
    let random_bound = (2.0 * (1.0 + kappa) * (1.0 + eps_prob) * d * ln_dim).sqrt();
    let degree = (ln_dim - kappa * kappa / (2.0 + kappa) * d).exp().min(1.0);
    let failure_probs = FailureProbs {
        degree,
        random_norm: (degree + (-eps_prob * ln_dim).exp()).min(1.0),
        planted: (-gamma * gamma * rho * rho * m / 2.0).exp().min(1.0),
    };
    DetectionThresholds {
        lambda_star,
        random_bound,
        gamma,
        kappa,
        eps_prob,
        d,
        m,
        valid: lambda_star > random_bound,
        failure_probs,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Planted,
    Random,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub lambda_hat: f64,
    pub lambda_star: f64,
    pub random_bound: f64,
    pub verdict: Verdict,
    pub seeds: Vec<u64>,
    pub iterations: usize,
    pub converged: bool,
    pub failure_probs: FailureProbs,
    pub thresholds: DetectionThresholds,
}

#[derive(Clone, Debug)]
pub struct DetectConfig {
    pub ell: usize,
    pub rho: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub eps_prob: f64,
    /// Observation count used for `d`; `None` takes `Σ|T_S|`.
    pub m: Option<f64>,
    pub eig: EigOptions,
}

impl DetectConfig {
    pub fn new(ell: usize) -> Self {
        DetectConfig { ell, rho: 1.0, gamma: 0.1, kappa: 1.0, eps_prob: 1.0, m: None, eig: EigOptions::default() }
    }
}

/// Planted if `λ̂₁ ≥ λ*`, random if `λ̂₁ ≤ random_bound`, inconclusive otherwise.
/// Runs in scalar type `T`.
pub fn detect<T: Scalar>(t: &SparseSignedTensor, cfg: &DetectConfig) -> crate::Result<Certificate> {
    let m = cfg.m.unwrap_or_else(|| t.weights().iter().map(|w| w.unsigned_abs() as f64).sum());
    let th = thresholds(t.n, t.k, cfg.ell, m, cfg.rho, cfg.gamma, cfg.kappa, cfg.eps_prob);
    if !th.valid {
        return Ok(Certificate {
            lambda_hat: f64::NAN,
            lambda_star: th.lambda_star,
            random_bound: th.random_bound,
            verdict: Verdict::Inconclusive,
            seeds: vec![cfg.eig.seed],
            iterations: 0,
            converged: false,
            failure_probs: th.failure_probs,
            thresholds: th,
        });
    }
    let op = KikuchiOperator::build(t, cfg.ell)?;
    let mut eo = cfg.eig.clone();
    eo.count = 1;
    eo.max_iter = Some(eo.max_iter.unwrap_or_else(|| default_max_iter(cfg.ell, op.dim)));
    eo.stop_above = Some(th.lambda_star);
    let res: EigResult<T> = top_eigs(&op, &eo);
    let lambda_hat = res.values.first().map_or(0.0, |v| v.f64());
    let verdict = if lambda_hat >= th.lambda_star {
        Verdict::Planted
    } else if lambda_hat <= th.random_bound {
        Verdict::Random
    } else {
        Verdict::Inconclusive
    };
    if !res.converged && verdict != Verdict::Planted {
        log::warn!("eigensolver stopped after {} matvecs without converging", res.iterations);
    }
    Ok(Certificate {
        lambda_hat,
        lambda_star: th.lambda_star,
        random_bound: th.random_bound,
        verdict,
        seeds: vec![eo.seed],
        iterations: res.iterations,
        converged: res.converged,
        failure_probs: th.failure_probs,
        thresholds: th,
    })
}
