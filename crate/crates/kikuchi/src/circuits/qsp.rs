//! QSP response evaluation and the effect of rounding the phases.
//!
//! Convention: `W(a) = [[a, i√(1−a²)], [i√(1−a²), a]]` and
//! `U(a) = W(a) Π_j e^{iφ_j Z} W(a)`, so the response `⟨0|U(a)|0⟩` of the
//! empty list is `a` and that of `d` zero phases is `T_{d+1}(a)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

type C = Complex64;
type M2 = [[C; 2]; 2];

fn mul(x: &M2, y: &M2) -> M2 {
    let mut z = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    z
}

fn signal(a: f64) -> M2 {
    let s = C::new(0.0, (1.0 - a * a).max(0.0).sqrt());
    [[C::new(a, 0.0), s], [s, C::new(a, 0.0)]]
}

fn phase(phi: f64) -> M2 {
    [[C::from_polar(1.0, phi), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::from_polar(1.0, -phi)]]
}

/// Full 2×2 sequence unitary.
pub fn qsp_unitary(phases: &[f64], a: f64) -> [[Complex64; 2]; 2] {
    let w = signal(a);
    let mut u = w;
    for &p in phases {
        u = mul(&u, &mul(&phase(p), &w));
    }
    u
}

/// `⟨0|U(a)|0⟩`.
pub fn qsp_response(phases: &[f64], a: f64) -> Complex64 {
    qsp_unitary(phases, a)[0][0]
}

/// Largest singular value of a 2×2 complex matrix.
fn op_norm(m: &M2) -> f64 {
    // eigenvalues of M†M
    let g00 = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let g11 = m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let g01 = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
    let tr = g00 + g11;
    let det = g00 * g11 - g01.norm_sqr();
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 + disc).max(0.0).sqrt()
}

/// Nearest multiple of `2ε`, so each angle moves by at most `ε`.
pub fn round_phase(phi: f64, eps: f64) -> f64 {
    let step = 2.0 * eps;
    (phi / step).round() * step
}

/// Signal grid used by [`qsp_rounding_error`].
pub const SIGNAL_GRID: usize = 201;

/// `max_a ‖U_rounded(a) − U(a)‖` over an even grid on `[−1, 1]`.
pub fn qsp_rounding_error(phases: &[f64], eps: f64) -> f64 {
    let rounded: Vec<f64> = phases.iter().map(|&p| round_phase(p, eps)).collect();
    (0..SIGNAL_GRID)
        .map(|i| {
            let a = -1.0 + 2.0 * i as f64 / (SIGNAL_GRID - 1) as f64;
            let (x, y) = (qsp_unitary(phases, a), qsp_unitary(&rounded, a));
            let d = [[x[0][0] - y[0][0], x[0][1] - y[0][1]], [x[1][0] - y[1][0], x[1][1] - y[1][1]]];
            op_norm(&d)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundingSweep {
    pub epsilons: Vec<f64>,
    pub deviations: Vec<f64>,
    /// Least-squares slope of log deviation against log ε.
    pub slope: f64,
    /// `max deviation / (2 · phases · ε)`.
    pub worst_bound_ratio: f64,
}

pub fn rounding_sweep(phases: &[f64], epsilons: &[f64]) -> RoundingSweep {
    let dev: Vec<f64> = epsilons.iter().map(|&e| qsp_rounding_error(phases, e)).collect();
    let xs: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = dev.iter().map(|d| d.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let ratio = epsilons
        .iter()
        .zip(&dev)
        .map(|(e, d)| d / (2.0 * phases.len().max(1) as f64 * e))
        .fold(0.0, f64::max);
    RoundingSweep { epsilons: epsilons.to_vec(), deviations: dev, slope: sxy / sxx, worst_bound_ratio: ratio }
}

/// Parses a JSON array of radians.
pub fn phases_from_json(text: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = serde_json::from_str(text)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parse("phase list holds a non-finite angle".into()));
    }
    Ok(v)
}

/// Uniform phases in `[−π, π)` from a seeded stream.
pub fn random_phases(len: usize, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = crate::rng::stream(seed, crate::rng::purpose::PHASES);
    (0..len).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}
