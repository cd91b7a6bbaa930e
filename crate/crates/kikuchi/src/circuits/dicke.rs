//! Weight-1 Dicke gadgets: the controlled-Hadamard ladder `U†` on `2^l` qubits
//! and the Givens network `D^c_1` used for one-hot shuffling.

use serde::Serialize;

use super::ir::{CircuitIR, Gate, Role};
use super::sim::StateVec;
use crate::combinatorics::binom;
use crate::error::Result;

/// `U†` on `k = 2^l` qubits, mapping `|10…0⟩` to the uniform weight-1 state.
/// Qubit 0 is the first qubit.
pub fn dicke_prep(l: u32) -> CircuitIR {
    let k = 1usize << l;
    let mut c = CircuitIR::new();
    c.add_register("q", Role::Data, k);
    for i in 1..=l {
        c.push(Gate::Ch { c: 0, t: (1 << i) - 1 });
    }
    for i in 1..=l as usize {
        if i == 1 {
            c.push(Gate::Cx { c: 1, t: 0 });
            continue;
        }
        let top = (1 << i) - 1;
        let half = 1 << (i - 1);
        for j in 0..half - 1 {
            c.push(Gate::Toffoli { c0: top, c1: j, t: half + j });
            c.push(Gate::Cx { c: half + j, t: j });
            c.push(Gate::Cx { c: half + j, t: top });
        }
        c.push(Gate::Cx { c: top, t: half - 1 });
    }
    c
}

/// `2^l + l − 1`.
pub fn dicke_resource_formula(l: u32) -> u64 {
    (1u64 << l) + l as u64 - 1
}

/// `D^c_1 = Π_{i=1}^{c−1} G_{i,i+1}(1/√(c+1−i))`.
pub fn dicke_w(c: usize) -> CircuitIR {
    let mut circ = CircuitIR::new();
    circ.add_register("g", Role::Data, c);
    for i in 1..c {
        let a = 1.0 / ((c + 1 - i) as f64).sqrt();
        circ.push(Gate::Givens { a: i - 1, b: i, theta: a.acos() });
    }
    circ
}

/// `D^{c†}_1`: merges a one-hot group into its first qubit with probability `1/c`.
pub fn one_hot_shuffle(c: usize) -> CircuitIR {
    dicke_w(c).inverse()
}

/// Uniform superposition over weight-`p` strings on `k` qubits.
pub fn dicke_state(k: usize, p: usize) -> Result<StateVec> {
    let mut s = StateVec::zero(k)?;
    s.amps[0].re = 0.0;
    let a = 1.0 / (binom(k, p) as f64).sqrt();
    for (i, x) in s.amps.iter_mut().enumerate() {
        if i.count_ones() as usize == p {
            x.re = a;
        }
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct DickeCheck {
    pub l: u32,
    /// `‖U|0⟩ − |0⟩‖`.
    pub zero_error: f64,
    /// `‖U|D₁⟩ − |e₁⟩‖`.
    pub weight_one_error: f64,
    /// Largest weight of `U|D_p⟩` on `|·⟩|0⟩^{k−1}` over `1 < p ≤ k`.
    pub leakage: f64,
    /// Largest `|‖Uψ‖ − 1|` seen.
    pub norm_drift: f64,
}

impl DickeCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.zero_error <= tol && self.weight_one_error <= tol && self.leakage <= tol && self.norm_drift <= tol
    }
}

/// Checks the three defining conditions of `U = dicke_prep(l)†` on the simulator.
pub fn check_dicke(l: u32) -> Result<DickeCheck> {
    let k = 1usize << l;
    let u = dicke_prep(l).inverse();
    let dist = |s: &StateVec, idx: usize| -> f64 {
        s.amps.iter().enumerate().map(|(i, x)| (x - if i == idx { 1.0 } else { 0.0 }).norm_sqr()).sum::<f64>().sqrt()
    };
    let mut drift: f64 = 0.0;
    let mut s0 = StateVec::zero(k)?;
    s0.run(&u);
    drift = drift.max((s0.norm() - 1.0).abs());
    let mut s1 = dicke_state(k, 1)?;
    s1.run(&u);
    drift = drift.max((s1.norm() - 1.0).abs());
    let mut leakage: f64 = 0.0;
    for p in 2..=k {
        let mut s = dicke_state(k, p)?;
        s.run(&u);
        drift = drift.max((s.norm() - 1.0).abs());
        leakage = leakage.max(s.amps[0].norm_sqr() + s.amps[1].norm_sqr());
    }
    Ok(DickeCheck { l, zero_error: dist(&s0, 0), weight_one_error: dist(&s1, 1), leakage, norm_drift: drift })
}

#[derive(Clone, Debug, Serialize)]
pub struct ShuffleCheck {
    pub c: usize,
    /// Acceptance probability of each weight-1 input.
    pub weight_one_success: Vec<f64>,
    /// `1 − |⟨0|D†|0⟩|²`.
    pub weight_zero_error: f64,
    /// Largest accepted weight over inputs of weight ≥ 2.
    pub leakage: f64,
}

impl ShuffleCheck {
    pub fn passes(&self, tol: f64) -> bool {
        let target = 1.0 / self.c as f64;
        self.weight_one_success.iter().all(|p| (p - target).abs() <= tol) && self.weight_zero_error <= tol && self.leakage <= tol
    }
}

/// Postselection on qubits `2..c` being zero after `D^{c†}_1`, for every basis input.
pub fn check_shuffle(c: usize) -> Result<ShuffleCheck> {
    let circ = one_hot_shuffle(c);
    let mut ones = Vec::new();
    let mut zero_err = 0.0;
    let mut leakage: f64 = 0.0;
    for input in 0..1usize << c {
        let mut s = StateVec::basis(c, input)?;
        s.run(&circ);
        // accepted: only qubit 0 may be set
        let acc1 = s.amps[1].norm_sqr();
        let acc0 = s.amps[0].norm_sqr();
        match input.count_ones() {
            0 => zero_err = 1.0 - acc0,
            1 => ones.push(acc1),
            _ => leakage = leakage.max(acc0 + acc1),
        }
    }
    Ok(ShuffleCheck { c, weight_one_success: ones, weight_zero_error: zero_err, leakage })
}
