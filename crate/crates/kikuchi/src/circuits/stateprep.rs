//! `|φ⟩ ∝ Σ T_S |S⟩` from a dense index register, and the guiding-state
//! preparation built from `c` copies of it merged by one-hot shuffling.

use serde::Serialize;

use super::dicke::one_hot_shuffle;
use super::ir::{CircuitIR, Ctrl, Gate, Role};
use super::sim::StateVec;
use crate::combinatorics::SubsetIndexer;
use crate::error::{Error, Result};
use crate::model::SparseSignedTensor;

fn dense_width(m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

fn check_signed(t: &SparseSignedTensor) -> Result<()> {
    if t.is_empty() {
        return Err(Error::Degenerate("state preparation needs at least one entry".into()));
    }
    if t.weights().iter().any(|w| w.abs() != 1) {
        return Err(Error::InvalidParams("circuit state preparation takes ±1 entries (simple sampling mode)".into()));
    }
    Ok(())
}

/// Appends the preparation of `|φ⟩` on `data` using `dense` as the index
/// register. The dense register returns to zero on the first `m` branches.
fn push_state_prep(circ: &mut CircuitIR, t: &SparseSignedTensor, dense: &[usize], data: &[usize]) {
    for &q in dense {
        circ.push(Gate::H(q));
    }
    for (i, (s, w)) in t.iter().enumerate() {
        let ctl = Ctrl::pattern(dense, i as u64);
        for &v in s {
            if ctl.is_empty() {
                circ.push(Gate::X(data[v as usize]));
            } else {
                circ.push(Gate::Mcx { controls: ctl.clone(), t: data[v as usize] });
            }
        }
        if w < 0 {
            if ctl.is_empty() {
                // global sign on a single entry
                circ.push(Gate::X(data[s[0] as usize]));
                circ.push(Gate::Z(data[s[0] as usize]));
                circ.push(Gate::X(data[s[0] as usize]));
                circ.push(Gate::Z(data[s[0] as usize]));
            } else {
                circ.push(Gate::Mcz { controls: ctl });
            }
        }
    }
    for (i, (s, _)) in t.iter().enumerate() {
        let ctl: Vec<Ctrl> = s.iter().map(|&v| Ctrl::on(data[v as usize])).collect();
        for (b, &q) in dense.iter().enumerate() {
            if (i >> b) & 1 == 1 {
                circ.push(Gate::Mcx { controls: ctl.clone(), t: q });
            }
        }
    }
}

/// One copy: registers `s` (dense, `⌈log₂ m⌉` qubits) then `data` (n qubits).
pub fn state_prep_circuit(t: &SparseSignedTensor) -> Result<CircuitIR> {
    check_signed(t)?;
    let mut c = CircuitIR::new();
    let s = c.add_register("s", Role::Dense, dense_width(t.len()));
    let d = c.add_register("data", Role::Data, t.n);
    push_state_prep(&mut c, t, &s.qubits(), &d.qubits());
    Ok(c)
}

/// `2 m s k + s`.
pub fn state_prep_gate_bound(m: usize, k: usize) -> u64 {
    let s = dense_width(m) as u64;
    2 * m as u64 * s * k as u64 + s
}

/// `c` copies `s0, data0, s1, data1, …`, followed by `D^{c†}_1` on each
/// variable group `(data0[v], …, data{c−1}[v])`. Success means every dense
/// register and every data register but the first reads zero.
pub fn guiding_prep_circuit(t: &SparseSignedTensor, c: usize) -> Result<CircuitIR> {
    check_signed(t)?;
    if c == 0 {
        return Err(Error::InvalidParams("c must be positive".into()));
    }
    let sw = dense_width(t.len());
    let mut circ = CircuitIR::new();
    let mut datas = Vec::new();
    for r in 0..c {
        let s = circ.add_register(&format!("s{r}"), Role::Dense, sw);
        let d = circ.add_register(&format!("data{r}"), if r == 0 { Role::Data } else { Role::Ancilla }, t.n);
        push_state_prep(&mut circ, t, &s.qubits(), &d.qubits());
        datas.push(d);
    }
    let shuffle = one_hot_shuffle(c);
    for v in 0..t.n {
        let group: Vec<usize> = datas.iter().map(|d| d.qubit(v)).collect();
        circ.append_mapped(&shuffle, &group);
    }
    Ok(circ)
}

#[derive(Clone, Debug, Serialize)]
pub struct GuidingSimulation {
    pub qubits: usize,
    /// Probability that every flagged register reads zero.
    pub success_probability: f64,
    /// Success conditioned on the dense registers resetting, `success / (m/2^s)^c`.
    pub shuffle_success_probability: f64,
    /// Accepted data-register amplitudes over ranked ℓ-subsets, normalised.
    pub accepted: Vec<f64>,
    /// Accepted weight outside Hamming weight ℓ.
    pub off_weight: f64,
    /// Largest imaginary part seen on the accepted branch.
    pub imag: f64,
}

/// Runs [`guiding_prep_circuit`] on the dense simulator.
pub fn simulate_guiding_prep(t: &SparseSignedTensor, ell: usize) -> Result<GuidingSimulation> {
    if t.k == 0 || !ell.is_multiple_of(t.k) || ell == 0 {
        return Err(Error::InvalidParams(format!("ell = {ell} must be a positive multiple of k = {}", t.k)));
    }
    let c = ell / t.k;
    let circ = guiding_prep_circuit(t, c)?;
    let mut st = StateVec::zero(circ.num_qubits)?;
    st.run(&circ);
    let data0 = circ.register("data0").expect("data0 register").qubits();
    let mut mask = 0usize;
    for r in &circ.registers {
        if r.name != "data0" {
            for q in r.qubits() {
                mask |= 1 << q;
            }
        }
    }
    let ix = SubsetIndexer::new(t.n, ell);
    let mut accepted = vec![0.0; ix.dim() as usize];
    let (mut succ, mut off, mut imag) = (0.0, 0.0, 0.0f64);
    for (i, a) in st.amps.iter().enumerate() {
        if i & mask != 0 || a.norm_sqr() == 0.0 {
            continue;
        }
        succ += a.norm_sqr();
        imag = imag.max(a.im.abs());
        let word = super::sim::decode(&data0, i as u128);
        if word.count_ones() as usize == ell {
            accepted[ix.rank_mask(word) as usize] = a.re;
        } else {
            off += a.norm_sqr();
        }
    }
    let nrm = accepted.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm > 0.0 {
        accepted.iter_mut().for_each(|x| *x /= nrm);
    }
    let sw = dense_width(t.len());
    let reset = (t.len() as f64 / (1u64 << sw) as f64).powi(c as i32);
    Ok(GuidingSimulation {
        qubits: circ.num_qubits,
        success_probability: succ,
        shuffle_success_probability: succ / reset,
        accepted,
        off_weight: off,
        imag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::mask_of;

    fn tensor(n: usize, k: usize, entries: &[(&[u32], i64)]) -> SparseSignedTensor {
        SparseSignedTensor::from_entries(n, k, true, entries.iter().map(|(s, w)| (s.to_vec(), *w))).unwrap()
    }

    #[test]
    fn single_copy_state() {
        let t = tensor(4, 2, &[(&[0, 1], 1), (&[1, 3], -1)]);
        let c = state_prep_circuit(&t).unwrap();
        assert_eq!(c.num_qubits, 5);
        let mut s = StateVec::zero(5).unwrap();
        s.run(&c);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let idx = |m: u128| (m << 1) as usize;
        assert!((s.amps[idx(mask_of(&[0, 1]))].re - h).abs() < 1e-12);
        assert!((s.amps[idx(mask_of(&[1, 3]))].re + h).abs() < 1e-12);
        assert!(c.counts().gate_count <= state_prep_gate_bound(2, 2));
    }

    #[test]
    fn positive_signs_emit_no_phase() {
        let t = tensor(6, 2, &[(&[0, 1], 1), (&[2, 3], 1), (&[4, 5], 1)]);
        let c = state_prep_circuit(&t).unwrap();
        assert!(!c.gates.iter().any(|g| matches!(g, Gate::Mcz { .. } | Gate::Z(_) | Gate::Cz(..))));
    }

    #[test]
    fn c1_is_phi() {
        let t = tensor(4, 2, &[(&[0, 1], 1), (&[2, 3], -1)]);
        let r = simulate_guiding_prep(&t, 2).unwrap();
        assert!((r.success_probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_weighted() {
        let t = tensor(4, 2, &[(&[0, 1], 2)]);
        assert!(state_prep_circuit(&t).is_err());
    }
}
