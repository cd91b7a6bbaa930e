//! Block-encoding oracles for the Kikuchi matrix.
//!
//! The walk uses registers 𝒜 (index `U`), ℬ (`b = ⌈log₂ d_max⌉` qubits
//! holding the neighbour number `j`), 𝒞 (amplitude), 𝒟 (counter), ℰ (copy of
//! 𝒜) and two single-qubit flags. `R` = copy 𝒜 into ℰ, then
//!
//! * block 1, forward over entries: when `S_i` is a neighbour of `U` and the
//!   counter equals `j`, XOR `S_i` into ℰ and rotate 𝒞; then count `S_i`;
//! * block 2, backward: uncount `S_i`, and when `𝒜 Δ S_i = ℰ` XOR the counter
//!   into ℬ, erasing `j`.
//!
//! `U_𝒦 = R_left† · SWAP(𝒜, ℰ) · R_right`, where only `R_right` touches 𝒞.
//! Then `⟨V,0,…|U_𝒦|U,0,…⟩ = 𝒦_{V,U} / (2^b w_max)`.

use serde::Serialize;

use super::ir::{CircuitIR, Ctrl, Gate, Register, Role};
use super::sim::{encode, SparseState};
use crate::combinatorics::{binom, mask_of, SubsetIndexer};
use crate::error::{Error, Result};
use crate::kikuchi::KikuchiOperator;
use crate::model::SparseSignedTensor;

/// Counter width of the `P_i` gadget at k = 4.
pub const P_COUNTER_BITS: usize = 7;

/// XOR of `[|x| = k/2]` over `qubits` into `flag`.
///
/// At k = 4 this uses six C³X gates: each weight-2 point `{i,j}` is paired with
/// one of its weight-1 neighbours along an orientation of K₄ in which every
/// weight-1 point is hit twice, so the line terms cancel outside weight 2.
fn half_weight_flag(qubits: &[usize], flag: usize) -> Vec<Gate> {
    let k = qubits.len();
    if k == 4 {
        // (pair, endpoint kept): 03→0, 13→1, 23→2, 01→1, 12→2, 20→0
        const ORIENT: [((usize, usize), usize); 6] = [((0, 3), 0), ((1, 3), 1), ((2, 3), 2), ((0, 1), 1), ((1, 2), 2), ((0, 2), 0)];
        return ORIENT
            .iter()
            .map(|&((a, b), keep)| {
                let free = if keep == a { b } else { a };
                let controls = (0..4).filter(|&v| v != free).map(|v| Ctrl { q: qubits[v], on: v == keep }).collect();
                Gate::Mcx { controls, t: flag }
            })
            .collect();
    }
    let mut gates = Vec::new();
    for pat in 0u64..1 << k {
        if pat.count_ones() as usize == k / 2 {
            gates.push(Gate::Mcx { controls: Ctrl::pattern(qubits, pat), t: flag });
        }
    }
    gates
}

/// `counter += 1` controlled by `ctrl` (MCX ladder, most significant bit first).
fn increment(ctrl: usize, counter: &[usize]) -> Vec<Gate> {
    (0..counter.len())
        .rev()
        .map(|t| {
            let mut controls = vec![Ctrl::on(ctrl)];
            controls.extend(counter[..t].iter().map(|&q| Ctrl::on(q)));
            Gate::Mcx { controls, t: counter[t] }
        })
        .collect()
}

fn decrement(ctrl: usize, counter: &[usize]) -> Vec<Gate> {
    let mut g = increment(ctrl, counter);
    g.reverse();
    g
}

/// The `P_i` gadget on k data qubits: Hamming-condition flag, controlled
/// increment of a `counter_bits`-bit counter, flag uncompute.
pub fn p_gadget(k: usize, counter_bits: usize) -> CircuitIR {
    let mut c = CircuitIR::new();
    let a = c.add_register("A", Role::Data, k).qubits();
    let flag = c.add_register("anc", Role::Ancilla, 1).qubit(0);
    let d = c.add_register("D", Role::Counter, counter_bits).qubits();
    let fl = half_weight_flag(&a, flag);
    c.extend(fl.clone());
    c.extend(increment(flag, &d));
    c.extend(fl);
    c
}

/// Depth of `P_i` as composed: incrementor `w − 1`, then the
/// `k(k−1)/2` Hamming-condition layers and one more for the flag.
pub fn p_gadget_closed_depth(k: usize, counter_bits: usize) -> u64 {
    (counter_bits as u64 - 1) + (k * (k - 1) / 2) as u64 + 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GadgetCost {
    pub toffolis: u64,
    pub depth: u64,
}

/// Comparator of 𝒟 against ℬ controlling the 𝒞 rotation (TACU, uncompute
/// Toffolis only; fan-in depth ⌈log₂ 6⌉).
pub const U1_COST: GadgetCost = GadgetCost { toffolis: 6, depth: 3 };
/// Clause-XOR comparator of the 𝒜/ℰ registers.
pub const U2_COST: GadgetCost = GadgetCost { toffolis: 8, depth: 3 };
/// Links from ℰ to the comparator ancilla for |ℰ| = 1.
pub const E_LINK_COST: GadgetCost = GadgetCost { toffolis: 2, depth: 2 };

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OhTermCost {
    pub k: usize,
    pub p_toffolis: u64,
    pub p_depth: u64,
    /// Per-term non-Clifford count b.
    pub count: u64,
    /// Per-term depth b′.
    pub depth: u64,
    /// True when the comparator constants were taken at k = 4 and scaled.
    pub extrapolated: bool,
}

/// Per-term cost of `O_H`: four `P_i` passes (blocks 1–4), two copies of
/// each comparator, one ℰ link. The depth counts one comparator layer of each
/// kind. Gives (210, 60) at k = 4.
pub fn oh_term_cost(k: usize) -> OhTermCost {
    let p = p_gadget(k, P_COUNTER_BITS).counts();
    let p_depth = p_gadget_closed_depth(k, P_COUNTER_BITS);
    let scale = |x: u64| ((x * k as u64) as f64 / 4.0).round() as u64;
    let (u1, u2, e) = if k == 4 {
        (U1_COST, U2_COST, E_LINK_COST)
    } else {
        (
            U1_COST,
            GadgetCost { toffolis: scale(U2_COST.toffolis), depth: U2_COST.depth },
            GadgetCost { toffolis: scale(E_LINK_COST.toffolis), depth: E_LINK_COST.depth },
        )
    };
    OhTermCost {
        k,
        p_toffolis: p.toffoli_count,
        p_depth,
        count: 4 * p.toffoli_count + 2 * u1.toffolis + 2 * u2.toffolis + e.toffolis,
        depth: 4 * p_depth + u1.depth + u2.depth + e.depth,
        extrapolated: k != 4,
    }
}

/// Registers of the walk circuit.
#[derive(Clone, Debug)]
pub struct WalkLayout {
    pub a: Register,
    pub b: Register,
    pub c: Register,
    pub d: Register,
    pub e: Register,
    pub flag: usize,
    pub act: usize,
}

#[derive(Clone, Debug)]
pub struct OracleCircuits {
    pub ell: usize,
    pub b: usize,
    pub d_max: u32,
    pub w_max: f64,
    /// 𝒜 → ℰ copy plus blocks 1, 2 without rotation: `|U, j⟩ ↦ |U, 0, V(j,U)⟩`.
    pub o_a: CircuitIR,
    /// Copy plus blocks 1, 2 with the 𝒞 rotation (𝒞 starts at |1⟩).
    pub o_e: CircuitIR,
    /// Full `U_𝒦`.
    pub o_h: CircuitIR,
    pub layout: WalkLayout,
}

fn layout(n: usize, b: usize) -> (CircuitIR, WalkLayout) {
    let mut c = CircuitIR::new();
    let a = c.add_register("A", Role::Data, n);
    let bb = c.add_register("B", Role::Sparsity, b);
    let cc = c.add_register("C", Role::Amplitude, 1);
    let d = c.add_register("D", Role::Counter, b + 1);
    let e = c.add_register("E", Role::Scratch, n);
    let flag = c.add_register("flag", Role::Ancilla, 1).qubit(0);
    let act = c.add_register("act", Role::Ancilla, 1).qubit(0);
    (c, WalkLayout { a, b: bb, c: cc, d, e, flag, act })
}

/// Copy 𝒜 into ℰ, block 1, block 2.
fn push_walk(circ: &mut CircuitIR, t: &SparseSignedTensor, l: &WalkLayout, w_max: f64, rotate: bool) {
    let (a, bq, d, e) = (l.a.qubits(), l.b.qubits(), l.d.qubits(), l.e.qubits());
    for (&x, &y) in a.iter().zip(&e) {
        circ.push(Gate::Cx { c: x, t: y });
    }
    let entries: Vec<(Vec<usize>, f64)> = t.iter().map(|(s, w)| (s.iter().map(|&v| v as usize).collect(), w as f64)).collect();
    let b_to_d = |circ: &mut CircuitIR| {
        for (&x, &y) in bq.iter().zip(&d) {
            circ.push(Gate::Cx { c: x, t: y });
        }
    };
    let counter_match = {
        let mut controls = vec![Ctrl::on(l.flag)];
        controls.extend(d.iter().map(|&q| Ctrl::off(q)));
        Gate::Mcx { controls, t: l.act }
    };
    for (s, w) in &entries {
        let on_a: Vec<usize> = s.iter().map(|&v| a[v]).collect();
        let flag = half_weight_flag(&on_a, l.flag);
        circ.extend(flag.clone());
        b_to_d(circ);
        circ.push(counter_match.clone());
        b_to_d(circ);
        for &v in s {
            circ.push(Gate::Cx { c: l.act, t: e[v] });
        }
        if rotate {
            let theta = -2.0 * (w / w_max).asin();
            circ.push(Gate::McRy { controls: vec![Ctrl::on(l.act)], t: l.c.qubit(0), theta });
        }
        b_to_d(circ);
        circ.push(counter_match.clone());
        b_to_d(circ);
        circ.extend(increment(l.flag, &d));
        circ.extend(flag);
    }
    for (s, _) in entries.iter().rev() {
        let on_a: Vec<usize> = s.iter().map(|&v| a[v]).collect();
        let flag = half_weight_flag(&on_a, l.flag);
        circ.extend(flag.clone());
        circ.extend(decrement(l.flag, &d));
        let mut xor = Vec::new();
        for (&x, &y) in a.iter().zip(&e) {
            xor.push(Gate::Cx { c: x, t: y });
        }
        for &v in s {
            xor.push(Gate::X(e[v]));
        }
        let mut controls = vec![Ctrl::on(l.flag)];
        controls.extend(e.iter().map(|&q| Ctrl::off(q)));
        let matched = Gate::Mcx { controls, t: l.act };
        circ.extend(xor.clone());
        circ.push(matched.clone());
        circ.extend(xor.clone());
        for (&x, &y) in d.iter().zip(&bq) {
            circ.push(Gate::Toffoli { c0: l.act, c1: x, t: y });
        }
        circ.extend(xor.clone());
        circ.push(matched);
        circ.extend(xor);
        circ.extend(flag);
    }
}

/// Number of qubits needed for `ℬ`.
pub fn sparsity_bits(d_max: u32) -> usize {
    if d_max <= 1 {
        0
    } else {
        (u32::BITS - (d_max - 1).leading_zeros()) as usize
    }
}

/// Builds `O_A`, `O_E` and `U_𝒦` for a tensor at level ℓ.
pub fn oracle_circuits(t: &SparseSignedTensor, ell: usize) -> Result<OracleCircuits> {
    if !t.k.is_multiple_of(2) || ell < t.k / 2 || ell > t.n {
        return Err(Error::InvalidParams(format!("need even k and k/2 ≤ ell ≤ n (k = {}, ell = {ell})", t.k)));
    }
    let d_max = degree_max(t, ell);
    let b = sparsity_bits(d_max);
    let w_max = t.max_abs_weight().max(1) as f64;
    let (base, l) = layout(t.n, b);

    let mut o_a = base.clone();
    push_walk(&mut o_a, t, &l, w_max, false);

    let mut o_e = base.clone();
    o_e.push(Gate::X(l.c.qubit(0)));
    push_walk(&mut o_e, t, &l, w_max, true);

    let mut right = base.clone();
    right.push(Gate::X(l.c.qubit(0)));
    for q in l.b.qubits() {
        right.push(Gate::H(q));
    }
    push_walk(&mut right, t, &l, w_max, true);
    let mut left = base.clone();
    for q in l.b.qubits() {
        left.push(Gate::H(q));
    }
    push_walk(&mut left, t, &l, w_max, false);
    let mut o_h = right;
    for (&x, &y) in l.a.qubits().iter().zip(&l.e.qubits()) {
        o_h.push(Gate::Swap(x, y));
    }
    o_h.gates.extend(left.inverse().gates);

    Ok(OracleCircuits { ell, b, d_max, w_max, o_a, o_e, o_h, layout: l })
}

/// Largest column sparsity of 𝒦_ℓ, counted from the tensor alone.
pub fn degree_max(t: &SparseSignedTensor, ell: usize) -> u32 {
    let (n, k) = (t.n, t.k);
    let ix = SubsetIndexer::new(n, ell);
    if ix.dim() > 5_000_000 {
        return KikuchiOperator::build(t, ell).map(|op| op.d_max()).unwrap_or(0);
    }
    let masks: Vec<u128> = t.iter().map(|(s, _)| mask_of(s)).collect();
    let mut best = 0u32;
    let mut u = vec![0u32; ell];
    for r in 0..ix.dim() {
        ix.unrank_into(r, &mut u);
        let mu = mask_of(&u);
        let deg = masks.iter().filter(|&&s| (mu & s).count_ones() as usize * 2 == k).count() as u32;
        best = best.max(deg);
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockEncodingCheck {
    pub dim: u64,
    pub b: usize,
    pub d_max: u32,
    pub w_max: f64,
    pub qubits: usize,
    /// `max |⟨0,0,V|U_𝒦|0,0,U⟩ − 𝒦_{V,U}/(2^b w_max)|`.
    pub max_deviation: f64,
    /// `max |‖U_𝒦 ψ‖ − 1|` over the basis inputs.
    pub norm_drift: f64,
    /// Pairs with a nonzero block-encoded entry.
    pub nonzero: usize,
}

/// Compares every `⟨V,0,…|U_𝒦|U,0,…⟩` with the explicit Kikuchi matrix.
pub fn block_encoding_check(t: &SparseSignedTensor, ell: usize) -> Result<BlockEncodingCheck> {
    let oc = oracle_circuits(t, ell)?;
    let ix = SubsetIndexer::new(t.n, ell);
    if ix.dim() > 20_000 {
        return Err(Error::DimensionCap { dim: ix.dim(), cap: 20_000 });
    }
    let op = KikuchiOperator::build(t, ell)?;
    let a = oc.layout.a.qubits();
    let scale = 1.0 / ((1u64 << oc.b) as f64 * oc.w_max);
    let mut dev: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let mut nonzero = 0;
    let mut subset = vec![0u32; ell];
    let mut mask_v = Vec::with_capacity(ix.dim() as usize);
    for r in 0..ix.dim() {
        ix.unrank_into(r, &mut subset);
        mask_v.push(encode(&a, mask_of(&subset)));
    }
    for u in 0..ix.dim() as usize {
        let mut st = SparseState::basis(mask_v[u]);
        st.run(&oc.o_h);
        drift = drift.max((st.norm() - 1.0).abs());
        for v in 0..ix.dim() as usize {
            let got = st.get(mask_v[v]);
            let want = op.entry(v, u) * scale;
            dev = dev.max((got.re - want).abs()).max(got.im.abs());
            if got.norm() > 1e-12 {
                nonzero += 1;
            }
        }
    }
    Ok(BlockEncodingCheck {
        dim: ix.dim(),
        b: oc.b,
        d_max: oc.d_max,
        w_max: oc.w_max,
        qubits: oc.o_h.num_qubits,
        max_deviation: dev,
        norm_drift: drift,
        nonzero,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjacencyCheck {
    /// (U, j) inputs with `j < σ(U)` that were checked.
    pub checked: usize,
    /// Inputs whose output differed from `|U, 0, V(j,U)⟩`.
    pub mismatches: usize,
}

/// Exhaustive basis-state check of `O_A` against the set-map definition.
pub fn adjacency_check(t: &SparseSignedTensor, ell: usize) -> Result<AdjacencyCheck> {
    let oc = oracle_circuits(t, ell)?;
    let l = &oc.layout;
    let ix = SubsetIndexer::new(t.n, ell);
    let masks: Vec<u128> = t.iter().map(|(s, _)| mask_of(s)).collect();
    let mut subset = vec![0u32; ell];
    let (mut checked, mut bad) = (0, 0);
    for r in 0..ix.dim() {
        ix.unrank_into(r, &mut subset);
        let mu = mask_of(&subset);
        let nbrs: Vec<u128> = masks.iter().filter(|&&s| (mu & s).count_ones() as usize * 2 == t.k).map(|&s| mu ^ s).collect();
        for (j, &v) in nbrs.iter().enumerate() {
            let input = encode(&l.a.qubits(), mu) | encode(&l.b.qubits(), j as u128);
            let mut st = SparseState::basis(input);
            st.run(&oc.o_a);
            let want = encode(&l.a.qubits(), mu) | encode(&l.e.qubits(), v);
            checked += 1;
            if st.amps.len() != 1 || (st.get(want).re - 1.0).abs() > 1e-12 {
                bad += 1;
            }
        }
    }
    Ok(AdjacencyCheck { checked, mismatches: bad })
}

/// `C(k, k/2)` Hamming patterns each `P_i` distinguishes.
pub fn p_patterns(k: usize) -> u64 {
    binom(k, k / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::sim::StateVec;

    #[test]
    fn p_gadget_k4() {
        let p = p_gadget(4, P_COUNTER_BITS).counts();
        assert_eq!(p.toffoli_count, 45);
        assert_eq!(p_gadget_closed_depth(4, P_COUNTER_BITS), 13);
        let oh = oh_term_cost(4);
        assert_eq!((oh.count, oh.depth), (210, 60));
    }

    #[test]
    fn half_weight_flag_semantics() {
        for k in [2, 4, 6] {
            let mut c = CircuitIR::new();
            let q = c.add_register("q", Role::Data, k).qubits();
            let f = c.add_register("f", Role::Ancilla, 1).qubit(0);
            c.extend(half_weight_flag(&q, f));
            for x in 0..1usize << k {
                let mut s = StateVec::basis(k + 1, x).unwrap();
                s.run(&c);
                let expect = x | (((x.count_ones() as usize * 2 == k) as usize) << f);
                assert!((s.amps[expect].re - 1.0).abs() < 1e-12, "k = {k}, x = {x:b}");
            }
        }
    }

    #[test]
    fn increment_wraps() {
        let mut c = CircuitIR::new();
        let f = c.add_register("f", Role::Ancilla, 1).qubit(0);
        let d = c.add_register("d", Role::Counter, 3).qubits();
        c.extend(increment(f, &d));
        for v in 0..8usize {
            let mut s = StateVec::basis(4, 1 | (v << 1)).unwrap();
            s.run(&c);
            assert!((s.amps[1 | (((v + 1) % 8) << 1)].re - 1.0).abs() < 1e-12);
        }
    }

    fn tensor(n: usize, k: usize, entries: &[(&[u32], i64)]) -> SparseSignedTensor {
        SparseSignedTensor::from_entries(n, k, true, entries.iter().map(|(s, w)| (s.to_vec(), *w))).unwrap()
    }

    #[test]
    fn block_encoding_small() {
        let t = tensor(6, 2, &[(&[0, 1], 1), (&[2, 3], -1), (&[1, 4], 1)]);
        let r = block_encoding_check(&t, 2).unwrap();
        assert!(r.max_deviation <= 1e-10, "{r:?}");
        assert!(r.norm_drift <= 1e-12);
        let a = adjacency_check(&t, 2).unwrap();
        assert!(a.checked > 0 && a.mismatches == 0, "{a:?}");
    }

    #[test]
    fn empty_tensor_encodes_zero() {
        let t = SparseSignedTensor::empty(4, 2);
        let r = block_encoding_check(&t, 2).unwrap();
        assert_eq!(r.nonzero, 0);
        assert_eq!(r.max_deviation, 0.0);
    }
}
