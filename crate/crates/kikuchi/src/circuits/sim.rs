//! Statevector simulation: a dense array up to [`DENSE_QUBIT_CAP`] qubits and a
//! sparse map for circuits that stay close to permutations.
//!
//! Qubit `q` is bit `q` of the basis index.

use std::collections::HashMap;

use num_complex::Complex64;

use super::ir::{CircuitIR, Ctrl, Gate};
use crate::error::{Error, Result};

pub const DENSE_QUBIT_CAP: usize = 24;

type C = Complex64;

/// Elementary actions every gate lowers to.
enum Kernel {
    Flip { controls: Vec<Ctrl>, t: usize },
    Phase { controls: Vec<Ctrl> },
    Mat { controls: Vec<Ctrl>, t: usize, m: [[f64; 2]; 2] },
    Swap { a: usize, b: usize },
    Givens { a: usize, b: usize, c: f64, s: f64 },
}

fn ry(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [[c, -s], [s, c]]
}

const HAD: [[f64; 2]; 2] = [[std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2], [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2]];

fn lower(g: &Gate) -> Kernel {
    match g {
        Gate::H(q) => Kernel::Mat { controls: vec![], t: *q, m: HAD },
        Gate::X(q) => Kernel::Flip { controls: vec![], t: *q },
        Gate::Z(q) => Kernel::Phase { controls: vec![Ctrl::on(*q)] },
        Gate::Cx { c, t } => Kernel::Flip { controls: vec![Ctrl::on(*c)], t: *t },
        Gate::Cz(a, b) => Kernel::Phase { controls: vec![Ctrl::on(*a), Ctrl::on(*b)] },
        Gate::Swap(a, b) => Kernel::Swap { a: *a, b: *b },
        Gate::Ch { c, t } => Kernel::Mat { controls: vec![Ctrl::on(*c)], t: *t, m: HAD },
        Gate::Toffoli { c0, c1, t } => Kernel::Flip { controls: vec![Ctrl::on(*c0), Ctrl::on(*c1)], t: *t },
        Gate::Mcx { controls, t } => Kernel::Flip { controls: controls.clone(), t: *t },
        Gate::Mcz { controls } => Kernel::Phase { controls: controls.clone() },
        Gate::Ry { q, theta } => Kernel::Mat { controls: vec![], t: *q, m: ry(*theta) },
        Gate::McRy { controls, t, theta } => Kernel::Mat { controls: controls.clone(), t: *t, m: ry(*theta) },
        Gate::Givens { a, b, theta } => {
            let (s, c) = theta.sin_cos();
            Kernel::Givens { a: *a, b: *b, c, s }
        }
    }
}

#[inline]
fn active(controls: &[Ctrl], idx: u128) -> bool {
    controls.iter().all(|c| ((idx >> c.q) & 1 == 1) == c.on)
}

#[inline]
fn bit(idx: u128, q: usize) -> bool {
    (idx >> q) & 1 == 1
}

/// Dense state over at most [`DENSE_QUBIT_CAP`] qubits.
#[derive(Clone, Debug)]
pub struct StateVec {
    pub num_qubits: usize,
    pub amps: Vec<C>,
}

impl StateVec {
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, idx: usize) -> Result<Self> {
        if num_qubits > DENSE_QUBIT_CAP {
            return Err(Error::DimensionCap { dim: num_qubits as u64, cap: DENSE_QUBIT_CAP as u64 });
        }
        let mut amps = vec![C::new(0.0, 0.0); 1 << num_qubits];
        amps[idx] = C::new(1.0, 0.0);
        Ok(StateVec { num_qubits, amps })
    }

    pub fn from_amplitudes(num_qubits: usize, amps: Vec<C>) -> Result<Self> {
        if num_qubits > DENSE_QUBIT_CAP || amps.len() != 1 << num_qubits {
            return Err(Error::InvalidParams(format!("{} amplitudes for {num_qubits} qubits", amps.len())));
        }
        Ok(StateVec { num_qubits, amps })
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&mut self, g: &Gate) {
        let a = &mut self.amps;
        match lower(g) {
            Kernel::Flip { controls, t } => {
                for i in 0..a.len() {
                    let u = i as u128;
                    if !bit(u, t) && active(&controls, u) {
                        a.swap(i, i | (1 << t));
                    }
                }
            }
            Kernel::Phase { controls } => {
                for (i, x) in a.iter_mut().enumerate() {
                    if active(&controls, i as u128) {
                        *x = -*x;
                    }
                }
            }
            Kernel::Mat { controls, t, m } => {
                for i in 0..a.len() {
                    let u = i as u128;
                    if !bit(u, t) && active(&controls, u) {
                        let j = i | (1 << t);
                        let (x0, x1) = (a[i], a[j]);
                        a[i] = x0 * m[0][0] + x1 * m[0][1];
                        a[j] = x0 * m[1][0] + x1 * m[1][1];
                    }
                }
            }
            Kernel::Swap { a: p, b: q } => {
                for i in 0..a.len() {
                    let u = i as u128;
                    if bit(u, p) && !bit(u, q) {
                        a.swap(i, (i & !(1 << p)) | (1 << q));
                    }
                }
            }
            Kernel::Givens { a: p, b: q, c, s } => {
                for i in 0..a.len() {
                    let u = i as u128;
                    if bit(u, p) && !bit(u, q) {
                        let j = (i & !(1 << p)) | (1 << q);
                        let (x10, x01) = (a[i], a[j]);
                        a[i] = x10 * c - x01 * s;
                        a[j] = x10 * s + x01 * c;
                    }
                }
            }
        }
    }

    pub fn run(&mut self, circuit: &CircuitIR) {
        debug_assert!(circuit.num_qubits <= self.num_qubits);
        for g in &circuit.gates {
            self.apply(g);
        }
    }
}

/// Sparse state keyed by basis index; up to 128 qubits.
#[derive(Clone, Debug, Default)]
pub struct SparseState {
    pub amps: HashMap<u128, C>,
}

const PRUNE: f64 = 1e-28;

impl SparseState {
    pub fn basis(idx: u128) -> Self {
        let mut amps = HashMap::new();
        amps.insert(idx, C::new(1.0, 0.0));
        SparseState { amps }
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn get(&self, idx: u128) -> C {
        self.amps.get(&idx).copied().unwrap_or_default()
    }

    fn remap(&mut self, f: impl Fn(u128) -> u128) {
        let old = std::mem::take(&mut self.amps);
        self.amps = old.into_iter().map(|(i, x)| (f(i), x)).collect();
    }

    fn mix(&mut self, f: impl Fn(u128, C, &mut dyn FnMut(u128, C))) {
        let old = std::mem::take(&mut self.amps);
        let mut new: HashMap<u128, C> = HashMap::with_capacity(old.len() * 2);
        for (i, x) in old {
            f(i, x, &mut |j, y| *new.entry(j).or_default() += y);
        }
        new.retain(|_, x| x.norm_sqr() > PRUNE);
        self.amps = new;
    }

    pub fn apply(&mut self, g: &Gate) {
        assert!(g.qubits().iter().all(|&q| q < 128), "sparse simulator holds at most 128 qubits");
        match lower(g) {
            Kernel::Flip { controls, t } => self.remap(|i| if active(&controls, i) { i ^ (1 << t) } else { i }),
            Kernel::Phase { controls } => {
                for (i, x) in self.amps.iter_mut() {
                    if active(&controls, *i) {
                        *x = -*x;
                    }
                }
            }
            Kernel::Swap { a, b } => self.remap(|i| {
                if bit(i, a) != bit(i, b) {
                    i ^ (1 << a) ^ (1 << b)
                } else {
                    i
                }
            }),
            Kernel::Mat { controls, t, m } => self.mix(|i, x, out| {
                if !active(&controls, i) {
                    out(i, x);
                    return;
                }
                let b = bit(i, t) as usize;
                let base = i & !(1 << t);
                out(base, x * m[0][b]);
                out(base | (1 << t), x * m[1][b]);
            }),
            Kernel::Givens { a, b, c, s } => self.mix(|i, x, out| {
                let (pa, pb) = (bit(i, a), bit(i, b));
                if pa == pb {
                    out(i, x);
                    return;
                }
                let i10 = (i | (1 << a)) & !(1 << b);
                let i01 = (i | (1 << b)) & !(1 << a);
                if pa {
                    out(i10, x * c);
                    out(i01, x * s);
                } else {
                    out(i10, -x * s);
                    out(i01, x * c);
                }
            }),
        }
    }

    pub fn run(&mut self, circuit: &CircuitIR) {
        for g in &circuit.gates {
            self.apply(g);
        }
    }
}

/// Basis index with `value` written into `qubits` (little endian).
pub fn encode(qubits: &[usize], value: u128) -> u128 {
    qubits.iter().enumerate().fold(0, |acc, (b, &q)| acc | (((value >> b) & 1) << q))
}

pub fn decode(qubits: &[usize], idx: u128) -> u128 {
    qubits.iter().enumerate().fold(0, |acc, (b, &q)| acc | (((idx >> q) & 1) << b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::ir::Role;

    fn random_circuit(nq: usize, len: usize, seed: u64) -> CircuitIR {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, 0);
        let mut c = CircuitIR::new();
        c.add_register("q", Role::Ancilla, nq);
        for _ in 0..len {
            let a = rng.random_range(0..nq);
            let b = (a + rng.random_range(1..nq)) % nq;
            let t = rng.random_range(0.0..6.0);
            let g = match rng.random_range(0..8) {
                0 => Gate::H(a),
                1 => Gate::Cx { c: a, t: b },
                2 => Gate::Ch { c: a, t: b },
                3 => Gate::Ry { q: a, theta: t },
                4 => Gate::Givens { a, b, theta: t },
                5 => Gate::Mcz { controls: vec![Ctrl::on(a), Ctrl::off(b)] },
                6 => Gate::McRy { controls: vec![Ctrl::off(b)], t: a, theta: t },
                _ => Gate::Swap(a, b),
            };
            c.push(g);
        }
        c
    }

    #[test]
    fn dense_and_sparse_agree() {
        let c = random_circuit(5, 60, 3);
        let mut d = StateVec::basis(5, 6).unwrap();
        let mut s = SparseState::basis(6);
        d.run(&c);
        s.run(&c);
        for i in 0..32 {
            assert!((d.amps[i] - s.get(i as u128)).norm() < 1e-12);
        }
        assert!((d.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_restores() {
        let c = random_circuit(4, 40, 9);
        let mut d = StateVec::basis(4, 5).unwrap();
        d.run(&c);
        d.run(&c.inverse());
        assert!((d.amps[5].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn givens_convention() {
        let mut c = CircuitIR::new();
        c.add_register("q", Role::Ancilla, 2);
        c.push(Gate::Givens { a: 0, b: 1, theta: 0.4 });
        let mut d = StateVec::basis(2, 0b01).unwrap();
        d.run(&c);
        assert!((d.amps[0b01].re - 0.4f64.cos()).abs() < 1e-15);
        assert!((d.amps[0b10].re - 0.4f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn codec_roundtrip() {
        let qs = [3, 0, 7];
        assert_eq!(decode(&qs, encode(&qs, 5)), 5);
        assert_eq!(encode(&qs, 0b011), (1 << 3) | 1);
    }
}
