//! Gate list, registers, static counting and text export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Rotation synthesis accuracy used when none is given.
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ctrl {
    pub q: usize,
    /// Active on |1⟩ when true, on |0⟩ otherwise.
    pub on: bool,
}

impl Ctrl {
    pub fn on(q: usize) -> Self {
        Ctrl { q, on: true }
    }

    pub fn off(q: usize) -> Self {
        Ctrl { q, on: false }
    }

    /// Controls matching bit pattern `value` over `qubits` (little endian).
    pub fn pattern(qubits: &[usize], value: u64) -> Vec<Ctrl> {
        qubits.iter().enumerate().map(|(b, &q)| Ctrl { q, on: (value >> b) & 1 == 1 }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    Cx { c: usize, t: usize },
    Cz(usize, usize),
    Swap(usize, usize),
    Ch { c: usize, t: usize },
    Toffoli { c0: usize, c1: usize, t: usize },
    Mcx { controls: Vec<Ctrl>, t: usize },
    /// Phase −1 on the basis states where every control is active.
    Mcz { controls: Vec<Ctrl> },
    Ry { q: usize, theta: f64 },
    McRy { controls: Vec<Ctrl>, t: usize, theta: f64 },
    /// `|10⟩ ↦ cos θ |10⟩ + sin θ |01⟩` on `(a, b)`; `|00⟩`, `|11⟩` fixed.
    Givens { a: usize, b: usize, theta: f64 },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) | Gate::Ry { q, .. } => vec![*q],
            Gate::Cx { c, t } | Gate::Ch { c, t } => vec![*c, *t],
            Gate::Cz(a, b) | Gate::Swap(a, b) | Gate::Givens { a, b, .. } => vec![*a, *b],
            Gate::Toffoli { c0, c1, t } => vec![*c0, *c1, *t],
            Gate::Mcx { controls, t } | Gate::McRy { controls, t, .. } => {
                controls.iter().map(|c| c.q).chain(std::iter::once(*t)).collect()
            }
            Gate::Mcz { controls } => controls.iter().map(|c| c.q).collect(),
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Ry { q, theta } => Gate::Ry { q: *q, theta: -theta },
            Gate::McRy { controls, t, theta } => Gate::McRy { controls: controls.clone(), t: *t, theta: -theta },
            Gate::Givens { a, b, theta } => Gate::Givens { a: *a, b: *b, theta: -theta },
            g => g.clone(),
        }
    }

    /// Toffolis under the `CʳX = r − 1 Toffolis` rule.
    pub fn toffolis(&self) -> u64 {
        match self {
            Gate::Toffoli { .. } => 1,
            Gate::Mcx { controls, .. } => controls.len().saturating_sub(1) as u64,
            // CʳZ is a C^{r−1}X conjugated by H
            Gate::Mcz { controls } => controls.len().saturating_sub(2) as u64,
            Gate::McRy { controls, .. } => controls.len().saturating_sub(1) as u64,
            _ => 0,
        }
    }

    pub fn rotations(&self) -> u64 {
        match self {
            Gate::Ry { .. } => 1,
            Gate::McRy { controls, .. } => {
                if controls.is_empty() {
                    1
                } else {
                    2
                }
            }
            Gate::Givens { .. } => 2,
            _ => 0,
        }
    }

    pub fn controlled_h(&self) -> u64 {
        matches!(self, Gate::Ch { .. }) as u64
    }

    pub fn is_clifford(&self) -> bool {
        self.toffolis() == 0 && self.rotations() == 0 && self.controlled_h() == 0
    }

    /// Layers this gate occupies in the non-Clifford depth model: an r-fold
    /// AND is a balanced Toffoli tree on borrowed ancillas.
    fn depth_weight(&self) -> u64 {
        let tree = |r: u64| if r <= 1 { 0 } else { 64 - (r - 1).leading_zeros() as u64 };
        match self {
            Gate::Toffoli { .. } | Gate::Ch { .. } | Gate::Ry { .. } | Gate::Givens { .. } => 1,
            Gate::Mcx { controls, .. } => tree(controls.len() as u64),
            Gate::Mcz { controls } => tree(controls.len().saturating_sub(1) as u64),
            Gate::McRy { controls, .. } => tree(controls.len() as u64) + 1,
            _ => 0,
        }
    }

    fn text(&self) -> String {
        fn ctl(cs: &[Ctrl]) -> String {
            cs.iter().map(|c| if c.on { format!("{}", c.q) } else { format!("~{}", c.q) }).collect::<Vec<_>>().join(" ")
        }
        match self {
            Gate::H(q) => format!("H {q}"),
            Gate::X(q) => format!("X {q}"),
            Gate::Z(q) => format!("Z {q}"),
            Gate::Cx { c, t } => format!("CX {c} {t}"),
            Gate::Cz(a, b) => format!("CZ {a} {b}"),
            Gate::Swap(a, b) => format!("SWAP {a} {b}"),
            Gate::Ch { c, t } => format!("CH {c} {t}"),
            Gate::Toffoli { c0, c1, t } => format!("CCX {c0} {c1} {t}"),
            Gate::Mcx { controls, t } => format!("MCX {} {t}", ctl(controls)),
            Gate::Mcz { controls } => format!("MCZ {}", ctl(controls)),
            Gate::Ry { q, theta } => format!("RY {q} {theta:.17e}"),
            Gate::McRy { controls, t, theta } => format!("MCRY {} {t} {theta:.17e}", ctl(controls)),
            Gate::Givens { a, b, theta } => format!("GIVENS {a} {b} {theta:.17e}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    /// 𝒜: ℓ-subset index.
    Data,
    /// ℬ: neighbour index, b qubits.
    Sparsity,
    /// 𝒞: amplitude ancilla.
    Amplitude,
    /// 𝒟: counter.
    Counter,
    /// ℰ: scratch copy of the data register.
    Scratch,
    /// s-qubit dense encoding.
    Dense,
    Ancilla,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub role: Role,
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn qubit(&self, i: usize) -> usize {
        assert!(i < self.len, "qubit {i} outside register {}", self.name);
        self.start + i
    }

    pub fn qubits(&self) -> Vec<usize> {
        (self.start..self.start + self.len).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitIR {
    pub num_qubits: usize,
    pub registers: Vec<Register>,
    pub gates: Vec<Gate>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountReport {
    /// Gates after expanding each `CʳX` into `r − 1` Toffolis.
    pub gate_count: u64,
    /// Toffolis + 2 per controlled-H + rotations.
    pub non_clifford_count: u64,
    pub toffoli_count: u64,
    pub controlled_h_count: u64,
    pub rotation_count: u64,
    /// `7·Toffoli + 2·CH + rotations·⌈3 log₂(1/ε)⌉`.
    pub t_count: u64,
    /// Non-Clifford depth under greedy qubit-disjoint layering.
    pub depth: u64,
    pub qubit_count: u64,
}

/// T gates per arbitrary rotation at accuracy `eps`.
pub fn rotation_t_cost(eps: f64) -> u64 {
    (3.0 * (1.0 / eps).log2()).ceil().max(0.0) as u64
}

impl CircuitIR {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_register(&mut self, name: &str, role: Role, len: usize) -> Register {
        let r = Register { name: name.to_string(), role, start: self.num_qubits, len };
        self.num_qubits += len;
        self.registers.push(r.clone());
        r
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn push(&mut self, g: Gate) {
        debug_assert!(g.qubits().iter().all(|&q| q < self.num_qubits), "gate {g:?} outside circuit");
        self.gates.push(g);
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) {
        for g in gates {
            self.push(g);
        }
    }

    /// Appends `other`, whose qubit `i` lands on `map[i]`.
    pub fn append_mapped(&mut self, other: &CircuitIR, map: &[usize]) {
        let m = |q: usize| map[q];
        let mc = |cs: &[Ctrl]| cs.iter().map(|c| Ctrl { q: m(c.q), on: c.on }).collect::<Vec<_>>();
        for g in &other.gates {
            let h = match g {
                Gate::H(q) => Gate::H(m(*q)),
                Gate::X(q) => Gate::X(m(*q)),
                Gate::Z(q) => Gate::Z(m(*q)),
                Gate::Cx { c, t } => Gate::Cx { c: m(*c), t: m(*t) },
                Gate::Cz(a, b) => Gate::Cz(m(*a), m(*b)),
                Gate::Swap(a, b) => Gate::Swap(m(*a), m(*b)),
                Gate::Ch { c, t } => Gate::Ch { c: m(*c), t: m(*t) },
                Gate::Toffoli { c0, c1, t } => Gate::Toffoli { c0: m(*c0), c1: m(*c1), t: m(*t) },
                Gate::Mcx { controls, t } => Gate::Mcx { controls: mc(controls), t: m(*t) },
                Gate::Mcz { controls } => Gate::Mcz { controls: mc(controls) },
                Gate::Ry { q, theta } => Gate::Ry { q: m(*q), theta: *theta },
                Gate::McRy { controls, t, theta } => Gate::McRy { controls: mc(controls), t: m(*t), theta: *theta },
                Gate::Givens { a, b, theta } => Gate::Givens { a: m(*a), b: m(*b), theta: *theta },
            };
            self.push(h);
        }
    }

    pub fn inverse(&self) -> CircuitIR {
        CircuitIR {
            num_qubits: self.num_qubits,
            registers: self.registers.clone(),
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    pub fn counts(&self) -> CountReport {
        self.counts_at(DEFAULT_EPSILON)
    }

    pub fn counts_at(&self, eps: f64) -> CountReport {
        let mut r = CountReport { qubit_count: self.num_qubits as u64, ..Default::default() };
        for g in &self.gates {
            let tof = g.toffolis();
            r.toffoli_count += tof;
            r.controlled_h_count += g.controlled_h();
            r.rotation_count += g.rotations();
            r.gate_count += (tof + g.rotations() + g.controlled_h()).max(1);
        }
        r.non_clifford_count = r.toffoli_count + 2 * r.controlled_h_count + r.rotation_count;
        r.t_count = 7 * r.toffoli_count + 2 * r.controlled_h_count + r.rotation_count * rotation_t_cost(eps);
        r.depth = self.depth();
        r
    }

    /// Greedy ASAP layering: Clifford gates synchronise their qubits without
    /// adding a layer.
    pub fn depth(&self) -> u64 {
        let mut t = vec![0u64; self.num_qubits];
        let mut depth = 0;
        for g in &self.gates {
            let qs = g.qubits();
            let start = qs.iter().map(|&q| t[q]).max().unwrap_or(0);
            let end = start + g.depth_weight();
            for q in qs {
                t[q] = end;
            }
            depth = depth.max(end);
        }
        depth
    }

    /// One gate per line, preceded by `#`-prefixed register map.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# qubits {}", self.num_qubits);
        for r in &self.registers {
            let _ = writeln!(s, "# register {} {:?} {} {}", r.name, r.role, r.start, r.len);
        }
        for g in &self.gates {
            s.push_str(&g.text());
            s.push('\n');
        }
        s
    }
}
