//! Circuit IR over a typed qubit layout, with size/depth accounting.
//!
//! Qubits are numbered flat: inputs first, then ancillas, then the target
//! register. [`Layout::locate`] recovers the register view.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("qubit {0} used twice in one gate")]
    Collision(u32),
    #[error("qubit {qubit} outside layout of {total} qubits")]
    OutOfRange { qubit: u32, total: usize },
    #[error("{kind:?} gate not admissible at {level:?} level")]
    LevelViolation { kind: GateKind, level: Level },
    #[error("{kind:?} gate given {got} controls")]
    Arity { kind: GateKind, got: usize },
    #[error("layouts differ")]
    LayoutMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Qubit(pub u32);

impl Qubit {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Register {
    Input,
    Ancilla,
    Target,
}

impl Register {
    pub fn qasm_name(self) -> &'static str {
        match self {
            Register::Input => "in",
            Register::Ancilla => "anc",
            Register::Target => "tgt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QubitId {
    pub register: Register,
    pub offset: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub n_inputs: usize,
    pub n_ancillas: usize,
    pub n_targets: usize,
}

impl Layout {
    /// Oracle layout: `n` inputs, `ancillas` helpers and one target.
    pub fn oracle(n: usize, ancillas: usize) -> Self {
        Layout { n_inputs: n, n_ancillas: ancillas, n_targets: 1 }
    }

    pub fn total(&self) -> usize {
        self.n_inputs + self.n_ancillas + self.n_targets
    }

    pub fn input(&self, i: usize) -> Qubit {
        debug_assert!(i < self.n_inputs);
        Qubit(i as u32)
    }

    /// Qubit holding variable `var` (1-based).
    pub fn var(&self, var: u32) -> Qubit {
        self.input(var as usize - 1)
    }

    pub fn ancilla(&self, j: usize) -> Qubit {
        debug_assert!(j < self.n_ancillas);
        Qubit((self.n_inputs + j) as u32)
    }

    pub fn target(&self) -> Qubit {
        Qubit((self.n_inputs + self.n_ancillas) as u32)
    }

    pub fn inputs(&self) -> impl Iterator<Item = Qubit> {
        (0..self.n_inputs as u32).map(Qubit)
    }

    pub fn ancillas(&self) -> impl Iterator<Item = Qubit> {
        let base = self.n_inputs as u32;
        (base..base + self.n_ancillas as u32).map(Qubit)
    }

    pub fn locate(&self, q: Qubit) -> Option<QubitId> {
        let i = q.index();
        if i < self.n_inputs {
            Some(QubitId { register: Register::Input, offset: i })
        } else if i < self.n_inputs + self.n_ancillas {
            Some(QubitId { register: Register::Ancilla, offset: i - self.n_inputs })
        } else if i < self.total() {
            Some(QubitId { register: Register::Target, offset: i - self.n_inputs - self.n_ancillas })
        } else {
            None
        }
    }

    pub fn resolve(&self, id: QubitId) -> Option<Qubit> {
        let (base, len) = match id.register {
            Register::Input => (0, self.n_inputs),
            Register::Ancilla => (self.n_inputs, self.n_ancillas),
            Register::Target => (self.n_inputs + self.n_ancillas, self.n_targets),
        };
        (id.offset < len).then(|| Qubit((base + id.offset) as u32))
    }

    pub fn is_ancilla(&self, q: Qubit) -> bool {
        (self.n_inputs..self.n_inputs + self.n_ancillas).contains(&q.index())
    }
}

/// Single-qubit gates that only appear after Toffoli lowering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OneQubit {
    H,
    T,
    Tdg,
    /// Y rotation by +π/4.
    RyQuarter,
    /// Y rotation by −π/4.
    RyQuarterDg,
}

impl OneQubit {
    pub fn inverse(self) -> Self {
        match self {
            OneQubit::H => OneQubit::H,
            OneQubit::T => OneQubit::Tdg,
            OneQubit::Tdg => OneQubit::T,
            OneQubit::RyQuarter => OneQubit::RyQuarterDg,
            OneQubit::RyQuarterDg => OneQubit::RyQuarter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    X,
    Cnot,
    Toffoli,
    /// Multi-controlled X with any number of controls.
    Mct,
    Single(OneQubit),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Control {
    pub qubit: Qubit,
    /// `true` fires on |1⟩, `false` on |0⟩.
    pub positive: bool,
}

impl Control {
    pub fn pos(q: Qubit) -> Self {
        Control { qubit: q, positive: true }
    }

    pub fn neg(q: Qubit) -> Self {
        Control { qubit: q, positive: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub controls: SmallVec<[Control; 2]>,
    pub target: Qubit,
    /// Qubits an MCT may borrow as dirty scratch when it is lowered, in
    /// order of preference. Empty for every other kind.
    pub borrow: Vec<Qubit>,
}

impl Gate {
    pub fn x(t: Qubit) -> Self {
        Gate { kind: GateKind::X, controls: SmallVec::new(), target: t, borrow: Vec::new() }
    }

    pub fn cnot(c: Qubit, t: Qubit) -> Self {
        Self::cnot_pol(Control::pos(c), t)
    }

    pub fn cnot_pol(c: Control, t: Qubit) -> Self {
        let mut controls = SmallVec::new();
        controls.push(c);
        Gate { kind: GateKind::Cnot, controls, target: t, borrow: Vec::new() }
    }

    pub fn toffoli(a: Qubit, b: Qubit, t: Qubit) -> Self {
        Self::toffoli_pol(Control::pos(a), Control::pos(b), t)
    }

    pub fn toffoli_pol(a: Control, b: Control, t: Qubit) -> Self {
        let mut controls = SmallVec::new();
        controls.push(a);
        controls.push(b);
        Gate { kind: GateKind::Toffoli, controls, target: t, borrow: Vec::new() }
    }

    /// Multi-controlled X. Zero, one and two controls produce X, CNOT and
    /// Toffoli gates respectively.
    pub fn mct(controls: Vec<Control>, target: Qubit, borrow: Vec<Qubit>) -> Self {
        let kind = match controls.len() {
            0 => GateKind::X,
            1 => GateKind::Cnot,
            2 => GateKind::Toffoli,
            _ => GateKind::Mct,
        };
        let borrow = if kind == GateKind::Mct { borrow } else { Vec::new() };
        Gate { kind, controls: SmallVec::from_vec(controls), target, borrow }
    }

    pub fn single(op: OneQubit, q: Qubit) -> Self {
        Gate { kind: GateKind::Single(op), controls: SmallVec::new(), target: q, borrow: Vec::new() }
    }

    /// Every qubit the gate acts on, controls first.
    pub fn qubits(&self) -> impl Iterator<Item = Qubit> + '_ {
        self.controls.iter().map(|c| c.qubit).chain(std::iter::once(self.target))
    }

    pub fn is_permutation(&self) -> bool {
        !matches!(self.kind, GateKind::Single(_))
    }

    pub fn inverse(&self) -> Gate {
        match self.kind {
            GateKind::Single(op) => Gate::single(op.inverse(), self.target),
            _ => self.clone(),
        }
    }

    fn validate(&self, layout: &Layout, level: Level) -> Result<(), CircuitError> {
        let admissible = match level {
            Level::Mct => !matches!(self.kind, GateKind::Single(_)),
            Level::Toffoli => {
                matches!(self.kind, GateKind::X | GateKind::Cnot | GateKind::Toffoli)
                    && self.controls.iter().all(|c| c.positive)
            }
            Level::Elementary => {
                matches!(self.kind, GateKind::X | GateKind::Cnot | GateKind::Single(_))
                    && self.controls.iter().all(|c| c.positive)
            }
        };
        if !admissible {
            return Err(CircuitError::LevelViolation { kind: self.kind, level });
        }
        let want = match self.kind {
            GateKind::X | GateKind::Single(_) => Some(0),
            GateKind::Cnot => Some(1),
            GateKind::Toffoli => Some(2),
            GateKind::Mct => None,
        };
        if want.is_some_and(|w| w != self.controls.len()) || (want.is_none() && self.controls.is_empty()) {
            return Err(CircuitError::Arity { kind: self.kind, got: self.controls.len() });
        }
        let total = layout.total();
        for q in self.qubits() {
            if q.index() >= total {
                return Err(CircuitError::OutOfRange { qubit: q.0, total });
            }
        }
        if self.controls.len() <= 8 {
            for (i, a) in self.controls.iter().enumerate() {
                if a.qubit == self.target {
                    return Err(CircuitError::Collision(a.qubit.0));
                }
                if self.controls[..i].iter().any(|b| b.qubit == a.qubit) {
                    return Err(CircuitError::Collision(a.qubit.0));
                }
            }
        } else {
            let mut qs: Vec<u32> = self.qubits().map(|q| q.0).collect();
            qs.sort_unstable();
            if let Some(w) = qs.windows(2).find(|w| w[0] == w[1]) {
                return Err(CircuitError::Collision(w[0]));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}(", self.kind)?;
        for c in &self.controls {
            write!(f, "{}{},", if c.positive { "" } else { "!" }, c.qubit.0)?;
        }
        write!(f, "->{})", self.target.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Multi-controlled gates with arbitrary control polarity.
    Mct,
    /// X, CNOT and Toffoli with positive controls.
    Toffoli,
    /// CNOT plus single-qubit gates.
    Elementary,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    layout: Layout,
    level: Level,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(layout: Layout, level: Level) -> Self {
        Circuit { layout, level, gates: Vec::new() }
    }

    pub fn from_gates(layout: Layout, level: Level, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let mut c = Circuit::new(layout, level);
        c.gates.reserve(gates.len());
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate) -> Result<(), CircuitError> {
        g.validate(&self.layout, self.level)?;
        self.gates.push(g);
        Ok(())
    }

    /// Returns the circuit extended by `g`.
    pub fn append(mut self, g: Gate) -> Result<Self, CircuitError> {
        self.push(g)?;
        Ok(self)
    }

    pub fn extend_from(&mut self, other: &Circuit) -> Result<(), CircuitError> {
        if other.layout != self.layout {
            return Err(CircuitError::LayoutMismatch);
        }
        for g in &other.gates {
            self.push(g.clone())?;
        }
        Ok(())
    }

    pub fn compose(&self, other: &Circuit) -> Result<Circuit, CircuitError> {
        let mut out = self.clone();
        out.extend_from(other)?;
        Ok(out)
    }

    pub fn inverse(&self) -> Circuit {
        Circuit { layout: self.layout, level: self.level, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    pub fn truncate(&mut self, len: usize) {
        self.gates.truncate(len);
    }

    /// Copy with gate `idx` removed; used for mutation testing.
    pub fn without_gate(&self, idx: usize) -> Circuit {
        let mut gates = self.gates.clone();
        gates.remove(idx);
        Circuit { layout: self.layout, level: self.level, gates }
    }

    pub fn is_permutation(&self) -> bool {
        self.gates.iter().all(Gate::is_permutation)
    }

    pub fn cost(&self) -> CostReport {
        let mut acc = CostAccumulator::new(self.layout, self.level);
        for g in &self.gates {
            acc.add(g);
        }
        acc.finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    /// Gate count at `level`.
    pub size: u64,
    /// Number of ASAP layers at `level`.
    pub depth: u64,
    pub toffoli_count: u64,
    /// Gates with three or more controls at MCT level.
    pub mct_calls: u64,
    pub ancillas_touched: u64,
    pub level: Level,
}

/// Streaming size/depth counter. Depth uses greedy as-soon-as-possible
/// layering where two gates conflict iff they share a qubit.
pub struct CostAccumulator {
    layout: Layout,
    level: Level,
    frontier: Vec<u64>,
    touched: Vec<bool>,
    size: u64,
    depth: u64,
    toffolis: u64,
    mcts: u64,
}

impl CostAccumulator {
    pub fn new(layout: Layout, level: Level) -> Self {
        CostAccumulator {
            layout,
            level,
            frontier: vec![0; layout.total()],
            touched: vec![false; layout.total()],
            size: 0,
            depth: 0,
            toffolis: 0,
            mcts: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, g: &Gate) {
        self.size += 1;
        match g.kind {
            GateKind::Toffoli => self.toffolis += 1,
            GateKind::Mct => self.mcts += 1,
            _ => {}
        }
        let mut layer = 0;
        for q in g.qubits() {
            layer = layer.max(self.frontier[q.index()]);
        }
        layer += 1;
        for q in g.qubits() {
            self.frontier[q.index()] = layer;
            self.touched[q.index()] = true;
        }
        self.depth = self.depth.max(layer);
    }

    pub fn finish(&self) -> CostReport {
        let ancillas_touched = self.layout.ancillas().filter(|q| self.touched[q.index()]).count() as u64;
        CostReport {
            size: self.size,
            depth: self.depth,
            toffoli_count: self.toffolis,
            mct_calls: self.mcts,
            ancillas_touched,
            level: self.level,
        }
    }
}

/// Explicit layer assignment under the same ASAP rule as [`CostAccumulator`].
pub fn asap_layers(c: &Circuit) -> Vec<u64> {
    let mut frontier = vec![0u64; c.layout.total()];
    c.gates
        .iter()
        .map(|g| {
            let layer = g.qubits().map(|q| frontier[q.index()]).max().unwrap_or(0) + 1;
            for q in g.qubits() {
                frontier[q.index()] = layer;
            }
            layer
        })
        .collect()
}
