//! Generalized AND/OR over sub-oracles using dirty ancillas.
//!
//! `build_gand` takes `p` sub-oracles `O_i : |y⟩ → |y ⊕ f_i⟩` and
//! `2p − 2` ancillas `q_1..q_{2p−2}` in arbitrary states and produces
//! `|t⟩ → |t ⊕ f_1 ∧ … ∧ f_p⟩`, leaving every ancilla as it found it.
//! The schedule is a Toffoli ladder climbing from the target to `q_1, q_2`
//! and back down (merge stage), followed by a partial repeat that undoes
//! the odd number of `O_1` calls and the Toffolis on the upper rungs
//! (restore stage). Each `O_i` runs at most four times.

use std::fmt;

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, Qubit};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GandError {
    #[error("GAND needs at least one sub-oracle")]
    NoOracles,
    #[error("GAND over {p} oracles needs {needed} ancillas, got {got}")]
    AncillaCount { p: usize, needed: usize, got: usize },
    #[error("sub-oracle {index} writes qubit {qubit}, which it does not own or borrow")]
    ReservedWrite { index: usize, qubit: u32 },
    #[error("qubit {0} appears twice in the GAND plan")]
    DuplicateQubit(u32),
    #[error("{0}")]
    Oracle(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// A sub-oracle that XORs its function into `target`. It may borrow any
/// qubit in `scratch` as dirty workspace and must restore it.
pub trait OracleBuilder {
    fn emit(&self, target: Qubit, scratch: &[Qubit], out: &mut Circuit) -> Result<(), GandError>;

    /// Rough gate count, used by planners to compare alternatives.
    fn cost_estimate(&self) -> u64 {
        0
    }
}

impl<T: OracleBuilder + ?Sized> OracleBuilder for &T {
    fn emit(&self, target: Qubit, scratch: &[Qubit], out: &mut Circuit) -> Result<(), GandError> {
        (**self).emit(target, scratch, out)
    }

    fn cost_estimate(&self) -> u64 {
        (**self).cost_estimate()
    }
}

/// Adapts a closure into an [`OracleBuilder`].
pub struct FnOracle<F>(pub F);

impl<F> OracleBuilder for FnOracle<F>
where
    F: Fn(Qubit, &[Qubit], &mut Circuit) -> Result<(), GandError>,
{
    fn emit(&self, target: Qubit, scratch: &[Qubit], out: &mut Circuit) -> Result<(), GandError> {
        (self.0)(target, scratch, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GandMode {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GandPlan {
    /// `q_1..q_{2p−2}`.
    pub ancillas: Vec<Qubit>,
    pub target: Qubit,
    pub mode: GandMode,
    /// Further qubits the sub-oracles may borrow.
    pub scratch: Vec<Qubit>,
    /// Qubits the sub-oracles manage themselves (clean registers, idle
    /// inputs). They may be written but are not handed out as scratch.
    pub workspace: Vec<Qubit>,
}

/// Ancillas needed to merge `p` sub-oracles.
pub fn gand_ancillas(p: usize) -> usize {
    match p {
        0 | 1 => 0,
        p => 2 * p - 2,
    }
}

/// Toffolis emitted by the GAND schedule itself for `p` sub-oracles.
pub fn gand_toffolis(p: usize) -> u64 {
    match p {
        0 | 1 => 0,
        2 => 4,
        p => 8 * p as u64 - 12,
    }
}

/// How many times each sub-oracle is called, in order `O_1..O_p`.
pub fn gand_calls(p: usize) -> Vec<u64> {
    let mut calls = vec![0u64; p];
    for op in gand_schedule(p) {
        if let Step::Oracle { index, .. } = op.op {
            calls[index] += 1;
        }
    }
    calls
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Merge,
    Restore,
}

/// A qubit of the schedule: `Q(i)` is `q_i` (1-based), `Target` is `q_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Q(usize),
    Target,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Toffoli {
        c1: Slot,
        c2: Slot,
        target: Slot,
    },
    /// Call `O_{index+1}` onto `target`.
    Oracle {
        index: usize,
        target: Slot,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GandOp {
    pub stage: Stage,
    pub step: usize,
    pub sub: usize,
    pub op: Step,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Q(i) => write!(f, "q{i}"),
            Slot::Target => write!(f, "qt"),
        }
    }
}

impl fmt::Display for GandOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let stage = match self.stage {
            Stage::Merge => "merge",
            Stage::Restore => "restore",
        };
        write!(f, "{stage} {}.{} ", self.step, self.sub)?;
        match self.op {
            Step::Toffoli { c1, c2, target } => write!(f, "toffoli {c1} {c2} -> {target}"),
            Step::Oracle { index, target } => write!(f, "oracle O{} -> {target}", index + 1),
        }
    }
}

fn three(stage: Stage, step: usize, tof: Step, oracle: Step) -> [GandOp; 3] {
    [
        GandOp { stage, step, sub: 1, op: tof },
        GandOp { stage, step, sub: 2, op: oracle },
        GandOp { stage, step, sub: 3, op: tof },
    ]
}

fn top(stage: Stage, step: usize, target: Slot) -> Vec<GandOp> {
    let tof = Step::Toffoli { c1: Slot::Q(1), c2: Slot::Q(2), target };
    let o2 = Step::Oracle { index: 1, target: Slot::Q(2) };
    let o1 = Step::Oracle { index: 0, target: Slot::Q(1) };
    [tof, o2, tof, o1, tof, o2, tof]
        .into_iter()
        .enumerate()
        .map(|(k, op)| GandOp { stage, step, sub: k + 1, op })
        .collect()
}

fn merge_step(p: usize, i: usize, stage: Stage) -> Vec<GandOp> {
    let q = Slot::Q;
    if i < p - 1 {
        let target = if i == 1 { Slot::Target } else { q(2 * p - i) };
        let tof = Step::Toffoli { c1: q(p + 1 - i), c2: q(2 * p - 1 - i), target };
        three(stage, i, tof, Step::Oracle { index: p - i, target: q(p + 1 - i) }).to_vec()
    } else if i == p - 1 {
        top(stage, i, q(p + 1))
    } else {
        let target = if i == 2 * p - 3 { Slot::Target } else { q(i + 2) };
        let tof = Step::Toffoli { c1: q(i - p + 3), c2: q(i + 1), target };
        three(stage, i, tof, Step::Oracle { index: i - p + 2, target: q(i - p + 3) }).to_vec()
    }
}

/// The full GAND schedule for `p` sub-oracles.
pub fn gand_schedule(p: usize) -> Vec<GandOp> {
    match p {
        0 => Vec::new(),
        1 => vec![GandOp { stage: Stage::Merge, step: 1, sub: 1, op: Step::Oracle { index: 0, target: Slot::Target } }],
        2 => {
            let mut ops = top(Stage::Merge, 1, Slot::Target);
            ops.push(GandOp {
                stage: Stage::Restore,
                step: 1,
                sub: 8,
                op: Step::Oracle { index: 0, target: Slot::Q(1) },
            });
            ops
        }
        p => {
            let mut ops: Vec<GandOp> = (1..=2 * p - 3).flat_map(|i| merge_step(p, i, Stage::Merge)).collect();
            ops.extend((2..=2 * p - 4).flat_map(|i| merge_step(p, i, Stage::Restore)));
            ops
        }
    }
}

/// One line per operation, e.g. `merge 1.1 toffoli q3 q4 -> qt`.
pub fn trace_gand(p: usize) -> String {
    gand_schedule(p).iter().map(|op| format!("{op}\n")).collect()
}

fn check_distinct(qs: impl Iterator<Item = Qubit>) -> Result<(), GandError> {
    let mut v: Vec<Qubit> = qs.collect();
    v.sort_unstable();
    match v.windows(2).find(|w| w[0] == w[1]) {
        Some(w) => Err(GandError::DuplicateQubit(w[0].0)),
        None => Ok(()),
    }
}

/// Appends the GAND (or GOR) of `oracles` to `out` according to `plan`.
pub fn build_gand<B: OracleBuilder>(oracles: &[B], plan: &GandPlan, out: &mut Circuit) -> Result<(), GandError> {
    let p = oracles.len();
    if p == 0 {
        return Err(GandError::NoOracles);
    }
    let needed = gand_ancillas(p);
    if plan.ancillas.len() < needed {
        return Err(GandError::AncillaCount { p, needed, got: plan.ancillas.len() });
    }
    let anc = &plan.ancillas[..needed];
    check_distinct(anc.iter().copied().chain([plan.target]))?;
    let resolve = |s: Slot| match s {
        Slot::Q(i) => anc[i - 1],
        Slot::Target => plan.target,
    };
    let negate = plan.mode == GandMode::Or;
    if negate {
        out.push(Gate::x(plan.target))?;
    }
    let mut cache: Vec<Option<Vec<Gate>>> = vec![None; p];
    for op in gand_schedule(p) {
        match op.op {
            Step::Toffoli { c1, c2, target } => {
                out.push(Gate::toffoli(resolve(c1), resolve(c2), resolve(target)))?;
            }
            Step::Oracle { index, target } => {
                let t = resolve(target);
                if cache[index].is_none() {
                    let scratch: Vec<Qubit> = anc
                        .iter()
                        .copied()
                        .chain([plan.target])
                        .chain(plan.scratch.iter().copied())
                        .filter(|&q| q != t)
                        .collect();
                    let mut seg = Circuit::new(*out.layout(), out.level());
                    oracles[index].emit(t, &scratch, &mut seg)?;
                    if let Some(g) = seg
                        .gates()
                        .iter()
                        .find(|g| g.target != t && !scratch.contains(&g.target) && !plan.workspace.contains(&g.target))
                    {
                        return Err(GandError::ReservedWrite { index, qubit: g.target.0 });
                    }
                    let mut gates = seg.gates().to_vec();
                    if negate {
                        gates.push(Gate::x(t));
                    }
                    cache[index] = Some(gates);
                }
                for g in cache[index].as_ref().unwrap() {
                    out.push(g.clone())?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Layout, Level};
    use crate::sim::{simulate, BasisState};

    type Emit = fn(Qubit, &[Qubit], &mut Circuit) -> Result<(), GandError>;

    /// `O_i` copies input bit `i` into its target.
    fn copy_oracles(p: usize) -> Vec<impl OracleBuilder> {
        (0..p)
            .map(|i| {
                FnOracle(move |t: Qubit, _: &[Qubit], out: &mut Circuit| {
                    out.push(Gate::cnot(Qubit(i as u32), t))?;
                    Ok(())
                })
            })
            .collect()
    }

    fn run(p: usize, mode: GandMode) {
        let anc = gand_ancillas(p);
        let layout = Layout::oracle(p, anc);
        let plan = GandPlan {
            ancillas: layout.ancillas().collect(),
            target: layout.target(),
            mode,
            scratch: vec![],
            workspace: vec![],
        };
        let mut c = Circuit::new(layout, Level::Mct);
        build_gand(&copy_oracles(p), &plan, &mut c).unwrap();
        let tofs = c.gates().iter().filter(|g| g.kind == crate::circuit::GateKind::Toffoli).count() as u64;
        assert_eq!(tofs, gand_toffolis(p));
        let total = layout.total();
        let mut seed = 0x1234_5678u64;
        for s in 0..(1u64 << p.min(10)) {
            for trial in 0..4 {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let mut bits = vec![false; total];
                for (i, b) in bits.iter_mut().enumerate().take(p) {
                    *b = (s >> i) & 1 == 1;
                }
                for (k, b) in bits.iter_mut().enumerate().skip(p) {
                    *b = trial > 0 && (seed >> (k % 64)) & 1 == 1;
                }
                let out = simulate(&c, &BasisState::from_bits(bits.clone())).unwrap();
                let f = match mode {
                    GandMode::And => bits[..p].iter().all(|&b| b),
                    GandMode::Or => bits[..p].iter().any(|&b| b),
                };
                let mut want = bits;
                want[total - 1] ^= f;
                assert_eq!(out.bits, want, "p={p} s={s}");
            }
        }
    }

    #[test]
    fn gand_and_gor_are_correct_with_dirty_ancillas() {
        for p in 1..=9 {
            run(p, GandMode::And);
            run(p, GandMode::Or);
        }
    }

    #[test]
    fn budgets() {
        assert_eq!(gand_calls(2), vec![2, 2]);
        assert_eq!(gand_calls(3), vec![2, 4, 2]);
        assert_eq!(gand_calls(5), vec![2, 4, 4, 4, 2]);
        for p in 3..=64 {
            let sched = gand_schedule(p);
            let merge =
                sched.iter().filter(|o| o.stage == Stage::Merge && matches!(o.op, Step::Toffoli { .. })).count();
            assert_eq!(merge, 4 * p - 4);
            assert!(gand_calls(p).iter().all(|&c| c <= 4));
            assert_eq!(gand_calls(p).iter().sum::<u64>(), 4 * p as u64 - 4);
        }
    }

    #[test]
    fn rejects_bad_plans() {
        let layout = Layout::oracle(3, 4);
        let mut c = Circuit::new(layout, Level::Mct);
        let short = GandPlan {
            ancillas: vec![Qubit(3)],
            target: layout.target(),
            mode: GandMode::And,
            scratch: vec![],
            workspace: vec![],
        };
        assert!(matches!(build_gand(&copy_oracles(3), &short, &mut c), Err(GandError::AncillaCount { .. })));
        let plan = GandPlan {
            ancillas: layout.ancillas().collect(),
            target: layout.target(),
            mode: GandMode::And,
            scratch: vec![],
            workspace: vec![],
        };
        let rogue: Vec<_> = (0..3)
            .map(|_| {
                FnOracle(|_t: Qubit, _: &[Qubit], out: &mut Circuit| {
                    out.push(Gate::x(Qubit(0)))?;
                    Ok(())
                })
            })
            .collect();
        assert_eq!(build_gand(&rogue, &plan, &mut c), Err(GandError::ReservedWrite { index: 2, qubit: 0 }));
        let none: Vec<FnOracle<Emit>> = vec![];
        assert_eq!(build_gand(&none, &plan, &mut c), Err(GandError::NoOracles));
    }
}
