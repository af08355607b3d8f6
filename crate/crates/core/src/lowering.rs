//! Lowering MCT → Toffoli → elementary gates.
//!
//! MCT gates are expanded with the dirty-ancilla V-chain when the borrow
//! list is long enough, and otherwise split in two halves around a single
//! borrowed qubit. Negative controls are handled by X conjugation.
//!
//! Toffoli gates become either the exact 15-gate Clifford+T circuit or the
//! 7-gate relative-phase circuit, which differs from a Toffoli by a sign on
//! `|c1=1, c2=0, t=1⟩`. Two relative-phase copies of the same Toffoli cancel
//! that sign when nothing between them changes any of the three qubits, so
//! only such pairs are approximated.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{
    Circuit, CircuitError, Control, CostAccumulator, CostReport, Gate, GateKind, Level, OneQubit, Qubit,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LowerError {
    #[error("MCT on {arity} controls targeting qubit {target} has no qubit to borrow")]
    NoBorrowableQubit { arity: usize, target: u32 },
    #[error("expected a {expected:?}-level circuit, got {got:?}")]
    WrongLevel { expected: Level, got: Level },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToffoliLowering {
    #[default]
    Exact,
    /// Relative-phase Toffolis wherever the phase provably cancels.
    Approx,
}

/// Toffoli count of [`lower_mct`] for `arity` positive controls and
/// `pool` borrowable qubits, or `None` when the gate cannot be lowered.
pub fn mct_toffoli_count(arity: usize, pool: usize) -> Option<u64> {
    match arity {
        0 | 1 => Some(0),
        2 => Some(1),
        a if pool >= a - 2 => Some(4 * (a as u64 - 2)),
        _ if pool == 0 => None,
        a => {
            let m1 = a.div_ceil(2);
            let first = mct_toffoli_count(m1, a - m1 + pool)?;
            let second = mct_toffoli_count(a - m1 + 1, m1 + pool - 1)?;
            Some(2 * (first + second))
        }
    }
}

/// Gate count of [`lower_mct`], including X conjugation of negative
/// controls and the CNOT/X emitted for arities one and zero.
pub fn mct_gate_count(arity: usize, negative: usize, pool: usize) -> Option<u64> {
    let core = match arity {
        0 | 1 => 1,
        _ => mct_toffoli_count(arity, pool)?,
    };
    Some(core + 2 * negative as u64)
}

/// Expands one MCT-level gate into Toffoli-level gates.
pub fn lower_mct(g: &Gate, out: &mut impl FnMut(Gate)) -> Result<(), LowerError> {
    if matches!(g.kind, GateKind::Single(_)) {
        out(g.clone());
        return Ok(());
    }
    let negatives: Vec<Qubit> = g.controls.iter().filter(|c| !c.positive).map(|c| c.qubit).collect();
    for &q in &negatives {
        out(Gate::x(q));
    }
    let controls: Vec<Qubit> = g.controls.iter().map(|c| c.qubit).collect();
    let pool: Vec<Qubit> = {
        let mut seen = Vec::with_capacity(g.borrow.len());
        for &q in &g.borrow {
            if q != g.target && !controls.contains(&q) && !seen.contains(&q) {
                seen.push(q);
            }
        }
        seen
    };
    positive_mct(&controls, g.target, &pool, out)?;
    for &q in &negatives {
        out(Gate::x(q));
    }
    Ok(())
}

fn positive_mct(c: &[Qubit], t: Qubit, pool: &[Qubit], out: &mut impl FnMut(Gate)) -> Result<(), LowerError> {
    let a = c.len();
    match a {
        0 => out(Gate::x(t)),
        1 => out(Gate::cnot(c[0], t)),
        2 => out(Gate::toffoli(c[0], c[1], t)),
        _ if pool.len() >= a - 2 => v_chain(c, t, &pool[..a - 2], out),
        _ if pool.is_empty() => return Err(LowerError::NoBorrowableQubit { arity: a, target: t.0 }),
        _ => {
            let m1 = a.div_ceil(2);
            let b = pool[0];
            let rest = &pool[1..];
            let (first, second) = c.split_at(m1);
            let pool1: Vec<Qubit> = second.iter().copied().chain([t]).chain(rest.iter().copied()).collect();
            let mut c2 = second.to_vec();
            c2.push(b);
            let pool2: Vec<Qubit> = first.iter().copied().chain(rest.iter().copied()).collect();
            for _ in 0..2 {
                positive_mct(first, b, &pool1, out)?;
                positive_mct(&c2, t, &pool2, out)?;
            }
        }
    }
    Ok(())
}

fn v_chain(c: &[Qubit], t: Qubit, d: &[Qubit], out: &mut impl FnMut(Gate)) {
    let a = c.len();
    let ladder: Vec<Gate> = (1..=a - 3).rev().map(|j| Gate::toffoli(c[j + 1], d[j - 1], d[j])).collect();
    for _ in 0..2 {
        out(Gate::toffoli(c[a - 1], d[a - 3], t));
        ladder.iter().for_each(|g| out(g.clone()));
        out(Gate::toffoli(c[0], c[1], d[0]));
        ladder.iter().rev().for_each(|g| out(g.clone()));
    }
}

/// Lowers an MCT-level circuit to Toffoli level. Toffoli- and
/// elementary-level circuits are returned unchanged.
pub fn to_toffoli_level(c: &Circuit) -> Result<Circuit, LowerError> {
    if c.level() != Level::Mct {
        return Ok(c.clone());
    }
    let mut gates = Vec::with_capacity(c.len() * 4);
    for g in c.gates() {
        lower_mct(g, &mut |x| gates.push(x))?;
    }
    Ok(Circuit::from_gates(*c.layout(), Level::Toffoli, gates)?)
}

/// Streams the Toffoli-level gates of an MCT circuit into `sink`.
pub fn stream_toffoli_level(c: &Circuit, sink: &mut impl FnMut(Gate)) -> Result<(), LowerError> {
    for g in c.gates() {
        lower_mct(g, sink)?;
    }
    Ok(())
}

/// 15-gate Clifford+T decomposition of `Toffoli(a, b → c)`.
pub fn exact_toffoli(a: Qubit, b: Qubit, c: Qubit) -> [Gate; 15] {
    use OneQubit::*;
    [
        Gate::single(H, c),
        Gate::cnot(b, c),
        Gate::single(Tdg, c),
        Gate::cnot(a, c),
        Gate::single(T, c),
        Gate::cnot(b, c),
        Gate::single(Tdg, c),
        Gate::cnot(a, c),
        Gate::single(T, b),
        Gate::single(T, c),
        Gate::single(H, c),
        Gate::cnot(a, b),
        Gate::single(T, a),
        Gate::single(Tdg, b),
        Gate::cnot(a, b),
    ]
}

/// 7-gate relative-phase Toffoli: equal to `Toffoli(a, b → t)` up to a
/// factor −1 on `|a=1, b=0, t=1⟩`.
pub fn approx_toffoli(a: Qubit, b: Qubit, t: Qubit) -> [Gate; 7] {
    use OneQubit::*;
    [
        Gate::single(RyQuarter, t),
        Gate::cnot(b, t),
        Gate::single(RyQuarter, t),
        Gate::cnot(a, t),
        Gate::single(RyQuarterDg, t),
        Gate::cnot(b, t),
        Gate::single(RyQuarterDg, t),
    ]
}

type ToffoliKey = (Qubit, Qubit, Qubit);

fn toffoli_key(g: &Gate) -> ToffoliKey {
    let (x, y) = (g.controls[0].qubit, g.controls[1].qubit);
    (x.min(y), x.max(y), g.target)
}

/// Marks Toffolis that may use the relative-phase decomposition: greedy
/// left-to-right pairing of identical Toffolis with no gate in between
/// targeting any of their three qubits.
pub fn phase_safe_toffolis(gates: &[Gate]) -> Vec<bool> {
    let mut safe = vec![false; gates.len()];
    let mut open: HashMap<ToffoliKey, usize> = HashMap::new();
    let mut watchers: HashMap<Qubit, Vec<(ToffoliKey, usize)>> = HashMap::new();
    for (i, g) in gates.iter().enumerate() {
        if g.kind == GateKind::Toffoli {
            let key = toffoli_key(g);
            if let Some(j) = open.remove(&key) {
                safe[i] = true;
                safe[j] = true;
                continue;
            }
        }
        if let Some(list) = watchers.remove(&g.target) {
            for (key, idx) in list {
                if open.get(&key) == Some(&idx) {
                    open.remove(&key);
                }
            }
        }
        if g.kind == GateKind::Toffoli {
            let key = toffoli_key(g);
            open.insert(key, i);
            for q in [key.0, key.1, key.2] {
                watchers.entry(q).or_default().push((key, i));
            }
        }
    }
    safe
}

/// Streams Toffoli-level gates as elementary gates. In approximate mode only
/// Toffolis that `phase_safe_toffolis` accepts use the 7-gate form.
pub fn stream_elementary(gates: &[Gate], mode: ToffoliLowering, sink: &mut impl FnMut(Gate)) -> Result<(), LowerError> {
    let safe = match mode {
        ToffoliLowering::Exact => vec![false; gates.len()],
        ToffoliLowering::Approx => phase_safe_toffolis(gates),
    };
    for (g, approx) in gates.iter().zip(safe) {
        match g.kind {
            GateKind::Toffoli => {
                let (a, b, t) = (g.controls[0].qubit, g.controls[1].qubit, g.target);
                if approx {
                    let (a, b, t) = toffoli_key(g);
                    approx_toffoli(a, b, t).into_iter().for_each(&mut *sink);
                } else {
                    exact_toffoli(a, b, t).into_iter().for_each(&mut *sink);
                }
            }
            GateKind::Mct => {
                return Err(LowerError::WrongLevel { expected: Level::Toffoli, got: Level::Mct });
            }
            _ => sink(g.clone()),
        }
    }
    Ok(())
}

/// Lowers a circuit all the way to elementary gates.
pub fn to_elementary(c: &Circuit, mode: ToffoliLowering) -> Result<Circuit, LowerError> {
    if c.level() == Level::Elementary {
        return Ok(c.clone());
    }
    let t = to_toffoli_level(c)?;
    let mut gates = Vec::with_capacity(t.len() * 8);
    stream_elementary(t.gates(), mode, &mut |g| gates.push(g))?;
    Ok(Circuit::from_gates(*c.layout(), Level::Elementary, gates)?)
}

/// Cost of the elementary-level circuit without materialising it. The
/// Toffoli and MCT counts are taken from the higher levels.
pub fn elementary_cost(c: &Circuit, mode: ToffoliLowering) -> Result<CostReport, LowerError> {
    let mct_calls = c.gates().iter().filter(|g| g.kind == GateKind::Mct).count() as u64;
    let t = to_toffoli_level(c)?;
    let toffolis = t.gates().iter().filter(|g| g.kind == GateKind::Toffoli).count() as u64;
    let mut acc = CostAccumulator::new(*c.layout(), Level::Elementary);
    stream_elementary(t.gates(), mode, &mut |g| acc.add(&g))?;
    let mut report = acc.finish();
    report.toffoli_count = toffolis;
    report.mct_calls = mct_calls;
    Ok(report)
}

/// Control list helper for positive controls.
pub fn positive(qs: &[Qubit]) -> Vec<Control> {
    qs.iter().map(|&q| Control::pos(q)).collect()
}
