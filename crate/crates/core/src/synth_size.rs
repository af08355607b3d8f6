//! Size-oriented oracle synthesis.
//!
//! Clauses are split into balanced blocks that are merged with GAND of
//! fan-in ⌊P/2⌋+1, where `P` is the number of qubits a block may borrow.
//! Sub-blocks recurse until a block holds a single clause, which is written
//! with one MCT. When the ancillas start clean, the outermost level instead
//! computes up to ℓ block values straight onto the ancillas, combines them
//! with one MCT onto the target and uncomputes them.
//!
//! The small-ancilla variant adds a Gray-code merge: with `r` dirty
//! ancillas holding `a_i`, applying `MCT(a_1..a_r → t)` at every vertex of
//! a cyclic Gray walk that toggles `a_i ^= f_i` XORs
//! `∏ (a_i ⊕ a_i ⊕ f_i) = ∏ f_i` into `t`. It merges `r` blocks with `r`
//! ancillas, against `⌊r/2⌋+1` for GAND, at the price of `2^r` MCTs. A
//! per-block dynamic program picks whichever is cheaper.

use std::collections::HashMap;

use crate::circuit::{Circuit, Control, Gate, Layout, Level, Qubit};
use crate::cnf::{Clause, CnfFormula};
use crate::gand::{build_gand, gand_calls, gand_toffolis, GandError, GandMode, GandPlan, OracleBuilder};
use crate::lowering::{mct_gate_count, mct_toffoli_count};
use crate::synth::{balanced, borrow_list, idle_inputs, SynthError, SynthOptions};

/// Smallest ancilla budget accepted by the size synthesizer.
pub const MIN_ANCILLAS: usize = 3;

/// Largest Gray-code merge considered by the small-ancilla planner.
const MAX_GRAY: usize = 8;

/// Appends `target ^= clause(x)`. The clause is the complement of an AND of
/// complemented literals, so the MCT fires on the all-false assignment and a
/// final X restores the OR.
pub fn synth_clause(
    clause: &Clause,
    layout: &Layout,
    target: Qubit,
    borrow: &[Qubit],
    out: &mut Circuit,
) -> Result<(), SynthError> {
    synth_clause_mapped(clause, &|v| layout.var(v), target, borrow, out)
}

/// [`synth_clause`] reading variable `v` from `qubit_of(v)`.
pub(crate) fn synth_clause_mapped(
    clause: &Clause,
    qubit_of: &dyn Fn(u32) -> Qubit,
    target: Qubit,
    borrow: &[Qubit],
    out: &mut Circuit,
) -> Result<(), SynthError> {
    let lits = clause.literals();
    if lits.len() == 1 {
        let l = lits[0];
        out.push(Gate::cnot_pol(Control { qubit: qubit_of(l.var), positive: !l.negated }, target))?;
        return Ok(());
    }
    let controls: Vec<Control> = lits.iter().map(|l| Control { qubit: qubit_of(l.var), positive: l.negated }).collect();
    let mut exclude: Vec<Qubit> = controls.iter().map(|c| c.qubit).collect();
    exclude.push(target);
    let borrow = borrow_list(borrow.iter().copied(), &exclude, lits.len().saturating_sub(2));
    out.push(Gate::mct(controls, target, borrow))?;
    out.push(Gate::x(target))?;
    Ok(())
}

/// Elementary gate count of [`synth_clause`] under exact lowering.
pub fn clause_cost(clause: &Clause, pool: usize) -> u64 {
    let lits = clause.literals();
    if lits.len() == 1 {
        return 1 + 2 * u64::from(lits[0].negated);
    }
    let negative = lits.iter().filter(|l| !l.negated).count();
    mct_elementary(lits.len(), negative, pool) + 1
}

fn mct_elementary(arity: usize, negative: usize, pool: usize) -> u64 {
    let gates = mct_gate_count(arity, negative, pool).unwrap_or(u64::MAX / 4);
    let tof = if arity >= 2 { mct_toffoli_count(arity, pool).unwrap_or(0) } else { 0 };
    gates + 14 * tof
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Choice {
    Gand(usize),
    Gray(usize),
}

/// Toggle sequence of a cyclic Gray walk over `r` bits, 0-based.
pub fn gray_toggles(r: usize) -> Vec<usize> {
    let mut t: Vec<usize> = (1u64..1 << r).map(|k| k.trailing_zeros() as usize).collect();
    t.push(r - 1);
    t
}

struct Ctx<'a> {
    f: &'a CnfFormula,
    layout: Layout,
    reuse_inputs: bool,
    plan: Option<HashMap<(usize, usize), (u64, Choice)>>,
}

struct Block<'a> {
    ctx: &'a Ctx<'a>,
    start: usize,
    len: usize,
}

impl OracleBuilder for Block<'_> {
    fn emit(&self, target: Qubit, scratch: &[Qubit], out: &mut Circuit) -> Result<(), GandError> {
        self.ctx.emit(self.start, self.len, target, scratch, out).map_err(|e| match e {
            SynthError::Gand(g) => g,
            SynthError::Circuit(c) => GandError::Circuit(c),
            other => GandError::Oracle(other.to_string()),
        })
    }
}

impl<'a> Ctx<'a> {
    fn clauses(&self, start: usize, len: usize) -> &'a [Clause] {
        &self.f.clauses()[start..start + len]
    }

    fn default_choice(len: usize, pool: usize) -> Choice {
        Choice::Gand((pool / 2 + 1).min(len))
    }

    /// Minimum exact-lowering cost of a block over GAND with the default
    /// fan-in and Gray merges of every admissible width.
    fn plan(&self, start: usize, len: usize, pool: usize, memo: &mut HashMap<(usize, usize), (u64, Choice)>) -> u64 {
        if len == 1 {
            return clause_cost(&self.f.clauses()[start], pool);
        }
        if let Some(&(c, _)) = memo.get(&(start, len)) {
            return c;
        }
        let mut options = vec![Self::default_choice(len, pool)];
        options.extend((2..=pool.min(len).min(MAX_GRAY)).map(Choice::Gray));
        let mut best = (u64::MAX, options[0]);
        for choice in options {
            let cost = match choice {
                Choice::Gand(p) => {
                    let parts = balanced(start, len, p);
                    let calls = gand_calls(p);
                    let mut c = 15 * gand_toffolis(p);
                    for ((s, l), k) in parts.into_iter().zip(calls) {
                        c = c.saturating_add(k.saturating_mul(self.plan(s, l, pool, memo)));
                    }
                    c
                }
                Choice::Gray(r) => {
                    let parts = balanced(start, len, r);
                    let mut calls = vec![0u64; r];
                    for t in gray_toggles(r) {
                        calls[t] += 1;
                    }
                    let borrow = pool - r + self.layout.n_inputs;
                    let mut c = (1u64 << r) * mct_elementary(r, 0, borrow);
                    for ((s, l), k) in parts.into_iter().zip(calls) {
                        c = c.saturating_add(k.saturating_mul(self.plan(s, l, pool, memo)));
                    }
                    c
                }
            };
            if cost < best.0 {
                best = (cost, choice);
            }
        }
        memo.insert((start, len), best);
        best.0
    }

    fn emit(
        &self,
        start: usize,
        len: usize,
        target: Qubit,
        pool: &[Qubit],
        out: &mut Circuit,
    ) -> Result<(), SynthError> {
        let clauses = self.clauses(start, len);
        let mut pool = pool.to_vec();
        if self.reuse_inputs {
            for q in idle_inputs(&self.layout, clauses) {
                if q != target && !pool.contains(&q) {
                    pool.push(q);
                }
            }
        }
        if len == 1 {
            return synth_clause(&clauses[0], &self.layout, target, &pool, out);
        }
        let choice = match &self.plan {
            Some(memo) => memo.get(&(start, len)).map(|&(_, c)| c).unwrap_or(Self::default_choice(len, pool.len())),
            None => Self::default_choice(len, pool.len()),
        };
        match choice {
            Choice::Gand(p) => {
                if p < 2 {
                    return Err(SynthError::TooFewAncillas { min: MIN_ANCILLAS, got: pool.len() });
                }
                let k = 2 * p - 2;
                let blocks: Vec<Block> =
                    balanced(start, len, p).into_iter().map(|(s, l)| Block { ctx: self, start: s, len: l }).collect();
                let workspace = if self.reuse_inputs { self.layout.inputs().collect() } else { Vec::new() };
                let plan = GandPlan {
                    ancillas: pool[..k].to_vec(),
                    target,
                    mode: GandMode::And,
                    scratch: pool[k..].to_vec(),
                    workspace,
                };
                build_gand(&blocks, &plan, out)?;
            }
            Choice::Gray(r) => {
                let anc = &pool[..r];
                let rest = &pool[r..];
                let mut exclude = anc.to_vec();
                exclude.push(target);
                let borrow =
                    borrow_list(rest.iter().copied().chain(self.layout.inputs()), &exclude, r.saturating_sub(2));
                let mct = Gate::mct(anc.iter().map(|&q| Control::pos(q)).collect(), target, borrow);
                let parts = balanced(start, len, r);
                let mut cache: Vec<Option<Vec<Gate>>> = vec![None; r];
                for t in gray_toggles(r) {
                    out.push(mct.clone())?;
                    if cache[t].is_none() {
                        let scratch: Vec<Qubit> = anc
                            .iter()
                            .copied()
                            .filter(|&q| q != anc[t])
                            .chain([target])
                            .chain(rest.iter().copied())
                            .collect();
                        let mut seg = Circuit::new(*out.layout(), out.level());
                        self.emit(parts[t].0, parts[t].1, anc[t], &scratch, &mut seg)?;
                        cache[t] = Some(seg.gates().to_vec());
                    }
                    for g in cache[t].as_ref().unwrap() {
                        out.push(g.clone())?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Size-oriented synthesis of `f` with `opts.ancillas` ancillas.
pub fn synth_size(f: &CnfFormula, opts: &SynthOptions) -> Result<Circuit, SynthError> {
    let l = opts.ancillas;
    if l < MIN_ANCILLAS {
        return Err(SynthError::TooFewAncillas { min: MIN_ANCILLAS, got: l });
    }
    let layout = Layout::oracle(f.num_vars(), l);
    let small = opts.variant.small_ancilla_for(l);
    let mut ctx = Ctx { f, layout, reuse_inputs: opts.reuse_inputs && !small, plan: None };
    let m = f.num_clauses();
    let ancillas: Vec<Qubit> = layout.ancillas().collect();
    let target = layout.target();
    let mut out = Circuit::new(layout, Level::Mct);

    if m == 1 {
        synth_clause(&f.clauses()[0], &layout, target, &ancillas, &mut out)?;
        return Ok(out);
    }
    if !opts.clean_ancillas {
        if small {
            let mut memo = HashMap::new();
            ctx.plan(0, m, l, &mut memo);
            ctx.plan = Some(memo);
        }
        ctx.emit(0, m, target, &ancillas, &mut out)?;
        return Ok(out);
    }

    let g = l.min(m);
    let groups = balanced(0, m, g);
    if small {
        let mut memo = HashMap::new();
        for &(s, len) in &groups {
            ctx.plan(s, len, l, &mut memo);
        }
        ctx.plan = Some(memo);
    }
    let mut compute = Circuit::new(layout, Level::Mct);
    for (j, &(s, len)) in groups.iter().enumerate() {
        let pool: Vec<Qubit> = ancillas.iter().copied().filter(|&q| q != ancillas[j]).chain([target]).collect();
        ctx.emit(s, len, ancillas[j], &pool, &mut compute)?;
    }
    out.extend_from(&compute)?;
    let controls: Vec<Control> = ancillas[..g].iter().map(|&q| Control::pos(q)).collect();
    let borrow = borrow_list(ancillas[g..].iter().copied().chain(layout.inputs()), &[target], g.saturating_sub(2));
    out.push(Gate::mct(controls, target, borrow))?;
    out.extend_from(&compute.inverse())?;
    Ok(out)
}
