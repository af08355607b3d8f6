//! Depth-oriented oracle synthesis.
//!
//! The ancillas are split into three registers: `mem` holds copies of input
//! variables so that clause gadgets running side by side do not share
//! controls, `dirty` carries the GAND recursion and the pair gadgets, and
//! `clean` stores leaf values and the internal nodes of the merge tree.
//!
//! An innermost block runs four stages: Copy (CNOT fan-out of inputs into
//! `mem`), Clause (every leaf computed in parallel onto its own clean
//! slot), Merge (balanced Toffoli tree onto the block target) and Reset
//! (the Clause stage again, then the Copy stage reversed). A leaf is either
//! one clause or a pair of clauses combined with the dirty-ancilla pair
//! gadget, which doubles the block capacity when clean slots run short.

use crate::circuit::{Circuit, Control, Gate, Layout, Level, Qubit};
use crate::cnf::{Clause, CnfFormula};
use crate::gand::{build_gand, GandError, GandMode, GandPlan, OracleBuilder};
use crate::lowering::{elementary_cost, ToffoliLowering};
use crate::synth::{balanced, borrow_list, Mode, SynthError, SynthOptions, Synthesis};
use crate::synth_size::{self, synth_clause_mapped};

/// Parallelism factor `S = max(⌈k / log₂ ℓ⌉, 1)`.
pub fn parallelism(k: usize, ancillas: usize) -> usize {
    if ancillas < 2 {
        return k.max(1);
    }
    let s = (k as f64 / (ancillas as f64).log2()).ceil() as usize;
    s.max(1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterPartition {
    pub s: usize,
    pub mem: Vec<Qubit>,
    pub dirty: Vec<Qubit>,
    pub clean: Vec<Qubit>,
}

impl RegisterPartition {
    /// `⌊(S−1)ℓ/(S+1)⌋` memory qubits, `⌊ℓ/(S+1)⌋` dirty qubits and the
    /// remainder as clean slots.
    pub fn new(layout: &Layout, k: usize) -> Self {
        let l = layout.n_ancillas;
        let s = parallelism(k, l);
        let n_mem = (s - 1) * l / (s + 1);
        let n_dirty = l / (s + 1);
        let anc: Vec<Qubit> = layout.ancillas().collect();
        RegisterPartition {
            s,
            mem: anc[..n_mem].to_vec(),
            dirty: anc[n_mem..n_mem + n_dirty].to_vec(),
            clean: anc[n_mem + n_dirty..].to_vec(),
        }
    }

    pub fn feasible(&self) -> bool {
        self.dirty.len() >= 2
    }
}

/// Smallest ℓ whose partition leaves at least two dirty qubits.
pub fn minimal_depth_ancillas(k: usize) -> usize {
    (3..).find(|&l| l / (parallelism(k, l) + 1) >= 2).unwrap()
}

/// Number of copies `t_v ≥ 1` of each variable (index `v − 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FanoutTable {
    pub copies: Vec<usize>,
}

impl FanoutTable {
    pub fn extra(&self) -> usize {
        self.copies.iter().map(|t| t - 1).sum()
    }
}

/// Gives each variable one copy per clause reading it, capping greedily by
/// descending demand so that at most `capacity` extra copies are made.
pub fn plan_fanout(clauses: &[Clause], num_vars: usize, capacity: usize) -> FanoutTable {
    let mut demand = vec![0usize; num_vars];
    for c in clauses {
        for v in c.vars() {
            demand[v as usize - 1] += 1;
        }
    }
    let mut order: Vec<usize> = (0..num_vars).filter(|&v| demand[v] > 1).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(demand[v]), v));
    let mut copies = vec![1usize; num_vars];
    let mut left = capacity;
    for v in order {
        let extra = (demand[v] - 1).min(left);
        copies[v] += extra;
        left -= extra;
    }
    FanoutTable { copies }
}

/// Clauses an innermost block can hold with `clean` slots and `dirty`
/// borrowable qubits: leaves are capped by the tree (`2L − 2 ≤ clean`),
/// pairs by the dirty pool.
pub fn innermost_capacity(clean: usize, dirty: usize) -> usize {
    let leaves = (clean + 2) / 2;
    let pairs = dirty / 2;
    (2 * leaves).min(leaves + pairs)
}

/// Pair gadget: `q ^= C1 ∧ C2` with dirty `p1`, `p2` and any `q`.
fn pair_gadget(
    g1: &dyn Fn(&mut Circuit) -> Result<(), SynthError>,
    g2: &dyn Fn(&mut Circuit) -> Result<(), SynthError>,
    p1: Qubit,
    p2: Qubit,
    q: Qubit,
    out: &mut Circuit,
) -> Result<(), SynthError> {
    let tof = Gate::toffoli(p1, p2, q);
    for _ in 0..2 {
        out.push(tof.clone())?;
        g1(out)?;
        out.push(tof.clone())?;
        g2(out)?;
    }
    Ok(())
}

enum Leaf<'a> {
    Single(&'a Clause),
    Pair(&'a Clause, &'a Clause),
}

/// Appends `target ^= ∧ clauses` using the four-stage layout. `clean` and
/// `mem` must be |0⟩ on entry and are |0⟩ on exit; `dirty` may hold
/// anything and is restored.
pub fn innermost_block(
    clauses: &[Clause],
    layout: &Layout,
    target: Qubit,
    clean: &[Qubit],
    dirty: &[Qubit],
    mem: &[Qubit],
    out: &mut Circuit,
) -> Result<(), SynthError> {
    let b = clauses.len();
    let fallback: Vec<Qubit> = dirty.iter().chain(clean).chain(mem).copied().filter(|&q| q != target).collect();
    if b == 1 {
        return synth_clause_mapped(&clauses[0], &|v| layout.var(v), target, &fallback, out);
    }
    let leaves_max = (clean.len() + 2) / 2;
    let n_leaves = b.min(leaves_max);
    let n_pairs = b - n_leaves;
    if n_pairs > n_leaves || 2 * n_pairs > dirty.len() {
        return Err(SynthError::TooFewAncillas { min: layout.n_ancillas + 1, got: layout.n_ancillas });
    }
    let mut leaves: Vec<Leaf> = Vec::with_capacity(n_leaves);
    for i in 0..n_pairs {
        leaves.push(Leaf::Pair(&clauses[2 * i], &clauses[2 * i + 1]));
    }
    leaves.extend(clauses[2 * n_pairs..].iter().map(Leaf::Single));

    // Copy stage and reader assignment.
    let fan = plan_fanout(clauses, layout.n_inputs, mem.len());
    let mut copy_of: Vec<Vec<Qubit>> = Vec::with_capacity(layout.n_inputs);
    let mut next_mem = 0;
    let mut copy = Circuit::new(*layout, Level::Mct);
    for v in 0..layout.n_inputs {
        let mut qs = vec![layout.input(v)];
        qs.extend_from_slice(&mem[next_mem..next_mem + fan.copies[v] - 1]);
        next_mem += fan.copies[v] - 1;
        let mut have = 1;
        while have < qs.len() {
            let step = have.min(qs.len() - have);
            for i in 0..step {
                copy.push(Gate::cnot(qs[i], qs[have + i]))?;
            }
            have += step;
        }
        copy_of.push(qs);
    }
    let spare_mem = &mem[next_mem..];
    let mut reads = vec![0usize; layout.n_inputs];
    let mut readers: Vec<Vec<Qubit>> = Vec::with_capacity(b);
    for c in clauses {
        readers.push(
            c.vars()
                .map(|v| {
                    let i = v as usize - 1;
                    let q = copy_of[i][reads[i] % copy_of[i].len()];
                    reads[i] += 1;
                    q
                })
                .collect(),
        );
    }

    if n_leaves == 1 {
        let (c1, c2) = match leaves[0] {
            Leaf::Pair(a, b) => (a, b),
            Leaf::Single(_) => unreachable!(),
        };
        let (p1, p2) = (dirty[0], dirty[1]);
        let spare: Vec<Qubit> = clean.iter().chain(spare_mem).chain(&dirty[2..]).copied().collect();
        let (r1, r2) = (readers[0].clone(), readers[1].clone());
        let b1: Vec<Qubit> = [p2, target].into_iter().chain(spare.iter().copied()).collect();
        let b2: Vec<Qubit> = [p1, target].into_iter().chain(spare.iter().copied()).collect();
        let g1 = |o: &mut Circuit| synth_clause_mapped(c1, &|v| reader(c1, &r1, v), p1, &b1, o);
        let g2 = |o: &mut Circuit| synth_clause_mapped(c2, &|v| reader(c2, &r2, v), p2, &b2, o);
        out.extend_from(&copy)?;
        pair_gadget(&g1, &g2, p1, p2, target, out)?;
        out.extend_from(&copy.inverse())?;
        return Ok(());
    }

    let leaf_slots = &clean[..n_leaves];
    let internal = &clean[n_leaves..n_leaves + n_leaves - 2];
    let mut spare: Vec<Qubit> = internal.to_vec();
    spare.extend_from_slice(&clean[2 * n_leaves - 2..]);
    spare.extend_from_slice(&dirty[2 * n_pairs..]);
    spare.extend_from_slice(spare_mem);

    // Clause stage: one segment per leaf, emitted in rounds of leaves with
    // disjoint controls so the layering can run each round side by side.
    let mut segments: Vec<(Vec<Qubit>, Circuit)> = Vec::with_capacity(n_leaves);
    let mut spare_at = 0;
    let mut take_spare = |need: usize, exclude: &[Qubit]| -> Vec<Qubit> {
        let mut got = Vec::with_capacity(need);
        for _ in 0..spare.len() {
            if got.len() >= need {
                break;
            }
            let q = spare[spare_at % spare.len()];
            spare_at += 1;
            if !exclude.contains(&q) && !got.contains(&q) {
                got.push(q);
            }
        }
        got
    };
    let mut ci = 0;
    for (li, leaf) in leaves.iter().enumerate() {
        let slot = leaf_slots[li];
        let mut seg = Circuit::new(*layout, Level::Mct);
        let reads: Vec<Qubit> = match *leaf {
            Leaf::Single(c) => {
                let r = &readers[ci];
                ci += 1;
                let need = c.width().saturating_sub(2);
                let mut borrow = take_spare(need, r);
                borrow.extend(fallback.iter().copied());
                synth_clause_mapped(c, &|v| reader(c, r, v), slot, &borrow, &mut seg)?;
                r.clone()
            }
            Leaf::Pair(c1, c2) => {
                let (r1, r2) = (&readers[ci], &readers[ci + 1]);
                ci += 2;
                let (p1, p2) = (dirty[2 * li], dirty[2 * li + 1]);
                let need = c1.width().max(c2.width()).saturating_sub(4);
                let extra = take_spare(need, &[r1.as_slice(), r2.as_slice()].concat());
                let b1: Vec<Qubit> =
                    [p2, slot].into_iter().chain(extra.iter().copied()).chain(fallback.iter().copied()).collect();
                let b2: Vec<Qubit> =
                    [p1, slot].into_iter().chain(extra.iter().copied()).chain(fallback.iter().copied()).collect();
                let g1 = |o: &mut Circuit| synth_clause_mapped(c1, &|v| reader(c1, r1, v), p1, &b1, o);
                let g2 = |o: &mut Circuit| synth_clause_mapped(c2, &|v| reader(c2, r2, v), p2, &b2, o);
                pair_gadget(&g1, &g2, p1, p2, slot, &mut seg)?;
                [r1.as_slice(), r2.as_slice()].concat()
            }
        };
        segments.push((reads, seg));
    }
    let mut rounds: Vec<(std::collections::HashSet<Qubit>, Vec<usize>)> = Vec::new();
    for (i, (reads, _)) in segments.iter().enumerate() {
        match rounds.iter_mut().find(|(used, _)| reads.iter().all(|q| !used.contains(q))) {
            Some((used, members)) => {
                used.extend(reads.iter().copied());
                members.push(i);
            }
            None => rounds.push((reads.iter().copied().collect(), vec![i])),
        }
    }
    let mut clause_stage = Circuit::new(*layout, Level::Mct);
    for (_, members) in &rounds {
        for &i in members {
            clause_stage.extend_from(&segments[i].1)?;
        }
    }

    // Merge stage: balanced tree, root onto the target.
    let mut compute = Vec::new();
    let mut next_internal = 0;
    let root = merge_tree(leaf_slots, internal, &mut next_internal, &mut compute);
    debug_assert_eq!(next_internal, internal.len());

    out.extend_from(&copy)?;
    out.extend_from(&clause_stage)?;
    for g in &compute {
        out.push(g.clone())?;
    }
    out.push(Gate::toffoli(root.0, root.1, target))?;
    for g in compute.iter().rev() {
        out.push(g.clone())?;
    }
    out.extend_from(&clause_stage)?;
    out.extend_from(&copy.inverse())?;
    Ok(())
}

fn reader(c: &Clause, qs: &[Qubit], v: u32) -> Qubit {
    let i = c.vars().position(|w| w == v).unwrap();
    qs[i]
}

/// Builds the tree over `leaves` bottom-up into `gates` and returns the two
/// qubits feeding the root.
fn merge_tree(leaves: &[Qubit], internal: &[Qubit], next: &mut usize, gates: &mut Vec<Gate>) -> (Qubit, Qubit) {
    fn node(leaves: &[Qubit], internal: &[Qubit], next: &mut usize, gates: &mut Vec<Gate>) -> Qubit {
        if leaves.len() == 1 {
            return leaves[0];
        }
        let (a, b) = leaves.split_at(leaves.len().div_ceil(2));
        let x = node(a, internal, next, gates);
        let y = node(b, internal, next, gates);
        let q = internal[*next];
        *next += 1;
        gates.push(Gate::toffoli(x, y, q));
        q
    }
    let (a, b) = leaves.split_at(leaves.len().div_ceil(2));
    (node(a, internal, next, gates), node(b, internal, next, gates))
}

struct Ctx<'a> {
    f: &'a CnfFormula,
    layout: Layout,
    part: RegisterPartition,
    cap: usize,
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

impl Ctx<'_> {
    fn emit(
        &self,
        start: usize,
        len: usize,
        target: Qubit,
        pool: &[Qubit],
        out: &mut Circuit,
    ) -> Result<(), SynthError> {
        let clauses = &self.f.clauses()[start..start + len];
        if len <= self.cap {
            return innermost_block(clauses, &self.layout, target, &self.part.clean, pool, &self.part.mem, out);
        }
        let p = (pool.len() / 2 + 1).min(len.div_ceil(self.cap)).max(2);
        let k = 2 * p - 2;
        let blocks: Vec<Block> =
            balanced(start, len, p).into_iter().map(|(s, l)| Block { ctx: self, start: s, len: l }).collect();
        let workspace = self.part.clean.iter().chain(&self.part.mem).copied().collect();
        let plan = GandPlan {
            ancillas: pool[..k].to_vec(),
            target,
            mode: GandMode::And,
            scratch: pool[k..].to_vec(),
            workspace,
        };
        build_gand(&blocks, &plan, out)?;
        Ok(())
    }
}

/// Depth-oriented synthesis. Ancillas must start clean. When the partition
/// leaves fewer than two dirty qubits the size synthesizer is used instead
/// and the result says so.
pub fn synth_depth(f: &CnfFormula, opts: &SynthOptions) -> Result<Synthesis, SynthError> {
    let l = opts.ancillas;
    if l < synth_size::MIN_ANCILLAS {
        return Err(SynthError::TooFewAncillas { min: synth_size::MIN_ANCILLAS, got: l });
    }
    let layout = Layout::oracle(f.num_vars(), l);
    let part = RegisterPartition::new(&layout, f.width());
    if !part.feasible() {
        let min = minimal_depth_ancillas(f.width());
        let size_opts = SynthOptions { mode: Mode::Size, ..opts.clone() };
        return Ok(Synthesis {
            circuit: synth_size::synth_size(f, &size_opts)?,
            mode: Mode::Size,
            small_ancilla: false,
            fallback: Some(format!("depth mode requires ℓ ≥ {min} for k = {}; used size mode", f.width())),
        });
    }
    let full = innermost_capacity(part.clean.len(), part.dirty.len());
    let mut best: Option<(u64, Circuit)> = None;
    for cap in block_sizes(full, (part.clean.len() + 2) / 2) {
        let ctx = Ctx { f, layout, part: part.clone(), cap };
        let c = ctx.build()?;
        let depth = elementary_cost(&c, ToffoliLowering::Exact)?.depth;
        if best.as_ref().is_none_or(|(d, _)| depth < *d) {
            best = Some((depth, c));
        }
    }
    let circuit = best.expect("at least one block size").1;
    Ok(Synthesis { circuit, mode: Mode::Depth, small_ancilla: false, fallback: None })
}

/// Innermost block sizes worth trying: the full capacity, the largest size
/// that needs no pair gadgets, and successive halvings of both. Smaller
/// blocks trade deeper recursion for fewer clauses competing for the same
/// variables.
fn block_sizes(full: usize, singles: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for base in [full, singles] {
        let mut c = base;
        while c >= 1 {
            if !out.contains(&c) {
                out.push(c);
            }
            if c == 1 {
                break;
            }
            c = c.div_ceil(2);
        }
    }
    out
}

impl Ctx<'_> {
    fn build(&self) -> Result<Circuit, SynthError> {
        let layout = self.layout;
        let target = layout.target();
        let dirty = &self.part.dirty;
        let m = self.f.num_clauses();
        let mut out = Circuit::new(layout, Level::Mct);
        if m <= self.cap {
            self.emit(0, m, target, dirty, &mut out)?;
            return Ok(out);
        }
        let g = dirty.len().min(m.div_ceil(self.cap));
        let groups = balanced(0, m, g);
        let mut compute = Circuit::new(layout, Level::Mct);
        for (j, &(s, len)) in groups.iter().enumerate() {
            let pool: Vec<Qubit> = dirty.iter().copied().filter(|&q| q != dirty[j]).chain([target]).collect();
            self.emit(s, len, dirty[j], &pool, &mut compute)?;
        }
        out.extend_from(&compute)?;
        let controls: Vec<Control> = dirty[..g].iter().map(|&q| Control::pos(q)).collect();
        let candidates =
            dirty[g..].iter().chain(&self.part.mem).chain(&self.part.clean).copied().chain(layout.inputs());
        let borrow = borrow_list(candidates, &[target], g.saturating_sub(2));
        out.push(Gate::mct(controls, target, borrow))?;
        out.extend_from(&compute.inverse())?;
        Ok(out)
    }
}
