//! Computational-basis simulation and oracle verification.
//!
//! Every gate at MCT and Toffoli level permutes basis states, so those
//! circuits are simulated 64 states per machine word. Elementary circuits
//! (H, T, Ry) pass through superpositions inside a Toffoli decomposition and
//! are simulated on a sparse amplitude map per input state; a well-formed
//! elementary circuit still ends on a single basis state whose phase is an
//! eighth root of unity.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind, Layout, OneQubit};
use crate::cnf::CnfFormula;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("state has {got} bits, layout has {expected} qubits")]
    StateMismatch { expected: usize, got: usize },
    #[error("circuit did not map the basis state to a single basis state")]
    NotMonomial,
    #[error("circuit layout does not match formula: {0}")]
    LayoutMismatch(String),
}

/// A basis state with a phase `ω^phase`, `ω = e^{iπ/4}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub bits: Vec<bool>,
    pub phase: u8,
}

impl BasisState {
    pub fn zeros(n: usize) -> Self {
        BasisState { bits: vec![false; n], phase: 0 }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BasisState { bits, phase: 0 }
    }

    /// `Some(±1)` when the phase is real.
    pub fn sign(&self) -> Option<i8> {
        match self.phase % 8 {
            0 => Some(1),
            4 => Some(-1),
            _ => None,
        }
    }
}

fn check_len(c: &Circuit, s: &BasisState) -> Result<(), SimError> {
    let expected = c.layout().total();
    if s.bits.len() != expected {
        return Err(SimError::StateMismatch { expected, got: s.bits.len() });
    }
    Ok(())
}

#[inline]
fn fires(g: &Gate, bits: &[bool]) -> bool {
    g.controls.iter().all(|c| bits[c.qubit.index()] == c.positive)
}

/// Reference simulator, one state at a time.
pub fn simulate(c: &Circuit, s: &BasisState) -> Result<BasisState, SimError> {
    check_len(c, s)?;
    if c.is_permutation() {
        let mut bits = s.bits.clone();
        for g in c.gates() {
            if fires(g, &bits) {
                bits[g.target.index()] ^= true;
            }
        }
        return Ok(BasisState { bits, phase: s.phase });
    }
    simulate_sparse(c.gates(), s)
}

type Term = (Vec<u64>, Complex64);

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut w = vec![0u64; bits.len().div_ceil(64).max(1)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            w[i / 64] |= 1 << (i % 64);
        }
    }
    w
}

#[inline]
fn get(w: &[u64], i: usize) -> bool {
    (w[i / 64] >> (i % 64)) & 1 == 1
}

#[inline]
fn flip(w: &mut [u64], i: usize) {
    w[i / 64] ^= 1 << (i % 64);
}

fn omega(k: u8) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4 * k as f64)
}

fn simulate_sparse(gates: &[Gate], s: &BasisState) -> Result<BasisState, SimError> {
    const EPS: f64 = 1e-9;
    let mut terms: Vec<Term> = vec![(pack(&s.bits), omega(s.phase))];
    let (c8, s8) = ((std::f64::consts::PI / 8.0).cos(), (std::f64::consts::PI / 8.0).sin());
    let frac = std::f64::consts::FRAC_1_SQRT_2;
    for g in gates {
        let t = g.target.index();
        match g.kind {
            GateKind::Single(op) => match op {
                OneQubit::T | OneQubit::Tdg => {
                    let w = if op == OneQubit::T { omega(1) } else { omega(7) };
                    for (b, a) in terms.iter_mut() {
                        if get(b, t) {
                            *a *= w;
                        }
                    }
                }
                OneQubit::H | OneQubit::RyQuarter | OneQubit::RyQuarterDg => {
                    // matrix [[m00, m01], [m10, m11]] acting on qubit t
                    let (m00, m01, m10, m11) = match op {
                        OneQubit::H => (frac, frac, frac, -frac),
                        OneQubit::RyQuarter => (c8, -s8, s8, c8),
                        _ => (c8, s8, -s8, c8),
                    };
                    let mut next: Vec<Term> = Vec::with_capacity(terms.len() * 2);
                    for (b, a) in terms.drain(..) {
                        let one = get(&b, t);
                        let (to0, to1) = if one { (m01, m11) } else { (m00, m10) };
                        let mut b0 = b.clone();
                        let mut b1 = b;
                        if one {
                            flip(&mut b0, t);
                        } else {
                            flip(&mut b1, t);
                        }
                        for (bb, amp) in [(b0, a * to0), (b1, a * to1)] {
                            if let Some(e) = next.iter_mut().find(|(x, _)| *x == bb) {
                                e.1 += amp;
                            } else {
                                next.push((bb, amp));
                            }
                        }
                    }
                    next.retain(|(_, a)| a.norm() > EPS);
                    terms = next;
                }
            },
            _ => {
                for (b, _) in terms.iter_mut() {
                    if g.controls.iter().all(|c| get(b, c.qubit.index()) == c.positive) {
                        flip(b, t);
                    }
                }
            }
        }
    }
    if terms.len() != 1 {
        return Err(SimError::NotMonomial);
    }
    let (b, a) = &terms[0];
    let k = (a.arg() / std::f64::consts::FRAC_PI_4).round().rem_euclid(8.0) as u8;
    if (a - omega(k)).norm() > 1e-6 {
        return Err(SimError::NotMonomial);
    }
    let bits = (0..s.bits.len()).map(|i| get(b, i)).collect();
    Ok(BasisState { bits, phase: k })
}

/// Runs a permutation circuit over `lanes` packed states stored
/// qubit-major: `words[q * width + w]` holds bit `q` of states `64w..64w+63`.
pub fn run_packed(c: &Circuit, words: &mut [u64], width: usize) {
    debug_assert!(c.is_permutation());
    debug_assert_eq!(words.len(), c.layout().total() * width);
    for g in c.gates() {
        let t = g.target.index() * width;
        for w in 0..width {
            let mut mask = !0u64;
            for ctl in &g.controls {
                let v = words[ctl.qubit.index() * width + w];
                mask &= if ctl.positive { v } else { !v };
            }
            words[t + w] ^= mask;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerifyMode {
    /// Every `(x, c)` pair, `2^(n+1)` in total.
    Exhaustive,
    /// Seeded random `(x, c)` pairs.
    Sampled { count: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AncillaPolicy {
    CleanZero,
    /// Each tested pair is repeated with `trials` random ancilla fillings.
    RandomDirty {
        trials: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub input: String,
    pub ancilla_init: String,
    pub target_init: bool,
    pub expected_target: bool,
    pub got: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub formula_id: String,
    pub mode: VerifyMode,
    pub policy: AncillaPolicy,
    pub states_checked: u64,
    /// Wrong target bit or corrupted input register.
    pub failure_count: u64,
    pub sign_failure_count: u64,
    pub ancilla_restoration_failure_count: u64,
    /// First few failing cases.
    pub failures: Vec<Failure>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failure_count == 0 && self.sign_failure_count == 0 && self.ancilla_restoration_failure_count == 0
    }

    fn merge(mut self, other: VerificationReport) -> Self {
        self.states_checked += other.states_checked;
        self.failure_count += other.failure_count;
        self.sign_failure_count += other.sign_failure_count;
        self.ancilla_restoration_failure_count += other.ancilla_restoration_failure_count;
        self.failures.extend(other.failures);
        self.failures.truncate(MAX_EXAMPLES);
        self
    }
}

const MAX_EXAMPLES: usize = 16;
const BATCH_WIDTH: usize = 64;

fn bits_str(bits: impl Iterator<Item = bool>) -> String {
    bits.map(|b| if b { '1' } else { '0' }).collect()
}

/// One batch of up to `64 * BATCH_WIDTH` initial states, given as indices
/// into the `(x, c)` space plus an ancilla filling.
struct Batch {
    xs: Vec<(Vec<bool>, bool)>,
    ancillas: Vec<Vec<bool>>,
}

/// Checks `c` against `|x⟩|a⟩|t⟩ → |x⟩|a⟩|t ⊕ f(x)⟩` with sign +1.
pub fn verify_oracle(
    c: &Circuit,
    f: &CnfFormula,
    mode: VerifyMode,
    policy: AncillaPolicy,
) -> Result<VerificationReport, SimError> {
    let layout = *c.layout();
    if layout.n_inputs != f.num_vars() || layout.n_targets != 1 {
        return Err(SimError::LayoutMismatch(format!(
            "layout has {} inputs / {} targets, formula has {} variables",
            layout.n_inputs,
            layout.n_targets,
            f.num_vars()
        )));
    }
    let n = f.num_vars();
    let pairs: Vec<(Vec<bool>, bool)> = match mode {
        VerifyMode::Exhaustive => {
            assert!(n < 40, "exhaustive verification over {n} variables");
            (0u64..1 << (n + 1)).map(|i| ((0..n).map(|b| (i >> b) & 1 == 1).collect(), (i >> n) & 1 == 1)).collect()
        }
        VerifyMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| ((0..n).map(|_| rng.gen()).collect(), rng.gen())).collect()
        }
    };
    let (trials, dirty_seed) = match policy {
        AncillaPolicy::CleanZero => (1, None),
        AncillaPolicy::RandomDirty { trials, seed } => (trials.max(1), Some(seed)),
    };
    let per_batch = 64 * BATCH_WIDTH;
    let mut batches = Vec::new();
    for trial in 0..trials {
        for (bi, chunk) in pairs.chunks(per_batch).enumerate() {
            let ancillas = match dirty_seed {
                None => vec![vec![false; layout.n_ancillas]; chunk.len()],
                Some(seed) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(
                        seed ^ ((trial as u64) << 32) ^ (bi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                    );
                    (0..chunk.len()).map(|_| (0..layout.n_ancillas).map(|_| rng.gen()).collect()).collect()
                }
            };
            batches.push(Batch { xs: chunk.to_vec(), ancillas });
        }
    }
    let empty = VerificationReport {
        formula_id: String::new(),
        mode,
        policy,
        states_checked: 0,
        failure_count: 0,
        sign_failure_count: 0,
        ancilla_restoration_failure_count: 0,
        failures: Vec::new(),
    };
    let report = if c.is_permutation() {
        batches
            .par_iter()
            .map(|b| check_batch_packed(c, f, b, empty.clone()))
            .reduce(|| empty.clone(), VerificationReport::merge)
    } else {
        batches
            .par_iter()
            .map(|b| check_batch_sparse(c, f, b, empty.clone()))
            .reduce(|| empty.clone(), VerificationReport::merge)
    };
    Ok(report)
}

fn record(
    rep: &mut VerificationReport,
    layout: &Layout,
    x: &[bool],
    anc: &[bool],
    t0: bool,
    expected: bool,
    out: &[bool],
) {
    let n = layout.n_inputs;
    let inputs_ok = &out[..n] == x;
    let anc_ok = &out[n..n + layout.n_ancillas] == anc;
    let target_ok = out[layout.target().index()] == expected;
    if !(inputs_ok && target_ok) {
        rep.failure_count += 1;
    }
    if !anc_ok {
        rep.ancilla_restoration_failure_count += 1;
    }
    if (!inputs_ok || !target_ok || !anc_ok) && rep.failures.len() < MAX_EXAMPLES {
        rep.failures.push(Failure {
            input: bits_str(x.iter().copied()),
            ancilla_init: bits_str(anc.iter().copied()),
            target_init: t0,
            expected_target: expected,
            got: bits_str(out.iter().copied()),
        });
    }
}

fn check_batch_packed(c: &Circuit, f: &CnfFormula, b: &Batch, mut rep: VerificationReport) -> VerificationReport {
    let layout = *c.layout();
    let total = layout.total();
    let width = b.xs.len().div_ceil(64);
    let mut words = vec![0u64; total * width];
    for (s, ((x, t0), anc)) in b.xs.iter().zip(&b.ancillas).enumerate() {
        let (w, bit) = (s / 64, 1u64 << (s % 64));
        for (i, &v) in x.iter().enumerate() {
            if v {
                words[i * width + w] |= bit;
            }
        }
        for (j, &v) in anc.iter().enumerate() {
            if v {
                words[(layout.n_inputs + j) * width + w] |= bit;
            }
        }
        if *t0 {
            words[layout.target().index() * width + w] |= bit;
        }
    }
    let init = words.clone();
    run_packed(c, &mut words, width);
    for (s, ((x, t0), anc)) in b.xs.iter().zip(&b.ancillas).enumerate() {
        let (w, sh) = (s / 64, s % 64);
        let mut same = true;
        let expected = *t0 ^ f.eval_unchecked(x);
        for q in 0..total {
            let before = (init[q * width + w] >> sh) & 1 == 1;
            let after = (words[q * width + w] >> sh) & 1 == 1;
            let want = if q == layout.target().index() { expected } else { before };
            if after != want {
                same = false;
                break;
            }
        }
        rep.states_checked += 1;
        if !same {
            let out: Vec<bool> = (0..total).map(|q| (words[q * width + w] >> sh) & 1 == 1).collect();
            record(&mut rep, &layout, x, anc, *t0, expected, &out);
        }
    }
    rep
}

fn check_batch_sparse(c: &Circuit, f: &CnfFormula, b: &Batch, mut rep: VerificationReport) -> VerificationReport {
    let layout = *c.layout();
    for ((x, t0), anc) in b.xs.iter().zip(&b.ancillas) {
        let mut bits = x.clone();
        bits.extend_from_slice(anc);
        bits.push(*t0);
        let expected = *t0 ^ f.eval_unchecked(x);
        rep.states_checked += 1;
        match simulate_sparse(c.gates(), &BasisState::from_bits(bits)) {
            Ok(out) => {
                if out.phase != 0 {
                    rep.sign_failure_count += 1;
                }
                record(&mut rep, &layout, x, anc, *t0, expected, &out.bits);
            }
            Err(_) => rep.sign_failure_count += 1,
        }
    }
    rep
}
