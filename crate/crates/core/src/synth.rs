//! Options, errors and the entry point shared by both synthesizers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Layout, Qubit};
use crate::cnf::{Clause, CnfFormula};
use crate::gand::GandError;
use crate::lowering::LowerError;
use crate::{synth_depth, synth_size};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("requires ℓ ≥ {min}, got ℓ = {got}")]
    TooFewAncillas { min: usize, got: usize },
    #[error(transparent)]
    Gand(#[from] GandError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Lower(#[from] LowerError),
}

impl SynthError {
    /// The smallest ancilla count that would have succeeded, if known.
    pub fn minimal_ancillas(&self) -> Option<usize> {
        match self {
            SynthError::TooFewAncillas { min, .. } => Some(*min),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Size,
    Depth,
}

/// Merge structure used by the size synthesizer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// GAND recursion with fan-in ⌊ℓ/2⌋+1.
    #[default]
    Default,
    /// Per-block choice between GAND and the Gray-code merge over all
    /// available ancillas, whichever is cheaper.
    SmallAncilla,
    /// `SmallAncilla` when ℓ is at most `threshold`, `Default` otherwise.
    Auto { threshold: usize },
}

impl Variant {
    pub fn small_ancilla_for(self, ancillas: usize) -> bool {
        match self {
            Variant::Default => false,
            Variant::SmallAncilla => true,
            Variant::Auto { threshold } => ancillas <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub ancillas: usize,
    pub mode: Mode,
    /// Ancillas start in |0⟩. Enables the clean outermost level; when false
    /// the whole circuit tolerates arbitrary ancilla contents.
    pub clean_ancillas: bool,
    /// Let blocks borrow input qubits they do not read.
    pub reuse_inputs: bool,
    pub variant: Variant,
}

impl SynthOptions {
    pub fn new(ancillas: usize, mode: Mode) -> Self {
        SynthOptions { ancillas, mode, clean_ancillas: true, reuse_inputs: false, variant: Variant::Default }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Synthesis {
    pub circuit: Circuit,
    pub mode: Mode,
    pub small_ancilla: bool,
    /// Set when depth mode could not partition the ancillas and the size
    /// synthesizer was used instead.
    pub fallback: Option<String>,
}

/// Synthesizes an MCT-level oracle `|x⟩|a⟩|c⟩ → |x⟩|a⟩|c ⊕ f(x)⟩`.
pub fn synthesize(f: &CnfFormula, opts: &SynthOptions) -> Result<Synthesis, SynthError> {
    match opts.mode {
        Mode::Size => {
            let small = opts.variant.small_ancilla_for(opts.ancillas);
            Ok(Synthesis {
                circuit: synth_size::synth_size(f, opts)?,
                mode: Mode::Size,
                small_ancilla: small,
                fallback: None,
            })
        }
        Mode::Depth => synth_depth::synth_depth(f, opts),
    }
}

/// Up to `need` distinct qubits from `candidates`, skipping `exclude`.
pub(crate) fn borrow_list(candidates: impl IntoIterator<Item = Qubit>, exclude: &[Qubit], need: usize) -> Vec<Qubit> {
    let mut out = Vec::with_capacity(need);
    for q in candidates {
        if out.len() >= need {
            break;
        }
        if !exclude.contains(&q) && !out.contains(&q) {
            out.push(q);
        }
    }
    out
}

/// Input qubits not read by any clause in `clauses`.
pub(crate) fn idle_inputs(layout: &Layout, clauses: &[Clause]) -> Vec<Qubit> {
    let mut used = vec![false; layout.n_inputs];
    for c in clauses {
        for v in c.vars() {
            used[v as usize - 1] = true;
        }
    }
    (0..layout.n_inputs).filter(|&i| !used[i]).map(|i| layout.input(i)).collect()
}

/// Balanced split of `len` items into `parts` consecutive ranges
/// `(start, len)`, larger parts first.
pub(crate) fn balanced(start: usize, len: usize, parts: usize) -> Vec<(usize, usize)> {
    let (q, r) = (len / parts, len % parts);
    let mut out = Vec::with_capacity(parts);
    let mut s = start;
    for i in 0..parts {
        let l = q + usize::from(i < r);
        out.push((s, l));
        s += l;
    }
    out
}
