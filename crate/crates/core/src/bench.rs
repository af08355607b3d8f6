//! Ensemble sweeps over random formulas and Grover resource estimates.

use std::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuit::{CostAccumulator, Gate, Layout, Level, OneQubit, Qubit};
use crate::cnf::{phase_transition_m, random_kcnf, CnfError, CnfFormula};
use crate::lowering::{lower_mct, stream_elementary, to_toffoli_level, LowerError, ToffoliLowering};
use crate::sim::{verify_oracle, AncillaPolicy, SimError, VerifyMode};
use crate::synth::{synthesize, Mode, SynthError, SynthOptions, Variant};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("Grover estimates need n ≥ 1")]
    NoVariables,
    #[error("round count for n = {0} does not fit in 64 bits")]
    TooManyRounds(usize),
}

/// Largest `n` verified exhaustively; above it 4096 sampled inputs are used.
pub const EXHAUSTIVE_LIMIT: usize = 12;
pub const SAMPLED_INPUTS: usize = 4096;

fn default_ensemble() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub k: usize,
    pub n: Vec<usize>,
    /// Clause counts per entry of `n`. Defaults to the phase transition for
    /// k ≥ 3 and `3n` otherwise.
    #[serde(default)]
    pub m: Option<Vec<usize>>,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    /// Ancilla ladder, strictly increasing. Values above `2m − 1` are
    /// skipped for that `n`.
    pub ell: Vec<usize>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub lowering: ToffoliLowering,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub seed: u64,
}

impl SweepSpec {
    pub fn clauses_for(&self, idx: usize) -> Result<usize, CnfError> {
        let n = self.n[idx];
        if let Some(ms) = &self.m {
            return Ok(ms[idx]);
        }
        if self.k >= 3 {
            phase_transition_m(n, self.k, None)
        } else {
            Ok(3 * n)
        }
    }

    /// SHA-256 of the canonical JSON encoding, hex, first 16 digits.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub ell: usize,
    pub mode: Mode,
    pub mean_size: f64,
    pub mean_depth: f64,
    pub std_size: f64,
    pub std_depth: f64,
    pub min_size: u64,
    pub max_size: u64,
    pub min_depth: u64,
    pub max_depth: u64,
    pub verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Seed of ensemble member `i` for a given `(k, n)`; identical across the
/// ℓ ladder so every row sees the same formulas.
pub fn member_seed(seed: u64, k: usize, n: usize, i: usize) -> u64 {
    use rand::RngCore;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64) << 56) ^ ((n as u64) << 24));
    rng.set_word_pos(2 * i as u128);
    rng.next_u64()
}

/// Verification mode used by the harness for a formula on `n` variables.
pub fn harness_mode(n: usize, seed: u64) -> VerifyMode {
    if n <= EXHAUSTIVE_LIMIT {
        VerifyMode::Exhaustive
    } else {
        VerifyMode::Sampled { count: SAMPLED_INPUTS, seed }
    }
}

struct Sample {
    size: u64,
    depth: u64,
    verified: bool,
    note: Option<String>,
}

fn run_member(f: &CnfFormula, opts: &SynthOptions, lowering: ToffoliLowering, seed: u64) -> Result<Sample, BenchError> {
    let syn = synthesize(f, opts)?;
    let toffoli = to_toffoli_level(&syn.circuit)?;
    let report = verify_oracle(&toffoli, f, harness_mode(f.num_vars(), seed), AncillaPolicy::CleanZero)?;
    let cost = crate::lowering::elementary_cost(&syn.circuit, lowering)?;
    let note = if report.passed() {
        syn.fallback
    } else {
        Some(format!(
            "verification failed: {} wrong outputs, {} ancilla errors",
            report.failure_count, report.ancilla_restoration_failure_count
        ))
    };
    Ok(Sample { size: cost.size, depth: cost.depth, verified: report.passed(), note })
}

fn stats(xs: &[u64]) -> (f64, f64, u64, u64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt(), *xs.iter().min().unwrap(), *xs.iter().max().unwrap())
}

/// Runs the sweep. Every circuit is verified at Toffoli level before its
/// elementary cost is counted; a failing member marks its row unverified.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, BenchError> {
    let mut rows = Vec::new();
    for (idx, &n) in spec.n.iter().enumerate() {
        let m = spec.clauses_for(idx)?;
        let formulas: Vec<CnfFormula> = (0..spec.ensemble)
            .into_par_iter()
            .map(|i| random_kcnf(n, m, spec.k, member_seed(spec.seed, spec.k, n, i)))
            .collect::<Result<_, _>>()?;
        for &ell in spec.ell.iter().filter(|&&l| l < 2 * m) {
            let opts = SynthOptions { variant: spec.variant, ..SynthOptions::new(ell, spec.mode) };
            let samples: Vec<Sample> = formulas
                .par_iter()
                .enumerate()
                .map(|(i, f)| run_member(f, &opts, spec.lowering, member_seed(spec.seed, spec.k, n, i) ^ 0x5eed))
                .collect::<Result<_, _>>()?;
            let sizes: Vec<u64> = samples.iter().map(|s| s.size).collect();
            let depths: Vec<u64> = samples.iter().map(|s| s.depth).collect();
            let (mean_size, std_size, min_size, max_size) = stats(&sizes);
            let (mean_depth, std_depth, min_depth, max_depth) = stats(&depths);
            rows.push(SweepRow {
                k: spec.k,
                n,
                m,
                ell,
                mode: spec.mode,
                mean_size,
                mean_depth,
                std_size,
                std_depth,
                min_size,
                max_size,
                min_depth,
                max_depth,
                verified: samples.iter().all(|s| s.verified),
                note: samples.iter().find_map(|s| s.note.clone()),
            });
        }
    }
    Ok(rows)
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Size => "size",
        Mode::Depth => "depth",
    }
}

pub fn to_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut s = format!("# seed={} config_hash={}\n", spec.seed, spec.config_hash());
    s.push_str("k,n,m,ell,mode,mean_size,mean_depth,std_size,std_depth,verified\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.1},{:.1},{:.1},{:.1},{}",
            r.k,
            r.n,
            r.m,
            r.ell,
            mode_name(r.mode),
            r.mean_size,
            r.mean_depth,
            r.std_size,
            r.std_depth,
            r.verified
        );
    }
    s
}

#[derive(Serialize)]
struct SweepJson<'a> {
    seed: u64,
    config_hash: String,
    spec: &'a SweepSpec,
    rows: &'a [SweepRow],
}

pub fn to_json(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let doc = SweepJson { seed: spec.seed, config_hash: spec.config_hash(), spec, rows };
    serde_json::to_string_pretty(&doc).expect("rows serialize")
}

/// `⌊(π/4)·2^{n/2}⌋` Grover iterations for a single marked item.
pub fn grover_rounds(n: usize) -> Result<u64, BenchError> {
    if n == 0 {
        return Err(BenchError::NoVariables);
    }
    let r = (std::f64::consts::FRAC_PI_4 * 2f64.powf(n as f64 / 2.0)).floor();
    if r >= u64::MAX as f64 {
        return Err(BenchError::TooManyRounds(n));
    }
    Ok(r as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroverEstimate {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub ell: usize,
    pub mode: Mode,
    pub lowering: ToffoliLowering,
    pub oracle_size: u64,
    pub oracle_depth: u64,
    pub one_round_size: u64,
    pub one_round_depth: u64,
    pub rounds: u64,
    pub full_round_size: u128,
    pub full_round_depth: u128,
}

/// Inversion about the mean on the input register:
/// H⊗n X⊗n (H x_n · MCT(x_1..x_{n−1} → x_n) · H x_n) X⊗n H⊗n.
pub fn diffusion_gates(layout: &Layout) -> Vec<Gate> {
    let n = layout.n_inputs;
    let inputs: Vec<Qubit> = layout.inputs().collect();
    let last = inputs[n - 1];
    let borrow: Vec<Qubit> = layout.ancillas().chain(std::iter::once(layout.target())).collect();
    let mut g = Vec::with_capacity(4 * n + 3);
    g.extend(inputs.iter().map(|&q| Gate::single(OneQubit::H, q)));
    g.extend(inputs.iter().map(|&q| Gate::x(q)));
    g.push(Gate::single(OneQubit::H, last));
    g.push(Gate::mct(crate::lowering::positive(&inputs[..n - 1]), last, borrow));
    g.push(Gate::single(OneQubit::H, last));
    g.extend(inputs.iter().map(|&q| Gate::x(q)));
    g.extend(inputs.iter().map(|&q| Gate::single(OneQubit::H, q)));
    g
}

/// Resource estimate for Grover search over `f` with `ell` ancillas: one
/// round is the oracle plus diffusion, both lowered with `lowering`.
pub fn estimate_grover(
    f: &CnfFormula,
    ell: usize,
    mode: Mode,
    lowering: ToffoliLowering,
) -> Result<GroverEstimate, BenchError> {
    let n = f.num_vars();
    let rounds = grover_rounds(n)?;
    let syn = synthesize(f, &SynthOptions::new(ell, mode))?;
    let layout = *syn.circuit.layout();
    let oracle = crate::lowering::elementary_cost(&syn.circuit, lowering)?;

    let mut acc = CostAccumulator::new(layout, Level::Elementary);
    let toffoli = to_toffoli_level(&syn.circuit)?;
    stream_elementary(toffoli.gates(), lowering, &mut |g| acc.add(&g))?;
    let mut diffusion = Vec::new();
    for g in diffusion_gates(&layout) {
        lower_mct(&g, &mut |x| diffusion.push(x))?;
    }
    stream_elementary(&diffusion, lowering, &mut |g| acc.add(&g))?;
    let one = acc.finish();
    Ok(GroverEstimate {
        k: f.width(),
        n,
        m: f.num_clauses(),
        ell,
        mode,
        lowering,
        oracle_size: oracle.size,
        oracle_depth: oracle.depth,
        one_round_size: one.size,
        one_round_depth: one.depth,
        rounds,
        full_round_size: rounds as u128 * one.size as u128,
        full_round_depth: rounds as u128 * one.depth as u128,
    })
}
