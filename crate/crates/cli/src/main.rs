use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use oracle_synth::bench::{estimate_grover, harness_mode, run_sweep, to_csv, to_json, BenchError, SweepSpec};
use oracle_synth::cnf::{parse_dimacs, random_kcnf, CnfFormula};
use oracle_synth::lowering::{elementary_cost, to_elementary, to_toffoli_level, ToffoliLowering};
use oracle_synth::qasm::{parse_qasm, to_qasm};
use oracle_synth::sim::{verify_oracle, AncillaPolicy, VerificationReport};
use oracle_synth::synth::{synthesize, Mode, SynthError, SynthOptions, Variant};

const EXIT_VERIFY: u8 = 1;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "oracle-synth", version, about = "Synthesize reversible oracles for CNF formulas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// DIMACS in, OpenQASM out.
    Synth(SynthArgs),
    /// Check a QASM circuit against a DIMACS formula.
    Verify(VerifyArgs),
    /// Run a sweep described by a JSON spec and write CSV.
    Bench(BenchArgs),
    /// Grover resource estimate for a random k-CNF instance.
    EstimateGrover(GroverArgs),
    /// Generate a random k-CNF formula as DIMACS.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Size,
    Depth,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Size => Mode::Size,
            ModeArg::Depth => Mode::Depth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LowerArg {
    Exact,
    Approx,
}

impl From<LowerArg> for ToffoliLowering {
    fn from(l: LowerArg) -> Self {
        match l {
            LowerArg::Exact => ToffoliLowering::Exact,
            LowerArg::Approx => ToffoliLowering::Approx,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Default,
    SmallAncilla,
    Auto,
}

#[derive(Args)]
struct SynthArgs {
    /// DIMACS file, or "-" for standard input.
    #[arg(short, long, default_value = "-")]
    input: String,
    #[arg(long)]
    ancillas: usize,
    #[arg(long, value_enum, default_value = "size")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "exact")]
    lower: LowerArg,
    /// QASM output; standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// JSON cost report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Verify the Toffoli-level circuit before writing anything.
    #[arg(long)]
    verify: bool,
    #[arg(long, value_enum, default_value = "default")]
    variant: VariantArg,
    /// Largest ℓ for which `--variant auto` picks the small-ancilla merge.
    #[arg(long, default_value_t = 8)]
    auto_threshold: usize,
    /// Seed for sampled verification.
    #[arg(long, env = "ORACLE_SYNTH_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(short, long)]
    input: String,
    /// QASM circuit.
    #[arg(short, long)]
    circuit: PathBuf,
    /// Repeat every check with this many random ancilla fillings.
    #[arg(long)]
    dirty_trials: Option<usize>,
    /// Where to write the JSON report; standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, env = "ORACLE_SYNTH_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON sweep spec.
    #[arg(long)]
    spec: PathBuf,
    /// CSV output; a JSON mirror is written next to it.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GroverArgs {
    #[arg(short)]
    k: usize,
    #[arg(short)]
    n: usize,
    #[arg(short)]
    m: usize,
    #[arg(long, default_value_t = 240)]
    ancillas: usize,
    #[arg(long, value_enum, default_value = "size")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "exact")]
    lower: LowerArg,
    #[arg(long, env = "ORACLE_SYNTH_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(short)]
    n: usize,
    #[arg(short)]
    m: usize,
    #[arg(short)]
    k: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, env = "ORACLE_SYNTH_SEED", default_value_t = 0)]
    seed: u64,
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading standard input")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing standard output"),
    }
}

fn read_formula(path: &str) -> Result<CnfFormula> {
    parse_dimacs(&read_input(path)?).with_context(|| format!("parsing DIMACS from {path}"))
}

fn synth(a: SynthArgs) -> Result<ExitCode> {
    let f = read_formula(&a.input)?;
    let variant = match a.variant {
        VariantArg::Default => Variant::Default,
        VariantArg::SmallAncilla => Variant::SmallAncilla,
        VariantArg::Auto => Variant::Auto { threshold: a.auto_threshold },
    };
    let opts = SynthOptions { variant, ..SynthOptions::new(a.ancillas, a.mode.into()) };
    let syn = synthesize(&f, &opts)?;
    if let Some(note) = &syn.fallback {
        warn!("{note}");
    }
    let lowering = ToffoliLowering::from(a.lower);
    if a.verify {
        let toffoli = to_toffoli_level(&syn.circuit)?;
        let report = verify_oracle(&toffoli, &f, harness_mode(f.num_vars(), a.seed), AncillaPolicy::CleanZero)?;
        if !report.passed() {
            eprintln!("{}", serde_json::to_string_pretty(&report)?);
            return Ok(ExitCode::from(EXIT_VERIFY));
        }
        info!("verified {} states", report.states_checked);
    }
    let cost = elementary_cost(&syn.circuit, lowering)?;
    let qasm = to_qasm(&to_elementary(&syn.circuit, lowering)?)?;
    write_output(a.out.as_deref(), &qasm)?;
    if let Some(path) = &a.report {
        let doc = serde_json::json!({
            "mode": syn.mode,
            "lowering": lowering,
            "ancillas": a.ancillas,
            "small_ancilla": syn.small_ancilla,
            "fallback": syn.fallback,
            "cost": cost,
        });
        fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    info!("size {} depth {}", cost.size, cost.depth);
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let f = read_formula(&a.input)?;
    let text = fs::read_to_string(&a.circuit).with_context(|| format!("reading {}", a.circuit.display()))?;
    let c = parse_qasm(&text).with_context(|| format!("parsing {}", a.circuit.display()))?;
    let policy = match a.dirty_trials {
        Some(trials) => AncillaPolicy::RandomDirty { trials, seed: a.seed },
        None => AncillaPolicy::CleanZero,
    };
    let report: VerificationReport = verify_oracle(&c, &f, harness_mode(f.num_vars(), a.seed), policy)?;
    write_output(a.report.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY) })
}

fn bench(a: BenchArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let spec: SweepSpec = serde_json::from_str(&text).context("parsing sweep spec")?;
    if spec.n.is_empty() || spec.ell.is_empty() || spec.ensemble == 0 {
        bail!("sweep spec needs at least one n, one ℓ and a non-empty ensemble");
    }
    if spec.m.as_ref().is_some_and(|m| m.len() != spec.n.len()) {
        bail!("sweep spec lists {} clause counts for {} values of n", spec.m.as_ref().unwrap().len(), spec.n.len());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.threads.unwrap_or(0)).build()?;
    let rows = pool.install(|| run_sweep(&spec))?;
    let csv = to_csv(&spec, &rows);
    write_output(a.out.as_deref(), &csv)?;
    if let Some(out) = &a.out {
        let json = out.with_extension("json");
        fs::write(&json, to_json(&spec, &rows) + "\n").with_context(|| format!("writing {}", json.display()))?;
    }
    Ok(if rows.iter().all(|r| r.verified) { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY) })
}

fn estimate(a: GroverArgs) -> Result<ExitCode> {
    let f = random_kcnf(a.n, a.m, a.k, a.seed)?;
    let est = estimate_grover(&f, a.ancillas, a.mode.into(), a.lower.into())?;
    println!("{}", serde_json::to_string_pretty(&est)?);
    Ok(ExitCode::SUCCESS)
}

fn gen(a: GenArgs) -> Result<ExitCode> {
    let f = random_kcnf(a.n, a.m, a.k, a.seed)?;
    write_output(a.out.as_deref(), &f.to_dimacs())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a),
        Command::EstimateGrover(a) => estimate(a),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = e.chain().any(|c| {
                matches!(c.downcast_ref::<SynthError>(), Some(SynthError::TooFewAncillas { .. }))
                    || matches!(
                        c.downcast_ref::<BenchError>(),
                        Some(BenchError::Synth(SynthError::TooFewAncillas { .. }))
                    )
            });
            ExitCode::from(if infeasible { EXIT_INFEASIBLE } else { 2 })
        }
    }
}
