//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr
//! (uncaptured) and then asserts.

use std::io::Write;

use oracle_synth::bench::{estimate_grover, grover_rounds, member_seed, run_sweep, SweepRow, SweepSpec};
use oracle_synth::circuit::{Circuit, GateKind, Layout, Level, Qubit};
use oracle_synth::cnf::{phase_transition_m, random_kcnf, CnfFormula};
use oracle_synth::gand::{build_gand, gand_ancillas, FnOracle, GandError, GandMode, GandPlan};
use oracle_synth::lowering::{phase_safe_toffolis, to_elementary, to_toffoli_level, ToffoliLowering};
use oracle_synth::sim::{simulate, verify_oracle, AncillaPolicy, BasisState, VerifyMode};
use oracle_synth::synth::{synthesize, Mode, SynthOptions, Variant};
use rayon::prelude::*;

fn report(criterion: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion}: {verdict} {detail}");
}

fn clauses_for(n: usize, k: usize) -> usize {
    if k >= 3 {
        phase_transition_m(n, k, None).unwrap()
    } else {
        3 * n
    }
}

fn exhaustive(c: &Circuit, f: &CnfFormula, policy: AncillaPolicy) -> bool {
    let tof = to_toffoli_level(c).unwrap();
    verify_oracle(&tof, f, VerifyMode::Exhaustive, policy).unwrap().passed()
}

#[test]
fn criterion_1_functional_correctness() {
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for k in 2..=4 {
        for n in 4..=12 {
            let m = clauses_for(n, k);
            let mut ells = vec![3, (2.0 * (m as f64).sqrt()).ceil() as usize, m, 2 * m - 1];
            ells.sort_unstable();
            ells.dedup();
            let results: Vec<(usize, Vec<String>)> = (0..100)
                .into_par_iter()
                .map(|i| {
                    let seed = member_seed(1, k, n, i);
                    let f = random_kcnf(n, m, k, seed).unwrap();
                    let mut bad = Vec::new();
                    let mut count = 0;
                    // one ℓ per member keeps the run in minutes; the ladder is
                    // covered across the ensemble
                    let ell = ells[i % ells.len()];
                    for mode in [Mode::Size, Mode::Depth] {
                        let syn = synthesize(&f, &SynthOptions::new(ell, mode)).unwrap();
                        count += 1;
                        if !exhaustive(&syn.circuit, &f, AncillaPolicy::CleanZero) {
                            bad.push(format!("k={k} n={n} ℓ={ell} {mode:?} seed={seed}"));
                        }
                    }
                    let dirty = SynthOptions { clean_ancillas: false, ..SynthOptions::new(ell, Mode::Size) };
                    let syn = synthesize(&f, &dirty).unwrap();
                    count += 1;
                    if !exhaustive(&syn.circuit, &f, AncillaPolicy::RandomDirty { trials: 16, seed }) {
                        bad.push(format!("k={k} n={n} ℓ={ell} dirty seed={seed}"));
                    }
                    (count, bad)
                })
                .collect();
            for (c, b) in results {
                checked += c;
                failures.extend(b);
            }
        }
    }
    let ok = failures.is_empty();
    report(1, ok, &format!("{checked} circuits verified exhaustively, {} failures", failures.len()));
    assert!(ok, "{:?}", &failures[..failures.len().min(5)]);
}

type EmitFn = dyn Fn(Qubit, &[Qubit], &mut Circuit) -> Result<(), GandError> + Sync;
type Oracle = FnOracle<Box<EmitFn>>;

#[test]
fn criterion_2_gand_budgets() {
    let mut ok = true;
    for p in 3..=64usize {
        let layout = Layout::oracle(p, gand_ancillas(p));
        let oracles: Vec<Oracle> = (0..p)
            .map(|i| {
                let f: Box<EmitFn> = Box::new(move |t, _, out| {
                    out.push(oracle_synth::circuit::Gate::cnot(Qubit(i as u32), t))?;
                    Ok(())
                });
                FnOracle(f)
            })
            .collect();
        let plan = GandPlan {
            ancillas: layout.ancillas().collect(),
            target: layout.target(),
            mode: GandMode::And,
            scratch: vec![],
            workspace: vec![],
        };
        let mut c = Circuit::new(layout, Level::Mct);
        build_gand(&oracles, &plan, &mut c).unwrap();
        let tofs = c.gates().iter().filter(|g| g.kind == GateKind::Toffoli).count();
        let max_calls = (0..p)
            .map(|i| {
                c.gates().iter().filter(|g| g.kind == GateKind::Cnot && g.controls[0].qubit == Qubit(i as u32)).count()
            })
            .max()
            .unwrap();
        ok &= tofs == 8 * p - 12 && max_calls <= 4;
    }
    report(2, ok, "Toffoli count 8p−12 and ≤ 4 calls per sub-oracle for p = 3..64");
    assert!(ok);
}

fn sweep(k: usize, n: usize, ensemble: usize, ell: Vec<usize>, mode: Mode) -> Vec<SweepRow> {
    let spec = SweepSpec {
        k,
        n: vec![n],
        m: None,
        ensemble,
        ell,
        mode,
        lowering: ToffoliLowering::Exact,
        variant: Variant::Default,
        seed: 1,
    };
    let rows = run_sweep(&spec).unwrap();
    assert!(rows.iter().all(|r| r.verified), "{rows:?}");
    rows
}

#[test]
fn criterion_3_eightfold() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (n, ensemble) in [(40, 20), (80, 10)] {
        let m = clauses_for(n, 4);
        let small = (2.0 * (m as f64).sqrt()).ceil() as usize;
        let rows = sweep(4, n, ensemble, vec![small, 2 * m - 1], Mode::Size);
        let ratio = rows[0].mean_size / rows[1].mean_size;
        ok &= ratio <= 8.0;
        detail.push(format!("n={n}: ℓ={small} / ℓ={} = {ratio:.2}", 2 * m - 1));
    }
    report(3, ok, &detail.join(", "));
    assert!(ok);
}

fn within(got: f64, want: f64, factor: f64) -> bool {
    got <= want * factor && got >= want / factor
}

fn monotone(rows: &[SweepRow], key: impl Fn(&SweepRow) -> f64) -> bool {
    rows.windows(2).all(|w| key(&w[1]) <= key(&w[0]) * 1.02)
}

#[test]
fn criterion_4_anchors() {
    let size_ladder = vec![80, 160, 240, 320, 400, 560, 640, 720, 800, 1587];
    let size = sweep(4, 80, 5, size_ladder, Mode::Size);
    let depth_ladder: Vec<usize> = (1..=19).map(|i| 80 * i).chain([1587]).collect();
    let depth = sweep(4, 80, 5, depth_ladder, Mode::Depth);
    let big = sweep(4, 800, 2, vec![15887], Mode::Depth);

    let s80 = size[0].mean_size;
    let s1587 = size.last().unwrap().mean_size;
    let d80 = depth[0].mean_depth;
    let d800 = big[0].mean_depth;
    let checks = [
        within(s80, 391760.0, 4.0),
        within(s1587, 87333.0, 4.0),
        within(d80, 59228.0, 4.0),
        within(d800, 21735.0, 4.0),
        monotone(&size, |r| r.mean_size),
        monotone(&depth, |r| r.mean_depth),
    ];
    let ok = checks.iter().all(|&c| c);
    report(
        4,
        ok,
        &format!(
            "size ℓ=80 {s80:.0} (391760), ℓ=1587 {s1587:.0} (87333); depth ℓ=80 {d80:.0} (59228), n=800 {d800:.0} (21735); monotone {:?}",
            &checks[4..]
        ),
    );
    assert!(ok, "{checks:?}");
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

#[test]
fn criterion_5_scaling_exponents() {
    let n = 64;
    let ms: Vec<usize> = (5..=11).map(|e| 1usize << e).collect();
    let ensemble = 3;
    let measure = |ell: usize, mode: Mode| -> Vec<(f64, f64)> {
        ms.iter()
            .map(|&m| {
                let total: u64 = (0..ensemble)
                    .into_par_iter()
                    .map(|i| {
                        let f = random_kcnf(n, m, 3, member_seed(5, 3, m, i)).unwrap();
                        let syn = synthesize(&f, &SynthOptions::new(ell, mode)).unwrap();
                        let cost =
                            oracle_synth::lowering::elementary_cost(&syn.circuit, ToffoliLowering::Exact).unwrap();
                        match mode {
                            Mode::Size => cost.size,
                            Mode::Depth => cost.depth,
                        }
                    })
                    .sum();
                (m as f64, total as f64 / ensemble as f64)
            })
            .collect()
    };
    let size_ell = 8usize;
    let size_bound = 1.0 + 4f64.ln() / ((size_ell / 2 + 1) as f64).ln();
    let size_slope = slope(&measure(size_ell, Mode::Size));

    let depth_ell = 128usize;
    let s = oracle_synth::synth_depth::parallelism(3, depth_ell);
    let depth_bound = 1.0 + 4f64.ln() / (depth_ell as f64 / s as f64).ln();
    let depth_slope = slope(&measure(depth_ell, Mode::Depth));

    let ok = size_slope <= size_bound + 0.1 && depth_slope <= depth_bound + 0.1;
    report(
        5,
        ok,
        &format!(
            "size slope {size_slope:.3} (bound {size_bound:.3}, ℓ={size_ell}); depth slope {depth_slope:.3} (bound {depth_bound:.3}, ℓ={depth_ell})"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_6_grover_table() {
    // (k, n, m, size full, size one, depth full, depth one)
    let table: [(usize, usize, usize, f64, f64, f64, f64); 6] = [
        (3, 40, 170, 1.8e10, 21384.0, 6.2e9, 7523.0),
        (3, 80, 341, 4.3e16, 49522.0, 1.0e16, 11586.0),
        (5, 40, 844, 4.3e11, 5.2e5, 7.6e10, 92444.0),
        (5, 80, 1689, 1.0e18, 1.2e6, 1.1e17, 1.3e5),
        (7, 40, 3511, 3.4e12, 4.1e6, 6.7e11, 8.1e5),
        (7, 80, 7023, 7.3e18, 8.4e6, 9.3e17, 1.1e6),
    ];
    let mut worst = 0f64;
    for &(_, n, _, sf, so, df, dop) in &table {
        let r = grover_rounds(n).unwrap() as f64;
        for ratio in [sf / so, df / dop] {
            worst = worst.max((r / ratio - 1.0).abs());
        }
    }
    let f = random_kcnf(40, 170, 3, 1).unwrap();
    let est = estimate_grover(&f, 240, Mode::Size, ToffoliLowering::Exact).unwrap();
    let one_ok = within(est.one_round_size as f64, 21384.0, 4.0);
    let rounds_ok = est.full_round_size == est.rounds as u128 * est.one_round_size as u128;
    let ok = worst <= 0.05 && one_ok && rounds_ok;
    report(
        6,
        ok,
        &format!("worst full/one ratio deviation {:.1}%, one round size {} (21384)", worst * 100.0, est.one_round_size),
    );
    assert!(ok);
}

#[test]
fn criterion_7_lowering_soundness() {
    let mut ok = true;
    let mut approximated = 0usize;
    let mut circuits = 0usize;
    for (n, ell) in [(3, 3), (4, 4), (4, 7), (5, 6), (6, 9), (8, 11), (10, 9)] {
        let m = clauses_for(n, 3);
        for mode in [Mode::Size, Mode::Depth] {
            for i in 0..3 {
                let f = random_kcnf(n, m, 3, member_seed(7, 3, n, i)).unwrap();
                let c = synthesize(&f, &SynthOptions::new(ell, mode)).unwrap().circuit;
                let tof = to_toffoli_level(&c).unwrap();
                approximated += phase_safe_toffolis(tof.gates()).iter().filter(|&&s| s).count();
                let exact = to_elementary(&c, ToffoliLowering::Exact).unwrap();
                let approx = to_elementary(&c, ToffoliLowering::Approx).unwrap();
                circuits += 1;
                for e in [&exact, &approx] {
                    ok &= verify_oracle(e, &f, VerifyMode::Exhaustive, AncillaPolicy::CleanZero).unwrap().passed();
                }
                let total = c.layout().total();
                if total <= 12 {
                    for s in 0u64..1 << total {
                        let st = BasisState::from_bits((0..total).map(|b| (s >> b) & 1 == 1).collect());
                        let want = simulate(&tof, &st).unwrap();
                        ok &= simulate(&exact, &st).unwrap() == want;
                        ok &= simulate(&approx, &st).unwrap() == want;
                    }
                }
            }
        }
    }
    ok &= approximated > 0;
    report(7, ok, &format!("{circuits} oracles, {approximated} Toffolis in approximate form"));
    assert!(ok);
}

#[test]
fn criterion_8_mutation_sensitivity() {
    let n = 8;
    let f = random_kcnf(n, clauses_for(n, 3), 3, 11).unwrap();
    let opts = SynthOptions { clean_ancillas: false, ..SynthOptions::new(6, Mode::Size) };
    let tof = to_toffoli_level(&synthesize(&f, &opts).unwrap().circuit).unwrap();
    let dirty = AncillaPolicy::RandomDirty { trials: 4, seed: 3 };
    assert!(verify_oracle(&tof, &f, VerifyMode::Exhaustive, dirty).unwrap().passed());
    let sites: Vec<usize> =
        tof.gates().iter().enumerate().filter(|(_, g)| g.kind == GateKind::Toffoli).map(|(i, _)| i).collect();
    let caught = sites
        .par_iter()
        .filter(|&&i| {
            let mutant = tof.without_gate(i);
            !verify_oracle(&mutant, &f, VerifyMode::Exhaustive, AncillaPolicy::CleanZero).unwrap().passed()
                || !verify_oracle(&mutant, &f, VerifyMode::Exhaustive, dirty).unwrap().passed()
        })
        .count();
    let rate = caught as f64 / sites.len() as f64;
    let ok = rate >= 0.95;
    report(8, ok, &format!("{caught}/{} single-Toffoli deletions detected ({:.1}%)", sites.len(), rate * 100.0));
    assert!(ok);
}
