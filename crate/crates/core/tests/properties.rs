use proptest::prelude::*;

use oracle_synth::circuit::{Circuit, Control, Gate, Layout, Level, Qubit};
use oracle_synth::cnf::{parse_dimacs, random_kcnf, CnfFormula};
use oracle_synth::lowering::{to_elementary, to_toffoli_level, ToffoliLowering};
use oracle_synth::qasm::{parse_qasm, to_qasm};
use oracle_synth::sim::{simulate, verify_oracle, AncillaPolicy, BasisState, VerifyMode};
use oracle_synth::synth::{synthesize, Mode, SynthOptions};

/// Truth table straight from the DIMACS integers.
fn dimacs_eval(clauses: &[Vec<i64>], x: &[bool]) -> bool {
    clauses.iter().all(|c| c.iter().any(|&l| x[l.unsigned_abs() as usize - 1] == (l > 0)))
}

fn dimacs_ints(f: &CnfFormula) -> Vec<Vec<i64>> {
    f.to_dimacs()
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|t| t.parse::<i64>().unwrap()).filter(|&v| v != 0).collect())
        .collect()
}

const QUBITS: u32 = 8;

fn gate() -> impl Strategy<Value = Gate> {
    (0..5u8, proptest::sample::subsequence((0..QUBITS).collect::<Vec<_>>(), 6), any::<[bool; 4]>()).prop_map(
        |(kind, mut qs, pol)| {
            let t = Qubit(qs.pop().unwrap());
            let c = |i: usize| Control { qubit: Qubit(qs[i]), positive: pol[i % 4] };
            match kind {
                0 => Gate::x(t),
                1 => Gate::cnot_pol(c(0), t),
                2 => Gate::toffoli_pol(c(0), c(1), t),
                3 => Gate::mct(vec![c(0), c(1), c(2)], t, vec![Qubit(qs[3])]),
                _ => Gate::mct((0..4).map(c).collect(), t, vec![Qubit(qs[4])]),
            }
        },
    )
}

fn circuit() -> impl Strategy<Value = Circuit> {
    proptest::collection::vec(gate(), 0..24)
        .prop_map(|gates| Circuit::from_gates(Layout::oracle(QUBITS as usize - 4, 3), Level::Mct, gates).unwrap())
}

fn state(bits: u32) -> BasisState {
    BasisState::from_bits((0..QUBITS).map(|i| (bits >> i) & 1 == 1).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_kcnf_shape(n in 3usize..30, m in 1usize..60, k in 1usize..4, seed: u64) {
        let f = random_kcnf(n, m, k.min(n), seed).unwrap();
        prop_assert_eq!(f.num_clauses(), m);
        for c in f.clauses() {
            prop_assert_eq!(c.width(), k.min(n));
            let mut vars: Vec<u32> = c.vars().collect();
            vars.sort_unstable();
            vars.dedup();
            prop_assert_eq!(vars.len(), k.min(n));
            prop_assert!(vars.iter().all(|&v| v >= 1 && v as usize <= n));
        }
        prop_assert_eq!(random_kcnf(n, m, k.min(n), seed).unwrap(), f);
    }

    #[test]
    fn evaluate_matches_truth_table(n in 1usize..9, m in 1usize..20, seed: u64) {
        let f = random_kcnf(n, m, n.min(3), seed).unwrap();
        let ints = dimacs_ints(&f);
        for x in 0u32..1 << n {
            let bits: Vec<bool> = (0..n).map(|i| (x >> i) & 1 == 1).collect();
            prop_assert_eq!(f.evaluate(&bits).unwrap(), dimacs_eval(&ints, &bits));
        }
    }

    #[test]
    fn dimacs_round_trip(n in 3usize..40, m in 1usize..80, seed: u64) {
        let f = random_kcnf(n, m, 3, seed).unwrap();
        prop_assert_eq!(parse_dimacs(&f.to_dimacs()).unwrap(), f);
    }

    #[test]
    fn inverse_undoes_circuit(c in circuit(), bits in 0u32..1 << QUBITS) {
        let id = c.compose(&c.inverse()).unwrap();
        prop_assert_eq!(simulate(&id, &state(bits)).unwrap(), state(bits));
    }

    #[test]
    fn lowering_preserves_the_permutation(c in circuit(), bits in 0u32..1 << QUBITS) {
        let want = simulate(&c, &state(bits)).unwrap();
        let tof = to_toffoli_level(&c).unwrap();
        prop_assert_eq!(&simulate(&tof, &state(bits)).unwrap(), &want);
        for mode in [ToffoliLowering::Exact, ToffoliLowering::Approx] {
            let e = to_elementary(&c, mode).unwrap();
            prop_assert_eq!(&simulate(&e, &state(bits)).unwrap(), &want);
        }
    }

    #[test]
    fn qasm_round_trip(c in circuit()) {
        let tof = to_toffoli_level(&c).unwrap();
        prop_assert_eq!(&parse_qasm(&to_qasm(&tof).unwrap()).unwrap(), &tof);
        let e = to_elementary(&c, ToffoliLowering::Approx).unwrap();
        prop_assert_eq!(&parse_qasm(&to_qasm(&e).unwrap()).unwrap(), &e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthesized_oracles_verify(n in 3usize..8, m in 1usize..30, ell in 3usize..20, seed: u64, depth: bool) {
        let f = random_kcnf(n, m, 3, seed).unwrap();
        let mode = if depth { Mode::Depth } else { Mode::Size };
        let syn = synthesize(&f, &SynthOptions::new(ell, mode)).unwrap();
        let tof = to_toffoli_level(&syn.circuit).unwrap();
        let r = verify_oracle(&tof, &f, VerifyMode::Exhaustive, AncillaPolicy::CleanZero).unwrap();
        prop_assert!(r.passed(), "{:?}", r.failures.first());
    }
}
