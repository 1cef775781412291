//! Invariants checked on generated inputs.

mod common;

use common::criteria::{cut_sweep, merge_sweep, measure_sweep, send_sweep};
use common::*;
use proptest::prelude::*;
use qnetsup::engine::enumerate_outcomes;
use qnetsup::entmetrics::{negativity as lib_negativity, Bipartition};
use qnetsup::graphstate::Graph;
use qnetsup::network::{
    apply_branch_programs, collapse_to_single_control, distribute_request, prepare_weight_state, request_label,
    BranchProgram, GateSpec, NetworkState, Role, Step,
};
use qnetsup::random::haar_unitary;
use qnetsup::{DensityState, PureState, Register, Sample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn apply(u: &qnetsup::linalg::CMatrix, v: &[C]) -> Vec<C> {
    (0..v.len()).map(|i| (0..v.len()).map(|j| u[(i, j)] * v[j]).sum()).collect()
}

type C = num_complex::Complex64;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn controlled_tasks_preserve_control_weights(seed in any::<u64>()) {
        for s in [send_sweep(2, seed).unwrap(), cut_sweep(2, seed).unwrap(), merge_sweep(2, seed).unwrap(), measure_sweep(2, seed).unwrap()] {
            prop_assert!(s.weight_dev <= 1e-9 && s.prob_dev <= 1e-9, "{:?}", s);
        }
    }

    #[test]
    fn negativity_is_symmetric_and_local_unitary_invariant(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let mut r = rng(seed);
        let v = random_state(da * db, &mut r);
        let regs = vec![Register::new("a", da), Register::new("b", db)];
        let psi = PureState::from_amplitudes(regs.clone(), v.clone()).unwrap();
        let rho = DensityState::from_pure(&psi);
        let ab = Bipartition::new(&["a"], &["b"]).unwrap();
        let n = lib_negativity(&rho, &ab).unwrap();
        let m = lib_negativity(&rho, &ab.swapped()).unwrap();
        prop_assert!((n - m).abs() < 1e-10);
        let (ua, ub) = (haar_unitary(da, &mut r), haar_unitary(db, &mut r));
        let mut moved = psi.clone();
        moved.apply_unitary(&["a"], &ua).unwrap();
        moved.apply_unitary(&["b"], &ub).unwrap();
        let k = lib_negativity(&DensityState::from_pure(&moved), &ab).unwrap();
        prop_assert!((n - k).abs() < 1e-10);
        prop_assert!((n - negativity(&outer(&v), &[da, db], &[0])).abs() < 1e-10);
    }

    #[test]
    fn graph_json_round_trip(n in 1usize..7, bits in any::<u32>()) {
        let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let mut g = Graph::with_qubits(&labels).unwrap();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if bits >> (k % 32) & 1 == 1 {
                    g.add_edge(&labels[i], &labels[j]).unwrap();
                }
                k += 1;
            }
        }
        let back = Graph::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(back, g);
    }

    /// Branch programs with unitaries `U_i` on a resource yield `Σ_i α_i |i..i⟩ U_i|ψ⟩`.
    #[test]
    fn branch_programs_factorize(seed in any::<u64>(), m in 2usize..4) {
        let mut r = rng(seed);
        let alphas = random_state(m, &mut r);
        let psi = random_state(2, &mut r);
        let us: Vec<_> = (0..m).map(|_| haar_unitary(2, &mut r)).collect();
        let ids = ["a", "b"];
        let mut net = NetworkState::fully_connected(&ids).unwrap();
        net.attach(&PureState::single(Register::qubit("b.q"), psi.clone()).unwrap(), &[("b", Role::Resource)]).unwrap();
        net.attach_request_resource(m, "a").unwrap();
        let mut p = Sample::new(seed);
        let net = distribute_request(net, "a", &prepare_weight_state(&alphas).unwrap(), &mut p).unwrap();
        let programs: Vec<BranchProgram> = us
            .iter()
            .enumerate()
            .map(|(i, u)| BranchProgram { branch: i, steps: vec![Step::unitary("b", &["b.q"], GateSpec::from_matrix(u))] })
            .collect();
        let net = apply_branch_programs(net, &programs, &mut p).unwrap();
        let got = amps_in(&net.global, &[&request_label("a"), &request_label("b"), "b.q"]);
        let mut want = vec![C::new(0.0, 0.0); m * m * 2];
        for (i, (a, u)) in alphas.iter().zip(&us).enumerate() {
            for (x, y) in apply(u, &psi).into_iter().enumerate() {
                want[(i * m + i) * 2 + x] = a * y;
            }
        }
        prop_assert!((overlap_sqr(&got, &want) - 1.0).abs() < 1e-9);
    }

    /// Distribution followed by collapse returns the weight state whatever the outcomes.
    #[test]
    fn request_round_trip(seed in any::<u64>(), m in 2usize..4, n in 2usize..4) {
        let alphas = random_state(m, &mut rng(seed));
        let ids: Vec<String> = (0..n).map(|k| format!("d{k}")).collect();
        let weight = prepare_weight_state(&alphas).unwrap();
        let mut net = NetworkState::fully_connected(&ids).unwrap();
        net.attach_request_resource(m, &ids[0]).unwrap();
        let mut p = Sample::new(seed);
        let net = distribute_request(net, &ids[0], &weight, &mut p).unwrap();
        let net = collapse_to_single_control(net, &ids[0], &mut p).unwrap();
        let got = amps_in(&net.global, &[&request_label(&ids[0])]);
        prop_assert!((overlap_sqr(&got, &alphas) - 1.0).abs() < 1e-9);
    }

    /// The outcome tree of a collapse sums to one and every leaf carries the weight state.
    #[test]
    fn collapse_is_outcome_independent(seed in any::<u64>(), m in 2usize..4) {
        let alphas = random_state(m, &mut rng(seed));
        let ids = ["d0", "d1", "d2"];
        let weight = prepare_weight_state(&alphas).unwrap();
        let mut net = NetworkState::fully_connected(&ids).unwrap();
        net.attach_request_resource(m, "d0").unwrap();
        let net = distribute_request(net, "d0", &weight, &mut Sample::new(seed)).unwrap();
        let leaves = enumerate_outcomes(|p| collapse_to_single_control(net.clone(), "d0", p)).unwrap();
        prop_assert_eq!(leaves.len(), m * m);
        let total: f64 = leaves.iter().map(|l| l.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for l in leaves {
            let got = amps_in(&l.value.global, &[&request_label("d0")]);
            prop_assert!((overlap_sqr(&got, &alphas) - 1.0).abs() < 1e-9);
        }
    }
}
