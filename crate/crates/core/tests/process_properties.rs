use influence_core::channels::{gates, random_channel, GateKind, GateSpec, ProcessSpec};
use influence_core::linalg::frobenius;
use influence_core::process::{
    chi_to_choi, choi_to_chi, choi_to_kraus, influence_exact, process_distance, process_fidelity, reduce_subprocess,
    tensor_with_identity, KrausSet,
};
use influence_core::QubitSubset;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn representations_round_trip(seed in any::<u64>(), n in 1usize..=2, rank in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_channel(n, rank, &mut rng);
        let choi = k.to_choi();
        let chi = choi_to_chi(&choi);
        prop_assert!(frobenius(&(chi_to_choi(&chi).matrix() - choi.matrix())) < 1e-10);
        let back = choi_to_kraus(&choi).to_chi();
        prop_assert!(process_distance(&back, &chi).unwrap() < 1e-9);
        let trace: f64 = chi.diagonal().iter().sum();
        prop_assert!((trace - 1.0).abs() < 1e-10);
    }

    #[test]
    fn influence_is_monotone_and_subadditive(seed in any::<u64>(), a in 1u64..8, b in 1u64..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chi = random_channel(3, 2, &mut rng).to_chi();
        let s = QubitSubset::from_mask(3, a).unwrap();
        let t = QubitSubset::from_mask(3, b).unwrap();
        let (is, it) = (influence_exact(&chi, &s).unwrap(), influence_exact(&chi, &t).unwrap());
        let iu = influence_exact(&chi, &s.union(&t)).unwrap();
        prop_assert!(iu + 1e-12 >= is.max(it));
        prop_assert!(iu <= is + it + 1e-12);
    }

    #[test]
    fn tensoring_with_identity_preserves_distance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_channel(1, 2, &mut rng).to_chi();
        let b = random_channel(1, 3, &mut rng).to_chi();
        let t = QubitSubset::from_qubits(3, &[2]).unwrap();
        let big_a = tensor_with_identity(&a, &t).unwrap();
        let big_b = tensor_with_identity(&b, &t).unwrap();
        let small = process_distance(&a, &b).unwrap();
        let big = process_distance(&big_a, &big_b).unwrap();
        prop_assert!((small - big).abs() < 1e-10);
        let f = process_fidelity(&a, &b).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&f));
    }
}

#[test]
fn reduction_of_tensor_product_recovers_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_channel(1, 2, &mut rng);
    let b = random_channel(1, 2, &mut rng);
    let joint = a.tensor(&b).to_chi();
    let first = reduce_subprocess(&joint, &QubitSubset::from_qubits(2, &[1]).unwrap()).unwrap();
    assert!(process_distance(&first, &a.to_chi()).unwrap() < 1e-10);
    let second = reduce_subprocess(&joint, &QubitSubset::from_qubits(2, &[2]).unwrap()).unwrap();
    assert!(process_distance(&second, &b.to_chi()).unwrap() < 1e-10);
}

#[test]
fn pauli_generator_influence_is_sin_squared() {
    // exp(-i theta X) = Rx(2 theta).
    for theta in [0.1, 0.4, 1.0, 1.5] {
        let chi = KrausSet::unitary(gates::rx(2.0 * theta)).unwrap().to_chi();
        let inf = influence_exact(&chi, &QubitSubset::full(1)).unwrap();
        assert!((inf - theta.sin().powi(2)).abs() < 1e-12);
    }
}

#[test]
fn phase_damping_influence() {
    for lambda in [0.0, 0.2, 0.7, 1.0] {
        let spec = ProcessSpec::new(1, vec![GateSpec::new(GateKind::PhaseDamp, &[1]).with_lambda(lambda)]);
        let chi = spec.embed_dense(5).unwrap();
        let inf = influence_exact(&chi, &QubitSubset::full(1)).unwrap();
        assert!((inf - (1.0 - (1.0 - lambda).sqrt()) / 2.0).abs() < 1e-12, "lambda = {lambda}");
    }
}

#[test]
fn identical_processes_have_unit_fidelity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let chi = random_channel(2, 3, &mut rng).to_chi();
    assert!(process_distance(&chi, &chi).unwrap() < 1e-12);
    assert!((process_fidelity(&chi, &chi).unwrap() - 1.0).abs() < 1e-8);
}
