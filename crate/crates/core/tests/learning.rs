use influence_core::channels::{GateKind, GateSpec, JuntaView, NoiseModel, ProcessSpec};
use influence_core::inference::{junta_distance_bound, Verdict, DEFAULT_DELTA};
use influence_core::inference::junta_test_process;
use influence_core::process::{influence_exact, process_distance};
use influence_core::sampler::{GateSet, SamplerConfig};
use influence_core::tomography::{
    exact_tomography_data, generate_tomography_data, junta_learner, reconstruct_cptp, TomographyConfig,
};
use influence_core::QubitSubset;

fn spec(n: usize, gates: Vec<GateSpec>) -> JuntaView {
    ProcessSpec::new(n, gates).junta_view().unwrap()
}

#[test]
fn cnot_learner_error_budget() {
    let view = spec(4, vec![GateSpec::new(GateKind::Cnot, &[2, 1])]);
    let sampling = SamplerConfig::new(GateSet::Two, 260_000, 11).with_noise(NoiseModel::on_qubits(&[2, 4]));
    let out = junta_learner(&view, &sampling, DEFAULT_DELTA, &TomographyConfig::new(2000, 12)).unwrap();
    assert_eq!(out.t.qubits(), vec![1, 2]);
    let total = out.total_bound.unwrap();
    assert!(total >= out.epsilon.value && total >= out.epsilon_r.unwrap());
    assert!((0.05..0.2).contains(&total), "total bound {total}");
}

#[test]
fn three_gate_mode_tightens_the_cus_bound() {
    let view = spec(4, vec![GateSpec::new(GateKind::Cus, &[2, 1])]);
    let noise = NoiseModel::on_qubits(&[2, 4]);
    let tomo = TomographyConfig::new(1000, 3);
    let two = junta_learner(&view, &SamplerConfig::new(GateSet::Two, 390_000, 5).with_noise(noise.clone()), DEFAULT_DELTA, &tomo).unwrap();
    let three = junta_learner(&view, &SamplerConfig::new(GateSet::Three, 390_000, 5).with_noise(noise), DEFAULT_DELTA, &tomo).unwrap();
    assert_eq!(two.t.qubits(), vec![1, 2]);
    assert_eq!(three.t.qubits(), vec![1, 2]);
    assert!(three.epsilon.value < two.epsilon.value, "{} vs {}", three.epsilon.value, two.epsilon.value);
}

#[test]
fn phase_damping_learned_on_one_qubit() {
    let lambda = 0.6;
    let view = spec(4, vec![GateSpec::new(GateKind::PhaseDamp, &[1]).with_lambda(lambda)]);
    let out = junta_learner(&view, &SamplerConfig::new(GateSet::Two, 100_000, 2), DEFAULT_DELTA, &TomographyConfig::new(5000, 2)).unwrap();
    assert_eq!(out.t.qubits(), vec![1]);
    assert!(out.epsilon_r.unwrap() < 0.05);
    let chi = ProcessSpec::new(1, vec![GateSpec::new(GateKind::PhaseDamp, &[1]).with_lambda(lambda)]).embed_dense(5).unwrap();
    let inf = influence_exact(&chi, &QubitSubset::full(1)).unwrap();
    assert!((inf - (1.0 - (1.0 - lambda).sqrt()) / 2.0).abs() < 1e-12);
    let learned = out.reconstruction.unwrap().chi();
    let learned_inf = influence_exact(&learned, &QubitSubset::full(1)).unwrap();
    assert!((learned_inf - inf).abs() < 0.02);
}

#[test]
fn identity_learner_returns_global_identity() {
    let out = junta_learner(&JuntaView::identity(4), &SamplerConfig::new(GateSet::Two, 20_000, 1), DEFAULT_DELTA, &TomographyConfig::new(100, 1)).unwrap();
    assert!(out.t.is_empty());
    assert!(out.reconstruction.is_none());
    assert_eq!(out.epsilon.value, 0.0);
}

#[test]
fn reconstruction_error_shrinks_with_shots() {
    let view = spec(2, vec![GateSpec::new(GateKind::CtrlPhaseDamp, &[1, 2]).with_lambda(0.5).with_phi(0.3)]);
    let t = QubitSubset::full(2);
    let truth = view.subprocess_chi(&t).unwrap();
    let err = |shots: u64| {
        let data = generate_tomography_data(&view, &t, &TomographyConfig::new(shots, 31)).unwrap();
        process_distance(&reconstruct_cptp(&data).unwrap().chi(), &truth).unwrap()
    };
    let (coarse, fine) = (err(200), err(20_000));
    assert!(fine < coarse, "{fine} !< {coarse}");
    let exact = reconstruct_cptp(&exact_tomography_data(&view, &t, 0.0, 2).unwrap()).unwrap();
    assert!(process_distance(&exact.chi(), &truth).unwrap() < 1e-8);
}

#[test]
fn tester_on_planted_three_junta() {
    let view = spec(
        4,
        vec![GateSpec::new(GateKind::Cnot, &[2, 1]), GateSpec::new(GateKind::Rx, &[3]).with_theta(1.0)],
    );
    let config = SamplerConfig::new(GateSet::Two, 50_000, 8);
    let (_, no) = junta_test_process(&view, &config, 2, DEFAULT_DELTA).unwrap();
    assert_eq!((no.verdict, no.t_size), (Verdict::No, 3));
    let (_, yes) = junta_test_process(&view, &config, 3, DEFAULT_DELTA).unwrap();
    assert_eq!(yes.verdict, Verdict::Yes);
    assert_eq!(yes.epsilon.unwrap().value, junta_distance_bound(yes.iu_complement));
}
