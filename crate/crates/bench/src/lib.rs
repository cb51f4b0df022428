//! Shared benchmark fixtures.

use influence_core::{GateKind, GateSpec, NoiseModel, ProcessSpec};

/// CNOT on qubits (2, 1) embedded in `n` qubits.
pub fn cnot(n: usize) -> ProcessSpec {
    ProcessSpec::new(n, vec![GateSpec::new(GateKind::Cnot, &[2, 1])])
}

/// Controlled phase damping on (6, 5) followed by CZ on (14, 13); needs `n >= 14`.
pub fn two_block(n: usize) -> ProcessSpec {
    ProcessSpec::new(
        n,
        vec![
            GateSpec::new(GateKind::CtrlPhaseDamp, &[6, 5]).with_lambda(1.0),
            GateSpec::new(GateKind::Cz, &[14, 13]),
        ],
    )
}

/// Default flip noise on every even qubit.
pub fn even_noise(n: usize) -> NoiseModel {
    NoiseModel::on_qubits(&(2..=n).step_by(2).collect::<Vec<_>>())
}

/// Entangling chain on the first `m` qubits: H on 1 then CNOTs down the line.
pub fn chain(m: usize) -> ProcessSpec {
    let mut layers = vec![GateSpec::new(GateKind::H, &[1])];
    layers.extend((1..m).map(|q| GateSpec::new(GateKind::Cnot, &[q, q + 1])));
    ProcessSpec::new(m, layers)
}
