//! Gate and noise-channel constructors, junta embedding of layered process
//! specifications, and the SPAM flip-noise configuration.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, embed_operator, from_rows, identity, psd_sqrt, CMatrix, C64, ONE, ZERO};
use crate::pauli::single_qubit_pauli;
use crate::process::{
    check_dense_cap, choi_to_kraus, chi_to_choi, reduce_subprocess, tensor_with_identity, ChiMatrix,
    KrausSet,
};
use crate::subset::{QubitSubset, MAX_QUBITS};

/// Standard gate matrices. Two-qubit gates take the control as the first
/// (most significant) qubit.
pub mod gates {
    use super::*;

    pub fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        from_rows(&[&[c(s, 0.0), c(s, 0.0)], &[c(s, 0.0), c(-s, 0.0)]])
    }

    pub fn rx(theta: f64) -> CMatrix {
        let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        from_rows(&[&[c(co, 0.0), c(0.0, -si)], &[c(0.0, -si), c(co, 0.0)]])
    }

    pub fn ry(theta: f64) -> CMatrix {
        let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        from_rows(&[&[c(co, 0.0), c(-si, 0.0)], &[c(si, 0.0), c(co, 0.0)]])
    }

    pub fn rz(theta: f64) -> CMatrix {
        from_rows(&[
            &[C64::from_polar(1.0, -theta / 2.0), ZERO],
            &[ZERO, C64::from_polar(1.0, theta / 2.0)],
        ])
    }

    /// `(X + Y + Z) / sqrt(3)`.
    pub fn us() -> CMatrix {
        let s = 1.0 / 3f64.sqrt();
        from_rows(&[&[c(s, 0.0), c(s, -s)], &[c(s, s), c(-s, 0.0)]])
    }

    /// `|0><0| (x) I + |1><1| (x) u`.
    pub fn controlled(u: &CMatrix) -> CMatrix {
        let mut m = identity(4);
        for r in 0..2 {
            for col in 0..2 {
                m[(2 + r, 2 + col)] = u[(r, col)];
            }
        }
        m
    }

    pub fn cnot() -> CMatrix {
        controlled(&single_qubit_pauli(1))
    }

    pub fn cz() -> CMatrix {
        controlled(&single_qubit_pauli(3))
    }

    pub fn phase_damping_kraus(lambda: f64, phi: f64) -> Vec<CMatrix> {
        vec![
            from_rows(&[&[ONE, ZERO], &[ZERO, C64::from_polar((1.0 - lambda).sqrt(), phi)]]),
            from_rows(&[&[ZERO, ZERO], &[ZERO, c(lambda.sqrt(), 0.0)]]),
        ]
    }

    pub fn controlled_phase_damping_kraus(lambda: f64, phi: f64) -> Vec<CMatrix> {
        let mut k1 = CMatrix::zeros(4, 4);
        k1[(0, 0)] = ONE;
        k1[(1, 1)] = ONE;
        let mut k2 = CMatrix::zeros(4, 4);
        k2[(2, 2)] = ONE;
        k2[(3, 3)] = C64::from_polar((1.0 - lambda).sqrt(), phi);
        let mut k3 = CMatrix::zeros(4, 4);
        k3[(3, 3)] = c(lambda.sqrt(), 0.0);
        vec![k1, k2, k3]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    Rx,
    Ry,
    Rz,
    Us,
    Cnot,
    Cz,
    Cus,
    PhaseDamp,
    CtrlPhaseDamp,
    Identity,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz | GateKind::Cus | GateKind::CtrlPhaseDamp => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateParams {
    /// Rotation angle in radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Damping rate in [0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Relative phase of damping channels; defaults to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

/// One gate or channel placed on explicit qubits (1-based, control first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default)]
    pub params: GateParams,
}

impl GateSpec {
    pub fn new(kind: GateKind, qubits: &[usize]) -> Self {
        Self { kind, qubits: qubits.to_vec(), params: GateParams::default() }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.params.theta = Some(theta);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.params.lambda = Some(lambda);
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.params.phi = Some(phi);
        self
    }

    fn theta(&self) -> Result<f64> {
        let theta = self
            .params
            .theta
            .ok_or_else(|| Error::InvalidGate(format!("{:?} needs an angle theta", self.kind)))?;
        if !theta.is_finite() {
            return Err(Error::InvalidGate("theta must be finite".into()));
        }
        Ok(theta)
    }

    fn damping(&self) -> Result<(f64, f64)> {
        let lambda = self
            .params
            .lambda
            .ok_or_else(|| Error::InvalidGate(format!("{:?} needs a damping rate lambda", self.kind)))?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidGate(format!("damping rate {lambda} is outside [0, 1]")));
        }
        let phi = self.params.phi.unwrap_or(0.0);
        if !phi.is_finite() {
            return Err(Error::InvalidGate("phi must be finite".into()));
        }
        Ok((lambda, phi))
    }

    fn check_placement(&self, n: Option<usize>) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{:?} acts on {} qubit(s), got {}",
                self.kind,
                self.kind.arity(),
                self.qubits.len()
            )));
        }
        for (i, &q) in self.qubits.iter().enumerate() {
            if q == 0 || n.is_some_and(|n| q > n) {
                return Err(Error::InvalidGate(format!("qubit {q} is out of range")));
            }
            if self.qubits[..i].contains(&q) {
                return Err(Error::InvalidGate(format!("qubit {q} is listed twice")));
            }
        }
        Ok(())
    }
}

/// Builds the 1- or 2-qubit Kraus set of a gate. Zero Kraus operators are dropped.
pub fn build_gate(spec: &GateSpec) -> Result<KrausSet> {
    spec.check_placement(None)?;
    let ops = match spec.kind {
        GateKind::X => vec![single_qubit_pauli(1)],
        GateKind::Y => vec![single_qubit_pauli(2)],
        GateKind::Z => vec![single_qubit_pauli(3)],
        GateKind::H => vec![gates::hadamard()],
        GateKind::Rx => vec![gates::rx(spec.theta()?)],
        GateKind::Ry => vec![gates::ry(spec.theta()?)],
        GateKind::Rz => vec![gates::rz(spec.theta()?)],
        GateKind::Us => vec![gates::us()],
        GateKind::Cnot => vec![gates::cnot()],
        GateKind::Cz => vec![gates::cz()],
        GateKind::Cus => vec![gates::controlled(&gates::us())],
        GateKind::Identity => vec![identity(2)],
        GateKind::PhaseDamp => {
            let (lambda, phi) = spec.damping()?;
            gates::phase_damping_kraus(lambda, phi)
        }
        GateKind::CtrlPhaseDamp => {
            let (lambda, phi) = spec.damping()?;
            gates::controlled_phase_damping_kraus(lambda, phi)
        }
    };
    let ops: Vec<CMatrix> = ops
        .into_iter()
        .filter(|k| k.iter().any(|z| z.norm() > 1e-15))
        .collect();
    KrausSet::new(ops)
}

/// Layered process on `n` qubits; layers act in listed order, unlisted qubits idle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub n: usize,
    #[serde(default)]
    pub layers: Vec<GateSpec>,
}

impl ProcessSpec {
    pub fn new(n: usize, layers: Vec<GateSpec>) -> Self {
        Self { n, layers }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!("qubit count {} is outside 1..={MAX_QUBITS}", self.n)));
        }
        for layer in &self.layers {
            layer.check_placement(Some(self.n))?;
            build_gate(layer)?;
        }
        Ok(())
    }

    /// Qubits touched by non-identity gates.
    pub fn support(&self) -> QubitSubset {
        let qubits: Vec<usize> = self
            .layers
            .iter()
            .filter(|g| g.kind != GateKind::Identity)
            .flat_map(|g| g.qubits.iter().copied())
            .collect();
        QubitSubset::from_qubits(self.n, &qubits).expect("validated qubit labels")
    }

    /// Full n-qubit chi by Kronecker embedding of every layer. Refused above `cap`.
    pub fn embed_dense(&self, cap: usize) -> Result<ChiMatrix> {
        self.validate()?;
        check_dense_cap("dense process embedding", self.n, cap)?;
        let mut total = KrausSet::identity(self.n);
        for layer in &self.layers {
            let gate = build_gate(layer)?;
            let positions: Vec<usize> = layer.qubits.iter().map(|q| q - 1).collect();
            let ops = gate
                .ops()
                .iter()
                .map(|k| embed_operator(k, &positions, self.n))
                .collect();
            total = total.then(&KrausSet::new_unchecked(self.n, ops))?;
        }
        Ok(total.to_chi())
    }

    /// Composed Kraus set on the non-identity support only; valid for any `n`.
    pub fn junta_view(&self) -> Result<JuntaView> {
        self.validate()?;
        let support = self.support();
        let local: Vec<usize> = support.qubits();
        let m = local.len();
        let mut total = KrausSet::identity(m);
        for layer in self.layers.iter().filter(|g| g.kind != GateKind::Identity) {
            let gate = build_gate(layer)?;
            let positions: Vec<usize> = layer
                .qubits
                .iter()
                .map(|q| local.iter().position(|l| l == q).expect("qubit in support"))
                .collect();
            let ops = gate.ops().iter().map(|k| embed_operator(k, &positions, m)).collect();
            total = total.then(&KrausSet::new_unchecked(m, ops))?;
        }
        Ok(JuntaView { n: self.n, support, kraus: total })
    }
}

/// A process `Phi_S (x) I` stored as a Kraus set on its support `S` only.
///
/// Support qubits are ordered ascending; the first is the most significant
/// local qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct JuntaView {
    n: usize,
    support: QubitSubset,
    kraus: KrausSet,
}

impl JuntaView {
    pub fn new(support: QubitSubset, kraus: KrausSet) -> Result<Self> {
        if kraus.n() != support.len() {
            return Err(Error::InvalidArgument(format!(
                "{}-qubit Kraus set does not match a support of {} qubits",
                kraus.n(),
                support.len()
            )));
        }
        Ok(Self { n: support.n(), support, kraus })
    }

    /// Treats a dense chi as acting on all of its qubits.
    pub fn from_chi(chi: &ChiMatrix) -> Self {
        let n = chi.n();
        Self { n, support: QubitSubset::full(n), kraus: choi_to_kraus(&chi_to_choi(chi)) }
    }

    pub fn identity(n: usize) -> Self {
        Self { n, support: QubitSubset::empty(n), kraus: KrausSet::identity(0) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> QubitSubset {
        self.support
    }

    pub fn kraus(&self) -> &KrausSet {
        &self.kraus
    }

    /// chi of the process restricted to its support.
    pub fn support_chi(&self) -> ChiMatrix {
        self.kraus.to_chi()
    }

    /// Dense n-qubit chi; refused above `cap`.
    pub fn to_dense_chi(&self, cap: usize) -> Result<ChiMatrix> {
        check_dense_cap("dense junta expansion", self.n, cap)?;
        if self.support.is_empty() {
            return Ok(ChiMatrix::identity(self.n));
        }
        tensor_with_identity(&self.support_chi(), &self.support)
    }

    /// Exact chi of the sub-process `Phi_T` for any non-empty `T`, computed on
    /// `T union support` so it works for any `n`.
    pub fn subprocess_chi(&self, t: &QubitSubset) -> Result<ChiMatrix> {
        if t.is_empty() {
            return Err(Error::EmptySubset);
        }
        let local = t.union(&self.support);
        let qubits = local.qubits();
        let m = qubits.len();
        let local_support: Vec<usize> = self
            .support
            .qubits()
            .iter()
            .map(|q| qubits.iter().position(|l| l == q).expect("support is inside local set"))
            .collect();
        let ops = self
            .kraus
            .ops()
            .iter()
            .map(|k| embed_operator(k, &local_support, m))
            .collect();
        let chi = KrausSet::new_unchecked(m, ops).to_chi();
        let local_t: Vec<usize> = t
            .qubits()
            .iter()
            .map(|q| qubits.iter().position(|l| l == q).expect("t is inside local set") + 1)
            .collect();
        let t_local = QubitSubset::from_qubits(m, &local_t)?;
        if t_local.len() == m {
            Ok(chi)
        } else {
            reduce_subprocess(&chi, &t_local)
        }
    }
}

/// Per-test-gate measurement flip probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlipRates {
    #[serde(default = "default_flip_gate1")]
    pub gate1: f64,
    #[serde(default = "default_flip_interfering")]
    pub gate2: f64,
    #[serde(default = "default_flip_interfering")]
    pub gate3: f64,
}

fn default_flip_gate1() -> f64 {
    0.0005
}

fn default_flip_interfering() -> f64 {
    0.005
}

impl Default for FlipRates {
    fn default() -> Self {
        Self { gate1: default_flip_gate1(), gate2: default_flip_interfering(), gate3: default_flip_interfering() }
    }
}

impl FlipRates {
    pub const ZERO: FlipRates = FlipRates { gate1: 0.0, gate2: 0.0, gate3: 0.0 };

    /// Flip probability for test gate index `l` in 1..=3.
    pub fn for_gate(&self, l: usize) -> f64 {
        match l {
            1 => self.gate1,
            2 => self.gate2,
            3 => self.gate3,
            _ => panic!("test gate index {l} is not in 1..=3"),
        }
    }
}

/// Classical SPAM noise: independent post-measurement bit flips with a
/// gate-dependent probability on the listed qubits (all qubits when absent),
/// plus optional Gaussian over-rotation of the test gates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default)]
    pub flip: FlipRates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<Vec<usize>>,
    /// Standard deviation (radians) of an Ry error applied after each test
    /// gate and before each inverse test gate, independently per qubit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrotation: Option<f64>,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { flip: FlipRates::ZERO, qubits: None, overrotation: None }
    }

    /// Default flip rates restricted to the given qubits.
    pub fn on_qubits(qubits: &[usize]) -> Self {
        Self { flip: FlipRates::default(), qubits: Some(qubits.to_vec()), overrotation: None }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for (name, p) in [("gate1", self.flip.gate1), ("gate2", self.flip.gate2), ("gate3", self.flip.gate3)] {
            if !(0.0..=0.5).contains(&p) {
                return Err(Error::InvalidArgument(format!("flip probability {name} = {p} is outside [0, 0.5]")));
            }
        }
        if let Some(qubits) = &self.qubits {
            QubitSubset::from_qubits(n, qubits)?;
        }
        if let Some(sigma) = self.overrotation {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidArgument(format!("over-rotation {sigma} must be a non-negative number")));
            }
        }
        Ok(())
    }

    /// Qubits subject to flip noise.
    pub fn noisy_qubits(&self, n: usize) -> QubitSubset {
        match &self.qubits {
            Some(q) => QubitSubset::from_qubits(n, q).expect("validated noise qubits"),
            None => QubitSubset::full(n),
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.flip == FlipRates::ZERO && self.overrotation.is_none_or(|s| s == 0.0)
    }
}

fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Random CPTP map with `rank` Kraus operators, from a Haar-like random isometry.
pub fn random_channel(n: usize, rank: usize, rng: &mut impl Rng) -> KrausSet {
    let d = 1usize << n;
    let rank = rank.max(1);
    let g = ginibre(rank * d, d, rng);
    let gram = g.adjoint() * &g;
    let inv_root = psd_sqrt(&gram)
        .try_inverse()
        .expect("a Ginibre Gram matrix is invertible with probability one");
    let v = g * inv_root;
    let ops = (0..rank).map(|i| v.rows(i * d, d).into_owned()).collect();
    KrausSet::new_unchecked(n, ops)
}

pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    random_channel(n, 1, rng).ops()[0].clone()
}

/// Convex mixture `(1 - p) * identity + p * channel` as a Kraus set.
pub fn mix_with_identity(channel: &KrausSet, p: f64) -> KrausSet {
    let mut ops = vec![identity(channel.dim()).scale((1.0 - p).sqrt())];
    ops.extend(channel.ops().iter().map(|k| k.scale(p.sqrt())));
    KrausSet::new_unchecked(channel.n(), ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;
    use crate::process::{influence_exact, process_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn us_matrix_entries() {
        let k = build_gate(&GateSpec::new(GateKind::Us, &[1])).unwrap();
        let s = 1.0 / 3f64.sqrt();
        let u = &k.ops()[0];
        assert!((u[(0, 1)] - c(s, -s)).norm() < 1e-15);
        assert!((u[(1, 0)] - c(s, s)).norm() < 1e-15);
        assert!((u[(1, 1)] - c(-s, 0.0)).norm() < 1e-15);
        let sum = single_qubit_pauli(1) + single_qubit_pauli(2) + single_qubit_pauli(3);
        assert!(frobenius(&(u - sum.scale(s))) < 1e-15);
    }

    #[test]
    fn undamped_phase_channel_is_z_rotation() {
        let phi = 0.8;
        let k = build_gate(&GateSpec::new(GateKind::PhaseDamp, &[1]).with_lambda(0.0).with_phi(phi)).unwrap();
        assert_eq!(k.ops().len(), 1);
        assert!((k.ops()[0][(1, 1)] - C64::from_polar(1.0, phi)).norm() < 1e-15);
        let rz = KrausSet::unitary(gates::rz(phi)).unwrap().to_chi();
        assert!(process_distance(&k.to_chi(), &rz).unwrap() < 1e-12);
    }

    #[test]
    fn controlled_phase_damping_action() {
        let k = build_gate(&GateSpec::new(GateKind::CtrlPhaseDamp, &[1, 2]).with_lambda(1.0)).unwrap();
        let mut rho = CMatrix::zeros(4, 4);
        rho[(3, 3)] = ONE;
        let out = k.apply(&rho).unwrap();
        close(out[(3, 3)].re, 1.0, 1e-15);
        // (|10> + |11>)/sqrt(2): the coherence <10|rho|11> is destroyed.
        let mut rho = CMatrix::zeros(4, 4);
        for r in 2..4 {
            for col in 2..4 {
                rho[(r, col)] = c(0.5, 0.0);
            }
        }
        let out = k.apply(&rho).unwrap();
        close(out[(2, 3)].norm(), 0.0, 1e-15);
        close(out[(2, 2)].re, 0.5, 1e-15);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(build_gate(&GateSpec::new(GateKind::PhaseDamp, &[1]).with_lambda(1.5)).is_err());
        assert!(build_gate(&GateSpec::new(GateKind::PhaseDamp, &[1])).is_err());
        assert!(build_gate(&GateSpec::new(GateKind::Cnot, &[1])).is_err());
        assert!(build_gate(&GateSpec::new(GateKind::Cnot, &[2, 2])).is_err());
        assert!(build_gate(&GateSpec::new(GateKind::Rx, &[1])).is_err());
        let spec = ProcessSpec::new(2, vec![GateSpec::new(GateKind::X, &[3])]);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn every_zoo_gate_is_cptp() {
        let specs = [
            GateSpec::new(GateKind::X, &[1]),
            GateSpec::new(GateKind::Y, &[1]),
            GateSpec::new(GateKind::Z, &[1]),
            GateSpec::new(GateKind::H, &[1]),
            GateSpec::new(GateKind::Rx, &[1]).with_theta(0.4),
            GateSpec::new(GateKind::Ry, &[1]).with_theta(1.4),
            GateSpec::new(GateKind::Rz, &[1]).with_theta(2.4),
            GateSpec::new(GateKind::Us, &[1]),
            GateSpec::new(GateKind::Cnot, &[1, 2]),
            GateSpec::new(GateKind::Cz, &[1, 2]),
            GateSpec::new(GateKind::Cus, &[1, 2]),
            GateSpec::new(GateKind::PhaseDamp, &[1]).with_lambda(0.3).with_phi(0.2),
            GateSpec::new(GateKind::CtrlPhaseDamp, &[1, 2]).with_lambda(0.6),
            GateSpec::new(GateKind::Identity, &[1]),
        ];
        for spec in specs {
            let k = build_gate(&spec).unwrap();
            assert!(k.completeness_defect() < 1e-12, "{:?}", spec.kind);
        }
    }

    #[test]
    fn cnot_embedding_is_junta() {
        let spec = ProcessSpec::new(4, vec![GateSpec::new(GateKind::Cnot, &[2, 1])]);
        let chi = spec.embed_dense(5).unwrap();
        let s34 = QubitSubset::from_qubits(4, &[3, 4]).unwrap();
        assert_eq!(influence_exact(&chi, &s34).unwrap(), 0.0);
        close(influence_exact(&chi, &QubitSubset::from_qubits(4, &[1]).unwrap()).unwrap(), 0.5, 1e-12);
        assert!(matches!(spec.embed_dense(3), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn junta_view_support_of_24_qubit_spec() {
        let spec = ProcessSpec::new(
            24,
            vec![
                GateSpec::new(GateKind::CtrlPhaseDamp, &[6, 5]).with_lambda(0.8),
                GateSpec::new(GateKind::Cz, &[14, 13]),
                GateSpec::new(GateKind::Identity, &[20]),
            ],
        );
        let view = spec.junta_view().unwrap();
        assert_eq!(view.support().qubits(), vec![5, 6, 13, 14]);
        assert_eq!(view.kraus().n(), 4);
        assert!(spec.embed_dense(12).is_err());
    }

    #[test]
    fn double_x_is_identity() {
        let spec = ProcessSpec::new(2, vec![GateSpec::new(GateKind::X, &[1]), GateSpec::new(GateKind::X, &[1])]);
        let chi = spec.embed_dense(5).unwrap();
        close(influence_exact(&chi, &QubitSubset::from_qubits(2, &[1]).unwrap()).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn layers_apply_in_listed_order() {
        // H then Rz differs from Rz then H; check against an explicit product.
        let spec = ProcessSpec::new(
            1,
            vec![GateSpec::new(GateKind::H, &[1]), GateSpec::new(GateKind::Rz, &[1]).with_theta(0.7)],
        );
        let chi = spec.embed_dense(5).unwrap();
        let expect = KrausSet::unitary(gates::rz(0.7) * gates::hadamard()).unwrap().to_chi();
        assert!(process_distance(&chi, &expect).unwrap() < 1e-12);
    }

    #[test]
    fn dense_and_junta_paths_agree() {
        let spec = ProcessSpec::new(
            4,
            vec![
                GateSpec::new(GateKind::CtrlPhaseDamp, &[4, 2]).with_lambda(0.7).with_phi(0.3),
                GateSpec::new(GateKind::Rx, &[2]).with_theta(0.9),
                GateSpec::new(GateKind::Cus, &[2, 4]),
            ],
        );
        let dense = spec.embed_dense(5).unwrap();
        let view = spec.junta_view().unwrap();
        let reduced = reduce_subprocess(&dense, &view.support()).unwrap();
        assert!(process_distance(&reduced, &view.support_chi()).unwrap() < 1e-10);
        assert!(process_distance(&dense, &view.to_dense_chi(5).unwrap()).unwrap() < 1e-10);
        for t in QubitSubset::all_nonempty(4) {
            let a = reduce_subprocess(&dense, &t).unwrap();
            let b = view.subprocess_chi(&t).unwrap();
            assert!(process_distance(&a, &b).unwrap() < 1e-10, "T = {t}");
        }
    }

    #[test]
    fn controlled_gates_leave_target_alone_when_control_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [GateKind::Cnot, GateKind::Cz, GateKind::Cus] {
            let k = build_gate(&GateSpec::new(kind, &[1, 2])).unwrap();
            let psi = random_unitary(1, &mut rng).column(0).into_owned();
            let target = &psi * psi.adjoint();
            let mut control = CMatrix::zeros(2, 2);
            control[(0, 0)] = ONE;
            let rho = control.kronecker(&target);
            let out = k.apply(&rho).unwrap();
            assert!(frobenius(&(out - rho)) < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn random_channels_are_cptp() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for rank in 1..=4 {
                let k = random_channel(n, rank, &mut rng);
                assert!(k.completeness_defect() < 1e-10);
                KrausSet::new(k.ops().to_vec()).unwrap();
            }
        }
    }

    #[test]
    fn noise_validation() {
        let mut noise = NoiseModel::default();
        assert!(noise.validate(4).is_ok());
        noise.flip.gate2 = 0.7;
        assert!(noise.validate(4).is_err());
        assert!(NoiseModel::on_qubits(&[5]).validate(4).is_err());
        assert_eq!(NoiseModel::on_qubits(&[2, 4]).noisy_qubits(4).qubits(), vec![2, 4]);
        assert!(NoiseModel::noiseless().is_noiseless());
    }
}
