//! Finite-shot process tomography of a sub-process and the junta learner.
//!
//! Inputs are the six Pauli eigenstates per qubit, measurements the X/Y/Z
//! bases (outcome 0 is the +1 eigenvalue). Reconstruction is linear least
//! squares in the Pauli parametrization of the Choi matrix,
//! `J = d^-2 sum_xy r_xy sigma_x (x) sigma_y` (output first), followed by
//! Dykstra alternating projection onto the PSD cone and the trace-preserving
//! affine set.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{gates, JuntaView};
use crate::error::{Error, Result};
use crate::inference::{epsilon_estimate, hiqi_process, EpsilonEstimate, HiqiResult};
use crate::linalg::{
    c, embed_operator, frobenius, hermitian_eigen, hermitian_part, identity, kron, kron_all,
    partial_trace_keep, spectral_map, CMatrix, ONE, ZERO,
};
use crate::pauli::{pauli_operator, single_qubit_pauli};
use crate::process::{choi_to_chi, process_distance, process_fidelity, ChiMatrix, ChoiMatrix};
use crate::sampler::SamplerConfig;
use crate::subset::QubitSubset;

/// Default limit on `|T|` for tomography.
pub const DEFAULT_TOMOGRAPHY_CAP: usize = 2;
/// Hard ceiling on the configurable limit.
pub const MAX_TOMOGRAPHY_CAP: usize = 4;
/// Projection stops when successive iterates differ by less than this (Frobenius).
pub const PROJECTION_TOL: f64 = 1e-10;
pub const PROJECTION_MAX_ITER: usize = 1000;

const TOMOGRAPHY_STREAM: u64 = 5;
const REPAIR_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputState {
    #[serde(rename = "+x")]
    XPlus,
    #[serde(rename = "-x")]
    XMinus,
    #[serde(rename = "+y")]
    YPlus,
    #[serde(rename = "-y")]
    YMinus,
    #[serde(rename = "+z")]
    ZPlus,
    #[serde(rename = "-z")]
    ZMinus,
}

impl InputState {
    pub const ALL: [InputState; 6] = [
        InputState::XPlus,
        InputState::XMinus,
        InputState::YPlus,
        InputState::YMinus,
        InputState::ZPlus,
        InputState::ZMinus,
    ];

    /// `(I + s sigma) / 2`.
    pub fn density(self) -> CMatrix {
        let (axis, sign) = match self {
            InputState::XPlus => (1, 1.0),
            InputState::XMinus => (1, -1.0),
            InputState::YPlus => (2, 1.0),
            InputState::YMinus => (2, -1.0),
            InputState::ZPlus => (3, 1.0),
            InputState::ZMinus => (3, -1.0),
        };
        (identity(2) + single_qubit_pauli(axis).scale(sign)).scale(0.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    /// Rotation taking the basis to the computational one.
    pub fn rotation(self) -> CMatrix {
        match self {
            Basis::X => gates::hadamard(),
            Basis::Y => {
                let s_dag = crate::linalg::from_rows(&[&[ONE, ZERO], &[ZERO, c(0.0, -1.0)]]);
                gates::hadamard() * s_dag
            }
            Basis::Z => identity(2),
        }
    }

    /// Projector onto outcome `o` (0 is the +1 eigenvalue).
    pub fn projector(self, o: usize) -> CMatrix {
        let v = self.rotation();
        let row = v.row(o).adjoint();
        &row * row.adjoint()
    }
}

/// One input/measurement configuration on `T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TomographySetting {
    pub input: Vec<InputState>,
    pub basis: Vec<Basis>,
}

/// Every setting for `t` qubits: inputs vary slowest, first qubit most significant.
pub fn settings(t: usize) -> Vec<TomographySetting> {
    let n_in = 6usize.pow(t as u32);
    let n_b = 3usize.pow(t as u32);
    let digits = |mut x: usize, base: usize| -> Vec<usize> {
        let mut out = vec![0; t];
        for slot in out.iter_mut().rev() {
            *slot = x % base;
            x /= base;
        }
        out
    };
    (0..n_in)
        .flat_map(|i| (0..n_b).map(move |b| (i, b)))
        .map(|(i, b)| TomographySetting {
            input: digits(i, 6).into_iter().map(|k| InputState::ALL[k]).collect(),
            basis: digits(b, 3).into_iter().map(|k| Basis::ALL[k]).collect(),
        })
        .collect()
}

/// Per-setting outcome data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingData {
    pub setting: TomographySetting,
    /// Outcome counts indexed by bitstring over `T` (first qubit most
    /// significant); absent for exact data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
    pub frequencies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyData {
    pub t: QubitSubset,
    /// 0 for exact probabilities.
    pub shots_per_setting: u64,
    pub measurement_flip: f64,
    pub records: Vec<SettingData>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyConfig {
    pub shots_per_setting: u64,
    /// Classical flip probability on each measured bit.
    #[serde(default)]
    pub measurement_flip: f64,
    pub seed: u64,
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_TOMOGRAPHY_CAP
}

impl TomographyConfig {
    pub fn new(shots_per_setting: u64, seed: u64) -> Self {
        Self { shots_per_setting, measurement_flip: 0.0, seed, workers: 0, cap: DEFAULT_TOMOGRAPHY_CAP }
    }
}

/// Outcome distributions on `T` for every input product and every
/// configuration of the support qubits outside `T`.
struct ExactModel {
    t_len: usize,
    /// `[input_index][config][basis_index] -> probabilities over 2^t outcomes`.
    probs: Vec<Vec<Vec<Vec<f64>>>>,
}

fn check_cap(t: &QubitSubset, cap: usize) -> Result<()> {
    let cap = cap.min(MAX_TOMOGRAPHY_CAP);
    if t.len() > cap {
        return Err(Error::SizeCap { what: "process tomography", n: t.len(), cap });
    }
    if t.is_empty() {
        return Err(Error::EmptySubset);
    }
    Ok(())
}

fn exact_model(view: &JuntaView, t: &QubitSubset) -> Result<ExactModel> {
    if t.n() != view.n() {
        return Err(Error::InvalidArgument("tomography subset does not match the process".into()));
    }
    let local = t.union(&view.support());
    let qubits = local.qubits();
    let m = qubits.len();
    let pos = |q: usize| qubits.iter().position(|&l| l == q).expect("qubit in local set");
    let support_pos: Vec<usize> = view.support().qubits().iter().map(|&q| pos(q)).collect();
    let ops: Vec<CMatrix> = view.kraus().ops().iter().map(|k| embed_operator(k, &support_pos, m)).collect();
    let t_pos: Vec<usize> = t.qubits().iter().map(|&q| pos(q)).collect();
    let rest: Vec<usize> = view.support().qubits().into_iter().filter(|q| !t.contains(*q)).collect();
    let tl = t.len();
    let rotations: Vec<CMatrix> = settings_bases(tl)
        .iter()
        .map(|b| kron_all(b.iter().map(|x| x.rotation()).collect::<Vec<_>>().iter()))
        .collect();
    let inputs = settings_inputs(tl);
    let probs = inputs
        .par_iter()
        .map(|input| {
            (0..1usize << rest.len())
                .map(|config| {
                    let factors: Vec<CMatrix> = qubits
                        .iter()
                        .map(|&q| {
                            if let Some(j) = t.qubits().iter().position(|&x| x == q) {
                                input[j].density()
                            } else {
                                let r = rest.iter().position(|&x| x == q).expect("support qubit");
                                let bit = (config >> (rest.len() - 1 - r)) & 1;
                                let mut p = CMatrix::zeros(2, 2);
                                p[(bit, bit)] = ONE;
                                p
                            }
                        })
                        .collect();
                    let rho = kron_all(factors.iter());
                    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
                    for k in &ops {
                        out += k * &rho * k.adjoint();
                    }
                    let rho_t = partial_trace_keep(&out, m, &t_pos);
                    rotations
                        .iter()
                        .map(|v| {
                            let r = v * &rho_t * v.adjoint();
                            (0..r.nrows()).map(|i| r[(i, i)].re.max(0.0)).collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(ExactModel { t_len: tl, probs })
}

fn settings_inputs(t: usize) -> Vec<Vec<InputState>> {
    settings(t).into_iter().step_by(3usize.pow(t as u32)).map(|s| s.input).collect()
}

fn settings_bases(t: usize) -> Vec<Vec<Basis>> {
    settings(t).into_iter().take(3usize.pow(t as u32)).map(|s| s.basis).collect()
}

/// Applies independent flips with probability `p` to each of `t` bits of a distribution.
fn flip_distribution(probs: &[f64], t: usize, p: f64) -> Vec<f64> {
    let mut out = probs.to_vec();
    if p == 0.0 {
        return out;
    }
    for j in 0..t {
        let bit = 1 << j;
        for i in 0..out.len() {
            if i & bit == 0 {
                let (a, b) = (out[i], out[i | bit]);
                out[i] = (1.0 - p) * a + p * b;
                out[i | bit] = p * a + (1.0 - p) * b;
            }
        }
    }
    out
}

/// Exact outcome probabilities (infinite statistics) for every setting.
pub fn exact_tomography_data(view: &JuntaView, t: &QubitSubset, measurement_flip: f64, cap: usize) -> Result<TomographyData> {
    check_cap(t, cap)?;
    let model = exact_model(view, t)?;
    let n_b = 3usize.pow(model.t_len as u32);
    let records = settings(model.t_len)
        .into_iter()
        .enumerate()
        .map(|(s, setting)| {
            let per_config = &model.probs[s / n_b];
            let dim = 1usize << model.t_len;
            let mut avg = vec![0.0; dim];
            for config in per_config {
                for (a, p) in avg.iter_mut().zip(&config[s % n_b]) {
                    *a += p / per_config.len() as f64;
                }
            }
            SettingData { setting, counts: None, frequencies: flip_distribution(&avg, model.t_len, measurement_flip) }
        })
        .collect();
    Ok(TomographyData { t: *t, shots_per_setting: 0, measurement_flip, records })
}

fn sample_index(cdf_source: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = cdf_source.iter().sum();
    let r = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in cdf_source.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    cdf_source.len() - 1
}

/// Simulated counts: per shot a uniformly random computational configuration
/// of the support qubits outside `T` (the maximally mixed input), an outcome
/// on `T`, then optional classical flips.
pub fn generate_tomography_data(view: &JuntaView, t: &QubitSubset, config: &TomographyConfig) -> Result<TomographyData> {
    check_cap(t, config.cap)?;
    if config.shots_per_setting == 0 {
        return Err(Error::InvalidArgument("shots per setting must be at least 1".into()));
    }
    if !(0.0..=0.5).contains(&config.measurement_flip) {
        return Err(Error::InvalidArgument(format!("flip probability {} is outside [0, 0.5]", config.measurement_flip)));
    }
    let model = exact_model(view, t)?;
    let tl = model.t_len;
    let n_b = 3usize.pow(tl as u32);
    let all = settings(tl);
    let run = || {
        all.par_iter()
            .enumerate()
            .map(|(s, setting)| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(TOMOGRAPHY_STREAM << 48 | s as u64);
                let per_config = &model.probs[s / n_b];
                let mut counts = vec![0u64; 1 << tl];
                for _ in 0..config.shots_per_setting {
                    let cfg = rng.gen_range(0..per_config.len());
                    let mut o = sample_index(&per_config[cfg][s % n_b], &mut rng);
                    if config.measurement_flip > 0.0 {
                        for j in 0..tl {
                            if rng.gen::<f64>() < config.measurement_flip {
                                o ^= 1 << j;
                            }
                        }
                    }
                    counts[o] += 1;
                }
                let frequencies = counts.iter().map(|&k| k as f64 / config.shots_per_setting as f64).collect();
                SettingData { setting: setting.clone(), counts: Some(counts), frequencies }
            })
            .collect::<Vec<_>>()
    };
    let records = if config.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(run)
    };
    Ok(TomographyData {
        t: *t,
        shots_per_setting: config.shots_per_setting,
        measurement_flip: config.measurement_flip,
        records,
    })
}

/// Single-qubit design matrix: rows `(input, basis, outcome)`, columns
/// `(output Pauli x, input Pauli y)`, entries `Tr[sigma_x Pi] Tr[sigma_y rho^T] / 4`.
fn single_qubit_design() -> DMatrix<f64> {
    DMatrix::from_fn(36, 16, |r, col| {
        let (i, b, o) = (r / 6, (r / 2) % 3, r % 2);
        let (x, y) = ((col / 4) as u8, (col % 4) as u8);
        let pi = Basis::ALL[b].projector(o);
        let rho_t = InputState::ALL[i].density().transpose();
        let tx = (single_qubit_pauli(x) * pi).trace();
        let ty = (single_qubit_pauli(y) * rho_t).trace();
        (tx * ty).re / 4.0
    })
}

/// Applies `p` (rows_out x rows_in) along every axis of a `t`-way tensor stored row-major.
fn mode_products(data: Vec<f64>, p: &DMatrix<f64>, t: usize) -> Vec<f64> {
    let (out_dim, in_dim) = p.shape();
    let mut cur = data;
    let mut dims = vec![in_dim; t];
    for axis in 0..t {
        let inner: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let mut next = vec![0.0; outer * out_dim * inner];
        for a in 0..outer {
            for k in 0..out_dim {
                for j in 0..in_dim {
                    let w = p[(k, j)];
                    if w == 0.0 {
                        continue;
                    }
                    let src = (a * in_dim + j) * inner;
                    let dst = (a * out_dim + k) * inner;
                    for z in 0..inner {
                        next[dst + z] += w * cur[src + z];
                    }
                }
            }
        }
        dims[axis] = out_dim;
        cur = next;
    }
    cur
}

/// Linear-inversion least-squares Choi estimate (Hermitian, not yet CPTP).
pub fn linear_inversion(data: &TomographyData) -> Result<CMatrix> {
    let t = data.t.len();
    let n_b = 3usize.pow(t as u32);
    let dim = 1usize << t;
    if data.records.len() != 6usize.pow(t as u32) * n_b {
        return Err(Error::Validation(format!(
            "expected {} settings for {t} qubit(s), got {}",
            6usize.pow(t as u32) * n_b,
            data.records.len()
        )));
    }
    let design = single_qubit_design();
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
    if rank != 16 {
        return Err(Error::Internal(format!("tomography design has rank {rank}, expected 16")));
    }
    let pinv = svd.pseudo_inverse(1e-10 * smax).map_err(|e| Error::Internal(e.to_string()))?;

    // Arrange frequencies as a t-way tensor with per-qubit row index (input, basis, outcome).
    let mut tensor = vec![0.0; 36usize.pow(t as u32)];
    let digit = |x: usize, base: usize, j: usize| (x / base.pow((t - 1 - j) as u32)) % base;
    for (s, rec) in data.records.iter().enumerate() {
        if rec.frequencies.len() != dim {
            return Err(Error::Dimension { expected: dim, found: rec.frequencies.len() });
        }
        let (ii, bb) = (s / n_b, s % n_b);
        for (o, &f) in rec.frequencies.iter().enumerate() {
            let mut idx = 0;
            for j in 0..t {
                let (i, b) = (digit(ii, 6, j), digit(bb, 3, j));
                let oj = (o >> (t - 1 - j)) & 1;
                idx = idx * 36 + (i * 3 + b) * 2 + oj;
            }
            tensor[idx] = f;
        }
    }
    let coeffs = mode_products(tensor, &pinv, t);

    let mut j = CMatrix::zeros(dim * dim, dim * dim);
    for (idx, &r) in coeffs.iter().enumerate() {
        if r.abs() < 1e-15 {
            continue;
        }
        let (mut x, mut y) = (0usize, 0usize);
        for k in 0..t {
            let col = (idx / 16usize.pow((t - 1 - k) as u32)) % 16;
            x = x * 4 + col / 4;
            y = y * 4 + col % 4;
        }
        j += kron(&pauli_operator(x, t), &pauli_operator(y, t)).scale(r / (dim * dim) as f64);
    }
    Ok(hermitian_part(&j))
}

fn project_psd(a: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(a);
    spectral_map(&values, &vectors, |l| l.max(0.0))
}

/// Orthogonal projection onto `{J : Tr_out J = I}`.
fn project_tp(a: &CMatrix, t: usize) -> CMatrix {
    let d = 1usize << t;
    let input: Vec<usize> = (t..2 * t).collect();
    let defect = partial_trace_keep(a, 2 * t, &input) - identity(d);
    a - kron(&identity(d), &defect).scale(1.0 / d as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub t: QubitSubset,
    #[serde(skip)]
    pub choi: Option<ChoiMatrix>,
    /// Row-major real and imaginary parts of the Choi matrix.
    pub choi_re: Vec<Vec<f64>>,
    pub choi_im: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub tp_deviation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Weight of the depolarizing Choi mixed in to restore exact positivity.
    pub repair_weight: f64,
    pub projection_tol: f64,
    pub max_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_to_reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_to_reference: Option<f64>,
}

impl ReconstructionResult {
    pub fn choi(&self) -> &ChoiMatrix {
        self.choi.as_ref().expect("reconstructions carry their Choi matrix")
    }

    pub fn chi(&self) -> ChiMatrix {
        choi_to_chi(self.choi())
    }

    /// Adds distance and fidelity against a reference sub-process.
    pub fn compare(&mut self, reference: &ChiMatrix) -> Result<()> {
        let chi = self.chi();
        self.distance_to_reference = Some(process_distance(&chi, reference)?);
        self.fidelity_to_reference = Some(process_fidelity(&chi, reference)?);
        Ok(())
    }
}

/// Projects a Hermitian Choi estimate onto the CPTP set (Dykstra), then mixes
/// in the depolarizing Choi `I / d` if a residual negative eigenvalue remains.
pub fn project_cptp(j0: &CMatrix, t: usize) -> (CMatrix, usize, bool, f64) {
    let d = 1usize << t;
    let mut x = project_tp(j0, t);
    let mut p = CMatrix::zeros(x.nrows(), x.ncols());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < PROJECTION_MAX_ITER {
        iterations += 1;
        let y = project_psd(&(&x + &p));
        p = &x + &p - &y;
        let next = project_tp(&y, t);
        let change = frobenius(&(&next - &x));
        x = next;
        if change < PROJECTION_TOL {
            converged = true;
            break;
        }
    }
    x = hermitian_part(&x);
    let (values, _) = hermitian_eigen(&x);
    let lmin = values[0];
    let mut weight = 0.0;
    // Round-off negatives far inside the PSD tolerance are left alone.
    if lmin < -REPAIR_THRESHOLD {
        weight = -lmin / (1.0 / d as f64 - lmin);
        x = x.scale(1.0 - weight) + identity(d * d).scale(weight / d as f64);
    }
    (x, iterations, converged, weight)
}

/// Least squares followed by CPTP projection.
pub fn reconstruct_cptp(data: &TomographyData) -> Result<ReconstructionResult> {
    let t = data.t.len();
    let j0 = linear_inversion(data)?;
    let (j, iterations, converged, repair_weight) = project_cptp(&j0, t);
    let choi = ChoiMatrix::new(j.clone())?;
    let min_eigenvalue = hermitian_eigen(&j).0[0];
    let tp_deviation = choi.tp_deviation();
    let rows = |f: &dyn Fn(crate::linalg::C64) -> f64| -> Vec<Vec<f64>> {
        (0..j.nrows()).map(|r| (0..j.ncols()).map(|col| f(j[(r, col)])).collect()).collect()
    };
    Ok(ReconstructionResult {
        t: data.t,
        choi_re: rows(&|z| z.re),
        choi_im: rows(&|z| z.im),
        choi: Some(choi),
        min_eigenvalue,
        tp_deviation,
        iterations,
        converged,
        repair_weight,
        projection_tol: PROJECTION_TOL,
        max_iterations: PROJECTION_MAX_ITER,
        distance_to_reference: None,
        fidelity_to_reference: None,
    })
}

/// Output of the junta learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerOutput {
    pub hiqi: HiqiResult,
    pub t: QubitSubset,
    /// `None` when `T` is empty: the learned description is the global identity.
    pub reconstruction: Option<ReconstructionResult>,
    pub epsilon: EpsilonEstimate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_bound: Option<f64>,
}

/// Identifies `T`, reconstructs `Phi_T` by tomography and composes the error
/// budget `epsilon + epsilon_r` against the true sub-process.
pub fn junta_learner(view: &JuntaView, sampling: &SamplerConfig, delta: f64, tomography: &TomographyConfig) -> Result<LearnerOutput> {
    let h = hiqi_process(view, sampling, delta)?;
    let epsilon = epsilon_estimate(h.iu_complement, h.iu_complement_stderr);
    let t = h.t;
    if t.is_empty() {
        return Ok(LearnerOutput { hiqi: h, t, reconstruction: None, epsilon, epsilon_r: Some(0.0), total_bound: Some(epsilon.value) });
    }
    let data = generate_tomography_data(view, &t, tomography)?;
    let mut rec = reconstruct_cptp(&data)?;
    rec.compare(&view.subprocess_chi(&t)?)?;
    let epsilon_r = rec.distance_to_reference;
    Ok(LearnerOutput {
        hiqi: h,
        t,
        reconstruction: Some(rec),
        epsilon,
        epsilon_r,
        total_bound: epsilon_r.map(|r| r + epsilon.value),
    })
}
