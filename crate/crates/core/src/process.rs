//! Process representations (Kraus, Choi, chi), conversions between them, and
//! exact influence, fidelity, distance and sub-process reduction.
//!
//! Conventions:
//! * Choi matrices are unnormalized, `J = sum_ab Phi(|a><b|) (x) |a><b|`, with
//!   the output factor first. With row-stacking vectorization this is
//!   `J = sum_i vec(K_i) vec(K_i)^dagger`.
//! * The chi matrix is `chi = U^dagger J U / d` where column `x` of `U` is
//!   `vec(sigma_x) / sqrt(d)` in base-4 Pauli order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    frobenius, hermitian_eigen, hermiticity_defect, identity, partial_trace_keep, spectral_map,
    trace, unvec_row, vec_row, CMatrix, C64, ZERO,
};
use crate::pauli::SparsePauli;
use crate::subset::QubitSubset;

/// Default qubit limit for dense 4^n x 4^n chi matrices.
pub const DEFAULT_DENSE_CAP: usize = 5;
/// Hard ceiling on the configurable dense limit.
pub const MAX_DENSE_CAP: usize = 12;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const CPTP_TOL: f64 = 1e-9;

/// Checks a dense-path qubit count against a configured cap.
pub fn check_dense_cap(what: &'static str, n: usize, cap: usize) -> Result<()> {
    let cap = cap.min(MAX_DENSE_CAP);
    if n > cap {
        return Err(Error::SizeCap { what, n, cap });
    }
    Ok(())
}

fn qubits_for_dim(d: usize) -> Result<usize> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::Validation(format!("dimension {d} is not a power of two")));
    }
    Ok(d.trailing_zeros() as usize)
}

// ---------------------------------------------------------------------------
// Kraus

/// Kraus representation `{K_i}` of an n-qubit CPTP map.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    n: usize,
    ops: Vec<CMatrix>,
}

impl KrausSet {
    /// Validates shapes and the completeness relation `sum K^dagger K = I`.
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::Validation("a Kraus set needs at least one operator".into()))?;
        let d = first.nrows();
        let n = qubits_for_dim(d)?;
        for op in &ops {
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::Validation("Kraus operators must all be square and equal-sized".into()));
            }
        }
        let set = Self { n, ops };
        let defect = set.completeness_defect();
        if defect > CPTP_TOL {
            return Err(Error::Validation(format!(
                "Kraus operators are not trace preserving (defect {defect:.3e})"
            )));
        }
        Ok(set)
    }

    pub(crate) fn new_unchecked(n: usize, ops: Vec<CMatrix>) -> Self {
        Self { n, ops }
    }

    pub fn identity(n: usize) -> Self {
        Self { n, ops: vec![identity(1 << n)] }
    }

    /// A single-operator set from a unitary matrix.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// Max-entry deviation of `sum K^dagger K` from the identity.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.dim();
        let mut acc = CMatrix::zeros(d, d);
        for k in &self.ops {
            acc += k.adjoint() * k;
        }
        (acc - identity(d)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_square(rho, self.dim())?;
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for k in &self.ops {
            out += k * rho * k.adjoint();
        }
        Ok(out)
    }

    /// Sequential composition: `self` acts first, then `next`.
    pub fn then(&self, next: &KrausSet) -> Result<KrausSet> {
        if self.n != next.n {
            return Err(Error::Dimension { expected: self.dim(), found: next.dim() });
        }
        let mut ops = Vec::with_capacity(self.ops.len() * next.ops.len());
        for b in &next.ops {
            for a in &self.ops {
                let prod = b * a;
                if frobenius(&prod) > 1e-14 {
                    ops.push(prod);
                }
            }
        }
        let composed = Self::new_unchecked(self.n, ops);
        if composed.ops.len() > composed.dim() * composed.dim() {
            Ok(choi_to_kraus(&kraus_to_choi(&composed)))
        } else {
            Ok(composed)
        }
    }

    /// Parallel composition `self (x) other`; `self` occupies the leading qubits.
    pub fn tensor(&self, other: &KrausSet) -> KrausSet {
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for a in &self.ops {
            for b in &other.ops {
                ops.push(a.kronecker(b));
            }
        }
        Self::new_unchecked(self.n + other.n, ops)
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        kraus_to_choi(self)
    }

    pub fn to_chi(&self) -> ChiMatrix {
        choi_to_chi(&kraus_to_choi(self))
    }
}

fn check_square(rho: &CMatrix, d: usize) -> Result<()> {
    if rho.nrows() != d {
        return Err(Error::Dimension { expected: d, found: rho.nrows() });
    }
    if rho.ncols() != d {
        return Err(Error::Dimension { expected: d, found: rho.ncols() });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Choi

/// Unnormalized Choi matrix (trace `d`), output factor first.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    n: usize,
    j: CMatrix,
}

impl ChoiMatrix {
    /// Validates Hermiticity, PSD, trace `d` and the trace-preserving condition.
    pub fn new(j: CMatrix) -> Result<Self> {
        let d2 = j.nrows();
        if j.ncols() != d2 {
            return Err(Error::Validation("Choi matrix must be square".into()));
        }
        let two_n = qubits_for_dim(d2)?;
        if two_n % 2 != 0 {
            return Err(Error::Validation(format!("Choi dimension {d2} is not a square of 2^n")));
        }
        let c = Self { n: two_n / 2, j };
        c.validate()?;
        Ok(c)
    }

    pub(crate) fn new_unchecked(n: usize, j: CMatrix) -> Self {
        Self { n, j }
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim() as f64;
        let herm = hermiticity_defect(&self.j);
        if herm > HERMITIAN_TOL {
            return Err(Error::Validation(format!("Choi matrix is not Hermitian (defect {herm:.3e})")));
        }
        let tr = trace(&self.j).re;
        if (tr - d).abs() > TRACE_TOL {
            return Err(Error::Validation(format!("Choi trace {tr} differs from {d}")));
        }
        let tp = self.tp_deviation();
        if tp > TRACE_TOL {
            return Err(Error::Validation(format!("Choi matrix is not trace preserving (deviation {tp:.3e})")));
        }
        let min = crate::linalg::min_eigenvalue(&self.j);
        if min < -PSD_TOL {
            return Err(Error::Validation(format!("Choi matrix is not PSD (min eigenvalue {min:.3e})")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.j
    }

    /// Partial trace over the output factor; equals the identity for TP maps.
    pub fn input_marginal(&self) -> CMatrix {
        let n = self.n;
        partial_trace_keep(&self.j, 2 * n, &(n..2 * n).collect::<Vec<_>>())
    }

    /// Max-entry deviation of the output-traced Choi matrix from the identity.
    pub fn tp_deviation(&self) -> f64 {
        (self.input_marginal() - identity(self.dim()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `Phi(rho) = Tr_in[J (I (x) rho^T)]`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.dim();
        check_square(rho, d)?;
        let mut out = CMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                let mut acc = ZERO;
                for a in 0..d {
                    for b in 0..d {
                        // J[(r,a),(c,b)] * rho[a][b]
                        acc += self.j[(r * d + a, c * d + b)] * rho[(a, b)];
                    }
                }
                out[(r, c)] = acc;
            }
        }
        Ok(out)
    }
}

/// `J = sum_i vec(K_i) vec(K_i)^dagger` with row-stacking vectorization.
pub fn kraus_to_choi(k: &KrausSet) -> ChoiMatrix {
    let d2 = k.dim() * k.dim();
    let mut j = CMatrix::zeros(d2, d2);
    for op in k.ops() {
        let v = vec_row(op);
        j += &v * v.adjoint();
    }
    ChoiMatrix::new_unchecked(k.n(), j)
}

/// Minimal Kraus set from the Choi eigen-decomposition.
pub fn choi_to_kraus(j: &ChoiMatrix) -> KrausSet {
    let d = j.dim();
    let (values, vectors) = hermitian_eigen(j.matrix());
    let scale = values.iter().cloned().fold(0.0, f64::max).max(1.0);
    let mut ops = Vec::new();
    for (idx, &lambda) in values.iter().enumerate().rev() {
        if lambda <= 1e-13 * scale {
            continue;
        }
        let v = vectors.column(idx).into_owned().scale(lambda.sqrt());
        ops.push(unvec_row(&v, d));
    }
    if ops.is_empty() {
        ops.push(CMatrix::zeros(d, d));
    }
    KrausSet::new_unchecked(j.n(), ops)
}

/// `chi = U^dagger J U / d`.
pub fn choi_to_chi(j: &ChoiMatrix) -> ChiMatrix {
    let n = j.n();
    let d = j.dim();
    let basis = SparsePauli::basis(n);
    let nb = basis.len();
    // (U^dagger J)[x][col] uses the single non-zero of vec(sigma_x) per row block.
    let mut left = CMatrix::zeros(nb, d * d);
    for (x, px) in basis.iter().enumerate() {
        for col in 0..d * d {
            let mut acc = ZERO;
            for c in 0..d {
                let r = c ^ px.flip;
                acc += px.phase[c].conj() * j.matrix()[(r * d + c, col)];
            }
            left[(x, col)] = acc;
        }
    }
    let mut chi = CMatrix::zeros(nb, nb);
    let norm = 1.0 / (d * d) as f64;
    for (y, py) in basis.iter().enumerate() {
        for x in 0..nb {
            let mut acc = ZERO;
            for c in 0..d {
                let r = c ^ py.flip;
                acc += left[(x, r * d + c)] * py.phase[c];
            }
            chi[(x, y)] = acc * norm;
        }
    }
    ChiMatrix::new_unchecked(n, chi)
}

/// Inverse of [`choi_to_chi`]: `J = sum_xy chi_xy vec(sigma_x) vec(sigma_y)^dagger`.
pub fn chi_to_choi(chi: &ChiMatrix) -> ChoiMatrix {
    let n = chi.n();
    let d = 1usize << n;
    let basis = SparsePauli::basis(n);
    let mut j = CMatrix::zeros(d * d, d * d);
    for (x, px) in basis.iter().enumerate() {
        for (y, py) in basis.iter().enumerate() {
            let w = chi.matrix()[(x, y)];
            if w == ZERO {
                continue;
            }
            for c1 in 0..d {
                let row = (c1 ^ px.flip) * d + c1;
                let a = w * px.phase[c1];
                for c2 in 0..d {
                    let col = (c2 ^ py.flip) * d + c2;
                    j[(row, col)] += a * py.phase[c2].conj();
                }
            }
        }
    }
    ChoiMatrix::new_unchecked(n, j)
}

// ---------------------------------------------------------------------------
// chi

/// Process matrix in the Pauli basis (Hermitian, PSD, unit trace).
#[derive(Clone, Debug, PartialEq)]
pub struct ChiMatrix {
    n: usize,
    m: CMatrix,
}

impl ChiMatrix {
    pub fn new(n: usize, m: CMatrix) -> Result<Self> {
        let nb = 1usize << (2 * n);
        if m.nrows() != nb || m.ncols() != nb {
            return Err(Error::Dimension { expected: nb, found: m.nrows() });
        }
        let herm = hermiticity_defect(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::Validation(format!("chi matrix is not Hermitian (defect {herm:.3e})")));
        }
        let tr = trace(&m).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Validation(format!("chi trace {tr} differs from 1")));
        }
        let min = crate::linalg::min_eigenvalue(&m);
        if min < -PSD_TOL {
            return Err(Error::Validation(format!("chi matrix is not PSD (min eigenvalue {min:.3e})")));
        }
        Ok(Self { n, m })
    }

    pub(crate) fn new_unchecked(n: usize, m: CMatrix) -> Self {
        Self { n, m }
    }

    /// The identity process `e_0 e_0^dagger`.
    pub fn identity(n: usize) -> Self {
        let nb = 1usize << (2 * n);
        let mut m = CMatrix::zeros(nb, nb);
        m[(0, 0)] = C64::new(1.0, 0.0);
        Self { n, m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.m.diagonal().iter().map(|z| z.re).collect()
    }

    /// `Phi(rho) = sum_xy chi_xy sigma_x rho sigma_y`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = 1usize << self.n;
        check_square(rho, d)?;
        let basis = SparsePauli::basis(self.n);
        let mut out = CMatrix::zeros(d, d);
        for (x, px) in basis.iter().enumerate() {
            for (y, py) in basis.iter().enumerate() {
                let w = self.m[(x, y)];
                if w.norm_sqr() < 1e-30 {
                    continue;
                }
                // (sigma_x rho sigma_y)[r][c] = ph_x(r^fx) rho[r^fx][c^fy] ph_y(c)
                for r in 0..d {
                    let rs = r ^ px.flip;
                    let a = w * px.phase[rs];
                    for c in 0..d {
                        let cs = c ^ py.flip;
                        out[(r, c)] += a * rho[(rs, cs)] * py.phase[c];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        chi_to_choi(self)
    }
}

/// Convenience: apply a process given in either representation.
pub fn apply_process(process: &ProcessRef<'_>, rho: &CMatrix) -> Result<CMatrix> {
    match process {
        ProcessRef::Chi(c) => c.apply(rho),
        ProcessRef::Kraus(k) => k.apply(rho),
    }
}

/// Borrowed view of a process in chi or Kraus form.
#[derive(Clone, Copy, Debug)]
pub enum ProcessRef<'a> {
    Chi(&'a ChiMatrix),
    Kraus(&'a KrausSet),
}

// ---------------------------------------------------------------------------
// influence

#[inline]
fn digit(x: usize, n: usize, qubit: usize) -> usize {
    (x >> (2 * (n - qubit))) & 3
}

/// Sum of chi diagonals over Pauli strings whose digits on `s` all satisfy `allowed`.
fn restricted_diagonal_sum(chi: &ChiMatrix, s: &QubitSubset, allowed: impl Fn(usize) -> bool) -> f64 {
    let n = chi.n();
    let qubits = s.qubits();
    chi.m
        .diagonal()
        .iter()
        .enumerate()
        .filter(|(x, _)| qubits.iter().all(|&q| allowed(digit(*x, n, q))))
        .map(|(_, z)| z.re)
        .sum()
}

fn check_subset(chi: &ChiMatrix, s: &QubitSubset) -> Result<()> {
    if s.n() != chi.n() {
        return Err(Error::InvalidArgument(format!(
            "subset over {} qubits used with a {}-qubit process",
            s.n(),
            chi.n()
        )));
    }
    Ok(())
}

/// `Inf_S = 1 - sum_{x: x_S = 0} chi_xx`.
pub fn influence_exact(chi: &ChiMatrix, s: &QubitSubset) -> Result<f64> {
    check_subset(chi, s)?;
    Ok((1.0 - restricted_diagonal_sum(chi, s, |v| v == 0)).clamp(0.0, 1.0))
}

/// Exact sampler expectations `(EX_1, EX_2, EX_3)` for test gates I, H, Rx(pi/2).
pub fn influence_samplers_exact(chi: &ChiMatrix, s: &QubitSubset) -> Result<[f64; 3]> {
    check_subset(chi, s)?;
    let a = restricted_diagonal_sum(chi, s, |v| v == 0 || v == 3);
    let b = restricted_diagonal_sum(chi, s, |v| v == 0 || v == 1);
    let c = restricted_diagonal_sum(chi, s, |v| v == 0 || v == 2);
    Ok([(1.0 - a).clamp(0.0, 1.0), (1.0 - b).clamp(0.0, 1.0), (1.0 - c).clamp(0.0, 1.0)])
}

/// Which test-gate family the bounds are built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `U_1 = I`, `U_2 = H`.
    TwoGate,
    /// Adds `U_3 = Rx(pi/2)`.
    ThreeGate,
}

/// Influence lower/upper bounds from sampler expectations, clamped to [0, 1].
///
/// Two-gate mode uses only `samplers[0..2]`.
pub fn influence_bounds(samplers: [f64; 3], mode: BoundMode) -> (f64, f64) {
    let (lower, upper) = raw_influence_bounds(samplers, mode);
    (lower.clamp(0.0, 1.0), upper.clamp(0.0, 1.0))
}

/// Unclamped bounds: `max` of the samplers and the (scaled) sum.
pub fn raw_influence_bounds(samplers: [f64; 3], mode: BoundMode) -> (f64, f64) {
    match mode {
        BoundMode::TwoGate => (samplers[0].max(samplers[1]), samplers[0] + samplers[1]),
        BoundMode::ThreeGate => (
            samplers[0].max(samplers[1]).max(samplers[2]),
            0.5 * (samplers[0] + samplers[1] + samplers[2]),
        ),
    }
}

/// Diagonal-weight decomposition of chi on a subset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceDiagnostics {
    pub o: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_o: f64,
    pub b_o: f64,
    pub c_o: f64,
    pub d: f64,
}

impl InfluenceDiagnostics {
    /// `min(A,B) >= O >= A+B-1` and `min(A,B,C) >= O >= (A+B+C-1)/2`.
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        let two = self.a.min(self.b) + tol >= self.o && self.o + tol >= self.a + self.b - 1.0;
        let three = self.a.min(self.b).min(self.c) + tol >= self.o
            && self.o + tol >= 0.5 * (self.a + self.b + self.c - 1.0);
        two && three
    }
}

pub fn influence_diagnostics(chi: &ChiMatrix, s: &QubitSubset) -> Result<InfluenceDiagnostics> {
    check_subset(chi, s)?;
    if s.is_empty() {
        return Err(Error::EmptySubset);
    }
    let o = restricted_diagonal_sum(chi, s, |v| v == 0);
    let a = restricted_diagonal_sum(chi, s, |v| v == 0 || v == 3);
    let b = restricted_diagonal_sum(chi, s, |v| v == 0 || v == 1);
    let c = restricted_diagonal_sum(chi, s, |v| v == 0 || v == 2);
    let total: f64 = chi.diagonal().iter().sum();
    let a_o = (a - o).max(0.0);
    let b_o = (b - o).max(0.0);
    let c_o = (c - o).max(0.0);
    let d = (total - (o + a_o + b_o + c_o)).max(0.0);
    Ok(InfluenceDiagnostics { o, a, b, c, a_o, b_o, c_o, d })
}

// ---------------------------------------------------------------------------
// fidelity and distance

fn check_same_n(a: &ChiMatrix, b: &ChiMatrix) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::Dimension { expected: a.m.nrows(), found: b.m.nrows() });
    }
    Ok(())
}

/// `F = (Tr sqrt(sqrt(a) b sqrt(a)))^2`.
pub fn process_fidelity(a: &ChiMatrix, b: &ChiMatrix) -> Result<f64> {
    check_same_n(a, b)?;
    for (name, m) in [("first", a), ("second", b)] {
        let min = crate::linalg::min_eigenvalue(&m.m);
        if min < -PSD_TOL {
            return Err(Error::Validation(format!("{name} chi matrix is not PSD (min eigenvalue {min:.3e})")));
        }
    }
    let (values, vectors) = hermitian_eigen(&a.m);
    let root = spectral_map(&values, &vectors, |l| l.max(0.0).sqrt());
    let inner = &root * &b.m * &root;
    let (inner_values, _) = hermitian_eigen(&inner);
    let s: f64 = inner_values.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((s * s).clamp(0.0, 1.0))
}

/// `D = ||a - b||_F / sqrt(2)`.
pub fn process_distance(a: &ChiMatrix, b: &ChiMatrix) -> Result<f64> {
    check_same_n(a, b)?;
    Ok(frobenius(&(&a.m - &b.m)) / std::f64::consts::SQRT_2)
}

// ---------------------------------------------------------------------------
// sub-processes

/// Maps a |S|-digit local Pauli index onto the full register (zeros elsewhere).
fn scatter_digits(local: usize, qubits: &[usize], n: usize) -> usize {
    let k = qubits.len();
    qubits.iter().enumerate().fold(0usize, |acc, (j, &q)| {
        let v = (local >> (2 * (k - 1 - j))) & 3;
        acc | (v << (2 * (n - q)))
    })
}

fn gather_digits(x: usize, qubits: &[usize], n: usize) -> usize {
    qubits.iter().fold(0usize, |acc, &q| (acc << 2) | digit(x, n, q))
}

/// chi of `rho_S -> Tr_{S^c}[Phi(rho_S (x) I/2^{|S^c|})]`, with S in ascending qubit order.
pub fn reduce_subprocess(chi: &ChiMatrix, s: &QubitSubset) -> Result<ChiMatrix> {
    check_subset(chi, s)?;
    if s.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = chi.n();
    let qubits = s.qubits();
    let k = qubits.len();
    let nb_local = 1usize << (2 * k);
    let s_digit_mask = scatter_digits(nb_local - 1, &qubits, n);
    let mut out = CMatrix::zeros(nb_local, nb_local);
    for x in 0..chi.m.nrows() {
        let rest = x & !s_digit_mask;
        let xs = gather_digits(x, &qubits, n);
        for ys in 0..nb_local {
            let y = rest | scatter_digits(ys, &qubits, n);
            out[(xs, ys)] += chi.m[(x, y)];
        }
    }
    Ok(ChiMatrix::new_unchecked(k, out))
}

/// chi of `Phi_T (x) I_{T^c}` on the `t.n()`-qubit register.
pub fn tensor_with_identity(chi_t: &ChiMatrix, t: &QubitSubset) -> Result<ChiMatrix> {
    if chi_t.n() != t.len() {
        return Err(Error::InvalidArgument(format!(
            "{}-qubit sub-process cannot be placed on {} qubits",
            chi_t.n(),
            t.len()
        )));
    }
    let n = t.n();
    let qubits = t.qubits();
    let nb = 1usize << (2 * n);
    let mut out = CMatrix::zeros(nb, nb);
    let local = chi_t.m.nrows();
    for xs in 0..local {
        let x = scatter_digits(xs, &qubits, n);
        for ys in 0..local {
            out[(x, scatter_digits(ys, &qubits, n))] = chi_t.m[(xs, ys)];
        }
    }
    Ok(ChiMatrix::new_unchecked(n, out))
}

/// The T-junta approximation `Phi_T (x) I_{T^c}`; an empty `T` gives the identity.
pub fn junta_approximation(chi: &ChiMatrix, t: &QubitSubset) -> Result<ChiMatrix> {
    check_subset(chi, t)?;
    if t.is_empty() {
        return Ok(ChiMatrix::identity(chi.n()));
    }
    tensor_with_identity(&reduce_subprocess(chi, t)?, t)
}
