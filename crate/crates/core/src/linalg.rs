//! Dense complex linear-algebra helpers shared by the process representations.
//!
//! Computational-basis indices put qubit 1 in the most significant bit: on an
//! `m`-qubit local space, local qubit `j` (0-based) is bit `m - 1 - j`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn from_rows(rows: &[&[C64]]) -> CMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    CMatrix::from_fn(r, cols, |i, j| rows[i][j])
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are returned in
/// ascending order with eigenvectors as the matching columns.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    hermitian_eigen(a).0[0]
}

/// Rebuilds `V f(Λ) V†` from an eigen-decomposition.
pub fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let d = vectors.nrows();
    let mut out = CMatrix::zeros(d, d);
    for (k, &lambda) in values.iter().enumerate() {
        let w = f(lambda);
        if w == 0.0 {
            continue;
        }
        let v = vectors.column(k);
        out += (v * v.adjoint()).scale(w);
    }
    out
}

/// Square root of a PSD matrix; eigenvalues are clipped at zero first.
pub fn psd_sqrt(a: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(a);
    spectral_map(&values, &vectors, |l| l.max(0.0).sqrt())
}

/// Row-stacking vectorization: `vec(|a><b|) = |a>|b>`.
pub fn vec_row(a: &CMatrix) -> CVector {
    let (r, cols) = a.shape();
    CVector::from_fn(r * cols, |k, _| a[(k / cols, k % cols)])
}

pub fn unvec_row(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Embeds an operator acting on the listed local qubits (0-based, in the
/// operator's own significance order) into an `m`-qubit space.
pub fn embed_operator(op: &CMatrix, positions: &[usize], m: usize) -> CMatrix {
    let k = positions.len();
    assert_eq!(op.nrows(), 1 << k, "operator size must match its qubit count");
    let dim = 1usize << m;
    let target_bits: Vec<usize> = positions.iter().map(|&p| m - 1 - p).collect();
    let op_mask: usize = target_bits.iter().map(|&b| 1usize << b).sum();
    let extract = |idx: usize| -> usize {
        target_bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | ((idx >> b) & 1))
    };
    let deposit = |rest: usize, local: usize| -> usize {
        let mut idx = rest;
        for (j, &b) in target_bits.iter().enumerate() {
            if (local >> (k - 1 - j)) & 1 == 1 {
                idx |= 1 << b;
            }
        }
        idx
    };
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let rest = col & !op_mask;
        let lc = extract(col);
        for lr in 0..(1usize << k) {
            let v = op[(lr, lc)];
            if v != ZERO {
                out[(deposit(rest, lr), col)] = v;
            }
        }
    }
    out
}

/// Partial trace of an `m`-qubit operator keeping the listed local qubits
/// (ascending, 0-based). The result is ordered like `keep`.
pub fn partial_trace_keep(rho: &CMatrix, m: usize, keep: &[usize]) -> CMatrix {
    let k = keep.len();
    let keep_bits: Vec<usize> = keep.iter().map(|&p| m - 1 - p).collect();
    let keep_mask: usize = keep_bits.iter().map(|&b| 1usize << b).sum();
    let extract = |idx: usize| -> usize {
        keep_bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | ((idx >> b) & 1))
    };
    let dim = 1usize << m;
    let mut out = CMatrix::zeros(1 << k, 1 << k);
    for r in 0..dim {
        for col in 0..dim {
            if (r & !keep_mask) == (col & !keep_mask) {
                out[(extract(r), extract(col))] += rho[(r, col)];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> CMatrix {
        from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
    }

    fn z() -> CMatrix {
        from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
    }

    #[test]
    fn embed_matches_kronecker() {
        let e = embed_operator(&x(), &[1], 3);
        let expect = kron_all([&identity(2), &x(), &identity(2)]);
        assert!(frobenius(&(e - expect)) < 1e-15);

        // Reversed order on two qubits swaps the tensor factors.
        let xz = kron(&x(), &z());
        let e = embed_operator(&xz, &[2, 0], 3);
        let expect = kron_all([&z(), &identity(2), &x()]);
        assert!(frobenius(&(e - expect)) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = from_rows(&[&[c(0.7, 0.0), c(0.1, 0.2)], &[c(0.1, -0.2), c(0.3, 0.0)]]);
        let b = from_rows(&[&[c(0.5, 0.0), ZERO], &[ZERO, c(0.5, 0.0)]]);
        let rho = kron(&a, &b);
        assert!(frobenius(&(partial_trace_keep(&rho, 2, &[0]) - &a)) < 1e-15);
        assert!(frobenius(&(partial_trace_keep(&rho, 2, &[1]) - &b)) < 1e-15);
    }

    #[test]
    fn vec_is_row_stacking() {
        let m = from_rows(&[&[c(1.0, 0.0), c(2.0, 0.0)], &[c(3.0, 0.0), c(4.0, 0.0)]]);
        let v = vec_row(&m);
        assert_eq!(v[1], c(2.0, 0.0));
        assert_eq!(v[2], c(3.0, 0.0));
        assert_eq!(unvec_row(&v, 2), m);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = from_rows(&[&[c(2.0, 0.0), c(0.0, 1.0)], &[c(0.0, -1.0), c(2.0, 0.0)]]);
        let s = psd_sqrt(&a);
        assert!(frobenius(&(&s * &s - a)) < 1e-12);
    }
}
