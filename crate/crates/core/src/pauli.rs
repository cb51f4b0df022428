//! Multi-qubit Pauli operators indexed by base-4 strings.
//!
//! A Pauli string `x = (x_1, ..., x_n)` with `x_i` in {0=I, 1=X, 2=Y, 3=Z}
//! flattens to `sum_i x_i * 4^(n - i)`, so qubit 1 is the most significant
//! digit. Every module shares this order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, from_rows, kron_all, CMatrix, C64, I, ONE, ZERO};

/// Base-4 Pauli index vector over `n` qubits.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliIndexVector(Vec<u8>);

impl PauliIndexVector {
    pub fn new(indices: Vec<u8>) -> Result<Self> {
        if let Some(bad) = indices.iter().find(|&&v| v > 3) {
            return Err(Error::InvalidArgument(format!("Pauli index {bad} is not in 0..=3")));
        }
        Ok(Self(indices))
    }

    pub fn decode(index: usize, n: usize) -> Self {
        assert!(index < 1usize << (2 * n), "basis index out of range");
        Self((0..n).map(|i| ((index >> (2 * (n - 1 - i))) & 3) as u8).collect())
    }

    pub fn encode(&self) -> usize {
        self.0.iter().fold(0usize, |acc, &v| (acc << 2) | v as usize)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|&v| ['I', 'X', 'Y', 'Z'][v as usize]).collect()
    }
}

/// The 2x2 matrix of a single-qubit Pauli (0=I, 1=X, 2=Y, 3=Z).
pub fn single_qubit_pauli(k: u8) -> CMatrix {
    match k {
        0 => from_rows(&[&[ONE, ZERO], &[ZERO, ONE]]),
        1 => from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
        2 => from_rows(&[&[ZERO, -I], &[I, ZERO]]),
        3 => from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]),
        _ => panic!("Pauli index {k} is not in 0..=3"),
    }
}

/// Dense matrix of the Pauli string with the given flat index.
pub fn pauli_operator(index: usize, n: usize) -> CMatrix {
    let digits = PauliIndexVector::decode(index, n);
    let factors: Vec<CMatrix> = digits.indices().iter().map(|&k| single_qubit_pauli(k)).collect();
    kron_all(factors.iter())
}

/// All `4^n` Pauli operators in base-4 order. Refuses `n` above `cap`.
pub fn pauli_basis(n: usize, cap: usize) -> Result<Vec<CMatrix>> {
    if n == 0 {
        return Err(Error::InvalidArgument("Pauli basis needs at least one qubit".into()));
    }
    if n > cap {
        return Err(Error::SizeCap { what: "Pauli basis", n, cap });
    }
    Ok((0..1usize << (2 * n)).map(|x| pauli_operator(x, n)).collect())
}

/// A Pauli string in monomial form: column `c` maps to row `c ^ flip` with
/// coefficient `phase[c]`.
#[derive(Clone, Debug)]
pub(crate) struct SparsePauli {
    pub flip: usize,
    pub phase: Vec<C64>,
}

impl SparsePauli {
    pub fn new(index: usize, n: usize) -> Self {
        let d = 1usize << n;
        let digits = PauliIndexVector::decode(index, n);
        let mut flip = 0usize;
        for (q, &k) in digits.indices().iter().enumerate() {
            if k == 1 || k == 2 {
                flip |= 1 << (n - 1 - q);
            }
        }
        let phase = (0..d)
            .map(|col| {
                let mut p = c(1.0, 0.0);
                for (q, &k) in digits.indices().iter().enumerate() {
                    let bit = (col >> (n - 1 - q)) & 1;
                    match (k, bit) {
                        (2, 0) => p *= I,
                        (2, 1) => p *= -I,
                        (3, 1) => p = -p,
                        _ => {}
                    }
                }
                p
            })
            .collect();
        Self { flip, phase }
    }

    /// All `4^n` sparse Paulis in base-4 order.
    pub fn basis(n: usize) -> Vec<Self> {
        (0..1usize << (2 * n)).map(|x| Self::new(x, n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, identity, kron};
    use proptest::prelude::*;

    #[test]
    fn single_qubit_basis() {
        let basis = pauli_basis(1, 12).unwrap();
        assert_eq!(basis.len(), 4);
        assert_eq!(basis[0], identity(2));
        assert_eq!(basis[1][(0, 1)], ONE);
        assert_eq!(basis[2][(0, 1)], -I);
        assert_eq!(basis[2][(1, 0)], I);
        assert_eq!(basis[3][(1, 1)], -ONE);
    }

    #[test]
    fn index_seven_is_x_tensor_z() {
        let basis = pauli_basis(2, 12).unwrap();
        let expect = kron(&single_qubit_pauli(1), &single_qubit_pauli(3));
        assert_eq!(PauliIndexVector::decode(7, 2).label(), "XZ");
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(basis[7][(i, j)], expect[(i, j)]);
            }
        }
    }

    #[test]
    fn basis_elements_unitary_and_hermitian() {
        for p in pauli_basis(2, 12).unwrap() {
            assert!(frobenius(&(&p - p.adjoint())) < 1e-15);
            assert!(frobenius(&(&p * &p - identity(4))) < 1e-15);
        }
    }

    #[test]
    fn size_cap_is_enforced() {
        assert!(matches!(pauli_basis(3, 2), Err(Error::SizeCap { .. })));
        assert!(pauli_basis(0, 2).is_err());
    }

    #[test]
    fn sparse_form_matches_dense() {
        let n = 3;
        for x in 0..64 {
            let dense = pauli_operator(x, n);
            let sp = SparsePauli::new(x, n);
            for col in 0..8 {
                for row in 0..8 {
                    let expect = if row == col ^ sp.flip { sp.phase[col] } else { ZERO };
                    assert_eq!(dense[(row, col)], expect);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(n in 1usize..=8, raw in any::<u64>()) {
            let index = (raw as usize) % (1usize << (2 * n));
            let v = PauliIndexVector::decode(index, n);
            prop_assert_eq!(v.n(), n);
            prop_assert_eq!(v.encode(), index);
        }
    }
}
