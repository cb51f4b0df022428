//! Qubit subsets as 64-bit masks.
//!
//! Qubits are numbered `1..=n`; qubit `i` occupies bit `i - 1` of the mask.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest qubit count representable by a [`QubitSubset`].
pub const MAX_QUBITS: usize = 64;

/// A subset of the qubits `1..=n` of an `n`-qubit register.
///
/// Serializes as `{"n": .., "qubits": [..]}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "SubsetRecord", try_from = "SubsetRecord")]
pub struct QubitSubset {
    n: usize,
    mask: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsetRecord {
    n: usize,
    qubits: Vec<usize>,
}

impl From<QubitSubset> for SubsetRecord {
    fn from(s: QubitSubset) -> Self {
        Self { n: s.n, qubits: s.qubits() }
    }
}

impl TryFrom<SubsetRecord> for QubitSubset {
    type Error = Error;

    fn try_from(r: SubsetRecord) -> Result<Self> {
        QubitSubset::from_qubits(r.n, &r.qubits)
    }
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl QubitSubset {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits are supported");
        Self { n, mask: 0 }
    }

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits are supported");
        Self { n, mask: full_mask(n) }
    }

    /// Builds a subset from a raw mask, rejecting bits outside `1..=n`.
    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "{n} qubits exceeds the {MAX_QUBITS}-qubit mask limit"
            )));
        }
        if mask & !full_mask(n) != 0 {
            return Err(Error::InvalidArgument(format!(
                "mask {mask:#x} has bits outside qubits 1..={n}"
            )));
        }
        Ok(Self { n, mask })
    }

    /// Builds a subset from 1-based qubit labels.
    pub fn from_qubits(n: usize, qubits: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &q in qubits {
            if q == 0 || q > n {
                return Err(Error::InvalidArgument(format!(
                    "qubit {q} is outside 1..={n}"
                )));
            }
            mask |= 1 << (q - 1);
        }
        Self::from_mask(n, mask)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, qubit: usize) -> bool {
        qubit >= 1 && qubit <= self.n && self.mask & (1 << (qubit - 1)) != 0
    }

    pub fn complement(&self) -> Self {
        Self { n: self.n, mask: !self.mask & full_mask(self.n) }
    }

    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self { n: self.n, mask: self.mask | other.mask }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self { n: self.n, mask: self.mask & other.mask }
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.mask & other.mask != 0
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.mask & !other.mask == 0
    }

    /// Qubit labels in ascending order.
    pub fn qubits(&self) -> Vec<usize> {
        (1..=self.n).filter(|&q| self.contains(q)).collect()
    }

    /// All `2^n` subsets of an `n`-qubit register, ordered by mask.
    pub fn all(n: usize) -> impl Iterator<Item = QubitSubset> {
        assert!(n < 64, "enumerating subsets needs n < 64");
        (0..(1u64 << n)).map(move |mask| QubitSubset { n, mask })
    }

    /// All non-empty subsets, ordered by mask.
    pub fn all_nonempty(n: usize) -> impl Iterator<Item = QubitSubset> {
        Self::all(n).skip(1)
    }
}

impl fmt::Display for QubitSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.qubits().iter().map(|q| q.to_string()).collect();
        write!(f, "{{{}}}", labels.join(","))
    }
}
