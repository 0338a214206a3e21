//! Compressed-row complex sparse matrices.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Square complex matrix in CSR form. Explicit zeros are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        SparseOperator {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// entries that end up exactly zero are dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}×{dim}");
            *rows[r].entry(c).or_insert(ZERO) += v;
        }
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != ZERO {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        SparseOperator {
            dim,
            indptr,
            indices,
            values,
        }
    }

    pub fn diagonal(values: impl IntoIterator<Item = C64>) -> Self {
        let values: Vec<C64> = values.into_iter().collect();
        let dim = values.len();
        SparseOperator::from_triplets(dim, values.into_iter().enumerate().map(|(i, v)| (i, i, v)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let span = self.indptr[row]..self.indptr[row + 1];
        match self.indices[span.clone()].binary_search(&col) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    /// Row `r` as (column, value) pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    /// `out += scale · A · x`.
    pub fn apply_add(&self, scale: C64, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *o += scale * acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        self.apply_add(C64::new(1.0, 0.0), x, &mut out);
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        SparseOperator::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scaled(&self, s: C64) -> Self {
        SparseOperator::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &SparseOperator) -> Self {
        assert_eq!(self.dim, other.dim);
        SparseOperator::from_triplets(self.dim, self.triplets().chain(other.triplets()))
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &SparseOperator) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut triplets = Vec::new();
        for (r, k, a) in self.triplets() {
            for (c, b) in other.row(k) {
                triplets.push((r, c, a * b));
            }
        }
        SparseOperator::from_triplets(self.dim, triplets)
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &SparseOperator) -> Self {
        self.matmul(other).add(&other.matmul(self).scaled(C64::new(-1.0, 0.0)))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// max |A − A†| over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.add(&self.adjoint().scaled(C64::new(-1.0, 0.0))).max_abs()
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut dense = vec![vec![ZERO; self.dim]; self.dim];
        for (r, c, v) in self.triplets() {
            dense[r][c] = v;
        }
        dense
    }

    /// Count of stored entries off the diagonal.
    pub fn off_diagonal_nnz(&self) -> usize {
        self.triplets().filter(|&(r, c, _)| r != c).count()
    }
}
