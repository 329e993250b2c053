//! Compressed sparse row storage for symmetric matrices, backed by faer's
//! sparse Cholesky for solves.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

use crate::error::{Error, Result};

/// Square sparse matrix in CSR form with sorted, merged column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n × n` matrix, summing duplicate coordinates. Explicit
    /// zeros are kept so that the pattern depends only on the coordinates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut raw = vec![(0usize, 0.0f64); triplets.len()];
        for &(i, j, v) in triplets {
            raw[fill[i]] = (j, v);
            fill[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for i in 0..n {
            let row = &mut raw[counts[i]..counts[i + 1]];
            // stable sort keeps the summation order fixed for a given input order
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == j {
                    s += row[k].1;
                    k += 1;
                }
                cols.push(j);
                vals.push(s);
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "dimension mismatch in sparse product");
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn same_pattern(&self, other: &Self) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.cols == other.cols
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        // Symmetric, so the CSR arrays read as CSC of the same matrix.
        let trips: Vec<Triplet<usize, usize, f64>> = self.triplets().map(|(i, j, v)| Triplet::new(j, i, v)).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &trips)
            .map_err(|e| Error::Solver(format!("matrix construction failed: {e:?}")))
    }

    fn diagnose(&self, failed_at: Option<usize>) -> Error {
        if let Some(i) = (0..self.n).find(|&i| self.row(i).all(|(_, v)| v == 0.0)) {
            return Error::Singular { reason: format!("singular row {i}"), pivot: 0.0 };
        }
        let pivot = self.diagonal().into_iter().fold(f64::INFINITY, f64::min);
        let reason = match failed_at {
            Some(k) => format!("non-positive pivot in column {k} (matrix is not positive definite)"),
            None => "matrix is not positive definite".to_string(),
        };
        Error::Singular { reason, pivot }
    }
}

/// Sparse LLᵀ factorization of a symmetric positive definite matrix.
pub struct Cholesky {
    n: usize,
    llt: Llt<usize, f64>,
    symbolic: SymbolicLlt<usize>,
}

impl Cholesky {
    pub fn factorize(m: &SparseMatrix) -> Result<Self> {
        Self::factorize_with(m, None)
    }

    /// Reuses a symbolic analysis when the sparsity pattern is unchanged.
    pub fn factorize_with(m: &SparseMatrix, symbolic: Option<&SymbolicLlt<usize>>) -> Result<Self> {
        if m.n == 0 {
            return Err(Error::Solver("empty system".into()));
        }
        let a = m.to_faer()?;
        let symbolic = match symbolic {
            Some(s) => s.clone(),
            None => SymbolicLlt::try_new(a.symbolic(), Side::Lower)
                .map_err(|e| Error::Solver(format!("symbolic analysis failed: {e:?}")))?,
        };
        match Llt::try_new_with_symbolic(symbolic.clone(), a.as_ref(), Side::Lower) {
            Ok(llt) => Ok(Self { n: m.n, llt, symbolic }),
            Err(faer::sparse::linalg::LltError::Numeric(
                faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index },
            )) => Err(m.diagnose(Some(index))),
            Err(_) => Err(m.diagnose(None)),
        }
    }

    pub fn symbolic(&self) -> &SymbolicLlt<usize> {
        &self.symbolic
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n, "dimension mismatch in solve");
        let b = Col::<f64>::from_fn(self.n, |i| rhs[i]);
        let x = self.llt.solve(&b);
        (0..self.n).map(|i| x[i]).collect()
    }
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_merged() {
        let m = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 0, 2.0), (1, 1, 3.0), (0, 1, 1.0), (1, 0, 1.0)]);
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 0), 4.0);
        assert!(m.is_symmetric());
        let x = Cholesky::factorize(&m).unwrap().solve(&[5.0, 4.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_and_singular_are_reported() {
        let m = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        match Cholesky::factorize(&m) {
            Err(Error::Singular { pivot, .. }) => assert_eq!(pivot, -1.0),
            _ => panic!("expected failure"),
        }
        let z = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 0.0)]);
        match Cholesky::factorize(&z) {
            Err(Error::Singular { reason, .. }) => assert!(reason.contains("singular row 1")),
            _ => panic!("expected failure"),
        }
    }
}
