//! Compressed-sparse-row complex matrices, used for the master-equation
//! operators where the truncated Fock-space matrices are mostly zeros.

use super::dense::CMat;
use crate::scalar::{czero, Cx, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Cx<T>>,
}

impl<T: Real> Csr<T> {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, Cx<T>)]) -> Self {
        let mut sorted: Vec<(usize, usize, Cx<T>)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, Cx<T>)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) out of bounds");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 = last.2 + v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != czero());
        let mut indptr = vec![0usize; rows + 1];
        for t in &merged {
            indptr[t.0 + 1] += 1;
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            rows,
            cols,
            indptr,
            indices: merged.iter().map(|t| t.1).collect(),
            values: merged.iter().map(|t| t.2).collect(),
        }
    }

    pub fn from_dense(m: &CMat<T>) -> Self {
        let mut trip = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] != czero() {
                    trip.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), &trip)
    }

    pub fn identity(n: usize) -> Self {
        let trip: Vec<_> = (0..n).map(|i| (i, i, Cx::new(T::one(), T::zero()))).collect();
        Self::from_triplets(n, n, &trip)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, Cx<T>)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                out.push((i, self.indices[k], self.values[k]));
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMat<T> {
        let mut m = CMat::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let trip: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.cols, self.rows, &trip)
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = *v * s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut trip = self.triplets();
        trip.extend(other.triplets());
        Self::from_triplets(self.rows, self.cols, &trip)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut trip = Vec::new();
        for i in 0..self.rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let mid = self.indices[k];
                let a = self.values[k];
                for l in other.indptr[mid]..other.indptr[mid + 1] {
                    trip.push((i, other.indices[l], a * other.values[l]));
                }
            }
        }
        Self::from_triplets(self.rows, other.cols, &trip)
    }

    pub fn mul_vec(&self, v: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (self.indptr[i]..self.indptr[i + 1]).fold(czero(), |acc, k| acc + self.values[k] * v[self.indices[k]])
            })
            .collect()
    }

    /// `self * b` for a dense right factor.
    pub fn mul_dense(&self, b: &CMat<T>) -> CMat<T> {
        assert_eq!(self.cols, b.rows());
        let n = b.cols();
        let mut out = CMat::zeros(self.rows, n);
        let src = b.as_slice();
        let dst = out.as_mut_slice();
        for i in 0..self.rows {
            let row = &mut dst[i * n..(i + 1) * n];
            for k in self.indptr[i]..self.indptr[i + 1] {
                let a = self.values[k];
                let j = self.indices[k];
                for (o, &x) in row.iter_mut().zip(&src[j * n..(j + 1) * n]) {
                    *o = *o + a * x;
                }
            }
        }
        out
    }

    /// `out += s * self * b` for a dense right factor.
    pub fn mul_dense_acc(&self, s: Cx<T>, b: &CMat<T>, out: &mut CMat<T>) {
        assert_eq!(self.cols, b.rows());
        assert_eq!((out.rows(), out.cols()), (self.rows, b.cols()));
        let n = b.cols();
        let src = b.as_slice();
        let dst = out.as_mut_slice();
        for i in 0..self.rows {
            let row = &mut dst[i * n..(i + 1) * n];
            for k in self.indptr[i]..self.indptr[i + 1] {
                let a = s * self.values[k];
                let j = self.indices[k];
                for (o, &x) in row.iter_mut().zip(&src[j * n..(j + 1) * n]) {
                    *o = *o + a * x;
                }
            }
        }
    }

    /// `<u| self |v>`.
    pub fn expectation(&self, u: &[Cx<T>], v: &[Cx<T>]) -> Cx<T> {
        let av = self.mul_vec(v);
        u.iter().zip(&av).fold(czero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// `Tr(self * rho)` without forming the product.
    pub fn trace_with(&self, rho: &CMat<T>) -> Cx<T> {
        let mut acc = czero();
        for i in 0..self.rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc = acc + self.values[k] * rho[(self.indices[k], i)];
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn duplicates_are_summed_and_products_match_dense() {
        let a = Csr::from_triplets(
            3,
            3,
            &[(0, 1, cx(1.0, 0.0)), (0, 1, cx(0.5, 1.0)), (2, 0, cx(0.0, -2.0)), (1, 1, cx(3.0, 0.0))],
        );
        assert_eq!(a.nnz(), 3);
        let b = CMat::from_fn(3, 2, |i, j| cx(i as f64 + 1.0, j as f64 - 0.5));
        let got = a.mul_dense(&b);
        let want = a.to_dense().matmul(&b);
        assert!(got.max_abs_diff(&want) < 1e-15);
        assert!(a.adjoint().to_dense().max_abs_diff(&a.to_dense().adjoint()) == 0.0);
        let sq = a.matmul(&a).to_dense();
        assert!(sq.max_abs_diff(&a.to_dense().matmul(&a.to_dense())) < 1e-15);
    }

    #[test]
    fn trace_with_matches_dense_trace() {
        let a = Csr::from_triplets(2, 2, &[(0, 1, cx(1.0, 2.0)), (1, 0, cx(-1.0, 0.0))]);
        let rho = CMat::from_fn(2, 2, |i, j| cx(i as f64 * 2.0 + j as f64, 0.3));
        let want = a.to_dense().matmul(&rho).trace();
        assert!((a.trace_with(&rho) - want).norm() < 1e-15);
    }
}
