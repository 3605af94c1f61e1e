//! Dense and sparse linear-algebra services.
//!
//! Dense matrices are `ndarray` arrays of [`C64`]. Eigendecompositions and
//! sparse LU factorizations are delegated to `faer`.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use ndarray::{Array1, Array2, ArrayView2};

use crate::{Error, Result, C64};

/// Hermitian eigendecomposition `h = V diag(w) V†`, eigenvalues ascending.
pub fn eigh(h: ArrayView2<'_, C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::InvalidArgument("eigh needs a square matrix".into()));
    }
    let m = Mat::<C64>::from_fn(n, n, |i, j| h[[i, j]]);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..n).map(|i| s[i].re).collect();
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| u[(i, j)]);
    Ok((values, vectors))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(h: ArrayView2<'_, C64>) -> Result<Vec<f64>> {
    let n = h.nrows();
    let m = Mat::<C64>::from_fn(n, n, |i, j| h[[i, j]]);
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("eigenvalues failed: {e:?}")))
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn expm_hermitian(h: ArrayView2<'_, C64>, t: f64) -> Result<Array2<C64>> {
    let (w, v) = eigh(h)?;
    let mut vd = v.clone();
    for (j, wj) in w.iter().enumerate() {
        let ph = C64::from_polar(1.0, -wj * t);
        vd.column_mut(j).mapv_inplace(|x| x * ph);
    }
    Ok(vd.dot(&dagger(v.view())))
}

/// Conjugate transpose.
pub fn dagger(a: ArrayView2<'_, C64>) -> Array2<C64> {
    a.t().mapv(|x| x.conj())
}

/// Largest elementwise modulus of `a - a†`.
pub fn hermiticity_defect(a: ArrayView2<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn trace(a: ArrayView2<'_, C64>) -> C64 {
    a.diag().sum()
}

/// Nonzero entries of a dense matrix as `(row, col, value)`.
pub fn nonzeros(a: ArrayView2<'_, C64>) -> Vec<(usize, usize, C64)> {
    a.indexed_iter()
        .filter(|(_, v)| v.re != 0.0 || v.im != 0.0)
        .map(|((i, j), v)| (i, j, *v))
        .collect()
}

/// Compressed-sparse-row complex matrix.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Builds from triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, C64)>) -> Self {
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            debug_assert!(i < nrows && j < ncols);
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        let mut m = SparseMatrix { nrows, ncols, indptr, indices, values };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let v = self.values[k];
                if v.re != 0.0 || v.im != 0.0 {
                    indices.push(self.indices[k]);
                    values.push(v);
                }
            }
            indptr[i + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.indptr[i]..self.indptr[i + 1]).map(move |k| (i, self.indices[k], self.values[k]))
        })
    }

    /// `y = A x`
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// Row-wise transposed product `yᵀ = xᵀ A`.
    pub fn vecmat(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.ncols];
        for (i, xi) in x.iter().enumerate() {
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += self.values[k] * xi;
            }
        }
        y
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| (self.indptr[i]..self.indptr[i + 1]).map(|k| self.values[k].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut a = Array2::zeros((self.nrows, self.ncols));
        for (i, j, v) in self.iter() {
            a[[i, j]] += v;
        }
        a
    }

    /// Solves `A x = b` by sparse LU with partial pivoting.
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        if self.nrows != self.ncols {
            return Err(Error::Linalg("solve needs a square matrix".into()));
        }
        let trips: Vec<Triplet<usize, usize, C64>> =
            self.iter().map(|(row, col, val)| Triplet { row, col, val }).collect();
        let a = SparseColMat::<usize, C64>::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| Error::Linalg(format!("sparse assembly failed: {e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::Linalg(format!("sparse LU failed: {e:?}")))?;
        let rhs = Mat::<C64>::from_fn(b.len(), 1, |i, _| b[i]);
        let x = lu.solve(&rhs);
        Ok((0..b.len()).map(|i| x[(i, 0)]).collect())
    }
}

/// Column-stacked vectorization, `vec(ρ)[i + d j] = ρ[i, j]`.
pub fn vectorize(a: ArrayView2<'_, C64>) -> Vec<C64> {
    let d = a.nrows();
    let mut v = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            v.push(a[[i, j]]);
        }
    }
    v
}

pub fn unvectorize(v: &[C64], d: usize) -> Array2<C64> {
    Array2::from_shape_fn((d, d), |(i, j)| v[i + d * j])
}

/// Euclidean norm of a complex vector.
pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eigh_reconstructs_matrix() {
        let h = ndarray::array![[c(2.0, 0.0), c(0.5, -1.0)], [c(0.5, 1.0), c(-1.0, 0.0)]];
        let (w, v) = eigh(h.view()).unwrap();
        assert!(w[0] <= w[1]);
        let mut vw = v.clone();
        for j in 0..2 {
            vw.column_mut(j).mapv_inplace(|x| x * w[j]);
        }
        let back = vw.dot(&dagger(v.view()));
        for (a, b) in back.iter().zip(h.iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn expm_of_pauli_x() {
        let sx = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let u = expm_hermitian(sx.view(), 0.3).unwrap();
        assert_abs_diff_eq!((u[[0, 0]] - c(0.3f64.cos(), 0.0)).norm(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!((u[[0, 1]] - c(0.0, -(0.3f64.sin()))).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn sparse_sums_duplicates_and_solves() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, c(1.0, 0.0)), (0, 0, c(1.0, 0.0)), (1, 1, c(0.0, 1.0)), (0, 1, c(0.0, 0.0))],
        );
        assert_eq!(m.nnz(), 2);
        let x = m.solve(&[c(4.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!((x[0] - c(2.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((x[1] - c(0.0, -1.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn vectorization_is_column_stacking() {
        let a = ndarray::array![[c(1.0, 0.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]];
        let v = vectorize(a.view());
        assert_eq!(v[1], c(3.0, 0.0));
        assert_eq!(unvectorize(&v, 2), a);
    }
}
