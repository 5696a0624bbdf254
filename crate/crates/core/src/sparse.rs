//! Compressed sparse column storage and a pivot-reporting direct solver.
//!
//! Factorization is faer's simplicial LU with a COLAMD column ordering and
//! partial row pivoting, run sequentially so repeated solves are bit-identical.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::PermRef;
use faer::sparse::linalg::colamd;
use faer::sparse::linalg::lu::simplicial::{self, SimplicialLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par};

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest pivot count as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// Real CSC matrix with sorted, duplicate-free row indices in every column.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    val: Vec<f64>,
}

impl CscMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed in input order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> CscMatrix {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].1, triplets[k].0, k));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut val: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            assert!(
                r < nrows && c < ncols,
                "triplet ({r}, {c}) outside {nrows}x{ncols}"
            );
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                val.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            val,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[range.clone()].binary_search(&r) {
            Ok(k) => self.val[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// Stored (row, value) pairs of one column, rows ascending.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |k| (self.row_idx[k], self.val[k]))
    }

    /// y = A·x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for c in 0..self.ncols {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.val[k] * xc;
            }
        }
        y
    }

    /// yᵀ·A·x
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        assert_eq!(y.len(), self.nrows);
        assert_eq!(x.len(), self.ncols);
        let mut total = 0.0;
        for c in 0..self.ncols {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            let mut col = 0.0;
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                col += self.val[k] * y[self.row_idx[k]];
            }
            total += col * xc;
        }
        total
    }

    /// Submatrix keeping the listed rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CscMatrix {
        let mut row_map = vec![usize::MAX; self.nrows];
        for (new, &old) in rows.iter().enumerate() {
            row_map[old] = new;
        }
        let mut col_ptr = vec![0usize; cols.len() + 1];
        let mut row_idx = Vec::new();
        let mut val = Vec::new();
        for (new_c, &c) in cols.iter().enumerate() {
            let mut entries: Vec<(usize, f64)> = (self.col_ptr[c]..self.col_ptr[c + 1])
                .filter(|&k| row_map[self.row_idx[k]] != usize::MAX)
                .map(|k| (row_map[self.row_idx[k]], self.val[k]))
                .collect();
            entries.sort_by_key(|e| e.0);
            for (r, v) in entries {
                row_idx.push(r);
                val.push(v);
            }
            col_ptr[new_c + 1] = row_idx.len();
        }
        CscMatrix {
            nrows: rows.len(),
            ncols: cols.len(),
            col_ptr,
            row_idx,
            val,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for c in 0..self.ncols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                d[self.row_idx[k]][c] = self.val[k];
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.val.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |A − Aᵀ| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.ncols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                worst = worst.max((self.val[k] - self.get(c, r)).abs());
            }
        }
        worst
    }

    fn as_faer(&self) -> SparseColMatRef<'_, usize, f64> {
        let sym = SymbolicSparseColMatRef::new_checked(
            self.nrows,
            self.ncols,
            &self.col_ptr,
            None,
            &self.row_idx,
        );
        SparseColMatRef::new(sym, &self.val)
    }
}

/// LU factors of a square [`CscMatrix`] plus pivot diagnostics.
#[derive(Debug)]
pub struct LuFactor {
    lu: SimplicialLu<usize, f64>,
    row_perm: Vec<usize>,
    row_perm_inv: Vec<usize>,
    col_perm: Vec<usize>,
    col_perm_inv: Vec<usize>,
    pivot_min: f64,
    pivot_max: f64,
}

impl LuFactor {
    /// Factors `a`, failing with [`Error::Singular`] when the smallest pivot
    /// falls below [`SINGULAR_PIVOT_RATIO`] times the largest.
    pub fn new(a: &CscMatrix) -> Result<LuFactor> {
        let n = a.nrows;
        if n != a.ncols {
            return Err(Error::Mismatch(format!(
                "LU of a {}x{} matrix",
                a.nrows, a.ncols
            )));
        }
        let mat = a.as_faer();
        let mut col_perm = vec![0usize; n];
        let mut col_perm_inv = vec![0usize; n];
        let mut buf = MemBuffer::new(colamd::order_scratch::<usize>(n, n, a.nnz()));
        colamd::order(
            &mut col_perm,
            &mut col_perm_inv,
            mat.symbolic(),
            colamd::Control::default(),
            MemStack::new(&mut buf),
        )
        .map_err(|e| Error::InvalidParams(format!("column ordering failed: {e:?}")))?;

        let mut lu = SimplicialLu::new();
        let mut row_perm = vec![0usize; n];
        let mut row_perm_inv = vec![0usize; n];
        let mut buf = MemBuffer::new(simplicial::factorize_simplicial_numeric_lu_scratch::<
            usize,
            f64,
        >(n, n));
        simplicial::factorize_simplicial_numeric_lu(
            &mut row_perm,
            &mut row_perm_inv,
            &mut lu,
            mat,
            PermRef::new_checked(&col_perm, &col_perm_inv, n),
            MemStack::new(&mut buf),
        )
        .map_err(|e| match e {
            LuError::SymbolicSingular { .. } => Error::Singular { pivot_ratio: 0.0 },
            other => Error::InvalidParams(format!("sparse factorization failed: {other:?}")),
        })?;

        let (pivot_min, pivot_max) = diagonal_extrema(&lu, n);
        let factor = LuFactor {
            lu,
            row_perm,
            row_perm_inv,
            col_perm,
            col_perm_inv,
            pivot_min,
            pivot_max,
        };
        if n > 0 && !(factor.pivot_ratio() >= SINGULAR_PIVOT_RATIO) {
            return Err(Error::Singular {
                pivot_ratio: factor.pivot_ratio(),
            });
        }
        Ok(factor)
    }

    pub fn dim(&self) -> usize {
        self.row_perm.len()
    }

    /// Smallest |Uᵢᵢ|.
    pub fn pivot_min(&self) -> f64 {
        self.pivot_min
    }

    pub fn pivot_max(&self) -> f64 {
        self.pivot_max
    }

    pub fn pivot_ratio(&self) -> f64 {
        if self.pivot_max == 0.0 {
            0.0
        } else {
            self.pivot_min / self.pivot_max
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(rhs.len(), n);
        let mut x = rhs.to_vec();
        let mut buf = MemBuffer::new(simplicial::solve_in_place_scratch::<usize, f64>(
            n,
            1,
            Par::Seq,
        ));
        self.lu.solve_in_place_with_conj(
            PermRef::new_checked(&self.row_perm, &self.row_perm_inv, n),
            PermRef::new_checked(&self.col_perm, &self.col_perm_inv, n),
            Conj::No,
            MatMut::from_column_major_slice_mut(&mut x, n, 1),
            Par::Seq,
            MemStack::new(&mut buf),
        );
        x
    }
}

fn diagonal_extrema(lu: &SimplicialLu<usize, f64>, n: usize) -> (f64, f64) {
    let u = lu.u_factor_unsorted();
    let mut diag = vec![0.0f64; n];
    for j in 0..n {
        for (&i, &v) in u.row_idx_of_col_raw(j).iter().zip(u.val_of_col(j)) {
            if i == j {
                diag[j] = v.abs();
            }
        }
    }
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let max = diag.iter().copied().fold(0.0, f64::max);
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a =
            CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (1, 1, 5.0)]);
        assert_eq!(a.to_dense(), vec![vec![4.0, 0.0], vec![2.0, 5.0]]);
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![4.0, 7.0]);
        assert_eq!(a.bilinear(&[1.0, 2.0], &[1.0, 1.0]), 18.0);
        assert_eq!(a.asymmetry(), 2.0);
    }

    #[test]
    fn solves_tridiagonal() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CscMatrix::from_triplets(n, n, &t);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let lu = LuFactor::new(&a).unwrap();
        let y = lu.solve(&b);
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-10);
        }
        assert!(lu.pivot_min() > 0.0 && lu.pivot_ratio() <= 1.0);
    }

    #[test]
    fn needs_row_pivoting() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]);
        let lu = LuFactor::new(&a).unwrap();
        assert_eq!(lu.solve(&[3.0, 4.0]), vec![4.0, 3.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a =
            CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(LuFactor::new(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn select_submatrix() {
        let a =
            CscMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (2, 0, 4.0)]);
        let s = a.select(&[0, 2], &[0, 2]);
        assert_eq!(s.to_dense(), vec![vec![1.0, 0.0], vec![4.0, 3.0]]);
    }
}
