//! Dense column-major matrices and a rank-revealing least-squares solver.
//!
//! Least squares goes through Householder QR with column pivoting
//! (Businger-Golub). Numerical rank is the number of diagonal entries of R
//! with `|r_kk| > tol * |r_00|`.

use crate::error::{Mr2Error, Result};
use crate::scalar::Real;

/// Relative rank tolerance applied to the pivoted R diagonal.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![T::zero(); nrows * ncols],
        }
    }

    /// Builds a matrix from columns of equal length.
    pub fn from_columns(columns: Vec<Vec<T>>) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (j, c) in columns.into_iter().enumerate() {
            if c.len() != nrows {
                return Err(Mr2Error::InvalidData(format!(
                    "column {j} has length {}, expected {nrows}",
                    c.len()
                )));
            }
            data.extend(c);
        }
        Ok(Self { nrows, ncols, data })
    }

    /// Builds a matrix from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Mr2Error::InvalidData(format!(
                    "row {i} has length {}, expected {ncols}",
                    r.len()
                )));
            }
            for (j, &v) in r.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.ncols).map(move |j| self.col(j))
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.ncols).map(|j| self[(i, j)]).collect()
    }

    pub fn push_column(&mut self, c: &[T]) -> Result<()> {
        if self.ncols > 0 && c.len() != self.nrows {
            return Err(Mr2Error::InvalidData(format!(
                "column length {} does not match {} rows",
                c.len(),
                self.nrows
            )));
        }
        if self.ncols == 0 {
            self.nrows = c.len();
        }
        self.data.extend_from_slice(c);
        self.ncols += 1;
        Ok(())
    }

    /// Selects a subset of columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.nrows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Self {
            nrows: self.nrows,
            ncols: idx.len(),
            data,
        }
    }

    /// Selects a subset of rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.ncols * idx.len());
        for j in 0..self.ncols {
            let c = self.col(j);
            data.extend(idx.iter().map(|&i| c[i]));
        }
        Self {
            nrows: idx.len(),
            ncols: self.ncols,
            data,
        }
    }

    /// `[1, self]` with a leading column of ones.
    pub fn with_intercept(&self) -> Self {
        let mut data = Vec::with_capacity(self.nrows * (self.ncols + 1));
        data.extend(std::iter::repeat_n(T::one(), self.nrows));
        data.extend_from_slice(&self.data);
        Self {
            nrows: self.nrows,
            ncols: self.ncols + 1,
            data,
        }
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.ncols > 0 && other.ncols > 0 && self.nrows != other.nrows {
            return Err(Mr2Error::InvalidData(format!(
                "cannot stack {} rows with {} rows",
                self.nrows, other.nrows
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            nrows: self.nrows.max(other.nrows),
            ncols: self.ncols + other.ncols,
            data,
        })
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.ncols);
        let mut out = vec![T::zero(); self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == T::zero() {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(self.col(j)) {
                *o = *o + v * xj;
            }
        }
        out
    }

    /// `selfᵀ diag(w) self`, symmetric.
    pub fn weighted_gram(&self, w: Option<&[T]>) -> Self {
        let p = self.ncols;
        let mut g = Self::zeros(p, p);
        for a in 0..p {
            for b in a..p {
                let ca = self.col(a);
                let cb = self.col(b);
                let s: T = match w {
                    Some(w) => ca
                        .iter()
                        .zip(cb)
                        .zip(w)
                        .map(|((&x, &y), &wi)| wi * x * y)
                        .sum(),
                    None => ca.iter().zip(cb).map(|(&x, &y)| x * y).sum(),
                };
                g[(a, b)] = s;
                g[(b, a)] = s;
            }
        }
        g
    }

    /// Every row scaled by the matching entry of `s`.
    pub fn scale_rows(&self, s: &[T]) -> Self {
        let mut out = self.clone();
        for j in 0..self.ncols {
            for (v, &si) in out.col_mut(j).iter_mut().zip(s) {
                *v = *v * si;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows);
        for j in 0..self.ncols {
            for i in 0..self.nrows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "matmul shape mismatch");
        let mut out = Self::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            let col = self.mul_vec(other.col(j));
            out.col_mut(j).copy_from_slice(&col);
        }
        out
    }

    /// Inverse of a square full-rank matrix via pivoted QR.
    pub fn inverse(&self) -> Result<Self> {
        if self.nrows != self.ncols {
            return Err(Mr2Error::InvalidData("inverse of non-square matrix".into()));
        }
        let qr = PivotedQr::new(self.clone());
        qr.require_full_rank(|j| format!("#{j}"))?;
        let p = self.nrows;
        let mut inv = Self::zeros(p, p);
        let mut e = vec![T::zero(); p];
        for j in 0..p {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let x = qr.solve(&e)?;
            inv.col_mut(j).copy_from_slice(&x);
        }
        Ok(inv)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[j * self.nrows + i]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[j * self.nrows + i]
    }
}

/// Compact Householder QR with column pivoting, `A P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr<T> {
    qr: Matrix<T>,
    tau: Vec<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Real> PivotedQr<T> {
    pub fn new(a: Matrix<T>) -> Self {
        Self::with_tolerance(a, T::lit(RANK_TOL))
    }

    pub fn with_tolerance(mut a: Matrix<T>, rel_tol: T) -> Self {
        let (m, n) = (a.nrows, a.ncols);
        let steps = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = vec![T::zero(); steps];
        let mut norms: Vec<T> = (0..n)
            .map(|j| a.col(j).iter().map(|&v| v * v).sum())
            .collect();

        for k in 0..steps {
            let (piv, _) = norms[k..].iter().enumerate().fold(
                (k, T::neg_infinity()),
                |(bi, bv), (off, &v)| {
                    if v > bv {
                        (k + off, v)
                    } else {
                        (bi, bv)
                    }
                },
            );
            if piv != k {
                let (lo, hi) = a.data.split_at_mut(piv * m);
                lo[k * m..(k + 1) * m].swap_with_slice(&mut hi[..m]);
                perm.swap(k, piv);
                norms.swap(k, piv);
            }

            let col = &mut a.data[k * m..(k + 1) * m];
            let norm = col[k..].iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm == T::zero() {
                tau[k] = T::zero();
                continue;
            }
            let x0 = col[k];
            let alpha = if x0 >= T::zero() { -norm } else { norm };
            let v0 = x0 - alpha;
            for v in col[k + 1..].iter_mut() {
                *v = *v / v0;
            }
            tau[k] = (alpha - x0) / alpha;
            col[k] = alpha;

            let (head, tail) = a.data.split_at_mut((k + 1) * m);
            let v = &head[k * m..(k + 1) * m];
            for j in 0..(n - k - 1) {
                let cj = &mut tail[j * m..(j + 1) * m];
                let mut s = cj[k];
                for i in k + 1..m {
                    s = s + v[i] * cj[i];
                }
                s = s * tau[k];
                cj[k] = cj[k] - s;
                for i in k + 1..m {
                    cj[i] = cj[i] - s * v[i];
                }
                // Downdate the partial norm; recompute when cancellation bites.
                let r = cj[k];
                let nn = norms[k + 1 + j] - r * r;
                norms[k + 1 + j] = if nn > norms[k + 1 + j] * T::lit(1e-8) {
                    nn
                } else {
                    cj[k + 1..].iter().map(|&x| x * x).sum()
                };
            }
        }

        let r00 = if steps > 0 {
            a[(0, 0)].abs()
        } else {
            T::zero()
        };
        let rank = (0..steps)
            .take_while(|&k| a[(k, k)].abs() > rel_tol * r00 && a[(k, k)] != T::zero())
            .count();

        Self {
            qr: a,
            tau,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Original column indices in pivot order.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Errors with the names of the columns that fell below the rank
    /// tolerance, in their original order.
    pub fn require_full_rank(&self, name: impl Fn(usize) -> String) -> Result<()> {
        if self.rank == self.qr.ncols {
            return Ok(());
        }
        let mut dep: Vec<usize> = self.perm[self.rank..].to_vec();
        dep.sort_unstable();
        Err(Mr2Error::Collinearity {
            columns: dep.into_iter().map(name).collect(),
        })
    }

    fn apply_qt(&self, b: &mut [T]) {
        let m = self.qr.nrows;
        for (k, &t) in self.tau.iter().enumerate() {
            if t == T::zero() {
                continue;
            }
            let v = self.qr.col(k);
            let mut s = b[k];
            for i in k + 1..m {
                s = s + v[i] * b[i];
            }
            s = s * t;
            b[k] = b[k] - s;
            for i in k + 1..m {
                b[i] = b[i] - s * v[i];
            }
        }
    }

    /// Least-squares solution of `A x ≈ b`. Requires full column rank.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let (m, n) = (self.qr.nrows, self.qr.ncols);
        if b.len() != m {
            return Err(Mr2Error::InvalidData(format!(
                "right-hand side has length {}, expected {m}",
                b.len()
            )));
        }
        self.require_full_rank(|j| format!("#{j}"))?;
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        let mut y = vec![T::zero(); n];
        for k in (0..n).rev() {
            let mut s = qtb[k];
            for j in k + 1..n {
                s = s - self.qr[(k, j)] * y[j];
            }
            y[k] = s / self.qr[(k, k)];
        }
        let mut x = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        Ok(x)
    }
}

/// Ordinary (optionally weighted) least-squares fit.
#[derive(Debug, Clone)]
pub struct LeastSquares<T> {
    pub coef: Vec<T>,
    pub fitted: Vec<T>,
    pub residuals: Vec<T>,
}

impl<T: Real> LeastSquares<T> {
    /// Weighted residual sum of squares.
    pub fn rss(&self, w: Option<&[T]>) -> T {
        match w {
            Some(w) => self
                .residuals
                .iter()
                .zip(w)
                .map(|(&r, &wi)| wi * r * r)
                .sum(),
            None => self.residuals.iter().map(|&r| r * r).sum(),
        }
    }
}

/// Least squares of `y` on the columns of `x`, with optional row weights.
///
/// `name` maps a design column index to a label for collinearity errors.
pub fn least_squares<T: Real>(
    x: &Matrix<T>,
    y: &[T],
    w: Option<&[T]>,
    name: impl Fn(usize) -> String,
) -> Result<LeastSquares<T>> {
    let (design, rhs) = match w {
        Some(w) => {
            let sw: Vec<T> = w.iter().map(|&v| v.sqrt()).collect();
            let rhs: Vec<T> = y.iter().zip(&sw).map(|(&v, &s)| v * s).collect();
            (x.scale_rows(&sw), rhs)
        }
        None => (x.clone(), y.to_vec()),
    };
    let qr = PivotedQr::new(design);
    qr.require_full_rank(&name)?;
    let coef = qr.solve(&rhs)?;
    let fitted = x.mul_vec(&coef);
    let residuals = y.iter().zip(&fitted).map(|(&a, &b)| a - b).collect();
    Ok(LeastSquares {
        coef,
        fitted,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exact_fit_recovers_coefficients() {
        let x = Matrix::from_rows(&[
            vec![1.0, 0.0, 2.0],
            vec![1.0, 1.0, -1.0],
            vec![1.0, 2.0, 0.5],
            vec![1.0, 3.0, 4.0],
            vec![1.0, 4.0, -2.0],
        ])
        .unwrap();
        let beta = [0.5, -1.25, 2.0];
        let y = x.mul_vec(&beta);
        let fit = least_squares(&x, &y, None, |j| j.to_string()).unwrap();
        for (a, b) in fit.coef.iter().zip(beta) {
            assert!(close(*a, b, 1e-12), "{a} vs {b}");
        }
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn overdetermined_matches_normal_equations() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = i as f64;
                vec![1.0, t, (t * 0.7).sin()]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..20)
            .map(|i| (i as f64 * 1.3).cos() + 0.1 * i as f64)
            .collect();
        let fit = least_squares(&x, &y, None, |j| j.to_string()).unwrap();
        // XᵀX b = Xᵀy
        let g = x.weighted_gram(None);
        let gb = g.mul_vec(&fit.coef);
        for j in 0..3 {
            let xty: f64 = x.col(j).iter().zip(&y).map(|(a, b)| a * b).sum();
            assert!(close(gb[j], xty, 1e-10));
        }
    }

    #[test]
    fn collinear_columns_are_named() {
        let x = Matrix::from_columns(vec![
            vec![1.0, 1.0, 1.0, 1.0],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![2.0, 4.0, 6.0, 8.0],
        ])
        .unwrap();
        let err = least_squares(&x, &[1.0, 2.0, 3.0, 5.0], None, |j| format!("c{j}")).unwrap_err();
        match err {
            Mr2Error::Collinearity { columns } => {
                assert_eq!(columns.len(), 1);
                assert!(columns[0] == "c1" || columns[0] == "c2");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn weighted_equals_row_replication() {
        // Weight 2 on a row is the same as duplicating it.
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let y = [1.0, 0.0, 4.0];
        let w = [1.0, 2.0, 1.0];
        let fw = least_squares(&x, &y, Some(&w), |j| j.to_string()).unwrap();
        let xd = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 3.0],
        ])
        .unwrap();
        let fd = least_squares(&xd, &[1.0, 0.0, 0.0, 4.0], None, |j| j.to_string()).unwrap();
        for (a, b) in fw.coef.iter().zip(&fd.coef) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let a: Matrix<f64> = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let inv = a.inverse().unwrap();
        let id = a.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let x =
            Matrix::<f32>::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]]).unwrap();
        let fit = least_squares(&x, &[2.0, 3.0, 4.0], None, |j| j.to_string()).unwrap();
        assert!((fit.coef[0] - 1.0).abs() < 1e-5);
        assert!((fit.coef[1] - 1.0).abs() < 1e-5);
    }
}
