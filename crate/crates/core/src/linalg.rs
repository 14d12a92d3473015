//! Dense linear algebra for small Hermitian systems.
//!
//! The radar statistics need `x^H (Q+I)^{-1} x` and `ln det(Q+I)` for
//! Hermitian positive-definite matrices of dimension M (a handful).  A plain
//! Cholesky factorization covers both without forming an inverse.  The module
//! also provides a real 2M x 2M block embedding and a Jacobi eigenvalue
//! routine — deliberately independent code paths used to cross-check the
//! complex computation.

use num_complex::Complex;

use crate::num::Real;
use crate::{Error, Result};

/// Square complex matrix in row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![Complex::new(T::zero(), T::zero()); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("CMatrix::from_rows: not square"));
        }
        Ok(CMatrix { dim, data: rows.iter().flat_map(|r| r.iter().copied()).collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `self + I`, the form every radar solve needs.
    pub fn plus_identity(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out[(i, i)] = out[(i, i)] + Complex::new(T::one(), T::zero());
        }
        out
    }

    /// Largest absolute Hermitian residual `|a_ij - conj(a_ji)|`.
    pub fn hermitian_residual(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = self[(i, j)] - self[(j, i)].conj();
                let mag = (d.re * d.re + d.im * d.im).sqrt();
                if mag > worst {
                    worst = mag;
                }
            }
        }
        worst
    }

    /// Max absolute entry, used to scale tolerances.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| {
            let m = (z.re * z.re + z.im * z.im).sqrt();
            if m > acc {
                m
            } else {
                acc
            }
        })
    }

    pub fn mat_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for j in 0..self.dim {
                    acc = acc + self[(i, j)] * x[j];
                }
                acc
            })
            .collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

/// Cholesky factorization `A = L L^H` of a Hermitian positive-definite
/// matrix, with solves and the log determinant.
#[derive(Clone, Debug)]
pub struct CholeskyComplex<T> {
    l: CMatrix<T>,
}

impl<T: Real> CholeskyComplex<T> {
    /// Factors `a`; fails if a pivot is not strictly positive (matrix not
    /// positive definite within round-off).
    pub fn factor(a: &CMatrix<T>) -> Result<Self> {
        let n = a.dim;
        let mut l = CMatrix::zeros(n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                let v = l[(j, k)];
                d -= v.re * v.re + v.im * v.im;
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::numerical(format!(
                    "Cholesky pivot {d} at index {j}: matrix is not positive definite"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex::new(djj, T::zero());
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = Complex::new(s.re / djj, s.im / djj);
            }
        }
        Ok(CholeskyComplex { l })
    }

    /// `ln det A = 2 sum ln L_jj`.
    pub fn log_det(&self) -> T {
        let mut acc = T::zero();
        for j in 0..self.l.dim {
            acc += self.l[(j, j)].re.ln();
        }
        acc + acc
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut y = self.forward(b);
        let n = self.l.dim;
        // Back substitution with L^H.
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s = s - self.l[(j, i)].conj() * y[j];
            }
            y[i] = Complex::new(s.re / self.l[(i, i)].re, s.im / self.l[(i, i)].re);
        }
        y
    }

    /// The quadratic form `b^H A^{-1} b = |L^{-1} b|^2`, nonnegative and real
    /// by construction.
    pub fn quadratic_form(&self, b: &[Complex<T>]) -> T {
        let y = self.forward(b);
        y.iter().fold(T::zero(), |acc, z| acc + z.re * z.re + z.im * z.im)
    }

    fn forward(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.l.dim;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s = s - self.l[(i, j)] * y[j];
            }
            y[i] = Complex::new(s.re / self.l[(i, i)].re, s.im / self.l[(i, i)].re);
        }
        y
    }
}

/// Square real symmetric matrix in row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> RMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        RMatrix { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cholesky `A = L L^T` log determinant for symmetric positive-definite
    /// input.
    pub fn cholesky_log_det(&self) -> Result<T> {
        let n = self.dim;
        let mut l = vec![T::zero(); n * n];
        let mut acc = T::zero();
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::numerical(format!(
                    "real Cholesky pivot {d} at index {j}: matrix is not positive definite"
                )));
            }
            let djj = d.sqrt();
            acc += djj.ln();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(acc + acc)
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting (the
    /// checker path; no positive-definiteness assumption).
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.dim;
        assert_eq!(b.len(), n);
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let mut pivot = col;
            for row in (col + 1)..n {
                if a[row * n + col].abs() > a[pivot * n + col].abs() {
                    pivot = row;
                }
            }
            if a[pivot * n + col].abs() <= T::epsilon() {
                return Err(Error::numerical("singular matrix in real solve"));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                x.swap(col, pivot);
            }
            let d = a[col * n + col];
            for row in (col + 1)..n {
                let f = a[row * n + col] / d;
                if f == T::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j] * f;
                    a[row * n + j] -= v;
                }
                let v = x[col] * f;
                x[row] -= v;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= a[i * n + j] * x[j];
            }
            x[i] = s / a[i * n + i];
        }
        Ok(x)
    }

    /// Eigenvalues by the cyclic Jacobi method; input must be symmetric.
    /// Quadratic convergence makes ~12 sweeps ample for the sizes used here.
    pub fn jacobi_eigenvalues(&self) -> Vec<T> {
        let n = self.dim;
        let mut a = self.data.clone();
        for _ in 0..30 {
            let mut off = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
            if off.sqrt() <= T::epsilon() * T::from_f64_lossy(n as f64) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (T::from_f64_lossy(2.0) * apq);
                    // Stable tangent of the rotation angle.
                    let t = {
                        let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                        sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
        eig
    }
}

impl<T> std::ops::Index<(usize, usize)> for RMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for RMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

/// Real 2M x 2M block embedding `[[Re, -Im], [Im, Re]]` of a complex matrix.
/// For Hermitian input the result is symmetric, and each eigenvalue of the
/// complex matrix appears twice.
pub fn real_embedding<T: Real>(a: &CMatrix<T>) -> RMatrix<T> {
    let m = a.dim;
    let mut out = RMatrix::zeros(2 * m);
    for i in 0..m {
        for j in 0..m {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + m)] = -z.im;
            out[(i + m, j)] = z.im;
            out[(i + m, j + m)] = z.re;
        }
    }
    out
}

/// Stacks `[Re(x); Im(x)]`, the vector embedding matching [`real_embedding`].
pub fn real_embedding_vec<T: Real>(x: &[Complex<T>]) -> Vec<T> {
    x.iter().map(|z| z.re).chain(x.iter().map(|z| z.im)).collect()
}
