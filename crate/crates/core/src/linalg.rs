//! Dense complex matrices sized for two-qubit work (2, 3, 4 and 16 dimensional
//! operators) and a cyclic Jacobi eigensolver for Hermitian matrices.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{creal, Real};

/// Relative tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Jacobi stops once the off-diagonal Frobenius norm drops below this
/// fraction of the input norm.
pub const JACOBI_REL_TOL: f64 = 1e-12;
/// Absolute floor applied to every relative tolerance.
pub const ABS_FLOOR: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    EntryCount {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    WrongDimension {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not Hermitian: ||H - H^dag||_F = {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },
    #[error("Jacobi iteration did not converge: off-diagonal norm {off_norm:e}")]
    NoConvergence { off_norm: f64 },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Tensor factor of a two-qubit operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subsystem {
    A,
    B,
}

/// Tolerance scaled to the precision of `T`.
pub(crate) fn tol<T: Real>(x: f64) -> T {
    T::lit(x).max(T::epsilon() * T::lit(64.0))
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::EntryCount {
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| creal(T::lit(x))).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { creal(T::one()) } else { creal(T::zero()) })
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { creal(diag[i]) } else { creal(T::zero()) })
    }

    /// Outer product `|v><v|`.
    pub fn projector(v: &[Complex<T>]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_c(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// `Tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex<T>> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(LinalgError::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        let mut acc = creal(T::zero());
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc = acc + self[(i, k)] * other[(k, i)];
            }
        }
        Ok(acc)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] = out.data[i * other.cols + j] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self * m * self^dag`.
    pub fn conjugate(&self, m: &Self) -> Result<Self> {
        self.matmul(m)?.matmul(&self.adjoint())
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(LinalgError::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// `||self - self^dag||_F`; `None` for non-square matrices.
    pub fn hermitian_asymmetry(&self) -> Option<T> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        Some(acc.sqrt())
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        match self.hermitian_asymmetry() {
            Some(a) => a <= tol::<T>(rel_tol) * self.frobenius_norm() + tol::<T>(ABS_FLOOR),
            None => false,
        }
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max))
    }

    /// Converts between scalar precisions.
    pub fn cast<U: Real>(&self) -> ComplexMatrix<U> {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
        }
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    /// Panics on inner-dimension mismatch; use [`ComplexMatrix::matmul`] for
    /// a checked product.
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs).expect("matrix product dimensions")
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        self.try_add(rhs).expect("matrix sum dimensions")
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        self.try_sub(rhs).expect("matrix difference dimensions")
    }
}

impl<T: Real> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (ar, ac) = a.dims();
    let (br, bc) = b.dims();
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Real spectrum of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum<T: Real> {
    pub eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: Option<ComplexMatrix<T>>,
}

impl<T: Real> HermitianSpectrum<T> {
    pub fn min(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> T {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// `V diag(λ) V^dag`, when vectors were requested.
    pub fn reconstruct(&self) -> Option<ComplexMatrix<T>> {
        let v = self.eigenvectors.as_ref()?;
        let d = ComplexMatrix::from_real_diag(&self.eigenvalues);
        Some(&(v * &d) * &v.adjoint())
    }
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc = acc + a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
pub fn hermitian_eigs<T: Real>(h: &ComplexMatrix<T>, want_vectors: bool) -> Result<HermitianSpectrum<T>> {
    if !h.is_square() {
        return Err(LinalgError::WrongDimension {
            expected: h.rows().max(h.cols()),
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let norm = h.frobenius_norm();
    let asym = h.hermitian_asymmetry().unwrap_or(T::zero());
    if asym > tol::<T>(HERMITIAN_TOL) * norm + tol::<T>(ABS_FLOOR) {
        return Err(LinalgError::NotHermitian {
            asymmetry: asym.as_f64(),
        });
    }

    let n = h.rows();
    // Work on the exactly Hermitian part.
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * T::lit(0.5));
    let mut v = want_vectors.then(|| ComplexMatrix::<T>::identity(n));
    let threshold = tol::<T>(JACOBI_REL_TOL) * norm + tol::<T>(ABS_FLOOR);
    let half = T::lit(0.5);

    let mut converged = off_diagonal_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= T::tiny() {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // phase e^{-i phi} that makes the (p, q) entry real
                let ph = apq.conj() / mag;
                let theta = (aqq - app) * half / mag;
                let t = if theta >= T::zero() {
                    T::one() / (theta + (T::one() + theta * theta).sqrt())
                } else {
                    -T::one() / (-theta + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let cs = creal(c);
                let ss = creal(s);

                // A <- A G
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cs * akp - ss * ph * akq;
                    a[(k, q)] = ss * akp + cs * ph * akq;
                }
                // A <- G^dag A
                let phc = ph.conj();
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cs * apk - ss * phc * aqk;
                    a[(q, k)] = ss * apk + cs * phc * aqk;
                }
                a[(p, q)] = creal(T::zero());
                a[(q, p)] = creal(T::zero());
                a[(p, p)] = creal(a[(p, p)].re);
                a[(q, q)] = creal(a[(q, q)].re);

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = cs * vkp - ss * ph * vkq;
                        v[(k, q)] = ss * vkp + cs * ph * vkq;
                    }
                }
            }
        }
        converged = off_diagonal_norm(&a) <= threshold;
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            off_norm: off_diagonal_norm(&a).as_f64(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).expect("finite eigenvalues"));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = v.map(|v| ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]));
    Ok(HermitianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn require_4x4<T: Real>(m: &ComplexMatrix<T>) -> Result<()> {
    if m.dims() != (4, 4) {
        return Err(LinalgError::WrongDimension {
            expected: 4,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(())
}

/// Partial transpose of a two-qubit operator on the given factor.
/// Basis index is `2a + b`.
pub fn partial_transpose<T: Real>(m: &ComplexMatrix<T>, subsystem: Subsystem) -> Result<ComplexMatrix<T>> {
    require_4x4(m)?;
    Ok(ComplexMatrix::from_fn(4, 4, |i, j| {
        let (a, b) = (i / 2, i % 2);
        let (a2, b2) = (j / 2, j % 2);
        match subsystem {
            Subsystem::A => m[(2 * a2 + b, 2 * a + b2)],
            Subsystem::B => m[(2 * a + b2, 2 * a2 + b)],
        }
    }))
}

/// Traces out the factor not named by `keep`.
pub fn partial_trace<T: Real>(m: &ComplexMatrix<T>, keep: Subsystem) -> Result<ComplexMatrix<T>> {
    require_4x4(m)?;
    Ok(ComplexMatrix::from_fn(2, 2, |i, j| match keep {
        Subsystem::A => m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)],
        Subsystem::B => m[(i, j)] + m[(2 + i, 2 + j)],
    }))
}

/// Hilbert-Schmidt distance `sqrt(Tr[(a-b)^dag (a-b)])`.
pub fn hs_distance<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<T> {
    Ok(a.try_sub(b)?.frobenius_norm())
}
