//! Two-qubit density matrices: Bell and Werner states, white-noise mixing,
//! purity, negativity and Haar-random state generation.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use thiserror::Error;

use crate::linalg::{self, hermitian_eigs, kron, partial_trace, partial_transpose, tol, ComplexMatrix, LinalgError, Subsystem};
use crate::scalar::{cplx, creal, Real};

/// Validity tolerance on Hermiticity, trace and smallest eigenvalue.
pub const STATE_TOL: f64 = 1e-10;
/// A state is labelled entangled when its negativity exceeds this deadband.
pub const ENTANGLEMENT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("{name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("channel is not trace preserving: ||sum K^dag K - I||_F = {residual:e}")]
    NotTracePreserving { residual: f64 },
    #[error("measurement operator invalid: {0}")]
    BadMeasurement(String),
}

pub type Result<T> = std::result::Result<T, StateError>;

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(StateError::OutOfRange { name, value: p });
    }
    Ok(())
}

/// Pauli matrices `[σx, σy, σz]`.
pub fn paulis<T: Real>() -> [ComplexMatrix<T>; 3] {
    let z = T::zero();
    let o = T::one();
    [
        ComplexMatrix::new(2, 2, vec![creal(z), creal(o), creal(o), creal(z)]).unwrap(),
        ComplexMatrix::new(2, 2, vec![creal(z), cplx(z, -o), cplx(z, o), creal(z)]).unwrap(),
        ComplexMatrix::new(2, 2, vec![creal(o), creal(z), creal(z), creal(-o)]).unwrap(),
    ]
}

/// `|φ+><φ+|` with `|φ+> = (|00> + |11>)/√2`, as a bare operator.
pub fn phi_plus_projector<T: Real>() -> ComplexMatrix<T> {
    let h = creal(T::FRAC_1_SQRT_2());
    let z = creal(T::zero());
    ComplexMatrix::projector(&[h, z, z, h])
}

/// Hermitian, unit-trace, positive semidefinite 4x4 matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        if matrix.dims() != (4, 4) {
            return Err(LinalgError::WrongDimension {
                expected: 4,
                rows: matrix.rows(),
                cols: matrix.cols(),
            }
            .into());
        }
        let t = tol::<T>(STATE_TOL);
        if !matrix.is_hermitian(STATE_TOL) {
            return Err(StateError::NotDensity(format!(
                "asymmetry {:e}",
                matrix.hermitian_asymmetry().unwrap_or(T::zero())
            )));
        }
        let tr = matrix.trace();
        if (tr.re - T::one()).abs() > t || tr.im.abs() > t {
            return Err(StateError::NotDensity(format!("trace {tr}")));
        }
        let min = hermitian_eigs(&matrix, false)?.min();
        if min < -t {
            return Err(StateError::NotDensity(format!("minimum eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix<T>) -> Self {
        debug_assert_eq!(matrix.dims(), (4, 4));
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    pub fn maximally_mixed() -> Self {
        Self::from_matrix_unchecked(ComplexMatrix::identity(4).scale(T::lit(0.25)))
    }

    /// Pure state `|ψ><ψ|`; `psi` is normalised here.
    pub fn pure(psi: &[Complex<T>; 4]) -> Self {
        let n = psi.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        let v: Vec<_> = psi.iter().map(|z| *z / n).collect();
        Self::from_matrix_unchecked(ComplexMatrix::projector(&v))
    }

    /// `ρ_A ⊗ ρ_B` from two single-qubit density matrices.
    pub fn product(rho_a: &ComplexMatrix<T>, rho_b: &ComplexMatrix<T>) -> Result<Self> {
        Self::new(kron(rho_a, rho_b))
    }

    pub fn reduced(&self, keep: Subsystem) -> ComplexMatrix<T> {
        partial_trace(&self.matrix, keep).expect("4x4 state")
    }

    /// `U ρ U^dag` for a 4x4 unitary.
    pub fn evolve(&self, u: &ComplexMatrix<T>) -> Result<Self> {
        Ok(Self::from_matrix_unchecked(hermitize(&u.conjugate(&self.matrix)?)))
    }

    pub fn purity(&self) -> T {
        purity(self)
    }

    pub fn negativity(&self) -> T {
        negativity(self)
    }

    pub fn is_entangled(&self) -> bool {
        self.negativity() > T::lit(ENTANGLEMENT_THRESHOLD)
    }
}

pub(crate) fn hermitize<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let n = m.rows();
    ComplexMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * T::lit(0.5))
}

pub fn bell_phi_plus<T: Real>() -> DensityMatrix<T> {
    DensityMatrix::from_matrix_unchecked(phi_plus_projector())
}

/// `(1-p) |φ+><φ+| + p I/4`.
pub fn werner<T: Real>(p: f64) -> Result<DensityMatrix<T>> {
    check_probability("p", p)?;
    let p = T::lit(p);
    let m = phi_plus_projector::<T>()
        .scale(T::one() - p)
        .try_add(&ComplexMatrix::identity(4).scale(p * T::lit(0.25)))?;
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// Single-qubit depolarisation: `(1-p) ρ + p (Tr_q ρ) ⊗ I/2` with the identity
/// placed on qubit `qubit`.
pub fn depolarize<T: Real>(rho: &DensityMatrix<T>, p: f64, qubit: Subsystem) -> Result<DensityMatrix<T>> {
    check_probability("p", p)?;
    let p = T::lit(p);
    let half_id = ComplexMatrix::<T>::identity(2).scale(T::lit(0.5));
    let replaced = match qubit {
        Subsystem::A => kron(&half_id, &rho.reduced(Subsystem::B)),
        Subsystem::B => kron(&rho.reduced(Subsystem::A), &half_id),
    };
    let m = rho.matrix.scale(T::one() - p).try_add(&replaced.scale(p))?;
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// `Tr ρ²`.
pub fn purity<T: Real>(rho: &DensityMatrix<T>) -> T {
    // Hermitian: Tr ρ² = Σ |ρ_ij|²
    rho.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// `(||ρ^{T_B}||_1 - 1)/2`, i.e. the magnitude sum of negative partial
/// transpose eigenvalues.
pub fn negativity<T: Real>(rho: &DensityMatrix<T>) -> T {
    let pt = partial_transpose(&rho.matrix, Subsystem::B).expect("4x4 state");
    let spec = hermitian_eigs(&pt, false).expect("partial transpose of a Hermitian matrix is Hermitian");
    spec.eigenvalues.iter().map(|&l| (-l).max(T::zero())).sum()
}

/// Samples a standard complex Gaussian `(x + iy)/√2`.
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    cplx(
        T::lit(re * std::f64::consts::FRAC_1_SQRT_2),
        T::lit(im * std::f64::consts::FRAC_1_SQRT_2),
    )
}

/// Ginibre matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(dim, dim, |_, _| complex_normal(rng))
}

/// Q factor of `z = QR` with `R` carrying a positive real diagonal, via
/// modified Gram-Schmidt on the columns. Haar distributed when `z` is
/// Ginibre.
pub fn unitary_from_ginibre<T: Real>(z: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let n = z.rows();
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| (0..n).map(|i| z[(i, j)]).collect()).collect();
    for j in 0..n {
        for k in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let qk = &done[k];
            let cj = &mut rest[0];
            let proj: Complex<T> = qk.iter().zip(cj.iter()).map(|(q, c)| q.conj() * *c).sum();
            for (c, q) in cj.iter_mut().zip(qk) {
                *c = *c - proj * *q;
            }
        }
        let norm = cols[j].iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
        for c in cols[j].iter_mut() {
            *c = *c / norm;
        }
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Haar-random unitary of the given dimension.
pub fn random_haar_unitary<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix<T> {
    unitary_from_ginibre(&ginibre(dim, rng))
}

/// Uniform point on the probability simplex of dimension `dim`.
pub fn random_simplex_eigs<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<T> {
    let e: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    let mut out: Vec<T> = e.iter().map(|x| T::lit(x / total)).collect();
    let head: T = out[..dim - 1].iter().copied().sum();
    out[dim - 1] = T::one() - head;
    out
}

/// `U diag(λ) U^dag`.
pub fn density_from_spectrum<T: Real>(spectrum: &[T], u: &ComplexMatrix<T>) -> DensityMatrix<T> {
    let d = ComplexMatrix::from_real_diag(spectrum);
    let m = u.conjugate(&d).expect("4x4 unitary");
    DensityMatrix::from_matrix_unchecked(hermitize(&m))
}

/// Random two-qubit state: uniform simplex spectrum rotated by a Haar
/// unitary. The spectrum is sorted descending so the dominant eigenvector is
/// the first Haar column; this does not change the law.
pub fn random_density_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix<T> {
    let mut lambda = random_simplex_eigs::<T, _>(4, rng);
    lambda.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let u = random_haar_unitary(4, rng);
    density_from_spectrum(&lambda, &u)
}

/// Local unitary `U_A ⊗ U_B`.
pub fn local_unitary<T: Real>(ua: &ComplexMatrix<T>, ub: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    linalg::kron(ua, ub)
}
