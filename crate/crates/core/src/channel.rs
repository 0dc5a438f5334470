//! Single-qubit Kraus channels acting on one arm of a two-qubit state, and
//! their adjoint action on two-qubit measurement operators.

use crate::linalg::{kron, tol, ComplexMatrix, Subsystem};
use crate::scalar::{cplx, creal, Real};
use crate::states::{check_probability, hermitize, paulis, DensityMatrix, Result, StateError, STATE_TOL};

#[derive(Clone, Debug)]
pub struct KrausChannel<T: Real> {
    kraus_ops: Vec<ComplexMatrix<T>>,
    label: String,
}

impl<T: Real> KrausChannel<T> {
    /// Validates that every operator is 2x2 and `Σ K^dag K = I`.
    pub fn new(kraus_ops: Vec<ComplexMatrix<T>>, label: impl Into<String>) -> Result<Self> {
        if kraus_ops.is_empty() || kraus_ops.iter().any(|k| k.dims() != (2, 2)) {
            return Err(StateError::BadMeasurement("Kraus operators must be 2x2".into()));
        }
        let ch = Self {
            kraus_ops,
            label: label.into(),
        };
        let residual = ch.completeness_residual();
        if residual > tol::<T>(STATE_TOL) {
            return Err(StateError::NotTracePreserving {
                residual: residual.as_f64(),
            });
        }
        Ok(ch)
    }

    pub fn identity() -> Self {
        Self {
            kraus_ops: vec![ComplexMatrix::identity(2)],
            label: "identity".into(),
        }
    }

    /// `ρ -> (1-p) ρ + p I/2`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        check_probability("p", p)?;
        let [x, y, z] = paulis::<T>();
        let a = T::lit((1.0 - 0.75 * p).sqrt());
        let b = T::lit((0.25 * p).sqrt());
        Self::new(
            vec![ComplexMatrix::identity(2).scale(a), x.scale(b), y.scale(b), z.scale(b)],
            format!("depolarizing({p})"),
        )
    }

    pub fn phase_damping(lambda: f64) -> Result<Self> {
        check_probability("lambda", lambda)?;
        let zero = T::zero();
        let k0 = ComplexMatrix::from_real_diag(&[T::one(), T::lit((1.0 - lambda).sqrt())]);
        let k1 = ComplexMatrix::from_real_diag(&[zero, T::lit(lambda.sqrt())]);
        Self::new(vec![k0, k1], format!("phase_damping({lambda})"))
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_probability("gamma", gamma)?;
        let z = creal(T::zero());
        let k0 = ComplexMatrix::new(2, 2, vec![creal(T::one()), z, z, creal(T::lit((1.0 - gamma).sqrt()))])?;
        let k1 = ComplexMatrix::new(2, 2, vec![z, creal(T::lit(gamma.sqrt())), z, z])?;
        Self::new(vec![k0, k1], format!("amplitude_damping({gamma})"))
    }

    /// Conjugation by a fixed unitary; `u` is only checked through the
    /// completeness relation.
    pub fn unitary(u: ComplexMatrix<T>) -> Result<Self> {
        Self::new(vec![u], "unitary")
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix<T>] {
        &self.kraus_ops
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `||Σ K^dag K - I||_F`.
    pub fn completeness_residual(&self) -> T {
        let mut acc = ComplexMatrix::<T>::zeros(2, 2);
        for k in &self.kraus_ops {
            acc = &acc + &(&k.adjoint() * k);
        }
        (&acc - &ComplexMatrix::identity(2)).frobenius_norm()
    }

    /// Schrödinger picture on a single qubit.
    pub fn apply(&self, rho: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
        for k in &self.kraus_ops {
            out = &out + &k.conjugate(rho).expect("2x2 operands");
        }
        out
    }

    /// Applies the channel to one qubit of a two-qubit state.
    pub fn apply_to_qubit(&self, rho: &DensityMatrix<T>, qubit: Subsystem) -> DensityMatrix<T> {
        let id = ComplexMatrix::<T>::identity(2);
        let mut out = ComplexMatrix::zeros(4, 4);
        for k in &self.kraus_ops {
            let big = match qubit {
                Subsystem::A => kron(k, &id),
                Subsystem::B => kron(&id, k),
            };
            out = &out + &big.conjugate(rho.matrix()).expect("4x4 operands");
        }
        DensityMatrix::from_matrix_unchecked(hermitize(&out))
    }
}

/// Heisenberg-picture image of a two-qubit measurement operator under one
/// channel per arm: `Σ (K1 ⊗ K2)^dag S (K1 ⊗ K2)`.
pub fn apply_channel_to_projector<T: Real>(
    s: &ComplexMatrix<T>,
    ch1: &KrausChannel<T>,
    ch2: &KrausChannel<T>,
) -> Result<ComplexMatrix<T>> {
    if s.dims() != (4, 4) {
        return Err(crate::linalg::LinalgError::WrongDimension {
            expected: 4,
            rows: s.rows(),
            cols: s.cols(),
        }
        .into());
    }
    for ch in [ch1, ch2] {
        let residual = ch.completeness_residual();
        if residual > tol::<T>(STATE_TOL) {
            return Err(StateError::NotTracePreserving {
                residual: residual.as_f64(),
            });
        }
    }
    let mut out = ComplexMatrix::zeros(4, 4);
    for k1 in ch1.kraus_ops() {
        for k2 in ch2.kraus_ops() {
            let g = kron(k1, k2);
            out = &out + &(&(&g.adjoint() * s) * &g);
        }
    }
    Ok(out)
}

/// Random single-qubit unitary built from Euler angles; handy for tests
/// and randomised channel trials.
pub fn euler_unitary<T: Real>(alpha: f64, beta: f64, gamma: f64) -> ComplexMatrix<T> {
    let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let e = |phi: f64| cplx(T::lit(phi.cos()), T::lit(phi.sin()));
    ComplexMatrix::new(
        2,
        2,
        vec![
            e(-(alpha + gamma) / 2.0) * T::lit(c),
            -e(-(alpha - gamma) / 2.0) * T::lit(s),
            e((alpha - gamma) / 2.0) * T::lit(s),
            e((alpha + gamma) / 2.0) * T::lit(c),
        ],
    )
    .expect("finite angles")
}
