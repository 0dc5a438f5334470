//! Collective two-copy measurement probabilities.
//!
//! Two copies `χ1 ⊗ χ2` are measured with local operators `M1`, `M2` on the
//! `A` qubits and a joint operator `S` on the two `B` qubits. Instead of
//! building the 16x16 product, each copy is reduced to the 2x2 probe
//! `Tr_A[χ (M ⊗ 1)]` and the joint trace is taken over `B1 B2` only.

use num_complex::Complex;

use crate::linalg::{kron, tol, ComplexMatrix, LinalgError};
use crate::scalar::{creal, Real};
use crate::states::{check_probability, paulis, phi_plus_projector, DensityMatrix, Result, StateError, STATE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    Projector,
    Pauli,
}

/// Hermitian single-qubit measurement operator.
#[derive(Debug, Clone)]
pub struct MeasurementOperator<T: Real> {
    matrix: ComplexMatrix<T>,
    kind: MeasurementKind,
}

impl<T: Real> MeasurementOperator<T> {
    pub fn new(matrix: ComplexMatrix<T>, kind: MeasurementKind) -> Result<Self> {
        if matrix.dims() != (2, 2) {
            return Err(StateError::BadMeasurement("operator must be 2x2".into()));
        }
        if !matrix.is_hermitian(STATE_TOL) {
            return Err(StateError::BadMeasurement("operator must be Hermitian".into()));
        }
        if kind == MeasurementKind::Projector {
            let err = (&matrix * &matrix).max_abs_diff(&matrix)?;
            if err > tol::<T>(STATE_TOL) {
                return Err(StateError::BadMeasurement(format!("not idempotent ({err:e})")));
            }
        }
        Ok(Self { matrix, kind })
    }

    /// Projector onto the (normalised) single-qubit vector.
    pub fn projector_onto(v: [Complex<T>; 2]) -> Self {
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        Self {
            matrix: ComplexMatrix::projector(&[v[0] / n, v[1] / n]),
            kind: MeasurementKind::Projector,
        }
    }

    pub fn ket0() -> Self {
        Self::projector_onto([creal(T::one()), creal(T::zero())])
    }

    pub fn ket1() -> Self {
        Self::projector_onto([creal(T::zero()), creal(T::one())])
    }

    pub fn plus() -> Self {
        Self::projector_onto([creal(T::one()), creal(T::one())])
    }

    pub fn minus() -> Self {
        Self::projector_onto([creal(T::one()), creal(-T::one())])
    }

    pub fn identity() -> Self {
        Self {
            matrix: ComplexMatrix::identity(2),
            kind: MeasurementKind::Projector,
        }
    }

    /// `σx`, `σy`, `σz` for `axis` 0, 1, 2.
    pub fn pauli(axis: usize) -> Self {
        Self {
            matrix: paulis::<T>()[axis].clone(),
            kind: MeasurementKind::Pauli,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }
}

/// `Tr_A[χ (M ⊗ 1)]` for one copy.
#[derive(Debug, Clone)]
pub struct CollectiveProbe<T: Real> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> CollectiveProbe<T> {
    pub fn new(chi: &DensityMatrix<T>, m: &MeasurementOperator<T>) -> Self {
        let rho = chi.matrix();
        let mm = m.matrix();
        // (Tr_A[ρ (M⊗1)])_{b b'} = Σ_{a a'} ρ_{(a b),(a' b')} M_{a' a}
        let matrix = ComplexMatrix::from_fn(2, 2, |b, b2| {
            let mut acc = creal(T::zero());
            for a in 0..2 {
                for a2 in 0..2 {
                    acc = acc + rho[(2 * a + b, 2 * a2 + b2)] * mm[(a2, a)];
                }
            }
            acc
        });
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// `Tr[χ (M ⊗ 1)]`.
    pub fn weight(&self) -> T {
        self.matrix.trace().re
    }
}

/// Singlet projector `(1/4)(I - Σ_m σm ⊗ σm)`, equal to `(I - SWAP)/2`.
pub fn singlet_projector<T: Real>() -> ComplexMatrix<T> {
    let mut acc = ComplexMatrix::<T>::identity(4);
    for s in paulis::<T>() {
        acc = &acc - &kron(&s, &s);
    }
    acc.scale(T::lit(0.25))
}

/// Two-qubit swap operator.
pub fn swap_operator<T: Real>() -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(4, 4, |i, j| {
        let (a, b) = (i / 2, i % 2);
        if j == 2 * b + a {
            creal(T::one())
        } else {
            creal(T::zero())
        }
    })
}

/// `(1-p)² P+ + (2-p) p I/4`: the `P+` projection seen through a
/// depolarising channel of strength `p` on each arm.
pub fn noisy_projector_omega<T: Real>(p: f64) -> Result<ComplexMatrix<T>> {
    check_probability("p", p)?;
    let v = T::lit((1.0 - p) * (1.0 - p));
    let w = T::lit((2.0 - p) * p * 0.25);
    Ok(&phi_plus_projector::<T>().scale(v) + &ComplexMatrix::identity(4).scale(w))
}

/// Collective probability from precomputed probes: `Re Tr[(p1 ⊗ p2) S]`.
pub fn collective_prob_from_probes<T: Real>(
    p1: &CollectiveProbe<T>,
    p2: &CollectiveProbe<T>,
    s: &ComplexMatrix<T>,
) -> Result<T> {
    if s.dims() != (4, 4) {
        return Err(LinalgError::WrongDimension {
            expected: 4,
            rows: s.rows(),
            cols: s.cols(),
        }
        .into());
    }
    let a = p1.matrix();
    let b = p2.matrix();
    let mut acc = creal(T::zero());
    // Tr[(a⊗b) S] = Σ a_{i i'} b_{j j'} S_{(i' j'),(i j)}
    for i in 0..2 {
        for i2 in 0..2 {
            for j in 0..2 {
                for j2 in 0..2 {
                    acc = acc + a[(i, i2)] * b[(j, j2)] * s[(2 * i2 + j2, 2 * i + j)];
                }
            }
        }
    }
    Ok(acc.re)
}

/// `C(M1, M2) = Tr[(χ1 ⊗ χ2)(S_{B1B2} ⊗ M_{A1} ⊗ M_{A2})]`.
pub fn collective_prob_c<T: Real>(
    chi1: &DensityMatrix<T>,
    chi2: &DensityMatrix<T>,
    m1: &MeasurementOperator<T>,
    m2: &MeasurementOperator<T>,
    s: &ComplexMatrix<T>,
) -> Result<T> {
    collective_prob_from_probes(&CollectiveProbe::new(chi1, m1), &CollectiveProbe::new(chi2, m2), s)
}

/// `C̄(M1, M2) = Tr[χ1 (M1 ⊗ 1)] Tr[χ2 (M2 ⊗ 1)]`, i.e. `C` with `S = I`.
pub fn marginal_prob_cbar<T: Real>(
    chi1: &DensityMatrix<T>,
    chi2: &DensityMatrix<T>,
    m1: &MeasurementOperator<T>,
    m2: &MeasurementOperator<T>,
) -> T {
    CollectiveProbe::new(chi1, m1).weight() * CollectiveProbe::new(chi2, m2).weight()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::bell_phi_plus;

    #[test]
    fn singlet_examples() {
        let s = singlet_projector::<f64>();
        assert!((s.trace().re - 1.0).abs() < 1e-15);
        assert!((&s * &s).max_abs_diff(&s).unwrap() < 1e-15);
        let alt = (&ComplexMatrix::identity(4) - &swap_operator::<f64>()).scale(0.5);
        assert!(s.max_abs_diff(&alt).unwrap() < 1e-15);
    }

    #[test]
    fn omega_examples() {
        let o0 = noisy_projector_omega::<f64>(0.0).unwrap();
        assert!(o0.max_abs_diff(&phi_plus_projector()).unwrap() < 1e-15);
        let o1 = noisy_projector_omega::<f64>(1.0).unwrap();
        assert!(o1.max_abs_diff(&ComplexMatrix::identity(4).scale(0.25)).unwrap() < 1e-15);
        for p in [0.2, 0.7] {
            assert!((noisy_projector_omega::<f64>(p).unwrap().trace().re - 1.0).abs() < 1e-15);
        }
        assert!(noisy_projector_omega::<f64>(-0.5).is_err());
        // Werner-operator separability boundary (1-p)^2 = 1/3.
        let p = 1.0 - (1.0f64 / 3.0).sqrt();
        assert!((p - 0.4226).abs() < 1e-4);
    }

    #[test]
    fn bell_collective_probabilities() {
        let b = bell_phi_plus::<f64>();
        let s = singlet_projector::<f64>();
        let k0 = MeasurementOperator::ket0();
        let k1 = MeasurementOperator::ket1();
        assert!(collective_prob_c(&b, &b, &k0, &k0, &s).unwrap().abs() < 1e-15);
        assert!((collective_prob_c(&b, &b, &k0, &k1, &s).unwrap() - 0.125).abs() < 1e-15);
        assert!((marginal_prob_cbar(&b, &b, &k0, &k0) - 0.25).abs() < 1e-15);
        let id = MeasurementOperator::identity();
        assert!((marginal_prob_cbar(&b, &b, &id, &id) - 1.0).abs() < 1e-15);
        let cbar_via_c = collective_prob_c(&b, &b, &k0, &k1, &ComplexMatrix::identity(4)).unwrap();
        assert!((cbar_via_c - marginal_prob_cbar(&b, &b, &k0, &k1)).abs() < 1e-15);
    }

    #[test]
    fn measurement_validation() {
        let not_herm = ComplexMatrix::<f64>::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(MeasurementOperator::new(not_herm, MeasurementKind::Pauli).is_err());
        let not_idem = ComplexMatrix::<f64>::from_real(2, 2, &[0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(MeasurementOperator::new(not_idem.clone(), MeasurementKind::Projector).is_err());
        assert!(MeasurementOperator::new(not_idem, MeasurementKind::Pauli).is_ok());
        let k = MeasurementOperator::<f64>::plus();
        assert!(MeasurementOperator::new(k.matrix().clone(), MeasurementKind::Projector).is_ok());
    }
}
