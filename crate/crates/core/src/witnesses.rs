//! Collective entanglement witnesses: collectibility, the CHSH witness and the
//! entropic witness, all evaluated from collective two-copy probabilities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::collective::{collective_prob_from_probes, singlet_projector, CollectiveProbe, MeasurementOperator};
use crate::linalg::{hermitian_eigs, ComplexMatrix};
use crate::scalar::{creal, Real};
use crate::states::{negativity, purity, DensityMatrix, Result, ENTANGLEMENT_THRESHOLD};

/// Marginal products at or below this are treated as zero and the
/// corresponding ratio `X_ij` is set to 0.
pub const RATIO_FLOOR: f64 = 1e-14;

/// Ratios of collective to marginal projection probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XQuantities<T: Real> {
    pub x00: T,
    pub x11: T,
    pub x01: T,
    pub xpp: T,
    pub xmm: T,
    /// Probability of outcome `|0>` on qubit `A`.
    pub x0: T,
    pub x1: T,
}

impl<T: Real> XQuantities<T> {
    /// `16 X0 X1 √(X00 X11) + 4 max{X++, X--}`.
    pub fn eta(&self) -> T {
        let prod = (self.x00 * self.x11).max(T::zero());
        T::lit(16.0) * self.x0 * self.x1 * prod.sqrt() + T::lit(4.0) * self.xpp.max(self.xmm)
    }

    pub fn collectibility(&self) -> T {
        let one = T::one();
        let two = T::lit(2.0);
        let x0 = self.x0;
        let x1 = self.x1;
        (self.eta() + x0 * x0 * (one - two * self.x00) + x1 * x1 * (one - two * self.x11)
            + two * x0 * x1 * (one - two * self.x01)
            - one)
            * T::lit(0.5)
    }
}

fn ratio<T: Real>(p1: &CollectiveProbe<T>, p2: &CollectiveProbe<T>, s: &ComplexMatrix<T>) -> Result<T> {
    let cbar = p1.weight() * p2.weight();
    if cbar <= T::lit(RATIO_FLOOR) {
        return Ok(T::zero());
    }
    Ok(collective_prob_from_probes(p1, p2, s)? / cbar)
}

/// `X_ij` with an explicit joint projector `s` on the `B` qubits.
pub fn x_quantities_with<T: Real>(rho: &DensityMatrix<T>, s: &ComplexMatrix<T>) -> Result<XQuantities<T>> {
    let p0 = CollectiveProbe::new(rho, &MeasurementOperator::ket0());
    let p1 = CollectiveProbe::new(rho, &MeasurementOperator::ket1());
    let pp = CollectiveProbe::new(rho, &MeasurementOperator::plus());
    let pm = CollectiveProbe::new(rho, &MeasurementOperator::minus());
    let x0 = p0.weight() * p0.weight() + p0.weight() * p1.weight();
    Ok(XQuantities {
        x00: ratio(&p0, &p0, s)?,
        x11: ratio(&p1, &p1, s)?,
        x01: ratio(&p0, &p1, s)?,
        xpp: ratio(&pp, &pp, s)?,
        xmm: ratio(&pm, &pm, s)?,
        x0,
        x1: T::one() - x0,
    })
}

/// `X_ij` with the singlet projector.
pub fn x_quantities<T: Real>(rho: &DensityMatrix<T>) -> Result<XQuantities<T>> {
    x_quantities_with(rho, &singlet_projector())
}

/// Collectibility; negative values flag entanglement.
pub fn collectibility<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    Ok(x_quantities(rho)?.collectibility())
}

/// Symmetric 3x3 matrix `R_mn = C̄(σm, σn) - 4 C(σm, σn)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationMatrix<T: Real> {
    pub r: [[T; 3]; 3],
}

impl<T: Real> CorrelationMatrix<T> {
    pub fn trace(&self) -> T {
        self.r[0][0] + self.r[1][1] + self.r[2][2]
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [T; 3] {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| creal(self.r[i][j]));
        let ev = hermitian_eigs(&m, false).expect("symmetric by construction").eigenvalues;
        [ev[0], ev[1], ev[2]]
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }
}

pub fn correlation_matrix_with<T: Real>(rho: &DensityMatrix<T>, s: &ComplexMatrix<T>) -> Result<CorrelationMatrix<T>> {
    let probes: Vec<_> = (0..3)
        .map(|m| CollectiveProbe::new(rho, &MeasurementOperator::pauli(m)))
        .collect();
    let mut r = [[T::zero(); 3]; 3];
    for m in 0..3 {
        for n in m..3 {
            let c = collective_prob_from_probes(&probes[m], &probes[n], s)?;
            let cbar = probes[m].weight() * probes[n].weight();
            r[m][n] = cbar - T::lit(4.0) * c;
            r[n][m] = r[m][n];
        }
    }
    Ok(CorrelationMatrix { r })
}

pub fn correlation_matrix<T: Real>(rho: &DensityMatrix<T>) -> Result<CorrelationMatrix<T>> {
    correlation_matrix_with(rho, &singlet_projector())
}

/// `(Tr R - 1)/2`; positive values flag entanglement.
pub fn entropic_from_r<T: Real>(r: &CorrelationMatrix<T>) -> T {
    (r.trace() - T::one()) * T::lit(0.5)
}

/// `Tr R - min eig R - 1`; positive values flag entanglement.
pub fn chsh_from_r<T: Real>(r: &CorrelationMatrix<T>) -> T {
    r.trace() - r.min_eigenvalue() - T::one()
}

pub fn entropic_witness<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    Ok(entropic_from_r(&correlation_matrix(rho)?))
}

pub fn chsh_witness<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    Ok(chsh_from_r(&correlation_matrix(rho)?))
}

/// PPT ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Separable,
    Entangled,
}

impl Label {
    pub fn from_negativity<T: Real>(n: T) -> Self {
        if n > T::lit(ENTANGLEMENT_THRESHOLD) {
            Label::Entangled
        } else {
            Label::Separable
        }
    }

    pub fn is_entangled(self) -> bool {
        self == Label::Entangled
    }

    /// `+1` for entangled, `-1` for separable.
    pub fn sign(self) -> i8 {
        match self {
            Label::Entangled => 1,
            Label::Separable => -1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entangled => "entangled",
            Label::Separable => "separable",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "entangled" => Ok(Label::Entangled),
            "separable" => Ok(Label::Separable),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// Which collective witness a feature column refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Witness {
    Collectibility,
    Chsh,
    Entropic,
}

impl Witness {
    pub const ALL: [Witness; 3] = [Witness::Collectibility, Witness::Chsh, Witness::Entropic];

    pub fn name(self) -> &'static str {
        match self {
            Witness::Collectibility => "collectibility",
            Witness::Chsh => "chsh",
            Witness::Entropic => "entropic",
        }
    }

    /// Raw witness value oriented so that `> 0` means "flagged entangled".
    pub fn detection_score<T: Real>(self, raw: T) -> T {
        match self {
            Witness::Collectibility => -raw,
            Witness::Chsh | Witness::Entropic => raw,
        }
    }

    /// Analytical decision with the threshold at zero.
    pub fn flags<T: Real>(self, raw: T) -> bool {
        self.detection_score(raw) > T::zero()
    }

    pub fn value<T: Real>(self, record: &WitnessRecord<T>) -> T {
        match self {
            Witness::Collectibility => record.collectibility,
            Witness::Chsh => record.chsh,
            Witness::Entropic => record.entropic,
        }
    }

    /// Value on the Werner family, evaluated through the dense pipeline.
    pub fn evaluate<T: Real>(self, rho: &DensityMatrix<T>) -> Result<T> {
        match self {
            Witness::Collectibility => collectibility(rho),
            Witness::Chsh => chsh_witness(rho),
            Witness::Entropic => entropic_witness(rho),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Witness {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "collectibility" | "w" => Ok(Witness::Collectibility),
            "chsh" => Ok(Witness::Chsh),
            "entropic" | "ew" => Ok(Witness::Entropic),
            other => Err(format!("unknown witness {other:?}")),
        }
    }
}

/// Everything the classifier and the evaluation need about one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessRecord<T: Real> {
    pub purity: T,
    pub collectibility: T,
    pub chsh: T,
    pub entropic: T,
    pub negativity: T,
    pub label: Label,
}

pub fn witness_record<T: Real>(rho: &DensityMatrix<T>) -> Result<WitnessRecord<T>> {
    let s = singlet_projector::<T>();
    let x = x_quantities_with(rho, &s)?;
    let r = correlation_matrix_with(rho, &s)?;
    let neg = negativity(rho);
    Ok(WitnessRecord {
        purity: purity(rho),
        collectibility: x.collectibility(),
        chsh: chsh_from_r(&r),
        entropic: entropic_from_r(&r),
        negativity: neg,
        label: Label::from_negativity(neg),
    })
}
