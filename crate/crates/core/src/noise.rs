//! Noise thresholds on the Werner family and the equivalence of noisy
//! states with noisy collective measurements.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel_to_projector, euler_unitary, KrausChannel};
use crate::collective::{collective_prob_c, marginal_prob_cbar, noisy_projector_omega, singlet_projector, MeasurementOperator};
use crate::linalg::{ComplexMatrix, Subsystem};
use crate::rng::SeededRng;
use crate::states::{phi_plus_projector, random_density_matrix, random_haar_unitary, werner, DensityMatrix, Result};
use crate::witnesses::Witness;

/// Closed-form Werner crossings: `1 − √3/2`, `1 − 1/√2`, `1 − 1/√3`.
pub fn werner_threshold(witness: Witness) -> f64 {
    match witness {
        Witness::Collectibility => 1.0 - 3f64.sqrt() / 2.0,
        Witness::Chsh => 1.0 - std::f64::consts::FRAC_1_SQRT_2,
        Witness::Entropic => 1.0 - 1.0 / 3f64.sqrt(),
    }
}

/// Detection score (positive = flags entanglement) on `werner(p)`.
pub fn werner_score(witness: Witness, p: f64) -> Result<f64> {
    let rho = werner::<f64>(p)?;
    Ok(witness.detection_score(witness.evaluate(&rho)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub witness: Witness,
    pub p: f64,
    pub expected: f64,
    pub evaluations: usize,
}

/// Bisects the zero of the detection score on `[lo, hi]` down to `tol`.
/// The score must change sign over the bracket.
pub fn bisect_crossing(witness: Witness, mut lo: f64, mut hi: f64, tol: f64) -> Result<Option<Crossing>> {
    let mut f_lo = werner_score(witness, lo)?;
    let f_hi = werner_score(witness, hi)?;
    let mut evaluations = 2;
    if f_lo.signum() == f_hi.signum() {
        return Ok(None);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        // tolerance below the float spacing
        if mid <= lo || mid >= hi {
            break;
        }
        let f = werner_score(witness, mid)?;
        evaluations += 1;
        if f.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    Ok(Some(Crossing {
        witness,
        p: 0.5 * (lo + hi),
        expected: werner_threshold(witness),
        evaluations,
    }))
}

/// `(p, detection score)` on an even grid of `points` values in `[0, 1]`.
pub fn werner_grid(witness: Witness, points: usize) -> Result<Vec<(f64, f64)>> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let p = i as f64 / (n - 1) as f64;
            Ok((p, werner_score(witness, p)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Identity,
    Depolarizing,
    PhaseDamping,
    AmplitudeDamping,
    Unitary,
}

impl ChannelKind {
    pub const RANDOM: [ChannelKind; 4] = [
        ChannelKind::Depolarizing,
        ChannelKind::PhaseDamping,
        ChannelKind::AmplitudeDamping,
        ChannelKind::Unitary,
    ];

    fn build(self, strength: f64, angles: [f64; 3]) -> Result<KrausChannel<f64>> {
        match self {
            ChannelKind::Identity => Ok(KrausChannel::identity()),
            ChannelKind::Depolarizing => KrausChannel::depolarizing(strength),
            ChannelKind::PhaseDamping => KrausChannel::phase_damping(strength),
            ChannelKind::AmplitudeDamping => KrausChannel::amplitude_damping(strength),
            ChannelKind::Unitary => KrausChannel::unitary(euler_unitary(angles[0], angles[1], angles[2])),
        }
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "identity" => Ok(ChannelKind::Identity),
            "depolarizing" => Ok(ChannelKind::Depolarizing),
            "phase-damping" => Ok(ChannelKind::PhaseDamping),
            "amplitude-damping" => Ok(ChannelKind::AmplitudeDamping),
            "unitary" => Ok(ChannelKind::Unitary),
            other => Err(format!("unknown channel {other:?}")),
        }
    }
}

/// One randomised tuple and the deviations between the two strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceTrial {
    pub index: usize,
    pub channels: [ChannelKind; 2],
    pub strengths: [f64; 2],
    /// `|C_a − C_b|`: noisy copies with a clean projector vs clean copies
    /// with the noisy projector.
    pub delta_c: f64,
    /// `|C̄_noisy − C̄_clean|`.
    pub delta_cbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub trials: usize,
    pub max_delta_c: f64,
    pub max_delta_cbar: f64,
    /// Largest entry-wise gap between the depolarised `P+` and `Ω(p)`.
    pub max_omega_error: f64,
    pub worst: Option<EquivalenceTrial>,
}

impl EquivalenceReport {
    pub fn passes(&self, tol_c: f64, tol_omega: f64) -> bool {
        self.max_delta_c < tol_c && self.max_delta_cbar < tol_c && self.max_omega_error < tol_omega
    }
}

fn random_measurement<R: Rng + ?Sized>(rng: &mut R) -> MeasurementOperator<f64> {
    match rng.random_range(0..3) {
        0 => MeasurementOperator::pauli(rng.random_range(0..3)),
        1 => MeasurementOperator::identity(),
        _ => {
            let u = random_haar_unitary::<f64, _>(2, rng);
            MeasurementOperator::projector_onto([u[(0, 0)], u[(1, 0)]])
        }
    }
}

fn random_joint_projector<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix<f64> {
    match rng.random_range(0..3) {
        0 => singlet_projector(),
        1 => phi_plus_projector(),
        _ => {
            let u = random_haar_unitary::<f64, _>(4, rng);
            ComplexMatrix::projector(&[u[(0, 0)], u[(1, 0)], u[(2, 0)], u[(3, 0)]])
        }
    }
}

/// One trial: channels act on the `B` qubit of each copy, which is the one
/// entering the joint projector.
pub fn equivalence_trial(index: usize, rng: &mut SeededRng, kinds: Option<[ChannelKind; 2]>) -> Result<EquivalenceTrial> {
    let kinds = kinds.unwrap_or_else(|| {
        [
            ChannelKind::RANDOM[rng.random_range(0..ChannelKind::RANDOM.len())],
            ChannelKind::RANDOM[rng.random_range(0..ChannelKind::RANDOM.len())],
        ]
    });
    let strengths = [rng.random::<f64>(), rng.random::<f64>()];
    let angles = |rng: &mut SeededRng| -> [f64; 3] {
        let tau = std::f64::consts::TAU;
        [rng.random::<f64>() * tau, rng.random::<f64>() * tau, rng.random::<f64>() * tau]
    };
    let a1 = angles(rng);
    let a2 = angles(rng);
    let ch1 = kinds[0].build(strengths[0], a1)?;
    let ch2 = kinds[1].build(strengths[1], a2)?;
    let chi1: DensityMatrix<f64> = random_density_matrix(rng);
    let chi2: DensityMatrix<f64> = random_density_matrix(rng);
    let m1 = random_measurement(rng);
    let m2 = random_measurement(rng);
    let s = random_joint_projector(rng);

    let noisy1 = ch1.apply_to_qubit(&chi1, Subsystem::B);
    let noisy2 = ch2.apply_to_qubit(&chi2, Subsystem::B);
    let c_a = collective_prob_c(&noisy1, &noisy2, &m1, &m2, &s)?;
    let s_noisy = apply_channel_to_projector(&s, &ch1, &ch2)?;
    let c_b = collective_prob_c(&chi1, &chi2, &m1, &m2, &s_noisy)?;
    let cbar_clean = marginal_prob_cbar(&chi1, &chi2, &m1, &m2);
    let cbar_noisy = marginal_prob_cbar(&noisy1, &noisy2, &m1, &m2);
    Ok(EquivalenceTrial {
        index,
        channels: kinds,
        strengths,
        delta_c: (c_a - c_b).abs(),
        delta_cbar: (cbar_noisy - cbar_clean).abs(),
    })
}

/// Depolarising both arms of `P+` against the closed form `Ω(p)`.
pub fn omega_error(p: f64) -> Result<f64> {
    let ch = KrausChannel::<f64>::depolarizing(p)?;
    let got = apply_channel_to_projector(&phi_plus_projector(), &ch, &ch)?;
    Ok(got.max_abs_diff(&noisy_projector_omega(p)?)?)
}

pub fn equivalence_check(trials: usize, seed: u64, kinds: Option<[ChannelKind; 2]>) -> Result<EquivalenceReport> {
    let mut rng = SeededRng::new(seed);
    let mut report = EquivalenceReport {
        trials,
        max_delta_c: 0.0,
        max_delta_cbar: 0.0,
        max_omega_error: 0.0,
        worst: None,
    };
    for i in 0..trials {
        let t = equivalence_trial(i, &mut rng, kinds)?;
        if report.worst.is_none_or(|w| t.delta_c > w.delta_c) {
            report.worst = Some(t);
        }
        report.max_delta_c = report.max_delta_c.max(t.delta_c);
        report.max_delta_cbar = report.max_delta_cbar.max(t.delta_cbar);
    }
    for k in 0..=20 {
        report.max_omega_error = report.max_omega_error.max(omega_error(k as f64 / 20.0)?);
    }
    Ok(report)
}
