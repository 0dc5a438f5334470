mod common;

use cewit::channel::KrausChannel;
use cewit::collective::{collective_prob_c, marginal_prob_cbar, singlet_projector, MeasurementOperator};
use cewit::dataset::{conditional_spectrum, purity_bin, bin_lower_edge, bin_upper_edge};
use cewit::linalg::Subsystem;
use cewit::rng::SeededRng;
use cewit::states::{bell_phi_plus, local_unitary, random_density_matrix, random_haar_unitary};
use cewit::witnesses::{witness_record, Label, Witness};
use cewit::{State, State32};
use proptest::prelude::*;

fn state(seed: u64) -> State {
    random_density_matrix(&mut SeededRng::new(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn analytical_witnesses_never_flag_separable_states(seed in any::<u64>()) {
        let r = witness_record(&state(seed)).unwrap();
        for w in Witness::ALL {
            if w.flags(w.value(&r)) {
                prop_assert_eq!(r.label, Label::Entangled, "{} flagged {:?}", w, r);
            }
        }
    }

    #[test]
    fn low_purity_is_separable(seed in any::<u64>()) {
        let r = witness_record(&state(seed)).unwrap();
        if r.purity < 1.0 / 3.0 {
            prop_assert_eq!(r.label, Label::Separable);
        }
    }

    #[test]
    fn chsh_and_entropic_are_local_unitary_invariant(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed ^ 0x5eed);
        let rho = state(seed);
        let u = local_unitary(&random_haar_unitary(2, &mut rng), &random_haar_unitary(2, &mut rng));
        let a = witness_record(&rho).unwrap();
        let b = witness_record(&rho.evolve(&u).unwrap()).unwrap();
        prop_assert!((a.chsh - b.chsh).abs() < 1e-10);
        prop_assert!((a.entropic - b.entropic).abs() < 1e-10);
        prop_assert!((a.purity - b.purity).abs() < 1e-12);
        prop_assert!((a.negativity - b.negativity).abs() < 1e-10);
    }

    #[test]
    fn rotated_bell_states_stay_maximally_entangled(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let u = local_unitary(&random_haar_unitary(2, &mut rng), &random_haar_unitary(2, &mut rng));
        let r = witness_record(&bell_phi_plus::<f64>().evolve(&u).unwrap()).unwrap();
        prop_assert!((r.negativity - 0.5).abs() < 1e-10);
        prop_assert!((r.chsh - 1.0).abs() < 1e-10);
        prop_assert!((r.entropic - 1.0).abs() < 1e-10);
    }

    #[test]
    fn f32_tracks_f64(seed in any::<u64>()) {
        let rho = state(seed);
        let r64 = witness_record(&rho).unwrap();
        let r32 = witness_record(&State32::new(rho.matrix().cast::<f32>()).unwrap()).unwrap();
        prop_assert!((r64.purity - r32.purity as f64).abs() < 1e-5);
        prop_assert!((r64.chsh - r32.chsh as f64).abs() < 1e-4);
        prop_assert!((r64.entropic - r32.entropic as f64).abs() < 1e-4);
    }

    #[test]
    fn collective_probabilities_are_bounded(seed in any::<u64>(), a in 0usize..3, b in 0usize..3) {
        let (c1, c2) = (state(seed), state(seed.wrapping_add(1)));
        let m = [MeasurementOperator::ket0(), MeasurementOperator::ket1(), MeasurementOperator::plus()];
        let c = collective_prob_c(&c1, &c2, &m[a], &m[b], &singlet_projector()).unwrap();
        let cbar = marginal_prob_cbar(&c1, &c2, &m[a], &m[b]);
        prop_assert!(c >= -1e-14 && c <= cbar + 1e-14 && cbar <= 1.0 + 1e-14, "{} {}", c, cbar);
    }

    #[test]
    fn marginals_ignore_channels_on_b(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let rho = state(seed);
        let m = MeasurementOperator::plus();
        for ch in [
            KrausChannel::<f64>::depolarizing(p).unwrap(),
            KrausChannel::phase_damping(p).unwrap(),
            KrausChannel::amplitude_damping(p).unwrap(),
        ] {
            let noisy = ch.apply_to_qubit(&rho, Subsystem::B);
            let d = marginal_prob_cbar(&noisy, &noisy, &m, &m) - marginal_prob_cbar(&rho, &rho, &m, &m);
            prop_assert!(d.abs() < 1e-11);
        }
    }

    #[test]
    fn conditional_spectrum_lands_in_shell(seed in any::<u64>(), bin in 0usize..75) {
        let (lo, hi) = (bin_lower_edge(bin), bin_upper_edge(bin));
        let l = conditional_spectrum(lo, hi, &mut SeededRng::new(seed));
        let sum: f64 = l.iter().sum();
        let p: f64 = l.iter().map(|x| x * x).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(l.iter().all(|&x| x >= 0.0));
        prop_assert!(p >= lo - 1e-12 && p <= hi + 1e-12, "purity {} outside [{}, {})", p, lo, hi);
        prop_assert_eq!(purity_bin(0.5 * (lo + hi)), Some(bin));
    }

    #[test]
    fn haar_unitaries_are_unitary(seed in any::<u64>()) {
        let u = random_haar_unitary::<f64, _>(4, &mut SeededRng::new(seed));
        let eye = cewit::Matrix::identity(4);
        let r = (&u.adjoint() * &u).max_abs_diff(&eye).unwrap();
        prop_assert!(r < 1e-12);
    }
}
