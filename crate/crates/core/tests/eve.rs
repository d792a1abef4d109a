use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use proptest::prelude::*;

use qcrypt::bb84::{run_session, SessionConfig};
use qcrypt::eve::{
    analytic_agreement, estimate_stats, information, BasisRule, Eavesdropper, EveStats, Interception, InterceptResend,
    NoOp, SiftedObservation,
};
use qcrypt::quantum::{Basis, CodingBasis};
use qcrypt::random::SeededRng;

/// Linear polarization angle of each coding state.
fn alice_angle(basis: CodingBasis, bit: bool) -> f64 {
    let base = match basis {
        CodingBasis::Rectilinear => 0.0,
        CodingBasis::Diagonal => FRAC_PI_4,
    };
    base + if bit { FRAC_PI_2 } else { 0.0 }
}

/// Disagreement probability on a sifted pulse when Eve measures along `phi`
/// and resends, enumerating Alice's basis and bit, Eve's outcome and Bob's
/// outcome.
fn disturbance_oracle(phi: f64) -> f64 {
    let mut d = 0.0;
    for basis in [CodingBasis::Rectilinear, CodingBasis::Diagonal] {
        for bit in [false, true] {
            let a = alice_angle(basis, bit);
            for eve in [phi, phi + FRAC_PI_2] {
                let p_eve = (a - eve).cos().powi(2);
                for bob_bit in [false, true] {
                    if bob_bit != bit {
                        d += 0.25 * p_eve * (eve - alice_angle(basis, bob_bit)).cos().powi(2);
                    }
                }
            }
        }
    }
    d
}

fn entropy(p: f64) -> f64 {
    [p, 1.0 - p].iter().filter(|&&q| q > 0.0).map(|q| -q * q.log2()).sum()
}

/// Mean information per sifted bit for an Eve measuring along `phi`.
fn information_oracle(phi: f64) -> f64 {
    let mut b = 0.0;
    for basis in [CodingBasis::Rectilinear, CodingBasis::Diagonal] {
        for bit in [false, true] {
            for eve in [phi, phi + FRAC_PI_2] {
                let p_eve = (alice_angle(basis, bit) - eve).cos().powi(2);
                let l0 = (alice_angle(basis, false) - eve).cos().powi(2);
                let l1 = (alice_angle(basis, true) - eve).cos().powi(2);
                b += 0.25 * p_eve * (1.0 - entropy(l0 / (l0 + l1)));
            }
        }
    }
    b
}

fn stats(rule: BasisRule, seed: u64) -> EveStats {
    estimate_stats(Box::new(InterceptResend::new(rule)), 100_000, &mut SeededRng::new(seed)).unwrap()
}

#[test]
fn oracles_reproduce_known_points() {
    assert!((disturbance_oracle(0.0) - 0.25).abs() < 1e-12);
    assert!((information_oracle(0.0) - 0.5).abs() < 1e-12);
    assert!((disturbance_oracle(FRAC_PI_8) - 0.25).abs() < 1e-12);
}

#[test]
fn analytic_agreement_matches_oracle() {
    for phi in [0.0, 0.2, FRAC_PI_8, FRAC_PI_4, 1.3] {
        let mean = (analytic_agreement(CodingBasis::Rectilinear, Basis::Angle(phi))
            + analytic_agreement(CodingBasis::Diagonal, Basis::Angle(phi)))
            / 2.0;
        assert!((1.0 - mean - disturbance_oracle(phi)).abs() < 1e-12, "phi {phi}");
    }
}

#[test]
fn measured_disturbance_and_information_match_oracles() {
    for (i, phi) in [0.0, FRAC_PI_8, 0.3].into_iter().enumerate() {
        let s = stats(BasisRule::Angle(phi), 40 + i as u64);
        let d = disturbance_oracle(phi);
        let b = information_oracle(phi);
        assert!((s.disturbance - d).abs() <= s.disturbance_radius, "phi {phi}: d {} vs {d}", s.disturbance);
        assert!((s.info_bits - b).abs() <= s.info_radius.max(1e-9), "phi {phi}: b {} vs {b}", s.info_bits);
        assert!(!s.low_confidence);
    }
}

#[test]
fn random_basis_eve_matches_rectilinear_on_average() {
    let s = stats(BasisRule::UniformRandom, 50);
    assert!((s.disturbance - 0.25).abs() <= s.disturbance_radius);
    assert!((s.info_bits - 0.5).abs() <= s.info_radius);
}

#[test]
fn circular_eve_learns_nothing_and_disturbs_half() {
    let s = stats(BasisRule::Fixed(Basis::Circular), 51);
    assert!(s.info_bits.abs() < 1e-9);
    assert!((s.disturbance - 0.5).abs() <= s.disturbance_radius);
}

#[test]
fn matched_stratum_is_undisturbed() {
    for rule in [BasisRule::Fixed(Basis::Rectilinear), BasisRule::UniformRandom] {
        let s = stats(rule, 52);
        assert!(s.matched.pulses > 0);
        assert_eq!(s.matched.disagreements, 0);
        let rate = s.mismatched.rate().unwrap();
        assert!((rate - 0.5).abs() < 0.02, "{rate}");
    }
}

#[test]
fn no_eavesdropper_means_no_information() {
    let cfg = SessionConfig {
        n: 5_000,
        ..Default::default()
    };
    let s = run_session(&cfg, Some(Box::new(NoOp)), None, None, &mut SeededRng::new(53)).unwrap();
    let e = s.eve_stats();
    assert_eq!(e.info_bits, 0.0);
    assert_eq!(e.disturbance, 0.0);
    assert!(e.low_confidence);
    assert_eq!(NoOp.name(), "none");
}

#[test]
fn compared_pulses_are_excluded_from_disturbance() {
    let obs = |differs| SiftedObservation {
        alice_basis: CodingBasis::Rectilinear,
        alice_bit: false,
        bob_bit: differs,
        interception: None,
    };
    let s = EveStats::from_observations(&[obs(true), obs(false), obs(false)], &[true, false, false], 3);
    assert_eq!(s.disturbance, 0.0);
    assert_eq!(s.disturbance_samples, 2);
}

proptest! {
    #[test]
    fn information_never_exceeds_one_bit(phi in 0.0..std::f64::consts::PI, outcome in 0usize..2, diag in any::<bool>()) {
        let basis = if diag { CodingBasis::Diagonal } else { CodingBasis::Rectilinear };
        let seen = Interception { basis: Basis::Angle(phi), outcome };
        let i = information(basis, Some(&seen));
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&i));
    }

    #[test]
    fn single_angle_eve_obeys_tradeoff_exactly(phi in 0.0..std::f64::consts::PI) {
        prop_assert!(disturbance_oracle(phi) >= information_oracle(phi) / 2.0 - 1e-12);
        prop_assert!(information_oracle(phi) <= 0.5 + 1e-12);
    }
}
