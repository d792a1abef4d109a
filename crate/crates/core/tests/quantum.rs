use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use qcrypt::quantum::{
    entangled_photons, epr_pair, inner_product, measure, measure_pair, photon_from_angle, transmission_probability,
    Basis, CodingBasis, PairState, Photon, StateVector, Which,
};
use qcrypt::random::{RandomSource, ScriptedSource, SeededRng};

fn basis_strategy() -> impl Strategy<Value = Basis> {
    prop_oneof![
        Just(Basis::Rectilinear),
        Just(Basis::Diagonal),
        Just(Basis::Circular),
        (0.0..PI).prop_map(Basis::Angle),
    ]
}

fn state_strategy() -> impl Strategy<Value = StateVector> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-zero", |(a, b, c, d)| a * a + b * b + c * c + d * d > 1e-3)
        .prop_map(|(a, b, c, d)| {
            let n = (a * a + b * b + c * c + d * d).sqrt();
            StateVector::new(Complex64::new(a / n, b / n), Complex64::new(c / n, d / n)).unwrap()
        })
}

#[test]
fn named_bases_are_orthonormal() {
    for basis in [Basis::Rectilinear, Basis::Diagonal, Basis::Circular, Basis::Angle(0.4)] {
        let [a, b] = basis.vectors();
        assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((b.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(inner_product(&a, &b).norm() < 1e-12);
    }
}

#[test]
fn coding_basis_letters_round_trip() {
    for b in [CodingBasis::Rectilinear, CodingBasis::Diagonal] {
        assert_eq!(CodingBasis::from_letter(b.letter()), Some(b));
        assert_eq!(b.other().other(), b);
    }
    assert_eq!(CodingBasis::from_letter('X'), None);
}

#[test]
fn certain_outcomes_consume_no_draws() {
    let mut script = ScriptedSource::new([]);
    let (k, _) = Photon::prepare(StateVector::vertical()).measure_in(Basis::Rectilinear, &mut script);
    assert_eq!(k, 1);
    assert!(script.fault().is_none());
}

#[test]
fn cos_squared_oracle() {
    for (alpha, beta) in [(0.0, 0.0), (0.3, 1.2), (PI / 2.0, 0.0), (PI / 4.0, 0.0)] {
        let expected = (alpha - beta).cos().powi(2);
        assert!((transmission_probability(alpha, beta) - expected).abs() < 1e-12);
    }
}

#[test]
fn singlet_is_rotation_invariant_up_to_phase() {
    let singlet = epr_pair();
    for theta in [0.0, 0.1, 1.0, 2.5] {
        let c = singlet.antisymmetric_coefficient(Basis::Angle(theta), 1e-9).unwrap();
        assert!((c.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }
    let product = PairState::product(&StateVector::horizontal(), &StateVector::vertical());
    assert!(product.antisymmetric_coefficient(Basis::Rectilinear, 1e-9).is_none());
}

proptest! {
    #[test]
    fn measurement_probabilities_sum_to_one(psi in state_strategy(), basis in basis_strategy()) {
        let p = basis.measurement().probabilities(&psi);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let [a, _] = basis.vectors();
        prop_assert!((p[0] - inner_product(&a, &psi).norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn post_measurement_state_is_normalized(psi in state_strategy(), basis in basis_strategy(), seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let (k, after) = measure(&psi, &basis.measurement(), &mut rng);
        prop_assert!((after.norm_sqr() - 1.0).abs() < 1e-9);
        prop_assert!(after.same_ray(&basis.vector(k), 1e-9));
    }

    #[test]
    fn repeated_measurement_repeats(psi in state_strategy(), basis in basis_strategy(), seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let (first, photon) = Photon::prepare(psi).measure_in(basis, &mut rng);
        let (second, _) = photon.measure_in(basis, &mut rng);
        prop_assert_eq!(first, second);
    }

    #[test]
    fn photon_from_angle_matches_cos_law(alpha in -PI..PI, beta in -PI..PI) {
        let a = photon_from_angle(alpha).unwrap();
        let b = photon_from_angle(beta).unwrap();
        prop_assert!((inner_product(&b, &a).norm_sqr() - transmission_probability(alpha, beta)).abs() < 1e-9);
    }

    #[test]
    fn singlet_anticorrelates_in_any_shared_basis(basis in basis_strategy(), seed in any::<u64>(), first in any::<bool>()) {
        let mut rng = SeededRng::new(seed);
        let which = if first { Which::First } else { Which::Second };
        let (k, rest) = measure_pair(&epr_pair(), which, basis, &mut rng);
        let (j, _) = measure(&rest, &basis.measurement(), &mut rng);
        prop_assert_ne!(k, j);

        let (a, b) = entangled_photons(epr_pair());
        let (x, _) = a.measure_in(basis, &mut rng);
        let (y, _) = b.measure_in(basis, &mut rng);
        prop_assert_ne!(x, y);
    }

    #[test]
    fn conjugate_coding_is_unbiased(bit in any::<bool>(), coding in prop_oneof![Just(CodingBasis::Rectilinear), Just(CodingBasis::Diagonal)]) {
        let state = coding.encode(bit);
        let p = coding.other().basis().measurement().probabilities(&state);
        prop_assert!((p[0] - 0.5).abs() < 1e-12);
        let own = coding.basis().measurement().probabilities(&state);
        prop_assert!((own[bit as usize] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_draws_are_reproducible(seed in any::<u64>(), trial in any::<u64>()) {
        let mut a = SeededRng::for_trial(seed, trial);
        let mut b = SeededRng::for_trial(seed, trial);
        for _ in 0..16 {
            prop_assert_eq!(a.below(1000), b.below(1000));
        }
    }
}
