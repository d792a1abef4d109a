use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::measurement::Operator;
use super::{normalize, renormalize, Amplitude, Basis, Measurement, QuantumError, StateVector};
use crate::random::RandomSource;

/// Which photon of a pair an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    First,
    Second,
}

impl Which {
    pub fn other(self) -> Self {
        match self {
            Which::First => Which::Second,
            Which::Second => Which::First,
        }
    }
}

/// A unit vector in the tensor product of two photon spaces, with coordinates
/// over `r1r1, r1r2, r2r1, r2r2` (first photon's index is the major one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairState {
    amps: [Amplitude; 4],
}

/// The singlet `(r1r2 - r2r1)/sqrt2`.
pub fn epr_pair() -> PairState {
    let z = Amplitude::new(0.0, 0.0);
    let s = Amplitude::new(FRAC_1_SQRT_2, 0.0);
    PairState {
        amps: [z, s, -s, z],
    }
}

impl PairState {
    pub fn new(amps: [Amplitude; 4]) -> Result<Self, QuantumError> {
        renormalize(amps, "pair state").map(|amps| Self { amps })
    }

    pub fn product(first: &StateVector, second: &StateVector) -> Self {
        let a = first.amplitudes();
        let b = second.amplitudes();
        Self {
            amps: [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]],
        }
    }

    /// `(u0 u1 - u1 u0)/sqrt2` for the vectors `u0, u1` of `basis`.
    pub fn singlet_form(basis: Basis) -> Self {
        let [u, v] = basis.vectors();
        let uv = Self::product(&u, &v).amps;
        let vu = Self::product(&v, &u).amps;
        let mut amps = [Amplitude::new(0.0, 0.0); 4];
        for k in 0..4 {
            amps[k] = (uv[k] - vu[k]) * FRAC_1_SQRT_2;
        }
        Self { amps }
    }

    pub fn amplitudes(&self) -> [Amplitude; 4] {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner_product(&self, other: &PairState) -> Amplitude {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest coordinate difference; zero means equal including global phase.
    pub fn distance(&self, other: &PairState) -> f64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Coordinates in the product basis `{x_a y_b}`, ordered `x0y0, x0y1, x1y0, x1y1`.
    pub fn coordinates_in(&self, first: Basis, second: Basis) -> [Amplitude; 4] {
        let xs = first.vectors();
        let ys = second.vectors();
        let mut out = [Amplitude::new(0.0, 0.0); 4];
        for a in 0..2 {
            for b in 0..2 {
                let product = Self::product(&xs[a], &ys[b]);
                out[2 * a + b] = product.inner_product(self);
            }
        }
        out
    }

    /// If the coordinates in `basis (x) basis` have the form `(0, c, -c, 0)`
    /// within `tolerance`, returns `c`.
    pub fn antisymmetric_coefficient(&self, basis: Basis, tolerance: f64) -> Option<Amplitude> {
        let c = self.coordinates_in(basis, basis);
        let antisymmetric =
            c[0].norm() <= tolerance && c[3].norm() <= tolerance && (c[1] + c[2]).norm() <= tolerance;
        antisymmetric.then_some(c[1])
    }

    /// Conditional state of the other photon given that `which` was found in `u`.
    /// Unnormalized; its squared norm is the probability of that finding.
    fn contract(&self, which: Which, u: &StateVector) -> [Amplitude; 2] {
        let u = u.amplitudes();
        let a = &self.amps;
        match which {
            Which::First => [
                u[0].conj() * a[0] + u[1].conj() * a[2],
                u[0].conj() * a[1] + u[1].conj() * a[3],
            ],
            Which::Second => [
                u[0].conj() * a[0] + u[1].conj() * a[1],
                u[0].conj() * a[2] + u[1].conj() * a[3],
            ],
        }
    }

    /// Applies `P (x) I` or `I (x) P`.
    fn apply_local(&self, which: Which, p: &Operator) -> [Amplitude; 4] {
        let a = &self.amps;
        match which {
            Which::First => [
                p[0][0] * a[0] + p[0][1] * a[2],
                p[0][0] * a[1] + p[0][1] * a[3],
                p[1][0] * a[0] + p[1][1] * a[2],
                p[1][0] * a[1] + p[1][1] * a[3],
            ],
            Which::Second => [
                p[0][0] * a[0] + p[0][1] * a[1],
                p[1][0] * a[0] + p[1][1] * a[1],
                p[0][0] * a[2] + p[0][1] * a[3],
                p[1][0] * a[2] + p[1][1] * a[3],
            ],
        }
    }

    /// Measures one photon of the pair with a general projective measurement
    /// and returns the outcome with the collapsed joint state.
    pub(crate) fn measure_local(
        &self,
        which: Which,
        m: &Measurement,
        rng: &mut dyn RandomSource,
    ) -> (usize, PairState) {
        let projected: Vec<[Amplitude; 4]> = m
            .projectors()
            .iter()
            .map(|p| self.apply_local(which, p))
            .collect();
        let probabilities: Vec<f64> = projected
            .iter()
            .map(|v| v.iter().map(|a| a.norm_sqr()).sum())
            .collect();
        let k = rng.pick(&probabilities);
        let post = normalize(projected[k]).map(|amps| PairState { amps }).unwrap_or(*self);
        (k, post)
    }
}

/// Measures one photon of `pair` in `basis`. Returns the outcome and the
/// resulting state of the other photon.
pub fn measure_pair(
    pair: &PairState,
    which: Which,
    basis: Basis,
    rng: &mut dyn RandomSource,
) -> (usize, StateVector) {
    let vectors = basis.vectors();
    let conditional = vectors.map(|u| pair.contract(which, &u));
    let probabilities: Vec<f64> = conditional
        .iter()
        .map(|v| v.iter().map(|a| a.norm_sqr()).sum())
        .collect();
    let k = rng.pick(&probabilities);
    let remaining = normalize(conditional[k])
        .or_else(|| normalize(conditional[1 - k]))
        .map(StateVector::from_normalized)
        .unwrap_or_else(StateVector::horizontal);
    (k, remaining)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;
    use crate::random::{ScriptedSource, SeededRng};

    #[test]
    fn singlet_coordinates_and_norm() {
        let e = epr_pair();
        assert!((e.norm_sqr() - 1.0).abs() < 1e-12);
        let a = e.amplitudes();
        // Printed to three places as 0.707.
        let printed = 0.707;
        assert!((a[1].re - printed).abs() < 1e-3 && (a[2].re + printed).abs() < 1e-3);
        assert_eq!(e.antisymmetric_coefficient(Basis::Rectilinear, 1e-12), Some(a[1]));
    }

    #[test]
    fn singlet_in_circular_basis_matches_exactly() {
        assert!(epr_pair().distance(&PairState::singlet_form(Basis::Circular)) < 1e-9);
    }

    #[test]
    fn singlet_in_diagonal_basis_matches_up_to_sign() {
        // d1 d2 - d2 d1 with d2 = (1,-1)/sqrt2 equals minus the singlet:
        // the same physical state, differing only by a global phase of -1.
        let diag = PairState::singlet_form(Basis::Diagonal);
        let overlap = diag.inner_product(&epr_pair());
        assert!((overlap.norm() - 1.0).abs() < 1e-9);
        assert!((overlap.re + 1.0).abs() < 1e-9);
        let c = epr_pair().antisymmetric_coefficient(Basis::Diagonal, 1e-9).unwrap();
        assert!((c.norm() - FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn singlet_is_antisymmetric_in_rotated_real_bases() {
        for k in 0..24 {
            let theta = -3.0 + 0.27 * k as f64;
            let rotated = PairState::singlet_form(Basis::Angle(theta));
            assert!(epr_pair().distance(&rotated) < 1e-9, "theta = {theta}");
            let c = epr_pair()
                .antisymmetric_coefficient(Basis::Angle(theta), 1e-9)
                .unwrap();
            assert!((c.re - FRAC_1_SQRT_2).abs() < 1e-9);
        }
    }

    #[test]
    fn rectilinear_outcome_leaves_orthogonal_partner() {
        let mut script = ScriptedSource::new([0]);
        let (k, remaining) = measure_pair(&epr_pair(), Which::First, Basis::Rectilinear, &mut script);
        assert_eq!(k, 0);
        assert!(remaining.same_ray(&StateVector::vertical(), 1e-12));
    }

    #[test]
    fn diagonal_outcome_leaves_orthogonal_partner() {
        let mut script = ScriptedSource::new([0]);
        let (k, remaining) = measure_pair(&epr_pair(), Which::First, Basis::Diagonal, &mut script);
        assert_eq!(k, 0);
        assert!(remaining.same_ray(&Basis::Diagonal.vector(1), 1e-12));
    }

    #[test]
    fn epr_marginals_are_even_in_any_basis() {
        for b in [Basis::Rectilinear, Basis::Diagonal, Basis::Circular, Basis::Angle(0.9)] {
            for which in [Which::First, Which::Second] {
                let conditional = b.vectors().map(|u| epr_pair().contract(which, &u));
                for v in conditional {
                    let p: f64 = v.iter().map(|a| a.norm_sqr()).sum();
                    assert!((p - 0.5).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_state_factor_is_untouched() {
        let d1 = Basis::Diagonal.vector(0);
        let pair = PairState::product(&StateVector::horizontal(), &d1);
        let mut rng = SeededRng::new(5);
        for _ in 0..50 {
            let (k, remaining) = measure_pair(&pair, Which::Second, Basis::Diagonal, &mut rng);
            assert_eq!(k, 0);
            assert!(remaining.same_ray(&StateVector::horizontal(), 1e-12));
        }
    }

    #[test]
    fn local_measurement_collapses_joint_state() {
        let mut script = ScriptedSource::new([1]);
        let m = Basis::Angle(FRAC_PI_4).measurement();
        let (k, post) = epr_pair().measure_local(Which::Second, &m, &mut script);
        assert_eq!(k, 1);
        assert!((post.norm_sqr() - 1.0).abs() < 1e-12);
        // First photon must now be found orthogonal to the second's outcome.
        let u = Basis::Angle(FRAC_PI_4).vector(1);
        let first = post.contract(Which::Second, &u);
        let p: f64 = first.iter().map(|a| a.norm_sqr()).sum();
        assert!((p - 1.0).abs() < 1e-12);
    }
}
