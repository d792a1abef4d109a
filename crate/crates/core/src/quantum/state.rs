use super::{renormalize, Amplitude, QuantumError};

/// A unit vector in the polarization space of one photon, in rectilinear
/// coordinates: `r1 = (1, 0)` is horizontal, `r2 = (0, 1)` vertical.
///
/// This is a *known* description of a state. Physical photons in flight are
/// [`Photon`](super::Photon) handles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    amps: [Amplitude; 2],
}

impl StateVector {
    /// Builds a state from rectilinear coordinates. Inputs within
    /// [`RENORMALIZE_TOLERANCE`](super::RENORMALIZE_TOLERANCE) of unit norm are
    /// renormalized; anything else is rejected.
    pub fn new(a0: Amplitude, a1: Amplitude) -> Result<Self, QuantumError> {
        renormalize([a0, a1], "state vector").map(|amps| Self { amps })
    }

    pub(crate) fn from_normalized(amps: [Amplitude; 2]) -> Self {
        Self { amps }
    }

    pub fn horizontal() -> Self {
        Self::from_normalized([Amplitude::new(1.0, 0.0), Amplitude::new(0.0, 0.0)])
    }

    pub fn vertical() -> Self {
        Self::from_normalized([Amplitude::new(0.0, 0.0), Amplitude::new(1.0, 0.0)])
    }

    pub fn amplitudes(&self) -> [Amplitude; 2] {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Squared overlap `|<self|other>|^2`. Insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        inner_product(self, other).norm_sqr()
    }

    /// True when the two states describe the same ray (equal up to a global phase).
    pub fn same_ray(&self, other: &StateVector, tolerance: f64) -> bool {
        (1.0 - self.fidelity(other)).abs() <= tolerance
    }
}

/// The state of a photon linearly polarized at `alpha` radians from horizontal.
pub fn photon_from_angle(alpha: f64) -> Result<StateVector, QuantumError> {
    if !alpha.is_finite() {
        return Err(QuantumError::NonFinite("polarization angle"));
    }
    let (sin, cos) = alpha.sin_cos();
    Ok(StateVector::from_normalized([
        Amplitude::new(cos, 0.0),
        Amplitude::new(sin, 0.0),
    ]))
}

/// `<phi|psi> = sum_j conj(phi_j) psi_j`.
pub fn inner_product(phi: &StateVector, psi: &StateVector) -> Amplitude {
    phi.amps
        .iter()
        .zip(psi.amps.iter())
        .map(|(p, q)| p.conj() * q)
        .sum()
}

/// Probability that a photon polarized at `alpha` passes a filter at `beta`:
/// `cos^2(alpha - beta)`.
pub fn transmission_probability(alpha: f64, beta: f64) -> f64 {
    let c = (alpha - beta).cos();
    c * c
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn angle_constructor_examples() {
        let h = photon_from_angle(0.0).unwrap().amplitudes();
        assert!(close(h[0].re, 1.0) && close(h[1].re, 0.0));
        let v = photon_from_angle(FRAC_PI_2).unwrap().amplitudes();
        assert!(close(v[0].re, 0.0) && close(v[1].re, 1.0));
        let d = photon_from_angle(FRAC_PI_4).unwrap().amplitudes();
        assert!(close(d[0].re, FRAC_1_SQRT_2) && close(d[1].re, FRAC_1_SQRT_2));
        assert!((d[0].re - 0.707).abs() < 1e-3);
        assert!(d.iter().all(|a| a.im == 0.0));
    }

    #[test]
    fn angle_constructor_rejects_non_finite() {
        assert_eq!(
            photon_from_angle(f64::NAN),
            Err(QuantumError::NonFinite("polarization angle"))
        );
        assert!(photon_from_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn constructor_renormalizes_small_drift_and_rejects_large() {
        let s = StateVector::new(Amplitude::new(1.0 + 5e-7, 0.0), Amplitude::new(0.0, 0.0)).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(matches!(
            StateVector::new(Amplitude::new(1.1, 0.0), Amplitude::new(0.0, 0.0)),
            Err(QuantumError::NotNormalized { .. })
        ));
        assert!(matches!(
            StateVector::new(Amplitude::new(f64::NAN, 0.0), Amplitude::new(0.0, 0.0)),
            Err(QuantumError::NonFinite(_))
        ));
    }

    #[test]
    fn inner_product_examples() {
        let r1 = StateVector::horizontal();
        let r2 = StateVector::vertical();
        let d1 = photon_from_angle(FRAC_PI_4).unwrap();
        assert!(close(inner_product(&r1, &r1).re, 1.0));
        assert!(close(inner_product(&r1, &r2).norm(), 0.0));
        assert!(close(inner_product(&r1, &d1).norm_sqr(), 0.5));
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first_argument() {
        let a = StateVector::new(Amplitude::new(0.6, 0.0), Amplitude::new(0.0, 0.8)).unwrap();
        let b = photon_from_angle(0.3).unwrap();
        let ab = inner_product(&a, &b);
        let ba = inner_product(&b, &a);
        assert!(close(ab.re, ba.re) && close(ab.im, -ba.im));
    }

    #[test]
    fn transmission_examples() {
        assert!(close(transmission_probability(0.7, 0.7), 1.0));
        assert!(close(transmission_probability(FRAC_PI_2, 0.0), 0.0));
        assert!(close(transmission_probability(0.0, FRAC_PI_4), 0.5));
        assert!(close(
            transmission_probability(0.2, FRAC_PI_8),
            transmission_probability(FRAC_PI_8, 0.2)
        ));
    }
}
