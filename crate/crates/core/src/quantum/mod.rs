//! Polarization states of single photons and photon pairs.
//!
//! A photon's polarization lives in a two-dimensional complex Hilbert space;
//! a pair lives in the four-dimensional tensor product. States here are exact
//! (up to `f64` rounding), measurements are projector lists, and every random
//! collapse draws from an explicitly supplied [`RandomSource`].
//!
//! Protocol code never touches amplitudes. It handles [`Photon`]s, which can
//! only be prepared from a known description, measured, or dropped. There is
//! no accessor and no `Clone`, so an eavesdropper cannot copy an unknown
//! state; she can only measure it and send something on.
//!
//! [`RandomSource`]: crate::random::RandomSource

mod basis;
mod measurement;
mod pair;
mod photon;
mod state;

use num_complex::Complex64;
use thiserror::Error;

pub use basis::{Basis, CodingBasis};
pub use measurement::{measure, Measurement, Operator};
pub use pair::{epr_pair, measure_pair, PairState, Which};
pub use photon::{entangled_photons, Photon};
pub use state::{inner_product, photon_from_angle, transmission_probability, StateVector};

/// Complex amplitude stored as a pair of `f64`.
pub type Amplitude = Complex64;

/// Tolerance for unit norm, orthonormality and projector identities.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Inputs whose norm is within this distance of 1 are silently renormalized.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("state norm {norm} is too far from 1")]
    NotNormalized { norm: f64 },
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
}

/// Normalizes a vector of amplitudes whose norm is already close to 1.
pub(crate) fn renormalize<const N: usize>(
    amps: [Amplitude; N],
    what: &'static str,
) -> Result<[Amplitude; N], QuantumError> {
    if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(QuantumError::NonFinite(what));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > RENORMALIZE_TOLERANCE {
        return Err(QuantumError::NotNormalized { norm });
    }
    Ok(amps.map(|a| a / norm))
}

/// Scales a non-zero vector to unit length. Returns `None` for (near) zero vectors.
pub(crate) fn normalize<const N: usize>(amps: [Amplitude; N]) -> Option<[Amplitude; N]> {
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !norm.is_finite() || norm <= 1e-15 {
        return None;
    }
    Some(amps.map(|a| a / norm))
}
