use std::fmt;
use std::sync::{Arc, Mutex};

use super::measurement::outer;
use super::{Basis, Measurement, PairState, StateVector, Which};
use crate::random::RandomSource;

/// An opaque single photon in flight.
///
/// A photon can be prepared from a known state, measured (consuming it and
/// yielding its post-measurement successor), or dropped. It cannot be copied
/// and its amplitudes cannot be read.
pub struct Photon {
    carrier: Carrier,
}

enum Carrier {
    Free(StateVector),
    Entangled {
        joint: Arc<Mutex<PairState>>,
        side: Which,
    },
}

impl fmt::Debug for Photon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.carrier {
            Carrier::Free(_) => f.write_str("Photon(..)"),
            Carrier::Entangled { side, .. } => write!(f, "Photon(entangled, {side:?})"),
        }
    }
}

impl Photon {
    pub fn prepare(state: StateVector) -> Self {
        Self {
            carrier: Carrier::Free(state),
        }
    }

    /// Measures the photon, returning the outcome index and the photon that
    /// leaves the apparatus.
    pub fn measure(self, m: &Measurement, rng: &mut dyn RandomSource) -> (usize, Photon) {
        match self.carrier {
            Carrier::Free(psi) => {
                let (k, post) = super::measure(&psi, m, rng);
                (k, Photon::prepare(post))
            }
            Carrier::Entangled { joint, side } => {
                let mut guard = joint.lock().expect("pair state lock poisoned");
                let (k, post) = guard.measure_local(side, m, rng);
                *guard = post;
                drop(guard);
                let p = &m.projectors()[k];
                let rank_one = ((p[0][0] + p[1][1]).re - 1.0).abs() < 1e-9;
                if rank_one {
                    // The pair is now a product state; this side is the
                    // projector's range vector and no longer linked.
                    let range = range_vector(p);
                    (k, Photon::prepare(range))
                } else {
                    (k, Photon { carrier: Carrier::Entangled { joint, side } })
                }
            }
        }
    }

    pub fn measure_in(self, basis: Basis, rng: &mut dyn RandomSource) -> (usize, Photon) {
        self.measure(&basis.measurement(), rng)
    }
}

/// Unit vector spanning a rank-one projector.
fn range_vector(p: &super::Operator) -> StateVector {
    let column = if p[0][0].norm() >= p[1][1].norm() { 0 } else { 1 };
    let v = [p[0][column], p[1][column]];
    let candidate = super::normalize(v)
        .map(StateVector::from_normalized)
        .unwrap_or_else(StateVector::horizontal);
    debug_assert!({
        let back = outer(&candidate);
        (0..2).all(|i| (0..2).all(|j| (back[i][j] - p[i][j]).norm() < 1e-6))
    });
    candidate
}

/// Splits a two-photon state into two linked handles. Measuring either one
/// collapses the shared state seen by the other.
pub fn entangled_photons(pair: PairState) -> (Photon, Photon) {
    let joint = Arc::new(Mutex::new(pair));
    (
        Photon {
            carrier: Carrier::Entangled {
                joint: Arc::clone(&joint),
                side: Which::First,
            },
        },
        Photon {
            carrier: Carrier::Entangled {
                joint,
                side: Which::Second,
            },
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{epr_pair, Amplitude};
    use crate::random::SeededRng;

    #[test]
    fn repeat_measurement_is_stable() {
        let mut rng = SeededRng::new(3);
        for i in 0..200 {
            let basis = Basis::Angle(0.1 * i as f64);
            let p = Photon::prepare(Basis::Circular.vector(i % 2));
            let (k, p) = p.measure_in(basis, &mut rng);
            let (k2, p) = p.measure_in(basis, &mut rng);
            let (k3, _) = p.measure_in(basis, &mut rng);
            assert_eq!((k, k), (k2, k3));
        }
    }

    #[test]
    fn entangled_halves_anticorrelate_in_either_order() {
        let mut rng = SeededRng::new(11);
        for i in 0..500 {
            let basis = [Basis::Rectilinear, Basis::Diagonal, Basis::Circular][i % 3];
            let (a, b) = entangled_photons(epr_pair());
            let (ka, kb) = if i % 2 == 0 {
                let (ka, _) = a.measure_in(basis, &mut rng);
                let (kb, _) = b.measure_in(basis, &mut rng);
                (ka, kb)
            } else {
                let (kb, _) = b.measure_in(basis, &mut rng);
                let (ka, _) = a.measure_in(basis, &mut rng);
                (ka, kb)
            };
            assert_ne!(ka, kb);
        }
    }

    #[test]
    fn trivial_measurement_keeps_entanglement() {
        let one = Amplitude::new(1.0, 0.0);
        let z = Amplitude::new(0.0, 0.0);
        let identity = Measurement::new(vec![[[one, z], [z, one]]]).unwrap();
        let mut rng = SeededRng::new(2);
        for _ in 0..100 {
            let (a, b) = entangled_photons(epr_pair());
            let (_, a) = a.measure(&identity, &mut rng);
            let (ka, _) = a.measure_in(Basis::Diagonal, &mut rng);
            let (kb, _) = b.measure_in(Basis::Diagonal, &mut rng);
            assert_ne!(ka, kb);
        }
    }

    #[test]
    fn debug_does_not_leak_amplitudes() {
        let p = Photon::prepare(StateVector::vertical());
        assert_eq!(format!("{p:?}"), "Photon(..)");
    }
}
