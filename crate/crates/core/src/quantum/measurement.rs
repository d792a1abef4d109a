use super::{normalize, Amplitude, Basis, QuantumError, StateVector, UNIT_TOLERANCE};
use crate::random::RandomSource;

/// A 2x2 complex operator, row-major.
pub type Operator = [[Amplitude; 2]; 2];

/// A projective measurement: orthogonal projectors that sum to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    projectors: Vec<Operator>,
}

fn zero() -> Amplitude {
    Amplitude::new(0.0, 0.0)
}

fn mat_mul(a: &Operator, b: &Operator) -> Operator {
    let mut out = [[zero(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn max_dist(a: &Operator, b: &Operator) -> f64 {
    (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (a[i][j] - b[i][j]).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn apply(op: &Operator, v: [Amplitude; 2]) -> [Amplitude; 2] {
    [
        op[0][0] * v[0] + op[0][1] * v[1],
        op[1][0] * v[0] + op[1][1] * v[1],
    ]
}

/// `|u><u|`
pub(crate) fn outer(u: &StateVector) -> Operator {
    let a = u.amplitudes();
    let mut out = [[zero(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i] * a[j].conj();
        }
    }
    out
}

impl Measurement {
    /// Validates that the projectors are Hermitian, idempotent, mutually
    /// orthogonal and resolve the identity, all within [`UNIT_TOLERANCE`].
    pub fn new(projectors: Vec<Operator>) -> Result<Self, QuantumError> {
        if projectors.is_empty() {
            return Err(QuantumError::InvalidMeasurement("no projectors".into()));
        }
        let flat = projectors.iter().flatten().flatten();
        if flat.into_iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QuantumError::NonFinite("projector"));
        }
        let identity = [
            [Amplitude::new(1.0, 0.0), zero()],
            [zero(), Amplitude::new(1.0, 0.0)],
        ];
        let mut sum = [[zero(); 2]; 2];
        for (k, p) in projectors.iter().enumerate() {
            let adjoint = [
                [p[0][0].conj(), p[1][0].conj()],
                [p[0][1].conj(), p[1][1].conj()],
            ];
            if max_dist(p, &adjoint) > UNIT_TOLERANCE {
                return Err(QuantumError::InvalidMeasurement(format!("projector {k} is not Hermitian")));
            }
            if max_dist(&mat_mul(p, p), p) > UNIT_TOLERANCE {
                return Err(QuantumError::InvalidMeasurement(format!("projector {k} is not idempotent")));
            }
            for (j, q) in projectors.iter().enumerate().skip(k + 1) {
                if max_dist(&mat_mul(p, q), &[[zero(); 2]; 2]) > UNIT_TOLERANCE {
                    return Err(QuantumError::InvalidMeasurement(format!(
                        "projectors {k} and {j} are not orthogonal"
                    )));
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += p[i][j];
                }
            }
        }
        if max_dist(&sum, &identity) > UNIT_TOLERANCE {
            return Err(QuantumError::InvalidMeasurement(
                "projectors do not sum to the identity".into(),
            ));
        }
        Ok(Self { projectors })
    }

    /// The two-outcome measurement that distinguishes the vectors of `basis`.
    pub fn from_basis(basis: Basis) -> Self {
        let [u, v] = basis.vectors();
        Self {
            projectors: vec![outer(&u), outer(&v)],
        }
    }

    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }

    pub fn outcome_count(&self) -> usize {
        self.projectors.len()
    }

    /// `|M_k psi|^2` for every outcome `k`.
    pub fn probabilities(&self, psi: &StateVector) -> Vec<f64> {
        self.projectors
            .iter()
            .map(|p| apply(p, psi.amplitudes()).iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }
}

/// Measures `psi`: outcome `k` with probability `|M_k psi|^2`, leaving the
/// normalized projection `M_k psi / |M_k psi|`.
pub fn measure(
    psi: &StateVector,
    m: &Measurement,
    rng: &mut dyn RandomSource,
) -> (usize, StateVector) {
    let probabilities = m.probabilities(psi);
    let k = rng.pick(&probabilities);
    let projected = apply(&m.projectors[k], psi.amplitudes());
    // A zero-probability pick only happens with a faulty scripted source;
    // the state is then left as is and the fault is recorded by the source.
    let post = normalize(projected)
        .map(StateVector::from_normalized)
        .unwrap_or(*psi);
    (k, post)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;
    use crate::quantum::photon_from_angle;
    use crate::random::{ScriptedSource, SeededRng};

    #[test]
    fn basis_measurements_are_valid() {
        for b in [Basis::Rectilinear, Basis::Diagonal, Basis::Circular, Basis::Angle(1.234)] {
            let m = Measurement::from_basis(b);
            Measurement::new(m.projectors().to_vec()).unwrap();
        }
    }

    #[test]
    fn rejects_non_projectors() {
        let one = Amplitude::new(1.0, 0.0);
        let half = Amplitude::new(0.5, 0.0);
        let z = zero();
        assert!(Measurement::new(vec![]).is_err());
        // Does not resolve the identity.
        assert!(Measurement::new(vec![[[one, z], [z, z]]]).is_err());
        // Not idempotent.
        assert!(Measurement::new(vec![[[half, z], [z, half]], [[half, z], [z, half]]]).is_err());
        // Not Hermitian.
        let i = Amplitude::new(0.0, 1.0);
        assert!(Measurement::new(vec![[[one, i], [z, z]], [[z, -i], [z, one]]]).is_err());
        // Trivial one-outcome measurement is fine.
        Measurement::new(vec![[[one, z], [z, one]]]).unwrap();
    }

    #[test]
    fn eigenstate_is_certain_and_unchanged() {
        let mut rng = SeededRng::new(1);
        let r1 = StateVector::horizontal();
        for _ in 0..100 {
            let (k, post) = measure(&r1, &Basis::Rectilinear.measurement(), &mut rng);
            assert_eq!(k, 0);
            assert!(post.same_ray(&r1, 1e-12));
        }
    }

    #[test]
    fn diagonal_photon_is_even_odds_in_rectilinear() {
        let d1 = photon_from_angle(FRAC_PI_4).unwrap();
        let p = Basis::Rectilinear.measurement().probabilities(&d1);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn probabilities_follow_cos_squared() {
        for alpha in [0.0, 0.3, 1.0, 2.5] {
            let p = Basis::Rectilinear.measurement().probabilities(&photon_from_angle(alpha).unwrap());
            assert!((p[0] - alpha.cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn scripted_outcome_selects_projection() {
        let mut script = ScriptedSource::new([1]);
        let d1 = photon_from_angle(FRAC_PI_4).unwrap();
        let (k, post) = measure(&d1, &Basis::Rectilinear.measurement(), &mut script);
        assert_eq!(k, 1);
        assert!(post.same_ray(&StateVector::vertical(), 1e-12));
        assert!(script.fault().is_none());
    }
}
