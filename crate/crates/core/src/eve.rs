//! Eavesdropping strategies for the quantum channel and an estimator of what
//! they learn (`b`) against what they disturb (`d`).
//!
//! Strategies only see photons through [`Photon::measure_in`]; there is no way
//! to read amplitudes or copy a photon. Only the shipped strategies are
//! checked against the tradeoff bound, not every conceivable measurement.

use std::f64::consts::FRAC_PI_8;

use serde::{Deserialize, Serialize};

use crate::quantum::{transmission_probability, Basis, CodingBasis, Photon};
use crate::random::RandomSource;

/// Below this many pulses the confidence radii are not worth much.
pub const MIN_CONFIDENT_PULSES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interception {
    pub basis: Basis,
    pub outcome: usize,
}

pub trait Eavesdropper: Send {
    fn name(&self) -> String;

    /// Handles one photon in transit. Returns the photon to forward and, if
    /// it was measured, what was seen.
    fn intercept(
        &mut self,
        index: usize,
        photon: Photon,
        rng: &mut dyn RandomSource,
    ) -> (Photon, Option<Interception>);
}

/// Leaves every photon alone.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoOp;

impl Eavesdropper for NoOp {
    fn name(&self) -> String {
        "none".into()
    }

    fn intercept(&mut self, _: usize, photon: Photon, _: &mut dyn RandomSource) -> (Photon, Option<Interception>) {
        (photon, None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisRule {
    Fixed(Basis),
    /// Rectilinear or diagonal with equal probability, per photon.
    UniformRandom,
    Angle(f64),
}

impl BasisRule {
    fn choose(&self, rng: &mut dyn RandomSource) -> Basis {
        match *self {
            BasisRule::Fixed(b) => b,
            BasisRule::UniformRandom => CodingBasis::from_coin(rng.coin()).basis(),
            BasisRule::Angle(theta) => Basis::Angle(theta),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BasisRule::Fixed(Basis::Rectilinear) => "rectilinear".into(),
            BasisRule::Fixed(Basis::Diagonal) => "diagonal".into(),
            BasisRule::Fixed(Basis::Circular) => "circular".into(),
            BasisRule::Fixed(Basis::Angle(t)) | BasisRule::Angle(t) => {
                if (*t - FRAC_PI_8).abs() < 1e-12 {
                    "angle-pi/8".into()
                } else {
                    format!("angle-{t}")
                }
            }
            BasisRule::UniformRandom => "random".into(),
        }
    }
}

/// Measures photons per `rule` and forwards the collapsed photon.
///
/// With `fraction < 1` only that share of photons is touched (a weaker
/// attack; the default is to intercept everything).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptResend {
    pub rule: BasisRule,
    pub fraction: f64,
}

impl InterceptResend {
    pub fn new(rule: BasisRule) -> Self {
        Self { rule, fraction: 1.0 }
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.fraction = fraction.clamp(0.0, 1.0);
        self
    }
}

pub fn intercept_resend(rule: BasisRule) -> InterceptResend {
    InterceptResend::new(rule)
}

impl Eavesdropper for InterceptResend {
    fn name(&self) -> String {
        if self.fraction < 1.0 {
            format!("intercept-{}@{}", self.rule.label(), self.fraction)
        } else {
            format!("intercept-{}", self.rule.label())
        }
    }

    fn intercept(&mut self, _: usize, photon: Photon, rng: &mut dyn RandomSource) -> (Photon, Option<Interception>) {
        if !rng.bernoulli(self.fraction) {
            return (photon, None);
        }
        let basis = self.rule.choose(rng);
        let (outcome, photon) = photon.measure_in(basis, rng);
        (photon, Some(Interception { basis, outcome }))
    }
}

/// What is known about one sifted pulse after the public discussion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiftedObservation {
    pub alice_basis: CodingBasis,
    pub alice_bit: bool,
    pub bob_bit: bool,
    pub interception: Option<Interception>,
}

fn binary_entropy(p: f64) -> f64 {
    [p, 1.0 - p]
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| -q * q.log2())
        .sum()
}

/// Eve's posterior probability that the key bit is 0, given her measurement
/// record and the basis Alice later announced. Uniform prior on the bit.
pub fn posterior_zero(alice_basis: CodingBasis, seen: &Interception) -> f64 {
    let likelihood = |bit: bool| {
        let sent = alice_basis.encode(bit);
        crate::quantum::inner_product(&seen.basis.vector(seen.outcome), &sent).norm_sqr()
    };
    let (l0, l1) = (likelihood(false), likelihood(true));
    if l0 + l1 == 0.0 {
        0.5
    } else {
        l0 / (l0 + l1)
    }
}

/// Shannon information (bits) Eve holds about one sifted key bit.
pub fn information(alice_basis: CodingBasis, seen: Option<&Interception>) -> f64 {
    seen.map_or(0.0, |s| 1.0 - binary_entropy(posterior_zero(alice_basis, s)))
}

fn same_frame(eve: Basis, alice: CodingBasis) -> bool {
    let a = alice.basis().vector(0);
    let e = eve.vectors();
    e.iter().any(|v| v.fidelity(&a) > 1.0 - 1e-9)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stratum {
    pub pulses: usize,
    pub disagreements: usize,
}

impl Stratum {
    pub fn rate(&self) -> Option<f64> {
        (self.pulses > 0).then(|| self.disagreements as f64 / self.pulses as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EveStats {
    /// Mean Shannon information per sifted bit.
    pub info_bits: f64,
    pub info_radius: f64,
    pub info_samples: usize,
    /// Disagreement frequency on sifted bits that were not publicly compared.
    pub disturbance: f64,
    pub disturbance_radius: f64,
    pub disturbance_samples: usize,
    /// Intercepted pulses where Eve happened to use Alice's basis.
    pub matched: Stratum,
    pub mismatched: Stratum,
    pub low_confidence: bool,
}

impl EveStats {
    /// `observations` are all sifted pulses; `compared` marks those whose
    /// bits were revealed (excluded from the disturbance estimate).
    pub fn from_observations(observations: &[SiftedObservation], compared: &[bool], pulses_sent: usize) -> Self {
        let n = observations.len();
        let infos: Vec<f64> = observations
            .iter()
            .map(|o| information(o.alice_basis, o.interception.as_ref()))
            .collect();
        let info_bits = mean(&infos);
        let var = if n > 1 {
            infos.iter().map(|x| (x - info_bits).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };

        let mut unrevealed = 0;
        let mut disagreements = 0;
        let mut matched = Stratum::default();
        let mut mismatched = Stratum::default();
        for (i, o) in observations.iter().enumerate() {
            let differs = o.alice_bit != o.bob_bit;
            if !compared.get(i).copied().unwrap_or(false) {
                unrevealed += 1;
                disagreements += differs as usize;
            }
            if let Some(seen) = o.interception {
                let s = if same_frame(seen.basis, o.alice_basis) {
                    &mut matched
                } else {
                    &mut mismatched
                };
                s.pulses += 1;
                s.disagreements += differs as usize;
            }
        }
        let disturbance = if unrevealed > 0 {
            disagreements as f64 / unrevealed as f64
        } else {
            0.0
        };
        Self {
            info_bits,
            info_radius: radius(var, n),
            info_samples: n,
            disturbance,
            disturbance_radius: radius(disturbance * (1.0 - disturbance), unrevealed),
            disturbance_samples: unrevealed,
            matched,
            mismatched,
            low_confidence: pulses_sent < MIN_CONFIDENT_PULSES,
        }
    }

    /// True if `d ≥ b/2` holds up to the combined 4σ radius.
    pub fn satisfies_tradeoff(&self) -> bool {
        self.disturbance + self.disturbance_radius + self.info_radius / 2.0 >= self.info_bits / 2.0
    }

    pub fn within_information_ceiling(&self) -> bool {
        self.info_bits <= 0.5 + self.info_radius
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Four standard errors.
pub fn radius(variance: f64, n: usize) -> f64 {
    if n == 0 {
        f64::INFINITY
    } else {
        4.0 * (variance / n as f64).sqrt()
    }
}

/// Runs one BB84 session of `n` pulses against `strategy` (lossless channel,
/// default comparison) and measures the strategy's information and
/// disturbance.
pub fn estimate_stats(strategy: Box<dyn Eavesdropper>, n: usize, rng: &mut dyn RandomSource) -> Result<EveStats, crate::bb84::Bb84Error> {
    let config = crate::bb84::SessionConfig {
        n,
        ..Default::default()
    };
    let result = crate::bb84::run_session(&config, Some(strategy), None, None, rng)?;
    Ok(result.eve_stats())
}

/// Analytic agreement probability between Alice and Bob on a sifted pulse
/// when Eve measures in `eve` and resends, averaged over Alice's bit.
pub fn analytic_agreement(alice: CodingBasis, eve: Basis) -> f64 {
    let Some(phi) = eve.angle() else {
        return 0.5;
    };
    let theta = alice.basis().angle().unwrap_or(0.0);
    let p = transmission_probability(theta, phi);
    p * p + (1.0 - p) * (1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::SeededRng;

    #[test]
    fn entropy_endpoints() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rectilinear_eve_learns_all_or_nothing() {
        let seen = Interception {
            basis: Basis::Rectilinear,
            outcome: 1,
        };
        assert!((information(CodingBasis::Rectilinear, Some(&seen)) - 1.0).abs() < 1e-12);
        assert!(information(CodingBasis::Diagonal, Some(&seen)).abs() < 1e-12);
        assert!(posterior_zero(CodingBasis::Rectilinear, &seen) < 1e-12);
    }

    #[test]
    fn midway_basis_information() {
        let seen = Interception {
            basis: Basis::Angle(FRAC_PI_8),
            outcome: 0,
        };
        let c2 = FRAC_PI_8.cos().powi(2);
        let expected = 1.0 - binary_entropy(c2);
        for a in [CodingBasis::Rectilinear, CodingBasis::Diagonal] {
            assert!((information(a, Some(&seen)) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn analytic_agreement_cases() {
        assert!((analytic_agreement(CodingBasis::Rectilinear, Basis::Rectilinear) - 1.0).abs() < 1e-12);
        assert!((analytic_agreement(CodingBasis::Rectilinear, Basis::Diagonal) - 0.5).abs() < 1e-12);
        let c = FRAC_PI_8.cos().powi(2);
        let s = FRAC_PI_8.sin().powi(2);
        for a in [CodingBasis::Rectilinear, CodingBasis::Diagonal] {
            assert!((analytic_agreement(a, Basis::Angle(FRAC_PI_8)) - (c * c + s * s)).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_interception_rate() {
        let mut eve = InterceptResend::new(BasisRule::Fixed(Basis::Rectilinear)).with_fraction(0.3);
        let mut rng = SeededRng::new(3);
        let n = 20_000;
        let hits = (0..n)
            .filter(|&i| {
                let p = Photon::prepare(CodingBasis::Diagonal.encode(false));
                eve.intercept(i, p, &mut rng).1.is_some()
            })
            .count();
        let f = hits as f64 / n as f64;
        assert!((f - 0.3).abs() <= radius(0.21, n));
        assert!(eve.name().contains("@0.3"));
    }

    #[test]
    fn noop_learns_and_disturbs_nothing() {
        let mut rng = SeededRng::new(9);
        let stats = estimate_stats(Box::new(NoOp), 2_000, &mut rng).unwrap();
        assert_eq!(stats.info_bits, 0.0);
        assert_eq!(stats.disturbance, 0.0);
        assert!(stats.low_confidence);
        assert_eq!(stats.matched.pulses + stats.mismatched.pulses, 0);
    }
}
