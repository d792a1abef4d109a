use serde::{Deserialize, Serialize};

use super::{
    alice_prepare, bob_receive, detect_eavesdropping, sift, AliceRecord, Bb84Error, BobRecord, CompareRule,
    KeyOutcome, Message, SiftResult, Verdict,
};
use crate::channel::{
    ActiveAdversary, AuthPair, ClassicalChannel, LogEntry, Party, PublicLine, PulseFate, QuantumChannel,
    QuantumChannelConfig, Tamper,
};
use crate::eve::{EveStats, Eavesdropper, SiftedObservation};
use crate::keys::KeyLedger;
use crate::random::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n: usize,
    pub channel: QuantumChannelConfig,
    pub compare: CompareRule,
    /// Disagreements tolerated before rejecting. Zero means any disturbance
    /// aborts; anything else assumes a noisy channel the protocol itself does
    /// not model.
    pub threshold: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            channel: QuantumChannelConfig::lossless(),
            compare: CompareRule::default(),
            threshold: 0,
        }
    }
}

/// Everything one session produced, including simulator-side ground truth.
pub struct SessionResult {
    pub alice: AliceRecord,
    pub bob: BobRecord,
    pub fates: Vec<PulseFate>,
    pub sift: Option<SiftResult>,
    pub outcome: KeyOutcome,
    pub log: Vec<LogEntry>,
    pub auth: Option<AuthPair>,
    pub eve: String,
    pub adversary: Option<String>,
}

/// Runs quantum transmission, sifting and the comparison.
///
/// Random draws happen in a fixed order: Alice's bits, Alice's bases, then
/// per pulse the channel (loss, Eve, detection), then Bob's bases and
/// measurements, then Bob's choice of comparison subset.
pub fn run_session(
    config: &SessionConfig,
    eve: Option<Box<dyn Eavesdropper>>,
    adversary: Option<Box<dyn ActiveAdversary>>,
    auth: Option<AuthPair>,
    rng: &mut dyn RandomSource,
) -> Result<SessionResult, Bb84Error> {
    config.channel.validate()?;
    config.compare.validate()?;
    let (alice, photons) = alice_prepare(config.n, rng)?;

    let mut quantum = QuantumChannel::new(config.channel).with_eavesdropper(eve);
    let eve = quantum.eavesdropper_name();
    let mut fates = Vec::with_capacity(config.n);
    let mut arrivals = Vec::with_capacity(config.n);
    for photon in photons {
        let delivery = quantum.send(photon, rng);
        fates.push(delivery.fate);
        arrivals.push(delivery.into_photon());
    }
    let bob = bob_receive(arrivals, rng);

    let mut line = PublicLine::new(ClassicalChannel::new().with_adversary(adversary), auth);
    let adversary = line.channel().adversary_name();
    let (sift, outcome) = match sift(&alice, &bob, &mut line) {
        Ok(s) => {
            let outcome = detect_eavesdropping(&s, config.compare, config.threshold, rng, &mut line);
            (Some(s), outcome)
        }
        Err(e) => (None, KeyOutcome::suppressed(&e)),
    };
    let (channel, auth) = line.into_parts();
    Ok(SessionResult {
        alice,
        bob,
        fates,
        sift,
        outcome,
        log: channel.into_log(),
        auth,
        eve,
        adversary,
    })
}

impl SessionResult {
    pub fn n_sent(&self) -> usize {
        self.alice.len()
    }

    pub fn n_detected(&self) -> usize {
        self.bob.bits.iter().filter(|b| b.is_some()).count()
    }

    /// Slots Bob detected and read in Alice's basis, from the records rather
    /// than from the (possibly tampered) discussion.
    pub fn sifted_slots(&self) -> Vec<usize> {
        (0..self.n_sent())
            .filter(|&i| self.bob.bits[i].is_some() && self.bob.bases[i] == self.alice.pulses[i].basis)
            .collect()
    }

    pub fn observations(&self) -> Vec<SiftedObservation> {
        self.sifted_slots()
            .into_iter()
            .map(|i| SiftedObservation {
                alice_basis: self.alice.pulses[i].basis,
                alice_bit: self.alice.pulses[i].bit,
                bob_bit: self.bob.bits[i].expect("sifted slots are detected"),
                interception: self.fates[i].interception(),
            })
            .collect()
    }

    /// Disagreement rate over all sifted slots, or `None` if nothing was
    /// sifted.
    pub fn qber(&self) -> Option<f64> {
        let obs = self.observations();
        (!obs.is_empty()).then(|| obs.iter().filter(|o| o.alice_bit != o.bob_bit).count() as f64 / obs.len() as f64)
    }

    pub fn eve_stats(&self) -> EveStats {
        let compared = &self.outcome.compared;
        let flags: Vec<bool> = self.sifted_slots().iter().map(|i| compared.contains(i)).collect();
        EveStats::from_observations(&self.observations(), &flags, self.n_sent())
    }

    /// Alice's accepted key as a spendable ledger.
    pub fn key_ledger(&self) -> Option<KeyLedger> {
        self.outcome.key().map(|k| KeyLedger::new(k.to_vec()))
    }

    pub fn summary(&self, seed: u64) -> SessionSummary {
        let eve_stats = (self.eve != "none").then(|| self.eve_stats());
        let obs = self.observations();
        SessionSummary {
            n_sent: self.n_sent(),
            n_detected: self.n_detected(),
            n_sifted: obs.len(),
            sifted_errors: obs.iter().filter(|o| o.alice_bit != o.bob_bit).count(),
            n_compared: self.outcome.compared.len(),
            n_disagree: self.outcome.disagreements,
            verdict: self.outcome.verdict,
            key_length: self.outcome.key_length(),
            seed,
            eve: self.eve.clone(),
            adversary: self.adversary.clone(),
            qber: self.qber(),
            bob_fooled: self.outcome.bob_fooled(),
            auth_bits_consumed: self.auth.as_ref().map(|a| a.alice.consumed()),
            eve_stats,
        }
    }
}

/// One row of the session report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSummary {
    pub n_sent: usize,
    pub n_detected: usize,
    /// Detected slots read in Alice's basis.
    pub n_sifted: usize,
    /// Of those, how many Bob's bit differs on.
    pub sifted_errors: usize,
    pub n_compared: usize,
    pub n_disagree: usize,
    pub verdict: Verdict,
    pub key_length: usize,
    pub seed: u64,
    pub eve: String,
    pub adversary: Option<String>,
    pub qber: Option<f64>,
    pub bob_fooled: bool,
    pub auth_bits_consumed: Option<usize>,
    pub eve_stats: Option<EveStats>,
}

/// Rewrites Alice's confirmation so Bob always hears "no disagreements".
/// Works on plain and enveloped messages alike (the tag is left untouched).
#[derive(Debug, Default)]
pub struct ForgeAgreement {
    pub forged: usize,
}

impl ForgeAgreement {
    fn rewrite(msg: &[u8]) -> Option<Vec<u8>> {
        match serde_json::from_slice::<Message>(msg) {
            Ok(Message::AliceConfirms { disagreements }) if !disagreements.is_empty() => {
                serde_json::to_vec(&Message::AliceConfirms { disagreements: vec![] }).ok()
            }
            Ok(_) => None,
            Err(_) => {
                let mut v: serde_json::Value = serde_json::from_slice(msg).ok()?;
                let inner = Self::rewrite(v.get("body")?.as_str()?.as_bytes())?;
                v["body"] = serde_json::Value::String(String::from_utf8(inner).ok()?);
                serde_json::to_vec(&v).ok()
            }
        }
    }
}

impl ActiveAdversary for ForgeAgreement {
    fn name(&self) -> String {
        "forge-agreement".into()
    }

    fn tamper(&mut self, sender: Party, msg: &[u8]) -> Tamper {
        if sender != Party::Alice {
            return Tamper::Forward;
        }
        match Self::rewrite(msg) {
            Some(forged) => {
                self.forged += 1;
                Tamper::Substitute(forged)
            }
            None => Tamper::Forward,
        }
    }
}
