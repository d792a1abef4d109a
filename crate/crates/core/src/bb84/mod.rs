//! Quantum public key distribution: Alice sends random bits in random
//! conjugate bases, Bob measures in random bases, and a public discussion
//! sifts the matching positions and spends a random subset of them checking
//! for disturbance. Whatever survives is a one-time pad.

mod pad;
mod session;

pub use pad::{decrypt, one_time_pad, xor_bits};
pub use session::{run_session, ForgeAgreement, SessionConfig, SessionResult, SessionSummary};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, LineError, LogEntry, Party, PublicLine};
use crate::quantum::{CodingBasis, Photon, StateVector};
use crate::random::{sample_without_replacement, RandomSource};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Bb84Error {
    #[error("at least one pulse is required")]
    NoPulses,
    #[error("compare fraction must lie in [0, 1], got {0}")]
    BadFraction(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// One bit as Alice encodes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pulse {
    pub bit: bool,
    pub basis: CodingBasis,
}

impl Pulse {
    pub fn state(&self) -> StateVector {
        self.basis.encode(self.bit)
    }

    pub fn photon(&self) -> Photon {
        Photon::prepare(self.state())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AliceRecord {
    pub pulses: Vec<Pulse>,
}

impl AliceRecord {
    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }
}

/// Draws `n` bits, then `n` bases, and encodes them.
pub fn alice_prepare(n: usize, rng: &mut dyn RandomSource) -> Result<(AliceRecord, Vec<Photon>), Bb84Error> {
    if n == 0 {
        return Err(Bb84Error::NoPulses);
    }
    let bits: Vec<bool> = (0..n).map(|_| rng.coin()).collect();
    let bases: Vec<CodingBasis> = (0..n).map(|_| CodingBasis::from_coin(rng.coin())).collect();
    let pulses: Vec<Pulse> = bits
        .into_iter()
        .zip(bases)
        .map(|(bit, basis)| Pulse { bit, basis })
        .collect();
    let photons = pulses.iter().map(Pulse::photon).collect();
    Ok((AliceRecord { pulses }, photons))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BobRecord {
    /// Bob's reading basis for every time slot.
    pub bases: Vec<CodingBasis>,
    /// Measured bit, or `None` when nothing was detected.
    pub bits: Vec<Option<bool>>,
}

impl BobRecord {
    pub fn detected(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i].is_some()).collect()
    }
}

/// Bob picks a reading basis for every slot (before knowing whether anything
/// will arrive) and measures whatever his detector caught.
pub fn bob_receive(arrivals: Vec<Option<Photon>>, rng: &mut dyn RandomSource) -> BobRecord {
    let mut bases = Vec::with_capacity(arrivals.len());
    let mut bits = Vec::with_capacity(arrivals.len());
    for arrival in arrivals {
        let basis = CodingBasis::from_coin(rng.coin());
        bases.push(basis);
        bits.push(arrival.map(|p| p.measure_in(basis.basis(), rng).0 == 1));
    }
    BobRecord { bases, bits }
}

/// Public discussion messages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    /// Which slots Bob detected and the basis he read each in.
    BobBases { detected: Vec<usize>, bases: String },
    /// Which of those Alice encoded in the same basis.
    AliceMatches { kept: Vec<usize> },
    /// Bob's bits at a random subset of kept positions.
    BobReveals { positions: Vec<usize>, bits: String },
    /// Positions where Alice's bits differ from the revealed ones.
    AliceConfirms { disagreements: Vec<usize> },
}

fn bits_to_string(bits: impl IntoIterator<Item = bool>) -> String {
    bits.into_iter().map(|b| if b { '1' } else { '0' }).collect()
}

fn bits_from_string(s: &str) -> Result<Vec<bool>, LineError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(LineError::Malformed(format!("bad bit {other:?}"))),
        })
        .collect()
}

fn malformed(what: &str) -> LineError {
    LineError::Malformed(what.to_string())
}

/// Positions both parties keep after the basis discussion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SiftResult {
    /// As decided by Alice.
    pub kept: Vec<usize>,
    pub alice_bits: Vec<bool>,
    /// As received by Bob. Differs from `kept` only if the public channel was
    /// tampered with undetected.
    pub bob_kept: Vec<usize>,
    pub bob_bits: Vec<bool>,
}

impl SiftResult {
    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }
}

/// Runs the basis discussion over `line`.
pub fn sift(alice: &AliceRecord, bob: &BobRecord, line: &mut PublicLine) -> Result<SiftResult, LineError> {
    let detected = bob.detected();
    let report = Message::BobBases {
        bases: detected.iter().map(|&i| bob.bases[i].letter()).collect(),
        detected: detected.clone(),
    };
    let Message::BobBases { detected: heard, bases } = line.send(Party::Bob, &report)? else {
        return Err(malformed("expected bob_bases"));
    };
    if heard.len() != bases.chars().count() {
        return Err(malformed("bases do not match detected slots"));
    }
    let mut kept = Vec::new();
    for (i, letter) in heard.into_iter().zip(bases.chars()) {
        let basis = CodingBasis::from_letter(letter).ok_or_else(|| malformed("bad basis letter"))?;
        let pulse = alice.pulses.get(i).ok_or_else(|| malformed("slot out of range"))?;
        if pulse.basis == basis {
            kept.push(i);
        }
    }
    let alice_bits = kept.iter().map(|&i| alice.pulses[i].bit).collect();

    let Message::AliceMatches { kept: bob_kept } = line.send(Party::Alice, &Message::AliceMatches { kept: kept.clone() })? else {
        return Err(malformed("expected alice_matches"));
    };
    let bob_bits = bob_kept
        .iter()
        .map(|&i| bob.bits.get(i).copied().flatten().ok_or_else(|| malformed("kept slot not detected")))
        .collect::<Result<Vec<bool>, _>>()?;
    Ok(SiftResult {
        kept,
        alice_bits,
        bob_kept,
        bob_bits,
    })
}

/// How many sifted bits to sacrifice for the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareRule {
    /// `ceil(fraction * kept)` positions.
    Fraction(f64),
    /// A fixed number of positions (all of them if fewer are kept).
    Count(usize),
}

impl Default for CompareRule {
    fn default() -> Self {
        CompareRule::Fraction(1.0 / 3.0)
    }
}

impl CompareRule {
    pub fn validate(&self) -> Result<(), Bb84Error> {
        match *self {
            CompareRule::Fraction(f) if !(0.0..=1.0).contains(&f) => Err(Bb84Error::BadFraction(f)),
            _ => Ok(()),
        }
    }

    pub fn size(&self, kept: usize) -> usize {
        match *self {
            // The small slack keeps 1/3 of 6 at 2 despite float rounding.
            CompareRule::Fraction(f) => ((f * kept as f64 - 1e-9).ceil().max(0.0) as usize).min(kept),
            CompareRule::Count(k) => k.min(kept),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected,
    /// The public discussion could not be completed: a message was dropped,
    /// failed authentication, or did not parse.
    Suppressed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyOutcome {
    pub verdict: Verdict,
    pub alice_verdict: Verdict,
    pub bob_verdict: Verdict,
    /// Positions whose bits were published, in the order Bob chose them.
    pub compared: Vec<usize>,
    /// Disagreements Alice found among the compared positions.
    pub disagreements: usize,
    pub alice_key: Option<Vec<bool>>,
    pub bob_key: Option<Vec<bool>>,
    /// Key positions, in order.
    pub key_positions: Vec<usize>,
    pub failure: Option<String>,
}

impl KeyOutcome {
    pub fn suppressed(err: &LineError) -> Self {
        Self {
            verdict: Verdict::Suppressed,
            alice_verdict: Verdict::Suppressed,
            bob_verdict: Verdict::Suppressed,
            compared: Vec::new(),
            disagreements: 0,
            alice_key: None,
            bob_key: None,
            key_positions: Vec::new(),
            failure: Some(err.to_string()),
        }
    }

    fn rejected_empty() -> Self {
        Self {
            verdict: Verdict::Rejected,
            alice_verdict: Verdict::Rejected,
            bob_verdict: Verdict::Rejected,
            compared: Vec::new(),
            disagreements: 0,
            alice_key: None,
            bob_key: None,
            key_positions: Vec::new(),
            failure: Some("nothing survived sifting".into()),
        }
    }

    /// The agreed key, if both parties accepted.
    pub fn key(&self) -> Option<&[bool]> {
        match self.verdict {
            Verdict::Accepted => self.alice_key.as_deref(),
            _ => None,
        }
    }

    pub fn key_length(&self) -> usize {
        self.key().map_or(0, <[bool]>::len)
    }

    /// Bob believes he holds a good key although Alice saw disagreements or
    /// the keys differ.
    pub fn bob_fooled(&self) -> bool {
        self.bob_verdict == Verdict::Accepted
            && (self.alice_verdict != Verdict::Accepted || self.alice_key != self.bob_key)
    }
}

/// Bob publishes his bits at a random subset of kept positions; Alice
/// reports any disagreement. A party accepts iff the number of disagreements
/// is at most `threshold` (zero unless deliberately relaxed).
pub fn detect_eavesdropping(
    sifted: &SiftResult,
    rule: CompareRule,
    threshold: usize,
    rng: &mut dyn RandomSource,
    line: &mut PublicLine,
) -> KeyOutcome {
    if sifted.bob_kept.is_empty() {
        return KeyOutcome::rejected_empty();
    }
    match compare(sifted, rule, threshold, rng, line) {
        Ok(outcome) => outcome,
        Err(e) => KeyOutcome::suppressed(&e),
    }
}

fn compare(
    sifted: &SiftResult,
    rule: CompareRule,
    threshold: usize,
    rng: &mut dyn RandomSource,
    line: &mut PublicLine,
) -> Result<KeyOutcome, LineError> {
    let k = rule.size(sifted.bob_kept.len());
    let picks = sample_without_replacement(rng, sifted.bob_kept.len(), k);
    let positions: Vec<usize> = picks.iter().map(|&j| sifted.bob_kept[j]).collect();
    let reveal = Message::BobReveals {
        bits: bits_to_string(picks.iter().map(|&j| sifted.bob_bits[j])),
        positions: positions.clone(),
    };

    let Message::BobReveals { positions: heard, bits } = line.send(Party::Bob, &reveal)? else {
        return Err(malformed("expected bob_reveals"));
    };
    let bits = bits_from_string(&bits)?;
    if bits.len() != heard.len() {
        return Err(malformed("revealed bits do not match positions"));
    }
    let mut bad = Vec::new();
    for (&pos, &bit) in heard.iter().zip(&bits) {
        match sifted.kept.iter().position(|&p| p == pos) {
            Some(j) if sifted.alice_bits[j] == bit => {}
            _ => bad.push(pos),
        }
    }
    let alice_ok = bad.len() <= threshold;
    let disagreements = bad.len();

    let Message::AliceConfirms { disagreements: told } = line.send(Party::Alice, &Message::AliceConfirms { disagreements: bad })? else {
        return Err(malformed("expected alice_confirms"));
    };
    let bob_ok = told.len() <= threshold;

    let alice_key_positions: Vec<usize> = sifted.kept.iter().copied().filter(|p| !heard.contains(p)).collect();
    let alice_key: Vec<bool> = sifted
        .kept
        .iter()
        .zip(&sifted.alice_bits)
        .filter(|(p, _)| !heard.contains(p))
        .map(|(_, &b)| b)
        .collect();
    let bob_key: Vec<bool> = sifted
        .bob_kept
        .iter()
        .zip(&sifted.bob_bits)
        .filter(|(p, _)| !positions.contains(p))
        .map(|(_, &b)| b)
        .collect();

    let side = |ok: bool| if ok { Verdict::Accepted } else { Verdict::Rejected };
    let verdict = if alice_ok && bob_ok { Verdict::Accepted } else { Verdict::Rejected };
    Ok(KeyOutcome {
        verdict,
        alice_verdict: side(alice_ok),
        bob_verdict: side(bob_ok),
        compared: positions,
        disagreements,
        alice_key: alice_ok.then_some(alice_key),
        bob_key: bob_ok.then_some(bob_key),
        key_positions: alice_key_positions,
        failure: None,
    })
}

/// Positions in `secret` whose bit values appear anywhere in the public log.
/// Empty when the discussion kept its secrets.
pub fn secrecy_audit(log: &[LogEntry], secret: &[usize]) -> Vec<usize> {
    let mut leaked = Vec::new();
    for entry in log {
        for bytes in std::iter::once(&entry.original).chain(entry.delivered.as_ref()) {
            if let Some(Message::BobReveals { positions, .. }) = decode_logged(bytes) {
                leaked.extend(positions.into_iter().filter(|p| secret.contains(p)));
            }
        }
    }
    leaked.sort_unstable();
    leaked.dedup();
    leaked
}

/// Parses a logged message, unwrapping an authentication envelope if present.
pub fn decode_logged(bytes: &[u8]) -> Option<Message> {
    if let Ok(m) = serde_json::from_slice::<Message>(bytes) {
        return Some(m);
    }
    let v: serde_json::Value = serde_json::from_slice(bytes).ok()?;
    serde_json::from_str(v.get("body")?.as_str()?).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{ScriptedSource, SeededRng};

    #[test]
    fn zero_pulses_is_an_error() {
        let mut rng = SeededRng::new(0);
        assert_eq!(alice_prepare(0, &mut rng).unwrap_err(), Bb84Error::NoPulses);
    }

    #[test]
    fn compare_sizes() {
        let third = CompareRule::default();
        assert_eq!(third.size(6), 2);
        assert_eq!(third.size(7), 3);
        assert_eq!(third.size(0), 0);
        assert_eq!(third.size(1), 1);
        assert_eq!(CompareRule::Count(20).size(5), 5);
        assert_eq!(CompareRule::Fraction(1.0).size(9), 9);
        assert!(CompareRule::Fraction(1.5).validate().is_err());
    }

    #[test]
    fn scripted_alice_draws_bits_then_bases() {
        let mut script = ScriptedSource::new([0, 1, 1, 0]);
        let (rec, _) = alice_prepare(2, &mut script).unwrap();
        assert_eq!(
            rec.pulses,
            vec![
                Pulse { bit: false, basis: CodingBasis::Diagonal },
                Pulse { bit: true, basis: CodingBasis::Rectilinear },
            ]
        );
    }

    #[test]
    fn matching_basis_reproduces_bit() {
        let mut rng = SeededRng::new(4);
        for _ in 0..200 {
            let (alice, photons) = alice_prepare(1, &mut rng).unwrap();
            let bob = bob_receive(photons.into_iter().map(Some).collect(), &mut rng);
            if bob.bases[0] == alice.pulses[0].basis {
                assert_eq!(bob.bits[0], Some(alice.pulses[0].bit));
            }
        }
    }

    #[test]
    fn empty_sift_is_rejected_without_evidence() {
        let sifted = SiftResult {
            kept: vec![],
            alice_bits: vec![],
            bob_kept: vec![],
            bob_bits: vec![],
        };
        let mut rng = SeededRng::new(1);
        let out = detect_eavesdropping(&sifted, CompareRule::default(), 0, &mut rng, &mut PublicLine::plain());
        assert_eq!(out.verdict, Verdict::Rejected);
        assert!(out.compared.is_empty());
        assert_eq!(out.key_length(), 0);
    }

    #[test]
    fn single_disagreement_rejects() {
        let sifted = SiftResult {
            kept: vec![0, 1, 2],
            alice_bits: vec![true, false, true],
            bob_kept: vec![0, 1, 2],
            bob_bits: vec![true, true, true],
        };
        let mut line = PublicLine::plain();
        let mut rng = SeededRng::new(1);
        let out = detect_eavesdropping(&sifted, CompareRule::Count(3), 0, &mut rng, &mut line);
        assert_eq!(out.verdict, Verdict::Rejected);
        assert_eq!(out.disagreements, 1);
        assert!(!out.bob_fooled());
        let relaxed = detect_eavesdropping(&sifted, CompareRule::Count(3), 1, &mut rng, &mut PublicLine::plain());
        assert_eq!(relaxed.verdict, Verdict::Accepted);
        assert_eq!(relaxed.key_length(), 0);
    }

    #[test]
    fn bits_round_trip() {
        let bits = vec![true, false, false, true];
        assert_eq!(bits_from_string(&bits_to_string(bits.clone())).unwrap(), bits);
        assert!(bits_from_string("01x").is_err());
    }
}
