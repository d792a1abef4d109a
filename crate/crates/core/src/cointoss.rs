//! Coin tossing by photons.
//!
//! Alice encodes random bits in one secret basis. Bob reads each photon in a
//! random basis, keeping two tables, and guesses Alice's basis. Alice then
//! reveals the basis and every bit she sent; Bob checks that the bits agree
//! perfectly with the table for the claimed basis and show no correlation
//! with the other one.
//!
//! Alice can cheat classically (fabricating a sequence after losing, or
//! sending photons in mixed bases) and is then caught with overwhelming
//! probability, or by sending halves of EPR pairs, which wins outright if she
//! stores and measures her halves without loss.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{AuthPair, ClassicalChannel, LineError, LogEntry, Party, PublicLine, QuantumChannel, QuantumChannelConfig};
use crate::quantum::{entangled_photons, epr_pair, photon_from_angle, CodingBasis, Photon};
use crate::random::RandomSource;

pub const DEFAULT_PHOTONS: usize = 1000;
/// Width of the two-sided "no correlation" test, in standard deviations.
pub const DEFAULT_CORRELATION_SIGMAS: f64 = 6.0;
/// Fewer opposite-table entries than this and the correlation test is not
/// applied.
pub const MIN_CORRELATION_ENTRIES: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TossError {
    #[error("at least one photon is required")]
    NoPhotons,
    #[error("storage loss must lie in [0, 1], got {0}")]
    BadStorageLoss(f64),
    #[error("claimed sequence has {claimed} bits but {expected} photons were sent")]
    LengthMismatch { claimed: usize, expected: usize },
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
}

/// What Alice sends instead of honestly encoded photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedBases {
    /// Each photon in an independently random coding basis.
    RandomBases,
    /// Every photon at `theta` or `theta + 90°`, neither rectilinear nor
    /// diagonal.
    Angle(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AliceCheatMode {
    Honest,
    /// Plays honestly but, on losing, claims the other basis with a made-up
    /// bit sequence.
    LateFabrication,
    /// Sends mixed photons and claims whichever basis beats Bob's guess.
    MixedBases(MixedBases),
    /// Sends halves of EPR pairs and measures her halves after the guess.
    /// Each stored photon is lost with probability `storage_loss`.
    EprAttack { storage_loss: f64 },
}

impl AliceCheatMode {
    pub fn validate(&self) -> Result<(), TossError> {
        match *self {
            AliceCheatMode::EprAttack { storage_loss } if !(0.0..=1.0).contains(&storage_loss) => {
                Err(TossError::BadStorageLoss(storage_loss))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            AliceCheatMode::Honest => "honest".into(),
            AliceCheatMode::LateFabrication => "late-fabrication".into(),
            AliceCheatMode::MixedBases(MixedBases::RandomBases) => "mixed-bases".into(),
            AliceCheatMode::MixedBases(MixedBases::Angle(t)) => format!("mixed-angle({t})"),
            AliceCheatMode::EprAttack { storage_loss } => format!("epr({storage_loss})"),
        }
    }
}

/// When Bob reads his photons relative to announcing his guess.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobTiming {
    #[default]
    MeasureBeforeGuess,
    MeasureAfterGuess,
}

/// Bob's two tables. `None` is a hole: either a different basis was used for
/// that photon or nothing was detected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TossTables {
    pub rectilinear: Vec<Option<bool>>,
    pub diagonal: Vec<Option<bool>>,
}

impl TossTables {
    pub fn len(&self) -> usize {
        self.rectilinear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rectilinear.is_empty()
    }

    pub fn table(&self, basis: CodingBasis) -> &[Option<bool>] {
        match basis {
            CodingBasis::Rectilinear => &self.rectilinear,
            CodingBasis::Diagonal => &self.diagonal,
        }
    }

    pub fn entries(&self, basis: CodingBasis) -> usize {
        self.table(basis).iter().filter(|e| e.is_some()).count()
    }

    pub fn fill_rate(&self, basis: CodingBasis) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.entries(basis) as f64 / self.len() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationStatus {
    Uncorrelated,
    Correlated,
    /// Too few entries for the test to bind.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationTest {
    pub entries: usize,
    pub agreements: usize,
    pub status: CorrelationStatus,
}

impl CorrelationTest {
    fn run(claimed: &[bool], other: &[Option<bool>], sigmas: f64) -> Self {
        let (entries, agreements) = claimed
            .iter()
            .zip(other)
            .filter_map(|(c, e)| e.map(|e| e == *c))
            .fold((0, 0), |(m, a), agree| (m + 1, a + agree as usize));
        let status = if entries < MIN_CORRELATION_ENTRIES {
            CorrelationStatus::Inconclusive
        } else {
            let f = agreements as f64 / entries as f64;
            if (f - 0.5).abs() <= sigmas * (0.25 / entries as f64).sqrt() {
                CorrelationStatus::Uncorrelated
            } else {
                CorrelationStatus::Correlated
            }
        };
        Self {
            entries,
            agreements,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Verification {
    Clean {
        correlation: CorrelationTest,
    },
    CheatingDetected {
        /// Indices where the claimed bit contradicts the claimed-basis table.
        mismatches: Vec<usize>,
        correlation: CorrelationTest,
    },
    /// The public exchange failed (suppressed or unauthenticated message).
    Aborted {
        reason: String,
    },
}

impl Verification {
    pub fn is_clean(&self) -> bool {
        matches!(self, Verification::Clean { .. })
    }

    pub fn cheating_detected(&self) -> bool {
        matches!(self, Verification::CheatingDetected { .. })
    }

    pub fn mismatches(&self) -> &[usize] {
        match self {
            Verification::CheatingDetected { mismatches, .. } => mismatches,
            _ => &[],
        }
    }
}

/// Bob's step-4 check of Alice's certificate.
pub fn verify_certificate(
    claimed_basis: CodingBasis,
    claimed_bits: &[bool],
    tables: &TossTables,
    sigmas: f64,
) -> Result<Verification, TossError> {
    if claimed_bits.len() != tables.len() {
        return Err(TossError::LengthMismatch {
            claimed: claimed_bits.len(),
            expected: tables.len(),
        });
    }
    let mismatches: Vec<usize> = tables
        .table(claimed_basis)
        .iter()
        .zip(claimed_bits)
        .enumerate()
        .filter(|(_, (entry, bit))| entry.is_some_and(|e| e != **bit))
        .map(|(i, _)| i)
        .collect();
    let correlation = CorrelationTest::run(claimed_bits, tables.table(claimed_basis.other()), sigmas);
    Ok(
        if mismatches.is_empty() && correlation.status != CorrelationStatus::Correlated {
            Verification::Clean { correlation }
        } else {
            Verification::CheatingDetected {
                mismatches,
                correlation,
            }
        },
    )
}

/// Alice's losing-case fabrication: the opposite basis with uniformly random
/// bits (she cannot see Bob's tables).
pub fn alice_late_fabrication(guess: CodingBasis, n: usize, rng: &mut dyn RandomSource) -> (CodingBasis, Vec<bool>) {
    (guess.other(), (0..n).map(|_| rng.coin()).collect())
}

/// Alice's EPR cheat after hearing `guess`: measure every stored half in the
/// opposite basis and report the complement of each result, guessing where
/// the stored photon was lost.
pub fn alice_epr_attack(
    guess: CodingBasis,
    stored: Vec<Photon>,
    storage_loss: f64,
    rng: &mut dyn RandomSource,
) -> (CodingBasis, Vec<bool>, usize) {
    let claim = guess.other();
    let mut lost = 0;
    let bits = stored
        .into_iter()
        .map(|photon| {
            if rng.bernoulli(storage_loss) {
                lost += 1;
                rng.coin()
            } else {
                photon.measure_in(claim.basis(), rng).0 == 0
            }
        })
        .collect();
    (claim, bits, lost)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TossConfig {
    pub n: usize,
    pub channel: QuantumChannelConfig,
    pub mode: AliceCheatMode,
    pub bob_timing: BobTiming,
    pub correlation_sigmas: f64,
}

impl Default for TossConfig {
    fn default() -> Self {
        Self {
            n: DEFAULT_PHOTONS,
            channel: QuantumChannelConfig::lossless(),
            mode: AliceCheatMode::Honest,
            bob_timing: BobTiming::default(),
            correlation_sigmas: DEFAULT_CORRELATION_SIGMAS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TossMessage {
    BobGuess { basis: CodingBasis },
    AliceReply { basis: CodingBasis, bits: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TossVerdict {
    pub winner: Party,
    pub verification: Verification,
}

/// What Alice physically sent, photon by photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Emission {
    Encoded { bit: bool, basis: CodingBasis },
    Angled { bit: bool, angle: f64 },
    EprHalf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TossRound {
    pub mode: AliceCheatMode,
    pub emissions: Vec<Emission>,
    pub bob_bases: Vec<CodingBasis>,
    pub tables: TossTables,
    pub bob_guess: CodingBasis,
    pub claimed_basis: Option<CodingBasis>,
    pub claimed_bits: Vec<bool>,
    /// Whether Alice actually deviated from the protocol this round.
    pub alice_cheated: bool,
    pub stored_lost: usize,
    pub verdict: TossVerdict,
    pub log: Vec<LogEntry>,
}

struct Prepared {
    emissions: Vec<Emission>,
    photons: Vec<Photon>,
    honest_basis: Option<CodingBasis>,
    stored: Vec<Photon>,
}

fn prepare(cfg: &TossConfig, rng: &mut dyn RandomSource) -> Prepared {
    let n = cfg.n;
    let mut stored = Vec::new();
    let mut honest_basis = None;
    let emissions: Vec<Emission>;
    let photons: Vec<Photon>;
    match cfg.mode {
        AliceCheatMode::Honest | AliceCheatMode::LateFabrication => {
            let basis = CodingBasis::from_coin(rng.coin());
            honest_basis = Some(basis);
            emissions = (0..n).map(|_| Emission::Encoded { bit: rng.coin(), basis }).collect();
            photons = emissions.iter().map(emit).collect();
        }
        AliceCheatMode::MixedBases(MixedBases::RandomBases) => {
            let bits: Vec<bool> = (0..n).map(|_| rng.coin()).collect();
            emissions = bits
                .into_iter()
                .map(|bit| Emission::Encoded {
                    bit,
                    basis: CodingBasis::from_coin(rng.coin()),
                })
                .collect();
            photons = emissions.iter().map(emit).collect();
        }
        AliceCheatMode::MixedBases(MixedBases::Angle(angle)) => {
            emissions = (0..n).map(|_| Emission::Angled { bit: rng.coin(), angle }).collect();
            photons = emissions.iter().map(emit).collect();
        }
        AliceCheatMode::EprAttack { .. } => {
            emissions = vec![Emission::EprHalf; n];
            let (mine, sent): (Vec<Photon>, Vec<Photon>) = (0..n).map(|_| entangled_photons(epr_pair())).unzip();
            stored = mine;
            photons = sent;
        }
    }
    Prepared {
        emissions,
        photons,
        honest_basis,
        stored,
    }
}

fn emit(e: &Emission) -> Photon {
    match *e {
        Emission::Encoded { bit, basis } => Photon::prepare(basis.encode(bit)),
        Emission::Angled { bit, angle } => {
            let alpha = angle + if bit { FRAC_PI_2 } else { 0.0 };
            Photon::prepare(photon_from_angle(alpha).expect("finite angle"))
        }
        Emission::EprHalf => unreachable!("EPR halves are created in pairs"),
    }
}

fn bob_reads(arrivals: Vec<Option<Photon>>, rng: &mut dyn RandomSource) -> (Vec<CodingBasis>, TossTables) {
    let n = arrivals.len();
    let mut bases = Vec::with_capacity(n);
    let mut tables = TossTables {
        rectilinear: vec![None; n],
        diagonal: vec![None; n],
    };
    for (i, arrival) in arrivals.into_iter().enumerate() {
        let basis = CodingBasis::from_coin(rng.coin());
        bases.push(basis);
        if let Some(photon) = arrival {
            let bit = photon.measure_in(basis.basis(), rng).0 == 1;
            match basis {
                CodingBasis::Rectilinear => tables.rectilinear[i] = Some(bit),
                CodingBasis::Diagonal => tables.diagonal[i] = Some(bit),
            }
        }
    }
    (bases, tables)
}

fn bits_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Plays one round of coin tossing. Alice's choices are drawn first, then
/// the channel per photon, then Bob's reading bases and guess (in the order
/// set by `bob_timing`), then any randomness Alice needs in step 3.
pub fn toss_round(cfg: &TossConfig, auth: Option<AuthPair>, rng: &mut dyn RandomSource) -> Result<TossRound, TossError> {
    if cfg.n == 0 {
        return Err(TossError::NoPhotons);
    }
    cfg.mode.validate()?;
    cfg.channel.validate()?;

    let Prepared {
        emissions,
        photons,
        honest_basis,
        stored,
    } = prepare(cfg, rng);

    let mut quantum = QuantumChannel::new(cfg.channel);
    let arrivals: Vec<Option<Photon>> = photons
        .into_iter()
        .map(|p| quantum.send(p, rng).into_photon())
        .collect();

    let (bob_bases, tables, guess) = match cfg.bob_timing {
        BobTiming::MeasureBeforeGuess => {
            let (bases, tables) = bob_reads(arrivals, rng);
            (bases, tables, CodingBasis::from_coin(rng.coin()))
        }
        BobTiming::MeasureAfterGuess => {
            let guess = CodingBasis::from_coin(rng.coin());
            let (bases, tables) = bob_reads(arrivals, rng);
            (bases, tables, guess)
        }
    };

    let mut line = PublicLine::new(ClassicalChannel::new(), auth);
    let heard_guess = match line.send(Party::Bob, &TossMessage::BobGuess { basis: guess }) {
        Ok(TossMessage::BobGuess { basis }) => Ok(basis),
        Ok(_) => Err(LineError::Malformed("expected bob_guess".into())),
        Err(e) => Err(e),
    };

    let mut claimed_basis = None;
    let mut claimed_bits = Vec::new();
    let mut alice_cheated = false;
    let mut stored_lost = 0;
    let reply = heard_guess.and_then(|heard| {
        let (basis, bits) = match (cfg.mode, honest_basis) {
            (AliceCheatMode::Honest, Some(b)) => (b, original_bits(&emissions)),
            (AliceCheatMode::LateFabrication, Some(b)) if b == heard => {
                alice_cheated = true;
                alice_late_fabrication(heard, cfg.n, rng)
            }
            (AliceCheatMode::LateFabrication, Some(b)) => (b, original_bits(&emissions)),
            (AliceCheatMode::MixedBases(_), _) => {
                alice_cheated = true;
                (heard.other(), original_bits(&emissions))
            }
            (AliceCheatMode::EprAttack { storage_loss }, _) => {
                alice_cheated = true;
                let (basis, bits, lost) = alice_epr_attack(heard, stored, storage_loss, rng);
                stored_lost = lost;
                (basis, bits)
            }
            _ => unreachable!("honest modes always choose a basis"),
        };
        claimed_basis = Some(basis);
        claimed_bits = bits.clone();
        line.send(
            Party::Alice,
            &TossMessage::AliceReply {
                basis,
                bits: bits_string(&bits),
            },
        )
    });

    let verdict = match reply {
        Ok(TossMessage::AliceReply { basis, bits }) => {
            let bits: Vec<bool> = bits.chars().map(|c| c == '1').collect();
            let verification = verify_certificate(basis, &bits, &tables, cfg.correlation_sigmas)?;
            TossVerdict {
                winner: if basis == guess { Party::Bob } else { Party::Alice },
                verification,
            }
        }
        Ok(_) => aborted("expected alice_reply".into()),
        Err(e) => aborted(e.to_string()),
    };

    Ok(TossRound {
        mode: cfg.mode,
        emissions,
        bob_bases,
        tables,
        bob_guess: guess,
        claimed_basis,
        claimed_bits,
        alice_cheated,
        stored_lost,
        verdict,
        log: line.into_parts().0.into_log(),
    })
}

fn aborted(reason: String) -> TossVerdict {
    // Without a certificate Bob cannot concede.
    TossVerdict {
        winner: Party::Bob,
        verification: Verification::Aborted { reason },
    }
}

fn original_bits(emissions: &[Emission]) -> Vec<bool> {
    emissions
        .iter()
        .map(|e| match *e {
            Emission::Encoded { bit, .. } | Emission::Angled { bit, .. } => bit,
            Emission::EprHalf => false,
        })
        .collect()
}

/// One row of the coin-toss report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundSummary {
    pub n: usize,
    pub alice_mode: String,
    pub bob_timing: BobTiming,
    pub bob_guess: CodingBasis,
    pub claimed_basis: Option<CodingBasis>,
    pub winner: Party,
    pub verification: &'static str,
    pub alice_cheated: bool,
    pub mismatches: Vec<usize>,
    pub correlation_entries: Option<usize>,
    pub correlation_agreements: Option<usize>,
    pub rectilinear_fill: f64,
    pub diagonal_fill: f64,
    pub seed: u64,
}

impl TossRound {
    pub fn summary(&self, bob_timing: BobTiming, seed: u64) -> RoundSummary {
        let correlation = match &self.verdict.verification {
            Verification::Clean { correlation } | Verification::CheatingDetected { correlation, .. } => Some(*correlation),
            Verification::Aborted { .. } => None,
        };
        RoundSummary {
            n: self.tables.len(),
            alice_mode: self.mode.label(),
            bob_timing,
            bob_guess: self.bob_guess,
            claimed_basis: self.claimed_basis,
            winner: self.verdict.winner,
            verification: match self.verdict.verification {
                Verification::Clean { .. } => "clean",
                Verification::CheatingDetected { .. } => "cheating_detected",
                Verification::Aborted { .. } => "aborted",
            },
            alice_cheated: self.alice_cheated,
            mismatches: self.verdict.verification.mismatches().to_vec(),
            correlation_entries: correlation.map(|c| c.entries),
            correlation_agreements: correlation.map(|c| c.agreements),
            rectilinear_fill: self.tables.fill_rate(CodingBasis::Rectilinear),
            diagonal_fill: self.tables.fill_rate(CodingBasis::Diagonal),
            seed,
        }
    }
}
