//! Replays of the two worked example tables under scripted randomness.
//!
//! A fixture lists the random choices made in the example and the printed
//! cells the run must reproduce. `"?"` marks a printed cell that cannot be
//! reconciled with the protocol (the key-distribution table is partly
//! garbled) and is skipped; `""` is a blank cell.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bb84::{run_session, SessionConfig};
use crate::channel::{Party, QuantumChannelConfig};
use crate::cointoss::{toss_round, BobTiming, Emission, TossConfig, Verification, DEFAULT_CORRELATION_SIGMAS};
use crate::quantum::CodingBasis;
use crate::random::ScriptedSource;

pub const BB84_FIXTURE: &str = "bb84_table.json";
pub const COINTOSS_FIXTURE: &str = "cointoss_table.json";

const BUNDLED_BB84: &str = include_str!("../fixtures/bb84_table.json");
const BUNDLED_COINTOSS: &str = include_str!("../fixtures/cointoss_table.json");

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("fixture {0} not found")]
    Missing(PathBuf),
    #[error("cannot read fixture {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("fixture {name} is invalid: {reason}")]
    Invalid { name: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bb84Script {
    pub alice_bits: String,
    pub alice_bases: String,
    pub detected: String,
    pub bob_bases: String,
    /// Bob's outcomes, in order, on detected slots read in the wrong basis.
    pub bob_random_bits: String,
    pub compare_draws: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb84Fixture {
    pub pulses: usize,
    pub detector_efficiency: f64,
    pub script: Bb84Script,
    pub expected: BTreeMap<String, Vec<String>>,
    pub remaining_bits: String,
    pub revealed_bits: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TossScript {
    pub alice_basis: String,
    pub alice_bits: String,
    pub detected: String,
    pub bob_bases: String,
    /// Bob's outcomes, in order, on detected photons read in the wrong basis.
    pub bob_random_bits: String,
    pub bob_guess: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TossFixture {
    pub photons: usize,
    pub detector_efficiency: f64,
    pub script: TossScript,
    pub expected: BTreeMap<String, Vec<String>>,
    pub claimed_basis: String,
    /// `alice` or `bob`.
    pub winner: String,
    pub verification: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellDiff {
    pub row: String,
    /// 1-based column, or 0 for whole-row checks.
    pub column: usize,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for CellDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: expected {:?}, got {:?}", self.row, self.column, self.expected, self.actual)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub table: String,
    pub cells_checked: usize,
    pub cells_skipped: usize,
    pub diffs: Vec<CellDiff>,
    pub script_fault: Option<String>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.diffs.is_empty() && self.script_fault.is_none()
    }
}

struct Checker {
    report: ReplayReport,
}

impl Checker {
    fn new(table: &str) -> Self {
        Self {
            report: ReplayReport {
                table: table.into(),
                cells_checked: 0,
                cells_skipped: 0,
                diffs: Vec::new(),
                script_fault: None,
            },
        }
    }

    fn row(&mut self, name: &str, expected: Option<&Vec<String>>, actual: &[String]) {
        let Some(expected) = expected else {
            return;
        };
        for (col, exp) in expected.iter().enumerate() {
            if exp == "?" {
                self.report.cells_skipped += 1;
                continue;
            }
            self.report.cells_checked += 1;
            let got = actual.get(col).cloned().unwrap_or_default();
            if *exp != got {
                self.report.diffs.push(CellDiff {
                    row: name.into(),
                    column: col + 1,
                    expected: exp.clone(),
                    actual: got,
                });
            }
        }
        if actual.len() > expected.len() {
            self.whole("columns", &expected.len().to_string(), &actual.len().to_string());
        }
    }

    fn whole(&mut self, name: &str, expected: &str, actual: &str) {
        self.report.cells_checked += 1;
        if expected != actual {
            self.report.diffs.push(CellDiff {
                row: name.into(),
                column: 0,
                expected: expected.into(),
                actual: actual.into(),
            });
        }
    }
}

fn flags(s: &str, name: &str, one: char) -> Result<Vec<bool>, ReplayError> {
    s.chars()
        .map(|c| match c {
            '0' | 'R' | 'N' => Ok(false),
            c if c == one => Ok(true),
            '1' | 'Y' => Ok(true),
            other => Err(ReplayError::Invalid {
                name: name.into(),
                reason: format!("unexpected symbol {other:?}"),
            }),
        })
        .collect()
}

fn bit_str(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

fn blank() -> String {
    String::new()
}

fn letters(bases: impl IntoIterator<Item = CodingBasis>) -> Vec<String> {
    bases.into_iter().map(|b| b.letter().to_string()).collect()
}

fn basis_from(s: &str, name: &str) -> Result<CodingBasis, ReplayError> {
    s.chars()
        .next()
        .and_then(CodingBasis::from_letter)
        .ok_or_else(|| ReplayError::Invalid {
            name: name.into(),
            reason: format!("bad basis {s:?}"),
        })
}

fn script_fault(script: &ScriptedSource) -> Option<String> {
    match (script.fault(), script.remaining()) {
        (Some(e), _) => Some(format!("{e:?}")),
        (None, 0) => None,
        (None, n) => Some(format!("{n} scripted draws left unused")),
    }
}

fn next_random_bit(bits: &mut impl Iterator<Item = bool>, name: &str) -> Result<u32, ReplayError> {
    bits.next().map(u32::from).ok_or_else(|| ReplayError::Invalid {
        name: name.into(),
        reason: "bob_random_bits is too short".into(),
    })
}

fn no_surplus(mut bits: impl Iterator<Item = bool>, name: &str) -> Result<(), ReplayError> {
    match bits.next() {
        Some(_) => Err(ReplayError::Invalid {
            name: name.into(),
            reason: "bob_random_bits is too long".into(),
        }),
        None => Ok(()),
    }
}

/// Choice list in the order a key-distribution session consumes it.
fn bb84_draws(f: &Bb84Fixture) -> Result<Vec<u32>, ReplayError> {
    let s = &f.script;
    let alice_bits = flags(&s.alice_bits, "alice_bits", '1')?;
    let alice_bases = flags(&s.alice_bases, "alice_bases", 'D')?;
    let detected = flags(&s.detected, "detected", '1')?;
    let bob_bases = flags(&s.bob_bases, "bob_bases", 'D')?;
    let mut random_bits = flags(&s.bob_random_bits, "bob_random_bits", '1')?.into_iter();
    let n = f.pulses;
    if [&alice_bits, &alice_bases, &detected, &bob_bases].iter().any(|v| v.len() != n) {
        return Err(ReplayError::Invalid {
            name: "bb84".into(),
            reason: format!("script rows must have {n} entries"),
        });
    }
    let mut draws: Vec<u32> = alice_bits.iter().chain(&alice_bases).map(|&b| b as u32).collect();
    draws.extend(detected.iter().map(|&b| b as u32));
    for i in 0..n {
        draws.push(bob_bases[i] as u32);
        if detected[i] && bob_bases[i] != alice_bases[i] {
            draws.push(next_random_bit(&mut random_bits, "bb84")?);
        }
    }
    no_surplus(random_bits, "bb84")?;
    draws.extend(&s.compare_draws);
    Ok(draws)
}

pub fn replay_bb84(f: &Bb84Fixture) -> Result<ReplayReport, ReplayError> {
    let mut script = ScriptedSource::new(bb84_draws(f)?);
    let config = SessionConfig {
        n: f.pulses,
        channel: QuantumChannelConfig::new(0.0, f.detector_efficiency).map_err(|e| ReplayError::Invalid {
            name: "bb84".into(),
            reason: e.to_string(),
        })?,
        ..Default::default()
    };
    let mut check = Checker::new("key distribution");
    let session = match run_session(&config, None, None, None, &mut script) {
        Ok(s) => s,
        Err(e) => {
            check.report.script_fault = Some(e.to_string());
            return Ok(check.report);
        }
    };
    let n = f.pulses;
    let kept = session.sift.as_ref().map(|s| s.kept.clone()).unwrap_or_default();
    let revealed = &session.outcome.compared;
    let at = |positions: &[usize], value: &dyn Fn(usize) -> String| -> Vec<String> {
        (0..n).map(|i| if positions.contains(&i) { value(i) } else { blank() }).collect()
    };
    let alice_bit = |i: usize| bit_str(session.alice.pulses[i].bit);
    let detected: Vec<usize> = session.bob.detected();
    let bob_bit = |i: usize| session.bob.bits[i].map(bit_str).unwrap_or_default();
    let disagreed = session.outcome.disagreements > 0;

    let rows: Vec<(&str, Vec<String>)> = vec![
        ("alice_bits", (0..n).map(alice_bit).collect()),
        ("sending_bases", letters(session.alice.pulses.iter().map(|p| p.basis))),
        ("receiving_bases", letters(session.bob.bases.iter().copied())),
        ("bits_received", (0..n).map(bob_bit).collect()),
        ("bob_reports", at(&detected, &|i| session.bob.bases[i].letter().to_string())),
        ("bases_correct", at(&kept, &|_| "OK".into())),
        ("shared", at(&kept, &alice_bit)),
        ("revealed", at(revealed, &bob_bit)),
        ("confirmed", at(revealed, &|_| if disagreed { blank() } else { "OK".into() })),
        ("remaining", at(&session.outcome.key_positions, &alice_bit)),
    ];
    for (name, actual) in &rows {
        check.row(name, f.expected.get(*name), actual);
    }
    let key: String = session.outcome.key().unwrap_or(&[]).iter().map(|&b| bit_str(b)).collect();
    check.whole("remaining_bits", &f.remaining_bits, &key);
    let shown: String = revealed.iter().map(|&i| bob_bit(i)).collect();
    check.whole("revealed_bits", &f.revealed_bits, &shown);
    check.report.script_fault = script_fault(&script);
    Ok(check.report)
}

fn toss_draws(f: &TossFixture) -> Result<Vec<u32>, ReplayError> {
    let s = &f.script;
    let alice_basis = basis_from(&s.alice_basis, "alice_basis")?;
    let bits = flags(&s.alice_bits, "alice_bits", '1')?;
    let detected = flags(&s.detected, "detected", '1')?;
    let bob_bases = flags(&s.bob_bases, "bob_bases", 'D')?;
    let mut random_bits = flags(&s.bob_random_bits, "bob_random_bits", '1')?.into_iter();
    let n = f.photons;
    if [&bits, &detected, &bob_bases].iter().any(|v| v.len() != n) {
        return Err(ReplayError::Invalid {
            name: "cointoss".into(),
            reason: format!("script rows must have {n} entries"),
        });
    }
    let alice_diag = alice_basis == CodingBasis::Diagonal;
    let mut draws = vec![alice_diag as u32];
    draws.extend(bits.iter().map(|&b| b as u32));
    draws.extend(detected.iter().map(|&b| b as u32));
    for i in 0..n {
        draws.push(bob_bases[i] as u32);
        if detected[i] && bob_bases[i] != alice_diag {
            draws.push(next_random_bit(&mut random_bits, "cointoss")?);
        }
    }
    no_surplus(random_bits, "cointoss")?;
    draws.push((basis_from(&s.bob_guess, "bob_guess")? == CodingBasis::Diagonal) as u32);
    Ok(draws)
}

fn photon_symbol(e: &Emission) -> String {
    match *e {
        Emission::Encoded {
            bit,
            basis: CodingBasis::Rectilinear,
        } => if bit { "↑" } else { "↔" }.into(),
        Emission::Encoded {
            bit,
            basis: CodingBasis::Diagonal,
        } => if bit { "↖" } else { "↗" }.into(),
        _ => "?".into(),
    }
}

pub fn replay_cointoss(f: &TossFixture) -> Result<ReplayReport, ReplayError> {
    let mut script = ScriptedSource::new(toss_draws(f)?);
    let config = TossConfig {
        n: f.photons,
        channel: QuantumChannelConfig::new(0.0, f.detector_efficiency).map_err(|e| ReplayError::Invalid {
            name: "cointoss".into(),
            reason: e.to_string(),
        })?,
        bob_timing: BobTiming::MeasureBeforeGuess,
        correlation_sigmas: DEFAULT_CORRELATION_SIGMAS,
        ..Default::default()
    };
    let mut check = Checker::new("coin tossing");
    let round = match toss_round(&config, None, &mut script) {
        Ok(r) => r,
        Err(e) => {
            check.report.script_fault = Some(e.to_string());
            return Ok(check.report);
        }
    };
    let table = |basis: CodingBasis| -> Vec<String> {
        round.tables.table(basis).iter().map(|e| e.map(bit_str).unwrap_or_default()).collect()
    };
    let sent: Vec<String> = round
        .emissions
        .iter()
        .map(|e| match *e {
            Emission::Encoded { bit, .. } => bit_str(bit),
            _ => "?".into(),
        })
        .collect();
    let rows: Vec<(&str, Vec<String>)> = vec![
        ("alice_bits", sent),
        ("photons", round.emissions.iter().map(photon_symbol).collect()),
        ("bob_bases", letters(round.bob_bases.iter().copied())),
        ("rectilinear_table", table(CodingBasis::Rectilinear)),
        ("diagonal_table", table(CodingBasis::Diagonal)),
        ("original_bits", round.claimed_bits.iter().map(|&b| bit_str(b)).collect()),
    ];
    for (name, actual) in &rows {
        check.row(name, f.expected.get(*name), actual);
    }
    let claimed = round.claimed_basis.map(|b| b.letter().to_string()).unwrap_or_default();
    check.whole("claimed_basis", &f.claimed_basis, &claimed);
    let winner = match round.verdict.winner {
        Party::Alice => "alice",
        Party::Bob => "bob",
    };
    check.whole("winner", &f.winner, winner);
    let verification = match round.verdict.verification {
        Verification::Clean { .. } => "clean",
        Verification::CheatingDetected { .. } => "cheating_detected",
        Verification::Aborted { .. } => "aborted",
    };
    check.whole("verification", &f.verification, verification);
    check.report.script_fault = script_fault(&script);
    Ok(check.report)
}

fn parse<T: for<'de> Deserialize<'de>>(name: &str, text: &str) -> Result<T, ReplayError> {
    serde_json::from_str(text).map_err(|e| ReplayError::Invalid {
        name: name.into(),
        reason: e.to_string(),
    })
}

pub fn bundled_bb84_fixture() -> Bb84Fixture {
    parse(BB84_FIXTURE, BUNDLED_BB84).expect("bundled fixture parses")
}

pub fn bundled_cointoss_fixture() -> TossFixture {
    parse(COINTOSS_FIXTURE, BUNDLED_COINTOSS).expect("bundled fixture parses")
}

/// Replays both tables from the fixtures bundled into the library.
pub fn replay_paper_tables() -> Result<Vec<ReplayReport>, ReplayError> {
    Ok(vec![
        replay_bb84(&bundled_bb84_fixture())?,
        replay_cointoss(&bundled_cointoss_fixture())?,
    ])
}

/// Replays both tables from fixture files in `dir`.
pub fn replay_paper_tables_from(dir: &Path) -> Result<Vec<ReplayReport>, ReplayError> {
    let read = |name: &str| -> Result<String, ReplayError> {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                ReplayError::Missing(path)
            } else {
                ReplayError::Io { path, source }
            }
        })
    };
    Ok(vec![
        replay_bb84(&parse(BB84_FIXTURE, &read(BB84_FIXTURE)?)?)?,
        replay_cointoss(&parse(COINTOSS_FIXTURE, &read(COINTOSS_FIXTURE)?)?)?,
    ])
}
