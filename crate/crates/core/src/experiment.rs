//! Batches of independent sessions or rounds, with aggregate statistics.
//!
//! Trial `t` of an experiment seeded with `s` draws from its own ChaCha
//! stream `(s, t)`, so results do not depend on how trials are scheduled
//! across threads.

use std::f64::consts::FRAC_PI_8;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::auth::DEFAULT_TAG_BITS;
use crate::bb84::{run_session, secrecy_audit, CompareRule, ForgeAgreement, SessionConfig, SessionSummary, Verdict};
use crate::channel::{ActiveAdversary, AuthPair, Party, QuantumChannelConfig, Suppressor};
use crate::cointoss::{
    toss_round, AliceCheatMode, BobTiming, MixedBases, RoundSummary, TossConfig, DEFAULT_CORRELATION_SIGMAS,
};
use crate::eve::{radius, BasisRule, Eavesdropper, InterceptResend};
use crate::quantum::Basis;
use crate::random::{RandomSource, SeededRng};
use crate::transcript;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid {field}: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

fn bad(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Bb84,
    Cointoss,
}

impl FromStr for Protocol {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bb84" => Ok(Protocol::Bb84),
            "cointoss" | "coin-toss" | "coin" => Ok(Protocol::Cointoss),
            _ => Err(bad("protocol", format!("unknown protocol {s:?} (bb84, cointoss)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for OutputFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" | "txt" => Ok(OutputFormat::Text),
            _ => Err(bad("output", format!("unknown format {s:?} (json, csv, text)"))),
        }
    }
}

/// Eavesdropper on the quantum channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EveSpec {
    None,
    Intercept(BasisRule),
}

impl FromStr for EveSpec {
    type Err = ConfigError;

    /// `none`, `rectilinear`, `diagonal`, `random`, `pi/8`, or `angle:<radians>`,
    /// optionally prefixed with `intercept-`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let rule = lower.strip_prefix("intercept-").unwrap_or(&lower);
        let rule = match rule {
            "none" | "off" => return Ok(EveSpec::None),
            "rectilinear" | "rect" => BasisRule::Fixed(Basis::Rectilinear),
            "diagonal" | "diag" => BasisRule::Fixed(Basis::Diagonal),
            "random" | "uniform" => BasisRule::UniformRandom,
            "pi/8" | "angle-pi/8" | "midway" => BasisRule::Angle(FRAC_PI_8),
            other => {
                let theta = other
                    .strip_prefix("angle:")
                    .or_else(|| other.strip_prefix("angle-"))
                    .and_then(|t| t.parse::<f64>().ok())
                    .filter(|t| t.is_finite())
                    .ok_or_else(|| bad("eve", format!("unknown strategy {s:?}")))?;
                BasisRule::Angle(theta)
            }
        };
        Ok(EveSpec::Intercept(rule))
    }
}

impl TryFrom<String> for EveSpec {
    type Error = ConfigError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<EveSpec> for String {
    fn from(e: EveSpec) -> String {
        match e {
            EveSpec::None => "none".into(),
            EveSpec::Intercept(BasisRule::Angle(t)) if (t - FRAC_PI_8).abs() < 1e-12 => "pi/8".into(),
            EveSpec::Intercept(BasisRule::Angle(t)) => format!("angle:{t}"),
            EveSpec::Intercept(rule) => rule.label(),
        }
    }
}

/// Tampering on the public channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversarySpec {
    #[default]
    None,
    Suppress,
    ForgeAgreement,
}

impl FromStr for AdversarySpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(AdversarySpec::None),
            "suppress" => Ok(AdversarySpec::Suppress),
            "forge-agreement" | "forge" => Ok(AdversarySpec::ForgeAgreement),
            _ => Err(bad("adversary", format!("unknown adversary {s:?} (none, suppress, forge-agreement)"))),
        }
    }
}

impl AdversarySpec {
    fn build(self) -> Option<Box<dyn ActiveAdversary>> {
        match self {
            AdversarySpec::None => None,
            AdversarySpec::Suppress => Some(Box::new(Suppressor)),
            AdversarySpec::ForgeAgreement => Some(Box::new(ForgeAgreement::default())),
        }
    }
}

/// `honest`, `late-fabrication`, `mixed-bases`, `mixed-angle:<radians>`,
/// `epr:<storage loss>`.
pub fn parse_cheat(s: &str) -> Result<AliceCheatMode, ConfigError> {
    let lower = s.trim().to_ascii_lowercase();
    let mode = match lower.as_str() {
        "honest" | "none" => AliceCheatMode::Honest,
        "late-fabrication" | "fabricate" => AliceCheatMode::LateFabrication,
        "mixed-bases" | "mixed" => AliceCheatMode::MixedBases(MixedBases::RandomBases),
        "epr" => AliceCheatMode::EprAttack { storage_loss: 0.0 },
        other => {
            let number = |prefix: &str| {
                other
                    .strip_prefix(prefix)
                    .map(|t| t.trim_start_matches(['=', ':', '(']).trim_end_matches(')'))
                    .and_then(|t| t.parse::<f64>().ok())
            };
            if let Some(loss) = number("epr") {
                AliceCheatMode::EprAttack { storage_loss: loss }
            } else if let Some(theta) = number("mixed-angle") {
                AliceCheatMode::MixedBases(MixedBases::Angle(theta))
            } else {
                return Err(bad("cheat", format!("unknown cheat mode {s:?}")));
            }
        }
    };
    mode.validate().map_err(|e| bad("cheat", e.to_string()))?;
    Ok(mode)
}

pub fn parse_timing(s: &str) -> Result<BobTiming, ConfigError> {
    match s.to_ascii_lowercase().as_str() {
        "before" | "measure-before-guess" => Ok(BobTiming::MeasureBeforeGuess),
        "after" | "measure-after-guess" => Ok(BobTiming::MeasureAfterGuess),
        _ => Err(bad("bob-timing", format!("unknown timing {s:?} (before, after)"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub loss_probability: f64,
    pub detector_efficiency: f64,
    pub eve: EveSpec,
    /// Share of pulses Eve touches; 1 unless exploring weaker attacks.
    pub eve_fraction: f64,
    pub compare: CompareRule,
    pub threshold: usize,
    pub cheat: AliceCheatMode,
    pub bob_timing: BobTiming,
    pub correlation_sigmas: f64,
    pub auth: bool,
    pub auth_tag_bits: u32,
    /// Size of the pre-shared authentication key.
    pub auth_key_bits: usize,
    pub adversary: AdversarySpec,
    pub output: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Bb84,
            n: 1000,
            trials: 1,
            seed: 1,
            loss_probability: 0.0,
            detector_efficiency: 1.0,
            eve: EveSpec::None,
            eve_fraction: 1.0,
            compare: CompareRule::default(),
            threshold: 0,
            cheat: AliceCheatMode::Honest,
            bob_timing: BobTiming::default(),
            correlation_sigmas: DEFAULT_CORRELATION_SIGMAS,
            auth: false,
            auth_tag_bits: DEFAULT_TAG_BITS,
            auth_key_bits: 1024,
            adversary: AdversarySpec::None,
            output: OutputFormat::Json,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(bad("n", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(bad("trials", "must be at least 1"));
        }
        QuantumChannelConfig::new(self.loss_probability, self.detector_efficiency).map_err(|e| {
            let field = if self.loss_probability.is_nan() || !(0.0..=1.0).contains(&self.loss_probability) {
                "loss"
            } else {
                "efficiency"
            };
            bad(field, e.to_string())
        })?;
        if !(0.0..=1.0).contains(&self.eve_fraction) {
            return Err(bad("eve-fraction", "must lie in [0, 1]"));
        }
        self.compare.validate().map_err(|e| bad("compare-fraction", e.to_string()))?;
        self.cheat.validate().map_err(|e| bad("cheat", e.to_string()))?;
        if self.correlation_sigmas.is_nan() || self.correlation_sigmas <= 0.0 {
            return Err(bad("correlation-sigmas", "must be positive"));
        }
        if !(1..=32).contains(&self.auth_tag_bits) {
            return Err(bad("auth-tag-bits", "must lie in 1..=32"));
        }
        if self.protocol == Protocol::Cointoss && self.eve != EveSpec::None {
            return Err(bad("eve", "eavesdroppers apply to bb84 only"));
        }
        Ok(())
    }

    fn channel(&self) -> QuantumChannelConfig {
        QuantumChannelConfig {
            loss_probability: self.loss_probability,
            detector_efficiency: self.detector_efficiency,
        }
    }

    fn eavesdropper(&self) -> Option<Box<dyn Eavesdropper>> {
        match self.eve {
            EveSpec::None => None,
            EveSpec::Intercept(rule) => Some(Box::new(InterceptResend::new(rule).with_fraction(self.eve_fraction))),
        }
    }

    fn auth_pair(&self, rng: &mut dyn RandomSource) -> Option<AuthPair> {
        self.auth.then(|| {
            let shared: Vec<bool> = (0..self.auth_key_bits).map(|_| rng.coin()).collect();
            AuthPair::new(shared, self.auth_tag_bits).expect("tag width validated")
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TrialRow {
    Bb84(SessionSummary),
    Cointoss(RoundSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub name: String,
    pub value: f64,
    /// Four standard errors.
    pub radius: f64,
    /// Observations the value is based on.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub protocol: Protocol,
    pub seed: u64,
    pub n: usize,
    pub trials: usize,
    pub rows: Vec<TrialRow>,
    pub aggregates: Vec<Aggregate>,
    pub violations: Vec<String>,
}

struct TrialOutput {
    row: TrialRow,
    violations: Vec<String>,
    transcript: Vec<Value>,
}

fn run_bb84_trial(cfg: &ExperimentConfig, trial: u64, keep_transcript: bool) -> TrialOutput {
    let mut rng = SeededRng::for_trial(cfg.seed, trial);
    let auth = cfg.auth_pair(&mut rng);
    let session_cfg = SessionConfig {
        n: cfg.n,
        channel: cfg.channel(),
        compare: cfg.compare,
        threshold: cfg.threshold,
    };
    let session = run_session(&session_cfg, cfg.eavesdropper(), cfg.adversary.build(), auth, &mut rng)
        .expect("configuration validated");
    let mut violations = Vec::new();
    let o = &session.outcome;
    if o.verdict == Verdict::Accepted && o.alice_key != o.bob_key {
        violations.push(format!("trial {trial}: accepted keys differ"));
    }
    if o.verdict == Verdict::Accepted && o.disagreements > cfg.threshold {
        violations.push(format!("trial {trial}: accepted despite {} disagreements", o.disagreements));
    }
    let leaked = secrecy_audit(&session.log, &o.key_positions);
    if !leaked.is_empty() {
        violations.push(format!("trial {trial}: key positions {leaked:?} appear in the public log"));
    }
    let untouched = cfg.eve == EveSpec::None && cfg.adversary == AdversarySpec::None;
    if untouched && o.verdict != Verdict::Accepted && !session.sifted_slots().is_empty() {
        violations.push(format!("trial {trial}: undisturbed session was not accepted"));
    }
    if cfg.auth && o.bob_fooled() {
        violations.push(format!("trial {trial}: authenticated session accepted a forged confirmation"));
    }
    if let Some(auth) = &session.auth {
        if !auth.alice.audit() || !auth.bob.audit() {
            violations.push(format!("trial {trial}: authentication ledger does not reconcile"));
        }
    }
    TrialOutput {
        transcript: if keep_transcript {
            transcript::session_lines(trial, &session)
        } else {
            Vec::new()
        },
        row: TrialRow::Bb84(session.summary(cfg.seed)),
        violations,
    }
}

fn run_toss_trial(cfg: &ExperimentConfig, trial: u64, keep_transcript: bool) -> TrialOutput {
    let mut rng = SeededRng::for_trial(cfg.seed, trial);
    let auth = cfg.auth_pair(&mut rng);
    let toss_cfg = TossConfig {
        n: cfg.n,
        channel: cfg.channel(),
        mode: cfg.cheat,
        bob_timing: cfg.bob_timing,
        correlation_sigmas: cfg.correlation_sigmas,
    };
    let round = toss_round(&toss_cfg, auth, &mut rng).expect("configuration validated");
    let mut violations = Vec::new();
    if cfg.cheat == AliceCheatMode::Honest && !round.verdict.verification.is_clean() {
        violations.push(format!("trial {trial}: honest round failed verification"));
    }
    if let (Some(claimed), AliceCheatMode::Honest) = (round.claimed_basis, cfg.cheat) {
        let bob_won = round.bob_guess == claimed;
        if bob_won != (round.verdict.winner == Party::Bob) {
            violations.push(format!("trial {trial}: winner does not follow the guess"));
        }
    }
    TrialOutput {
        transcript: if keep_transcript {
            transcript::toss_lines(trial, &round)
        } else {
            Vec::new()
        },
        row: TrialRow::Cointoss(round.summary(cfg.bob_timing, cfg.seed)),
        violations,
    }
}

/// Runs every trial and aggregates. Also returns transcript lines when
/// `keep_transcript` is set.
pub fn run_with_transcript(cfg: &ExperimentConfig, keep_transcript: bool) -> Result<(StatsReport, Vec<Value>), ConfigError> {
    cfg.validate()?;
    let outputs: Vec<TrialOutput> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| match cfg.protocol {
            Protocol::Bb84 => run_bb84_trial(cfg, t, keep_transcript),
            Protocol::Cointoss => run_toss_trial(cfg, t, keep_transcript),
        })
        .collect();
    let mut rows = Vec::with_capacity(outputs.len());
    let mut violations = Vec::new();
    let mut lines = Vec::new();
    for out in outputs {
        rows.push(out.row);
        violations.extend(out.violations);
        lines.extend(out.transcript);
    }
    let aggregates = aggregate(&rows);
    Ok((
        StatsReport {
            protocol: cfg.protocol,
            seed: cfg.seed,
            n: cfg.n,
            trials: cfg.trials,
            rows,
            aggregates,
            violations,
        },
        lines,
    ))
}

pub fn run(cfg: &ExperimentConfig) -> Result<StatsReport, ConfigError> {
    run_with_transcript(cfg, false).map(|(r, _)| r)
}

fn proportion(name: &str, hits: usize, count: usize) -> Aggregate {
    let p = if count == 0 { 0.0 } else { hits as f64 / count as f64 };
    Aggregate {
        name: name.into(),
        value: p,
        radius: radius(p * (1.0 - p), count),
        count,
    }
}

fn sample_mean(name: &str, xs: &[f64]) -> Aggregate {
    let n = xs.len();
    let m = if n == 0 { 0.0 } else { xs.iter().sum::<f64>() / n as f64 };
    let var = if n > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Aggregate {
        name: name.into(),
        value: m,
        radius: radius(var, n),
        count: n,
    }
}

/// Weighted mean of independent estimates, combining their radii.
fn pooled(name: &str, parts: &[(f64, f64, usize)]) -> Aggregate {
    let total: usize = parts.iter().map(|p| p.2).sum();
    if total == 0 {
        return Aggregate {
            name: name.into(),
            value: 0.0,
            radius: f64::INFINITY,
            count: 0,
        };
    }
    let w = |n: usize| n as f64 / total as f64;
    Aggregate {
        name: name.into(),
        value: parts.iter().map(|&(v, _, n)| w(n) * v).sum(),
        radius: parts.iter().map(|&(_, r, n)| (w(n) * r).powi(2)).sum::<f64>().sqrt(),
        count: total,
    }
}

fn aggregate(rows: &[TrialRow]) -> Vec<Aggregate> {
    let bb84: Vec<&SessionSummary> = rows
        .iter()
        .filter_map(|r| match r {
            TrialRow::Bb84(s) => Some(s),
            _ => None,
        })
        .collect();
    let toss: Vec<&RoundSummary> = rows
        .iter()
        .filter_map(|r| match r {
            TrialRow::Cointoss(s) => Some(s),
            _ => None,
        })
        .collect();
    let mut out = Vec::new();
    if !bb84.is_empty() {
        let sum = |f: fn(&SessionSummary) -> usize| bb84.iter().map(|s| f(s)).sum::<usize>();
        out.push(proportion("detection_fraction", sum(|s| s.n_detected), sum(|s| s.n_sent)));
        out.push(proportion("sift_rate", sum(|s| s.n_sifted), sum(|s| s.n_detected)));
        out.push(proportion("qber", sum(|s| s.sifted_errors), sum(|s| s.n_sifted)));
        let count = |v: Verdict| bb84.iter().filter(|s| s.verdict == v).count();
        out.push(proportion("accepted_rate", count(Verdict::Accepted), bb84.len()));
        out.push(proportion("rejected_rate", count(Verdict::Rejected), bb84.len()));
        out.push(proportion("suppressed_rate", count(Verdict::Suppressed), bb84.len()));
        out.push(proportion("bob_fooled_rate", bb84.iter().filter(|s| s.bob_fooled).count(), bb84.len()));
        let keys: Vec<f64> = bb84.iter().map(|s| s.key_length as f64).collect();
        out.push(sample_mean("key_length", &keys));
        let stats: Vec<_> = bb84.iter().filter_map(|s| s.eve_stats).collect();
        if !stats.is_empty() {
            let b: Vec<_> = stats.iter().map(|e| (e.info_bits, e.info_radius, e.info_samples)).collect();
            let d: Vec<_> = stats
                .iter()
                .map(|e| (e.disturbance, e.disturbance_radius, e.disturbance_samples))
                .collect();
            out.push(pooled("eve_info_bits", &b));
            out.push(pooled("eve_disturbance", &d));
        }
    }
    if !toss.is_empty() {
        let r = toss.len();
        out.push(proportion("bob_win_rate", toss.iter().filter(|s| s.winner == Party::Bob).count(), r));
        out.push(proportion("alice_win_rate", toss.iter().filter(|s| s.winner == Party::Alice).count(), r));
        out.push(proportion("clean_rate", toss.iter().filter(|s| s.verification == "clean").count(), r));
        out.push(proportion(
            "detection_rate",
            toss.iter().filter(|s| s.verification == "cheating_detected").count(),
            r,
        ));
        let cheated: Vec<_> = toss.iter().filter(|s| s.alice_cheated).collect();
        out.push(proportion(
            "cheat_detection_rate",
            cheated.iter().filter(|s| s.verification == "cheating_detected").count(),
            cheated.len(),
        ));
        out.push(proportion(
            "alice_clean_win_rate",
            toss.iter().filter(|s| s.winner == Party::Alice && s.verification == "clean").count(),
            r,
        ));
    }
    out
}

/// Decimal places kept for every floating-point value in reports.
pub const REPORT_DECIMALS: i32 = 6;

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let scale = 10f64.powi(REPORT_DECIMALS);
            let r = (x * scale).round() / scale;
            *v = serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r }).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, inner, out);
            }
        }
        Value::Array(items) => {
            let joined: Vec<String> = items.iter().map(cell).collect();
            out.push((prefix.into(), joined.join(";")));
        }
        other => out.push((prefix.into(), cell(other))),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl StatsReport {
    pub fn has_violations(&self) -> bool {
        !self.violations.is_empty()
    }

    /// The report as JSON with floats rounded to [`REPORT_DECIMALS`].
    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        round_floats(&mut v);
        v
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("reports serialize");
        s.push('\n');
        s
    }

    fn flat_rows(&self) -> (Vec<String>, Vec<Map<String, Value>>) {
        let v = self.to_value();
        let mut columns: Vec<String> = vec!["trial".into()];
        let mut rows = Vec::new();
        for (i, row) in v["rows"].as_array().into_iter().flatten().enumerate() {
            let mut flat = Vec::new();
            flatten("", row, &mut flat);
            let mut m = Map::new();
            m.insert("trial".into(), json!(i));
            for (k, val) in flat {
                if !columns.contains(&k) {
                    columns.push(k.clone());
                }
                m.insert(k, Value::String(val));
            }
            rows.push(m);
        }
        (columns, rows)
    }

    /// Two CSV tables separated by a blank line: one row per trial, then one
    /// row per aggregate.
    pub fn to_csv(&self) -> String {
        let (columns, rows) = self.flat_rows();
        let mut s = String::new();
        let header: Vec<String> = columns.iter().map(|c| csv_field(c)).collect();
        let _ = writeln!(s, "{}", header.join(","));
        for row in rows {
            let cells: Vec<String> = columns
                .iter()
                .map(|c| csv_field(&row.get(c).map(cell).unwrap_or_default()))
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s.push('\n');
        let _ = writeln!(s, "aggregate,value,radius,count");
        for a in self.to_value()["aggregates"].as_array().into_iter().flatten() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                csv_field(&cell(&a["name"])),
                cell(&a["value"]),
                cell(&a["radius"]),
                cell(&a["count"])
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let v = self.to_value();
        let mut s = String::new();
        let protocol = cell(&v["protocol"]);
        let _ = writeln!(s, "protocol {protocol}, n = {}, trials = {}, seed = {}", self.n, self.trials, self.seed);
        for a in v["aggregates"].as_array().into_iter().flatten() {
            let _ = writeln!(
                s,
                "  {:<22} {:>12} ± {:<12} (n = {})",
                cell(&a["name"]),
                cell(&a["value"]),
                cell(&a["radius"]),
                cell(&a["count"])
            );
        }
        if self.violations.is_empty() {
            let _ = writeln!(s, "no invariant violations");
        } else {
            for violation in &self.violations {
                let _ = writeln!(s, "VIOLATION {violation}");
            }
        }
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Text => self.to_text(),
        }
    }

    pub fn aggregate(&self, name: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.name == name)
    }
}

/// Write the transcript lines as JSON lines.
pub fn write_transcript<W: std::io::Write>(out: W, lines: &[Value]) -> std::io::Result<()> {
    transcript::write_lines(out, lines)
}
