//! `qcrypt`: run batches of key-distribution sessions or coin-toss rounds and
//! report statistics, or replay the two worked example tables.
//!
//! Exit status: 0 success, 1 table replay mismatch, 2 usage error, 3 I/O
//! error, 4 an invariant was violated during simulation.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Deserialize;

use qcrypt::bb84::CompareRule;
use qcrypt::experiment::{
    self, parse_cheat, parse_timing, AdversarySpec, ConfigError, EveSpec, ExperimentConfig, OutputFormat, Protocol,
};
use qcrypt::replay;

const EXIT_REPLAY_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "qcrypt", version, about = "Quantum key distribution and coin tossing simulator")]
struct Cli {
    /// bb84 or cointoss
    #[arg(long)]
    protocol: Option<String>,
    /// Pulses per session (bb84) or photons per round (cointoss)
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Probability a photon is lost in transit
    #[arg(long)]
    loss: Option<f64>,
    /// Probability Bob's detector fires on an arriving photon
    #[arg(long)]
    efficiency: Option<f64>,
    /// none, rectilinear, diagonal, random, pi/8 or angle:<radians>
    #[arg(long)]
    eve: Option<String>,
    /// Share of pulses Eve intercepts (default 1)
    #[arg(long)]
    eve_fraction: Option<f64>,
    /// Share of sifted bits publicly compared (default 1/3)
    #[arg(long, conflicts_with = "compare_count")]
    compare_fraction: Option<f64>,
    /// Compare exactly this many sifted bits instead of a fraction
    #[arg(long)]
    compare_count: Option<usize>,
    /// Disagreements tolerated before rejecting (default 0)
    #[arg(long)]
    threshold: Option<usize>,
    /// honest, late-fabrication, mixed-bases, mixed-angle:<radians>, epr:<storage loss>
    #[arg(long)]
    cheat: Option<String>,
    /// When Bob measures relative to his guess: before or after
    #[arg(long)]
    bob_timing: Option<String>,
    /// Width of the coin-toss correlation test in standard deviations
    #[arg(long)]
    correlation_sigmas: Option<f64>,
    /// Authenticate public messages
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    auth: Option<bool>,
    #[arg(long)]
    auth_tag_bits: Option<u32>,
    #[arg(long)]
    auth_key_bits: Option<usize>,
    /// Public-channel tampering: none, suppress, forge-agreement
    #[arg(long)]
    adversary: Option<String>,
    /// json, csv or text
    #[arg(long)]
    output: Option<String>,
    /// Write the report here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a JSON-lines transcript of every pulse and message
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Replay the two worked example tables and report per-table results
    #[arg(long)]
    replay_paper: bool,
    /// Directory with replay fixtures (defaults to the bundled copies)
    #[arg(long, requires = "replay_paper")]
    fixtures: Option<PathBuf>,
    /// TOML file with any of the options above; flags win on conflict
    #[arg(long)]
    config: Option<PathBuf>,
}

/// The same options as the flags, read from a TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    protocol: Option<String>,
    n: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    loss: Option<f64>,
    efficiency: Option<f64>,
    eve: Option<String>,
    eve_fraction: Option<f64>,
    compare_fraction: Option<f64>,
    compare_count: Option<usize>,
    threshold: Option<usize>,
    cheat: Option<String>,
    bob_timing: Option<String>,
    correlation_sigmas: Option<f64>,
    auth: Option<bool>,
    auth_tag_bits: Option<u32>,
    auth_key_bits: Option<usize>,
    adversary: Option<String>,
    output: Option<String>,
    out: Option<PathBuf>,
    transcript: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn load_file(path: &Path) -> Result<FileConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("config file {}: {e}", path.display())))
}

struct Plan {
    config: ExperimentConfig,
    out: Option<PathBuf>,
    transcript: Option<PathBuf>,
}

fn plan(cli: Cli) -> Result<Plan, Failure> {
    let file = match &cli.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    let d = ExperimentConfig::default();
    let mut cfg = ExperimentConfig {
        n: cli.n.or(file.n).unwrap_or(d.n),
        trials: cli.trials.or(file.trials).unwrap_or(d.trials),
        seed: cli.seed.or(file.seed).unwrap_or(d.seed),
        loss_probability: cli.loss.or(file.loss).unwrap_or(d.loss_probability),
        detector_efficiency: cli.efficiency.or(file.efficiency).unwrap_or(d.detector_efficiency),
        eve_fraction: cli.eve_fraction.or(file.eve_fraction).unwrap_or(d.eve_fraction),
        threshold: cli.threshold.or(file.threshold).unwrap_or(d.threshold),
        correlation_sigmas: cli.correlation_sigmas.or(file.correlation_sigmas).unwrap_or(d.correlation_sigmas),
        auth: cli.auth.or(file.auth).unwrap_or(d.auth),
        auth_tag_bits: cli.auth_tag_bits.or(file.auth_tag_bits).unwrap_or(d.auth_tag_bits),
        auth_key_bits: cli.auth_key_bits.or(file.auth_key_bits).unwrap_or(d.auth_key_bits),
        ..d
    };
    if let Some(p) = cli.protocol.or(file.protocol) {
        cfg.protocol = p.parse::<Protocol>()?;
    }
    if let Some(e) = cli.eve.or(file.eve) {
        cfg.eve = e.parse::<EveSpec>()?;
    }
    if let Some(c) = cli.cheat.or(file.cheat) {
        cfg.cheat = parse_cheat(&c)?;
    }
    if let Some(t) = cli.bob_timing.or(file.bob_timing) {
        cfg.bob_timing = parse_timing(&t)?;
    }
    if let Some(a) = cli.adversary.or(file.adversary) {
        cfg.adversary = a.parse::<AdversarySpec>()?;
    }
    if let Some(o) = cli.output.or(file.output) {
        cfg.output = o.parse::<OutputFormat>()?;
    }
    // A flag of either kind beats both file settings.
    cfg.compare = match (cli.compare_fraction, cli.compare_count, file.compare_fraction, file.compare_count) {
        (Some(f), _, _, _) => CompareRule::Fraction(f),
        (None, Some(k), _, _) => CompareRule::Count(k),
        (None, None, Some(_), Some(_)) => {
            return Err(Failure::Usage(
                "config file sets both compare-fraction and compare-count".into(),
            ))
        }
        (None, None, Some(f), None) => CompareRule::Fraction(f),
        (None, None, None, Some(k)) => CompareRule::Count(k),
        (None, None, None, None) => d.compare,
    };
    cfg.validate()?;
    Ok(Plan {
        config: cfg,
        out: cli.out.or(file.out),
        transcript: cli.transcript.or(file.transcript),
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn replay(fixtures: Option<&Path>) -> Result<u8, Failure> {
    let reports = match fixtures {
        Some(dir) => replay::replay_paper_tables_from(dir),
        None => replay::replay_paper_tables(),
    }
    .map_err(|e| match e {
        replay::ReplayError::Invalid { .. } => Failure::Usage(e.to_string()),
        other => Failure::Io(other.to_string()),
    })?;
    let mut text = String::new();
    let mut all = true;
    for r in &reports {
        all &= r.passed();
        let status = if r.passed() { "PASS" } else { "FAIL" };
        text += &format!(
            "{status} {} ({} cells checked, {} skipped)\n",
            r.table, r.cells_checked, r.cells_skipped
        );
        for d in &r.diffs {
            text += &format!("  {d}\n");
        }
        if let Some(fault) = &r.script_fault {
            text += &format!("  script fault: {fault}\n");
        }
    }
    write_output(None, &text)?;
    Ok(if all { 0 } else { EXIT_REPLAY_MISMATCH })
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    if cli.replay_paper {
        return replay(cli.fixtures.as_deref());
    }
    let plan = plan(cli)?;
    let (report, lines) = experiment::run_with_transcript(&plan.config, plan.transcript.is_some())?;
    if let Some(path) = &plan.transcript {
        let file = fs::File::create(path).map_err(|e| io_failure(path, e))?;
        let mut w = io::BufWriter::new(file);
        experiment::write_transcript(&mut w, &lines).map_err(|e| io_failure(path, e))?;
        w.flush().map_err(|e| io_failure(path, e))?;
    }
    write_output(plan.out.as_deref(), &report.render(plan.config.output))?;
    for v in &report.violations {
        eprintln!("invariant violation: {v}");
    }
    Ok(if report.has_violations() { EXIT_VIOLATION } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("I/O error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
