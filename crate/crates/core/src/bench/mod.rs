//! Timed end-to-end rounds over attribute sets, messages and trial counts.
//!
//! One timed round is Setup, KeyGen, Encrypt, a DEM seal of the message, the
//! game challenge and the adversary's guess. Each sample of a cell reports
//! the per-round mean in milliseconds and the random-guess win count.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::groups::Backend;
use crate::indcpa::{play_round, round_rng, GameError, Strategy};
use crate::policy::{Attribute, PolicyNode};
use crate::scheme::{dem_seal, encrypt, kdf, keygen, setup, SymmetricKey};

pub const TIMING_NOTE: &str =
    "mean ms per round (Setup + KeyGen + Encrypt + DEM seal + challenge + guess)";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl BenchError {
    pub fn name(&self) -> &'static str {
        match self {
            BenchError::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSet {
    pub name: String,
    pub attrs: Vec<String>,
}

impl AttributeSet {
    pub fn new(name: &str, attrs: &[&str]) -> Self {
        AttributeSet {
            name: name.to_string(),
            attrs: attrs.iter().map(|a| a.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub attribute_sets: Vec<AttributeSet>,
    pub messages: Vec<String>,
    pub trial_counts: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub strategy: Strategy,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let a1 = ["Doctor", "Professor", "Researcher"];
        let a2 = ["Doctor", "Professor", "Researcher", "Student"];
        BenchConfig {
            attribute_sets: vec![AttributeSet::new("A1", &a1), AttributeSet::new("A2", &a2)],
            messages: vec!["OISP Symposium".into(), "The 9th Student Conference".into()],
            trial_counts: vec![1000, 1500, 2000],
            samples: 10,
            seed: 0,
            strategy: Strategy::RandomGuess,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidParameter(m.into()));
        if self.samples == 0 {
            return bad("samples must be at least 1");
        }
        if self.trial_counts.is_empty() {
            return bad("trial_counts must not be empty");
        }
        if self.trial_counts.contains(&0) {
            return bad("trial counts must be at least 1");
        }
        if self.attribute_sets.is_empty() || self.messages.is_empty() {
            return bad("need at least one attribute set and one message");
        }
        Ok(())
    }

    /// Cells in report order: set, then message, then trial count.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for set in &self.attribute_sets {
            for message in &self.messages {
                for &trials in &self.trial_counts {
                    out.push(Cell {
                        set: set.name.clone(),
                        message: message.clone(),
                        trials,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cell {
    pub set: String,
    pub message: String,
    pub trials: usize,
}

/// Game messages for a cell: the message and its byte reversal.
pub fn cell_messages(message: &str) -> (Vec<u8>, Vec<u8>) {
    let m0 = message.as_bytes().to_vec();
    let m1 = m0.iter().rev().copied().collect();
    (m0, m1)
}

/// Game seed for one (cell, sample) pair.
pub fn derive_seed(seed: u64, cell: usize, sample: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"bench");
    h.update(seed.to_be_bytes());
    h.update((cell as u64).to_be_bytes());
    h.update((sample as u64).to_be_bytes());
    u64::from_be_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// The attribute set's universe and its AND policy.
pub fn cell_policy(set: &AttributeSet) -> Result<(Vec<Attribute>, PolicyNode), GameError> {
    let universe = set
        .attrs
        .iter()
        .map(Attribute::new)
        .collect::<Result<Vec<_>, _>>()?;
    Ok((universe, PolicyNode::all_of(&set.attrs)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub seed: u64,
    pub mean_ms: f64,
    /// KeyGen + Encrypt share of `mean_ms`.
    pub keygen_encrypt_ms: f64,
    pub wins: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub cell: Cell,
    pub samples: Vec<SampleResult>,
    pub error: Option<String>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

impl CellReport {
    pub fn mean_ms(&self) -> f64 {
        self.samples.iter().map(|s| s.mean_ms).sum::<f64>() / self.samples.len() as f64
    }

    pub fn median_ms(&self) -> f64 {
        median(self.samples.iter().map(|s| s.mean_ms).collect())
    }

    pub fn median_keygen_encrypt_ms(&self) -> f64 {
        median(self.samples.iter().map(|s| s.keygen_encrypt_ms).collect())
    }

    /// Wins over all rounds of all samples.
    pub fn win_rate(&self) -> f64 {
        let wins: usize = self.samples.iter().map(|s| s.wins).sum();
        wins as f64 / (self.cell.trials * self.samples.len()) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub backend: String,
    pub hostname: String,
    pub seed: u64,
    pub samples: usize,
    pub cells: Vec<CellReport>,
}

impl BenchReport {
    pub fn cell(&self, set: &str, message: &str, trials: usize) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.cell.set == set && c.cell.message == message && c.cell.trials == trials)
    }
}

fn hostname() -> String {
    std::fs::read_to_string("/proc/sys/kernel/hostname")
        .ok()
        .or_else(|| std::env::var("HOSTNAME").ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

struct Prepared {
    universe: Vec<Attribute>,
    attrs: std::collections::BTreeSet<Attribute>,
    policy: PolicyNode,
    m0: Vec<u8>,
    m1: Vec<u8>,
}

/// KeyGen/Encrypt randomness lives on its own stream so the game stream
/// matches `run_game` round for round.
fn aux_rng(seed: u64, round: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((1 << 63) | round as u64);
    rng
}

fn run_sample<B: Backend>(
    backend: &B,
    prep: &Prepared,
    strategy: Strategy,
    trials: usize,
    seed: u64,
) -> Result<SampleResult, GameError> {
    let mut wins = 0;
    let mut keygen_encrypt = Duration::ZERO;
    let start = Instant::now();
    for i in 0..trials {
        let mut rng = round_rng(seed, i);
        let mut aux = aux_rng(seed, i);
        let (msk, pk) = setup(backend.clone(), &prep.universe, &mut rng)?;
        let t = Instant::now();
        let usk = keygen(&msk, &pk, &prep.attrs, &mut aux)?;
        let key = SymmetricKey::random(backend, &mut aux);
        let ct = encrypt(&pk, &prep.policy, &key, &mut aux)?;
        keygen_encrypt += t.elapsed();
        let sealed = dem_seal(&kdf(backend, &key), &prep.m0);
        let round = play_round(
            &msk,
            &pk,
            &prep.policy,
            &prep.m0,
            &prep.m1,
            &strategy,
            &mut rng,
        )?;
        wins += usize::from(round.win);
        black_box((usk, ct, sealed));
    }
    let per_round = |d: Duration| d.as_secs_f64() * 1e3 / trials as f64;
    Ok(SampleResult {
        seed,
        mean_ms: per_round(start.elapsed()),
        keygen_encrypt_ms: per_round(keygen_encrypt),
        wins,
    })
}

/// Runs every cell `config.samples` times. Each sample pass visits the
/// cells in a seeded shuffled order so drift does not favour any cell. A
/// failing cell records its error and the suite continues.
pub fn run_suite<B: Backend>(backend: &B, config: &BenchConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let cells = config.cells();
    let mut reports: Vec<CellReport> = cells
        .iter()
        .map(|cell| CellReport {
            cell: cell.clone(),
            samples: Vec::new(),
            error: None,
        })
        .collect();
    let prepared: Vec<Result<Prepared, GameError>> = cells
        .iter()
        .map(|cell| {
            let set = config
                .attribute_sets
                .iter()
                .find(|s| s.name == cell.set)
                .expect("cell set comes from config");
            let (universe, policy) = cell_policy(set)?;
            let (m0, m1) = cell_messages(&cell.message);
            Ok(Prepared {
                attrs: universe.iter().cloned().collect(),
                universe,
                policy,
                m0,
                m1,
            })
        })
        .collect();

    let mut order: Vec<usize> = (0..cells.len()).collect();
    for sample in 0..config.samples {
        order.shuffle(&mut ChaCha20Rng::seed_from_u64(derive_seed(
            config.seed,
            usize::MAX,
            sample,
        )));
        for &idx in &order {
            let cell = &cells[idx];
            let report = &mut reports[idx];
            if report.error.is_some() {
                continue;
            }
            let result = prepared[idx]
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|prep| {
                    let seed = derive_seed(config.seed, idx, sample);
                    run_sample(backend, prep, config.strategy, cell.trials, seed)
                });
            match result {
                Ok(s) => report.samples.push(s),
                Err(e) => {
                    report.samples.clear();
                    report.error = Some(format!("{}: {e}", e.name()));
                }
            }
        }
    }

    Ok(BenchReport {
        backend: backend.id().as_str().to_string(),
        hostname: hostname(),
        seed: config.seed,
        samples: config.samples,
        cells: reports,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl TableFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "markdown" | "md" => Some(TableFormat::Markdown),
            "csv" => Some(TableFormat::Csv),
            _ => None,
        }
    }
}

pub fn fmt_ms(ms: f64) -> String {
    format!("{ms:.4}")
}

pub fn fmt_pct(rate: f64) -> String {
    format!("{:.2}%", rate * 100.0)
}

fn first_seen<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit_table(report: &BenchReport, format: TableFormat) -> Vec<u8> {
    match format {
        TableFormat::Markdown => emit_markdown(report),
        TableFormat::Csv => emit_csv(report),
    }
    .into_bytes()
}

/// Rows are trial counts, columns are set x message; each cell shows the
/// mean ms and the win rate.
fn emit_markdown(report: &BenchReport) -> String {
    let columns = first_seen(
        report
            .cells
            .iter()
            .map(|c| (c.cell.set.clone(), c.cell.message.clone())),
    );
    let rows = first_seen(report.cells.iter().map(|c| c.cell.trials));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Backend: {}, host: {}, seed: {}, samples: {}",
        report.backend, report.hostname, report.seed, report.samples
    );
    let _ = writeln!(out, "Cells: {TIMING_NOTE}, random-guess win rate");
    out.push('\n');
    out.push_str("| Trials |");
    for (set, msg) in &columns {
        let _ = write!(out, " {set}: {msg} |");
    }
    out.push_str("\n|---:|");
    out.push_str(&"---|".repeat(columns.len()));
    out.push('\n');
    for trials in rows {
        let _ = write!(out, "| {trials} |");
        for (set, msg) in &columns {
            let text = match report.cell(set, msg, trials) {
                Some(CellReport { error: Some(e), .. }) => format!("error: {e}"),
                Some(c) => format!("{} {}", fmt_ms(c.mean_ms()), fmt_pct(c.win_rate())),
                None => "-".into(),
            };
            let _ = write!(out, " {text} |");
        }
        out.push('\n');
    }
    out
}

fn emit_csv(report: &BenchReport) -> String {
    let mut out =
        String::from("attribute_set,message,trials,samples,mean_ms,median_ms,win_rate_pct,error\n");
    for c in &report.cells {
        let (mean, median, rate) = if c.error.is_some() {
            (String::new(), String::new(), String::new())
        } else {
            (
                fmt_ms(c.mean_ms()),
                fmt_ms(c.median_ms()),
                format!("{:.2}", c.win_rate() * 100.0),
            )
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{mean},{median},{rate},{}",
            csv_field(&c.cell.set),
            csv_field(&c.cell.message),
            c.cell.trials,
            c.samples.len(),
            csv_field(c.error.as_deref().unwrap_or("")),
        );
    }
    out
}

#[cfg(test)]
mod tests;
