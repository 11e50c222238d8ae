//! Correlation matrices across markets, random baselines and algorithmic
//! distributions, per tuple length, plus decade backtesting windows.
//!
//! # Config file
//!
//! Experiments are described by a TOML document:
//!
//! ```toml
//! quantum = 0.4                       # rounded-market quantum
//! tuple_lengths = [4, 5, 6, 7, 8, 9, 10]
//! comparisons = ["market-market", "rounded-rounded", "market-random",
//!                "rounded-random", "market-tm", "market-ca"]
//! support = "intersection"            # or "union"
//! tm = "tm.json"                      # precomputed tm-enum output
//! ca = "ca.json"                      # precomputed ca-sample output
//!
//! [window]
//! start = "1990-01-01"
//! end = "2010-01-31"
//!
//! [seeds]
//! random = 42
//!
//! [lengths]                           # optional per-comparison columns
//! market-tm = [5, 6, 7, 8, 9, 10]
//!
//! [[markets]]
//! symbol = "DJIA"
//! csv = "DJIA.csv"
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::random_direction_series;
use crate::distributions::{
    build_distribution_labeled, spearman, CorrelationReport, Support, TupleDistribution,
};
use crate::error::{Error, Result};
use crate::market::{align_windows, encode_directions, ingest_csv, PriceSeries, DEFAULT_QUANTUM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    MarketMarket,
    RoundedRounded,
    MarketRandom,
    RoundedRandom,
    MarketTm,
    MarketCa,
}

impl Comparison {
    pub const ALL: [Comparison; 6] = [
        Comparison::MarketMarket,
        Comparison::RoundedRounded,
        Comparison::MarketRandom,
        Comparison::RoundedRandom,
        Comparison::MarketTm,
        Comparison::MarketCa,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Comparison::MarketMarket => "market-market",
            Comparison::RoundedRounded => "rounded-rounded",
            Comparison::MarketRandom => "market-random",
            Comparison::RoundedRandom => "rounded-random",
            Comparison::MarketTm => "market-tm",
            Comparison::MarketCa => "market-ca",
        }
    }

    fn rounded(&self) -> bool {
        matches!(self, Comparison::RoundedRounded | Comparison::RoundedRandom)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::MarketMarket => "market vs. market",
            Comparison::RoundedRounded => "r. market vs. r. market",
            Comparison::MarketRandom => "market vs. random",
            Comparison::RoundedRandom => "r. market vs. random",
            Comparison::MarketTm => "market vs. TM",
            Comparison::MarketCa => "market vs. CA",
        })
    }
}

impl std::str::FromStr for Comparison {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Comparison::ALL
            .into_iter()
            .find(|c| c.key() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown comparison {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    /// `YYYY-MM-DD:YYYY-MM-DD` or `YYYY-MM-DD..YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once("..")
            .or_else(|| s.split_once(':'))
            .ok_or_else(|| Error::InvalidArgument(format!("bad window {s:?}")))?;
        let parse = |d: &str| {
            NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d")
                .map_err(|e| Error::InvalidArgument(format!("bad date {d:?}: {e}")))
        };
        let w = Window {
            start: parse(a)?,
            end: parse(b)?,
        };
        if w.start >= w.end {
            return Err(Error::InvalidArgument(format!("window {s:?} is empty")));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSource {
    pub symbol: String,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    #[serde(default)]
    pub random: u64,
}

fn default_quantum() -> f64 {
    DEFAULT_QUANTUM
}

pub fn default_tuple_lengths() -> Vec<usize> {
    (4..=10).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub markets: Vec<MarketSource>,
    #[serde(default)]
    pub window: Option<Window>,
    #[serde(default = "default_quantum")]
    pub quantum: f64,
    #[serde(default = "default_tuple_lengths")]
    pub tuple_lengths: Vec<usize>,
    #[serde(default)]
    pub lengths: BTreeMap<Comparison, Vec<usize>>,
    pub comparisons: Vec<Comparison>,
    #[serde(default)]
    pub support: Support,
    #[serde(default)]
    pub tm: Option<PathBuf>,
    #[serde(default)]
    pub ca: Option<PathBuf>,
    #[serde(default)]
    pub seeds: Seeds,
}

impl ExperimentConfig {
    /// Parses a TOML config; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for m in &mut cfg.markets {
            resolve(&mut m.csv);
        }
        cfg.tm.as_mut().map(resolve);
        cfg.ca.as_mut().map(resolve);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.comparisons.is_empty() {
            return Err(Error::Config("at least one comparison is required".into()));
        }
        if !(self.quantum >= 0.0 && self.quantum.is_finite()) {
            return Err(Error::Config(format!(
                "quantum must be non-negative, got {}",
                self.quantum
            )));
        }
        for lengths in std::iter::once(&self.tuple_lengths).chain(self.lengths.values()) {
            if lengths.is_empty() || lengths.iter().any(|&n| n == 0 || n > 24) {
                return Err(Error::Config(format!("bad tuple lengths {lengths:?}")));
            }
        }
        let mut symbols: Vec<&str> = self.markets.iter().map(|m| m.symbol.as_str()).collect();
        symbols.sort_unstable();
        if let Some(w) = symbols.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("market {} listed twice", w[0])));
        }
        Ok(())
    }

    pub fn lengths_for(&self, c: Comparison) -> &[usize] {
        self.lengths.get(&c).unwrap_or(&self.tuple_lengths)
    }

    /// Loads every market, restricted to the configured window.
    pub fn load_markets(&self) -> Result<Vec<PriceSeries>> {
        self.markets
            .iter()
            .map(|m| {
                let s = load_market(m)?;
                match self.window {
                    Some(w) => align_windows(&s, w.start, w.end),
                    None => Ok(s),
                }
            })
            .collect()
    }
}

fn load_market(m: &MarketSource) -> Result<PriceSeries> {
    let s = ingest_csv(&m.csv)?;
    PriceSeries::new(
        m.symbol.clone(),
        s.dates()
            .iter()
            .copied()
            .zip(s.closes().iter().copied())
            .collect(),
    )
}

/// One table: rows are pair labels, columns tuple lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub comparison: Comparison,
    pub rows: Vec<String>,
    pub columns: Vec<usize>,
    pub cells: Vec<Vec<CorrelationReport>>,
}

pub type Matrices = BTreeMap<Comparison, CorrelationMatrix>;

/// Precomputed distributions of an algorithmic source (tm-enum or ca-sample
/// output). Only the `distributions` field is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmicArtifact {
    pub distributions: BTreeMap<usize, TupleDistribution>,
}

impl AlgorithmicArtifact {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MissingArtifact(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::MissingArtifact(format!("{}: {e}", path.display())))
    }
}

/// FNV-1a; derives per-market random seeds that do not depend on market order.
fn symbol_hash(symbol: &str) -> u64 {
    symbol.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

enum Partner<'a> {
    Market(&'a PriceSeries),
    Random,
    Artifact(&'a AlgorithmicArtifact, &'a Path),
}

struct Row<'a> {
    label: String,
    left: &'a PriceSeries,
    right: Partner<'a>,
}

fn market_distribution(
    series: &PriceSeries,
    q: f64,
    n: usize,
) -> Result<Option<TupleDistribution>> {
    let bits = encode_directions(series, q)?.bits;
    match build_distribution_labeled(&bits, n, series.symbol()) {
        Ok(d) => Ok(Some(d)),
        Err(Error::InsufficientData(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn cell(
    row: &Row<'_>,
    comparison: Comparison,
    cfg: &ExperimentConfig,
    n: usize,
) -> Result<CorrelationReport> {
    let q = if comparison.rounded() {
        cfg.quantum
    } else {
        0.0
    };
    let empty = CorrelationReport {
        rho: None,
        n_compared: 0,
        tuple_length: n,
    };
    let Some(left) = market_distribution(row.left, q, n)? else {
        return Ok(empty);
    };
    let right = match &row.right {
        Partner::Market(other) => match market_distribution(other, q, n)? {
            Some(d) => d,
            None => return Ok(empty),
        },
        Partner::Random => {
            let len = row.left.len() - 1;
            let seed = cfg.seeds.random ^ symbol_hash(row.left.symbol());
            let bits = random_direction_series(len, seed)?;
            match build_distribution_labeled(&bits, n, "random") {
                Ok(d) => d,
                Err(Error::InsufficientData(_)) => return Ok(empty),
                Err(e) => return Err(e),
            }
        }
        Partner::Artifact(artifact, path) => {
            artifact.distributions.get(&n).cloned().ok_or_else(|| {
                Error::MissingArtifact(format!(
                    "{}: no distribution for length {n}",
                    path.display()
                ))
            })?
        }
    };
    spearman(&left, &right, cfg.support)
}

/// Computes every configured comparison over already-loaded series.
pub fn run_on_series(cfg: &ExperimentConfig, series: &[PriceSeries]) -> Result<Matrices> {
    cfg.validate()?;
    let mut sorted: Vec<&PriceSeries> = series.iter().collect();
    sorted.sort_by(|a, b| a.symbol().cmp(b.symbol()));

    let load_artifact =
        |path: &Option<PathBuf>, what: &str| -> Result<(AlgorithmicArtifact, PathBuf)> {
            let path = path.clone().ok_or_else(|| {
                Error::MissingArtifact(format!("no precomputed {what} distribution configured"))
            })?;
            Ok((AlgorithmicArtifact::load(&path)?, path))
        };
    let tm = if cfg.comparisons.contains(&Comparison::MarketTm) {
        Some(load_artifact(&cfg.tm, "TM")?)
    } else {
        None
    };
    let ca = if cfg.comparisons.contains(&Comparison::MarketCa) {
        Some(load_artifact(&cfg.ca, "CA")?)
    } else {
        None
    };

    let mut comparisons = cfg.comparisons.clone();
    comparisons.sort_unstable();
    comparisons.dedup();

    let mut out = Matrices::new();
    for comparison in comparisons {
        let mut rows = Vec::new();
        match comparison {
            Comparison::MarketMarket | Comparison::RoundedRounded => {
                for (i, a) in sorted.iter().enumerate() {
                    for b in &sorted[i + 1..] {
                        rows.push(Row {
                            label: format!("{} vs. {}", a.symbol(), b.symbol()),
                            left: a,
                            right: Partner::Market(b),
                        });
                    }
                }
            }
            Comparison::MarketRandom | Comparison::RoundedRandom => {
                for a in &sorted {
                    rows.push(Row {
                        label: format!("{} vs. random", a.symbol()),
                        left: a,
                        right: Partner::Random,
                    });
                }
            }
            Comparison::MarketTm | Comparison::MarketCa => {
                let (artifact, path, tag) = match (comparison, &tm, &ca) {
                    (Comparison::MarketTm, Some((a, p)), _) => (a, p, "TM"),
                    (Comparison::MarketCa, _, Some((a, p))) => (a, p, "CA"),
                    _ => unreachable!("artifact loaded above"),
                };
                for a in &sorted {
                    rows.push(Row {
                        label: format!("{} vs. {tag}", a.symbol()),
                        left: a,
                        right: Partner::Artifact(artifact, path.as_path()),
                    });
                }
            }
        }
        let columns = cfg.lengths_for(comparison).to_vec();
        let cells = rows
            .par_iter()
            .map(|row| {
                columns
                    .iter()
                    .map(|&n| cell(row, comparison, cfg, n))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        out.insert(
            comparison,
            CorrelationMatrix {
                comparison,
                rows: rows.into_iter().map(|r| r.label).collect(),
                columns,
                cells,
            },
        );
    }
    Ok(out)
}

/// Loads the configured markets and computes every configured comparison.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Matrices> {
    let series = cfg.load_markets()?;
    run_on_series(cfg, &series)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestWindow {
    pub window: Window,
    pub markets: Vec<String>,
    /// One line per market dropped from the window.
    pub warnings: Vec<String>,
    pub matrices: Matrices,
}

/// Runs the experiment once per window. Markets without at least two
/// observations inside a window are dropped from it with a warning.
pub fn backtest(cfg: &ExperimentConfig, windows: &[Window]) -> Result<Vec<BacktestWindow>> {
    if windows.is_empty() {
        return Err(Error::InvalidArgument("no backtest windows given".into()));
    }
    let full = cfg
        .markets
        .iter()
        .map(load_market)
        .collect::<Result<Vec<_>>>()?;
    windows
        .iter()
        .map(|&window| {
            let mut kept = Vec::new();
            let mut warnings = Vec::new();
            for s in &full {
                match align_windows(s, window.start, window.end) {
                    Ok(w) => kept.push(w),
                    Err(e) => warnings.push(format!("dropped {}: {e}", s.symbol())),
                }
            }
            if kept.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "window {window} has no usable market"
                )));
            }
            for w in &warnings {
                log::warn!("{window}: {w}");
            }
            let mut markets: Vec<String> = kept.iter().map(|s| s.symbol().to_string()).collect();
            markets.sort();
            Ok(BacktestWindow {
                window,
                markets,
                warnings,
                matrices: run_on_series(cfg, &kept)?,
            })
        })
        .collect()
}

/// `rho` to two significant digits, as in `0.73`, `0.014`, `-0.085`.
pub fn format_rho(rho: f64) -> String {
    if rho == 0.0 || rho.abs() < 1e-6 {
        return "0".to_string();
    }
    let decimals = (1 - rho.abs().log10().floor() as i32).max(1) as usize;
    format!("{rho:.decimals$}")
}

/// `rho|n`, or `–|n` when rho is undefined.
pub fn format_cell(report: &CorrelationReport) -> String {
    match report.rho {
        Some(rho) => format!("{}|{}", format_rho(rho), report.n_compared),
        None => format!("–|{}", report.n_compared),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFile {
    pub name: String,
    pub contents: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders matrices. CSV yields one file per comparison; JSON and Markdown
/// one file each.
pub fn emit_report(matrices: &Matrices, format: ReportFormat) -> Result<Vec<ReportFile>> {
    if matrices.is_empty() {
        return Err(Error::InvalidArgument("no matrices to report".into()));
    }
    Ok(match format {
        ReportFormat::Json => vec![ReportFile {
            name: "report.json".into(),
            contents: serde_json::to_string_pretty(matrices)? + "\n",
        }],
        ReportFormat::Csv => matrices
            .values()
            .map(|m| {
                let mut out = String::from("pair");
                for n in &m.columns {
                    let _ = write!(out, ",{n}");
                }
                out.push('\n');
                for (label, row) in m.rows.iter().zip(&m.cells) {
                    out.push_str(&csv_field(label));
                    for c in row {
                        let _ = write!(out, ",{}", format_cell(c));
                    }
                    out.push('\n');
                }
                ReportFile {
                    name: format!("{}.csv", m.comparison.key()),
                    contents: out,
                }
            })
            .collect(),
        ReportFormat::Markdown => {
            let mut out = String::new();
            for m in matrices.values() {
                let _ = writeln!(out, "### {}\n", m.comparison);
                let _ = write!(out, "| {} |", m.comparison);
                for n in &m.columns {
                    let _ = write!(out, " {n} |");
                }
                out.push_str("\n|---|");
                out.push_str(&"---|".repeat(m.columns.len()));
                out.push('\n');
                for (label, row) in m.rows.iter().zip(&m.cells) {
                    let _ = write!(out, "| {label} |");
                    for c in row {
                        let _ = write!(out, " {} |", format_cell(c).replace('|', "\\|"));
                    }
                    out.push('\n');
                }
                out.push('\n');
            }
            vec![ReportFile {
                name: "report.md".into(),
                contents: out,
            }]
        }
    })
}
