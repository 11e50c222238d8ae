//! Tuple frequency distributions, ranking, Spearman correlation and the
//! frequency-based complexity estimate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Renders a 0/1 slice as a string of `'0'`/`'1'` characters.
pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter()
        .map(|&b| if b == 0 { '0' } else { '1' })
        .collect()
}

/// Parses a string of `'0'`/`'1'` characters.
pub fn parse_bits(text: &str) -> Result<Vec<u8>> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::InvalidArgument(format!("not a binary digit: {c:?}"))),
        })
        .collect()
}

/// Binary string of `len` digits for `code`, most significant digit first.
pub fn code_to_tuple(code: u64, len: usize) -> String {
    let mut s = String::with_capacity(len);
    for i in (0..len).rev() {
        s.push(if (code >> i) & 1 == 1 { '1' } else { '0' });
    }
    s
}

/// Counts of fixed-length binary tuples.
///
/// Keys are kept in a `BTreeMap` so serialization is byte-stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct TupleDistribution {
    tuple_length: usize,
    total: u64,
    counts: BTreeMap<String, u64>,
    source_label: String,
}

#[derive(Deserialize)]
struct RawDistribution {
    tuple_length: usize,
    total: u64,
    counts: BTreeMap<String, u64>,
    #[serde(default)]
    source_label: String,
}

impl TryFrom<RawDistribution> for TupleDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        let dist = TupleDistribution::from_counts(raw.tuple_length, raw.counts, raw.source_label)?;
        if dist.total != raw.total {
            return Err(Error::InvalidArgument(format!(
                "total {} does not match sum of counts {}",
                raw.total, dist.total
            )));
        }
        Ok(dist)
    }
}

fn check_tuple(tuple: &str, length: usize) -> Result<()> {
    if tuple.len() != length || !tuple.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::InvalidTuple {
            tuple: tuple.to_string(),
            length,
        });
    }
    Ok(())
}

impl TupleDistribution {
    pub fn new(tuple_length: usize, source_label: impl Into<String>) -> Result<Self> {
        if tuple_length == 0 {
            return Err(Error::InvalidArgument(
                "tuple length must be positive".into(),
            ));
        }
        Ok(Self {
            tuple_length,
            total: 0,
            counts: BTreeMap::new(),
            source_label: source_label.into(),
        })
    }

    /// Builds a distribution from explicit counts. Zero counts are dropped.
    pub fn from_counts<K: AsRef<str>>(
        tuple_length: usize,
        counts: impl IntoIterator<Item = (K, u64)>,
        source_label: impl Into<String>,
    ) -> Result<Self> {
        let mut dist = Self::new(tuple_length, source_label)?;
        for (tuple, count) in counts {
            dist.add(tuple.as_ref(), count)?;
        }
        Ok(dist)
    }

    /// Builds a distribution from a dense table indexed by tuple code
    /// (`code_to_tuple` order). `table.len()` must be `2^tuple_length`.
    pub fn from_code_table(
        tuple_length: usize,
        table: &[u64],
        source_label: impl Into<String>,
    ) -> Result<Self> {
        if tuple_length >= 64 || table.len() != 1usize << tuple_length {
            return Err(Error::InvalidArgument(format!(
                "code table of size {} does not fit tuple length {tuple_length}",
                table.len()
            )));
        }
        let mut dist = Self::new(tuple_length, source_label)?;
        for (code, &count) in table.iter().enumerate() {
            if count > 0 {
                dist.counts
                    .insert(code_to_tuple(code as u64, tuple_length), count);
                dist.total += count;
            }
        }
        Ok(dist)
    }

    pub fn add(&mut self, tuple: &str, count: u64) -> Result<()> {
        check_tuple(tuple, self.tuple_length)?;
        if count > 0 {
            *self.counts.entry(tuple.to_string()).or_insert(0) += count;
            self.total += count;
        }
        Ok(())
    }

    pub fn tuple_length(&self) -> usize {
        self.tuple_length
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn set_source_label(&mut self, label: impl Into<String>) {
        self.source_label = label.into();
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn count(&self, tuple: &str) -> u64 {
        self.counts.get(tuple).copied().unwrap_or(0)
    }

    /// Number of distinct tuples with non-zero count.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn probability(&self, tuple: &str) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        self.counts
            .get(tuple)
            .map(|&c| c as f64 / self.total as f64)
    }

    /// Count-wise addition. The source label is kept.
    pub fn merge(&mut self, other: &TupleDistribution) -> Result<()> {
        if other.tuple_length != self.tuple_length {
            return Err(Error::LengthMismatch {
                left: self.tuple_length,
                right: other.tuple_length,
            });
        }
        for (tuple, &count) in &other.counts {
            *self.counts.entry(tuple.clone()).or_insert(0) += count;
        }
        self.total += other.total;
        Ok(())
    }

    /// CSV with header `tuple,count,probability`, rows in lexicographic order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tuple,count,probability\n");
        for (tuple, &count) in &self.counts {
            let p = count as f64 / self.total as f64;
            let _ = writeln!(out, "{tuple},{count},{p}");
        }
        out
    }

    /// Reads the CSV produced by [`TupleDistribution::to_csv`]; probabilities are ignored.
    pub fn from_csv(text: &str, source_label: impl Into<String>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 2;
            let record = record.map_err(|e| Error::Parse {
                row,
                message: e.to_string(),
            })?;
            let tuple = record.get(0).unwrap_or_default().to_string();
            let count: u64 =
                record
                    .get(1)
                    .unwrap_or_default()
                    .parse()
                    .map_err(|e| Error::Parse {
                        row,
                        message: format!("bad count: {e}"),
                    })?;
            rows.push((tuple, count));
        }
        let length = rows
            .first()
            .map(|(t, _)| t.len())
            .ok_or_else(|| Error::InsufficientData("distribution CSV has no rows".into()))?;
        Self::from_counts(length, rows, source_label)
    }
}

/// Partitions `bits` into consecutive non-overlapping blocks of length `n`
/// starting at index 0 and counts them. A trailing remainder shorter than
/// `n` is discarded.
pub fn build_distribution(bits: &[u8], n: usize) -> Result<TupleDistribution> {
    build_distribution_labeled(bits, n, "")
}

pub fn build_distribution_labeled(
    bits: &[u8],
    n: usize,
    source_label: impl Into<String>,
) -> Result<TupleDistribution> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "tuple length must be positive".into(),
        ));
    }
    if bits.is_empty() || bits.len() < n {
        return Err(Error::InsufficientData(format!(
            "{} bits cannot hold a tuple of length {n}",
            bits.len()
        )));
    }
    if let Some(bad) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::InvalidArgument(format!("non-binary symbol {bad}")));
    }
    let mut dist = TupleDistribution::new(n, source_label)?;
    let mut counts: BTreeMap<&[u8], u64> = BTreeMap::new();
    for block in bits.chunks_exact(n) {
        *counts.entry(block).or_insert(0) += 1;
    }
    for (block, count) in counts {
        dist.counts.insert(bits_to_string(block), count);
        dist.total += count;
    }
    Ok(dist)
}

/// Tuples sorted by probability descending, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedView {
    pub entries: Vec<(String, f64)>,
}

impl RankedView {
    /// Tuples sharing the highest probability.
    pub fn top(&self) -> Vec<&str> {
        match self.entries.first() {
            None => Vec::new(),
            Some((_, p)) => self
                .entries
                .iter()
                .take_while(|(_, q)| q == p)
                .map(|(t, _)| t.as_str())
                .collect(),
        }
    }

    /// Re-sorts the entries by the same total order.
    pub fn reranked(&self) -> RankedView {
        let mut entries = self.entries.clone();
        sort_ranked(&mut entries);
        RankedView { entries }
    }
}

fn sort_ranked(entries: &mut [(String, f64)]) {
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

pub fn ranked_view(dist: &TupleDistribution) -> Result<RankedView> {
    if dist.total == 0 {
        return Err(Error::EmptyDistribution);
    }
    let total = dist.total as f64;
    let mut entries: Vec<(String, f64)> = dist
        .counts
        .iter()
        .map(|(t, &c)| (t.clone(), c as f64 / total))
        .collect();
    sort_ranked(&mut entries);
    Ok(RankedView { entries })
}

/// Which tuples enter a Spearman comparison.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    /// Tuples present in both distributions.
    #[default]
    Intersection,
    /// Tuples present in either; absent tuples count as zero.
    Union,
}

impl std::str::FromStr for Support {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" => Ok(Support::Intersection),
            "union" => Ok(Support::Union),
            other => Err(Error::InvalidArgument(format!("unknown support {other:?}"))),
        }
    }
}

/// Spearman coefficient with the size of the compared support.
///
/// `rho` is `None` when fewer than two tuples were compared or one side has
/// no rank variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rho: Option<f64>,
    pub n_compared: usize,
    pub tuple_length: usize,
}

impl CorrelationReport {
    pub fn is_defined(&self) -> bool {
        self.rho.is_some()
    }
}

/// Average ranks (1-based) of `values` sorted descending; ties share the
/// mean of the positions they span.
pub fn average_ranks_desc(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j share their mean
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation; `None` if either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation between two tuple distributions over the chosen
/// support. Ranks are assigned by count descending with average ranks for
/// ties.
pub fn spearman(
    a: &TupleDistribution,
    b: &TupleDistribution,
    support: Support,
) -> Result<CorrelationReport> {
    if a.tuple_length != b.tuple_length {
        return Err(Error::LengthMismatch {
            left: a.tuple_length,
            right: b.tuple_length,
        });
    }
    let keys: Vec<&String> = match support {
        Support::Intersection => a
            .counts
            .keys()
            .filter(|k| b.counts.contains_key(*k))
            .collect(),
        Support::Union => a
            .counts
            .keys()
            .chain(b.counts.keys())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let report = |rho| CorrelationReport {
        rho,
        n_compared: keys.len(),
        tuple_length: a.tuple_length,
    };
    if keys.len() < 2 {
        return Ok(report(None));
    }
    let xa: Vec<f64> = keys.iter().map(|k| a.count(k) as f64).collect();
    let xb: Vec<f64> = keys.iter().map(|k| b.count(k) as f64).collect();
    let rho = pearson(&average_ranks_desc(&xa), &average_ranks_desc(&xb));
    Ok(report(rho))
}

/// `-log2(count/total)`: the coding-theorem estimate of the tuple's
/// complexity, up to an additive constant.
pub fn complexity_estimate(dist: &TupleDistribution, tuple: &str) -> Result<f64> {
    match dist.counts.get(tuple) {
        Some(&count) if count > 0 => Ok(-(count as f64 / dist.total as f64).log2()),
        _ => Err(Error::NoMass(tuple.to_string())),
    }
}

/// Count-wise sum of shard distributions.
pub fn merge_shards(parts: &[TupleDistribution]) -> Result<TupleDistribution> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("no shards to merge".into()))?;
    let mut merged = TupleDistribution::new(first.tuple_length, first.source_label.clone())?;
    for part in parts {
        merged.merge(part)?;
    }
    Ok(merged)
}
