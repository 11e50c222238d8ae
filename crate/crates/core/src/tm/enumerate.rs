use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{checked_space, CompiledMachine, Simulator};
use crate::distributions::TupleDistribution;
use crate::error::{Error, Result};

/// Largest state count enumerated exhaustively without an explicit override.
pub const EXHAUSTIVE_STATE_LIMIT: usize = 3;

/// Longest output length that can be tallied.
pub const MAX_TUPLE_LENGTH: usize = 24;

const CHUNK: u64 = 1 << 15;

/// Maximum steps taken by a halting machine from a blank tape (the halting
/// transition included), for the state counts where it is known and small.
pub fn busy_beaver_steps(n_states: usize) -> Option<u64> {
    match n_states {
        1 => Some(1),
        2 => Some(6),
        3 => Some(21),
        4 => Some(107),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    /// `count` machine indices drawn uniformly with replacement.
    Sample {
        count: u64,
        seed: u64,
    },
}

impl std::str::FromStr for Mode {
    type Err = Error;

    /// `exhaustive` or `sample:COUNT[:seed=SEED]`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "exhaustive" {
            return Ok(Mode::Exhaustive);
        }
        let bad = || {
            Error::InvalidArgument(format!(
                "bad mode {s:?}; expected exhaustive or sample:COUNT[:seed=SEED]"
            ))
        };
        let rest = s.strip_prefix("sample:").ok_or_else(bad)?;
        let mut parts = rest.split(':');
        let count = parts.next().and_then(|c| c.parse().ok()).ok_or_else(bad)?;
        let seed = match parts.next() {
            None => 0,
            Some(p) => p
                .strip_prefix("seed=")
                .and_then(|v| v.parse().ok())
                .ok_or_else(bad)?,
        };
        if parts.next().is_some() || count == 0 {
            return Err(bad());
        }
        Ok(Mode::Sample { count, seed })
    }
}

/// A contiguous slice `index` of `total` equal parts of the work range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shard {
    pub index: u64,
    pub total: u64,
}

impl Shard {
    pub const WHOLE: Shard = Shard { index: 0, total: 1 };

    pub fn new(index: u64, total: u64) -> Result<Self> {
        if total == 0 || index >= total {
            return Err(Error::InvalidArgument(format!(
                "shard index {index} must be below shard count {total}"
            )));
        }
        Ok(Self { index, total })
    }

    /// Half-open sub-range of `0..len` covered by this shard.
    pub fn range(&self, len: u64) -> std::ops::Range<u64> {
        let bound = |i: u64| ((len as u128 * i as u128) / self.total as u128) as u64;
        bound(self.index)..bound(self.index + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationJob {
    pub n_states: usize,
    pub step_bound: u64,
    pub mode: Mode,
    pub shard: Shard,
    /// Permits exhaustive enumeration above [`EXHAUSTIVE_STATE_LIMIT`].
    #[serde(default)]
    pub force: bool,
}

impl EnumerationJob {
    /// Exhaustive job over the whole space at the Busy Beaver step bound.
    pub fn exhaustive(n_states: usize) -> Result<Self> {
        let step_bound = busy_beaver_steps(n_states).ok_or_else(|| {
            Error::InvalidArgument(format!("no known step bound for {n_states} states"))
        })?;
        Ok(Self {
            n_states,
            step_bound,
            mode: Mode::Exhaustive,
            shard: Shard::WHOLE,
            force: false,
        })
    }

    pub fn with_shard(self, shard: Shard) -> Self {
        Self { shard, ..self }
    }

    /// Distribution label; shard-independent so merged shards match an
    /// unsharded run.
    pub fn label(&self) -> String {
        match self.mode {
            Mode::Exhaustive => format!(
                "tm:states={},bound={},mode=exhaustive",
                self.n_states, self.step_bound
            ),
            Mode::Sample { count, seed } => format!(
                "tm:states={},bound={},mode=sample,count={count},seed={seed}",
                self.n_states, self.step_bound
            ),
        }
    }

    fn validate(&self) -> Result<u64> {
        let space = checked_space(self.n_states)?;
        if self.step_bound == 0 {
            return Err(Error::InvalidArgument("step bound must be positive".into()));
        }
        Shard::new(self.shard.index, self.shard.total)?;
        if self.mode == Mode::Exhaustive && self.n_states > EXHAUSTIVE_STATE_LIMIT && !self.force {
            return Err(Error::BudgetGuard(format!(
                "exhaustive enumeration of {space} {}-state machines exceeds the default limit of {EXHAUSTIVE_STATE_LIMIT} states; sample instead or force",
                self.n_states
            )));
        }
        Ok(space)
    }

    /// Number of work items (machines or draws) before sharding.
    pub fn work_len(&self) -> Result<u64> {
        let space = self.validate()?;
        Ok(match self.mode {
            Mode::Exhaustive => space,
            Mode::Sample { count, .. } => count,
        })
    }
}

/// Per-shard tallies: one dense code table per requested length.
#[derive(Debug, Clone)]
pub(crate) struct Tally {
    pub(crate) lengths: Vec<usize>,
    pub(crate) tables: Vec<Vec<u64>>,
    pub(crate) runs: u64,
    pub(crate) halted: u64,
}

impl Tally {
    fn new(lengths: &[usize]) -> Self {
        Self {
            lengths: lengths.to_vec(),
            tables: lengths.iter().map(|&n| vec![0; 1 << n]).collect(),
            runs: 0,
            halted: 0,
        }
    }

    fn add(mut self, other: Tally) -> Tally {
        for (a, b) in self.tables.iter_mut().zip(other.tables) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.runs += other.runs;
        self.halted += other.halted;
        self
    }
}

fn check_lengths(lengths: &[usize]) -> Result<Vec<usize>> {
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(Error::InvalidArgument("no tuple lengths requested".into()));
    }
    if let Some(&bad) = sorted.iter().find(|&&n| n == 0 || n > MAX_TUPLE_LENGTH) {
        return Err(Error::InvalidArgument(format!(
            "tuple length {bad} outside 1..={MAX_TUPLE_LENGTH}"
        )));
    }
    Ok(sorted)
}

fn draw_index(seed: u64, draw: u64, space: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng.random_range(0..space)
}

/// Runs every machine of the job's shard on both backgrounds and tallies
/// halting outputs whose length is requested. Work is split across the
/// current rayon pool; totals do not depend on the split.
pub(crate) fn tally_shard(job: &EnumerationJob, lengths: &[usize]) -> Result<Tally> {
    let space = checked_space(job.n_states)?;
    let range = job.shard.range(job.work_len()?);
    let lengths = check_lengths(lengths)?;
    let max_len = *lengths.last().unwrap_or(&0);
    let chunks: Vec<(u64, u64)> = (range.start..range.end)
        .step_by(CHUNK as usize)
        .map(|s| (s, (s + CHUNK).min(range.end)))
        .collect();

    let tally = chunks
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut tally = Tally::new(&lengths);
            let mut machine = CompiledMachine::default();
            let mut sim = Simulator::default();
            for item in lo..hi {
                let idx = match job.mode {
                    Mode::Exhaustive => item,
                    Mode::Sample { seed, .. } => draw_index(seed, item, space),
                };
                machine.decode(idx, job.n_states);
                for background in 0..=1u8 {
                    tally.runs += 1;
                    let (halted, _) = sim.run(&machine, background, job.step_bound);
                    if !halted {
                        continue;
                    }
                    tally.halted += 1;
                    let len = sim.output_len();
                    if len > max_len {
                        continue;
                    }
                    if let Ok(pos) = tally.lengths.binary_search(&len) {
                        tally.tables[pos][sim.output_code() as usize] += 1;
                    }
                }
            }
            tally
        })
        .reduce(|| Tally::new(&lengths), Tally::add);
    Ok(tally)
}

/// Runs one shard and packages it as a checkpoint.
pub fn run_shard(job: &EnumerationJob, lengths: &[usize]) -> Result<super::ShardCheckpoint> {
    let tally = tally_shard(job, lengths)?;
    let label = job.label();
    let mut distributions = BTreeMap::new();
    for (n, table) in tally.lengths.iter().zip(&tally.tables) {
        distributions.insert(
            *n,
            TupleDistribution::from_code_table(*n, table, label.clone())?,
        );
    }
    Ok(super::ShardCheckpoint {
        job: *job,
        lengths: tally.lengths,
        runs: tally.runs,
        halted: tally.halted,
        distributions,
    })
}

/// Output-frequency distributions, one per requested length, for the job's
/// shard. Each machine is run on a 0 background and on a 1 background and
/// every halting run whose output has a requested length counts once.
pub fn enumerate_distribution(
    job: &EnumerationJob,
    tuple_lengths: &[usize],
) -> Result<BTreeMap<usize, TupleDistribution>> {
    Ok(run_shard(job, tuple_lengths)?.distributions)
}
