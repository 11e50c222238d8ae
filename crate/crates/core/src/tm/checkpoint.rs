//! Per-shard checkpoint files and their merge.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EnumerationJob, Shard};
use crate::distributions::TupleDistribution;
use crate::error::{Error, Result};

/// One completed shard: the job (with its shard), the tallied lengths and
/// the partial distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardCheckpoint {
    pub job: EnumerationJob,
    pub lengths: Vec<usize>,
    pub runs: u64,
    pub halted: u64,
    pub distributions: BTreeMap<usize, TupleDistribution>,
}

/// Merged result of all shards of one job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationOutput {
    pub job: EnumerationJob,
    pub lengths: Vec<usize>,
    pub runs: u64,
    pub halted: u64,
    pub distributions: BTreeMap<usize, TupleDistribution>,
}

impl From<ShardCheckpoint> for EnumerationOutput {
    fn from(cp: ShardCheckpoint) -> Self {
        EnumerationOutput {
            job: cp.job,
            lengths: cp.lengths,
            runs: cp.runs,
            halted: cp.halted,
            distributions: cp.distributions,
        }
    }
}

pub fn checkpoint_path(dir: impl AsRef<Path>, shard: Shard) -> PathBuf {
    dir.as_ref().join(format!(
        "shard-{:05}-of-{:05}.json",
        shard.index, shard.total
    ))
}

/// Writes the checkpoint atomically (temp file, then rename).
pub fn write_checkpoint(dir: impl AsRef<Path>, cp: &ShardCheckpoint) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = checkpoint_path(dir, cp.job.shard);
    let tmp = path.with_extension("json.tmp");
    let body = serde_json::to_string_pretty(cp)?;
    std::fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<ShardCheckpoint> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// The checkpoint for `job`'s shard, if one exists on disk for the same job
/// and lengths. Unreadable or mismatched files count as incomplete.
pub fn load_completed(
    dir: impl AsRef<Path>,
    job: &EnumerationJob,
    lengths: &[usize],
) -> Option<ShardCheckpoint> {
    let path = checkpoint_path(dir, job.shard);
    let cp = read_checkpoint(&path).ok()?;
    let mut wanted = lengths.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    (cp.job == *job && cp.lengths == wanted).then_some(cp)
}

fn same_job(a: &EnumerationJob, b: &EnumerationJob) -> bool {
    a.n_states == b.n_states && a.step_bound == b.step_bound && a.mode == b.mode
}

/// Merges the shards of one job. Every shard index must appear exactly once.
pub fn merge_checkpoints(parts: &[ShardCheckpoint]) -> Result<EnumerationOutput> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("no checkpoints to merge".into()))?;
    let total = first.job.shard.total;
    let mut seen = BTreeSet::new();
    for cp in parts {
        if !same_job(&cp.job, &first.job)
            || cp.lengths != first.lengths
            || cp.job.shard.total != total
        {
            return Err(Error::InvalidArgument(format!(
                "checkpoint for shard {}/{} belongs to a different job",
                cp.job.shard.index, cp.job.shard.total
            )));
        }
        if !seen.insert(cp.job.shard.index) {
            return Err(Error::InvalidArgument(format!(
                "shard {} appears twice",
                cp.job.shard.index
            )));
        }
    }
    if seen.len() as u64 != total {
        let missing: Vec<u64> = (0..total).filter(|i| !seen.contains(i)).collect();
        return Err(Error::MissingArtifact(format!(
            "shards {missing:?} of {total}"
        )));
    }

    let mut distributions = BTreeMap::new();
    for &n in &first.lengths {
        let mut merged = TupleDistribution::new(n, first.job.label())?;
        for cp in parts {
            let part = cp.distributions.get(&n).ok_or_else(|| {
                Error::MissingArtifact(format!("length {n} in shard {}", cp.job.shard.index))
            })?;
            merged.merge(part)?;
        }
        distributions.insert(n, merged);
    }
    Ok(EnumerationOutput {
        job: first.job.with_shard(Shard::WHOLE),
        lengths: first.lengths.clone(),
        runs: parts.iter().map(|p| p.runs).sum(),
        halted: parts.iter().map(|p| p.halted).sum(),
        distributions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tm::run_shard;

    #[test]
    fn checkpoint_round_trip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let job = EnumerationJob::exhaustive(1)
            .unwrap()
            .with_shard(Shard::new(1, 2).unwrap());
        let cp = run_shard(&job, &[1, 2]).unwrap();
        let path = write_checkpoint(dir.path(), &cp).unwrap();
        assert!(path.ends_with("shard-00001-of-00002.json"));
        assert_eq!(read_checkpoint(&path).unwrap(), cp);
        assert_eq!(load_completed(dir.path(), &job, &[2, 1]), Some(cp));
        assert_eq!(load_completed(dir.path(), &job, &[3]), None);
        let other = job.with_shard(Shard::new(0, 2).unwrap());
        assert_eq!(load_completed(dir.path(), &other, &[1, 2]), None);
    }

    #[test]
    fn merge_requires_complete_disjoint_shards() {
        let job = EnumerationJob::exhaustive(2).unwrap();
        let parts: Vec<_> = (0..3)
            .map(|i| run_shard(&job.with_shard(Shard::new(i, 3).unwrap()), &[2]).unwrap())
            .collect();
        assert!(matches!(
            merge_checkpoints(&parts[..2]),
            Err(Error::MissingArtifact(_))
        ));
        let dup = vec![parts[0].clone(), parts[0].clone(), parts[1].clone()];
        assert!(merge_checkpoints(&dup).is_err());
        let whole = EnumerationOutput::from(run_shard(&job, &[2]).unwrap());
        let mut reversed = parts.clone();
        reversed.reverse();
        assert_eq!(merge_checkpoints(&reversed).unwrap(), whole);
    }
}
