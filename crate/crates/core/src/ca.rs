//! One-dimensional 4-color totalistic automata (radius 1) and the rule-90
//! toy price series.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::TupleDistribution;
use crate::error::{Error, Result};

pub const COLORS: u8 = 4;
/// Neighborhood sums range over `0..=9`, one base-4 digit each.
pub const RULE_DIGITS: usize = 10;
pub const RULE_COUNT: u32 = 1 << (2 * RULE_DIGITS);

pub const DEFAULT_STEPS: usize = 100;
pub const DEFAULT_SAMPLE: usize = 10_000;

/// Totalistic rule: the next color is the base-4 digit of `code` at the
/// position given by the sum of the three neighborhood colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TotalisticRule {
    code: u32,
}

impl TotalisticRule {
    pub fn new(code: u32) -> Result<Self> {
        if code >= RULE_COUNT {
            return Err(Error::InvalidArgument(format!(
                "rule code {code} outside 0..{RULE_COUNT}"
            )));
        }
        Ok(Self { code })
    }

    pub fn code(&self) -> u32 {
        self.code
    }

    /// Digit table indexed by neighborhood sum.
    pub fn digits(&self) -> [u8; RULE_DIGITS] {
        let mut digits = [0u8; RULE_DIGITS];
        let mut rest = self.code;
        for d in digits.iter_mut() {
            *d = (rest % COLORS as u32) as u8;
            rest /= COLORS as u32;
        }
        digits
    }

    pub fn from_digits(digits: [u8; RULE_DIGITS]) -> Result<Self> {
        if digits.iter().any(|&d| d >= COLORS) {
            return Err(Error::InvalidArgument(format!(
                "digits must be below {COLORS}"
            )));
        }
        let code = digits
            .iter()
            .rev()
            .fold(0u32, |acc, &d| acc * COLORS as u32 + d as u32);
        Self::new(code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CAEvolution {
    pub rule: u32,
    pub seed: Option<u64>,
    pub steps: usize,
    /// Row 0 is the initial condition; row `t` is `2t` cells wider.
    pub rows: Vec<Vec<u8>>,
}

/// Random initial row: length uniform in `10..=20`, cells uniform in `{0,1}`.
pub fn random_initial(seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.random_range(10..=20);
    (0..len).map(|_| rng.random_range(0..2u8)).collect()
}

/// Evolves `steps` steps on a 0 background. Each new row covers one extra
/// cell on each side of its predecessor.
pub fn evolve(rule: TotalisticRule, init: &[u8], steps: usize) -> Result<CAEvolution> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    if init.iter().any(|&c| c >= COLORS) {
        return Err(Error::InvalidArgument(format!(
            "colors must be below {COLORS}"
        )));
    }
    let digits = rule.digits();
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(init.to_vec());
    for _ in 0..steps {
        let prev = rows.last().expect("at least the initial row");
        let at = |i: isize| -> u8 {
            if i < 0 || i as usize >= prev.len() {
                0
            } else {
                prev[i as usize]
            }
        };
        // new cell j sits above old position j - 1
        let next: Vec<u8> = (0..prev.len() + 2)
            .map(|j| {
                let c = j as isize - 1;
                digits[(at(c - 1) + at(c) + at(c + 1)) as usize]
            })
            .collect();
        rows.push(next);
    }
    Ok(CAEvolution {
        rule: rule.code,
        seed: None,
        steps,
        rows,
    })
}

/// Maximal runs of cells whose colors are all in `{0,1}`.
pub fn binary_runs(row: &[u8]) -> impl Iterator<Item = &[u8]> {
    row.split(|&c| c > 1).filter(|run| !run.is_empty())
}

/// Adds the non-overlapping `n`-tuples of every binary run of every row to
/// the code tables (one per length, indexed like `code_to_tuple`).
fn tally_rows(rows: &[Vec<u8>], lengths: &[usize], tables: &mut [Vec<u64>]) {
    for row in rows {
        for run in binary_runs(row) {
            for (&n, table) in lengths.iter().zip(tables.iter_mut()) {
                for block in run.chunks_exact(n) {
                    let code = block.iter().fold(0usize, |a, &b| (a << 1) | b as usize);
                    table[code] += 1;
                }
            }
        }
    }
}

/// Tuple distributions from explicit rule codes, each evolved from
/// `random_initial(seed ^ draw_index)`.
pub fn distribution_for_rules(
    codes: &[u32],
    steps: usize,
    tuple_lengths: &[usize],
    seed: u64,
    label: &str,
) -> Result<BTreeMap<usize, TupleDistribution>> {
    let mut lengths = tuple_lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.is_empty() || lengths.iter().any(|&n| n == 0 || n > 24) {
        return Err(Error::InvalidArgument(format!(
            "bad tuple lengths {tuple_lengths:?}"
        )));
    }
    let rules = codes
        .iter()
        .map(|&c| TotalisticRule::new(c))
        .collect::<Result<Vec<_>>>()?;
    let empty = || {
        lengths
            .iter()
            .map(|&n| vec![0u64; 1 << n])
            .collect::<Vec<_>>()
    };
    let tables = rules
        .par_iter()
        .enumerate()
        .map(|(draw, &rule)| {
            let init = random_initial(seed ^ draw as u64);
            let evo = evolve(rule, &init, steps).expect("validated steps and colors");
            let mut tables = empty();
            tally_rows(&evo.rows, &lengths, &mut tables);
            tables
        })
        .reduce(empty, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                for (p, q) in x.iter_mut().zip(y) {
                    *p += q;
                }
            }
            a
        });
    lengths
        .iter()
        .zip(&tables)
        .map(|(&n, table)| Ok((n, TupleDistribution::from_code_table(n, table, label)?)))
        .collect()
}

/// Rule codes drawn uniformly with replacement.
pub fn draw_rules(count: usize, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| rng.random_range(0..RULE_COUNT))
        .collect()
}

pub fn sample_label(count: usize, steps: usize, seed: u64) -> String {
    format!("ca:count={count},steps={steps},seed={seed}")
}

/// Samples `count` rules, evolves each for `steps` steps from a fresh
/// random initial row and tallies the non-overlapping tuples of every
/// binary run of every row.
pub fn sample_distribution(
    count: usize,
    steps: usize,
    tuple_lengths: &[usize],
    seed: u64,
) -> Result<BTreeMap<usize, TupleDistribution>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    distribution_for_rules(
        &draw_rules(count, seed),
        steps,
        tuple_lengths,
        seed,
        &sample_label(count, steps, seed),
    )
}

/// Cumulative black-minus-white totals of an elementary rule-90 evolution on
/// a cyclic row of `width` cells. Value `t` (0-based) sums rows `0..=t`, so
/// the result has `steps` values.
pub fn rule90_price_series(width: usize, steps: usize, seed: u64) -> Result<Vec<i64>> {
    if width == 0 {
        return Err(Error::InvalidArgument("width must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init: Vec<u8> = (0..width).map(|_| rng.random_range(0..2u8)).collect();
    Ok(rule90_from_row(init, steps))
}

pub fn rule90_from_row(init: Vec<u8>, steps: usize) -> Vec<i64> {
    let width = init.len();
    let mut row = init;
    let mut acc = 0i64;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        acc += row
            .iter()
            .map(|&c| if c == 1 { 1 } else { -1 })
            .sum::<i64>();
        out.push(acc);
        row = (0..width)
            .map(|i| row[(i + width - 1) % width] ^ row[(i + 1) % width])
            .collect();
    }
    out
}

/// Writes the evolution as a plain PGM image, rows padded to the final width
/// and centered. Color `c` maps to gray `255 - 85c`.
pub fn write_pgm(evo: &CAEvolution, out: &mut impl Write) -> std::io::Result<()> {
    let width = evo.rows.last().map_or(0, |r| r.len());
    writeln!(out, "P2\n{} {}\n255", width, evo.rows.len())?;
    for row in &evo.rows {
        let pad = (width - row.len()) / 2;
        let line: Vec<String> = (0..width)
            .map(|i| {
                let c = if i >= pad && i < pad + row.len() {
                    row[i - pad]
                } else {
                    0
                };
                (255 - 85 * c as u32).to_string()
            })
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_space_and_digits() {
        assert_eq!(RULE_COUNT, 1_048_576);
        assert!(TotalisticRule::new(RULE_COUNT).is_err());
        let r = TotalisticRule::new(0b11_10_01).unwrap();
        assert_eq!(&r.digits()[..4], &[1, 2, 3, 0]);
        assert_eq!(TotalisticRule::from_digits(r.digits()).unwrap(), r);
    }

    #[test]
    fn random_initial_contract() {
        assert_eq!(random_initial(9), random_initial(9));
        for seed in 0..500 {
            let row = random_initial(seed);
            assert!((10..=20).contains(&row.len()));
            assert!(row.iter().all(|&c| c <= 1));
        }
    }

    #[test]
    fn zero_rule_clears() {
        let evo = evolve(TotalisticRule::new(0).unwrap(), &[1, 0, 1, 1], 5).unwrap();
        assert_eq!(evo.rows[0], vec![1, 0, 1, 1]);
        for (t, row) in evo.rows.iter().enumerate().skip(1) {
            assert_eq!(row.len(), 4 + 2 * t);
            assert!(row.iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn quiescent_background_stays_zero() {
        let rule = TotalisticRule::from_digits([0, 3, 2, 1, 0, 3, 2, 1, 0, 3]).unwrap();
        let evo = evolve(rule, &[0; 5], 4).unwrap();
        assert!(evo.rows.iter().flatten().all(|&c| c == 0));
    }

    #[test]
    fn hand_traced_two_steps() {
        // digits by sum: 0->0, 1->1, 2->2, 3->3, 4->0, 5->1, 6..9 -> 0
        let rule = TotalisticRule::from_digits([0, 1, 2, 3, 0, 1, 0, 0, 0, 0]).unwrap();
        let evo = evolve(rule, &[1, 0, 1], 2).unwrap();
        // padded row 0: 0 [1 0 1] 0 -> sums 1,1,2,1,1
        assert_eq!(evo.rows[1], vec![1, 1, 2, 1, 1]);
        // padded row 1: 0 [1 1 2 1 1] 0 -> sums 1,2,4,4,4,2,1
        assert_eq!(evo.rows[2], vec![1, 2, 0, 0, 0, 2, 1]);
    }

    #[test]
    fn runs_skip_colors_two_and_three() {
        let row = [0, 1, 2, 1, 1, 0, 3, 3, 0];
        let runs: Vec<&[u8]> = binary_runs(&row).collect();
        assert_eq!(runs, vec![&[0, 1][..], &[1, 1, 0][..], &[0][..]]);
    }

    #[test]
    fn zero_rule_sample_tuples() {
        let d = distribution_for_rules(&[0], 10, &[3], 1, "z").unwrap();
        let d = &d[&3];
        let init = random_initial(1);
        let initial_blocks = (init.len() / 3) as u64;
        let zero_blocks: u64 = (1..=10).map(|t| ((init.len() + 2 * t) / 3) as u64).sum();
        assert_eq!(d.total(), initial_blocks + zero_blocks);
        assert!(d.count("000") >= zero_blocks);
    }

    #[test]
    fn sample_is_deterministic() {
        let a = sample_distribution(20, 30, &[3, 4], 11).unwrap();
        let b = sample_distribution(20, 30, &[3, 4], 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[&3].source_label(), "ca:count=20,steps=30,seed=11");
        assert!(sample_distribution(0, 30, &[3], 11).is_err());
    }

    #[test]
    fn rule90_examples() {
        let v = rule90_from_row(vec![0; 7], 5);
        assert_eq!(v, vec![-7, -14, -21, -28, -35]);
        assert_eq!(rule90_price_series(9, 13, 3).unwrap().len(), 13);
        // single seed cell on a width-5 ring
        let v = rule90_from_row(vec![0, 0, 1, 0, 0], 3);
        // rows: 00100 (-3), 01010 (-1), 10001 (-1)
        assert_eq!(v, vec![-3, -4, -5]);
    }

    #[test]
    fn pgm_header() {
        let evo = evolve(TotalisticRule::new(5).unwrap(), &[1], 2).unwrap();
        let mut buf = Vec::new();
        write_pgm(&evo, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("P2\n5 3\n255\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
