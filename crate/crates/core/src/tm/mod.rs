//! Small (n-state, 2-symbol) Turing machines run from a uniform tape.
//!
//! # Machine indexing
//!
//! A machine has `2 * n_states` table entries ordered by state, then by the
//! symbol read: `(1,0), (1,1), (2,0), (2,1), ...`. Each entry holds one of
//! `4 * n_states + 2` actions, numbered:
//!
//! * `a < 4n`: write `a % 2`, move left if `(a / 2) % 2 == 0` else right,
//!   go to state `a / 4 + 1`;
//! * `a == 4n`: write 0 and halt;
//! * `a == 4n + 1`: write 1 and halt.
//!
//! A machine index is the mixed-radix number whose digit `e` (least
//! significant first) is the action of entry `e`, so the space holds
//! `(4n + 2)^(2n)` machines indexed `0..size`.

mod checkpoint;
mod enumerate;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::TupleDistribution;
use crate::error::{Error, Result};

pub use checkpoint::{
    checkpoint_path, load_completed, merge_checkpoints, read_checkpoint, write_checkpoint,
    EnumerationOutput, ShardCheckpoint,
};
pub use enumerate::{
    busy_beaver_steps, enumerate_distribution, run_shard, EnumerationJob, Mode, Shard,
    EXHAUSTIVE_STATE_LIMIT, MAX_TUPLE_LENGTH,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    Left,
    Right,
}

/// One transition table entry. States are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Step { write: u8, dir: Move, next: usize },
    Halt { write: u8 },
}

impl Action {
    fn code(self, n_states: usize) -> u64 {
        match self {
            Action::Step { write, dir, next } => {
                let d = match dir {
                    Move::Left => 0,
                    Move::Right => 1,
                };
                ((next as u64 - 1) * 4) + d * 2 + write as u64
            }
            Action::Halt { write } => 4 * n_states as u64 + write as u64,
        }
    }

    fn from_code(code: u64, n_states: usize) -> Action {
        let n = n_states as u64;
        if code >= 4 * n {
            Action::Halt {
                write: (code - 4 * n) as u8,
            }
        } else {
            Action::Step {
                write: (code % 2) as u8,
                dir: if (code / 2).is_multiple_of(2) {
                    Move::Left
                } else {
                    Move::Right
                },
                next: (code / 4) as usize + 1,
            }
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Step { write, dir, next } => {
                let d = if *dir == Move::Left { 'L' } else { 'R' };
                write!(f, "{write}{d}{next}")
            }
            Action::Halt { write } => write!(f, "{write}H"),
        }
    }
}

/// Transition table of an (n-state, 2-symbol) machine; entry `2*(s-1)+r`
/// is the action for state `s` reading `r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TuringMachineSpec {
    n_states: usize,
    table: Vec<Action>,
}

impl TuringMachineSpec {
    pub fn new(n_states: usize, table: Vec<Action>) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::InvalidArgument(
                "a machine needs at least one state".into(),
            ));
        }
        if table.len() != 2 * n_states {
            return Err(Error::InvalidArgument(format!(
                "{n_states}-state table needs {} entries, got {}",
                2 * n_states,
                table.len()
            )));
        }
        for action in &table {
            let (write, next) = match *action {
                Action::Step { write, next, .. } => (write, next),
                Action::Halt { write } => (write, 1),
            };
            if write > 1 || next == 0 || next > n_states {
                return Err(Error::InvalidArgument(format!("invalid action {action:?}")));
            }
        }
        Ok(Self { n_states, table })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn table(&self) -> &[Action] {
        &self.table
    }

    /// Action for `state` (1-based) reading `symbol`.
    pub fn action(&self, state: usize, symbol: u8) -> Action {
        self.table[2 * (state - 1) + symbol as usize]
    }
}

impl fmt::Display for TuringMachineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.table.iter().enumerate() {
            if i > 0 {
                f.write_str(if i % 2 == 0 { " | " } else { " " })?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Number of machines with `n_states` states, if it fits in a `u64`.
pub fn space_size(n_states: usize) -> Option<u64> {
    let radix = 4u64.checked_mul(n_states as u64)?.checked_add(2)?;
    radix.checked_pow(u32::try_from(2 * n_states).ok()?)
}

fn checked_space(n_states: usize) -> Result<u64> {
    if n_states == 0 {
        return Err(Error::InvalidArgument(
            "a machine needs at least one state".into(),
        ));
    }
    space_size(n_states).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{n_states}-state space does not fit a 64-bit index"
        ))
    })
}

pub fn machine_from_index(idx: u64, n_states: usize) -> Result<TuringMachineSpec> {
    let size = checked_space(n_states)?;
    if idx >= size {
        return Err(Error::IndexOutOfRange {
            index: idx,
            n_states,
            size,
        });
    }
    let radix = 4 * n_states as u64 + 2;
    let mut rest = idx;
    let table = (0..2 * n_states)
        .map(|_| {
            let a = Action::from_code(rest % radix, n_states);
            rest /= radix;
            a
        })
        .collect();
    Ok(TuringMachineSpec { n_states, table })
}

pub fn index_from_machine(machine: &TuringMachineSpec) -> u64 {
    let radix = 4 * machine.n_states as u64 + 2;
    machine
        .table
        .iter()
        .rev()
        .fold(0u64, |acc, a| acc * radix + a.code(machine.n_states))
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub halted: bool,
    pub steps: u64,
    /// Tape cells between the leftmost and rightmost visited positions at
    /// halt time. Empty when the machine did not halt.
    pub output: Vec<u8>,
}

const HALT: u8 = u8::MAX;

/// Flattened table used by the simulator: `(write, move, next)` with
/// `next == HALT` for halting entries and `move` in `{0 = L, 1 = R}`.
#[derive(Debug, Clone, Default)]
pub(crate) struct CompiledMachine {
    entries: Vec<(u8, u8, u8)>,
}

impl CompiledMachine {
    pub(crate) fn from_spec(m: &TuringMachineSpec) -> Self {
        let mut c = CompiledMachine::default();
        c.entries.extend(m.table.iter().map(|a| match *a {
            Action::Step { write, dir, next } => {
                (write, u8::from(dir == Move::Right), (next - 1) as u8)
            }
            Action::Halt { write } => (write, 0, HALT),
        }));
        c
    }

    /// Decodes `idx` in place. The index must be in range.
    pub(crate) fn decode(&mut self, idx: u64, n_states: usize) {
        let n = n_states as u64;
        let radix = 4 * n + 2;
        let mut rest = idx;
        self.entries.clear();
        for _ in 0..2 * n_states {
            let code = rest % radix;
            rest /= radix;
            self.entries.push(if code >= 4 * n {
                ((code - 4 * n) as u8, 0, HALT)
            } else {
                ((code % 2) as u8, ((code / 2) % 2) as u8, (code / 4) as u8)
            });
        }
    }
}

/// Reusable simulator. The tape holds exactly the visited cells.
#[derive(Debug, Default)]
pub(crate) struct Simulator {
    tape: VecDeque<u8>,
}

impl Simulator {
    /// Runs from state 1 with the head on a tape filled with `background`.
    /// Returns `(halted, steps)`; the visited tape stays readable until the
    /// next run.
    pub(crate) fn run(&mut self, m: &CompiledMachine, background: u8, bound: u64) -> (bool, u64) {
        let tape = &mut self.tape;
        tape.clear();
        tape.push_back(background);
        let mut head = 0usize;
        let mut state = 0usize;
        let mut steps = 0u64;
        while steps < bound {
            let read = tape[head];
            let (write, dir, next) = m.entries[2 * state + read as usize];
            tape[head] = write;
            steps += 1;
            if next == HALT {
                return (true, steps);
            }
            if dir == 0 {
                if head == 0 {
                    tape.push_front(background);
                } else {
                    head -= 1;
                }
            } else {
                head += 1;
                if head == tape.len() {
                    tape.push_back(background);
                }
            }
            state = next as usize;
        }
        (false, steps)
    }

    pub(crate) fn output_len(&self) -> usize {
        self.tape.len()
    }

    /// Visited tape as an integer, leftmost cell most significant.
    pub(crate) fn output_code(&self) -> u64 {
        self.tape.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub(crate) fn output(&self) -> Vec<u8> {
        self.tape.iter().copied().collect()
    }
}

/// Runs `m` from state 1 on a tape uniformly filled with `background` for at
/// most `step_bound` transitions. A halting transition writes its symbol and
/// counts as a step.
pub fn run_machine(m: &TuringMachineSpec, background: u8, step_bound: u64) -> Result<RunResult> {
    if step_bound == 0 {
        return Err(Error::InvalidArgument("step bound must be positive".into()));
    }
    if background > 1 {
        return Err(Error::InvalidArgument(format!(
            "background must be 0 or 1, got {background}"
        )));
    }
    let compiled = CompiledMachine::from_spec(m);
    let mut sim = Simulator::default();
    let (halted, steps) = sim.run(&compiled, background, step_bound);
    Ok(RunResult {
        halted,
        steps,
        output: if halted { sim.output() } else { Vec::new() },
    })
}

/// Counts tuples whose count differs from that of their complement, and
/// tuples whose count differs from that of their reversal.
pub fn symmetry_violations(dist: &TupleDistribution) -> (usize, usize) {
    let mut complement = 0;
    let mut reverse = 0;
    for (tuple, &count) in dist.counts() {
        let c: String = tuple
            .chars()
            .map(|b| if b == '0' { '1' } else { '0' })
            .collect();
        let r: String = tuple.chars().rev().collect();
        complement += usize::from(dist.count(&c) != count);
        reverse += usize::from(dist.count(&r) != count);
    }
    (complement, reverse)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(write: u8, dir: Move, next: usize) -> Action {
        Action::Step { write, dir, next }
    }

    #[test]
    fn space_sizes() {
        assert_eq!(space_size(1), Some(36));
        assert_eq!(space_size(2), Some(10_000));
        assert_eq!(space_size(3), Some(7_529_536));
        assert_eq!(space_size(4), Some(11_019_960_576));
        assert_eq!(space_size(7), None);
    }

    #[test]
    fn two_state_index_range() {
        assert!(machine_from_index(9_999, 2).is_ok());
        assert!(matches!(
            machine_from_index(10_000, 2),
            Err(Error::IndexOutOfRange { size: 10_000, .. })
        ));
    }

    #[test]
    fn index_zero_is_all_first_action() {
        let m = machine_from_index(0, 3).unwrap();
        assert!(m.table().iter().all(|&a| a == step(0, Move::Left, 1)));
        assert_eq!(index_from_machine(&m), 0);
    }

    #[test]
    fn action_codes_round_trip() {
        for n in 1..=4 {
            for code in 0..(4 * n as u64 + 2) {
                assert_eq!(Action::from_code(code, n).code(n), code);
            }
        }
        assert_eq!(Action::from_code(8, 2), Action::Halt { write: 0 });
        assert_eq!(Action::from_code(9, 2), Action::Halt { write: 1 });
        assert_eq!(Action::from_code(7, 2), step(1, Move::Right, 2));
    }

    #[test]
    fn immediate_halt() {
        for bg in 0..=1u8 {
            let mut table = vec![Action::Halt { write: 0 }; 2];
            table[bg as usize] = Action::Halt { write: 1 };
            let m = TuringMachineSpec::new(1, table).unwrap();
            let r = run_machine(&m, bg, 10).unwrap();
            assert_eq!(
                r,
                RunResult {
                    halted: true,
                    steps: 1,
                    output: vec![1]
                }
            );
        }
    }

    #[test]
    fn halt_free_machine_runs_to_bound() {
        let m = TuringMachineSpec::new(
            2,
            vec![
                step(1, Move::Right, 2),
                step(0, Move::Left, 1),
                step(1, Move::Left, 1),
                step(0, Move::Right, 2),
            ],
        )
        .unwrap();
        for bg in 0..=1 {
            let r = run_machine(&m, bg, 50).unwrap();
            assert!(!r.halted);
            assert_eq!(r.steps, 50);
            assert!(r.output.is_empty());
        }
    }

    #[test]
    fn hand_traced_two_state_machine() {
        // state 1 reads 0: write 1, move R, go to 2 -> head at 1
        // state 2 reads 0: write 0, halt           -> tape "10"
        let m = TuringMachineSpec::new(
            2,
            vec![
                step(1, Move::Right, 2),
                Action::Halt { write: 0 },
                Action::Halt { write: 0 },
                Action::Halt { write: 1 },
            ],
        )
        .unwrap();
        let r = run_machine(&m, 0, 6).unwrap();
        assert_eq!(
            r,
            RunResult {
                halted: true,
                steps: 2,
                output: vec![1, 0]
            }
        );
    }

    #[test]
    fn busy_beaver_champion_two_state() {
        // BB(2): A0=1RB A1=1LB B0=1LA B1=1RH, 6 steps, four 1s.
        let m = TuringMachineSpec::new(
            2,
            vec![
                step(1, Move::Right, 2),
                step(1, Move::Left, 2),
                step(1, Move::Left, 1),
                Action::Halt { write: 1 },
            ],
        )
        .unwrap();
        let r = run_machine(&m, 0, 6).unwrap();
        assert!(r.halted);
        assert_eq!(r.steps, 6);
        assert_eq!(r.output, vec![1, 1, 1, 1]);
        assert!(!run_machine(&m, 0, 5).unwrap().halted);
    }

    #[test]
    fn leftward_growth_keeps_order() {
        // write 1, move L, then halt writing 0: tape "01" with head at left
        let m = TuringMachineSpec::new(
            2,
            vec![
                step(1, Move::Left, 2),
                Action::Halt { write: 0 },
                Action::Halt { write: 0 },
                Action::Halt { write: 0 },
            ],
        )
        .unwrap();
        assert_eq!(run_machine(&m, 0, 6).unwrap().output, vec![0, 1]);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(TuringMachineSpec::new(1, vec![Action::Halt { write: 0 }]).is_err());
        assert!(
            TuringMachineSpec::new(1, vec![step(0, Move::Left, 2), Action::Halt { write: 0 }])
                .is_err()
        );
        assert!(TuringMachineSpec::new(
            1,
            vec![Action::Halt { write: 2 }, Action::Halt { write: 0 }]
        )
        .is_err());
    }

    #[test]
    fn display_is_compact() {
        let m = machine_from_index(0, 1).unwrap();
        assert_eq!(m.to_string(), "0L1 0L1");
    }
}
