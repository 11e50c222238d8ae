//! Algorithmic-market toolkit.
//!
//! Builds frequency distributions of fixed-length binary tuples from
//! encoded daily price directions and compares them, by Spearman rank
//! correlation, with distributions produced by small Turing machines,
//! 4-color totalistic cellular automata and stochastic baselines.

pub mod analysis;
pub mod baselines;
pub mod ca;
pub mod distributions;
pub mod error;
pub mod market;
pub mod tm;

pub use distributions::{
    build_distribution, complexity_estimate, merge_shards, ranked_view, spearman,
    CorrelationReport, RankedView, Support, TupleDistribution,
};
pub use error::{Error, Result};
pub use market::{encode_directions, ingest_csv, round_to_quantum, DirectionSeries, PriceSeries};

/// Crate version recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
