//! Regenerates the synthetic sample market CSVs in `data/sample/`.
//!
//! Six correlated geometric random walks on business days: a shared daily
//! shock plus an index-specific one. Closes are rounded to cents.

use std::path::PathBuf;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use algomarket::baselines::business_days;
use algomarket::PriceSeries;

struct Index {
    symbol: &'static str,
    start: NaiveDate,
    s0: f64,
    sigma: f64,
    mu: f64,
}

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sample");
    std::fs::create_dir_all(&dir).unwrap();
    let d = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).unwrap();
    let end = d(2010, 1, 29);
    let indices = [
        Index {
            symbol: "DJIA",
            start: d(1980, 1, 2),
            s0: 824.57,
            sigma: 0.011,
            mu: 0.00030,
        },
        Index {
            symbol: "SP500",
            start: d(1980, 1, 2),
            s0: 105.76,
            sigma: 0.011,
            mu: 0.00031,
        },
        Index {
            symbol: "NASDAQ",
            start: d(1980, 1, 2),
            s0: 148.17,
            sigma: 0.014,
            mu: 0.00035,
        },
        Index {
            symbol: "CAC40",
            start: d(1990, 1, 2),
            s0: 1900.0,
            sigma: 0.013,
            mu: 0.00012,
        },
        Index {
            symbol: "DAX",
            start: d(1990, 1, 2),
            s0: 1790.37,
            sigma: 0.014,
            mu: 0.00016,
        },
        Index {
            symbol: "FTSE350",
            start: d(1990, 1, 2),
            s0: 1100.0,
            sigma: 0.010,
            mu: 0.00012,
        },
    ];

    let calendar = business_days(d(1980, 1, 2), 8000);
    let calendar: Vec<NaiveDate> = calendar.into_iter().take_while(|&x| x <= end).collect();
    let mut common_rng = ChaCha8Rng::seed_from_u64(1980);
    let common: Vec<f64> = calendar
        .iter()
        .map(|_| common_rng.sample(StandardNormal))
        .collect();

    for (k, idx) in indices.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let mut price: f64 = idx.s0;
        let mut rows = Vec::new();
        for (date, shock) in calendar.iter().zip(&common) {
            if *date < idx.start {
                continue;
            }
            let own: f64 = rng.sample(StandardNormal);
            if !rows.is_empty() {
                let z = 0.6 * shock + 0.8 * own;
                price *= (idx.mu + idx.sigma * z).exp();
            }
            rows.push((*date, (price * 100.0).round() / 100.0));
        }
        let series = PriceSeries::new(idx.symbol, rows).unwrap();
        let path = dir.join(format!("{}.csv", idx.symbol));
        std::fs::write(&path, series.to_csv()).unwrap();
        println!("{} rows -> {}", series.len(), path.display());
    }
}
