//! Stochastic reference series and normal-tail isolation.

use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::market::PriceSeries;

/// Independent fair bits.
pub fn random_direction_series(length: usize, seed: u64) -> Result<Vec<u8>> {
    if length == 0 {
        return Err(Error::InvalidArgument("length must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..length)
        .map(|_| u8::from(rng.random::<bool>()))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub s0: f64,
    pub sigma: f64,
    pub mu: f64,
    pub steps: usize,
    pub seed: u64,
}

impl GbmParams {
    fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "s0 must be positive, got {}",
                self.s0
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be non-negative, got {}",
                self.sigma
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be positive".into()));
        }
        Ok(())
    }

    fn normals(&self) -> impl Iterator<Item = f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.steps).map(move |_| rng.sample::<f64, _>(StandardNormal))
    }
}

/// `S_{t+1} = S_t * exp(mu + sigma * Z_t)`; returns `steps + 1` values
/// starting at `s0`.
pub fn gbm_series(params: &GbmParams) -> Result<Vec<f64>> {
    params.validate()?;
    let mut out = Vec::with_capacity(params.steps + 1);
    let mut log_price = params.s0.ln();
    out.push(params.s0);
    for z in params.normals() {
        log_price += params.mu + params.sigma * z;
        out.push(log_price.exp());
    }
    Ok(out)
}

/// Additive (Bachelier) walk `S_{t+1} = S_t + sigma * Z_t`, same draws as
/// [`gbm_series`] for the same seed. Values may go negative.
pub fn additive_series(params: &GbmParams) -> Result<Vec<f64>> {
    params.validate()?;
    let mut out = Vec::with_capacity(params.steps + 1);
    let mut price = params.s0;
    out.push(price);
    for z in params.normals() {
        price += params.sigma * z;
        out.push(price);
    }
    Ok(out)
}

/// Consecutive weekdays starting at `start` (or the next weekday after it).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut d = start;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// Dates a GBM path on business days starting at `start`.
pub fn gbm_price_series(symbol: &str, start: NaiveDate, params: &GbmParams) -> Result<PriceSeries> {
    let closes = gbm_series(params)?;
    let dates = business_days(start, closes.len());
    PriceSeries::new(symbol, dates.into_iter().zip(closes).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBin {
    pub center: f64,
    pub observed: u64,
    pub expected: f64,
    pub excess: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub fitted_mean: f64,
    pub fitted_std: f64,
    pub bin_width: f64,
    pub sample_size: usize,
    /// Every occupied bin, ascending by center.
    pub bins: Vec<TailBin>,
}

impl TailReport {
    /// Bins where observations exceed the fitted normal.
    pub fn tail_bins(&self) -> impl Iterator<Item = &TailBin> {
        self.bins.iter().filter(|b| b.excess > 0)
    }

    /// CSV `bin_center,observed,expected,excess` for the tail bins.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,observed,expected,excess\n");
        for b in self.tail_bins() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                b.center, b.observed, b.expected, b.excess
            );
        }
        out
    }
}

/// Fits a normal by sample mean and (population) standard deviation, bins
/// the changes on a grid of width `bin_width` centered on multiples of it,
/// and reports per bin the observations beyond the rounded normal
/// expectation `round(N * P(bin))`.
pub fn isolate_tail(changes: &[f64], bin_width: f64) -> Result<TailReport> {
    if changes.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "tail isolation needs at least 2 changes, got {}",
            changes.len()
        )));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let n = changes.len() as f64;
    let mean = changes.iter().sum::<f64>() / n;
    let var = changes.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std.is_nan() || std <= 0.0 || std.is_infinite() {
        return Err(Error::InvalidArgument("changes have zero variance".into()));
    }
    let normal = Normal::new(mean, std).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut counts = std::collections::BTreeMap::<i64, u64>::new();
    for &x in changes {
        *counts.entry((x / bin_width).round() as i64).or_insert(0) += 1;
    }
    let bins = counts
        .into_iter()
        .map(|(k, observed)| {
            let center = k as f64 * bin_width;
            let half = bin_width / 2.0;
            let p = normal.cdf(center + half) - normal.cdf(center - half);
            let expected = n * p;
            let excess = observed.saturating_sub(expected.round() as u64);
            TailBin {
                center,
                observed,
                expected,
                excess,
            }
        })
        .collect();
    Ok(TailReport {
        fitted_mean: mean,
        fitted_std: std,
        bin_width,
        sample_size: changes.len(),
        bins,
    })
}
