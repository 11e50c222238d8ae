//! Daily closing-price ingestion and binary direction encoding.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distributions::{bits_to_string, parse_bits};
use crate::error::{Error, Result};

/// Quantum used for the rounded ("noise deleted") encoding.
pub const DEFAULT_QUANTUM: f64 = 0.4;

/// Dated daily closes for one market, sorted by date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    symbol: String,
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
}

impl PriceSeries {
    /// Sorts rows by date and validates them.
    pub fn new(symbol: impl Into<String>, rows: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let mut rows = rows;
        rows.sort_by_key(|&(d, _)| d);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDate(w[0].0));
        }
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a price series needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        if let Some((d, c)) = rows.iter().find(|(_, c)| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "close on {d} must be positive, got {c}"
            )));
        }
        let (dates, closes) = rows.into_iter().unzip();
        Ok(Self {
            symbol: symbol.into(),
            dates,
            closes,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    /// Day-to-day close differences.
    pub fn changes(&self) -> Vec<f64> {
        self.closes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `date,close` CSV with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,close\n");
        for (d, c) in self.dates.iter().zip(&self.closes) {
            out.push_str(&format!("{},{c}\n", d.format("%Y-%m-%d")));
        }
        out
    }
}

/// Parses `YYYY-MM-DD,<close>` rows. A first line whose first field is
/// `date` is treated as a header. Row numbers in errors are 1-based lines.
pub fn parse_csv(text: &str, symbol: impl Into<String>) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let date_field = record.get(0).unwrap_or_default();
        if row == 1 && date_field.eq_ignore_ascii_case("date") {
            continue;
        }
        if record.len() == 1 && date_field.is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                row,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(date_field, "%Y-%m-%d").map_err(|e| Error::Parse {
            row,
            message: format!("bad date {date_field:?}: {e}"),
        })?;
        let close_field = &record[1];
        let close: f64 = close_field.parse().map_err(|_| Error::Parse {
            row,
            message: format!("bad close {close_field:?}"),
        })?;
        if !(close.is_finite() && close > 0.0) {
            return Err(Error::Parse {
                row,
                message: format!("close must be positive, got {close_field}"),
            });
        }
        rows.push((date, close));
    }
    PriceSeries::new(symbol, rows)
}

/// Reads a price CSV; the symbol is the file stem.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let symbol = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&text, symbol)
}

/// Rounds `x` to the nearest multiple of `q`, halves away from zero.
/// `q == 0` returns `x`.
///
/// Ratios within 1e-9 (relative) of a half-quantum count as exact halves:
/// `-0.6 / 0.4` evaluates to `-1.4999999999999998` in binary floating point
/// and must still round to `-2`.
pub fn round_to_quantum(x: f64, q: f64) -> f64 {
    if q == 0.0 {
        return x;
    }
    let ratio = x / q;
    let magnitude = ratio.abs();
    let floor = magnitude.floor();
    let frac = magnitude - floor;
    let tolerance = 1e-9 * magnitude.max(1.0);
    let steps = if (frac - 0.5).abs() <= tolerance {
        floor + 1.0
    } else {
        magnitude.round()
    };
    q * steps.copysign(ratio)
}

/// Binary direction sequence: `1` for a rise, `0` for a fall or no change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSeries {
    pub symbol: String,
    pub quantum: f64,
    #[serde(serialize_with = "ser_bits", deserialize_with = "de_bits")]
    pub bits: Vec<u8>,
}

fn ser_bits<S: Serializer>(bits: &[u8], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&bits_to_string(bits))
}

fn de_bits<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<u8>, D::Error> {
    let text = String::deserialize(d)?;
    parse_bits(&text).map_err(serde::de::Error::custom)
}

/// `bit = 1` iff the difference of consecutive closes, rounded to the
/// quantum, is strictly positive.
pub fn encode_directions(prices: &PriceSeries, q: f64) -> Result<DirectionSeries> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "quantum must be a non-negative number, got {q}"
        )));
    }
    Ok(DirectionSeries {
        symbol: prices.symbol.clone(),
        quantum: q,
        bits: encode_closes(&prices.closes, q),
    })
}

/// Direction bits for a raw close sequence.
pub fn encode_closes(closes: &[f64], q: f64) -> Vec<u8> {
    closes
        .windows(2)
        .map(|w| u8::from(round_to_quantum(w[1] - w[0], q) > 0.0))
        .collect()
}

/// Restricts a series to `[start, end]` (inclusive).
pub fn align_windows(
    series: &PriceSeries,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<PriceSeries> {
    if start >= end {
        return Err(Error::InvalidArgument(format!(
            "window start {start} must precede end {end}"
        )));
    }
    let lo = series.dates.partition_point(|d| *d < start);
    let hi = series.dates.partition_point(|d| *d <= end);
    if hi - lo < 2 {
        return Err(Error::InsufficientData(format!(
            "{}: {} points in window {start}..{end}",
            series.symbol,
            hi - lo
        )));
    }
    Ok(PriceSeries {
        symbol: series.symbol.clone(),
        dates: series.dates[lo..hi].to_vec(),
        closes: series.closes[lo..hi].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn series(closes: &[f64]) -> PriceSeries {
        let start = date("2000-01-03");
        let rows = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| (start + chrono::Days::new(i as u64), c))
            .collect();
        PriceSeries::new("T", rows).unwrap()
    }

    #[test]
    fn parse_basic_and_header() {
        let s = parse_csv("2000-01-03,100.5\n2000-01-04,101.0", "X").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.closes(), &[100.5, 101.0]);
        let h = parse_csv("date,close\n2000-01-03,100.5\n2000-01-04,101.0\n", "X").unwrap();
        assert_eq!(h, s);
    }

    #[test]
    fn parse_sorts_shuffled_rows() {
        let sorted = parse_csv("2000-01-03,1\n2000-01-04,2\n2000-01-05,3\n", "X").unwrap();
        let shuffled = parse_csv("2000-01-05,3\n2000-01-03,1\n2000-01-04,2\n", "X").unwrap();
        assert_eq!(sorted, shuffled);
    }

    #[test]
    fn parse_errors() {
        match parse_csv("2000-01-03,abc\n2000-01-04,1\n", "X") {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 1),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_csv("2000-01-03,1\n2000-01-03,2\n", "X"),
            Err(Error::DuplicateDate(_))
        ));
        assert!(matches!(
            parse_csv("2000-01-03,1\n", "X"),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            parse_csv("2000-01-03,1\n2000-01-04,-2\n", "X"),
            Err(Error::Parse { row: 2, .. })
        ));
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_to_quantum(0.1, 0.4), 0.0);
        assert!((round_to_quantum(-0.6, 0.4) + 0.8).abs() < 1e-12);
        assert!((round_to_quantum(0.6, 0.4) - 0.8).abs() < 1e-12);
        assert_eq!(round_to_quantum(1.0, 0.0), 1.0);
        assert!((round_to_quantum(0.19, 0.4)).abs() < 1e-12);
        assert!((round_to_quantum(0.21, 0.4) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn encoding_examples() {
        let bits = encode_directions(&series(&[100.0, 101.0, 102.0]), 0.4)
            .unwrap()
            .bits;
        assert_eq!(bits, vec![1, 1]);
        let bits = encode_directions(&series(&[100.0, 100.1, 99.5]), 0.4)
            .unwrap()
            .bits;
        assert_eq!(bits, vec![0, 0]);
        let bits = encode_directions(&series(&[100.0, 100.0]), 0.0)
            .unwrap()
            .bits;
        assert_eq!(bits, vec![0]);
        assert!(encode_directions(&series(&[1.0, 2.0]), -1.0).is_err());
    }

    #[test]
    fn direction_json_format() {
        let d = DirectionSeries {
            symbol: "DJIA".into(),
            quantum: 0.4,
            bits: vec![0, 1, 1, 0],
        };
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"{"symbol":"DJIA","quantum":0.4,"bits":"0110"}"#);
        assert_eq!(serde_json::from_str::<DirectionSeries>(&json).unwrap(), d);
    }

    #[test]
    fn window_examples() {
        let s = series(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let all = align_windows(&s, date("1999-01-01"), date("2001-01-01")).unwrap();
        assert_eq!(all, s);
        let part = align_windows(&s, date("2000-01-04"), date("2000-01-05")).unwrap();
        assert_eq!(part.closes(), &[2.0, 3.0]);
        assert!(align_windows(&s, date("2000-01-04"), date("2000-01-04")).is_err());
        assert!(matches!(
            align_windows(&s, date("2000-01-07"), date("2000-02-01")),
            Err(Error::InsufficientData(_))
        ));
        assert!(align_windows(&s, date("1990-01-01"), date("1991-01-01")).is_err());
    }
}
