//! Price series, lagged-return features and the train/test dataset.
//!
//! Each sample predicts the asset's close-to-close return on day `t` from
//! five returns observed on the previous common trading day: the asset
//! itself, the dividend index, the S&P 500, the consumption index and the
//! financial index. Dates are aligned by intersecting the return dates of
//! all five series.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mlp::Example;
use crate::rng::SplitMix64;

pub const N_FEATURES: usize = 5;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "asset_return_d1",
    "idiv_return_d1",
    "sp500_return_d1",
    "icon_return_d1",
    "ifnc_return_d1",
];

/// Config keys / file stems of the five input series, in feature order.
pub const SERIES_KEYS: [&str; N_FEATURES] = ["asset", "idiv", "sp500", "icon", "ifnc"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{name}: need at least 2 prices to compute returns, got {got}")]
    TooFewPoints { name: String, got: usize },
    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow { path: String, line: u64, reason: String },
    #[error("{name}: dates not strictly increasing at {date}")]
    NonMonotoneDates { name: String, date: NaiveDate },
    #[error("{name}: non-positive close {close} on {date}")]
    NonPositiveClose { name: String, date: NaiveDate, close: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("feature {0} has zero variance on the training set")]
    DegenerateFeature(&'static str),
    #[error("invalid date range: {0}")]
    InvalidRange(String),
    #[error("synthetic series need at least 30 days, got {0}")]
    TooFewDays(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Daily closes for one instrument, strictly increasing in date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub name: String,
    points: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    pub fn new(name: impl Into<String>, points: Vec<(NaiveDate, f64)>) -> Result<Self, DataError> {
        let name = name.into();
        for (i, &(date, close)) in points.iter().enumerate() {
            if !(close > 0.0 && close.is_finite()) {
                return Err(DataError::NonPositiveClose { name, date, close });
            }
            if i > 0 && points[i - 1].0 >= date {
                return Err(DataError::NonMonotoneDates { name, date });
            }
        }
        Ok(Self { name, points })
    }

    /// Sorts by date first; duplicate dates are still rejected.
    pub fn from_unsorted(name: impl Into<String>, mut points: Vec<(NaiveDate, f64)>) -> Result<Self, DataError> {
        points.sort_by_key(|p| p.0);
        Self::new(name, points)
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV text in the `date,close` schema.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,close\n");
        for (d, c) in &self.points {
            out.push_str(&format!("{},{:?}\n", d.format("%Y-%m-%d"), c));
        }
        out
    }
}

/// `(P_t - P_{t-1}) / P_{t-1}` for each consecutive pair, dated at `t`.
pub fn compute_returns(series: &PriceSeries) -> Result<Vec<(NaiveDate, f64)>, DataError> {
    if series.len() < 2 {
        return Err(DataError::TooFewPoints {
            name: series.name.clone(),
            got: series.len(),
        });
    }
    Ok(series
        .points
        .windows(2)
        .map(|w| (w[1].0, (w[1].1 - w[0].1) / w[0].1))
        .collect())
}

/// Parses a `date,close` CSV file. LF and CRLF line endings are accepted.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PriceSeries, DataError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: display.clone(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    parse_csv(&name, &display, &text)
}

/// [`load_csv`] on in-memory text; `origin` is used in error messages.
pub fn parse_csv(name: &str, origin: &str, text: &str) -> Result<PriceSeries, DataError> {
    let malformed = |line: u64, reason: String| DataError::MalformedRow {
        path: origin.to_string(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "close"] {
        return Err(malformed(
            1,
            format!(
                "expected header `date,close`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(malformed(line, format!("expected 2 fields, got {}", record.len())));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .ok()
            .filter(|_| record[0].len() == 10)
            .ok_or_else(|| malformed(line, format!("bad date {:?}", &record[0])))?;
        let close: f64 = record[1]
            .parse()
            .ok()
            .filter(|c: &f64| c.is_finite())
            .ok_or_else(|| malformed(line, format!("bad close {:?}", &record[1])))?;
        points.push((date, close));
    }
    PriceSeries::new(name, points)
}

/// One aligned example: lagged returns `x` and the same-day asset return `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub date: NaiveDate,
    pub x: [f64; N_FEATURES],
    pub y: f64,
}

impl Example for Sample {
    fn features(&self) -> &[f64] {
        &self.x
    }
    fn target(&self) -> f64 {
        self.y
    }
}

/// Inclusive calendar interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, DataError> {
        if start > end {
            return Err(DataError::InvalidRange(format!("{start} > {end}")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn overlaps(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: [f64; N_FEATURES],
    pub std: [f64; N_FEATURES],
}

impl Scaler {
    pub fn fit(samples: &[Sample]) -> Result<Self, DataError> {
        if samples.is_empty() {
            return Err(DataError::InsufficientData("no samples to fit scaler".into()));
        }
        let n = samples.len() as f64;
        let mut mean = [0.0; N_FEATURES];
        let mut std = [0.0; N_FEATURES];
        for f in 0..N_FEATURES {
            mean[f] = samples.iter().map(|s| s.x[f]).sum::<f64>() / n;
            let var = samples.iter().map(|s| (s.x[f] - mean[f]).powi(2)).sum::<f64>() / n;
            std[f] = var.sqrt();
            // A constant non-zero column can leave rounding noise in the std.
            if std[f] == 0.0 || std[f] <= 1e-12 * mean[f].abs() {
                return Err(DataError::DegenerateFeature(FEATURE_NAMES[f]));
            }
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, sample: &Sample) -> Sample {
        let mut x = sample.x;
        for (f, v) in x.iter_mut().enumerate() {
            *v = (*v - self.mean[f]) / self.std[f];
        }
        Sample { x, ..sample.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub scaler: Scaler,
}

/// Asset plus the four index series, in feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketData {
    pub asset: PriceSeries,
    pub indices: [PriceSeries; 4],
}

impl MarketData {
    pub fn series(&self) -> [&PriceSeries; N_FEATURES] {
        [
            &self.asset,
            &self.indices[0],
            &self.indices[1],
            &self.indices[2],
            &self.indices[3],
        ]
    }
}

/// Unscaled aligned samples over every common date that has a previous
/// common date.
pub fn align_samples(market: &MarketData) -> Result<Vec<Sample>, DataError> {
    let mut per_series = Vec::with_capacity(N_FEATURES);
    for s in market.series() {
        if s.is_empty() {
            return Err(DataError::InsufficientData(format!("series {} is empty", s.name)));
        }
        per_series.push(compute_returns(s)?.into_iter().collect::<BTreeMap<_, _>>());
    }
    let common: Vec<NaiveDate> = per_series[0]
        .keys()
        .copied()
        .filter(|d| per_series[1..].iter().all(|m| m.contains_key(d)))
        .collect();
    Ok(common
        .windows(2)
        .map(|w| {
            let (prev, today) = (w[0], w[1]);
            let mut x = [0.0; N_FEATURES];
            for (f, m) in per_series.iter().enumerate() {
                x[f] = m[&prev];
            }
            Sample {
                date: today,
                x,
                y: per_series[0][&today],
            }
        })
        .collect())
}

pub fn build_dataset(market: &MarketData, train_range: DateRange, test_range: DateRange) -> Result<Dataset, DataError> {
    if train_range.overlaps(&test_range) {
        return Err(DataError::InvalidRange(format!(
            "train {}..{} overlaps test {}..{}",
            train_range.start, train_range.end, test_range.start, test_range.end
        )));
    }
    let samples = align_samples(market)?;
    let (train_raw, test_raw): (Vec<_>, Vec<_>) = samples
        .into_iter()
        .filter(|s| train_range.contains(s.date) || test_range.contains(s.date))
        .partition(|s| train_range.contains(s.date));
    if train_raw.is_empty() || test_raw.is_empty() {
        return Err(DataError::InsufficientData(format!(
            "{} train and {} test samples after alignment",
            train_raw.len(),
            test_raw.len()
        )));
    }
    let scaler = Scaler::fit(&train_raw)?;
    Ok(Dataset {
        train: train_raw.iter().map(|s| scaler.apply(s)).collect(),
        test: test_raw.iter().map(|s| scaler.apply(s)).collect(),
        scaler,
    })
}

pub const SYNTH_START: (i32, u32, u32) = (2013, 1, 2);
pub const SYNTH_MIN_DAYS: usize = 30;
const INDEX_AR: f64 = 0.1;
const INDEX_SIGMA: f64 = 0.01;
const ASSET_IDIV_LOADING: f64 = 0.3;
const ASSET_SP500_LOADING: f64 = 0.2;
const ASSET_NOISE_SIGMA: f64 = 0.008;
const RETURN_CLAMP: f64 = 0.5;

/// `n` consecutive Monday-to-Friday dates starting at `start` (or the next
/// weekday after it).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

/// Seeded synthetic market with `n_days` closes per series.
///
/// Index returns follow AR(1) with coefficient 0.1 and innovation sd 0.01.
/// The asset return loads 0.3 on the previous day's dividend-index return
/// and 0.2 on the previous day's S&P return, plus noise with sd 0.008.
/// Returns are clamped to (-0.5, 0.5) and compounded from 100.
pub fn synthesize(seed: u64, n_days: usize) -> Result<MarketData, DataError> {
    if n_days < SYNTH_MIN_DAYS {
        return Err(DataError::TooFewDays(n_days));
    }
    let (y, m, d) = SYNTH_START;
    let dates = business_days(NaiveDate::from_ymd_opt(y, m, d).expect("valid start"), n_days);
    let mut rng = SplitMix64::new(seed);
    let clamp = |r: f64| r.clamp(-RETURN_CLAMP + 1e-9, RETURN_CLAMP - 1e-9);

    // returns[s][t] is series s's return into day t; day 0 has none.
    let mut returns = vec![vec![0.0f64; n_days]; N_FEATURES];
    for t in 1..n_days {
        for series in returns.iter_mut().skip(1) {
            let prev = if t > 1 { series[t - 1] } else { 0.0 };
            series[t] = clamp(INDEX_AR * prev + INDEX_SIGMA * rng.next_normal());
        }
        let (lag_idiv, lag_sp) = if t > 1 {
            (returns[1][t - 1], returns[2][t - 1])
        } else {
            (0.0, 0.0)
        };
        returns[0][t] =
            clamp(ASSET_IDIV_LOADING * lag_idiv + ASSET_SP500_LOADING * lag_sp + ASSET_NOISE_SIGMA * rng.next_normal());
    }

    let mut series = SERIES_KEYS.iter().zip(&returns).map(|(name, rets)| {
        let mut price = 100.0;
        let points = dates
            .iter()
            .zip(rets)
            .enumerate()
            .map(|(t, (&date, &r))| {
                if t > 0 {
                    price *= 1.0 + r;
                }
                (date, price)
            })
            .collect();
        PriceSeries::new(*name, points)
    });
    let mut next = || series.next().expect("five series").expect("positive prices");
    Ok(MarketData {
        asset: next(),
        indices: [next(), next(), next(), next()],
    })
}
