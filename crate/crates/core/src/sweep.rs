//! Exhaustive training sweep over an architecture space, ranking, and the
//! sweep CSV format consumed by the analysis stage.
//!
//! Each architecture is an independent work item seeded from its own
//! label, so the output does not depend on scheduling or on which other
//! architectures are in the sweep.

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archspace::{self, ArchError, ArchFeatures, ArchSpec, SpaceBounds};
use crate::data::{Dataset, N_FEATURES};
use crate::mlp::{EvalMetrics, MlpError, Network, TrainConfig};
use crate::rng::{fnv1a64, splitmix64};

pub const SWEEP_CSV_HEADER: [&str; 13] = [
    "rank",
    "label",
    "n_layers",
    "n_neurons",
    "mean_neurons",
    "std_neurons",
    "n_inflections",
    "mae_pct",
    "sse",
    "rel_assert_pct",
    "train_millis",
    "arch_seed",
    "diverged",
];

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("every record diverged; nothing to rank")]
    AllDiverged,
    #[error("top_m = {m} but only {available} ranked records")]
    TopMTooLarge { m: usize, available: usize },
    #[error("sweep csv row {row}: {reason}")]
    MalformedCsv { row: u64, reason: String },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub bounds: SpaceBounds,
    pub train_cfg: TrainConfig,
    pub top_m: usize,
    pub parallelism: usize,
    /// Wall-clock training time is only recorded when set; otherwise
    /// `train_millis` is 0 and sweep output is byte-reproducible.
    pub record_timing: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        let total = archspace::count_total(self.bounds)?;
        self.train_cfg.validate()?;
        if self.top_m == 0 || self.top_m as u64 > total {
            return Err(SweepError::InvalidConfig(format!(
                "top_m must be in 1..={total}, got {}",
                self.top_m
            )));
        }
        if self.parallelism == 0 {
            return Err(SweepError::InvalidConfig("parallelism must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            bounds: SpaceBounds::default(),
            train_cfg: TrainConfig::default(),
            top_m: 40,
            parallelism: 1,
            record_timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub label: String,
    pub features: ArchFeatures,
    /// `None` when training diverged.
    pub metrics: Option<EvalMetrics>,
    pub train_millis: u64,
    pub arch_seed: u64,
}

impl SweepRecord {
    pub fn diverged(&self) -> bool {
        self.metrics.is_none()
    }
}

/// `splitmix64(global_seed XOR fnv1a64(label))`.
pub fn arch_seed(global_seed: u64, label: &str) -> u64 {
    splitmix64(global_seed ^ fnv1a64(label.as_bytes()))
}

/// Trains and evaluates one architecture.
pub fn train_one(
    spec: &ArchSpec,
    ds: &Dataset,
    cfg: &TrainConfig,
    record_timing: bool,
) -> Result<SweepRecord, MlpError> {
    let label = spec.label();
    let seed = arch_seed(cfg.seed, &label);
    let start = Instant::now();
    let net = Network::init(spec, N_FEATURES, seed)?;
    let metrics = match net.train(&ds.train, cfg) {
        Ok((trained, _)) => {
            let m = trained.evaluate(&ds.test)?;
            (m.mae_pct.is_finite() && m.sse.is_finite()).then_some(m)
        }
        Err(MlpError::DivergedTraining { .. }) => None,
        Err(e) => return Err(e),
    };
    let train_millis = if record_timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok(SweepRecord {
        label,
        features: spec.features(),
        metrics,
        train_millis,
        arch_seed: seed,
    })
}

/// Error of the constant predictor that always returns the mean training
/// target.
pub fn mean_baseline(ds: &Dataset) -> Result<EvalMetrics, SweepError> {
    if ds.train.is_empty() || ds.test.is_empty() {
        return Err(SweepError::InsufficientData("empty train or test split".into()));
    }
    let mean = ds.train.iter().map(|s| s.y).sum::<f64>() / ds.train.len() as f64;
    let (abs, sse) = ds.test.iter().fold((0.0, 0.0), |(a, q), s| {
        let r = mean - s.y;
        (a + r.abs(), q + r * r)
    });
    Ok(EvalMetrics {
        mae_pct: abs / ds.test.len() as f64 * 100.0,
        sse,
    })
}

/// One record per enumerated architecture, in enumeration order.
pub fn run_sweep(cfg: &SweepConfig, ds: &Dataset) -> Result<Vec<SweepRecord>, SweepError> {
    cfg.validate()?;
    if ds.train.is_empty() || ds.test.is_empty() {
        return Err(SweepError::InsufficientData(format!(
            "{} train / {} test samples",
            ds.train.len(),
            ds.test.len()
        )));
    }
    let specs = archspace::enumerate(cfg.bounds)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| SweepError::InvalidConfig(format!("thread pool: {e}")))?;
    // Indexed collect keeps enumeration order regardless of completion order.
    let records = pool.install(|| {
        use rayon::prelude::*;
        specs
            .par_iter()
            .map(|spec| train_one(spec, ds, &cfg.train_cfg, cfg.record_timing))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub record: SweepRecord,
    /// `(err / err_min - 1) * 100`.
    pub relative_assertiveness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedReport {
    /// Non-diverged records, best first.
    pub entries: Vec<RankedEntry>,
    /// Diverged records in their input order.
    pub diverged: Vec<SweepRecord>,
}

impl RankedReport {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> &RankedEntry {
        &self.entries[0]
    }
}

/// Sorts by `mae_pct` ascending, breaking ties by label.
pub fn rank(records: Vec<SweepRecord>) -> Result<RankedReport, SweepError> {
    let (mut ok, diverged): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| !r.diverged());
    if ok.is_empty() {
        return Err(SweepError::AllDiverged);
    }
    let mae = |r: &SweepRecord| r.metrics.expect("partitioned").mae_pct;
    ok.sort_by(|a, b| mae(a).total_cmp(&mae(b)).then_with(|| a.label.cmp(&b.label)));
    let best = mae(&ok[0]);
    let entries = ok
        .into_iter()
        .enumerate()
        .map(|(i, record)| {
            let err = mae(&record);
            // A perfect best model makes every non-perfect one infinitely worse.
            let relative_assertiveness = if err == best { 0.0 } else { (err / best - 1.0) * 100.0 };
            RankedEntry {
                rank: i + 1,
                record,
                relative_assertiveness,
            }
        })
        .collect();
    Ok(RankedReport { entries, diverged })
}

/// The best `m` records of the ranking.
pub fn top_m(report: &RankedReport, m: usize) -> Result<Vec<SweepRecord>, SweepError> {
    if m == 0 || m > report.len() {
        return Err(SweepError::TopMTooLarge {
            m,
            available: report.len(),
        });
    }
    Ok(report.entries[..m].iter().map(|e| e.record.clone()).collect())
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    format!("{v:?}")
}

/// Writes the ranked records and then the diverged ones.
pub fn write_sweep_csv<W: Write>(report: &RankedReport, out: W) -> Result<(), SweepError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SWEEP_CSV_HEADER).map_err(csv_io)?;
    let rows = report
        .entries
        .iter()
        .map(|e| (Some(e.rank), &e.record, Some(e.relative_assertiveness)))
        .chain(report.diverged.iter().map(|r| (None, r, None)));
    for (rank, r, rel) in rows {
        let f = &r.features;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        w.write_record([
            rank.map(|k| k.to_string()).unwrap_or_default(),
            r.label.clone(),
            f.n_layers.to_string(),
            f.n_neurons.to_string(),
            fmt_f64(f.mean_neurons),
            fmt_f64(f.std_neurons),
            f.n_inflections.to_string(),
            opt(r.metrics.map(|m| m.mae_pct)),
            opt(r.metrics.map(|m| m.sse)),
            opt(rel),
            r.train_millis.to_string(),
            r.arch_seed.to_string(),
            r.diverged().to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_csv_string(report: &RankedReport) -> Result<String, SweepError> {
    let mut buf = Vec::new();
    write_sweep_csv(report, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn csv_io(e: csv::Error) -> SweepError {
    SweepError::Io(std::io::Error::other(e))
}

/// Parses a sweep CSV back into records (input order). Row numbers in
/// errors count the header as row 1. Feature columns are recomputed
/// from the label and must agree with the file.
pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>, SweepError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(|e| SweepError::MalformedCsv {
        row: 1,
        reason: e.to_string(),
    })?;
    if header.iter().ne(SWEEP_CSV_HEADER) {
        return Err(SweepError::MalformedCsv {
            row: 1,
            reason: format!("expected header `{}`", SWEEP_CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i as u64 + 2;
        let bad = |reason: String| SweepError::MalformedCsv { row, reason };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |name: &str| -> &str {
            let idx = SWEEP_CSV_HEADER.iter().position(|h| *h == name).expect("known column");
            rec.get(idx).unwrap_or("")
        };
        let spec: ArchSpec = field("label").parse().map_err(|e: ArchError| bad(e.to_string()))?;
        let features = spec.features();
        let parse_u = |name: &str| {
            field(name)
                .parse::<u64>()
                .map_err(|_| bad(format!("bad {name} {:?}", field(name))))
        };
        let parse_f = |name: &str| {
            field(name)
                .parse::<f64>()
                .map_err(|_| bad(format!("bad {name} {:?}", field(name))))
        };
        let consistent = parse_u("n_layers")? == u64::from(features.n_layers)
            && parse_u("n_neurons")? == u64::from(features.n_neurons)
            && parse_u("n_inflections")? == u64::from(features.n_inflections)
            && (parse_f("mean_neurons")? - features.mean_neurons).abs() < 1e-9
            && (parse_f("std_neurons")? - features.std_neurons).abs() < 1e-9;
        if !consistent {
            return Err(bad(format!("feature columns disagree with label {spec}")));
        }
        let diverged = match field("diverged") {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("bad diverged flag {other:?}"))),
        };
        let metrics = if diverged {
            None
        } else {
            let m = EvalMetrics {
                mae_pct: parse_f("mae_pct")?,
                sse: parse_f("sse")?,
            };
            if !(m.mae_pct >= 0.0 && m.sse >= 0.0 && m.mae_pct.is_finite() && m.sse.is_finite()) {
                return Err(bad("metrics must be finite and non-negative".into()));
            }
            Some(m)
        };
        out.push(SweepRecord {
            label: spec.label(),
            features,
            metrics,
            train_millis: parse_u("train_millis")?,
            arch_seed: parse_u("arch_seed")?,
        });
    }
    Ok(out)
}
