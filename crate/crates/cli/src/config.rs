//! Run configuration: one JSON document describing a complete sweep.

use std::path::{Path, PathBuf};

use archsearch::archspace::{count_total, SpaceBounds};
use archsearch::data::{DateRange, SYNTH_MIN_DAYS};
use archsearch::mlp::TrainConfig;
use archsearch::sweep::SweepConfig;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub bounds: BoundsConfig,
    pub data: DataSource,
    #[serde(default)]
    pub ranges: RangesConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default = "default_top_m")]
    pub top_m: usize,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub record_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub n_max: u32,
    pub k_max: u32,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        let b = SpaceBounds::default();
        Self {
            n_max: b.n_max,
            k_max: b.k_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(SyntheticSource),
    Csv(CsvSource),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub seed: u64,
    #[serde(default = "default_n_days")]
    pub n_days: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub asset: PathBuf,
    pub idiv: PathBuf,
    pub sp500: PathBuf,
    pub icon: PathBuf,
    pub ifnc: PathBuf,
}

impl CsvSource {
    pub fn paths(&self) -> [&Path; 5] {
        [&self.asset, &self.idiv, &self.sp500, &self.icon, &self.ifnc]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangesConfig {
    pub train: RangeConfig,
    pub test: RangeConfig,
}

impl Default for RangesConfig {
    fn default() -> Self {
        let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).expect("valid date");
        Self {
            train: RangeConfig {
                start: d(2013, 1, 1),
                end: d(2014, 12, 31),
            },
            test: RangeConfig {
                start: d(2015, 1, 1),
                end: d(2015, 12, 31),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            seed: 0,
        }
    }
}

fn default_top_m() -> usize {
    40
}
fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_n_days() -> usize {
    750
}
fn default_learning_rate() -> f64 {
    TrainConfig::default().learning_rate
}
fn default_epochs() -> usize {
    TrainConfig::default().epochs
}

/// Command-line values that replace the matching config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n_max: Option<u32>,
    pub k_max: Option<u32>,
    pub seed: Option<u64>,
    pub top_m: Option<usize>,
    pub parallelism: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    /// Reads, parses and validates a config file; relative paths inside it
    /// are resolved against the file's directory.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DataSource::Csv(c) = &mut self.data {
            for p in [&mut c.asset, &mut c.idiv, &mut c.sp500, &mut c.icon, &mut c.ifnc] {
                fix(p);
            }
        }
        fix(&mut self.output_dir);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.n_max {
            self.bounds.n_max = v;
        }
        if let Some(v) = o.k_max {
            self.bounds.k_max = v;
        }
        if let Some(v) = o.seed {
            self.training.seed = v;
        }
        if let Some(v) = o.top_m {
            self.top_m = v;
        }
        if let Some(v) = o.parallelism {
            self.parallelism = v;
        }
        if let Some(v) = &o.out {
            self.output_dir = v.clone();
        }
    }

    pub fn bounds(&self) -> Result<SpaceBounds, CliError> {
        SpaceBounds::new(self.bounds.n_max, self.bounds.k_max).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn train_range(&self) -> Result<DateRange, CliError> {
        DateRange::new(self.ranges.train.start, self.ranges.train.end).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn test_range(&self) -> Result<DateRange, CliError> {
        DateRange::new(self.ranges.test.start, self.ranges.test.end).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, CliError> {
        let train_cfg = TrainConfig::new(self.training.epochs, self.training.learning_rate, self.training.seed)
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(SweepConfig {
            bounds: self.bounds()?,
            train_cfg,
            top_m: self.top_m,
            parallelism: self.parallelism,
            record_timing: self.record_timing,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bounds = self.bounds()?;
        let total = count_total(bounds).map_err(|e| CliError::config(e.to_string()))?;
        if self.top_m == 0 || self.top_m as u64 > total {
            return Err(CliError::config(format!(
                "top_m must be in 1..={total}, got {}",
                self.top_m
            )));
        }
        if self.parallelism == 0 {
            return Err(CliError::config("parallelism must be >= 1"));
        }
        let (train, test) = (self.train_range()?, self.test_range()?);
        if train.overlaps(&test) {
            return Err(CliError::config("train and test ranges overlap"));
        }
        if let DataSource::Synthetic(s) = &self.data {
            if s.n_days < SYNTH_MIN_DAYS {
                return Err(CliError::config(format!(
                    "synthetic n_days must be >= {SYNTH_MIN_DAYS}, got {}",
                    s.n_days
                )));
            }
        }
        self.sweep_config()?
            .validate()
            .map_err(|e| CliError::config(e.to_string()))
    }

    /// Canonical JSON of the effective configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"data": {"synthetic": {"seed": 3}}}"#;

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.bounds, BoundsConfig { n_max: 6, k_max: 5 });
        assert_eq!(cfg.top_m, 40);
        assert_eq!(cfg.training.epochs, 300);
        assert_eq!(
            cfg.data,
            DataSource::Synthetic(SyntheticSource { seed: 3, n_days: 750 })
        );
        assert!(!cfg.record_timing);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            r#"{"data": {"synthetic": {"seed": 3}}, "bogus": 1}"#,
            r#"{"data": {"synthetic": {"seed": 3, "days": 9}}}"#,
            r#"{"data": {"synthetic": {"seed": 3}}, "bounds": {"n_max": 2, "k_max": 2, "x": 0}}"#,
            r#"{"data": {"parquet": {}}}"#,
        ] {
            let err = RunConfig::parse(text).unwrap_err();
            assert_eq!(err.code, "config", "{text}");
        }
    }

    #[test]
    fn semantic_validation() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.bounds.n_max = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.top_m = 9331;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.ranges.test.start = cfg.ranges.train.end;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.data = DataSource::Synthetic(SyntheticSource { seed: 0, n_days: 10 });
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.training.learning_rate = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn overrides_replace_keys() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        let before = cfg.hash();
        cfg.apply(&Overrides {
            n_max: Some(2),
            k_max: Some(2),
            seed: Some(9),
            top_m: Some(3),
            parallelism: Some(4),
            out: Some("elsewhere".into()),
        });
        assert_eq!(cfg.bounds, BoundsConfig { n_max: 2, k_max: 2 });
        assert_eq!(cfg.training.seed, 9);
        assert_eq!((cfg.top_m, cfg.parallelism), (3, 4));
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
        assert_ne!(cfg.hash(), before);
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let mut cfg = RunConfig::parse(
            r#"{"data": {"csv": {"asset": "a.csv", "idiv": "/abs/i.csv", "sp500": "s.csv", "icon": "c.csv", "ifnc": "f.csv"}}}"#,
        )
        .unwrap();
        cfg.resolve_paths(Path::new("/runs/x"));
        let DataSource::Csv(c) = &cfg.data else { panic!() };
        assert_eq!(c.asset, PathBuf::from("/runs/x/a.csv"));
        assert_eq!(c.idiv, PathBuf::from("/abs/i.csv"));
        assert_eq!(cfg.output_dir, PathBuf::from("/runs/x/out"));
    }

    #[test]
    fn shipped_schema_lists_every_key() {
        let schema: serde_json::Value = serde_json::from_str(include_str!("../../../config.schema.json")).unwrap();
        let cfg = serde_json::to_value(RunConfig::parse(MINIMAL).unwrap()).unwrap();
        let mut keys: Vec<_> = cfg.as_object().unwrap().keys().cloned().collect();
        let mut documented: Vec<_> = schema["properties"].as_object().unwrap().keys().cloned().collect();
        keys.sort();
        documented.sort();
        assert_eq!(keys, documented);
        assert_eq!(schema["additionalProperties"], serde_json::Value::Bool(false));
    }
}
