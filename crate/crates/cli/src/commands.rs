use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use archsearch::analysis;
use archsearch::archspace::{self, SpaceBounds};
use archsearch::data::{self, MarketData, SERIES_KEYS};
use archsearch::sweep;
use serde::Serialize;

use crate::config::{DataSource, Overrides, RunConfig};
use crate::error::CliError;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path.display(), e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

/// Ignores a closed downstream pipe, as in `enumerate | head`.
fn stdout_result(r: io::Result<()>) -> Result<(), CliError> {
    match r {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(|e| CliError::io("stdout", e)),
    }
}

pub fn enumerate(n_max: u32, k_max: u32) -> Result<(), CliError> {
    let bounds = SpaceBounds::new(n_max, k_max).map_err(|e| CliError::usage(e.to_string()))?;
    let total = archspace::count_total(bounds).map_err(|e| CliError::usage(e.to_string()))?;
    let specs = archspace::iter(bounds).map_err(|e| CliError::usage(e.to_string()))?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    stdout_result((|| {
        for spec in specs {
            writeln!(out, "{spec}")?;
        }
        writeln!(out, "total: {total}")?;
        out.flush()
    })())
}

pub fn synth_data(seed: u64, n_days: usize, out: &Path) -> Result<(), CliError> {
    let market = data::synthesize(seed, n_days)?;
    create_dir(out)?;
    for (key, series) in SERIES_KEYS.iter().zip(market.series()) {
        write_file(&out.join(format!("{key}.csv")), series.to_csv().as_bytes())?;
    }
    Ok(())
}

fn load_market(source: &DataSource) -> Result<MarketData, CliError> {
    match source {
        DataSource::Synthetic(s) => Ok(data::synthesize(s.seed, s.n_days)?),
        DataSource::Csv(c) => {
            let mut series = Vec::with_capacity(5);
            for path in c.paths() {
                series.push(data::load_csv(path)?);
            }
            let mut it = series.into_iter();
            let mut next = || it.next().expect("five series");
            Ok(MarketData {
                asset: next(),
                indices: [next(), next(), next(), next()],
            })
        }
    }
}

#[derive(Debug, Serialize)]
struct BestRecord {
    label: String,
    mae_pct: f64,
    sse: f64,
}

#[derive(Debug, Serialize)]
struct Manifest {
    tool_version: &'static str,
    config_sha256: String,
    config: serde_json::Value,
    wall_time_seconds: f64,
    n_train: usize,
    n_test: usize,
    n_records: usize,
    n_ranked: usize,
    n_diverged: usize,
    best: BestRecord,
    baseline_mae_pct: f64,
}

pub fn sweep(config_path: &Path, overrides: &Overrides) -> Result<PathBuf, CliError> {
    let cfg = RunConfig::load(config_path, overrides)?;
    let sweep_cfg = cfg.sweep_config()?;
    let started = Instant::now();

    let market = load_market(&cfg.data)?;
    let ds = data::build_dataset(&market, cfg.train_range()?, cfg.test_range()?)?;
    let baseline = sweep::mean_baseline(&ds)?;
    let records = sweep::run_sweep(&sweep_cfg, &ds)?;
    let n_records = records.len();
    let ranked = sweep::rank(records)?;
    let csv = sweep::sweep_csv_string(&ranked)?;

    create_dir(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join(SWEEP_FILE);
    write_file(&csv_path, csv.as_bytes())?;

    let best = ranked.best();
    let metrics = best.record.metrics.expect("ranked records have metrics");
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        config_sha256: cfg.hash(),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        n_train: ds.train.len(),
        n_test: ds.test.len(),
        n_records,
        n_ranked: ranked.len(),
        n_diverged: ranked.diverged.len(),
        best: BestRecord {
            label: best.record.label.clone(),
            mae_pct: metrics.mae_pct,
            sse: metrics.sse,
        },
        baseline_mae_pct: baseline.mae_pct,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(&cfg.output_dir.join(MANIFEST_FILE), text.as_bytes())?;
    eprintln!(
        "{} architectures ({} diverged); best {} at {:.4}% vs baseline {:.4}%",
        n_records,
        ranked.diverged.len(),
        best.record.label,
        metrics.mae_pct,
        baseline.mae_pct
    );
    Ok(csv_path)
}

pub fn analyze(sweep_csv: &Path, top_m: usize, out: Option<&Path>) -> Result<PathBuf, CliError> {
    if top_m == 0 {
        return Err(CliError::usage("top_m must be >= 1"));
    }
    let file = fs::File::open(sweep_csv).map_err(|e| CliError::io(sweep_csv.display(), e))?;
    let records = sweep::read_sweep_csv(io::BufReader::new(file))?;
    let report = analysis::analyze(&records, top_m)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => sweep_csv.parent().unwrap_or(Path::new(".")).join("analysis"),
    };
    create_dir(&dir)?;
    for (name, contents) in analysis::render(&report)? {
        write_file(&dir.join(name), contents.as_bytes())?;
    }
    Ok(dir)
}

pub fn report(dir: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let md = crate::report::render_dir(dir)?;
    match out {
        Some(path) => write_file(path, md.as_bytes()),
        None => stdout_result(io::stdout().lock().write_all(md.as_bytes())),
    }
}
