//! Population-vs-sample analysis of a finished sweep.
//!
//! The population is every record of the sweep; the sample is the best
//! `top_m` of the ranking. From these the pipeline builds the proportion
//! tables (layers, inflections, total neurons), z-tests on the mean and
//! spread of widths, the correlation matrix of error and features, the OLS
//! of per-architecture SSE on the features, and the quadratic OLS on the
//! total neuron count.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archspace::ArchFeatures;
use crate::stats::{
    self, add_quadratic, corr_matrix, ols, proportion_table, z_test, Characteristic, CorrelationMatrix, Design,
    ProportionTestRow, RegressionReport, StatsError,
};
use crate::sweep::{self, SweepError, SweepRecord};

pub const ERRO: &str = "ERRO";
pub const N_CAMADAS: &str = "N_CAMADAS";
pub const N_NEURONIOS: &str = "N_NEURONIOS";
pub const N_MED_NEURONIOS: &str = "N_MED_NEURONIOS";
pub const DESVIO_N_NEURONIOS: &str = "DESVIO_N_NEURONIOS";
pub const N_INFLEXOES: &str = "N_INFLEXOES";

/// `|corr(N_NEURONIOS, N_MED_NEURONIOS)|` above which the mean width is
/// dropped from the regression.
pub const COLLINEARITY_THRESHOLD: f64 = 0.9;

pub const OUTPUT_FILES: [&str; 7] = [
    "proportions_layers.csv",
    "proportions_inflections.csv",
    "proportions_neurons.csv",
    "ztests.csv",
    "correlation.csv",
    "ols.csv",
    "ols_quadratic.csv",
];
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZTestRow {
    pub characteristic: String,
    pub sample_mean: f64,
    pub pop_mean: f64,
    pub pop_std: f64,
    pub n: usize,
    pub z: f64,
    pub p_two_sided: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n_population: usize,
    pub n_ranked: usize,
    pub n_diverged: usize,
    pub top_m: usize,
    pub proportions_layers: Vec<ProportionTestRow>,
    pub proportions_inflections: Vec<ProportionTestRow>,
    pub proportions_neurons: Vec<ProportionTestRow>,
    pub ztests: Vec<ZTestRow>,
    /// Error and feature columns over the non-diverged records.
    pub correlation: CorrelationMatrix,
    /// Feature columns excluded everywhere because they are constant.
    pub dropped_constant: Vec<String>,
    /// Feature excluded from the regression for collinearity, if any.
    pub dropped_collinear: Option<String>,
    pub ols: RegressionReport,
    pub ols_quadratic: RegressionReport,
}

/// Population feature columns in table order.
pub fn feature_columns(features: &[ArchFeatures]) -> Vec<(String, Vec<f64>)> {
    let col = |name: &str, f: fn(&ArchFeatures) -> f64| (name.to_string(), features.iter().map(f).collect());
    vec![
        col(N_CAMADAS, |f| f64::from(f.n_layers)),
        col(N_NEURONIOS, |f| f64::from(f.n_neurons)),
        col(N_MED_NEURONIOS, |f| f.mean_neurons),
        col(DESVIO_N_NEURONIOS, |f| f.std_neurons),
        col(N_INFLEXOES, |f| f64::from(f.n_inflections)),
    ]
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

pub fn analyze(records: &[SweepRecord], top_m: usize) -> Result<AnalysisReport, AnalysisError> {
    let population: Vec<ArchFeatures> = records.iter().map(|r| r.features).collect();
    let ranked = sweep::rank(records.to_vec())?;
    let sample: Vec<ArchFeatures> = sweep::top_m(&ranked, top_m)?.iter().map(|r| r.features).collect();

    let proportions = |c| proportion_table(&sample, &population, c);
    let proportions_layers = proportions(Characteristic::Layers)?;
    let proportions_inflections = proportions(Characteristic::Inflections)?;
    let proportions_neurons = proportions(Characteristic::Neurons)?;

    let mut ztests = Vec::new();
    for (name, get) in [
        (
            N_MED_NEURONIOS,
            (|f: &ArchFeatures| f.mean_neurons) as fn(&ArchFeatures) -> f64,
        ),
        (DESVIO_N_NEURONIOS, |f: &ArchFeatures| f.std_neurons),
    ] {
        let pop: Vec<f64> = population.iter().map(get).collect();
        let (pop_mean, pop_std) = mean_std(&pop);
        if pop_std == 0.0 {
            continue;
        }
        let sample_mean = sample.iter().map(get).sum::<f64>() / sample.len() as f64;
        let t = z_test(sample_mean, pop_mean, pop_std, sample.len())?;
        ztests.push(ZTestRow {
            characteristic: name.to_string(),
            sample_mean,
            pop_mean,
            pop_std,
            n: sample.len(),
            z: t.z,
            p_two_sided: t.p_two_sided,
        });
    }

    // Regression population: architectures that trained successfully.
    let trained: Vec<&SweepRecord> = ranked.entries.iter().map(|e| &e.record).collect();
    let trained_features: Vec<ArchFeatures> = trained.iter().map(|r| r.features).collect();
    let sse: Vec<f64> = trained.iter().map(|r| r.metrics.expect("ranked").sse).collect();

    let mut dropped_constant = Vec::new();
    let mut features = Vec::new();
    for (name, col) in feature_columns(&trained_features) {
        if is_constant(&col) {
            dropped_constant.push(name);
        } else {
            features.push((name, col));
        }
    }
    let mut corr_input = vec![(ERRO.to_string(), sse.clone())];
    corr_input.extend(features.iter().cloned());
    let correlation = corr_matrix(&corr_input)?;

    let dropped_collinear = correlation
        .get(N_NEURONIOS, N_MED_NEURONIOS)
        .filter(|r| r.abs() > COLLINEARITY_THRESHOLD)
        .map(|_| N_MED_NEURONIOS.to_string());

    let mut design = Design::new();
    for (name, col) in &features {
        if dropped_collinear.as_deref() != Some(name.as_str()) {
            design.push(name.clone(), col.clone())?;
        }
    }
    let ols_report = ols(&design, &sse, true)?;

    let neurons = features
        .iter()
        .find(|(n, _)| n == N_NEURONIOS)
        .map(|(_, c)| c.clone())
        .ok_or_else(|| StatsError::ZeroVariance(N_NEURONIOS.into()))?;
    let quad_design = add_quadratic(&Design::new().with_column(N_NEURONIOS, neurons)?, N_NEURONIOS)?;
    let ols_quadratic = ols(&quad_design, &sse, true)?;

    Ok(AnalysisReport {
        n_population: population.len(),
        n_ranked: ranked.len(),
        n_diverged: ranked.diverged.len(),
        top_m,
        proportions_layers,
        proportions_inflections,
        proportions_neurons,
        ztests,
        correlation,
        dropped_constant,
        dropped_collinear,
        ols: ols_report,
        ols_quadratic,
    })
}

fn f(v: f64) -> String {
    format!("{v:?}")
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

fn finish(w: csv::Writer<&mut Vec<u8>>) -> Result<(), AnalysisError> {
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> AnalysisError {
    AnalysisError::Io(std::io::Error::other(e))
}

pub fn proportions_csv(rows: &[ProportionTestRow]) -> Result<String, AnalysisError> {
    let mut buf = Vec::new();
    let mut w = csv_writer(&mut buf);
    w.write_record([
        "value",
        "sample_count",
        "sample_prop",
        "pop_prop",
        "probability",
        "exact_two_sided_p",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.characteristic_value.to_string(),
            r.sample_count.to_string(),
            f(r.sample_prop),
            f(r.pop_prop),
            f(r.probability),
            f(r.exact_two_sided_p),
        ])
        .map_err(csv_err)?;
    }
    finish(w)?;
    Ok(String::from_utf8(buf).expect("utf-8"))
}

pub fn ztests_csv(rows: &[ZTestRow]) -> Result<String, AnalysisError> {
    let mut buf = Vec::new();
    let mut w = csv_writer(&mut buf);
    w.write_record([
        "characteristic",
        "sample_mean",
        "pop_mean",
        "pop_std",
        "n",
        "z",
        "p_two_sided",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.characteristic.clone(),
            f(r.sample_mean),
            f(r.pop_mean),
            f(r.pop_std),
            r.n.to_string(),
            f(r.z),
            f(r.p_two_sided),
        ])
        .map_err(csv_err)?;
    }
    finish(w)?;
    Ok(String::from_utf8(buf).expect("utf-8"))
}

pub fn correlation_csv(m: &CorrelationMatrix) -> Result<String, AnalysisError> {
    let mut buf = Vec::new();
    let mut w = csv_writer(&mut buf);
    let header: Vec<&str> = std::iter::once("variable")
        .chain(m.names.iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    for (name, row) in m.names.iter().zip(&m.values) {
        let cells: Vec<String> = std::iter::once(name.clone()).chain(row.iter().map(|&v| f(v))).collect();
        w.write_record(&cells).map_err(csv_err)?;
    }
    finish(w)?;
    Ok(String::from_utf8(buf).expect("utf-8"))
}

pub fn regression_csv(rep: &RegressionReport) -> Result<String, AnalysisError> {
    let mut buf = Vec::new();
    let mut w = csv_writer(&mut buf);
    w.write_record([
        "variable",
        "coefficient",
        "std_error",
        "t",
        "p_value",
        "ci95_low",
        "ci95_high",
    ])
    .map_err(csv_err)?;
    for r in rep.all_rows() {
        w.write_record([
            r.name.clone(),
            f(r.coefficient),
            f(r.std_error),
            f(r.t_stat),
            f(r.p_value),
            f(r.ci95_low),
            f(r.ci95_high),
        ])
        .map_err(csv_err)?;
    }
    finish(w)?;
    Ok(String::from_utf8(buf).expect("utf-8"))
}

/// `(file name, contents)` for every CSV plus the JSON summary.
pub fn render(report: &AnalysisReport) -> Result<Vec<(&'static str, String)>, AnalysisError> {
    let mut summary = serde_json::to_string_pretty(report)?;
    summary.push('\n');
    Ok(vec![
        (OUTPUT_FILES[0], proportions_csv(&report.proportions_layers)?),
        (OUTPUT_FILES[1], proportions_csv(&report.proportions_inflections)?),
        (OUTPUT_FILES[2], proportions_csv(&report.proportions_neurons)?),
        (OUTPUT_FILES[3], ztests_csv(&report.ztests)?),
        (OUTPUT_FILES[4], correlation_csv(&report.correlation)?),
        (OUTPUT_FILES[5], regression_csv(&report.ols)?),
        (OUTPUT_FILES[6], regression_csv(&report.ols_quadratic)?),
        (SUMMARY_FILE, summary),
    ])
}

pub fn write_outputs(report: &AnalysisReport, dir: &Path) -> Result<(), AnalysisError> {
    fs::create_dir_all(dir)?;
    for (name, contents) in render(report)? {
        let mut file = fs::File::create(dir.join(name))?;
        file.write_all(contents.as_bytes())?;
    }
    Ok(())
}

/// Re-export so callers need not reach into `stats`.
pub use stats::ols::INTERCEPT_NAME;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspace::{enumerate, SpaceBounds};
    use crate::mlp::EvalMetrics;
    use crate::rng::SplitMix64;

    /// Records for every architecture in `bounds` with a synthetic error
    /// that depends on the features plus noise.
    fn fake_sweep(bounds: SpaceBounds, seed: u64) -> Vec<SweepRecord> {
        let mut rng = SplitMix64::new(seed);
        enumerate(bounds)
            .unwrap()
            .into_iter()
            .map(|spec| {
                let f = spec.features();
                let sse =
                    0.2 + 0.001 * f64::from(f.n_neurons) - 0.004 * f64::from(f.n_layers) + 0.002 * rng.next_normal();
                SweepRecord {
                    label: spec.label(),
                    features: f,
                    metrics: Some(EvalMetrics {
                        mae_pct: sse.abs(),
                        sse: sse.abs(),
                    }),
                    train_millis: 0,
                    arch_seed: 0,
                }
            })
            .collect()
    }

    #[test]
    fn full_population_analysis() {
        let recs = fake_sweep(SpaceBounds::default(), 1);
        let rep = analyze(&recs, 40).unwrap();
        assert_eq!(rep.n_population, 9330);
        assert_eq!(rep.top_m, 40);
        assert_eq!(rep.proportions_layers.len(), 5);
        assert_eq!(rep.proportions_inflections.len(), 4);
        assert_eq!(rep.proportions_neurons.len(), 30);
        let sample_total: u64 = rep.proportions_layers.iter().map(|r| r.sample_count).sum();
        assert_eq!(sample_total, 40);
        assert_eq!(rep.dropped_collinear.as_deref(), Some(N_MED_NEURONIOS));
        assert!(rep.dropped_constant.is_empty());
        let names: Vec<_> = rep.ols.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, [N_CAMADAS, N_NEURONIOS, DESVIO_N_NEURONIOS, N_INFLEXOES]);
        // Effects planted in the fake errors are recovered.
        assert!((rep.ols.row(N_NEURONIOS).unwrap().coefficient - 0.001).abs() < 2e-4);
        assert!((rep.ols.row(N_CAMADAS).unwrap().coefficient + 0.004).abs() < 1e-3);
        assert!(rep.ols_quadratic.row("N_NEURONIOS_2").is_some());
        let zeros = [
            rep.correlation.get(N_MED_NEURONIOS, N_CAMADAS).unwrap(),
            rep.correlation.get(N_MED_NEURONIOS, DESVIO_N_NEURONIOS).unwrap(),
            rep.correlation.get(N_MED_NEURONIOS, N_INFLEXOES).unwrap(),
        ];
        assert!(zeros.iter().all(|r| r.abs() < 1e-9), "{zeros:?}");
        assert_eq!(rep.ztests.len(), 2);
        assert!((rep.ztests[0].pop_mean - 3.5).abs() < 1e-12);
        // Population moments of the width statistics, from a Python enumeration.
        assert!((rep.ztests[0].pop_std - 0.785_792_927_677_239_3).abs() < 1e-12);
        assert!((rep.ztests[1].pop_mean - 1.455_132_866_818_074).abs() < 1e-12);
        assert!((rep.ztests[1].pop_std - 0.426_361_913_619_067_7).abs() < 1e-12);
    }

    #[test]
    fn small_space_drops_constant_inflections() {
        let recs = fake_sweep(SpaceBounds::new(2, 2).unwrap(), 2);
        let rep = analyze(&recs, 3).unwrap();
        assert_eq!(rep.dropped_constant, [N_INFLEXOES]);
        assert!(rep.correlation.get(N_INFLEXOES, ERRO).is_none());
    }

    #[test]
    fn top_m_larger_than_ranking_fails() {
        let recs = fake_sweep(SpaceBounds::new(2, 2).unwrap(), 2);
        assert!(matches!(
            analyze(&recs, 7),
            Err(AnalysisError::Sweep(SweepError::TopMTooLarge { .. }))
        ));
    }

    #[test]
    fn rendered_outputs_are_deterministic() {
        let recs = fake_sweep(SpaceBounds::new(3, 3).unwrap(), 3);
        let a = render(&analyze(&recs, 10).unwrap()).unwrap();
        let b = render(&analyze(&recs, 10).unwrap()).unwrap();
        assert_eq!(a, b);
        let names: Vec<_> = a.iter().map(|(n, _)| *n).collect();
        assert_eq!(&names[..7], &OUTPUT_FILES);
        let corr = &a.iter().find(|(n, _)| *n == "correlation.csv").unwrap().1;
        assert!(
            corr.starts_with("variable,ERRO,N_CAMADAS,N_NEURONIOS,N_MED_NEURONIOS,DESVIO_N_NEURONIOS,N_INFLEXOES\n")
        );
        let ols_csv = &a.iter().find(|(n, _)| *n == "ols.csv").unwrap().1;
        assert!(ols_csv.lines().last().unwrap().starts_with("_cons,"));
    }
}
