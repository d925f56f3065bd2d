//! Markdown digest of an analysis directory.

use std::fmt::Write as _;
use std::path::Path;

use archsearch::analysis::{AnalysisReport, OUTPUT_FILES, SUMMARY_FILE};

use crate::error::CliError;

const TITLES: [&str; 7] = [
    "Hidden layers: sample vs population",
    "Inflections: sample vs population",
    "Total neurons: sample vs population",
    "Z-tests on width statistics",
    "Correlation matrix",
    "OLS of SSE on architecture features",
    "Quadratic OLS on total neurons",
];

/// Short, stable rendering of a numeric cell.
fn cell(raw: &str) -> String {
    if raw.chars().all(|c| c.is_ascii_digit()) {
        return raw.to_string();
    }
    match raw.parse::<f64>() {
        Ok(0.0) => "0".to_string(),
        Ok(v) if v.is_finite() && (v.abs() < 1e-3 || v.abs() >= 1e6) => format!("{v:.3e}"),
        Ok(v) if v.is_finite() => format!("{v:.4}"),
        _ => raw.to_string(),
    }
}

pub fn csv_to_markdown(text: &str) -> Result<String, String> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    let mut out = String::new();
    let row = |cells: Vec<String>| format!("| {} |\n", cells.join(" | "));
    out.push_str(&row(header.iter().map(str::to_string).collect()));
    out.push_str(&row(header.iter().map(|_| "---".to_string()).collect()));
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        out.push_str(&row(rec.iter().map(cell).collect()));
    }
    Ok(out)
}

pub fn render_dir(dir: &Path) -> Result<String, CliError> {
    let summary_path = dir.join(SUMMARY_FILE);
    let summary_text = std::fs::read_to_string(&summary_path).map_err(|e| CliError::io(summary_path.display(), e))?;
    let summary: AnalysisReport = serde_json::from_str(&summary_text)
        .map_err(|e| CliError::new("report", 1, format!("{}: {e}", summary_path.display())))?;

    let mut md = String::new();
    writeln!(md, "# Architecture sweep analysis\n").unwrap();
    writeln!(md, "- architectures: {}", summary.n_population).unwrap();
    writeln!(md, "- trained: {} (diverged: {})", summary.n_ranked, summary.n_diverged).unwrap();
    writeln!(md, "- sample: best {}", summary.top_m).unwrap();
    if !summary.dropped_constant.is_empty() {
        writeln!(md, "- constant features: {}", summary.dropped_constant.join(", ")).unwrap();
    }
    if let Some(c) = &summary.dropped_collinear {
        writeln!(md, "- left out of the regression for collinearity: {c}").unwrap();
    }
    writeln!(
        md,
        "- OLS: R² = {:.4}, adjusted R² = {:.4}, n = {}",
        summary.ols.r2, summary.ols.r2_adjusted, summary.ols.n_obs
    )
    .unwrap();
    writeln!(
        md,
        "- quadratic OLS: R² = {:.4}, adjusted R² = {:.4}",
        summary.ols_quadratic.r2, summary.ols_quadratic.r2_adjusted
    )
    .unwrap();

    for (file, title) in OUTPUT_FILES.iter().zip(TITLES) {
        let path = dir.join(file);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(path.display(), e))?;
        let table = csv_to_markdown(&text).map_err(|e| CliError::new("report", 1, format!("{file}: {e}")))?;
        write!(md, "\n## {title}\n\n{table}").unwrap();
    }
    Ok(md)
}
