//! Pearson correlation matrices over named columns.

use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// Row-major, `names.len()` squared; symmetric with a unit diagonal.
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }
}

fn centered(name: &str, xs: &[f64]) -> Result<(Vec<f64>, f64), StatsError> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let c: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let ss = c.iter().map(|v| v * v).sum::<f64>();
    if ss.is_nan() || ss <= 0.0 {
        return Err(StatsError::ZeroVariance(name.to_string()));
    }
    Ok((c, ss.sqrt()))
}

/// Pearson correlation of two equal-length columns.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(format!("{} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(StatsError::EmptyInput("need at least 2 observations".into()));
    }
    let (cx, nx) = centered("x", x)?;
    let (cy, ny) = centered("y", y)?;
    Ok(dot_corr(&cx, nx, &cy, ny))
}

fn dot_corr(cx: &[f64], nx: f64, cy: &[f64], ny: f64) -> f64 {
    let r = cx.iter().zip(cy).map(|(a, b)| a * b).sum::<f64>() / (nx * ny);
    r.clamp(-1.0, 1.0)
}

pub fn corr_matrix(columns: &[(String, Vec<f64>)]) -> Result<CorrelationMatrix, StatsError> {
    if columns.len() < 2 {
        return Err(StatsError::EmptyInput("need at least 2 columns".into()));
    }
    let len = columns[0].1.len();
    if len < 2 {
        return Err(StatsError::EmptyInput("need at least 2 observations".into()));
    }
    let mut prepared = Vec::with_capacity(columns.len());
    for (name, xs) in columns {
        if xs.len() != len {
            return Err(StatsError::LengthMismatch(format!(
                "column {name} has {} rows, expected {len}",
                xs.len()
            )));
        }
        prepared.push(centered(name, xs)?);
    }
    let k = columns.len();
    let mut values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let r = dot_corr(&prepared[i].0, prepared[i].1, &prepared[j].0, prepared[j].1);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: columns.iter().map(|(n, _)| n.clone()).collect(),
        values,
    })
}
