//! Ordinary least squares with classical inference.
//!
//! Coefficients come from a Householder QR factorization of the design
//! matrix; the covariance is `σ̂² (XᵀX)⁻¹ = σ̂² R⁻¹ R⁻ᵀ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::{student_t_quantile, student_t_two_sided};
use super::StatsError;

/// Relative size of a QR pivot, against its column norm, below which the
/// column is treated as a linear combination of the previous ones.
const RANK_TOL: f64 = 1e-10;

pub const INTERCEPT_NAME: &str = "_cons";

/// Named explanatory columns of equal length.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Design {
    columns: Vec<(String, Vec<f64>)>,
}

impl Design {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_column(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        self.push(name, values)?;
        Ok(self)
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<(), StatsError> {
        let name = name.into();
        if self.column(&name).is_some() || name == INTERCEPT_NAME {
            return Err(StatsError::NameCollision(name));
        }
        if let Some((first, col)) = self.columns.first() {
            if col.len() != values.len() {
                return Err(StatsError::LengthMismatch(format!(
                    "column {name} has {} rows, {first} has {}",
                    values.len(),
                    col.len()
                )));
            }
        }
        self.columns.push((name, values));
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn columns(&self) -> &[(String, Vec<f64>)] {
        &self.columns
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn n_obs(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }
}

/// Appends `<name>_2`, the elementwise square of column `name`.
pub fn add_quadratic(design: &Design, name: &str) -> Result<Design, StatsError> {
    let col = design
        .column(name)
        .ok_or_else(|| StatsError::UnknownVariable(name.to_string()))?;
    let squared = col.iter().map(|v| v * v).collect();
    design.clone().with_column(format!("{name}_2"), squared)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub rows: Vec<CoefficientRow>,
    pub intercept: Option<CoefficientRow>,
    pub r2: f64,
    pub r2_adjusted: f64,
    pub n_obs: usize,
    pub df_resid: usize,
    /// Residual standard error `sqrt(SSR / df)`.
    pub sigma: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl RegressionReport {
    pub fn row(&self, name: &str) -> Option<&CoefficientRow> {
        self.rows.iter().chain(&self.intercept).find(|r| r.name == name)
    }

    /// Variable rows followed by the intercept row, if any.
    pub fn all_rows(&self) -> impl Iterator<Item = &CoefficientRow> {
        self.rows.iter().chain(&self.intercept)
    }
}

pub fn ols(design: &Design, y: &[f64], with_intercept: bool) -> Result<RegressionReport, StatsError> {
    let n = y.len();
    let k = design.n_vars();
    if k > 0 && design.n_obs() != n {
        return Err(StatsError::LengthMismatch(format!(
            "design has {} rows, response has {n}",
            design.n_obs()
        )));
    }
    let p = k + usize::from(with_intercept);
    if p == 0 {
        return Err(StatsError::EmptyInput("no regressors".into()));
    }
    if n <= p {
        return Err(StatsError::TooFewObservations { n_obs: n, n_params: p });
    }

    let mut names: Vec<&str> = Vec::with_capacity(p);
    if with_intercept {
        names.push(INTERCEPT_NAME);
    }
    names.extend(design.names());
    let offset = usize::from(with_intercept);
    let x = DMatrix::from_fn(n, p, |i, j| {
        if with_intercept && j == 0 {
            1.0
        } else {
            design.columns()[j - offset].1[i]
        }
    });
    let yv = DVector::from_column_slice(y);

    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..p {
        let col_norm = x.column(j).norm();
        if col_norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * col_norm {
            return Err(StatsError::SingularDesign(format!(
                "column {} is linearly dependent on the preceding columns",
                names[j]
            )));
        }
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| StatsError::SingularDesign("triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| StatsError::SingularDesign("triangular inverse failed".into()))?;

    let fitted = &x * &beta;
    let residuals: Vec<f64> = yv.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let df = n - p;
    let sigma2 = ssr / df as f64;

    let (sst, dof_total) = if with_intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>(), n - 1)
    } else {
        (y.iter().map(|v| v * v).sum::<f64>(), n)
    };
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    let r2_adjusted = 1.0 - (1.0 - r2) * dof_total as f64 / df as f64;

    let t_crit = student_t_quantile(0.975, df as f64);
    let mut rows: Vec<CoefficientRow> = (0..p)
        .map(|j| {
            // Diagonal of R⁻¹R⁻ᵀ is the squared norm of row j of R⁻¹.
            let var = sigma2 * r_inv.row(j).norm_squared();
            let se = var.sqrt();
            let coef = beta[j];
            let t = coef / se;
            CoefficientRow {
                name: names[j].to_string(),
                coefficient: coef,
                std_error: se,
                t_stat: t,
                p_value: student_t_two_sided(t, df as f64),
                ci95_low: coef - t_crit * se,
                ci95_high: coef + t_crit * se,
            }
        })
        .collect();
    let intercept = with_intercept.then(|| rows.remove(0));

    Ok(RegressionReport {
        rows,
        intercept,
        r2,
        r2_adjusted,
        n_obs: n,
        df_resid: df,
        sigma: sigma2.sqrt(),
        residuals,
    })
}
