//! Statistical machinery for comparing the top-M sample with the
//! enumerated population and for regressing error on architecture features.

pub mod binomial;
pub mod correlation;
pub mod ols;
pub mod special;
pub mod ztest;

use thiserror::Error;

pub use binomial::{binom_pmf, binom_two_sided, proportion_table, Characteristic, ProportionTestRow};
pub use correlation::{corr_matrix, pearson, CorrelationMatrix};
pub use ols::{add_quadratic, ols, CoefficientRow, Design, RegressionReport};
pub use ztest::{z_test, ZTest};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("column {0} has zero variance")]
    ZeroVariance(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("singular design matrix: {0}")]
    SingularDesign(String),
    #[error("too few observations: {n_obs} for {n_params} parameters")]
    TooFewObservations { n_obs: usize, n_params: usize },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable {0} already exists")]
    NameCollision(String),
}
