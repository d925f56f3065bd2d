//! One-sample z-test of a sample mean against a known population.

use serde::{Deserialize, Serialize};

use super::special::normal_cdf;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    pub z: f64,
    pub p_two_sided: f64,
}

/// `z = (sample_mean - pop_mean) / (pop_std / sqrt(n))`, `p = 2 (1 - Φ(|z|))`.
pub fn z_test(sample_mean: f64, pop_mean: f64, pop_std: f64, n: usize) -> Result<ZTest, StatsError> {
    if pop_std.is_nan() || pop_std <= 0.0 {
        return Err(StatsError::Domain(format!("population std must be > 0, got {pop_std}")));
    }
    if n == 0 {
        return Err(StatsError::Domain("sample size must be >= 1".into()));
    }
    let z = (sample_mean - pop_mean) / (pop_std / (n as f64).sqrt());
    // Upper tail via Φ(-|z|) avoids cancellation in 1 - Φ(|z|).
    Ok(ZTest {
        z,
        p_two_sided: 2.0 * normal_cdf(-z.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_means() {
        let t = z_test(3.5, 3.5, 0.7, 40).unwrap();
        assert_eq!(t.z, 0.0);
        assert!((t.p_two_sided - 1.0).abs() < 1e-15);
    }

    #[test]
    fn five_percent_critical_value() {
        // n = 1, std 1: z equals the mean difference directly.
        let t = z_test(1.96, 0.0, 1.0, 1).unwrap();
        assert!((t.z - 1.96).abs() < 1e-15);
        assert!((t.p_two_sided - 0.05).abs() < 5e-4);
        let neg = z_test(-1.96, 0.0, 1.0, 1).unwrap();
        assert_eq!(neg.p_two_sided, t.p_two_sided);
    }

    #[test]
    fn scales_with_sqrt_n() {
        let t = z_test(3.6, 3.5, 0.8, 64).unwrap();
        assert!((t.z - 0.1 / 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(z_test(1.0, 0.0, 0.0, 10).is_err());
        assert!(z_test(1.0, 0.0, -1.0, 10).is_err());
        assert!(z_test(1.0, 0.0, f64::NAN, 10).is_err());
        assert!(z_test(1.0, 0.0, 1.0, 0).is_err());
    }
}
