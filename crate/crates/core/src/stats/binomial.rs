//! Binomial probabilities and the population-vs-sample proportion tables.

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::archspace::ArchFeatures;

/// `ln n! - ln(sqrt(2 pi n) (n/e)^n)` for n = 0..=15.
#[allow(clippy::excessive_precision)]
const STIRLERR_TABLE: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_67,
    0.041_340_695_955_409_294_093_82,
    0.027_677_925_684_998_339_148_79,
    0.020_790_672_103_765_093_111_52,
    0.016_644_691_189_821_192_163_19,
    0.013_876_128_823_070_747_998_75,
    0.011_896_709_945_891_770_095_06,
    0.010_411_265_261_972_096_497_48,
    0.009_255_462_182_712_732_917_729,
    0.008_330_563_433_362_871_256_469,
    0.007_573_675_487_951_840_794_972,
    0.006_942_840_107_209_529_865_664,
    0.006_408_994_188_004_207_068_44,
    0.005_951_370_112_758_847_735_624,
    0.005_554_733_551_962_801_371_039,
];

/// Remainder of Stirling's approximation to `ln n!`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        return STIRLERR_TABLE[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `x ln(x / m) + m - x`, evaluated without cancellation when `x ≈ m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// `C(n, k) p^k (1-p)^(n-k)`.
///
/// Evaluated in log space: the log binomial coefficient comes from
/// Stirling-corrected log factorials and the power terms are folded into
/// deviance form, which keeps about 1e-15 relative accuracy even when
/// `n` is in the tens of thousands.
pub fn binom_pmf(k: u64, n: u64, p: f64) -> Result<f64, StatsError> {
    if k > n {
        return Err(StatsError::Domain(format!("k = {k} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::Domain(format!("p = {p} outside [0, 1]")));
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if q == 0.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    let nf = n as f64;
    if k == 0 {
        let lc = if p < 0.1 {
            -bd0(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
        return Ok(lc.exp());
    }
    if k == n {
        let lc = if q < 0.1 {
            -bd0(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
        return Ok(lc.exp());
    }
    let kf = k as f64;
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = std::f64::consts::TAU.ln() + kf.ln() + (-kf / nf).ln_1p();
    Ok((lc - 0.5 * lf).exp())
}

/// Exact two-sided binomial test: total probability of outcomes no more
/// likely than `k` under `Binomial(n, p)`.
pub fn binom_two_sided(k: u64, n: u64, p: f64) -> Result<f64, StatsError> {
    let d = binom_pmf(k, n, p)?;
    let cutoff = d * (1.0 + 1e-7);
    let mut total = 0.0;
    for j in 0..=n {
        let pj = binom_pmf(j, n, p)?;
        if pj <= cutoff {
            total += pj;
        }
    }
    Ok(total.min(1.0))
}

/// Integer-valued architecture characteristic used to build a proportion table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characteristic {
    Layers,
    Neurons,
    Inflections,
}

impl Characteristic {
    pub fn extract(self, f: &ArchFeatures) -> u32 {
        match self {
            Characteristic::Layers => f.n_layers,
            Characteristic::Neurons => f.n_neurons,
            Characteristic::Inflections => f.n_inflections,
        }
    }

    pub fn column_name(self) -> &'static str {
        match self {
            Characteristic::Layers => "N_CAMADAS",
            Characteristic::Neurons => "N_NEURONIOS",
            Characteristic::Inflections => "N_INFLEXOES",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionTestRow {
    pub characteristic_value: u32,
    pub sample_count: u64,
    pub sample_prop: f64,
    pub pop_prop: f64,
    /// Point probability `f(sample_count; n_sample, pop_prop)`.
    pub probability: f64,
    /// Exact two-sided binomial test p-value for the same counts.
    pub exact_two_sided_p: f64,
}

/// One row per distinct characteristic value in the population, ascending.
pub fn proportion_table(
    sample: &[ArchFeatures],
    population: &[ArchFeatures],
    characteristic: Characteristic,
) -> Result<Vec<ProportionTestRow>, StatsError> {
    if population.is_empty() {
        return Err(StatsError::EmptyInput("population".into()));
    }
    if sample.is_empty() {
        return Err(StatsError::EmptyInput("sample".into()));
    }
    let mut pop_counts = std::collections::BTreeMap::<u32, u64>::new();
    for f in population {
        *pop_counts.entry(characteristic.extract(f)).or_default() += 1;
    }
    let n_pop = population.len() as f64;
    let n_sample = sample.len() as u64;
    pop_counts
        .into_iter()
        .map(|(value, pop_count)| {
            let sample_count = sample.iter().filter(|f| characteristic.extract(f) == value).count() as u64;
            let pop_prop = pop_count as f64 / n_pop;
            Ok(ProportionTestRow {
                characteristic_value: value,
                sample_count,
                sample_prop: sample_count as f64 / n_sample as f64,
                pop_prop,
                probability: binom_pmf(sample_count, n_sample, pop_prop)?,
                exact_two_sided_p: binom_two_sided(sample_count, n_sample, pop_prop)?,
            })
        })
        .collect()
}
