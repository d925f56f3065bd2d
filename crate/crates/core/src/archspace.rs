//! Architecture space: hidden-layer width sequences, their labels, the
//! exhaustive enumeration under bounds, and per-architecture features.
//!
//! Only hidden layers are described here. The input layer (feature count)
//! and the scalar output layer are added by [`crate::mlp`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArchError {
    #[error("malformed label {0:?}")]
    MalformedLabel(String),
    #[error("invalid bounds: n_max={n_max}, k_max={k_max} (both must be >= 1)")]
    InvalidBounds { n_max: u32, k_max: u32 },
    #[error("architecture count overflows u64 for n_max={n_max}, k_max={k_max}")]
    CountOverflow { n_max: u32, k_max: u32 },
    #[error("architecture must have at least one hidden layer of width >= 1")]
    EmptyArchitecture,
}

/// Limits of the enumerated space: at most `n_max` neurons per hidden
/// layer and at most `k_max` hidden layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceBounds {
    pub n_max: u32,
    pub k_max: u32,
}

impl SpaceBounds {
    pub fn new(n_max: u32, k_max: u32) -> Result<Self, ArchError> {
        if n_max == 0 || k_max == 0 {
            return Err(ArchError::InvalidBounds { n_max, k_max });
        }
        Ok(Self { n_max, k_max })
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        Self::new(self.n_max, self.k_max).map(|_| ())
    }

    /// Whether `spec` lies inside these bounds.
    pub fn contains(&self, spec: &ArchSpec) -> bool {
        spec.n_layers() <= self.k_max as usize && spec.widths().iter().all(|&w| w <= self.n_max)
    }
}

impl Default for SpaceBounds {
    fn default() -> Self {
        Self { n_max: 6, k_max: 5 }
    }
}

/// Ordered hidden-layer widths, written as a dotted label such as `1.3.6.3.1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArchSpec {
    widths: Vec<u32>,
}

impl ArchSpec {
    pub fn new(widths: Vec<u32>) -> Result<Self, ArchError> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(ArchError::EmptyArchitecture);
        }
        Ok(Self { widths })
    }

    pub fn widths(&self) -> &[u32] {
        &self.widths
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len()
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn parse_label(label: &str) -> Result<Self, ArchError> {
        label.parse()
    }

    pub fn features(&self) -> ArchFeatures {
        features(self)
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.widths.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

impl FromStr for ArchSpec {
    type Err = ArchError;

    /// Grammar: `label := int ("." int)*`, `int := [1-9][0-9]*`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || ArchError::MalformedLabel(s.to_string());
        let widths = s
            .split('.')
            .map(|tok| {
                let bytes = tok.as_bytes();
                let well_formed = !bytes.is_empty() && bytes[0] != b'0' && bytes.iter().all(u8::is_ascii_digit);
                if !well_formed {
                    return Err(malformed());
                }
                tok.parse::<u32>().map_err(|_| malformed())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { widths })
    }
}

impl Serialize for ArchSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ArchSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The five structural characteristics of an architecture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchFeatures {
    pub n_layers: u32,
    pub n_neurons: u32,
    pub mean_neurons: f64,
    /// Population standard deviation of the widths.
    pub std_neurons: f64,
    pub n_inflections: u32,
}

/// `Σ_{i=1..k_max} n_max^i`, checked.
pub fn count_total(bounds: SpaceBounds) -> Result<u64, ArchError> {
    bounds.validate()?;
    let overflow = ArchError::CountOverflow {
        n_max: bounds.n_max,
        k_max: bounds.k_max,
    };
    let n = u64::from(bounds.n_max);
    let mut power: u64 = 1;
    let mut total: u64 = 0;
    for _ in 0..bounds.k_max {
        power = power.checked_mul(n).ok_or_else(|| overflow.clone())?;
        total = total.checked_add(power).ok_or_else(|| overflow.clone())?;
    }
    Ok(total)
}

/// Every architecture inside `bounds`, ordered by layer count and then
/// lexicographically by widths.
pub fn enumerate(bounds: SpaceBounds) -> Result<Vec<ArchSpec>, ArchError> {
    let total = count_total(bounds)?;
    let mut out = Vec::with_capacity(usize::try_from(total).unwrap_or(0));
    out.extend(iter(bounds)?);
    Ok(out)
}

/// Lazy form of [`enumerate`].
pub fn iter(bounds: SpaceBounds) -> Result<ArchIter, ArchError> {
    bounds.validate()?;
    Ok(ArchIter {
        bounds,
        current: Some(vec![1]),
    })
}

/// Odometer over width vectors; see [`iter`].
#[derive(Debug, Clone)]
pub struct ArchIter {
    bounds: SpaceBounds,
    current: Option<Vec<u32>>,
}

impl Iterator for ArchIter {
    type Item = ArchSpec;

    fn next(&mut self) -> Option<ArchSpec> {
        let widths = self.current.take()?;
        let mut next = widths.clone();
        let mut pos = next.len();
        loop {
            if pos == 0 {
                // Rolled over every digit: move to the next layer count.
                if next.len() < self.bounds.k_max as usize {
                    self.current = Some(vec![1; next.len() + 1]);
                }
                break;
            }
            pos -= 1;
            if next[pos] < self.bounds.n_max {
                next[pos] += 1;
                self.current = Some(next);
                break;
            }
            next[pos] = 1;
        }
        Some(ArchSpec { widths })
    }
}

/// Number of direction reversals in the width sequence.
///
/// With `d_i = w[i+1] - w[i]`, counts adjacent pairs with `d_i * d_{i+1} < 0`.
/// A zero difference never takes part in a reversal, so a plateau between
/// an increase and a decrease absorbs it.
pub fn inflections(widths: &[u32]) -> u32 {
    let diffs: Vec<i64> = widths.windows(2).map(|w| i64::from(w[1]) - i64::from(w[0])).collect();
    diffs.windows(2).filter(|d| d[0] * d[1] < 0).count() as u32
}

pub fn features(spec: &ArchSpec) -> ArchFeatures {
    let widths = spec.widths();
    let k = widths.len() as f64;
    let n_neurons: u32 = widths.iter().sum();
    let mean = f64::from(n_neurons) / k;
    let var = widths.iter().map(|&w| (f64::from(w) - mean).powi(2)).sum::<f64>() / k;
    ArchFeatures {
        n_layers: widths.len() as u32,
        n_neurons,
        mean_neurons: mean,
        std_neurons: var.sqrt(),
        n_inflections: inflections(widths),
    }
}
