//! Kernel functions and Gram matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::FeatureVector;
use crate::error::{OutageError, Result};

/// Bandwidth used when a Gaussian kernel is named without one.
pub const DEFAULT_SIGMA_SQ: f64 = 0.05;

/// Kernel family with its hyperparameters.
///
/// Text form: `linear`, `poly<d>` (e.g. `poly2`, `poly3`), `gaussian` or
/// `gaussian:<sigma_sq>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Kernel {
    Linear,
    /// `(a·b + 1)^degree`
    Polynomial {
        degree: u32,
    },
    /// `exp(-|a-b|² / (2 σ²))`
    Gaussian {
        sigma_sq: f64,
    },
}

impl Kernel {
    pub fn quadratic() -> Self {
        Kernel::Polynomial { degree: 2 }
    }

    pub fn cubic() -> Self {
        Kernel::Polynomial { degree: 3 }
    }

    pub fn gaussian(sigma_sq: f64) -> Self {
        Kernel::Gaussian { sigma_sq }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Polynomial { degree } if degree >= 1 => Ok(()),
            Kernel::Polynomial { degree } => Err(OutageError::InvalidParameter(format!(
                "polynomial degree must be at least 1, got {degree}"
            ))),
            Kernel::Gaussian { sigma_sq } if sigma_sq.is_finite() && sigma_sq > 0.0 => Ok(()),
            Kernel::Gaussian { sigma_sq } => Err(OutageError::InvalidParameter(format!(
                "gaussian sigma_sq must be positive, got {sigma_sq}"
            ))),
        }
    }

    pub fn eval(&self, a: &FeatureVector, b: &FeatureVector) -> f64 {
        match *self {
            Kernel::Linear => a.dot(b),
            Kernel::Polynomial { degree } => (a.dot(b) + 1.0).powi(degree as i32),
            Kernel::Gaussian { sigma_sq } => (-a.squared_distance(b) / (2.0 * sigma_sq)).exp(),
        }
    }

    /// Human-readable family name used in report tables.
    pub fn display_name(&self) -> String {
        match *self {
            Kernel::Linear => "Linear".into(),
            Kernel::Polynomial { degree: 2 } => "Quadratic".into(),
            Kernel::Polynomial { degree: 3 } => "Cubic".into(),
            Kernel::Polynomial { degree } => format!("Poly{degree}"),
            Kernel::Gaussian { .. } => "Gaussian".into(),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Linear => f.write_str("linear"),
            Kernel::Polynomial { degree } => write!(f, "poly{degree}"),
            Kernel::Gaussian { sigma_sq } => write!(f, "gaussian:{sigma_sq}"),
        }
    }
}

impl FromStr for Kernel {
    type Err = OutageError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || {
            OutageError::InvalidParameter(format!(
                "unknown kernel `{s}` (expected linear | poly2 | poly3 | gaussian[:<sigma_sq>])"
            ))
        };
        let k = match s {
            "linear" => Kernel::Linear,
            "gaussian" | "rbf" => Kernel::Gaussian {
                sigma_sq: DEFAULT_SIGMA_SQ,
            },
            _ => {
                if let Some(d) = s.strip_prefix("poly") {
                    Kernel::Polynomial {
                        degree: d.parse().map_err(|_| bad())?,
                    }
                } else if let Some(v) = s.strip_prefix("gaussian:") {
                    Kernel::Gaussian {
                        sigma_sq: v.parse().map_err(|_| bad())?,
                    }
                } else {
                    return Err(bad());
                }
            }
        };
        k.validate()?;
        Ok(k)
    }
}

impl TryFrom<String> for Kernel {
    type Error = OutageError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Kernel> for String {
    fn from(k: Kernel) -> Self {
        k.to_string()
    }
}

/// Dense symmetric kernel matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Builds the Gram matrix. Only the upper triangle is evaluated; the lower
/// triangle is mirrored, so the result is exactly symmetric.
pub fn gram_matrix(kernel: &Kernel, samples: &[FeatureVector]) -> GramMatrix {
    let n = samples.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&samples[i], &samples[j]);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    GramMatrix { n, data }
}

/// Same result as [`gram_matrix`], rows computed in parallel.
pub fn gram_matrix_par(kernel: &Kernel, samples: &[FeatureVector]) -> GramMatrix {
    use rayon::prelude::*;
    let n = samples.len();
    let mut data = vec![0.0; n * n];
    if n == 0 {
        return GramMatrix { n, data };
    }
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            // evaluate with the smaller index first to match the sequential mirror
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            *slot = kernel.eval(&samples[a], &samples[b]);
        }
    });
    GramMatrix { n, data }
}
