//! Third-order polynomial logistic regression, the benchmark classifier.
//!
//! Features are expanded into every monomial of total degree at most three
//! (20 terms including the constant). Training maximizes the mean
//! log-likelihood minus an L2 penalty on all non-intercept weights, using
//! Newton steps with backtracking from a zero start.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureVector, Label, LabeledSample};
use crate::error::{OutageError, Result};

pub const N_TERMS: usize = 20;

/// Exponents `(resilience, distance, intensity)` of each basis term, graded by
/// total degree and lexicographically descending within a degree:
/// `1, r, d, i, r², rd, ri, d², di, i², r³, r²d, r²i, rd², rdi, ri², d³, d²i, di², i³`.
pub const MONOMIALS: [[u8; 3]; N_TERMS] = monomial_table();

const fn monomial_table() -> [[u8; 3]; N_TERMS] {
    let mut out = [[0u8; 3]; N_TERMS];
    let mut k = 0;
    let mut deg = 0u8;
    while deg <= 3 {
        let mut p = deg as i32;
        while p >= 0 {
            let mut q = deg as i32 - p;
            while q >= 0 {
                let r = deg as i32 - p - q;
                out[k] = [p as u8, q as u8, r as u8];
                k += 1;
                q -= 1;
            }
            p -= 1;
        }
        deg += 1;
    }
    out
}

pub fn polynomial_expand(x: &FeatureVector) -> [f64; N_TERMS] {
    let v = x.to_array();
    let mut out = [0.0; N_TERMS];
    for (slot, exps) in out.iter_mut().zip(MONOMIALS.iter()) {
        *slot = v
            .iter()
            .zip(exps)
            .map(|(b, &e)| b.powi(i32::from(e)))
            .product();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegConfig {
    /// L2 penalty on non-intercept weights.
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm is at or below this.
    pub grad_tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            max_iter: 500,
            grad_tol: 1e-6,
        }
    }
}

impl LogRegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(OutageError::InvalidParameter(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.grad_tol.is_finite() && self.grad_tol > 0.0) || self.max_iter == 0 {
            return Err(OutageError::InvalidParameter(
                "grad_tol must be positive and max_iter at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegInfo {
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// One weight per basis term, in [`MONOMIALS`] order; index 0 is the intercept.
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub info: LogRegInfo,
}

impl LogRegModel {
    pub fn score(&self, x: &FeatureVector) -> f64 {
        polynomial_expand(x)
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| p * w)
            .sum()
    }

    /// Outage probability and label; probability 0.5 maps to outage.
    pub fn predict(&self, x: &FeatureVector) -> (f64, Label) {
        let p = sigmoid(self.score(x));
        let label = if p >= 0.5 {
            Label::Outage
        } else {
            Label::Operational
        };
        (p, label)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != N_TERMS {
            return Err(OutageError::DimensionMismatch {
                expected: N_TERMS,
                actual: self.weights.len(),
            });
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(OutageError::Data("non-finite logistic weight".into()));
        }
        Ok(())
    }
}

pub fn predict_logreg(model: &LogRegModel, x: &FeatureVector) -> (f64, Label) {
    model.predict(x)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Expanded design matrix and 0/1 targets.
#[derive(Debug, Clone)]
pub struct Design {
    rows: Vec<[f64; N_TERMS]>,
    targets: Vec<f64>,
}

impl Design {
    pub fn new(dataset: &[LabeledSample]) -> Self {
        Self {
            rows: dataset
                .iter()
                .map(|s| polynomial_expand(&s.features))
                .collect(),
            targets: dataset
                .iter()
                .map(|s| if s.label.is_positive() { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn scores(&self, w: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(w).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Mean log-likelihood minus `λ/2 · |w₁..|²`.
    pub fn objective(&self, w: &[f64], lambda: f64) -> f64 {
        let n = self.len() as f64;
        let ll: f64 = self
            .scores(w)
            .iter()
            .zip(&self.targets)
            .map(|(&z, &t)| t * z - softplus(z))
            .sum();
        ll / n - 0.5 * lambda * w[1..].iter().map(|v| v * v).sum::<f64>()
    }

    pub fn gradient(&self, w: &[f64], lambda: f64) -> Vec<f64> {
        let n = self.len() as f64;
        let mut g = vec![0.0; N_TERMS];
        for (row, (&z, &t)) in self
            .rows
            .iter()
            .zip(self.scores(w).iter().zip(&self.targets))
        {
            let r = t - sigmoid(z);
            for (gk, xk) in g.iter_mut().zip(row) {
                *gk += r * xk;
            }
        }
        for (k, gk) in g.iter_mut().enumerate() {
            *gk /= n;
            if k > 0 {
                *gk -= lambda * w[k];
            }
        }
        g
    }

    /// Negated Hessian of the objective (positive semidefinite).
    fn neg_hessian(&self, w: &[f64], lambda: f64) -> DMatrix<f64> {
        let n = self.len() as f64;
        let mut h = DMatrix::<f64>::zeros(N_TERMS, N_TERMS);
        for (row, &z) in self.rows.iter().zip(self.scores(w).iter()) {
            let p = sigmoid(z);
            let wt = p * (1.0 - p) / n;
            for a in 0..N_TERMS {
                let ra = wt * row[a];
                for b in a..N_TERMS {
                    h[(a, b)] += ra * row[b];
                }
            }
        }
        for a in 0..N_TERMS {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
            if a > 0 {
                h[(a, a)] += lambda;
            }
        }
        h
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn train_logreg(dataset: &[LabeledSample], cfg: &LogRegConfig) -> Result<LogRegModel> {
    train_logreg_traced(dataset, cfg).map(|(m, _)| m)
}

/// Trains and also returns the objective after every accepted step, starting
/// with the value at zero weights.
pub fn train_logreg_traced(
    dataset: &[LabeledSample],
    cfg: &LogRegConfig,
) -> Result<(LogRegModel, Vec<f64>)> {
    cfg.validate()?;
    if dataset.iter().any(|s| !s.features.is_finite()) {
        return Err(OutageError::Data(
            "non-finite feature in training set".into(),
        ));
    }
    let pos = dataset.iter().filter(|s| s.label.is_positive()).count();
    if pos == 0 || pos == dataset.len() {
        return Err(OutageError::Training(
            "training set must contain both outage and operational samples".into(),
        ));
    }

    let design = Design::new(dataset);
    let lambda = cfg.lambda;
    let mut w = vec![0.0; N_TERMS];
    let mut obj = design.objective(&w, lambda);
    let mut grad = design.gradient(&w, lambda);
    let mut trace = vec![obj];
    let mut iterations = 0;

    while norm(&grad) > cfg.grad_tol && iterations < cfg.max_iter {
        iterations += 1;
        let g = DVector::from_column_slice(&grad);
        let mut h = design.neg_hessian(&w, lambda);
        let mut ridge = 0.0;
        let dir = loop {
            if let Some(ch) = h.clone().cholesky() {
                break ch.solve(&g);
            }
            // fall back toward gradient ascent when the curvature is singular
            if ridge > 1e8 {
                return Err(OutageError::Training(
                    "logistic curvature is not finite".into(),
                ));
            }
            let bump = if ridge == 0.0 { 1e-10 } else { ridge * 10.0 };
            for k in 0..N_TERMS {
                h[(k, k)] += bump - ridge;
            }
            ridge = bump;
        };
        let slope = g.dot(&dir);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = w
                .iter()
                .zip(dir.iter())
                .map(|(a, d)| a + step * d)
                .collect();
            let cand_obj = design.objective(&cand, lambda);
            if cand_obj >= obj + 1e-4 * step * slope {
                accepted = Some((cand, cand_obj));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, cand_obj)) => {
                w = cand;
                obj = cand_obj;
                grad = design.gradient(&w, lambda);
                trace.push(obj);
            }
            // no ascent possible at rounding level
            None => break,
        }
    }

    let grad_norm = norm(&grad);
    let model = LogRegModel {
        weights: w,
        lambda,
        info: LogRegInfo {
            iterations,
            converged: grad_norm <= cfg.grad_tol,
            grad_norm,
            objective: obj,
        },
    };
    model.validate()?;
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn basis_has_twenty_distinct_terms() {
        let mut seen = std::collections::HashSet::new();
        for m in MONOMIALS {
            assert!(m.iter().map(|&e| e as u32).sum::<u32>() <= 3);
            assert!(seen.insert(m));
        }
        assert_eq!(seen.len(), 20);
        assert_eq!(MONOMIALS[0], [0, 0, 0]);
        assert_eq!(MONOMIALS[1], [1, 0, 0]);
        assert_eq!(MONOMIALS[4], [2, 0, 0]);
        assert_eq!(MONOMIALS[19], [0, 0, 3]);
    }

    #[test]
    fn expansion_examples() {
        let z = polynomial_expand(&FeatureVector::new(0.0, 0.0, 0.0));
        assert_eq!(z[0], 1.0);
        assert!(z[1..].iter().all(|&v| v == 0.0));
        assert!(polynomial_expand(&FeatureVector::new(1.0, 1.0, 1.0))
            .iter()
            .all(|&v| v == 1.0));
        let e = polynomial_expand(&FeatureVector::new(0.5, 2.0, 3.0));
        assert_abs_diff_eq!(e[14], 0.5 * 2.0 * 3.0); // r d i
        assert_abs_diff_eq!(e[11], 0.25 * 2.0); // r² d
    }

    #[test]
    fn link_function() {
        let m = LogRegModel {
            weights: vec![0.0; N_TERMS],
            lambda: 0.0,
            info: LogRegInfo {
                iterations: 0,
                converged: true,
                grad_norm: 0.0,
                objective: 0.0,
            },
        };
        let (p, label) = m.predict(&FeatureVector::new(0.2, 0.4, 0.6));
        assert_eq!(p, 0.5);
        assert_eq!(label, Label::Outage);
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        for z in [-3.0, -0.1, 0.7, 12.0] {
            assert_abs_diff_eq!(sigmoid(z) + sigmoid(-z), 1.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(softplus(-800.0), 0.0);
        assert_abs_diff_eq!(softplus(800.0), 800.0);
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![LabeledSample::new(FeatureVector::new(0.1, 0.2, 0.3), Label::Outage); 3];
        assert!(matches!(
            train_logreg(&data, &LogRegConfig::default()),
            Err(OutageError::Training(_))
        ));
    }

    #[test]
    fn separable_data_stays_finite() {
        let data: Vec<LabeledSample> = (0..20)
            .map(|i| {
                let t = i as f64 / 19.0;
                let label = if t > 0.5 {
                    Label::Outage
                } else {
                    Label::Operational
                };
                LabeledSample::new(FeatureVector::new(t, 0.5, 0.5), label)
            })
            .collect();
        let m = train_logreg(&data, &LogRegConfig::default()).unwrap();
        assert!(m.weights.iter().all(|w| w.is_finite()));
        assert!(m.info.converged, "{:?}", m.info);
        assert!(m.info.grad_norm <= 1e-6);
        let correct = data
            .iter()
            .filter(|s| m.predict(&s.features).1 == s.label)
            .count();
        assert_eq!(correct, data.len());
    }
}
