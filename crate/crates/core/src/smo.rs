//! Soft-margin kernel SVM trained with Sequential Minimal Optimization.
//!
//! The dual problem
//!
//! ```text
//! max  Σ αᵢ − ½ ΣΣ αᵢ αⱼ yᵢ yⱼ k(xᵢ, xⱼ)
//! s.t. 0 ≤ αᵢ ≤ c,  Σ αᵢ yᵢ = 0
//! ```
//!
//! is solved two multipliers at a time. Working-set selection follows Platt:
//! the outer loop alternates full passes with passes over the non-bound
//! multipliers, examining KKT violators; the partner is the non-bound sample
//! maximizing `|E₁ − E₂|`, falling back to sequential scans of the non-bound
//! set and then of all samples. A prediction-error cache `Eᵢ = f(xᵢ) − yᵢ` is
//! kept for every sample and updated after each pair step.
//!
//! One reported iteration is one outer-loop pass; pair updates are counted
//! separately.

use serde::{Deserialize, Serialize};

use crate::data::{FeatureVector, Label, LabeledSample};
use crate::error::{OutageError, Result};
use crate::kernel::{gram_matrix, GramMatrix, Kernel};

/// Pairs whose curvature `k₁₁ + k₂₂ − 2k₁₂` is at or below this are skipped.
pub const MIN_CURVATURE: f64 = 1e-12;

/// Relative change below which a pair step counts as no progress.
const STEP_EPS: f64 = 1e-12;

/// Multipliers within `SNAP * c` of a bound are placed on it.
const SNAP: f64 = 1e-14;

/// Extra full re-examinations (with a freshly recomputed error cache) allowed
/// after the heuristic loop stops on its own.
const MAX_REFRESHES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmTrainConfig {
    /// Penalty on slack.
    pub c: f64,
    /// KKT tolerance.
    pub tol: f64,
    /// Cap on outer-loop passes.
    pub max_iter: usize,
    pub kernel: Kernel,
}

impl Default for SvmTrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_iter: 15_000,
            kernel: Kernel::gaussian(crate::kernel::DEFAULT_SIGMA_SQ),
        }
    }
}

impl SvmTrainConfig {
    pub fn new(kernel: Kernel, c: f64) -> Self {
        Self {
            kernel,
            c,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(OutageError::InvalidParameter(format!(
                "penalty c must be positive, got {}",
                self.c
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(OutageError::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(OutageError::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        self.kernel.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    /// Outer-loop passes.
    pub iterations: usize,
    /// Accepted two-multiplier updates.
    pub pair_updates: usize,
    /// True when the final KKT violation is within tolerance before the pass cap.
    pub converged: bool,
    /// Maximum KKT violation over the training set at return.
    pub kkt_violation: f64,
    pub dual_objective: f64,
}

/// Solution of the dual over a whole training set.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub info: TrainingInfo,
}

/// State after one accepted pair update, passed to training observers.
#[derive(Debug)]
pub struct SmoStep<'a> {
    pub first: usize,
    pub second: usize,
    pub alphas: &'a [f64],
    pub bias: f64,
    pub pair_updates: usize,
}

/// Dual objective `Σ αᵢ − ½ ΣΣ αᵢ αⱼ yᵢ yⱼ Gᵢⱼ`.
pub fn dual_objective(alphas: &[f64], labels: &[f64], gram: &GramMatrix) -> Result<f64> {
    let n = gram.size();
    for len in [alphas.len(), labels.len()] {
        if len != n {
            return Err(OutageError::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let ay: Vec<f64> = alphas.iter().zip(labels).map(|(a, y)| a * y).collect();
    let quad: f64 = (0..n)
        .map(|i| {
            let row = gram.row(i);
            ay[i] * row.iter().zip(&ay).map(|(g, v)| g * v).sum::<f64>()
        })
        .sum();
    Ok(alphas.iter().sum::<f64>() - 0.5 * quad)
}

/// Violation of the KKT conditions for one sample with margin `y·f(x)`.
pub fn kkt_violation(alpha: f64, c: f64, margin: f64) -> f64 {
    if alpha <= 0.0 {
        (1.0 - margin).max(0.0)
    } else if alpha >= c {
        (margin - 1.0).max(0.0)
    } else {
        (margin - 1.0).abs()
    }
}

struct Solver<'a, F: FnMut(&SmoStep<'_>)> {
    gram: &'a GramMatrix,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    err: Vec<f64>,
    b: f64,
    pair_updates: usize,
    observer: F,
}

impl<'a, F: FnMut(&SmoStep<'_>)> Solver<'a, F> {
    fn new(gram: &'a GramMatrix, y: &'a [f64], c: f64, tol: f64, observer: F) -> Self {
        let n = y.len();
        Self {
            gram,
            y,
            c,
            tol,
            alpha: vec![0.0; n],
            err: y.iter().map(|v| -v).collect(),
            b: 0.0,
            pair_updates: 0,
            observer,
        }
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn snap(&self, a: f64) -> f64 {
        let eps = SNAP * self.c;
        if a < eps {
            0.0
        } else if a > self.c - eps {
            self.c
        } else {
            a
        }
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let c = self.c;
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;

        let (lo, hi) = if y1 != y2 {
            ((a2_old - a1_old).max(0.0), (c + a2_old - a1_old).min(c))
        } else {
            ((a1_old + a2_old - c).max(0.0), (a1_old + a2_old).min(c))
        };
        if lo >= hi {
            return false;
        }

        let k11 = self.gram.get(i1, i1);
        let k12 = self.gram.get(i1, i2);
        let k22 = self.gram.get(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;
        if eta <= MIN_CURVATURE {
            return false;
        }

        let a2 = self.snap((a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi));
        if (a2 - a2_old).abs() < STEP_EPS * (a2 + a2_old + STEP_EPS) {
            return false;
        }
        let a1 = self.snap((a1_old + s * (a2_old - a2)).clamp(0.0, c));

        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        let b_new = if a1 > 0.0 && a1 < c {
            b1
        } else if a2 > 0.0 && a2 < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = b_new - self.b;

        let (row1, row2) = (self.gram.row(i1), self.gram.row(i2));
        for (k, e) in self.err.iter_mut().enumerate() {
            *e += d1 * row1[k] + d2 * row2[k] + db;
        }
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        self.b = b_new;
        self.pair_updates += 1;
        (self.observer)(&SmoStep {
            first: i1,
            second: i2,
            alphas: &self.alpha,
            bias: self.b,
            pair_updates: self.pair_updates,
        });
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let a2 = self.alpha[i2];
        let e2 = self.err[i2];
        let r2 = e2 * self.y[i2];
        let violates = (r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0);
        if !violates {
            return false;
        }

        let n = self.alpha.len();
        let free: Vec<usize> = (0..n).filter(|&i| self.is_free(i)).collect();

        if free.len() > 1 {
            let mut best = None;
            let mut best_gap = -1.0;
            for &i in &free {
                let gap = (self.err[i] - e2).abs();
                if gap > best_gap {
                    best_gap = gap;
                    best = Some(i);
                }
            }
            if let Some(i1) = best {
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }

        if !free.is_empty() {
            let start = self.pair_updates % free.len();
            for k in 0..free.len() {
                let i1 = free[(start + k) % free.len()];
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }

        let start = self.pair_updates % n;
        for k in 0..n {
            let i1 = (start + k) % n;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn refresh_errors(&mut self) {
        let ay: Vec<f64> = self.alpha.iter().zip(self.y).map(|(a, y)| a * y).collect();
        for i in 0..self.err.len() {
            let f: f64 = self.gram.row(i).iter().zip(&ay).map(|(g, v)| g * v).sum();
            self.err[i] = f + self.b - self.y[i];
        }
    }

    /// With every multiplier at a bound no pair step pins the bias, so it can
    /// sit far from where the bounded KKT conditions allow. Moves it to the
    /// middle of that interval, which minimizes the largest violation.
    fn center_bias_if_unpinned(&mut self) {
        let n = self.alpha.len();
        if (0..n).any(|i| self.is_free(i)) {
            return;
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            // kernel part of the output, without the bias
            let g = self.err[i] - self.b + self.y[i];
            let edge = self.y[i] - g;
            // y f >= 1 at zero, y f <= 1 at c
            if (self.alpha[i] == 0.0) == (self.y[i] > 0.0) {
                lo = lo.max(edge);
            } else {
                hi = hi.min(edge);
            }
        }
        let b = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => return,
        };
        let db = b - self.b;
        for e in &mut self.err {
            *e += db;
        }
        self.b = b;
    }

    fn max_violation(&self) -> f64 {
        (0..self.alpha.len())
            .map(|i| {
                let margin = self.y[i] * (self.err[i] + self.y[i]);
                kkt_violation(self.alpha[i], self.c, margin)
            })
            .fold(0.0, f64::max)
    }

    /// Runs the outer loop; returns (passes, hit_cap).
    fn run(&mut self, max_passes: usize) -> (usize, bool) {
        let n = self.alpha.len();
        let mut passes = 0;
        let mut refreshes = 0;
        let mut examine_all = true;
        let mut changed = 0usize;
        loop {
            while changed > 0 || examine_all {
                if passes >= max_passes {
                    return (passes, true);
                }
                changed = 0;
                if examine_all {
                    for i in 0..n {
                        changed += usize::from(self.examine(i));
                    }
                } else {
                    for i in 0..n {
                        if self.is_free(i) {
                            changed += usize::from(self.examine(i));
                        }
                    }
                }
                passes += 1;
                if examine_all {
                    examine_all = false;
                } else if changed == 0 {
                    examine_all = true;
                }
            }
            // The incremental cache drifts by rounding; confirm against a fresh one.
            self.refresh_errors();
            self.center_bias_if_unpinned();
            if self.max_violation() <= self.tol || refreshes >= MAX_REFRESHES {
                return (passes, false);
            }
            refreshes += 1;
            examine_all = true;
        }
    }
}

/// Solves the dual for a precomputed Gram matrix and ±1 labels.
pub fn solve_dual<F: FnMut(&SmoStep<'_>)>(
    gram: &GramMatrix,
    labels: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
    observer: F,
) -> Result<DualSolution> {
    if labels.len() != gram.size() {
        return Err(OutageError::DimensionMismatch {
            expected: gram.size(),
            actual: labels.len(),
        });
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(OutageError::Training("labels must be +1 or -1".into()));
    }
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(OutageError::Training(
            "training set must contain both outage and operational samples".into(),
        ));
    }
    let mut solver = Solver::new(gram, labels, c, tol, observer);
    let (iterations, hit_cap) = solver.run(max_iter);
    solver.refresh_errors();
    solver.center_bias_if_unpinned();
    let kkt = solver.max_violation();
    let objective = dual_objective(&solver.alpha, labels, gram)?;
    Ok(DualSolution {
        info: TrainingInfo {
            iterations,
            pair_updates: solver.pair_updates,
            converged: !hit_cap && kkt <= tol,
            kkt_violation: kkt,
            dual_objective: objective,
        },
        alphas: solver.alpha,
        bias: solver.b,
    })
}

/// Trained classifier: kernel expansion over the support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Vec<FeatureVector>,
    /// `αᵢ yᵢ` for each support vector.
    pub coefficients: Vec<f64>,
    /// Position of each support vector in the training set.
    pub support_indices: Vec<usize>,
    pub bias: f64,
    pub info: TrainingInfo,
}

impl SvmModel {
    pub fn decision_value(&self, x: &FeatureVector) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, coef)| coef * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Label by sign of the decision value; zero maps to outage.
    pub fn predict(&self, x: &FeatureVector) -> Label {
        Label::from_score(self.decision_value(x))
    }

    /// Primal weight vector `Σ αᵢ yᵢ xᵢ`, available for the linear kernel only.
    pub fn linear_weights(&self) -> Option<[f64; 3]> {
        if self.kernel != Kernel::Linear {
            return None;
        }
        let mut w = [0.0; 3];
        for (sv, coef) in self.support_vectors.iter().zip(&self.coefficients) {
            for (wk, xk) in w.iter_mut().zip(sv.to_array()) {
                *wk += coef * xk;
            }
        }
        Some(w)
    }

    /// Multiplier αᵢ for every training sample (zero for non-support vectors).
    pub fn alphas(&self, n_train: usize) -> Vec<f64> {
        let mut alphas = vec![0.0; n_train];
        for (&i, coef) in self.support_indices.iter().zip(&self.coefficients) {
            if i < n_train {
                alphas[i] = coef.abs();
            }
        }
        alphas
    }
}

pub fn decision_value(model: &SvmModel, x: &FeatureVector) -> f64 {
    model.decision_value(x)
}

pub fn predict(model: &SvmModel, x: &FeatureVector) -> Label {
    model.predict(x)
}

fn validate_dataset(dataset: &[LabeledSample]) -> Result<()> {
    if let Some((i, _)) = dataset
        .iter()
        .enumerate()
        .find(|(_, s)| !s.features.is_finite())
    {
        return Err(OutageError::Data(format!(
            "sample {i} has a non-finite feature"
        )));
    }
    Ok(())
}

pub fn train(dataset: &[LabeledSample], cfg: &SvmTrainConfig) -> Result<SvmModel> {
    train_with_observer(dataset, cfg, |_| {})
}

/// Like [`train`], calling `observer` after every accepted pair update.
pub fn train_with_observer<F: FnMut(&SmoStep<'_>)>(
    dataset: &[LabeledSample],
    cfg: &SvmTrainConfig,
    observer: F,
) -> Result<SvmModel> {
    cfg.validate()?;
    validate_dataset(dataset)?;
    let xs: Vec<FeatureVector> = dataset.iter().map(|s| s.features).collect();
    let ys: Vec<f64> = dataset.iter().map(LabeledSample::y).collect();
    let gram = gram_matrix(&cfg.kernel, &xs);
    let sol = solve_dual(&gram, &ys, cfg.c, cfg.tol, cfg.max_iter, observer)?;

    let mut model = SvmModel {
        kernel: cfg.kernel,
        c: cfg.c,
        support_vectors: Vec::new(),
        coefficients: Vec::new(),
        support_indices: Vec::new(),
        bias: sol.bias,
        info: sol.info,
    };
    for (i, &a) in sol.alphas.iter().enumerate() {
        if a > 0.0 {
            model.support_vectors.push(xs[i]);
            model.coefficients.push(a * ys[i]);
            model.support_indices.push(i);
        }
    }
    Ok(model)
}

/// Largest KKT violation of `model` over the dataset it was trained on.
pub fn kkt_max_violation(model: &SvmModel, dataset: &[LabeledSample], cfg: &SvmTrainConfig) -> f64 {
    let alphas = model.alphas(dataset.len());
    dataset
        .iter()
        .zip(&alphas)
        .map(|(s, &a)| kkt_violation(a, cfg.c, s.y() * model.decision_value(&s.features)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_points() -> Vec<LabeledSample> {
        vec![
            LabeledSample::new(FeatureVector::new(0.0, 0.0, 0.0), Label::Operational),
            LabeledSample::new(FeatureVector::new(1.0, 0.0, 0.0), Label::Outage),
        ]
    }

    fn linear(c: f64) -> SvmTrainConfig {
        SvmTrainConfig::new(Kernel::Linear, c)
    }

    #[test]
    fn two_point_bisector() {
        let data = two_points();
        let cfg = linear(100.0);
        let m = train(&data, &cfg).unwrap();
        assert_abs_diff_eq!(
            m.decision_value(&FeatureVector::new(0.5, 0.0, 0.0)),
            0.0,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(m.decision_value(&data[1].features), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m.decision_value(&data[0].features), -1.0, epsilon = 1e-6);
        // analytic optimum: α = (2, 2), b = -1, dual objective 2
        assert_abs_diff_eq!(m.bias, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.info.dual_objective, 2.0, epsilon = 1e-9);
        assert!(kkt_max_violation(&m, &data, &cfg) <= 1e-9);
        assert!(m.info.converged);
        let w = m.linear_weights().unwrap();
        assert_abs_diff_eq!(w[0], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn predict_tie_break() {
        let mut m = train(&two_points(), &linear(100.0)).unwrap();
        m.support_vectors.clear();
        m.coefficients.clear();
        m.bias = 0.0;
        assert_eq!(m.predict(&FeatureVector::new(0.3, 0.3, 0.3)), Label::Outage);
        m.bias = -0.1;
        assert_eq!(
            m.predict(&FeatureVector::new(0.3, 0.3, 0.3)),
            Label::Operational
        );
        m.bias = 0.1;
        assert_eq!(m.predict(&FeatureVector::new(0.3, 0.3, 0.3)), Label::Outage);
    }

    #[test]
    fn zeroed_model_violates_margins() {
        let data = two_points();
        let cfg = linear(100.0);
        let mut m = train(&data, &cfg).unwrap();
        m.support_vectors.clear();
        m.coefficients.clear();
        m.support_indices.clear();
        m.bias = 0.0;
        assert!(kkt_max_violation(&m, &data, &cfg) > 0.0);
    }

    #[test]
    fn dual_objective_examples() {
        let xs = [FeatureVector::new(0.0, 0.0, 0.0)];
        let g = gram_matrix(&Kernel::gaussian(0.5), &xs);
        assert_eq!(dual_objective(&[0.0], &[1.0], &g).unwrap(), 0.0);
        assert_eq!(dual_objective(&[1.0], &[1.0], &g).unwrap(), 0.5);
        assert!(matches!(
            dual_objective(&[1.0, 2.0], &[1.0], &g),
            Err(OutageError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn training_errors() {
        let one_class = vec![
            LabeledSample::new(FeatureVector::new(0.1, 0.1, 0.1), Label::Outage),
            LabeledSample::new(FeatureVector::new(0.2, 0.1, 0.1), Label::Outage),
        ];
        assert!(matches!(
            train(&one_class, &SvmTrainConfig::default()),
            Err(OutageError::Training(_))
        ));
        let mut bad = two_points();
        bad[0].features.distance = f64::NAN;
        assert!(matches!(
            train(&bad, &SvmTrainConfig::default()),
            Err(OutageError::Data(_))
        ));
        assert!(train(&two_points(), &linear(0.0)).is_err());
        assert!(train(
            &two_points(),
            &SvmTrainConfig {
                tol: 0.0,
                ..linear(1.0)
            }
        )
        .is_err());
        assert!(train(
            &two_points(),
            &SvmTrainConfig {
                max_iter: 0,
                ..linear(1.0)
            }
        )
        .is_err());
    }

    #[test]
    fn pass_cap_is_reported() {
        let data: Vec<LabeledSample> = (0..40)
            .map(|i| {
                let t = i as f64 / 40.0;
                let label = if (t * 17.0).fract() > 0.5 {
                    Label::Outage
                } else {
                    Label::Operational
                };
                LabeledSample::new(
                    FeatureVector::new(t, (t * 3.0).fract(), (t * 7.0).fract()),
                    label,
                )
            })
            .collect();
        let cfg = SvmTrainConfig {
            max_iter: 1,
            ..SvmTrainConfig::new(Kernel::gaussian(0.05), 10.0)
        };
        let m = train(&data, &cfg).unwrap();
        assert_eq!(m.info.iterations, 1);
        assert!(!m.info.converged);
    }

    #[test]
    fn duplicate_points_do_not_divide_by_zero() {
        let x = FeatureVector::new(0.5, 0.5, 0.5);
        let data = vec![
            LabeledSample::new(x, Label::Outage),
            LabeledSample::new(x, Label::Outage),
            LabeledSample::new(FeatureVector::new(0.1, 0.1, 0.1), Label::Operational),
        ];
        let m = train(&data, &SvmTrainConfig::new(Kernel::gaussian(0.5), 1.0)).unwrap();
        assert!(m.bias.is_finite());
        assert!(m.coefficients.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn bias_is_centered_when_every_multiplier_is_bounded() {
        // small c leaves all multipliers at 0 or c, so no pair step sets b
        let data = vec![
            LabeledSample::new(FeatureVector::new(0.621, 0.956, 0.276), Label::Outage),
            LabeledSample::new(FeatureVector::new(0.417, 0.795, 0.098), Label::Operational),
            LabeledSample::new(FeatureVector::new(0.188, 0.373, 0.334), Label::Operational),
        ];
        let cfg = SvmTrainConfig {
            tol: 1e-6,
            ..linear(0.1)
        };
        let m = train(&data, &cfg).unwrap();
        assert!(m.alphas(3).iter().all(|&a| a == 0.0 || a == cfg.c));
        assert!(m.info.converged, "{:?}", m.info);
        assert!(kkt_max_violation(&m, &data, &cfg) <= 1e-6);
    }
}
