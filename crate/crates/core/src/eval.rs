//! Confusion-matrix metrics and stratified k-fold cross-validation.
//!
//! Outage (`+1`) is the positive class throughout. Metrics whose denominator
//! is zero are reported as 0 and listed in [`EvaluationReport::undefined`].

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureVector, Label, LabeledSample};
use crate::error::{OutageError, Result};
use crate::logreg::{train_logreg, LogRegConfig, LogRegModel};
use crate::persist::Model;
use crate::smo::{train, SvmModel, SvmTrainConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Outage, Label::Outage) => self.tp += 1,
            (Label::Outage, Label::Operational) => self.fp += 1,
            (Label::Operational, Label::Outage) => self.fn_ += 1,
            (Label::Operational, Label::Operational) => self.tn += 1,
        }
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = ConfusionMatrix>>(iter: I) -> Self {
        iter.fold(ConfusionMatrix::default(), |a, b| a + b)
    }
}

pub fn confusion(predicted: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if predicted.len() != truth.len() {
        return Err(OutageError::DimensionMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        cm.record(p, t);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndefinedMetric {
    /// No positive predictions.
    Precision,
    /// No positive samples.
    Recall,
    /// Precision and recall are both zero.
    F1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<UndefinedMetric>,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> EvaluationReport {
    let mut undefined = Vec::new();
    let ratio = |num: usize, den: usize, which: UndefinedMetric, undefined: &mut Vec<_>| {
        if den == 0 {
            undefined.push(which);
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(
        cm.tp,
        cm.tp + cm.fp,
        UndefinedMetric::Precision,
        &mut undefined,
    );
    let recall = ratio(
        cm.tp,
        cm.tp + cm.fn_,
        UndefinedMetric::Recall,
        &mut undefined,
    );
    if precision + recall == 0.0 {
        undefined.push(UndefinedMetric::F1);
    }
    let total = cm.total();
    EvaluationReport {
        confusion: *cm,
        accuracy: if total == 0 {
            0.0
        } else {
            (cm.tp + cm.tn) as f64 / total as f64
        },
        precision,
        recall,
        f1: f1_score(precision, recall),
        undefined,
    }
}

/// Unweighted means of per-fold metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MeanMetrics {
    pub fn of(reports: &[EvaluationReport]) -> Self {
        let n = reports.len().max(1) as f64;
        let mean = |f: fn(&EvaluationReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Self {
            accuracy: mean(|r| r.accuracy),
            precision: mean(|r| r.precision),
            recall: mean(|r| r.recall),
            f1: mean(|r| r.f1),
        }
    }
}

/// Something that labels feature vectors.
pub trait Classifier {
    fn classify(&self, x: &FeatureVector) -> Label;
}

impl Classifier for SvmModel {
    fn classify(&self, x: &FeatureVector) -> Label {
        self.predict(x)
    }
}

impl Classifier for LogRegModel {
    fn classify(&self, x: &FeatureVector) -> Label {
        self.predict(x).1
    }
}

impl Classifier for Model {
    fn classify(&self, x: &FeatureVector) -> Label {
        self.predict(x)
    }
}

/// Deterministic training procedure usable by the cross-validation harness.
pub trait Trainer: Sync {
    type Model: Classifier + Send;

    fn fit(&self, train: &[LabeledSample]) -> Result<Self::Model>;
}

impl Trainer for SvmTrainConfig {
    type Model = SvmModel;

    fn fit(&self, data: &[LabeledSample]) -> Result<SvmModel> {
        train(data, self)
    }
}

impl Trainer for LogRegConfig {
    type Model = LogRegModel;

    fn fit(&self, data: &[LabeledSample]) -> Result<LogRegModel> {
        train_logreg(data, self)
    }
}

/// Adapts a closure into a [`Trainer`].
pub struct FnTrainer<F>(pub F);

impl<F, M> Trainer for FnTrainer<F>
where
    F: Fn(&[LabeledSample]) -> Result<M> + Sync,
    M: Classifier + Send,
{
    type Model = M;

    fn fit(&self, data: &[LabeledSample]) -> Result<M> {
        (self.0)(data)
    }
}

pub fn evaluate<C: Classifier + ?Sized>(model: &C, samples: &[LabeledSample]) -> EvaluationReport {
    let mut cm = ConfusionMatrix::default();
    for s in samples {
        cm.record(model.classify(&s.features), s.label);
    }
    metrics(&cm)
}

/// Stratified random partition of sample indices into `k` folds.
///
/// Each class is shuffled separately; outage indices and then operational
/// indices are dealt round-robin, so fold sizes differ by at most one and so
/// do per-fold class counts.
pub fn kfold_split(dataset: &[LabeledSample], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(OutageError::InvalidParameter(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if k > dataset.len() {
        return Err(OutageError::InvalidParameter(format!(
            "k = {k} exceeds dataset size {}",
            dataset.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| dataset[i].label.is_positive());
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut folds = vec![Vec::with_capacity(dataset.len() / k + 1); k];
    for (slot, idx) in pos.into_iter().chain(neg).enumerate() {
        folds[slot % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Stable fingerprint of a fold assignment, for checking paired comparisons.
pub fn fold_fingerprint(folds: &[Vec<usize>]) -> String {
    let mut h = DefaultHasher::new();
    folds.hash(&mut h);
    format!("{:016x}", h.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub k: usize,
    /// Headline numbers: unweighted means over folds.
    pub mean: MeanMetrics,
    /// Confusion counts summed over all validation folds, with their metrics.
    pub pooled: EvaluationReport,
    pub folds: Vec<EvaluationReport>,
    pub fold_hash: String,
}

pub fn cross_validate<T: Trainer>(
    trainer: &T,
    dataset: &[LabeledSample],
    k: usize,
    seed: u64,
) -> Result<CrossValidation> {
    let folds = kfold_split(dataset, k, seed)?;
    cross_validate_folds(trainer, dataset, &folds)
}

/// Cross-validates over a given partition; folds are trained in parallel.
pub fn cross_validate_folds<T: Trainer>(
    trainer: &T,
    dataset: &[LabeledSample],
    folds: &[Vec<usize>],
) -> Result<CrossValidation> {
    let mut fold_of = vec![usize::MAX; dataset.len()];
    for (f, idx) in folds.iter().enumerate() {
        for &i in idx {
            if i >= dataset.len() || fold_of[i] != usize::MAX {
                return Err(OutageError::InvalidParameter(
                    "folds must partition the dataset".into(),
                ));
            }
            fold_of[i] = f;
        }
    }
    if fold_of.contains(&usize::MAX) {
        return Err(OutageError::InvalidParameter(
            "folds must cover the dataset".into(),
        ));
    }

    let reports: Vec<EvaluationReport> = (0..folds.len())
        .into_par_iter()
        .map(|f| {
            let train: Vec<LabeledSample> = dataset
                .iter()
                .zip(&fold_of)
                .filter(|(_, &g)| g != f)
                .map(|(s, _)| *s)
                .collect();
            let test: Vec<LabeledSample> = folds[f].iter().map(|&i| dataset[i]).collect();
            let model = trainer.fit(&train).map_err(|e| OutageError::Fold {
                fold: f,
                source: Box::new(e),
            })?;
            Ok(evaluate(&model, &test))
        })
        .collect::<Result<_>>()?;

    let pooled_cm: ConfusionMatrix = reports.iter().map(|r| r.confusion).sum();
    Ok(CrossValidation {
        k: folds.len(),
        mean: MeanMetrics::of(&reports),
        pooled: metrics(&pooled_cm),
        folds: reports,
        fold_hash: fold_fingerprint(folds),
    })
}
