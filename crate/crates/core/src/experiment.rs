//! Experiment drivers: the kernel/penalty sweep, the model benchmark and the
//! pooled confusion report.
//!
//! Every driver splits the dataset once and reuses that partition for all of
//! its cells, so results are paired. Cells run in parallel; output order is
//! fixed by the configuration, not by completion order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledSample;
use crate::error::{OutageError, Result};
use crate::eval::{
    cross_validate_folds, fold_fingerprint, kfold_split, ConfusionMatrix, CrossValidation,
    EvaluationReport, MeanMetrics, Trainer,
};
use crate::kernel::{Kernel, DEFAULT_SIGMA_SQ};
use crate::logreg::{train_logreg, LogRegConfig};
use crate::persist::Model;
use crate::smo::{train, SvmTrainConfig};

/// Footnote attached to sweeps whose grid reaches below `c = 0.1`.
pub const SMALL_PENALTY_NOTE: &str =
    "c = 0.01 extends the usual 0.1..100 penalty grid downward; it is reported for completeness.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Kernels swept as table rows.
    pub kernels: Vec<Kernel>,
    /// Penalties swept as table columns.
    pub penalties: Vec<f64>,
    pub folds: usize,
    /// Seed of the fold partition.
    pub seed: u64,
    /// SMO KKT tolerance.
    pub tol: f64,
    /// SMO outer-pass cap.
    pub max_iter: usize,
    /// Penalty used by the benchmark and by default for single models.
    pub benchmark_c: f64,
    pub logreg: LogRegConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let svm = SvmTrainConfig::default();
        Self {
            kernels: vec![
                Kernel::Linear,
                Kernel::quadratic(),
                Kernel::cubic(),
                Kernel::gaussian(DEFAULT_SIGMA_SQ),
            ],
            penalties: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            folds: 5,
            seed: 1,
            tol: svm.tol,
            max_iter: svm.max_iter,
            benchmark_c: 1.0,
            logreg: LogRegConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() {
            return Err(OutageError::Config("kernel list is empty".into()));
        }
        if self.penalties.is_empty() {
            return Err(OutageError::Config("penalty list is empty".into()));
        }
        if self.folds < 2 {
            return Err(OutageError::Config(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        for k in &self.kernels {
            k.validate()
                .map_err(|e| OutageError::Config(e.to_string()))?;
        }
        for &c in self.penalties.iter().chain([&self.benchmark_c]) {
            self.svm(Kernel::Linear, c)
                .validate()
                .map_err(|e| OutageError::Config(e.to_string()))?;
        }
        self.logreg
            .validate()
            .map_err(|e| OutageError::Config(e.to_string()))
    }

    pub fn svm(&self, kernel: Kernel, c: f64) -> SvmTrainConfig {
        SvmTrainConfig {
            c,
            tol: self.tol,
            max_iter: self.max_iter,
            kernel,
        }
    }

    pub fn trainer(&self, spec: ModelSpec) -> ModelTrainer {
        ModelTrainer {
            spec,
            tol: self.tol,
            max_iter: self.max_iter,
            logreg: self.logreg,
        }
    }
}

/// Which model to train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case")]
pub enum ModelSpec {
    Svm { kernel: Kernel, c: f64 },
    LogisticRegression,
}

impl ModelSpec {
    /// Row label used in report tables, e.g. `Gaussian SVM`.
    pub fn display_name(&self) -> String {
        match self {
            ModelSpec::Svm { kernel, .. } => format!("{} SVM", kernel.display_name()),
            ModelSpec::LogisticRegression => "Logistic Reg.".into(),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Svm { kernel, c } => write!(f, "svm({kernel}, c={c})"),
            ModelSpec::LogisticRegression => f.write_str("logreg"),
        }
    }
}

/// Accepts `logreg` / `logistic_regression`, or a kernel name (the penalty
/// then defaults to 1).
impl FromStr for ModelSpec {
    type Err = OutageError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "logreg" | "logistic_regression" | "logistic" => Ok(ModelSpec::LogisticRegression),
            other => Ok(ModelSpec::Svm {
                kernel: other.parse()?,
                c: 1.0,
            }),
        }
    }
}

/// Trains either model family into a [`Model`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelTrainer {
    pub spec: ModelSpec,
    pub tol: f64,
    pub max_iter: usize,
    pub logreg: LogRegConfig,
}

impl Trainer for ModelTrainer {
    type Model = Model;

    fn fit(&self, data: &[LabeledSample]) -> Result<Model> {
        match self.spec {
            ModelSpec::Svm { kernel, c } => {
                let cfg = SvmTrainConfig {
                    c,
                    tol: self.tol,
                    max_iter: self.max_iter,
                    kernel,
                };
                Ok(train(data, &cfg)?.into())
            }
            ModelSpec::LogisticRegression => Ok(train_logreg(data, &self.logreg)?.into()),
        }
    }
}

/// Outcome of cross-validating one model; failures are kept, not propagated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean: Option<MeanMetrics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pooled: Option<ConfusionMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fold_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl CellResult {
    fn from_cv(r: Result<CrossValidation>) -> Self {
        match r {
            Ok(cv) => Self {
                mean: Some(cv.mean),
                pooled: Some(cv.pooled.confusion),
                fold_hash: Some(cv.fold_hash),
                error: None,
            },
            Err(e) => Self {
                mean: None,
                pooled: None,
                fold_hash: None,
                error: Some(e.to_string()),
            },
        }
    }

    pub fn f1(&self) -> Option<f64> {
        self.mean.map(|m| m.f1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridIndex {
    pub row: usize,
    pub col: usize,
}

/// Mean F₁ over a kernel × penalty grid. `cells[row][col]` pairs
/// `kernels[row]` with `penalties[col]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub folds: usize,
    pub seed: u64,
    pub fold_hash: String,
    pub kernels: Vec<Kernel>,
    pub penalties: Vec<f64>,
    pub cells: Vec<Vec<CellResult>>,
    /// Highest mean F₁ among successful cells; first in row-major order on ties.
    pub best: Option<GridIndex>,
    pub notes: Vec<String>,
}

pub fn sweep(dataset: &[LabeledSample], cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let folds = kfold_split(dataset, cfg.folds, cfg.seed)?;
    let cols = cfg.penalties.len();
    let flat: Vec<CellResult> = (0..cfg.kernels.len() * cols)
        .into_par_iter()
        .map(|i| {
            let svm = cfg.svm(cfg.kernels[i / cols], cfg.penalties[i % cols]);
            CellResult::from_cv(cross_validate_folds(&svm, dataset, &folds))
        })
        .collect();

    let mut best: Option<(GridIndex, f64)> = None;
    for (i, cell) in flat.iter().enumerate() {
        if let Some(f1) = cell.f1() {
            if best.is_none_or(|(_, b)| f1 > b) {
                best = Some((
                    GridIndex {
                        row: i / cols,
                        col: i % cols,
                    },
                    f1,
                ));
            }
        }
    }
    let mut notes = Vec::new();
    if cfg.penalties.iter().any(|&c| c < 0.1) {
        notes.push(SMALL_PENALTY_NOTE.to_string());
    }
    let mut cells = Vec::with_capacity(cfg.kernels.len());
    let mut it = flat.into_iter();
    for _ in 0..cfg.kernels.len() {
        cells.push(it.by_ref().take(cols).collect());
    }
    Ok(SweepReport {
        folds: cfg.folds,
        seed: cfg.seed,
        fold_hash: fold_fingerprint(&folds),
        kernels: cfg.kernels.clone(),
        penalties: cfg.penalties.clone(),
        cells,
        best: best.map(|(g, _)| g),
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub name: String,
    pub model: ModelSpec,
    pub result: CellResult,
}

/// Each configured kernel at the benchmark penalty, plus logistic regression,
/// on one shared partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub folds: usize,
    pub seed: u64,
    pub c: f64,
    pub fold_hash: String,
    pub rows: Vec<BenchmarkRow>,
}

pub fn benchmark(dataset: &[LabeledSample], cfg: &ExperimentConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let folds = kfold_split(dataset, cfg.folds, cfg.seed)?;
    let specs: Vec<ModelSpec> = cfg
        .kernels
        .iter()
        .map(|&kernel| ModelSpec::Svm {
            kernel,
            c: cfg.benchmark_c,
        })
        .chain([ModelSpec::LogisticRegression])
        .collect();
    let rows = specs
        .par_iter()
        .map(|&spec| BenchmarkRow {
            name: spec.display_name(),
            model: spec,
            result: CellResult::from_cv(cross_validate_folds(&cfg.trainer(spec), dataset, &folds)),
        })
        .collect();
    Ok(BenchmarkReport {
        folds: cfg.folds,
        seed: cfg.seed,
        c: cfg.benchmark_c,
        fold_hash: fold_fingerprint(&folds),
        rows,
    })
}

/// Percentages of each actual-class row, rounded to one decimal when shown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowPercentages {
    /// Actual operational: predicted operational, predicted outage.
    pub operational: [f64; 2],
    /// Actual outage: predicted operational, predicted outage.
    pub outage: [f64; 2],
}

pub fn row_percentages(cm: &ConfusionMatrix) -> RowPercentages {
    let row = |a: usize, b: usize| {
        let n = a + b;
        if n == 0 {
            [0.0, 0.0]
        } else {
            [100.0 * a as f64 / n as f64, 100.0 * b as f64 / n as f64]
        }
    };
    RowPercentages {
        operational: row(cm.tn, cm.fp),
        outage: row(cm.fn_, cm.tp),
    }
}

/// `"451 (90.2%)"`.
pub fn count_with_percent(count: usize, pct: f64) -> String {
    format!("{count} ({pct:.1}%)")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub name: String,
    pub model: ModelSpec,
    pub folds: usize,
    pub seed: u64,
    pub fold_hash: String,
    /// Counts summed over validation folds.
    pub pooled: EvaluationReport,
    pub percentages: RowPercentages,
    /// Fold-averaged metrics, for comparison with the pooled ones.
    pub mean: MeanMetrics,
}

impl ConfusionReport {
    pub fn from_cv(model: ModelSpec, seed: u64, cv: &CrossValidation) -> Self {
        Self {
            name: model.display_name(),
            model,
            folds: cv.k,
            seed,
            fold_hash: cv.fold_hash.clone(),
            percentages: row_percentages(&cv.pooled.confusion),
            pooled: cv.pooled.clone(),
            mean: cv.mean,
        }
    }
}

pub fn confusion_report(
    dataset: &[LabeledSample],
    model: ModelSpec,
    cfg: &ExperimentConfig,
) -> Result<ConfusionReport> {
    cfg.validate()?;
    let folds = kfold_split(dataset, cfg.folds, cfg.seed)?;
    let cv = cross_validate_folds(&cfg.trainer(model), dataset, &folds)?;
    Ok(ConfusionReport::from_cv(model, cfg.seed, &cv))
}

/// Trains one model on the whole dataset.
pub fn train_model(
    dataset: &[LabeledSample],
    model: ModelSpec,
    cfg: &ExperimentConfig,
) -> Result<Model> {
    cfg.trainer(model).fit(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_dataset, GenConfig};
    use crate::eval::cross_validate;

    fn small() -> Vec<LabeledSample> {
        generate_dataset(&GenConfig {
            sample_count: 120,
            seed: 4,
            ..GenConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn table_percentages() {
        let cm = ConfusionMatrix {
            tp: 413,
            fp: 49,
            fn_: 87,
            tn: 451,
        };
        let p = row_percentages(&cm);
        let shown: Vec<String> = [
            (cm.tn, p.operational[0]),
            (cm.fp, p.operational[1]),
            (cm.fn_, p.outage[0]),
            (cm.tp, p.outage[1]),
        ]
        .iter()
        .map(|&(n, x)| count_with_percent(n, x))
        .collect();
        assert_eq!(
            shown,
            ["451 (90.2%)", "49 (9.8%)", "87 (17.4%)", "413 (82.6%)"]
        );
        for row in [p.operational, p.outage] {
            assert!((row[0] + row[1] - 100.0).abs() <= 0.1);
        }
    }

    #[test]
    fn perfect_classifier_percentages() {
        let p = row_percentages(&ConfusionMatrix {
            tp: 7,
            fp: 0,
            fn_: 0,
            tn: 5,
        });
        assert_eq!(p.operational, [100.0, 0.0]);
        assert_eq!(p.outage, [0.0, 100.0]);
    }

    #[test]
    fn single_cell_sweep_matches_cross_validate() {
        let data = small();
        let cfg = ExperimentConfig {
            kernels: vec![Kernel::gaussian(0.2)],
            penalties: vec![1.0],
            ..ExperimentConfig::default()
        };
        let s = sweep(&data, &cfg).unwrap();
        let cv = cross_validate(
            &cfg.svm(Kernel::gaussian(0.2), 1.0),
            &data,
            cfg.folds,
            cfg.seed,
        )
        .unwrap();
        assert_eq!(s.cells[0][0].mean, Some(cv.mean));
        assert_eq!(s.cells[0][0].pooled, Some(cv.pooled.confusion));
        assert_eq!(s.best, Some(GridIndex { row: 0, col: 0 }));
        assert!(s.notes.is_empty());
    }

    #[test]
    fn sweep_records_cell_failures_and_continues() {
        let data = small();
        let cfg = ExperimentConfig {
            kernels: vec![Kernel::Linear],
            penalties: vec![1.0, 10.0],
            ..ExperimentConfig::default()
        };
        // every training fold lacks the operational class
        let one_class: Vec<LabeledSample> = data
            .iter()
            .filter(|s| s.label == crate::Label::Outage)
            .copied()
            .collect();
        let s = sweep(&one_class, &cfg).unwrap();
        assert!(s.cells[0]
            .iter()
            .all(|c| c.error.is_some() && c.mean.is_none()));
        assert_eq!(s.best, None);
        let ok = sweep(&data, &cfg).unwrap();
        assert!(ok.cells[0].iter().all(|c| c.mean.is_some()));
    }

    #[test]
    fn benchmark_reuses_folds() {
        let data = small();
        let b = benchmark(&data, &ExperimentConfig::default()).unwrap();
        assert_eq!(b.rows.len(), 5);
        assert_eq!(b.rows[4].model, ModelSpec::LogisticRegression);
        for r in &b.rows {
            assert_eq!(
                r.result.fold_hash.as_deref(),
                Some(b.fold_hash.as_str()),
                "{}",
                r.name
            );
        }
        let names: Vec<&str> = b.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "Linear SVM",
                "Quadratic SVM",
                "Cubic SVM",
                "Gaussian SVM",
                "Logistic Reg."
            ]
        );
    }

    #[test]
    fn invalid_experiment_configs() {
        let d = ExperimentConfig::default();
        for cfg in [
            ExperimentConfig {
                kernels: vec![],
                ..d.clone()
            },
            ExperimentConfig {
                penalties: vec![],
                ..d.clone()
            },
            ExperimentConfig {
                folds: 1,
                ..d.clone()
            },
            ExperimentConfig {
                penalties: vec![1.0, -1.0],
                ..d.clone()
            },
        ] {
            assert!(matches!(cfg.validate(), Err(OutageError::Config(_))));
        }
    }

    #[test]
    fn model_spec_parsing() {
        assert_eq!(
            "logreg".parse::<ModelSpec>().unwrap(),
            ModelSpec::LogisticRegression
        );
        assert_eq!(
            "poly3".parse::<ModelSpec>().unwrap(),
            ModelSpec::Svm {
                kernel: Kernel::cubic(),
                c: 1.0
            }
        );
        assert!("tree".parse::<ModelSpec>().is_err());
    }
}
