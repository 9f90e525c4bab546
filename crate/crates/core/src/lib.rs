//! Predicting power-grid component outages under an approaching hurricane.
//!
//! Each component is described by three normalized features: its resilience
//! index, its distance from the hurricane center and the hurricane intensity.
//! A soft-margin kernel SVM trained with SMO separates outage (`+1`) from
//! operational (`-1`) components; a cubic polynomial logistic regression serves
//! as the benchmark.
//!
//! - [`hazard`]: Poisson hurricane occurrence, category probabilities, fragility
//!   curves and the resilience index.
//! - [`datagen`]: synthetic class-conditional dataset generator.
//! - [`kernel`]: kernel functions and Gram matrices.
//! - [`smo`]: dual solver and SVM model.
//! - [`logreg`]: polynomial logistic regression baseline.
//! - [`eval`]: confusion metrics and stratified k-fold cross-validation.
//! - [`experiment`], [`report`]: penalty/kernel sweeps, benchmarks and tables.

pub mod config;
pub mod data;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod hazard;
pub mod kernel;
pub mod logreg;
pub mod persist;
pub mod report;
pub mod smo;

pub use data::{FeatureVector, Label, LabeledSample};
pub use error::{OutageError, Result};
pub use eval::{
    cross_validate, kfold_split, metrics, ConfusionMatrix, CrossValidation, EvaluationReport,
};
pub use kernel::Kernel;
pub use logreg::{LogRegConfig, LogRegModel};
pub use persist::Model;
pub use smo::{SvmModel, SvmTrainConfig};
