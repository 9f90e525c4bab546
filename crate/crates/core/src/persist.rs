//! JSON model files.
//!
//! Both model kinds share one envelope: a `format_version` plus a
//! `model_type` tag (`svm` or `logistic_regression`) alongside the model fields.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{FeatureVector, Label};
use crate::error::{OutageError, Result};
use crate::logreg::LogRegModel;
use crate::smo::SvmModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case")]
pub enum Model {
    Svm(SvmModel),
    LogisticRegression(LogRegModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    #[serde(flatten)]
    model: Model,
}

impl Model {
    /// Real-valued score whose sign gives the label: the SVM decision value,
    /// or the logit for logistic regression.
    pub fn decision_value(&self, x: &FeatureVector) -> f64 {
        match self {
            Model::Svm(m) => m.decision_value(x),
            Model::LogisticRegression(m) => m.score(x),
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Label {
        match self {
            Model::Svm(m) => m.predict(x),
            Model::LogisticRegression(m) => m.predict(x).1,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let env = Envelope {
            format_version: FORMAT_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&env)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(s)?;
        if env.format_version != FORMAT_VERSION {
            return Err(OutageError::Data(format!(
                "unsupported model format_version {}",
                env.format_version
            )));
        }
        match &env.model {
            Model::Svm(m) => {
                if m.support_vectors.len() != m.coefficients.len()
                    || m.support_vectors.len() != m.support_indices.len()
                {
                    return Err(OutageError::Data(
                        "support vector, coefficient and index counts differ".into(),
                    ));
                }
                m.kernel.validate()?;
            }
            Model::LogisticRegression(m) => m.validate()?,
        }
        Ok(env.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| OutageError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| OutageError::io(path, e))?;
        Self::from_json(&text)
    }
}

impl From<SvmModel> for Model {
    fn from(m: SvmModel) -> Self {
        Model::Svm(m)
    }
}

impl From<LogRegModel> for Model {
    fn from(m: LogRegModel) -> Self {
        Model::LogisticRegression(m)
    }
}
