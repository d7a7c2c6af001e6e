//! In-repo classifiers and ranking metrics.

mod forest;
mod logreg;
mod metrics;
mod tuning;

pub use forest::{fit_forest, fit_tree, ForestConfig, ForestModel, Node, Tree};
pub use logreg::{fit_logreg, LogRegConfig, LogRegModel};
pub use metrics::{pr_auc, roc_auc};
pub use tuning::{tune_max_depth, DepthGrid, DepthTuning, TunedForest};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Seed;

/// Which model to fit, with its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ClassifierSpec {
    LogisticRegression(LogRegConfig),
    RandomForest(ForestConfig),
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::LogisticRegression(LogRegConfig::default())
    }
}

impl ClassifierSpec {
    pub fn forest() -> Self {
        ClassifierSpec::RandomForest(ForestConfig::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::LogisticRegression(_) => "logistic-regression",
            ClassifierSpec::RandomForest(_) => "random-forest",
        }
    }

    pub fn fit(&self, x: &Matrix, y: &[u8], weights: Option<&[f64]>, seed: Seed) -> Result<Model> {
        match self {
            ClassifierSpec::LogisticRegression(c) => fit_logreg(x, y, weights, c).map(Model::LogisticRegression),
            ClassifierSpec::RandomForest(c) => fit_forest(x, y, weights, c, seed).map(Model::RandomForest),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum Model {
    LogisticRegression(LogRegModel),
    RandomForest(ForestModel),
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    model: Model,
}

impl Model {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            Model::LogisticRegression(m) => m.predict_proba(x),
            Model::RandomForest(m) => m.predict_proba(x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument {
            format: "smotelab-model".into(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format != "smotelab-model" || doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::Unsupported(format!(
                "model document {} v{} (expected smotelab-model v{MODEL_FORMAT_VERSION})",
                doc.format, doc.version
            )));
        }
        Ok(doc.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![0.2, 0.9], vec![0.9, 0.1]]).unwrap();
        let y = [0, 1, 0, 1];
        for spec in [ClassifierSpec::default(), ClassifierSpec::RandomForest(ForestConfig { n_trees: 3, ..Default::default() })] {
            let m = spec.fit(&x, &y, None, Seed(1)).unwrap();
            let back = Model::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.predict_proba(&x).unwrap(), m.predict_proba(&x).unwrap());
        }
        let spec = serde_json::to_string(&ClassifierSpec::default()).unwrap();
        assert!(spec.contains("logistic-regression"));
        assert!(Model::from_json("{\"format\":\"smotelab-model\",\"version\":9,\"model\":{\"model\":\"logistic-regression\",\"weights\":[0.0],\"iterations\":0,\"gradient_norm\":0.0}}").is_err());
    }
}
