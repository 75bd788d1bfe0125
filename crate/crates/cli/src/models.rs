//! Serialized model files.
//!
//! All three learner families share one tagged JSON envelope so `predict`
//! can dispatch without being told what was fit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use randepth::{
    predict_adaboost_batch, predict_boost_batch, predict_forest_batch, AdaBoostModel, BoostModel,
    Dataset, ForestModel, Result,
};

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", content = "model")]
pub enum ModelFile {
    #[serde(rename = "forest")]
    Forest(ForestModel),
    #[serde(rename = "boost")]
    Boost(BoostModel),
    #[serde(rename = "adaboost")]
    AdaBoost(AdaBoostModel),
}

impl ModelFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// One prediction per row; class labels come back as 0.0/1.0.
    pub fn predict_batch(&self, data: &Dataset) -> Vec<f64> {
        match self {
            ModelFile::Forest(m) => predict_forest_batch(m, data),
            ModelFile::Boost(m) => predict_boost_batch(m, data),
            ModelFile::AdaBoost(m) => predict_adaboost_batch(m, data)
                .into_iter()
                .map(f64::from)
                .collect(),
        }
    }
}
