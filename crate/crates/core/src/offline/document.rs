use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FitError, RegressorModel};
use crate::data::MinMaxScaler;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
}

/// A fitted model together with the preprocessing needed to apply it to
/// raw feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub code_version: String,
    pub feature_names: Vec<String>,
    pub feature_scaler: Option<MinMaxScaler>,
    /// Maps model outputs back to MWh when targets were scaled.
    pub target_scaler: Option<MinMaxScaler>,
    /// Scaled columns fed to the model; `None` keeps all of them.
    #[serde(default)]
    pub columns: Option<Vec<usize>>,
    pub model: RegressorModel,
}

impl ModelDocument {
    pub fn new(
        model: RegressorModel,
        feature_names: Vec<String>,
        feature_scaler: Option<MinMaxScaler>,
        target_scaler: Option<MinMaxScaler>,
    ) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            code_version: crate::CODE_VERSION.to_string(),
            feature_names,
            feature_scaler,
            target_scaler,
            columns: None,
            model,
        }
    }

    pub fn with_columns(mut self, columns: Vec<usize>) -> Self {
        self.columns = Some(columns);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelIoError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelIoError::UnsupportedVersion {
                found: header.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelIoError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelIoError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Predicts in target units from an unscaled feature row.
    pub fn predict_raw(&self, row: &[f64]) -> Result<f64, FitError> {
        let z = match &self.feature_scaler {
            Some(s) => s
                .transform_row(row)
                .map_err(|_| FitError::DimensionMismatch { expected: s.width(), found: row.len() })?,
            None => row.to_vec(),
        };
        let z = match &self.columns {
            Some(cols) => cols.iter().map(|&j| z[j]).collect(),
            None => z,
        };
        let p = self.model.predict_row(&z)?;
        Ok(match &self.target_scaler {
            Some(t) => t.unscale(0, p),
            None => p,
        })
    }
}
