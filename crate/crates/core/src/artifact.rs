//! Versioned JSON container for fitted models.

use std::path::Path;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nimlp::NimlpModel;
use crate::nnet::{LogReg, Majority, Mlp, TrainSpec};
use crate::svm::SvmModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Majority { model: Majority },
    Mlp { spec: TrainSpec, net: Mlp },
    Svm { model: SvmModel },
    LogReg { model: LogReg },
    Nimlp { spec: TrainSpec, model: NimlpModel },
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Majority { .. } => "majority",
            Model::Mlp { .. } => "mlp",
            Model::Svm { .. } => "svm",
            Model::LogReg { .. } => "logreg",
            Model::Nimlp { .. } => "nimlp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub format_version: u32,
    pub crate_version: String,
    pub seed: u64,
    /// `mood` or `identity`.
    pub target: String,
    /// Modality code such as `TKA`.
    pub modalities: String,
    pub feature_fingerprint: String,
    pub input_dim: usize,
    pub n_classes: usize,
    /// Column multipliers applied to raw features before the model.
    pub input_scale: Option<Array1<f64>>,
    /// Outer fold left out of training, if any.
    #[serde(default)]
    pub holdout_fold: Option<usize>,
    pub model: Model,
}

impl Artifact {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: Model,
        seed: u64,
        target: &str,
        modalities: &str,
        feature_fingerprint: &str,
        input_dim: usize,
        n_classes: usize,
        input_scale: Option<Array1<f64>>,
    ) -> Self {
        Artifact {
            format_version: FORMAT_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            target: target.to_string(),
            modalities: modalities.to_string(),
            feature_fingerprint: feature_fingerprint.to_string(),
            input_dim,
            n_classes,
            input_scale,
            holdout_fold: None,
            model,
        }
    }

    /// Predict from raw (unscaled) feature rows.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, actual: x.ncols() });
        }
        let x = self.scaled(x);
        let x = x.view();
        match &self.model {
            Model::Majority { model } => Ok(model.predict(x.nrows())),
            Model::Mlp { net, .. } => net.predict(x),
            Model::Svm { model } => model.predict(x),
            Model::LogReg { model } => model.predict(x),
            Model::Nimlp { model, .. } => {
                model.verify_frozen()?;
                model.infer(x)
            }
        }
    }

    /// Raw features multiplied by the stored input scale.
    pub fn scaled(&self, x: ArrayView2<'_, f64>) -> ndarray::Array2<f64> {
        match &self.input_scale {
            Some(s) => &x * s,
            None => x.to_owned(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        match v.get("format_version").and_then(|v| v.as_u64()) {
            Some(n) if n == FORMAT_VERSION as u64 => {}
            Some(n) => return Err(Error::validation(format!("unsupported artifact format version {n}"))),
            None => return Err(Error::validation("artifact has no format_version")),
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_version_check() {
        let a = Artifact::new(Model::Majority { model: Majority { class: 2 } }, 3, "mood", "T", "abc", 4, 3, None);
        let s = a.to_json().unwrap();
        assert_eq!(Artifact::from_json(&s).unwrap(), a);
        let bad = s.replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(Artifact::from_json(&bad).is_err());
        let x = ndarray::Array2::<f64>::zeros((2, 4));
        assert_eq!(a.predict(x.view()).unwrap(), vec![2, 2]);
        assert!(a.predict(ndarray::Array2::<f64>::zeros((1, 3)).view()).is_err());
    }
}
