//! Hyperparameter grids, with an optional TOML override file:
//!
//! ```toml
//! [mlp]
//! hidden = [[128, 64]]
//! dropout = [0.0, 0.2]
//! epochs = 50
//! [svm]
//! c = [1.0]
//! kernels = ["rbf", "2"]
//! [nimlp]
//! lambda = [1.0]
//! sigma = [0.0, 5.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{usage, CliResult};
use crate::eval::Family;
use crate::features::Modalities;
use crate::nimlp::{LAMBDA_GRID, SIGMA_GRID};
use crate::nnet::TrainSpec;
use crate::svm::{Kernel, SvmSpec, C_GRID, POLY_DEGREES};

pub const DROPOUT_GRID: [f64; 3] = [0.0, 0.2, 0.5];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpGrid {
    pub hidden: Option<Vec<Vec<usize>>>,
    pub dropout: Option<Vec<f64>>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmGrid {
    pub c: Option<Vec<f64>>,
    pub kernels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NimlpGrid {
    pub lambda: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    #[serde(default)]
    pub mlp: MlpGrid,
    #[serde(default)]
    pub svm: SvmGrid,
    #[serde(default)]
    pub nimlp: NimlpGrid,
}

/// Default hidden widths for a modality set: wide layers for text and any
/// fusion, narrow ones for keystrokes alone.
pub fn default_hidden(m: Modalities) -> Vec<Vec<usize>> {
    let (h1, h2): (&[usize], &[usize]) = if m == Modalities::KEYS {
        (&[64, 32], &[32, 16])
    } else if m == Modalities::APPS {
        (&[128], &[128, 64])
    } else {
        (&[1024, 512], &[128, 64])
    };
    h1.iter().flat_map(|&a| h2.iter().map(move |&b| vec![a, b])).collect()
}

impl GridFile {
    pub fn load(path: Option<&Path>) -> CliResult<GridFile> {
        let Some(p) = path else { return Ok(GridFile::default()) };
        let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read grid file {}: {e}", p.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("bad grid file {}: {e}", p.display())))
    }

    pub fn mlp_specs(&self, m: Modalities, seed: u64) -> Vec<TrainSpec> {
        let base = TrainSpec::default();
        let g = &self.mlp;
        let hidden = g.hidden.clone().unwrap_or_else(|| default_hidden(m));
        let dropout = g.dropout.clone().unwrap_or_else(|| DROPOUT_GRID.to_vec());
        let mut out = Vec::new();
        for h in &hidden {
            for &d in &dropout {
                out.push(TrainSpec {
                    hidden: h.clone(),
                    dropout: d,
                    learning_rate: g.learning_rate.unwrap_or(base.learning_rate),
                    momentum: g.momentum.unwrap_or(base.momentum),
                    batch_size: g.batch_size.unwrap_or(base.batch_size),
                    epochs: g.epochs.unwrap_or(base.epochs),
                    clip_norm: g.clip_norm,
                    seed,
                });
            }
        }
        out
    }

    pub fn svm_specs(&self) -> CliResult<Vec<SvmSpec>> {
        let cs = self.svm.c.clone().unwrap_or_else(|| C_GRID.to_vec());
        let kernels: Vec<Kernel> = match &self.svm.kernels {
            Some(k) => k.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
            None => std::iter::once(Kernel::Rbf { gamma: None })
                .chain(POLY_DEGREES.iter().map(|&degree| Kernel::Poly { degree }))
                .collect(),
        };
        let mut out = Vec::new();
        for &c in &cs {
            for &kernel in &kernels {
                let s = SvmSpec { c, kernel };
                s.validate()?;
                out.push(s);
            }
        }
        Ok(out)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.nimlp.lambda.clone().unwrap_or_else(|| LAMBDA_GRID.to_vec())
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.nimlp.sigma.clone().unwrap_or_else(|| SIGMA_GRID.to_vec())
    }

    pub fn family(&self, name: &str, m: Modalities, seed: u64) -> CliResult<Family> {
        match name {
            "majority" => Ok(Family::Majority),
            "mlp" => Ok(Family::Mlp(self.mlp_specs(m, seed))),
            "svm" => Ok(Family::Svm(self.svm_specs()?)),
            _ => Err(usage(format!("unknown model family `{name}` (majority, mlp, svm)"))),
        }
    }
}
