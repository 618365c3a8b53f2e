//! CSV row types shared by the stages and the report.

use serde::{Deserialize, Serialize};

/// One outer fold of one (modality set, family) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub modalities: String,
    pub family: String,
    pub fold: usize,
    pub selected: usize,
    pub f1: f64,
    pub accuracy: f64,
    pub n_test: usize,
}

/// Modality comparison: mean scores per (modality set, family), with the
/// one-sided signed-rank p-value of the fused set beating this one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityRow {
    pub modalities: String,
    pub family: String,
    pub f1: f64,
    pub f1_std: f64,
    pub accuracy: f64,
    pub p_fused_better: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub sigma: f64,
    pub f1: f64,
    pub identity_accuracy: f64,
    pub r: f64,
    pub r_negative: bool,
    pub sparsity: f64,
    pub pareto: bool,
    pub selected: bool,
}

/// Privacy comparison of the pretrained MLP and the selected NI-MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyRow {
    pub modalities: String,
    pub model: String,
    pub f1: f64,
    pub identity_accuracy: f64,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawProbeRow {
    pub modalities: String,
    pub family: String,
    pub f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepProbeRow {
    pub model: String,
    pub kind: String,
    pub accuracy: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRow {
    pub user: String,
    pub rank: usize,
    pub token: String,
    pub polarity: String,
    pub delta: f64,
    pub negative: usize,
    pub neutral: usize,
    pub positive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossUserRow {
    pub token: String,
    pub positive_users: usize,
    pub negative_users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub user: String,
    pub word: String,
    pub direction: String,
    pub p: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub user: String,
    pub group: String,
    pub mood: String,
    pub bucket: usize,
    pub left_edge: f64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneRow {
    pub user: String,
    pub label: String,
    pub x: f64,
    pub y: f64,
}
