//! Evaluation protocol: splits, nested cross-validation, metrics,
//! significance tests, identity probes and tradeoff reporting.

mod cv;
mod metrics;
mod pareto;
mod probe;
mod splits;
mod wilcoxon;

pub use cv::{mean, nested_cv, probe_raw, scaled_split, CvResult, Family, FeatureSource, FoldScore, RawProbeRow, Target};
pub use metrics::{accuracy, confusion, constant_classifier_f1, macro_f1, per_class_f1};
pub use pareto::{dominates, pareto_front, pareto_mask, TradeoffPoint};
pub use probe::{probe_identity, stratified_split, ProbeResult, PROBE_TEST_FRACTION};
pub use splits::{make_splits, make_splits_keys, make_splits_n, make_splits_with, SplitPlan, SplitScheme, N_FOLDS};
pub use wilcoxon::{
    doubled_ranks, wilcoxon_rank_sum, wilcoxon_signed_rank, RankSum, SignedRank, RANK_SUM_EXACT_MIN_MAX,
    RANK_SUM_EXACT_TOTAL_MAX, SIGNED_RANK_EXACT_MAX, SIGNIFICANCE,
};
