use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, macro_f1};
use super::splits::SplitPlan;
use crate::datamodel::{Dataset, MoodClass};
use crate::error::{Error, Result};
use crate::features::{self, Corpus, Modalities, VocabOptions};
use crate::nnet::{block_scale, majority_baseline, train_mlp, TrainSpec};
use crate::svm::{train_svm, SvmSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Mood,
    Identity,
}

impl Target {
    pub fn labels(&self, ds: &Dataset) -> Vec<usize> {
        match self {
            Target::Mood => ds.labels(),
            Target::Identity => ds.user_ids(),
        }
    }

    pub fn n_classes(&self, ds: &Dataset) -> usize {
        match self {
            Target::Mood => MoodClass::ALL.len(),
            Target::Identity => ds.n_users(),
        }
    }
}

/// Where fold features come from.
pub enum FeatureSource<'a> {
    /// Features computed once outside the harness.
    Fixed(&'a Dataset),
    /// Vocabularies refit on each outer-train set from raw event logs.
    Refit { corpus: &'a Corpus, opts: &'a VocabOptions },
}

impl FeatureSource<'_> {
    pub fn len(&self) -> usize {
        match self {
            FeatureSource::Fixed(ds) => ds.len(),
            FeatureSource::Refit { corpus, .. } => corpus.days.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dataset whose feature configuration was fitted only on `train` for
    /// outer fold `fold`.
    pub fn for_fold(&self, fold: usize, train: &[usize], test: &[usize], modalities: Modalities) -> Result<Dataset> {
        match self {
            FeatureSource::Fixed(ds) => Ok((*ds).clone()),
            FeatureSource::Refit { corpus, opts } => {
                let cfg = features::fit_on_days(corpus, train, opts, &format!("outer-{fold}"))?;
                for &i in test {
                    assert!(
                        !cfg.fit_scope.contains(corpus.user_of(i), corpus.days[i].date),
                        "test day leaked into the vocabulary fit"
                    );
                }
                features::featurize_corpus(corpus, &cfg, modalities)
            }
        }
    }
}

/// A model family: one hyperparameter grid and how to train/predict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "grid", rename_all = "lowercase")]
pub enum Family {
    Majority,
    Mlp(Vec<TrainSpec>),
    Svm(Vec<SvmSpec>),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Majority => "majority",
            Family::Mlp(_) => "mlp",
            Family::Svm(_) => "svm",
        }
    }

    pub fn grid_len(&self) -> usize {
        match self {
            Family::Majority => 1,
            Family::Mlp(g) => g.len(),
            Family::Svm(g) => g.len(),
        }
    }

    pub fn fit_predict(
        &self,
        point: usize,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        x_eval: ArrayView2<'_, f64>,
        n_classes: usize,
    ) -> Result<Vec<usize>> {
        match self {
            Family::Majority => Ok(majority_baseline(y)?.predict(x_eval.nrows())),
            Family::Mlp(g) => train_mlp(x, y, n_classes, &g[point])?.predict(x_eval),
            Family::Svm(g) => train_svm(x, y, n_classes, &g[point])?.predict(x_eval),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub fold: usize,
    /// Grid index refit on the outer-train set.
    pub selected: usize,
    /// Mean inner-validation macro-F1 per grid point (`None` when the point
    /// failed or the grid had a single point).
    pub validation_f1: Vec<Option<f64>>,
    pub test_f1: f64,
    pub test_accuracy: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub family: String,
    pub modalities: String,
    pub target: Target,
    pub folds: Vec<FoldScore>,
}

impl CvResult {
    pub fn f1(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.test_f1).collect()
    }

    pub fn accuracy(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.test_accuracy).collect()
    }

    pub fn mean_f1(&self) -> f64 {
        mean(&self.f1())
    }

    pub fn mean_accuracy(&self) -> f64 {
        mean(&self.accuracy())
    }
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Training and evaluation rows, with every feature block rescaled to unit
/// mean squared norm on the training rows.
pub fn scaled_split(x: &Array2<f64>, blocks: &[usize], train: &[usize], eval: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let mut xt = x.select(ndarray::Axis(0), train);
    let mut xe = x.select(ndarray::Axis(0), eval);
    let scale = block_scale(xt.view(), blocks);
    xt *= &scale;
    xe *= &scale;
    (xt, xe)
}

#[allow(clippy::too_many_arguments)]
fn score_point(
    family: &Family,
    point: usize,
    x: &Array2<f64>,
    blocks: &[usize],
    y: &[usize],
    train: &[usize],
    eval: &[usize],
    n_classes: usize,
) -> Result<(f64, f64)> {
    let (xt, xe) = scaled_split(x, blocks, train, eval);
    let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let ye: Vec<usize> = eval.iter().map(|&i| y[i]).collect();
    let pred = family.fit_predict(point, xt.view(), &yt, xe.view(), n_classes)?;
    Ok((macro_f1(&pred, &ye, n_classes)?, accuracy(&pred, &ye)?))
}

/// Nested cross-validation: for each outer fold, pick the grid point with
/// the best mean inner-validation macro-F1, refit it on the outer-train set
/// and score it on the test fold.
pub fn nested_cv(
    source: &FeatureSource<'_>,
    modalities: Modalities,
    target: Target,
    plan: &SplitPlan,
    family: &Family,
) -> Result<CvResult> {
    if plan.n_samples() != source.len() {
        return Err(Error::DimensionMismatch {
            expected: source.len(),
            actual: plan.n_samples(),
        });
    }
    if family.grid_len() == 0 {
        return Err(Error::validation("empty hyperparameter grid"));
    }
    let folds: Vec<Result<FoldScore>> = (0..plan.n_folds())
        .into_par_iter()
        .map(|k| {
            let outer = plan.outer_train(k);
            let test = plan.test(k);
            let ds = source.for_fold(k, &outer, test, modalities)?;
            let x = ds.matrix(modalities);
            let blocks = ds.config.active_blocks(modalities);
            let y = target.labels(&ds);
            let n_classes = target.n_classes(&ds);
            let n_points = family.grid_len();
            let mut validation_f1 = vec![None; n_points];
            let selected = if n_points == 1 {
                0
            } else {
                let inner = plan.inner(k);
                let jobs: Vec<(usize, usize)> =
                    (0..n_points).flat_map(|p| (0..inner.len()).map(move |j| (p, j))).collect();
                let scores: Vec<Result<f64>> = jobs
                    .par_iter()
                    .map(|&(p, j)| score_point(family, p, &x, &blocks, &y, &inner[j].0, &inner[j].1, n_classes).map(|s| s.0))
                    .collect();
                for p in 0..n_points {
                    let s: Result<Vec<f64>> = scores[p * inner.len()..(p + 1) * inner.len()]
                        .iter()
                        .map(|r| r.as_ref().copied().map_err(|e| Error::validation(e.to_string())))
                        .collect();
                    match s {
                        Ok(v) => validation_f1[p] = Some(mean(&v)),
                        Err(e) => log::warn!("fold {k}: grid point {p} skipped: {e}"),
                    }
                }
                let mut best: Option<usize> = None;
                for (p, v) in validation_f1.iter().enumerate() {
                    if let Some(v) = v {
                        if best.is_none_or(|b| *v > validation_f1[b].unwrap_or(f64::NEG_INFINITY)) {
                            best = Some(p);
                        }
                    }
                }
                best.ok_or_else(|| Error::Degenerate(format!("fold {k}: every grid point failed")))?
            };
            let (test_f1, test_accuracy) = score_point(family, selected, &x, &blocks, &y, &outer, test, n_classes)?;
            Ok(FoldScore {
                fold: k,
                selected,
                validation_f1,
                test_f1,
                test_accuracy,
                n_test: test.len(),
            })
        })
        .collect();
    Ok(CvResult {
        family: family.name().to_string(),
        modalities: modalities.to_string(),
        target,
        folds: folds.into_iter().collect::<Result<_>>()?,
    })
}

/// Identity-prediction scores from raw features, one row per
/// (modality set, model family).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawProbeRow {
    pub modalities: String,
    pub family: String,
    pub f1: f64,
    pub accuracy: f64,
}

pub fn probe_raw(
    source: &FeatureSource<'_>,
    modality_sets: &[Modalities],
    families: &[Family],
    plan: &SplitPlan,
) -> Result<Vec<RawProbeRow>> {
    let mut rows = Vec::new();
    for &m in modality_sets {
        for fam in families {
            let r = nested_cv(source, m, Target::Identity, plan, fam)?;
            rows.push(RawProbeRow {
                modalities: m.to_string(),
                family: fam.name().to_string(),
                f1: r.mean_f1(),
                accuracy: r.mean_accuracy(),
            });
        }
    }
    Ok(rows)
}
