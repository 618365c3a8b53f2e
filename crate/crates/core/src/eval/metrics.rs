use crate::error::{Error, Result};

/// `m[true][pred]` counts.
pub fn confusion(pred: &[usize], labels: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    check(pred, labels)?;
    let mut m = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &y) in pred.iter().zip(labels) {
        if p >= n_classes || y >= n_classes {
            return Err(Error::validation(format!("class index outside {n_classes} classes")));
        }
        m[y][p] += 1;
    }
    Ok(m)
}

fn check(pred: &[usize], labels: &[usize]) -> Result<()> {
    if pred.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Per-class F1. A class absent from both predictions and labels scores 0.
pub fn per_class_f1(pred: &[usize], labels: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    let m = confusion(pred, labels, n_classes)?;
    Ok((0..n_classes)
        .map(|c| {
            let tp = m[c][c] as f64;
            let actual: usize = m[c].iter().sum();
            let predicted: usize = m.iter().map(|r| r[c]).sum();
            let denom = (actual + predicted) as f64;
            if denom == 0.0 {
                0.0
            } else {
                2.0 * tp / denom
            }
        })
        .collect())
}

/// Unweighted mean of per-class F1 over `n_classes` classes.
pub fn macro_f1(pred: &[usize], labels: &[usize], n_classes: usize) -> Result<f64> {
    let f = per_class_f1(pred, labels, n_classes)?;
    Ok(f.iter().sum::<f64>() / n_classes as f64)
}

pub fn accuracy(pred: &[usize], labels: &[usize]) -> Result<f64> {
    check(pred, labels)?;
    let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Macro-F1 of a classifier that always predicts `class`, for a label
/// distribution with proportions `mix`.
pub fn constant_classifier_f1(mix: &[f64], class: usize) -> f64 {
    let p = mix[class] / mix.iter().sum::<f64>();
    2.0 * p / (p + 1.0) / mix.len() as f64
}
