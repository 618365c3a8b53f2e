//! Noisy-identity MLP: a pretrained extractor, an L1-regularized per-user
//! identity encoder over its representation, and a classification head
//! retrained under multiplicative Gaussian noise on the identity component.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{macro_f1, pareto_front, probe_identity, TradeoffPoint};
use crate::nnet::{argmax, train_network, Mlp, TrainSpec};
use crate::rng;

pub const SIGMA_GRID: [f64; 7] = [1.0, 5.0, 10.0, 25.0, 50.0, 100.0, 150.0];
pub const LAMBDA_GRID: [f64; 6] = [0.1, 1.0, 2.0, 3.0, 5.0, 10.0];
/// Entries below this magnitude count as zero when reporting sparsity.
pub const SPARSITY_EPS: f64 = 1e-8;
/// Allowed macro-F1 loss for the privacy-first selection rule.
pub const F1_TOLERANCE: f64 = 0.05;

/// Per-user vectors `z_id` in the representation space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityEncoder {
    /// `(n_users, h2)`
    pub table: Array2<f64>,
    pub lambda: f64,
    pub iterations: usize,
}

impl IdentityEncoder {
    pub fn n_users(&self) -> usize {
        self.table.nrows()
    }

    pub fn dim(&self) -> usize {
        self.table.ncols()
    }

    /// Fraction of table entries with magnitude below [`SPARSITY_EPS`].
    pub fn sparsity(&self) -> f64 {
        let zeros = self.table.iter().filter(|v| v.abs() < SPARSITY_EPS).count();
        zeros as f64 / self.table.len().max(1) as f64
    }

    pub fn encode(&self, users: &[usize]) -> Result<Array2<f64>> {
        if let Some(&u) = users.iter().find(|&&u| u >= self.n_users()) {
            return Err(Error::UnknownUser(u.to_string()));
        }
        Ok(self.table.select(Axis(0), users))
    }
}

pub fn soft_threshold(m: f64, t: f64) -> f64 {
    m.signum() * (m.abs() - t).max(0.0)
}

/// Closed-form minimizer: the soft-thresholded per-user mean.
pub fn select_identity_closed_form(
    z: ArrayView2<'_, f64>,
    users: &[usize],
    n_users: usize,
    lambda: f64,
) -> Result<Array2<f64>> {
    let (means, _) = user_means(z, users, n_users)?;
    Ok(means.mapv(|m| soft_threshold(m, lambda / 2.0)))
}

fn user_means(z: ArrayView2<'_, f64>, users: &[usize], n_users: usize) -> Result<(Array2<f64>, Vec<usize>)> {
    if z.nrows() != users.len() {
        return Err(Error::DimensionMismatch {
            expected: users.len(),
            actual: z.nrows(),
        });
    }
    let mut sums = Array2::zeros((n_users, z.ncols()));
    let mut counts = vec![0usize; n_users];
    for (row, &u) in z.rows().into_iter().zip(users) {
        if u >= n_users {
            return Err(Error::UnknownUser(u.to_string()));
        }
        sums.row_mut(u).scaled_add(1.0, &row);
        counts[u] += 1;
    }
    if let Some(u) = counts.iter().position(|&c| c == 0) {
        return Err(Error::validation(format!("user {u} has no samples")));
    }
    for (mut r, &c) in sums.rows_mut().into_iter().zip(&counts) {
        r /= c as f64;
    }
    Ok((sums, counts))
}

/// Minimize `sum_i |z_i - w_u(i)|^2 + lambda |w_u(i)|_1` (the penalty counted
/// once per sample) by proximal gradient descent with a common step.
pub fn select_identity(
    z: ArrayView2<'_, f64>,
    users: &[usize],
    n_users: usize,
    lambda: f64,
) -> Result<IdentityEncoder> {
    if !(lambda >= 0.0) {
        return Err(Error::validation(format!("lambda must be non-negative, got {lambda}")));
    }
    let (means, counts) = user_means(z, users, n_users)?;
    let n_max = *counts.iter().max().unwrap_or(&1) as f64;
    // gradient of the smooth part for user u: 2 n_u (w_u - m_u)
    let step = 1.0 / (2.0 * n_max);
    let mut w = Array2::<f64>::zeros(means.raw_dim());
    let mut iterations = 0;
    for it in 1..=1_000_000 {
        let mut change: f64 = 0.0;
        for u in 0..n_users {
            let n_u = counts[u] as f64;
            for j in 0..w.ncols() {
                let old = w[[u, j]];
                let g = 2.0 * n_u * (old - means[[u, j]]);
                let new = soft_threshold(old - step * g, step * lambda * n_u);
                change = change.max((new - old).abs());
                w[[u, j]] = new;
            }
        }
        iterations = it;
        if change < 1e-13 {
            break;
        }
    }
    Ok(IdentityEncoder {
        table: w,
        lambda,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// One noise vector per mini-batch, shared by its samples.
    #[default]
    PerBatch,
    PerSample,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" | "per-batch" => Ok(NoiseMode::PerBatch),
            "sample" | "per-sample" => Ok(NoiseMode::PerSample),
            _ => Err(Error::validation(format!("unknown noise mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    #[serde(with = "crate::extended_float")]
    pub r: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub rule: SelectionRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NimlpModel {
    /// Pretrained network; only its hidden layers are used.
    pub extractor: Mlp,
    pub extractor_digest: String,
    pub encoder: IdentityEncoder,
    /// `h2 -> h2 -> classes`
    pub head: Mlp,
    pub sigma: f64,
    pub noise: NoiseMode,
    pub selection: Option<Selection>,
}

impl NimlpModel {
    pub fn verify_frozen(&self) -> Result<()> {
        if self.extractor.digest() != self.extractor_digest {
            return Err(Error::Degenerate("feature extractor differs from the pretrained artifact".into()));
        }
        Ok(())
    }

    pub fn features(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.extractor.forward(x)?.0)
    }

    /// Hidden activation of the head on noiseless inputs.
    pub fn representation(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let z = self.features(x)?;
        Ok(self.head.forward(z.view())?.0)
    }

    pub fn infer(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let z = self.features(x)?;
        self.head.predict(z.view())
    }

    pub fn infer_features(&self, z: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        self.head.predict(z.view())
    }
}

/// Gradient-norm bound used when retraining heads under noise.
pub const HEAD_CLIP_NORM: f64 = 5.0;

pub fn head_spec(base: &TrainSpec, h2: usize) -> TrainSpec {
    TrainSpec {
        hidden: vec![h2],
        dropout: 0.0,
        clip_norm: base.clip_norm.or(Some(HEAD_CLIP_NORM)),
        ..base.clone()
    }
}

/// Train a fresh head on `z_feat + eps * z_id`. `sigma = 0` trains on
/// `z_feat` alone with the same shuffling and initialization streams.
pub fn train_head(
    z: ArrayView2<'_, f64>,
    labels: &[usize],
    z_id: Option<ArrayView2<'_, f64>>,
    sigma: f64,
    noise: NoiseMode,
    n_classes: usize,
    spec: &TrainSpec,
) -> Result<Mlp> {
    if !(sigma >= 0.0) {
        return Err(Error::validation(format!("sigma must be non-negative, got {sigma}")));
    }
    let h2 = z.ncols();
    let spec = head_spec(spec, h2);
    let mut head = Mlp::new(&spec.dims(h2, n_classes), 0.0, spec.seed)?;
    match z_id {
        None => {
            train_network::<fn(&[usize], &mut Array2<f64>)>(&mut head, z, labels, &spec, None)?;
        }
        Some(zid) => {
            if zid.dim() != z.dim() {
                return Err(Error::DimensionMismatch {
                    expected: z.nrows() * z.ncols(),
                    actual: zid.nrows() * zid.ncols(),
                });
            }
            let mut noise_rng = rng::named(spec.seed, "noise");
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let perturb = |batch: &[usize], xb: &mut Array2<f64>| {
                let mut eps: Array1<f64> = Array1::from_shape_simple_fn(h2, || sigma * normal.sample(&mut noise_rng));
                for (r, &i) in batch.iter().enumerate() {
                    if noise == NoiseMode::PerSample && r > 0 {
                        eps.mapv_inplace(|_| sigma * normal.sample(&mut noise_rng));
                    }
                    let mut row = xb.row_mut(r);
                    ndarray::Zip::from(&mut row)
                        .and(&eps)
                        .and(zid.row(i))
                        .for_each(|x, &e, &id| *x += e * id);
                }
            };
            train_network(&mut head, z, labels, &spec, Some(perturb))?;
        }
    }
    Ok(head)
}

/// Addition phase: retrain only the head; extractor and encoder untouched.
#[allow(clippy::too_many_arguments)]
pub fn addition_train(
    extractor: &Mlp,
    encoder: &IdentityEncoder,
    z_feat: ArrayView2<'_, f64>,
    users: &[usize],
    labels: &[usize],
    sigma: f64,
    noise: NoiseMode,
    spec: &TrainSpec,
) -> Result<NimlpModel> {
    if encoder.dim() != z_feat.ncols() {
        return Err(Error::DimensionMismatch {
            expected: z_feat.ncols(),
            actual: encoder.dim(),
        });
    }
    let zid = encoder.encode(users)?;
    let head = train_head(z_feat, labels, Some(zid.view()), sigma, noise, extractor.n_classes(), spec)?;
    Ok(NimlpModel {
        extractor: extractor.clone(),
        extractor_digest: extractor.digest(),
        encoder: encoder.clone(),
        head,
        sigma,
        noise,
        selection: None,
    })
}

/// Privacy gained per unit of mood performance lost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    #[serde(with = "crate::extended_float")]
    pub value: f64,
    /// Negative ratios are excluded from selection.
    pub negative: bool,
}

pub fn compute_r(s_mlp: f64, s_nimlp: f64, t_mlp: f64, t_nimlp: f64) -> Ratio {
    let num = s_mlp - s_nimlp;
    let den = t_mlp - t_nimlp;
    let value = if den.abs() < 1e-9 {
        if num > 0.0 {
            f64::INFINITY
        } else if num < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        num / den
    };
    Ratio {
        value,
        negative: value < 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    /// Largest non-negative R.
    #[default]
    MaxRatio,
    /// Lowest probe accuracy among points within [`F1_TOLERANCE`] of the
    /// MLP's macro-F1; best macro-F1 when none qualifies.
    PrivacyWithinTolerance,
}

impl std::str::FromStr for SelectionRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ratio" | "max-ratio" => Ok(SelectionRule::MaxRatio),
            "privacy" | "privacy-within-tolerance" => Ok(SelectionRule::PrivacyWithinTolerance),
            _ => Err(Error::validation(format!("unknown selection rule {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub sigma: f64,
    pub t: f64,
    pub s: f64,
    pub r: Ratio,
    pub sparsity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub t_mlp: f64,
    pub s_mlp: f64,
    pub points: Vec<SweepPoint>,
    pub selected: usize,
    pub rule: SelectionRule,
    /// Selection fell back to the smallest sigma because every R was negative.
    pub fallback: bool,
    pub pareto: Vec<TradeoffPoint>,
}

impl SweepReport {
    pub fn tradeoff_points(&self) -> Vec<TradeoffPoint> {
        self.points
            .iter()
            .map(|p| TradeoffPoint {
                sigma: p.sigma,
                lambda: p.lambda,
                t: p.t,
                s: p.s,
            })
            .collect()
    }
}

/// Index chosen by `rule`, and whether it was a fallback.
pub fn select_point(points: &[SweepPoint], t_mlp: f64, rule: SelectionRule) -> (usize, bool) {
    match rule {
        SelectionRule::MaxRatio => {
            let mut best: Option<usize> = None;
            for (i, p) in points.iter().enumerate() {
                if p.r.negative {
                    continue;
                }
                if best.is_none_or(|b| p.r.value > points[b].r.value) {
                    best = Some(i);
                }
            }
            match best {
                Some(b) => (b, false),
                None => {
                    log::warn!("every sweep point has negative R; falling back to the smallest sigma");
                    let i = (0..points.len())
                        .min_by(|&a, &b| points[a].sigma.total_cmp(&points[b].sigma))
                        .unwrap_or(0);
                    (i, true)
                }
            }
        }
        SelectionRule::PrivacyWithinTolerance => {
            let ok: Vec<usize> = (0..points.len())
                .filter(|&i| points[i].t >= t_mlp - F1_TOLERANCE)
                .collect();
            if ok.is_empty() {
                let i = argmax(points.iter().map(|p| p.t));
                (i, true)
            } else {
                let i = ok
                    .iter()
                    .copied()
                    .min_by(|&a, &b| points[a].s.total_cmp(&points[b].s).then(a.cmp(&b)))
                    .expect("non-empty");
                (i, false)
            }
        }
    }
}

/// Data for one side of the sweep (training or validation).
pub struct SweepData<'a> {
    pub z_feat: ArrayView2<'a, f64>,
    pub labels: &'a [usize],
    pub users: &'a [usize],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub lambdas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub head: TrainSpec,
    pub noise: NoiseMode,
    pub rule: SelectionRule,
    pub probe_seed: u64,
}

/// Train one head per (lambda, sigma); score validation macro-F1 `t` and the
/// identity-probe accuracy `s` of the head's hidden representation.
pub fn sweep_sigma(
    extractor: &Mlp,
    n_users: usize,
    train: &SweepData<'_>,
    val: &SweepData<'_>,
    opts: &SweepOptions,
) -> Result<(NimlpModel, SweepReport)> {
    if opts.lambdas.is_empty() || opts.sigmas.is_empty() {
        return Err(Error::validation("lambda and sigma grids must be non-empty"));
    }
    let n_classes = extractor.n_classes();
    let before = extractor.digest();
    let mlp_pred: Vec<usize> = extractor.layers.last().map_or(Ok(Vec::new()), |_| {
        let head = last_layer(extractor);
        head.predict(val.z_feat)
    })?;
    let t_mlp = macro_f1(&mlp_pred, val.labels, n_classes)?;
    // identity is probed on every non-test representation
    let probe_users: Vec<usize> = train.users.iter().chain(val.users).copied().collect();
    let z_all = ndarray::concatenate(Axis(0), &[train.z_feat, val.z_feat])
        .map_err(|e| Error::validation(e.to_string()))?;
    let s_mlp = probe_identity(z_all.view(), &probe_users, opts.probe_seed)?.accuracy;

    let jobs: Vec<(f64, f64)> = opts
        .lambdas
        .iter()
        .flat_map(|&l| opts.sigmas.iter().map(move |&s| (l, s)))
        .collect();
    let enc_input = train.z_feat;
    let encoders: Vec<IdentityEncoder> = opts
        .lambdas
        .iter()
        .map(|&l| select_identity(enc_input, train.users, n_users, l))
        .collect::<Result<_>>()?;
    use rayon::prelude::*;
    let trained: Vec<Result<(NimlpModel, SweepPoint)>> = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(lambda, sigma))| {
            let enc = &encoders[k / opts.sigmas.len()];
            let model = addition_train(extractor, enc, train.z_feat, train.users, train.labels, sigma, opts.noise, &opts.head)?;
            let pred = model.infer_features(val.z_feat)?;
            let t = macro_f1(&pred, val.labels, n_classes)?;
            let rep = model.head.forward(z_all.view())?.0;
            let s = probe_identity(rep.view(), &probe_users, opts.probe_seed)?.accuracy;
            let point = SweepPoint {
                lambda,
                sigma,
                t,
                s,
                r: compute_r(s_mlp, s, t_mlp, t),
                sparsity: enc.sparsity(),
            };
            Ok((model, point))
        })
        .collect();
    let mut models = Vec::with_capacity(trained.len());
    let mut points = Vec::with_capacity(trained.len());
    for r in trained {
        let (m, p) = r?;
        models.push(m);
        points.push(p);
    }
    if extractor.digest() != before {
        return Err(Error::Degenerate("feature extractor changed during the sweep".into()));
    }
    let (selected, fallback) = select_point(&points, t_mlp, opts.rule);
    let mut model = models.swap_remove(selected);
    model.selection = Some(Selection {
        r: points[selected].r.value,
        lambda: points[selected].lambda,
        sigma: points[selected].sigma,
        rule: opts.rule,
    });
    let mut report = SweepReport {
        t_mlp,
        s_mlp,
        points,
        selected,
        rule: opts.rule,
        fallback,
        pareto: Vec::new(),
    };
    report.pareto = pareto_front(&report.tradeoff_points());
    Ok((model, report))
}

/// The pretrained network's output layer as a standalone single-layer net.
fn last_layer(net: &Mlp) -> Mlp {
    Mlp {
        layers: vec![net.layers.last().expect("at least one layer").clone()],
        dropout: 0.0,
        input_scale: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_values_lambda_two() {
        let z = array![[2.0], [4.0]];
        let enc = select_identity(z.view(), &[0, 0], 1, 2.0).unwrap();
        assert!((enc.table[[0, 0]] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lambda_zero_is_mean_and_large_lambda_zeroes() {
        let z = array![[1.0, -2.0], [3.0, 0.0], [5.0, 5.0]];
        let users = [0, 0, 1];
        let e0 = select_identity(z.view(), &users, 2, 0.0).unwrap();
        assert!((e0.table[[0, 0]] - 2.0).abs() < 1e-9 && (e0.table[[0, 1]] + 1.0).abs() < 1e-9);
        let big = select_identity(z.view(), &users, 2, 10.0).unwrap();
        assert_eq!(big.sparsity(), 1.0);
    }

    #[test]
    fn unknown_user_rejected() {
        let enc = select_identity(array![[1.0]].view(), &[0], 1, 0.0).unwrap();
        assert!(matches!(enc.encode(&[1]), Err(Error::UnknownUser(_))));
    }

    #[test]
    fn ratio_cases() {
        assert!((compute_r(0.8, 0.4, 0.60, 0.55).value - 8.0).abs() < 1e-9);
        assert_eq!(compute_r(0.5, 0.5, 0.6, 0.5).value, 0.0);
        assert_eq!(compute_r(0.8, 0.4, 0.6, 0.6).value, f64::INFINITY);
        assert!(compute_r(0.8, 0.4, 0.5, 0.6).negative);
    }

    #[test]
    fn negative_sigma_rejected() {
        let z = array![[1.0], [2.0]];
        assert!(train_head(z.view(), &[0, 1], None, -1.0, NoiseMode::PerBatch, 2, &TrainSpec::default()).is_err());
    }
}
