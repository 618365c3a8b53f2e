//! Dense feed-forward networks trained by mini-batch gradient descent, the
//! multinomial logistic-regression probe and the majority baseline.
//!
//! A network is a stack of [`Dense`] layers with ReLU between them and a
//! softmax cross-entropy output. The mood MLP has two hidden layers; the
//! last hidden activation is the representation `z_feat`.

mod lbfgs;
mod logreg;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use lbfgs::{minimize, LbfgsOptions, LbfgsResult};
pub use logreg::{objective as logreg_objective, train_logreg, LogReg, LogRegOptions};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `(inputs, outputs)`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            w: Array2::zeros((inputs, outputs)),
            b: Array1::zeros(outputs),
        }
    }

    /// Uniform fan-in initialization: `U(-a, a)` with `a = sqrt(6 / fan_in)`
    /// for layers feeding a ReLU and `a = 1 / sqrt(fan_in)` for the output.
    pub fn init<R: Rng>(inputs: usize, outputs: usize, relu: bool, rng: &mut R) -> Self {
        let bound = if relu {
            (6.0 / inputs as f64).sqrt()
        } else {
            (1.0 / inputs as f64).sqrt()
        };
        let w = Array2::from_shape_simple_fn((inputs, outputs), || rng.random_range(-bound..bound));
        Dense {
            w,
            b: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Row-major sparse copy of an input matrix, used for the first layer when
/// the inputs are mostly zero (bag-of-words features are).
#[derive(Debug, Clone)]
pub struct SparseRows {
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseRows {
    pub fn from_dense(x: ArrayView2<f64>) -> Self {
        let rows = x
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j as u32, *v))
                    .collect()
            })
            .collect();
        SparseRows { rows }
    }

    pub fn density(&self, cols: usize) -> f64 {
        let nnz: usize = self.rows.iter().map(Vec::len).sum();
        nnz as f64 / (self.rows.len().max(1) * cols.max(1)) as f64
    }
}

/// Training inputs: a dense matrix plus, when sparse enough, a sparse view.
pub struct Inputs<'a> {
    pub x: ArrayView2<'a, f64>,
    sparse: Option<SparseRows>,
}

const SPARSE_DENSITY: f64 = 0.25;

impl<'a> Inputs<'a> {
    pub fn new(x: ArrayView2<'a, f64>) -> Self {
        let sp = SparseRows::from_dense(x);
        let sparse = (sp.density(x.ncols()) < SPARSE_DENSITY).then_some(sp);
        Inputs { x, sparse }
    }

    pub fn dense_only(x: ArrayView2<'a, f64>) -> Self {
        Inputs { x, sparse: None }
    }

    fn gather(&self, idx: &[usize]) -> Array2<f64> {
        self.x.select(Axis(0), idx)
    }
}

/// Feed-forward network with ReLU hidden layers and softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub dropout: f64,
    /// Per-input multiplier applied before the first layer.
    #[serde(default)]
    pub input_scale: Option<Array1<f64>>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct Cache {
    /// Post-activation (post-dropout) output of each hidden layer.
    pub hidden: Vec<Array2<f64>>,
    /// Dropout masks already scaled by `1 / (1 - p)`; empty in eval mode.
    pub masks: Vec<Array2<f64>>,
    pub probs: Array2<f64>,
}

pub fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(v: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, x) in v.into_iter().enumerate() {
        if x > best_v {
            best = i;
            best_v = x;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `dims = [input, hidden.., classes]`.
    pub fn new(dims: &[usize], dropout: f64, seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|d| *d == 0) {
            return Err(Error::validation(format!("invalid layer dims {dims:?}")));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::validation(format!("dropout {dropout} outside [0, 1)")));
        }
        let mut r = rng::named(seed, "init");
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| Dense::init(dims[i], dims[i + 1], i + 1 < n, &mut r))
            .collect();
        Ok(Mlp {
            layers,
            dropout,
            input_scale: None,
        })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Mlp {
            layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            dropout: 0.0,
            input_scale: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn n_classes(&self) -> usize {
        self.layers.last().map_or(0, Dense::outputs)
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(Dense::outputs));
        d
    }

    /// Width of the last hidden layer (the representation).
    pub fn representation_dim(&self) -> usize {
        let n = self.layers.len();
        if n >= 2 {
            self.layers[n - 2].outputs()
        } else {
            self.input_dim()
        }
    }

    fn first_layer(&self, inputs: &Inputs<'_>, idx: &[usize]) -> Array2<f64> {
        let l = &self.layers[0];
        match &inputs.sparse {
            Some(sp) => {
                let mut z = Array2::zeros((idx.len(), l.outputs()));
                for (r, &i) in idx.iter().enumerate() {
                    let mut row = z.row_mut(r);
                    row.assign(&l.b);
                    for &(c, v) in &sp.rows[i] {
                        row.scaled_add(v, &l.w.row(c as usize));
                    }
                }
                z
            }
            None => inputs.gather(idx).dot(&l.w) + &l.b,
        }
    }

    /// Forward pass over rows `idx`. `masks` fixes the dropout masks (used by
    /// gradient checks); otherwise they are drawn from `rng` in train mode.
    pub fn forward_rows<R: Rng>(
        &self,
        inputs: &Inputs<'_>,
        idx: &[usize],
        mode: Mode,
        masks: Option<&[Array2<f64>]>,
        rng: &mut R,
    ) -> Cache {
        let n = self.layers.len();
        let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(n - 1);
        let mut used_masks = Vec::new();
        let mut z = self.first_layer(inputs, idx);
        for li in 0..n {
            if li > 0 {
                z = hidden[li - 1_usize].dot(&self.layers[li].w) + &self.layers[li].b;
            }
            if li + 1 == n {
                break;
            }
            z.mapv_inplace(|v| v.max(0.0));
            if mode == Mode::Train && (self.dropout > 0.0 || masks.is_some()) {
                let mask = match masks {
                    Some(m) => m[li].clone(),
                    None => {
                        let keep = 1.0 - self.dropout;
                        Array2::from_shape_simple_fn(z.raw_dim(), || {
                            if rng.random::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        })
                    }
                };
                z *= &mask;
                used_masks.push(mask);
            }
            hidden.push(std::mem::replace(&mut z, Array2::zeros((0, 0))));
        }
        softmax_rows(&mut z);
        Cache {
            hidden,
            masks: used_masks,
            probs: z,
        }
    }

    /// Eval-mode forward pass on a dense matrix: returns the last hidden
    /// activation (`z_feat`) and the class probabilities.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        let idx: Vec<usize> = (0..x.nrows()).collect();
        let scaled = self.input_scale.as_ref().map(|s| &x * s);
        let inputs = Inputs::dense_only(scaled.as_ref().map_or(x, |s| s.view()));
        let mut cache = self.forward_rows(&inputs, &idx, Mode::Eval, None, &mut rng::named(0, "eval"));
        let z = cache.hidden.pop().unwrap_or_else(|| x.to_owned());
        Ok((z, cache.probs))
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let (_, p) = self.forward(x)?;
        Ok(p.rows().into_iter().map(|r| argmax(r.iter().copied())).collect())
    }

    /// Mean cross-entropy of a cached forward pass.
    pub fn loss(cache: &Cache, labels: &[usize]) -> f64 {
        labels
            .iter()
            .enumerate()
            .map(|(r, &y)| -cache.probs[[r, y]].max(1e-300).ln())
            .sum::<f64>()
            / labels.len() as f64
    }

    /// Gradients of the mean cross-entropy with respect to every parameter.
    pub fn backward(&self, inputs: &Inputs<'_>, idx: &[usize], labels: &[usize], cache: &Cache) -> Gradients {
        let n = self.layers.len();
        let bsz = idx.len() as f64;
        let mut delta = cache.probs.clone();
        for (r, &y) in labels.iter().enumerate() {
            delta[[r, y]] -= 1.0;
        }
        delta /= bsz;
        let mut grads: Vec<Dense> = Vec::with_capacity(n);
        for li in (0..n).rev() {
            let layer = &self.layers[li];
            let db = delta.sum_axis(Axis(0));
            let dw = if li > 0 {
                cache.hidden[li - 1].t().dot(&delta)
            } else {
                match &inputs.sparse {
                    Some(sp) => {
                        let mut dw = Array2::zeros(layer.w.raw_dim());
                        for (r, &i) in idx.iter().enumerate() {
                            let d = delta.row(r);
                            for &(c, v) in &sp.rows[i] {
                                dw.row_mut(c as usize).scaled_add(v, &d);
                            }
                        }
                        dw
                    }
                    None => inputs.gather(idx).t().dot(&delta),
                }
            };
            grads.push(Dense { w: dw, b: db });
            if li == 0 {
                break;
            }
            let mut prev = delta.dot(&layer.w.t());
            // through dropout then ReLU of hidden layer li-1
            if let Some(mask) = cache.masks.get(li - 1) {
                prev *= mask;
            }
            let h = &cache.hidden[li - 1];
            ndarray::Zip::from(&mut prev).and(h).for_each(|d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = prev;
        }
        grads.reverse();
        Gradients { layers: grads }
    }

    fn apply(&mut self, g: &Gradients, velocity: &mut Option<Vec<Dense>>, lr: f64, momentum: f64) {
        match velocity {
            Some(vel) if momentum > 0.0 => {
                for ((l, gl), v) in self.layers.iter_mut().zip(&g.layers).zip(vel.iter_mut()) {
                    v.w *= momentum;
                    v.w.scaled_add(1.0, &gl.w);
                    v.b *= momentum;
                    v.b.scaled_add(1.0, &gl.b);
                    l.w.scaled_add(-lr, &v.w);
                    l.b.scaled_add(-lr, &v.b);
                }
            }
            _ => {
                for (l, gl) in self.layers.iter_mut().zip(&g.layers) {
                    l.w.scaled_add(-lr, &gl.w);
                    l.b.scaled_add(-lr, &gl.b);
                }
            }
        }
    }

    /// Flatten all parameters (for hashing and finite differences).
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied())
            .collect()
    }

    pub fn set_flat(&mut self, v: &[f64]) {
        let mut it = v.iter();
        for l in &mut self.layers {
            for x in l.w.iter_mut().chain(l.b.iter_mut()) {
                *x = *it.next().expect("parameter vector length");
            }
        }
    }

    /// SHA-256 over the little-endian parameter bytes and dims.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for d in self.dims() {
            h.update((d as u64).to_le_bytes());
        }
        for v in self.flat() {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

impl Gradients {
    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()))
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Scale down to global norm `max` if larger.
    pub fn clip(&mut self, max: f64) {
        let n = self.norm();
        if n > max {
            let f = max / n;
            for l in &mut self.layers {
                l.w *= f;
                l.b *= f;
            }
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied())
            .collect()
    }
}

/// Optimizer and architecture settings for MLP training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Heavy-ball momentum; 0 is plain SGD.
    pub momentum: f64,
    /// Rescale each mini-batch gradient to at most this global norm.
    #[serde(default)]
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            hidden: vec![512, 64],
            dropout: 0.0,
            learning_rate: 0.01,
            batch_size: 100,
            epochs: 200,
            momentum: 0.9,
            clip_norm: None,
            seed: 0,
        }
    }
}

impl TrainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::validation("learning rate, batch size and epochs must be positive"));
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::validation("clip norm must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::validation("dropout and momentum must lie in [0, 1)"));
        }
        if self.hidden.iter().any(|h| *h == 0) {
            return Err(Error::validation("hidden widths must be positive"));
        }
        Ok(())
    }

    pub fn dims(&self, input: usize, classes: usize) -> Vec<usize> {
        let mut d = vec![input];
        d.extend(&self.hidden);
        d.push(classes);
        d
    }
}

/// Mini-batch training loop shared by the MLP and the noisy-identity head.
///
/// `perturb` may rewrite each batch's input rows before the forward pass; it
/// receives the batch row indices and the epoch.
pub fn train_network<F>(
    net: &mut Mlp,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    spec: &TrainSpec,
    mut perturb: Option<F>,
) -> Result<Vec<f64>>
where
    F: FnMut(&[usize], &mut Array2<f64>),
{
    spec.validate()?;
    if x.nrows() != labels.len() || x.nrows() == 0 {
        return Err(Error::validation("training inputs and labels must be non-empty and aligned"));
    }
    if x.ncols() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            actual: x.ncols(),
        });
    }
    if let Some(bad) = labels.iter().find(|&&y| y >= net.n_classes()) {
        return Err(Error::validation(format!("label {bad} outside {} classes", net.n_classes())));
    }
    let mut shuffle_rng = rng::named(spec.seed, "shuffle");
    let mut dropout_rng = rng::named(spec.seed, "dropout");
    let scaled = net.input_scale.as_ref().map(|s| &x * s);
    let x = scaled.as_ref().map_or(x, |s| s.view());
    let inputs = if perturb.is_some() {
        Inputs::dense_only(x)
    } else {
        Inputs::new(x)
    };
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut velocity = (spec.momentum > 0.0).then(|| {
        net.layers
            .iter()
            .map(|l| Dense::zeros(l.inputs(), l.outputs()))
            .collect::<Vec<_>>()
    });
    let mut losses = Vec::with_capacity(spec.epochs);
    for _epoch in 0..spec.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(spec.batch_size) {
            let yb: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (cache, grads) = match perturb.as_mut() {
                Some(f) => {
                    let mut xb = inputs.gather(batch);
                    f(batch, &mut xb);
                    let local = Inputs::dense_only(xb.view());
                    let idx: Vec<usize> = (0..batch.len()).collect();
                    let cache = net.forward_rows(&local, &idx, Mode::Train, None, &mut dropout_rng);
                    let g = net.backward(&local, &idx, &yb, &cache);
                    (cache, g)
                }
                None => {
                    let cache = net.forward_rows(&inputs, batch, Mode::Train, None, &mut dropout_rng);
                    let g = net.backward(&inputs, batch, &yb, &cache);
                    (cache, g)
                }
            };
            epoch_loss += Mlp::loss(&cache, &yb) * batch.len() as f64;
            let mut grads = grads;
            if let Some(max) = spec.clip_norm {
                grads.clip(max);
            }
            net.apply(&grads, &mut velocity, spec.learning_rate, spec.momentum);
        }
        losses.push(epoch_loss / x.nrows() as f64);
    }
    Ok(losses)
}

/// Train a fresh MLP with the spec's hidden widths. Returns final-epoch
/// parameters; identical seeds give bit-identical parameters.
pub fn train_mlp(x: ArrayView2<'_, f64>, labels: &[usize], n_classes: usize, spec: &TrainSpec) -> Result<Mlp> {
    spec.validate()?;
    let mut net = Mlp::new(&spec.dims(x.ncols(), n_classes), spec.dropout, spec.seed)?;
    train_network::<fn(&[usize], &mut Array2<f64>)>(&mut net, x, labels, spec, None)?;
    Ok(net)
}

/// Per-column multipliers giving each block of consecutive columns unit
/// mean squared row norm on `x`. Zero blocks keep scale 1.
pub fn block_scale(x: ArrayView2<'_, f64>, blocks: &[usize]) -> Array1<f64> {
    let n = x.nrows().max(1) as f64;
    let mut scale = Array1::ones(x.ncols());
    let mut off = 0;
    for &len in blocks {
        let ss: f64 = x.slice(s![.., off..off + len]).iter().map(|v| v * v).sum();
        if ss > 0.0 {
            scale.slice_mut(s![off..off + len]).fill((n / ss).sqrt());
        }
        off += len;
    }
    scale
}

/// Constant classifier predicting the most common training class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Majority {
    pub class: usize,
}

impl Majority {
    pub fn predict(&self, n: usize) -> Vec<usize> {
        vec![self.class; n]
    }
}

/// Most frequent label; ties go to the lowest class index.
pub fn majority_baseline(labels: &[usize]) -> Result<Majority> {
    if labels.is_empty() {
        return Err(Error::validation("majority baseline needs at least one label"));
    }
    let k = labels.iter().max().copied().unwrap_or(0) + 1;
    let mut counts = vec![0usize; k];
    for &y in labels {
        counts[y] += 1;
    }
    let class = argmax(counts.iter().map(|c| *c as f64));
    Ok(Majority { class })
}

/// Columns `cols` of a matrix.
pub fn columns(x: ArrayView2<'_, f64>, cols: std::ops::Range<usize>) -> Array2<f64> {
    x.slice(s![.., cols]).to_owned()
}
