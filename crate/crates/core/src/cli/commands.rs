use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use serde::Serialize;

use super::args::*;
use super::grid::GridFile;
use super::output::{write_csv, Stage};
use super::report::{self, tsne_svg};
use super::tables::*;
use super::{usage, CliError, CliResult};
use crate::analysis::{self, KeyGroup, TokenKind, TsneConfig};
use crate::artifact::{Artifact, Model};
use crate::datamodel::{self, Dataset, KeyClass, MoodClass};
use crate::eval::{
    self, macro_f1, make_splits_with, nested_cv, probe_identity, wilcoxon_signed_rank, FeatureSource, SplitPlan,
    SplitScheme, Target,
};
use crate::features::{self, Corpus, KeystrokeVariant, Modalities, TimingBuckets, VocabOptions};
use crate::nimlp::{self, NoiseMode, SelectionRule, SweepData, SweepOptions};
use crate::nnet::{self, block_scale, Mlp, TrainSpec};
use crate::plot;
use crate::svm::{train_svm, Kernel, SvmSpec};
use crate::synthgen::{self, GenConfig};

#[derive(Serialize)]
struct Options<'a> {
    global: &'a GlobalArgs,
    command: &'a Command,
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let opts = Options { global: &cli.global, command: &cli.command };
    let g = &cli.global;
    match &cli.command {
        Command::Gen(a) => gen(g, a, &opts),
        Command::Featurize(a) => featurize(g, a, &opts),
        Command::Train(a) => train(g, a, &opts),
        Command::Nimlp(a) => run_nimlp(g, a, &opts),
        Command::Evaluate(a) => evaluate(g, a, &opts),
        Command::Probe(a) => probe(g, a, &opts),
        Command::Analyze(a) => analyze(g, a, &opts),
        Command::Report(_) => report::report(g, &opts),
    }
}

/// The explicit path, or the conventional one inside the run directory.
fn input(explicit: Option<&PathBuf>, run: &Path, default: &str) -> CliResult<PathBuf> {
    let p = explicit.cloned().unwrap_or_else(|| run.join(default));
    if !p.exists() {
        return Err(usage(format!("missing input {}", p.display())));
    }
    Ok(p)
}

fn parse<T: std::str::FromStr<Err = crate::error::Error>>(s: &str) -> CliResult<T> {
    Ok(s.parse()?)
}

fn modalities(s: &str) -> CliResult<Modalities> {
    parse(s)
}

fn present(ds: &Dataset) -> Modalities {
    match ds.samples.first() {
        Some(s) => Modalities { text: !s.x_t.is_empty(), keys: !s.x_k.is_empty(), apps: !s.x_a.is_empty() },
        None => Modalities::ALL,
    }
}

fn require_blocks(ds: &Dataset, m: Modalities) -> CliResult<()> {
    let p = present(ds);
    if (m.text && !p.text) || (m.keys && !p.keys) || (m.apps && !p.apps) {
        return Err(usage(format!("dataset has modalities {p} but {m} was requested")));
    }
    Ok(())
}

fn load_dataset(st: &mut Stage, explicit: Option<&PathBuf>) -> CliResult<Dataset> {
    let p = input(explicit, &st.run, "featurize/dataset.tsv")?;
    st.input(&p)?;
    Ok(datamodel::read_dataset(&p)?)
}

fn load_corpus(st: &mut Stage, explicit: Option<&PathBuf>, min_reports: usize) -> CliResult<Corpus> {
    let p = input(explicit, &st.run, "gen/logs")?;
    st.input(&p)?;
    let logs = datamodel::read_log_dir(&p)?;
    Ok(Corpus::from_logs(logs)?.filter_users(min_reports)?)
}

fn plan(ds: &Dataset, split: &str, folds: usize) -> CliResult<SplitPlan> {
    let scheme: SplitScheme = parse(split)?;
    Ok(make_splits_with(ds, scheme, folds)?)
}

fn target_of(t: TargetArg) -> Target {
    match t {
        TargetArg::Mood => Target::Mood,
        TargetArg::Identity => Target::Identity,
    }
}

fn target_name(t: TargetArg) -> &'static str {
    match t {
        TargetArg::Mood => "mood",
        TargetArg::Identity => "identity",
    }
}

fn mlp_spec(a: &MlpArgs, seed: u64) -> TrainSpec {
    TrainSpec {
        hidden: a.hidden.clone(),
        dropout: a.dropout,
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        epochs: a.epochs,
        momentum: a.momentum,
        clip_norm: a.clip_norm,
        seed,
    }
}

/// Scaled feature rows and the per-column scale fitted on `fit_rows`.
fn scaled(ds: &Dataset, m: Modalities, rows: &[usize], fit_rows: &[usize]) -> (Array2<f64>, ndarray::Array1<f64>) {
    let blocks = ds.config.active_blocks(m);
    let scale = block_scale(ds.matrix_rows(m, fit_rows).view(), &blocks);
    (ds.matrix_rows(m, rows) * &scale, scale)
}

fn pick(v: &[usize], rows: &[usize]) -> Vec<usize> {
    rows.iter().map(|&i| v[i]).collect()
}

fn gen(g: &GlobalArgs, a: &GenArgs, opts: &Options<'_>) -> CliResult<()> {
    let mut cfg = GenConfig {
        n_users: a.users,
        identity_strength: a.identity_strength,
        mood_strength: a.mood_strength,
        vocab_size: a.vocab_size,
        n_apps: a.apps,
        seed: g.seed,
        ..Default::default()
    };
    if let Some(d) = a.days {
        cfg.n_days_per_user = d;
        cfg.total_days = None;
    } else if let Some(t) = a.total_days {
        cfg.total_days = Some(t);
    }
    if let Some(s) = a.sessions_per_day {
        cfg.sessions_per_day = s;
    }
    if let Some(w) = a.words_per_session {
        cfg.words_per_session = w;
    }
    if let Some(m) = &a.class_mix {
        if m.len() != 3 {
            return Err(usage(format!("--class-mix needs 3 values, got {}", m.len())));
        }
        cfg.class_mix = [m[0], m[1], m[2]];
    }
    cfg.validate()?;
    let (logs, ds) = synthgen::generate(&cfg)?;
    let st = Stage::begin(&g.out, "gen")?;
    datamodel::write_log_dir(&st.dir("logs")?, &logs)?;
    st.write_json("gen_config.json", &cfg)?;
    st.write_json("truth.json", &synthgen::plant_report(&cfg, &ds))?;
    st.commit(g.seed, opts)?;
    Ok(())
}

fn featurize(g: &GlobalArgs, a: &FeaturizeArgs, opts: &Options<'_>) -> CliResult<()> {
    let m = modalities(&a.modalities)?;
    let mut st = Stage::begin(&g.out, "featurize")?;
    let corpus = load_corpus(&mut st, a.logs.as_ref(), a.min_reports)?;
    let vocab = VocabOptions {
        size: a.vocab_size,
        variant: match a.variant {
            VariantArg::Char => KeystrokeVariant::Char,
            VariantArg::Split => KeystrokeVariant::SplitChar,
            VariantArg::Word => KeystrokeVariant::Word,
        },
        ..Default::default()
    };
    let rows: Vec<usize> = (0..corpus.days.len()).collect();
    let fc = features::fit_on_days(&corpus, &rows, &vocab, "all")?;
    let ds = features::featurize_corpus(&corpus, &fc, m)?;
    datamodel::write_dataset(&ds, &st.path("dataset.tsv"))?;
    st.write_json("feature_config.json", &fc)?;
    st.write_json("labels.json", &datamodel::label_summary(&ds))?;
    let dest = st.commit(g.seed, opts)?;
    if let Some(p) = &a.config_out {
        std::fs::copy(dest.join("feature_config.json"), p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LossRow {
    step: usize,
    loss: f64,
}

#[derive(Serialize)]
struct TrainMetrics {
    n_train: usize,
    train_f1: f64,
    train_accuracy: f64,
    holdout_fold: Option<usize>,
    holdout_f1: Option<f64>,
    holdout_accuracy: Option<f64>,
}

fn train(g: &GlobalArgs, a: &TrainArgs, opts: &Options<'_>) -> CliResult<()> {
    let m = modalities(&a.modalities)?;
    let kernel: Kernel = parse(&a.kernel)?;
    let spec = mlp_spec(&a.mlp, g.seed);
    spec.validate()?;
    SvmSpec { c: a.c, kernel }.validate()?;
    let mut st = Stage::begin(&g.out, "train")?;
    let ds = load_dataset(&mut st, a.dataset.as_ref())?;
    require_blocks(&ds, m)?;
    let target = target_of(a.target);
    let labels = target.labels(&ds);
    let n_classes = target.n_classes(&ds);
    let all: Vec<usize> = (0..ds.len()).collect();
    let (rows, held): (Vec<usize>, Vec<usize>) = match a.holdout_fold {
        Some(k) => {
            let p = plan(&ds, &a.split, a.folds)?;
            if k >= p.n_folds() {
                return Err(usage(format!("holdout fold {k} out of range")));
            }
            (p.outer_train(k), p.test(k).to_vec())
        }
        None => (all, Vec::new()),
    };
    let (x, scale) = scaled(&ds, m, &rows, &rows);
    let y = pick(&labels, &rows);
    let (model, losses) = match a.model {
        ModelArg::Majority => (Model::Majority { model: nnet::majority_baseline(&y)? }, Vec::new()),
        ModelArg::Mlp => {
            let mut net = Mlp::new(&spec.dims(x.ncols(), n_classes), spec.dropout, spec.seed)?;
            let losses = nnet::train_network::<fn(&[usize], &mut Array2<f64>)>(&mut net, x.view(), &y, &spec, None)?;
            (Model::Mlp { spec: spec.clone(), net }, losses)
        }
        ModelArg::Svm => (Model::Svm { model: train_svm(x.view(), &y, n_classes, &SvmSpec { c: a.c, kernel })? }, Vec::new()),
        ModelArg::Logreg => {
            let lr = nnet::train_logreg(x.view(), &y, n_classes, &Default::default())?;
            let trace = lr.loss_trace.clone();
            (Model::LogReg { model: lr }, trace)
        }
    };
    let mut art = Artifact::new(model, g.seed, target_name(a.target), &m.code(), ds.config.fingerprint(), x.ncols(), n_classes, Some(scale));
    art.holdout_fold = a.holdout_fold;
    let score = |r: &[usize]| -> CliResult<(f64, f64)> {
        let pred = art.predict(ds.matrix_rows(m, r).view())?;
        let yy = pick(&labels, r);
        Ok((macro_f1(&pred, &yy, n_classes)?, eval::accuracy(&pred, &yy)?))
    };
    let (train_f1, train_accuracy) = score(&rows)?;
    let held_scores = if held.is_empty() { None } else { Some(score(&held)?) };
    st.write_json(
        "metrics.json",
        &TrainMetrics {
            n_train: rows.len(),
            train_f1,
            train_accuracy,
            holdout_fold: a.holdout_fold,
            holdout_f1: held_scores.map(|s| s.0),
            holdout_accuracy: held_scores.map(|s| s.1),
        },
    )?;
    if !losses.is_empty() {
        let rows: Vec<LossRow> = losses.iter().enumerate().map(|(step, &loss)| LossRow { step, loss }).collect();
        st.write_csv("loss.csv", &rows)?;
    }
    art.save(&st.path("model.json"))?;
    st.commit(g.seed, opts)?;
    Ok(())
}

fn run_nimlp(g: &GlobalArgs, a: &NimlpArgs, opts: &Options<'_>) -> CliResult<()> {
    let m = modalities(&a.modalities)?;
    let rule: SelectionRule = parse(&a.rule)?;
    let noise: NoiseMode = parse(&a.noise)?;
    let grid = GridFile::load(a.grid_file.as_deref())?;
    let lambdas = a.lambda_grid.clone().unwrap_or_else(|| grid.lambdas());
    let sigmas = a.sigma_grid.clone().unwrap_or_else(|| grid.sigmas());
    if lambdas.iter().any(|l| !(*l >= 0.0)) || sigmas.iter().any(|s| !(*s >= 0.0)) {
        return Err(usage("lambda and sigma values must be non-negative"));
    }
    let spec = mlp_spec(&a.mlp, g.seed);
    spec.validate()?;
    let mut st = Stage::begin(&g.out, "nimlp")?;
    let ds = load_dataset(&mut st, a.dataset.as_ref())?;
    require_blocks(&ds, m)?;
    let p = plan(&ds, &a.split, a.folds)?;
    let labels = ds.labels();
    let users = ds.user_ids();

    let (extractor, scale, val_fold) = match &a.pretrained {
        Some(path) => {
            st.input(path)?;
            let art = Artifact::load(path)?;
            let Model::Mlp { net, .. } = art.model else {
                return Err(usage(format!("{} is not an MLP artifact", path.display())));
            };
            if art.target != "mood" || art.modalities != m.code() {
                return Err(usage(format!(
                    "pretrained model is a {} model on {}, expected mood on {}",
                    art.target,
                    art.modalities,
                    m.code()
                )));
            }
            if art.feature_fingerprint != ds.config.fingerprint() {
                return Err(usage("pretrained model was fitted on a different feature configuration"));
            }
            let val = match art.holdout_fold {
                Some(k) => k,
                None => {
                    log::warn!("pretrained model records no holdout fold; validation fold {} may overlap its training data", a.val_fold);
                    a.val_fold
                }
            };
            let scale = art.input_scale.unwrap_or_else(|| ndarray::Array1::ones(art.input_dim));
            (net, scale, val)
        }
        None => {
            if a.val_fold >= p.n_folds() {
                return Err(usage(format!("validation fold {} out of range", a.val_fold)));
            }
            let tr = p.outer_train(a.val_fold);
            let (x, scale) = scaled(&ds, m, &tr, &tr);
            let net = nnet::train_mlp(x.view(), &pick(&labels, &tr), MoodClass::ALL.len(), &spec)?;
            let mut pre = Artifact::new(
                Model::Mlp { spec: spec.clone(), net: net.clone() },
                g.seed,
                "mood",
                &m.code(),
                ds.config.fingerprint(),
                x.ncols(),
                MoodClass::ALL.len(),
                Some(scale.clone()),
            );
            pre.holdout_fold = Some(a.val_fold);
            pre.save(&st.path("pretrained.json"))?;
            (net, scale, a.val_fold)
        }
    };
    if val_fold >= p.n_folds() {
        return Err(usage(format!("validation fold {val_fold} out of range")));
    }
    let tr = p.outer_train(val_fold);
    let va = p.test(val_fold).to_vec();
    let x = ds.matrix(m) * &scale;
    if x.ncols() != extractor.input_dim() {
        return Err(usage(format!("pretrained model expects {} inputs, dataset gives {}", extractor.input_dim(), x.ncols())));
    }
    let z = extractor.forward(x.view())?.0;
    let (zt, zv) = (z.select(Axis(0), &tr), z.select(Axis(0), &va));
    let (yt, yv, ut, uv) = (pick(&labels, &tr), pick(&labels, &va), pick(&users, &tr), pick(&users, &va));
    let sweep = SweepOptions { lambdas, sigmas, head: spec.clone(), noise, rule, probe_seed: g.seed };
    let (model, rep) = nimlp::sweep_sigma(
        &extractor,
        ds.n_users(),
        &SweepData { z_feat: zt.view(), labels: &yt, users: &ut },
        &SweepData { z_feat: zv.view(), labels: &yv, users: &uv },
        &sweep,
    )?;

    let on_front = |l: f64, s: f64| rep.pareto.iter().any(|q| q.lambda == l && q.sigma == s);
    let rows: Vec<SweepRow> = rep
        .points
        .iter()
        .enumerate()
        .map(|(i, q)| SweepRow {
            lambda: q.lambda,
            sigma: q.sigma,
            f1: q.t,
            identity_accuracy: q.s,
            r: q.r.value,
            r_negative: q.r.negative,
            sparsity: q.sparsity,
            pareto: on_front(q.lambda, q.sigma),
            selected: i == rep.selected,
        })
        .collect();
    let sel = &rep.points[rep.selected];
    let table5 = vec![
        PrivacyRow { modalities: m.to_string(), model: "mlp".into(), f1: rep.t_mlp, identity_accuracy: rep.s_mlp, lambda: None, sigma: None, r: None },
        PrivacyRow {
            modalities: m.to_string(),
            model: "nimlp".into(),
            f1: sel.t,
            identity_accuracy: sel.s,
            lambda: Some(sel.lambda),
            sigma: Some(sel.sigma),
            r: Some(sel.r.value),
        },
    ];
    st.write_csv("sweep.csv", &rows)?;
    st.write_csv("table5.csv", &table5)?;
    st.write_json("sweep_report.json", &rep)?;
    let head = nimlp::head_spec(&spec, extractor.representation_dim());
    let mut art = Artifact::new(
        Model::Nimlp { spec: head, model },
        g.seed,
        "mood",
        &m.code(),
        ds.config.fingerprint(),
        x.ncols(),
        MoodClass::ALL.len(),
        Some(scale),
    );
    art.holdout_fold = Some(val_fold);
    art.save(&st.path("model.json"))?;
    let dest = st.commit(g.seed, opts)?;
    if let Some(p) = &a.report_out {
        std::fs::copy(dest.join("sweep_report.json"), p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = eval::mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn evaluate(g: &GlobalArgs, a: &EvaluateArgs, opts: &Options<'_>) -> CliResult<()> {
    let sets: Vec<Modalities> = a.sets.iter().map(|s| modalities(s)).collect::<CliResult<_>>()?;
    let grid = GridFile::load(a.grid_file.as_deref())?;
    for f in &a.families {
        grid.family(f, Modalities::ALL, g.seed)?;
    }
    let scheme: SplitScheme = parse(&a.split)?;
    let mut st = Stage::begin(&g.out, "evaluate")?;
    let corpus;
    let vocab = VocabOptions::default();
    let ds;
    let (source, p) = match &a.refit_logs {
        Some(path) => {
            corpus = load_corpus(&mut st, Some(path), datamodel::MIN_REPORTS_PER_USER)?;
            let keys: Vec<_> = corpus.days.iter().map(|d| (d.user, d.date)).collect();
            let p = eval::make_splits_n(&keys, scheme, a.folds)?;
            (FeatureSource::Refit { corpus: &corpus, opts: &vocab }, p)
        }
        None => {
            ds = load_dataset(&mut st, a.dataset.as_ref())?;
            for &m in &sets {
                require_blocks(&ds, m)?;
            }
            let p = make_splits_with(&ds, scheme, a.folds)?;
            (FeatureSource::Fixed(&ds), p)
        }
    };
    let target = target_of(a.target);
    let mut folds = Vec::new();
    let mut f1s: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for &m in &sets {
        for name in &a.families {
            let fam = grid.family(name, m, g.seed)?;
            let r = nested_cv(&source, m, target, &p, &fam)?;
            for f in &r.folds {
                folds.push(FoldRow {
                    modalities: m.to_string(),
                    family: name.clone(),
                    fold: f.fold,
                    selected: f.selected,
                    f1: f.test_f1,
                    accuracy: f.test_accuracy,
                    n_test: f.n_test,
                });
            }
            f1s.insert((m.to_string(), name.clone()), r.f1());
        }
    }
    let fused = sets.iter().find(|m| **m == Modalities::ALL).map(|m| m.to_string());
    let mut table = Vec::new();
    for &m in &sets {
        for name in &a.families {
            let key = (m.to_string(), name.clone());
            let f = &f1s[&key];
            let acc: Vec<f64> = folds.iter().filter(|r| r.modalities == key.0 && &r.family == name).map(|r| r.accuracy).collect();
            let p_fused_better = match &fused {
                Some(fk) if *fk != key.0 => {
                    let base = &f1s[&(fk.clone(), name.clone())];
                    wilcoxon_signed_rank(base, f).ok().map(|w| w.p_greater)
                }
                _ => None,
            };
            table.push(ModalityRow {
                modalities: key.0.clone(),
                family: name.clone(),
                f1: eval::mean(f),
                f1_std: std_dev(f),
                accuracy: eval::mean(&acc),
                p_fused_better,
            });
        }
    }
    st.write_csv("folds.csv", &folds)?;
    st.write_csv("table1.csv", &table)?;
    st.write_json("splits.json", &p)?;
    st.commit(g.seed, opts)?;
    Ok(())
}

fn model_label(run: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(run).unwrap_or(path);
    let s: Vec<String> = rel.with_extension("").components().map(|c| c.as_os_str().to_string_lossy().to_string()).collect();
    s.join("_").replace(['.', ' '], "")
}

/// Hidden representation of every dataset row under an MLP or NI-MLP
/// artifact.
fn representations(art: &Artifact, ds: &Dataset) -> CliResult<Array2<f64>> {
    let m = modalities(&art.modalities)?;
    require_blocks(ds, m)?;
    let x = art.scaled(ds.matrix(m).view());
    match &art.model {
        Model::Mlp { net, .. } => Ok(net.forward(x.view())?.0),
        Model::Nimlp { model, .. } => Ok(model.representation(x.view())?),
        other => Err(usage(format!("{} artifacts have no learned representation", other.kind()))),
    }
}

fn probe(g: &GlobalArgs, a: &ProbeArgs, opts: &Options<'_>) -> CliResult<()> {
    let sets: Vec<Modalities> = a.sets.iter().map(|s| modalities(s)).collect::<CliResult<_>>()?;
    let grid = GridFile::load(a.grid_file.as_deref())?;
    for f in &a.families {
        grid.family(f, Modalities::ALL, g.seed)?;
    }
    let mut st = Stage::begin(&g.out, "probe")?;
    let ds = load_dataset(&mut st, a.dataset.as_ref())?;
    for &m in &sets {
        require_blocks(&ds, m)?;
    }
    let mut arts = Vec::new();
    for p in &a.models {
        if !p.exists() {
            return Err(usage(format!("missing input {}", p.display())));
        }
        st.input(p)?;
        arts.push((model_label(&g.out, p), Artifact::load(p)?));
    }
    let p = plan(&ds, &a.split, a.folds)?;
    let source = FeatureSource::Fixed(&ds);
    let mut raw = Vec::new();
    let mut folds = Vec::new();
    for &m in &sets {
        for name in &a.families {
            let fam = grid.family(name, m, g.seed)?;
            let r = nested_cv(&source, m, Target::Identity, &p, &fam)?;
            raw.push(RawProbeRow { modalities: m.to_string(), family: name.clone(), f1: r.mean_f1(), accuracy: r.mean_accuracy() });
            for f in &r.folds {
                folds.push(FoldRow {
                    modalities: m.to_string(),
                    family: name.clone(),
                    fold: f.fold,
                    selected: f.selected,
                    f1: f.test_f1,
                    accuracy: f.test_accuracy,
                    n_test: f.n_test,
                });
            }
        }
    }
    let users = ds.user_ids();
    let mut reps = Vec::new();
    for (label, art) in &arts {
        let z = representations(art, &ds)?;
        let r = probe_identity(z.view(), &users, g.seed)?;
        reps.push(RepProbeRow { model: label.clone(), kind: art.model.kind().into(), accuracy: r.accuracy, n_test: r.n_test });
    }
    st.write_csv("raw_identity.csv", &raw)?;
    st.write_csv("raw_identity_folds.csv", &folds)?;
    if !reps.is_empty() {
        st.write_csv("representations.csv", &reps)?;
    }
    st.commit(g.seed, opts)?;
    Ok(())
}

fn association_rows(t: &analysis::AssociationTable) -> (Vec<AssociationRow>, Vec<CrossUserRow>) {
    let mut rows = Vec::new();
    for (user, list) in t.users.iter().zip(&t.per_user) {
        for (rank, a) in list.iter().enumerate() {
            rows.push(AssociationRow {
                user: user.clone(),
                rank: rank + 1,
                token: a.token.clone(),
                polarity: match a.polarity {
                    analysis::Polarity::Positive => "positive".into(),
                    analysis::Polarity::Negative => "negative".into(),
                },
                delta: a.delta,
                negative: a.counts[0],
                neutral: a.counts[1],
                positive: a.counts[2],
            });
        }
    }
    let mut cross: Vec<CrossUserRow> = t
        .cross_user
        .iter()
        .map(|(token, &(p, n))| CrossUserRow { token: token.clone(), positive_users: p, negative_users: n })
        .collect();
    cross.sort_by(|a, b| (b.positive_users + b.negative_users).cmp(&(a.positive_users + a.negative_users)).then_with(|| a.token.cmp(&b.token)));
    (rows, cross)
}

fn analyze(g: &GlobalArgs, a: &AnalyzeArgs, opts: &Options<'_>) -> CliResult<()> {
    if a.min_count == 0 || a.top_words == 0 {
        return Err(usage("--min-count and --top-words must be positive"));
    }
    let mut st = Stage::begin(&g.out, "analyze")?;
    let corpus = load_corpus(&mut st, a.logs.as_ref(), a.min_reports)?;
    let ds = if a.models.is_empty() { None } else { Some(load_dataset(&mut st, a.dataset.as_ref())?) };
    let mut arts = Vec::new();
    for p in &a.models {
        if !p.exists() {
            return Err(usage(format!("missing input {}", p.display())));
        }
        st.input(p)?;
        arts.push((model_label(&g.out, p), Artifact::load(p)?));
    }

    for (kind, name) in [(TokenKind::Words, "words"), (TokenKind::Emojis, "emojis"), (TokenKind::Apps, "apps")] {
        let t = analysis::token_associations(&corpus, kind, a.min_count);
        let (rows, cross) = association_rows(&t);
        st.write_csv(&format!("associations_{name}.csv"), &rows)?;
        st.write_csv(&format!("cross_user_{name}.csv"), &cross)?;
    }

    let buckets = TimingBuckets::default();
    let timing: Vec<TimingRow> = analysis::word_timing_significance(&corpus, a.top_words, buckets.min_timing)
        .into_iter()
        .map(|f| TimingRow {
            user: f.user,
            word: f.word,
            direction: match f.direction {
                analysis::Direction::Faster => "faster".into(),
                analysis::Direction::Slower => "slower".into(),
            },
            p: f.p,
            n_positive: f.n_positive,
            n_negative: f.n_negative,
        })
        .collect();
    st.write_csv("word_timing.csv", &timing)?;

    let edges = buckets.edges();
    let groups: Vec<(String, KeyGroup)> = std::iter::once(("all".to_string(), KeyGroup::All))
        .chain(KeyClass::ALL.iter().map(|&k| (k.as_str().to_string(), KeyGroup::Class(k))))
        .collect();
    let mut hist_rows = Vec::new();
    let hist_dir = st.dir("histograms")?;
    for (gname, group) in &groups {
        for h in analysis::keystroke_histograms(&corpus, group, &buckets) {
            let mut series = Vec::new();
            for (c, mood) in MoodClass::ALL.iter().enumerate() {
                let Some(v) = &h.by_mood[c] else { continue };
                for (b, &share) in v.iter().enumerate() {
                    hist_rows.push(HistogramRow { user: h.user.clone(), group: gname.clone(), mood: mood.to_string(), bucket: b, left_edge: edges[b], share });
                }
                series.push(plot::Series::new(mood.as_str(), edges.iter().copied().zip(v.iter().copied()).collect(), c));
            }
            if gname == "all" || gname == "enter" {
                let axes = plot::Axes {
                    title: format!("{} {gname} key presses", h.user),
                    x_label: "duration (s)".into(),
                    y_label: "share".into(),
                    log_x: true,
                };
                let svg = plot::step_histogram(&series, buckets.high * 1.25, &axes);
                std::fs::write(hist_dir.join(format!("{}_{gname}.svg", h.user)), svg)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
            }
        }
    }
    st.write_csv("histograms.csv", &hist_rows)?;

    if let Some(ds) = &ds {
        let cfg = TsneConfig { perplexity: a.perplexity, iterations: a.tsne_iterations, seed: g.seed, ..Default::default() };
        for (label, art) in &arts {
            let z = representations(art, ds)?;
            let res = analysis::tsne(z.view(), &cfg)?;
            let rows: Vec<TsneRow> = ds
                .samples
                .iter()
                .zip(res.coords.rows())
                .map(|(s, c)| TsneRow { user: ds.users[s.user].clone(), label: s.y.to_string(), x: c[0], y: c[1] })
                .collect();
            write_csv(&st.path(&format!("tsne_{label}.csv")), &rows)?;
            st.write_text(&format!("tsne_{label}.svg"), &tsne_svg(&rows, &format!("t-SNE of {label}")))?;
            let kl: Vec<LossRow> = res.kl_trace.iter().enumerate().map(|(step, &loss)| LossRow { step, loss }).collect();
            write_csv(&st.path(&format!("tsne_{label}_kl.csv")), &kl)?;
        }
    }
    st.commit(g.seed, opts)?;
    Ok(())
}
