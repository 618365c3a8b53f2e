//! The `report` stage: gathers tables and redraws plots from earlier stages.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use super::args::GlobalArgs;
use super::output::{list_files, read_csv, Stage};
use super::tables::*;
use super::{usage, CliResult};
use crate::plot::{self, Axes, Series};

pub fn tsne_svg(rows: &[TsneRow], title: &str) -> String {
    let mut by_user: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        by_user.entry(&r.user).or_default().push((r.x, r.y));
    }
    let series: Vec<Series> = by_user.into_iter().enumerate().map(|(i, (u, pts))| Series::new(u, pts, i)).collect();
    plot::scatter(&series, &Axes { title: title.into(), x_label: "t-SNE 1".into(), y_label: "t-SNE 2".into(), log_x: false })
}

pub fn tradeoff_svg(rows: &[SweepRow]) -> String {
    let pts = |f: &dyn Fn(&SweepRow) -> bool| -> Vec<(f64, f64)> {
        rows.iter().filter(|r| f(r)).map(|r| (r.identity_accuracy, r.f1)).collect()
    };
    let series = vec![
        Series::new("sweep", pts(&|r| !r.pareto && !r.selected), 7),
        Series::new("pareto front", pts(&|r| r.pareto && !r.selected), 0),
        Series::new("selected", pts(&|r| r.selected), 3),
    ];
    let mut front = pts(&|r| r.pareto);
    front.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let axes = Axes {
        title: "Mood performance against identity leakage".into(),
        x_label: "identity probe accuracy".into(),
        y_label: "mood macro-F1".into(),
        log_x: false,
    };
    plot::scatter_with_line(&series, Some(&front), &axes)
}

#[derive(Serialize)]
struct Summary {
    table1: Vec<ModalityRow>,
    table5: Vec<PrivacyRow>,
    n_fold_rows: usize,
    n_sweep_points: usize,
    pareto: Vec<SweepRow>,
    raw_identity: Vec<RawProbeRow>,
    tsne: Vec<String>,
}

pub fn report<O: Serialize>(g: &GlobalArgs, opts: &O) -> CliResult<()> {
    let run = &g.out;
    let required: Vec<PathBuf> = ["evaluate/table1.csv", "evaluate/folds.csv", "nimlp/sweep.csv", "nimlp/table5.csv"]
        .iter()
        .map(|p| run.join(p))
        .collect();
    let missing: Vec<String> = required.iter().filter(|p| !p.exists()).map(|p| p.display().to_string()).collect();
    if !missing.is_empty() {
        return Err(usage(format!("missing inputs: {}", missing.join(", "))));
    }
    let table1: Vec<ModalityRow> = read_csv(&required[0])?;
    let folds: Vec<FoldRow> = read_csv(&required[1])?;
    let sweep: Vec<SweepRow> = read_csv(&required[2])?;
    let table5: Vec<PrivacyRow> = read_csv(&required[3])?;
    let raw_path = run.join("probe/raw_identity.csv");
    let raw: Vec<RawProbeRow> = if raw_path.exists() { read_csv(&raw_path)? } else { Vec::new() };
    let analyze = run.join("analyze");
    let tsne_files: Vec<PathBuf> = if analyze.is_dir() {
        list_files(&analyze)?
            .into_iter()
            .filter(|p| {
                let n = p.file_name().map(|f| f.to_string_lossy().to_string()).unwrap_or_default();
                n.starts_with("tsne_") && n.ends_with(".csv") && !n.ends_with("_kl.csv")
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut st = Stage::begin(run, "report")?;
    for p in required.iter().chain(std::iter::once(&raw_path).filter(|p| p.exists())).chain(&tsne_files) {
        st.input(p)?;
    }
    st.write_csv("table1.csv", &table1)?;
    st.write_csv("table5.csv", &table5)?;
    if !raw.is_empty() {
        st.write_csv("table4.csv", &raw)?;
    }
    st.write_text("tradeoff.svg", &tradeoff_svg(&sweep))?;
    let mut tsne_names = Vec::new();
    for p in &tsne_files {
        let rows: Vec<TsneRow> = read_csv(p)?;
        let stem = p.file_stem().expect("file").to_string_lossy().to_string();
        let label = stem.trim_start_matches("tsne_").to_string();
        st.write_text(&format!("{stem}.svg"), &tsne_svg(&rows, &format!("t-SNE of {label}")))?;
        tsne_names.push(format!("{stem}.svg"));
    }
    st.write_json(
        "summary.json",
        &Summary {
            table1,
            table5,
            n_fold_rows: folds.len(),
            n_sweep_points: sweep.len(),
            pareto: sweep.iter().filter(|r| r.pareto).cloned().collect(),
            raw_identity: raw,
            tsne: tsne_names,
        },
    )?;
    st.commit(g.seed, opts)?;
    Ok(())
}
