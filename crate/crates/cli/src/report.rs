//! Figures and their data tables from persisted sweep outputs.

use std::path::{Path, PathBuf};

use anyhow::Context;
use dlalab::bounds::{default_p_grid, nt_curve, optimal_p};
use dlalab::dla::Boundary;
use dlalab::experiments::{ExperimentRecord, FailedRun, GroupFit, GroupStats, Moments, SweepSummary};
use dlalab::training::Algorithm;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{num, write_atomic, write_csv, write_json, Provenance};
use crate::svg::{render, Marker, Panel, Point, Series};

pub const RECORDS_JSON: &str = "records.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const FIGURES_DIR: &str = "figures";

#[derive(Debug, Clone, Deserialize)]
pub struct RecordsFile {
    pub provenance: Provenance,
    pub records: Vec<ExperimentRecord>,
    #[serde(default)]
    pub failures: Vec<FailedRun>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SummaryFile {
    pub provenance: Provenance,
    pub summary: SweepSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureDescriptor {
    pub family: String,
    pub title: String,
    pub data: PathBuf,
    pub svg: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub source_config_hash: String,
    pub figures: Vec<FigureDescriptor>,
}

/// What a report run did.
#[derive(Debug, Clone, PartialEq)]
pub enum ReportOutcome {
    Empty,
    Written(ReportBundle),
}

fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn label(b: Boundary, a: Algorithm) -> String {
    format!("{b}/{a}")
}

fn group_keys(summary: &SweepSummary) -> Vec<(Boundary, Algorithm)> {
    let mut keys: Vec<_> = summary.groups.iter().map(|g| (g.boundary, g.algorithm)).collect();
    keys.sort();
    keys.dedup();
    keys
}

fn groups_of(summary: &SweepSummary, b: Boundary, a: Algorithm) -> Vec<&GroupStats> {
    let mut v: Vec<_> = summary.groups.iter().filter(|g| g.boundary == b && g.algorithm == a).collect();
    v.sort_by_key(|g| g.n);
    v
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn moments_point(n: usize, m: &Moments) -> Option<Point> {
    m.mean.map(|mean| Point::new(n as f64, mean, m.std))
}

/// One series per group for a single metric.
fn metric_series(summary: &SweepSummary, pick: fn(&GroupStats) -> &Moments) -> Vec<Series> {
    group_keys(summary)
        .into_iter()
        .enumerate()
        .map(|(i, (b, a))| Series {
            label: label(b, a),
            points: groups_of(summary, b, a)
                .into_iter()
                .filter_map(|g| moments_point(g.n, pick(g)))
                .collect(),
            dashed: false,
            markers: true,
            color: i,
        })
        .collect()
}

fn metric_rows(summary: &SweepSummary, metrics: &[(&str, fn(&GroupStats) -> &Moments)]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (b, a) in group_keys(summary) {
        for g in groups_of(summary, b, a) {
            for (name, pick) in metrics {
                let m = pick(g);
                rows.push(vec![
                    b.to_string(),
                    a.to_string(),
                    g.n.to_string(),
                    name.to_string(),
                    m.count.to_string(),
                    opt(m.mean),
                    opt(m.std),
                ]);
            }
        }
    }
    rows
}

const METRIC_HEADER: [&str; 7] = ["boundary", "algo", "n", "metric", "count", "mean", "std"];

struct Figure {
    family: &'static str,
    title: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    panels: Vec<Panel>,
}

fn fit_for(fits: &[GroupFit], b: Boundary, a: Algorithm) -> Option<&GroupFit> {
    fits.iter().find(|f| f.boundary == b && f.algorithm == a)
}

fn gap_figure(summary: &SweepSummary) -> Figure {
    let mut series = metric_series(summary, |g| &g.positive_gap);
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for (i, (b, a)) in group_keys(summary).into_iter().enumerate() {
        let fit = fit_for(&summary.fits, b, a).and_then(|f| f.mean_fit);
        for g in groups_of(summary, b, a) {
            let m = &g.positive_gap;
            rows.push(vec![
                b.to_string(),
                a.to_string(),
                g.n.to_string(),
                m.count.to_string(),
                opt(m.mean),
                opt(m.std),
                opt(fit.map(|f| f.slope)),
                opt(fit.map(|f| f.intercept)),
                opt(fit.map(|f| f.r_squared)),
            ]);
        }
        match fit {
            Some(f) => {
                let ns: Vec<f64> = groups_of(summary, b, a).iter().map(|g| g.n as f64).collect();
                let (lo, hi) = ns.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
                series.push(Series {
                    label: format!("{} fit", label(b, a)),
                    points: vec![
                        Point::new(lo, f.intercept + f.slope * lo, None),
                        Point::new(hi, f.intercept + f.slope * hi, None),
                    ],
                    dashed: true,
                    markers: false,
                    color: i,
                });
                notes.push(format!(
                    "{}: slope {:.4}, R² = {:.3}",
                    label(b, a),
                    f.slope,
                    f.r_squared
                ));
            }
            None => notes.push(format!("{}: fewer than 2 points, no fit", label(b, a))),
        }
    }
    Figure {
        family: "gap_vs_n",
        title: "Generalization gap (positive runs) vs qubits".into(),
        header: vec![
            "boundary",
            "algo",
            "n",
            "count",
            "mean_positive_gap",
            "std_positive_gap",
            "fit_slope",
            "fit_intercept",
            "fit_r_squared",
        ],
        rows,
        panels: vec![Panel {
            title: "test RMSE − train RMSE, mean ± 1 std".into(),
            x_label: "qubits n".into(),
            y_label: "gap".into(),
            series,
            markers: vec![],
            notes,
        }],
    }
}

fn simple_panel(title: &str, y: &str, series: Vec<Series>) -> Panel {
    Panel {
        title: title.into(),
        x_label: "qubits n".into(),
        y_label: y.into(),
        series,
        markers: vec![],
        notes: vec![],
    }
}

fn rmse_figure(summary: &SweepSummary) -> Figure {
    Figure {
        family: "rmse_vs_n",
        title: "RMSE vs qubits".into(),
        header: METRIC_HEADER.to_vec(),
        rows: metric_rows(summary, &[("train_rmse", |g| &g.train_rmse), ("test_rmse", |g| &g.test_rmse)]),
        panels: vec![
            simple_panel("training RMSE, mean ± 1 std", "train RMSE", metric_series(summary, |g| &g.train_rmse)),
            simple_panel("test RMSE, mean ± 1 std", "test RMSE", metric_series(summary, |g| &g.test_rmse)),
        ],
    }
}

fn cr_figure(summary: &SweepSummary) -> Figure {
    Figure {
        family: "cr_vs_n",
        title: "Budget compliance rate vs qubits".into(),
        header: METRIC_HEADER.to_vec(),
        rows: metric_rows(summary, &[("cr", |g| &g.cr)]),
        panels: vec![simple_panel("CR, mean ± 1 std", "CR", metric_series(summary, |g| &g.cr))],
    }
}

fn pmax_figure(summary: &SweepSummary) -> Figure {
    Figure {
        family: "pmax_nmax_vs_n",
        title: "p_max and N_max vs qubits".into(),
        header: METRIC_HEADER.to_vec(),
        rows: metric_rows(summary, &[("p_max", |g| &g.p_max), ("n_max", |g| &g.n_max)]),
        panels: vec![
            simple_panel("p_max, mean ± 1 std", "p_max", metric_series(summary, |g| &g.p_max)),
            simple_panel(
                "N_max over runs with p_max < ln 2, mean ± 1 std",
                "N_max",
                metric_series(summary, |g| &g.n_max),
            ),
        ],
    }
}

fn nt_figure() -> Result<Figure, CliError> {
    let curve = nt_curve(&default_p_grid())?;
    let best = optimal_p();
    Ok(Figure {
        family: "nt_curve",
        title: "Parameter budget N_t(p)".into(),
        header: vec!["p", "n_t"],
        rows: curve.iter().map(|&(p, n)| vec![num(p), num(n)]).collect(),
        panels: vec![Panel {
            title: "N_t = 2 / ((2 − e^p) p) + 1".into(),
            x_label: "p".into(),
            y_label: "N_t".into(),
            series: vec![Series {
                label: "N_t(p)".into(),
                points: curve.iter().map(|&(p, n)| Point::new(p, n, None)).collect(),
                dashed: false,
                markers: false,
                color: 0,
            }],
            markers: vec![Marker {
                x: best.p_star,
                y: best.n_star,
                label: format!("min ({:.3}, {:.3})", best.p_star, best.n_star),
            }],
            notes: vec![],
        }],
    })
}

/// Reads `records.json` and `summary.json` from `sweep_dir` and writes
/// `figures/<family>.csv` then `figures/<family>.svg` for every family.
pub fn render_reports(sweep_dir: &Path, prov: &Provenance) -> Result<ReportOutcome, CliError> {
    let rec_path = sweep_dir.join(RECORDS_JSON);
    let sum_path = sweep_dir.join(SUMMARY_JSON);
    let missing: Vec<String> = [&rec_path, &sum_path]
        .iter()
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::runtime(format!("missing sweep outputs: {}", missing.join(", "))));
    }
    let records: RecordsFile = load(&rec_path)?;
    let summary: SummaryFile = load(&sum_path)?;
    if records.records.is_empty() {
        return Ok(ReportOutcome::Empty);
    }
    let fig_dir = sweep_dir.join(FIGURES_DIR);
    let figures = vec![
        gap_figure(&summary.summary),
        rmse_figure(&summary.summary),
        cr_figure(&summary.summary),
        pmax_figure(&summary.summary),
        nt_figure()?,
    ];
    let mut descriptors = Vec::new();
    for f in figures {
        let data = fig_dir.join(format!("{}.csv", f.family));
        let svg = fig_dir.join(format!("{}.svg", f.family));
        write_csv(&data, prov, &f.header, &f.rows)?;
        write_atomic(&svg, render(&f.title, &f.panels).as_bytes())?;
        descriptors.push(FigureDescriptor {
            family: f.family.into(),
            title: f.title,
            data: PathBuf::from(FIGURES_DIR).join(format!("{}.csv", f.family)),
            svg: PathBuf::from(FIGURES_DIR).join(format!("{}.svg", f.family)),
        });
    }
    let bundle = ReportBundle {
        source_config_hash: records.provenance.config_hash.clone(),
        figures: descriptors,
    };
    write_json(
        &fig_dir.join("report.json"),
        prov,
        vec![("report", serde_json::to_value(&bundle).map_err(anyhow::Error::from)?)],
    )?;
    Ok(ReportOutcome::Written(bundle))
}
