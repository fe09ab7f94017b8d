//! Subcommand implementations over a validated [`RunConfig`].

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use dlalab::bounds::{
    epsilon_max, epsilon_max_halved, generalization_bound, max_params_from_epsilon, max_trainable_params, nt_curve,
    optimal_p, BoundInputs,
};
use dlalab::dla::{lie_closure, su_dimension, tfim_generators, Boundary, GeneratorSet};
use dlalab::experiments::{
    compute_cr_with_norm, compute_pmax_nmax_with_norm, generate_dataset, run_sweep, Dataset, ExperimentConfig,
    ExperimentRecord, FailedRun, ModelContext, SweepConfig,
};
use dlalab::training::{empirical_risk, train_model, Algorithm, TrainConfig};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, write_atomic, write_csv, write_json, Provenance};
use crate::report::{render_reports, ReportOutcome, RECORDS_JSON, SUMMARY_JSON};

/// Column order of `records.csv`.
pub const RECORD_COLUMNS: [&str; 14] = [
    "n",
    "boundary",
    "algo",
    "dataset_seed",
    "train_seed",
    "dim_g",
    "train_rmse",
    "test_rmse",
    "gap_rmse",
    "gap_mse",
    "cr",
    "p_max",
    "n_max",
    "status",
];

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::runtime(e))
}

fn boundary(cfg: &RunConfig, key: &str) -> Result<Boundary, CliError> {
    cfg.str(key)?.parse().map_err(|e: String| CliError::Domain(e))
}

fn algorithm(s: &str) -> Result<Algorithm, CliError> {
    s.parse().map_err(|e: String| CliError::Domain(e))
}

pub fn dispatch(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cfg.subcommand.as_str() {
        "dla" => dla(cfg, out),
        "bound eval" => bound_eval(cfg, out),
        "bound budget" => bound_budget(cfg, out, err),
        "bound curve" => bound_curve(cfg, out),
        "data gen" => data_gen(cfg, out),
        "train" => train(cfg, out),
        "sweep" => sweep(cfg, out),
        "report" => report(cfg, out),
        other => Err(CliError::Usage(format!("unknown subcommand {other:?}"))),
    }?;
    Ok(())
}

fn io(e: std::io::Error) -> CliError {
    e.into()
}

fn dla(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let (gens, claimed) = match cfg.path("dla.generators") {
        Some(path) => {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            (GeneratorSet::from_text(&text, path.display().to_string())?, None)
        }
        None => {
            let n = cfg.usize("dla.n")?;
            let b = boundary(cfg, "dla.boundary")?;
            (tfim_generators(n, b)?, Some((b, b.claimed_tfim_dim(n))))
        }
    };
    let n = gens.n_qubits();
    let cap = match cfg.has("dla.max_dim") {
        true => cfg.usize("dla.max_dim")?,
        false => su_dimension(n),
    };
    let basis = lie_closure(&gens, cap)?;
    writeln!(out, "generators: {} ({} qubits, {} elements)", gens.label(), n, gens.generators().len()).map_err(io)?;
    writeln!(out, "dim(g) = {}", basis.dim).map_err(io)?;
    writeln!(out, "su({}) dimension = {}", 1usize.checked_shl(n as u32).map_or("2^n".into(), |d| d.to_string()), su_dimension(n))
        .map_err(io)?;
    writeln!(out, "closure depth = {}", basis.depth_reached).map_err(io)?;
    if basis.truncated {
        writeln!(out, "warning: closure stopped at the cap of {cap}; the true dimension may be larger").map_err(io)?;
    }
    if let Some((b, claim)) = claimed {
        let verdict = if claim == basis.dim { "agrees" } else { "differs" };
        let formula = match b {
            Boundary::Open => "n^2",
            Boundary::Closed => "n",
        };
        writeln!(out, "claimed dim for {b} TFIM ({formula}) = {claim}; computed {} {verdict}", basis.dim).map_err(io)?;
    }
    if let Some(path) = cfg.path("dla.basis_out") {
        let prov = Provenance::of(cfg);
        let body = prov.comment_line() + &basis.to_text();
        write_atomic(&path, body.as_bytes())?;
        writeln!(out, "basis written to {}", path.display()).map_err(io)?;
    }
    Ok(())
}

fn bound_eval(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let n_qubits = cfg.u64("bounds.n_qubits")? as u32;
    let inputs = BoundInputs {
        c: cfg.f64("bounds.c")?,
        radius: cfg.f64("bounds.radius")?,
        ..BoundInputs::for_qubits(
            cfg.usize("bounds.m")?,
            cfg.usize("bounds.nt")?,
            cfg.usize("bounds.dim_g")?,
            n_qubits,
            cfg.f64("bounds.o_norm")?,
            cfg.f64("bounds.delta")?,
        )?
    }
    .validated()?;
    let r = generalization_bound(&inputs)?;
    if cfg.bool("bounds.json") {
        let doc = crate::output::json_document(
            &Provenance::of(cfg),
            vec![("inputs", to_value(&inputs)?), ("report", to_value(&r)?)],
        );
        out.write_all(doc.as_bytes()).map_err(io)?;
        return Ok(());
    }
    let lines = [
        ("M", inputs.m.to_string()),
        ("N_t", inputs.n_trainable.to_string()),
        ("dim(g)", inputs.dim_g.to_string()),
        ("N (eigenvalues)", num(inputs.n_eigen)),
        ("||O||", num(inputs.o_norm)),
        ("C", num(inputs.c)),
        ("delta", num(inputs.delta)),
        ("radius", num(inputs.radius)),
        ("D", num(r.d)),
        ("alpha", num(r.alpha)),
        ("Dudley integral", num(r.dudley_term)),
        ("Rademacher bound", num(r.rademacher_bound)),
        ("confidence term", num(r.confidence_term)),
        ("gap bound", num(r.gap_bound)),
    ];
    for (k, v) in lines {
        writeln!(out, "{k:<18} {v}").map_err(io)?;
    }
    Ok(())
}

fn bound_budget(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if cfg.has("bounds.p") {
        let p = cfg.f64("bounds.p")?;
        let n = max_trainable_params(p)?;
        let (full, half) = (epsilon_max(p)?, epsilon_max_halved(p)?);
        writeln!(out, "N_t budget at p = {p}: {n:.4}").map_err(io)?;
        writeln!(out, "max trainable parameters (integer): {}", n.ceil() as u64 - 1).map_err(io)?;
        writeln!(out, "epsilon_max = (2 - e^p) p = {full:.4}").map_err(io)?;
        writeln!(out, "epsilon_max / 2 = {half:.4}").map_err(io)?;
        writeln!(
            err,
            "warning: the admissible error depends on reading the series radius as p ({full:.4}) or 2p ({half:.4}); both are shown and neither is assumed"
        )
        .map_err(io)?;
    } else {
        let eps = cfg.f64("bounds.eps")?;
        let n = max_params_from_epsilon(eps)?;
        writeln!(out, "N_t budget at eps = {eps}: {n:.4}").map_err(io)?;
    }
    Ok(())
}

fn p_grid(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let (lo, hi, step) = (cfg.f64("bounds.p_min")?, cfg.f64("bounds.p_max")?, cfg.f64("bounds.p_step")?);
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    // Round away float drift so grid points print as short decimals.
    Ok((0..=count).map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12).collect())
}

fn bound_curve(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let grid = p_grid(cfg)?;
    let curve = nt_curve(&grid)?;
    let path = cfg.path("bounds.out").unwrap_or_else(|| cfg.out_dir.join("nt_curve.csv"));
    let rows: Vec<Vec<String>> = curve.iter().map(|&(p, n)| vec![num(p), num(n)]).collect();
    write_csv(&path, &Provenance::of(cfg), &["p", "n_t"], &rows)?;
    let best = optimal_p();
    writeln!(out, "{} points written to {}", rows.len(), path.display()).map_err(io)?;
    writeln!(out, "minimum N_t = {:.4} at p = {:.4}", best.n_star, best.p_star).map_err(io)?;
    Ok(())
}

fn data_gen(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let n = cfg.usize("data.n")?;
    let ds = generate_dataset(n, cfg.seed, cfg.usize("data.m_train")?, cfg.usize("data.m_test")?)?;
    let path = cfg
        .path("data.out")
        .unwrap_or_else(|| cfg.out_dir.join(format!("dataset_n{n}_seed{}.json", cfg.seed)));
    write_json(&path, &Provenance::of(cfg), vec![("dataset", to_value(&ds)?)])?;
    writeln!(out, "dataset ({} train, {} test) written to {}", ds.train.len(), ds.test.len(), path.display())
        .map_err(io)?;
    Ok(())
}

/// Reads a dataset file written by `data gen`, or a bare dataset object.
pub fn load_dataset(path: &std::path::Path) -> Result<Dataset, CliError> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let inner = v.get("dataset").cloned().unwrap_or(v);
    Ok(serde_json::from_value(inner).with_context(|| format!("{} is not a dataset", path.display()))?)
}

fn experiment_config(cfg: &RunConfig) -> Result<ExperimentConfig, CliError> {
    let train = TrainConfig {
        epochs: cfg.usize("train.epochs")?,
        init_low: cfg.f64("train.init_low")?,
        init_high: cfg.f64("train.init_high")?,
        a0: cfg.f64("train.a0")?,
        c0: cfg.f64("train.c0")?,
        big_a: cfg.f64("train.big_a")?,
        alpha_gain: cfg.f64("train.alpha_gain")?,
        gamma_gain: cfg.f64("train.gamma_gain")?,
        ran_step: cfg.f64("train.ran_step")?,
        ..TrainConfig::default()
    };
    Ok(ExperimentConfig {
        layers: cfg.usize("train.layers")?,
        reps: cfg.usize("train.reps")?,
        m_train: cfg.usize("data.m_train")?,
        m_test: cfg.usize("data.m_test")?,
        train,
        theta_clip: cfg.bool("train.theta_clip"),
    })
}

fn train(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let n = cfg.usize("train.n")?;
    let b = boundary(cfg, "train.boundary")?;
    let alg = algorithm(cfg.str("train.algo")?)?;
    let exp = experiment_config(cfg)?;
    let ds = match cfg.path("train.data") {
        Some(p) => load_dataset(&p)?,
        None => generate_dataset(n, cfg.seed, exp.m_train, exp.m_test)?,
    };
    if ds.n_qubits != n {
        return Err(CliError::Domain(format!("dataset has {} qubits but --n is {n}", ds.n_qubits)));
    }
    let ctx = ModelContext::new(n, b, exp.layers, exp.reps)?;
    let tc = exp.train_config(alg, cfg.seed, ctx.h_norm)?;
    let result = train_model(&ctx.model, &ds.train, &tc)?;
    let train_mse = empirical_risk(&ctx.model, &result.theta_star, &ds.train)?;
    let test_mse = empirical_risk(&ctx.model, &result.theta_star, &ds.test)?;
    let cr = compute_cr_with_norm(&result.theta_star, ctx.h_norm)?;
    let (p_max, n_max) = compute_pmax_nmax_with_norm(&result.theta_star, ctx.h_norm)?;
    let metrics = json!({
        "train_rmse": train_mse.sqrt(),
        "test_rmse": test_mse.sqrt(),
        "gap_rmse": test_mse.sqrt() - train_mse.sqrt(),
        "cr": cr,
        "p_max": p_max,
        "n_max": n_max,
        "dim_g": ctx.dim_g,
        "h_norm": ctx.h_norm,
    });
    let path = cfg.path("train.out").unwrap_or_else(|| cfg.out_dir.join("train_result.json"));
    write_json(
        &path,
        &Provenance::of(cfg),
        vec![
            ("train_config", to_value(&tc)?),
            ("dataset_seed", Value::from(ds.seed)),
            ("result", to_value(&result)?),
            ("metrics", metrics),
        ],
    )?;
    writeln!(
        out,
        "{n} qubits {b}/{alg}: train RMSE {:.6}, test RMSE {:.6}, {} evaluations",
        train_mse.sqrt(),
        test_mse.sqrt(),
        result.evaluations_used
    )
    .map_err(io)?;
    writeln!(out, "result written to {}", path.display()).map_err(io)?;
    Ok(())
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn record_row(r: &ExperimentRecord) -> Vec<String> {
    vec![
        r.n.to_string(),
        r.boundary.to_string(),
        r.algorithm.to_string(),
        r.dataset_seed.to_string(),
        r.train_seed.to_string(),
        r.dim_g.to_string(),
        num(r.train_rmse),
        num(r.test_rmse),
        num(r.gap_rmse),
        num(r.gap_mse),
        num(r.cr),
        num(r.p_max),
        opt_num(r.n_max),
        "ok".into(),
    ]
}

pub fn failure_row(f: &FailedRun) -> Vec<String> {
    let mut row = vec![
        f.n.to_string(),
        f.boundary.to_string(),
        f.algorithm.to_string(),
        f.dataset_seed.to_string(),
        f.train_seed.to_string(),
    ];
    row.extend(std::iter::repeat_n(String::new(), 8));
    row.push("failed".into());
    row
}

fn sweep_config(cfg: &RunConfig) -> Result<SweepConfig, CliError> {
    let strings = |key: &str| -> Result<Vec<String>, CliError> {
        Ok(cfg.list(key)?.iter().map(|v| v.as_str().unwrap_or_default().to_string()).collect())
    };
    let boundaries = strings("sweep.boundaries")?
        .iter()
        .map(|s| s.parse().map_err(|e: String| CliError::Domain(e)))
        .collect::<Result<_, _>>()?;
    let algorithms = strings("sweep.algos")?.iter().map(|s| algorithm(s)).collect::<Result<_, _>>()?;
    let n_list = cfg.list("sweep.n")?.iter().map(|v| v.as_u64().unwrap_or(0) as usize).collect();
    let sc = SweepConfig {
        n_list,
        boundaries,
        algorithms,
        n_datasets: cfg.usize("sweep.datasets")?,
        master_seed: cfg.seed,
        experiment: experiment_config(cfg)?,
        welch: cfg.bool("sweep.welch"),
    };
    sc.validate()?;
    Ok(sc)
}

fn sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = sweep_config(cfg)?;
    let result = run_sweep(&sc)?;
    let prov = Provenance::of(cfg);
    let dir = &cfg.out_dir;
    let mut rows: Vec<Vec<String>> = result.records.iter().map(record_row).collect();
    rows.extend(result.failures.iter().map(failure_row));
    write_csv(&dir.join("records.csv"), &prov, &RECORD_COLUMNS, &rows)?;
    write_json(
        &dir.join(RECORDS_JSON),
        &prov,
        vec![("records", to_value(&result.records)?), ("failures", to_value(&result.failures)?)],
    )?;
    write_json(
        &dir.join(SUMMARY_JSON),
        &prov,
        vec![("sweep", to_value(&sc)?), ("summary", to_value(&result.summary)?)],
    )?;
    let s = &result.summary;
    writeln!(out, "{} runs, {} failed; outputs in {}", s.total_runs, s.failed_runs, dir.display()).map_err(io)?;
    writeln!(out, "{:<8} {:<5} {:>10} {:>10} {:>8}", "boundary", "algo", "slope", "intercept", "R^2").map_err(io)?;
    for f in &s.fits {
        match f.mean_fit {
            Some(fit) => writeln!(
                out,
                "{:<8} {:<5} {:>10.5} {:>10.5} {:>8.3}",
                f.boundary.to_string(),
                f.algorithm.to_string(),
                fit.slope,
                fit.intercept,
                fit.r_squared
            ),
            None => writeln!(out, "{:<8} {:<5} {:>10}", f.boundary.to_string(), f.algorithm.to_string(), "n/a"),
        }
        .map_err(io)?;
    }
    Ok(())
}

fn report(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match render_reports(&cfg.out_dir, &Provenance::of(cfg))? {
        ReportOutcome::Empty => {
            writeln!(out, "no records in {}; no figures written", cfg.out_dir.display()).map_err(io)?;
        }
        ReportOutcome::Written(bundle) => {
            for f in &bundle.figures {
                let svg: PathBuf = cfg.out_dir.join(&f.svg);
                writeln!(out, "{}: {}", f.family, svg.display()).map_err(io)?;
            }
        }
    }
    Ok(())
}
