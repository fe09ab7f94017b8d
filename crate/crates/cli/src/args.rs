//! Command-line surface. Every valued flag maps to one config key; values
//! stay strings here so the config layer does all type and domain checks.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Raw;

#[derive(Debug, Parser)]
#[command(name = "dlalab", version, about = "Lie-algebraic generalization bounds for variational quantum models")]
pub struct Cli {
    /// JSON file of flat namespaced keys, e.g. {"train.epochs": 50}. Flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the resolved run config as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dimension of a dynamical Lie algebra.
    Dla(DlaArgs),
    /// Generalization bounds and parameter budgets.
    Bound {
        #[command(subcommand)]
        command: BoundCommand,
    },
    /// Synthetic datasets.
    Data {
        #[command(subcommand)]
        command: DataCommand,
    },
    /// Train one model.
    Train(TrainArgs),
    /// Full experiment grid.
    Sweep(SweepArgs),
    /// Figures from sweep outputs.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum BoundCommand {
    /// Evaluate the generalization-gap bound.
    Eval(BoundEvalArgs),
    /// Maximum trainable parameters for a spectral scale or error.
    Budget(BudgetArgs),
    /// Budget curve over a range of spectral scales.
    Curve(CurveArgs),
}

#[derive(Debug, Subcommand)]
pub enum DataCommand {
    /// Generate one dataset.
    Gen(DataGenArgs),
}

type Flags = Vec<(&'static str, Raw)>;

fn put(out: &mut Flags, key: &'static str, v: &Option<String>) {
    if let Some(s) = v {
        out.push((key, Raw::Flag(s.clone())));
    }
}

fn switch(out: &mut Flags, key: &'static str, on: bool) {
    if on {
        out.push((key, Raw::Switch));
    }
}

#[derive(Debug, Args)]
pub struct DlaArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    /// open or closed
    #[arg(long)]
    pub boundary: Option<String>,
    /// Generators in Pauli text format, blocks separated by `---`.
    #[arg(long, value_name = "FILE")]
    pub generators: Option<String>,
    #[arg(long)]
    pub max_dim: Option<String>,
    /// Write the orthonormal basis here.
    #[arg(long, value_name = "FILE")]
    pub basis_out: Option<String>,
}

impl DlaArgs {
    pub fn flags(&self) -> Flags {
        let mut f = Vec::new();
        put(&mut f, "dla.model", &self.model);
        put(&mut f, "dla.n", &self.n);
        put(&mut f, "dla.boundary", &self.boundary);
        put(&mut f, "dla.generators", &self.generators);
        put(&mut f, "dla.max_dim", &self.max_dim);
        put(&mut f, "dla.basis_out", &self.basis_out);
        f
    }
}

#[derive(Debug, Args)]
pub struct BoundEvalArgs {
    /// Training set size.
    #[arg(long)]
    pub m: Option<String>,
    /// Trainable parameter count.
    #[arg(long)]
    pub nt: Option<String>,
    #[arg(long)]
    pub dimg: Option<String>,
    #[arg(long)]
    pub n_qubits: Option<String>,
    #[arg(long)]
    pub o_norm: Option<String>,
    /// Loss-range constant.
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Parameter-space radius (default π).
    #[arg(long)]
    pub radius: Option<String>,
    /// Print JSON instead of labeled text.
    #[arg(long)]
    pub json: bool,
}

impl BoundEvalArgs {
    pub fn flags(&self) -> Flags {
        let mut f = Vec::new();
        put(&mut f, "bounds.m", &self.m);
        put(&mut f, "bounds.nt", &self.nt);
        put(&mut f, "bounds.dim_g", &self.dimg);
        put(&mut f, "bounds.n_qubits", &self.n_qubits);
        put(&mut f, "bounds.o_norm", &self.o_norm);
        put(&mut f, "bounds.c", &self.c);
        put(&mut f, "bounds.delta", &self.delta);
        put(&mut f, "bounds.radius", &self.radius);
        switch(&mut f, "bounds.json", self.json);
        f
    }
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Spectral scale in (0, ln 2).
    #[arg(long)]
    pub p: Option<String>,
    /// Target approximation error.
    #[arg(long)]
    pub eps: Option<String>,
}

impl BudgetArgs {
    pub fn flags(&self) -> Flags {
        let mut f = Vec::new();
        put(&mut f, "bounds.p", &self.p);
        put(&mut f, "bounds.eps", &self.eps);
        f
    }
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// CSV path (default <out_dir>/nt_curve.csv).
    #[arg(long, value_name = "FILE")]
    pub out: Option<String>,
    #[arg(long)]
    pub p_min: Option<String>,
    #[arg(long)]
    pub p_max: Option<String>,
    #[arg(long)]
    pub p_step: Option<String>,
}

impl CurveArgs {
    pub fn flags(&self) -> Flags {
        let mut f = Vec::new();
        put(&mut f, "bounds.out", &self.out);
        put(&mut f, "bounds.p_min", &self.p_min);
        put(&mut f, "bounds.p_max", &self.p_max);
        put(&mut f, "bounds.p_step", &self.p_step);
        f
    }
}

#[derive(Debug, Args)]
pub struct DataGenArgs {
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub m_train: Option<String>,
    #[arg(long)]
    pub m_test: Option<String>,
    /// JSON path (default <out_dir>/dataset_n<N>_seed<S>.json).
    #[arg(long, value_name = "FILE")]
    pub out: Option<String>,
}

impl DataGenArgs {
    pub fn flags(&self) -> Flags {
        let mut f = Vec::new();
        put(&mut f, "data.n", &self.n);
        put(&mut f, "seed", &self.seed);
        put(&mut f, "data.m_train", &self.m_train);
        put(&mut f, "data.m_test", &self.m_test);
        put(&mut f, "data.out", &self.out);
        f
    }
}

/// Optimizer and ansatz settings shared by `train` and `sweep`.
#[derive(Debug, Args)]
pub struct OptimizerArgs {
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub layers: Option<String>,
    #[arg(long)]
    pub reps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub init_low: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub init_high: Option<String>,
    #[arg(long)]
    pub a0: Option<String>,
    #[arg(long)]
    pub c0: Option<String>,
    #[arg(long)]
    pub big_a: Option<String>,
    #[arg(long)]
    pub alpha_gain: Option<String>,
    #[arg(long)]
    pub gamma_gain: Option<String>,
    #[arg(long)]
    pub ran_step: Option<String>,
    /// Clip every |θ| to ln 2 / ‖H‖.
    #[arg(long)]
    pub theta_clip: bool,
    #[arg(long)]
    pub m_train: Option<String>,
    #[arg(long)]
    pub m_test: Option<String>,
}

impl OptimizerArgs {
    fn flags(&self, f: &mut Flags) {
        put(f, "train.epochs", &self.epochs);
        put(f, "train.layers", &self.layers);
        put(f, "train.reps", &self.reps);
        put(f, "train.init_low", &self.init_low);
        put(f, "train.init_high", &self.init_high);
        put(f, "train.a0", &self.a0);
        put(f, "train.c0", &self.c0);
        put(f, "train.big_a", &self.big_a);
        put(f, "train.alpha_gain", &self.alpha_gain);
        put(f, "train.gamma_gain", &self.gamma_gain);
        put(f, "train.ran_step", &self.ran_step);
        switch(f, "train.theta_clip", self.theta_clip);
        put(f, "data.m_train", &self.m_train);
        put(f, "data.m_test", &self.m_test);
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub boundary: Option<String>,
    /// sps or ran
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Dataset JSON from `data gen`; generated from --seed when absent.
    #[arg(long, value_name = "FILE")]
    pub data: Option<String>,
    /// Result JSON path (default <out_dir>/train_result.json).
    #[arg(long, value_name = "FILE")]
    pub out: Option<String>,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

impl TrainArgs {
    pub fn flags(&self) -> Flags {
        let mut f = Vec::new();
        put(&mut f, "train.model", &self.model);
        put(&mut f, "train.n", &self.n);
        put(&mut f, "train.boundary", &self.boundary);
        put(&mut f, "train.algo", &self.algo);
        put(&mut f, "seed", &self.seed);
        put(&mut f, "train.data", &self.data);
        put(&mut f, "train.out", &self.out);
        self.opt.flags(&mut f);
        f
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Qubit grid, e.g. 2..6 or 2,3,4.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub boundaries: Option<String>,
    #[arg(long)]
    pub algos: Option<String>,
    /// Datasets per condition.
    #[arg(long)]
    pub datasets: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
    /// Welch's t-test instead of Student's.
    #[arg(long)]
    pub welch: bool,
    /// Permit qubit counts 7 and 8.
    #[arg(long)]
    pub allow_large: bool,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

impl SweepArgs {
    pub fn flags(&self) -> Flags {
        let mut f = Vec::new();
        put(&mut f, "sweep.n", &self.n);
        put(&mut f, "sweep.boundaries", &self.boundaries);
        put(&mut f, "sweep.algos", &self.algos);
        put(&mut f, "sweep.datasets", &self.datasets);
        put(&mut f, "seed", &self.seed);
        put(&mut f, "out_dir", &self.out);
        switch(&mut f, "sweep.welch", self.welch);
        switch(&mut f, "sweep.allow_large", self.allow_large);
        self.opt.flags(&mut f);
        f
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Sweep output directory; figures go to <DIR>/figures.
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
}

impl ReportArgs {
    pub fn flags(&self) -> Flags {
        let mut f = Vec::new();
        put(&mut f, "out_dir", &self.out);
        f
    }
}

impl Command {
    /// Subcommand name and its flag values.
    pub fn resolve(&self) -> (&'static str, Flags) {
        match self {
            Command::Dla(a) => ("dla", a.flags()),
            Command::Bound { command } => match command {
                BoundCommand::Eval(a) => ("bound eval", a.flags()),
                BoundCommand::Budget(a) => ("bound budget", a.flags()),
                BoundCommand::Curve(a) => ("bound curve", a.flags()),
            },
            Command::Data {
                command: DataCommand::Gen(a),
            } => ("data gen", a.flags()),
            Command::Train(a) => ("train", a.flags()),
            Command::Sweep(a) => ("sweep", a.flags()),
            Command::Report(a) => ("report", a.flags()),
        }
    }
}
