//! `anovaemu` command-line front end.

mod commands;
mod config;

use clap::{Parser, Subcommand, ValueEnum};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "anovaemu", version, about = "Derivative-based and derivative-free ANOVA emulators")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "ANOVAEMU_SEED")]
    seed: Option<u64>,
    /// Sample size.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Tolerance of the truncation-order rules.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Truncation order; skips screening in `fit-predict`.
    #[arg(long, global = true)]
    d0: Option<usize>,
    /// Weight of the right-extension mixture base law.
    #[arg(long, global = true, visible_alias = "mixture-tau")]
    tau: Option<f64>,
    /// Also write (observation, prediction) pairs for plotting.
    #[arg(long, global = true)]
    plot_data: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate sensitivity indices, recommend d0 and screen components.
    Screen {
        function: FunctionArg,
        /// Skip total indices and screen with upper bounds instead.
        #[arg(long)]
        no_total: bool,
    },
    /// Fit an emulator and predict on held-out Sobol points.
    FitPredict {
        function: FunctionArg,
        /// Add the derivative-based emulator built from exact derivatives.
        #[arg(long)]
        db: bool,
        #[arg(long)]
        test_n: Option<usize>,
        #[arg(long)]
        sampling: Option<SamplingArg>,
        /// Model outputs for `external-table`, in plan-row order.
        #[arg(long)]
        outputs: Option<PathBuf>,
        /// Points to predict at for `external-table`.
        #[arg(long)]
        predict_at: Option<PathBuf>,
    },
    /// Replication study of emulator error versus sample size.
    Benchmark {
        study: StudyArg,
        /// Replications per sample size.
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
    },
    /// Heat-equation screening with adjoint gradients.
    PdeDemo {
        /// Interior nodes.
        #[arg(long)]
        d: Option<usize>,
        /// Also estimate total indices.
        #[arg(long)]
        total: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FunctionArg {
    Ishigami,
    GfunctionA,
    GfunctionB,
    GfunctionC,
    HeatPde,
    ExternalTable,
}

impl FunctionArg {
    pub fn name(self) -> &'static str {
        match self {
            FunctionArg::Ishigami => "ishigami",
            FunctionArg::GfunctionA => "gfunction-a",
            FunctionArg::GfunctionB => "gfunction-b",
            FunctionArg::GfunctionC => "gfunction-c",
            FunctionArg::HeatPde => "heat-pde",
            FunctionArg::ExternalTable => "external-table",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SamplingArg {
    Joint,
    Iid,
    Pseudo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StudyArg {
    DbLinear,
    DbIshigami,
    DfAdditive,
    DfConstant,
}

impl StudyArg {
    pub fn name(self) -> &'static str {
        match self {
            StudyArg::DbLinear => "db-linear",
            StudyArg::DbIshigami => "db-ishigami",
            StudyArg::DfAdditive => "df-additive",
            StudyArg::DfConstant => "df-constant",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<anovaemu::Error> for CliError {
    fn from(e: anovaemu::Error) -> Self {
        use anovaemu::Error as E;
        match e {
            E::InvalidParams(_)
            | E::InvalidRStar { .. }
            | E::MixtureOverlap { .. }
            | E::MixtureSide { .. }
            | E::DimensionLimit { .. }
            | E::MissingDerivative { .. }
            | E::UnsupportedOrder(_)
            | E::LengthMismatch { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn resolve(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let run = &mut cfg.run;
    if let Some(v) = cli.n {
        run.n = Some(v);
    }
    if let Some(v) = cli.seed {
        run.seed = v;
    }
    if let Some(v) = cli.eps {
        run.eps = v;
    }
    if cli.d0.is_some() {
        run.d0 = cli.d0;
    }
    if cli.tau.is_some() {
        run.tau = cli.tau;
    }
    if let Some(v) = &cli.out {
        run.out = v.clone();
    }
    if cli.workers.is_some() {
        run.workers = cli.workers;
    }
    match &cli.command {
        Command::Screen { no_total, .. } if *no_total => run.total = Some(false),
        Command::FitPredict {
            test_n,
            sampling,
            outputs,
            predict_at,
            ..
        } => {
            if let Some(v) = test_n {
                run.test_n = *v;
            }
            if let Some(s) = sampling {
                run.sampling = match s {
                    SamplingArg::Joint => anovaemu::df_emulator::PlanSampling::JointQmc,
                    SamplingArg::Iid => anovaemu::df_emulator::PlanSampling::QmcBaseIidPerturbation,
                    SamplingArg::Pseudo => anovaemu::df_emulator::PlanSampling::PseudoRandom,
                };
            }
            if outputs.is_some() {
                cfg.external.outputs = outputs.clone();
            }
            if predict_at.is_some() {
                cfg.external.predict_at = predict_at.clone();
            }
        }
        Command::Benchmark { r, ns, .. } => {
            if let Some(r) = r {
                cfg.benchmark.replications = *r;
            }
            if let Some(ns) = ns {
                cfg.benchmark.ns = ns.clone();
            }
        }
        Command::PdeDemo { d, total } => {
            if let Some(d) = d {
                cfg.pde.d = *d;
            }
            if *total {
                cfg.run.total = Some(true);
            }
        }
        _ => {}
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> CliResult<()> {
    let bad = |m: &str| Err(CliError::Config(m.to_string()));
    if cfg.run.n == Some(0) {
        return bad("n must be >= 1");
    }
    if !(cfg.run.eps >= 0.0) {
        return bad("eps must be >= 0");
    }
    if cfg.run.d0 == Some(0) {
        return bad("d0 must be >= 1");
    }
    if let Some(t) = cfg.run.tau {
        if !(t > 0.0 && t <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
    }
    if cfg.run.test_n < 2 {
        return bad("test_n must be >= 2");
    }
    if cfg.run.workers == Some(0) {
        return bad("workers must be >= 1");
    }
    cfg.pde.validate().map_err(CliError::from)
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = resolve(&cli)?;
    if cli.dump_config {
        let text = toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
        print!("{text}");
        return Ok(());
    }
    if let Some(w) = cfg.run.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = commands::Output::new(&cfg.run.out, cli.plot_data)?;
    match cli.command {
        Command::Screen { function, .. } => commands::screen(function, &cfg, &out),
        Command::FitPredict { function, db, .. } => commands::fit_predict(function, db, &cfg, &out),
        Command::Benchmark { study, .. } => commands::benchmark(study, &cfg, &out),
        Command::PdeDemo { .. } => commands::pde_demo(&cfg, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
