use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use krylov_rmt::ensembles::{BetaField, EnsembleKind, EnsembleSpec};
use krylov_rmt::harness::{ExperimentConfig, Mode, OutputFormat, RhsKind, DEFAULT_BUDGET_FLOPS};
use krylov_rmt::theory::Algorithm;
use krylov_rmt::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "krylov-rmt", version, about = "CG and MINRES on sample covariance matrices: exact laws, predictions and Monte Carlo checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the solvers on one sampled instance and write the per-iteration trace.
    Solve(RunArgs),
    /// Write the per-trial statistics of a Monte Carlo run.
    Sample(RunArgs),
    /// Compare solver traces with the bidiagonal-factor formulas on sampled instances.
    Verify(RunArgs),
    /// Rescaled CG residual variances per ensemble next to k/2 (1 + 1/d).
    Table1(RunArgs),
    /// Halting-time histogram and its predicted value.
    Halting(RunArgs),
    /// Print leading-order, fluctuation and halting predictions.
    Predict(PredictArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EnsembleArg {
    #[value(alias = "gaussian")]
    Wishart,
    #[value(alias = "moment-match4")]
    Mm4,
    Bernoulli,
}

impl From<EnsembleArg> for EnsembleKind {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Wishart => EnsembleKind::Gaussian,
            EnsembleArg::Mm4 => EnsembleKind::MomentMatch4,
            EnsembleArg::Bernoulli => EnsembleKind::Bernoulli,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RhsArg {
    E1,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgArg {
    /// CG residual norm.
    #[value(alias = "cg-residual")]
    Cg,
    /// CG error in the W-norm.
    CgError,
    Minres,
    /// CG on the normal equations, relative W-norm error.
    Cgne,
}

impl From<AlgArg> for Algorithm {
    fn from(a: AlgArg) -> Self {
        match a {
            AlgArg::Cg => Algorithm::CgResidual,
            AlgArg::CgError => Algorithm::CgError,
            AlgArg::Minres => Algorithm::MinresResidual,
            AlgArg::Cgne => Algorithm::CgneRelative,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Chi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Entry law; table1 and verify accept a comma-separated list.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub ensemble: Option<Vec<EnsembleArg>>,
    /// 1 for real, 2 for complex entries.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub beta: Option<u8>,
    /// Dimension of W.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of samples.
    #[arg(long)]
    pub m: Option<usize>,
    /// Right-hand side.
    #[arg(long, value_enum)]
    pub b: Option<RhsArg>,
    /// Comma-separated list of statistics.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub alg: Option<Vec<AlgArg>>,
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Monte Carlo trials (instances for verify).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Halting tolerance on the norm.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Output file; results go to stdout only when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Cap on estimated floating-point work.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Key-value file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct PredictArgs {
    #[arg(long, value_enum, default_value = "cg")]
    pub alg: AlgArg,
    /// Ratio N/M.
    #[arg(long, default_value_t = 0.5)]
    pub d: f64,
    /// Print the predicted halting iteration for this tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Print predictions at this iteration.
    #[arg(long)]
    pub k: Option<usize>,
    /// Print predictions for k = 0..=kmax.
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 1)]
    pub beta: u8,
}

#[derive(Parser, Debug)]
#[command(no_binary_name = true)]
struct FileArgs {
    #[command(flatten)]
    run: RunArgs,
}

/// Reads `key = value` (or `key value`) lines, `#` starting a comment.
pub fn read_config_file(path: &Path) -> Result<RunArgs> {
    let text = std::fs::read_to_string(path)?;
    let mut argv = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => line.split_once(char::is_whitespace).map(|(k, v)| (k, v.trim())).unwrap_or((line, "")),
        };
        let key = key.trim_start_matches("--");
        if key == "config" {
            return Err(Error::Parse(format!("{}:{}: nested config files are not supported", path.display(), i + 1)));
        }
        argv.push(format!("--{key}"));
        if !value.is_empty() {
            argv.push(value.to_string());
        }
    }
    FileArgs::try_parse_from(argv)
        .map(|f| f.run)
        .map_err(|e| Error::Parse(format!("{}: {}", path.display(), e.render().to_string().trim())))
}

macro_rules! fill {
    ($a:ident, $f:ident, $($field:ident),*) => { $( if $a.$field.is_none() { $a.$field = $f.$field; } )* };
}

impl RunArgs {
    /// Fills unset flags from the `--config` file, if any.
    pub fn with_config_file(mut self) -> Result<Self> {
        if let Some(path) = self.config.clone() {
            let f = read_config_file(&path)?;
            fill!(self, f, ensemble, beta, n, m, b, alg, kmax, trials, eps, seed, mode, out, format, jobs, budget);
        }
        Ok(self)
    }

    pub fn ensembles(&self) -> Vec<EnsembleKind> {
        self.ensemble.clone().unwrap_or_else(|| vec![EnsembleArg::Wishart]).into_iter().map(Into::into).collect()
    }

    pub fn single_ensemble(&self) -> Result<EnsembleKind> {
        match self.ensembles().as_slice() {
            [one] => Ok(*one),
            _ => Err(Error::InvalidArgument("this command takes a single --ensemble".into())),
        }
    }

    pub fn algorithms(&self, default: &[Algorithm]) -> Vec<Algorithm> {
        match &self.alg {
            Some(a) => a.iter().map(|&x| x.into()).collect(),
            None => default.to_vec(),
        }
    }

    pub fn format(&self) -> OutputFormat {
        match self.format {
            Some(FormatArg::Json) => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }

    /// Experiment configuration with the demonstration defaults
    /// (`N = 500`, `M = 1000`, `b = f₁`, real entries) for unset flags.
    pub fn experiment(&self, kind: EnsembleKind, algorithms: Vec<Algorithm>, kmax: usize, trials: usize) -> Result<ExperimentConfig> {
        let beta = BetaField::new(self.beta.unwrap_or(1))?;
        let spec = EnsembleSpec::new(kind, self.n.unwrap_or(500), self.m.unwrap_or(1000), beta)?;
        let kmax = self.kmax.unwrap_or(kmax.min(spec.n.saturating_sub(1)));
        let mut cfg = ExperimentConfig::new(spec, kmax, self.trials.unwrap_or(trials), self.seed.unwrap_or(1));
        cfg.algorithms = algorithms;
        cfg.rhs = match self.b {
            Some(RhsArg::Random) => RhsKind::RandomUnit,
            _ => RhsKind::FirstBasis,
        };
        cfg.eps = self.eps;
        cfg.mode = match self.mode {
            Some(ModeArg::Chi) => Mode::Chi,
            _ => Mode::Full,
        };
        cfg.budget_flops = self.budget.unwrap_or(DEFAULT_BUDGET_FLOPS);
        cfg.jobs = self.jobs.unwrap_or(0);
        Ok(cfg)
    }
}
