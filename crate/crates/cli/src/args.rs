use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use mfde_tau_core::PathChoice;

use crate::config::{parse_params, DegreeSpec, ProblemSource, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "mfde-tau",
    version,
    about = "Segmented Tau solver for mixed-type functional differential equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Log more (-v info, -vv debug). RUST_LOG also works.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write a JSON report.
    Solve(SingleArgs),
    /// Solve over a grid of n and K and tabulate the errors.
    Sweep(SweepArgs),
    /// Plot the numerical solution against the exact one.
    Plot(SingleArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Catalog problem: exp1 .. exp5.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub catalog: Option<String>,
    /// JSON problem file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Rate parameter `m` of a catalog problem.
    #[arg(long = "m", value_name = "FLOAT", allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Further catalog parameters, e.g. `--param Vp=2`.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Degree of the coefficient approximations, or `n` to follow -n.
    #[arg(short = 'd', value_name = "INT|n")]
    pub d: DegreeSpec,
    #[arg(long, default_value_t = PathChoice::Auto, value_name = "direct|canonical|auto")]
    pub path: PathChoice,
    /// Also solve with the other assembly and report the differences.
    #[arg(long)]
    pub compare_paths: bool,
    /// Factor the system without row scaling (canonical systems are always scaled).
    #[arg(long)]
    pub no_equilibrate: bool,
    /// Add wall-clock times to the JSON report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SingleArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Horizon: the problem lives on [-1, K].
    #[arg(short = 'K', value_name = "INT")]
    pub horizon: Option<usize>,
    /// Degree of the step polynomials.
    #[arg(short = 'n', value_name = "INT")]
    pub n: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// JSON report (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One-row CSV summary.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Solution plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Absolute error plot, when the exact solution is known.
    #[arg(long)]
    pub error_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated horizons.
    #[arg(
        short = 'K',
        value_name = "INT,..",
        value_delimiter = ',',
        required = true
    )]
    pub horizon: Vec<usize>,
    /// Comma-separated step degrees.
    #[arg(
        short = 'n',
        value_name = "INT,..",
        value_delimiter = ',',
        required = true
    )]
    pub n: Vec<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// JSON report of every cell.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV table (stdout when absent).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Error against K, one curve per n.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

impl ProblemArgs {
    pub fn source(&self) -> Result<ProblemSource, CliError> {
        match (&self.catalog, &self.config) {
            (Some(name), None) => {
                let mut params = parse_params(self.params.iter().map(String::as_str))?;
                if let Some(m) = self.m {
                    params.insert("m".into(), m);
                }
                Ok(ProblemSource::Catalog {
                    name: name.clone(),
                    params,
                })
            }
            (None, Some(path)) => {
                if self.m.is_some() || !self.params.is_empty() {
                    return Err(CliError::config("--m and --param apply to --catalog only"));
                }
                Ok(ProblemSource::File(path.clone()))
            }
            _ => Err(CliError::config(
                "give exactly one of --catalog and --config",
            )),
        }
    }
}

impl SolverArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.path = self.path;
        cfg.compare_paths = self.compare_paths;
        cfg.equilibrate = !self.no_equilibrate;
        cfg.timing = self.timing;
    }
}

impl SingleArgs {
    pub fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::new(self.problem.source()?, self.n, self.solver.d);
        self.solver.apply(&mut cfg);
        cfg.horizon = self.horizon.into_iter().collect();
        cfg.out = self.out.clone();
        cfg.csv = self.csv.clone();
        cfg.svg = self.svg.clone();
        cfg.error_svg = self.error_svg.clone();
        cfg.single()?;
        Ok(cfg)
    }
}

impl SweepArgs {
    pub fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::new(self.problem.source()?, 1, self.solver.d);
        self.solver.apply(&mut cfg);
        cfg.n = self.n.clone();
        cfg.horizon = self.horizon.clone();
        cfg.out = self.out.clone();
        cfg.csv = self.csv.clone();
        cfg.svg = self.svg.clone();
        cfg.validate_sweep()?;
        Ok(cfg)
    }
}
