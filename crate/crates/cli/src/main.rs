//! `qmeas`: generate measurement assemblages, compute resource quantifiers
//! and regenerate the MUB table and sweeps.
//!
//! Exit codes: 0 ok, 2 input error, 3 solver failure, 4 enumeration overflow.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmeas::{Error, Execution, SolverConfig};

#[derive(Parser, Debug)]
#[command(name = "qmeas", version, about = "Resource quantifiers for quantum measurement assemblages")]
struct Cli {
    /// Worker threads for independent solves (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Largest admissible number of deterministic strategies.
    #[arg(long, global = true, env = "QMEAS_CAP")]
    cap: Option<u64>,
    /// Backend gap and feasibility tolerance.
    #[arg(long, global = true, env = "QMEAS_SOLVER_TOL")]
    tol: Option<f64>,
    /// Output path (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write an assemblage file.
    Generate(GenerateArgs),
    /// Compute one quantity and print a JSON result record.
    Compute(ComputeArgs),
    /// MUB incompatibility table as CSV.
    Table1(Table1Args),
    /// CGLMP resource hierarchy on the maximally entangled state, as CSV.
    Hierarchy(HierarchyArgs),
    /// Optimal setting distribution for a noisy MUB pair, as CSV.
    OptimizeP(OptimizePArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenerateKind {
    Mub,
    MubSubset,
    Cglmp,
    Random,
    NoisyMub,
}

impl GenerateKind {
    pub fn name(self) -> &'static str {
        match self {
            GenerateKind::Mub => "mub",
            GenerateKind::MubSubset => "mub-subset",
            GenerateKind::Cglmp => "cglmp",
            GenerateKind::Random => "random",
            GenerateKind::NoisyMub => "noisy-mub",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PartyArg {
    Alice,
    Bob,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    pub kind: GenerateKind,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Outcomes (random).
    #[arg(long)]
    pub o: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub party: Option<PartyArg>,
    /// Depolarizing parameter of the second setting (noisy-mub).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Words `X^a Z^b` as `a:b,a:b,...` (mub-subset).
    #[arg(long)]
    pub ops: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Incompatibility,
    Informativeness,
    Coherence,
    Steering,
    Nonlocality,
    RInf,
    #[value(name = "r-l1")]
    RL1,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Incompatibility => "incompatibility",
            Quantity::Informativeness => "informativeness",
            Quantity::Coherence => "coherence",
            Quantity::Steering => "steering",
            Quantity::Nonlocality => "nonlocality",
            Quantity::RInf => "r-inf",
            Quantity::RL1 => "r-l1",
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum FreeArg {
    #[default]
    Jm,
    Ui,
    Ic,
}

#[derive(Args, Debug)]
pub struct ComputeArgs {
    pub quantity: Quantity,
    /// Assemblage file (Alice's measurements for steering and nonlocality).
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub alice: Option<PathBuf>,
    #[arg(long)]
    pub bob: Option<PathBuf>,
    /// `phi-plus` or a state file.
    #[arg(long)]
    pub state: Option<String>,
    /// Impose `Σ_λ σ_λ = ρ_B` on the LHS model (steering).
    #[arg(long)]
    pub consistent: bool,
    /// Free set for r-inf and r-l1.
    #[arg(long, value_enum, default_value_t = FreeArg::Jm)]
    pub free: FreeArg,
    /// Write the full witness here.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Table1Args {
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 5])]
    pub dims: Vec<usize>,
    /// Skip cells with more settings than this.
    #[arg(long, default_value_t = 5)]
    pub max_m: usize,
}

#[derive(Args, Debug)]
pub struct HierarchyArgs {
    #[arg(long, default_value_t = 2)]
    pub d_min: usize,
    #[arg(long, default_value_t = 5)]
    pub d_max: usize,
    /// Long-format `(d, series, value)` CSV for plotting.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OptimizePArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Two-setting base assemblage; defaults to the first two MUB in dimension d.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Comma-separated noise parameters (default 0.1, 0.2, ..., 1.0).
    #[arg(long)]
    pub mu_grid: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(Error),
    Context(String, Box<CliError>),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(Error::EnumerationOverflow { .. }) => 4,
            CliError::Core(e) if e.is_solver_failure() => 3,
            CliError::Core(_) => 2,
            CliError::Context(_, inner) => inner.exit_code(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(s) => write!(f, "{s}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Context(c, e) => write!(f, "{c}: {e}"),
        }
    }
}

fn config(cli: &Cli) -> Result<SolverConfig, CliError> {
    let mut cfg = SolverConfig::default();
    if let Some(t) = cli.tol {
        if !(t > 0.0) {
            return Err(CliError::Input(format!("tolerance {t} must be positive")));
        }
        cfg.gap_rel = t;
        cfg.gap_abs = t;
        cfg.feas = t;
    }
    if let Some(cap) = cli.cap {
        cfg.enumeration_cap = cap;
    }
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Input("--jobs must be at least 1".into()));
        }
        if j == 1 {
            cfg.execution = Execution::Sequential;
        } else {
            // ignore the error if a pool already exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = config(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Generate(args) => io::emit(out, &io::pretty(&commands::generate(args)?)),
        Command::Compute(args) => {
            let (record, cert) = commands::compute(args, &cfg)?;
            if let Some(p) = &args.certificate {
                commands::write_certificate(p, &cert)?;
            }
            io::emit(out, &io::pretty(&record))
        }
        Command::Table1(args) => {
            let (csv, errors) = commands::table1(args, &cfg);
            io::emit(out, &csv)?;
            match errors.into_iter().next() {
                Some(e) => Err(e),
                None => Ok(()),
            }
        }
        Command::Hierarchy(args) => {
            let (csv, plot) = commands::hierarchy(args, &cfg)?;
            if let Some(p) = &args.plot_data {
                io::emit(Some(p), &plot)?;
            }
            io::emit(out, &csv)
        }
        Command::OptimizeP(args) => io::emit(out, &commands::optimize_p(args, &cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
