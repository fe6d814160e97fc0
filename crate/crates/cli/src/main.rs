use clap::{Args, Parser, Subcommand, ValueEnum};
use ekman::solver::SolverChoice;
use ekman_cli::commands::{self, RunContext};
use ekman_cli::config::{ExperimentConfig, Mode, OutputFormat};
use ekman_cli::output::config_hash;
use ekman_cli::{CliError, EXIT_VERIFICATION_FAILED};
use std::path::PathBuf;
use std::process::ExitCode;

/// Ekman-layer wind profiles for piecewise-constant eddy viscosity.
#[derive(Parser)]
#[command(name = "ekman", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one profile: spiral table, hodograph table, summary.
    Profile(RunArgs),
    /// Deflection angle over a log-spaced (l, h) grid.
    Sweep(RunArgs),
    /// Evaluate the limiting-angle sequences.
    Limits(RunArgs),
    /// Step-function convergence study toward a continuous viscosity.
    Converge(RunArgs),
    /// Run the verification suite; exits 3 on any failed check.
    Verify(RunArgs),
}

impl Command {
    fn mode(&self) -> Mode {
        match self {
            Command::Profile(_) => Mode::Profile,
            Command::Sweep(_) => Mode::Sweep,
            Command::Limits(_) => Mode::Limits,
            Command::Converge(_) => Mode::Converge,
            Command::Verify(_) => Mode::Verify,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Profile(a)
            | Command::Sweep(a)
            | Command::Limits(a)
            | Command::Converge(a)
            | Command::Verify(a) => a,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON). Required for profile, sweep and
    /// converge; limits and verify fall back to built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Table format (overrides the configuration).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,

    /// Solution route.
    #[arg(long, value_enum, default_value_t = SolverArg::Transfer)]
    solver: SolverArg,

    /// Seed for randomized verification checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Corrupt one flux-row weight before verifying, to demonstrate that the
    /// matching-residual check catches assembly faults (verify mode only).
    #[arg(long, hide = true, default_value_t = false)]
    inject_flux_fault: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Transfer,
    Dense,
    Both,
}

impl From<SolverArg> for SolverChoice {
    fn from(value: SolverArg) -> Self {
        match value {
            SolverArg::Transfer => SolverChoice::Transfer,
            SolverArg::Dense => SolverChoice::Dense,
            SolverArg::Both => SolverChoice::Both,
        }
    }
}

fn load_config(mode: Mode, args: &RunArgs) -> Result<(ExperimentConfig, String), CliError> {
    let (config, hash) = match &args.config {
        Some(path) => {
            let raw = std::fs::read(path)?;
            let text = String::from_utf8(raw.clone())
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (ExperimentConfig::parse(&text)?, config_hash(&raw))
        }
        None => {
            if matches!(mode, Mode::Profile | Mode::Sweep | Mode::Converge) {
                return Err(CliError::Config(format!(
                    "mode \"{}\" requires --config",
                    mode.as_str()
                )));
            }
            let config = ExperimentConfig::built_in(mode);
            let canonical = serde_json::to_vec(&config)
                .map_err(|e| CliError::Config(e.to_string()))?;
            (config, config_hash(&canonical))
        }
    };
    if config.mode != mode {
        return Err(CliError::Config(format!(
            "configuration mode \"{}\" does not match subcommand \"{}\"",
            config.mode.as_str(),
            mode.as_str()
        )));
    }
    Ok((config, hash))
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let mode = cli.command.mode();
    let args = cli.command.args();
    let (config, hash) = load_config(mode, args)?;

    let out_dir = args.out.clone().unwrap_or_else(|| config.output.dir.clone());
    std::fs::create_dir_all(&out_dir)?;
    let format = match args.format {
        Some(FormatArg::Csv) => OutputFormat::Csv,
        Some(FormatArg::Json) => OutputFormat::Json,
        None => config.output.format,
    };
    let ctx = RunContext {
        out_dir: out_dir.clone(),
        format,
        solver: args.solver.into(),
        config_hash: hash,
        seed: args.seed,
        inject_flux_fault: args.inject_flux_fault,
    };

    match &cli.command {
        Command::Profile(_) => {
            let summary = commands::run_profile(&config, &ctx)?;
            println!(
                "gamma0 = {:.6} deg ({}); margin 1e{:.2}; wrote {}",
                summary.gamma0_deg,
                summary.provenance,
                summary.margin_log10,
                out_dir.display()
            );
        }
        Command::Sweep(_) => {
            let summary = commands::run_sweep(&config, &ctx)?;
            println!("{} grid points; wrote {}", summary.rows, out_dir.display());
        }
        Command::Limits(_) => {
            let summary = commands::run_limits(&config, &ctx)?;
            for seq in &summary.sequences {
                println!(
                    "{}: max deviation {:.6e} ({})",
                    seq.name, seq.max_deviation, seq.metric
                );
            }
            println!("wrote {}", out_dir.display());
        }
        Command::Converge(_) => {
            let summary = commands::run_converge(&config, &ctx)?;
            for row in &summary.per_step {
                println!(
                    "n = {:4}: sup deviation {:.6e}, gamma0 {:.6} deg",
                    row.steps, row.sup_deviation, row.gamma0_deg
                );
            }
            println!("wrote {}", out_dir.display());
        }
        Command::Verify(_) => {
            let report = commands::run_verify(&config, &ctx)?;
            println!("wrote {}", out_dir.join("verify.json").display());
            if !report.passed {
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                eprintln!("verification failed: {failed} of {} checks", report.checks.len());
                return Ok(ExitCode::from(EXIT_VERIFICATION_FAILED as u8));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit 2; usage problems are validation errors here,
            // while --help/--version stay successful
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
