use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clearnet::commands::parse_weights;
use clearnet::generate::{gen_random_network, ChargeMode, GenOptions, MAX_HOLDING};
use clearnet::{ingest, run_command, CliError, Command, Flags, Format, Result};

/// Clearing vectors and equity vectors for interbank networks with
/// cross-holdings and default charges.
#[derive(Parser)]
#[command(name = "clearnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a scenario file and print its bounds.
    Validate(SolveArgs),
    /// Greatest clearing pair by regime-set descent.
    Max(SolveArgs),
    /// Least clearing pair.
    Min(SolveArgs),
    /// Extremal fixed points of every regime vector.
    Enumerate(SolveArgs),
    /// Greatest clearing pair from the mixed integer program P1.
    MilpMax(MilpArgs),
    /// Minimal solution from the mixed integer program P2.
    MilpMin(MilpArgs),
    /// Greatest clearing pair by elimination (needs alpha = beta = gamma).
    Gauss(SolveArgs),
    /// Run every applicable method and compare the results.
    Compare(SolveArgs),
    /// Write a seeded random scenario.
    Gen(GenArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Comparison tolerance.
    #[arg(long, default_value_t = clearnet_core::DEFAULT_TOLERANCE)]
    tol: f64,
    /// MILP objective weights f1,f2,f3 applied to every bank.
    #[arg(long)]
    weights: Option<String>,
    /// Largest n for which the 2^n regimes are enumerated.
    #[arg(long, default_value_t = 16)]
    max_n: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Enumerate regimes on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct MilpArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Also write the program in MPS format.
    #[arg(long)]
    export_mps: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 0.3)]
    shock: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fix alpha = beta = gamma instead of drawing it.
    #[arg(long, conflicts_with = "independent_charges")]
    rate: Option<f64>,
    /// Draw alpha, beta and gamma independently.
    #[arg(long)]
    independent_charges: bool,
    /// Upper end of the holdings row sums.
    #[arg(long, default_value_t = MAX_HOLDING)]
    max_holding: f64,
    #[arg(long)]
    name: Option<String>,
    /// Write the scenario here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(cmd: Command, args: &SolveArgs, export_mps: Option<PathBuf>) -> Result<()> {
    let scenario = ingest(&args.input)?;
    let flags = Flags {
        tol: args.tol,
        weights: args.weights.as_deref().map(parse_weights).transpose()?,
        max_n: args.max_n,
        export_mps,
        parallel: !args.serial,
    };
    let report = run_command(cmd, &scenario, &flags)?;
    emit(&report.render(args.format), args.output.as_ref())?;
    if report.failed() {
        return Err(CliError::Disagreement(format!(
            "results differ by more than {} or a method failed",
            clearnet::commands::AGREEMENT_TOL
        )));
    }
    Ok(())
}

fn generate(args: &GenArgs) -> Result<()> {
    let mut opts = GenOptions::new(args.n, args.density, args.shock);
    opts.max_holding = args.max_holding;
    opts.charges = match (args.rate, args.independent_charges) {
        (Some(r), _) => ChargeMode::Fixed(r),
        (None, true) => ChargeMode::Independent,
        (None, false) => ChargeMode::Equal,
    };
    let mut scenario = gen_random_network(args.seed, &opts)?;
    if let Some(name) = &args.name {
        scenario.name = Some(name.clone());
    }
    emit(&scenario.to_json(), args.output.as_ref())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Validate(a) => solve(Command::Validate, &a, None),
        Cmd::Max(a) => solve(Command::Max, &a, None),
        Cmd::Min(a) => solve(Command::Min, &a, None),
        Cmd::Enumerate(a) => solve(Command::Enumerate, &a, None),
        Cmd::MilpMax(a) => solve(Command::MilpMax, &a.solve, a.export_mps),
        Cmd::MilpMin(a) => solve(Command::MilpMin, &a.solve, a.export_mps),
        Cmd::Gauss(a) => solve(Command::Gauss, &a, None),
        Cmd::Compare(a) => solve(Command::Compare, &a, None),
        Cmd::Gen(a) => generate(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
