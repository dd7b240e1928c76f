use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zero2hero::error::{EXIT_OK, EXIT_VERIFICATION};
use zero2hero::oracle::Verdict;
use zero2hero::pipeline::{
    run, score_file, verify_files, Format, RunConfig, DEFAULT_INTENSITY, DEFAULT_TOLERANCE, DEFAULT_TRIALS,
};
use zero2hero::PipelineError;

#[derive(Parser)]
#[command(name = "zero2hero", version, about = "Make every equation in a LaTeX document look much harder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite every equation and write the new document.
    Run(RunArgs),
    /// Print the complexity score of every equation.
    Score {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check a document produced by `run` against its original.
    Verify {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        transformed: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Defaults to $ZERO2HERO_SEED, then to a hash of the input.
    #[arg(long)]
    seed: Option<u64>,
    /// Passes applied per equation, 0 to 5.
    #[arg(long, default_value_t = DEFAULT_INTENSITY)]
    intensity: u8,
    /// Comma-separated pass ids to choose from.
    #[arg(long, value_delimiter = ',')]
    passes: Option<Vec<String>>,
    /// Process a document that already carries a marker.
    #[arg(long)]
    force: bool,
    /// Report only; write nothing.
    #[arg(long)]
    dry_run: bool,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Transform equations one at a time.
    #[arg(long)]
    sequential: bool,
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn execute(cli: Cli) -> Result<i32, PipelineError> {
    match cli.command {
        Command::Run(args) => {
            let config = RunConfig {
                input: args.input,
                output: args.output,
                seed: args.seed,
                intensity: args.intensity,
                passes: args.passes,
                force: args.force,
                dry_run: args.dry_run,
                trials: args.trials,
                tol: args.tol,
                parallel: !args.sequential,
            };
            let report = run(&config)?;
            warn_all(&report.warnings);
            print!("{}", report.render(args.format));
            Ok(EXIT_OK)
        }
        Command::Score { input, format } => {
            let report = score_file(&input)?;
            warn_all(&report.warnings);
            print!("{}", report.render(format));
            Ok(EXIT_OK)
        }
        Command::Verify { original, transformed, trials, tol, format } => {
            let report = verify_files(&original, &transformed, trials, tol)?;
            warn_all(&report.warnings);
            print!("{}", report.render(format));
            Ok(if report.count(Verdict::Fail) > 0 { EXIT_VERIFICATION } else { EXIT_OK })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
