//! `curvkit`: runs a JSON job and writes CSV/JSON reports.

mod error;
mod job;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use error::{CliError, CliResult};
use job::Format;
use run::Sink;

#[derive(Debug, Parser)]
#[command(name = "curvkit", version, about = "Total intrinsic curvature of curves on surfaces")]
struct Args {
    /// Job document (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory [default: the job's output.path, else ./out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Samples per curve; overrides params.nodes [default: 4096].
    #[arg(long)]
    nodes: Option<usize>,
    /// Refinement rounds; overrides params.rounds [default: 6].
    #[arg(long)]
    rounds: Option<usize>,
    /// Report format [default: the job's output.format, else both].
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn execute(args: &Args) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Validation(format!("reading {}: {e}", args.spec.display())))?;
    let spec = job::parse_spec(&text)?;
    let job = spec.resolve(args.nodes, args.rounds)?;
    let output = spec.output.as_ref();
    let sink = Sink {
        dir: args
            .out
            .clone()
            .or_else(|| output.and_then(|o| o.path.as_ref()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out")),
        format: args
            .format
            .or_else(|| output.and_then(|o| o.format))
            .unwrap_or(Format::Both),
    };
    run::run(&job, &sink)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
