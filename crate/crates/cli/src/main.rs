use clap::Parser;
use coopdyn_cli::{execute, Command, Status, EXIT_ERROR, EXIT_INCONCLUSIVE};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical experiments on i.i.d. random polynomial and rational dynamics.
#[derive(Debug, Parser)]
#[command(name = "coopdyn", version)]
struct Args {
    /// One of: render-julia, classify-basins, find-minimal-sets,
    /// test-mean-stability, solve-T, takagi, rate, exponents,
    /// scan-bifurcation, oracle-1d, probe-kernel.
    command: String,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = args
        .command
        .parse::<Command>()
        .and_then(|cmd| execute(cmd, &args.scenario, args.out.as_deref(), args.seed));
    match result {
        Ok((manifest, status)) => {
            for f in &manifest.files {
                println!("{}  {}", f.sha256, f.path);
            }
            match status {
                Status::Conclusive => ExitCode::SUCCESS,
                Status::Inconclusive => {
                    eprintln!("verdict inconclusive");
                    ExitCode::from(EXIT_INCONCLUSIVE as u8)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
