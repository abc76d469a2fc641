use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lagcal::{emit_report, init_threads, load_config, run_experiment, Experiment, Overrides};

#[derive(Parser, Debug)]
#[command(name = "lagcal", version, about = "Run one verification experiment from a JSON config")]
struct Cli {
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version go to stdout and are not errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("lagcal: {e}");
        return ExitCode::from(1);
    }
    let overrides = Overrides {
        experiment: Some(cli.experiment),
        out: cli.out,
        seed: cli.seed,
        samples: cli.samples,
        tol: cli.tol,
    };
    let cfg = match load_config(&cli.config, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("lagcal: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("lagcal: {} failed: {e}", cfg.experiment.name());
            return ExitCode::from(1);
        }
    };
    let (report, table) = match emit_report(&outcome.report, &outcome.table, &cfg.out) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("lagcal: cannot write output to {}: {e}", cfg.out.display());
            return ExitCode::from(1);
        }
    };
    println!("{}: wrote {} and {}", cfg.experiment.name(), report.display(), table.display());
    if outcome.violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        for v in &outcome.violations {
            eprintln!("lagcal: threshold violated: {v}");
        }
        ExitCode::from(2)
    }
}
