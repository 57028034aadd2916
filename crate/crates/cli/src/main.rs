use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mems_fbp::{parse_config, run_experiment, RunOptions};

/// Runs one MEMS free-boundary experiment described by a JSON config.
#[derive(Parser, Debug)]
#[command(name = "mems-fbp", version)]
struct Args {
    /// Path to the experiment config (JSON).
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps over the aspect ratio.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// Suppress progress messages on stderr.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().to_owned();
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        out: args.out,
        threads: args.threads.map(usize::from),
        quiet: args.quiet,
    };
    let result = parse_config(&args.config).and_then(|cfg| run_experiment(&cfg, &opts));
    match result {
        Ok(report) => {
            if !opts.quiet {
                eprintln!("{:?}: {}", report.kind, report.summary);
                for f in &report.files {
                    eprintln!("  wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
