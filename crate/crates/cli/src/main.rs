use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use noonsim::circuits::preset;
use noonsim::config::{parse_config, DEFAULT_SIGMA};
use noonsim::report::{list_patterns, run};

/// Simulates NOON-state projection scans and writes CSV reports.
#[derive(Parser, Debug)]
#[command(name = "noonsim", version)]
struct Args {
    /// Run configuration file.
    #[arg(long, required_unless_present = "list_patterns")]
    config: Option<PathBuf>,

    /// Output directory; overrides the configuration's `output` key.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Do not print the summary table.
    #[arg(long)]
    quiet: bool,

    /// Print the detector patterns of a circuit preset grouped by ideal
    /// visibility, then exit.
    #[arg(long, value_name = "CIRCUIT")]
    list_patterns: Option<String>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let args = Args::parse();

    if let Some(name) = &args.list_patterns {
        let circuit = match preset(name) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        };
        return match list_patterns(&circuit, DEFAULT_SIGMA) {
            Ok(classes) => {
                for c in classes {
                    println!("{}-fold  V = {:+.6}  {}", c.photons, c.visibility, c.patterns.join(" "));
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_RUNTIME)
            }
        };
    }

    let path = args.config.expect("clap enforces --config");
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = args.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("noonsim-out"));
    match run(&cfg, &out) {
        Ok(summary) => {
            if !args.quiet {
                print!("{}", summary.summary_text());
                println!("wrote {} scans to {}", summary.rows.len(), out.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
