use std::path::PathBuf;
use std::process::ExitCode;

use gibbsforge::config::ExperimentConfig;
use gibbsforge::runner::{exit_code_for, run};

const USAGE: &str = "usage: gibbsforge <config-path> [--output-dir D] [--grid-n N] [--seed S] [--timestamp]";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        eprintln!("{USAGE}");
        return ExitCode::from(if args.is_empty() { 1 } else { 0 });
    }
    let config_path = PathBuf::from(&args[0]);

    let text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("gibbsforge: cannot read {}: {e}", config_path.display());
            return ExitCode::from(1);
        }
    };
    let mut config = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gibbsforge: {e}");
            return ExitCode::from(1);
        }
    };

    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--output-dir" => {
                let Some(v) = args.get(i + 1) else {
                    eprintln!("gibbsforge: --output-dir needs a value\n{USAGE}");
                    return ExitCode::from(1);
                };
                config.output_dir = PathBuf::from(v);
                i += 2;
            }
            "--grid-n" => {
                let Some(v) = args.get(i + 1).and_then(|v| v.parse::<usize>().ok()) else {
                    eprintln!("gibbsforge: --grid-n needs an integer\n{USAGE}");
                    return ExitCode::from(1);
                };
                if v < 16 || !v.is_power_of_two() {
                    eprintln!("gibbsforge: grid_n must be a power of two >= 16");
                    return ExitCode::from(1);
                }
                config.grid_n = v;
                i += 2;
            }
            "--seed" => {
                let Some(v) = args.get(i + 1).and_then(|v| v.parse::<u64>().ok()) else {
                    eprintln!("gibbsforge: --seed needs an integer\n{USAGE}");
                    return ExitCode::from(1);
                };
                config.seed = v;
                i += 2;
            }
            "--timestamp" => {
                config.timestamp = true;
                i += 1;
            }
            other => {
                eprintln!("gibbsforge: unknown flag `{other}`\n{USAGE}");
                return ExitCode::from(1);
            }
        }
    }

    match run(&config) {
        Ok(outcome) => {
            for file in &outcome.files {
                println!("{}", file.display());
            }
            if outcome.exit_code == 2 {
                eprintln!("gibbsforge: hypothesis check failed (see hypothesis_report.json)");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("gibbsforge: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
