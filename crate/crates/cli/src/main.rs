//! Batch runner: executes seeded simulation batches and emits CSV.

mod args;

use args::{parse_cli, CliAction, RunSpec, USAGE};
use crossway_core::harness::{run_experiment, run_single, write_csv, ExperimentResult};
use crossway_core::metrics::batch_stats;
use crossway_core::network::build_grid;
use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match parse_cli(&argv) {
        Ok(CliAction::Help) => {
            // tolerate a closed pipe (e.g. `crossway --help | head`)
            let _ = writeln!(std::io::stdout(), "{USAGE}");
            ExitCode::SUCCESS
        }
        Ok(CliAction::DumpGridOnly {
            path,
            width,
            height,
            edge_length,
        }) => match dump_grid(&path, width, height, edge_length) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Ok(CliAction::Run(spec)) => match run(*spec) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Err(msg) => {
            eprintln!("error: {msg}\n\n{USAGE}");
            ExitCode::from(2)
        }
    }
}

fn dump_grid(
    path: &std::path::Path,
    width: usize,
    height: usize,
    edge_length: f64,
) -> Result<(), String> {
    let grid = build_grid(width, height, edge_length).map_err(|e| e.to_string())?;
    let mut f = std::fs::File::create(path).map_err(|e| e.to_string())?;
    grid.write_adjacency(&mut f).map_err(|e| e.to_string())?;
    Ok(())
}

fn run(spec: RunSpec) -> Result<(), String> {
    if let Some(path) = &spec.dump_grid {
        dump_grid(
            path,
            spec.cfg.grid_width,
            spec.cfg.grid_height,
            spec.cfg.edge_length,
        )?;
    }

    let result = match &spec.trace {
        None => run_experiment(&spec.cfg).map_err(|e| e.to_string())?,
        Some(path) => {
            // tracing runs sequentially so the log stays ordered
            let mut f = std::fs::File::create(path).map_err(|e| e.to_string())?;
            let mut runs = Vec::with_capacity(spec.cfg.runs);
            for i in 0..spec.cfg.runs {
                let seed = spec.cfg.base_seed + i as u64;
                writeln!(f, "# run {i} seed {seed}").map_err(|e| e.to_string())?;
                runs.push(run_single(&spec.cfg, i, seed, Some(&mut f)).map_err(|e| e.to_string())?);
            }
            let cwt: Vec<f64> = runs.iter().map(|r| r.cwt_mean).collect();
            let twt: Vec<f64> = runs.iter().map(|r| r.twt_mean).collect();
            ExperimentResult {
                stats: batch_stats(&cwt, &twt),
                runs,
            }
        }
    };

    match &spec.out {
        Some(path) => {
            let mut f = std::fs::File::create(path).map_err(|e| e.to_string())?;
            write_csv(&spec.cfg, &result, &mut f).map_err(|e| e.to_string())?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            if let Err(e) = write_csv(&spec.cfg, &result, &mut lock) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.to_string());
                }
            }
        }
    }

    let s = &result.stats;
    eprintln!(
        "{}: {} runs, CWT {:.2} ±{:.2} s, TWT {:.2} ±{:.2} s",
        spec.cfg.approach.as_str(),
        s.runs,
        s.cwt_mean,
        s.cwt_std,
        s.twt_mean,
        s.twt_std
    );
    Ok(())
}
