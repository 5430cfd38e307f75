//! Command-line front end for `dimer-core`: configuration files, result
//! tables, a parallel sweep driver and the full-model oracle.

pub mod config;
pub mod error;
pub mod oracle;
pub mod output;

use std::io::Write;

use dimer_core::model::{validate_params, DimerParams, DriveParams};
use dimer_core::protocols::{
    assemble_grid, dark_state_demo, evaluate_cell, evaluate_point, hierarchy_window, optimal_drive_frequency,
    PipelineOptions, SweepGrid, SweepSpec,
};
use dimer_core::ProtocolTarget;
use rayon::prelude::*;

use crate::config::{Mode, RunConfig};
use crate::error::{CliError, CliResult, EXIT_OK};
use crate::oracle::{run_oracle, FockConfig};
use crate::output::{oracle_rows, GridRow, Table, WindowRow};

/// Sweep with cells evaluated on a rayon pool; identical to the sequential
/// sweep because every cell is a pure function of its coordinates.
pub fn parallel_sweep(
    spec: &SweepSpec,
    p: &DimerParams,
    target: ProtocolTarget,
    opts: &PipelineOptions,
    threads: Option<usize>,
) -> CliResult<SweepGrid> {
    spec.validate()?;
    let eval = || {
        (0..spec.len())
            .into_par_iter()
            .map(|i| {
                let (w, e) = spec.point(i);
                evaluate_cell(w, e, p, target, opts)
            })
            .collect::<Vec<_>>()
    };
    let cells = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
            .install(eval),
        None => eval(),
    };
    Ok(assemble_grid(spec, target, cells))
}

/// Result of a run: the table to write, diagnostics for stderr and a
/// deferred failure that still lets the table be written.
#[derive(Debug)]
pub struct Outcome {
    pub table: Table,
    pub diagnostics: Vec<String>,
    pub failure: Option<CliError>,
}

fn single_row(target: ProtocolTarget, omega_d: f64, epsilon_d: f64, p: &DimerParams, opts: &PipelineOptions) -> CliResult<Table> {
    let cell = evaluate_cell(omega_d, epsilon_d, p, target, opts);
    if let Err(e) = &cell.result {
        return Err(e.clone().into());
    }
    Ok(Table::Grid {
        target,
        rows: vec![GridRow::from(&cell)],
    })
}

/// Evaluate a config without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    let p = &cfg.params;
    let opts = cfg.pipeline();
    let target = cfg.target;
    let mut diagnostics: Vec<String> = validate_params(p)?
        .iter()
        .map(|w| format!("warning: {}", w.message()))
        .collect();
    let mut failure = None;
    let table = match cfg.mode {
        Mode::Ness { drive } => single_row(target, drive.omega_d, drive.epsilon_d, p, &opts)?,
        Mode::Protocol { epsilon_d } => {
            let wd = optimal_drive_frequency(target, epsilon_d, p, &opts)?;
            diagnostics.push(format!("optimal omega_d = {wd}"));
            single_row(target, wd, epsilon_d, p, &opts)?
        }
        Mode::Dark { epsilon_d } => {
            let r = dark_state_demo(p, epsilon_d, &opts)?;
            diagnostics.push(format!("dark-state omega_d = {}", r.drive.omega_d));
            let cell = dimer_core::protocols::SweepCell {
                omega_d: r.drive.omega_d,
                epsilon_d,
                result: Ok(r.summary(target)),
            };
            Table::Grid {
                target,
                rows: vec![GridRow::from(&cell)],
            }
        }
        Mode::Sweep { omega_d, epsilon_d } => {
            let spec = SweepSpec::linear(
                (omega_d.min, omega_d.max, omega_d.points),
                (epsilon_d.min, epsilon_d.max, epsilon_d.points),
            );
            let grid = parallel_sweep(&spec, p, target, &opts, cfg.threads)?;
            let failed = grid.cells.iter().filter(|c| c.result.is_err()).count();
            if failed > 0 {
                diagnostics.push(format!("warning: {failed} of {} cells failed", grid.cells.len()));
            }
            Table::Grid {
                target,
                rows: grid.cells.iter().map(GridRow::from).collect(),
            }
        }
        Mode::Window { margin } => {
            let w = hierarchy_window(p, target, margin, &opts)?;
            if w.is_empty() {
                diagnostics.push("warning: hierarchy window is empty".into());
            }
            Table::Window(vec![WindowRow::new(target, &w)])
        }
        Mode::Oracle {
            epsilon_d,
            omega_d,
            n_max,
            frame,
            tolerance,
        } => {
            let wd = match omega_d {
                Some(w) => w,
                None => optimal_drive_frequency(target, epsilon_d, p, &opts)?,
            };
            let d = DriveParams::new(epsilon_d, wd)?;
            let eff = evaluate_point(p, &d, &opts)?;
            let fc = FockConfig {
                n_max,
                frame,
                ..FockConfig::default()
            };
            let report = run_oracle(p, &d, &fc, &eff.ness, &eff.spectrum, tolerance, true)?;
            diagnostics.push(format!(
                "oracle: omega_d = {wd}, residual {:.2e}, {} iterations, truncation delta {:.2e}",
                report.residual,
                report.iterations,
                report.convergence_delta.unwrap_or(f64::NAN)
            ));
            if !report.pass() {
                failure = Some(CliError::OracleMismatch {
                    max_diff: report.comparison.max_diff(),
                    tolerance,
                });
            }
            Table::Oracle(oracle_rows(&report))
        }
    };
    Ok(Outcome {
        table,
        diagnostics,
        failure,
    })
}

/// Run a config: write the table to `out` (or stdout), diagnostics to
/// stderr, and return the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    match run_inner(cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_inner(cfg: &RunConfig) -> CliResult<i32> {
    let outcome = execute(cfg)?;
    for d in &outcome.diagnostics {
        eprintln!("{d}");
    }
    let text = outcome.table.render(cfg.format)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    match outcome.failure {
        Some(e) => {
            eprintln!("error: {e}");
            Ok(e.exit_code())
        }
        None => Ok(EXIT_OK),
    }
}
