use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use mfde_tau_core::solution::NODES_PER_STEP;
use mfde_tau_core::{solve, MfdeProblem, SolveOutcome};
use rayon::prelude::*;

use crate::args::{Cli, Command};
use crate::config::{check_cell, RunConfig};
use crate::error::CliError;
use crate::report::{to_json, write_csv, CellReport, Metadata, SolveReport, SweepReport};
use crate::svg::{Chart, Series};

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args.config()?).map(drop),
        Command::Sweep(args) => cmd_sweep(&args.config()?).map(drop),
        Command::Plot(args) => cmd_plot(&args.config()?),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn csv_bytes(cells: &[CellReport]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, cells).expect("writing to memory");
    buf
}

fn solve_single(cfg: &RunConfig) -> Result<(MfdeProblem, SolveOutcome, SolveReport), CliError> {
    let (n, horizon) = cfg.single()?;
    let problem = cfg.source.load(horizon)?;
    let options = cfg.options(n);
    let start = Instant::now();
    let outcome = solve(&problem, &options)?;
    let total = start.elapsed();
    let mut report = SolveReport::new(cfg.source.to_string(), &options, &outcome);
    if cfg.timing {
        report.metadata = Some(Metadata {
            total_seconds: total.as_secs_f64(),
            linear_solve_seconds: outcome
                .solution
                .diagnostics
                .elapsed
                .map(|d| d.as_secs_f64()),
        });
    }
    match &report.errors {
        Some(e) => log::info!(
            "{} via {}: global error {:e}",
            report.problem,
            report.path,
            e.global
        ),
        None => log::info!("{} via {}: no exact solution", report.problem, report.path),
    }
    Ok((problem, outcome, report))
}

/// Solve once; write the JSON report to `--out` (or stdout), plus the
/// optional CSV row and plots.
pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveReport, CliError> {
    let (problem, outcome, report) = solve_single(cfg)?;
    let json = to_json(&report);
    match &cfg.out {
        Some(path) => write_file(path, json.as_bytes())?,
        None => print!("{json}"),
    }
    if let Some(path) = &cfg.csv {
        write_file(path, &csv_bytes(&[report.cell()]))?;
    }
    write_plots(cfg, &problem, &outcome)?;
    Ok(report)
}

pub fn cmd_plot(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.svg.is_none() && cfg.error_svg.is_none() {
        return Err(CliError::config("plot needs --svg or --error-svg"));
    }
    let (problem, outcome, _) = solve_single(cfg)?;
    write_plots(cfg, &problem, &outcome)
}

/// `(t, numerical, exact)` on `t = j / 128`, `0 <= t <= K - 1`.
pub fn sample(
    problem: &MfdeProblem,
    outcome: &SolveOutcome,
) -> Result<Vec<(f64, f64, Option<f64>)>, CliError> {
    let last = outcome.solution.step_count() * NODES_PER_STEP;
    (0..=last)
        .map(|j| {
            let t = j as f64 / NODES_PER_STEP as f64;
            let x = outcome
                .solution
                .eval_at(problem, t)
                .map_err(|e| CliError::Solve(e.into()))?;
            let exact =
                match &problem.exact {
                    Some(e) => Some(e.eval(t).map_err(|e| {
                        CliError::Solve(mfde_tau_core::SolveError::Solution(e.into()))
                    })?),
                    None => None,
                };
            Ok((t, x, exact))
        })
        .collect()
}

fn write_plots(
    cfg: &RunConfig,
    problem: &MfdeProblem,
    outcome: &SolveOutcome,
) -> Result<(), CliError> {
    if cfg.svg.is_none() && cfg.error_svg.is_none() {
        return Ok(());
    }
    let samples = sample(problem, outcome)?;
    let sol = &outcome.solution;
    let label = format!(
        "{} K={} n={} d={} ({})",
        cfg.source, outcome.disc.horizon, sol.n, sol.d, sol.path
    );
    if let Some(path) = &cfg.svg {
        let mut chart = Chart::new(label.clone(), "t", "x(t)");
        chart.push(Series::line(
            "numerical",
            samples.iter().map(|s| (s.0, s.1)).collect(),
        ));
        if problem.exact.is_some() {
            chart.push(
                Series::line(
                    "exact",
                    samples.iter().filter_map(|s| Some((s.0, s.2?))).collect(),
                )
                .dashed(),
            );
        }
        write_file(path, chart.render().as_bytes())?;
    }
    if let Some(path) = &cfg.error_svg {
        if problem.exact.is_none() {
            log::warn!("no exact solution; skipping {}", path.display());
        } else {
            let mut chart = Chart::new(label, "t", "|x(t) - exact|").log_y();
            let err = samples
                .iter()
                .skip(1)
                .filter_map(|s| Some((s.0, (s.1 - s.2?).abs())));
            chart.push(Series::line("absolute error", err.collect()));
            write_file(path, chart.render().as_bytes())?;
        }
    }
    Ok(())
}

fn sweep_cell(cfg: &RunConfig, n: usize, horizon: usize) -> CellReport {
    let d = cfg.d.resolve(n);
    let result = check_cell(n, d, Some(horizon))
        .and_then(|_| cfg.source.load(Some(horizon)))
        .and_then(|problem| {
            let options = cfg.options(n);
            let out = solve(&problem, &options)?;
            Ok(SolveReport::new(cfg.source.to_string(), &options, &out).cell())
        });
    result.unwrap_or_else(|e| {
        log::warn!("n = {n}, K = {horizon}: {e}");
        CellReport::failed(n, horizon, d, cfg.path.name(), e.to_string())
    })
}

/// Global errors that grow more than tenfold from `n` to `n + 2` at fixed `K`.
pub fn monotonicity_violations(cells: &[CellReport]) -> Vec<(usize, usize, f64, f64)> {
    let by_cell: BTreeMap<(usize, usize), f64> = cells
        .iter()
        .filter_map(|c| Some(((c.horizon, c.n), c.global_error?)))
        .collect();
    by_cell
        .iter()
        .filter_map(|(&(k, n), &e)| {
            let next = *by_cell.get(&(k, n + 2))?;
            (next > 10.0 * e).then_some((k, n, e, next))
        })
        .collect()
}

/// Solve every `(n, K)` pair. Cells run in parallel and are reported in
/// `n`-major order. A failed cell is recorded and the sweep goes on.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepReport, CliError> {
    cfg.validate_sweep()?;
    let pairs: Vec<(usize, usize)> = cfg
        .n
        .iter()
        .flat_map(|&n| cfg.horizon.iter().map(move |&k| (n, k)))
        .collect();
    let cells: Vec<CellReport> = pairs
        .par_iter()
        .map(|&(n, k)| sweep_cell(cfg, n, k))
        .collect();

    for (k, n, e, next) in monotonicity_violations(&cells) {
        log::warn!(
            "K = {k}: error grows from {e:e} at n = {n} to {next:e} at n = {}",
            n + 2
        );
    }
    let failed = cells.iter().filter(|c| !c.is_ok()).count();
    if failed > 0 {
        log::warn!("{failed} of {} cells failed", cells.len());
    }

    let csv = csv_bytes(&cells);
    match &cfg.csv {
        Some(path) => write_file(path, &csv)?,
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    let report = SweepReport {
        problem: cfg.source.to_string(),
        requested_path: cfg.path.name().to_string(),
        cells,
    };
    if let Some(path) = &cfg.out {
        write_file(path, to_json(&report).as_bytes())?;
    }
    if let Some(path) = &cfg.svg {
        let mut chart = Chart::new(
            format!("{} (d = {})", report.problem, cfg.d),
            "K",
            "global error",
        )
        .log_y();
        for &n in &cfg.n {
            let pts = report
                .cells
                .iter()
                .filter(|c| c.n == n)
                .filter_map(|c| Some((c.horizon as f64, c.global_error?)))
                .collect();
            chart.push(Series::line(format!("n = {n}"), pts).with_markers());
        }
        write_file(path, chart.render().as_bytes())?;
    }
    Ok(report)
}
