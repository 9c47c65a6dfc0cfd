//! The subcommands: each builds a [`Report`] which [`execute`] writes out.

use std::time::Instant;

use chaintrunc_core::{
    bound_thermal, chain_from_io, error_report, evolve_full, evolve_truncated, kernel_closed_form,
    min_modes, reconstruct_system, verify_equivalence, ChainModel, ErrorReport, IoModel,
};
use rayon::prelude::*;

use crate::config::{build_model, RunConfig};
use crate::error::CliError;
use crate::output::{fmt_f64, sidecar, write_resolved, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BuildChain,
    Simulate,
    Kernels,
    Bound,
    MinModes,
    Sweep,
}

/// Tables and messages produced by one command.
#[derive(Debug)]
pub struct Report {
    pub main: Table,
    /// Written to `<out><suffix>`.
    pub sidecars: Vec<(&'static str, Table)>,
    pub summary: Vec<String>,
    /// Failure detected after the tables were complete; files are still written.
    pub status: Result<(), CliError>,
}

impl Report {
    fn ok(main: Table, summary: Vec<String>) -> Self {
        Report {
            main,
            sidecars: Vec::new(),
            summary,
            status: Ok(()),
        }
    }
}

/// Runs `command`, writes the output, its sidecars and the resolved config, and
/// returns the summary lines.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    cfg.validate()?;
    let out = cfg.out_path()?.to_path_buf();
    let report = run(command, cfg)?;
    report.main.write(&out)?;
    for (suffix, table) in &report.sidecars {
        table.write(&sidecar(&out, suffix))?;
    }
    write_resolved(&out, cfg)?;
    report.status.map(|()| report.summary)
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    match command {
        Command::BuildChain => build_chain(cfg),
        Command::Simulate => simulate(cfg),
        Command::Kernels => kernels(cfg),
        Command::Bound => bound(cfg),
        Command::MinModes => min_modes_table(cfg),
        Command::Sweep => sweep(cfg),
    }
}

fn check_truncations(cfg: &RunConfig, chain: &ChainModel) -> Result<(), CliError> {
    if cfg.truncations.is_empty() {
        return Err(CliError::Validation("truncations must be non-empty".into()));
    }
    if let Some(&n) = cfg.truncations.iter().find(|&&n| n > chain.len()) {
        return Err(CliError::Validation(format!(
            "truncation {n} exceeds the chain length {}",
            chain.len()
        )));
    }
    Ok(())
}

/// Chain coefficients: site j with frequency Ω_j and coupling D_{j−1} to site j−1
/// (site 0 is the system).
pub fn build_chain(cfg: &RunConfig) -> Result<Report, CliError> {
    let io = cfg.build_model()?;
    let (chain, map) = chain_from_io(&io)?;
    let mut main = Table::new(["site", "frequency", "coupling"]);
    for j in 1..=chain.len() {
        main.push(vec![
            j.to_string(),
            fmt_f64(chain.frequency(j)),
            fmt_f64(chain.coupling(j - 1)),
        ]);
    }
    let eq = verify_equivalence(&io, &chain, &map)?;
    let mut diag = Table::new(["metric", "value"]);
    for (name, v) in [
        ("orthogonality", eq.orthogonality),
        ("tridiagonal_residual", eq.tridiagonal_residual),
        ("eigenvalue_mismatch", eq.eigenvalue_mismatch),
        ("first_row_residual", eq.first_row_residual),
    ] {
        diag.push(vec![name.into(), fmt_f64(v)]);
    }
    diag.push(vec!["passed".into(), u8::from(eq.passed).to_string()]);
    let status = if eq.passed {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "chain fails the equivalence check: {eq:?}"
        )))
    };
    Ok(Report {
        main,
        sidecars: vec![(".diag.csv", diag)],
        summary: vec![format!(
            "chain of {} sites, tridiagonal residual {:e}, orthogonality {:e}",
            chain.len(),
            eq.tridiagonal_residual,
            eq.orthogonality
        )],
        status,
    })
}

/// Full, truncated and Volterra-reconstructed system trajectories.
pub fn simulate(cfg: &RunConfig) -> Result<Report, CliError> {
    let io = cfg.build_model()?;
    let (chain, map) = chain_from_io(&io)?;
    check_truncations(cfg, &chain)?;
    let grid = cfg.time_grid()?;
    let init = cfg.initial_state(&io, &cfg.thermal()?)?;
    let full = evolve_full(&chain, &init, &map, &grid)?;
    let truncated = cfg
        .truncations
        .iter()
        .map(|&n| evolve_truncated(&chain, n, &init, &map, &grid))
        .collect::<Result<Vec<_>, _>>()?;
    let rec = reconstruct_system(&chain, &map, &init, &grid)?;
    let mut header = vec!["t".to_string(), "x_full".to_string()];
    header.extend(cfg.truncations.iter().map(|n| format!("x_n{n}")));
    header.extend(["x_volterra".to_string(), "abs_error".to_string()]);
    let mut main = Table::new(header);
    let mut worst = 0.0f64;
    for (m, &t) in grid.times().iter().enumerate() {
        let err = (full.x()[m] - rec.x_volterra[m]).abs();
        worst = worst.max(err);
        let mut row = vec![fmt_f64(t), fmt_f64(full.x()[m])];
        row.extend(truncated.iter().map(|tr| fmt_f64(tr.x()[m])));
        row.extend([fmt_f64(rec.x_volterra[m]), fmt_f64(err)]);
        main.push(row);
    }
    Ok(Report::ok(
        main,
        vec![format!("max reconstruction error {worst:e}")],
    ))
}

/// Closed-form memory kernels K_0..K_M of the chain on the time grid.
pub fn kernels(cfg: &RunConfig) -> Result<Report, CliError> {
    let io = cfg.build_model()?;
    let (chain, _) = chain_from_io(&io)?;
    let max_order = cfg.max_kernel_order.unwrap_or(chain.len());
    if max_order > chain.len() {
        return Err(CliError::Validation(format!(
            "max_kernel_order {max_order} exceeds the chain length {}",
            chain.len()
        )));
    }
    let freqs: Vec<f64> = (0..=max_order).map(|l| chain.frequency(l)).collect();
    let reps = (0..=max_order)
        .map(|i| kernel_closed_form(&freqs[..=i]))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = cfg.time_grid()?;
    let mut header = vec!["tau".to_string()];
    header.extend((0..=max_order).map(|i| format!("k{i}")));
    let mut main = Table::new(header);
    for &tau in grid.times() {
        let mut row = vec![fmt_f64(tau)];
        row.extend(reps.iter().map(|k| fmt_f64(k.eval(tau))));
        main.push(row);
    }
    Ok(Report::ok(
        main,
        vec![format!(
            "kernels K_0..K_{max_order} at {} points",
            grid.len()
        )],
    ))
}

fn bound_reports(cfg: &RunConfig, io: &IoModel, th_kt: f64) -> Result<Vec<ErrorReport>, CliError> {
    let (chain, map) = chain_from_io(io)?;
    check_truncations(cfg, &chain)?;
    let grid = cfg.time_grid()?;
    let th = chaintrunc_core::ThermalState::new(th_kt)?;
    let init = cfg.initial_state(io, &th)?;
    cfg.truncations
        .iter()
        .map(|&n| Ok(error_report(io, &chain, &map, n, &init, &grid, &th)?))
        .collect()
}

/// Empirical truncation error next to both bounds.
pub fn bound(cfg: &RunConfig) -> Result<Report, CliError> {
    let io = cfg.build_model()?;
    let reports = bound_reports(cfg, &io, cfg.temperature)?;
    let mut main = Table::new([
        "n",
        "t",
        "eps_empirical",
        "bound_det",
        "bound_thermal",
        "ratio",
    ]);
    let mut summary = Vec::new();
    for r in &reports {
        for (m, ratio) in r.ratios().into_iter().enumerate() {
            main.push(vec![
                r.n.to_string(),
                fmt_f64(r.times[m]),
                fmt_f64(r.eps_empirical[m]),
                fmt_f64(r.bound_det[m]),
                fmt_f64(r.bound_thermal[m]),
                fmt_f64(ratio),
            ]);
        }
        summary.push(format!("n={} max ratio {:e}", r.n, r.max_ratio()));
    }
    Ok(Report::ok(main, summary))
}

/// Minimal certified chain length for every (t, tol) pair, in long format.
pub fn min_modes_table(cfg: &RunConfig) -> Result<Report, CliError> {
    let io = cfg.build_model()?;
    let (chain, _) = chain_from_io(&io)?;
    let th = cfg.thermal()?;
    let grid = cfg.time_grid()?;
    let mut tols = cfg.tolerances.clone();
    tols.sort_by(f64::total_cmp);
    let mut main = Table::new(["t", "tol", "n", "certified", "bound"]);
    let mut cells = Vec::with_capacity(grid.len());
    for &t in grid.times() {
        let mut row = Vec::with_capacity(tols.len());
        for &tol in &tols {
            let found = min_modes(&io, &chain, t, tol, &th)?;
            let b = bound_thermal(&io, &chain, found.n, t, &th)?;
            main.push(vec![
                fmt_f64(t),
                fmt_f64(tol),
                found.n.to_string(),
                u8::from(found.certified).to_string(),
                fmt_f64(b),
            ]);
            row.push(found.n);
        }
        cells.push(row);
    }
    let along_t = (0..tols.len()).all(|j| cells.windows(2).all(|w| w[1][j] >= w[0][j]));
    let along_tol = cells.iter().all(|r| r.windows(2).all(|w| w[1] <= w[0]));
    let mut summary = vec![format!("{}x{} table", grid.len(), tols.len())];
    if !(along_t && along_tol) {
        summary.push(format!(
            "warning: not monotone (nondecreasing in t: {along_t}, nonincreasing in tol: {along_tol})"
        ));
    }
    Ok(Report::ok(main, summary))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    modes: usize,
    n: usize,
    kt: f64,
}

/// Bound reports over the (N, n, kT) product; rows sorted by cell key.
pub fn sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    let axes = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation("sweep requires a \"sweep\" block".into()))?;
    let mut cells = Vec::new();
    for &modes in &axes.modes {
        for &n in &axes.truncations {
            for &kt in &axes.temperatures {
                cells.push(Cell { modes, n, kt });
            }
        }
    }
    cells.sort_by(|a, b| {
        (a.modes, a.n)
            .cmp(&(b.modes, b.n))
            .then(a.kt.total_cmp(&b.kt))
    });
    let results: Vec<(Result<ErrorReport, CliError>, f64)> = cells
        .par_iter()
        .map(|cell| {
            let start = Instant::now();
            let r = run_cell(cfg, cell);
            (r, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut main = Table::new([
        "modes",
        "n",
        "kt",
        "max_ratio",
        "max_eps",
        "max_bound_det",
        "max_bound_thermal",
        "error",
    ]);
    let mut timings = Table::new(["modes", "n", "kt", "seconds"]);
    let max = |v: &[f64]| v.iter().fold(0.0, |m: f64, &x| m.max(x));
    let mut failed = 0;
    for (cell, (result, secs)) in cells.iter().zip(&results) {
        let key = vec![cell.modes.to_string(), cell.n.to_string(), fmt_f64(cell.kt)];
        let mut row = key.clone();
        match result {
            Ok(r) => row.extend([
                fmt_f64(r.max_ratio()),
                fmt_f64(max(&r.eps_empirical)),
                fmt_f64(max(&r.bound_det)),
                fmt_f64(max(&r.bound_thermal)),
                String::new(),
            ]),
            Err(e) => {
                failed += 1;
                row.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ]);
            }
        }
        main.push(row);
        let mut t = key;
        t.push(fmt_f64(*secs));
        timings.push(t);
    }
    let status = if failed == cells.len() {
        Err(CliError::SweepFailed(failed))
    } else {
        Ok(())
    };
    Ok(Report {
        main,
        sidecars: vec![(".timings.csv", timings)],
        summary: vec![format!("{} cells, {failed} failed", cells.len())],
        status,
    })
}

fn run_cell(cfg: &RunConfig, cell: &Cell) -> Result<ErrorReport, CliError> {
    let spec = if cell.modes == cfg.model.modes() {
        cfg.model.clone()
    } else {
        cfg.model.with_modes(cell.modes)?
    };
    let io = build_model(&spec, cfg.system_frequency, cfg.seed)?;
    let mut local = cfg.clone();
    local.truncations = vec![cell.n];
    let mut reports = bound_reports(&local, &io, cell.kt)?;
    Ok(reports.remove(0))
}
