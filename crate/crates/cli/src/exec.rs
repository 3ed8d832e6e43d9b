//! Protocol execution, sweeps and file output.

use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use parityforge_core::{
    analysis::{fidelity, fit_gkp, ground_state, parity_hamiltonian, squeezing_db, wigner, WignerGrid},
    protocols::{analytic_cat, cat_components, run_cat, run_gkp, run_squeezing, RunLog, RunOptions},
    State,
};
use rayon::prelude::*;
use serde_json::Value;

use crate::{
    config::{Output, Protocol, RunConfig},
    error::CliError,
    output,
    report::{CatReport, HamiltonianReport, ReportFile, StateSummary, SweepRow, WignerSummary},
};

/// State and report of a single (non-sweep) run, before any file output.
pub struct Outcome {
    pub state: State,
    pub report: ReportFile,
    pub wigner: Option<WignerGrid>,
}

fn secs(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

fn checked(config: &RunConfig, report_warnings: bool) -> Result<(), CliError> {
    let d = config.diagnostics();
    if report_warnings {
        for w in &d.warnings {
            warn!("{w}");
        }
    }
    if d.is_valid() {
        Ok(())
    } else {
        Err(CliError::Config(d.errors))
    }
}

/// Runs the configured protocol and its analysis; no files are written.
pub fn simulate(config: &RunConfig, with_wigner: bool) -> Result<Outcome, CliError> {
    checked(config, false)?;
    let total = Instant::now();
    let trunc = config.truncation()?;
    let loss = config.loss()?;
    let opts = RunOptions { folded: config.folded, checkpoint: false, density_matrix: config.full_density_matrix };
    let mut report = ReportFile::new(config.clone());

    let start = Instant::now();
    let (state, log): (State, Option<RunLog>) = match config.protocol {
        Protocol::Squeeze => {
            let (s, l) = run_squeezing(&config.displacement_sequence()?, &loss, trunc, opts)?;
            (s, Some(l))
        }
        Protocol::Cat => {
            let (s, l) = run_cat(&config.cat_sequence()?, &loss, trunc)?;
            (s, Some(l))
        }
        Protocol::Gkp => {
            let (s, l) = run_gkp(&config.gkp_spec()?, &loss, trunc, opts)?;
            (s, Some(l))
        }
        Protocol::Hamiltonian => {
            let seq = config.displacement_sequence()?;
            let h = parity_hamiltonian(seq.times(), seq.theta(), trunc)?;
            let (energy, ground) = ground_state(&h)?;
            let lossless = Default::default();
            let fidelity_vs_protocol = run_squeezing(&seq, &lossless, trunc, RunOptions::default())
                .and_then(|(s, _)| fidelity(&ground, &s))
                .ok();
            report.hamiltonian =
                Some(HamiltonianReport { points: seq.times().to_vec(), ground_energy: energy, fidelity_vs_protocol });
            (State::Pure(ground), None)
        }
    };
    report.timings.protocol_s = secs(start);
    info!("protocol finished in {:.3} s", report.timings.protocol_s);

    let start = Instant::now();
    report.state = Some(StateSummary::of(&state));
    match config.protocol {
        Protocol::Squeeze | Protocol::Hamiltonian => report.squeezing = Some(squeezing_db(&state)),
        Protocol::Cat => {
            let seq = config.cat_sequence()?;
            let reference = analytic_cat(&seq, trunc)?;
            report.cat = Some(CatReport {
                components: cat_components(&seq).len(),
                fidelity_vs_analytic: fidelity(&state, &reference)?,
            });
        }
        Protocol::Gkp => report.gkp_fit = Some(fit_gkp(&state, config.gkp_spec()?.delta, config.gkp_teeth())?),
    }
    report.run_log = log;
    report.timings.analysis_s = secs(start);

    let wigner = if with_wigner {
        let start = Instant::now();
        let grid = wigner(&state, &config.wigner_spec()?);
        report.wigner = Some(WignerSummary::of(&grid));
        report.timings.wigner_s = secs(start);
        Some(grid)
    } else {
        None
    };
    report.timings.total_s = secs(total);
    Ok(Outcome { state, report, wigner })
}

/// Names and values of every sweep grid point, first axis slowest.
pub fn sweep_points(config: &RunConfig) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut names = Vec::new();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &config.sweep {
        let values = axis.points().map_err(|e| CliError::Config(vec![e]))?;
        names.push(axis.parameter.clone());
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    if names.is_empty() {
        points.clear();
    }
    Ok((names, points))
}

const INTEGER_FIELDS: &[&str] = &["M", "n_cut", "comb_steps"];

/// The config with `name = value` substituted.
pub fn with_override(config: &RunConfig, name: &str, value: f64) -> Result<RunConfig, CliError> {
    let mut doc = serde_json::to_value(config).map_err(|e| CliError::Config(vec![e.to_string()]))?;
    let number = if INTEGER_FIELDS.contains(&name) {
        if value < 0.0 || value.fract() != 0.0 {
            return Err(CliError::Config(vec![format!("{name} must be a non-negative integer, got {value}")]));
        }
        Value::from(value as u64)
    } else {
        Value::from(value)
    };
    doc.as_object_mut().expect("config serializes to an object").insert(name.to_string(), number);
    serde_json::from_value(doc).map_err(|e| CliError::Config(vec![e.to_string()]))
}

fn sweep_row(config: &RunConfig, names: &[String], values: &[f64]) -> SweepRow {
    let parameters: Vec<(String, f64)> = names.iter().cloned().zip(values.iter().copied()).collect();
    let mut row =
        SweepRow { parameters, s_db: None, p_suc: None, tail_mass: None, fidelity: None, energy: None, error: None };
    let point = names
        .iter()
        .zip(values)
        .try_fold(config.clone(), |c, (name, &v)| with_override(&c, name, v))
        .and_then(|c| simulate(&c, false));
    match point {
        Ok(Outcome { report, .. }) => {
            row.p_suc = report.run_log.as_ref().map(|l| l.cumulative_probability);
            row.tail_mass = report.state.as_ref().map(|s| s.tail_mass);
            row.s_db = report.squeezing.as_ref().map(|s| s.s_db);
            row.fidelity = match config.protocol {
                Protocol::Squeeze => report.squeezing.as_ref().map(|s| s.best_fit_fidelity),
                Protocol::Cat => report.cat.as_ref().map(|c| c.fidelity_vs_analytic),
                Protocol::Gkp => report.gkp_fit.as_ref().map(|g| g.fidelity),
                Protocol::Hamiltonian => report.hamiltonian.as_ref().and_then(|h| h.fidelity_vs_protocol),
            };
            row.energy = report.hamiltonian.as_ref().map(|h| h.ground_energy);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Evaluates every grid point on the current rayon pool. Rows come back in
/// grid order regardless of scheduling.
pub fn run_sweep(config: &RunConfig) -> Result<(Vec<String>, Vec<SweepRow>), CliError> {
    let (names, points) = sweep_points(config)?;
    let rows = points.par_iter().map(|p| sweep_row(config, &names, p)).collect();
    Ok((names, rows))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_report(dir: &Path, report: &ReportFile) -> Result<(), CliError> {
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::io(&path, e))?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

/// `parityforge run`: executes the config and writes the requested files.
/// Returns the report (also written when `report` is among the outputs).
pub fn run(config: &RunConfig) -> Result<ReportFile, CliError> {
    checked(config, true)?;
    let dir = config.output_dir.as_path();
    create_dir(dir)?;
    let total = Instant::now();

    if !config.sweep.is_empty() {
        let (names, rows) = run_sweep(config)?;
        let mut report = ReportFile::new(config.clone());
        output::write_sweep(&dir.join("sweep.csv"), &names, &rows)?;
        report.files.push("sweep.csv".into());
        report.sweep = Some(rows);
        report.timings.total_s = secs(total);
        if config.wants(Output::Report) {
            report.files.push("report.json".into());
            write_report(dir, &report)?;
        }
        return Ok(report);
    }

    let want_wigner = config.wants(Output::Wigner);
    let Outcome { state, mut report, wigner } = simulate(config, want_wigner)?;
    let tail = state.tail_mass();
    if tail > config.tail_tolerance {
        warn!("final tail mass {tail:.3e} exceeds tolerance {:.1e}; results depend on n_cut", config.tail_tolerance);
    }
    if config.wants(Output::State) {
        output::write_state(&dir.join("state.csv"), &state)?;
        report.files.push("state.csv".into());
        if config.full_density_matrix {
            output::write_density_matrix(&dir.join("density_matrix.csv"), &state.to_density())?;
            report.files.push("density_matrix.csv".into());
        }
    }
    if config.wants(Output::Log) {
        if let Some(log) = &report.run_log {
            output::write_log(&dir.join("log.csv"), log)?;
            report.files.push("log.csv".into());
        }
    }
    if let Some(grid) = &wigner {
        output::write_wigner(&dir.join("wigner.csv"), grid)?;
        report.files.push("wigner.csv".into());
    }
    if config.wants(Output::Report) {
        report.files.push("report.json".into());
        write_report(dir, &report)?;
    }
    Ok(report)
}
