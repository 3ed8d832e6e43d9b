use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parityforge_cli::{config::RunConfig, error::CliError, exec, output, SCHEMA_VERSION};
use parityforge_core::analysis::{wigner, WignerGridSpec};
use serde_json::json;

const JOBS_ENV: &str = "PARITYFORGE_JOBS";

#[derive(Parser)]
#[command(name = "parityforge", version, about = "Parity-measurement state preparation in a truncated Fock space")]
struct Cli {
    /// Worker threads; 0 uses every core. PARITYFORGE_JOBS takes precedence.
    #[arg(long, short = 'j', global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run configuration and write its outputs.
    Run { config: PathBuf },
    /// Check a run configuration without running it.
    Validate { config: PathBuf },
    /// Evaluate the Wigner function of a saved state.
    Wigner {
        /// `state.csv` (pure) or `density_matrix.csv`.
        state: PathBuf,
        /// `XMIN,XMAX,PMIN,PMAX,RES`.
        #[arg(long, default_value = "-6,6,-6,6,241", allow_hyphen_values = true)]
        grid: String,
        /// Output CSV; defaults to `wigner.csv` next to the state file.
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
}

fn jobs(flag: usize) -> Result<usize, CliError> {
    match std::env::var(JOBS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(vec![format!("{JOBS_ENV} must be a non-negative integer, got {v:?}")])),
        Err(_) => Ok(flag),
    }
}

fn parse_grid(text: &str) -> Result<WignerGridSpec, CliError> {
    let bad = || CliError::Config(vec![format!("--grid expects XMIN,XMAX,PMIN,PMAX,RES, got {text:?}")]);
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [x0, x1, p0, p1, res] = parts.as_slice() else {
        return Err(bad());
    };
    let f = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let res = res.parse::<usize>().map_err(|_| bad())?;
    WignerGridSpec::new((f(x0)?, f(x1)?), (f(p0)?, f(p1)?), res).map_err(CliError::from_core_config)
}

fn print(value: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&value).expect("JSON values always serialize"));
}

fn run(path: &Path) -> Result<(), CliError> {
    let config = RunConfig::load(path)?;
    let report = exec::run(&config)?;
    print(json!({
        "schema_version": SCHEMA_VERSION,
        "status": "ok",
        "jobs": rayon::current_num_threads(),
        "output_dir": config.output_dir,
        "files": report.files,
        "squeezing": report.squeezing,
        "gkp_fit": report.gkp_fit,
        "cat": report.cat,
        "hamiltonian": report.hamiltonian,
        "cumulative_probability": report.run_log.as_ref().map(|l| l.cumulative_probability),
    }));
    Ok(())
}

fn validate(path: &Path) -> Result<(), CliError> {
    let config = RunConfig::load(path)?;
    let d = config.diagnostics();
    if !d.is_valid() {
        return Err(CliError::Config(d.errors));
    }
    print(json!({
        "schema_version": SCHEMA_VERSION,
        "status": "valid",
        "warnings": d.warnings,
        "notes": d.notes,
    }));
    Ok(())
}

fn wigner_cmd(state: &Path, grid: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    let spec = parse_grid(grid)?;
    let s = output::read_state(state)?;
    let w = wigner(&s, &spec);
    let out = out.unwrap_or_else(|| state.with_file_name("wigner.csv"));
    output::write_wigner(&out, &w)?;
    print(json!({
        "schema_version": SCHEMA_VERSION,
        "status": "ok",
        "output": out,
        "wigner": parityforge_cli::report::WignerSummary::of(&w),
    }));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = jobs(cli.jobs).and_then(|n| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(vec![format!("cannot start {n} worker threads: {e}")]))?;
        pool.install(|| match cli.command {
            Command::Run { config } => run(&config),
            Command::Validate { config } => validate(&config),
            Command::Wigner { state, grid, output } => wigner_cmd(&state, &grid, output),
        })
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::to_string(&json!({ "error": e.record() })).expect("error records serialize");
            eprintln!("{record}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
