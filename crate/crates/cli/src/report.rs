//! The JSON report written by `parityforge run`.

use parityforge_core::{
    analysis::{GkpFitReport, SqueezingReport, WignerGrid},
    protocols::RunLog,
    State,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    /// `"pure"` or `"mixed"`.
    pub representation: String,
    pub dim: usize,
    pub mean_photon_number: f64,
    pub even_population: f64,
    pub odd_population: f64,
    pub tail_mass: f64,
    pub purity: f64,
}

impl StateSummary {
    pub fn of(state: &State) -> Self {
        let (even, odd) = state.parity_populations();
        let (representation, purity) = match state {
            State::Pure(_) => ("pure", 1.0),
            State::Mixed(rho) => ("mixed", rho.purity() / (rho.trace() * rho.trace())),
        };
        let total = even + odd;
        Self {
            representation: representation.into(),
            dim: state.dim(),
            mean_photon_number: state.mean_photon_number(),
            even_population: even / total,
            odd_population: odd / total,
            tail_mass: state.tail_mass(),
            purity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatReport {
    pub components: usize,
    pub fidelity_vs_analytic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianReport {
    pub points: Vec<f64>,
    pub ground_energy: f64,
    /// Fidelity of the ground state with the post-selected state for the
    /// same points, when that run succeeds.
    pub fidelity_vs_protocol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerSummary {
    pub resolution: usize,
    pub x_range: [f64; 2],
    pub p_range: [f64; 2],
    pub min: f64,
    pub max: f64,
    pub integral: f64,
    pub max_imag_residue: f64,
}

impl WignerSummary {
    pub fn of(grid: &WignerGrid) -> Self {
        Self {
            resolution: grid.spec.resolution,
            x_range: [grid.spec.x_range.0, grid.spec.x_range.1],
            p_range: [grid.spec.p_range.0, grid.spec.p_range.1],
            min: grid.values.min(),
            max: grid.values.max(),
            integral: grid.integral(),
            max_imag_residue: grid.max_imag_residue,
        }
    }
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub protocol_s: f64,
    pub analysis_s: f64,
    pub wigner_s: f64,
    pub total_s: f64,
}

/// One sweep grid point. Failed points keep their coordinates and carry the
/// error message instead of results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameters: Vec<(String, f64)>,
    pub s_db: Option<f64>,
    pub p_suc: Option<f64>,
    pub tail_mass: Option<f64>,
    pub fidelity: Option<f64>,
    pub energy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_log: Option<RunLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeezing: Option<SqueezingReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gkp_fit: Option<GkpFitReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cat: Option<CatReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wigner: Option<WignerSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
    pub timings: Timings,
    /// Files written next to the report, relative to `output_dir`.
    pub files: Vec<String>,
}

impl ReportFile {
    pub fn new(config: RunConfig) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION.into(),
            config,
            state: None,
            run_log: None,
            squeezing: None,
            gkp_fit: None,
            cat: None,
            hamiltonian: None,
            wigner: None,
            sweep: None,
            timings: Timings::default(),
            files: Vec::new(),
        }
    }
}
