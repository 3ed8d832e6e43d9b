//! Declarative run configuration.

use std::path::PathBuf;

use parityforge_core::{
    analysis::WignerGridSpec,
    channels::LossModel,
    fock::DEFAULT_TAIL_TOLERANCE,
    protocols::{cat_lattice_sequence, CatSequence, DisplacementSequence, GkpSpec},
    TruncationConfig, C64,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Fields a sweep axis may name.
pub const SWEEPABLE: &[&str] = &["t_max", "theta", "epsilon", "M", "n_cut", "delta", "comb_steps", "tail_tolerance"];

const DEFAULT_WIGNER_HALF_WIDTH: f64 = 6.0;
const DEFAULT_WIGNER_RESOLUTION: usize = 241;
const GKP_MIN_N_CUT: usize = 201;
const PURE_MIN_N_CUT: usize = 201;
const LOSSY_MIN_N_CUT: usize = 51;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Squeeze,
    Cat,
    Gkp,
    Hamiltonian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ansatz {
    #[default]
    Symmetric,
    Linear,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    State,
    Report,
    Wigner,
    Log,
}

/// One sweep axis: either an evenly spaced range or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SweepAxis {
    /// Grid values; `steps` counts points, endpoints included.
    pub fn points(&self) -> Result<Vec<f64>, String> {
        if let Some(v) = &self.values {
            if self.min.is_some() || self.max.is_some() || self.steps.is_some() {
                return Err(format!("sweep axis {}: give either values or min/max/steps", self.parameter));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(format!("sweep axis {}: values must be finite", self.parameter));
            }
            return Ok(v.clone());
        }
        let (Some(lo), Some(hi), Some(steps)) = (self.min, self.max, self.steps) else {
            return Err(format!("sweep axis {}: min, max and steps are required", self.parameter));
        };
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(format!("sweep axis {}: need finite min <= max", self.parameter));
        }
        match steps {
            0 => Ok(Vec::new()),
            1 => Ok(vec![lo]),
            n => Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerGridConfig {
    pub x_range: [f64; 2],
    pub p_range: [f64; 2],
    pub resolution: usize,
}

fn default_outputs() -> Vec<Output> {
    vec![Output::Report]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_tail_tolerance() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: Protocol,
    #[serde(default)]
    pub ansatz: Ansatz,
    #[serde(rename = "M", alias = "m", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default)]
    pub t_max: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub n_cut: usize,
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
    /// Measurement points for the explicit ansatz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// Explicit cat displacements as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb_steps: Option<usize>,
    /// Tooth limit of the GKP reference states; defaults to `2^comb_steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gkp_teeth: Option<usize>,
    #[serde(default)]
    pub folded: bool,
    #[serde(default)]
    pub full_density_matrix: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wigner_grid: Option<WignerGridConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// Result of static checks. `errors` make the config unusable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(vec![format!("cannot parse config: {e}")]))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn wants(&self, output: Output) -> bool {
        self.outputs.contains(&output)
    }

    pub fn truncation(&self) -> Result<TruncationConfig, CliError> {
        TruncationConfig::with_tail_tolerance(self.n_cut, self.tail_tolerance).map_err(CliError::from_core_config)
    }

    pub fn loss(&self) -> Result<LossModel, CliError> {
        LossModel::new(self.epsilon).map_err(CliError::from_core_config)
    }

    /// The measurement points of the squeezing-type protocols.
    pub fn displacement_sequence(&self) -> Result<DisplacementSequence, CliError> {
        let seq = match self.ansatz {
            Ansatz::Symmetric => DisplacementSequence::symmetric(self.require_m()?, self.t_max, self.theta),
            Ansatz::Linear => DisplacementSequence::linear(self.require_m()?, self.t_max, self.theta),
            Ansatz::Explicit => {
                let times = self.times.clone().ok_or_else(|| config_error("explicit ansatz needs times"))?;
                DisplacementSequence::explicit(times, self.theta)
            }
        };
        seq.map_err(CliError::from_core_config)
    }

    pub fn cat_sequence(&self) -> Result<CatSequence, CliError> {
        let seq = match &self.alphas {
            Some(a) => CatSequence::new(a.iter().map(|&[re, im]| C64::new(re, im)).collect()),
            None => cat_lattice_sequence(self.require_m()?, self.require_delta()?),
        };
        seq.map_err(CliError::from_core_config)
    }

    pub fn gkp_spec(&self) -> Result<GkpSpec, CliError> {
        GkpSpec::new(self.displacement_sequence()?, self.require_delta()?, self.comb_steps())
            .map_err(CliError::from_core_config)
    }

    pub fn comb_steps(&self) -> usize {
        self.comb_steps.unwrap_or(2)
    }

    pub fn gkp_teeth(&self) -> Option<usize> {
        self.gkp_teeth.or_else(|| 1usize.checked_shl(self.comb_steps() as u32).filter(|t| *t >= 2))
    }

    pub fn wigner_spec(&self) -> Result<WignerGridSpec, CliError> {
        let spec = match &self.wigner_grid {
            Some(g) => WignerGridSpec::new((g.x_range[0], g.x_range[1]), (g.p_range[0], g.p_range[1]), g.resolution),
            None => {
                let half = match (self.protocol, self.delta) {
                    (Protocol::Cat, Some(d)) => 2.0 * d,
                    _ => DEFAULT_WIGNER_HALF_WIDTH,
                };
                WignerGridSpec::symmetric(half, DEFAULT_WIGNER_RESOLUTION)
            }
        };
        spec.map_err(CliError::from_core_config)
    }

    fn require_m(&self) -> Result<usize, CliError> {
        self.m.ok_or_else(|| config_error("M is required"))
    }

    fn require_delta(&self) -> Result<f64, CliError> {
        self.delta.ok_or_else(|| config_error("delta is required"))
    }

    /// All violations at once, plus truncation-adequacy warnings.
    pub fn diagnostics(&self) -> Diagnostics {
        let mut d = Diagnostics::default();
        let mut err = |e: CliError| d.errors.extend(e.messages());
        if let Err(e) = self.truncation() {
            err(e);
        }
        if let Err(e) = self.loss() {
            err(e);
        }
        let uses_t_max = self.protocol != Protocol::Cat && self.ansatz != Ansatz::Explicit;
        if uses_t_max && !(self.t_max.is_finite() && self.t_max >= 0.0) {
            err(config_error(&format!("t_max must be finite and non-negative, got {}", self.t_max)));
        }
        if let (Some(m), Ansatz::Symmetric, true) = (self.m, self.ansatz, self.protocol != Protocol::Cat) {
            if m % 2 == 0 {
                err(config_error(&format!("M must be odd for the symmetric ansatz, got {m}")));
            }
        }
        match self.protocol {
            Protocol::Squeeze | Protocol::Hamiltonian => {
                if let Err(e) = self.displacement_sequence() {
                    err(e);
                }
            }
            Protocol::Cat => {
                if let Err(e) = self.cat_sequence() {
                    err(e);
                }
            }
            Protocol::Gkp => {
                if let Err(e) = self.gkp_spec() {
                    err(e);
                }
                if let Some(t) = self.gkp_teeth {
                    if t < 2 || t % 2 != 0 {
                        d.errors.push(format!("gkp_teeth must be even and at least 2, got {t}"));
                    }
                }
            }
        }
        if self.folded && (self.epsilon > 0.0 || self.full_density_matrix) {
            d.errors.push("folded runs need epsilon = 0 and a pure state".into());
        }
        if self.protocol == Protocol::Hamiltonian && self.epsilon > 0.0 {
            d.warnings.push("epsilon is ignored by the hamiltonian protocol".into());
        }
        if self.wants(Output::Wigner) || self.wigner_grid.is_some() {
            if let Err(e) = self.wigner_spec() {
                d.errors.extend(e.messages());
            }
        }
        let mut seen = std::collections::HashSet::new();
        d.errors.retain(|e| seen.insert(e.clone()));
        self.check_sweep(&mut d);
        self.check_truncation(&mut d);
        d
    }

    fn check_sweep(&self, d: &mut Diagnostics) {
        if self.sweep.is_empty() {
            d.notes.push("no sweep axis; a single run will be performed".into());
            return;
        }
        let mut total = 1usize;
        for axis in &self.sweep {
            if !SWEEPABLE.contains(&axis.parameter.as_str()) {
                d.errors.push(format!(
                    "sweep parameter {:?} is not one of {}",
                    axis.parameter,
                    SWEEPABLE.join(", ")
                ));
            }
            match axis.points() {
                Ok(p) if p.is_empty() => d.notes.push(format!("sweep axis {} has no points", axis.parameter)),
                Ok(p) => total = total.saturating_mul(p.len()),
                Err(e) => d.errors.push(e),
            }
        }
        let mut names: Vec<&str> = self.sweep.iter().map(|a| a.parameter.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            d.errors.push("each sweep parameter may appear only once".into());
        }
        d.notes.push(format!("sweep of {total} points"));
    }

    /// Heuristics echoing the truncations known to resolve each protocol.
    fn check_truncation(&self, d: &mut Diagnostics) {
        match self.protocol {
            Protocol::Gkp if self.n_cut < GKP_MIN_N_CUT => d.warnings.push(format!(
                "n_cut = {} is likely too small for the GKP comb; n_cut >= {GKP_MIN_N_CUT} is recommended",
                self.n_cut
            )),
            Protocol::Cat => {
                if let Ok(seq) = self.cat_sequence() {
                    let reach: f64 = seq.alphas().iter().map(|a| a.norm()).sum();
                    let needed = ((reach + 6.0).powi(2)).ceil() as usize;
                    if self.n_cut < needed {
                        d.warnings.push(format!(
                            "cat components reach |alpha| = {reach:.2}; n_cut >= {needed} is recommended"
                        ));
                    }
                }
            }
            Protocol::Squeeze | Protocol::Hamiltonian => {
                let needed = if self.epsilon > 0.0 { LOSSY_MIN_N_CUT } else { PURE_MIN_N_CUT };
                if self.n_cut < needed {
                    d.warnings.push(format!(
                        "n_cut = {} is below {needed}, the truncation known to resolve these runs; check the reported tail mass",
                        self.n_cut
                    ));
                }
            }
            _ => {}
        }
    }
}

fn config_error(msg: &str) -> CliError {
    CliError::Config(vec![msg.to_string()])
}
