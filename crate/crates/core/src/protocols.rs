//! Measurement sequences and their runners.
//!
//! Step `m = 1` is always applied first. Outputs are defined up to a global
//! phase; compare them with fidelities rather than amplitudes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::{
    channels::{apply_loss, finish_pure, measurement_cycle, project_displaced_parity_mixed, LossModel, MIN_PROBABILITY},
    error::{invalid, Error, Result},
    fock::{coherent_exact, displacement_entries, mask_parity, truncation_tail, Parity, TruncationConfig},
    state::{MixedState, PureState, State},
};

const I: C64 = C64::new(0.0, 1.0);

/// Displacement magnitudes `t⃗` along the direction `i e^{iθ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSequence {
    theta: f64,
    times: Vec<f64>,
}

impl DisplacementSequence {
    /// `t_m = (−1)^{m−1} t_max (1 − ⌊(m−1)/2⌋ / ⌊(M−1)/2⌋)`; requires odd `M`.
    pub fn symmetric(m: usize, t_max: f64, theta: f64) -> Result<Self> {
        if m % 2 == 0 {
            return Err(Error::EvenM(m));
        }
        check_t_max(t_max)?;
        if m == 1 {
            return Self::explicit(vec![0.0], theta);
        }
        let half = ((m - 1) / 2) as f64;
        let times = (1..=m)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * t_max * (1.0 - ((k - 1) / 2) as f64 / half)
            })
            .collect();
        Self::explicit(times, theta)
    }

    /// `t_m = t_max (1 − (m−1)/(M−1))`; requires `M ≥ 2`.
    pub fn linear(m: usize, t_max: f64, theta: f64) -> Result<Self> {
        if m < 2 {
            return Err(invalid(format!("linear ansatz needs M >= 2, got {m}")));
        }
        check_t_max(t_max)?;
        let times = (1..=m).map(|k| t_max * (1.0 - (k - 1) as f64 / (m - 1) as f64)).collect();
        Self::explicit(times, theta)
    }

    pub fn explicit(times: Vec<f64>, theta: f64) -> Result<Self> {
        if times.is_empty() {
            return Err(invalid("displacement sequence must not be empty"));
        }
        if !theta.is_finite() || times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("displacement sequence entries must be finite"));
        }
        Ok(Self { theta, times })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Displacements `α_m = i e^{iθ} t_m`.
    pub fn alphas(&self) -> Vec<C64> {
        let dir = I * C64::from_polar(1.0, self.theta);
        self.times.iter().map(|&t| dir * t).collect()
    }
}

fn check_t_max(t_max: f64) -> Result<()> {
    if t_max.is_finite() && t_max >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("t_max must be finite and non-negative, got {t_max}")))
    }
}

/// Displacements for the cat protocol `Π P₊ D(α_m)|0⟩`. An empty sequence
/// leaves the vacuum untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatSequence {
    alphas: Vec<C64>,
}

impl CatSequence {
    pub fn new(alphas: Vec<C64>) -> Result<Self> {
        if alphas.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(invalid("cat displacements must be finite"));
        }
        Ok(Self { alphas })
    }

    pub fn alphas(&self) -> &[C64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Square-lattice schedule `α_m = i^{(1+(−1)^m)/2} 2^{⌊(m−1)/2⌋−1} δ`.
pub fn cat_lattice_sequence(m: usize, delta: f64) -> Result<CatSequence> {
    if m == 0 {
        return Err(invalid("cat lattice needs M >= 1"));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid(format!("lattice spacing must be positive, got {delta}")));
    }
    let alphas = (1..=m)
        .map(|k| {
            let mag = delta * 2f64.powi(((k - 1) / 2) as i32 - 1);
            if k % 2 == 0 {
                I * mag
            } else {
                C64::new(mag, 0.0)
            }
        })
        .collect();
    CatSequence::new(alphas)
}

/// Squeezing stage followed by `comb_steps` rounds of `P₊ D(mδ/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkpSpec {
    pub squeeze_stage: DisplacementSequence,
    pub delta: f64,
    pub comb_steps: usize,
}

impl GkpSpec {
    pub fn new(squeeze_stage: DisplacementSequence, delta: f64, comb_steps: usize) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(invalid(format!("lattice spacing must be positive, got {delta}")));
        }
        Ok(Self { squeeze_stage, delta, comb_steps })
    }

    /// Comb displacements `mδ/2`, `m = 1…comb_steps`.
    pub fn comb_alphas(&self) -> Vec<C64> {
        (1..=self.comb_steps).map(|m| C64::new(m as f64 * self.delta / 2.0, 0.0)).collect()
    }
}

/// Per-step branch weights of a post-selected run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub per_step_probabilities: Vec<f64>,
    pub cumulative_probability: f64,
    /// Relative population in the top 10% of levels of the final state.
    pub tail_mass: f64,
    #[serde(skip)]
    pub checkpoints: Option<Vec<State>>,
}

impl RunLog {
    fn new(checkpoint: bool) -> Self {
        Self {
            per_step_probabilities: Vec::new(),
            cumulative_probability: 1.0,
            tail_mass: 0.0,
            checkpoints: checkpoint.then(Vec::new),
        }
    }

    fn record(&mut self, p: f64, state: impl FnOnce() -> State) {
        self.per_step_probabilities.push(p);
        self.cumulative_probability *= p;
        if let Some(c) = self.checkpoints.as_mut() {
            c.push(state());
        }
    }

    fn finish(mut self, state: &State) -> Self {
        self.tail_mass = state.tail_mass();
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Use the folded decomposition `D(α_M) Π P₊ D(−Δα_m)`; lossless pure
    /// runs only.
    pub folded: bool,
    /// Keep the state after every step in [`RunLog::checkpoints`].
    pub checkpoint: bool,
    /// Propagate a density matrix even when the run is lossless.
    pub density_matrix: bool,
}

fn at_step(step: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::ZeroProbability { probability, .. } => Error::ZeroProbability { step: Some(step), probability },
        other => other,
    }
}

fn check_step(p: f64, step: usize) -> Result<()> {
    if p >= MIN_PROBABILITY {
        Ok(())
    } else {
        Err(Error::ZeroProbability { step: Some(step), probability: p })
    }
}

/// Pure-state post-selection on the even outcome in the frame displaced by
/// `α`; `p` is relative to the input norm.
fn pure_displaced_step(psi: &PureState, alpha: C64, step: usize) -> Result<(PureState, f64)> {
    let d = displacement_entries(alpha, psi.dim());
    let mut shifted: DVector<C64> = d.ad_mul(psi.amplitudes());
    mask_parity(&mut shifted, Parity::Even);
    let out = PureState::from_raw(&d * shifted);
    let p = out.norm_squared() / psi.norm_squared();
    let o = finish_pure(out, p).map_err(at_step(step))?;
    Ok((o.state, o.success_probability))
}

/// Applies `P₊(α_m)`, `α_m = i e^{iθ} t_m`, for `m = 1…M` to the vacuum,
/// interleaved with the loss channel when `loss` is nonzero.
pub fn run_squeezing(
    seq: &DisplacementSequence,
    loss: &LossModel,
    trunc: TruncationConfig,
    opts: RunOptions,
) -> Result<(State, RunLog)> {
    let mixed = !loss.is_lossless() || opts.density_matrix;
    if opts.folded && mixed {
        return Err(invalid("the folded form is only available for lossless pure-state runs"));
    }
    let alphas = seq.alphas();
    let mut log = RunLog::new(opts.checkpoint);
    if mixed {
        let rho = squeeze_mixed(MixedState::vacuum(trunc), &alphas, loss, trunc, &mut log, 0)?;
        let state = State::Mixed(rho);
        return Ok((state.clone(), log.finish(&state)));
    }
    let psi = if opts.folded {
        squeeze_folded(&alphas, trunc, &mut log)?
    } else {
        let mut psi = PureState::vacuum(trunc);
        for (m, &alpha) in alphas.iter().enumerate() {
            let (next, p) = pure_displaced_step(&psi, alpha, m + 1)?;
            psi = next;
            log.record(p, || State::Pure(psi.clone()));
        }
        psi
    };
    let state = State::Pure(psi);
    Ok((state.clone(), log.finish(&state)))
}

fn squeeze_mixed(
    mut rho: MixedState,
    alphas: &[C64],
    loss: &LossModel,
    trunc: TruncationConfig,
    log: &mut RunLog,
    offset: usize,
) -> Result<MixedState> {
    for (m, &alpha) in alphas.iter().enumerate() {
        let out = measurement_cycle(&rho, alpha, loss, trunc).map_err(at_step(offset + m + 1))?;
        rho = out.state;
        log.record(out.success_probability, || State::Mixed(rho.clone()));
    }
    Ok(rho)
}

/// Folded form. All `α_m` lie on one line, so the BCH phases between
/// neighbouring displacements vanish.
fn squeeze_folded(alphas: &[C64], trunc: TruncationConfig, log: &mut RunLog) -> Result<PureState> {
    let dim = trunc.dim();
    let mut v = PureState::vacuum(trunc).into_amplitudes();
    let mut prev = C64::new(0.0, 0.0);
    for (m, &alpha) in alphas.iter().enumerate() {
        v = displacement_entries(prev - alpha, dim) * v;
        let before = v.norm_squared();
        mask_parity(&mut v, Parity::Even);
        let p = v.norm_squared() / before;
        check_step(p, m + 1)?;
        v.unscale_mut(v.norm());
        log.record(p, || {
            let undone = displacement_entries(alpha, dim) * &v;
            State::Pure(PureState::from_raw(undone))
        });
        prev = alpha;
    }
    PureState::from_raw(displacement_entries(prev, dim) * v).normalize()
}

/// Population that a displacement pushes past the cut.
fn displacement_leak(before: f64, after: f64) -> f64 {
    (1.0 - after / before).max(0.0)
}

/// Applies `P₊ D(α_m)` for `m = 1…M` to the vacuum.
pub fn run_cat(seq: &CatSequence, loss: &LossModel, trunc: TruncationConfig) -> Result<(State, RunLog)> {
    run_comb(State::Pure(PureState::vacuum(trunc)), seq.alphas(), loss, trunc, RunLog::new(false), 0)
}

fn run_comb(
    start: State,
    alphas: &[C64],
    loss: &LossModel,
    trunc: TruncationConfig,
    mut log: RunLog,
    offset: usize,
) -> Result<(State, RunLog)> {
    let dim = trunc.dim();
    let mut state = match start {
        State::Pure(psi) if !loss.is_lossless() => State::Mixed(psi.to_density()),
        other => other,
    };
    for (m, &alpha) in alphas.iter().enumerate() {
        let step = offset + m + 1;
        let d = displacement_entries(alpha, dim);
        state = match state {
            State::Pure(psi) => {
                let mut v = &d * psi.amplitudes();
                trunc.check_tail(displacement_leak(psi.norm_squared(), v.norm_squared()))?;
                mask_parity(&mut v, Parity::Even);
                let p = v.norm_squared() / psi.norm_squared();
                let out = finish_pure(PureState::from_raw(v), p).map_err(at_step(step))?;
                log.record(p, || State::Pure(out.state.clone()));
                State::Pure(out.state)
            }
            State::Mixed(rho) => {
                let moved = MixedState::from_raw(&d * rho.matrix() * d.adjoint());
                trunc.check_tail(displacement_leak(rho.trace(), moved.trace()))?;
                let kept = project_displaced_parity_mixed(&moved, Parity::Even, C64::new(0.0, 0.0));
                let p = kept.trace() / rho.trace();
                check_step(p, step)?;
                let rho = apply_loss(&kept.normalize()?.hermitized(), loss);
                log.record(p, || State::Mixed(rho.clone()));
                State::Mixed(rho)
            }
        };
    }
    let log = log.finish(&state);
    Ok((state, log))
}

/// Runs the squeezing stage, then `P₊ D(mδ/2)` for `m = 1…comb_steps`.
pub fn run_gkp(spec: &GkpSpec, loss: &LossModel, trunc: TruncationConfig, opts: RunOptions) -> Result<(State, RunLog)> {
    let (squeezed, log) = run_squeezing(&spec.squeeze_stage, loss, trunc, opts)?;
    let offset = log.per_step_probabilities.len();
    run_comb(squeezed, &spec.comb_alphas(), loss, trunc, log, offset)
}

/// `|−ψ⟩`: amplitudes `c_n → (−1)ⁿ c_n`.
pub fn point_reflect(psi: &PureState) -> PureState {
    let mut v = psi.amplitudes().clone();
    for c in v.iter_mut().skip(1).step_by(2) {
        *c = -*c;
    }
    PureState::from_raw(v)
}

/// Coherent-state decomposition `Σ c_j |β_j⟩` of `Π P₊ D(α_m)|0⟩`, using
/// `D(α)|β⟩ = e^{i Im(αβ*)}|α+β⟩` and `P₊|γ⟩ = (|γ⟩ + |−γ⟩)/2`. Coincident
/// components are merged.
pub fn cat_components(seq: &CatSequence) -> Vec<(C64, C64)> {
    let mut comps = vec![(C64::new(1.0, 0.0), C64::new(0.0, 0.0))];
    for &alpha in seq.alphas() {
        let mut next: Vec<(C64, C64)> = Vec::with_capacity(2 * comps.len());
        for &(c, beta) in &comps {
            let gamma = alpha + beta;
            let c = c * C64::from_polar(0.5, (alpha * beta.conj()).im);
            for g in [gamma, -gamma] {
                match next.iter_mut().find(|(_, b)| (*b - g).norm() < 1e-12) {
                    Some(slot) => slot.0 += c,
                    None => next.push((c, g)),
                }
            }
        }
        next.retain(|(c, _)| c.norm() > 1e-15);
        comps = next;
    }
    comps
}

/// Normalized superposition `Σ c_j |β_j⟩`.
pub fn coherent_superposition(components: &[(C64, C64)], trunc: TruncationConfig) -> Result<PureState> {
    let mut v = DVector::zeros(trunc.dim());
    for &(c, beta) in components {
        let comp = coherent_exact(beta, trunc.dim());
        trunc.check_tail(truncation_tail(&comp))?;
        v += comp * c;
    }
    PureState::from_raw(v).normalize()
}

/// `Π P₊ D(α_m)|0⟩` from its coherent-state decomposition.
pub fn analytic_cat(seq: &CatSequence, trunc: TruncationConfig) -> Result<PureState> {
    coherent_superposition(&cat_components(seq), trunc)
}

/// `e^{iφ}|α₁+α₂⟩ + e^{−iφ}|α₁−α₂⟩ + e^{−iφ}|−α₁+α₂⟩ + e^{iφ}|−α₁−α₂⟩`
/// with `φ = Im(α₂α₁*)`, normalized.
pub fn analytic_cat_m2(alpha1: C64, alpha2: C64, trunc: TruncationConfig) -> Result<PureState> {
    let phi = (alpha2 * alpha1.conj()).im;
    let (plus, minus) = (C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi));
    coherent_superposition(
        &[(plus, alpha1 + alpha2), (minus, alpha1 - alpha2), (minus, -alpha1 + alpha2), (plus, -alpha1 - alpha2)],
        trunc,
    )
}

/// The composite projector `Π_m P₊(α_m)` as a dense matrix, step 1 rightmost.
pub fn sequence_projector(seq: &DisplacementSequence, trunc: TruncationConfig) -> DMatrix<C64> {
    let dim = trunc.dim();
    let mut acc = DMatrix::identity(dim, dim);
    for alpha in seq.alphas() {
        acc = crate::fock::displaced_parity(Parity::Even, alpha, trunc).into_entries() * acc;
    }
    acc
}
