//! Per-measurement photon loss and the lossy measurement cycle.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::{
    error::{invalid, Error, Result},
    fock::{displacement_entries, Parity, TruncationConfig},
    math::ln_factorials,
    operator::{OperatorKind, OperatorMatrix},
    state::{check_dims, MixedState, PureState},
};

/// Post-selected branches with weight below this are reported as
/// [`Error::ZeroProbability`].
pub const MIN_PROBABILITY: f64 = 1e-12;

/// Loss of each photon with probability `epsilon = 1 − η` between
/// measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    epsilon: f64,
    /// Highest Kraus index kept; `None` keeps all of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_max: Option<usize>,
}

impl LossModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(invalid(format!("loss epsilon must lie in [0, 1), got {epsilon}")));
        }
        Ok(Self { epsilon, k_max: None })
    }

    pub fn lossless() -> Self {
        Self { epsilon: 0.0, k_max: None }
    }

    /// Truncate the Kraus sum at `k_max`. The channel is then trace-decreasing
    /// on states with more than `k_max` photons.
    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = Some(k_max);
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eta(&self) -> f64 {
        1.0 - self.epsilon
    }

    pub fn k_max(&self) -> Option<usize> {
        self.k_max
    }

    pub fn is_lossless(&self) -> bool {
        self.epsilon == 0.0
    }
}

impl Default for LossModel {
    fn default() -> Self {
        Self::lossless()
    }
}

/// Normalized post-measurement state together with the weight of the branch.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<S = MixedState> {
    pub state: S,
    pub success_probability: f64,
}

/// `ln e_k(m)` with `E_k|m+k⟩ = e_k(m)|m⟩`.
fn ln_kraus_weight(lf: &[f64], ln_eta: f64, ln_eps: f64, k: usize, m: usize) -> f64 {
    0.5 * (k as f64 * ln_eps - lf[k] + m as f64 * ln_eta + lf[m + k] - lf[m])
}

/// Kraus operator `E_k = √((1−η)ᵏ/k!) √η^{a†a} aᵏ`.
pub fn loss_kraus(eta: f64, k: usize, trunc: TruncationConfig) -> Result<OperatorMatrix> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("transmissivity must lie in (0, 1], got {eta}")));
    }
    let dim = trunc.dim();
    let mut e = DMatrix::zeros(dim, dim);
    if eta == 1.0 {
        if k == 0 {
            e.fill_with_identity();
        }
        return Ok(OperatorMatrix::new(e, OperatorKind::General));
    }
    let lf = ln_factorials(dim);
    let (ln_eta, ln_eps) = (eta.ln(), (1.0 - eta).ln());
    for m in 0..dim.saturating_sub(k) {
        e[(m, m + k)] = C64::new(ln_kraus_weight(&lf, ln_eta, ln_eps, k, m).exp(), 0.0);
    }
    Ok(OperatorMatrix::new(e, OperatorKind::General))
}

/// `Σ_k E_k ρ E_k†`, evaluated entrywise as
/// `ρ'_{mn} = Σ_k e_k(m) e_k(n) ρ_{m+k, n+k}`.
pub fn apply_loss(rho: &MixedState, loss: &LossModel) -> MixedState {
    if loss.is_lossless() {
        return rho.clone();
    }
    let dim = rho.dim();
    let k_top = loss.k_max().map_or(dim - 1, |k| k.min(dim - 1));
    if k_top < dim - 1 {
        log::warn!("Kraus sum truncated at k = {k_top} < n_cut = {}; channel is not trace preserving", dim - 1);
    }
    let lf = ln_factorials(dim);
    let (ln_eta, ln_eps) = (loss.eta().ln(), loss.epsilon().ln());
    let src = rho.matrix();
    let mut out = DMatrix::zeros(dim, dim);
    let mut w = vec![0.0; dim];
    for k in 0..=k_top {
        let len = dim - k;
        for (m, wm) in w[..len].iter_mut().enumerate() {
            *wm = ln_kraus_weight(&lf, ln_eta, ln_eps, k, m).exp();
        }
        for n in 0..len {
            for m in 0..len {
                out[(m, n)] += src[(m + k, n + k)] * (w[m] * w[n]);
            }
        }
    }
    MixedState::from_raw(out).hermitized()
}

/// States that can be projected by a measurement operator.
pub trait Measurable: Sized {
    /// Applies `P`, returns the normalized result and the branch weight
    /// relative to the input norm.
    fn project(&self, projector: &OperatorMatrix) -> Result<StepOutcome<Self>>;
}

impl Measurable for PureState {
    fn project(&self, projector: &OperatorMatrix) -> Result<StepOutcome<Self>> {
        let out = projector.apply(self)?;
        let p = out.norm_squared() / self.norm_squared();
        finish_pure(out, p)
    }
}

impl Measurable for MixedState {
    fn project(&self, projector: &OperatorMatrix) -> Result<StepOutcome<Self>> {
        let out = projector.conjugate(self)?;
        let p = out.trace() / self.trace();
        finish_mixed(out, p)
    }
}

fn zero_probability(p: f64) -> Error {
    Error::ZeroProbability { step: None, probability: p }
}

pub(crate) fn finish_pure(out: PureState, p: f64) -> Result<StepOutcome<PureState>> {
    if !(p >= MIN_PROBABILITY) {
        return Err(zero_probability(p));
    }
    Ok(StepOutcome { state: out.normalize()?, success_probability: p.min(1.0) })
}

fn finish_mixed(out: MixedState, p: f64) -> Result<StepOutcome<MixedState>> {
    if !(p >= MIN_PROBABILITY) {
        return Err(zero_probability(p));
    }
    Ok(StepOutcome { state: out.normalize()?.hermitized(), success_probability: p.min(1.0) })
}

/// Post-selects `state` on the outcome described by `projector`.
pub fn measure_project<S: Measurable>(state: &S, projector: &OperatorMatrix) -> Result<StepOutcome<S>> {
    state.project(projector)
}

/// `D(α) P D(α)† ρ D(α) P D(α)†` for the parity projector `P`, via the
/// displaced frame.
pub(crate) fn project_displaced_parity_mixed(rho: &MixedState, parity: Parity, alpha: C64) -> MixedState {
    let d = displacement_entries(alpha, rho.dim());
    let mut shifted = d.ad_mul(rho.matrix()) * &d;
    let dim = rho.dim();
    for j in 0..dim {
        for i in 0..dim {
            if !(parity.contains(i) && parity.contains(j)) {
                shifted[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    MixedState::from_raw(&d * shifted * d.adjoint())
}

/// One lossy cycle: even-parity projection displaced by `α`, then loss,
/// normalized by the pre-loss branch weight.
pub fn measurement_cycle(
    rho: &MixedState,
    alpha: C64,
    loss: &LossModel,
    trunc: TruncationConfig,
) -> Result<StepOutcome> {
    check_dims(trunc.dim(), rho.dim())?;
    let projected = project_displaced_parity_mixed(rho, Parity::Even, alpha);
    let p = projected.trace() / rho.trace();
    let kept = finish_mixed(projected, p)?;
    Ok(StepOutcome { state: apply_loss(&kept.state, loss), success_probability: kept.success_probability })
}

/// Lossy cycle for an arbitrary measurement operator.
pub fn measurement_cycle_with(rho: &MixedState, projector: &OperatorMatrix, loss: &LossModel) -> Result<StepOutcome> {
    let kept = rho.project(projector)?;
    Ok(StepOutcome { state: apply_loss(&kept.state, loss), success_probability: kept.success_probability })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, displaced_parity, parity_projectors};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn trunc(n: usize) -> TruncationConfig {
        TruncationConfig::new(n).unwrap()
    }

    fn full_channel(rho: &MixedState, eta: f64, t: TruncationConfig) -> DMatrix<C64> {
        let mut acc = DMatrix::zeros(t.dim(), t.dim());
        for k in 0..t.dim() {
            let e = loss_kraus(eta, k, t).unwrap();
            acc += e.conjugate(rho).unwrap().into_matrix();
        }
        acc
    }

    #[test]
    fn loss_model_validation() {
        assert!(LossModel::new(1.0).is_err());
        assert!(LossModel::new(-0.1).is_err());
        assert_abs_diff_eq!(LossModel::new(0.15).unwrap().eta(), 0.85);
    }

    #[test]
    fn lossless_kraus_limit() {
        let t = trunc(6);
        assert_eq!(loss_kraus(1.0, 0, t).unwrap().entries(), &DMatrix::identity(7, 7));
        assert!(loss_kraus(1.0, 2, t).unwrap().entries().iter().all(|c| c.norm() == 0.0));
        assert!(loss_kraus(0.0, 0, t).is_err());
    }

    #[test]
    fn kraus_completeness_is_exact() {
        let t = trunc(40);
        for eta in [0.3, 0.85, 0.99] {
            let mut sum = DMatrix::<C64>::zeros(41, 41);
            for k in 0..=40 {
                let e = loss_kraus(eta, k, t).unwrap();
                sum += e.entries().adjoint() * e.entries();
            }
            assert!((sum - DMatrix::<C64>::identity(41, 41)).camax() < 1e-12);
        }
    }

    #[test]
    fn coherent_state_loses_amplitude() {
        let t = trunc(80);
        let alpha = C64::new(1.2, 0.0);
        let eta: f64 = 0.9;
        let rho = coherent_state(alpha, t).unwrap().to_density();
        let want = coherent_state(alpha * eta.sqrt(), t).unwrap().to_density();
        let kraus = full_channel(&rho, eta, t);
        assert!((&kraus - want.matrix()).camax() < 1e-8);
        let fast = apply_loss(&rho, &LossModel::new(1.0 - eta).unwrap());
        assert!((fast.matrix() - kraus).camax() < 1e-13);
    }

    #[test]
    fn vacuum_fixed_and_fock_decay() {
        let t = trunc(20);
        let loss = LossModel::new(0.3).unwrap();
        let vac = MixedState::vacuum(t);
        assert_eq!(apply_loss(&vac, &loss).matrix(), vac.matrix());
        assert_eq!(apply_loss(&vac, &LossModel::lossless()), vac);
        let four = PureState::fock(4, t).unwrap().to_density();
        assert_abs_diff_eq!(apply_loss(&four, &loss).mean_photon_number(), 4.0 * 0.7, epsilon = 1e-12);
    }

    #[test]
    fn truncated_kraus_sum_drops_trace() {
        let t = trunc(10);
        let rho = PureState::fock(6, t).unwrap().to_density();
        let out = apply_loss(&rho, &LossModel::new(0.5).unwrap().with_k_max(2));
        assert!(out.trace() < 1.0 - 1e-3);
    }

    #[test]
    fn projection_of_vacuum() {
        let t = trunc(30);
        let (pp, pm) = parity_projectors(t);
        let vac = PureState::vacuum(t);
        let out = measure_project(&vac, &pp).unwrap();
        assert_eq!(out.success_probability, 1.0);
        assert_eq!(out.state, vac);
        assert!(matches!(measure_project(&vac, &pm), Err(Error::ZeroProbability { .. })));
        assert!(matches!(measure_project(&vac.to_density(), &pm), Err(Error::ZeroProbability { .. })));
    }

    #[test]
    fn displaced_projection_probability() {
        let t = trunc(80);
        for tt in [0.5, 1.0, 2.0] {
            let p = displaced_parity(Parity::Even, C64::new(0.0, tt), t);
            let want = 0.5 * (1.0 + (-2.0 * tt * tt).exp());
            let pure = measure_project(&PureState::vacuum(t), &p).unwrap();
            assert_abs_diff_eq!(pure.success_probability, want, epsilon = 1e-12);
            let mixed = measure_project(&MixedState::vacuum(t), &p).unwrap();
            assert_abs_diff_eq!(mixed.success_probability, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn trivial_cycle_keeps_vacuum() {
        let t = trunc(20);
        let vac = MixedState::vacuum(t);
        let out = measurement_cycle(&vac, C64::new(0.0, 0.0), &LossModel::lossless(), t).unwrap();
        assert_eq!(out.success_probability, 1.0);
        assert!((out.state.matrix() - vac.matrix()).camax() < 1e-15);
    }

    #[test]
    fn lossy_cycle_leaks_into_odd_parity() {
        let t = trunc(51);
        let out = measurement_cycle(&MixedState::vacuum(t), C64::new(0.0, 0.8), &LossModel::new(0.15).unwrap(), t).unwrap();
        assert_abs_diff_eq!(out.state.trace(), 1.0, epsilon = 1e-12);
        assert!(out.state.hermitian_defect() < 1e-15);
        let (even, odd) = out.state.parity_populations();
        assert!(even < 1.0 && odd > 1e-3, "even {even}");
        assert!(out.state.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn cycle_with_dense_projector_matches() {
        let t = trunc(40);
        let rho = coherent_state(C64::new(0.4, 0.3), t).unwrap().to_density();
        let alpha = C64::new(-0.6, 0.9);
        let loss = LossModel::new(0.1).unwrap();
        let a = measurement_cycle(&rho, alpha, &loss, t).unwrap();
        let b = measurement_cycle_with(&rho, &displaced_parity(Parity::Even, alpha, t), &loss).unwrap();
        assert_abs_diff_eq!(a.success_probability, b.success_probability, epsilon = 1e-12);
        assert!((a.state.matrix() - b.state.matrix()).camax() < 1e-12);
    }

    fn random_density(seed: &[f64], dim: usize) -> MixedState {
        let k = seed.len() / (2 * dim);
        let g = DMatrix::from_fn(dim, k, |i, j| C64::new(seed[2 * (j * dim + i)], seed[2 * (j * dim + i) + 1]));
        MixedState::new(&g * g.adjoint()).unwrap().normalize().unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn loss_preserves_trace_and_positivity(
            eps in 0.0f64..0.99,
            seed in proptest::collection::vec(-1.0f64..1.0, 2 * 16 * 3),
        ) {
            let rho = random_density(&seed, 16);
            let out = apply_loss(&rho, &LossModel::new(eps).unwrap());
            prop_assert!((out.trace() - rho.trace()).abs() < 1e-8);
            prop_assert!(out.min_eigenvalue() > -1e-8);
            prop_assert!(out.hermitian_defect() < 1e-12);
        }
    }
}
