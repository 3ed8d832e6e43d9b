//! Finite-energy GKP codeword `|1_L⟩` with a Gaussian envelope.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{
    error::{invalid, Result},
    fock::{displacement_entries, squeezed_vacuum_exact, SqueezeParameter, TruncationConfig},
    optimize::nelder_mead_max,
    state::{PureState, StateRef},
};

/// Teeth whose envelope weight relative to the largest falls below this are
/// dropped.
const ENVELOPE_CUTOFF: f64 = 1e-8;
/// Teeth further than this beyond `√n_cut` have no overlap with the retained
/// levels and are left out of the truncated vector.
const REACH_MARGIN: f64 = 12.0;

const R_GRID: (f64, f64, f64) = (0.2, 3.0, 0.1);
const SIGMA_GRID: (f64, f64, f64) = (1.0, 12.0, 0.5);
const RESTARTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GkpFitReport {
    pub r_opt: f64,
    pub sigma_env_opt: f64,
    pub fidelity: f64,
    /// Tooth limit used for the reference states, if any.
    #[serde(default)]
    pub teeth: Option<usize>,
}

/// Tooth positions `(2j+1)δ/2` and relative envelope weights.
fn teeth(delta: f64, sigma: f64, limit: Option<usize>) -> Vec<(f64, f64)> {
    let x0 = delta / 2.0;
    let weight = |x: f64| (-(x * x - x0 * x0) / (2.0 * sigma * sigma)).exp();
    let mut out = Vec::new();
    let max_k = limit.map_or(usize::MAX, |t| t / 2);
    let mut k = 0;
    while k < max_k {
        let x = (2 * k + 1) as f64 * x0;
        let w = weight(x);
        if w < ENVELOPE_CUTOFF {
            break;
        }
        out.push((-x, w));
        out.push((x, w));
        k += 1;
    }
    out
}

/// Squeezed vacuum displaced to each tooth, on the retained levels.
fn tooth_states(r: f64, positions: &[f64], dim: usize) -> Vec<Option<DVector<C64>>> {
    let sq = squeezed_vacuum_exact(SqueezeParameter { r, phase: 0.0 }, dim);
    let reach = ((dim - 1) as f64).sqrt() + REACH_MARGIN;
    positions
        .iter()
        .map(|&x| (x.abs() <= reach).then(|| displacement_entries(C64::new(x, 0.0), dim) * &sq))
        .collect()
}

/// `w^T G w` with the exact Gram matrix
/// `⟨D(x_j)S(r)0|D(x_k)S(r)0⟩ = exp(−(x_k − x_j)² e^{2r}/2)`.
fn gram_norm(r: f64, teeth: &[(f64, f64)]) -> f64 {
    let s = (2.0 * r).exp() / 2.0;
    let mut acc = 0.0;
    for &(xj, wj) in teeth {
        for &(xk, wk) in teeth {
            acc += wj * wk * (-(xk - xj).powi(2) * s).exp();
        }
    }
    acc
}

fn check_limit(limit: Option<usize>) -> Result<()> {
    match limit {
        Some(t) if t == 0 || t % 2 == 1 => Err(invalid(format!("tooth limit must be even and positive, got {t}"))),
        _ => Ok(()),
    }
}

/// `∝ Σ_j e^{−x_j²/(2σ²)} D(x_j) S(r)|0⟩` with `x_j = (2j+1)δ/2`.
///
/// `teeth` keeps only the innermost teeth (`j = −teeth/2 … teeth/2 − 1`).
pub fn approx_gkp_state(
    r: f64,
    sigma_env: f64,
    delta: f64,
    trunc: TruncationConfig,
    limit: Option<usize>,
) -> Result<PureState> {
    if !(r.is_finite() && r >= 0.0 && sigma_env > 0.0 && delta > 0.0) {
        return Err(invalid("approximate GKP state needs r >= 0, sigma_env > 0 and delta > 0"));
    }
    check_limit(limit)?;
    let t = teeth(delta, sigma_env, limit);
    let positions: Vec<f64> = t.iter().map(|p| p.0).collect();
    let mut v = DVector::zeros(trunc.dim());
    for (comp, &(_, w)) in tooth_states(r, &positions, trunc.dim()).iter().zip(&t) {
        if let Some(c) = comp {
            v += c * C64::from(w);
        }
    }
    let norm = gram_norm(r, &t);
    trunc.check_tail((1.0 - v.norm_squared() / norm).max(0.0))?;
    PureState::from_raw(v).normalize()
}

/// Overlaps of one squeezing level with every tooth reachable at the widest
/// envelope.
struct ToothOverlaps {
    r: f64,
    teeth: Vec<(f64, f64)>,
    /// `Re ⟨c_j|ρ|c_k⟩`.
    a: DMatrix<f64>,
}

impl ToothOverlaps {
    fn new(state: StateRef<'_>, r: f64, delta: f64, sigma_max: f64, limit: Option<usize>) -> Self {
        let teeth = teeth(delta, sigma_max, limit);
        let positions: Vec<f64> = teeth.iter().map(|p| p.0).collect();
        let dim = state.dim();
        let comps = tooth_states(r, &positions, dim);
        let cols: Vec<DVector<C64>> = comps.into_iter().map(|c| c.unwrap_or_else(|| DVector::zeros(dim))).collect();
        let c = DMatrix::from_columns(&cols);
        let a = match state {
            StateRef::Pure(psi) => {
                let o = c.ad_mul(psi.amplitudes());
                (&o * o.adjoint()).map(|z| z.re) / psi.norm_squared()
            }
            StateRef::Mixed(rho) => (c.ad_mul(&(rho.matrix() * &c))).map(|z| z.re) / rho.trace(),
        };
        Self { r, teeth, a }
    }

    fn fidelity(&self, sigma: f64, delta: f64) -> f64 {
        let x0 = delta / 2.0;
        let w: Vec<f64> = self
            .teeth
            .iter()
            .map(|&(x, _)| {
                let w = (-(x * x - x0 * x0) / (2.0 * sigma * sigma)).exp();
                if w < ENVELOPE_CUTOFF { 0.0 } else { w }
            })
            .collect();
        let used: Vec<(f64, f64)> = self.teeth.iter().zip(&w).map(|(&(x, _), &w)| (x, w)).filter(|p| p.1 > 0.0).collect();
        let mut num = 0.0;
        for (j, wj) in w.iter().enumerate() {
            for (k, wk) in w.iter().enumerate() {
                num += wj * wk * self.a[(j, k)];
            }
        }
        num / gram_norm(self.r, &used)
    }
}

fn grid((lo, hi, step): (f64, f64, f64)) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Maximizes the fidelity with [`approx_gkp_state`] over `(r, σ_env)`: a
/// coarse grid, then Nelder–Mead from the best few cells.
pub fn fit_gkp<'a>(state: impl Into<StateRef<'a>>, delta: f64, limit: Option<usize>) -> Result<GkpFitReport> {
    if !(delta > 0.0) {
        return Err(invalid("lattice spacing must be positive"));
    }
    check_limit(limit)?;
    let state = state.into();
    let sigmas = grid(SIGMA_GRID);
    let mut cells: Vec<(f64, f64, f64)> = grid(R_GRID)
        .par_iter()
        .flat_map_iter(|&r| {
            let ov = ToothOverlaps::new(state, r, delta, SIGMA_GRID.1, limit);
            sigmas.iter().map(move |&s| (r, s, ov.fidelity(s, delta))).collect::<Vec<_>>()
        })
        .collect();
    cells.sort_by(|a, b| b.2.total_cmp(&a.2));
    let f = |p: &[f64]| ToothOverlaps::new(state, p[0], delta, p[1], limit).fidelity(p[1], delta);
    let (lo, hi) = ([R_GRID.0, SIGMA_GRID.0], [R_GRID.1, SIGMA_GRID.1]);
    let mut best = cells[0];
    for &(r, s, _) in cells.iter().take(RESTARTS) {
        let (p, fp) = nelder_mead_max(f, &[r, s], &[R_GRID.2, SIGMA_GRID.2], &lo, &hi, 1e-12)?;
        if fp > best.2 {
            best = (p[0], p[1], fp);
        }
    }
    Ok(GkpFitReport { r_opt: best.0, sigma_env_opt: best.1, fidelity: best.2.min(1.0), teeth: limit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{analysis::fidelity, fock::coherent_state};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn trunc(n: usize) -> TruncationConfig {
        TruncationConfig::new(n).unwrap()
    }

    #[test]
    fn narrow_envelope_keeps_two_teeth() {
        let t = trunc(80);
        let delta = 2.0 * PI.sqrt();
        let g = approx_gkp_state(0.0, 0.2, delta, t, None).unwrap();
        let plus = coherent_state(C64::new(PI.sqrt(), 0.0), t).unwrap();
        let minus = coherent_state(C64::new(-PI.sqrt(), 0.0), t).unwrap();
        let pair = PureState::new(plus.amplitudes() + minus.amplitudes()).unwrap().normalize().unwrap();
        assert_abs_diff_eq!(fidelity(&g, &pair).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn symmetric_comb_is_even() {
        let g = approx_gkp_state(1.0, 3.0, 2.0 * PI.sqrt(), trunc(300), None).unwrap();
        let (_, odd) = g.parity_populations();
        assert!(odd < 1e-20);
    }

    #[test]
    fn extending_the_sum_changes_nothing() {
        let t = trunc(300);
        let delta = 2.0 * PI.sqrt();
        let full = approx_gkp_state(1.0, 3.0, delta, t, None).unwrap();
        let wide = approx_gkp_state(1.0, 3.0, delta, t, Some(40)).unwrap();
        assert!(1.0 - fidelity(&full, &wide).unwrap() < 1e-8);
    }

    #[test]
    fn tooth_limit_is_validated() {
        assert!(approx_gkp_state(1.0, 3.0, 1.0, trunc(50), Some(3)).is_err());
        assert!(approx_gkp_state(1.0, -3.0, 1.0, trunc(50), None).is_err());
    }

    #[test]
    fn normalization_matches_truncated_norm() {
        let t = trunc(300);
        let delta = 2.0 * PI.sqrt();
        let th = teeth(delta, 3.0, None);
        let pos: Vec<f64> = th.iter().map(|p| p.0).collect();
        let comps = tooth_states(1.0, &pos, t.dim());
        let mut v = DVector::<C64>::zeros(t.dim());
        for (c, &(_, w)) in comps.iter().zip(&th) {
            v += c.as_ref().unwrap() * C64::from(w);
        }
        assert_abs_diff_eq!(v.norm_squared() / gram_norm(1.0, &th), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn self_fit_recovers_parameters() {
        let t = trunc(300);
        let delta = 2.0 * PI.sqrt();
        let g = approx_gkp_state(1.0, 4.0, delta, t, None).unwrap();
        let fit = fit_gkp(&g, delta, None).unwrap();
        assert_abs_diff_eq!(fit.r_opt, 1.0, epsilon = 1e-2);
        assert_abs_diff_eq!(fit.sigma_env_opt, 4.0, epsilon = 1e-2);
        assert!(fit.fidelity >= 1.0 - 1e-6);
    }
}
