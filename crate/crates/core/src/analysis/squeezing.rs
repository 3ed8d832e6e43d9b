//! Quadrature moments, squeezing in dB and best-fit squeezed vacua.

use std::f64::consts::PI;

use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::{
    fock::{squeezed_vacuum_exact, SqueezeParameter},
    optimize::golden_section_max,
    state::StateRef,
};

/// Vacuum quadrature variance.
pub const VAR0: f64 = 0.25;

const FIT_R_MAX: f64 = 4.0;
const FIT_R_STEP: f64 = 0.05;
const FIT_TOL: f64 = 1e-4;

/// `⟨a⟩, ⟨a²⟩, ⟨a†a⟩, ⟨aa†⟩` with the truncated ladder operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub a: C64,
    pub a2: C64,
    pub ada: f64,
    pub aad: f64,
}

impl Moments {
    /// Covariance matrix of `(x, p)` and the means `(⟨x⟩, ⟨p⟩)`.
    pub fn covariance(&self) -> (Matrix2<f64>, [f64; 2]) {
        let (x, p) = (self.a.re, self.a.im);
        let sym = self.aad + self.ada;
        let vxx = 0.25 * (2.0 * self.a2.re + sym) - x * x;
        let vpp = 0.25 * (-2.0 * self.a2.re + sym) - p * p;
        let cxp = 0.5 * self.a2.im - x * p;
        (Matrix2::new(vxx, cxp, cxp, vpp), [x, p])
    }
}

pub fn moments<'a>(state: impl Into<StateRef<'a>>) -> Moments {
    match state.into() {
        StateRef::Pure(psi) => {
            let c = psi.amplitudes();
            let n2 = psi.norm_squared();
            let dim = c.len();
            let (mut a, mut a2, mut ada, mut aad) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0, 0.0);
            for n in 0..dim {
                let pn = c[n].norm_sqr();
                ada += n as f64 * pn;
                if n + 1 < dim {
                    aad += (n + 1) as f64 * pn;
                }
                if n >= 1 {
                    a += c[n - 1].conj() * c[n] * (n as f64).sqrt();
                }
                if n >= 2 {
                    a2 += c[n - 2].conj() * c[n] * ((n * (n - 1)) as f64).sqrt();
                }
            }
            Moments { a: a / n2, a2: a2 / n2, ada: ada / n2, aad: aad / n2 }
        }
        StateRef::Mixed(r) => {
            let rho = r.matrix();
            let tr = r.trace();
            let dim = r.dim();
            let (mut a, mut a2, mut ada, mut aad) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0, 0.0);
            for n in 0..dim {
                let pn = rho[(n, n)].re;
                ada += n as f64 * pn;
                if n + 1 < dim {
                    aad += (n + 1) as f64 * pn;
                }
                if n >= 1 {
                    a += rho[(n, n - 1)] * (n as f64).sqrt();
                }
                if n >= 2 {
                    a2 += rho[(n, n - 2)] * ((n * (n - 1)) as f64).sqrt();
                }
            }
            Moments { a: a / tr, a2: a2 / tr, ada: ada / tr, aad: aad / tr }
        }
    }
}

/// Variance of `x^(θ) = x cos θ + p sin θ`.
pub fn quadrature_variance<'a>(state: impl Into<StateRef<'a>>, theta: f64) -> f64 {
    let (cov, _) = moments(state).covariance();
    let (c, s) = (theta.cos(), theta.sin());
    c * c * cov[(0, 0)] + 2.0 * c * s * cov[(0, 1)] + s * s * cov[(1, 1)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingReport {
    pub s_db: f64,
    /// Quadrature angle of minimal variance, in `[0, π)`.
    pub theta_min: f64,
    pub var_min: f64,
    pub var_max: f64,
    pub best_fit_xi: SqueezeParameter,
    pub best_fit_fidelity: f64,
}

/// Principal variances of the `(x, p)` covariance matrix and the orientation
/// of the minor axis.
fn principal_axes(cov: Matrix2<f64>) -> (f64, f64, f64) {
    let eig = SymmetricEigen::new(cov);
    let (imin, imax) = if eig.eigenvalues[0] <= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let v = eig.eigenvectors.column(imin);
    let theta = v[1].atan2(v[0]).rem_euclid(PI);
    (eig.eigenvalues[imin], eig.eigenvalues[imax], theta)
}

/// `S_dB = −10 log10(Var_min / Var₀)`, minimized over all quadrature angles.
pub fn squeezing_db<'a>(state: impl Into<StateRef<'a>>) -> SqueezingReport {
    let state = state.into();
    let (cov, _) = moments(state).covariance();
    let (var_min, var_max, theta_min) = principal_axes(cov);
    let (best_fit_xi, best_fit_fidelity) = fit_at_phase(state, 2.0 * theta_min);
    SqueezingReport {
        s_db: 10.0 * (VAR0 / var_min).log10(),
        theta_min,
        var_min,
        var_max,
        best_fit_xi,
        best_fit_fidelity,
    }
}

/// Best-fit squeezed vacuum `|ξ = r e^{iθ_ξ}⟩`. The phase is `theta_fixed` if
/// given, otherwise twice the minimal-variance angle.
pub fn fit_squeezed<'a>(state: impl Into<StateRef<'a>>, theta_fixed: Option<f64>) -> (SqueezeParameter, f64) {
    let state = state.into();
    let phase = theta_fixed.unwrap_or_else(|| 2.0 * principal_axes(moments(state).covariance().0).2);
    fit_at_phase(state, phase)
}

/// Fidelity against the exact (untruncated, then restricted) squeezed vacuum.
fn squeezed_fidelity(state: StateRef<'_>, xi: SqueezeParameter) -> f64 {
    let v = squeezed_vacuum_exact(xi, state.dim());
    match state {
        StateRef::Pure(psi) => v.dotc(psi.amplitudes()).norm_sqr() / psi.norm_squared(),
        StateRef::Mixed(r) => v.dotc(&(r.matrix() * &v)).re / r.trace(),
    }
}

fn fit_at_phase(state: StateRef<'_>, phase: f64) -> (SqueezeParameter, f64) {
    let xi = |r: f64| SqueezeParameter { r, phase: phase.rem_euclid(2.0 * PI) };
    let f = |r: f64| squeezed_fidelity(state, xi(r));
    let steps = (FIT_R_MAX / FIT_R_STEP).round() as usize;
    let (mut best_r, mut best_f) = (0.0, f(0.0));
    for k in 1..=steps {
        let r = k as f64 * FIT_R_STEP;
        let fr = f(r);
        if fr > best_f {
            (best_r, best_f) = (r, fr);
        }
    }
    let (lo, hi) = ((best_r - FIT_R_STEP).max(0.0), (best_r + FIT_R_STEP).min(FIT_R_MAX));
    if let Ok((r, fr)) = golden_section_max(f, lo, hi, best_r, FIT_TOL) {
        if fr > best_f {
            (best_r, best_f) = (r, fr);
        }
    }
    (xi(best_r), best_f)
}
