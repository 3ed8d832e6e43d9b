//! Squeezed vacuum and the squeeze operator `S(ξ) = exp(½(ξ* a² − ξ a†²))`.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, TAU};

use super::{annihilation, truncation_tail, TruncationConfig};
use crate::{
    error::{invalid, Result},
    math::ln_factorials,
    operator::{OperatorKind, OperatorMatrix},
    state::PureState,
};

/// `ξ = r e^{iθ}`; `θ = 0` squeezes the `x` quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParameter {
    pub r: f64,
    pub phase: f64,
}

impl SqueezeParameter {
    pub fn new(r: f64, phase: f64) -> Result<Self> {
        if !(r.is_finite() && phase.is_finite()) || r < 0.0 {
            return Err(invalid(format!("squeeze parameter needs finite r >= 0, got r = {r}")));
        }
        Ok(Self { r, phase: phase.rem_euclid(TAU) })
    }

    /// Real squeezing along `x`.
    pub fn along_x(r: f64) -> Result<Self> {
        Self::new(r, 0.0)
    }

    pub fn xi(&self) -> C64 {
        C64::from_polar(self.r, self.phase)
    }
}

fn ln_cosh(r: f64) -> f64 {
    let r = r.abs();
    r + (-2.0 * r).exp().ln_1p() - LN_2
}

/// Exact amplitudes of `|ξ⟩` on the first `dim` levels, not renormalized:
/// `c_{2n} = (cosh r)^{-1/2} (−1)ⁿ √((2n)!)/(2ⁿ n!) e^{inθ} tanhⁿ r`.
pub(crate) fn squeezed_vacuum_exact(xi: SqueezeParameter, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    v[0] = C64::new(1.0, 0.0);
    if xi.r == 0.0 {
        return v;
    }
    let lf = ln_factorials(dim);
    let ln_tanh = xi.r.tanh().ln();
    let ln_norm = -0.5 * ln_cosh(xi.r);
    for n in 0..=(dim - 1) / 2 {
        let nf = n as f64;
        let ln_mag = ln_norm + 0.5 * lf[2 * n] - nf * LN_2 - lf[n] + nf * ln_tanh;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        v[2 * n] = C64::from_polar(sign * ln_mag.exp(), nf * xi.phase);
    }
    v
}

/// Squeezed vacuum `|ξ⟩`, renormalized on the truncated space. Odd amplitudes
/// are exactly zero.
pub fn squeezed_vacuum(xi: SqueezeParameter, trunc: TruncationConfig) -> Result<PureState> {
    let v = squeezed_vacuum_exact(xi, trunc.dim());
    trunc.check_tail(truncation_tail(&v))?;
    PureState::from_raw(v).normalize()
}

/// Dense `S(ξ)` from the matrix exponential of the truncated generator.
///
/// Fails with `TailOverflow` when `|ξ⟩` itself does not fit the truncation.
pub fn squeeze_matrix(xi: SqueezeParameter, trunc: TruncationConfig) -> Result<OperatorMatrix> {
    trunc.check_tail(truncation_tail(&squeezed_vacuum_exact(xi, trunc.dim())))?;
    let a = annihilation(trunc.dim());
    let a2 = &a * &a;
    let z = xi.xi();
    let gen = (&a2 * z.conj() - a2.adjoint() * z) * C64::from(0.5);
    Ok(OperatorMatrix::new(gen.exp(), OperatorKind::Unitary))
}
