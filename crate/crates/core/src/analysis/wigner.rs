//! Wigner function `W(α) = (2/π) Tr[ρ D(α) Π D(α)†]` with `Π = diag((−1)ⁿ)`.
//!
//! Since `D(α) Π D(α)† = D(2α) Π`, each grid point needs only the exact
//! matrix elements of one displacement, streamed diagonal by diagonal. Using
//! the exact elements rather than a displaced copy of the state keeps the
//! result free of truncation artifacts at large `|α|`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{
    error::{invalid, Result},
    fock::for_each_diagonal,
    state::StateRef,
};

/// Square phase-space window sampled on a `resolution × resolution` grid,
/// endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerGridSpec {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub resolution: usize,
}

impl Default for WignerGridSpec {
    fn default() -> Self {
        Self { x_range: (-6.0, 6.0), p_range: (-6.0, 6.0), resolution: 241 }
    }
}

impl WignerGridSpec {
    pub fn new(x_range: (f64, f64), p_range: (f64, f64), resolution: usize) -> Result<Self> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(x_range) || !ok(p_range) {
            return Err(invalid("Wigner grid ranges must be finite with min < max"));
        }
        if resolution < 2 {
            return Err(invalid("Wigner grid resolution must be at least 2"));
        }
        Ok(Self { x_range, p_range, resolution })
    }

    /// Window `[−half, half]²`.
    pub fn symmetric(half: f64, resolution: usize) -> Result<Self> {
        Self::new((-half, half), (-half, half), resolution)
    }

    fn axis((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x_range, self.resolution)
    }

    pub fn ps(&self) -> Vec<f64> {
        Self::axis(self.p_range, self.resolution)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub spec: WignerGridSpec,
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// `values[(i, j)] = W(xs[i] + i·ps[j])`.
    pub values: DMatrix<f64>,
    /// Largest imaginary part discarded from the complex evaluation.
    pub max_imag_residue: f64,
}

impl WignerGrid {
    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn dp(&self) -> f64 {
        self.ps[1] - self.ps[0]
    }

    /// Trapezoidal `∫∫ W dx dp`.
    pub fn integral(&self) -> f64 {
        let n = self.spec.resolution;
        let w = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += w(i) * w(j) * self.values[(i, j)];
            }
        }
        acc * self.dx() * self.dp()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.amax()
    }

    /// Grid point `(x, p, W)` of the largest value.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
        for j in 0..self.ps.len() {
            for i in 0..self.xs.len() {
                if self.values[(i, j)] > best {
                    best = self.values[(i, j)];
                    at = (i, j);
                }
            }
        }
        (self.xs[at.0], self.ps[at.1], best)
    }
}

/// `Tr[ρ D(2α) Π]` (or `⟨ψ|D(2α) Π|ψ⟩`), unnormalized.
fn parity_expectation(state: StateRef<'_>, alpha: C64) -> C64 {
    let sign = |n: usize| if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut acc = C64::new(0.0, 0.0);
    match state {
        StateRef::Pure(psi) => {
            let c = psi.amplitudes();
            for_each_diagonal(2.0 * alpha, c.len(), |k, below, above, f| {
                let (mut lo, mut hi) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for (n, &fv) in f.iter().enumerate() {
                    lo += c[n + k].conj() * c[n] * (sign(n) * fv);
                    if k > 0 {
                        hi += c[n].conj() * c[n + k] * (sign(n + k) * fv);
                    }
                }
                acc += below * lo + above * hi;
            });
        }
        StateRef::Mixed(r) => {
            let rho = r.matrix();
            for_each_diagonal(2.0 * alpha, r.dim(), |k, below, above, f| {
                let (mut lo, mut hi) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for (n, &fv) in f.iter().enumerate() {
                    lo += rho[(n, n + k)] * (sign(n) * fv);
                    if k > 0 {
                        hi += rho[(n + k, n)] * (sign(n + k) * fv);
                    }
                }
                acc += below * lo + above * hi;
            });
        }
    }
    acc
}

fn norm(state: StateRef<'_>) -> f64 {
    match state {
        StateRef::Pure(psi) => psi.norm_squared(),
        StateRef::Mixed(r) => r.trace(),
    }
}

/// Evaluates `W` on the grid; rows of constant `p` are computed in parallel.
pub fn wigner<'a>(state: impl Into<StateRef<'a>>, spec: &WignerGridSpec) -> WignerGrid {
    let state = state.into();
    let scale = 2.0 / PI / norm(state);
    let xs = spec.xs();
    let ps = spec.ps();
    let columns: Vec<Vec<C64>> = ps
        .par_iter()
        .map(|&p| xs.iter().map(|&x| parity_expectation(state, C64::new(x, p)) * scale).collect())
        .collect();
    let n = spec.resolution;
    let values = DMatrix::from_fn(n, n, |i, j| columns[j][i].re);
    let max_imag_residue = columns.iter().flatten().map(|w| w.im.abs()).fold(0.0, f64::max);
    WignerGrid { spec: *spec, xs, ps, values, max_imag_residue }
}
