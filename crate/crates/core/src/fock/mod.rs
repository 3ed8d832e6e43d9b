//! States and operators on the truncated Fock basis `|0⟩ … |n_cut⟩`.

mod displacement;
mod squeeze;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use displacement::{
    combine_displacements, displacement_matrix, displacement_matrix_exact, displacement_matrix_expm,
    project_displaced_parity,
};
pub(crate) use displacement::{displacement_entries, for_each_diagonal, mask_parity};
pub use squeeze::{squeeze_matrix, squeezed_vacuum, SqueezeParameter};
pub(crate) use squeeze::squeezed_vacuum_exact;

use crate::{
    error::{invalid, Error, Result},
    math::{ln_factorials, tail_start},
    operator::{OperatorKind, OperatorMatrix},
    state::PureState,
};

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

/// Basis truncation: levels `0..=n_cut` are retained.
///
/// `tail_tolerance` bounds the population that constructors allow in the top
/// 10% of levels (plus whatever falls past `n_cut`) before reporting
/// [`Error::TailOverflow`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    n_cut: usize,
    tail_tolerance: f64,
}

impl TruncationConfig {
    pub fn new(n_cut: usize) -> Result<Self> {
        Self::with_tail_tolerance(n_cut, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn with_tail_tolerance(n_cut: usize, tail_tolerance: f64) -> Result<Self> {
        if n_cut < 2 {
            return Err(invalid(format!("n_cut must be at least 2, got {n_cut}")));
        }
        if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
            return Err(invalid(format!("tail_tolerance must lie in (0, 1), got {tail_tolerance}")));
        }
        Ok(Self { n_cut, tail_tolerance })
    }

    pub fn n_cut(&self) -> usize {
        self.n_cut
    }

    /// Hilbert-space dimension, `n_cut + 1`.
    pub fn dim(&self) -> usize {
        self.n_cut + 1
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    pub(crate) fn check_tail(&self, tail_mass: f64) -> Result<()> {
        if tail_mass > self.tail_tolerance {
            Err(Error::TailOverflow { tail_mass, tolerance: self.tail_tolerance })
        } else {
            Ok(())
        }
    }
}

/// Outcome of a parity measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn contains(self, n: usize) -> bool {
        match self {
            Parity::Even => n % 2 == 0,
            Parity::Odd => n % 2 == 1,
        }
    }
}

/// Truncated annihilation and creation operators `(a, a†)`.
pub fn ladder_matrices(trunc: TruncationConfig) -> (OperatorMatrix, OperatorMatrix) {
    let a = annihilation(trunc.dim());
    let ad = a.adjoint();
    (OperatorMatrix::new(a, OperatorKind::General), OperatorMatrix::new(ad, OperatorKind::General))
}

pub(crate) fn annihilation(dim: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Exact coherent-state amplitudes `e^{-|α|²/2} αⁿ/√(n!)` for `n < dim`,
/// without renormalization.
pub(crate) fn coherent_exact(alpha: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    if alpha.norm_sqr() == 0.0 {
        v[0] = C64::new(1.0, 0.0);
        return v;
    }
    let lf = ln_factorials(dim - 1);
    let (ln_abs, phase) = (alpha.norm().ln(), alpha.arg());
    let x = alpha.norm_sqr();
    for (n, c) in v.iter_mut().enumerate() {
        let ln_mag = -0.5 * x + n as f64 * ln_abs - 0.5 * lf[n];
        *c = C64::from_polar(ln_mag.exp(), n as f64 * phase);
    }
    v
}

/// Population lost past the cut plus population in the top 10% of levels, for
/// a vector whose untruncated norm is one.
pub(crate) fn truncation_tail(v: &DVector<C64>) -> f64 {
    let kept = v.norm_squared();
    let top = v.rows_range(tail_start(v.len())..).norm_squared();
    (1.0 - kept).max(0.0) + top
}

/// Coherent state `|α⟩`, renormalized on the truncated space.
pub fn coherent_state(alpha: C64, trunc: TruncationConfig) -> Result<PureState> {
    let v = coherent_exact(alpha, trunc.dim());
    trunc.check_tail(truncation_tail(&v))?;
    PureState::from_raw(v).normalize()
}

/// Even/odd parity projectors `(P₊, P₋)`.
pub fn parity_projectors(trunc: TruncationConfig) -> (OperatorMatrix, OperatorMatrix) {
    let dim = trunc.dim();
    let diag = |p: Parity| {
        DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| {
            if p.contains(n) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    };
    (
        OperatorMatrix::new(diag(Parity::Even), OperatorKind::Projector),
        OperatorMatrix::new(diag(Parity::Odd), OperatorKind::Projector),
    )
}

/// Displaced parity projector `P±(α) = D(α) P± D(-α)`, built from the unitary
/// [`displacement_matrix`] so that it is an exact projector on the truncated
/// space.
pub fn displaced_parity(parity: Parity, alpha: C64, trunc: TruncationConfig) -> OperatorMatrix {
    let dim = trunc.dim();
    let d = displacement_matrix(alpha, trunc).into_entries();
    // D P± D† = Σ_{n ∈ parity} D[:, n] D[:, n]†
    let mut kept = DMatrix::zeros(dim, dim);
    for n in (0..dim).filter(|&n| parity.contains(n)) {
        kept.set_column(n, &d.column(n));
    }
    OperatorMatrix::new(&kept * kept.adjoint(), OperatorKind::Projector)
}

/// Dispersive-readout measurement operators `M₊(τ) = diag(cos nτ)`,
/// `M₋(τ) = diag(sin nτ)`.
///
/// At `τ = π/2` these are *not* the parity projectors: `cos(nπ/2)` alternates
/// in sign on even levels. Parity protocols use [`parity_projectors`].
pub fn dispersive_projectors(tau: f64, trunc: TruncationConfig) -> (OperatorMatrix, OperatorMatrix) {
    let dim = trunc.dim();
    let plus = DVector::from_fn(dim, |n, _| C64::new((n as f64 * tau).cos(), 0.0));
    let minus = DVector::from_fn(dim, |n, _| C64::new((n as f64 * tau).sin(), 0.0));
    (
        OperatorMatrix::new(DMatrix::from_diagonal(&plus), OperatorKind::Hermitian),
        OperatorMatrix::new(DMatrix::from_diagonal(&minus), OperatorKind::Hermitian),
    )
}

/// Rotated quadrature `x^(θ) = ½(a e^{-iθ} + a† e^{iθ})`.
pub fn quadrature_matrix(theta: f64, trunc: TruncationConfig) -> OperatorMatrix {
    let a = annihilation(trunc.dim());
    let rot = C64::from_polar(1.0, -theta);
    let x = (&a * rot + a.adjoint() * rot.conj()) * C64::from(0.5);
    OperatorMatrix::new(x, OperatorKind::Hermitian)
}
