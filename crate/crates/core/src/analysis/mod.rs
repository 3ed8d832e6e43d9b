//! Characterization of prepared states.

mod gkp;
mod hamiltonian;
mod squeezing;
mod wigner;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

pub use gkp::{approx_gkp_state, fit_gkp, GkpFitReport};
pub use hamiltonian::{ground_state, parity_hamiltonian};
pub use squeezing::{fit_squeezed, moments, quadrature_variance, squeezing_db, Moments, SqueezingReport};
pub use wigner::{wigner, WignerGrid, WignerGridSpec};

use crate::{
    error::Result,
    state::{check_dims, StateRef},
};

/// `|⟨a|b⟩|²` for pure states, `⟨ψ|ρ|ψ⟩` for a pure and a mixed state, and
/// the Uhlmann fidelity `(Tr √(√ρ σ √ρ))²` for two mixed states. Inputs are
/// normalized first.
pub fn fidelity<'a, 'b>(a: impl Into<StateRef<'a>>, b: impl Into<StateRef<'b>>) -> Result<f64> {
    let (a, b) = (a.into(), b.into());
    check_dims(a.dim(), b.dim())?;
    Ok(match (a, b) {
        (StateRef::Pure(x), StateRef::Pure(y)) => {
            x.amplitudes().dotc(y.amplitudes()).norm_sqr() / (x.norm_squared() * y.norm_squared())
        }
        (StateRef::Pure(x), StateRef::Mixed(r)) | (StateRef::Mixed(r), StateRef::Pure(x)) => {
            let v = x.amplitudes();
            v.dotc(&(r.matrix() * v)).re / (x.norm_squared() * r.trace())
        }
        (StateRef::Mixed(r), StateRef::Mixed(s)) => {
            let sr = psd_sqrt(r.matrix());
            let inner = &sr * s.matrix() * &sr;
            let ev = SymmetricEigen::new(inner).eigenvalues;
            let root: f64 = ev.iter().map(|&l| l.max(0.0).sqrt()).sum();
            root * root / (r.trace() * s.trace())
        }
    })
}

fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}
