//! Parity-sum Hamiltonian whose ground state approximates the squeezing
//! protocol output.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::{
    error::{invalid, Error, Result},
    fock::{displaced_parity, Parity, TruncationConfig},
    operator::{OperatorKind, OperatorMatrix},
    state::{hermitian_defect, PureState},
};

/// `H = −Σ_n P₊(i e^{iθ} t_n)`.
pub fn parity_hamiltonian(points: &[f64], theta: f64, trunc: TruncationConfig) -> Result<OperatorMatrix> {
    if points.is_empty() {
        return Err(invalid("parity Hamiltonian needs at least one point"));
    }
    let dim = trunc.dim();
    let dir = C64::new(0.0, 1.0) * C64::from_polar(1.0, theta);
    let mut h = DMatrix::zeros(dim, dim);
    for &t in points {
        h -= displaced_parity(Parity::Even, dir * t, trunc).into_entries();
    }
    Ok(OperatorMatrix::new(h, OperatorKind::Hermitian))
}

/// Lowest eigenpair from a dense Hermitian eigensolve.
pub fn ground_state(h: &OperatorMatrix) -> Result<(f64, PureState)> {
    let m = h.entries();
    let defect = hermitian_defect(m);
    let scale = m.camax().max(1.0);
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian { defect });
    }
    let eig = SymmetricEigen::new(m.clone());
    let k = eig.eigenvalues.imin();
    let v = eig.eigenvectors.column(k).into_owned();
    Ok((eig.eigenvalues[k], PureState::new(v)?.normalize()?))
}
