//! Dense operators on the truncated Fock space.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::{
    error::Result,
    math::tail_start,
    state::{check_dims, hermitian_defect, MixedState, PureState},
};

/// Algebraic property an operator is expected to satisfy.
///
/// Truncation necessarily breaks unitarity and idempotence near the top of the
/// basis, so [`OperatorMatrix::defect`] only checks the protected subspace
/// (the lowest 90% of levels).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Unitary,
    Projector,
    Hermitian,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
    kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn new(entries: DMatrix<C64>, kind: OperatorKind) -> Self {
        assert!(entries.is_square(), "operator matrix must be square");
        Self { entries, kind }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), OperatorKind::Unitary)
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> Self {
        let kind = match self.kind {
            OperatorKind::Unitary | OperatorKind::Projector | OperatorKind::Hermitian => self.kind,
            OperatorKind::General => OperatorKind::General,
        };
        Self::new(self.entries.adjoint(), kind)
    }

    /// Matrix product `self · rhs`; the result carries [`OperatorKind::General`]
    /// unless both factors are unitary.
    pub fn compose(&self, rhs: &OperatorMatrix) -> Self {
        let kind = match (self.kind, rhs.kind) {
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Self::new(&self.entries * &rhs.entries, kind)
    }

    /// `O|ψ⟩`, left unnormalized.
    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        check_dims(self.dim(), psi.dim())?;
        Ok(PureState::from_raw(&self.entries * psi.amplitudes()))
    }

    /// `O ρ O†`, left unnormalized.
    pub fn conjugate(&self, rho: &MixedState) -> Result<MixedState> {
        check_dims(self.dim(), rho.dim())?;
        let m = &self.entries * rho.matrix() * self.entries.adjoint();
        Ok(MixedState::from_raw(m))
    }

    /// `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, psi: &PureState) -> Result<C64> {
        check_dims(self.dim(), psi.dim())?;
        let v = psi.amplitudes();
        Ok(v.dotc(&(&self.entries * v)) / psi.norm_squared())
    }

    /// Number of levels in the protected subspace.
    pub fn protected_dim(&self) -> usize {
        tail_start(self.dim())
    }

    /// Largest entrywise violation of the property named by [`Self::kind`],
    /// restricted to the protected subspace. Zero for `General`.
    pub fn defect(&self) -> f64 {
        let k = self.protected_dim();
        match self.kind {
            OperatorKind::Unitary => {
                let g = self.entries.adjoint() * &self.entries;
                max_block_deviation(&g, k, |i, j| if i == j { 1.0 } else { 0.0 })
            }
            OperatorKind::Projector => {
                let sq = &self.entries * &self.entries;
                let diff = sq - &self.entries;
                max_block_deviation(&diff, k, |_, _| 0.0)
            }
            OperatorKind::Hermitian => hermitian_defect(&self.entries),
            OperatorKind::General => 0.0,
        }
    }
}

fn max_block_deviation(m: &DMatrix<C64>, k: usize, target: impl Fn(usize, usize) -> f64) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..k {
        for i in 0..k {
            worst = worst.max((m[(i, j)] - C64::from(target(i, j))).norm());
        }
    }
    worst
}
