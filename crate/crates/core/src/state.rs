//! Pure and mixed states on the truncated Fock basis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::{
    error::{invalid, Error, Result},
    fock::TruncationConfig,
    math::tail_start,
};

const NORM_TOL: f64 = 1e-10;

/// Amplitude vector `c_n = ⟨n|ψ⟩`.
///
/// Unnormalized vectors are legal intermediates (e.g. right after a
/// projection, before the success probability has been read off); the
/// `normalized` flag records whether `Σ|c_n|² = 1` held at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
    normalized: bool,
}

impl PureState {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() < 3 {
            return Err(invalid("state needs at least 3 Fock levels"));
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("state amplitudes must be finite"));
        }
        let normalized = (amplitudes.norm_squared() - 1.0).abs() <= NORM_TOL;
        Ok(Self { amplitudes, normalized })
    }

    pub fn from_vec(amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(DVector::from_vec(amplitudes))
    }

    /// Internal constructor for vectors already known to be finite.
    pub(crate) fn from_raw(amplitudes: DVector<C64>) -> Self {
        let normalized = (amplitudes.norm_squared() - 1.0).abs() <= NORM_TOL;
        Self { amplitudes, normalized }
    }

    pub fn fock(n: usize, trunc: TruncationConfig) -> Result<Self> {
        if n > trunc.n_cut() {
            return Err(invalid(format!("Fock level {n} exceeds n_cut = {}", trunc.n_cut())));
        }
        let mut v = DVector::zeros(trunc.dim());
        v[n] = C64::new(1.0, 0.0);
        Ok(Self::from_raw(v))
    }

    pub fn vacuum(trunc: TruncationConfig) -> Self {
        let mut v = DVector::zeros(trunc.dim());
        v[0] = C64::new(1.0, 0.0);
        Self::from_raw(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Rescale to unit norm. Fails on the zero vector.
    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_squared();
        if n2 < 1e-300 {
            return Err(Error::ZeroProbability { step: None, probability: n2 });
        }
        let mut v = self.amplitudes.clone();
        v.unscale_mut(n2.sqrt());
        Ok(Self { amplitudes: v, normalized: true })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Total population on (even, odd) Fock levels.
    pub fn parity_populations(&self) -> (f64, f64) {
        parity_split(self.amplitudes.iter().map(|c| c.norm_sqr()))
    }

    /// Population in the top 10% of retained levels, relative to the norm.
    pub fn tail_mass(&self) -> f64 {
        let start = tail_start(self.dim());
        let tail: f64 = self.amplitudes.rows_range(start..).norm_squared();
        tail / self.norm_squared().max(f64::MIN_POSITIVE)
    }

    pub fn mean_photon_number(&self) -> f64 {
        let n: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, c)| k as f64 * c.norm_sqr())
            .sum();
        n / self.norm_squared()
    }

    /// `|ψ⟩⟨ψ|`, normalized.
    pub fn to_density(&self) -> MixedState {
        let v = &self.amplitudes;
        let rho = v * v.adjoint() / C64::from(self.norm_squared());
        MixedState { rho }
    }

    /// Multiply every amplitude by a global phase `e^{iφ}`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        Self {
            amplitudes: self.amplitudes.map(|c| c * C64::from_polar(1.0, phi)),
            normalized: self.normalized,
        }
    }
}

/// Density matrix `ρ_mn` on the truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    rho: DMatrix<C64>,
}

impl MixedState {
    /// Wraps a Hermitian matrix. Rounding-level anti-Hermitian residue (up to
    /// `1e-8` of the largest entry) is symmetrized away.
    pub fn new(rho: DMatrix<C64>) -> Result<Self> {
        if !rho.is_square() || rho.nrows() < 3 {
            return Err(invalid("density matrix must be square with at least 3 levels"));
        }
        if rho.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("density matrix entries must be finite"));
        }
        let defect = hermitian_defect(&rho);
        let scale = rho.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        if defect > 1e-8 * scale {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self::from_raw(rho).hermitized())
    }

    pub(crate) fn from_raw(rho: DMatrix<C64>) -> Self {
        Self { rho }
    }

    pub fn vacuum(trunc: TruncationConfig) -> Self {
        PureState::vacuum(trunc).to_density()
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|c| c.re).sum()
    }

    /// Diagonal `ρ_nn`.
    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|c| c.re).collect()
    }

    pub fn parity_populations(&self) -> (f64, f64) {
        parity_split(self.rho.diagonal().iter().map(|c| c.re))
    }

    pub fn tail_mass(&self) -> f64 {
        let start = tail_start(self.dim());
        let tail: f64 = self.populations()[start..].iter().sum();
        tail / self.trace()
    }

    pub fn normalize(&self) -> Result<Self> {
        let tr = self.trace();
        if tr < 1e-300 {
            return Err(Error::ZeroProbability { step: None, probability: tr });
        }
        Ok(Self { rho: &self.rho / C64::from(tr) })
    }

    /// `(ρ + ρ†)/2`.
    pub fn hermitized(mut self) -> Self {
        let n = self.dim();
        for j in 0..n {
            self.rho[(j, j)].im = 0.0;
            for i in (j + 1)..n {
                let avg = (self.rho[(i, j)] + self.rho[(j, i)].conj()) * 0.5;
                self.rho[(i, j)] = avg;
                self.rho[(j, i)] = avg.conj();
            }
        }
        self
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.rho)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.rho.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.populations().iter().enumerate().map(|(k, p)| k as f64 * p).sum::<f64>() / self.trace()
    }
}

/// Either representation; protocol runners return this.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(PureState),
    Mixed(MixedState),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(s) => s.dim(),
            State::Mixed(s) => s.dim(),
        }
    }

    pub fn to_density(&self) -> MixedState {
        match self {
            State::Pure(s) => s.to_density(),
            State::Mixed(s) => s.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            State::Pure(s) => Some(s),
            State::Mixed(_) => None,
        }
    }

    pub fn as_mixed(&self) -> Option<&MixedState> {
        match self {
            State::Pure(_) => None,
            State::Mixed(s) => Some(s),
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        match self {
            State::Pure(s) => {
                let n2 = s.norm_squared();
                s.populations().into_iter().map(|p| p / n2).collect()
            }
            State::Mixed(s) => {
                let tr = s.trace();
                s.populations().into_iter().map(|p| p / tr).collect()
            }
        }
    }

    pub fn parity_populations(&self) -> (f64, f64) {
        match self {
            State::Pure(s) => s.parity_populations(),
            State::Mixed(s) => s.parity_populations(),
        }
    }

    pub fn tail_mass(&self) -> f64 {
        match self {
            State::Pure(s) => s.tail_mass(),
            State::Mixed(s) => s.tail_mass(),
        }
    }

    pub fn mean_photon_number(&self) -> f64 {
        match self {
            State::Pure(s) => s.mean_photon_number(),
            State::Mixed(s) => s.mean_photon_number(),
        }
    }
}

impl From<PureState> for State {
    fn from(s: PureState) -> Self {
        State::Pure(s)
    }
}

impl From<MixedState> for State {
    fn from(s: MixedState) -> Self {
        State::Mixed(s)
    }
}

/// Borrowed view of either representation, accepted by the analysis routines.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a PureState),
    Mixed(&'a MixedState),
}

impl StateRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            StateRef::Pure(s) => s.dim(),
            StateRef::Mixed(s) => s.dim(),
        }
    }
}

impl<'a> From<&'a PureState> for StateRef<'a> {
    fn from(s: &'a PureState) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a MixedState> for StateRef<'a> {
    fn from(s: &'a MixedState) -> Self {
        StateRef::Mixed(s)
    }
}

impl<'a> From<&'a State> for StateRef<'a> {
    fn from(s: &'a State) -> Self {
        match s {
            State::Pure(p) => StateRef::Pure(p),
            State::Mixed(m) => StateRef::Mixed(m),
        }
    }
}

pub(crate) fn check_dims(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}

pub(crate) fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn parity_split(pops: impl Iterator<Item = f64>) -> (f64, f64) {
    pops.enumerate().fold((0.0, 0.0), |(e, o), (k, p)| if k % 2 == 0 { (e + p, o) } else { (e, o + p) })
}
