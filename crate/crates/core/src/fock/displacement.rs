//! Displacement operator `D(α) = exp(α a† − α* a)` on the truncated basis.
//!
//! Matrix elements are evaluated in closed form,
//!
//! ```text
//! ⟨n+k|D(α)|n⟩ = √(n!/(n+k)!) αᵏ e^{-|α|²/2} L_n^{(k)}(|α|²)
//! ⟨n|D(α)|n+k⟩ = √(n!/(n+k)!) (−α*)ᵏ e^{-|α|²/2} L_n^{(k)}(|α|²)
//! ```
//!
//! using the three-term associated-Laguerre recurrence on the normalized
//! quantity `f_n = √(n!/(n+k)!) |α|ᵏ e^{-|α|²/2} L_n^{(k)}(|α|²)`, with a running
//! logarithmic scale so neither the prefactor nor the polynomial overflows.
//! These are the exact entries of the infinite-dimensional operator restricted
//! to the retained levels; the truncated matrix is unitary only on states that
//! stay well inside the basis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{annihilation, Parity, TruncationConfig};
use crate::{
    math::ln_factorials,
    operator::{OperatorKind, OperatorMatrix},
    state::PureState,
};

const RESCALE: f64 = 1e100;

/// Dense `D(α)`: the unitary polar factor of the exact matrix elements.
///
/// Columns whose displaced support stays inside the basis coincide with the
/// exact elements; columns that would leak past `n_cut` are completed so that
/// the matrix is unitary on the truncated space, which keeps `D(α)D(−α) = I`
/// and the idempotence of displaced projectors exact.
pub fn displacement_matrix(alpha: C64, trunc: TruncationConfig) -> OperatorMatrix {
    // The polar factor is ill-conditioned in the leaking directions; computing
    // it from one representative of {α, −α} keeps D(−α) = D(α)† exact.
    let canonical = alpha.re > 0.0 || (alpha.re == 0.0 && alpha.im >= 0.0);
    let u = if canonical {
        unitary_factor(displacement_entries(alpha, trunc.dim()))
    } else {
        unitary_factor(displacement_entries(-alpha, trunc.dim())).adjoint()
    };
    OperatorMatrix::new(u, OperatorKind::Unitary)
}

/// Exact matrix elements `⟨m|D(α)|n⟩` restricted to the retained levels.
/// Not unitary near the top of the basis.
pub fn displacement_matrix_exact(alpha: C64, trunc: TruncationConfig) -> OperatorMatrix {
    OperatorMatrix::new(displacement_entries(alpha, trunc.dim()), OperatorKind::General)
}

/// `U` in `M = U·H` with `H = (M†M)^{1/2}`.
fn unitary_factor(m: DMatrix<C64>) -> DMatrix<C64> {
    let svd = m.svd(true, true);
    svd.u.expect("left singular vectors requested") * svd.v_t.expect("right singular vectors requested")
}

pub(crate) fn displacement_entries(alpha: C64, dim: usize) -> DMatrix<C64> {
    let mut d = DMatrix::zeros(dim, dim);
    for_each_diagonal(alpha, dim, |k, below, above, f| {
        for (n, &fv) in f.iter().enumerate() {
            d[(n + k, n)] = below * fv;
            if k > 0 {
                d[(n, n + k)] = above * fv;
            }
        }
    });
    d
}

/// Visits the `k`-th sub- and super-diagonal of `D(α)` for `k = 0..dim`:
/// `D[n+k, n] = below·f[n]` and `D[n, n+k] = above·f[n]`.
pub(crate) fn for_each_diagonal(alpha: C64, dim: usize, mut visit: impl FnMut(usize, C64, C64, &[f64])) {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        visit(0, C64::new(1.0, 0.0), C64::new(1.0, 0.0), &vec![1.0; dim]);
        return;
    }
    let ln_abs = alpha.norm().ln();
    let phase = alpha.arg();
    let lf = ln_factorials(dim);
    let mut f = vec![0.0; dim];
    for k in 0..dim {
        let len = dim - k;
        laguerre_column(x, k, -0.5 * x + k as f64 * ln_abs - 0.5 * lf[k], &mut f[..len]);
        let below = C64::from_polar(1.0, k as f64 * phase);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let above = C64::from_polar(sign, -(k as f64) * phase);
        visit(k, below, above, &f[..len]);
    }
}

/// Fills `out[n] = f_n` for the Laguerre index `k` at argument `x`, given
/// `ln f_0 = −x/2 + k ln|α| − ½ ln k!`.
fn laguerre_column(x: f64, k: usize, ln_f0: f64, out: &mut [f64]) {
    let kf = k as f64;
    let mut log_scale = ln_f0;
    let mut scale = log_scale.exp();
    out[0] = scale;
    if out.len() == 1 {
        return;
    }
    // L_1^{(k)}(x) = 1 + k − x
    let mut prev = 1.0;
    let mut cur = (1.0 + kf - x) / (kf + 1.0).sqrt();
    out[1] = cur * scale;
    for n in 1..out.len() - 1 {
        let nf = n as f64;
        let denom = ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
        let next = (2.0 * nf + 1.0 + kf - x) / denom * cur - (nf * (nf + kf)).sqrt() / denom * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
            scale = log_scale.exp();
        }
        out[n + 1] = cur * scale;
    }
}

/// Reference construction by dense matrix exponential of the truncated
/// generator. Exactly unitary on the truncated space but distorted near the
/// top levels; kept as an independent check on [`displacement_matrix`].
pub fn displacement_matrix_expm(alpha: C64, trunc: TruncationConfig) -> OperatorMatrix {
    let a = annihilation(trunc.dim());
    let gen = a.adjoint() * alpha - &a * alpha.conj();
    OperatorMatrix::new(gen.exp(), OperatorKind::Unitary)
}

/// `D(α)D(β) = e^{i·phase} D(α+β)`; returns `(phase, α+β)` with
/// `phase = Im(αβ*)`.
pub fn combine_displacements(alpha: C64, beta: C64) -> (f64, C64) {
    ((alpha * beta.conj()).im, alpha + beta)
}

/// `P±(α)|ψ⟩ = D(α) P± D(α)†|ψ⟩` without forming the dense projector.
/// The result is left unnormalized.
pub fn project_displaced_parity(psi: &PureState, parity: Parity, alpha: C64) -> PureState {
    let d = displacement_entries(alpha, psi.dim());
    let mut shifted: DVector<C64> = d.ad_mul(psi.amplitudes());
    mask_parity(&mut shifted, parity);
    PureState::from_raw(&d * shifted)
}

pub(crate) fn mask_parity(v: &mut DVector<C64>, parity: Parity) {
    for (n, c) in v.iter_mut().enumerate() {
        if !parity.contains(n) {
            *c = C64::new(0.0, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, displaced_parity};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn trunc(n: usize) -> TruncationConfig {
        TruncationConfig::new(n).unwrap()
    }

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_displacement_is_identity() {
        let d = displacement_matrix(C64::new(0.0, 0.0), trunc(20));
        assert_eq!(d.entries(), &DMatrix::identity(21, 21));
    }

    #[test]
    fn vacuum_overlap_of_unit_displacement() {
        let d = displacement_matrix(C64::new(1.0, 0.0), trunc(30));
        assert_abs_diff_eq!(d.entries()[(0, 0)].re, (-0.5f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn inverse_displacement_on_protected_block() {
        let t = trunc(120);
        let alpha = C64::new(1.1, -0.7);
        let prod = displacement_matrix(alpha, t).compose(&displacement_matrix(-alpha, t));
        let k = prod.protected_dim();
        let block = prod.entries().view((0, 0), (k, k)) - DMatrix::<C64>::identity(k, k);
        assert!(max_abs(&block.into()) < 1e-8);
        assert!(displacement_matrix(alpha, t).defect() < 1e-12);
    }

    #[test]
    fn exact_elements_lose_norm_only_near_the_cut() {
        let t = trunc(120);
        let d = displacement_matrix_exact(C64::new(1.1, -0.7), t);
        assert_eq!(d.kind(), OperatorKind::General);
        let gram = d.entries().adjoint() * d.entries();
        assert!((gram[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!(gram[(120, 120)].re < 0.9);
        let back = displacement_matrix_exact(C64::new(-1.1, 0.7), t).into_entries();
        assert!(max_abs(&(d.entries().adjoint() - back)) < 1e-14);
    }

    #[test]
    fn unitary_completion_keeps_interior_columns() {
        let t = trunc(200);
        let alpha = C64::new(2.0, 0.0);
        let exact = displacement_entries(alpha, t.dim());
        let unitary = displacement_matrix(alpha, t);
        let k = 60;
        let diff = exact.view((0, 0), (t.dim(), k)) - unitary.entries().view((0, 0), (t.dim(), k));
        assert!(max_abs(&diff.into()) < 1e-10);
    }

    #[test]
    fn column_zero_matches_coherent_state() {
        let t = trunc(160);
        let bound = (t.n_cut() as f64).sqrt() / 4.0;
        for alpha in [C64::new(bound, 0.0), C64::new(0.0, -bound), C64::new(1.0, 2.0)] {
            let d = displacement_matrix(alpha, t);
            let coh = coherent_state(alpha, t).unwrap();
            let diff = d.entries().column(0) - coh.amplitudes();
            assert!(diff.camax() < 1e-8, "{alpha}: {}", diff.camax());
        }
    }

    #[test]
    fn laguerre_and_exponential_constructions_agree() {
        let t = trunc(200);
        for alpha in [C64::new(2.0, 0.0), C64::new(0.0, 2.0), C64::new(-1.2, 1.4), C64::new(0.3, 0.1)] {
            let exact = displacement_matrix_exact(alpha, t);
            let expm = displacement_matrix_expm(alpha, t);
            // the exponential of the truncated generator is corrupted near the
            // top levels; compare where both are faithful
            let k = 150;
            let diff = exact.entries().view((0, 0), (k, k)) - expm.entries().view((0, 0), (k, k));
            assert!(max_abs(&diff.into()) < 1e-7, "{alpha}");
        }
    }

    #[test]
    fn large_displacements_stay_finite_and_unitary_inside() {
        let d = displacement_entries(C64::new(16.0, 0.0), 1001);
        assert!(d.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        // columns that cannot leak past the cut keep unit norm
        for n in [0, 50, 100] {
            let col = d.column(n).norm_squared();
            assert_abs_diff_eq!(col, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn bch_phase_for_half_lattice_steps() {
        let delta = 2.0 * std::f64::consts::PI.sqrt();
        let (phase, total) = combine_displacements(C64::new(delta / 2.0, 0.0), C64::new(0.0, delta / 2.0));
        assert_abs_diff_eq!(phase, -std::f64::consts::PI, epsilon = 1e-12);
        assert_abs_diff_eq!((total - C64::new(delta / 2.0, delta / 2.0)).norm(), 0.0);
        let alpha = C64::new(0.4, -2.0);
        assert_eq!(combine_displacements(alpha, C64::new(0.0, 0.0)), (0.0, alpha));
    }

    #[test]
    fn matrix_free_projection_matches_dense() {
        let t = trunc(60);
        let psi = coherent_state(C64::new(0.7, 0.4), t).unwrap();
        let alpha = C64::new(-0.3, 1.2);
        let dense = displaced_parity(Parity::Even, alpha, t).apply(&psi).unwrap();
        let free = project_displaced_parity(&psi, Parity::Even, alpha);
        assert!((dense.amplitudes() - free.amplitudes()).camax() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn composition_matches_bch(ar in -1.5f64..1.5, ai in -1.5f64..1.5, br in -1.5f64..1.5, bi in -1.5f64..1.5) {
            prop_assume!(ar.hypot(ai) <= 1.5 && br.hypot(bi) <= 1.5);
            let t = trunc(160);
            let (alpha, beta) = (C64::new(ar, ai), C64::new(br, bi));
            let (phase, total) = combine_displacements(alpha, beta);
            let lhs = displacement_matrix_exact(alpha, t).compose(&displacement_matrix_exact(beta, t));
            let rhs = displacement_entries(total, t.dim()) * C64::from_polar(1.0, phase);
            let k = 50;
            let diff = lhs.entries().view((0, 0), (k, k)) - rhs.view((0, 0), (k, k));
            prop_assert!(max_abs(&diff.into()) < 1e-8);
        }

        #[test]
        fn unitary_on_low_lying_states(ar in -1.5f64..1.5, ai in -1.5f64..1.5, seed in proptest::collection::vec(-1.0f64..1.0, 2 * 160)) {
            // random state on the lowest 80% of levels
            let t = trunc(199);
            let mut v = DVector::<C64>::zeros(t.dim());
            for n in 0..160 {
                v[n] = C64::new(seed[2 * n], seed[2 * n + 1]);
            }
            prop_assume!(v.norm() > 1e-3);
            let psi = PureState::from_raw(v).normalize().unwrap();
            let out = displacement_matrix(C64::new(ar, ai), t).apply(&psi).unwrap();
            prop_assert!((out.norm_squared().sqrt() - 1.0).abs() < 1e-7);
        }
    }
}
