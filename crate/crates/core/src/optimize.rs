//! Bounded one- and two-parameter maximization used by the fitting routines.

use argmin::{
    core::{CostFunction, Error as ArgminError, Executor},
    solver::{goldensectionsearch::GoldenSectionSearch, neldermead::NelderMead},
};

use crate::error::{invalid, Result};

struct Negated<F>(F);

impl<F: Fn(f64) -> f64> CostFunction for Negated<F> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> std::result::Result<f64, ArgminError> {
        Ok(-(self.0)(*x))
    }
}

struct NegatedBox<F> {
    f: F,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64> CostFunction for NegatedBox<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, ArgminError> {
        let inside = clamp(x, &self.lo, &self.hi);
        // quadratic penalty keeps the objective from going flat outside the box
        let excess: f64 = x.iter().zip(&inside).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(-(self.f)(&inside) + excess)
    }
}

fn clamp(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter().zip(lo).zip(hi).map(|((v, l), h)| v.clamp(*l, *h)).collect()
}

fn argmin_failed(e: ArgminError) -> crate::Error {
    invalid(format!("optimizer failed: {e}"))
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`,
/// started from `init`. Returns `(x, f(x))`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, init: f64, tol: f64) -> Result<(f64, f64)> {
    if !(lo < hi) {
        return Ok((lo, f(lo)));
    }
    let rel = tol / (lo.abs() + hi.abs()).max(tol);
    let solver = GoldenSectionSearch::new(lo, hi)
        .and_then(|s| s.with_tolerance(rel))
        .map_err(argmin_failed)?;
    let res = Executor::new(Negated(&f), solver)
        .configure(|s| s.param(init.clamp(lo, hi)).max_iters(200))
        .run()
        .map_err(argmin_failed)?;
    let state = res.state();
    let x = state.best_param.unwrap_or(init);
    Ok((x, -state.best_cost))
}

/// Nelder–Mead maximization of `f` inside the box `[lo, hi]`. Points outside
/// the box are evaluated at their projection onto it, with a penalty.
pub fn nelder_mead_max<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let dim = start.len();
    if step.len() != dim || lo.len() != dim || hi.len() != dim {
        return Err(invalid("Nelder-Mead: start, step and bounds must have equal length"));
    }
    let mut simplex = vec![start.to_vec()];
    for i in 0..dim {
        let mut v = start.to_vec();
        // step inward when the start sits on the upper bound
        v[i] = if v[i] + step[i] <= hi[i] { v[i] + step[i] } else { v[i] - step[i] };
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(tol).map_err(argmin_failed)?;
    let problem = NegatedBox { f, lo: lo.to_vec(), hi: hi.to_vec() };
    let res = Executor::new(problem, solver)
        .configure(|s| s.max_iters(500))
        .run()
        .map_err(argmin_failed)?;
    let state = res.state();
    let best = state.best_param.clone().unwrap_or_else(|| start.to_vec());
    Ok((clamp(&best, lo, hi), -state.best_cost))
}
