//! Small numeric helpers shared by the state and operator constructors.

/// `ln(k!)` for `k = 0..=n`, accumulated as a running sum of logarithms.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Index of the first level in the top 10% of a `dim`-level space.
pub(crate) fn tail_start(dim: usize) -> usize {
    let top = (dim as f64 * 0.1).ceil() as usize;
    dim.saturating_sub(top.max(1))
}
