//! CSV writers and readers. Floats are written with 17 significant digits.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use parityforge_core::{analysis::WignerGrid, protocols::RunLog, MixedState, PureState, State, C64};

use crate::{error::CliError, report::SweepRow};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `index,re,im` for pure states, `index,rho_nn` for mixed ones.
pub fn write_state(path: &Path, state: &State) -> Result<(), CliError> {
    match state {
        State::Pure(psi) => write_rows(
            path,
            &["index", "re", "im"],
            psi.amplitudes().iter().enumerate().map(|(n, c)| [n.to_string(), num(c.re), num(c.im)]),
        ),
        State::Mixed(rho) => write_rows(
            path,
            &["index", "rho_nn"],
            rho.populations().into_iter().enumerate().map(|(n, p)| [n.to_string(), num(p)]),
        ),
    }
}

/// Every entry as `row,col,re,im`.
pub fn write_density_matrix(path: &Path, rho: &MixedState) -> Result<(), CliError> {
    let m = rho.matrix();
    let dim = m.nrows();
    write_rows(
        path,
        &["row", "col", "re", "im"],
        (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c))).map(|(r, c)| {
            let z = m[(r, c)];
            [r.to_string(), c.to_string(), num(z.re), num(z.im)]
        }),
    )
}

pub fn write_log(path: &Path, log: &RunLog) -> Result<(), CliError> {
    let mut cumulative = 1.0;
    write_rows(
        path,
        &["step", "probability", "cumulative_probability"],
        log.per_step_probabilities.iter().enumerate().map(|(k, &p)| {
            cumulative *= p;
            [(k + 1).to_string(), num(p), num(cumulative)]
        }),
    )
}

/// `x,p,w`, with `x` varying slowest.
pub fn write_wigner(path: &Path, grid: &WignerGrid) -> Result<(), CliError> {
    write_rows(
        path,
        &["x", "p", "w"],
        grid.xs.iter().enumerate().flat_map(|(i, &x)| {
            grid.ps.iter().enumerate().map(move |(j, &p)| [num(x), num(p), num(grid.values[(i, j)])])
        }),
    )
}

/// Axis columns first, then the results and an `error` column.
pub fn write_sweep(path: &Path, axes: &[String], rows: &[SweepRow]) -> Result<(), CliError> {
    let mut header: Vec<&str> = axes.iter().map(String::as_str).collect();
    header.extend(["s_db", "p_suc", "tail_mass", "fidelity", "energy", "error"]);
    write_rows(
        path,
        &header,
        rows.iter().map(|r| {
            let mut rec: Vec<String> = r.parameters.iter().map(|(_, v)| num(*v)).collect();
            rec.extend([opt(r.s_db), opt(r.p_suc), opt(r.tail_mass), opt(r.fidelity), opt(r.energy)]);
            rec.push(r.error.clone().unwrap_or_default());
            rec
        }),
    )
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64, CliError> {
    field.trim().parse().map_err(|_| CliError::input(path, format!("line {line}: {field:?} is not a number")))
}

fn parse_index(path: &Path, line: usize, field: &str) -> Result<usize, CliError> {
    field.trim().parse().map_err(|_| CliError::input(path, format!("line {line}: {field:?} is not an index")))
}

/// Reads a state written by [`write_state`] (pure) or
/// [`write_density_matrix`].
pub fn read_state(path: &Path) -> Result<State, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| CliError::input(path, e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    let records: Vec<csv::StringRecord> =
        r.records().collect::<Result<_, _>>().map_err(|e| CliError::input(path, e.to_string()))?;
    match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["index", "re", "im"] => {
            let mut amps = vec![None; records.len()];
            for (k, rec) in records.iter().enumerate() {
                let n = parse_index(path, k + 2, &rec[0])?;
                let slot = amps
                    .get_mut(n)
                    .ok_or_else(|| CliError::input(path, format!("line {}: index {n} out of range", k + 2)))?;
                *slot = Some(C64::new(parse_f64(path, k + 2, &rec[1])?, parse_f64(path, k + 2, &rec[2])?));
            }
            let amps: Option<Vec<C64>> = amps.into_iter().collect();
            let amps = amps.ok_or_else(|| CliError::input(path, "missing amplitude indices"))?;
            let psi = PureState::new(DVector::from_vec(amps)).map_err(|e| CliError::input(path, e.to_string()))?;
            Ok(State::Pure(psi))
        }
        ["row", "col", "re", "im"] => {
            let dim = (records.len() as f64).sqrt().round() as usize;
            if dim * dim != records.len() || dim == 0 {
                return Err(CliError::input(path, format!("{} entries do not form a square matrix", records.len())));
            }
            let mut m = DMatrix::<C64>::zeros(dim, dim);
            let mut seen = vec![false; dim * dim];
            for (k, rec) in records.iter().enumerate() {
                let (row, col) = (parse_index(path, k + 2, &rec[0])?, parse_index(path, k + 2, &rec[1])?);
                if row >= dim || col >= dim || seen[row * dim + col] {
                    return Err(CliError::input(path, format!("line {}: bad or repeated entry ({row}, {col})", k + 2)));
                }
                seen[row * dim + col] = true;
                m[(row, col)] = C64::new(parse_f64(path, k + 2, &rec[2])?, parse_f64(path, k + 2, &rec[3])?);
            }
            let rho = MixedState::new(m).map_err(|e| CliError::input(path, e.to_string()))?;
            Ok(State::Mixed(rho))
        }
        ["index", "rho_nn"] => Err(CliError::input(
            path,
            "only the diagonal of the density matrix is stored; rerun with full_density_matrix = true",
        )),
        other => Err(CliError::input(path, format!("unrecognized header {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use parityforge_core::{fock::coherent_state, TruncationConfig};

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn pure_state_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.csv");
        let psi = coherent_state(C64::new(0.7, -1.3), TruncationConfig::new(40).unwrap()).unwrap();
        write_state(&path, &State::Pure(psi.clone())).unwrap();
        assert_eq!(read_state(&path).unwrap(), State::Pure(psi));
    }

    #[test]
    fn density_matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.csv");
        let t = TruncationConfig::new(12).unwrap();
        let rho = coherent_state(C64::new(0.3, 0.4), t).unwrap().to_density();
        write_density_matrix(&path, &rho).unwrap();
        assert_eq!(read_state(&path).unwrap(), State::Mixed(rho));
    }

    #[test]
    fn diagonal_only_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("diag.csv");
        let rho = coherent_state(C64::new(0.3, 0.0), TruncationConfig::new(8).unwrap()).unwrap().to_density();
        write_state(&path, &State::Mixed(rho)).unwrap();
        assert!(matches!(read_state(&path), Err(CliError::Input { .. })));
    }
}
