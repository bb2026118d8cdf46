//! Matrix exponential. Diagonal inputs take the exact elementwise path; dense
//! inputs use scaling and squaring around a truncated Taylor series.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Norm threshold below which the Taylor series is evaluated directly.
const SERIES_RADIUS: f64 = 0.5;
/// Taylor degree; `0.5^19 / 19!` is far below double precision.
const SERIES_DEGREE: usize = 18;

/// `exp(q * dt)`, dispatching on whether `q` is diagonal.
pub fn matrix_exponential(q: &DMatrix<f64>, dt: f64) -> Result<DMatrix<f64>> {
    check_input(q, dt)?;
    if is_diagonal(q) {
        Ok(expm_diagonal(q, dt))
    } else {
        expm_dense(q, dt)
    }
}

/// Scaling and squaring path, usable on any square matrix.
pub fn expm_dense(q: &DMatrix<f64>, dt: f64) -> Result<DMatrix<f64>> {
    check_input(q, dt)?;
    let a = q * dt;
    let norm = one_norm(&a);
    let squarings = if norm > SERIES_RADIUS {
        (norm / SERIES_RADIUS).log2().ceil() as i32
    } else {
        0
    };
    let scaled = &a / 2f64.powi(squarings);

    let dim = q.nrows();
    let mut result = DMatrix::<f64>::identity(dim, dim);
    let mut term = DMatrix::<f64>::identity(dim, dim);
    for i in 1..=SERIES_DEGREE {
        term = &term * &scaled / i as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    if result.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix exponential result"));
    }
    Ok(result)
}

pub(crate) fn is_diagonal(q: &DMatrix<f64>) -> bool {
    q.is_square()
        && q.iter()
            .enumerate()
            .all(|(idx, &x)| idx % q.nrows() == idx / q.nrows() || x == 0.0)
}

fn expm_diagonal(q: &DMatrix<f64>, dt: f64) -> DMatrix<f64> {
    let dim = q.nrows();
    DMatrix::from_fn(
        dim,
        dim,
        |i, j| if i == j { (q[(i, i)] * dt).exp() } else { 0.0 },
    )
}

fn check_input(q: &DMatrix<f64>, dt: f64) -> Result<()> {
    if !q.is_square() {
        return Err(Error::InvalidProblem(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if !dt.is_finite() || q.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix exponential input"));
    }
    Ok(())
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
