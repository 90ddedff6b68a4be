//! Dense SPD solves shared by the linear and GP models.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

/// Diagonal jitter added when the first factorization attempt fails.
pub const CHOLESKY_JITTER: f64 = 1e-10;

/// Cholesky factorization, retrying once with [`CHOLESKY_JITTER`] on the
/// diagonal.
pub fn cholesky_with_jitter(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let n = m.nrows();
    let jittered = m + DMatrix::identity(n, n) * CHOLESKY_JITTER;
    Cholesky::new(jittered)
        .ok_or_else(|| Error::Numerical(format!("{n}x{n} system not positive definite after jitter")))
}

pub fn solve_spd(m: DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let chol = cholesky_with_jitter(m)?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution".into()));
    }
    Ok(x.iter().copied().collect())
}
