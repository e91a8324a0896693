//! Dense factorizations used by the identification solvers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

/// Cholesky when the matrix is numerically positive definite, LU otherwise.
pub enum Factorization {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl Factorization {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("matrix has non-finite entries".into()));
        }
        match matrix.clone().cholesky() {
            Some(c) => Ok(Factorization::Cholesky(c)),
            None => Self::lu(matrix),
        }
    }

    pub fn lu(matrix: DMatrix<f64>) -> Result<Self> {
        let lu = matrix.lu();
        if !lu.is_invertible() {
            return Err(Error::Singular("LU factorization has a zero pivot".into()));
        }
        Ok(Factorization::Lu(lu))
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let x = match self {
            Factorization::Cholesky(c) => c.solve(rhs),
            Factorization::Lu(lu) => lu
                .solve(rhs)
                .ok_or_else(|| Error::Singular("LU solve failed".into()))?,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("solution has non-finite entries".into()));
        }
        Ok(x)
    }
}

/// Infinity norm.
pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
