//! Small numerical building blocks: compensated sums and factored solves
//! against symmetric positive definite matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Matrices whose reciprocal condition number falls below this are treated
/// as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-10;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Reciprocal condition number (smallest over largest singular value) of a
/// symmetric matrix after symmetric diagonal equilibration, so the value
/// does not depend on the units covariates are recorded in.
pub fn equilibrated_rcond(m: &DMatrix<f64>) -> f64 {
    let k = m.nrows();
    if k == 0 {
        return 1.0;
    }
    let mut scaled = m.clone();
    for j in 0..k {
        if !(m[(j, j)] > 0.0) {
            return 0.0;
        }
    }
    for i in 0..k {
        for j in 0..k {
            scaled[(i, j)] = m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt();
        }
    }
    let eig = scaled.symmetric_eigenvalues();
    let max = eig.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &v| a.min(v.abs()));
    if max == 0.0 || !max.is_finite() {
        0.0
    } else {
        min / max
    }
}

/// Cholesky factor of a diagonally equilibrated symmetric positive definite
/// matrix.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    scale: DVector<f64>,
    rcond: f64,
}

impl SpdSolver {
    /// Factors `m`, rejecting it when its reciprocal condition is below the
    /// singularity threshold. `what` names the matrix in the error.
    pub fn new(m: &DMatrix<f64>, what: &str) -> Result<Self> {
        let rcond = equilibrated_rcond(m);
        if !(rcond >= SINGULARITY_THRESHOLD) {
            return Err(Error::Singular {
                what: what.to_string(),
                rcond,
            });
        }
        let k = m.nrows();
        let scale = DVector::from_iterator(k, (0..k).map(|j| 1.0 / m[(j, j)].sqrt()));
        let mut scaled = m.clone();
        for i in 0..k {
            for j in 0..k {
                scaled[(i, j)] *= scale[i] * scale[j];
            }
        }
        let chol = nalgebra::Cholesky::new(scaled).ok_or_else(|| Error::Singular {
            what: what.to_string(),
            rcond,
        })?;
        Ok(Self { chol, scale, rcond })
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    /// Solves `m x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let rhs = b.component_mul(&self.scale);
        let y = self.chol.solve(&rhs);
        y.component_mul(&self.scale)
    }
}

/// Symmetric part of a square matrix; used to scrub rounding asymmetry.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let k = m.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_lost_bits() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v.iter().copied()), 2.0);
    }

    #[test]
    fn rcond_is_unit_invariant() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1e4, 1e-3]));
        let scaled = &d * &m * &d;
        assert!((equilibrated_rcond(&m) - equilibrated_rcond(&scaled)).abs() < 1e-12);
    }

    #[test]
    fn solver_rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(SpdSolver::new(&m, "m"), Err(Error::Singular { .. })));
    }

    #[test]
    fn solver_solves() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let x = SpdSolver::new(&m, "m").unwrap().solve(&b);
        assert!((&m * &x - &b).amax() < 1e-14);
    }
}
