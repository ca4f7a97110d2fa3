//! Householder-QR least squares with column equilibration, leverages and
//! linear-functional weights.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::SINGULARITY_THRESHOLD;

/// Result of a (weighted) least-squares fit.
#[derive(Debug, Clone)]
pub struct LeastSquaresFit {
    pub coefficients: DVector<f64>,
    /// Unweighted residuals `y - X b`.
    pub residuals: DVector<f64>,
    /// Diagonal of the hat matrix of the (weighted) design.
    pub leverages: DVector<f64>,
    pub reciprocal_condition: f64,
}

/// Thin QR of a column-equilibrated design.
struct Factored {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    norms: DVector<f64>,
    rcond: f64,
}

fn factor(design: &DMatrix<f64>) -> Result<Factored> {
    let (n, p) = design.shape();
    if n < p || p == 0 {
        return Err(Error::RankDeficient { rcond: 0.0 });
    }
    let norms = DVector::from_iterator(p, design.column_iter().map(|c| c.norm()));
    if norms.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::RankDeficient { rcond: 0.0 });
    }
    let mut scaled = design.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col /= norms[j];
    }
    let qr = scaled.qr();
    let r = qr.r();
    let sv = r.singular_values();
    let max = sv.max();
    let min = sv.min();
    let rcond = if max > 0.0 { min / max } else { 0.0 };
    if !(rcond >= SINGULARITY_THRESHOLD) {
        return Err(Error::RankDeficient { rcond });
    }
    Ok(Factored {
        q: qr.q(),
        r,
        norms,
        rcond,
    })
}

fn weighted_inputs(
    design: &DMatrix<f64>,
    response: Option<&DVector<f64>>,
    case_weights: Option<&DVector<f64>>,
) -> Result<(DMatrix<f64>, Option<DVector<f64>>)> {
    let n = design.nrows();
    if let Some(y) = response {
        if y.len() != n {
            return Err(Error::LengthMismatch {
                what: "response".into(),
                expected: n,
                got: y.len(),
            });
        }
    }
    match case_weights {
        None => Ok((design.clone(), response.cloned())),
        Some(w) => {
            if w.len() != n {
                return Err(Error::LengthMismatch {
                    what: "case weights".into(),
                    expected: n,
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidWeights("case weights must be positive".into()));
            }
            let sw = w.map(f64::sqrt);
            let mut xw = design.clone();
            for i in 0..n {
                let mut row = xw.row_mut(i);
                row *= sw[i];
            }
            Ok((xw, response.map(|y| y.component_mul(&sw))))
        }
    }
}

/// Minimizes the (case-weighted) residual sum of squares.
pub fn least_squares_fit(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    case_weights: Option<&DVector<f64>>,
) -> Result<LeastSquaresFit> {
    let (xw, yw) = weighted_inputs(design, Some(response), case_weights)?;
    let yw = yw.expect("response supplied");
    let f = factor(&xw)?;
    let qty = f.q.tr_mul(&yw);
    let beta_s = f
        .r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { rcond: f.rcond })?;
    let coefficients = beta_s.component_div(&f.norms);

    // Normal equations on the equilibrated design: X_s' (y_w - X_w b) = 0.
    let rw = &yw - &xw * &coefficients;
    let mut worst = 0.0_f64;
    for j in 0..xw.ncols() {
        let g = xw.column(j).dot(&rw) / f.norms[j];
        worst = worst.max(g.abs());
    }
    let scale = yw.norm().max(f64::MIN_POSITIVE);
    if worst > 1e-10 * scale {
        return Err(Error::NormalEquationResidual {
            residual: worst / scale,
        });
    }

    let residuals = response - design * &coefficients;
    let leverages = DVector::from_iterator(xw.nrows(), f.q.row_iter().map(|r| r.norm_squared()));
    Ok(LeastSquaresFit {
        coefficients,
        residuals,
        leverages,
        reciprocal_condition: f.rcond,
    })
}

/// Returns `l = X (X'X)^{-1} c`, the vector with `l' y = c' b_hat(y)` for every
/// response `y`.
pub fn functional_weights(design: &DMatrix<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
    if c.len() != design.ncols() {
        return Err(Error::LengthMismatch {
            what: "functional".into(),
            expected: design.ncols(),
            got: c.len(),
        });
    }
    let f = factor(design)?;
    let cs = c.component_div(&f.norms);
    let t = f
        .r
        .tr_solve_upper_triangular(&cs)
        .ok_or(Error::RankDeficient { rcond: f.rcond })?;
    Ok(&f.q * t)
}

/// Leverages of `design` without fitting a response.
pub fn leverages(design: &DMatrix<f64>) -> Result<DVector<f64>> {
    let f = factor(design)?;
    Ok(DVector::from_iterator(
        design.nrows(),
        f.q.row_iter().map(|r| r.norm_squared()),
    ))
}

/// Prepends a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(0, 1.0)
}
