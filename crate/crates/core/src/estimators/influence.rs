//! Sample influence curves of the URI and MRI estimators.

use nalgebra::DVector;

use crate::dataset::{profile, Dataset, ProfileRequest, CONTROL, TREATED};
use crate::error::{Error, Result};
use crate::lsq::{least_squares_fit, with_intercept};
use crate::weights::{mri_weights, uri_weights, Method};

/// Influence of each unit on an ATE estimate, with the residuals and
/// leverages of the fits it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceVector {
    pub method: Method,
    /// `(m - 1)` times the drop in the estimate when the unit is removed,
    /// where `m` is the size of the sample the unit's fit uses.
    pub sic: DVector<f64>,
    pub residuals: DVector<f64>,
    pub leverages: DVector<f64>,
}

impl InfluenceVector {
    /// `|SIC|` divided by its maximum; all zeros if every SIC is zero.
    pub fn scaled_abs(&self) -> DVector<f64> {
        let max = self.sic.amax();
        if max > 0.0 {
            self.sic.map(|v| v.abs() / max)
        } else {
            DVector::zeros(self.sic.len())
        }
    }
}

const LEVERAGE_TOL: f64 = 1e-10;

/// Closed-form influence of each unit on the URI or MRI ATE estimate. For
/// MRI the target profile stays at the full-sample mean when a unit is
/// dropped.
pub fn sample_influence(d: &Dataset, method: Method) -> Result<InfluenceVector> {
    d.require_binary()?;
    let y = d.outcome()?;
    let n = d.n();
    let k = d.k();
    let sign = |i: usize| if d.treatment()[i] == TREATED { 1.0 } else { -1.0 };
    match method {
        Method::Uri => {
            if n < k + 3 {
                return Err(Error::GroupTooSmall {
                    group: -1,
                    size: n,
                    required: k + 3,
                });
            }
            let w = uri_weights(d)?;
            let mut design = with_intercept(d.covariates()).insert_column(k + 1, 0.0);
            for i in 0..n {
                design[(i, k + 1)] = if d.treatment()[i] == TREATED { 1.0 } else { 0.0 };
            }
            let fit = least_squares_fit(&design, y, None)?;
            let mut sic = DVector::zeros(n);
            for i in 0..n {
                let one_minus_h = 1.0 - fit.leverages[i];
                if one_minus_h < LEVERAGE_TOL {
                    return Err(Error::DegenerateLeverage(i));
                }
                sic[i] = (n as f64 - 1.0) * sign(i) * fit.residuals[i] * w.weights[i] / one_minus_h;
            }
            Ok(InfluenceVector {
                method,
                sic,
                residuals: fit.residuals,
                leverages: fit.leverages,
            })
        }
        Method::Mri => {
            for g in [CONTROL, TREATED] {
                let size = d.group_size(g)?;
                if size < k + 2 {
                    return Err(Error::GroupTooSmall {
                        group: g,
                        size,
                        required: k + 2,
                    });
                }
            }
            let x = profile(d, &ProfileRequest::FullMean)?;
            let w = mri_weights(d, &x)?;
            let mut sic = DVector::zeros(n);
            let mut residuals = DVector::zeros(n);
            let mut leverages = DVector::zeros(n);
            for g in [CONTROL, TREATED] {
                let rows = d.group_rows(g)?;
                let m = rows.len() as f64;
                let design = with_intercept(&d.group_covariates(g)?);
                let yg = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
                let fit = least_squares_fit(&design, &yg, None)?;
                for (r, &i) in rows.iter().enumerate() {
                    let one_minus_h = 1.0 - fit.leverages[r];
                    if one_minus_h < LEVERAGE_TOL {
                        return Err(Error::DegenerateLeverage(i));
                    }
                    residuals[i] = fit.residuals[r];
                    leverages[i] = fit.leverages[r];
                    sic[i] = (m - 1.0) * sign(i) * fit.residuals[r] * w.weights[i] / one_minus_h;
                }
            }
            Ok(InfluenceVector {
                method,
                sic,
                residuals,
                leverages,
            })
        }
        other => Err(Error::Config(format!(
            "sample influence is available for URI and MRI, not {other}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn zero_residual_unit_has_zero_influence() {
        // Outcomes exactly linear in X within each group.
        let x = DMatrix::from_column_slice(8, 1, &[0.0, 1.0, 2.0, 3.5, 0.5, 1.5, 2.0, 4.0]);
        let y = x.column(0).map(|v| 2.0 * v + 1.0);
        let d = Dataset::binary(x, vec![1, 1, 1, 1, 0, 0, 0, 0])
            .unwrap()
            .with_outcome(y)
            .unwrap();
        let s = sample_influence(&d, Method::Mri).unwrap();
        assert!(s.sic.amax() < 1e-12);
    }

    #[test]
    fn scaled_max_is_one() {
        let x = DMatrix::from_column_slice(8, 1, &[0.0, 1.0, 2.0, 3.5, 0.5, 1.5, 2.0, 4.0]);
        let y = DVector::from_vec(vec![1.0, 0.3, 2.0, 5.0, 0.1, 0.0, 1.3, 0.7]);
        let d = Dataset::binary(x, vec![1, 1, 1, 1, 0, 0, 0, 0])
            .unwrap()
            .with_outcome(y)
            .unwrap();
        for m in [Method::Uri, Method::Mri] {
            let s = sample_influence(&d, m).unwrap().scaled_abs();
            assert_eq!(s.max(), 1.0);
        }
    }
}
