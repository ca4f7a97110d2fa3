//! Implied weights of regressions fit without an intercept. These weights
//! balance weighted covariate sums rather than means, and their group sums
//! need not equal one.

use nalgebra::DVector;

use super::{mri_estimand, Estimand, Method, WeightSet};
use crate::dataset::{full_mean, CovariateProfile, Dataset, ProfileKind, CONTROL, TREATED};
use crate::error::{Error, Result};
use crate::lsq::functional_weights;
use crate::numeric::compensated_sum;

/// URI: `w = (2Z - 1) l` with `l = (I - P) Z / Z'(I - P) Z` and `P` the
/// projection onto the covariate columns. MRI: in each group
/// `w_g = X_g (X_g' X_g)^{-1} x`, with `x` defaulting to the full-sample mean.
pub fn no_intercept_weights(
    d: &Dataset,
    method: Method,
    x: Option<&CovariateProfile>,
) -> Result<WeightSet> {
    d.require_binary()?;
    match method {
        Method::NoInterceptUri | Method::Uri => {
            let design = d.covariates().clone().insert_column(d.k(), 0.0);
            let mut design = design;
            for (i, &z) in d.treatment().iter().enumerate() {
                design[(i, d.k())] = if z == TREATED { 1.0 } else { 0.0 };
            }
            let mut c = DVector::zeros(d.k() + 1);
            c[d.k()] = 1.0;
            let l = functional_weights(&design, &c).map_err(|e| match e {
                Error::RankDeficient { rcond } => Error::Singular {
                    what: "no-intercept pooled design".into(),
                    rcond,
                },
                other => other,
            })?;
            let w = DVector::from_iterator(
                d.n(),
                d.treatment()
                    .iter()
                    .zip(l.iter())
                    .map(|(&z, &li)| if z == TREATED { li } else { -li }),
            );
            let rows = d.group_rows(TREATED)?;
            let target = DVector::from_iterator(
                d.k(),
                (0..d.k()).map(|j| {
                    compensated_sum(rows.iter().map(|&i| w[i] * d.covariates()[(i, j)]))
                }),
            );
            let target = CovariateProfile::new(target, ProfileKind::WeightedSum);
            WeightSet::new(d, Method::NoInterceptUri, Estimand::Ate, w, target, None)
        }
        Method::NoInterceptMri | Method::Mri => {
            let target = match x {
                Some(p) => {
                    if p.len() != d.k() {
                        return Err(Error::LengthMismatch {
                            what: "profile".into(),
                            expected: d.k(),
                            got: p.len(),
                        });
                    }
                    p.clone()
                }
                None => CovariateProfile::new(full_mean(d), ProfileKind::FullMean),
            };
            let mut w = DVector::zeros(d.n());
            for g in [CONTROL, TREATED] {
                let xg = d.group_covariates(g)?;
                let l = functional_weights(&xg, &target.values).map_err(|e| match e {
                    Error::RankDeficient { rcond } => Error::Singular {
                        what: format!("no-intercept design of group {g}"),
                        rcond,
                    },
                    other => other,
                })?;
                for (r, &i) in d.group_rows(g)?.iter().enumerate() {
                    w[i] = l[r];
                }
            }
            let estimand = mri_estimand(&target);
            WeightSet::new(d, Method::NoInterceptMri, estimand, w, target, None)
        }
        other => Err(Error::Config(format!(
            "method {other} has no no-intercept variant"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn data() -> Dataset {
        Dataset::binary(
            DMatrix::from_row_slice(
                7,
                2,
                &[1.0, 0.2, 2.0, 1.1, 0.5, 0.3, 1.5, 2.0, 3.0, 0.1, 2.2, 1.4, 0.4, 0.9],
            ),
            vec![1, 1, 1, 0, 0, 0, 0],
        )
        .unwrap()
    }

    #[test]
    fn uri_treated_sum_is_one_and_sums_balance() {
        let d = data();
        let w = no_intercept_weights(&d, Method::NoInterceptUri, None).unwrap();
        assert!((w.group_sum(TREATED).unwrap() - 1.0).abs() < 1e-12);
        for j in 0..2 {
            let diff: f64 = (0..d.n())
                .map(|i| w.contrast_sign(d.treatment()[i]) * w.weights[i] * d.covariates()[(i, j)])
                .sum();
            assert!(diff.abs() < 1e-10);
        }
    }

    #[test]
    fn mri_weighted_sums_hit_profile() {
        let d = data();
        let w = no_intercept_weights(&d, Method::NoInterceptMri, None).unwrap();
        for g in [CONTROL, TREATED] {
            for j in 0..2 {
                let s: f64 = d
                    .group_rows(g)
                    .unwrap()
                    .iter()
                    .map(|&i| w.weights[i] * d.covariates()[(i, j)])
                    .sum();
                assert!((s - w.target.values[j]).abs() < 1e-12);
            }
        }
    }
}
