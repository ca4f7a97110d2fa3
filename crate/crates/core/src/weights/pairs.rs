//! Weights of regression adjustment after one-to-one matching.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{CovariateProfile, ProfileKind};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, dot, SpdSolver};

/// Matched sample: row `i` of `treated` is paired with row `i` of `control`.
#[derive(Debug, Clone)]
pub struct MatchedPairs {
    pub treated: DMatrix<f64>,
    pub control: DMatrix<f64>,
    pub treated_outcome: Option<DVector<f64>>,
    pub control_outcome: Option<DVector<f64>>,
}

impl MatchedPairs {
    pub fn new(treated: DMatrix<f64>, control: DMatrix<f64>) -> Result<Self> {
        if treated.shape() != control.shape() {
            return Err(Error::LengthMismatch {
                what: "matched control rows".into(),
                expected: treated.nrows(),
                got: control.nrows(),
            });
        }
        if treated.iter().chain(control.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Malformed("non-finite covariate in matched sample".into()));
        }
        Ok(Self {
            treated,
            control,
            treated_outcome: None,
            control_outcome: None,
        })
    }

    pub fn with_outcomes(mut self, y_t: DVector<f64>, y_c: DVector<f64>) -> Result<Self> {
        let m = self.len();
        for (what, v) in [("treated outcome", &y_t), ("control outcome", &y_c)] {
            if v.len() != m {
                return Err(Error::LengthMismatch {
                    what: what.into(),
                    expected: m,
                    got: v.len(),
                });
            }
        }
        self.treated_outcome = Some(y_t);
        self.control_outcome = Some(y_c);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.treated.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn k(&self) -> usize {
        self.treated.ncols()
    }

    /// Within-pair covariate differences `X_t - X_c`.
    pub fn differences(&self) -> DMatrix<f64> {
        &self.treated - &self.control
    }

    /// Within-pair outcome differences.
    pub fn outcome_differences(&self) -> Result<DVector<f64>> {
        match (&self.treated_outcome, &self.control_outcome) {
            (Some(a), Some(b)) => Ok(a - b),
            _ => Err(Error::MissingOutcome),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairWeightSet {
    pub pair_weights: DVector<f64>,
    /// Profile reached by both weighted groups.
    pub implied_profile: CovariateProfile,
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(
        m.ncols(),
        m.column_iter().map(|c| compensated_sum(c.iter().copied()) / n),
    )
}

/// `sum_i (a_i - mean_a)(b_i - mean_b)'`.
fn cross_scatter(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ma, mb) = (column_means(a), column_means(b));
    let k = a.ncols();
    DMatrix::from_fn(k, k, |p, q| {
        compensated_sum((0..a.nrows()).map(|i| (a[(i, p)] - ma[p]) * (b[(i, q)] - mb[q])))
    })
}

/// `w_i = 1/m - mean_d' S_d^{-1} (X_di - mean_d)` for the regression of
/// outcome differences on (1, covariate differences).
pub fn matched_pair_weights(pairs: &MatchedPairs) -> Result<PairWeightSet> {
    let m = pairs.len();
    let k = pairs.k();
    if m < k + 2 {
        return Err(Error::GroupTooSmall {
            group: 1,
            size: m,
            required: k + 2,
        });
    }
    let xd = pairs.differences();
    let mean_d = column_means(&xd);
    let mut s_d = cross_scatter(&xd, &xd);
    crate::numeric::symmetrize(&mut s_d);
    let solver = SpdSolver::new(&s_d, "scatter of pair differences")?;
    let dir = solver.solve(&mean_d);
    let w = DVector::from_iterator(
        m,
        (0..m).map(|i| {
            let c: Vec<f64> = (0..k).map(|j| xd[(i, j)] - mean_d[j]).collect();
            1.0 / m as f64 - dot(&c, dir.as_slice())
        }),
    );

    let mean_t = column_means(&pairs.treated);
    let mean_c = column_means(&pairs.control);
    let s_t = cross_scatter(&pairs.treated, &pairs.treated);
    let s_c = cross_scatter(&pairs.control, &pairs.control);
    let s_tc = cross_scatter(&pairs.treated, &pairs.control);
    let s_ct = s_tc.transpose();
    let profile = (&s_c - &s_ct) * solver.solve(&mean_t) + (&s_t - &s_tc) * solver.solve(&mean_c);
    Ok(PairWeightSet {
        pair_weights: w,
        implied_profile: CovariateProfile::new(profile, ProfileKind::PairImplied),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_matched_means_give_uniform_weights() {
        let t = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let c = DMatrix::from_column_slice(4, 1, &[2.0, 1.0, 4.0, 3.0]);
        let w = matched_pair_weights(&MatchedPairs::new(t, c).unwrap()).unwrap();
        for v in w.pair_weights.iter() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_groups_reach_the_implied_profile() {
        let t = DMatrix::from_column_slice(5, 1, &[1.0, 2.5, 3.0, 4.2, 6.0]);
        let c = DMatrix::from_column_slice(5, 1, &[0.7, 2.0, 3.3, 3.5, 5.1]);
        let p = MatchedPairs::new(t.clone(), c.clone()).unwrap();
        let w = matched_pair_weights(&p).unwrap();
        let st: f64 = w.pair_weights.iter().zip(t.iter()).map(|(a, b)| a * b).sum();
        let sc: f64 = w.pair_weights.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
        assert!((st - sc).abs() < 1e-12);
        assert!((st - w.implied_profile.values[0]).abs() < 1e-12);
        assert!((w.pair_weights.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_pairs() {
        let t = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let c = DMatrix::from_column_slice(2, 1, &[0.0, 1.5]);
        assert!(matches!(
            matched_pair_weights(&MatchedPairs::new(t, c).unwrap()),
            Err(Error::GroupTooSmall { .. })
        ));
    }
}
