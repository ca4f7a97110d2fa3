//! URI and MRI weights for a binary treatment.

use nalgebra::DVector;

use super::{mri_estimand, Estimand, Method, WeightSet};
use crate::dataset::{
    full_mean, group_moments, raw_group_moments, CovariateProfile, Dataset, ProfileKind, CONTROL,
    TREATED,
};
use crate::error::{Error, Result};
use crate::numeric::{dot, SpdSolver};

fn row(d: &Dataset, i: usize) -> Vec<f64> {
    d.covariates().row(i).iter().copied().collect()
}

/// `(X_i - center)' v` using a compensated dot product.
pub(crate) fn centered_dot(d: &Dataset, i: usize, center: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let diff: Vec<f64> = row(d, i).iter().zip(center.iter()).map(|(a, b)| a - b).collect();
    dot(&diff, v.as_slice())
}

/// Implied weights of the pooled regression of Y on (1, X, Z).
pub fn uri_weights(d: &Dataset) -> Result<WeightSet> {
    d.require_binary()?;
    let (mean_t, s_t) = raw_group_moments(d, TREATED)?;
    let (mean_c, s_c) = raw_group_moments(d, CONTROL)?;
    let solver = SpdSolver::new(&(&s_t + &s_c), "S_t + S_c")?;
    let n = d.n() as f64;
    let n_t = d.group_size(TREATED)? as f64;
    let n_c = d.group_size(CONTROL)? as f64;
    let xbar = full_mean(d);
    let dir_t = solver.solve(&(&xbar - &mean_t));
    let dir_c = solver.solve(&(&xbar - &mean_c));
    let mut w = DVector::zeros(d.n());
    for (i, &z) in d.treatment().iter().enumerate() {
        w[i] = if z == TREATED {
            1.0 / n_t + (n / n_c) * centered_dot(d, i, &mean_t, &dir_t)
        } else {
            1.0 / n_c + (n / n_t) * centered_dot(d, i, &mean_c, &dir_c)
        };
    }
    let target = implied_profile(&mean_t, &mean_c, &s_t, &s_c, &solver);
    WeightSet::new(d, Method::Uri, Estimand::Ate, w, target, None)
}

fn implied_profile(
    mean_t: &DVector<f64>,
    mean_c: &DVector<f64>,
    s_t: &nalgebra::DMatrix<f64>,
    s_c: &nalgebra::DMatrix<f64>,
    solver: &SpdSolver,
) -> CovariateProfile {
    let values = s_c * solver.solve(mean_t) + s_t * solver.solve(mean_c);
    CovariateProfile::new(values, ProfileKind::UriImplied)
}

/// Covariate profile both URI-weighted groups are balanced toward:
/// `S_c (S_t + S_c)^{-1} mean_t + S_t (S_t + S_c)^{-1} mean_c`.
pub fn uri_implied_profile(d: &Dataset) -> Result<CovariateProfile> {
    d.require_binary()?;
    let (mean_t, s_t) = raw_group_moments(d, TREATED)?;
    let (mean_c, s_c) = raw_group_moments(d, CONTROL)?;
    let solver = SpdSolver::new(&(&s_t + &s_c), "S_t + S_c")?;
    Ok(implied_profile(&mean_t, &mean_c, &s_t, &s_c, &solver))
}

/// Implied weights of separate per-group regressions evaluated at `x`.
///
/// The estimand follows the profile: the full-sample mean gives the ATE,
/// the treated mean the ATT, the control mean the ATC and anything else a
/// CATE.
pub fn mri_weights(d: &Dataset, x: &CovariateProfile) -> Result<WeightSet> {
    d.require_binary()?;
    if x.len() != d.k() {
        return Err(Error::LengthMismatch {
            what: "profile".into(),
            expected: d.k(),
            got: x.len(),
        });
    }
    let mut w = DVector::zeros(d.n());
    for g in [CONTROL, TREATED] {
        let m = group_moments(d, g)?;
        let solver = SpdSolver::new(&m.scatter, &format!("scatter of group {g}"))?;
        let dir = solver.solve(&(&x.values - &m.mean));
        let inv = 1.0 / m.size as f64;
        for &i in d.group_rows(g)? {
            w[i] = inv + centered_dot(d, i, &m.mean, &dir);
        }
    }
    WeightSet::new(d, Method::Mri, mri_estimand(x), w, x.clone(), None)
}
