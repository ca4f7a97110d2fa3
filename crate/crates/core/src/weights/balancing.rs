//! Weights from base and scale weights: WURI, WMRI and the doubly robust
//! estimator. All three solve the same equality-constrained least-distance
//! problem in each group, with different base weights, scale weights and
//! target profile.

use nalgebra::{DMatrix, DVector};

use super::binary::centered_dot;
use super::{mri_estimand, Estimand, Method, WeightSet};
use crate::dataset::{
    full_mean, weighted_moments, CovariateProfile, Dataset, Label, ProfileKind, CONTROL, TREATED,
};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, SpdSolver};

/// Per-group closed form
/// `w_i = base_i + s_i (X_i - mean_s)' (S_s / n_g)^{-1} (target - mean_base)`.
fn group_solution(
    d: &Dataset,
    g: Label,
    base: &[f64],
    scale: &[f64],
    target: &DVector<f64>,
    out: &mut DVector<f64>,
) -> Result<()> {
    let rows = d.group_rows(g)?;
    let wm = weighted_moments(d, g, scale)?;
    let metric = &wm.scatter / rows.len() as f64;
    let solver = SpdSolver::new(&metric, &format!("weighted scatter of group {g}"))?;
    let x = d.covariates();
    let base_mean = DVector::from_iterator(
        d.k(),
        (0..d.k()).map(|j| compensated_sum(rows.iter().zip(base).map(|(&i, b)| b * x[(i, j)]))),
    );
    let dir = solver.solve(&(target - base_mean));
    for (r, &i) in rows.iter().enumerate() {
        out[i] = base[r] + scale[r] * centered_dot(d, i, &wm.mean, &dir);
    }
    Ok(())
}

fn check_base(d: &Dataset, base: &DVector<f64>) -> Result<()> {
    if base.len() != d.n() {
        return Err(Error::LengthMismatch {
            what: "base weights".into(),
            expected: d.n(),
            got: base.len(),
        });
    }
    if let Some(row) = base.iter().position(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::NonPositiveBaseWeight(row));
    }
    Ok(())
}

fn restrict(d: &Dataset, v: &DVector<f64>, g: Label) -> Result<Vec<f64>> {
    Ok(d.group_rows(g)?.iter().map(|&i| v[i]).collect())
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let s = compensated_sum(v.iter().copied());
    v.iter().map(|x| x / s).collect()
}

/// Scale weights of the WURI problem: base weights normalized over the
/// whole sample.
fn wuri_scale(base: &DVector<f64>) -> DVector<f64> {
    let s = compensated_sum(base.iter().copied());
    base / s
}

/// Target profile of the WURI problem,
/// `A_c (A_t + A_c)^{-1} m_t + A_t (A_t + A_c)^{-1} m_c` with
/// `A_g = S_g^scale / n_g` and `m_g` the scale-weighted group means.
pub fn wuri_target(d: &Dataset, base: &DVector<f64>) -> Result<CovariateProfile> {
    d.require_binary()?;
    check_base(d, base)?;
    let scale = wuri_scale(base);
    let mut a: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::new();
    for g in [TREATED, CONTROL] {
        let s = restrict(d, &scale, g)?;
        let wm = weighted_moments(d, g, &s)?;
        a.push((wm.scatter / s.len() as f64, wm.mean));
    }
    let (a_t, m_t) = &a[0];
    let (a_c, m_c) = &a[1];
    let solver = SpdSolver::new(&(a_t + a_c), "A_t + A_c")?;
    let values = a_c * solver.solve(m_t) + a_t * solver.solve(m_c);
    Ok(CovariateProfile::new(values, ProfileKind::WeightedUriImplied))
}

/// Implied weights of the weighted pooled regression of Y on (1, X, Z) with
/// case weights `base`.
pub fn wuri_weights(d: &Dataset, base: &DVector<f64>) -> Result<WeightSet> {
    let target = wuri_target(d, base)?;
    let scale = wuri_scale(base);
    let mut w = DVector::zeros(d.n());
    for g in [CONTROL, TREATED] {
        let s = restrict(d, &scale, g)?;
        let b = normalize(&s);
        group_solution(d, g, &b, &s, &target.values, &mut w)?;
    }
    WeightSet::new(d, Method::Wuri, Estimand::Ate, w, target, Some(base.clone()))
}

/// Implied weights of separate weighted regressions in each group,
/// evaluated at `x`.
pub fn wmri_weights(d: &Dataset, base: &DVector<f64>, x: &CovariateProfile) -> Result<WeightSet> {
    d.require_binary()?;
    check_base(d, base)?;
    if x.len() != d.k() {
        return Err(Error::LengthMismatch {
            what: "profile".into(),
            expected: d.k(),
            got: x.len(),
        });
    }
    let mut w = DVector::zeros(d.n());
    for g in [CONTROL, TREATED] {
        let b = normalize(&restrict(d, base, g)?);
        group_solution(d, g, &b, &b, &x.values, &mut w)?;
    }
    WeightSet::new(
        d,
        Method::Wmri,
        mri_estimand(x),
        w,
        x.clone(),
        Some(base.clone()),
    )
}

/// Tolerance on the per-group sums of base weights supplied to
/// [`dr_weights`].
pub const BASE_NORMALIZATION_TOL: f64 = 1e-8;

/// Implied weights of the doubly robust estimator with outcome models fit
/// by per-group least squares. `base` must sum to one within each group.
pub fn dr_weights(d: &Dataset, base: &DVector<f64>) -> Result<WeightSet> {
    d.require_binary()?;
    if base.len() != d.n() {
        return Err(Error::LengthMismatch {
            what: "base weights".into(),
            expected: d.n(),
            got: base.len(),
        });
    }
    if base.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidWeights("non-finite base weight".into()));
    }
    let xbar = full_mean(d);
    let mut w = DVector::zeros(d.n());
    for g in [CONTROL, TREATED] {
        let b = restrict(d, base, g)?;
        let sum = compensated_sum(b.iter().copied());
        if (sum - 1.0).abs() > BASE_NORMALIZATION_TOL {
            return Err(Error::BaseNotNormalized { group: g, sum });
        }
        let ones = vec![1.0; b.len()];
        group_solution(d, g, &b, &ones, &xbar, &mut w)?;
    }
    let target = CovariateProfile::new(xbar, ProfileKind::FullMean);
    WeightSet::new(d, Method::Dr, Estimand::Ate, w, target, Some(base.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{group_mean, profile, ProfileRequest};
    use crate::weights::{mri_weights, uri_weights};

    fn f2() -> Dataset {
        Dataset::binary(
            DMatrix::from_column_slice(6, 1, &[0.0, 1.0, 2.0, 0.0, 2.0, 4.0]),
            vec![1, 1, 1, 0, 0, 0],
        )
        .unwrap()
    }

    #[test]
    fn uniform_base_reduces_wuri_to_uri() {
        let d = f2();
        let base = DVector::from_element(6, 1.0 / 6.0);
        let a = wuri_weights(&d, &base).unwrap();
        let b = uri_weights(&d).unwrap();
        assert!((a.weights - b.weights).amax() < 1e-14);
        assert!((a.target.values - b.target.values).amax() < 1e-14);
    }

    #[test]
    fn uniform_base_reduces_wmri_to_mri() {
        let d = f2();
        let x = profile(&d, &ProfileRequest::FullMean).unwrap();
        let a = wmri_weights(&d, &DVector::from_element(6, 3.0), &x).unwrap();
        let b = mri_weights(&d, &x).unwrap();
        assert!((a.weights - b.weights).amax() < 1e-14);
    }

    #[test]
    fn wmri_at_weighted_mean_returns_base() {
        let d = f2();
        let base = DVector::from_vec(vec![1.0, 2.0, 3.0, 1.0, 1.0, 2.0]);
        let rows = d.group_rows(TREATED).unwrap();
        let bt: Vec<f64> = rows.iter().map(|&i| base[i]).collect();
        let tot: f64 = bt.iter().sum();
        let m = rows
            .iter()
            .zip(&bt)
            .map(|(&i, b)| b * d.covariates()[(i, 0)])
            .sum::<f64>()
            / tot;
        let x = CovariateProfile::new(DVector::from_element(1, m), ProfileKind::Custom);
        let w = wmri_weights(&d, &base, &x).unwrap();
        for (&i, b) in rows.iter().zip(&bt) {
            assert!((w.weights[i] - b / tot).abs() < 1e-14);
        }
    }

    #[test]
    fn dr_uniform_base_is_mri() {
        let d = f2();
        let base = DVector::from_element(6, 1.0 / 3.0);
        let a = dr_weights(&d, &base).unwrap();
        let x = profile(&d, &ProfileRequest::FullMean).unwrap();
        let b = mri_weights(&d, &x).unwrap();
        assert!((&a.weights - &b.weights).amax() < 1e-14);
        assert!((a.group_sum(0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dr_rejects_unnormalized_base() {
        let d = f2();
        let base = DVector::from_element(6, 0.5);
        assert!(matches!(
            dr_weights(&d, &base),
            Err(Error::BaseNotNormalized { .. })
        ));
    }

    #[test]
    fn wuri_group_sums_and_balance() {
        let d = f2();
        let base = DVector::from_vec(vec![0.3, 1.7, 0.9, 2.2, 0.4, 1.1]);
        let w = wuri_weights(&d, &base).unwrap();
        for g in [CONTROL, TREATED] {
            assert!((w.group_sum(g).unwrap() - 1.0).abs() < 1e-12);
            let s: f64 = d
                .group_rows(g)
                .unwrap()
                .iter()
                .map(|&i| w.weights[i] * d.covariates()[(i, 0)])
                .sum();
            assert!((s - w.target.values[0]).abs() < 1e-12);
        }
        let _ = group_mean(&d, TREATED).unwrap();
    }

    #[test]
    fn wuri_rejects_nonpositive_base() {
        let d = f2();
        let base = DVector::from_vec(vec![0.3, 0.0, 0.9, 2.2, 0.4, 1.1]);
        assert!(matches!(
            wuri_weights(&d, &base),
            Err(Error::NonPositiveBaseWeight(1))
        ));
    }
}
