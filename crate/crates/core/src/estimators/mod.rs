//! Hájek estimates from weight sets and the direct regression estimators
//! they must agree with.

mod influence;

pub use influence::{sample_influence, InfluenceVector};
pub use crate::lsq::{least_squares_fit, LeastSquaresFit};

use nalgebra::{DMatrix, DVector};

use crate::dataset::{CovariateProfile, Dataset, Label, ProfileKind, CONTROL, TREATED};
use crate::error::{Error, Result};
use crate::lsq::with_intercept;
use crate::numeric::compensated_sum;
use crate::weights::{Estimand, MatchedPairs, Method, PairWeightSet, WeightSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateSource {
    Weights,
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmMean {
    pub group: Label,
    /// Weighted outcome mean of the arm (or the corresponding regression
    /// quantity for direct estimators).
    pub weighted_mean: f64,
    /// Whether the arm mean lies within the observed outcome range of the
    /// group. `None` for direct estimators.
    pub sample_bounded: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub estimand: Estimand,
    pub method: Method,
    pub source: EstimateSource,
    pub value: f64,
    /// Arm-level means; the value is the positive arm minus the rest.
    pub arms: Vec<ArmMean>,
}

fn outcome_range(d: &Dataset, y: &DVector<f64>, g: Label) -> Result<(f64, f64)> {
    let rows = d.group_rows(g)?;
    let lo = rows.iter().map(|&i| y[i]).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|&i| y[i]).fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

fn group_outcome_mean(d: &Dataset, y: &DVector<f64>, g: Label) -> Result<f64> {
    let rows = d.group_rows(g)?;
    Ok(compensated_sum(rows.iter().map(|&i| y[i])) / rows.len() as f64)
}

fn check_method_estimand(w: &WeightSet) -> Result<()> {
    let ok = match w.method {
        Method::Uri | Method::Wuri | Method::Dr | Method::NoInterceptUri => {
            w.estimand == Estimand::Ate
        }
        Method::Mri | Method::Wmri | Method::NoInterceptMri => !matches!(w.estimand, Estimand::AteV1 { .. }),
        Method::MultiUri | Method::MultiMri => matches!(w.estimand, Estimand::AteV1 { .. }),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::MethodEstimandMismatch {
            method: w.method.to_string(),
            estimand: w.estimand.to_string(),
        })
    }
}

/// Weighted contrast `sum_{positive} w Y - sum_{others} w Y`. For the ATT
/// (ATC) the treated (control) arm enters through its plain outcome mean.
pub fn hajek_estimate(d: &Dataset, w: &WeightSet) -> Result<EstimateResult> {
    let y = d.outcome()?;
    if w.weights.len() != d.n() {
        return Err(Error::LengthMismatch {
            what: "weights".into(),
            expected: d.n(),
            got: w.weights.len(),
        });
    }
    check_method_estimand(w)?;
    if w.is_multivalued() != (d.kind() == crate::dataset::TreatmentKind::MultiValued) {
        return Err(Error::MethodEstimandMismatch {
            method: w.method.to_string(),
            estimand: w.estimand.to_string(),
        });
    }
    let mut arms = Vec::new();
    for g in d.labels() {
        let rows = d.group_rows(g)?;
        let weighted = match (w.estimand, g) {
            (Estimand::Att, TREATED) => group_outcome_mean(d, y, g)?,
            (Estimand::Atc, CONTROL) => group_outcome_mean(d, y, g)?,
            _ => compensated_sum(rows.iter().map(|&i| w.weights[i] * y[i])),
        };
        let (lo, hi) = outcome_range(d, y, g)?;
        arms.push(ArmMean {
            group: g,
            weighted_mean: weighted,
            sample_bounded: Some(weighted >= lo && weighted <= hi),
        });
    }
    let value = compensated_sum(arms.iter().map(|a| w.contrast_sign(a.group) * a.weighted_mean));
    Ok(EstimateResult {
        estimand: w.estimand,
        method: w.method,
        source: EstimateSource::Weights,
        value,
        arms,
    })
}

fn treatment_indicator(d: &Dataset) -> DVector<f64> {
    DVector::from_iterator(
        d.n(),
        d.treatment().iter().map(|&z| if z == TREATED { 1.0 } else { 0.0 }),
    )
}

fn pooled_design(d: &Dataset) -> DMatrix<f64> {
    let x = with_intercept(d.covariates());
    let k1 = x.ncols();
    let mut x = x.insert_column(k1, 0.0);
    let z = treatment_indicator(d);
    x.set_column(k1, &z);
    x
}

fn direct_result(method: Method, estimand: Estimand, value: f64, arms: Vec<ArmMean>) -> EstimateResult {
    EstimateResult {
        estimand,
        method,
        source: EstimateSource::Direct,
        value,
        arms,
    }
}

/// Z-coefficient of the least-squares fit of Y on (1, X, Z).
pub fn uri_estimate_direct(d: &Dataset) -> Result<EstimateResult> {
    d.require_binary()?;
    let y = d.outcome()?;
    let fit = least_squares_fit(&pooled_design(d), y, None)?;
    Ok(direct_result(Method::Uri, Estimand::Ate, fit.coefficients[d.k() + 1], Vec::new()))
}

/// Z-coefficient of the weighted least-squares fit with case weights `base`.
pub fn wuri_estimate_direct(d: &Dataset, base: &DVector<f64>) -> Result<EstimateResult> {
    d.require_binary()?;
    let y = d.outcome()?;
    let fit = least_squares_fit(&pooled_design(d), y, Some(base))?;
    Ok(direct_result(Method::Wuri, Estimand::Ate, fit.coefficients[d.k() + 1], Vec::new()))
}

/// Per-group regression of Y on (1, X), optionally case-weighted.
fn group_fit(d: &Dataset, g: Label, case_weights: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    let rows = d.group_rows(g)?;
    let y = d.outcome()?;
    let x = with_intercept(&d.group_covariates(g)?);
    let yg = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
    let wg = case_weights.map(|w| DVector::from_iterator(rows.len(), rows.iter().map(|&i| w[i])));
    let fit = least_squares_fit(&x, &yg, wg.as_ref()).map_err(|e| match e {
        Error::RankDeficient { rcond } => Error::GroupDesignSingular { group: g, rcond },
        other => other,
    })?;
    Ok(fit.coefficients)
}

fn predict(beta: &DVector<f64>, x: &[f64]) -> f64 {
    let mut acc = crate::numeric::CompensatedSum::new();
    acc.add(beta[0]);
    for (j, v) in x.iter().enumerate() {
        acc.add(beta[j + 1] * v);
    }
    acc.value()
}

fn row(d: &Dataset, i: usize) -> Vec<f64> {
    d.covariates().row(i).iter().copied().collect()
}

fn mean_prediction(d: &Dataset, beta: &DVector<f64>, rows: &[usize]) -> f64 {
    compensated_sum(rows.iter().map(|&i| predict(beta, &row(d, i)))) / rows.len() as f64
}

fn arm(group: Label, v: f64) -> ArmMean {
    ArmMean {
        group,
        weighted_mean: v,
        sample_bounded: None,
    }
}

/// Imputation estimator from separate per-group least-squares fits.
pub fn mri_estimate_direct(
    d: &Dataset,
    estimand: Estimand,
    x: Option<&CovariateProfile>,
) -> Result<EstimateResult> {
    d.require_binary()?;
    let y = d.outcome()?;
    let b1 = group_fit(d, TREATED, None)?;
    let b0 = group_fit(d, CONTROL, None)?;
    let all: Vec<usize> = (0..d.n()).collect();
    let (m1, m0) = match estimand {
        Estimand::Ate => (mean_prediction(d, &b1, &all), mean_prediction(d, &b0, &all)),
        Estimand::Att => (
            group_outcome_mean(d, y, TREATED)?,
            mean_prediction(d, &b0, d.group_rows(TREATED)?),
        ),
        Estimand::Atc => (
            mean_prediction(d, &b1, d.group_rows(CONTROL)?),
            group_outcome_mean(d, y, CONTROL)?,
        ),
        Estimand::Cate => {
            let x = x.ok_or_else(|| Error::Config("CATE requires a covariate profile".into()))?;
            if x.len() != d.k() {
                return Err(Error::LengthMismatch {
                    what: "profile".into(),
                    expected: d.k(),
                    got: x.len(),
                });
            }
            (predict(&b1, x.values.as_slice()), predict(&b0, x.values.as_slice()))
        }
        Estimand::AteV1 { .. } => {
            return Err(Error::MethodEstimandMismatch {
                method: Method::Mri.to_string(),
                estimand: estimand.to_string(),
            })
        }
    };
    Ok(direct_result(
        Method::Mri,
        estimand,
        m1 - m0,
        vec![arm(CONTROL, m0), arm(TREATED, m1)],
    ))
}

/// Difference of per-group weighted least-squares predictions at `x`.
pub fn wmri_estimate_direct(
    d: &Dataset,
    base: &DVector<f64>,
    x: &CovariateProfile,
) -> Result<EstimateResult> {
    d.require_binary()?;
    if x.len() != d.k() {
        return Err(Error::LengthMismatch {
            what: "profile".into(),
            expected: d.k(),
            got: x.len(),
        });
    }
    let b1 = group_fit(d, TREATED, Some(base))?;
    let b0 = group_fit(d, CONTROL, Some(base))?;
    let (m1, m0) = (predict(&b1, x.values.as_slice()), predict(&b0, x.values.as_slice()));
    let estimand = match x.kind {
        ProfileKind::FullMean => Estimand::Ate,
        ProfileKind::TreatedMean => Estimand::Att,
        ProfileKind::ControlMean => Estimand::Atc,
        _ => Estimand::Cate,
    };
    Ok(direct_result(
        Method::Wmri,
        estimand,
        m1 - m0,
        vec![arm(CONTROL, m0), arm(TREATED, m1)],
    ))
}

/// Doubly robust estimate: per arm, the sample-average imputation plus the
/// base-weighted mean residual, with per-group least-squares outcome models.
pub fn dr_estimate_direct(d: &Dataset, base: &DVector<f64>) -> Result<EstimateResult> {
    d.require_binary()?;
    let y = d.outcome()?;
    if base.len() != d.n() {
        return Err(Error::LengthMismatch {
            what: "base weights".into(),
            expected: d.n(),
            got: base.len(),
        });
    }
    let all: Vec<usize> = (0..d.n()).collect();
    let mut arms = Vec::new();
    for g in [CONTROL, TREATED] {
        let rows = d.group_rows(g)?;
        let sum = compensated_sum(rows.iter().map(|&i| base[i]));
        if (sum - 1.0).abs() > crate::weights::BASE_NORMALIZATION_TOL {
            return Err(Error::BaseNotNormalized { group: g, sum });
        }
        let beta = group_fit(d, g, None)?;
        let imputed = mean_prediction(d, &beta, &all);
        let correction =
            compensated_sum(rows.iter().map(|&i| base[i] * (y[i] - predict(&beta, &row(d, i)))));
        arms.push(arm(g, imputed + correction));
    }
    let value = arms[1].weighted_mean - arms[0].weighted_mean;
    Ok(direct_result(Method::Dr, Estimand::Ate, value, arms))
}

/// `sum_i w_i (Y_ti - Y_ci)`.
pub fn pair_hajek_estimate(pairs: &MatchedPairs, w: &PairWeightSet) -> Result<f64> {
    let yd = pairs.outcome_differences()?;
    if yd.len() != w.pair_weights.len() {
        return Err(Error::LengthMismatch {
            what: "pair weights".into(),
            expected: yd.len(),
            got: w.pair_weights.len(),
        });
    }
    Ok(compensated_sum(w.pair_weights.iter().zip(yd.iter()).map(|(a, b)| a * b)))
}

/// `(mean Y_t - mean Y_c) - (mean X_t - mean X_c)' b` where `b` is the slope of
/// the regression of outcome differences on (1, covariate differences).
pub fn pair_estimate_direct(pairs: &MatchedPairs) -> Result<f64> {
    let yd = pairs.outcome_differences()?;
    let xd = pairs.differences();
    let fit = least_squares_fit(&with_intercept(&xd), &yd, None)?;
    let m = pairs.len() as f64;
    let ybar = compensated_sum(yd.iter().copied()) / m;
    let adj = compensated_sum((0..pairs.k()).map(|j| {
        compensated_sum(xd.column(j).iter().copied()) / m * fit.coefficients[j + 1]
    }));
    Ok(ybar - adj)
}
