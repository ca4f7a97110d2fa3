//! Weights for multi-valued treatments with level 1 as the reference.

use nalgebra::{DMatrix, DVector};

use super::binary::centered_dot;
use super::{Estimand, Method, WeightSet};
use crate::dataset::{
    full_mean, group_moments, raw_group_moments, CovariateProfile, Dataset, Label, ProfileKind,
    TreatmentKind,
};
use crate::error::{Error, Result};
use crate::lsq::functional_weights;
use crate::numeric::{compensated_sum, equilibrated_rcond, SpdSolver, SINGULARITY_THRESHOLD};

/// Invertibility of a group's design `(1, X_g)' (1, X_g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupInvertibility {
    pub group: Label,
    pub size: usize,
    pub reciprocal_condition: f64,
    pub invertible: bool,
}

/// Per-group invertibility check recommended before multi-valued analyses.
pub fn multivalued_invertibility(d: &Dataset) -> Result<Vec<GroupInvertibility>> {
    let mut out = Vec::new();
    for g in d.labels() {
        let size = d.group_size(g)?;
        let rcond = if size < d.k() + 1 {
            0.0
        } else {
            equilibrated_rcond(&raw_group_moments(d, g)?.1)
        };
        out.push(GroupInvertibility {
            group: g,
            size,
            reciprocal_condition: rcond,
            invertible: rcond >= SINGULARITY_THRESHOLD,
        });
    }
    Ok(out)
}

/// Pooled design `(1, X, D_2, ..., D_V)`.
pub(crate) fn pooled_indicator_design(d: &Dataset) -> DMatrix<f64> {
    let labels = d.labels();
    let k = d.k();
    let n = d.n();
    let p = 1 + k + labels.len() - 1;
    let mut m = DMatrix::zeros(n, p);
    for i in 0..n {
        m[(i, 0)] = 1.0;
        for j in 0..k {
            m[(i, 1 + j)] = d.covariates()[(i, j)];
        }
        let z = d.treatment()[i];
        if z >= 2 {
            m[(i, k + (z as usize) - 1)] = 1.0;
        }
    }
    m
}

/// Weights for the contrast of level `v` against level 1.
pub fn multivalued_weights(d: &Dataset, v: Label, method: Method) -> Result<WeightSet> {
    if d.kind() != TreatmentKind::MultiValued {
        return Err(Error::NotMultiValued);
    }
    let labels = d.labels();
    let last = *labels.last().expect("at least two levels");
    if v < 2 || v > last {
        return Err(Error::Config(format!(
            "active level must be in 2..={last}, got {v}"
        )));
    }
    let estimand = Estimand::AteV1 { level: v };
    match method {
        Method::MultiMri | Method::Mri => {
            let xbar = full_mean(d);
            let mut w = DVector::zeros(d.n());
            for g in [1, v] {
                let m = group_moments(d, g).map_err(|e| match e {
                    Error::ConstantColumn { .. } | Error::GroupTooSmall { .. } => {
                        Error::GroupDesignSingular { group: g, rcond: 0.0 }
                    }
                    Error::Singular { rcond, .. } => Error::GroupDesignSingular { group: g, rcond },
                    other => other,
                })?;
                let solver = SpdSolver::new(&m.scatter, &format!("scatter of group {g}"))
                    .map_err(|_| Error::GroupDesignSingular {
                        group: g,
                        rcond: m.reciprocal_condition,
                    })?;
                let dir = solver.solve(&(&xbar - &m.mean));
                for &i in d.group_rows(g)? {
                    w[i] = 1.0 / m.size as f64 + centered_dot(d, i, &m.mean, &dir);
                }
            }
            let target = CovariateProfile::new(xbar, ProfileKind::FullMean);
            WeightSet::new(d, Method::MultiMri, estimand, w, target, None)
        }
        Method::MultiUri | Method::Uri => {
            let design = pooled_indicator_design(d);
            let mut c = DVector::zeros(design.ncols());
            c[d.k() + (v as usize) - 1] = 1.0;
            let l = functional_weights(&design, &c).map_err(|e| match e {
                Error::RankDeficient { rcond } => Error::Singular {
                    what: "pooled multi-valued design".into(),
                    rcond,
                },
                other => other,
            })?;
            let w = DVector::from_iterator(
                d.n(),
                d.treatment()
                    .iter()
                    .zip(l.iter())
                    .map(|(&z, &li)| if z == v { li } else { -li }),
            );
            let rows = d.group_rows(v)?;
            let target = DVector::from_iterator(
                d.k(),
                (0..d.k()).map(|j| {
                    compensated_sum(rows.iter().map(|&i| w[i] * d.covariates()[(i, j)]))
                }),
            );
            let target = CovariateProfile::new(target, ProfileKind::UriImplied);
            WeightSet::new(d, Method::MultiUri, estimand, w, target, None)
        }
        other => Err(Error::Config(format!(
            "method {other} is not available for multi-valued treatments"
        ))),
    }
}
