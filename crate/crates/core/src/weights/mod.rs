//! Implied weights of regression estimators.
//!
//! Every constructor here reads covariates and treatment only; the outcome
//! column is never touched.

mod balancing;
mod binary;
mod multi;
mod no_intercept;
mod pairs;

pub use balancing::{dr_weights, wmri_weights, wuri_target, wuri_weights, BASE_NORMALIZATION_TOL};
pub use binary::{mri_weights, uri_implied_profile, uri_weights};
pub use multi::{multivalued_invertibility, multivalued_weights, GroupInvertibility};
pub use no_intercept::no_intercept_weights;
pub use pairs::{matched_pair_weights, MatchedPairs, PairWeightSet};

use std::fmt;

use nalgebra::DVector;

use crate::dataset::{CovariateProfile, Dataset, Label, ProfileKind, TREATED};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Uri,
    Mri,
    Wuri,
    Wmri,
    Dr,
    MultiUri,
    MultiMri,
    NoInterceptUri,
    NoInterceptMri,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Uri => "URI",
            Method::Mri => "MRI",
            Method::Wuri => "WURI",
            Method::Wmri => "WMRI",
            Method::Dr => "DR",
            Method::MultiUri => "MULTI_URI",
            Method::MultiMri => "MULTI_MRI",
            Method::NoInterceptUri => "NO_INTERCEPT_URI",
            Method::NoInterceptMri => "NO_INTERCEPT_MRI",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let m = match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "uri" => Method::Uri,
            "mri" => Method::Mri,
            "wuri" => Method::Wuri,
            "wmri" => Method::Wmri,
            "dr" => Method::Dr,
            "multi_uri" => Method::MultiUri,
            "multi_mri" => Method::MultiMri,
            "no_intercept_uri" => Method::NoInterceptUri,
            "no_intercept_mri" => Method::NoInterceptMri,
            _ => return None,
        };
        Some(m)
    }

    /// Whether group sums are constrained to one.
    pub fn normalized(self) -> bool {
        !matches!(self, Method::NoInterceptUri | Method::NoInterceptMri)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimand {
    Ate,
    Att,
    /// Control-side analog of the ATT, obtained from MRI weights at the
    /// control mean.
    Atc,
    Cate,
    /// Contrast of level `level` against level 1 in a multi-valued design.
    AteV1 { level: Label },
}

impl Estimand {
    pub fn as_string(self) -> String {
        match self {
            Estimand::Ate => "ATE".into(),
            Estimand::Att => "ATT".into(),
            Estimand::Atc => "ATC".into(),
            Estimand::Cate => "CATE".into(),
            Estimand::AteV1 { level } => format!("ATE_{level}1"),
        }
    }
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_string())
    }
}

/// Estimand implied by an MRI target profile.
pub(crate) fn mri_estimand(x: &CovariateProfile) -> Estimand {
    match x.kind {
        ProfileKind::FullMean => Estimand::Ate,
        ProfileKind::TreatedMean => Estimand::Att,
        ProfileKind::ControlMean => Estimand::Atc,
        _ => Estimand::Cate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSum {
    pub group: Label,
    pub sum: f64,
}

/// Per-unit implied weights aligned to the rows of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub method: Method,
    pub estimand: Estimand,
    pub weights: DVector<f64>,
    pub target: CovariateProfile,
    pub group_sums: Vec<GroupSum>,
    /// Base weights the set was built from (WURI, WMRI, DR).
    pub base: Option<DVector<f64>>,
}

impl WeightSet {
    pub fn new(
        d: &Dataset,
        method: Method,
        estimand: Estimand,
        weights: DVector<f64>,
        target: CovariateProfile,
        base: Option<DVector<f64>>,
    ) -> Result<Self> {
        if weights.len() != d.n() {
            return Err(Error::LengthMismatch {
                what: "weights".into(),
                expected: d.n(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidWeights("non-finite weight".into()));
        }
        let mut group_sums = Vec::new();
        for g in d.labels() {
            let rows = d.group_rows(g)?;
            group_sums.push(GroupSum {
                group: g,
                sum: compensated_sum(rows.iter().map(|&i| weights[i])),
            });
        }
        Ok(Self {
            method,
            estimand,
            weights,
            target,
            group_sums,
            base,
        })
    }

    pub fn group_sum(&self, g: Label) -> Option<f64> {
        self.group_sums.iter().find(|s| s.group == g).map(|s| s.sum)
    }

    /// Weights of group `g` in file order.
    pub fn group_weights(&self, d: &Dataset, g: Label) -> Result<Vec<f64>> {
        Ok(d.group_rows(g)?.iter().map(|&i| self.weights[i]).collect())
    }

    /// Sign with which label `z` enters the estimated contrast.
    pub fn contrast_sign(&self, z: Label) -> f64 {
        let positive = match self.estimand {
            Estimand::AteV1 { level } => level,
            _ => TREATED,
        };
        if z == positive {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_multivalued(&self) -> bool {
        matches!(self.method, Method::MultiUri | Method::MultiMri)
    }
}
