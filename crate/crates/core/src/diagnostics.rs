//! Design-stage diagnostics of weight sets: balance, effective sample size,
//! dispersion, extrapolation and long-format plot data.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{
    full_mean, group_moments, raw_group_moments, CovariateProfile, Dataset, Label, ProfileKind,
    CONTROL, TREATED,
};
use crate::error::{Error, Result};
use crate::estimators::sample_influence;
use crate::numeric::{compensated_sum, SpdSolver};
use crate::weights::{Estimand, Method, WeightSet};

pub const ASMD_CONVENTION: &str = "pooled unweighted sd sqrt((s_t^2 + s_c^2) / 2)";

/// Which sample supplies the TASMD denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TasmdReference {
    FullSample,
    TreatedSample,
    ControlSample,
}

impl TasmdReference {
    pub fn for_target(target: &CovariateProfile) -> Self {
        match target.kind {
            ProfileKind::TreatedMean => TasmdReference::TreatedSample,
            ProfileKind::ControlMean => TasmdReference::ControlSample,
            _ => TasmdReference::FullSample,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TasmdReference::FullSample => "full_sample",
            TasmdReference::TreatedSample => "treated_sample",
            TasmdReference::ControlSample => "control_sample",
        }
    }
}

/// One covariate's balance statistics. `None` marks a statistic that is not
/// computable because its denominator is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceRow {
    pub name: String,
    pub asmd: Option<f64>,
    pub tasmd_treated: Option<f64>,
    pub tasmd_control: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceTable {
    pub rows: Vec<BalanceRow>,
    pub target: CovariateProfile,
    pub reference: TasmdReference,
}

fn sample_sd(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mean = compensated_sum(values.clone()) / n;
    let ss = compensated_sum(values.map(|v| (v - mean) * (v - mean)));
    (ss / (n - 1.0)).sqrt()
}

fn side_rows(d: &Dataset, w: &WeightSet, positive: bool) -> Vec<usize> {
    (0..d.n())
        .filter(|&i| (w.contrast_sign(d.treatment()[i]) > 0.0) == positive)
        .collect()
}

fn weighted_mean(col: &[f64], weights: &DVector<f64>, rows: &[usize]) -> f64 {
    let num = compensated_sum(rows.iter().map(|&i| weights[i] * col[i]));
    let den = compensated_sum(rows.iter().map(|&i| weights[i]));
    num / den
}

fn uniform_weights(d: &Dataset) -> DVector<f64> {
    let mut u = DVector::zeros(d.n());
    for g in d.labels() {
        let rows = d.group_rows(g).expect("label from dataset");
        for &i in rows {
            u[i] = 1.0 / rows.len() as f64;
        }
    }
    u
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    if den > 0.0 && den.is_finite() {
        Some(num.abs() / den)
    } else {
        None
    }
}

fn balance_rows(
    d: &Dataset,
    columns: &DMatrix<f64>,
    names: &[String],
    w: &WeightSet,
    weights: &DVector<f64>,
    target: &CovariateProfile,
) -> Result<Vec<BalanceRow>> {
    let pos = side_rows(d, w, true);
    let neg = side_rows(d, w, false);
    let reference = TasmdReference::for_target(target);
    let ref_rows: Vec<usize> = match reference {
        TasmdReference::FullSample => (0..d.n()).collect(),
        TasmdReference::TreatedSample => d.group_rows(TREATED)?.to_vec(),
        TasmdReference::ControlSample => d.group_rows(CONTROL)?.to_vec(),
    };
    let mut out = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let col: Vec<f64> = columns.column(j).iter().copied().collect();
        let s_t = sample_sd(pos.iter().map(|&i| col[i]));
        let s_c = sample_sd(neg.iter().map(|&i| col[i]));
        let pooled = ((s_t * s_t + s_c * s_c) / 2.0).sqrt();
        let s_ref = sample_sd(ref_rows.iter().map(|&i| col[i]));
        let m_t = weighted_mean(&col, weights, &pos);
        let m_c = weighted_mean(&col, weights, &neg);
        out.push(BalanceRow {
            name: name.clone(),
            asmd: ratio(m_t - m_c, pooled),
            tasmd_treated: ratio(m_t - target.values[j], s_ref),
            tasmd_control: ratio(m_c - target.values[j], s_ref),
        });
    }
    Ok(out)
}

/// Balance of arbitrary (e.g. transformed) covariate columns aligned to the
/// rows of `d`. `target` holds the target mean of each column.
pub fn balance_table_for(
    d: &Dataset,
    columns: &DMatrix<f64>,
    names: &[String],
    w: &WeightSet,
    target: &CovariateProfile,
) -> Result<BalanceTable> {
    if columns.nrows() != d.n() {
        return Err(Error::LengthMismatch {
            what: "balance columns".into(),
            expected: d.n(),
            got: columns.nrows(),
        });
    }
    if names.len() != columns.ncols() || target.len() != columns.ncols() {
        return Err(Error::LengthMismatch {
            what: "balance target".into(),
            expected: columns.ncols(),
            got: target.len(),
        });
    }
    Ok(BalanceTable {
        rows: balance_rows(d, columns, names, w, &w.weights, target)?,
        target: target.clone(),
        reference: TasmdReference::for_target(target),
    })
}

pub fn balance_table(d: &Dataset, w: &WeightSet, target: &CovariateProfile) -> Result<BalanceTable> {
    balance_table_for(d, d.covariates(), d.column_names(), w, target)
}

/// Balance before weighting: uniform weights within each group.
pub fn unweighted_balance_table(
    d: &Dataset,
    w: &WeightSet,
    target: &CovariateProfile,
) -> Result<BalanceTable> {
    Ok(BalanceTable {
        rows: balance_rows(d, d.covariates(), d.column_names(), w, &uniform_weights(d), target)?,
        target: target.clone(),
        reference: TasmdReference::for_target(target),
    })
}

/// `(sum |w|)^2 / sum w^2`, which handles signed weights.
pub fn effective_sample_size(weights: &[f64]) -> Result<f64> {
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidWeights("non-finite weight".into()));
    }
    let sq = compensated_sum(weights.iter().map(|w| w * w));
    if sq == 0.0 {
        return Err(Error::InvalidWeights("all weights are zero".into()));
    }
    let abs = compensated_sum(weights.iter().map(|w| w.abs()));
    Ok(abs * abs / sq)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupWeightDiagnostics {
    pub group: Label,
    pub size: usize,
    pub sum: f64,
    /// `None` when every weight in the group is zero.
    pub ess: Option<f64>,
    /// `(1/n_g) sum (w_i - mean w)^2`.
    pub variance: f64,
    pub closed_form_variance: Option<f64>,
    pub variance_discrepancy: Option<f64>,
    pub negative_count: usize,
    pub min: f64,
    pub max: f64,
    pub sum_abs: f64,
    /// Whether the weighted outcome mean lies in the group's outcome range;
    /// needs an outcome.
    pub sample_bounded: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightDiagnostics {
    pub method: Method,
    pub groups: Vec<GroupWeightDiagnostics>,
}

/// Closed-form within-group weight variances for URI (ATE) and MRI at any
/// profile.
fn closed_form_variances(d: &Dataset, w: &WeightSet) -> Result<Option<Vec<(Label, f64)>>> {
    match w.method {
        Method::Uri => {
            let (m_t, s_t) = raw_group_moments(d, TREATED)?;
            let (m_c, s_c) = raw_group_moments(d, CONTROL)?;
            let solver = SpdSolver::new(&(&s_t + &s_c), "S_t + S_c")?;
            let xbar = full_mean(d);
            let n = d.n() as f64;
            let n_t = d.group_size(TREATED)? as f64;
            let n_c = d.group_size(CONTROL)? as f64;
            let quad = |dev: DVector<f64>, s_g: &DMatrix<f64>| {
                let u = solver.solve(&dev);
                u.dot(&(s_g * &u))
            };
            let v_t = n * n / (n_t * n_c * n_c) * quad(&xbar - &m_t, &s_t);
            let v_c = n * n / (n_c * n_t * n_t) * quad(&xbar - &m_c, &s_c);
            Ok(Some(vec![(CONTROL, v_c), (TREATED, v_t)]))
        }
        Method::Mri => {
            let mut out = Vec::new();
            for g in [CONTROL, TREATED] {
                let m = group_moments(d, g)?;
                let solver = SpdSolver::new(&m.scatter, "group scatter")?;
                let dev = &w.target.values - &m.mean;
                out.push((g, solver.solve(&dev).dot(&dev) / m.size as f64));
            }
            Ok(Some(out))
        }
        _ => Ok(None),
    }
}

pub fn weight_diagnostics(d: &Dataset, w: &WeightSet) -> Result<WeightDiagnostics> {
    if w.weights.len() != d.n() {
        return Err(Error::LengthMismatch {
            what: "weights".into(),
            expected: d.n(),
            got: w.weights.len(),
        });
    }
    let closed = closed_form_variances(d, w)?;
    let mut groups = Vec::new();
    for g in d.labels() {
        let ws = w.group_weights(d, g)?;
        let m = ws.len() as f64;
        let sum = compensated_sum(ws.iter().copied());
        let mean = sum / m;
        let variance = compensated_sum(ws.iter().map(|v| (v - mean) * (v - mean))) / m;
        let closed_form_variance = closed
            .as_ref()
            .and_then(|c| c.iter().find(|(l, _)| *l == g).map(|(_, v)| *v));
        let sample_bounded = match d.outcome() {
            Ok(y) => {
                let rows = d.group_rows(g)?;
                let lo = rows.iter().map(|&i| y[i]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|&i| y[i]).fold(f64::NEG_INFINITY, f64::max);
                let wm = compensated_sum(rows.iter().map(|&i| w.weights[i] * y[i])) / sum;
                Some(wm >= lo && wm <= hi)
            }
            Err(_) => None,
        };
        groups.push(GroupWeightDiagnostics {
            group: g,
            size: ws.len(),
            sum,
            ess: effective_sample_size(&ws).ok(),
            variance,
            closed_form_variance,
            variance_discrepancy: closed_form_variance.map(|c| (c - variance).abs()),
            negative_count: ws.iter().filter(|v| **v < 0.0).count(),
            min: ws.iter().copied().fold(f64::INFINITY, f64::min),
            max: ws.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            sum_abs: compensated_sum(ws.iter().map(|v| v.abs())),
            sample_bounded,
        });
    }
    Ok(WeightDiagnostics {
        method: w.method,
        groups,
    })
}

/// `sum_i (w_i - 2/n)^2` over the whole sample.
pub fn full_sample_dispersion(w: &WeightSet) -> f64 {
    let c = 2.0 / w.weights.len() as f64;
    compensated_sum(w.weights.iter().map(|v| (v - c) * (v - c)))
}

pub const DEFAULT_EXTREME_MULTIPLE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitFlag {
    pub row: usize,
    pub group: Label,
    pub weight: f64,
    pub negative: bool,
    /// `|w|` exceeds the extreme multiple of the uniform weight `1/n_g`.
    pub extreme: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupBoundedness {
    pub group: Label,
    /// True when all weights are nonnegative, which guarantees the weighted
    /// mean is a convex combination of observed outcomes.
    pub guaranteed: bool,
    pub weighted_mean: Option<f64>,
    pub outcome_min: Option<f64>,
    pub outcome_max: Option<f64>,
    pub sample_bounded: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationReport {
    pub extreme_multiple: f64,
    pub flags: Vec<UnitFlag>,
    pub groups: Vec<GroupBoundedness>,
}

pub fn extrapolation_report(
    d: &Dataset,
    w: &WeightSet,
    extreme_multiple: f64,
) -> Result<ExtrapolationReport> {
    if !(extreme_multiple > 0.0) {
        return Err(Error::Config("extreme-weight multiple must be positive".into()));
    }
    let mut flags = Vec::new();
    let mut groups = Vec::new();
    for g in d.labels() {
        let rows = d.group_rows(g)?;
        let uniform = 1.0 / rows.len() as f64;
        for &i in rows {
            let v = w.weights[i];
            let negative = v < 0.0;
            let extreme = v.abs() > extreme_multiple * uniform;
            if negative || extreme {
                flags.push(UnitFlag {
                    row: i,
                    group: g,
                    weight: v,
                    negative,
                    extreme,
                });
            }
        }
        let guaranteed = rows.iter().all(|&i| w.weights[i] >= 0.0);
        let (weighted_mean, outcome_min, outcome_max, sample_bounded) = match d.outcome() {
            Ok(y) => {
                let sum = compensated_sum(rows.iter().map(|&i| w.weights[i]));
                let wm = compensated_sum(rows.iter().map(|&i| w.weights[i] * y[i])) / sum;
                let lo = rows.iter().map(|&i| y[i]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|&i| y[i]).fold(f64::NEG_INFINITY, f64::max);
                let wm_opt = if wm.is_finite() { Some(wm) } else { None };
                (wm_opt, Some(lo), Some(hi), wm_opt.map(|m| m >= lo && m <= hi))
            }
            Err(_) => (None, None, None, None),
        };
        groups.push(GroupBoundedness {
            group: g,
            guaranteed,
            weighted_mean,
            outcome_min,
            outcome_max,
            sample_bounded,
        });
    }
    flags.sort_by_key(|f| f.row);
    Ok(ExtrapolationReport {
        extreme_multiple,
        flags,
        groups,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Love,
    Density,
    /// Weights against the values of covariate `covariate`.
    Bubble { covariate: usize },
    Influence,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Love => "love",
            PlotKind::Density => "density",
            PlotKind::Bubble { .. } => "bubble",
            PlotKind::Influence => "influence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(f64),
    Missing,
}

/// Long-format table ready for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

fn text(s: &str) -> Cell {
    Cell::Text(s.to_string())
}

fn opt(v: Option<f64>) -> Cell {
    v.map_or(Cell::Missing, Cell::Num)
}

pub fn plot_data(d: &Dataset, w: &WeightSet, kind: PlotKind) -> Result<PlotTable> {
    let cols = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match kind {
        PlotKind::Love => {
            let adjusted = balance_table(d, w, &w.target)?;
            let unadjusted = unweighted_balance_table(d, w, &w.target)?;
            let mut rows = Vec::new();
            for (label, table) in [("unadjusted", &unadjusted), ("adjusted", &adjusted)] {
                for r in &table.rows {
                    for (stat, v) in [
                        ("asmd", r.asmd),
                        ("tasmd_treated", r.tasmd_treated),
                        ("tasmd_control", r.tasmd_control),
                    ] {
                        rows.push(vec![text(&r.name), text(stat), text(label), opt(v)]);
                    }
                }
            }
            Ok(PlotTable {
                columns: cols(&["covariate", "statistic", "adjustment", "value"]),
                rows,
            })
        }
        PlotKind::Density => Ok(PlotTable {
            columns: cols(&["group", "weight"]),
            rows: (0..d.n())
                .map(|i| vec![Cell::Int(d.treatment()[i]), Cell::Num(w.weights[i])])
                .collect(),
        }),
        PlotKind::Bubble { covariate } => {
            if covariate >= d.k() {
                return Err(Error::Config(format!(
                    "bubble covariate index {covariate} out of range"
                )));
            }
            Ok(PlotTable {
                columns: vec![
                    "group".into(),
                    d.column_names()[covariate].clone(),
                    "weight".into(),
                    "sign".into(),
                ],
                rows: (0..d.n())
                    .map(|i| {
                        let v = w.weights[i];
                        vec![
                            Cell::Int(d.treatment()[i]),
                            Cell::Num(d.covariates()[(i, covariate)]),
                            Cell::Num(v),
                            text(if v < 0.0 { "negative" } else { "nonnegative" }),
                        ]
                    })
                    .collect(),
            })
        }
        PlotKind::Influence => {
            let method = match (w.method, w.estimand) {
                (Method::Uri, _) => Method::Uri,
                (Method::Mri, Estimand::Ate) => Method::Mri,
                (m, e) => {
                    return Err(Error::MethodEstimandMismatch {
                        method: m.to_string(),
                        estimand: format!("{e} (influence needs URI or MRI ATE)"),
                    })
                }
            };
            let s = sample_influence(d, method)?.scaled_abs();
            Ok(PlotTable {
                columns: cols(&["index", "scaled_abs_sic"]),
                rows: s
                    .iter()
                    .enumerate()
                    .map(|(i, v)| vec![Cell::Int(i as i64), Cell::Num(*v)])
                    .collect(),
            })
        }
    }
}
