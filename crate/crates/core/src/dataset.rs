//! Study data: covariates, treatment labels, optional outcome and base
//! weights, plus cached per-group moments.

use std::collections::BTreeSet;
use std::io::Read;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::{equilibrated_rcond, CompensatedSum, SINGULARITY_THRESHOLD};

/// Treatment group label. Binary data uses 0 (control) and 1 (treated);
/// multi-valued data uses 1..=V.
pub type Label = i64;

pub const TREATED: Label = 1;
pub const CONTROL: Label = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreatmentKind {
    Binary,
    MultiValued,
}

#[derive(Debug, Clone)]
struct Group {
    label: Label,
    rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    covariates: DMatrix<f64>,
    treatment: Vec<Label>,
    outcome: Option<DVector<f64>>,
    base_weights: Option<DVector<f64>>,
    column_names: Vec<String>,
    kind: TreatmentKind,
    groups: Vec<Group>,
    moments: Vec<OnceLock<Result<GroupMoments>>>,
}

/// Unweighted moments of one treatment group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMoments {
    pub group: Label,
    pub size: usize,
    /// Arithmetic mean of the group's covariate rows.
    pub mean: DVector<f64>,
    /// Sum of outer products of centered rows (not divided by the size).
    pub scatter: DMatrix<f64>,
    pub reciprocal_condition: f64,
}

/// Weighted group moments in the sense of the balancing quadratic program:
/// `scatter = n_g * sum_i w_i (x_i - mean)(x_i - mean)'`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMoments {
    pub group: Label,
    pub mean: DVector<f64>,
    pub scatter: DMatrix<f64>,
    pub reciprocal_condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    FullMean,
    TreatedMean,
    ControlMean,
    GroupMean(Label),
    UriImplied,
    WeightedUriImplied,
    PairImplied,
    WeightedSum,
    Custom,
}

impl ProfileKind {
    pub fn label(&self) -> String {
        match self {
            ProfileKind::FullMean => "full_mean".into(),
            ProfileKind::TreatedMean => "treated_mean".into(),
            ProfileKind::ControlMean => "control_mean".into(),
            ProfileKind::GroupMean(g) => format!("group_mean_{g}"),
            ProfileKind::UriImplied => "uri_implied".into(),
            ProfileKind::WeightedUriImplied => "weighted_uri_implied".into(),
            ProfileKind::PairImplied => "pair_implied".into(),
            ProfileKind::WeightedSum => "weighted_sum".into(),
            ProfileKind::Custom => "custom".into(),
        }
    }
}

/// Target covariate profile a weight set balances toward.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateProfile {
    pub values: DVector<f64>,
    pub kind: ProfileKind,
}

impl CovariateProfile {
    pub fn new(values: DVector<f64>, kind: ProfileKind) -> Self {
        Self { values, kind }
    }

    pub fn label(&self) -> String {
        self.kind.label()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileRequest {
    FullMean,
    TreatedMean,
    ControlMean,
    GroupMean(Label),
    Custom(Vec<f64>),
}

impl Dataset {
    pub fn new(
        covariates: DMatrix<f64>,
        treatment: Vec<Label>,
        kind: TreatmentKind,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let n = covariates.nrows();
        let k = covariates.ncols();
        if n < 2 {
            return Err(Error::Malformed(format!("need at least 2 rows, got {n}")));
        }
        if k < 1 {
            return Err(Error::Malformed("need at least one covariate".into()));
        }
        if treatment.len() != n {
            return Err(Error::LengthMismatch {
                what: "treatment".into(),
                expected: n,
                got: treatment.len(),
            });
        }
        if column_names.len() != k {
            return Err(Error::LengthMismatch {
                what: "column names".into(),
                expected: k,
                got: column_names.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        for i in 0..n {
            for j in 0..k {
                if !covariates[(i, j)].is_finite() {
                    return Err(Error::NonFinite {
                        column: column_names[j].clone(),
                        row: i,
                    });
                }
            }
        }
        let labels: Vec<Label> = match kind {
            TreatmentKind::Binary => {
                for (row, &z) in treatment.iter().enumerate() {
                    if z != CONTROL && z != TREATED {
                        return Err(Error::InvalidTreatmentLabel {
                            row,
                            value: z.to_string(),
                        });
                    }
                }
                vec![CONTROL, TREATED]
            }
            TreatmentKind::MultiValued => {
                for (row, &z) in treatment.iter().enumerate() {
                    if z < 1 {
                        return Err(Error::InvalidTreatmentLabel {
                            row,
                            value: z.to_string(),
                        });
                    }
                }
                let v = *treatment.iter().max().unwrap_or(&1);
                if v < 2 {
                    return Err(Error::EmptyGroup(2));
                }
                (1..=v).collect()
            }
        };
        let mut groups: Vec<Group> = labels
            .iter()
            .map(|&label| Group {
                label,
                rows: Vec::new(),
            })
            .collect();
        for (i, &z) in treatment.iter().enumerate() {
            let pos = labels.iter().position(|&l| l == z).expect("label validated");
            groups[pos].rows.push(i);
        }
        for g in &groups {
            if g.rows.is_empty() {
                return Err(Error::EmptyGroup(g.label));
            }
        }
        let moments = groups.iter().map(|_| OnceLock::new()).collect();
        Ok(Self {
            covariates,
            treatment,
            outcome: None,
            base_weights: None,
            column_names,
            kind,
            groups,
            moments,
        })
    }

    /// Binary dataset with generated column names `x1..xk`.
    pub fn binary(covariates: DMatrix<f64>, treatment: Vec<Label>) -> Result<Self> {
        let names = (1..=covariates.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(covariates, treatment, TreatmentKind::Binary, names)
    }

    pub fn with_outcome(mut self, outcome: DVector<f64>) -> Result<Self> {
        if outcome.len() != self.n() {
            return Err(Error::LengthMismatch {
                what: "outcome".into(),
                expected: self.n(),
                got: outcome.len(),
            });
        }
        if let Some(row) = outcome.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                column: "outcome".into(),
                row,
            });
        }
        self.outcome = Some(outcome);
        Ok(self)
    }

    pub fn with_base_weights(mut self, base: DVector<f64>) -> Result<Self> {
        if base.len() != self.n() {
            return Err(Error::LengthMismatch {
                what: "base weights".into(),
                expected: self.n(),
                got: base.len(),
            });
        }
        if let Some(row) = base.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::NonPositiveBaseWeight(row));
        }
        self.base_weights = Some(base);
        Ok(self)
    }

    pub fn without_outcome(&self) -> Self {
        let mut d = self.clone();
        d.outcome = None;
        d
    }

    pub fn n(&self) -> usize {
        self.covariates.nrows()
    }

    pub fn k(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn kind(&self) -> TreatmentKind {
        self.kind
    }

    pub fn is_binary(&self) -> bool {
        self.kind == TreatmentKind::Binary
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn treatment(&self) -> &[Label] {
        &self.treatment
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn outcome(&self) -> Result<&DVector<f64>> {
        self.outcome.as_ref().ok_or(Error::MissingOutcome)
    }

    pub fn has_outcome(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn base_weights(&self) -> Option<&DVector<f64>> {
        self.base_weights.as_ref()
    }

    /// Group labels in ascending order.
    pub fn labels(&self) -> Vec<Label> {
        self.groups.iter().map(|g| g.label).collect()
    }

    /// Row indices of group `g` in file order.
    pub fn group_rows(&self, g: Label) -> Result<&[usize]> {
        self.group_index(g).map(|i| self.groups[i].rows.as_slice())
    }

    pub fn group_size(&self, g: Label) -> Result<usize> {
        self.group_rows(g).map(|r| r.len())
    }

    fn group_index(&self, g: Label) -> Result<usize> {
        self.groups
            .iter()
            .position(|grp| grp.label == g)
            .ok_or(Error::EmptyGroup(g))
    }

    /// Covariate submatrix of group `g`.
    pub fn group_covariates(&self, g: Label) -> Result<DMatrix<f64>> {
        let rows = self.group_rows(g)?;
        Ok(self.covariates.select_rows(rows.iter()))
    }

    pub fn require_binary(&self) -> Result<()> {
        if self.is_binary() {
            Ok(())
        } else {
            Err(Error::NotBinary)
        }
    }

    /// Copy with rows sorted by (label, covariates, outcome, base weight);
    /// used to canonicalize summation order.
    pub fn sorted_rows(&self) -> Self {
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        let key = |i: usize| -> Vec<f64> {
            let mut v = vec![self.treatment[i] as f64];
            v.extend(self.covariates.row(i).iter().copied());
            if let Some(y) = &self.outcome {
                v.push(y[i]);
            }
            if let Some(b) = &self.base_weights {
                v.push(b[i]);
            }
            v
        };
        order.sort_by(|&a, &b| {
            let (ka, kb) = (key(a), key(b));
            ka.iter()
                .zip(&kb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        self.permuted(&order)
    }

    /// Copy with rows reordered so that new row `r` is old row `order[r]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let x = self.covariates.select_rows(order.iter());
        let z = order.iter().map(|&i| self.treatment[i]).collect();
        let mut d = Dataset::new(x, z, self.kind, self.column_names.clone())
            .expect("permutation of a valid dataset is valid");
        if let Some(y) = &self.outcome {
            d.outcome = Some(DVector::from_iterator(order.len(), order.iter().map(|&i| y[i])));
        }
        if let Some(b) = &self.base_weights {
            d.base_weights = Some(DVector::from_iterator(order.len(), order.iter().map(|&i| b[i])));
        }
        d
    }
}

/// Row-order compensated mean and centered scatter of selected rows, with
/// optional per-row weights. With weights the scatter is multiplied by
/// `rows.len()` as in the weighted-moment definition.
fn accumulate(
    x: &DMatrix<f64>,
    rows: &[usize],
    weights: Option<&[f64]>,
) -> (DVector<f64>, DMatrix<f64>) {
    let k = x.ncols();
    let w = |r: usize| weights.map_or(1.0, |w| w[r]);
    let total = {
        let mut acc = CompensatedSum::new();
        for r in 0..rows.len() {
            acc.add(w(r));
        }
        acc.value()
    };
    let mut mean = DVector::zeros(k);
    for j in 0..k {
        let mut acc = CompensatedSum::new();
        for (r, &i) in rows.iter().enumerate() {
            acc.add(w(r) * x[(i, j)]);
        }
        mean[j] = acc.value() / total;
    }
    let mut scatter = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let mut acc = CompensatedSum::new();
            for (r, &i) in rows.iter().enumerate() {
                acc.add(w(r) * (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b]));
            }
            scatter[(a, b)] = acc.value();
            scatter[(b, a)] = acc.value();
        }
    }
    if weights.is_some() {
        scatter *= rows.len() as f64;
    }
    (mean, scatter)
}

fn check_constant_columns(d: &Dataset, g: Label, rows: &[usize]) -> Result<()> {
    let x = d.covariates();
    for j in 0..d.k() {
        let first = x[(rows[0], j)];
        if rows.iter().all(|&i| x[(i, j)] == first) {
            return Err(Error::ConstantColumn {
                group: g,
                column: d.column_names[j].clone(),
            });
        }
    }
    Ok(())
}

fn compute_group_moments(d: &Dataset, g: Label) -> Result<GroupMoments> {
    let rows = d.group_rows(g)?;
    let k = d.k();
    if rows.len() < k + 1 {
        return Err(Error::GroupTooSmall {
            group: g,
            size: rows.len(),
            required: k + 1,
        });
    }
    check_constant_columns(d, g, rows)?;
    let (mean, scatter) = accumulate(d.covariates(), rows, None);
    let rcond = equilibrated_rcond(&scatter);
    if !(rcond >= SINGULARITY_THRESHOLD) {
        return Err(Error::Singular {
            what: format!("scatter of group {g}"),
            rcond,
        });
    }
    Ok(GroupMoments {
        group: g,
        size: rows.len(),
        mean,
        scatter,
        reciprocal_condition: rcond,
    })
}

/// Mean and scatter of group `g`, computed once per dataset and cached.
pub fn group_moments(d: &Dataset, g: Label) -> Result<GroupMoments> {
    let idx = d.group_index(g)?;
    d.moments[idx]
        .get_or_init(|| compute_group_moments(d, g))
        .clone()
}

/// Mean of group `g` without the invertibility requirements of
/// [`group_moments`].
pub fn group_mean(d: &Dataset, g: Label) -> Result<DVector<f64>> {
    let rows = d.group_rows(g)?;
    Ok(accumulate(d.covariates(), rows, None).0)
}

/// Mean and scatter of group `g` with no size or conditioning checks.
pub(crate) fn raw_group_moments(d: &Dataset, g: Label) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let rows = d.group_rows(g)?;
    Ok(accumulate(d.covariates(), rows, None))
}

/// Weighted moments of group `g`; `weights` are aligned to the group's rows.
pub fn weighted_moments(d: &Dataset, g: Label, weights: &[f64]) -> Result<WeightedMoments> {
    let rows = d.group_rows(g)?;
    if weights.len() != rows.len() {
        return Err(Error::LengthMismatch {
            what: format!("weights for group {g}"),
            expected: rows.len(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidWeights(format!(
            "group {g} has a negative or non-finite weight"
        )));
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::InvalidWeights(format!("group {g} weights are all zero")));
    }
    let (mean, scatter) = accumulate(d.covariates(), rows, Some(weights));
    let rcond = equilibrated_rcond(&scatter);
    if !(rcond >= SINGULARITY_THRESHOLD) {
        return Err(Error::Singular {
            what: format!("weighted scatter of group {g}"),
            rcond,
        });
    }
    Ok(WeightedMoments {
        group: g,
        mean,
        scatter,
        reciprocal_condition: rcond,
    })
}

pub fn full_mean(d: &Dataset) -> DVector<f64> {
    let rows: Vec<usize> = (0..d.n()).collect();
    accumulate(d.covariates(), &rows, None).0
}

pub fn profile(d: &Dataset, request: &ProfileRequest) -> Result<CovariateProfile> {
    match request {
        ProfileRequest::FullMean => Ok(CovariateProfile::new(full_mean(d), ProfileKind::FullMean)),
        ProfileRequest::TreatedMean => {
            d.require_binary()?;
            Ok(CovariateProfile::new(
                group_mean(d, TREATED)?,
                ProfileKind::TreatedMean,
            ))
        }
        ProfileRequest::ControlMean => {
            d.require_binary()?;
            Ok(CovariateProfile::new(
                group_mean(d, CONTROL)?,
                ProfileKind::ControlMean,
            ))
        }
        ProfileRequest::GroupMean(g) => Ok(CovariateProfile::new(
            group_mean(d, *g)?,
            ProfileKind::GroupMean(*g),
        )),
        ProfileRequest::Custom(v) => custom_profile(d, v),
    }
}

pub fn custom_profile(d: &Dataset, values: &[f64]) -> Result<CovariateProfile> {
    if values.len() != d.k() {
        return Err(Error::LengthMismatch {
            what: "profile".into(),
            expected: d.k(),
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("profile entries must be finite".into()));
    }
    Ok(CovariateProfile::new(
        DVector::from_column_slice(values),
        ProfileKind::Custom,
    ))
}

/// Column-role mapping for [`load_dataset`].
#[derive(Debug, Clone)]
pub struct Schema {
    pub treatment: String,
    pub outcome: Option<String>,
    pub base_weight: Option<String>,
    /// Explicit covariate list; all remaining columns when `None`.
    pub covariates: Option<Vec<String>>,
    pub kind: TreatmentKind,
    pub delimiter: u8,
}

impl Schema {
    pub fn binary(treatment: &str) -> Self {
        Self {
            treatment: treatment.to_string(),
            outcome: None,
            base_weight: None,
            covariates: None,
            kind: TreatmentKind::Binary,
            delimiter: b',',
        }
    }

    pub fn outcome(mut self, name: &str) -> Self {
        self.outcome = Some(name.to_string());
        self
    }
}

fn parse_cell(column: &str, row: usize, raw: &str) -> Result<f64> {
    let s = raw.trim();
    let v: f64 = s.parse().map_err(|_| Error::NonNumeric {
        column: column.to_string(),
        row,
        value: s.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFinite {
            column: column.to_string(),
            row,
        });
    }
    Ok(v)
}

/// Reads a delimited text table with a header row.
pub fn load_dataset<R: Read>(source: R, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Malformed(e.to_string()))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut seen = BTreeSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let t_idx = find(&schema.treatment)?;
    let y_idx = schema.outcome.as_deref().map(find).transpose()?;
    let b_idx = schema.base_weight.as_deref().map(find).transpose()?;
    let x_idx: Vec<usize> = match &schema.covariates {
        Some(list) => {
            let mut dedup = BTreeSet::new();
            for c in list {
                if !dedup.insert(c.as_str()) {
                    return Err(Error::DuplicateColumn(c.clone()));
                }
            }
            list.iter().map(|c| find(c)).collect::<Result<_>>()?
        }
        None => (0..headers.len())
            .filter(|&j| j != t_idx && Some(j) != y_idx && Some(j) != b_idx)
            .collect(),
    };
    let names: Vec<String> = x_idx.iter().map(|&j| headers[j].clone()).collect();

    let mut x_data: Vec<f64> = Vec::new();
    let mut z = Vec::new();
    let mut y = Vec::new();
    let mut b = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Malformed(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(Error::Malformed(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let zt = record[t_idx].trim();
        let zv = parse_cell(&schema.treatment, row, zt).map_err(|_| {
            Error::InvalidTreatmentLabel {
                row,
                value: zt.to_string(),
            }
        })?;
        if zv.fract() != 0.0 {
            return Err(Error::InvalidTreatmentLabel {
                row,
                value: zt.to_string(),
            });
        }
        z.push(zv as Label);
        for &j in &x_idx {
            x_data.push(parse_cell(&headers[j], row, &record[j])?);
        }
        if let Some(j) = y_idx {
            y.push(parse_cell(&headers[j], row, &record[j])?);
        }
        if let Some(j) = b_idx {
            let v = parse_cell(&headers[j], row, &record[j])?;
            if v <= 0.0 {
                return Err(Error::NonPositiveBaseWeight(row));
            }
            b.push(v);
        }
    }
    let n = z.len();
    let x = DMatrix::from_row_slice(n, x_idx.len(), &x_data);
    let mut d = Dataset::new(x, z, schema.kind, names)?;
    if y_idx.is_some() {
        d = d.with_outcome(DVector::from_vec(y))?;
    }
    if b_idx.is_some() {
        d = d.with_base_weights(DVector::from_vec(b))?;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1() -> Dataset {
        Dataset::binary(
            DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 1.0, 2.0]),
            vec![1, 1, 0, 0],
        )
        .unwrap()
    }

    fn f2() -> Dataset {
        Dataset::binary(
            DMatrix::from_column_slice(6, 1, &[0.0, 1.0, 2.0, 0.0, 2.0, 4.0]),
            vec![1, 1, 1, 0, 0, 0],
        )
        .unwrap()
    }

    #[test]
    fn loads_small_file() {
        let text = "z,x\n1,1\n1,2\n0,1\n0,2\n";
        let d = load_dataset(text.as_bytes(), &Schema::binary("z")).unwrap();
        assert_eq!((d.n(), d.k()), (4, 1));
        assert_eq!(d.group_size(TREATED).unwrap(), 2);
        assert_eq!(d.group_size(CONTROL).unwrap(), 2);
        assert_eq!(d.column_names(), ["x"]);
    }

    #[test]
    fn rejects_label_two_in_binary_schema() {
        let text = "z,x\n1,1\n2,2\n0,1\n0,2\n";
        let err = load_dataset(text.as_bytes(), &Schema::binary("z")).unwrap_err();
        assert!(matches!(err, Error::InvalidTreatmentLabel { row: 1, .. }));
        assert!(err.to_string().contains("invalid treatment label"));
    }

    #[test]
    fn load_errors() {
        let s = Schema::binary("z");
        assert!(matches!(
            load_dataset("z,x,x\n1,1,1\n0,1,2\n".as_bytes(), &s),
            Err(Error::DuplicateColumn(_))
        ));
        assert!(matches!(
            load_dataset("t,x\n1,1\n0,1\n".as_bytes(), &s),
            Err(Error::MissingColumn(_))
        ));
        assert!(matches!(
            load_dataset("z,x\n1,a\n0,1\n".as_bytes(), &s),
            Err(Error::NonNumeric { row: 0, .. })
        ));
        assert!(matches!(
            load_dataset("z,x\n1,1\n1,2\n".as_bytes(), &s),
            Err(Error::EmptyGroup(0))
        ));
        let mut sb = Schema::binary("z");
        sb.base_weight = Some("b".into());
        assert!(matches!(
            load_dataset("z,x,b\n1,1,1\n0,2,0\n".as_bytes(), &sb),
            Err(Error::NonPositiveBaseWeight(1))
        ));
    }

    #[test]
    fn explicit_covariates_and_roles() {
        let text = "y,z,a,b,w\n1,1,0,5,1\n2,0,1,6,2\n3,1,2,7,1\n";
        let mut s = Schema::binary("z").outcome("y");
        s.base_weight = Some("w".into());
        s.covariates = Some(vec!["b".into(), "a".into()]);
        let d = load_dataset(text.as_bytes(), &s).unwrap();
        assert_eq!(d.column_names(), ["b", "a"]);
        assert_eq!(d.covariates()[(2, 0)], 7.0);
        assert_eq!(d.outcome().unwrap()[1], 2.0);
        assert_eq!(d.base_weights().unwrap()[1], 2.0);
    }

    #[test]
    fn f1_treated_moments() {
        let m = group_moments(&f1(), TREATED).unwrap();
        assert_eq!(m.mean[0], 1.5);
        assert_eq!(m.scatter[(0, 0)], 0.5);
    }

    #[test]
    fn f2_control_moments() {
        let m = group_moments(&f2(), CONTROL).unwrap();
        assert_eq!(m.mean[0], 2.0);
        assert_eq!(m.scatter[(0, 0)], 8.0);
    }

    #[test]
    fn constant_column_is_named() {
        let x = DMatrix::from_row_slice(6, 2, &[0., 3., 1., 3., 2., 3., 0., 1., 2., 2., 4., 3.]);
        let d = Dataset::binary(x, vec![1, 1, 1, 0, 0, 0]).unwrap();
        match group_moments(&d, TREATED) {
            Err(Error::ConstantColumn { group: 1, column }) => assert_eq!(column, "x2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_small_group() {
        let x = DMatrix::from_row_slice(4, 2, &[0., 3., 1., 2., 2., 3., 0., 1.]);
        let d = Dataset::binary(x, vec![1, 1, 0, 0]).unwrap();
        assert!(matches!(
            group_moments(&d, TREATED),
            Err(Error::GroupTooSmall { required: 3, .. })
        ));
    }

    #[test]
    fn weighted_moments_uniform_and_degenerate() {
        let d = f2();
        let u = weighted_moments(&d, CONTROL, &[1.0 / 3.0; 3]).unwrap();
        let m = group_moments(&d, CONTROL).unwrap();
        assert!((u.mean[0] - m.mean[0]).abs() < 1e-15);
        assert!((u.scatter[(0, 0)] - m.scatter[(0, 0)]).abs() < 1e-14);
        assert!(matches!(
            weighted_moments(&d, CONTROL, &[0.0, 1.0, 0.0]),
            Err(Error::Singular { .. })
        ));
        assert!(matches!(
            weighted_moments(&d, CONTROL, &[0.0; 3]),
            Err(Error::InvalidWeights(_))
        ));
    }

    #[test]
    fn f2_weighted_control_moments_match_direct_sums() {
        let d = f2();
        let w = [0.25, 0.25, 0.5];
        let xs = [0.0, 2.0, 4.0];
        let wm = weighted_moments(&d, CONTROL, &w).unwrap();
        let mean = (w[0] * xs[0] + w[1] * xs[1] + w[2] * xs[2]) / (w[0] + w[1] + w[2]);
        let s = 3.0
            * (w[0] * (xs[0] - mean).powi(2)
                + w[1] * (xs[1] - mean).powi(2)
                + w[2] * (xs[2] - mean).powi(2));
        assert_eq!(mean, 2.5);
        assert!((wm.mean[0] - mean).abs() < 1e-15);
        assert!((wm.scatter[(0, 0)] - s).abs() < 1e-14);
        assert!((s - 8.25).abs() < 1e-14);
    }

    #[test]
    fn profiles() {
        assert_eq!(profile(&f1(), &ProfileRequest::FullMean).unwrap().values[0], 1.5);
        assert_eq!(profile(&f2(), &ProfileRequest::TreatedMean).unwrap().values[0], 1.0);
        let c = profile(&f1(), &ProfileRequest::Custom(vec![0.0])).unwrap();
        assert_eq!(c.values[0], 0.0);
        assert_eq!(c.label(), "custom");
        assert!(matches!(
            profile(&f1(), &ProfileRequest::Custom(vec![0.0, 1.0])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn multi_valued_labels() {
        let x = DMatrix::from_column_slice(4, 1, &[1., 2., 3., 4.]);
        let d = Dataset::new(x.clone(), vec![1, 2, 3, 1], TreatmentKind::MultiValued, vec!["a".into()])
            .unwrap();
        assert_eq!(d.labels(), vec![1, 2, 3]);
        assert!(matches!(
            Dataset::new(x, vec![1, 3, 3, 1], TreatmentKind::MultiValued, vec!["a".into()]),
            Err(Error::EmptyGroup(2))
        ));
    }
}
