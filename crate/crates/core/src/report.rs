//! Serialization of results: a JSON report with sorted keys and
//! delimiter-separated long-format tables. Numbers are rendered at 12
//! significant digits so that runs can be diffed byte for byte.

use std::io::{Read, Write};

use nalgebra::DVector;
use serde_json::{json, Map, Value};

use crate::dataset::{CovariateProfile, Dataset, ProfileKind};
use crate::diagnostics::{
    BalanceTable, Cell, ExtrapolationReport, PlotTable, WeightDiagnostics, ASMD_CONVENTION,
};
use crate::error::{Error, Result};
use crate::estimators::{EstimateResult, EstimateSource, InfluenceVector};
use crate::qp_oracle::Certification;
use crate::simulation::SimulationReport;
use crate::weights::{Estimand, GroupInvertibility, Method, WeightSet};

pub const REPORT_VERSION: &str = concat!("implied-weights ", env!("CARGO_PKG_VERSION"));

/// Rounds to 12 significant digits; non-finite values pass through.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Text form used in tables: the shortest representation of the rounded
/// value, in exponent form outside [1e-4, 1e15), `NA` for non-finite values.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return "NA".into();
    }
    let r = round12(x);
    if r == 0.0 || (1e-4..1e15).contains(&r.abs()) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round12(x))
    } else {
        Value::Null
    }
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// Structured report: metadata plus named sections.
#[derive(Debug, Clone)]
pub struct Report {
    root: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        let mut root = Map::new();
        root.insert("version".into(), json!(REPORT_VERSION));
        root.insert("command".into(), json!(command));
        root.insert("config".into(), config);
        Self { root }
    }

    pub fn section(&mut self, name: &str, value: Value) -> &mut Self {
        self.root.insert(name.into(), value);
        self
    }

    pub fn value(&self) -> Value {
        Value::Object(self.root.clone())
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.root).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn profile_json(p: &CovariateProfile, names: &[String]) -> Value {
    let mut values = Map::new();
    for (name, v) in names.iter().zip(p.values.iter()) {
        values.insert(name.clone(), num(*v));
    }
    json!({ "kind": p.label(), "values": values })
}

pub fn weight_set_json(d: &Dataset, w: &WeightSet) -> Value {
    let sums: Vec<Value> = w
        .group_sums
        .iter()
        .map(|s| json!({ "group": s.group, "sum": num(s.sum) }))
        .collect();
    json!({
        "method": w.method.as_str(),
        "estimand": w.estimand.as_string(),
        "n": d.n(),
        "target": profile_json(&w.target, d.column_names()),
        "group_sums": sums,
        "base_weights_supplied": w.base.is_some(),
    })
}

pub fn estimate_json(e: &EstimateResult) -> Value {
    let arms: Vec<Value> = e
        .arms
        .iter()
        .map(|a| {
            json!({
                "group": a.group,
                "weighted_mean": num(a.weighted_mean),
                "sample_bounded": a.sample_bounded,
            })
        })
        .collect();
    json!({
        "method": e.method.as_str(),
        "estimand": e.estimand.as_string(),
        "source": match e.source { EstimateSource::Weights => "weights", EstimateSource::Direct => "direct" },
        "value": num(e.value),
        "arms": arms,
    })
}

pub fn balance_json(t: &BalanceTable) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            json!({
                "covariate": r.name,
                "asmd": opt_num(r.asmd),
                "tasmd_treated": opt_num(r.tasmd_treated),
                "tasmd_control": opt_num(r.tasmd_control),
            })
        })
        .collect();
    json!({
        "asmd_denominator": ASMD_CONVENTION,
        "tasmd_reference": t.reference.as_str(),
        "target_kind": t.target.label(),
        "rows": rows,
    })
}

pub fn weight_diagnostics_json(w: &WeightDiagnostics) -> Value {
    let groups: Vec<Value> = w
        .groups
        .iter()
        .map(|g| {
            json!({
                "group": g.group,
                "size": g.size,
                "sum": num(g.sum),
                "ess": opt_num(g.ess),
                "ess_ratio": opt_num(g.ess.map(|e| e / g.size as f64)),
                "variance": num(g.variance),
                "closed_form_variance": opt_num(g.closed_form_variance),
                "variance_discrepancy": opt_num(g.variance_discrepancy),
                "negative_count": g.negative_count,
                "min": num(g.min),
                "max": num(g.max),
                "sum_abs": num(g.sum_abs),
                "sample_bounded": g.sample_bounded,
            })
        })
        .collect();
    json!({ "method": w.method.as_str(), "groups": groups })
}

pub fn extrapolation_json(e: &ExtrapolationReport) -> Value {
    let flags: Vec<Value> = e
        .flags
        .iter()
        .map(|f| {
            json!({
                "row": f.row,
                "group": f.group,
                "weight": num(f.weight),
                "negative": f.negative,
                "extreme": f.extreme,
            })
        })
        .collect();
    let groups: Vec<Value> = e
        .groups
        .iter()
        .map(|g| {
            json!({
                "group": g.group,
                "guaranteed": g.guaranteed,
                "weighted_mean": opt_num(g.weighted_mean),
                "outcome_min": opt_num(g.outcome_min),
                "outcome_max": opt_num(g.outcome_max),
                "sample_bounded": g.sample_bounded,
            })
        })
        .collect();
    json!({ "extreme_multiple": num(e.extreme_multiple), "flags": flags, "groups": groups })
}

pub fn influence_json(v: &InfluenceVector) -> Value {
    let scaled = v.scaled_abs();
    let (arg, max) = scaled
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if *x > acc.1 { (i, *x) } else { acc });
    json!({
        "method": v.method.as_str(),
        "n": v.sic.len(),
        "max_scaled_abs": num(max),
        "argmax": arg,
    })
}

pub fn certification_json(c: &Certification) -> Value {
    let groups: Vec<Value> = c
        .groups
        .iter()
        .map(|g| {
            json!({
                "group": g.group,
                "max_discrepancy": num(g.max_discrepancy),
                "kkt_residual": num(g.kkt_residual),
                "problem_scale": num(g.problem_scale),
                "passed": g.passed,
            })
        })
        .collect();
    json!({
        "method": c.method.as_str(),
        "tolerance": num(c.tolerance),
        "max_discrepancy": num(c.max_discrepancy()),
        "passed": c.passed,
        "status": if c.passed { "PASS" } else { "FAIL" },
        "groups": groups,
    })
}

pub fn invertibility_json(v: &[GroupInvertibility]) -> Value {
    Value::Array(
        v.iter()
            .map(|g| {
                json!({
                    "group": g.group,
                    "size": g.size,
                    "reciprocal_condition": num(g.reciprocal_condition),
                    "invertible": g.invertible,
                })
            })
            .collect(),
    )
}

pub fn simulation_json(r: &SimulationReport) -> Value {
    let summaries: Vec<Value> = r
        .summaries
        .iter()
        .map(|s| {
            json!({
                "label": s.label,
                "n": s.n,
                "metric": s.metric,
                "count": s.count,
                "mean": num(s.mean),
                "median": num(s.median),
                "q1": num(s.q1),
                "q3": num(s.q3),
            })
        })
        .collect();
    let truths: Vec<Value> = r
        .truths
        .iter()
        .map(|t| json!({ "label": t.label, "ate": num(t.ate), "limit": num(t.limit) }))
        .collect();
    json!({
        "experiment": r.experiment,
        "base_seed": r.base_seed,
        "replications": r.replications,
        "n_grid": r.n_grid,
        "summaries": summaries,
        "truths": truths,
        "notes": r.notes,
    })
}

/// A rectangular table of already-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write<W: Write>(&self, out: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let io = |e: csv::Error| Error::Io {
            path: "<table>".into(),
            message: e.to_string(),
        };
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<table>".into(),
            message: e.to_string(),
        })
    }

    pub fn to_string(&self, delimiter: u8) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf, delimiter).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 table")
    }
}

pub const TARGET_PREFIX: &str = "target:";

/// Weight table: one row per unit with method, estimand and the target
/// profile repeated inline.
pub fn weight_table(d: &Dataset, w: &WeightSet) -> Table {
    let mut header: Vec<String> = ["row", "group", "weight", "method", "estimand", "target_kind"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(d.column_names().iter().map(|c| format!("{TARGET_PREFIX}{c}")));
    let target: Vec<String> = w.target.values.iter().map(|v| fmt12(*v)).collect();
    let rows = (0..d.n())
        .map(|i| {
            let mut r = vec![
                i.to_string(),
                d.treatment()[i].to_string(),
                fmt12(w.weights[i]),
                w.method.as_str().to_string(),
                w.estimand.as_string(),
                w.target.label(),
            ];
            r.extend(target.iter().cloned());
            r
        })
        .collect();
    Table { header, rows }
}

fn parse_estimand(s: &str) -> Option<Estimand> {
    match s {
        "ATE" => Some(Estimand::Ate),
        "ATT" => Some(Estimand::Att),
        "ATC" => Some(Estimand::Atc),
        "CATE" => Some(Estimand::Cate),
        _ => {
            let level = s.strip_prefix("ATE_")?.strip_suffix('1')?.parse().ok()?;
            Some(Estimand::AteV1 { level })
        }
    }
}

/// Reads a table written by [`weight_table`] back into a weight set
/// aligned with `d`.
pub fn read_weight_table<R: Read>(source: R, d: &Dataset, delimiter: u8) -> Result<WeightSet> {
    let malformed = |m: String| Error::Malformed(m);
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_reader(source);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| malformed(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let (c_row, c_group, c_w, c_m, c_e) =
        (col("row")?, col("group")?, col("weight")?, col("method")?, col("estimand")?);
    let target_cols: Vec<usize> = d
        .column_names()
        .iter()
        .map(|c| col(&format!("{TARGET_PREFIX}{c}")))
        .collect::<Result<_>>()?;
    let mut weights = DVector::from_element(d.n(), f64::NAN);
    let mut method = None;
    let mut estimand = None;
    let mut target = None;
    let mut count = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let num_at = |j: usize| -> Result<f64> {
            field(j).parse().map_err(|_| Error::NonNumeric {
                column: header[j].clone(),
                row: line,
                value: field(j).into(),
            })
        };
        let row: usize = field(c_row)
            .parse()
            .map_err(|_| malformed(format!("bad row index on line {line}")))?;
        if row >= d.n() || d.treatment()[row].to_string() != field(c_group) {
            return Err(malformed(format!("row {row} does not match the dataset")));
        }
        weights[row] = num_at(c_w)?;
        method.get_or_insert(field(c_m).to_string());
        estimand.get_or_insert(field(c_e).to_string());
        if target.is_none() {
            let v: Vec<f64> = target_cols.iter().map(|&j| num_at(j)).collect::<Result<_>>()?;
            target = Some(DVector::from_vec(v));
        }
        count += 1;
    }
    if count != d.n() || weights.iter().any(|w| w.is_nan()) {
        return Err(Error::LengthMismatch {
            what: "weight table rows".into(),
            expected: d.n(),
            got: count,
        });
    }
    let method = method
        .as_deref()
        .and_then(Method::parse)
        .ok_or_else(|| malformed("unknown method".into()))?;
    let estimand = estimand
        .as_deref()
        .and_then(parse_estimand)
        .ok_or_else(|| malformed("unknown estimand".into()))?;
    let target = CovariateProfile::new(target.expect("rows present"), ProfileKind::Custom);
    WeightSet::new(d, method, estimand, weights, target, None)
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Text(s) => s.clone(),
        Cell::Int(i) => i.to_string(),
        Cell::Num(x) => fmt12(*x),
        Cell::Missing => "NA".into(),
    }
}

pub fn plot_table(p: &PlotTable) -> Table {
    Table {
        header: p.columns.clone(),
        rows: p.rows.iter().map(|r| r.iter().map(cell_text).collect()).collect(),
    }
}

fn opt_text(x: Option<f64>) -> String {
    x.map_or("NA".into(), fmt12)
}

pub fn simulation_records_table(r: &SimulationReport) -> Table {
    Table {
        header: ["label", "n", "replication", "stream", "sup_weight_error", "estimate", "bias"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: r
            .records
            .iter()
            .map(|x| {
                vec![
                    x.label.clone(),
                    x.n.to_string(),
                    x.replication.to_string(),
                    x.stream.to_string(),
                    opt_text(x.sup_weight_error),
                    opt_text(x.estimate),
                    opt_text(x.bias),
                ]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(-0.0), "0");
        assert_eq!(fmt12(123456789.123456789), "123456789.123");
        assert_eq!(fmt12(f64::NAN), "NA");
        assert_eq!(fmt12(1.404333387431e-16), "1.40433338743e-16");
        assert_eq!(num(f64::INFINITY), Value::Null);
    }

    #[test]
    fn empty_report_has_metadata_only() {
        let r = Report::new("diagnose", json!({}));
        let v = r.value();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["command", "config", "version"]);
    }

    #[test]
    fn weight_table_round_trip() {
        let d = Dataset::binary(
            DMatrix::from_column_slice(6, 1, &[0.0, 1.0, 2.0, 0.0, 2.0, 4.0]),
            vec![1, 1, 1, 0, 0, 0],
        )
        .unwrap();
        let w = crate::weights::uri_weights(&d).unwrap();
        let text = weight_table(&d, &w).to_string(b',');
        let back = read_weight_table(text.as_bytes(), &d, b',').unwrap();
        assert_eq!(back.method, Method::Uri);
        assert_eq!(back.estimand, Estimand::Ate);
        assert!((back.weights - &w.weights).amax() < 1e-12);
        assert!((back.target.values[0] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn estimand_names_parse() {
        for e in [Estimand::Ate, Estimand::Att, Estimand::Atc, Estimand::Cate, Estimand::AteV1 { level: 3 }] {
            assert_eq!(parse_estimand(&e.as_string()), Some(e));
        }
    }
}
