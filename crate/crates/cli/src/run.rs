use std::fs;
use std::path::{Path, PathBuf};

use implied_weights::dataset::{
    load_dataset, profile, CovariateProfile, Dataset, ProfileRequest, Schema, TreatmentKind,
};
use implied_weights::diagnostics::{
    balance_table, extrapolation_report, full_sample_dispersion, plot_data,
    unweighted_balance_table, weight_diagnostics, PlotKind,
};
use implied_weights::estimators::{
    dr_estimate_direct, hajek_estimate, mri_estimate_direct, sample_influence, uri_estimate_direct,
    wmri_estimate_direct, wuri_estimate_direct, EstimateResult,
};
use implied_weights::qp_oracle::certify;
use implied_weights::report::{self, num, Report, Table};
use implied_weights::simulation::{
    consistency_experiment, weight_convergence_experiment, ConvergenceDesign, Scenario,
};
use implied_weights::weights::{
    dr_weights, mri_weights, multivalued_invertibility, multivalued_weights, no_intercept_weights,
    uri_weights, wmri_weights, wuri_weights, Estimand, Method, WeightSet,
};
use implied_weights::{Error, ErrorClass, Result};
use nalgebra::DVector;
use serde_json::{json, Value};

use crate::args::{Cli, Command, DataArgs, DiagnoseArgs, SimulateArgs};

/// A failure reported on stderr as one `key=value` line.
#[derive(Debug)]
pub struct Failure {
    pub code: String,
    pub class: ErrorClass,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.code().to_string(),
            class: e.class(),
            message: e.to_string(),
        }
    }
}

impl Failure {
    pub fn line(&self) -> String {
        let msg = self
            .message
            .replace('\\', "\\\\")
            .replace('"', "\\\"")
            .replace(['\n', '\r'], " ");
        format!(
            "error code={} class={} message=\"{msg}\"",
            self.code,
            self.class.as_str()
        )
    }
}

struct Formats {
    json: bool,
    csv: bool,
}

fn formats(list: &[String]) -> Result<Formats> {
    let mut f = Formats {
        json: false,
        csv: false,
    };
    for s in list {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => f.json = true,
            "csv" => f.csv = true,
            other => return Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
    Ok(f)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

struct Output {
    dir: PathBuf,
    formats: Formats,
    delimiter: u8,
}

impl Output {
    fn new(dir: &Path, list: &[String], delimiter: u8) -> Result<Self> {
        let formats = formats(list)?;
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            formats,
            delimiter,
        })
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))
    }

    fn table(&self, name: &str, t: &Table) -> Result<()> {
        if self.formats.csv {
            self.write(name, &t.to_string(self.delimiter))?;
        }
        Ok(())
    }

    fn report(&self, r: &Report) -> Result<()> {
        if self.formats.json {
            self.write("report.json", &r.to_json_string())?;
        }
        Ok(())
    }
}

fn delimiter(c: char) -> Result<u8> {
    if c.is_ascii() && c != '"' && c != '\n' {
        Ok(c as u8)
    } else {
        Err(Error::Config(format!("unsupported delimiter '{c}'")))
    }
}

fn method(a: &DataArgs) -> Result<Method> {
    Method::parse(&a.method).ok_or_else(|| Error::Config(format!("unknown method '{}'", a.method)))
}

fn config_echo(a: &DataArgs) -> Value {
    json!({
        "input": a.input.display().to_string(),
        "treatment_col": a.treatment_col,
        "outcome_col": a.outcome_col,
        "base_weight_col": a.base_weight_col,
        "covariates": a.covariates,
        "method": a.method,
        "estimand": a.estimand,
        "profile": a.profile,
        "target": a.target.as_ref().map(|t| t.iter().map(|v| num(*v)).collect::<Vec<_>>()),
        "active_level": a.active_level,
        "normalize_base": a.normalize_base,
        "delimiter": a.delimiter.to_string(),
        "format": a.format,
    })
}

fn load(a: &DataArgs, m: Method) -> Result<Dataset> {
    let kind = match m {
        Method::MultiUri | Method::MultiMri => TreatmentKind::MultiValued,
        _ => TreatmentKind::Binary,
    };
    let schema = Schema {
        treatment: a.treatment_col.clone(),
        outcome: a.outcome_col.clone(),
        base_weight: a.base_weight_col.clone(),
        covariates: a.covariates.clone(),
        kind,
        delimiter: delimiter(a.delimiter)?,
    };
    let file = fs::File::open(&a.input).map_err(|e| io_err(&a.input, e))?;
    load_dataset(std::io::BufReader::new(file), &schema)
}

fn parse_estimand(a: &DataArgs) -> Result<Option<Estimand>> {
    let Some(s) = a.estimand.as_deref() else {
        return Ok(None);
    };
    let e = match s.to_ascii_lowercase().as_str() {
        "ate" => Estimand::Ate,
        "att" => Estimand::Att,
        "atc" => Estimand::Atc,
        "cate" => Estimand::Cate,
        _ => return Err(Error::UnsupportedEstimand(s.to_string())),
    };
    Ok(Some(e))
}

fn mismatch(m: Method, e: impl ToString) -> Error {
    Error::MethodEstimandMismatch {
        method: m.to_string(),
        estimand: e.to_string(),
    }
}

/// Target profile for the per-group methods.
fn target_profile(d: &Dataset, a: &DataArgs, m: Method, e: Option<Estimand>) -> Result<CovariateProfile> {
    let request = match a.profile.as_deref().map(str::to_ascii_lowercase).as_deref() {
        Some("full-mean") => ProfileRequest::FullMean,
        Some("treated-mean") => ProfileRequest::TreatedMean,
        Some("control-mean") => ProfileRequest::ControlMean,
        Some("custom") => ProfileRequest::Custom(
            a.target
                .clone()
                .ok_or_else(|| Error::Config("--profile custom needs --target".into()))?,
        ),
        Some(other) => return Err(Error::Config(format!("unknown profile '{other}'"))),
        None => match (&a.target, e) {
            (Some(t), _) => ProfileRequest::Custom(t.clone()),
            (None, None | Some(Estimand::Ate)) => ProfileRequest::FullMean,
            (None, Some(Estimand::Att)) => ProfileRequest::TreatedMean,
            (None, Some(Estimand::Atc)) => ProfileRequest::ControlMean,
            (None, Some(Estimand::Cate)) => {
                return Err(Error::Config("the CATE needs --target".into()))
            }
            (None, Some(other)) => return Err(mismatch(m, other)),
        },
    };
    if a.target.is_some() && !matches!(request, ProfileRequest::Custom(_)) {
        return Err(Error::Config("--target is only used with a custom profile".into()));
    }
    profile(d, &request)
}

fn base(d: &Dataset, normalize: bool) -> Result<DVector<f64>> {
    let b = d.base_weights().ok_or(Error::MissingBaseWeights)?.clone();
    if !normalize {
        return Ok(b);
    }
    let mut out = b.clone();
    for g in d.labels() {
        let rows = d.group_rows(g)?;
        let s: f64 = implied_weights::numeric::compensated_sum(rows.iter().map(|&i| b[i]));
        for &i in rows {
            out[i] = b[i] / s;
        }
    }
    Ok(out)
}

fn build_weights(d: &Dataset, a: &DataArgs, m: Method) -> Result<WeightSet> {
    let e = parse_estimand(a)?;
    let per_group = matches!(m, Method::Mri | Method::Wmri | Method::NoInterceptMri);
    if !per_group {
        if let Some(e) = e {
            if e != Estimand::Ate {
                return Err(Error::UnsupportedEstimand(format!("{e} under {m}")));
            }
        }
        if a.profile.is_some() || a.target.is_some() {
            return Err(Error::Config(format!("{m} does not take a target profile")));
        }
    }
    if a.active_level.is_some() && !matches!(m, Method::MultiUri | Method::MultiMri) {
        return Err(Error::Config("--active-level is for multi-valued methods".into()));
    }
    let w = match m {
        Method::Uri => uri_weights(d)?,
        Method::Wuri => wuri_weights(d, &base(d, a.normalize_base)?)?,
        Method::Dr => dr_weights(d, &base(d, a.normalize_base)?)?,
        Method::NoInterceptUri => no_intercept_weights(d, m, None)?,
        Method::MultiUri | Method::MultiMri => {
            let v = a
                .active_level
                .ok_or_else(|| Error::Config("multi-valued methods need --active-level".into()))?;
            multivalued_weights(d, v, m)?
        }
        Method::Mri | Method::Wmri | Method::NoInterceptMri => {
            let x = target_profile(d, a, m, e)?;
            let w = match m {
                Method::Mri => mri_weights(d, &x)?,
                Method::Wmri => wmri_weights(d, &base(d, a.normalize_base)?, &x)?,
                _ => no_intercept_weights(d, m, Some(&x))?,
            };
            if let Some(e) = e {
                if e != w.estimand && m != Method::NoInterceptMri {
                    return Err(mismatch(m, e));
                }
            }
            w
        }
    };
    Ok(w)
}

fn direct_estimate(d: &Dataset, w: &WeightSet, a: &DataArgs) -> Result<Option<EstimateResult>> {
    let r = match w.method {
        Method::Uri => uri_estimate_direct(d)?,
        Method::Mri => mri_estimate_direct(d, w.estimand, Some(&w.target))?,
        Method::Wuri => wuri_estimate_direct(d, &base(d, a.normalize_base)?)?,
        Method::Wmri => wmri_estimate_direct(d, &base(d, a.normalize_base)?, &w.target)?,
        Method::Dr => dr_estimate_direct(d, &base(d, a.normalize_base)?)?,
        _ => return Ok(None),
    };
    Ok(Some(r))
}

struct Prepared {
    data: Dataset,
    weights: WeightSet,
    report: Report,
    out: Output,
}

fn prepare(command: &str, a: &DataArgs) -> Result<Prepared> {
    let m = method(a)?;
    let out = Output::new(&a.out_dir, &a.format, delimiter(a.delimiter)?)?;
    let data = load(a, m)?;
    let weights = build_weights(&data, a, m)?;
    let mut report = Report::new(command, config_echo(a));
    report.section("weights", report::weight_set_json(&data, &weights));
    if weights.is_multivalued() {
        report.section(
            "invertibility",
            report::invertibility_json(&multivalued_invertibility(&data)?),
        );
    }
    out.table("weights.csv", &report::weight_table(&data, &weights))?;
    Ok(Prepared {
        data,
        weights,
        report,
        out,
    })
}

fn weights_cmd(a: &DataArgs) -> Result<()> {
    let p = prepare("weights", a)?;
    p.out.report(&p.report)
}

fn estimate_cmd(a: &DataArgs) -> Result<()> {
    if a.outcome_col.is_none() {
        return Err(Error::Config("estimate requires --outcome-col".into()));
    }
    let mut p = prepare("estimate", a)?;
    let est = hajek_estimate(&p.data, &p.weights)?;
    p.report.section("estimate", report::estimate_json(&est));
    if let Some(direct) = direct_estimate(&p.data, &p.weights, a)? {
        p.report.section("direct_estimate", report::estimate_json(&direct));
    }
    p.out.report(&p.report)
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn diagnose_cmd(a: &DiagnoseArgs) -> Result<()> {
    let mut p = prepare("diagnose", &a.data)?;
    let (d, w) = (&p.data, &p.weights);
    p.report
        .section("balance", report::balance_json(&balance_table(d, w, &w.target)?))
        .section(
            "balance_unweighted",
            report::balance_json(&unweighted_balance_table(d, w, &w.target)?),
        )
        .section(
            "weight_diagnostics",
            report::weight_diagnostics_json(&weight_diagnostics(d, w)?),
        )
        .section(
            "extrapolation",
            report::extrapolation_json(&extrapolation_report(d, w, a.extreme_multiple)?),
        )
        .section("full_sample_dispersion", num(full_sample_dispersion(w)));
    let influence_method = match (w.method, w.estimand) {
        (Method::Uri, _) => Some(Method::Uri),
        (Method::Mri, Estimand::Ate) => Some(Method::Mri),
        _ => None,
    };
    let influence = match (influence_method, d.has_outcome()) {
        (Some(m), true) => match sample_influence(d, m) {
            Ok(v) => report::influence_json(&v),
            Err(e) if e.class() == ErrorClass::Numerical || e.class() == ErrorClass::Data => {
                json!({ "unavailable": e.code() })
            }
            Err(e) => return Err(e),
        },
        (Some(_), false) => json!({ "unavailable": "missing_outcome" }),
        (None, _) => json!({ "unavailable": "unsupported_method" }),
    };
    let influence_ok = influence.get("unavailable").is_none();
    p.report.section("influence", influence);
    p.out.table("love.csv", &report::plot_table(&plot_data(d, w, PlotKind::Love)?))?;
    p.out.table("density.csv", &report::plot_table(&plot_data(d, w, PlotKind::Density)?))?;
    for (j, name) in d.column_names().iter().enumerate() {
        let t = plot_data(d, w, PlotKind::Bubble { covariate: j })?;
        p.out.table(&format!("bubble_{}.csv", file_safe(name)), &report::plot_table(&t))?;
    }
    if influence_ok {
        p.out.table(
            "influence.csv",
            &report::plot_table(&plot_data(d, w, PlotKind::Influence)?),
        )?;
    }
    p.out.report(&p.report)
}

fn qp_check_cmd(a: &DataArgs) -> std::result::Result<(), Failure> {
    let mut p = prepare("qp-check", a)?;
    let c = certify(&p.weights, &p.data)?;
    p.report.section("certification", report::certification_json(&c));
    p.out.report(&p.report)?;
    if c.passed {
        Ok(())
    } else {
        Err(Failure {
            code: "certification_failed".into(),
            class: ErrorClass::Numerical,
            message: format!(
                "closed-form weights differ from the KKT solution by {:.3e}",
                c.max_discrepancy()
            ),
        })
    }
}

fn simulate_cmd(a: &SimulateArgs) -> Result<()> {
    let out = Output::new(&a.out_dir, &a.format, b',')?;
    let all = a.scenario.iter().any(|s| s == "all");
    let mut designs = Vec::new();
    let mut scenarios = Vec::new();
    if all {
        designs.extend(ConvergenceDesign::ALL);
        scenarios.extend(Scenario::ALL);
    } else {
        for s in &a.scenario {
            if let Some(d) = ConvergenceDesign::parse(s) {
                designs.push(d);
            } else if let Some(sc) = Scenario::parse(s) {
                scenarios.push(sc);
            } else {
                return Err(Error::Config(format!("unknown scenario '{s}'")));
            }
        }
    }
    let mut report = Report::new(
        "simulate",
        json!({
            "scenario": a.scenario,
            "n_grid": a.n_grid,
            "reps": a.reps,
            "seed": a.seed,
            "format": a.format,
        }),
    );
    let mut convergence = Vec::new();
    for d in designs {
        let r = weight_convergence_experiment(&d.config(a.seed), &d.checks(), &a.n_grid, a.reps)?;
        let mut v = report::simulation_json(&r);
        v["design"] = json!(d.name());
        convergence.push(v);
        out.table(
            &format!("{}.csv", d.name()),
            &report::simulation_records_table(&r),
        )?;
    }
    if !convergence.is_empty() {
        report.section("weight_convergence", Value::Array(convergence));
    }
    if !scenarios.is_empty() {
        let r = consistency_experiment(&scenarios, &a.n_grid, a.reps, a.seed)?;
        report.section("consistency", report::simulation_json(&r));
        out.table("consistency.csv", &report::simulation_records_table(&r))?;
    }
    out.report(&report)
}

pub fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    match &cli.command {
        Command::Weights(a) => weights_cmd(a)?,
        Command::Estimate(a) => estimate_cmd(a)?,
        Command::Diagnose(a) => diagnose_cmd(a)?,
        Command::QpCheck(a) => qp_check_cmd(a)?,
        Command::Simulate(a) => simulate_cmd(a)?,
    }
    Ok(())
}
