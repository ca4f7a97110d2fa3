//! Monte Carlo experiments on the large-sample behavior of implied weights
//! and regression estimators.
//!
//! Replications are independent work items run in parallel. Each one draws
//! from its own ChaCha8 stream, selected from `(item, grid index,
//! replication)`, and results are collected in a fixed order, so reports do
//! not depend on the thread count.

mod dgp;
mod quadrature;

pub use dgp::{
    generate, linear_propensity_coefficients, CovariateLaw, Dgp, DgpConfig, OutcomeKind,
    OutcomeModel, PropensityKind, Simulated, Truth, MAX_RETRIES,
};
pub use quadrature::{gauss_legendre, integrate_box};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{profile, Dataset, Label, ProfileRequest, CONTROL, TREATED};
use crate::error::{Error, Result};
use crate::estimators::hajek_estimate;
use crate::weights::{mri_weights, uri_weights, Method, WeightSet};

pub const DEFAULT_N_GRID: [usize; 3] = [1000, 4000, 16000];
pub const DEFAULT_REPLICATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub label: String,
    pub n: usize,
    pub replication: usize,
    /// ChaCha8 stream the replication drew from.
    pub stream: u64,
    pub sup_weight_error: Option<f64>,
    pub estimate: Option<f64>,
    pub bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub label: String,
    pub n: usize,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Population quantities an experiment label is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthEntry {
    pub label: String,
    pub ate: f64,
    /// Probability limit of the estimator; equals `ate` unless the label is
    /// a negative control.
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub experiment: String,
    pub base_seed: u64,
    pub replications: usize,
    pub n_grid: Vec<usize>,
    pub records: Vec<ReplicationRecord>,
    pub summaries: Vec<Summary>,
    pub truths: Vec<TruthEntry>,
    pub notes: Vec<String>,
}

impl SimulationReport {
    pub fn summary(&self, label: &str, n: usize, metric: &str) -> Option<&Summary> {
        self.summaries
            .iter()
            .find(|s| s.label == label && s.n == n && s.metric == metric)
    }

    pub fn truth(&self, label: &str) -> Option<&TruthEntry> {
        self.truths.iter().find(|t| t.label == label)
    }
}

/// Linear-interpolation quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(records: &[ReplicationRecord], n_grid: &[usize]) -> Vec<Summary> {
    let mut labels: Vec<&str> = Vec::new();
    for r in records {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    let metrics: [(&str, fn(&ReplicationRecord) -> Option<f64>); 3] = [
        ("sup_weight_error", |r| r.sup_weight_error),
        ("estimate", |r| r.estimate),
        ("bias", |r| r.bias),
    ];
    let mut out = Vec::new();
    for label in labels {
        for &n in n_grid {
            for (metric, get) in metrics {
                let mut v: Vec<f64> = records
                    .iter()
                    .filter(|r| r.label == label && r.n == n)
                    .filter_map(get)
                    .collect();
                if v.is_empty() {
                    continue;
                }
                v.sort_by(f64::total_cmp);
                out.push(Summary {
                    label: label.to_string(),
                    n,
                    metric: metric.to_string(),
                    count: v.len(),
                    mean: crate::numeric::compensated_sum(v.iter().copied()) / v.len() as f64,
                    median: quantile(&v, 0.5),
                    q1: quantile(&v, 0.25),
                    q3: quantile(&v, 0.75),
                });
            }
        }
    }
    out
}

fn stream_id(item: usize, grid: usize, rep: usize) -> u64 {
    ((item as u64) << 40) | ((grid as u64) << 20) | rep as u64
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_grid(n_grid: &[usize], replications: usize) -> Result<()> {
    if n_grid.is_empty() || replications == 0 {
        return Err(Error::Config("n grid and replication count must be non-empty".into()));
    }
    if replications >= 1 << 20 || n_grid.len() >= 1 << 20 {
        return Err(Error::Config("too many replications or grid points".into()));
    }
    Ok(())
}

fn weights_for(d: &Dataset, method: Method) -> Result<WeightSet> {
    match method {
        Method::Uri => uri_weights(d),
        Method::Mri => mri_weights(d, &profile(d, &ProfileRequest::FullMean)?),
        m => Err(Error::Config(format!("simulation supports URI and MRI, not {m}"))),
    }
}

/// Scaled weights of one group compared with inverse probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvergenceCheck {
    pub method: Method,
    pub group: Label,
}

impl ConvergenceCheck {
    pub fn label(&self) -> String {
        let side = if self.group == TREATED { "treated" } else { "control" };
        format!("{} {side}", self.method)
    }
}

/// `sup_i |n w_i - 1/pi_g(X_i)|` over group `g`, with `pi_1 = e`, `pi_0 = 1 - e`.
pub fn sup_weight_error(s: &Simulated, w: &WeightSet, group: Label) -> Result<f64> {
    let n = s.data.n() as f64;
    let mut worst = 0.0_f64;
    for &i in s.data.group_rows(group)? {
        let e = s.truth.propensities[i];
        let pi = if group == TREATED { e } else { 1.0 - e };
        worst = worst.max((n * w.weights[i] - 1.0 / pi).abs());
    }
    Ok(worst)
}

/// Tracks how far scaled implied weights are from inverse probability
/// weights as `n` grows.
pub fn weight_convergence_experiment(
    config: &DgpConfig,
    checks: &[ConvergenceCheck],
    n_grid: &[usize],
    replications: usize,
) -> Result<SimulationReport> {
    check_grid(n_grid, replications)?;
    if checks.is_empty() {
        return Err(Error::Config("no convergence checks requested".into()));
    }
    let dgp = Dgp::new(config.clone())?;
    let items: Vec<(usize, usize)> = (0..n_grid.len())
        .flat_map(|g| (0..replications).map(move |r| (g, r)))
        .collect();
    let per_item: Vec<Vec<ReplicationRecord>> = items
        .par_iter()
        .map(|&(g, rep)| {
            let stream = stream_id(0, g, rep);
            let mut rng = rng_for(config.seed, stream);
            let s = dgp.sample(n_grid[g], &mut rng)?;
            checks
                .iter()
                .map(|c| {
                    let w = weights_for(&s.data, c.method)?;
                    Ok(ReplicationRecord {
                        label: c.label(),
                        n: n_grid[g],
                        replication: rep,
                        stream,
                        sup_weight_error: Some(sup_weight_error(&s, &w, c.group)?),
                        estimate: None,
                        bias: None,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let records: Vec<ReplicationRecord> = per_item.into_iter().flatten().collect();
    let mut notes = vec![format!(
        "propensity {:?} with intercept {:.12e}; covariate law {:?}",
        config.propensity,
        dgp.intercept(),
        config.law
    )];
    if config.law == CovariateLaw::EqualScaledVariance {
        notes.push(
            "covariates drawn group by group after treatment, so that p^2 var(X|Z=1) = (1-p)^2 var(X|Z=0)"
                .into(),
        );
    }
    Ok(SimulationReport {
        experiment: "weight_convergence".into(),
        base_seed: config.seed,
        replications,
        n_grid: n_grid.to_vec(),
        summaries: summarize(&records, n_grid),
        records,
        truths: Vec::new(),
        notes,
    })
}

/// Preset designs for [`weight_convergence_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceDesign {
    /// Inverse-linear propensity on a two-dimensional box.
    InverseLinear,
    /// Logistic propensity; no linear-regression weight targets it.
    Misspecified,
    /// Constant propensity; both groups' weights converge.
    Constant,
    /// Group-conditional law with equal scaled variances and an
    /// inverse-linear propensity; pooled weights converge too.
    EqualScaledVariance,
}

impl ConvergenceDesign {
    pub const ALL: [ConvergenceDesign; 4] = [
        ConvergenceDesign::InverseLinear,
        ConvergenceDesign::Misspecified,
        ConvergenceDesign::Constant,
        ConvergenceDesign::EqualScaledVariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConvergenceDesign::InverseLinear => "weights_inverse_linear",
            ConvergenceDesign::Misspecified => "weights_misspecified",
            ConvergenceDesign::Constant => "weights_constant",
            ConvergenceDesign::EqualScaledVariance => "weights_equal_scaled_variance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }

    pub fn config(self, seed: u64) -> DgpConfig {
        let outcome2 = OutcomeModel::linear(1.0, vec![1.0, -1.0], 2.0);
        let outcome1 = OutcomeModel::linear(1.0, vec![1.0], 2.0);
        match self {
            ConvergenceDesign::InverseLinear => {
                DgpConfig::new(PropensityKind::InverseLinear, vec![1.5, 1.0], 0.4, outcome2)
            }
            ConvergenceDesign::Misspecified => {
                DgpConfig::new(PropensityKind::Logistic, vec![2.5, 1.5], 0.5, outcome2)
            }
            ConvergenceDesign::Constant => {
                DgpConfig::new(PropensityKind::Constant, vec![0.0, 0.0], 0.3, outcome2)
            }
            ConvergenceDesign::EqualScaledVariance => {
                DgpConfig::new(PropensityKind::InverseLinear, vec![0.0], 0.47, outcome1)
                    .law(CovariateLaw::EqualScaledVariance)
            }
        }
        .seed(seed)
    }

    pub fn checks(self) -> Vec<ConvergenceCheck> {
        let c = |method, group| ConvergenceCheck { method, group };
        match self {
            ConvergenceDesign::InverseLinear | ConvergenceDesign::Misspecified => {
                vec![c(Method::Mri, TREATED)]
            }
            ConvergenceDesign::Constant => vec![c(Method::Mri, TREATED), c(Method::Mri, CONTROL)],
            ConvergenceDesign::EqualScaledVariance => {
                vec![c(Method::Mri, TREATED), c(Method::Uri, TREATED)]
            }
        }
    }
}

/// Data-generating regimes under which a regression estimator is claimed
/// consistent for the ATE, plus one negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// MRI: linear control mean, inverse-linear `e`.
    MriInverseLinear,
    /// MRI: linear treated mean, inverse-linear `1 - e`.
    MriComplementInverseLinear,
    /// MRI: both means linear.
    MriLinearOutcomes,
    /// URI and MRI: constant propensity, nonlinear means.
    ConstantPropensity,
    /// MRI: constant effect, linear `e`, equal scaled variances.
    MriConstantEffectLinearPropensity,
    /// URI: linear control mean, inverse-linear `e`, equal scaled variances.
    UriInverseLinear,
    /// URI: linear treated mean, inverse-linear `1 - e`, equal scaled
    /// variances.
    UriComplementInverseLinear,
    /// URI: both means linear, equal scaled variances.
    UriLinearOutcomes,
    /// URI: both means linear with a constant effect.
    UriLinearConstantEffect,
    /// URI: constant effect, linear `e`.
    UriConstantEffectLinearPropensity,
    /// URI under linear `e` with a heterogeneous effect: converges to the
    /// overlap-weighted effect, not the ATE.
    UriHeterogeneousOverlap,
}

impl Scenario {
    pub const ALL: [Scenario; 11] = [
        Scenario::MriInverseLinear,
        Scenario::MriComplementInverseLinear,
        Scenario::MriLinearOutcomes,
        Scenario::ConstantPropensity,
        Scenario::MriConstantEffectLinearPropensity,
        Scenario::UriInverseLinear,
        Scenario::UriComplementInverseLinear,
        Scenario::UriLinearOutcomes,
        Scenario::UriLinearConstantEffect,
        Scenario::UriConstantEffectLinearPropensity,
        Scenario::UriHeterogeneousOverlap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::MriInverseLinear => "mri_inverse_linear_e",
            Scenario::MriComplementInverseLinear => "mri_inverse_linear_1me",
            Scenario::MriLinearOutcomes => "mri_linear_outcomes",
            Scenario::ConstantPropensity => "constant_propensity",
            Scenario::MriConstantEffectLinearPropensity => "mri_constant_effect_linear_e",
            Scenario::UriInverseLinear => "uri_inverse_linear_e",
            Scenario::UriComplementInverseLinear => "uri_inverse_linear_1me",
            Scenario::UriLinearOutcomes => "uri_linear_outcomes",
            Scenario::UriLinearConstantEffect => "uri_linear_constant_effect",
            Scenario::UriConstantEffectLinearPropensity => "uri_constant_effect_linear_e",
            Scenario::UriHeterogeneousOverlap => "uri_heterogeneous_overlap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn methods(self) -> Vec<Method> {
        match self {
            Scenario::MriInverseLinear
            | Scenario::MriComplementInverseLinear
            | Scenario::MriLinearOutcomes
            | Scenario::MriConstantEffectLinearPropensity => vec![Method::Mri],
            Scenario::ConstantPropensity => vec![Method::Mri, Method::Uri],
            _ => vec![Method::Uri],
        }
    }

    pub fn is_negative_control(self) -> bool {
        self == Scenario::UriHeterogeneousOverlap
    }

    pub fn label(self, method: Method) -> String {
        format!("{} {method}", self.name())
    }

    pub fn config(self, seed: u64) -> DgpConfig {
        let box2_het = || OutcomeModel::heterogeneous(1.0, vec![1.0, -1.0], 2.0, vec![1.0, 1.0]);
        let one_het = |g: f64| OutcomeModel::heterogeneous(1.0, vec![1.0], 2.0, vec![g]);
        let equal = CovariateLaw::EqualScaledVariance;
        let cfg = match self {
            Scenario::MriInverseLinear => DgpConfig::new(
                PropensityKind::InverseLinear,
                vec![1.5, 1.0],
                0.4,
                box2_het().with_quadratic(0.0, 2.0),
            ),
            Scenario::MriComplementInverseLinear => DgpConfig::new(
                PropensityKind::ComplementInverseLinear,
                vec![1.5, 1.0],
                0.6,
                box2_het().with_quadratic(2.0, 0.0),
            ),
            Scenario::MriLinearOutcomes => DgpConfig::new(
                PropensityKind::Logistic,
                vec![2.0, -1.0],
                0.5,
                OutcomeModel::heterogeneous(1.0, vec![1.0, -1.0], 2.0, vec![1.0, 2.0]),
            ),
            Scenario::ConstantPropensity => DgpConfig::new(
                PropensityKind::Constant,
                vec![0.0, 0.0],
                0.3,
                box2_het().with_quadratic(1.0, 3.0),
            ),
            Scenario::MriConstantEffectLinearPropensity => DgpConfig::new(
                PropensityKind::Linear,
                vec![0.6],
                0.5,
                OutcomeModel::linear(1.0, vec![1.0], 2.0).with_quadratic(2.0, 2.0),
            ),
            Scenario::UriInverseLinear => DgpConfig::new(
                PropensityKind::InverseLinear,
                vec![0.0],
                0.47,
                one_het(0.0).with_quadratic(0.0, 3.0),
            )
            .law(equal),
            Scenario::UriComplementInverseLinear => DgpConfig::new(
                PropensityKind::ComplementInverseLinear,
                vec![0.0],
                0.53,
                one_het(0.0).with_quadratic(3.0, 0.0),
            )
            .law(equal),
            Scenario::UriLinearOutcomes => {
                DgpConfig::new(PropensityKind::InverseLinear, vec![0.0], 0.47, one_het(3.0)).law(equal)
            }
            Scenario::UriLinearConstantEffect => DgpConfig::new(
                PropensityKind::Logistic,
                vec![2.0, -1.0],
                0.5,
                OutcomeModel::linear(1.0, vec![1.0, -1.0], 2.0),
            ),
            Scenario::UriConstantEffectLinearPropensity => DgpConfig::new(
                PropensityKind::Linear,
                vec![0.6],
                0.4,
                OutcomeModel::linear(1.0, vec![1.0], 2.0).with_quadratic(2.0, 2.0),
            )
            .e_bounds(0.05, 0.95),
            Scenario::UriHeterogeneousOverlap => DgpConfig::new(
                PropensityKind::Linear,
                vec![0.6],
                0.4,
                OutcomeModel::heterogeneous(0.0, vec![1.0], 1.0, vec![8.0]),
            )
            .e_bounds(0.05, 0.95),
        };
        cfg.seed(seed)
    }
}

/// Bias of Hájek estimates from implied weights across scenarios and
/// sample sizes.
pub fn consistency_experiment(
    scenarios: &[Scenario],
    n_grid: &[usize],
    replications: usize,
    seed: u64,
) -> Result<SimulationReport> {
    check_grid(n_grid, replications)?;
    if scenarios.is_empty() {
        return Err(Error::Config("no scenarios requested".into()));
    }
    let mut dgps = Vec::new();
    let mut truths = Vec::new();
    let mut notes = Vec::new();
    for &sc in scenarios {
        let dgp = Dgp::new(sc.config(seed))?;
        let ate = dgp.true_ate();
        for m in sc.methods() {
            let limit = if sc.is_negative_control() {
                dgp.overlap_effect()?
            } else {
                ate
            };
            truths.push(TruthEntry {
                label: sc.label(m),
                ate,
                limit,
            });
        }
        if sc.config(seed).law == CovariateLaw::EqualScaledVariance {
            notes.push(format!(
                "{}: covariates drawn group by group after treatment to enforce equal scaled variances",
                sc.name()
            ));
        }
        dgps.push(dgp);
    }
    let items: Vec<(usize, usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..n_grid.len()).flat_map(move |g| (0..replications).map(move |r| (s, g, r))))
        .collect();
    let per_item: Vec<Vec<ReplicationRecord>> = items
        .par_iter()
        .map(|&(si, g, rep)| {
            let sc = scenarios[si];
            let stream = stream_id(si, g, rep);
            let mut rng = rng_for(seed, stream);
            let s = dgps[si].sample(n_grid[g], &mut rng)?;
            sc.methods()
                .into_iter()
                .map(|m| {
                    let w = weights_for(&s.data, m)?;
                    let est = hajek_estimate(&s.data, &w)?.value;
                    Ok(ReplicationRecord {
                        label: sc.label(m),
                        n: n_grid[g],
                        replication: rep,
                        stream,
                        sup_weight_error: None,
                        estimate: Some(est),
                        bias: Some(est - s.truth.ate),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let records: Vec<ReplicationRecord> = per_item.into_iter().flatten().collect();
    Ok(SimulationReport {
        experiment: "consistency".into(),
        base_seed: seed,
        replications,
        n_grid: n_grid.to_vec(),
        summaries: summarize(&records, n_grid),
        records,
        truths,
        notes,
    })
}
