//! Dense KKT solver for the exact-balance least-distance problem
//!
//! ```text
//! minimize   sum_i (w_i - b_i)^2 / s_i
//! subject to sum_i w_i = 1,  sum_i w_i X_i = X*
//! ```
//!
//! assembled straight from the Lagrangian and solved with a general LU
//! factorization. It shares no algebra with the closed forms in
//! [`crate::weights`], which is what makes it useful as a certificate.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{full_mean, Dataset, Label, CONTROL, TREATED};
use crate::error::{Error, Result};
use crate::numeric::SINGULARITY_THRESHOLD;
use crate::weights::{uri_implied_profile, wuri_target, Method, WeightSet};

/// One group's balancing problem.
#[derive(Debug, Clone)]
pub struct BalanceQP {
    pub rows: DMatrix<f64>,
    pub base: DVector<f64>,
    pub scale: DVector<f64>,
    pub target: DVector<f64>,
    /// Per-covariate balance tolerance; only zero is supported.
    pub delta: DVector<f64>,
}

impl BalanceQP {
    pub fn new(
        rows: DMatrix<f64>,
        base: DVector<f64>,
        scale: DVector<f64>,
        target: DVector<f64>,
    ) -> Result<Self> {
        let k = rows.ncols();
        Self::with_delta(rows, base, scale, target, DVector::zeros(k))
    }

    pub fn with_delta(
        rows: DMatrix<f64>,
        base: DVector<f64>,
        scale: DVector<f64>,
        target: DVector<f64>,
        delta: DVector<f64>,
    ) -> Result<Self> {
        let (m, k) = rows.shape();
        for (what, len, want) in [
            ("base", base.len(), m),
            ("scale", scale.len(), m),
            ("target", target.len(), k),
            ("delta", delta.len(), k),
        ] {
            if len != want {
                return Err(Error::LengthMismatch {
                    what: what.into(),
                    expected: want,
                    got: len,
                });
            }
        }
        if delta.iter().any(|v| *v != 0.0) {
            return Err(Error::Unsupported(
                "approximate balance (nonzero delta) is not implemented".into(),
            ));
        }
        if scale.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidWeights("scale weights must be positive".into()));
        }
        let sum: f64 = base.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidWeights(format!("base weights sum to {sum}, not 1")));
        }
        Ok(Self {
            rows,
            base,
            scale,
            target,
            delta,
        })
    }

    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        w.iter()
            .zip(self.base.iter())
            .zip(self.scale.iter())
            .map(|((w, b), s)| (w - b) * (w - b) / s)
            .sum()
    }

    /// Constraint matrix `[1, X]`.
    fn constraints(&self) -> DMatrix<f64> {
        self.rows.clone().insert_column(0, 1.0)
    }

    fn rhs(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.target.len() + 1);
        b[0] = 1.0;
        b.rows_mut(1, self.target.len()).copy_from(&self.target);
        b
    }
}

#[derive(Debug, Clone)]
pub struct QPSolution {
    pub weights: DVector<f64>,
    /// `(lambda_1, lambda_2)`: multiplier of the sum constraint followed by
    /// those of the balance constraints.
    pub multipliers: DVector<f64>,
    /// Max-abs violation of stationarity and feasibility.
    pub kkt_residual: f64,
    /// Magnitude of the problem data the residual should be compared to.
    pub problem_scale: f64,
}

fn kkt_residual(p: &BalanceQP, a: &DMatrix<f64>, w: &DVector<f64>, lam: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let m = w.len();
    let mut stat = a * lam;
    for i in 0..m {
        stat[i] += 2.0 * (w[i] - p.base[i]) / p.scale[i];
    }
    let feas = a.tr_mul(w) - p.rhs();
    (stat, feas)
}

pub fn solve_balance_qp(p: &BalanceQP) -> Result<QPSolution> {
    let (m, k) = p.rows.shape();
    let a = p.constraints();

    // Full column rank of [1, X] is equivalent to a nonsingular KKT matrix.
    let mut ae = a.clone();
    for mut col in ae.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let sv = if m >= k + 1 {
        ae.singular_values()
    } else {
        DVector::zeros(1)
    };
    let rcond = if sv.max() > 0.0 { sv.min() / sv.max() } else { 0.0 };
    if !(rcond >= SINGULARITY_THRESHOLD) {
        return Err(Error::KktSingular { rcond });
    }

    let size = m + k + 1;
    let mut kkt = DMatrix::zeros(size, size);
    for i in 0..m {
        kkt[(i, i)] = 2.0 / p.scale[i];
    }
    kkt.view_mut((0, m), (m, k + 1)).copy_from(&a);
    kkt.view_mut((m, 0), (k + 1, m)).copy_from(&a.transpose());
    let mut rhs = DVector::zeros(size);
    for i in 0..m {
        rhs[i] = 2.0 * p.base[i] / p.scale[i];
    }
    rhs.rows_mut(m, k + 1).copy_from(&p.rhs());

    // Symmetric row/column equilibration before the LU.
    let eq = DVector::from_iterator(
        size,
        kkt.row_iter().map(|r| {
            let mx = r.amax();
            if mx > 0.0 {
                1.0 / mx.sqrt()
            } else {
                1.0
            }
        }),
    );
    let mut scaled = kkt.clone();
    for i in 0..size {
        for j in 0..size {
            scaled[(i, j)] *= eq[i] * eq[j];
        }
    }
    let lu = scaled.lu();
    let solve = |b: &DVector<f64>| -> Result<DVector<f64>> {
        lu.solve(&b.component_mul(&eq))
            .map(|y| y.component_mul(&eq))
            .ok_or(Error::KktSingular { rcond })
    };
    let mut x = solve(&rhs)?;
    // One step of iterative refinement.
    let r = &rhs - &kkt * &x;
    x += solve(&r)?;

    let weights = x.rows(0, m).into_owned();
    let multipliers = x.rows(m, k + 1).into_owned();
    let (stat, feas) = kkt_residual(p, &a, &weights, &multipliers);
    let kkt_residual = stat.amax().max(feas.amax());
    let problem_scale = 1.0_f64
        .max(rhs.amax())
        .max(a.amax());
    Ok(QPSolution {
        weights,
        multipliers,
        kkt_residual,
        problem_scale,
    })
}

pub const CERTIFICATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCertification {
    pub group: Label,
    pub max_discrepancy: f64,
    pub kkt_residual: f64,
    pub problem_scale: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub method: Method,
    pub tolerance: f64,
    pub groups: Vec<GroupCertification>,
    pub passed: bool,
}

impl Certification {
    pub fn max_discrepancy(&self) -> f64 {
        self.groups.iter().fold(0.0, |a, g| a.max(g.max_discrepancy))
    }
}

fn group_vec(d: &Dataset, v: &DVector<f64>, g: Label) -> Result<DVector<f64>> {
    let rows = d.group_rows(g)?;
    Ok(DVector::from_iterator(rows.len(), rows.iter().map(|&i| v[i])))
}

fn normalized(v: DVector<f64>) -> DVector<f64> {
    let s = v.sum();
    v / s
}

/// Rebuilds the balancing problem a weight set should solve in each group,
/// solves it independently, and compares.
pub fn certify(w: &WeightSet, d: &Dataset) -> Result<Certification> {
    d.require_binary()?;
    let need_base = || {
        w.base
            .clone()
            .ok_or_else(|| Error::Config(format!("{} weight set carries no base weights", w.method)))
    };
    let target = match w.method {
        Method::Uri => uri_implied_profile(d)?.values,
        Method::Mri | Method::Wmri => w.target.values.clone(),
        Method::Wuri => wuri_target(d, &need_base()?)?.values,
        Method::Dr => full_mean(d),
        other => {
            return Err(Error::Unsupported(format!(
                "certification of {other} weights"
            )))
        }
    };
    let mut groups = Vec::new();
    for g in [CONTROL, TREATED] {
        let rows = d.group_covariates(g)?;
        let m = rows.nrows();
        let (base, scale) = match w.method {
            Method::Uri | Method::Mri => (
                DVector::from_element(m, 1.0 / m as f64),
                DVector::from_element(m, 1.0 / m as f64),
            ),
            Method::Wuri => {
                let raw = need_base()?;
                let total = raw.sum();
                let s = group_vec(d, &raw, g)? / total;
                (normalized(s.clone()), s)
            }
            Method::Wmri => {
                let b = normalized(group_vec(d, &need_base()?, g)?);
                (b.clone(), b)
            }
            Method::Dr => (group_vec(d, &need_base()?, g)?, DVector::from_element(m, 1.0)),
            _ => unreachable!("filtered above"),
        };
        let qp = BalanceQP::new(rows, base, scale, target.clone())?;
        let sol = solve_balance_qp(&qp)?;
        let mine = group_vec(d, &w.weights, g)?;
        let max_discrepancy = (&mine - &sol.weights).amax();
        let passed = max_discrepancy <= CERTIFICATION_TOL
            && sol.kkt_residual <= CERTIFICATION_TOL * sol.problem_scale;
        groups.push(GroupCertification {
            group: g,
            max_discrepancy,
            kkt_residual: sol.kkt_residual,
            problem_scale: sol.problem_scale,
            passed,
        });
    }
    let passed = groups.iter().all(|g| g.passed);
    Ok(Certification {
        method: w.method,
        tolerance: CERTIFICATION_TOL,
        groups,
        passed,
    })
}
