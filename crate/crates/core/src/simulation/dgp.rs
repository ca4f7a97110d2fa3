//! Seeded data-generating processes with known propensities and effects.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::quadrature::integrate_box;
use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::numeric::SpdSolver;

/// Attempts at drawing a sample with both groups non-empty.
pub const MAX_RETRIES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropensityKind {
    /// `1 / e(x)` affine in `x`.
    InverseLinear,
    /// `1 / (1 - e(x))` affine in `x`.
    ComplementInverseLinear,
    Linear,
    /// Logistic index; misspecified for every linear-regression weight.
    Logistic,
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovariateLaw {
    /// Independent uniforms on `[lower_j, upper_j]`; treatment is then drawn
    /// from the propensity.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// One covariate on [0, 1], drawn group by group: one group is uniform,
    /// the other has density `1 + s (x - 1/2)` with `s` chosen so that
    /// `p^2 var(X | Z = 1) = (1 - p)^2 var(X | Z = 0)`. With
    /// [`PropensityKind::InverseLinear`] the treated group is uniform, with
    /// [`PropensityKind::ComplementInverseLinear`] the control group is.
    EqualScaledVariance,
}

impl CovariateLaw {
    pub fn unit_box(k: usize) -> Self {
        CovariateLaw::Box {
            lower: vec![0.0; k],
            upper: vec![1.0; k],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Linear,
    LinearHeterogeneous,
    Nonlinear,
}

/// `m_z(x) = intercept + beta'x + z (tau + gamma'x) + q_z sum_j x_j^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    pub intercept: f64,
    pub beta: Vec<f64>,
    pub tau: f64,
    pub gamma: Vec<f64>,
    pub quad0: f64,
    pub quad1: f64,
}

impl OutcomeModel {
    pub fn linear(intercept: f64, beta: Vec<f64>, tau: f64) -> Self {
        let k = beta.len();
        Self {
            intercept,
            beta,
            tau,
            gamma: vec![0.0; k],
            quad0: 0.0,
            quad1: 0.0,
        }
    }

    pub fn heterogeneous(intercept: f64, beta: Vec<f64>, tau: f64, gamma: Vec<f64>) -> Self {
        Self {
            gamma,
            ..Self::linear(intercept, beta, tau)
        }
    }

    /// Adds `q0 sum x_j^2` to the control mean and `q1 sum x_j^2` to the
    /// treated mean.
    pub fn with_quadratic(mut self, q0: f64, q1: f64) -> Self {
        self.quad0 = q0;
        self.quad1 = q1;
        self
    }

    pub fn kind(&self) -> OutcomeKind {
        if self.quad0 != 0.0 || self.quad1 != 0.0 {
            OutcomeKind::Nonlinear
        } else if self.gamma.iter().any(|g| *g != 0.0) {
            OutcomeKind::LinearHeterogeneous
        } else {
            OutcomeKind::Linear
        }
    }

    pub fn mean(&self, treated: bool, x: &[f64]) -> f64 {
        let lin: f64 = self.beta.iter().zip(x).map(|(b, v)| b * v).sum();
        let sq: f64 = x.iter().map(|v| v * v).sum();
        if treated {
            let het: f64 = self.gamma.iter().zip(x).map(|(g, v)| g * v).sum();
            self.intercept + lin + self.tau + het + self.quad1 * sq
        } else {
            self.intercept + lin + self.quad0 * sq
        }
    }

    pub fn effect(&self, x: &[f64]) -> f64 {
        self.mean(true, x) - self.mean(false, x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub k: usize,
    /// Target marginal treatment probability.
    pub p: f64,
    pub propensity: PropensityKind,
    /// Coefficients of the propensity's linear index; the intercept is
    /// solved so that `E[e(X)] = p`.
    pub slope: Vec<f64>,
    pub law: CovariateLaw,
    pub outcome: OutcomeModel,
    pub noise_sd: f64,
    pub seed: u64,
    /// Every propensity must lie in `[e_min, e_max]` over the support.
    pub e_bounds: (f64, f64),
}

impl DgpConfig {
    pub fn new(propensity: PropensityKind, slope: Vec<f64>, p: f64, outcome: OutcomeModel) -> Self {
        let k = slope.len();
        Self {
            k,
            p,
            propensity,
            slope,
            law: CovariateLaw::unit_box(k),
            outcome,
            noise_sd: 1.0,
            seed: 0,
            e_bounds: (0.1, 0.9),
        }
    }

    pub fn law(mut self, law: CovariateLaw) -> Self {
        self.law = law;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn noise_sd(mut self, sd: f64) -> Self {
        self.noise_sd = sd;
        self
    }

    pub fn e_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.e_bounds = (lo, hi);
        self
    }
}

/// Known truth attached to a generated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub ate: f64,
    pub propensities: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct Simulated {
    pub data: Dataset,
    pub truth: Truth,
}

/// A validated configuration with its solved propensity intercept.
#[derive(Debug, Clone)]
pub struct Dgp {
    config: DgpConfig,
    intercept: f64,
    /// Share of the uniform group and density slope of the other group
    /// under [`CovariateLaw::EqualScaledVariance`].
    uniform_share: f64,
    density_slope: f64,
}

fn quadrature_points(k: usize) -> Result<usize> {
    match k {
        1 => Ok(64),
        2 => Ok(32),
        3 => Ok(16),
        4 => Ok(8),
        _ => Err(Error::Config(format!(
            "propensity calibration needs k <= 4 (got {k})"
        ))),
    }
}

fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F) -> f64 {
    // f(lo) and f(hi) have opposite signs.
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

impl Dgp {
    pub fn new(config: DgpConfig) -> Result<Self> {
        let c = &config;
        if c.k == 0 || c.slope.len() != c.k {
            return Err(Error::Config("slope length must equal k >= 1".into()));
        }
        if c.outcome.beta.len() != c.k || c.outcome.gamma.len() != c.k {
            return Err(Error::Config("outcome coefficients must have length k".into()));
        }
        if !(c.p > 0.0 && c.p < 1.0) {
            return Err(Error::Config("p must lie in (0, 1)".into()));
        }
        if !(c.noise_sd > 0.0 && c.noise_sd.is_finite()) {
            return Err(Error::Config("noise_sd must be positive".into()));
        }
        let (e_min, e_max) = c.e_bounds;
        if !(0.0 < e_min && e_min < e_max && e_max < 1.0) {
            return Err(Error::Config("e_bounds must satisfy 0 < e_min < e_max < 1".into()));
        }
        let mut dgp = Dgp {
            config: config.clone(),
            intercept: 0.0,
            uniform_share: 1.0,
            density_slope: 0.0,
        };
        match &config.law {
            CovariateLaw::Box { lower, upper } => {
                if lower.len() != config.k || upper.len() != config.k {
                    return Err(Error::Config("box bounds must have length k".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
                    return Err(Error::Config("box needs lower < upper".into()));
                }
                dgp.intercept = dgp.solve_intercept()?;
            }
            CovariateLaw::EqualScaledVariance => {
                if config.k != 1 {
                    return Err(Error::Config(
                        "equal scaled variance law is available for k = 1 only".into(),
                    ));
                }
                let q = match config.propensity {
                    PropensityKind::InverseLinear => config.p,
                    PropensityKind::ComplementInverseLinear => 1.0 - config.p,
                    _ => {
                        return Err(Error::Config(
                            "equal scaled variance law needs an inverse-linear propensity".into(),
                        ))
                    }
                };
                let r = 1.0 - q;
                let s2 = 12.0 * (1.0 - (q * q) / (r * r));
                if !(s2 >= 0.0 && s2 <= 4.0) {
                    return Err(Error::Config(format!(
                        "no valid density for p = {} (needs (q/r)^2 in [2/3, 1])",
                        config.p
                    )));
                }
                dgp.uniform_share = q;
                dgp.density_slope = s2.sqrt();
            }
        }
        dgp.check_bounds()?;
        Ok(dgp)
    }

    pub fn config(&self) -> &DgpConfig {
        &self.config
    }

    /// Intercept of the propensity's index (0 for constant and the
    /// group-conditional law).
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn support(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.config.law {
            CovariateLaw::Box { lower, upper } => (lower.clone(), upper.clone()),
            CovariateLaw::EqualScaledVariance => (vec![0.0], vec![1.0]),
        }
    }

    fn index(&self, x: &[f64]) -> f64 {
        self.config.slope.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    /// Non-uniform group density under the group-conditional law.
    fn tilted_density(&self, x: f64) -> f64 {
        1.0 + self.density_slope * (x - 0.5)
    }

    pub fn propensity(&self, x: &[f64]) -> f64 {
        let p = self.config.p;
        if let CovariateLaw::EqualScaledVariance = self.config.law {
            let f = self.tilted_density(x[0]);
            return match self.config.propensity {
                PropensityKind::InverseLinear => p / (p + (1.0 - p) * f),
                _ => p * f / (p * f + (1.0 - p)),
            };
        }
        let t = self.intercept + self.index(x);
        match self.config.propensity {
            PropensityKind::InverseLinear => 1.0 / t,
            PropensityKind::ComplementInverseLinear => 1.0 - 1.0 / t,
            PropensityKind::Linear => t,
            PropensityKind::Logistic => sigmoid(t),
            PropensityKind::Constant => p,
        }
    }

    /// Marginal density of X on its support.
    pub fn density(&self, x: &[f64]) -> f64 {
        match &self.config.law {
            CovariateLaw::Box { lower, upper } => {
                1.0 / lower.iter().zip(upper).map(|(l, u)| u - l).product::<f64>()
            }
            CovariateLaw::EqualScaledVariance => {
                let q = self.uniform_share;
                q + (1.0 - q) * self.tilted_density(x[0])
            }
        }
    }

    /// `E[f(X)]` under the marginal covariate law, by quadrature.
    pub fn expect<F: Fn(&[f64]) -> f64>(&self, f: F) -> Result<f64> {
        let (lo, hi) = self.support();
        let m = quadrature_points(self.config.k)?;
        Ok(integrate_box(&lo, &hi, m, |x| f(x) * self.density(x)))
    }

    fn box_index_range(&self) -> (f64, f64) {
        let (lo, hi) = self.support();
        let mut min = 0.0;
        let mut max = 0.0;
        for j in 0..self.config.k {
            let a = self.config.slope[j] * lo[j];
            let b = self.config.slope[j] * hi[j];
            min += a.min(b);
            max += a.max(b);
        }
        (min, max)
    }

    fn solve_intercept(&self) -> Result<f64> {
        let p = self.config.p;
        let (imin, imax) = self.box_index_range();
        let with = |c: f64| Dgp {
            intercept: c,
            ..self.clone()
        };
        let mean_e = |c: f64| -> Result<f64> {
            let d = with(c);
            d.expect(|x| d.propensity(x))
        };
        match self.config.propensity {
            PropensityKind::Constant => Ok(0.0),
            PropensityKind::Linear => {
                let (lo, hi) = self.support();
                let mu: f64 = (0..self.config.k)
                    .map(|j| self.config.slope[j] * 0.5 * (lo[j] + hi[j]))
                    .sum();
                Ok(p - mu)
            }
            PropensityKind::Logistic => {
                let f = |c: f64| mean_e(c).unwrap_or(f64::NAN) - p;
                let (lo, hi) = (-60.0 - imax, 60.0 - imin);
                quadrature_points(self.config.k)?;
                Ok(bisect(lo, hi, f))
            }
            PropensityKind::InverseLinear | PropensityKind::ComplementInverseLinear => {
                // Need intercept + index > 1 everywhere; the smallest
                // admissible intercept puts e (or 1 - e) at 1 on a corner.
                let target = if self.config.propensity == PropensityKind::InverseLinear {
                    p
                } else {
                    1.0 - p
                };
                let g = |c: f64| -> f64 {
                    let d = with(c);
                    let v = d
                        .expect(|x| 1.0 / (c + d.index(x)))
                        .unwrap_or(f64::NAN);
                    v - target
                };
                quadrature_points(self.config.k)?;
                let lo = 1.0 - imin + 1e-9;
                if !(g(lo) > 0.0) {
                    return Err(Error::Config(format!(
                        "inverse-linear propensity cannot reach mean {p} with this slope"
                    )));
                }
                let mut hi = lo + 1.0;
                while g(hi) > 0.0 {
                    hi = lo + 2.0 * (hi - lo);
                }
                Ok(bisect(lo, hi, g))
            }
        }
    }

    fn check_bounds(&self) -> Result<()> {
        let (e_min, e_max) = self.config.e_bounds;
        let (lo, hi) = self.support();
        let k = self.config.k;
        // Every propensity kind here is monotone along the index, so the
        // extremes sit at box corners.
        for mask in 0..(1u64 << k.min(20)) {
            let x: Vec<f64> = (0..k)
                .map(|j| if mask >> j & 1 == 1 { hi[j] } else { lo[j] })
                .collect();
            let e = self.propensity(&x);
            if !(e >= e_min && e <= e_max) {
                return Err(Error::Config(format!(
                    "propensity {e:.4} at a support corner is outside [{e_min}, {e_max}]"
                )));
            }
        }
        Ok(())
    }

    /// Marginal mean of X.
    pub fn marginal_mean(&self) -> Vec<f64> {
        match &self.config.law {
            CovariateLaw::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect()
            }
            CovariateLaw::EqualScaledVariance => {
                let q = self.uniform_share;
                vec![0.5 + (1.0 - q) * self.density_slope / 12.0]
            }
        }
    }

    fn marginal_square_sum(&self) -> f64 {
        match &self.config.law {
            CovariateLaw::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (l * l + l * u + u * u) / 3.0)
                .sum(),
            CovariateLaw::EqualScaledVariance => {
                let q = self.uniform_share;
                1.0 / 3.0 + (1.0 - q) * self.density_slope / 12.0
            }
        }
    }

    /// Population ATE in closed form.
    pub fn true_ate(&self) -> f64 {
        let o = &self.config.outcome;
        let mu = self.marginal_mean();
        let het: f64 = o.gamma.iter().zip(&mu).map(|(g, m)| g * m).sum();
        o.tau + het + (o.quad1 - o.quad0) * self.marginal_square_sum()
    }

    /// Overlap-weighted effect `E[e(1-e) tau(X)] / E[e(1-e)]`, the limit of
    /// the pooled-regression estimator under a linear propensity.
    pub fn overlap_effect(&self) -> Result<f64> {
        let o = &self.config.outcome;
        let num = self.expect(|x| {
            let e = self.propensity(x);
            e * (1.0 - e) * o.effect(x)
        })?;
        let den = self.expect(|x| {
            let e = self.propensity(x);
            e * (1.0 - e)
        })?;
        Ok(num / den)
    }

    /// Inverse CDF of the tilted density `1 + s (x - 1/2)` on [0, 1].
    fn tilted_draw(&self, u: f64) -> f64 {
        let a = 1.0 - self.density_slope / 2.0;
        2.0 * u / (a + (a * a + 2.0 * self.density_slope * u).sqrt())
    }

    /// Draws one sample of size `n` from `rng`.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Simulated> {
        let k = self.config.k;
        let (lo, hi) = self.support();
        for _ in 0..MAX_RETRIES {
            let mut x = DMatrix::zeros(n, k);
            let mut z: Vec<Label> = Vec::with_capacity(n);
            let mut e = DVector::zeros(n);
            let mut y = DVector::zeros(n);
            let mut row = vec![0.0; k];
            for i in 0..n {
                let treated = match self.config.law {
                    CovariateLaw::Box { .. } => {
                        for j in 0..k {
                            row[j] = lo[j] + (hi[j] - lo[j]) * rng.gen::<f64>();
                        }
                        rng.gen::<f64>() < self.propensity(&row)
                    }
                    CovariateLaw::EqualScaledVariance => {
                        let t = rng.gen::<f64>() < self.config.p;
                        let uniform_group = self.config.propensity == PropensityKind::InverseLinear;
                        let u = rng.gen::<f64>();
                        row[0] = if t == uniform_group {
                            u
                        } else {
                            self.tilted_draw(u)
                        };
                        t
                    }
                };
                let noise: f64 = rng.sample(StandardNormal);
                for j in 0..k {
                    x[(i, j)] = row[j];
                }
                e[i] = self.propensity(&row);
                y[i] = self.config.outcome.mean(treated, &row) + self.config.noise_sd * noise;
                z.push(treated as Label);
            }
            let n_t = z.iter().filter(|v| **v == 1).count();
            if n_t == 0 || n_t == n {
                continue;
            }
            let data = Dataset::binary(x, z)?.with_outcome(y)?;
            return Ok(Simulated {
                data,
                truth: Truth {
                    ate: self.true_ate(),
                    propensities: e,
                },
            });
        }
        Err(Error::EmptyGroupAfterRetries(MAX_RETRIES))
    }
}

/// Validates `config` and draws a sample of size `n` seeded by `config.seed`.
pub fn generate(config: &DgpConfig, n: usize) -> Result<Simulated> {
    let dgp = Dgp::new(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    dgp.sample(n, &mut rng)
}

/// Coefficients `(a_0, a_1)` of the linear propensity implied by the
/// group-conditional first and second moments:
/// `a_1 = p(1-p) / (1 + p(1-p) c) A^{-1}(mu_t - mu_c)` with
/// `A = p Sigma_t + (1-p) Sigma_c`, `c = (mu_t - mu_c)' A^{-1} (mu_t - mu_c)`,
/// and `a_0 = p - a_1' mu`.
pub fn linear_propensity_coefficients(
    p: f64,
    mu_t: &DVector<f64>,
    mu_c: &DVector<f64>,
    sigma_t: &DMatrix<f64>,
    sigma_c: &DMatrix<f64>,
) -> Result<(f64, DVector<f64>)> {
    let k = mu_t.len();
    if mu_c.len() != k || sigma_t.shape() != (k, k) || sigma_c.shape() != (k, k) {
        return Err(Error::LengthMismatch {
            what: "moments".into(),
            expected: k,
            got: mu_c.len(),
        });
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config("p must lie in (0, 1)".into()));
    }
    let a = sigma_t * p + sigma_c * (1.0 - p);
    let solver = SpdSolver::new(&a, "p Sigma_t + (1 - p) Sigma_c")?;
    let gap = mu_t - mu_c;
    let u = solver.solve(&gap);
    let c = gap.dot(&u);
    let q = p * (1.0 - p);
    let a1 = u * (q / (1.0 + q * c));
    let mu = mu_t * p + mu_c * (1.0 - p);
    Ok((p - a1.dot(&mu), a1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(k: usize) -> OutcomeModel {
        OutcomeModel::linear(0.0, vec![1.0; k], 2.0)
    }

    #[test]
    fn linear_propensity_plug_in_example() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let (a0, a1) = linear_propensity_coefficients(
            0.5,
            &DVector::from_element(1, 1.0),
            &DVector::from_element(1, 0.0),
            &one,
            &one,
        )
        .unwrap();
        assert!((a1[0] - 0.2).abs() < 1e-15);
        assert!((a0 - 0.4).abs() < 1e-15);
    }

    #[test]
    fn linear_propensity_zero_gap_is_constant() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let mu = DVector::from_vec(vec![0.4, -1.0]);
        let (a0, a1) = linear_propensity_coefficients(0.3, &mu, &mu, &s, &s).unwrap();
        assert_eq!(a1.amax(), 0.0);
        assert!((a0 - 0.3).abs() < 1e-15);
    }

    #[test]
    fn calibrated_means_hit_p() {
        for kind in [
            PropensityKind::InverseLinear,
            PropensityKind::ComplementInverseLinear,
            PropensityKind::Logistic,
            PropensityKind::Linear,
        ] {
            let dgp = Dgp::new(DgpConfig::new(kind, vec![0.4, 0.2], 0.45, lin(2)))
                .unwrap_or_else(|e| panic!("{kind:?}: {e}"));
            let m = dgp.expect(|x| dgp.propensity(x)).unwrap();
            assert!((m - 0.45).abs() < 1e-10, "{kind:?} mean {m}");
        }
    }

    #[test]
    fn out_of_bounds_propensity_rejected() {
        let cfg = DgpConfig::new(PropensityKind::Linear, vec![1.0], 0.5, lin(1));
        assert!(matches!(Dgp::new(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn equal_scaled_law_satisfies_variance_condition() {
        let cfg = DgpConfig::new(PropensityKind::InverseLinear, vec![0.0], 0.47, lin(1))
            .law(CovariateLaw::EqualScaledVariance);
        let dgp = Dgp::new(cfg).unwrap();
        // Group-conditional densities recovered from e and the marginal.
        let p = 0.47;
        let ft = |x: &[f64]| dgp.propensity(x) * dgp.density(x) / p;
        let fc = |x: &[f64]| (1.0 - dgp.propensity(x)) * dgp.density(x) / (1.0 - p);
        let q = |f: &dyn Fn(&[f64]) -> f64, g: &dyn Fn(f64) -> f64| {
            integrate_box(&[0.0], &[1.0], 64, |x| f(x) * g(x[0]))
        };
        let mt = q(&ft, &|x| x);
        let mc = q(&fc, &|x| x);
        let vt = q(&ft, &|x| (x - mt) * (x - mt));
        let vc = q(&fc, &|x| (x - mc) * (x - mc));
        assert!((q(&ft, &|_| 1.0) - 1.0).abs() < 1e-12);
        assert!((p * p * vt - (1.0 - p) * (1.0 - p) * vc).abs() < 1e-12);
        // 1 / e is affine: second differences vanish.
        let inv = |x: f64| 1.0 / dgp.propensity(&[x]);
        assert!((inv(0.0) - 2.0 * inv(0.5) + inv(1.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_propensity_group_sizes() {
        let cfg = DgpConfig::new(PropensityKind::Constant, vec![0.0], 0.5, lin(1)).seed(7);
        let s = generate(&cfg, 10_000).unwrap();
        let n_t = s.data.group_size(1).unwrap() as f64;
        assert!((n_t - 5000.0).abs() <= 4.0 * 100.0);
    }

    #[test]
    fn heterogeneous_ate_on_symmetric_box() {
        let cfg = DgpConfig::new(
            PropensityKind::Constant,
            vec![0.0],
            0.5,
            OutcomeModel::heterogeneous(0.0, vec![0.0], 1.0, vec![1.0]),
        )
        .law(CovariateLaw::Box {
            lower: vec![-1.0],
            upper: vec![1.0],
        });
        assert_eq!(Dgp::new(cfg).unwrap().true_ate(), 1.0);
    }

    #[test]
    fn same_seed_same_sample() {
        let cfg = DgpConfig::new(PropensityKind::Logistic, vec![1.0, -1.0], 0.4, lin(2)).seed(11);
        let a = generate(&cfg, 300).unwrap();
        let b = generate(&cfg, 300).unwrap();
        assert_eq!(a.data.covariates(), b.data.covariates());
        assert_eq!(a.data.outcome().unwrap(), b.data.outcome().unwrap());
    }
}
