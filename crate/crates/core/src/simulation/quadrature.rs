//! Tensor-product Gauss-Legendre quadrature on axis-aligned boxes.

use std::f64::consts::PI;

use crate::numeric::CompensatedSum;

/// Nodes and weights of the `m`-point rule on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_m and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let step = pm / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrates `f` over the box `[lower, upper]` with `m` points per axis.
pub fn integrate_box<F: Fn(&[f64]) -> f64>(lower: &[f64], upper: &[f64], m: usize, f: F) -> f64 {
    let k = lower.len();
    let (nodes, weights) = gauss_legendre(m);
    let mut idx = vec![0usize; k];
    let mut x = vec![0.0; k];
    let mut acc = CompensatedSum::new();
    let half: Vec<f64> = (0..k).map(|j| 0.5 * (upper[j] - lower[j])).collect();
    let jac: f64 = half.iter().product();
    loop {
        let mut w = jac;
        for j in 0..k {
            x[j] = lower[j] + half[j] * (nodes[idx[j]] + 1.0);
            w *= weights[idx[j]];
        }
        acc.add(w * f(&x));
        let mut j = 0;
        loop {
            if j == k {
                return acc.value();
            }
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}
