#![allow(dead_code)]

use implied_weights::dataset::{Dataset, TREATED};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Random binary dataset with a group shift in the covariates, a nonlinear
/// outcome and groups of at least `k + 3` units.
pub fn random_dataset(seed: u64, n: usize, k: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let min_group = k + 3;
    assert!(n >= 2 * min_group);
    let mut z: Vec<i64> = (0..n).map(|_| rng.gen_bool(0.45) as i64).collect();
    for i in 0..min_group {
        z[i] = 1;
        z[n - 1 - i] = 0;
    }
    let scales: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..5.0)).collect();
    let shifts: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = DMatrix::from_fn(n, k, |i, j| {
        let e: f64 = normal.sample(&mut rng);
        scales[j] * (e + if z[i] == TREATED { shifts[j] } else { 0.0 })
    });
    let y = DVector::from_fn(n, |i, _| {
        let row = x.row(i);
        let lin: f64 = row.iter().enumerate().map(|(j, v)| (j as f64 + 1.0) * 0.3 * v).sum();
        let quad = 0.2 * row[0] * row[0];
        lin + quad + 1.5 * z[i] as f64 + normal.sample(&mut rng)
    });
    Dataset::binary(x, z).unwrap().with_outcome(y).unwrap()
}

/// Positive base weights, normalized to sum to one within each group when
/// `normalized` is set.
pub fn random_base(d: &Dataset, seed: u64, normalized: bool) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut b = DVector::from_fn(d.n(), |_, _| rng.gen_range(0.2..3.0));
    if normalized {
        for g in d.labels() {
            let rows = d.group_rows(g).unwrap();
            let s: f64 = rows.iter().map(|&i| b[i]).sum();
            for &i in rows {
                b[i] /= s;
            }
        }
    }
    b
}

/// Copy of `d` without row `drop`.
pub fn without_row(d: &Dataset, drop: usize) -> Dataset {
    let keep: Vec<usize> = (0..d.n()).filter(|&i| i != drop).collect();
    let x = DMatrix::from_fn(keep.len(), d.k(), |r, j| d.covariates()[(keep[r], j)]);
    let z: Vec<i64> = keep.iter().map(|&i| d.treatment()[i]).collect();
    let out = Dataset::binary(x, z).unwrap();
    match d.outcome() {
        Ok(y) => out
            .with_outcome(DVector::from_iterator(keep.len(), keep.iter().map(|&i| y[i])))
            .unwrap(),
        Err(_) => out,
    }
}

/// Copy of `d` with outcome `y`.
pub fn with_outcome(d: &Dataset, y: DVector<f64>) -> Dataset {
    d.without_outcome().with_outcome(y).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
