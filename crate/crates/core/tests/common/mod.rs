//! Independent oracles and fixtures shared by the integration tests.
//!
//! Nothing here calls the crate's solvers: the oracles are deliberately naive
//! so that they fail differently from the code under test.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpboost::data::Dataset;
use rpboost::learners::Stump;
use rpboost::linalg::DenseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform features in [-1, 1) with labels from a random hyperplane plus
/// 10% label noise; both classes are always present.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let plane: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    loop {
        let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x
            .chunks(d)
            .map(|row| {
                let s: f64 = row.iter().zip(&plane).map(|(a, b)| a * b).sum();
                let label = if s > 0.0 { 1.0 } else { -1.0 };
                if rng.random_bool(0.1) {
                    -label
                } else {
                    label
                }
            })
            .collect();
        if y.contains(&1.0) && y.contains(&-1.0) {
            return Dataset::new(DenseMatrix::new(n, d, x).unwrap(), y).unwrap();
        }
    }
}

/// Positive weights summing to one.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, d: usize, m: usize) -> DenseMatrix {
    let data = (0..d * m)
        .map(|_| {
            // Box-Muller, independent of the crate's sampler.
            let u1: f64 = rng.random_range(f64::EPSILON..1.0);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos() / (d as f64).sqrt()
        })
        .collect();
    DenseMatrix::new(d, m, data).unwrap()
}

pub type Mat = Vec<Vec<f64>>;

pub fn to_rows(a: &DenseMatrix) -> Mat {
    a.row_iter().map(|r| r.to_vec()).collect()
}

pub fn naive_matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            for t in 0..k {
                c[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    c
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn explicit_inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut aug: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| aug[p][col].abs().total_cmp(&aug[q][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        let p = aug[col][col];
        aug[col].iter_mut().for_each(|v| *v /= p);
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    let pivot_row = aug[col].clone();
                    aug[r]
                        .iter_mut()
                        .zip(&pivot_row)
                        .for_each(|(v, pv)| *v -= f * pv);
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `(AᵀWA + λI)⁻¹ AᵀWy` through an explicit inverse.
pub fn ridge_by_inverse(a: &Mat, w: &[f64], y: &[f64], lambda: f64) -> Vec<f64> {
    let d = a[0].len();
    let mut g = vec![vec![0.0; d]; d];
    let mut rhs = vec![0.0; d];
    for (i, row) in a.iter().enumerate() {
        for p in 0..d {
            rhs[p] += w[i] * row[p] * y[i];
            for q in 0..d {
                g[p][q] += w[i] * row[p] * row[q];
            }
        }
    }
    for (p, row) in g.iter_mut().enumerate() {
        row[p] += lambda;
    }
    let inv = explicit_inverse(&g);
    inv.iter()
        .map(|r| r.iter().zip(&rhs).map(|(a, b)| a * b).sum())
        .collect()
}

/// Relative residual `‖(AᵀWA + λI)b − AᵀWy‖∞ / (1 + ‖AᵀWy‖∞)`.
pub fn normal_equation_residual(a: &Mat, w: &[f64], y: &[f64], lambda: f64, b: &[f64]) -> f64 {
    let d = a[0].len();
    let mut lhs: Vec<f64> = b.iter().map(|v| lambda * v).collect();
    let mut rhs = vec![0.0; d];
    for (i, row) in a.iter().enumerate() {
        let fit: f64 = row.iter().zip(b).map(|(x, bj)| x * bj).sum();
        for p in 0..d {
            lhs[p] += w[i] * row[p] * fit;
            rhs[p] += w[i] * row[p] * y[i];
        }
    }
    let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = lhs
        .iter()
        .zip(&rhs)
        .fold(0.0f64, |m, (l, r)| m.max((l - r).abs()));
    err / (1.0 + scale)
}

/// Smallest weighted error over every (feature, cut, polarity), evaluating
/// each candidate by direct prediction.
pub fn brute_force_stump_error(ds: &Dataset, w: &[f64]) -> f64 {
    let x = ds.features();
    let y = ds.labels();
    let mut best = f64::INFINITY;
    for j in 0..x.cols() {
        let mut cuts: Vec<f64> = (0..x.rows()).map(|i| x.get(i, j)).collect();
        cuts.push(f64::NEG_INFINITY);
        for &t in &cuts {
            for polarity in [1.0, -1.0] {
                let stump = Stump {
                    feature: j,
                    threshold: t,
                    polarity,
                };
                let err: f64 = (0..x.rows())
                    .filter(|&i| stump.predict_value(x.get(i, j)) != y[i])
                    .map(|i| w[i])
                    .sum();
                best = best.min(err);
            }
        }
    }
    best
}

pub fn weighted_stump_error(stump: &Stump, ds: &Dataset, w: &[f64]) -> f64 {
    let x = ds.features();
    (0..ds.len())
        .filter(|&i| stump.predict_value(x.get(i, stump.feature)) != ds.labels()[i])
        .map(|i| w[i])
        .sum()
}
