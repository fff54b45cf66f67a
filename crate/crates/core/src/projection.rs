//! Two-dimensional projections of embedding tables: exact t-SNE and PCA.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, top_eigenpairs, Matrix};
use crate::rng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Tsne,
    Pca,
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectionMethod::Tsne => "tsne",
            ProjectionMethod::Pca => "pca",
        })
    }
}

impl FromStr for ProjectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsne" => Ok(ProjectionMethod::Tsne),
            "pca" => Ok(ProjectionMethod::Pca),
            other => Err(Error::Config(format!("unknown projection method `{other}`"))),
        }
    }
}

pub const DEFAULT_PERPLEXITY: f64 = 15.0;
pub const TSNE_MAX_POINTS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub learning_rate: f64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: DEFAULT_PERPLEXITY,
            iterations: 1000,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            learning_rate: 200.0,
        }
    }
}

pub fn project_2d(
    x: &Matrix,
    method: ProjectionMethod,
    perplexity: f64,
    seed: u64,
) -> Result<Matrix> {
    match method {
        ProjectionMethod::Tsne => tsne(
            x,
            &TsneConfig {
                perplexity,
                ..TsneConfig::default()
            },
            seed,
        ),
        ProjectionMethod::Pca => pca(x, 2, seed),
    }
}

/// Conditional affinities `P(j|i)` for one row of squared distances, with the
/// Gaussian precision found by bisection on the entropy.
fn conditional_row(d2: &[f64], i: usize, target_entropy: f64) -> Vec<f64> {
    let n = d2.len();
    let mut beta = 1.0;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut p = vec![0.0; n];
    for _ in 0..200 {
        // Shift by the smallest distance so the largest weight is 1.
        let min = d2
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &d)| d)
            .fold(f64::INFINITY, f64::min);
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for j in 0..n {
            p[j] = if j == i {
                0.0
            } else {
                (-(d2[j] - min) * beta).exp()
            };
            sum += p[j];
            weighted += p[j] * (d2[j] - min);
        }
        let entropy = sum.ln() + beta * weighted / sum;
        p.iter_mut().for_each(|v| *v /= sum);
        let diff = entropy - target_entropy;
        if diff.abs() < 1e-10 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
    }
    p
}

/// Exact t-SNE with early exaggeration, momentum and per-coordinate gains.
pub fn tsne(x: &Matrix, cfg: &TsneConfig, seed: u64) -> Result<Matrix> {
    let n = x.rows();
    if n > TSNE_MAX_POINTS {
        return Err(Error::Invalid(format!(
            "exact t-SNE is limited to {TSNE_MAX_POINTS} points, got {n}"
        )));
    }
    if !(cfg.perplexity > 0.0 && 3.0 * cfg.perplexity < (n as f64 - 1.0)) {
        return Err(Error::Invalid(format!(
            "perplexity {} infeasible for {n} points (must be below {:.3})",
            cfg.perplexity,
            (n as f64 - 1.0) / 3.0
        )));
    }
    if !x.all_finite() {
        return Err(Error::Invalid("non-finite input to t-SNE".into()));
    }
    let d2: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| squared_distance(x.row(i), x.row(j))).collect())
        .collect();
    let target = cfg.perplexity.ln();
    let cond: Vec<Vec<f64>> = (0..n).map(|i| conditional_row(&d2[i], i, target)).collect();
    let mut p = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            ((cond[i][j] + cond[j][i]) / (2.0 * n as f64)).max(1e-12)
        }
    });

    let mut r = rng::rng_for(seed, &[stream::TSNE]);
    let mut y = Matrix::random_normal(n, 2, 1e-4, &mut r);
    let mut update = Matrix::zeros(n, 2);
    let mut gains = Matrix::from_fn(n, 2, |_, _| 1.0);
    let mut num = Matrix::zeros(n, n);
    p.scale(cfg.exaggeration);
    for it in 0..cfg.iterations {
        if it == cfg.exaggeration_iters {
            p.scale(1.0 / cfg.exaggeration);
        }
        let momentum = if it < cfg.exaggeration_iters { 0.5 } else { 0.8 };
        let mut z = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = if i == j {
                    0.0
                } else {
                    1.0 / (1.0 + squared_distance(y.row(i), y.row(j)))
                };
                num[(i, j)] = v;
                z += v;
            }
        }
        let mut grad = Matrix::zeros(n, 2);
        for i in 0..n {
            let (mut g0, mut g1) = (0.0, 0.0);
            for j in 0..n {
                let w = (p[(i, j)] - num[(i, j)] / z) * num[(i, j)];
                g0 += w * (y[(i, 0)] - y[(j, 0)]);
                g1 += w * (y[(i, 1)] - y[(j, 1)]);
            }
            grad[(i, 0)] = 4.0 * g0;
            grad[(i, 1)] = 4.0 * g1;
        }
        for k in 0..n * 2 {
            let g = grad.as_slice()[k];
            let u = update.as_slice()[k];
            let gain = &mut gains.as_mut_slice()[k];
            *gain = if (g > 0.0) != (u > 0.0) {
                *gain + 0.2
            } else {
                (*gain * 0.8).max(0.01)
            };
            let step = momentum * u - cfg.learning_rate * *gain * g;
            update.as_mut_slice()[k] = step;
            y.as_mut_slice()[k] += step;
        }
        let mean = [
            y.column(0).iter().sum::<f64>() / n as f64,
            y.column(1).iter().sum::<f64>() / n as f64,
        ];
        for i in 0..n {
            y[(i, 0)] -= mean[0];
            y[(i, 1)] -= mean[1];
        }
    }
    if !y.all_finite() {
        return Err(Error::Training {
            epoch: cfg.iterations,
            message: "t-SNE diverged".into(),
        });
    }
    Ok(y)
}

/// Projection onto the top `k` principal components, found by orthogonal
/// iteration on the covariance. Each component is signed so that its
/// largest-magnitude loading is positive.
pub fn pca(x: &Matrix, k: usize, seed: u64) -> Result<Matrix> {
    let (n, d) = x.shape();
    if n < 2 || k == 0 || k > d {
        return Err(Error::Invalid(format!(
            "cannot take {k} components of {n} points in {d} dimensions"
        )));
    }
    let means: Vec<f64> = x.column_sums().iter().map(|s| s / n as f64).collect();
    let mut xc = x.clone();
    for i in 0..n {
        for (v, m) in xc.row_mut(i).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    let scale = 1.0 / (n as f64 - 1.0);
    let trace: f64 = xc.as_slice().iter().map(|v| v * v).sum::<f64>() * scale;
    let apply = |q: &Matrix| -> Matrix {
        let mut c = xc.matmul_tn(&xc.matmul(q).expect("conforming")).expect("conforming");
        c.scale(scale);
        c
    };
    let mut r = rng::rng_for(seed, &[stream::PCA]);
    let pairs = top_eigenpairs(d, k, apply, 1e-10 * (1.0 + trace), 100_000, &mut r)?;
    let mut v = pairs.vectors;
    for j in 0..k {
        let col = v.column(j);
        let pivot = col
            .iter()
            .cloned()
            .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        if pivot < 0.0 {
            for i in 0..d {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
    xc.matmul(&v)
}
