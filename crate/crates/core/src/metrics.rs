//! Classification and clustering metrics, per-seed summaries and paired
//! significance tests.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_util::inf_f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub f1_micro: f64,
    /// `confusion[true][pred]`
    pub confusion: Vec<Vec<usize>>,
}

pub fn classification_metrics(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<ClassificationMetrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Invalid("no predictions to score".into()));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Invalid(format!(
                "label pair ({t}, {p}) outside {n_classes} classes"
            )));
        }
        confusion[t][p] += 1;
    }
    let n = y_true.len();
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let accuracy = correct as f64 / n as f64;

    let mut f1_sum = 0.0;
    let (mut tp_all, mut fp_all, mut fn_all) = (0usize, 0usize, 0usize);
    for c in 0..n_classes {
        let tp = confusion[c][c];
        let predicted: usize = (0..n_classes).map(|t| confusion[t][c]).sum();
        let actual: usize = confusion[c].iter().sum();
        let (fp, fn_) = (predicted - tp, actual - tp);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        f1_sum += f1(tp, fp, fn_);
    }
    let f1_macro = if n_classes == 0 {
        0.0
    } else {
        f1_sum / n_classes as f64
    };
    let f1_micro = f1(tp_all, fp_all, fn_all);
    Ok(ClassificationMetrics {
        accuracy,
        f1_macro,
        f1_micro,
        confusion,
    })
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringMetrics {
    pub nmi: f64,
    pub ari: f64,
    pub homogeneity: f64,
    pub completeness: f64,
}

/// Contingency table between two labelings, with arbitrary label values.
#[derive(Debug, Clone)]
pub struct Contingency {
    pub counts: Vec<Vec<usize>>,
    pub row_sums: Vec<usize>,
    pub col_sums: Vec<usize>,
    pub n: usize,
}

fn relabel(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect();
    (out, ids.len())
}

impl Contingency {
    pub fn new(u: &[usize], v: &[usize]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Shape(format!(
                "partitions of length {} and {}",
                u.len(),
                v.len()
            )));
        }
        let (ru, ku) = relabel(u);
        let (rv, kv) = relabel(v);
        let mut counts = vec![vec![0usize; kv]; ku];
        for (&a, &b) in ru.iter().zip(&rv) {
            counts[a][b] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..kv).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Contingency {
            counts,
            row_sums,
            col_sums,
            n: u.len(),
        })
    }

    /// Both labelings induce the same partition.
    pub fn is_matching(&self) -> bool {
        self.row_sums.len() == self.col_sums.len()
            && self
                .counts
                .iter()
                .all(|r| r.iter().filter(|&&c| c > 0).count() == 1)
    }
}

fn entropy(sizes: &[usize], n: usize) -> f64 {
    let n = n as f64;
    -sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// `truth` plays the role of the classes and `pred` of the clusters.
pub fn clustering_metrics(truth: &[usize], pred: &[usize]) -> Result<ClusteringMetrics> {
    let c = Contingency::new(truth, pred)?;
    if c.n < 2 {
        return Err(Error::Invalid("clustering metrics need at least two points".into()));
    }
    let n = c.n as f64;
    let h_u = entropy(&c.row_sums, c.n);
    let h_v = entropy(&c.col_sums, c.n);
    let mut mi = 0.0;
    for (i, row) in c.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (c.row_sums[i] as f64 * c.col_sums[j] as f64)).ln();
            }
        }
    }
    let mi = mi.max(0.0);
    let matching = c.is_matching();
    let nmi = if matching {
        1.0
    } else if h_u == 0.0 || h_v == 0.0 {
        0.0
    } else {
        (mi / (h_u * h_v).sqrt()).min(1.0)
    };
    // H(U|V) = H(U) - I(U;V)
    let h_u_given_v = (h_u - mi).max(0.0);
    let h_v_given_u = (h_v - mi).max(0.0);
    let homogeneity = if h_u_given_v == 0.0 || h_u == 0.0 {
        1.0
    } else {
        1.0 - h_u_given_v / h_u
    };
    let completeness = if h_v_given_u == 0.0 || h_v == 0.0 {
        1.0
    } else {
        1.0 - h_v_given_u / h_v
    };

    let sum_ij: f64 = c.counts.iter().flatten().map(|&x| comb2(x)).sum();
    let sum_a: f64 = c.row_sums.iter().map(|&x| comb2(x)).sum();
    let sum_b: f64 = c.col_sums.iter().map(|&x| comb2(x)).sum();
    let expected = sum_a * sum_b / comb2(c.n);
    let max_index = 0.5 * (sum_a + sum_b);
    let ari = if max_index == expected {
        if matching {
            1.0
        } else {
            0.0
        }
    } else {
        (sum_ij - expected) / (max_index - expected)
    };
    Ok(ClusteringMetrics {
        nmi,
        ari,
        homogeneity,
        completeness,
    })
}

/// Per-seed values of one metric for one (method, dataset) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub dataset: String,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl RunSummary {
    pub fn new(method: impl Into<String>, dataset: impl Into<String>, values: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&values);
        RunSummary {
            method: method.into(),
            dataset: dataset.into(),
            values,
            mean,
            std,
        }
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    #[serde(with = "inf_f64")]
    pub t: f64,
    pub p_two_sided: f64,
    #[serde(with = "inf_f64")]
    pub cohens_d: f64,
    pub ci95_a: (f64, f64),
    pub ci95_b: (f64, f64),
    /// Differences had zero variance, so `t`, `p` and `d` are sentinels.
    pub degenerate: bool,
}

/// Paired t-test of `a` against `b`, matched by position.
pub fn compare_methods(a: &[f64], b: &[f64]) -> Result<Comparison> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "paired samples of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Invalid("paired t-test needs at least two pairs".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let (mean, sd) = mean_std(&diffs);
    let df = n - 1.0;
    let (t, p, d, degenerate) = if sd == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0, 0.0, true)
        } else {
            let s = mean.signum() * f64::INFINITY;
            (s, 0.0, s, true)
        }
    } else {
        let t = mean / (sd / n.sqrt());
        (t, t_two_sided_p(t, df), mean / sd, false)
    };
    Ok(Comparison {
        t,
        p_two_sided: p,
        cohens_d: d,
        ci95_a: ci95(a),
        ci95_b: ci95(b),
        degenerate,
    })
}

/// Two-sided 95% t interval for the mean.
pub fn ci95(values: &[f64]) -> (f64, f64) {
    let (mean, sd) = mean_std(values);
    if values.len() < 2 {
        return (mean, mean);
    }
    let n = values.len() as f64;
    let half = t_quantile(0.975, n - 1.0) * sd / n.sqrt();
    (mean - half, mean + half)
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5).clamp(0.0, 1.0)
}

pub fn t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * t_two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse of [`t_cdf`] by bisection.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must lie in (0, 1)");
    let (mut lo, mut hi) = (-1.0, 1.0);
    while t_cdf(lo, df) > p {
        lo *= 2.0;
    }
    while t_cdf(hi, df) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `I_x(a, b)` via the continued fraction evaluated with modified Lentz.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
