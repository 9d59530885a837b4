//! Principal component analysis and plot-ready CSV output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchgen::Label;

/// Jacobi sweeps stop once the off-diagonal Frobenius norm is below this.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("need at least 2 samples, got {n}")]
    DegenerateInput { n: usize },
    #[error("expected {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot keep {m} components from {n} samples of dimension {d}")]
    TooManyComponents { m: usize, n: usize, d: usize },
}

impl AnalysisError {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisError::DegenerateInput { .. } => "DegenerateInput",
            AnalysisError::DimensionMismatch { .. } => "DimensionMismatch",
            AnalysisError::TooManyComponents { .. } => "TooManyComponents",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Top `m` unit eigenvectors, one per row.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub explained_ratio: Vec<f64>,
    /// Every eigenvalue of the covariance, descending.
    pub eigenvalues: Vec<f64>,
    pub total_variance: f64,
    pub n_samples: usize,
}

/// Sample covariance (divisor `n - 1`) of rows already centered or not.
pub fn covariance(x: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>), AnalysisError> {
    let n = x.len();
    if n < 2 {
        return Err(AnalysisError::DegenerateInput { n });
    }
    let d = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(AnalysisError::DimensionMismatch { expected: d, found: r.len() });
    }
    let mut mean = vec![0.0; d];
    for r in x {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut c = vec![vec![0.0; d]; d];
    for r in x {
        let z: Vec<f64> = r.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..d {
            for j in i..d {
                c[i][j] += z[i] * z[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            c[i][j] /= (n - 1) as f64;
            c[j][i] = c[i][j];
        }
    }
    Ok((mean, c))
}

fn off_norm(a: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                s += v * v;
            }
        }
    }
    s.sqrt()
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and matching unit eigenvectors
/// (one per row), each signed so its largest-magnitude entry is positive.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    // v[i][k]: entry i of eigenvector k
    let mut v: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) < JACOBI_TOL {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut e: Vec<f64> = (0..d).map(|i| v[i][k]).collect();
            let big = (0..d).fold(0, |b, i| if e[i].abs() > e[b].abs() { i } else { b });
            if e[big] < 0.0 {
                e.iter_mut().for_each(|x| *x = -*x);
            }
            e
        })
        .collect();
    (values, vectors)
}

/// Fits PCA on rows of `x`, keeping `m` components.
pub fn pca_fit(x: &[Vec<f64>], m: usize) -> Result<PcaModel, AnalysisError> {
    let (mean, cov) = covariance(x)?;
    let (n, d) = (x.len(), mean.len());
    if m > (n - 1).min(d) {
        return Err(AnalysisError::TooManyComponents { m, n, d });
    }
    let (values, vectors) = symmetric_eigen(&cov);
    let total: f64 = (0..d).map(|i| cov[i][i]).sum();
    let explained_variance: Vec<f64> = values[..m].to_vec();
    let explained_ratio = explained_variance.iter().map(|&v| if total > 0.0 { v / total } else { 0.0 }).collect();
    Ok(PcaModel {
        mean,
        components: vectors[..m].to_vec(),
        explained_variance,
        explained_ratio,
        eigenvalues: values,
        total_variance: total,
        n_samples: n,
    })
}

/// Scores `(x - mean) · componentsᵀ`, one row per sample.
pub fn project(model: &PcaModel, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let d = model.mean.len();
    x.iter()
        .map(|r| {
            if r.len() != d {
                return Err(AnalysisError::DimensionMismatch { expected: d, found: r.len() });
            }
            Ok(model
                .components
                .iter()
                .map(|c| r.iter().zip(&model.mean).zip(c).map(|((v, m), w)| (v - m) * w).sum())
                .collect())
        })
        .collect()
}

/// `instance_id,pc1,pc2,class`; the class column is empty when unknown.
/// Needs at least two components.
pub fn scatter_csv(ids: &[String], scores: &[Vec<f64>], classes: &[Option<Label>]) -> String {
    let mut s = String::from("instance_id,pc1,pc2,class\n");
    for (i, id) in ids.iter().enumerate() {
        let class = classes.get(i).copied().flatten().map_or("", Label::as_str);
        s.push_str(&format!("{id},{:.12e},{:.12e},{class}\n", scores[i][0], scores[i][1]));
    }
    s
}

/// `component,eigenvalue,explained_ratio,cumulative_ratio`.
pub fn variance_csv(model: &PcaModel) -> String {
    let mut s = String::from("component,eigenvalue,explained_ratio,cumulative_ratio\n");
    let mut cum = 0.0;
    for (i, (v, r)) in model.explained_variance.iter().zip(&model.explained_ratio).enumerate() {
        cum += r;
        s.push_str(&format!("PC{},{v:.12e},{r:.12},{cum:.12}\n", i + 1));
    }
    s
}

/// Metadata written next to the PCA outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaMeta {
    /// Which rows the fit used: `joint` means infected and clean together.
    pub fit: String,
    pub standardized: bool,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_components: usize,
    pub explained_ratio: Vec<f64>,
}

pub type Point = (f64, f64);

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull by the monotone chain, counter-clockwise, without collinear
/// points. Degenerate inputs give one or two points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut p: Vec<Point> = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() <= 2 {
        return p;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    if hull.len() < 2 {
        // all points collinear: keep the two extremes
        return vec![p[0], p[p.len() - 1]];
    }
    hull
}

fn axes(poly: &[Point]) -> Vec<Point> {
    let mut out = Vec::new();
    let n = poly.len();
    if n < 2 {
        return out;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let e = (b.0 - a.0, b.1 - a.1);
        out.push((-e.1, e.0));
        if n == 2 {
            out.push(e);
        }
    }
    out
}

/// Whether two convex polygons (as returned by [`convex_hull`]) share at
/// least one point, by the separating-axis test.
pub fn hulls_overlap(a: &[Point], b: &[Point]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let all: Vec<Point> = axes(a).into_iter().chain(axes(b)).collect();
    if all.is_empty() {
        return a[0] == b[0];
    }
    all.iter().all(|&(ax, ay)| {
        let proj = |p: &[Point]| {
            p.iter().map(|q| q.0 * ax + q.1 * ay).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let (a0, a1) = proj(a);
        let (b0, b1) = proj(b);
        a0 <= b1 && b0 <= a1
    })
}
