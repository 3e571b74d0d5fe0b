//! Label diffusion through the normalized affinity graph.
//!
//! Solves (I - alpha S) Z = Y column-block-wise with conjugate gradient
//! (the system is symmetric positive definite for 0 < alpha < 1 and
//! spectral radius of S at most 1), then turns the solution into per-row
//! probability distributions, hard pseudo-labels, entropy-based certainty
//! weights, and class-balance weights.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::corpus::IndexedDataset;
use crate::error::{Error, Result};
use crate::graph::SparseAffinity;
use crate::parallel;

/// Row mass below this is treated as unreachable and falls back to uniform.
const FALLBACK_MASS: f64 = 1e-12;

/// One-hot rows for labeled points, zero rows for unlabeled.
#[derive(Debug, Clone)]
pub struct SeedMatrix {
    values: Vec<f64>,
    pub n: usize,
    pub num_classes: usize,
}

impl SeedMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.num_classes..(i + 1) * self.num_classes]
    }

    /// Column `c` extracted as a contiguous vector.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.values[i * self.num_classes + c]).collect()
    }
}

/// Build the seed matrix from the dataset's labeled mask.
///
/// Warns (but proceeds) when some class has no labeled example.
pub fn seed_matrix(dataset: &IndexedDataset) -> Result<SeedMatrix> {
    let n = dataset.len();
    let c = dataset.num_classes;
    let mut values = vec![0.0; n * c];
    let mut per_class = vec![0usize; c];
    let mut labeled = 0usize;
    for i in 0..n {
        if dataset.labeled_mask[i] {
            let class = dataset.gold_labels[i] as usize;
            values[i * c + class] = 1.0;
            per_class[class] += 1;
            labeled += 1;
        }
    }
    if labeled == 0 {
        return Err(Error::NoLabeledPoints);
    }
    for (class, &count) in per_class.iter().enumerate() {
        if count == 0 {
            log::warn!("class {class} has no labeled seed point");
        }
    }
    Ok(SeedMatrix {
        values,
        n,
        num_classes: c,
    })
}

/// Diffusion output: the raw linear-system solution plus row-processed
/// probability distributions.
#[derive(Debug, Clone)]
pub struct LabelDistribution {
    pub n: usize,
    pub num_classes: usize,
    /// Raw solution Z of (I - alpha S) Z = Y, row-major.
    solution: Vec<f64>,
    /// Row-processed distribution: clamped, renormalized, uniform fallback.
    probabilities: Vec<f64>,
    /// max over class columns of ||(I - alpha S) z_c - y_c||_2.
    pub residual_norm: f64,
    /// Largest per-column CG iteration count.
    pub iterations: usize,
    pub converged: bool,
    /// Rows whose clamped mass was below threshold (unreachable nodes).
    pub fallback_rows: Vec<usize>,
}

impl LabelDistribution {
    pub fn solution_row(&self, i: usize) -> &[f64] {
        &self.solution[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn probability_row(&self, i: usize) -> &[f64] {
        &self.probabilities[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn solution(&self) -> &[f64] {
        &self.solution
    }

    /// Assemble from a raw solution: clamp negatives, renormalize rows to
    /// sum 1, and send near-zero-mass rows to the uniform distribution.
    pub fn from_solution(
        solution: Vec<f64>,
        n: usize,
        num_classes: usize,
        residual_norm: f64,
        iterations: usize,
        converged: bool,
    ) -> LabelDistribution {
        let mut probabilities = solution.clone();
        let mut fallback_rows = Vec::new();
        for i in 0..n {
            let row = &mut probabilities[i * num_classes..(i + 1) * num_classes];
            let mut mass = 0.0;
            for v in row.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
                mass += *v;
            }
            if mass < FALLBACK_MASS {
                let uniform = 1.0 / num_classes as f64;
                row.fill(uniform);
                fallback_rows.push(i);
            } else {
                for v in row.iter_mut() {
                    *v /= mass;
                }
            }
        }
        LabelDistribution {
            n,
            num_classes,
            solution,
            probabilities,
            residual_norm,
            iterations,
            converged,
            fallback_rows,
        }
    }
}

/// Conjugate gradient for (I - alpha S) x = b. Returns the solution, the
/// recomputed final residual norm, and the iteration count.
fn solve_column(
    s: &SparseAffinity,
    b: &[f64],
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64, usize) {
    let n = b.len();
    let apply = |x: &[f64], scratch: &mut Vec<f64>, out: &mut Vec<f64>| {
        s.matvec_seq(x, scratch);
        for i in 0..n {
            out[i] = x[i] - alpha * scratch[i];
        }
    };

    let b_norm = dot(b, b).sqrt();
    let threshold = tol * b_norm;
    let mut scratch = vec![0.0; n];
    let mut ax = vec![0.0; n];

    // start from the seed column: exact for alpha -> 0
    let mut x = b.to_vec();
    apply(&x, &mut scratch, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut rs_old = dot(&r, &r);
    let mut iterations = 0usize;

    if rs_old.sqrt() > threshold {
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        for _ in 0..max_iter {
            iterations += 1;
            apply(&p, &mut scratch, &mut ap);
            let denom = dot(&p, &ap);
            if denom == 0.0 {
                break;
            }
            let step = rs_old / denom;
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            let rs_new = dot(&r, &r);
            if rs_new.sqrt() <= threshold {
                break;
            }
            let beta = rs_new / rs_old;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rs_old = rs_new;
        }
    }

    // recompute the true residual from the returned solution
    apply(&x, &mut scratch, &mut ax);
    let residual = b
        .iter()
        .zip(&ax)
        .map(|(bi, ai)| (bi - ai) * (bi - ai))
        .sum::<f64>()
        .sqrt();
    (x, residual, iterations)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Diffuse seed labels through the normalized graph.
///
/// Per-class columns solve independently (and in parallel). The reported
/// residual is recomputed from the returned solution, never taken from the
/// CG recurrence. Non-convergence is an error carrying the partial result.
pub fn diffuse(
    s: &SparseAffinity,
    y: &SeedMatrix,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LabelDistribution> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    assert_eq!(s.n, y.n, "graph and seed matrix disagree on n");
    let n = y.n;
    let c = y.num_classes;

    let columns = parallel::map_indexed(c, |class| {
        let b = y.column(class);
        let b_norm = dot(&b, &b).sqrt();
        let (x, residual, iterations) = solve_column(s, &b, alpha, tol, max_iter);
        let converged = residual <= tol * b_norm;
        (x, residual, iterations, converged)
    });

    let mut solution = vec![0.0; n * c];
    let mut residual_norm = 0.0f64;
    let mut iterations = 0usize;
    let mut converged = true;
    for (class, (x, residual, iters, ok)) in columns.into_iter().enumerate() {
        for i in 0..n {
            solution[i * c + class] = x[i];
        }
        residual_norm = residual_norm.max(residual);
        iterations = iterations.max(iters);
        converged &= ok;
    }

    let dist = LabelDistribution::from_solution(
        solution,
        n,
        c,
        residual_norm,
        iterations,
        converged,
    );
    if !converged {
        return Err(Error::NotConverged {
            iterations,
            residual: residual_norm,
            partial: Box::new(dist),
        });
    }
    Ok(dist)
}

/// Per-point hard labels, certainty weights, and class-balance weights.
#[derive(Debug, Clone)]
pub struct PseudoLabelSet {
    pub labels: Vec<u32>,
    /// omega in [0, 1]: 1 = one-hot row or gold seed, 0 = uniform row.
    pub certainty: Vec<f64>,
    /// zeta per class: N / (C * n_j), 0 for absent classes.
    pub class_weights: Vec<f64>,
    /// True where the point kept its gold label.
    pub is_seed: Vec<bool>,
}

/// Entropy-based certainty of one probability row: 1 - H(p) / ln C.
pub fn certainty_from_row(row: &[f64]) -> f64 {
    let c = row.len();
    if c < 2 {
        return 1.0;
    }
    let entropy: f64 = row
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum();
    1.0 - entropy / (c as f64).ln()
}

/// Argmax with ties resolved to the smallest class index.
fn argmax(row: &[f64]) -> u32 {
    let mut best = 0usize;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best as u32
}

/// Hard labels + certainty weights from a processed label distribution.
///
/// Labeled points keep their gold label with certainty 1; uniform-fallback
/// rows get certainty 0.
pub fn extract_pseudo_labels(z: &LabelDistribution, dataset: &IndexedDataset) -> PseudoLabelSet {
    assert_eq!(z.n, dataset.len());
    let n = z.n;
    let mut fallback = vec![false; n];
    for &i in &z.fallback_rows {
        fallback[i] = true;
    }

    let rows: Vec<(u32, f64, bool)> = parallel::map_indexed(n, |i| {
        if dataset.labeled_mask[i] {
            (dataset.gold_labels[i], 1.0, true)
        } else {
            let row = z.probability_row(i);
            let label = argmax(row);
            let omega = if fallback[i] { 0.0 } else { certainty_from_row(row) };
            (label, omega, false)
        }
    });

    let labels: Vec<u32> = rows.iter().map(|r| r.0).collect();
    let certainty = rows.iter().map(|r| r.1).collect();
    let is_seed = rows.iter().map(|r| r.2).collect();
    let class_weights = class_weights(&labels, z.num_classes);
    PseudoLabelSet {
        labels,
        certainty,
        class_weights,
        is_seed,
    }
}

/// Class-balance weights zeta_j = N / (C * n_j) over the assigned labels.
///
/// Classes with no points get weight 0 (with a warning).
pub fn class_weights(labels: &[u32], num_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        counts[l as usize] += 1;
    }
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .enumerate()
        .map(|(class, &n_j)| {
            if n_j == 0 {
                log::warn!("class {class} has no labeled or pseudo-labeled points");
                0.0
            } else {
                total as f64 / (num_classes as f64 * n_j as f64)
            }
        })
        .collect()
}

/// Summary statistics attached to a pseudo-label export.
#[derive(Debug, Clone, Serialize)]
pub struct PropagationReport {
    pub class_weights: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub fallback_count: usize,
}

impl PropagationReport {
    pub fn new(z: &LabelDistribution, set: &PseudoLabelSet) -> PropagationReport {
        PropagationReport {
            class_weights: set.class_weights.clone(),
            residual_norm: z.residual_norm,
            iterations: z.iterations,
            converged: z.converged,
            fallback_count: z.fallback_rows.len(),
        }
    }
}

/// Write `index,pseudo_label,certainty,is_seed` CSV plus a JSON sidecar with
/// the propagation report (same stem, `.json` extension).
pub fn export_pseudo_labels(
    set: &PseudoLabelSet,
    report: &PropagationReport,
    csv_path: &Path,
) -> Result<()> {
    let mut out = String::from("index,pseudo_label,certainty,is_seed\n");
    for i in 0..set.labels.len() {
        writeln!(
            out,
            "{},{},{},{}",
            i, set.labels[i], set.certainty[i], set.is_seed[i]
        )
        .expect("writing to string");
    }
    std::fs::write(csv_path, out)?;
    let sidecar = csv_path.with_extension("json");
    std::fs::write(sidecar, serde_json::to_string_pretty(report)?)?;
    Ok(())
}
