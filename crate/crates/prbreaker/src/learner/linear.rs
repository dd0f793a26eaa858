//! Logistic-regression baselines: size-only and path-token TF-IDF.
//!
//! Both train by iteratively reweighted least squares with a small ridge
//! term and a dense Cholesky solve. Deterministic: no randomness anywhere.

use super::{check_labels, sigmoid, LearnerError};
use crate::record::PullRequestRecord;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .weights
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }

    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| sigmoid(self.decision(r))).collect()
    }
}

/// Solves A x = b for symmetric positive-definite A, in place.
fn cholesky_solve(mut a: Vec<Vec<f64>>, b: &[f64]) -> Result<Vec<f64>, LearnerError> {
    let n = b.len();
    for j in 0..n {
        for k in 0..j {
            let l_jk = a[j][k];
            for row in a.iter_mut().skip(j) {
                row[j] -= row[k] * l_jk;
            }
        }
        let d = a[j][j];
        if d <= 0.0 || !d.is_finite() {
            return Err(LearnerError::Solver(format!("non-positive pivot at {j}")));
        }
        let root = d.sqrt();
        for row in a.iter_mut().skip(j) {
            row[j] /= root;
        }
    }
    // Forward substitution L z = b, then back substitution L^T x = z.
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= a[i][k] * x[k];
        }
        x[i] /= a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= a[k][i] * x[k];
        }
        x[i] /= a[i][i];
    }
    Ok(x)
}

/// IRLS logistic regression with ridge penalty `l2` (not applied to the
/// intercept). Converges when the max parameter step drops below `tol`.
pub fn train_logistic(
    rows: &[Vec<f64>],
    labels: &[bool],
    feature_names: &[String],
    l2: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LinearModel, LearnerError> {
    if rows.len() != labels.len() {
        return Err(LearnerError::ShapeMismatch {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    check_labels(labels)?;
    let d = feature_names.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(LearnerError::InvalidParams(format!(
                "row {i} has {} values, expected {d}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(LearnerError::NonFinite {
                row: i,
                column: feature_names[j].clone(),
            });
        }
    }

    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    // beta = [intercept, weights...]; design column 0 is the constant 1.
    let dim = d + 1;
    let mut beta = vec![0.0; dim];
    let penalized_loss = |beta: &[f64]| -> f64 {
        let data: f64 = rows
            .iter()
            .zip(&y)
            .map(|(row, &yy)| {
                let eta = beta[0] + beta[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>();
                super::logistic_loss(eta, yy)
            })
            .sum();
        data + 0.5 * l2 * beta[1..].iter().map(|b| b * b).sum::<f64>()
    };

    for _ in 0..max_iter {
        let mut hessian = vec![vec![0.0; dim]; dim];
        let mut gradient = vec![0.0; dim];
        for (row, &yy) in rows.iter().zip(&y) {
            let eta = beta[0] + beta[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>();
            let p = sigmoid(eta);
            let w = (p * (1.0 - p)).max(1e-12);
            let resid = yy - p;
            gradient[0] += resid;
            hessian[0][0] += w;
            for (j, &xj) in row.iter().enumerate() {
                gradient[j + 1] += resid * xj;
                hessian[j + 1][0] += w * xj;
                for (k, &xk) in row.iter().enumerate().take(j + 1) {
                    hessian[j + 1][k + 1] += w * xj * xk;
                }
            }
        }
        for j in 1..dim {
            gradient[j] -= l2 * beta[j];
            hessian[j][j] += l2;
        }
        // Mirror the lower triangle; cholesky_solve reads the full matrix.
        for k in 1..dim {
            let (head, tail) = hessian.split_at_mut(k);
            for (row, &v) in head.iter_mut().zip(&tail[0]) {
                row[k] = v;
            }
        }

        let mut step = cholesky_solve(hessian.clone(), &gradient);
        if step.is_err() {
            // Jitter the diagonal once for near-singular designs.
            for (j, row) in hessian.iter_mut().enumerate() {
                row[j] += 1e-8;
            }
            step = cholesky_solve(hessian, &gradient);
        }
        let step = step?;

        // Damped Newton: halve the step until the penalized loss improves,
        // which keeps saturated (separable) problems from oscillating.
        let current = penalized_loss(&beta);
        let mut scale = 1.0;
        let mut advanced = false;
        for _ in 0..40 {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s * scale).collect();
            if penalized_loss(&trial) <= current + 1e-12 {
                let max_step = step
                    .iter()
                    .map(|s| (s * scale).abs())
                    .fold(0.0f64, f64::max);
                beta = trial;
                advanced = max_step >= tol;
                break;
            }
            scale *= 0.5;
        }
        if !advanced {
            break;
        }
    }

    Ok(LinearModel {
        feature_names: feature_names.to_vec(),
        weights: beta[1..].to_vec(),
        intercept: beta[0],
    })
}

/// Univariate logistic regression on `log1p(total_changes)`.
pub fn train_size_only(log_sizes: &[f64], labels: &[bool]) -> Result<LinearModel, LearnerError> {
    let rows: Vec<Vec<f64>> = log_sizes.iter().map(|&x| vec![x]).collect();
    train_logistic(
        &rows,
        labels,
        &["log1p_total_changes".to_string()],
        1e-6,
        1e-8,
        100,
    )
}

/// TF-IDF over path tokens with a logistic head. The vocabulary is frozen
/// at train time; unseen tokens are ignored at predict time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTokenModel {
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
    pub linear: LinearModel,
}

/// Splits every file path on `/`, `.`, `-`, `_` and lowercases.
pub fn path_tokens(record: &PullRequestRecord) -> Vec<String> {
    record
        .files
        .iter()
        .flat_map(|f| f.path.split(['/', '.', '-', '_']))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub const PATH_TOKEN_MIN_DF: usize = 5;

pub fn train_path_token_baseline(
    records: &[PullRequestRecord],
    labels: &[bool],
) -> Result<PathTokenModel, LearnerError> {
    if records.len() != labels.len() {
        return Err(LearnerError::ShapeMismatch {
            rows: records.len(),
            labels: labels.len(),
        });
    }
    check_labels(labels)?;

    let docs: Vec<Vec<String>> = records.iter().map(path_tokens).collect();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in &docs {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for token in seen {
            *df.entry(token).or_default() += 1;
        }
    }
    let mut vocabulary: Vec<String> = df
        .iter()
        .filter(|(_, &count)| count >= PATH_TOKEN_MIN_DF)
        .map(|(&token, _)| token.to_string())
        .collect();
    vocabulary.sort_unstable();
    if vocabulary.is_empty() {
        return Err(LearnerError::EmptyVocabulary);
    }
    let n_docs = docs.len() as f64;
    let idf: Vec<f64> = vocabulary
        .iter()
        .map(|t| (n_docs / df[t.as_str()] as f64).ln())
        .collect();

    let index: HashMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let rows: Vec<Vec<f64>> = docs
        .iter()
        .map(|doc| {
            let mut row = vec![0.0; vocabulary.len()];
            for token in doc {
                if let Some(&i) = index.get(token.as_str()) {
                    row[i] += 1.0;
                }
            }
            for (v, w) in row.iter_mut().zip(&idf) {
                *v *= w;
            }
            row
        })
        .collect();

    let linear = train_logistic(&rows, labels, &vocabulary, 1e-3, 1e-8, 60)?;
    Ok(PathTokenModel {
        vocabulary,
        idf,
        linear,
    })
}

impl PathTokenModel {
    pub fn vectorize(&self, record: &PullRequestRecord) -> Vec<f64> {
        let mut row = vec![0.0; self.vocabulary.len()];
        for token in path_tokens(record) {
            if let Ok(i) = self.vocabulary.binary_search(&token) {
                row[i] += 1.0;
            }
        }
        for (v, w) in row.iter_mut().zip(&self.idf) {
            *v *= w;
        }
        row
    }

    pub fn predict_proba(&self, records: &[PullRequestRecord]) -> Vec<f64> {
        records
            .iter()
            .map(|r| sigmoid(self.linear.decision(&self.vectorize(r))))
            .collect()
    }
}
