//! Histogram gradient-boosted trees with second-order logistic boosting.
//!
//! Level-wise growth, quantile bin edges, XGBoost-style gain, and leaf
//! values shrunk by the learning rate. Split search runs in parallel over
//! features; per-feature accumulation is sequential in row order and the
//! winning split is reduced in fixed feature order, so the model is
//! bit-identical for any thread count.

use super::{check_labels, logistic_grad_hess, sigmoid, LearnerError};
use crate::derive_seed;
use crate::features::{FeatureMatrix, Stage};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub l2_leaf_penalty: f64,
    pub n_histogram_bins: usize,
    pub subsample_fraction: f64,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_trees: 200,
            learning_rate: 0.05,
            max_depth: 6,
            min_samples_leaf: 20,
            l2_leaf_penalty: 1.0,
            n_histogram_bins: 255,
            subsample_fraction: 1.0,
            seed: 0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let fail = |msg: String| Err(LearnerError::InvalidParams(msg));
        if self.n_trees < 1 {
            return fail("n_trees must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return fail(format!(
                "learning_rate {} outside (0,1]",
                self.learning_rate
            ));
        }
        if self.max_depth < 1 {
            return fail("max_depth must be at least 1".into());
        }
        if self.min_samples_leaf < 1 {
            return fail("min_samples_leaf must be at least 1".into());
        }
        if !(2..=255).contains(&self.n_histogram_bins) {
            return fail(format!(
                "n_histogram_bins {} outside [2,255]",
                self.n_histogram_bins
            ));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return fail(format!(
                "subsample_fraction {} outside (0,1]",
                self.subsample_fraction
            ));
        }
        if self.l2_leaf_penalty < 0.0 {
            return fail("l2_leaf_penalty must be nonnegative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Raw additive contribution for one row. Missing values (NaN) follow
    /// each split's default direction; otherwise `x < threshold` goes left.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    let x = row[*feature];
                    let go_left = if x.is_nan() {
                        *default_left
                    } else {
                        x < *threshold
                    };
                    at = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn uses_feature(&self, feature: usize) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n, Node::Split { feature: f, .. } if *f == feature))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    pub params: GbdtParams,
    pub base_score: f64,
    pub prevalence: f64,
    pub schema_hash: String,
    pub stage: Stage,
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
    /// Mean training logistic loss after each boosting round. Kept
    /// in-memory only; never serialized.
    pub loss_curve: Vec<f64>,
}

/// Per-feature quantile bin edges. `bin(x)` is the count of edges ≤ x, so
/// a split "bin ≤ b" is exactly "x < edges[b]".
struct BinLayout {
    edges: Vec<Vec<f64>>,
}

impl BinLayout {
    fn build(matrix: &FeatureMatrix, max_bins: usize) -> Self {
        let edges = (0..matrix.n_features())
            .into_par_iter()
            .map(|j| {
                let mut values: Vec<f64> = matrix.rows.iter().map(|r| r[j]).collect();
                values.sort_by(|a, b| a.partial_cmp(b).unwrap());
                values.dedup();
                if values.len() <= 1 {
                    return Vec::new();
                }
                if values.len() <= max_bins {
                    return values.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
                }
                let mut cut = Vec::with_capacity(max_bins - 1);
                for b in 1..max_bins {
                    let idx = b * values.len() / max_bins;
                    cut.push((values[idx - 1] + values[idx]) / 2.0);
                }
                cut.dedup();
                cut
            })
            .collect();
        BinLayout { edges }
    }

    fn bin(&self, feature: usize, x: f64) -> u8 {
        self.edges[feature].partition_point(|&e| e <= x) as u8
    }

    fn n_bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }
}

struct SplitChoice {
    gain: f64,
    feature: usize,
    bin: u8,
    default_left: bool,
}

/// Trains the boosted ensemble. Deterministic for a given seed regardless
/// of thread count.
pub fn train_gbdt(
    matrix: &FeatureMatrix,
    labels: &[bool],
    params: &GbdtParams,
) -> Result<GbdtModel, LearnerError> {
    params.validate()?;
    let n = matrix.n_rows();
    if n != labels.len() {
        return Err(LearnerError::ShapeMismatch {
            rows: n,
            labels: labels.len(),
        });
    }
    if n < 2 * params.min_samples_leaf {
        return Err(LearnerError::TooSmall {
            rows: n,
            min: 2 * params.min_samples_leaf,
        });
    }
    check_labels(labels)?;
    for (i, row) in matrix.rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(LearnerError::NonFinite {
                    row: i,
                    column: matrix.names[j].clone(),
                });
            }
        }
    }

    let layout = BinLayout::build(matrix, params.n_histogram_bins);
    // Feature-major binned copy: tight inner loops during histogram fills.
    let binned: Vec<Vec<u8>> = (0..matrix.n_features())
        .into_par_iter()
        .map(|j| matrix.rows.iter().map(|r| layout.bin(j, r[j])).collect())
        .collect();

    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let prevalence = y.iter().sum::<f64>() / n as f64;
    let p0 = prevalence.clamp(1e-12, 1.0 - 1e-12);
    let base_score = (p0 / (1.0 - p0)).ln();

    let mut raw = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut loss_curve = Vec::with_capacity(params.n_trees);

    for round in 0..params.n_trees {
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        grad.par_iter_mut()
            .zip(hess.par_iter_mut())
            .zip(raw.par_iter().zip(y.par_iter()))
            .for_each(|((g, h), (&f, &yy))| {
                let (gi, hi) = logistic_grad_hess(f, yy);
                *g = gi;
                *h = hi;
            });

        let rows = sample_rows(n, params, round);
        let tree = grow_tree(&binned, &layout, &grad, &hess, rows, params);
        // Numeric routing equals bin routing: x < edges[b] iff bin(x) <= b.
        raw.par_iter_mut().enumerate().for_each(|(i, f)| {
            *f += tree.score(&matrix.rows[i]);
        });
        loss_curve.push(
            raw.iter()
                .zip(&y)
                .map(|(&f, &yy)| super::logistic_loss(f, yy))
                .sum::<f64>()
                / n as f64,
        );
        trees.push(tree);
    }

    Ok(GbdtModel {
        params: *params,
        base_score,
        prevalence,
        schema_hash: matrix.schema_hash.clone(),
        stage: matrix.stage,
        feature_names: matrix.names.clone(),
        trees,
        loss_curve,
    })
}

fn sample_rows(n: usize, params: &GbdtParams, round: usize) -> Vec<u32> {
    if params.subsample_fraction >= 1.0 {
        return (0..n as u32).collect();
    }
    let k = ((params.subsample_fraction * n as f64).round() as usize).clamp(1, n);
    let mut rng =
        ChaCha20Rng::seed_from_u64(derive_seed(params.seed, &format!("subsample-{round}")));
    let mut indices: Vec<u32> = (0..n as u32).collect();
    indices.shuffle(&mut rng);
    indices.truncate(k);
    indices.sort_unstable();
    indices
}

fn grow_tree(
    binned: &[Vec<u8>],
    layout: &BinLayout,
    grad: &[f64],
    hess: &[f64],
    root_rows: Vec<u32>,
    params: &GbdtParams,
) -> Tree {
    let lambda = params.l2_leaf_penalty;
    let mut nodes: Vec<Node> = Vec::new();
    // Every splittable node is expanded until max_depth (level-wise
    // semantics, no leaf-wise budget); traversal order only affects node
    // numbering and is fixed.
    nodes.push(Node::Leaf { value: 0.0 });
    let mut frontier = vec![(0usize, root_rows, 0usize)];

    while let Some((slot, rows, depth)) = frontier.pop() {
        let g_sum: f64 = rows.iter().map(|&r| grad[r as usize]).sum();
        let h_sum: f64 = rows.iter().map(|&r| hess[r as usize]).sum();
        let leaf_value = -g_sum / (h_sum + lambda) * params.learning_rate;

        let splittable =
            depth < params.max_depth && rows.len() >= 2 * params.min_samples_leaf && h_sum > 1e-12;
        let best = if splittable {
            best_split(binned, layout, grad, hess, &rows, g_sum, h_sum, params)
        } else {
            None
        };

        match best {
            None => nodes[slot] = Node::Leaf { value: leaf_value },
            Some(split) => {
                let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
                    .iter()
                    .partition(|&&r| binned[split.feature][r as usize] <= split.bin);
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                let right = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[slot] = Node::Split {
                    feature: split.feature,
                    threshold: layout.edges[split.feature][split.bin as usize],
                    default_left: split.default_left,
                    left,
                    right,
                };
                frontier.push((right, right_rows, depth + 1));
                frontier.push((left, left_rows, depth + 1));
            }
        }
    }
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn best_split(
    binned: &[Vec<u8>],
    layout: &BinLayout,
    grad: &[f64],
    hess: &[f64],
    rows: &[u32],
    g_total: f64,
    h_total: f64,
    params: &GbdtParams,
) -> Option<SplitChoice> {
    let lambda = params.l2_leaf_penalty;
    let parent_obj = g_total * g_total / (h_total + lambda);

    // One independent task per feature; the reduction below walks features
    // in index order, so thread scheduling cannot change the winner.
    let per_feature: Vec<Option<SplitChoice>> = (0..binned.len())
        .into_par_iter()
        .map(|feature| {
            let n_bins = layout.n_bins(feature);
            if n_bins < 2 {
                return None;
            }
            let column = &binned[feature];
            let mut hist_g = vec![0.0f64; n_bins];
            let mut hist_h = vec![0.0f64; n_bins];
            let mut hist_c = vec![0u32; n_bins];
            for &r in rows {
                let b = column[r as usize] as usize;
                hist_g[b] += grad[r as usize];
                hist_h[b] += hess[r as usize];
                hist_c[b] += 1;
            }
            let total: u32 = rows.len() as u32;
            let mut gl = 0.0;
            let mut hl = 0.0;
            let mut cl = 0u32;
            let mut best: Option<SplitChoice> = None;
            for b in 0..n_bins - 1 {
                gl += hist_g[b];
                hl += hist_h[b];
                cl += hist_c[b];
                let cr = total - cl;
                if (cl as usize) < params.min_samples_leaf
                    || (cr as usize) < params.min_samples_leaf
                {
                    continue;
                }
                let gr = g_total - gl;
                let hr = h_total - hl;
                let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_obj);
                if gain > 1e-12 && best.as_ref().is_none_or(|s| gain > s.gain) {
                    best = Some(SplitChoice {
                        gain,
                        feature,
                        bin: b as u8,
                        default_left: cl >= cr,
                    });
                }
            }
            best
        })
        .collect();

    let mut winner: Option<SplitChoice> = None;
    for candidate in per_feature.into_iter().flatten() {
        let better = match &winner {
            None => true,
            Some(w) => candidate.gain > w.gain,
        };
        if better {
            winner = Some(candidate);
        }
    }
    winner
}

impl GbdtModel {
    /// Calibrated probabilities for every row of a conforming matrix.
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        if matrix.schema_hash != self.schema_hash {
            return Err(LearnerError::SchemaMismatch {
                model: self.schema_hash.clone(),
                matrix: matrix.schema_hash.clone(),
            });
        }
        Ok(matrix
            .rows
            .par_iter()
            .map(|row| sigmoid(self.raw_score(row)))
            .collect())
    }

    /// Probabilities without the schema check, for callers holding raw rows.
    pub fn predict_proba_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.par_iter()
            .map(|row| sigmoid(self.raw_score(row)))
            .collect()
    }

    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.score(row)).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::roc_auc;

    fn one_feature_matrix(xs: &[f64], stage_hash: &str) -> FeatureMatrix {
        FeatureMatrix {
            ids: (0..xs.len()).map(|i| format!("pr-{i}")).collect(),
            names: vec!["x".to_string()],
            schema_hash: stage_hash.to_string(),
            stage: Stage::T0,
            rows: xs.iter().map(|&x| vec![x]).collect(),
        }
    }

    fn separable_data(n: usize) -> (FeatureMatrix, Vec<bool>) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 - n as f64 / 2.0 + 0.5).collect();
        let labels: Vec<bool> = xs.iter().map(|&x| x > 0.0).collect();
        (one_feature_matrix(&xs, "h"), labels)
    }

    #[test]
    fn separable_data_reaches_perfect_training_auc() {
        let (matrix, labels) = separable_data(200);
        let params = GbdtParams {
            n_trees: 20,
            ..GbdtParams::default()
        };
        let model = train_gbdt(&matrix, &labels, &params).unwrap();
        let probs = model.predict_proba(&matrix).unwrap();
        assert_eq!(roc_auc(&probs, &labels).unwrap(), 1.0);
    }

    #[test]
    fn single_class_labels_error() {
        let (matrix, _) = separable_data(100);
        let labels = vec![true; 100];
        assert!(matches!(
            train_gbdt(&matrix, &labels, &GbdtParams::default()),
            Err(LearnerError::SingleClass)
        ));
    }

    #[test]
    fn non_finite_features_are_named() {
        let (mut matrix, labels) = separable_data(100);
        matrix.rows[3][0] = f64::NAN;
        match train_gbdt(&matrix, &labels, &GbdtParams::default()) {
            Err(LearnerError::NonFinite { row, column }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "x");
            }
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn zero_tree_model_outputs_prevalence() {
        let model = GbdtModel {
            params: GbdtParams::default(),
            base_score: 0.0,
            prevalence: 0.5,
            schema_hash: "h".to_string(),
            stage: Stage::T0,
            feature_names: vec!["x".to_string()],
            trees: vec![],
            loss_curve: vec![],
        };
        let matrix = one_feature_matrix(&[-1.0, 0.0, 7.0], "h");
        let probs = model.predict_proba(&matrix).unwrap();
        assert!(probs.iter().all(|&p| (p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn handcrafted_tree_is_monotone_and_bounded() {
        let tree = Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.0,
                    default_left: true,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: -1.0 },
                Node::Split {
                    feature: 0,
                    threshold: 5.0,
                    default_left: false,
                    left: 3,
                    right: 4,
                },
                Node::Leaf { value: 0.5 },
                Node::Leaf { value: 2.0 },
            ],
        };
        let model = GbdtModel {
            params: GbdtParams::default(),
            base_score: 0.2,
            prevalence: 0.5,
            schema_hash: "h".to_string(),
            stage: Stage::T0,
            feature_names: vec!["x".to_string()],
            trees: vec![tree],
            loss_curve: vec![],
        };
        let mut last = 0.0;
        for i in -10..20 {
            let p = sigmoid(model.raw_score(&[i as f64]));
            assert!(p > 0.0 && p < 1.0);
            if i > -10 {
                assert!(p >= last, "raising x lowered the score at {i}");
            }
            last = p;
        }
        // NaN follows the default direction at each split.
        assert_eq!(model.raw_score(&[f64::NAN]), 0.2 - 1.0);
    }

    #[test]
    fn training_loss_is_non_increasing() {
        let (matrix, labels) = separable_data(300);
        let params = GbdtParams {
            n_trees: 40,
            ..GbdtParams::default()
        };
        let model = train_gbdt(&matrix, &labels, &params).unwrap();
        assert_eq!(model.loss_curve.len(), 40);
        for w in model.loss_curve.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn schema_hash_mismatch_is_rejected_at_predict() {
        let (matrix, labels) = separable_data(100);
        let params = GbdtParams {
            n_trees: 2,
            ..GbdtParams::default()
        };
        let model = train_gbdt(&matrix, &labels, &params).unwrap();
        let other = one_feature_matrix(&[1.0], "different");
        assert!(matches!(
            model.predict_proba(&other),
            Err(LearnerError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn subsampling_is_deterministic_and_valid() {
        let params = GbdtParams {
            subsample_fraction: 0.5,
            seed: 9,
            ..GbdtParams::default()
        };
        let a = sample_rows(100, &params, 3);
        let b = sample_rows(100, &params, 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        let c = sample_rows(100, &params, 4);
        assert_ne!(a, c);
    }
}
