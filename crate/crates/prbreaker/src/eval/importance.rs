//! Permutation importance: shuffle one feature column, re-score, record
//! the AUC drop. Repeated with derived per-(feature, repeat) seeds so the
//! ranking is reproducible regardless of scheduling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::derive_seed;
use crate::eval::metrics::roc_auc;
use crate::eval::EvalError;
use crate::features::FeatureMatrix;
use crate::learner::gbdt::GbdtModel;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_auc_drop: f64,
}

/// Mean AUC drop per feature over `repeats` independent permutations,
/// sorted by drop descending (ties keep schema order). Features the model
/// never splits on get an exact 0.0 without rescoring.
pub fn permutation_importance(
    model: &GbdtModel,
    matrix: &FeatureMatrix,
    labels: &[bool],
    repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureImportance>, EvalError> {
    if repeats == 0 {
        return Err(EvalError::BadFraction(0.0));
    }
    let baseline_scores = model
        .predict_proba(matrix)
        .map_err(|e| EvalError::Format(e.to_string()))?;
    let baseline = roc_auc(&baseline_scores, labels)?;
    let n = matrix.rows.len();

    let mut drops: Vec<(usize, FeatureImportance)> = matrix
        .names
        .par_iter()
        .enumerate()
        .map(|(col, name)| {
            if !model.trees.iter().any(|t| t.uses_feature(col)) {
                return Ok((
                    col,
                    FeatureImportance {
                        feature: name.clone(),
                        mean_auc_drop: 0.0,
                    },
                ));
            }
            let mut total = 0.0;
            for rep in 0..repeats {
                let mut rng =
                    ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("perm-{col}-{rep}")));
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                let shuffled: Vec<Vec<f64>> = matrix
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let mut r = row.clone();
                        r[col] = matrix.rows[perm[i]][col];
                        r
                    })
                    .collect();
                let scores = model.predict_proba_rows(&shuffled);
                total += baseline - roc_auc(&scores, labels)?;
            }
            Ok((
                col,
                FeatureImportance {
                    feature: name.clone(),
                    mean_auc_drop: total / repeats as f64,
                },
            ))
        })
        .collect::<Result<_, EvalError>>()?;

    drops.sort_by(|a, b| {
        b.1.mean_auc_drop
            .total_cmp(&a.1.mean_auc_drop)
            .then(a.0.cmp(&b.0))
    });
    Ok(drops.into_iter().map(|(_, fi)| fi).collect())
}
