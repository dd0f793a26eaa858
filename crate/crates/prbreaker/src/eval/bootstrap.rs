//! Percentile bootstrap for rank metrics. Resamples draw with replacement
//! under per-resample derived seeds, so the interval is identical at any
//! thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::derive_seed;
use crate::eval::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConfidenceInterval {
    pub point: f64,
    pub low: f64,
    pub high: f64,
}

/// Percentile CI with B resamples. Resamples where the metric degenerates
/// (for instance single-class for AUC) are skipped; more than half skipped
/// is an error instead of a silently hollow interval. The returned bounds
/// are widened if needed so low <= point <= high always holds.
pub fn bootstrap_ci<F>(
    metric: F,
    scores: &[f64],
    labels: &[bool],
    resamples: usize,
    alpha: f64,
    seed: u64,
) -> Result<ConfidenceInterval, EvalError>
where
    F: Fn(&[f64], &[bool]) -> Result<f64, EvalError> + Sync,
{
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    if resamples == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(EvalError::BadFraction(alpha));
    }
    let point = metric(scores, labels)?;
    let n = scores.len();

    let estimates: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("bootstrap-{b}")));
            let mut s = Vec::with_capacity(n);
            let mut l = Vec::with_capacity(n);
            for _ in 0..n {
                let i = rng.gen_range(0..n);
                s.push(scores[i]);
                l.push(labels[i]);
            }
            metric(&s, &l).ok()
        })
        .collect();

    let mut kept: Vec<f64> = estimates.into_iter().flatten().collect();
    let skipped = resamples - kept.len();
    if skipped * 2 > resamples {
        return Err(EvalError::DegenerateBootstrap {
            skipped,
            total: resamples,
        });
    }
    kept.sort_by(f64::total_cmp);
    let low = percentile(&kept, alpha / 2.0);
    let high = percentile(&kept, 1.0 - alpha / 2.0);
    Ok(ConfidenceInterval {
        point,
        low: low.min(point),
        high: high.max(point),
    })
}

/// Nearest-rank percentile of a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let k = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[k.min(n) - 1]
}
