//! Exact rank-based metrics. No trapezoid shortcuts: ROC AUC is the
//! Mann-Whitney statistic with ties counted half, PR AUC is average
//! precision averaged over all permutations of tied blocks (closed form).

use crate::eval::EvalError;

fn check_pair(scores: &[f64], labels: &[bool]) -> Result<(), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    Ok(())
}

/// 1-based ranks, ties assigned the mean of the positions they span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j, average (i + j + 1) / 2
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Probability a random positive outscores a random negative, ties worth
/// one half. Exact via the rank-sum identity.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    check_pair(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(r, _)| r)
        .sum();
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Average precision, with tied blocks averaged over every permutation of
/// the block. For a block of t items holding g positives after `seen`
/// earlier items and `hits` earlier positives, the expected positive count
/// at in-block position j (given j is positive) is 1 + (j-1)(g-1)/(t-1),
/// and position j is positive with probability g/t.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    check_pair(scores, labels)?;
    let total_pos = labels.iter().filter(|&&l| l).count();
    if total_pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut seen = 0.0;
    let mut hits = 0.0;
    let mut ap_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let t = (j - i) as f64;
        let g = order[i..j].iter().filter(|&&k| labels[k]).count() as f64;
        if g > 0.0 {
            let slope = if t > 1.0 { (g - 1.0) / (t - 1.0) } else { 0.0 };
            for step in 1..=(j - i) {
                let expected_hits = hits + 1.0 + (step as f64 - 1.0) * slope;
                ap_sum += (g / t) * expected_hits / (seen + step as f64);
            }
        }
        seen += t;
        hits += g;
        i = j;
    }
    Ok(ap_sum / total_pos as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetMetrics {
    pub precision: f64,
    pub recall: f64,
    pub flagged: usize,
}

/// Review the top ceil(budget * n) PRs by score, ties broken toward the
/// lexicographically smallest id so the reviewed set is reproducible.
pub fn budget_metrics(
    scores: &[f64],
    labels: &[bool],
    ids: &[String],
    budget: f64,
) -> Result<BudgetMetrics, EvalError> {
    check_pair(scores, labels)?;
    if ids.len() != scores.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: ids.len(),
        });
    }
    if !(budget > 0.0 && budget <= 1.0) {
        return Err(EvalError::BadFraction(budget));
    }
    let n = scores.len();
    let k = budget_count(budget, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    let taken_pos = order[..k].iter().filter(|&&i| labels[i]).count();
    let total_pos = labels.iter().filter(|&&l| l).count();
    Ok(BudgetMetrics {
        precision: taken_pos as f64 / k as f64,
        recall: if total_pos == 0 {
            0.0
        } else {
            taken_pos as f64 / total_pos as f64
        },
        flagged: k,
    })
}

/// ceil(budget * n) guarded against float dust just below an integer.
pub fn budget_count(budget: f64, n: usize) -> usize {
    let k = (budget * n as f64 - 1e-9).ceil() as usize;
    k.clamp(1, n)
}

/// Recall at every budget on the 1%..=100% grid.
pub fn topk_coverage(
    scores: &[f64],
    labels: &[bool],
    ids: &[String],
) -> Result<Vec<(f64, f64)>, EvalError> {
    check_pair(scores, labels)?;
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    let total_pos = labels.iter().filter(|&&l| l).count();
    let mut prefix_pos = vec![0usize; n + 1];
    for (i, &idx) in order.iter().enumerate() {
        prefix_pos[i + 1] = prefix_pos[i] + usize::from(labels[idx]);
    }
    let mut out = Vec::with_capacity(100);
    for pct in 1..=100u32 {
        let budget = pct as f64 / 100.0;
        let k = budget_count(budget, n);
        let recall = if total_pos == 0 {
            0.0
        } else {
            prefix_pos[k] as f64 / total_pos as f64
        };
        out.push((budget, recall));
    }
    Ok(out)
}

/// (FPR, TPR) points starting at (0,0), one point per distinct score
/// threshold walking from the highest score down; ends at (1,1).
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64)>, EvalError> {
    check_pair(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        for &k in &order[i..j] {
            if labels[k] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        i = j;
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CalibrationBin {
    pub bin_mid: f64,
    pub mean_predicted: f64,
    pub fraction_positive: f64,
    pub count: usize,
}

/// Equal-width bins over [0,1]; empty bins are omitted so counts always
/// sum to n.
pub fn calibration_curve(
    probs: &[f64],
    labels: &[bool],
    n_bins: usize,
) -> Result<Vec<CalibrationBin>, EvalError> {
    check_pair(probs, labels)?;
    if n_bins == 0 {
        return Err(EvalError::BadFraction(0.0));
    }
    let mut sums = vec![0.0; n_bins];
    let mut pos = vec![0usize; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (&p, &l) in probs.iter().zip(labels) {
        let bin = ((p * n_bins as f64).floor() as usize).min(n_bins - 1);
        sums[bin] += p;
        counts[bin] += 1;
        pos[bin] += usize::from(l);
    }
    let width = 1.0 / n_bins as f64;
    Ok((0..n_bins)
        .filter(|&b| counts[b] > 0)
        .map(|b| CalibrationBin {
            bin_mid: (b as f64 + 0.5) * width,
            mean_predicted: sums[b] / counts[b] as f64,
            fraction_positive: pos[b] as f64 / counts[b] as f64,
            count: counts[b],
        })
        .collect())
}

/// Empirical CDF: one point per distinct value, y = fraction of samples
/// at or below it. Duplicates collapse onto the top step.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    if values.is_empty() {
        return Err(EvalError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        out.push((sorted[i], j as f64 / n as f64));
        i = j;
    }
    Ok(out)
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch {
            scores: xs.len(),
            labels: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(EvalError::Empty);
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::SingleClass);
    }
    Ok(sxy / (sxx * syy).sqrt())
}
