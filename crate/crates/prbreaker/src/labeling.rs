//! Target variables: Effort Score, High Cost, ghosting, instant merge.
//!
//! High Cost is relative: the top slice of the training-set effort
//! distribution, cut at a nearest-rank quantile with a strict `>` at the
//! threshold. The threshold is always computed on training data and frozen
//! for test labeling.

use crate::record::*;
use crate::timefmt::SECONDS_PER_DAY;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("cannot compute a threshold over an empty score list")]
    EmptyScores,
    #[error("label lists differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid label config: {0}")]
    InvalidConfig(String),
    #[error("malformed label csv: {0}")]
    Csv(String),
}

/// Which timeline events count toward effort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffortVariant {
    AllEvents,
    HumanOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelConfig {
    pub high_cost_quantile: f64,
    pub ghosting_timeout_days: i64,
    pub instant_window_seconds: i64,
    pub effort_variant: EffortVariant,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            high_cost_quantile: 0.80,
            ghosting_timeout_days: 14,
            instant_window_seconds: 60,
            effort_variant: EffortVariant::AllEvents,
        }
    }
}

impl LabelConfig {
    pub fn validate(&self) -> Result<(), LabelError> {
        if !(self.high_cost_quantile > 0.0 && self.high_cost_quantile < 1.0) {
            return Err(LabelError::InvalidConfig(format!(
                "high_cost_quantile {} outside (0,1)",
                self.high_cost_quantile
            )));
        }
        if self.ghosting_timeout_days < 1 {
            return Err(LabelError::InvalidConfig(
                "ghosting timeout below 1 day".into(),
            ));
        }
        if self.instant_window_seconds < 1 {
            return Err(LabelError::InvalidConfig(
                "instant window below 1 second".into(),
            ));
        }
        Ok(())
    }
}

/// Count of review and comment events; `HumanOnly` drops bot-authored ones.
pub fn effort_score(record: &PullRequestRecord, variant: EffortVariant) -> u64 {
    record
        .timeline
        .iter()
        .filter(|e| match variant {
            EffortVariant::AllEvents => true,
            EffortVariant::HumanOnly => e.author_kind == EventAuthor::Human,
        })
        .count() as u64
}

/// The ⌈q·n⌉-th smallest value (nearest-rank quantile). `values` need not be
/// sorted.
pub fn nearest_rank(values: &[u64], quantile: f64) -> Result<u64, LabelError> {
    if values.is_empty() {
        return Err(LabelError::EmptyScores);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    // Small epsilon so q·n hitting an integer exactly is not pushed up by
    // float representation error.
    let k = ((quantile * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[k.min(n) - 1])
}

/// Training-set threshold t; a PR is high-cost iff its effort is strictly
/// above t.
pub fn high_cost_threshold(training_scores: &[u64], quantile: f64) -> Result<u64, LabelError> {
    nearest_rank(training_scores, quantile)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhostingLabel {
    Ghosted,
    Engaged,
    NotApplicable,
}

impl fmt::Display for GhostingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GhostingLabel::Ghosted => write!(f, "ghosted"),
            GhostingLabel::Engaged => write!(f, "engaged"),
            GhostingLabel::NotApplicable => write!(f, "not_applicable"),
        }
    }
}

impl std::str::FromStr for GhostingLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ghosted" => Ok(GhostingLabel::Ghosted),
            "engaged" => Ok(GhostingLabel::Engaged),
            "not_applicable" => Ok(GhostingLabel::NotApplicable),
            other => Err(format!("unknown ghosting label {other:?}")),
        }
    }
}

/// A rejected PR with human feedback is ghosted when no commit lands in
/// `(last_feedback, last_feedback + timeout]`. Commits at exactly the
/// feedback instant cannot be responses and do not count.
pub fn ghosting_label(record: &PullRequestRecord, timeout_days: i64) -> GhostingLabel {
    if record.state != PrState::Rejected {
        return GhostingLabel::NotApplicable;
    }
    let Some(feedback) = record.last_human_event() else {
        return GhostingLabel::NotApplicable;
    };
    let window_end = feedback + timeout_days * SECONDS_PER_DAY;
    let followed_up = record
        .commits
        .iter()
        .any(|c| c.timestamp > feedback && c.timestamp <= window_end);
    if followed_up {
        GhostingLabel::Engaged
    } else {
        GhostingLabel::Ghosted
    }
}

/// Merged in under `window_seconds`.
pub fn instant_merge(record: &PullRequestRecord, window_seconds: i64) -> bool {
    record.state == PrState::Merged
        && record
            .merged_at
            .is_some_and(|m| m - record.created_at < window_seconds)
}

/// Fraction of aligned positions where the two label lists agree.
pub fn label_agreement(labels_a: &[bool], labels_b: &[bool]) -> Result<f64, LabelError> {
    if labels_a.len() != labels_b.len() {
        return Err(LabelError::LengthMismatch {
            left: labels_a.len(),
            right: labels_b.len(),
        });
    }
    if labels_a.is_empty() {
        return Err(LabelError::EmptyScores);
    }
    let matches = labels_a
        .iter()
        .zip(labels_b)
        .filter(|(a, b)| a == b)
        .count();
    Ok(matches as f64 / labels_a.len() as f64)
}

/// All labels for one corpus slice, aligned by index with `ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub ids: Vec<String>,
    pub effort: Vec<u64>,
    pub effort_human_only: Vec<u64>,
    pub high_cost: Vec<bool>,
    pub ghosting: Vec<GhostingLabel>,
    pub instant_merge: Vec<bool>,
    /// The frozen threshold the high-cost flags were cut at.
    pub threshold: u64,
}

/// Labels `records` with a threshold computed from the same records.
pub fn build_labels(
    records: &[PullRequestRecord],
    config: &LabelConfig,
) -> Result<LabelSet, LabelError> {
    config.validate()?;
    let scores: Vec<u64> = records
        .iter()
        .map(|r| effort_score(r, config.effort_variant))
        .collect();
    let threshold = high_cost_threshold(&scores, config.high_cost_quantile)?;
    Ok(build_labels_with_threshold(records, config, threshold))
}

/// Labels `records` against an externally frozen threshold (test-set
/// labeling against the training-set cut).
pub fn build_labels_with_threshold(
    records: &[PullRequestRecord],
    config: &LabelConfig,
    threshold: u64,
) -> LabelSet {
    let effort: Vec<u64> = records
        .iter()
        .map(|r| effort_score(r, config.effort_variant))
        .collect();
    LabelSet {
        ids: records.iter().map(|r| r.id.clone()).collect(),
        high_cost: effort.iter().map(|&s| s > threshold).collect(),
        effort_human_only: records
            .iter()
            .map(|r| effort_score(r, EffortVariant::HumanOnly))
            .collect(),
        effort,
        ghosting: records
            .iter()
            .map(|r| ghosting_label(r, config.ghosting_timeout_days))
            .collect(),
        instant_merge: records
            .iter()
            .map(|r| instant_merge(r, config.instant_window_seconds))
            .collect(),
        threshold,
    }
}

impl LabelSet {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# high_cost_threshold={}\n", self.threshold));
        out.push_str(
            "id,effort_score,effort_score_human_only,is_high_cost,ghosting,is_instant_merge\n",
        );
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.ids[i],
                self.effort[i],
                self.effort_human_only[i],
                self.high_cost[i] as u8,
                self.ghosting[i],
                self.instant_merge[i] as u8,
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, LabelError> {
        let mut set = LabelSet {
            ids: vec![],
            effort: vec![],
            effort_human_only: vec![],
            high_cost: vec![],
            ghosting: vec![],
            instant_merge: vec![],
            threshold: 0,
        };
        let mut seen_header = false;
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some(value) = rest.strip_prefix("high_cost_threshold=") {
                    set.threshold = value
                        .parse()
                        .map_err(|e| LabelError::Csv(format!("bad threshold: {e}")))?;
                }
                continue;
            }
            if !seen_header {
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(LabelError::Csv(format!(
                    "line {}: expected 6 columns",
                    i + 1
                )));
            }
            let parse_bool = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(LabelError::Csv(format!(
                    "line {}: bad flag {other:?}",
                    i + 1
                ))),
            };
            set.ids.push(fields[0].to_string());
            set.effort.push(
                fields[1]
                    .parse()
                    .map_err(|e| LabelError::Csv(format!("line {}: {e}", i + 1)))?,
            );
            set.effort_human_only.push(
                fields[2]
                    .parse()
                    .map_err(|e| LabelError::Csv(format!("line {}: {e}", i + 1)))?,
            );
            set.high_cost.push(parse_bool(fields[3])?);
            set.ghosting
                .push(fields[4].parse().map_err(LabelError::Csv)?);
            set.instant_merge.push(parse_bool(fields[5])?);
        }
        if !seen_header {
            return Err(LabelError::Csv("missing header row".to_string()));
        }
        Ok(set)
    }
}
