//! The circuit breaker: turn scores plus hard rules into gate decisions,
//! and sweep open PRs for expired review timeouts.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::metrics::budget_count;
use crate::features::detect_plan;
use crate::record::{PrState, PullRequestRecord};
use crate::timefmt::SECONDS_PER_DAY;

#[derive(Debug, Error)]
pub enum TriageError {
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("empty batch")]
    EmptyBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriagePolicy {
    pub budget: f64,
    pub additions_flag_threshold: u64,
    pub require_plan: bool,
    pub timeout_days: u32,
    pub issue_link_exempt: bool,
    pub fast_track_probability_cutoff: f64,
}

impl Default for TriagePolicy {
    fn default() -> Self {
        TriagePolicy {
            budget: 0.20,
            additions_flag_threshold: 500,
            require_plan: true,
            timeout_days: 14,
            issue_link_exempt: true,
            fast_track_probability_cutoff: 0.05,
        }
    }
}

impl TriagePolicy {
    pub fn validate(&self) -> Result<(), TriageError> {
        if !(self.budget > 0.0 && self.budget <= 1.0) {
            return Err(TriageError::InvalidPolicy(format!(
                "budget {} outside (0,1]",
                self.budget
            )));
        }
        if self.additions_flag_threshold == 0 {
            return Err(TriageError::InvalidPolicy(
                "additions_flag_threshold must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.fast_track_probability_cutoff) {
            return Err(TriageError::InvalidPolicy(format!(
                "fast_track_probability_cutoff {} outside [0,1)",
                self.fast_track_probability_cutoff
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriageAction {
    FastTrack,
    StandardReview,
    FlagHighEffort,
    FastFail,
}

impl fmt::Display for TriageAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TriageAction::FastTrack => "fast_track",
            TriageAction::StandardReview => "standard_review",
            TriageAction::FlagHighEffort => "flag_high_effort",
            TriageAction::FastFail => "fast_fail",
        };
        f.write_str(s)
    }
}

/// Fired-rule identifiers, declared in precedence order: exemption beats
/// the no-plan fast-fail, which beats the size flag, then the budget
/// ranking flag, then fast-track, then the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriageReason {
    IssueLinkExemption,
    NoPlanSprawl,
    SizeFlag,
    BudgetRank,
    LowRisk,
    DefaultStandard,
}

impl fmt::Display for TriageReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TriageReason::IssueLinkExemption => "issue_link_exemption",
            TriageReason::NoPlanSprawl => "no_plan_sprawl",
            TriageReason::SizeFlag => "size_flag",
            TriageReason::BudgetRank => "budget_rank",
            TriageReason::LowRisk => "low_risk",
            TriageReason::DefaultStandard => "default_standard",
        };
        f.write_str(s)
    }
}

impl FromStr for TriageReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "issue_link_exemption" => Ok(TriageReason::IssueLinkExemption),
            "no_plan_sprawl" => Ok(TriageReason::NoPlanSprawl),
            "size_flag" => Ok(TriageReason::SizeFlag),
            "budget_rank" => Ok(TriageReason::BudgetRank),
            "low_risk" => Ok(TriageReason::LowRisk),
            "default_standard" => Ok(TriageReason::DefaultStandard),
            other => Err(format!("unknown triage reason '{other}'")),
        }
    }
}

/// What the gate needs to know about one PR at decision time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageInput {
    pub id: String,
    pub additions: u64,
    pub has_plan: bool,
    pub linked_issue: bool,
    pub score: f64,
}

impl TriageInput {
    pub fn from_record(record: &PullRequestRecord, score: f64) -> Self {
        TriageInput {
            id: record.id.clone(),
            additions: record.total_additions,
            has_plan: detect_plan(&record.body),
            linked_issue: record.linked_issue,
            score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageDecision {
    pub id: String,
    pub action: TriageAction,
    pub reasons: Vec<TriageReason>,
    pub score: f64,
}

/// Pure decision for one PR. `in_top_budget` is the batch-ranking rule
/// outcome; standalone callers pass false.
pub fn decide(input: &TriageInput, in_top_budget: bool, policy: &TriagePolicy) -> TriageDecision {
    let exempt = policy.issue_link_exempt && input.linked_issue;
    let oversized = input.additions > policy.additions_flag_threshold;
    let sprawl = policy.require_plan && !input.has_plan && oversized;
    let low_risk = input.score < policy.fast_track_probability_cutoff;

    let mut reasons = Vec::new();
    if exempt {
        reasons.push(TriageReason::IssueLinkExemption);
    }
    if sprawl {
        reasons.push(TriageReason::NoPlanSprawl);
    }
    if oversized {
        reasons.push(TriageReason::SizeFlag);
    }
    if in_top_budget {
        reasons.push(TriageReason::BudgetRank);
    }
    if low_risk {
        reasons.push(TriageReason::LowRisk);
    }
    if reasons.is_empty() {
        reasons.push(TriageReason::DefaultStandard);
    }

    let action = if sprawl && !exempt {
        TriageAction::FastFail
    } else if oversized || in_top_budget {
        TriageAction::FlagHighEffort
    } else if low_risk {
        TriageAction::FastTrack
    } else {
        TriageAction::StandardReview
    };

    TriageDecision {
        id: input.id.clone(),
        action,
        reasons,
        score: input.score,
    }
}

/// Recomputes the action from a decision's reasons alone. Used to check
/// that reasons uniquely justify the action.
pub fn replay_action(reasons: &[TriageReason]) -> TriageAction {
    let has = |r: TriageReason| reasons.contains(&r);
    if has(TriageReason::NoPlanSprawl) && !has(TriageReason::IssueLinkExemption) {
        TriageAction::FastFail
    } else if has(TriageReason::SizeFlag) || has(TriageReason::BudgetRank) {
        TriageAction::FlagHighEffort
    } else if has(TriageReason::LowRisk) {
        TriageAction::FastTrack
    } else {
        TriageAction::StandardReview
    }
}

/// Applies the gate to a scored batch. Exactly ceil(budget * n) PRs get
/// the ranking-rule reason; score ties resolve toward the smaller id.
/// Decisions come back in input order.
pub fn batch_gate(
    batch: &[TriageInput],
    policy: &TriagePolicy,
) -> Result<Vec<TriageDecision>, TriageError> {
    policy.validate()?;
    if batch.is_empty() {
        return Err(TriageError::EmptyBatch);
    }
    let n = batch.len();
    let k = budget_count(policy.budget, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        batch[b]
            .score
            .total_cmp(&batch[a].score)
            .then_with(|| batch[a].id.cmp(&batch[b].id))
    });
    let ranked: HashSet<usize> = order[..k].iter().copied().collect();
    Ok(batch
        .iter()
        .enumerate()
        .map(|(i, input)| decide(input, ranked.contains(&i), policy))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeoutStatus {
    pub id: String,
    pub days_stale: f64,
    pub expired: bool,
}

/// Scans open PRs awaiting an agent response: those with at least one
/// human feedback event and no commit after the last one. Expired means
/// the silence has outlasted the policy timeout.
pub fn timeout_sweep(
    records: &[PullRequestRecord],
    now: i64,
    policy: &TriagePolicy,
) -> Vec<TimeoutStatus> {
    records
        .iter()
        .filter(|r| r.state == PrState::Open)
        .filter_map(|r| {
            let feedback = r.last_human_event()?;
            if r.commits.iter().any(|c| c.timestamp > feedback) {
                return None;
            }
            let stale = now.saturating_sub(feedback);
            Some(TimeoutStatus {
                id: r.id.clone(),
                days_stale: stale as f64 / SECONDS_PER_DAY as f64,
                expired: stale > i64::from(policy.timeout_days) * SECONDS_PER_DAY,
            })
        })
        .collect()
}

pub fn decisions_to_csv(decisions: &[TriageDecision]) -> String {
    let mut out = String::from("id,action,score,reasons\n");
    for d in decisions {
        let reasons: Vec<String> = d.reasons.iter().map(|r| r.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{}\n",
            d.id,
            d.action,
            d.score,
            reasons.join(";")
        ));
    }
    out
}

pub fn decisions_to_jsonl(decisions: &[TriageDecision]) -> Result<String, serde_json::Error> {
    let mut out = String::new();
    for d in decisions {
        out.push_str(&serde_json::to_string(d)?);
        out.push('\n');
    }
    Ok(out)
}
