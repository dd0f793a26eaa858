//! Domain types for pull-request records.
//!
//! Everything here is immutable after construction and carries no behavior
//! beyond construction-time validation. Timestamps are integer Unix seconds
//! UTC; sub-second resolution in inputs is truncated.

use serde::{Deserialize, Serialize};

/// Who authored a pull request, after registry classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorKind {
    GenerativeAgent,
    DeterministicBot,
    Human,
}

/// Lifecycle state of a pull request. `Rejected` means closed without merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrState {
    Open,
    Merged,
    Rejected,
}

impl std::fmt::Display for PrState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PrState::Open => write!(f, "open"),
            PrState::Merged => write!(f, "merged"),
            PrState::Rejected => write!(f, "rejected"),
        }
    }
}

/// CI outcome visible just before review (`None` at creation time).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiStatus {
    Pass,
    Fail,
    None,
}

/// Per-file line-count delta. No diff content is stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub additions: u64,
    pub deletions: u64,
}

impl FileChange {
    pub fn new(path: impl Into<String>, additions: u64, deletions: u64) -> Self {
        Self {
            path: path.into(),
            additions,
            deletions,
        }
    }
}

/// A commit on the PR branch, by push time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    /// Unix seconds UTC.
    pub timestamp: i64,
    pub sha: String,
}

/// What kind of timeline interaction occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Review,
    Comment,
}

/// Whether a timeline event was authored by a human or a bot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventAuthor {
    Human,
    Bot,
}

/// One review or comment on the PR timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub kind: EventKind,
    pub author_kind: EventAuthor,
    /// Unix seconds UTC.
    pub timestamp: i64,
}

/// Raw per-PR metadata as ingested: sizes, files, body, timeline, commits,
/// and status. The unit every downstream stage consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullRequestRecord {
    pub id: String,
    pub repo_id: String,
    /// Canonicalized agent login, e.g. `codex`.
    pub agent_name: String,
    pub author_kind: AuthorKind,
    /// Unix seconds UTC.
    pub created_at: i64,
    pub merged_at: Option<i64>,
    pub closed_at: Option<i64>,
    pub state: PrState,
    pub title: String,
    pub body: String,
    pub files: Vec<FileChange>,
    pub total_additions: u64,
    pub total_deletions: u64,
    pub commits: Vec<Commit>,
    pub timeline: Vec<InteractionEvent>,
    pub ci_status: CiStatus,
    pub linked_issue: bool,
    pub primary_language: String,
}

impl PullRequestRecord {
    /// additions + deletions, the size measure used throughout.
    pub fn total_changes(&self) -> u64 {
        self.total_additions + self.total_deletions
    }

    /// Timestamp of the last human timeline event, if any.
    pub fn last_human_event(&self) -> Option<i64> {
        self.timeline
            .iter()
            .filter(|e| e.author_kind == EventAuthor::Human)
            .map(|e| e.timestamp)
            .max()
    }

    /// Timestamp of the first human timeline event, if any.
    pub fn first_human_event(&self) -> Option<i64> {
        self.timeline
            .iter()
            .filter(|e| e.author_kind == EventAuthor::Human)
            .map(|e| e.timestamp)
            .min()
    }

    pub fn has_human_feedback(&self) -> bool {
        self.timeline
            .iter()
            .any(|e| e.author_kind == EventAuthor::Human)
    }
}

/// Checks every record invariant and returns one description per violation.
///
/// Validation never aborts: a well-formed record yields an empty list, and
/// each violation names the offending field and the rule it breaks.
pub fn validate_record(record: &PullRequestRecord) -> Vec<String> {
    let mut violations = Vec::new();

    match (record.state, record.merged_at) {
        (PrState::Merged, None) => {
            violations.push("merged_at missing although state is merged".to_string())
        }
        (state, Some(_)) if state != PrState::Merged => {
            violations.push(format!("merged_at present although state is {state}"))
        }
        _ => {}
    }
    if record.closed_at.is_some() && record.state == PrState::Open {
        violations.push("closed_at present although state is open".to_string());
    }

    if !record.files.is_empty() {
        let add_sum: u64 = record.files.iter().map(|f| f.additions).sum();
        let del_sum: u64 = record.files.iter().map(|f| f.deletions).sum();
        if add_sum != record.total_additions {
            violations.push(format!(
                "total_additions {} does not match file sum {}",
                record.total_additions, add_sum
            ));
        }
        if del_sum != record.total_deletions {
            violations.push(format!(
                "total_deletions {} does not match file sum {}",
                record.total_deletions, del_sum
            ));
        }
    }
    for (i, file) in record.files.iter().enumerate() {
        if file.path.is_empty() {
            violations.push(format!("files[{i}].path is empty"));
        }
    }

    for (i, commit) in record.commits.iter().enumerate() {
        if commit.timestamp < record.created_at {
            violations.push(format!("commits[{i}].timestamp precedes created_at"));
        }
    }
    if !is_sorted(record.commits.iter().map(|c| c.timestamp)) {
        violations.push("commits not sorted ascending by timestamp".to_string());
    }

    for (i, event) in record.timeline.iter().enumerate() {
        if event.timestamp < record.created_at {
            violations.push(format!("timeline[{i}].timestamp precedes created_at"));
        }
    }
    if !is_sorted(record.timeline.iter().map(|e| e.timestamp)) {
        violations.push("timeline not sorted ascending by timestamp".to_string());
    }

    violations
}

fn is_sorted(values: impl Iterator<Item = i64>) -> bool {
    let mut prev: Option<i64> = None;
    for v in values {
        if let Some(p) = prev {
            if v < p {
                return false;
            }
        }
        prev = Some(v);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{merged_record, rejected_record};

    #[test]
    fn well_formed_merged_record_has_no_violations() {
        let record = merged_record("pr-1", 1_700_000_000, 1_700_000_600);
        assert_eq!(validate_record(&record), Vec::<String>::new());
    }

    #[test]
    fn merged_state_without_merged_at_is_flagged() {
        let mut record = merged_record("pr-1", 1_700_000_000, 1_700_000_600);
        record.merged_at = None;
        let violations = validate_record(&record);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("merged_at"));
    }

    #[test]
    fn file_sum_mismatch_is_flagged() {
        let mut record = merged_record("pr-1", 1_700_000_000, 1_700_000_600);
        record.files = vec![
            FileChange::new("src/a.rs", 7, 0),
            FileChange::new("src/b.rs", 5, 0),
        ];
        record.total_additions = 10;
        record.total_deletions = 0;
        let violations = validate_record(&record);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("total_additions"));
    }

    #[test]
    fn unsorted_timeline_is_flagged() {
        let mut record = rejected_record("pr-2", 1_700_000_000);
        record.timeline = vec![
            InteractionEvent {
                kind: EventKind::Comment,
                author_kind: EventAuthor::Human,
                timestamp: 1_700_000_500,
            },
            InteractionEvent {
                kind: EventKind::Review,
                author_kind: EventAuthor::Human,
                timestamp: 1_700_000_100,
            },
        ];
        let violations = validate_record(&record);
        assert!(violations.iter().any(|v| v.contains("timeline not sorted")));
    }

    #[test]
    fn open_state_with_closed_at_is_flagged() {
        let mut record = rejected_record("pr-3", 1_700_000_000);
        record.state = PrState::Open;
        let violations = validate_record(&record);
        assert!(violations.iter().any(|v| v.contains("closed_at")));
    }
}
