//! Shared fixtures for unit and integration tests. Not part of the public
//! API surface.

use crate::record::*;

/// A small, fully valid merged record.
pub fn merged_record(id: &str, created_at: i64, merged_at: i64) -> PullRequestRecord {
    PullRequestRecord {
        id: id.to_string(),
        repo_id: "acme/widgets".to_string(),
        agent_name: "codex".to_string(),
        author_kind: AuthorKind::GenerativeAgent,
        created_at,
        merged_at: Some(merged_at),
        closed_at: Some(merged_at),
        state: PrState::Merged,
        title: "Fix widget counter".to_string(),
        body: "Small fix.".to_string(),
        files: vec![FileChange::new("src/widget.rs", 10, 2)],
        total_additions: 10,
        total_deletions: 2,
        commits: vec![Commit {
            timestamp: created_at,
            sha: "a1b2c3".to_string(),
        }],
        timeline: vec![],
        ci_status: CiStatus::Pass,
        linked_issue: false,
        primary_language: "rust".to_string(),
    }
}

/// A rejected record with one human comment one hour after creation.
pub fn rejected_record(id: &str, created_at: i64) -> PullRequestRecord {
    PullRequestRecord {
        id: id.to_string(),
        repo_id: "acme/widgets".to_string(),
        agent_name: "devin".to_string(),
        author_kind: AuthorKind::GenerativeAgent,
        created_at,
        merged_at: None,
        closed_at: Some(created_at + 30 * 86_400),
        state: PrState::Rejected,
        title: "Rework everything".to_string(),
        body: String::new(),
        files: vec![FileChange::new("src/lib.rs", 600, 100)],
        total_additions: 600,
        total_deletions: 100,
        commits: vec![Commit {
            timestamp: created_at,
            sha: "d4e5f6".to_string(),
        }],
        timeline: vec![InteractionEvent {
            kind: EventKind::Comment,
            author_kind: EventAuthor::Human,
            timestamp: created_at + 3_600,
        }],
        ci_status: CiStatus::Fail,
        linked_issue: false,
        primary_language: "rust".to_string(),
    }
}

/// Builds an interaction event with less ceremony.
pub fn event(kind: EventKind, author: EventAuthor, timestamp: i64) -> InteractionEvent {
    InteractionEvent {
        kind,
        author_kind: author,
        timestamp,
    }
}
