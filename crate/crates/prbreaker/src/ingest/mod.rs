//! Corpus loading and author classification.
//!
//! The on-disk corpus is UTF-8 JSON, one record per line, timestamps
//! ISO-8601 UTC. [`parse_corpus`] reads it strictly or leniently,
//! [`write_corpus`] emits it, and the two round-trip exactly. Author
//! classification separates generative agents from deterministic maintenance
//! bots via a configurable registry. Live forge access lives in [`forge`].

pub mod forge;

use crate::config::AgentPatterns;
use crate::record::*;
use crate::timefmt::{format_iso_utc, parse_iso_utc};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// One skipped input line in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub reason: String,
}

impl std::fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

/// Name patterns that separate generative agents from deterministic bots.
///
/// Both lists hold case-insensitive substrings matched against the login;
/// defaults come from [`AgentPatterns::default`]. The lists must stay
/// disjoint as literal strings, and the denylist wins when a login happens
/// to contain patterns from both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentRegistry {
    pub generative_patterns: Vec<String>,
    pub deterministic_patterns: Vec<String>,
}

impl Default for AgentRegistry {
    fn default() -> Self {
        Self::from_patterns(&AgentPatterns::default())
    }
}

impl AgentRegistry {
    pub fn from_patterns(patterns: &AgentPatterns) -> Self {
        let lower = |v: &[String]| v.iter().map(|s| s.to_lowercase()).collect::<Vec<_>>();
        AgentRegistry {
            generative_patterns: lower(&patterns.generative),
            deterministic_patterns: lower(&patterns.deterministic),
        }
    }

    /// The canonical agent name for a login: the first generative pattern it
    /// contains, in registry order.
    pub fn canonical_agent(&self, login: &str) -> Option<&str> {
        let login = login.to_lowercase();
        self.generative_patterns
            .iter()
            .find(|p| login.contains(p.as_str()))
            .map(String::as_str)
    }

    fn matches_denylist(&self, login: &str) -> bool {
        let login = login.to_lowercase();
        self.deterministic_patterns
            .iter()
            .any(|p| login.contains(p.as_str()))
    }
}

/// Classifies a PR author from its forge login and account-type flag.
///
/// Denylist matches are deterministic bots regardless of the flag. A
/// `"Bot"`-flagged login containing a generative pattern is a generative
/// agent. Everything else, including unrecognized bot accounts, is treated
/// as human.
pub fn classify_author(login: &str, forge_type_flag: &str, registry: &AgentRegistry) -> AuthorKind {
    if registry.matches_denylist(login) {
        AuthorKind::DeterministicBot
    } else if forge_type_flag == "Bot" && registry.canonical_agent(login).is_some() {
        AuthorKind::GenerativeAgent
    } else {
        AuthorKind::Human
    }
}

/// Wire layout of one corpus line. Field order here is the serialization
/// order and is part of the format.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecord {
    id: String,
    repo_id: String,
    agent_name: String,
    author_type: AuthorKind,
    created_at: String,
    merged_at: Option<String>,
    closed_at: Option<String>,
    state: PrState,
    title: String,
    body: String,
    total_additions: u64,
    total_deletions: u64,
    files: Vec<FileChange>,
    commits: Vec<WireCommit>,
    timeline: Vec<WireEvent>,
    ci_status: CiStatus,
    linked_issue: bool,
    primary_language: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireCommit {
    timestamp: String,
    sha: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireEvent {
    kind: EventKind,
    author_kind: EventAuthor,
    timestamp: String,
}

impl From<&PullRequestRecord> for WireRecord {
    fn from(r: &PullRequestRecord) -> Self {
        WireRecord {
            id: r.id.clone(),
            repo_id: r.repo_id.clone(),
            agent_name: r.agent_name.clone(),
            author_type: r.author_kind,
            created_at: format_iso_utc(r.created_at),
            merged_at: r.merged_at.map(format_iso_utc),
            closed_at: r.closed_at.map(format_iso_utc),
            state: r.state,
            title: r.title.clone(),
            body: r.body.clone(),
            total_additions: r.total_additions,
            total_deletions: r.total_deletions,
            files: r.files.clone(),
            commits: r
                .commits
                .iter()
                .map(|c| WireCommit {
                    timestamp: format_iso_utc(c.timestamp),
                    sha: c.sha.clone(),
                })
                .collect(),
            timeline: r
                .timeline
                .iter()
                .map(|e| WireEvent {
                    kind: e.kind,
                    author_kind: e.author_kind,
                    timestamp: format_iso_utc(e.timestamp),
                })
                .collect(),
            ci_status: r.ci_status,
            linked_issue: r.linked_issue,
            primary_language: r.primary_language.clone(),
        }
    }
}

impl WireRecord {
    fn into_record(self) -> Result<PullRequestRecord, String> {
        let ts = |field: &str, s: &str| parse_iso_utc(s).map_err(|e| format!("field {field}: {e}"));
        let opt_ts = |field: &str, s: &Option<String>| match s {
            Some(s) => ts(field, s).map(Some),
            None => Ok(None),
        };
        Ok(PullRequestRecord {
            created_at: ts("created_at", &self.created_at)?,
            merged_at: opt_ts("merged_at", &self.merged_at)?,
            closed_at: opt_ts("closed_at", &self.closed_at)?,
            commits: self
                .commits
                .into_iter()
                .map(|c| {
                    Ok(Commit {
                        timestamp: ts("commits.timestamp", &c.timestamp)?,
                        sha: c.sha,
                    })
                })
                .collect::<Result<_, String>>()?,
            timeline: self
                .timeline
                .into_iter()
                .map(|e| {
                    Ok(InteractionEvent {
                        kind: e.kind,
                        author_kind: e.author_kind,
                        timestamp: ts("timeline.timestamp", &e.timestamp)?,
                    })
                })
                .collect::<Result<_, String>>()?,
            id: self.id,
            repo_id: self.repo_id,
            agent_name: self.agent_name,
            author_kind: self.author_type,
            state: self.state,
            title: self.title,
            body: self.body,
            files: self.files,
            total_additions: self.total_additions,
            total_deletions: self.total_deletions,
            ci_status: self.ci_status,
            linked_issue: self.linked_issue,
            primary_language: self.primary_language,
        })
    }
}

/// Parses a newline-delimited corpus stream, preserving input order.
///
/// Blank lines are ignored. Malformed lines abort with their line number
/// when `strict`, otherwise they are skipped and reported as diagnostics.
pub fn parse_corpus(
    source: impl BufRead,
    strict: bool,
) -> Result<(Vec<PullRequestRecord>, Vec<ParseDiagnostic>), IngestError> {
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<WireRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(WireRecord::into_record);
        match parsed {
            Ok(record) => records.push(record),
            Err(reason) if strict => {
                return Err(IngestError::Malformed {
                    line: line_no,
                    reason,
                })
            }
            Err(reason) => diagnostics.push(ParseDiagnostic {
                line: line_no,
                reason,
            }),
        }
    }
    Ok((records, diagnostics))
}

/// Writes records in the corpus wire format, one JSON object per line.
pub fn write_corpus(
    records: &[PullRequestRecord],
    mut sink: impl Write,
) -> Result<(), IngestError> {
    for record in records {
        let wire = WireRecord::from(record);
        serde_json::to_writer(&mut sink, &wire).map_err(|e| IngestError::Io(e.into()))?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Serializes one record to its corpus line (without trailing newline).
pub fn record_to_line(record: &PullRequestRecord) -> String {
    serde_json::to_string(&WireRecord::from(record)).expect("record serializes")
}
