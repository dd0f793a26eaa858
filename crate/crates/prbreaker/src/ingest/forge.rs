//! Optional live forge access.
//!
//! A [`ForgeClient`] assembles one [`PullRequestRecord`] from four REST
//! endpoints (pull, files, commits, issue timeline). The HTTP layer sits
//! behind the [`ForgeTransport`] trait so every test runs against scripted
//! responses; a real transport ships behind the `forge-http` feature.
//!
//! Rate limits (HTTP 403) are retried with bounded exponential backoff, and
//! concurrent fetches share an in-flight budget so a caller fanning out over
//! many PRs cannot exceed the configured parallelism.

use crate::ingest::AgentRegistry;
use crate::record::*;
use crate::timefmt::parse_iso_utc;
use serde_json::Value;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex, OnceLock};
use std::time::Duration;
use thiserror::Error;

/// Environment variable holding the forge API token.
pub const TOKEN_ENV_VAR: &str = "CB_FORGE_TOKEN";

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("{repo}#{number} not found")]
    NotFound { repo: String, number: u64 },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("unexpected payload shape: missing field {field}")]
    Mapping { field: String },
    #[error("forge returned status {status} for {url}")]
    Status { status: u16, url: String },
}

pub struct ForgeResponse {
    pub status: u16,
    pub body: String,
}

/// One blocking GET. Implementations must be callable from several threads.
pub trait ForgeTransport: Send + Sync {
    fn get(&self, url: &str, token: &str) -> Result<ForgeResponse, ForgeError>;
}

/// Caps concurrent in-flight requests across all threads using one client.
struct InFlightBudget {
    limit: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl InFlightBudget {
    fn new(limit: usize) -> Self {
        InFlightBudget {
            limit: limit.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> BudgetGuard<'_> {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        BudgetGuard { budget: self }
    }
}

struct BudgetGuard<'a> {
    budget: &'a InFlightBudget,
}

impl Drop for BudgetGuard<'_> {
    fn drop(&mut self) {
        *self.budget.in_flight.lock().unwrap() -= 1;
        self.budget.freed.notify_one();
    }
}

pub struct ForgeClient<T> {
    transport: T,
    base_url: String,
    token: String,
    registry: AgentRegistry,
    max_retries: u32,
    base_backoff: Duration,
    sleeper: Box<dyn Fn(Duration) + Send + Sync>,
    backoffs: AtomicU64,
    budget: InFlightBudget,
}

impl<T: ForgeTransport> ForgeClient<T> {
    pub fn new(transport: T, base_url: impl Into<String>) -> Self {
        ForgeClient {
            transport,
            base_url: base_url.into(),
            token: std::env::var(TOKEN_ENV_VAR).unwrap_or_default(),
            registry: AgentRegistry::default(),
            max_retries: 3,
            base_backoff: Duration::from_millis(500),
            sleeper: Box::new(std::thread::sleep),
            backoffs: AtomicU64::new(0),
            budget: InFlightBudget::new(4),
        }
    }

    pub fn with_token(mut self, token: impl Into<String>) -> Self {
        self.token = token.into();
        self
    }

    pub fn with_registry(mut self, registry: AgentRegistry) -> Self {
        self.registry = registry;
        self
    }

    pub fn with_retry(mut self, max_retries: u32, base_backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.base_backoff = base_backoff;
        self
    }

    /// Replaces the real sleep, so tests can record backoffs instead of
    /// waiting them out.
    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Box::new(sleeper);
        self
    }

    pub fn with_in_flight_limit(mut self, limit: usize) -> Self {
        self.budget = InFlightBudget::new(limit);
        self
    }

    /// How many rate-limit backoffs this client has performed.
    pub fn backoff_count(&self) -> u64 {
        self.backoffs.load(Ordering::Relaxed)
    }

    fn get_json(&self, url: &str) -> Result<Value, ForgeError> {
        let mut attempt = 0;
        loop {
            let _slot = self.budget.acquire();
            let response = self.transport.get(url, &self.token)?;
            match response.status {
                200 => {
                    return serde_json::from_str(&response.body)
                        .map_err(|e| ForgeError::Transport(format!("bad json from {url}: {e}")));
                }
                403 if attempt < self.max_retries => {
                    self.backoffs.fetch_add(1, Ordering::Relaxed);
                    (self.sleeper)(self.base_backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                403 => {
                    return Err(ForgeError::RateLimited {
                        attempts: attempt + 1,
                    })
                }
                status => {
                    return Err(ForgeError::Status {
                        status,
                        url: url.to_string(),
                    })
                }
            }
        }
    }

    /// Fetches one PR and maps it onto the corpus record schema.
    pub fn fetch_pull_request(
        &self,
        repo: &str,
        number: u64,
    ) -> Result<PullRequestRecord, ForgeError> {
        let base = &self.base_url;
        let not_found = |e| match e {
            ForgeError::Status { status: 404, .. } => ForgeError::NotFound {
                repo: repo.to_string(),
                number,
            },
            other => other,
        };
        let pull = self
            .get_json(&format!("{base}/repos/{repo}/pulls/{number}"))
            .map_err(not_found)?;
        // an unusable pull payload should fail before three more round trips
        for field in ["user.login", "user.type", "created_at", "state", "title"] {
            lookup(&pull, field)?;
        }
        let files = self
            .get_json(&format!("{base}/repos/{repo}/pulls/{number}/files"))
            .map_err(not_found)?;
        let commits = self
            .get_json(&format!("{base}/repos/{repo}/pulls/{number}/commits"))
            .map_err(not_found)?;
        let timeline = self
            .get_json(&format!("{base}/repos/{repo}/issues/{number}/timeline"))
            .map_err(not_found)?;
        map_record(
            repo,
            number,
            &pull,
            &files,
            &commits,
            &timeline,
            &self.registry,
        )
    }
}

fn lookup<'v>(value: &'v Value, path: &str) -> Result<&'v Value, ForgeError> {
    let mut current = value;
    for key in path.split('.') {
        current = current.get(key).ok_or_else(|| ForgeError::Mapping {
            field: path.to_string(),
        })?;
    }
    Ok(current)
}

fn str_at<'v>(value: &'v Value, path: &str) -> Result<&'v str, ForgeError> {
    lookup(value, path)?
        .as_str()
        .ok_or_else(|| ForgeError::Mapping {
            field: path.to_string(),
        })
}

fn u64_at(value: &Value, path: &str) -> Result<u64, ForgeError> {
    lookup(value, path)?
        .as_u64()
        .ok_or_else(|| ForgeError::Mapping {
            field: path.to_string(),
        })
}

fn opt_timestamp(value: &Value, path: &str) -> Result<Option<i64>, ForgeError> {
    match lookup(value, path) {
        Ok(Value::String(s)) => parse_iso_utc(s).map(Some).map_err(|_| ForgeError::Mapping {
            field: path.to_string(),
        }),
        Ok(Value::Null) | Err(_) => Ok(None),
        Ok(_) => Err(ForgeError::Mapping {
            field: path.to_string(),
        }),
    }
}

fn timestamp_at(value: &Value, path: &str) -> Result<i64, ForgeError> {
    let s = str_at(value, path)?;
    parse_iso_utc(s).map_err(|_| ForgeError::Mapping {
        field: path.to_string(),
    })
}

fn linked_issue_pattern() -> &'static regex::Regex {
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    RE.get_or_init(|| {
        regex::Regex::new(r"(?i)\b(?:close[sd]?|fix(?:e[sd])?|resolve[sd]?)\s+#[0-9]+").unwrap()
    })
}

fn map_record(
    repo: &str,
    number: u64,
    pull: &Value,
    files: &Value,
    commits: &Value,
    timeline: &Value,
    registry: &AgentRegistry,
) -> Result<PullRequestRecord, ForgeError> {
    let login = str_at(pull, "user.login")?;
    let type_flag = str_at(pull, "user.type")?;
    let author_kind = crate::ingest::classify_author(login, type_flag, registry);
    let agent_name = registry
        .canonical_agent(login)
        .map(str::to_string)
        .unwrap_or_else(|| login.to_lowercase());

    let created_at = timestamp_at(pull, "created_at")?;
    let merged_at = opt_timestamp(pull, "merged_at")?;
    let closed_at = opt_timestamp(pull, "closed_at")?;
    let state = match (str_at(pull, "state")?, merged_at) {
        ("open", _) => PrState::Open,
        (_, Some(_)) => PrState::Merged,
        (_, None) => PrState::Rejected,
    };
    let body = match lookup(pull, "body") {
        Ok(Value::String(s)) => s.clone(),
        _ => String::new(),
    };
    let title = str_at(pull, "title")?.to_string();
    // mergeable_state is the closest creation-window CI proxy the pull
    // endpoint exposes: clean means checks green, unstable/dirty mean red.
    let ci_status = match lookup(pull, "mergeable_state").ok().and_then(Value::as_str) {
        Some("clean") => CiStatus::Pass,
        Some("unstable") | Some("dirty") => CiStatus::Fail,
        _ => CiStatus::None,
    };
    let primary_language = match lookup(pull, "base.repo.language") {
        Ok(Value::String(s)) => s.to_lowercase(),
        _ => "unknown".to_string(),
    };
    let linked_issue =
        linked_issue_pattern().is_match(&body) || linked_issue_pattern().is_match(&title);

    let file_items = files.as_array().ok_or(ForgeError::Mapping {
        field: "files".into(),
    })?;
    let files: Vec<FileChange> = file_items
        .iter()
        .map(|f| {
            Ok(FileChange {
                path: str_at(f, "filename")?.to_string(),
                additions: u64_at(f, "additions")?,
                deletions: u64_at(f, "deletions")?,
            })
        })
        .collect::<Result<_, ForgeError>>()?;

    let commit_items = commits.as_array().ok_or(ForgeError::Mapping {
        field: "commits".into(),
    })?;
    let mut commits: Vec<Commit> = commit_items
        .iter()
        .map(|c| {
            Ok(Commit {
                timestamp: timestamp_at(c, "commit.committer.date")?,
                sha: str_at(c, "sha")?.to_string(),
            })
        })
        .collect::<Result<_, ForgeError>>()?;
    commits.sort_by_key(|c| c.timestamp);

    let event_items = timeline.as_array().ok_or(ForgeError::Mapping {
        field: "timeline".into(),
    })?;
    let mut events = Vec::new();
    for item in event_items {
        let kind = match lookup(item, "event").ok().and_then(Value::as_str) {
            Some("reviewed") => EventKind::Review,
            Some("commented") => EventKind::Comment,
            _ => continue,
        };
        let actor_type = str_at(item, "actor.type").or_else(|_| str_at(item, "user.type"))?;
        let author_kind = if actor_type == "Bot" {
            EventAuthor::Bot
        } else {
            EventAuthor::Human
        };
        let timestamp =
            timestamp_at(item, "submitted_at").or_else(|_| timestamp_at(item, "created_at"))?;
        events.push(InteractionEvent {
            kind,
            author_kind,
            timestamp,
        });
    }
    events.sort_by_key(|e| e.timestamp);

    let total_additions = u64_at(pull, "additions")?;
    let total_deletions = u64_at(pull, "deletions")?;

    Ok(PullRequestRecord {
        id: format!("{repo}#{number}"),
        repo_id: repo.to_string(),
        agent_name,
        author_kind,
        created_at,
        merged_at,
        closed_at,
        state,
        title,
        body,
        files,
        total_additions,
        total_deletions,
        commits,
        timeline: events,
        ci_status,
        linked_issue,
        primary_language,
    })
}

#[cfg(feature = "forge-http")]
pub mod http {
    //! Real HTTPS transport, enabled with the `forge-http` feature.

    use super::{ForgeError, ForgeResponse, ForgeTransport};

    pub struct HttpTransport {
        client: reqwest::blocking::Client,
    }

    impl HttpTransport {
        pub fn new() -> Result<Self, ForgeError> {
            let client = reqwest::blocking::Client::builder()
                .user_agent("prbreaker")
                .build()
                .map_err(|e| ForgeError::Transport(e.to_string()))?;
            Ok(HttpTransport { client })
        }
    }

    impl ForgeTransport for HttpTransport {
        fn get(&self, url: &str, token: &str) -> Result<ForgeResponse, ForgeError> {
            let mut request = self
                .client
                .get(url)
                .header("Accept", "application/vnd.github+json");
            if !token.is_empty() {
                request = request.bearer_auth(token);
            }
            let response = request
                .send()
                .map_err(|e| ForgeError::Transport(e.to_string()))?;
            let status = response.status().as_u16();
            let body = response
                .text()
                .map_err(|e| ForgeError::Transport(e.to_string()))?;
            Ok(ForgeResponse { status, body })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;
    use std::collections::VecDeque;
    use std::sync::Arc;

    struct MockTransport {
        responses: Mutex<HashMap<String, VecDeque<ForgeResponse>>>,
    }

    impl MockTransport {
        fn new() -> Self {
            MockTransport {
                responses: Mutex::new(HashMap::new()),
            }
        }

        fn script(&self, url: &str, status: u16, body: &str) {
            self.responses
                .lock()
                .unwrap()
                .entry(url.to_string())
                .or_default()
                .push_back(ForgeResponse {
                    status,
                    body: body.to_string(),
                });
        }
    }

    impl ForgeTransport for MockTransport {
        fn get(&self, url: &str, _token: &str) -> Result<ForgeResponse, ForgeError> {
            self.responses
                .lock()
                .unwrap()
                .get_mut(url)
                .and_then(VecDeque::pop_front)
                .ok_or_else(|| ForgeError::Transport(format!("unscripted url {url}")))
        }
    }

    const BASE: &str = "https://forge.test/api";

    fn pull_fixture() -> String {
        serde_json::json!({
            "user": {"login": "codex[bot]", "type": "Bot"},
            "created_at": "2025-03-01T10:00:00Z",
            "merged_at": "2025-03-02T09:30:00Z",
            "closed_at": "2025-03-02T09:30:00Z",
            "state": "closed",
            "title": "Add retry logic",
            "body": "Plan:\n1. add retry\n2. test\n\nFixes #42",
            "additions": 120,
            "deletions": 8,
            "mergeable_state": "clean",
            "base": {"repo": {"language": "Python"}}
        })
        .to_string()
    }

    fn script_happy_path(mock: &MockTransport) {
        mock.script(
            &format!("{BASE}/repos/acme/api/pulls/7"),
            200,
            &pull_fixture(),
        );
        mock.script(
            &format!("{BASE}/repos/acme/api/pulls/7/files"),
            200,
            &serde_json::json!([
                {"filename": "src/retry.py", "additions": 100, "deletions": 8},
                {"filename": "tests/test_retry.py", "additions": 20, "deletions": 0}
            ])
            .to_string(),
        );
        mock.script(
            &format!("{BASE}/repos/acme/api/pulls/7/commits"),
            200,
            &serde_json::json!([
                {"sha": "bbb", "commit": {"committer": {"date": "2025-03-01T12:00:00Z"}}},
                {"sha": "aaa", "commit": {"committer": {"date": "2025-03-01T10:00:00Z"}}}
            ])
            .to_string(),
        );
        mock.script(
            &format!("{BASE}/repos/acme/api/issues/7/timeline"),
            200,
            &serde_json::json!([
                {"event": "labeled", "actor": {"type": "User"}},
                {"event": "commented", "actor": {"type": "Bot"},
                 "created_at": "2025-03-01T10:05:00Z"},
                {"event": "reviewed", "user": {"type": "User"},
                 "submitted_at": "2025-03-01T15:00:00Z"}
            ])
            .to_string(),
        );
    }

    #[test]
    fn golden_fixture_maps_to_record() {
        let mock = MockTransport::new();
        script_happy_path(&mock);
        let client = ForgeClient::new(mock, BASE).with_token("t");
        let record = client.fetch_pull_request("acme/api", 7).unwrap();

        assert_eq!(record.id, "acme/api#7");
        assert_eq!(record.repo_id, "acme/api");
        assert_eq!(record.agent_name, "codex");
        assert_eq!(record.author_kind, AuthorKind::GenerativeAgent);
        assert_eq!(record.state, PrState::Merged);
        assert_eq!(
            record.created_at,
            parse_iso_utc("2025-03-01T10:00:00Z").unwrap()
        );
        assert_eq!(
            record.merged_at,
            Some(parse_iso_utc("2025-03-02T09:30:00Z").unwrap())
        );
        assert_eq!(record.total_additions, 120);
        assert_eq!(record.total_deletions, 8);
        assert_eq!(record.files.len(), 2);
        assert_eq!(record.commits[0].sha, "aaa");
        assert_eq!(record.timeline.len(), 2);
        assert_eq!(record.timeline[0].author_kind, EventAuthor::Bot);
        assert_eq!(record.timeline[1].kind, EventKind::Review);
        assert_eq!(record.ci_status, CiStatus::Pass);
        assert!(record.linked_issue);
        assert_eq!(record.primary_language, "python");
        assert!(crate::record::validate_record(&record).is_empty());
        assert_eq!(client.backoff_count(), 0);
    }

    #[test]
    fn missing_field_is_named_in_error() {
        let mock = MockTransport::new();
        mock.script(
            &format!("{BASE}/repos/acme/api/pulls/9"),
            200,
            &serde_json::json!({"user": {"type": "Bot"}}).to_string(),
        );
        let client = ForgeClient::new(mock, BASE).with_token("t");
        match client.fetch_pull_request("acme/api", 9) {
            Err(ForgeError::Mapping { field }) => assert_eq!(field, "user.login"),
            other => panic!("expected mapping error, got {other:?}"),
        }
    }

    #[test]
    fn missing_pr_is_not_found() {
        let mock = MockTransport::new();
        mock.script(&format!("{BASE}/repos/acme/api/pulls/404"), 404, "{}");
        let client = ForgeClient::new(mock, BASE).with_token("t");
        match client.fetch_pull_request("acme/api", 404) {
            Err(ForgeError::NotFound { repo, number }) => {
                assert_eq!(repo, "acme/api");
                assert_eq!(number, 404);
            }
            other => panic!("expected not-found, got {other:?}"),
        }
    }

    #[test]
    fn rate_limit_backs_off_then_succeeds() {
        let mock = MockTransport::new();
        mock.script(&format!("{BASE}/repos/acme/api/pulls/7"), 403, "slow down");
        script_happy_path(&mock);
        let sleeps: Arc<Mutex<Vec<Duration>>> = Arc::default();
        let recorded = Arc::clone(&sleeps);
        let client = ForgeClient::new(mock, BASE)
            .with_token("t")
            .with_retry(3, Duration::from_millis(10))
            .with_sleeper(move |d| recorded.lock().unwrap().push(d));
        let record = client.fetch_pull_request("acme/api", 7).unwrap();
        assert_eq!(record.agent_name, "codex");
        assert_eq!(client.backoff_count(), 1);
        assert_eq!(*sleeps.lock().unwrap(), vec![Duration::from_millis(10)]);
    }

    #[test]
    fn persistent_rate_limit_errors_out() {
        let mock = MockTransport::new();
        let url = format!("{BASE}/repos/acme/api/pulls/7");
        for _ in 0..4 {
            mock.script(&url, 403, "slow down");
        }
        let client = ForgeClient::new(mock, BASE)
            .with_token("t")
            .with_retry(3, Duration::from_millis(1))
            .with_sleeper(|_| {});
        match client.fetch_pull_request("acme/api", 7) {
            Err(ForgeError::RateLimited { attempts }) => assert_eq!(attempts, 4),
            other => panic!("expected rate-limited, got {other:?}"),
        }
    }
}
