//! Synthetic corpora from the two-regime generative picture: an instant
//! lane merged within a minute and a normal lane whose effort follows a
//! Poisson log-link on planted features. Deterministic per seed, emitting
//! the exact ingest wire schema so the whole pipeline runs on it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use thiserror::Error;

use crate::labeling::nearest_rank;
use crate::record::AuthorKind;
use crate::record::{
    CiStatus, Commit, EventAuthor, EventKind, FileChange, InteractionEvent, PrState,
    PullRequestRecord,
};
use crate::timefmt::SECONDS_PER_DAY;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth params: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AgentMix {
    pub name: String,
    pub weight: f64,
    pub ghosting_rate: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthParams {
    pub n_prs: usize,
    pub seed: u64,
    pub instant_fraction: f64,
    pub instant_median_changes: f64,
    pub normal_median_changes: f64,
    pub instant_config_rate: f64,
    pub normal_config_rate: f64,
    pub effort_size_correlation: f64,
    pub acceptance_rate_non_instant: f64,
    pub plan_rate: f64,
    pub plan_protective_effect: f64,
    pub agents: Vec<AgentMix>,
}

impl Default for SynthParams {
    fn default() -> Self {
        let mix = |name: &str, weight: f64, ghosting_rate: f64| AgentMix {
            name: name.to_string(),
            weight,
            ghosting_rate,
        };
        SynthParams {
            n_prs: 10_000,
            seed: 7,
            instant_fraction: 0.283,
            instant_median_changes: 68.0,
            normal_median_changes: 104.0,
            instant_config_rate: 0.071,
            normal_config_rate: 0.184,
            effort_size_correlation: 0.6,
            acceptance_rate_non_instant: 0.687,
            plan_rate: 0.30,
            plan_protective_effect: 0.9,
            agents: vec![
                mix("codex", 0.678, 0.100),
                mix("claude", 0.016, 0.031),
                mix("devin", 0.150, 0.009),
                mix("copilot", 0.156, 0.023),
            ],
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_prs < 100 {
            return Err(SynthError::InvalidParams(format!(
                "n_prs {} too small, distributional structure needs at least 100",
                self.n_prs
            )));
        }
        for (name, v) in [
            ("instant_fraction", self.instant_fraction),
            ("instant_config_rate", self.instant_config_rate),
            ("normal_config_rate", self.normal_config_rate),
            (
                "acceptance_rate_non_instant",
                self.acceptance_rate_non_instant,
            ),
            ("plan_rate", self.plan_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::InvalidParams(format!(
                    "{name} {v} outside [0,1]"
                )));
            }
        }
        if self.instant_median_changes <= 0.0 || self.normal_median_changes <= 0.0 {
            return Err(SynthError::InvalidParams("medians must be positive".into()));
        }
        if !(0.0..=0.85).contains(&self.effort_size_correlation) {
            return Err(SynthError::InvalidParams(format!(
                "effort_size_correlation {} outside [0,0.85]",
                self.effort_size_correlation
            )));
        }
        if self.plan_protective_effect < 0.0 {
            return Err(SynthError::InvalidParams(
                "plan_protective_effect must be nonnegative".into(),
            ));
        }
        if self.agents.is_empty() {
            return Err(SynthError::InvalidParams("agent mix is empty".into()));
        }
        for a in &self.agents {
            if a.weight <= 0.0 || !(0.0..=1.0).contains(&a.ghosting_rate) {
                return Err(SynthError::InvalidParams(format!(
                    "agent {} has weight {} / ghosting {}",
                    a.name, a.weight, a.ghosting_rate
                )));
            }
        }
        Ok(())
    }
}

// Effort model calibration, tuned so defaults land on the target Spearman
// band and a sane mean effort near 2.2 events.
const MEAN_LOG1P_SIZE: f64 = 4.654;
const BASE_EFFORT: f64 = 2.2;
const SIZE_COEF_PER_CORR: f64 = 0.70 / 0.6;
const CONFIG_EFFORT_BOOST: f64 = 0.9;
const HUMAN_EVENT_FRACTION: f64 = 0.85;
const REVIEW_EVENT_FRACTION: f64 = 0.4;
const LINKED_ISSUE_RATE: f64 = 0.25;
// slice of non-instant PRs still open at snapshot time, so timeout sweeps
// have a live population to examine
const OPEN_FRACTION: f64 = 0.06;
const MAX_EVENTS: u64 = 500;
// 2025-01-01T00:00:00Z
const BASE_TIME: i64 = 1_735_689_600;

const LANGUAGES: [(&str, f64); 10] = [
    ("python", 0.30),
    ("typescript", 0.20),
    ("javascript", 0.12),
    ("go", 0.08),
    ("rust", 0.08),
    ("java", 0.07),
    ("cpp", 0.05),
    ("csharp", 0.04),
    ("ruby", 0.03),
    ("php", 0.03),
];

const AREAS: [&str; 5] = ["core", "api", "engine", "store", "util"];

const TITLES: [&str; 8] = [
    "Fix off-by-one in pagination cursor",
    "Add retry logic to the fetch layer",
    "Refactor request validation",
    "Handle empty payloads in the worker",
    "Tighten error propagation in the store",
    "Speed up cache invalidation",
    "Support new upstream response shape",
    "Normalize identifiers before lookup",
];

fn lang_ext(lang: &str) -> &'static str {
    match lang {
        "python" => "py",
        "typescript" => "ts",
        "javascript" => "js",
        "go" => "go",
        "rust" => "rs",
        "java" => "java",
        "cpp" => "cc",
        "csharp" => "cs",
        "ruby" => "rb",
        _ => "php",
    }
}

fn pick_weighted<'a>(rng: &mut ChaCha20Rng, items: &'a [(&'a str, f64)]) -> &'a str {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut x = rng.gen::<f64>() * total;
    for (item, w) in items {
        if x < *w {
            return item;
        }
        x -= w;
    }
    items.last().expect("nonempty weights").0
}

struct EffortCoeffs {
    b0: f64,
    b1: f64,
    b2: f64,
    b3: f64,
}

fn effort_coeffs(params: &SynthParams, signal_strength: f64) -> EffortCoeffs {
    let b1 = params.effort_size_correlation * SIZE_COEF_PER_CORR * signal_strength;
    let b2 = CONFIG_EFFORT_BOOST * signal_strength;
    let b3 = params.plan_protective_effect * signal_strength;
    // recenter so mean effort stays near BASE_EFFORT whatever the slope
    let b0 = BASE_EFFORT.ln() - b1 * MEAN_LOG1P_SIZE;
    EffortCoeffs { b0, b1, b2, b3 }
}

/// Default two-regime corpus; see [`planted_signal_corpus`] for the
/// learner-oracle variant with known labels.
pub fn generate_corpus(params: &SynthParams) -> Result<Vec<PullRequestRecord>, SynthError> {
    let (records, _) = generate(params, 1.0, false)?;
    Ok(records)
}

/// Normal-regime-only corpus whose effort depends on size, config touch,
/// and missing plans with coefficients scaled by `signal_strength`; the
/// returned labels mark efforts strictly above the corpus 80th percentile.
/// Strength 0 yields labels independent of every feature.
pub fn planted_signal_corpus(
    params: &SynthParams,
    signal_strength: f64,
) -> Result<(Vec<PullRequestRecord>, Vec<bool>), SynthError> {
    if signal_strength < 0.0 {
        return Err(SynthError::InvalidParams(format!(
            "signal_strength {signal_strength} must be nonnegative"
        )));
    }
    let (records, efforts) = generate(params, signal_strength, true)?;
    let threshold = nearest_rank(&efforts, 0.80).expect("nonempty efforts");
    let labels = efforts.iter().map(|&e| e > threshold).collect();
    Ok((records, labels))
}

fn generate(
    params: &SynthParams,
    signal_strength: f64,
    force_normal: bool,
) -> Result<(Vec<PullRequestRecord>, Vec<u64>), SynthError> {
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let coeffs = effort_coeffs(params, signal_strength);
    let instant_sizes = LogNormal::new(params.instant_median_changes.ln(), 1.0)
        .map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    let normal_sizes = LogNormal::new(params.normal_median_changes.ln(), 1.0)
        .map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    let agent_weights: Vec<(&str, f64)> = params
        .agents
        .iter()
        .map(|a| (a.name.as_str(), a.weight))
        .collect();
    let repo_pool = (params.n_prs / 250).max(4);

    let mut records = Vec::with_capacity(params.n_prs);
    let mut efforts = Vec::with_capacity(params.n_prs);
    for i in 0..params.n_prs {
        let repo = rng.gen_range(0..repo_pool);
        let agent = pick_weighted(&mut rng, &agent_weights).to_string();
        let language = pick_weighted(&mut rng, &LANGUAGES).to_string();
        let created = BASE_TIME + i as i64 * 900 + rng.gen_range(0..900);
        let instant = !force_normal && rng.gen_bool(params.instant_fraction);

        let raw_size = if instant {
            instant_sizes.sample(&mut rng)
        } else {
            normal_sizes.sample(&mut rng)
        };
        let changes = (raw_size.round() as u64).max(1);
        let config_rate = if instant {
            params.instant_config_rate
        } else {
            params.normal_config_rate
        };
        let touches_config = rng.gen_bool(config_rate);
        let has_plan = rng.gen_bool(params.plan_rate);
        let linked_issue = rng.gen_bool(LINKED_ISSUE_RATE);

        let title = TITLES[rng.gen_range(0..TITLES.len())].to_string();
        let area = AREAS[rng.gen_range(0..AREAS.len())];
        let body = compose_body(&mut rng, area, has_plan);
        let files = compose_files(&mut rng, changes, touches_config, area, &language);
        let total_additions: u64 = files.iter().map(|f| f.additions).sum();
        let total_deletions: u64 = files.iter().map(|f| f.deletions).sum();
        let mut commits = vec![Commit {
            timestamp: created,
            sha: format!("{:040x}", (params.seed as u128) << 64 | i as u128),
        }];

        let record = if instant {
            let merged = created + rng.gen_range(5..60);
            let ci = if rng.gen_bool(0.85) {
                CiStatus::Pass
            } else {
                CiStatus::None
            };
            efforts.push(0);
            PullRequestRecord {
                id: format!("synth-{i:06}"),
                repo_id: format!("org/repo-{repo:03}"),
                agent_name: agent,
                author_kind: AuthorKind::GenerativeAgent,
                created_at: created,
                merged_at: Some(merged),
                closed_at: Some(merged),
                state: PrState::Merged,
                title,
                body,
                files,
                total_additions,
                total_deletions,
                commits,
                timeline: Vec::new(),
                ci_status: ci,
                linked_issue,
                primary_language: language,
            }
        } else {
            let log_lambda = coeffs.b0
                + coeffs.b1 * (1.0 + changes as f64).ln()
                + coeffs.b2 * f64::from(u8::from(touches_config))
                - coeffs.b3 * f64::from(u8::from(has_plan));
            let lambda = log_lambda.exp();
            let effort = (Poisson::new(lambda)
                .expect("positive lambda")
                .sample(&mut rng) as u64)
                .min(MAX_EVENTS);
            efforts.push(effort);

            let ci = {
                let x = rng.gen::<f64>();
                if x < 0.55 {
                    CiStatus::Pass
                } else if x < 0.85 {
                    CiStatus::Fail
                } else {
                    CiStatus::None
                }
            };
            let still_open = rng.gen_bool(OPEN_FRACTION);
            let merged = !still_open && rng.gen_bool(params.acceptance_rate_non_instant);
            let window_end = if merged {
                created + (rng.gen_range(1.0..21.0) * SECONDS_PER_DAY as f64) as i64
            } else {
                created + (rng.gen_range(1.0..10.0) * SECONDS_PER_DAY as f64) as i64
            };
            let mut timeline = Vec::with_capacity(effort as usize);
            for _ in 0..effort {
                timeline.push(InteractionEvent {
                    kind: if rng.gen_bool(REVIEW_EVENT_FRACTION) {
                        EventKind::Review
                    } else {
                        EventKind::Comment
                    },
                    author_kind: if rng.gen_bool(HUMAN_EVENT_FRACTION) {
                        EventAuthor::Human
                    } else {
                        EventAuthor::Bot
                    },
                    timestamp: rng.gen_range(created + 600..window_end - 60),
                });
            }
            timeline.sort_by_key(|e| e.timestamp);

            let last_human = timeline
                .iter()
                .filter(|e| e.author_kind == EventAuthor::Human)
                .map(|e| e.timestamp)
                .max();
            let (state, merged_at, closed_at) = if still_open {
                // 40% of feedback-received open PRs sit unanswered, so
                // sweeps have both stale and engaged cases to sort through
                if let Some(feedback) = last_human {
                    if rng.gen_bool(0.6) {
                        let follow_up =
                            feedback + (rng.gen_range(0.5..13.5) * SECONDS_PER_DAY as f64) as i64;
                        commits.push(Commit {
                            timestamp: follow_up,
                            sha: format!(
                                "{:040x}",
                                ((params.seed as u128) << 64 | i as u128) ^ 0xbeef
                            ),
                        });
                    }
                }
                (PrState::Open, None, None)
            } else if merged {
                (PrState::Merged, Some(window_end), Some(window_end))
            } else {
                let closed = match last_human {
                    None => window_end + (rng.gen_range(1.0..20.0) * SECONDS_PER_DAY as f64) as i64,
                    Some(feedback) => {
                        let rate = params
                            .agents
                            .iter()
                            .find(|a| a.name == agent)
                            .map_or(0.0, |a| a.ghosting_rate);
                        if rng.gen_bool(rate) {
                            // silence: no commit lands after the feedback
                            feedback + (rng.gen_range(15.0..45.0) * SECONDS_PER_DAY as f64) as i64
                        } else {
                            let follow_up = feedback
                                + (rng.gen_range(0.5..13.5) * SECONDS_PER_DAY as f64) as i64;
                            commits.push(Commit {
                                timestamp: follow_up,
                                sha: format!(
                                    "{:040x}",
                                    ((params.seed as u128) << 64 | i as u128) ^ 0xf00d
                                ),
                            });
                            follow_up + (rng.gen_range(0.5..20.0) * SECONDS_PER_DAY as f64) as i64
                        }
                    }
                };
                (PrState::Rejected, None, Some(closed))
            };

            PullRequestRecord {
                id: format!("synth-{i:06}"),
                repo_id: format!("org/repo-{repo:03}"),
                agent_name: agent,
                author_kind: AuthorKind::GenerativeAgent,
                created_at: created,
                merged_at,
                closed_at,
                state,
                title,
                body,
                files,
                total_additions,
                total_deletions,
                commits,
                timeline,
                ci_status: ci,
                linked_issue,
                primary_language: language,
            }
        };
        records.push(record);
    }
    Ok((records, efforts))
}

fn compose_body(rng: &mut ChaCha20Rng, area: &str, has_plan: bool) -> String {
    let mut body = String::new();
    if has_plan {
        body.push_str(
            "Plan:\n- audit the call sites\n- patch the handler\n- extend regression coverage\n\n",
        );
    }
    body.push_str(&format!(
        "Updates the {area} module to handle additional cases."
    ));
    for k in 0..rng.gen_range(0..12) {
        body.push_str(&format!(" Covers scenario {k} from the report."));
    }
    body
}

fn compose_files(
    rng: &mut ChaCha20Rng,
    changes: u64,
    touches_config: bool,
    area: &str,
    language: &str,
) -> Vec<FileChange> {
    let base = 1 + ((changes as f64).powf(0.4) / 1.5).round() as usize;
    let n_files = (base + rng.gen_range(0..2)).clamp(1, 20);
    let weights: Vec<f64> = (0..n_files).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total_w: f64 = weights.iter().sum();

    let additions_total = ((changes as f64) * rng.gen_range(0.55..0.95)).round() as u64;
    let additions_total = additions_total.min(changes);
    let deletions_total = changes - additions_total;

    let mut files = Vec::with_capacity(n_files);
    let (mut adds_left, mut dels_left) = (additions_total, deletions_total);
    for (j, w) in weights.iter().enumerate() {
        let (adds, dels) = if j + 1 == n_files {
            (adds_left, dels_left)
        } else {
            let a = ((additions_total as f64) * w / total_w).floor() as u64;
            let d = ((deletions_total as f64) * w / total_w).floor() as u64;
            (a.min(adds_left), d.min(dels_left))
        };
        adds_left -= adds;
        dels_left -= dels;
        let path = if touches_config && j == 0 {
            "settings/app.yaml".to_string()
        } else {
            format!("src/{area}/mod_{j:02}.{}", lang_ext(language))
        };
        files.push(FileChange::new(path, adds, dels));
    }
    files
}
