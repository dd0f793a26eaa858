//! Creation-time (T0) and pre-review (T1) feature extraction.
//!
//! A [`FeatureSchema`] is built from a [`ToolConfig`]: 35 T0 entries after
//! one-hot expansion, 39 at T1. The schema is pinned by a sha256 hash over
//! the feature list, the pattern table, and both vocabularies; the hash is
//! embedded in matrix exports and model files, so artifacts built under
//! different tables cannot be mixed silently.
//!
//! T0 uses nothing dated after PR creation. That boundary is enforced by a
//! mutation-based leakage test, not convention alone.

use crate::config::{PathPatternTable, ToolConfig};
use crate::record::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("schema is stage {schema} but a {requested} extraction was requested")]
    StageMismatch { schema: Stage, requested: Stage },
    #[error("schema hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },
    #[error("malformed feature matrix: {0}")]
    Matrix(String),
}

/// Extraction stage: T0 at PR creation, T1 just before first review.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    T0,
    T1,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::T0 => write!(f, "t0"),
            Stage::T1 => write!(f, "t1"),
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "t0" | "T0" => Ok(Stage::T0),
            "t1" | "T1" => Ok(Stage::T1),
            other => Err(format!("unknown stage {other:?}, expected t0 or t1")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureGroup {
    Intent,
    Context,
    Complexity,
}

#[derive(Debug, Clone)]
pub struct FeatureDef {
    pub name: String,
    pub group: FeatureGroup,
    pub stage: Stage,
}

/// Number of T0 features after one-hot expansion.
pub const T0_FEATURE_COUNT: usize = 35;
/// T1 adds the CI one-hot and the pre-review bot comment count.
pub const T1_FEATURE_COUNT: usize = 39;

/// Ordered, hash-pinned feature list plus everything needed to compute it.
#[derive(Debug, Clone)]
pub struct FeatureSchema {
    features: Vec<FeatureDef>,
    stage: Stage,
    agents: Vec<String>,
    languages: Vec<String>,
    table: PathPatternTable,
    hash: String,
}

impl FeatureSchema {
    pub fn for_stage(config: &ToolConfig, stage: Stage) -> Self {
        use FeatureGroup::*;
        let mut features = Vec::new();
        let mut push = |name: String, group: FeatureGroup, s: Stage| {
            features.push(FeatureDef {
                name,
                group,
                stage: s,
            })
        };
        for name in [
            "additions",
            "deletions",
            "total_changes",
            "log1p_additions",
            "log1p_deletions",
            "log1p_total_changes",
            "changed_files",
            "change_entropy",
            "max_file_share",
        ] {
            push(name.to_string(), Complexity, Stage::T0);
        }
        for name in ["body_length", "title_length", "has_plan", "linked_issue"] {
            push(name.to_string(), Intent, Stage::T0);
        }
        for name in [
            "touches_tests",
            "touches_ci",
            "touches_config",
            "touches_deps",
            "touches_docs",
            "touches_lockfile",
        ] {
            push(name.to_string(), Context, Stage::T0);
        }
        let agents: Vec<String> = config
            .agents
            .generative
            .iter()
            .map(|a| a.to_lowercase())
            .collect();
        for agent in &agents {
            push(format!("agent_{agent}"), Context, Stage::T0);
        }
        push("agent_other".to_string(), Context, Stage::T0);
        let languages: Vec<String> = config.languages.iter().map(|l| l.to_lowercase()).collect();
        for lang in &languages {
            push(format!("lang_{lang}"), Context, Stage::T0);
        }
        push("lang_other".to_string(), Context, Stage::T0);
        if stage == Stage::T1 {
            for name in ["ci_pass", "ci_fail", "ci_none"] {
                push(name.to_string(), Context, Stage::T1);
            }
            push("bot_comments_pre_review".to_string(), Context, Stage::T1);
        }

        let mut schema = FeatureSchema {
            features,
            stage,
            agents,
            languages,
            table: config.patterns.clone(),
            hash: String::new(),
        };
        schema.hash = schema.compute_hash(config.version);
        schema
    }

    pub fn t0(config: &ToolConfig) -> Self {
        Self::for_stage(config, Stage::T0)
    }

    pub fn t1(config: &ToolConfig) -> Self {
        Self::for_stage(config, Stage::T1)
    }

    fn compute_hash(&self, version: u32) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!(
            "prbreaker-schema v{version} stage={}\n",
            self.stage
        ));
        for def in &self.features {
            hasher.update(def.name.as_bytes());
            hasher.update(b"\n");
        }
        let table = toml::to_string(&self.table).expect("pattern table serializes");
        hasher.update(table.as_bytes());
        hasher.update(self.agents.join(",").as_bytes());
        hasher.update(b"|");
        hasher.update(self.languages.join(",").as_bytes());
        hex::encode(&hasher.finalize()[..16])
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn defs(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn pattern_table(&self) -> &PathPatternTable {
        &self.table
    }

    /// Extracts at this schema's stage.
    pub fn extract(&self, record: &PullRequestRecord) -> FeatureVector {
        match self.stage {
            Stage::T0 => extract_t0(record, self).expect("stage checked"),
            Stage::T1 => extract_t1(record, self).expect("stage checked"),
        }
    }
}

/// One extracted row, ordered exactly as the schema.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

/// Shannon entropy, base 2, of per-file change shares. Zero-change files are
/// excluded; an empty or all-zero list has zero entropy.
pub fn change_entropy(files: &[FileChange]) -> f64 {
    let total: u64 = files.iter().map(|f| f.additions + f.deletions).sum();
    if total == 0 {
        return 0.0;
    }
    files
        .iter()
        .map(|f| f.additions + f.deletions)
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

/// Largest single-file share of the total change mass, 0 for empty input.
pub fn max_file_share(files: &[FileChange]) -> f64 {
    let total: u64 = files.iter().map(|f| f.additions + f.deletions).sum();
    if total == 0 {
        return 0.0;
    }
    let max = files
        .iter()
        .map(|f| f.additions + f.deletions)
        .max()
        .unwrap_or(0);
    max as f64 / total as f64
}

fn plan_line_pattern() -> &'static regex::Regex {
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    RE.get_or_init(|| regex::Regex::new(r"(?i)^[\s>*#_+-]*(?:plan|steps)[_*]*\s*:").unwrap())
}

fn plan_heading_pattern() -> &'static regex::Regex {
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    RE.get_or_init(|| regex::Regex::new(r"(?i)^\s*#{1,6}\s*(?:plan|steps)\s*$").unwrap())
}

fn heading_with_plan_pattern() -> &'static regex::Regex {
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    RE.get_or_init(|| regex::Regex::new(r"(?i)^\s*#{1,6}.*\b(?:plan|steps)\b").unwrap())
}

fn any_heading_pattern() -> &'static regex::Regex {
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    RE.get_or_init(|| regex::Regex::new(r"^\s*#{1,6}\s").unwrap())
}

fn checklist_pattern() -> &'static regex::Regex {
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    RE.get_or_init(|| regex::Regex::new(r"^\s*[-*+]\s*\[[ xX]\]").unwrap())
}

/// True when the body announces an explicit plan: a line-anchored `plan:` or
/// `steps:` (markdown markup allowed), a `## plan` / `## steps` heading, or
/// a heading mentioning plan/steps followed by at least two checklist items.
/// Mid-sentence mentions never match.
pub fn detect_plan(body: &str) -> bool {
    let lines: Vec<&str> = body.lines().collect();
    for line in &lines {
        if plan_line_pattern().is_match(line) || plan_heading_pattern().is_match(line) {
            return true;
        }
    }
    for (i, line) in lines.iter().enumerate() {
        if !heading_with_plan_pattern().is_match(line) {
            continue;
        }
        let items = lines[i + 1..]
            .iter()
            .take_while(|l| !any_heading_pattern().is_match(l))
            .filter(|l| checklist_pattern().is_match(l))
            .count();
        if items >= 2 {
            return true;
        }
    }
    false
}

/// Which file-type categories a change set touches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FileTypeFlags {
    pub touches_tests: bool,
    pub touches_ci: bool,
    pub touches_config: bool,
    pub touches_deps: bool,
    pub touches_docs: bool,
    pub touches_lockfile: bool,
}

/// Applies the pattern table to every path. Config hits inside ci paths do
/// not count as config; lockfiles always count as deps as well.
pub fn file_type_flags(files: &[FileChange], table: &PathPatternTable) -> FileTypeFlags {
    let mut flags = FileTypeFlags::default();
    for file in files {
        let path = file.path.to_lowercase();
        let is_ci = table.ci.matches(&path);
        let is_lockfile = table.lockfile.matches(&path);
        flags.touches_tests |= table.tests.matches(&path);
        flags.touches_ci |= is_ci;
        flags.touches_config |= table.config.matches(&path) && !is_ci;
        flags.touches_deps |= table.deps.matches(&path) || is_lockfile;
        flags.touches_docs |= table.docs.matches(&path);
        flags.touches_lockfile |= is_lockfile;
    }
    flags
}

fn normalize_language(raw: &str) -> String {
    let lower = raw.trim().to_lowercase();
    match lower.as_str() {
        "c++" => "cpp".to_string(),
        "c#" => "csharp".to_string(),
        _ => lower,
    }
}

fn bit(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Creation-time vector: everything known the moment the PR is opened.
pub fn extract_t0(
    record: &PullRequestRecord,
    schema: &FeatureSchema,
) -> Result<FeatureVector, FeatureError> {
    if schema.stage != Stage::T0 {
        return Err(FeatureError::StageMismatch {
            schema: schema.stage,
            requested: Stage::T0,
        });
    }
    Ok(FeatureVector {
        values: t0_values(record, schema),
    })
}

fn t0_values(record: &PullRequestRecord, schema: &FeatureSchema) -> Vec<f64> {
    let mut v = Vec::with_capacity(schema.len());
    let additions = record.total_additions as f64;
    let deletions = record.total_deletions as f64;
    let total = record.total_changes() as f64;
    v.push(additions);
    v.push(deletions);
    v.push(total);
    v.push(additions.ln_1p());
    v.push(deletions.ln_1p());
    v.push(total.ln_1p());
    v.push(record.files.len() as f64);
    v.push(change_entropy(&record.files));
    v.push(max_file_share(&record.files));

    v.push(record.body.chars().count() as f64);
    v.push(record.title.chars().count() as f64);
    v.push(bit(detect_plan(&record.body)));
    v.push(bit(record.linked_issue));

    let flags = file_type_flags(&record.files, &schema.table);
    v.push(bit(flags.touches_tests));
    v.push(bit(flags.touches_ci));
    v.push(bit(flags.touches_config));
    v.push(bit(flags.touches_deps));
    v.push(bit(flags.touches_docs));
    v.push(bit(flags.touches_lockfile));

    let agent = record.agent_name.to_lowercase();
    let agent_slot = schema.agents.iter().position(|a| *a == agent);
    for i in 0..schema.agents.len() {
        v.push(bit(agent_slot == Some(i)));
    }
    v.push(bit(agent_slot.is_none()));

    let language = normalize_language(&record.primary_language);
    let lang_slot = schema.languages.iter().position(|l| *l == language);
    for i in 0..schema.languages.len() {
        v.push(bit(lang_slot == Some(i)));
    }
    v.push(bit(lang_slot.is_none()));
    v
}

/// Pre-review vector: T0 plus CI status and the count of bot events strictly
/// before the first human event (all bot events when no human ever showed).
pub fn extract_t1(
    record: &PullRequestRecord,
    schema: &FeatureSchema,
) -> Result<FeatureVector, FeatureError> {
    if schema.stage != Stage::T1 {
        return Err(FeatureError::StageMismatch {
            schema: schema.stage,
            requested: Stage::T1,
        });
    }
    let mut values = t0_values(record, schema);
    values.push(bit(record.ci_status == CiStatus::Pass));
    values.push(bit(record.ci_status == CiStatus::Fail));
    values.push(bit(record.ci_status == CiStatus::None));
    let cutoff = record.first_human_event().unwrap_or(i64::MAX);
    let bot_events = record
        .timeline
        .iter()
        .filter(|e| e.author_kind == EventAuthor::Bot && e.timestamp < cutoff)
        .count();
    values.push(bot_events as f64);
    Ok(FeatureVector { values })
}

/// A full corpus extracted under one schema, with ids aligned to rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    pub schema_hash: String,
    pub stage: Stage,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    /// Extracts every record in parallel; row order follows input order.
    pub fn extract(records: &[PullRequestRecord], schema: &FeatureSchema) -> Self {
        let rows: Vec<Vec<f64>> = records
            .par_iter()
            .map(|r| schema.extract(r).values)
            .collect();
        FeatureMatrix {
            ids: records.iter().map(|r| r.id.clone()).collect(),
            names: schema.names().iter().map(|s| s.to_string()).collect(),
            schema_hash: schema.hash().to_string(),
            stage: schema.stage(),
            rows,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Keeps the rows whose ids appear in `ids`, in the matrix's own order.
    pub fn subset_by_ids(&self, ids: &std::collections::HashSet<&str>) -> FeatureMatrix {
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&i| ids.contains(self.ids[i].as_str()))
            .collect();
        FeatureMatrix {
            ids: keep.iter().map(|&i| self.ids[i].clone()).collect(),
            names: self.names.clone(),
            schema_hash: self.schema_hash.clone(),
            stage: self.stage,
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// CSV export: `# key=value` comment headers carrying the schema hash
    /// and stage, then a header row, then one row per PR with floats at
    /// 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# schema_hash={}\n", self.schema_hash));
        out.push_str(&format!("# stage={}\n", self.stage));
        out.push_str("id,");
        out.push_str(&self.names.join(","));
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.rows) {
            out.push_str(id);
            for v in row {
                out.push(',');
                out.push_str(&format_sig9(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, FeatureError> {
        let mut schema_hash = None;
        let mut stage = None;
        let mut names: Option<Vec<String>> = None;
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((key, value)) = rest.split_once('=') {
                    match key {
                        "schema_hash" => schema_hash = Some(value.to_string()),
                        "stage" => {
                            stage = Some(value.parse::<Stage>().map_err(FeatureError::Matrix)?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            match &names {
                None => {
                    let mut header = line.split(',');
                    if header.next() != Some("id") {
                        return Err(FeatureError::Matrix(
                            "header row must start with id".to_string(),
                        ));
                    }
                    names = Some(header.map(str::to_string).collect());
                }
                Some(names) => {
                    let mut fields = line.split(',');
                    let id = fields
                        .next()
                        .ok_or_else(|| FeatureError::Matrix(format!("empty row {line_no}")))?;
                    let row: Vec<f64> = fields
                        .map(|f| {
                            f.parse::<f64>().map_err(|e| {
                                FeatureError::Matrix(format!("line {}: {e}", line_no + 1))
                            })
                        })
                        .collect::<Result<_, _>>()?;
                    if row.len() != names.len() {
                        return Err(FeatureError::Matrix(format!(
                            "line {}: expected {} values, found {}",
                            line_no + 1,
                            names.len(),
                            row.len()
                        )));
                    }
                    ids.push(id.to_string());
                    rows.push(row);
                }
            }
        }
        Ok(FeatureMatrix {
            ids,
            names: names.ok_or_else(|| FeatureError::Matrix("missing header row".to_string()))?,
            schema_hash: schema_hash
                .ok_or_else(|| FeatureError::Matrix("missing schema_hash header".to_string()))?,
            stage: stage.ok_or_else(|| FeatureError::Matrix("missing stage header".to_string()))?,
            rows,
        })
    }
}

/// 9 significant digits, scientific notation.
pub fn format_sig9(v: f64) -> String {
    format!("{v:.8e}")
}
