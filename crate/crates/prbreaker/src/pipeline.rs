//! File-level orchestration behind the CLI. Each subcommand maps to one
//! `cmd_*` function that reads explicit inputs, writes deterministic
//! outputs (no wall clock, one root seed), and returns a summary line.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, ToolConfig};
use crate::derive_seed;
use crate::eval::bootstrap::{bootstrap_ci, ConfidenceInterval};
use crate::eval::importance::permutation_importance;
use crate::eval::metrics::{
    budget_metrics, calibration_curve, ecdf, pr_auc, roc_auc, roc_curve, topk_coverage,
};
use crate::eval::report::{EvalReport, MetricsRow, QuartileAuc};
use crate::eval::splits::{loao_folds, size_quartile_strata, SplitKind, SplitSpec};
use crate::eval::EvalError;
use crate::features::{FeatureError, FeatureMatrix, FeatureSchema, Stage};
use crate::ingest::{parse_corpus, write_corpus, IngestError};
use crate::labeling::{
    build_labels, build_labels_with_threshold, high_cost_threshold, LabelConfig, LabelError,
};
use crate::learner::gbdt::{train_gbdt, GbdtModel, GbdtParams};
use crate::learner::linear::{train_path_token_baseline, train_size_only, PathTokenModel};
use crate::learner::model_io::{model_from_str, model_to_string};
use crate::learner::LearnerError;
use crate::record::{validate_record, PrState, PullRequestRecord};
use crate::synth::{generate_corpus, SynthError, SynthParams};
use crate::timefmt::SECONDS_PER_DAY;
use crate::triage::{
    batch_gate, decisions_to_csv, decisions_to_jsonl, timeout_sweep, TriageError, TriageInput,
    TriagePolicy, TriageReason,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_MISSING_INPUT: i32 = 2;
pub const EXIT_SCHEMA_MISMATCH: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing_input: {0}")]
    MissingInput(PathBuf),
    #[error("schema_mismatch: model built for {expected}, data hashed {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("malformed: {0}")]
    Malformed(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::MissingInput(_) => EXIT_MISSING_INPUT,
            PipelineError::SchemaMismatch { .. } => EXIT_SCHEMA_MISMATCH,
            PipelineError::Malformed(_) => EXIT_MALFORMED,
            PipelineError::Usage(_) => EXIT_USAGE,
            PipelineError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Internal(e.to_string())
    }
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Malformed { .. } => PipelineError::Malformed(e.to_string()),
            IngestError::Io(io) => PipelineError::Internal(io.to_string()),
        }
    }
}

impl From<FeatureError> for PipelineError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::HashMismatch { expected, found } => {
                PipelineError::SchemaMismatch { expected, found }
            }
            other => PipelineError::Malformed(other.to_string()),
        }
    }
}

impl From<LearnerError> for PipelineError {
    fn from(e: LearnerError) -> Self {
        match e {
            LearnerError::SchemaMismatch { model, matrix } => PipelineError::SchemaMismatch {
                expected: model,
                found: matrix,
            },
            LearnerError::ModelFormat(msg) => PipelineError::Malformed(msg),
            other => PipelineError::Internal(other.to_string()),
        }
    }
}

impl From<LabelError> for PipelineError {
    fn from(e: LabelError) -> Self {
        match e {
            LabelError::InvalidConfig(_) => PipelineError::Usage(e.to_string()),
            LabelError::Csv(_) => PipelineError::Malformed(e.to_string()),
            other => PipelineError::Internal(other.to_string()),
        }
    }
}

impl From<EvalError> for PipelineError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::BadFraction(_) | EvalError::BadSplit { .. } => {
                PipelineError::Usage(e.to_string())
            }
            other => PipelineError::Internal(other.to_string()),
        }
    }
}

impl From<TriageError> for PipelineError {
    fn from(e: TriageError) -> Self {
        match e {
            TriageError::InvalidPolicy(_) => PipelineError::Usage(e.to_string()),
            TriageError::EmptyBatch => PipelineError::Malformed(e.to_string()),
        }
    }
}

impl From<SynthError> for PipelineError {
    fn from(e: SynthError) -> Self {
        PipelineError::Usage(e.to_string())
    }
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        let msg = e.to_string();
        match e {
            ConfigError::Io { .. } => PipelineError::Internal(msg),
            ConfigError::Parse { .. } => PipelineError::Malformed(msg),
            ConfigError::Invalid(_) => PipelineError::Usage(msg),
        }
    }
}

/// Everything a subcommand can need, filled from flags with spec defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub stage: Stage,
    /// None means evaluate every split kind in one report.
    pub split: Option<SplitKind>,
    pub budget: f64,
    pub quantile: f64,
    pub timeout_days: u32,
    pub config_path: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub n_prs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            out: None,
            seed: 7,
            stage: Stage::T0,
            split: None,
            budget: 0.20,
            quantile: 0.80,
            timeout_days: 14,
            config_path: None,
            model_path: None,
            n_prs: 10_000,
        }
    }
}

impl RunConfig {
    fn input(&self) -> Result<&Path, PipelineError> {
        self.input
            .as_deref()
            .ok_or_else(|| PipelineError::Usage("--input is required".into()))
    }

    fn out(&self) -> Result<&Path, PipelineError> {
        self.out
            .as_deref()
            .ok_or_else(|| PipelineError::Usage("--out is required".into()))
    }

    fn model(&self) -> Result<&Path, PipelineError> {
        self.model_path
            .as_deref()
            .ok_or_else(|| PipelineError::Usage("--model is required".into()))
    }

    fn label_config(&self) -> LabelConfig {
        LabelConfig {
            high_cost_quantile: self.quantile,
            ghosting_timeout_days: i64::from(self.timeout_days),
            ..LabelConfig::default()
        }
    }

    fn tool_config(&self) -> Result<ToolConfig, PipelineError> {
        match &self.config_path {
            None => Ok(ToolConfig::default()),
            Some(path) => {
                if !path.exists() {
                    return Err(PipelineError::MissingInput(path.clone()));
                }
                Ok(ToolConfig::load(path)?)
            }
        }
    }
}

fn read_existing(path: &Path) -> Result<String, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingInput(path.to_path_buf()));
    }
    Ok(fs::read_to_string(path)?)
}

pub fn load_corpus(path: &Path) -> Result<Vec<PullRequestRecord>, PipelineError> {
    let raw = read_existing(path)?;
    let (records, _) = parse_corpus(std::io::BufReader::new(raw.as_bytes()), true)?;
    if records.is_empty() {
        return Err(PipelineError::Malformed(format!(
            "corpus {} holds no records",
            path.display()
        )));
    }
    Ok(records)
}

fn write_corpus_file(records: &[PullRequestRecord], path: &Path) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut buf = Vec::new();
    write_corpus(records, &mut buf).map_err(PipelineError::from)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Strict parse, per-record validation, canonical re-serialization.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<String, PipelineError> {
    let records = load_corpus(cfg.input()?)?;
    for r in &records {
        let problems = validate_record(r);
        if !problems.is_empty() {
            return Err(PipelineError::Malformed(format!(
                "record {}: {}",
                r.id,
                problems.join("; ")
            )));
        }
    }
    write_corpus_file(&records, cfg.out()?)?;
    Ok(format!("ingested {} records", records.len()))
}

pub fn cmd_featurize(cfg: &RunConfig) -> Result<String, PipelineError> {
    let records = load_corpus(cfg.input()?)?;
    let tool = cfg.tool_config()?;
    let schema = FeatureSchema::for_stage(&tool, cfg.stage);
    let matrix = FeatureMatrix::extract(&records, &schema);
    fs::write(cfg.out()?, matrix.to_csv())?;
    Ok(format!(
        "featurized {} records at stage {} (schema {})",
        matrix.n_rows(),
        cfg.stage,
        matrix.schema_hash
    ))
}

pub fn cmd_label(cfg: &RunConfig) -> Result<String, PipelineError> {
    let records = load_corpus(cfg.input()?)?;
    let labels = build_labels(&records, &cfg.label_config())?;
    fs::write(cfg.out()?, labels.to_csv())?;
    let positives = labels.high_cost.iter().filter(|&&h| h).count();
    Ok(format!(
        "labeled {} records, {} high-cost at threshold {}",
        labels.len(),
        positives,
        labels.threshold
    ))
}

pub fn cmd_train(cfg: &RunConfig) -> Result<String, PipelineError> {
    let records = load_corpus(cfg.input()?)?;
    let tool = cfg.tool_config()?;
    let schema = FeatureSchema::for_stage(&tool, cfg.stage);
    let matrix = FeatureMatrix::extract(&records, &schema);
    let labels = build_labels(&records, &cfg.label_config())?;
    let params = GbdtParams {
        seed: derive_seed(cfg.seed, "gbdt"),
        ..GbdtParams::default()
    };
    let model = train_gbdt(&matrix, &labels.high_cost, &params)?;
    fs::write(cfg.out()?, model_to_string(&model))?;
    Ok(format!(
        "trained {} trees on {} records (schema {})",
        model.trees.len(),
        matrix.n_rows(),
        model.schema_hash
    ))
}

fn load_model(path: &Path) -> Result<GbdtModel, PipelineError> {
    let raw = read_existing(path)?;
    Ok(model_from_str(&raw)?)
}

fn score_against_model(
    records: &[PullRequestRecord],
    model: &GbdtModel,
    tool: &ToolConfig,
) -> Result<(FeatureMatrix, Vec<f64>), PipelineError> {
    let schema = FeatureSchema::for_stage(tool, model.stage);
    let matrix = FeatureMatrix::extract(records, &schema);
    if matrix.schema_hash != model.schema_hash {
        return Err(PipelineError::SchemaMismatch {
            expected: model.schema_hash.clone(),
            found: matrix.schema_hash,
        });
    }
    let scores = model.predict_proba(&matrix)?;
    Ok((matrix, scores))
}

pub fn cmd_score(cfg: &RunConfig) -> Result<String, PipelineError> {
    let records = load_corpus(cfg.input()?)?;
    let model = load_model(cfg.model()?)?;
    let tool = cfg.tool_config()?;
    let (_, scores) = score_against_model(&records, &model, &tool)?;
    let mut out = String::new();
    out.push_str(&format!("# schema_hash={}\n", model.schema_hash));
    out.push_str(&format!("# stage={}\n", model.stage));
    out.push_str("id,probability\n");
    for (r, p) in records.iter().zip(&scores) {
        out.push_str(&format!("{},{p}\n", r.id));
    }
    fs::write(cfg.out()?, out)?;
    Ok(format!("scored {} records", records.len()))
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<String, PipelineError> {
    let params = SynthParams {
        n_prs: cfg.n_prs,
        seed: cfg.seed,
        ..SynthParams::default()
    };
    let records = generate_corpus(&params)?;
    write_corpus_file(&records, cfg.out()?)?;
    Ok(format!(
        "generated {} synthetic records (seed {})",
        records.len(),
        cfg.seed
    ))
}

pub fn cmd_report(cfg: &RunConfig) -> Result<String, PipelineError> {
    let input = cfg.input()?;
    if !input.exists() {
        return Err(PipelineError::MissingInput(input.to_path_buf()));
    }
    let report = EvalReport::load(input).map_err(|e| PipelineError::Malformed(e.to_string()))?;
    report.validate()?;
    let out = cfg.out()?;
    report.save(out)?;
    Ok(format!("regenerated report tables in {}", out.display()))
}

pub fn cmd_triage(cfg: &RunConfig) -> Result<String, PipelineError> {
    let records = load_corpus(cfg.input()?)?;
    let model = load_model(cfg.model()?)?;
    let tool = cfg.tool_config()?;
    let (_, scores) = score_against_model(&records, &model, &tool)?;
    let policy = TriagePolicy {
        budget: cfg.budget,
        timeout_days: cfg.timeout_days,
        ..TriagePolicy::default()
    };
    let batch: Vec<TriageInput> = records
        .iter()
        .zip(&scores)
        .map(|(r, &s)| TriageInput::from_record(r, s))
        .collect();
    let decisions = batch_gate(&batch, &policy)?;

    let out_dir = cfg.out()?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("triage.csv"), decisions_to_csv(&decisions))?;
    let jsonl =
        decisions_to_jsonl(&decisions).map_err(|e| PipelineError::Internal(e.to_string()))?;
    fs::write(out_dir.join("triage.jsonl"), jsonl)?;

    // "now" is the corpus horizon, not the wall clock, so reruns are stable
    let now = corpus_horizon(&records);
    let sweep = timeout_sweep(&records, now, &policy);
    let mut timeouts = String::from("id,days_stale,expired\n");
    for t in &sweep {
        timeouts.push_str(&format!(
            "{},{},{}\n",
            t.id,
            t.days_stale,
            u8::from(t.expired)
        ));
    }
    fs::write(out_dir.join("timeouts.csv"), timeouts)?;

    let flagged = decisions
        .iter()
        .filter(|d| d.reasons.contains(&TriageReason::BudgetRank))
        .count();
    Ok(format!(
        "triaged {} records: {flagged} budget-ranked, {} swept open",
        decisions.len(),
        sweep.len()
    ))
}

fn corpus_horizon(records: &[PullRequestRecord]) -> i64 {
    records
        .iter()
        .flat_map(|r| {
            [
                Some(r.created_at),
                r.merged_at,
                r.closed_at,
                r.commits.iter().map(|c| c.timestamp).max(),
                r.timeline.iter().map(|e| e.timestamp).max(),
            ]
        })
        .flatten()
        .max()
        .unwrap_or(0)
}

fn subset_records(records: &[PullRequestRecord], idx: &[usize]) -> Vec<PullRequestRecord> {
    idx.iter().map(|&i| records[i].clone()).collect()
}

fn subset_matrix(matrix: &FeatureMatrix, idx: &[usize]) -> FeatureMatrix {
    FeatureMatrix {
        ids: idx.iter().map(|&i| matrix.ids[i].clone()).collect(),
        names: matrix.names.clone(),
        schema_hash: matrix.schema_hash.clone(),
        stage: matrix.stage,
        rows: idx.iter().map(|&i| matrix.rows[i].clone()).collect(),
    }
}

struct TrainedBundle {
    model: GbdtModel,
    size_only: crate::learner::linear::LinearModel,
    path_tokens: Option<PathTokenModel>,
    threshold: u64,
}

fn train_bundle(
    train_records: &[PullRequestRecord],
    train_matrix: &FeatureMatrix,
    label_config: &LabelConfig,
    seed: u64,
) -> Result<TrainedBundle, PipelineError> {
    let efforts: Vec<u64> = train_records
        .iter()
        .map(|r| crate::labeling::effort_score(r, label_config.effort_variant))
        .collect();
    let threshold = high_cost_threshold(&efforts, label_config.high_cost_quantile)?;
    let labels = build_labels_with_threshold(train_records, label_config, threshold);

    let params = GbdtParams {
        seed: derive_seed(seed, "gbdt"),
        ..GbdtParams::default()
    };
    let model = train_gbdt(train_matrix, &labels.high_cost, &params)?;

    let log_sizes = train_matrix
        .column("log1p_total_changes")
        .ok_or_else(|| PipelineError::Internal("log1p_total_changes column missing".into()))?;
    let size_only = train_size_only(&log_sizes, &labels.high_cost)?;

    let path_tokens = match train_path_token_baseline(train_records, &labels.high_cost) {
        Ok(m) => Some(m),
        Err(LearnerError::EmptyVocabulary) => None,
        Err(e) => return Err(e.into()),
    };

    Ok(TrainedBundle {
        model,
        size_only,
        path_tokens,
        threshold,
    })
}

/// Bootstrap rows for one (split, model, score set); metrics whose point
/// estimate or interval cannot be computed (single-class slices, mostly
/// degenerate resamples) are omitted rather than faked.
fn metric_rows(
    split: &str,
    model: &str,
    scores: &[f64],
    labels: &[bool],
    ids: &[String],
    budget: f64,
    seed: u64,
) -> Vec<MetricsRow> {
    let mut rows = Vec::new();
    let mut push = |metric: &str, ci: Result<ConfidenceInterval, EvalError>| {
        if let Ok(ci) = ci {
            rows.push(MetricsRow {
                split: split.to_string(),
                model: model.to_string(),
                metric: metric.to_string(),
                ci,
            });
        }
    };
    let ci_seed = |metric: &str| derive_seed(seed, &format!("ci-{split}-{model}-{metric}"));

    push(
        "roc_auc",
        bootstrap_ci(roc_auc, scores, labels, 1000, 0.05, ci_seed("roc_auc")),
    );
    push(
        "pr_auc",
        bootstrap_ci(pr_auc, scores, labels, 1000, 0.05, ci_seed("pr_auc")),
    );
    // resampling breaks id alignment, so ties fall back to position order
    let index_ids = |n: usize| -> Vec<String> { (0..n).map(|i| format!("{i:06}")).collect() };
    let precision = |s: &[f64], l: &[bool]| {
        budget_metrics(s, l, &index_ids(s.len()), budget).map(|m| m.precision)
    };
    let recall =
        |s: &[f64], l: &[bool]| budget_metrics(s, l, &index_ids(s.len()), budget).map(|m| m.recall);
    let _ = ids;
    push(
        "precision_at_budget",
        bootstrap_ci(
            precision,
            scores,
            labels,
            1000,
            0.05,
            ci_seed("precision_at_budget"),
        ),
    );
    push(
        "recall_at_budget",
        bootstrap_ci(
            recall,
            scores,
            labels,
            1000,
            0.05,
            ci_seed("recall_at_budget"),
        ),
    );
    rows
}

fn feedback_close_days(records: &[PullRequestRecord]) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.state == PrState::Rejected)
        .filter_map(|r| {
            let feedback = r.last_human_event()?;
            let closed = r.closed_at?;
            Some(((closed - feedback).max(0)) as f64 / SECONDS_PER_DAY as f64)
        })
        .collect()
}

/// Out-of-split predictions from the first evaluated kind; the curve and
/// importance sections of the report are computed from these.
struct SplitArtifacts {
    scores: Vec<f64>,
    labels: Vec<bool>,
    ids: Vec<String>,
    idx: Vec<usize>,
    model: GbdtModel,
}

fn eval_one_split(
    kind: SplitKind,
    records: &[PullRequestRecord],
    matrix: &FeatureMatrix,
    label_config: &LabelConfig,
    cfg: &RunConfig,
) -> Result<(Vec<MetricsRow>, SplitArtifacts), PipelineError> {
    let mut metrics = Vec::new();
    if kind == SplitKind::LeaveOneAgentOut {
        let folds = loao_folds(records)?;
        let n = records.len();
        let mut pooled_scores = vec![f64::NAN; n];
        let mut pooled_labels = vec![false; n];
        let mut last_model = None;
        for fold in &folds {
            let train_records = subset_records(records, &fold.train);
            let train_matrix = subset_matrix(matrix, &fold.train);
            let bundle = train_bundle(&train_records, &train_matrix, label_config, cfg.seed)?;
            let test_records = subset_records(records, &fold.test);
            let test_matrix = subset_matrix(matrix, &fold.test);
            let fold_labels =
                build_labels_with_threshold(&test_records, label_config, bundle.threshold);
            let scores = bundle.model.predict_proba(&test_matrix)?;
            for (k, &i) in fold.test.iter().enumerate() {
                pooled_scores[i] = scores[k];
                pooled_labels[i] = fold_labels.high_cost[k];
            }
            metrics.extend(metric_rows(
                &format!("loao:{}", fold.held_out_agent),
                "full",
                &scores,
                &fold_labels.high_cost,
                &test_matrix.ids,
                cfg.budget,
                cfg.seed,
            ));
            last_model = Some(bundle.model);
        }
        metrics.extend(metric_rows(
            "loao:pooled",
            "full",
            &pooled_scores,
            &pooled_labels,
            &matrix.ids,
            cfg.budget,
            cfg.seed,
        ));
        let artifacts = SplitArtifacts {
            scores: pooled_scores,
            labels: pooled_labels,
            ids: matrix.ids.clone(),
            idx: (0..n).collect(),
            model: last_model.expect("at least two folds"),
        };
        return Ok((metrics, artifacts));
    }

    let spec = SplitSpec {
        kind,
        train_fraction: 0.8,
        seed: derive_seed(cfg.seed, "split"),
    };
    let (train_idx, test_idx) = spec.apply(records)?;
    let train_records = subset_records(records, &train_idx);
    let train_matrix = subset_matrix(matrix, &train_idx);
    let bundle = train_bundle(&train_records, &train_matrix, label_config, cfg.seed)?;

    let test_records = subset_records(records, &test_idx);
    let test_matrix = subset_matrix(matrix, &test_idx);
    let labels = build_labels_with_threshold(&test_records, label_config, bundle.threshold);
    let split_name = kind.to_string();

    let full_scores = bundle.model.predict_proba(&test_matrix)?;
    metrics.extend(metric_rows(
        &split_name,
        "full",
        &full_scores,
        &labels.high_cost,
        &test_matrix.ids,
        cfg.budget,
        cfg.seed,
    ));

    let size_rows: Vec<Vec<f64>> = test_matrix
        .column("log1p_total_changes")
        .ok_or_else(|| PipelineError::Internal("log1p_total_changes column missing".into()))?
        .into_iter()
        .map(|v| vec![v])
        .collect();
    let size_scores = bundle.size_only.predict_proba(&size_rows);
    metrics.extend(metric_rows(
        &split_name,
        "size_only",
        &size_scores,
        &labels.high_cost,
        &test_matrix.ids,
        cfg.budget,
        cfg.seed,
    ));

    if let Some(path_model) = &bundle.path_tokens {
        let path_scores = path_model.predict_proba(&test_records);
        metrics.extend(metric_rows(
            &split_name,
            "path_tokens",
            &path_scores,
            &labels.high_cost,
            &test_matrix.ids,
            cfg.budget,
            cfg.seed,
        ));
    }

    let artifacts = SplitArtifacts {
        scores: full_scores,
        labels: labels.high_cost,
        ids: test_matrix.ids,
        idx: test_idx,
        model: bundle.model,
    };
    Ok((metrics, artifacts))
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<String, PipelineError> {
    let records = load_corpus(cfg.input()?)?;
    let tool = cfg.tool_config()?;
    let schema = FeatureSchema::for_stage(&tool, cfg.stage);
    let matrix = FeatureMatrix::extract(&records, &schema);
    let label_config = cfg.label_config();
    let out_dir = cfg.out()?;

    let selected: Vec<SplitKind> = match cfg.split {
        Some(kind) => vec![kind],
        None => vec![
            SplitKind::Temporal,
            SplitKind::RepoDisjoint,
            SplitKind::LeaveOneAgentOut,
        ],
    };

    let mut metrics = Vec::new();
    let mut primary: Option<SplitArtifacts> = None;
    let mut evaluated = Vec::new();
    for &kind in &selected {
        match eval_one_split(kind, &records, &matrix, &label_config, cfg) {
            Ok((rows, artifacts)) => {
                metrics.extend(rows);
                evaluated.push(kind.to_string());
                if primary.is_none() {
                    primary = Some(artifacts);
                }
            }
            // a corpus with one repo or one agent cannot support every
            // split kind; skip those only when running the full sweep
            Err(PipelineError::Usage(_)) if cfg.split.is_none() && primary.is_some() => {}
            Err(e) => return Err(e),
        }
    }
    let primary =
        primary.ok_or_else(|| PipelineError::Internal("no split produced predictions".into()))?;
    let SplitArtifacts {
        scores: test_scores,
        labels: test_labels,
        ids: test_ids,
        idx: test_idx,
        model: headline_model,
    } = primary;

    let roc_points = roc_curve(&test_scores, &test_labels).unwrap_or_default();
    let calibration = calibration_curve(&test_scores, &test_labels, 10)?;
    let coverage = topk_coverage(&test_scores, &test_labels, &test_ids)?;

    let test_records = subset_records(&records, &test_idx);
    let strata = size_quartile_strata(&test_records)?;
    let mut quartiles = Vec::new();
    for s in 0..4usize {
        let members: Vec<usize> = (0..test_records.len())
            .filter(|&i| strata.assignment[i] == s)
            .collect();
        let scores: Vec<f64> = members.iter().map(|&i| test_scores[i]).collect();
        let labels: Vec<bool> = members.iter().map(|&i| test_labels[i]).collect();
        quartiles.push(QuartileAuc {
            stratum: format!("q{}", s + 1),
            upper_bound: (s < 3).then(|| strata.boundaries[s]),
            n: members.len(),
            auc: roc_auc(&scores, &labels).ok(),
        });
    }

    let test_matrix = subset_matrix(&matrix, &test_idx);
    let importance = permutation_importance(
        &headline_model,
        &test_matrix,
        &test_labels,
        5,
        derive_seed(cfg.seed, "importance"),
    )?;

    let durations = feedback_close_days(&records);
    let ecdf_days = if durations.is_empty() {
        Vec::new()
    } else {
        ecdf(&durations)?
    };

    let report = EvalReport {
        seed: cfg.seed,
        stage: cfg.stage.to_string(),
        schema_hash: matrix.schema_hash.clone(),
        budget: cfg.budget,
        metrics,
        roc_points,
        calibration,
        topk_coverage: coverage,
        quartile_auc: quartiles,
        importance,
        ecdf_days,
    };
    report.validate()?;
    report.save(out_dir)?;

    let headline = report
        .metrics
        .iter()
        .find(|r| r.model == "full" && r.metric == "roc_auc")
        .map_or(f64::NAN, |r| r.ci.point);
    Ok(format!(
        "evaluated splits [{}]: full-model ROC AUC {:.4}, report in {}",
        evaluated.join(", "),
        headline,
        out_dir.display()
    ))
}

/// synth -> featurize -> label -> train -> evaluate -> triage, chained
/// through the files each stage writes so the wire formats get exercised.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<String, PipelineError> {
    let out_dir = cfg.out()?.to_path_buf();
    fs::create_dir_all(&out_dir)?;
    let corpus = out_dir.join("corpus.jsonl");
    let features = out_dir.join(format!("features_{}.csv", cfg.stage));
    let labels = out_dir.join("labels.csv");
    let model = out_dir.join("model.txt");
    let eval_dir = out_dir.join("eval");

    let mut step = cfg.clone();
    step.out = Some(corpus.clone());
    cmd_synth(&step)?;

    step.input = Some(corpus.clone());
    step.out = Some(features);
    cmd_featurize(&step)?;

    step.out = Some(labels);
    cmd_label(&step)?;

    step.out = Some(model.clone());
    cmd_train(&step)?;

    step.out = Some(eval_dir);
    cmd_evaluate(&step)?;

    step.model_path = Some(model);
    step.out = Some(out_dir.clone());
    cmd_triage(&step)?;

    Ok(format!("pipeline artifacts in {}", out_dir.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth_file(dir: &Path, n: usize, seed: u64) -> PathBuf {
        let path = dir.join("corpus.jsonl");
        let cfg = RunConfig {
            out: Some(path.clone()),
            seed,
            n_prs: n,
            ..RunConfig::default()
        };
        cmd_synth(&cfg).unwrap();
        path
    }

    #[test]
    fn missing_input_names_the_path_with_exit_2() {
        let cfg = RunConfig {
            input: Some(PathBuf::from("/nonexistent/corpus.jsonl")),
            out: Some(PathBuf::from("/tmp/out.csv")),
            ..RunConfig::default()
        };
        let err = cmd_featurize(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_MISSING_INPUT);
        assert!(err.to_string().contains("/nonexistent/corpus.jsonl"));
    }

    #[test]
    fn ingest_is_canonical_and_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path(), 120, 3);
        let out1 = dir.path().join("norm1.jsonl");
        let out2 = dir.path().join("norm2.jsonl");
        let mut cfg = RunConfig {
            input: Some(input.clone()),
            out: Some(out1.clone()),
            ..RunConfig::default()
        };
        cmd_ingest(&cfg).unwrap();
        cfg.out = Some(out2.clone());
        cmd_ingest(&cfg).unwrap();
        let a = fs::read(&out1).unwrap();
        let b = fs::read(&out2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, fs::read(&input).unwrap(), "synth already canonical");
    }

    #[test]
    fn featurize_output_reloads_to_the_same_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path(), 150, 5);
        let out = dir.path().join("features.csv");
        let cfg = RunConfig {
            input: Some(input),
            out: Some(out.clone()),
            ..RunConfig::default()
        };
        cmd_featurize(&cfg).unwrap();
        let parsed = FeatureMatrix::from_csv(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(parsed.n_rows(), 150);
        assert_eq!(parsed.stage, Stage::T0);
    }

    #[test]
    fn train_then_score_row_count_matches_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path(), 200, 9);
        let model_path = dir.path().join("model.txt");
        let score_path = dir.path().join("scores.csv");
        let mut cfg = RunConfig {
            input: Some(input),
            out: Some(model_path.clone()),
            ..RunConfig::default()
        };
        cmd_train(&cfg).unwrap();
        cfg.model_path = Some(model_path);
        cfg.out = Some(score_path.clone());
        cmd_score(&cfg).unwrap();
        let text = fs::read_to_string(&score_path).unwrap();
        let data_rows = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("id,"))
            .count();
        assert_eq!(data_rows, 200);
    }

    #[test]
    fn tampered_model_hash_exits_with_code_3() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path(), 150, 2);
        let model_path = dir.path().join("model.txt");
        let mut cfg = RunConfig {
            input: Some(input),
            out: Some(model_path.clone()),
            ..RunConfig::default()
        };
        cmd_train(&cfg).unwrap();
        let tampered = fs::read_to_string(&model_path)
            .unwrap()
            .lines()
            .map(|l| {
                if l.starts_with("schema_hash: ") {
                    "schema_hash: 00000000000000000000000000000000".to_string()
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        fs::write(&model_path, tampered).unwrap();
        cfg.model_path = Some(model_path);
        cfg.out = Some(dir.path().join("scores.csv"));
        let err = cmd_score(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_SCHEMA_MISMATCH);
    }

    #[test]
    fn evaluate_writes_a_valid_report() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path(), 400, 11);
        let eval_dir = dir.path().join("eval");
        let cfg = RunConfig {
            input: Some(input),
            out: Some(eval_dir.clone()),
            ..RunConfig::default()
        };
        cmd_evaluate(&cfg).unwrap();
        let report = EvalReport::load(&eval_dir).unwrap();
        report.validate().unwrap();
        assert!(report
            .metrics
            .iter()
            .any(|r| r.split == "temporal" && r.model == "full" && r.metric == "roc_auc"));
        assert!(report.metrics.iter().any(|r| r.model == "size_only"));
        assert_eq!(report.topk_coverage.len(), 100);
        assert_eq!(report.quartile_auc.len(), 4);
        assert!(!report.importance.is_empty());
    }

    #[test]
    fn evaluate_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path(), 300, 13);
        for pass in ["a", "b"] {
            let cfg = RunConfig {
                input: Some(input.clone()),
                out: Some(dir.path().join(pass)),
                ..RunConfig::default()
            };
            cmd_evaluate(&cfg).unwrap();
        }
        for name in ["report.json", "metrics.csv", "importance.csv"] {
            let a = fs::read(dir.path().join("a").join(name)).unwrap();
            let b = fs::read(dir.path().join("b").join(name)).unwrap();
            assert_eq!(a, b, "{name} differs across reruns");
        }
    }

    #[test]
    fn loao_evaluate_reports_per_agent_rows() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path(), 600, 17);
        let cfg = RunConfig {
            input: Some(input),
            out: Some(dir.path().join("eval")),
            split: Some(SplitKind::LeaveOneAgentOut),
            ..RunConfig::default()
        };
        cmd_evaluate(&cfg).unwrap();
        let report = EvalReport::load(&dir.path().join("eval")).unwrap();
        let loao_rows: Vec<&MetricsRow> = report
            .metrics
            .iter()
            .filter(|r| r.split.starts_with("loao:"))
            .collect();
        assert!(loao_rows.iter().any(|r| r.split == "loao:codex"));
        assert!(loao_rows.iter().any(|r| r.split == "loao:pooled"));
    }

    #[test]
    fn triage_flags_exact_budget_and_sweeps() {
        let dir = tempfile::tempdir().unwrap();
        let input = synth_file(dir.path(), 250, 19);
        let model_path = dir.path().join("model.txt");
        let mut cfg = RunConfig {
            input: Some(input),
            out: Some(model_path.clone()),
            ..RunConfig::default()
        };
        cmd_train(&cfg).unwrap();
        cfg.model_path = Some(model_path);
        cfg.out = Some(dir.path().to_path_buf());
        cmd_triage(&cfg).unwrap();
        let csv = fs::read_to_string(dir.path().join("triage.csv")).unwrap();
        let flagged = csv.lines().filter(|l| l.contains("budget_rank")).count();
        assert_eq!(flagged, 50, "ceil(0.2 * 250)");
        assert!(dir.path().join("timeouts.csv").exists());
        assert!(dir.path().join("triage.jsonl").exists());
    }

    #[test]
    fn full_pipeline_produces_all_artifacts_and_reruns_identically() {
        let dir = tempfile::tempdir().unwrap();
        let run = |name: &str| {
            let out = dir.path().join(name);
            let cfg = RunConfig {
                out: Some(out.clone()),
                n_prs: 150,
                seed: 23,
                ..RunConfig::default()
            };
            cmd_pipeline(&cfg).unwrap();
            out
        };
        let a = run("a");
        let b = run("b");
        for name in [
            "corpus.jsonl",
            "features_t0.csv",
            "labels.csv",
            "model.txt",
            "triage.csv",
            "timeouts.csv",
        ] {
            let x = fs::read(a.join(name)).unwrap();
            let y = fs::read(b.join(name)).unwrap();
            assert!(!x.is_empty());
            assert_eq!(x, y, "{name} differs across reruns");
        }
        assert!(a.join("eval").join("metrics.csv").exists());
        let x = fs::read(a.join("eval").join("report.json")).unwrap();
        let y = fs::read(b.join("eval").join("report.json")).unwrap();
        assert_eq!(x, y);
    }
}
