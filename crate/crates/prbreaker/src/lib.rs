//! Creation-time triage for agent-authored pull requests.
//!
//! `prbreaker` predicts, at the moment a pull request is opened, whether it
//! will consume disproportionate review effort, and turns those predictions
//! into a gated circuit-breaker policy: flag the expensive tail, fast-fail
//! plan-less sprawl, fast-track the low-risk bulk, and expire stale PRs the
//! agent has abandoned.
//!
//! The crate is a library first. Each major capability has a runnable
//! example under `examples/`:
//!
//! ```text
//! cargo run --release -p prbreaker --example synth_corpus
//! cargo run --release -p prbreaker --example feature_extraction
//! cargo run --release -p prbreaker --example labeling_basics
//! cargo run --release -p prbreaker --example train_and_score
//! cargo run --release -p prbreaker --example evaluate_report
//! cargo run --release -p prbreaker --example triage_gate
//! cargo run --release -p prbreaker --example timeout_sweep
//! cargo run --release -p prbreaker --example full_pipeline
//! cargo run --release -p prbreaker --example dump_config
//! ```
//!
//! A thin `prbreaker` binary wraps the same library calls behind
//! subcommands (`synth`, `ingest`, `featurize`, `label`, `train`, `score`,
//! `evaluate`, `triage`, `report`, `pipeline`) for shell pipelines.
//!
//! Pipeline stages:
//!
//! 1. [`ingest`]: load newline-delimited PR corpora, classify authors.
//! 2. [`features`]: deterministic T0 (creation-time) and T1 (pre-review)
//!    feature vectors under a hash-pinned schema.
//! 3. [`labeling`]: effort scores, the High Cost flag, ghosting, and
//!    instant-merge labels.
//! 4. [`learner`]: a histogram gradient-boosted tree classifier plus
//!    size-only and path-token logistic baselines, all bit-deterministic.
//! 5. [`eval`]: splits, rank metrics with bootstrap CIs, calibration,
//!    per-quartile tables, and permutation importance.
//! 6. [`triage`]: the circuit-breaker gate and timeout sweep.
//! 7. [`synth`]: seeded synthetic corpora following the observed
//!    two-regime outcome structure, with planted signal for testing.

pub mod config;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod labeling;
pub mod learner;
pub mod pipeline;
pub mod record;
pub mod synth;
pub mod timefmt;
pub mod triage;

#[doc(hidden)]
pub mod testutil;

pub use record::{
    validate_record, AuthorKind, CiStatus, Commit, EventAuthor, EventKind, FileChange,
    InteractionEvent, PrState, PullRequestRecord,
};

/// Derives a stage-specific RNG seed from the root seed, so that every
/// stochastic stage gets an independent, reproducible stream.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::derive_seed;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(7, "synth"), derive_seed(7, "synth"));
        assert_ne!(derive_seed(7, "synth"), derive_seed(7, "bootstrap"));
        assert_ne!(derive_seed(7, "synth"), derive_seed(8, "synth"));
    }
}
