//! Corpus partitioning. Every splitter returns index lists into the input
//! slice so callers can subset records, feature matrices, and labels in
//! lockstep without cloning.

use std::collections::{BTreeMap, HashSet};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::eval::EvalError;
use crate::labeling::nearest_rank;
use crate::record::PullRequestRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Temporal,
    RepoDisjoint,
    LeaveOneAgentOut,
    Random,
}

impl std::fmt::Display for SplitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SplitKind::Temporal => "temporal",
            SplitKind::RepoDisjoint => "repo",
            SplitKind::LeaveOneAgentOut => "loao",
            SplitKind::Random => "random",
        };
        f.write_str(s)
    }
}

impl FromStr for SplitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "temporal" => Ok(SplitKind::Temporal),
            "repo" => Ok(SplitKind::RepoDisjoint),
            "loao" => Ok(SplitKind::LeaveOneAgentOut),
            "random" => Ok(SplitKind::Random),
            other => Err(format!(
                "unknown split '{other}', expected temporal|repo|loao|random"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            kind: SplitKind::Temporal,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl SplitSpec {
    /// Single train/test partition. Leave-one-agent-out produces several
    /// folds and goes through [`loao_folds`] instead.
    pub fn apply(
        &self,
        records: &[PullRequestRecord],
    ) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
        match self.kind {
            SplitKind::Temporal => temporal_split(records, self.train_fraction),
            SplitKind::RepoDisjoint => repo_disjoint_split(records, self.train_fraction, self.seed),
            SplitKind::Random => random_split(records, self.train_fraction, self.seed),
            SplitKind::LeaveOneAgentOut => Err(EvalError::BadSplit {
                n: records.len(),
                why: "with a single partition; leave-one-agent-out yields folds".into(),
            }),
        }
    }
}

fn check_fraction(fraction: f64) -> Result<(), EvalError> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(EvalError::BadFraction(fraction))
    }
}

/// Older PRs train, newer test: sort by creation time (ties by id so the
/// order is total), cut at floor(fraction * n), clamped so both sides
/// stay nonempty.
pub fn temporal_split(
    records: &[PullRequestRecord],
    fraction: f64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    check_fraction(fraction)?;
    let n = records.len();
    if n < 2 {
        return Err(EvalError::BadSplit {
            n,
            why: "temporally; at least 2 records are required".into(),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        records[a]
            .created_at
            .cmp(&records[b].created_at)
            .then_with(|| records[a].id.cmp(&records[b].id))
    });
    let cut = ((fraction * n as f64).floor() as usize).clamp(1, n - 1);
    let test = order.split_off(cut);
    Ok((order, test))
}

/// Whole repositories are assigned to one side only. Repos are shuffled
/// by seed, then taken into train until the train PR count first reaches
/// fraction * n; if that swallows every repo the last one moves to test.
pub fn repo_disjoint_split(
    records: &[PullRequestRecord],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    check_fraction(fraction)?;
    let n = records.len();
    let mut by_repo: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_repo.entry(r.repo_id.as_str()).or_default().push(i);
    }
    if by_repo.len() < 2 {
        return Err(EvalError::BadSplit {
            n,
            why: format!(
                "repo-disjointly; {} distinct repo(s), at least 2 are required",
                by_repo.len()
            ),
        });
    }
    let mut repos: Vec<&str> = by_repo.keys().copied().collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    repos.shuffle(&mut rng);

    let target = fraction * n as f64;
    let mut train_repos: Vec<&str> = Vec::new();
    let mut count = 0usize;
    let mut rest = repos.iter();
    for &repo in rest.by_ref() {
        train_repos.push(repo);
        count += by_repo[repo].len();
        if count as f64 >= target {
            break;
        }
    }
    let mut test_repos: Vec<&str> = rest.copied().collect();
    if test_repos.is_empty() {
        // fraction demanded everything; keep the split honest
        test_repos.push(train_repos.pop().expect("at least 2 repos"));
    }

    let train_set: HashSet<&str> = train_repos.into_iter().collect();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if train_set.contains(r.repo_id.as_str()) {
            train.push(i);
        } else {
            test.push(i);
        }
    }
    Ok((train, test))
}

/// Seeded shuffle, first floor(fraction * n) train.
pub fn random_split(
    records: &[PullRequestRecord],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    check_fraction(fraction)?;
    let n = records.len();
    if n < 2 {
        return Err(EvalError::BadSplit {
            n,
            why: "randomly; at least 2 records are required".into(),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let cut = ((fraction * n as f64).floor() as usize).clamp(1, n - 1);
    let test = order.split_off(cut);
    Ok((order, test))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoaoFold {
    pub held_out_agent: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per distinct agent: that agent's PRs test, everything else
/// trains. Folds come back sorted by agent name.
pub fn loao_folds(records: &[PullRequestRecord]) -> Result<Vec<LoaoFold>, EvalError> {
    let mut by_agent: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_agent.entry(r.agent_name.as_str()).or_default().push(i);
    }
    if by_agent.len() < 2 {
        return Err(EvalError::BadSplit {
            n: records.len(),
            why: format!(
                "by agent; {} distinct agent(s), at least 2 are required",
                by_agent.len()
            ),
        });
    }
    Ok(by_agent
        .iter()
        .map(|(&agent, test)| {
            let train = (0..records.len()).filter(|i| !test.contains(i)).collect();
            LoaoFold {
                held_out_agent: agent.to_string(),
                train,
                test: test.clone(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeStrata {
    /// Nearest-rank 25/50/75th percentiles of total change size.
    pub boundaries: [u64; 3],
    /// Stratum 0..=3 per record; stratum s holds sizes in
    /// (boundaries[s-1], boundaries[s]], open-ended above.
    pub assignment: Vec<usize>,
}

pub fn size_quartile_strata(records: &[PullRequestRecord]) -> Result<SizeStrata, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let sizes: Vec<u64> = records.iter().map(|r| r.total_changes()).collect();
    let q = |quantile: f64| nearest_rank(&sizes, quantile).expect("nonempty sizes");
    let boundaries = [q(0.25), q(0.50), q(0.75)];
    let assignment = sizes
        .iter()
        .map(|&s| boundaries.iter().position(|&b| s <= b).unwrap_or(3))
        .collect();
    Ok(SizeStrata {
        boundaries,
        assignment,
    })
}
