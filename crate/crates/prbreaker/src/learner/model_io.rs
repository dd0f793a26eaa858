//! Versioned text serialization for trained GBDT models.
//!
//! Floats are written with Rust's shortest-roundtrip `Display`, so
//! parse(write(model)) reproduces every bit and write(parse(text))
//! reproduces every byte. The header pins schema hash, stage, params, and
//! training prevalence; tree nodes reference features by name.

use super::gbdt::{GbdtModel, GbdtParams, Node, Tree};
use super::LearnerError;
use crate::features::Stage;
use std::collections::HashMap;
use std::fmt::Write as _;

pub const MODEL_MAGIC: &str = "prbreaker-model v1";

pub fn model_to_string(model: &GbdtModel) -> String {
    let mut out = String::new();
    let p = &model.params;
    writeln!(out, "{MODEL_MAGIC}").unwrap();
    writeln!(out, "kind: gbdt").unwrap();
    writeln!(out, "schema_hash: {}", model.schema_hash).unwrap();
    writeln!(out, "stage: {}", model.stage).unwrap();
    writeln!(out, "prevalence: {}", model.prevalence).unwrap();
    writeln!(out, "base_score: {}", model.base_score).unwrap();
    writeln!(
        out,
        "params: n_trees={} learning_rate={} max_depth={} min_samples_leaf={} \
         l2_leaf_penalty={} n_histogram_bins={} subsample_fraction={} seed={}",
        p.n_trees,
        p.learning_rate,
        p.max_depth,
        p.min_samples_leaf,
        p.l2_leaf_penalty,
        p.n_histogram_bins,
        p.subsample_fraction,
        p.seed
    )
    .unwrap();
    writeln!(out, "features: {}", model.feature_names.len()).unwrap();
    for (i, name) in model.feature_names.iter().enumerate() {
        writeln!(out, "feature {i} {name}").unwrap();
    }
    writeln!(out, "trees: {}", model.trees.len()).unwrap();
    for (t, tree) in model.trees.iter().enumerate() {
        writeln!(out, "tree {t} nodes: {}", tree.nodes.len()).unwrap();
        for (i, node) in tree.nodes.iter().enumerate() {
            match node {
                Node::Leaf { value } => writeln!(out, "node {i} leaf value={value}").unwrap(),
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => writeln!(
                    out,
                    "node {i} split feature={} threshold={} default={} left={} right={}",
                    model.feature_names[*feature],
                    threshold,
                    if *default_left { "left" } else { "right" },
                    left,
                    right
                )
                .unwrap(),
            }
        }
    }
    writeln!(out, "end").unwrap();
    out
}

struct Parser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), LearnerError> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| LearnerError::ModelFormat("unexpected end of file".to_string()))
    }

    fn expect_prefix(&mut self, prefix: &str) -> Result<&'a str, LearnerError> {
        let (no, line) = self.next()?;
        line.strip_prefix(prefix)
            .ok_or_else(|| LearnerError::ModelFormat(format!("line {no}: expected {prefix:?}")))
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, LearnerError> {
    s.parse::<T>()
        .map_err(|_| LearnerError::ModelFormat(format!("cannot parse {what} from {s:?}")))
}

fn field<'s>(pairs: &HashMap<&str, &'s str>, key: &str) -> Result<&'s str, LearnerError> {
    pairs
        .get(key)
        .copied()
        .ok_or_else(|| LearnerError::ModelFormat(format!("missing field {key}")))
}

fn split_pairs(s: &str) -> HashMap<&str, &str> {
    s.split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .collect()
}

pub fn model_from_str(text: &str) -> Result<GbdtModel, LearnerError> {
    let mut p = Parser {
        lines: text.lines().enumerate(),
    };
    let (_, magic) = p.next()?;
    if magic != MODEL_MAGIC {
        return Err(LearnerError::ModelFormat(format!(
            "bad magic {magic:?}, expected {MODEL_MAGIC:?}"
        )));
    }
    let kind = p.expect_prefix("kind: ")?;
    if kind != "gbdt" {
        return Err(LearnerError::ModelFormat(format!(
            "unsupported model kind {kind:?}"
        )));
    }
    let schema_hash = p.expect_prefix("schema_hash: ")?.to_string();
    let stage: Stage = p
        .expect_prefix("stage: ")?
        .parse()
        .map_err(LearnerError::ModelFormat)?;
    let prevalence: f64 = parse_num(p.expect_prefix("prevalence: ")?, "prevalence")?;
    let base_score: f64 = parse_num(p.expect_prefix("base_score: ")?, "base_score")?;

    let raw_params = split_pairs(p.expect_prefix("params: ")?);
    let params = GbdtParams {
        n_trees: parse_num(field(&raw_params, "n_trees")?, "n_trees")?,
        learning_rate: parse_num(field(&raw_params, "learning_rate")?, "learning_rate")?,
        max_depth: parse_num(field(&raw_params, "max_depth")?, "max_depth")?,
        min_samples_leaf: parse_num(field(&raw_params, "min_samples_leaf")?, "min_samples_leaf")?,
        l2_leaf_penalty: parse_num(field(&raw_params, "l2_leaf_penalty")?, "l2_leaf_penalty")?,
        n_histogram_bins: parse_num(field(&raw_params, "n_histogram_bins")?, "n_histogram_bins")?,
        subsample_fraction: parse_num(
            field(&raw_params, "subsample_fraction")?,
            "subsample_fraction",
        )?,
        seed: parse_num(field(&raw_params, "seed")?, "seed")?,
    };

    let n_features: usize = parse_num(p.expect_prefix("features: ")?, "feature count")?;
    let mut feature_names = Vec::with_capacity(n_features);
    for i in 0..n_features {
        let rest = p.expect_prefix("feature ")?;
        let (idx, name) = rest
            .split_once(' ')
            .ok_or_else(|| LearnerError::ModelFormat(format!("bad feature line {rest:?}")))?;
        if parse_num::<usize>(idx, "feature index")? != i {
            return Err(LearnerError::ModelFormat(format!(
                "feature index {idx} out of order"
            )));
        }
        feature_names.push(name.to_string());
    }
    let feature_index: HashMap<&str, usize> = feature_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();

    let n_trees: usize = parse_num(p.expect_prefix("trees: ")?, "tree count")?;
    let mut trees = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let rest = p.expect_prefix("tree ")?;
        let (idx, nodes_part) = rest
            .split_once(" nodes: ")
            .ok_or_else(|| LearnerError::ModelFormat(format!("bad tree line {rest:?}")))?;
        if parse_num::<usize>(idx, "tree index")? != t {
            return Err(LearnerError::ModelFormat(format!(
                "tree index {idx} out of order"
            )));
        }
        let n_nodes: usize = parse_num(nodes_part, "node count")?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let (no, line) = p.next()?;
            let rest = line.strip_prefix("node ").ok_or_else(|| {
                LearnerError::ModelFormat(format!("line {no}: expected a node line"))
            })?;
            let (idx, spec) = rest
                .split_once(' ')
                .ok_or_else(|| LearnerError::ModelFormat(format!("line {no}: bad node line")))?;
            if parse_num::<usize>(idx, "node index")? != i {
                return Err(LearnerError::ModelFormat(format!(
                    "node index {idx} out of order"
                )));
            }
            let node = if let Some(leaf) = spec.strip_prefix("leaf ") {
                let pairs = split_pairs(leaf);
                Node::Leaf {
                    value: parse_num(field(&pairs, "value")?, "leaf value")?,
                }
            } else if let Some(split) = spec.strip_prefix("split ") {
                let pairs = split_pairs(split);
                let name = field(&pairs, "feature")?;
                let feature = *feature_index.get(name).ok_or_else(|| {
                    LearnerError::ModelFormat(format!("node references unknown feature {name:?}"))
                })?;
                let default_left = match field(&pairs, "default")? {
                    "left" => true,
                    "right" => false,
                    other => {
                        return Err(LearnerError::ModelFormat(format!(
                            "bad default direction {other:?}"
                        )))
                    }
                };
                Node::Split {
                    feature,
                    threshold: parse_num(field(&pairs, "threshold")?, "threshold")?,
                    default_left,
                    left: parse_num(field(&pairs, "left")?, "left child")?,
                    right: parse_num(field(&pairs, "right")?, "right child")?,
                }
            } else {
                return Err(LearnerError::ModelFormat(format!(
                    "line {no}: node is neither leaf nor split"
                )));
            };
            nodes.push(node);
        }
        trees.push(Tree { nodes });
    }
    let (no, terminator) = p.next()?;
    if terminator != "end" {
        return Err(LearnerError::ModelFormat(format!(
            "line {no}: expected end marker"
        )));
    }

    Ok(GbdtModel {
        params,
        base_score,
        prevalence,
        schema_hash,
        stage,
        feature_names,
        trees,
        loss_curve: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::gbdt::train_gbdt;
    use super::*;
    use crate::features::FeatureMatrix;

    fn trained_model() -> GbdtModel {
        let n = 120;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![i as f64, (i % 7) as f64 + 0.25, ((i * 13) % 31) as f64])
            .collect();
        let labels: Vec<bool> = (0..n).map(|i| (i * 13) % 31 > 15).collect();
        let matrix = FeatureMatrix {
            ids: (0..n).map(|i| format!("pr-{i}")).collect(),
            names: vec!["a".into(), "b".into(), "c".into()],
            schema_hash: "cafe".into(),
            stage: Stage::T0,
            rows,
        };
        let params = GbdtParams {
            n_trees: 7,
            min_samples_leaf: 5,
            seed: 3,
            ..GbdtParams::default()
        };
        train_gbdt(&matrix, &labels, &params).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = trained_model();
        let text = model_to_string(&model);
        let parsed = model_from_str(&text).unwrap();
        assert_eq!(model_to_string(&parsed), text);

        let mut original = model.clone();
        original.loss_curve.clear();
        assert_eq!(parsed, original);
    }

    #[test]
    fn adversarial_floats_survive() {
        let mut model = trained_model();
        model.base_score = 0.1 + 0.2;
        model.trees[0].nodes = vec![Node::Leaf {
            value: f64::MIN_POSITIVE,
        }];
        model.trees[1].nodes = vec![Node::Leaf {
            value: -1.000_000_000_000_000_2,
        }];
        let parsed = model_from_str(&model_to_string(&model)).unwrap();
        assert_eq!(parsed.base_score.to_bits(), model.base_score.to_bits());
        let (a, b) = match (&parsed.trees[0].nodes[0], &parsed.trees[1].nodes[0]) {
            (Node::Leaf { value: a }, Node::Leaf { value: b }) => (*a, *b),
            _ => panic!("leaves expected"),
        };
        assert_eq!(a.to_bits(), f64::MIN_POSITIVE.to_bits());
        assert_eq!(b.to_bits(), (-1.000_000_000_000_000_2f64).to_bits());
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(model_from_str("not a model").is_err());
        let model = trained_model();
        let text = model_to_string(&model);
        let truncated = &text[..text.len() / 2];
        assert!(model_from_str(truncated).is_err());
        assert!(
            text.contains("split "),
            "fixture model should contain at least one split"
        );
        let renamed = text
            .replace("feature=a", "feature=zzz")
            .replace("feature=b", "feature=zzz")
            .replace("feature=c", "feature=zzz");
        assert!(model_from_str(&renamed).is_err());
    }
}
