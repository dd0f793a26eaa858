//! Train the boosted model on a planted-signal corpus and score held-out PRs.

use prbreaker::config::ToolConfig;
use prbreaker::derive_seed;
use prbreaker::eval::metrics::roc_auc;
use prbreaker::eval::splits::{SplitKind, SplitSpec};
use prbreaker::features::{FeatureMatrix, FeatureSchema};
use prbreaker::learner::gbdt::{train_gbdt, GbdtParams};
use prbreaker::synth::{planted_signal_corpus, SynthParams};

fn main() -> anyhow::Result<()> {
    let params = SynthParams {
        n_prs: 4_000,
        seed: 5,
        ..SynthParams::default()
    };
    let (records, truth) = planted_signal_corpus(&params, 1.0)?;

    let schema = FeatureSchema::t0(&ToolConfig::default());
    let matrix = FeatureMatrix::extract(&records, &schema);

    let spec = SplitSpec {
        kind: SplitKind::Temporal,
        train_fraction: 0.8,
        seed: 0,
    };
    let (train_idx, test_idx) = spec.apply(&records)?;

    let take_rows = |idx: &[usize]| FeatureMatrix {
        ids: idx.iter().map(|&i| matrix.ids[i].clone()).collect(),
        names: matrix.names.clone(),
        schema_hash: matrix.schema_hash.clone(),
        stage: matrix.stage,
        rows: idx.iter().map(|&i| matrix.rows[i].clone()).collect(),
    };
    let take_labels = |idx: &[usize]| -> Vec<bool> { idx.iter().map(|&i| truth[i]).collect() };

    let gbdt_params = GbdtParams {
        seed: derive_seed(5, "gbdt"),
        ..GbdtParams::default()
    };
    let model = train_gbdt(
        &take_rows(&train_idx),
        &take_labels(&train_idx),
        &gbdt_params,
    )?;

    println!(
        "trained {} trees, base score {:.4}, train prevalence {:.3}",
        model.trees.len(),
        model.base_score,
        model.prevalence
    );
    println!(
        "logistic loss {:.4} -> {:.4} over boosting",
        model.loss_curve.first().unwrap(),
        model.loss_curve.last().unwrap()
    );

    let scores = model.predict_proba(&take_rows(&test_idx))?;
    let auc = roc_auc(&scores, &take_labels(&test_idx))?;
    println!("held-out ROC AUC {auc:.4}");

    let mut ranked: Vec<(usize, f64)> = test_idx.iter().copied().zip(scores).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("\nhighest predicted effort:");
    for (i, p) in ranked.iter().take(5) {
        let r = &records[*i];
        println!(
            "  {:<12} p={:.3}  +{:<5} {:<2} files  plan={}",
            r.id,
            p,
            r.total_additions,
            r.files.len(),
            prbreaker::features::detect_plan(&r.body)
        );
    }
    Ok(())
}
