//! Gate a batch of fresh PRs under a 20% review budget.

use std::collections::BTreeMap;

use prbreaker::config::ToolConfig;
use prbreaker::derive_seed;
use prbreaker::features::{FeatureMatrix, FeatureSchema};
use prbreaker::labeling::{build_labels, LabelConfig};
use prbreaker::learner::gbdt::{train_gbdt, GbdtParams};
use prbreaker::synth::{generate_corpus, SynthParams};
use prbreaker::triage::{batch_gate, TriageInput, TriagePolicy};

fn main() -> anyhow::Result<()> {
    let records = generate_corpus(&SynthParams {
        n_prs: 1_000,
        seed: 17,
        ..SynthParams::default()
    })?;

    let schema = FeatureSchema::t0(&ToolConfig::default());
    let matrix = FeatureMatrix::extract(&records, &schema);
    let labels = build_labels(&records, &LabelConfig::default())?;
    let model = train_gbdt(
        &matrix,
        &labels.high_cost,
        &GbdtParams {
            seed: derive_seed(17, "gbdt"),
            ..GbdtParams::default()
        },
    )?;
    let scores = model.predict_proba(&matrix)?;

    let batch: Vec<TriageInput> = records
        .iter()
        .zip(&scores)
        .map(|(r, &s)| TriageInput::from_record(r, s))
        .collect();
    let policy = TriagePolicy::default();
    let decisions = batch_gate(&batch, &policy)?;

    let mut by_action: BTreeMap<String, usize> = BTreeMap::new();
    for d in &decisions {
        *by_action.entry(d.action.to_string()).or_default() += 1;
    }
    println!("actions under budget {:.0}%:", policy.budget * 100.0);
    for (action, count) in &by_action {
        println!("  {action:<16} {count}");
    }

    println!("\nsample decisions:");
    for d in decisions.iter().filter(|d| d.reasons.len() > 1).take(4) {
        let reasons: Vec<String> = d.reasons.iter().map(ToString::to_string).collect();
        println!(
            "  {:<12} {:<16} {}",
            d.id,
            d.action.to_string(),
            reasons.join("+")
        );
    }
    Ok(())
}
