//! Effort scores, the frozen High Cost threshold, ghosting, instant merges.

use prbreaker::labeling::{build_labels, label_agreement, GhostingLabel, LabelConfig};
use prbreaker::synth::{generate_corpus, SynthParams};

fn main() -> anyhow::Result<()> {
    let records = generate_corpus(&SynthParams {
        n_prs: 3_000,
        seed: 13,
        ..SynthParams::default()
    })?;

    let config = LabelConfig::default();
    let labels = build_labels(&records, &config)?;

    let positives = labels.high_cost.iter().filter(|&&b| b).count();
    println!(
        "effort threshold (80th pct, strict >)  {}",
        labels.threshold
    );
    println!(
        "high-cost prevalence                   {}/{} ({:.1}%)",
        positives,
        labels.len(),
        100.0 * positives as f64 / labels.len() as f64
    );

    let instant = labels.instant_merge.iter().filter(|&&b| b).count();
    println!("instant merges (<60s)                  {instant}");

    let ghosted = labels
        .ghosting
        .iter()
        .filter(|&&g| g == GhostingLabel::Ghosted)
        .count();
    let engaged = labels
        .ghosting
        .iter()
        .filter(|&&g| g == GhostingLabel::Engaged)
        .count();
    println!("ghosted / engaged                      {ghosted} / {engaged}");

    // the human-only effort variant strips bot chatter before counting
    let human = build_labels(
        &records,
        &LabelConfig {
            effort_variant: prbreaker::labeling::EffortVariant::HumanOnly,
            ..config
        },
    )?;
    let agreement = label_agreement(&labels.high_cost, &human.high_cost)?;
    println!("all-events vs human-only agreement     {agreement:.3}");
    Ok(())
}
