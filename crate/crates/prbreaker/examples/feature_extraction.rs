//! Extract T0 and T1 feature matrices under the hash-pinned schema.

use prbreaker::config::ToolConfig;
use prbreaker::features::{FeatureMatrix, FeatureSchema, Stage};
use prbreaker::synth::{generate_corpus, SynthParams};

fn main() -> anyhow::Result<()> {
    let records = generate_corpus(&SynthParams {
        n_prs: 500,
        seed: 11,
        ..SynthParams::default()
    })?;

    let config = ToolConfig::default();
    for stage in [Stage::T0, Stage::T1] {
        let schema = FeatureSchema::for_stage(&config, stage);
        let matrix = FeatureMatrix::extract(&records, &schema);
        println!(
            "stage {stage}: {} features, schema hash {}",
            matrix.n_features(),
            matrix.schema_hash
        );
    }

    // T0 only uses what exists the moment the PR is opened
    let schema = FeatureSchema::t0(&config);
    let matrix = FeatureMatrix::extract(&records, &schema);
    println!("\n{} feature values:", matrix.ids[0]);
    for (name, value) in matrix.names.iter().zip(&matrix.rows[0]) {
        println!("  {name:<28} {value}");
    }

    let csv = matrix.to_csv();
    let head: Vec<&str> = csv.lines().take(4).collect();
    println!("\ncsv head:");
    for line in &head {
        let shown = if line.len() > 100 { &line[..100] } else { line };
        println!("  {shown}");
    }

    let parsed = FeatureMatrix::from_csv(&csv)?;
    assert_eq!(parsed.rows, matrix.rows);
    println!("\nround-trip through csv is exact");
    Ok(())
}
