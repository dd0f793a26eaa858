//! One-command run: synth -> featurize -> label -> train -> evaluate -> triage.

use prbreaker::pipeline::{cmd_pipeline, RunConfig};

fn main() -> anyhow::Result<()> {
    let out = std::env::temp_dir().join("prbreaker-pipeline-example");
    let cfg = RunConfig {
        out: Some(out.clone()),
        n_prs: 1_200,
        seed: 7,
        ..RunConfig::default()
    };
    println!("{}", cmd_pipeline(&cfg)?);

    println!("\nartifacts:");
    let mut names: Vec<String> = std::fs::read_dir(&out)?
        .filter_map(Result::ok)
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        println!("  {name}");
    }

    let metrics = std::fs::read_to_string(out.join("eval").join("metrics.csv"))?;
    println!("\nmetrics.csv head:");
    for line in metrics.lines().take(6) {
        println!("  {line}");
    }
    Ok(())
}
