//! Full evaluation run: splits, bootstrap CIs, calibration, importance.

use prbreaker::eval::report::EvalReport;
use prbreaker::pipeline::{cmd_evaluate, cmd_synth, RunConfig};

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("prbreaker-evaluate-example");
    std::fs::create_dir_all(&dir)?;
    let corpus = dir.join("corpus.jsonl");

    let mut cfg = RunConfig {
        out: Some(corpus.clone()),
        n_prs: 1_500,
        seed: 7,
        ..RunConfig::default()
    };
    println!("{}", cmd_synth(&cfg)?);

    let eval_dir = dir.join("eval");
    cfg.input = Some(corpus);
    cfg.out = Some(eval_dir.clone());
    println!("{}", cmd_evaluate(&cfg)?);

    let report = EvalReport::load(&eval_dir)?;
    println!("\nmetric rows:");
    for row in &report.metrics {
        println!(
            "  {:<14} {:<12} {:<20} {:.4} [{:.4}, {:.4}]",
            row.split, row.model, row.metric, row.ci.point, row.ci.low, row.ci.high
        );
    }

    println!("\ntop features by permutation importance:");
    for fi in report.importance.iter().take(5) {
        println!("  {:<28} {:+.4}", fi.feature, fi.mean_auc_drop);
    }

    println!("\nsize-quartile AUC:");
    for q in &report.quartile_auc {
        let auc = q.auc.map_or("n/a".to_string(), |a| format!("{a:.4}"));
        println!("  {:<3} n={:<5} auc={auc}", q.stratum, q.n);
    }

    println!("\nartifacts in {}", eval_dir.display());
    Ok(())
}
