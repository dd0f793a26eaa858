//! Generate a seeded synthetic corpus and inspect its outcome structure.

use prbreaker::record::PrState;
use prbreaker::synth::{generate_corpus, SynthParams};

fn main() -> anyhow::Result<()> {
    let params = SynthParams {
        n_prs: 2_000,
        seed: 7,
        ..SynthParams::default()
    };
    let records = generate_corpus(&params)?;

    let instant = records
        .iter()
        .filter(|r| matches!((r.state, r.merged_at), (PrState::Merged, Some(m)) if m - r.created_at < 60))
        .count();
    let merged = records
        .iter()
        .filter(|r| r.state == PrState::Merged)
        .count();
    let open = records.iter().filter(|r| r.state == PrState::Open).count();

    println!("records        {}", records.len());
    println!(
        "instant merges {} ({:.1}%)",
        instant,
        100.0 * instant as f64 / records.len() as f64
    );
    println!("merged total   {merged}");
    println!("still open     {open}");

    let mut sizes: Vec<u64> = records.iter().map(|r| r.total_changes()).collect();
    sizes.sort_unstable();
    println!("median change  {} lines", sizes[sizes.len() / 2]);

    let sample = &records[0];
    println!(
        "\nfirst record: {} by {} ({} files, +{} -{})",
        sample.id,
        sample.agent_name,
        sample.files.len(),
        sample.total_additions,
        sample.total_deletions
    );

    let out = std::env::temp_dir().join("prbreaker-synth-example.jsonl");
    let mut buf = Vec::new();
    prbreaker::ingest::write_corpus(&records, &mut buf)?;
    std::fs::write(&out, buf)?;
    println!("corpus written to {}", out.display());
    Ok(())
}
