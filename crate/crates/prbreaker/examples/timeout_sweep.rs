//! Expire open PRs whose author went silent after human feedback.

use prbreaker::record::PrState;
use prbreaker::synth::{generate_corpus, SynthParams};
use prbreaker::timefmt::SECONDS_PER_DAY;
use prbreaker::triage::{timeout_sweep, TriagePolicy};

fn main() -> anyhow::Result<()> {
    let records = generate_corpus(&SynthParams {
        n_prs: 3_000,
        seed: 19,
        ..SynthParams::default()
    })?;

    // pretend we run the sweep shortly after the newest PR landed
    let horizon = records.iter().map(|r| r.created_at).max().unwrap_or(0) + 10 * SECONDS_PER_DAY;

    let policy = TriagePolicy::default();
    let statuses = timeout_sweep(&records, horizon, &policy);

    let open = records.iter().filter(|r| r.state == PrState::Open).count();
    let expired = statuses.iter().filter(|s| s.expired).count();
    println!("open PRs                {open}");
    println!("awaiting author action  {}", statuses.len());
    println!("expired (> {} days)     {expired}", policy.timeout_days);

    let mut stalest = statuses.clone();
    stalest.sort_by(|a, b| b.days_stale.total_cmp(&a.days_stale));
    println!("\nstalest:");
    for s in stalest.iter().take(5) {
        println!(
            "  {:<12} {:6.1} days  expired={}",
            s.id, s.days_stale, s.expired
        );
    }
    Ok(())
}
