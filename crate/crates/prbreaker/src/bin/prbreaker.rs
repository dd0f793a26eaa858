//! Thin CLI over [`prbreaker::pipeline`]. All work happens in the library;
//! this file only parses flags and maps errors to exit codes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use prbreaker::eval::splits::SplitKind;
use prbreaker::features::Stage;
use prbreaker::pipeline::{self, PipelineError, RunConfig, EXIT_USAGE};

#[derive(Parser)]
#[command(
    name = "prbreaker",
    version,
    about = "Creation-time triage for agent-authored pull requests"
)]
struct Cli {
    /// Root seed for every random choice in the run
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Worker threads; output bytes do not depend on this
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// TOML config overriding pattern tables and vocabularies
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL corpus and rewrite it in canonical form
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract a feature matrix CSV from a corpus
    Featurize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "t0")]
        stage: Stage,
    },
    /// Compute effort, high-cost, ghosting, and instant-merge labels
    Label {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.80)]
        quantile: f64,
        #[arg(long, default_value_t = 14)]
        timeout_days: u32,
    },
    /// Train the gradient-boosted model on a full corpus
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "t0")]
        stage: Stage,
        #[arg(long, default_value_t = 0.80)]
        quantile: f64,
        #[arg(long, default_value_t = 14)]
        timeout_days: u32,
    },
    /// Train and score under held-out splits, writing a report directory
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "t0")]
        stage: Stage,
        /// temporal, repo, or loao; omit to evaluate all of them
        #[arg(long)]
        split: Option<SplitKind>,
        #[arg(long, default_value_t = 0.20)]
        budget: f64,
        #[arg(long, default_value_t = 0.80)]
        quantile: f64,
        #[arg(long, default_value_t = 14)]
        timeout_days: u32,
    },
    /// Apply a saved model to a corpus, writing id,probability rows
    Score {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gate a batch of PRs and sweep stale ones; writes into a directory
    Triage {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.20)]
        budget: f64,
        #[arg(long, default_value_t = 14)]
        timeout_days: u32,
    },
    /// Generate a synthetic corpus with known ground truth
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Regenerate the CSV tables from a saved report.json directory
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// synth, featurize, label, train, evaluate, and triage in one run
    Pipeline {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value = "t0")]
        stage: Stage,
        #[arg(long)]
        split: Option<SplitKind>,
        #[arg(long, default_value_t = 0.20)]
        budget: f64,
        #[arg(long, default_value_t = 0.80)]
        quantile: f64,
        #[arg(long, default_value_t = 14)]
        timeout_days: u32,
    },
}

fn dispatch(cli: Cli) -> Result<String, PipelineError> {
    let base = RunConfig {
        seed: cli.seed,
        config_path: cli.config,
        ..RunConfig::default()
    };
    match cli.command {
        Command::Ingest { input, out } => pipeline::cmd_ingest(&RunConfig {
            input: Some(input),
            out: Some(out),
            ..base
        }),
        Command::Featurize { input, out, stage } => pipeline::cmd_featurize(&RunConfig {
            input: Some(input),
            out: Some(out),
            stage,
            ..base
        }),
        Command::Label {
            input,
            out,
            quantile,
            timeout_days,
        } => pipeline::cmd_label(&RunConfig {
            input: Some(input),
            out: Some(out),
            quantile,
            timeout_days,
            ..base
        }),
        Command::Train {
            input,
            out,
            stage,
            quantile,
            timeout_days,
        } => pipeline::cmd_train(&RunConfig {
            input: Some(input),
            out: Some(out),
            stage,
            quantile,
            timeout_days,
            ..base
        }),
        Command::Evaluate {
            input,
            out,
            stage,
            split,
            budget,
            quantile,
            timeout_days,
        } => pipeline::cmd_evaluate(&RunConfig {
            input: Some(input),
            out: Some(out),
            stage,
            split,
            budget,
            quantile,
            timeout_days,
            ..base
        }),
        Command::Score { input, model, out } => pipeline::cmd_score(&RunConfig {
            input: Some(input),
            model_path: Some(model),
            out: Some(out),
            ..base
        }),
        Command::Triage {
            input,
            model,
            out,
            budget,
            timeout_days,
        } => pipeline::cmd_triage(&RunConfig {
            input: Some(input),
            model_path: Some(model),
            out: Some(out),
            budget,
            timeout_days,
            ..base
        }),
        Command::Synth { out, n } => pipeline::cmd_synth(&RunConfig {
            out: Some(out),
            n_prs: n,
            ..base
        }),
        Command::Report { input, out } => pipeline::cmd_report(&RunConfig {
            input: Some(input),
            out: Some(out),
            ..base
        }),
        Command::Pipeline {
            out,
            n,
            stage,
            split,
            budget,
            quantile,
            timeout_days,
        } => pipeline::cmd_pipeline(&RunConfig {
            out: Some(out),
            n_prs: n,
            stage,
            split,
            budget,
            quantile,
            timeout_days,
            ..base
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        // ignore the error if a pool already exists; determinism does not
        // depend on the worker count anywhere in the library
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match dispatch(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
