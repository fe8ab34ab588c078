//! `tactile`: synthesize, check and learn from motion-labeled tactile sweeps.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "tactile", version, about = "Motion-labeled tactile sweep pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment config (TOML, one section per module).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Replace every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output location (meaning depends on the command).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overwrite an existing output.
    #[arg(long, global = true)]
    pub force: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan every sweep and synthesize a dataset into --out.
    Synth(commands::SynthArgs),
    /// Check a dataset's manifest and checksums.
    Verify { root: PathBuf },
    /// Extract feature tensors for every session into --out.
    Features { root: PathBuf },
    /// Train one classifier on the training split; save it to --out.
    Train { root: PathBuf },
    /// Evaluate a saved classifier on the test split.
    Eval {
        root: PathBuf,
        /// Directory written by `train`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Train and evaluate the six modality × motion cells.
    Ablation { root: PathBuf },
    /// Summarize one session.
    Inspect {
        root: PathBuf,
        /// `<clothing_id>/<condition slug>` or manifest index.
        session: String,
        /// Write the plateau spectrogram as a float tensor here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.common.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match cli.command {
        Command::Synth(args) => commands::synth(&cli.common, &args),
        Command::Verify { root } => commands::verify(&root),
        Command::Features { root } => commands::features(&cli.common, &root),
        Command::Train { root } => commands::train(&cli.common, &root),
        Command::Eval { root, model } => commands::eval(&cli.common, &root, &model),
        Command::Ablation { root } => commands::ablation(&cli.common, &root),
        Command::Inspect { root, session, dump } => commands::inspect(&cli.common, &root, &session, dump.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<commands::Refusal>() {
                Some(_) => ExitCode::from(2),
                None => ExitCode::from(1),
            }
        }
    }
}
