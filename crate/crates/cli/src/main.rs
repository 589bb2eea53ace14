//! `gibbsfit`: file-based workflows for maximum-entropy tomography and
//! relevance-hypothesis selection.
//!
//! Exit status: 0 on success, 1 on input errors, 2 when a fit is infeasible
//! or fails to converge.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gibbsfit", version, about = "Maximum-entropy tomography and relevance selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate and reconstruct an ensemble of samples.
    Gen(GenArgs),
    /// Fit a generalized Gibbs state to target expectation values.
    Fit(FitArgs),
    /// Score explicitly listed relevance hypotheses.
    Score(ScoreArgs),
    /// Rank every hypothesis up to a size cap and print the winner.
    Select(SelectArgs),
    /// Print the entropy of a state and its relative entropy to a reference.
    Entropy(EntropyArgs),
    /// Grid posterior over qubit states after measuring X.
    DemoBloch(DemoArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Ensemble description (JSON).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Output directory for the manifest and sample files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Observable set (JSON).
    #[arg(long)]
    observables: PathBuf,
    /// Target expectation values, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    targets: Vec<f64>,
    /// Reference state (JSON); defaults to the maximally mixed state.
    #[arg(long)]
    sigma: Option<PathBuf>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Model file to write; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// Directory written by `gen`.
    #[arg(long)]
    ensemble: PathBuf,
    /// Candidate observables (JSON).
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    sigma: Option<PathBuf>,
    /// Directory for ranking.json and ranking.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    common: EnsembleArgs,
    /// Comma-separated pool labels; repeat for several hypotheses, pass ""
    /// for the empty hypothesis.
    #[arg(long = "hypothesis", required = true)]
    hypotheses: Vec<String>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    common: EnsembleArgs,
    #[arg(long, default_value_t = 3)]
    max_size: usize,
}

#[derive(Debug, Args)]
struct EntropyArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    seed: u64,
    /// full-ball, x-axis or y-axis.
    #[arg(long, default_value = "full-ball")]
    support: String,
    /// Observed mean of X; simulated from --true-x when absent.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "true_x")]
    xbar: Option<f64>,
    /// Bloch x-coordinate of the state to simulate.
    #[arg(long, allow_hyphen_values = true)]
    true_x: Option<f64>,
    #[arg(long, default_value_t = 100)]
    n: u64,
    #[arg(long, default_value_t = gibbsfit::posterior::DEFAULT_PRIOR_WIDTH)]
    prior_width: f64,
    #[arg(long, default_value_t = gibbsfit::posterior::DEFAULT_RESOLUTION)]
    resolution: usize,
    /// measured or sanov.
    #[arg(long, default_value = "measured")]
    likelihood: String,
    /// Posterior CSV to write.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = output::configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Fit(a) => commands::fit(a),
        Command::Score(a) => commands::score(a),
        Command::Select(a) => commands::select(a),
        Command::Entropy(a) => commands::entropy(a),
        Command::DemoBloch(a) => commands::demo_bloch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let solver = e
                .chain()
                .any(|c| c.downcast_ref::<gibbsfit::Error>().is_some_and(gibbsfit::Error::is_solver_failure));
            ExitCode::from(if solver { 2 } else { 1 })
        }
    }
}
