use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdiff::{ExperimentKind, Manifest};

#[derive(Parser)]
#[command(name = "qdiff", version, about = "Measurement-based quantum diffusion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config with a section for this experiment.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the `seed` key of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: qdiff-out/<subcommand>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo Pauli weights of the forward process against the closed form.
    ForwardVerify(RunArgs),
    /// Simulate a measurement dataset (JSON-lines records, optional decoded series).
    Generate(RunArgs),
    /// Maximum-likelihood initial states for a records file.
    Decode(RunArgs),
    /// Train the reverse control model on decoded trajectories.
    TrainReverse(RunArgs),
    /// Generate with a trained model and track W1 to the source ensemble.
    ReverseEval(RunArgs),
    /// Shadow reconstruction of a known state.
    Shadow(RunArgs),
    /// Local Petz recovery of decohered TFIM ground states.
    PetzTfim(RunArgs),
    /// Fokker-Planck round trip on the Bloch sphere.
    Blochfp(RunArgs),
    /// Rerun the experiment recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(kind: ExperimentKind, args: RunArgs) -> qdiff::Result<(Manifest, PathBuf)> {
    let out = args.out.unwrap_or_else(|| PathBuf::from("qdiff-out").join(kind.name()));
    qdiff::execute_file(kind, &args.config, args.seed, &out).map(|m| (m, out))
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::ForwardVerify(a) => run(ExperimentKind::ForwardVerify, a),
        Command::Generate(a) => run(ExperimentKind::Generate, a),
        Command::Decode(a) => run(ExperimentKind::Decode, a),
        Command::TrainReverse(a) => run(ExperimentKind::TrainReverse, a),
        Command::ReverseEval(a) => run(ExperimentKind::ReverseEval, a),
        Command::Shadow(a) => run(ExperimentKind::Shadow, a),
        Command::PetzTfim(a) => run(ExperimentKind::PetzTfim, a),
        Command::Blochfp(a) => run(ExperimentKind::Blochfp, a),
        Command::Replay { manifest, out } => {
            let out = out.unwrap_or_else(|| PathBuf::from("qdiff-out/replay"));
            qdiff::replay(&manifest, &out).map(|m| (m, out))
        }
    };
    match result {
        Ok((manifest, out)) => {
            for o in &manifest.outputs {
                println!("{}  {}", o.sha256, out.join(&o.path).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
