//! `flarecast`: visible footage to flame geometry.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flarecast_core::segmentation::Variant;
use flarecast_core::translation::ReferenceMode;

#[derive(Debug, Parser)]
#[command(name = "flarecast", version, about = "Jet-flame geometry from visible footage")]
struct Cli {
    /// Pipeline configuration (TOML). Flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for every stage that draws random numbers.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory, or output file for commands that write one table.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic paired dataset with analytic ground truth.
    Synth(SynthArgs),
    #[command(subcommand)]
    Ingest(IngestCommand),
    #[command(subcommand)]
    Translate(TranslateCommand),
    #[command(subcommand)]
    Segment(SegmentCommand),
    /// Flame length and area from a directory of masks.
    Characterize(CharacterizeArgs),
    /// Error tables against ground truth, plus mask Hausdorff distances.
    Evaluate(EvaluateArgs),
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Full pipeline: translate, adjust brightness, unpad, segment, characterize, evaluate.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    frames: Option<usize>,
}

/// Frame pairing, canvas padding, augmentation and splitting.
#[derive(Debug, Subcommand)]
enum IngestCommand {
    /// Pair two frame streams by timestamp and place them on the canvas.
    Pair {
        #[arg(long, value_name = "DIR")]
        visible: PathBuf,
        #[arg(long, value_name = "DIR")]
        ir: PathBuf,
        /// Pairing window in seconds.
        #[arg(long, value_name = "S")]
        tolerance: Option<f64>,
        /// JSON file `{"visible": [[x, y], ...], "ir": [[x, y], ...]}`.
        #[arg(long, value_name = "FILE")]
        references: Option<PathBuf>,
        #[arg(long, value_name = "WxH")]
        canvas: Option<String>,
        /// Keep the original frame size.
        #[arg(long, conflicts_with = "canvas")]
        no_pad: bool,
        #[arg(long)]
        experiment: Option<String>,
    },
    /// Copy a manifest onto the canvas.
    Pad {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        #[arg(long, value_name = "WxH")]
        canvas: Option<String>,
    },
    /// Expand every sample into 16 variants.
    Augment {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
    },
    /// Shuffle and split into train/val/test manifests.
    Split {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
    },
}

/// Visible-to-IR translation.
#[derive(Debug, Subcommand)]
enum TranslateCommand {
    Train(TranslateTrainArgs),
    /// Translate visible frames and apply the brightness correction.
    Run {
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Manifest file, or a directory of visible PNGs.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Real IR PNGs matching `--in` by file name.
        #[arg(long, value_name = "DIR")]
        ir: Option<PathBuf>,
        #[arg(long, value_name = "MODE")]
        brightness_ref: Option<ReferenceMode>,
    },
}

#[derive(Debug, Args)]
struct TranslateTrainArgs {
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    /// Validation manifest; a 10% split of `--manifest` when absent.
    #[arg(long, value_name = "FILE")]
    val: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr_gen: Option<f64>,
    #[arg(long)]
    lr_disc: Option<f64>,
    /// Generator encoder filters, e.g. `16,32,64`.
    #[arg(long, value_delimiter = ',')]
    filters: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    disc_filters: Option<Vec<usize>>,
}

/// Radiation-zone segmentation.
#[derive(Debug, Subcommand)]
enum SegmentCommand {
    Train(SegmentTrainArgs),
    /// Segment every PNG in a directory.
    Run {
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SegmentTrainArgs {
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    /// Validation manifest; a 10% split of `--manifest` when absent.
    #[arg(long, value_name = "FILE")]
    val: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    filters: Option<Vec<usize>>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Debug, Args)]
struct CharacterizeArgs {
    #[arg(long, value_name = "DIR")]
    masks: PathBuf,
    #[arg(long, value_name = "X,Y")]
    nozzle: Option<String>,
    #[arg(long)]
    ppm: Option<f64>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Geometry CSV, optionally tagged `VARIANT:SOURCE=FILE`. Repeatable.
    #[arg(long, value_name = "SPEC", required = true)]
    geometry: Vec<String>,
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    /// Masks from the original IR images.
    #[arg(long, value_name = "DIR", requires = "masks_b")]
    masks_a: Option<PathBuf>,
    /// Masks from the generated IR images.
    #[arg(long, value_name = "DIR", requires = "masks_a")]
    masks_b: Option<PathBuf>,
    /// Model name for the Hausdorff table.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    experiment: Option<String>,
}

/// Image-quality metrics.
#[derive(Debug, Subcommand)]
enum MetricsCommand {
    /// EN, CC, PSNR and SSIM for every reference/candidate pair.
    Eval {
        /// JSON `{"pairs": [{"id", "reference", "candidate"}, ...]}`.
        #[arg(long, value_name = "FILE")]
        pairs: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    translator: Option<PathBuf>,
    /// Repeatable; one per segmentation model.
    #[arg(long, value_name = "FILE")]
    segmenter: Vec<PathBuf>,
    #[arg(long, value_name = "X,Y")]
    nozzle: Option<String>,
    #[arg(long)]
    ppm: Option<f64>,
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    #[arg(long, value_name = "MODE")]
    brightness_ref: Option<ReferenceMode>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
