use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zigzag_core::pointcloud::CloudFormat;
use zigzag_core::scan::Plane;
use zigzag_core::synthetic::SyntheticKind;

mod commands;
mod config;
mod error;

use config::{RunConfig, ScanTarget, StrategyChoice};
use error::CliResult;

/// Zigzag serialization, masking and reconstruction experiments on point clouds.
#[derive(Parser, Debug)]
#[command(name = "zigzag", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Point-cloud file; repeat for several. Without it synthetic clouds are used.
    #[arg(long, global = true)]
    input: Vec<PathBuf>,
    /// xyz, ply or bin; inferred from the extension when omitted.
    #[arg(long, global = true)]
    format: Option<CloudFormat>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// cube, sphere or blobs.
    #[arg(long, global = true)]
    synthetic: Option<SyntheticKind>,
    #[arg(long, global = true)]
    n_clouds: Option<usize>,
    /// Points per synthetic cloud.
    #[arg(long, global = true)]
    n_points: Option<usize>,
    #[arg(long, global = true)]
    n_centers: Option<usize>,
    /// Neighbors per patch.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    plane: Option<Plane>,
    #[arg(long, global = true)]
    layer_budget: Option<usize>,
    #[arg(long, global = true)]
    segment_size: Option<usize>,
    #[arg(long, global = true)]
    max_segments: Option<usize>,
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// Curve tags, `zigzag` or `all`; comma separated or repeated.
    #[arg(long)]
    curve: Vec<String>,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long, value_enum)]
    target: Option<ScanTarget>,
}

#[derive(Args, Debug)]
struct MaskArgs {
    #[arg(long)]
    t_semantic: Option<f64>,
    #[arg(long)]
    r_random: Option<f64>,
    #[arg(long, value_enum)]
    mask_strategy: Option<StrategyChoice>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    state_dim: Option<usize>,
    /// Keep the SSM fixed and train only the decoder.
    #[arg(long)]
    freeze_ssm: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write scan orders and locality metrics per curve.
    Serialize(CurveArgs),
    /// Write the semantic/random mask plan for the tokenized clouds.
    Mask(MaskArgs),
    /// Compare locality of several curves over a set of clouds.
    Compare(CurveArgs),
    /// Train the masked-patch reconstruction model and write loss traces.
    Reconstruct {
        #[command(flatten)]
        mask: MaskArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
}

fn apply<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl GlobalArgs {
    fn apply(self, cfg: &mut RunConfig) {
        if !self.input.is_empty() {
            cfg.input = self.input;
        }
        if self.format.is_some() {
            cfg.format = self.format;
        }
        if self.plane.is_some() {
            cfg.plane = self.plane;
        }
        if self.n_clouds.is_some() {
            cfg.n_clouds = self.n_clouds;
        }
        apply(&mut cfg.out_dir, self.out_dir);
        apply(&mut cfg.seed, self.seed);
        apply(&mut cfg.synthetic, self.synthetic);
        apply(&mut cfg.n_points, self.n_points);
        apply(&mut cfg.tokenizer.n_centers, self.n_centers);
        apply(&mut cfg.tokenizer.k, self.k);
        apply(&mut cfg.scan.layer_budget, self.layer_budget);
        apply(&mut cfg.scan.segment_size, self.segment_size);
        apply(&mut cfg.scan.max_segments, self.max_segments);
    }
}

impl CurveArgs {
    fn apply(self, cfg: &mut RunConfig) {
        if !self.curve.is_empty() {
            cfg.curves = Some(self.curve);
        }
        apply(&mut cfg.quantization_bits, self.bits);
        apply(&mut cfg.target, self.target);
    }
}

impl MaskArgs {
    fn apply(self, cfg: &mut RunConfig) {
        apply(&mut cfg.mask.t_semantic, self.t_semantic);
        apply(&mut cfg.mask.r_random, self.r_random);
        if self.mask_strategy.is_some() {
            cfg.mask_strategy = self.mask_strategy;
        }
    }
}

impl TrainArgs {
    fn apply(self, cfg: &mut RunConfig) {
        apply(&mut cfg.train.steps, self.steps);
        apply(&mut cfg.train.lr, self.lr);
        apply(&mut cfg.train.state_dim, self.state_dim);
        if self.freeze_ssm {
            cfg.train.train_ssm = false;
        }
    }
}

fn run(cli: Cli) -> CliResult<Vec<String>> {
    let mut cfg = match &cli.global.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cli.global.apply(&mut cfg);
    match cli.command {
        Command::Serialize(args) => {
            args.apply(&mut cfg);
            commands::serialize(cfg)
        }
        Command::Mask(args) => {
            args.apply(&mut cfg);
            commands::mask(cfg)
        }
        Command::Compare(args) => {
            args.apply(&mut cfg);
            commands::compare(cfg)
        }
        Command::Reconstruct { mask, train } => {
            mask.apply(&mut cfg);
            train.apply(&mut cfg);
            commands::reconstruct(cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(written) => {
            for path in written {
                eprintln!("wrote {path}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
