use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dcscn_cli::commands;
use dcscn_cli::{CliError, CliResult, RunConfig};
use log::warn;

#[derive(Parser)]
#[command(name = "dcscn", version, about = "Incrementally built DoG-kernel CNNs with CAM explanations and RL pruning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat dotted-key JSON config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic dataset as an image folder.
    Synth(Common),
    /// Build a model.
    Train(Common),
    /// Accuracy and parameter amount per split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Heatmaps and IoU on the test split.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        /// 1-based layer; 0 is the final layer.
        #[arg(long)]
        layer: Option<usize>,
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Search per-layer pruning ratios.
    Prune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn load_config(c: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.out = out.clone();
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn finish(cfg: &RunConfig) -> CliResult<()> {
    for w in cfg.validate()? {
        warn!("{w}");
    }
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth(c) => {
            let cfg = load_config(&c)?;
            finish(&cfg)?;
            let report = commands::synth(&cfg)?;
            println!("wrote {}", report.dir.display());
            for (name, n) in report.class_counts {
                println!("{name}: {n}");
            }
        }
        Command::Train(c) => {
            let cfg = load_config(&c)?;
            finish(&cfg)?;
            let r = commands::train(&cfg)?;
            println!(
                "kernels per layer {:?}, stop {:?}",
                r.model.kernels_per_layer(),
                r.trace.stop
            );
            println!(
                "train accuracy {:.4}, test accuracy {:.4}, {:.1}s",
                r.train_accuracy, r.test_accuracy, r.seconds
            );
        }
        Command::Eval { common, model } => {
            let cfg = load_config(&common)?;
            finish(&cfg)?;
            for r in commands::eval(&cfg, model.as_deref())? {
                println!(
                    "{}: accuracy {:.4}, pa {:.6} MB, {:.2e} s/sample",
                    r.split, r.accuracy, r.pa_mb, r.seconds_per_sample
                );
            }
        }
        Command::Explain {
            common,
            model,
            layer,
            theta,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(l) = layer {
                cfg.cam.layer = l;
            }
            if let Some(t) = theta {
                cfg.cam.theta = t;
            }
            finish(&cfg)?;
            let r = commands::explain(&cfg, model.as_deref())?;
            println!("layer {}: {} heatmaps", r.layer, r.images.len());
            match r.iou {
                Some(iou) => println!("dataset IoU {iou:.4}"),
                None => println!("no annotated samples; IoU not computed"),
            }
        }
        Command::Prune { common, model } => {
            let cfg = load_config(&common)?;
            finish(&cfg)?;
            let o = commands::prune(&cfg, model.as_deref())?;
            for (name, r) in [("before", &o.baseline), ("after", &o.best)] {
                println!(
                    "{name}: reward {:.4}, acc {:.4}, iou {:.4}, pa {:.6} MB",
                    r.reward, r.accuracy, r.iou, r.pa_mb
                );
            }
            println!("kept kernels {:?}", o.best_keep);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
