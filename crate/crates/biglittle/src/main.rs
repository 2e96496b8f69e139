use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use biglittle::cascade::CascadeConfig;
use biglittle::cli::{
    self, build_metric, cmd_export_header, cmd_prepare, cmd_sensor_study, cmd_simulate, cmd_train,
    resolve_dataset_path, ExperimentConfig, Scope,
};
use biglittle::data::ActivityLabel;
use biglittle::error::{Error, Result};
use biglittle::nn::ModelKind;
use biglittle::train::Hyperparams;

#[derive(Parser)]
#[command(
    name = "biglittle",
    about = "Train, quantize and simulate adaptive big-little CNN cascades with an MCU cost model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the raw dataset layout, rescale it and write a binary cache.
    Prepare {
        /// Dataset root directory (or set BIGLITTLE_DATASET).
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train one model and write its manifest plus a training log.
    Train {
        /// Model kind: big, little or dual.
        #[arg(long)]
        kind: String,
        /// Target activity 1..=6 (required for little).
        #[arg(long)]
        activity: Option<u8>,
        /// Dataset root directory or prepared cache file.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// JSON hyperparameter file; defaults apply when absent.
        #[arg(long)]
        hyperparams: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one cascade configuration and emit the report bundle.
    Simulate {
        /// big-only | big-little | big-dual | big-distance
        #[arg(long)]
        config: String,
        /// manhattan | euclidean | mahalanobis (big-distance only).
        #[arg(long, default_value = "manhattan")]
        metric: String,
        /// Wake threshold for big-distance.
        #[arg(long, default_value_t = 8000.0)]
        threshold: f64,
        /// full-test | mcu-60
        #[arg(long, default_value = "full-test")]
        scope: String,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Directory holding the trained model manifests.
        #[arg(long, default_value = "out")]
        models: PathBuf,
        /// Builtin profile name (ecm3532, stm32l4, apollo2, apollo3) or a JSON file.
        #[arg(long, default_value = "ecm3532")]
        device: String,
        #[arg(long, default_value_t = 48)]
        freq: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train one little model per sensor and activity; tabulate accuracy.
    SensorStudy {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        hyperparams: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Export a manifest's packed weights as a C header.
    ExportHeader {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_kind(kind: &str, activity: Option<u8>) -> Result<ModelKind> {
    match kind {
        "big" => Ok(ModelKind::Big),
        "dual" => Ok(ModelKind::Dual),
        "little" => {
            let code = activity
                .ok_or_else(|| Error::Usage("--kind little needs --activity 1..=6".into()))?;
            let label = ActivityLabel::from_code(code)
                .map_err(|_| Error::Usage(format!("--activity {code} outside 1..=6")))?;
            Ok(ModelKind::Little(label))
        }
        other => Err(Error::Usage(format!(
            "unknown kind {other:?} (have big, little, dual)"
        ))),
    }
}

fn parse_scope(scope: &str) -> Result<Scope> {
    match scope {
        "full-test" => Ok(Scope::FullTest),
        "mcu-60" => Ok(Scope::Mcu60),
        other => Err(Error::Usage(format!(
            "unknown scope {other:?} (have full-test, mcu-60)"
        ))),
    }
}

fn load_hyperparams(
    path: Option<PathBuf>,
    seed: Option<u64>,
    epochs: Option<usize>,
) -> Result<Hyperparams> {
    let mut hp: Hyperparams = match path {
        Some(p) => {
            if !p.is_file() {
                return Err(Error::MissingArtifact(p.display().to_string()));
            }
            serde_json::from_str(&std::fs::read_to_string(p)?)?
        }
        None => Hyperparams::default(),
    };
    if let Some(s) = seed {
        hp.seed = s;
    }
    if let Some(e) = epochs {
        hp.epochs = e;
    }
    Ok(hp)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare { dataset, out } => {
            let root = resolve_dataset_path(dataset)?;
            let summary = cmd_prepare(&root, &out)?;
            println!(
                "prepared {} train / {} test samples -> {}",
                summary.train_count,
                summary.test_count,
                summary.cache_path.display()
            );
        }
        Command::Train {
            kind,
            activity,
            dataset,
            hyperparams,
            seed,
            epochs,
            out,
        } => {
            let kind = parse_kind(&kind, activity)?;
            let hp = load_hyperparams(hyperparams, seed, epochs)?;
            let data = cli::load_dataset(&resolve_dataset_path(dataset)?)?;
            let summary = cmd_train(kind, &data, &hp, &out)?;
            println!(
                "trained {} ({} params), final loss {:.4}, val accuracy {} -> {}",
                summary.kind,
                summary.total_params,
                summary.final_loss,
                summary
                    .final_val_accuracy
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "-".into()),
                summary.manifest_path.display()
            );
        }
        Command::Simulate {
            config,
            metric,
            threshold,
            scope,
            dataset,
            models,
            device,
            freq,
            seed,
            out,
        } => {
            let dataset_path = resolve_dataset_path(dataset)?;
            let scope = parse_scope(&scope)?;
            let cascade_config = match config.as_str() {
                "big-only" => CascadeConfig::BigOnly,
                "big-little" => CascadeConfig::BigSixLittle,
                "big-dual" => CascadeConfig::BigDual,
                "big-distance" => {
                    let data = cli::load_dataset(&dataset_path)?;
                    CascadeConfig::BigDistance {
                        metric: build_metric(&metric, &data)?,
                        threshold,
                    }
                }
                other => {
                    return Err(Error::Usage(format!(
                    "unknown config {other:?} (have big-only, big-little, big-dual, big-distance)"
                )))
                }
            };
            let experiment = ExperimentConfig {
                dataset: dataset_path,
                models_dir: models,
                config: cascade_config,
                device,
                freq_mhz: freq,
                seed,
                out_dir: out.clone(),
            };
            let summary = cmd_simulate(&experiment, scope)?;
            println!(
                "{} over {}: accuracy {:.4}, big {}, secondary {}, {:.1} ms, {:.3} mJ -> {}",
                summary.row.config,
                summary.row.scope,
                summary.row.accuracy,
                summary.row.big_count,
                summary.row.secondary_count,
                summary.row.latency_ms,
                summary.row.energy_mj,
                out.display()
            );
        }
        Command::SensorStudy {
            dataset,
            hyperparams,
            epochs,
            seed,
            out,
        } => {
            let data = cli::load_dataset(&resolve_dataset_path(dataset)?)?;
            let mut hp = load_hyperparams(hyperparams, seed, epochs)?;
            if epochs.is_none() {
                hp.epochs = hp.epochs.min(30);
            }
            let table = cmd_sensor_study(&data, &hp, &out)?;
            print!("{}", table.to_csv());
            println!("best sensor: {}", table.best_sensor());
        }
        Command::ExportHeader { manifest, out } => {
            let bytes = cmd_export_header(&manifest, &out)?;
            println!("exported {bytes} bytes -> {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error itself
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
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
