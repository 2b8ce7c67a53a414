//! Command-line parsing: subcommands, flag overrides, and config loading.
//! Precedence: built-in defaults, then `--config` file values, then flags.

use std::path::PathBuf;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_normalization, parse_policy, AppConfig};
use crate::AppError;

#[derive(Debug, Parser)]
#[command(
    name = "forged-eeg",
    version,
    about = "EEG forged-channel imaging and leave-one-subject-out evaluation",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    /// Config file of `key = value` lines (see README).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker thread cap, 0 = all cores (falls back to FORGED_EEG_THREADS).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Generate a synthetic two-class dataset with a manifest.
    Synth(SynthArgs),
    /// Convert BDF files to the raw tensor format.
    Ingest(IngestArgs),
    /// Band-pass filter (and optionally ICA-clean) a dataset.
    Preprocess(PreprocessArgs),
    /// Forge recordings into an image dataset.
    Forge(ForgeArgs),
    /// Train one classifier on a forged image dataset.
    Train(TrainArgs),
    /// Leave-one-subject-out cross-validation over a manifest.
    Losocv(LosocvArgs),
    /// Render one channel's time-frequency distribution as a PPM image.
    TfrPlot(TfrPlotArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    subjects_per_class: Option<usize>,
    /// Recording length in seconds.
    #[arg(long, value_name = "S")]
    duration: Option<f64>,
    #[arg(long, value_name = "N")]
    channels: Option<usize>,
    /// Sampling rate in Hz.
    #[arg(long, value_name = "HZ")]
    rate: Option<f64>,
    #[arg(long, value_name = "SIGMA")]
    noise_sigma: Option<f64>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// A .bdf file or a directory of them.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_name = "HZ")]
    low_hz: Option<f64>,
    #[arg(long, value_name = "HZ")]
    high_hz: Option<f64>,
    /// Run ICA and the rejection policy after filtering.
    #[arg(long, value_name = "BOOL")]
    ica: Option<bool>,
    /// keepall | kurtosis:<thr> | reject:<i,j,...>
    #[arg(long, value_name = "POLICY")]
    policy: Option<String>,
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ForgeArgs {
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_name = "S")]
    epoch_seconds: Option<f64>,
    #[arg(long, value_name = "N")]
    freq_bins: Option<usize>,
    /// Output image side length (images are square).
    #[arg(long, value_name = "PX")]
    out_size: Option<usize>,
    /// joint | perplane
    #[arg(long, value_name = "MODE")]
    normalization: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Directory holding a forged image dataset (index.txt + tensors).
    #[arg(long, value_name = "DIR")]
    images: PathBuf,
    /// Checkpoint output path.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Hold this subject out of training and report on it.
    #[arg(long, value_name = "SUBJECT")]
    holdout: Option<String>,
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    #[arg(long, value_name = "LR")]
    lr: Option<f64>,
    #[arg(long, value_name = "C")]
    l2: Option<f64>,
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct LosocvArgs {
    #[arg(long, value_name = "PATH")]
    manifest: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    #[arg(long, value_name = "S")]
    epoch_seconds: Option<f64>,
    #[arg(long, value_name = "N")]
    freq_bins: Option<usize>,
    #[arg(long, value_name = "PX")]
    out_size: Option<usize>,
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    #[arg(long, value_name = "LR")]
    lr: Option<f64>,
}

#[derive(Debug, Args)]
struct TfrPlotArgs {
    /// Recording file (.ft or .bdf).
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "IDX", default_value_t = 0)]
    channel: usize,
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    freq_bins: Option<usize>,
    #[arg(long, value_name = "S")]
    epoch_seconds: Option<f64>,
}

/// A fully resolved command: what to run and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Synth { out_dir: PathBuf },
    Ingest { input: PathBuf, out_dir: PathBuf },
    Preprocess { manifest: PathBuf, out_dir: PathBuf },
    Forge { manifest: PathBuf, out_dir: PathBuf },
    Train { images: PathBuf, out: PathBuf, holdout: Option<String> },
    Losocv { manifest: PathBuf, out_dir: PathBuf },
    TfrPlot { input: PathBuf, channel: usize, output: PathBuf },
}

fn clap_context_string(err: &clap::Error, kind: ContextKind) -> Option<String> {
    err.context().find_map(|(k, v)| {
        if k == kind {
            if let ContextValue::String(s) = v {
                return Some(s.clone());
            }
        }
        None
    })
}

/// Parse argv (including the binary name) into a command and its effective
/// configuration.
pub fn parse_args<I, S>(argv: I) -> Result<(Command, AppConfig), AppError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv).map_err(|e| match e.kind() {
        ErrorKind::InvalidSubcommand => AppError::UnknownCommand {
            name: clap_context_string(&e, ContextKind::InvalidSubcommand)
                .unwrap_or_else(|| "<unknown>".into()),
        },
        ErrorKind::UnknownArgument => AppError::BadFlag {
            token: clap_context_string(&e, ContextKind::InvalidArg)
                .unwrap_or_else(|| "<unknown>".into()),
        },
        ErrorKind::DisplayHelp
        | ErrorKind::DisplayVersion
        | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => AppError::Exit {
            message: e.to_string(),
            code: 0,
        },
        _ => AppError::Exit {
            message: e.to_string(),
            code: 2,
        },
    })?;

    let mut cfg = AppConfig::default();
    if let Some(path) = &cli.config {
        cfg.load_file(path)?;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }

    let command = match cli.command {
        CliCommand::Synth(a) => {
            if let Some(v) = a.seed {
                cfg.base_seed = v;
            }
            if let Some(v) = a.subjects_per_class {
                cfg.subjects_per_class = v;
            }
            if let Some(v) = a.duration {
                cfg.duration_s = v;
            }
            if let Some(v) = a.channels {
                cfg.n_channels = v;
            }
            if let Some(v) = a.rate {
                cfg.sample_rate_hz = v;
            }
            if let Some(v) = a.noise_sigma {
                cfg.noise_sigma = v;
            }
            Command::Synth {
                out_dir: a.out_dir.unwrap_or_else(|| cfg.out_dir.clone()),
            }
        }
        CliCommand::Ingest(a) => Command::Ingest {
            input: a.input,
            out_dir: a.out_dir.unwrap_or_else(|| cfg.out_dir.clone()),
        },
        CliCommand::Preprocess(a) => {
            if let Some(v) = a.low_hz {
                cfg.low_hz = v;
            }
            if let Some(v) = a.high_hz {
                cfg.high_hz = v;
            }
            if let Some(v) = a.ica {
                cfg.ica = v;
            }
            if let Some(v) = &a.policy {
                cfg.policy = parse_policy(v).ok_or_else(|| AppError::Config {
                    reason: format!("bad policy {v:?}"),
                })?;
            }
            if let Some(v) = a.seed {
                cfg.base_seed = v;
            }
            Command::Preprocess {
                manifest: a.manifest,
                out_dir: a.out_dir.unwrap_or_else(|| cfg.out_dir.clone()),
            }
        }
        CliCommand::Forge(a) => {
            if let Some(v) = a.epoch_seconds {
                cfg.epoch_seconds = v;
            }
            if let Some(v) = a.freq_bins {
                cfg.n_freq_bins = v;
            }
            if let Some(v) = a.out_size {
                cfg.out_height = v;
                cfg.out_width = v;
            }
            if let Some(v) = &a.normalization {
                cfg.normalization = parse_normalization(v).ok_or_else(|| AppError::Config {
                    reason: format!("bad normalization {v:?}"),
                })?;
            }
            Command::Forge {
                manifest: a.manifest,
                out_dir: a.out_dir.unwrap_or_else(|| cfg.out_dir.clone()),
            }
        }
        CliCommand::Train(a) => {
            if let Some(v) = a.epochs {
                cfg.epochs = v;
            }
            if let Some(v) = a.batch_size {
                cfg.batch_size = v;
            }
            if let Some(v) = a.lr {
                cfg.lr = v;
            }
            if let Some(v) = a.l2 {
                cfg.l2_coeff = v;
            }
            if let Some(v) = a.seed {
                cfg.base_seed = v;
            }
            Command::Train {
                out: a.out.unwrap_or_else(|| cfg.out_dir.join("model.ckpt")),
                images: a.images,
                holdout: a.holdout,
            }
        }
        CliCommand::Losocv(a) => {
            if let Some(v) = a.seed {
                cfg.base_seed = v;
            }
            if let Some(v) = a.epoch_seconds {
                cfg.epoch_seconds = v;
            }
            if let Some(v) = a.freq_bins {
                cfg.n_freq_bins = v;
            }
            if let Some(v) = a.out_size {
                cfg.out_height = v;
                cfg.out_width = v;
            }
            if let Some(v) = a.epochs {
                cfg.epochs = v;
            }
            if let Some(v) = a.batch_size {
                cfg.batch_size = v;
            }
            if let Some(v) = a.lr {
                cfg.lr = v;
            }
            Command::Losocv {
                manifest: a.manifest,
                out_dir: a.out_dir.unwrap_or_else(|| cfg.out_dir.clone()),
            }
        }
        CliCommand::TfrPlot(a) => {
            if let Some(v) = a.freq_bins {
                cfg.n_freq_bins = v;
            }
            if let Some(v) = a.epoch_seconds {
                cfg.epoch_seconds = v;
            }
            Command::TfrPlot {
                output: a
                    .output
                    .unwrap_or_else(|| cfg.out_dir.join("tfr.ppm")),
                input: a.input,
                channel: a.channel,
            }
        }
    };
    Ok((command, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn losocv_with_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.cfg");
        std::fs::write(&cfg_path, "forge.out_height = 64\nforge.out_width = 64\nlosocv.base_seed = 7\n").unwrap();
        let (cmd, cfg) = parse_args([
            "forged-eeg",
            "losocv",
            "--manifest",
            "m.txt",
            "--config",
            cfg_path.to_str().unwrap(),
        ])
        .unwrap();
        assert!(matches!(cmd, Command::Losocv { .. }));
        assert_eq!(cfg.out_height, 64);
        assert_eq!(cfg.base_seed, 7);
    }

    #[test]
    fn flag_overrides_file_and_default() {
        let (_, cfg) = parse_args([
            "forged-eeg",
            "forge",
            "--manifest",
            "m.txt",
            "--epoch-seconds",
            "2",
        ])
        .unwrap();
        assert_eq!(cfg.epoch_seconds, 2.0);
    }

    #[test]
    fn unknown_command_is_reported() {
        match parse_args(["forged-eeg", "frobnicate"]) {
            Err(AppError::UnknownCommand { name }) => assert_eq!(name, "frobnicate"),
            other => panic!("expected UnknownCommand, got {other:?}"),
        }
    }

    #[test]
    fn unknown_flag_names_the_token() {
        match parse_args(["forged-eeg", "synth", "--frobnicate"]) {
            Err(AppError::BadFlag { token }) => assert_eq!(token, "--frobnicate"),
            other => panic!("expected BadFlag, got {other:?}"),
        }
    }

    #[test]
    fn help_exits_cleanly() {
        match parse_args(["forged-eeg", "--help"]) {
            Err(AppError::Exit { code: 0, message }) => {
                assert!(message.contains("losocv"));
            }
            other => panic!("expected help exit, got {other:?}"),
        }
    }
}
