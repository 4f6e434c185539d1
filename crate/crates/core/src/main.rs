//! Command-line entry point: configuration, the simulation pipeline, and
//! file outputs. Every run writes a manifest recording the config hash, the
//! seed, and the SHA-256 of each output file. Exit codes: 0 success,
//! 2 config error, 3 data error, 4 numerical failure, 64 usage error.

mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use sqz_eit::config::Config;
use sqz_eit::error::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sqz-eit",
    version,
    about = "Squeezed vacuum through an EIT medium: CW and pulsed channel models, \
             calibration, and homodyne tomography"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for results and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override config scalars, e.g. --set opa.pump_ratio=0.2 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predict CW transmitted quadrature-noise spectra.
    SimulateCw,
    /// Scan the two-photon detuning for the best transmitted squeezing.
    ScanDetuning,
    /// Propagate the classical probe pulse through the cell.
    PropagatePulse,
    /// Predict the pulsed variance curve and the transmitted state.
    SimulatePulse,
    /// Draw synthetic homodyne quadrature samples.
    Synthesize {
        /// Density-matrix JSON defining the target Gaussian state.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Maximum-likelihood state reconstruction from quadrature data.
    Reconstruct {
        /// Quadrature CSV (phase_rad, quadrature).
        #[arg(long)]
        data: PathBuf,
    },
    /// Evaluate the Wigner function of a stored state.
    Wigner {
        #[arg(long)]
        state: PathBuf,
    },
    /// Uhlmann fidelity between two stored states.
    Fidelity {
        #[arg(long)]
        state_a: PathBuf,
        #[arg(long)]
        state_b: PathBuf,
    },
    /// Fit the medium to classical spectra, waveforms and delays.
    FitEit {
        /// Dataset index JSON (see `pipeline` outputs for the layout).
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Fit the source cavity to measured noise spectra.
    FitOpa {
        /// Noise CSV (frequency_MHz, v_plus_dB, v_minus_dB).
        #[arg(long)]
        data: PathBuf,
    },
    /// End-to-end synthetic run: calibrate, predict, measure, reconstruct,
    /// and report the fidelity.
    Pipeline,
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::SimulateCw => "simulate-cw",
        Command::ScanDetuning => "scan-detuning",
        Command::PropagatePulse => "propagate-pulse",
        Command::SimulatePulse => "simulate-pulse",
        Command::Synthesize { .. } => "synthesize",
        Command::Reconstruct { .. } => "reconstruct",
        Command::Wigner { .. } => "wigner",
        Command::Fidelity { .. } => "fidelity",
        Command::FitEit { .. } => "fit-eit",
        Command::FitOpa { .. } => "fit-opa",
        Command::Pipeline => "pipeline",
    }
}

fn set_json_path(
    value: &mut serde_json::Value,
    parts: &[&str],
    leaf: serde_json::Value,
) -> Result<()> {
    let map = value
        .as_object_mut()
        .ok_or_else(|| Error::Config("--set path does not address an object".into()))?;
    if parts.len() == 1 {
        map.insert(parts[0].to_string(), leaf);
        return Ok(());
    }
    let child = map
        .entry(parts[0].to_string())
        .or_insert_with(|| serde_json::Value::Object(Default::default()));
    set_json_path(child, &parts[1..], leaf)
}

/// Apply --set overrides onto the raw config JSON before parsing.
fn apply_overrides(raw: &str, overrides: &[String]) -> Result<String> {
    let mut value: serde_json::Value =
        serde_json::from_str(raw).map_err(|e| Error::Config(format!("bad config: {e}")))?;
    for item in overrides {
        let (path, rhs) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set needs KEY=VALUE, got `{item}`")))?;
        let parsed: serde_json::Value = serde_json::from_str(rhs)
            .unwrap_or_else(|_| serde_json::Value::String(rhs.to_string()));
        let parts: Vec<&str> = path.split('.').collect();
        set_json_path(&mut value, &parts, parsed)?;
    }
    Ok(value.to_string())
}

struct LoadedConfig {
    config: Config,
    hash: String,
    base_dir: PathBuf,
}

fn load_config(cli: &Cli) -> Result<LoadedConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <file> is required for this command".into()))?;
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let effective = apply_overrides(&raw, &cli.overrides)?;
    let mut config = Config::from_json(&effective)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let hash = hex::encode(Sha256::digest(effective.as_bytes()));
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedConfig {
        config,
        hash,
        base_dir,
    })
}

fn write_manifest(
    out_dir: &Path,
    command: &str,
    config_hash: Option<&str>,
    seed: Option<u64>,
    outputs: &[commands::OutputFile],
    error: Option<(i32, String)>,
) {
    let manifest = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": config_hash,
        "seed": seed,
        "outputs": outputs.iter().map(|o| serde_json::json!({
            "path": o.path.strip_prefix(out_dir).unwrap_or(&o.path).display().to_string(),
            "sha256": o.sha256,
        })).collect::<Vec<_>>(),
        "error": error.map(|(code, message)| serde_json::json!({
            "code": code,
            "message": message,
        })),
    });
    if std::fs::create_dir_all(out_dir).is_ok() {
        let _ = std::fs::write(
            out_dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest).unwrap_or_default(),
        );
    }
}

fn run(cli: &Cli) -> Result<commands::RunOutcome> {
    // fidelity needs no config; everything else does
    if let Command::Fidelity { state_a, state_b } = &cli.command {
        std::fs::create_dir_all(&cli.out_dir)?;
        return commands::fidelity_cmd(&cli.out_dir, state_a, state_b);
    }

    let loaded = load_config(cli)?;
    let config = &loaded.config;
    let seed = config.seed;
    std::fs::create_dir_all(&cli.out_dir)?;
    let out = &cli.out_dir;
    let base = &loaded.base_dir;
    match &cli.command {
        Command::SimulateCw => commands::simulate_cw(config, out, base),
        Command::ScanDetuning => commands::scan_detuning(config, out, base),
        Command::PropagatePulse => commands::propagate_pulse_cmd(config, out),
        Command::SimulatePulse => commands::simulate_pulse(config, out, base),
        Command::Synthesize { state } => {
            commands::synthesize_cmd(config, out, state.as_deref(), seed)
        }
        Command::Reconstruct { data } => commands::reconstruct_cmd(config, out, data),
        Command::Wigner { state } => commands::wigner_cmd(config, out, state),
        Command::Fidelity { .. } => unreachable!(),
        Command::FitEit { dataset } => commands::fit_eit_cmd(config, out, dataset),
        Command::FitOpa { data } => commands::fit_opa_cmd(config, out, data),
        Command::Pipeline => commands::pipeline(config, out, base, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };

    let name = command_name(&cli.command);
    let (config_hash, config_seed) = match load_config(&cli) {
        Ok(loaded) => (Some(loaded.hash), Some(loaded.config.seed)),
        Err(_) => (None, None),
    };
    let seed = cli.seed.or(config_seed);

    match run(&cli) {
        Ok(outcome) => {
            write_manifest(
                &cli.out_dir,
                name,
                config_hash.as_deref(),
                seed,
                &outcome.outputs,
                None,
            );
            for note in &outcome.notes {
                println!("{note}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let code = err.exit_code();
            write_manifest(
                &cli.out_dir,
                name,
                config_hash.as_deref(),
                seed,
                &[],
                Some((code, err.to_string())),
            );
            eprintln!("error: {err}");
            ExitCode::from(code as u8)
        }
    }
}
