//! Command-line front end for the coarse-ADC uplink simulator.
//!
//! Four subcommands cover the experiment surface:
//!
//! * `sweep` — BER-vs-SNR Monte-Carlo runs, from a JSON config or a preset,
//!   written as CSV plus a JSON manifest that pins the exact configuration.
//! * `etf` — equivalent-transfer-function tables on a uniform input grid,
//!   one block per noise variance, for external plotting.
//! * `constellation` — combiner-output scatter data: predicted points from
//!   the front-end-aware table followed by simulated realizations.
//! * `complexity` — closed-form multiply counts for the two detector
//!   families and their ratio.
//!
//! Exit codes: 0 on success, 2 on usage/configuration errors, 1 on runtime
//! failures.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use quantrx::mc::{
    mrc_scatter, run_sweep, BerRecord, ChannelMode, GainSpec, ReceiverKind, ScatterConfig,
    SimConfig,
};
use quantrx::quant::{NoiseModel, QuantizerSpec};
use quantrx::rx::{complexity_bruteforce, complexity_naive};
use quantrx::{Error, Result};

#[derive(Parser)]
#[command(
    name = "quantrx",
    version,
    about = "Uplink BER simulation through coarse analog-to-digital conversion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER-vs-SNR sweep and write CSV results plus a JSON manifest.
    Sweep(SweepArgs),
    /// Export the equivalent transfer function on a uniform input grid.
    Etf(EtfArgs),
    /// Export combiner-output scatter data with table predictions.
    Constellation(ConstellationArgs),
    /// Report detector multiply counts for a given problem size.
    Complexity(ComplexityArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SweepSource {
    /// JSON configuration file mirroring the sweep config schema.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in experiment preset.
    #[arg(long, value_name = "fig6|fig7")]
    preset: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SweepSource,
    /// Override the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; the manifest lands next to it as <out>.manifest.json.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Override the configured per-point trial cap.
    #[arg(long)]
    max_trials: Option<u64>,
    /// Override the configured per-point bit-error target.
    #[arg(long)]
    target_errors: Option<u64>,
}

#[derive(Args)]
struct EtfArgs {
    /// Quantizer width in bits.
    #[arg(long)]
    bits: u32,
    /// Quantizer step size.
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    /// Comma-separated per-component noise variances (0 = noiseless).
    #[arg(long, value_name = "LIST")]
    sigma2: String,
    /// Input range as lo:hi.
    #[arg(long, default_value = "-5:5", allow_hyphen_values = true)]
    range: String,
    /// Number of grid points across the range.
    #[arg(long, default_value_t = 2001)]
    steps: usize,
    /// Output CSV path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct ConstellationArgs {
    /// Scatter preset.
    #[arg(long, value_name = "fig5", default_value = "fig5")]
    preset: String,
    /// Override the preset's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the preset's realizations per symbol.
    #[arg(long)]
    realizations: Option<u64>,
    /// Output CSV path; the manifest lands next to it as <out>.manifest.json.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct ComplexityArgs {
    /// Receive antennas.
    #[arg(long)]
    antennas: usize,
    /// Simultaneous users.
    #[arg(long)]
    users: usize,
    /// Constellation order.
    #[arg(long)]
    qam_order: usize,
}

/// Everything needed to reproduce an emitted results file.
#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    tool_version: String,
    timestamp: String,
    base_seed: u64,
    #[serde(flatten)]
    payload: ManifestPayload,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ManifestPayload {
    Sweep {
        config: SimConfig,
        records: Vec<BerRecord>,
    },
    Scatter {
        config: ScatterConfig,
    },
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Etf(args) => cmd_etf(args),
        Command::Constellation(args) => cmd_constellation(args),
        Command::Complexity(args) => cmd_complexity(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        let code = match e {
            Error::InvalidArgument(_) => 2,
            _ => 1,
        };
        std::process::exit(code);
    }
}

/// The 1024-antenna 1-bit single-user QAM64 sweep.
fn preset_fig6() -> SimConfig {
    SimConfig {
        antennas: 1024,
        users: 1,
        qam_order: 64,
        quantizer_bits: Some(1),
        delta: 2.0,
        gain: GainSpec::Fixed { value: 1.0 },
        channel: ChannelMode::LosRandomAngle,
        snr_points_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
        receivers: vec![ReceiverKind::NaiveMl, ReceiverKind::EquivalentMl],
        max_trials: 100_000,
        target_bit_errors: 200,
        base_seed: 0,
    }
}

/// The 32-antenna 3-bit single-user QAM64 sweep, with the exact likelihood
/// search affordable as a third curve and gain set by automatic targeting.
fn preset_fig7() -> SimConfig {
    SimConfig {
        antennas: 32,
        users: 1,
        qam_order: 64,
        quantizer_bits: Some(3),
        delta: 2.0,
        gain: GainSpec::Agc,
        channel: ChannelMode::LosRandomAngle,
        snr_points_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
        receivers: vec![
            ReceiverKind::NaiveMl,
            ReceiverKind::BruteforceMl,
            ReceiverKind::EquivalentMl,
        ],
        max_trials: 100_000,
        target_bit_errors: 200,
        base_seed: 0,
    }
}

/// The fixed-angle 1024-antenna 1-bit scatter experiment.
fn preset_fig5() -> ScatterConfig {
    ScatterConfig {
        antennas: 1024,
        alpha: std::f64::consts::PI / 12.0,
        qam_order: 64,
        quantizer_bits: 1,
        delta: 2.0,
        snr_db: 30.0,
        gain: GainSpec::Fixed { value: 1.0 },
        realizations_per_symbol: 500,
        base_seed: 0,
    }
}

fn sweep_preset(name: &str) -> Result<SimConfig> {
    match name {
        "fig6" => Ok(preset_fig6()),
        "fig7" => Ok(preset_fig7()),
        "fig5" => Err(Error::InvalidArgument(
            "fig5 is a scatter experiment; use the constellation subcommand".into(),
        )),
        other => Err(Error::InvalidArgument(format!(
            "unknown sweep preset '{other}'; expected fig6 or fig7"
        ))),
    }
}

fn read_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_manifest(out: &Path, base_seed: u64, payload: ManifestPayload) -> Result<()> {
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        base_seed,
        payload,
    };
    let path = manifest_path(out);
    let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    fs::write(&path, text.as_bytes())?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mut config = match (&args.source.config, &args.source.preset) {
        (Some(path), None) => read_config(path)?,
        (None, Some(name)) => sweep_preset(name)?,
        _ => unreachable!("clap enforces exactly one source"),
    };
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if let Some(cap) = args.max_trials {
        config.max_trials = cap;
    }
    if let Some(target) = args.target_errors {
        config.target_bit_errors = target;
    }
    config.validate()?;

    let records = run_sweep(&config)?;
    let mut csv = String::from("receiver,snr_db,trials,bit_errors,ber,ci_low,ci_high\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.receiver, r.snr_db, r.trials, r.bit_errors, r.ber, r.ci_low, r.ci_high
        ));
    }
    fs::write(&args.out, csv.as_bytes())?;
    write_manifest(
        &args.out,
        config.base_seed,
        ManifestPayload::Sweep {
            config,
            records: records.clone(),
        },
    )?;
    println!(
        "wrote {} ({} records) and {}",
        args.out.display(),
        records.len(),
        manifest_path(&args.out).display()
    );
    Ok(())
}

fn cmd_etf(args: EtfArgs) -> Result<()> {
    let quantizer = QuantizerSpec::new(args.bits, args.delta)?;
    let mut variances = Vec::new();
    for part in args.sigma2.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad noise variance '{part}'")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be finite and nonnegative, got {v}"
            )));
        }
        variances.push(v);
    }
    if variances.is_empty() {
        return Err(Error::InvalidArgument("at least one noise variance".into()));
    }
    let (lo, hi) = args
        .range
        .split_once(':')
        .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)))
        .ok_or_else(|| Error::InvalidArgument(format!("bad range '{}'", args.range)))?;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "range must be finite with lo < hi, got {lo}:{hi}"
        )));
    }
    if args.steps < 2 {
        return Err(Error::InvalidArgument("at least two grid points".into()));
    }

    let mut csv = String::from("s,sigma2,F(s)\n");
    for &sigma2 in &variances {
        let noise = if sigma2 == 0.0 {
            NoiseModel::noiseless()
        } else {
            NoiseModel::new(sigma2)?
        };
        for i in 0..args.steps {
            let s = lo + (hi - lo) * i as f64 / (args.steps - 1) as f64;
            let f = quantizer.etf_real(&noise, s);
            csv.push_str(&format!("{s},{sigma2},{f}\n"));
        }
    }
    fs::write(&args.out, csv.as_bytes())?;
    println!(
        "wrote {} ({} variances x {} points)",
        args.out.display(),
        variances.len(),
        args.steps
    );
    Ok(())
}

fn cmd_constellation(args: ConstellationArgs) -> Result<()> {
    let mut config = match args.preset.as_str() {
        "fig5" => preset_fig5(),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown scatter preset '{other}'; expected fig5"
            )))
        }
    };
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if let Some(n) = args.realizations {
        config.realizations_per_symbol = n;
    }
    config.validate()?;

    let data = mrc_scatter(&config)?;
    let mut csv = String::from("kind,symbol,re,im\n");
    for p in &data.predictions {
        csv.push_str(&format!("predicted,{},{},{}\n", p.symbol, p.re, p.im));
    }
    for p in &data.points {
        csv.push_str(&format!("realization,{},{},{}\n", p.symbol, p.re, p.im));
    }
    fs::write(&args.out, csv.as_bytes())?;
    write_manifest(
        &args.out,
        config.base_seed,
        ManifestPayload::Scatter { config },
    )?;
    println!(
        "wrote {} ({} predicted, {} realizations)",
        args.out.display(),
        data.predictions.len(),
        data.points.len()
    );
    Ok(())
}

fn cmd_complexity(args: ComplexityArgs) -> Result<()> {
    let naive = complexity_naive(args.antennas, args.users, args.qam_order)?;
    let brute = complexity_bruteforce(args.antennas, args.users, args.qam_order)?;
    println!("naive-ml multiplies per vector: {naive}");
    println!("bruteforce-ml multiplies per vector: {brute}");
    println!(
        "ratio (bruteforce / naive): {}",
        brute as f64 / naive as f64
    );
    Ok(())
}
