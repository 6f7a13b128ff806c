//! Reproducible Monte-Carlo bit-error-rate experiments.
//!
//! A sweep walks a list of SNR operating points; at each point it runs
//! independent trials — draw a channel (or reuse a fixed one), draw symbols,
//! add observation noise, quantize, detect with every configured receiver —
//! until either a target bit-error count or a trial cap is reached.
//!
//! Every trial owns a counter-derived random stream keyed by
//! `(base_seed, snr_index, trial_index)`, so a trial's outcome is a pure
//! function of the configuration. Trials run in parallel in fixed batches
//! and their integer counts merge by addition, which makes sweep results
//! byte-identical no matter how many worker threads execute them. All
//! receivers share each trial's randomness, so curve differences come from
//! the detectors, not from sampling noise.
//!
//! [`mrc_scatter`] produces the combiner-output scatter used to visualize
//! how coarse quantization displaces constellation clusters relative to the
//! equivalent-transfer-function predictions.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::{NoiseModel, QuantizerSpec};
use crate::rx::{detect_bruteforce_ml, mrc, DetectorTable};
use crate::signal::{sample_angle, sample_noise, ChannelMatrix, QamConstellation, SnrSpec};

/// Trials dispatched per parallel batch; results merge in index order.
const BATCH: u64 = 256;

/// Two-sided 95% normal quantile for the score interval.
const Z95: f64 = 1.96;

/// The detectors a sweep can run side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverKind {
    /// Quadratic search against a table that assumes a transparent front end.
    NaiveMl,
    /// Exact per-antenna likelihood search over the quantizer output law.
    BruteforceMl,
    /// Quadratic search against an equivalent-transfer-function table.
    EquivalentMl,
}

impl ReceiverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReceiverKind::NaiveMl => "naive-ml",
            ReceiverKind::BruteforceMl => "bruteforce-ml",
            ReceiverKind::EquivalentMl => "equivalent-ml",
        }
    }

    /// Whether this receiver needs a quantized front end to be meaningful.
    fn needs_quantizer(&self) -> bool {
        matches!(
            self,
            ReceiverKind::BruteforceMl | ReceiverKind::EquivalentMl
        )
    }
}

impl std::fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive-ml" => Ok(ReceiverKind::NaiveMl),
            "bruteforce-ml" => Ok(ReceiverKind::BruteforceMl),
            "equivalent-ml" => Ok(ReceiverKind::EquivalentMl),
            other => Err(Error::invalid(format!(
                "unknown receiver '{other}'; expected naive-ml, bruteforce-ml, or equivalent-ml"
            ))),
        }
    }
}

/// How the channel is drawn at each trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ChannelMode {
    /// Single-user line of sight with a fresh uniform arrival angle per trial.
    LosRandomAngle,
    /// Single-user line of sight pinned to one arrival angle.
    LosFixedAngle { alpha: f64 },
    /// Independent CN(0, 1) entries redrawn per trial.
    IidGaussian,
}

/// How the transmit gain is chosen at each operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GainSpec {
    /// A fixed gain applied to every unit-energy symbol.
    Fixed { value: f64 },
    /// Automatic gain targeting: the gain is set so the quantizer clip
    /// point sits two standard deviations above each pre-quantizer signal
    /// component. Requires a front end of at least 2 bits.
    Agc,
}

/// Full description of a bit-error-rate sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub antennas: usize,
    pub users: usize,
    pub qam_order: usize,
    /// Front-end width in bits; `None` simulates an ideal (unquantized)
    /// front end, which only the naive receiver can process.
    #[serde(default)]
    pub quantizer_bits: Option<u32>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_gain")]
    pub gain: GainSpec,
    #[serde(default = "default_channel")]
    pub channel: ChannelMode,
    pub snr_points_db: Vec<f64>,
    pub receivers: Vec<ReceiverKind>,
    #[serde(default = "default_max_trials")]
    pub max_trials: u64,
    #[serde(default = "default_target_bit_errors")]
    pub target_bit_errors: u64,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_delta() -> f64 {
    2.0
}

fn default_gain() -> GainSpec {
    GainSpec::Fixed { value: 1.0 }
}

fn default_channel() -> ChannelMode {
    ChannelMode::LosRandomAngle
}

fn default_max_trials() -> u64 {
    100_000
}

fn default_target_bit_errors() -> u64 {
    200
}

impl SimConfig {
    /// Checks every field against its documented domain.
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::invalid("antenna count must be positive"));
        }
        if self.users == 0 {
            return Err(Error::invalid("user count must be positive"));
        }
        QamConstellation::new(self.qam_order)?;
        if let Some(bits) = self.quantizer_bits {
            QuantizerSpec::new(bits, self.delta)?;
        }
        match self.gain {
            GainSpec::Fixed { value } => {
                if !value.is_finite() || value <= 0.0 {
                    return Err(Error::invalid(format!(
                        "transmit gain must be finite and positive, got {value}"
                    )));
                }
            }
            GainSpec::Agc => match self.quantizer_bits {
                Some(bits) if bits >= 2 => {}
                _ => {
                    return Err(Error::invalid(
                        "automatic gain targeting needs a front end of at least 2 bits",
                    ))
                }
            },
        }
        if let ChannelMode::LosFixedAngle { alpha } = self.channel {
            if !alpha.is_finite() {
                return Err(Error::invalid(format!(
                    "arrival angle must be finite, got {alpha}"
                )));
            }
        }
        if matches!(
            self.channel,
            ChannelMode::LosRandomAngle | ChannelMode::LosFixedAngle { .. }
        ) && self.users != 1
        {
            return Err(Error::invalid("line-of-sight channels model a single user"));
        }
        if self.snr_points_db.is_empty() {
            return Err(Error::invalid("at least one SNR point is required"));
        }
        if self.snr_points_db.len() > (1 << 31) {
            return Err(Error::capacity("too many SNR points"));
        }
        for &snr in &self.snr_points_db {
            SnrSpec::new(snr)?;
        }
        if self.receivers.is_empty() {
            return Err(Error::invalid("at least one receiver is required"));
        }
        for (i, r) in self.receivers.iter().enumerate() {
            if self.receivers[..i].contains(r) {
                return Err(Error::invalid(format!("receiver '{r}' listed twice")));
            }
            if r.needs_quantizer() && self.quantizer_bits.is_none() {
                return Err(Error::invalid(format!(
                    "receiver '{r}' needs a quantized front end"
                )));
            }
        }
        if self.max_trials == 0 {
            return Err(Error::invalid("trial cap must be positive"));
        }
        if self.max_trials > u32::MAX as u64 {
            return Err(Error::capacity(
                "trial cap exceeds the 2^32 - 1 stream space per SNR point",
            ));
        }
        if self.target_bit_errors == 0 {
            return Err(Error::invalid("bit-error target must be positive"));
        }
        Ok(())
    }

    fn quantizer(&self) -> Result<Option<QuantizerSpec>> {
        self.quantizer_bits
            .map(|bits| QuantizerSpec::new(bits, self.delta))
            .transpose()
    }
}

/// Accumulated error counts and the derived rates for one receiver at one
/// operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub receiver: ReceiverKind,
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub bits_total: u64,
    pub symbols_total: u64,
    pub ber: f64,
    pub ser: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Everything one trial produced: the transmitted symbol indices and each
/// configured receiver's decisions with their error counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    pub true_symbols: Vec<usize>,
    pub decisions: Vec<Vec<usize>>,
    pub bit_errors: Vec<u64>,
    pub symbol_errors: Vec<u64>,
}

/// 95% Wilson score interval for an error probability estimated from
/// `errors` out of `trials` Bernoulli draws.
pub fn wilson_interval(errors: u64, trials: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::invalid("score interval needs at least one trial"));
    }
    if errors > trials {
        return Err(Error::invalid(format!(
            "error count {errors} exceeds trial count {trials}"
        )));
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let den = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / den;
    let half = Z95 / den * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// The per-trial random stream: one generator per
/// `(base_seed, snr_index, trial_index)` triple.
///
/// Consumption order within a trial is fixed: channel draw (when the mode
/// redraws it), then symbols, then observation noise.
fn trial_rng(base_seed: u64, snr_index: usize, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(((snr_index as u64) << 32) | trial_index);
    rng
}

/// Transmit gain and noise variance realizing `snr` on a concrete channel.
fn resolve_budget(
    config: &SimConfig,
    channel: &ChannelMatrix,
    snr: SnrSpec,
) -> Result<(f64, NoiseModel)> {
    match config.gain {
        GainSpec::Fixed { value } => Ok((value, snr.noise_for(channel, value)?)),
        GainSpec::Agc => {
            let bits = config
                .quantizer_bits
                .expect("validated: gain targeting requires a front end");
            let resolution = (1u64 << bits) as f64;
            // Clip point two standard deviations out: target RMS is half the
            // saturation bound (resolution - 2) * delta / 2.
            let target = (resolution - 2.0) * config.delta / 4.0;
            let fro = channel.frob_sq();
            if fro <= 0.0 {
                return Err(Error::invalid("channel has zero energy"));
            }
            // Per-component power of each pre-quantizer sample, averaged over
            // the array: signal g^2 ||H||_F^2 / (2 M) plus noise sigma2, with
            // sigma2 = g^2 ||H||_F^2 / (2 snr) tied to the operating point.
            let denom = fro * (0.5 / config.antennas as f64 + 0.5 / snr.linear());
            let g = (target * target / denom).sqrt();
            Ok((g, snr.noise_for(channel, g)?))
        }
    }
}

/// Channel, budget, and detector tables for one operating point (or one
/// trial, when the channel mode redraws per trial).
struct Setup {
    channel: ChannelMatrix,
    gain: f64,
    noise: NoiseModel,
    naive: Option<DetectorTable>,
    equivalent: Option<DetectorTable>,
}

fn build_setup(
    config: &SimConfig,
    constellation: &QamConstellation,
    quantizer: Option<&QuantizerSpec>,
    snr: SnrSpec,
    channel: ChannelMatrix,
) -> Result<Setup> {
    let (gain, noise) = resolve_budget(config, &channel, snr)?;
    let naive = if config.receivers.contains(&ReceiverKind::NaiveMl) {
        Some(DetectorTable::naive(&channel, constellation, gain)?)
    } else {
        None
    };
    let equivalent = if config.receivers.contains(&ReceiverKind::EquivalentMl) {
        let q = quantizer.expect("validated: equivalent receiver requires a front end");
        Some(DetectorTable::equivalent(
            &channel,
            constellation,
            gain,
            q,
            &noise,
        )?)
    } else {
        None
    };
    Ok(Setup {
        channel,
        gain,
        noise,
        naive,
        equivalent,
    })
}

/// Draws the channel for one trial from the trial's own stream.
fn draw_channel<R: rand::Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<ChannelMatrix> {
    match config.channel {
        ChannelMode::LosRandomAngle => ChannelMatrix::los(config.antennas, sample_angle(rng)),
        ChannelMode::LosFixedAngle { alpha } => ChannelMatrix::los(config.antennas, alpha),
        ChannelMode::IidGaussian => ChannelMatrix::iid_gaussian(config.antennas, config.users, rng),
    }
}

/// Whether one setup can serve every trial at an operating point.
fn channel_is_static(config: &SimConfig) -> bool {
    matches!(config.channel, ChannelMode::LosFixedAngle { .. })
}

fn run_one(
    config: &SimConfig,
    constellation: &QamConstellation,
    quantizer: Option<&QuantizerSpec>,
    shared: Option<&Setup>,
    snr: SnrSpec,
    snr_index: usize,
    trial_index: u64,
) -> Result<TrialOutput> {
    let mut rng = trial_rng(config.base_seed, snr_index, trial_index);
    let local;
    let setup = match shared {
        Some(s) => s,
        None => {
            let channel = draw_channel(config, &mut rng)?;
            local = build_setup(config, constellation, quantizer, snr, channel)?;
            &local
        }
    };

    let mut true_symbols = vec![0usize; config.users];
    for s in &mut true_symbols {
        *s = constellation.sample_index(&mut rng);
    }
    let gained: Vec<Complex64> = true_symbols
        .iter()
        .map(|&s| constellation.symbol(s) * setup.gain)
        .collect();
    let s_l = setup.channel.times(&gained)?;
    let noise_vec = sample_noise(&setup.noise, config.antennas, &mut rng);
    let s_o: Vec<Complex64> = s_l
        .iter()
        .zip(&noise_vec)
        .map(|(&s, &n)| match quantizer {
            Some(q) => q.quantize_complex(s + n),
            None => s + n,
        })
        .collect();

    let mut decisions = Vec::with_capacity(config.receivers.len());
    let mut bit_errors = Vec::with_capacity(config.receivers.len());
    let mut symbol_errors = Vec::with_capacity(config.receivers.len());
    for receiver in &config.receivers {
        let decided = match receiver {
            ReceiverKind::NaiveMl => {
                let y = mrc(&setup.channel, &s_o)?;
                let table = setup.naive.as_ref().expect("naive table built");
                table.detect_quadratic(&y)?.symbols
            }
            ReceiverKind::EquivalentMl => {
                let y = mrc(&setup.channel, &s_o)?;
                let table = setup.equivalent.as_ref().expect("equivalent table built");
                table.detect_quadratic(&y)?.symbols
            }
            ReceiverKind::BruteforceMl => {
                let q = quantizer.expect("validated: bruteforce requires a front end");
                detect_bruteforce_ml(
                    &setup.channel,
                    constellation,
                    setup.gain,
                    q,
                    &setup.noise,
                    &s_o,
                )?
                .symbols
            }
        };
        let bits: u64 = true_symbols
            .iter()
            .zip(&decided)
            .map(|(&t, &d)| constellation.bit_distance(t, d) as u64)
            .sum();
        let syms = true_symbols
            .iter()
            .zip(&decided)
            .filter(|(t, d)| t != d)
            .count() as u64;
        decisions.push(decided);
        bit_errors.push(bits);
        symbol_errors.push(syms);
    }
    Ok(TrialOutput {
        true_symbols,
        decisions,
        bit_errors,
        symbol_errors,
    })
}

/// Runs exactly one trial of `config` at
/// `(snr_points_db[snr_index], trial_index)` and reports the decisions.
///
/// The outcome is a pure function of the arguments; sweeps are built from
/// these same trials.
pub fn run_trial(config: &SimConfig, snr_index: usize, trial_index: u64) -> Result<TrialOutput> {
    config.validate()?;
    if snr_index >= config.snr_points_db.len() {
        return Err(Error::invalid(format!(
            "SNR index {snr_index} out of range for {} points",
            config.snr_points_db.len()
        )));
    }
    if trial_index > u32::MAX as u64 {
        return Err(Error::capacity("trial index exceeds the stream space"));
    }
    let constellation = QamConstellation::new(config.qam_order)?;
    let quantizer = config.quantizer()?;
    let snr = SnrSpec::new(config.snr_points_db[snr_index])?;
    let shared = if channel_is_static(config) {
        let mut rng = trial_rng(config.base_seed, snr_index, 0);
        let channel = draw_channel(config, &mut rng)?;
        Some(build_setup(
            config,
            &constellation,
            quantizer.as_ref(),
            snr,
            channel,
        )?)
    } else {
        None
    };
    run_one(
        config,
        &constellation,
        quantizer.as_ref(),
        shared.as_ref(),
        snr,
        snr_index,
        trial_index,
    )
}

/// Runs the full sweep: every SNR point, every receiver, trials until the
/// slowest-erring receiver reaches `target_bit_errors` or `max_trials` is
/// hit. Records appear SNR point by SNR point, receivers in configured
/// order. Results do not depend on the number of worker threads.
pub fn run_sweep(config: &SimConfig) -> Result<Vec<BerRecord>> {
    config.validate()?;
    let constellation = QamConstellation::new(config.qam_order)?;
    let quantizer = config.quantizer()?;
    let n_rx = config.receivers.len();
    let mut records = Vec::with_capacity(config.snr_points_db.len() * n_rx);
    for (snr_index, &snr_db) in config.snr_points_db.iter().enumerate() {
        let snr = SnrSpec::new(snr_db)?;
        let shared = if channel_is_static(config) {
            let mut rng = trial_rng(config.base_seed, snr_index, 0);
            let channel = draw_channel(config, &mut rng)?;
            Some(build_setup(
                config,
                &constellation,
                quantizer.as_ref(),
                snr,
                channel,
            )?)
        } else {
            None
        };

        let mut bit_errors = vec![0u64; n_rx];
        let mut symbol_errors = vec![0u64; n_rx];
        let mut trials = 0u64;
        while trials < config.max_trials {
            let target_met = bit_errors.iter().all(|&e| e >= config.target_bit_errors);
            if target_met {
                break;
            }
            let batch = BATCH.min(config.max_trials - trials);
            let outputs: Result<Vec<TrialOutput>> = (trials..trials + batch)
                .into_par_iter()
                .map(|t| {
                    run_one(
                        config,
                        &constellation,
                        quantizer.as_ref(),
                        shared.as_ref(),
                        snr,
                        snr_index,
                        t,
                    )
                })
                .collect();
            for out in outputs? {
                for i in 0..n_rx {
                    bit_errors[i] += out.bit_errors[i];
                    symbol_errors[i] += out.symbol_errors[i];
                }
            }
            trials += batch;
        }

        let bits_total = trials * config.users as u64 * constellation.bits_per_symbol() as u64;
        let symbols_total = trials * config.users as u64;
        for (i, &receiver) in config.receivers.iter().enumerate() {
            let (ci_low, ci_high) = wilson_interval(bit_errors[i], bits_total)?;
            records.push(BerRecord {
                receiver,
                snr_db,
                trials,
                bit_errors: bit_errors[i],
                symbol_errors: symbol_errors[i],
                bits_total,
                symbols_total,
                ber: bit_errors[i] as f64 / bits_total as f64,
                ser: symbol_errors[i] as f64 / symbols_total as f64,
                ci_low,
                ci_high,
            });
        }
    }
    Ok(records)
}

/// Configuration for the combiner-output scatter experiment: a fixed
/// line-of-sight channel, every constellation symbol transmitted in
/// rotation, and the 1-user combined output recorded per realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub antennas: usize,
    pub alpha: f64,
    pub qam_order: usize,
    pub quantizer_bits: u32,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub snr_db: f64,
    #[serde(default = "default_gain")]
    pub gain: GainSpec,
    #[serde(default = "default_realizations")]
    pub realizations_per_symbol: u64,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_realizations() -> u64 {
    500
}

/// One combined observation tagged by the transmitted symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub symbol: usize,
    pub re: f64,
    pub im: f64,
}

/// Output of [`mrc_scatter`]: per-symbol predictions from both detector
/// tables and the raw combined realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterData {
    /// Equivalent-transfer-function prediction per symbol index.
    pub predictions: Vec<ScatterPoint>,
    /// Transparent-front-end prediction per symbol index, for contrast.
    pub naive_predictions: Vec<ScatterPoint>,
    pub points: Vec<ScatterPoint>,
}

impl ScatterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::invalid("antenna count must be positive"));
        }
        QamConstellation::new(self.qam_order)?;
        QuantizerSpec::new(self.quantizer_bits, self.delta)?;
        if !self.alpha.is_finite() {
            return Err(Error::invalid("arrival angle must be finite"));
        }
        SnrSpec::new(self.snr_db)?;
        if let GainSpec::Fixed { value } = self.gain {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid("transmit gain must be finite and positive"));
            }
        }
        if let GainSpec::Agc = self.gain {
            if self.quantizer_bits < 2 {
                return Err(Error::invalid(
                    "automatic gain targeting needs a front end of at least 2 bits",
                ));
            }
        }
        if self.realizations_per_symbol == 0 {
            return Err(Error::invalid("realization count must be positive"));
        }
        let total = self
            .realizations_per_symbol
            .checked_mul(self.qam_order as u64)
            .ok_or_else(|| Error::capacity("realization count overflows"))?;
        if total > u32::MAX as u64 {
            return Err(Error::capacity(
                "realization count exceeds the stream space",
            ));
        }
        Ok(())
    }
}

/// Runs the scatter experiment: symbols transmitted round-robin, one
/// combined output per realization, deterministic in `base_seed`.
pub fn mrc_scatter(config: &ScatterConfig) -> Result<ScatterData> {
    config.validate()?;
    let constellation = QamConstellation::new(config.qam_order)?;
    let quantizer = QuantizerSpec::new(config.quantizer_bits, config.delta)?;
    let channel = ChannelMatrix::los(config.antennas, config.alpha)?;
    let snr = SnrSpec::new(config.snr_db)?;
    let sweep_like = SimConfig {
        antennas: config.antennas,
        users: 1,
        qam_order: config.qam_order,
        quantizer_bits: Some(config.quantizer_bits),
        delta: config.delta,
        gain: config.gain,
        channel: ChannelMode::LosFixedAngle {
            alpha: config.alpha,
        },
        snr_points_db: vec![config.snr_db],
        receivers: vec![ReceiverKind::NaiveMl],
        max_trials: 1,
        target_bit_errors: 1,
        base_seed: config.base_seed,
    };
    let (gain, noise) = resolve_budget(&sweep_like, &channel, snr)?;
    let equivalent = DetectorTable::equivalent(&channel, &constellation, gain, &quantizer, &noise)?;
    let naive = DetectorTable::naive(&channel, &constellation, gain)?;

    let order = config.qam_order;
    let predictions: Vec<ScatterPoint> = (0..order)
        .map(|c| {
            let p = equivalent.prediction(c)[0];
            ScatterPoint {
                symbol: c,
                re: p.re,
                im: p.im,
            }
        })
        .collect();
    let naive_predictions: Vec<ScatterPoint> = (0..order)
        .map(|c| {
            let p = naive.prediction(c)[0];
            ScatterPoint {
                symbol: c,
                re: p.re,
                im: p.im,
            }
        })
        .collect();

    // One steered sample vector per symbol, reused across realizations.
    let steered: Vec<Vec<Complex64>> = (0..order)
        .map(|c| channel.times(&[constellation.symbol(c) * gain]))
        .collect::<Result<_>>()?;
    let total = config.realizations_per_symbol * order as u64;
    let points: Result<Vec<ScatterPoint>> = (0..total)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.base_seed, 0, t);
            let symbol = (t % order as u64) as usize;
            let noise_vec = sample_noise(&noise, config.antennas, &mut rng);
            let s_o: Vec<Complex64> = steered[symbol]
                .iter()
                .zip(&noise_vec)
                .map(|(&s, &n)| quantizer.quantize_complex(s + n))
                .collect();
            let y = mrc(&channel, &s_o)?;
            Ok(ScatterPoint {
                symbol,
                re: y[0].re,
                im: y[0].im,
            })
        })
        .collect();
    Ok(ScatterData {
        predictions,
        naive_predictions,
        points: points?,
    })
}
