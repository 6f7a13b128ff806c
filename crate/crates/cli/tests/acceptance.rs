//! Acceptance gate for the whole workspace: nine checks covering the
//! quantizer grid, the cell-probability model, the transfer-function closed
//! forms, the distortion-noise statistics, the combiner scatter geometry,
//! detector equivalences, receiver ordering under coarse front ends,
//! complexity counters, and run determinism.
//!
//! Each test writes one `criterion N (...): pass|FAIL` line straight to the
//! real stdout so the verdict lines are visible even under output capture.

use std::fmt::Display;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quantrx::mc::{mrc_scatter, run_sweep, BerRecord, GainSpec, ScatterConfig, SimConfig};
use quantrx::quant::{NoiseModel, QuantizerSpec};
use quantrx::rx::{
    complexity_bruteforce, complexity_naive, detect_bruteforce_ml, mrc, DetectorTable,
};
use quantrx::signal::{sample_angle, sample_noise, ChannelMatrix, QamConstellation};

fn report(line: &str) {
    // Bypass libtest's capture: verdict lines should always reach the console.
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").ok();
}

fn criterion(n: u32, label: &str, body: impl FnOnce() -> Result<String, String>) {
    match body() {
        Ok(extra) if extra.is_empty() => report(&format!("criterion {n} ({label}): pass")),
        Ok(extra) => report(&format!("criterion {n} ({label}): pass ({extra})")),
        Err(why) => {
            report(&format!("criterion {n} ({label}): FAIL — {why}"));
            panic!("criterion {n} ({label}) failed: {why}");
        }
    }
}

fn err(e: impl Display) -> String {
    e.to_string()
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($arg)+)),
        }
    };
}

#[test]
fn criterion_1_quantizer_grid() {
    criterion(1, "quantizer grid", || {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for bits in 1..=4u32 {
            for &delta in &[0.5, 2.0] {
                let q = QuantizerSpec::new(bits, delta).map_err(err)?;
                let r_count = 1usize << bits;
                let levels = q.levels();
                ensure!(
                    levels.len() == r_count,
                    "{bits}-bit: {} levels",
                    levels.len()
                );
                for r in 0..r_count - 1 {
                    ensure!(
                        (levels[r + 1] - levels[r] - delta).abs() <= 1e-12,
                        "{bits}-bit delta {delta}: uneven spacing at {r}"
                    );
                    ensure!(
                        (levels[r] + levels[r_count - 1 - r]).abs() <= 1e-12,
                        "{bits}-bit delta {delta}: asymmetric level {r}"
                    );
                }
                ensure!(q.max_output() == levels[r_count - 1], "max_output mismatch");
                let sat = q.saturation_bound();
                let top_pair_mid = (levels[r_count - 1] + levels[r_count - 2]) / 2.0;
                ensure!(
                    (sat - top_pair_mid).abs() <= 1e-12,
                    "{bits}-bit delta {delta}: saturation bound {sat} vs cell edge {top_pair_mid}"
                );

                let span = 3.0 * (sat + delta);
                let mut prev: Option<(f64, f64)> = None;
                for _ in 0..10_000 {
                    let s: f64 = rng.random_range(-span..span);
                    let out = q.quantize_real(s);
                    ensure!(
                        out == levels[q.level_index(s)],
                        "{bits}-bit delta {delta}: index/output mismatch at {s}"
                    );
                    ensure!(
                        q.quantize_real(out) == out,
                        "{bits}-bit delta {delta}: not idempotent at {s}"
                    );
                    if s.abs() < sat - 1e-9 {
                        ensure!(
                            (out - s).abs() <= delta / 2.0 + 1e-12,
                            "{bits}-bit delta {delta}: cell error {} at {s}",
                            (out - s).abs()
                        );
                    }
                    if s > sat {
                        ensure!(out == levels[r_count - 1], "no positive clamp at {s}");
                    }
                    if s < -sat {
                        ensure!(out == levels[0], "no negative clamp at {s}");
                    }
                    if let Some((ps, pout)) = prev {
                        let (lo, hi) = if ps <= s { (pout, out) } else { (out, pout) };
                        ensure!(lo <= hi, "{bits}-bit delta {delta}: not monotone");
                    }
                    prev = Some((s, out));
                }
            }
        }
        Ok(String::new())
    });
}

#[test]
fn criterion_2_cell_probability_normalization() {
    criterion(2, "cell-probability normalization", || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let deltas = [0.5, 1.0, 2.0];
        for _ in 0..1000 {
            let bits = rng.random_range(1..=4u32);
            let delta = deltas[rng.random_range(0..deltas.len())];
            let q = QuantizerSpec::new(bits, delta).map_err(err)?;
            let sigma2 = 10f64.powf(rng.random_range(-6.0..1.0));
            let noise = NoiseModel::new(sigma2).map_err(err)?;
            // Inputs out to thirty standard deviations exercise both
            // saturation tails without underflowing the total mass.
            let s_l = rng.random_range(-1.0..1.0) * 30.0 * noise.std();
            let mut total = 0.0;
            for r in 0..q.resolution() {
                let p = q.output_probability(&noise, s_l, r).map_err(err)?;
                ensure!(p.is_finite() && p >= 0.0, "bad mass {p} at r={r}");
                total += p;
            }
            ensure!(
                (total - 1.0).abs() <= 1e-12,
                "bits={bits} delta={delta} sigma2={sigma2:e} s={s_l}: total {total}"
            );
        }
        Ok(String::new())
    });
}

#[test]
fn criterion_3_transfer_function_closed_forms() {
    criterion(3, "transfer-function closed forms", || {
        // One-bit closed form: F(s) = (delta/2) erf(s / sqrt(2 sigma^2)).
        for &(delta, sigma2) in &[(2.0, 0.5), (1.0, 0.3)] {
            let q = QuantizerSpec::new(1, delta).map_err(err)?;
            let noise = NoiseModel::new(sigma2).map_err(err)?;
            let denom = (2.0 * sigma2).sqrt();
            for i in 0..2001 {
                let s = -6.0 + 12.0 * i as f64 / 2000.0;
                let f = q.etf_real(&noise, s);
                let closed = delta / 2.0 * libm::erf(s / denom);
                ensure!(
                    (f - closed).abs() <= 1e-12,
                    "one-bit mismatch at s={s}: {f} vs {closed}"
                );
            }
        }

        // Vanishing noise: the transfer function converges to the staircase
        // away from the cell edges.
        for bits in [2u32, 3] {
            let q = QuantizerSpec::new(bits, 2.0).map_err(err)?;
            let noise = NoiseModel::new(1e-12).map_err(err)?;
            let levels = q.levels();
            let edges: Vec<f64> = levels.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
            for i in 0..2001 {
                let s = -6.0 + 12.0 * i as f64 / 2000.0;
                if edges.iter().any(|&b| (s - b).abs() < 1e-4) {
                    continue;
                }
                let f = q.etf_real(&noise, s);
                ensure!(
                    (f - q.quantize_real(s)).abs() <= 1e-6,
                    "{bits}-bit staircase limit off at s={s}: {f}"
                );
            }
        }

        // The response never leaves the output range.
        for bits in 1..=4u32 {
            let q = QuantizerSpec::new(bits, 2.0).map_err(err)?;
            for &sigma2 in &[0.1, 1.0, 10.0] {
                let noise = NoiseModel::new(sigma2).map_err(err)?;
                for i in 0..401 {
                    let s = -20.0 + 40.0 * i as f64 / 400.0;
                    let f = q.etf_real(&noise, s);
                    ensure!(
                        f.abs() <= q.max_output() + 1e-12,
                        "{bits}-bit response {f} exceeds output range at s={s}"
                    );
                }
            }
        }
        Ok(String::new())
    });
}

/// Streaming mean/variance for one real dimension.
#[derive(Default)]
struct Moment {
    n: f64,
    sum: f64,
    sumsq: f64,
}

impl Moment {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sumsq += x * x;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    /// Standard error of the sample mean.
    fn se(&self) -> f64 {
        let var = (self.sumsq / self.n - self.mean() * self.mean()).max(0.0);
        (var / self.n).sqrt()
    }

    fn within_4se(&self) -> bool {
        self.mean().abs() <= 4.0 * self.se()
    }
}

#[derive(Default)]
struct ComplexMoment {
    re: Moment,
    im: Moment,
}

impl ComplexMoment {
    fn push(&mut self, z: Complex64) {
        self.re.push(z.re);
        self.im.push(z.im);
    }

    fn check(&self, what: &str) -> Result<(), String> {
        ensure!(
            self.re.within_4se() && self.im.within_4se(),
            "{what}: mean ({:.3e}, {:.3e}) outside 4 standard errors ({:.3e}, {:.3e})",
            self.re.mean(),
            self.im.mean(),
            self.re.se(),
            self.im.se()
        );
        Ok(())
    }
}

#[test]
fn criterion_4_distortion_noise_moments() {
    criterion(4, "distortion-noise moments", || {
        let antennas = 64;
        let trials = 100_000u64;
        let constellation = QamConstellation::new(64).map_err(err)?;
        let quantizer = QuantizerSpec::new(1, 2.0).map_err(err)?;
        let noise = NoiseModel::new(1.0).map_err(err)?;
        let gain = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4242);

        let mut mean = ComplexMoment::default();
        let mut sig_corr = ComplexMoment::default();
        let pairs = [(0usize, 1usize), (0, 63), (31, 32)];
        let mut pair_corr = [
            ComplexMoment::default(),
            ComplexMoment::default(),
            ComplexMoment::default(),
        ];

        for _ in 0..trials {
            let alpha = sample_angle(&mut rng);
            let channel = ChannelMatrix::los(antennas, alpha).map_err(err)?;
            let x = constellation.symbol(constellation.sample_index(&mut rng)) * gain;
            let s_l = channel.times(&[x]).map_err(err)?;
            let w = sample_noise(&noise, antennas, &mut rng);
            let s_o: Vec<Complex64> = s_l
                .iter()
                .zip(&w)
                .map(|(&s, &n)| quantizer.quantize_complex(s + n))
                .collect();
            let eq_noise = quantizer
                .equivalent_noise(&noise, &s_o, &s_l)
                .map_err(err)?;
            for (z, s) in eq_noise.iter().zip(&s_l) {
                mean.push(*z);
                sig_corr.push(z * s.conj());
            }
            for (k, &(a, b)) in pairs.iter().enumerate() {
                pair_corr[k].push(eq_noise[a] * eq_noise[b].conj());
            }
        }

        mean.check("distortion-noise mean")?;
        sig_corr.check("correlation with the front-end input")?;
        for (k, &(a, b)) in pairs.iter().enumerate() {
            pair_corr[k].check(&format!("cross-antenna correlation ({a},{b})"))?;
        }
        Ok(String::new())
    });
}

#[test]
fn criterion_5_combiner_scatter_means() {
    criterion(5, "combiner scatter means", || {
        let config = ScatterConfig {
            antennas: 1024,
            alpha: std::f64::consts::PI / 12.0,
            qam_order: 64,
            quantizer_bits: 1,
            delta: 2.0,
            snr_db: 30.0,
            gain: GainSpec::Fixed { value: 1.0 },
            realizations_per_symbol: 500,
            base_seed: 0,
        };
        let data = mrc_scatter(&config).map_err(err)?;
        ensure!(data.predictions.len() == 64, "missing predictions");
        ensure!(data.points.len() == 64 * 500, "missing realizations");

        let mut per_symbol: Vec<(Moment, Moment)> = (0..64).map(|_| Default::default()).collect();
        for p in &data.points {
            per_symbol[p.symbol].0.push(p.re);
            per_symbol[p.symbol].1.push(p.im);
        }
        for (c, (re, im)) in per_symbol.iter().enumerate() {
            ensure!(re.n == 500.0, "symbol {c}: {} realizations", re.n);
            let pred = &data.predictions[c];
            let (dre, dim) = (re.mean() - pred.re, im.mean() - pred.im);
            ensure!(
                dre.abs() <= 4.0 * re.se() && dim.abs() <= 4.0 * im.se(),
                "symbol {c}: offset ({dre:.4}, {dim:.4}) vs standard errors \
                 ({:.4}, {:.4})",
                re.se(),
                im.se()
            );
        }
        Ok(String::new())
    });
}

#[test]
fn criterion_6_detector_equivalences() {
    criterion(6, "detector equivalences", || {
        // (a) The weighted quadratic search over combined observations picks
        // the same candidate as direct distance minimization at the antennas.
        let mut rng = ChaCha8Rng::seed_from_u64(600);
        let qpsk = QamConstellation::new(4).map_err(err)?;
        let gain = 0.8;
        let noise = NoiseModel::new(0.25).map_err(err)?;
        for i in 0..1000 {
            let antennas = [2, 4, 8][i % 3];
            let users = 1 + (i / 3) % 2;
            let channel = ChannelMatrix::iid_gaussian(antennas, users, &mut rng).map_err(err)?;
            let x: Vec<Complex64> = (0..users)
                .map(|_| qpsk.symbol(qpsk.sample_index(&mut rng)) * gain)
                .collect();
            let clean = channel.times(&x).map_err(err)?;
            let w = sample_noise(&noise, antennas, &mut rng);
            let y: Vec<Complex64> = clean.iter().zip(&w).map(|(&s, &n)| s + n).collect();

            let table = DetectorTable::naive(&channel, &qpsk, gain).map_err(err)?;
            let combined = mrc(&channel, &y).map_err(err)?;
            let picked = table.detect_quadratic(&combined).map_err(err)?;

            let mut best = (f64::INFINITY, 0usize);
            for c in 0..table.candidate_count() {
                let cand = table.candidate_symbols(c);
                let gained: Vec<Complex64> = cand.iter().map(|&d| qpsk.symbol(d) * gain).collect();
                let pred = channel.times(&gained).map_err(err)?;
                let dist: f64 = y.iter().zip(&pred).map(|(&a, &b)| (a - b).norm_sqr()).sum();
                if dist < best.0 {
                    best = (dist, c);
                }
            }
            ensure!(
                picked.symbols == table.candidate_symbols(best.1),
                "instance {i}: quadratic pick {:?} vs direct {:?}",
                picked.symbols,
                table.candidate_symbols(best.1)
            );
        }

        // (b) Behind a fine front end the exact likelihood search agrees with
        // the quadratic detector on essentially every trial.
        let mut rng = ChaCha8Rng::seed_from_u64(601);
        let qam16 = QamConstellation::new(16).map_err(err)?;
        let quantizer = QuantizerSpec::new(12, 0.004).map_err(err)?;
        let noise = NoiseModel::new(0.04).map_err(err)?;
        let trials = 10_000;
        let mut agree = 0u64;
        for _ in 0..trials {
            let channel = ChannelMatrix::iid_gaussian(4, 1, &mut rng).map_err(err)?;
            let x = qam16.symbol(qam16.sample_index(&mut rng));
            let clean = channel.times(&[x]).map_err(err)?;
            let w = sample_noise(&noise, 4, &mut rng);
            let s_o: Vec<Complex64> = clean
                .iter()
                .zip(&w)
                .map(|(&s, &n)| quantizer.quantize_complex(s + n))
                .collect();

            let table = DetectorTable::naive(&channel, &qam16, 1.0).map_err(err)?;
            let combined = mrc(&channel, &s_o).map_err(err)?;
            let quad = table.detect_quadratic(&combined).map_err(err)?;
            let exact = detect_bruteforce_ml(&channel, &qam16, 1.0, &quantizer, &noise, &s_o)
                .map_err(err)?;
            if quad.symbols == exact.symbols {
                agree += 1;
            }
        }
        ensure!(
            agree * 1000 >= trials * 999,
            "fine-front-end agreement {agree}/{trials} below 99.9%"
        );
        Ok(format!("fine-front-end agreement {agree}/{trials}"))
    });
}

/// Pinned sweep configurations for the receiver-ordering checks. Each grid
/// was chosen so its lowest point is noise-dominated and its highest point
/// sits where the linear-front-end model has collapsed; seeds and trial caps
/// are frozen so the measured counts are reproducible bit for bit.
const ORDERING_SWEEPS: [&str; 3] = [
    // 256 antennas, one-bit front end, unit gain.
    r#"{
        "antennas": 256, "users": 1, "qam_order": 64, "quantizer_bits": 1,
        "gain": {"mode": "fixed", "value": 1.0},
        "channel": {"mode": "los-random-angle"},
        "snr_points_db": [-10, 10, 20, 26],
        "receivers": ["naive-ml", "bruteforce-ml", "equivalent-ml"],
        "max_trials": 6000, "target_bit_errors": 200, "base_seed": 1
    }"#,
    // 1024 antennas, one-bit front end: spot checks at the two extremes.
    r#"{
        "antennas": 1024, "users": 1, "qam_order": 64, "quantizer_bits": 1,
        "gain": {"mode": "fixed", "value": 1.0},
        "channel": {"mode": "los-random-angle"},
        "snr_points_db": [-10, 26],
        "receivers": ["naive-ml", "bruteforce-ml", "equivalent-ml"],
        "max_trials": 2000, "target_bit_errors": 200, "base_seed": 1
    }"#,
    // 32 antennas, three-bit front end, gain matching the constellation's
    // odd-integer grid to the quantizer levels so the outer ring compresses.
    r#"{
        "antennas": 32, "users": 1, "qam_order": 64, "quantizer_bits": 3,
        "gain": {"mode": "fixed", "value": 6.480740698407861},
        "channel": {"mode": "los-random-angle"},
        "snr_points_db": [-10, 10, 20, 25],
        "receivers": ["naive-ml", "bruteforce-ml", "equivalent-ml"],
        "max_trials": 3000, "target_bit_errors": 200, "base_seed": 1
    }"#,
];

#[test]
fn criterion_7_receiver_ordering() {
    criterion(7, "receiver ordering", || {
        let mut top_ratios = Vec::new();
        for (which, text) in ORDERING_SWEEPS.iter().enumerate() {
            let config: SimConfig = serde_json::from_str(text).map_err(err)?;
            let records = run_sweep(&config).map_err(err)?;
            let points = config.snr_points_db.len();
            ensure!(records.len() == points * 3, "sweep {which}: record count");
            let at = |p: usize, r: usize| -> &BerRecord { &records[p * 3 + r] };
            let (naive, brute, equiv) = (0, 1, 2);

            // (i) Noise-dominated floor: all three intervals overlap at the
            // lowest point.
            let lo_max = (0..3).map(|r| at(0, r).ci_low).fold(f64::MIN, f64::max);
            let hi_min = (0..3).map(|r| at(0, r).ci_high).fold(f64::MAX, f64::min);
            ensure!(
                lo_max <= hi_min,
                "sweep {which}: intervals separate at {} dB",
                config.snr_points_db[0]
            );

            // (ii) At the top point the linear-front-end receiver is at least
            // an order of magnitude worse than the front-end-aware one.
            let top = points - 1;
            let (n_top, e_top) = (at(top, naive), at(top, equiv));
            ensure!(
                n_top.ber >= 10.0 * e_top.ber,
                "sweep {which}: top-point ratio {:.2} below 10",
                n_top.ber / e_top.ber
            );
            top_ratios.push(if e_top.ber > 0.0 {
                format!("{:.0}x", n_top.ber / e_top.ber)
            } else {
                "inf".into()
            });

            // (iii) The front-end-aware table never gives up more than a
            // factor of two against the exact likelihood search.
            for p in 0..points {
                let (e, b) = (at(p, equiv), at(p, brute));
                ensure!(
                    e.ci_low <= 2.0 * b.ci_high,
                    "sweep {which}: table receiver loses more than 2x at {} dB \
                     ({:.4e} vs {:.4e})",
                    config.snr_points_db[p],
                    e.ber,
                    b.ber
                );
            }

            for r in &records {
                ensure!(r.trials >= 256, "sweep {which}: fewer than 256 trials");
            }
        }
        Ok(format!("top-point ratios {}", top_ratios.join(", ")))
    });
}

#[test]
fn criterion_8_complexity_counts() {
    criterion(8, "complexity counts", || {
        let naive = complexity_naive(1024, 1, 64).map_err(err)?;
        let brute = complexity_bruteforce(1024, 1, 64).map_err(err)?;
        ensure!(naive == 1152, "large-array naive count {naive}");
        ensure!(brute == 131_072, "large-array exact-search count {brute}");
        let ratio = brute as f64 / naive as f64;
        ensure!((ratio - 1024.0 / 9.0).abs() <= 1e-10, "ratio {ratio}");
        ensure!(
            complexity_naive(2, 1, 2).map_err(err)? == 6,
            "small naive count"
        );
        ensure!(
            complexity_bruteforce(2, 1, 2).map_err(err)? == 8,
            "small exact count"
        );

        // Metered costs match the closed forms, and the table search does
        // not depend on the antenna count.
        let qam16 = QamConstellation::new(16).map_err(err)?;
        let quantizer = QuantizerSpec::new(3, 2.0).map_err(err)?;
        let noise = NoiseModel::new(0.5).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(800);
        let mut search_costs = Vec::new();
        for antennas in [16usize, 256] {
            let channel = ChannelMatrix::iid_gaussian(antennas, 1, &mut rng).map_err(err)?;
            let x = qam16.symbol(3);
            let clean = channel.times(&[x]).map_err(err)?;
            let s_o: Vec<Complex64> = clean
                .iter()
                .map(|&s| quantizer.quantize_complex(s))
                .collect();

            let table = DetectorTable::equivalent(&channel, &qam16, 1.0, &quantizer, &noise)
                .map_err(err)?;
            let combined = mrc(&channel, &s_o).map_err(err)?;
            let quad = table.detect_quadratic(&combined).map_err(err)?;
            search_costs.push(quad.multiplies);
            ensure!(
                quad.multiplies + (antennas as u64)
                    == complexity_naive(antennas, 1, 16).map_err(err)?,
                "combining plus search disagrees with the closed form at {antennas} antennas"
            );

            let exact = detect_bruteforce_ml(&channel, &qam16, 1.0, &quantizer, &noise, &s_o)
                .map_err(err)?;
            ensure!(
                exact.multiplies == complexity_bruteforce(antennas, 1, 16).map_err(err)?,
                "exact-search meter disagrees with the closed form at {antennas} antennas"
            );
        }
        ensure!(
            search_costs[0] == search_costs[1],
            "table search cost varies with antenna count: {search_costs:?}"
        );
        Ok(String::new())
    });
}

#[test]
fn criterion_9_thread_count_invariance() {
    criterion(9, "thread-count invariance", || {
        let config = r#"{
            "antennas": 32, "users": 1, "qam_order": 64, "quantizer_bits": 3,
            "gain": {"mode": "fixed", "value": 6.480740698407861},
            "channel": {"mode": "los-random-angle"},
            "snr_points_db": [10, 20],
            "receivers": ["naive-ml", "bruteforce-ml", "equivalent-ml"],
            "max_trials": 600, "target_bit_errors": 200, "base_seed": 1
        }"#;
        let dir = std::env::temp_dir();
        let config_path = dir.join(format!("quantrx-acc9-{}.json", std::process::id()));
        std::fs::write(&config_path, config).map_err(err)?;

        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            let csv = dir.join(format!(
                "quantrx-acc9-{}-t{threads}.csv",
                std::process::id()
            ));
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_quantrx"))
                .args([
                    "sweep",
                    "--config",
                    config_path.to_str().unwrap(),
                    "--out",
                    csv.to_str().unwrap(),
                ])
                .env("RAYON_NUM_THREADS", threads)
                .output()
                .map_err(err)?;
            ensure!(
                status.status.code() == Some(0),
                "sweep failed under {threads} threads: {}",
                String::from_utf8_lossy(&status.stderr)
            );
            outputs.push(std::fs::read(&csv).map_err(err)?);
        }
        ensure!(outputs[0].len() > 100, "suspiciously small results file");
        ensure!(
            outputs[0] == outputs[1],
            "results differ between thread counts"
        );
        Ok(String::new())
    });
}
