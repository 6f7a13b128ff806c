//! Maximum-ratio combining and multi-user detection.
//!
//! The receiver first applies maximum-ratio combining ([`mrc`]) to the
//! per-antenna front-end outputs, collapsing the array to one complex value
//! per user. Detection then picks the candidate transmit vector that best
//! explains the combined observation:
//!
//! * [`DetectorTable`] drives a quadratic search over all candidate vectors,
//!   with predictions built either as if the front end were transparent
//!   ([`DetectorTable::naive`]) or by passing each candidate through the
//!   front end's equivalent transfer function ([`DetectorTable::equivalent`]).
//!   The two share the same per-candidate cost, so awareness of the front
//!   end is free at detection time.
//! * [`detect_bruteforce_ml`] skips combining entirely and maximizes the
//!   exact per-antenna output likelihood — the reference detector, at a per
//!   candidate cost that grows with the array size.
//!
//! [`complexity_naive`] and [`complexity_bruteforce`] give closed-form
//! complex-multiply counts per detected vector; the detectors also meter
//! their own multiplies so the formulas can be checked against execution.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quant::{NoiseModel, QuantizerSpec};
use crate::signal::{ChannelMatrix, QamConstellation};

/// Largest supported number of candidate transmit vectors in a table or
/// likelihood search (`qam_order ^ users`).
pub const MAX_CANDIDATES: u64 = 1 << 20;

/// Log-probability floor that stands in for zero likelihood factors, so a
/// candidate ruled out by one antenna still carries a finite, strictly
/// worse score than any candidate with nonzero likelihood.
const LIKELIHOOD_FLOOR: f64 = 1e-300;

/// Relative tolerance when checking that an observation equals a level.
const LEVEL_MATCH_TOL: f64 = 1e-9;

/// How a detector table models the receiver front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorMode {
    /// Predictions assume the front end passes samples through unchanged.
    Naive,
    /// Predictions fold the front end's equivalent transfer function into
    /// each candidate.
    Equivalent,
}

/// Outcome of one detection: the decided per-user symbol indices, the
/// winning metric (squared-distance for the quadratic search, log-likelihood
/// for the exact search), and the complex multiplies spent.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub symbols: Vec<usize>,
    pub metric: f64,
    pub multiplies: u64,
}

/// Precomputed candidate predictions for the quadratic detector.
#[derive(Debug, Clone)]
pub struct DetectorTable {
    mode: DetectorMode,
    users: usize,
    qam_order: usize,
    candidates: usize,
    /// Candidate predictions in the combined domain, row-major
    /// `candidates x users`; candidate index counts user 0 most significant.
    predictions: Vec<Complex64>,
    /// Inverse of the channel autocorrelation `H^H H`, row-major
    /// `users x users`; weights the quadratic form.
    a_matrix: Vec<Complex64>,
}

/// Maximum-ratio combining: `H^H` applied to the per-antenna observations,
/// one output per user. Costs `antennas * users` complex multiplies.
pub fn mrc(channel: &ChannelMatrix, s_o: &[Complex64]) -> Result<Vec<Complex64>> {
    channel.adjoint_times(s_o)
}

impl DetectorTable {
    /// Builds a table that ignores the front end: each candidate `x` is
    /// predicted as `H^H H (g x)`.
    pub fn naive(
        channel: &ChannelMatrix,
        constellation: &QamConstellation,
        tx_gain: f64,
    ) -> Result<Self> {
        Self::build(DetectorMode::Naive, channel, constellation, tx_gain, None)
    }

    /// Builds a front-end-aware table: each candidate `x` is predicted as
    /// `H^H F(g H x)` with `F` the componentwise equivalent transfer
    /// function of `quantizer` under `noise`.
    pub fn equivalent(
        channel: &ChannelMatrix,
        constellation: &QamConstellation,
        tx_gain: f64,
        quantizer: &QuantizerSpec,
        noise: &NoiseModel,
    ) -> Result<Self> {
        Self::build(
            DetectorMode::Equivalent,
            channel,
            constellation,
            tx_gain,
            Some((quantizer, noise)),
        )
    }

    fn build(
        mode: DetectorMode,
        channel: &ChannelMatrix,
        constellation: &QamConstellation,
        tx_gain: f64,
        front_end: Option<(&QuantizerSpec, &NoiseModel)>,
    ) -> Result<Self> {
        if !tx_gain.is_finite() || tx_gain <= 0.0 {
            return Err(Error::invalid(format!(
                "transmit gain must be finite and positive, got {tx_gain}"
            )));
        }
        let users = channel.cols();
        let candidates = candidate_count(constellation.order(), users)?;
        let gram = channel.gram();
        let a_matrix = invert_hermitian(users, &gram)?;

        let mut predictions = vec![Complex64::ZERO; candidates * users];
        let mut digits = vec![0usize; users];
        let mut gained = vec![Complex64::ZERO; users];
        for c in 0..candidates {
            decode_candidate(c, constellation.order(), &mut digits);
            for (g, &d) in gained.iter_mut().zip(digits.iter()) {
                *g = constellation.symbol(d) * tx_gain;
            }
            let row = &mut predictions[c * users..(c + 1) * users];
            match mode {
                DetectorMode::Naive => {
                    // H^H H (g x) through the precomputed autocorrelation.
                    for (i, out) in row.iter_mut().enumerate() {
                        let gr = &gram[i * users..(i + 1) * users];
                        *out = gr.iter().zip(&gained).map(|(&a, &b)| a * b).sum();
                    }
                }
                DetectorMode::Equivalent => {
                    let (quantizer, noise) =
                        front_end.expect("equivalent mode carries a front end");
                    let s_l = channel.times(&gained)?;
                    let f: Vec<Complex64> = s_l
                        .iter()
                        .map(|&z| quantizer.etf_complex(noise, z))
                        .collect();
                    row.copy_from_slice(&channel.adjoint_times(&f)?);
                }
            }
        }
        Ok(DetectorTable {
            mode,
            users,
            qam_order: constellation.order(),
            candidates,
            predictions,
            a_matrix,
        })
    }

    pub fn mode(&self) -> DetectorMode {
        self.mode
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn qam_order(&self) -> usize {
        self.qam_order
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates
    }

    /// Per-user symbol indices encoded by a candidate index.
    pub fn candidate_symbols(&self, candidate: usize) -> Vec<usize> {
        let mut digits = vec![0usize; self.users];
        decode_candidate(candidate, self.qam_order, &mut digits);
        digits
    }

    /// The predicted combined observation for one candidate.
    pub fn prediction(&self, candidate: usize) -> &[Complex64] {
        &self.predictions[candidate * self.users..(candidate + 1) * self.users]
    }

    /// The inverse channel autocorrelation weighting the quadratic form,
    /// row-major `users x users`.
    pub fn a_matrix(&self) -> &[Complex64] {
        &self.a_matrix
    }

    /// Picks the candidate minimizing the weighted squared distance
    /// `(y - prediction)^H A (y - prediction)` over the whole table.
    ///
    /// Ties resolve to the lowest candidate index. The metered cost is
    /// `(users^2 + users) * candidates` complex multiplies; combining the
    /// antenna observations into `y` costs `antennas * users` more.
    pub fn detect_quadratic(&self, y: &[Complex64]) -> Result<DetectionResult> {
        let k = self.users;
        if y.len() != k {
            return Err(Error::invalid(format!(
                "expected {} combined entries, got {}",
                k,
                y.len()
            )));
        }
        let mut best_c = 0usize;
        let mut best_metric = f64::INFINITY;
        let mut multiplies = 0u64;
        let mut d = vec![Complex64::ZERO; k];
        for c in 0..self.candidates {
            let pred = &self.predictions[c * k..(c + 1) * k];
            for (di, (&yi, &pi)) in d.iter_mut().zip(y.iter().zip(pred)) {
                *di = yi - pi;
            }
            let mut metric = 0.0;
            for i in 0..k {
                let row = &self.a_matrix[i * k..(i + 1) * k];
                let ti: Complex64 = row.iter().zip(&d).map(|(&a, &b)| a * b).sum();
                metric += (d[i].conj() * ti).re;
            }
            multiplies += (k * k + k) as u64;
            if metric < best_metric {
                best_metric = metric;
                best_c = c;
            }
        }
        Ok(DetectionResult {
            symbols: self.candidate_symbols(best_c),
            metric: best_metric,
            multiplies,
        })
    }
}

/// Exact maximum-likelihood detection straight from the front-end outputs:
/// maximizes the summed log-probability of every antenna's observed output
/// component given each candidate transmit vector.
///
/// `s_o` must contain actual quantizer output levels. Ties resolve to the
/// lowest candidate index. The metered cost is
/// `antennas * (users + 1) * candidates` complex multiplies, counting each
/// antenna's pair of likelihood lookups as one multiply.
pub fn detect_bruteforce_ml(
    channel: &ChannelMatrix,
    constellation: &QamConstellation,
    tx_gain: f64,
    quantizer: &QuantizerSpec,
    noise: &NoiseModel,
    s_o: &[Complex64],
) -> Result<DetectionResult> {
    if !tx_gain.is_finite() || tx_gain <= 0.0 {
        return Err(Error::invalid(format!(
            "transmit gain must be finite and positive, got {tx_gain}"
        )));
    }
    let antennas = channel.rows();
    let users = channel.cols();
    if s_o.len() != antennas {
        return Err(Error::invalid(format!(
            "expected {} antenna observations, got {}",
            antennas,
            s_o.len()
        )));
    }
    let candidates = candidate_count(constellation.order(), users)?;
    // Map each observed component to its level index once, rejecting values
    // that are not actual output levels.
    let tol = quantizer.delta() * LEVEL_MATCH_TOL;
    let mut observed = Vec::with_capacity(antennas);
    for (m, &z) in s_o.iter().enumerate() {
        let r_re = quantizer.level_index(z.re);
        let r_im = quantizer.level_index(z.im);
        if (quantizer.level(r_re) - z.re).abs() > tol || (quantizer.level(r_im) - z.im).abs() > tol
        {
            return Err(Error::invalid(format!(
                "antenna {m} observation {z} is not a pair of quantizer output levels"
            )));
        }
        observed.push((r_re, r_im));
    }

    let mut digits = vec![0usize; users];
    let mut gained = vec![Complex64::ZERO; users];
    let mut best_c = 0usize;
    let mut best_metric = f64::NEG_INFINITY;
    let mut multiplies = 0u64;
    for c in 0..candidates {
        decode_candidate(c, constellation.order(), &mut digits);
        for (g, &d) in gained.iter_mut().zip(digits.iter()) {
            *g = constellation.symbol(d) * tx_gain;
        }
        let mut loglik = 0.0;
        for (m, &(r_re, r_im)) in observed.iter().enumerate() {
            let row = &channel.entries()[m * users..(m + 1) * users];
            let s_l: Complex64 = row.iter().zip(&gained).map(|(&h, &x)| h * x).sum();
            let p_re = quantizer.output_probability(noise, s_l.re, r_re)?;
            let p_im = quantizer.output_probability(noise, s_l.im, r_im)?;
            loglik += p_re.max(LIKELIHOOD_FLOOR).ln() + p_im.max(LIKELIHOOD_FLOOR).ln();
        }
        multiplies += (antennas * users + antennas) as u64;
        if loglik > best_metric {
            best_metric = loglik;
            best_c = c;
        }
    }
    let mut symbols = vec![0usize; users];
    decode_candidate(best_c, constellation.order(), &mut symbols);
    Ok(DetectionResult {
        symbols,
        metric: best_metric,
        multiplies,
    })
}

/// Complex multiplies per detected vector for combining plus the quadratic
/// table search: `antennas * users + (users^2 + users) * qam_order^users`.
pub fn complexity_naive(antennas: usize, users: usize, qam_order: usize) -> Result<u64> {
    let cands = candidate_pow(qam_order, users)?;
    let m = antennas as u64;
    let k = users as u64;
    m.checked_mul(k)
        .and_then(|mrc| {
            k.checked_mul(k + 1)
                .and_then(|per| per.checked_mul(cands))
                .and_then(|scan| mrc.checked_add(scan))
        })
        .ok_or_else(|| Error::capacity("multiply count overflows a 64-bit counter"))
}

/// Complex multiplies per detected vector for the exact likelihood search:
/// `antennas * (users + 1) * qam_order^users`.
pub fn complexity_bruteforce(antennas: usize, users: usize, qam_order: usize) -> Result<u64> {
    let cands = candidate_pow(qam_order, users)?;
    (antennas as u64)
        .checked_mul(users as u64 + 1)
        .and_then(|per| per.checked_mul(cands))
        .ok_or_else(|| Error::capacity("multiply count overflows a 64-bit counter"))
}

/// `qam_order ^ users` with domain checks but no table-size cap.
fn candidate_pow(qam_order: usize, users: usize) -> Result<u64> {
    if users == 0 {
        return Err(Error::invalid("user count must be positive"));
    }
    if qam_order == 0 {
        return Err(Error::invalid("constellation order must be positive"));
    }
    let users_u32 = u32::try_from(users).map_err(|_| Error::invalid("user count out of range"))?;
    (qam_order as u64)
        .checked_pow(users_u32)
        .ok_or_else(|| Error::capacity("candidate count overflows a 64-bit counter"))
}

/// Candidate count for an exhaustive search, capped at [`MAX_CANDIDATES`].
fn candidate_count(qam_order: usize, users: usize) -> Result<usize> {
    let cands = candidate_pow(qam_order, users)?;
    if cands > MAX_CANDIDATES {
        return Err(Error::capacity(format!(
            "{qam_order}^{users} = {cands} candidates exceed the supported {MAX_CANDIDATES}"
        )));
    }
    Ok(cands as usize)
}

/// Splits a candidate index into per-user symbol indices, user 0 most
/// significant.
fn decode_candidate(candidate: usize, qam_order: usize, digits: &mut [usize]) {
    let mut rest = candidate;
    for d in digits.iter_mut().rev() {
        *d = rest % qam_order;
        rest /= qam_order;
    }
}

/// Gauss-Jordan inverse of a small Hermitian positive-definite matrix with
/// partial pivoting, guarded against ill conditioning.
fn invert_hermitian(n: usize, a: &[Complex64]) -> Result<Vec<Complex64>> {
    debug_assert_eq!(a.len(), n * n);
    // Augmented [A | I] in working precision.
    let mut w = vec![Complex64::ZERO; n * 2 * n];
    for i in 0..n {
        for j in 0..n {
            w[i * 2 * n + j] = a[i * n + j];
        }
        w[i * 2 * n + n + i] = Complex64::ONE;
    }
    for col in 0..n {
        // Pivot on the largest remaining entry in this column.
        let mut pivot = col;
        let mut pivot_mag = w[col * 2 * n + col].norm_sqr();
        for row in col + 1..n {
            let mag = w[row * 2 * n + col].norm_sqr();
            if mag > pivot_mag {
                pivot = row;
                pivot_mag = mag;
            }
        }
        if pivot_mag == 0.0 || !pivot_mag.is_finite() {
            return Err(Error::numeric(
                "channel autocorrelation is singular; cannot weight the detector metric",
            ));
        }
        if pivot != col {
            for j in 0..2 * n {
                w.swap(col * 2 * n + j, pivot * 2 * n + j);
            }
        }
        let inv = Complex64::ONE / w[col * 2 * n + col];
        for j in 0..2 * n {
            w[col * 2 * n + j] *= inv;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = w[row * 2 * n + col];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..2 * n {
                let sub = f * w[col * 2 * n + j];
                w[row * 2 * n + j] -= sub;
            }
        }
    }
    let mut inv = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            inv[i * n + j] = w[i * 2 * n + n + j];
        }
    }
    // Condition guard: reject when ||A||_F * ||A^-1||_F blows up, which
    // would make the quadratic weighting meaningless.
    let norm_a: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let norm_inv: f64 = inv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let cond = norm_a * norm_inv;
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::numeric(format!(
            "channel autocorrelation is ill-conditioned (estimate {cond:.3e})"
        )));
    }
    Ok(inv)
}
