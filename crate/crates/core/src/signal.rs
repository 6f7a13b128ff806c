//! Constellations, channels, and link-budget bookkeeping.
//!
//! * [`QamConstellation`] — square QAM with per-axis reflected Gray labels,
//!   normalized to unit mean symbol energy.
//! * [`ChannelMatrix`] — a dense antennas-by-users complex matrix with the
//!   few products the receiver chain needs; constructors for line-of-sight
//!   steering columns and i.i.d. Rayleigh fading.
//! * [`SnrSpec`] — maps a cumulative post-combining SNR target to the
//!   per-component noise variance for a given channel and transmit gain.
//! * [`sample_angle`] / [`sample_noise`] — the random draws used by the
//!   Monte-Carlo layer, taking any caller-provided generator.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::NoiseModel;

/// Square QAM orders with an even number of bits per symbol.
pub const SUPPORTED_QAM_ORDERS: [usize; 4] = [4, 16, 64, 256];

/// A square QAM constellation with Gray-coded bit labels.
///
/// Symbols lie on the odd-integer grid scaled to unit mean energy. Each
/// symbol carries a `2 * log2(side)`-bit label built from independent
/// reflected Gray codes on the real and imaginary axes, so nearest
/// neighbors differ in exactly one bit.
#[derive(Debug, Clone)]
pub struct QamConstellation {
    order: usize,
    bits_per_symbol: u32,
    gain: f64,
    symbols: Vec<Complex64>,
    labels: Vec<u32>,
}

impl QamConstellation {
    /// Builds one of the supported square constellations.
    pub fn new(order: usize) -> Result<Self> {
        if !SUPPORTED_QAM_ORDERS.contains(&order) {
            return Err(Error::invalid(format!(
                "unsupported QAM order {order}; supported: {SUPPORTED_QAM_ORDERS:?}"
            )));
        }
        let side = (order as f64).sqrt().round() as usize;
        let bits_per_symbol = order.trailing_zeros();
        let axis_bits = bits_per_symbol / 2;
        // Mean energy of the unnormalized grid is 2 * (order - 1) / 3.
        let gain = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
        let mut symbols = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order);
        for i in 0..side {
            let re = (2 * i + 1) as f64 - side as f64;
            let gray_i = (i ^ (i >> 1)) as u32;
            for j in 0..side {
                let im = (2 * j + 1) as f64 - side as f64;
                let gray_j = (j ^ (j >> 1)) as u32;
                symbols.push(Complex64::new(re * gain, im * gain));
                labels.push((gray_i << axis_bits) | gray_j);
            }
        }
        Ok(QamConstellation {
            order,
            bits_per_symbol,
            gain,
            symbols,
            labels,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    /// Scale applied to the odd-integer grid for unit mean symbol energy.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn symbol(&self, idx: usize) -> Complex64 {
        self.symbols[idx]
    }

    /// Gray-coded bit label of a symbol.
    pub fn bit_label(&self, idx: usize) -> u32 {
        self.labels[idx]
    }

    /// Number of differing label bits between two symbols.
    pub fn bit_distance(&self, a: usize, b: usize) -> u32 {
        (self.labels[a] ^ self.labels[b]).count_ones()
    }

    /// Draws a uniformly random symbol index.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.order)
    }
}

/// A dense complex matrix, antennas (rows) by users (columns), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    /// Wraps row-major entries; all entries must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("channel dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("channel entries must be finite"));
        }
        Ok(ChannelMatrix { rows, cols, data })
    }

    /// Single-user line-of-sight steering column for a uniform linear array
    /// at half-wavelength spacing: antenna `m` (1-based) sees
    /// `exp(j * pi * sin(alpha) * m)`.
    pub fn los(antennas: usize, alpha: f64) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::invalid("antenna count must be positive"));
        }
        if !alpha.is_finite() {
            return Err(Error::invalid(format!(
                "arrival angle must be finite, got {alpha}"
            )));
        }
        let phase_step = std::f64::consts::PI * alpha.sin();
        let data = (1..=antennas)
            .map(|m| Complex64::from_polar(1.0, phase_step * m as f64))
            .collect();
        ChannelMatrix::new(antennas, 1, data)
    }

    /// Independent CN(0, 1) entries (Rayleigh fading) from `rng`.
    pub fn iid_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("channel dimensions must be positive"));
        }
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let data = (0..rows * cols)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * scale, im * scale)
            })
            .collect();
        ChannelMatrix::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// `H x`: combines user symbols into per-antenna samples.
    pub fn times(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::invalid(format!(
                "expected {} user entries, got {}",
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![Complex64::ZERO; self.rows];
        for (m, o) in out.iter_mut().enumerate() {
            let row = &self.data[m * self.cols..(m + 1) * self.cols];
            *o = row.iter().zip(x).map(|(&h, &xi)| h * xi).sum();
        }
        Ok(out)
    }

    /// `H^H y`: the adjoint product that maximum-ratio combining applies to
    /// per-antenna observations.
    pub fn adjoint_times(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.rows {
            return Err(Error::invalid(format!(
                "expected {} antenna entries, got {}",
                self.rows,
                y.len()
            )));
        }
        let mut out = vec![Complex64::ZERO; self.cols];
        for (m, &ym) in y.iter().enumerate() {
            let row = &self.data[m * self.cols..(m + 1) * self.cols];
            for (k, &h) in row.iter().enumerate() {
                out[k] += h.conj() * ym;
            }
        }
        Ok(out)
    }

    /// The users-by-users autocorrelation `H^H H`, row-major.
    pub fn gram(&self) -> Vec<Complex64> {
        let k = self.cols;
        let mut g = vec![Complex64::ZERO; k * k];
        for m in 0..self.rows {
            let row = &self.data[m * k..(m + 1) * k];
            for i in 0..k {
                let ci = row[i].conj();
                for j in 0..k {
                    g[i * k + j] += ci * row[j];
                }
            }
        }
        g
    }

    /// Squared Frobenius norm, `sum |h_mk|^2`.
    pub fn frob_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// A cumulative post-combining SNR operating point, in dB.
///
/// With unit-energy symbols and transmit gain `g`, coherent combining over
/// the array collects signal energy `g^2 * ||H||_F^2` against complex noise
/// power `2 * sigma2`, so the target fixes `sigma2` once the channel and
/// gain are known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    snr_db: f64,
}

impl SnrSpec {
    pub fn new(snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::invalid(format!(
                "SNR must be finite, got {snr_db} dB"
            )));
        }
        Ok(SnrSpec { snr_db })
    }

    pub fn db(&self) -> f64 {
        self.snr_db
    }

    pub fn linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// Per-component noise variance that realizes this operating point for
    /// `channel` under transmit gain `tx_gain`:
    /// `sigma2 = g^2 * ||H||_F^2 / (2 * snr)`.
    pub fn noise_for(&self, channel: &ChannelMatrix, tx_gain: f64) -> Result<NoiseModel> {
        if !tx_gain.is_finite() || tx_gain <= 0.0 {
            return Err(Error::invalid(format!(
                "transmit gain must be finite and positive, got {tx_gain}"
            )));
        }
        let energy = tx_gain * tx_gain * channel.frob_sq();
        if energy <= 0.0 {
            return Err(Error::invalid(
                "channel has zero energy; the operating point is unreachable",
            ));
        }
        NoiseModel::new(energy / (2.0 * self.linear()))
    }
}

/// Draws an arrival angle uniformly from `[-pi, pi)`.
pub fn sample_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
}

/// Draws `len` circularly symmetric complex Gaussian samples with
/// per-component variance `noise.sigma2()`.
pub fn sample_noise<R: Rng + ?Sized>(
    noise: &NoiseModel,
    len: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    let std = noise.std();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * std, im * std)
        })
        .collect()
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // frozen oracle values keep their full digits
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn constellation_rejects_unsupported_orders() {
        for order in [2usize, 8, 32, 128, 512, 0] {
            assert!(QamConstellation::new(order).is_err(), "order {order}");
        }
    }

    #[test]
    fn constellation_gains_match_closed_forms() {
        let qpsk = QamConstellation::new(4).unwrap();
        assert!(close(qpsk.gain(), std::f64::consts::FRAC_1_SQRT_2, 1e-15));
        let q16 = QamConstellation::new(16).unwrap();
        assert!(close(q16.gain(), 0.31622776601683793, 1e-15));
        let q64 = QamConstellation::new(64).unwrap();
        assert!(close(q64.gain(), 0.15430334996209191, 1e-15));
        let q256 = QamConstellation::new(256).unwrap();
        assert!(close(q256.gain(), (3.0f64 / 510.0).sqrt(), 1e-15));
    }

    #[test]
    fn constellations_have_unit_mean_energy() {
        for order in SUPPORTED_QAM_ORDERS {
            let c = QamConstellation::new(order).unwrap();
            assert_eq!(c.symbols().len(), order);
            let mean: f64 = c.symbols().iter().map(|s| s.norm_sqr()).sum::<f64>() / order as f64;
            assert!(close(mean, 1.0, 1e-12), "order {order}: {mean}");
        }
    }

    #[test]
    fn sixteen_qam_minimum_distance() {
        let c = QamConstellation::new(16).unwrap();
        let mut min = f64::INFINITY;
        for a in 0..16 {
            for b in 0..a {
                min = min.min((c.symbol(a) - c.symbol(b)).norm());
            }
        }
        assert!(close(min, 0.63245553203367587, 1e-13)); // 2 / sqrt(10)
    }

    #[test]
    fn labels_are_gray_coded() {
        for order in SUPPORTED_QAM_ORDERS {
            let c = QamConstellation::new(order).unwrap();
            let side = (order as f64).sqrt() as usize;
            // Labels are a permutation of 0..order.
            let mut seen = vec![false; order];
            for idx in 0..order {
                let l = c.bit_label(idx) as usize;
                assert!(l < order && !seen[l]);
                seen[l] = true;
            }
            // Axis-adjacent symbols differ in exactly one label bit.
            for i in 0..side {
                for j in 0..side {
                    let idx = i * side + j;
                    if j + 1 < side {
                        assert_eq!(c.bit_distance(idx, idx + 1), 1);
                    }
                    if i + 1 < side {
                        assert_eq!(c.bit_distance(idx, idx + side), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn los_column_walks_the_unit_circle() {
        // sin(pi/2) = 1: phases are pi * m, so entries alternate -1, +1.
        let h = ChannelMatrix::los(4, std::f64::consts::FRAC_PI_2).unwrap();
        let want = [-1.0, 1.0, -1.0, 1.0];
        for (m, &w) in want.iter().enumerate() {
            assert!(close(h.get(m, 0).re, w, 1e-12));
            assert!(close(h.get(m, 0).im, 0.0, 1e-12));
        }
        // Unit modulus per antenna, so the energy equals the antenna count.
        let h = ChannelMatrix::los(257, 0.3).unwrap();
        for m in 0..257 {
            assert!(close(h.get(m, 0).norm(), 1.0, 1e-13));
        }
        assert!(close(h.frob_sq(), 257.0, 1e-9));
        // Broadside (alpha = 0) is an all-ones column.
        let h = ChannelMatrix::los(3, 0.0).unwrap();
        for m in 0..3 {
            assert!(close((h.get(m, 0) - Complex64::ONE).norm(), 0.0, 1e-15));
        }
    }

    #[test]
    fn matrix_products_match_hand_computation() {
        // H = [[1, j], [2, -1]]
        let h = ChannelMatrix::new(
            2,
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        )
        .unwrap();
        let x = [Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0)];
        let hx = h.times(&x).unwrap();
        assert_eq!(hx[0], Complex64::new(-1.0, 1.0)); // (1+j) + j*2j = 1+j-2
        assert_eq!(hx[1], Complex64::new(2.0, 0.0)); // 2(1+j) - 2j
        let y = [Complex64::new(1.0, -1.0), Complex64::new(0.0, 1.0)];
        let hy = h.adjoint_times(&y).unwrap();
        assert_eq!(hy[0], Complex64::new(1.0, 1.0)); // (1-j) + 2j
        assert_eq!(hy[1], Complex64::new(-1.0, -2.0)); // -j(1-j) - j
        let g = h.gram();
        assert_eq!(g[0], Complex64::new(5.0, 0.0)); // |1|^2 + |2|^2
        assert_eq!(g[3], Complex64::new(2.0, 0.0)); // |j|^2 + |-1|^2
        assert_eq!(g[1], Complex64::new(-2.0, 1.0)); // conj(1)*j + conj(2)*(-1)
        assert_eq!(g[2], g[1].conj());
        assert!(close(h.frob_sq(), 7.0, 1e-15));
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let h = ChannelMatrix::los(4, 0.1).unwrap();
        assert!(h.times(&[Complex64::ONE, Complex64::ONE]).is_err());
        assert!(h.adjoint_times(&[Complex64::ONE; 3]).is_err());
        assert!(ChannelMatrix::new(2, 2, vec![Complex64::ZERO; 3]).is_err());
        assert!(ChannelMatrix::new(0, 1, vec![]).is_err());
        assert!(ChannelMatrix::new(1, 1, vec![Complex64::new(f64::NAN, 0.0)]).is_err());
        assert!(ChannelMatrix::los(0, 0.0).is_err());
        assert!(ChannelMatrix::los(4, f64::INFINITY).is_err());
    }

    #[test]
    fn snr_spec_reproduces_reference_noise_variance() {
        // 30 dB cumulative over 1024 unit-modulus antennas at unit gain:
        // complex noise power 1.024, per-component variance 0.512.
        let h = ChannelMatrix::los(1024, std::f64::consts::PI / 12.0).unwrap();
        let snr = SnrSpec::new(30.0).unwrap();
        let noise = snr.noise_for(&h, 1.0).unwrap();
        assert!(close(noise.sigma2(), 0.512, 1e-9));
        // Scaling the gain by 2 scales the variance by 4.
        let noise2 = snr.noise_for(&h, 2.0).unwrap();
        assert!(close(noise2.sigma2(), 2.048, 1e-9));
        assert!(snr.noise_for(&h, 0.0).is_err());
        assert!(SnrSpec::new(f64::NAN).is_err());
    }

    #[test]
    fn sampled_angles_cover_the_half_open_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..20_000 {
            let a = sample_angle(&mut rng);
            assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&a));
            lo = lo.min(a);
            hi = hi.max(a);
        }
        // The draws actually spread over the interval.
        assert!(lo < -3.0 && hi > 3.0);
    }

    #[test]
    fn sampled_noise_has_the_declared_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = NoiseModel::new(0.8).unwrap();
        let n = 200_000;
        let draws = sample_noise(&noise, n, &mut rng);
        let mean: Complex64 = draws.iter().sum::<Complex64>() / n as f64;
        let var_re: f64 = draws.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
        let var_im: f64 = draws.iter().map(|z| z.im * z.im).sum::<f64>() / n as f64;
        let cross: f64 = draws.iter().map(|z| z.re * z.im).sum::<f64>() / n as f64;
        assert!(mean.norm() < 0.01);
        assert!(close(var_re, 0.8, 0.02));
        assert!(close(var_im, 0.8, 0.02));
        assert!(cross.abs() < 0.01);
        // The noiseless model draws exact zeros.
        let silent = sample_noise(&NoiseModel::noiseless(), 4, &mut rng);
        assert!(silent.iter().all(|z| z.norm() == 0.0));
    }
}
