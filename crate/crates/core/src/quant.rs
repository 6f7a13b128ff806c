//! Uniform mid-rise quantization and its statistical description.
//!
//! A `b`-bit uniform mid-rise quantizer with step `delta` has `R = 2^b`
//! output levels placed at odd multiples of `delta / 2`, symmetric about
//! zero; inputs beyond `±(R - 1) * delta / 2` clip to the outermost levels.
//! Complex samples are quantized componentwise.
//!
//! When the quantizer input is a wanted value plus Gaussian observation
//! noise, the output is a discrete random variable. This module provides
//! that output law ([`QuantizerSpec::output_probability`]), its mean — the
//! equivalent transfer function ([`QuantizerSpec::etf_real`]) — and the
//! residual after subtracting that mean ([`QuantizerSpec::equivalent_noise`]),
//! which is uncorrelated with the wanted signal and across antennas and so
//! plays the role of an additive noise term in receiver analysis.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported quantizer width, in bits.
///
/// The transfer-function evaluation walks all `R - 1` interior cell
/// boundaries, so the width is capped where that walk stays cheap.
pub const MAX_BITS: u32 = 24;

/// A uniform mid-rise quantizer: width in bits and step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    bits: u32,
    delta: f64,
}

/// Circularly symmetric complex Gaussian observation noise at the quantizer
/// input, parameterized by the variance of each real component.
///
/// The total complex variance is `2 * sigma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma2: f64,
}

impl NoiseModel {
    /// Noise with per-component variance `sigma2 > 0`.
    pub fn new(sigma2: f64) -> Result<Self> {
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::invalid(format!(
                "noise variance must be finite and positive, got {sigma2}"
            )));
        }
        Ok(NoiseModel { sigma2 })
    }

    /// The deterministic limit: no observation noise at all.
    ///
    /// In this limit the output law degenerates to a point mass and the
    /// transfer function coincides with the quantizer itself.
    pub fn noiseless() -> Self {
        NoiseModel { sigma2: 0.0 }
    }

    /// Variance of each real component.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Standard deviation of each real component.
    pub fn std(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma2 == 0.0
    }
}

impl QuantizerSpec {
    /// Builds a quantizer with `1 <= bits <= MAX_BITS` and a finite,
    /// positive step.
    pub fn new(bits: u32, delta: f64) -> Result<Self> {
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(Error::invalid(format!(
                "quantizer width must be between 1 and {MAX_BITS} bits, got {bits}"
            )));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::invalid(format!(
                "quantizer step must be finite and positive, got {delta}"
            )));
        }
        Ok(QuantizerSpec { bits, delta })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of output levels, `R = 2^bits`.
    pub fn resolution(&self) -> usize {
        1usize << self.bits
    }

    /// The `r`-th output level (0-based from the most negative),
    /// `(2 * (r + 1) - R - 1) * delta / 2`: odd multiples of half the step.
    pub fn level(&self, r: usize) -> f64 {
        let half = (self.resolution() / 2) as f64;
        self.delta * (r as f64 - half + 0.5)
    }

    /// All output levels in ascending order.
    pub fn levels(&self) -> Vec<f64> {
        (0..self.resolution()).map(|r| self.level(r)).collect()
    }

    /// Magnitude of the outermost levels, `(R - 1) * delta / 2`.
    pub fn max_output(&self) -> f64 {
        (self.resolution() as f64 - 1.0) * self.delta / 2.0
    }

    /// Input magnitude beyond which the quantizer clips,
    /// `(R - 2) * delta / 2` (zero for the 1-bit case).
    pub fn saturation_bound(&self) -> f64 {
        (self.resolution() as f64 - 2.0) * self.delta / 2.0
    }

    /// Index of the cell a real input falls into.
    ///
    /// Cells are half-open `[level - delta/2, level + delta/2)`, with the
    /// outermost cells extending to infinity. `s` must not be NaN.
    pub fn level_index(&self, s: f64) -> usize {
        debug_assert!(!s.is_nan(), "quantizer input must not be NaN");
        let r = self.resolution();
        let half = (r / 2) as f64;
        let cell = (s / self.delta).floor() + half;
        // Clamp in floating point before casting so huge inputs cannot wrap.
        cell.clamp(0.0, (r - 1) as f64) as usize
    }

    /// Quantizes a real sample: rounds to the containing cell's level and
    /// clips to the outermost levels.
    pub fn quantize_real(&self, s: f64) -> f64 {
        self.level(self.level_index(s))
    }

    /// Quantizes a complex sample componentwise.
    pub fn quantize_complex(&self, s: Complex64) -> Complex64 {
        Complex64::new(self.quantize_real(s.re), self.quantize_real(s.im))
    }

    /// Probability that the quantizer emits level `r` when the input is the
    /// wanted value `s_l` plus one real noise component of `noise`.
    ///
    /// Evaluated through complementary error functions arranged so that both
    /// deep saturation and near-certain cells stay accurate; the result is
    /// clamped to be nonnegative.
    pub fn output_probability(&self, noise: &NoiseModel, s_l: f64, r: usize) -> Result<f64> {
        let res = self.resolution();
        if r >= res {
            return Err(Error::invalid(format!(
                "level index {r} out of range for a {}-level quantizer",
                res
            )));
        }
        if !s_l.is_finite() {
            return Err(Error::invalid(format!("input must be finite, got {s_l}")));
        }
        if noise.is_noiseless() {
            return Ok(if self.level_index(s_l) == r { 1.0 } else { 0.0 });
        }
        let denom = (2.0 * noise.sigma2()).sqrt();
        let q = self.level(r);
        let half = self.delta / 2.0;
        let p = if r == 0 {
            // Lower saturation cell: everything below its upper boundary.
            let b = (q + half - s_l) / denom;
            0.5 * libm::erfc(-b)
        } else if r == res - 1 {
            // Upper saturation cell: everything above its lower boundary.
            let a = (q - half - s_l) / denom;
            0.5 * libm::erfc(a)
        } else {
            let a = (q - half - s_l) / denom;
            let b = (q + half - s_l) / denom;
            if a >= 0.0 {
                0.5 * (libm::erfc(a) - libm::erfc(b))
            } else if b <= 0.0 {
                0.5 * (libm::erfc(-b) - libm::erfc(-a))
            } else {
                0.5 * (libm::erf(b) - libm::erf(a))
            }
        };
        Ok(p.max(0.0))
    }

    /// Equivalent transfer function: the mean quantizer output when the
    /// input is `s` plus one real noise component of `noise`.
    ///
    /// Computed as the top level minus the step times the stacked cell
    /// cumulative probabilities, which needs one complementary error
    /// function per interior boundary and is exact for the noiseless limit,
    /// where it reduces to the quantizer itself.
    pub fn etf_real(&self, noise: &NoiseModel, s: f64) -> f64 {
        debug_assert!(s.is_finite(), "transfer-function input must be finite");
        if noise.is_noiseless() {
            return self.quantize_real(s);
        }
        let res = self.resolution();
        let denom = (2.0 * noise.sigma2()).sqrt();
        let mut acc = 0.0;
        for r in 0..res - 1 {
            // Upper boundary of cell r; P(input noise carries s below it).
            let b = self.level(r) + self.delta / 2.0;
            acc += 0.5 * libm::erfc((s - b) / denom);
        }
        self.level(res - 1) - self.delta * acc
    }

    /// Componentwise complex extension of [`Self::etf_real`].
    pub fn etf_complex(&self, noise: &NoiseModel, s: Complex64) -> Complex64 {
        Complex64::new(self.etf_real(noise, s.re), self.etf_real(noise, s.im))
    }

    /// Residual between observed quantizer outputs and the equivalent
    /// transfer function of the wanted inputs: `s_o[m] - etf(s_l[m])`.
    ///
    /// This residual has zero mean conditioned on the wanted signal, so it
    /// is uncorrelated with any function of that signal and, componentwise,
    /// across antennas.
    pub fn equivalent_noise(
        &self,
        noise: &NoiseModel,
        s_o: &[Complex64],
        s_l: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        if s_o.len() != s_l.len() {
            return Err(Error::invalid(format!(
                "output and input vectors must have equal length, got {} and {}",
                s_o.len(),
                s_l.len()
            )));
        }
        Ok(s_o
            .iter()
            .zip(s_l.iter())
            .map(|(&o, &l)| o - self.etf_complex(noise, l))
            .collect())
    }
}
