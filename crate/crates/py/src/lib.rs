//! Python bindings for the quantrx core: the quantizer model, constellation
//! and channel builders, the three detectors, and the Monte-Carlo drivers.
//!
//! Noise is passed as a per-component variance everywhere; zero selects the
//! noiseless model. Sweep and scatter configurations arrive as JSON strings
//! with the same schema the command-line tool reads, so one config file
//! drives both front ends.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quantrx::mc;
use quantrx::quant::{NoiseModel, QuantizerSpec};
use quantrx::rx;
use quantrx::signal;

fn py_err(e: quantrx::Error) -> PyErr {
    match e {
        quantrx::Error::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn noise_from(sigma2: f64) -> PyResult<NoiseModel> {
    if sigma2 == 0.0 {
        Ok(NoiseModel::noiseless())
    } else {
        NoiseModel::new(sigma2).map_err(py_err)
    }
}

/// Uniform mid-rise quantizer applied per real component.
#[pyclass(name = "Quantizer")]
struct PyQuantizer {
    inner: QuantizerSpec,
}

#[pymethods]
impl PyQuantizer {
    #[new]
    fn new(bits: u32, delta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: QuantizerSpec::new(bits, delta).map_err(py_err)?,
        })
    }

    #[getter]
    fn bits(&self) -> u32 {
        self.inner.bits()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.inner.resolution()
    }

    #[getter]
    fn max_output(&self) -> f64 {
        self.inner.max_output()
    }

    #[getter]
    fn saturation_bound(&self) -> f64 {
        self.inner.saturation_bound()
    }

    fn levels(&self) -> Vec<f64> {
        self.inner.levels()
    }

    fn level_index(&self, s: f64) -> usize {
        self.inner.level_index(s)
    }

    fn quantize(&self, s: f64) -> f64 {
        self.inner.quantize_real(s)
    }

    fn quantize_complex(&self, z: Complex64) -> Complex64 {
        self.inner.quantize_complex(z)
    }

    /// Probability of output level `r` given the noiseless input `s_l`.
    fn output_probability(&self, sigma2: f64, s_l: f64, r: usize) -> PyResult<f64> {
        self.inner
            .output_probability(&noise_from(sigma2)?, s_l, r)
            .map_err(py_err)
    }

    /// Mean output for input `s`: the equivalent transfer function.
    fn etf(&self, sigma2: f64, s: f64) -> PyResult<f64> {
        Ok(self.inner.etf_real(&noise_from(sigma2)?, s))
    }

    fn etf_complex(&self, sigma2: f64, z: Complex64) -> PyResult<Complex64> {
        Ok(self.inner.etf_complex(&noise_from(sigma2)?, z))
    }

    /// Observed outputs minus their conditional means, per antenna.
    fn equivalent_noise(
        &self,
        sigma2: f64,
        s_o: Vec<Complex64>,
        s_l: Vec<Complex64>,
    ) -> PyResult<Vec<Complex64>> {
        self.inner
            .equivalent_noise(&noise_from(sigma2)?, &s_o, &s_l)
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Quantizer(bits={}, delta={})",
            self.inner.bits(),
            self.inner.delta()
        )
    }
}

/// Square QAM constellation with Gray-coded bit labels, unit average energy.
#[pyclass(name = "Constellation")]
struct PyConstellation {
    inner: signal::QamConstellation,
}

#[pymethods]
impl PyConstellation {
    #[new]
    fn new(order: usize) -> PyResult<Self> {
        Ok(Self {
            inner: signal::QamConstellation::new(order).map_err(py_err)?,
        })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn bits_per_symbol(&self) -> u32 {
        self.inner.bits_per_symbol()
    }

    #[getter]
    fn gain(&self) -> f64 {
        self.inner.gain()
    }

    fn symbols(&self) -> Vec<Complex64> {
        self.inner.symbols().to_vec()
    }

    fn symbol(&self, idx: usize) -> PyResult<Complex64> {
        if idx >= self.inner.order() {
            return Err(PyValueError::new_err(format!(
                "symbol index {idx} out of range"
            )));
        }
        Ok(self.inner.symbol(idx))
    }

    fn bit_label(&self, idx: usize) -> PyResult<u32> {
        if idx >= self.inner.order() {
            return Err(PyValueError::new_err(format!(
                "symbol index {idx} out of range"
            )));
        }
        Ok(self.inner.bit_label(idx))
    }

    /// Hamming distance between two symbols' bit labels.
    fn bit_distance(&self, a: usize, b: usize) -> PyResult<u32> {
        if a >= self.inner.order() || b >= self.inner.order() {
            return Err(PyValueError::new_err("symbol index out of range"));
        }
        Ok(self.inner.bit_distance(a, b))
    }

    fn __repr__(&self) -> String {
        format!("Constellation(order={})", self.inner.order())
    }
}

/// Complex channel matrix, antennas by users.
#[pyclass(name = "Channel")]
struct PyChannel {
    inner: signal::ChannelMatrix,
}

#[pymethods]
impl PyChannel {
    #[new]
    fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self {
            inner: signal::ChannelMatrix::new(rows, cols, entries).map_err(py_err)?,
        })
    }

    /// Single-user uniform linear array steering response for arrival
    /// angle `alpha` (radians).
    #[staticmethod]
    fn los(antennas: usize, alpha: f64) -> PyResult<Self> {
        Ok(Self {
            inner: signal::ChannelMatrix::los(antennas, alpha).map_err(py_err)?,
        })
    }

    /// Unit-variance circularly symmetric Gaussian entries from `seed`.
    #[staticmethod]
    fn iid_gaussian(rows: usize, cols: usize, seed: u64) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            inner: signal::ChannelMatrix::iid_gaussian(rows, cols, &mut rng).map_err(py_err)?,
        })
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    fn entries(&self) -> Vec<Complex64> {
        self.inner.entries().to_vec()
    }

    fn frob_sq(&self) -> f64 {
        self.inner.frob_sq()
    }

    fn times(&self, x: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        self.inner.times(&x).map_err(py_err)
    }

    fn adjoint_times(&self, y: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        self.inner.adjoint_times(&y).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(rows={}, cols={})",
            self.inner.rows(),
            self.inner.cols()
        )
    }
}

/// One detection outcome: per-user symbol indices, the winning metric, and
/// the metered complex-multiply cost.
#[pyclass(name = "Detection", get_all)]
struct PyDetection {
    symbols: Vec<usize>,
    metric: f64,
    multiplies: u64,
}

impl From<rx::DetectionResult> for PyDetection {
    fn from(r: rx::DetectionResult) -> Self {
        Self {
            symbols: r.symbols,
            metric: r.metric,
            multiplies: r.multiplies,
        }
    }
}

#[pymethods]
impl PyDetection {
    fn __repr__(&self) -> String {
        format!(
            "Detection(symbols={:?}, metric={}, multiplies={})",
            self.symbols, self.metric, self.multiplies
        )
    }
}

/// Quadratic-search detector over precomputed candidate predictions.
#[pyclass(name = "Detector")]
struct PyDetector {
    table: rx::DetectorTable,
    channel: signal::ChannelMatrix,
}

#[pymethods]
impl PyDetector {
    /// Table that assumes a transparent front end.
    #[staticmethod]
    fn naive(channel: &PyChannel, constellation: &PyConstellation, gain: f64) -> PyResult<Self> {
        Ok(Self {
            table: rx::DetectorTable::naive(&channel.inner, &constellation.inner, gain)
                .map_err(py_err)?,
            channel: channel.inner.clone(),
        })
    }

    /// Table that folds the front end's mean response into each candidate.
    #[staticmethod]
    fn equivalent(
        channel: &PyChannel,
        constellation: &PyConstellation,
        gain: f64,
        quantizer: &PyQuantizer,
        sigma2: f64,
    ) -> PyResult<Self> {
        Ok(Self {
            table: rx::DetectorTable::equivalent(
                &channel.inner,
                &constellation.inner,
                gain,
                &quantizer.inner,
                &noise_from(sigma2)?,
            )
            .map_err(py_err)?,
            channel: channel.inner.clone(),
        })
    }

    #[getter]
    fn candidate_count(&self) -> usize {
        self.table.candidate_count()
    }

    fn candidate_symbols(&self, candidate: usize) -> PyResult<Vec<usize>> {
        if candidate >= self.table.candidate_count() {
            return Err(PyValueError::new_err("candidate index out of range"));
        }
        Ok(self.table.candidate_symbols(candidate))
    }

    /// Predicted combined observation for one candidate, one entry per user.
    fn prediction(&self, candidate: usize) -> PyResult<Vec<Complex64>> {
        if candidate >= self.table.candidate_count() {
            return Err(PyValueError::new_err("candidate index out of range"));
        }
        Ok(self.table.prediction(candidate).to_vec())
    }

    /// Combine per-antenna observations and pick the closest candidate.
    fn detect(&self, s_o: Vec<Complex64>) -> PyResult<PyDetection> {
        let combined = rx::mrc(&self.channel, &s_o).map_err(py_err)?;
        Ok(self
            .table
            .detect_quadratic(&combined)
            .map_err(py_err)?
            .into())
    }
}

/// Exact maximum-likelihood search straight from quantizer output levels.
#[pyfunction]
fn detect_bruteforce(
    channel: &PyChannel,
    constellation: &PyConstellation,
    gain: f64,
    quantizer: &PyQuantizer,
    sigma2: f64,
    s_o: Vec<Complex64>,
) -> PyResult<PyDetection> {
    rx::detect_bruteforce_ml(
        &channel.inner,
        &constellation.inner,
        gain,
        &quantizer.inner,
        &noise_from(sigma2)?,
        &s_o,
    )
    .map(Into::into)
    .map_err(py_err)
}

/// Complex multiplies per detected vector for the combine-then-search
/// receiver.
#[pyfunction]
fn complexity_naive(antennas: usize, users: usize, qam_order: usize) -> PyResult<u64> {
    rx::complexity_naive(antennas, users, qam_order).map_err(py_err)
}

/// Complex multiplies per detected vector for the exact likelihood search.
#[pyfunction]
fn complexity_bruteforce(antennas: usize, users: usize, qam_order: usize) -> PyResult<u64> {
    rx::complexity_bruteforce(antennas, users, qam_order).map_err(py_err)
}

/// 95% Wilson score interval for `errors` out of `trials`.
#[pyfunction]
fn wilson_interval(errors: u64, trials: u64) -> PyResult<(f64, f64)> {
    mc::wilson_interval(errors, trials).map_err(py_err)
}

fn record_to_dict<'py>(
    py: Python<'py>,
    r: &mc::BerRecord,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    use pyo3::types::PyDict;
    let d = PyDict::new(py);
    d.set_item("receiver", r.receiver.as_str())?;
    d.set_item("snr_db", r.snr_db)?;
    d.set_item("trials", r.trials)?;
    d.set_item("bit_errors", r.bit_errors)?;
    d.set_item("symbol_errors", r.symbol_errors)?;
    d.set_item("bits_total", r.bits_total)?;
    d.set_item("symbols_total", r.symbols_total)?;
    d.set_item("ber", r.ber)?;
    d.set_item("ser", r.ser)?;
    d.set_item("ci_low", r.ci_low)?;
    d.set_item("ci_high", r.ci_high)?;
    Ok(d)
}

/// Run a BER sweep from a JSON configuration string; returns one dict per
/// (SNR point, receiver) pair in sweep order.
#[pyfunction]
fn run_sweep<'py>(
    py: Python<'py>,
    config_json: &str,
) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
    let config: mc::SimConfig = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("bad sweep config: {e}")))?;
    let records = py.detach(|| mc::run_sweep(&config)).map_err(py_err)?;
    records.iter().map(|r| record_to_dict(py, r)).collect()
}

/// Combined-observation scatter data from a JSON configuration string:
/// a dict with `predictions`, `naive_predictions`, and `points`, each a
/// list of `(symbol, re, im)` tuples.
#[pyfunction]
fn mrc_scatter<'py>(
    py: Python<'py>,
    config_json: &str,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    use pyo3::types::PyDict;
    let config: mc::ScatterConfig = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("bad scatter config: {e}")))?;
    let data = py.detach(|| mc::mrc_scatter(&config)).map_err(py_err)?;
    let tuples = |v: &[mc::ScatterPoint]| -> Vec<(usize, f64, f64)> {
        v.iter().map(|p| (p.symbol, p.re, p.im)).collect()
    };
    let d = PyDict::new(py);
    d.set_item("predictions", tuples(&data.predictions))?;
    d.set_item("naive_predictions", tuples(&data.naive_predictions))?;
    d.set_item("points", tuples(&data.points))?;
    Ok(d)
}

#[pymodule]
fn quantrx_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuantizer>()?;
    m.add_class::<PyConstellation>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyDetector>()?;
    m.add_class::<PyDetection>()?;
    m.add_function(wrap_pyfunction!(detect_bruteforce, m)?)?;
    m.add_function(wrap_pyfunction!(complexity_naive, m)?)?;
    m.add_function(wrap_pyfunction!(complexity_bruteforce, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(mrc_scatter, m)?)?;
    Ok(())
}
