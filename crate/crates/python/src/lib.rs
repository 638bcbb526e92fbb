//! Python bindings: constellations, demappers, GMI, LDPC coding and the
//! sweep harness. Points cross the boundary as `(u, v)` tuples.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qci_core::channel::ChannelSpec;
use qci_core::coding::{decode_bp, ParityCheckCode};
use qci_core::demapper::{estimate_affine_compensation, AffineCompensation, DemapperKind, LlrFrame};
use qci_core::harness::{self, Family, FigureOptions};
use qci_core::rng::block_rng;
use qci_core::{geometry, metrics, Error, PlanePoint};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn pt((u, v): (f64, f64)) -> PlanePoint {
    PlanePoint::new(u, v)
}

fn family(name: &str) -> PyResult<Family> {
    match name {
        "pam" => Ok(Family::Pam),
        "qam" => Ok(Family::Qam),
        "qci" => Ok(Family::Qci),
        _ => Err(PyValueError::new_err(format!("unknown family `{name}` (pam, qam, qci)"))),
    }
}

/// Square-to-disc radial map.
#[pyfunction]
fn radial_forward(p: (f64, f64)) -> PyResult<(f64, f64)> {
    let q = geometry::radial_forward(pt(p)).map_err(err)?;
    Ok((q.u, q.v))
}

/// Inverse of `radial_forward`.
#[pyfunction]
fn radial_inverse(p: (f64, f64)) -> PyResult<(f64, f64)> {
    let q = geometry::radial_inverse(pt(p)).map_err(err)?;
    Ok((q.u, q.v))
}

#[pyclass(name = "Constellation", module = "qci", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConstellation(qci_core::Constellation);

#[pymethods]
impl PyConstellation {
    /// Peak-normalised constellation of `family` ("pam", "qam", "qci") and size `order`.
    #[new]
    fn new(family_name: &str, order: usize) -> PyResult<Self> {
        let m = harness::build_modulation(&family(family_name)?, order).map_err(err)?;
        Ok(PyConstellation(m.tx().clone()))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        qci_core::Constellation::load(path).map(PyConstellation).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    #[getter]
    fn bits_per_symbol(&self) -> usize {
        self.0.bits_per_symbol()
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.0.points().iter().map(|p| (p.u, p.v)).collect()
    }

    #[getter]
    fn labels(&self) -> Vec<u32> {
        self.0.labels().to_vec()
    }

    /// `(peak_power, avg_power, papr_db)`.
    fn power_stats(&self) -> (f64, f64, f64) {
        let s = self.0.power_stats();
        (s.peak_power, s.avg_power, s.papr_db())
    }

    /// Nearest-neighbour index pairs whose labels differ in more than one bit.
    fn gray_violations(&self) -> Vec<(usize, usize)> {
        self.0.gray_check().violations
    }

    fn __len__(&self) -> usize {
        self.0.order()
    }

    fn __repr__(&self) -> String {
        format!("Constellation('{}', M={})", self.0.name(), self.0.order())
    }
}

#[pyclass(name = "Demapper", module = "qci")]
struct PyDemapper {
    inner: qci_core::Demapper,
    distance_evals: u64,
}

#[pymethods]
impl PyDemapper {
    /// `kind` is one of exact2d, maxlog2d, qam_decomposed, qci_lcd,
    /// qci_lcd_compensated, qci_remapped_2d.
    #[new]
    fn new(kind: &str, family_name: &str, order: usize) -> PyResult<Self> {
        let kind: DemapperKind = kind.parse().map_err(err)?;
        let inner = harness::demapper_for(&family(family_name)?, order, kind).map_err(err)?;
        Ok(PyDemapper { inner, distance_evals: 0 })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().as_str()
    }

    #[getter]
    fn constellation(&self) -> PyConstellation {
        PyConstellation(self.inner.tx().clone())
    }

    /// Running total of point-distance evaluations.
    #[getter]
    fn distance_evals(&self) -> u64 {
        self.distance_evals
    }

    /// LLRs (positive favours bit 0), one row of m values per received point.
    fn demap(&mut self, points: Vec<(f64, f64)>, n0: f64) -> PyResult<Vec<Vec<f64>>> {
        let m = self.inner.tx().bits_per_symbol();
        let mut frame = LlrFrame::with_capacity(m * points.len());
        for p in points {
            self.inner.demap(pt(p), n0, &mut frame).map_err(err)?;
        }
        self.distance_evals += frame.distance_evals;
        Ok(frame.values.chunks(m).map(<[f64]>::to_vec).collect())
    }

    /// Estimates and installs the affine correction for noise power `n0`;
    /// returns `(alpha, beta_u, beta_v)`.
    #[pyo3(signature = (n0, samples = 100_000, seed = 1))]
    fn estimate_compensation(&mut self, n0: f64, samples: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
        let ctx = self
            .inner
            .qci_context()
            .ok_or_else(|| PyValueError::new_err("compensation needs a QCI demapper"))?;
        let c = estimate_affine_compensation(ctx, n0, samples, &mut block_rng(seed, 0)).map_err(err)?;
        self.inner.set_compensation(Some(c));
        Ok((c.alpha, c.beta.u, c.beta.v))
    }

    fn set_compensation(&mut self, alpha: f64, beta: (f64, f64)) -> PyResult<()> {
        let c = AffineCompensation::new(alpha, pt(beta)).map_err(err)?;
        self.inner.set_compensation(Some(c));
        Ok(())
    }

    /// Monte Carlo GMI in bits/symbol at `psnr_db`; returns `(value, stderr)`.
    /// Compensated demappers are prepared for this PSNR first.
    #[pyo3(signature = (psnr_db, samples = 1_000_000, seed = 1))]
    fn gmi(&mut self, psnr_db: f64, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
        let spec = ChannelSpec::from_psnr(psnr_db, &self.inner.tx().power_stats()).map_err(err)?;
        let s = harness::point_seed(seed, psnr_db);
        harness::prepare_demapper(&mut self.inner, spec.n0, 100_000, s).map_err(err)?;
        let g = metrics::gmi_estimate(&self.inner, spec.n0, samples, s).map_err(err)?;
        Ok((g.value, g.stderr))
    }
}

#[pyclass(name = "Code", module = "qci", frozen)]
struct PyCode(ParityCheckCode);

#[pymethods]
impl PyCode {
    /// The bundled rate-3/4 (2000, 1500) LDPC code.
    #[staticmethod]
    fn bundled() -> Self {
        PyCode(ParityCheckCode::bundled())
    }

    #[staticmethod]
    fn from_alist(text: &str) -> PyResult<Self> {
        ParityCheckCode::from_alist(text).map(PyCode).map_err(err)
    }

    fn to_alist(&self) -> String {
        self.0.to_alist()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    /// Codeword for `info` (k bits of 0/1); bit vectors are returned as `bytes`.
    fn encode(&self, info: Vec<u8>) -> PyResult<Vec<u8>> {
        self.0.encode(&info).map_err(err)
    }

    fn extract_info(&self, codeword: Vec<u8>) -> Vec<u8> {
        self.0.extract_info(&codeword)
    }

    fn check_syndrome(&self, codeword: Vec<u8>) -> bool {
        self.0.check_syndrome(&codeword)
    }

    /// Sum-product decoding; returns `(bits, converged, iterations)`.
    #[pyo3(signature = (llrs, max_iters = 50))]
    fn decode(&self, py: Python<'_>, llrs: Vec<f64>, max_iters: usize) -> PyResult<(Vec<u8>, bool, usize)> {
        let out = py.detach(|| decode_bp(&self.0, &llrs, max_iters)).map_err(err)?;
        Ok((out.bits, out.converged, out.iterations))
    }
}

/// Runs a key-value config (same format as the CLI) and returns the CSV text.
/// `overrides` take precedence over keys in `config`.
#[pyfunction]
#[pyo3(signature = (config, overrides = None))]
fn run_config(py: Python<'_>, config: &str, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    let mut pairs = Vec::new();
    if let Some(d) = overrides {
        for (k, v) in d.iter() {
            pairs.push((k.extract::<String>()?, v.str()?.to_string()));
        }
    }
    let cfg = harness::parse_config(Some(config), &pairs).map_err(err)?;
    let records = py.detach(|| harness::run(&cfg)).map_err(err)?;
    Ok(harness::records_csv(&records))
}

/// Writes the figure CSVs and plot script into `out_dir`; returns the paths.
#[pyfunction]
#[pyo3(signature = (out_dir, quick = true, seed = 1))]
fn make_figures(py: Python<'_>, out_dir: PathBuf, quick: bool, seed: u64) -> PyResult<Vec<PathBuf>> {
    let opts = FigureOptions { quick, seed, workers: 0 };
    py.detach(|| harness::make_figures(&out_dir, &opts)).map_err(err)
}

#[pymodule]
fn qci(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(radial_forward, m)?)?;
    m.add_function(wrap_pyfunction!(radial_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(make_figures, m)?)?;
    m.add_class::<PyConstellation>()?;
    m.add_class::<PyDemapper>()?;
    m.add_class::<PyCode>()?;
    Ok(())
}
