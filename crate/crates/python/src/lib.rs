//! Python bindings. Payload-shaped results come back as plain dicts with the
//! same layout the HTTP service returns.

use std::collections::HashMap;
use std::fs::File;

use caliper_core::binning::{bin_stats, BinSpec, Strategy};
use caliper_core::dataset::{
    ingest_features, ingest_predictions, project_class_view, ClassView, EvaluationSession, ModelRecord, Predictions,
    ViewMode,
};
use caliper_core::lrd::{default_grid, fit_lrd, fit_lrd_with_band, lrd_expected_error, LearnedDiagram, LrdParams};
use caliper_core::metrics::{self, metrics_report};
use caliper_core::report::{self, build_report};
use caliper_core::selection::SubgroupPredicate;
use caliper_core::svg::render_svg;
use caliper_core::synth::{gen_classification, Distortion, SynthSpec};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

fn err(e: caliper_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn mode(mode: &str, class: Option<usize>) -> PyResult<ViewMode> {
    match (mode, class) {
        ("confidence", _) => Ok(ViewMode::Confidence),
        ("classwise", Some(c)) => Ok(ViewMode::ClassWise(c)),
        ("classwise", None) => Err(PyValueError::new_err("classwise mode needs a class")),
        (other, _) => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

fn bin_spec(bins: usize, strategy: &str) -> PyResult<BinSpec> {
    let strategy: Strategy = strategy.parse().map_err(err)?;
    BinSpec::new(strategy, bins).map_err(err)
}

fn subgroup(predicate: Option<&Bound<'_, PyDict>>) -> PyResult<Option<SubgroupPredicate>> {
    let Some(d) = predicate else { return Ok(None) };
    let text: String = d.py().import("json")?.call_method1("dumps", (d,))?.extract()?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| PyValueError::new_err(format!("bad subgroup: {e}")))
}

fn open(path: &str) -> PyResult<File> {
    File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
}

fn lrd_params(max_bins: usize, seed: u64) -> PyResult<LrdParams> {
    let params = LrdParams { max_bins, ..LrdParams::with_seed(seed) };
    params.validate().map_err(err)?;
    Ok(params)
}

/// Predicted probabilities (N x K) and integer labels for one model.
#[pyclass(name = "Model", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel(ModelRecord);

#[pymethods]
impl PyModel {
    #[new]
    fn new(name: &str, probs: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<Self> {
        let classes = probs.first().map_or(0, Vec::len);
        if probs.iter().any(|r| r.len() != classes) {
            return Err(PyValueError::new_err("probability rows differ in length"));
        }
        let predictions = Predictions { probs: probs.concat(), labels, classes };
        ModelRecord::new(name, predictions).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_csv(name: &str, probs_path: &str, labels_path: &str) -> PyResult<Self> {
        let predictions = ingest_predictions(open(probs_path)?, open(labels_path)?).map_err(err)?;
        ModelRecord::new(name, predictions).map(Self).map_err(err)
    }

    #[getter]
    fn name(&self) -> &str {
        self.0.name()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn classes(&self) -> usize {
        self.0.classes()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.0.labels().to_vec()
    }

    #[getter]
    fn probs(&self) -> Vec<Vec<f64>> {
        self.0.rows().map(<[f64]>::to_vec).collect()
    }

    #[pyo3(signature = (mode = "confidence", class_index = None))]
    fn view(&self, mode: &str, class_index: Option<usize>) -> PyResult<PyClassView> {
        project_class_view(&self.0, self::mode(mode, class_index)?).map(PyClassView).map_err(err)
    }

    #[pyo3(signature = (mode = "confidence", class_index = None, bins = 10, strategy = "uniform"))]
    fn metrics<'py>(
        &self,
        py: Python<'py>,
        mode: &str,
        class_index: Option<usize>,
        bins: usize,
        strategy: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let m = metrics_report(&self.0, self::mode(mode, class_index)?, bin_spec(bins, strategy)?).map_err(err)?;
        to_py(py, &m)
    }

    fn confusion_matrix(&self) -> PyResult<Vec<Vec<u64>>> {
        let all: Vec<usize> = (0..self.0.n()).collect();
        metrics::confusion_matrix(&self.0, &all).map(|c| c.counts).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Model(name={:?}, n={}, classes={})", self.0.name(), self.0.n(), self.0.classes())
    }
}

/// Binary scores and outcomes for one projection of a model.
#[pyclass(name = "ClassView", frozen)]
struct PyClassView(ClassView);

#[pymethods]
impl PyClassView {
    #[staticmethod]
    fn from_scores(scores: Vec<f64>, outcomes: Vec<bool>) -> PyResult<Self> {
        ClassView::from_scores(scores, outcomes).map(Self).map_err(err)
    }

    #[getter]
    fn mode(&self) -> String {
        self.0.mode.to_string()
    }

    #[getter]
    fn scores(&self) -> Vec<f64> {
        self.0.scores.clone()
    }

    #[getter]
    fn outcomes(&self) -> Vec<bool> {
        self.0.outcomes.clone()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[pyo3(signature = (bins = 10, strategy = "uniform"))]
    fn diagram<'py>(&self, py: Python<'py>, bins: usize, strategy: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &bin_stats(&self.0, bin_spec(bins, strategy)?).map_err(err)?)
    }

    #[pyo3(signature = (bins = 10, strategy = "uniform"))]
    fn ece(&self, bins: usize, strategy: &str) -> PyResult<f64> {
        Ok(metrics::ece(&bin_stats(&self.0, bin_spec(bins, strategy)?).map_err(err)?))
    }

    #[pyo3(signature = (bins = 10, strategy = "uniform"))]
    fn mce(&self, bins: usize, strategy: &str) -> PyResult<f64> {
        Ok(metrics::mce(&bin_stats(&self.0, bin_spec(bins, strategy)?).map_err(err)?))
    }

    /// Fits a learned reliability diagram. `band` is a number of bootstrap
    /// bags for a confidence band.
    #[pyo3(signature = (max_bins = 256, seed = 0, band = None))]
    fn fit_lrd(&self, py: Python<'_>, max_bins: usize, seed: u64, band: Option<usize>) -> PyResult<PyLearnedDiagram> {
        let params = lrd_params(max_bins, seed)?;
        let fitted = py.detach(|| match band {
            Some(bags) => fit_lrd_with_band(&self.0, &params, bags),
            None => fit_lrd(&self.0, &params),
        });
        fitted.map(PyLearnedDiagram).map_err(err)
    }
}

/// Piecewise-constant calibration curve `f(s)`.
#[pyclass(name = "LearnedDiagram", frozen)]
struct PyLearnedDiagram(LearnedDiagram);

#[pymethods]
impl PyLearnedDiagram {
    #[getter]
    fn cut_points(&self) -> Vec<f64> {
        self.0.cut_points.clone()
    }

    #[getter]
    fn piece_logits(&self) -> Vec<f64> {
        self.0.piece_logits.clone()
    }

    #[getter]
    fn base_logit(&self) -> f64 {
        self.0.base_logit
    }

    #[getter]
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.summary)
    }

    #[getter]
    fn band<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.band)
    }

    fn __call__(&self, s: f64) -> f64 {
        self.0.eval(s)
    }

    /// `(s, f(s))` on the default 101-point grid.
    fn curve(&self) -> Vec<(f64, f64)> {
        default_grid().into_iter().map(|x| (x, self.0.eval(x))).collect()
    }

    fn expected_error(&self, scores: Vec<f64>) -> f64 {
        lrd_expected_error(&self.0, &scores)
    }
}

/// A fixed feature table plus the models evaluated on it.
#[pyclass(name = "Session")]
struct PySession(EvaluationSession);

#[pymethods]
impl PySession {
    #[staticmethod]
    #[pyo3(signature = (features_path, id = "session"))]
    fn from_csv(features_path: &str, id: &str) -> PyResult<Self> {
        let table = ingest_features(open(features_path)?, &HashMap::new()).map_err(err)?;
        Ok(Self(EvaluationSession::new(id, table)))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.0.features().column_names().to_vec()
    }

    #[getter]
    fn models(&self) -> Vec<String> {
        self.0.models().map(|m| m.name().to_string()).collect()
    }

    fn add_model(&mut self, model: &PyModel) -> PyResult<()> {
        self.0.add_model(model.0.clone()).map_err(err)
    }

    fn model(&self, name: &str) -> PyResult<PyModel> {
        self.0.model(name).cloned().map(PyModel).map_err(err)
    }

    #[pyo3(signature = (model, mode = "confidence", class_index = None, bins = 10, strategy = "uniform", subgroup = None))]
    #[allow(clippy::too_many_arguments)]
    fn diagram<'py>(
        &self,
        py: Python<'py>,
        model: &str,
        mode: &str,
        class_index: Option<usize>,
        bins: usize,
        strategy: &str,
        subgroup: Option<&Bound<'py, PyDict>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let pred = self::subgroup(subgroup)?;
        let view = self::mode(mode, class_index)?;
        let payload =
            report::diagram_payload(&self.0, model, view, bin_spec(bins, strategy)?, pred.as_ref()).map_err(err)?;
        to_py(py, &payload)
    }

    #[pyo3(signature = (model, mode = "confidence", class_index = None, max_bins = 256, seed = 0, band = None, subgroup = None))]
    #[allow(clippy::too_many_arguments)]
    fn lrd<'py>(
        &self,
        py: Python<'py>,
        model: &str,
        mode: &str,
        class_index: Option<usize>,
        max_bins: usize,
        seed: u64,
        band: Option<usize>,
        subgroup: Option<&Bound<'py, PyDict>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let pred = self::subgroup(subgroup)?;
        let view = self::mode(mode, class_index)?;
        let params = lrd_params(max_bins, seed)?;
        let session = &self.0;
        let payload = py
            .detach(|| report::lrd_payload(session, model, view, &params, band, pred.as_ref()))
            .map_err(err)?;
        to_py(py, &payload)
    }

    #[pyo3(signature = (model, lo, hi, mode = "confidence", class_index = None, subgroup = None, limit = 100, offset = 0))]
    #[allow(clippy::too_many_arguments)]
    fn region<'py>(
        &self,
        py: Python<'py>,
        model: &str,
        lo: f64,
        hi: f64,
        mode: &str,
        class_index: Option<usize>,
        subgroup: Option<&Bound<'py, PyDict>>,
        limit: usize,
        offset: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let pred = self::subgroup(subgroup)?;
        let view = self::mode(mode, class_index)?;
        let payload =
            report::region_payload(&self.0, model, view, lo, hi, pred.as_ref(), limit, offset).map_err(err)?;
        to_py(py, &payload)
    }

    #[pyo3(signature = (subgroup = None))]
    fn features<'py>(&self, py: Python<'py>, subgroup: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyAny>> {
        let pred = self::subgroup(subgroup)?;
        to_py(py, &report::features_payload(&self.0, pred.as_ref()).map_err(err)?)
    }

    /// Builds a report over `curves`, a list of `(model, mode, class_index)`.
    #[pyo3(signature = (curves, bins = 10, strategy = "uniform", lrd = false, seed = 0, subgroup = None))]
    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        py: Python<'_>,
        curves: Vec<(String, String, Option<usize>)>,
        bins: usize,
        strategy: &str,
        lrd: bool,
        seed: u64,
        subgroup: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<PyReport> {
        let pred = self::subgroup(subgroup)?;
        let curves = curves
            .into_iter()
            .map(|(m, mode, c)| Ok((m, self::mode(&mode, c)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let spec = bin_spec(bins, strategy)?;
        let params = lrd.then(|| LrdParams::with_seed(seed));
        let session = &self.0;
        py.detach(|| build_report(session, &curves, spec, params.as_ref(), pred.as_ref()))
            .map(PyReport)
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Session(n={}, models={:?})", self.0.n(), self.models())
    }
}

#[pyclass(name = "Report", frozen)]
struct PyReport(report::Report);

#[pymethods]
impl PyReport {
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn svg(&self) -> String {
        render_svg(&self.0)
    }
}

/// Draws a Gaussian-mixture dataset and returns a session holding its
/// features and one model named `name`. `temperature` distorts the Bayes
/// posteriors; without it the model is calibrated.
#[pyfunction]
#[pyo3(signature = (n = 10000, classes = 10, informative = 10, noise = 10, weights = None, temperature = None, centroid_scale = 2.0, seed = 0, name = "synth"))]
#[allow(clippy::too_many_arguments)]
fn synth(
    n: usize,
    classes: usize,
    informative: usize,
    noise: usize,
    weights: Option<Vec<f64>>,
    temperature: Option<f64>,
    centroid_scale: f64,
    seed: u64,
    name: &str,
) -> PyResult<PySession> {
    let mut spec = SynthSpec { centroid_scale, ..SynthSpec::balanced(n, classes, informative, noise, seed) };
    if let Some(w) = weights {
        spec.class_weights = w;
    }
    let data = gen_classification(&spec).map_err(err)?;
    let distortion = temperature.map_or(Distortion::None, |t| Distortion::Temperature { t });
    let mut session = EvaluationSession::new("synth", data.features.clone());
    session.add_model(data.model(name, &distortion).map_err(err)?).map_err(err)?;
    Ok(PySession(session))
}

#[pyfunction]
fn brier_score(model: &PyModel) -> f64 {
    metrics::brier_score(model.0.probs(), model.0.labels())
}

#[pyfunction]
fn log_loss(model: &PyModel) -> f64 {
    metrics::log_loss(model.0.probs(), model.0.labels())
}

#[pymodule]
fn caliper(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyClassView>()?;
    m.add_class::<PyLearnedDiagram>()?;
    m.add_class::<PySession>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(brier_score, m)?)?;
    m.add_function(wrap_pyfunction!(log_loss, m)?)?;
    Ok(())
}
