//! Python bindings: Pauli algebra, Hamiltonians, statevectors, gate
//! decomposition and full experiment runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mqite::decomposition::{decompose_rotation as decompose, gate_count, Gate};
use mqite::experiment::{self, ExperimentConfig};
use mqite::problems::ProblemSpec;
use mqite::{Error, Hamiltonian, PauliString, StateVector};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::Annihilated { .. } | Error::NotNormalized(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "PauliString", module = "mqite_py", skip_from_py_object, frozen, eq)]
#[derive(Clone, PartialEq)]
struct PyPauli {
    inner: PauliString,
}

#[pymethods]
impl PyPauli {
    #[new]
    fn new(label: &str) -> PyResult<Self> {
        Ok(PyPauli { inner: PauliString::parse(label).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_masks(n: usize, x: u64, z: u64) -> PyResult<Self> {
        Ok(PyPauli { inner: PauliString::from_masks(n, x, z).map_err(py_err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn label(&self) -> String {
        self.inner.label()
    }

    fn weight(&self) -> u32 {
        self.inner.weight()
    }

    fn support(&self) -> Vec<usize> {
        self.inner.support()
    }

    /// Product `self * other` with its phase as a power of `i`: `(phase, string)`.
    fn multiply(&self, other: &PyPauli) -> PyResult<(u8, PyPauli)> {
        let p = self.inner.multiply(&other.inner).map_err(py_err)?;
        Ok((p.phase_exp(), PyPauli { inner: p.with_phase(0) }))
    }

    fn commutes(&self, other: &PyPauli) -> PyResult<bool> {
        self.inner.commutes(&other.inner).map_err(py_err)
    }

    /// `P|j> = phase |j'>`, returned as `(j', phase)`.
    fn apply_to_basis(&self, j: u64) -> PyResult<(u64, Complex64)> {
        self.inner.apply_to_basis_checked(j).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("PauliString('{}')", self.inner.label())
    }
}

#[pyclass(name = "Hamiltonian", module = "mqite_py", skip_from_py_object)]
#[derive(Clone)]
struct PyHamiltonian {
    inner: Hamiltonian,
}

#[pymethods]
impl PyHamiltonian {
    #[new]
    fn new(terms: Vec<(f64, String)>) -> PyResult<Self> {
        let refs: Vec<(f64, &str)> = terms.iter().map(|(w, l)| (*w, l.as_str())).collect();
        Ok(PyHamiltonian { inner: Hamiltonian::from_labels(&refs).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyHamiltonian { inner: Hamiltonian::parse_text(text).map_err(py_err)? })
    }

    /// Built-in problem from a JSON spec such as `{"kind": "tfim", "n": 4, "J": 1, "h_x": 1}`.
    #[staticmethod]
    fn from_problem(spec_json: &str) -> PyResult<Self> {
        let spec: ProblemSpec = serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyHamiltonian { inner: spec.build().map_err(py_err)?.hamiltonian })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn terms(&self) -> Vec<(f64, String)> {
        self.inner.terms().iter().map(|t| (t.weight, t.pauli.label())).collect()
    }

    fn all_commute(&self) -> bool {
        self.inner.all_commute()
    }

    /// `(energy, gap, degeneracy)` by exact diagonalization.
    fn exact_ground(&self, py: Python<'_>) -> PyResult<(f64, f64, usize)> {
        let g = py.detach(|| mqite::ite::exact_ground(&self.inner, None)).map_err(py_err)?;
        Ok((g.energy, g.gap, g.manifold.len()))
    }
}

#[pyclass(name = "StateVector", module = "mqite_py", skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: StateVector,
}

#[pymethods]
impl PyState {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(PyState { inner: StateVector::zero(n).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyState { inner: StateVector::from_amplitudes(n, amps).map_err(py_err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amps().to_vec()
    }

    /// In place `exp(i angle P)`.
    fn apply_rotation(&mut self, pauli: &PyPauli, angle: f64) -> PyResult<()> {
        self.inner.apply_rotation(&pauli.inner, angle).map_err(py_err)
    }

    fn apply_pauli(&mut self, pauli: &PyPauli) -> PyResult<()> {
        self.inner.apply_pauli(&pauli.inner).map_err(py_err)
    }

    fn expectation(&self, h: &PyHamiltonian) -> PyResult<f64> {
        self.inner.expectation(&h.inner).map_err(py_err)
    }

    fn fidelity(&self, other: &PyState) -> PyResult<f64> {
        self.inner.fidelity(&other.inner).map_err(py_err)
    }

    fn sample(&self, shots: u64, seed: u64) -> PyResult<BTreeMap<u64, u64>> {
        self.inner.sample(shots, &mut mqite::seeded_rng(seed, 0)).map_err(py_err)
    }
}

/// Gates for `exp(i alpha P)` as `(name, qubits, params)` tuples.
#[pyfunction]
fn decompose_rotation(label: &str, alpha: f64) -> PyResult<Vec<(String, Vec<usize>, Vec<f64>)>> {
    let p = PauliString::parse(label).map_err(py_err)?;
    let gl = decompose(&p, alpha).map_err(py_err)?;
    Ok(gl
        .gates
        .iter()
        .map(|g| match *g {
            Gate::U3 { theta, phi, lambda, .. } => ("u3".to_string(), g.qubits(), vec![theta, phi, lambda]),
            Gate::Cnot { .. } => ("cx".to_string(), g.qubits(), vec![]),
            Gate::Rxx { alpha, .. } => ("rxx".to_string(), g.qubits(), vec![alpha]),
        })
        .collect())
}

/// `(one_qubit, two_qubit)` gate counts of the decomposition.
#[pyfunction]
fn rotation_gate_count(label: &str, alpha: f64) -> PyResult<(usize, usize)> {
    let p = PauliString::parse(label).map_err(py_err)?;
    Ok(gate_count(&decompose(&p, alpha).map_err(py_err)?))
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    experiment::presets().into_iter().map(|(n, _)| n).collect()
}

/// JSON config of a built-in preset.
#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    experiment::preset(name).and_then(|c| c.to_json()).map_err(py_err)
}

/// Runs an experiment from a JSON config. Writes artifacts when `out` is given.
/// Returns a dict with per-sweep `tau`/`energy`/`ite_energy`/`fidelity`/`eta`,
/// `exact_energy`, `qse_energy` and the full `record` as JSON text.
#[pyfunction]
#[pyo3(signature = (config_json, out=None))]
fn run<'py>(py: Python<'py>, config_json: &str, out: Option<PathBuf>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let (record, qse) = py
        .detach(|| match &out {
            Some(dir) => experiment::run_experiment(&cfg, dir).map(|o| (o.record, o.qse)),
            None => experiment::execute(&cfg).map(|(r, _, q)| (r, q)),
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("tau", record.sweeps.iter().map(|s| s.tau).collect::<Vec<_>>())?;
    d.set_item("energy", record.sweeps.iter().map(|s| s.energy).collect::<Vec<_>>())?;
    d.set_item("ite_energy", record.sweeps.iter().map(|s| s.ite_energy).collect::<Vec<_>>())?;
    d.set_item("fidelity", record.sweeps.iter().map(|s| s.fidelity).collect::<Vec<_>>())?;
    d.set_item("eta", record.sweeps.iter().map(|s| s.eta).collect::<Vec<_>>())?;
    d.set_item("exact_energy", record.exact_energy)?;
    d.set_item("qse_energy", qse.map(|q| q.energy))?;
    d.set_item("record", record.to_json().map_err(py_err)?)?;
    Ok(d)
}

#[pymodule]
fn mqite_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauli>()?;
    m.add_class::<PyHamiltonian>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(decompose_rotation, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_gate_count, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
