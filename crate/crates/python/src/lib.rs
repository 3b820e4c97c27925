use pyo3::exceptions::{PyOverflowError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nuspin::cli::runner::{run_exact, run_mps, EngineRun};
use nuspin::cli::{self, RunConfig};
use nuspin::model::{flavors_to_string, initial_state, parse_flavors, uniform_omegas};
use nuspin::observables::resource_records;
use nuspin::resources::{self, EntanglementSpectrum};
use nuspin::{CouplingProfile, Error, MassOrdering, ResourceRecord, StateVector, SystemSpec};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Capacity { .. } => PyOverflowError::new_err(e.to_string()),
        Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn spectrum(eigs: Vec<f64>) -> PyResult<EntanglementSpectrum> {
    let r = eigs.len().next_power_of_two().max(2);
    EntanglementSpectrum::from_eigenvalues(eigs, r).map_err(py_err)
}

fn record_dict<'py>(py: Python<'py>, r: &ResourceRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("time", r.time)?;
    d.set_item("mode", r.mode)?;
    d.set_item("S", r.entropy)?;
    d.set_item("M2NL", r.nl_sre2)?;
    d.set_item("antiflat4", r.antiflatness4)?;
    d.set_item("P", r.polarization.to_vec())?;
    d.set_item("Pnu1", r.p_nu1)?;
    d.set_item("maxbond", r.max_bond)?;
    Ok(d)
}

fn run_dict<'py>(py: Python<'py>, run: &EngineRun) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("label", &run.label)?;
    d.set_item("cap", run.cap)?;
    d.set_item("max_bond_seen", run.max_bond_seen)?;
    d.set_item("discarded_weight", run.discarded_weight)?;
    let recs = run.records.iter().map(|r| record_dict(py, r)).collect::<PyResult<Vec<_>>>()?;
    d.set_item("records", recs)?;
    d.set_item("full_sre", run.full_sre.clone())?;
    d.set_item("comparison", run.comparison.clone())?;
    Ok(d)
}

/// Entanglement entropy (nats) of a reduced-state spectrum.
#[pyfunction]
fn entropy(eigs: Vec<f64>) -> PyResult<f64> {
    Ok(resources::von_neumann_entropy(&spectrum(eigs)?))
}

/// Non-local stabilizer Rényi-2 entropy of a spectrum; padded to a power of two.
#[pyfunction]
fn nl_sre2(eigs: Vec<f64>) -> PyResult<f64> {
    resources::nl_sre2(&spectrum(eigs)?).map_err(py_err)
}

#[pyfunction]
fn antiflatness(eigs: Vec<f64>) -> PyResult<f64> {
    Ok(resources::antiflatness(&spectrum(eigs)?))
}

/// `(lambda0, M2NL, S)` samples of the single-qubit arc.
#[pyfunction]
#[pyo3(signature = (points = 512))]
fn arc(points: usize) -> PyResult<Vec<(f64, f64, f64)>> {
    resources::sample_arc(points).map_err(py_err)
}

/// Frequencies, mixing angle, coupling profile and initial flavors.
#[pyclass(name = "System", module = "nuspin_py", skip_from_py_object)]
#[derive(Clone)]
struct PySystem {
    inner: SystemSpec,
}

#[pymethods]
impl PySystem {
    /// `coupling` is `"constant"`, `"power_decay"` or `"supernova_single_angle"`.
    /// `radius` and `exponent` fill the profile's second and third parameters
    /// (for the supernova profile `exponent` is the starting radius).
    #[new]
    #[pyo3(signature = (initial, mixing_angle = 0.1, omegas = None, coupling = "power_decay", mu0 = 5.0, radius = 10.0, exponent = 2.0, mass_ordering = "normal"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        initial: &str,
        mixing_angle: f64,
        omegas: Option<Vec<f64>>,
        coupling: &str,
        mu0: f64,
        radius: f64,
        exponent: f64,
        mass_ordering: &str,
    ) -> PyResult<Self> {
        let ordering = MassOrdering::parse(mass_ordering)
            .ok_or_else(|| PyValueError::new_err(format!("unknown mass ordering {mass_ordering:?}")))?;
        let flavors = parse_flavors(initial).map_err(py_err)?;
        let omegas = omegas.unwrap_or_else(|| uniform_omegas(flavors.len(), 1.0));
        let coupling = match coupling {
            "constant" => CouplingProfile::Constant { mu0 },
            "power_decay" => CouplingProfile::PowerDecay { mu0, radius, exponent },
            "supernova_single_angle" | "supernova" => {
                CouplingProfile::SupernovaSingleAngle { mu0, radius, start_radius: exponent }
            }
            other => return Err(PyValueError::new_err(format!("unknown coupling kind {other:?}"))),
        };
        let inner = SystemSpec::new(omegas, mixing_angle, coupling, flavors)
            .map_err(py_err)?
            .with_mass_ordering(ordering);
        Ok(Self { inner })
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }

    #[getter]
    fn initial(&self) -> String {
        flavors_to_string(&self.inner.initial_config)
    }

    #[getter]
    fn omegas(&self) -> Vec<f64> {
        self.inner.omegas.clone()
    }

    #[getter]
    fn mixing_angle(&self) -> f64 {
        self.inner.mixing_angle
    }

    #[getter]
    fn mass_ordering(&self) -> &'static str {
        self.inner.mass_ordering.as_str()
    }

    fn coupling_at(&self, t: f64) -> PyResult<f64> {
        self.inner.coupling_at(t).map_err(py_err)
    }

    /// Product initial state as a flat amplitude list (site 0 is the most significant bit).
    fn initial_amplitudes(&self) -> PyResult<Vec<(f64, f64)>> {
        let s: StateVector = initial_state(&self.inner).map_err(py_err)?;
        Ok(s.amplitudes().iter().map(|z| (z.re, z.im)).collect())
    }

    /// Per-mode resource rows of the initial state.
    fn initial_records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let s = initial_state(&self.inner).map_err(py_err)?;
        let recs = resource_records(&s, 0.0, self.inner.mixing_angle, 1).map_err(py_err)?;
        recs.iter().map(|r| record_dict(py, r)).collect()
    }

    fn __repr__(&self) -> String {
        format!("System({})", self.inner)
    }
}

/// Validated run configuration, same schema as the command-line tool.
#[pyclass(name = "Config", module = "nuspin_py", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: cli::validate_config(text).map_err(py_err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: cli::load_config(std::path::Path::new(path)).map_err(py_err)? })
    }

    #[getter]
    fn system(&self) -> PySystem {
        PySystem { inner: self.inner.spec.clone() }
    }

    #[getter]
    fn output_dir(&self) -> String {
        self.inner.output_dir.display().to_string()
    }

    #[setter]
    fn set_output_dir(&mut self, dir: &str) {
        self.inner.output_dir = dir.into();
    }

    #[getter]
    fn defaults_injected(&self) -> Vec<String> {
        self.inner.defaults_injected.clone()
    }

    /// Fully resolved configuration as TOML.
    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    fn run_exact<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let cfg = self.inner.clone();
        let (run, _) = py.detach(move || run_exact(&cfg, false)).map_err(py_err)?;
        run_dict(py, &run)
    }

    fn run_mps<'py>(&self, py: Python<'py>, cap: usize) -> PyResult<Bound<'py, PyDict>> {
        let cfg = self.inner.clone();
        let run = py.detach(move || run_mps(&cfg, cap, None)).map_err(py_err)?;
        run_dict(py, &run)
    }

    /// Same as `nuspin run`: writes every table to `output_dir`.
    fn run<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let cfg = self.inner.clone();
        let runs = py.detach(move || cli::run(&cfg)).map_err(py_err)?;
        runs.iter().map(|r| run_dict(py, r)).collect()
    }

    fn sweep<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let cfg = self.inner.clone();
        let runs = py.detach(move || cli::sweep(&cfg)).map_err(py_err)?;
        runs.iter().map(|r| run_dict(py, r)).collect()
    }
}

#[pymodule]
fn nuspin_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(nl_sre2, m)?)?;
    m.add_function(wrap_pyfunction!(antiflatness, m)?)?;
    m.add_function(wrap_pyfunction!(arc, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
