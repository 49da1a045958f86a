//! Python bindings. Agent indices are 1-based, as in scenario files.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use rigid_formation::analysis::{self, AssignmentRule};
use rigid_formation::cli::{self, TriangleChoice};
use rigid_formation::rigidity::{self, FormationGraph};
use rigid_formation::scenario::{self, Scenario};
use rigid_formation::sim::Trajectory;
use rigid_formation::FormationError;

create_exception!(rigid_formation, FormationException, PyException);

fn err(e: FormationError) -> PyErr {
    FormationException::new_err(e.to_string())
}

/// Serializes through JSON into plain Python objects.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| FormationException::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn rule_from(name: &str, root: Option<usize>) -> PyResult<AssignmentRule> {
    match name {
        "triangle_cyclic" => Ok(AssignmentRule::TriangleCyclic),
        "triangle_acyclic" => Ok(AssignmentRule::TriangleAcyclic {
            root: root.unwrap_or(1).checked_sub(1).ok_or_else(|| FormationException::new_err("root is 1-based"))?,
            other: None,
        }),
        "tetrahedron" => Ok(AssignmentRule::Tetrahedron),
        other => Err(FormationException::new_err(format!(
            "unknown rule {other}; expected triangle_cyclic, triangle_acyclic or tetrahedron"
        ))),
    }
}

/// A graph embedded in the plane or space with prescribed distances.
#[pyclass(name = "Framework", module = "rigid_formation")]
struct PyFramework {
    inner: rigidity::Framework,
}

#[pymethods]
impl PyFramework {
    /// `edges` are (tail, head) pairs; the tail estimates the edge. Without
    /// `distances` the embedding defines them.
    #[new]
    #[pyo3(signature = (edges, positions, distances = None))]
    fn new(edges: Vec<(usize, usize)>, positions: Vec<Vec<f64>>, distances: Option<Vec<f64>>) -> PyResult<Self> {
        let dim = positions.first().map_or(0, Vec::len);
        if positions.iter().any(|p| p.len() != dim) {
            return Err(FormationException::new_err("all positions need the same dimension"));
        }
        let graph = FormationGraph::from_one_based(positions.len(), &edges).map_err(err)?;
        let x: Vec<f64> = positions.concat();
        let inner = match distances {
            Some(d) => rigidity::Framework::new(graph, dim, x, d),
            None => rigidity::Framework::at_target(graph, dim, x),
        }
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn agent_count(&self) -> usize {
        self.inner.agent_count()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.graph().edges().iter().map(|e| (e.tail + 1, e.head + 1)).collect()
    }

    fn edge_function(&self) -> Vec<f64> {
        rigidity::edge_function(&self.inner).iter().copied().collect()
    }

    /// `e_k = ||z_k||² - d_k²`.
    fn errors(&self) -> Vec<f64> {
        rigid_formation::controller::consistent_errors(&self.inner).iter().copied().collect()
    }

    fn rigidity_matrix(&self) -> Vec<Vec<f64>> {
        rows(&rigidity::rigidity_matrix(&self.inner))
    }

    /// Rank test: dict with rank, expected_rank, infinitesimally_rigid, minimally_rigid.
    fn rigidity<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let c = rigidity::rigidity(&self.inner).map_err(err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("rank", c.rank)?;
        d.set_item("expected_rank", c.expected_rank)?;
        d.set_item("infinitesimally_rigid", c.infinitesimally_rigid)?;
        d.set_item("minimally_rigid", c.minimally_rigid)?;
        Ok(d.into_any())
    }

    /// Stability matrix at the current (target) embedding.
    fn stability(&self) -> PyResult<PyStabilityReport> {
        analysis::stability_matrix(&self.inner).map(PyStabilityReport::from).map_err(err)
    }

    /// Re-orients by a selection rule and returns the stability report.
    #[pyo3(signature = (rule, root = None))]
    fn certify(&self, rule: &str, root: Option<usize>) -> PyResult<PyStabilityReport> {
        analysis::certify(&self.inner, &rule_from(rule, root)?)
            .map(PyStabilityReport::from)
            .map_err(err)
    }

    /// Copy oriented by a selection rule.
    #[pyo3(signature = (rule, root = None))]
    fn oriented(&self, rule: &str, root: Option<usize>) -> PyResult<Self> {
        let g = analysis::select_estimating_agents(self.inner.graph(), &rule_from(rule, root)?).map_err(err)?;
        Ok(Self {
            inner: self.inner.with_graph(g).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Framework(agents={}, edges={}, dim={})",
            self.inner.agent_count(),
            self.inner.graph().edge_count(),
            self.inner.dim()
        )
    }
}

#[pyclass(name = "StabilityReport", module = "rigid_formation", frozen)]
struct PyStabilityReport {
    #[pyo3(get)]
    hurwitz: bool,
    #[pyo3(get)]
    margin: f64,
    #[pyo3(get)]
    z_matrix: Vec<Vec<f64>>,
    /// Eigenvalues as (re, im) pairs.
    #[pyo3(get)]
    spectrum: Vec<(f64, f64)>,
}

impl From<analysis::StabilityReport> for PyStabilityReport {
    fn from(r: analysis::StabilityReport) -> Self {
        Self {
            hurwitz: r.hurwitz,
            margin: r.margin,
            z_matrix: rows(&r.z_matrix),
            spectrum: r.spectrum.iter().map(|l| (l.re, l.im)).collect(),
        }
    }
}

#[pymethods]
impl PyStabilityReport {
    fn __repr__(&self) -> String {
        format!("StabilityReport(hurwitz={}, margin={:e})", self.hurwitz, self.margin)
    }
}

/// A complete simulation scenario.
#[pyclass(name = "Scenario", module = "rigid_formation")]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        scenario::builtin(name)
            .map(|inner| Self { inner })
            .ok_or_else(|| FormationException::new_err(format!("unknown built-in {name}")))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Scenario::from_json(text).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Scenario::load(&path).map(|inner| Self { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Framework at the target embedding, if the scenario has one.
    fn target(&self) -> PyResult<Option<PyFramework>> {
        Ok(self.inner.target_framework().map_err(err)?.map(|inner| PyFramework { inner }))
    }

    /// Rank and Hurwitz certification record as a dict.
    fn check<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let report = cli::cmd_check(&self.inner).map_err(err)?;
        let d = to_py(py, &report)?;
        d.set_item("certified", report.certified())?;
        Ok(d)
    }

    /// Simulates the scenario; the GIL is released while integrating.
    #[pyo3(signature = (tol = cli::DEFAULT_VERDICT_TOL))]
    fn run(&self, py: Python<'_>, tol: f64) -> PyResult<PyRun> {
        let s = self.inner.clone();
        let outcome = py.detach(move || cli::simulate(&s, tol)).map_err(err)?;
        Ok(PyRun {
            trajectory: outcome.trajectory,
            verdict: outcome.verdict,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, agents={}, edges={})",
            self.inner.name,
            self.inner.agents.len(),
            self.inner.edges.len()
        )
    }
}

/// A finished run: sampled trajectory plus its verdict.
#[pyclass(name = "Run", module = "rigid_formation", frozen)]
struct PyRun {
    trajectory: Trajectory,
    verdict: rigid_formation::sim::RunVerdict,
}

#[pymethods]
impl PyRun {
    fn verdict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.verdict)
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.trajectory.samples.iter().map(|s| s.t).collect()
    }

    #[getter]
    fn error_norms(&self) -> Vec<f64> {
        self.trajectory.samples.iter().map(|s| s.error_norm()).collect()
    }

    #[getter]
    fn max_speeds(&self) -> Vec<f64> {
        self.trajectory.samples.iter().map(|s| s.max_speed()).collect()
    }

    #[getter]
    fn final_positions(&self) -> Vec<Vec<f64>> {
        self.trajectory.final_state.x.chunks(self.trajectory.dim).map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn final_mu(&self) -> Vec<f64> {
        self.trajectory.samples.last().map_or(Vec::new(), |s| s.mu.clone())
    }

    #[getter]
    fn final_mu_hat(&self) -> Vec<f64> {
        self.trajectory.samples.last().map_or(Vec::new(), |s| s.mu_hat.clone())
    }

    /// Writes the trajectory CSV.
    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let file = std::fs::File::create(&path).map_err(|e| FormationException::new_err(e.to_string()))?;
        self.trajectory
            .write_csv(std::io::BufWriter::new(file))
            .map_err(|e| FormationException::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.trajectory.samples.len()
    }
}

/// Random certified formation scenario.
#[pyfunction]
#[pyo3(signature = (n, dim = 2, seed = 0, triangle = "acyclic"))]
fn generate(n: usize, dim: usize, seed: u64, triangle: &str) -> PyResult<PyScenario> {
    let choice = match triangle {
        "acyclic" => TriangleChoice::Acyclic,
        "cyclic" => TriangleChoice::Cyclic,
        other => return Err(FormationException::new_err(format!("unknown triangle rule {other}"))),
    };
    cli::cmd_generate(n, dim, seed, choice)
        .map(|inner| PyScenario { inner })
        .map_err(err)
}

/// Runs the gradient-only and estimator variants of a built-in experiment.
#[pyfunction]
fn replicate<'py>(py: Python<'py>, name: &str, out_dir: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let name = name.to_string();
    let summary = py.detach(move || cli::cmd_replicate(&name, &out_dir)).map_err(err)?;
    to_py(py, &summary)
}

/// `(hurwitz, margin)` for a square matrix given as rows.
#[pyfunction]
#[pyo3(signature = (matrix, tol = analysis::DEFAULT_HURWITZ_TOL))]
fn is_hurwitz(matrix: Vec<Vec<f64>>, tol: f64) -> PyResult<(bool, f64)> {
    let n = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if matrix.iter().any(|r| r.len() != cols) {
        return Err(FormationException::new_err("ragged matrix"));
    }
    let m = nalgebra::DMatrix::from_row_iterator(n, cols, matrix.into_iter().flatten());
    analysis::is_hurwitz(&m, tol).map_err(err)
}

#[pyfunction]
fn builtin_names() -> Vec<&'static str> {
    scenario::BUILTIN_NAMES.to_vec()
}

#[pymodule]
#[pyo3(name = "rigid_formation")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FormationError", m.py().get_type::<FormationException>())?;
    m.add_class::<PyFramework>()?;
    m.add_class::<PyStabilityReport>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(replicate, m)?)?;
    m.add_function(wrap_pyfunction!(is_hurwitz, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_names, m)?)?;
    Ok(())
}
