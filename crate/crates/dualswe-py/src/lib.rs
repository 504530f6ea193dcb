//! Python bindings: mesh construction and validation, the identity
//! suite, diagnostic solves, tendencies, conservation runs, and the
//! dispersion analysis.

use dualswe::dynamics::{self, Scheme};
use dualswe::elliptic::{self, PhysicsConfig};
use dualswe::fields::CellField;
use dualswe::mesh;
use dualswe::timeloop::{self, Integrator, NoSink, RunConfig};
use dualswe::{dispersion, verify};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

/// (t, mass, circulation, energy, potential_enstrophy).
type SeriesRow = (f64, f64, f64, f64, f64);

fn err(e: dualswe::Error) -> PyErr {
    match e {
        dualswe::Error::SolverFailure { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Unstructured orthogonal dual mesh.
#[pyclass(name = "DualMesh")]
struct PyDualMesh {
    inner: mesh::DualMesh,
}

#[pymethods]
impl PyDualMesh {
    /// Doubly periodic nx × ny quad mesh on [0, Lx) × [0, Ly).
    #[staticmethod]
    #[pyo3(signature = (nx, ny, lx=1.0, ly=1.0))]
    fn periodic_quad(nx: usize, ny: usize, lx: f64, ly: f64) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::build_periodic_quad_mesh(nx, ny, lx, ly).map_err(err)?,
        })
    }

    /// Bounded relaxed-lattice Voronoi mesh on the unit square.
    #[staticmethod]
    #[pyo3(signature = (nx, ny, jitter=0.1, seed=7))]
    fn perturbed_lattice(nx: usize, ny: usize, jitter: f64, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::build_perturbed_lattice_mesh(nx, ny, jitter, seed).map_err(err)?,
        })
    }

    /// Clipped Voronoi/Delaunay dual mesh of the given generators inside
    /// a ccw polygon.
    #[staticmethod]
    fn bounded_voronoi(points: Vec<[f64; 2]>, polygon: Vec<[f64; 2]>) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::build_bounded_voronoi_mesh(&points, &polygon).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::DualMesh::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn num_cells(&self) -> usize {
        self.inner.num_cells()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn is_periodic(&self) -> bool {
        self.inner.is_periodic()
    }

    fn cell_centers(&self) -> Vec<(f64, f64)> {
        self.inner
            .cells
            .iter()
            .map(|c| (c.center[0], c.center[1]))
            .collect()
    }

    fn cell_areas(&self) -> Vec<f64> {
        self.inner.cells.iter().map(|c| c.area).collect()
    }

    /// Runs every mesh invariant; returns {"passed", "table", "ratio"}.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = self.inner.validate();
        let dict = PyDict::new(py);
        dict.set_item("passed", report.all_passed())?;
        dict.set_item("table", report.to_table())?;
        dict.set_item("quasi_uniformity_ratio", report.quasi_uniformity_ratio)?;
        dict.set_item("near_bisection_defect", report.near_bisection_defect)?;
        Ok(dict)
    }

    fn __repr__(&self) -> String {
        format!(
            "DualMesh({} cells, {} edges, {} vertices, {})",
            self.inner.num_cells(),
            self.inner.num_edges(),
            self.inner.num_vertices(),
            if self.inner.is_periodic() {
                "periodic"
            } else {
                "bounded"
            }
        )
    }
}

/// Prognostic fields (φ, ζ, γ) at cell centers.
#[pyclass(name = "State", skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: elliptic::State,
}

#[pymethods]
impl PyState {
    #[new]
    fn new(phi: Vec<f64>, zeta: Vec<f64>, gamma: Vec<f64>) -> Self {
        Self {
            inner: elliptic::State::new(
                CellField::new(phi),
                CellField::new(zeta),
                CellField::new(gamma),
            ),
        }
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.inner.phi.values.clone()
    }

    #[getter]
    fn zeta(&self) -> Vec<f64> {
        self.inner.zeta.values.clone()
    }

    #[getter]
    fn gamma(&self) -> Vec<f64> {
        self.inner.gamma.values.clone()
    }
}

fn scheme_of(name: &str) -> PyResult<Scheme> {
    name.parse().map_err(err)
}

fn integrator_of(name: &str) -> PyResult<Integrator> {
    name.parse().map_err(err)
}

/// State whose (ζ, γ) are the coupled-operator images of (ψ₀, χ₀).
#[pyfunction]
fn initialize_from_potentials(
    mesh: &PyDualMesh,
    psi0: Vec<f64>,
    chi0: Vec<f64>,
    phi0: Vec<f64>,
) -> PyResult<PyState> {
    let state = timeloop::initialize_from_velocity_potentials(
        &CellField::new(psi0),
        &CellField::new(chi0),
        &CellField::new(phi0),
        &mesh.inner,
    )
    .map_err(err)?;
    Ok(PyState { inner: state })
}

/// Recovers (ψ, χ) and the derived fields; returns a dict.
#[pyfunction]
#[pyo3(signature = (mesh, state, gravity=1.0, f0=1.0, tol=1e-11))]
fn solve_diagnostics<'py>(
    py: Python<'py>,
    mesh: &PyDualMesh,
    state: &PyState,
    gravity: f64,
    f0: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = PhysicsConfig::f_plane(gravity, f0, &mesh.inner);
    let diag = elliptic::solve_psi_chi(&state.inner, &config, &mesh.inner, tol).map_err(err)?;
    let energy = elliptic::total_energy(&state.inner, &diag.psi, &diag.chi, &config, &mesh.inner)
        .map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("psi", diag.psi.values.clone())?;
    dict.set_item("chi", diag.chi.values.clone())?;
    dict.set_item("geopotential", diag.geopotential.values.clone())?;
    dict.set_item("pv", diag.pv.values.clone())?;
    dict.set_item("energy", energy)?;
    dict.set_item("mass", elliptic::total_mass(&state.inner, &mesh.inner))?;
    dict.set_item(
        "circulation",
        elliptic::total_circulation(&state.inner, &config, &mesh.inner),
    )?;
    dict.set_item(
        "potential_enstrophy",
        elliptic::potential_enstrophy(&state.inner, &config, &mesh.inner),
    )?;
    dict.set_item("iterations", diag.stats.iterations)?;
    dict.set_item("residual", diag.stats.residual)?;
    Ok(dict)
}

/// Semi-discrete right-hand side (dφ, dζ, dγ) for the chosen scheme.
#[pyfunction]
#[pyo3(signature = (mesh, state, scheme="energy-enstrophy", gravity=1.0, f0=1.0, tol=1e-11))]
fn tendency(
    mesh: &PyDualMesh,
    state: &PyState,
    scheme: &str,
    gravity: f64,
    f0: f64,
    tol: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let config = PhysicsConfig::f_plane(gravity, f0, &mesh.inner);
    let diag = elliptic::solve_psi_chi(&state.inner, &config, &mesh.inner, tol).map_err(err)?;
    let tend = dynamics::tendency(
        scheme_of(scheme)?,
        &state.inner,
        &diag,
        &config,
        &mesh.inner,
    )
    .map_err(err)?;
    Ok((tend.dphi.values, tend.dzeta.values, tend.dgamma.values))
}

/// Advances the state; returns (final_state, series) where series rows
/// are (t, mass, circulation, energy, potential_enstrophy).
#[pyfunction]
#[pyo3(signature = (mesh, state, steps, dt, scheme="energy-enstrophy", integrator="rk4",
                    gravity=1.0, f0=1.0, tol=1e-11, output_every=1))]
#[allow(clippy::too_many_arguments)]
fn run(
    mesh: &PyDualMesh,
    state: &PyState,
    steps: usize,
    dt: f64,
    scheme: &str,
    integrator: &str,
    gravity: f64,
    f0: f64,
    tol: f64,
    output_every: usize,
) -> PyResult<(PyState, Vec<SeriesRow>)> {
    let config = RunConfig {
        scheme: scheme_of(scheme)?,
        dt,
        n_steps: steps,
        integrator: integrator_of(integrator)?,
        solver_tol: tol,
        output_every,
        physics: PhysicsConfig::f_plane(gravity, f0, &mesh.inner),
    };
    let (final_state, series) =
        timeloop::run(&state.inner, &config, &mesh.inner, &mut NoSink).map_err(err)?;
    let rows = series
        .samples
        .iter()
        .map(|s| {
            (
                s.time,
                s.mass,
                s.circulation,
                s.energy,
                s.potential_enstrophy,
            )
        })
        .collect();
    Ok((PyState { inner: final_state }, rows))
}

/// Runs the discrete calculus identity suite; rows are
/// (name, max_defect, tolerance, passed).
#[pyfunction]
#[pyo3(signature = (mesh, seed=1, field_sets=20))]
fn verify_calculus(
    mesh: &PyDualMesh,
    seed: u64,
    field_sets: usize,
) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let report = verify::run_calculus_suite(&mesh.inner, seed, field_sets).map_err(err)?;
    Ok(report
        .rows
        .iter()
        .map(|r| (r.name.to_string(), r.max_defect, r.tolerance, r.passed()))
        .collect())
}

/// Z-grid dispersion comparison on a periodic mesh; returns a dict with
/// per-mode rows (mode, lambda, omega_numeric, omega_zgrid, abs_err).
#[pyfunction]
#[pyo3(signature = (mesh, f0=1.0, phibar=1.0, gravity=1.0))]
fn dispersion_analysis<'py>(
    py: Python<'py>,
    mesh: &PyDualMesh,
    f0: f64,
    phibar: f64,
    gravity: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let sys = dispersion::LinearizedSystem {
        f0,
        phibar,
        gravity,
    };
    let analysis = dispersion::analyze(&sys, &mesh.inner).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item(
        "modes",
        analysis
            .modes
            .iter()
            .map(|m| {
                (
                    m.mode,
                    m.laplacian_eigenvalue,
                    m.omega_numeric,
                    m.omega_zgrid,
                    m.abs_err,
                )
            })
            .collect::<Vec<_>>(),
    )?;
    dict.set_item("zero_modes", analysis.zero_modes)?;
    dict.set_item("expected_zero_modes", analysis.expected_zero_modes)?;
    dict.set_item("max_abs_err", analysis.max_abs_err)?;
    dict.set_item("max_real_part", analysis.max_real_part)?;
    Ok(dict)
}

#[pymodule]
fn dualswe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDualMesh>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(initialize_from_potentials, m)?)?;
    m.add_function(wrap_pyfunction!(solve_diagnostics, m)?)?;
    m.add_function(wrap_pyfunction!(tendency, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify_calculus, m)?)?;
    m.add_function(wrap_pyfunction!(dispersion_analysis, m)?)?;
    Ok(())
}
