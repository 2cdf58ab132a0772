//! Python bindings for the dispersion engine.
//!
//! Built as the `disperkit._native` extension; the `disperkit` package in
//! `python/` re-exports everything.

use disperkit as dk;
use num_complex::Complex64 as c64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: dk::Error) -> PyErr {
    match e {
        dk::Error::InvalidMaterial(_)
        | dk::Error::InvalidMesh(_)
        | dk::Error::InvalidConfig(_)
        | dk::Error::Parse { .. }
        | dk::Error::Contract(_)
        | dk::Error::Structural(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Material", frozen)]
struct PyMaterial(dk::Material);

#[pymethods]
impl PyMaterial {
    /// Isotropic material; `e` in Pa, `rho` in kg/m³.
    #[staticmethod]
    fn isotropic(e: f64, nu: f64, rho: f64) -> PyResult<Self> {
        dk::Material::isotropic(e, nu, rho).map(Self).map_err(err)
    }

    /// Fiber along the wave direction; `G23` follows from `e2` and `nu23`.
    #[staticmethod]
    fn transversely_isotropic(e1: f64, e2: f64, g12: f64, nu12: f64, nu23: f64, rho: f64) -> PyResult<Self> {
        dk::materials::transversely_isotropic_stiffness(e1, e2, g12, nu12, nu23, rho).map(Self).map_err(err)
    }

    fn rotated(&self, theta_deg: f64) -> Self {
        Self(self.0.rotated(theta_deg))
    }

    #[getter]
    fn density(&self) -> f64 {
        self.0.density
    }

    /// 6×6 Voigt stiffness as nested lists.
    #[getter]
    fn stiffness(&self) -> Vec<Vec<f64>> {
        self.0.stiffness.iter().map(|r| r.to_vec()).collect()
    }
}

#[pyclass(name = "Mesh", frozen)]
struct PyMesh(dk::CrossSectionMesh);

#[pymethods]
impl PyMesh {
    /// Laminate from a stacking sequence; `ply_thickness` and `a` in metres.
    #[staticmethod]
    #[pyo3(signature = (material, angles, ply_thickness, a, repeat = 1, symmetric = false, order = 4))]
    fn plate(
        material: &PyMaterial,
        angles: Vec<f64>,
        ply_thickness: f64,
        a: f64,
        repeat: usize,
        symmetric: bool,
        order: usize,
    ) -> PyResult<Self> {
        let layup = dk::Layup::from_sequence(material.0.clone(), &angles, repeat, symmetric, ply_thickness).map_err(err)?;
        dk::build_plate_mesh(&layup, order, a).map(Self).map_err(err)
    }

    /// Annulus with radii in units of `a`.
    #[staticmethod]
    fn annulus(material: &PyMaterial, r_in: f64, r_out: f64, n_circ: usize, n_rad: usize) -> PyResult<Self> {
        dk::build_annulus_mesh(r_in, r_out, n_circ, n_rad, material.0.clone()).map(Self).map_err(err)
    }

    /// L-section with lengths in units of `a`.
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    fn lshape(
        material: &PyMaterial,
        width: f64,
        height: f64,
        thickness: f64,
        n_thick: usize,
        n_width: usize,
        n_height: usize,
    ) -> PyResult<Self> {
        let shape = dk::LShape { width, height, thickness, n_thick, n_width, n_height };
        dk::build_lshape_mesh(&shape, material.0.clone()).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        dk::CrossSectionMesh::load(path).map(Self).map_err(err)
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    #[getter]
    fn dof_count(&self) -> usize {
        self.0.dof_count()
    }

    #[getter]
    fn element_count(&self) -> usize {
        self.0.elements.len()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.0.area()
    }

    fn __repr__(&self) -> String {
        format!("Mesh({} nodes, {} elements)", self.0.nodes.len(), self.0.elements.len())
    }
}

#[pyclass(name = "Matrices", frozen)]
struct PyMatrices(dk::SafeMatrices);

#[pymethods]
impl PyMatrices {
    #[new]
    #[pyo3(signature = (mesh, a = 1.0, c_t = 1.0))]
    fn new(py: Python<'_>, mesh: &PyMesh, a: f64, c_t: f64) -> PyResult<Self> {
        let mesh = &mesh.0;
        py.detach(|| dk::assemble(mesh, dk::Scales { a, c_t })).map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn scales(&self) -> (f64, f64) {
        (self.0.scales.a, self.0.scales.c_t)
    }
}

#[pyclass(name = "ModeSet", frozen)]
struct PyModeSet(dk::ModeSet);

#[pymethods]
impl PyModeSet {
    #[getter]
    fn k(&self) -> f64 {
        self.0.k
    }

    /// Ascending `λ = ω²`.
    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues.clone()
    }

    #[getter]
    fn omegas(&self) -> Vec<f64> {
        (0..self.0.len()).map(|i| self.0.omega(i)).collect()
    }

    /// Mode indices grouped into tracking objects.
    #[getter]
    fn clusters(&self) -> Vec<Vec<usize>> {
        self.0.clusters.clone()
    }

    /// M-normalized mode shape `i`.
    fn vector(&self, i: usize) -> PyResult<Vec<c64>> {
        if i >= self.0.len() {
            return Err(PyValueError::new_err(format!("mode {i} out of range for {} modes", self.0.len())));
        }
        Ok((0..self.0.vectors.nrows()).map(|r| self.0.vectors[(r, i)]).collect())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Eigenpairs at `k` up to `omega_max` (all modes if omitted), with
/// degenerate modes grouped.
#[pyfunction]
#[pyo3(signature = (matrices, k, omega_max = None))]
fn solve_modes(py: Python<'_>, matrices: &PyMatrices, k: f64, omega_max: Option<f64>) -> PyResult<PyModeSet> {
    let m = &matrices.0;
    let window = omega_max.map_or(dk::ModeWindow::all(), dk::ModeWindow::new);
    py.detach(|| {
        let set = dk::solve_modes(m, k, window)?;
        dk::cluster_degenerate(m, set, dk::eigensolve::DEFAULT_EPS_EIG, dk::eigensolve::DEFAULT_COUPLING_TOL)
    })
    .map(PyModeSet)
    .map_err(err)
}

/// MAC between two M-normalized vectors.
#[pyfunction]
fn mac(matrices: &PyMatrices, q_a: Vec<c64>, q_b: Vec<c64>) -> PyResult<f64> {
    dk::mac(&q_a, &q_b, &matrices.0.m).map_err(err)
}

/// Minimum-cost assignment; returns the column for each row (or None) and
/// the total cost.
#[pyfunction]
fn hungarian(cost: Vec<Vec<f64>>) -> PyResult<(Vec<Option<usize>>, f64)> {
    let nc = cost.first().map_or(0, Vec::len);
    if cost.iter().any(|r| r.len() != nc) {
        return Err(PyValueError::new_err("cost rows must have equal length"));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(PyValueError::new_err("cost entries must be finite"));
    }
    let a = dk::hungarian(&faer::Mat::from_fn(cost.len(), nc, |i, j| cost[i][j]));
    Ok((a.row_to_col, a.total_cost))
}

#[pyclass(name = "AdaptiveConfig", frozen)]
struct PyAdaptiveConfig(dk::AdaptiveConfig);

#[pymethods]
impl PyAdaptiveConfig {
    #[new]
    #[pyo3(signature = (k_min, k_max, n0, v_p_max = f64::INFINITY, eps_bar = 0.05, delta_k_min = 1e-3, subspace_tracking = true, max_iterations = 50))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        k_min: f64,
        k_max: f64,
        n0: usize,
        v_p_max: f64,
        eps_bar: f64,
        delta_k_min: f64,
        subspace_tracking: bool,
        max_iterations: usize,
    ) -> PyResult<Self> {
        let cfg = dk::AdaptiveConfig {
            k_min,
            k_max,
            n0,
            v_p_max,
            eps_bar,
            delta_k_min,
            subspace_tracking,
            max_iterations,
            ..Default::default()
        };
        cfg.validate().map_err(err)?;
        Ok(Self(cfg))
    }

    fn __repr__(&self) -> String {
        let c = &self.0;
        format!(
            "AdaptiveConfig(k_min={}, k_max={}, n0={}, v_p_max={}, eps_bar={}, delta_k_min={}, subspace_tracking={})",
            c.k_min, c.k_max, c.n0, c.v_p_max, c.eps_bar, c.delta_k_min, c.subspace_tracking
        )
    }
}

#[pyclass(name = "Branch", frozen)]
struct PyBranch(dk::Branch);

#[pymethods]
impl PyBranch {
    #[getter]
    fn label(&self) -> usize {
        self.0.label
    }

    #[getter]
    fn k(&self) -> Vec<f64> {
        self.0.samples.iter().map(|s| s.k).collect()
    }

    #[getter]
    fn omega(&self) -> Vec<f64> {
        self.0.samples.iter().map(|s| s.omega).collect()
    }

    #[getter]
    fn cluster_dim(&self) -> Vec<usize> {
        self.0.samples.iter().map(|s| s.cluster_dim).collect()
    }

    fn __len__(&self) -> usize {
        self.0.samples.len()
    }
}

#[pyclass(name = "Dataset", frozen)]
struct PyDataset(dk::DispersionDataset);

#[pymethods]
impl PyDataset {
    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.0.grid.clone()
    }

    #[getter]
    fn branches(&self) -> Vec<PyBranch> {
        self.0.branches.iter().cloned().map(PyBranch).collect()
    }

    /// Intervals left above tolerance at the minimum step.
    #[getter]
    fn flagged(&self) -> Vec<(f64, f64)> {
        self.0.flagged.clone()
    }

    #[getter]
    fn max_epsilon(&self) -> f64 {
        self.0.max_epsilon()
    }

    #[getter]
    fn omega_max(&self) -> f64 {
        self.0.omega_max
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations.len()
    }

    /// `(k_left, k_right, epsilon, flagged)` on the final grid.
    fn intervals(&self) -> Vec<(f64, f64, f64, bool)> {
        self.0.final_intervals().iter().map(|i| (i.k_left, i.k_right, i.epsilon, i.flagged)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} points, {} branches, max epsilon {:.4})",
            self.0.grid.len(),
            self.0.branches.len(),
            self.0.max_epsilon()
        )
    }
}

#[pyfunction]
fn run_adaptive(py: Python<'_>, matrices: &PyMatrices, config: &PyAdaptiveConfig) -> PyResult<PyDataset> {
    let (m, cfg) = (&matrices.0, &config.0);
    py.detach(|| dk::run_adaptive(m, cfg)).map(PyDataset).map_err(err)
}

/// Tracks on a fixed grid; `config` supplies the window and tolerances.
#[pyfunction]
fn uniform_sweep(py: Python<'_>, matrices: &PyMatrices, grid: Vec<f64>, config: &PyAdaptiveConfig) -> PyResult<PyDataset> {
    let (m, cfg) = (&matrices.0, &config.0);
    py.detach(|| dk::uniform_sweep(m, &grid, cfg)).map(PyDataset).map_err(err)
}

#[pymodule]
#[pyo3(name = "_native")]
fn disperkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMaterial>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyMatrices>()?;
    m.add_class::<PyModeSet>()?;
    m.add_class::<PyAdaptiveConfig>()?;
    m.add_class::<PyBranch>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(solve_modes, m)?)?;
    m.add_function(wrap_pyfunction!(mac, m)?)?;
    m.add_function(wrap_pyfunction!(hungarian, m)?)?;
    m.add_function(wrap_pyfunction!(run_adaptive, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_sweep, m)?)?;
    Ok(())
}
