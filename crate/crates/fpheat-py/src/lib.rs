//! Python bindings for the fpheat numerical laboratory: the parameter
//! triple with its derived exponents, 1D grid fields, the fractional
//! p-Laplacian, the monotone explicit flow, inf/sup-convolutions, and the
//! regularity probes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fpheat::convolution;
use fpheat::doubling;
use fpheat::evolution::{self, EvolveControls};
use fpheat::grid::{Grid, GridField, SpaceTimeField};
use fpheat::norms;
use fpheat::operator::{self, ExtendedField};
use fpheat::params::FracParams;
use fpheat::quadrature::QuadConfig;
use fpheat::regularity;
use fpheat::tail::TailSpec;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Problem parameters `(s, p, d)` with derived exponents.
#[pyclass(name = "Params", skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: FracParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (s, p, d = 1))]
    fn new(s: f64, p: f64, d: usize) -> PyResult<Self> {
        Ok(Self { inner: FracParams::new(s, p, d).map_err(err)? })
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn q_c(&self) -> f64 {
        self.inner.q_c()
    }

    #[getter]
    fn gamma_barrier(&self) -> f64 {
        self.inner.gamma_barrier()
    }

    /// `(value, strict)`: the predicted time exponent and whether it is a
    /// strict upper bound.
    #[getter]
    fn alpha_predicted(&self) -> (f64, bool) {
        let a = self.inner.alpha_predicted();
        (a.value, a.is_strict())
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(s={}, p={}, d={}, q_c={}, alpha={})",
            self.inner.s(),
            self.inner.p(),
            self.inner.d(),
            self.inner.q_c(),
            self.inner.alpha_predicted()
        )
    }
}

/// Scalar field on a symmetric 1D grid with an exterior tail.
#[pyclass(name = "Field", skip_from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: GridField,
}

#[pymethods]
impl PyField {
    /// `Field(half_width, values, tail)` with `tail` one of
    /// `"zero"`, `"constant <c>"`, `"bump <amp> <radius>"`,
    /// `"power <amp> <beta>"`, `"linear <g>"`.
    #[new]
    #[pyo3(signature = (half_width, values, tail = "zero"))]
    fn new(half_width: f64, values: Vec<f64>, tail: &str) -> PyResult<Self> {
        let grid = Grid::symmetric_1d(half_width, values.len()).map_err(err)?;
        let tail = TailSpec::parse(tail).map_err(err)?;
        Ok(Self { inner: GridField::new(grid, values, tail).map_err(err)? })
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        let g = self.inner.grid();
        (0..g.len()).map(|i| g.node_position(i)[0]).collect()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.grid().h()
    }

    /// Extended evaluation: interpolation inside the box, tail outside.
    fn __call__(&self, x: f64) -> f64 {
        self.inner.eval_extended(&[x])
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }
}

/// Stored trajectory of the flow.
#[pyclass(name = "Trajectory")]
struct PyTrajectory {
    inner: SpaceTimeField,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    fn slice(&self, k: usize) -> PyResult<PyField> {
        if k >= self.inner.len() {
            return Err(PyValueError::new_err(format!("slice index {k} out of range")));
        }
        Ok(PyField { inner: self.inner.slice_field(k) })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// `J_p(tau) = |tau|^{p-2} tau`.
#[pyfunction]
fn j_p(tau: f64, p: f64) -> f64 {
    operator::j_p(tau, p)
}

/// Pointwise fractional p-Laplacian of a field; returns `(value, error)`.
#[pyfunction]
fn frac_p_laplacian(field: &PyField, x: f64, params: &PyParams) -> PyResult<(f64, f64)> {
    let quad = QuadConfig::for_grid(field.inner.grid());
    let scene = ExtendedField::new(&field.inner);
    let r = operator::frac_p_laplacian_point(&scene, &[x], &params.inner, &quad).map_err(err)?;
    Ok((r.value, r.err))
}

/// Runs the monotone explicit flow to `t_end`. By default every step is
/// stored; pass `store_times` to clip steps onto exact times (e.g. dyadic
/// times for the temporal exponent fit).
#[pyfunction]
#[pyo3(signature = (field, params, t_end, store_every = 1, store_times = None))]
fn evolve(
    field: &PyField,
    params: &PyParams,
    t_end: f64,
    store_every: usize,
    store_times: Option<Vec<f64>>,
) -> PyResult<PyTrajectory> {
    let quad = QuadConfig::for_grid(field.inner.grid());
    let mut controls = EvolveControls::new(t_end);
    controls.store_every = store_every;
    controls.store_times = store_times;
    let traj = evolution::evolve(&field.inner, &controls, &params.inner, &quad).map_err(err)?;
    Ok(PyTrajectory { inner: traj })
}

/// Largest monotone time step for the current state.
#[pyfunction]
#[pyo3(signature = (field, params, delta = 1e-8))]
fn stable_dt(field: &PyField, params: &PyParams, delta: f64) -> PyResult<f64> {
    let quad = QuadConfig::for_grid(field.inner.grid());
    evolution::stable_dt(&field.inner, &params.inner, &quad, delta).map_err(err)
}

/// `(t, F)` Gagliardo energy trace along the trajectory plus the
/// per-step dissipation flag.
#[pyfunction]
fn energy_trace(traj: &PyTrajectory, params: &PyParams) -> PyResult<(Vec<(f64, f64)>, bool)> {
    let quad = QuadConfig::for_grid(traj.inner.grid());
    let tr = evolution::energy_trace(&traj.inner, &params.inner, &quad).map_err(err)?;
    Ok((tr.points, tr.dissipation_ok))
}

/// Tail norm of the extended field.
#[pyfunction]
fn tail_norm(field: &PyField, params: &PyParams) -> PyResult<(f64, f64)> {
    let mut quad = QuadConfig::for_grid(field.inner.grid());
    quad.tol = 1e-6;
    let r = norms::tail_norm_field(&field.inner, &params.inner, &quad).map_err(err)?;
    Ok((r.value, r.err))
}

/// Gagliardo seminorm of the grid interpolant over the box.
#[pyfunction]
fn gagliardo_seminorm(field: &PyField, params: &PyParams) -> PyResult<(f64, f64)> {
    let g = field.inner.grid();
    let quad = QuadConfig::for_grid(g);
    let lo = g.lo(0);
    let hi = g.hi(0);
    let inner = field.inner.clone();
    let f = move |x: &[f64]| inner.interp(x);
    let r = norms::gagliardo_seminorm(&f, &[(lo, hi)], &params.inner, &quad).map_err(err)?;
    Ok((r.value, r.err))
}

/// Discrete parabolic inf-convolution of a single slice.
#[pyfunction]
fn inf_convolution(field: &PyField, eps: f64) -> PyResult<PyField> {
    let mut st = SpaceTimeField::new(field.inner.grid().clone(), field.inner.tail().clone());
    st.push(0.0, field.inner.values().to_vec()).map_err(err)?;
    let out = convolution::inf_convolution(&st, eps).map_err(err)?;
    Ok(PyField { inner: out.slice_field(0) })
}

/// Discrete parabolic sup-convolution of a single slice.
#[pyfunction]
fn sup_convolution(field: &PyField, eps: f64) -> PyResult<PyField> {
    let mut st = SpaceTimeField::new(field.inner.grid().clone(), field.inner.tail().clone());
    st.push(0.0, field.inner.values().to_vec()).map_err(err)?;
    let out = convolution::sup_convolution(&st, eps).map_err(err)?;
    Ok(PyField { inner: out.slice_field(0) })
}

/// Minimizer of `f(eta) = eta + c*eta^{(1-gamma)(p-1)}`.
#[pyfunction]
fn eta_optimize(c: f64, gamma: f64, p: f64) -> PyResult<f64> {
    fpheat::barrier::eta_optimize(c, gamma, p).map_err(err)
}

/// `(L, kappa, r_squared)` spatial estimates over `[lo, hi]`.
#[pyfunction]
fn spatial_lipschitz(
    field: &PyField,
    lo: f64,
    hi: f64,
) -> PyResult<(f64, Option<f64>, Option<f64>)> {
    let est =
        regularity::spatial_lipschitz_estimate(&field.inner, &[(lo, hi)]).map_err(err)?;
    Ok((
        est.lipschitz,
        est.fit.map(|f| f.exponent),
        est.fit.map(|f| f.r_squared),
    ))
}

/// `(alpha, r_squared)` temporal exponent fitted over the probe region.
#[pyfunction]
fn temporal_exponent(traj: &PyTrajectory, lo: f64, hi: f64) -> PyResult<(f64, f64)> {
    let t_lo = traj.inner.times()[0];
    let t_hi = *traj.inner.times().last().unwrap();
    let fit = regularity::temporal_exponent_estimate(&traj.inner, &[(lo, hi)], t_lo, t_hi)
        .map_err(err)?;
    Ok((fit.exponent, fit.r_squared))
}

/// Certified Lipschitz constant from the doubling functional (profile
/// `omega(r) = r`); the grid box must contain `B_1`.
#[pyfunction]
#[pyo3(signature = (field, l2 = 10.0, beta_star = 1.0, tol = 1e-3))]
fn lipschitz_from_doubling(
    field: &PyField,
    l2: f64,
    beta_star: f64,
    tol: f64,
) -> PyResult<f64> {
    doubling::lipschitz_from_doubling(&field.inner, l2, beta_star, tol).map_err(err)
}

#[pymodule]
fn fpheat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(j_p, m)?)?;
    m.add_function(wrap_pyfunction!(frac_p_laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(stable_dt, m)?)?;
    m.add_function(wrap_pyfunction!(energy_trace, m)?)?;
    m.add_function(wrap_pyfunction!(tail_norm, m)?)?;
    m.add_function(wrap_pyfunction!(gagliardo_seminorm, m)?)?;
    m.add_function(wrap_pyfunction!(inf_convolution, m)?)?;
    m.add_function(wrap_pyfunction!(sup_convolution, m)?)?;
    m.add_function(wrap_pyfunction!(eta_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_lipschitz, m)?)?;
    m.add_function(wrap_pyfunction!(temporal_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(lipschitz_from_doubling, m)?)?;
    Ok(())
}
