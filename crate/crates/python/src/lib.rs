//! Python module `lindblad_cf_py`.
//!
//! Matrices cross the boundary as nested lists of Python `complex`.

use lindblad_cf::model::build_kitaev;
use lindblad_cf::observables::{echo_from_b, fcs_from_b, momentum_distribution_from_b};
use lindblad_cf::oracle::{Oracle, OracleQuery};
use lindblad_cf::{AnyonCorrelator, CMatrix, Dynamics, Error, GaussianOperator, KitaevParams, QuadraticModel, C64};
use ndarray::Array1;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Dimension(_) | Error::NotSquare { .. } | Error::OracleCap { .. } => {
            PyValueError::new_err(e.to_string())
        }
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_lists(m: &CMatrix) -> Vec<Vec<C64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

fn from_lists(rows: Vec<Vec<C64>>) -> PyResult<CMatrix> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(CMatrix::from_shape_fn((d, d), |(a, b)| rows[a][b]))
}

/// Quadratic Lindbladian with its propagator data.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    model: QuadraticModel,
    dynamics: Dynamics,
}

impl PyModel {
    fn wrap(model: QuadraticModel) -> PyResult<Self> {
        let dynamics = Dynamics::new(&model).map_err(err)?;
        Ok(PyModel { model, dynamics })
    }

    fn state(&self, state: &str) -> PyResult<GaussianOperator> {
        match state {
            "vacuum" => Ok(GaussianOperator::vacuum(self.model.n())),
            "steady" => GaussianOperator::steady(&self.dynamics).map_err(err),
            other => Err(PyValueError::new_err(format!("unknown state {other:?}"))),
        }
    }
}

#[pymethods]
impl PyModel {
    /// Boundary-driven Kitaev chain with gain on site 1 and loss on site N.
    #[staticmethod]
    #[pyo3(signature = (n, delta, mu, gamma_plus, gamma_minus, j = 1.0))]
    fn kitaev(n: usize, delta: f64, mu: f64, gamma_plus: f64, gamma_minus: f64, j: f64) -> PyResult<Self> {
        let model = build_kitaev(&KitaevParams::new(n, j, delta, mu, gamma_plus, gamma_minus)).map_err(err)?;
        Self::wrap(model)
    }

    /// Explicit `2N x 2N` Nambu Hamiltonian and length-`2N` dissipator vectors.
    #[staticmethod]
    #[pyo3(signature = (h, dissipators = vec![]))]
    fn from_matrices(h: Vec<Vec<C64>>, dissipators: Vec<Vec<C64>>) -> PyResult<Self> {
        let h = from_lists(h)?;
        let ls = dissipators.into_iter().map(Array1::from_vec).collect();
        Self::wrap(QuadraticModel::new(h, ls).map_err(err)?)
    }

    #[getter]
    fn n(&self) -> usize {
        self.model.n()
    }

    #[getter]
    fn gap(&self) -> f64 {
        self.dynamics.gap()
    }

    /// Rapidities `λ_α` of the single-particle generator.
    fn rapidities(&self) -> Vec<C64> {
        self.dynamics.spectrum().lambdas.to_vec()
    }

    /// Steady-state covariance `⟨Φ Φ†⟩`.
    fn steady_covariance(&self) -> PyResult<Vec<Vec<C64>>> {
        self.dynamics.steady_covariance().map(|b| to_lists(&b)).map_err(err)
    }

    /// Covariance at time `t` from `b0`.
    fn evolve(&self, b0: Vec<Vec<C64>>, t: f64) -> PyResult<Vec<Vec<C64>>> {
        let b0 = from_lists(b0)?;
        self.dynamics.evolve(&b0, t).map(|b| to_lists(&b)).map_err(err)
    }

    /// `iG^>_{lj}(t)` in the steady state, 1-based sites.
    fn anyon_greater(&self, l: usize, j: usize, t: f64, phi: f64) -> PyResult<C64> {
        AnyonCorrelator::new(&self.model)
            .and_then(|a| a.greater(l, j, t, phi))
            .map_err(err)
    }

    /// `iG^<_{lj}(t)` in the steady state, 1-based sites.
    fn anyon_lesser(&self, l: usize, j: usize, t: f64, phi: f64) -> PyResult<C64> {
        AnyonCorrelator::new(&self.model)
            .and_then(|a| a.lesser(l, j, t, phi))
            .map_err(err)
    }

    /// `P_n` of the charge on `sites` at time `t` from `"vacuum"` or `"steady"`.
    #[pyo3(signature = (sites, t, state = "vacuum"))]
    fn fcs(&self, sites: Vec<usize>, t: f64, state: &str) -> PyResult<Vec<f64>> {
        let s = self.state(state)?;
        let b = self.dynamics.evolve(s.b(), t).map_err(err)?;
        fcs_from_b(&b, &sites, t).map(|r| r.pn).map_err(err)
    }

    /// `(L(t), r(t))` for each time, starting from the vacuum.
    fn loschmidt(&self, times: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
        let b0 = GaussianOperator::vacuum(self.model.n());
        times
            .iter()
            .map(|&t| {
                let b = self.dynamics.evolve(b0.b(), t)?;
                echo_from_b(b0.b(), &b)
            })
            .collect::<Result<_, _>>()
            .map_err(err)
    }

    /// `(k, n(k))` in the steady state.
    fn momentum_distribution(&self, phi: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let b = self.dynamics.steady_covariance().map_err(err)?;
        momentum_distribution_from_b(&b, phi).map(|d| (d.k, d.nk)).map_err(err)
    }

    /// Largest difference between closed-form and Fock-space `iG^>` over all
    /// site pairs (N <= 5).
    fn oracle_anyon_error(&self, t: f64, phi: f64) -> PyResult<f64> {
        let o = Oracle::new(&self.model).map_err(err)?;
        let a = AnyonCorrelator::new(&self.model).map_err(err)?;
        let n = self.model.n();
        let mut worst = 0.0f64;
        for l in 1..=n {
            for j in 1..=n {
                let got = a.greater(l, j, t, phi).map_err(err)?;
                let want = o
                    .evaluate(&OracleQuery::AnyonGreater { l, j, t, phi })
                    .map_err(err)?
                    .scalar()
                    .unwrap();
                worst = worst.max((got - want).norm());
            }
        }
        Ok(worst)
    }

    fn __repr__(&self) -> String {
        format!("Model(n={}, gap={:.6e})", self.model.n(), self.dynamics.gap())
    }
}

#[pymodule]
fn lindblad_cf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
