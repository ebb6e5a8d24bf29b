//! Python bindings for `bss_core`.
//!
//! Matrices cross the boundary as lists of rows; structured reports come back
//! as JSON strings so they can be loaded with `json.loads`.

use bss_core::bss::{self, MarginConfig};
use bss_core::designs::{self, DesignKind, DesignSpec};
use bss_core::glm::{glm_margins, glm_solve_exact, GlmConfig, GlmFamily, GlmInstance};
use bss_core::linalg::{orthonormal_basis, sin_theta_distance, DEFAULT_RANK_TOL};
use bss_core::metric::{space_from_vectors, SolveMode};
use bss_core::model::{DesignMatrix, LinearInstance, DEFAULT_BUDGET};
use bss_core::{Error, ModelSubset};
use nalgebra::DVector;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn mode(name: &str) -> PyResult<SolveMode> {
    match name {
        "exact" => Ok(SolveMode::Exact),
        "greedy" => Ok(SolveMode::Greedy),
        "auto" => Ok(SolveMode::Auto),
        other => Err(PyValueError::new_err(format!("unknown mode '{other}'"))),
    }
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> PyResult<DesignMatrix> {
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("design rows have unequal lengths"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    DesignMatrix::from_rows(rows.len(), p, &flat).map_err(to_py)
}

fn rows_of(d: &DesignMatrix) -> Vec<Vec<f64>> {
    let x = d.matrix();
    (0..x.nrows())
        .map(|i| x.row(i).iter().copied().collect())
        .collect()
}

/// A linear regression instance `y = Xβ + σε`.
#[pyclass(name = "LinearModel")]
struct PyLinearModel {
    inner: LinearInstance,
}

#[pymethods]
impl PyLinearModel {
    /// Builds an instance; `y` is taken as given, drawn with `seed`, or noiseless.
    #[new]
    #[pyo3(signature = (design, beta, sigma=1.0, y=None, seed=None))]
    fn new(
        design: Vec<Vec<f64>>,
        beta: Vec<f64>,
        sigma: f64,
        y: Option<Vec<f64>>,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let x = matrix_from_rows(&design)?;
        let beta = DVector::from_vec(beta);
        let inner = match (y, seed) {
            (Some(y), _) => LinearInstance::new(x, beta, sigma, DVector::from_vec(y)),
            (None, Some(seed)) => LinearInstance::with_noise(x, beta, sigma, seed),
            (None, None) => LinearInstance::noiseless(x, beta),
        }
        .map_err(to_py)?;
        Ok(PyLinearModel { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.support.indices().to_vec()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y.iter().copied().collect()
    }

    fn rss(&self, subset: Vec<usize>) -> PyResult<f64> {
        self.inner.rss(&ModelSubset::new(subset)).map_err(to_py)
    }

    /// `(best subset, rss)` of exact best subset selection.
    #[pyo3(signature = (s_hat, budget=DEFAULT_BUDGET))]
    fn solve_exact(&self, s_hat: usize, budget: u128) -> PyResult<(Vec<usize>, f64)> {
        let sol = bss::solve_exact(&self.inner, s_hat, budget).map_err(to_py)?;
        Ok((sol.best.indices().to_vec(), sol.rss))
    }

    #[pyo3(signature = (s_hat, budget=DEFAULT_BUDGET))]
    fn tau_star(&self, s_hat: usize, budget: u128) -> PyResult<(f64, Vec<usize>)> {
        let m = bss::tau_star(&self.inner, s_hat, budget).map_err(to_py)?;
        Ok((m.value, m.subset.indices().to_vec()))
    }

    fn tau_hat(&self) -> PyResult<(f64, Vec<usize>)> {
        let m = bss::tau_hat(&self.inner).map_err(to_py)?;
        Ok((m.value, m.subset.indices().to_vec()))
    }

    /// Full margin report as JSON.
    #[pyo3(signature = (s_hat, config_json=None))]
    fn margins_json(&self, s_hat: usize, config_json: Option<&str>) -> PyResult<String> {
        let cfg: MarginConfig = match config_json {
            Some(text) => {
                serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?
            }
            None => MarginConfig::default(),
        };
        json(&bss::margin_report(&self.inner, s_hat, &cfg).map_err(to_py)?)
    }

    /// T and G complexities at one overlap, as JSON.
    #[pyo3(signature = (overlap, s_hat, mode="auto", budget=DEFAULT_BUDGET))]
    fn complexity_json(
        &self,
        overlap: Vec<usize>,
        s_hat: usize,
        mode: &str,
        budget: u128,
    ) -> PyResult<String> {
        let oc = bss::overlap_complexity(
            &self.inner,
            &ModelSubset::new(overlap),
            s_hat,
            budget,
            self::mode(mode)?,
        )
        .map_err(to_py)?;
        json(&oc)
    }
}

/// Gaussian design rows; `kind` is "independent", "equicorrelated" or "block".
#[pyfunction]
#[pyo3(signature = (kind, n, p, seed, c=0.0, r=0.0, normalize=false))]
fn sample_design(
    kind: &str,
    n: usize,
    p: usize,
    seed: u64,
    c: f64,
    r: f64,
    normalize: bool,
) -> PyResult<Vec<Vec<f64>>> {
    let kind = match kind {
        "independent" => DesignKind::Independent,
        "equicorrelated" => DesignKind::Equicorrelated { r },
        "block" => DesignKind::Block { c, r },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown design kind '{other}'"
            )))
        }
    };
    let spec = DesignSpec::new(kind, p, seed)
        .map_err(to_py)?
        .normalized(normalize);
    Ok(rows_of(&spec.sample(n).map_err(to_py)?))
}

/// Sine of the largest principal angle between the column spaces of `a` and `b`.
#[pyfunction]
fn sin_theta(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    let qa = orthonormal_basis(matrix_from_rows(&a)?.matrix(), DEFAULT_RANK_TOL);
    let qb = orthonormal_basis(matrix_from_rows(&b)?.matrix(), DEFAULT_RANK_TOL);
    sin_theta_distance(&qa, &qb).map_err(to_py)
}

/// Entropy and Sudakov complexities of a finite point set under the Euclidean metric.
#[pyfunction]
#[pyo3(signature = (points, mode="auto"))]
fn complexity<'py>(
    py: Python<'py>,
    points: Vec<Vec<f64>>,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = self::mode(mode)?;
    let vecs: Vec<DVector<f64>> = points.into_iter().map(DVector::from_vec).collect();
    let report = space_from_vectors(&vecs, "points")
        .and_then(|s| s.complexity(mode))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("size", report.size)?;
    d.set_item("distinct_size", report.distinct_size)?;
    d.set_item("min_sep", report.min_sep)?;
    d.set_item("diam", report.diam)?;
    d.set_item("entropy_complexity", report.entropy_complexity)?;
    d.set_item("sudakov_complexity", report.sudakov_complexity)?;
    d.set_item("exact", report.is_exact())?;
    Ok(d)
}

/// Large-sample `(ℰ_T², ℰ_G², τ*/β₁²)` on the block design.
#[pyfunction]
fn closed_form(c: f64, r: f64) -> (f64, f64, f64) {
    let f = designs::closed_form(c, r);
    (f.e_t_sq, f.e_g_sq, f.tau_ratio)
}

/// Correlation at which the two complexities cross on the equicorrelated design.
#[pyfunction]
fn solve_r0() -> f64 {
    designs::solve_r0()
}

/// GLM margins (and subset selection when `s_hat` is given) as JSON.
#[pyfunction]
#[pyo3(signature = (design, beta, family, seed, sigma=1.0, s_hat=None))]
fn glm_json(
    design: Vec<Vec<f64>>,
    beta: Vec<f64>,
    family: &str,
    seed: u64,
    sigma: f64,
    s_hat: Option<usize>,
) -> PyResult<String> {
    let family = match family {
        "linear" => GlmFamily::Linear { sigma },
        "logistic" => GlmFamily::Logistic,
        other => return Err(PyValueError::new_err(format!("unknown family '{other}'"))),
    };
    let x: DesignMatrix = matrix_from_rows(&design)?;
    let inst = GlmInstance::simulate(x, DVector::from_vec(beta), family, seed).map_err(to_py)?;
    let margins = glm_margins(&inst, &GlmConfig::default()).map_err(to_py)?;
    let bss = s_hat
        .map(|k| glm_solve_exact(&inst, k, DEFAULT_BUDGET))
        .transpose()
        .map_err(to_py)?;
    json(&serde_json::json!({ "margins": margins, "bss": bss }))
}

#[pymodule]
fn bss_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLinearModel>()?;
    m.add_function(wrap_pyfunction!(sample_design, m)?)?;
    m.add_function(wrap_pyfunction!(sin_theta, m)?)?;
    m.add_function(wrap_pyfunction!(complexity, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(solve_r0, m)?)?;
    m.add_function(wrap_pyfunction!(glm_json, m)?)?;
    Ok(())
}
