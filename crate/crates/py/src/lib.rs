//! Python bindings exposing the main types and operations: group models and
//! elements, pentagon solutions with their map bundle, symmetric
//! factorization, verification suites and the root-system data.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;

use pentalab_core::almost::{AlmostGroup, AlmostGroupElement};
use pentalab_core::dynkin;
use pentalab_core::factorize::{FactorizationContext, Theta};
use pentalab_core::maps::PentagonSolution;
use pentalab_core::matrix::RatMatrix;
use pentalab_core::model::{GroupElement, GroupModel, SExponents, SeedStream};
use pentalab_core::rational::Rational;
use pentalab_core::verify::{run_suite, Suite, VerifyConfig};
use pentalab_core::Error;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_rational(s: &str) -> PyResult<Rational> {
    s.parse().map_err(py_err)
}

fn matrix_to_rows(m: &RatMatrix) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j).to_string()).collect())
        .collect()
}

fn matrix_from_rows(rows: Vec<Vec<String>>) -> PyResult<RatMatrix> {
    let parsed: Vec<Vec<Rational>> = rows
        .into_iter()
        .map(|row| row.iter().map(|s| parse_rational(s)).collect())
        .collect::<PyResult<_>>()?;
    RatMatrix::from_rows(parsed).map_err(py_err)
}

/// One of the three group models.
#[pyclass(name = "Model", skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: GroupModel,
}

#[pymethods]
impl PyModel {
    /// The two-coordinate upper triangular model.
    #[staticmethod]
    fn tri2() -> Self {
        PyModel { inner: GroupModel::Tri2 }
    }

    /// The four-coordinate triangular model; `s` defaults to ("0","-1","1").
    #[staticmethod]
    #[pyo3(signature = (s = None))]
    fn sl3s(s: Option<[String; 3]>) -> PyResult<Self> {
        let inner = match s {
            None => GroupModel::sl3s_standard(),
            Some(parts) => {
                let r: Vec<Rational> = parts
                    .iter()
                    .map(|p| parse_rational(p))
                    .collect::<PyResult<_>>()?;
                GroupModel::Sl3s(SExponents::new(&r[0], &r[1], &r[2]).map_err(py_err)?)
            }
        };
        Ok(PyModel { inner })
    }

    /// The block matrix model on invertible 2N x 2N matrices.
    #[staticmethod]
    fn block2n(n: usize) -> PyResult<Self> {
        Ok(PyModel { inner: GroupModel::block2n(n).map_err(py_err)? })
    }

    fn name(&self) -> String {
        self.inner.name().into()
    }

    fn identity(&self) -> PyElement {
        PyElement { inner: self.inner.identity() }
    }

    /// Element from coordinate strings (tuple models).
    fn element(&self, coords: Vec<String>) -> PyResult<PyElement> {
        let parsed: Vec<Rational> = coords
            .iter()
            .map(|s| parse_rational(s))
            .collect::<PyResult<_>>()?;
        let inner = match &self.inner {
            GroupModel::Tri2 => {
                if parsed.len() != 2 {
                    return Err(PyValueError::new_err("tri2 needs 2 coordinates"));
                }
                GroupElement::tri2(parsed[0].clone(), parsed[1].clone()).map_err(py_err)?
            }
            GroupModel::Sl3s(_) => {
                if parsed.len() != 4 {
                    return Err(PyValueError::new_err("sl3s needs 4 coordinates"));
                }
                GroupElement::sl3s(
                    self.inner.clone(),
                    [parsed[0].clone(), parsed[1].clone(), parsed[2].clone(), parsed[3].clone()],
                )
                .map_err(py_err)?
            }
            GroupModel::Block2n { .. } => {
                return Err(PyValueError::new_err("use element_matrix for the block model"))
            }
        };
        Ok(PyElement { inner })
    }

    /// Element from a matrix, given as rows of rational strings.
    fn element_matrix(&self, rows: Vec<Vec<String>>) -> PyResult<PyElement> {
        let m = matrix_from_rows(rows)?;
        match &self.inner {
            GroupModel::Block2n { n } => Ok(PyElement {
                inner: GroupElement::block(*n, m).map_err(py_err)?,
            }),
            _ => Err(PyValueError::new_err("element_matrix applies to the block model")),
        }
    }

    /// Deterministic random element.
    #[pyo3(signature = (seed, bound = 10))]
    fn sample(&self, seed: u64, bound: u32) -> PyResult<PyElement> {
        let mut stream = SeedStream::new(seed);
        Ok(PyElement {
            inner: self.inner.sample(&mut stream, bound).map_err(py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.inner.name())
    }
}

/// A group element tagged with its model.
#[pyclass(name = "Element", skip_from_py_object)]
#[derive(Clone)]
struct PyElement {
    inner: GroupElement,
}

#[pymethods]
impl PyElement {
    fn mul(&self, rhs: &PyElement) -> PyResult<PyElement> {
        Ok(PyElement { inner: self.inner.mul(&rhs.inner).map_err(py_err)? })
    }

    fn inv(&self) -> PyElement {
        PyElement { inner: self.inner.inv() }
    }

    fn coords(&self) -> Vec<String> {
        self.inner.coord_list().iter().map(|r| r.to_string()).collect()
    }

    fn to_matrix(&self) -> Vec<Vec<String>> {
        matrix_to_rows(&self.inner.to_matrix())
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("element serializes")
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<PyElement> {
        Ok(PyElement {
            inner: serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?,
        })
    }

    fn __eq__(&self, other: &PyElement) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Element({})", self.to_json())
    }
}

fn build_theta(model: &GroupModel, theta_json: Option<&str>) -> PyResult<Theta> {
    match theta_json {
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string())),
        None => Ok(match model {
            GroupModel::Tri2 => Theta::tri2(Rational::one(), Rational::one()).expect("nonzero"),
            GroupModel::Sl3s(_) => Theta::sl3s(Rational::one(), Rational::one()).expect("nonzero"),
            GroupModel::Block2n { n } => Theta::block_scalar(*n, Rational::one()).expect("nonzero"),
        }),
    }
}

/// A pentagon solution: a model plus conjugating element, exposing the map
/// bundle and the pair transformation.
#[pyclass(name = "Solution")]
struct PySolution {
    inner: PentagonSolution,
}

#[pymethods]
impl PySolution {
    /// `theta` is a JSON object such as `{"model":"tri2","b":"-1","c":"1"}`;
    /// omitted, all parameters default to 1.
    #[new]
    #[pyo3(signature = (model, theta = None))]
    fn new(model: &PyModel, theta: Option<&str>) -> PyResult<Self> {
        let t = build_theta(&model.inner, theta)?;
        let ctx = FactorizationContext::new(model.inner.clone(), t).map_err(py_err)?;
        Ok(PySolution { inner: PentagonSolution::new(ctx) })
    }

    /// The control solution with `rho` the group inverse.
    #[staticmethod]
    fn degenerate(model: &PyModel) -> PySolution {
        PySolution { inner: PentagonSolution::degenerate(model.inner.clone()) }
    }

    fn theta_unipotent(&self) -> bool {
        self.inner.theta_unipotent()
    }

    fn theta_square_central(&self) -> bool {
        self.inner.theta_square_central()
    }

    #[pyo3(signature = (seed, bound = 10))]
    fn sample_point(&self, seed: u64, bound: u32) -> PyResult<PyElement> {
        let mut stream = SeedStream::new(seed);
        Ok(PyElement {
            inner: self.inner.sample_point(&mut stream, bound).map_err(py_err)?,
        })
    }

    fn rho(&self, x: &PyElement) -> PyResult<PyElement> {
        Ok(PyElement { inner: self.inner.rho(&x.inner).map_err(py_err)? })
    }

    fn rho_inv(&self, x: &PyElement) -> PyResult<PyElement> {
        Ok(PyElement { inner: self.inner.rho_inv(&x.inner).map_err(py_err)? })
    }

    fn j(&self, x: &PyElement) -> PyResult<PyElement> {
        Ok(PyElement { inner: self.inner.j_map(&x.inner).map_err(py_err)? })
    }

    fn k(&self, x: &PyElement) -> PyResult<PyElement> {
        Ok(PyElement { inner: self.inner.k_map(&x.inner).map_err(py_err)? })
    }

    fn dot(&self, x: &PyElement, y: &PyElement) -> PyResult<PyElement> {
        Ok(PyElement { inner: self.inner.dot(&x.inner, &y.inner).map_err(py_err)? })
    }

    fn star(&self, x: &PyElement, y: &PyElement) -> PyResult<PyElement> {
        Ok(PyElement { inner: self.inner.star(&x.inner, &y.inner).map_err(py_err)? })
    }

    fn odot(&self, x: &PyElement, y: &PyElement) -> PyResult<PyElement> {
        Ok(PyElement { inner: self.inner.odot(&x.inner, &y.inner).map_err(py_err)? })
    }

    fn s(&self, x: &PyElement, y: &PyElement) -> PyResult<(PyElement, PyElement)> {
        let (a, b) = self.inner.s_map(&x.inner, &y.inner).map_err(py_err)?;
        Ok((PyElement { inner: a }, PyElement { inner: b }))
    }

    fn s_inv(&self, u: &PyElement, v: &PyElement) -> PyResult<(PyElement, PyElement)> {
        let (a, b) = self.inner.s_inv(&u.inner, &v.inner).map_err(py_err)?;
        Ok((PyElement { inner: a }, PyElement { inner: b }))
    }

    fn pentagon_check(&self, x: &PyElement, y: &PyElement, z: &PyElement) -> PyResult<bool> {
        self.inner.pentagon_check(&x.inner, &y.inner, &z.inner).map_err(py_err)
    }

    /// Factor an ambient matrix; returns a JSON string with the four parts.
    fn factor(&self, rows: Vec<Vec<String>>) -> PyResult<String> {
        let ctx = self
            .inner
            .context()
            .ok_or_else(|| PyValueError::new_err("degenerate solution has no factorization"))?;
        let g = matrix_from_rows(rows)?;
        let f = ctx.factor(&g).map_err(py_err)?;
        let out = serde_json::json!({
            "gp": f.gp,
            "gm": f.gm,
            "gbp": f.gbp,
            "gbm": f.gbm,
            "verified": ctx.factorization_holds(&g, &f),
        });
        Ok(out.to_string())
    }

    fn __repr__(&self) -> String {
        format!("Solution(model={})", self.inner.model().name())
    }
}

/// Element of the partial group rebuilt from an involutive j: either a
/// pair of base elements or the adjoined conjugating symbol.
#[pyclass(name = "AlmostElement", skip_from_py_object)]
#[derive(Clone)]
struct PyAlmostElement {
    inner: AlmostGroupElement,
}

#[pymethods]
impl PyAlmostElement {
    #[staticmethod]
    fn theta() -> Self {
        PyAlmostElement { inner: AlmostGroupElement::Theta }
    }

    #[staticmethod]
    fn pair(a: &PyElement, b: &PyElement) -> PyResult<Self> {
        Ok(PyAlmostElement {
            inner: AlmostGroupElement::pair(a.inner.clone(), b.inner.clone()).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("element serializes")
    }

    fn __eq__(&self, other: &PyAlmostElement) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("AlmostElement({})", self.to_json())
    }
}

/// The partial group on pairs plus the adjoined conjugating symbol.
#[pyclass(name = "AlmostGroup")]
struct PyAlmostGroup {
    inner: AlmostGroup,
}

#[pymethods]
impl PyAlmostGroup {
    #[new]
    #[pyo3(signature = (model, theta = None))]
    fn new(model: &PyModel, theta: Option<&str>) -> PyResult<Self> {
        let t = build_theta(&model.inner, theta)?;
        Ok(PyAlmostGroup {
            inner: AlmostGroup::new(&model.inner, &t).map_err(py_err)?,
        })
    }

    fn unit(&self) -> PyAlmostElement {
        PyAlmostElement { inner: self.inner.unit() }
    }

    fn mul(&self, p: &PyAlmostElement, q: &PyAlmostElement) -> PyResult<PyAlmostElement> {
        Ok(PyAlmostElement {
            inner: self.inner.mul(&p.inner, &q.inner).map_err(py_err)?,
        })
    }

    fn inv(&self, p: &PyAlmostElement) -> PyResult<PyAlmostElement> {
        Ok(PyAlmostElement {
            inner: self.inner.inv_element(&p.inner).map_err(py_err)?,
        })
    }
}

/// Runs one verification suite, returning the JSON report as a string.
#[pyfunction]
#[pyo3(signature = (model, suite, theta = None, samples = 100, seed = 0, bound = 10, shards = 1))]
fn verify_suite(
    model: &PyModel,
    suite: &str,
    theta: Option<&str>,
    samples: usize,
    seed: u64,
    bound: u32,
    shards: usize,
) -> PyResult<String> {
    let t = build_theta(&model.inner, theta)?;
    let cfg = VerifyConfig::new(model.inner.clone(), t)
        .with_samples(samples)
        .with_seed(seed)
        .with_bound(bound)
        .with_shards(shards);
    let suites = Suite::parse(suite).map_err(py_err)?;
    if suites.len() != 1 {
        let reports = pentalab_core::verify::run_suites(&suites, &cfg).map_err(py_err)?;
        return Ok(serde_json::to_string(&reports).expect("reports serialize"));
    }
    let report = run_suite(suites[0], &cfg).map_err(py_err)?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}

fn parse_type(family: &str, rank: usize) -> PyResult<dynkin::DynkinType> {
    let fam = family.parse().map_err(py_err)?;
    dynkin::DynkinType::new(fam, rank).map_err(py_err)
}

/// Cartan matrix as integer rows.
#[pyfunction]
fn cartan(family: &str, rank: usize) -> PyResult<Vec<Vec<i64>>> {
    let m = dynkin::cartan_matrix(parse_type(family, rank)?).map_err(py_err)?;
    Ok((0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| m.get(i, j).to_i64().expect("integer entries"))
                .collect()
        })
        .collect())
}

/// Images of all vertices under the diagram involution, one-based.
#[pyfunction]
fn tau(family: &str, rank: usize) -> PyResult<Vec<usize>> {
    let t = parse_type(family, rank)?;
    (1..=rank)
        .map(|i| dynkin::tau(t, i).map_err(py_err))
        .collect()
}

/// Splitting dimensions `(dim_h0, dim_hprime)`.
#[pyfunction]
fn dims(family: &str, rank: usize) -> PyResult<(usize, usize)> {
    Ok(dynkin::h_decomposition_dims(parse_type(family, rank)?))
}

#[pymodule]
fn pentalab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyElement>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyAlmostElement>()?;
    m.add_class::<PyAlmostGroup>()?;
    m.add_function(wrap_pyfunction!(verify_suite, m)?)?;
    m.add_function(wrap_pyfunction!(cartan, m)?)?;
    m.add_function(wrap_pyfunction!(tau, m)?)?;
    m.add_function(wrap_pyfunction!(dims, m)?)?;
    Ok(())
}
