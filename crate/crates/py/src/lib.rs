//! Python module `x4p`.
//!
//! ```python
//! import x4p
//! spans = x4p.GradedSpans(3, 2)
//! spans.dims()            # [9, 33]
//! x4p.conjecture_bound(3, 2)  # 36
//! ```

use num_bigint::BigInt;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use x4p_core::cusps::{self, CuspRelation};
use x4p_core::span::{compute_spans, RelationStatus, Truncation};
use x4p_core::{formulas, generators, linalg, primes};
use x4p_core::{CertPolicy, DimensionReport, Error, IntMatrix};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::CertificationFailed { .. } | Error::BoundViolation { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<BigInt>>) -> PyResult<IntMatrix> {
    IntMatrix::from_rows(&rows).map_err(to_py)
}

type PyRelation = (Vec<(String, BigInt)>, bool);

/// Truncated q-expansion on the grid q^(n/denominator).
#[pyclass(name = "QExpansion", module = "x4p", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyQExpansion(x4p_core::QExpansion);

#[pymethods]
impl PyQExpansion {
    #[new]
    fn new(denominator: u64, coefficients: Vec<BigInt>) -> PyResult<Self> {
        if denominator == 0 {
            return Err(PyValueError::new_err("denominator must be positive"));
        }
        Ok(PyQExpansion(x4p_core::QExpansion::from_coeffs(
            denominator,
            coefficients,
        )))
    }

    #[getter]
    fn denominator(&self) -> u64 {
        self.0.grid_denominator()
    }

    /// Residue class mod the denominator carrying every nonzero coefficient.
    #[getter]
    fn support_class(&self) -> Option<u64> {
        self.0.support_class().or_else(|| self.0.detect_class())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __getitem__(&self, n: usize) -> PyResult<BigInt> {
        if n >= self.0.len() {
            return Err(pyo3::exceptions::PyIndexError::new_err(n));
        }
        Ok(self.0.coeff(n))
    }

    fn coefficients(&self) -> Vec<BigInt> {
        self.0.to_dense()
    }

    /// Nonzero (n, c_n) pairs.
    fn terms(&self) -> Vec<(usize, BigInt)> {
        self.0.terms()
    }

    fn truncate(&self, length: usize) -> PyResult<Self> {
        self.0.truncate(length).map(PyQExpansion).map_err(to_py)
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        self.0.add(&other.0).map(PyQExpansion).map_err(to_py)
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        self.0.sub(&other.0).map(PyQExpansion).map_err(to_py)
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        self.0.mul(&other.0).map(PyQExpansion).map_err(to_py)
    }

    fn scale(&self, c: BigInt) -> Self {
        PyQExpansion(self.0.scale(&c))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0.grid_denominator() == other.0.grid_denominator() && self.0.to_dense() == other.0.to_dense()
    }

    fn __repr__(&self) -> String {
        let head: Vec<String> = self
            .0
            .terms()
            .iter()
            .take(6)
            .map(|(n, c)| format!("{c}*q^({n}/{})", self.0.grid_denominator()))
            .collect();
        format!("QExpansion(len={}, {} + ...)", self.0.len(), head.join(" + "))
    }
}

/// The 3(p+1) generators of V as (label, expansion) pairs, truncated to
/// `length` terms (the valence bound for weight `kmax` by default).
#[pyfunction]
#[pyo3(signature = (p, length=None, kmax=3))]
fn spanning_set(p: u64, length: Option<usize>, kmax: u32) -> PyResult<Vec<(String, PyQExpansion)>> {
    let len = match length {
        Some(len) => len,
        None => generators::truncation_bound(p, kmax as u64).map_err(to_py)?,
    };
    let gs = generators::spanning_set(p, len).map_err(to_py)?;
    Ok(gs
        .entries
        .into_iter()
        .map(|(l, e)| (l.to_string(), PyQExpansion(e)))
        .collect())
}

/// Generator labels of a basis of V, in selection order.
#[pyfunction]
#[pyo3(signature = (p, kmax=3, seed=0))]
fn basis_labels(py: Python<'_>, p: u64, kmax: u32, seed: u64) -> PyResult<Vec<String>> {
    let len = generators::truncation_bound(p, kmax as u64).map_err(to_py)?;
    let gs = py
        .detach(|| generators::basis_of_v(p, len, &CertPolicy::default_modular(seed)))
        .map_err(to_py)?;
    Ok(gs.basis_labels().iter().map(ToString::to_string).collect())
}

/// Spans W_1, ..., W_kmax of products of basis generators.
#[pyclass(name = "GradedSpans", module = "x4p", frozen)]
struct PyGradedSpans(x4p_core::GradedSpans);

#[pymethods]
impl PyGradedSpans {
    /// `cert` is "modular<N>" or "bareiss"; `length` below the valence
    /// bound needs `allow_unsound`.
    #[new]
    #[pyo3(signature = (p, kmax, length=None, allow_unsound=false, cert="modular2", seed=0))]
    fn new(
        py: Python<'_>,
        p: u64,
        kmax: u32,
        length: Option<usize>,
        allow_unsound: bool,
        cert: &str,
        seed: u64,
    ) -> PyResult<Self> {
        let policy = match cert {
            "bareiss" => CertPolicy::FractionFree,
            s => match s.strip_prefix("modular").and_then(|n| n.parse::<usize>().ok()) {
                Some(n) if n >= 1 => CertPolicy::modular(n, (2 * n).max(8), 62, seed).map_err(to_py)?,
                _ => {
                    return Err(PyValueError::new_err(format!(
                        "expected modular<N> or bareiss, got {s:?}"
                    )))
                }
            },
        };
        let truncation = match length {
            None => Truncation::Sturm,
            Some(len) => Truncation::Fixed { len, allow_unsound },
        };
        let spans = py
            .detach(|| compute_spans(p, kmax, truncation, &policy))
            .map_err(to_py)?;
        Ok(PyGradedSpans(spans))
    }

    #[getter]
    fn p(&self) -> u64 {
        self.0.p()
    }

    #[getter]
    fn truncation(&self) -> usize {
        self.0.truncation()
    }

    #[getter]
    fn unsound(&self) -> bool {
        self.0.unsound
    }

    /// dim W_k for k = 1..kmax.
    fn dims(&self) -> Vec<usize> {
        self.0.dims()
    }

    /// Basis monomials of W_k, e.g. "x0^2*x3", over the basis variables x_i.
    fn basis(&self, k: u32) -> PyResult<Vec<String>> {
        let span = self.0.span(k).ok_or_else(|| to_py(Error::DegreeUnavailable(k)))?;
        Ok(span.basis_monomials.iter().map(ToString::to_string).collect())
    }

    fn basis_expansions(&self, k: u32) -> PyResult<Vec<PyQExpansion>> {
        let exps = self
            .0
            .basis_expansions(k)
            .ok_or_else(|| to_py(Error::DegreeUnavailable(k)))?;
        Ok(exps.iter().cloned().map(PyQExpansion).collect())
    }

    /// Degree-k relations as lists of (monomial, coefficient) with a flag
    /// telling whether each was verified over the integers.
    fn relations(&self, py: Python<'_>, k: u32) -> PyResult<Vec<PyRelation>> {
        let rels = py.detach(|| self.0.extract_relations(k, true)).map_err(to_py)?;
        Ok(rels
            .into_iter()
            .map(|r| {
                let terms = r.terms.into_iter().map(|(m, c)| (m.to_string(), c)).collect();
                (terms, r.status == RelationStatus::Exact)
            })
            .collect())
    }

    /// The dimension report as JSON.
    fn report_json(&self) -> PyResult<String> {
        let report = DimensionReport::from_spans(&self.0, false).map_err(to_py)?;
        serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Cusp classes of X(4p) as lists of (a, c) vectors; the first one of each
/// class is its representative.
#[pyfunction]
#[pyo3(signature = (p, relation="sim"))]
fn cusp_classes(p: u64, relation: &str) -> PyResult<Vec<Vec<(i64, i64)>>> {
    let relation: CuspRelation = relation.parse().map_err(PyValueError::new_err)?;
    let table = cusps::cusp_classes(p, relation).map_err(to_py)?;
    Ok(table
        .classes
        .iter()
        .map(|c| c.iter().map(|v| (v.a, v.c)).collect())
        .collect())
}

#[pyfunction]
fn dim_mk_gamma4(k: u64) -> u64 {
    formulas::dim_mk_gamma4(k)
}

#[pyfunction]
fn dim_mk_gammapm(p: u64, k: u64) -> PyResult<u64> {
    formulas::dim_mk_gammapm(p, k).map_err(to_py)
}

#[pyfunction]
fn dim_mk_gamma4p(p: u64, k: u64) -> PyResult<u64> {
    formulas::dim_mk_gamma4p(p, k).map_err(to_py)
}

#[pyfunction]
fn conjecture_bound(p: u64, k: u64) -> PyResult<u64> {
    formulas::conjecture_bound(p, k).map_err(to_py)
}

/// Rank and pivot columns of an integer matrix over GF(q).
#[pyfunction]
fn rank_mod_prime(rows: Vec<Vec<BigInt>>, q: u64) -> PyResult<(usize, Vec<usize>)> {
    linalg::rank_mod_prime(&matrix(rows)?, q).map_err(to_py)
}

/// Exact rank over the rationals by fraction-free elimination.
#[pyfunction]
fn rank_exact(rows: Vec<Vec<BigInt>>) -> PyResult<usize> {
    Ok(linalg::rank_fraction_free(&matrix(rows)?).0)
}

/// Integer basis of the rational kernel of the matrix.
#[pyfunction]
fn kernel_exact(rows: Vec<Vec<BigInt>>) -> PyResult<Vec<Vec<BigInt>>> {
    Ok(linalg::kernel_exact(&matrix(rows)?))
}

#[pyfunction]
fn is_prime(n: u64) -> bool {
    primes::is_prime(n)
}

#[pymodule]
fn x4p(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQExpansion>()?;
    m.add_class::<PyGradedSpans>()?;
    m.add_function(wrap_pyfunction!(spanning_set, m)?)?;
    m.add_function(wrap_pyfunction!(basis_labels, m)?)?;
    m.add_function(wrap_pyfunction!(cusp_classes, m)?)?;
    m.add_function(wrap_pyfunction!(dim_mk_gamma4, m)?)?;
    m.add_function(wrap_pyfunction!(dim_mk_gammapm, m)?)?;
    m.add_function(wrap_pyfunction!(dim_mk_gamma4p, m)?)?;
    m.add_function(wrap_pyfunction!(conjecture_bound, m)?)?;
    m.add_function(wrap_pyfunction!(rank_mod_prime, m)?)?;
    m.add_function(wrap_pyfunction!(rank_exact, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_exact, m)?)?;
    m.add_function(wrap_pyfunction!(is_prime, m)?)?;
    Ok(())
}
