//! Python bindings: fields, scalars, locally polynomial functions, norms,
//! the wavelet basis, moment checks, the separating distribution and the
//! difference operators. Reports come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use crwave::counterexample::{separation as run_separation, NonIso};
use crwave::crnorm::cr_norm as run_cr_norm;
use crwave::delta::{recover_leading as run_recover, DividedPowers};
use crwave::distribution::{avv_check, validate_additivity, Dirac, Haar, MomentOracle};
use crwave::locpoly::{BoundaryProfile, LocPolyFunJson};
use crwave::padic::parse_q;
use crwave::wavelet::{self, WaveletCoeffsJson};
use crwave::{acceptance, CosetRep, Error, FieldCtx, FieldDescriptor, MultiIndex, Q};

fn err(e: Error) -> PyErr {
    match e {
        Error::DepthInsufficient(_) | Error::PrecisionExhausted(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Accepts an int, a `Fraction` or a string like `"5/3"`.
fn rational(x: &Bound<'_, PyAny>) -> PyResult<Q> {
    let text = x.str()?.to_string();
    parse_q(&text).ok_or_else(|| PyValueError::new_err(format!("not a rational: {text}")))
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = if let Ok(s) = value.extract::<String>() {
        s
    } else {
        py.import("json")?.call_method1("dumps", (value,))?.extract()?
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn log_q(field: &crwave::Field, m: crwave::Magnitude) -> Option<(i64, i64)> {
    m.log_q(field).map(|x| (*x.numer(), *x.denom()))
}

#[pyclass(name = "Field", frozen, from_py_object)]
#[derive(Clone)]
struct PyField(crwave::Field);

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (p, f = 1, e = 1, precision = None))]
    fn new(p: u64, f: u32, e: u32, precision: Option<u32>) -> PyResult<Self> {
        let desc = FieldDescriptor::new(p, f, e).map_err(err)?;
        Ok(PyField(FieldCtx::new(desc, precision).map_err(err)?))
    }

    #[getter]
    fn p(&self) -> u64 {
        self.0.p()
    }

    #[getter]
    fn f(&self) -> u32 {
        self.0.f()
    }

    #[getter]
    fn e(&self) -> u32 {
        self.0.e()
    }

    #[getter]
    fn q(&self) -> u64 {
        self.0.q()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    #[getter]
    fn precision(&self) -> u32 {
        self.0.precision()
    }

    fn scalar(&self, value: i64) -> PyScalar {
        PyScalar(crwave::PadicScalar::from_i64(&self.0, value))
    }

    fn uniformizer(&self, power: i64) -> PyScalar {
        PyScalar(crwave::PadicScalar::uniformizer_pow(&self.0, power))
    }

    fn parse(&self, text: &str) -> PyResult<PyScalar> {
        Ok(PyScalar(crwave::PadicScalar::parse(&self.0, text).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!("Field(p={}, f={}, e={})", self.0.p(), self.0.f(), self.0.e())
    }
}

#[pyclass(name = "Scalar", frozen, from_py_object)]
#[derive(Clone)]
struct PyScalar(crwave::PadicScalar);

#[pymethods]
impl PyScalar {
    /// Valuation with `val(p) = 1`, as `(num, den)`; `None` for zero.
    fn valuation(&self) -> Option<(i64, i64)> {
        let d = self.0.field().degree() as i64;
        self.0.valuation().map(|v| {
            let x = v / d;
            (*x.numer(), *x.denom())
        })
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn eq_to_precision(&self, other: &PyScalar) -> bool {
        self.0.eq_to_precision(&other.0)
    }

    fn __add__(&self, other: &PyScalar) -> PyResult<PyScalar> {
        Ok(PyScalar(self.0.checked_add(&other.0).map_err(err)?))
    }

    fn __sub__(&self, other: &PyScalar) -> PyResult<PyScalar> {
        Ok(PyScalar(self.0.checked_sub(&other.0).map_err(err)?))
    }

    fn __mul__(&self, other: &PyScalar) -> PyResult<PyScalar> {
        Ok(PyScalar(self.0.checked_mul(&other.0).map_err(err)?))
    }

    fn __truediv__(&self, other: &PyScalar) -> PyResult<PyScalar> {
        Ok(PyScalar(self.0.checked_div(&other.0).map_err(err)?))
    }

    fn __str__(&self) -> String {
        self.0.serialize()
    }

    fn __repr__(&self) -> String {
        format!("Scalar({:?})", self.0.serialize())
    }
}

#[pyclass(name = "LocPolyFun", frozen, from_py_object)]
#[derive(Clone)]
struct PyLocPolyFun(crwave::LocPolyFun);

#[pymethods]
impl PyLocPolyFun {
    /// From the JSON interchange form, as a string or a dict.
    #[staticmethod]
    #[pyo3(signature = (data, precision = None))]
    fn from_json(py: Python<'_>, data: &Bound<'_, PyAny>, precision: Option<u32>) -> PyResult<Self> {
        let json: LocPolyFunJson = from_py(py, data)?;
        Ok(PyLocPolyFun(crwave::LocPolyFun::from_json(&json, precision).map_err(err)?))
    }

    /// `c z^m` on all of `O_F`.
    #[staticmethod]
    fn monomial(field: &PyField, m: Vec<u32>, c: &PyScalar) -> Self {
        PyLocPolyFun(crwave::LocPolyFun::monomial(&field.0, MultiIndex::new(&m), c.0.clone()))
    }

    fn to_json(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.to_json())
    }

    #[getter]
    fn level(&self) -> u32 {
        self.0.level()
    }

    #[getter]
    fn field(&self) -> PyField {
        PyField(self.0.field().clone())
    }

    fn eval(&self, z: &PyScalar) -> PyResult<PyScalar> {
        Ok(PyScalar(self.0.eval(&z.0).map_err(err)?))
    }

    /// The table of `D_i f / i!`.
    fn derived(&self, i: Vec<u32>) -> Self {
        PyLocPolyFun(self.0.derived(&MultiIndex::new(&i)))
    }

    fn remainder(&self, r: &Bound<'_, PyAny>, x: &PyScalar, y: &PyScalar) -> PyResult<PyScalar> {
        Ok(PyScalar(self.0.remainder(rational(r)?, &x.0, &y.0).map_err(err)?))
    }

    /// `caps[σ]` is `None` for analytic directions and `d_σ` otherwise.
    fn in_subspace(&self, r: &Bound<'_, PyAny>, caps: Vec<Option<u32>>) -> PyResult<bool> {
        self.0.in_subspace(rational(r)?, &BoundaryProfile::new(caps)).map_err(err)
    }

    fn __add__(&self, other: &PyLocPolyFun) -> PyResult<Self> {
        Ok(PyLocPolyFun(self.0.add(&other.0).map_err(err)?))
    }

    fn __sub__(&self, other: &PyLocPolyFun) -> PyResult<Self> {
        Ok(PyLocPolyFun(self.0.sub(&other.0).map_err(err)?))
    }

    fn __mul__(&self, other: &PyLocPolyFun) -> PyResult<Self> {
        Ok(PyLocPolyFun(self.0.mul(&other.0).map_err(err)?))
    }

    fn eq_to_precision(&self, other: &PyLocPolyFun) -> bool {
        self.0.eq_to_precision(&other.0)
    }
}

/// Certified `‖f‖_{C^r}` report.
#[pyfunction]
#[pyo3(signature = (f, r, depth = 5))]
fn cr_norm(py: Python<'_>, f: &PyLocPolyFun, r: &Bound<'_, PyAny>, depth: u32) -> PyResult<Py<PyAny>> {
    let rep = run_cr_norm(&f.0, rational(r)?, depth).map_err(err)?;
    to_py(py, &rep.to_json(f.0.field()))
}

/// `e_{a,i,r}` with `a` given by its digits.
#[pyfunction]
fn basis_fn(field: &PyField, digits: Vec<u32>, i: Vec<u32>, r: &Bound<'_, PyAny>) -> PyResult<PyLocPolyFun> {
    let f = wavelet::basis_fn(&field.0, &CosetRep::new(digits), &MultiIndex::new(&i), rational(r)?).map_err(err)?;
    Ok(PyLocPolyFun(f))
}

/// `log_q ‖e_{a,i,r}‖_{C^r}` as `(num, den)`.
#[pyfunction]
fn basis_norm(field: &PyField, digits: Vec<u32>, i: Vec<u32>, r: &Bound<'_, PyAny>) -> PyResult<Option<(i64, i64)>> {
    let m = wavelet::basis_norm(&field.0, &CosetRep::new(digits), &MultiIndex::new(&i), rational(r)?);
    Ok(log_q(&field.0, m))
}

/// Basis coefficients of `f` in the JSON interchange form.
#[pyfunction]
fn analyze(py: Python<'_>, f: &PyLocPolyFun, r: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
    let c = wavelet::analyze(&f.0, rational(r)?).map_err(err)?;
    to_py(py, &c.to_json())
}

#[pyfunction]
fn synthesize(py: Python<'_>, field: &PyField, coeffs: &Bound<'_, PyAny>) -> PyResult<PyLocPolyFun> {
    let json: WaveletCoeffsJson = from_py(py, coeffs)?;
    let c = wavelet::WaveletCoeffs::from_json_in(&field.0, &json).map_err(err)?;
    Ok(PyLocPolyFun(wavelet::synthesize(&c)))
}

#[pyfunction]
fn approximant(f: &PyLocPolyFun, r: &Bound<'_, PyAny>, h: u32) -> PyResult<PyLocPolyFun> {
    Ok(PyLocPolyFun(wavelet::approximant(&f.0, rational(r)?, h).map_err(err)?))
}

/// Additivity and growth report for `"dirac"` (at `point`) or `"haar"`.
#[pyfunction]
#[pyo3(signature = (field, kind, r, depth = 6, degree = None, point = None))]
fn avv(
    py: Python<'_>,
    field: &PyField,
    kind: &str,
    r: &Bound<'_, PyAny>,
    depth: u32,
    degree: Option<u32>,
    point: Option<PyScalar>,
) -> PyResult<Py<PyAny>> {
    let r = rational(r)?;
    let n = degree.unwrap_or(r.floor().to_integer().max(0) as u32);
    let mu: Box<dyn MomentOracle> = match kind {
        "dirac" => {
            let z = point.map(|s| s.0).unwrap_or_else(|| crwave::PadicScalar::zero(&field.0));
            Box::new(Dirac::new(z, n).map_err(err)?)
        }
        "haar" => Box::new(Haar::new(&field.0, n).map_err(err)?),
        other => return Err(PyValueError::new_err(format!("unknown oracle {other:?}"))),
    };
    let additive = validate_additivity(mu.as_ref(), depth).map_err(err)?.valid();
    let rep = avv_check(mu.as_ref(), r, depth).map_err(err)?;
    let out = serde_json::json!({ "additive": additive, "avv": rep.to_json(&field.0) });
    to_py(py, &out)
}

/// The separating distribution on `Z_p^d` checked to `depth`.
#[pyfunction]
#[pyo3(signature = (p, r_vec, k, depth = 4))]
fn separation(py: Python<'_>, p: u64, r_vec: Vec<Bound<'_, PyAny>>, k: usize, depth: u32) -> PyResult<Py<PyAny>> {
    let rs = r_vec.iter().map(rational).collect::<PyResult<Vec<Q>>>()?;
    let rep = run_separation(NonIso::build(p, rs, k, None).map_err(err)?, depth).map_err(err)?;
    to_py(py, &rep.to_json())
}

/// `a_m` of `P = Σ a_i z^i / i!` from `Δ_{m,h} P(z)`; `coeffs` maps index tuples to scalars.
#[pyfunction]
fn recover_leading(
    field: &PyField,
    coeffs: Vec<(Vec<u32>, PyScalar)>,
    m: Vec<u32>,
    h: u32,
    z: &PyScalar,
) -> PyResult<PyScalar> {
    let p = DividedPowers::new(&field.0, coeffs.into_iter().map(|(i, c)| (MultiIndex::new(&i), c.0))).map_err(err)?;
    Ok(PyScalar(run_recover(&p, &MultiIndex::new(&m), h, &z.0).map_err(err)?))
}

/// One acceptance criterion: `(passed, detail)`.
#[pyfunction]
#[pyo3(signature = (id, scope = "fast"))]
fn run_criterion(id: u8, scope: &str) -> PyResult<(bool, String)> {
    let scope = scope.parse().map_err(err)?;
    let o = acceptance::run(id, scope);
    Ok((o.pass, o.detail))
}

#[pymodule]
fn pycrwave(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PyScalar>()?;
    m.add_class::<PyLocPolyFun>()?;
    m.add_function(wrap_pyfunction!(cr_norm, m)?)?;
    m.add_function(wrap_pyfunction!(basis_fn, m)?)?;
    m.add_function(wrap_pyfunction!(basis_norm, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(approximant, m)?)?;
    m.add_function(wrap_pyfunction!(avv, m)?)?;
    m.add_function(wrap_pyfunction!(separation, m)?)?;
    m.add_function(wrap_pyfunction!(recover_leading, m)?)?;
    m.add_function(wrap_pyfunction!(run_criterion, m)?)?;
    Ok(())
}
