//! Python bindings: formula conversion, workbook harvesting and an
//! in-process search engine. Structured results cross the boundary as the
//! same JSON the HTTP service speaks, decoded into Python objects.

use std::path::Path;

use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;

use xlsearch_core::formula::{parse_formula, unparse};
use xlsearch_core::grid::{load_grid_json, Workbook};
use xlsearch_core::harvest::{batch_to_json, harvest_workbook, to_sorted_json, HarvestBatch, HarvestRecord};
use xlsearch_core::service::{self, Query, ServiceError};
use xlsearch_core::term::{ast_to_query_term, formula_to_term, parse_mathml, term_to_mathml, Dialect, SymbolTable};
use xlsearch_core::unify;
use xlsearch_core::xlsx::load_xlsx;

create_exception!(xlsearch, FormulaError, PyValueError, "A formula that does not parse.");
create_exception!(
    xlsearch,
    ConflictError,
    PyValueError,
    "A harvest id already stored with other content."
);

fn table(dialect: &str) -> PyResult<SymbolTable> {
    let d: Dialect = dialect.parse().map_err(PyValueError::new_err)?;
    Ok(SymbolTable::builtin(d))
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn formula_err(position: usize, message: &str) -> PyErr {
    FormulaError::new_err((format!("position {position}: {message}"), position))
}

fn service_err(e: ServiceError) -> PyErr {
    match e {
        ServiceError::Parse { position, message } => formula_err(position, &message),
        ServiceError::Conflict(m) => ConflictError::new_err(m),
        ServiceError::NotFound(m) => PyKeyError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Re-renders a formula with minimal parentheses and `,` separators.
#[pyfunction]
#[pyo3(signature = (formula, query=false))]
fn normalize_formula(formula: &str, query: bool) -> PyResult<String> {
    parse_formula(formula, query)
        .map(|ast| unparse(&ast))
        .map_err(|e| formula_err(e.position, &e.message))
}

/// Content MathML for a stored formula; references become `X<n>`
/// variables unless `variablize` is false.
#[pyfunction]
#[pyo3(signature = (formula, variablize=true, dialect="excel"))]
fn formula_to_mathml(formula: &str, variablize: bool, dialect: &str) -> PyResult<String> {
    let term =
        formula_to_term(formula, &table(dialect)?, variablize).map_err(|e| formula_err(e.position, &e.message))?;
    Ok(term_to_mathml(&term))
}

/// Content MathML for a query formula with `?name` variables.
#[pyfunction]
#[pyo3(signature = (formula, dialect="excel"))]
fn query_to_mathml(formula: &str, dialect: &str) -> PyResult<String> {
    let ast = parse_formula(formula, true).map_err(|e| formula_err(e.position, &e.message))?;
    Ok(term_to_mathml(&ast_to_query_term(&ast, &table(dialect)?)))
}

/// Unifies two MathML terms. Returns the query-variable bindings as
/// MathML strings, or None when the terms do not unify.
#[pyfunction]
fn unify_mathml(query: &str, target: &str) -> PyResult<Option<Vec<(String, String)>>> {
    let q = parse_mathml(query).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let t = parse_mathml(target).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(unify::unify(&q, &t).map(|s| {
        s.query_bindings(&q)
            .into_iter()
            .map(|(name, term)| (name, term_to_mathml(&term)))
            .collect()
    }))
}

fn read_workbook(path: &str) -> PyResult<Workbook> {
    let bytes = std::fs::read(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
    let loaded = if path.to_ascii_lowercase().ends_with(".grid.json") {
        load_grid_json(&bytes).map(|mut wb| {
            if wb.uri.is_empty() {
                wb.uri = path.to_string();
            }
            wb
        })
    } else {
        load_xlsx(&bytes, &Path::new(path).display().to_string())
    };
    loaded.map_err(|e| PyValueError::new_err(format!("{path}: {e}")))
}

/// Harvests one `.xlsx` or `.grid.json` workbook. Returns a harvest batch
/// (`{"harvests": [...]}`) and a list of diagnostics.
#[pyfunction]
#[pyo3(signature = (path, dialect="excel"))]
fn harvest_file<'py>(py: Python<'py>, path: &str, dialect: &str) -> PyResult<(Bound<'py, PyAny>, Vec<String>)> {
    let wb = read_workbook(path)?;
    let (harvests, diags) = harvest_workbook(&wb, &table(dialect)?);
    let batch = HarvestBatch {
        harvests: harvests.iter().map(HarvestRecord::from).collect(),
    };
    let messages = diags
        .iter()
        .map(|d| match &d.cell {
            Some(c) => format!("{}!{c}: {}", d.sheet, d.message),
            None => format!("{}: {}", d.sheet, d.message),
        })
        .collect();
    Ok((json_to_py(py, &batch_to_json(&batch))?, messages))
}

/// In-process index over harvest batches.
#[pyclass(name = "SearchEngine", module = "xlsearch")]
struct PySearchEngine {
    inner: service::SearchEngine,
}

#[pymethods]
impl PySearchEngine {
    #[new]
    #[pyo3(signature = (dialect="excel"))]
    fn new(dialect: &str) -> PyResult<Self> {
        Ok(PySearchEngine {
            inner: service::SearchEngine::new(table(dialect)?),
        })
    }

    /// Adds a harvest batch given as JSON text or as a dict. Returns the
    /// accepted/duplicates/rejected counts.
    fn ingest<'py>(&mut self, py: Python<'py>, batch: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let text: String = match batch.extract::<String>() {
            Ok(s) => s,
            Err(_) => py.import("json")?.call_method1("dumps", (batch,))?.extract()?,
        };
        let counts = self.inner.ingest_json(text.as_bytes()).map_err(service_err)?;
        json_to_py(py, &to_sorted_json(&counts))
    }

    /// Runs a query; the result has the service's `{"total", "hits"}` shape.
    #[pyo3(signature = (formula, keywords=None, limit=None, offset=None))]
    fn query<'py>(
        &self,
        py: Python<'py>,
        formula: &str,
        keywords: Option<Vec<String>>,
        limit: Option<i64>,
        offset: Option<i64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let q = Query {
            formula: formula.to_string(),
            keywords: keywords.unwrap_or_default(),
            limit,
            offset,
        };
        let answer = self.inner.handle_query(&q).map_err(service_err)?;
        json_to_py(py, &service::answer_json(&answer))
    }

    /// A stored harvest record by id.
    fn harvest<'py>(&self, py: Python<'py>, id: &str) -> PyResult<Bound<'py, PyAny>> {
        let record = self
            .inner
            .harvest(id)
            .ok_or_else(|| PyKeyError::new_err(id.to_string()))?;
        json_to_py(py, &to_sorted_json(record))
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &to_sorted_json(&self.inner.stats()))
    }

    fn snapshot(&self) -> String {
        self.inner.snapshot()
    }

    fn load_snapshot<'py>(&mut self, py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
        let counts = self.inner.load_snapshot(text.as_bytes()).map_err(service_err)?;
        json_to_py(py, &to_sorted_json(&counts))
    }

    fn __len__(&self) -> usize {
        self.inner.harvest_count()
    }

    fn __repr__(&self) -> String {
        let s = self.inner.index_stats();
        format!(
            "SearchEngine(harvests={}, terms={}, nodes={})",
            self.inner.harvest_count(),
            s.term_count,
            s.node_count
        )
    }
}

#[pymodule]
fn xlsearch(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySearchEngine>()?;
    m.add_function(wrap_pyfunction!(normalize_formula, m)?)?;
    m.add_function(wrap_pyfunction!(formula_to_mathml, m)?)?;
    m.add_function(wrap_pyfunction!(query_to_mathml, m)?)?;
    m.add_function(wrap_pyfunction!(unify_mathml, m)?)?;
    m.add_function(wrap_pyfunction!(harvest_file, m)?)?;
    m.add("FormulaError", m.py().get_type::<FormulaError>())?;
    m.add("ConflictError", m.py().get_type::<ConflictError>())?;
    Ok(())
}
