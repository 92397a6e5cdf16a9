//! JSON manifests (schema `qwm/1`) for matrices, subspaces, filtrations and projections.
//!
//! Complex scalars are `[re, im]`, matrices are row-major nested arrays, and
//! `+∞` is the string `"inf"` wherever a distance may be infinite.

use num_complex::Complex64;
use qwm_core::numerics::CMatrix;
use qwm_core::{AmplifiedProjection, MetricContext, NumericConfig, OperatorSubspace, StepFiltration, VNAlgebra};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: &str = "qwm/1";

/// A schema violation located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("schema error at {pointer}: {message}")]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

impl SchemaError {
    fn new(pointer: &str, message: impl Into<String>) -> Self {
        let pointer = if pointer.is_empty() { "/".to_string() } else { pointer.to_string() };
        Self { pointer, message: message.into() }
    }
}

pub type SchemaResult<T> = std::result::Result<T, SchemaError>;

/// A filtration together with the algebra it is a pseudometric on.
#[derive(Debug, Clone)]
pub struct FiltrationManifest {
    pub filtration: StepFiltration,
    /// `None` means the full matrix algebra.
    pub algebra: Option<VNAlgebra>,
}

impl FiltrationManifest {
    pub fn context(&self) -> MetricContext {
        match &self.algebra {
            Some(a) => {
                MetricContext::new(a.clone(), &NumericConfig::default()).expect("algebra was validated on parse")
            }
            None => MetricContext::full(self.filtration.ambient_dim()),
        }
    }
}

/// A classical distance table; entries may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricManifest {
    pub distances: Vec<Vec<f64>>,
}

fn ptr(base: &str, key: impl std::fmt::Display) -> String {
    format!("{base}/{key}")
}

fn field<'a>(obj: &'a Map<String, Value>, base: &str, key: &str) -> SchemaResult<&'a Value> {
    obj.get(key).ok_or_else(|| SchemaError::new(base, format!("missing field \"{key}\"")))
}

fn as_object<'a>(v: &'a Value, at: &str) -> SchemaResult<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| SchemaError::new(at, "expected an object"))
}

fn as_array<'a>(v: &'a Value, at: &str) -> SchemaResult<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| SchemaError::new(at, "expected an array"))
}

fn finite(v: &Value, at: &str) -> SchemaResult<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(SchemaError::new(at, "expected a finite number")),
    }
}

fn extended(v: &Value, at: &str) -> SchemaResult<f64> {
    match v {
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        _ => finite(v, at).map_err(|_| SchemaError::new(at, "expected a finite number or \"inf\"")),
    }
}

fn count(v: &Value, at: &str) -> SchemaResult<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| SchemaError::new(at, "expected a non-negative integer"))
}

/// `+∞` as `"inf"`, other values as plain numbers.
pub fn extended_value(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::String("inf".into())
    } else {
        json!(x)
    }
}

fn complex_value(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_value(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_value(m[(i, j)])).collect())).collect(),
    )
}

pub fn parse_complex(v: &Value, at: &str) -> SchemaResult<Complex64> {
    let pair = as_array(v, at)?;
    if pair.len() != 2 {
        return Err(SchemaError::new(at, "complex scalar must be [re, im]"));
    }
    Ok(Complex64::new(finite(&pair[0], &ptr(at, 0))?, finite(&pair[1], &ptr(at, 1))?))
}

/// Row-major nested arrays of `[re, im]`; must be square.
pub fn parse_matrix(v: &Value, at: &str) -> SchemaResult<CMatrix> {
    let rows = as_array(v, at)?;
    let n = rows.len();
    if n == 0 {
        return Err(SchemaError::new(at, "matrix must be nonempty"));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let row_at = ptr(at, i);
        let entries = as_array(row, &row_at)?;
        if entries.len() != n {
            return Err(SchemaError::new(&row_at, format!("expected {n} entries for a square matrix")));
        }
        for (j, z) in entries.iter().enumerate() {
            m[(i, j)] = parse_complex(z, &ptr(&row_at, j))?;
        }
    }
    Ok(m)
}

fn parse_basis(v: &Value, at: &str, n: usize) -> SchemaResult<OperatorSubspace> {
    let items = as_array(v, at)?;
    let mut mats = Vec::with_capacity(items.len());
    for (k, item) in items.iter().enumerate() {
        let item_at = ptr(at, k);
        let m = parse_matrix(item, &item_at)?;
        if m.nrows() != n {
            return Err(SchemaError::new(&item_at, format!("expected a {n}x{n} matrix")));
        }
        mats.push(m);
    }
    let cfg = NumericConfig::default();
    // Orthonormal bases are kept verbatim so that emit∘parse is exact.
    OperatorSubspace::from_orthonormal(n, &mats, &cfg)
        .or_else(|_| OperatorSubspace::span(n, &mats, &cfg))
        .map_err(|e| SchemaError::new(at, e.to_string()))
}

fn basis_value(s: &OperatorSubspace) -> Value {
    Value::Array(s.basis().iter().map(matrix_value).collect())
}

/// `{"dim": n, "basis": [...]}`.
pub fn parse_subspace(v: &Value, at: &str) -> SchemaResult<OperatorSubspace> {
    let obj = as_object(v, at)?;
    let n = count(field(obj, at, "dim")?, &ptr(at, "dim"))?;
    if n == 0 {
        return Err(SchemaError::new(&ptr(at, "dim"), "dimension must be positive"));
    }
    parse_basis(field(obj, at, "basis")?, &ptr(at, "basis"), n)
}

pub fn subspace_value(s: &OperatorSubspace) -> Value {
    json!({ "dim": s.ambient_dim(), "basis": basis_value(s) })
}

/// `{"dim": n, "steps": [{"t": x, "basis": [...]}], "algebra"?: subspace}`.
pub fn parse_filtration(v: &Value, at: &str) -> SchemaResult<FiltrationManifest> {
    let obj = as_object(v, at)?;
    let n = count(field(obj, at, "dim")?, &ptr(at, "dim"))?;
    if n == 0 {
        return Err(SchemaError::new(&ptr(at, "dim"), "dimension must be positive"));
    }
    let steps_at = ptr(at, "steps");
    let steps = as_array(field(obj, at, "steps")?, &steps_at)?;
    let mut breakpoints = Vec::with_capacity(steps.len());
    let mut levels = Vec::with_capacity(steps.len());
    for (k, step) in steps.iter().enumerate() {
        let step_at = ptr(&steps_at, k);
        let s = as_object(step, &step_at)?;
        let t_at = ptr(&step_at, "t");
        let t = field(s, &step_at, "t")?;
        if t.as_str() == Some("inf") {
            return Err(SchemaError::new(&t_at, "breakpoints must be finite"));
        }
        breakpoints.push(finite(t, &t_at)?);
        levels.push(parse_basis(field(s, &step_at, "basis")?, &ptr(&step_at, "basis"), n)?);
    }
    let filtration =
        StepFiltration::new(n, breakpoints, levels).map_err(|e| SchemaError::new(&steps_at, e.to_string()))?;
    let algebra = match obj.get("algebra") {
        None => None,
        Some(a) => {
            let alg_at = ptr(at, "algebra");
            let space = parse_subspace(a, &alg_at)?;
            if space.ambient_dim() != n {
                return Err(SchemaError::new(&ptr(&alg_at, "dim"), format!("expected dimension {n}")));
            }
            Some(
                VNAlgebra::new(space, &NumericConfig::default())
                    .map_err(|e| SchemaError::new(&alg_at, e.to_string()))?,
            )
        }
    };
    Ok(FiltrationManifest { filtration, algebra })
}

pub fn filtration_value(f: &StepFiltration, algebra: Option<&VNAlgebra>) -> Value {
    let steps: Vec<Value> =
        f.breakpoints().iter().zip(f.levels()).map(|(t, l)| json!({ "t": t, "basis": basis_value(l) })).collect();
    let mut obj = Map::new();
    obj.insert("dim".into(), json!(f.ambient_dim()));
    obj.insert("steps".into(), Value::Array(steps));
    if let Some(a) = algebra {
        if !a.as_subspace().is_full() {
            obj.insert("algebra".into(), subspace_value(a.as_subspace()));
        }
    }
    Value::Object(obj)
}

/// `{"m": amp, "matrix": ...}`; the base dimension is the matrix size over `m`.
pub fn parse_projection(v: &Value, at: &str) -> SchemaResult<AmplifiedProjection> {
    let obj = as_object(v, at)?;
    let m = count(field(obj, at, "m")?, &ptr(at, "m"))?;
    let mat_at = ptr(at, "matrix");
    let mat = parse_matrix(field(obj, at, "matrix")?, &mat_at)?;
    if m == 0 || mat.nrows() % m != 0 {
        return Err(SchemaError::new(&ptr(at, "m"), "amplification must divide the matrix size"));
    }
    AmplifiedProjection::new(mat.nrows() / m, m, mat, &NumericConfig::default())
        .map_err(|e| SchemaError::new(&mat_at, e.to_string()))
}

pub fn projection_value(p: &AmplifiedProjection) -> Value {
    json!({ "m": p.amp_degree(), "matrix": matrix_value(p.matrix()) })
}

/// `{"points": n, "distances": [[...]]}` with `"inf"` allowed.
pub fn parse_metric(v: &Value, at: &str) -> SchemaResult<MetricManifest> {
    let obj = as_object(v, at)?;
    let n = count(field(obj, at, "points")?, &ptr(at, "points"))?;
    let d_at = ptr(at, "distances");
    let rows = as_array(field(obj, at, "distances")?, &d_at)?;
    if rows.len() != n {
        return Err(SchemaError::new(&d_at, format!("expected {n} rows")));
    }
    let mut distances = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let row_at = ptr(&d_at, i);
        let entries = as_array(row, &row_at)?;
        if entries.len() != n {
            return Err(SchemaError::new(&row_at, format!("expected {n} entries")));
        }
        distances.push(
            entries.iter().enumerate().map(|(j, x)| extended(x, &ptr(&row_at, j))).collect::<SchemaResult<Vec<_>>>()?,
        );
    }
    Ok(MetricManifest { distances })
}

pub fn metric_value(d: &[Vec<f64>]) -> Value {
    json!({
        "points": d.len(),
        "distances": d.iter().map(|r| r.iter().map(|&x| extended_value(x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

/// `{"adjacency": [[bool]]}`.
pub fn parse_graph(v: &Value, at: &str) -> SchemaResult<Vec<Vec<bool>>> {
    let obj = as_object(v, at)?;
    let a_at = ptr(at, "adjacency");
    let rows = as_array(field(obj, at, "adjacency")?, &a_at)?;
    let n = rows.len();
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let row_at = ptr(&a_at, i);
            let entries = as_array(row, &row_at)?;
            if entries.len() != n {
                return Err(SchemaError::new(&row_at, format!("expected {n} entries")));
            }
            entries
                .iter()
                .enumerate()
                .map(|(j, x)| x.as_bool().ok_or_else(|| SchemaError::new(&ptr(&row_at, j), "expected a boolean")))
                .collect()
        })
        .collect()
}

/// Any manifest, tagged by its `kind`.
#[derive(Debug, Clone)]
pub enum Manifest {
    Matrix(CMatrix),
    Subspace(OperatorSubspace),
    Filtration(FiltrationManifest),
    Projection(AmplifiedProjection),
    Metric(MetricManifest),
    Graph(Vec<Vec<bool>>),
}

impl Manifest {
    pub fn kind(&self) -> &'static str {
        match self {
            Manifest::Matrix(_) => "matrix",
            Manifest::Subspace(_) => "subspace",
            Manifest::Filtration(_) => "filtration",
            Manifest::Projection(_) => "projection",
            Manifest::Metric(_) => "metric",
            Manifest::Graph(_) => "graph",
        }
    }
}

/// Parse a full document: `{"schema_version": "qwm/1", "kind": ..., ...payload}`.
pub fn parse(text: &str) -> SchemaResult<Manifest> {
    let doc: Value = serde_json::from_str(text).map_err(|e| SchemaError::new("", format!("invalid JSON: {e}")))?;
    parse_value(&doc)
}

pub fn parse_value(doc: &Value) -> SchemaResult<Manifest> {
    let obj = as_object(doc, "")?;
    match field(obj, "", "schema_version")?.as_str() {
        Some(SCHEMA_VERSION) => {}
        _ => return Err(SchemaError::new("/schema_version", format!("expected \"{SCHEMA_VERSION}\""))),
    }
    let kind = field(obj, "", "kind")?.as_str().ok_or_else(|| SchemaError::new("/kind", "expected a string"))?;
    Ok(match kind {
        "matrix" => Manifest::Matrix(parse_matrix(field(obj, "", "matrix")?, "/matrix")?),
        "subspace" => Manifest::Subspace(parse_subspace(doc, "")?),
        "filtration" => Manifest::Filtration(parse_filtration(doc, "")?),
        "projection" => Manifest::Projection(parse_projection(doc, "")?),
        "metric" => Manifest::Metric(parse_metric(doc, "")?),
        "graph" => Manifest::Graph(parse_graph(doc, "")?),
        other => return Err(SchemaError::new("/kind", format!("unknown kind \"{other}\""))),
    })
}

fn tagged(kind: &str, payload: Value) -> Value {
    let mut obj = Map::new();
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    obj.insert("kind".into(), json!(kind));
    if let Value::Object(fields) = payload {
        obj.extend(fields);
    }
    Value::Object(obj)
}

pub fn to_value(m: &Manifest) -> Value {
    let payload = match m {
        Manifest::Matrix(a) => json!({ "matrix": matrix_value(a) }),
        Manifest::Subspace(s) => subspace_value(s),
        Manifest::Filtration(f) => filtration_value(&f.filtration, f.algebra.as_ref()),
        Manifest::Projection(p) => projection_value(p),
        Manifest::Metric(d) => metric_value(&d.distances),
        Manifest::Graph(adj) => json!({ "adjacency": adj }),
    };
    tagged(m.kind(), payload)
}

/// Canonical text: sorted keys, shortest round-trip floats, trailing newline.
pub fn emit(m: &Manifest) -> String {
    let mut s = serde_json::to_string(&to_value(m)).expect("values are serializable");
    s.push('\n');
    s
}
