//! JSON graph specs in, JSON summaries and CSV tables out.
//!
//! Lengths, couplings and targets are decimal strings or JSON numbers. A
//! string such as `"1/3"` or `"0.1"` stays exact when the scalar is rational.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bands::{BandStructure, ConvergenceReport};
use crate::design::GapTargets;
use crate::error::{Error, Result};
use crate::graph::{BoundaryPair, Decomposition, Edge, PeriodCell, Vertex};
use crate::limit::CouplingSpec;
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Decimal {
    Text(String),
    Number(serde_json::Number),
}

impl Decimal {
    fn value<T: Scalar>(&self, path: impl Into<String>) -> Result<T> {
        let text = match self {
            Decimal::Text(s) => s.clone(),
            Decimal::Number(n) => n.to_string(),
        };
        T::parse_decimal(&text)
            .filter(|x| x.is_finite_value())
            .ok_or_else(|| Error::Parse { path: path.into(), message: format!("`{text}` is not a finite decimal") })
    }
}

fn values<T: Scalar>(xs: &[Decimal], path: &str) -> Result<Vec<T>> {
    xs.iter().enumerate().map(|(i, x)| x.value(format!("{path}[{i}]"))).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    id: String,
    from: String,
    to: String,
    length: Decimal,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCouplings {
    alpha: Vec<Decimal>,
    beta: Vec<Decimal>,
    gamma: Decimal,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTargets {
    #[serde(rename = "A")]
    a: Vec<Decimal>,
    #[serde(rename = "B")]
    b: Vec<Decimal>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    n: usize,
    vertices: Vec<Vertex>,
    edges: Vec<RawEdge>,
    #[serde(default)]
    boundary_pairs: Vec<BoundaryPair>,
    decomposition: Option<Decomposition>,
    couplings: Option<RawCouplings>,
    targets: Option<RawTargets>,
}

/// A parsed input file. Couplings and targets are unchecked beyond
/// finiteness; each command applies its own preconditions.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec<T> {
    pub cell: PeriodCell<T>,
    pub decomposition: Option<Decomposition>,
    pub couplings: Option<CouplingSpec<T>>,
    pub targets: Option<GapTargets<T>>,
}

impl<T> InputSpec<T> {
    pub fn require_decomposition(&self) -> Result<&Decomposition> {
        self.decomposition.as_ref().ok_or_else(|| missing("decomposition"))
    }

    pub fn require_couplings(&self) -> Result<&CouplingSpec<T>> {
        self.couplings.as_ref().ok_or_else(|| missing("couplings"))
    }

    pub fn require_targets(&self) -> Result<&GapTargets<T>> {
        self.targets.as_ref().ok_or_else(|| missing("targets"))
    }
}

fn missing(key: &str) -> Error {
    Error::Parse { path: key.into(), message: format!("missing field `{key}`") }
}

/// Deserializes `text`, reporting the JSON path of the first offending field.
pub fn from_json<D: DeserializeOwned>(text: &str) -> Result<D> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse { path, message: e.into_inner().to_string() }
    })
}

pub fn parse_spec<T: Scalar>(text: &str) -> Result<InputSpec<T>> {
    let raw: RawSpec = from_json(text)?;
    let edges = raw
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| Ok(Edge::new(&e.id, &e.from, &e.to, e.length.value(format!("edges[{i}].length"))?)))
        .collect::<Result<Vec<_>>>()?;
    let cell = PeriodCell::new(raw.n, raw.vertices, edges, raw.boundary_pairs)?;
    let couplings = raw
        .couplings
        .map(|c| -> Result<CouplingSpec<T>> {
            let spec = CouplingSpec {
                alpha: values(&c.alpha, "couplings.alpha")?,
                beta: values(&c.beta, "couplings.beta")?,
                gamma: c.gamma.value("couplings.gamma")?,
            };
            spec.check_finite()?;
            Ok(spec)
        })
        .transpose()?;
    let targets = raw
        .targets
        .map(|t| -> Result<GapTargets<T>> { Ok(GapTargets { a: values(&t.a, "targets.A")?, b: values(&t.b, "targets.B")? }) })
        .transpose()?;
    Ok(InputSpec { cell, decomposition: raw.decomposition, couplings, targets })
}

/// Pretty JSON with a trailing newline. Map keys keep declaration order;
/// floats use the shortest representation that round-trips.
pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Parse { path: String::new(), message: e.to_string() })
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Parse { path: String::new(), message: format!("csv: {e}") }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(csv_error)?;
    String::from_utf8(bytes).map_err(csv_error)
}

/// Columns `k, theta_index, theta_1 … theta_n, lambda`, one row per band
/// and grid point. `theta_i` is the quasimomentum in turns:
/// `θ_i = exp(2πi · theta_i)`.
pub fn bands_csv<T: Real>(bs: &BandStructure<T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let n = bs.grid.len();
    let mut header = vec!["k".to_string(), "theta_index".to_string()];
    header.extend((1..=n).map(|i| format!("theta_{i}")));
    header.push("lambda".into());
    w.write_record(&header).map_err(csv_error)?;
    for k in 0..bs.k_max {
        for (p, theta) in bs.theta.iter().enumerate() {
            let mut row = vec![(k + 1).to_string(), p.to_string()];
            row.extend(theta.iter().map(|t| format_float(*t)));
            row.push(format_float(bs.eigenvalues[p][k]));
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    csv_string(w)
}

/// Columns `endpoint, epsilon, error, log_epsilon, log_error`; `log_error`
/// is empty for errors at or below zero.
pub fn convergence_csv<T: Real>(report: &ConvergenceReport<T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["endpoint", "epsilon", "error", "log_epsilon", "log_error"]).map_err(csv_error)?;
    for row in &report.rows {
        let (Some(ea), Some(eb)) = (&row.errors_a, &row.errors_b) else { continue };
        let named = ea
            .iter()
            .enumerate()
            .map(|(j, e)| (format!("A_{}", j + 1), *e))
            .chain(eb.iter().enumerate().map(|(j, e)| (format!("B_{j}"), *e)));
        for (name, err) in named {
            let log_err = if err > T::zero() { format_float(err.ln()) } else { String::new() };
            w.write_record([name, format_float(row.epsilon), format_float(err), format_float(row.epsilon.ln()), log_err])
                .map_err(csv_error)?;
        }
    }
    csv_string(w)
}

/// Shortest round-trip decimal form of a float.
fn format_float<T: Real>(x: T) -> String {
    serde_json::to_string(&x.lossy_f64()).unwrap_or_else(|_| "NaN".into())
}
