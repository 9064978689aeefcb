//! Period cells of Z^n-periodic metric graphs and their decompositions.
//!
//! A [`PeriodCell`] is one period of the graph. Points where the cell meets
//! its translates are modelled as degree-one *boundary* vertices sitting on
//! edge interiors; each boundary vertex `w` is paired with exactly one `v` and
//! a lattice shift `i` meaning `w = i·v` in the periodic graph.
//!
//! A [`Decomposition`] splits the cell edges into a skeleton `Y_0` and
//! attached pieces `Y_1..Y_m`, plus the δ-vertex `ṽ`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub kind: VertexKind,
}

impl Vertex {
    pub fn interior(id: impl Into<String>) -> Self {
        Self { id: id.into(), kind: VertexKind::Interior }
    }

    pub fn boundary(id: impl Into<String>) -> Self {
        Self { id: id.into(), kind: VertexKind::Boundary }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: T,
}

impl<T> Edge<T> {
    pub fn new(id: impl Into<String>, from: impl Into<String>, to: impl Into<String>, length: T) -> Self {
        Self { id: id.into(), from: from.into(), to: to.into(), length }
    }
}

/// `w = shift · v` in the periodic graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub v: String,
    pub w: String,
    pub shift: Vec<i64>,
}

impl BoundaryPair {
    pub fn new(v: impl Into<String>, w: impl Into<String>, shift: Vec<i64>) -> Self {
        Self { v: v.into(), w: w.into(), shift }
    }
}

/// One period of a Z^n-periodic metric graph.
///
/// Construction only checks referential integrity (unique ids, known
/// endpoints, shift dimensions). The structural invariants are checked by
/// [`validate_cell`] and reported as data.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodCell<T> {
    dim: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge<T>>,
    pairs: Vec<BoundaryPair>,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
    ends: Vec<(usize, usize)>,
    pair_ends: Vec<(usize, usize)>,
    incidence: Vec<Vec<usize>>,
}

impl<T: Scalar> PeriodCell<T> {
    pub fn new(
        dim: usize,
        vertices: Vec<Vertex>,
        edges: Vec<Edge<T>>,
        pairs: Vec<BoundaryPair>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCell("lattice dimension must be positive".into()));
        }
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.id.clone(), i).is_some() {
                return Err(Error::DuplicateId { kind: "vertex", id: v.id.clone() });
            }
        }
        let lookup = |id: &str| {
            vertex_index
                .get(id)
                .copied()
                .ok_or_else(|| Error::UnknownId { kind: "vertex", id: id.to_string() })
        };
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut ends = Vec::with_capacity(edges.len());
        let mut incidence = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(Error::DuplicateId { kind: "edge", id: e.id.clone() });
            }
            let a = lookup(&e.from)?;
            let b = lookup(&e.to)?;
            ends.push((a, b));
            incidence[a].push(i);
            if b != a {
                incidence[b].push(i);
            }
        }
        let mut pair_ends = Vec::with_capacity(pairs.len());
        for p in &pairs {
            if p.shift.len() != dim {
                return Err(Error::InvalidCell(format!(
                    "boundary pair ({}, {}) has a shift of dimension {} in a {}-periodic cell",
                    p.v,
                    p.w,
                    p.shift.len(),
                    dim
                )));
            }
            pair_ends.push((lookup(&p.v)?, lookup(&p.w)?));
        }
        Ok(Self { dim, vertices, edges, pairs, vertex_index, edge_index, ends, pair_ends, incidence })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn boundary_pairs(&self) -> &[BoundaryPair] {
        &self.pairs
    }

    pub fn vertex_idx(&self, id: &str) -> Option<usize> {
        self.vertex_index.get(id).copied()
    }

    pub fn edge_idx(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    /// Vertex indices `(from, to)` of edge `e`.
    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    /// Vertex indices `(v, w)` of every boundary pair, in declaration order.
    pub fn pair_ends(&self) -> &[(usize, usize)] {
        &self.pair_ends
    }

    /// Edges incident to vertex `v`.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.vertices[v].kind == VertexKind::Boundary
    }

    /// Sum of edge lengths in edge order.
    pub fn total_length(&self) -> T {
        self.edges.iter().fold(T::zero(), |acc, e| acc + e.length)
    }

    /// Sub-cell spanned by the given edges. Vertices not touched by any of
    /// them are dropped; boundary pairs survive only when both ends survive.
    pub fn restrict(&self, edges: &[usize]) -> Result<Self> {
        let keep: BTreeSet<usize> = edges.iter().copied().collect();
        let mut used = vec![false; self.vertices.len()];
        for &e in &keep {
            let (a, b) = self.ends[e];
            used[a] = true;
            used[b] = true;
        }
        let vertices = self
            .vertices
            .iter()
            .zip(&used)
            .filter(|(_, &u)| u)
            .map(|(v, _)| v.clone())
            .collect();
        let edges = keep.iter().map(|&e| self.edges[e].clone()).collect();
        let pairs = self
            .pairs
            .iter()
            .zip(&self.pair_ends)
            .filter(|(_, &(v, w))| used[v] && used[w])
            .map(|(p, _)| p.clone())
            .collect();
        Self::new(self.dim, vertices, edges, pairs)
    }
}

/// A single violated invariant, naming the offending ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    EmptyCell,
    NonPositiveLength { edge: String },
    NonFiniteLength { edge: String },
    LoopEdge { edge: String },
    BoundaryUnpaired { vertex: String },
    BoundaryMultiplyPaired { vertex: String, pairs: usize },
    BoundaryDegree { vertex: String, degree: usize },
    PairOnInteriorVertex { vertex: String },
    Disconnected { components: usize },
    GraphIsLine,
    /// Decomposition bookkeeping.
    EdgeUnassigned { edge: String },
    ComponentOutOfRange { edge: String, component: usize },
    ComponentEmpty { component: usize },
    /// Condition (i).
    ComponentDisconnected { component: usize },
    /// Condition (ii).
    BoundaryOutsideSkeleton { vertex: String, edge: String },
    /// Condition (iii).
    ComponentsShareVertex { first: usize, second: usize, vertex: String },
    /// Condition (iv).
    NoAttachmentVertex { component: usize },
    /// Condition (v).
    DeltaVertexIsBoundary { vertex: String },
    DeltaVertexIsolated { vertex: String },
    DeltaVertexTouchesComponent { vertex: String, component: usize },
}

impl Violation {
    /// Which of the decomposition conditions (i)-(v) the violation belongs
    /// to, if any.
    pub fn condition(&self) -> Option<u8> {
        match self {
            Violation::ComponentDisconnected { .. } => Some(1),
            Violation::BoundaryOutsideSkeleton { .. } => Some(2),
            Violation::ComponentsShareVertex { .. } => Some(3),
            Violation::NoAttachmentVertex { .. } => Some(4),
            Violation::DeltaVertexIsBoundary { .. }
            | Violation::DeltaVertexIsolated { .. }
            | Violation::DeltaVertexTouchesComponent { .. } => Some(5),
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyCell => write!(f, "cell has no edges"),
            Violation::NonPositiveLength { edge } => write!(f, "edge {edge}: length is not positive"),
            Violation::NonFiniteLength { edge } => write!(f, "edge {edge}: length is not finite"),
            Violation::LoopEdge { edge } => write!(f, "loop edge {edge}"),
            Violation::BoundaryUnpaired { vertex } => write!(f, "boundary vertex {vertex} is not paired"),
            Violation::BoundaryMultiplyPaired { vertex, pairs } => {
                write!(f, "boundary vertex {vertex} appears in {pairs} pairs")
            }
            Violation::BoundaryDegree { vertex, degree } => {
                write!(f, "boundary vertex {vertex} has degree {degree}, expected 1")
            }
            Violation::PairOnInteriorVertex { vertex } => {
                write!(f, "boundary pair uses interior vertex {vertex}")
            }
            Violation::Disconnected { components } => {
                write!(f, "glued cell has {components} connected components")
            }
            Violation::GraphIsLine => write!(f, "graph is a line"),
            Violation::EdgeUnassigned { edge } => write!(f, "edge {edge} is not assigned to a component"),
            Violation::ComponentOutOfRange { edge, component } => {
                write!(f, "edge {edge} assigned to component {component} beyond m")
            }
            Violation::ComponentEmpty { component } => write!(f, "component Y_{component} has no edges"),
            Violation::ComponentDisconnected { component } => {
                write!(f, "(i) component Y_{component} is not connected")
            }
            Violation::BoundaryOutsideSkeleton { vertex, edge } => {
                write!(f, "(ii) boundary vertex {vertex} lies on edge {edge} outside Y_0")
            }
            Violation::ComponentsShareVertex { first, second, vertex } => {
                write!(f, "(iii) Y_{first} and Y_{second} share vertex {vertex}")
            }
            Violation::NoAttachmentVertex { component } => {
                write!(f, "(iv) Y_{component} does not meet Y_0")
            }
            Violation::DeltaVertexIsBoundary { vertex } => write!(f, "(v) delta vertex {vertex} is a boundary vertex"),
            Violation::DeltaVertexIsolated { vertex } => write!(f, "(v) delta vertex {vertex} has no Y_0 edge"),
            Violation::DeltaVertexTouchesComponent { vertex, component } => {
                write!(f, "(v) delta vertex {vertex} belongs to Y_{component}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// True if any violation belongs to decomposition condition `c`.
    pub fn violates_condition(&self, c: u8) -> bool {
        self.violations.iter().any(|v| v.condition() == Some(c))
    }

    pub fn summary(&self) -> String {
        self.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Number of connected components among `members`, joined by `edges`.
fn count_components(n: usize, members: &[usize], edges: impl Iterator<Item = (usize, usize)>) -> usize {
    let mut uf = UnionFind::new(n);
    for (a, b) in edges {
        uf.union(a, b);
    }
    members.iter().map(|&v| uf.find(v)).collect::<BTreeSet<_>>().len()
}

/// Check every structural invariant of a period cell.
pub fn validate_cell<T: Scalar>(cell: &PeriodCell<T>) -> ValidationReport {
    let mut violations = Vec::new();
    if cell.edges.is_empty() {
        violations.push(Violation::EmptyCell);
    }
    for (e, edge) in cell.edges.iter().enumerate() {
        if !edge.length.is_finite_value() {
            violations.push(Violation::NonFiniteLength { edge: edge.id.clone() });
        } else if edge.length <= T::zero() {
            violations.push(Violation::NonPositiveLength { edge: edge.id.clone() });
        }
        let (a, b) = cell.ends[e];
        if a == b {
            violations.push(Violation::LoopEdge { edge: edge.id.clone() });
        }
    }

    let mut pair_count = vec![0usize; cell.vertices.len()];
    for &(v, w) in &cell.pair_ends {
        pair_count[v] += 1;
        pair_count[w] += 1;
    }
    for (i, vertex) in cell.vertices.iter().enumerate() {
        match vertex.kind {
            VertexKind::Boundary => {
                match pair_count[i] {
                    0 => violations.push(Violation::BoundaryUnpaired { vertex: vertex.id.clone() }),
                    1 => {}
                    k => violations.push(Violation::BoundaryMultiplyPaired { vertex: vertex.id.clone(), pairs: k }),
                }
                if cell.degree(i) != 1 {
                    violations.push(Violation::BoundaryDegree { vertex: vertex.id.clone(), degree: cell.degree(i) });
                }
            }
            VertexKind::Interior => {
                if pair_count[i] > 0 {
                    violations.push(Violation::PairOnInteriorVertex { vertex: vertex.id.clone() });
                }
            }
        }
    }

    if !cell.vertices.is_empty() {
        let all: Vec<usize> = (0..cell.vertices.len()).collect();
        let glued = count_components(
            cell.vertices.len(),
            &all,
            cell.ends.iter().copied().chain(cell.pair_ends.iter().copied()),
        );
        if glued > 1 {
            violations.push(Violation::Disconnected { components: glued });
        }
        // A cycle inside the (unglued) cell or a branching vertex rules out a line.
        let mut uf = UnionFind::new(cell.vertices.len());
        let has_cycle = cell.ends.iter().any(|&(a, b)| !uf.union(a, b));
        let branching = (0..cell.vertices.len()).any(|v| !cell.is_boundary(v) && cell.degree(v) >= 3);
        if !has_cycle && !branching && !cell.edges.is_empty() {
            violations.push(Violation::GraphIsLine);
        }
    }
    ValidationReport { violations }
}

/// Assignment of edges to components `Y_0..Y_m` and the δ-vertex `ṽ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub m: usize,
    pub edge_component: BTreeMap<String, usize>,
    pub tilde_v: String,
}

impl Decomposition {
    pub fn new(m: usize, edge_component: BTreeMap<String, usize>, tilde_v: impl Into<String>) -> Self {
        Self { m, edge_component, tilde_v: tilde_v.into() }
    }

    /// Component index of every cell edge, in edge order. Fails on unknown
    /// ids, unassigned edges and out-of-range components.
    pub fn resolve<T: Scalar>(&self, cell: &PeriodCell<T>) -> Result<ResolvedDecomposition> {
        let report = validate_decomposition(cell, self)?;
        if !report.is_ok() {
            return Err(Error::InvalidDecomposition(report.summary()));
        }
        Ok(self.resolve_unchecked(cell))
    }

    fn resolve_unchecked<T: Scalar>(&self, cell: &PeriodCell<T>) -> ResolvedDecomposition {
        let component = cell.edges.iter().map(|e| self.edge_component.get(&e.id).copied().unwrap_or(0)).collect();
        let tilde_v = cell.vertex_idx(&self.tilde_v).unwrap_or(0);
        ResolvedDecomposition::build(cell, self.m, component, tilde_v)
    }
}

/// A decomposition resolved against a cell, with the attachment sets
/// `𝒱_j = Y_j ∩ Y_0` precomputed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedDecomposition {
    pub m: usize,
    /// Component of each edge, in edge order.
    pub component: Vec<usize>,
    pub tilde_v: usize,
    /// `attachments[j - 1]` lists the vertex indices of `𝒱_j`, ascending.
    pub attachments: Vec<Vec<usize>>,
}

impl ResolvedDecomposition {
    fn build<T: Scalar>(cell: &PeriodCell<T>, m: usize, component: Vec<usize>, tilde_v: usize) -> Self {
        let touch = vertex_components(cell, &component);
        let attachments = (1..=m)
            .map(|j| {
                (0..cell.vertices.len())
                    .filter(|&v| touch[v].contains(&0) && touch[v].contains(&j))
                    .collect()
            })
            .collect();
        Self { m, component, tilde_v, attachments }
    }

    /// Component `j` such that `v ∈ 𝒱_j`, if any.
    pub fn attachment_component(&self, v: usize) -> Option<usize> {
        self.attachments.iter().position(|set| set.binary_search(&v).is_ok()).map(|j| j + 1)
    }

    pub fn edges_of(&self, j: usize) -> Vec<usize> {
        (0..self.component.len()).filter(|&e| self.component[e] == j).collect()
    }
}

fn vertex_components<T: Scalar>(cell: &PeriodCell<T>, component: &[usize]) -> Vec<BTreeSet<usize>> {
    let mut touch = vec![BTreeSet::new(); cell.vertices.len()];
    for (e, &(a, b)) in cell.ends.iter().enumerate() {
        touch[a].insert(component[e]);
        touch[b].insert(component[e]);
    }
    touch
}

/// Check the decomposition conditions (i)-(v). Unknown ids are errors;
/// everything else is reported.
pub fn validate_decomposition<T: Scalar>(cell: &PeriodCell<T>, d: &Decomposition) -> Result<ValidationReport> {
    for id in d.edge_component.keys() {
        if cell.edge_idx(id).is_none() {
            return Err(Error::UnknownId { kind: "edge", id: id.clone() });
        }
    }
    let tilde_v = cell
        .vertex_idx(&d.tilde_v)
        .ok_or_else(|| Error::UnknownId { kind: "vertex", id: d.tilde_v.clone() })?;
    if d.m == 0 {
        return Err(Error::InvalidDecomposition("m must be positive".into()));
    }

    let mut violations = Vec::new();
    let mut component = Vec::with_capacity(cell.edges.len());
    for edge in &cell.edges {
        match d.edge_component.get(&edge.id) {
            None => {
                violations.push(Violation::EdgeUnassigned { edge: edge.id.clone() });
                component.push(usize::MAX);
            }
            Some(&j) if j > d.m => {
                violations.push(Violation::ComponentOutOfRange { edge: edge.id.clone(), component: j });
                component.push(usize::MAX);
            }
            Some(&j) => component.push(j),
        }
    }
    if !violations.is_empty() {
        return Ok(ValidationReport { violations });
    }

    let touch = vertex_components(cell, &component);
    for j in 0..=d.m {
        let edges: Vec<usize> = (0..component.len()).filter(|&e| component[e] == j).collect();
        if edges.is_empty() {
            violations.push(Violation::ComponentEmpty { component: j });
            continue;
        }
        let members: Vec<usize> = (0..cell.vertices.len()).filter(|&v| touch[v].contains(&j)).collect();
        if count_components(cell.vertices.len(), &members, edges.iter().map(|&e| cell.ends[e])) > 1 {
            violations.push(Violation::ComponentDisconnected { component: j });
        }
    }

    for v in 0..cell.vertices.len() {
        if cell.is_boundary(v) {
            for &e in cell.incident(v) {
                if component[e] != 0 {
                    violations.push(Violation::BoundaryOutsideSkeleton {
                        vertex: cell.vertices[v].id.clone(),
                        edge: cell.edges[e].id.clone(),
                    });
                }
            }
        }
        let attached: Vec<usize> = touch[v].iter().copied().filter(|&j| j != 0).collect();
        for (a, &first) in attached.iter().enumerate() {
            for &second in &attached[a + 1..] {
                violations.push(Violation::ComponentsShareVertex {
                    first,
                    second,
                    vertex: cell.vertices[v].id.clone(),
                });
            }
        }
    }

    for j in 1..=d.m {
        if !(0..cell.vertices.len()).any(|v| touch[v].contains(&0) && touch[v].contains(&j)) {
            violations.push(Violation::NoAttachmentVertex { component: j });
        }
    }

    let tv_id = cell.vertices[tilde_v].id.clone();
    if cell.is_boundary(tilde_v) {
        violations.push(Violation::DeltaVertexIsBoundary { vertex: tv_id.clone() });
    }
    if !touch[tilde_v].contains(&0) {
        violations.push(Violation::DeltaVertexIsolated { vertex: tv_id.clone() });
    }
    for &j in touch[tilde_v].iter().filter(|&&j| j != 0) {
        violations.push(Violation::DeltaVertexTouchesComponent { vertex: tv_id.clone(), component: j });
    }
    Ok(ValidationReport { violations })
}

/// Per-component total lengths `l_0..l_m` and attachment counts `N_1..N_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentStats<T> {
    pub l: Vec<T>,
    pub n: Vec<usize>,
}

impl<T: Scalar> ComponentStats<T> {
    /// Build directly from numbers, checking `l_j > 0` and `N_j ≥ 1`.
    pub fn new(l: Vec<T>, n: Vec<usize>) -> Result<Self> {
        if l.len() < 2 || n.len() + 1 != l.len() {
            return Err(Error::InvalidDecomposition(format!(
                "stats need m+1 lengths and m counts (got {} and {})",
                l.len(),
                n.len()
            )));
        }
        if let Some(j) = l.iter().position(|x| !(*x > T::zero()) || !x.is_finite_value()) {
            return Err(Error::InvalidDecomposition(format!("l_{j} must be positive and finite")));
        }
        if let Some(j) = n.iter().position(|&x| x == 0) {
            return Err(Error::InvalidDecomposition(format!("N_{} must be at least 1", j + 1)));
        }
        Ok(Self { l, n })
    }

    pub fn m(&self) -> usize {
        self.n.len()
    }

    /// Same stats in another scalar type.
    pub fn convert<U: Scalar>(&self) -> ComponentStats<U> {
        ComponentStats {
            l: self.l.iter().map(|x| U::from_f64(x.lossy_f64()).expect("finite length")).collect(),
            n: self.n.clone(),
        }
    }
}

/// Component lengths and attachment counts of a valid decomposition.
pub fn component_stats<T: Scalar>(cell: &PeriodCell<T>, d: &Decomposition) -> Result<ComponentStats<T>> {
    let resolved = d.resolve(cell)?;
    let mut l = vec![T::zero(); d.m + 1];
    for (e, edge) in cell.edges.iter().enumerate() {
        let j = resolved.component[e];
        l[j] = l[j] + edge.length;
    }
    let n = resolved.attachments.iter().map(Vec::len).collect();
    ComponentStats::new(l, n)
}

fn copy_label(c: &[usize]) -> String {
    c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(".")
}

fn tiled_id(id: &str, c: &[usize]) -> String {
    format!("{id}#{}", copy_label(c))
}

/// All copy multi-indices in lexicographic order (last index fastest).
fn copy_indices(counts: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = counts.iter().product();
    (0..total)
        .map(|mut q| {
            let mut c = vec![0; counts.len()];
            for k in (0..counts.len()).rev() {
                c[k] = q % counts[k];
                q /= counts[k];
            }
            c
        })
        .collect()
}

fn check_counts(dim: usize, counts: &[usize]) -> Result<()> {
    if counts.len() != dim || counts.iter().any(|&c| c == 0) {
        return Err(Error::InvalidCell(format!(
            "tiling counts must be {dim} positive integers, got {counts:?}"
        )));
    }
    Ok(())
}

/// Cell made of `∏ counts_k` translated copies, glued along the pairs that
/// become internal. Surviving pairs carry shifts in units of the coarser
/// lattice. Ids become `"{id}#{c_1}.{c_2}..."`.
pub fn tile_cell<T: Scalar>(cell: &PeriodCell<T>, counts: &[usize]) -> Result<PeriodCell<T>> {
    let report = validate_cell(cell);
    if !report.is_ok() {
        return Err(Error::InvalidCell(report.summary()));
    }
    check_counts(cell.dim, counts)?;
    let copies = copy_indices(counts);

    // (original w, copy) -> (original v, copy) for pairs that become internal.
    let mut glue: HashMap<(usize, Vec<usize>), (usize, Vec<usize>)> = HashMap::new();
    let mut crossing = Vec::new();
    let mut crossing_vertices = BTreeSet::new();
    for (p, &(v, w)) in cell.pairs.iter().zip(&cell.pair_ends) {
        for c in &copies {
            let target: Vec<i64> = c.iter().zip(&p.shift).map(|(&ck, &ik)| ck as i64 + ik).collect();
            let wrapped: Vec<usize> =
                target.iter().zip(counts).map(|(&t, &r)| t.rem_euclid(r as i64) as usize).collect();
            let coarse: Vec<i64> = target.iter().zip(counts).map(|(&t, &r)| t.div_euclid(r as i64)).collect();
            if coarse.iter().all(|&s| s == 0) {
                glue.insert((w, c.clone()), (v, wrapped));
            } else {
                crossing_vertices.insert((v, wrapped.clone()));
                crossing_vertices.insert((w, c.clone()));
                crossing.push(BoundaryPair::new(
                    tiled_id(&cell.vertices[v].id, &wrapped),
                    tiled_id(&cell.vertices[w].id, c),
                    coarse,
                ));
            }
        }
    }

    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for c in &copies {
        for (i, vertex) in cell.vertices.iter().enumerate() {
            if glue.contains_key(&(i, c.clone())) {
                continue;
            }
            let kind = if crossing_vertices.contains(&(i, c.clone())) {
                VertexKind::Boundary
            } else {
                VertexKind::Interior
            };
            vertices.push(Vertex { id: tiled_id(&vertex.id, c), kind });
        }
        let endpoint = |i: usize| match glue.get(&(i, c.clone())) {
            Some((v, cc)) => tiled_id(&cell.vertices[*v].id, cc),
            None => tiled_id(&cell.vertices[i].id, c),
        };
        for (e, edge) in cell.edges.iter().enumerate() {
            let (a, b) = cell.ends[e];
            edges.push(Edge::new(tiled_id(&edge.id, c), endpoint(a), endpoint(b), edge.length));
        }
    }
    PeriodCell::new(cell.dim, vertices, edges, crossing)
}

/// Replicate a decomposition over a tiled cell: copy `q` (lexicographic
/// order) maps `Y_j` to `Y_{q·m + j}` for `j ≥ 1`, `Y_0` stays shared and
/// `ṽ` is taken from the first copy.
pub fn tile_decomposition(d: &Decomposition, dim: usize, counts: &[usize]) -> Result<Decomposition> {
    check_counts(dim, counts)?;
    let copies = copy_indices(counts);
    let mut edge_component = BTreeMap::new();
    for (q, c) in copies.iter().enumerate() {
        for (id, &j) in &d.edge_component {
            let mapped = if j == 0 { 0 } else { q * d.m + j };
            edge_component.insert(tiled_id(id, c), mapped);
        }
    }
    Ok(Decomposition {
        m: d.m * copies.len(),
        edge_component,
        tilde_v: tiled_id(&d.tilde_v, &copies[0]),
    })
}

/// Reference cells used throughout the docs and tests.
pub mod fixtures {
    use super::*;

    /// Z-periodic cell: interior `v, c, w`, boundary `b0, b1` paired with
    /// shift (1); path `b0–v–c–w–b1` (four half-length edges, `Y_0`) plus the
    /// unit edge `v–w` (`Y_1`); `ṽ = c`.
    pub fn twin_chain<T: Scalar>() -> (PeriodCell<T>, Decomposition) {
        let half = T::one() / (T::one() + T::one());
        let cell = PeriodCell::new(
            1,
            vec![
                Vertex::boundary("b0"),
                Vertex::interior("v"),
                Vertex::interior("c"),
                Vertex::interior("w"),
                Vertex::boundary("b1"),
            ],
            vec![
                Edge::new("b0v", "b0", "v", half),
                Edge::new("vc", "v", "c", half),
                Edge::new("cw", "c", "w", half),
                Edge::new("wb1", "w", "b1", half),
                Edge::new("vw", "v", "w", T::one()),
            ],
            vec![BoundaryPair::new("b0", "b1", vec![1])],
        )
        .expect("twin-chain cell is well formed");
        let edge_component = [("b0v", 0), ("vc", 0), ("cw", 0), ("wb1", 0), ("vw", 1)]
            .into_iter()
            .map(|(k, j)| (k.to_string(), j))
            .collect();
        (cell, Decomposition::new(1, edge_component, "c"))
    }

    /// Equilateral hexagonal lattice: vertices `A`, `B` joined by a unit edge
    /// and by two more unit edges cut in half at the cell boundary.
    pub fn hexagonal<T: Scalar>() -> PeriodCell<T> {
        let half = T::one() / (T::one() + T::one());
        PeriodCell::new(
            2,
            vec![
                Vertex::interior("A"),
                Vertex::interior("B"),
                Vertex::boundary("p1"),
                Vertex::boundary("q1"),
                Vertex::boundary("p2"),
                Vertex::boundary("q2"),
            ],
            vec![
                Edge::new("AB", "A", "B", T::one()),
                Edge::new("Ap1", "A", "p1", half),
                Edge::new("q1B", "q1", "B", half),
                Edge::new("Ap2", "A", "p2", half),
                Edge::new("q2B", "q2", "B", half),
            ],
            vec![BoundaryPair::new("p1", "q1", vec![1, 0]), BoundaryPair::new("p2", "q2", vec![0, 1])],
        )
        .expect("hexagonal cell is well formed")
    }

    /// A plain line: one edge between two paired boundary vertices.
    pub fn line<T: Scalar>(length: T) -> PeriodCell<T> {
        PeriodCell::new(
            1,
            vec![Vertex::boundary("b0"), Vertex::boundary("b1")],
            vec![Edge::new("e", "b0", "b1", length)],
            vec![BoundaryPair::new("b0", "b1", vec![1])],
        )
        .expect("line cell is well formed")
    }
}
