//! Weighted-graph data model: vertices with a positive measure `m`, a
//! sign-changing potential `c`, symmetric nonnegative edge weights `b`, and
//! the homogeneity exponent `p` stored on the instance.
//!
//! Graphs are immutable after construction. Vertex ids are opaque strings and
//! every iteration order is the insertion order of the input, so argmin and
//! argmax tie-breaks are reproducible.

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Raw, possibly defective graph data as it comes out of a file or a builder.
/// `validate` reports the defects; [`WeightedGraph`] only holds graphs whose
/// structural invariants hold.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphData {
    pub p: f64,
    /// (id, m, c) triples in input order.
    pub vertices: Vec<(String, f64, f64)>,
    /// (u, v, b) triples; an unordered edge should appear once.
    pub edges: Vec<(String, String, f64)>,
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateVertex { id: String },
    UnknownEndpoint { u: String, v: String },
    /// The same unordered pair appears with two different weights.
    Asymmetry { u: String, v: String, b1: f64, b2: f64 },
    NonzeroDiagonal { id: String, b: f64 },
    NonpositiveMeasure { id: String, m: f64 },
    NegativeEdgeWeight { u: String, v: String, b: f64 },
    NonFinite { what: String },
    BadExponent { p: f64 },
    Disconnected { components: Vec<Vec<String>> },
    EmptyGraph,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DuplicateVertex { id } => write!(f, "duplicate vertex id {id}"),
            Violation::UnknownEndpoint { u, v } => write!(f, "edge ({u},{v}) has unknown endpoint"),
            Violation::Asymmetry { u, v, b1, b2 } => {
                write!(f, "asymmetric weights at pair ({u},{v}): {b1} vs {b2}")
            }
            Violation::NonzeroDiagonal { id, b } => write!(f, "nonzero diagonal at {id}: {b}"),
            Violation::NonpositiveMeasure { id, m } => {
                write!(f, "nonpositive measure at {id}: {m}")
            }
            Violation::NegativeEdgeWeight { u, v, b } => {
                write!(f, "negative edge weight at ({u},{v}): {b}")
            }
            Violation::NonFinite { what } => write!(f, "non-finite value: {what}"),
            Violation::BadExponent { p } => write!(f, "exponent p = {p} outside (1, inf)"),
            Violation::Disconnected { components } => {
                write!(f, "graph is disconnected: {} components", components.len())
            }
            Violation::EmptyGraph => write!(f, "graph has no vertices"),
        }
    }
}

/// Result of [`validate`]: all violations plus the per-vertex weighted row
/// sums (always finite on finite graphs, still reported).
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub row_sums: Vec<(String, f64)>,
    pub connected: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Valid except possibly for connectivity. Disconnected graphs are
    /// constructible (restriction produces them); operations that need
    /// connectivity check the flag.
    pub fn is_structurally_valid(&self) -> bool {
        self.violations
            .iter()
            .all(|v| matches!(v, Violation::Disconnected { .. }))
    }
}

/// Check all graph invariants on raw data: symmetry (no conflicting duplicate
/// pairs), zero diagonal, positive measure, nonnegative weights, finite
/// entries, exponent range, connectivity via breadth-first reachability.
pub fn validate(data: &GraphData) -> ValidationReport {
    let mut violations = Vec::new();
    if data.vertices.is_empty() {
        violations.push(Violation::EmptyGraph);
    }
    if !(data.p > 1.0 && data.p.is_finite()) {
        violations.push(Violation::BadExponent { p: data.p });
    }
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, (id, m, c)) in data.vertices.iter().enumerate() {
        if index.insert(id, i).is_some() {
            violations.push(Violation::DuplicateVertex { id: id.clone() });
        }
        if !(*m > 0.0) {
            violations.push(Violation::NonpositiveMeasure { id: id.clone(), m: *m });
        }
        if !m.is_finite() || !c.is_finite() {
            violations.push(Violation::NonFinite { what: format!("vertex {id}") });
        }
    }

    let n = data.vertices.len();
    let mut pair_weight: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut row_sums = vec![0.0; n];
    for (u, v, b) in &data.edges {
        let (iu, iv) = match (index.get(u.as_str()), index.get(v.as_str())) {
            (Some(&iu), Some(&iv)) => (iu, iv),
            _ => {
                violations.push(Violation::UnknownEndpoint { u: u.clone(), v: v.clone() });
                continue;
            }
        };
        if !b.is_finite() {
            violations.push(Violation::NonFinite { what: format!("edge ({u},{v})") });
            continue;
        }
        if iu == iv {
            if *b != 0.0 {
                violations.push(Violation::NonzeroDiagonal { id: u.clone(), b: *b });
            }
            continue;
        }
        if *b < 0.0 {
            violations.push(Violation::NegativeEdgeWeight { u: u.clone(), v: v.clone(), b: *b });
        }
        let key = (iu.min(iv), iu.max(iv));
        match pair_weight.get(&key) {
            Some(&prev) if prev != *b => {
                violations.push(Violation::Asymmetry {
                    u: data.vertices[key.0].0.clone(),
                    v: data.vertices[key.1].0.clone(),
                    b1: prev,
                    b2: *b,
                });
            }
            Some(_) => {}
            None => {
                pair_weight.insert(key, *b);
                if *b > 0.0 {
                    adj[iu].push(iv);
                    adj[iv].push(iu);
                }
                row_sums[iu] += *b;
                row_sums[iv] += *b;
            }
        }
    }

    let components = components_of(n, &adj);
    let connected = components.len() <= 1;
    if !connected {
        violations.push(Violation::Disconnected {
            components: components
                .iter()
                .map(|comp| comp.iter().map(|&i| data.vertices[i].0.clone()).collect())
                .collect(),
        });
    }

    ValidationReport {
        violations,
        row_sums: data
            .vertices
            .iter()
            .zip(&row_sums)
            .map(|((id, _, _), &s)| (id.clone(), s))
            .collect(),
        connected,
    }
}

fn components_of(n: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    comp.push(y);
                    queue.push_back(y);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// A finite weighted graph with validated invariants. Immutable; safe to
/// share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    m: Vec<f64>,
    c: Vec<f64>,
    /// Symmetric neighbor lists (j, b_ij) with b > 0.
    adj: Vec<Vec<(usize, f64)>>,
    /// Each unordered edge once, i < j, in input order.
    edges: Vec<(usize, usize, f64)>,
    p: f64,
    connected: bool,
}

impl WeightedGraph {
    /// Build from raw data, rejecting structural defects. Disconnected
    /// graphs are allowed (the flag is stored); everything else must hold.
    pub fn from_data(data: GraphData) -> Result<Self> {
        let report = validate(&data);
        if !report.is_structurally_valid() {
            let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidGraph(msgs.join("; ")));
        }
        let ids: Vec<String> = data.vertices.iter().map(|(id, _, _)| id.clone()).collect();
        let index: BTreeMap<String, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let m: Vec<f64> = data.vertices.iter().map(|&(_, m, _)| m).collect();
        let c: Vec<f64> = data.vertices.iter().map(|&(_, _, c)| c).collect();
        let n = ids.len();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut edges = Vec::new();
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (u, v, b) in &data.edges {
            let iu = index[u.as_str()];
            let iv = index[v.as_str()];
            if iu == iv {
                continue; // validated zero diagonal; drop explicit zeros
            }
            let key = (iu.min(iv), iu.max(iv));
            if !seen.insert(key) {
                continue; // validated consistent duplicate
            }
            if *b > 0.0 {
                adj[iu].push((iv, *b));
                adj[iv].push((iu, *b));
                edges.push((key.0, key.1, *b));
            }
        }
        let connected = report.connected;
        Ok(WeightedGraph { ids, index, m, c, adj, edges, p: data.p, connected })
    }

    /// Convenience builder from parallel id/measure/potential/edge lists.
    pub fn build(
        p: f64,
        vertices: Vec<(String, f64, f64)>,
        edges: Vec<(String, String, f64)>,
    ) -> Result<Self> {
        Self::from_data(GraphData { p, vertices, edges })
    }

    pub fn to_data(&self) -> GraphData {
        GraphData {
            p: self.p,
            vertices: self
                .ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), self.m[i], self.c[i]))
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(i, j, b)| (self.ids[i].clone(), self.ids[j].clone(), b))
                .collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn measure(&self, i: usize) -> f64 {
        self.m[i]
    }

    pub fn measures(&self) -> &[f64] {
        &self.m
    }

    pub fn potential(&self, i: usize) -> f64 {
        self.c[i]
    }

    pub fn potentials(&self) -> &[f64] {
        &self.c
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    /// Unordered edges (i, j, b) with i < j and b > 0, in input order.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn edge_weight(&self, i: usize, j: usize) -> f64 {
        self.adj[i].iter().find(|&&(k, _)| k == j).map_or(0.0, |&(_, b)| b)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, b)| b).sum()
    }

    /// Replace the stored exponent. Cached quantities are tied to the
    /// instance, so changing p means building a new instance.
    pub fn with_exponent(&self, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::BadExponent(p));
        }
        let mut g = self.clone();
        g.p = p;
        Ok(g)
    }

    /// Shift the potential pointwise: c(x) -> c(x) + delta(x).
    pub fn with_potential_shift(&self, delta: &[f64]) -> Result<Self> {
        if delta.len() != self.vertex_count() {
            return Err(Error::InvalidParameter("potential shift has wrong length".into()));
        }
        let mut g = self.clone();
        for (c, d) in g.c.iter_mut().zip(delta) {
            *c += d;
        }
        Ok(g)
    }

    /// Replace the edge table, keeping vertices, m, c and p. Used to run the
    /// same machinery on transformed weights (ground-state transform,
    /// fractional weights).
    pub fn with_edge_table(&self, table: &EdgeTable, c: Option<Vec<f64>>) -> Result<Self> {
        let mut data = self.to_data();
        if let Some(c_new) = c {
            if c_new.len() != self.vertex_count() {
                return Err(Error::InvalidParameter("potential has wrong length".into()));
            }
            for (v, c) in data.vertices.iter_mut().zip(c_new) {
                v.2 = c;
            }
        }
        data.edges = table
            .iter()
            .map(|((u, v), b)| (u.clone(), v.clone(), b))
            .collect();
        Self::from_data(data)
    }

    /// Connected components as sorted index lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj: Vec<Vec<usize>> =
            self.adj.iter().map(|ns| ns.iter().map(|&(j, _)| j).collect()).collect();
        components_of(self.vertex_count(), &adj)
    }

    /// Validation of the already-built instance. Only connectivity can be
    /// reported here; structural defects cannot be constructed.
    pub fn validation_report(&self) -> ValidationReport {
        validate(&self.to_data())
    }

    /// Lexicographically smallest id; the deterministic probe vertex used
    /// for normalizations.
    pub fn probe_vertex(&self) -> usize {
        let mut best = 0usize;
        for i in 1..self.ids.len() {
            if self.ids[i] < self.ids[best] {
                best = i;
            }
        }
        best
    }
}

/// Dirichlet restriction to a subset: keep vertices of `keep`, restrict b
/// and m, and fold every edge leaving the subset into the potential,
/// `c_Y(y) = c(y) + sum_{x not in Y} b(x,y)`. Exact for functions vanishing
/// outside the subset.
pub fn restrict(g: &WeightedGraph, keep: &[usize]) -> Result<WeightedGraph> {
    if keep.is_empty() {
        return Err(Error::EmptyVertexSet());
    }
    let keep_set: BTreeSet<usize> = keep.iter().copied().collect();
    for &i in &keep_set {
        if i >= g.vertex_count() {
            return Err(Error::UnknownVertex(format!("#{i}")));
        }
    }
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for i in 0..g.vertex_count() {
        if !keep_set.contains(&i) {
            continue;
        }
        let killed: f64 = g
            .neighbors(i)
            .iter()
            .filter(|(j, _)| !keep_set.contains(j))
            .map(|&(_, b)| b)
            .sum();
        vertices.push((g.id(i).to_string(), g.measure(i), g.potential(i) + killed));
    }
    for &(i, j, b) in g.edges() {
        if keep_set.contains(&i) && keep_set.contains(&j) {
            edges.push((g.id(i).to_string(), g.id(j).to_string(), b));
        }
    }
    WeightedGraph::build(g.p(), vertices, edges)
}

/// Restriction by vertex ids.
pub fn restrict_ids(g: &WeightedGraph, keep: &[String]) -> Result<WeightedGraph> {
    let idx: Result<Vec<usize>> = keep.iter().map(|id| g.index_of(id)).collect();
    restrict(g, &idx?)
}

/// Length of the shortest path through edges with b > 0; 0 on the diagonal.
pub fn combinatorial_distance(g: &WeightedGraph, x: usize, y: usize) -> Result<usize> {
    if x == y {
        return Ok(0);
    }
    let mut dist = vec![usize::MAX; g.vertex_count()];
    dist[x] = 0;
    let mut queue = VecDeque::from([x]);
    while let Some(v) = queue.pop_front() {
        for &(w, _) in g.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                if w == y {
                    return Ok(dist[w]);
                }
                queue.push_back(w);
            }
        }
    }
    Err(Error::Disconnected(g.id(x).to_string(), g.id(y).to_string()))
}

/// A real-valued function on the vertices of a fixed graph, stored densely.
/// The support is derived, never stored out of sync.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<f64>,
}

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Self {
        VertexFunction { values }
    }

    pub fn constant(g: &WeightedGraph, v: f64) -> Self {
        VertexFunction { values: vec![v; g.vertex_count()] }
    }

    pub fn zero(g: &WeightedGraph) -> Self {
        Self::constant(g, 0.0)
    }

    /// Indicator of a vertex set.
    pub fn indicator(g: &WeightedGraph, set: &[usize]) -> Self {
        let mut values = vec![0.0; g.vertex_count()];
        for &i in set {
            values[i] = 1.0;
        }
        VertexFunction { values }
    }

    pub fn from_map(g: &WeightedGraph, map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut values = vec![0.0; g.vertex_count()];
        for (id, v) in map {
            values[g.index_of(id)?] = *v;
        }
        Ok(VertexFunction { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] != 0.0).collect()
    }

    pub fn abs(&self) -> Self {
        VertexFunction { values: self.values.iter().map(|v| v.abs()).collect() }
    }

    pub fn scale(&self, t: f64) -> Self {
        VertexFunction { values: self.values.iter().map(|v| t * v).collect() }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// First index violating strict positivity, if any.
    pub fn first_nonpositive(&self) -> Option<usize> {
        self.values.iter().position(|&v| !(v > 0.0))
    }
}

/// Symmetric map on unordered vertex pairs, keyed by id; absent pairs read
/// as zero. Carrier for edge weights, simplified-energy terms, transformed
/// weights and edge pseudo-metrics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeTable {
    entries: BTreeMap<(String, String), f64>,
}

impl EdgeTable {
    pub fn new() -> Self {
        EdgeTable::default()
    }

    fn key(u: &str, v: &str) -> (String, String) {
        if u <= v {
            (u.to_string(), v.to_string())
        } else {
            (v.to_string(), u.to_string())
        }
    }

    pub fn set(&mut self, u: &str, v: &str, value: f64) {
        self.entries.insert(Self::key(u, v), value);
    }

    pub fn get(&self, u: &str, v: &str) -> f64 {
        self.entries.get(&Self::key(u, v)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in key order: ((u, v), value) with u <= v.
    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    /// Edge table of the graph's own weights b.
    pub fn from_graph(g: &WeightedGraph) -> Self {
        let mut t = EdgeTable::new();
        for &(i, j, b) in g.edges() {
            t.set(g.id(i), g.id(j), b);
        }
        t
    }

    /// Constant value on every edge of the graph.
    pub fn constant_on_edges(g: &WeightedGraph, value: f64) -> Self {
        let mut t = EdgeTable::new();
        for &(i, j, _) in g.edges() {
            t.set(g.id(i), g.id(j), value);
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        true // keys are normalized; asymmetry cannot be represented
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        EdgeTable {
            entries: self.entries.iter().map(|(k, &v)| (k.clone(), f(v))).collect(),
        }
    }
}

/// An increasing family of vertex subsets used by exhaustion-style
/// operations (tail spectral estimates, null sequences, partial sums).
#[derive(Debug, Clone)]
pub struct ExhaustionPlan {
    stages: Vec<Vec<usize>>,
}

impl ExhaustionPlan {
    /// Stages must be nonempty, strictly increasing by inclusion, and
    /// subsets of the graph's vertex set.
    pub fn new(g: &WeightedGraph, stages: Vec<Vec<usize>>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidPlan("no stages".into()));
        }
        let mut prev: Option<BTreeSet<usize>> = None;
        for stage in &stages {
            if stage.is_empty() {
                return Err(Error::InvalidPlan("empty stage".into()));
            }
            let set: BTreeSet<usize> = stage.iter().copied().collect();
            if set.iter().any(|&i| i >= g.vertex_count()) {
                return Err(Error::InvalidPlan("stage contains unknown vertex".into()));
            }
            if let Some(p) = &prev {
                if !p.is_subset(&set) || p.len() >= set.len() {
                    return Err(Error::InvalidPlan(
                        "stages must be strictly increasing by inclusion".into(),
                    ));
                }
            }
            prev = Some(set);
        }
        let stages = stages
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Ok(ExhaustionPlan { stages })
    }

    pub fn from_ids(g: &WeightedGraph, stages: &[Vec<String>]) -> Result<Self> {
        let mut idx_stages = Vec::new();
        for stage in stages {
            let s: Result<Vec<usize>> = stage.iter().map(|id| g.index_of(id)).collect();
            idx_stages.push(s?);
        }
        Self::new(g, idx_stages)
    }

    /// Prefixes of the input order: stages of the first n_k vertices.
    pub fn prefixes(g: &WeightedGraph, sizes: &[usize]) -> Result<Self> {
        let stages = sizes.iter().map(|&k| (0..k.min(g.vertex_count())).collect()).collect();
        Self::new(g, stages)
    }

    /// Combinatorial balls around a center vertex with the given radii.
    pub fn balls(g: &WeightedGraph, center: usize, radii: &[usize]) -> Result<Self> {
        let mut stages = Vec::new();
        for &r in radii {
            let mut stage = Vec::new();
            for i in 0..g.vertex_count() {
                if let Ok(d) = combinatorial_distance(g, center, i) {
                    if d <= r {
                        stage.push(i);
                    }
                }
            }
            stages.push(stage);
        }
        Self::new(g, stages)
    }

    pub fn stages(&self) -> &[Vec<usize>] {
        &self.stages
    }

    pub fn last(&self) -> &[usize] {
        self.stages.last().expect("plan has at least one stage")
    }

    /// Union of all stages (equals the last stage by monotonicity).
    pub fn union(&self) -> Vec<usize> {
        self.last().to_vec()
    }

    /// Whether the plan exhausts the whole truncation.
    pub fn is_complete(&self, g: &WeightedGraph) -> bool {
        self.last().len() == g.vertex_count()
    }

    /// Append the full vertex set as a final stage when not already there.
    pub fn completed(&self, g: &WeightedGraph) -> Result<Self> {
        if self.is_complete(g) {
            return Ok(self.clone());
        }
        let mut stages = self.stages.clone();
        stages.push((0..g.vertex_count()).collect());
        Self::new(g, stages)
    }
}
