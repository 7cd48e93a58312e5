//! Graph family generators. Infinite model graphs are represented by finite
//! truncations; the "killed" variants fold the deleted exterior into the
//! potential, one `b` unit per deleted neighbor, so the truncation is exact
//! for functions vanishing outside it.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Constant-or-per-vertex profile for m and c.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    PerVertex(Vec<f64>),
}

impl Profile {
    fn value(&self, i: usize, n: usize) -> Result<f64> {
        match self {
            Profile::Constant(v) => Ok(*v),
            Profile::PerVertex(vs) => {
                if vs.len() != n {
                    Err(Error::InvalidFamilySpec(format!(
                        "profile has {} entries for {} vertices",
                        vs.len(),
                        n
                    )))
                } else {
                    Ok(vs[i])
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Path { n: usize, kill_left: bool, kill_right: bool },
    Cycle { n: usize },
    /// Rooted tree: the root has `branching` children, every further
    /// interior vertex has `branching` children, `depth` levels below the
    /// root. With `kill_leaves` the deleted subtrees below the last level
    /// show up as potential `branching * b` on each leaf.
    Tree { branching: usize, depth: usize, kill_leaves: bool },
    /// d-dimensional box of side `side` in the integer lattice; the
    /// Dirichlet flag kills the out-of-box neighbors.
    LatticeBox { dim: usize, side: usize, dirichlet: bool },
    Complete { n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: FamilySpec,
    pub p: f64,
    pub b: f64,
    pub m: Profile,
    pub c: Profile,
}

impl GeneratorSpec {
    pub fn new(family: FamilySpec) -> Self {
        GeneratorSpec {
            family,
            p: 2.0,
            b: 1.0,
            m: Profile::Constant(1.0),
            c: Profile::Constant(0.0),
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }
}

/// Generate a graph from a family spec. Killing is encoded into c.
pub fn generate(spec: &GeneratorSpec) -> Result<WeightedGraph> {
    if !(spec.b > 0.0) {
        return Err(Error::InvalidFamilySpec(format!("edge weight b = {} not positive", spec.b)));
    }
    let (n, edges, kill_degree) = topology(&spec.family)?;
    let mut vertices = Vec::with_capacity(n);
    for i in 0..n {
        let c = spec.c.value(i, n)? + kill_degree[i] as f64 * spec.b;
        vertices.push((format!("v{i}"), spec.m.value(i, n)?, c));
    }
    let edges = edges
        .into_iter()
        .map(|(i, j)| (format!("v{i}"), format!("v{j}"), spec.b))
        .collect();
    WeightedGraph::build(spec.p, vertices, edges)
}

/// Vertex count, unit edges, and per-vertex count of killed neighbors.
fn topology(family: &FamilySpec) -> Result<(usize, Vec<(usize, usize)>, Vec<usize>)> {
    match *family {
        FamilySpec::Path { n, kill_left, kill_right } => {
            if n == 0 {
                return Err(Error::InvalidFamilySpec("path needs n >= 1".into()));
            }
            let edges = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
            let mut kill = vec![0usize; n];
            if kill_left {
                kill[0] += 1;
            }
            if kill_right {
                kill[n - 1] += 1;
            }
            Ok((n, edges, kill))
        }
        FamilySpec::Cycle { n } => {
            if n < 3 {
                return Err(Error::InvalidFamilySpec("cycle needs n >= 3".into()));
            }
            let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
            edges.push((0, n - 1));
            Ok((n, edges, vec![0; n]))
        }
        FamilySpec::Tree { branching, depth, kill_leaves } => {
            if branching == 0 {
                return Err(Error::InvalidFamilySpec("tree needs branching >= 1".into()));
            }
            // level sizes: 1, branching, branching^2, ...
            let mut level_start = vec![0usize];
            let mut size = 1usize;
            let mut level_size = 1usize;
            for _ in 0..depth {
                level_size *= branching;
                level_start.push(size);
                size += level_size;
            }
            let mut edges = Vec::new();
            // children of vertex k at level l start at level_start[l+1] + (k - level_start[l]) * branching
            for l in 0..depth {
                let start = level_start[l];
                let next = level_start[l + 1];
                let count = if l == 0 { 1 } else { branching.pow(l as u32) };
                for k in 0..count {
                    for c in 0..branching {
                        edges.push((start + k, next + k * branching + c));
                    }
                }
            }
            let mut kill = vec![0usize; size];
            if kill_leaves && depth > 0 {
                for v in level_start[depth]..size {
                    kill[v] = branching;
                }
            } else if kill_leaves && depth == 0 {
                kill[0] = branching;
            }
            Ok((size, edges, kill))
        }
        FamilySpec::LatticeBox { dim, side, dirichlet } => {
            if dim == 0 || side == 0 {
                return Err(Error::InvalidFamilySpec("box needs dim >= 1 and side >= 1".into()));
            }
            let n = side.checked_pow(dim as u32).ok_or_else(|| {
                Error::InvalidFamilySpec("box too large".into())
            })?;
            if n > 1 << 22 {
                return Err(Error::InvalidFamilySpec("box too large".into()));
            }
            let coord = |mut v: usize| -> Vec<usize> {
                let mut cs = Vec::with_capacity(dim);
                for _ in 0..dim {
                    cs.push(v % side);
                    v /= side;
                }
                cs
            };
            let mut edges = Vec::new();
            let mut kill = vec![0usize; n];
            for v in 0..n {
                let cs = coord(v);
                let mut stride = 1usize;
                for d in 0..dim {
                    if cs[d] + 1 < side {
                        edges.push((v, v + stride));
                    } else if dirichlet {
                        kill[v] += 1;
                    }
                    if cs[d] == 0 && dirichlet {
                        kill[v] += 1;
                    }
                    stride *= side;
                }
            }
            Ok((n, edges, kill))
        }
        FamilySpec::Complete { n } => {
            if n == 0 {
                return Err(Error::InvalidFamilySpec("complete needs n >= 1".into()));
            }
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    edges.push((i, j));
                }
            }
            Ok((n, edges, vec![0; n]))
        }
    }
}

/// Shorthand: unit path with optional killed ends, p = 2, b = m = 1, c = 0.
pub fn path(n: usize, kill_left: bool, kill_right: bool) -> Result<WeightedGraph> {
    generate(&GeneratorSpec::new(FamilySpec::Path { n, kill_left, kill_right }))
}

pub fn complete(n: usize) -> Result<WeightedGraph> {
    generate(&GeneratorSpec::new(FamilySpec::Complete { n }))
}

pub fn tree(branching: usize, depth: usize, kill_leaves: bool) -> Result<WeightedGraph> {
    generate(&GeneratorSpec::new(FamilySpec::Tree { branching, depth, kill_leaves }))
}

/// Parse a textual family spec, e.g.
/// `path:8`, `path:8:kill=left`, `cycle:6`, `tree:2:3:killed`,
/// `box:2:4:dirichlet`, `complete:5`, optionally followed by
/// `:p=1.5`, `:b=2.0`, `:m=0.5`, `:c=0.25`.
pub fn parse_generator_spec(text: &str) -> Result<GeneratorSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.is_empty() || parts[0].is_empty() {
        return Err(Error::InvalidFamilySpec("empty spec".into()));
    }
    let bad = |msg: &str| Error::InvalidFamilySpec(format!("{msg} in `{text}`"));
    let parse_usize = |s: &str| -> Result<usize> {
        s.parse::<usize>().map_err(|_| bad("bad integer"))
    };
    let mut rest_start;
    let family = match parts[0] {
        "path" => {
            if parts.len() < 2 {
                return Err(bad("path needs a length"));
            }
            let n = parse_usize(parts[1])?;
            rest_start = 2;
            let mut kill_left = false;
            let mut kill_right = false;
            if parts.len() > 2 {
                if let Some(mode) = parts[2].strip_prefix("kill=") {
                    match mode {
                        "left" => kill_left = true,
                        "right" => kill_right = true,
                        "both" => {
                            kill_left = true;
                            kill_right = true;
                        }
                        "none" => {}
                        _ => return Err(bad("kill mode must be left|right|both|none")),
                    }
                    rest_start = 3;
                }
            }
            FamilySpec::Path { n, kill_left, kill_right }
        }
        "cycle" => {
            if parts.len() < 2 {
                return Err(bad("cycle needs a length"));
            }
            rest_start = 2;
            FamilySpec::Cycle { n: parse_usize(parts[1])? }
        }
        "tree" => {
            if parts.len() < 3 {
                return Err(bad("tree needs branching and depth"));
            }
            let branching = parse_usize(parts[1])?;
            let depth = parse_usize(parts[2])?;
            rest_start = 3;
            let mut kill_leaves = false;
            if parts.len() > 3 && parts[3] == "killed" {
                kill_leaves = true;
                rest_start = 4;
            }
            FamilySpec::Tree { branching, depth, kill_leaves }
        }
        "box" => {
            if parts.len() < 3 {
                return Err(bad("box needs dim and side"));
            }
            let dim = parse_usize(parts[1])?;
            let side = parse_usize(parts[2])?;
            rest_start = 3;
            let mut dirichlet = false;
            if parts.len() > 3 && parts[3] == "dirichlet" {
                dirichlet = true;
                rest_start = 4;
            }
            FamilySpec::LatticeBox { dim, side, dirichlet }
        }
        "complete" => {
            if parts.len() < 2 {
                return Err(bad("complete needs a size"));
            }
            rest_start = 2;
            FamilySpec::Complete { n: parse_usize(parts[1])? }
        }
        other => return Err(bad(&format!("unknown family `{other}`"))),
    };
    let mut spec = GeneratorSpec::new(family);
    for part in &parts[rest_start..] {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| bad("trailing option must look like key=value"))?;
        let v: f64 = value.parse().map_err(|_| bad("bad float"))?;
        if !v.is_finite() {
            return Err(bad("non-finite option value"));
        }
        match key {
            "p" => spec.p = v,
            "b" => spec.b = v,
            "m" => spec.m = Profile::Constant(v),
            "c" => spec.c = Profile::Constant(v),
            _ => return Err(bad(&format!("unknown option `{key}`"))),
        }
    }
    Ok(spec)
}
