//! Reduction of Sturm–Liouville problems on metric graphs to the matrix form.
//!
//! Every edge carries a scalar piecewise-constant `σ_j` on its own cells and a
//! rational length in units of `π`. Vertices impose either Dirichlet
//! conditions or continuity plus `Σ y^[1] = h y` (Kirchhoff-type, with
//! outward quasi-derivatives). After subdividing edges to a common length and
//! two-colouring the vertices, edge `j` becomes component `j` of a diagonal
//! matrix problem on `(0, π)`: class-1 vertices sit at `x = 0`, class-2
//! vertices at `x = π`.

use std::collections::{BTreeMap, VecDeque};

use num_integer::Integer;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{diag_real, CMat};
use crate::problem::{validate_boundary, BoundaryData, ProblemL, SigmaField};

/// Largest denominator accepted when a length is given as a decimal number.
pub const DENOMINATOR_CAP: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexCondition {
    Dirichlet,
    Kirchhoff(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphVertex {
    pub id: String,
    pub condition: VertexCondition,
}

/// Edge from `v0` (at `x = 0`) to `v1` (at `x = length·π`); `sigma` holds the
/// values of `σ` on equal cells along the edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub v0: String,
    pub v1: String,
    /// Length in units of `π` as `(numerator, denominator)`.
    pub length: (u64, u64),
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub edges: Vec<GraphEdge>,
    pub vertices: Vec<GraphVertex>,
}

/// A graph with equal edge lengths, bipartition classes and every edge
/// oriented from class 1 to class 2.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGraph {
    pub graph: GraphSpec,
    /// Ids of the class-1 vertices (the `x = 0` ends).
    pub class1: Vec<String>,
    /// Common edge length in units of `π`.
    pub length: (u64, u64),
    /// `s = π / L`: eigenvalues of the reduced problem times `s²` are the
    /// eigenvalues of the original graph.
    pub scale: f64,
}

/// Boundary conditions at the outer ends of a star graph.
#[derive(Debug, Clone, PartialEq)]
pub enum StarBoundary {
    /// `y_j(0) = 0` on every edge.
    Dirichlet,
    /// `y_j^[1](0) = h_j y_j(0)` for `j ≤ r = h.len()`, Dirichlet for the rest.
    Mixed(Vec<f64>),
}

impl GraphSpec {
    fn vertex_index(&self) -> Result<BTreeMap<&str, usize>> {
        let mut map = BTreeMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if map.insert(v.id.as_str(), i).is_some() {
                return Err(Error::InvalidData(format!("duplicate vertex id {}", v.id)));
            }
        }
        for (j, e) in self.edges.iter().enumerate() {
            for end in [&e.v0, &e.v1] {
                if !map.contains_key(end.as_str()) {
                    return Err(Error::InvalidData(format!(
                        "edge {j} refers to unknown vertex {end}"
                    )));
                }
            }
            if e.v0 == e.v1 {
                return Err(Error::InvalidData(format!("edge {j} is a loop")));
            }
            if e.length.0 == 0 || e.length.1 == 0 {
                return Err(Error::InvalidData(format!("edge {j} has zero length")));
            }
        }
        Ok(map)
    }

    /// Adjacency lists `(neighbour, edge)` after checking ids and connectivity.
    fn adjacency(&self) -> Result<Vec<Vec<(usize, usize)>>> {
        if self.edges.is_empty() {
            return Err(Error::InvalidData("graph has no edges".into()));
        }
        let map = self.vertex_index()?;
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (j, e) in self.edges.iter().enumerate() {
            let (a, b) = (map[e.v0.as_str()], map[e.v1.as_str()]);
            adj[a].push((b, j));
            adj[b].push((a, j));
        }
        let mut seen = vec![false; adj.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(w, _) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Disconnected(format!(
                "vertex {} is not reachable",
                self.vertices[i].id
            )));
        }
        Ok(adj)
    }
}

fn reduce(f: (u64, u64)) -> (u64, u64) {
    let g = f.0.gcd(&f.1);
    (f.0 / g, f.1 / g)
}

/// Greatest common divisor of positive rationals.
fn rational_gcd(xs: &[(u64, u64)]) -> (u64, u64) {
    let den = xs.iter().fold(1u64, |acc, x| acc.lcm(&reduce(*x).1));
    let num = xs
        .iter()
        .map(|x| {
            let x = reduce(*x);
            x.0 * (den / x.1)
        })
        .fold(0u64, |acc, v| acc.gcd(&v));
    reduce((num, den))
}

/// Split `cells` into `k` consecutive equal pieces, refining if needed.
fn split_cells(cells: &[f64], k: usize) -> Vec<Vec<f64>> {
    let factor = k / cells.len().gcd(&k);
    let fine: Vec<f64> = cells
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c, factor))
        .collect();
    fine.chunks(fine.len() / k).map(<[f64]>::to_vec).collect()
}

/// Two-colour the vertices; `None` if an odd cycle exists.
fn two_colour(adj: &[Vec<(usize, usize)>]) -> Option<Vec<u8>> {
    let mut colour = vec![u8::MAX; adj.len()];
    colour[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &(w, _) in &adj[u] {
            if colour[w] == u8::MAX {
                colour[w] = 1 - colour[u];
                queue.push_back(w);
            } else if colour[w] == colour[u] {
                return None;
            }
        }
    }
    Some(colour)
}

/// Subdivide every edge into pieces of length `piece`, adding degree-2
/// Kirchhoff(0) vertices.
fn subdivide(g: &GraphSpec, piece: (u64, u64)) -> GraphSpec {
    let mut vertices = g.vertices.clone();
    let mut edges = Vec::new();
    for (j, e) in g.edges.iter().enumerate() {
        let len = reduce(e.length);
        // k = len / piece, an integer by construction.
        let k = ((len.0 * piece.1) / (len.1 * piece.0)) as usize;
        let pieces = split_cells(&e.sigma, k);
        let mut prev = e.v0.clone();
        for (i, sigma) in pieces.into_iter().enumerate() {
            let next = if i + 1 == k {
                e.v1.clone()
            } else {
                let id = format!("{}~{}/{}", j, i + 1, k);
                vertices.push(GraphVertex {
                    id: id.clone(),
                    condition: VertexCondition::Kirchhoff(0.0),
                });
                id
            };
            edges.push(GraphEdge {
                v0: prev,
                v1: next.clone(),
                length: piece,
                sigma,
            });
            prev = next;
        }
    }
    GraphSpec { edges, vertices }
}

/// Subdivide to a common edge length, halve once more if an odd cycle
/// remains, and orient every edge from class 1 to class 2.
///
/// Class 1 is the larger colour class; on a tie, the class containing the
/// first listed vertex. Reversing an edge maps `σ(x)` to `-σ(π - x)`, which
/// keeps both the equation and the outward quasi-derivatives unchanged.
pub fn bipartite_normalize(graph: &GraphSpec) -> Result<NormalizedGraph> {
    graph.adjacency()?;
    let lengths: Vec<_> = graph.edges.iter().map(|e| e.length).collect();
    for (j, l) in lengths.iter().enumerate() {
        if reduce(*l).1 > DENOMINATOR_CAP {
            return Err(Error::IrrationalLengths(format!(
                "edge {j} length {}/{} has a denominator above {DENOMINATOR_CAP}",
                l.0, l.1
            )));
        }
    }
    for (j, e) in graph.edges.iter().enumerate() {
        if e.sigma.is_empty() {
            return Err(Error::InvalidData(format!("edge {j} has no sigma cells")));
        }
    }
    let mut piece = rational_gcd(&lengths);
    let mut g = subdivide(graph, piece);
    let mut adj = g.adjacency()?;
    let colour = match two_colour(&adj) {
        Some(c) => c,
        None => {
            piece = reduce((piece.0, piece.1 * 2));
            g = subdivide(&g, piece);
            adj = g.adjacency()?;
            two_colour(&adj).ok_or_else(|| {
                Error::OrientationConflict("graph is not bipartite after halving".into())
            })?
        }
    };
    let ones = colour.iter().filter(|&&c| c == 0).count();
    let first_class = if 2 * ones >= colour.len() { 0 } else { 1 };
    let map = g.vertex_index()?;
    let class1: Vec<String> = g
        .vertices
        .iter()
        .zip(&colour)
        .filter(|(_, &c)| c == first_class)
        .map(|(v, _)| v.id.clone())
        .collect();
    let edges = g
        .edges
        .iter()
        .map(|e| {
            if colour[map[e.v0.as_str()]] == first_class {
                e.clone()
            } else {
                GraphEdge {
                    v0: e.v1.clone(),
                    v1: e.v0.clone(),
                    length: e.length,
                    sigma: e.sigma.iter().rev().map(|s| -s).collect(),
                }
            }
        })
        .collect();
    let l = piece.0 as f64 / piece.1 as f64;
    Ok(NormalizedGraph {
        graph: GraphSpec {
            edges,
            vertices: g.vertices.clone(),
        },
        class1,
        length: piece,
        scale: 1.0 / l,
    })
}

/// Per-vertex blocks `T^v` (entries `1/r` over the `r` incident edges) and
/// `H^v = h_v T^v`, summed over the vertices at one end.
fn end_blocks(graph: &GraphSpec, at_start: bool, h_factor: f64) -> (CMat, CMat) {
    let m = graph.edges.len();
    let mut t = CMat::zeros(m, m);
    let mut h = CMat::zeros(m, m);
    for v in &graph.vertices {
        let hv = match v.condition {
            VertexCondition::Dirichlet => continue,
            VertexCondition::Kirchhoff(hv) => hv,
        };
        let incident: Vec<usize> = graph
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| if at_start { e.v0 == v.id } else { e.v1 == v.id })
            .map(|(j, _)| j)
            .collect();
        let w = 1.0 / incident.len().max(1) as f64;
        for &a in &incident {
            for &b in &incident {
                t[(a, b)] += num_complex::Complex64::from(w);
                h[(a, b)] += num_complex::Complex64::from(hv * h_factor * w);
            }
        }
    }
    (t, h)
}

/// Equal-cell-count diagonal `σ` from per-edge cell lists.
fn diagonal_sigma(sigmas: &[Vec<f64>], scale: f64) -> Result<SigmaField> {
    let n = sigmas
        .iter()
        .fold(1usize, |acc, s| acc.lcm(&s.len().max(1)));
    let comps: Vec<Vec<f64>> = sigmas
        .iter()
        .map(|s| {
            let s = if s.is_empty() { vec![0.0] } else { s.clone() };
            let f = n / s.len();
            s.iter()
                .flat_map(|&c| std::iter::repeat_n(c * scale, f))
                .collect()
        })
        .collect();
    SigmaField::diagonal(&comps)
}

/// Matrix problem of a normalized graph. Lengths are rescaled to `π`, which
/// multiplies `σ` and the vertex parameters `h` by `L/π`.
pub fn general_reduction(normalized: &NormalizedGraph) -> Result<ProblemL> {
    let g = &normalized.graph;
    g.adjacency()?;
    for (j, e) in g.edges.iter().enumerate() {
        if reduce(e.length) != reduce(normalized.length) {
            return Err(Error::InvalidData(format!(
                "edge {j} length differs from the common length"
            )));
        }
        let c0 = normalized.class1.contains(&e.v0);
        let c1 = normalized.class1.contains(&e.v1);
        if !c0 || c1 {
            return Err(Error::OrientationConflict(format!(
                "edge {j} ({} -> {}) does not run from class 1 to class 2",
                e.v0, e.v1
            )));
        }
    }
    let stretch = 1.0 / normalized.scale;
    let (t1, h1) = end_blocks(g, true, stretch);
    let (t2, h2) = end_blocks(g, false, stretch);
    let m = g.edges.len();
    let boundary = validate_boundary(t1, t2, h1, h2, m)?;
    let sigmas: Vec<Vec<f64>> = g.edges.iter().map(|e| e.sigma.clone()).collect();
    ProblemL::new(diagonal_sigma(&sigmas, stretch)?, boundary)
}

/// Star graph with `m` edges of length `π`, joined at `x = π` with
/// `H2 = h T2`, `T2 = ones/m`.
pub fn star_problem(
    m: usize,
    h: f64,
    boundary: &StarBoundary,
    sigmas: &[Vec<f64>],
) -> Result<ProblemL> {
    if m < 2 {
        return Err(Error::Dimension("a star needs at least 2 edges".into()));
    }
    if sigmas.len() != m {
        return Err(Error::Dimension(format!(
            "{} sigma lists for {m} edges",
            sigmas.len()
        )));
    }
    let (t1, h1) = match boundary {
        StarBoundary::Dirichlet => (CMat::zeros(m, m), CMat::zeros(m, m)),
        StarBoundary::Mixed(hs) => {
            if hs.len() > m {
                return Err(Error::Dimension(format!(
                    "{} Robin parameters for {m} edges",
                    hs.len()
                )));
            }
            let mut ones = vec![0.0; m];
            let mut hd = vec![0.0; m];
            for (j, &hj) in hs.iter().enumerate() {
                ones[j] = 1.0;
                hd[j] = hj;
            }
            (diag_real(&ones), diag_real(&hd))
        }
    };
    let t2 = CMat::from_element(m, m, (1.0 / m as f64).into());
    let h2 = t2.scale(h);
    let b: BoundaryData = validate_boundary(t1, t2, h1, h2, m)?;
    ProblemL::new(diagonal_sigma(sigmas, 1.0)?, b)
}

fn id_of(v: &Value, what: &str) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(Error::InvalidData(format!(
            "{what}: id must be a string or number"
        ))),
    }
}

fn length_of(v: &Value, j: usize) -> Result<(u64, u64)> {
    let bad = || Error::InvalidData(format!("edge {j}: length must be [num, den] or a number"));
    match v {
        Value::Array(p) if p.len() == 2 => {
            let num = p[0].as_u64().ok_or_else(bad)?;
            let den = p[1].as_u64().ok_or_else(bad)?;
            if num == 0 || den == 0 {
                return Err(bad());
            }
            Ok((num, den))
        }
        Value::Number(n) => {
            if let Some(k) = n.as_u64() {
                return if k == 0 { Err(bad()) } else { Ok((k, 1)) };
            }
            let x = n.as_f64().filter(|x| *x > 0.0).ok_or_else(bad)?;
            (1..=DENOMINATOR_CAP)
                .find_map(|den| {
                    let num = (x * den as f64).round();
                    ((x * den as f64 - num).abs() <= 1e-9 * num.max(1.0) && num >= 1.0)
                        .then_some((num as u64, den))
                })
                .ok_or_else(|| {
                    Error::IrrationalLengths(format!(
                        "edge {j}: length {x} has no denominator up to {DENOMINATOR_CAP}"
                    ))
                })
        }
        _ => Err(bad()),
    }
}

/// Graph file: `{ "edges": [{ "v0", "v1", "length": [num, den], "sigma": [cells] }],
/// "vertices": [{ "id", "condition": "dirichlet" | { "kirchhoff": h } }] }`.
/// A missing `length` means `π`; a missing `sigma` means `σ = 0`.
pub fn graph_from_json(v: &Value) -> Result<GraphSpec> {
    let list = |key: &str| {
        v.get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidData(format!("missing list \"{key}\"")))
    };
    let mut vertices = Vec::new();
    for (i, x) in list("vertices")?.iter().enumerate() {
        let what = format!("vertex {i}");
        let id = id_of(x.get("id").unwrap_or(&Value::Null), &what)?;
        let condition = match x.get("condition") {
            Some(Value::String(s)) if s.eq_ignore_ascii_case("dirichlet") => {
                VertexCondition::Dirichlet
            }
            Some(Value::String(s)) if s.eq_ignore_ascii_case("kirchhoff") => {
                VertexCondition::Kirchhoff(0.0)
            }
            None => VertexCondition::Kirchhoff(0.0),
            Some(Value::Object(o)) if o.contains_key("kirchhoff") => VertexCondition::Kirchhoff(
                o["kirchhoff"]
                    .as_f64()
                    .ok_or_else(|| Error::InvalidData(format!("{what}: h must be a number")))?,
            ),
            Some(_) => {
                return Err(Error::InvalidData(format!(
                    "{what}: condition must be \"dirichlet\" or {{\"kirchhoff\": h}}"
                )))
            }
        };
        vertices.push(GraphVertex { id, condition });
    }
    let mut edges = Vec::new();
    for (j, x) in list("edges")?.iter().enumerate() {
        let what = format!("edge {j}");
        let sigma = match x.get("sigma") {
            None | Some(Value::Null) => vec![0.0],
            Some(Value::Number(n)) => vec![n.as_f64().unwrap_or(f64::NAN)],
            Some(Value::Array(cells)) => cells
                .iter()
                .map(|c| {
                    c.as_f64().ok_or_else(|| {
                        Error::InvalidData(format!("{what}: sigma cells must be real"))
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            Some(_) => return Err(Error::InvalidData(format!("{what}: bad sigma"))),
        };
        if sigma.is_empty() {
            return Err(Error::InvalidData(format!("{what}: sigma has no cells")));
        }
        edges.push(GraphEdge {
            v0: id_of(x.get("v0").unwrap_or(&Value::Null), &what)?,
            v1: id_of(x.get("v1").unwrap_or(&Value::Null), &what)?,
            length: match x.get("length") {
                None => (1, 1),
                Some(l) => length_of(l, j)?,
            },
            sigma,
        });
    }
    let g = GraphSpec { edges, vertices };
    g.adjacency()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{filled, max_abs, numerical_rank, trace};
    use crate::spectrum::locate_eigenvalues;
    use serde_json::json;

    fn vertex(id: &str, condition: VertexCondition) -> GraphVertex {
        GraphVertex {
            id: id.into(),
            condition,
        }
    }

    fn edge(v0: &str, v1: &str, length: (u64, u64)) -> GraphEdge {
        GraphEdge {
            v0: v0.into(),
            v1: v1.into(),
            length,
            sigma: vec![0.0],
        }
    }

    fn star_graph(m: usize, inward: bool) -> GraphSpec {
        let mut vertices = vec![vertex("c", VertexCondition::Kirchhoff(0.0))];
        let mut edges = Vec::new();
        for j in 0..m {
            let leaf = format!("l{j}");
            vertices.push(vertex(&leaf, VertexCondition::Dirichlet));
            edges.push(if inward {
                edge(&leaf, "c", (1, 1))
            } else {
                edge("c", &leaf, (1, 1))
            });
        }
        GraphSpec { edges, vertices }
    }

    fn triangle() -> GraphSpec {
        GraphSpec {
            vertices: ["a", "b", "c"]
                .iter()
                .map(|v| vertex(v, VertexCondition::Kirchhoff(0.0)))
                .collect(),
            edges: vec![
                edge("a", "b", (1, 1)),
                edge("b", "c", (1, 1)),
                edge("c", "a", (1, 1)),
            ],
        }
    }

    #[test]
    fn star_problem_matrices() {
        let z = vec![vec![0.0]; 3];
        let p = star_problem(3, 0.0, &StarBoundary::Dirichlet, &z).unwrap();
        assert_eq!(max_abs(&p.boundary.t1), 0.0);
        assert!(max_abs(&(&p.boundary.t2 - filled(3, 1.0 / 3.0))) < 1e-15);
        let p = star_problem(3, 2.0, &StarBoundary::Dirichlet, &z).unwrap();
        assert!(max_abs(&(&p.boundary.h2 - filled(3, 2.0 / 3.0))) < 1e-15);
        let p = star_problem(3, 0.0, &StarBoundary::Mixed(vec![0.0]), &z).unwrap();
        assert_eq!(p.boundary.t1, diag_real(&[1.0, 0.0, 0.0]));
        assert!(star_problem(1, 0.0, &StarBoundary::Dirichlet, &[vec![0.0]]).is_err());
    }

    #[test]
    fn star_general_path_matches_star_problem() {
        let z = vec![vec![0.0]; 3];
        let direct = star_problem(3, 0.0, &StarBoundary::Dirichlet, &z).unwrap();
        for inward in [true, false] {
            let n = bipartite_normalize(&star_graph(3, inward)).unwrap();
            assert_eq!(n.scale, 1.0);
            assert_eq!(general_reduction(&n).unwrap(), direct);
        }
    }

    #[test]
    fn single_edge_unchanged() {
        let g = GraphSpec {
            vertices: vec![
                vertex("a", VertexCondition::Dirichlet),
                vertex("b", VertexCondition::Dirichlet),
            ],
            edges: vec![edge("a", "b", (1, 1))],
        };
        let n = bipartite_normalize(&g).unwrap();
        assert_eq!(n.graph, g);
        let p = general_reduction(&n).unwrap();
        assert_eq!(p.boundary, BoundaryData::dirichlet(1));
    }

    #[test]
    fn triangle_is_halved() {
        let n = bipartite_normalize(&triangle()).unwrap();
        assert_eq!(n.graph.edges.len(), 6);
        assert_eq!(n.length, (1, 2));
        assert_eq!(n.scale, 2.0);
        let mut c = n.class1.clone();
        c.sort();
        let mut orig = vec!["a".to_string(), "b".into(), "c".into()];
        orig.sort();
        // Tie between old and new vertices goes to the class of "a".
        assert_eq!(c, orig);
        let p = general_reduction(&n).unwrap();
        assert_eq!(p.m(), 6);
        // Each Kirchhoff vertex contributes rank one.
        assert_eq!(numerical_rank(&p.boundary.t1, 1e-10, 1e-300), 3);
        assert_eq!(numerical_rank(&p.boundary.t2, 1e-10, 1e-300), 3);
        assert!((trace(&p.boundary.t1).re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn path_of_two_edges() {
        let g = GraphSpec {
            vertices: vec![
                vertex("a", VertexCondition::Dirichlet),
                vertex("m", VertexCondition::Kirchhoff(0.0)),
                vertex("b", VertexCondition::Dirichlet),
            ],
            edges: vec![edge("a", "m", (1, 1)), edge("b", "m", (1, 1))],
        };
        let n = bipartite_normalize(&g).unwrap();
        let p = general_reduction(&n).unwrap();
        assert_eq!(max_abs(&p.boundary.t1), 0.0);
        assert!(max_abs(&(&p.boundary.t2 - filled(2, 0.5))) < 1e-15);
        let ev = locate_eigenvalues(&p, 4.2).unwrap();
        let want: Vec<f64> = (1..=8).map(|n| (n as f64 / 2.0).powi(2)).collect();
        let got: Vec<f64> = ev.iter().map(|e| e.lambda).take(8).collect();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-8, "{got:?}");
        }
    }

    #[test]
    fn unequal_lengths_and_rescale() {
        // Path of lengths 3π/2 and π: pieces of π/2, five reduced edges.
        let path = |sigma: Vec<f64>| GraphSpec {
            vertices: vec![
                vertex("a", VertexCondition::Dirichlet),
                vertex("b", VertexCondition::Kirchhoff(0.0)),
                vertex("c", VertexCondition::Dirichlet),
            ],
            edges: vec![
                GraphEdge {
                    v0: "a".into(),
                    v1: "b".into(),
                    length: (3, 2),
                    sigma,
                },
                edge("b", "c", (1, 1)),
            ],
        };
        let n = bipartite_normalize(&path(vec![0.1, 0.2])).unwrap();
        assert_eq!(n.graph.edges.len(), 5);
        assert_eq!(n.length, (1, 2));
        assert_eq!(n.scale, 2.0);
        assert_eq!(n.graph.edges[0].sigma, vec![0.1, 0.1]);
        let p = general_reduction(&n).unwrap();
        assert_eq!(p.sigma.cells()[0][(0, 0)].re, 0.05);
        let nz = bipartite_normalize(&path(vec![0.0])).unwrap();
        let pz = general_reduction(&nz).unwrap();
        let ez = locate_eigenvalues(&pz, 2.1).unwrap();
        // Interval of length 5π/2 with Dirichlet ends: λ = (2n/5)².
        for (i, e) in ez.iter().take(10).enumerate() {
            let want = (2.0 * (i + 1) as f64 / 5.0).powi(2);
            assert!((e.lambda * nz.scale * nz.scale - want).abs() < 1e-8);
        }
    }

    #[test]
    fn reversed_edge_negates_and_flips_sigma() {
        let g = GraphSpec {
            vertices: vec![
                vertex("c", VertexCondition::Kirchhoff(0.0)),
                vertex("x", VertexCondition::Dirichlet),
                vertex("y", VertexCondition::Dirichlet),
            ],
            edges: vec![
                GraphEdge {
                    v0: "c".into(),
                    v1: "x".into(),
                    length: (1, 1),
                    sigma: vec![0.1, 0.3],
                },
                edge("y", "c", (1, 1)),
            ],
        };
        let n = bipartite_normalize(&g).unwrap();
        assert_eq!(n.graph.edges[0].v0, "x");
        assert_eq!(n.graph.edges[0].sigma, vec![-0.3, -0.1]);
    }

    #[test]
    fn errors() {
        let mut g = star_graph(2, true);
        g.edges[0].length = (1, 65);
        assert!(matches!(
            bipartite_normalize(&g),
            Err(Error::IrrationalLengths(_))
        ));
        let mut g = star_graph(2, true);
        g.vertices
            .push(vertex("lonely", VertexCondition::Dirichlet));
        assert!(matches!(
            bipartite_normalize(&g),
            Err(Error::Disconnected(_))
        ));
        let v = json!({"vertices": [{"id": 1}, {"id": 2}], "edges": [{"v0": 1, "v1": 2, "length": std::f64::consts::FRAC_1_SQRT_2}]});
        assert!(matches!(
            graph_from_json(&v),
            Err(Error::IrrationalLengths(_))
        ));
        let bad = NormalizedGraph {
            graph: star_graph(2, false),
            class1: vec!["l0".into(), "l1".into()],
            length: (1, 1),
            scale: 1.0,
        };
        assert!(matches!(
            general_reduction(&bad),
            Err(Error::OrientationConflict(_))
        ));
    }

    #[test]
    fn json_parsing() {
        let v = json!({
            "vertices": [
                {"id": "a", "condition": "dirichlet"},
                {"id": 7, "condition": {"kirchhoff": 1.5}}
            ],
            "edges": [{"v0": "a", "v1": 7, "length": [1, 2], "sigma": [0.1, -0.2]},
                      {"v0": 7, "v1": "a", "length": 0.25}]
        });
        let g = graph_from_json(&v).unwrap();
        assert_eq!(g.vertices[1].id, "7");
        assert_eq!(g.vertices[1].condition, VertexCondition::Kirchhoff(1.5));
        assert_eq!(g.edges[0].length, (1, 2));
        assert_eq!(g.edges[1].length, (1, 4));
        assert_eq!(g.edges[1].sigma, vec![0.0]);
    }
}
