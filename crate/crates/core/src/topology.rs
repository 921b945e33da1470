//! Market networks as simplicial complexes of dimension at most two.
//!
//! Vertices are markets, edges are links between markets and filled
//! triangles are faces. Betti numbers come from exact ranks of the integer
//! boundary matrices, so the alternating-sum identity between simplex
//! counts and Betti numbers can be checked with integer equality.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polynomial::Polynomial;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("simplex refers to unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("simplex {0:?} repeats a vertex")]
    DegenerateSimplex(Vec<String>),
    #[error("duplicate simplex {0:?}")]
    DuplicateSimplex(Vec<String>),
    #[error("face {face:?} is missing edge {edge:?}")]
    MissingFaceEdge { face: Vec<String>, edge: Vec<String> },
    #[error("genus {genus} is infeasible with {edges} edges (would leave {vertices} markets)")]
    InfeasibleGenus { genus: u64, edges: u64, vertices: i128 },
    #[error("per-market profit must be finite and non-negative, got {0}")]
    InvalidMarketProfit(f64),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
}

/// Simplicial complex with vertices, edges and triangular faces.
///
/// Simplices are stored as vertex indices sorted by label, which fixes the
/// orientation used for boundary signs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Complex {
    vertices: Vec<String>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
}

/// Plain-label form used in scenario files.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComplexSpec {
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<[String; 2]>,
    #[serde(default)]
    pub faces: Vec<[String; 3]>,
}

impl Complex {
    pub fn new<V, S>(vertices: V, edges: &[[&str; 2]], faces: &[[&str; 3]]) -> Result<Self, TopologyError>
    where
        V: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vertices: Vec<String> = vertices.into_iter().map(Into::into).collect();
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(TopologyError::DuplicateVertex(v.clone()));
            }
        }
        let lookup =
            |label: &str| index.get(label).copied().ok_or_else(|| TopologyError::UnknownVertex(label.to_string()));
        let sorted = |mut idx: Vec<usize>| {
            idx.sort_by(|&a, &b| vertices[a].cmp(&vertices[b]));
            idx
        };
        let names = |idx: &[usize]| idx.iter().map(|&i| vertices[i].clone()).collect::<Vec<_>>();

        let mut edge_set = BTreeSet::new();
        let mut sorted_edges = Vec::with_capacity(edges.len());
        for e in edges {
            let idx = sorted(vec![lookup(e[0])?, lookup(e[1])?]);
            if idx[0] == idx[1] {
                return Err(TopologyError::DegenerateSimplex(names(&idx)));
            }
            let edge = [idx[0], idx[1]];
            if !edge_set.insert(edge) {
                return Err(TopologyError::DuplicateSimplex(names(&idx)));
            }
            sorted_edges.push(edge);
        }

        let mut face_set = BTreeSet::new();
        let mut sorted_faces = Vec::with_capacity(faces.len());
        for f in faces {
            let idx = sorted(vec![lookup(f[0])?, lookup(f[1])?, lookup(f[2])?]);
            if idx[0] == idx[1] || idx[1] == idx[2] {
                return Err(TopologyError::DegenerateSimplex(names(&idx)));
            }
            let face = [idx[0], idx[1], idx[2]];
            for edge in face_boundary(face) {
                if !edge_set.contains(&edge) {
                    return Err(TopologyError::MissingFaceEdge { face: names(&face), edge: names(&edge) });
                }
            }
            if !face_set.insert(face) {
                return Err(TopologyError::DuplicateSimplex(names(&idx)));
            }
            sorted_faces.push(face);
        }

        Ok(Self { vertices, edges: sorted_edges, faces: sorted_faces })
    }

    pub fn from_spec(spec: &ComplexSpec) -> Result<Self, TopologyError> {
        let edges: Vec<[&str; 2]> = spec.edges.iter().map(|[a, b]| [a.as_str(), b.as_str()]).collect();
        let faces: Vec<[&str; 3]> = spec.faces.iter().map(|[a, b, c]| [a.as_str(), b.as_str(), c.as_str()]).collect();
        Self::new(spec.vertices.iter().cloned(), &edges, &faces)
    }

    pub fn to_spec(&self) -> ComplexSpec {
        let v = |i: usize| self.vertices[i].clone();
        ComplexSpec {
            vertices: self.vertices.clone(),
            edges: self.edges.iter().map(|&[a, b]| [v(a), v(b)]).collect(),
            faces: self.faces.iter().map(|&[a, b, c]| [v(a), v(b), v(c)]).collect(),
        }
    }

    /// The full 2-skeleton of a vertex set: every pair is an edge and every
    /// triple a face.
    pub fn clique<S: AsRef<str>>(labels: &[S]) -> Result<Self, TopologyError> {
        let n = labels.len();
        let l = |i: usize| labels[i].as_ref();
        let mut edges = Vec::new();
        let mut faces = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push([l(i), l(j)]);
                for k in j + 1..n {
                    faces.push([l(i), l(j), l(k)]);
                }
            }
        }
        Self::new(labels.iter().map(|s| s.as_ref().to_string()), &edges, &faces)
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Simplex counts `(a0, a1, a2)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.vertices.len(), self.edges.len(), self.faces.len())
    }
}

fn face_boundary([a, b, c]: [usize; 3]) -> [[usize; 2]; 3] {
    [[b, c], [a, c], [a, b]]
}

/// Named fixtures: `tetrahedron`, `c3`, `torus7`, `two_c3`.
pub fn fixture(name: &str) -> Result<Complex, TopologyError> {
    match name {
        // The 2-skeleton of four vertices is the hollow tetrahedron.
        "tetrahedron" => Complex::clique(&["a", "b", "c", "d"]),
        "c3" => Complex::new(["a", "b", "c"], &[["a", "b"], ["b", "c"], ["a", "c"]], &[]),
        "two_c3" => Complex::new(
            ["a", "b", "c", "x", "y", "z"],
            &[["a", "b"], ["b", "c"], ["a", "c"], ["x", "y"], ["y", "z"], ["x", "z"]],
            &[],
        ),
        "torus7" => torus7(),
        other => Err(TopologyError::UnknownFixture(other.to_string())),
    }
}

/// Seven-vertex triangulation of the torus: faces `{i, i+1, i+3}` and
/// `{i, i+2, i+3}` modulo 7.
fn torus7() -> Result<Complex, TopologyError> {
    let labels: Vec<String> = (0..7).map(|i| format!("v{i}")).collect();
    let mut faces = Vec::new();
    let mut edges = BTreeSet::new();
    for i in 0..7 {
        for tri in [[i, (i + 1) % 7, (i + 3) % 7], [i, (i + 2) % 7, (i + 3) % 7]] {
            let mut t = tri;
            t.sort_unstable();
            edges.insert([t[0], t[1]]);
            edges.insert([t[0], t[2]]);
            edges.insert([t[1], t[2]]);
            faces.push(t);
        }
    }
    let l = |i: usize| labels[i].as_str();
    let edges: Vec<[&str; 2]> = edges.iter().map(|&[a, b]| [l(a), l(b)]).collect();
    let faces: Vec<[&str; 3]> = faces.iter().map(|&[a, b, c]| [l(a), l(b), l(c)]).collect();
    Complex::new(labels.iter().cloned(), &edges, &faces)
}

/// `a0 - a1 + a2`.
pub fn euler_characteristic(cx: &Complex) -> i64 {
    let (a0, a1, a2) = cx.counts();
    a0 as i64 - a1 as i64 + a2 as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiVector {
    pub p0: u64,
    pub p1: u64,
    pub p2: u64,
}

impl BettiVector {
    pub fn alternating_sum(&self) -> i64 {
        self.p0 as i64 - self.p1 as i64 + self.p2 as i64
    }
}

/// Boundary matrix of edges: column per edge, row per vertex.
fn boundary_1(cx: &Complex) -> Vec<Vec<i64>> {
    let mut m = vec![vec![0i64; cx.edges.len()]; cx.vertices.len()];
    for (col, &[a, b]) in cx.edges.iter().enumerate() {
        m[a][col] -= 1;
        m[b][col] += 1;
    }
    m
}

/// Boundary matrix of faces: column per face, row per edge.
fn boundary_2(cx: &Complex) -> Vec<Vec<i64>> {
    let edge_row: HashMap<[usize; 2], usize> = cx.edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut m = vec![vec![0i64; cx.faces.len()]; cx.edges.len()];
    for (col, &face) in cx.faces.iter().enumerate() {
        for (k, edge) in face_boundary(face).iter().enumerate() {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            m[edge_row[edge]][col] += sign;
        }
    }
    m
}

/// Rank over the rationals by fraction-free (Bareiss) elimination.
#[allow(clippy::needless_range_loop)]
pub fn exact_rank(matrix: &[Vec<i64>]) -> usize {
    let rows = matrix.len();
    if rows == 0 {
        return 0;
    }
    let cols = matrix[0].len();
    let mut m: Vec<Vec<BigInt>> = matrix.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
    let mut rank = 0;
    let mut prev_pivot = BigInt::from(1);
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot_row) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot_row);
        let pivot = m[rank][col].clone();
        for r in rank + 1..rows {
            let factor = m[r][col].clone();
            for c in col..cols {
                let v = (&pivot * &m[r][c] - &factor * &m[rank][c]) / &prev_pivot;
                m[r][c] = v;
            }
        }
        prev_pivot = pivot;
        rank += 1;
    }
    rank
}

/// Betti numbers `p_m = dim ker ∂_m - rank ∂_{m+1}` over the rationals.
pub fn betti_numbers(cx: &Complex) -> BettiVector {
    let (a0, a1, a2) = cx.counts();
    let r1 = exact_rank(&boundary_1(cx));
    let r2 = exact_rank(&boundary_2(cx));
    BettiVector { p0: (a0 - r1) as u64, p1: (a1 - r1 - r2) as u64, p2: (a2 - r2) as u64 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerPoincareCheck {
    pub lhs: i64,
    pub rhs: i64,
    pub holds: bool,
}

pub fn check_euler_poincare(cx: &Complex) -> EulerPoincareCheck {
    let lhs = euler_characteristic(cx);
    let rhs = betti_numbers(cx).alternating_sum();
    EulerPoincareCheck { lhs, rhs, holds: lhs == rhs }
}

/// Markets left on a closed surface of genus `genus` with `edges` links:
/// `a1 + 1 - 2p`.
pub fn surface_vertex_count(genus: u64, edges: u64) -> Result<u64, TopologyError> {
    let vertices = edges as i128 + 1 - 2 * genus as i128;
    if vertices < 1 {
        return Err(TopologyError::InfeasibleGenus { genus, edges, vertices });
    }
    Ok(vertices as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceModel {
    genus: u64,
    market_profit: f64,
}

impl SurfaceModel {
    pub fn new(genus: u64, market_profit: f64) -> Result<Self, TopologyError> {
        if !(market_profit.is_finite() && market_profit >= 0.0) {
            return Err(TopologyError::InvalidMarketProfit(market_profit));
        }
        Ok(Self { genus, market_profit })
    }

    pub fn genus(&self) -> u64 {
        self.genus
    }

    pub fn market_profit(&self) -> f64 {
        self.market_profit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeficientProfit {
    pub markets: u64,
    pub profit: f64,
    pub loss_vs_simply_connected: f64,
}

/// Each unit of genus removes two markets, each worth `k`.
pub fn deficient_profit(s: &SurfaceModel, edges: u64) -> Result<DeficientProfit, TopologyError> {
    let markets = surface_vertex_count(s.genus, edges)?;
    Ok(DeficientProfit {
        markets,
        profit: s.market_profit * markets as f64,
        loss_vs_simply_connected: 2.0 * s.market_profit * s.genus as f64,
    })
}

/// Genus contributed by a family of influence curves: the number of
/// distinct nonzero polynomials. Duplicates and zero curves add no holes.
pub fn genus_from_influence_levels(level_curves: &[Polynomial]) -> u64 {
    level_curves.iter().filter(|p| !p.is_zero()).map(Polynomial::key).collect::<BTreeSet<_>>().len() as u64
}
