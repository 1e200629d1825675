//! Bipartite graphs, bicliques, and exhaustive maximum-edge biclique oracles.
//!
//! The oracles enumerate all subsets of the smaller vertex side, so they are
//! exact but capped at 2^25 subsets. Vertex indices are 0-based in the API;
//! the edge-list file format is 1-based.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Largest side the exhaustive enumeration will accept.
pub const ORACLE_SIDE_LIMIT: usize = 25;

/// Bipartite graph stored as a dense biadjacency bitmap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    s: usize,
    t: usize,
    adj: Vec<bool>,
}

impl BipartiteGraph {
    /// Graph on `s` row vertices and `t` column vertices with 0-based edges.
    pub fn new(s: usize, t: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if s == 0 || t == 0 {
            return Err(Error::Parameter("graph sides must be nonempty".into()));
        }
        let mut adj = vec![false; s * t];
        for &(i, j) in edges {
            if i >= s || j >= t {
                return Err(Error::Parameter(format!(
                    "edge ({i}, {j}) out of range for a {s}x{t} graph"
                )));
            }
            if adj[i * t + j] {
                return Err(Error::Parameter(format!("duplicate edge ({i}, {j})")));
            }
            adj[i * t + j] = true;
        }
        Ok(BipartiteGraph { s, t, adj })
    }

    /// Graph from a 0/1 matrix; any other entry is rejected.
    pub fn from_biadjacency<T: Scalar>(m: &Matrix<T>) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, j, v) in m.indexed() {
            if v == T::one() {
                edges.push((i, j));
            } else if v != T::zero() {
                return Err(Error::Parameter(format!(
                    "biadjacency entry at ({i}, {j}) is neither 0 nor 1"
                )));
            }
        }
        BipartiteGraph::new(m.rows(), m.cols(), &edges)
    }

    pub fn complete(s: usize, t: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..s).flat_map(|i| (0..t).map(move |j| (i, j))).collect();
        BipartiteGraph::new(s, t, &edges)
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.t + j]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    /// Zero entries of the biadjacency matrix in row-major order.
    pub fn zero_entries(&self) -> Vec<(usize, usize)> {
        let mut zeros = Vec::new();
        for i in 0..self.s {
            for j in 0..self.t {
                if !self.has_edge(i, j) {
                    zeros.push((i, j));
                }
            }
        }
        zeros
    }

    pub fn biadjacency<T: Scalar>(&self) -> Matrix<T> {
        Matrix::from_fn(self.s, self.t, |i, j| {
            if self.has_edge(i, j) {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Parses the edge-list format: first line `s t`, then one `i j` edge per
    /// line, 1-indexed; out-of-range and duplicate edges are rejected.
    pub fn parse_edge_list(text: &str, path: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::parse(path, hline + 1, "expected header `s t`"));
        }
        let s: usize = dims[0]
            .parse()
            .map_err(|_| Error::parse(path, hline + 1, "invalid row-vertex count"))?;
        let t: usize = dims[1]
            .parse()
            .map_err(|_| Error::parse(path, hline + 1, "invalid column-vertex count"))?;
        let mut edges = Vec::new();
        for (lno, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::parse(path, lno + 1, "expected `i j`"));
            }
            let i: usize = toks[0]
                .parse()
                .map_err(|_| Error::parse(path, lno + 1, "invalid row vertex"))?;
            let j: usize = toks[1]
                .parse()
                .map_err(|_| Error::parse(path, lno + 1, "invalid column vertex"))?;
            if i == 0 || i > s || j == 0 || j > t {
                return Err(Error::parse(
                    path,
                    lno + 1,
                    format!("edge ({i}, {j}) out of range, vertices are 1-indexed"),
                ));
            }
            edges.push((i - 1, j - 1));
        }
        // duplicate detection happens in the constructor, but without line info
        let mut seen = vec![false; s * t];
        for &(i, j) in &edges {
            if seen[i * t + j] {
                return Err(Error::parse(
                    path,
                    0,
                    format!("duplicate edge ({}, {})", i + 1, j + 1),
                ));
            }
            seen[i * t + j] = true;
        }
        BipartiteGraph::new(s, t, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.s, self.t);
        for i in 0..self.s {
            for j in 0..self.t {
                if self.has_edge(i, j) {
                    out.push_str(&format!("{} {}\n", i + 1, j + 1));
                }
            }
        }
        out
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        BipartiteGraph::parse_edge_list(&text, &path.display().to_string())
    }
}

/// Complete bipartite subgraph given by its row and column vertex sets
/// (0-based, sorted). Both sides may be empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Biclique {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl Biclique {
    pub fn new(mut rows: Vec<usize>, mut cols: Vec<usize>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        Biclique { rows, cols }
    }

    pub fn empty() -> Self {
        Biclique {
            rows: Vec::new(),
            cols: Vec::new(),
        }
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn edge_count(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    /// Completeness: every row-column pair must be an edge of `g`.
    pub fn is_valid_in(&self, g: &BipartiteGraph) -> bool {
        self.rows.iter().all(|&i| i < g.s())
            && self.cols.iter().all(|&j| j < g.t())
            && self
                .rows
                .iter()
                .all(|&i| self.cols.iter().all(|&j| g.has_edge(i, j)))
    }

    /// 0/1 indicator vectors of length `s` and `t`.
    pub fn indicators<T: Scalar>(&self, s: usize, t: usize) -> (Vec<T>, Vec<T>) {
        let mut u = vec![T::zero(); s];
        let mut v = vec![T::zero(); t];
        for &i in &self.rows {
            u[i] = T::one();
        }
        for &j in &self.cols {
            v[j] = T::one();
        }
        (u, v)
    }
}

/// Number of edges outside the biclique: `|E| - |rows| * |cols|`.
pub fn mbp_objective(g: &BipartiteGraph, b: &Biclique) -> Result<usize> {
    if !b.is_valid_in(g) {
        return Err(Error::ConstraintViolation(
            "biclique covers a non-edge".into(),
        ));
    }
    Ok(g.edge_count() - b.edge_count())
}

/// Result of the exhaustive maximum-edge biclique search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxBiclique {
    pub best: Biclique,
    /// `|E| - |E*|`, the optimal number of uncovered edges.
    pub optimum: usize,
}

fn check_capacity(g: &BipartiteGraph) -> Result<()> {
    if g.s().min(g.t()) > ORACLE_SIDE_LIMIT {
        return Err(Error::Capacity(format!(
            "exhaustive biclique search needs min(s, t) <= {ORACLE_SIDE_LIMIT}, got {}",
            g.s().min(g.t())
        )));
    }
    Ok(())
}

/// Row-subset enumeration state: for a subset S of the smaller side, the
/// biclique (S, common neighborhood of S). When the smaller side is the
/// column side the roles are swapped internally.
fn enumerate_closed<F: FnMut(&Biclique)>(g: &BipartiteGraph, mut visit: F) {
    let rows_smaller = g.s() <= g.t();
    let small = if rows_smaller { g.s() } else { g.t() };
    let large = if rows_smaller { g.t() } else { g.s() };

    let neighbor_mask = |small_idx: usize| -> u64 {
        let mut mask = 0u64;
        for l in 0..large {
            let edge = if rows_smaller {
                g.has_edge(small_idx, l)
            } else {
                g.has_edge(l, small_idx)
            };
            if edge {
                mask |= 1 << l;
            }
        }
        mask
    };
    let masks: Vec<u64> = (0..small).map(neighbor_mask).collect();
    let full: u64 = if large == 64 { !0 } else { (1u64 << large) - 1 };

    for subset in 0..(1u64 << small) {
        let mut common = full;
        let mut side = Vec::new();
        for (k, &mask) in masks.iter().enumerate() {
            if subset & (1 << k) != 0 {
                common &= mask;
                side.push(k);
            }
        }
        let other: Vec<usize> = (0..large).filter(|&l| common & (1 << l) != 0).collect();
        let b = if rows_smaller {
            Biclique::new(side, other)
        } else {
            Biclique::new(other, side)
        };
        visit(&b);
    }
}

/// Exhaustive maximum-edge biclique; deterministic tie-break by
/// lexicographically smallest row set, then column set.
pub fn max_edge_biclique(g: &BipartiteGraph) -> Result<MaxBiclique> {
    check_capacity(g)?;
    let mut best: Option<Biclique> = None;
    enumerate_closed(g, |b| {
        let better = match &best {
            None => true,
            Some(cur) => {
                let key_new = (
                    std::cmp::Reverse(b.edge_count()),
                    b.rows().to_vec(),
                    b.cols().to_vec(),
                );
                let key_cur = (
                    std::cmp::Reverse(cur.edge_count()),
                    cur.rows().to_vec(),
                    cur.cols().to_vec(),
                );
                key_new < key_cur
            }
        };
        if better {
            best = Some(b.clone());
        }
    });
    let mut best = best.expect("subset enumeration always visits the empty set");
    if best.edge_count() == 0 {
        best = Biclique::empty();
    }
    let optimum = g.edge_count() - best.edge_count();
    Ok(MaxBiclique { best, optimum })
}

/// All maximal bicliques with nonempty sides, sorted lexicographically.
pub fn maximal_bicliques(g: &BipartiteGraph) -> Result<Vec<Biclique>> {
    check_capacity(g)?;
    let mut out = std::collections::BTreeSet::new();
    enumerate_closed(g, |b| {
        if b.rows().is_empty() || b.cols().is_empty() {
            return;
        }
        // close the pair: rows must be the full common neighborhood of cols
        let closed_rows: Vec<usize> = (0..g.s())
            .filter(|&i| b.cols().iter().all(|&j| g.has_edge(i, j)))
            .collect();
        let closed = Biclique::new(closed_rows, b.cols().to_vec());
        // maximality also requires cols to be closed against the new rows
        let closed_cols: Vec<usize> = (0..g.t())
            .filter(|&j| closed.rows().iter().all(|&i| g.has_edge(i, j)))
            .collect();
        if closed_cols == closed.cols() {
            out.insert(closed);
        }
    });
    Ok(out.into_iter().collect())
}
