//! Undirected labeled graphs on `p` vertices.
//!
//! The representation is a dense symmetric boolean matrix: the chain touches
//! every vertex pair on every step, so the dense layout is the cheap one.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// An unordered vertex pair stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    i: usize,
    j: usize,
}

impl Edge {
    /// Builds the canonical edge `(min, max)`. Self-loops are rejected.
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidArgument(format!("self-loop ({a}, {a})")));
        }
        Ok(Edge {
            i: a.min(b),
            j: a.max(b),
        })
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    p: usize,
    adj: Vec<bool>,
    edge_count: usize,
}

impl Graph {
    /// Graph with `p` vertices and no edges.
    pub fn empty(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("graph needs at least one vertex".into()));
        }
        Ok(Graph {
            p,
            adj: vec![false; p * p],
            edge_count: 0,
        })
    }

    pub fn complete(p: usize) -> Result<Self> {
        let mut g = Self::empty(p)?;
        for i in 0..p {
            for j in (i + 1)..p {
                g.set(i, j, true);
            }
        }
        Ok(g)
    }

    /// Builds a graph from `(i, j)` pairs; duplicates are ignored.
    pub fn from_edges<I>(p: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(p)?;
        for (a, b) in edges {
            let e = Edge::new(a, b)?;
            g.check(e)?;
            g.set(e.i, e.j, true);
        }
        Ok(g)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Number of vertex pairs, `p(p-1)/2`.
    pub fn max_edges(&self) -> usize {
        self.p * (self.p - 1) / 2
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.p + j]
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.has_edge(e.i, e.j)
    }

    fn check(&self, e: Edge) -> Result<()> {
        if e.j >= self.p {
            return Err(Error::InvalidArgument(format!(
                "edge ({}, {}) out of range for p = {}",
                e.i, e.j, self.p
            )));
        }
        Ok(())
    }

    fn set(&mut self, i: usize, j: usize, on: bool) {
        let was = self.adj[i * self.p + j];
        if was == on {
            return;
        }
        self.adj[i * self.p + j] = on;
        self.adj[j * self.p + i] = on;
        if on {
            self.edge_count += 1;
        } else {
            self.edge_count -= 1;
        }
    }

    /// Flips the presence of `e` in place.
    pub fn toggle(&mut self, e: Edge) -> Result<()> {
        self.check(e)?;
        let on = !self.contains(e);
        self.set(e.i, e.j, on);
        Ok(())
    }

    /// Copy of the graph with `e` flipped.
    pub fn toggled(&self, e: Edge) -> Result<Graph> {
        let mut g = self.clone();
        g.toggle(e)?;
        Ok(g)
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.p).filter(|&k| self.has_edge(v, k)).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.p).filter(|&k| self.has_edge(v, k)).count()
    }

    /// Number of common neighbours of the endpoints of `e`, i.e. the number
    /// of triangles `e` closes. Does not depend on whether `e` is present.
    pub fn triangle_count(&self, e: Edge) -> usize {
        let (ri, rj) = (e.i * self.p, e.j * self.p);
        (0..self.p)
            .filter(|&k| self.adj[ri + k] && self.adj[rj + k])
            .count()
    }

    /// Present edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.pairs().filter(move |e| self.contains(*e))
    }

    /// Absent vertex pairs in lexicographic order.
    pub fn non_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.pairs().filter(move |e| !self.contains(*e))
    }

    /// All vertex pairs `i < j` in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = Edge> + '_ {
        let p = self.p;
        (0..p).flat_map(move |i| ((i + 1)..p).map(move |j| Edge { i, j }))
    }

    /// Compact identifier: upper-triangle bits, lexicographic, packed as hex.
    pub fn fingerprint(&self) -> String {
        let mut out = String::new();
        let mut nibble = 0u8;
        let mut used = 0;
        for e in self.pairs() {
            nibble = (nibble << 1) | self.contains(e) as u8;
            used += 1;
            if used == 4 {
                let _ = write!(out, "{nibble:x}");
                nibble = 0;
                used = 0;
            }
        }
        if used > 0 {
            let _ = write!(out, "{:x}", nibble << (4 - used));
        }
        out
    }

    /// One `i j` line per edge, zero-based, `i < j`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in self.edges() {
            let _ = writeln!(out, "{} {}", e.i, e.j);
        }
        out
    }

    /// Parses the edge-list format. Extra columns after `i j` are ignored,
    /// blank lines and `#` comments are skipped.
    pub fn parse_edge_list(p: usize, text: &str) -> Result<Graph> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
                    path: "edge list".into(),
                    message: format!("line {}: expected `i j`", lineno + 1),
                })
            };
            pairs.push((parse(it.next())?, parse(it.next())?));
        }
        Graph::from_edges(p, pairs)
    }

    /// Graphviz rendering. `labels` names the vertices; `edge_label`
    /// supplies an optional per-edge label.
    pub fn to_dot<F>(&self, labels: Option<&[String]>, mut edge_label: F) -> String
    where
        F: FnMut(Edge) -> Option<String>,
    {
        let name = |v: usize| match labels {
            Some(l) => format!("\"{}\"", l[v].replace('"', "\\\"")),
            None => v.to_string(),
        };
        let mut out = String::from("graph G {\n");
        for v in 0..self.p {
            let _ = writeln!(out, "  {};", name(v));
        }
        for e in self.edges() {
            match edge_label(e) {
                Some(l) => {
                    let _ = writeln!(out, "  {} -- {} [label=\"{}\"];", name(e.i), name(e.j), l);
                }
                None => {
                    let _ = writeln!(out, "  {} -- {};", name(e.i), name(e.j));
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// Number of triangles in the graph.
    pub fn triangles(&self) -> usize {
        let mut t = 0;
        for e in self.edges() {
            for k in (e.j + 1)..self.p {
                if self.has_edge(e.i, k) && self.has_edge(e.j, k) {
                    t += 1;
                }
            }
        }
        t
    }
}
