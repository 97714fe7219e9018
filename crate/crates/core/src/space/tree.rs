//! Weighted finite trees with the path metric.
//!
//! Points are `(edge, offset)` pairs measured from the edge's first endpoint.
//! Vertex points are canonicalized to the incident edge with the smallest id,
//! so two representations of the same vertex compare equal.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeCoord {
    pub edge: usize,
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct MetricTree {
    labels: Vec<String>,
    edges: Vec<TreeEdge>,
    /// Vertex-to-vertex path lengths.
    dist: Vec<Vec<f64>>,
    /// `next_edge[a][b]`: first edge on the path from `a` to `b` (`usize::MAX` on the diagonal).
    next_edge: Vec<Vec<usize>>,
    incident: Vec<Vec<usize>>,
    vertex_coord: Vec<TreeCoord>,
}

impl PartialEq for MetricTree {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.edges == other.edges
    }
}

#[derive(Deserialize)]
struct TreeDoc {
    vertices: Vec<Value>,
    edges: Vec<(Value, Value, f64)>,
}

fn label_of(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl MetricTree {
    /// Builds a tree on vertices `0..n_vertices`.
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let labels = (0..n_vertices).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges)
    }

    pub fn with_labels(labels: Vec<String>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = labels.len();
        if edges.is_empty() {
            return Err(LabError::domain("a metric tree needs at least one edge"));
        }
        if edges.len() + 1 != n {
            return Err(LabError::domain(format!(
                "a tree on {n} vertices has {} edges, found {}",
                n.saturating_sub(1),
                edges.len()
            )));
        }
        let mut incident = vec![Vec::new(); n];
        let mut tree_edges = Vec::with_capacity(edges.len());
        for (id, &(u, v, length)) in edges.iter().enumerate() {
            if u >= n || v >= n || u == v {
                return Err(LabError::domain(format!("edge {id} has invalid endpoints ({u}, {v})")));
            }
            if !(length > 0.0 && length.is_finite()) {
                return Err(LabError::domain(format!("edge {id} has non-positive length {length}")));
            }
            incident[u].push(id);
            incident[v].push(id);
            tree_edges.push(TreeEdge { u, v, length });
        }

        let mut dist = vec![vec![f64::INFINITY; n]; n];
        let mut next_edge = vec![vec![usize::MAX; n]; n];
        for src in 0..n {
            // BFS from src; record the first edge taken toward every vertex.
            dist[src][src] = 0.0;
            let mut queue = VecDeque::from([src]);
            while let Some(a) = queue.pop_front() {
                for &e in &incident[a] {
                    let edge = tree_edges[e];
                    let b = if edge.u == a { edge.v } else { edge.u };
                    if dist[src][b].is_infinite() {
                        dist[src][b] = dist[src][a] + edge.length;
                        next_edge[src][b] = if a == src { e } else { next_edge[src][a] };
                        queue.push_back(b);
                    }
                }
            }
            if dist[src].iter().any(|d| d.is_infinite()) {
                return Err(LabError::domain("tree is not connected"));
            }
        }

        let vertex_coord = (0..n)
            .map(|w| {
                let e = *incident[w].iter().min().expect("connected tree has no isolated vertex");
                let edge = tree_edges[e];
                TreeCoord { edge: e, offset: if edge.u == w { 0.0 } else { edge.length } }
            })
            .collect();

        Ok(MetricTree { labels, edges: tree_edges, dist, next_edge, incident, vertex_coord })
    }

    /// Parses `{"vertices": [...], "edges": [[u, v, length], ...]}` where
    /// edge endpoints name entries of `vertices`.
    pub fn from_json(doc: &Value) -> Result<Self> {
        let parsed: TreeDoc = serde_json::from_value(doc.clone())
            .map_err(|e| LabError::Parse(format!("tree definition: {e}")))?;
        let labels: Vec<String> = parsed.vertices.iter().map(label_of).collect();
        let index_of = |v: &Value| -> Result<usize> {
            let name = label_of(v);
            labels
                .iter()
                .position(|l| *l == name)
                .ok_or_else(|| LabError::Parse(format!("tree edge refers to unknown vertex {name}")))
        };
        let edges = parsed
            .edges
            .iter()
            .map(|(u, v, len)| Ok((index_of(u)?, index_of(v)?, *len)))
            .collect::<Result<Vec<_>>>()?;
        Self::with_labels(labels, edges)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "vertices": self.labels,
            "edges": self.edges.iter().map(|e| serde_json::json!([self.labels[e.u], self.labels[e.v], e.length])).collect::<Vec<_>>(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vertex_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn vertex_distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a][b]
    }

    pub fn incident_edges(&self, w: usize) -> &[usize] {
        &self.incident[w]
    }

    pub fn vertex_coord(&self, w: usize) -> TreeCoord {
        self.vertex_coord[w]
    }

    /// A 3-leg spider: hub vertex 0 joined to leaf vertices 1, 2, 3.
    pub fn spider(leg_lengths: &[f64]) -> Result<Self> {
        let edges = leg_lengths.iter().enumerate().map(|(i, &l)| (0, i + 1, l)).collect();
        Self::new(leg_lengths.len() + 1, edges)
    }

    /// Validates and canonicalizes a coordinate.
    pub fn coord(&self, edge: usize, offset: f64) -> Result<TreeCoord> {
        let e = self
            .edges
            .get(edge)
            .ok_or_else(|| LabError::domain(format!("tree has no edge {edge}")))?;
        let slack = tolerance::GEOM * e.length.max(1.0);
        if !(offset >= -slack && offset <= e.length + slack) {
            return Err(LabError::domain(format!(
                "offset {offset} outside edge {edge} of length {}",
                e.length
            )));
        }
        Ok(self.canonical(TreeCoord { edge, offset }))
    }

    pub(crate) fn canonical(&self, c: TreeCoord) -> TreeCoord {
        let e = self.edges[c.edge];
        let snap = tolerance::TREE_SNAP * e.length.max(1.0);
        if c.offset <= snap {
            self.vertex_coord[e.u]
        } else if c.offset >= e.length - snap {
            self.vertex_coord[e.v]
        } else {
            c
        }
    }

    /// The vertex this coordinate sits on, if any.
    pub fn as_vertex(&self, c: &TreeCoord) -> Option<usize> {
        let e = self.edges[c.edge];
        if c.offset == 0.0 {
            Some(e.u)
        } else if c.offset == e.length {
            Some(e.v)
        } else {
            None
        }
    }

    /// Endpoints of the coordinate's edge paired with the distance to each.
    fn ends(&self, c: &TreeCoord) -> [(usize, f64); 2] {
        let e = self.edges[c.edge];
        [(e.u, c.offset), (e.v, e.length - c.offset)]
    }

    /// Exit vertex of `p`'s edge and entry vertex of `q`'s edge on the p→q path.
    fn gates(&self, p: &TreeCoord, q: &TreeCoord) -> (usize, f64, usize, f64, f64) {
        let mut best = (0, 0.0, 0, 0.0, f64::INFINITY);
        for (a, da) in self.ends(p) {
            for (b, db) in self.ends(q) {
                let total = da + self.dist[a][b] + db;
                if total < best.4 {
                    best = (a, da, b, db, total);
                }
            }
        }
        best
    }

    pub fn distance(&self, p: &TreeCoord, q: &TreeCoord) -> f64 {
        if p.edge == q.edge {
            return (p.offset - q.offset).abs();
        }
        self.gates(p, q).4
    }

    /// Point on edge `e` at distance `s` from its endpoint `from`.
    fn along(&self, e: usize, from: usize, s: f64) -> TreeCoord {
        let edge = self.edges[e];
        let s = s.clamp(0.0, edge.length);
        let offset = if edge.u == from { s } else { edge.length - s };
        self.canonical(TreeCoord { edge: e, offset })
    }

    /// Point on the geodesic from `p` to `q` at parameter `t`.
    pub fn geodesic(&self, p: &TreeCoord, q: &TreeCoord, t: f64) -> TreeCoord {
        if p.edge == q.edge {
            return self.canonical(TreeCoord { edge: p.edge, offset: p.offset + t * (q.offset - p.offset) });
        }
        let (a, da, b, _db, total) = self.gates(p, q);
        let s = t * total;
        if s <= da {
            return self.along(p.edge, a, da - s);
        }
        let mut remaining = s - da;
        let mut cur = a;
        while cur != b {
            let e = self.next_edge[cur][b];
            let edge = self.edges[e];
            if remaining <= edge.length {
                return self.along(e, cur, remaining);
            }
            remaining -= edge.length;
            cur = if edge.u == cur { edge.v } else { edge.u };
        }
        self.along(q.edge, b, remaining)
    }

    /// Vertices on the path between two vertices, endpoints included.
    pub fn vertex_path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            let edge = self.edges[self.next_edge[cur][b]];
            cur = if edge.u == cur { edge.v } else { edge.u };
            path.push(cur);
        }
        path
    }

    /// True when the vertex set spans a connected subtree.
    pub fn is_connected_subset(&self, vertices: &[usize]) -> bool {
        let Some(&first) = vertices.first() else {
            return false;
        };
        vertices.iter().all(|&v| self.vertex_path(first, v).iter().all(|w| vertices.contains(w)))
    }
}
