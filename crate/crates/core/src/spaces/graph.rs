//! Metric graphs: straight-line embedded simple graphs where every edge has
//! length `1 / |E|` and distance is shortest path along edges.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GraphGeometry {
    vertices: Vec<[f64; 2]>,
    edges: Vec<(usize, usize)>,
    edge_len: f64,
    /// Row-major `|V| x |V|` shortest-path distances between vertices.
    vdist: Vec<f64>,
}

impl GraphGeometry {
    pub fn new(vertices: Vec<[f64; 2]>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let nv = vertices.len();
        if edges.is_empty() {
            return invalid("graph needs at least one edge");
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &edges {
            if u >= nv || v >= nv {
                return invalid(format!("edge ({u}, {v}) references a missing vertex"));
            }
            if u == v {
                return invalid(format!("self-loop at vertex {u}"));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return invalid(format!("duplicate edge ({u}, {v})"));
            }
        }
        let edge_len = 1.0 / edges.len() as f64;
        let vdist = floyd_warshall(nv, &edges, edge_len);
        if vdist.iter().any(|d| !d.is_finite()) {
            return invalid("graph must be connected");
        }
        Ok(GraphGeometry {
            vertices,
            edges,
            edge_len,
            vdist,
        })
    }

    /// Triangle with unit-third sides.
    pub fn triangle() -> Self {
        let h = (1.0f64 / 12.0).sqrt();
        GraphGeometry::new(
            vec![[0.0, 0.0], [1.0 / 3.0, 0.0], [1.0 / 6.0, h]],
            vec![(0, 1), (0, 2), (1, 2)],
        )
        .expect("triangle is a valid graph")
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_len(&self) -> f64 {
        self.edge_len
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_distance(&self, a: usize, b: usize) -> f64 {
        self.vdist[a * self.vertices.len() + b]
    }

    /// Distance from the point at parameter `t` on `edge` to vertex `w`.
    pub fn point_to_vertex(&self, edge: usize, t: f64, w: usize) -> f64 {
        let (u, v) = self.edges[edge];
        let l = self.edge_len;
        (t * l + self.vertex_distance(u, w)).min((1.0 - t) * l + self.vertex_distance(v, w))
    }

    pub fn distance(&self, e1: usize, t1: f64, e2: usize, t2: f64) -> f64 {
        let (u2, v2) = self.edges[e2];
        let l = self.edge_len;
        let via_u = self.point_to_vertex(e1, t1, u2) + t2 * l;
        let via_v = self.point_to_vertex(e1, t1, v2) + (1.0 - t2) * l;
        let mut d = via_u.min(via_v);
        if e1 == e2 {
            d = d.min((t1 - t2).abs() * l);
        }
        d
    }

    /// Distance from the point `(e1, t1)` to points `(edge, t)` is the
    /// minimum of these affine functions of `t` (plus `|t - t1| * l` when
    /// `edge == e1`, returned as the last two lines).
    pub(crate) fn distance_lines(&self, e1: usize, t1: f64, edge: usize) -> Vec<(f64, f64)> {
        let (u, v) = self.edges[edge];
        let l = self.edge_len;
        let du = self.point_to_vertex(e1, t1, u);
        let dv = self.point_to_vertex(e1, t1, v);
        let mut lines = vec![(du, l), (dv + l, -l)];
        if edge == e1 {
            lines.push((-t1 * l, l));
            lines.push((t1 * l, -l));
        }
        lines
    }
}

fn floyd_warshall(nv: usize, edges: &[(usize, usize)], w: f64) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; nv * nv];
    for i in 0..nv {
        d[i * nv + i] = 0.0;
    }
    for &(u, v) in edges {
        d[u * nv + v] = w;
        d[v * nv + u] = w;
    }
    for k in 0..nv {
        for i in 0..nv {
            let dik = d[i * nv + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..nv {
                let cand = dik + d[k * nv + j];
                if cand < d[i * nv + j] {
                    d[i * nv + j] = cand;
                }
            }
        }
    }
    d
}
