//! Canonical forms of closed balls and exact measures of their unions.

use serde::Serialize;

use super::{box_max_distance, box_min_distance, CubeMetric, Geometry, Point, Space};
use crate::error::Result;

/// Coordinate compression for exact sup-norm unions is skipped above this
/// many (cell, ball) tests; grid bounds are returned instead.
const EXACT_BOX_WORK_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSegment {
    pub component: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTrace {
    /// Disjoint closed segments sorted by `(component, lo)`.
    Segments(Vec<TraceSegment>),
    /// Sup-norm ball clipped to the cube.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Euclidean ball (not clipped; the cube is implied).
    Ball { center: Vec<f64>, radius: f64 },
}

impl RegionTrace {
    pub fn segments(&self) -> &[TraceSegment] {
        match self {
            RegionTrace::Segments(s) => s,
            _ => &[],
        }
    }
}

/// `mu` of a union of balls: exact, or inner/outer grid bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnionMass {
    Exact(f64),
    Bounds { inner: f64, outer: f64 },
}

impl UnionMass {
    pub fn lower(&self) -> f64 {
        match *self {
            UnionMass::Exact(m) => m,
            UnionMass::Bounds { inner, .. } => inner,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            UnionMass::Exact(m) => m,
            UnionMass::Bounds { outer, .. } => outer,
        }
    }

    pub fn exact(&self) -> Option<f64> {
        match *self {
            UnionMass::Exact(m) => Some(m),
            UnionMass::Bounds { .. } => None,
        }
    }
}

pub(super) fn ball_trace(space: &Space, center: &Point, r: f64) -> RegionTrace {
    match (space.geometry(), center) {
        (Geometry::Cube { metric, .. }, Point::Cube(c)) => match metric {
            CubeMetric::Linf => RegionTrace::Box {
                lo: c.iter().map(|x| (x - r).max(0.0)).collect(),
                hi: c.iter().map(|x| (x + r).min(1.0)).collect(),
            },
            CubeMetric::L2 => RegionTrace::Ball {
                center: c.clone(),
                radius: r,
            },
        },
        _ => RegionTrace::Segments(segments_1d(space, center, r)),
    }
}

fn push_clipped(out: &mut Vec<TraceSegment>, component: usize, lo: f64, hi: f64, a: f64, b: f64) {
    let a = a.max(lo);
    let b = b.min(hi);
    if a <= b {
        out.push(TraceSegment { component, lo: a, hi: b });
    }
}

fn segments_1d(space: &Space, center: &Point, r: f64) -> Vec<TraceSegment> {
    let mut out = Vec::new();
    match (space.geometry(), center) {
        (Geometry::Interval, Point::Interval(x)) => push_clipped(&mut out, 0, 0.0, 1.0, x - r, x + r),
        (Geometry::TwoInterval { .. }, Point::TwoInterval(x)) => {
            for (k, c) in space.components().iter().enumerate() {
                push_clipped(&mut out, k, c.lo, c.hi, x - r, x + r);
            }
        }
        (Geometry::Circle, Point::Circle(s)) => {
            if r >= 1.0 {
                out.push(TraceSegment { component: 0, lo: 0.0, hi: 2.0 });
            } else {
                let (a, b) = (s - r, s + r);
                if a < 0.0 {
                    out.push(TraceSegment { component: 0, lo: 0.0, hi: b });
                    out.push(TraceSegment { component: 0, lo: a + 2.0, hi: 2.0 });
                } else if b > 2.0 {
                    out.push(TraceSegment { component: 0, lo: 0.0, hi: b - 2.0 });
                    out.push(TraceSegment { component: 0, lo: a, hi: 2.0 });
                } else {
                    out.push(TraceSegment { component: 0, lo: a, hi: b });
                }
            }
        }
        (Geometry::Graph(g), Point::Graph { edge: pe, t: pt }) => {
            let l = g.edge_len();
            for e in 0..g.edges().len() {
                let (u, v) = g.edges()[e];
                let du = g.point_to_vertex(*pe, *pt, u);
                let dv = g.point_to_vertex(*pe, *pt, v);
                let mut segs = Vec::with_capacity(3);
                if r >= du {
                    push_clipped(&mut segs, e, 0.0, 1.0, 0.0, (r - du) / l);
                }
                if r >= dv {
                    push_clipped(&mut segs, e, 0.0, 1.0, 1.0 - (r - dv) / l, 1.0);
                }
                if e == *pe {
                    push_clipped(&mut segs, e, 0.0, 1.0, pt - r / l, pt + r / l);
                }
                out.extend(merge_segments(segs));
            }
        }
        _ => panic!("ball trace for mismatched point kind"),
    }
    out.sort_by(|a, b| (a.component, a.lo).partial_cmp(&(b.component, b.lo)).unwrap());
    merge_segments(out)
}

/// Merge segments into a disjoint sorted union. Touching segments merge.
pub(crate) fn merge_segments(mut segs: Vec<TraceSegment>) -> Vec<TraceSegment> {
    segs.sort_by(|a, b| {
        a.component
            .cmp(&b.component)
            .then(a.lo.total_cmp(&b.lo))
    });
    let mut out: Vec<TraceSegment> = Vec::with_capacity(segs.len());
    for s in segs {
        match out.last_mut() {
            Some(last) if last.component == s.component && s.lo <= last.hi => {
                last.hi = last.hi.max(s.hi);
            }
            _ => out.push(s),
        }
    }
    out
}

/// Precomputed ball traces for repeated union-mass queries over subsets.
pub struct UnionOracle<'a> {
    space: &'a Space,
    centers: Vec<Point>,
    radius: f64,
    traces: Vec<RegionTrace>,
}

impl<'a> UnionOracle<'a> {
    pub fn new(space: &'a Space, centers: &[Point], radius: f64) -> Result<Self> {
        let traces = centers
            .iter()
            .map(|c| space.ball_trace(c, radius))
            .collect::<Result<Vec<_>>>()?;
        Ok(UnionOracle {
            space,
            centers: centers.to_vec(),
            radius,
            traces,
        })
    }

    pub fn traces(&self) -> &[RegionTrace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// `mu` of the union of the balls indexed by `subset`.
    pub fn mass(&self, subset: &[usize]) -> UnionMass {
        match self.space.geometry() {
            Geometry::Cube { metric, dim } => {
                if *metric == CubeMetric::Linf {
                    if let Some(m) = self.exact_box_union(subset, *dim) {
                        return UnionMass::Exact(m);
                    }
                }
                self.grid_bounds(subset, *dim, *metric)
            }
            _ => {
                let segs: Vec<TraceSegment> = subset
                    .iter()
                    .flat_map(|i| self.traces[*i].segments().iter().copied())
                    .collect();
                let total: f64 = merge_segments(segs)
                    .iter()
                    .map(|s| self.space.segment_mass(s.component, s.lo, s.hi))
                    .sum();
                UnionMass::Exact(total.min(1.0))
            }
        }
    }

    fn boxes(&self, subset: &[usize]) -> Vec<(&[f64], &[f64])> {
        subset
            .iter()
            .filter_map(|i| match &self.traces[*i] {
                RegionTrace::Box { lo, hi } => Some((lo.as_slice(), hi.as_slice())),
                _ => None,
            })
            .collect()
    }

    fn exact_box_union(&self, subset: &[usize], dim: usize) -> Option<f64> {
        let boxes = self.boxes(subset);
        let grid = self.space.density().grid()?;
        let mut axes: Vec<Vec<f64>> = Vec::with_capacity(dim);
        let mut cells: usize = 1;
        for d in 0..dim {
            let mut a: Vec<f64> = vec![0.0, 1.0];
            a.extend(grid.interior_lines());
            for (lo, hi) in &boxes {
                a.push(lo[d]);
                a.push(hi[d]);
            }
            a.sort_by(f64::total_cmp);
            a.dedup();
            cells = cells.checked_mul(a.len() - 1)?;
            axes.push(a);
        }
        if cells.saturating_mul(boxes.len().max(1)) > EXACT_BOX_WORK_LIMIT {
            return None;
        }
        let mut total = 0.0;
        let mut pos = vec![0usize; dim];
        let mut mid = vec![0.0; dim];
        let mut lo = vec![0.0; dim];
        let mut hi = vec![0.0; dim];
        loop {
            for d in 0..dim {
                lo[d] = axes[d][pos[d]];
                hi[d] = axes[d][pos[d] + 1];
                mid[d] = 0.5 * (lo[d] + hi[d]);
            }
            let covered = boxes.iter().any(|(bl, bh)| {
                (0..dim).all(|d| bl[d] <= mid[d] && mid[d] <= bh[d])
            });
            if covered {
                let vol: f64 = (0..dim).map(|d| hi[d] - lo[d]).product();
                total += grid.value_at(&mid) * vol;
            }
            let mut d = 0;
            loop {
                if d == dim {
                    return Some(total.min(1.0));
                }
                pos[d] += 1;
                if pos[d] + 1 < axes[d].len() {
                    break;
                }
                pos[d] = 0;
                d += 1;
            }
        }
    }

    fn grid_bounds(&self, subset: &[usize], dim: usize, metric: CubeMetric) -> UnionMass {
        let m = self.space.grid_resolution();
        let h = 1.0 / m as f64;
        let mut inner = 0.0;
        let mut outer = 0.0;
        let mut pos = vec![0usize; dim];
        let mut lo = vec![0.0; dim];
        let mut hi = vec![0.0; dim];
        loop {
            for d in 0..dim {
                lo[d] = pos[d] as f64 * h;
                hi[d] = (pos[d] + 1) as f64 * h;
            }
            let mut meets = false;
            let mut inside = false;
            for i in subset {
                let c = match &self.centers[*i] {
                    Point::Cube(c) => c,
                    _ => unreachable!(),
                };
                if box_min_distance(metric, c, &lo, &hi) <= self.radius {
                    meets = true;
                    if box_max_distance(metric, c, &lo, &hi) <= self.radius {
                        inside = true;
                        break;
                    }
                }
            }
            if meets {
                let mass = self.space.box_mass(&lo, &hi);
                outer += mass;
                if inside {
                    inner += mass;
                }
            }
            let mut d = 0;
            loop {
                if d == dim {
                    return UnionMass::Bounds {
                        inner: inner.min(1.0),
                        outer: outer.min(1.0),
                    };
                }
                pos[d] += 1;
                if pos[d] < m {
                    break;
                }
                pos[d] = 0;
                d += 1;
            }
        }
    }
}
