//! Metric probability spaces with piecewise-constant densities: the unit
//! interval, the circle of diameter 1, metric graphs, unit cubes under the
//! sup and Euclidean norms, and the two-interval space.

mod density;
mod description;
mod graph;
mod trace;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use density::{Density, DensityLayout, GridDensity, Pieces, NORMALIZATION_TOL};
pub use description::SpaceDescription;
pub use graph::GraphGeometry;
pub use trace::{RegionTrace, TraceSegment, UnionMass, UnionOracle};

/// Default grid resolution (cells per axis) for cube union bounds.
pub const DEFAULT_GRID_RESOLUTION: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Interval,
    Circle,
    Graph,
    CubeLinf,
    CubeL2,
    TwoInterval,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Interval => "interval",
            SpaceKind::Circle => "circle",
            SpaceKind::Graph => "graph",
            SpaceKind::CubeLinf => "cube_linf",
            SpaceKind::CubeL2 => "cube_l2",
            SpaceKind::TwoInterval => "two_interval",
        }
    }

    pub fn is_one_dimensional(self) -> bool {
        !matches!(self, SpaceKind::CubeLinf | SpaceKind::CubeL2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Interval(f64),
    /// Arclength coordinate in `[0, 2)`.
    Circle(f64),
    Graph { edge: usize, t: f64 },
    Cube(Vec<f64>),
    TwoInterval(f64),
}

impl Point {
    pub fn kind(&self) -> &'static str {
        match self {
            Point::Interval(_) => "interval",
            Point::Circle(_) => "circle",
            Point::Graph { .. } => "graph",
            Point::Cube(_) => "cube",
            Point::TwoInterval(_) => "two_interval",
        }
    }

    /// The scalar coordinate of a point on the line or circle.
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Point::Interval(x) | Point::Circle(x) | Point::TwoInterval(x) => Some(*x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeMetric {
    Linf,
    L2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Interval,
    Circle,
    Graph(GraphGeometry),
    Cube { dim: usize, metric: CubeMetric },
    TwoInterval { q: f64 },
}

/// A 1-D piece of the space: coordinates in `[lo, hi]`, with `weight` the
/// uniform probability per unit of coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
struct PieceEntry {
    component: usize,
    lo: f64,
    hi: f64,
    cum_end: f64,
}

/// A metric probability space. Immutable once built.
#[derive(Debug, Clone)]
pub struct Space {
    geometry: Geometry,
    density: Density,
    components: Vec<Component>,
    grid_resolution: usize,
    pieces: Vec<PieceEntry>,
}

impl Space {
    fn build(geometry: Geometry, layout: DensityLayout) -> Result<Self> {
        let components = match &geometry {
            Geometry::Interval => vec![Component {
                lo: 0.0,
                hi: 1.0,
                weight: 1.0,
            }],
            Geometry::Circle => vec![Component {
                lo: 0.0,
                hi: 2.0,
                weight: 0.5,
            }],
            Geometry::Graph(g) => {
                let w = g.edge_len();
                vec![
                    Component {
                        lo: 0.0,
                        hi: 1.0,
                        weight: w,
                    };
                    g.edges().len()
                ]
            }
            Geometry::Cube { .. } => vec![],
            Geometry::TwoInterval { q } => vec![
                Component {
                    lo: -1.0,
                    hi: -(1.0 - q),
                    weight: 1.0,
                },
                Component {
                    lo: 0.0,
                    hi: 1.0 - q,
                    weight: 1.0,
                },
            ],
        };
        let total = match (&geometry, &layout) {
            (Geometry::Cube { dim, .. }, DensityLayout::Grid(g)) => {
                g.validate(*dim)?;
                g.total(*dim)
            }
            (Geometry::Cube { .. }, _) => return invalid("cube spaces need a grid density"),
            (_, DensityLayout::Components(pieces)) => {
                if pieces.len() != components.len() {
                    return invalid(format!(
                        "density has {} components, space has {}",
                        pieces.len(),
                        components.len()
                    ));
                }
                let mut total = 0.0;
                for (p, c) in pieces.iter().zip(&components) {
                    p.validate(c.lo, c.hi)?;
                    total += p.total() * c.weight;
                }
                total
            }
            (_, DensityLayout::Grid(_)) => return invalid("grid densities are for cubes only"),
        };
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return invalid(format!("density integrates to {total}, not 1"));
        }
        let density = Density::from_layout(layout);
        let mut pieces = Vec::new();
        if let DensityLayout::Components(ps) = &density.layout {
            let mut cum = 0.0;
            for (ci, (p, c)) in ps.iter().zip(&components).enumerate() {
                for (k, v) in p.values.iter().enumerate() {
                    let (lo, hi) = (p.breaks[k], p.breaks[k + 1]);
                    cum += v * c.weight * (hi - lo);
                    pieces.push(PieceEntry {
                        component: ci,
                        lo,
                        hi,
                        cum_end: cum,
                    });
                }
            }
        }
        Ok(Space {
            geometry,
            density,
            components,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            pieces,
        })
    }

    pub fn interval(density: Option<Pieces>) -> Result<Self> {
        let p = density.unwrap_or_else(|| Pieces::constant(0.0, 1.0, 1.0));
        Space::build(Geometry::Interval, DensityLayout::Components(vec![p]))
    }

    pub fn uniform_interval() -> Self {
        Space::interval(None).expect("uniform interval is valid")
    }

    pub fn circle(density: Option<Pieces>) -> Result<Self> {
        let p = density.unwrap_or_else(|| Pieces::constant(0.0, 2.0, 1.0));
        Space::build(Geometry::Circle, DensityLayout::Components(vec![p]))
    }

    pub fn uniform_circle() -> Self {
        Space::circle(None).expect("uniform circle is valid")
    }

    /// Graph space; `density` has one piecewise function per edge on `t in [0, 1]`.
    pub fn graph(geometry: GraphGeometry, density: Option<Vec<Pieces>>) -> Result<Self> {
        let ne = geometry.edges().len();
        let p = density.unwrap_or_else(|| vec![Pieces::constant(0.0, 1.0, 1.0); ne]);
        Space::build(Geometry::Graph(geometry), DensityLayout::Components(p))
    }

    pub fn cube(dim: usize, metric: CubeMetric, density: Option<GridDensity>) -> Result<Self> {
        if dim == 0 || dim > 8 {
            return invalid(format!("cube dimension must be in 1..=8, got {dim}"));
        }
        let g = density.unwrap_or_else(GridDensity::uniform);
        Space::build(Geometry::Cube { dim, metric }, DensityLayout::Grid(g))
    }

    pub fn two_interval(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return invalid(format!("two-interval parameter q must lie in (0, 1), got {q}"));
        }
        let layout = DensityLayout::Components(vec![
            Pieces::constant(-1.0, -(1.0 - q), 1.0),
            Pieces::constant(0.0, 1.0 - q, 1.0),
        ]);
        Space::build(Geometry::TwoInterval { q }, layout)
    }

    pub fn with_grid_resolution(mut self, cells_per_axis: usize) -> Self {
        self.grid_resolution = cells_per_axis.max(1);
        self
    }

    pub fn kind(&self) -> SpaceKind {
        match &self.geometry {
            Geometry::Interval => SpaceKind::Interval,
            Geometry::Circle => SpaceKind::Circle,
            Geometry::Graph(_) => SpaceKind::Graph,
            Geometry::Cube {
                metric: CubeMetric::Linf,
                ..
            } => SpaceKind::CubeLinf,
            Geometry::Cube {
                metric: CubeMetric::L2,
                ..
            } => SpaceKind::CubeL2,
            Geometry::TwoInterval { .. } => SpaceKind::TwoInterval,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn grid_resolution(&self) -> usize {
        self.grid_resolution
    }

    pub fn dim(&self) -> Option<usize> {
        match self.geometry {
            Geometry::Cube { dim, .. } => Some(dim),
            _ => None,
        }
    }

    pub fn graph_geometry(&self) -> Option<&GraphGeometry> {
        match &self.geometry {
            Geometry::Graph(g) => Some(g),
            _ => None,
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.geometry {
            Geometry::Interval | Geometry::Circle => 1.0,
            Geometry::TwoInterval { q } => 2.0 - q,
            Geometry::Graph(g) => {
                // Farthest pair lies on vertex-to-vertex routes or edge interiors; a
                // vertex-diameter plus one edge is a safe upper bound.
                let nv = g.vertex_count();
                let mut m: f64 = 0.0;
                for a in 0..nv {
                    for b in 0..nv {
                        m = m.max(g.vertex_distance(a, b));
                    }
                }
                m + g.edge_len()
            }
            Geometry::Cube { dim, metric } => match metric {
                CubeMetric::Linf => 1.0,
                CubeMetric::L2 => (*dim as f64).sqrt(),
            },
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match (&self.geometry, p) {
            (Geometry::Interval, Point::Interval(x)) => (0.0..=1.0).contains(x),
            (Geometry::Circle, Point::Circle(s)) => (0.0..2.0).contains(s),
            (Geometry::Graph(g), Point::Graph { edge, t }) => {
                *edge < g.edges().len() && (0.0..=1.0).contains(t)
            }
            (Geometry::Cube { dim, .. }, Point::Cube(c)) => {
                c.len() == *dim && c.iter().all(|x| (0.0..=1.0).contains(x))
            }
            (Geometry::TwoInterval { q }, Point::TwoInterval(x)) => {
                (-1.0..=-(1.0 - q)).contains(x) || (0.0..=1.0 - q).contains(x)
            }
            _ => false,
        }
    }

    pub(crate) fn check_point(&self, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            invalid(format!(
                "point {p:?} does not belong to a {} space",
                self.kind().name()
            ))
        }
    }

    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(self.distance_unchecked(p, q))
    }

    pub(crate) fn distance_unchecked(&self, p: &Point, q: &Point) -> f64 {
        match (&self.geometry, p, q) {
            (Geometry::Interval, Point::Interval(a), Point::Interval(b))
            | (Geometry::TwoInterval { .. }, Point::TwoInterval(a), Point::TwoInterval(b)) => {
                (a - b).abs()
            }
            (Geometry::Circle, Point::Circle(a), Point::Circle(b)) => circle_distance(*a, *b),
            (
                Geometry::Graph(g),
                Point::Graph { edge: e1, t: t1 },
                Point::Graph { edge: e2, t: t2 },
            ) => g.distance(*e1, *t1, *e2, *t2),
            (Geometry::Cube { metric, .. }, Point::Cube(a), Point::Cube(b)) => {
                cube_distance(*metric, a, b)
            }
            _ => panic!("distance between points of mismatched kinds"),
        }
    }

    /// Component index and coordinate of a point on a 1-D space.
    pub fn locate(&self, p: &Point) -> Result<(usize, f64)> {
        self.check_point(p)?;
        match p {
            Point::Interval(x) | Point::Circle(x) => Ok((0, *x)),
            Point::Graph { edge, t } => Ok((*edge, *t)),
            Point::TwoInterval(x) => Ok((usize::from(*x >= 0.0), *x)),
            Point::Cube(_) => invalid("cube points have no 1-D component"),
        }
    }

    pub fn point_at(&self, component: usize, x: f64) -> Point {
        match &self.geometry {
            Geometry::Interval => Point::Interval(x),
            Geometry::Circle => Point::Circle(if x >= 2.0 { x - 2.0 } else { x }),
            Geometry::Graph(_) => Point::Graph { edge: component, t: x },
            Geometry::TwoInterval { .. } => Point::TwoInterval(x),
            Geometry::Cube { .. } => panic!("cube spaces have no 1-D components"),
        }
    }

    /// Distance from a located centre to coordinate `x` on `component`.
    pub(crate) fn distance_to(&self, center: (usize, f64), component: usize, x: f64) -> f64 {
        match &self.geometry {
            Geometry::Interval | Geometry::TwoInterval { .. } => (x - center.1).abs(),
            Geometry::Circle => circle_distance(center.1, x),
            Geometry::Graph(g) => g.distance(center.0, center.1, component, x),
            Geometry::Cube { .. } => panic!("cube spaces have no 1-D components"),
        }
    }

    /// Coordinates on `component` where the distance to `center` may fail to
    /// be affine. Between consecutive kinks the distance is affine.
    pub(crate) fn distance_kinks(&self, center: (usize, f64), component: usize) -> Vec<f64> {
        let mut k = match &self.geometry {
            Geometry::Interval | Geometry::TwoInterval { .. } => vec![center.1],
            Geometry::Circle => {
                let anti = center.1 + 1.0;
                vec![center.1, if anti >= 2.0 { anti - 2.0 } else { anti }]
            }
            Geometry::Graph(g) => {
                let lines = g.distance_lines(center.0, center.1, component);
                let mut out = Vec::new();
                for i in 0..lines.len() {
                    for j in i + 1..lines.len() {
                        let (a1, b1) = lines[i];
                        let (a2, b2) = lines[j];
                        if b1 != b2 {
                            out.push((a2 - a1) / (b1 - b2));
                        }
                    }
                }
                out
            }
            Geometry::Cube { .. } => vec![],
        };
        let c = self.components[component];
        k.retain(|x| *x > c.lo && *x < c.hi);
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// Maximum distance from `center` over the segment `[a, b]` of `component`.
    pub fn segment_max_distance(&self, center: &Point, component: usize, a: f64, b: f64) -> f64 {
        let c = self.locate(center).expect("centre belongs to the space");
        let mut m = self
            .distance_to(c, component, a)
            .max(self.distance_to(c, component, b));
        for k in self.distance_kinks(c, component) {
            if k > a && k < b {
                m = m.max(self.distance_to(c, component, k));
            }
        }
        m
    }

    /// `int_a^b d(center, x)^p dx` over coordinate `x` on `component`, exact
    /// because the distance is affine between kinks.
    pub fn segment_power_integral(
        &self,
        center: &Point,
        component: usize,
        a: f64,
        b: f64,
        p: f64,
    ) -> f64 {
        let c = self.locate(center).expect("centre belongs to the space");
        let mut knots = vec![a];
        knots.extend(
            self.distance_kinks(c, component)
                .into_iter()
                .filter(|k| *k > a && *k < b),
        );
        knots.push(b);
        knots
            .windows(2)
            .map(|w| {
                let d0 = self.distance_to(c, component, w[0]);
                let d1 = self.distance_to(c, component, w[1]);
                affine_power_integral(d0, d1, w[1] - w[0], p)
            })
            .sum()
    }

    /// Probability mass of coordinate segment `[a, b]` on `component`.
    pub fn segment_mass(&self, component: usize, a: f64, b: f64) -> f64 {
        let c = self.components[component];
        self.density.pieces(component).integral(a, b) * c.weight
    }

    /// Probability mass of the axis-aligned box `[lo, hi]` in a cube space.
    pub fn box_mass(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.density
            .grid()
            .expect("box mass needs a cube space")
            .integral(lo, hi)
    }

    /// Density value at coordinate `x` on `component`, per unit coordinate.
    pub fn coordinate_density(&self, component: usize, x: f64) -> f64 {
        self.density.pieces(component).value_at(x) * self.components[component].weight
    }

    /// Cumulative mass of all components before `component` plus `[lo, x]` on it.
    pub fn cdf(&self, component: usize, x: f64) -> f64 {
        let before: f64 = (0..component)
            .map(|c| self.segment_mass(c, self.components[c].lo, self.components[c].hi))
            .sum();
        let comp = self.components[component];
        before + self.segment_mass(component, comp.lo, x.clamp(comp.lo, comp.hi))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.geometry {
            Geometry::Cube { dim, .. } => {
                let grid = self.density.grid().expect("cube density is a grid");
                let envelope = self.density.upper;
                loop {
                    let x: Vec<f64> = (0..*dim).map(|_| rng.gen::<f64>()).collect();
                    if self.density.is_uniform() || rng.gen::<f64>() * envelope <= grid.value_at(&x) {
                        return Point::Cube(x);
                    }
                }
            }
            _ => {
                let total = self.pieces.last().map_or(1.0, |p| p.cum_end);
                let u = rng.gen::<f64>() * total;
                let k = self
                    .pieces
                    .partition_point(|p| p.cum_end <= u)
                    .min(self.pieces.len() - 1);
                let e = &self.pieces[k];
                let start = if k == 0 { 0.0 } else { self.pieces[k - 1].cum_end };
                let frac = ((u - start) / (e.cum_end - start)).clamp(0.0, 1.0);
                let x = (e.lo + frac * (e.hi - e.lo)).clamp(e.lo, e.hi);
                self.point_at(e.component, x)
            }
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// Exact `mu(B(center, r) ∪ ...)` for the given subset of centres; see
    /// [`UnionMass`] for the cube modes.
    pub fn union_measure(&self, centers: &[Point], r: f64, subset: &[usize]) -> Result<UnionMass> {
        if subset.is_empty() {
            return invalid("union_measure needs a nonempty subset");
        }
        if let Some(i) = subset.iter().find(|i| **i >= centers.len()) {
            return invalid(format!("subset index {i} out of range"));
        }
        let picked: Vec<Point> = subset.iter().map(|i| centers[*i].clone()).collect();
        let oracle = UnionOracle::new(self, &picked, r)?;
        let all: Vec<usize> = (0..picked.len()).collect();
        Ok(oracle.mass(&all))
    }

    pub fn ball_trace(&self, center: &Point, r: f64) -> Result<RegionTrace> {
        if !(r > 0.0) || !r.is_finite() {
            return invalid(format!("ball radius must be positive and finite, got {r}"));
        }
        self.check_point(center)?;
        Ok(trace::ball_trace(self, center, r))
    }
}

pub(crate) fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(2.0 - d)
}

pub(crate) fn cube_distance(metric: CubeMetric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        CubeMetric::Linf => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max),
        CubeMetric::L2 => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Largest distance from `center` to a point of the box `[lo, hi]`.
pub fn box_max_distance(metric: CubeMetric, center: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let far: Vec<f64> = center
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(c, (l, h))| (c - l).abs().max((h - c).abs()))
        .collect();
    cube_distance(metric, &far, &vec![0.0; far.len()])
}

/// Smallest distance from `center` to a point of the box `[lo, hi]`.
pub fn box_min_distance(metric: CubeMetric, center: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let near: Vec<f64> = center
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(c, (l, h))| (l - c).max(0.0).max(c - h))
        .collect();
    cube_distance(metric, &near, &vec![0.0; near.len()])
}

/// `int_0^len g(s)^p ds` for `g` affine from `d0` to `d1`, both `>= 0`.
pub(crate) fn affine_power_integral(d0: f64, d1: f64, len: f64, p: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let diff = d1 - d0;
    if diff.abs() <= 1e-12 * d0.abs().max(d1.abs()).max(1e-300) {
        return len * (0.5 * (d0 + d1)).powf(p);
    }
    len * (d1.powf(p + 1.0) - d0.powf(p + 1.0)) / ((p + 1.0) * diff)
}
