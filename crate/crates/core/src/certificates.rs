//! Disintegration certificates: component measures `mu_1..mu_n` supported on
//! cells, each inside its ball, averaging back to `mu`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{BallCover, TAU};
use crate::flow::{FlowNetwork, FlowSolution};
use crate::spaces::{box_max_distance, Geometry, Point, Space, SpaceKind};

/// Slack on support containment, for rounding in ball boundaries.
pub const GEOMETRY_TOL: f64 = 1e-9;

/// Uncovered stretches lighter than this are skipped by the EDF sweep.
const EDF_DUST: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Segment { component: usize, lo: f64, hi: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub region: Region,
    /// `mu(region)`.
    pub mass: f64,
}

/// `components[i]` lists `(cell, mu_i(cell))`; within a cell, `mu_i` is
/// proportional to `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub n: usize,
    pub radius: f64,
    pub centers: Vec<Point>,
    pub cells: Vec<Cell>,
    pub components: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Largest `|mu_i(X) - 1|`.
    pub worst_mass_error: f64,
    /// Largest excess of `d(x, X_i)` over `r` on a charged cell.
    pub worst_support_excess: f64,
    /// Total variation between the average of the `mu_i` and `mu`, over cells.
    pub marginal_tv: f64,
    pub mass_violation: bool,
    pub support_violation: bool,
    pub marginal_violation: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        !(self.mass_violation || self.support_violation || self.marginal_violation)
    }
}

impl Certificate {
    /// Scale every component measure by `factor`.
    pub fn rescaled(&self, factor: f64) -> Certificate {
        let mut c = self.clone();
        for comp in &mut c.components {
            for (_, m) in comp.iter_mut() {
                *m *= factor;
            }
        }
        c
    }

    /// `(1/n) sum_i mu_i(cell)` for every cell.
    pub fn average(&self) -> Vec<f64> {
        let mut avg = vec![0.0; self.cells.len()];
        for comp in &self.components {
            for &(k, m) in comp {
                avg[k] += m;
            }
        }
        let inv = 1.0 / self.n as f64;
        avg.iter_mut().for_each(|a| *a *= inv);
        avg
    }
}

fn region_mass(space: &Space, region: &Region) -> f64 {
    match region {
        Region::Segment { component, lo, hi } => space.segment_mass(*component, *lo, *hi),
        Region::Box { lo, hi } => space.box_mass(lo, hi),
    }
}

fn region_max_distance(space: &Space, center: &Point, region: &Region) -> Result<f64> {
    match (region, space.geometry(), center) {
        (Region::Segment { component, lo, hi }, g, _) if !matches!(g, Geometry::Cube { .. }) => {
            if *component >= space.components().len() {
                return Err(Error::InvalidArgument(format!("cell component {component} out of range")));
            }
            space.locate(center)?;
            Ok(space.segment_max_distance(center, *component, *lo, *hi))
        }
        (Region::Box { lo, hi }, Geometry::Cube { metric, dim }, Point::Cube(c))
            if lo.len() == *dim && hi.len() == *dim && c.len() == *dim =>
        {
            Ok(box_max_distance(*metric, c, lo, hi))
        }
        _ => Err(Error::InvalidArgument("cell region does not match the space".into())),
    }
}

/// Positive-measure overlap between any two cells.
fn cells_overlap(cells: &[Cell]) -> bool {
    let mut segs: Vec<(usize, f64, f64)> = Vec::new();
    let mut boxes: Vec<(&[f64], &[f64])> = Vec::new();
    for c in cells {
        match &c.region {
            Region::Segment { component, lo, hi } => segs.push((*component, *lo, *hi)),
            Region::Box { lo, hi } => boxes.push((lo, hi)),
        }
    }
    segs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if segs
        .windows(2)
        .any(|w| w[0].0 == w[1].0 && w[1].1 < w[0].2 - 1e-12)
    {
        return true;
    }
    boxes_overlap(&boxes)
}

fn boxes_overlap(boxes: &[(&[f64], &[f64])]) -> bool {
    if boxes.len() < 2 {
        return false;
    }
    let dim = boxes[0].0.len();
    // Fast path: every box is one cell of the product grid spanned by all
    // coordinates, so overlap means a repeated grid index.
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|d| {
            let mut a: Vec<f64> = boxes.iter().flat_map(|(l, h)| [l[d], h[d]]).collect();
            a.sort_by(f64::total_cmp);
            a.dedup();
            a
        })
        .collect();
    let mut seen: HashMap<Vec<usize>, ()> = HashMap::with_capacity(boxes.len());
    let mut elementary = true;
    for (lo, hi) in boxes {
        let mut idx = Vec::with_capacity(dim);
        for d in 0..dim {
            let k = axes[d].partition_point(|x| *x < lo[d]);
            if k + 1 >= axes[d].len() || axes[d][k + 1] != hi[d] {
                elementary = false;
                break;
            }
            idx.push(k);
        }
        if !elementary {
            break;
        }
        if seen.insert(idx, ()).is_some() {
            return true;
        }
    }
    if elementary {
        return false;
    }
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|a, b| boxes[*a].0[0].total_cmp(&boxes[*b].0[0]));
    for (p, &a) in order.iter().enumerate() {
        for &b in &order[p + 1..] {
            if boxes[b].0[0] >= boxes[a].1[0] - 1e-12 {
                break;
            }
            if (0..dim).all(|d| {
                boxes[a].0[d].max(boxes[b].0[d]) < boxes[a].1[d].min(boxes[b].1[d]) - 1e-12
            }) {
                return true;
            }
        }
    }
    false
}

/// Check the three certificate conditions: unit mass per ball, support inside
/// the ball, and averaging back to `mu`.
pub fn validate_certificate(space: &Space, cert: &Certificate) -> Result<ValidationReport> {
    if cert.components.len() != cert.n || cert.centers.len() != cert.n || cert.n == 0 {
        return Err(Error::InvalidArgument(
            "certificate needs one centre and one component per ball".into(),
        ));
    }
    let mut worst_mass_error: f64 = 0.0;
    let mut worst_support_excess: f64 = 0.0;
    let mut negative = false;
    for (i, comp) in cert.components.iter().enumerate() {
        let mut total = 0.0;
        for &(k, m) in comp {
            if k >= cert.cells.len() {
                return Err(Error::InvalidArgument(format!("cell index {k} out of range")));
            }
            if m < 0.0 {
                negative = true;
            }
            total += m;
            if m > 0.0 {
                let d = region_max_distance(space, &cert.centers[i], &cert.cells[k].region)?;
                worst_support_excess = worst_support_excess.max(d - cert.radius);
            }
        }
        worst_mass_error = worst_mass_error.max((total - 1.0).abs());
    }
    let avg = cert.average();
    let mut tv = 0.0;
    let mut covered = 0.0;
    for (k, cell) in cert.cells.iter().enumerate() {
        let m = region_mass(space, &cell.region);
        covered += m;
        tv += (avg[k] - m).abs();
        tv += (cell.mass - m).abs();
    }
    tv += (1.0 - covered).abs();
    let mut marginal_tv = 0.5 * tv;
    if cells_overlap(&cert.cells) {
        marginal_tv = f64::INFINITY;
    }
    Ok(ValidationReport {
        worst_mass_error,
        worst_support_excess,
        marginal_tv,
        mass_violation: worst_mass_error > TAU || negative,
        support_violation: worst_support_excess > GEOMETRY_TOL,
        marginal_violation: marginal_tv > TAU,
    })
}

/// Earliest-deadline-first sweep on the interval: each point's mass goes to
/// the active ball whose right end comes first, until that ball holds `1/n`.
pub fn construct_edf(cover: &BallCover) -> Result<Certificate> {
    let space = cover.space();
    if space.kind() != SpaceKind::Interval {
        return Err(Error::InvalidArgument(format!(
            "EDF construction needs an interval space, got {}",
            space.kind().name()
        )));
    }
    let n = cover.n();
    let r = cover.radius();
    let ys: Vec<f64> = cover
        .centers()
        .iter()
        .map(|p| p.scalar().expect("interval point"))
        .collect();
    let order = cover.sorted_order();
    let start = |i: usize| (ys[i] - r).max(0.0);
    let end = |i: usize| (ys[i] + r).min(1.0);
    let share = 1.0 / n as f64;
    let breaks = &space.density().pieces(0).breaks;

    let mut remaining = vec![share; n];
    let mut heap: BinaryHeap<Reverse<(OrdF64, usize)>> = BinaryHeap::new();
    let mut cells: Vec<Cell> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    let mut next = 0;
    let mut x = 0.0f64;
    loop {
        while next < n && start(order[next]) <= x {
            let i = order[next];
            heap.push(Reverse((OrdF64(end(i)), i)));
            next += 1;
        }
        while let Some(&Reverse((OrdF64(b), i))) = heap.peek() {
            if remaining[i] > 0.0 && b > x {
                break;
            }
            if remaining[i] > EDF_DUST {
                return Err(Error::Internal(format!(
                    "EDF sweep: ball {i} expired at {b} with {} unassigned",
                    remaining[i]
                )));
            }
            heap.pop();
        }
        if x >= 1.0 {
            break;
        }
        let next_start = if next < n { start(order[next]) } else { 1.0 };
        let Some(&Reverse((OrdF64(b), top))) = heap.peek() else {
            let gap = space.segment_mass(0, x, next_start);
            if gap > EDF_DUST {
                return Err(Error::Internal(format!(
                    "EDF sweep: mass {gap} on [{x}, {next_start}] lies in no ball"
                )));
            }
            x = next_start;
            if next >= n {
                break;
            }
            continue;
        };
        let piece_end = breaks[breaks.partition_point(|t| *t <= x).min(breaks.len() - 1)];
        let mut stop = b.min(next_start).min(piece_end).min(1.0);
        let rho = space.coordinate_density(0, 0.5 * (x + stop));
        let reach = x + remaining[top] / rho;
        let mass = if reach < stop {
            stop = reach;
            let m = remaining[top];
            remaining[top] = 0.0;
            m
        } else {
            let m = space.segment_mass(0, x, stop);
            remaining[top] -= m;
            if remaining[top] <= 0.0 {
                remaining[top] = 0.0;
            }
            m
        };
        if stop > x {
            match (cells.last_mut(), owner.last()) {
                (Some(Cell { region: Region::Segment { hi, .. }, mass: cm }), Some(&o))
                    if o == top && *hi == x =>
                {
                    *hi = stop;
                    *cm += mass;
                }
                _ => {
                    cells.push(Cell {
                        region: Region::Segment { component: 0, lo: x, hi: stop },
                        mass,
                    });
                    owner.push(top);
                }
            }
        }
        x = stop;
    }
    if let Some((i, m)) = remaining.iter().enumerate().find(|(_, m)| **m > EDF_DUST) {
        return Err(Error::Internal(format!(
            "EDF sweep: ball {i} left with {m} unassigned"
        )));
    }
    let mut components = vec![Vec::new(); n];
    for (k, (cell, &o)) in cells.iter().zip(&owner).enumerate() {
        components[o].push((k, cell.mass * n as f64));
    }
    Ok(Certificate {
        n,
        radius: r,
        centers: cover.centers().to_vec(),
        cells,
        components,
    })
}

/// Certificate from a saturated flow: `mu_i(cell) = n * flow(cell -> i)`,
/// each component renormalised to unit mass. Network node `k` stands for the
/// cells in `groups[k]`, whose flow is shared in proportion to their masses.
pub fn decompose_flow(
    net: &FlowNetwork,
    sol: &FlowSolution,
    cells: Vec<Cell>,
    groups: &[Vec<usize>],
    centers: &[Point],
    radius: f64,
) -> Result<Certificate> {
    if sol.deficit > TAU {
        return Err(Error::InvalidState(format!(
            "flow is unsaturated (deficit {})",
            sol.deficit
        )));
    }
    if groups.len() != net.cell_mass.len()
        || centers.len() != net.n_balls
        || groups.iter().flatten().any(|k| *k >= cells.len())
    {
        return Err(Error::InvalidArgument("cells or centres do not match the network".into()));
    }
    let n = net.n_balls;
    let mut components = vec![Vec::new(); n];
    for (&(g, b), &f) in net.arcs.iter().zip(&sol.arc_flow) {
        if f <= 0.0 {
            continue;
        }
        let share = n as f64 * f / net.cell_mass[g];
        for &k in &groups[g] {
            components[b].push((k, share * cells[k].mass));
        }
    }
    for comp in &mut components {
        comp.sort_by_key(|e| e.0);
        let total: f64 = comp.iter().map(|e| e.1).sum();
        if total > 0.0 {
            for e in comp.iter_mut() {
                e.1 /= total;
            }
        }
    }
    Ok(Certificate {
        n,
        radius,
        centers: centers.to_vec(),
        cells,
        components,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
