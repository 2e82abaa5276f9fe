//! Exact check by max-flow over the arrangement of ball boundaries.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use super::{accept_certificate, witness_on, BallCover, CheckOutcome, GapReport, TAU};
use crate::certificates::{decompose_flow, Cell, Region};
use crate::error::{invalid, Error, Result};
use crate::flow::{max_flow, min_cut_ball_side, FlowNetwork};
use crate::spaces::{Geometry, RegionTrace, SpaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_cells: usize,
    /// Bound on `cells * n`, the size of the membership table.
    pub max_membership_bits: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_cells: 1_000_000,
            max_membership_bits: 1_000_000_000,
        }
    }
}

/// Cells not crossed by any ball boundary, with the balls containing each.
#[derive(Debug, Clone)]
pub struct ArrangementCells {
    pub cells: Vec<Cell>,
    pub members: Vec<FixedBitSet>,
}

fn check_size(cells: usize, n: usize, limits: &Limits) -> Result<()> {
    if cells > limits.max_cells || cells.saturating_mul(n) > limits.max_membership_bits {
        return Err(Error::ResourceLimit(format!(
            "arrangement has {cells} cells for {n} balls (limits: {} cells, {} membership bits)",
            limits.max_cells, limits.max_membership_bits
        )));
    }
    Ok(())
}

pub fn build_arrangement(cover: &BallCover, limits: &Limits) -> Result<ArrangementCells> {
    let space = cover.space();
    let n = cover.n();
    let traces = cover
        .centers()
        .iter()
        .map(|c| space.ball_trace(c, cover.radius()))
        .collect::<Result<Vec<_>>>()?;
    match space.geometry() {
        Geometry::Cube { dim, .. } => {
            if space.kind() != SpaceKind::CubeLinf {
                return invalid("arrangement cells need sup-norm balls on the cube");
            }
            if *dim > 3 || n > 64 {
                return invalid(format!(
                    "cube arrangement supports dim <= 3 and n <= 64, got dim {dim}, n {n}"
                ));
            }
            box_arrangement(cover, &traces, *dim, limits)
        }
        _ => segment_arrangement(cover, &traces, limits),
    }
}

fn segment_arrangement(
    cover: &BallCover,
    traces: &[RegionTrace],
    limits: &Limits,
) -> Result<ArrangementCells> {
    let space = cover.space();
    let n = cover.n();
    let comps = space.components();
    let mut points: Vec<Vec<f64>> = comps
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut p = vec![c.lo, c.hi];
            p.extend(space.density().pieces(k).breaks.iter().copied());
            p
        })
        .collect();
    for t in traces {
        for s in t.segments() {
            points[s.component].push(s.lo);
            points[s.component].push(s.hi);
        }
    }
    let mut offset = Vec::with_capacity(comps.len());
    let mut total = 0;
    for p in &mut points {
        p.sort_by(f64::total_cmp);
        p.dedup();
        offset.push(total);
        total += p.len() - 1;
    }
    check_size(total, n, limits)?;
    let mut cells = Vec::with_capacity(total);
    for (k, p) in points.iter().enumerate() {
        for w in p.windows(2) {
            cells.push(Cell {
                region: Region::Segment {
                    component: k,
                    lo: w[0],
                    hi: w[1],
                },
                mass: space.segment_mass(k, w[0], w[1]),
            });
        }
    }
    let mut members = vec![FixedBitSet::with_capacity(n); total];
    for (i, t) in traces.iter().enumerate() {
        for s in t.segments() {
            let p = &points[s.component];
            let a = p.partition_point(|x| *x < s.lo);
            let b = p.partition_point(|x| *x < s.hi);
            for c in a..b {
                members[offset[s.component] + c].insert(i);
            }
        }
    }
    Ok(ArrangementCells { cells, members })
}

fn box_arrangement(
    cover: &BallCover,
    traces: &[RegionTrace],
    dim: usize,
    limits: &Limits,
) -> Result<ArrangementCells> {
    let space = cover.space();
    let n = cover.n();
    let grid = space.density().grid().expect("cube density is a grid");
    let boxes: Vec<(&[f64], &[f64])> = traces
        .iter()
        .map(|t| match t {
            RegionTrace::Box { lo, hi } => (lo.as_slice(), hi.as_slice()),
            _ => unreachable!("sup-norm balls trace to boxes"),
        })
        .collect();
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|d| {
            let mut a = vec![0.0, 1.0];
            a.extend(grid.interior_lines());
            for (lo, hi) in &boxes {
                a.push(lo[d]);
                a.push(hi[d]);
            }
            a.sort_by(f64::total_cmp);
            a.dedup();
            a
        })
        .collect();
    let counts: Vec<usize> = axes.iter().map(|a| a.len() - 1).collect();
    let total = counts
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(*c))
        .ok_or_else(|| Error::ResourceLimit("arrangement cell count overflows".into()))?;
    check_size(total, n, limits)?;
    let mut cells = Vec::with_capacity(total);
    let mut pos = vec![0usize; dim];
    for _ in 0..total {
        let lo: Vec<f64> = (0..dim).map(|d| axes[d][pos[d]]).collect();
        let hi: Vec<f64> = (0..dim).map(|d| axes[d][pos[d] + 1]).collect();
        let mass = space.box_mass(&lo, &hi);
        cells.push(Cell {
            region: Region::Box { lo, hi },
            mass,
        });
        for d in 0..dim {
            pos[d] += 1;
            if pos[d] < counts[d] {
                break;
            }
            pos[d] = 0;
        }
    }
    let mut members = vec![FixedBitSet::with_capacity(n); total];
    for (i, (lo, hi)) in boxes.iter().enumerate() {
        let ranges: Vec<(usize, usize)> = (0..dim)
            .map(|d| {
                let a = axes[d].partition_point(|x| *x < lo[d]);
                let b = axes[d].partition_point(|x| *x < hi[d]);
                (a, b)
            })
            .collect();
        if ranges.iter().any(|(a, b)| a >= b) {
            continue;
        }
        let mut p: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'cells: loop {
            let mut idx = 0;
            let mut stride = 1;
            for d in 0..dim {
                idx += p[d] * stride;
                stride *= counts[d];
            }
            members[idx].insert(i);
            for d in 0..dim {
                p[d] += 1;
                if p[d] < ranges[d].1 {
                    continue 'cells;
                }
                p[d] = ranges[d].0;
            }
            break;
        }
    }
    Ok(ArrangementCells { cells, members })
}

/// Merge cells with identical ball sets into one network node each; returns
/// the network and, per node, its cells.
pub(crate) fn class_network(
    cells: &[Cell],
    members: &[FixedBitSet],
    n: usize,
) -> (FlowNetwork, Vec<Vec<usize>>) {
    let mut index: HashMap<&FixedBitSet, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut mass: Vec<f64> = Vec::new();
    for (k, m) in members.iter().enumerate() {
        if cells[k].mass <= 0.0 {
            continue;
        }
        let g = *index.entry(m).or_insert_with(|| {
            groups.push(Vec::new());
            mass.push(0.0);
            groups.len() - 1
        });
        groups[g].push(k);
        mass[g] += cells[k].mass;
    }
    let mut reps: Vec<(&FixedBitSet, usize)> = index.into_iter().collect();
    reps.sort_by_key(|e| e.1);
    let arcs = reps
        .iter()
        .flat_map(|(set, g)| set.ones().map(move |b| (*g, b)))
        .collect();
    (FlowNetwork::new(mass, n, arcs), groups)
}

/// Solve the cell network; a deficit beyond `TAU` yields the min-cut witness,
/// otherwise the flow decomposes into a certificate.
pub(crate) fn solve_cells(
    cover: &BallCover,
    arr: ArrangementCells,
    gap_h: f64,
) -> Result<CheckOutcome> {
    let n = cover.n();
    let (net, groups) = class_network(&arr.cells, &arr.members, n);
    let sol = max_flow(&net)?;
    let gap = GapReport {
        inner_deficit: sol.deficit,
        outer_slack: 0.0,
        grid_h: gap_h,
    };
    if sol.deficit > TAU {
        let side = min_cut_ball_side(&net, &sol)?;
        return Ok(match witness_on(cover.space(), cover, side)? {
            Some(w) => CheckOutcome::NotDisintegrable(w),
            None => CheckOutcome::Inconclusive(gap),
        });
    }
    let cert = decompose_flow(
        &net,
        &sol,
        arr.cells,
        &groups,
        cover.centers(),
        cover.radius(),
    )?;
    accept_certificate(cover.space(), cert, gap)
}

pub fn check_arrangement(cover: &BallCover) -> Result<CheckOutcome> {
    check_arrangement_with(cover, &Limits::default())
}

pub fn check_arrangement_with(cover: &BallCover, limits: &Limits) -> Result<CheckOutcome> {
    let arr = build_arrangement(cover, limits)?;
    solve_cells(cover, arr, 0.0)
}
