//! Two-sided grid check for cubes. Cells wholly inside a ball give an inner
//! model whose feasibility is sound; cells merely meeting a ball give an outer
//! model whose infeasibility is sound.

use fixedbitset::FixedBitSet;

use super::arrangement::{class_network, Limits};
use super::{accept_certificate, witness_on, BallCover, CheckOutcome, GapReport, TAU};
use crate::certificates::{decompose_flow, Cell, Region};
use crate::error::{invalid, Error, Result};
use crate::flow::{max_flow, min_cut_ball_side};
use crate::spaces::{CubeMetric, Geometry, Point};

pub fn check_sandwich(cover: &BallCover, h0: f64, refinements: i64) -> Result<CheckOutcome> {
    check_sandwich_limited(cover, h0, refinements, &Limits::default())
}

struct Grid {
    m: usize,
    dim: usize,
    cells: Vec<Cell>,
}

fn grid_cells(cover: &BallCover, m: usize, dim: usize) -> Grid {
    let space = cover.space();
    let total = m.pow(dim as u32);
    let mut pos = vec![0usize; dim];
    let mut cells = Vec::with_capacity(total);
    for _ in 0..total {
        let lo: Vec<f64> = pos.iter().map(|k| *k as f64 / m as f64).collect();
        let hi: Vec<f64> = pos.iter().map(|k| (*k + 1) as f64 / m as f64).collect();
        let mass = space.box_mass(&lo, &hi);
        cells.push(Cell {
            region: Region::Box { lo, hi },
            mass,
        });
        for p in pos.iter_mut() {
            *p += 1;
            if *p < m {
                break;
            }
            *p = 0;
        }
    }
    Grid { m, dim, cells }
}

/// Inner and outer membership of every grid cell.
fn memberships(cover: &BallCover, grid: &Grid, metric: CubeMetric) -> (Vec<FixedBitSet>, Vec<FixedBitSet>) {
    let n = cover.n();
    let (m, dim) = (grid.m, grid.dim);
    let total = grid.cells.len();
    let r = cover.radius();
    let mut inner = vec![FixedBitSet::with_capacity(n); total];
    let mut outer = vec![FixedBitSet::with_capacity(n); total];
    let combine = |acc: f64, v: f64| match metric {
        CubeMetric::Linf => acc.max(v),
        CubeMetric::L2 => acc + v * v,
    };
    let (r_in, r_out) = match metric {
        CubeMetric::Linf => (r, r + 1e-12),
        CubeMetric::L2 => (r * r, r * r + 1e-12),
    };
    let mut near = vec![vec![0.0; m]; dim];
    let mut far = vec![vec![0.0; m]; dim];
    for (i, c) in cover.centers().iter().enumerate() {
        let Point::Cube(c) = c else { unreachable!("cube centres") };
        for d in 0..dim {
            for k in 0..m {
                let lo = k as f64 / m as f64;
                let hi = (k + 1) as f64 / m as f64;
                near[d][k] = (lo - c[d]).max(c[d] - hi).max(0.0);
                far[d][k] = (c[d] - lo).abs().max((hi - c[d]).abs());
            }
        }
        let mut pos = vec![0usize; dim];
        for idx in 0..total {
            let mut dn = 0.0;
            let mut df = 0.0;
            for d in 0..dim {
                dn = combine(dn, near[d][pos[d]]);
                df = combine(df, far[d][pos[d]]);
            }
            if dn <= r_out {
                outer[idx].insert(i);
                if df <= r_in {
                    inner[idx].insert(i);
                }
            }
            for p in pos.iter_mut() {
                *p += 1;
                if *p < m {
                    break;
                }
                *p = 0;
            }
        }
    }
    (inner, outer)
}

pub(crate) fn check_sandwich_limited(
    cover: &BallCover,
    h0: f64,
    refinements: i64,
    limits: &Limits,
) -> Result<CheckOutcome> {
    let space = cover.space();
    let Geometry::Cube { dim, metric } = space.geometry() else {
        return invalid(format!(
            "sandwich check needs a cube space, got {}",
            space.kind().name()
        ));
    };
    if !(h0 > 0.0) || !h0.is_finite() {
        return invalid(format!("grid step must be positive, got {h0}"));
    }
    if refinements < 0 {
        return invalid(format!("refinements must be >= 0, got {refinements}"));
    }
    let n = cover.n();
    let mut h = h0;
    let mut gap = GapReport {
        inner_deficit: 1.0,
        outer_slack: 1.0,
        grid_h: h0,
    };
    for _ in 0..=refinements {
        let m = ((1.0 / h) - 1e-9).ceil().max(1.0) as usize;
        let total = m
            .checked_pow(*dim as u32)
            .filter(|t| *t <= limits.max_cells && t.saturating_mul(n) <= limits.max_membership_bits)
            .ok_or_else(|| {
                Error::ResourceLimit(format!("sandwich grid {m}^{dim} exceeds the cell limits"))
            })?;
        let grid = grid_cells(cover, m, *dim);
        debug_assert_eq!(grid.cells.len(), total);
        let (inner, outer) = memberships(cover, &grid, *metric);
        let grid_h = 1.0 / m as f64;

        let (net, groups) = class_network(&grid.cells, &inner, n);
        let sol = max_flow(&net)?;
        let slack: f64 = grid
            .cells
            .iter()
            .zip(inner.iter().zip(&outer))
            .filter(|(_, (a, b))| a != b)
            .map(|(c, _)| c.mass)
            .sum();
        gap = GapReport {
            inner_deficit: sol.deficit,
            outer_slack: slack,
            grid_h,
        };
        if sol.deficit <= TAU {
            let cert = decompose_flow(
                &net,
                &sol,
                grid.cells.clone(),
                &groups,
                cover.centers(),
                cover.radius(),
            )?;
            if let CheckOutcome::Disintegrable(c) = accept_certificate(space, cert, gap)? {
                return Ok(CheckOutcome::Disintegrable(c));
            }
        }

        let (onet, _) = class_network(&grid.cells, &outer, n);
        let osol = max_flow(&onet)?;
        if osol.deficit > TAU {
            let side = min_cut_ball_side(&onet, &osol)?;
            let mut pick = FixedBitSet::with_capacity(n);
            side.iter().for_each(|i| pick.insert(*i));
            let outer_mass: f64 = grid
                .cells
                .iter()
                .zip(&outer)
                .filter(|(_, set)| !set.is_disjoint(&pick))
                .map(|(c, _)| c.mass)
                .sum();
            let required = side.len() as f64 / n as f64;
            if outer_mass < required - TAU {
                let fine = space.clone().with_grid_resolution(m);
                if let Some(mut w) = witness_on(&fine, cover, side)? {
                    w.union_mass = w.union_mass.min(outer_mass);
                    return Ok(CheckOutcome::NotDisintegrable(w));
                }
            }
        }
        h /= 2.0;
    }
    Ok(CheckOutcome::Inconclusive(gap))
}
