//! Contiguous-run check on the interval and the circle.
//!
//! For order statistics `y_0 <= .. <= y_{n-1}` a run `i..=j` whose consecutive
//! gaps are all at most `2r` has union `[y_i - r, y_j + r]`, so its deficit is
//! `B(i) - A(j)` with `B(i) = F(y_i - r) - i/n` and `A(j) = F(y_j + r) - (j+1)/n`.
//! Runs crossing a larger gap split into disjoint pieces and need no check.

use std::collections::VecDeque;

use super::{accept_certificate, witness_on, BallCover, CheckOutcome, GapReport, TAU};
use crate::certificates::construct_edf;
use crate::error::{invalid, Result};
use crate::spaces::{Space, SpaceKind};

/// Largest deficit over all runs and the run attaining it (original indices,
/// ascending). Ties go to the smallest end, then the smallest start.
pub fn connected_max_deficit(cover: &BallCover) -> Result<(f64, Vec<usize>)> {
    match cover.space().kind() {
        SpaceKind::Interval => Ok(interval_runs(cover)),
        SpaceKind::Circle => Ok(circle_runs(cover)),
        k => invalid(format!("connected check does not support {} spaces", k.name())),
    }
}

fn coords(cover: &BallCover) -> Vec<f64> {
    cover
        .sorted_order()
        .iter()
        .map(|&i| cover.centers()[i].scalar().expect("1-D point"))
        .collect()
}

struct Best {
    deficit: f64,
    run: (usize, usize),
}

impl Best {
    fn new() -> Self {
        Best {
            deficit: f64::NEG_INFINITY,
            run: (0, 0),
        }
    }

    fn offer(&mut self, deficit: f64, i: usize, j: usize) {
        if deficit > self.deficit {
            self.deficit = deficit;
            self.run = (i, j);
        }
    }
}

fn interval_runs(cover: &BallCover) -> (f64, Vec<usize>) {
    let space = cover.space();
    let y = coords(cover);
    let n = y.len();
    let nf = n as f64;
    let r = cover.radius();
    let f = |x: f64| space.cdf(0, x);
    let mut best = Best::new();
    let mut max_b = f64::NEG_INFINITY;
    let mut arg_b = 0;
    for j in 0..n {
        if j > 0 && y[j] - y[j - 1] > 2.0 * r {
            max_b = f64::NEG_INFINITY;
        }
        let b = f(y[j] - r) - j as f64 / nf;
        if b > max_b {
            max_b = b;
            arg_b = j;
        }
        let a = f(y[j] + r) - (j + 1) as f64 / nf;
        best.offer(max_b - a, arg_b, j);
    }
    let (i, j) = best.run;
    let run = cover.sorted_order()[i..=j].to_vec();
    (best.deficit, sorted(run))
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Circle coordinates lifted to the line, with `G(x + 2) = G(x) + 1`.
fn lifted_cdf(space: &Space, x: f64) -> f64 {
    let k = (x / 2.0).floor();
    k + space.cdf(0, x - 2.0 * k)
}

fn circle_runs(cover: &BallCover) -> (f64, Vec<usize>) {
    let space = cover.space();
    let s = coords(cover);
    let order = cover.sorted_order();
    let n = s.len();
    let nf = n as f64;
    let r = cover.radius();
    if r >= 1.0 {
        return (0.0, (0..n).collect());
    }
    let g = |x: f64| lifted_cdf(space, x);
    // Cyclic gap after position k.
    let gap = |k: usize| {
        if k + 1 < n {
            s[k + 1] - s[k]
        } else {
            s[0] + 2.0 - s[n - 1]
        }
    };
    let wide = (0..n).find(|&k| gap(k) > 2.0 * r);
    let mut best = Best::new();
    let run: Vec<usize>;
    if let Some(k) = wide {
        // Unroll starting just after a wide gap; no union crosses it.
        let z: Vec<f64> = (0..n)
            .map(|m| {
                let p = (k + 1 + m) % n;
                if p <= k {
                    s[p] + 2.0
                } else {
                    s[p]
                }
            })
            .collect();
        let mut max_b = f64::NEG_INFINITY;
        let mut arg_b = 0;
        for j in 0..n {
            if j > 0 && z[j] - z[j - 1] > 2.0 * r {
                max_b = f64::NEG_INFINITY;
            }
            let b = g(z[j] - r) - j as f64 / nf;
            if b > max_b {
                max_b = b;
                arg_b = j;
            }
            let a = g(z[j] + r) - (j + 1) as f64 / nf;
            best.offer(max_b - a, arg_b, j);
        }
        let (i, j) = best.run;
        run = (i..=j).map(|m| order[(k + 1 + m) % n]).collect();
    } else {
        // Every point is covered, so the full set is fine; runs have length
        // at most n - 1 and may wrap once.
        if n == 1 {
            return (0.0, vec![order[0]]);
        }
        let z = |k: usize| s[k % n] + 2.0 * (k / n) as f64;
        let bval = |i: usize| g(z(i) - r) - i as f64 / nf;
        let mut window: VecDeque<(usize, f64)> = VecDeque::new();
        for j in 0..(2 * n - 1) {
            if j < n {
                let b = bval(j);
                while window.back().is_some_and(|&(_, v)| v < b) {
                    window.pop_back();
                }
                window.push_back((j, b));
            }
            let lo = (j + 2).saturating_sub(n);
            while window.front().is_some_and(|&(i, _)| i < lo) {
                window.pop_front();
            }
            let Some(&(i, b)) = window.front() else { continue };
            let a = g(z(j) + r) - (j + 1) as f64 / nf;
            best.offer(b - a, i, j);
        }
        let (i, j) = best.run;
        run = (i..=j).map(|m| order[m % n]).collect();
    }
    (best.deficit, sorted(run))
}

/// Exact check over contiguous runs. Interval certificates come from the EDF
/// sweep, circle certificates from the arrangement flow.
pub fn check_connected(cover: &BallCover) -> Result<CheckOutcome> {
    let (deficit, run) = connected_max_deficit(cover)?;
    let gap = GapReport {
        inner_deficit: deficit.max(0.0),
        outer_slack: 0.0,
        grid_h: 0.0,
    };
    if deficit > TAU {
        return Ok(match witness_on(cover.space(), cover, run)? {
            Some(w) => CheckOutcome::NotDisintegrable(w),
            None => CheckOutcome::Inconclusive(gap),
        });
    }
    match cover.space().kind() {
        SpaceKind::Interval => match construct_edf(cover) {
            Ok(cert) => accept_certificate(cover.space(), cert, gap),
            Err(_) => Ok(CheckOutcome::Inconclusive(gap)),
        },
        _ => Ok(match super::check_arrangement(cover)? {
            CheckOutcome::Disintegrable(c) => CheckOutcome::Disintegrable(c),
            _ => CheckOutcome::Inconclusive(gap),
        }),
    }
}
