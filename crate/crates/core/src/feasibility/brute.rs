//! Literal enumeration of every nonempty subset of balls.

use super::{check_arrangement, witness_on, BallCover, CheckOutcome, GapReport, Verdict, TAU};
use crate::error::{invalid, Error, Result};
use crate::spaces::{SpaceKind, UnionMass, UnionOracle};

pub const MAX_BRUTE_N: usize = 20;

/// Overlaps lighter than this count as measure zero.
const OVERLAP_TOL: f64 = 1e-12;

fn members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

fn oracle<'a>(cover: &BallCover<'a>) -> Result<UnionOracle<'a>> {
    let n = cover.n();
    if n > MAX_BRUTE_N {
        return Err(Error::ResourceLimit(format!(
            "brute force enumerates 2^n subsets; n = {n} exceeds {MAX_BRUTE_N}"
        )));
    }
    if cover.space().kind() == SpaceKind::CubeL2 {
        return invalid("brute force needs exact union measures, unavailable for Euclidean cubes");
    }
    UnionOracle::new(cover.space(), cover.centers(), cover.radius())
}

pub fn check_bruteforce(cover: &BallCover) -> Result<CheckOutcome> {
    let oracle = oracle(cover)?;
    let n = cover.n();
    let mut best = f64::NEG_INFINITY;
    let mut best_mask = 1u32;
    let mut ambiguous = false;
    for mask in 1u32..(1u32 << n) {
        let subset = members(mask, n);
        let required = subset.len() as f64 / n as f64;
        let m = oracle.mass(&subset);
        if let UnionMass::Bounds { inner, outer } = m {
            if inner < required - TAU && outer >= required - TAU {
                ambiguous = true;
            }
        }
        let deficit = required - m.upper();
        if deficit > best {
            best = deficit;
            best_mask = mask;
        }
    }
    let gap = GapReport {
        inner_deficit: best.max(0.0),
        outer_slack: 0.0,
        grid_h: 0.0,
    };
    if best > TAU {
        return Ok(match witness_on(cover.space(), cover, members(best_mask, n))? {
            Some(w) => CheckOutcome::NotDisintegrable(w),
            None => CheckOutcome::Inconclusive(gap),
        });
    }
    if ambiguous {
        return Ok(CheckOutcome::Inconclusive(gap));
    }
    Ok(match check_arrangement(cover)? {
        CheckOutcome::Disintegrable(c) => CheckOutcome::Disintegrable(c),
        _ => CheckOutcome::Inconclusive(gap),
    })
}

/// Pairwise overlap masks: bit `j` of entry `i` is set when
/// `mu(B_i ∩ B_j) > 0`.
fn overlap_masks(oracle: &UnionOracle, n: usize) -> Vec<u32> {
    let single: Vec<f64> = (0..n).map(|i| oracle.mass(&[i]).lower()).collect();
    let mut adj = vec![0u32; n];
    for i in 0..n {
        for j in i + 1..n {
            let both = oracle.mass(&[i, j]).upper();
            if single[i] + single[j] - both > OVERLAP_TOL {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    adj
}

fn connected(mask: u32, adj: &[u32]) -> bool {
    let start = mask & mask.wrapping_neg();
    let mut seen = start;
    let mut frontier = start;
    while frontier != 0 {
        let i = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = adj[i] & mask & !seen;
        seen |= fresh;
        frontier |= fresh;
    }
    seen == mask
}

/// A subset is irreducible when its balls cannot be split into two groups
/// whose unions overlap in measure zero.
pub fn is_irreducible(cover: &BallCover, subset: &[usize]) -> Result<bool> {
    let oracle = oracle(cover)?;
    let adj = overlap_masks(&oracle, cover.n());
    let mask = subset.iter().fold(0u32, |m, i| m | 1 << i);
    Ok(mask != 0 && connected(mask, &adj))
}

/// Verdict from enumerating irreducible subsets only.
pub fn irreducible_verdict(cover: &BallCover) -> Result<Verdict> {
    let oracle = oracle(cover)?;
    let n = cover.n();
    let adj = overlap_masks(&oracle, n);
    for mask in 1u32..(1u32 << n) {
        if !connected(mask, &adj) {
            continue;
        }
        let subset = members(mask, n);
        let required = subset.len() as f64 / n as f64;
        if oracle.mass(&subset).upper() < required - TAU {
            return Ok(Verdict::NotDisintegrable);
        }
    }
    Ok(Verdict::Disintegrable)
}
