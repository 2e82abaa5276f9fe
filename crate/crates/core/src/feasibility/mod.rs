//! Deciding whether `mu` disintegrates along the ball cover `x -> {i : x in B(X_i, r)}`
//! with respect to the uniform measure on `[n]`, i.e. whether
//! `mu(union_{i in I} B(X_i, r)) >= |I| / n` for every nonempty `I`.

mod arrangement;
mod brute;
mod connected;
mod sandwich;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::certificates::{validate_certificate, Certificate};
use crate::error::{invalid, Error, Result};
use crate::spaces::{Point, Space, SpaceKind};

pub use arrangement::{build_arrangement, check_arrangement, check_arrangement_with, ArrangementCells, Limits};
pub use brute::{check_bruteforce, irreducible_verdict, is_irreducible, MAX_BRUTE_N};
pub use connected::{check_connected, connected_max_deficit};
pub use sandwich::check_sandwich;

/// Absolute tolerance on every mass comparison.
pub const TAU: f64 = 1e-9;

/// `n` centres and a common radius.
#[derive(Debug, Clone)]
pub struct BallCover<'a> {
    space: &'a Space,
    centers: Vec<Point>,
    radius: f64,
    order: Vec<usize>,
}

impl<'a> BallCover<'a> {
    pub fn new(space: &'a Space, centers: Vec<Point>, radius: f64) -> Result<Self> {
        if centers.is_empty() {
            return invalid("a ball cover needs at least one centre");
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return invalid(format!("radius must be positive and finite, got {radius}"));
        }
        for p in &centers {
            space.check_point(p)?;
        }
        let mut order: Vec<usize> = (0..centers.len()).collect();
        if matches!(
            space.kind(),
            SpaceKind::Interval | SpaceKind::Circle | SpaceKind::TwoInterval
        ) {
            let key = |i: usize| centers[i].scalar().unwrap_or(0.0);
            order.sort_by(|a, b| key(*a).total_cmp(&key(*b)).then(a.cmp(b)));
        }
        Ok(BallCover {
            space,
            centers,
            radius,
            order,
        })
    }

    /// Same centres, different radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return invalid(format!("radius must be positive and finite, got {radius}"));
        }
        Ok(BallCover {
            radius,
            ..self.clone()
        })
    }

    pub fn space(&self) -> &'a Space {
        self.space
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    /// Indices ordered by coordinate (ties by index); identity on graphs and cubes.
    pub fn sorted_order(&self) -> &[usize] {
        &self.order
    }
}

/// A subset `I` with `mu(union of its balls) < |I| / n - TAU`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetWitness {
    /// Ball indices, ascending, 0-based.
    pub subset: Vec<usize>,
    /// Exact union mass, or an upper bound on it.
    pub union_mass: f64,
    pub required_mass: f64,
}

impl SubsetWitness {
    pub fn deficit(&self) -> f64 {
        self.required_mass - self.union_mass
    }
}

/// What an undecided check could establish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    /// Unmet demand in the inner (or exact) model.
    pub inner_deficit: f64,
    /// Mass of cells the outer model adds to the inner one.
    pub outer_slack: f64,
    /// Grid step of the last model tried; 0 for exact models.
    pub grid_h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    Disintegrable(Certificate),
    NotDisintegrable(SubsetWitness),
    Inconclusive(GapReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Disintegrable,
    NotDisintegrable,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Disintegrable => "disintegrable",
            Verdict::NotDisintegrable => "not_disintegrable",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

impl CheckOutcome {
    pub fn verdict(&self) -> Verdict {
        match self {
            CheckOutcome::Disintegrable(_) => Verdict::Disintegrable,
            CheckOutcome::NotDisintegrable(_) => Verdict::NotDisintegrable,
            CheckOutcome::Inconclusive(_) => Verdict::Inconclusive,
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            CheckOutcome::Disintegrable(c) => Some(c),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<&SubsetWitness> {
        match self {
            CheckOutcome::NotDisintegrable(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Connected,
    Arrangement,
    Sandwich,
    Brute,
}

impl CheckMode {
    pub fn name(self) -> &'static str {
        match self {
            CheckMode::Connected => "connected",
            CheckMode::Arrangement => "arrangement",
            CheckMode::Sandwich => "sandwich",
            CheckMode::Brute => "brute",
        }
    }

    /// The cheapest exact-or-sound checker for a space kind.
    pub fn default_for(kind: SpaceKind) -> CheckMode {
        match kind {
            SpaceKind::Interval | SpaceKind::Circle => CheckMode::Connected,
            SpaceKind::Graph | SpaceKind::TwoInterval => CheckMode::Arrangement,
            SpaceKind::CubeLinf | SpaceKind::CubeL2 => CheckMode::Sandwich,
        }
    }
}

impl FromStr for CheckMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "connected" => Ok(CheckMode::Connected),
            "arrangement" => Ok(CheckMode::Arrangement),
            "sandwich" => Ok(CheckMode::Sandwich),
            "brute" | "bruteforce" => Ok(CheckMode::Brute),
            other => invalid(format!("unknown checker mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub mode: CheckMode,
    pub sandwich_h0: f64,
    pub sandwich_refinements: usize,
    pub limits: Limits,
}

impl CheckOptions {
    pub fn new(mode: CheckMode) -> Self {
        CheckOptions {
            mode,
            sandwich_h0: 1.0 / 16.0,
            sandwich_refinements: 3,
            limits: Limits::default(),
        }
    }
}

pub fn check(cover: &BallCover, opts: &CheckOptions) -> Result<CheckOutcome> {
    match opts.mode {
        CheckMode::Connected => check_connected(cover),
        CheckMode::Arrangement => check_arrangement_with(cover, &opts.limits),
        CheckMode::Sandwich => check_sandwich_with(cover, opts),
        CheckMode::Brute => check_bruteforce(cover),
    }
}

fn check_sandwich_with(cover: &BallCover, opts: &CheckOptions) -> Result<CheckOutcome> {
    sandwich::check_sandwich_limited(
        cover,
        opts.sandwich_h0,
        opts.sandwich_refinements as i64,
        &opts.limits,
    )
}

/// Build a witness for `subset` if its union mass (or upper bound) falls
/// short of `|I| / n` by more than `TAU`, recomputing the mass on `space`.
pub(crate) fn witness_on(
    space: &Space,
    cover: &BallCover,
    mut subset: Vec<usize>,
) -> Result<Option<SubsetWitness>> {
    subset.sort_unstable();
    subset.dedup();
    if subset.is_empty() {
        return Ok(None);
    }
    let union_mass = space
        .union_measure(cover.centers(), cover.radius(), &subset)?
        .upper();
    let required_mass = subset.len() as f64 / cover.n() as f64;
    Ok((union_mass < required_mass - TAU).then_some(SubsetWitness {
        subset,
        union_mass,
        required_mass,
    }))
}

/// Independent recheck of a witness against `union_measure`.
pub fn verify_witness(cover: &BallCover, w: &SubsetWitness) -> Result<bool> {
    if w.subset.is_empty() || w.subset.iter().any(|i| *i >= cover.n()) {
        return Ok(false);
    }
    let m = cover
        .space()
        .union_measure(cover.centers(), cover.radius(), &w.subset)?;
    let required = w.subset.len() as f64 / cover.n() as f64;
    Ok(m.upper() < required - TAU && (required - w.required_mass).abs() < 1e-15)
}

/// Keep a certificate only if it validates; otherwise report the gap.
pub(crate) fn accept_certificate(
    space: &Space,
    cert: Certificate,
    gap: GapReport,
) -> Result<CheckOutcome> {
    let report = validate_certificate(space, &cert)?;
    Ok(if report.passed() {
        CheckOutcome::Disintegrable(cert)
    } else {
        CheckOutcome::Inconclusive(gap)
    })
}

#[cfg(test)]
mod tests;
