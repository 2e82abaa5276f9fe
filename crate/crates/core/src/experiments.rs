//! Monte Carlo estimation of disintegration probabilities.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{rate_eps, rate_r, Family, RateParams};
use crate::error::{invalid, Error, Result};
use crate::feasibility::{check, BallCover, CheckMode, CheckOptions, CheckOutcome, GapReport, Verdict};
use crate::spaces::{Point, Space, SpaceDescription, SpaceKind};

/// Confidence level of the reported one-sided upper bound.
pub const CONFIDENCE: f64 = 0.95;

fn default_alpha() -> f64 {
    1.0
}

fn default_h0() -> f64 {
    1.0 / 16.0
}

fn default_refinements() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceDescription,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CheckMode>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Fixed radius for every cell; otherwise `r_mult * rate_r(n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_mult: Option<Vec<f64>>,
    #[serde(default = "default_h0")]
    pub sandwich_h0: f64,
    #[serde(default = "default_refinements")]
    pub sandwich_refinements: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_json: Option<PathBuf>,
    /// Record wall time per cell. Off by default so reports are reproducible.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(space: SpaceDescription, n_grid: Vec<usize>, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            space,
            n_grid,
            trials,
            seed,
            mode: None,
            alpha: 1.0,
            radius: None,
            r_mult: None,
            sandwich_h0: default_h0(),
            sandwich_refinements: default_refinements(),
            out_csv: None,
            out_json: None,
            timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return bad("n_grid must be nonempty with positive entries".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n_grid must be strictly increasing, got {:?}", self.n_grid));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) || !r.is_finite() {
                return bad(format!("radius must be positive, got {r}"));
            }
            if self.r_mult.is_some() {
                return bad("radius and r_mult are mutually exclusive".into());
            }
        }
        if let Some(m) = &self.r_mult {
            if m.is_empty() || m.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return bad(format!("r_mult must hold positive multipliers, got {m:?}"));
            }
        }
        if !(self.sandwich_h0 > 0.0) {
            return bad(format!("sandwich_h0 must be positive, got {}", self.sandwich_h0));
        }
        Ok(())
    }

    pub fn check_options(&self, kind: SpaceKind) -> CheckOptions {
        let mut opts = CheckOptions::new(self.mode.unwrap_or_else(|| CheckMode::default_for(kind)));
        opts.sandwich_h0 = self.sandwich_h0;
        opts.sandwich_refinements = self.sandwich_refinements;
        opts
    }
}

/// Rate parameters read off a space: family, density bounds, dimension and
/// edge count.
pub fn rate_params_for(space: &Space, alpha: f64) -> Option<RateParams> {
    let family = Family::of(space.kind())?;
    let mut p = RateParams::new(family);
    p.alpha = alpha;
    p.c = space.density().lower;
    p.upper = space.density().upper;
    p.dim = space.dim().unwrap_or(1);
    p.edge_count = space.graph_geometry().map_or(1, |g| g.edges().len());
    Some(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialTally {
    pub family: String,
    pub n: usize,
    pub r: f64,
    pub trials: usize,
    pub failures: usize,
    pub inconclusive: usize,
    pub rate_hat: f64,
    /// One-sided upper bound on the failure probability, counting
    /// inconclusive trials as failures.
    pub ci_upper: f64,
    pub eps_n: Option<f64>,
    pub r_formula: Option<f64>,
    pub seconds: Option<f64>,
}

impl TrialTally {
    pub fn from_verdicts(family: &str, n: usize, r: f64, verdicts: &[Verdict]) -> Self {
        let trials = verdicts.len();
        let failures = verdicts.iter().filter(|v| **v == Verdict::NotDisintegrable).count();
        let inconclusive = verdicts.iter().filter(|v| **v == Verdict::Inconclusive).count();
        TrialTally {
            family: family.to_string(),
            n,
            r,
            trials,
            failures,
            inconclusive,
            rate_hat: failures as f64 / trials as f64,
            ci_upper: clopper_pearson_upper(failures + inconclusive, trials, CONFIDENCE),
            eps_n: None,
            r_formula: None,
            seconds: None,
        }
    }
}

/// Exact one-sided Clopper–Pearson upper bound for `k` events in `n` trials:
/// the `p` with `P(Bin(n, p) <= k) = 1 - level`.
pub fn clopper_pearson_upper(k: usize, n: usize, level: f64) -> f64 {
    assert!(k <= n && n > 0, "need 0 <= k <= n and n > 0");
    if k == n {
        return 1.0;
    }
    let tail = 1.0 - level;
    if k == 0 {
        return 1.0 - tail.powf(1.0 / n as f64);
    }
    // P(Bin(n, p) <= k) = 1 - I_p(k + 1, n - k), decreasing in p.
    let (a, b) = ((k + 1) as f64, (n - k) as f64);
    let (mut lo, mut hi) = (k as f64 / n as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - statrs::function::beta::beta_reg(a, b, mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Exact one-sided Clopper–Pearson lower bound for `k` events in `n` trials.
pub fn clopper_pearson_lower(k: usize, n: usize, level: f64) -> f64 {
    assert!(k <= n && n > 0, "need 0 <= k <= n and n > 0");
    if k == 0 {
        0.0
    } else {
        1.0 - clopper_pearson_upper(n - k, n, level)
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for trial `trial` of cell `cell`.
pub fn trial_rng(seed: u64, cell: u64, trial: u64) -> SplitMix64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let h = mix64(seed.wrapping_add(GOLDEN));
    let h = mix64(h ^ cell.wrapping_mul(GOLDEN).wrapping_add(1));
    let h = mix64(h ^ trial.wrapping_mul(GOLDEN).wrapping_add(2));
    SplitMix64::seed_from_u64(h)
}

pub fn trial_sample(space: &Space, n: usize, seed: u64, cell: u64, trial: u64) -> Vec<Point> {
    space.sample_n(n, &mut trial_rng(seed, cell, trial))
}

/// Run one checker; resource-limit errors become inconclusive.
pub fn run_check(space: &Space, centers: Vec<Point>, r: f64, opts: &CheckOptions) -> Result<CheckOutcome> {
    let cover = BallCover::new(space, centers, r)?;
    match check(&cover, opts) {
        Err(Error::ResourceLimit(_)) => Ok(CheckOutcome::Inconclusive(GapReport {
            inner_deficit: f64::NAN,
            outer_slack: f64::NAN,
            grid_h: f64::NAN,
        })),
        other => other,
    }
}

/// One `(n, r)` cell of a sweep, numbered in sweep order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: u64,
    pub n: usize,
    pub r: f64,
    pub r_formula: Option<f64>,
    pub eps_n: Option<f64>,
}

pub fn plan_cells(config: &ExperimentConfig, space: &Space) -> Result<Vec<Cell>> {
    config.validate()?;
    let params = rate_params_for(space, config.alpha);
    let mut cells = Vec::new();
    for &n in &config.n_grid {
        let (r_formula, eps_n) = match &params {
            Some(p) if n >= 2 => (Some(rate_r(p, n as u64)?), Some(rate_eps(p, n as u64)?)),
            _ => (None, None),
        };
        let radii: Vec<f64> = match (config.radius, &config.r_mult, r_formula) {
            (Some(r), _, _) => vec![r],
            (None, Some(m), Some(rf)) => m.iter().map(|x| x * rf).collect(),
            (None, None, Some(rf)) => vec![rf],
            (None, _, None) => {
                return Err(Error::Config(format!(
                    "{} at n = {n} has no rate formula; set an explicit radius",
                    space.kind().name()
                )))
            }
        };
        for r in radii {
            cells.push(Cell {
                index: cells.len() as u64,
                n,
                r,
                r_formula,
                eps_n,
            });
        }
    }
    Ok(cells)
}

/// Verdicts of every trial in a cell, in trial order.
pub fn run_cell(
    space: &Space,
    cell: &Cell,
    trials: usize,
    seed: u64,
    opts: &CheckOptions,
) -> Result<Vec<Verdict>> {
    map_trials(space, cell, trials, seed, |x| {
        run_check(space, x, cell.r, opts).map(|o| o.verdict())
    })
}

/// Apply `f` to every trial sample of a cell in parallel; results come back
/// in trial order.
pub fn map_trials<T, F>(space: &Space, cell: &Cell, trials: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Vec<Point>) -> Result<T> + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|t| f(trial_sample(space, cell.n, seed, cell.index, t)))
        .collect()
}

pub fn run_mc(config: &ExperimentConfig) -> Result<Vec<TrialTally>> {
    let space = config.space.build()?;
    let opts = config.check_options(space.kind());
    let family = Family::of(space.kind()).map_or(space.kind().name(), Family::name);
    let mut out = Vec::new();
    for cell in plan_cells(config, &space)? {
        let start = Instant::now();
        let verdicts = run_cell(&space, &cell, config.trials, config.seed, &opts)?;
        let mut tally = TrialTally::from_verdicts(family, cell.n, cell.r, &verdicts);
        tally.eps_n = cell.eps_n;
        tally.r_formula = cell.r_formula;
        if config.timing {
            tally.seconds = Some(start.elapsed().as_secs_f64());
        }
        out.push(tally);
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 11] = [
    "family", "n", "r", "trials", "failures", "inconclusive", "rate_hat", "ci_upper", "eps_n",
    "r_formula", "seconds",
];

pub fn write_csv<W: Write>(tallies: &[TrialTally], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Internal(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for t in tallies {
        w.write_record([
            t.family.clone(),
            t.n.to_string(),
            t.r.to_string(),
            t.trials.to_string(),
            t.failures.to_string(),
            t.inconclusive.to_string(),
            t.rate_hat.to_string(),
            t.ci_upper.to_string(),
            opt(t.eps_n),
            opt(t.r_formula),
            opt(t.seconds),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct McReport<'a> {
    pub config: &'a ExperimentConfig,
    pub cells: &'a [TrialTally],
}

pub fn write_json<W: Write>(config: &ExperimentConfig, tallies: &[TrialTally], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &McReport { config, cells: tallies })?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRadius {
    /// Largest probed radius with fewer than half the trials disintegrable.
    pub lo: f64,
    /// Smallest probed radius with at least half the trials disintegrable.
    pub hi: f64,
    pub estimate: f64,
    pub evaluations: usize,
}

/// Bisection for the radius at which half the trials are disintegrable. The
/// samples are drawn once and reused at every radius.
#[allow(clippy::too_many_arguments)]
pub fn critical_radius(
    space: &Space,
    n: usize,
    trials: usize,
    tol: f64,
    seed: u64,
    bracket: (f64, f64),
    opts: &CheckOptions,
) -> Result<CriticalRadius> {
    let (mut lo, mut hi) = bracket;
    if trials == 0 || n == 0 {
        return invalid("critical_radius needs n >= 1 and trials >= 1");
    }
    if !(tol > 0.0) || !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return invalid(format!("bad bracket ({lo}, {hi}) or tolerance {tol}"));
    }
    let samples: Vec<Vec<Point>> = (0..trials as u64)
        .map(|t| trial_sample(space, n, seed, 0, t))
        .collect();
    let half_ok = |r: f64| -> Result<bool> {
        let ok: Vec<bool> = samples
            .par_iter()
            .map(|x| run_check(space, x.clone(), r, opts).map(|o| o.verdict() == Verdict::Disintegrable))
            .collect::<Result<_>>()?;
        Ok(2 * ok.iter().filter(|b| **b).count() >= trials)
    };
    let mut evaluations = 2;
    if half_ok(lo)? || !half_ok(hi)? {
        return invalid(format!("radius range ({lo}, {hi}) does not bracket the 50% level"));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if half_ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalRadius {
        lo,
        hi,
        estimate: 0.5 * (lo + hi),
        evaluations,
    })
}

/// Smallest radius, to within `tol`, at which `centers` is disintegrable;
/// returns the feasible end of the final bracket.
pub fn minimal_radius(space: &Space, centers: &[Point], tol: f64, opts: &CheckOptions) -> Result<f64> {
    if !(tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    let feasible = |r: f64| -> Result<bool> {
        Ok(run_check(space, centers.to_vec(), r, opts)?.verdict() == Verdict::Disintegrable)
    };
    let mut hi = space.diameter().max(tol);
    if !feasible(hi)? {
        return Err(Error::Internal(format!("no disintegration even at radius {hi}")));
    }
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid > 0.0 && feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
