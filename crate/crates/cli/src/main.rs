mod input;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use covercheck::bounds::{
    avg_case_gap, rate_best_known, rate_eps, rate_r, Family, LipschitzTestFn, RateParams,
};
use covercheck::certificates::validate_certificate;
use covercheck::experiments::{
    self, clopper_pearson_lower, map_trials, minimal_radius, rate_params_for, run_check, run_mc,
    trial_rng, trial_sample, Cell, ExperimentConfig, CONFIDENCE,
};
use covercheck::feasibility::{
    verify_witness, BallCover, CheckMode, CheckOptions, CheckOutcome, Verdict, TAU,
};
use covercheck::spaces::{Space, SpaceDescription, SpaceKind};
use covercheck::transport::{wasserstein_1d, wasserstein_matching};
use covercheck::Error;

use input::{parse_point, Instance};

#[derive(Parser)]
#[command(name = "covercheck", version, about = "Disintegrations along random ball covers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide one ball cover read from a JSON instance.
    Check(CheckArgs),
    /// Monte Carlo sweep over an n grid.
    Mc(McArgs),
    /// Evaluate the rate formulas.
    Rate(RateArgs),
    /// Wasserstein distance of a random sample against the rate radius.
    Wasserstein(WassersteinArgs),
    /// Average-case Lipschitz bound on a random interval sample.
    LipschitzDemo(LipschitzArgs),
    /// Two-interval space with irrational mass split.
    Counterexample(CounterexampleArgs),
}

#[derive(Args)]
struct CheckerFlags {
    /// connected, arrangement, sandwich or brute.
    #[arg(long)]
    mode: Option<CheckMode>,
    #[arg(long, default_value_t = 1.0 / 16.0)]
    h0: f64,
    #[arg(long, default_value_t = 3)]
    refinements: usize,
}

impl CheckerFlags {
    fn options(&self, kind: SpaceKind) -> CheckOptions {
        let mut o = CheckOptions::new(self.mode.unwrap_or_else(|| CheckMode::default_for(kind)));
        o.sandwich_h0 = self.h0;
        o.sandwich_refinements = self.refinements;
        o
    }
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    checker: CheckerFlags,
    /// Write the certificate here and report its SHA-256.
    #[arg(long)]
    emit_cert: Option<PathBuf>,
    /// Exit 3 unless the verdict is decided and its evidence re-verifies.
    #[arg(long)]
    assert: bool,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    r_mult: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    mode: Option<CheckMode>,
    #[arg(long)]
    timing: bool,
    /// Exit 3 if some cell's failure count is inconsistent with eps(n).
    #[arg(long)]
    assert: bool,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    family: Family,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Density upper bound; defaults to `c`.
    #[arg(long)]
    upper: Option<f64>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    edges: usize,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
}

#[derive(Args)]
struct WassersteinArgs {
    /// Space description JSON; the uniform interval when omitted.
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    p: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    r_mult: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Also compute the discrete matching estimate with this many atoms.
    #[arg(long)]
    matching: Option<usize>,
    #[command(flatten)]
    checker: CheckerFlags,
    /// Exit 3 if W_p exceeds the radius on a disintegrable sample.
    #[arg(long)]
    assert: bool,
}

#[derive(Args)]
struct LipschitzArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 100.0)]
    slope: f64,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 20)]
    pl_count: usize,
    #[arg(long, default_value_t = 8)]
    pl_knots: usize,
    /// Radius as a multiple of rate_r(n); the smallest feasible radius when omitted.
    #[arg(long)]
    r_mult: Option<f64>,
    #[arg(long)]
    assert: bool,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    q: f64,
    #[arg(long, default_value_t = 0.25)]
    radius: f64,
    #[arg(long, value_delimiter = ',', default_value = "5,50,500")]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long)]
    assert: bool,
}

enum Failure {
    Config(String),
    Assert(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_) => {
                Failure::Config(e.to_string())
            }
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Rate(a) => cmd_rate(a),
        Command::Wasserstein(a) => cmd_wasserstein(a),
        Command::LipschitzDemo(a) => cmd_lipschitz(a),
        Command::Counterexample(a) => cmd_counterexample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("covercheck: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Assert(m)) => {
            eprintln!("covercheck: assertion failed: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("covercheck: {m}");
            ExitCode::from(1)
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::Other(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn assert_that(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(Failure::Assert(msg()))
    }
}

fn load_space(path: Option<&PathBuf>) -> Result<Space, Failure> {
    let desc = match path {
        Some(p) => SpaceDescription::load(p)?,
        None => SpaceDescription::Interval { density: None },
    };
    Ok(desc.build()?)
}

fn cmd_check(a: CheckArgs) -> Outcome {
    let inst = Instance::load(&a.instance)?;
    let space = inst.space.build()?;
    let centers = inst
        .centers
        .iter()
        .map(|v| parse_point(space.kind(), v))
        .collect::<covercheck::Result<Vec<_>>>()?;
    let opts = a.checker.options(space.kind());
    let cover = BallCover::new(&space, centers, inst.radius)?;
    let outcome = run_check(&space, cover.centers().to_vec(), inst.radius, &opts)?;
    let mut report = json!({
        "verdict": outcome.verdict().to_string(),
        "mode": opts.mode.name(),
        "n": cover.n(),
        "radius": inst.radius,
    });
    let mut evidence_ok = false;
    match &outcome {
        CheckOutcome::Disintegrable(cert) => {
            let v = validate_certificate(&space, cert)?;
            evidence_ok = v.passed();
            report["validation"] = serde_json::to_value(v).map_err(Error::from)?;
            report["cells"] = json!(cert.cells.len());
            if let Some(path) = &a.emit_cert {
                let bytes = serde_json::to_vec_pretty(cert).map_err(Error::from)?;
                fs::write(path, &bytes)?;
                report["certificate_sha256"] = json!(format!("{:x}", Sha256::digest(&bytes)));
            }
        }
        CheckOutcome::NotDisintegrable(w) => {
            evidence_ok = verify_witness(&cover, w)?;
            report["witness"] = serde_json::to_value(w).map_err(Error::from)?;
            report["witness_verified"] = json!(evidence_ok);
        }
        CheckOutcome::Inconclusive(g) => {
            report["gap"] = serde_json::to_value(g).map_err(Error::from)?;
        }
    }
    print_json(&report)?;
    if a.assert {
        assert_that(evidence_ok, || {
            format!("verdict {} without verified evidence", outcome.verdict())
        })?;
    }
    Ok(())
}

fn cmd_mc(a: McArgs) -> Outcome {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    cfg.seed = a.seed;
    if let Some(g) = a.n_grid {
        cfg.n_grid = g;
    }
    if let Some(m) = a.r_mult {
        cfg.r_mult = Some(m);
        cfg.radius = None;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if a.mode.is_some() {
        cfg.mode = a.mode;
    }
    cfg.timing |= a.timing;
    if a.out.is_some() {
        cfg.out_csv = a.out;
    }
    if a.out_json.is_some() {
        cfg.out_json = a.out_json;
    }
    let tallies = run_mc(&cfg)?;
    if let Some(p) = &cfg.out_csv {
        experiments::write_csv(&tallies, fs::File::create(p)?)?;
    }
    if let Some(p) = &cfg.out_json {
        experiments::write_json(&cfg, &tallies, fs::File::create(p)?)?;
    }
    if cfg.out_csv.is_none() && cfg.out_json.is_none() {
        experiments::write_csv(&tallies, std::io::stdout().lock())?;
    }
    if a.assert {
        for t in &tallies {
            if let Some(eps) = t.eps_n {
                let lower = clopper_pearson_lower(t.failures + t.inconclusive, t.trials, CONFIDENCE);
                assert_that(lower <= eps, || {
                    format!(
                        "n = {}, r = {}: failure rate lower bound {lower} exceeds eps(n) = {eps}",
                        t.n, t.r
                    )
                })?;
            }
        }
    }
    Ok(())
}

fn cmd_rate(a: RateArgs) -> Outcome {
    let params = RateParams {
        family: a.family,
        alpha: a.alpha,
        c: a.c,
        upper: a.upper.unwrap_or(a.c),
        dim: a.dim,
        edge_count: a.edges,
        p: a.p,
    };
    let rows = a
        .n
        .iter()
        .map(|&n| {
            Ok(json!({
                "n": n,
                "r": rate_r(&params, n)?,
                "eps": rate_eps(&params, n)?,
                "best_known": if n >= 3 { Some(rate_best_known(&params, n)?) } else { None },
            }))
        })
        .collect::<covercheck::Result<Vec<Value>>>()?;
    print_json(&json!({ "params": params, "rows": rows }))
}

fn cmd_wasserstein(a: WassersteinArgs) -> Outcome {
    let space = load_space(a.space.as_ref())?;
    let params = rate_params_for(&space, a.alpha).ok_or_else(|| {
        Failure::Config(format!("{} has no rate formula", space.kind().name()))
    })?;
    let r = a.r_mult * rate_r(&params, a.n as u64)?;
    let x = trial_sample(&space, a.n, a.seed, 0, 0);
    let outcome = run_check(&space, x.clone(), r, &a.checker.options(space.kind()))?;
    let disintegrable = outcome.verdict() == Verdict::Disintegrable;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &p in &a.p {
        let w = if space.kind().is_one_dimensional() {
            wasserstein_1d(&space, &x, p)?
        } else if let Some(cert) = outcome.certificate() {
            covercheck::transport::coupling_cost(&space, cert, p)?
        } else {
            continue;
        };
        worst = worst.max(w.value - r);
        rows.push(w);
    }
    let mut report = json!({
        "n": a.n,
        "seed": a.seed,
        "radius": r,
        "verdict": outcome.verdict().to_string(),
        "wasserstein": rows,
    });
    let mut matching_gap = None;
    if let Some(m) = a.matching {
        let wm = wasserstein_matching(&space, &x, m, 1.0)?;
        if space.kind().is_one_dimensional() {
            let w1 = wasserstein_1d(&space, &x, 1.0)?.value;
            matching_gap = Some((wm.value - w1).abs());
        }
        report["matching"] = serde_json::to_value(wm).map_err(Error::from)?;
    }
    print_json(&report)?;
    if a.assert {
        assert_that(!disintegrable || worst <= TAU, || {
            format!("W_p exceeds the radius {r} by {worst}")
        })?;
        if let (Some(g), Some(m)) = (matching_gap, a.matching) {
            assert_that(g <= 2.0 / m as f64, || {
                format!("matching estimate differs from W_1 by {g} > 2/{m}")
            })?;
        }
    }
    Ok(())
}

fn cmd_lipschitz(a: LipschitzArgs) -> Outcome {
    let space = Space::uniform_interval();
    let opts = CheckOptions::new(CheckMode::Connected);
    let x = trial_sample(&space, a.n, a.seed, 0, 0);
    let r = match a.r_mult {
        Some(m) => {
            let params = RateParams::new(Family::Interval);
            m * rate_r(&params, a.n as u64)?
        }
        None => minimal_radius(&space, &x, 1e-9, &opts)?,
    };
    let outcome = run_check(&space, x.clone(), r, &opts)?;
    let mut report = json!({
        "n": a.n,
        "seed": a.seed,
        "radius": r,
        "verdict": outcome.verdict().to_string(),
    });
    let Some(cert) = outcome.certificate() else {
        return print_json(&report);
    };
    let mut fns = vec![
        ("constant".to_string(), LipschitzTestFn::Constant { value: 1.0 }),
        ("spike".to_string(), LipschitzTestFn::spike_between(&x, a.slope, a.eps)?),
    ];
    let mut rng = trial_rng(a.seed, 1, 0);
    let k = a.pl_knots.max(2);
    for j in 0..a.pl_count {
        let knots = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        let values = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        fns.push((format!("piecewise_linear_{j}"), LipschitzTestFn::PiecewiseLinear { knots, values }));
    }
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (name, f) in &fns {
        let g = avg_case_gap(&space, cert, f)?;
        if !g.holds() {
            violations.push(name.clone());
        }
        rows.push(json!({
            "function": name,
            "lhs": g.lhs,
            "cert_term": g.cert_term,
            "rhs_avg": g.rhs_avg,
            "rhs_worst": g.rhs_worst,
            "holds": g.holds(),
        }));
    }
    report["functions"] = json!(rows);
    print_json(&report)?;
    if a.assert {
        assert_that(violations.is_empty(), || {
            format!("lhs > rhs_avg + tau for {}", violations.join(", "))
        })?;
    }
    Ok(())
}

fn cmd_counterexample(a: CounterexampleArgs) -> Outcome {
    let space = Space::two_interval(a.q)?;
    let opts = CheckOptions::new(CheckMode::Arrangement);
    if a.trials == 0 {
        return Err(Failure::Config("trials must be at least 1".into()));
    }
    let mut cells = Vec::new();
    let mut all_ok = true;
    for (index, &n) in a.n_grid.iter().enumerate() {
        let cell = Cell {
            index: index as u64,
            n,
            r: a.radius,
            r_formula: None,
            eps_n: None,
        };
        let results = map_trials(&space, &cell, a.trials, a.seed, |x| {
            let cover = BallCover::new(&space, x.clone(), a.radius)?;
            Ok(match run_check(&space, x, a.radius, &opts)? {
                CheckOutcome::NotDisintegrable(w) => (true, verify_witness(&cover, &w)?),
                _ => (false, false),
            })
        })?;
        let failures = results.iter().filter(|r| r.0).count();
        let verified = results.iter().filter(|r| r.1).count();
        all_ok &= verified == a.trials;
        cells.push(json!({
            "n": n,
            "trials": a.trials,
            "not_disintegrable": failures,
            "witnesses_verified": verified,
            "fraction": failures as f64 / a.trials as f64,
        }));
    }
    print_json(&json!({
        "q": a.q,
        "radius": a.radius,
        "seed": a.seed,
        "cells": cells,
    }))?;
    if a.assert {
        assert_that(all_ok, || "some trial was not refuted by a verified witness".into())?;
    }
    Ok(())
}
