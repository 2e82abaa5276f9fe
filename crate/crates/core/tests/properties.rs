use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use covercheck::bounds::{
    avg_case_gap, rate_r, sample_gap, Family, LipschitzTestFn, RateParams,
};
use covercheck::certificates::{construct_edf, validate_certificate};
use covercheck::experiments::{run_check, trial_sample};
use covercheck::feasibility::{
    check, check_arrangement, check_bruteforce, check_connected, irreducible_verdict,
    verify_witness, BallCover, CheckMode, CheckOptions, CheckOutcome, Verdict, TAU,
};
use covercheck::flow::{max_flow, FlowNetwork};
use covercheck::spaces::{CubeMetric, GraphGeometry, Pieces, Point, Space};
use covercheck::transport::{coupling_cost, wasserstein_1d, wasserstein_matching};

fn interval_density(rng: &mut SplitMix64) -> Space {
    if rng.gen_bool(0.5) {
        return Space::uniform_interval();
    }
    let k = rng.gen_range(2..5);
    let mut breaks: Vec<f64> = (1..k).map(|_| rng.gen_range(0.05..0.95)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks.insert(0, 0.0);
    breaks.push(1.0);
    let raw: Vec<f64> = (1..breaks.len()).map(|_| rng.gen_range(0.3..2.0)).collect();
    let total: f64 = raw.iter().zip(breaks.windows(2)).map(|(v, w)| v * (w[1] - w[0])).sum();
    let values = raw.iter().map(|v| v / total).collect();
    Space::interval(Some(Pieces { breaks, values })).unwrap()
}

fn spaces(rng: &mut SplitMix64) -> Vec<Space> {
    vec![
        interval_density(rng),
        Space::uniform_circle(),
        Space::graph(GraphGeometry::triangle(), None).unwrap(),
        Space::cube(2, CubeMetric::Linf, None).unwrap(),
        Space::cube(2, CubeMetric::L2, None).unwrap(),
        Space::cube(3, CubeMetric::Linf, None).unwrap(),
        Space::two_interval(std::f64::consts::FRAC_1_SQRT_2).unwrap(),
    ]
}

/// Checker with a definite answer for each space kind.
fn exact_mode(space: &Space) -> CheckMode {
    use covercheck::spaces::SpaceKind::*;
    match space.kind() {
        Interval | Circle => CheckMode::Connected,
        _ => CheckMode::Arrangement,
    }
}

#[test]
fn metric_axioms() {
    let mut rng = SplitMix64::seed_from_u64(1);
    for space in spaces(&mut rng) {
        for _ in 0..10_000 {
            let x = space.sample(&mut rng);
            let y = space.sample(&mut rng);
            let z = space.sample(&mut rng);
            let dxy = space.distance(&x, &y).unwrap();
            let dyx = space.distance(&y, &x).unwrap();
            assert_eq!(space.distance(&x, &x).unwrap(), 0.0);
            assert!(dxy >= 0.0);
            assert!((dxy - dyx).abs() <= 1e-12);
            let via = space.distance(&x, &z).unwrap() + space.distance(&z, &y).unwrap();
            assert!(dxy <= via + 1e-12, "{:?}: {dxy} > {via}", space.kind());
            assert!(dxy <= space.diameter() + 1e-12);
        }
    }
}

#[test]
fn linf_dominated_by_l2() {
    let mut rng = SplitMix64::seed_from_u64(2);
    let linf = Space::cube(3, CubeMetric::Linf, None).unwrap();
    let l2 = Space::cube(3, CubeMetric::L2, None).unwrap();
    for _ in 0..10_000 {
        let x = linf.sample(&mut rng);
        let y = linf.sample(&mut rng);
        assert!(linf.distance(&x, &y).unwrap() <= l2.distance(&x, &y).unwrap());
    }
    let linf2 = Space::cube(2, CubeMetric::Linf, None).unwrap();
    let l22 = Space::cube(2, CubeMetric::L2, None).unwrap();
    for _ in 0..200 {
        let n = rng.gen_range(1..6);
        let x = linf2.sample_n(n, &mut rng);
        let r = rng.gen_range(0.02..0.6);
        let all: Vec<usize> = (0..n).collect();
        let a = l22.union_measure(&x, r, &all).unwrap();
        let b = linf2.union_measure(&x, r, &all).unwrap();
        assert!(a.lower() <= b.upper() + 1e-12);
    }
}

#[test]
fn union_measure_is_monotone() {
    let mut rng = SplitMix64::seed_from_u64(3);
    for k in 0..1_000 {
        let all = spaces(&mut rng);
        let space = &all[k % 4];
        let n = rng.gen_range(1..7);
        let x = space.sample_n(n, &mut rng);
        let r = rng.gen_range(0.01..0.8);
        let r2 = r + rng.gen_range(0.0..0.3);
        let sub: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let sub = if sub.is_empty() { vec![0] } else { sub };
        let full: Vec<usize> = (0..n).collect();
        let m = space.union_measure(&x, r, &sub).unwrap();
        let bigger_r = space.union_measure(&x, r2, &sub).unwrap();
        let bigger_set = space.union_measure(&x, r, &full).unwrap();
        assert!(m.lower() <= bigger_r.upper() + 1e-12, "{:?} r", space.kind());
        assert!(m.lower() <= bigger_set.upper() + 1e-12, "{:?} I", space.kind());
        assert!(m.upper() <= 1.0 + 1e-12);
    }
}

#[test]
fn full_union_is_one_iff_covered() {
    let mut rng = SplitMix64::seed_from_u64(4);
    let space = Space::uniform_interval();
    for _ in 0..1_000 {
        let n = rng.gen_range(1..6);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let r = rng.gen_range(0.05..0.5);
        let pts: Vec<Point> = xs.iter().map(|x| Point::Interval(*x)).collect();
        xs.sort_by(f64::total_cmp);
        let covered = xs[0] - r <= 0.0
            && xs[n - 1] + r >= 1.0
            && xs.windows(2).all(|w| w[1] - w[0] <= 2.0 * r);
        let all: Vec<usize> = (0..n).collect();
        let m = space.union_measure(&pts, r, &all).unwrap().exact().unwrap();
        assert_eq!(covered, m == 1.0, "xs={xs:?} r={r} m={m}");
    }
}

fn check_evidence(space: &Space, x: &[Point], r: f64, out: &CheckOutcome) {
    match out {
        CheckOutcome::Disintegrable(c) => {
            let v = validate_certificate(space, c).unwrap();
            assert!(v.passed(), "{:?} {v:?}", space.kind());
        }
        CheckOutcome::NotDisintegrable(w) => {
            let all = space.union_measure(x, r, &w.subset).unwrap();
            assert!(all.upper() < w.subset.len() as f64 / x.len() as f64 - TAU);
            let cover = BallCover::new(space, x.to_vec(), r).unwrap();
            assert!(verify_witness(&cover, w).unwrap());
        }
        CheckOutcome::Inconclusive(_) => {}
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn evidence_is_sound(seed in any::<u64>(), which in 0usize..7, n in 1usize..9, r in 0.02f64..0.7) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let space = spaces(&mut rng).swap_remove(which);
        let x = space.sample_n(n, &mut rng);
        let cover = BallCover::new(&space, x.clone(), r).unwrap();
        let mut opts = CheckOptions::new(CheckMode::default_for(space.kind()));
        opts.sandwich_refinements = 1;
        let out = check(&cover, &opts).unwrap();
        check_evidence(&space, &x, r, &out);
        if space.kind() != covercheck::spaces::SpaceKind::CubeL2 {
            check_evidence(&space, &x, r, &check_bruteforce(&cover).unwrap());
        }
    }

    #[test]
    fn verdicts_monotone_in_r(seed in any::<u64>(), which in 0usize..4, n in 1usize..10, r in 0.01f64..0.6, dr in 0.0f64..0.3) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let space = spaces(&mut rng).swap_remove(which);
        let x = space.sample_n(n, &mut rng);
        let opts = CheckOptions::new(exact_mode(&space));
        let a = run_check(&space, x.clone(), r, &opts).unwrap().verdict();
        let b = run_check(&space, x, r + dr, &opts).unwrap().verdict();
        prop_assert!(!(a == Verdict::Disintegrable && b == Verdict::NotDisintegrable));
    }

    #[test]
    fn irreducible_subsets_suffice(seed in any::<u64>(), which in 0usize..3, n in 1usize..11, r in 0.01f64..0.4) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let space = spaces(&mut rng).swap_remove(which);
        let x = space.sample_n(n, &mut rng);
        let cover = BallCover::new(&space, x, r).unwrap();
        let full = check_bruteforce(&cover).unwrap().verdict();
        prop_assert_eq!(irreducible_verdict(&cover).unwrap(), full);
    }

    #[test]
    fn l2_certificates_hold_under_linf(seed in any::<u64>(), n in 1usize..6, r in 0.2f64..0.9) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let l2 = Space::cube(2, CubeMetric::L2, None).unwrap();
        let linf = Space::cube(2, CubeMetric::Linf, None).unwrap();
        let x = l2.sample_n(n, &mut rng);
        let cover = BallCover::new(&l2, x.clone(), r).unwrap();
        let mut opts = CheckOptions::new(CheckMode::Sandwich);
        opts.sandwich_refinements = 1;
        if let CheckOutcome::Disintegrable(cert) = check(&cover, &opts).unwrap() {
            prop_assert!(validate_certificate(&linf, &cert).unwrap().passed());
            let other = BallCover::new(&linf, x, r).unwrap();
            prop_assert_eq!(check_arrangement(&other).unwrap().verdict(), Verdict::Disintegrable);
        }
    }

    #[test]
    fn flow_value_plus_deficit_is_demand(seed in any::<u64>(), cells in 1usize..12, balls in 1usize..8) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let raw: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mass: Vec<f64> = raw.iter().map(|m| m / total).collect();
        let arcs: Vec<(usize, usize)> = (0..cells)
            .flat_map(|c| (0..balls).map(move |b| (c, b)))
            .filter(|_| rng.gen_bool(0.4))
            .collect();
        let net = FlowNetwork::new(mass.clone(), balls, arcs.clone());
        let sol = max_flow(&net).unwrap();
        prop_assert!((sol.value + sol.deficit - 1.0).abs() <= 1e-12);
        let mut into_ball = vec![0.0; balls];
        let mut out_of_cell = vec![0.0; cells];
        for (k, &(c, b)) in arcs.iter().enumerate() {
            prop_assert!(sol.arc_flow[k] >= -1e-15);
            into_ball[b] += sol.arc_flow[k];
            out_of_cell[c] += sol.arc_flow[k];
        }
        for b in into_ball {
            prop_assert!(b <= 1.0 / balls as f64 + 1e-12);
        }
        for (c, m) in out_of_cell.iter().zip(&mass) {
            prop_assert!(*c <= m + 1e-12);
        }
    }

    #[test]
    fn edf_and_flow_certificates_agree(seed in any::<u64>(), n in 1usize..12, r in 0.02f64..0.5) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let space = interval_density(&mut rng);
        let x = space.sample_n(n, &mut rng);
        let cover = BallCover::new(&space, x, r).unwrap();
        let flow = check_arrangement(&cover).unwrap();
        let conn = check_connected(&cover).unwrap();
        prop_assert_eq!(flow.verdict(), conn.verdict());
        if let Some(c) = flow.certificate() {
            prop_assert!(validate_certificate(&space, c).unwrap().passed());
            let edf = construct_edf(&cover).unwrap();
            prop_assert!(validate_certificate(&space, &edf).unwrap().passed());
        }
    }

    #[test]
    fn transport_bound_chain(seed in any::<u64>(), which in 0usize..2, n in 2usize..40, r in 0.05f64..0.6) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let space = if which == 0 { interval_density(&mut rng) } else { Space::uniform_circle() };
        let x = space.sample_n(n, &mut rng);
        let out = check_connected(&BallCover::new(&space, x.clone(), r).unwrap()).unwrap();
        let mut last = 0.0;
        for p in [1.0, 2.0, 4.0] {
            let w = wasserstein_1d(&space, &x, p).unwrap().value;
            prop_assert!(w >= last - 1e-12);
            last = w;
            if let Some(cert) = out.certificate() {
                let c = coupling_cost(&space, cert, p).unwrap();
                prop_assert!(w <= c.value + c.error_bound + 1e-9);
                prop_assert!(c.value <= r + 1e-9);
            }
        }
    }

    #[test]
    fn average_case_bound_holds(seed in any::<u64>(), n in 2usize..60, mult in 1.0f64..3.0) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let space = interval_density(&mut rng);
        let x = space.sample_n(n, &mut rng);
        let opts = CheckOptions::new(CheckMode::Connected);
        let r = covercheck::experiments::minimal_radius(&space, &x, 1e-9, &opts).unwrap() * mult;
        let out = run_check(&space, x.clone(), r, &opts).unwrap();
        let cert = out.certificate().unwrap();
        let knots: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
        let values: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fns = [
            LipschitzTestFn::Constant { value: rng.gen_range(-2.0..2.0) },
            LipschitzTestFn::spike_between(&x, 100.0, 0.25).unwrap(),
            LipschitzTestFn::PiecewiseLinear { knots, values },
        ];
        for f in &fns {
            let g = avg_case_gap(&space, cert, f).unwrap();
            prop_assert!(g.holds(), "{f:?}: {g:?}");
            let mid = g.cert_term.unwrap();
            prop_assert!(g.lhs <= mid + 1e-9 && mid <= g.rhs_avg + 1e-9);
        }
    }

    #[test]
    fn spike_beats_worst_case_when_isolated(seed in any::<u64>(), n in 4usize..200, u in 0.0f64..1.0) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let space = Space::uniform_interval();
        let x = space.sample_n(n, &mut rng);
        let f = LipschitzTestFn::spike_between(&x, 100.0, 0.25).unwrap();
        let LipschitzTestFn::Spike { delta, center, .. } = f else { unreachable!() };
        // Ball i meets the open support iff r > |X_i - center| - delta; stay
        // below the second smallest threshold.
        let mut reach: Vec<f64> = x.iter().map(|p| (p.scalar().unwrap() - center).abs() - delta).collect();
        reach.sort_by(f64::total_cmp);
        let r = u * reach[1];
        prop_assume!(r > 0.0);
        let g = sample_gap(&space, &x, r, &f).unwrap();
        prop_assert!(g.rhs_avg < g.rhs_worst, "{g:?}");
    }

    #[test]
    fn matching_error_envelope_halves(seed in any::<u64>(), k in 0usize..3) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let space = Space::uniform_interval();
        let x = space.sample_n(16, &mut rng);
        let w1 = wasserstein_1d(&space, &x, 1.0).unwrap().value;
        let m = 64 << k;
        let err = (wasserstein_matching(&space, &x, m, 1.0).unwrap().value - w1).abs();
        // Quantile atoms sit within W_1 = 1/(4m) of mu.
        prop_assert!(err <= 1.0 / (4.0 * m as f64) + 1e-12, "m={m} err={err}");
    }
}

#[test]
fn crn_verdicts_never_flip() {
    let space = Space::uniform_interval();
    let opts = CheckOptions::new(CheckMode::Connected);
    let radii: Vec<f64> = (1..40).map(|k| k as f64 * 0.005).collect();
    for trial in 0..200 {
        let x = trial_sample(&space, 30, 17, 0, trial);
        let mut seen = false;
        for &r in &radii {
            let v = run_check(&space, x.clone(), r, &opts).unwrap().verdict();
            assert!(!(seen && v == Verdict::NotDisintegrable), "trial {trial} r {r}");
            seen |= v == Verdict::Disintegrable;
        }
    }
}

#[test]
fn rate_decreasing_and_scaling() {
    for family in [Family::Interval, Family::Circle, Family::Graph] {
        let p = RateParams::new(family);
        let mut last = f64::INFINITY;
        for n in 8..5_000u64 {
            let r = rate_r(&p, n).unwrap();
            assert!(r < last);
            last = r;
        }
        for n in [10u64, 100, 1_000, 10_000] {
            let ratio = rate_r(&p, 4 * n).unwrap() / rate_r(&p, n).unwrap();
            let nf = n as f64;
            let shape = ((4.0 * nf).ln() / (4.0 * nf)).sqrt() / (nf.ln() / nf).sqrt();
            assert!((ratio / shape - 1.0).abs() < 0.01);
        }
    }
}

#[test]
fn checkers_agree_on_graph_and_two_interval() {
    let mut rng = SplitMix64::seed_from_u64(9);
    let spaces = [
        Space::graph(GraphGeometry::triangle(), None).unwrap(),
        Space::two_interval(std::f64::consts::FRAC_1_SQRT_2).unwrap(),
    ];
    for k in 0..200 {
        let space = &spaces[k % 2];
        let n = rng.gen_range(1..9);
        let x = space.sample_n(n, &mut rng);
        let r = rng.gen_range(0.02..0.8);
        let cover = BallCover::new(space, x, r).unwrap();
        assert_eq!(
            check_arrangement(&cover).unwrap().verdict(),
            check_bruteforce(&cover).unwrap().verdict()
        );
    }
}
