use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use super::*;
use crate::certificates::validate_certificate;
use crate::spaces::{CubeMetric, GraphGeometry};

fn pts(ys: &[f64]) -> Vec<Point> {
    ys.iter().map(|y| Point::Interval(*y)).collect()
}

fn circ(ys: &[f64]) -> Vec<Point> {
    ys.iter().map(|y| Point::Circle(*y)).collect()
}

#[test]
fn connected_feasible_example() {
    let space = Space::uniform_interval();
    let cover = BallCover::new(&space, pts(&[0.25, 0.75]), 0.25).unwrap();
    let out = check_connected(&cover).unwrap();
    assert_eq!(out.verdict(), Verdict::Disintegrable);
    assert!(validate_certificate(&space, out.certificate().unwrap()).unwrap().passed());
}

#[test]
fn connected_infeasible_example() {
    let space = Space::uniform_interval();
    let cover = BallCover::new(&space, pts(&[0.1, 0.2]), 0.25).unwrap();
    let out = check_connected(&cover).unwrap();
    let w = out.witness().expect("infeasible");
    assert_eq!(w.subset, vec![0, 1]);
    assert!((w.union_mass - 0.45).abs() < 1e-12);
    assert_eq!(w.required_mass, 1.0);
    assert!(verify_witness(&cover, w).unwrap());
}

#[test]
fn connected_rejects_other_spaces() {
    let space = Space::graph(GraphGeometry::triangle(), None).unwrap();
    let cover = BallCover::new(&space, vec![Point::Graph { edge: 0, t: 0.5 }], 0.5).unwrap();
    assert!(matches!(check_connected(&cover), Err(Error::InvalidArgument(_))));
}

#[test]
fn connected_witness_uses_original_indices() {
    let space = Space::uniform_interval();
    let cover = BallCover::new(&space, pts(&[0.9, 0.1, 0.15]), 0.1).unwrap();
    let w = check_connected(&cover).unwrap().witness().cloned().unwrap();
    assert!(verify_witness(&cover, &w).unwrap());
    assert!(w.subset.iter().all(|i| *i < 3));
}

#[test]
fn circle_connected_cases() {
    let space = Space::uniform_circle();
    // Four evenly spaced points, arcs of length 0.5 tile the circle exactly.
    let cover = BallCover::new(&space, circ(&[0.25, 0.75, 1.25, 1.75]), 0.25).unwrap();
    let out = check_connected(&cover).unwrap();
    assert_eq!(out.verdict(), Verdict::Disintegrable);
    // Clustered near the wrap point.
    let cover = BallCover::new(&space, circ(&[1.95, 0.05, 0.1]), 0.2).unwrap();
    let w = check_connected(&cover).unwrap().witness().cloned().unwrap();
    assert_eq!(w.subset, vec![0, 1, 2]);
    assert!(verify_witness(&cover, &w).unwrap());
    // Single point with a full-circle ball.
    let cover = BallCover::new(&space, circ(&[0.3]), 1.0).unwrap();
    assert_eq!(check_connected(&cover).unwrap().verdict(), Verdict::Disintegrable);
    let cover = BallCover::new(&space, circ(&[0.3]), 0.9).unwrap();
    assert_eq!(check_connected(&cover).unwrap().verdict(), Verdict::NotDisintegrable);
}

#[test]
fn arrangement_matches_examples() {
    let space = Space::uniform_interval();
    let cover = BallCover::new(&space, pts(&[0.25, 0.75]), 0.25).unwrap();
    assert_eq!(check_arrangement(&cover).unwrap().verdict(), Verdict::Disintegrable);
    let cover = BallCover::new(&space, pts(&[0.1, 0.2]), 0.25).unwrap();
    let w = check_arrangement(&cover).unwrap().witness().cloned().unwrap();
    assert_eq!(w.subset, vec![0, 1]);
}

#[test]
fn arrangement_cell_limit() {
    let space = Space::uniform_interval();
    let cover = BallCover::new(&space, pts(&[0.2, 0.5, 0.8]), 0.1).unwrap();
    let limits = Limits {
        max_cells: 3,
        max_membership_bits: 1000,
    };
    assert!(matches!(
        check_arrangement_with(&cover, &limits),
        Err(Error::ResourceLimit(_))
    ));
}

#[test]
fn arrangement_cells_partition_and_respect_balls() {
    let space = Space::graph(GraphGeometry::triangle(), None).unwrap();
    let centers = vec![
        Point::Graph { edge: 0, t: 0.2 },
        Point::Graph { edge: 2, t: 0.9 },
    ];
    let cover = BallCover::new(&space, centers.clone(), 0.2).unwrap();
    let arr = build_arrangement(&cover, &Limits::default()).unwrap();
    let total: f64 = arr.cells.iter().map(|c| c.mass).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for (cell, set) in arr.cells.iter().zip(&arr.members) {
        let crate::certificates::Region::Segment { component, lo, hi } = cell.region else {
            panic!()
        };
        let mid = space.point_at(component, 0.5 * (lo + hi));
        for (i, c) in centers.iter().enumerate() {
            let inside = space.distance(c, &mid).unwrap() <= 0.2;
            assert_eq!(set.contains(i), inside);
        }
    }
}

#[test]
fn sandwich_examples() {
    let space = Space::cube(2, CubeMetric::Linf, None).unwrap();
    let c = vec![Point::Cube(vec![0.5, 0.5])];
    for h in [0.5, 0.1, 1.0 / 16.0] {
        let cover = BallCover::new(&space, c.clone(), 0.6).unwrap();
        assert_eq!(check_sandwich(&cover, h, 0).unwrap().verdict(), Verdict::Disintegrable);
    }
    let cover = BallCover::new(&space, c.clone(), 0.25).unwrap();
    let out = check_sandwich(&cover, 1.0 / 16.0, 2).unwrap();
    let w = out.witness().unwrap();
    assert!(w.union_mass <= 0.5625 + 1e-12);
    assert!(verify_witness(&cover, w).unwrap());
}

#[test]
fn sandwich_argument_errors() {
    let space = Space::cube(2, CubeMetric::L2, None).unwrap();
    let cover = BallCover::new(&space, vec![Point::Cube(vec![0.5, 0.5])], 0.3).unwrap();
    assert!(matches!(check_sandwich(&cover, 0.0, 1), Err(Error::InvalidArgument(_))));
    assert!(matches!(check_sandwich(&cover, 0.1, -1), Err(Error::InvalidArgument(_))));
    let line = Space::uniform_interval();
    let cover = BallCover::new(&line, pts(&[0.5]), 0.3).unwrap();
    assert!(matches!(check_sandwich(&cover, 0.1, 1), Err(Error::InvalidArgument(_))));
}

#[test]
fn sandwich_euclidean_inconclusive_reports_gap() {
    let space = Space::cube(2, CubeMetric::L2, None).unwrap();
    // Four balls reaching exactly to the corners of their quadrants.
    let r = (2.0f64).sqrt() / 4.0;
    let centers = [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]]
        .iter()
        .map(|c| Point::Cube(c.to_vec()))
        .collect();
    let cover = BallCover::new(&space, centers, r).unwrap();
    match check_sandwich(&cover, 0.25, 1).unwrap() {
        CheckOutcome::Inconclusive(g) => {
            assert!(g.outer_slack > 0.0);
            assert_eq!(g.grid_h, 0.125);
        }
        CheckOutcome::Disintegrable(c) => {
            assert!(validate_certificate(&space, &c).unwrap().passed())
        }
        CheckOutcome::NotDisintegrable(w) => panic!("unexpected witness {w:?}"),
    }
}

#[test]
fn brute_single_covering_ball() {
    let space = Space::uniform_interval();
    let cover = BallCover::new(&space, pts(&[0.5]), 0.5).unwrap();
    assert_eq!(check_bruteforce(&cover).unwrap().verdict(), Verdict::Disintegrable);
}

#[test]
fn brute_limits() {
    let space = Space::uniform_interval();
    let cover = BallCover::new(&space, pts(&[0.5; 21]), 0.5).unwrap();
    assert!(matches!(check_bruteforce(&cover), Err(Error::ResourceLimit(_))));
    let l2 = Space::cube(2, CubeMetric::L2, None).unwrap();
    let cover = BallCover::new(&l2, vec![Point::Cube(vec![0.5, 0.5])], 1.0).unwrap();
    assert!(matches!(check_bruteforce(&cover), Err(Error::InvalidArgument(_))));
}

#[test]
fn two_interval_always_fails() {
    let q = std::f64::consts::FRAC_1_SQRT_2;
    let space = Space::two_interval(q).unwrap();
    let mut rng = SplitMix64::seed_from_u64(11);
    for n in [2usize, 5, 9] {
        for _ in 0..10 {
            let centers = space.sample_n(n, &mut rng);
            let cover = BallCover::new(&space, centers.clone(), 0.25).unwrap();
            let left: Vec<usize> = (0..n)
                .filter(|i| centers[*i].scalar().unwrap() < 0.0)
                .collect();
            let right: Vec<usize> = (0..n).filter(|i| !left.contains(i)).collect();
            for out in [check_bruteforce(&cover).unwrap(), check_arrangement(&cover).unwrap()] {
                let w = out.witness().expect("never disintegrable").clone();
                assert!(verify_witness(&cover, &w).unwrap());
            }
            // One side of the split always violates the subset condition on its own.
            let side_fails = |side: &Vec<usize>| {
                !side.is_empty()
                    && witness_on(&space, &cover, side.clone()).unwrap().is_some()
            };
            assert!(side_fails(&left) || side_fails(&right));
        }
    }
}

#[test]
fn irreducible_subsets() {
    let space = Space::uniform_interval();
    let cover = BallCover::new(&space, pts(&[0.1, 0.2, 0.8]), 0.1).unwrap();
    assert!(is_irreducible(&cover, &[0, 1]).unwrap());
    assert!(!is_irreducible(&cover, &[0, 2]).unwrap());
    assert!(!is_irreducible(&cover, &[0, 1, 2]).unwrap());
    assert_eq!(irreducible_verdict(&cover).unwrap(), Verdict::NotDisintegrable);
}

#[test]
fn mode_parsing() {
    assert_eq!("brute".parse::<CheckMode>().unwrap(), CheckMode::Brute);
    assert_eq!("sandwich".parse::<CheckMode>().unwrap(), CheckMode::Sandwich);
    assert!("fast".parse::<CheckMode>().is_err());
}

#[test]
fn checkers_agree_on_random_intervals() {
    let space = Space::interval(Some(crate::spaces::Pieces {
        breaks: vec![0.0, 0.3, 1.0],
        values: vec![1.5, 0.55 / 0.7],
    }))
    .unwrap();
    let mut rng = SplitMix64::seed_from_u64(5);
    for k in 0..150 {
        let n = 1 + k % 10;
        let centers = space.sample_n(n, &mut rng);
        let r = 0.02 + 0.3 * (k as f64 / 150.0);
        let cover = BallCover::new(&space, centers, r).unwrap();
        let a = check_connected(&cover).unwrap();
        let b = check_arrangement(&cover).unwrap();
        let c = check_bruteforce(&cover).unwrap();
        assert_eq!(a.verdict(), b.verdict(), "case {k}");
        assert_eq!(a.verdict(), c.verdict(), "case {k}");
        assert_ne!(a.verdict(), Verdict::Inconclusive);
    }
}
