//! Wasserstein distances between `mu` and an empirical measure.

use serde::Serialize;

use crate::certificates::{validate_certificate, Certificate, Region};
use crate::error::{invalid, Result};
use crate::spaces::{box_max_distance, Geometry, Point, Space, SpaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    QuantileExact,
    CertificateUpper,
    MatchingDiscrete,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::QuantileExact => "quantile_exact",
            Method::CertificateUpper => "certificate_upper",
            Method::MatchingDiscrete => "matching_discrete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WassersteinResult {
    pub p: f64,
    pub value: f64,
    pub method: Method,
    /// Bound on the error from cell representatives; 0 when exact.
    pub error_bound: f64,
}

pub const MAX_P: f64 = 8.0;
pub const MAX_MATCHING_ATOMS: usize = 512;

fn check_p(p: f64) -> Result<()> {
    if !(1.0..=MAX_P).contains(&p) {
        return invalid(format!("p must lie in [1, {MAX_P}], got {p}"));
    }
    Ok(())
}

/// `int_a^b |x - y|^p dx`.
fn abs_power_integral(a: f64, b: f64, y: f64, p: f64) -> f64 {
    let g = |t: f64| t.signum() * t.abs().powf(p + 1.0) / (p + 1.0);
    g(b - y) - g(a - y)
}

/// Density pieces of a 1-D space laid out along the real line.
struct LinePieces {
    /// `(a, b, density per unit coordinate, cumulative mass at b)`.
    pieces: Vec<(f64, f64, f64, f64)>,
}

impl LinePieces {
    fn new(space: &Space) -> Self {
        let mut pieces = Vec::new();
        let mut cum = 0.0;
        for (k, c) in space.components().iter().enumerate() {
            let dp = space.density().pieces(k);
            for (v, w) in dp.values.iter().zip(dp.breaks.windows(2)) {
                let rho = v * c.weight;
                cum += rho * (w[1] - w[0]);
                pieces.push((w[0], w[1], rho, cum));
            }
        }
        // Absorb rounding so the last piece ends at mass exactly 1.
        if let Some(last) = pieces.last_mut() {
            last.3 = 1.0;
        }
        LinePieces { pieces }
    }

    fn piece_start_mass(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.pieces[j - 1].3
        }
    }

    /// Quantile `F^{-1}(u)` for `u in [0, 1]` and the piece holding it.
    fn quantile0(&self, u: f64) -> (usize, f64) {
        let j = self
            .pieces
            .partition_point(|p| p.3 < u)
            .min(self.pieces.len() - 1);
        let (a, b, rho, _) = self.pieces[j];
        let x = a + (u - self.piece_start_mass(j)) / rho;
        (j, x.clamp(a, b))
    }

    /// `int_{u0}^{u1} |F^{-1}(u) - y|^p du` for `0 <= u0 <= u1 <= 1`.
    fn cost(&self, u0: f64, u1: f64, y: f64, p: f64) -> f64 {
        if u1 <= u0 {
            return 0.0;
        }
        let (j0, x0) = self.quantile0(u0);
        let (j1, x1) = self.quantile0(u1);
        let mut total = 0.0;
        for j in j0..=j1 {
            let (a, b, rho, _) = self.pieces[j];
            let lo = if j == j0 { x0 } else { a };
            let hi = if j == j1 { x1 } else { b };
            if hi > lo {
                total += rho * abs_power_integral(lo, hi, y, p);
            }
        }
        total
    }
}

fn scalars(space: &Space, sample: &[Point]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return invalid("sample must be nonempty");
    }
    let mut ys = Vec::with_capacity(sample.len());
    for pt in sample {
        space.check_point(pt)?;
        ys.push(pt.scalar().expect("1-D point"));
    }
    ys.sort_by(f64::total_cmp);
    Ok(ys)
}

/// `W_p^p` on the line: bucket `k` of the quantile range goes to `y_k`.
fn line_cost(lp: &LinePieces, ys: &[f64], p: f64) -> f64 {
    let n = ys.len() as f64;
    ys.iter()
        .enumerate()
        .map(|(k, y)| lp.cost(k as f64 / n, (k + 1) as f64 / n, *y, p))
        .sum()
}

/// `W_p^p` on the circle for a fixed shift `theta` of the empirical quantile.
fn circle_cost(lp: &LinePieces, ys: &[f64], p: f64, theta: f64) -> f64 {
    let n = ys.len();
    let nf = n as f64;
    // Empirical lifted quantile on v = u + theta: atom index floor(n v).
    let first = (theta * nf).floor() as i64;
    let last = ((1.0 + theta) * nf).ceil() as i64;
    let mut total = 0.0;
    for k in first..last {
        let v0 = k as f64 / nf;
        let v1 = (k + 1) as f64 / nf;
        let u0 = (v0 - theta).max(0.0);
        let u1 = (v1 - theta).min(1.0);
        if u1 <= u0 {
            continue;
        }
        let wraps = k.div_euclid(n as i64);
        let y = ys[k.rem_euclid(n as i64) as usize] + 2.0 * wraps as f64;
        total += lp.cost(u0, u1, y, p);
    }
    total
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a < 1e-13 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Exact `W_p(mu, empirical)` on the interval and the two-interval line; on
/// the circle, minimised over the rotation of the lifted quantile coupling.
pub fn wasserstein_1d(space: &Space, sample: &[Point], p: f64) -> Result<WassersteinResult> {
    check_p(p)?;
    if !matches!(
        space.kind(),
        SpaceKind::Interval | SpaceKind::Circle | SpaceKind::TwoInterval
    ) {
        return invalid(format!(
            "wasserstein_1d does not support {} spaces",
            space.kind().name()
        ));
    }
    let lp = LinePieces::new(space);
    let ys = scalars(space, sample)?;
    let cost = match space.kind() {
        SpaceKind::Interval | SpaceKind::TwoInterval => line_cost(&lp, &ys, p),
        SpaceKind::Circle => {
            let n = ys.len() as i64;
            let step = 1.0 / n as f64;
            let mut best = (0.0, f64::INFINITY);
            for k in -n..=n {
                let t = k as f64 * step;
                let c = circle_cost(&lp, &ys, p, t);
                if c < best.1 {
                    best = (t, c);
                }
            }
            let (lo, hi) = ((best.0 - step).max(-1.0), (best.0 + step).min(1.0));
            let refined = golden_min(|t| circle_cost(&lp, &ys, p, t), lo, hi);
            best.1.min(refined.1)
        }
        _ => unreachable!(),
    };
    Ok(WassersteinResult {
        p,
        value: cost.max(0.0).powf(1.0 / p),
        method: Method::QuantileExact,
        error_bound: 0.0,
    })
}

/// `int_cell d(x, center)^p dmu(x)` over a segment cell, split at density breaks.
fn segment_moment(space: &Space, center: &Point, component: usize, lo: f64, hi: f64, p: f64) -> f64 {
    let pieces = space.density().pieces(component);
    let w = space.components()[component].weight;
    let mut total = 0.0;
    for (v, br) in pieces.values.iter().zip(pieces.breaks.windows(2)) {
        let a = br[0].max(lo);
        let b = br[1].min(hi);
        if b > a {
            total += v * w * space.segment_power_integral(center, component, a, b, p);
        }
    }
    total
}

/// Cost of the coupling `(1/n) sum_i mu_i x delta_{X_i}`. Exact on 1-D cells;
/// cube boxes use their midpoints, with the largest half-diameter reported.
pub fn coupling_cost(space: &Space, cert: &Certificate, p: f64) -> Result<WassersteinResult> {
    check_p(p)?;
    let report = validate_certificate(space, cert)?;
    if !report.passed() {
        return invalid(format!("certificate fails validation: {report:?}"));
    }
    let mut total = 0.0;
    let mut error_bound: f64 = 0.0;
    for (i, comp) in cert.components.iter().enumerate() {
        let center = &cert.centers[i];
        for &(k, m) in comp {
            if m <= 0.0 {
                continue;
            }
            let cell = &cert.cells[k];
            match &cell.region {
                Region::Segment { component, lo, hi } => {
                    let moment = segment_moment(space, center, *component, *lo, *hi, p);
                    total += m * moment / cell.mass;
                }
                Region::Box { lo, hi } => {
                    let Geometry::Cube { metric, .. } = space.geometry() else {
                        return invalid("box cell on a non-cube space");
                    };
                    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                    let Point::Cube(c) = center else {
                        return invalid("cube cell with a non-cube centre");
                    };
                    let d = crate::spaces::cube_distance(*metric, &mid, c);
                    total += m * d.powf(p);
                    error_bound = error_bound.max(box_max_distance(*metric, &mid, lo, hi));
                }
            }
        }
    }
    let value = (total / cert.n as f64).max(0.0).powf(1.0 / p);
    Ok(WassersteinResult {
        p,
        value,
        method: Method::CertificateUpper,
        error_bound,
    })
}

/// Minimum-cost perfect assignment on a square matrix (Hungarian method with
/// potentials). Returns the assignment of rows to columns and its cost.
pub fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut way = vec![0usize; n + 1];
    // col_match[j] = row (1-based) matched to column j; 0 is the dummy.
    let mut col_match = vec![0usize; n + 1];
    for i in 1..=n {
        col_match[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_match[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_match[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_match[j0] = col_match[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[col_match[j] - 1] = j - 1;
    }
    let total = assign.iter().enumerate().map(|(i, j)| cost[i][*j]).sum();
    (assign, total)
}

/// Equal-mass atoms approximating `mu`: quantile midpoints on 1-D spaces, grid
/// centres on a uniform cube (`m` must be a perfect power of the dimension).
fn atoms(space: &Space, m: usize) -> Result<Vec<Point>> {
    match space.geometry() {
        Geometry::Interval | Geometry::Circle | Geometry::TwoInterval { .. } => {
            let lp = LinePieces::new(space);
            Ok((0..m)
                .map(|k| {
                    let (j, x) = lp.quantile0((k as f64 + 0.5) / m as f64);
                    let comp = component_of(space, j);
                    space.point_at(comp, x)
                })
                .collect())
        }
        Geometry::Cube { dim, .. } => {
            if !space.density().is_uniform() {
                return invalid("matching atoms on the cube need a uniform density");
            }
            let k = (m as f64).powf(1.0 / *dim as f64).round() as usize;
            if k.pow(*dim as u32) != m {
                return invalid(format!("m = {m} is not a {dim}-th power"));
            }
            let mut out = Vec::with_capacity(m);
            let mut pos = vec![0usize; *dim];
            for _ in 0..m {
                out.push(Point::Cube(
                    pos.iter().map(|p| (*p as f64 + 0.5) / k as f64).collect(),
                ));
                for p in pos.iter_mut() {
                    *p += 1;
                    if *p < k {
                        break;
                    }
                    *p = 0;
                }
            }
            Ok(out)
        }
        Geometry::Graph(_) => invalid("matching atoms are not defined on graph spaces"),
    }
}

fn component_of(space: &Space, piece: usize) -> usize {
    let mut seen = 0;
    for k in 0..space.components().len() {
        seen += space.density().pieces(k).values.len();
        if piece < seen {
            return k;
        }
    }
    space.components().len() - 1
}

/// Exact assignment cost between `m` equal-mass atoms of `mu` and the sample,
/// each sample point repeated `m / n` times.
pub fn wasserstein_matching(
    space: &Space,
    sample: &[Point],
    m: usize,
    p: f64,
) -> Result<WassersteinResult> {
    check_p(p)?;
    let n = sample.len();
    if n == 0 || m == 0 || m > MAX_MATCHING_ATOMS || m % n != 0 {
        return invalid(format!(
            "matching needs 0 < m <= {MAX_MATCHING_ATOMS} and n | m, got m = {m}, n = {n}"
        ));
    }
    for pt in sample {
        space.check_point(pt)?;
    }
    let atoms = atoms(space, m)?;
    let rep = m / n;
    let cost: Vec<Vec<f64>> = atoms
        .iter()
        .map(|a| {
            (0..m)
                .map(|j| space.distance_unchecked(a, &sample[j / rep]).powf(p))
                .collect()
        })
        .collect();
    let (_, total) = hungarian(&cost);
    Ok(WassersteinResult {
        p,
        value: (total / m as f64).max(0.0).powf(1.0 / p),
        method: Method::MatchingDiscrete,
        error_bound: 0.0,
    })
}
