//! Piecewise-constant densities.
//!
//! Values are densities with respect to the space's uniform probability
//! measure, so a uniform space has every value equal to 1.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance on the total integral of a density.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Piecewise-constant function along one 1-D component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pieces {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl Pieces {
    pub fn constant(lo: f64, hi: f64, value: f64) -> Self {
        Pieces {
            breaks: vec![lo, hi],
            values: vec![value],
        }
    }

    pub(crate) fn validate(&self, lo: f64, hi: f64) -> Result<()> {
        if self.values.is_empty() || self.breaks.len() != self.values.len() + 1 {
            return invalid("density pieces need len(breaks) == len(values) + 1 >= 2");
        }
        if self.breaks[0] != lo || *self.breaks.last().unwrap() != hi {
            return invalid(format!(
                "density breakpoints must span [{lo}, {hi}], got [{}, {}]",
                self.breaks[0],
                self.breaks.last().unwrap()
            ));
        }
        if self.breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("density breakpoints must be strictly increasing");
        }
        if self.values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return invalid("density values must be finite and strictly positive");
        }
        Ok(())
    }

    fn piece_index(&self, x: f64) -> usize {
        // partition_point gives the first break > x; piece is the one before it.
        let k = self.breaks.partition_point(|b| *b <= x);
        k.saturating_sub(1).min(self.values.len() - 1)
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.values[self.piece_index(x)]
    }

    /// Integral of the piecewise-constant function over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(self.breaks[0]);
        let hi = b.min(*self.breaks.last().unwrap());
        if !(lo < hi) {
            return 0.0;
        }
        let mut total = 0.0;
        let mut k = self.piece_index(lo);
        while k < self.values.len() && self.breaks[k] < hi {
            let s = self.breaks[k].max(lo);
            let e = self.breaks[k + 1].min(hi);
            if e > s {
                total += self.values[k] * (e - s);
            }
            k += 1;
        }
        total
    }

    pub fn total(&self) -> f64 {
        self.values
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum()
    }
}

/// Density on a unit cube, constant on each box of a regular `per_axis^dim` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDensity {
    pub per_axis: usize,
    /// Row-major with axis 0 varying fastest.
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn uniform() -> Self {
        GridDensity {
            per_axis: 1,
            values: vec![1.0],
        }
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        if self.per_axis == 0 {
            return invalid("grid density needs per_axis >= 1");
        }
        let expect = self
            .per_axis
            .checked_pow(dim as u32)
            .filter(|c| *c <= 1 << 24);
        if expect != Some(self.values.len()) {
            return invalid(format!(
                "grid density needs per_axis^dim = {:?} values, got {}",
                expect,
                self.values.len()
            ));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return invalid("density values must be finite and strictly positive");
        }
        Ok(())
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        let k = self.per_axis;
        let mut idx = 0;
        let mut stride = 1;
        for &c in x {
            let i = ((c * k as f64).floor() as isize).clamp(0, k as isize - 1) as usize;
            idx += i * stride;
            stride *= k;
        }
        self.values[idx]
    }

    /// Exact integral over the box `[lo, hi]` (Lebesgue measure on the cube).
    pub fn integral(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let dim = lo.len();
        let k = self.per_axis;
        let h = 1.0 / k as f64;
        // Per axis: list of (grid index, overlap length).
        let mut axes: Vec<Vec<(usize, f64)>> = Vec::with_capacity(dim);
        for d in 0..dim {
            let a = lo[d].max(0.0);
            let b = hi[d].min(1.0);
            if !(a < b) {
                return 0.0;
            }
            let first = ((a * k as f64).floor() as usize).min(k - 1);
            let last = ((b * k as f64).ceil() as usize).clamp(first + 1, k);
            let ov: Vec<(usize, f64)> = (first..last)
                .filter_map(|i| {
                    let s = (i as f64 * h).max(a);
                    let e = ((i + 1) as f64 * h).min(b);
                    (e > s).then_some((i, e - s))
                })
                .collect();
            if ov.is_empty() {
                return 0.0;
            }
            axes.push(ov);
        }
        let mut total = 0.0;
        let mut pos = vec![0usize; dim];
        loop {
            let mut idx = 0;
            let mut stride = 1;
            let mut vol = 1.0;
            for d in 0..dim {
                let (i, len) = axes[d][pos[d]];
                idx += i * stride;
                stride *= k;
                vol *= len;
            }
            total += self.values[idx] * vol;
            let mut d = 0;
            loop {
                if d == dim {
                    return total;
                }
                pos[d] += 1;
                if pos[d] < axes[d].len() {
                    break;
                }
                pos[d] = 0;
                d += 1;
            }
        }
    }

    pub fn total(&self, dim: usize) -> f64 {
        self.values.iter().sum::<f64>() / (self.per_axis as f64).powi(dim as i32)
    }

    /// Grid lines strictly inside (0, 1) along one axis.
    pub fn interior_lines(&self) -> impl Iterator<Item = f64> + '_ {
        (1..self.per_axis).map(move |i| i as f64 / self.per_axis as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityLayout {
    /// One piecewise function per 1-D component.
    Components(Vec<Pieces>),
    Grid(GridDensity),
}

/// A validated density together with its bounds `c <= f <= C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub layout: DensityLayout,
    pub lower: f64,
    pub upper: f64,
}

impl Density {
    pub(crate) fn from_layout(layout: DensityLayout) -> Self {
        let values: Box<dyn Iterator<Item = &f64>> = match &layout {
            DensityLayout::Components(p) => Box::new(p.iter().flat_map(|p| p.values.iter())),
            DensityLayout::Grid(g) => Box::new(g.values.iter()),
        };
        let (lower, upper) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
        Density {
            layout,
            lower,
            upper,
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.lower == 1.0 && self.upper == 1.0
    }

    pub fn pieces(&self, component: usize) -> &Pieces {
        match &self.layout {
            DensityLayout::Components(p) => &p[component],
            DensityLayout::Grid(_) => panic!("grid density has no 1-D components"),
        }
    }

    pub fn grid(&self) -> Option<&GridDensity> {
        match &self.layout {
            DensityLayout::Grid(g) => Some(g),
            DensityLayout::Components(_) => None,
        }
    }
}
