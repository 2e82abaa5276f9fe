//! Max-flow over the bipartite network
//! `source -> cell (mass) -> ball (unbounded) -> sink (1/n)`.
//!
//! Capacities are solved in integers over a common denominator when every
//! cell mass is a dyadic rational that, together with `1/n`, fits under
//! `2^62` and the masses sum to exactly one; otherwise in floating point.

use std::collections::VecDeque;
use std::ops::{Add, Sub};

use crate::error::{Error, Result};

/// Residual capacities at or below this are treated as zero in float mode.
pub const FLOAT_EPS: f64 = 1e-15;

/// Float-mode deficits below this are rounding noise.
pub const SATURATION_SLACK: f64 = 1e-12;

const MAX_SCALE: u128 = 1 << 62;

/// Bipartite feasibility network. Every ball has capacity `1 / n_balls`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    pub cell_mass: Vec<f64>,
    pub n_balls: usize,
    /// `(cell, ball)` pairs, meaning the cell lies inside the ball.
    pub arcs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub value: f64,
    /// Flow on each entry of `FlowNetwork::arcs`.
    pub arc_flow: Vec<f64>,
    /// Total demand minus value.
    pub deficit: f64,
    /// Integer arithmetic was used.
    pub exact: bool,
    /// Common denominator of the integer capacities (exact mode only).
    pub scale: Option<u64>,
    cell_reachable: Vec<bool>,
    ball_reachable: Vec<bool>,
}

impl FlowSolution {
    /// All demand is met: exactly in integer mode, up to float noise otherwise.
    pub fn is_saturated(&self) -> bool {
        if self.exact {
            self.deficit == 0.0
        } else {
            self.deficit <= SATURATION_SLACK
        }
    }

    pub fn cell_reachable(&self) -> &[bool] {
        &self.cell_reachable
    }
}

impl FlowNetwork {
    pub fn new(cell_mass: Vec<f64>, n_balls: usize, arcs: Vec<(usize, usize)>) -> Self {
        FlowNetwork {
            cell_mass,
            n_balls,
            arcs,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_balls == 0 {
            return Err(Error::InvalidArgument("flow network needs at least one ball".into()));
        }
        if let Some(&(c, b)) = self
            .arcs
            .iter()
            .find(|(c, b)| *c >= self.cell_mass.len() || *b >= self.n_balls)
        {
            return Err(Error::InvalidArgument(format!("arc ({c}, {b}) out of range")));
        }
        if self.cell_mass.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidArgument("cell masses must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Common denominator and integer capacities, if the network is exactly representable.
    fn integer_scaling(&self) -> Option<(u64, Vec<i64>)> {
        let n = self.n_balls as u128;
        let mut max_k: u32 = 0;
        let mut parts = Vec::with_capacity(self.cell_mass.len());
        for &m in &self.cell_mass {
            let (mant, exp) = dyadic(m)?;
            if exp > 0 {
                return None;
            }
            max_k = max_k.max((-exp) as u32);
            parts.push((mant, exp));
        }
        if max_k >= 62 {
            return None;
        }
        let v2 = n.trailing_zeros();
        let odd = n >> v2;
        let scale = (1u128 << max_k.max(v2)).checked_mul(odd)?;
        if scale > MAX_SCALE {
            return None;
        }
        let mut caps = Vec::with_capacity(parts.len());
        let mut sum: u128 = 0;
        for (mant, exp) in parts {
            let v = mant as u128 * (scale >> (-exp) as u32);
            sum += v;
            caps.push(v as i64);
        }
        (sum == scale).then_some((scale as u64, caps))
    }
}

/// `m = mant * 2^exp` with `mant` odd (or zero).
fn dyadic(m: f64) -> Option<(u64, i32)> {
    if m == 0.0 {
        return Some((0, 0));
    }
    if !m.is_finite() || m < 0.0 {
        return None;
    }
    let bits = m.to_bits();
    let e = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut exp) = if e == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), e - 1075)
    };
    let tz = mant.trailing_zeros();
    mant >>= tz;
    exp += tz as i32;
    Some((mant, exp))
}

pub(crate) trait Capacity:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + std::fmt::Debug
{
    const ZERO: Self;
    fn positive(self) -> bool;
}

impl Capacity for i64 {
    const ZERO: Self = 0;
    fn positive(self) -> bool {
        self > 0
    }
}

impl Capacity for f64 {
    const ZERO: Self = 0.0;
    fn positive(self) -> bool {
        self > FLOAT_EPS
    }
}

/// Dinic's algorithm with iterative blocking-flow search.
pub(crate) struct Dinic<C> {
    adj: Vec<Vec<u32>>,
    to: Vec<u32>,
    cap: Vec<C>,
    level: Vec<u32>,
    iter: Vec<u32>,
}

const UNSEEN: u32 = u32::MAX;

impl<C: Capacity> Dinic<C> {
    pub fn new(nodes: usize) -> Self {
        Dinic {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![UNSEEN; nodes],
            iter: vec![0; nodes],
        }
    }

    /// Adds `u -> v`; returns the forward edge id (reverse is `id ^ 1`).
    pub fn add_edge(&mut self, u: usize, v: usize, c: C) -> usize {
        let id = self.to.len();
        self.to.push(v as u32);
        self.cap.push(c);
        self.adj[u].push(id as u32);
        self.to.push(u as u32);
        self.cap.push(C::ZERO);
        self.adj[v].push(id as u32 + 1);
        id
    }

    /// Flow currently routed on forward edge `id`.
    pub fn flow(&self, id: usize) -> C {
        self.cap[id ^ 1]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = UNSEEN);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e as usize] as usize;
                if self.level[v] == UNSEEN && self.cap[e as usize].positive() {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        self.level[t] != UNSEEN
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> C {
        let mut total = C::ZERO;
        let mut path: Vec<u32> = Vec::new();
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            path.clear();
            let mut u = s;
            loop {
                if u == t {
                    let mut b = self.cap[path[0] as usize];
                    for &e in &path[1..] {
                        let c = self.cap[e as usize];
                        if c < b {
                            b = c;
                        }
                    }
                    for &e in &path {
                        let e = e as usize;
                        self.cap[e] = self.cap[e] - b;
                        self.cap[e ^ 1] = self.cap[e ^ 1] + b;
                    }
                    total = total + b;
                    // Retreat to the tail of the first saturated edge.
                    let cut = path
                        .iter()
                        .position(|&e| !self.cap[e as usize].positive())
                        .unwrap_or(0);
                    path.truncate(cut);
                    u = path
                        .last()
                        .map_or(s, |&e| self.to[e as usize] as usize);
                    continue;
                }
                let mut advanced = false;
                while (self.iter[u] as usize) < self.adj[u].len() {
                    let e = self.adj[u][self.iter[u] as usize];
                    let v = self.to[e as usize] as usize;
                    if self.cap[e as usize].positive()
                        && self.level[v] != UNSEEN
                        && self.level[v] == self.level[u] + 1
                    {
                        path.push(e);
                        u = v;
                        advanced = true;
                        break;
                    }
                    self.iter[u] += 1;
                }
                if advanced {
                    continue;
                }
                // Dead end: prune u from this phase and step back.
                self.level[u] = UNSEEN;
                match path.pop() {
                    None => break,
                    Some(e) => {
                        u = self.to[(e ^ 1) as usize] as usize;
                        self.iter[u] += 1;
                    }
                }
            }
        }
        total
    }

    /// Nodes reachable from `s` in the residual graph.
    pub fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.adj[u] {
                let v = self.to[e as usize] as usize;
                if !seen[v] && self.cap[e as usize].positive() {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

struct Built<C> {
    dinic: Dinic<C>,
    arc_ids: Vec<usize>,
    source: usize,
    sink: usize,
}

fn build<C: Capacity>(net: &FlowNetwork, cell_caps: &[C], ball_cap: C, unbounded: C) -> Built<C> {
    let nc = net.cell_mass.len();
    let nb = net.n_balls;
    let source = nc + nb;
    let sink = source + 1;
    let mut dinic = Dinic::new(nc + nb + 2);
    for (c, &cap) in cell_caps.iter().enumerate() {
        if cap.positive() {
            dinic.add_edge(source, c, cap);
        }
    }
    let arc_ids = net
        .arcs
        .iter()
        .map(|&(c, b)| dinic.add_edge(c, nc + b, unbounded))
        .collect();
    for b in 0..nb {
        dinic.add_edge(nc + b, sink, ball_cap);
    }
    Built {
        dinic,
        arc_ids,
        source,
        sink,
    }
}

/// Maximum flow; exact when the capacities allow it.
pub fn max_flow(net: &FlowNetwork) -> Result<FlowSolution> {
    net.validate()?;
    let nc = net.cell_mass.len();
    let nb = net.n_balls;
    if let Some((scale, caps)) = net.integer_scaling() {
        let demand = (scale / nb as u64) as i64;
        let mut b = build(net, &caps, demand, scale as i64);
        let value = b.dinic.max_flow(b.source, b.sink);
        let reach = b.dinic.reachable(b.source);
        let s = scale as f64;
        return Ok(FlowSolution {
            value: value as f64 / s,
            arc_flow: b.arc_ids.iter().map(|&id| b.dinic.flow(id) as f64 / s).collect(),
            deficit: (scale as i64 - value) as f64 / s,
            exact: true,
            scale: Some(scale),
            cell_reachable: reach[..nc].to_vec(),
            ball_reachable: reach[nc..nc + nb].to_vec(),
        });
    }
    let demand = 1.0 / nb as f64;
    let mut b = build(net, &net.cell_mass, demand, 2.0);
    let value = b.dinic.max_flow(b.source, b.sink);
    let reach = b.dinic.reachable(b.source);
    Ok(FlowSolution {
        value,
        arc_flow: b.arc_ids.iter().map(|&id| b.dinic.flow(id)).collect(),
        deficit: (1.0 - value).max(0.0),
        exact: false,
        scale: None,
        cell_reachable: reach[..nc].to_vec(),
        ball_reachable: reach[nc..nc + nb].to_vec(),
    })
}

/// Balls on the sink side of the minimum cut: those unreachable from the
/// source in the final residual graph. Their total demand exceeds the mass
/// of the cells adjacent to them by the flow deficit.
pub fn min_cut_ball_side(net: &FlowNetwork, sol: &FlowSolution) -> Result<Vec<usize>> {
    if sol.ball_reachable.len() != net.n_balls {
        return Err(Error::InvalidArgument("solution does not match network".into()));
    }
    if sol.is_saturated() {
        return Err(Error::InvalidState(
            "min cut requested on a saturated flow".into(),
        ));
    }
    let side: Vec<usize> = (0..net.n_balls)
        .filter(|b| !sol.ball_reachable[*b])
        .collect();
    if side.is_empty() {
        return Err(Error::Internal("unsaturated flow with empty cut side".into()));
    }
    Ok(side)
}
