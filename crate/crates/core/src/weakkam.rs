//! Grid discretization of the free-time action: Mañé potential, critical
//! value, dominated functions and the static / semi-static sets.
//!
//! Nodes are the points of an n (or n×n) grid on the torus of period ℓ.
//! Edges are straight segments to the nodes of a square stencil, each
//! offered with every travel time of a small menu, so that an edge weight
//! at level k is `cost0 + k·dt`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::{apriori_speed_bound, el_flow_unchecked, Curve, LagrangianModel, PhaseState};

pub const DEFAULT_MENU: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
/// Relaxations smaller than this are ignored, so float noise cannot fake a negative cycle.
const RELAX_EPS: f64 = 1e-12;
/// Reduced cost below which an edge counts as exactly calibrated.
pub const TIGHT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub n: usize,
    /// Stencil half-width in cells.
    pub stencil: usize,
    pub menu: Vec<f64>,
}

impl GraphOptions {
    pub fn for_dim(dim: usize) -> Self {
        if dim == 1 {
            GraphOptions { n: 200, stencil: 25, menu: DEFAULT_MENU.to_vec() }
        } else {
            GraphOptions { n: 32, stencil: 3, menu: DEFAULT_MENU.to_vec() }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ActionGraph {
    pub model: LagrangianModel,
    pub n: usize,
    pub h: f64,
    pub stencil: usize,
    pub menu: Vec<f64>,
    nodes: usize,
    out_start: Vec<usize>,
    tail: Vec<u32>,
    head: Vec<u32>,
    disp: Vec<[f64; 2]>,
    dt: Vec<f64>,
    cost0: Vec<f64>,
    in_start: Vec<usize>,
    in_edges: Vec<u32>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Straight-segment action without the k·dt term (Simpson in time for U).
pub fn segment_cost(model: &LagrangianModel, a: [f64; 2], d: [f64; 2], dt: f64) -> f64 {
    let w = model.magnetic.unwrap_or([0.0; 2]);
    let m = [a[0] + 0.5 * d[0], a[1] + 0.5 * d[1]];
    let b = [a[0] + d[0], a[1] + d[1]];
    let u = (model.u(a) + 4.0 * model.u(m) + model.u(b)) / 6.0;
    (d[0] * d[0] + d[1] * d[1]) / (2.0 * dt) + w[0] * d[0] + w[1] * d[1] - dt * u
}

impl ActionGraph {
    pub fn new(model: &LagrangianModel, opts: &GraphOptions) -> Result<Self> {
        if opts.n < 3 || opts.menu.is_empty() || opts.menu.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Parameter("grid needs n ≥ 3 and a non-empty positive time menu".into()));
        }
        if 2 * opts.stencil + 1 > opts.n {
            return Err(Error::Parameter(format!("stencil {} wraps a grid of {} cells", opts.stencil, opts.n)));
        }
        let n = opts.n;
        let dim = model.dim;
        let h = model.period / n as f64;
        let r = opts.stencil as i64;
        let mut offsets = Vec::new();
        for a in -r..=r {
            if dim == 1 {
                offsets.push([a, 0]);
            } else {
                for b in -r..=r {
                    offsets.push([a, b]);
                }
            }
        }
        let nodes = if dim == 1 { n } else { n * n };
        let per = offsets.len() * opts.menu.len();
        let mut g = ActionGraph {
            model: model.clone(),
            n,
            h,
            stencil: opts.stencil,
            menu: opts.menu.clone(),
            nodes,
            out_start: Vec::with_capacity(nodes + 1),
            tail: Vec::with_capacity(nodes * per),
            head: Vec::with_capacity(nodes * per),
            disp: Vec::with_capacity(nodes * per),
            dt: Vec::with_capacity(nodes * per),
            cost0: Vec::with_capacity(nodes * per),
            in_start: Vec::new(),
            in_edges: Vec::new(),
        };
        let ni = n as i64;
        for v in 0..nodes {
            g.out_start.push(g.tail.len());
            let c = g.coords(v);
            let p = g.position(v);
            for o in &offsets {
                let t = [(c[0] + o[0]).rem_euclid(ni), (c[1] + o[1]).rem_euclid(ni)];
                let to = if dim == 1 { t[0] as usize } else { (t[0] * ni + t[1]) as usize };
                let d = [o[0] as f64 * h, o[1] as f64 * h];
                for &dt in &opts.menu {
                    g.tail.push(v as u32);
                    g.head.push(to as u32);
                    g.disp.push(d);
                    g.dt.push(dt);
                    g.cost0.push(segment_cost(model, p, d, dt));
                }
            }
        }
        g.out_start.push(g.tail.len());
        let mut count = vec![0usize; nodes + 1];
        for &b in &g.head {
            count[b as usize + 1] += 1;
        }
        for i in 0..nodes {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut in_edges = vec![0u32; g.head.len()];
        for e in 0..g.head.len() {
            let b = g.head[e] as usize;
            in_edges[fill[b]] = e as u32;
            fill[b] += 1;
        }
        g.in_start = count;
        g.in_edges = in_edges;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.model.dim
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.head.len()
    }

    fn coords(&self, v: usize) -> [i64; 2] {
        if self.dim() == 1 {
            [v as i64, 0]
        } else {
            [(v / self.n) as i64, (v % self.n) as i64]
        }
    }

    pub fn position(&self, v: usize) -> [f64; 2] {
        let c = self.coords(v);
        [c[0] as f64 * self.h, c[1] as f64 * self.h]
    }

    /// Nearest grid node to a point.
    pub fn node_at(&self, x: [f64; 2]) -> usize {
        let x = self.model.wrap(x);
        let i = ((x[0] / self.h).round() as usize) % self.n;
        if self.dim() == 1 {
            i
        } else {
            i * self.n + ((x[1] / self.h).round() as usize) % self.n
        }
    }

    pub fn out_edges(&self, v: usize) -> std::ops::Range<usize> {
        self.out_start[v]..self.out_start[v + 1]
    }

    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.in_edges[self.in_start[v]..self.in_start[v + 1]].iter().map(|&e| e as usize)
    }

    pub fn tail(&self, e: usize) -> usize {
        self.tail[e] as usize
    }

    pub fn head(&self, e: usize) -> usize {
        self.head[e] as usize
    }

    pub fn dt(&self, e: usize) -> f64 {
        self.dt[e]
    }

    pub fn displacement(&self, e: usize) -> [f64; 2] {
        self.disp[e]
    }

    pub fn velocity(&self, e: usize) -> [f64; 2] {
        let d = self.disp[e];
        [d[0] / self.dt[e], d[1] / self.dt[e]]
    }

    /// Discretized ∫(L + k) along the edge; affine in k with slope dt.
    pub fn weight(&self, e: usize, k: f64) -> f64 {
        self.cost0[e] + k * self.dt[e]
    }

    /// Action of one cell hop at the slowest menu speed; the scale below
    /// which the grid cannot resolve action differences.
    pub fn action_resolution(&self) -> f64 {
        let tmax = self.menu.iter().cloned().fold(0.0, f64::max);
        self.h * self.h / (2.0 * tmax)
    }

    /// Error estimate for the critical value: position error h/2 against the
    /// potential slope, plus the kinetic cost of the slowest grid speed.
    pub fn discretization_estimate(&self) -> f64 {
        let tmax = self.menu.iter().cloned().fold(0.0, f64::max);
        let slope = match &self.model.potential {
            crate::lagrangian::Potential::Zero => 0.0,
            _ => (0..self.nodes)
                .map(|v| {
                    let g = self.model.potential_jet(self.position(v)).1;
                    (g[0] * g[0] + g[1] * g[1]).sqrt()
                })
                .fold(0.0, f64::max),
        };
        slope * self.h * (self.dim() as f64).sqrt() / 2.0 + 0.5 * (self.h / tmax).powi(2)
    }

    /// Edges of a negative cycle at level k, if any.
    pub fn negative_cycle(&self, k: f64) -> Option<Vec<usize>> {
        let nv = self.nodes;
        let mut dist = vec![0.0f64; nv];
        let mut pred = vec![usize::MAX; nv];
        for round in 0..=nv {
            let mut changed = false;
            for b in 0..nv {
                for e in self.in_edges(b) {
                    let cand = dist[self.tail(e)] + self.weight(e, k);
                    if cand < dist[b] - RELAX_EPS {
                        dist[b] = cand;
                        pred[b] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                return None;
            }
            if round % 4 == 3 || round == nv {
                if let Some(c) = self.pred_cycle(&pred) {
                    return Some(c);
                }
            }
        }
        // A negative cycle always shows up in the predecessor graph by now.
        self.pred_cycle(&pred)
    }

    /// A cycle in the predecessor graph; with strict relaxations every such
    /// cycle has negative weight.
    fn pred_cycle(&self, pred: &[usize]) -> Option<Vec<usize>> {
        let nv = self.nodes;
        let mut mark = vec![usize::MAX; nv];
        for s in 0..nv {
            let mut v = s;
            while mark[v] == usize::MAX && pred[v] != usize::MAX {
                mark[v] = s;
                v = self.tail(pred[v]);
            }
            if mark[v] == s && pred[v] != usize::MAX {
                let mut cyc = Vec::new();
                let start = v;
                loop {
                    let e = pred[v];
                    cyc.push(e);
                    v = self.tail(e);
                    if v == start {
                        break;
                    }
                }
                cyc.reverse();
                return Some(cyc);
            }
        }
        None
    }

    pub fn cycle_weight(&self, edges: &[usize], k: f64) -> f64 {
        edges.iter().map(|&e| self.weight(e, k)).sum()
    }

    pub fn cycle_time(&self, edges: &[usize]) -> f64 {
        edges.iter().map(|&e| self.dt[e]).sum()
    }

    /// Dijkstra from `src` over reduced weights w + u(a) − u(b) ≥ 0, along
    /// paths with at least one edge; entries above `bound` are left at +∞.
    fn reduced_dijkstra(&self, u: &[f64], k: f64, src: usize, forward: bool, bound: f64) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.nodes];
        let mut heap = BinaryHeap::new();
        let red = |e: usize| (self.weight(e, k) + u[self.tail(e)] - u[self.head(e)]).max(0.0);
        let seed = |e: usize, dist: &mut Vec<f64>, heap: &mut BinaryHeap<Entry>| {
            let v = if forward { self.head(e) } else { self.tail(e) };
            let d = red(e);
            if d < dist[v] && d <= bound {
                dist[v] = d;
                heap.push(Entry(d, v));
            }
        };
        if forward {
            for e in self.out_edges(src) {
                seed(e, &mut dist, &mut heap);
            }
        } else {
            for e in self.in_edges(src).collect::<Vec<_>>() {
                seed(e, &mut dist, &mut heap);
            }
        }
        let mut done = vec![false; self.nodes];
        while let Some(Entry(d, v)) = heap.pop() {
            if done[v] || d > dist[v] {
                continue;
            }
            done[v] = true;
            let mut relax = |e: usize, w: usize| {
                let nd = d + red(e);
                if nd < dist[w] && nd <= bound {
                    dist[w] = nd;
                    heap.push(Entry(nd, w));
                }
            };
            if forward {
                for e in self.out_edges(v) {
                    relax(e, self.head(e));
                }
            } else {
                for e in self.in_edges(v) {
                    relax(e, self.tail(e));
                }
            }
        }
        dist
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeCertificate {
    pub k: f64,
    pub nodes: Vec<usize>,
    pub weight: f64,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub c: f64,
    pub discretization: f64,
    /// Negative closed curve slightly below c.
    pub certificate: Option<NegativeCertificate>,
    /// A node of a minimizing cycle, used as base point downstream.
    pub base: usize,
    pub bisection_steps: usize,
}

/// Critical value as the least level without negative cycles, found by
/// bisection between the best constant loop and max U + |ω|²/2.
pub fn critical_value(graph: &ActionGraph) -> Result<CriticalValue> {
    critical_value_with_tol(graph, 1e-10)
}

pub fn critical_value_with_tol(graph: &ActionGraph, tol: f64) -> Result<CriticalValue> {
    let mut lo = f64::NEG_INFINITY;
    let mut base = 0;
    for v in 0..graph.node_count() {
        for e in graph.out_edges(v) {
            if graph.head(e) == v && graph.displacement(e) == [0.0, 0.0] {
                let r = -graph.cost0[e] / graph.dt(e);
                if r > lo {
                    lo = r;
                    base = v;
                }
            }
        }
    }
    let om = graph.model.magnetic.unwrap_or([0.0; 2]);
    let (_, umax) = graph.model.potential_range();
    let mut hi = (umax + 0.5 * (om[0] * om[0] + om[1] * om[1])).max(lo) + 1e-6;
    if graph.negative_cycle(hi).is_some() {
        let wider = hi + (hi - lo) + 1.0;
        if graph.negative_cycle(wider).is_some() {
            return Err(Error::Bracket { lo, hi: wider });
        }
        hi = wider;
    }
    let mut steps = 0;
    let c = if graph.negative_cycle(lo).is_none() {
        lo
    } else {
        while hi - lo > tol * (1.0 + hi.abs()) {
            let mid = 0.5 * (lo + hi);
            steps += 1;
            if graph.negative_cycle(mid).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let below = c - (tol * (1.0 + c.abs())).max(1e-9);
    let certificate = graph.negative_cycle(below).map(|edges| NegativeCertificate {
        k: below,
        nodes: edges.iter().map(|&e| graph.tail(e)).collect(),
        weight: graph.cycle_weight(&edges, below),
        time: graph.cycle_time(&edges),
    });
    if let Some(cert) = &certificate {
        base = cert.nodes[0];
    }
    Ok(CriticalValue { c, discretization: graph.discretization_estimate(), certificate, base, bisection_steps: steps })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PotentialValue {
    Finite(f64),
    /// A negative cycle reachable from x that reaches y.
    NegInfinity { cycle: Vec<usize> },
}

/// Φ_k(x, y): least action over grid paths with at least one edge.
pub fn mane_potential(graph: &ActionGraph, k: f64, x: usize, y: usize) -> PotentialValue {
    let nv = graph.node_count();
    let mut dist = vec![f64::INFINITY; nv];
    let mut pred = vec![usize::MAX; nv];
    for e in graph.out_edges(x) {
        let b = graph.head(e);
        let w = graph.weight(e, k);
        if w < dist[b] {
            dist[b] = w;
            pred[b] = e;
        }
    }
    let mut last = Vec::new();
    for round in 0..nv {
        last.clear();
        for b in 0..nv {
            for e in graph.in_edges(b) {
                let a = graph.tail(e);
                if dist[a].is_finite() {
                    let cand = dist[a] + graph.weight(e, k);
                    if cand < dist[b] - RELAX_EPS {
                        dist[b] = cand;
                        pred[b] = e;
                        last.push(b);
                    }
                }
            }
        }
        if last.is_empty() {
            return PotentialValue::Finite(dist[y]);
        }
        if round + 1 == nv {
            break;
        }
    }
    // Still improving after |V| rounds: a negative cycle is reachable from x.
    // Walk back |V| steps to land on it, then ask whether it reaches y.
    let mut v = last[0];
    for _ in 0..nv {
        v = graph.tail(pred[v]);
    }
    let start = v;
    let mut cycle = vec![start];
    let mut w = graph.tail(pred[start]);
    while w != start {
        cycle.push(w);
        w = graph.tail(pred[w]);
    }
    cycle.reverse();
    let mut seen = vec![false; nv];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(a) = stack.pop() {
        for e in graph.out_edges(a) {
            let b = graph.head(e);
            if !seen[b] {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    if seen[y] {
        PotentialValue::NegInfinity { cycle }
    } else {
        PotentialValue::Finite(dist[y])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueField {
    pub dim: usize,
    pub n: usize,
    pub h: f64,
    pub c: f64,
    pub base: usize,
    pub values: Vec<f64>,
    pub sweeps: usize,
    pub residual: f64,
}

impl ValueField {
    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    /// Edges where u(b) − u(a) exceeds the edge action by more than `tol`.
    pub fn domination_violations(&self, graph: &ActionGraph, tol: f64) -> usize {
        (0..graph.edge_count())
            .filter(|&e| self.values[graph.head(e)] - self.values[graph.tail(e)] > graph.weight(e, self.c) + tol)
            .count()
    }

    /// w(e) + u(a) − u(b).
    pub fn reduced(&self, graph: &ActionGraph, e: usize) -> f64 {
        graph.weight(e, self.c) + self.values[graph.tail(e)] - self.values[graph.head(e)]
    }
}

/// u = Φ_c(base, ·) by Gauss–Seidel value iteration u(b) ← min(u(b), u(a) + w),
/// sweeping in alternating directions.
pub fn lax_oleinik(graph: &ActionGraph, c: f64, base: usize) -> Result<ValueField> {
    let nv = graph.node_count();
    let mut u = vec![f64::INFINITY; nv];
    u[base] = 0.0;
    let limit = nv + 1;
    let mut sweeps = 0;
    let sweep = |u: &mut Vec<f64>, rev: bool| {
        let mut changed = false;
        for i in 0..nv {
            let b = if rev { nv - 1 - i } else { i };
            for e in graph.in_edges(b) {
                let ua = u[graph.tail(e)];
                if ua.is_finite() {
                    let cand = ua + graph.weight(e, c);
                    if cand < u[b] - 1e-13 {
                        u[b] = cand;
                        changed = true;
                    }
                }
            }
        }
        changed
    };
    loop {
        let changed = sweep(&mut u, sweeps % 2 == 1);
        sweeps += 1;
        if !changed {
            break;
        }
        if sweeps > limit {
            let before = u[base];
            let extra = 8;
            for i in 0..extra {
                sweep(&mut u, i % 2 == 1);
            }
            return Err(Error::BelowCritical { drift: (before - u[base]) / extra as f64 });
        }
    }
    let residual = (0..nv)
        .map(|b| {
            let tu = graph.in_edges(b).map(|e| u[graph.tail(e)] + graph.weight(e, c)).fold(f64::INFINITY, f64::min);
            (tu - u[b]).abs()
        })
        .fold(0.0, f64::max);
    Ok(ValueField { dim: graph.dim(), n: graph.n, h: graph.h, c, base, values: u, sweeps, residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetKind {
    Mather,
    Aubry,
    Mane,
}

/// Phase cells (x index, y index, vx bin, vy bin) flagged as members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantSetApprox {
    pub kind: SetKind,
    pub cells: BTreeSet<[i32; 4]>,
    /// Configuration nodes underneath the cells.
    pub nodes: BTreeSet<usize>,
    pub tolerance: f64,
    pub h: f64,
    pub dv: f64,
}

impl InvariantSetApprox {
    pub fn cell_state(&self, cell: &[i32; 4]) -> PhaseState {
        PhaseState::new(
            [cell[0] as f64 * self.h, cell[1] as f64 * self.h],
            [cell[2] as f64 * self.dv, cell[3] as f64 * self.dv],
        )
    }

    pub fn is_subset(&self, other: &InvariantSetApprox) -> bool {
        self.cells.is_subset(&other.cells) && self.nodes.is_subset(&other.nodes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantSets {
    pub mather: InvariantSetApprox,
    pub aubry: InvariantSetApprox,
    pub mane: InvariantSetApprox,
    /// Per static node, the cheapest closed curve through it (reduced action).
    pub static_defect: Vec<(usize, f64)>,
}

/// Phase grid: the stencil cells in position and speed bins of width
/// 2·v_max/n, with v_max the a-priori speed bound at energy c.
/// Falls back to the slowest grid speed when the bound vanishes.
pub fn velocity_bin(graph: &ActionGraph, c: f64) -> f64 {
    let vmax = apriori_speed_bound(&graph.model, c);
    if vmax > 0.0 {
        2.0 * vmax / graph.n as f64
    } else {
        graph.h / graph.menu.iter().cloned().fold(0.0, f64::max)
    }
}

/// Static nodes lie on a closed curve of reduced action ≤ 3·resolution,
/// either through another node or by resting for unit time. Semi-static
/// edges lie on a path between static nodes that is minimizing up to half
/// a resolution unit. Mather edges lie
/// on cycles of exactly calibrated edges.
pub fn classify_and_extract_sets(graph: &ActionGraph, u: &ValueField) -> Result<InvariantSets> {
    let c = u.c;
    let tol = 3.0 * graph.action_resolution();
    let nv = graph.node_count();
    let red = |e: usize| u.reduced(graph, e);
    let dv = velocity_bin(graph, c);
    let cell = |e: usize| {
        let co = graph.coords(graph.tail(e));
        let v = graph.velocity(e);
        [co[0] as i32, co[1] as i32, (v[0] / dv).round() as i32, (v[1] / dv).round() as i32]
    };

    let mut static_defect = Vec::new();
    let mut is_static = vec![false; nv];
    for x in 0..nv {
        let mut best = f64::INFINITY;
        let mut cheap_out = false;
        for e in graph.out_edges(x) {
            let r = red(e);
            if graph.head(e) == x && graph.displacement(e) == [0.0, 0.0] {
                best = best.min(r * (1.0 / graph.dt(e)).ceil());
            } else if r <= tol {
                cheap_out = true;
            }
        }
        if cheap_out {
            let back = graph.reduced_dijkstra(&u.values, c, x, false, tol);
            for e in graph.out_edges(x) {
                let y = graph.head(e);
                if y != x {
                    best = best.min(red(e) + back[y]);
                }
            }
        }
        if best <= tol {
            is_static[x] = true;
            static_defect.push((x, best));
        }
    }
    let aubry_nodes: Vec<usize> = (0..nv).filter(|&x| is_static[x]).collect();

    // Exactly calibrated cycles.
    let mut tight = DiGraph::<usize, usize>::new();
    let idx: Vec<_> = (0..nv).map(|v| tight.add_node(v)).collect();
    for e in 0..graph.edge_count() {
        if red(e) <= TIGHT_TOL && is_static[graph.tail(e)] && is_static[graph.head(e)] {
            tight.add_edge(idx[graph.tail(e)], idx[graph.head(e)], e);
        }
    }
    let mut comp = vec![usize::MAX; nv];
    for (i, scc) in tarjan_scc(&tight).into_iter().enumerate() {
        for ni in scc {
            comp[tight[ni]] = i;
        }
    }
    let mut mather_edges = Vec::new();
    for er in tight.edge_indices() {
        let e = tight[er];
        let (a, b) = (graph.tail(e), graph.head(e));
        if comp[a] == comp[b] {
            mather_edges.push(e);
        }
    }

    // Potentials from and to every static node.
    let from: Vec<Vec<f64>> =
        aubry_nodes.iter().map(|&p| graph.reduced_dijkstra(&u.values, c, p, true, f64::INFINITY)).collect();
    let to: Vec<Vec<f64>> =
        aubry_nodes.iter().map(|&q| graph.reduced_dijkstra(&u.values, c, q, false, f64::INFINITY)).collect();

    // Two menu times over one cell differ by a full resolution unit, so
    // non-minimality is resolved to half of it. Static edges are semi-static
    // by definition and join regardless.
    let mane_tol = 0.5 * graph.action_resolution();
    let mut aubry_edges = Vec::new();
    let mut mane_edges = Vec::new();
    for e in 0..graph.edge_count() {
        let (a, b) = (graph.tail(e), graph.head(e));
        let r = red(e);
        if r > tol {
            continue;
        }
        if is_static[a] && is_static[b] {
            let qb = aubry_nodes.binary_search(&b).unwrap();
            // Closing the loop: reduced distance from b back to a.
            let back = if a == b { 0.0 } else { from[qb][a] };
            if r + back <= tol {
                aubry_edges.push(e);
            }
        }
        let mut excess = f64::INFINITY;
        for (ip, fp) in from.iter().enumerate() {
            if !fp[a].is_finite() && a != aubry_nodes[ip] {
                continue;
            }
            let pa = if a == aubry_nodes[ip] { 0.0f64.min(fp[a]) } else { fp[a] };
            for (iq, tq) in to.iter().enumerate() {
                let bq = if b == aubry_nodes[iq] { 0.0f64.min(tq[b]) } else { tq[b] };
                let pq = fp[aubry_nodes[iq]];
                excess = excess.min(pa + r + bq - pq);
            }
        }
        if excess <= mane_tol {
            mane_edges.push(e);
        }
    }

    let make = |kind: SetKind, edges: &[usize]| InvariantSetApprox {
        kind,
        cells: edges.iter().map(|&e| cell(e)).collect(),
        nodes: edges.iter().flat_map(|&e| [graph.tail(e), graph.head(e)]).collect(),
        tolerance: tol,
        h: graph.h,
        dv,
    };
    for &e in &aubry_edges {
        if !mane_edges.contains(&e) {
            mane_edges.push(e);
        }
    }
    let mather = make(SetKind::Mather, &mather_edges);
    let mut aubry = make(SetKind::Aubry, &aubry_edges);
    let mut mane = make(SetKind::Mane, &mane_edges);
    // Static nodes whose only witness is resting count with zero velocity.
    for &x in &aubry_nodes {
        let co = graph.coords(x);
        let z = [co[0] as i32, co[1] as i32, 0, 0];
        aubry.nodes.insert(x);
        aubry.cells.insert(z);
        mane.nodes.insert(x);
        mane.cells.insert(z);
    }
    Ok(InvariantSets { mather, aubry, mane, static_defect })
}

/// Distance of a phase cell from the energy level c, in cell units.
pub fn energy_level_cells(model: &LagrangianModel, c: f64, state: &PhaseState, h: f64, dv: f64) -> f64 {
    let e = model.energy(state) - c;
    if e == 0.0 {
        return 0.0;
    }
    let g = model.potential_jet(state.pos).1;
    let spread = (g[0].abs() + g[1].abs()) * h + (state.vel[0].abs() + state.vel[1].abs()) * dv + 0.5 * dv * dv;
    e.abs() / spread
}

/// Largest Chebyshev cell distance from the flowed image of an Aubry cell to
/// the nearest Aubry cell, over all cells.
pub fn aubry_flow_drift(model: &LagrangianModel, aubry: &InvariantSetApprox, time: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    let l = model.period;
    for cell in &aubry.cells {
        let s = aubry.cell_state(cell);
        let curve = el_flow_unchecked(model, &s, time, 1e-3)?;
        let p = curve.points[curve.len() - 1];
        let v = curve.velocities.as_ref().unwrap()[curve.len() - 1];
        let best = aubry
            .cells
            .iter()
            .map(|o| {
                let q = aubry.cell_state(o);
                let wrap_cells = |d: f64| {
                    let d = d - l * (d / l).round();
                    (d / aubry.h).abs()
                };
                let dx = wrap_cells(p[0] - q.pos[0]).max(if model.dim == 2 { wrap_cells(p[1] - q.pos[1]) } else { 0.0 });
                let dvv = ((v[0] - q.vel[0]) / aubry.dv).abs().max(((v[1] - q.vel[1]) / aubry.dv).abs());
                dx.max(dvv)
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    Ok(worst)
}

/// sup over inner ≤ |y − z| ≤ radius of |u(y) − u(z) − p·(y − z)| / |y − z|²,
/// with p = ∂_vL at the static state.
pub fn quadratic_bound_check(
    graph: &ActionGraph,
    u: &ValueField,
    state: &PhaseState,
    radius: f64,
    inner: f64,
) -> Result<f64> {
    if radius < graph.h || radius <= inner {
        return Err(Error::RadiusTooSmall { radius, resolution: graph.h.max(inner) });
    }
    let z = graph.node_at(state.pos);
    let zp = graph.position(z);
    let p = graph.model.momentum(state);
    let l = graph.model.period;
    let mut k = 0.0f64;
    for y in 0..graph.node_count() {
        let yp = graph.position(y);
        let d = [yp[0] - zp[0], yp[1] - zp[1]].map(|c| c - l * (c / l).round());
        let r2 = d[0] * d[0] + d[1] * d[1];
        let r = r2.sqrt();
        if r < inner - 1e-12 || r > radius + 1e-12 {
            continue;
        }
        let q = (u.values[y] - u.values[z] - p[0] * d[0] - p[1] * d[1]).abs() / r2;
        k = k.max(q);
    }
    if !k.is_finite() {
        return Err(Error::Precondition("value field is infinite near the static point".into()));
    }
    Ok(k)
}

/// Constants of the crossing estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingConstants {
    /// Half-width of the surgery window.
    pub eps: f64,
    /// Largest admissible distance at the crossing time.
    pub delta: f64,
    /// Claimed gain per squared angle.
    pub eta: f64,
    /// Allowed EL residual near the crossing.
    pub zeta: f64,
    /// Angle must exceed C times the distance; C > 1.
    pub c: f64,
}

impl CrossingConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 1.0) {
            return Err(Error::Parameter(format!("C = {} must exceed 1", self.c)));
        }
        for (name, v) in [("eps", self.eps), ("delta", self.delta), ("eta", self.eta), ("zeta", self.zeta)] {
            if !(v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub gain: f64,
    pub angle: f64,
    pub eta_measured: f64,
    pub satisfies_eta: bool,
    pub a: Curve,
    pub c: Curve,
}

fn curve_velocity(curve: &Curve, t: f64) -> [f64; 2] {
    if let Some(vs) = &curve.velocities {
        let k = curve.times.partition_point(|&s| s <= t).clamp(1, curve.len() - 1);
        let s = ((t - curve.times[k - 1]) / (curve.times[k] - curve.times[k - 1])).clamp(0.0, 1.0);
        return [vs[k - 1][0] + s * (vs[k][0] - vs[k - 1][0]), vs[k - 1][1] + s * (vs[k][1] - vs[k - 1][1])];
    }
    let k = curve.times.partition_point(|&s| s <= t).clamp(1, curve.len() - 1);
    let dt = curve.times[k] - curve.times[k - 1];
    [(curve.points[k][0] - curve.points[k - 1][0]) / dt, (curve.points[k][1] - curve.points[k - 1][1]) / dt]
}

/// Resample a curve on m uniform steps of [t0, t1].
fn window(curve: &Curve, t0: f64, t1: f64, m: usize) -> Curve {
    let times: Vec<f64> = (0..=m).map(|i| t0 + (t1 - t0) * i as f64 / m as f64).collect();
    let points = times.iter().map(|&t| curve.at(t)).collect();
    Curve { times, points, velocities: None }
}

/// The windowed curve plus a linear ramp from zero to `shift` at the right end.
fn ramped(w: &Curve, shift: [f64; 2]) -> Curve {
    let m = w.len() - 1;
    let points = (0..=m)
        .map(|i| {
            let s = i as f64 / m as f64;
            [w.points[i][0] + s * shift[0], w.points[i][1] + s * shift[1]]
        })
        .collect();
    Curve { times: w.times.clone(), points, velocities: None }
}

/// Max |ẍ + ∇U| over samples inside [t0, t1], from second differences.
fn el_residual(model: &LagrangianModel, curve: &Curve, t0: f64, t1: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 1..curve.len() - 1 {
        let t = curve.times[i];
        if t < t0 || t > t1 {
            continue;
        }
        let (h0, h1) = (t - curve.times[i - 1], curve.times[i + 1] - t);
        let g = model.potential_jet(curve.points[i]).1;
        for c in 0..model.dim {
            let acc = 2.0
                * ((curve.points[i + 1][c] - curve.points[i][c]) / h1 - (curve.points[i][c] - curve.points[i - 1][c]) / h0)
                / (h0 + h1);
            worst = worst.max((acc + g[c]).abs());
        }
    }
    worst
}

/// Exchange two solutions across [t0 − ε, t0 + ε]: a follows α plus a linear
/// ramp that lands on γ(t0 + ε), c symmetrically. Returns the action
/// surplus of the originals over the exchanged pair.
pub fn crossing_gain(
    model: &LagrangianModel,
    alpha: &Curve,
    gamma: &Curve,
    t0: f64,
    consts: &CrossingConstants,
) -> Result<CrossingReport> {
    consts.validate()?;
    let (lo, hi) = (t0 - consts.eps, t0 + consts.eps);
    for (name, cv) in [("alpha", alpha), ("gamma", gamma)] {
        if cv.times[0] > lo || cv.times[cv.len() - 1] < hi {
            return Err(Error::Precondition(format!("{name} does not cover [t0 − ε, t0 + ε]")));
        }
        let r = el_residual(model, cv, lo, hi);
        if r > consts.zeta {
            return Err(Error::Precondition(format!(
                "{name} is not an Euler–Lagrange solution near t0 (residual {r:e} > ζ)"
            )));
        }
    }
    let (pa, pg) = (alpha.at(t0), gamma.at(t0));
    let (va, vg) = (curve_velocity(alpha, t0), curve_velocity(gamma, t0));
    let dist = ((pa[0] - pg[0]).powi(2) + (pa[1] - pg[1]).powi(2)).sqrt();
    let angle = (dist * dist + (va[0] - vg[0]).powi(2) + (va[1] - vg[1]).powi(2)).sqrt();
    if dist > consts.delta {
        return Err(Error::Precondition(format!("d(α(t0), γ(t0)) = {dist} exceeds δ")));
    }
    if angle < consts.c * dist {
        return Err(Error::Precondition(format!(
            "crossing-angle condition d(dα, dγ) ≥ C·d(α, γ) violated ({angle} < {} · {dist})",
            consts.c
        )));
    }
    let m = 400;
    let wa = window(alpha, lo, hi, m);
    let wg = window(gamma, lo, hi, m);
    let (ah, gh) = (alpha.at(hi), gamma.at(hi));
    let a = ramped(&wa, [gh[0] - ah[0], gh[1] - ah[1]]);
    let c = ramped(&wg, [ah[0] - gh[0], ah[1] - gh[1]]);
    let gain = wa.action(model, 0.0) + wg.action(model, 0.0) - a.action(model, 0.0) - c.action(model, 0.0);
    let eta_measured = if angle > 0.0 { gain / (angle * angle) } else { 0.0 };
    Ok(CrossingReport { gain, angle, eta_measured, satisfies_eta: gain > consts.eta * angle * angle, a, c })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderReport {
    pub k: f64,
    pub holds: bool,
    /// Per nearby curve: |ΔA − boundary term| and its ratio to (1+T)ρ².
    pub residuals: Vec<f64>,
    pub measured: Vec<f64>,
}

/// Constant of the second-order action estimate for curves within 4ρ of a
/// solution in phase distance: the remainder of the Taylor expansion of L is
/// at most ½(1 + ‖D²U‖)(4ρ)² per unit time.
pub fn second_order_constant(model: &LagrangianModel) -> f64 {
    8.0 * (1.0 + model.curvature_bound())
}

fn phase_gap(model: &LagrangianModel, x: &Curve, z: &Curve) -> f64 {
    (0..x.len())
        .map(|i| {
            let t = x.times[i];
            let (vx, vz) = (curve_velocity(x, t), curve_velocity(z, t));
            let mut s = 0.0;
            for c in 0..model.dim {
                s += (x.points[i][c] - z.points[i][c]).powi(2) + (vx[c] - vz[c]).powi(2);
            }
            s.sqrt()
        })
        .fold(0.0, f64::max)
}

fn boundary_term(model: &LagrangianModel, x: &Curve, z: &Curve) -> f64 {
    let end = |i: usize| {
        let p = model.momentum(&PhaseState::new(x.points[i], curve_velocity(x, x.times[i])));
        p[0] * (z.points[i][0] - x.points[i][0]) + p[1] * (z.points[i][1] - x.points[i][1])
    };
    end(x.len() - 1) - end(0)
}

fn check_tube(model: &LagrangianModel, x: &Curve, z: &Curve, rho: f64) -> Result<()> {
    if z.times.len() != x.times.len() || z.times.iter().zip(&x.times).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Parameter("nearby curves must share the reference sample times".into()));
    }
    let gap = phase_gap(model, x, z);
    if gap > 4.0 * rho {
        return Err(Error::Precondition(format!("nearby curve exits the 4ρ tube (phase gap {gap})")));
    }
    Ok(())
}

/// |A(z) − A(x) − [∂_vL(x, ẋ)·(z − x)]₀ᵀ| ≤ K(1+T)ρ² for every nearby z.
pub fn second_order_action_bound(
    model: &LagrangianModel,
    reference: &Curve,
    nearby: &[Curve],
    rho: f64,
) -> Result<SecondOrderReport> {
    let k = second_order_constant(model);
    let t = reference.duration();
    let ax = reference.action(model, 0.0);
    let mut residuals = Vec::new();
    let mut measured = Vec::new();
    for z in nearby {
        check_tube(model, reference, z, rho)?;
        let r = (z.action(model, 0.0) - ax - boundary_term(model, reference, z)).abs();
        residuals.push(r);
        measured.push(if rho > 0.0 { r / ((1.0 + t) * rho * rho) } else { 0.0 });
    }
    let holds = measured.iter().all(|m| *m <= k) && (rho > 0.0 || residuals.iter().all(|r| *r <= 1e-12));
    Ok(SecondOrderReport { k, holds, residuals, measured })
}

/// |A(x) + A(z) − A(w₁) − A(w₂)| against 3K(1+T)ρ², for w₁ from x(0) to
/// z(T) and w₂ from z(0) to x(T). Returns (lhs, bound).
pub fn exchange_quadruple_bound(
    model: &LagrangianModel,
    x: &Curve,
    z: &Curve,
    w1: &Curve,
    w2: &Curve,
    rho: f64,
) -> Result<(f64, f64)> {
    let last = x.len() - 1;
    let close = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).abs() + (p[1] - q[1]).abs() < 1e-9;
    if !(close(w1.points[0], x.points[0])
        && close(w1.points[last], z.points[last])
        && close(w2.points[0], z.points[0])
        && close(w2.points[last], x.points[last]))
    {
        return Err(Error::Precondition("exchange curves do not swap the endpoints".into()));
    }
    for c in [z, w1, w2] {
        check_tube(model, x, c, rho)?;
    }
    let lhs = (x.action(model, 0.0) + z.action(model, 0.0) - w1.action(model, 0.0) - w2.action(model, 0.0)).abs();
    let bound = 3.0 * second_order_constant(model) * (1.0 + x.duration()) * rho * rho;
    Ok((lhs, bound))
}

/// Smooth profile 1 − (1 − s²)³ on [0, 1], constant 1 beyond; C² at s = 1.
pub fn channel_profile(s: f64) -> f64 {
    if s >= 1.0 {
        1.0
    } else {
        1.0 - (1.0 - s * s).powi(3)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelField {
    pub n: usize,
    pub period: f64,
    pub eps: f64,
    pub rho: f64,
    pub gamma_bar: f64,
    /// Row-major n×n samples, first index along the first coordinate.
    pub values: Vec<f64>,
    /// max of sup |φ|, sup |∇φ|, sup |D²φ| by finite differences.
    pub c2_norm: f64,
}

impl ChannelField {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Distance on the torus of period l from p to a closed polyline.
pub fn polyline_distance(orbit: &[[f64; 2]], l: f64, p: [f64; 2]) -> f64 {
    let wrap = |d: f64| d - l * (d / l).round();
    let mut best = f64::INFINITY;
    for i in 0..orbit.len() {
        let a = orbit[i];
        let b = orbit[(i + 1) % orbit.len()];
        let ab = [wrap(b[0] - a[0]), wrap(b[1] - a[1])];
        let ap = [wrap(p[0] - a[0]), wrap(p[1] - a[1])];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let s = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let d = [ap[0] - s * ab[0], ap[1] - s * ab[1]];
        best = best.min((d[0] * d[0] + d[1] * d[1]).sqrt());
    }
    best
}

/// Channel φ = (ε γ̄²/32)·q(4d/γ̄) around a closed orbit, d the distance to
/// the orbit and q the smooth profile: zero on the orbit, at least ¼ερ² at
/// distance ρ, and equal to εγ̄²/32 beyond γ̄/4.
pub fn build_channel_continuous(
    orbit: &[[f64; 2]],
    period: f64,
    eps: f64,
    rho: f64,
    gamma_bar: f64,
    n: usize,
) -> Result<ChannelField> {
    if orbit.len() < 2 {
        return Err(Error::Parameter("orbit needs at least two points".into()));
    }
    if !(eps > 0.0 && rho > 0.0 && gamma_bar > 0.0) {
        return Err(Error::Parameter("ε, ρ and γ̄ must be positive".into()));
    }
    if !(rho < gamma_bar / 4.0) {
        return Err(Error::Parameter(format!("ρ < γ̄/4 violated (ρ = {rho}, γ̄ = {gamma_bar})")));
    }
    // Branches of the orbit must stay γ̄/2 apart so the tube has no cusps.
    let wrap = |d: f64| d - period * (d / period).round();
    let m = orbit.len();
    let mut arc = vec![0.0; m + 1];
    for i in 0..m {
        let (a, b) = (orbit[i], orbit[(i + 1) % m]);
        arc[i + 1] = arc[i] + (wrap(b[0] - a[0]).powi(2) + wrap(b[1] - a[1]).powi(2)).sqrt();
    }
    let total = arc[m];
    for i in 0..m {
        for j in i + 1..m {
            let along = (arc[j] - arc[i]).min(total - (arc[j] - arc[i]));
            if along < gamma_bar {
                continue;
            }
            let d = (wrap(orbit[j][0] - orbit[i][0]).powi(2) + wrap(orbit[j][1] - orbit[i][1]).powi(2)).sqrt();
            if d <= gamma_bar / 2.0 {
                return Err(Error::Parameter(format!(
                    "orbit separation > γ̄/2 violated: points {i} and {j} are {d} apart"
                )));
            }
        }
    }
    let h = period / n as f64;
    let amp = eps * gamma_bar * gamma_bar / 32.0;
    let r = gamma_bar / 4.0;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = polyline_distance(orbit, period, [i as f64 * h, j as f64 * h]);
            values[i * n + j] = amp * channel_profile(d / r);
        }
    }
    let at = |i: isize, j: isize| values[i.rem_euclid(n as isize) as usize * n + j.rem_euclid(n as isize) as usize];
    let mut c2 = 0.0f64;
    for i in 0..n as isize {
        for j in 0..n as isize {
            let f = at(i, j);
            let gx = (at(i + 1, j) - at(i - 1, j)) / (2.0 * h);
            let gy = (at(i, j + 1) - at(i, j - 1)) / (2.0 * h);
            let hxx = (at(i + 1, j) - 2.0 * f + at(i - 1, j)) / (h * h);
            let hyy = (at(i, j + 1) - 2.0 * f + at(i, j - 1)) / (h * h);
            let hxy = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * h * h);
            c2 = c2.max(f.abs()).max(gx.abs()).max(gy.abs()).max(hxx.abs()).max(hyy.abs()).max(hxy.abs());
        }
    }
    Ok(ChannelField { n, period, eps, rho, gamma_bar, values, c2_norm: c2 })
}
