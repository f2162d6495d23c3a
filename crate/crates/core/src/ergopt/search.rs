//! Orbit gap, distance to the Aubry set, reduced action, and the
//! cut-and-reclose search for a periodic orbit meeting
//! c(Γ, 𝒜) < ε·γ(Γ) and A(Γ) < ε²·γ(Γ)².

use std::collections::{HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::cycles::{discrete_aubry, min_mean_cycle, DiscreteAubry};
use super::potential::EdgePotential;
use super::weight::Weight;
use crate::error::{Error, Result};
use crate::sft::{distance_from_mismatch, periodic_mismatch, Sft, SymbolicOrbit};

/// Per-round period reduction factor.
pub const REDUCTION: f64 = 1.25;

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitMetrics<W> {
    /// γ(Γ): least distance between distinct points of the orbit; 2 for a
    /// fixed point, the diameter of the shift space.
    pub gap: f64,
    /// Pair (i, j), i < j, realizing the gap.
    pub gap_pair: Option<(usize, usize)>,
    /// c(Γ, 𝒜): largest distance from an orbit point to the Aubry set.
    pub aubry_distance: f64,
    /// Σ (f − m) over one period.
    pub action: W,
}

impl<W: Weight> OrbitMetrics<W> {
    pub fn satisfies_alga(&self, eps: &W) -> bool {
        let gap = W::from_f64(self.gap);
        let lhs = W::from_f64(self.aubry_distance);
        let eg = eps.clone() * gap;
        lhs < eg && self.action < eg.clone() * eg
    }
}

fn mismatch_radius(word: &[usize], i: usize, j: usize) -> Option<usize> {
    periodic_mismatch(word, i, word, j)
}

/// Gap and a closest pair; primitive words have a finite mismatch for every pair.
pub fn orbit_gap(word: &[usize]) -> (f64, Option<(usize, usize)>) {
    let p = word.len();
    if p == 1 {
        return (2.0, None);
    }
    let mut best: Option<(Option<usize>, (usize, usize))> = None;
    for i in 0..p {
        for j in i + 1..p {
            let k = mismatch_radius(word, i, j);
            // None (identical shifts) is the closest possible.
            let closer = match &best {
                None => true,
                Some((bk, _)) => match (k, bk) {
                    (None, Some(_)) => true,
                    (Some(a), Some(b)) => a > *b,
                    _ => false,
                },
            };
            if closer {
                best = Some((k, (i, j)));
            }
        }
    }
    let (k, pair) = best.expect("p ≥ 2");
    (distance_from_mismatch(k), Some(pair))
}

pub fn orbit_metrics<W: Weight>(
    orbit: &SymbolicOrbit,
    f: &EdgePotential<W>,
    aubry: &DiscreteAubry<W>,
) -> OrbitMetrics<W> {
    let word = orbit.word();
    let (gap, gap_pair) = orbit_gap(word);
    let aubry_distance = (0..word.len()).map(|i| aubry.distance(word, i)).fold(0.0, f64::max);
    let action = f.cycle_cost(word) - aubry.mean.clone() * W::from_ratio(word.len() as i64, 1);
    OrbitMetrics { gap, gap_pair, aubry_distance, action }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassOneResult<W> {
    pub orbit: SymbolicOrbit,
    pub metrics: OrbitMetrics<W>,
    pub rounds: usize,
    /// Period before each round and at the end.
    pub periods: Vec<usize>,
    /// Cut pairs (r₁, r₂) in the order used.
    pub witnesses: Vec<(usize, usize)>,
    pub satisfied: bool,
    pub diagnostic: Option<String>,
    pub aubry: DiscreteAubry<W>,
}

/// Smallest d with word = (word[..d])^{p/d}.
pub fn primitive_root(word: &[usize]) -> Vec<usize> {
    let p = word.len();
    let d = (1..=p)
        .find(|&d| p % d == 0 && (0..p).all(|i| word[i] == word[(i + d) % p]))
        .expect("p divides itself");
    word[..d].to_vec()
}

struct VertexGraph {
    k: usize,
    vertices: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    adj: Vec<Vec<usize>>,
}

impl VertexGraph {
    fn new<W: Weight>(f: &EdgePotential<W>) -> Self {
        let g = f.graph();
        let mut adj = vec![Vec::new(); g.len()];
        for (a, b, _) in &g.edges {
            adj[*a].push(*b);
        }
        VertexGraph { k: f.window() - 1, vertices: g.vertices, index: g.index, adj }
    }

    fn restricted(&self, keep: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
        self.adj
            .iter()
            .enumerate()
            .map(|(a, s)| s.iter().copied().filter(|&b| keep(a, b)).collect())
            .collect()
    }
}

/// Fewest-edge walk from `from` to `to` with at least `min_len` edges;
/// returns the visited vertices after `from`.
fn walk(adj: &[Vec<usize>], from: usize, to: usize, min_len: usize) -> Option<Vec<usize>> {
    let n = adj.len();
    let key = |v: usize, c: usize| v * (min_len + 1) + c;
    let mut parent: Vec<Option<usize>> = vec![None; n * (min_len + 1)];
    let mut seen = vec![false; n * (min_len + 1)];
    let mut queue = VecDeque::from([(from, 0usize)]);
    seen[key(from, 0)] = true;
    while let Some((v, c)) = queue.pop_front() {
        if v == to && c == min_len {
            let mut path = Vec::new();
            let mut s = key(v, c);
            while s != key(from, 0) {
                path.push(s / (min_len + 1));
                s = parent[s].expect("reached by BFS");
            }
            path.reverse();
            return Some(path);
        }
        for &w in &adj[v] {
            let c2 = (c + 1).min(min_len);
            if !seen[key(w, c2)] {
                seen[key(w, c2)] = true;
                parent[key(w, c2)] = Some(key(v, c));
                queue.push_back((w, c2));
            }
        }
    }
    None
}

/// A periodic word near the Aubry set: a tight closed walk through every
/// vertex of each static class, the classes joined by shortest connectors.
/// Only classes inside the recurrent component holding the most Aubry
/// vertices are visited, since others may not be mutually reachable.
pub fn aubry_specification<W: Weight>(f: &EdgePotential<W>, aubry: &DiscreteAubry<W>) -> Vec<usize> {
    let vg = VertexGraph::new(f);
    let tight_adj = vg.restricted(|a, b| {
        aubry.tight_edges.contains(&(vg.vertices[a].clone(), vg.vertices[b].clone()))
    });
    let mut g = DiGraph::<usize, ()>::new();
    let ids: Vec<usize> = aubry.vertices.iter().map(|v| vg.index[v]).collect();
    let nodes: HashMap<usize, _> = ids.iter().map(|&i| (i, g.add_node(i))).collect();
    for &a in &ids {
        for &b in &tight_adj[a] {
            g.add_edge(nodes[&a], nodes[&b], ());
        }
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| g[n]).collect();
            v.sort_unstable();
            v
        })
        .collect();
    classes.sort();
    let mut full = DiGraph::<(), ()>::new();
    let fnodes: Vec<_> = (0..vg.vertices.len()).map(|_| full.add_node(())).collect();
    for (a, succ) in vg.adj.iter().enumerate() {
        for &b in succ {
            full.add_edge(fnodes[a], fnodes[b], ());
        }
    }
    let mut comp = vec![0usize; vg.vertices.len()];
    for (ci, c) in tarjan_scc(&full).into_iter().enumerate() {
        for v in c {
            comp[v.index()] = ci;
        }
    }
    let mut weight: HashMap<usize, usize> = HashMap::new();
    for c in &classes {
        *weight.entry(comp[c[0]]).or_default() += c.len();
    }
    let home = classes
        .iter()
        .map(|c| comp[c[0]])
        .max_by_key(|k| (weight[k], std::cmp::Reverse(*k)))
        .expect("nonempty Aubry set");
    classes.retain(|c| comp[c[0]] == home);

    let mut tour: Vec<usize> = Vec::new();
    for class in &classes {
        let s = class[0];
        if let Some(&last) = tour.last() {
            tour.extend(walk(&vg.adj, last, s, 1).expect("the subshift is irreducible on Aubry classes"));
        } else {
            tour.push(s);
        }
        let mut cur = s;
        for &t in &class[1..] {
            tour.extend(walk(&tight_adj, cur, t, 1).expect("class is strongly connected"));
            cur = t;
        }
        tour.extend(walk(&tight_adj, cur, s, 1).expect("class is strongly connected"));
    }
    let first = tour[0];
    let last = *tour.last().unwrap();
    if classes.len() > 1 {
        tour.extend(walk(&vg.adj, last, first, 1).expect("classes are mutually reachable"));
    }
    // The walk ends where it started; drop the repeated endpoint.
    tour.pop();
    primitive_root(&tour.iter().map(|&v| vg.vertices[v][0]).collect::<Vec<_>>())
}

/// Closes the arc word[s..s+n) (cyclically) through a shortest connector.
fn close_arc(vg: &VertexGraph, word: &[usize], s: usize, n: usize) -> Option<Vec<usize>> {
    let p = word.len();
    let k = vg.k;
    if n < k.max(1) {
        return None;
    }
    let arc: Vec<usize> = (0..n).map(|t| word[(s + t) % p]).collect();
    let a = *vg.index.get(&arc[n - k..])?;
    let head: Vec<usize> = (0..k).map(|t| word[(s + t) % p]).collect();
    let b = *vg.index.get(&head)?;
    let path = walk(&vg.adj, a, b, k)?;
    let extra = path.len() - k;
    let mut out = arc;
    out.extend(path[..extra].iter().map(|&v| *vg.vertices[v].last().unwrap()));
    Some(out)
}

struct Cut<W> {
    word: Vec<usize>,
    pair: (usize, usize),
    action: W,
}

fn best_cut<W: Weight>(f: &EdgePotential<W>, vg: &VertexGraph, word: &[usize], mean: &W) -> Option<Cut<W>> {
    let p = word.len();
    let mut radius: Option<usize> = None;
    let mut pairs = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            let k = mismatch_radius(word, i, j).expect("primitive word");
            match radius {
                Some(r) if k < r => {}
                Some(r) if k == r => pairs.push((i, j)),
                _ => {
                    radius = Some(k);
                    pairs = vec![(i, j)];
                }
            }
        }
    }
    let mut best: Option<Cut<W>> = None;
    for (i, j) in pairs {
        for (s, n) in [(i, j - i), (j, p - (j - i))] {
            let Some(w) = close_arc(vg, word, s, n) else { continue };
            let w = primitive_root(&w);
            let action = f.cycle_cost(&w) - mean.clone() * W::from_ratio(w.len() as i64, 1);
            let better = match &best {
                None => true,
                Some(b) => w.len() < b.word.len() || (w.len() == b.word.len() && action < b.action),
            };
            if better {
                best = Some(Cut { word: w, pair: (i, j), action });
            }
        }
    }
    best
}

/// Starts from a specification through the whole Aubry set and, while the
/// two inequalities fail, cuts at the closest self-approach and recloses.
pub fn class_one_search<W: Weight>(f: &EdgePotential<W>, eps: &W) -> Result<ClassOneResult<W>> {
    if !(W::zero() < *eps && *eps < W::from_ratio(1, 1)) {
        return Err(Error::Parameter(format!("ε = {eps} must lie in (0, 1)")));
    }
    let mean = min_mean_cycle(f)?.mean;
    let aubry = discrete_aubry(f, &mean)?;
    let vg = VertexGraph::new(f);
    let sft: &Sft = f.sft();
    let mut orbit = SymbolicOrbit::new(sft, aubry_specification(f, &aubry))?;
    let initial = orbit.period();
    let max_rounds = ((initial as f64).ln() / REDUCTION.ln()).floor() as usize;
    let mut periods = vec![initial];
    let mut witnesses = Vec::new();
    let mut diagnostic = None;
    loop {
        let metrics = orbit_metrics(&orbit, f, &aubry);
        if metrics.satisfies_alga(eps) {
            break;
        }
        if orbit.period() == 1 {
            diagnostic = Some("reached a fixed point without meeting both inequalities".into());
            break;
        }
        let Some(cut) = best_cut(f, &vg, orbit.word(), &mean) else {
            diagnostic = Some("no closable self-approach".into());
            break;
        };
        if (cut.word.len() as f64) * REDUCTION > orbit.period() as f64 {
            diagnostic = Some(format!(
                "cut from period {} to {} shrinks by less than {REDUCTION}",
                orbit.period(),
                cut.word.len()
            ));
            break;
        }
        orbit = SymbolicOrbit::new(sft, cut.word)?;
        witnesses.push(cut.pair);
        periods.push(orbit.period());
        assert!(witnesses.len() <= max_rounds, "more than log_R(initial period) rounds");
    }
    let metrics = orbit_metrics(&orbit, f, &aubry);
    let satisfied = metrics.satisfies_alga(eps);
    Ok(ClassOneResult {
        orbit,
        metrics,
        rounds: witnesses.len(),
        periods,
        witnesses,
        satisfied,
        diagnostic,
        aubry,
    })
}
