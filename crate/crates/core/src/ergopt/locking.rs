//! Channel potentials around a periodic orbit and exact locking checks.

use std::collections::{HashMap, HashSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::cycles::{find_cycle, shortest_potentials};
use super::potential::EdgePotential;
use super::search::{orbit_gap, primitive_root};
use super::weight::Weight;
use crate::error::{Error, Result};
use crate::sft::{distance_from_mismatch, Sft, SymbolicOrbit};

/// Default scales from the orbit gap: γ̄ = γ/4 and ρ = γ̄/8, so ρ < γ̄/4 < γ/2.
pub fn default_scales(gap: f64) -> (f64, f64) {
    (gap / 32.0, gap / 4.0)
}

/// φ(x) = ½ε·min(d(x, Γ), γ̄/4)² on centred windows of 2r+1 symbols, with d
/// read off the window.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel<W> {
    pub orbit: SymbolicOrbit,
    pub eps: W,
    pub rho: f64,
    pub gamma_bar: f64,
    pub half_width: usize,
    pub cap: W,
}

impl<W: Weight> Channel<W> {
    pub fn window(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Distance from the centre of the window to Γ, as seen within the window.
    pub fn distance(&self, window: &[usize]) -> f64 {
        let r = self.half_width as i64;
        let word = self.orbit.word();
        let p = word.len() as i64;
        (0..p)
            .map(|s| {
                let k = (0..=r).find(|&k| {
                    word[(s + k).rem_euclid(p) as usize] != window[(r + k) as usize]
                        || word[(s - k).rem_euclid(p) as usize] != window[(r - k) as usize]
                });
                distance_from_mismatch(k.map(|k| k as usize))
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn value(&self, window: &[usize]) -> W {
        let d = W::from_f64(self.distance(window).min(self.gamma_bar / 4.0));
        self.eps.clone() * d.clone() * d.div_int(2)
    }

    /// Non-orbit windows all sit on the plateau.
    pub fn is_plateau(&self) -> bool {
        2f64.powi(1 - self.half_width as i32) >= self.gamma_bar / 4.0
    }

    pub fn potential(&self, sft: &Sft) -> Result<EdgePotential<W>> {
        EdgePotential::from_fn(sft, self.window().max(2), |w| self.value(&w[..self.window()]))
    }
}

pub fn build_channel_discrete<W: Weight>(
    orbit: &SymbolicOrbit,
    eps: W,
    rho: f64,
    gamma_bar: f64,
) -> Result<Channel<W>> {
    let word = primitive_root(orbit.word());
    if word.len() != orbit.period() {
        return Err(Error::Parameter("orbit word must be primitive".into()));
    }
    let (gap, _) = orbit_gap(&word);
    if !(rho > 0.0) {
        return Err(Error::Parameter(format!("ρ = {rho} must be positive")));
    }
    if !(rho < gamma_bar / 4.0) {
        return Err(Error::Parameter(format!("ρ < γ̄/4 violated: ρ = {rho}, γ̄ = {gamma_bar}")));
    }
    if !(gamma_bar / 4.0 < gap / 2.0) {
        return Err(Error::Parameter(format!("γ̄/4 < γ(Γ)/2 violated: γ̄ = {gamma_bar}, γ(Γ) = {gap}")));
    }
    if !(W::zero() < eps) {
        return Err(Error::Parameter(format!("ε = {eps} must be positive")));
    }
    // γ = 2^{1−K}: distinct points of Γ differ within |j| ≤ K, so every
    // (2K+2)-word of Γ occurs at one phase and the windows of half-width
    // K+1 chain into Γ alone.
    let half_width = (1.0 - gap.log2()).round().max(0.0) as usize + 1;
    let q = W::from_f64(gamma_bar / 4.0);
    let cap = eps.clone() * q.clone() * q.div_int(2);
    Ok(Channel { orbit: orbit.clone(), eps, rho, gamma_bar, half_width, cap })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LockingVerdict<W> {
    pub locked: bool,
    /// Mean of f + φ along Γ (φ vanishes there).
    pub orbit_mean: W,
    /// Cycles with mean ≤ the orbit mean other than Γ, with their means.
    pub competitors: Vec<(SymbolicOrbit, W)>,
}

/// Automaton state: the last w−1 symbols and the longest suffix of the
/// history that occurs in Γ, capped below the channel window.
type State = (usize, Vec<usize>);

struct Product<W> {
    states: Vec<State>,
    edges: Vec<(usize, usize, W)>,
    /// Symbol emitted on entering each state.
    symbol: Vec<usize>,
    step: HashMap<(usize, usize), usize>,
    start: Vec<usize>,
}

fn longest_suffix_in(t: &[usize], set: &HashSet<Vec<usize>>, cap: usize) -> Vec<usize> {
    let start = t.len().saturating_sub(cap);
    (start..=t.len())
        .map(|i| &t[i..])
        .find(|s| set.contains(*s))
        .expect("the empty word is a substring")
        .to_vec()
}

fn product<W: Weight>(f: &EdgePotential<W>, ch: &Channel<W>) -> Product<W> {
    let word = ch.orbit.word();
    let p = word.len();
    let l = ch.window();
    let subs: HashSet<Vec<usize>> = (0..=l)
        .flat_map(|n| (0..p).map(move |s| (0..n).map(|t| word[(s + t) % p]).collect::<Vec<_>>()))
        .collect();
    let g = f.graph();
    let mut adj: Vec<Vec<(usize, W)>> = vec![Vec::new(); g.len()];
    for (a, b, c) in &g.edges {
        adj[*a].push((*b, c.clone()));
    }
    let mut ids: HashMap<State, usize> = HashMap::new();
    let mut states: Vec<State> = Vec::new();
    let mut symbol = Vec::new();
    let mut queue = VecDeque::new();
    for (v, vw) in g.vertices.iter().enumerate() {
        let s = (v, longest_suffix_in(vw, &subs, l - 1));
        if !ids.contains_key(&s) {
            ids.insert(s.clone(), states.len());
            states.push(s.clone());
            symbol.push(*vw.last().unwrap());
            queue.push_back(s);
        }
    }
    let mut edges = Vec::new();
    let mut step = HashMap::new();
    let start: Vec<usize> = (0..states.len()).collect();
    while let Some((v, u)) = queue.pop_front() {
        let from = ids[&(v, u.clone())];
        for (b, c) in &adj[v] {
            let a = *g.vertices[*b].last().unwrap();
            let mut t = u.clone();
            t.push(a);
            let phi = if t.len() == l && subs.contains(&t) { W::zero() } else { ch.cap.clone() };
            let next = (*b, longest_suffix_in(&t, &subs, l - 1));
            let to = match ids.get(&next) {
                Some(&i) => i,
                None => {
                    let i = states.len();
                    ids.insert(next.clone(), i);
                    states.push(next.clone());
                    symbol.push(a);
                    queue.push_back(next);
                    i
                }
            };
            edges.push((from, to, c.clone() + phi));
            step.insert((from, a), to);
        }
    }
    Product { states, edges, symbol, step, start }
}

/// Projected word of a product cycle and its mean cost along that cycle.
fn project<W: Weight>(pr: &Product<W>, f: &EdgePotential<W>, cycle: &[usize]) -> (SymbolicOrbit, W) {
    let word = primitive_root(&cycle.iter().map(|&s| pr.symbol[s]).collect::<Vec<_>>());
    let orbit = SymbolicOrbit::new(f.sft(), word).expect("product cycles project to periodic words");
    let cost = (0..cycle.len()).fold(W::zero(), |acc, t| {
        let (a, b) = (cycle[t], cycle[(t + 1) % cycle.len()]);
        let e = pr.edges.iter().find(|(x, y, _)| *x == a && *y == b).expect("cycle edge");
        acc + e.2.clone()
    });
    (orbit, cost.div_int(cycle.len()))
}

/// Γ is locked iff it is the only cycle of least mean for f + φ. The check
/// runs on the product of the window graph of f with a suffix automaton for
/// Γ, so φ is never tabulated on long windows.
pub fn verify_locking<W: Weight>(f: &EdgePotential<W>, ch: &Channel<W>) -> Result<LockingVerdict<W>> {
    if !ch.is_plateau() {
        return Err(Error::Unsupported(
            "locking check needs the channel window inside the plateau scale".into(),
        ));
    }
    let orbit = &ch.orbit;
    let mu = f.cycle_mean(orbit);
    let pr = product(f, ch);
    let n = pr.states.len();
    let reduced: Vec<(usize, usize, W)> =
        pr.edges.iter().map(|(a, b, c)| (*a, *b, c.clone() - mu.clone())).collect();
    let pi = match shortest_potentials(n, &reduced) {
        Ok(pi) => pi,
        Err((cycle, _)) => {
            let comp = project(&pr, f, &cycle);
            return Ok(LockingVerdict { locked: false, orbit_mean: mu, competitors: vec![comp] });
        }
    };
    let tight: HashSet<(usize, usize)> = reduced
        .iter()
        .filter(|(a, b, c)| (c.clone() + pi[*a].clone() - pi[*b].clone()).is_zero_tol())
        .map(|(a, b, _)| (*a, *b))
        .collect();
    let mut g = DiGraph::<(), ()>::with_capacity(n, tight.len());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for &(a, b) in &tight {
        g.add_edge(nodes[a], nodes[b], ());
    }
    let mut comp_of = vec![usize::MAX; n];
    let sccs = tarjan_scc(&g);
    for (ci, c) in sccs.iter().enumerate() {
        for v in c {
            comp_of[v.index()] = ci;
        }
    }
    let mut cyclic: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for &(a, b) in &tight {
        if comp_of[a] == comp_of[b] {
            cyclic.entry(comp_of[a]).or_default().push((a, b));
        }
    }
    // Γ's own cycle of states, read after the suffix has settled.
    let word = orbit.word();
    let p = word.len();
    let k = f.window() - 1;
    let mut st = pr.start[f.graph().index[&(0..k).map(|t| word[t % p]).collect::<Vec<_>>()]];
    let settle = ch.window() + k + p;
    let mut path = Vec::with_capacity(p + 1);
    for t in 0..settle + p + 1 {
        if t >= settle {
            path.push(st);
        }
        st = pr.step[&(st, word[(k + t) % p])];
    }
    let own: HashSet<(usize, usize)> = path.windows(2).map(|e| (e[0], e[1])).collect();
    let own_class = comp_of[path[0]];

    let mut competitors = Vec::new();
    let mut keys: Vec<usize> = cyclic.keys().copied().collect();
    keys.sort_unstable();
    for ci in keys {
        let edges = &cyclic[&ci];
        if ci != own_class {
            let cycle = find_cycle(n, edges).expect("strongly connected with an edge");
            competitors.push(project(&pr, f, &cycle));
            continue;
        }
        // An extra tight edge closes a second cycle inside Γ's class.
        if let Some(&(a, b)) = edges.iter().find(|e| !own.contains(e)) {
            let back = path_in(n, edges, b, a).expect("same class");
            let mut c2 = vec![a];
            c2.extend(back[..back.len() - 1].iter().copied());
            competitors.push(project(&pr, f, &c2));
        }
    }
    let locked = own.iter().all(|e| tight.contains(e)) && competitors.is_empty();
    Ok(LockingVerdict { locked, orbit_mean: mu, competitors })
}

/// Vertices of a fewest-edge path from `from` to `to`, starting at `from`.
fn path_in(n: usize, edges: &[(usize, usize)], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![v];
            let mut u = v;
            while u != from {
                u = parent[u];
                path.push(u);
            }
            path.reverse();
            return Some(path);
        }
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        <BigRational as Weight>::from_ratio(n, d)
    }

    fn channel(orbit: &SymbolicOrbit) -> Channel<BigRational> {
        let (gap, _) = orbit_gap(orbit.word());
        let (rho, gb) = default_scales(gap);
        build_channel_discrete(orbit, q(1, 10), rho, gb).unwrap()
    }

    #[test]
    fn channel_values() {
        let s = Sft::full(2);
        let o = SymbolicOrbit::new(&s, vec![0, 0, 1]).unwrap();
        let ch = channel(&o);
        // γ = 1, K = 1, windows of five symbols.
        assert_eq!(ch.window(), 5);
        assert_eq!(ch.value(&[0, 1, 0, 0, 1]), q(0, 1));
        assert_eq!(ch.value(&[1, 0, 0, 1, 0]), q(0, 1));
        assert_eq!(ch.value(&[1, 1, 1, 1, 1]), ch.cap);
        // cap = ½ · ε · (γ̄/4)² = ε γ̄² / 32 with γ̄ = 1/4.
        assert_eq!(ch.cap, q(1, 10) * q(1, 16) * q(1, 16) / q(2, 1));
        let d = ch.distance(&[1, 1, 1, 1, 1]);
        assert!(ch.value(&[1, 1, 1, 1, 1]) >= q(1, 10) * <BigRational as Weight>::from_f64(ch.rho * ch.rho) / q(4, 1));
        assert_eq!(d, 1.0);
    }

    #[test]
    fn bad_scales_are_named() {
        let s = Sft::full(2);
        let o = SymbolicOrbit::new(&s, vec![0, 1]).unwrap();
        // ρ = γ/8 with γ̄ = γ/4 breaks ρ < γ̄/4.
        let err = build_channel_discrete(&o, q(1, 10), 2.0 / 8.0, 2.0 / 4.0).unwrap_err();
        assert!(err.to_string().contains("ρ < γ̄/4"), "{err}");
        let err = build_channel_discrete(&o, q(1, 10), 0.01, 4.0).unwrap_err();
        assert!(err.to_string().contains("γ̄/4 < γ(Γ)/2"), "{err}");
    }

    #[test]
    fn zero_potential_locks_any_orbit() {
        let s = Sft::full(2);
        let f = EdgePotential::constant(&s, 2, q(0, 1)).unwrap();
        for w in [vec![0], vec![0, 1], vec![0, 0, 1], vec![0, 1, 1, 0, 1]] {
            let o = SymbolicOrbit::new(&s, w).unwrap();
            let v = verify_locking(&f, &channel(&o)).unwrap();
            assert!(v.locked, "{o:?} {v:?}");
        }
    }

    #[test]
    fn zero_channel_on_unique_minimizer() {
        let s = Sft::golden_mean();
        let f = EdgePotential::from_fn(&s, 2, |w| q((w[0] + w[1]) as i64, 1)).unwrap();
        let o = SymbolicOrbit::new(&s, vec![0]).unwrap();
        let mut ch = channel(&o);
        ch.cap = q(0, 1);
        ch.eps = q(0, 1);
        assert!(verify_locking(&f, &ch).unwrap().locked);
        // 01 costs 1 per symbol; cheaper cycles survive its small channel.
        let o2 = SymbolicOrbit::new(&s, vec![0, 1]).unwrap();
        let v = verify_locking(&f, &channel(&o2)).unwrap();
        assert!(!v.locked);
        assert!(v.competitors[0].1 < v.orbit_mean);
    }
}
