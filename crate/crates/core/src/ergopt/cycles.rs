//! Minimum mean cycles, barriers, the Aubry set and sub-actions on the
//! window graph of an [`EdgePotential`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::potential::EdgePotential;
use super::weight::Weight;
use crate::error::{Error, Result};
use crate::sft::SymbolicOrbit;

#[derive(Clone, Debug, PartialEq)]
pub struct CycleMeasure<W> {
    pub cycle: SymbolicOrbit,
    /// Average cost per symbol.
    pub mean: W,
}

/// Karp: min over v of max over k of (D_n(v) − D_k(v)) / (n − k), where
/// D_k(v) is the least cost of a k-edge walk ending at v from anywhere.
pub fn karp_mean<W: Weight>(n: usize, edges: &[(usize, usize, W)]) -> Option<W> {
    let mut d: Vec<Vec<Option<W>>> = vec![vec![Some(W::zero()); n]];
    for k in 0..n {
        let mut next: Vec<Option<W>> = vec![None; n];
        for (a, b, c) in edges {
            if let Some(da) = &d[k][*a] {
                let cand = da.clone() + c.clone();
                if next[*b].as_ref().map_or(true, |x| cand < *x) {
                    next[*b] = Some(cand);
                }
            }
        }
        d.push(next);
    }
    let mut best: Option<W> = None;
    for v in 0..n {
        let Some(dn) = &d[n][v] else { continue };
        let worst = (0..n)
            .filter_map(|k| d[k][v].as_ref().map(|dk| (dn.clone() - dk.clone()).div_int(n - k)))
            .fold(None, |acc: Option<W>, x| match acc {
                Some(a) if a >= x => Some(a),
                _ => Some(x),
            });
        if let Some(w) = worst {
            if best.as_ref().map_or(true, |b| w < *b) {
                best = Some(w);
            }
        }
    }
    best
}

/// Shortest distances from a virtual source joined to every vertex at cost 0.
/// On a negative cycle returns it in traversal order with its total cost.
pub fn shortest_potentials<W: Weight>(
    n: usize,
    edges: &[(usize, usize, W)],
) -> std::result::Result<Vec<W>, (Vec<usize>, W)> {
    let mut dist = vec![W::zero(); n];
    let mut pred = vec![usize::MAX; n];
    let mut last = None;
    for _ in 0..=n {
        last = None;
        for (i, (a, b, c)) in edges.iter().enumerate() {
            let cand = dist[*a].clone() + c.clone();
            if cand.lt_tol(&dist[*b]) {
                dist[*b] = cand;
                pred[*b] = i;
                last = Some(*b);
            }
        }
        if last.is_none() {
            return Ok(dist);
        }
    }
    let mut v = last.expect("still relaxing after n rounds");
    for _ in 0..n {
        v = edges[pred[v]].0;
    }
    let start = v;
    let mut cycle = vec![start];
    let mut total = edges[pred[start]].2.clone();
    let mut u = edges[pred[start]].0;
    while u != start {
        cycle.push(u);
        total = total + edges[pred[u]].2.clone();
        u = edges[pred[u]].0;
    }
    cycle.reverse();
    Err((cycle, total))
}

/// A simple cycle in the subgraph, if any.
pub fn find_cycle(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    // 0 unseen, 1 on stack, 2 done.
    let mut state = vec![0u8; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        parent[w] = v;
                        stack.push((w, 0));
                    }
                    1 => {
                        let mut cycle = vec![v];
                        let mut u = v;
                        while u != w {
                            u = parent[u];
                            cycle.push(u);
                        }
                        cycle.reverse();
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

fn reduced<W: Weight>(f: &EdgePotential<W>, m: &W) -> (super::potential::WordGraph<W>, Vec<(usize, usize, W)>) {
    let g = f.graph();
    let r = g.edges.iter().map(|(a, b, c)| (*a, *b, c.clone() - m.clone())).collect();
    (g, r)
}

fn negative_cycle_error<W: Weight>(words: Vec<usize>, total: W) -> Error {
    Error::NegativeCycle { cycle: words, weight: total.to_f64() }
}

/// A cycle of least mean cost.
pub fn min_mean_cycle<W: Weight>(f: &EdgePotential<W>) -> Result<CycleMeasure<W>> {
    let g = f.graph();
    let m = karp_mean(g.len(), &g.edges).ok_or_else(|| Error::InvalidSft("no cycles".into()))?;
    let (g, r) = reduced(f, &m);
    let pi = shortest_potentials(g.len(), &r)
        .map_err(|(c, t)| negative_cycle_error(g.cycle_word(&c), t))?;
    let tight: Vec<(usize, usize)> = r
        .iter()
        .filter(|(a, b, c)| (c.clone() + pi[*a].clone() - pi[*b].clone()).is_zero_tol())
        .map(|(a, b, _)| (*a, *b))
        .collect();
    let cycle = find_cycle(g.len(), &tight).expect("the minimum mean is attained on a tight cycle");
    let orbit = SymbolicOrbit::new(f.sft(), g.cycle_word(&cycle))?;
    let mean = f.cycle_mean(&orbit);
    Ok(CycleMeasure { cycle: orbit, mean })
}

/// Pairwise barriers Φ(a, b): least reduced cost of a walk with at least one edge.
#[derive(Clone, Debug)]
pub struct Barriers<W> {
    pub vertices: Vec<Vec<usize>>,
    pub index: HashMap<Vec<usize>, usize>,
    pub mean: W,
    pub phi: Vec<Vec<Option<W>>>,
}

impl<W: Weight> Barriers<W> {
    pub fn get(&self, a: &[usize], b: &[usize]) -> Option<&W> {
        let (i, j) = (*self.index.get(a)?, *self.index.get(b)?);
        self.phi[i][j].as_ref()
    }
}

pub fn discrete_mane_potential<W: Weight>(f: &EdgePotential<W>, m: &W) -> Result<Barriers<W>> {
    let (g, r) = reduced(f, m);
    shortest_potentials(g.len(), &r).map_err(|(c, t)| negative_cycle_error(g.cycle_word(&c), t))?;
    let n = g.len();
    let mut phi: Vec<Vec<Option<W>>> = vec![vec![None; n]; n];
    for (a, b, c) in r {
        if phi[a][b].as_ref().map_or(true, |x| c < *x) {
            phi[a][b] = Some(c);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = phi[i][k].clone() else { continue };
            for j in 0..n {
                if let Some(kj) = &phi[k][j] {
                    let cand = ik.clone() + kj.clone();
                    if phi[i][j].as_ref().map_or(true, |x| cand < *x) {
                        phi[i][j] = Some(cand);
                    }
                }
            }
        }
    }
    Ok(Barriers { vertices: g.vertices, index: g.index, mean: m.clone(), phi })
}

/// Vertices on zero-mean reduced cycles and the edges those cycles use.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteAubry<W> {
    pub mean: W,
    pub window: usize,
    pub vertices: BTreeSet<Vec<usize>>,
    pub tight_edges: BTreeSet<(Vec<usize>, Vec<usize>)>,
}

impl<W: Weight> DiscreteAubry<W> {
    /// True when the word is read along some walk of tight edges.
    pub fn contains_word(&self, word: &[usize]) -> bool {
        let k = self.window - 1;
        if word.is_empty() {
            return true;
        }
        if word.len() < k {
            return self.vertices.iter().any(|v| v.windows(word.len()).any(|s| s == word));
        }
        let vs: Vec<&[usize]> = word.windows(k).collect();
        vs.iter().all(|v| self.vertices.contains(*v))
            && vs.windows(2).all(|p| self.tight_edges.contains(&(p[0].to_vec(), p[1].to_vec())))
    }

    /// Shift-metric distance from σ^i(word^∞) to the Aubry set.
    pub fn distance(&self, word: &[usize], i: usize) -> f64 {
        let p = word.len() as i64;
        let at = |j: i64| word[(i as i64 + j).rem_euclid(p) as usize];
        // Agreement on |j| < K is possible iff the centred window is tight.
        let cap = (p as usize + self.window) as i64;
        let mut k = 0i64;
        while k < cap {
            let next: Vec<usize> = (-k..=k).map(at).collect();
            if !self.contains_word(&next) {
                return 2f64.powi(1 - k as i32);
            }
            k += 1;
        }
        0.0
    }
}

pub fn discrete_aubry<W: Weight>(f: &EdgePotential<W>, m: &W) -> Result<DiscreteAubry<W>> {
    let b = discrete_mane_potential(f, m)?;
    Ok(aubry_from_barriers(f, &b))
}

pub fn aubry_from_barriers<W: Weight>(f: &EdgePotential<W>, b: &Barriers<W>) -> DiscreteAubry<W> {
    let n = b.vertices.len();
    let on: Vec<bool> = (0..n)
        .map(|i| b.phi[i][i].as_ref().is_some_and(|x| x.is_zero_tol()))
        .collect();
    let g = f.graph();
    let mut tight = BTreeSet::new();
    for (a, c, w) in &g.edges {
        if on[*a] && on[*c] {
            let Some(back) = b.phi[*c][*a].clone() else { continue };
            if (w.clone() - b.mean.clone() + back).is_zero_tol() {
                tight.insert((g.vertices[*a].clone(), g.vertices[*c].clone()));
            }
        }
    }
    DiscreteAubry {
        mean: b.mean.clone(),
        window: f.window(),
        vertices: (0..n).filter(|&i| on[i]).map(|i| b.vertices[i].clone()).collect(),
        tight_edges: tight,
    }
}

/// u on (w−1)-words with u(b) − u(a) ≤ f(a→b) − m.
#[derive(Clone, Debug, PartialEq)]
pub struct SubAction<W> {
    pub values: BTreeMap<Vec<usize>, W>,
    pub rounds: usize,
}

/// Value iteration u(b) ← min(u(b), u(a) + f − m) started at 0 on the Aubry
/// set and at a cost bound elsewhere.
pub fn sub_action<W: Weight>(f: &EdgePotential<W>, aubry: &DiscreteAubry<W>) -> SubAction<W> {
    let (g, r) = reduced(f, &aubry.mean);
    let n = g.len();
    let bound = r.iter().fold(W::zero(), |acc, (_, _, c)| {
        let a = if *c < W::zero() { -c.clone() } else { c.clone() };
        acc + a
    }) + W::from_ratio(1, 1);
    let mut u: Vec<W> = g
        .vertices
        .iter()
        .map(|v| if aubry.vertices.contains(v) { W::zero() } else { bound.clone() })
        .collect();
    let mut rounds = 0;
    loop {
        let mut changed = false;
        for (a, b, c) in &r {
            let cand = u[*a].clone() + c.clone();
            if cand.lt_tol(&u[*b]) {
                u[*b] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        rounds += 1;
        assert!(rounds <= n, "value iteration exceeded {n} rounds");
    }
    SubAction { values: g.vertices.into_iter().zip(u).collect(), rounds }
}

/// Windows where u(b) − u(a) > f − m.
pub fn domination_violations<W: Weight>(f: &EdgePotential<W>, m: &W, u: &SubAction<W>) -> Vec<Vec<usize>> {
    let k = f.window() - 1;
    f.values()
        .iter()
        .filter(|(w, c)| {
            let lhs = u.values[&w[1..]].clone() - u.values[&w[..k]].clone();
            !lhs.le_tol(&((*c).clone() - m.clone()))
        })
        .map(|(w, _)| w.clone())
        .collect()
}

/// Tight edges where u(b) − u(a) ≠ f − m.
pub fn calibration_violations<W: Weight>(
    f: &EdgePotential<W>,
    aubry: &DiscreteAubry<W>,
    u: &SubAction<W>,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    aubry
        .tight_edges
        .iter()
        .filter(|(a, b)| {
            let mut w = a.clone();
            w.push(*b.last().unwrap());
            let lhs = u.values[b].clone() - u.values[a].clone();
            !(lhs - (f.values()[&w].clone() - aubry.mean.clone())).is_zero_tol()
        })
        .cloned()
        .collect()
}

/// Vertices with finite barriers in both directions to some Aubry vertex.
pub fn mane_vertices<W: Weight>(b: &Barriers<W>, aubry: &DiscreteAubry<W>) -> HashSet<Vec<usize>> {
    let anchors: Vec<usize> = aubry.vertices.iter().map(|v| b.index[v]).collect();
    (0..b.vertices.len())
        .filter(|&i| anchors.iter().any(|&a| b.phi[i][a].is_some() && b.phi[a][i].is_some()))
        .map(|i| b.vertices[i].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::Sft;
    use num::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        <BigRational as Weight>::from_ratio(n, d)
    }

    #[test]
    fn self_loop_mean() {
        let s = Sft::full(1);
        let f = EdgePotential::constant(&s, 2, q(3, 1)).unwrap();
        let c = min_mean_cycle(&f).unwrap();
        assert_eq!(c.mean, q(3, 1));
        assert_eq!(c.cycle.word(), &[0]);
    }

    #[test]
    fn disjoint_loops_pick_cheaper() {
        let s = Sft::from_fn(2, |a, b| a == b).unwrap();
        let f = EdgePotential::from_fn(&s, 2, |w| q(1 + w[0] as i64, 1)).unwrap();
        let c = min_mean_cycle(&f).unwrap();
        assert_eq!(c.mean, q(1, 1));
        assert_eq!(c.cycle.word(), &[0]);
    }

    #[test]
    fn barrier_below_mean_reports_cycle() {
        let s = Sft::golden_mean();
        let f = EdgePotential::from_fn(&s, 2, |w| q((w[0] + w[1]) as i64, 1)).unwrap();
        let err = discrete_mane_potential(&f, &q(1, 2)).unwrap_err();
        match err {
            Error::NegativeCycle { cycle, weight } => {
                assert_eq!(cycle, vec![0]);
                assert_eq!(weight, -0.5);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn golden_mean_instance() {
        let s = Sft::golden_mean();
        let f = EdgePotential::from_fn(&s, 2, |w| q((w[0] + w[1]) as i64, 1)).unwrap();
        let c = min_mean_cycle(&f).unwrap();
        assert_eq!(c.mean, q(0, 1));
        let a = discrete_aubry(&f, &c.mean).unwrap();
        assert_eq!(a.vertices.iter().cloned().collect::<Vec<_>>(), vec![vec![0]]);
        assert_eq!(a.distance(&[0], 0), 0.0);
        assert_eq!(a.distance(&[0, 1], 1), 2.0);
        assert_eq!(a.distance(&[0, 0, 1], 0), 1.0);
        let u = sub_action(&f, &a);
        assert!(domination_violations(&f, &c.mean, &u).is_empty());
        assert!(calibration_violations(&f, &a, &u).is_empty());
        // u(1) − u(0) ≤ f(01) = 1 and u(0) − u(1) ≤ f(10) = 1.
        assert_eq!(u.values[&vec![1]], q(1, 1));
    }

    #[test]
    fn zero_potential_full_shift_is_all_aubry() {
        let s = Sft::full(3);
        let f = EdgePotential::constant(&s, 2, q(0, 1)).unwrap();
        let a = discrete_aubry(&f, &q(0, 1)).unwrap();
        assert_eq!(a.vertices.len(), 3);
        assert_eq!(a.tight_edges.len(), 9);
        let u = sub_action(&f, &a);
        assert!(u.values.values().all(|x| *x == q(0, 1)));
    }

    #[test]
    fn find_cycle_on_dag_is_none() {
        assert_eq!(find_cycle(3, &[(0, 1), (1, 2)]), None);
        let c = find_cycle(3, &[(0, 1), (1, 2), (2, 1)]).unwrap();
        assert_eq!(c.len(), 2);
    }
}
