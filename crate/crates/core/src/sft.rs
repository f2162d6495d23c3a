//! Subshifts of finite type.
//!
//! Entropy from the Perron root of each recurrent class, shortest periodic
//! words, the two-sided shift metric on periodic points, and the coding of a
//! sampled system by (2T, δ) dynamic balls together with the periodic
//! specification read off the shortest cycle of that coding.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::TorusPoint;

/// Word length used by the word-count entropy estimate.
pub const WORD_COUNT_LENGTH: usize = 24;

#[derive(Serialize, Deserialize)]
struct SftRecord {
    alphabet_size: usize,
    transitions: Vec<Vec<u8>>,
}

/// Alphabet {0..M} with a 0/1 transition matrix, stored as sorted successor lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SftRecord", into = "SftRecord")]
pub struct Sft {
    succ: Vec<Vec<usize>>,
}

impl TryFrom<SftRecord> for Sft {
    type Error = Error;
    fn try_from(r: SftRecord) -> Result<Self> {
        if r.transitions.len() != r.alphabet_size {
            return Err(Error::InvalidSft(format!(
                "alphabet_size {} but {} rows",
                r.alphabet_size,
                r.transitions.len()
            )));
        }
        Sft::new(r.transitions)
    }
}

impl From<Sft> for SftRecord {
    fn from(s: Sft) -> Self {
        SftRecord {
            alphabet_size: s.alphabet_size(),
            transitions: s.transitions(),
        }
    }
}

impl Sft {
    pub fn new(transitions: Vec<Vec<u8>>) -> Result<Self> {
        let m = transitions.len();
        if m == 0 {
            return Err(Error::InvalidSft("empty alphabet".into()));
        }
        let mut succ = vec![Vec::new(); m];
        for (i, row) in transitions.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidSft(format!("row {i} has length {}", row.len())));
            }
            for (j, &e) in row.iter().enumerate() {
                match e {
                    0 => {}
                    1 => succ[i].push(j),
                    _ => return Err(Error::InvalidSft(format!("entry ({i},{j}) = {e}"))),
                }
            }
        }
        Self::from_successors(succ)
    }

    /// Successor lists; duplicates are merged.
    pub fn from_successors(mut succ: Vec<Vec<usize>>) -> Result<Self> {
        let m = succ.len();
        if m == 0 {
            return Err(Error::InvalidSft("empty alphabet".into()));
        }
        let mut indegree = vec![0usize; m];
        for (i, row) in succ.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            if row.is_empty() {
                return Err(Error::InvalidSft(format!("row {i} is empty")));
            }
            if let Some(&j) = row.last().filter(|&&j| j >= m) {
                return Err(Error::InvalidSft(format!("symbol {j} out of range")));
            }
            row.iter().for_each(|&j| indegree[j] += 1);
        }
        if let Some(j) = indegree.iter().position(|&d| d == 0) {
            return Err(Error::InvalidSft(format!("column {j} is empty")));
        }
        Ok(Sft { succ })
    }

    fn from_allowed(allowed: Vec<Vec<bool>>) -> Result<Self> {
        let m = allowed.len();
        Self::from_successors(
            allowed
                .iter()
                .map(|row| (0..m).filter(|&j| row[j]).collect())
                .collect(),
        )
    }

    pub fn from_fn(m: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        Self::from_allowed((0..m).map(|i| (0..m).map(|j| f(i, j)).collect()).collect())
    }

    pub fn full(m: usize) -> Self {
        Self::from_fn(m, |_, _| true).expect("full shift")
    }

    /// Forbids the word 11.
    pub fn golden_mean() -> Self {
        Self::from_fn(2, |i, j| !(i == 1 && j == 1)).expect("golden mean")
    }

    /// Cyclic permutation 0 → 1 → … → m−1 → 0.
    pub fn cycle(m: usize) -> Self {
        Self::from_fn(m, |i, j| j == (i + 1) % m).expect("cycle")
    }

    /// Random matrix with entry density `p`, repaired so no row or column is empty.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize, p: f64) -> Self {
        let mut a: Vec<Vec<bool>> = (0..m)
            .map(|_| (0..m).map(|_| rng.gen_bool(p)).collect())
            .collect();
        for i in 0..m {
            if !a[i].iter().any(|&b| b) {
                let j = rng.gen_range(0..m);
                a[i][j] = true;
            }
        }
        for j in 0..m {
            if !(0..m).any(|i| a[i][j]) {
                let i = rng.gen_range(0..m);
                a[i][j] = true;
            }
        }
        Self::from_allowed(a).expect("repaired matrix")
    }

    pub fn alphabet_size(&self) -> usize {
        self.succ.len()
    }

    pub fn allowed(&self, a: usize, b: usize) -> bool {
        self.succ[a].binary_search(&b).is_ok()
    }

    pub fn successors(&self, a: usize) -> &[usize] {
        &self.succ[a]
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn transitions(&self) -> Vec<Vec<u8>> {
        let m = self.alphabet_size();
        self.succ
            .iter()
            .map(|r| {
                let mut row = vec![0u8; m];
                r.iter().for_each(|&j| row[j] = 1);
                row
            })
            .collect()
    }

    /// True when every consecutive pair, including the wrap, is allowed.
    pub fn is_periodic_word(&self, word: &[usize]) -> bool {
        let p = word.len();
        p > 0
            && word.iter().all(|&s| s < self.alphabet_size())
            && (0..p).all(|i| self.allowed(word[i], word[(i + 1) % p]))
    }

    pub fn is_word(&self, word: &[usize]) -> bool {
        word.iter().all(|&s| s < self.alphabet_size())
            && word.windows(2).all(|w| self.allowed(w[0], w[1]))
    }

    /// Nontrivial strongly connected components (those carrying a cycle).
    pub fn recurrent_components(&self) -> Vec<Vec<usize>> {
        let m = self.alphabet_size();
        let mut g = DiGraph::<(), ()>::with_capacity(m, self.edge_count());
        let nodes: Vec<_> = (0..m).map(|_| g.add_node(())).collect();
        for a in 0..m {
            for &b in &self.succ[a] {
                g.add_edge(nodes[a], nodes[b], ());
            }
        }
        let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                v.sort_unstable();
                v
            })
            .filter(|c| c.len() > 1 || self.allowed(c[0], c[0]))
            .collect();
        comps.sort();
        comps
    }
}

/// A periodic point of Σ_A given by one period of its symbol sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicOrbit {
    word: Vec<usize>,
}

impl SymbolicOrbit {
    pub fn new(sft: &Sft, word: Vec<usize>) -> Result<Self> {
        if !sft.is_periodic_word(&word) {
            return Err(Error::InvalidWord(format!("{word:?}")));
        }
        Ok(SymbolicOrbit { word })
    }

    pub fn word(&self) -> &[usize] {
        &self.word
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }

    /// Symbol at any integer index of the periodic extension.
    pub fn symbol(&self, i: i64) -> usize {
        self.word[i.rem_euclid(self.word.len() as i64) as usize]
    }

    /// Lexicographically least rotation; equal for the two words iff same cycle.
    pub fn canonical(&self) -> Vec<usize> {
        let p = self.word.len();
        (0..p)
            .map(|r| (0..p).map(|i| self.word[(r + i) % p]).collect::<Vec<_>>())
            .min()
            .expect("nonempty word")
    }

    pub fn same_cycle(&self, other: &SymbolicOrbit) -> bool {
        self.period() == other.period() && self.canonical() == other.canonical()
    }

    /// Smallest period of the bi-infinite sequence.
    pub fn primitive_period(&self) -> usize {
        let p = self.word.len();
        (1..=p)
            .find(|&d| p % d == 0 && (0..p).all(|i| self.word[i] == self.word[(i + d) % p]))
            .expect("p divides itself")
    }
}

/// Least |j| at which the two sequences differ, scanning |j| ≤ horizon.
pub fn first_mismatch(
    x: impl Fn(i64) -> usize,
    y: impl Fn(i64) -> usize,
    horizon: usize,
) -> Option<usize> {
    (0..=horizon as i64)
        .find(|&k| x(k) != y(k) || x(-k) != y(-k))
        .map(|k| k as usize)
}

/// d(x,y) = 2^{-i}, i the largest radius of central agreement; mismatch at
/// |j| = k gives 2^{1-k}, identical sequences give 0.
pub fn distance_from_mismatch(mismatch: Option<usize>) -> f64 {
    match mismatch {
        None => 0.0,
        Some(k) => 2f64.powi(1 - k as i32),
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Mismatch radius between σ^i(a^∞) and σ^j(b^∞).
pub fn periodic_mismatch(a: &[usize], i: usize, b: &[usize], j: usize) -> Option<usize> {
    let (p, q) = (a.len() as i64, b.len() as i64);
    let horizon = (a.len() / gcd(a.len(), b.len())) * b.len();
    first_mismatch(
        |k| a[(i as i64 + k).rem_euclid(p) as usize],
        |k| b[(j as i64 + k).rem_euclid(q) as usize],
        horizon,
    )
}

/// Shift-metric distance between σ^i(a^∞) and σ^j(b^∞).
pub fn periodic_distance(a: &[usize], i: usize, b: &[usize], j: usize) -> f64 {
    distance_from_mismatch(periodic_mismatch(a, i, b, j))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// max over recurrent classes of log ρ.
    pub value: f64,
    /// Class realizing the maximum.
    pub component: Vec<usize>,
    /// log(#words of length n) / n.
    pub word_count: f64,
    pub word_length: usize,
}

/// Topological entropy, with the word-count cross-check at length 24.
pub fn entropy(sft: &Sft) -> EntropyReport {
    let mut best = (0.0f64, Vec::new());
    for comp in sft.recurrent_components() {
        let h = spectral_radius(sft, &comp).ln().max(0.0);
        if best.1.is_empty() || h > best.0 {
            best = (h, comp);
        }
    }
    EntropyReport {
        value: best.0,
        component: best.1,
        word_count: word_count_entropy(sft, WORD_COUNT_LENGTH),
        word_length: WORD_COUNT_LENGTH,
    }
}

/// Perron root of the transition matrix restricted to an irreducible class.
pub fn spectral_radius(sft: &Sft, component: &[usize]) -> f64 {
    let n = component.len();
    let local: HashMap<usize, usize> = component.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    if n <= 96 {
        let a = DMatrix::from_fn(n, n, |i, j| {
            if sft.allowed(component[i], component[j]) {
                1.0
            } else {
                0.0
            }
        });
        return a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
    }
    // A + I is primitive on the class, so power iteration converges to ρ + 1.
    let adj: Vec<Vec<usize>> = component
        .iter()
        .map(|&v| sft.successors(v).iter().filter_map(|w| local.get(w).copied()).collect())
        .collect();
    let mut x = vec![1.0 / n as f64; n];
    let mut rho = 0.0;
    for _ in 0..200_000 {
        let mut y = x.clone();
        for (i, row) in adj.iter().enumerate() {
            for &j in row {
                y[j] += x[i];
            }
        }
        let s: f64 = y.iter().sum();
        let next = s - 1.0;
        y.iter_mut().for_each(|v| *v /= s);
        x = y;
        if (next - rho).abs() <= 1e-14 * next.max(1.0) {
            return next;
        }
        rho = next;
    }
    rho
}

/// log(1ᵀ A^{n−1} 1) / n.
pub fn word_count_entropy(sft: &Sft, n: usize) -> f64 {
    assert!(n >= 1);
    let m = sft.alphabet_size();
    let mut c = vec![1.0f64; m];
    let mut log_scale = 0.0;
    for _ in 1..n {
        let mut next = vec![0.0; m];
        for a in 0..m {
            for &b in sft.successors(a) {
                next[b] += c[a];
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        log_scale += s.ln();
        c = next;
    }
    (log_scale + c.iter().sum::<f64>().ln()) / n as f64
}

/// 1 + M e^{1−h}.
pub fn girth_bound(alphabet_size: usize, h: f64) -> f64 {
    1.0 + alphabet_size as f64 * (1.0 - h).exp()
}

/// A periodic word of least period, found by BFS from every symbol.
pub fn shortest_periodic_orbit(sft: &Sft) -> SymbolicOrbit {
    let m = sft.alphabet_size();
    let mut best: Option<Vec<usize>> = None;
    for s in 0..m {
        let limit = best.as_ref().map_or(usize::MAX, Vec::len);
        if let Some(c) = shortest_cycle_through(sft, s, limit) {
            if c.len() < limit {
                best = Some(c);
            }
        }
    }
    let word = best.expect("nonempty subshift has a cycle");
    let h = entropy(sft).value;
    let bound = girth_bound(m, h);
    assert!(
        word.len() as f64 <= bound + 1e-9,
        "period {} exceeds girth bound {bound}",
        word.len()
    );
    SymbolicOrbit { word }
}

fn shortest_cycle_through(sft: &Sft, s: usize, limit: usize) -> Option<Vec<usize>> {
    let m = sft.alphabet_size();
    let mut parent = vec![usize::MAX; m];
    let mut depth = vec![usize::MAX; m];
    let mut queue = VecDeque::from([s]);
    depth[s] = 0;
    while let Some(u) = queue.pop_front() {
        if depth[u] + 1 >= limit {
            return None;
        }
        for &v in sft.successors(u) {
            if v == s {
                let mut word = vec![u];
                let mut w = u;
                while w != s {
                    w = parent[w];
                    word.push(w);
                }
                word.reverse();
                return Some(word);
            }
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

/// A point of a sampled phase space.
pub trait SamplePoint {
    fn distance(&self, other: &Self) -> f64;

    /// Bucket of side at least `size`, so points closer than `size` lie in
    /// neighbouring buckets. `None` disables bucketing.
    fn bucket(&self, _size: f64) -> Option<[i64; 2]> {
        None
    }

    fn neighbour_buckets(_bucket: [i64; 2], _size: f64) -> Vec<[i64; 2]> {
        Vec::new()
    }
}

fn torus_cells(size: f64) -> i64 {
    ((1.0 / size).floor() as i64).max(1)
}

impl SamplePoint for TorusPoint {
    fn distance(&self, other: &Self) -> f64 {
        TorusPoint::distance(self, other)
    }

    fn bucket(&self, size: f64) -> Option<[i64; 2]> {
        let n = torus_cells(size);
        let key = |x: f64| ((x * n as f64).floor() as i64).rem_euclid(n);
        Some([key(self.0[0]), key(self.0[1])])
    }

    fn neighbour_buckets(b: [i64; 2], size: f64) -> Vec<[i64; 2]> {
        let n = torus_cells(size);
        let mut out = Vec::with_capacity(9);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let c = [(b[0] + dx).rem_euclid(n), (b[1] + dy).rem_euclid(n)];
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }
}

/// A periodic symbol sequence read from its index 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicWord(pub Vec<usize>);

impl SamplePoint for PeriodicWord {
    fn distance(&self, other: &Self) -> f64 {
        periodic_distance(&self.0, 0, &other.0, 0)
    }
}

/// Finite sample of a dynamical system: `next[i]` is the image of sample i
/// when it is itself sampled.
#[derive(Clone, Debug)]
pub struct SampledSystem<P> {
    pub points: Vec<P>,
    pub next: Vec<Option<usize>>,
}

impl<P: SamplePoint> SampledSystem<P> {
    pub fn new(points: Vec<P>, next: Vec<Option<usize>>) -> Result<Self> {
        if points.len() != next.len() {
            return Err(Error::Parameter("points and next differ in length".into()));
        }
        if next.iter().flatten().any(|&j| j >= points.len()) {
            return Err(Error::Parameter("next index out of range".into()));
        }
        Ok(SampledSystem { points, next })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iterate(&self, mut i: usize, n: usize) -> Option<usize> {
        for _ in 0..n {
            i = self.next[i]?;
        }
        Some(i)
    }

    /// Orbit i, φ(i), …, φ^n(i) when fully sampled.
    pub fn orbit(&self, i: usize, n: usize) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(n + 1);
        let mut c = i;
        out.push(c);
        for _ in 0..n {
            c = self.next[c]?;
            out.push(c);
        }
        Some(out)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.points[i].distance(&self.points[j])
    }
}

/// Symbolic coding of a sampled system by a (2T, δ)-spanning set.
#[derive(Clone, Debug)]
pub struct DynamicCoding {
    pub sft: Sft,
    /// Sample index of the centre carried by each symbol.
    pub centers: Vec<usize>,
    /// Spanning-set size before stranded symbols are pruned.
    pub spanning_size: usize,
    pub horizon: usize,
    pub radius: f64,
    /// For each allowed transition (a, b), a sample owned by a whose
    /// 2T-image is owned by b.
    pub witnesses: BTreeMap<(usize, usize), usize>,
}

/// Codes a sampled system by dynamic balls B(θ, 2T, δ).
///
/// Centres are chosen greedily in sample order followed by one removal pass;
/// each sample is owned by the first remaining centre whose ball contains it.
/// A(θ, ϑ) = 1 when some sample owned by θ has its 2T-image owned by ϑ.
/// Symbols left without predecessor or successor are pruned.
pub fn dynamic_ball_transitions<P: SamplePoint>(
    system: &SampledSystem<P>,
    horizon: usize,
    radius: f64,
) -> Result<DynamicCoding> {
    let span = 2 * horizon;
    let empty = || Error::EmptySpanningSet { horizon, radius };
    if !(radius > 0.0) {
        return Err(empty());
    }
    // Orbit windows stored contiguously, far end first, so that the usual
    // rejection touches one point.
    let w = span + 1;
    let mut slot: Vec<Option<usize>> = vec![None; system.len()];
    let mut flat: Vec<&P> = Vec::new();
    for (i, s) in slot.iter_mut().enumerate() {
        if let Some(o) = system.orbit(i, span) {
            *s = Some(flat.len() / w);
            flat.push(&system.points[o[span]]);
            flat.extend(o[..span].iter().map(|&j| &system.points[j]));
        }
    }
    let within = |a: usize, b: usize| -> bool {
        let (oa, ob) = (&flat[a * w..(a + 1) * w], &flat[b * w..(b + 1) * w]);
        oa.iter().zip(ob).all(|(x, y)| x.distance(y) <= radius)
    };

    let mut buckets: HashMap<Option<[i64; 2]>, Vec<(usize, usize)>> = HashMap::new();
    let keys = |p: usize| -> Vec<Option<[i64; 2]>> {
        match system.points[p].bucket(radius) {
            None => vec![None],
            Some(b) => P::neighbour_buckets(b, radius).into_iter().map(Some).collect(),
        }
    };

    let mut centers: Vec<usize> = Vec::new();
    for p in 0..system.len() {
        let Some(sp) = slot[p] else { continue };
        let covered = keys(p)
            .iter()
            .filter_map(|k| buckets.get(k))
            .any(|v| v.iter().any(|&(_, sc)| within(sc, sp)));
        if !covered {
            buckets.entry(system.points[p].bucket(radius)).or_default().push((p, sp));
            centers.push(p);
        }
    }
    if centers.is_empty() {
        return Err(empty());
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); system.len()];
    let mut covering: HashMap<usize, Vec<usize>> = HashMap::new();
    for p in 0..system.len() {
        let Some(sp) = slot[p] else { continue };
        for k in keys(p) {
            let Some(v) = buckets.get(&k) else { continue };
            for &(c, sc) in v {
                if within(sc, sp) {
                    members[p].push(c);
                    covering.entry(c).or_default().push(p);
                }
            }
        }
    }
    let mut count: Vec<usize> = members.iter().map(Vec::len).collect();
    let mut removed: HashMap<usize, bool> = HashMap::new();
    for &c in &centers {
        let pts = &covering[&c];
        if pts.iter().all(|&p| count[p] >= 2) {
            pts.iter().for_each(|&p| count[p] -= 1);
            removed.insert(c, true);
        }
    }
    let kept: Vec<usize> = centers.iter().copied().filter(|c| !removed.contains_key(c)).collect();
    let spanning_size = kept.len();
    let index: HashMap<usize, usize> = kept.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    // Each sample is owned by the first kept centre covering it.
    let owner: Vec<Option<usize>> = members
        .iter()
        .map(|m| m.iter().filter_map(|c| index.get(c).copied()).min())
        .collect();

    let k = kept.len();
    let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for p in 0..system.len() {
        let Some(a) = owner[p] else { continue };
        let Some(q) = system.iterate(p, span) else { continue };
        let Some(b) = owner[q] else { continue };
        edges.entry((a, b)).or_insert(p);
    }

    // Prune stranded symbols until every symbol has a predecessor and a successor.
    let mut outdeg = vec![0usize; k];
    let mut indeg = vec![0usize; k];
    let mut preds = vec![Vec::new(); k];
    let mut succs = vec![Vec::new(); k];
    for &(a, b) in edges.keys() {
        outdeg[a] += 1;
        indeg[b] += 1;
        succs[a].push(b);
        preds[b].push(a);
    }
    let mut alive = vec![true; k];
    let mut stack: Vec<usize> = (0..k).filter(|&a| outdeg[a] == 0 || indeg[a] == 0).collect();
    while let Some(a) = stack.pop() {
        if !alive[a] {
            continue;
        }
        alive[a] = false;
        for &b in &succs[a] {
            indeg[b] -= 1;
            if alive[b] && indeg[b] == 0 {
                stack.push(b);
            }
        }
        for &b in &preds[a] {
            outdeg[b] -= 1;
            if alive[b] && outdeg[b] == 0 {
                stack.push(b);
            }
        }
    }
    let live: Vec<usize> = (0..k).filter(|&a| alive[a]).collect();
    if live.is_empty() {
        return Err(empty());
    }
    let relabel: HashMap<usize, usize> = live.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let mut succ = vec![Vec::new(); live.len()];
    let mut witnesses = BTreeMap::new();
    for ((a, b), p) in edges {
        if let (Some(&i), Some(&j)) = (relabel.get(&a), relabel.get(&b)) {
            succ[i].push(j);
            witnesses.insert((i, j), p);
        }
    }
    let sft = Sft::from_successors(succ)?;
    Ok(DynamicCoding {
        sft,
        centers: live.iter().map(|&a| kept[a]).collect(),
        spanning_size,
        horizon,
        radius,
        witnesses,
    })
}

/// One orbit segment of a specification, in sample indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecSegment {
    pub start: usize,
    pub length: usize,
}

/// Periodic specification: segment i ends where segment i+1 starts, up to a jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecificationSymbolic {
    pub segments: Vec<SpecSegment>,
    /// jump_sizes[i] is the gap between the end of segment i and the start of segment i+1.
    pub jump_sizes: Vec<f64>,
    /// Coded symbols visited, one per segment.
    pub symbols: Vec<usize>,
    pub horizon: usize,
    pub spanning_size: usize,
}

impl SpecificationSymbolic {
    pub fn jump_count(&self) -> usize {
        self.segments.len()
    }

    pub fn period(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn max_jump(&self) -> f64 {
        self.jump_sizes.iter().copied().fold(0.0, f64::max)
    }

    /// Every jump is 0 or an integer power of 2, as for the shift metric.
    pub fn jumps_are_dyadic(&self) -> bool {
        self.jump_sizes
            .iter()
            .all(|&j| j == 0.0 || (j.log2().fract() == 0.0 && j <= 2.0))
    }
}

/// Reads a periodic T-specification off the shortest cycle of the coding:
/// segment i follows the witness of θ_i → θ_{i+1} over [T, 3T].
pub fn build_periodic_specification<P: SamplePoint>(
    system: &SampledSystem<P>,
    horizon: usize,
    radius: f64,
) -> Result<SpecificationSymbolic> {
    let coding = dynamic_ball_transitions(system, horizon, radius)?;
    Ok(specification_from_coding(system, &coding))
}

pub fn specification_from_coding<P: SamplePoint>(
    system: &SampledSystem<P>,
    coding: &DynamicCoding,
) -> SpecificationSymbolic {
    let t = coding.horizon;
    let cycle = shortest_periodic_orbit(&coding.sft);
    let word = cycle.word();
    let p = word.len();
    let wit: Vec<usize> = (0..p)
        .map(|i| coding.witnesses[&(word[i], word[(i + 1) % p])])
        .collect();
    let mut segments = Vec::with_capacity(p);
    let mut jump_sizes = Vec::with_capacity(p);
    for i in 0..p {
        let start = system.iterate(wit[i], t).expect("witness orbit sampled");
        let end = system.iterate(wit[i], 3 * t).expect("witness orbit sampled");
        let next_start = system.iterate(wit[(i + 1) % p], t).expect("witness orbit sampled");
        segments.push(SpecSegment { start, length: 2 * t });
        jump_sizes.push(system.distance(end, next_start));
    }
    SpecificationSymbolic {
        segments,
        jump_sizes,
        symbols: word.to_vec(),
        horizon: t,
        spanning_size: coding.spanning_size,
    }
}

/// All 2^q binary words of length q, each mapped to its left rotation.
pub fn periodic_full_shift_sample(q: usize) -> SampledSystem<PeriodicWord> {
    let n = 1usize << q;
    let word = |x: usize| (0..q).map(|i| (x >> i) & 1).collect::<Vec<_>>();
    let points: Vec<PeriodicWord> = (0..n).map(|x| PeriodicWord(word(x))).collect();
    let next = (0..n)
        .map(|x| Some((x >> 1) | ((x & 1) << (q - 1))))
        .collect();
    SampledSystem { points, next }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn golden() -> f64 {
        (1.0 + 5f64.sqrt()) / 2.0
    }

    #[test]
    fn full_two_shift_entropy_is_log2() {
        let r = entropy(&Sft::full(2));
        assert!((r.value - 2f64.ln()).abs() < 1e-12);
        assert!((r.word_count - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn golden_mean_entropy() {
        let r = entropy(&Sft::golden_mean());
        assert!((r.value - golden().ln()).abs() < 1e-12);
        assert!((r.value - 0.48121).abs() < 1e-5);
        assert!((r.word_count - r.value).abs() < 0.02);
    }

    // Word counts of the golden mean shift follow the Fibonacci recursion.
    #[test]
    fn golden_word_counts_match_fibonacci() {
        let s = Sft::golden_mean();
        let (mut a, mut b) = (2u64, 3u64);
        for n in 2..=30 {
            let est = word_count_entropy(&s, n);
            assert!((est - (b as f64).ln() / n as f64).abs() < 1e-12, "n={n}");
            let c = a + b;
            a = b;
            b = c;
        }
    }

    #[test]
    fn permutation_has_zero_entropy() {
        let r = entropy(&Sft::cycle(3));
        assert!(r.value.abs() < 1e-12);
        assert_eq!(r.component, vec![0, 1, 2]);
    }

    #[test]
    fn reducible_reports_realizing_component() {
        // 0 ⇄ 0 (self-loop) feeds a full 2-shift on {1, 2}.
        let s = Sft::new(vec![vec![1, 1, 0], vec![0, 1, 1], vec![0, 1, 1]]).unwrap();
        let r = entropy(&s);
        assert_eq!(r.component, vec![1, 2]);
        assert!((r.value - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn large_component_uses_power_iteration() {
        let s = Sft::full(120);
        assert!((entropy(&s).value - 120f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn shortest_orbits() {
        assert_eq!(shortest_periodic_orbit(&Sft::golden_mean()).word(), &[0]);
        let c = shortest_periodic_orbit(&Sft::cycle(3));
        assert_eq!(c.period(), 3);
        assert!((girth_bound(3, 0.0) - 9.154845485377136).abs() < 1e-12);
    }

    #[test]
    fn rejects_stranded_symbols() {
        assert!(Sft::new(vec![vec![1, 1], vec![0, 0]]).is_err());
        assert!(Sft::new(vec![vec![1, 0], vec![1, 0]]).is_err());
        assert!(Sft::new(vec![vec![2]]).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let s = Sft::golden_mean();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, r#"{"alphabet_size":2,"transitions":[[1,1],[1,0]]}"#);
        let back: Sft = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Sft>(r#"{"alphabet_size":2,"transitions":[[0,1],[0,1]]}"#).is_err());
    }

    #[test]
    fn shift_metric_convention() {
        let a = [0usize, 1];
        assert_eq!(periodic_distance(&a, 0, &a, 0), 0.0);
        assert_eq!(periodic_distance(&a, 0, &a, 1), 2.0);
        // 0^∞ vs (0001)^∞ at index 0: first mismatch at j = -1.
        assert_eq!(periodic_distance(&[0], 0, &[0, 0, 0, 1], 0), 1.0);
        assert_eq!(periodic_distance(&[0], 0, &[0, 0, 0, 0, 0, 1, 0, 0, 0, 0], 0), 2f64.powi(-4));
    }

    #[test]
    fn canonical_rotation() {
        let s = Sft::full(3);
        let a = SymbolicOrbit::new(&s, vec![2, 0, 1]).unwrap();
        let b = SymbolicOrbit::new(&s, vec![0, 1, 2]).unwrap();
        assert!(a.same_cycle(&b));
        assert_eq!(SymbolicOrbit::new(&s, vec![1, 2, 1, 2]).unwrap().primitive_period(), 2);
    }

    #[test]
    fn fixed_point_codes_to_one_symbol() {
        let sys = SampledSystem::new(vec![TorusPoint::new(0.0, 0.0)], vec![Some(0)]).unwrap();
        let c = dynamic_ball_transitions(&sys, 2, 0.1).unwrap();
        assert_eq!(c.sft.alphabet_size(), 1);
        let spec = build_periodic_specification(&sys, 2, 0.1).unwrap();
        assert_eq!(spec.jump_count(), 1);
        assert_eq!(spec.jump_sizes, vec![0.0]);
    }

    #[test]
    fn degenerate_radius_is_an_error() {
        let sys = SampledSystem::new(vec![TorusPoint::new(0.0, 0.0)], vec![Some(0)]).unwrap();
        assert!(dynamic_ball_transitions(&sys, 1, 0.0).is_err());
        let open = SampledSystem::new(vec![TorusPoint::new(0.0, 0.0)], vec![None]).unwrap();
        assert!(dynamic_ball_transitions(&open, 1, 0.1).is_err());
    }

    // The full shift sampled by periodic words codes to a 2T-block
    // presentation of itself: entropy exactly 2T log 2.
    #[test]
    fn full_shift_coded_by_itself() {
        for t in 1..=2 {
            let sys = periodic_full_shift_sample(4 * t + 3);
            let c = dynamic_ball_transitions(&sys, t, 0.5).unwrap();
            assert_eq!(c.spanning_size, 1 << (2 * t + 3));
            let h = entropy(&c.sft).value;
            assert!((h - 2.0 * t as f64 * 2f64.ln()).abs() < 1e-9, "T={t} h={h}");
            let spec = specification_from_coding(&sys, &c);
            assert!(spec.jumps_are_dyadic());
            assert!(spec.period() <= 4 * t * spec.jump_count());
        }
    }

    #[test]
    fn random_sft_obeys_girth_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = rng.gen_range(1..=10);
            let s = Sft::random(&mut rng, m, 0.3);
            let o = shortest_periodic_orbit(&s);
            assert!(s.is_periodic_word(o.word()));
        }
    }
}
