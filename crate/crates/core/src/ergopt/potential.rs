use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::weight::Weight;
use crate::error::{Error, Result};
use crate::sft::{Sft, SymbolicOrbit};

/// All allowed words of length `n`, in lexicographic order.
pub fn allowed_words(sft: &Sft, n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut words: Vec<Vec<usize>> = (0..sft.alphabet_size()).map(|s| vec![s]).collect();
    for _ in 1..n {
        words = words
            .into_iter()
            .flat_map(|w| {
                let last = *w.last().unwrap();
                sft.successors(last).iter().map(move |&b| {
                    let mut v = w.clone();
                    v.push(b);
                    v
                })
            })
            .collect();
    }
    words
}

#[derive(Serialize, Deserialize)]
struct PotentialRecord {
    sft: Sft,
    window: usize,
    values: Vec<(Vec<usize>, String)>,
}

/// Cost of each allowed window of `window` symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgePotential<W> {
    sft: Sft,
    window: usize,
    values: BTreeMap<Vec<usize>, W>,
}

impl<W: Weight> Serialize for EdgePotential<W> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PotentialRecord {
            sft: self.sft.clone(),
            window: self.window,
            values: self.values.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
        }
        .serialize(s)
    }
}

impl<'de, W: Weight> Deserialize<'de> for EdgePotential<W> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = PotentialRecord::deserialize(d)?;
        let mut values = BTreeMap::new();
        for (k, v) in r.values {
            let w = v.parse::<W>().map_err(|_| D::Error::custom(format!("bad cost {v:?}")))?;
            values.insert(k, w);
        }
        EdgePotential::new(r.sft, r.window, values).map_err(D::Error::custom)
    }
}

impl<W: Weight> EdgePotential<W> {
    pub fn new(sft: Sft, window: usize, values: BTreeMap<Vec<usize>, W>) -> Result<Self> {
        if window < 2 {
            return Err(Error::Parameter(format!("window {window} < 2")));
        }
        let words = allowed_words(&sft, window);
        if words.len() != values.len() || words.iter().any(|w| !values.contains_key(w)) {
            return Err(Error::InvalidWord(
                "costs must be given on exactly the allowed windows".into(),
            ));
        }
        Ok(EdgePotential { sft, window, values })
    }

    pub fn from_fn(sft: &Sft, window: usize, f: impl Fn(&[usize]) -> W) -> Result<Self> {
        let values = allowed_words(sft, window).into_iter().map(|w| {
            let v = f(&w);
            (w, v)
        });
        Self::new(sft.clone(), window, values.collect())
    }

    pub fn constant(sft: &Sft, window: usize, c: W) -> Result<Self> {
        Self::from_fn(sft, window, |_| c.clone())
    }

    pub fn sft(&self) -> &Sft {
        &self.sft
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn values(&self) -> &BTreeMap<Vec<usize>, W> {
        &self.values
    }

    pub fn value(&self, word: &[usize]) -> Option<&W> {
        self.values.get(word)
    }

    /// Same potential read on longer windows through their leading symbols.
    pub fn lift(&self, window: usize) -> Result<Self> {
        if window < self.window {
            return Err(Error::Parameter(format!("cannot lift window {} to {window}", self.window)));
        }
        Self::from_fn(&self.sft, window, |w| self.values[&w[..self.window]].clone())
    }

    /// Pointwise sum on the longer of the two windows.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.sft != other.sft {
            return Err(Error::Parameter("potentials live on different subshifts".into()));
        }
        let w = self.window.max(other.window);
        let (a, b) = (self.lift(w)?, other.lift(w)?);
        Self::from_fn(&self.sft, w, |x| a.values[x].clone() + b.values[x].clone())
    }

    /// Sum of costs over the cyclic windows of one period.
    pub fn cycle_cost(&self, word: &[usize]) -> W {
        let p = word.len();
        let mut buf = vec![0; self.window];
        (0..p).fold(W::zero(), |acc, i| {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = word[(i + k) % p];
            }
            acc + self.values[&buf].clone()
        })
    }

    pub fn cycle_mean(&self, orbit: &SymbolicOrbit) -> W {
        self.cycle_cost(orbit.word()).div_int(orbit.period())
    }

    pub fn graph(&self) -> WordGraph<W> {
        WordGraph::new(self)
    }
}

/// De Bruijn-type graph: vertices are (w−1)-words, edges are w-words.
#[derive(Clone, Debug)]
pub struct WordGraph<W> {
    pub vertices: Vec<Vec<usize>>,
    pub index: HashMap<Vec<usize>, usize>,
    /// (tail, head, cost), sorted by tail.
    pub edges: Vec<(usize, usize, W)>,
}

impl<W: Weight> WordGraph<W> {
    fn new(f: &EdgePotential<W>) -> Self {
        let w = f.window;
        let mut vertices: Vec<Vec<usize>> = f
            .values
            .keys()
            .flat_map(|k| [k[..w - 1].to_vec(), k[1..].to_vec()])
            .collect();
        vertices.sort();
        vertices.dedup();
        let index: HashMap<Vec<usize>, usize> =
            vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let edges = f
            .values
            .iter()
            .map(|(k, c)| (index[&k[..w - 1]], index[&k[1..]], c.clone()))
            .collect();
        WordGraph { vertices, index, edges }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Symbols read off a closed vertex walk.
    pub fn cycle_word(&self, cycle: &[usize]) -> Vec<usize> {
        cycle.iter().map(|&v| self.vertices[v][0]).collect()
    }

    /// Vertex walk of a periodic word (one vertex per position).
    pub fn vertex_cycle(&self, word: &[usize]) -> Option<Vec<usize>> {
        let p = word.len();
        let k = self.vertices.first().map_or(0, Vec::len);
        (0..p)
            .map(|i| {
                let v: Vec<usize> = (0..k).map(|j| word[(i + j) % p]).collect();
                self.index.get(&v).copied()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    #[test]
    fn words_of_golden_mean() {
        let g = Sft::golden_mean();
        // Fibonacci counts 2, 3, 5, 8.
        let counts: Vec<usize> = (1..=4).map(|n| allowed_words(&g, n).len()).collect();
        assert_eq!(counts, vec![2, 3, 5, 8]);
    }

    #[test]
    fn potential_must_cover_allowed_windows() {
        let g = Sft::golden_mean();
        let mut v = BTreeMap::new();
        v.insert(vec![0, 0], 0.0);
        assert!(EdgePotential::new(g.clone(), 2, v).is_err());
        assert!(EdgePotential::constant(&g, 1, 0.0).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let g = Sft::golden_mean();
        let f = EdgePotential::from_fn(&g, 3, |w| {
            <BigRational as Weight>::from_ratio(w.iter().sum::<usize>() as i64, 3)
        })
        .unwrap();
        let s = serde_json::to_string(&f).unwrap();
        let back: EdgePotential<BigRational> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn lift_preserves_cycle_costs() {
        let g = Sft::full(3);
        let f = EdgePotential::from_fn(&g, 2, |w| (w[0] * 3 + w[1]) as f64).unwrap();
        let l = f.lift(4).unwrap();
        for word in [vec![0, 1, 2], vec![2, 2], vec![1]] {
            assert_eq!(f.cycle_cost(&word), l.cycle_cost(&word));
        }
        let gr = l.graph();
        assert_eq!(gr.len(), 27);
        assert_eq!(gr.edges.len(), 81);
        let cyc = gr.vertex_cycle(&[0, 1, 2]).unwrap();
        assert_eq!(gr.cycle_word(&cyc), vec![0, 1, 2]);
    }
}
