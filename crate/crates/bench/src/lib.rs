//! Seeded inputs shared by the kernel benchmarks.

use mane_core::ergopt::{EdgePotential, Weight};
use mane_core::lagrangian::LagrangianModel;
use mane_core::weakkam::ActionGraph;
use mane_core::{Sft, TorusPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Window-2 potential with costs k/5, k < 20, on a random SFT.
pub fn float_potential(seed: u64, m: usize) -> EdgePotential<f64> {
    let mut r = rng(seed);
    let sft = Sft::random(&mut r, m, 0.5);
    let costs: Vec<i64> = (0..m * m).map(|_| r.gen_range(0..20)).collect();
    EdgePotential::from_fn(&sft, 2, |w| f64::from_ratio(costs[w[0] * m + w[1]], 5)).unwrap()
}

/// Edge list of a random digraph where every vertex has an out-edge.
pub fn random_digraph(seed: u64, n: usize, degree: usize) -> Vec<(usize, usize, f64)> {
    let mut r = rng(seed);
    (0..n).flat_map(|v| (0..degree).map(move |_| v)).map(|v| (v, r.gen_range(0..n), r.gen_range(-1.0..1.0))).collect()
}

pub fn pendulum_graph(n: usize) -> ActionGraph {
    mane_core::suites::model_graph(&LagrangianModel::pendulum(), n).unwrap()
}

pub fn pseudo_orbit(seed: u64, length: usize, delta: f64) -> Vec<TorusPoint> {
    mane_core::suites::periodic_pseudo_orbit(&mut rng(seed), length, delta)
}
