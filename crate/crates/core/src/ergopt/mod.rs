//! Ergodic optimization on subshifts with window potentials.

pub mod cycles;
pub mod locking;
pub mod potential;
pub mod search;
pub mod weight;

pub use cycles::{
    calibration_violations, discrete_aubry, discrete_mane_potential, domination_violations, karp_mean,
    mane_vertices, min_mean_cycle, shortest_potentials, sub_action, Barriers, CycleMeasure, DiscreteAubry,
    SubAction,
};
pub use locking::{build_channel_discrete, verify_locking, Channel, LockingVerdict};
pub use potential::{allowed_words, EdgePotential, WordGraph};
pub use search::{class_one_search, orbit_metrics, ClassOneResult, OrbitMetrics};
pub use weight::Weight;
