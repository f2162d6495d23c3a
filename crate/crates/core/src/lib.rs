//! Symbolic, variational and hyperbolic machinery for building periodic
//! orbits that lock under small channel perturbations.
//!
//! - [`sft`]: subshifts of finite type, entropy, dynamic-ball codings.
//! - [`ergopt`]: minimizing cycles, barriers, sub-actions, class-I search and locking.
//! - [`lagrangian`]: mechanical Lagrangians on flat tori.
//! - [`weakkam`]: action graphs, critical values, dominated functions, invariant sets.
//! - [`shadowing`]: cat-map splittings, brackets, shadowing and escape bookkeeping.
//! - [`orbitlab`]: specification → shadow → cut-and-shadow pipeline.

pub mod error;
pub mod ergopt;
pub mod lagrangian;
pub mod orbitlab;
pub mod sft;
pub mod shadowing;
pub mod stats;
pub mod suites;
pub mod torus;
pub mod weakkam;

pub use error::{Error, Result};
pub use sft::{Sft, SpecificationSymbolic, SymbolicOrbit};
pub use torus::TorusPoint;
