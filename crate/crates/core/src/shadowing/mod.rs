//! Hyperbolic machinery on the cat map: splittings, canonical coordinates,
//! shadowing of specifications, exponential closeness, expansivity and the
//! escape-time segmentation used for perturbed minimizers.

pub mod closeness;
pub mod escape;
pub mod model;
pub mod shadow;

pub use closeness::{
    canonical_coordinates, expansivity_estimate, exponential_closeness, Bracket, ClosenessProfile,
    ExpansivityReport, BETA0, ETA0,
};
pub use escape::{claim_violations, escape_segmentation, EscapeSegmentation, EscapeThresholds, Profile};
pub use model::{cat_lambda, golden, HyperbolicModel, ModelKind, SuspPoint};
pub use shadow::{shadow_specification, NumericSegment, ShadowResult, SpecificationNumeric, DELTA0};
