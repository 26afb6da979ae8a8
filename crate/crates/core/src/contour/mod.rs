//! Cauchy-contour reconstruction of `f̂(0) - ∫_0^t f`.

pub mod kernels;
pub mod pair;
pub mod reconstruct;

pub use kernels::{lemma31_check, poisson_convolve, StepFunction};
pub use pair::{Region, TransformPair};
pub use reconstruct::{reconstruct_g_adaptive, reconstruct_g_fixed, AdaptiveConfig, ContourSpec, OuterRule};
