pub mod atoms;
pub mod contour;
pub mod counterexamples;
pub mod error;
pub mod fit;
pub mod numeric;
pub mod semigroup;
pub mod suites;
pub mod weights;

pub use error::{Error, Result};
