//! Atom families and their transforms.

pub mod backend;
pub mod family;
pub mod lemmas;
pub mod oracle;
pub mod series;
pub mod verify;

pub use backend::{backend_by_name, green_g, laplace_l, primitive_n, OracleBackend, SeriesBackend, TransformBackend};
pub use family::{Atom, AtomFamily, Variant};
pub use series::TimePoint;
