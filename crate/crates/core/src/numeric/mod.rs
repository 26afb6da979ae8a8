//! Numerical building blocks shared by the laboratory modules.

pub mod bigfloat;
pub mod expm;
pub mod logcomplex;
pub mod quad;
pub mod roots;
pub mod special;

pub use logcomplex::{LogComplex, LogSum};
