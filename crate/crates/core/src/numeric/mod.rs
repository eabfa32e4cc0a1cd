//! Numeric building blocks shared by the local, archimedean and counting
//! modules: word-sized modular arithmetic, double-double floats, and
//! reductions whose result does not depend on the worker count.

pub mod arith;
pub mod dd;
pub mod reduce;
pub mod rng;

pub use arith::*;
pub use dd::{CDd, Dd};
