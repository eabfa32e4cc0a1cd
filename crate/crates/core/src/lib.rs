//! Circle-method laboratory for prime solutions of systems of forms with
//! differing degrees.
//!
//! The crate is organised bottom-up: [`poly`] holds exact systems,
//! [`profile`] the degree and power-saving arithmetic, [`local`] and
//! [`arch`] the two halves of the singular product, [`count`] the exact
//! prime-solution counts and exponential sums, and [`pipeline`] ties them
//! into the predicted-versus-observed comparison.

// Negated comparisons such as `!(x > 0.0)` reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arch;
pub mod count;
pub mod error;
pub mod local;
pub mod numeric;
pub mod pipeline;
pub mod poly;
pub mod profile;
pub mod report;

pub use error::{Error, Result};
pub use poly::{Form, Monomial, PolySystem};
