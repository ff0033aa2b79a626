//! Numerical toolkit for strong Brascamp-Lieb exponents on finite alphabets.
//!
//! All quantities are computed in nats. Binary closed forms in [`dsbs`] report bits.

pub mod dist;
pub mod dsbs;
pub mod envelopes;
pub mod error;
pub mod grid;
pub mod hull;
pub mod measures;
pub mod numeric;
pub mod product;
pub mod schrodinger;
pub mod surfaces;
pub mod xreal;

pub use dist::{FiniteDist, JointDist};
pub use error::{Error, Result};
pub use xreal::XReal;
