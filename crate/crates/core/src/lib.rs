//! Exact computations on smooth complete toric varieties.
//!
//! The crate computes the line-bundle summands of Frobenius push-forwards
//! and uses them, together with exact line-bundle cohomology, to check
//! strong exceptional collections and certify that they generate the
//! derived category.
//!
//! ```
//! use toricfrob::{atlas, divisor::TorusDivisor, frobenius};
//!
//! let y3 = atlas::get("y3").unwrap().fan;
//! let s = frobenius::stable_summands(&y3, &TorusDivisor::zero(6)).unwrap();
//! assert_eq!(s.len(), 6);
//! ```

pub mod atlas;
pub mod cohomology;
pub mod collections;
pub mod divisor;
pub mod error;
pub mod fan;
pub mod frobenius;
pub mod intersection;
pub mod linalg;

pub use divisor::{DivisorClass, TorusDivisor};
pub use error::{Error, Result};
pub use fan::{Cone, Fan, LatticeVector, Wall};
pub use frobenius::SummandSet;
