//! Enumeration of rational points near manifolds.
//!
//! The crate counts rational points `a/q` lying close to real and holomorphic
//! graphs, in exact or guarded floating-point arithmetic, and provides the
//! supporting machinery: curvature verifiers, Legendre duals, sharpness
//! constructions, harmonic-analysis checks and exponent bookkeeping.
//!
//! ```
//! use rpnm_core::counting::{count_real, CountQuery, DeltaVec, Mode};
//! use rpnm_core::geometry::{builtin_real, BuiltinParams};
//!
//! let parabola = builtin_real("real-parabola", BuiltinParams::default()).unwrap();
//! let query = CountQuery::new(4, DeltaVec::new(vec![0.25]).unwrap()).mode(Mode::Exact);
//! assert_eq!(count_real(&parabola, &query).unwrap().total, 3);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constructions;
pub mod counting;
pub mod error;
pub mod exponents;
pub mod geometry;
pub mod numtheory;

pub use error::{Error, Result};

/// Library version, embedded in emitted records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
