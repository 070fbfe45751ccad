//! Metric-entropy numerics for compact classes of analytic and entire functions.
//!
//! The crate evaluates closed-form entropy bounds in the natural-log domain,
//! builds the randomized ε-nets and product codebooks those bounds describe,
//! and provides the Chebyshev machinery needed to move functions in and out
//! of coefficient space.
//!
//! ```
//! use entropy_grid::bounds::{analytic_bounds, Eps};
//! use entropy_grid::classes::AnalyticClassParams;
//!
//! let class = AnalyticClassParams::new(0.5, 1)?;
//! let b = analytic_bounds(&class, Eps::new(0.01)?);
//! assert_eq!(b.details["N1"], 7.0);
//! assert!(b.is_consistent());
//! # Ok::<(), entropy_grid::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chebyshev;
pub mod classes;
pub mod cli;
pub mod codec;
pub mod combinatorics;
pub mod error;
pub mod generators;
pub mod netgen;
pub mod precision;
pub mod seed;

pub use error::{Error, Result};

/// Version string embedded in serialized artifacts and manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
