//! Optimal interpolating lower bounds for smooth convex functions and the
//! first-order methods built on them.
//!
//! The crate is organised bottom-up:
//!
//! * [`metric`]: the Euclidean setup (metric operator, dual norm, parabolae).
//! * [`bound`]: oracle records, bundle models and the lower bound `p`.
//! * [`simplex_qp`]: the small simplex-constrained QPs every method solves.
//! * [`methods`]: GM, FGM, online OGM, GMM, IGMM and OGMM.
//! * [`problems`]: the QUAD and LRSP benchmark problems.
//! * [`bench`]: table-producing benchmark driver used by the CLI.

pub mod bench;
pub mod bound;
pub mod error;
pub mod methods;
pub mod metric;
pub mod oracle;
pub mod problems;
pub mod simplex_qp;

pub use error::{Error, Result};
