//! Chart-level kernels for the deformation to the normal cone and the blow-up
//! of pairs of manifolds, vector bundles and groupoids.
//!
//! Every construction works in a single adapted chart `(R^n, R^p)` where the
//! submanifold is the slice `{x = 0}` and coordinates are ordered
//! `(y_1..y_p, x_1..x_q)`.

pub mod blowup;
pub mod dnc;
pub mod dnc_algebra;
pub mod error;
pub mod euler;
pub mod groupoid;
pub mod jet;
pub mod pairs;
pub mod poly;
pub mod sampling;
pub mod vb_blowup;
pub mod verify;

pub use error::{Error, Result};
