//! Convex polytopes and γ-concave functions, with numerical checks of the
//! sharp centroid halfspace bounds they satisfy.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extremal;
pub mod gammafn;
pub mod geom;
pub mod mesh;
pub mod polytope;
pub mod quadrature;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use gammafn::{FiberFunction, GammaFunction};
pub use geom::{Subspace, Vector};
pub use polytope::{Halfspace, VPolytope};
