//! Discrete closed and open planar polygons, rotational symmetry, a
//! symmetric isoperimetric free-boundary minimizer, and a semi-implicit
//! curve diffusion flow.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod curve;
pub mod experiments;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod minimize;
pub mod shapes;
pub mod symmetry;
pub mod winding;

pub use curve::{CurvatureProfile, CurveError, CurveMetrics, DiscreteCurve, IsoRatio};
pub use geometry::{Rotation, Vec2};
pub use symmetry::{SymmetryError, SymmetrySpec};
