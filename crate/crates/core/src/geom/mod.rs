//! Exact evaluation of Bernstein, B-spline and rational (NURBS) geometry.

pub mod basis;
pub mod curve;
pub mod knots;
pub mod point;
pub mod surface;
pub mod trim;

pub use basis::{bernstein, bernstein_triangle, binomial, bspline_basis};
pub use curve::NurbsCurve;
pub use knots::KnotVector;
pub use point::{HomogeneousPoint, Point3};
pub use surface::NurbsSurface;
pub use trim::{LoopOrientation, TrimLoop};
