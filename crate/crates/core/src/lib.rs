//! B-rep pre-training toolkit: NURBS evaluation, exact Bézier decomposition of
//! faces and edges, shape-point sampling, tokenization, and a dual-stream
//! transformer trained to reconstruct sampled points from control points.

pub mod bezier;
pub mod brep;
pub mod cli;
pub mod decompose;
pub mod error;
pub mod geom;
pub mod net;
pub mod sampling;
pub mod tokenize;
pub mod util;

pub use error::{Error, Result};
