//! Decomposition of NURBS entities into fixed-size Bézier primitives.

pub mod boundary;
pub mod insertion;
pub mod quadtree;
pub mod triangles;

mod io;

pub use boundary::{boundary_rmse, chord_to_arc, convergence_study, BoundaryErrorReport, ConvergenceStudy};
pub use insertion::{curve_to_bezier_segments, insert_knot, surface_to_bezier_rectangles};
pub use io::{primitives_from_str, primitives_to_string, read_primitives, write_primitives};
pub use quadtree::{quadtree_decompose, CellClass, QuadCell, QuadtreeDecomposition, QuadtreeOptions, DEFAULT_MAX_DEPTH, DEFAULT_TAU};
pub use triangles::rectangle_to_triangles;

use crate::bezier::{BezierSegment, BezierTriangle};
pub use crate::bezier::elevate_segment_degree;
use crate::brep::BrepModel;
use crate::error::{Error, Result};
use crate::geom::point::distance;

/// Degree every edge segment is raised to (4 control points).
pub const CURVE_DEGREE: usize = 3;
/// Total degree every face triangle is raised to (28 control points).
pub const TRIANGLE_DEGREE: usize = 6;

/// Per-entity primitives of one model, in entity order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPrimitives {
    pub faces: Vec<Vec<BezierTriangle>>,
    pub edges: Vec<Vec<BezierSegment>>,
    /// Boundary cells stopped by the depth cap, summed over faces.
    pub unconverged_cells: usize,
}

impl ModelPrimitives {
    pub fn num_triangles(&self) -> usize {
        self.faces.iter().map(Vec::len).sum()
    }

    pub fn num_segments(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// True when every primitive already has the standard degree.
    pub fn is_standard(&self) -> bool {
        self.faces.iter().flatten().all(|t| t.degree() == TRIANGLE_DEGREE)
            && self.edges.iter().flatten().all(|s| s.degree() == CURVE_DEGREE)
    }

    /// Checks that the primitives were produced from `model`.
    pub fn check_matches(&self, model: &BrepModel) -> Result<()> {
        if self.faces.len() != model.num_faces() || self.edges.len() != model.num_edges() {
            return Err(Error::integrity(format!(
                "primitives cover {} faces / {} edges, model has {} / {}",
                self.faces.len(),
                self.edges.len(),
                model.num_faces(),
                model.num_edges()
            )));
        }
        for (f, tris) in self.faces.iter().enumerate() {
            if tris.is_empty() {
                return Err(Error::integrity(format!("face {f} has no primitives")));
            }
            if let Some(t) = tris.iter().find(|t| t.source.entity != Some(f)) {
                return Err(Error::integrity(format!("face {f} holds a triangle of entity {:?}", t.source.entity)));
            }
        }
        for (e, segs) in self.edges.iter().enumerate() {
            if segs.is_empty() {
                return Err(Error::integrity(format!("edge {e} has no primitives")));
            }
            if let Some(s) = segs.iter().find(|s| s.source.entity != Some(e)) {
                return Err(Error::integrity(format!("edge {e} holds a segment of entity {:?}", s.source.entity)));
            }
        }
        Ok(())
    }
}

/// Elevates everything to the standard degrees; higher degrees are rejected.
pub fn standardize(prims: &ModelPrimitives) -> Result<ModelPrimitives> {
    let faces = prims
        .faces
        .iter()
        .map(|tris| {
            tris.iter()
                .map(|t| {
                    if t.degree() > TRIANGLE_DEGREE {
                        return Err(Error::arg(format!(
                            "face {:?} has a degree {} triangle; at most {TRIANGLE_DEGREE} is supported",
                            t.source.entity,
                            t.degree()
                        )));
                    }
                    t.elevate(TRIANGLE_DEGREE)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let edges = prims
        .edges
        .iter()
        .map(|segs| {
            segs.iter()
                .map(|s| {
                    if s.degree() > CURVE_DEGREE {
                        return Err(Error::arg(format!(
                            "edge {:?} has a degree {} segment; at most {CURVE_DEGREE} is supported",
                            s.source.entity,
                            s.degree()
                        )));
                    }
                    s.elevate(CURVE_DEGREE)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelPrimitives {
        faces,
        edges,
        unconverged_cells: prims.unconverged_cells,
    })
}

/// Decomposes every face and edge, then standardizes degrees.
pub fn decompose_model(model: &BrepModel, options: QuadtreeOptions) -> Result<ModelPrimitives> {
    options.validate()?;
    let mut faces = Vec::with_capacity(model.num_faces());
    let mut unconverged_cells = 0;
    for face in model.faces() {
        let mut qt = quadtree_decompose(&face.surface, options)?;
        unconverged_cells += qt.unconverged.len();
        if !qt.unconverged.is_empty() {
            log::warn!("face {}: {} boundary cells hit the depth cap", face.id, qt.unconverged.len());
        }
        for t in &mut qt.triangles {
            t.source.entity = Some(face.id);
        }
        faces.push(qt.triangles);
    }
    let mut edges = Vec::with_capacity(model.num_edges());
    for edge in model.edges() {
        let mut segs = curve_to_bezier_segments(&edge.curve)?;
        for s in &mut segs {
            s.source.entity = Some(edge.id);
        }
        edges.push(segs);
    }
    standardize(&ModelPrimitives {
        faces,
        edges,
        unconverged_cells,
    })
}

/// Largest distance between a primitive and its source entity over a fixed
/// set of local parameters per primitive.
pub fn max_residual(model: &BrepModel, prims: &ModelPrimitives, samples: usize) -> Result<f64> {
    prims.check_matches(model)?;
    let n = samples.max(2);
    let mut worst: f64 = 0.0;
    for (face, tris) in model.faces().iter().zip(&prims.faces) {
        for t in tris {
            for k in 0..n {
                let u = k as f64 / (n - 1) as f64;
                for l in 0..n - k {
                    let v = l as f64 / (n - 1) as f64;
                    let (su, sv) = t.source.surface_params(u, v);
                    worst = worst.max(distance(t.eval(u, v)?, face.surface.eval(su, sv)?));
                }
            }
        }
    }
    for (edge, segs) in model.edges().iter().zip(&prims.edges) {
        for s in segs {
            for k in 0..n {
                let t = k as f64 / (n - 1) as f64;
                worst = worst.max(distance(s.eval(t)?, edge.curve.eval(s.source.map(t))?));
            }
        }
    }
    Ok(worst)
}
