//! B-rep models: faces, edges, their incidence, and the derived face and edge graphs.

mod generate;
mod graph;
pub mod io;

pub use generate::{generate_dataset, generate_solid, SolidKind, SolidParams};
pub use graph::{build_edge_graph, build_face_graph, EdgeGraph, FaceGraph};

use crate::error::{Error, Result};
use crate::geom::point::Point3;
use crate::geom::{NurbsCurve, NurbsSurface};

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub id: usize,
    pub surface: NurbsSurface,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub curve: NurbsCurve,
    /// Faces bounded by this edge; a seam lists the same face twice.
    pub bounds_faces: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrepModel {
    faces: Vec<Face>,
    edges: Vec<Edge>,
    label: Option<usize>,
}

impl BrepModel {
    /// Validates ids and incidence. Ids must equal list positions.
    pub fn new(faces: Vec<Face>, edges: Vec<Edge>, label: Option<usize>) -> Result<Self> {
        if faces.is_empty() || edges.is_empty() {
            return Err(Error::integrity("a model needs at least one face and one edge"));
        }
        for (i, f) in faces.iter().enumerate() {
            if f.id != i {
                return Err(Error::integrity(format!("face at position {i} has id {}; ids must be dense", f.id)));
            }
        }
        let mut referenced = vec![false; faces.len()];
        for (i, e) in edges.iter().enumerate() {
            if e.id != i {
                return Err(Error::integrity(format!("edge at position {i} has id {}; ids must be dense", e.id)));
            }
            if e.bounds_faces.is_empty() {
                return Err(Error::integrity(format!("edge {} bounds no face", e.id)));
            }
            for &f in &e.bounds_faces {
                if f >= faces.len() {
                    return Err(Error::integrity(format!("edge {} references missing face {f}", e.id)));
                }
                referenced[f] = true;
            }
        }
        if let Some(f) = referenced.iter().position(|r| !r) {
            return Err(Error::integrity(format!("face {f} is not bounded by any edge")));
        }
        Ok(Self { faces, edges, label })
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn with_label(mut self, label: Option<usize>) -> Self {
        self.label = label;
        self
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// True when every edge bounds exactly two face slots (seams count twice).
    pub fn is_closed(&self) -> bool {
        self.edges.iter().all(|e| e.bounds_faces.len() == 2)
    }

    /// Axis-aligned bounds of all euclidean control points.
    pub fn bounding_box(&self) -> (Point3, Point3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut add = |p: Point3| {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        };
        for f in &self.faces {
            f.surface.control_net().iter().flatten().for_each(|h| add(h.euclidean()));
        }
        for e in &self.edges {
            e.curve.control_points().iter().for_each(|h| add(h.euclidean()));
        }
        (lo, hi)
    }

    /// Relabels faces and edges: new face `i` is old face `face_perm[i]`,
    /// likewise for edges.
    pub fn permuted(&self, face_perm: &[usize], edge_perm: &[usize]) -> Result<Self> {
        let mut face_new = vec![usize::MAX; self.faces.len()];
        for (new, &old) in face_perm.iter().enumerate() {
            face_new[old] = new;
        }
        let faces = face_perm
            .iter()
            .enumerate()
            .map(|(new, &old)| Face {
                id: new,
                surface: self.faces[old].surface.clone(),
            })
            .collect();
        let edges = edge_perm
            .iter()
            .enumerate()
            .map(|(new, &old)| {
                let e = &self.edges[old];
                Edge {
                    id: new,
                    curve: e.curve.clone(),
                    bounds_faces: e.bounds_faces.iter().map(|f| face_new[*f]).collect(),
                }
            })
            .collect();
        Self::new(faces, edges, self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> NurbsSurface {
        NurbsSurface::bilinear([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0])
    }

    #[test]
    fn rejects_dangling_edge() {
        let faces = vec![Face { id: 0, surface: plane() }];
        let edges = vec![Edge {
            id: 0,
            curve: NurbsCurve::line([0.0; 3], [1.0, 0.0, 0.0]),
            bounds_faces: vec![3],
        }];
        let err = BrepModel::new(faces, edges, None).unwrap_err();
        assert!(matches!(err, Error::Integrity(ref m) if m.contains("edge 0")));
    }

    #[test]
    fn rejects_unreferenced_face() {
        let faces = vec![Face { id: 0, surface: plane() }, Face { id: 1, surface: plane() }];
        let edges = vec![Edge {
            id: 0,
            curve: NurbsCurve::line([0.0; 3], [1.0, 0.0, 0.0]),
            bounds_faces: vec![0],
        }];
        assert!(BrepModel::new(faces, edges, None).is_err());
    }
}
