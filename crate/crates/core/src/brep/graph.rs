use std::collections::BTreeMap;

use crate::brep::BrepModel;
use crate::error::{Error, Result};

/// Faces linked by shared edges. Keys are `(a, b)` with `a < b`; values are
/// the shared edge ids, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceGraph {
    pub num_faces: usize,
    pub adjacency: BTreeMap<(usize, usize), Vec<usize>>,
}

/// Edges linked by shared faces, the dual of [`FaceGraph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeGraph {
    pub num_edges: usize,
    pub adjacency: BTreeMap<(usize, usize), Vec<usize>>,
}

fn neighbors_of(adjacency: &BTreeMap<(usize, usize), Vec<usize>>, node: usize) -> Vec<usize> {
    let mut out: Vec<usize> = adjacency
        .keys()
        .filter_map(|&(a, b)| {
            if a == node {
                Some(b)
            } else if b == node {
                Some(a)
            } else {
                None
            }
        })
        .collect();
    out.sort_unstable();
    out
}

fn shared(adjacency: &BTreeMap<(usize, usize), Vec<usize>>, a: usize, b: usize) -> Option<&[usize]> {
    adjacency.get(&(a.min(b), a.max(b))).map(Vec::as_slice)
}

impl FaceGraph {
    pub fn neighbors(&self, face: usize) -> Vec<usize> {
        neighbors_of(&self.adjacency, face)
    }

    /// Shared edges of an unordered face pair.
    pub fn shared_edges(&self, a: usize, b: usize) -> Option<&[usize]> {
        shared(&self.adjacency, a, b)
    }

    /// `(a, b, shared_edge)` triples, one per shared edge, `a < b`.
    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        self.adjacency
            .iter()
            .flat_map(|(&(a, b), es)| es.iter().map(move |&e| (a, b, e)))
            .collect()
    }
}

impl EdgeGraph {
    pub fn neighbors(&self, edge: usize) -> Vec<usize> {
        neighbors_of(&self.adjacency, edge)
    }

    pub fn shared_faces(&self, a: usize, b: usize) -> Option<&[usize]> {
        shared(&self.adjacency, a, b)
    }

    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        self.adjacency
            .iter()
            .flat_map(|(&(a, b), fs)| fs.iter().map(move |&f| (a, b, f)))
            .collect()
    }

    /// Dual construction from the face graph plus incidence: every pair of
    /// edges lying on a common face is linked by that face.
    pub fn from_face_graph(face_graph: &FaceGraph, model: &BrepModel) -> Result<Self> {
        let mut face_edges: Vec<Vec<usize>> = vec![Vec::new(); face_graph.num_faces];
        for (&(a, b), edges) in &face_graph.adjacency {
            for &e in edges {
                face_edges[a].push(e);
                face_edges[b].push(e);
            }
        }
        // edges not shared between distinct faces are absent from the face graph
        for e in model.edges() {
            let mut faces = e.bounds_faces.clone();
            faces.sort_unstable();
            faces.dedup();
            if faces.len() == 1 {
                face_edges[faces[0]].push(e.id);
            }
        }
        let mut adjacency: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (f, edges) in face_edges.iter_mut().enumerate() {
            edges.sort_unstable();
            edges.dedup();
            for (i, &a) in edges.iter().enumerate() {
                for &b in &edges[i + 1..] {
                    adjacency.entry((a, b)).or_default().push(f);
                }
            }
        }
        for v in adjacency.values_mut() {
            v.sort_unstable();
        }
        Ok(Self {
            num_edges: model.num_edges(),
            adjacency,
        })
    }
}

fn check_refs(model: &BrepModel) -> Result<()> {
    for e in model.edges() {
        if let Some(f) = e.bounds_faces.iter().find(|f| **f >= model.num_faces()) {
            return Err(Error::integrity(format!("edge {} references missing face {f}", e.id)));
        }
    }
    Ok(())
}

/// Faces are adjacent iff some edge bounds both; self-adjacency through seams is dropped.
pub fn build_face_graph(model: &BrepModel) -> Result<FaceGraph> {
    check_refs(model)?;
    let mut adjacency: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for e in model.edges() {
        let mut faces = e.bounds_faces.clone();
        faces.sort_unstable();
        faces.dedup();
        for (i, &a) in faces.iter().enumerate() {
            for &b in &faces[i + 1..] {
                adjacency.entry((a, b)).or_default().push(e.id);
            }
        }
    }
    for v in adjacency.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    Ok(FaceGraph {
        num_faces: model.num_faces(),
        adjacency,
    })
}

/// Edges are adjacent iff they bound a common face.
pub fn build_edge_graph(model: &BrepModel) -> Result<EdgeGraph> {
    check_refs(model)?;
    let face_sets: Vec<Vec<usize>> = model
        .edges()
        .iter()
        .map(|e| {
            let mut f = e.bounds_faces.clone();
            f.sort_unstable();
            f.dedup();
            f
        })
        .collect();
    let mut adjacency = BTreeMap::new();
    for a in 0..face_sets.len() {
        for b in a + 1..face_sets.len() {
            let common: Vec<usize> = face_sets[a].iter().copied().filter(|f| face_sets[b].contains(f)).collect();
            if !common.is_empty() {
                adjacency.insert((a, b), common);
            }
        }
    }
    Ok(EdgeGraph {
        num_edges: model.num_edges(),
        adjacency,
    })
}
