//! Fixed-shape model inputs: per-entity primitive control points, primitive
//! masks, and adjacency triples for topology attention.

use std::path::Path;

use crate::bezier::{BezierSegment, BezierTriangle, CellBounds, SourceSpan, TriangleHalf, TriangleSource};
use crate::brep::{build_edge_graph, build_face_graph, BrepModel};
use crate::decompose::{ModelPrimitives, CURVE_DEGREE, TRIANGLE_DEGREE};
use crate::error::{Error, Result};
use crate::geom::point::{HomogeneousPoint, Point3};
use crate::util::{read_bytes, volume, write_atomic, BinReader, BinWriter};

pub const DEFAULT_FACE_CAP: usize = 32;
pub const DEFAULT_EDGE_CAP: usize = 8;

/// Control points per standardized triangle and segment.
pub const TRI_POINTS: usize = (TRIANGLE_DEGREE + 1) * (TRIANGLE_DEGREE + 2) / 2;
pub const SEG_POINTS: usize = CURVE_DEGREE + 1;

const MAGIC: &[u8; 4] = b"B2T1";

/// Primitive slots per entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub face: usize,
    pub edge: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            face: DEFAULT_FACE_CAP,
            edge: DEFAULT_EDGE_CAP,
        }
    }
}

impl Caps {
    pub fn validate(&self) -> Result<()> {
        if self.face == 0 || self.edge == 0 {
            return Err(Error::arg(format!("caps must be positive, got {self:?}")));
        }
        Ok(())
    }
}

/// Maps model coordinates into the unit cube centered at the origin:
/// `p' = (p - center) * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub center: Point3,
    pub scale: f64,
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization {
        center: [0.0; 3],
        scale: 1.0,
    };

    pub fn from_model(model: &BrepModel) -> Self {
        let (lo, hi) = model.bounding_box();
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        Self {
            center: std::array::from_fn(|k| 0.5 * (lo[k] + hi[k])),
            scale: if extent > 0.0 { 1.0 / extent } else { 1.0 },
        }
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        std::array::from_fn(|k| (p[k] - self.center[k]) * self.scale)
    }

    pub fn invert(&self, p: Point3) -> Point3 {
        std::array::from_fn(|k| p[k] / self.scale + self.center[k])
    }

    /// `[x, y, z, w]` with normalized euclidean part and the raw weight.
    pub fn token(&self, h: &HomogeneousPoint) -> [f64; 4] {
        let p = self.apply(h.euclidean());
        [p[0], p[1], p[2], h.w]
    }

    fn as_array(&self) -> [f64; 4] {
        [self.center[0], self.center[1], self.center[2], self.scale]
    }

    fn from_array(a: &[f64]) -> Self {
        Self {
            center: [a[0], a[1], a[2]],
            scale: a[3],
        }
    }
}

/// Slot order: descending `measure`, ties by original index, truncated to `cap`.
/// Growing the cap therefore only appends slots.
fn select(measures: &[f64], cap: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..measures.len()).collect();
    idx.sort_by(|&a, &b| measures[b].total_cmp(&measures[a]).then(a.cmp(&b)));
    idx.truncate(cap);
    idx
}

/// Indices of the triangles kept for one face, in slot order.
pub fn select_triangles(tris: &[BezierTriangle], cap: usize) -> Vec<usize> {
    let areas: Vec<f64> = tris.iter().map(BezierTriangle::corner_area).collect();
    select(&areas, cap)
}

/// Indices of the segments kept for one edge, in slot order.
pub fn select_segments(segs: &[BezierSegment], cap: usize) -> Vec<usize> {
    let lengths: Vec<f64> = segs
        .iter()
        .map(|s| {
            s.control_points()
                .windows(2)
                .map(|w| crate::geom::point::distance(w[0].euclidean(), w[1].euclidean()))
                .sum()
        })
        .collect();
    select(&lengths, cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenBatch {
    pub num_faces: usize,
    pub num_edges: usize,
    pub caps: Caps,
    /// `num_faces x caps.face x TRI_POINTS x 4`, row-major.
    pub face_tensor: Vec<f64>,
    /// `num_edges x caps.edge x SEG_POINTS x 4`.
    pub edge_tensor: Vec<f64>,
    /// `num_faces x caps.face`, 1 for real primitives.
    pub face_mask: Vec<u8>,
    pub edge_mask: Vec<u8>,
    /// `(a, b, shared_edge)` with `a < b`.
    pub face_adjacency: Vec<[usize; 3]>,
    /// `(a, b, shared_face)` with `a < b`.
    pub edge_adjacency: Vec<[usize; 3]>,
    /// `(faces, edges)` per model; several models can share one batch.
    pub entity_counts: Vec<(usize, usize)>,
    /// Per model, in the same order as `entity_counts`.
    pub normalizations: Vec<Normalization>,
}

impl TokenBatch {
    pub fn face_slot(&self, face: usize, slot: usize) -> &[f64] {
        let n = TRI_POINTS * 4;
        let o = (face * self.caps.face + slot) * n;
        &self.face_tensor[o..o + n]
    }

    pub fn edge_slot(&self, edge: usize, slot: usize) -> &[f64] {
        let n = SEG_POINTS * 4;
        let o = (edge * self.caps.edge + slot) * n;
        &self.edge_tensor[o..o + n]
    }

    pub fn face_valid(&self, face: usize) -> usize {
        self.face_mask[face * self.caps.face..(face + 1) * self.caps.face].iter().map(|m| *m as usize).sum()
    }

    pub fn edge_valid(&self, edge: usize) -> usize {
        self.edge_mask[edge * self.caps.edge..(edge + 1) * self.caps.edge].iter().map(|m| *m as usize).sum()
    }

    /// Rebuilds the triangle stored in a slot (normalized frame); `None` for padding.
    pub fn face_primitive(&self, face: usize, slot: usize) -> Option<BezierTriangle> {
        if self.face_mask[face * self.caps.face + slot] == 0 {
            return None;
        }
        let pts = to_points(self.face_slot(face, slot));
        let source = TriangleSource {
            entity: Some(face),
            cell: CellBounds::new(0.0, 1.0, 0.0, 1.0),
            half: TriangleHalf::Lower,
        };
        BezierTriangle::new(TRIANGLE_DEGREE, pts, source).ok()
    }

    pub fn edge_primitive(&self, edge: usize, slot: usize) -> Option<BezierSegment> {
        if self.edge_mask[edge * self.caps.edge + slot] == 0 {
            return None;
        }
        let mut span = SourceSpan::new(0.0, 1.0);
        span.entity = Some(edge);
        BezierSegment::new(to_points(self.edge_slot(edge, slot)), span).ok()
    }

    /// Concatenates batches; adjacency indices are offset so models stay disjoint.
    pub fn concat(batches: &[TokenBatch]) -> Result<TokenBatch> {
        let first = batches.first().ok_or_else(|| Error::arg("nothing to concatenate"))?;
        let caps = first.caps;
        let mut out = TokenBatch {
            num_faces: 0,
            num_edges: 0,
            caps,
            face_tensor: Vec::new(),
            edge_tensor: Vec::new(),
            face_mask: Vec::new(),
            edge_mask: Vec::new(),
            face_adjacency: Vec::new(),
            edge_adjacency: Vec::new(),
            entity_counts: Vec::new(),
            normalizations: Vec::new(),
        };
        for b in batches {
            if b.caps != caps {
                return Err(Error::integrity(format!("cap mismatch: {:?} vs {caps:?}", b.caps)));
            }
            let (fo, eo) = (out.num_faces, out.num_edges);
            out.face_tensor.extend_from_slice(&b.face_tensor);
            out.edge_tensor.extend_from_slice(&b.edge_tensor);
            out.face_mask.extend_from_slice(&b.face_mask);
            out.edge_mask.extend_from_slice(&b.edge_mask);
            out.face_adjacency.extend(b.face_adjacency.iter().map(|[a, c, e]| [a + fo, c + fo, e + eo]));
            out.edge_adjacency.extend(b.edge_adjacency.iter().map(|[a, c, f]| [a + eo, c + eo, f + fo]));
            out.entity_counts.extend_from_slice(&b.entity_counts);
            out.normalizations.extend_from_slice(&b.normalizations);
            out.num_faces += b.num_faces;
            out.num_edges += b.num_edges;
        }
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        let (nf, ne) = (self.num_faces, self.num_edges);
        let checks = [
            ("face_tensor", self.face_tensor.len(), nf * self.caps.face * TRI_POINTS * 4),
            ("edge_tensor", self.edge_tensor.len(), ne * self.caps.edge * SEG_POINTS * 4),
            ("face_mask", self.face_mask.len(), nf * self.caps.face),
            ("edge_mask", self.edge_mask.len(), ne * self.caps.edge),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::integrity(format!("{name} has {got} values, expected {want}")));
            }
        }
        for t in &self.face_adjacency {
            if t[0] >= nf || t[1] >= nf || t[2] >= ne {
                return Err(Error::integrity(format!("face adjacency {t:?} out of range")));
            }
        }
        for t in &self.edge_adjacency {
            if t[0] >= ne || t[1] >= ne || t[2] >= nf {
                return Err(Error::integrity(format!("edge adjacency {t:?} out of range")));
            }
        }
        let (sf, se) = self.entity_counts.iter().fold((0, 0), |(a, b), (f, e)| (a + f, b + e));
        if (sf, se) != (nf, ne) || self.entity_counts.len() != self.normalizations.len() {
            return Err(Error::integrity("entity counts do not add up"));
        }
        Ok(())
    }
}

fn to_points(xs: &[f64]) -> Vec<HomogeneousPoint> {
    xs.chunks_exact(4)
        .map(|c| HomogeneousPoint::from_euclidean([c[0], c[1], c[2]], c[3]))
        .collect()
}

/// Tokenizes one model. Primitives must be standardized.
pub fn tokenize_model(model: &BrepModel, prims: &ModelPrimitives, caps: Caps) -> Result<TokenBatch> {
    caps.validate()?;
    prims.check_matches(model)?;
    if !prims.is_standard() {
        return Err(Error::integrity(format!(
            "primitives must be standardized to triangle degree {TRIANGLE_DEGREE} and curve degree {CURVE_DEGREE}"
        )));
    }
    let norm = Normalization::from_model(model);
    let (nf, ne) = (model.num_faces(), model.num_edges());
    let mut face_tensor = vec![0.0; nf * caps.face * TRI_POINTS * 4];
    let mut face_mask = vec![0u8; nf * caps.face];
    for (f, tris) in prims.faces.iter().enumerate() {
        if tris.len() > caps.face {
            log::warn!("face {f}: {} triangles exceed the cap of {}; keeping the largest", tris.len(), caps.face);
        }
        for (slot, &k) in select_triangles(tris, caps.face).iter().enumerate() {
            face_mask[f * caps.face + slot] = 1;
            let base = (f * caps.face + slot) * TRI_POINTS * 4;
            for (i, h) in tris[k].control_points().iter().enumerate() {
                face_tensor[base + 4 * i..base + 4 * i + 4].copy_from_slice(&norm.token(h));
            }
        }
    }
    let mut edge_tensor = vec![0.0; ne * caps.edge * SEG_POINTS * 4];
    let mut edge_mask = vec![0u8; ne * caps.edge];
    for (e, segs) in prims.edges.iter().enumerate() {
        if segs.len() > caps.edge {
            log::warn!("edge {e}: {} segments exceed the cap of {}; keeping the longest", segs.len(), caps.edge);
        }
        for (slot, &k) in select_segments(segs, caps.edge).iter().enumerate() {
            edge_mask[e * caps.edge + slot] = 1;
            let base = (e * caps.edge + slot) * SEG_POINTS * 4;
            for (i, h) in segs[k].control_points().iter().enumerate() {
                edge_tensor[base + 4 * i..base + 4 * i + 4].copy_from_slice(&norm.token(h));
            }
        }
    }
    let fg = build_face_graph(model)?;
    let eg = build_edge_graph(model)?;
    let batch = TokenBatch {
        num_faces: nf,
        num_edges: ne,
        caps,
        face_tensor,
        edge_tensor,
        face_mask,
        edge_mask,
        face_adjacency: fg.triples().into_iter().map(|(a, b, e)| [a, b, e]).collect(),
        edge_adjacency: eg.triples().into_iter().map(|(a, b, f)| [a, b, f]).collect(),
        entity_counts: vec![(nf, ne)],
        normalizations: vec![norm],
    };
    batch.validate()?;
    Ok(batch)
}

pub fn encode_batch(batch: &TokenBatch) -> Vec<u8> {
    let mut w = BinWriter::default();
    w.bytes(MAGIC);
    for x in [
        batch.num_faces,
        batch.num_edges,
        batch.caps.face,
        batch.caps.edge,
        TRI_POINTS,
        SEG_POINTS,
        batch.face_adjacency.len(),
        batch.edge_adjacency.len(),
        batch.entity_counts.len(),
    ] {
        w.u32(x);
    }
    for (f, e) in &batch.entity_counts {
        w.u32(*f);
        w.u32(*e);
    }
    for n in &batch.normalizations {
        w.f64s(&n.as_array());
    }
    w.f64s(&batch.face_tensor);
    w.f64s(&batch.edge_tensor);
    w.bytes(&batch.face_mask);
    w.bytes(&batch.edge_mask);
    for t in batch.face_adjacency.iter().chain(&batch.edge_adjacency) {
        t.iter().for_each(|x| w.u32(*x));
    }
    w.buf
}

pub fn decode_batch(data: &[u8]) -> Result<TokenBatch> {
    let mut r = BinReader::new(data);
    r.magic(MAGIC)?;
    let nf = r.u32("num_faces")?;
    let ne = r.u32("num_edges")?;
    let caps = Caps {
        face: r.u32("face_cap")?,
        edge: r.u32("edge_cap")?,
    };
    let (tp, sp) = (r.u32("tri_points")?, r.u32("seg_points")?);
    if (tp, sp) != (TRI_POINTS, SEG_POINTS) {
        return Err(Error::parse("tri_points", format!("unsupported primitive sizes ({tp}, {sp})")));
    }
    let nfa = r.u32("face_adjacency_len")?;
    let nea = r.u32("edge_adjacency_len")?;
    let nm = r.u32("num_models")?;
    let mut entity_counts = Vec::with_capacity(nm.min(1 << 16));
    for _ in 0..nm {
        entity_counts.push((r.u32("entity_counts")?, r.u32("entity_counts")?));
    }
    let mut normalizations = Vec::with_capacity(nm.min(1 << 16));
    for _ in 0..nm {
        normalizations.push(Normalization::from_array(&r.f64s(4, "normalization")?));
    }
    let face_tensor = r.f64s(volume(&[nf, caps.face, TRI_POINTS, 4], "face_tensor")?, "face_tensor")?;
    let edge_tensor = r.f64s(volume(&[ne, caps.edge, SEG_POINTS, 4], "edge_tensor")?, "edge_tensor")?;
    let face_mask = r.bytes(volume(&[nf, caps.face], "face_mask")?, "face_mask")?;
    let edge_mask = r.bytes(volume(&[ne, caps.edge], "edge_mask")?, "edge_mask")?;
    let mut triples = |n: usize, field: &str| -> Result<Vec<[usize; 3]>> {
        (0..n).map(|_| Ok([r.u32(field)?, r.u32(field)?, r.u32(field)?])).collect()
    };
    let face_adjacency = triples(nfa, "face_adjacency")?;
    let edge_adjacency = triples(nea, "edge_adjacency")?;
    r.finish()?;
    let batch = TokenBatch {
        num_faces: nf,
        num_edges: ne,
        caps,
        face_tensor,
        edge_tensor,
        face_mask,
        edge_mask,
        face_adjacency,
        edge_adjacency,
        entity_counts,
        normalizations,
    };
    batch.validate()?;
    Ok(batch)
}

pub fn write_batch(batch: &TokenBatch, path: &Path) -> Result<()> {
    write_atomic(path, &encode_batch(batch))
}

pub fn read_batch(path: &Path) -> Result<TokenBatch> {
    decode_batch(&read_bytes(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brep::{generate_solid, SolidKind, SolidParams};
    use crate::decompose::{decompose_model, QuadtreeOptions};

    fn prepared(kind: SolidKind) -> (BrepModel, ModelPrimitives) {
        let m = generate_solid(kind, &SolidParams::default(), 1).unwrap();
        let p = decompose_model(&m, QuadtreeOptions::default()).unwrap();
        (m, p)
    }

    #[test]
    fn box_face_padding() {
        let (m, p) = prepared(SolidKind::Box);
        let caps = Caps { face: 16, edge: 8 };
        let b = tokenize_model(&m, &p, caps).unwrap();
        for f in 0..6 {
            assert_eq!(b.face_valid(f), 2);
            assert!(b.face_slot(f, 2).iter().all(|x| *x == 0.0));
        }
        assert_eq!(b.face_adjacency.len(), 12);
        // normalized into the unit cube
        assert!(b.face_tensor.iter().enumerate().all(|(i, x)| i % 4 == 3 || x.abs() <= 0.5 + 1e-15));
    }

    #[test]
    fn circle_edge_slots() {
        let (m, p) = prepared(SolidKind::Cylinder);
        let b = tokenize_model(&m, &p, Caps::default()).unwrap();
        assert_eq!(b.edge_valid(0), 4);
        assert_eq!(b.edge_slot(0, 0).len(), 16);
    }

    #[test]
    fn detokenized_primitives_match() {
        let (m, p) = prepared(SolidKind::Cylinder);
        let b = tokenize_model(&m, &p, Caps::default()).unwrap();
        let norm = b.normalizations[0];
        let order = select_triangles(&p.faces[0], b.caps.face);
        for (slot, &k) in order.iter().enumerate() {
            let raw = b.face_slot(0, slot);
            for (i, y) in p.faces[0][k].control_points().iter().enumerate() {
                assert_eq!(raw[4 * i..4 * i + 4], norm.token(y));
            }
            let t = b.face_primitive(0, slot).unwrap();
            for (u, v) in [(0.2, 0.3), (0.0, 1.0), (0.5, 0.25)] {
                let want = norm.apply(p.faces[0][k].eval(u, v).unwrap());
                let got = t.eval(u, v).unwrap();
                assert!(crate::geom::point::distance(want, got) < 1e-14);
            }
        }
        assert!(b.face_primitive(0, 31).is_none());
    }

    #[test]
    fn concat_keeps_models_apart() {
        let (m1, p1) = prepared(SolidKind::Box);
        let (m2, p2) = prepared(SolidKind::Cylinder);
        let b1 = tokenize_model(&m1, &p1, Caps::default()).unwrap();
        let b2 = tokenize_model(&m2, &p2, Caps::default()).unwrap();
        let b = TokenBatch::concat(&[b1.clone(), b2]).unwrap();
        assert_eq!(b.entity_counts, vec![(6, 12), (3, 3)]);
        for [a, c, _] in &b.face_adjacency {
            assert_eq!(*a < 6, *c < 6);
        }
        assert_eq!(b.face_adjacency[..b1.face_adjacency.len()], b1.face_adjacency[..]);
    }

    #[test]
    fn binary_round_trip_and_truncation() {
        let (m, p) = prepared(SolidKind::TrimmedPlate);
        let b = tokenize_model(&m, &p, Caps::default()).unwrap();
        let bytes = encode_batch(&b);
        assert_eq!(decode_batch(&bytes).unwrap(), b);
        assert!(matches!(decode_batch(&bytes[..bytes.len() - 1]), Err(Error::Parse { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_batch(&bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_unstandardized() {
        let m = generate_solid(SolidKind::Box, &SolidParams::default(), 0).unwrap();
        let mut p = decompose_model(&m, QuadtreeOptions::default()).unwrap();
        let seg = crate::decompose::curve_to_bezier_segments(&m.edges()[0].curve).unwrap();
        p.edges[0] = seg.into_iter().map(|mut s| {
            s.source.entity = Some(0);
            s
        }).collect();
        assert!(matches!(tokenize_model(&m, &p, Caps::default()), Err(Error::Integrity(_))));
    }
}
