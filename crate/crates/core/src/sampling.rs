//! Shape targets: points sampled on each primitive, padded per entity.

use std::path::Path;

use crate::brep::BrepModel;
use crate::decompose::ModelPrimitives;
use crate::error::{Error, Result};
use crate::tokenize::{select_segments, select_triangles, Caps, Normalization};
use crate::util::{read_bytes, volume, write_atomic, BinReader, BinWriter};

pub const DEFAULT_POINTS_PER_PRIMITIVE: usize = 3;

const MAGIC: &[u8; 4] = b"B2S1";

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeTargets {
    pub m: usize,
    pub num_faces: usize,
    pub num_edges: usize,
    /// Point slots per face (`caps.face * m`).
    pub face_slots: usize,
    pub edge_slots: usize,
    /// `num_faces x face_slots x 3`, normalized frame.
    pub face_points: Vec<f64>,
    pub face_mask: Vec<u8>,
    pub edge_points: Vec<f64>,
    pub edge_mask: Vec<u8>,
    pub normalization: Normalization,
}

impl ShapeTargets {
    pub fn face_point(&self, face: usize, slot: usize) -> [f64; 3] {
        let o = (face * self.face_slots + slot) * 3;
        [self.face_points[o], self.face_points[o + 1], self.face_points[o + 2]]
    }

    pub fn edge_point(&self, edge: usize, slot: usize) -> [f64; 3] {
        let o = (edge * self.edge_slots + slot) * 3;
        [self.edge_points[o], self.edge_points[o + 1], self.edge_points[o + 2]]
    }

    fn validate(&self) -> Result<()> {
        let checks = [
            ("face_points", self.face_points.len(), self.num_faces * self.face_slots * 3),
            ("face_mask", self.face_mask.len(), self.num_faces * self.face_slots),
            ("edge_points", self.edge_points.len(), self.num_edges * self.edge_slots * 3),
            ("edge_mask", self.edge_mask.len(), self.num_edges * self.edge_slots),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::integrity(format!("{name} has {got} values, expected {want}")));
            }
        }
        Ok(())
    }
}

/// `m` curve parameters, uniform on `[0, 1]` including both ends.
pub fn curve_params(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..m).map(|k| if k == m - 1 { 1.0 } else { k as f64 / (m - 1) as f64 }).collect(),
    }
}

/// `m` points of the additive recurrence built on the plastic number, folded
/// into the unit triangle by `(u, v) -> (1 - u, 1 - v)` when `u + v > 1`.
pub fn triangle_params(m: usize) -> Vec<(f64, f64)> {
    // g is the real root of x^3 = x + 1
    let g = 1.324_717_957_244_746_f64;
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    (1..=m)
        .map(|k| {
            let u = (0.5 + a1 * k as f64).fract();
            let v = (0.5 + a2 * k as f64).fract();
            if u + v > 1.0 {
                (1.0 - u, 1.0 - v)
            } else {
                (u, v)
            }
        })
        .collect()
}

/// Samples `m` points on every kept primitive. Slot `s * m + k` holds sample
/// `k` of the primitive in slot `s` (same selection as tokenization).
pub fn sample_entity_points(model: &BrepModel, prims: &ModelPrimitives, m: usize, caps: Caps) -> Result<ShapeTargets> {
    if m == 0 {
        return Err(Error::arg("points per primitive must be at least 1"));
    }
    caps.validate()?;
    prims.check_matches(model)?;
    let norm = Normalization::from_model(model);
    let (nf, ne) = (model.num_faces(), model.num_edges());
    let (face_slots, edge_slots) = (caps.face * m, caps.edge * m);
    let mut face_points = vec![0.0; nf * face_slots * 3];
    let mut face_mask = vec![0u8; nf * face_slots];
    let tri_params = triangle_params(m);
    for (f, tris) in prims.faces.iter().enumerate() {
        for (slot, &k) in select_triangles(tris, caps.face).iter().enumerate() {
            for (j, &(u, v)) in tri_params.iter().enumerate() {
                let i = f * face_slots + slot * m + j;
                let p = norm.apply(tris[k].eval(u, v)?);
                face_points[3 * i..3 * i + 3].copy_from_slice(&p);
                face_mask[i] = 1;
            }
        }
    }
    let mut edge_points = vec![0.0; ne * edge_slots * 3];
    let mut edge_mask = vec![0u8; ne * edge_slots];
    let seg_params = curve_params(m);
    for (e, segs) in prims.edges.iter().enumerate() {
        for (slot, &k) in select_segments(segs, caps.edge).iter().enumerate() {
            for (j, &t) in seg_params.iter().enumerate() {
                let i = e * edge_slots + slot * m + j;
                let p = norm.apply(segs[k].eval(t)?);
                edge_points[3 * i..3 * i + 3].copy_from_slice(&p);
                edge_mask[i] = 1;
            }
        }
    }
    Ok(ShapeTargets {
        m,
        num_faces: nf,
        num_edges: ne,
        face_slots,
        edge_slots,
        face_points,
        face_mask,
        edge_points,
        edge_mask,
        normalization: norm,
    })
}

pub fn encode_targets(t: &ShapeTargets) -> Vec<u8> {
    let mut w = BinWriter::default();
    w.bytes(MAGIC);
    for x in [t.num_faces, t.num_edges, t.face_slots, t.edge_slots, t.m] {
        w.u32(x);
    }
    let n = &t.normalization;
    w.f64s(&[n.center[0], n.center[1], n.center[2], n.scale]);
    w.f64s(&t.face_points);
    w.bytes(&t.face_mask);
    w.f64s(&t.edge_points);
    w.bytes(&t.edge_mask);
    w.buf
}

pub fn decode_targets(data: &[u8]) -> Result<ShapeTargets> {
    let mut r = BinReader::new(data);
    r.magic(MAGIC)?;
    let num_faces = r.u32("num_faces")?;
    let num_edges = r.u32("num_edges")?;
    let face_slots = r.u32("face_slots")?;
    let edge_slots = r.u32("edge_slots")?;
    let m = r.u32("m")?;
    let nz = r.f64s(4, "normalization")?;
    let face_points = r.f64s(volume(&[num_faces, face_slots, 3], "face_points")?, "face_points")?;
    let face_mask = r.bytes(num_faces * face_slots, "face_mask")?;
    let edge_points = r.f64s(volume(&[num_edges, edge_slots, 3], "edge_points")?, "edge_points")?;
    let edge_mask = r.bytes(num_edges * edge_slots, "edge_mask")?;
    r.finish()?;
    let t = ShapeTargets {
        m,
        num_faces,
        num_edges,
        face_slots,
        edge_slots,
        face_points,
        face_mask,
        edge_points,
        edge_mask,
        normalization: Normalization {
            center: [nz[0], nz[1], nz[2]],
            scale: nz[3],
        },
    };
    t.validate()?;
    Ok(t)
}

pub fn write_targets(t: &ShapeTargets, path: &Path) -> Result<()> {
    write_atomic(path, &encode_targets(t))
}

pub fn read_targets(path: &Path) -> Result<ShapeTargets> {
    decode_targets(&read_bytes(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brep::{Edge, Face};
    use crate::decompose::{decompose_model, QuadtreeOptions};
    use crate::geom::{NurbsCurve, NurbsSurface};

    #[test]
    fn straight_edge_samples() {
        let plane = NurbsSurface::bilinear([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]);
        let model = BrepModel::new(
            vec![Face { id: 0, surface: plane }],
            vec![Edge {
                id: 0,
                curve: NurbsCurve::line([0.0; 3], [1.0, 0.0, 0.0]),
                bounds_faces: vec![0],
            }],
            None,
        )
        .unwrap();
        let prims = decompose_model(&model, QuadtreeOptions::default()).unwrap();
        let t = sample_entity_points(&model, &prims, 3, Caps { face: 4, edge: 2 }).unwrap();
        let n = t.normalization;
        let want = [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [1.0, 0.0, 0.0]];
        for (k, w) in want.iter().enumerate() {
            let p = n.invert(t.edge_point(0, k));
            assert!(crate::geom::point::distance(p, *w) < 1e-15);
        }
        assert_eq!(&t.edge_mask, &[1, 1, 1, 0, 0, 0]);
        // 2 triangles under a cap of 4
        assert_eq!(t.face_mask.iter().filter(|m| **m == 1).count(), 6);
        assert!((6..12).all(|s| t.face_point(0, s) == [0.0; 3]));
    }

    #[test]
    fn lattice_stays_inside_triangle() {
        for (u, v) in triangle_params(200) {
            assert!(u > 0.0 && v > 0.0 && u + v < 1.0);
        }
        assert_eq!(curve_params(1), vec![0.5]);
        assert_eq!(curve_params(2), vec![0.0, 1.0]);
    }

    #[test]
    fn targets_round_trip() {
        let model = crate::brep::generate_solid(crate::brep::SolidKind::Cylinder, &Default::default(), 0).unwrap();
        let prims = decompose_model(&model, QuadtreeOptions::default()).unwrap();
        let t = sample_entity_points(&model, &prims, 3, Caps::default()).unwrap();
        let bytes = encode_targets(&t);
        assert_eq!(decode_targets(&bytes).unwrap(), t);
        assert!(decode_targets(&bytes[..40]).is_err());
    }
}
