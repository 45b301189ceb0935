//! Interchange format: a versioned JSON document.
//!
//! Control points are written as `[x, y, z, w]` (euclidean plus weight);
//! trim pcurves as `[u, v, w]`. Floats use the shortest representation that
//! parses back to the same `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::brep::{BrepModel, Edge, Face};
use crate::error::{Error, Result};
use crate::geom::point::HomogeneousPoint;
use crate::geom::{KnotVector, LoopOrientation, NurbsCurve, NurbsSurface, TrimLoop};
use crate::util::{parse_json, read_text, write_atomic};

const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
    faces: Vec<FaceDoc>,
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaceDoc {
    id: usize,
    degrees: [usize; 2],
    u_knots: Vec<f64>,
    v_knots: Vec<f64>,
    control_net: Vec<Vec<[f64; 4]>>,
    #[serde(default)]
    trim_loops: Vec<LoopDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopDoc {
    orientation: String,
    pcurves: Vec<PcurveDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PcurveDoc {
    degree: usize,
    knots: Vec<f64>,
    control_points: Vec<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: usize,
    degree: usize,
    knots: Vec<f64>,
    control_points: Vec<[f64; 4]>,
    bounds_faces: Vec<usize>,
}

fn point_doc(h: &HomogeneousPoint) -> [f64; 4] {
    let p = h.euclidean();
    [p[0], p[1], p[2], h.w]
}

fn point_from_doc(a: [f64; 4], path: impl Fn() -> String) -> Result<HomogeneousPoint> {
    HomogeneousPoint::new([a[0], a[1], a[2]], a[3]).map_err(|e| Error::parse(path(), e.to_string()))
}

fn to_doc(model: &BrepModel) -> ModelDoc {
    ModelDoc {
        version: VERSION,
        label: model.label(),
        faces: model
            .faces()
            .iter()
            .map(|f| {
                let s = &f.surface;
                let (p, q) = s.degrees();
                FaceDoc {
                    id: f.id,
                    degrees: [p, q],
                    u_knots: s.u_knots().knots().to_vec(),
                    v_knots: s.v_knots().knots().to_vec(),
                    control_net: s.control_net().iter().map(|row| row.iter().map(point_doc).collect()).collect(),
                    trim_loops: s
                        .trim_loops()
                        .iter()
                        .map(|lp| LoopDoc {
                            orientation: lp.orientation().as_str().to_string(),
                            pcurves: lp
                                .pcurves()
                                .iter()
                                .map(|c| PcurveDoc {
                                    degree: c.degree(),
                                    knots: c.knots().to_vec(),
                                    control_points: c
                                        .control_points()
                                        .iter()
                                        .map(|h| {
                                            let p = h.euclidean();
                                            [p[0], p[1], h.w]
                                        })
                                        .collect(),
                                })
                                .collect(),
                        })
                        .collect(),
                }
            })
            .collect(),
        edges: model
            .edges()
            .iter()
            .map(|e| EdgeDoc {
                id: e.id,
                degree: e.curve.degree(),
                knots: e.curve.knots().to_vec(),
                control_points: e.curve.control_points().iter().map(point_doc).collect(),
                bounds_faces: e.bounds_faces.clone(),
            })
            .collect(),
    }
}

fn face_from_doc(i: usize, f: FaceDoc) -> Result<Face> {
    let at = |s: &str| format!("faces[{i}].{s}");
    let u = KnotVector::new(f.u_knots, f.degrees[0]).map_err(|e| Error::parse(at("u_knots"), e.to_string()))?;
    let v = KnotVector::new(f.v_knots, f.degrees[1]).map_err(|e| Error::parse(at("v_knots"), e.to_string()))?;
    let mut net = Vec::with_capacity(f.control_net.len());
    for (a, row) in f.control_net.into_iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (b, p) in row.into_iter().enumerate() {
            out.push(point_from_doc(p, || at(&format!("control_net[{a}][{b}]")))?);
        }
        net.push(out);
    }
    let surface = NurbsSurface::from_knot_vectors(u, v, net).map_err(|e| Error::parse(at("control_net"), e.to_string()))?;
    let mut loops = Vec::with_capacity(f.trim_loops.len());
    for (l, lp) in f.trim_loops.into_iter().enumerate() {
        let orientation = match lp.orientation.as_str() {
            "outer" => LoopOrientation::Outer,
            "inner" => LoopOrientation::Inner,
            other => {
                return Err(Error::parse(
                    at(&format!("trim_loops[{l}].orientation")),
                    format!("expected \"outer\" or \"inner\", got {other:?}"),
                ))
            }
        };
        let mut pcurves = Vec::with_capacity(lp.pcurves.len());
        for (c, pc) in lp.pcurves.into_iter().enumerate() {
            let path = || at(&format!("trim_loops[{l}].pcurves[{c}]"));
            let cps = pc
                .control_points
                .iter()
                .map(|p| point_from_doc([p[0], p[1], 0.0, p[2]], path))
                .collect::<Result<Vec<_>>>()?;
            pcurves.push(NurbsCurve::new(pc.degree, pc.knots, cps).map_err(|e| Error::parse(path(), e.to_string()))?);
        }
        // closure and domain violations keep their own (topology) error kind
        loops.push(TrimLoop::new(pcurves, orientation)?);
    }
    let surface = surface.with_trim_loops(loops)?;
    Ok(Face { id: f.id, surface })
}

fn edge_from_doc(i: usize, e: EdgeDoc) -> Result<Edge> {
    let at = |s: &str| format!("edges[{i}].{s}");
    let cps = e
        .control_points
        .iter()
        .enumerate()
        .map(|(k, p)| point_from_doc(*p, || at(&format!("control_points[{k}]"))))
        .collect::<Result<Vec<_>>>()?;
    let curve = NurbsCurve::new(e.degree, e.knots, cps).map_err(|err| Error::parse(at("knots"), err.to_string()))?;
    Ok(Edge {
        id: e.id,
        curve,
        bounds_faces: e.bounds_faces,
    })
}

/// Serializes a model to interchange text.
pub fn model_to_string(model: &BrepModel) -> String {
    serde_json::to_string_pretty(&to_doc(model)).expect("model serialize")
}

/// Parses interchange text; nothing is returned unless the whole model validates.
pub fn model_from_str(text: &str) -> Result<BrepModel> {
    let doc: ModelDoc = parse_json(text)?;
    if doc.version != VERSION {
        return Err(Error::parse("version", format!("unsupported version {}, expected {VERSION}", doc.version)));
    }
    let faces = doc
        .faces
        .into_iter()
        .enumerate()
        .map(|(i, f)| face_from_doc(i, f))
        .collect::<Result<Vec<_>>>()?;
    let edges = doc
        .edges
        .into_iter()
        .enumerate()
        .map(|(i, e)| edge_from_doc(i, e))
        .collect::<Result<Vec<_>>>()?;
    BrepModel::new(faces, edges, doc.label)
}

pub fn read_model(path: &Path) -> Result<BrepModel> {
    model_from_str(&read_text(path)?)
}

pub fn write_model(model: &BrepModel, path: &Path) -> Result<()> {
    write_atomic(path, model_to_string(model).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brep::{generate_solid, SolidKind, SolidParams};

    #[test]
    fn generated_models_round_trip() {
        for kind in SolidKind::ALL {
            let m = generate_solid(kind, &SolidParams::default(), 11).unwrap();
            let back = model_from_str(&model_to_string(&m)).unwrap();
            assert_eq!(back.num_faces(), m.num_faces());
            assert_eq!(model_to_string(&back), model_to_string(&m));
        }
    }

    #[test]
    fn missing_face_is_an_integrity_error() {
        let m = generate_solid(SolidKind::Box, &SolidParams::default(), 0).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_string(&m)).unwrap();
        v["edges"][5]["bounds_faces"][1] = 42.into();
        let err = model_from_str(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Integrity(ref msg) if msg.contains("edge 5")), "{err}");
    }

    #[test]
    fn truncated_and_unknown_fields_are_parse_errors() {
        let m = generate_solid(SolidKind::Box, &SolidParams::default(), 0).unwrap();
        let text = model_to_string(&m);
        assert!(matches!(model_from_str(&text[..text.len() / 2]), Err(Error::Parse { .. })));
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["faces"][2]["colour"] = "red".into();
        match model_from_str(&v.to_string()) {
            Err(Error::Parse { path, .. }) => assert!(path.starts_with("faces[2]"), "{path}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        v["faces"][2].as_object_mut().unwrap().remove("colour");
        v["version"] = 2.into();
        assert!(matches!(model_from_str(&v.to_string()), Err(Error::Parse { .. })));
    }
}
