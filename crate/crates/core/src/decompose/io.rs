//! Primitives file: JSON with homogeneous control points stored verbatim.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bezier::{BezierSegment, BezierTriangle, CellBounds, SourceSpan, TriangleHalf, TriangleSource};
use crate::decompose::ModelPrimitives;
use crate::error::{Error, Result};
use crate::geom::point::HomogeneousPoint;
use crate::util::{read_text, write_atomic};

const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimitivesDoc {
    version: u32,
    unconverged_cells: usize,
    faces: Vec<Vec<TriangleDoc>>,
    edges: Vec<Vec<SegmentDoc>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TriangleDoc {
    entity: usize,
    degree: usize,
    cell: [f64; 4],
    half: String,
    /// `[wx, wy, wz, w]` in `(i, j)`-lexicographic order.
    points: Vec<[f64; 4]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentDoc {
    entity: usize,
    span: [f64; 2],
    points: Vec<[f64; 4]>,
}

fn to_doc(prims: &ModelPrimitives) -> PrimitivesDoc {
    PrimitivesDoc {
        version: VERSION,
        unconverged_cells: prims.unconverged_cells,
        faces: prims
            .faces
            .iter()
            .enumerate()
            .map(|(f, tris)| {
                tris.iter()
                    .map(|t| {
                        let c = t.source.cell;
                        TriangleDoc {
                            entity: t.source.entity.unwrap_or(f),
                            degree: t.degree(),
                            cell: [c.u0, c.u1, c.v0, c.v1],
                            half: t.source.half.as_str().to_string(),
                            points: t.control_points().iter().map(HomogeneousPoint::as_array).collect(),
                        }
                    })
                    .collect()
            })
            .collect(),
        edges: prims
            .edges
            .iter()
            .enumerate()
            .map(|(e, segs)| {
                segs.iter()
                    .map(|s| SegmentDoc {
                        entity: s.source.entity.unwrap_or(e),
                        span: [s.source.start, s.source.end],
                        points: s.control_points().iter().map(HomogeneousPoint::as_array).collect(),
                    })
                    .collect()
            })
            .collect(),
    }
}

fn from_doc(doc: PrimitivesDoc) -> Result<ModelPrimitives> {
    if doc.version != VERSION {
        return Err(Error::parse("version", format!("unsupported version {}", doc.version)));
    }
    let mut faces = Vec::with_capacity(doc.faces.len());
    for (f, tris) in doc.faces.into_iter().enumerate() {
        let mut out = Vec::with_capacity(tris.len());
        for (k, t) in tris.into_iter().enumerate() {
            let half = match t.half.as_str() {
                "lower" => TriangleHalf::Lower,
                "upper" => TriangleHalf::Upper,
                other => return Err(Error::parse(format!("faces[{f}][{k}].half"), format!("unknown half {other:?}"))),
            };
            let [u0, u1, v0, v1] = t.cell;
            let source = TriangleSource {
                entity: Some(t.entity),
                cell: CellBounds::new(u0, u1, v0, v1),
                half,
            };
            let points = t.points.into_iter().map(HomogeneousPoint::from_array).collect();
            out.push(
                BezierTriangle::new(t.degree, points, source)
                    .map_err(|e| Error::parse(format!("faces[{f}][{k}]"), e.to_string()))?,
            );
        }
        faces.push(out);
    }
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (e, segs) in doc.edges.into_iter().enumerate() {
        let mut out = Vec::with_capacity(segs.len());
        for (k, s) in segs.into_iter().enumerate() {
            let source = SourceSpan {
                entity: Some(s.entity),
                start: s.span[0],
                end: s.span[1],
            };
            let points = s.points.into_iter().map(HomogeneousPoint::from_array).collect();
            out.push(BezierSegment::new(points, source).map_err(|err| Error::parse(format!("edges[{e}][{k}]"), err.to_string()))?);
        }
        edges.push(out);
    }
    Ok(ModelPrimitives {
        faces,
        edges,
        unconverged_cells: doc.unconverged_cells,
    })
}

pub fn primitives_to_string(prims: &ModelPrimitives) -> String {
    serde_json::to_string(&to_doc(prims)).expect("primitives serialize")
}

pub fn primitives_from_str(text: &str) -> Result<ModelPrimitives> {
    let doc: PrimitivesDoc = crate::util::parse_json(text)?;
    from_doc(doc)
}

pub fn write_primitives(prims: &ModelPrimitives, path: &Path) -> Result<()> {
    write_atomic(path, primitives_to_string(prims).as_bytes())
}

pub fn read_primitives(path: &Path) -> Result<ModelPrimitives> {
    primitives_from_str(&read_text(path)?)
}
