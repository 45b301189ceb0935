//! Synthetic solids with exact NURBS geometry.

use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::brep::{BrepModel, Edge, Face};
use crate::error::{Error, Result};
use crate::geom::point::{HomogeneousPoint, Point3};
use crate::geom::{KnotVector, LoopOrientation, NurbsCurve, NurbsSurface, TrimLoop};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolidKind {
    Box,
    Cylinder,
    TrimmedPlate,
    LoftedWedge,
}

impl SolidKind {
    pub const ALL: [SolidKind; 4] = [SolidKind::Box, SolidKind::Cylinder, SolidKind::TrimmedPlate, SolidKind::LoftedWedge];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolidKind::Box => "box",
            SolidKind::Cylinder => "cylinder",
            SolidKind::TrimmedPlate => "trimmed_plate",
            SolidKind::LoftedWedge => "lofted_wedge",
        }
    }

    /// Class id stored as the model label.
    pub fn label(&self) -> usize {
        Self::ALL.iter().position(|k| k == self).unwrap()
    }
}

impl FromStr for SolidKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown solid kind {s:?}")))
    }
}

/// Dimensions; each kind reads the fields it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolidParams {
    /// Box and wedge extents, plate width/depth (`dims[2]` unused for plates).
    pub dims: [f64; 3],
    pub radius: f64,
    pub height: f64,
    /// Hole radius in the plate's unit parameter square.
    pub hole_radius: f64,
}

impl Default for SolidParams {
    fn default() -> Self {
        Self {
            dims: [1.0, 1.0, 1.0],
            radius: 1.0,
            height: 2.0,
            hole_radius: 0.25,
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("{name} must be positive, got {x}")))
    }
}

pub fn generate_solid(kind: SolidKind, params: &SolidParams, seed: u64) -> Result<BrepModel> {
    let model = match kind {
        SolidKind::Box => make_box(params.dims)?,
        SolidKind::Cylinder => make_cylinder(params.radius, params.height)?,
        SolidKind::TrimmedPlate => make_plate(params.dims[0], params.dims[1], params.hole_radius)?,
        SolidKind::LoftedWedge => make_wedge(params.dims, seed)?,
    };
    Ok(model.with_label(Some(kind.label())))
}

/// `n` solids cycling through `kinds`, with dimensions drawn from `seed`.
pub fn generate_dataset(kinds: &[SolidKind], n: usize, seed: u64) -> Result<Vec<BrepModel>> {
    if kinds.is_empty() {
        return Err(Error::arg("at least one solid kind is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let params = SolidParams {
                dims: [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)],
                radius: rng.random_range(0.3..1.5),
                height: rng.random_range(0.5..3.0),
                hole_radius: rng.random_range(0.1..0.35),
            };
            let sub_seed = rng.random_range(0..u64::MAX);
            generate_solid(kinds[i % kinds.len()], &params, sub_seed)
        })
        .collect()
}

fn faces_from(surfaces: Vec<NurbsSurface>) -> Vec<Face> {
    surfaces
        .into_iter()
        .enumerate()
        .map(|(id, surface)| Face { id, surface })
        .collect()
}

fn edges_from(list: Vec<(NurbsCurve, Vec<usize>)>) -> Vec<Edge> {
    list.into_iter()
        .enumerate()
        .map(|(id, (curve, bounds_faces))| Edge { id, curve, bounds_faces })
        .collect()
}

fn make_box(dims: [f64; 3]) -> Result<BrepModel> {
    for (k, d) in dims.iter().enumerate() {
        positive(&format!("box dimension {k}"), *d)?;
    }
    let corner = |c: [usize; 3]| -> Point3 { std::array::from_fn(|k| c[k] as f64 * dims[k]) };
    // face 2*axis + side lies on the plane x_axis = side * dims[axis]
    let mut surfaces = Vec::with_capacity(6);
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            let at = |i: usize, j: usize| {
                let mut c = [0; 3];
                c[axis] = side;
                c[a] = i;
                c[b] = j;
                corner(c)
            };
            surfaces.push(NurbsSurface::bilinear(at(0, 0), at(1, 0), at(0, 1), at(1, 1)));
        }
    }
    let mut edges = Vec::with_capacity(12);
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        for sa in 0..2 {
            for sb in 0..2 {
                let mut c0 = [0; 3];
                c0[a] = sa;
                c0[b] = sb;
                let mut c1 = c0;
                c1[axis] = 1;
                edges.push((NurbsCurve::line(corner(c0), corner(c1)), vec![2 * a + sa, 2 * b + sb]));
            }
        }
    }
    BrepModel::new(faces_from(surfaces), edges_from(edges), None)
}

fn make_cylinder(radius: f64, height: f64) -> Result<BrepModel> {
    positive("cylinder radius", radius)?;
    positive("cylinder height", height)?;
    let (o, x, y, z) = ([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
    let top = [0.0, 0.0, height];
    let wall = NurbsSurface::cylinder(o, x, y, z, radius, height)?;
    let bottom = NurbsSurface::disk(o, x, y, radius)?;
    let cap = NurbsSurface::disk(top, x, y, radius)?;
    let edges = vec![
        (NurbsCurve::circle(o, x, y, radius)?, vec![0, 1]),
        (NurbsCurve::circle(top, x, y, radius)?, vec![0, 2]),
        // seam: the wall meets itself along u = 0 / u = 1
        (NurbsCurve::line([radius, 0.0, 0.0], [radius, 0.0, height]), vec![0, 0]),
    ];
    BrepModel::new(faces_from(vec![wall, bottom, cap]), edges_from(edges), None)
}

fn make_plate(width: f64, depth: f64, hole: f64) -> Result<BrepModel> {
    positive("plate width", width)?;
    positive("plate depth", depth)?;
    positive("hole radius", hole)?;
    if hole >= 0.5 {
        return Err(Error::arg(format!("hole radius must be below 0.5, got {hole}")));
    }
    let to_model = |p: Point3| -> Point3 { [p[0] * width, p[1] * depth, 0.0] };
    let corners: [Point3; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
    let outer: Vec<NurbsCurve> = (0..4).map(|i| NurbsCurve::line(corners[i], corners[(i + 1) % 4])).collect();
    let circle = NurbsCurve::circle([0.5, 0.5, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], hole)?;
    let loops = vec![
        TrimLoop::new(outer.clone(), LoopOrientation::Outer)?,
        TrimLoop::new(vec![circle.clone()], LoopOrientation::Inner)?,
    ];
    let surface = NurbsSurface::bilinear(
        to_model(corners[0]),
        to_model(corners[1]),
        to_model(corners[3]),
        to_model(corners[2]),
    )
    .with_trim_loops(loops)?;
    // the plane is affine in (u, v), so mapping pcurve control points gives exact model-space edges
    let mut edges: Vec<(NurbsCurve, Vec<usize>)> = outer.iter().map(|c| (c.map_points(to_model), vec![0])).collect();
    edges.push((circle.map_points(to_model), vec![0]));
    BrepModel::new(faces_from(vec![surface]), edges_from(edges), None)
}

fn make_wedge(dims: [f64; 3], seed: u64) -> Result<BrepModel> {
    for (k, d) in dims.iter().enumerate() {
        positive(&format!("wedge dimension {k}"), *d)?;
    }
    let [a, b, c] = dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // cubic B-spline from B = (a, 0) to C = (0, b), bulging outward
    let len = (a * a + b * b).sqrt();
    let normal = [b / len, a / len];
    let curve_xy: Vec<[f64; 2]> = (0..5)
        .map(|i| {
            let t = i as f64 / 4.0;
            let bulge = if i == 0 || i == 4 { 0.0 } else { rng.random_range(0.05..0.2) * len };
            [a * (1.0 - t) + bulge * normal[0], b * t + bulge * normal[1]]
        })
        .collect();
    let u_knots = vec![0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0];
    let at_z = |z: f64| -> Vec<HomogeneousPoint> { curve_xy.iter().map(|p| HomogeneousPoint::unit([p[0], p[1], z])).collect() };
    let ruled = |rows: Vec<[HomogeneousPoint; 2]>| -> Result<NurbsSurface> {
        NurbsSurface::from_knot_vectors(
            KnotVector::new(u_knots.clone(), 3)?,
            KnotVector::bezier(1),
            rows.into_iter().map(|r| r.to_vec()).collect(),
        )
    };
    let (bot, top) = (at_z(0.0), at_z(c));
    let side = ruled(bot.iter().zip(&top).map(|(p, q)| [*p, *q]).collect())?;
    let apex = |z: f64| HomogeneousPoint::unit([0.0, 0.0, z]);
    let cap0 = ruled(bot.iter().map(|p| [*p, apex(0.0)]).collect())?;
    let cap1 = ruled(top.iter().map(|p| [*p, apex(c)]).collect())?;
    let (pa, pb, pc) = ([0.0, 0.0], [a, 0.0], [0.0, b]);
    let p3 = |p: [f64; 2], z: f64| -> Point3 { [p[0], p[1], z] };
    let face_ab = NurbsSurface::bilinear(p3(pa, 0.0), p3(pb, 0.0), p3(pa, c), p3(pb, c));
    let face_ca = NurbsSurface::bilinear(p3(pc, 0.0), p3(pa, 0.0), p3(pc, c), p3(pa, c));
    let spline = |z: f64| NurbsCurve::new(3, u_knots.clone(), at_z(z));
    let edges = vec![
        (NurbsCurve::line(p3(pa, 0.0), p3(pb, 0.0)), vec![1, 3]),
        (spline(0.0)?, vec![0, 1]),
        (NurbsCurve::line(p3(pc, 0.0), p3(pa, 0.0)), vec![1, 4]),
        (NurbsCurve::line(p3(pa, c), p3(pb, c)), vec![2, 3]),
        (spline(c)?, vec![0, 2]),
        (NurbsCurve::line(p3(pc, c), p3(pa, c)), vec![2, 4]),
        (NurbsCurve::line(p3(pa, 0.0), p3(pa, c)), vec![3, 4]),
        (NurbsCurve::line(p3(pb, 0.0), p3(pb, c)), vec![3, 0]),
        (NurbsCurve::line(p3(pc, 0.0), p3(pc, c)), vec![0, 4]),
    ];
    BrepModel::new(faces_from(vec![side, cap0, cap1, face_ab, face_ca]), edges_from(edges), None)
}
