//! Boehm knot insertion and Bézier extraction for curves and surfaces.

use crate::bezier::{BezierRectangle, BezierSegment, CellBounds, SourceSpan};
use crate::error::{Error, Result};
use crate::geom::knots::KnotVector;
use crate::geom::point::HomogeneousPoint;
use crate::geom::{NurbsCurve, NurbsSurface};

/// Inserts `u` once into `(knots, cps)`; `u` must already be snapped onto an
/// existing knot value when it coincides with one.
fn insert_raw(knots: &KnotVector, cps: &[HomogeneousPoint], u: f64) -> (Vec<f64>, Vec<HomogeneousPoint>) {
    let p = knots.degree();
    let k = knots.span(u);
    let uk = knots.knots();
    let n = cps.len() - 1;
    let mut q = Vec::with_capacity(n + 2);
    for i in 0..=n + 1 {
        let point = if i + p <= k {
            cps[i]
        } else if i > k {
            cps[i - 1]
        } else {
            let alpha = (u - uk[i]) / (uk[i + p] - uk[i]);
            cps[i - 1] * (1.0 - alpha) + cps[i] * alpha
        };
        q.push(point);
    }
    let mut new_knots = Vec::with_capacity(uk.len() + 1);
    new_knots.extend_from_slice(&uk[..=k]);
    new_knots.push(u);
    new_knots.extend_from_slice(&uk[k + 1..]);
    (new_knots, q)
}

/// Snaps `u` onto an existing knot within tolerance and validates it.
fn prepare_insertion(knots: &KnotVector, u: f64) -> Result<f64> {
    let (a, b) = knots.domain();
    let tol = knots.tolerance();
    if !(u - a > tol && b - u > tol) {
        return Err(Error::Domain {
            value: u,
            start: a,
            end: b,
        });
    }
    let snapped = knots
        .knots()
        .iter()
        .copied()
        .find(|k| (k - u).abs() <= tol)
        .unwrap_or(u);
    if knots.multiplicity(snapped) + 1 > knots.degree() {
        return Err(Error::Multiplicity {
            knot: snapped,
            degree: knots.degree(),
        });
    }
    Ok(snapped)
}

fn insert_polygon(knots: &KnotVector, cps: &[HomogeneousPoint], u: f64) -> Result<(KnotVector, Vec<HomogeneousPoint>)> {
    let u = prepare_insertion(knots, u)?;
    let (k, q) = insert_raw(knots, cps, u);
    Ok((KnotVector::from_raw(k, knots.degree()), q))
}

/// Shape-preserving single knot insertion.
pub fn insert_knot(curve: &NurbsCurve, u_hat: f64) -> Result<NurbsCurve> {
    let (kv, cps) = insert_polygon(curve.knot_vector(), curve.control_points(), u_hat)?;
    Ok(NurbsCurve::from_parts_unchecked(kv, cps))
}

/// Raises every interior knot to multiplicity `p` and splits the control
/// polygon into Bézier pieces. Returns the breakpoints `[a, ..., b]` and one
/// `(p + 1)`-point polygon per span.
fn extract_bezier(knots: &KnotVector, cps: &[HomogeneousPoint]) -> Result<(Vec<f64>, Vec<Vec<HomogeneousPoint>>)> {
    let p = knots.degree();
    if p == 0 {
        return Err(Error::arg("degree-0 entities cannot be decomposed into Bézier pieces"));
    }
    let interior = knots.distinct_interior();
    let mut kv = knots.clone();
    let mut pts = cps.to_vec();
    for &(u, s) in &interior {
        for _ in s..p {
            let (k, q) = insert_raw(&kv, &pts, u);
            kv = KnotVector::from_raw(k, p);
            pts = q;
        }
    }
    let (a, b) = knots.domain();
    let mut breaks = Vec::with_capacity(interior.len() + 2);
    breaks.push(a);
    breaks.extend(interior.iter().map(|(u, _)| *u));
    breaks.push(b);
    let pieces = (0..breaks.len() - 1)
        .map(|s| pts[s * p..=s * p + p].to_vec())
        .collect();
    Ok((breaks, pieces))
}

/// Exact split of a NURBS curve into one Bézier segment per knot span.
pub fn curve_to_bezier_segments(curve: &NurbsCurve) -> Result<Vec<BezierSegment>> {
    let (breaks, pieces) = extract_bezier(curve.knot_vector(), curve.control_points())?;
    pieces
        .into_iter()
        .enumerate()
        .map(|(s, cps)| BezierSegment::new(cps, SourceSpan::new(breaks[s], breaks[s + 1])))
        .collect()
}

/// Control polygon of the Bézier piece over `[s0, s1]` of the Bézier curve
/// with polygon `cps` (domain `[0, 1]`), reparameterized to `[0, 1]`.
pub(crate) fn restrict_polygon(cps: &[HomogeneousPoint], s0: f64, s1: f64) -> Result<Vec<HomogeneousPoint>> {
    if !(0.0 <= s0 && s0 < s1 && s1 <= 1.0) {
        return Err(Error::arg(format!("invalid restriction interval [{s0}, {s1}]")));
    }
    let p = cps.len() - 1;
    if p == 0 || (s0 == 0.0 && s1 == 1.0) {
        return Ok(cps.to_vec());
    }
    let mut kv = KnotVector::bezier(p);
    let mut pts = cps.to_vec();
    let mut piece = 0;
    for (cut, is_left) in [(s0, true), (s1, false)] {
        if cut <= 0.0 || cut >= 1.0 {
            continue;
        }
        for _ in 0..p {
            let (k, q) = insert_raw(&kv, &pts, cut);
            kv = KnotVector::from_raw(k, p);
            pts = q;
        }
        if is_left {
            piece = 1;
        }
    }
    Ok(pts[piece * p..=piece * p + p].to_vec())
}

/// Restriction of a segment to the local interval `[s0, s1]`.
pub fn restrict_segment(seg: &BezierSegment, s0: f64, s1: f64) -> Result<BezierSegment> {
    let cps = restrict_polygon(seg.control_points(), s0, s1)?;
    let src = seg.source;
    let mut out = BezierSegment::new(
        cps,
        SourceSpan {
            entity: src.entity,
            start: src.map(s0),
            end: src.map(s1),
        },
    )?;
    out.source.entity = src.entity;
    Ok(out)
}

/// Step 1 of face decomposition: knot insertion in u and v yielding a grid
/// `grid[u_cell][v_cell]` of tensor-product Bézier patches.
pub fn surface_to_bezier_rectangles(surface: &NurbsSurface) -> Result<Vec<Vec<BezierRectangle>>> {
    let net = surface.control_net();
    let nv = net[0].len();
    // u direction: decompose every column j
    let mut u_breaks = Vec::new();
    let mut u_pieces: Vec<Vec<Vec<HomogeneousPoint>>> = Vec::new(); // [j][piece][i]
    for j in 0..nv {
        let column: Vec<HomogeneousPoint> = net.iter().map(|row| row[j]).collect();
        let (b, pieces) = extract_bezier(surface.u_knots(), &column)?;
        u_breaks = b;
        u_pieces.push(pieces);
    }
    let (p, q) = surface.degrees();
    let n_u = u_breaks.len() - 1;
    let mut v_breaks = Vec::new();
    let mut grid: Vec<Vec<BezierRectangle>> = Vec::with_capacity(n_u);
    for a in 0..n_u {
        // rows of the u-piece a: for each local i, the polygon over original j
        let mut per_i: Vec<Vec<Vec<HomogeneousPoint>>> = Vec::with_capacity(p + 1); // [i][piece][j]
        for i in 0..=p {
            let row: Vec<HomogeneousPoint> = (0..nv).map(|j| u_pieces[j][a][i]).collect();
            let (b, pieces) = extract_bezier(surface.v_knots(), &row)?;
            v_breaks = b;
            per_i.push(pieces);
        }
        let n_v = v_breaks.len() - 1;
        let mut cells = Vec::with_capacity(n_v);
        for bcell in 0..n_v {
            let net: Vec<Vec<HomogeneousPoint>> = (0..=p).map(|i| per_i[i][bcell][..=q].to_vec()).collect();
            let bounds = CellBounds::new(u_breaks[a], u_breaks[a + 1], v_breaks[bcell], v_breaks[bcell + 1]);
            cells.push(BezierRectangle::new(net, bounds)?);
        }
        grid.push(cells);
    }
    Ok(grid)
}

/// Restriction of a Bézier rectangle to the local box `[s0, s1] x [t0, t1]`.
pub fn restrict_rectangle(rect: &BezierRectangle, s: (f64, f64), t: (f64, f64)) -> Result<BezierRectangle> {
    let net = rect.control_net();
    let (p, q) = rect.degrees();
    let rows: Vec<Vec<HomogeneousPoint>> = net
        .iter()
        .map(|row| restrict_polygon(row, t.0, t.1))
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::with_capacity(q + 1); p + 1];
    for j in 0..=q {
        let column: Vec<HomogeneousPoint> = rows.iter().map(|r| r[j]).collect();
        let restricted = restrict_polygon(&column, s.0, s.1)?;
        for (i, h) in restricted.into_iter().enumerate() {
            out[i].push(h);
        }
    }
    let c = rect.cell;
    let (u0, v0) = c.map(s.0, t.0);
    let (u1, v1) = c.map(s.1, t.1);
    let mut r = BezierRectangle::new(out, CellBounds::new(u0, u1, v0, v1))?;
    r.entity = rect.entity;
    Ok(r)
}
