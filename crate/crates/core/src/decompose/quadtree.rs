//! Adaptive quadtree decomposition of trimmed faces.
//!
//! Trim loops are flattened to polylines at the chord-to-arc tolerance and
//! used to classify dyadic cells of the parameter domain: cells crossed by a
//! polyline are boundary cells, the rest are interior or exterior by even-odd
//! ray casting from the cell center. Boundary cells split until every pcurve
//! piece inside them has chord-to-arc ratio at least `tau`, or the depth cap
//! is reached.

use crate::bezier::{BezierRectangle, BezierTriangle, CellBounds};
use crate::decompose::boundary::{boundary_rmse, chord_to_arc, BoundaryErrorReport};
use crate::decompose::insertion::{restrict_rectangle, surface_to_bezier_rectangles};
use crate::decompose::triangles::rectangle_to_triangles;
use crate::error::{Error, Result};
use crate::geom::{LoopOrientation, NurbsCurve, NurbsSurface};

pub const DEFAULT_TAU: f64 = 0.995;
pub const DEFAULT_MAX_DEPTH: u32 = 8;

/// Samples per pcurve used to locate the pieces inside a cell.
const PIECE_SAMPLES: usize = 4096;
const BISECTION_STEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadtreeOptions {
    pub tau: f64,
    pub max_depth: u32,
}

impl Default for QuadtreeOptions {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl QuadtreeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.9 && self.tau < 1.0) {
            return Err(Error::arg(format!("tau must lie in (0.9, 1), got {}", self.tau)));
        }
        if self.max_depth < 1 {
            return Err(Error::arg("max_depth must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellClass {
    Interior,
    Exterior,
    Boundary,
}

/// Portion of one pcurve inside a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePiece {
    pub loop_index: usize,
    pub curve_index: usize,
    pub t0: f64,
    pub t1: f64,
    pub chord_to_arc: f64,
}

/// Leaf of the quadtree. Bounds are the dyadic square `(ix, iy)` at `depth`
/// of the root domain.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadCell {
    pub depth: u32,
    pub ix: u64,
    pub iy: u64,
    pub bounds: CellBounds,
    pub class: CellClass,
    /// Boundary cells: whether every piece met the chord-to-arc threshold.
    pub converged: bool,
    pub pieces: Vec<CurvePiece>,
}

impl QuadCell {
    pub fn is_retained(&self) -> bool {
        self.class != CellClass::Exterior
    }
}

#[derive(Debug, Clone)]
pub struct QuadtreeDecomposition {
    pub triangles: Vec<BezierTriangle>,
    /// All leaves, including discarded exterior ones.
    pub cells: Vec<QuadCell>,
    pub report: BoundaryErrorReport,
    /// Indices into `cells` of boundary leaves stopped by the depth cap.
    pub unconverged: Vec<usize>,
}

struct Segment2 {
    a: [f64; 2],
    b: [f64; 2],
}

struct Sampled {
    loop_index: usize,
    curve_index: usize,
    params: Vec<f64>,
    points: Vec<[f64; 2]>,
}

struct Classifier<'a> {
    surface: &'a NurbsSurface,
    polylines: Vec<Segment2>,
    has_outer: bool,
    samples: Vec<Sampled>,
}

fn flatten(curve: &NurbsCurve, tau: f64, out: &mut Vec<Segment2>) -> Result<()> {
    let (a, b) = curve.domain();
    let mut breaks = vec![a];
    breaks.extend(curve.knot_vector().distinct_interior().into_iter().map(|(k, _)| k));
    breaks.push(b);
    let mut stack: Vec<(f64, f64, u32)> = breaks.windows(2).rev().map(|w| (w[0], w[1], 0)).collect();
    while let Some((t0, t1, depth)) = stack.pop() {
        if depth < 30 && chord_to_arc(curve, t0, t1)? < tau {
            let mid = 0.5 * (t0 + t1);
            stack.push((mid, t1, depth + 1));
            stack.push((t0, mid, depth + 1));
            continue;
        }
        let p = curve.eval(t0)?;
        let q = curve.eval(t1)?;
        out.push(Segment2 {
            a: [p[0], p[1]],
            b: [q[0], q[1]],
        });
    }
    Ok(())
}

fn strictly_inside(p: [f64; 2], c: &CellBounds) -> bool {
    p[0] > c.u0 && p[0] < c.u1 && p[1] > c.v0 && p[1] < c.v1
}

/// Liang–Barsky clip; true when a positive-length part of the segment passes
/// through the open rectangle.
fn segment_crosses_open(s: &Segment2, c: &CellBounds) -> bool {
    let d = [s.b[0] - s.a[0], s.b[1] - s.a[1]];
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let checks = [
        (-d[0], s.a[0] - c.u0),
        (d[0], c.u1 - s.a[0]),
        (-d[1], s.a[1] - c.v0),
        (d[1], c.v1 - s.a[1]),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                lo = lo.max(r);
            } else {
                hi = hi.min(r);
            }
        }
    }
    if hi <= lo {
        return false;
    }
    let m = 0.5 * (lo + hi);
    strictly_inside([s.a[0] + m * d[0], s.a[1] + m * d[1]], c)
}

impl<'a> Classifier<'a> {
    fn new(surface: &'a NurbsSurface, tau: f64) -> Result<Self> {
        let mut polylines = Vec::new();
        let mut samples = Vec::new();
        let mut has_outer = false;
        for (li, lp) in surface.trim_loops().iter().enumerate() {
            has_outer |= lp.orientation() == LoopOrientation::Outer;
            for (ci, c) in lp.pcurves().iter().enumerate() {
                flatten(c, tau, &mut polylines)?;
                let (a, b) = c.domain();
                let mut params = Vec::with_capacity(PIECE_SAMPLES + 1);
                let mut points = Vec::with_capacity(PIECE_SAMPLES + 1);
                for k in 0..=PIECE_SAMPLES {
                    let t = if k == PIECE_SAMPLES { b } else { a + (b - a) * k as f64 / PIECE_SAMPLES as f64 };
                    let p = c.eval(t)?;
                    params.push(t);
                    points.push([p[0], p[1]]);
                }
                samples.push(Sampled {
                    loop_index: li,
                    curve_index: ci,
                    params,
                    points,
                });
            }
        }
        Ok(Self {
            surface,
            polylines,
            has_outer,
            samples,
        })
    }

    fn inside_region(&self, p: [f64; 2]) -> bool {
        let mut crossings = 0usize;
        for s in &self.polylines {
            let (a, b) = (s.a, s.b);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if x > p[0] {
                    crossings += 1;
                }
            }
        }
        let odd = crossings % 2 == 1;
        if self.has_outer {
            odd
        } else {
            !odd
        }
    }

    fn classify(&self, c: &CellBounds) -> CellClass {
        if self.polylines.iter().any(|s| segment_crosses_open(s, c)) {
            return CellClass::Boundary;
        }
        let (cu, cv) = c.center();
        if self.inside_region([cu, cv]) {
            CellClass::Interior
        } else {
            CellClass::Exterior
        }
    }

    fn curve(&self, s: &Sampled) -> &NurbsCurve {
        &self.surface.trim_loops()[s.loop_index].pcurves()[s.curve_index]
    }

    /// Parameter where the curve crosses the cell border between `t_out` (outside) and `t_in` (inside).
    fn crossing(&self, curve: &NurbsCurve, c: &CellBounds, mut t_out: f64, mut t_in: f64) -> Result<f64> {
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (t_out + t_in);
            let p = curve.eval(mid)?;
            if strictly_inside([p[0], p[1]], c) {
                t_in = mid;
            } else {
                t_out = mid;
            }
        }
        Ok(0.5 * (t_out + t_in))
    }

    fn pieces(&self, c: &CellBounds) -> Result<Vec<CurvePiece>> {
        let mut out = Vec::new();
        for s in &self.samples {
            let curve = self.curve(s);
            let n = s.points.len();
            let mut k = 0;
            while k < n {
                if !strictly_inside(s.points[k], c) {
                    k += 1;
                    continue;
                }
                let start = k;
                while k + 1 < n && strictly_inside(s.points[k + 1], c) {
                    k += 1;
                }
                let end = k;
                let t0 = if start == 0 {
                    s.params[0]
                } else {
                    self.crossing(curve, c, s.params[start - 1], s.params[start])?
                };
                let t1 = if end == n - 1 {
                    s.params[n - 1]
                } else {
                    self.crossing(curve, c, s.params[end + 1], s.params[end])?
                };
                if t1 > t0 {
                    out.push(CurvePiece {
                        loop_index: s.loop_index,
                        curve_index: s.curve_index,
                        t0,
                        t1,
                        chord_to_arc: chord_to_arc(curve, t0, t1)?,
                    });
                }
                k += 1;
            }
        }
        Ok(out)
    }
}

fn dyadic_bounds(root: &CellBounds, depth: u32, ix: u64, iy: u64) -> CellBounds {
    let n = (1u64 << depth) as f64;
    let du = root.u1 - root.u0;
    let dv = root.v1 - root.v0;
    let edge = |lo: f64, d: f64, i: u64, hi: f64| if i as f64 == n { hi } else { lo + d * (i as f64 / n) };
    CellBounds::new(
        edge(root.u0, du, ix, root.u1),
        edge(root.u0, du, ix + 1, root.u1),
        edge(root.v0, dv, iy, root.v1),
        edge(root.v0, dv, iy + 1, root.v1),
    )
}

/// Triangles covering `cell` of the Bézier rectangle grid.
pub(crate) fn triangulate_cell(grid: &[Vec<BezierRectangle>], cell: &CellBounds) -> Result<Vec<BezierTriangle>> {
    let mut out = Vec::new();
    for row in grid {
        for rect in row {
            let r = rect.cell;
            let u0 = cell.u0.max(r.u0);
            let u1 = cell.u1.min(r.u1);
            let v0 = cell.v0.max(r.v0);
            let v1 = cell.v1.min(r.v1);
            if !(u1 > u0 && v1 > v0) {
                continue;
            }
            let local = |x: f64, lo: f64, hi: f64| ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            let s = (
                if u0 == r.u0 { 0.0 } else { local(u0, r.u0, r.u1) },
                if u1 == r.u1 { 1.0 } else { local(u1, r.u0, r.u1) },
            );
            let t = (
                if v0 == r.v0 { 0.0 } else { local(v0, r.v0, r.v1) },
                if v1 == r.v1 { 1.0 } else { local(v1, r.v0, r.v1) },
            );
            let mut sub = restrict_rectangle(rect, s, t)?;
            sub.cell = CellBounds::new(u0, u1, v0, v1);
            let (lo, up) = rectangle_to_triangles(&sub)?;
            out.push(lo);
            out.push(up);
        }
    }
    Ok(out)
}

/// Quadtree decomposition of a (possibly trimmed) surface into triangles.
pub fn quadtree_decompose(surface: &NurbsSurface, options: QuadtreeOptions) -> Result<QuadtreeDecomposition> {
    options.validate()?;
    let grid = surface_to_bezier_rectangles(surface)?;
    let ((u0, u1), (v0, v1)) = surface.domain();
    let root = CellBounds::new(u0, u1, v0, v1);
    if !surface.is_trimmed() {
        let mut triangles = Vec::new();
        for row in &grid {
            for rect in row {
                let (lo, up) = rectangle_to_triangles(rect)?;
                triangles.push(lo);
                triangles.push(up);
            }
        }
        return Ok(QuadtreeDecomposition {
            triangles,
            cells: vec![QuadCell {
                depth: 0,
                ix: 0,
                iy: 0,
                bounds: root,
                class: CellClass::Interior,
                converged: true,
                pieces: Vec::new(),
            }],
            report: BoundaryErrorReport::default(),
            unconverged: Vec::new(),
        });
    }

    let classifier = Classifier::new(surface, options.tau)?;
    let mut cells = Vec::new();
    let mut stack = vec![(0u32, 0u64, 0u64)];
    while let Some((depth, ix, iy)) = stack.pop() {
        let bounds = dyadic_bounds(&root, depth, ix, iy);
        let class = classifier.classify(&bounds);
        let (pieces, converged) = if class == CellClass::Boundary {
            let pieces = classifier.pieces(&bounds)?;
            let ok = pieces.iter().all(|p| p.chord_to_arc >= options.tau);
            (pieces, ok)
        } else {
            (Vec::new(), true)
        };
        if class == CellClass::Boundary && !converged && depth < options.max_depth {
            // children pushed in reverse so traversal order is (0,0), (1,0), (0,1), (1,1)
            for (dx, dy) in [(1, 1), (0, 1), (1, 0), (0, 0)] {
                stack.push((depth + 1, 2 * ix + dx, 2 * iy + dy));
            }
            continue;
        }
        cells.push(QuadCell {
            depth,
            ix,
            iy,
            bounds,
            class,
            converged,
            pieces,
        });
    }

    let mut triangles = Vec::new();
    let mut unconverged = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        if !cell.is_retained() {
            continue;
        }
        if !cell.converged {
            unconverged.push(i);
        }
        triangles.extend(triangulate_cell(&grid, &cell.bounds)?);
    }
    if !unconverged.is_empty() {
        log::warn!(
            "{} boundary cells reached max depth {} without meeting tau = {}",
            unconverged.len(),
            options.max_depth,
            options.tau
        );
    }

    let mut reports = Vec::new();
    for s in &classifier.samples {
        let curve = classifier.curve(s);
        let (a, b) = curve.domain();
        let mut breaks = vec![a, b];
        for cell in &cells {
            for p in &cell.pieces {
                if p.loop_index == s.loop_index && p.curve_index == s.curve_index {
                    breaks.push(p.t0);
                    breaks.push(p.t1);
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        let tol = curve.knot_vector().tolerance();
        breaks.dedup_by(|x, y| (*x - *y).abs() <= tol);
        let last = breaks.len() - 1;
        breaks[last] = b;
        reports.push(boundary_rmse(curve, &breaks)?);
    }
    Ok(QuadtreeDecomposition {
        triangles,
        cells,
        report: BoundaryErrorReport::merge(&reports),
        unconverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::TrimLoop;

    fn unit_plane() -> NurbsSurface {
        NurbsSurface::bilinear([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0])
    }

    fn holed_plane(r: f64) -> NurbsSurface {
        let c = NurbsCurve::circle([0.5, 0.5, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], r).unwrap();
        let hole = TrimLoop::new(vec![c], LoopOrientation::Inner).unwrap();
        unit_plane().with_trim_loops(vec![hole]).unwrap()
    }

    #[test]
    fn untrimmed_plane_is_two_triangles() {
        let d = quadtree_decompose(&unit_plane(), QuadtreeOptions::default()).unwrap();
        assert_eq!(d.triangles.len(), 2);
        assert_eq!(d.cells.len(), 1);
        assert_eq!(d.cells[0].class, CellClass::Interior);
    }

    #[test]
    fn argument_checks() {
        let s = unit_plane();
        for (tau, depth) in [(1.5, 8), (0.9, 8), (1.0, 8), (0.995, 0)] {
            let r = quadtree_decompose(&s, QuadtreeOptions { tau, max_depth: depth });
            assert!(matches!(r, Err(Error::Argument(_))));
        }
    }

    #[test]
    fn hole_boundary_cells_meet_tau() {
        let d = quadtree_decompose(&holed_plane(0.25), QuadtreeOptions::default()).unwrap();
        assert!(d.triangles.len() > 2);
        assert!(d.unconverged.is_empty());
        // sin(t)/t = 0.995 solved by bisection
        let (mut lo, mut hi) = (0.01f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.sin() / mid > 0.995 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let half_angle_cap = hi;
        assert!((half_angle_cap - 0.173335).abs() < 1e-6);
        for c in d.cells.iter().filter(|c| c.class == CellClass::Boundary) {
            assert!(c.converged);
            for p in &c.pieces {
                assert!(p.chord_to_arc >= 0.995);
                // piece of a radius-0.25 circle: recover the half angle from the chord
                let curve = holed_plane(0.25).trim_loops()[0].pcurves()[0].clone();
                let a = curve.eval(p.t0).unwrap();
                let b = curve.eval(p.t1).unwrap();
                let chord = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                let theta = (chord / 0.5).asin();
                assert!(theta <= half_angle_cap + 1e-6, "theta {theta}");
            }
        }
        // the hole center is discarded
        let center = d.cells.iter().find(|c| strictly_inside([0.5 + 1e-9, 0.5 + 1e-9], &c.bounds)).unwrap();
        assert_eq!(center.class, CellClass::Exterior);
    }

    #[test]
    fn depth_cap_flags_cells() {
        let d = quadtree_decompose(&holed_plane(0.25), QuadtreeOptions { tau: 0.995, max_depth: 2 }).unwrap();
        assert!(!d.unconverged.is_empty());
        for &i in &d.unconverged {
            assert_eq!(d.cells[i].class, CellClass::Boundary);
            assert_eq!(d.cells[i].depth, 2);
            assert!(!d.cells[i].converged);
        }
    }

    #[test]
    fn leaves_partition_root() {
        let d = quadtree_decompose(&holed_plane(0.3), QuadtreeOptions::default()).unwrap();
        let max = d.cells.iter().map(|c| c.depth).max().unwrap();
        let mut area: u128 = 0;
        let mut occupied = std::collections::HashSet::new();
        for c in &d.cells {
            let shift = max - c.depth;
            area += 1u128 << (2 * shift);
            let side = 1u64 << shift;
            for x in 0..side {
                for y in 0..side {
                    assert!(occupied.insert((c.ix * side + x, c.iy * side + y)), "overlap");
                }
            }
        }
        assert_eq!(area, 1u128 << (2 * max));
    }
}
