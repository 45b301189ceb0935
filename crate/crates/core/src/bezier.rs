//! Fixed-size Bézier primitives produced by decomposition.

use crate::error::{Error, Result};
use crate::geom::basis::{bernstein_all, bernstein_triangle_unchecked};
use crate::geom::point::{project, HomogeneousPoint, Point3};

/// Slack allowed on the triangle constraint `u + v <= 1`.
const TRIANGLE_SLACK: f64 = 1e-14;

/// Where a segment came from: entity id and parameter interval of the original curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpan {
    pub entity: Option<usize>,
    pub start: f64,
    pub end: f64,
}

impl SourceSpan {
    pub fn new(start: f64, end: f64) -> Self {
        Self {
            entity: None,
            start,
            end,
        }
    }

    /// Original parameter for local parameter `t` in `[0, 1]`.
    pub fn map(&self, t: f64) -> f64 {
        if t == 1.0 {
            self.end
        } else {
            self.start + t * (self.end - self.start)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BezierSegment {
    control_points: Vec<HomogeneousPoint>,
    pub source: SourceSpan,
}

impl BezierSegment {
    pub fn new(control_points: Vec<HomogeneousPoint>, source: SourceSpan) -> Result<Self> {
        if control_points.is_empty() {
            return Err(Error::arg("bezier segment needs at least one control point"));
        }
        if control_points.iter().any(|h| !(h.w > 0.0)) {
            return Err(Error::arg("bezier segment weights must be > 0"));
        }
        Ok(Self {
            control_points,
            source,
        })
    }

    pub fn degree(&self) -> usize {
        self.control_points.len() - 1
    }

    pub fn control_points(&self) -> &[HomogeneousPoint] {
        &self.control_points
    }

    pub fn eval_homogeneous(&self, u: f64) -> Result<HomogeneousPoint> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain {
                value: u,
                start: 0.0,
                end: 1.0,
            });
        }
        let basis = bernstein_all(self.degree(), u);
        Ok(self
            .control_points
            .iter()
            .zip(basis)
            .fold(HomogeneousPoint::ZERO, |acc, (p, b)| acc + *p * b))
    }

    pub fn eval(&self, u: f64) -> Result<Point3> {
        project(self.eval_homogeneous(u)?)
    }

    /// Raises the degree to `target` without changing the curve.
    pub fn elevate(&self, target: usize) -> Result<Self> {
        let p = self.degree();
        if target < p {
            return Err(Error::arg(format!("cannot elevate degree {p} segment to {target}")));
        }
        let mut cps = self.control_points.clone();
        for d in p..target {
            // one step d -> d + 1
            let n = d + 1;
            let mut next = Vec::with_capacity(n + 1);
            next.push(cps[0]);
            for i in 1..n {
                let a = i as f64 / n as f64;
                next.push(cps[i - 1] * a + cps[i] * (1.0 - a));
            }
            next.push(cps[d]);
            cps = next;
        }
        Ok(Self {
            control_points: cps,
            source: self.source,
        })
    }

    /// Euclidean length of the control polygon's chord.
    pub fn chord_length(&self) -> f64 {
        let a = self.control_points[0].euclidean();
        let b = self.control_points[self.degree()].euclidean();
        crate::geom::point::distance(a, b)
    }
}

/// Standalone helper matching the decomposition API naming.
pub fn elevate_segment_degree(seg: &BezierSegment, target_degree: usize) -> Result<BezierSegment> {
    seg.elevate(target_degree)
}

/// Axis-aligned rectangle in a surface's parameter domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBounds {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl CellBounds {
    pub fn new(u0: f64, u1: f64, v0: f64, v1: f64) -> Self {
        Self { u0, u1, v0, v1 }
    }

    pub fn map(&self, s: f64, t: f64) -> (f64, f64) {
        let u = if s == 1.0 { self.u1 } else { self.u0 + s * (self.u1 - self.u0) };
        let v = if t == 1.0 { self.v1 } else { self.v0 + t * (self.v1 - self.v0) };
        (u, v)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.u0 + self.u1), 0.5 * (self.v0 + self.v1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BezierRectangle {
    degrees: (usize, usize),
    control_net: Vec<Vec<HomogeneousPoint>>,
    pub cell: CellBounds,
    pub entity: Option<usize>,
}

impl BezierRectangle {
    pub fn new(control_net: Vec<Vec<HomogeneousPoint>>, cell: CellBounds) -> Result<Self> {
        if control_net.is_empty() || control_net[0].is_empty() {
            return Err(Error::arg("empty rectangle control net"));
        }
        let q1 = control_net[0].len();
        if control_net.iter().any(|r| r.len() != q1) {
            return Err(Error::arg("ragged rectangle control net"));
        }
        if control_net.iter().flatten().any(|h| !(h.w > 0.0)) {
            return Err(Error::arg("rectangle weights must be > 0"));
        }
        Ok(Self {
            degrees: (control_net.len() - 1, q1 - 1),
            control_net,
            cell,
            entity: None,
        })
    }

    pub fn degrees(&self) -> (usize, usize) {
        self.degrees
    }

    pub fn control_net(&self) -> &[Vec<HomogeneousPoint>] {
        &self.control_net
    }

    pub fn eval_homogeneous(&self, u: f64, v: f64) -> Result<HomogeneousPoint> {
        for x in [u, v] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain {
                    value: x,
                    start: 0.0,
                    end: 1.0,
                });
            }
        }
        let (p, q) = self.degrees;
        let bu = bernstein_all(p, u);
        let bv = bernstein_all(q, v);
        let mut acc = HomogeneousPoint::ZERO;
        for (a, row) in self.control_net.iter().enumerate() {
            let mut inner = HomogeneousPoint::ZERO;
            for (b, h) in row.iter().enumerate() {
                inner = inner + *h * bv[b];
            }
            acc = acc + inner * bu[a];
        }
        Ok(acc)
    }

    pub fn eval(&self, u: f64, v: f64) -> Result<Point3> {
        project(self.eval_homogeneous(u, v)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriangleHalf {
    /// `u + v <= 1` of the rectangle.
    Lower,
    /// The rectangle reparameterized by `(u, v) -> (1 - u, 1 - v)`.
    Upper,
}

impl TriangleHalf {
    pub fn as_str(&self) -> &'static str {
        match self {
            TriangleHalf::Lower => "lower",
            TriangleHalf::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleSource {
    pub entity: Option<usize>,
    pub cell: CellBounds,
    pub half: TriangleHalf,
}

impl TriangleSource {
    /// Surface parameters of the triangle point `(u, v)`.
    pub fn surface_params(&self, u: f64, v: f64) -> (f64, f64) {
        match self.half {
            TriangleHalf::Lower => self.cell.map(u, v),
            TriangleHalf::Upper => self.cell.map(1.0 - u, 1.0 - v),
        }
    }
}

/// Number of control points of a degree-`d` triangle.
pub fn triangle_point_count(d: usize) -> usize {
    (d + 1) * (d + 2) / 2
}

/// Position of `(i, j)` in the `(i, j)`-lexicographic layout.
pub fn triangle_index(i: usize, j: usize, d: usize) -> usize {
    // rows i' < i contribute (d - i' + 1) entries each
    i * (d + 1) - i * (i.saturating_sub(1)) / 2 + j
}

#[derive(Debug, Clone, PartialEq)]
pub struct BezierTriangle {
    degree: usize,
    control_points: Vec<HomogeneousPoint>,
    pub source: TriangleSource,
}

impl BezierTriangle {
    /// `control_points` in `(i, j)`-lexicographic order over `i + j <= degree`.
    pub fn new(degree: usize, control_points: Vec<HomogeneousPoint>, source: TriangleSource) -> Result<Self> {
        if control_points.len() != triangle_point_count(degree) {
            return Err(Error::arg(format!(
                "degree {degree} triangle needs {} control points, got {}",
                triangle_point_count(degree),
                control_points.len()
            )));
        }
        if control_points.iter().any(|h| !(h.w > 0.0)) {
            return Err(Error::arg("triangle weights must be > 0"));
        }
        Ok(Self {
            degree,
            control_points,
            source,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn control_points(&self) -> &[HomogeneousPoint] {
        &self.control_points
    }

    pub fn get(&self, i: usize, j: usize) -> HomogeneousPoint {
        self.control_points[triangle_index(i, j, self.degree)]
    }

    pub fn eval_homogeneous(&self, u: f64, v: f64) -> Result<HomogeneousPoint> {
        if !(u >= 0.0 && v >= 0.0 && u + v <= 1.0 + TRIANGLE_SLACK) {
            return Err(Error::Domain {
                value: u + v,
                start: 0.0,
                end: 1.0,
            });
        }
        let d = self.degree;
        let mut acc = HomogeneousPoint::ZERO;
        let mut k = 0;
        for i in 0..=d {
            for j in 0..=d - i {
                acc = acc + self.control_points[k] * bernstein_triangle_unchecked(i, j, d, u, v);
                k += 1;
            }
        }
        Ok(acc)
    }

    pub fn eval(&self, u: f64, v: f64) -> Result<Point3> {
        project(self.eval_homogeneous(u, v)?)
    }

    /// Degree elevation `d -> target` preserving the surface.
    pub fn elevate(&self, target: usize) -> Result<Self> {
        let d0 = self.degree;
        if target < d0 {
            return Err(Error::arg(format!("cannot elevate degree {d0} triangle to {target}")));
        }
        let mut cps = self.control_points.clone();
        for d in d0..target {
            let n = d + 1;
            let mut next = Vec::with_capacity(triangle_point_count(n));
            for i in 0..=n {
                for j in 0..=n - i {
                    let k = n - i - j;
                    let mut acc = HomogeneousPoint::ZERO;
                    if i > 0 {
                        acc = acc + cps[triangle_index(i - 1, j, d)] * i as f64;
                    }
                    if j > 0 {
                        acc = acc + cps[triangle_index(i, j - 1, d)] * j as f64;
                    }
                    if k > 0 {
                        acc = acc + cps[triangle_index(i, j, d)] * k as f64;
                    }
                    next.push(acc * (1.0 / n as f64));
                }
            }
            cps = next;
        }
        Ok(Self {
            degree: target,
            control_points: cps,
            source: self.source,
        })
    }

    /// Area of the flat triangle through the three corner points.
    pub fn corner_area(&self) -> f64 {
        use crate::geom::point::{cross, norm, sub};
        let d = self.degree;
        let a = self.get(0, 0).euclidean();
        let b = self.get(d, 0).euclidean();
        let c = self.get(0, d).euclidean();
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h(x: f64, y: f64, z: f64, w: f64) -> HomogeneousPoint {
        HomogeneousPoint::from_euclidean([x, y, z], w)
    }

    fn tri_source() -> TriangleSource {
        TriangleSource {
            entity: None,
            cell: CellBounds::new(0.0, 1.0, 0.0, 1.0),
            half: TriangleHalf::Lower,
        }
    }

    #[test]
    fn triangle_layout() {
        let d = 3;
        let mut k = 0;
        for i in 0..=d {
            for j in 0..=d - i {
                assert_eq!(triangle_index(i, j, d), k);
                k += 1;
            }
        }
        assert_eq!(k, triangle_point_count(d));
        assert_eq!(triangle_point_count(6), 28);
    }

    #[test]
    fn linear_segment_elevation() {
        let s = BezierSegment::new(vec![h(0.0, 0.0, 0.0, 1.0), h(1.0, 0.0, 0.0, 1.0)], SourceSpan::new(0.0, 1.0)).unwrap();
        let e = s.elevate(2).unwrap();
        assert_eq!(e.control_points()[1].euclidean(), [0.5, 0.0, 0.0]);
        assert_eq!(s.elevate(1).unwrap(), s);
        assert!(s.elevate(0).is_err());
    }

    #[test]
    fn segment_elevation_preserves_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cps: Vec<_> = (0..4)
            .map(|_| h(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.3..3.0)))
            .collect();
        let s = BezierSegment::new(cps, SourceSpan::new(0.0, 1.0)).unwrap();
        let e = s.elevate(7).unwrap();
        assert_eq!(e.degree(), 7);
        for _ in 0..100 {
            let u = rng.random_range(0.0..=1.0);
            let (a, b) = (s.eval(u).unwrap(), e.eval(u).unwrap());
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triangle_corners_and_elevation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 2;
        let cps: Vec<_> = (0..triangle_point_count(d))
            .map(|_| h(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.3..3.0)))
            .collect();
        let t = BezierTriangle::new(d, cps, tri_source()).unwrap();
        assert_eq!(t.eval(0.0, 0.0).unwrap(), t.get(0, 0).euclidean());
        assert_eq!(t.eval(1.0, 0.0).unwrap(), t.get(2, 0).euclidean());
        assert_eq!(t.eval(0.0, 1.0).unwrap(), t.get(0, 2).euclidean());
        assert!(t.eval(0.7, 0.7).is_err());
        let e = t.elevate(6).unwrap();
        assert_eq!(e.control_points().len(), 28);
        for _ in 0..200 {
            let (a, b): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            let (x, y) = (t.eval(a, b).unwrap(), e.eval(a, b).unwrap());
            for k in 0..3 {
                assert!((x[k] - y[k]).abs() < 1e-12);
            }
        }
    }
}
