use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::geom::basis::basis_funs;
use crate::geom::curve::NurbsCurve;
use crate::geom::knots::KnotVector;
use crate::geom::point::{project, HomogeneousPoint, Point3};
use crate::geom::trim::TrimLoop;

/// Tensor-product rational B-spline surface with optional trim loops.
///
/// `control_net[i][j]` is indexed by the u-direction `i` and the v-direction `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsSurface {
    u_knots: KnotVector,
    v_knots: KnotVector,
    control_net: Vec<Vec<HomogeneousPoint>>,
    trim_loops: Vec<TrimLoop>,
}

impl NurbsSurface {
    pub fn new(
        degrees: (usize, usize),
        u_knots: Vec<f64>,
        v_knots: Vec<f64>,
        control_net: Vec<Vec<HomogeneousPoint>>,
    ) -> Result<Self> {
        let u = KnotVector::new(u_knots, degrees.0)?;
        let v = KnotVector::new(v_knots, degrees.1)?;
        Self::from_knot_vectors(u, v, control_net)
    }

    pub fn from_knot_vectors(
        u_knots: KnotVector,
        v_knots: KnotVector,
        control_net: Vec<Vec<HomogeneousPoint>>,
    ) -> Result<Self> {
        let (nu, nv) = (u_knots.num_control_points(), v_knots.num_control_points());
        if control_net.len() != nu || control_net.iter().any(|row| row.len() != nv) {
            return Err(Error::arg(format!(
                "control net must be {nu} x {nv} for the given knot vectors"
            )));
        }
        if control_net.iter().flatten().any(|h| !(h.w > 0.0)) {
            return Err(Error::arg("control net weights must be > 0"));
        }
        Ok(Self {
            u_knots,
            v_knots,
            control_net,
            trim_loops: Vec::new(),
        })
    }

    /// Bilinear patch through four corners `p00, p10, p01, p11` (first index along u).
    pub fn bilinear(p00: Point3, p10: Point3, p01: Point3, p11: Point3) -> Self {
        let h = HomogeneousPoint::unit;
        Self {
            u_knots: KnotVector::bezier(1),
            v_knots: KnotVector::bezier(1),
            control_net: vec![vec![h(p00), h(p01)], vec![h(p10), h(p11)]],
            trim_loops: Vec::new(),
        }
    }

    /// Cylinder wall around `axis` through `base`: u runs around the circle,
    /// v along the axis from `base` to `base + height * axis`.
    pub fn cylinder(base: Point3, x_axis: Point3, y_axis: Point3, axis: Point3, radius: f64, height: f64) -> Result<Self> {
        if !(height > 0.0) {
            return Err(Error::arg(format!("cylinder height must be positive, got {height}")));
        }
        let circle = NurbsCurve::circle(base, x_axis, y_axis, radius)?;
        let top: Vec<HomogeneousPoint> = circle
            .control_points()
            .iter()
            .map(|h| {
                let p = h.euclidean();
                HomogeneousPoint::from_euclidean(
                    [p[0] + height * axis[0], p[1] + height * axis[1], p[2] + height * axis[2]],
                    h.w,
                )
            })
            .collect();
        let net = circle
            .control_points()
            .iter()
            .zip(top)
            .map(|(b, t)| vec![*b, t])
            .collect();
        Self::from_knot_vectors(circle.knot_vector().clone(), KnotVector::bezier(1), net)
    }

    /// Flat disk as a ruled surface between the rim circle (v = 0) and the
    /// collapsed center (v = 1).
    pub fn disk(center: Point3, x_axis: Point3, y_axis: Point3, radius: f64) -> Result<Self> {
        let circle = NurbsCurve::circle(center, x_axis, y_axis, radius)?;
        let net = circle
            .control_points()
            .iter()
            .map(|h| vec![*h, HomogeneousPoint::from_euclidean(center, h.w)])
            .collect();
        Self::from_knot_vectors(circle.knot_vector().clone(), KnotVector::bezier(1), net)
    }

    pub fn with_trim_loops(mut self, loops: Vec<TrimLoop>) -> Result<Self> {
        let (u0, u1) = self.u_knots.domain();
        let (v0, v1) = self.v_knots.domain();
        let tol = 1e-9 * ((u1 - u0) + (v1 - v0));
        for lp in &loops {
            for c in lp.pcurves() {
                for h in c.control_points() {
                    let p = h.euclidean();
                    if p[0] < u0 - tol || p[0] > u1 + tol || p[1] < v0 - tol || p[1] > v1 + tol {
                        return Err(Error::Topology(format!(
                            "trim pcurve control point ({}, {}) lies outside the surface domain",
                            p[0], p[1]
                        )));
                    }
                }
            }
        }
        self.trim_loops = loops;
        Ok(self)
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.u_knots.degree(), self.v_knots.degree())
    }

    pub fn u_knots(&self) -> &KnotVector {
        &self.u_knots
    }

    pub fn v_knots(&self) -> &KnotVector {
        &self.v_knots
    }

    pub fn control_net(&self) -> &[Vec<HomogeneousPoint>] {
        &self.control_net
    }

    pub fn trim_loops(&self) -> &[TrimLoop] {
        &self.trim_loops
    }

    pub fn is_trimmed(&self) -> bool {
        !self.trim_loops.is_empty()
    }

    /// `((u0, u1), (v0, v1))`.
    pub fn domain(&self) -> ((f64, f64), (f64, f64)) {
        (self.u_knots.domain(), self.v_knots.domain())
    }

    pub fn eval_homogeneous(&self, u: f64, v: f64) -> Result<HomogeneousPoint> {
        self.u_knots.check_domain(u)?;
        self.v_knots.check_domain(v)?;
        let (p, q) = self.degrees();
        let su = self.u_knots.span(u);
        let sv = self.v_knots.span(v);
        let bu = basis_funs(su, u, p, self.u_knots.knots());
        let bv = basis_funs(sv, v, q, self.v_knots.knots());
        let mut acc = HomogeneousPoint::ZERO;
        for (a, nu) in bu.iter().enumerate() {
            let row = &self.control_net[su - p + a];
            let mut inner = HomogeneousPoint::ZERO;
            for (b, nv) in bv.iter().enumerate() {
                inner = inner + row[sv - q + b] * *nv;
            }
            acc = acc + inner * *nu;
        }
        Ok(acc)
    }

    /// Surface point; trimming is not checked.
    pub fn eval(&self, u: f64, v: f64) -> Result<Point3> {
        let ((u0, u1), (v0, v1)) = self.domain();
        let corner_i = if u == u0 { Some(0) } else if u == u1 { Some(self.control_net.len() - 1) } else { None };
        let corner_j = if v == v0 { Some(0) } else if v == v1 { Some(self.control_net[0].len() - 1) } else { None };
        if let (Some(i), Some(j)) = (corner_i, corner_j) {
            return Ok(self.control_net[i][j].euclidean());
        }
        project(self.eval_homogeneous(u, v)?)
    }

    pub fn map_points(&self, f: impl Fn(Point3) -> Point3) -> Self {
        Self {
            u_knots: self.u_knots.clone(),
            v_knots: self.v_knots.clone(),
            control_net: self
                .control_net
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|h| HomogeneousPoint::from_euclidean(f(h.euclidean()), h.w))
                        .collect()
                })
                .collect(),
            trim_loops: self.trim_loops.clone(),
        }
    }

    /// True when every euclidean control point lies on one plane (relative tolerance 1e-9).
    pub fn is_planar(&self) -> bool {
        let pts: Vec<Point3> = self.control_net.iter().flatten().map(|h| h.euclidean()).collect();
        planar_points(&pts)
    }
}

pub(crate) fn planar_points(pts: &[Point3]) -> bool {
    use crate::geom::point::{cross, norm, sub};
    let scale = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| norm(sub(*p, *q))))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return true;
    }
    let o = pts[0];
    let mut normal = [0.0; 3];
    let mut best = 0.0;
    for a in pts {
        for b in pts {
            let n = cross(sub(*a, o), sub(*b, o));
            let l = norm(n);
            if l > best {
                best = l;
                normal = [n[0] / l, n[1] / l, n[2] / l];
            }
        }
    }
    if best <= 1e-18 * scale * scale {
        return true;
    }
    pts.iter().all(|p| {
        let d = sub(*p, o);
        (d[0] * normal[0] + d[1] * normal[1] + d[2] * normal[2]).abs() <= 1e-9 * scale
    })
}

/// `sqrt(2)/2`, the weight of the corner points of a rational quarter circle.
pub const CIRCLE_WEIGHT: f64 = FRAC_1_SQRT_2;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bilinear_plane() {
        let s = NurbsSurface::bilinear([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]);
        assert_eq!(s.eval(0.25, 0.75).unwrap(), [0.25, 0.75, 0.0]);
        assert_eq!(s.eval(0.0, 0.0).unwrap(), s.control_net()[0][0].euclidean());
        assert!(s.is_planar());
    }

    #[test]
    fn cylinder_radius() {
        let r = 1.7;
        let s = NurbsSurface::cylinder([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], r, 2.0).unwrap();
        assert!(!s.is_planar());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let (u, v): (f64, f64) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
            let p = s.eval(u, v).unwrap();
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_is_planar_and_bounded() {
        let s = NurbsSurface::disk([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 2.0).unwrap();
        assert!(s.is_planar());
        let p = s.eval(0.3, 0.0).unwrap();
        assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 2.0).abs() < 1e-12);
        let c = s.eval(0.3, 1.0).unwrap();
        assert!(c[0].abs() < 1e-15 && c[1].abs() < 1e-15 && c[2] == 1.0);
    }

    #[test]
    fn rejects_bad_net() {
        let h = HomogeneousPoint::unit([0.0; 3]);
        let r = NurbsSurface::new((1, 1), vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0, 1.0], vec![vec![h, h]]);
        assert!(r.is_err());
    }
}
