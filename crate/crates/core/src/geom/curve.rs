use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::geom::basis::basis_funs;
use crate::geom::knots::KnotVector;
use crate::geom::point::{project, HomogeneousPoint, Point3};

/// Rational B-spline curve. Parameter-space curves (trim pcurves) use the
/// same type with `z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsCurve {
    knots: KnotVector,
    control_points: Vec<HomogeneousPoint>,
}

impl NurbsCurve {
    pub fn new(degree: usize, knots: Vec<f64>, control_points: Vec<HomogeneousPoint>) -> Result<Self> {
        let knots = KnotVector::new(knots, degree)?;
        Self::from_knot_vector(knots, control_points)
    }

    pub fn from_knot_vector(knots: KnotVector, control_points: Vec<HomogeneousPoint>) -> Result<Self> {
        if control_points.len() != knots.num_control_points() {
            return Err(Error::arg(format!(
                "{} knots with degree {} require {} control points, got {}",
                knots.len(),
                knots.degree(),
                knots.num_control_points(),
                control_points.len()
            )));
        }
        if let Some(bad) = control_points.iter().find(|h| !(h.w > 0.0)) {
            return Err(Error::arg(format!("control point weight must be > 0, got {}", bad.w)));
        }
        Ok(Self {
            knots,
            control_points,
        })
    }

    pub fn from_points(degree: usize, knots: Vec<f64>, points: &[Point3], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::arg("points and weights differ in length"));
        }
        let cps = points
            .iter()
            .zip(weights)
            .map(|(p, w)| HomogeneousPoint::new(*p, *w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(degree, knots, cps)
    }

    /// Single Bézier piece over `[0, 1]`.
    pub fn bezier(control_points: Vec<HomogeneousPoint>) -> Result<Self> {
        if control_points.is_empty() {
            return Err(Error::arg("bezier curve needs at least one control point"));
        }
        Self::from_knot_vector(KnotVector::bezier(control_points.len() - 1), control_points)
    }

    pub fn line(a: Point3, b: Point3) -> Self {
        Self {
            knots: KnotVector::bezier(1),
            control_points: vec![HomogeneousPoint::unit(a), HomogeneousPoint::unit(b)],
        }
    }

    /// Standard 9-point rational quadratic circle in the plane spanned by
    /// the orthonormal axes `x_axis`, `y_axis`, starting at `center + r*x_axis`.
    pub fn circle(center: Point3, x_axis: Point3, y_axis: Point3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::arg(format!("circle radius must be positive, got {radius}")));
        }
        let offsets: [(f64, f64); 9] = [
            (1.0, 0.0),
            (1.0, 1.0),
            (0.0, 1.0),
            (-1.0, 1.0),
            (-1.0, 0.0),
            (-1.0, -1.0),
            (0.0, -1.0),
            (1.0, -1.0),
            (1.0, 0.0),
        ];
        let points: Vec<Point3> = offsets
            .iter()
            .map(|(a, b)| {
                let mut p = center;
                for k in 0..3 {
                    p[k] += radius * (a * x_axis[k] + b * y_axis[k]);
                }
                p
            })
            .collect();
        let weights: Vec<f64> = (0..9)
            .map(|i| if i % 2 == 1 { FRAC_1_SQRT_2 } else { 1.0 })
            .collect();
        let knots = vec![0.0, 0.0, 0.0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0, 1.0];
        Self::from_points(2, knots, &points, &weights)
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    pub fn knot_vector(&self) -> &KnotVector {
        &self.knots
    }

    pub fn knots(&self) -> &[f64] {
        self.knots.knots()
    }

    pub fn control_points(&self) -> &[HomogeneousPoint] {
        &self.control_points
    }

    pub fn domain(&self) -> (f64, f64) {
        self.knots.domain()
    }

    /// Homogeneous point `sum N_i(u) P_i^w`.
    pub fn eval_homogeneous(&self, u: f64) -> Result<HomogeneousPoint> {
        self.knots.check_domain(u)?;
        let p = self.degree();
        let span = self.knots.span(u);
        let basis = basis_funs(span, u, p, self.knots.knots());
        let mut acc = HomogeneousPoint::ZERO;
        for (j, b) in basis.iter().enumerate() {
            acc = acc + self.control_points[span - p + j] * *b;
        }
        Ok(acc)
    }

    pub fn eval(&self, u: f64) -> Result<Point3> {
        let (a, b) = self.domain();
        if u == a {
            return Ok(self.control_points[0].euclidean());
        }
        if u == b {
            return Ok(self.control_points[self.control_points.len() - 1].euclidean());
        }
        project(self.eval_homogeneous(u)?)
    }

    /// Same geometry traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        let (a, b) = self.domain();
        let knots: Vec<f64> = self.knots().iter().rev().map(|k| a + b - k).collect();
        let mut cps = self.control_points.clone();
        cps.reverse();
        Self {
            knots: KnotVector::from_raw(knots, self.degree()),
            control_points: cps,
        }
    }

    /// Applies `f` to the euclidean part of every control point, keeping weights.
    pub fn map_points(&self, f: impl Fn(Point3) -> Point3) -> Self {
        Self {
            knots: self.knots.clone(),
            control_points: self
                .control_points
                .iter()
                .map(|h| HomogeneousPoint::from_euclidean(f(h.euclidean()), h.w))
                .collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(knots: KnotVector, control_points: Vec<HomogeneousPoint>) -> Self {
        Self {
            knots,
            control_points,
        }
    }
}
