use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// Weighted control point `(w*x, w*y, w*z, w)`.
///
/// Rational operations (knot insertion, degree elevation, subdivision) are
/// linear on this representation; only evaluation divides by `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPoint {
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
    pub w: f64,
}

impl HomogeneousPoint {
    pub const ZERO: HomogeneousPoint = HomogeneousPoint {
        wx: 0.0,
        wy: 0.0,
        wz: 0.0,
        w: 0.0,
    };

    /// Lifts a euclidean point with weight `w`. Fails unless `w > 0` and all
    /// components are finite.
    pub fn new(p: Point3, w: f64) -> Result<Self> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::arg(format!("control point weight must be > 0, got {w}")));
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg(format!("non-finite control point {p:?}")));
        }
        Ok(Self::from_euclidean(p, w))
    }

    /// Unchecked lift; callers guarantee `w > 0`.
    pub fn from_euclidean(p: Point3, w: f64) -> Self {
        Self {
            wx: p[0] * w,
            wy: p[1] * w,
            wz: p[2] * w,
            w,
        }
    }

    pub fn unit(p: Point3) -> Self {
        Self::from_euclidean(p, 1.0)
    }

    pub fn euclidean(&self) -> Point3 {
        [self.wx / self.w, self.wy / self.w, self.wz / self.w]
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.wx, self.wy, self.wz, self.w]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            wx: a[0],
            wy: a[1],
            wz: a[2],
            w: a[3],
        }
    }

    /// `(1 - t) * self + t * other` in homogeneous space.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        *self * (1.0 - t) + *other * t
    }
}

impl Add for HomogeneousPoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            wx: self.wx + o.wx,
            wy: self.wy + o.wy,
            wz: self.wz + o.wz,
            w: self.w + o.w,
        }
    }
}

impl Sub for HomogeneousPoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            wx: self.wx - o.wx,
            wy: self.wy - o.wy,
            wz: self.wz - o.wz,
            w: self.w - o.w,
        }
    }
}

impl Mul<f64> for HomogeneousPoint {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self {
            wx: self.wx * s,
            wy: self.wy * s,
            wz: self.wz * s,
            w: self.w * s,
        }
    }
}

/// Divides an accumulated homogeneous sum by its weight.
pub(crate) fn project(h: HomogeneousPoint) -> Result<Point3> {
    if !(h.w > 0.0) {
        return Err(Error::Degenerate(format!("accumulated weight {} is not positive", h.w)));
    }
    Ok(h.euclidean())
}

pub fn distance(a: Point3, b: Point3) -> f64 {
    norm(sub(a, b))
}

pub fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm(a: Point3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_weight() {
        assert!(HomogeneousPoint::new([0.0; 3], 0.0).is_err());
        assert!(HomogeneousPoint::new([0.0; 3], -1.0).is_err());
        assert!(HomogeneousPoint::new([f64::NAN, 0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn euclidean_round_trip() {
        let h = HomogeneousPoint::new([1.0, 2.0, 3.0], 0.5).unwrap();
        assert_eq!(h.as_array(), [0.5, 1.0, 1.5, 0.5]);
        assert_eq!(h.euclidean(), [1.0, 2.0, 3.0]);
    }
}
