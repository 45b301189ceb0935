use crate::error::{Error, Result};
use crate::geom::curve::NurbsCurve;
use crate::geom::point::distance;

/// Absolute closure tolerance in parameter space.
pub const CLOSURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoopOrientation {
    /// Counter-clockwise outer boundary.
    Outer,
    /// Clockwise hole boundary.
    Inner,
}

impl LoopOrientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            LoopOrientation::Outer => "outer",
            LoopOrientation::Inner => "inner",
        }
    }
}

/// Closed chain of parameter-space curves bounding a face region.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimLoop {
    pcurves: Vec<NurbsCurve>,
    orientation: LoopOrientation,
}

impl TrimLoop {
    /// Validates closure and normalizes the winding to match `orientation`.
    pub fn new(pcurves: Vec<NurbsCurve>, orientation: LoopOrientation) -> Result<Self> {
        if pcurves.is_empty() {
            return Err(Error::Topology("trim loop has no curves".into()));
        }
        for (i, c) in pcurves.iter().enumerate() {
            if c.control_points().iter().any(|h| h.euclidean()[2].abs() > CLOSURE_TOLERANCE) {
                return Err(Error::Topology(format!("trim pcurve {i} leaves the (u, v) plane")));
            }
        }
        for i in 0..pcurves.len() {
            let cur = &pcurves[i];
            let next = &pcurves[(i + 1) % pcurves.len()];
            let end = cur.eval(cur.domain().1)?;
            let start = next.eval(next.domain().0)?;
            let gap = distance(end, start);
            if gap > CLOSURE_TOLERANCE {
                return Err(Error::Topology(format!(
                    "trim loop is open: gap {gap:e} after pcurve {i}"
                )));
            }
        }
        let mut lp = Self { pcurves, orientation };
        let area = lp.signed_area()?;
        let want_ccw = orientation == LoopOrientation::Outer;
        if (area > 0.0) != want_ccw {
            lp.pcurves = lp.pcurves.iter().rev().map(NurbsCurve::reversed).collect();
        }
        Ok(lp)
    }

    pub fn pcurves(&self) -> &[NurbsCurve] {
        &self.pcurves
    }

    pub fn orientation(&self) -> LoopOrientation {
        self.orientation
    }

    /// Shoelace area of a dense sampling; positive for counter-clockwise loops.
    pub fn signed_area(&self) -> Result<f64> {
        const SAMPLES: usize = 64;
        let mut pts = Vec::with_capacity(self.pcurves.len() * SAMPLES);
        for c in &self.pcurves {
            let (a, b) = c.domain();
            for k in 0..SAMPLES {
                pts.push(c.eval(a + (b - a) * k as f64 / SAMPLES as f64)?);
            }
        }
        let mut area = 0.0;
        for i in 0..pts.len() {
            let p = pts[i];
            let q = pts[(i + 1) % pts.len()];
            area += p[0] * q[1] - q[0] * p[1];
        }
        Ok(0.5 * area)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(ccw: bool) -> Vec<NurbsCurve> {
        let mut c = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        if !ccw {
            c.reverse();
        }
        (0..4).map(|i| NurbsCurve::line(c[i], c[(i + 1) % 4])).collect()
    }

    #[test]
    fn normalizes_winding() {
        let outer = TrimLoop::new(square(false), LoopOrientation::Outer).unwrap();
        assert!(outer.signed_area().unwrap() > 0.0);
        let inner = TrimLoop::new(square(true), LoopOrientation::Inner).unwrap();
        assert!((inner.signed_area().unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_loop_is_topology_error() {
        let mut curves = square(true);
        curves.pop();
        assert!(matches!(TrimLoop::new(curves, LoopOrientation::Outer), Err(Error::Topology(_))));
    }

    #[test]
    fn circle_loop_is_closed() {
        let c = NurbsCurve::circle([0.5, 0.5, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.25).unwrap();
        let lp = TrimLoop::new(vec![c], LoopOrientation::Inner).unwrap();
        let a = lp.signed_area().unwrap();
        // 64-gon inscribed area, clockwise
        assert!(a < 0.0 && (a.abs() - std::f64::consts::PI * 0.0625).abs() < 1e-3);
    }
}
