//! Boundary approximation error of piecewise-linear trim discretizations.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geom::point::{cross, norm, sub, Point3};
use crate::geom::NurbsCurve;

/// Quadrature nodes used per integration piece.
pub const GAUSS_NODES: usize = 16;

/// Relative central-difference step for first derivatives.
const FD_STEP: f64 = 1e-6;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_n'(x)
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gauss16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_NODES))
}

/// `sum w_k f(x_k)` over `[a, b]`, split at the curve's knots inside the interval.
fn integrate(curve: &NurbsCurve, a: f64, b: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let mut cuts = vec![a];
    cuts.extend(curve.knot_vector().distinct_interior().into_iter().map(|(k, _)| k).filter(|k| *k > a && *k < b));
    cuts.push(b);
    let (nodes, weights) = gauss16();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, wk) in nodes.iter().zip(weights) {
            total += wk * half * f(mid + half * x)?;
        }
    }
    Ok(total)
}

/// Central-difference derivative with step `FD_STEP * local_span`.
pub fn derivative(curve: &NurbsCurve, t: f64, local_span: f64) -> Result<Point3> {
    let (a, b) = curve.domain();
    let h = FD_STEP * local_span;
    let lo = (t - h).max(a);
    let hi = (t + h).min(b);
    let d = sub(curve.eval(hi)?, curve.eval(lo)?);
    let s = 1.0 / (hi - lo);
    Ok([d[0] * s, d[1] * s, d[2] * s])
}

/// Curvature `|C' x C''| / |C'|^3` by finite differences.
pub fn curvature(curve: &NurbsCurve, t: f64, local_span: f64) -> Result<f64> {
    let (a, b) = curve.domain();
    let h = 1e-3 * local_span;
    let t = t.clamp(a + h, b - h);
    let (p0, p1, p2) = (curve.eval(t - h)?, curve.eval(t)?, curve.eval(t + h)?);
    let d1: Point3 = std::array::from_fn(|k| (p2[k] - p0[k]) / (2.0 * h));
    let d2: Point3 = std::array::from_fn(|k| (p2[k] - 2.0 * p1[k] + p0[k]) / (h * h));
    let speed = norm(d1);
    if speed == 0.0 {
        return Ok(0.0);
    }
    Ok(norm(cross(d1, d2)) / speed.powi(3))
}

/// Knot span `[k_i, k_{i+1})` containing `t`.
fn knot_span(curve: &NurbsCurve, t: f64) -> (f64, f64) {
    let kv = curve.knot_vector();
    let i = kv.span(t);
    (kv.knots()[i], kv.knots()[i + 1])
}

/// Arc length of `curve` over `[t0, t1]`. The difference step scales with
/// the knot span, not the interval, and stays inside the span, so short
/// pieces keep full relative accuracy.
pub fn arc_length(curve: &NurbsCurve, t0: f64, t1: f64) -> Result<f64> {
    integrate(curve, t0, t1, |t| {
        let (lo, hi) = knot_span(curve, t);
        let h = FD_STEP * (hi - lo);
        let (a, b) = ((t - h).max(lo), (t + h).min(hi));
        let d = sub(curve.eval(b)?, curve.eval(a)?);
        Ok(norm(d) / (b - a))
    })
}

/// Chord length over arc length of the piece `[t0, t1]`, in `(0, 1]`.
pub fn chord_to_arc(curve: &NurbsCurve, t0: f64, t1: f64) -> Result<f64> {
    let chord = norm(sub(curve.eval(t1)?, curve.eval(t0)?));
    let arc = arc_length(curve, t0, t1)?;
    if arc <= 0.0 {
        return Ok(1.0);
    }
    Ok((chord / arc).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryErrorReport {
    /// Largest parametric step `h`.
    pub max_step: f64,
    /// Total arc length `L`.
    pub arc_length: f64,
    /// `integral ||C - L||^2 dt`, kept so reports can be merged.
    pub squared_error: f64,
    pub rmse: f64,
    pub chord_to_arc: Vec<f64>,
    pub curvature: Vec<f64>,
}

impl BoundaryErrorReport {
    /// Combines reports of several curves into one global error.
    pub fn merge(reports: &[BoundaryErrorReport]) -> BoundaryErrorReport {
        let mut out = BoundaryErrorReport::default();
        for r in reports {
            out.max_step = out.max_step.max(r.max_step);
            out.arc_length += r.arc_length;
            out.squared_error += r.squared_error;
            out.chord_to_arc.extend_from_slice(&r.chord_to_arc);
            out.curvature.extend_from_slice(&r.curvature);
        }
        out.rmse = if out.arc_length > 0.0 {
            (out.squared_error / out.arc_length).sqrt()
        } else {
            0.0
        };
        out
    }
}

/// RMSE of the piecewise-linear interpolant through `breakpoints`, normalized
/// by arc length.
pub fn boundary_rmse(pcurve: &NurbsCurve, breakpoints: &[f64]) -> Result<BoundaryErrorReport> {
    if breakpoints.len() < 2 {
        return Err(Error::arg("boundary_rmse needs at least 2 breakpoints"));
    }
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("breakpoints must be strictly increasing"));
    }
    let (a, b) = pcurve.domain();
    let tol = pcurve.knot_vector().tolerance();
    if (breakpoints[0] - a).abs() > tol || (breakpoints[breakpoints.len() - 1] - b).abs() > tol {
        return Err(Error::arg("breakpoints must span the curve domain"));
    }
    let mut report = BoundaryErrorReport::default();
    for w in breakpoints.windows(2) {
        let (t0, t1) = (w[0].max(a), w[1].min(b));
        let h = t1 - t0;
        let c0 = pcurve.eval(t0)?;
        let c1 = pcurve.eval(t1)?;
        let sq = integrate(pcurve, t0, t1, |t| {
            let s = (t - t0) / h;
            let c = pcurve.eval(t)?;
            let lin: Point3 = std::array::from_fn(|k| c0[k] + s * (c1[k] - c0[k]));
            let d = sub(c, lin);
            Ok(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        })?;
        let arc = arc_length(pcurve, t0, t1)?;
        let chord = norm(sub(c1, c0));
        report.max_step = report.max_step.max(h);
        report.arc_length += arc;
        report.squared_error += sq;
        report.chord_to_arc.push(if arc > 0.0 { (chord / arc).min(1.0) } else { 1.0 });
        report.curvature.push(curvature(pcurve, 0.5 * (t0 + t1), h)?);
    }
    report.rmse = if report.arc_length > 0.0 {
        (report.squared_error / report.arc_length).sqrt()
    } else {
        0.0
    };
    Ok(report)
}

/// `n + 1` equally spaced breakpoints over the curve domain.
pub fn uniform_breakpoints(curve: &NurbsCurve, n: usize) -> Vec<f64> {
    let (a, b) = curve.domain();
    (0..=n)
        .map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 })
        .collect()
}

/// Boundary RMSE across dyadic refinements of a uniform subdivision.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub h: Vec<f64>,
    pub rmse: Vec<f64>,
    pub slope: f64,
}

/// `levels` refinements starting from `base` pieces, doubling each time.
pub fn convergence_study(curve: &NurbsCurve, base: usize, levels: usize) -> Result<ConvergenceStudy> {
    if base == 0 || levels < 2 {
        return Err(Error::arg(format!("need base >= 1 and at least 2 levels, got {base} and {levels}")));
    }
    let (mut h, mut rmse) = (Vec::with_capacity(levels), Vec::with_capacity(levels));
    for k in 0..levels {
        let r = boundary_rmse(curve, &uniform_breakpoints(curve, base << k))?;
        h.push(r.max_step);
        rmse.push(r.rmse);
    }
    let slope = loglog_slope(&h, &rmse);
    Ok(ConvergenceStudy { h, rmse, slope })
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
