use crate::error::{Error, Result};

/// Relative tolerance for deciding that two knot values coincide.
pub const KNOT_TOLERANCE: f64 = 1e-10;

/// Clamped, non-decreasing knot vector of a degree-`p` B-spline.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        let p = degree;
        if knots.len() < 2 * (p + 1) {
            return Err(Error::arg(format!(
                "degree {p} needs at least {} knots, got {}",
                2 * (p + 1),
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::arg("non-finite knot value"));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::arg("knot vector must be non-decreasing"));
        }
        let m = knots.len() - 1;
        let (start, end) = (knots[p], knots[m - p]);
        if !(end > start) {
            return Err(Error::arg("knot vector has an empty evaluation domain"));
        }
        let tol = KNOT_TOLERANCE * (end - start);
        // coincident-within-tolerance knots are snapped to one value
        let mut knots = knots;
        let mut rep = knots[0];
        for k in knots.iter_mut() {
            if *k - rep <= tol {
                *k = rep;
            } else {
                rep = *k;
            }
        }
        let (start, end) = (knots[p], knots[m - p]);
        let kv = Self { knots, degree };
        if kv.multiplicity(start) != p + 1 || kv.multiplicity(end) != p + 1 {
            return Err(Error::arg(format!(
                "knot vector must be clamped: end multiplicities must be exactly {}",
                p + 1
            )));
        }
        if (kv.knots[0] - start).abs() > tol || (kv.knots[m] - end).abs() > tol {
            return Err(Error::arg("knot vector must be clamped"));
        }
        for (u, s) in kv.distinct_interior() {
            if s > p.max(1) {
                return Err(Error::Multiplicity { knot: u, degree: p });
            }
        }
        Ok(kv)
    }

    /// Bézier knots `[0; p+1] ++ [1; p+1]`.
    pub fn bezier(degree: usize) -> Self {
        let mut knots = vec![0.0; degree + 1];
        knots.extend(std::iter::repeat(1.0).take(degree + 1));
        Self { knots, degree }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn num_control_points(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        let m = self.knots.len() - 1;
        (self.knots[self.degree], self.knots[m - self.degree])
    }

    pub fn tolerance(&self) -> f64 {
        let (a, b) = self.domain();
        KNOT_TOLERANCE * (b - a)
    }

    pub fn multiplicity(&self, u: f64) -> usize {
        let tol = self.tolerance();
        self.knots.iter().filter(|k| (**k - u).abs() <= tol).count()
    }

    /// Distinct knot values strictly inside the domain with their multiplicities.
    pub fn distinct_interior(&self) -> Vec<(f64, usize)> {
        let (a, b) = self.domain();
        let tol = self.tolerance();
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &k in &self.knots {
            if k - a <= tol || b - k <= tol {
                continue;
            }
            match out.last_mut() {
                Some((v, s)) if (k - *v).abs() <= tol => *s += 1,
                _ => out.push((k, 1)),
            }
        }
        out
    }

    /// Span index `k` with `knots[k] <= u < knots[k+1]`; the right domain end
    /// maps to the last non-degenerate span.
    pub fn span(&self, u: f64) -> usize {
        let p = self.degree;
        let n = self.num_control_points() - 1;
        if u >= self.knots[n + 1] {
            return n;
        }
        if u <= self.knots[p] {
            let mut k = p;
            while self.knots[k + 1] <= u {
                k += 1;
            }
            return k;
        }
        let (mut lo, mut hi) = (p, n + 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if u < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    pub(crate) fn check_domain(&self, u: f64) -> Result<()> {
        let (a, b) = self.domain();
        if u.is_nan() || u < a || u > b {
            return Err(Error::Domain {
                value: u,
                start: a,
                end: b,
            });
        }
        Ok(())
    }

    pub(crate) fn from_raw(knots: Vec<f64>, degree: usize) -> Self {
        Self { knots, degree }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unclamped_and_decreasing() {
        assert!(KnotVector::new(vec![0.0, 1.0, 2.0, 3.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 0.5, 0.4, 1.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 0.0, 1.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1).is_ok());
    }

    #[test]
    fn rejects_excess_interior_multiplicity() {
        let r = KnotVector::new(vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0], 1);
        assert!(matches!(r, Err(Error::Multiplicity { .. })));
    }

    #[test]
    fn interior_knots_and_spans() {
        let kv = KnotVector::new(vec![0.0, 0.0, 0.0, 0.25, 0.5, 0.5, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(kv.distinct_interior(), vec![(0.25, 1), (0.5, 2)]);
        assert_eq!(kv.span(0.0), 2);
        assert_eq!(kv.span(0.3), 3);
        assert_eq!(kv.span(0.5), 5);
        assert_eq!(kv.span(1.0), 5);
        assert_eq!(kv.multiplicity(0.5 + 1e-12), 2);
    }
}
