//! Bernstein, bivariate Bernstein and Cox–de Boor basis functions.

use crate::error::{Error, Result};
use crate::geom::knots::KnotVector;

/// Binomial coefficient as a float; exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Signed-argument binomial, zero outside `0 <= k <= n`.
pub(crate) fn binomial_i(n: i64, k: i64) -> f64 {
    if n < 0 || k < 0 || k > n {
        0.0
    } else {
        binomial(n as usize, k as usize)
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `C(n, i) u^i (1 - u)^(n - i)`.
pub fn bernstein(i: usize, n: usize, u: f64) -> Result<f64> {
    if i > n {
        return Err(Error::arg(format!("bernstein index {i} exceeds degree {n}")));
    }
    Ok(bernstein_unchecked(i, n, u))
}

pub(crate) fn bernstein_unchecked(i: usize, n: usize, u: f64) -> f64 {
    binomial(n, i) * u.powi(i as i32) * (1.0 - u).powi((n - i) as i32)
}

/// All `n + 1` Bernstein values at `u`.
pub fn bernstein_all(n: usize, u: f64) -> Vec<f64> {
    (0..=n).map(|i| bernstein_unchecked(i, n, u)).collect()
}

/// Bivariate Bernstein basis `d!/(i! j! k!) u^i v^j t^k` with `t = 1 - u - v`, `k = d - i - j`.
pub fn bernstein_triangle(i: usize, j: usize, d: usize, u: f64, v: f64) -> Result<f64> {
    if i + j > d {
        return Err(Error::arg(format!("triangle index ({i}, {j}) exceeds degree {d}")));
    }
    Ok(bernstein_triangle_unchecked(i, j, d, u, v))
}

pub(crate) fn bernstein_triangle_unchecked(i: usize, j: usize, d: usize, u: f64, v: f64) -> f64 {
    let k = d - i - j;
    let t = 1.0 - u - v;
    let coeff = factorial(d) / (factorial(i) * factorial(j) * factorial(k));
    coeff * u.powi(i as i32) * v.powi(j as i32) * t.powi(k as i32)
}

/// `N_{i,p}(u)` by the Cox–de Boor recursion, with `0/0 := 0`.
///
/// The right end of the evaluation domain is included in the last
/// non-degenerate span so that clamped curves interpolate their end points.
pub fn bspline_basis(i: usize, p: usize, u: f64, knots: &KnotVector) -> f64 {
    let k = knots.knots();
    if i + p + 1 >= k.len() {
        return 0.0;
    }
    basis_recursive(i, p, u, k, knots.domain().1)
}

fn basis_recursive(i: usize, p: usize, u: f64, k: &[f64], end: f64) -> f64 {
    if p == 0 {
        let inside = k[i] <= u && u < k[i + 1];
        let right_end = u == end && k[i + 1] == end && k[i] < end;
        return if inside || right_end { 1.0 } else { 0.0 };
    }
    let mut value = 0.0;
    let left_den = k[i + p] - k[i];
    if left_den != 0.0 {
        value += (u - k[i]) / left_den * basis_recursive(i, p - 1, u, k, end);
    }
    let right_den = k[i + p + 1] - k[i + 1];
    if right_den != 0.0 {
        value += (k[i + p + 1] - u) / right_den * basis_recursive(i + 1, p - 1, u, k, end);
    }
    value
}

/// The `p + 1` non-vanishing basis values on knot span `span`.
pub(crate) fn basis_funs(span: usize, u: f64, p: usize, k: &[f64]) -> Vec<f64> {
    let mut n = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = u - k[span + 1 - j];
        right[j] = k[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernstein_values() {
        assert_eq!(bernstein(0, 2, 0.0).unwrap(), 1.0);
        assert_eq!(bernstein(1, 2, 0.5).unwrap(), 0.5);
        let sum: f64 = (0..=3).map(|i| bernstein(i, 3, 0.37).unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-14);
        assert!(bernstein(3, 2, 0.5).is_err());
    }

    #[test]
    fn triangle_basis_values() {
        let b = bernstein_triangle(1, 1, 2, 0.5, 0.5).unwrap();
        assert!((b - 0.5).abs() < 1e-15);
        assert!(bernstein_triangle(2, 1, 2, 0.1, 0.1).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial_i(3, -1), 0.0);
        assert_eq!(binomial(12, 6), 924.0);
    }

    #[test]
    fn degree_zero_indicator() {
        let kv = KnotVector::new(vec![0.0, 0.5, 1.0], 0).unwrap();
        assert_eq!(bspline_basis(0, 0, 0.25, &kv), 1.0);
        assert_eq!(bspline_basis(1, 0, 0.25, &kv), 0.0);
        assert_eq!(bspline_basis(1, 0, 0.5, &kv), 1.0);
        assert_eq!(bspline_basis(1, 0, 1.0, &kv), 1.0);
    }

    #[test]
    fn clamped_cubic_matches_bernstein() {
        use rand::{RngExt, SeedableRng};
        let kv = KnotVector::new(vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0], 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let u: f64 = rng.random_range(0.0..1.0);
            for i in 0..=3 {
                let a = bspline_basis(i, 3, u, &kv);
                let b = bernstein(i, 3, u).unwrap();
                assert!((a - b).abs() < 1e-14, "i={i} u={u} {a} {b}");
            }
        }
    }

    #[test]
    fn partition_of_unity_all_families() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let kv = KnotVector::new(
            vec![0.0, 0.0, 0.0, 0.0, 0.2, 0.5, 0.5, 0.9, 1.0, 1.0, 1.0, 1.0],
            3,
        )
        .unwrap();
        for _ in 0..1000 {
            let u: f64 = rng.random_range(0.0..=1.0);
            let s: f64 = (0..=4).map(|i| bernstein(i, 4, u).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-13);
            let s: f64 = (0..kv.num_control_points()).map(|i| bspline_basis(i, 3, u, &kv)).sum();
            assert!((s - 1.0).abs() < 1e-13, "u={u} sum={s}");
            let a: f64 = rng.random_range(0.0..1.0);
            let b: f64 = rng.random_range(0.0..1.0);
            let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            let d = 5;
            let mut s = 0.0;
            for i in 0..=d {
                for j in 0..=d - i {
                    s += bernstein_triangle(i, j, d, a, b).unwrap();
                }
            }
            assert!((s - 1.0).abs() < 1e-13);
        }
    }
}
