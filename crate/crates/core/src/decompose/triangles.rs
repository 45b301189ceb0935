//! Exact conversion of a tensor-product Bézier patch into two triangular
//! Bézier patches of total degree `p + q`.

use crate::bezier::{BezierRectangle, BezierTriangle, TriangleHalf, TriangleSource};
use crate::error::Result;
use crate::geom::basis::{binomial, binomial_i, factorial};
use crate::geom::point::HomogeneousPoint;

/// Coefficient of `P_{a,b}` in `V_{i,j}` for the lower triangle `u + v <= 1`.
pub fn conversion_coefficient(p: usize, q: usize, a: usize, b: usize, i: usize, j: usize) -> f64 {
    let d = p + q;
    if i + j > d {
        return 0.0;
    }
    let combinatorial = binomial(p, a)
        * binomial(q, b)
        * binomial_i((p - a) as i64, j as i64 - b as i64)
        * binomial_i((q - b) as i64, i as i64 - a as i64);
    if combinatorial == 0.0 {
        return 0.0;
    }
    combinatorial * factorial(i) * factorial(j) * factorial(d - i - j) / factorial(d)
}

fn convert(net: &[Vec<HomogeneousPoint>], p: usize, q: usize) -> Vec<HomogeneousPoint> {
    let d = p + q;
    let mut out = Vec::with_capacity((d + 1) * (d + 2) / 2);
    for i in 0..=d {
        for j in 0..=d - i {
            let mut acc = HomogeneousPoint::ZERO;
            // only a <= i, b <= j can contribute
            for a in 0..=p.min(i) {
                for b in 0..=q.min(j) {
                    let c = conversion_coefficient(p, q, a, b, i, j);
                    if c != 0.0 {
                        acc = acc + net[a][b] * c;
                    }
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Splits `rect` along `u + v = 1` into `(lower, upper)` triangles.
///
/// The lower triangle at `(u, v)` equals the rectangle at `(u, v)`; the upper
/// triangle at `(u, v)` equals the rectangle at `(1 - u, 1 - v)`.
pub fn rectangle_to_triangles(rect: &BezierRectangle) -> Result<(BezierTriangle, BezierTriangle)> {
    let (p, q) = rect.degrees();
    let net = rect.control_net();
    let flipped: Vec<Vec<HomogeneousPoint>> = (0..=p)
        .map(|a| (0..=q).map(|b| net[p - a][q - b]).collect())
        .collect();
    let lower = BezierTriangle::new(
        p + q,
        convert(net, p, q),
        TriangleSource {
            entity: rect.entity,
            cell: rect.cell,
            half: TriangleHalf::Lower,
        },
    )?;
    let upper = BezierTriangle::new(
        p + q,
        convert(&flipped, p, q),
        TriangleSource {
            entity: rect.entity,
            cell: rect.cell,
            half: TriangleHalf::Upper,
        },
    )?;
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bezier::CellBounds;

    fn unit_cell() -> CellBounds {
        CellBounds::new(0.0, 1.0, 0.0, 1.0)
    }

    #[test]
    fn bilinear_patch_lower_triangle() {
        let h = HomogeneousPoint::unit;
        let net = vec![vec![h([0.0, 0.0, 0.0]), h([0.0, 1.0, 0.0])], vec![h([1.0, 0.0, 0.0]), h([1.0, 1.0, 1.0])]];
        let rect = BezierRectangle::new(net, unit_cell()).unwrap();
        let (lo, up) = rectangle_to_triangles(&rect).unwrap();
        assert_eq!(lo.degree(), 2);
        for k in 0..200 {
            let u = (k as f64 * 0.618_033_988_75).fract();
            let v = (1.0 - u) * (k as f64 * 0.414_213_562_37).fract();
            let t = rect.eval(u, v).unwrap();
            let l = lo.eval(u, v).unwrap();
            let r = up.eval(u, v).unwrap();
            let tr = rect.eval(1.0 - u, 1.0 - v).unwrap();
            for c in 0..3 {
                assert!((t[c] - l[c]).abs() < 1e-12);
                assert!((tr[c] - r[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_patch_gives_constant_triangles() {
        let c = HomogeneousPoint::from_euclidean([0.3, -1.0, 2.0], 0.7);
        let net = vec![vec![c; 3]; 4];
        let rect = BezierRectangle::new(net, unit_cell()).unwrap();
        let (lo, up) = rectangle_to_triangles(&rect).unwrap();
        for t in [&lo, &up] {
            for h in t.control_points() {
                for (x, y) in h.as_array().iter().zip(c.as_array()) {
                    assert!((x - y).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn corners_are_preserved() {
        let net: Vec<Vec<HomogeneousPoint>> = (0..3)
            .map(|a| (0..4).map(|b| HomogeneousPoint::from_euclidean([a as f64, b as f64, (a * b) as f64], 1.0 + 0.1 * (a + b) as f64)).collect())
            .collect();
        let rect = BezierRectangle::new(net.clone(), unit_cell()).unwrap();
        let (lo, up) = rectangle_to_triangles(&rect).unwrap();
        let d = 5;
        assert_eq!(lo.get(0, 0), net[0][0]);
        assert_eq!(lo.get(d, 0), net[2][0]);
        assert_eq!(lo.get(0, d), net[0][3]);
        assert_eq!(up.get(0, 0), net[2][3]);
        assert_eq!(up.get(d, 0), net[0][3]);
        assert_eq!(up.get(0, d), net[2][0]);
    }
}
