#![allow(dead_code)]

use brep2shape::brep::{generate_solid, BrepModel, SolidKind, SolidParams};
use brep2shape::decompose::{decompose_model, QuadtreeOptions};
use brep2shape::geom::point::{HomogeneousPoint, Point3};
use brep2shape::geom::{NurbsCurve, NurbsSurface};
use brep2shape::net::{init_params, ModelConfig, Params};
use brep2shape::sampling::{sample_entity_points, ShapeTargets};
use brep2shape::tokenize::{tokenize_model, Caps, TokenBatch};
use rand::{Rng, RngExt};

pub fn solid(kind: SolidKind, seed: u64) -> BrepModel {
    generate_solid(kind, &SolidParams::default(), seed).unwrap()
}

pub fn prepare(model: &BrepModel, caps: Caps, m: usize) -> (TokenBatch, ShapeTargets) {
    let prims = decompose_model(model, QuadtreeOptions::default()).unwrap();
    (tokenize_model(model, &prims, caps).unwrap(), sample_entity_points(model, &prims, m, caps).unwrap())
}

/// `n` solids cycling through `kinds`, seeded by index.
pub fn dataset(kinds: &[SolidKind], n: usize, caps: Caps, m: usize) -> Vec<(BrepModel, TokenBatch, ShapeTargets)> {
    (0..n)
        .map(|i| {
            let model = solid(kinds[i % kinds.len()], i as u64);
            let (b, t) = prepare(&model, caps, m);
            (model, b, t)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn small_config() -> ModelConfig {
    ModelConfig {
        width: 16,
        tokenizer_layers: 2,
        tokenizer_heads: 2,
        dual_layers: 2,
        dual_heads: 4,
        ffn_expansion: 2,
        points_per_primitive: 2,
        face_cap: 8,
        edge_cap: 4,
        ..ModelConfig::default()
    }
}

/// Initial parameters with a deterministic offset on every scalar, so that
/// zero-initialized maps (topology projections) are live.
pub fn perturbed(cfg: &ModelConfig, seed: u64) -> Params {
    let mut p = init_params(cfg, seed).unwrap();
    let mut k = 0.0f64;
    for (_, t) in p.iter_mut() {
        for x in t.data.iter_mut() {
            k += 1.0;
            *x += 0.1 * (k * 0.7318 + seed as f64).sin();
        }
    }
    p
}

// Independent evaluation oracles: textbook recursive Cox–de Boor basis and
// direct Bernstein sums, sharing no code with the library evaluators.

pub fn basis(knots: &[f64], p: usize, i: usize, u: f64) -> f64 {
    if p == 0 {
        let end = knots[knots.len() - 1];
        let inside = knots[i] <= u && u < knots[i + 1];
        let at_end = u == end && knots[i] < knots[i + 1] && knots[i + 1] == end;
        return if inside || at_end { 1.0 } else { 0.0 };
    }
    let mut s = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        s += (u - knots[i]) / d1 * basis(knots, p - 1, i, u);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        s += (knots[i + p + 1] - u) / d2 * basis(knots, p - 1, i + 1, u);
    }
    s
}

fn project(acc: [f64; 4]) -> Point3 {
    [acc[0] / acc[3], acc[1] / acc[3], acc[2] / acc[3]]
}

fn add_scaled(acc: &mut [f64; 4], h: &HomogeneousPoint, s: f64) {
    acc[0] += s * h.wx;
    acc[1] += s * h.wy;
    acc[2] += s * h.wz;
    acc[3] += s * h.w;
}

pub fn oracle_curve(c: &NurbsCurve, u: f64) -> Point3 {
    let mut acc = [0.0; 4];
    for (i, h) in c.control_points().iter().enumerate() {
        add_scaled(&mut acc, h, basis(c.knots(), c.degree(), i, u));
    }
    project(acc)
}

pub fn oracle_surface(s: &NurbsSurface, u: f64, v: f64) -> Point3 {
    let (p, q) = s.degrees();
    let (ku, kv) = (s.u_knots().knots(), s.v_knots().knots());
    let mut acc = [0.0; 4];
    for (i, row) in s.control_net().iter().enumerate() {
        let bu = basis(ku, p, i, u);
        if bu == 0.0 {
            continue;
        }
        for (j, h) in row.iter().enumerate() {
            add_scaled(&mut acc, h, bu * basis(kv, q, j, v));
        }
    }
    project(acc)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |b, i| b * (n - i) as f64 / (i + 1) as f64)
}

pub fn bernstein(n: usize, i: usize, t: f64) -> f64 {
    binomial(n, i) * t.powi(i as i32) * (1.0 - t).powi((n - i) as i32)
}

/// Rational tensor-product Bézier patch at `(u, v)`; `net[a][b]`, `a` along u.
pub fn oracle_patch(net: &[Vec<HomogeneousPoint>], u: f64, v: f64) -> Point3 {
    let (p, q) = (net.len() - 1, net[0].len() - 1);
    let mut acc = [0.0; 4];
    for (a, row) in net.iter().enumerate() {
        for (b, h) in row.iter().enumerate() {
            add_scaled(&mut acc, h, bernstein(p, a, u) * bernstein(q, b, v));
        }
    }
    project(acc)
}

pub fn dist(a: Point3, b: Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn random_point<R: Rng>(rng: &mut R) -> HomogeneousPoint {
    let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    HomogeneousPoint::new(p, rng.random_range(0.3..3.0)).unwrap()
}

/// Clamped knots over a random domain with `n` control points; interior
/// knots get random multiplicities up to `p`.
pub fn random_knots<R: Rng>(rng: &mut R, p: usize, n: usize) -> Vec<f64> {
    let lo: f64 = rng.random_range(-2.0..0.0);
    let hi = lo + rng.random_range(0.5..3.0);
    let need = n - p - 1;
    let mut interior = Vec::with_capacity(need);
    while interior.len() < need {
        let u = rng.random_range(lo + 0.02..hi - 0.02);
        let mult = rng.random_range(1..=p).min(need - interior.len());
        interior.extend(std::iter::repeat_n(u, mult));
    }
    interior.sort_by(f64::total_cmp);
    let mut k = vec![lo; p + 1];
    k.extend(interior);
    k.extend(std::iter::repeat_n(hi, p + 1));
    k
}

pub fn random_curve<R: Rng>(rng: &mut R, p: usize) -> NurbsCurve {
    let n = rng.random_range(p + 1..=p + 6);
    let knots = random_knots(rng, p, n);
    NurbsCurve::new(p, knots, (0..n).map(|_| random_point(rng)).collect()).unwrap()
}

pub fn random_surface<R: Rng>(rng: &mut R, p: usize, q: usize) -> NurbsSurface {
    let (nu, nv) = (rng.random_range(p + 1..=p + 4), rng.random_range(q + 1..=q + 4));
    let (ku, kv) = (random_knots(rng, p, nu), random_knots(rng, q, nv));
    let net = (0..nu).map(|_| (0..nv).map(|_| random_point(rng)).collect()).collect();
    NurbsSurface::new((p, q), ku, kv, net).unwrap()
}
