mod common;

use brep2shape::brep::{build_edge_graph, generate_dataset, build_face_graph, BrepModel, EdgeGraph, SolidKind};
use brep2shape::decompose::{
    curve_to_bezier_segments, decompose_model, elevate_segment_degree, insert_knot, quadtree_decompose, rectangle_to_triangles,
    surface_to_bezier_rectangles, QuadtreeOptions,
};
use brep2shape::geom::point::{HomogeneousPoint, Point3};
use brep2shape::geom::{bernstein, bernstein_triangle, bspline_basis, KnotVector, NurbsCurve};
use brep2shape::net::{forward, init_params};
use brep2shape::sampling::{curve_params, decode_targets, encode_targets, sample_entity_points, triangle_params};
use brep2shape::tokenize::{decode_batch, encode_batch, select_segments, select_triangles, tokenize_model, Caps};
use common::*;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn kind() -> impl Strategy<Value = SolidKind> {
    prop::sample::select(SolidKind::ALL.to_vec())
}

/// A solid of kind `k` with dimensions drawn from `seed`.
fn random_solid(k: SolidKind, seed: u64) -> BrepModel {
    generate_dataset(&[k], 1, seed).unwrap().remove(0)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// A random permutation of `0..n` from `seed`.
fn shuffle(n: usize, seed: u64) -> Vec<usize> {
    let mut r = rng(seed);
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, r.random_range(0..=i));
    }
    p
}

fn inverse(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (new, &old) in p.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

fn pair(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bases_partition_unity(seed in any::<u64>(), p in 1usize..=5, t in 0.0f64..=1.0, s in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let n = r.random_range(p + 1..=p + 6);
        let kv = KnotVector::new(random_knots(&mut r, p, n), p).unwrap();
        let (lo, hi) = kv.domain();
        let u = lerp(lo, hi, t);
        let sum: f64 = (0..n).map(|i| bspline_basis(i, p, u, &kv)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-13, "B-spline sum {sum}");

        let sum: f64 = (0..=p).map(|i| bernstein(i, p, t).unwrap()).sum();
        prop_assert!((sum - 1.0).abs() < 1e-13, "Bernstein sum {sum}");

        let (u, v) = (t * (1.0 - s), s * (1.0 - t));
        let mut sum = 0.0;
        for i in 0..=p {
            for j in 0..=p - i {
                sum += bernstein_triangle(i, j, p, u, v).unwrap();
            }
        }
        prop_assert!((sum - 1.0).abs() < 1e-13, "triangle sum {sum}");
    }

    #[test]
    fn unit_weights_give_the_plain_bspline(seed in any::<u64>(), p in 1usize..=5, t in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let c = random_curve(&mut r, p);
        let pts: Vec<HomogeneousPoint> = c.control_points().iter().map(|h| HomogeneousPoint::unit(h.euclidean())).collect();
        let plain = NurbsCurve::new(p, c.knots().to_vec(), pts.clone()).unwrap();
        let (lo, hi) = plain.domain();
        let u = lerp(lo, hi, t);
        let mut want = [0.0; 3];
        for (i, h) in pts.iter().enumerate() {
            let b = basis(plain.knots(), p, i, u);
            (0..3).for_each(|d| want[d] += b * h.euclidean()[d]);
        }
        prop_assert!(dist(plain.eval(u).unwrap(), want) < 1e-13);
        prop_assert_eq!(plain.eval(lo).unwrap(), pts[0].euclidean());
        prop_assert_eq!(plain.eval(hi).unwrap(), pts[pts.len() - 1].euclidean());
    }

    #[test]
    fn evaluation_commutes_with_affine_maps(seed in any::<u64>(), p in 1usize..=5, t in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let c = random_curve(&mut r, p);
        let m: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| r.random_range(-2.0..2.0)));
        let off: Point3 = std::array::from_fn(|_| r.random_range(-5.0..5.0));
        let f = |x: Point3| -> Point3 { std::array::from_fn(|i| m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2] + off[i]) };
        let (lo, hi) = c.domain();
        let u = lerp(lo, hi, t);
        prop_assert!(dist(c.map_points(f).eval(u).unwrap(), f(c.eval(u).unwrap())) < 1e-10);
    }

    #[test]
    fn bezier_extraction_preserves_curves(seed in any::<u64>(), p in 1usize..=5) {
        let mut r = rng(seed);
        let c = random_curve(&mut r, p);
        let segs = curve_to_bezier_segments(&c).unwrap();
        prop_assert_eq!(segs.len(), c.knot_vector().distinct_interior().len() + 1);
        for _ in 0..50 {
            let seg = &segs[r.random_range(0..segs.len())];
            let s = r.random_range(0.0..=1.0);
            prop_assert!(dist(seg.eval(s).unwrap(), oracle_curve(&c, seg.source.map(s))) < 1e-11);
            let up = elevate_segment_degree(seg, p + 2).unwrap();
            prop_assert!(dist(up.eval(s).unwrap(), seg.eval(s).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn knot_insertion_preserves_curves(seed in any::<u64>(), p in 1usize..=5, at in 0.01f64..0.99) {
        let mut r = rng(seed);
        let c = random_curve(&mut r, p);
        let (lo, hi) = c.domain();
        let refined = insert_knot(&c, lerp(lo, hi, at)).unwrap();
        prop_assert_eq!(refined.control_points().len(), c.control_points().len() + 1);
        for _ in 0..50 {
            let u = lerp(lo, hi, r.random_range(0.0..=1.0));
            prop_assert!(dist(refined.eval(u).unwrap(), oracle_curve(&c, u)) < 1e-11);
        }
    }

    #[test]
    fn triangles_reproduce_their_surface(seed in any::<u64>(), p in 1usize..=3, q in 1usize..=3) {
        let mut r = rng(seed);
        let s = random_surface(&mut r, p, q);
        let rects: Vec<_> = surface_to_bezier_rectangles(&s).unwrap().into_iter().flatten().collect();
        for _ in 0..20 {
            let rect = &rects[r.random_range(0..rects.len())];
            let (a, b) = (r.random_range(0.0..=1.0), r.random_range(0.0..=1.0));
            let (u, v) = rect.cell.map(a, b);
            prop_assert!(dist(rect.eval(a, b).unwrap(), oracle_surface(&s, u, v)) < 1e-11);
            let (lower, upper) = rectangle_to_triangles(rect).unwrap();
            let (x, y) = (a * (1.0 - b), b * (1.0 - a));
            for tri in [lower, upper] {
                let (u, v) = tri.source.surface_params(x, y);
                prop_assert!(dist(tri.eval(x, y).unwrap(), oracle_surface(&s, u, v)) < 1e-11);
                let up = tri.elevate(6).unwrap();
                prop_assert!(dist(up.eval(x, y).unwrap(), tri.eval(x, y).unwrap()) < 1e-12);
            }
        }
    }
}

/// Leaves tile the root square: dyadic areas sum to one and no two overlap.
fn assert_partition(model: &BrepModel, depth: u32) {
    let opts = QuadtreeOptions { max_depth: depth, ..QuadtreeOptions::default() };
    for face in model.faces() {
        let d = quadtree_decompose(&face.surface, opts).unwrap();
        let finest = d.cells.iter().map(|c| c.depth).max().unwrap();
        let side = 1u64 << finest;
        let mut covered = vec![false; (side * side) as usize];
        for c in &d.cells {
            let k = 1u64 << (finest - c.depth);
            for x in c.ix * k..(c.ix + 1) * k {
                for y in c.iy * k..(c.iy + 1) * k {
                    let i = (y * side + x) as usize;
                    assert!(!covered[i], "overlapping leaves");
                    covered[i] = true;
                }
            }
        }
        assert!(covered.iter().all(|&c| c), "leaves leave a gap");
    }
}

fn relabeled_face_graph(model: &BrepModel, fp: &[usize], ep: &[usize]) -> bool {
    let (fi, ei) = (inverse(fp), inverse(ep));
    let g = build_face_graph(model).unwrap();
    let h = build_face_graph(&model.permuted(fp, ep).unwrap()).unwrap();
    g.adjacency.len() == h.adjacency.len()
        && g.adjacency.iter().all(|(&(a, b), edges)| {
            let mut want: Vec<usize> = edges.iter().map(|e| ei[*e]).collect();
            want.sort_unstable();
            h.adjacency.get(&pair(fi[a], fi[b])) == Some(&want)
        })
}

fn relabeled_edge_graph(model: &BrepModel, fp: &[usize], ep: &[usize]) -> bool {
    let (fi, ei) = (inverse(fp), inverse(ep));
    let g = build_edge_graph(model).unwrap();
    let h = build_edge_graph(&model.permuted(fp, ep).unwrap()).unwrap();
    g.adjacency.len() == h.adjacency.len()
        && g.adjacency.iter().all(|(&(a, b), faces)| {
            let mut want: Vec<usize> = faces.iter().map(|f| fi[*f]).collect();
            want.sort_unstable();
            h.adjacency.get(&pair(ei[a], ei[b])) == Some(&want)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadtree_leaves_partition_the_domain(k in kind(), seed in 0u64..1000, depth in 2u32..=8) {
        assert_partition(&random_solid(k, seed), depth);
    }

    #[test]
    fn graphs_follow_relabeling(k in kind(), seed in 0u64..1000, ps in any::<u64>()) {
        let model = random_solid(k, seed);
        // The plate is an open trimmed sheet; the others are closed solids.
        prop_assert_eq!(model.is_closed(), k != SolidKind::TrimmedPlate);
        let fp = shuffle(model.num_faces(), ps);
        let ep = shuffle(model.num_edges(), ps ^ 0x5bd1);
        prop_assert!(relabeled_face_graph(&model, &fp, &ep));
        prop_assert!(relabeled_edge_graph(&model, &fp, &ep));
        let fg = build_face_graph(&model).unwrap();
        prop_assert_eq!(EdgeGraph::from_face_graph(&fg, &model).unwrap(), build_edge_graph(&model).unwrap());
    }

    #[test]
    fn samples_lie_on_their_entities(k in kind(), seed in 0u64..1000, m in 1usize..=4) {
        let model = random_solid(k, seed);
        let prims = decompose_model(&model, QuadtreeOptions::default()).unwrap();
        let caps = Caps { face: 6, edge: 3 };
        let t = sample_entity_points(&model, &prims, m, caps).unwrap();
        prop_assert_eq!(&t, &sample_entity_points(&model, &prims, m, caps).unwrap());
        for (i, &mask) in t.face_mask.iter().enumerate() {
            let p = t.face_point(i / t.face_slots, i % t.face_slots);
            prop_assert_eq!(mask == 0, p == [0.0; 3]);
        }
        for (i, &mask) in t.edge_mask.iter().enumerate() {
            let p = t.edge_point(i / t.edge_slots, i % t.edge_slots);
            prop_assert_eq!(mask == 0, p == [0.0; 3]);
        }
        // Every sample re-evaluates onto the source NURBS entity, not just its primitive.
        for (f, tris) in prims.faces.iter().enumerate() {
            for (slot, &ti) in select_triangles(tris, caps.face).iter().enumerate() {
                for (j, &(u, v)) in triangle_params(m).iter().enumerate() {
                    let (su, sv) = tris[ti].source.surface_params(u, v);
                    let want = t.normalization.apply(model.faces()[f].surface.eval(su, sv).unwrap());
                    prop_assert!(dist(t.face_point(f, slot * m + j), want) < 1e-9);
                }
            }
        }
        for (e, segs) in prims.edges.iter().enumerate() {
            for (slot, &si) in select_segments(segs, caps.edge).iter().enumerate() {
                for (j, &s) in curve_params(m).iter().enumerate() {
                    let want = t.normalization.apply(model.edges()[e].curve.eval(segs[si].source.map(s)).unwrap());
                    prop_assert!(dist(t.edge_point(e, slot * m + j), want) < 1e-9);
                }
            }
        }
        prop_assert_eq!(decode_targets(&encode_targets(&t)).unwrap(), t);
    }

    #[test]
    fn tokens_round_trip_to_primitives(k in kind(), seed in 0u64..1000) {
        let model = random_solid(k, seed);
        let prims = decompose_model(&model, QuadtreeOptions::default()).unwrap();
        let batch = tokenize_model(&model, &prims, Caps::default()).unwrap();
        let norm = &batch.normalizations[0];
        for (f, tris) in prims.faces.iter().enumerate() {
            let kept = select_triangles(tris, batch.caps.face);
            for (slot, &ti) in kept.iter().enumerate() {
                let tok = batch.face_primitive(f, slot).unwrap();
                for (u, v) in [(0.2, 0.3), (0.0, 1.0), (0.5, 0.5), (1.0 / 3.0, 1.0 / 3.0)] {
                    prop_assert!(dist(tok.eval(u, v).unwrap(), norm.apply(tris[ti].eval(u, v).unwrap())) < 1e-12);
                }
            }
        }
        for (e, segs) in prims.edges.iter().enumerate() {
            let kept = select_segments(segs, batch.caps.edge);
            for (slot, &si) in kept.iter().enumerate() {
                let tok = batch.edge_primitive(e, slot).unwrap();
                for s in [0.0, 0.25, 0.7, 1.0] {
                    prop_assert!(dist(tok.eval(s).unwrap(), norm.apply(segs[si].eval(s).unwrap())) < 1e-12);
                }
            }
        }
        prop_assert_eq!(decode_batch(&encode_batch(&batch)).unwrap(), batch);
    }

    #[test]
    fn raising_caps_only_appends_masked_slots(k in kind(), seed in 0u64..1000, face in 1usize..6, edge in 1usize..4, extra in 1usize..4) {
        let model = random_solid(k, seed);
        let prims = decompose_model(&model, QuadtreeOptions::default()).unwrap();
        let small = Caps { face, edge };
        let big = Caps { face: face + extra, edge: edge + extra };
        let (a, b) = (tokenize_model(&model, &prims, small).unwrap(), tokenize_model(&model, &prims, big).unwrap());
        for f in 0..a.num_faces {
            for s in 0..face {
                prop_assert_eq!(a.face_slot(f, s), b.face_slot(f, s));
                prop_assert_eq!(a.face_mask[f * face + s], b.face_mask[f * b.caps.face + s]);
            }
            prop_assert!(b.face_valid(f) >= a.face_valid(f));
            if a.face_valid(f) < face {
                prop_assert_eq!(b.face_valid(f), a.face_valid(f));
            }
        }
        for e in 0..a.num_edges {
            for s in 0..edge {
                prop_assert_eq!(a.edge_slot(e, s), b.edge_slot(e, s));
            }
            prop_assert!(b.edge_valid(e) >= a.edge_valid(e));
        }
        prop_assert_eq!(&a.face_adjacency, &b.face_adjacency);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn predictions_follow_relabeling_and_ignore_padding(k in kind(), seed in 0u64..1000, ps in any::<u64>()) {
        let cfg = small_config();
        let params = init_params(&cfg, seed).unwrap();
        let model = random_solid(k, seed);
        let fp = shuffle(model.num_faces(), ps);
        let ep = shuffle(model.num_edges(), ps ^ 0x77);
        let (batch, _) = prepare(&model, cfg.caps(), cfg.points_per_primitive);
        let (pbatch, _) = prepare(&model.permuted(&fp, &ep).unwrap(), cfg.caps(), cfg.points_per_primitive);
        let out = forward(&params, &batch, &cfg).unwrap();
        let pout = forward(&params, &pbatch, &cfg).unwrap();
        let cols = out.face_points.cols;
        for (new, &old) in fp.iter().enumerate() {
            let diff = max_abs_diff(&out.face_points.data[old * cols..(old + 1) * cols], &pout.face_points.data[new * cols..(new + 1) * cols]);
            prop_assert!(diff < 1e-10, "face {old} -> {new}: {diff}");
        }

        // Wider caps add only padding when nothing was truncated.
        let untruncated = (0..batch.num_faces).all(|f| batch.face_valid(f) < cfg.face_cap)
            && (0..batch.num_edges).all(|e| batch.edge_valid(e) < cfg.edge_cap);
        prop_assume!(untruncated);
        let wide = Caps { face: cfg.face_cap + 3, edge: cfg.edge_cap + 2 };
        let (wbatch, _) = prepare(&model, wide, cfg.points_per_primitive);
        let wout = forward(&params, &wbatch, &cfg).unwrap();
        prop_assert!(max_abs_diff(&out.face_points.data, &wout.face_points.data) < 1e-10);
    }
}
