//! Finite-difference check of the analytic gradients on a fixed toy model:
//! two unit squares hinged along a shared edge.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::config::{AttentionMode, ModelConfig, Streams};
use super::model::{grad, pretrain_loss};
use super::params::{init_params, Params};
use crate::brep::{BrepModel, Edge, Face};
use crate::decompose::{decompose_model, QuadtreeOptions};
use crate::error::Result;
use crate::geom::{NurbsCurve, NurbsSurface};
use crate::sampling::{sample_entity_points, ShapeTargets};
use crate::tokenize::{tokenize_model, TokenBatch};

pub const FD_STEP: f64 = 1e-5;

/// Two faces, one shared edge and six boundary edges.
pub fn toy_model() -> Result<BrepModel> {
    let p = |x: f64, y: f64, z: f64| [x, y, z];
    let a = NurbsSurface::bilinear(p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0), p(1.0, 1.0, 0.0));
    let b = NurbsSurface::bilinear(p(1.0, 0.0, 0.0), p(1.6, 0.0, 0.8), p(1.0, 1.0, 0.0), p(1.6, 1.0, 0.8));
    let edge = |id, s: [f64; 3], e: [f64; 3], faces: Vec<usize>| Edge {
        id,
        curve: NurbsCurve::line(s, e),
        bounds_faces: faces,
    };
    BrepModel::new(
        vec![Face { id: 0, surface: a }, Face { id: 1, surface: b }],
        vec![
            edge(0, p(1.0, 0.0, 0.0), p(1.0, 1.0, 0.0), vec![0, 1]),
            edge(1, p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), vec![0]),
            edge(2, p(0.0, 1.0, 0.0), p(1.0, 1.0, 0.0), vec![0]),
            edge(3, p(0.0, 0.0, 0.0), p(0.0, 1.0, 0.0), vec![0]),
            edge(4, p(1.0, 0.0, 0.0), p(1.6, 0.0, 0.8), vec![1]),
            edge(5, p(1.0, 1.0, 0.0), p(1.6, 1.0, 0.8), vec![1]),
            edge(6, p(1.6, 0.0, 0.8), p(1.6, 1.0, 0.8), vec![1]),
        ],
        None,
    )
}

pub fn toy_config() -> ModelConfig {
    ModelConfig {
        width: 8,
        tokenizer_layers: 1,
        tokenizer_heads: 2,
        dual_layers: 2,
        dual_heads: 2,
        ffn_expansion: 2,
        points_per_primitive: 2,
        face_cap: 3,
        edge_cap: 2,
        edge_supervision: true,
        attention_mode: AttentionMode::Topology,
        streams: Streams::Dual,
    }
}

pub fn toy_sample(cfg: &ModelConfig) -> Result<(TokenBatch, ShapeTargets)> {
    let model = toy_model()?;
    let prims = decompose_model(&model, QuadtreeOptions::default())?;
    let batch = tokenize_model(&model, &prims, cfg.caps())?;
    let targets = sample_entity_points(&model, &prims, cfg.points_per_primitive, cfg.caps())?;
    Ok((batch, targets))
}

/// Parameters with every entry perturbed so no path is trivially zero.
pub fn toy_params(cfg: &ModelConfig, seed: u64) -> Result<Params> {
    let mut params = init_params(cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let normal = Normal::new(0.0, 0.3).expect("valid normal");
    for (_, t) in params.iter_mut() {
        for x in t.data.iter_mut() {
            *x += normal.sample(&mut rng);
        }
    }
    Ok(params)
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckEntry {
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub entries: Vec<GradcheckEntry>,
}

/// Below this magnitude gradients are compared absolutely: a central
/// difference at `FD_STEP` carries about `eps * loss / FD_STEP ~ 1e-11` of
/// rounding noise, which would dominate a purely relative measure.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// `|a - n| / max(|a|, |n|, REL_ERROR_FLOOR)`.
pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_ERROR_FLOOR)
}

/// Compares analytic and central-difference gradients at `count` random
/// scalar parameters of the toy model.
pub fn gradcheck(seed: u64, count: usize) -> Result<GradcheckReport> {
    let cfg = toy_config();
    let (batch, targets) = toy_sample(&cfg)?;
    let params = toy_params(&cfg, seed)?;
    let (_, grads) = grad(&params, &batch, &targets, &cfg)?;
    let names: Vec<String> = params.names().to_vec();
    let sizes: Vec<usize> = names.iter().map(|n| params.get(n).unwrap().data.len()).collect();
    let total: usize = sizes.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let mut flat = rng.random_range(0..total);
        let mut which = 0;
        while flat >= sizes[which] {
            flat -= sizes[which];
            which += 1;
        }
        let name = &names[which];
        let eval = |delta: f64| -> Result<f64> {
            let mut p = params.clone();
            p.get_mut(name).unwrap().data[flat] += delta;
            Ok(pretrain_loss(&p, &batch, &targets, &cfg)?.total)
        };
        let numeric = (eval(FD_STEP)? - eval(-FD_STEP)?) / (2.0 * FD_STEP);
        let analytic = grads.get(name).unwrap().data[flat];
        entries.push(GradcheckEntry {
            name: name.clone(),
            index: flat,
            analytic,
            numeric,
            rel_error: relative_error(analytic, numeric),
        });
    }
    let max_rel_error = entries.iter().map(|e| e.rel_error).fold(0.0, f64::max);
    Ok(GradcheckReport {
        checked: entries.len(),
        max_rel_error,
        entries,
    })
}
