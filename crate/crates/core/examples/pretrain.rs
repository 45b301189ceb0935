//! Pre-trains a small two-stream transformer to reconstruct sampled surface
//! and curve points, then saves and reloads the checkpoint.

use brep2shape::brep::{generate_dataset, SolidKind};
use brep2shape::decompose::{decompose_model, QuadtreeOptions};
use brep2shape::net::{dataset_loss, init_params, read_checkpoint, train, write_checkpoint, Checkpoint, ModelConfig, Sample, TrainOptions};
use brep2shape::sampling::sample_entity_points;
use brep2shape::tokenize::tokenize_model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ModelConfig::with_width(32);
    let models = generate_dataset(&[SolidKind::Box, SolidKind::Cylinder, SolidKind::LoftedWedge], 12, 1)?;
    let data: Vec<Sample> = models
        .iter()
        .map(|m| {
            let prims = decompose_model(m, QuadtreeOptions::default())?;
            Ok((tokenize_model(m, &prims, cfg.caps())?, sample_entity_points(m, &prims, cfg.points_per_primitive, cfg.caps())?))
        })
        .collect::<brep2shape::Result<_>>()?;

    let opts = TrainOptions { steps: 120, lr: 1e-3, seed: 7, ..TrainOptions::default() };
    let before = dataset_loss(&init_params(&cfg, opts.seed)?, &data, &cfg)?;
    let result = train(&data, &cfg, &opts, None)?;
    let after = dataset_loss(&result.params, &data, &cfg)?;
    for r in result.trace.iter().step_by(20) {
        println!("step {:>4}  model {:>2}  loss {:.5}", r.step, r.model, r.loss.total);
    }
    println!("dataset loss {:.5} -> {:.5} (face {:.5}, edge {:.5})", before.total, after.total, after.face, after.edge);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("pretrained.b2c");
    let ck = Checkpoint { config: cfg, seed: opts.seed, task: None, params: result.params };
    write_checkpoint(&ck, &path)?;
    assert_eq!(read_checkpoint(&path)?, ck);
    println!("checkpoint: {} parameters, {} bytes", ck.params.num_scalars(), std::fs::metadata(&path)?.len());
    Ok(())
}
