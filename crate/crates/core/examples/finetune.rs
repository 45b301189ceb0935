//! Pre-trains on unlabeled solids, then fine-tunes a classifier (solid kind)
//! and a per-face segmenter (planar vs. curved) under each strategy.

use brep2shape::brep::{generate_dataset, BrepModel, SolidKind};
use brep2shape::decompose::{decompose_model, QuadtreeOptions};
use brep2shape::net::{accuracy, finetune_head, train, FinetuneOptions, Labels, ModelConfig, Sample, Strategy, Task, TrainOptions};
use brep2shape::sampling::sample_entity_points;
use brep2shape::tokenize::tokenize_model;

fn main() -> brep2shape::Result<()> {
    let cfg = ModelConfig::with_width(32);
    let models = generate_dataset(&[SolidKind::Box, SolidKind::Cylinder], 16, 11)?;
    let data: Vec<Sample> = models
        .iter()
        .map(|m| {
            let prims = decompose_model(m, QuadtreeOptions::default())?;
            Ok((tokenize_model(m, &prims, cfg.caps())?, sample_entity_points(m, &prims, cfg.points_per_primitive, cfg.caps())?))
        })
        .collect::<brep2shape::Result<_>>()?;
    let pre = train(&data, &cfg, &TrainOptions { steps: 150, lr: 1e-3, seed: 5, ..TrainOptions::default() }, None)?;

    let batches: Vec<_> = data.into_iter().map(|(b, _)| b).collect();
    let kinds = Labels::PerModel(models.iter().map(|m| m.label().unwrap_or(0)).collect());
    let curved = |m: &BrepModel| m.faces().iter().map(|f| usize::from(!f.surface.is_planar())).collect();
    let faces = Labels::PerFace(models.iter().map(curved).collect());

    for (task, labels) in [(Task::Classify, &kinds), (Task::Segment, &faces)] {
        for strategy in [Strategy::Linear, Strategy::Partial, Strategy::Full] {
            let opts = FinetuneOptions::new(task, strategy, TrainOptions { steps: 100, lr: 1e-4, seed: 1, ..TrainOptions::default() });
            let ft = finetune_head(&pre.params, &cfg, &batches, labels, &opts)?;
            let acc = accuracy(&ft.params, &batches, labels, &cfg, task)?;
            println!("{task:?} {strategy:?}: train accuracy {acc:.3}, final loss {:.4}", ft.trace.last().unwrap().1);
        }
    }
    Ok(())
}
