//! Turns a cylinder into model input (token batch) and pre-training targets
//! (points sampled on every primitive), and round-trips both binary formats.

use brep2shape::brep::{generate_solid, SolidKind, SolidParams};
use brep2shape::decompose::{decompose_model, QuadtreeOptions};
use brep2shape::sampling::{decode_targets, encode_targets, sample_entity_points};
use brep2shape::tokenize::{decode_batch, encode_batch, tokenize_model, Caps};

fn main() -> brep2shape::Result<()> {
    let model = generate_solid(SolidKind::Cylinder, &SolidParams::default(), 0)?;
    let prims = decompose_model(&model, QuadtreeOptions::default())?;
    let caps = Caps::default();
    let batch = tokenize_model(&model, &prims, caps)?;
    let targets = sample_entity_points(&model, &prims, 3, caps)?;

    println!("{} faces x {} slots, {} edges x {} slots", batch.num_faces, caps.face, batch.num_edges, caps.edge);
    for f in 0..batch.num_faces {
        println!("face {f}: {} real triangles", batch.face_valid(f));
    }
    println!("face adjacency (a, b, shared edge): {:?}", batch.face_adjacency);
    let n = &batch.normalizations[0];
    println!("normalization: center {:?}, scale {:.4}", n.center, n.scale);
    println!("first face sample (normalized): {:?}", targets.face_point(0, 0));

    let (tb, sb) = (encode_batch(&batch), encode_targets(&targets));
    assert_eq!(decode_batch(&tb)?, batch);
    assert_eq!(decode_targets(&sb)?, targets);
    println!("token file {} bytes, target file {} bytes, both round-trip", tb.len(), sb.len());
    Ok(())
}
