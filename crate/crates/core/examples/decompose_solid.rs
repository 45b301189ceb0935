//! Decomposes a trimmed plate into degree-6 Bézier triangles and degree-3
//! Bézier segments, then checks the result against the source geometry.

use brep2shape::brep::{generate_solid, SolidKind, SolidParams};
use brep2shape::decompose::{decompose_model, max_residual, primitives_to_string, QuadtreeOptions};

fn main() -> brep2shape::Result<()> {
    let params = SolidParams { hole_radius: 0.3, ..SolidParams::default() };
    let model = generate_solid(SolidKind::TrimmedPlate, &params, 0)?;
    for (name, opts) in [("depth 3", QuadtreeOptions { max_depth: 3, ..Default::default() }), ("default", QuadtreeOptions::default())] {
        let prims = decompose_model(&model, opts)?;
        println!(
            "{name:>8}: {} triangles, {} segments, {} unconverged boundary cells",
            prims.num_triangles(),
            prims.num_segments(),
            prims.unconverged_cells
        );
    }
    let prims = decompose_model(&model, QuadtreeOptions::default())?;
    for (f, tris) in prims.faces.iter().enumerate() {
        println!("face {f}: {} triangles of degree {}", tris.len(), tris[0].degree());
    }
    println!("max residual vs. source surfaces/curves: {:.2e}", max_residual(&model, &prims, 8)?);
    println!("primitives file: {} bytes of JSON", primitives_to_string(&prims).len());
    Ok(())
}
