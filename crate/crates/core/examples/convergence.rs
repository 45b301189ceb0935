//! Boundary error of a piecewise-linear trim approximation falls as h².

use brep2shape::decompose::convergence_study;
use brep2shape::geom::NurbsCurve;

fn main() -> brep2shape::Result<()> {
    let circle = NurbsCurve::circle([0.5, 0.5, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.3)?;
    let study = convergence_study(&circle, 8, 6)?;
    println!("{:>10} {:>12}", "h", "rmse");
    for (h, e) in study.h.iter().zip(&study.rmse) {
        println!("{h:>10.6} {e:>12.4e}");
    }
    println!("log-log slope: {:.4}", study.slope);
    Ok(())
}
