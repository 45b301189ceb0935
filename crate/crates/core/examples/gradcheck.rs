//! Compares analytic gradients of the pre-training loss with central
//! differences on randomly chosen parameters of a toy model.

use brep2shape::net::gradcheck;

fn main() -> brep2shape::Result<()> {
    for seed in 0..3 {
        let report = gradcheck(seed, 50)?;
        let worst = report.entries.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error)).unwrap();
        println!(
            "seed {seed}: {} parameters, max relative error {:.2e} ({}[{}]: {:.6e} vs {:.6e})",
            report.checked, report.max_rel_error, worst.name, worst.index, worst.analytic, worst.numeric
        );
    }
    Ok(())
}
