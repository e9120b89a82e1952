// Moments of `(1/N)(D + sX)(D + sX)^H` for `D = diag(1, 0.5)` and
// `s = 0.5`, exactly and by simulation.

use finite_rmt::matfile::parse_matrix;
use finite_rmt::mcoracle::{validate, EnsembleSpec, ValidationReport};
use finite_rmt::model::ModelExpr;
use finite_rmt::momentspace::DetMatrixSet;

pub fn run_example() -> finite_rmt::Result<ValidationReport> {
    let mut bindings = DetMatrixSet::new();
    bindings.insert("D".into(), parse_matrix("2 2 real\n1 0\n0 0.5\n")?);
    let model = ModelExpr::parse("sum(det(D, 2x2), gC(2, 2, 0.5))")?;
    let spec = EnsembleSpec::new(model, bindings, 2024, 50_000)?;
    validate(&spec, 3)
}

fn main() -> finite_rmt::Result<()> {
    let report = run_example()?;
    print!("{}", report.to_table());
    println!("max |z| = {:.2}", report.max_abs_z());
    Ok(())
}
