// Checks exact predictions for several models against seeded simulation.

use finite_rmt::matfile::parse_matrix;
use finite_rmt::mcoracle::{validate, EnsembleSpec, ValidationReport};
use finite_rmt::model::ModelExpr;
use finite_rmt::momentspace::DetMatrixSet;

pub const MODELS: [&str; 5] = [
    "wprod(det(I, 2x2), det(I, 2x2), 2, 2)",
    "wprod(det(D, 2x2), det(E, 3x3), 2, 3)",
    "sum(det(D, 2x2), gC(2, 2, 0.5))",
    "saprod(det(D, 2x2), 2)",
    "sasum(det(D, 2x2), 2)",
];

pub fn run_example_with(trials: usize) -> finite_rmt::Result<Vec<(String, ValidationReport)>> {
    let mut bindings = DetMatrixSet::new();
    bindings.insert("D".into(), parse_matrix("2 2 real\n1 0\n0 0.5\n")?);
    bindings.insert("E".into(), parse_matrix("3 3 real\n1 0 0\n0 1 0\n0 0 1\n")?);
    MODELS
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let spec = EnsembleSpec::new(ModelExpr::parse(text)?, bindings.clone(), 100 + i as u64, trials)?;
            Ok((text.to_string(), validate(&spec, 3)?))
        })
        .collect()
}

pub fn run_example() -> finite_rmt::Result<Vec<(String, ValidationReport)>> {
    run_example_with(20_000)
}

fn main() -> finite_rmt::Result<()> {
    for (model, report) in run_example()? {
        println!("## {model}: {}", if report.passed() { "pass" } else { "FAIL" });
        print!("{}", report.to_table());
    }
    Ok(())
}
