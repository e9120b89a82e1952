// Selfadjoint Gaussian models: `R + X/√n` with `R = 0` gives the moments
// of a scaled GUE matrix; at `n = 1` these are the double factorials.

use finite_rmt::model::{zero_moments, CompiledModel, InputMoments, ModelExpr};
use finite_rmt::momentspace::{MomentKey, Value};

pub fn run_example() -> finite_rmt::Result<Vec<(usize, usize, Value)>> {
    let mut rows = Vec::new();
    for n in [1usize, 2, 3] {
        let model = ModelExpr::parse(&format!("sasum(det(0, {n}x{n}), {n})"))?;
        let out = CompiledModel::compile(&model, 6)?.convolve(&InputMoments::One(zero_moments(6)))?;
        for p in [2usize, 4, 6] {
            rows.push((n, p, out.get(&MomentKey::single(p)).cloned().unwrap_or_else(Value::zero)));
        }
    }
    Ok(rows)
}

fn main() -> finite_rmt::Result<()> {
    println!("n\tp\tE tr(X/sqrt(n))^p");
    for (n, p, v) in run_example()? {
        println!("{n}\t{p}\t{v}");
    }
    Ok(())
}
