// A chain `D (1/N1) X1 X1^H (1/N2) X2 X2^H`: exact forward moments from
// the spectrum of `D`, then deconvolution back to the input.

use finite_rmt::coeffring::{int, ratio};
use finite_rmt::model::{CompiledModel, InputMoments, ModelExpr};
use finite_rmt::momentspace::{exact_mixed_moments, MomentVector};

pub struct ChainResult {
    pub input: MomentVector,
    pub output: MomentVector,
    pub recovered: MomentVector,
}

pub fn run_example() -> finite_rmt::Result<ChainResult> {
    let model = ModelExpr::parse("chain(det(D, 2x2), gC(2, 4), gC(2, 3))")?;
    let compiled = CompiledModel::compile(&model, 3)?;
    let input = exact_mixed_moments(&[int(1), ratio(1, 2)], 3)?;
    let output = compiled.convolve(&InputMoments::One(input.clone()))?;
    let recovered = compiled.deconvolver()?.deconvolve(&output)?;
    Ok(ChainResult {
        input,
        output,
        recovered,
    })
}

fn main() -> finite_rmt::Result<()> {
    let r = run_example()?;
    println!("key\tinput\toutput\trecovered");
    for ((k, a), (b, c)) in r.input.iter().zip(r.output.values().iter().zip(r.recovered.values())) {
        println!("{k}\t{a}\t{b}\t{c}");
    }
    Ok(())
}
