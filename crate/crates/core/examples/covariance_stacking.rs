// Eigenvalues of a covariance `R` from `L` noisy samples
// `y = R^{1/2} u + s n`, stacked as columns of a 2 x L matrix. The stacked
// model is a correlated Wishart factor plus Gaussian noise; deconvolution
// undoes the noise and then the Wishart factor.

use finite_rmt::estimators::SpectralEstimate;
use finite_rmt::mcoracle::{sample_complex_gaussian, trial_rng};
use finite_rmt::model::{CompiledModel, ModelExpr};
use finite_rmt::momentspace::eval_mixed_moments;
use nalgebra::DMatrix;
use num::complex::Complex64;

pub fn run_example_with(samples: usize, seed: u64) -> finite_rmt::Result<SpectralEstimate> {
    let model = ModelExpr::parse(&format!(
        "sum(wprod(det(R, 2x2), det(I, {samples}x{samples}), 2, {samples}), gC(2, {samples}, 0.5))"
    ))?;
    let compiled = CompiledModel::compile(&model, 2)?;
    // R = diag(1, 0.25), so R^{1/2} = diag(1, 0.5)
    let root = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5].map(|x| Complex64::new(x, 0.0)));
    let mut rng = trial_rng(seed, 0);
    let u = sample_complex_gaussian(2, samples, &mut rng);
    let noise = sample_complex_gaussian(2, samples, &mut rng);
    let y = &root * u + noise * Complex64::new(0.5, 0.0);
    let gram = &y * y.adjoint() / Complex64::new(samples as f64, 0.0);
    let estimate = compiled.deconvolver()?.deconvolve(&eval_mixed_moments(&gram, 2)?)?;
    SpectralEstimate::from_moments(estimate, 2, 2)
}

pub fn run_example() -> finite_rmt::Result<Vec<(usize, SpectralEstimate)>> {
    [10usize, 100, 1000, 10_000]
        .into_iter()
        .map(|l| Ok((l, run_example_with(l, 5)?)))
        .collect()
}

fn main() -> finite_rmt::Result<()> {
    println!("# true eigenvalues 1 and 0.25");
    println!("L\tl1\tl2\tflags");
    for (l, est) in run_example()? {
        println!(
            "{l}\t{:.4}\t{:.4}\t{:?}",
            est.eigenvalues[0], est.eigenvalues[1], est.diagnostics
        );
    }
    Ok(())
}
