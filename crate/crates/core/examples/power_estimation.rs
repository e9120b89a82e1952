// User powers from compound observations `Y = W P^{1/2} S + s X` with
// `K = N = M = 2`, `P^{1/2} = diag(1, 0.5)` and `s = 0.1`. Each
// observation has its own channel draw; moment estimates are averaged.

use finite_rmt::coeffring::ratio;
use finite_rmt::deconv::StagedDeconvolver;
use finite_rmt::estimators::{power_estimation_with, power_forward_stages, SpectralEstimate};
use finite_rmt::mcoracle::{sample_complex_gaussian, trial_rng};
use nalgebra::DMatrix;
use num::complex::Complex64;

pub const TRUE_POWERS: [f64; 2] = [1.0, 0.25];

pub fn compound_observations(size: usize, count: usize, seed: u64) -> Vec<DMatrix<Complex64>> {
    let root = DMatrix::from_fn(size, size, |i, j| {
        let p = if i % 2 == 0 { 1.0 } else { 0.5 };
        Complex64::new(if i == j { p } else { 0.0 }, 0.0)
    });
    (0..count)
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let w = sample_complex_gaussian(size, size, &mut rng);
            let s = sample_complex_gaussian(size, size, &mut rng);
            let x = sample_complex_gaussian(size, size, &mut rng);
            w * &root * s + x * Complex64::new(0.1, 0.0)
        })
        .collect()
}

/// Sum of absolute errors of the two largest recovered powers.
pub fn error(est: &SpectralEstimate) -> f64 {
    est.eigenvalues
        .iter()
        .zip(TRUE_POWERS)
        .map(|(a, b)| (a - b).abs())
        .sum()
}

/// Median error over `reps` seeded repetitions for each observation count.
pub fn median_errors(counts: &[usize], reps: u64) -> finite_rmt::Result<Vec<(usize, f64)>> {
    let deconv = StagedDeconvolver::new(&power_forward_stages(2, 2, 2, &ratio(1, 100), 2)?)?;
    counts
        .iter()
        .map(|&l| {
            let mut errs = (0..reps)
                .map(|rep| Ok(error(&power_estimation_with(&compound_observations(2, l, 1000 + rep), 2, &deconv, 2)?)))
                .collect::<finite_rmt::Result<Vec<f64>>>()?;
            errs.sort_by(f64::total_cmp);
            let mid = errs.len() / 2;
            let median = if errs.len() % 2 == 0 {
                (errs[mid - 1] + errs[mid]) / 2.0
            } else {
                errs[mid]
            };
            Ok((l, median))
        })
        .collect()
}

pub fn run_example() -> finite_rmt::Result<Vec<(usize, f64)>> {
    median_errors(&[50, 200, 800], 20)
}

fn main() -> finite_rmt::Result<()> {
    println!("L\tmedian_abs_error");
    for (l, e) in run_example()? {
        println!("{l}\t{e:.4}");
    }
    Ok(())
}
