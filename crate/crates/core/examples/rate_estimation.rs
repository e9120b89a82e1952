// Rate estimation from noisy observations `Y_i = D + s N_i` of a 2 x 2
// channel `D = diag(1, 0.5)` at SNR 5: the averaged observations are
// deconvolved and `prod_i (1 + snr l_i)` is estimated without bias.

use finite_rmt::coeffring::ratio;
use finite_rmt::estimators::{estimate_rate, CombineStrategy, RateConfig};
use finite_rmt::mcoracle::{sample_complex_gaussian, trial_rng};
use nalgebra::DMatrix;
use num::complex::Complex64;

pub const SNR: f64 = 5.0;

pub struct RateRow {
    pub observations: usize,
    pub mean_core: f64,
    pub core_se: f64,
    pub mean_rate: f64,
    pub undefined: usize,
}

pub fn channel() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5].map(|x| Complex64::new(x, 0.0)))
}

/// Observations for one run; the noise has variance `1/SNR`.
pub fn observations(seed: u64, run: u64, count: usize) -> Vec<DMatrix<Complex64>> {
    let d = channel();
    let s = Complex64::new((1.0 / SNR).sqrt(), 0.0);
    let mut rng = trial_rng(seed, run);
    (0..count).map(|_| &d + sample_complex_gaussian(2, 2, &mut rng) * s).collect()
}

pub fn run_example_with(counts: &[usize], runs: usize, seed: u64) -> finite_rmt::Result<Vec<RateRow>> {
    let config = RateConfig {
        snr: SNR,
        sigma2: ratio(1, 5),
        rank: 2,
        strategy: CombineStrategy::Average,
    };
    counts
        .iter()
        .map(|&l| {
            let mut cores = Vec::with_capacity(runs);
            let mut rates = Vec::new();
            for run in 0..runs {
                let est = estimate_rate(&observations(seed + l as u64, run as u64, l), &config)?;
                cores.push(est.rate_core);
                rates.extend(est.rate);
            }
            let mean = cores.iter().sum::<f64>() / runs as f64;
            let var = cores.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
            Ok(RateRow {
                observations: l,
                mean_core: mean,
                core_se: (var / runs as f64).sqrt(),
                mean_rate: rates.iter().sum::<f64>() / rates.len().max(1) as f64,
                undefined: runs - rates.len(),
            })
        })
        .collect()
}

pub fn run_example() -> finite_rmt::Result<Vec<RateRow>> {
    run_example_with(&[1, 4, 16, 64], 500, 7)
}

fn main() -> finite_rmt::Result<()> {
    println!("# true rate core 13.5, rate {:.4}", 0.5 * 13.5f64.log2());
    println!("L\tmean_core\tse\tmean_rate\tundefined");
    for r in run_example()? {
        println!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{}",
            r.observations, r.mean_core, r.core_se, r.mean_rate, r.undefined
        );
    }
    Ok(())
}
