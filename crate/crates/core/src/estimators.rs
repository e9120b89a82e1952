//! Spectral estimators built on deconvolved moments: elementary symmetric
//! polynomials, rate estimation and eigenvalue recovery.
//!
//! Elementary symmetric polynomials are linear in mixed moments: with
//! `p_i = Tr(A^i) = n tr(A^i)`, each `e_k` is a rational combination of
//! products `p_{l_1} ... p_{l_j}` over partitions `l` of `k`, and such a
//! product is `n^j` times the mixed moment of key `l`. Plugging unbiased
//! mixed-moment estimates in therefore gives unbiased estimates of `e_k`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num::complex::Complex64;
use num::{One, Zero};

use crate::coeffring::{int, ratio, Rational};
use crate::deconv::{Deconvolver, StagedDeconvolver};
use crate::error::{Error, Result};
use crate::momentspace::{eval_mixed_moments, MomentKey, MomentVector, Value};
use crate::transfer::{gauss_sum, wishart_product, TransferMap};

/// Coefficients of `e_k` over power-sum products, keyed by the partition of
/// power-sum indices, from the recursion `k e_k = sum_i (-1)^{i-1} e_{k-i} p_i`.
pub fn newton_girard(k: usize) -> Vec<BTreeMap<MomentKey, Rational>> {
    let mut e: Vec<BTreeMap<MomentKey, Rational>> = vec![BTreeMap::from([(MomentKey::empty(), Rational::one())])];
    for m in 1..=k {
        let mut next = BTreeMap::new();
        for i in 1..=m {
            let sign = if i % 2 == 1 { int(1) } else { int(-1) };
            for (key, c) in &e[m - i] {
                let joined = key.join(&MomentKey::single(i));
                *next.entry(joined).or_insert_with(Rational::zero) += &sign * c * ratio(1, m as i64);
            }
        }
        next.retain(|_, c: &mut Rational| !c.is_zero());
        e.push(next);
    }
    e
}

/// `e_1..e_k` of the spectrum of an `n x n` matrix from its mixed moments.
pub fn elementary_from_moments(moments: &MomentVector, n: usize, k: usize) -> Result<Vec<Value>> {
    if moments.max_weight() < k {
        return Err(Error::dim(format!(
            "elementary polynomials up to order {k} need moments up to weight {k}, have {}",
            moments.max_weight()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("matrix dimension must be positive"));
    }
    let table = newton_girard(k);
    Ok(table[1..]
        .iter()
        .map(|terms| {
            terms.iter().fold(Value::zero(), |acc, (key, c)| {
                let scale = c * num::pow(int(n as i64), key.len());
                &acc + &moments.get(key).expect("basis covers weight k").scale(&scale)
            })
        })
        .collect())
}

/// `e_1..e_k` of an explicit spectrum.
pub fn elementary_from_spectrum(eigenvalues: &[f64], k: usize) -> Vec<f64> {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &l in eigenvalues {
        for r in (1..=k).rev() {
            e[r] += l * e[r - 1];
        }
    }
    e.split_off(1)
}

/// `1 + sum_r snr^r e_r`: unbiased for `prod_i (1 + snr l_i)` when the
/// `e_r` are and the rank is at most `k`.
pub fn rate_core(elementary: &[f64], snr: f64) -> Result<f64> {
    if snr <= 0.0 || !snr.is_finite() {
        return Err(Error::invalid(format!("SNR must be positive, got {snr}")));
    }
    Ok(1.0
        + elementary
            .iter()
            .enumerate()
            .map(|(i, e)| snr.powi(i as i32 + 1) * e)
            .sum::<f64>())
}

/// `(1/n) log2(rate_core)`; undefined when the core estimate is not positive.
pub fn rate(elementary: &[f64], snr: f64, n: usize) -> Result<f64> {
    let core = rate_core(elementary, snr)?;
    if core <= 0.0 {
        return Err(Error::Undefined(format!("rate core estimate {core} is not positive")));
    }
    Ok(core.log2() / n as f64)
}

/// What post-processing did to recovered eigenvalues.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Some root had a non-negligible imaginary part that was dropped.
    pub complex_projected: bool,
    /// Some root was negative and clamped to zero.
    pub clamped: bool,
    pub max_imaginary: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenRecovery {
    pub eigenvalues: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Roots of `x^k - e_1 x^{k-1} + ... + (-1)^k e_k`, from the eigenvalues of
/// the companion matrix. Complex parts are dropped and negative roots set to
/// zero, with both recorded. Sorted in decreasing order.
pub fn eigenvalues_from_elementary(elementary: &[f64]) -> EigenRecovery {
    let k = elementary.len();
    if k == 0 {
        return EigenRecovery {
            eigenvalues: Vec::new(),
            diagnostics: Diagnostics::default(),
        };
    }
    let mut companion = DMatrix::<f64>::zeros(k, k);
    for i in 1..k {
        companion[(i, i - 1)] = 1.0;
    }
    for (i, e) in elementary.iter().enumerate() {
        // coefficient of x^{k-1-i} is (-1)^{i+1} e_{i+1}; last column holds its negation
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        companion[(k - 1 - i, k - 1)] = sign * e;
    }
    let roots: Vec<Complex64> = companion.complex_eigenvalues().iter().copied().collect();
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut diagnostics = Diagnostics::default();
    let mut eigenvalues: Vec<f64> = roots
        .iter()
        .map(|z| {
            diagnostics.max_imaginary = diagnostics.max_imaginary.max(z.im.abs());
            if z.im.abs() > 1e-9 * scale {
                diagnostics.complex_projected = true;
            }
            if z.re < 0.0 {
                if z.re < -1e-12 * scale {
                    diagnostics.clamped = true;
                }
                0.0
            } else {
                z.re
            }
        })
        .collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    EigenRecovery {
        eigenvalues,
        diagnostics,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub moments: MomentVector,
    pub elementary_symmetric: Vec<f64>,
    pub rank_cap: usize,
    pub eigenvalues: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl SpectralEstimate {
    /// Builds the estimate for an `n x n` matrix from its estimated moments.
    pub fn from_moments(moments: MomentVector, n: usize, rank_cap: usize) -> Result<Self> {
        let elementary: Vec<f64> = elementary_from_moments(&moments, n, rank_cap)?
            .iter()
            .map(Value::to_f64)
            .collect();
        let recovered = eigenvalues_from_elementary(&elementary);
        Ok(Self {
            moments,
            elementary_symmetric: elementary,
            rank_cap,
            eigenvalues: recovered.eigenvalues,
            diagnostics: recovered.diagnostics,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineStrategy {
    /// Average the observations; the noise variance drops by the count.
    Average,
    /// Place the observations side by side in one wide matrix.
    Stack,
    /// Average the moments of each observation.
    PerObservationMoments,
}

impl std::str::FromStr for CombineStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Self::Average),
            "stack" => Ok(Self::Stack),
            "per-observation" | "per_observation_moments" => Ok(Self::PerObservationMoments),
            _ => Err(Error::invalid(format!(
                "unknown strategy {s:?} (expected average, stack or per-observation)"
            ))),
        }
    }
}

/// Observations reduced to a single moment vector of `(1/cols) Y Y^H`,
/// together with the parameters of the sum model it follows.
#[derive(Clone, Debug)]
pub struct PreparedObservation {
    pub moments: MomentVector,
    pub matrix: Option<DMatrix<Complex64>>,
    pub rows: usize,
    pub cols: usize,
    pub sigma2: Rational,
}

fn gram_moments(y: &DMatrix<Complex64>, max_weight: usize) -> Result<MomentVector> {
    let gram = y * y.adjoint() / Complex64::new(y.ncols() as f64, 0.0);
    eval_mixed_moments(&gram, max_weight)
}

/// Reduces observations `Y_i = D + sigma N_i` (noise variance `sigma2`).
pub fn combine_observations(
    obs: &[DMatrix<Complex64>],
    strategy: CombineStrategy,
    sigma2: &Rational,
    max_weight: usize,
) -> Result<PreparedObservation> {
    let first = obs.first().ok_or_else(|| Error::invalid("no observations"))?;
    let (rows, cols) = first.shape();
    if let Some(m) = obs.iter().find(|m| m.shape() != (rows, cols)) {
        return Err(Error::dim(format!(
            "observation is {}x{} but the first is {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    let l = obs.len();
    match strategy {
        CombineStrategy::Average => {
            let sum = obs.iter().fold(DMatrix::zeros(rows, cols), |acc, m| acc + m);
            let avg = sum / Complex64::new(l as f64, 0.0);
            Ok(PreparedObservation {
                moments: gram_moments(&avg, max_weight)?,
                matrix: Some(avg),
                rows,
                cols,
                sigma2: sigma2 / int(l as i64),
            })
        }
        CombineStrategy::Stack => {
            let mut stacked = DMatrix::zeros(rows, cols * l);
            for (i, m) in obs.iter().enumerate() {
                stacked.columns_mut(i * cols, cols).copy_from(m);
            }
            Ok(PreparedObservation {
                moments: gram_moments(&stacked, max_weight)?,
                matrix: Some(stacked),
                rows,
                cols: cols * l,
                sigma2: sigma2.clone(),
            })
        }
        CombineStrategy::PerObservationMoments => {
            let each: Vec<_> = obs.iter().map(|m| gram_moments(m, max_weight)).collect::<Result<_>>()?;
            Ok(PreparedObservation {
                moments: MomentVector::mean(&each)?,
                matrix: None,
                rows,
                cols,
                sigma2: sigma2.clone(),
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct RateConfig {
    pub snr: f64,
    /// Noise variance of a single observation.
    pub sigma2: Rational,
    pub rank: usize,
    pub strategy: CombineStrategy,
}

#[derive(Clone, Debug)]
pub struct RateEstimate {
    /// Spectral estimate for `D D^H`.
    pub spectral: SpectralEstimate,
    pub rate_core: f64,
    /// `None` when the core estimate is not positive.
    pub rate: Option<f64>,
}

/// Rate estimation from noisy observations `Y_i = D + sigma N_i` of an
/// `n x N` matrix `D`: deconvolve the noise, then evaluate
/// `1 + sum_r snr^r e_r` over the eigenvalues of `D D^H`.
pub fn estimate_rate(obs: &[DMatrix<Complex64>], config: &RateConfig) -> Result<RateEstimate> {
    let k = config.rank;
    if k == 0 {
        return Err(Error::invalid("rank cap must be at least 1"));
    }
    let big_n = obs.first().ok_or_else(|| Error::invalid("no observations"))?.ncols();
    let prepared = combine_observations(obs, config.strategy, &config.sigma2, k)?;
    let map = gauss_sum(k, &prepared.sigma2)?.bind(prepared.rows as u64, prepared.cols as u64)?;
    let gram = Deconvolver::new(&map)?.deconvolve(&prepared.moments)?;
    let moments = TransferMap::weight_scale(k, &int(big_n as i64)).apply(&gram)?;
    let spectral = SpectralEstimate::from_moments(moments, prepared.rows, k)?;
    let core = rate_core(&spectral.elementary_symmetric, config.snr)?;
    let rate = (core > 0.0).then(|| core.log2() / prepared.rows as f64);
    Ok(RateEstimate {
        spectral,
        rate_core: core,
        rate,
    })
}

/// Forward stages from the moments of the `K x K` power matrix `P` to those
/// of `(1/M) Y Y^H` for `Y = W P^{1/2} S + sigma X`, with `W` of size
/// `N x K`, `S` of size `K x M` and `X` of size `N x M`.
pub fn power_forward_stages(
    k: usize,
    big_n: usize,
    m: usize,
    sigma2: &Rational,
    max_weight: usize,
) -> Result<Vec<TransferMap>> {
    if k == 0 || big_n == 0 || m == 0 {
        return Err(Error::dim("K, N and M must be positive"));
    }
    let (k64, n64, m64) = (k as u64, big_n as u64, m as u64);
    let wishart = wishart_product(max_weight)?;
    Ok(vec![
        // (1/N) P^{1/2} W^H W P^{1/2}
        wishart.bind(k64, n64)?,
        // P^{1/2} W^H W P^{1/2}
        TransferMap::weight_scale(max_weight, &int(big_n as i64)),
        // (1/M) B^{1/2} S S^H B^{1/2}, sharing nonzero spectrum with (1/M) A A^H
        wishart.bind(k64, m64)?,
        // normalized traces over N instead of K
        TransferMap::trace_scale(max_weight, &ratio(k as i64, big_n as i64)),
        gauss_sum(max_weight, sigma2)?.bind(n64, m64)?,
    ])
}

/// Estimates the powers from compound observations `Y` (each `N x M`, one
/// per independent channel draw): deconvolve each, average the moment
/// estimates, recover the eigenvalues.
pub fn power_estimation(
    obs: &[DMatrix<Complex64>],
    k: usize,
    sigma2: &Rational,
    max_weight: usize,
) -> Result<SpectralEstimate> {
    let first = obs.first().ok_or_else(|| Error::invalid("no observations"))?;
    let (big_n, m) = first.shape();
    let deconv = StagedDeconvolver::new(&power_forward_stages(k, big_n, m, sigma2, max_weight)?)?;
    power_estimation_with(obs, k, &deconv, max_weight)
}

/// As [`power_estimation`] with a prepared deconvolver.
pub fn power_estimation_with(
    obs: &[DMatrix<Complex64>],
    k: usize,
    deconv: &StagedDeconvolver,
    max_weight: usize,
) -> Result<SpectralEstimate> {
    let first = obs.first().ok_or_else(|| Error::invalid("no observations"))?;
    if let Some(m) = obs.iter().find(|m| m.shape() != first.shape()) {
        return Err(Error::dim(format!(
            "observation is {}x{} but the first is {}x{}",
            m.nrows(),
            m.ncols(),
            first.nrows(),
            first.ncols()
        )));
    }
    let estimates: Vec<MomentVector> = obs
        .iter()
        .map(|y| deconv.deconvolve(&gram_moments(y, max_weight)?))
        .collect::<Result<_>>()?;
    SpectralEstimate::from_moments(MomentVector::mean(&estimates)?, k, k.min(max_weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momentspace::{eval_mixed_moments_from_eigenvalues, exact_mixed_moments, BasisKey};
    use proptest::prelude::*;

    fn factorial(n: usize) -> i64 {
        (1..=n as i64).product()
    }

    /// `(-1)^{k-len} / z_l` for each partition `l` of `k`.
    fn closed_form(k: usize) -> BTreeMap<MomentKey, Rational> {
        MomentKey::basis(k)
            .into_iter()
            .filter(|key| key.weight() == k)
            .map(|key| {
                let mut counts = BTreeMap::new();
                for &p in key.parts() {
                    *counts.entry(p).or_insert(0usize) += 1;
                }
                let z: i64 = counts
                    .iter()
                    .map(|(&i, &m)| (i as i64).pow(m as u32) * factorial(m))
                    .product();
                let sign = if (k - key.len()).is_multiple_of(2) { 1 } else { -1 };
                (key, ratio(sign, z))
            })
            .collect()
    }

    #[test]
    fn recursion_matches_closed_form() {
        let table = newton_girard(6);
        for k in 1..=6 {
            assert_eq!(table[k], closed_form(k), "k={k}");
        }
    }

    #[test]
    fn documented_examples() {
        let m = exact_mixed_moments(&[int(1), ratio(1, 2)], 2).unwrap();
        let e = elementary_from_moments(&m, 2, 2).unwrap();
        assert_eq!(e, vec![Value::Exact(ratio(3, 2)), Value::Exact(ratio(1, 2))]);
        let id = exact_mixed_moments(&[int(1), int(1)], 2).unwrap();
        assert_eq!(
            elementary_from_moments(&id, 2, 2).unwrap(),
            vec![Value::Exact(int(2)), Value::Exact(int(1))]
        );
        let e1 = elementary_from_moments(&m, 2, 1).unwrap();
        assert_eq!(e1, vec![Value::Exact(ratio(3, 2))]);
        assert!(elementary_from_moments(&m, 2, 3).is_err());
    }

    #[test]
    fn rate_examples() {
        let e = elementary_from_spectrum(&[1.0, 0.25], 2);
        assert!((rate_core(&e, 5.0).unwrap() - 13.5).abs() < 1e-12);
        assert!((rate(&e, 5.0, 2).unwrap() - 0.5 * 13.5f64.log2()).abs() < 1e-12);
        let e = elementary_from_spectrum(&[1.0, 0.25, 4.0, 1.0], 4);
        assert!((rate_core(&e, 10.0).unwrap() - 11.0 * 3.5 * 41.0 * 11.0).abs() < 1e-8);
        assert_eq!(rate_core(&[0.0, 0.0], 3.0).unwrap(), 1.0);
        assert_eq!(rate(&[0.0], 3.0, 2).unwrap(), 0.0);
        assert!(matches!(rate(&[-1.0], 2.0, 1), Err(Error::Undefined(_))));
        assert!(rate_core(&[1.0], 0.0).is_err());
    }

    #[test]
    fn companion_roots() {
        let r = eigenvalues_from_elementary(&[1.5, 0.5]);
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-12 && (r.eigenvalues[1] - 0.5).abs() < 1e-12);
        assert_eq!(r.diagnostics, Diagnostics::default());
        let r = eigenvalues_from_elementary(&[3.0, 3.0, 1.0]);
        assert!(r.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-4));
        // x^2 - 2x + 2 has roots 1 ± i
        let r = eigenvalues_from_elementary(&[2.0, 2.0]);
        assert!(r.diagnostics.complex_projected);
        assert!(r.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-12));
        // x^2 - 1 has roots ±1
        let r = eigenvalues_from_elementary(&[0.0, -1.0]);
        assert!(r.diagnostics.clamped);
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-12 && r.eigenvalues[1] == 0.0);
    }

    #[test]
    fn single_observation_strategies_coincide() {
        let y = DMatrix::from_fn(2, 3, |i, j| Complex64::new((i + j) as f64, i as f64 - 0.5));
        let s2 = ratio(1, 4);
        let a = combine_observations(std::slice::from_ref(&y), CombineStrategy::Average, &s2, 3).unwrap();
        let b = combine_observations(std::slice::from_ref(&y), CombineStrategy::Stack, &s2, 3).unwrap();
        let c = combine_observations(&[y], CombineStrategy::PerObservationMoments, &s2, 3).unwrap();
        assert_eq!(a.moments, b.moments);
        assert_eq!(a.moments, c.moments);
        assert_eq!((a.sigma2, b.cols), (s2, 3));
    }

    #[test]
    fn averaging_identical_observations() {
        let d = DMatrix::from_fn(2, 2, |i, j| Complex64::new((i * 2 + j) as f64, 0.0));
        let p = combine_observations(&vec![d.clone(); 4], CombineStrategy::Average, &int(1), 2).unwrap();
        assert_eq!(p.matrix.unwrap(), d);
        assert_eq!(p.sigma2, ratio(1, 4));
        let s = combine_observations(&vec![d; 4], CombineStrategy::Stack, &int(1), 2).unwrap();
        assert_eq!((s.rows, s.cols), (2, 8));
        assert!(combine_observations(&[], CombineStrategy::Stack, &int(1), 2).is_err());
    }

    #[test]
    fn noiseless_rate_is_exact() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        let cfg = RateConfig {
            snr: 5.0,
            sigma2: Rational::zero(),
            rank: 2,
            strategy: CombineStrategy::Average,
        };
        let est = estimate_rate(&[d], &cfg).unwrap();
        assert!((est.rate_core - 13.5).abs() < 1e-12);
        assert!((est.spectral.eigenvalues[0] - 1.0).abs() < 1e-9);
        assert!((est.spectral.eigenvalues[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn scalar_power_model() {
        // K = N = M = 1: E|y|^4 = 4p^2 + 4p s2 + 2 s2^2
        let (p, s2) = (ratio(1, 4), ratio(1, 9));
        let stages = power_forward_stages(1, 1, 1, &s2, 2).unwrap();
        let mut v = exact_mixed_moments(std::slice::from_ref(&p), 2).unwrap();
        for s in &stages {
            v = s.apply(&v).unwrap();
        }
        let expected = int(4) * &p * &p + int(4) * &p * &s2 + int(2) * &s2 * &s2;
        assert_eq!(v.get(&MomentKey::single(2)).unwrap(), &Value::Exact(expected.clone()));
        assert_eq!(v.get(&MomentKey::new(vec![1, 1]).unwrap()).unwrap(), &Value::Exact(expected));
        assert_eq!(v.get(&MomentKey::single(1)).unwrap(), &Value::Exact(&p + &s2));
    }

    #[test]
    fn noiseless_degenerate_power_model() {
        // sigma = 0 with N = M = K: deconvolution inverts the forward map exactly
        let s2 = Rational::zero();
        let stages = power_forward_stages(2, 2, 2, &s2, 2).unwrap();
        let truth = exact_mixed_moments(&[int(1), ratio(1, 4)], 2).unwrap();
        let mut v = truth.clone();
        for s in &stages {
            v = s.apply(&v).unwrap();
        }
        let back = StagedDeconvolver::new(&stages).unwrap().deconvolve(&v).unwrap();
        assert_eq!(back, truth);
        let est = SpectralEstimate::from_moments(back, 2, 2).unwrap();
        assert!((est.eigenvalues[0] - 1.0).abs() < 1e-12 && (est.eigenvalues[1] - 0.25).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn newton_girard_consistency(spec in prop::collection::vec(0.05f64..3.0, 1..=5)) {
            let k = spec.len();
            let m = eval_mixed_moments_from_eigenvalues(&spec, k).unwrap();
            let est = elementary_from_moments(&m, k, k).unwrap();
            let truth = elementary_from_spectrum(&spec, k);
            for (a, b) in est.iter().zip(&truth) {
                prop_assert!((a.to_f64() - b).abs() <= 1e-10 * b.abs().max(1.0));
            }
        }

        #[test]
        fn roots_recover_separated_spectra(mut spec in prop::collection::vec(0.0f64..1.0, 1..=4)) {
            spec.sort_by(|a, b| b.total_cmp(a));
            let spec: Vec<f64> = spec.iter().enumerate().map(|(i, x)| 0.5 * i as f64 + 0.4 * x).rev().collect();
            let e = elementary_from_spectrum(&spec, spec.len());
            let r = eigenvalues_from_elementary(&e);
            let mut sorted = spec.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in r.eigenvalues.iter().zip(&sorted) {
                prop_assert!((a - b).abs() < 1e-8, "{:?} vs {:?}", r.eigenvalues, sorted);
            }
        }

        #[test]
        fn symmetric_in_eigenvalue_order(spec in prop::collection::vec(0.0f64..2.0, 2..=4), shift in 0usize..4) {
            let mut rotated = spec.clone();
            rotated.rotate_left(shift % spec.len());
            let a = elementary_from_spectrum(&spec, spec.len());
            let b = elementary_from_spectrum(&rotated, spec.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
            prop_assert_eq!(eigenvalues_from_elementary(&a).eigenvalues.len(), spec.len());
        }
    }
}
