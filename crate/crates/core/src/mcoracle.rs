//! Seeded Monte Carlo sampling of the supported ensembles.
//!
//! Each trial draws from its own ChaCha8 stream: the generator is seeded
//! with the ensemble seed and switched to the stream numbered by the trial
//! index, so results do not depend on thread count or scheduling. Complex
//! Gaussian entries take real and imaginary parts from `StandardNormal`
//! (Ziggurat) scaled by `1/√2`.
//!
//! Trials are summarized in fixed chunks with Welford updates and the chunk
//! summaries are merged in chunk order.

use nalgebra::DMatrix;
use num::complex::Complex64;
use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::coeffring::rational_to_f64;
use crate::error::{Error, Result};
use crate::model::{lookup, CompiledModel, ModelExpr};
use crate::momentspace::{normalized_power_traces, BasisKey, DetMatrixSet, MomentKey, MomentVector, Value};

const CHUNK: usize = 256;

/// A model, its deterministic bindings and sampling parameters.
#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub model: ModelExpr,
    pub bindings: DetMatrixSet,
    pub seed: u64,
    pub trials: usize,
}

impl EnsembleSpec {
    pub fn new(model: ModelExpr, bindings: DetMatrixSet, seed: u64, trials: usize) -> Result<Self> {
        if trials == 0 {
            return Err(Error::invalid("at least one trial is needed"));
        }
        model.check()?;
        for (name, rows, cols) in model.leaf_names() {
            lookup(&bindings, &name, rows, cols)?;
        }
        Ok(Self {
            model,
            bindings,
            seed,
            trials,
        })
    }
}

/// The generator for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `n x N` matrix of i.i.d. standard complex Gaussians, `E|x|^2 = 1`.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(n: usize, big_n: usize, rng: &mut R) -> DMatrix<Complex64> {
    // Row-major draw order keeps streams independent of the storage layout.
    let values: Vec<Complex64> = (0..n * big_n).map(|_| complex_normal(rng)).collect();
    DMatrix::from_row_slice(n, big_n, &values)
}

/// Hermitian `(Y + Y^H)/√2` for a standard complex Gaussian `Y`.
pub fn sample_selfadjoint_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let y = sample_complex_gaussian(n, n, rng);
    (&y + y.adjoint()) * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let scale = m.norm().max(1.0);
    if (m - m.adjoint()).norm() > 1e-10 * scale {
        return Err(Error::invalid("square root of a non-Hermitian factor"));
    }
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
        return Err(Error::invalid("square root of a factor that is not positive semidefinite"));
    }
    let roots = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| real(l.max(0.0).sqrt())));
    Ok(&eig.eigenvectors * roots * eig.eigenvectors.adjoint())
}

/// One draw of the square matrix a model describes.
pub fn realize<R: Rng + ?Sized>(e: &ModelExpr, bindings: &DetMatrixSet, rng: &mut R) -> Result<DMatrix<Complex64>> {
    Ok(match e {
        ModelExpr::DeterministicRef { name, rows, cols } => {
            let d = lookup(bindings, name, *rows, *cols)?;
            if rows == cols {
                d
            } else {
                &d * d.adjoint() / real(*cols as f64)
            }
        }
        ModelExpr::GaussComplex { n, big_n, sigma } => {
            let x = sample_complex_gaussian(*n, *big_n, rng);
            let s2 = rational_to_f64(sigma).powi(2);
            &x * x.adjoint() * real(s2 / *big_n as f64)
        }
        ModelExpr::GaussSelfAdjoint { n, sigma } => {
            sample_selfadjoint_gaussian(*n, rng) * real(rational_to_f64(sigma) / (*n as f64).sqrt())
        }
        ModelExpr::GaussSum(..) => {
            let a = realize_rect(e, bindings, rng)?;
            &a * a.adjoint() / real(a.ncols() as f64)
        }
        ModelExpr::CorrProduct { r, s, n, big_n } => {
            let rm = realize(r, bindings, rng)?;
            let sm = realize(s, bindings, rng)?;
            let x = sample_complex_gaussian(*n, *big_n, rng);
            rm * &x * sm * x.adjoint() / real(*big_n as f64)
        }
        ModelExpr::Chain { base, factors } => {
            let mut acc = realize(base, bindings, rng)?;
            for f in factors {
                acc *= realize(f, bindings, rng)?;
            }
            acc
        }
        ModelExpr::SelfAdjProduct { r, n } => {
            let rm = realize(r, bindings, rng)?;
            rm * sample_selfadjoint_gaussian(*n, rng) / real((*n as f64).sqrt())
        }
        ModelExpr::SelfAdjSum { r, n, sigma } => {
            let rm = realize(r, bindings, rng)?;
            rm + sample_selfadjoint_gaussian(*n, rng) * real(rational_to_f64(sigma) / (*n as f64).sqrt())
        }
    })
}

/// One draw of the rectangular matrix behind an operand of a sum.
pub fn realize_rect<R: Rng + ?Sized>(
    e: &ModelExpr,
    bindings: &DetMatrixSet,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    match e {
        ModelExpr::DeterministicRef { name, rows, cols } => lookup(bindings, name, *rows, *cols),
        ModelExpr::GaussComplex { n, big_n, sigma } => {
            Ok(sample_complex_gaussian(*n, *big_n, rng) * real(rational_to_f64(sigma)))
        }
        ModelExpr::GaussSum(a, b) => {
            let (base, noise) = if matches!(b.as_ref(), ModelExpr::GaussComplex { .. }) {
                (a, b)
            } else {
                (b, a)
            };
            let x = realize_rect(noise, bindings, rng)?;
            Ok(realize_rect(base, bindings, rng)? + x)
        }
        ModelExpr::CorrProduct { r, s, n, big_n } => {
            let rh = hermitian_sqrt(&realize(r, bindings, rng)?)?;
            let sh = hermitian_sqrt(&realize(s, bindings, rng)?)?;
            Ok(rh * sample_complex_gaussian(*n, *big_n, rng) * sh)
        }
        _ => Err(Error::Unsupported(format!("{e} is not a rectangular operand"))),
    }
}

/// Per-key sample means and standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMoments {
    pub basis: Vec<MomentKey>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub trials: usize,
}

impl EmpiricalMoments {
    pub fn moments(&self) -> MomentVector {
        MomentVector::new(self.basis.clone(), self.mean.iter().map(|&x| Value::Approx(x)).collect())
            .expect("basis and means have equal length")
    }
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Debug)]
pub struct Accumulator {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Accumulator {
    pub fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let k = self.count as f64;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / k;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn standard_errors(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.count as f64;
        self.m2.iter().map(|m| (m / (n - 1.0) / n).sqrt()).collect()
    }
}

/// Summarizes `f(trial)` over `0..trials` in a thread-count independent way.
pub fn accumulate_trials(
    trials: usize,
    len: usize,
    f: impl Fn(u64) -> Result<Vec<f64>> + Sync,
) -> Result<Accumulator> {
    let chunks: Vec<Accumulator> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(len);
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                acc.push(&f(t as u64)?);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = Accumulator::new(len);
    for c in &chunks {
        total.merge(c);
    }
    Ok(total)
}

/// Real parts of the mixed moments of `a` on `basis`.
pub fn mixed_moment_values(a: &DMatrix<Complex64>, basis: &[MomentKey], max_weight: usize) -> Vec<f64> {
    let traces = normalized_power_traces(a, max_weight);
    basis
        .iter()
        .map(|k| {
            k.parts()
                .iter()
                .fold(Complex64::new(1.0, 0.0), |acc, &p| acc * traces[p])
                .re
        })
        .collect()
}

pub fn empirical_mixed_moments(spec: &EnsembleSpec, max_weight: usize) -> Result<EmpiricalMoments> {
    let basis = MomentKey::basis(max_weight);
    let acc = accumulate_trials(spec.trials, basis.len(), |t| {
        let mut rng = trial_rng(spec.seed, t);
        let m = realize(&spec.model, &spec.bindings, &mut rng)?;
        Ok(mixed_moment_values(&m, &basis, max_weight))
    })?;
    Ok(EmpiricalMoments {
        se: acc.standard_errors(),
        mean: acc.mean().to_vec(),
        basis,
        trials: spec.trials,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationRow {
    pub key: MomentKey,
    pub predicted: f64,
    pub empirical: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    pub trials: usize,
    pub seed: u64,
}

/// Z-score threshold for a pass.
pub const Z_THRESHOLD: f64 = 4.0;

pub fn z_score(empirical: f64, predicted: f64, se: f64) -> f64 {
    let diff = empirical - predicted;
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-9 * predicted.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

impl ValidationReport {
    pub fn compare(predicted: &MomentVector, empirical: &EmpiricalMoments, seed: u64) -> Result<Self> {
        let rows = empirical
            .basis
            .iter()
            .enumerate()
            .map(|(i, key)| {
                let pred = predicted
                    .get(key)
                    .ok_or_else(|| Error::dim(format!("no prediction for key {key}")))?
                    .to_f64();
                Ok(ValidationRow {
                    key: key.clone(),
                    predicted: pred,
                    empirical: empirical.mean[i],
                    se: empirical.se[i],
                    z: z_score(empirical.mean[i], pred, empirical.se[i]),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            rows,
            trials: empirical.trials,
            seed,
        })
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.z.abs() <= Z_THRESHOLD)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }

    /// Tab-separated table with a header line.
    pub fn to_table(&self) -> String {
        let mut out = String::from("key\tpredicted\tempirical\tse\tz\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{:.10}\t{:.10}\t{:.3e}\t{:.3}\n",
                r.key,
                r.predicted + 0.0,
                r.empirical,
                r.se,
                r.z
            ));
        }
        out
    }
}

/// Compares the model's exact prediction with sampled moments.
pub fn validate(spec: &EnsembleSpec, max_weight: usize) -> Result<ValidationReport> {
    let compiled = CompiledModel::compile(&spec.model, max_weight)?;
    let input = compiled.input_moments(&spec.bindings)?;
    let predicted = compiled.convolve(&input)?;
    let empirical = empirical_mixed_moments(spec, max_weight)?;
    ValidationReport::compare(&predicted, &empirical, spec.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str, bindings: DetMatrixSet, seed: u64, trials: usize) -> EnsembleSpec {
        EnsembleSpec::new(ModelExpr::parse(text).unwrap(), bindings, seed, trials).unwrap()
    }

    fn diag(values: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&x| real(x)),
        ))
    }

    #[test]
    fn entry_moments() {
        let acc = accumulate_trials(100_000, 3, |t| {
            let x = sample_complex_gaussian(1, 1, &mut trial_rng(11, t))[(0, 0)];
            Ok(vec![x.norm_sqr(), (x * x).re, x.norm_sqr().powi(2)])
        })
        .unwrap();
        let se = acc.standard_errors();
        for (i, target) in [1.0, 0.0, 2.0].into_iter().enumerate() {
            assert!(z_score(acc.mean()[i], target, se[i]).abs() <= 4.0, "{i}");
        }
    }

    #[test]
    fn selfadjoint_samples_are_hermitian() {
        let mut rng = trial_rng(3, 0);
        for n in 1..5 {
            let x = sample_selfadjoint_gaussian(n, &mut rng);
            assert_eq!(x, x.adjoint());
        }
    }

    #[test]
    fn gue_trace_moments() {
        let s = spec("gSA(2)", DetMatrixSet::new(), 5, 40_000);
        let report = validate(&s, 4).unwrap();
        assert!(report.passed(), "{}", report.to_table());
        let m4 = report.rows.iter().find(|r| r.key == MomentKey::single(4)).unwrap();
        assert_eq!(m4.predicted, 2.25);
    }

    #[test]
    fn deterministic_model_has_zero_z() {
        let mut b = DetMatrixSet::new();
        b.insert("D".into(), diag(&[1.0, 0.5]));
        let report = validate(&spec("det(D,2x2)", b, 1, 10), 3).unwrap();
        assert!(report.rows.iter().all(|r| r.z == 0.0 && r.se == 0.0));
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let s = spec("sum(det(I,2x2), gC(2,2,0.5))", DetMatrixSet::new(), 42, 3000);
        let a = empirical_mixed_moments(&s, 3).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| empirical_mixed_moments(&s, 3).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn standard_error_scaling() {
        let small = empirical_mixed_moments(&spec("gC(2,2)", DetMatrixSet::new(), 9, 5_000), 2).unwrap();
        let large = empirical_mixed_moments(&spec("gC(2,2)", DetMatrixSet::new(), 9, 20_000), 2).unwrap();
        for i in 1..small.se.len() {
            let ratio = small.se[i] / large.se[i];
            assert!((ratio - 2.0).abs() <= 0.4, "key {} ratio {ratio}", small.basis[i]);
        }
    }

    #[test]
    fn wishart_second_moment() {
        let s = spec("wprod(det(I,2x2), det(I,2x2), 2, 2)", DetMatrixSet::new(), 7, 20_000);
        let report = validate(&s, 3).unwrap();
        assert!(report.passed(), "{}", report.to_table());
        let m2 = report.rows.iter().find(|r| r.key == MomentKey::single(2)).unwrap();
        assert_eq!(m2.predicted, 2.0);
    }

    #[test]
    fn merge_matches_sequential() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut seq = Accumulator::new(1);
        data.iter().for_each(|&x| seq.push(&[x]));
        let mut parts = Accumulator::new(1);
        for chunk in data.chunks(77) {
            let mut a = Accumulator::new(1);
            chunk.iter().for_each(|&x| a.push(&[x]));
            parts.merge(&a);
        }
        assert!((seq.mean()[0] - parts.mean()[0]).abs() < 1e-12);
        assert!((seq.standard_errors()[0] - parts.standard_errors()[0]).abs() < 1e-12);
    }
}
