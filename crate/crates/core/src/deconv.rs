//! Inverting transfer maps: unbiased estimators of input moments.
//!
//! A bound transfer map is block lower-triangular when blocks are grouped by
//! key weight. Sum maps have identity diagonal blocks and are solved by
//! substitution, weight by weight. Product maps are block diagonal with
//! non-trivial blocks, each inverted exactly over the rationals. Because the
//! inverse is linear, applying it to the moments of a single observation
//! gives an unbiased estimate of the input moments.

use rayon::prelude::*;

use num::{One, Zero};

use crate::coeffring::{rational_to_f64, Rational};
use crate::error::{Error, Result};
use crate::momentspace::{BasisKey, MomentVector, Value};
use crate::transfer::TransferMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Multiply by the precomputed exact inverse.
    MatrixInverse,
    /// Forward substitution through identity diagonal blocks.
    WeightwiseBackSubstitution,
}

/// Invertibility of one weight block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockReport {
    pub weight: usize,
    pub size: usize,
    pub identity_diagonal: bool,
}

#[derive(Clone, Debug)]
pub struct Deconvolver {
    forward: TransferMap,
    matrix: Vec<Vec<Rational>>,
    inverse: Vec<Vec<Rational>>,
    inverse_f64: Vec<Vec<f64>>,
    strategy: Strategy,
    report: Vec<BlockReport>,
}

/// Gauss-Jordan inversion over the rationals; `None` when singular.
pub fn invert(matrix: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = matrix.len();
    let mut a: Vec<Vec<Rational>> = matrix.to_vec();
    let mut inv: Vec<Vec<Rational>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].recip();
        for j in 0..n {
            a[col][j] *= &p;
            inv[col][j] *= &p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                let (x, y) = (&a[col][j] * &f, &inv[col][j] * &f);
                a[r][j] -= x;
                inv[r][j] -= y;
            }
        }
    }
    Some(inv)
}

fn mat_mul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    (0..inner)
                        .filter(|&k| !row[k].is_zero() && !b[k][j].is_zero())
                        .fold(Rational::zero(), |acc, k| acc + &row[k] * &b[k][j])
                })
                .collect()
        })
        .collect()
}

impl Deconvolver {
    /// Prepares the inverse of a bound square map. Fails with
    /// [`Error::Singular`] naming the first weight block that cannot be
    /// inverted.
    pub fn new(forward: &TransferMap) -> Result<Self> {
        let matrix = forward.numeric()?;
        let keys = forward.output_basis();
        let weights: Vec<usize> = keys.iter().map(BasisKey::weight).collect();
        if !forward.is_weight_triangular() {
            let inverse = invert(&matrix).ok_or(Error::Singular {
                weight: forward.max_weight(),
            })?;
            return Ok(Self::assemble(forward, matrix, inverse, Strategy::MatrixInverse, Vec::new()));
        }

        let n = keys.len();
        let mut inverse = vec![vec![Rational::zero(); n]; n];
        let mut report = Vec::new();
        let mut all_identity = true;
        for w in 0..=forward.max_weight() {
            let idx: Vec<usize> = (0..n).filter(|&i| weights[i] == w).collect();
            let block: Vec<Vec<Rational>> = idx
                .iter()
                .map(|&i| idx.iter().map(|&j| matrix[i][j].clone()).collect())
                .collect();
            let identity = block.iter().enumerate().all(|(a, row)| {
                row.iter()
                    .enumerate()
                    .all(|(b, x)| if a == b { x.is_one() } else { x.is_zero() })
            });
            all_identity &= identity;
            let block_inv = invert(&block).ok_or(Error::Singular { weight: w })?;
            report.push(BlockReport {
                weight: w,
                size: idx.len(),
                identity_diagonal: identity,
            });
            // X_ww = B^-1; X_wv = -B^-1 sum_{v <= u < w} A_wu X_uv
            let lower: Vec<usize> = (0..n).filter(|&j| weights[j] < w).collect();
            let mut rhs: Vec<Vec<Rational>> = idx
                .iter()
                .map(|&i| {
                    lower
                        .iter()
                        .map(|&v| {
                            -lower
                                .iter()
                                .filter(|&&u| !matrix[i][u].is_zero())
                                .fold(Rational::zero(), |acc, &u| acc + &matrix[i][u] * &inverse[u][v])
                        })
                        .collect()
                })
                .collect();
            if !identity {
                rhs = mat_mul(&block_inv, &rhs);
            }
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    inverse[i][j] = block_inv[a][b].clone();
                }
                for (c, &v) in lower.iter().enumerate() {
                    inverse[i][v] = rhs[a][c].clone();
                }
            }
        }
        let strategy = if all_identity {
            Strategy::WeightwiseBackSubstitution
        } else {
            Strategy::MatrixInverse
        };
        Ok(Self::assemble(forward, matrix, inverse, strategy, report))
    }

    fn assemble(
        forward: &TransferMap,
        matrix: Vec<Vec<Rational>>,
        inverse: Vec<Vec<Rational>>,
        strategy: Strategy,
        report: Vec<BlockReport>,
    ) -> Self {
        let inverse_f64 = inverse
            .iter()
            .map(|r| r.iter().map(rational_to_f64).collect())
            .collect();
        Self {
            forward: forward.clone(),
            matrix,
            inverse,
            inverse_f64,
            strategy,
            report,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn condition_report(&self) -> &[BlockReport] {
        &self.report
    }

    pub fn forward(&self) -> &TransferMap {
        &self.forward
    }

    /// The exact inverse matrix in output-basis order.
    pub fn inverse(&self) -> &[Vec<Rational>] {
        &self.inverse
    }

    /// Inverse of the whole matrix by plain Gauss-Jordan, independent of
    /// the block structure.
    pub fn full_inverse(&self) -> Option<Vec<Vec<Rational>>> {
        invert(&self.matrix)
    }

    fn check_basis(&self, observed: &MomentVector) -> Result<MomentVector> {
        let v = if observed.max_weight() > self.forward.max_weight() {
            observed.truncate(self.forward.max_weight())
        } else {
            observed.clone()
        };
        if v.basis() != self.forward.output_basis() {
            return Err(Error::dim(format!(
                "observed moments cover weight {} but the map needs weight {}",
                observed.max_weight(),
                self.forward.max_weight()
            )));
        }
        Ok(v)
    }

    /// Input-moment estimate from observed output moments.
    pub fn deconvolve(&self, observed: &MomentVector) -> Result<MomentVector> {
        let v = self.check_basis(observed)?;
        let basis = self.forward.input_basis().to_vec();
        let values = match (self.strategy, v.is_exact()) {
            (Strategy::WeightwiseBackSubstitution, true) => {
                let y: Vec<&Rational> = v.values().iter().map(|x| x.as_exact().unwrap()).collect();
                let mut x: Vec<Rational> = Vec::with_capacity(y.len());
                for i in 0..y.len() {
                    let mut acc = y[i].clone();
                    for (j, xj) in x.iter().enumerate() {
                        if !self.matrix[i][j].is_zero() {
                            acc -= &self.matrix[i][j] * xj;
                        }
                    }
                    x.push(acc);
                }
                x.into_iter().map(Value::Exact).collect()
            }
            (Strategy::MatrixInverse, true) => self
                .inverse
                .iter()
                .map(|row| {
                    Value::Exact(
                        row.iter()
                            .zip(v.values())
                            .filter(|(c, _)| !c.is_zero())
                            .fold(Rational::zero(), |acc, (c, y)| acc + c * y.as_exact().unwrap()),
                    )
                })
                .collect(),
            (_, false) => {
                let y = v.to_f64();
                self.inverse_f64
                    .iter()
                    .map(|row| Value::Approx(row.iter().zip(&y).map(|(c, y)| c * y).sum()))
                    .collect()
            }
        };
        MomentVector::new(basis, values)
    }

    /// Deconvolves many observations at once.
    pub fn deconvolve_many(&self, observed: &[MomentVector]) -> Result<Vec<MomentVector>> {
        observed.par_iter().map(|o| self.deconvolve(o)).collect()
    }
}

/// Stage deconvolvers for a multistage forward pipeline, applied in
/// reverse order.
#[derive(Clone, Debug)]
pub struct StagedDeconvolver {
    stages: Vec<Deconvolver>,
}

impl StagedDeconvolver {
    /// `forward_stages` in the order they are applied to the input.
    pub fn new(forward_stages: &[TransferMap]) -> Result<Self> {
        let stages = forward_stages
            .iter()
            .map(Deconvolver::new)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[Deconvolver] {
        &self.stages
    }

    pub fn deconvolve(&self, observed: &MomentVector) -> Result<MomentVector> {
        self.stages
            .iter()
            .rev()
            .try_fold(observed.clone(), |v, stage| stage.deconvolve(&v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::{int, ratio};
    use crate::momentspace::{exact_mixed_moments, MomentKey};
    use crate::transfer::{gauss_sum, selfadjoint_product, wishart_product};

    #[test]
    fn small_product_inverse() {
        let map = wishart_product(2).unwrap().bind(2, 2).unwrap();
        let d = Deconvolver::new(&map).unwrap();
        assert_eq!(d.strategy(), Strategy::MatrixInverse);
        // block [[1, 1], [1/4, 1]] has determinant 3/4
        let w2: Vec<_> = d.inverse()[2..4].iter().map(|r| r[2..4].to_vec()).collect();
        assert_eq!(
            w2,
            vec![
                vec![ratio(4, 3), ratio(-4, 3)],
                vec![ratio(-1, 3), ratio(4, 3)]
            ]
        );
        assert_eq!(Some(d.inverse().to_vec()), d.full_inverse());
    }

    #[test]
    fn single_column_wishart_is_singular() {
        let map = wishart_product(2).unwrap().bind(2, 1).unwrap();
        assert!(matches!(Deconvolver::new(&map), Err(Error::Singular { weight: 2 })));
        // weight-3 moments of a two-column Wishart factor are linearly dependent
        let map = wishart_product(3).unwrap().bind(2, 2).unwrap();
        assert!(matches!(Deconvolver::new(&map), Err(Error::Singular { weight: 3 })));
        let map = selfadjoint_product(2).unwrap().bind(2, 1).unwrap();
        assert!(matches!(Deconvolver::new(&map), Err(Error::Singular { weight: 1 })));
    }

    #[test]
    fn sum_maps_use_substitution() {
        let map = gauss_sum(3, &int(1)).unwrap().bind(2, 3).unwrap();
        let d = Deconvolver::new(&map).unwrap();
        assert_eq!(d.strategy(), Strategy::WeightwiseBackSubstitution);
        assert!(d.condition_report().iter().all(|b| b.identity_diagonal));
        assert_eq!(Some(d.inverse().to_vec()), d.full_inverse());
    }

    #[test]
    fn round_trip_exact() {
        for map in [
            wishart_product(3).unwrap().bind(2, 3).unwrap(),
            gauss_sum(3, &ratio(1, 2)).unwrap().bind(2, 4).unwrap(),
        ] {
            let d = Deconvolver::new(&map).unwrap();
            let x = exact_mixed_moments(&[ratio(1, 3), int(2), ratio(-5, 7)], 3).unwrap();
            let y = map.apply(&x).unwrap();
            assert_eq!(d.deconvolve(&y).unwrap(), x);
        }
    }

    #[test]
    fn zero_matrix_image_recovers_constant() {
        let map = gauss_sum(3, &int(1)).unwrap().bind(2, 2).unwrap();
        let zero = MomentVector::from_fn(3, |k: &MomentKey| {
            if k.is_empty() {
                Value::one()
            } else {
                Value::zero()
            }
        });
        let observed = map.apply(&zero).unwrap();
        assert_eq!(Deconvolver::new(&map).unwrap().deconvolve(&observed).unwrap(), zero);
    }

    #[test]
    fn staged_inverse_reverses_order() {
        let a = wishart_product(2).unwrap().bind(2, 3).unwrap();
        let b = gauss_sum(2, &int(1)).unwrap().bind(2, 3).unwrap();
        let x = exact_mixed_moments(&[int(1), ratio(1, 2)], 2).unwrap();
        let y = b.apply(&a.apply(&x).unwrap()).unwrap();
        let staged = StagedDeconvolver::new(&[a, b]).unwrap();
        assert_eq!(staged.deconvolve(&y).unwrap(), x);
    }

    #[test]
    fn basis_mismatch_is_reported() {
        let map = wishart_product(3).unwrap().bind(2, 3).unwrap();
        let d = Deconvolver::new(&map).unwrap();
        let short = exact_mixed_moments(&[int(1)], 2).unwrap();
        assert!(matches!(d.deconvolve(&short), Err(Error::Dimension(_))));
    }
}
