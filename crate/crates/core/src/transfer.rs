//! Transfer maps: exact linear maps from input mixed moments to output
//! mixed moments.
//!
//! Each builder enumerates the Wick pairings of one model family and
//! collects, for every output key, the coefficient of every input key as a
//! Laurent polynomial in `n` and `N`:
//!
//! * [`wishart_product`]: `(1/N) R X S X^H`, summed over permutations.
//! * [`gauss_sum`]: `(1/N)(R + σX)(S + σX)^H`, summed over partial permutations.
//! * [`selfadjoint_product`]: `R X / √n` with a selfadjoint Gaussian `X`.
//! * [`selfadjoint_sum`]: `(R + σX)/√n`, with input moments those of `R/√n`.
//!
//! Maps are built symbolically and cached per output key; [`TransferMap::bind`]
//! substitutes concrete dimensions. The constant 1 lives in the empty-key
//! column, so affine relations compose as plain matrix products.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use num::{One, Zero};
use rayon::prelude::*;

use crate::coeffring::{format_rational, parse_rational, CoeffPoly, Rational, RenderFormat, RenderStyle};
use crate::combinat::{
    block_stats, deterministic_edges, enumerate_partial_permutations, enumerate_permutations,
    partial_permutations_of_size, rho_of, rho_sa_of, selfadjoint_det_edges, sigma_of, sigma_sa_of,
    touched_vertices, CircleLayout, PartialPermutation,
};
use crate::error::{Error, Result};
use crate::momentspace::{BasisKey, MomentKey, MomentVector, PairMomentKey, Value};

/// Environment variable naming a directory for serialized symbolic maps.
pub const CACHE_ENV: &str = "FINITE_RMT_CACHE";

/// Largest weight the factorial enumeration is meant for.
pub const SOFT_MAX_WEIGHT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapKind {
    WishartProduct,
    WishartProductTwoSided,
    GaussSum,
    SelfAdjointProduct,
    SelfAdjointSum,
    Identity,
    Scale,
    Composite,
}

impl MapKind {
    pub fn id(self) -> &'static str {
        match self {
            MapKind::WishartProduct => "wishart-product",
            MapKind::WishartProductTwoSided => "wishart-product-two-sided",
            MapKind::GaussSum => "gauss-sum",
            MapKind::SelfAdjointProduct => "selfadjoint-product",
            MapKind::SelfAdjointSum => "selfadjoint-sum",
            MapKind::Identity => "identity",
            MapKind::Scale => "scale",
            MapKind::Composite => "composite",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        [
            MapKind::WishartProduct,
            MapKind::WishartProductTwoSided,
            MapKind::GaussSum,
            MapKind::SelfAdjointProduct,
            MapKind::SelfAdjointSum,
            MapKind::Identity,
            MapKind::Scale,
            MapKind::Composite,
        ]
        .into_iter()
        .find(|k| k.id() == id)
    }

    /// Maps whose entries read better with `c = n/N`.
    pub fn is_rectangular(self) -> bool {
        matches!(
            self,
            MapKind::WishartProduct | MapKind::WishartProductTwoSided | MapKind::GaussSum
        )
    }
}

/// Parameters a map was built or bound with. `None` means symbolic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapParams {
    pub n: Option<u64>,
    pub big_n: Option<u64>,
    pub sigma2: Option<Rational>,
    pub max_weight: usize,
}

/// A matrix of [`CoeffPoly`] from moments keyed by `K` to moments keyed by
/// [`MomentKey`].
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMap<K: BasisKey = MomentKey> {
    kind: MapKind,
    params: MapParams,
    input_basis: Vec<K>,
    output_basis: Vec<MomentKey>,
    entries: Vec<Vec<CoeffPoly>>,
}

type Row<K> = BTreeMap<K, CoeffPoly>;

impl<K: BasisKey> TransferMap<K> {
    fn from_rows(kind: MapKind, params: MapParams, rows: Vec<Arc<Row<K>>>) -> Self {
        let input_basis = K::basis(params.max_weight);
        let output_basis = MomentKey::basis(params.max_weight);
        let index: HashMap<&K, usize> = input_basis.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let entries = rows
            .iter()
            .map(|row| {
                let mut dense = vec![CoeffPoly::zero(); input_basis.len()];
                for (k, c) in row.iter() {
                    dense[index[k]] = c.clone();
                }
                dense
            })
            .collect();
        Self {
            kind,
            params,
            input_basis,
            output_basis,
            entries,
        }
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }

    pub fn max_weight(&self) -> usize {
        self.params.max_weight
    }

    pub fn input_basis(&self) -> &[K] {
        &self.input_basis
    }

    pub fn output_basis(&self) -> &[MomentKey] {
        &self.output_basis
    }

    pub fn entries(&self) -> &[Vec<CoeffPoly>] {
        &self.entries
    }

    pub fn entry(&self, output: &MomentKey, input: &K) -> CoeffPoly {
        match (
            self.output_basis.binary_search(output),
            self.input_basis.binary_search(input),
        ) {
            (Ok(i), Ok(j)) => self.entries[i][j].clone(),
            _ => CoeffPoly::zero(),
        }
    }

    /// The row of one output key as `(input key, coefficient)` pairs with
    /// non-zero coefficients.
    pub fn row(&self, output: &MomentKey) -> Vec<(K, CoeffPoly)> {
        let Ok(i) = self.output_basis.binary_search(output) else {
            return Vec::new();
        };
        self.input_basis
            .iter()
            .zip(&self.entries[i])
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (k.clone(), c.clone()))
            .collect()
    }

    /// True when every entry is a number.
    pub fn is_bound(&self) -> bool {
        self.entries.iter().flatten().all(|c| c.as_constant().is_some())
    }

    /// Substitutes dimensions into every entry.
    pub fn bind(&self, n: u64, big_n: u64) -> Result<Self> {
        if n == 0 || big_n == 0 {
            return Err(Error::invalid("dimensions must be positive"));
        }
        let entries = self
            .entries
            .par_iter()
            .map(|row| row.iter().map(|c| CoeffPoly::constant(c.eval(n, big_n))).collect())
            .collect();
        Ok(Self {
            kind: self.kind,
            params: MapParams {
                n: Some(n),
                big_n: Some(big_n),
                ..self.params.clone()
            },
            input_basis: self.input_basis.clone(),
            output_basis: self.output_basis.clone(),
            entries,
        })
    }

    /// Exact numeric matrix of a bound map.
    pub fn numeric(&self) -> Result<Vec<Vec<Rational>>> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| {
                        c.as_constant()
                            .ok_or_else(|| Error::invalid("map has unbound dimensions"))
                    })
                    .collect()
            })
            .collect()
    }

    /// Output moments for an input vector; the input may extend past the
    /// map's weight, in which case it is truncated.
    pub fn apply(&self, input: &MomentVector<K>) -> Result<MomentVector> {
        let input = if input.max_weight() > self.max_weight() {
            input.truncate(self.max_weight())
        } else {
            input.clone()
        };
        if input.basis() != self.input_basis.as_slice() {
            return Err(Error::dim(format!(
                "input moments cover weight {} but the map needs weight {}",
                input.max_weight(),
                self.max_weight()
            )));
        }
        let matrix = self.numeric()?;
        let values = if input.is_exact() {
            matrix
                .iter()
                .map(|row| {
                    let sum = row
                        .iter()
                        .zip(input.values())
                        .filter(|(c, _)| !c.is_zero())
                        .fold(Rational::zero(), |acc, (c, v)| acc + c * v.as_exact().unwrap());
                    Value::Exact(sum)
                })
                .collect()
        } else {
            let x = input.to_f64();
            matrix
                .iter()
                .map(|row| {
                    Value::Approx(
                        row.iter()
                            .zip(&x)
                            .filter(|(c, _)| !c.is_zero())
                            .map(|(c, v)| crate::coeffring::rational_to_f64(c) * v)
                            .sum(),
                    )
                })
                .collect()
        };
        MomentVector::new(self.output_basis.clone(), values)
    }

    /// The composite `next ∘ self`.
    pub fn then(&self, next: &TransferMap) -> Result<TransferMap<K>> {
        if next.input_basis != self.output_basis {
            return Err(Error::dim(format!(
                "cannot compose maps of weight {} and {}",
                self.max_weight(),
                next.max_weight()
            )));
        }
        let entries = next
            .entries
            .par_iter()
            .map(|next_row| {
                (0..self.input_basis.len())
                    .map(|j| {
                        let mut acc = CoeffPoly::zero();
                        for (m, c) in next_row.iter().enumerate() {
                            if c.is_zero() || self.entries[m][j].is_zero() {
                                continue;
                            }
                            acc += &(c * &self.entries[m][j]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let same = |a: &Option<u64>, b: &Option<u64>| if a == b { *a } else { None };
        Ok(TransferMap {
            kind: MapKind::Composite,
            params: MapParams {
                n: same(&self.params.n, &next.params.n),
                big_n: same(&self.params.big_n, &next.params.big_n),
                sigma2: None,
                max_weight: self.max_weight(),
            },
            input_basis: self.input_basis.clone(),
            output_basis: self.output_basis.clone(),
            entries,
        })
    }

    /// True when each output key only reads input keys of its own weight.
    pub fn is_weight_preserving(&self) -> bool {
        self.output_basis.iter().zip(&self.entries).all(|(out, row)| {
            self.input_basis
                .iter()
                .zip(row)
                .all(|(k, c)| c.is_zero() || k.weight() == out.weight())
        })
    }

    /// True when no output key reads an input key of larger weight.
    pub fn is_weight_triangular(&self) -> bool {
        self.output_basis.iter().zip(&self.entries).all(|(out, row)| {
            self.input_basis
                .iter()
                .zip(row)
                .all(|(k, c)| c.is_zero() || k.weight() <= out.weight())
        })
    }

    /// Text serialization: a header followed by one line per output key
    /// with tab-separated entries in raw `n`, `N` notation.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<u64>| v.map_or("symbolic".to_string(), |x| x.to_string());
        let mut out = String::new();
        let _ = writeln!(out, "kind\t{}", self.kind.id());
        let _ = writeln!(out, "n\t{}", opt(self.params.n));
        let _ = writeln!(out, "N\t{}", opt(self.params.big_n));
        let sigma2 = self.params.sigma2.as_ref().map_or("-".to_string(), format_rational);
        let _ = writeln!(out, "sigma2\t{sigma2}");
        let _ = writeln!(out, "P\t{}", self.max_weight());
        let keys: Vec<String> = self.input_basis.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "inputs\t{}", keys.join("\t"));
        for (key, row) in self.output_basis.iter().zip(&self.entries) {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "row\t{key}\t{}", cells.join("\t"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Format(format!("transfer map: {msg}"));
        let mut lines = text.lines();
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            let (k, v) = line.split_once('\t').ok_or_else(|| bad("malformed header"))?;
            if k != name {
                return Err(bad(&format!("expected {name}, found {k}")));
            }
            Ok(v.to_string())
        };
        let kind = MapKind::from_id(&field("kind")?).ok_or_else(|| bad("unknown kind"))?;
        let dim = |v: String| -> Result<Option<u64>> {
            if v == "symbolic" {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| bad("bad dimension"))
            }
        };
        let n = dim(field("n")?)?;
        let big_n = dim(field("N")?)?;
        let sigma2 = match field("sigma2")?.as_str() {
            "-" => None,
            s => Some(parse_rational(s)?),
        };
        let max_weight: usize = field("P")?.parse().map_err(|_| bad("bad P"))?;
        let inputs = field("inputs")?;
        let input_basis = K::basis(max_weight);
        let listed: Vec<&str> = inputs.split('\t').collect();
        if listed.len() != input_basis.len()
            || listed.iter().zip(&input_basis).any(|(s, k)| *s != k.to_string())
        {
            return Err(bad("input basis does not match P"));
        }
        let output_basis = MomentKey::basis(max_weight);
        let mut entries = Vec::with_capacity(output_basis.len());
        for key in &output_basis {
            let line = lines.next().ok_or_else(|| bad("missing rows"))?;
            let mut cells = line.split('\t');
            if cells.next() != Some("row") || cells.next() != Some(key.to_string().as_str()) {
                return Err(bad(&format!("expected row for key {key}")));
            }
            let row: Vec<CoeffPoly> = cells.map(str::parse).collect::<Result<_>>()?;
            if row.len() != input_basis.len() {
                return Err(bad(&format!("row {key} has {} entries", row.len())));
            }
            entries.push(row);
        }
        Ok(Self {
            kind,
            params: MapParams {
                n,
                big_n,
                sigma2,
                max_weight,
            },
            input_basis,
            output_basis,
            entries,
        })
    }
}

impl TransferMap<MomentKey> {
    pub fn identity(max_weight: usize) -> Self {
        Self::diagonal(MapKind::Identity, max_weight, |_| CoeffPoly::one())
    }

    /// Diagonal map multiplying the moment of each key by `factor(key)`.
    pub fn diagonal(kind: MapKind, max_weight: usize, factor: impl Fn(&MomentKey) -> CoeffPoly) -> Self {
        let basis = MomentKey::basis(max_weight);
        let entries = basis
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let mut row = vec![CoeffPoly::zero(); basis.len()];
                row[i] = factor(k);
                row
            })
            .collect();
        Self {
            kind,
            params: MapParams {
                n: None,
                big_n: None,
                sigma2: None,
                max_weight,
            },
            input_basis: basis.clone(),
            output_basis: basis,
            entries,
        }
    }

    /// Rescales moments of `A` into moments of `t A`: weight-`w` keys pick
    /// up `t^w`.
    pub fn weight_scale(max_weight: usize, t: &Rational) -> Self {
        Self::diagonal(MapKind::Scale, max_weight, |k| {
            CoeffPoly::constant(num::pow(t.clone(), k.weight()))
        })
    }

    /// Multiplies each key's moment by `t` per trace factor: converts
    /// normalized traces between two dimensions sharing nonzero spectra.
    pub fn trace_scale(max_weight: usize, t: &Rational) -> Self {
        Self::diagonal(MapKind::Scale, max_weight, |k| {
            CoeffPoly::constant(num::pow(t.clone(), k.len()))
        })
    }

    pub fn is_identity(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, row)| {
            row.iter().enumerate().all(|(j, c)| {
                if i == j {
                    c.as_constant().is_some_and(|q| q.is_one())
                } else {
                    c.is_zero()
                }
            })
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum RowKind {
    Wishart,
    GaussSum(Rational),
    SelfAdjointProduct,
    SelfAdjointSum(Rational),
}

type RowCache<K> = Mutex<HashMap<(RowKind, MomentKey), Arc<Row<K>>>>;

fn one_sided_cache() -> &'static RowCache<MomentKey> {
    static CACHE: OnceLock<RowCache<MomentKey>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn two_sided_cache() -> &'static RowCache<PairMomentKey> {
    static CACHE: OnceLock<RowCache<PairMomentKey>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn cached_rows<K: BasisKey + 'static>(
    cache: &'static RowCache<K>,
    kind: RowKind,
    max_weight: usize,
    build: impl Fn(&MomentKey) -> Row<K> + Sync,
) -> Vec<Arc<Row<K>>> {
    if max_weight > SOFT_MAX_WEIGHT {
        eprintln!(
            "warning: building transfer maps beyond weight {SOFT_MAX_WEIGHT} enumerates \
             factorially many pairings"
        );
    }
    MomentKey::basis(max_weight)
        .par_iter()
        .map(|key| {
            let slot = (kind.clone(), key.clone());
            if let Some(row) = cache.lock().unwrap().get(&slot) {
                return row.clone();
            }
            let row = Arc::new(if key.is_empty() {
                let mut r = Row::new();
                r.insert(K::basis(0).remove(0), CoeffPoly::one());
                r
            } else {
                build(key)
            });
            cache.lock().unwrap().insert(slot, row.clone());
            row
        })
        .collect()
}

fn disk_cached<K: BasisKey>(name: String, build: impl FnOnce() -> TransferMap<K>) -> TransferMap<K> {
    let Some(dir) = std::env::var_os(CACHE_ENV).map(PathBuf::from) else {
        return build();
    };
    let path = dir.join(format!("{name}.txt"));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(map) = TransferMap::from_text(&text) {
            return map;
        }
    }
    let map = build();
    // A missing or read-only cache directory only costs a rebuild later.
    let _ = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(&path, map.to_text()));
    map
}

fn sigma_tag(sigma2: &Rational) -> String {
    format_rational(sigma2).replace('/', "_")
}

fn add_term<K: Ord>(row: &mut Row<K>, key: K, coeff: CoeffPoly) {
    let slot = row.entry(key).or_default();
    *slot += &coeff;
}

fn symbolic(max_weight: usize, sigma2: Option<Rational>) -> MapParams {
    MapParams {
        n: None,
        big_n: None,
        sigma2,
        max_weight,
    }
}

fn check_weight(max_weight: usize) -> Result<()> {
    if max_weight == 0 {
        return Err(Error::invalid("maximum weight must be at least 1"));
    }
    Ok(())
}

fn check_sigma2(sigma2: &Rational) -> Result<()> {
    if sigma2 < &Rational::zero() {
        return Err(Error::invalid("noise variance must be non-negative"));
    }
    Ok(())
}

fn layout_doubled(key: &MomentKey) -> CircleLayout {
    CircleLayout::doubled(key.parts()).expect("key parts are positive")
}

fn wishart_pair_row(key: &MomentKey) -> Row<PairMomentKey> {
    let w = key.weight();
    let circles = key.len() as i32;
    let layout = layout_doubled(key);
    let none = Default::default();
    let mut row = Row::new();
    for pi in enumerate_permutations(w) {
        let pi = PartialPermutation::from_permutation(&pi);
        let rho = rho_of(&pi, &layout).expect("layout matches pairing");
        let stats = block_stats(&rho, &none, &layout).expect("blocks are parity pure");
        let coeff = CoeffPoly::monomial(
            Rational::one(),
            stats.l as i32 - circles,
            stats.k as i32 - w as i32,
        );
        let input = PairMomentKey::new(
            MomentKey::from_sizes(stats.odd_block_sizes),
            MomentKey::from_sizes(stats.even_block_sizes),
        );
        add_term(&mut row, input, coeff);
    }
    row
}

/// Symbolic map from `R` moments to moments of `(1/N) R X X^H`, with `R`
/// `n x n` and `X` an `n x N` standard complex Gaussian matrix.
pub fn wishart_product(max_weight: usize) -> Result<TransferMap> {
    check_weight(max_weight)?;
    Ok(disk_cached(format!("wishart-product-P{max_weight}"), || {
        let rows = cached_rows(one_sided_cache(), RowKind::Wishart, max_weight, |key| {
            let mut row = Row::new();
            for (pair, c) in wishart_pair_row(key) {
                add_term(&mut row, pair.r, c);
            }
            row
        });
        TransferMap::from_rows(MapKind::WishartProduct, symbolic(max_weight, None), rows)
    }))
}

/// Symbolic map from products `R_a S_b` to moments of `(1/N) R X S X^H`,
/// with `S` an `N x N` matrix normalized by `N`.
pub fn wishart_product_two_sided(max_weight: usize) -> Result<TransferMap<PairMomentKey>> {
    check_weight(max_weight)?;
    Ok(disk_cached(format!("wishart-product-two-sided-P{max_weight}"), || {
        let rows = cached_rows(two_sided_cache(), RowKind::Wishart, max_weight, wishart_pair_row);
        TransferMap::from_rows(MapKind::WishartProductTwoSided, symbolic(max_weight, None), rows)
    }))
}

/// Symbolic map from moments of `(1/N) R S^H` to moments of
/// `(1/N)(R + σX)(S + σX)^H` for `n x N` matrices `R`, `S`.
pub fn gauss_sum(max_weight: usize, sigma2: &Rational) -> Result<TransferMap> {
    check_weight(max_weight)?;
    check_sigma2(sigma2)?;
    let kind = RowKind::GaussSum(sigma2.clone());
    Ok(disk_cached(
        format!("gauss-sum-P{max_weight}-s{}", sigma_tag(sigma2)),
        || {
            let rows = cached_rows(one_sided_cache(), kind, max_weight, |key| gauss_sum_row(key, sigma2));
            TransferMap::from_rows(MapKind::GaussSum, symbolic(max_weight, Some(sigma2.clone())), rows)
        },
    ))
}

fn gauss_sum_row(key: &MomentKey, sigma2: &Rational) -> Row<MomentKey> {
    let w = key.weight();
    let circles = key.len() as i32;
    let layout = layout_doubled(key);
    let mut row = Row::new();
    for pi in enumerate_partial_permutations(w, false) {
        let m = pi.size();
        if m > 0 && sigma2.is_zero() {
            continue;
        }
        let det = deterministic_edges(&pi);
        let rho = rho_of(&pi, &layout).expect("layout matches pairing");
        let sigma = sigma_of(&pi, &layout, &det).expect("edges are consistent");
        let stats = block_stats(&rho, &det, &layout).expect("blocks are parity pure");
        let n_exp = -circles + stats.l as i32 - stats.ld as i32 + sigma.num_blocks() as i32;
        let big_n_exp = -(m as i32) + stats.k as i32 - stats.kd as i32;
        let coeff = CoeffPoly::monomial(num::pow(sigma2.clone(), m), n_exp, big_n_exp);
        let input = MomentKey::from_sizes(sigma.block_sizes().iter().map(|s| s / 2).collect());
        add_term(&mut row, input, coeff);
    }
    row
}

/// Symbolic map from `R` moments to moments of `R X / √n` with `X` an
/// `n x n` standard selfadjoint Gaussian matrix. Odd-weight rows vanish.
pub fn selfadjoint_product(max_weight: usize) -> Result<TransferMap> {
    check_weight(max_weight)?;
    Ok(disk_cached(format!("selfadjoint-product-P{max_weight}"), || {
        let rows = cached_rows(one_sided_cache(), RowKind::SelfAdjointProduct, max_weight, |key| {
            let w = key.weight();
            let mut row = Row::new();
            if w % 2 == 1 {
                return row;
            }
            let circles = key.len() as i32;
            let layout = CircleLayout::new(key.parts().to_vec()).expect("positive parts");
            let half = (w / 2) as i32;
            let weight = Rational::new(1.into(), num::BigInt::from(2).pow(half as u32));
            for pi in partial_permutations_of_size(w, w / 2, true) {
                let rho = rho_sa_of(&pi, &layout).expect("disjoint pairing");
                let coeff = CoeffPoly::monomial(
                    weight.clone(),
                    rho.num_blocks() as i32 - half - circles,
                    0,
                );
                add_term(&mut row, MomentKey::from_sizes(rho.block_sizes()), coeff);
            }
            row
        });
        TransferMap::from_rows(MapKind::SelfAdjointProduct, symbolic(max_weight, None), rows)
    }))
}

/// Symbolic map from moments of `R/√n` to moments of `(R + σX)/√n` with
/// `X` an `n x n` standard selfadjoint Gaussian matrix.
pub fn selfadjoint_sum(max_weight: usize, sigma2: &Rational) -> Result<TransferMap> {
    check_weight(max_weight)?;
    check_sigma2(sigma2)?;
    let kind = RowKind::SelfAdjointSum(sigma2.clone());
    Ok(disk_cached(
        format!("selfadjoint-sum-P{max_weight}-s{}", sigma_tag(sigma2)),
        || {
            let rows = cached_rows(one_sided_cache(), kind, max_weight, |key| {
                let circles = key.len() as i32;
                let layout = CircleLayout::new(key.parts().to_vec()).expect("positive parts");
                let half_sigma2 = sigma2 / Rational::from_integer(2.into());
                let mut row = Row::new();
                for pi in enumerate_partial_permutations(key.weight(), true) {
                    let m = pi.size();
                    if m > 0 && sigma2.is_zero() {
                        continue;
                    }
                    let det = selfadjoint_det_edges(&pi);
                    let rho = rho_sa_of(&pi, &layout).expect("disjoint pairing");
                    let sigma = sigma_sa_of(&pi, &layout).expect("disjoint pairing");
                    let d = rho.blocks_meeting(&touched_vertices(&det, &layout));
                    let n_exp = -(m as i32) + rho.num_blocks() as i32 - d as i32 - circles
                        + sigma.num_blocks() as i32;
                    let coeff = CoeffPoly::monomial(num::pow(half_sigma2.clone(), m), n_exp, 0);
                    add_term(&mut row, MomentKey::from_sizes(sigma.block_sizes()), coeff);
                }
                row
            });
            TransferMap::from_rows(
                MapKind::SelfAdjointSum,
                symbolic(max_weight, Some(sigma2.clone())),
                rows,
            )
        },
    ))
}

/// `E tr((1/N) D X E X^H)^p` computed straight from the permutation sum,
/// given the mixed moments of `D` (`n x n`) and `E` (`N x N`).
pub fn corr_wishart_moment(
    d: &MomentVector,
    e: &MomentVector,
    n: u64,
    big_n: u64,
    p: usize,
) -> Result<Value> {
    if d.max_weight() < p || e.max_weight() < p {
        return Err(Error::dim(format!("moments of D and E are needed up to weight {p}")));
    }
    let layout = CircleLayout::doubled(&[p])?;
    let (n_q, big_n_q) = (
        Rational::from_integer(n.into()),
        Rational::from_integer(big_n.into()),
    );
    let mut total = Value::zero();
    for pi in enumerate_permutations(p) {
        let rho = rho_of(&PartialPermutation::from_permutation(&pi), &layout)?;
        let stats = block_stats(&rho, &Default::default(), &layout)?;
        let coeff = pow_signed(&big_n_q, stats.k as i32 - p as i32)
            * pow_signed(&n_q, stats.l as i32 - 1);
        let dv = d.get(&MomentKey::from_sizes(stats.odd_block_sizes)).unwrap();
        let ev = e.get(&MomentKey::from_sizes(stats.even_block_sizes)).unwrap();
        total = &total + &(dv * ev).scale(&coeff);
    }
    Ok(total)
}

fn pow_signed(q: &Rational, e: i32) -> Rational {
    let m = num::pow(q.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        m.recip()
    } else {
        m
    }
}

/// How coefficients are printed by [`emit_formula`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormulaStyle {
    pub format: RenderFormat,
    pub style: RenderStyle,
}

impl FormulaStyle {
    /// `c`-substitution for maps with two dimensions, raw otherwise.
    pub fn default_for(kind: MapKind, format: RenderFormat) -> Self {
        let style = if kind.is_rectangular() {
            RenderStyle::CSubstituted
        } else {
            RenderStyle::Raw
        };
        Self { format, style }
    }
}

fn paren(text: &str, format: RenderFormat) -> String {
    match format {
        RenderFormat::Plain => format!("({text})"),
        RenderFormat::Latex => format!("\\left({text}\\right)"),
    }
}

/// Renders `coeff * symbol` the way formula lists print it.
fn term(coeff: &CoeffPoly, symbol: &str, fs: FormulaStyle) -> (bool, String) {
    let single = coeff.len() == 1;
    let negative = single && coeff.terms().next().is_some_and(|(_, q)| q < &Rational::zero());
    let body = if negative { -coeff } else { coeff.clone() };
    let text = body.render(fs.style, fs.format);
    let rendered = if symbol.is_empty() {
        if single {
            text
        } else {
            paren(&text, fs.format)
        }
    } else if body.as_constant().is_some_and(|q| q.is_one()) {
        symbol.to_string()
    } else if single {
        format!("{text}{symbol}")
    } else {
        format!("{}{symbol}", paren(&text, fs.format))
    };
    (negative, rendered)
}

fn output_symbol(key: &MomentKey) -> String {
    let parts: Vec<String> = key.parts().iter().map(ToString::to_string).collect();
    format!("M_{{{}}}", parts.join(","))
}

fn input_symbol<K: BasisKey>(key: &K, letter: &str) -> String {
    let s = key.mixed_symbol(letter);
    if s.is_empty() {
        "1".to_string()
    } else {
        s
    }
}

fn row_formula<K: BasisKey>(out: &MomentKey, mut row: Vec<(K, CoeffPoly)>, letter: &str, fs: FormulaStyle) -> String {
    row.sort_by(|(a, _), (b, _)| b.weight().cmp(&a.weight()).then(a.cmp(b)));
    let mut text = format!("{} = ", output_symbol(out));
    if row.is_empty() {
        text.push('0');
    }
    for (i, (key, coeff)) in row.iter().enumerate() {
        let (negative, body) = term(coeff, &key.symbol(letter), fs);
        match (i, negative) {
            (0, false) => {}
            (0, true) => text.push('-'),
            (_, false) => text.push_str(" + "),
            (_, true) => text.push_str(" - "),
        }
        text.push_str(&body);
    }
    text
}

/// One line per nonempty output key: `M_{2} = D_{2} + (2+2c)D_{1} + (1+c)`.
/// Terms are ordered by input weight, heaviest first.
pub fn formula_lines<K: BasisKey>(map: &TransferMap<K>, letter: &str, fs: FormulaStyle) -> Vec<String> {
    map.output_basis()
        .iter()
        .filter(|k| !k.is_empty())
        .map(|out| row_formula(out, map.row(out), letter, fs))
        .collect()
}

fn column(symbols: &[String], format: RenderFormat) -> String {
    match format {
        RenderFormat::Plain => format!("[{}]", symbols.join("; ")),
        RenderFormat::Latex => format!(
            "\\left(\\begin{{array}}{{c}} {} \\end{{array}}\\right)",
            symbols.join(" \\\\ ")
        ),
    }
}

/// Renders a map: identity maps as `M_{p} = D_{p}` lines, weight-preserving
/// maps as one matrix equation per weight, anything else as formula lists.
pub fn emit_formula<K: BasisKey>(map: &TransferMap<K>, fs: FormulaStyle) -> String {
    let letter = match map.kind() {
        MapKind::GaussSum | MapKind::SelfAdjointSum | MapKind::Identity => "D",
        _ => "R",
    };
    let identity = map.output_basis().len() == map.input_basis().len()
        && map.output_basis().iter().all(|out| {
            let row = map.row(out);
            row.len() == 1
                && row[0].0.to_string() == out.to_string()
                && row[0].1.as_constant().is_some_and(|q| q.is_one())
        });
    let mut lines = Vec::new();
    if identity {
        for out in map.output_basis().iter().filter(|k| !k.is_empty()) {
            lines.push(format!("{} = {}", output_symbol(out), out.symbol("D")));
        }
    } else if !map.is_weight_preserving() {
        lines = formula_lines(map, letter, fs);
    } else {
        for w in 1..=map.max_weight() {
            let outs: Vec<&MomentKey> = map.output_basis().iter().filter(|k| k.weight() == w).collect();
            let ins: Vec<&K> = map.input_basis().iter().filter(|k| k.weight() == w).collect();
            let rows: Vec<Vec<CoeffPoly>> = outs
                .iter()
                .map(|o| ins.iter().map(|i| map.entry(o, i)).collect())
                .collect();
            let zero_rows: Vec<&&MomentKey> = outs
                .iter()
                .zip(&rows)
                .filter(|(_, r)| r.iter().all(CoeffPoly::is_zero))
                .map(|(o, _)| o)
                .collect();
            if zero_rows.len() == outs.len() {
                for o in outs {
                    lines.push(format!("{} = 0", output_symbol(o)));
                }
                continue;
            }
            if outs.len() == 1 {
                lines.push(row_formula(outs[0], map.row(outs[0]), letter, fs));
                continue;
            }
            let lhs: Vec<String> = outs.iter().map(|k| output_symbol(k)).collect();
            let rhs: Vec<String> = ins.iter().map(|k| input_symbol(*k, letter)).collect();
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| r.iter().map(|c| c.render(fs.style, fs.format)).collect())
                .collect();
            let matrix = match fs.format {
                RenderFormat::Plain => format!(
                    "[{}]",
                    cells.iter().map(|r| r.join(", ")).collect::<Vec<_>>().join("; ")
                ),
                RenderFormat::Latex => format!(
                    "\\left(\\begin{{array}}{{{}}} {} \\end{{array}}\\right)",
                    "c".repeat(ins.len()),
                    cells.iter().map(|r| r.join(" & ")).collect::<Vec<_>>().join(" \\\\ ")
                ),
            };
            lines.push(format!(
                "{} = {} {}",
                column(&lhs, fs.format),
                matrix,
                column(&rhs, fs.format)
            ));
        }
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
