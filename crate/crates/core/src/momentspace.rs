//! Mixed-moment keys, bases and moment vectors.
//!
//! A mixed moment `M_{p1,...,pk}` is the expectation of a product of
//! normalized traces `tr(A^{p1}) ... tr(A^{pk})`. Its key is the multiset of
//! powers, stored weakly decreasing. The empty key stands for the constant 1
//! so that affine moment relations become linear.
//!
//! Two-sided models carry separate moments for a left and a right factor;
//! [`PairMomentKey`] indexes products of one moment of each.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Mul};
use std::str::FromStr;

use itertools::Itertools;
use nalgebra::DMatrix;
use num::complex::Complex64;
use num::{One, Zero};

use crate::coeffring::{format_rational, parse_rational, rational_to_f64, Rational};
use crate::combinat::SetPartition;
use crate::error::{Error, Result};

/// Keys that index a moment basis.
pub trait BasisKey:
    Clone + Ord + Eq + Hash + fmt::Display + fmt::Debug + FromStr<Err = Error> + Send + Sync
{
    /// Total weight, which decides the block structure of transfer maps.
    fn weight(&self) -> usize;

    /// All keys of weight at most `max_weight`, in canonical order.
    fn basis(max_weight: usize) -> Vec<Self>;

    /// Formula symbol such as `D_{2}D_{1}^{2}`; empty for the empty key.
    fn symbol(&self, letter: &str) -> String;

    /// Mixed-moment symbol such as `R_{2,1}`, used as a matrix column label.
    fn mixed_symbol(&self, letter: &str) -> String {
        self.symbol(letter)
    }
}

fn product_symbol(key: &MomentKey, letter: &str) -> String {
    let mut out = String::new();
    for (part, run) in key.parts().iter().chunk_by(|p| **p).into_iter().map(|(p, g)| (p, g.count())) {
        out.push_str(&format!("{letter}_{{{part}}}"));
        if run > 1 {
            out.push_str(&format!("^{{{run}}}"));
        }
    }
    out
}

/// A weakly decreasing list of positive trace powers.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MomentKey {
    parts: Vec<usize>,
}

impl MomentKey {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::invalid("moment key parts must be positive"));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    /// Builds a key from block sizes, which are always positive.
    pub(crate) fn from_sizes(mut parts: Vec<usize>) -> Self {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self { parts }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(p: usize) -> Self {
        assert!(p > 0);
        Self { parts: vec![p] }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    /// Multiset union of the parts.
    pub fn join(&self, other: &MomentKey) -> MomentKey {
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&other.parts);
        Self::from_sizes(parts)
    }

    /// Multiplies every part by `factor`.
    pub fn scaled(&self, factor: usize) -> MomentKey {
        Self {
            parts: self.parts.iter().map(|p| p * factor).collect(),
        }
    }
}

impl BasisKey for MomentKey {
    fn weight(&self) -> usize {
        self.parts.iter().sum()
    }

    fn symbol(&self, letter: &str) -> String {
        product_symbol(self, letter)
    }

    fn mixed_symbol(&self, letter: &str) -> String {
        let parts: Vec<String> = self.parts.iter().map(ToString::to_string).collect();
        format!("{letter}_{{{}}}", parts.join(","))
    }

    fn basis(max_weight: usize) -> Vec<Self> {
        (0..=max_weight)
            .flat_map(partitions_of)
            .map(|parts| MomentKey { parts })
            .collect()
    }
}

/// Partitions of `w` in decreasing lexicographic order.
pub fn partitions_of(w: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=max.min(rest)).rev() {
            cur.push(part);
            rec(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(w, w, &mut Vec::new(), &mut out);
    out
}

impl Ord for MomentKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight()
            .cmp(&other.weight())
            .then_with(|| other.parts.cmp(&self.parts))
    }
}

impl PartialOrd for MomentKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("-");
        }
        let text: Vec<String> = self.parts.iter().map(ToString::to_string).collect();
        f.write_str(&text.join(","))
    }
}

impl fmt::Debug for MomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl FromStr for MomentKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" || s == "()" {
            return Ok(Self::empty());
        }
        let inner = s
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(s);
        let mut parts = Vec::new();
        let mut offset = 0;
        for piece in inner.split(',') {
            let p: usize = piece
                .trim()
                .parse()
                .map_err(|_| Error::parse(offset, format!("bad key part {piece:?}")))?;
            if p == 0 {
                return Err(Error::parse(offset, "key parts must be positive"));
            }
            parts.push(p);
            offset += piece.len() + 1;
        }
        let key = Self::from_sizes(parts.clone());
        if key.parts != parts {
            return Err(Error::parse(0, format!("key {s:?} is not weakly decreasing")));
        }
        Ok(key)
    }
}

/// A product of a left-factor moment and a right-factor moment.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PairMomentKey {
    pub r: MomentKey,
    pub s: MomentKey,
}

impl PairMomentKey {
    pub fn new(r: MomentKey, s: MomentKey) -> Self {
        Self { r, s }
    }
}

impl BasisKey for PairMomentKey {
    /// The larger of the two side weights, so that the basis up to `P`
    /// holds every pair with both sides of weight at most `P`.
    fn weight(&self) -> usize {
        self.r.weight().max(self.s.weight())
    }

    /// Left moments use `R`, right moments `S`; `letter` is ignored.
    fn symbol(&self, _letter: &str) -> String {
        format!("{}{}", product_symbol(&self.r, "R"), product_symbol(&self.s, "S"))
    }

    fn basis(max_weight: usize) -> Vec<Self> {
        let one = MomentKey::basis(max_weight);
        let mut out: Vec<_> = one
            .iter()
            .flat_map(|r| one.iter().map(move |s| PairMomentKey::new(r.clone(), s.clone())))
            .collect();
        out.sort();
        out
    }
}

impl Ord for PairMomentKey {
    fn cmp(&self, other: &Self) -> Ordering {
        let total = |k: &Self| k.r.weight() + k.s.weight();
        self.weight()
            .cmp(&other.weight())
            .then_with(|| total(self).cmp(&total(other)))
            .then_with(|| other.r.weight().cmp(&self.r.weight()))
            .then_with(|| self.r.cmp(&other.r))
            .then_with(|| self.s.cmp(&other.s))
    }
}

impl PartialOrd for PairMomentKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PairMomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.r, self.s)
    }
}

impl fmt::Debug for PairMomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl FromStr for PairMomentKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (r, rest) = s
            .split_once('|')
            .ok_or_else(|| Error::parse(0, format!("pair key {s:?} needs a '|'")))?;
        Ok(Self::new(r.parse()?, rest.parse()?))
    }
}

/// A moment value, exact when it came from exact arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Approx(f64),
}

impl Value {
    pub fn zero() -> Self {
        Value::Exact(Rational::zero())
    }

    pub fn one() -> Self {
        Value::Exact(Rational::one())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => rational_to_f64(q),
            Value::Approx(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Approx(_) => None,
        }
    }

    pub fn scale(&self, q: &Rational) -> Value {
        match self {
            Value::Exact(v) => Value::Exact(v * q),
            Value::Approx(x) => Value::Approx(x * rational_to_f64(q)),
        }
    }

    /// Exact rendering `num/den` or the shortest round-tripping decimal.
    pub fn render(&self) -> String {
        match self {
            Value::Exact(q) => format_rational(q),
            Value::Approx(x) => format!("{x:?}"),
        }
    }

    /// Integers and `a/b` fractions parse as exact, anything with a decimal
    /// point or exponent as approximate.
    pub fn parse(text: &str) -> Result<Value> {
        let t = text.trim();
        let decimal = t.contains(['.', 'e', 'E']) && !t.contains('/');
        if decimal {
            let x: f64 = t
                .parse()
                .map_err(|_| Error::Format(format!("bad value {t:?}")))?;
            if !x.is_finite() {
                return Err(Error::Format(format!("non-finite value {t:?}")));
            }
            Ok(Value::Approx(x))
        } else {
            parse_rational(t)
                .map(Value::Exact)
                .map_err(|_| Error::Format(format!("bad value {t:?}")))
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl From<Rational> for Value {
    fn from(q: Rational) -> Self {
        Value::Exact(q)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Approx(x)
    }
}

impl Add<&Value> for &Value {
    type Output = Value;

    fn add(self, rhs: &Value) -> Value {
        match (self, rhs) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
            _ => Value::Approx(self.to_f64() + rhs.to_f64()),
        }
    }
}

impl Mul<&Value> for &Value {
    type Output = Value;

    fn mul(self, rhs: &Value) -> Value {
        match (self, rhs) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a * b),
            _ => Value::Approx(self.to_f64() * rhs.to_f64()),
        }
    }
}

/// Moment values on a canonical basis.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector<K: BasisKey = MomentKey> {
    basis: Vec<K>,
    values: Vec<Value>,
}

impl<K: BasisKey> MomentVector<K> {
    pub fn new(basis: Vec<K>, values: Vec<Value>) -> Result<Self> {
        if basis.len() != values.len() {
            return Err(Error::dim(format!(
                "{} keys but {} values",
                basis.len(),
                values.len()
            )));
        }
        if basis.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("basis must be strictly increasing in canonical order"));
        }
        Ok(Self { basis, values })
    }

    /// The full basis up to `max_weight`, valued by `f`.
    pub fn from_fn(max_weight: usize, mut f: impl FnMut(&K) -> Value) -> Self {
        let basis = K::basis(max_weight);
        let values = basis.iter().map(&mut f).collect();
        Self { basis, values }
    }

    /// Values for the full basis up to `max_weight`. A missing empty key
    /// defaults to 1; any other missing key is an error.
    pub fn from_map(max_weight: usize, mut map: BTreeMap<K, Value>) -> Result<Self> {
        let basis = K::basis(max_weight);
        if let Some(extra) = map.keys().find(|k| k.weight() > max_weight) {
            return Err(Error::Format(format!("key {extra} exceeds weight {max_weight}")));
        }
        let mut values = Vec::with_capacity(basis.len());
        for key in &basis {
            match map.remove(key) {
                Some(v) => values.push(v),
                None if key.weight() == 0 => values.push(Value::one()),
                None => return Err(Error::Format(format!("missing moment for key {key}"))),
            }
        }
        Ok(Self { basis, values })
    }

    pub fn basis(&self) -> &[K] {
        &self.basis
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn max_weight(&self) -> usize {
        self.basis.iter().map(BasisKey::weight).max().unwrap_or(0)
    }

    pub fn index_of(&self, key: &K) -> Option<usize> {
        self.basis.binary_search(key).ok()
    }

    pub fn get(&self, key: &K) -> Option<&Value> {
        self.index_of(key).map(|i| &self.values[i])
    }

    pub fn is_exact(&self) -> bool {
        self.values.iter().all(Value::is_exact)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(Value::to_f64).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Value)> {
        self.basis.iter().zip(&self.values)
    }

    /// Keeps keys of weight at most `max_weight`.
    pub fn truncate(&self, max_weight: usize) -> Self {
        let (basis, values) = self
            .iter()
            .filter(|(k, _)| k.weight() <= max_weight)
            .map(|(k, v)| (k.clone(), v.clone()))
            .unzip();
        Self { basis, values }
    }

    /// Componentwise mean of vectors sharing one basis.
    pub fn mean(vectors: &[Self]) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::invalid("cannot average an empty list"))?;
        if vectors.iter().any(|v| v.basis != first.basis) {
            return Err(Error::dim("moment vectors have different bases"));
        }
        let count = Rational::from_integer(vectors.len().into());
        let values = (0..first.len())
            .map(|i| {
                let sum = vectors
                    .iter()
                    .skip(1)
                    .fold(first.values[i].clone(), |acc, v| &acc + &v.values[i]);
                sum.scale(&count.recip())
            })
            .collect();
        Ok(Self {
            basis: first.basis.clone(),
            values,
        })
    }

    /// Text layout: one `key<TAB>value` line per key in basis order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.iter() {
            out.push_str(&format!("{k}\t{}\n", v.render()));
        }
        out
    }

    /// Parses the text layout. Blank lines and `#` comments are skipped; the
    /// basis is completed up to the largest weight present.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut max_weight = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(k), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Format(format!(
                    "line {}: expected `key value`",
                    lineno + 1
                )));
            };
            let key: K = k
                .parse()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
            let value = Value::parse(v)
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
            max_weight = max_weight.max(key.weight());
            if map.insert(key, value).is_some() {
                return Err(Error::Format(format!("line {}: duplicate key {k}", lineno + 1)));
            }
        }
        if map.is_empty() {
            return Err(Error::Format("no moments in input".into()));
        }
        Self::from_map(max_weight, map)
    }

    /// JSON object keyed by the rendered keys; exact values become strings.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        for (k, v) in self.iter() {
            let value = match v {
                Value::Exact(q) => serde_json::Value::String(format_rational(q)),
                Value::Approx(x) => serde_json::json!(x),
            };
            obj.insert(k.to_string(), value);
        }
        serde_json::Value::Object(obj)
    }

    pub fn from_json(json: &serde_json::Value) -> Result<Self> {
        let obj = json
            .as_object()
            .ok_or_else(|| Error::Format("expected a JSON object".into()))?;
        let mut map = BTreeMap::new();
        let mut max_weight = 0;
        for (k, v) in obj {
            let key: K = k.parse().map_err(|e| Error::Format(format!("key {k:?}: {e}")))?;
            let value = match v {
                serde_json::Value::String(s) => Value::parse(s)?,
                serde_json::Value::Number(x) => match x.as_i64() {
                    Some(i) => Value::Exact(Rational::from_integer(i.into())),
                    None => Value::Approx(x.as_f64().unwrap()),
                },
                other => return Err(Error::Format(format!("bad JSON value {other}"))),
            };
            max_weight = max_weight.max(key.weight());
            map.insert(key, value);
        }
        Self::from_map(max_weight, map)
    }
}

/// The mixed moment of a key from single-trace moments: the product of the
/// moments of its parts.
fn product_value(key: &MomentKey, single: &[Value]) -> Value {
    key.parts()
        .iter()
        .fold(Value::one(), |acc, &p| &acc * &single[p])
}

/// Mixed moments of a deterministic square matrix, `prod_i tr(A^{p_i})`.
/// Traces are multiplied as complex numbers and the real part is kept.
pub fn eval_mixed_moments(a: &DMatrix<Complex64>, max_weight: usize) -> Result<MomentVector> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::dim(format!(
            "moments need a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let traces = normalized_power_traces(a, max_weight);
    Ok(MomentVector::from_fn(max_weight, |k: &MomentKey| {
        let prod = k
            .parts()
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &p| acc * traces[p]);
        if k.is_empty() {
            Value::one()
        } else {
            Value::Approx(prod.re)
        }
    }))
}

/// `tr(A^p)` for `p = 0..=max_weight`, normalized by the dimension.
pub fn normalized_power_traces(a: &DMatrix<Complex64>, max_weight: usize) -> Vec<Complex64> {
    let dim = a.nrows() as f64;
    let mut out = vec![Complex64::new(1.0, 0.0)];
    let mut power = DMatrix::<Complex64>::identity(a.nrows(), a.nrows());
    for _ in 1..=max_weight {
        power = &power * a;
        out.push(power.trace() / dim);
    }
    out
}

/// Mixed moments of a matrix given by its eigenvalues.
pub fn eval_mixed_moments_from_eigenvalues(
    eigenvalues: &[f64],
    max_weight: usize,
) -> Result<MomentVector> {
    if eigenvalues.is_empty() {
        return Err(Error::dim("empty spectrum"));
    }
    let dim = eigenvalues.len() as f64;
    let single: Vec<Value> = (0..=max_weight)
        .map(|p| Value::Approx(eigenvalues.iter().map(|l| l.powi(p as i32)).sum::<f64>() / dim))
        .collect();
    Ok(MomentVector::from_fn(max_weight, |k: &MomentKey| product_value(k, &single)))
}

/// Exact mixed moments from rational eigenvalues.
pub fn exact_mixed_moments(eigenvalues: &[Rational], max_weight: usize) -> Result<MomentVector> {
    if eigenvalues.is_empty() {
        return Err(Error::dim("empty spectrum"));
    }
    let dim = Rational::from_integer(eigenvalues.len().into());
    let single: Vec<Value> = (0..=max_weight)
        .map(|p| {
            let sum = eigenvalues
                .iter()
                .fold(Rational::zero(), |acc, l| acc + num::pow(l.clone(), p));
            Value::Exact(sum / &dim)
        })
        .collect();
    Ok(MomentVector::from_fn(max_weight, |k: &MomentKey| product_value(k, &single)))
}

/// Two-sided input vector `R_a S_b` from independent left and right moments.
pub fn pair_moments(
    r: &MomentVector,
    s: &MomentVector,
    max_weight: usize,
) -> Result<MomentVector<PairMomentKey>> {
    if r.max_weight() < max_weight || s.max_weight() < max_weight {
        return Err(Error::dim(format!("pair moments need both sides up to weight {max_weight}")));
    }
    Ok(MomentVector::from_fn(max_weight, |k: &PairMomentKey| {
        r.get(&k.r).unwrap() * s.get(&k.s).unwrap()
    }))
}

/// Labelled deterministic matrices.
pub type DetMatrixSet = BTreeMap<String, DMatrix<Complex64>>;

/// `D_rho`: for each block, the normalized trace of the product of the
/// matrices labelling its elements (in increasing order), multiplied over
/// blocks. `word[i - 1]` labels ground element `i`.
pub fn d_rho(matrices: &DetMatrixSet, rho: &SetPartition, word: &[&str]) -> Result<Complex64> {
    if word.len() < rho.ground_size() {
        return Err(Error::dim(format!(
            "word of length {} for ground set of size {}",
            word.len(),
            rho.ground_size()
        )));
    }
    let mut total = Complex64::one();
    for block in rho.blocks() {
        let mut product: Option<DMatrix<Complex64>> = None;
        for &i in block {
            let name = word[i - 1];
            let m = matrices
                .get(name)
                .ok_or_else(|| Error::invalid(format!("no matrix bound to {name:?}")))?;
            product = Some(match product {
                None => m.clone(),
                Some(acc) => {
                    if acc.ncols() != m.nrows() {
                        return Err(Error::dim(format!(
                            "cannot multiply {}x{} by {}x{} ({name})",
                            acc.nrows(),
                            acc.ncols(),
                            m.nrows(),
                            m.ncols()
                        )));
                    }
                    acc * m
                }
            });
        }
        let product = product.expect("blocks are non-empty");
        if product.nrows() != product.ncols() {
            return Err(Error::dim(format!(
                "block {block:?} yields a non-square {}x{} product",
                product.nrows(),
                product.ncols()
            )));
        }
        total *= product.trace() / product.nrows() as f64;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::ratio;

    fn key(parts: &[usize]) -> MomentKey {
        MomentKey::new(parts.to_vec()).unwrap()
    }

    fn diag(values: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    #[test]
    fn one_sided_bases() {
        assert_eq!(
            MomentKey::basis(2),
            vec![key(&[]), key(&[1]), key(&[2]), key(&[1, 1])]
        );
        let b3 = MomentKey::basis(3);
        assert_eq!(b3.len(), 7);
        assert_eq!(&b3[4..], &[key(&[3]), key(&[2, 1]), key(&[1, 1, 1])]);
        assert_eq!(MomentKey::basis(6).len(), 1 + 1 + 2 + 3 + 5 + 7 + 11);
    }

    #[test]
    fn two_sided_basis() {
        let e = MomentKey::empty;
        let b = PairMomentKey::basis(1);
        assert_eq!(
            b,
            vec![
                PairMomentKey::new(e(), e()),
                PairMomentKey::new(key(&[1]), e()),
                PairMomentKey::new(e(), key(&[1])),
                PairMomentKey::new(key(&[1]), key(&[1])),
            ]
        );
        assert_eq!(PairMomentKey::basis(2).len(), 16);
    }

    #[test]
    fn key_text_round_trip() {
        for k in MomentKey::basis(5) {
            assert_eq!(k.to_string().parse::<MomentKey>().unwrap(), k);
        }
        for k in PairMomentKey::basis(3) {
            assert_eq!(k.to_string().parse::<PairMomentKey>().unwrap(), k);
        }
        assert_eq!("-".parse::<MomentKey>().unwrap(), MomentKey::empty());
        assert!("1,2".parse::<MomentKey>().is_err());
        assert!("2,0".parse::<MomentKey>().is_err());
        assert!("x".parse::<MomentKey>().is_err());
        assert!("2".parse::<PairMomentKey>().is_err());
    }

    #[test]
    fn identity_moments_are_one() {
        let m = eval_mixed_moments(&DMatrix::identity(2, 2), 3).unwrap();
        assert_eq!(m.get(&key(&[2, 1])).unwrap().to_f64(), 1.0);
        assert_eq!(m.get(&MomentKey::empty()).unwrap().to_f64(), 1.0);
    }

    #[test]
    fn diagonal_moments() {
        let m = eval_mixed_moments(&diag(&[1.0, 0.5]), 2).unwrap();
        assert!((m.get(&key(&[1])).unwrap().to_f64() - 0.75).abs() < 1e-15);
        assert!((m.get(&key(&[2])).unwrap().to_f64() - 0.625).abs() < 1e-15);
        assert!((m.get(&key(&[1, 1])).unwrap().to_f64() - 0.5625).abs() < 1e-15);
        let exact = exact_mixed_moments(&[ratio(1, 1), ratio(1, 2)], 2).unwrap();
        assert_eq!(exact.get(&key(&[2])).unwrap(), &Value::Exact(ratio(5, 8)));
        assert!(eval_mixed_moments(&DMatrix::zeros(2, 3), 2).is_err());
    }

    #[test]
    fn d_rho_examples() {
        let mut set = DetMatrixSet::new();
        set.insert("I".into(), DMatrix::identity(2, 2));
        set.insert("D".into(), diag(&[1.0, 0.5]));
        set.insert("E".into(), diag(&[2.0, 4.0]));
        let block = SetPartition::from_blocks(2, vec![vec![1, 2]]).unwrap();
        assert_eq!(d_rho(&set, &block, &["I", "I"]).unwrap().re, 1.0);
        let singles = SetPartition::from_blocks(2, vec![vec![1], vec![2]]).unwrap();
        assert_eq!(d_rho(&set, &singles, &["D", "E"]).unwrap().re, 0.75 * 3.0);
        let odd = SetPartition::from_blocks(4, vec![vec![1, 3]]).unwrap();
        assert_eq!(d_rho(&set, &odd, &["D", "", "D", ""]).unwrap().re, 0.625);
        set.insert("F".into(), DMatrix::zeros(3, 3));
        assert!(matches!(
            d_rho(&set, &block, &["D", "F"]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn text_and_json_round_trip() {
        let m = exact_mixed_moments(&[ratio(1, 1), ratio(1, 2)], 3).unwrap();
        let back = MomentVector::<MomentKey>::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        let back = MomentVector::<MomentKey>::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let approx = eval_mixed_moments_from_eigenvalues(&[0.3, 1.7], 2).unwrap();
        let back = MomentVector::<MomentKey>::from_text(&approx.to_text()).unwrap();
        assert_eq!(back, approx);
    }

    #[test]
    fn text_errors() {
        assert!(MomentVector::<MomentKey>::from_text("1\t1\n").is_ok());
        assert!(matches!(
            MomentVector::<MomentKey>::from_text("2\t1\n"),
            Err(Error::Format(_))
        ));
        assert!(MomentVector::<MomentKey>::from_text("1\tabc\n").is_err());
        assert!(MomentVector::<MomentKey>::from_text("1\t1\n1\t2\n").is_err());
        assert!(MomentVector::<MomentKey>::from_text("").is_err());
        assert!(MomentVector::<MomentKey>::from_text("1 2 3\n").is_err());
    }

    #[test]
    fn multiplicativity_and_eigenvalue_agreement() {
        let eig = [0.2, 1.3, 2.9];
        let m = eval_mixed_moments(&diag(&eig), 4).unwrap();
        let from_eig = eval_mixed_moments_from_eigenvalues(&eig, 4).unwrap();
        for (k, v) in m.iter() {
            let product: f64 = k.parts().iter().map(|&p| m.get(&MomentKey::single(p)).unwrap().to_f64()).product();
            assert!((v.to_f64() - product).abs() <= 1e-12 * product.abs().max(1.0));
            let other = from_eig.get(k).unwrap().to_f64();
            assert!((v.to_f64() - other).abs() <= 1e-12 * other.abs().max(1.0));
        }
    }

    #[test]
    fn mean_of_vectors() {
        let a = exact_mixed_moments(&[ratio(1, 1)], 1).unwrap();
        let b = exact_mixed_moments(&[ratio(3, 1)], 1).unwrap();
        let m = MomentVector::mean(&[a, b]).unwrap();
        assert_eq!(m.get(&key(&[1])).unwrap(), &Value::Exact(ratio(2, 1)));
    }
}
