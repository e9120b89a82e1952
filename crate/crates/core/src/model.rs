//! Model expressions, their text syntax, and compilation into transfer
//! pipelines.
//!
//! ```text
//! expr := term | "sum(" expr "," expr ")"
//! term := "det(" name "," R "x" C ")"
//!       | "gC(" n "," N ["," sigma] ")"
//!       | "gSA(" n ["," sigma] ")"
//!       | "wprod(" expr "," expr "," n "," N ")"
//!       | "chain(" expr { "," gC-term } ")"
//!       | "saprod(" expr "," n ")"
//!       | "sasum(" expr "," n ["," sigma] ")"
//! ```
//!
//! Every expression has a row dimension `n` and denotes an `n x n` matrix
//! whose mixed moments the model describes:
//!
//! * `det(D, n x n)` is `D`; a rectangular `det(D, n x N)` is `(1/N) D D^H`.
//! * `gC(n, N, s)` is `(1/N) s^2 X X^H`; `gSA(n, s)` is `s X / √n`.
//! * `sum(A, gC(n, N, s))` is `(1/N)(A + sX)(A + sX)^H` where `A` is the
//!   `n x N` matrix behind the left operand: a `det` leaf, another sum, or a
//!   `wprod`, which stands for `R^{1/2} X S^{1/2}`.
//! * `wprod(R, S, n, N)` is `(1/N) R X S X^H`; `S` must be a `det` leaf and
//!   is treated as the identity when named `I`.
//! * `chain(D, gC(n, N1), ...)` is `D (1/N1) X1 X1^H ...`, each factor scaled
//!   by its `s^2`.
//! * `saprod(R, n)` is `R X / √n`; `sasum(R, n, s)` is `R + s X / √n`.
//!
//! `I` and `0` name the identity and zero matrices unless bound otherwise.

use std::fmt;

use crate::coeffring::{format_rational, parse_rational, rational_to_decimal, Rational};
use crate::deconv::StagedDeconvolver;
use crate::error::{Error, Result};
use crate::momentspace::{
    eval_mixed_moments, pair_moments, DetMatrixSet, MomentKey, MomentVector, PairMomentKey, Value,
};
use crate::transfer::{
    gauss_sum, selfadjoint_product, selfadjoint_sum, wishart_product, wishart_product_two_sided,
    TransferMap,
};

use nalgebra::DMatrix;
use num::complex::Complex64;
use num::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelExpr {
    DeterministicRef {
        name: String,
        rows: usize,
        cols: usize,
    },
    GaussComplex {
        n: usize,
        big_n: usize,
        sigma: Rational,
    },
    GaussSelfAdjoint {
        n: usize,
        sigma: Rational,
    },
    GaussSum(Box<ModelExpr>, Box<ModelExpr>),
    CorrProduct {
        r: Box<ModelExpr>,
        s: Box<ModelExpr>,
        n: usize,
        big_n: usize,
    },
    Chain {
        base: Box<ModelExpr>,
        factors: Vec<ModelExpr>,
    },
    SelfAdjProduct {
        r: Box<ModelExpr>,
        n: usize,
    },
    SelfAdjSum {
        r: Box<ModelExpr>,
        n: usize,
        sigma: Rational,
    },
}

impl ModelExpr {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser { text, pos: 0 };
        let expr = p.expr()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(Error::parse(p.pos, "trailing input"));
        }
        expr.check()?;
        Ok(expr)
    }

    /// `(rows, cols)` of the matrix the expression stands for; moments are
    /// taken over `rows`.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            ModelExpr::DeterministicRef { rows, cols, .. } => (*rows, *cols),
            ModelExpr::GaussComplex { n, big_n, .. } => (*n, *big_n),
            ModelExpr::GaussSelfAdjoint { n, .. } => (*n, *n),
            ModelExpr::GaussSum(a, _) => a.dims(),
            ModelExpr::CorrProduct { n, big_n, .. } => (*n, *big_n),
            ModelExpr::Chain { base, .. } => (base.dims().0, base.dims().0),
            ModelExpr::SelfAdjProduct { n, .. } | ModelExpr::SelfAdjSum { n, .. } => (*n, *n),
        }
    }

    /// Validates dimensions and parameters throughout the tree.
    pub fn check(&self) -> Result<()> {
        let positive = |v: usize, what: &str| {
            if v == 0 {
                Err(Error::dim(format!("{what} must be positive")))
            } else {
                Ok(())
            }
        };
        let nonneg = |s: &Rational| {
            if s < &Rational::zero() {
                Err(Error::invalid("sigma must be non-negative"))
            } else {
                Ok(())
            }
        };
        let rows_match = |e: &ModelExpr, n: usize, what: &str| {
            let (r, c) = e.dims();
            if r != n {
                Err(Error::dim(format!("{what} is {r}x{c} but the model needs {n} rows")))
            } else {
                Ok(())
            }
        };
        match self {
            ModelExpr::DeterministicRef { rows, cols, .. } => {
                positive(*rows, "rows")?;
                positive(*cols, "columns")
            }
            ModelExpr::GaussComplex { n, big_n, sigma } => {
                positive(*n, "n")?;
                positive(*big_n, "N")?;
                nonneg(sigma)
            }
            ModelExpr::GaussSelfAdjoint { n, sigma } => {
                positive(*n, "n")?;
                nonneg(sigma)
            }
            ModelExpr::GaussSum(a, b) => {
                a.check()?;
                b.check()?;
                if a.dims() != b.dims() {
                    let ((r1, c1), (r2, c2)) = (a.dims(), b.dims());
                    return Err(Error::dim(format!("cannot add {r1}x{c1} and {r2}x{c2}")));
                }
                Ok(())
            }
            ModelExpr::CorrProduct { r, s, n, big_n } => {
                positive(*n, "n")?;
                positive(*big_n, "N")?;
                r.check()?;
                s.check()?;
                rows_match(r, *n, "left factor")?;
                let (sr, sc) = s.dims();
                if (sr, sc) != (*big_n, *big_n) {
                    return Err(Error::dim(format!(
                        "right factor is {sr}x{sc} but must be {big_n}x{big_n}"
                    )));
                }
                Ok(())
            }
            ModelExpr::Chain { base, factors } => {
                base.check()?;
                let n = base.dims().0;
                for f in factors {
                    f.check()?;
                    match f {
                        ModelExpr::GaussComplex { n: fn_, big_n, .. } if *fn_ != n => {
                            return Err(Error::dim(format!(
                                "chain factor is {fn_}x{big_n} but the base has {n} rows"
                            )))
                        }
                        ModelExpr::GaussComplex { .. } => {}
                        _ => return Err(Error::Unsupported("chain factors must be gC terms".into())),
                    }
                }
                Ok(())
            }
            ModelExpr::SelfAdjProduct { r, n } => {
                positive(*n, "n")?;
                r.check()?;
                rows_match(r, *n, "factor")
            }
            ModelExpr::SelfAdjSum { r, n, sigma } => {
                positive(*n, "n")?;
                nonneg(sigma)?;
                r.check()?;
                rows_match(r, *n, "summand")
            }
        }
    }

    /// Names of deterministic leaves, in order of appearance.
    pub fn leaf_names(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        self.visit_leaves(&mut |name, r, c| out.push((name.to_string(), r, c)));
        out
    }

    fn visit_leaves(&self, f: &mut impl FnMut(&str, usize, usize)) {
        match self {
            ModelExpr::DeterministicRef { name, rows, cols } => f(name, *rows, *cols),
            ModelExpr::GaussComplex { .. } | ModelExpr::GaussSelfAdjoint { .. } => {}
            ModelExpr::GaussSum(a, b) => {
                a.visit_leaves(f);
                b.visit_leaves(f);
            }
            ModelExpr::CorrProduct { r, s, .. } => {
                r.visit_leaves(f);
                s.visit_leaves(f);
            }
            ModelExpr::Chain { base, factors } => {
                base.visit_leaves(f);
                for x in factors {
                    x.visit_leaves(f);
                }
            }
            ModelExpr::SelfAdjProduct { r, .. } | ModelExpr::SelfAdjSum { r, .. } => r.visit_leaves(f),
        }
    }
}

fn render_sigma(s: &Rational) -> String {
    rational_to_decimal(s).unwrap_or_else(|| format_rational(s))
}

impl fmt::Display for ModelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sigma_suffix = |s: &Rational| {
            if s.is_one() {
                String::new()
            } else {
                format!(", {}", render_sigma(s))
            }
        };
        match self {
            ModelExpr::DeterministicRef { name, rows, cols } => write!(f, "det({name}, {rows}x{cols})"),
            ModelExpr::GaussComplex { n, big_n, sigma } => {
                write!(f, "gC({n}, {big_n}{})", sigma_suffix(sigma))
            }
            ModelExpr::GaussSelfAdjoint { n, sigma } => write!(f, "gSA({n}{})", sigma_suffix(sigma)),
            ModelExpr::GaussSum(a, b) => write!(f, "sum({a}, {b})"),
            ModelExpr::CorrProduct { r, s, n, big_n } => write!(f, "wprod({r}, {s}, {n}, {big_n})"),
            ModelExpr::Chain { base, factors } => {
                write!(f, "chain({base}")?;
                for x in factors {
                    write!(f, ", {x}")?;
                }
                f.write_str(")")
            }
            ModelExpr::SelfAdjProduct { r, n } => write!(f, "saprod({r}, {n})"),
            ModelExpr::SelfAdjSum { r, n, sigma } => write!(f, "sasum({r}, {n}{})", sigma_suffix(sigma)),
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn rest(&self) -> &str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(Error::parse(self.pos, format!("expected '{token}'")))
        }
    }

    fn peek(&mut self, token: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(token)
    }

    fn word(&mut self) -> Result<(usize, &str)> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(Error::parse(start, "expected a name"));
        }
        self.pos += len;
        Ok((start, &self.text[start..start + len]))
    }

    fn integer(&mut self, what: &str) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(Error::parse(start, format!("expected {what}")));
        }
        self.pos += len;
        self.text[start..start + len]
            .parse()
            .map_err(|_| Error::parse(start, format!("{what} out of range")))
    }

    fn sigma(&mut self) -> Result<Rational> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || "./eE+-".contains(c)))
            .unwrap_or(self.rest().len());
        let s = parse_rational(&self.text[start..start + len])
            .map_err(|_| Error::parse(start, "expected sigma as a decimal or fraction"))?;
        self.pos += len;
        if s < Rational::zero() {
            return Err(Error::parse(start, "sigma must be non-negative"));
        }
        Ok(s)
    }

    fn optional_sigma(&mut self) -> Result<Rational> {
        if self.peek(",") {
            self.expect(",")?;
            self.sigma()
        } else {
            Ok(Rational::one())
        }
    }

    fn expr(&mut self) -> Result<ModelExpr> {
        let (start, head) = self.word()?;
        let head = head.to_string();
        self.expect("(")?;
        let e = match head.as_str() {
            "sum" => {
                let a = self.expr()?;
                self.expect(",")?;
                let b = self.expr()?;
                ModelExpr::GaussSum(Box::new(a), Box::new(b))
            }
            "det" => {
                let (_, name) = self.word()?;
                let name = name.to_string();
                self.expect(",")?;
                let rows = self.integer("row count")?;
                self.expect("x")?;
                let cols = self.integer("column count")?;
                ModelExpr::DeterministicRef { name, rows, cols }
            }
            "gC" => {
                let n = self.integer("n")?;
                self.expect(",")?;
                let big_n = self.integer("N")?;
                let sigma = self.optional_sigma()?;
                ModelExpr::GaussComplex { n, big_n, sigma }
            }
            "gSA" => {
                let n = self.integer("n")?;
                let sigma = self.optional_sigma()?;
                ModelExpr::GaussSelfAdjoint { n, sigma }
            }
            "wprod" => {
                let r = self.expr()?;
                self.expect(",")?;
                let s = self.expr()?;
                self.expect(",")?;
                let n = self.integer("n")?;
                self.expect(",")?;
                let big_n = self.integer("N")?;
                ModelExpr::CorrProduct {
                    r: Box::new(r),
                    s: Box::new(s),
                    n,
                    big_n,
                }
            }
            "chain" => {
                let base = self.expr()?;
                let mut factors = Vec::new();
                while self.peek(",") {
                    self.expect(",")?;
                    self.skip_ws();
                    let at = self.pos;
                    let f = self.expr()?;
                    if !matches!(f, ModelExpr::GaussComplex { .. }) {
                        return Err(Error::parse(at, "chain factors must be gC terms"));
                    }
                    factors.push(f);
                }
                ModelExpr::Chain {
                    base: Box::new(base),
                    factors,
                }
            }
            "saprod" => {
                let r = self.expr()?;
                self.expect(",")?;
                let n = self.integer("n")?;
                ModelExpr::SelfAdjProduct { r: Box::new(r), n }
            }
            "sasum" => {
                let r = self.expr()?;
                self.expect(",")?;
                let n = self.integer("n")?;
                let sigma = self.optional_sigma()?;
                ModelExpr::SelfAdjSum {
                    r: Box::new(r),
                    n,
                    sigma,
                }
            }
            other => return Err(Error::parse(start, format!("unknown term '{other}'"))),
        };
        self.expect(")")?;
        Ok(e)
    }
}

/// One stage of a compiled pipeline: the symbolic map and its binding.
#[derive(Clone, Debug)]
pub struct Stage<K: crate::momentspace::BasisKey = MomentKey> {
    pub label: String,
    pub symbolic: TransferMap<K>,
    pub bound: TransferMap<K>,
}

impl Stage {
    fn fixed(label: String, map: TransferMap) -> Self {
        Self {
            label,
            symbolic: map.clone(),
            bound: map,
        }
    }
}

/// Where the pipeline's input moments come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputSource {
    /// Moments of a square deterministic matrix.
    Leaf { name: String, dim: usize },
    /// Moments of `(1/N) D D^H` for an `n x N` deterministic matrix.
    Gram { name: String, rows: usize, cols: usize },
    /// The zero matrix: only the empty key is non-zero.
    Zero,
    /// Products of moments of `R` (`n x n`) and `S` (`N x N`).
    Pair { r: String, s: String, n: usize, big_n: usize },
}

/// Input moments on either basis.
#[derive(Clone, Debug, PartialEq)]
pub enum InputMoments {
    One(MomentVector),
    Pair(MomentVector<PairMomentKey>),
}

/// A model compiled into transfer stages for a fixed maximum weight.
#[derive(Clone, Debug)]
pub struct CompiledModel {
    pub input: InputSource,
    pub pair_stage: Option<Stage<PairMomentKey>>,
    pub stages: Vec<Stage>,
    pub max_weight: usize,
}

fn dim(v: usize) -> u64 {
    v as u64
}

impl CompiledModel {
    pub fn compile(model: &ModelExpr, max_weight: usize) -> Result<Self> {
        model.check()?;
        if max_weight == 0 {
            return Err(Error::invalid("maximum weight must be at least 1"));
        }
        let mut c = CompiledModel {
            input: InputSource::Zero,
            pair_stage: None,
            stages: Vec::new(),
            max_weight,
        };
        c.square(model)?;
        Ok(c)
    }

    fn push(&mut self, label: String, symbolic: TransferMap, n: usize, big_n: usize) -> Result<()> {
        let bound = symbolic.bind(dim(n), dim(big_n))?;
        self.stages.push(Stage {
            label,
            symbolic,
            bound,
        });
        Ok(())
    }

    fn square(&mut self, e: &ModelExpr) -> Result<()> {
        let p = self.max_weight;
        match e {
            ModelExpr::DeterministicRef { name, rows, cols } => {
                self.input = if rows == cols {
                    InputSource::Leaf {
                        name: name.clone(),
                        dim: *rows,
                    }
                } else {
                    InputSource::Gram {
                        name: name.clone(),
                        rows: *rows,
                        cols: *cols,
                    }
                };
                Ok(())
            }
            ModelExpr::GaussComplex { n, big_n, sigma } => {
                self.input = InputSource::Zero;
                let s2 = sigma * sigma;
                self.push(format!("gauss sum n={n} N={big_n}"), gauss_sum(p, &s2)?, *n, *big_n)
            }
            ModelExpr::GaussSelfAdjoint { n, sigma } => {
                self.input = InputSource::Zero;
                let s2 = sigma * sigma;
                self.push(format!("selfadjoint sum n={n}"), selfadjoint_sum(p, &s2)?, *n, *n)
            }
            ModelExpr::GaussSum(a, b) => {
                let (base, noise) = match (a.as_ref(), b.as_ref()) {
                    (_, ModelExpr::GaussComplex { .. }) => (a, b),
                    (ModelExpr::GaussComplex { .. }, _) => (b, a),
                    (_, ModelExpr::GaussSelfAdjoint { .. }) | (ModelExpr::GaussSelfAdjoint { .. }, _) => {
                        return Err(Error::Unsupported(
                            "selfadjoint noise is added with sasum(expr, n, sigma)".into(),
                        ))
                    }
                    _ => {
                        return Err(Error::Unsupported(
                            "sum needs a gC term as one operand".into(),
                        ))
                    }
                };
                let ModelExpr::GaussComplex { n, big_n, sigma } = noise.as_ref() else {
                    unreachable!()
                };
                self.rectangular(base)?;
                let s2 = sigma * sigma;
                self.push(format!("gauss sum n={n} N={big_n}"), gauss_sum(p, &s2)?, *n, *big_n)
            }
            ModelExpr::CorrProduct { r, s, n, big_n } => match (r.as_ref(), s.as_ref()) {
                (_, ModelExpr::DeterministicRef { name, .. }) if name == "I" => {
                    self.square(r)?;
                    self.push(
                        format!("wishart product n={n} N={big_n}"),
                        wishart_product(p)?,
                        *n,
                        *big_n,
                    )
                }
                (ModelExpr::DeterministicRef { name: rn, .. }, ModelExpr::DeterministicRef { name: sn, .. }) => {
                    self.input = InputSource::Pair {
                        r: rn.clone(),
                        s: sn.clone(),
                        n: *n,
                        big_n: *big_n,
                    };
                    let symbolic = wishart_product_two_sided(p)?;
                    let bound = symbolic.bind(dim(*n), dim(*big_n))?;
                    self.pair_stage = Some(Stage {
                        label: format!("two-sided wishart product n={n} N={big_n}"),
                        symbolic,
                        bound,
                    });
                    Ok(())
                }
                _ => Err(Error::Unsupported(
                    "wprod with a right factor other than I needs deterministic factors on both sides".into(),
                )),
            },
            ModelExpr::Chain { base, factors } => {
                self.square(base)?;
                for f in factors {
                    let ModelExpr::GaussComplex { n, big_n, sigma } = f else {
                        return Err(Error::Unsupported("chain factors must be gC terms".into()));
                    };
                    self.push(format!("wishart product n={n} N={big_n}"), wishart_product(p)?, *n, *big_n)?;
                    if !sigma.is_one() {
                        let s2 = sigma * sigma;
                        self.stages.push(Stage::fixed(
                            format!("scale by sigma^2={}", format_rational(&s2)),
                            TransferMap::weight_scale(p, &s2),
                        ));
                    }
                }
                Ok(())
            }
            ModelExpr::SelfAdjProduct { r, n } => {
                self.square(r)?;
                self.push(format!("selfadjoint product n={n}"), selfadjoint_product(p)?, *n, *n)
            }
            ModelExpr::SelfAdjSum { r, n, sigma } => {
                self.square(r)?;
                let s2 = sigma * sigma;
                self.push(format!("selfadjoint sum n={n}"), selfadjoint_sum(p, &s2)?, *n, *n)
            }
        }
    }

    /// Compiles an operand of a sum, whose moments must be those of the Gram
    /// matrix `(1/N) A A^H` of the rectangular matrix it stands for.
    fn rectangular(&mut self, e: &ModelExpr) -> Result<()> {
        match e {
            ModelExpr::DeterministicRef { name, rows, cols } => {
                self.input = InputSource::Gram {
                    name: name.clone(),
                    rows: *rows,
                    cols: *cols,
                };
                Ok(())
            }
            ModelExpr::GaussComplex { .. } | ModelExpr::GaussSum(..) | ModelExpr::CorrProduct { .. } => {
                self.square(e)
            }
            _ => Err(Error::Unsupported(format!(
                "{e} does not denote a rectangular matrix that noise can be added to"
            ))),
        }
    }

    pub fn is_two_sided(&self) -> bool {
        self.pair_stage.is_some()
    }

    /// All one-sided bound stages composed; the identity for bare leaves.
    pub fn forward_map(&self) -> Result<TransferMap> {
        if self.is_two_sided() {
            return Err(Error::Unsupported("two-sided model has a pair-keyed input".into()));
        }
        compose(self.stages.iter().map(|s| &s.bound), self.max_weight)
    }

    /// The composite map of a two-sided model, keyed by pair moments.
    pub fn pair_map(&self) -> Result<TransferMap<PairMomentKey>> {
        let first = self
            .pair_stage
            .as_ref()
            .ok_or_else(|| Error::Unsupported("model is one-sided".into()))?;
        self.stages
            .iter()
            .try_fold(first.bound.clone(), |acc, s| acc.then(&s.bound))
    }

    /// Map for display: the symbolic map when there is a single stage,
    /// otherwise the composite of the bound stages.
    pub fn display_map(&self) -> Result<DisplayMap> {
        match (&self.pair_stage, self.stages.len()) {
            (Some(s), 0) => Ok(DisplayMap::Pair(s.symbolic.clone())),
            (Some(_), _) => Ok(DisplayMap::Pair(self.pair_map()?)),
            (None, 1) => Ok(DisplayMap::One(self.stages[0].symbolic.clone())),
            (None, _) => Ok(DisplayMap::One(self.forward_map()?)),
        }
    }

    /// Output moments for given input moments. Zero-input models ignore
    /// `input` and start from the zero matrix.
    pub fn convolve(&self, input: &InputMoments) -> Result<MomentVector> {
        match (&self.input, input) {
            (InputSource::Zero, _) => self.forward_map()?.apply(&zero_moments(self.max_weight)),
            (InputSource::Pair { .. }, InputMoments::Pair(v)) => self.pair_map()?.apply(v),
            (InputSource::Pair { .. }, InputMoments::One(_)) => Err(Error::Format(
                "two-sided model needs pair-keyed input moments (r|s)".into(),
            )),
            (_, InputMoments::One(v)) => self.forward_map()?.apply(v),
            (_, InputMoments::Pair(_)) => Err(Error::Format(
                "one-sided model needs single-keyed input moments".into(),
            )),
        }
    }

    pub fn deconvolver(&self) -> Result<StagedDeconvolver> {
        if self.is_two_sided() {
            return Err(Error::Unsupported("two-sided models cannot be deconvolved".into()));
        }
        let maps: Vec<TransferMap> = if self.stages.is_empty() {
            vec![TransferMap::identity(self.max_weight)]
        } else {
            self.stages.iter().map(|s| s.bound.clone()).collect()
        };
        StagedDeconvolver::new(&maps)
    }

    /// Exact input moments derived from deterministic bindings.
    pub fn input_moments(&self, bindings: &DetMatrixSet) -> Result<InputMoments> {
        let p = self.max_weight;
        match &self.input {
            InputSource::Zero => Ok(InputMoments::One(zero_moments(p))),
            InputSource::Leaf { name, dim } => {
                let m = lookup(bindings, name, *dim, *dim)?;
                Ok(InputMoments::One(eval_mixed_moments(&m, p)?))
            }
            InputSource::Gram { name, rows, cols } => {
                let m = lookup(bindings, name, *rows, *cols)?;
                let gram = &m * m.adjoint() / Complex64::new(*cols as f64, 0.0);
                Ok(InputMoments::One(eval_mixed_moments(&gram, p)?))
            }
            InputSource::Pair { r, s, n, big_n } => {
                let rm = eval_mixed_moments(&lookup(bindings, r, *n, *n)?, p)?;
                let sm = eval_mixed_moments(&lookup(bindings, s, *big_n, *big_n)?, p)?;
                Ok(InputMoments::Pair(pair_moments(&rm, &sm, p)?))
            }
        }
    }
}

/// Either kind of display map.
pub enum DisplayMap {
    One(TransferMap),
    Pair(TransferMap<PairMomentKey>),
}

fn compose<'a>(maps: impl Iterator<Item = &'a TransferMap>, max_weight: usize) -> Result<TransferMap> {
    let mut acc: Option<TransferMap> = None;
    for m in maps {
        acc = Some(match acc {
            None => m.clone(),
            Some(a) => a.then(m)?,
        });
    }
    Ok(acc.unwrap_or_else(|| TransferMap::identity(max_weight)))
}

/// Moments of the zero matrix.
pub fn zero_moments(max_weight: usize) -> MomentVector {
    MomentVector::from_fn(max_weight, |k: &MomentKey| {
        if k.is_empty() {
            Value::one()
        } else {
            Value::zero()
        }
    })
}

/// A bound matrix, or the default `I` / `0` of the requested size.
pub fn lookup(bindings: &DetMatrixSet, name: &str, rows: usize, cols: usize) -> Result<DMatrix<Complex64>> {
    let m = match (bindings.get(name), name) {
        (Some(m), _) => m.clone(),
        (None, "I") => DMatrix::identity(rows, cols),
        (None, "0") => DMatrix::zeros(rows, cols),
        (None, _) => return Err(Error::invalid(format!("no matrix bound to '{name}'"))),
    };
    if (m.nrows(), m.ncols()) != (rows, cols) {
        return Err(Error::dim(format!(
            "'{name}' is bound to a {}x{} matrix but the model declares {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::{int, ratio};
    use crate::momentspace::exact_mixed_moments;

    fn parse(s: &str) -> ModelExpr {
        ModelExpr::parse(s).unwrap()
    }

    #[test]
    fn parses_documented_examples() {
        let w = parse("wprod(det(R,2x2), det(I,4x4), 2, 4)");
        assert!(matches!(w, ModelExpr::CorrProduct { n: 2, big_n: 4, .. }));
        let c = parse("chain(det(D,2x2), gC(2,4), gC(2,3))");
        let ModelExpr::Chain { factors, .. } = &c else { panic!() };
        assert_eq!(factors.len(), 2);
        let s = parse("sum(det(D,2x4), gC(2,4,0.5))");
        let ModelExpr::GaussSum(_, b) = &s else { panic!() };
        assert_eq!(
            **b,
            ModelExpr::GaussComplex {
                n: 2,
                big_n: 4,
                sigma: ratio(1, 2)
            }
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        for (text, pos) in [
            ("sum(det(D,2x2)", 14),
            ("foo(1)", 0),
            ("det(D, 2y2)", 8),
            ("gC(2, 2, -1)", 9),
            ("gC(2,2) extra", 8),
            ("chain(det(D,2x2), gSA(2))", 18),
        ] {
            match ModelExpr::parse(text) {
                Err(Error::Parse { pos: p, .. }) => assert_eq!(p, pos, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn dimension_errors_name_both_sides() {
        let err = ModelExpr::parse("sum(det(D,2x4), gC(2,3))").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Dimension(_)));
        assert!(msg.contains("2x4") && msg.contains("2x3"), "{msg}");
        assert!(matches!(
            ModelExpr::parse("wprod(det(R,2x2), det(I,3x3), 2, 4)"),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            ModelExpr::parse("chain(det(D,2x2), gC(3,4))"),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn render_parse_fixed_point() {
        for text in [
            "det(D, 2x2)",
            "sum(det(D, 2x4), gC(2, 4, 0.5))",
            "sasum(det(D, 3x3), 3, 1/3)",
            "chain(det(D, 2x2), gC(2, 4), gC(2, 3, 2))",
        ] {
            let e = parse(text);
            assert_eq!(e.to_string(), text);
            assert_eq!(parse(&e.to_string()), e);
        }
    }

    #[test]
    fn single_leaf_compiles_to_identity() {
        let c = CompiledModel::compile(&parse("det(D,2x2)"), 3).unwrap();
        assert!(c.forward_map().unwrap().is_identity());
        assert!(c.stages.is_empty());
    }

    #[test]
    fn chain_of_equal_wisharts_squares_the_map() {
        let c = CompiledModel::compile(&parse("chain(det(D,2x2), gC(2,2), gC(2,2))"), 2).unwrap();
        let single = wishart_product(2).unwrap().bind(2, 2).unwrap();
        assert_eq!(
            c.forward_map().unwrap().entries(),
            single.then(&single).unwrap().entries()
        );
    }

    #[test]
    fn wishart_model_convolves_identity() {
        let c = CompiledModel::compile(&parse("wprod(det(R,2x2), det(I,4x4), 2, 4)"), 2).unwrap();
        let input = InputMoments::One(exact_mixed_moments(&[int(1), int(1)], 2).unwrap());
        let out = c.convolve(&input).unwrap();
        // 1 + c with c = 1/2
        assert_eq!(out.get(&MomentKey::single(2)).unwrap(), &Value::Exact(ratio(3, 2)));
    }

    #[test]
    fn noise_only_model() {
        let c = CompiledModel::compile(&parse("gC(2,2)"), 2).unwrap();
        let out = c.convolve(&InputMoments::One(zero_moments(2))).unwrap();
        assert_eq!(out.get(&MomentKey::single(2)).unwrap(), &Value::Exact(int(2)));
    }

    #[test]
    fn unsupported_patterns() {
        for text in [
            "sum(det(A,2x2), det(B,2x2))",
            "sum(det(A,2x2), gSA(2))",
            "wprod(saprod(det(A,2x2),2), det(S,3x3), 2, 3)",
            "sum(chain(det(A,2x2), gC(2,2)), gC(2,2))",
        ] {
            let e = parse(text);
            assert!(
                matches!(CompiledModel::compile(&e, 2), Err(Error::Unsupported(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn two_sided_models_do_not_deconvolve() {
        let c = CompiledModel::compile(&parse("wprod(det(R,2x2), det(S,3x3), 2, 3)"), 2).unwrap();
        assert!(c.is_two_sided());
        assert!(matches!(c.deconvolver(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn bindings_are_checked() {
        let c = CompiledModel::compile(&parse("sum(det(D,2x3), gC(2,3))"), 2).unwrap();
        assert!(c.input_moments(&DetMatrixSet::new()).is_err());
        let mut b = DetMatrixSet::new();
        b.insert("D".into(), DMatrix::identity(2, 2));
        assert!(matches!(c.input_moments(&b), Err(Error::Dimension(_))));
        b.insert("D".into(), DMatrix::identity(2, 3));
        assert!(c.input_moments(&b).is_ok());
    }
}
