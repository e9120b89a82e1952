//! Exact coefficients of transfer-map entries.
//!
//! Every entry of a moment transfer map is a Laurent polynomial in the two
//! matrix dimensions `n` (rows) and `N` (columns) with rational coefficients.
//! [`CoeffPoly`] keeps those in canonical form: a sorted map from exponent
//! pairs `(a, b)`, meaning `n^a N^b`, to non-zero rationals.
//!
//! Rendering can rewrite monomials through the aspect ratio `c = n/N`
//! (`n^a N^b = c^a N^(a+b)`), which is how finite-size corrections are usually
//! displayed: `1/(cN^2)` rather than `n^-1 N^-1`. The substitution is purely
//! presentational; parsing either form yields the same canonical value.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::Sign;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Builds `num/den` as a reduced rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses `"3"`, `"-3/4"`, `"0.125"` or `"1e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::parse(0, "empty number"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::parse(0, format!("bad numerator in {s:?}")))?;
        let den: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::parse(0, format!("bad denominator in {s:?}")))?;
        if den.is_zero() {
            return Err(Error::parse(0, "zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..]
                .parse()
                .map_err(|_| Error::parse(i, format!("bad exponent in {s:?}")))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(Error::parse(0, format!("not a number: {s:?}")));
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().unwrap();
    let mut value = Rational::new(all, BigInt::from(10u32).pow(frac_part.len() as u32));
    let ten = int(10);
    value *= pow_rational(&ten, exp);
    Ok(if neg { -value } else { value })
}

/// `"3"` or `"-3/4"`.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Exact decimal expansion when the denominator only has factors 2 and 5.
pub fn rational_to_decimal(q: &Rational) -> Option<String> {
    if q.is_integer() {
        return Some(q.numer().to_string());
    }
    let mut den = q.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let mut digits = 0usize;
    let mut twos = 0usize;
    let mut fives = 0usize;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    digits += twos.max(fives);
    let scaled = q * Rational::from_integer(BigInt::from(10).pow(digits as u32));
    let mut s = scaled.numer().abs().to_string();
    while s.len() <= digits {
        s.insert(0, '0');
    }
    let split = s.len() - digits;
    let sign = if q.is_negative() { "-" } else { "" };
    Some(format!("{sign}{}.{}", &s[..split], &s[split..]))
}

/// Exact conversion of the shortest round-trip decimal form of `x`.
///
/// `0.1` becomes `1/10`, not the binary fraction nearest to it.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("non-finite value {x}")));
    }
    parse_rational(&format!("{x:e}"))
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Very large numerators/denominators: fall back to scaled division.
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

fn pow_rational(base: &Rational, exp: i32) -> Rational {
    let mag = base.pow(exp.unsigned_abs() as i32);
    if exp < 0 {
        mag.recip()
    } else {
        mag
    }
}

/// Laurent polynomial in `n` and `N` with exact rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct CoeffPoly {
    terms: BTreeMap<(i32, i32), Rational>,
}

impl CoeffPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(q: Rational) -> Self {
        Self::monomial(q, 0, 0)
    }

    /// `q * n^a * N^b`.
    pub fn monomial(q: Rational, a: i32, b: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert((a, b), q);
        }
        Self { terms }
    }

    pub fn n() -> Self {
        Self::monomial(Rational::one(), 1, 0)
    }

    pub fn big_n() -> Self {
        Self::monomial(Rational::one(), 0, 1)
    }

    /// The aspect ratio `n/N`.
    pub fn c() -> Self {
        Self::monomial(Rational::one(), 1, -1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exponent pairs `(a, b)` of `n^a N^b` with their coefficients, sorted.
    pub fn terms(&self) -> impl Iterator<Item = (&(i32, i32), &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, a: i32, b: i32) -> Rational {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(Rational::zero)
    }

    /// The value if the polynomial has no variable part.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&(0, 0)).cloned(),
            _ => None,
        }
    }

    fn as_monomial(&self) -> Option<((i32, i32), &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(e, q)| (*e, q))
        } else {
            None
        }
    }

    fn add_term(&mut self, exp: (i32, i32), q: &Rational) {
        if q.is_zero() {
            return;
        }
        let slot = self.terms.entry(exp).or_insert_with(Rational::zero);
        *slot += q;
        if slot.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(e, c)| (*e, c * q)).collect(),
        }
    }

    /// Integer power; negative exponents are only defined for monomials.
    pub fn pow(&self, exp: i32) -> Result<Self> {
        if exp >= 0 {
            let mut acc = Self::one();
            for _ in 0..exp {
                acc = &acc * self;
            }
            return Ok(acc);
        }
        let ((a, b), q) = self
            .as_monomial()
            .ok_or_else(|| Error::invalid("negative power of a non-monomial"))?;
        Ok(Self::monomial(pow_rational(q, exp), a * exp, b * exp))
    }

    /// Inverse of a single non-zero term.
    pub fn recip(&self) -> Result<Self> {
        self.pow(-1)
    }

    /// Substitutes `n`, `N` with exact rationals.
    pub fn eval_rational(&self, n: &Rational, big_n: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for ((a, b), q) in &self.terms {
            acc += q * pow_rational(n, *a) * pow_rational(big_n, *b);
        }
        acc
    }

    /// Substitutes positive integer dimensions.
    pub fn eval(&self, n: u64, big_n: u64) -> Rational {
        self.eval_rational(
            &Rational::from_integer(n.into()),
            &Rational::from_integer(big_n.into()),
        )
    }

    pub fn eval_f64(&self, n: f64, big_n: f64) -> f64 {
        self.terms
            .iter()
            .map(|((a, b), q)| rational_to_f64(q) * n.powi(*a) * big_n.powi(*b))
            .sum()
    }

    /// Drops every term whose total degree `a + b` differs from zero, i.e.
    /// keeps what survives `n, N -> infinity` at fixed `c`.
    pub fn degree_zero_part(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|((a, b), _)| a + b == 0)
                .map(|(e, q)| (*e, q.clone()))
                .collect(),
        }
    }

    pub fn render(&self, style: RenderStyle, format: RenderFormat) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by_key(|((a, b), _)| (std::cmp::Reverse(a + b), *a));
        let mut out = String::new();
        for (i, ((a, b), q)) in terms.into_iter().enumerate() {
            let vars: [(&str, i32); 2] = match style {
                RenderStyle::Raw => [("n", *a), ("N", *b)],
                RenderStyle::CSubstituted => [("c", *a), ("N", a + b)],
            };
            let body = render_term(&q.abs(), &vars, format);
            if q.is_negative() {
                out.push('-');
            } else if i > 0 {
                out.push('+');
            }
            out.push_str(&body);
        }
        out
    }

    /// True when some term carries a power of `N`; such entries read better
    /// after the `c = n/N` rewrite.
    pub fn mentions_big_n(&self) -> bool {
        self.terms.keys().any(|(_, b)| *b != 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderStyle {
    /// Monomials in `n` and `N`.
    Raw,
    /// Monomials rewritten as `c^a N^e` with `c = n/N`.
    CSubstituted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Plain,
    Latex,
}

fn render_factor(name: &str, exp: i32, format: RenderFormat) -> String {
    match (exp, format) {
        (1, _) => name.to_string(),
        (e, RenderFormat::Plain) => format!("{name}^{e}"),
        (e, RenderFormat::Latex) => format!("{name}^{{{e}}}"),
    }
}

fn render_term(q: &Rational, vars: &[(&str, i32)], format: RenderFormat) -> String {
    let numer_factors: String = vars
        .iter()
        .filter(|(_, e)| *e > 0)
        .map(|(v, e)| render_factor(v, *e, format))
        .collect();
    let denom_factors: String = vars
        .iter()
        .filter(|(_, e)| *e < 0)
        .map(|(v, e)| render_factor(v, -e, format))
        .collect();
    let p = q.numer().to_string();
    let d = q.denom();

    let numer = if numer_factors.is_empty() {
        p
    } else if q.numer().is_one() {
        numer_factors
    } else {
        format!("{p}{numer_factors}")
    };
    let mut denom = String::new();
    let mut denom_tokens = 0;
    if !d.is_one() {
        denom.push_str(&d.to_string());
        denom_tokens += 1;
    }
    denom_tokens += vars.iter().filter(|(_, e)| *e < 0).count();
    denom.push_str(&denom_factors);

    if denom_tokens == 0 {
        return numer;
    }
    match format {
        RenderFormat::Latex => format!("\\frac{{{numer}}}{{{denom}}}"),
        RenderFormat::Plain if denom_tokens == 1 => format!("{numer}/{denom}"),
        RenderFormat::Plain => format!("{numer}/({denom})"),
    }
}

impl fmt::Display for CoeffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(RenderStyle::Raw, RenderFormat::Plain))
    }
}

impl fmt::Debug for CoeffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoeffPoly({self})")
    }
}

impl From<Rational> for CoeffPoly {
    fn from(q: Rational) -> Self {
        Self::constant(q)
    }
}

impl From<i64> for CoeffPoly {
    fn from(v: i64) -> Self {
        Self::constant(int(v))
    }
}

impl Add<&CoeffPoly> for &CoeffPoly {
    type Output = CoeffPoly;
    fn add(self, rhs: &CoeffPoly) -> CoeffPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for CoeffPoly {
    type Output = CoeffPoly;
    fn add(mut self, rhs: CoeffPoly) -> CoeffPoly {
        self += &rhs;
        self
    }
}

impl AddAssign<&CoeffPoly> for CoeffPoly {
    fn add_assign(&mut self, rhs: &CoeffPoly) {
        for (e, q) in &rhs.terms {
            self.add_term(*e, q);
        }
    }
}

impl Neg for &CoeffPoly {
    type Output = CoeffPoly;
    fn neg(self) -> CoeffPoly {
        CoeffPoly {
            terms: self.terms.iter().map(|(e, q)| (*e, -q)).collect(),
        }
    }
}

impl Neg for CoeffPoly {
    type Output = CoeffPoly;
    fn neg(self) -> CoeffPoly {
        -&self
    }
}

impl Sub<&CoeffPoly> for &CoeffPoly {
    type Output = CoeffPoly;
    fn sub(self, rhs: &CoeffPoly) -> CoeffPoly {
        let mut out = self.clone();
        out += &(-rhs);
        out
    }
}

impl Sub for CoeffPoly {
    type Output = CoeffPoly;
    fn sub(self, rhs: CoeffPoly) -> CoeffPoly {
        &self - &rhs
    }
}

impl Mul<&CoeffPoly> for &CoeffPoly {
    type Output = CoeffPoly;
    fn mul(self, rhs: &CoeffPoly) -> CoeffPoly {
        let mut out = CoeffPoly::zero();
        for ((a1, b1), q1) in &self.terms {
            for ((a2, b2), q2) in &rhs.terms {
                out.add_term((a1 + a2, b1 + b2), &(q1 * q2));
            }
        }
        out
    }
}

impl Mul for CoeffPoly {
    type Output = CoeffPoly;
    fn mul(self, rhs: CoeffPoly) -> CoeffPoly {
        &self * &rhs
    }
}

impl FromStr for CoeffPoly {
    type Err = Error;

    /// Accepts the plain and LaTeX renderings in either style, and more
    /// generally sums of products of integers, decimals, `n`, `N`, `c`,
    /// integer powers, parentheses and division by single terms.
    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s)?;
        let mut parser = ExprParser { tokens, pos: 0 };
        let value = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            let at = parser.tokens[parser.pos].0;
            return Err(Error::parse(at, "trailing input"));
        }
        Ok(value)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Var(char),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open(char),
    Close(char),
    Frac,
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        match ch {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                out.push((start, Tok::Num(parse_rational(&s[start..i])?)));
            }
            'n' | 'N' | 'c' => {
                out.push((i, Tok::Var(ch)));
                i += 1;
            }
            '+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                out.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            '(' | '{' => {
                out.push((i, Tok::Open(ch)));
                i += 1;
            }
            ')' | '}' => {
                out.push((i, Tok::Close(ch)));
                i += 1;
            }
            '\\' => {
                let rest = &s[i + 1..];
                let word: String = rest.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
                match word.as_str() {
                    "frac" => out.push((i, Tok::Frac)),
                    "left" | "right" | "cdot" => {
                        if word == "cdot" {
                            out.push((i, Tok::Star));
                        }
                    }
                    _ => return Err(Error::parse(i, format!("unknown command \\{word}"))),
                }
                i += 1 + word.len();
            }
            _ => return Err(Error::parse(i, format!("unexpected character {ch:?}"))),
        }
    }
    Ok(out)
}

struct ExprParser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(o, _)| *o)
            .unwrap_or_else(|| self.tokens.last().map(|(o, _)| o + 1).unwrap_or(0))
    }

    fn expect_close(&mut self, open: char) -> Result<()> {
        let want = if open == '(' { ')' } else { '}' };
        match self.peek() {
            Some(Tok::Close(c)) if *c == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::parse(self.offset(), format!("expected '{want}'"))),
        }
    }

    fn expr(&mut self) -> Result<CoeffPoly> {
        let mut acc = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                -self.term()?
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc += &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc += &(-self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<CoeffPoly> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = &acc * &self.power()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let at = self.offset();
                    let divisor = self.power()?;
                    if divisor.is_zero() {
                        return Err(Error::parse(at, "division by zero"));
                    }
                    let inv = divisor
                        .recip()
                        .map_err(|_| Error::parse(at, "division by a sum of terms"))?;
                    acc = &acc * &inv;
                }
                Some(Tok::Num(_) | Tok::Var(_) | Tok::Open(_) | Tok::Frac) => {
                    acc = &acc * &self.power()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<CoeffPoly> {
        let base = self.primary()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.offset();
        let braced = match self.peek() {
            Some(Tok::Open(c)) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        };
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        let exp = match self.peek() {
            Some(Tok::Num(q)) if q.is_integer() => {
                let e = q.to_integer().to_i32().ok_or_else(|| Error::parse(at, "exponent too large"))?;
                self.pos += 1;
                e
            }
            _ => return Err(Error::parse(at, "expected an integer exponent")),
        };
        if let Some(c) = braced {
            self.expect_close(c)?;
        }
        let exp = if neg { -exp } else { exp };
        base.pow(exp).map_err(|_| Error::parse(at, "negative power of a sum"))
    }

    fn primary(&mut self) -> Result<CoeffPoly> {
        let at = self.offset();
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| Error::parse(at, "unexpected end of expression"))?;
        self.pos += 1;
        match tok {
            Tok::Num(q) => Ok(CoeffPoly::constant(q)),
            Tok::Var('n') => Ok(CoeffPoly::n()),
            Tok::Var('N') => Ok(CoeffPoly::big_n()),
            Tok::Var(_) => Ok(CoeffPoly::c()),
            Tok::Open(c) => {
                let inner = self.expr()?;
                self.expect_close(c)?;
                Ok(inner)
            }
            Tok::Frac => {
                let group = |p: &mut Self| -> Result<CoeffPoly> {
                    match p.peek() {
                        Some(Tok::Open('{')) => {
                            p.pos += 1;
                            let v = p.expr()?;
                            p.expect_close('{')?;
                            Ok(v)
                        }
                        _ => Err(Error::parse(p.offset(), "expected '{' after \\frac")),
                    }
                };
                let num = group(self)?;
                let at = self.offset();
                let den = group(self)?;
                if den.is_zero() {
                    return Err(Error::parse(at, "division by zero"));
                }
                let inv = den
                    .recip()
                    .map_err(|_| Error::parse(at, "division by a sum of terms"))?;
                Ok(&num * &inv)
            }
            _ => Err(Error::parse(at, "unexpected token")),
        }
    }
}

/// Sign of a rational as -1, 0 or 1.
pub fn signum(q: &Rational) -> i32 {
    match q.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> CoeffPoly {
        s.parse().unwrap()
    }

    #[test]
    fn exponent_addition() {
        let c = CoeffPoly::c();
        assert_eq!(&c * &c, CoeffPoly::monomial(int(1), 2, -2));
    }

    #[test]
    fn additive_identity_and_inverse() {
        let x = p("1+3c+c^2+1/N^2");
        assert_eq!(&x + &CoeffPoly::zero(), x);
        assert!((&x + &(-&x)).is_zero());
    }

    #[test]
    fn one_plus_inverse_square_times_one() {
        let x = p("1+1/N^2");
        assert_eq!(&x * &CoeffPoly::one(), x);
        assert_eq!(x.eval(7, 2), ratio(5, 4));
    }

    #[test]
    fn eval_substitutes_dimensions() {
        let x = &CoeffPoly::one() + &CoeffPoly::c();
        assert_eq!(x.eval(2, 4), ratio(3, 2));
    }

    #[test]
    fn eval_matches_termwise_sum() {
        // 1/(cN^2) = n^-1 N^-1; with n=3, N=5 each term by hand.
        let x = p("1/(cN^2) + 2/(c^2N^4) - 3c/2");
        let expected = ratio(1, 15) + ratio(2, 9 * 25) * int(1) - ratio(3, 2) * ratio(3, 5);
        assert_eq!(x.eval(3, 5), expected);
    }

    #[test]
    fn c_substituted_rendering() {
        assert_eq!(CoeffPoly::c().render(RenderStyle::CSubstituted, RenderFormat::Plain), "c");
        let x = CoeffPoly::monomial(int(1), -1, -1);
        assert_eq!(x.render(RenderStyle::CSubstituted, RenderFormat::Plain), "1/(cN^2)");
        assert_eq!(
            x.render(RenderStyle::CSubstituted, RenderFormat::Latex),
            "\\frac{1}{cN^{2}}"
        );
        assert_eq!(CoeffPoly::zero().render(RenderStyle::Raw, RenderFormat::Latex), "0");
    }

    #[test]
    fn term_ordering_follows_degree() {
        let x = p("c^2 + 1/N^2 + 3c + 1");
        assert_eq!(
            x.render(RenderStyle::CSubstituted, RenderFormat::Plain),
            "1+3c+c^2+1/N^2"
        );
        let y = p("n^-2 + 2");
        assert_eq!(y.render(RenderStyle::Raw, RenderFormat::Plain), "2+1/n^2");
    }

    #[test]
    fn parser_accepts_latex_and_plain() {
        assert_eq!(p("\\frac{2}{c^{2}N^{4}}"), p("2/(c^2N^4)"));
        assert_eq!(p("2/(c^2N^4)"), CoeffPoly::monomial(int(2), -2, -2));
        assert_eq!(p("\\left(2+n^{-2}\\right)"), p("2 + 1/n^2"));
        assert_eq!(p("0.5n"), CoeffPoly::monomial(ratio(1, 2), 1, 0));
    }

    #[test]
    fn parser_rejects_garbage() {
        assert!("1/(1+c)".parse::<CoeffPoly>().is_err());
        assert!("1+".parse::<CoeffPoly>().is_err());
        assert!("x".parse::<CoeffPoly>().is_err());
        assert!("(1+c".parse::<CoeffPoly>().is_err());
    }

    #[test]
    fn rational_helpers() {
        assert_eq!(parse_rational("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational("-3/6").unwrap(), ratio(-1, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(rational_from_f64(0.1).unwrap(), ratio(1, 10));
        assert_eq!(rational_to_decimal(&ratio(-1, 8)).unwrap(), "-0.125");
        assert_eq!(rational_to_decimal(&ratio(1, 3)), None);
        assert_eq!(format_rational(&ratio(6, 3)), "2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }
}
