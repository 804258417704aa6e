//! Joint and conditional probabilities of rectangles on the raw data scale.
//!
//! Queries are written as `P[x>=22 & y>=100]` (joint) or
//! `P[y>=160 | 28<=x<=29]` (conditional on the x band).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::margins::SemiParametricMargin;
use crate::model::CopulaCdf;

/// Smallest conditioning probability accepted.
pub const MIN_CONDITIONING: f64 = 1e-12;

/// Closed interval with optional ends; `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Interval {
    pub fn at_least(x: f64) -> Self {
        Self { lo: Some(x), hi: None }
    }

    pub fn between(lo: f64, hi: f64) -> Self {
        Self { lo: Some(lo), hi: Some(hi) }
    }

    pub fn is_unbounded(&self) -> bool {
        self.lo.is_none() && self.hi.is_none()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo.is_none_or(|a| x >= a) && self.hi.is_none_or(|b| x <= b)
    }

    fn intersect(self, other: Interval) -> Interval {
        let pick = |a: Option<f64>, b: Option<f64>, f: fn(f64, f64) -> f64| match (a, b) {
            (Some(a), Some(b)) => Some(f(a, b)),
            (a, b) => a.or(b),
        };
        Interval { lo: pick(self.lo, other.lo, f64::max), hi: pick(self.hi, other.hi, f64::min) }
    }

    /// `[F(lo), F(hi)]`, with 0 and 1 for missing ends.
    fn to_unit<M: MarginCdf + ?Sized>(self, m: &M) -> (f64, f64) {
        (self.lo.map_or(0.0, |a| m.margin_cdf(a)), self.hi.map_or(1.0, |b| m.margin_cdf(b)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    Joint,
    ConditionalOnX,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionQuery {
    pub x: Interval,
    pub y: Interval,
    pub mode: QueryMode,
}

/// A marginal distribution function on the raw scale.
pub trait MarginCdf {
    fn margin_cdf(&self, x: f64) -> f64;
}

impl MarginCdf for SemiParametricMargin {
    fn margin_cdf(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

/// Data already on the copula scale.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformMargin;

impl MarginCdf for UniformMargin {
    fn margin_cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }
}

fn cdf_at<C: CopulaCdf + ?Sized>(c: &C, u: f64, v: f64) -> Result<f64> {
    if u <= 0.0 || v <= 0.0 {
        Ok(0.0)
    } else if u >= 1.0 || v >= 1.0 {
        Ok(u.min(v).min(1.0))
    } else {
        c.copula_cdf(u, v)
    }
}

/// `P(u1 ≤ U ≤ u2, v1 ≤ V ≤ v2)`. Upper orthants use the survival function
/// directly; everything else uses CDF differences.
pub fn rectangle_probability<C: CopulaCdf + ?Sized>(c: &C, (u1, u2): (f64, f64), (v1, v2): (f64, f64)) -> Result<f64> {
    if u2 <= u1 || v2 <= v1 {
        return Ok(0.0);
    }
    if u2 >= 1.0 && v2 >= 1.0 {
        return c.copula_survival(u1, v1);
    }
    let p = cdf_at(c, u2, v2)? - cdf_at(c, u1, v2)? - cdf_at(c, u2, v1)? + cdf_at(c, u1, v1)?;
    Ok(p.clamp(0.0, 1.0))
}

/// Probability of both conditions holding.
pub fn joint_probability<X, Y, C>(mx: &X, my: &Y, c: &C, q: &RegionQuery) -> Result<f64>
where
    X: MarginCdf + ?Sized,
    Y: MarginCdf + ?Sized,
    C: CopulaCdf + ?Sized,
{
    rectangle_probability(c, q.x.to_unit(mx), q.y.to_unit(my))
}

/// Probability of the y condition given the x band.
pub fn conditional_probability<X, Y, C>(mx: &X, my: &Y, c: &C, q: &RegionQuery) -> Result<f64>
where
    X: MarginCdf + ?Sized,
    Y: MarginCdf + ?Sized,
    C: CopulaCdf + ?Sized,
{
    let (u1, u2) = q.x.to_unit(mx);
    let band = u2 - u1;
    if !(band >= MIN_CONDITIONING) {
        return Err(Error::ConditioningDegenerate { probability: band.max(0.0) });
    }
    Ok((rectangle_probability(c, (u1, u2), q.y.to_unit(my))? / band).min(1.0))
}

/// Joint or conditional probability according to the query's mode.
pub fn model_probability<X, Y, C>(mx: &X, my: &Y, c: &C, q: &RegionQuery) -> Result<f64>
where
    X: MarginCdf + ?Sized,
    Y: MarginCdf + ?Sized,
    C: CopulaCdf + ?Sized,
{
    match q.mode {
        QueryMode::Joint => joint_probability(mx, my, c, q),
        QueryMode::ConditionalOnX => conditional_probability(mx, my, c, q),
    }
}

/// Relative frequency of the event and the number of points in it. For a
/// conditional query the frequency is within the x band, and NaN when the
/// band holds no points.
pub fn empirical_probability(data: &[(f64, f64)], q: &RegionQuery) -> (f64, usize) {
    let count = data.iter().filter(|&&(x, y)| q.x.contains(x) && q.y.contains(y)).count();
    let base = match q.mode {
        QueryMode::Joint => data.len(),
        QueryMode::ConditionalOnX => data.iter().filter(|&&(x, _)| q.x.contains(x)).count(),
    };
    if base == 0 {
        let est = if q.mode == QueryMode::Joint { 0.0 } else { f64::NAN };
        return (est, 0);
    }
    (count as f64 / base as f64, count)
}

fn parse_error(column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line: 1, column, message: message.into() }
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Op(&'a str),
    Atom(&'a str),
}

fn tokenize(s: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let b = s.as_bytes();
    let mut i = 0;
    let mut start = 0;
    while i < b.len() {
        if b[i] == b'<' || b[i] == b'>' {
            if start < i {
                out.push(Token::Atom(s[start..i].trim()));
            }
            let len = if b.get(i + 1) == Some(&b'=') { 2 } else { 1 };
            out.push(Token::Op(&s[i..i + len]));
            i += len;
            start = i;
        } else {
            i += 1;
        }
    }
    if start < b.len() {
        out.push(Token::Atom(s[start..].trim()));
    }
    out
}

/// Parses one comparison chain such as `x>=22` or `28<=x<=29`.
fn parse_term(term: &str, column: usize) -> Result<(char, Interval)> {
    let toks = tokenize(term);
    let var = |t: &Token| match t {
        Token::Atom("x") => Some('x'),
        Token::Atom("y") => Some('y'),
        _ => None,
    };
    let num = |t: &Token| -> Result<f64> {
        match t {
            Token::Atom(a) => a
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(column, format!("expected a number or `x`/`y`, got `{a}`"))),
            Token::Op(o) => Err(parse_error(column, format!("unexpected `{o}`"))),
        }
    };
    let lower = |op: &str| op.starts_with('>');
    match toks.as_slice() {
        [a, Token::Op(op), b] => {
            if let Some(v) = var(a) {
                let x = num(b)?;
                Ok((v, if lower(op) { Interval { lo: Some(x), hi: None } } else { Interval { lo: None, hi: Some(x) } }))
            } else if let Some(v) = var(b) {
                let x = num(a)?;
                Ok((v, if lower(op) { Interval { lo: None, hi: Some(x) } } else { Interval { lo: Some(x), hi: None } }))
            } else {
                Err(parse_error(column, format!("`{term}` compares no variable; use `x` or `y`")))
            }
        }
        [a, Token::Op(o1), m, Token::Op(o2), b] => {
            let v = var(m).ok_or_else(|| parse_error(column, format!("`{term}` needs `x` or `y` in the middle")))?;
            let (p, q) = (num(a)?, num(b)?);
            match (lower(o1), lower(o2)) {
                (false, false) => Ok((v, Interval::between(p, q))),
                (true, true) => Ok((v, Interval::between(q, p))),
                _ => Err(parse_error(column, format!("`{term}` mixes `<` and `>`"))),
            }
        }
        _ => Err(parse_error(column, format!("cannot read condition `{term}`"))),
    }
}

/// Parses `&`-joined terms into (x, y) intervals.
fn parse_conjunction(s: &str, offset: usize) -> Result<(Interval, Interval)> {
    let (mut x, mut y) = (Interval::default(), Interval::default());
    let mut col = offset;
    for term in s.split('&') {
        if term.trim().is_empty() {
            return Err(parse_error(col + 1, "empty condition"));
        }
        let (v, iv) = parse_term(term, col + 1)?;
        if v == 'x' {
            x = x.intersect(iv);
        } else {
            y = y.intersect(iv);
        }
        col += term.len() + 1;
    }
    for (name, iv) in [("x", x), ("y", y)] {
        if let (Some(a), Some(b)) = (iv.lo, iv.hi) {
            if a > b {
                return Err(parse_error(offset + 1, format!("the {name} condition is empty ({a} > {b})")));
            }
        }
    }
    Ok((x, y))
}

impl FromStr for RegionQuery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let lead = s.len() - s.trim_start().len();
        let inner = t
            .strip_prefix("P[")
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| parse_error(lead + 1, format!("a query looks like `P[x>=22 & y>=100]`, got `{t}`")))?;
        let base = lead + 2;
        match inner.split_once('|') {
            None => {
                let (x, y) = parse_conjunction(inner, base)?;
                Ok(RegionQuery { x, y, mode: QueryMode::Joint })
            }
            Some((event, given)) => {
                let (ex, y) = parse_conjunction(event, base)?;
                let (x, gy) = parse_conjunction(given, base + event.len() + 1)?;
                if !ex.is_unbounded() || !gy.is_unbounded() {
                    return Err(parse_error(
                        base + 1,
                        "conditional queries take a y condition before `|` and an x condition after it",
                    ));
                }
                Ok(RegionQuery { x, y, mode: QueryMode::ConditionalOnX })
            }
        }
    }
}

fn write_interval(f: &mut fmt::Formatter<'_>, name: &str, iv: &Interval) -> fmt::Result {
    match (iv.lo, iv.hi) {
        (Some(a), Some(b)) => write!(f, "{a}<={name}<={b}"),
        (Some(a), None) => write!(f, "{name}>={a}"),
        (None, Some(b)) => write!(f, "{name}<={b}"),
        (None, None) => Ok(()),
    }
}

impl fmt::Display for RegionQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("P[")?;
        match self.mode {
            QueryMode::Joint => {
                write_interval(f, "x", &self.x)?;
                if !self.x.is_unbounded() && !self.y.is_unbounded() {
                    f.write_str(" & ")?;
                }
                write_interval(f, "y", &self.y)?;
            }
            QueryMode::ConditionalOnX => {
                write_interval(f, "y", &self.y)?;
                f.write_str(" | ")?;
                write_interval(f, "x", &self.x)?;
            }
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_forms() {
        let q: RegionQuery = "P[x>=22 & y>=100]".parse().unwrap();
        assert_eq!(q, RegionQuery { x: Interval::at_least(22.0), y: Interval::at_least(100.0), mode: QueryMode::Joint });
        let q: RegionQuery = "P[y>=160 | 28<=x<=29]".parse().unwrap();
        assert_eq!(q.x, Interval::between(28.0, 29.0));
        assert_eq!(q.mode, QueryMode::ConditionalOnX);
        let q: RegionQuery = " P[ 5 > y & x<1e3 ] ".parse().unwrap();
        assert_eq!(q.y, Interval { lo: None, hi: Some(5.0) });
        assert_eq!(q.x.hi, Some(1000.0));
    }

    #[test]
    fn display_round_trips() {
        for s in ["P[x>=22 & y>=100]", "P[y>=160 | 28<=x<=29]", "P[y<=0.5]", "P[-1.5<=x<=2.25 & y<=3]"] {
            let q: RegionQuery = s.parse().unwrap();
            assert_eq!(q.to_string(), s);
            assert_eq!(q.to_string().parse::<RegionQuery>().unwrap(), q);
        }
    }

    #[test]
    fn rejects_malformed_queries() {
        for s in ["x>=1", "P[z>=1]", "P[x>=a]", "P[3<=x>=4]", "P[x>=1 | y>=2]", "P[5<=x<=4]", "P[x>=1 & ]"] {
            assert!(s.parse::<RegionQuery>().is_err(), "{s}");
        }
        match "P[x>=1 & y>=q]".parse::<RegionQuery>().unwrap_err() {
            Error::Parse { column, .. } => assert_eq!(column, 9),
            e => panic!("{e}"),
        }
    }
}
