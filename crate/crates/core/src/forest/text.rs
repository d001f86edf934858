//! Text format for decorated forests.
//!
//! ```text
//! forest := "1" | tree+
//! tree   := "(" weight tree* ")"
//! weight := rational            weights mode: Q(d(v), d(v)) of a fresh direction
//!         | "[" r1, ..., rn "]" explicit mode: decoration vector
//! ```
//!
//! Explicit mode starts with a line `Q=<rows>` holding a symmetric rational
//! matrix, rows separated by `;` and entries by `,` or whitespace. Lines whose
//! first non-blank character is `#` are comments.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::{DecoratedForest, DecoratedTree};
use crate::error::{Error, Result};
use crate::pairing::{properly_decorated_violation, InnerProduct, LinearForm, Rational};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Explicit when the text starts with a `Q=` line, weights otherwise.
    #[default]
    Auto,
    Weights,
    Explicit,
}

enum Label {
    Weight(Rational),
    Vector(Vec<Rational>),
}

struct RawTree {
    label: Label,
    offset: usize,
    children: Vec<RawTree>,
}

/// Parses a forest. In weights mode vertex `k` (preorder, zero-based) is
/// decorated by `e_k` and `Q` is diagonal with the given weights.
pub fn parse_forest(text: &str, mode: ParseMode) -> Result<(DecoratedForest, InnerProduct)> {
    let stripped = strip_comments(text);
    let (q_line, body, body_offset) = split_header(&stripped);
    let explicit = match mode {
        ParseMode::Auto => q_line.is_some(),
        ParseMode::Weights => {
            if q_line.is_some() {
                return Err(perr(0, "a Q= header requires explicit mode"));
            }
            false
        }
        ParseMode::Explicit => true,
    };
    let mut parser = Parser { src: body.as_bytes(), pos: 0, base: body_offset };
    let trees = parser.forest()?;

    if !explicit {
        let mut weights = Vec::new();
        let forest = DecoratedForest::from_trees(
            trees.into_iter().map(|t| build_weighted(t, &mut weights)).collect::<Result<_>>()?,
        );
        let q = InnerProduct::diagonal(weights.into_iter().enumerate())?;
        return Ok((forest, q));
    }

    let Some((q_text, q_offset)) = q_line else {
        return Err(perr(0, "explicit mode needs a leading Q= line"));
    };
    let rows = parse_matrix(q_text, q_offset)?;
    let dim = rows.len();
    let q = InnerProduct::from_matrix(rows)?;
    let forest = DecoratedForest::from_trees(trees.into_iter().map(|t| build_explicit(t, dim)).collect::<Result<_>>()?);
    if let Some(why) = properly_decorated_violation(&forest, &q) {
        return Err(Error::NotProperlyDecorated(why));
    }
    Ok((forest, q))
}

/// Weights-mode text: each vertex printed with `Q(d(v), d(v))`.
pub fn serialize(forest: &DecoratedForest, q: &InnerProduct) -> Result<String> {
    fn walk(t: &DecoratedTree, q: &InnerProduct, out: &mut String) -> Result<()> {
        write!(out, "({}", q.inner(t.decoration(), t.decoration())?).unwrap();
        for c in t.children() {
            out.push(' ');
            walk(c, q, out)?;
        }
        out.push(')');
        Ok(())
    }
    if forest.is_empty() {
        return Ok("1".into());
    }
    let mut out = String::new();
    for (k, t) in forest.trees().iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        walk(t, q, &mut out)?;
    }
    Ok(out)
}

/// Explicit-mode text with a `Q=` header over the active indices of `q`,
/// which must be `0..n`.
pub fn serialize_explicit(forest: &DecoratedForest, q: &InnerProduct) -> String {
    let dim = q.indices().iter().max().map_or(0, |m| m + 1);
    let mut out = String::from("Q=");
    for a in 0..dim {
        if a > 0 {
            out.push(';');
        }
        for b in 0..dim {
            if b > 0 {
                out.push(',');
            }
            let x = q.entry(a, b).unwrap_or_else(|_| Rational::zero());
            write!(out, "{x}").unwrap();
        }
    }
    out.push('\n');
    fn walk(t: &DecoratedTree, dim: usize, out: &mut String) {
        out.push_str("([");
        for i in 0..dim {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{}", t.decoration().coeff(i)).unwrap();
        }
        out.push(']');
        for c in t.children() {
            out.push(' ');
            walk(c, dim, out);
        }
        out.push(')');
    }
    if forest.is_empty() {
        out.push('1');
    }
    for (k, t) in forest.trees().iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        walk(t, dim, &mut out);
    }
    out
}

fn perr(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset, message: message.into() }
}

/// Blanks out comment lines, keeping byte offsets intact.
fn strip_comments(text: &str) -> String {
    text.split_inclusive('\n')
        .map(|line| {
            if line.trim_start().starts_with('#') {
                line.chars().map(|c| if c == '\n' { '\n' } else { ' ' }).collect()
            } else {
                line.to_string()
            }
        })
        .collect()
}

fn split_header(text: &str) -> (Option<(&str, usize)>, &str, usize) {
    let start = text.len() - text.trim_start().len();
    let rest = &text[start..];
    if let Some(after) = rest.strip_prefix("Q=") {
        let end = after.find('\n').unwrap_or(after.len());
        let body_start = start + 2 + end;
        (Some((&after[..end], start + 2)), &text[body_start..], body_start)
    } else {
        (None, text, 0)
    }
}

fn parse_matrix(text: &str, base: usize) -> Result<Vec<Vec<Rational>>> {
    let trimmed = text.trim();
    let inner = trimmed.strip_prefix('[').and_then(|t| t.strip_suffix(']')).unwrap_or(trimmed);
    let mut rows = Vec::new();
    for row in inner.split(';') {
        let entries: Vec<Rational> = row
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| parse_rational(s).ok_or_else(|| perr(base, format!("bad matrix entry {s:?}"))))
            .collect::<Result<_>>()?;
        rows.push(entries);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(perr(base, "Q must be a non-empty square matrix"));
    }
    Ok(rows)
}

/// Integer, `p/q`, or decimal literal with optional sign.
pub(crate) fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{int_digits}{frac}").parse().ok()?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let value = Rational::new(digits, scale);
        return Some(if negative { -value } else { value });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Rational::from_integer(n))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    base: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn offset(&self) -> usize {
        self.base + self.pos
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn forest(&mut self) -> Result<Vec<RawTree>> {
        match self.peek() {
            None => Err(perr(self.offset(), "empty input; write 1 for the empty forest")),
            Some(b'1') => {
                self.pos += 1;
                if self.peek().is_some() {
                    return Err(perr(self.offset(), "trailing input after 1"));
                }
                Ok(Vec::new())
            }
            Some(_) => {
                let mut trees = Vec::new();
                while self.peek().is_some() {
                    trees.push(self.tree()?);
                }
                Ok(trees)
            }
        }
    }

    fn tree(&mut self) -> Result<RawTree> {
        if self.peek() != Some(b'(') {
            return Err(perr(self.offset(), "expected '('"));
        }
        self.pos += 1;
        let offset = self.offset();
        let label = self.label()?;
        let mut children = Vec::new();
        loop {
            match self.peek() {
                Some(b')') => {
                    self.pos += 1;
                    return Ok(RawTree { label, offset, children });
                }
                Some(b'(') => children.push(self.tree()?),
                Some(_) => return Err(perr(self.offset(), "expected '(' or ')'")),
                None => return Err(perr(self.offset(), "unclosed '('")),
            }
        }
    }

    fn label(&mut self) -> Result<Label> {
        match self.peek() {
            Some(b'[') => {
                let start = self.pos + 1;
                let end = self.src[start..]
                    .iter()
                    .position(|b| *b == b']')
                    .ok_or_else(|| perr(self.offset(), "unclosed '['"))?;
                let inner = std::str::from_utf8(&self.src[start..start + end])
                    .map_err(|_| perr(self.offset(), "invalid UTF-8"))?;
                let at = self.offset();
                let values = inner
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_rational(s).ok_or_else(|| perr(at, format!("bad vector entry {s:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                self.pos = start + end + 1;
                Ok(Label::Vector(values))
            }
            Some(_) => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && !self.src[self.pos].is_ascii_whitespace()
                    && !matches!(self.src[self.pos], b'(' | b')' | b'[')
                {
                    self.pos += 1;
                }
                let tok = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                if tok.is_empty() {
                    return Err(perr(self.base + start, "expected a weight"));
                }
                parse_rational(tok)
                    .map(Label::Weight)
                    .ok_or_else(|| perr(self.base + start, format!("bad weight {tok:?}")))
            }
            None => Err(perr(self.offset(), "unexpected end of input")),
        }
    }
}

fn build_weighted(raw: RawTree, weights: &mut Vec<Rational>) -> Result<DecoratedTree> {
    let index = weights.len();
    let w = match raw.label {
        Label::Weight(w) => w,
        Label::Vector(_) => {
            return Err(perr(raw.offset, "vector decoration outside explicit mode"));
        }
    };
    if !w.is_positive() {
        return Err(Error::NonPositiveWeight { vertex: index + 1, weight: w.to_string() });
    }
    weights.push(w);
    let mut tree = DecoratedTree::leaf(LinearForm::basis(index));
    for c in raw.children {
        tree = tree.with_child(build_weighted(c, weights)?);
    }
    Ok(tree)
}

fn build_explicit(raw: RawTree, dim: usize) -> Result<DecoratedTree> {
    let values = match raw.label {
        Label::Vector(v) => v,
        Label::Weight(_) => return Err(perr(raw.offset, "explicit mode expects [..] decorations")),
    };
    if values.len() != dim {
        return Err(perr(raw.offset, format!("decoration has {} entries but Q is {dim}x{dim}", values.len())));
    }
    let mut tree = DecoratedTree::leaf(LinearForm::from_dense(&values));
    for c in raw.children {
        tree = tree.with_child(build_explicit(c, dim)?);
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::{rat, ratio};

    #[test]
    fn unit_ladder_corolla() {
        let (f, _) = parse_forest("1", ParseMode::Auto).unwrap();
        assert!(f.is_empty());

        let (f, q) = parse_forest("(1 (2))", ParseMode::Auto).unwrap();
        assert_eq!(f.degree(), 2);
        assert_eq!(f.weights(&q).unwrap(), vec![rat(1), rat(2)]);
        assert_eq!(f.trees()[0].children().len(), 1);

        let (f, q) = parse_forest("(1 (2) (3))", ParseMode::Auto).unwrap();
        assert_eq!(f.trees()[0].children().len(), 2);
        assert_eq!(f.weights(&q).unwrap(), vec![rat(1), rat(2), rat(3)]);
    }

    #[test]
    fn rational_weights_and_whitespace() {
        let (f, q) = parse_forest("  ( 3/4\n (1/2) )\t(0.25)", ParseMode::Auto).unwrap();
        assert_eq!(f.trees().len(), 2);
        assert_eq!(f.weights(&q).unwrap(), vec![ratio(3, 4), ratio(1, 2), ratio(1, 4)]);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_forest("", ParseMode::Auto), Err(Error::Parse { .. })));
        assert!(matches!(parse_forest("(1 (2)", ParseMode::Auto), Err(Error::Parse { .. })));
        assert!(matches!(parse_forest("(x)", ParseMode::Auto), Err(Error::Parse { .. })));
        assert!(matches!(parse_forest("1 (1)", ParseMode::Auto), Err(Error::Parse { .. })));
        assert!(matches!(parse_forest("(1 (0))", ParseMode::Auto), Err(Error::NonPositiveWeight { vertex: 2, .. })));
        assert!(matches!(parse_forest("(-1/2)", ParseMode::Auto), Err(Error::NonPositiveWeight { vertex: 1, .. })));
    }

    #[test]
    fn explicit_mode() {
        let text = "Q=1,0,0;0,1,0;0,0,1\n([1,0,0] ([0,1,0]) ([0,0,1]))";
        let (f, q) = parse_forest(text, ParseMode::Auto).unwrap();
        assert_eq!(f.degree(), 3);
        assert_eq!(q.dimension(), 3);

        let bad = "Q=1,0;0,1\n([1,0] ([1,0]))";
        assert!(matches!(parse_forest(bad, ParseMode::Auto), Err(Error::NotProperlyDecorated(_))));
        let short = "Q=1,0;0,1\n([1,0,0])";
        assert!(matches!(parse_forest(short, ParseMode::Auto), Err(Error::Parse { .. })));
        assert!(parse_forest("(1)", ParseMode::Explicit).is_err());
        assert!(parse_forest("Q=1\n([1])", ParseMode::Weights).is_err());
    }

    #[test]
    fn comments_are_skipped() {
        let text = "# ladder\n(1\n  # leaf\n  (2))\n";
        let (f, _) = parse_forest(text, ParseMode::Auto).unwrap();
        assert_eq!(f.degree(), 2);
    }

    #[test]
    fn serialize_round_trip() {
        let (f, q) = parse_forest("(1 (2 (1/3)) (5))", ParseMode::Auto).unwrap();
        let text = serialize(&f, &q).unwrap();
        assert_eq!(text, "(1 (2 (1/3)) (5))");
        let (g, _) = parse_forest(&text, ParseMode::Auto).unwrap();
        assert_eq!(f.canonical(), g.canonical());

        let ex = serialize_explicit(&f, &q);
        let (h, q2) = parse_forest(&ex, ParseMode::Auto).unwrap();
        assert_eq!(h.canonical(), f.canonical());
        assert_eq!(q2, q);
    }
}
