//! Regularization and renormalization of branched integrals.
//!
//! The regularized integral of a properly decorated forest is
//! `x^{-sum d(v)} * prod_v pi / sin(pi L_v)`. Dropping the power of `x` and
//! writing `pi / sin(pi z) = (1 + z h(z)) / z` turns it into one fraction with
//! a simple pole along every `L_v`, and the renormalized value is the constant
//! term of its holomorphic projection.

use std::fmt;

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::forest::{DecoratedForest, DecoratedTree};
use crate::pairing::{gram, properly_decorated_violation, InnerProduct, LinearForm, Rational};
use crate::projector::{ev0_piplus, GermFraction, ProjectionContext};
use crate::series::{laurent_numerator, PiPoly, TruncSeries};

/// Significant digits of [`RenormalizedValue::decimal`].
pub const DECIMAL_DIGITS: usize = 30;

/// The symbol `x^{-E} * prod_k pi / sin(pi L_k)`.
///
/// Factors are kept sorted, so equality is equality of the multiset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RegularizedIntegral {
    exponent: LinearForm,
    factors: Vec<LinearForm>,
}

impl RegularizedIntegral {
    pub fn new(exponent: LinearForm, mut factors: Vec<LinearForm>) -> Self {
        factors.sort();
        Self { exponent, factors }
    }

    /// The constant function 1.
    pub fn unit() -> Self {
        Self::new(LinearForm::zero(), Vec::new())
    }

    pub fn exponent(&self) -> &LinearForm {
        &self.exponent
    }

    pub fn factors(&self) -> &[LinearForm] {
        &self.factors
    }

    /// Pointwise product: exponents add and factor lists merge.
    pub fn product(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::new(&self.exponent + &other.exponent, factors)
    }

    /// `f x^{-E}  |->  f * pi / sin(pi (E + L)) * x^{-E-L}`, the value of
    /// `int_0^inf f y^{-E-L} / (y + x) dy`.
    pub fn integrate(&self, l: &LinearForm) -> Self {
        let shifted = &self.exponent + l;
        let mut factors = self.factors.clone();
        factors.push(shifted.clone());
        Self::new(shifted, factors)
    }

    /// Numeric value at `x` once every form is evaluated by `value`.
    pub fn evaluate(&self, value: impl Fn(&LinearForm) -> f64, x: f64) -> f64 {
        let pi = std::f64::consts::PI;
        let csc: f64 = self.factors.iter().map(|l| pi / (pi * value(l)).sin()).product();
        csc * x.powf(-value(&self.exponent))
    }
}

impl fmt::Display for RegularizedIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent.is_zero() {
            write!(f, "1")?;
        } else {
            write!(f, "x^(-({}))", self.exponent)?;
        }
        for l in &self.factors {
            write!(f, " * pi/sin(pi*({l}))")?;
        }
        Ok(())
    }
}

/// An exact renormalized value with a decimal rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenormalizedValue {
    pub exact: PiPoly,
    pub decimal: String,
}

impl RenormalizedValue {
    pub fn new(exact: PiPoly) -> Self {
        let decimal = exact.to_decimal(DECIMAL_DIGITS);
        Self { exact, decimal }
    }

    pub fn to_f64(&self) -> f64 {
        self.exact.to_rational_approx().to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for RenormalizedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.exact, self.decimal)
    }
}

fn require_proper(forest: &DecoratedForest, q: &InnerProduct) -> Result<()> {
    match properly_decorated_violation(forest, q) {
        Some(why) => Err(Error::NotProperlyDecorated(why)),
        None => Ok(()),
    }
}

/// Closed form of the branched integral of `forest`.
pub fn regularize(forest: &DecoratedForest, q: &InnerProduct) -> Result<RegularizedIntegral> {
    require_proper(forest, q)?;
    Ok(RegularizedIntegral::new(forest.total_decoration(), forest.subtree_sums().into_values().collect()))
}

/// Arguments `L_v` of the csc factors of the integral evaluated at `x = 1`.
pub fn r1(forest: &DecoratedForest, q: &InnerProduct) -> Result<Vec<LinearForm>> {
    Ok(regularize(forest, q)?.factors)
}

/// `prod_v (1 + z_v h(z_v)) / prod_v z_v` over the coordinates `z_v = L_v`,
/// with numerator truncated at total degree `n`.
pub fn expand_r1(forest: &DecoratedForest, q: &InnerProduct, n: u32) -> Result<(GermFraction, ProjectionContext)> {
    let need = forest.degree() as u32;
    if n < need {
        return Err(Error::TruncationTooLow { have: n, need });
    }
    let g = gram(forest, q)?;
    let vars = g.vertices().to_vec();
    let mut numerator = TruncSeries::one(vars.clone(), n);
    for v in &vars {
        numerator = numerator.mul(&laurent_numerator(*v, n).embed(&vars)?)?;
    }
    let frac = GermFraction::new(numerator, vars.iter().copied().collect())?;
    Ok((frac, ProjectionContext::new(g)))
}

/// Renormalized value computed at one truncation degree.
pub fn renormalize_at(forest: &DecoratedForest, q: &InnerProduct, n: u32) -> Result<PiPoly> {
    let (frac, ctx) = expand_r1(forest, q, n)?;
    ev0_piplus(&frac, &ctx)
}

/// Renormalized value at truncation `degree + 2`, confirmed at `degree + 4`.
pub fn renormalize(forest: &DecoratedForest, q: &InnerProduct) -> Result<RenormalizedValue> {
    let low = forest.degree() as u32 + 2;
    renormalize_checked(forest, q, low)
}

/// Renormalized value at truncation `n`, confirmed at `n + 2`.
pub fn renormalize_checked(forest: &DecoratedForest, q: &InnerProduct, n: u32) -> Result<RenormalizedValue> {
    let value = renormalize_at(forest, q, n)?;
    if renormalize_at(forest, q, n + 2)? != value {
        return Err(Error::TruncationInstability { low: n, high: n + 2 });
    }
    Ok(RenormalizedValue::new(value))
}

/// True when both forests have the same underlying shape and their vertex
/// weights `Q(d(v), d(v))` agree up to one global positive factor.
pub fn is_similar(f1: &DecoratedForest, q1: &InnerProduct, f2: &DecoratedForest, q2: &InnerProduct) -> bool {
    if f1.shape_code() != f2.shape_code() {
        return false;
    }
    let (Ok(w1), Ok(w2)) = (f1.weights(q1), f2.weights(q2)) else {
        return false;
    };
    if w1.iter().chain(&w2).any(|w| *w <= Rational::zero()) {
        return false;
    }
    if w1.is_empty() {
        return true;
    }
    let s1: Rational = w1.iter().sum();
    let s2: Rational = w2.iter().sum();
    let c = s1 / s2;
    let (Ok(a), Ok(b)) = (weighted_code(f1, q1, &Rational::from_integer(1.into())), weighted_code(f2, q2, &c)) else {
        return false;
    };
    a == b
}

/// Canonical encoding with each vertex labelled by `scale * Q(d(v), d(v))`.
fn weighted_code(forest: &DecoratedForest, q: &InnerProduct, scale: &Rational) -> Result<String> {
    fn tree(t: &DecoratedTree, q: &InnerProduct, scale: &Rational) -> Result<String> {
        let w = q.inner(t.decoration(), t.decoration())? * scale;
        let mut kids = t.children().iter().map(|c| tree(c, q, scale)).collect::<Result<Vec<_>>>()?;
        kids.sort();
        Ok(format!("({w}{})", kids.concat()))
    }
    let mut parts = forest.trees().iter().map(|t| tree(t, q, scale)).collect::<Result<Vec<_>>>()?;
    parts.sort();
    Ok(parts.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{parse_forest, ParseMode};
    use crate::pairing::ratio;

    fn parse(text: &str) -> (DecoratedForest, InnerProduct) {
        parse_forest(text, ParseMode::Auto).unwrap()
    }

    fn value(text: &str) -> PiPoly {
        let (f, q) = parse(text);
        renormalize(&f, &q).unwrap().exact
    }

    #[test]
    fn small_values() {
        assert!(value("1").coeffs() == [Rational::from_integer(1.into())]);
        assert!(value("(1)").is_zero());
        assert!(value("(7/3)").is_zero());
        assert_eq!(value("(1 (1))"), PiPoly::monomial(ratio(1, 4), 1));
        assert_eq!(value("(1 (2))"), PiPoly::monomial(ratio(5, 18), 1));
    }

    #[test]
    fn regularize_shapes() {
        let (f, q) = parse("(1 (2))");
        let r = regularize(&f, &q).unwrap();
        let (d1, d2) = (LinearForm::basis(0), LinearForm::basis(1));
        assert_eq!(r.exponent(), &(&d1 + &d2));
        assert_eq!(r, RegularizedIntegral::new(&d1 + &d2, vec![d2.clone(), &d1 + &d2]));
        assert_eq!(r, RegularizedIntegral::unit().integrate(&d2).integrate(&d1));

        let (f, q) = parse("(1) (1)");
        let mut expected = [d1.clone(), d2.clone()];
        expected.sort();
        assert_eq!(regularize(&f, &q).unwrap().factors(), &expected[..]);
        let (f, q) = parse("1");
        assert!(r1(&f, &q).unwrap().is_empty());
    }

    #[test]
    fn expansion_shape() {
        let (f, q) = parse("(1 (1))");
        let (frac, ctx) = expand_r1(&f, &q, 4).unwrap();
        assert_eq!(frac.poles().len(), 2);
        assert_eq!(ctx.gram().len(), 2);
        assert_eq!(frac.numerator().truncation(), 4);
        assert!(matches!(expand_r1(&f, &q, 1), Err(Error::TruncationTooLow { have: 1, need: 2 })));
        let (f, q) = parse("1");
        let (frac, _) = expand_r1(&f, &q, 0).unwrap();
        assert!(frac.poles().is_empty());
    }

    #[test]
    fn improper_input_rejected() {
        let q = InnerProduct::identity(1);
        let f = DecoratedTree::leaf(LinearForm::basis(0))
            .with_child(DecoratedTree::leaf(LinearForm::basis(0)))
            .into_forest();
        assert!(matches!(renormalize(&f, &q), Err(Error::NotProperlyDecorated(_))));
    }

    #[test]
    fn similarity() {
        let (a, qa) = parse("(1 (2))");
        let (b, qb) = parse("(3 (6))");
        let (c, qc) = parse("(2 (1))");
        let (d, qd) = parse("(1) (2)");
        assert!(is_similar(&a, &qa, &b, &qb));
        assert!(!is_similar(&a, &qa, &c, &qc));
        assert!(!is_similar(&a, &qa, &d, &qd));
        let (e, qe) = parse("(1 (2) (3))");
        let (g, qg) = parse("(2 (6) (4))");
        assert!(is_similar(&e, &qe, &g, &qg));
    }
}
