//! Independent cross-checks of the main pipeline.
//!
//! * Numerical quadrature of the nested integrals
//!   `R(B+^d(F))(x) = int_0^inf R(F)(y) y^{-d} / (y + x) dy`, compared against
//!   the closed form.
//! * A subset-sum renormalizer that expands `prod_v (1/z_v + h(z_v))` into
//!   `2^n` fractions and projects each one separately, in random order.
//!
//! The quadrature substitutes `y = x e^t` with `t = (pi/2) sinh s` and applies
//! the trapezoid rule in `s`, halving the step until two levels agree. Under
//! this map the integrand decays double exponentially at both ends, which
//! absorbs the `y^{-a}` singularity at 0 and the `y^{-a-1}` tail at infinity.
//! Every nested value is positive, so the whole computation runs on
//! logarithms and cannot overflow however far out the nodes go.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::error::{Error, Result};
use crate::forest::{DecoratedForest, DecoratedTree, VertexId};
use crate::pairing::gram;
use crate::pairing::{InnerProduct, LinearForm};
use crate::projector::{ev0_piplus_ordered, GermFraction, ProjectionContext, TelescopeOrder};
use crate::renorm::regularize;
use crate::series::{h_series, PiPoly, TruncSeries};

/// Tolerances and limits of the double exponential quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Number of step halvings after the initial step of 1.
    pub max_levels: u32,
    /// Largest `|s|`; nodes beyond it are treated as tail.
    pub s_max: f64,
    /// A node is dropped once its weight falls below this fraction of the sum.
    pub tail: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, max_levels: 10, s_max: 8.0, tail: 1e-20 }
    }
}

impl QuadConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.tail > 0.0 && self.s_max > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Real values of the basis directions, extended linearly to all forms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NumericAssignment {
    values: BTreeMap<usize, f64>,
}

impl NumericAssignment {
    pub fn new(values: BTreeMap<usize, f64>) -> Self {
        Self { values }
    }

    pub fn value(&self, form: &LinearForm) -> Result<f64> {
        let mut acc = 0.0;
        for (i, c) in form.iter() {
            let x = self.values.get(&i).ok_or_else(|| Error::Domain(format!("no numeric value for e{}", i + 1)))?;
            acc += num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::NAN) * x;
        }
        Ok(acc)
    }

    /// An assignment under which `L_v` takes the given value at every vertex.
    /// Each decoration must be a nonzero multiple of its own basis direction,
    /// as in forests read from weight text.
    pub fn from_subtree_values(forest: &DecoratedForest, targets: &BTreeMap<VertexId, f64>) -> Result<Self> {
        fn walk(t: &DecoratedTree, targets: &BTreeMap<VertexId, f64>, out: &mut BTreeMap<usize, f64>) -> Result<f64> {
            let mut children = 0.0;
            for c in t.children() {
                walk(c, targets, out)?;
                children += targets.get(&c.id()).copied().unwrap_or(f64::NAN);
            }
            let mut support = t.decoration().iter();
            let (Some((i, c)), None) = (support.next(), support.next()) else {
                return Err(Error::Domain(format!(
                    "decoration {} is not a multiple of one basis direction",
                    t.decoration()
                )));
            };
            let own = targets.get(&t.id()).ok_or_else(|| Error::Domain("missing target value".into()))?;
            let c = num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::NAN);
            out.insert(i, (own - children) / c);
            Ok(*own)
        }
        let mut out = BTreeMap::new();
        for t in forest.trees() {
            walk(t, targets, &mut out)?;
        }
        Ok(Self::new(out))
    }

    /// Random assignment with every `L_v` uniform in `(lo, hi)`.
    pub fn random_admissible(forest: &DecoratedForest, lo: f64, hi: f64, rng: &mut impl Rng) -> Result<Self> {
        let targets = forest.vertex_ids().into_iter().map(|v| (v, rng.gen_range(lo..hi))).collect();
        Self::from_subtree_values(forest, &targets)
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `ln int_0^inf f(y) y^{-a} / (y + x) dy` given `ln f` as a function of
/// `ln y` and the value `ln x`.
fn log_integral<F>(log_x: f64, a: f64, log_f: &mut F, cfg: &QuadConfig) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    // after y = x e^t:  x^{-a} int f(x e^t) e^{(1-a) t} / (1 + e^t) dt
    let mut node = |s: f64| -> Result<f64> {
        let t = FRAC_PI_2 * s.sinh();
        let jacobian = (FRAC_PI_2 * s.cosh()).ln();
        Ok(log_f(log_x + t)? + (1.0 - a) * t - softplus(t) + jacobian)
    };
    let log_tail = cfg.tail.ln();

    // sum over s = j h for j in `stride`-spaced steps from `first`, walking
    // outward in both directions until the nodes are negligible
    let mut sweep = |h: f64, first: i64, stride: i64, mut acc: f64| -> Result<f64> {
        for dir in [1i64, -1] {
            let mut j = if dir == 1 { first } else { -first };
            if dir == -1 && first == 0 {
                j = -stride;
            }
            loop {
                let s = j as f64 * h;
                if s.abs() > cfg.s_max {
                    break;
                }
                let term = node(s)?;
                acc = log_add(acc, term);
                if term < acc + log_tail && s.abs() > 1.0 {
                    break;
                }
                j += dir * stride;
            }
        }
        Ok(acc)
    };

    let mut h = 1.0;
    let mut sum = sweep(h, 0, 1, f64::NEG_INFINITY)?;
    let mut previous = sum + h.ln();
    for level in 1..=cfg.max_levels {
        h /= 2.0;
        sum = sweep(h, 1, 2, sum)?;
        let current = sum + h.ln();
        let (v_now, v_prev) = (current.exp(), previous.exp());
        let close = (current - previous).abs() <= cfg.rtol || ((v_now - v_prev).abs() <= cfg.atol && v_now.is_finite());
        if level >= 3 && close {
            return Ok(current - a * log_x);
        }
        previous = current;
    }
    Err(Error::ConvergenceFailure(format!("no agreement after {} halvings (exponent {a})", cfg.max_levels)))
}

/// `int_0^inf y^{-a} / (y + x) dy` by quadrature; the exact value is
/// `pi / sin(pi a) * x^{-a}`.
pub fn quad_single(a: f64, x: f64, cfg: &QuadConfig) -> Result<f64> {
    cfg.validate()?;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!("exponent {a} is outside (0, 1)")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    Ok(log_integral(x.ln(), a, &mut |_| Ok(0.0), cfg)?.exp())
}

fn log_tree(t: &DecoratedTree, values: &BTreeMap<VertexId, f64>, log_x: f64, cfg: &QuadConfig) -> Result<f64> {
    let d = values[&t.id()];
    let mut inner = |log_y: f64| -> Result<f64> { t.children().iter().map(|c| log_tree(c, values, log_y, cfg)).sum() };
    log_integral(log_x, d, &mut inner, cfg)
}

/// The branched integral of `forest` at `x`, by nested quadrature.
/// Requires the numeric value of every `L_v` to lie in `(0, 1)`.
pub fn quad_tree(forest: &DecoratedForest, assign: &NumericAssignment, x: f64, cfg: &QuadConfig) -> Result<f64> {
    cfg.validate()?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    let sums = forest.subtree_sums();
    let mut decorations = BTreeMap::new();
    for (k, (v, d)) in forest.vertices().into_iter().enumerate() {
        let l = assign.value(&sums[&v])?;
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::Domain(format!("subtree sum at vertex {} evaluates to {l}, outside (0, 1)", k + 1)));
        }
        decorations.insert(v, assign.value(d)?);
    }
    let log_value: f64 = forest.trees().iter().map(|t| log_tree(t, &decorations, x.ln(), cfg)).sum::<Result<f64>>()?;
    Ok(log_value.exp())
}

/// Numeric value of the closed form `x^{-sum d} prod pi / sin(pi L_v)`.
pub fn closed_form(forest: &DecoratedForest, q: &InnerProduct, assign: &NumericAssignment, x: f64) -> Result<f64> {
    let symbol = regularize(forest, q)?;
    let mut forms: Vec<&LinearForm> = symbol.factors().iter().collect();
    forms.push(symbol.exponent());
    for f in &forms {
        assign.value(f)?;
    }
    Ok(symbol.evaluate(|l| assign.value(l).unwrap_or(f64::NAN), x))
}

/// Largest forest accepted by the subset-sum oracle.
pub const SUBSET_ORACLE_MAX_DEGREE: usize = 12;

/// Renormalized value via the `2^n`-term expansion
/// `sum_{V} prod_{v in V} 1/z_v * prod_{v not in V} h(z_v)`, each term projected
/// on its own with a telescoping order shuffled from `seed`.
pub fn renorm_subset_oracle_seeded(forest: &DecoratedForest, q: &InnerProduct, n: u32, seed: u64) -> Result<PiPoly> {
    let degree = forest.degree();
    if degree > SUBSET_ORACLE_MAX_DEGREE {
        return Err(Error::Domain(format!(
            "subset oracle is limited to {SUBSET_ORACLE_MAX_DEGREE} vertices, got {degree}"
        )));
    }
    if n < degree as u32 {
        return Err(Error::TruncationTooLow { have: n, need: degree as u32 });
    }
    let g = gram(forest, q)?;
    let vars = g.vertices().to_vec();
    let ctx = ProjectionContext::new(g);
    let hs = vars.iter().map(|v| h_series(*v, n).embed(&vars)).collect::<Result<Vec<_>>>()?;
    let mut total = PiPoly::zero();
    for subset in 0u64..1 << degree {
        let mut numerator = TruncSeries::one(vars.clone(), n);
        let mut poles = std::collections::BTreeSet::new();
        for (k, v) in vars.iter().enumerate() {
            if subset >> k & 1 == 1 {
                poles.insert(*v);
            } else {
                numerator = numerator.mul(&hs[k])?;
            }
        }
        let frac = GermFraction::new(numerator, poles)?;
        let order = TelescopeOrder::Shuffled(seed.wrapping_add(subset));
        total += &ev0_piplus_ordered(&frac, &ctx, order)?;
    }
    Ok(total)
}

/// [`renorm_subset_oracle_seeded`] with a fixed seed.
pub fn renorm_subset_oracle(forest: &DecoratedForest, q: &InnerProduct, n: u32) -> Result<PiPoly> {
    renorm_subset_oracle_seeded(forest, q, n, 0x5eed)
}

/// `pi / sin(pi a) * x^{-a}`.
pub fn single_closed_form(a: f64, x: f64) -> f64 {
    PI / (PI * a).sin() * x.powf(-a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{parse_forest, ParseMode};
    use crate::pairing::ratio;

    #[test]
    fn single_values() {
        let cfg = QuadConfig::default();
        assert!((quad_single(0.5, 1.0, &cfg).unwrap() - PI).abs() < 1e-10);
        assert!((quad_single(0.5, 4.0, &cfg).unwrap() - PI / 2.0).abs() < 1e-10);
        assert!(matches!(quad_single(1.2, 1.0, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn ladder_quadrature() {
        let (f, _) = parse_forest("(1 (1))", ParseMode::Auto).unwrap();
        let ids = f.vertex_ids();
        let targets = BTreeMap::from([(ids[0], 0.5), (ids[1], 0.3)]);
        let assign = NumericAssignment::from_subtree_values(&f, &targets).unwrap();
        let value = quad_tree(&f, &assign, 1.0, &QuadConfig::default()).unwrap();
        let expected = PI * PI / ((0.3 * PI).sin() * (0.5 * PI).sin());
        assert!((value - expected).abs() / expected < 1e-8, "{value} vs {expected}");
        let bad = BTreeMap::from([(ids[0], 0.5), (ids[1], 1.1)]);
        let assign = NumericAssignment::from_subtree_values(&f, &bad).unwrap();
        assert!(matches!(quad_tree(&f, &assign, 1.0, &QuadConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn subset_oracle_small() {
        let (f, q) = parse_forest("(1)", ParseMode::Auto).unwrap();
        assert!(renorm_subset_oracle(&f, &q, 3).unwrap().is_zero());
        let (f, q) = parse_forest("(1 (1))", ParseMode::Auto).unwrap();
        assert_eq!(renorm_subset_oracle(&f, &q, 4).unwrap(), PiPoly::monomial(ratio(1, 4), 1));
    }
}
