//! Folds of decorated forests into operated locality monoids.
//!
//! Properly decorated forests form the initial operated locality monoid: for
//! any target with a unit, a partial commutative product and a partial action
//! of the decorations, there is exactly one structure-preserving map out of
//! the forests. [`fold`] computes it by structural recursion,
//!
//! ```text
//! fold(1)          = 1_U
//! fold(T1 ... Tk)  = fold(T1) * ... * fold(Tk)
//! fold(B+^w(F))    = beta^w(fold(F))
//! ```
//!
//! and checks every product and action against the target's own locality
//! predicates as it goes, so it can be used with arbitrary targets.
//!
//! The ordinary (non-locality) universal property is the special case in
//! which every predicate holds; wrap any target in [`Unconstrained`] to get it.

use std::fmt;

use crate::error::{Error, Result};
use crate::forest::{concat, graft, Decomposition, DecoratedForest};
use crate::pairing::{InnerProduct, LinearForm};
use crate::renorm::RegularizedIntegral;

/// A commutative operated locality monoid with operators indexed by linear
/// forms.
///
/// Implementations must keep [`multiply`](Self::multiply) associative and
/// commutative on pairwise independent values, make the unit independent of
/// everything, and only be asked to act or multiply where the corresponding
/// predicate holds. A target that is `Sync` may be folded from several
/// threads at once; [`fold`] itself keeps no state.
pub trait OperatedLocalityTarget {
    type Value: Clone + PartialEq + fmt::Debug;

    fn unit(&self) -> Self::Value;

    /// Locality relation between two values.
    fn independent(&self, a: &Self::Value, b: &Self::Value) -> bool;

    /// Product of two independent values.
    fn multiply(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;

    /// Locality relation between an operator index and a value.
    fn acts_on(&self, omega: &LinearForm, u: &Self::Value) -> bool;

    /// The operator `beta^omega` applied to `u`.
    fn act(&self, omega: &LinearForm, u: &Self::Value) -> Self::Value;
}

fn describe(forest: &DecoratedForest) -> String {
    String::from_utf8_lossy(&forest.canonical()).into_owned()
}

/// The unique locality morphism from forests into `target`, evaluated on
/// `forest`. Fails at the first product or action the target rejects.
pub fn fold<T: OperatedLocalityTarget + ?Sized>(forest: &DecoratedForest, target: &T) -> Result<T::Value> {
    match forest.decompose() {
        Decomposition::Empty => Ok(target.unit()),
        Decomposition::Product(trees) => {
            let images = trees.iter().map(|t| fold(&t.clone().into_forest(), target)).collect::<Result<Vec<_>>>()?;
            for a in 0..images.len() {
                for b in a + 1..images.len() {
                    if !target.independent(&images[a], &images[b]) {
                        return Err(Error::LocalityViolation(format!(
                            "images of trees {} and {} are not independent in {}",
                            a + 1,
                            b + 1,
                            describe(forest)
                        )));
                    }
                }
            }
            let mut acc = target.unit();
            for image in &images {
                acc = target.multiply(&acc, image);
            }
            Ok(acc)
        }
        Decomposition::Grafted(omega, branches) => {
            let inner = fold(&branches, target)?;
            if !target.acts_on(&omega, &inner) {
                return Err(Error::LocalityViolation(format!(
                    "operator {omega} cannot act on the image of {}",
                    describe(&branches)
                )));
            }
            Ok(target.act(&omega, &inner))
        }
    }
}

/// The same target with every locality predicate replaced by `true`.
#[derive(Clone, Debug)]
pub struct Unconstrained<T>(pub T);

impl<T: OperatedLocalityTarget> OperatedLocalityTarget for Unconstrained<T> {
    type Value = T::Value;

    fn unit(&self) -> Self::Value {
        self.0.unit()
    }

    fn independent(&self, _: &Self::Value, _: &Self::Value) -> bool {
        true
    }

    fn multiply(&self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        self.0.multiply(a, b)
    }

    fn acts_on(&self, _: &LinearForm, _: &Self::Value) -> bool {
        true
    }

    fn act(&self, omega: &LinearForm, u: &Self::Value) -> Self::Value {
        self.0.act(omega, u)
    }
}

fn orthogonal(q: &InnerProduct, a: &[&LinearForm], b: &[&LinearForm]) -> bool {
    a.iter().all(|x| b.iter().all(|y| q.is_independent(x, y)))
}

fn forms(r: &RegularizedIntegral) -> Vec<&LinearForm> {
    std::iter::once(r.exponent()).chain(r.factors()).collect()
}

/// Symbols `x^{-E} prod pi / sin(pi L)` under pointwise product, with
/// `beta^L` the integration operator `f(y) |-> int_0^inf f(y) y^{-L} / (y + x) dy`.
/// Folding a forest into this target reproduces its regularized integral.
#[derive(Clone, Debug)]
pub struct SymbolicIntegralTarget {
    q: InnerProduct,
}

impl SymbolicIntegralTarget {
    pub fn new(q: InnerProduct) -> Self {
        Self { q }
    }
}

/// Constructs the symbolic integral target for the pairing `q`.
pub fn symbolic_integral_target(q: &InnerProduct) -> SymbolicIntegralTarget {
    SymbolicIntegralTarget::new(q.clone())
}

impl OperatedLocalityTarget for SymbolicIntegralTarget {
    type Value = RegularizedIntegral;

    fn unit(&self) -> Self::Value {
        RegularizedIntegral::unit()
    }

    fn independent(&self, a: &Self::Value, b: &Self::Value) -> bool {
        orthogonal(&self.q, &forms(a), &forms(b))
    }

    fn multiply(&self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        a.product(b)
    }

    fn acts_on(&self, omega: &LinearForm, u: &Self::Value) -> bool {
        orthogonal(&self.q, &[omega], &forms(u))
    }

    fn act(&self, omega: &LinearForm, u: &Self::Value) -> Self::Value {
        u.integrate(omega)
    }
}

/// The additive monoid of linear forms with `beta^w(u) = phi(w + u)`.
pub struct BetaPhiTarget<F> {
    q: InnerProduct,
    phi: F,
}

impl<F: Fn(&LinearForm) -> LinearForm> BetaPhiTarget<F> {
    pub fn new(q: InnerProduct, phi: F) -> Self {
        Self { q, phi }
    }

    /// Checks that `phi` is independent of the identity on `decorations`:
    /// `phi(a)` must be orthogonal to `b` for every orthogonal pair `a, b`.
    pub fn check_phi_local(&self, decorations: &[&LinearForm]) -> Result<()> {
        for (i, a) in decorations.iter().enumerate() {
            for (j, b) in decorations.iter().enumerate() {
                if i != j && self.q.is_independent(a, b) && !self.q.is_independent(&(self.phi)(a), b) {
                    return Err(Error::LocalityViolation(format!(
                        "phi({a}) is not independent of {b} (vertices {} and {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

impl<F: Fn(&LinearForm) -> LinearForm> OperatedLocalityTarget for BetaPhiTarget<F> {
    type Value = LinearForm;

    fn unit(&self) -> LinearForm {
        LinearForm::zero()
    }

    fn independent(&self, a: &LinearForm, b: &LinearForm) -> bool {
        self.q.is_independent(a, b)
    }

    fn multiply(&self, a: &LinearForm, b: &LinearForm) -> LinearForm {
        a + b
    }

    fn acts_on(&self, omega: &LinearForm, u: &LinearForm) -> bool {
        self.q.is_independent(omega, u)
    }

    fn act(&self, omega: &LinearForm, u: &LinearForm) -> LinearForm {
        (self.phi)(&(omega + u))
    }
}

/// The `phi`-branched map: `hat(1) = 0`, `hat(F1 F2) = hat(F1) + hat(F2)`,
/// `hat(B+^w(F)) = phi(w + hat(F))`.
pub fn branched(
    phi: impl Fn(&LinearForm) -> LinearForm,
    forest: &DecoratedForest,
    q: &InnerProduct,
) -> Result<LinearForm> {
    let target = BetaPhiTarget::new(q.clone(), phi);
    let vertices = forest.vertices();
    let decorations: Vec<&LinearForm> = vertices.iter().map(|(_, d)| *d).collect();
    target.check_phi_local(&decorations)?;
    fold(forest, &target)
}

/// Independent inputs have independent images.
pub fn check_independence<T: OperatedLocalityTarget>(
    f1: &DecoratedForest,
    f2: &DecoratedForest,
    q: &InnerProduct,
    target: &T,
) -> Result<bool> {
    if concat(f1, f2, q).is_err() {
        return Ok(true);
    }
    Ok(target.independent(&fold(f1, target)?, &fold(f2, target)?))
}

/// The image of a product of independent forests is the product of images.
pub fn check_multiplicative<T: OperatedLocalityTarget>(
    f1: &DecoratedForest,
    f2: &DecoratedForest,
    q: &InnerProduct,
    target: &T,
) -> Result<bool> {
    let product = concat(f1, f2, q)?;
    let expected = target.multiply(&fold(f1, target)?, &fold(f2, target)?);
    Ok(fold(&product, target)? == expected)
}

/// Grafting is carried to the action: `fold(B+^w(F)) = beta^w(fold(F))`.
pub fn check_action<T: OperatedLocalityTarget>(
    omega: &LinearForm,
    forest: &DecoratedForest,
    q: &InnerProduct,
    target: &T,
) -> Result<bool> {
    let tree = graft(omega, forest, q)?.into_forest();
    let inner = fold(forest, target)?;
    Ok(target.acts_on(omega, &inner) && fold(&tree, target)? == target.act(omega, &inner))
}
