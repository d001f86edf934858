//! Exact regularization and renormalization of branched integrals indexed by
//! decorated rooted forests (Kreimer's toy model).
//!
//! Each vertex of a rooted forest carries a rational linear form. The nested
//! integrals attached to a properly decorated forest have the closed form
//! `x^{-sum d(v)} * prod_v pi / sin(pi L_v)`, where `L_v` is the sum of the
//! decorations in the subtree rooted at `v`. Renormalization applies the
//! holomorphic projection determined by an inner product on the decorations
//! and evaluates at zero. All values are exact polynomials in `pi^2` with
//! rational coefficients.
//!
//! Modules, bottom-up:
//!
//! * [`pairing`]: linear forms, inner products, Gram matrices.
//! * [`forest`]: decorated forests, grafting, concatenation, text format.
//! * [`series`]: truncated multivariate series over `Q[pi^2]`.
//! * [`projector`]: minimal subtraction on fractions with simple linear poles.
//! * [`renorm`]: the regularization / renormalization pipeline.
//! * [`universal`]: folds of forests into operated locality targets.
//! * [`oracle`]: independent numeric and combinatorial cross-checks.
//! * [`cli`]: the batch command-line front end.

pub mod cli;
pub mod error;
pub mod forest;
pub mod oracle;
pub mod pairing;
pub mod projector;
pub mod renorm;
pub mod series;
pub mod universal;

pub use error::{Error, Result};
pub use forest::{Decomposition, DecoratedForest, DecoratedTree, VertexId};
pub use pairing::{GramMatrix, InnerProduct, LinearForm, Rational};
pub use projector::{GermFraction, ProjectionContext, TelescopeOrder};
pub use renorm::{RegularizedIntegral, RenormalizedValue};
pub use series::{PiPoly, TruncSeries};
