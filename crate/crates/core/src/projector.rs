//! Minimal subtraction on fractions `g(L_w, w in W) / prod_{v in V} L_v` whose
//! denominators are distinct, linearly independent linear forms.
//!
//! Work happens in the coordinates `z_w = L_w`; the only geometric input is the
//! Gram matrix `Q(L_v, L_w)`. For a pole set `S`, each `L_w` splits as
//! `sum_{v in S} a_{wv} L_v + L'_w` with `L'_w` orthogonal to every pole. The
//! part `g(L') / prod L_v` is a polar germ and is dropped. The remainder
//! `g(L) - g(L')` telescopes into differences that each shift one argument slot
//! by a multiple of one pole `z_v`, so each difference divides exactly by `z_v`
//! and leaves a fraction with one pole fewer.
//!
//! Numerators sharing a pole set are summed before recursing (the projection
//! is linear), so the work is bounded by the number of pole subsets.
//!
//! The value at zero has a second, cheaper route used by [`ev0_piplus`].
//! Both the holomorphic and the polar germs are graded by total degree, so only
//! the part of `g` of degree `|S|` can survive evaluation at zero. Write that
//! part in the mixed coordinates `(z_v, v in S; L'_w, w not in S)`. A term that
//! contains some `L'_w` never loses that factor in later steps, since
//! `L'_w` stays orthogonal to every smaller pole set. Such a term either
//! becomes polar or keeps positive degree, and contributes nothing. What
//! remains is `g` restricted to `L'_w = 0`, that is `z_w = sum_v a_{wv} z_v`.
//! This is a polynomial in the poles alone. Its monomial `z^b` is `1` when
//! `b = (1, ..., 1)` and otherwise reduces to the monomial
//! `prod_{b_v > 0} z_v^{b_v - 1}` over the poles with `b_v = 0`. These values
//! are memoized per pole set and monomial.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forest::VertexId;
use crate::pairing::{solve, GramMatrix, Rational};
use crate::series::{PiPoly, TruncSeries};

/// `numerator / prod_{v in poles} z_v` with `z_v = L_v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GermFraction {
    numerator: TruncSeries,
    poles: BTreeSet<VertexId>,
}

impl GermFraction {
    pub fn new(numerator: TruncSeries, poles: BTreeSet<VertexId>) -> Result<Self> {
        if poles.iter().any(|p| !numerator.variables().contains(p)) {
            return Err(Error::VariableMismatch);
        }
        Ok(Self { numerator, poles })
    }

    /// A fraction without poles.
    pub fn holomorphic(numerator: TruncSeries) -> Self {
        Self { numerator, poles: BTreeSet::new() }
    }

    pub fn numerator(&self) -> &TruncSeries {
        &self.numerator
    }

    pub fn poles(&self) -> &BTreeSet<VertexId> {
        &self.poles
    }
}

/// Order in which the telescoping shifts are applied. The result never
/// depends on it; the choice only affects the intermediate germs.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum TelescopeOrder {
    /// Shifts grouped by pole in vertex order, shifts of non-pole slots first
    /// within each group. This order needs no full re-substitution.
    #[default]
    Canonical,
    /// Independent random permutation of the shifts for every pole set.
    Shuffled(u64),
}

/// Solved coefficients `a_wv`, keyed by (pole mask, position of `w`).
type CoeffCache = HashMap<(u64, usize), Arc<Vec<Rational>>>;

/// Gram matrix of the coordinates plus a cache of solved projection systems.
#[derive(Debug)]
pub struct ProjectionContext {
    gram: GramMatrix,
    cache: RwLock<CoeffCache>,
    values: RwLock<HashMap<(u64, Vec<u8>), Rational>>,
}

impl Clone for ProjectionContext {
    fn clone(&self) -> Self {
        Self::new(self.gram.clone())
    }
}

#[derive(Clone, Debug)]
struct Shift {
    slot: usize,
    pole: usize,
    coeff: Rational,
}

impl ProjectionContext {
    pub fn new(gram: GramMatrix) -> Self {
        Self { gram, cache: RwLock::new(HashMap::new()), values: RwLock::new(HashMap::new()) }
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    fn mask_of(&self, poles: &BTreeSet<VertexId>) -> Result<u64> {
        if self.gram.len() > 64 {
            return Err(Error::Domain("at most 64 coordinates are supported".into()));
        }
        let mut mask = 0u64;
        for p in poles {
            let k = self.gram.index_of(*p).ok_or(Error::VariableMismatch)?;
            mask |= 1 << k;
        }
        Ok(mask)
    }

    /// Coefficients `a_{wv}` (dense over the Gram positions, zero off the mask)
    /// of the projection of `L_w` onto the span of the poles in `mask`.
    fn coeffs(&self, mask: u64, w: usize) -> Result<Arc<Vec<Rational>>> {
        if let Some(hit) = self.cache.read().unwrap().get(&(mask, w)) {
            return Ok(hit.clone());
        }
        let n = self.gram.len();
        let poles: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
        let mut dense = vec![Rational::zero(); n];
        if mask >> w & 1 == 1 {
            dense[w] = Rational::one();
        } else {
            // sum_v Q(L_v, L_u) a_{wv} = Q(L_w, L_u) for u in V
            let system: Vec<Vec<Rational>> =
                poles.iter().map(|&u| poles.iter().map(|&v| self.gram.at(v, u).clone()).collect()).collect();
            let rhs: Vec<Rational> = poles.iter().map(|&u| self.gram.at(w, u).clone()).collect();
            let sol = solve(&system, &rhs).ok_or(Error::SingularGram)?;
            for (v, a) in poles.iter().zip(sol) {
                dense[*v] = a;
            }
        }
        let dense = Arc::new(dense);
        self.cache.write().unwrap().insert((mask, w), dense.clone());
        Ok(dense)
    }

    /// Fails with [`Error::SingularGram`] unless the poles in `mask` have an
    /// invertible Gram block, i.e. are linearly independent.
    fn check_poles(&self, mask: u64) -> Result<()> {
        let poles: Vec<usize> = (0..self.gram.len()).filter(|k| mask >> k & 1 == 1).collect();
        let block: Vec<Vec<Rational>> =
            poles.iter().map(|&u| poles.iter().map(|&v| self.gram.at(u, v).clone()).collect()).collect();
        if crate::pairing::determinant(&block).is_zero() {
            return Err(Error::SingularGram);
        }
        Ok(())
    }

    /// `ev_0 pi_+ (z^m / prod_{v in mask} z_v)` for a monomial `z^m` over the
    /// Gram positions.
    fn monomial_value(&self, mask: u64, m: &[u8]) -> Result<Rational> {
        let degree: u32 = m.iter().map(|&e| e as u32).sum();
        if degree != mask.count_ones() {
            return Ok(Rational::zero());
        }
        if mask == 0 {
            return Ok(Rational::one());
        }
        let key = (mask, m.to_vec());
        if let Some(hit) = self.values.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let n = self.gram.len();
        let poles: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
        // restriction to L' = 0, as a polynomial in the poles
        let mut poly: HashMap<Vec<u8>, Rational> = HashMap::from([(vec![0; poles.len()], Rational::one())]);
        for (w, &e) in m.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let image: Vec<(usize, Rational)> = if mask >> w & 1 == 1 {
                vec![(poles.iter().position(|&p| p == w).unwrap(), Rational::one())]
            } else {
                let a = self.coeffs(mask, w)?;
                poles.iter().enumerate().filter(|(_, &p)| !a[p].is_zero()).map(|(i, &p)| (i, a[p].clone())).collect()
            };
            for _ in 0..e {
                let mut next: HashMap<Vec<u8>, Rational> = HashMap::with_capacity(poly.len() * image.len());
                for (b, c) in &poly {
                    for (i, a) in &image {
                        let mut nb = b.clone();
                        nb[*i] += 1;
                        *next.entry(nb).or_insert_with(Rational::zero) += c * a;
                    }
                }
                next.retain(|_, c| !c.is_zero());
                poly = next;
            }
        }
        let mut total = Rational::zero();
        for (b, c) in poly {
            let mut rest = 0u64;
            let mut next = vec![0u8; n];
            for (i, &p) in poles.iter().enumerate() {
                if b[i] == 0 {
                    rest |= 1 << p;
                } else {
                    next[p] = b[i] - 1;
                }
            }
            if rest == mask {
                continue;
            }
            total += c * self.monomial_value(rest, &next)?;
        }
        self.values.write().unwrap().insert(key, total.clone());
        Ok(total)
    }

    /// The unique solution `a_{wv}`, `v in poles`, of
    /// `sum_v Q(L_v, L_u) a_{wv} = Q(L_w, L_u)` for all `u in poles`.
    pub fn project_coeffs(&self, poles: &BTreeSet<VertexId>, w: VertexId) -> Result<BTreeMap<VertexId, Rational>> {
        if poles.is_empty() {
            return Err(Error::Domain("empty pole set".into()));
        }
        let mask = self.mask_of(poles)?;
        let wk = self.gram.index_of(w).ok_or(Error::VariableMismatch)?;
        let dense = self.coeffs(mask, wk)?;
        Ok(poles.iter().map(|p| (*p, dense[self.gram.index_of(*p).unwrap()].clone())).collect())
    }
}

fn prepare(frac: &GermFraction, ctx: &ProjectionContext) -> Result<(TruncSeries, u64)> {
    let g = frac.numerator.embed(ctx.gram.vertices())?;
    let npoles = frac.poles.len() as u32;
    if g.truncation() < npoles {
        return Err(Error::TruncationTooLow { have: g.truncation(), need: npoles });
    }
    let mask = ctx.mask_of(&frac.poles)?;
    ctx.check_poles(mask)?;
    Ok((g, mask))
}

/// `ev_0(pi_+(frac))` by restriction to the poles (see the module notes).
pub fn ev0_piplus(frac: &GermFraction, ctx: &ProjectionContext) -> Result<PiPoly> {
    let (g, mask) = prepare(frac, ctx)?;
    let mut total = PiPoly::zero();
    for (m, c) in g.homogeneous_part(mask.count_ones()).terms() {
        let v = ctx.monomial_value(mask, m)?;
        if !v.is_zero() {
            total += &c.scale(&v);
        }
    }
    Ok(total)
}

/// `ev_0(pi_+(frac))` by the telescoping recursion with the given order,
/// applied to the part of the numerator of degree `|poles|`.
pub fn ev0_piplus_ordered(frac: &GermFraction, ctx: &ProjectionContext, order: TelescopeOrder) -> Result<PiPoly> {
    Ok(reduce(frac, ctx, order, true)?.eval0())
}

/// Taylor expansion of `pi_+(frac)` in the Gram coordinates, to degree
/// `truncation(numerator) - |poles|`.
pub fn piplus_expand(frac: &GermFraction, ctx: &ProjectionContext) -> Result<TruncSeries> {
    reduce(frac, ctx, TelescopeOrder::Canonical, false)
}

pub fn piplus_expand_ordered(
    frac: &GermFraction,
    ctx: &ProjectionContext,
    order: TelescopeOrder,
) -> Result<TruncSeries> {
    reduce(frac, ctx, order, false)
}

fn reduce(
    frac: &GermFraction,
    ctx: &ProjectionContext,
    order: TelescopeOrder,
    only_constant: bool,
) -> Result<TruncSeries> {
    let vars = ctx.gram.vertices().to_vec();
    let (mut g, start) = prepare(frac, ctx)?;
    let npoles = start.count_ones();
    if only_constant {
        g = g.homogeneous_part(npoles);
    }
    let out_trunc = g.truncation() - npoles;
    let mut rng = match order {
        TelescopeOrder::Canonical => None,
        TelescopeOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };

    // keyed by (|S|, mask) so that pop_last yields the largest pole set
    let mut pending: BTreeMap<(u32, u64), TruncSeries> = BTreeMap::new();
    pending.insert((start.count_ones(), start), g);

    while let Some(((size, mask), numerator)) = pending.pop_last() {
        if size == 0 {
            return Ok(numerator);
        }
        if numerator.is_zero() {
            continue;
        }
        let mut shifts = shifts_for(ctx, mask)?;
        match rng.as_mut() {
            Some(r) => shifts.shuffle(r),
            None => shifts.sort_by_key(|s| (s.pole, mask >> s.slot & 1, s.slot)),
        }
        for (pole, f) in telescope(&numerator, &vars, mask, &shifts)? {
            let key = (size - 1, mask & !(1 << pole));
            match pending.get_mut(&key) {
                Some(acc) => acc.add_assign(&f)?,
                None => {
                    pending.insert(key, f);
                }
            }
        }
    }
    Ok(TruncSeries::zero(vars, out_trunc))
}

fn shifts_for(ctx: &ProjectionContext, mask: u64) -> Result<Vec<Shift>> {
    let n = ctx.gram.len();
    let mut shifts = Vec::new();
    for w in 0..n {
        let a = ctx.coeffs(mask, w)?;
        for (v, c) in a.iter().enumerate() {
            if !c.is_zero() {
                shifts.push(Shift { slot: w, pole: v, coeff: c.clone() });
            }
        }
    }
    Ok(shifts)
}

/// Runs the telescoping expansion of `g(L) - g(L')` for the pole set `mask`
/// and returns, per pole `v`, the sum of the quotients `h_l` with `v_l = v`.
///
/// Walks backwards from `A_N = id`: removing a shift of a non-pole slot `u` is
/// the shear `z_u <- z_u - c z_v`, since `z_u` only ever appears in slot `u`.
/// Removing the shift of a pole slot `u` is `z_u <- 0` provided `z_u` no longer
/// appears in other slots; otherwise the germ is recomputed from `g`.
fn telescope(g: &TruncSeries, vars: &[VertexId], mask: u64, shifts: &[Shift]) -> Result<BTreeMap<usize, TruncSeries>> {
    let n = vars.len();
    let mut images: Vec<BTreeMap<usize, Rational>> = (0..n).map(|k| BTreeMap::from([(k, Rational::one())])).collect();
    let mut current = g.clone();
    let mut out: BTreeMap<usize, TruncSeries> = BTreeMap::new();
    for shift in shifts.iter().rev() {
        let Shift { slot: u, pole: v, coeff: c } = shift;
        let entry = images[*u].entry(*v).or_insert_with(Rational::zero);
        *entry -= c;
        if entry.is_zero() {
            images[*u].remove(v);
        }
        let previous = if mask >> u & 1 == 0 {
            current.shear(vars[*u], vars[*v], &-c)?
        } else if (0..n).all(|w| w == *u || !images[w].contains_key(u)) {
            current.set_zero(vars[*u])?
        } else {
            let assignment = images
                .iter()
                .enumerate()
                .map(|(w, img)| (vars[w], img.iter().map(|(k, x)| (vars[*k], x.clone())).collect()))
                .collect();
            g.subst_linear(&assignment)?
        };
        let h = current.sub(&previous)?.div_by_var(vars[*v])?;
        match out.get_mut(v) {
            Some(acc) => acc.add_assign(&h)?,
            None => {
                out.insert(*v, h);
            }
        }
        current = previous;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::{rat, ratio};
    use crate::series::h_series;

    fn ladder_ctx() -> (ProjectionContext, VertexId, VertexId) {
        let (s, t) = (VertexId::fresh(), VertexId::fresh());
        let gram = GramMatrix::new(vec![s, t], vec![vec![rat(2), rat(1)], vec![rat(1), rat(1)]]).unwrap();
        (ProjectionContext::new(gram), s, t)
    }

    fn pi_over(k: i64) -> PiPoly {
        PiPoly::monomial(ratio(1, k), 1)
    }

    #[test]
    fn ladder_coefficients() {
        let (ctx, root, leaf) = ladder_ctx();
        let a = ctx.project_coeffs(&BTreeSet::from([leaf]), root).unwrap();
        assert_eq!(a[&leaf], rat(1));
        let a = ctx.project_coeffs(&BTreeSet::from([root]), leaf).unwrap();
        assert_eq!(a[&root], ratio(1, 2));
        let a = ctx.project_coeffs(&BTreeSet::from([root, leaf]), leaf).unwrap();
        assert_eq!(a[&leaf], rat(1));
        assert_eq!(a[&root], rat(0));
    }

    #[test]
    fn singular_gram() {
        let (s, t, u) = (VertexId::fresh(), VertexId::fresh(), VertexId::fresh());
        let gram = GramMatrix::new(
            vec![s, t, u],
            vec![vec![rat(1), rat(1), rat(0)], vec![rat(1), rat(1), rat(0)], vec![rat(0), rat(0), rat(1)]],
        )
        .unwrap();
        let ctx = ProjectionContext::new(gram);
        assert_eq!(ctx.project_coeffs(&BTreeSet::from([s]), t).unwrap()[&s], rat(1));
        assert_eq!(ctx.project_coeffs(&BTreeSet::from([s, t]), u), Err(Error::SingularGram));
        let num = h_series(u, 4).embed(&[s, t, u]).unwrap();
        let frac = GermFraction::new(num, BTreeSet::from([s, t])).unwrap();
        assert_eq!(ev0_piplus(&frac, &ctx), Err(Error::SingularGram));
        assert_eq!(ev0_piplus_ordered(&frac, &ctx, TelescopeOrder::Shuffled(3)), Err(Error::SingularGram));
    }

    #[test]
    fn constant_numerator_is_polar() {
        let (ctx, s, t) = ladder_ctx();
        let frac = GermFraction::new(TruncSeries::one(vec![s, t], 4), BTreeSet::from([s, t])).unwrap();
        assert!(ev0_piplus(&frac, &ctx).unwrap().is_zero());
    }

    #[test]
    fn single_pole_examples() {
        let (ctx, s, t) = ladder_ctx();
        let vars = vec![s, t];
        let hs = h_series(s, 5).embed(&vars).unwrap();
        let frac = GermFraction::new(hs, BTreeSet::from([t])).unwrap();
        assert_eq!(ev0_piplus(&frac, &ctx).unwrap(), pi_over(6));
        let expanded = piplus_expand(&frac, &ctx).unwrap();
        assert_eq!(expanded.truncation(), 4);
        assert_eq!(expanded.eval0(), pi_over(6));

        let ht = h_series(t, 5).embed(&vars).unwrap();
        let frac = GermFraction::new(ht, BTreeSet::from([s])).unwrap();
        assert_eq!(ev0_piplus(&frac, &ctx).unwrap(), pi_over(12));
    }

    #[test]
    fn no_poles_is_identity() {
        let (ctx, s, t) = ladder_ctx();
        let num = h_series(s, 5).embed(&[s, t]).unwrap();
        let out = piplus_expand(&GermFraction::holomorphic(num.clone()), &ctx).unwrap();
        assert_eq!(out, num);
    }

    #[test]
    fn orthogonal_numerator_is_annihilated() {
        // L' = L_s - L_t is orthogonal to L_t in the ladder Gram matrix
        let (ctx, s, t) = ladder_ctx();
        let vars = vec![s, t];
        let shifted = h_series(s, 5).embed(&vars).unwrap().shear(s, t, &rat(-1)).unwrap();
        let frac = GermFraction::new(shifted, BTreeSet::from([t])).unwrap();
        let out = piplus_expand(&frac, &ctx).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn truncation_guard() {
        let (ctx, s, t) = ladder_ctx();
        let frac = GermFraction::new(TruncSeries::one(vec![s, t], 1), BTreeSet::from([s, t])).unwrap();
        assert!(matches!(ev0_piplus(&frac, &ctx), Err(Error::TruncationTooLow { have: 1, need: 2 })));
    }

    #[test]
    fn laurent_identity_one_variable() {
        // 1/z + h(z) and (1 + z h(z))/z project to the same value
        let v = VertexId::fresh();
        let gram = GramMatrix::new(vec![v], vec![vec![rat(3)]]).unwrap();
        let ctx = ProjectionContext::new(gram);
        let single = GermFraction::new(crate::series::laurent_numerator(v, 6), BTreeSet::from([v])).unwrap();
        let polar = GermFraction::new(TruncSeries::one(vec![v], 5), BTreeSet::from([v])).unwrap();
        let holo = GermFraction::holomorphic(h_series(v, 5));
        let split = &ev0_piplus(&polar, &ctx).unwrap() + &ev0_piplus(&holo, &ctx).unwrap();
        assert_eq!(ev0_piplus(&single, &ctx).unwrap(), split);
        assert!(split.is_zero());
    }
}
