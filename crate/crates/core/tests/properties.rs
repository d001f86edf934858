mod common;

use std::collections::{BTreeMap, BTreeSet};

use branched_renorm::forest::{parse_forest, serialize, ParseMode};
use branched_renorm::pairing::{gram, gram_from_subtree_sums};
use branched_renorm::projector::{ev0_piplus, ev0_piplus_ordered, TelescopeOrder};
use branched_renorm::renorm::{regularize, renormalize};
use branched_renorm::{GermFraction, PiPoly, ProjectionContext, Rational, TruncSeries, VertexId};
use common::*;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vars(n: usize) -> Vec<VertexId> {
    (0..n).map(|_| VertexId::fresh()).collect()
}

fn random_series(vars: &[VertexId], trunc: u32, rng: &mut impl Rng) -> TruncSeries {
    let mut terms = BTreeMap::new();
    for _ in 0..rng.gen_range(0..6) {
        let mut m = vec![0u8; vars.len()];
        for _ in 0..rng.gen_range(0..=trunc) {
            m[rng.gen_range(0..vars.len())] += 1;
        }
        let c = Rational::new(rng.gen_range(-6..=6).into(), rng.gen_range(1..=3).into());
        terms.insert(m, PiPoly::monomial(c, rng.gen_range(0..=2)));
    }
    TruncSeries::from_terms(vars.to_vec(), trunc, terms).unwrap()
}

fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn series_ring_laws(seed in any::<u64>(), n in 1usize..4, trunc in 0u32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = vars(n);
        let (a, b, c) = (random_series(&v, trunc, &mut rng), random_series(&v, trunc, &mut rng), random_series(&v, trunc, &mut rng));
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(
            a.mul(&b.add(&c).unwrap()).unwrap(),
            a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
        );
        prop_assert!(a.sub(&a).unwrap().is_zero());
        prop_assert_eq!(a.mul(&TruncSeries::one(v.clone(), trunc)).unwrap(), a.clone());
    }

    #[test]
    fn shear_is_invertible(seed in any::<u64>(), n in 2usize..4, num in -5i64..=5, den in 1i64..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = vars(n);
        let s = random_series(&v, 4, &mut rng);
        let c = ratio(num, den);
        let back = s.shear(v[0], v[1], &c).unwrap().shear(v[0], v[1], &-c.clone()).unwrap();
        prop_assert_eq!(back, s.clone());
        // the shear agrees with the general substitution
        let assignment = BTreeMap::from([(v[0], BTreeMap::from([(v[0], Rational::from_integer(1.into())), (v[1], c.clone())]))]);
        prop_assert_eq!(s.shear(v[0], v[1], &c).unwrap(), s.subst_linear(&assignment).unwrap());
    }

    #[test]
    fn divide_after_multiply(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = vars(n);
        let s = random_series(&v, 3, &mut rng).truncated(3);
        let up = TruncSeries::from_terms(v.clone(), 4, s.terms().map(|(m, c)| (m.clone(), c.clone()))).unwrap();
        prop_assert_eq!(up.mul_by_var(v[n - 1]).unwrap().div_by_var(v[n - 1]).unwrap(), up);
    }

    #[test]
    fn text_round_trip(seed in any::<u64>(), n in 0usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, q, _) = random_forest(n, &mut rng);
        let text = serialize(&f, &q).unwrap();
        let (g, q2) = parse_forest(&text, ParseMode::Auto).unwrap();
        prop_assert_eq!(g.degree(), f.degree());
        prop_assert_eq!(serialize(&g, &q2).unwrap(), text);
        prop_assert_eq!(regularize(&g, &q2).unwrap(), regularize(&f, &q).unwrap());
    }

    #[test]
    fn gram_overlap_rule(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, q, _) = random_forest(n, &mut rng);
        let fast = gram(&f, &q).unwrap();
        prop_assert_eq!(&fast, &gram_from_subtree_sums(&f, &q).unwrap());
        prop_assert!(fast.determinant() > Rational::zero());
        let c = ratio(rng.gen_range(1..9), rng.gen_range(1..9));
        let scaled = gram(&f, &q.scaled(&c).unwrap()).unwrap();
        prop_assert_eq!(scaled, fast.scaled(&c));
    }

    #[test]
    fn regularize_is_multiplicative(seed in any::<u64>(), n1 in 0usize..5, n2 in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f1, q1, _) = random_forest(n1, &mut rng);
        let (f2, q2, _) = random_forest(n2, &mut rng);
        let offset = q1.indices().iter().max().map_or(0, |m| m + 1);
        let q2r = q2.reindexed(offset);
        let f2r = f2.reindexed(offset);
        let (fp, qp) = disjoint_product(&(f1.clone(), q1.clone()), &(f2, q2));
        let expected = regularize(&f1, &q1).unwrap().product(&regularize(&f2r, &q2r).unwrap());
        prop_assert_eq!(regularize(&fp, &qp).unwrap(), expected);
    }

    #[test]
    fn values_depend_on_q_only_through_ratios(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, q, _) = random_forest(n, &mut rng);
        let c = ratio(rng.gen_range(1..20), rng.gen_range(1..20));
        let a = renormalize(&f, &q).unwrap().exact;
        let b = renormalize(&f, &q.scaled(&c).unwrap()).unwrap().exact;
        prop_assert_eq!(&a, &b);
        // renormalized values are homogeneous of degree |V| in Pi
        if n % 2 == 1 {
            prop_assert!(a.is_zero());
        } else {
            prop_assert!(a.coeffs().iter().enumerate().all(|(k, x)| x.is_zero() || 2 * k == n));
        }
    }

    #[test]
    fn fast_path_matches_telescoping(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, q, _) = random_forest(n, &mut rng);
        let g = gram(&f, &q).unwrap();
        let v = g.vertices().to_vec();
        let ctx = ProjectionContext::new(g);
        let mut poles: BTreeSet<VertexId> = v.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        poles.insert(v[rng.gen_range(0..v.len())]);
        let trunc = poles.len() as u32 + 1;
        let a = random_series(&v, trunc, &mut rng);
        let b = random_series(&v, trunc, &mut rng);
        let fa = GermFraction::new(a.clone(), poles.clone()).unwrap();
        let fb = GermFraction::new(b.clone(), poles.clone()).unwrap();
        let sum = GermFraction::new(a.add(&b).unwrap(), poles).unwrap();
        let va = ev0_piplus(&fa, &ctx).unwrap();
        prop_assert_eq!(&va, &ev0_piplus_ordered(&fa, &ctx, TelescopeOrder::Shuffled(seed)).unwrap());
        let vb = ev0_piplus(&fb, &ctx).unwrap();
        prop_assert_eq!(ev0_piplus(&sum, &ctx).unwrap(), &va + &vb);
    }
}

#[test]
fn branch_permutation_keeps_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for shape in catalog(6) {
        let weights = random_weights(size(&shape), &mut rng);
        let (f, q) = instantiate(&shape, &weights);
        let text = render_explicit_shuffled(&shape, &weights, &mut rng);
        let (g, q2) = parse_forest(&text, ParseMode::Auto).unwrap();
        assert_eq!(renormalize(&f, &q).unwrap().exact, renormalize(&g, &q2).unwrap().exact, "{text}");
    }
}
