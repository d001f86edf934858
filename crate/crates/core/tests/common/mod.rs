#![allow(dead_code)]

use std::collections::BTreeSet;

use branched_renorm::forest::{concat, parse_forest, ParseMode};
use branched_renorm::{DecoratedForest, InnerProduct, Rational};
use rand::seq::SliceRandom;
use rand::Rng;

/// Undecorated rooted tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Shape(pub Vec<Shape>);

impl Shape {
    pub fn size(&self) -> usize {
        1 + self.0.iter().map(Shape::size).sum::<usize>()
    }

    fn canonical(&self) -> Shape {
        let mut kids: Vec<Shape> = self.0.iter().map(Shape::canonical).collect();
        kids.sort();
        Shape(kids)
    }
}

pub type ForestShape = Vec<Shape>;

fn canonical_forest(f: &ForestShape) -> ForestShape {
    let mut trees: Vec<Shape> = f.iter().map(Shape::canonical).collect();
    trees.sort();
    trees
}

/// All rooted trees with `n` vertices, up to isomorphism.
pub fn trees(n: usize) -> Vec<Shape> {
    if n == 0 {
        return Vec::new();
    }
    forests(n - 1).into_iter().map(Shape).map(|t| t.canonical()).collect()
}

/// All rooted forests with `n` vertices, up to isomorphism.
pub fn forests(n: usize) -> Vec<ForestShape> {
    let mut out: BTreeSet<ForestShape> = BTreeSet::new();
    if n == 0 {
        out.insert(Vec::new());
    }
    for k in 1..=n {
        for t in trees(k) {
            for mut rest in forests(n - k) {
                rest.push(t.clone());
                out.insert(canonical_forest(&rest));
            }
        }
    }
    out.into_iter().collect()
}

/// Every forest shape with at most `n` vertices, the empty forest included.
pub fn catalog(n: usize) -> Vec<ForestShape> {
    (0..=n).flat_map(forests).collect()
}

/// Random forest shape with exactly `n` vertices: every vertex after the
/// first picks a parent among earlier vertices or starts a new tree.
pub fn random_shape(n: usize, rng: &mut impl Rng) -> ForestShape {
    let mut parent: Vec<Option<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let roll = rng.gen_range(0..=i);
        parent.push(if roll == i { None } else { Some(roll) });
    }
    fn build(v: usize, parent: &[Option<usize>]) -> Shape {
        Shape((0..parent.len()).filter(|&c| parent[c] == Some(v)).map(|c| build(c, parent)).collect())
    }
    (0..n).filter(|&v| parent[v].is_none()).map(|v| build(v, &parent)).collect()
}

pub fn random_weight(rng: &mut impl Rng) -> Rational {
    Rational::new(rng.gen_range(1..=9).into(), rng.gen_range(1..=5).into())
}

/// Weight text with the given preorder weights.
pub fn render(shape: &ForestShape, weights: &[Rational]) -> String {
    fn tree(t: &Shape, weights: &[Rational], next: &mut usize) -> String {
        let me = *next;
        *next += 1;
        let body: String = t.0.iter().map(|c| format!(" {}", tree(c, weights, next))).collect();
        format!("({}{body})", weights[me])
    }
    if shape.is_empty() {
        return "1".into();
    }
    let mut next = 0;
    let parts: Vec<String> = shape.iter().map(|t| tree(t, weights, &mut next)).collect();
    parts.join(" ")
}

/// Same as [`render`] with siblings and trees shuffled at every level.
pub fn render_shuffled(shape: &ForestShape, weights: &[Rational], rng: &mut impl Rng) -> String {
    fn tree(t: &Shape, weights: &[Rational], next: &mut usize, rng: &mut impl Rng) -> String {
        let me = *next;
        *next += 1;
        let mut kids: Vec<String> = t.0.iter().map(|c| tree(c, weights, next, rng)).collect();
        kids.shuffle(rng);
        let body: String = kids.iter().map(|s| format!(" {s}")).collect();
        format!("({}{body})", weights[me])
    }
    if shape.is_empty() {
        return "1".into();
    }
    let mut next = 0;
    let mut parts: Vec<String> = shape.iter().map(|t| tree(t, weights, &mut next, rng)).collect();
    parts.shuffle(rng);
    parts.join(" ")
}

pub fn size(shape: &ForestShape) -> usize {
    shape.iter().map(Shape::size).sum()
}

pub fn random_weights(n: usize, rng: &mut impl Rng) -> Vec<Rational> {
    (0..n).map(|_| random_weight(rng)).collect()
}

/// Parses a shape with the given preorder weights.
pub fn instantiate(shape: &ForestShape, weights: &[Rational]) -> (DecoratedForest, InnerProduct) {
    let text = render(shape, weights);
    parse_forest(&text, ParseMode::Auto).unwrap_or_else(|e| panic!("{text}: {e}"))
}

/// Random forest with `n` vertices and random rational weights.
pub fn random_forest(n: usize, rng: &mut impl Rng) -> (DecoratedForest, InnerProduct, String) {
    let shape = random_shape(n, rng);
    let weights = random_weights(n, rng);
    let text = render(&shape, &weights);
    let (f, q) = parse_forest(&text, ParseMode::Auto).unwrap();
    (f, q, text)
}

/// Product of two forests after moving the second onto fresh coordinates.
pub fn disjoint_product(
    a: &(DecoratedForest, InnerProduct),
    b: &(DecoratedForest, InnerProduct),
) -> (DecoratedForest, InnerProduct) {
    let offset = a.1.indices().iter().max().map_or(0, |m| m + 1);
    let q = a.1.direct_sum(&b.1.reindexed(offset)).unwrap();
    let f = concat(&a.0, &b.0.reindexed(offset), &q).unwrap();
    (f, q)
}

/// Explicit-mode text for the same decorated forest as [`render`] (vertex `k`
/// in preorder keeps direction `e_k`), with branches shuffled at every level.
pub fn render_explicit_shuffled(shape: &ForestShape, weights: &[Rational], rng: &mut impl Rng) -> String {
    let n = weights.len();
    let rows: Vec<String> = (0..n)
        .map(|i| {
            let row: Vec<String> = (0..n).map(|j| if i == j { weights[i].to_string() } else { "0".into() }).collect();
            row.join(",")
        })
        .collect();
    fn tree(t: &Shape, n: usize, next: &mut usize, rng: &mut impl Rng) -> String {
        let me = *next;
        *next += 1;
        let vector: Vec<&str> = (0..n).map(|j| if j == me { "1" } else { "0" }).collect();
        let mut kids: Vec<String> = t.0.iter().map(|c| tree(c, n, next, rng)).collect();
        kids.shuffle(rng);
        let body: String = kids.iter().map(|s| format!(" {s}")).collect();
        format!("([{}]{body})", vector.join(","))
    }
    if shape.is_empty() {
        return "1".into();
    }
    let mut next = 0;
    let mut parts: Vec<String> = shape.iter().map(|t| tree(t, n, &mut next, rng)).collect();
    parts.shuffle(rng);
    format!("Q={}\n{}", rows.join(";"), parts.join(" "))
}
