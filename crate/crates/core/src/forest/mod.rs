//! Rooted forests whose vertices carry linear forms.
//!
//! Forests are non-planar: the children of a vertex and the trees of a forest
//! form multisets. Equality is decided on [`DecoratedForest::canonical`], which
//! sorts sibling encodings.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::pairing::{InnerProduct, LinearForm, Rational};

mod text;

pub(crate) use text::parse_rational;
pub use text::{parse_forest, serialize, serialize_explicit, ParseMode};

static NEXT_VERTEX: AtomicU64 = AtomicU64::new(1);

/// Opaque vertex token. Fresh ids are unique for the lifetime of the process.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(u64);

impl VertexId {
    pub fn fresh() -> Self {
        VertexId(NEXT_VERTEX.fetch_add(1, Ordering::Relaxed))
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct DecoratedTree {
    id: VertexId,
    decoration: LinearForm,
    children: Vec<DecoratedTree>,
}

impl DecoratedTree {
    /// A single vertex `•_d`.
    pub fn leaf(decoration: LinearForm) -> Self {
        Self { id: VertexId::fresh(), decoration, children: Vec::new() }
    }

    /// Attaches `child` below the root without any locality check. Use
    /// [`graft`] for the checked operation.
    pub fn with_child(mut self, child: DecoratedTree) -> Self {
        self.children.push(child);
        self
    }

    pub fn id(&self) -> VertexId {
        self.id
    }

    pub fn decoration(&self) -> &LinearForm {
        &self.decoration
    }

    pub fn children(&self) -> &[DecoratedTree] {
        &self.children
    }

    pub fn degree(&self) -> usize {
        1 + self.children.iter().map(DecoratedTree::degree).sum::<usize>()
    }

    /// The children as a forest (`F'` in `B+^w(F')`).
    pub fn branches(&self) -> DecoratedForest {
        DecoratedForest { trees: self.children.clone() }
    }

    pub fn into_forest(self) -> DecoratedForest {
        DecoratedForest { trees: vec![self] }
    }

    fn encode(&self, out: &mut Vec<u8>, with_decorations: bool) {
        out.push(b'(');
        if with_decorations {
            encode_form(&self.decoration, out);
        }
        let mut kids: Vec<Vec<u8>> = self
            .children
            .iter()
            .map(|c| {
                let mut buf = Vec::new();
                c.encode(&mut buf, with_decorations);
                buf
            })
            .collect();
        kids.sort();
        for k in kids {
            out.extend_from_slice(&k);
        }
        out.push(b')');
    }

    fn map_decorations(&self, f: &mut impl FnMut(&LinearForm) -> LinearForm) -> Self {
        Self {
            id: VertexId::fresh(),
            decoration: f(&self.decoration),
            children: self.children.iter().map(|c| c.map_decorations(f)).collect(),
        }
    }
}

fn encode_form(form: &LinearForm, out: &mut Vec<u8>) {
    out.push(b'[');
    for (k, (i, c)) in form.iter().enumerate() {
        if k > 0 {
            out.push(b',');
        }
        out.extend_from_slice(format!("{i}:{c}").as_bytes());
    }
    out.push(b']');
}

/// A finite multiset of decorated rooted trees; the empty forest is the unit `1`.
#[derive(Clone, Debug, Default)]
pub struct DecoratedForest {
    trees: Vec<DecoratedTree>,
}

impl PartialEq for DecoratedForest {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for DecoratedForest {}

impl From<DecoratedTree> for DecoratedForest {
    fn from(tree: DecoratedTree) -> Self {
        tree.into_forest()
    }
}

/// Unique decomposition of a forest.
#[derive(Clone, Debug)]
pub enum Decomposition {
    Empty,
    /// At least two trees.
    Product(Vec<DecoratedTree>),
    /// One tree `B+^w(F')`.
    Grafted(LinearForm, DecoratedForest),
}

/// Preorder record of one vertex, see [`DecoratedForest::subtree_spans`].
#[derive(Clone, Debug)]
pub(crate) struct Span<'a> {
    pub id: VertexId,
    pub decoration: &'a LinearForm,
    /// Number of vertices in the subtree rooted here.
    pub size: usize,
    /// Preorder positions of the children.
    pub children: Vec<usize>,
}

impl DecoratedForest {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Forest from trees, without locality checks.
    pub fn from_trees(trees: Vec<DecoratedTree>) -> Self {
        Self { trees }
    }

    pub fn trees(&self) -> &[DecoratedTree] {
        &self.trees
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.trees.iter().map(DecoratedTree::degree).sum()
    }

    /// Vertices with their decorations in preorder (trees left to right).
    pub fn vertices(&self) -> Vec<(VertexId, &LinearForm)> {
        fn walk<'a>(t: &'a DecoratedTree, out: &mut Vec<(VertexId, &'a LinearForm)>) {
            out.push((t.id, &t.decoration));
            for c in &t.children {
                walk(c, out);
            }
        }
        let mut out = Vec::with_capacity(self.degree());
        for t in &self.trees {
            walk(t, &mut out);
        }
        out
    }

    pub fn vertex_ids(&self) -> Vec<VertexId> {
        self.vertices().into_iter().map(|(v, _)| v).collect()
    }

    pub(crate) fn subtree_spans(&self) -> Vec<Span<'_>> {
        fn walk<'a>(t: &'a DecoratedTree, out: &mut Vec<Span<'a>>) -> usize {
            let me = out.len();
            out.push(Span { id: t.id, decoration: &t.decoration, size: 1, children: Vec::new() });
            let mut size = 1;
            for c in &t.children {
                let pos = out.len();
                out[me].children.push(pos);
                size += walk(c, out);
            }
            out[me].size = size;
            size
        }
        let mut out = Vec::new();
        for t in &self.trees {
            walk(t, &mut out);
        }
        out
    }

    /// `L_v`: the sum of the decorations of the maximal subtree rooted at `v`.
    pub fn subtree_sums(&self) -> BTreeMap<VertexId, LinearForm> {
        fn walk(t: &DecoratedTree, out: &mut BTreeMap<VertexId, LinearForm>) -> LinearForm {
            let mut sum = t.decoration.clone();
            for c in &t.children {
                sum = &sum + &walk(c, out);
            }
            out.insert(t.id, sum.clone());
            sum
        }
        let mut out = BTreeMap::new();
        for t in &self.trees {
            walk(t, &mut out);
        }
        out
    }

    /// Sum of all decorations.
    pub fn total_decoration(&self) -> LinearForm {
        self.vertices().into_iter().map(|(_, d)| d).sum()
    }

    pub fn decompose(&self) -> Decomposition {
        match self.trees.as_slice() {
            [] => Decomposition::Empty,
            [t] => Decomposition::Grafted(t.decoration.clone(), t.branches()),
            trees => Decomposition::Product(trees.to_vec()),
        }
    }

    /// Byte encoding invariant under permutations of siblings and of trees.
    pub fn canonical(&self) -> Vec<u8> {
        self.encode(true)
    }

    /// Canonical encoding of the underlying undecorated forest.
    pub fn shape_code(&self) -> Vec<u8> {
        self.encode(false)
    }

    fn encode(&self, with_decorations: bool) -> Vec<u8> {
        let mut parts: Vec<Vec<u8>> = self
            .trees
            .iter()
            .map(|t| {
                let mut buf = Vec::new();
                t.encode(&mut buf, with_decorations);
                buf
            })
            .collect();
        parts.sort();
        let mut out = vec![b'{'];
        for p in parts {
            out.extend_from_slice(&p);
        }
        out.push(b'}');
        out
    }

    /// Copy with every basis index shifted by `offset` and fresh vertex ids.
    /// Pair with [`InnerProduct::reindexed`] to place two forests on disjoint
    /// coordinates before concatenating them.
    pub fn reindexed(&self, offset: usize) -> Self {
        self.map_decorations(|d| d.reindexed(offset))
    }

    /// Copy with transformed decorations and fresh vertex ids.
    pub fn map_decorations(&self, mut f: impl FnMut(&LinearForm) -> LinearForm) -> Self {
        Self { trees: self.trees.iter().map(|t| t.map_decorations(&mut f)).collect() }
    }

    /// Copy with sibling lists (and the tree list) reordered by `choose`, which
    /// receives the number of siblings and returns a permutation of `0..n`.
    pub fn permuted(&self, choose: &mut impl FnMut(usize) -> Vec<usize>) -> Self {
        fn perm_list(list: &[DecoratedTree], choose: &mut impl FnMut(usize) -> Vec<usize>) -> Vec<DecoratedTree> {
            let order = choose(list.len());
            order
                .into_iter()
                .map(|k| {
                    let t = &list[k];
                    DecoratedTree {
                        id: t.id,
                        decoration: t.decoration.clone(),
                        children: perm_list(&t.children, choose),
                    }
                })
                .collect()
        }
        Self { trees: perm_list(&self.trees, choose) }
    }

    /// Squared norms `Q(d(v), d(v))` in preorder.
    pub fn weights(&self, q: &InnerProduct) -> Result<Vec<Rational>> {
        self.vertices().iter().map(|(_, d)| q.inner(d, d)).collect()
    }
}

/// Disjoint product `F1 . F2`, defined when every decoration of `f1` is
/// `Q`-orthogonal to every decoration of `f2`.
pub fn concat(f1: &DecoratedForest, f2: &DecoratedForest, q: &InnerProduct) -> Result<DecoratedForest> {
    let left = f1.vertices();
    let right = f2.vertices();
    for (a, (_, da)) in left.iter().enumerate() {
        for (b, (_, db)) in right.iter().enumerate() {
            if !q.is_independent(da, db) {
                return Err(Error::LocalityViolation(format!(
                    "vertex {} ({da}) of the left factor pairs nontrivially with vertex {} ({db}) of the right factor",
                    a + 1,
                    b + 1
                )));
            }
        }
    }
    let mut trees = f1.trees.clone();
    trees.extend(f2.trees.iter().cloned());
    Ok(DecoratedForest { trees })
}

/// Grafting `B+^w(F)`: a new root decorated `omega` whose children are the
/// trees of `forest`. Requires `omega` to be orthogonal to every decoration.
pub fn graft(omega: &LinearForm, forest: &DecoratedForest, q: &InnerProduct) -> Result<DecoratedTree> {
    for (k, (_, d)) in forest.vertices().iter().enumerate() {
        if !q.is_independent(omega, d) {
            return Err(Error::LocalityViolation(format!(
                "grafting decoration {omega} pairs nontrivially with vertex {} ({d})",
                k + 1
            )));
        }
    }
    Ok(DecoratedTree { id: VertexId::fresh(), decoration: omega.clone(), children: forest.trees.clone() })
}
