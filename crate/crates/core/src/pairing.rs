//! Rational linear forms, the inner product `Q` on them, and Gram matrices of
//! subtree sums.
//!
//! Everything here is exact. Two linear forms are independent (in the
//! locality sense) exactly when they are `Q`-orthogonal.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::forest::{DecoratedForest, VertexId};

pub type Rational = num_rational::BigRational;

#[cfg(test)]
pub(crate) fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

#[cfg(test)]
pub(crate) fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// A sparse rational covector `sum_i c_i e_i`.
///
/// Zero coefficients are never stored, so derived equality is equality of forms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearForm {
    coeffs: BTreeMap<usize, Rational>,
}

impl LinearForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(index: usize) -> Self {
        Self::scaled_basis(index, Rational::one())
    }

    pub fn scaled_basis(index: usize, c: Rational) -> Self {
        Self::from_coeffs([(index, c)])
    }

    pub fn from_coeffs<I: IntoIterator<Item = (usize, Rational)>>(iter: I) -> Self {
        let mut form = Self::zero();
        for (i, c) in iter {
            form.add_term(i, c);
        }
        form
    }

    /// Dense constructor: `values[i]` is the coefficient of `e_i`.
    pub fn from_dense(values: &[Rational]) -> Self {
        Self::from_coeffs(values.iter().cloned().enumerate())
    }

    fn add_term(&mut self, index: usize, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(index).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&index);
        }
    }

    pub fn coeff(&self, index: usize) -> Rational {
        self.coeffs.get(&index).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> + '_ {
        self.coeffs.iter().map(|(i, c)| (*i, c))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { coeffs: self.coeffs.iter().map(|(i, x)| (*i, x * c)).collect() }
    }

    /// Shifts every basis index by `offset`.
    pub fn reindexed(&self, offset: usize) -> Self {
        Self { coeffs: self.coeffs.iter().map(|(i, c)| (i + offset, c.clone())).collect() }
    }
}

impl Add for &LinearForm {
    type Output = LinearForm;
    fn add(self, rhs: &LinearForm) -> LinearForm {
        let mut out = self.clone();
        for (i, c) in &rhs.coeffs {
            out.add_term(*i, c.clone());
        }
        out
    }
}

impl Sub for &LinearForm {
    type Output = LinearForm;
    fn sub(self, rhs: &LinearForm) -> LinearForm {
        let mut out = self.clone();
        for (i, c) in &rhs.coeffs {
            out.add_term(*i, -c.clone());
        }
        out
    }
}

impl Neg for &LinearForm {
    type Output = LinearForm;
    fn neg(self) -> LinearForm {
        self.scale(&-Rational::one())
    }
}

impl<'a> std::iter::Sum<&'a LinearForm> for LinearForm {
    fn sum<I: Iterator<Item = &'a LinearForm>>(iter: I) -> Self {
        iter.fold(LinearForm::zero(), |acc, f| &acc + f)
    }
}

/// Prints `e1 + 2*e3 - 1/2*e4` with one-based basis labels.
impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (i, c)) in self.coeffs.iter().enumerate() {
            let mag = c.abs();
            if k == 0 {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else if c.is_negative() {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if mag.is_one() {
                write!(f, "e{}", i + 1)?;
            } else {
                write!(f, "{}*e{}", mag, i + 1)?;
            }
        }
        Ok(())
    }
}

/// A symmetric positive-definite rational pairing on a finite set of basis
/// indices (the active set).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InnerProduct {
    indices: Vec<usize>,
    position: BTreeMap<usize, usize>,
    matrix: Vec<Vec<Rational>>,
}

impl InnerProduct {
    /// Builds a pairing on `indices` from a dense matrix, checking symmetry and
    /// positive definiteness.
    pub fn new(indices: Vec<usize>, matrix: Vec<Vec<Rational>>) -> Result<Self> {
        let n = indices.len();
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInnerProduct(format!("expected a {n}x{n} matrix")));
        }
        let position: BTreeMap<usize, usize> = indices.iter().enumerate().map(|(k, i)| (*i, k)).collect();
        if position.len() != n {
            return Err(Error::InvalidInnerProduct("repeated basis index".into()));
        }
        for (a, row) in matrix.iter().enumerate() {
            for (b, x) in row.iter().enumerate() {
                if *x != matrix[b][a] {
                    return Err(Error::InvalidInnerProduct(format!(
                        "matrix is not symmetric at ({}, {})",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        if !is_positive_definite(&matrix) {
            return Err(Error::InvalidInnerProduct("matrix is not positive definite".into()));
        }
        Ok(Self { indices, position, matrix })
    }

    /// Pairing on indices `0..rows.len()`.
    pub fn from_matrix(rows: Vec<Vec<Rational>>) -> Result<Self> {
        Self::new((0..rows.len()).collect(), rows)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal((0..n).map(|i| (i, Rational::one()))).expect("identity is positive definite")
    }

    /// Diagonal pairing `Q(e_i, e_i) = w_i`; every weight must be positive.
    pub fn diagonal<I: IntoIterator<Item = (usize, Rational)>>(weights: I) -> Result<Self> {
        let weights: BTreeMap<usize, Rational> = weights.into_iter().collect();
        let indices: Vec<usize> = weights.keys().copied().collect();
        let n = indices.len();
        let mut matrix = vec![vec![Rational::zero(); n]; n];
        for (k, (i, w)) in weights.into_iter().enumerate() {
            if !w.is_positive() {
                return Err(Error::NonPositiveWeight { vertex: i, weight: w.to_string() });
            }
            matrix[k][k] = w;
        }
        Ok(Self { position: indices.iter().enumerate().map(|(k, i)| (*i, k)).collect(), indices, matrix })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dimension(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.position.contains_key(&index)
    }

    pub fn entry(&self, i: usize, j: usize) -> Result<Rational> {
        let a = *self.position.get(&i).ok_or(Error::IndexOutOfRange(i))?;
        let b = *self.position.get(&j).ok_or(Error::IndexOutOfRange(j))?;
        Ok(self.matrix[a][b].clone())
    }

    pub fn is_diagonal(&self) -> bool {
        self.matrix.iter().enumerate().all(|(a, row)| row.iter().enumerate().all(|(b, x)| a == b || x.is_zero()))
    }

    /// Rows of the dense matrix in the order of [`indices`](Self::indices).
    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.matrix
    }

    /// `Q(a, b)`.
    pub fn inner(&self, a: &LinearForm, b: &LinearForm) -> Result<Rational> {
        let mut acc = Rational::zero();
        for (i, x) in a.iter() {
            let p = *self.position.get(&i).ok_or(Error::IndexOutOfRange(i))?;
            for (j, y) in b.iter() {
                let q = *self.position.get(&j).ok_or(Error::IndexOutOfRange(j))?;
                let m = &self.matrix[p][q];
                if !m.is_zero() {
                    acc += x * y * m;
                }
            }
        }
        Ok(acc)
    }

    /// Locality relation on forms: `Q(a, b) = 0`. Forms outside the active set
    /// are never independent.
    pub fn is_independent(&self, a: &LinearForm, b: &LinearForm) -> bool {
        matches!(self.inner(a, b), Ok(x) if x.is_zero())
    }

    /// Multiplies every entry by `c > 0`.
    pub fn scaled(&self, c: &Rational) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::InvalidInnerProduct(format!("scale {c} is not positive")));
        }
        Ok(Self {
            indices: self.indices.clone(),
            position: self.position.clone(),
            matrix: self.matrix.iter().map(|row| row.iter().map(|x| x * c).collect()).collect(),
        })
    }

    pub fn reindexed(&self, offset: usize) -> Self {
        let indices: Vec<usize> = self.indices.iter().map(|i| i + offset).collect();
        Self {
            position: indices.iter().enumerate().map(|(k, i)| (*i, k)).collect(),
            indices,
            matrix: self.matrix.clone(),
        }
    }

    /// Block-diagonal sum of two pairings on disjoint active sets.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if let Some(i) = other.indices.iter().find(|i| self.contains(**i)) {
            return Err(Error::InvalidInnerProduct(format!("basis index e{} is active in both summands", i + 1)));
        }
        let n = self.dimension();
        let m = other.dimension();
        let mut matrix = vec![vec![Rational::zero(); n + m]; n + m];
        for a in 0..n {
            matrix[a][..n].clone_from_slice(&self.matrix[a]);
        }
        for a in 0..m {
            matrix[n + a][n..].clone_from_slice(&other.matrix[a]);
        }
        let indices: Vec<usize> = self.indices.iter().chain(&other.indices).copied().collect();
        Ok(Self { position: indices.iter().enumerate().map(|(k, i)| (*i, k)).collect(), indices, matrix })
    }
}

/// Gram matrix `Q(L_v, L_w)` of the subtree sums of a forest, indexed by the
/// vertices in preorder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GramMatrix {
    vertices: Vec<VertexId>,
    position: BTreeMap<VertexId, usize>,
    entries: Vec<Vec<Rational>>,
}

impl GramMatrix {
    pub fn new(vertices: Vec<VertexId>, entries: Vec<Vec<Rational>>) -> Result<Self> {
        let n = vertices.len();
        if entries.len() != n || entries.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInnerProduct(format!("expected a {n}x{n} Gram matrix")));
        }
        let position: BTreeMap<VertexId, usize> = vertices.iter().enumerate().map(|(k, v)| (*v, k)).collect();
        if position.len() != n {
            return Err(Error::InvalidInnerProduct("repeated vertex".into()));
        }
        for a in 0..n {
            for b in 0..a {
                if entries[a][b] != entries[b][a] {
                    return Err(Error::InvalidInnerProduct("Gram matrix is not symmetric".into()));
                }
            }
        }
        Ok(Self { vertices, position, entries })
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.position.get(&v).copied()
    }

    pub fn entry(&self, v: VertexId, w: VertexId) -> Option<&Rational> {
        Some(&self.entries[self.index_of(v)?][self.index_of(w)?])
    }

    pub fn at(&self, a: usize, b: usize) -> &Rational {
        &self.entries[a][b]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        Self {
            vertices: self.vertices.clone(),
            position: self.position.clone(),
            entries: self.entries.iter().map(|row| row.iter().map(|x| x * c).collect()).collect(),
        }
    }

    pub fn determinant(&self) -> Rational {
        determinant(&self.entries)
    }
}

/// Checks that every decoration is nonzero and that decorations of distinct
/// vertices are pairwise `Q`-orthogonal.
pub fn check_properly_decorated(forest: &DecoratedForest, q: &InnerProduct) -> bool {
    properly_decorated_violation(forest, q).is_none()
}

/// Like [`check_properly_decorated`] but names the first offending vertex or pair.
pub(crate) fn properly_decorated_violation(forest: &DecoratedForest, q: &InnerProduct) -> Option<String> {
    let vertices = forest.vertices();
    for (k, (_, d)) in vertices.iter().enumerate() {
        match q.inner(d, d) {
            Err(e) => return Some(format!("vertex {} ({d}): {e}", k + 1)),
            Ok(x) if x.is_zero() => return Some(format!("vertex {} has zero decoration", k + 1)),
            Ok(_) => {}
        }
    }
    for a in 0..vertices.len() {
        for b in a + 1..vertices.len() {
            if !q.is_independent(vertices[a].1, vertices[b].1) {
                return Some(format!(
                    "decorations of vertices {} ({}) and {} ({}) are not orthogonal",
                    a + 1,
                    vertices[a].1,
                    b + 1,
                    vertices[b].1
                ));
            }
        }
    }
    None
}

/// Gram matrix of the subtree sums via the overlap rule: subtrees of a
/// properly decorated forest are nested or disjoint, so `Q(L_v, L_w)` is the
/// total weight of the smaller subtree when they are nested and zero otherwise.
pub fn gram(forest: &DecoratedForest, q: &InnerProduct) -> Result<GramMatrix> {
    if let Some(why) = properly_decorated_violation(forest, q) {
        return Err(Error::NotProperlyDecorated(why));
    }
    let info = forest.subtree_spans();
    let n = info.len();
    let weights: Vec<Rational> = info.iter().map(|s| q.inner(s.decoration, s.decoration)).collect::<Result<_>>()?;
    // subtree weight by suffix sums in preorder
    let mut subtree_weight = vec![Rational::zero(); n];
    for k in (0..n).rev() {
        let mut w = weights[k].clone();
        for c in &info[k].children {
            w += &subtree_weight[*c];
        }
        subtree_weight[k] = w;
    }
    let mut entries = vec![vec![Rational::zero(); n]; n];
    for a in 0..n {
        for b in 0..n {
            // preorder: b lies in the subtree of a iff a <= b < a + size(a)
            let b_in_a = a <= b && b < a + info[a].size;
            let a_in_b = b <= a && a < b + info[b].size;
            entries[a][b] = if b_in_a {
                subtree_weight[b].clone()
            } else if a_in_b {
                subtree_weight[a].clone()
            } else {
                Rational::zero()
            };
        }
    }
    GramMatrix::new(info.iter().map(|s| s.id).collect(), entries)
}

/// Gram matrix computed directly as `inner(Q, L_v, L_w)` from the subtree sums.
pub fn gram_from_subtree_sums(forest: &DecoratedForest, q: &InnerProduct) -> Result<GramMatrix> {
    let sums = forest.subtree_sums();
    let order: Vec<VertexId> = forest.vertices().iter().map(|(v, _)| *v).collect();
    let entries = order
        .iter()
        .map(|v| order.iter().map(|w| q.inner(&sums[v], &sums[w])).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    GramMatrix::new(order, entries)
}

/// Solves `matrix * x = rhs` exactly; `None` when the matrix is singular.
pub(crate) fn solve(matrix: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let n = matrix.len();
    let mut aug: Vec<Vec<Rational>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, pivot);
        let inv = aug[col][col].recip();
        for x in aug[col].iter_mut().skip(col) {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                let (src, dst) = if r < col {
                    let (lo, hi) = aug.split_at_mut(col);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = aug.split_at_mut(r);
                    (&lo[col], &mut hi[0])
                };
                for c in col..=n {
                    let delta = &f * &src[c];
                    dst[c] -= delta;
                }
            }
        }
    }
    Some(aug.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

pub(crate) fn determinant(matrix: &[Vec<Rational>]) -> Rational {
    let n = matrix.len();
    let mut m = matrix.to_vec();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rational::zero();
        };
        if pivot != col {
            m.swap(col, pivot);
            det = -det;
        }
        det *= &m[col][col];
        let inv = m[col][col].recip();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] * &inv;
            for c in col..n {
                let delta = &f * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    det
}

/// Sylvester's criterion via pivots of Gaussian elimination without row swaps.
fn is_positive_definite(matrix: &[Vec<Rational>]) -> bool {
    let n = matrix.len();
    let mut m = matrix.to_vec();
    for col in 0..n {
        if !m[col][col].is_positive() {
            return false;
        }
        let inv = m[col][col].recip();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] * &inv;
            for c in col..n {
                let delta = &f * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    true
}
