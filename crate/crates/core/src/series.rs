//! Truncated multivariate power series with coefficients in `Q[Pi]`, where the
//! formal symbol `Pi` stands for `pi^2`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::forest::{parse_rational, VertexId};
use crate::pairing::Rational;

/// `sum_k c_k Pi^k` with rational `c_k`; no trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PiPoly {
    coeffs: Vec<Rational>,
}

const PI_DIGITS: &str = "3.14159265358979323846264338327950288419716939937510\
58209749445923078164062862089986280348253421170679\
82148086513282306647093844609550582231725359408128";

impl PiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(c: Rational) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// `c * Pi^k`.
    pub fn monomial(c: Rational, k: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); k + 1];
        coeffs[k] = c;
        Self::from_coeffs(coeffs)
    }

    pub fn from_coeffs(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `Pi^k`.
    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    /// Exact value with `pi` replaced by a 150-digit rational approximation.
    pub fn to_rational_approx(&self) -> Rational {
        static PI_SQUARED: OnceLock<Rational> = OnceLock::new();
        let pi2 = PI_SQUARED.get_or_init(|| {
            let pi = parse_rational(PI_DIGITS).expect("valid literal");
            &pi * &pi
        });
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * pi2 + c;
        }
        acc
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational_approx().to_f64().unwrap_or(f64::NAN)
    }

    /// Decimal rendering with `digits` significant digits (rounded half up).
    pub fn to_decimal(&self, digits: usize) -> String {
        decimal_string(&self.to_rational_approx(), digits)
    }
}

/// Fixed significant-digit decimal of an exact rational.
pub(crate) fn decimal_string(value: &Rational, digits: usize) -> String {
    if value.is_zero() {
        return "0".into();
    }
    let negative = value.is_negative();
    let v = value.abs();
    let ten = BigInt::from(10u32);
    // exponent e with 10^e <= v < 10^(e+1)
    let mut e: i64 = v.to_integer().to_string().len() as i64 - 1;
    if v < Rational::one() {
        e = -1;
        let mut t = &v * &ten;
        while t < Rational::one() {
            t *= &ten;
            e -= 1;
        }
    }
    let shift = digits as i64 - 1 - e;
    let scaled = if shift >= 0 {
        &v * Rational::from_integer(ten.pow(shift as u32))
    } else {
        &v / Rational::from_integer(ten.pow((-shift) as u32))
    };
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let mut mant = q;
    if &r * BigInt::from(2) >= *scaled.denom() {
        mant += 1;
    }
    let mut s = mant.to_string();
    let mut shift = shift;
    if s.len() > digits {
        // rounding carried into a new digit
        s.pop();
        shift -= 1;
    }
    let out = if shift <= 0 {
        let mut s = s;
        s.extend(std::iter::repeat_n('0', (-shift) as usize));
        s
    } else if (shift as usize) < s.len() {
        let (a, b) = s.split_at(s.len() - shift as usize);
        format!("{a}.{b}")
    } else {
        format!("0.{}{}", "0".repeat(shift as usize - s.len()), s)
    };
    if negative {
        format!("-{out}")
    } else {
        out
    }
}

impl Add for &PiPoly {
    type Output = PiPoly;
    fn add(self, rhs: &PiPoly) -> PiPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&PiPoly> for PiPoly {
    fn add_assign(&mut self, rhs: &PiPoly) {
        if self.coeffs.len() < rhs.coeffs.len() {
            self.coeffs.resize(rhs.coeffs.len(), Rational::zero());
        }
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }
}

impl Neg for &PiPoly {
    type Output = PiPoly;
    fn neg(self) -> PiPoly {
        PiPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Sub for &PiPoly {
    type Output = PiPoly;
    fn sub(self, rhs: &PiPoly) -> PiPoly {
        self + &(-rhs)
    }
}

impl Mul for &PiPoly {
    type Output = PiPoly;
    fn mul(self, rhs: &PiPoly) -> PiPoly {
        if self.is_zero() || rhs.is_zero() {
            return PiPoly::zero();
        }
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        PiPoly::from_coeffs(coeffs)
    }
}

/// `a0 + a1*pi^2 + ...` in ascending powers. A coefficient `p/q` on `pi^2k`
/// prints as `p*pi^2k/q`, dropping unit factors: `pi^2/4`, `5*pi^2/18`.
impl fmt::Display for PiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = c.abs();
            let (p, q) = (mag.numer(), mag.denom());
            if k == 0 {
                write!(f, "{mag}")?;
                continue;
            }
            let power = if k == 1 { "pi^2".to_string() } else { format!("pi^{}", 2 * k) };
            if p.is_one() {
                f.write_str(&power)?;
            } else {
                write!(f, "{p}*{power}")?;
            }
            if !q.is_one() {
                write!(f, "/{q}")?;
            }
        }
        Ok(())
    }
}

/// Exponent vector in the order of [`TruncSeries::variables`].
pub type Monomial = Vec<u8>;

/// Power series in the variables `z_v`, truncated at a total degree.
///
/// Every stored monomial has total degree at most `truncation`, and coefficients
/// are nonzero. Binary operations require identical variable lists and produce
/// the smaller truncation of the two operands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncSeries {
    vars: Vec<VertexId>,
    trunc: u32,
    terms: BTreeMap<Monomial, PiPoly>,
}

fn total(m: &[u8]) -> u32 {
    m.iter().map(|&e| e as u32).sum()
}

fn binomial_row(k: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for j in 0..k {
        let next = &row[j] * BigInt::from(k - j) / BigInt::from(j + 1);
        row.push(next);
    }
    row
}

impl TruncSeries {
    pub fn zero(vars: Vec<VertexId>, truncation: u32) -> Self {
        Self { vars, trunc: truncation, terms: BTreeMap::new() }
    }

    pub fn constant(vars: Vec<VertexId>, truncation: u32, c: PiPoly) -> Self {
        let mut s = Self::zero(vars, truncation);
        let m = vec![0; s.vars.len()];
        s.add_term(m, c);
        s
    }

    pub fn one(vars: Vec<VertexId>, truncation: u32) -> Self {
        Self::constant(vars, truncation, PiPoly::one())
    }

    /// The coordinate `z_v`.
    pub fn variable(vars: Vec<VertexId>, truncation: u32, v: VertexId) -> Result<Self> {
        let mut s = Self::zero(vars, truncation);
        let p = s.position(v)?;
        let mut m = vec![0; s.vars.len()];
        m[p] = 1;
        s.add_term(m, PiPoly::one());
        Ok(s)
    }

    /// Builds a series from `(exponents, coefficient)` pairs; terms above the
    /// truncation are dropped.
    pub fn from_terms<I>(vars: Vec<VertexId>, truncation: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, PiPoly)>,
    {
        let mut s = Self::zero(vars, truncation);
        for (m, c) in terms {
            if m.len() != s.vars.len() {
                return Err(Error::VariableMismatch);
            }
            s.add_term(m, c);
        }
        Ok(s)
    }

    pub fn variables(&self) -> &[VertexId] {
        &self.vars
    }

    pub fn truncation(&self) -> u32 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &PiPoly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &[u8]) -> PiPoly {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    fn position(&self, v: VertexId) -> Result<usize> {
        self.vars.iter().position(|x| *x == v).ok_or(Error::VariableMismatch)
    }

    fn add_term(&mut self, m: Monomial, c: PiPoly) {
        if c.is_zero() || total(&m) > self.trunc {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_vars(&self, other: &Self) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::VariableMismatch);
        }
        Ok(())
    }

    /// Keeps only terms of total degree `<= truncation` (never raises it).
    pub fn truncated(&self, truncation: u32) -> Self {
        let trunc = truncation.min(self.trunc);
        Self {
            vars: self.vars.clone(),
            trunc,
            terms: self.terms.iter().filter(|(m, _)| total(m) <= trunc).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    /// The terms of total degree exactly `degree`, at the same truncation.
    pub fn homogeneous_part(&self, degree: u32) -> Self {
        Self {
            vars: self.vars.clone(),
            trunc: self.trunc,
            terms: self.terms.iter().filter(|(m, _)| total(m) == degree).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    /// Same series over a larger variable list containing the current one.
    pub fn embed(&self, vars: &[VertexId]) -> Result<Self> {
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v).ok_or(Error::VariableMismatch))
            .collect::<Result<_>>()?;
        let mut out = Self::zero(vars.to_vec(), self.trunc);
        for (m, c) in &self.terms {
            let mut n = vec![0u8; vars.len()];
            for (k, e) in m.iter().enumerate() {
                n[map[k]] = *e;
            }
            out.terms.insert(n, c.clone());
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_vars(other)?;
        let mut out = self.truncated(other.trunc);
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// In-place `self += other` at the smaller truncation.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_vars(other)?;
        if other.trunc < self.trunc {
            *self = self.truncated(other.trunc);
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
        Ok(())
    }

    pub fn neg(&self) -> Self {
        Self {
            vars: self.vars.clone(),
            trunc: self.trunc,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.scale_pi(&PiPoly::from_rational(c.clone()))
    }

    pub fn scale_pi(&self, c: &PiPoly) -> Self {
        let mut out = Self::zero(self.vars.clone(), self.trunc);
        for (m, x) in &self.terms {
            out.add_term(m.clone(), x * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_vars(other)?;
        let trunc = self.trunc.min(other.trunc);
        let mut out = Self::zero(self.vars.clone(), trunc);
        for (ma, ca) in &self.terms {
            let da = total(ma);
            if da > trunc {
                continue;
            }
            for (mb, cb) in &other.terms {
                if da + total(mb) > trunc {
                    continue;
                }
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                out.add_term(m, ca * cb);
            }
        }
        Ok(out)
    }

    /// Composition with a linear change of coordinates
    /// `z_w <- sum_u a_{wu} z_u`. Variables absent from `assignment` are kept.
    pub fn subst_linear(&self, assignment: &BTreeMap<VertexId, BTreeMap<VertexId, Rational>>) -> Result<Self> {
        let n = self.vars.len();
        let mut images: Vec<Option<Self>> = vec![None; n];
        for (w, image) in assignment {
            let p = self.position(*w)?;
            let mut terms = Vec::with_capacity(image.len());
            for (u, c) in image {
                let q = self.position(*u)?;
                let mut m = vec![0u8; n];
                m[q] = 1;
                terms.push((m, PiPoly::from_rational(c.clone())));
            }
            images[p] = Some(Self::from_terms(self.vars.clone(), self.trunc, terms)?);
        }
        // powers[p][k] = image_p^k
        let max_exp = self.terms.keys().flat_map(|m| m.iter().copied()).max().unwrap_or(0) as usize;
        let mut powers: Vec<Vec<Self>> = Vec::with_capacity(n);
        for (p, img) in images.iter().enumerate() {
            let base = match img {
                Some(s) => s.clone(),
                None => Self::variable(self.vars.clone(), self.trunc, self.vars[p])?,
            };
            let mut row = vec![Self::one(self.vars.clone(), self.trunc)];
            for k in 1..=max_exp {
                let next = row[k - 1].mul(&base)?;
                row.push(next);
            }
            powers.push(row);
        }
        let mut out = Self::zero(self.vars.clone(), self.trunc);
        for (m, c) in &self.terms {
            let mut acc = Self::constant(self.vars.clone(), self.trunc, c.clone());
            for (p, e) in m.iter().enumerate() {
                if *e > 0 {
                    acc = acc.mul(&powers[p][*e as usize])?;
                }
            }
            for (mm, cc) in acc.terms {
                out.add_term(mm, cc);
            }
        }
        Ok(out)
    }

    /// Elementary substitution `z_u <- z_u + c z_v` with `u != v`.
    pub fn shear(&self, u: VertexId, v: VertexId, c: &Rational) -> Result<Self> {
        let pu = self.position(u)?;
        let pv = self.position(v)?;
        if pu == pv {
            return self.subst_linear(&BTreeMap::from([(u, BTreeMap::from([(u, Rational::one() + c)]))]));
        }
        if c.is_zero() {
            return Ok(self.clone());
        }
        let mut c_pow = vec![Rational::one()];
        let mut out = Self::zero(self.vars.clone(), self.trunc);
        for (m, x) in &self.terms {
            let k = m[pu] as usize;
            if k == 0 {
                out.add_term(m.clone(), x.clone());
                continue;
            }
            while c_pow.len() <= k {
                let next = c_pow.last().unwrap() * c;
                c_pow.push(next);
            }
            let binom = binomial_row(k);
            for j in 0..=k {
                let mut mm = m.clone();
                mm[pu] = (k - j) as u8;
                mm[pv] += j as u8;
                let f = &c_pow[j] * Rational::from_integer(binom[j].clone());
                out.add_term(mm, x.scale(&f));
            }
        }
        Ok(out)
    }

    /// Substitution `z_v <- 0`.
    pub fn set_zero(&self, v: VertexId) -> Result<Self> {
        let p = self.position(v)?;
        Ok(Self {
            vars: self.vars.clone(),
            trunc: self.trunc,
            terms: self.terms.iter().filter(|(m, _)| m[p] == 0).map(|(m, c)| (m.clone(), c.clone())).collect(),
        })
    }

    /// `z_v * s`; the truncation rises by one.
    pub fn mul_by_var(&self, v: VertexId) -> Result<Self> {
        let p = self.position(v)?;
        Ok(Self {
            vars: self.vars.clone(),
            trunc: self.trunc + 1,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut m = m.clone();
                    m[p] += 1;
                    (m, c.clone())
                })
                .collect(),
        })
    }

    /// Exact quotient `s / z_v`; the truncation drops by one. Fails unless
    /// every term contains `z_v`.
    pub fn div_by_var(&self, v: VertexId) -> Result<Self> {
        let p = self.position(v)?;
        if self.trunc == 0 {
            return Err(Error::TruncationTooLow { have: 0, need: 1 });
        }
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m[p] == 0 {
                return Err(Error::NotDivisible(format!("z{} (term {:?})", p + 1, m)));
            }
            let mut m = m.clone();
            m[p] -= 1;
            terms.insert(m, c.clone());
        }
        Ok(Self { vars: self.vars.clone(), trunc: self.trunc - 1, terms })
    }

    /// Constant term.
    pub fn eval0(&self) -> PiPoly {
        self.terms.get(&vec![0u8; self.vars.len()]).cloned().unwrap_or_default()
    }

    /// Largest exponent of any single variable.
    pub fn max_exponent(&self) -> u8 {
        self.terms.keys().flat_map(|m| m.iter().copied()).max().unwrap_or(0)
    }
}

/// Coefficients `r_0..=r_n` of `pi x / sin(pi x) = sum r_m x^m`, by inverting
/// `sin(pi x)/(pi x) = sum_k (-Pi)^k x^{2k} / (2k+1)!`.
fn inverse_sinc(n: usize) -> Vec<PiPoly> {
    let mut sinc = vec![PiPoly::zero(); n + 1];
    let mut fact = BigInt::one();
    for k in 0..=n / 2 {
        if k > 0 {
            fact *= BigInt::from((2 * k) * (2 * k + 1));
        }
        let sign = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        sinc[2 * k] = PiPoly::monomial(Rational::new(sign, fact.clone()), k);
    }
    let mut inv: Vec<PiPoly> = vec![PiPoly::one()];
    for m in 1..=n {
        let mut acc = PiPoly::zero();
        for j in 1..=m {
            acc += &(&sinc[j] * &inv[m - j]);
        }
        inv.push(-&acc);
    }
    inv
}

/// Taylor series of `h(z) = pi / sin(pi z) - 1/z` in the single variable
/// `z_v`, up to degree `n`.
pub fn h_series(v: VertexId, n: u32) -> TruncSeries {
    let inv = inverse_sinc(n as usize + 1);
    let terms = inv.into_iter().enumerate().skip(1).map(|(m, c)| (vec![(m - 1) as u8], c));
    TruncSeries::from_terms(vec![v], n, terms).expect("single variable")
}

/// `1 + z h(z) = pi z / sin(pi z)` in the variable `z_v`, up to degree `n`.
pub fn laurent_numerator(v: VertexId, n: u32) -> TruncSeries {
    let inv = inverse_sinc(n as usize);
    let terms = inv.into_iter().enumerate().map(|(m, c)| (vec![m as u8], c));
    TruncSeries::from_terms(vec![v], n, terms).expect("single variable")
}

/// Prints terms by ascending total degree, naming the variables `z1, z2, ...`
/// in the order of [`TruncSeries::variables`].
impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(&Monomial, &PiPoly)> = self.terms.iter().collect();
        terms.sort_by(|a, b| total(a.0).cmp(&total(b.0)).then_with(|| b.0.cmp(a.0)));
        if terms.is_empty() {
            return write!(f, "0 + O({})", self.trunc + 1);
        }
        for (k, (m, c)) in terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            let mono: Vec<String> = m
                .iter()
                .enumerate()
                .filter(|(_, e)| **e > 0)
                .map(|(p, e)| if *e == 1 { format!("z{}", p + 1) } else { format!("z{}^{}", p + 1, e) })
                .collect();
            if mono.is_empty() {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})*{}", mono.join("*"))?;
            }
        }
        write!(f, " + O({})", self.trunc + 1)
    }
}
