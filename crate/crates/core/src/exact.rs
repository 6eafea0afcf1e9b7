//! Exact rational arithmetic: extended rationals, small vectors and matrices,
//! min-plus evaluation and the exact LDLᵀ factorization used to bound lattice
//! searches.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Index, IndexMut};

use rug::{Integer, Rational};

use crate::error::{Error, Result};

/// A rational number or `+∞`, the value set of every valuation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtRational {
    Finite(Rational),
    Infinity,
}

impl ExtRational {
    pub fn zero() -> Self {
        ExtRational::Finite(Rational::new())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRational::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtRational::Finite(r) => Some(r),
            ExtRational::Infinity => None,
        }
    }

    pub fn into_finite(self) -> Option<Rational> {
        match self {
            ExtRational::Finite(r) => Some(r),
            ExtRational::Infinity => None,
        }
    }

    pub fn min(self, other: Self) -> Self {
        std::cmp::min(self, other)
    }
}

impl From<Rational> for ExtRational {
    fn from(r: Rational) -> Self {
        ExtRational::Finite(r)
    }
}

impl From<i64> for ExtRational {
    fn from(v: i64) -> Self {
        ExtRational::Finite(Rational::from(v))
    }
}

impl Add for ExtRational {
    type Output = ExtRational;
    fn add(self, rhs: ExtRational) -> ExtRational {
        match (self, rhs) {
            (ExtRational::Finite(a), ExtRational::Finite(b)) => ExtRational::Finite(a + b),
            _ => ExtRational::Infinity,
        }
    }
}

impl Add<&Rational> for ExtRational {
    type Output = ExtRational;
    fn add(self, rhs: &Rational) -> ExtRational {
        match self {
            ExtRational::Finite(a) => ExtRational::Finite(a + rhs),
            ExtRational::Infinity => ExtRational::Infinity,
        }
    }
}

impl PartialEq<Rational> for ExtRational {
    fn eq(&self, other: &Rational) -> bool {
        self.finite() == Some(other)
    }
}

impl PartialOrd<Rational> for ExtRational {
    fn partial_cmp(&self, other: &Rational) -> Option<Ordering> {
        match self {
            ExtRational::Finite(a) => a.partial_cmp(other),
            ExtRational::Infinity => Some(Ordering::Greater),
        }
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRational::Finite(r) => write!(f, "{r}"),
            ExtRational::Infinity => write!(f, "+inf"),
        }
    }
}

/// Renders a rational as `p/q` with `q ≥ 1`, the machine-readable form.
pub fn rational_to_pq(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a bare integer.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: Integer = p.trim().parse().ok()?;
        let q: Integer = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        Some(Rational::from((p, q)))
    } else {
        let p: Integer = s.parse().ok()?;
        Some(Rational::from(p))
    }
}

/// Largest integer not exceeding `r`.
pub fn floor_int(r: &Rational) -> Integer {
    r.clone().floor().into_numer_denom().0
}

/// Smallest integer not below `r`.
pub fn ceil_int(r: &Rational) -> Integer {
    r.clone().ceil().into_numer_denom().0
}

/// Nearest integer, halves rounded up.
pub fn round_half_up(r: &Rational) -> Integer {
    floor_int(&(r.clone() + Rational::from((1, 2))))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RatVector(pub Vec<Rational>);

impl RatVector {
    pub fn zeros(n: usize) -> Self {
        RatVector(vec![Rational::new(); n])
    }

    pub fn from_ints(v: &[i64]) -> Self {
        RatVector(v.iter().map(|&x| Rational::from(x)).collect())
    }

    pub fn filled(n: usize, value: Rational) -> Self {
        RatVector(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.0.iter()
    }

    pub fn dot(&self, other: &RatVector) -> Rational {
        debug_assert_eq!(self.len(), other.len());
        let mut acc = Rational::new();
        for (a, b) in self.0.iter().zip(&other.0) {
            acc += Rational::from(a * b);
        }
        acc
    }

    pub fn add(&self, other: &RatVector) -> RatVector {
        RatVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| Rational::from(a + b))
                .collect(),
        )
    }

    pub fn sub(&self, other: &RatVector) -> RatVector {
        RatVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| Rational::from(a - b))
                .collect(),
        )
    }

    pub fn scale(&self, k: &Rational) -> RatVector {
        RatVector(self.0.iter().map(|a| Rational::from(a * k)).collect())
    }

    pub fn neg(&self) -> RatVector {
        RatVector(self.0.iter().map(|a| Rational::from(-a)).collect())
    }

    /// `self + k·other`
    pub fn add_scaled(&self, k: &Rational, other: &RatVector) -> RatVector {
        RatVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.clone() + Rational::from(k * b))
                .collect(),
        )
    }

    pub fn dot_int(&self, m: &[Integer]) -> Rational {
        let mut acc = Rational::new();
        for (a, b) in self.0.iter().zip(m) {
            acc += a.clone() * b;
        }
        acc
    }
}

impl Index<usize> for RatVector {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.0[i]
    }
}

impl IndexMut<usize> for RatVector {
    fn index_mut(&mut self, i: usize) -> &mut Rational {
        &mut self.0[i]
    }
}

impl fmt::Display for RatVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Dense square matrix of rationals, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    n: usize,
    entries: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(n: usize) -> Self {
        RatMatrix {
            n,
            entries: vec![Rational::new(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| Rational::from(i64::from(i == j)))
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        RatMatrix { n, entries }
    }

    pub fn from_ints(rows: &[&[i64]]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| Rational::from(rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.entries[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> RatVector {
        RatVector((0..self.n).map(|i| self.get(i, j).clone()).collect())
    }

    pub fn transpose(&self) -> RatMatrix {
        Self::from_fn(self.n, |i, j| self.get(j, i).clone())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn add(&self, other: &RatMatrix) -> RatMatrix {
        Self::from_fn(self.n, |i, j| Rational::from(self.get(i, j) + other.get(i, j)))
    }

    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        Self::from_fn(self.n, |i, j| Rational::from(self.get(i, j) - other.get(i, j)))
    }

    pub fn scaled(&self, k: &Rational) -> RatMatrix {
        Self::from_fn(self.n, |i, j| Rational::from(self.get(i, j) * k))
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        Self::from_fn(self.n, |i, j| {
            let mut acc = Rational::new();
            for k in 0..self.n {
                acc += Rational::from(self.get(i, k) * other.get(k, j));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &RatVector) -> RatVector {
        RatVector(
            (0..self.n)
                .map(|i| {
                    let mut acc = Rational::new();
                    for (a, b) in self.row(i).iter().zip(&v.0) {
                        acc += Rational::from(a * b);
                    }
                    acc
                })
                .collect(),
        )
    }

    pub fn mul_int_vec(&self, m: &[Integer]) -> RatVector {
        RatVector(
            (0..self.n)
                .map(|i| {
                    let mut acc = Rational::new();
                    for (a, b) in self.row(i).iter().zip(m) {
                        acc += a.clone() * b;
                    }
                    acc
                })
                .collect(),
        )
    }

    /// `vᵀ·M·v`
    pub fn quad_form(&self, v: &RatVector) -> Rational {
        v.dot(&self.mul_vec(v))
    }

    pub fn quad_form_int(&self, m: &[Integer]) -> Rational {
        let mut acc = Rational::new();
        for i in 0..self.n {
            if m[i] == 0 {
                continue;
            }
            let mut row = Rational::new();
            for j in 0..self.n {
                if m[j] != 0 {
                    row += self.get(i, j).clone() * &m[j];
                }
            }
            acc += row * &m[i];
        }
        acc
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.n {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// One term `coeff + ⟨slope, ·⟩` of a tropical (min-plus) polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TropicalTerm {
    pub coeff: Rational,
    pub slope: Vec<Rational>,
}

impl TropicalTerm {
    pub fn new(coeff: Rational, slope: Vec<Rational>) -> Self {
        TropicalTerm { coeff, slope }
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        let mut v = self.coeff.clone();
        for (s, p) in self.slope.iter().zip(point) {
            v += Rational::from(s * p);
        }
        v
    }
}

/// Minimum of `coeff + ⟨slope, point⟩` over the terms, with the smallest
/// index attaining it.
pub fn min_plus_eval(terms: &[TropicalTerm], point: &[Rational]) -> Result<(Rational, usize)> {
    let mut best: Option<(Rational, usize)> = None;
    for (i, term) in terms.iter().enumerate() {
        if term.slope.len() != point.len() {
            return Err(Error::DimensionMismatch {
                expected: point.len(),
                found: term.slope.len(),
            });
        }
        let v = term.eval(point);
        match &best {
            Some((b, _)) if *b <= v => {}
            _ => best = Some((v, i)),
        }
    }
    best.ok_or(Error::EmptyTropicalPolynomial)
}

/// All indices attaining the minimum, ascending.
pub fn min_plus_ties(terms: &[TropicalTerm], point: &[Rational]) -> Result<Vec<usize>> {
    let (min, _) = min_plus_eval(terms, point)?;
    Ok(terms
        .iter()
        .enumerate()
        .filter(|(_, t)| t.eval(point) == min)
        .map(|(i, _)| i)
        .collect())
}

/// `B = L·D·Lᵀ` with `L` unit lower triangular and positive pivots `D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LdlFactor {
    pub lower: RatMatrix,
    pub pivots: Vec<Rational>,
}

/// Exact rational Cholesky factorization in square-root-free form.
pub fn exact_cholesky(b: &RatMatrix) -> Result<LdlFactor> {
    if !b.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let n = b.dim();
    let mut lower = RatMatrix::identity(n);
    let mut pivots: Vec<Rational> = Vec::with_capacity(n);
    for j in 0..n {
        let mut d = b.get(j, j).clone();
        for k in 0..j {
            d -= Rational::from(lower.get(j, k) * lower.get(j, k)) * &pivots[k];
        }
        if d <= 0 {
            return Err(Error::NotPositiveDefinite {
                index: j,
                pivot: d.to_string(),
            });
        }
        for i in (j + 1)..n {
            let mut s = b.get(i, j).clone();
            for k in 0..j {
                s -= Rational::from(lower.get(i, k) * lower.get(j, k)) * &pivots[k];
            }
            lower.set(i, j, s / &d);
        }
        pivots.push(d);
    }
    Ok(LdlFactor { lower, pivots })
}

impl LdlFactor {
    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    /// Solves `B·x = rhs`.
    pub fn solve(&self, rhs: &RatVector) -> RatVector {
        let n = self.dim();
        let mut y = rhs.clone();
        for i in 0..n {
            for k in 0..i {
                let t = Rational::from(self.lower.get(i, k) * &y[k]);
                y[i] -= t;
            }
        }
        for i in 0..n {
            y[i] /= &self.pivots[i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = Rational::from(self.lower.get(k, i) * &y[k]);
                y[i] -= t;
            }
        }
        y
    }

    pub fn reconstruct(&self) -> RatMatrix {
        let n = self.dim();
        RatMatrix::from_fn(n, |i, j| {
            let mut acc = Rational::new();
            for k in 0..=i.min(j) {
                acc += Rational::from(self.lower.get(i, k) * self.lower.get(j, k)) * &self.pivots[k];
            }
            acc
        })
    }
}

/// Representative of `v` modulo `B·ℤ^g` whose `B`-coordinates lie in `[-1/2, 1/2)`.
pub fn reduce_centered(v: &RatVector, b: &RatMatrix, factor: &LdlFactor) -> (RatVector, Vec<Integer>) {
    let w = factor.solve(v);
    let r: Vec<Integer> = w.iter().map(round_half_up).collect();
    let shift = b.mul_int_vec(&r);
    (v.sub(&shift), r)
}
