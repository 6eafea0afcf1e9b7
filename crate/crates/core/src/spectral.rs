//! Lax matrices of box-ball states, their characteristic polynomial and the
//! divisor points read off from the roots of the lower-left entry.

use std::collections::BTreeMap;
use std::fmt;

use rug::{Complex, Integer, Rational};

use crate::error::{Error, Result};
use crate::exact::{ExtRational, TropicalTerm};
use crate::puiseux::{facet_roots, lift_root, val_at_root, PuiPoly, PuiseuxConfig, PuiseuxTrunc};

/// Sparse polynomial in `y` and `q` with integer coefficients, keyed by
/// `(y-degree, q-degree)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BiPoly {
    terms: BTreeMap<(u32, u32), Integer>,
}

impl BiPoly {
    pub fn zero() -> Self {
        BiPoly::default()
    }

    pub fn one() -> Self {
        BiPoly::monomial(0, 0, 1)
    }

    pub fn monomial(y: u32, q: u32, c: i64) -> Self {
        let mut p = BiPoly::zero();
        p.add_term(y, q, Integer::from(c));
        p
    }

    pub fn y() -> Self {
        BiPoly::monomial(1, 0, 1)
    }

    pub fn q() -> Self {
        BiPoly::monomial(0, 1, 1)
    }

    fn add_term(&mut self, y: u32, q: u32, c: Integer) {
        if c == 0 {
            return;
        }
        let slot = self.terms.entry((y, q)).or_default();
        *slot += c;
        if *slot == 0 {
            self.terms.remove(&(y, q));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms as `((y-degree, q-degree), coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Integer)> {
        self.terms.iter()
    }

    pub fn coeff(&self, y: u32, q: u32) -> Integer {
        self.terms.get(&(y, q)).cloned().unwrap_or_default()
    }

    pub fn y_degree(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.0).max()
    }

    pub fn add(&self, other: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (&(y, q), c) in &other.terms {
            out.add_term(y, q, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (&(y, q), c) in &other.terms {
            out.add_term(y, q, Integer::from(-c));
        }
        out
    }

    pub fn mul(&self, other: &BiPoly) -> BiPoly {
        let mut out = BiPoly::zero();
        for (&(ya, qa), ca) in &self.terms {
            for (&(yb, qb), cb) in &other.terms {
                out.add_term(ya + yb, qa + qb, Integer::from(ca * cb));
            }
        }
        out
    }

    /// Multiplies by `y^dy·q^dq`.
    pub fn shift(&self, dy: u32, dq: u32) -> BiPoly {
        BiPoly {
            terms: self
                .terms
                .iter()
                .map(|(&(y, q), c)| ((y + dy, q + dq), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> BiPoly {
        (0..n).fold(BiPoly::one(), |acc, _| acc.mul(self))
    }

    /// Coefficients grouped by `y`-degree: `val_q` of the `y^n` coefficient.
    pub fn y_valuations(&self) -> BTreeMap<u32, u32> {
        let mut out = BTreeMap::new();
        for &(y, q) in self.terms.keys() {
            let v = out.entry(y).or_insert(q);
            *v = (*v).min(q);
        }
        out
    }

    pub fn to_puipoly(&self, cfg: &PuiseuxConfig) -> PuiPoly {
        PuiPoly::from_integer_terms(
            self.terms
                .iter()
                .map(|(&(y, q), c)| (y as usize, Rational::from(q), c.clone())),
            cfg,
        )
    }
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&(y, q), c)) in self.terms.iter().enumerate() {
            let sign = if *c < 0 {
                "-"
            } else if i > 0 {
                "+"
            } else {
                ""
            };
            if i > 0 {
                write!(f, " {sign} ")?;
            } else {
                write!(f, "{sign}")?;
            }
            let a = Integer::from(c.abs_ref());
            let mut parts = Vec::new();
            if a != 1 || (y == 0 && q == 0) {
                parts.push(a.to_string());
            }
            match q {
                0 => {}
                1 => parts.push("q".into()),
                _ => parts.push(format!("q^{q}")),
            }
            match y {
                0 => {}
                1 => parts.push("y".into()),
                _ => parts.push(format!("y^{y}")),
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// 2×2 matrix over `ℤ[q, y]`, the ordered product of one factor per box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaxMatrix {
    entries: [[BiPoly; 2]; 2],
    factors: usize,
}

impl LaxMatrix {
    pub fn identity() -> Self {
        LaxMatrix {
            entries: [[BiPoly::one(), BiPoly::zero()], [BiPoly::zero(), BiPoly::one()]],
            factors: 0,
        }
    }

    /// Entry `a_{i+1, j+1}`.
    pub fn entry(&self, i: usize, j: usize) -> &BiPoly {
        &self.entries[i][j]
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    /// Right multiplication by `H = [[1, 1], [y, q]]` (an empty box).
    pub fn push_empty(&mut self) {
        for row in &mut self.entries {
            let [a, b] = row.clone();
            row[0] = a.add(&b.shift(1, 0));
            row[1] = a.add(&b.shift(0, 1));
        }
        self.factors += 1;
    }

    /// Right multiplication by `T = [[q, 1], [y, 1]]` (a ball).
    pub fn push_ball(&mut self) {
        for row in &mut self.entries {
            let [a, b] = row.clone();
            row[0] = a.shift(0, 1).add(&b.shift(1, 0));
            row[1] = a.add(&b);
        }
        self.factors += 1;
    }

    pub fn trace(&self) -> BiPoly {
        self.entries[0][0].add(&self.entries[1][1])
    }

    pub fn det(&self) -> BiPoly {
        self.entries[0][0]
            .mul(&self.entries[1][1])
            .sub(&self.entries[0][1].mul(&self.entries[1][0]))
    }
}

/// `𝒳(y)` for the cells of a state, read left to right.
pub fn build_matrix(cells: &[bool]) -> LaxMatrix {
    let mut m = LaxMatrix::identity();
    for &ball in cells {
        if ball {
            m.push_ball();
        } else {
            m.push_empty();
        }
    }
    m
}

/// `Φ(x, y) = x² − tr·x + det` with `det = (q − y)^N` checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralPoly {
    pub trace: BiPoly,
    pub det: BiPoly,
}

pub fn char_poly(m: &LaxMatrix) -> Result<SpectralPoly> {
    let det = m.det();
    let expected = BiPoly::q().sub(&BiPoly::y()).pow(m.factors as u32);
    if det != expected {
        return Err(Error::DeterminantMismatch(m.factors));
    }
    Ok(SpectralPoly { trace: m.trace(), det })
}

impl SpectralPoly {
    /// Coefficient of `x^a` as a polynomial in `y, q`.
    pub fn x_coeff(&self, a: u32) -> BiPoly {
        match a {
            0 => self.det.clone(),
            1 => BiPoly::zero().sub(&self.trace),
            2 => BiPoly::one(),
            _ => BiPoly::zero(),
        }
    }

    /// Tropicalization `min_{a,b} [val(c_{a,b}) + a·X + b·Y]` over the
    /// monomials `x^a y^b`, as terms with slope `(a, b)`.
    pub fn tropical_terms(&self) -> Vec<TropicalTerm> {
        let mut out = Vec::new();
        for a in 0..=2 {
            for (b, v) in self.x_coeff(a).y_valuations() {
                out.push(TropicalTerm::new(
                    Rational::from(v),
                    vec![Rational::from(a), Rational::from(b)],
                ));
            }
        }
        out
    }

    /// Sparse integer coefficients `((a, b), val)` of the tropicalization.
    pub fn tropical_support(&self) -> Vec<((i64, i64), i64)> {
        let mut out = Vec::new();
        for a in 0..=2 {
            for (b, v) in self.x_coeff(a).y_valuations() {
                out.push(((a as i64, b as i64), v as i64));
            }
        }
        out
    }
}

impl fmt::Display for SpectralPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x^2 - ({})*x + ({})", self.trace, self.det)
    }
}

/// `(X, Y) = (val a_{1,1}(y*), val y*)` for a root `y*` of `a_{2,1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DivisorPoint {
    pub x: Rational,
    pub y: Rational,
    pub multiplicity: usize,
    /// Leading coefficient of `y*`.
    pub lead: Complex,
    /// The root `y*` itself.
    pub series: PuiseuxTrunc,
}

/// One point per nonzero root of `a_{2,1}` (clusters carry their size),
/// expanding further whenever the valuation of `a_{1,1}` is not yet resolved.
pub fn divisor_points(m: &LaxMatrix, cfg: &PuiseuxConfig) -> Result<Vec<DivisorPoint>> {
    divisor_points_above(m, None, cfg)
}

/// Divisor points with `Y > 0`, the only ones with a nonzero Abel–Jacobi image.
pub fn positive_divisor_points(m: &LaxMatrix, cfg: &PuiseuxConfig) -> Result<Vec<DivisorPoint>> {
    divisor_points_above(m, Some(&Rational::new()), cfg)
}

fn divisor_points_above(m: &LaxMatrix, floor: Option<&Rational>, cfg: &PuiseuxConfig) -> Result<Vec<DivisorPoint>> {
    let a21 = m.entry(1, 0).to_puipoly(cfg);
    let a11 = m.entry(0, 0).to_puipoly(cfg);
    let mut out = Vec::new();
    for slope in a21.newton_polygon()? {
        if floor.is_some_and(|f| slope.valuation <= *f) {
            continue;
        }
        for (c, mult) in facet_roots(&a21, &slope.valuation, cfg)? {
            out.extend(points_on_branch(&a21, &a11, &slope.valuation, &c, mult, cfg)?);
        }
    }
    Ok(out)
}

fn points_on_branch(
    a21: &PuiPoly,
    a11: &PuiPoly,
    y: &Rational,
    c: &Complex,
    mult: usize,
    cfg: &PuiseuxConfig,
) -> Result<Vec<DivisorPoint>> {
    let mut depth = cfg.depth.max(1);
    loop {
        match try_branch(a21, a11, y, c, mult, depth, cfg) {
            Err(Error::IncreaseDepth { .. }) if depth * 2 <= cfg.max_depth => depth *= 2,
            other => return other,
        }
    }
}

fn try_branch(
    a21: &PuiPoly,
    a11: &PuiPoly,
    y: &Rational,
    c: &Complex,
    mult: usize,
    depth: usize,
    cfg: &PuiseuxConfig,
) -> Result<Vec<DivisorPoint>> {
    let mut out = Vec::new();
    for root in lift_root(a21, y, c, mult, depth, cfg)? {
        let x = match val_at_root(a11, &root.series, cfg)? {
            ExtRational::Finite(x) => x,
            ExtRational::Infinity => {
                return Err(Error::Precision(format!("a_11 vanishes at a root of valuation {y}")));
            }
        };
        out.push(DivisorPoint {
            x,
            y: y.clone(),
            multiplicity: root.multiplicity,
            lead: c.clone(),
            series: root.series,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::parse_cells;

    fn matrix(s: &str) -> LaxMatrix {
        build_matrix(&parse_cells(s).unwrap())
    }

    fn p(terms: &[(u32, u32, i64)]) -> BiPoly {
        terms
            .iter()
            .fold(BiPoly::zero(), |acc, &(y, q, c)| acc.add(&BiPoly::monomial(y, q, c)))
    }

    #[test]
    fn two_box_product() {
        let m = matrix(".1");
        assert_eq!(m.entry(0, 0), &p(&[(0, 1, 1), (1, 0, 1)]));
        assert_eq!(m.entry(0, 1), &p(&[(0, 0, 2)]));
        assert_eq!(m.entry(1, 0), &p(&[(1, 1, 2)]));
        assert_eq!(m.entry(1, 1), &p(&[(0, 1, 1), (1, 0, 1)]));
    }

    #[test]
    fn empty_product_is_identity() {
        assert_eq!(matrix(""), LaxMatrix::identity());
        let phi = char_poly(&LaxMatrix::identity()).unwrap();
        assert_eq!(phi.trace, p(&[(0, 0, 2)]));
        assert_eq!(phi.det, BiPoly::one());
    }

    #[test]
    fn char_poly_of_two_boxes() {
        let phi = char_poly(&matrix(".1")).unwrap();
        assert_eq!(phi.trace, p(&[(0, 1, 2), (1, 0, 2)]));
        assert_eq!(phi.det, p(&[(0, 2, 1), (1, 1, -2), (2, 0, 1)]));
    }

    #[test]
    fn worked_example_determinant() {
        let phi = char_poly(&matrix(".11...1...")).unwrap();
        for b in 0..=10u32 {
            let c = Integer::from(Integer::binomial_u(10, b)) * if b % 2 == 0 { 1 } else { -1 };
            assert_eq!(phi.det.coeff(b, 10 - b), c);
        }
    }

    #[test]
    fn worked_example_divisor_points() {
        let pts = divisor_points(&matrix(".11...1..."), &PuiseuxConfig::default()).unwrap();
        let mut pos: Vec<(Rational, Rational, usize)> = pts
            .iter()
            .filter(|d| d.y > 0)
            .map(|d| (d.x.clone(), d.y.clone(), d.multiplicity))
            .collect();
        pos.sort();
        assert_eq!(
            pos,
            vec![
                (Rational::from(2), Rational::from(1), 1),
                (Rational::from(5), Rational::from(1), 1)
            ]
        );
    }

    #[test]
    fn toy_matrix_single_slope() {
        // diag(1, 1) + y·e_21 scaled so that a_21 = q·y: the only nonzero-root
        // structure is absent, so the polygon reports no roots.
        let mut m = LaxMatrix::identity();
        m.entries[1][0] = BiPoly::monomial(1, 1, 1);
        assert!(matches!(
            divisor_points(&m, &PuiseuxConfig::default()),
            Err(Error::NoNonzeroRoots)
        ));
        // a_21 = q·y + y² has the single root −q.
        m.entries[1][0] = p(&[(1, 1, 1), (2, 0, 1)]);
        let pts = divisor_points(&m, &PuiseuxConfig::default()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].y, 1);
        assert_eq!(pts[0].x, 0);
    }
}
