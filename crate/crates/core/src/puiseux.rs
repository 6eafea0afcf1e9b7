//! Truncated Puiseux series in `q` with complex coefficients, polynomials in
//! `y` over them, Newton polygons, initial forms and Newton–Puiseux lifting
//! of roots.
//!
//! Exponents are exact rationals. Coefficients are multiprecision complex
//! numbers; a coefficient whose magnitude falls below `epsilon` times the
//! total magnitude of the contributions that produced it is treated as an
//! exact cancellation.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rug::{Complex, Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::exact::ExtRational;

#[derive(Clone, Debug, PartialEq)]
pub struct PuiseuxConfig {
    /// Working precision of coefficients, in bits.
    pub precision: u32,
    /// Relative zero test for accumulated coefficients.
    pub epsilon: f64,
    /// Newton–Puiseux steps per root.
    pub depth: usize,
    /// Ceiling for automatic depth escalation.
    pub max_depth: usize,
    /// Ceiling for automatic precision escalation, in bits.
    pub max_precision: u32,
}

impl Default for PuiseuxConfig {
    fn default() -> Self {
        PuiseuxConfig {
            precision: 256,
            epsilon: 1e-30,
            depth: 8,
            max_depth: 128,
            max_precision: 2048,
        }
    }
}

impl PuiseuxConfig {
    fn complex(&self) -> Complex {
        Complex::new(self.precision)
    }

    fn float(&self) -> Float {
        Float::new(self.precision)
    }

    fn abs(&self, c: &Complex) -> Float {
        Float::with_val(self.precision, c.abs_ref())
    }
}

/// Sums contributions per exponent, remembering how large they were.
struct Accumulator<'a> {
    cfg: &'a PuiseuxConfig,
    cap: ExtRational,
    slots: BTreeMap<Rational, (Complex, Float)>,
}

impl<'a> Accumulator<'a> {
    fn new(cfg: &'a PuiseuxConfig, cap: ExtRational) -> Self {
        Accumulator {
            cfg,
            cap,
            slots: BTreeMap::new(),
        }
    }

    fn push(&mut self, exp: Rational, c: Complex) {
        if self.cap <= exp {
            return;
        }
        let mag = self.cfg.abs(&c);
        let slot = self
            .slots
            .entry(exp)
            .or_insert_with(|| (self.cfg.complex(), self.cfg.float()));
        slot.0 += c;
        slot.1 += mag;
    }

    fn finish(self) -> PuiseuxTrunc {
        let eps = Float::with_val(self.cfg.precision, self.cfg.epsilon);
        let mut terms = Vec::with_capacity(self.slots.len());
        for (e, (sum, bound)) in self.slots {
            let threshold = Float::with_val(self.cfg.precision, &eps * &bound);
            if self.cfg.abs(&sum) > threshold {
                terms.push((e, sum));
            }
        }
        PuiseuxTrunc { terms, order: self.cap }
    }
}

/// `Σ c_k q^{e_k} + O(q^order)`, exponents strictly increasing and below
/// `order`. An `order` of `+∞` means the series is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct PuiseuxTrunc {
    terms: Vec<(Rational, Complex)>,
    order: ExtRational,
}

impl PuiseuxTrunc {
    pub fn zero() -> Self {
        PuiseuxTrunc {
            terms: Vec::new(),
            order: ExtRational::Infinity,
        }
    }

    pub fn monomial(exp: Rational, coeff: Complex) -> Self {
        if coeff.is_zero() {
            return PuiseuxTrunc::zero();
        }
        PuiseuxTrunc {
            terms: vec![(exp, coeff)],
            order: ExtRational::Infinity,
        }
    }

    /// Collects terms (merging equal exponents) below `order`.
    pub fn from_terms(
        terms: impl IntoIterator<Item = (Rational, Complex)>,
        order: ExtRational,
        cfg: &PuiseuxConfig,
    ) -> Self {
        let mut acc = Accumulator::new(cfg, order);
        for (e, c) in terms {
            acc.push(e, c);
        }
        acc.finish()
    }

    pub fn terms(&self) -> &[(Rational, Complex)] {
        &self.terms
    }

    pub fn order(&self) -> &ExtRational {
        &self.order
    }

    pub fn is_exact(&self) -> bool {
        !self.order.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.is_exact()
    }

    /// Known to be nonzero: some term survives below the truncation order.
    pub fn is_known_nonzero(&self) -> bool {
        !self.terms.is_empty()
    }

    /// Smallest exponent; the truncation order when no term is known.
    pub fn lower_valuation(&self) -> ExtRational {
        match self.terms.first() {
            Some((e, _)) => ExtRational::Finite(e.clone()),
            None => self.order.clone(),
        }
    }

    /// `val`, with `+∞` for the exact zero series. Fails when every known term
    /// has cancelled but the series is only known up to a finite order.
    pub fn valuation(&self) -> Result<ExtRational> {
        match (self.terms.first(), &self.order) {
            (Some((e, _)), _) => Ok(ExtRational::Finite(e.clone())),
            (None, ExtRational::Infinity) => Ok(ExtRational::Infinity),
            (None, o) => Err(Error::IncreaseDepth { order: o.to_string() }),
        }
    }

    pub fn leading(&self) -> Option<&(Rational, Complex)> {
        self.terms.first()
    }

    pub fn coeff(&self, exp: &Rational) -> Option<&Complex> {
        self.terms
            .binary_search_by(|(e, _)| e.cmp(exp))
            .ok()
            .map(|i| &self.terms[i].1)
    }

    /// Least common denominator of the exponents.
    pub fn ramification(&self) -> Integer {
        self.terms.iter().fold(Integer::from(1), |d, (e, _)| d.lcm(e.denom()))
    }

    pub fn truncate(&self, cap: &ExtRational) -> PuiseuxTrunc {
        let order = self.order.clone().min(cap.clone());
        let terms = self.terms.iter().filter(|(e, _)| order > *e).cloned().collect();
        PuiseuxTrunc { terms, order }
    }

    pub fn add(&self, other: &PuiseuxTrunc, cfg: &PuiseuxConfig) -> PuiseuxTrunc {
        let order = self.order.clone().min(other.order.clone());
        PuiseuxTrunc::from_terms(self.terms.iter().chain(&other.terms).cloned(), order, cfg)
    }

    pub fn neg(&self) -> PuiseuxTrunc {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), Complex::with_val(c.prec(), -c)))
            .collect();
        PuiseuxTrunc {
            terms,
            order: self.order.clone(),
        }
    }

    /// Product, truncated at `cap` as well as at the order the factors allow.
    pub fn mul_capped(&self, other: &PuiseuxTrunc, cap: &ExtRational, cfg: &PuiseuxConfig) -> PuiseuxTrunc {
        let order = (self.order.clone() + other.lower_valuation())
            .min(other.order.clone() + self.lower_valuation())
            .min(cap.clone());
        let mut acc = Accumulator::new(cfg, order);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = Rational::from(ea + eb);
                if acc.cap <= e {
                    break;
                }
                acc.push(e, Complex::with_val(cfg.precision, ca * cb));
            }
        }
        acc.finish()
    }

    pub fn mul(&self, other: &PuiseuxTrunc, cfg: &PuiseuxConfig) -> PuiseuxTrunc {
        self.mul_capped(other, &ExtRational::Infinity, cfg)
    }

    /// `c·q^e·self`.
    pub fn scale(&self, e: &Rational, c: &Complex, cfg: &PuiseuxConfig) -> PuiseuxTrunc {
        if c.is_zero() {
            return PuiseuxTrunc::zero();
        }
        let terms = self
            .terms
            .iter()
            .map(|(x, a)| (Rational::from(x + e), Complex::with_val(cfg.precision, a * c)))
            .collect();
        PuiseuxTrunc {
            terms,
            order: self.order.clone() + e,
        }
    }
}

impl fmt::Display for PuiseuxTrunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() && self.is_exact() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let (re, im) = (c.real().to_f64(), c.imag().to_f64());
            if im == 0.0 {
                write!(f, "{re}")?;
            } else {
                write!(f, "({re}{im:+}i)")?;
            }
            write!(f, "·q^{e}")?;
        }
        if let ExtRational::Finite(o) = &self.order {
            if !self.terms.is_empty() {
                write!(f, " + ")?;
            }
            write!(f, "O(q^{o})")?;
        }
        Ok(())
    }
}

/// A polynomial in `y` with Puiseux-series coefficients; `coeffs[n]` is the
/// coefficient of `y^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PuiPoly {
    coeffs: Vec<PuiseuxTrunc>,
}

/// One edge of a Newton polygon: `multiplicity` roots of valuation
/// `valuation`, spanning degrees `from..=to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slope {
    pub valuation: Rational,
    pub multiplicity: usize,
    pub from: usize,
    pub to: usize,
}

impl PuiPoly {
    pub fn new(mut coeffs: Vec<PuiseuxTrunc>) -> Self {
        while coeffs.last().is_some_and(PuiseuxTrunc::is_zero) {
            coeffs.pop();
        }
        PuiPoly { coeffs }
    }

    /// From integer monomials `c·q^e·y^n` given as `(n, e, c)`.
    pub fn from_integer_terms(
        terms: impl IntoIterator<Item = (usize, Rational, Integer)>,
        cfg: &PuiseuxConfig,
    ) -> Self {
        let mut by_degree: Vec<Vec<(Rational, Complex)>> = Vec::new();
        for (n, e, c) in terms {
            if by_degree.len() <= n {
                by_degree.resize(n + 1, Vec::new());
            }
            by_degree[n].push((e, Complex::with_val(cfg.precision, &c)));
        }
        PuiPoly::new(
            by_degree
                .into_iter()
                .map(|t| PuiseuxTrunc::from_terms(t, ExtRational::Infinity, cfg))
                .collect(),
        )
    }

    pub fn coeffs(&self) -> &[PuiseuxTrunc] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree of the lowest coefficient that is not the exact zero series.
    pub fn low_degree(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// `min_n val(f_n) + n·p`; `+∞` for the zero polynomial.
    pub fn v_p(&self, p: &Rational) -> ExtRational {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c.lower_valuation() + &Rational::from(p * n as i64))
            .min()
            .unwrap_or(ExtRational::Infinity)
    }

    /// Coefficients of `in_p(f)` in `u = q^{-p}·y`, lowest degree first.
    pub fn initial_form(&self, p: &Rational) -> Result<Vec<Complex>> {
        let v = match self.v_p(p) {
            ExtRational::Finite(v) => v,
            ExtRational::Infinity => return Err(Error::ZeroPolynomial),
        };
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (n, c) in self.coeffs.iter().enumerate() {
            let e = &v - Rational::from(p * n as i64);
            if c.order <= e {
                return Err(Error::IncreaseDepth {
                    order: c.order.to_string(),
                });
            }
            let prec = c.terms.first().map_or(53, |(_, z)| z.prec().0);
            out.push(c.coeff(&e).cloned().unwrap_or_else(|| Complex::new(prec)));
        }
        while out.last().is_some_and(Complex::is_zero) {
            out.pop();
        }
        Ok(out)
    }

    /// Edges of the lower convex hull of `(n, val f_n)`, left to right, so root
    /// valuations decrease along the list. The factor `y^k` of zero roots is
    /// ignored.
    pub fn newton_polygon(&self) -> Result<Vec<Slope>> {
        let mut points: Vec<(usize, Rational)> = Vec::new();
        for (n, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            match c.valuation()? {
                ExtRational::Finite(v) => points.push((n, v)),
                ExtRational::Infinity => {}
            }
        }
        if points.len() < 2 {
            return Err(Error::NoNonzeroRoots);
        }
        Ok(lower_hull(&points))
    }

    pub fn add(&self, other: &PuiPoly, cfg: &PuiseuxConfig) -> PuiPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = PuiseuxTrunc::zero();
        PuiPoly::new(
            (0..n)
                .map(|i| {
                    let a = self.coeffs.get(i).unwrap_or(&zero);
                    let b = other.coeffs.get(i).unwrap_or(&zero);
                    a.add(b, cfg)
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &PuiPoly, cfg: &PuiseuxConfig) -> PuiPoly {
        if self.is_zero() || other.is_zero() {
            return PuiPoly::new(Vec::new());
        }
        let mut out = vec![PuiseuxTrunc::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b, cfg), cfg);
            }
        }
        PuiPoly::new(out)
    }

    /// `f(y + c·q^e)`.
    pub fn translate(&self, c: &Complex, e: &Rational, cfg: &PuiseuxConfig) -> PuiPoly {
        let d = self.coeffs.len();
        if d == 0 {
            return self.clone();
        }
        let mut powers = vec![Complex::with_val(cfg.precision, 1)];
        for k in 1..d {
            let next = Complex::with_val(cfg.precision, &powers[k - 1] * c);
            powers.push(next);
        }
        let mut out = Vec::with_capacity(d);
        for j in 0..d {
            let order = (j..d)
                .map(|n| self.coeffs[n].order.clone() + &Rational::from(e * (n - j) as i64))
                .min()
                .unwrap_or(ExtRational::Infinity);
            let mut acc = Accumulator::new(cfg, order);
            for n in j..d {
                let f_n = &self.coeffs[n];
                if f_n.terms.is_empty() {
                    continue;
                }
                let k = n - j;
                let shift = Rational::from(e * k as i64);
                let factor = Complex::with_val(cfg.precision, &powers[k] * binomial(n, k));
                for (x, a) in &f_n.terms {
                    let exp = Rational::from(x + &shift);
                    if acc.cap <= exp {
                        break;
                    }
                    acc.push(exp, Complex::with_val(cfg.precision, a * &factor));
                }
            }
            out.push(acc.finish());
        }
        PuiPoly::new(out)
    }

    /// Drops from `f_n` every term of exponent `≥ cap − n·p`: enough to know
    /// `f(y)` below `q^cap` whenever `val y ≥ p`.
    pub fn truncate_weighted(&self, cap: &Rational, p: &Rational) -> PuiPoly {
        PuiPoly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(n, c)| c.truncate(&ExtRational::Finite(cap - Rational::from(p * n as i64))))
                .collect(),
        }
    }

    /// The facet polynomial of `slope`, indexed from `u^{slope.from}`; its
    /// roots are the leading coefficients of the roots on that facet.
    pub fn facet_form(&self, slope: &Slope) -> Result<Vec<Complex>> {
        let base = self.coeffs[slope.from].valuation()?;
        let v = match base {
            ExtRational::Finite(v) => v + Rational::from(&slope.valuation * slope.from as i64),
            ExtRational::Infinity => return Err(Error::ZeroPolynomial),
        };
        let mut out = Vec::with_capacity(slope.multiplicity + 1);
        for j in slope.from..=slope.to {
            let c = &self.coeffs[j];
            let e = &v - Rational::from(&slope.valuation * j as i64);
            if c.order <= e {
                return Err(Error::IncreaseDepth {
                    order: c.order.to_string(),
                });
            }
            let prec = c.terms.first().map_or(53, |(_, z)| z.prec().0);
            out.push(c.coeff(&e).cloned().unwrap_or_else(|| Complex::new(prec)));
        }
        Ok(out)
    }

    /// `f(y)` for a series `y`, truncated at `cap`.
    pub fn eval(&self, y: &PuiseuxTrunc, cap: &ExtRational, cfg: &PuiseuxConfig) -> PuiseuxTrunc {
        let mut acc = PuiseuxTrunc::zero().truncate(cap);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul_capped(y, cap, cfg).add(&c.truncate(cap), cfg);
        }
        acc
    }

    /// Derivative in `y`.
    pub fn derivative(&self, cfg: &PuiseuxConfig) -> PuiPoly {
        PuiPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, c)| c.scale(&Rational::new(), &Complex::with_val(cfg.precision, n as u32), cfg))
                .collect(),
        )
    }
}

fn binomial(n: usize, k: usize) -> Integer {
    Integer::from(Integer::binomial_u(n as u32, k as u32))
}

/// Lower convex hull edges of points sorted by abscissa.
fn lower_hull(points: &[(usize, Rational)]) -> Vec<Slope> {
    let mut hull: Vec<&(usize, Rational)> = Vec::new();
    for p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Keep b only for a strict left turn a → b → p.
            let lhs = Rational::from(&b.1 - &a.1) * Integer::from(p.0 - a.0);
            let rhs = Rational::from(&p.1 - &a.1) * Integer::from(b.0 - a.0);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull.windows(2)
        .map(|w| {
            let (i, vi) = w[0];
            let (j, vj) = w[1];
            Slope {
                valuation: Rational::from(vi - vj) / Integer::from(j - i),
                multiplicity: j - i,
                from: *i,
                to: *j,
            }
        })
        .collect()
}

/// Nonzero roots of `Σ a_k u^k` grouped into clusters, as `(root, multiplicity)`.
pub fn complex_roots(poly: &[Complex], cfg: &PuiseuxConfig) -> Result<Vec<(Complex, usize)>> {
    let lo = match poly.iter().position(|c| !c.is_zero()) {
        Some(i) => i,
        None => return Err(Error::ZeroPolynomial),
    };
    let hi = poly.iter().rposition(|c| !c.is_zero()).unwrap_or(lo);
    let a: Vec<Complex> = poly[lo..=hi].to_vec();
    let deg = a.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    if deg == 1 {
        let r = -Complex::with_val(cfg.precision, &a[0] / &a[1]);
        return Ok(vec![(r, 1)]);
    }
    let approx = aberth_f64(&a);
    let loose = cluster(
        approx
            .iter()
            .map(|z| Complex::with_val(cfg.precision, (z.re, z.im)))
            .collect(),
        1e-3,
    );
    if let Some(roots) = refine_clusters(&a, &loose, cfg) {
        return Ok(roots);
    }
    let seeds: Vec<Complex> = approx
        .iter()
        .map(|z| Complex::with_val(cfg.precision, (z.re, z.im)))
        .collect();
    let fine = cluster(aberth_mp(&a, seeds, cfg), 1e-10);
    refine_clusters(&a, &fine, cfg).ok_or_else(|| {
        Error::Precision(format!(
            "could not separate the roots of a degree {deg} facet polynomial"
        ))
    })
}

fn horner64(a: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in a.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn aberth_f64(a: &[Complex]) -> Vec<Complex64> {
    let a: Vec<Complex64> = a
        .iter()
        .map(|c| Complex64::new(c.real().to_f64(), c.imag().to_f64()))
        .collect();
    let n = a.len() - 1;
    let radius = (a[0].norm() / a[n].norm()).powf(1.0 / n as f64);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64 + 0.7))
        .collect();
    for _ in 0..600 {
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let (p, dp) = horner64(&a, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..n).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[k] -= w;
                worst = worst.max(w.norm() / z[k].norm().max(f64::MIN_POSITIVE));
            }
        }
        if worst < 1e-15 {
            break;
        }
    }
    z
}

fn horner(a: &[Complex], z: &Complex, prec: u32) -> (Complex, Complex) {
    let mut p = Complex::new(prec);
    let mut dp = Complex::new(prec);
    for c in a.iter().rev() {
        dp *= z;
        dp += &p;
        p *= z;
        p += c;
    }
    (p, dp)
}

fn aberth_mp(a: &[Complex], mut z: Vec<Complex>, cfg: &PuiseuxConfig) -> Vec<Complex> {
    let n = z.len();
    let tol = Float::with_val(cfg.precision, Float::i_exp(1, -(cfg.precision as i32) / 2));
    for _ in 0..500 {
        let mut done = true;
        for k in 0..n {
            let (p, dp) = horner(a, &z[k], cfg.precision);
            if p.is_zero() {
                continue;
            }
            let ratio = Complex::with_val(cfg.precision, &p / &dp);
            let mut s = cfg.complex();
            for j in (0..n).filter(|&j| j != k) {
                let d = Complex::with_val(cfg.precision, &z[k] - &z[j]);
                s += d.recip();
            }
            let denom = Complex::with_val(cfg.precision, 1 - Complex::with_val(cfg.precision, &ratio * &s));
            let w = ratio / denom;
            if w.real().is_finite() && w.imag().is_finite() {
                z[k] -= &w;
                if cfg.abs(&w) > Float::with_val(cfg.precision, &tol * cfg.abs(&z[k])) {
                    done = false;
                }
            }
        }
        if done {
            break;
        }
    }
    z
}

/// Union of approximations closer than `tol` relative to their size; returns
/// cluster centroids with sizes.
fn cluster(z: Vec<Complex>, tol: f64) -> Vec<(Complex, usize)> {
    let n = z.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let prec = z[i].prec().0;
            let d = Float::with_val(prec, Complex::with_val(prec, &z[i] - &z[j]).abs_ref());
            let scale = Float::with_val(prec, z[i].abs_ref()).max(&Float::with_val(prec, z[j].abs_ref()));
            if d <= scale * tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups
        .into_values()
        .map(|idx| {
            let prec = z[idx[0]].prec().0;
            let mut sum = Complex::new(prec);
            for &i in &idx {
                sum += &z[i];
            }
            (sum / idx.len() as u32, idx.len())
        })
        .collect()
}

fn derivative_coeffs(a: &[Complex], prec: u32) -> Vec<Complex> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| Complex::with_val(prec, c * k as u32))
        .collect()
}

/// Newton on the `(m−1)`-th derivative from each cluster centre, then checks
/// that every cluster really is an `m`-fold root. Clusters that converge onto
/// the same root are merged and refined again.
fn refine_clusters(a: &[Complex], clusters: &[(Complex, usize)], cfg: &PuiseuxConfig) -> Option<Vec<(Complex, usize)>> {
    let prec = cfg.precision;
    let merge_tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 8));
    let mut clusters = clusters.to_vec();
    loop {
        let out = refine_once(a, &clusters, cfg)?;
        let close = (0..out.len())
            .flat_map(|i| (i + 1..out.len()).map(move |j| (i, j)))
            .find(|&(i, j)| {
                let d = cfg.abs(&Complex::with_val(prec, &out[i].0 - &out[j].0));
                let scale = cfg.abs(&out[i].0).max(&cfg.abs(&out[j].0));
                d <= Float::with_val(prec, &scale * &merge_tol)
            });
        let Some((i, j)) = close else { return Some(out) };
        let (ci, mi) = &out[i];
        let (cj, mj) = &out[j];
        let mut centre = Complex::with_val(prec, ci * *mi as u32);
        centre += Complex::with_val(prec, cj * *mj as u32);
        centre /= (mi + mj) as u32;
        clusters = out
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && k != j)
            .map(|(_, c)| c.clone())
            .chain(std::iter::once((centre, mi + mj)))
            .collect();
    }
}

fn refine_once(a: &[Complex], clusters: &[(Complex, usize)], cfg: &PuiseuxConfig) -> Option<Vec<(Complex, usize)>> {
    let prec = cfg.precision;
    let mut derivs = vec![a.to_vec()];
    let max_m = clusters.iter().map(|c| c.1).max().unwrap_or(1);
    for k in 1..=max_m {
        let next = derivative_coeffs(&derivs[k - 1], prec);
        derivs.push(next);
    }
    let step_tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 6));
    let check_tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 2));
    let mut out = Vec::with_capacity(clusters.len());
    for (c0, m) in clusters {
        let target = &derivs[m - 1];
        let mut c = c0.clone();
        for _ in 0..200 {
            let (p, dp) = horner(target, &c, prec);
            if p.is_zero() || dp.is_zero() {
                break;
            }
            let step = Complex::with_val(prec, &p / &dp);
            c -= &step;
            if cfg.abs(&step) <= Float::with_val(prec, &step_tol * cfg.abs(&c)) {
                break;
            }
        }
        if c.is_zero() || !c.real().is_finite() || !c.imag().is_finite() {
            return None;
        }
        let mag = cfg.abs(&c);
        for d in derivs.iter().take(*m) {
            let (p, _) = horner(d, &c, prec);
            let mut bound = Float::new(prec);
            let mut pw = Float::with_val(prec, 1);
            for coef in d {
                bound += Float::with_val(prec, &pw * cfg.abs(coef));
                pw *= &mag;
            }
            if cfg.abs(&p) > Float::with_val(prec, &check_tol * &bound) {
                return None;
            }
        }
        out.push((c, *m));
    }
    Some(out)
}

/// One root branch: the truncated series and how many roots of the
/// polynomial share it (more than one when the expansion stopped before the
/// roots separated, or for an exact multiple root).
#[derive(Clone, Debug, PartialEq)]
pub struct PuiseuxRoot {
    pub series: PuiseuxTrunc,
    pub multiplicity: usize,
}

/// Roots of valuation `p` of `f`, lifted by `depth` Newton–Puiseux steps.
pub fn puiseux_roots(f: &PuiPoly, p: &Rational, depth: usize, cfg: &PuiseuxConfig) -> Result<Vec<PuiseuxRoot>> {
    let mut out = Vec::new();
    for (c, m) in facet_roots(f, p, cfg)? {
        out.extend(lift_root(f, p, &c, m, depth, cfg)?);
    }
    Ok(out)
}

/// Leading coefficients (with multiplicity) of the roots of valuation `p`.
pub fn facet_roots(f: &PuiPoly, p: &Rational, cfg: &PuiseuxConfig) -> Result<Vec<(Complex, usize)>> {
    let slope = f
        .newton_polygon()?
        .into_iter()
        .find(|s| &s.valuation == p)
        .ok_or_else(|| Error::NotASlope(p.to_string()))?;
    complex_roots(&f.facet_form(&slope)?, cfg)
}

/// The `m` roots of `f` whose expansion starts with `c·q^p`.
///
/// Coefficients are cut at a weighted cap sized for `depth` further unit
/// steps, so a branch may stop early with a finite truncation order; callers
/// escalate `depth` when that order is too low for them.
pub fn lift_root(
    f: &PuiPoly,
    p: &Rational,
    c: &Complex,
    m: usize,
    depth: usize,
    cfg: &PuiseuxConfig,
) -> Result<Vec<PuiseuxRoot>> {
    let base = match f.v_p(p) {
        ExtRational::Finite(v) => v,
        ExtRational::Infinity => return Err(Error::ZeroPolynomial),
    };
    let cap = base + Rational::from((m * depth.max(1)) as i64);
    let g = f.truncate_weighted(&cap, p).translate(c, p, cfg);
    let mut out = Vec::new();
    let branch = Branch { orig: f, cfg };
    branch.expand(&g, vec![(p.clone(), c.clone())], p, m, depth.max(1) - 1, &mut out)?;
    Ok(out)
}

/// Hull of `(j, val f_j)` over `z..=m`, checking that coefficients known only
/// up to their truncation order cannot reach below it.
fn branch_hull(f: &PuiPoly, z: usize, m: usize) -> Result<Vec<Slope>> {
    let mut known = Vec::new();
    let mut bounds = Vec::new();
    for j in z..=m {
        let c = &f.coeffs[j];
        match c.terms.first() {
            Some((e, _)) => known.push((j, e.clone())),
            None => {
                if let ExtRational::Finite(o) = &c.order {
                    bounds.push((j, o.clone()));
                }
            }
        }
    }
    let hull = lower_hull(&known);
    for (j, b) in bounds {
        if let Some(s) = hull.iter().find(|s| s.from <= j && j <= s.to) {
            let at_from = &known.iter().find(|k| k.0 == s.from).unwrap().1;
            let h = at_from - Rational::from(&s.valuation * (j - s.from) as i64);
            if b <= h {
                return Err(Error::IncreaseDepth { order: b.to_string() });
            }
        }
    }
    Ok(hull)
}

struct Branch<'a> {
    orig: &'a PuiPoly,
    cfg: &'a PuiseuxConfig,
}

impl Branch<'_> {
    /// How many of `f, f', …` (at most `m`) vanish exactly at the finite series
    /// `prefix`; zero when `f` itself is only known to finite order.
    fn exact_multiplicity(&self, prefix: &[(Rational, Complex)], m: usize) -> usize {
        if self.orig.coeffs.iter().any(|c| !c.is_exact()) {
            return 0;
        }
        let y = PuiseuxTrunc {
            terms: prefix.to_vec(),
            order: ExtRational::Infinity,
        };
        let mut g = self.orig.clone();
        for k in 0..m {
            if !g.eval(&y, &ExtRational::Infinity, self.cfg).is_zero() {
                return k;
            }
            g = g.derivative(self.cfg);
        }
        m
    }

    fn expand(
        &self,
        f: &PuiPoly,
        prefix: Vec<(Rational, Complex)>,
        last: &Rational,
        m: usize,
        steps_left: usize,
        out: &mut Vec<PuiseuxRoot>,
    ) -> Result<()> {
        let cfg = self.cfg;
        let zero = PuiseuxTrunc::zero();
        let coeff = |j: usize| f.coeffs.get(j).unwrap_or(&zero);
        let top = match coeff(m).terms.first() {
            Some((e, _)) => e.clone(),
            None => {
                return Err(Error::IncreaseDepth {
                    order: coeff(m).order.to_string(),
                })
            }
        };
        let first_known = (0..=m).find(|&j| coeff(j).is_known_nonzero()).unwrap_or(m);
        if (0..first_known).any(|j| !coeff(j).is_zero()) {
            let exact = self.exact_multiplicity(&prefix, m);
            if exact > 0 && (exact..first_known).all(|j| coeff(j).is_zero()) {
                // An exact root hides the vanishing low coefficients; deflate it.
                let mut deflated = f.clone();
                for c in deflated.coeffs.iter_mut().take(exact) {
                    *c = PuiseuxTrunc::zero();
                }
                return self.expand(&deflated, prefix, last, m, steps_left, out);
            }
            if exact > 0 {
                out.push(PuiseuxRoot {
                    series: PuiseuxTrunc {
                        terms: prefix.clone(),
                        order: ExtRational::Infinity,
                    },
                    multiplicity: exact,
                });
            }
            if exact == m {
                return Ok(());
            }
            // The remaining terms hide below the truncation: bound where they start.
            let bound = (0..m)
                .filter(|&j| !coeff(j).is_zero())
                .map(|j| {
                    let low = coeff(j).lower_valuation().into_finite().unwrap();
                    (low - &top) / Integer::from(m - j)
                })
                .min()
                .unwrap();
            if &bound <= last {
                return Err(Error::IncreaseDepth {
                    order: bound.to_string(),
                });
            }
            out.push(PuiseuxRoot {
                series: PuiseuxTrunc {
                    terms: prefix,
                    order: ExtRational::Finite(bound),
                },
                multiplicity: m - exact,
            });
            return Ok(());
        }
        let z = first_known;
        if z > 0 {
            out.push(PuiseuxRoot {
                series: PuiseuxTrunc {
                    terms: prefix.clone(),
                    order: ExtRational::Infinity,
                },
                multiplicity: z,
            });
        }
        if z == m {
            return Ok(());
        }
        let slopes = branch_hull(f, z, m)?;
        if slopes.iter().any(|s| &s.valuation <= last) {
            return Err(Error::Precision(format!(
                "branch at exponent {last} does not separate from the other roots"
            )));
        }
        if steps_left == 0 {
            let order = slopes.iter().map(|s| s.valuation.clone()).min().unwrap();
            out.push(PuiseuxRoot {
                series: PuiseuxTrunc {
                    terms: prefix,
                    order: ExtRational::Finite(order),
                },
                multiplicity: m - z,
            });
            return Ok(());
        }
        for s in &slopes {
            let phi = f.facet_form(s)?;
            for (c, mult) in complex_roots(&phi, cfg)? {
                let g = f.translate(&c, &s.valuation, cfg);
                let mut next = prefix.clone();
                next.push((s.valuation.clone(), c));
                self.expand(&g, next, &s.valuation, mult, steps_left - 1, out)?;
            }
        }
        Ok(())
    }
}

/// `val(g(y*))`. Answers only when the truncation of `y*` provably cannot
/// change the result; otherwise asks for a deeper expansion.
pub fn val_at_root(g: &PuiPoly, ystar: &PuiseuxTrunc, cfg: &PuiseuxConfig) -> Result<ExtRational> {
    let Some((p, lead)) = ystar.leading() else {
        return Err(Error::Precision("root series has no known term".into()));
    };
    if g.is_zero() {
        return Ok(ExtRational::Infinity);
    }
    if let Ok(form) = g.initial_form(p) {
        let (value, _) = horner(&form, lead, cfg.precision);
        let mut bound = cfg.float();
        let mag = cfg.abs(lead);
        let mut pw = Float::with_val(cfg.precision, 1);
        for coef in &form {
            bound += Float::with_val(cfg.precision, &pw * cfg.abs(coef));
            pw *= &mag;
        }
        if cfg.abs(&value) > Float::with_val(cfg.precision, &bound * cfg.epsilon) {
            return Ok(g.v_p(p));
        }
    }
    let exact_series = PuiseuxTrunc {
        terms: ystar.terms.clone(),
        order: ExtRational::Infinity,
    };
    let tau = match &ystar.order {
        ExtRational::Infinity => ExtRational::Infinity,
        ExtRational::Finite(rho) => {
            let spread = g
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, c)| !c.is_zero())
                .map(|(n, c)| c.lower_valuation() + &Rational::from(p * (n as i64 - 1)))
                .min();
            match spread {
                Some(s) => s + rho,
                None => ExtRational::Infinity,
            }
        }
    };
    let value = g.eval(&exact_series, &tau, cfg);
    match value.leading() {
        Some((e, _)) => Ok(ExtRational::Finite(e.clone())),
        None if !tau.is_finite() => Ok(ExtRational::Infinity),
        None => Err(Error::IncreaseDepth { order: tau.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PuiseuxConfig {
        PuiseuxConfig::default()
    }

    fn r(a: i64, b: i64) -> Rational {
        Rational::from((a, b))
    }

    /// Builds a polynomial from `(y-degree, q-exponent, coefficient)` triples.
    fn poly(terms: &[(usize, (i64, i64), i64)]) -> PuiPoly {
        PuiPoly::from_integer_terms(
            terms.iter().map(|&(n, (a, b), c)| (n, r(a, b), Integer::from(c))),
            &cfg(),
        )
    }

    fn re(c: &Complex) -> f64 {
        c.real().to_f64()
    }

    #[test]
    fn v_p_examples() {
        assert_eq!(poly(&[(1, (1, 1), 1)]).v_p(&r(1, 1)), ExtRational::from(2));
        assert_eq!(PuiPoly::new(vec![]).v_p(&r(1, 1)), ExtRational::Infinity);
        let f = poly(&[(1, (-1, 1), 1), (2, (0, 1), 2), (2, (-2, 1), 3)]);
        assert_eq!(f.v_p(&r(1, 1)), ExtRational::from(0));
    }

    #[test]
    fn initial_form_examples() {
        let f = poly(&[(1, (-1, 1), 1), (2, (0, 1), 2), (2, (-2, 1), 3)]);
        let form: Vec<f64> = f.initial_form(&r(1, 1)).unwrap().iter().map(re).collect();
        assert_eq!(form, vec![0.0, 1.0, 3.0]);
        let form: Vec<f64> = poly(&[(1, (0, 1), 1)])
            .initial_form(&r(0, 1))
            .unwrap()
            .iter()
            .map(re)
            .collect();
        assert_eq!(form, vec![0.0, 1.0]);
        let form: Vec<f64> = poly(&[(0, (1, 1), 1), (1, (0, 1), 1)])
            .initial_form(&r(1, 1))
            .unwrap()
            .iter()
            .map(re)
            .collect();
        assert_eq!(form, vec![1.0, 1.0]);
        assert_eq!(PuiPoly::new(vec![]).initial_form(&r(0, 1)), Err(Error::ZeroPolynomial));
    }

    #[test]
    fn newton_polygon_examples() {
        let s = poly(&[(0, (2, 1), 1), (1, (0, 1), 1)]).newton_polygon().unwrap();
        assert_eq!(
            s.iter()
                .map(|s| (s.valuation.clone(), s.multiplicity))
                .collect::<Vec<_>>(),
            vec![(r(2, 1), 1)]
        );
        let s = poly(&[(0, (3, 1), 1), (1, (1, 1), 1), (3, (0, 1), 1)])
            .newton_polygon()
            .unwrap();
        assert_eq!(
            s.iter()
                .map(|s| (s.valuation.clone(), s.multiplicity))
                .collect::<Vec<_>>(),
            vec![(r(2, 1), 1), (r(1, 2), 2)]
        );
        assert_eq!(poly(&[(3, (1, 1), 2)]).newton_polygon(), Err(Error::NoNonzeroRoots));
    }

    #[test]
    fn zero_roots_are_ignored_by_the_polygon() {
        let s = poly(&[(2, (3, 1), 1), (3, (0, 1), 1)]).newton_polygon().unwrap();
        assert_eq!(
            s,
            vec![Slope {
                valuation: r(3, 1),
                multiplicity: 1,
                from: 2,
                to: 3
            }]
        );
    }

    #[test]
    fn linear_root() {
        let f = poly(&[(0, (2, 1), 1), (1, (0, 1), 1)]);
        let roots = puiseux_roots(&f, &r(2, 1), 1, &cfg()).unwrap();
        assert_eq!(roots.len(), 1);
        let (e, c) = roots[0].series.leading().unwrap();
        assert_eq!((e.clone(), re(c)), (r(2, 1), -1.0));
    }

    #[test]
    fn slope_two_leading_term() {
        let f = poly(&[(0, (3, 1), 1), (1, (1, 1), 1), (3, (0, 1), 1)]);
        let roots = puiseux_roots(&f, &r(2, 1), 1, &cfg()).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(re(&roots[0].series.leading().unwrap().1), -1.0);
        assert!(matches!(
            puiseux_roots(&f, &r(1, 1), 1, &cfg()),
            Err(Error::NotASlope(_))
        ));
    }

    #[test]
    fn half_slope_roots_have_ramification_two() {
        let f = poly(&[(0, (3, 1), 1), (1, (1, 1), 1), (3, (0, 1), 1)]);
        let roots = puiseux_roots(&f, &r(1, 2), 3, &cfg()).unwrap();
        assert_eq!(roots.iter().map(|r| r.multiplicity).sum::<usize>(), 2);
        for root in &roots {
            assert_eq!(root.series.ramification(), 2);
        }
    }

    #[test]
    fn factored_quadratic_leading_coefficients() {
        // (y − q)(y − 2q) = y² − 3q·y + 2q²
        let f = poly(&[(0, (2, 1), 2), (1, (1, 1), -3), (2, (0, 1), 1)]);
        let roots = puiseux_roots(&f, &r(1, 1), 1, &cfg()).unwrap();
        let mut lead: Vec<f64> = roots.iter().map(|r| re(&r.series.leading().unwrap().1)).collect();
        lead.sort_by(f64::total_cmp);
        assert!((lead[0] - 1.0).abs() < 1e-40 && (lead[1] - 2.0).abs() < 1e-40);
        // Both are exact roots: expansion finds no further terms.
        let roots = puiseux_roots(&f, &r(1, 1), 4, &cfg()).unwrap();
        assert!(roots.iter().all(|r| r.series.is_exact()));
    }

    #[test]
    fn double_root_is_one_cluster() {
        // (y − q)² = y² − 2q·y + q²
        let f = poly(&[(0, (2, 1), 1), (1, (1, 1), -2), (2, (0, 1), 1)]);
        let roots = puiseux_roots(&f, &r(1, 1), 3, &cfg()).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].multiplicity, 2);
        assert!(roots[0].series.is_exact());
    }

    #[test]
    fn val_at_root_examples() {
        let g = poly(&[(1, (0, 1), 1)]);
        let y = PuiseuxTrunc::monomial(r(2, 1), Complex::with_val(256, 1));
        assert_eq!(val_at_root(&g, &y, &cfg()).unwrap(), ExtRational::from(2));

        let g = poly(&[(0, (1, 1), -1), (1, (0, 1), 1)]);
        let exact = PuiseuxTrunc::monomial(r(1, 1), Complex::with_val(256, 1));
        assert_eq!(val_at_root(&g, &exact, &cfg()).unwrap(), ExtRational::Infinity);
        let truncated = exact.truncate(&ExtRational::from(4));
        assert!(matches!(
            val_at_root(&g, &truncated, &cfg()),
            Err(Error::IncreaseDepth { .. })
        ));
    }

    #[test]
    fn cancellation_resolved_by_deeper_terms() {
        // y* = q + q² + O(q^3) in g = y − q: g(y*) = q² + O(q^3).
        let g = poly(&[(0, (1, 1), -1), (1, (0, 1), 1)]);
        let y = PuiseuxTrunc {
            terms: vec![
                (r(1, 1), Complex::with_val(256, 1)),
                (r(2, 1), Complex::with_val(256, 1)),
            ],
            order: ExtRational::from(3),
        };
        assert_eq!(val_at_root(&g, &y, &cfg()).unwrap(), ExtRational::from(2));
    }

    #[test]
    fn translation_round_trip() {
        let f = poly(&[(0, (3, 1), 1), (1, (1, 1), 1), (3, (0, 1), 1)]);
        let c = Complex::with_val(256, (0.5, -1.25));
        let back = f
            .translate(&c, &r(1, 2), &cfg())
            .translate(&Complex::with_val(256, -&c), &r(1, 2), &cfg());
        assert_eq!(back.coeffs().len(), f.coeffs().len());
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert_eq!(a.terms().len(), b.terms().len());
            for ((ea, ca), (eb, cb)) in a.terms().iter().zip(b.terms()) {
                assert_eq!(ea, eb);
                let d = Float::with_val(256, Complex::with_val(256, ca - cb).abs_ref());
                assert!(d < 1e-60);
            }
        }
    }

    #[test]
    fn roots_of_clustered_facet() {
        // (u − 1)³ (u + 2)
        let c = |x: i64| Complex::with_val(256, x);
        let roots = complex_roots(&[c(-2), c(5), c(-3), c(-1), c(1)], &cfg()).unwrap();
        let mut seen: Vec<(i64, usize)> = roots.iter().map(|(z, m)| (re(z).round() as i64, *m)).collect();
        seen.sort();
        assert_eq!(seen, vec![(-2, 1), (1, 3)]);
    }
}
