//! Oracles shared by the integration tests. Each one is written from the
//! defining rule and shares no code with the library.

#![allow(dead_code)]

use rand::Rng;
use rug::{float::Constant, ops::Pow, Complex, Float};

use tropical_bbs::automata::PbbsState;

/// One periodic step by a carrier that circles the ring twice: the first lap
/// loads the carrier to its stationary content, the second lap records.
pub fn carrier_pbbs_step(cells: &[bool]) -> Vec<bool> {
    let l = cells.len();
    let mut load = 0usize;
    let mut next = vec![false; l];
    for lap in 0..2 {
        for i in 0..l {
            if cells[i] {
                load += 1;
            } else if load > 0 {
                load -= 1;
                if lap == 1 {
                    next[i] = true;
                }
            }
        }
    }
    next
}

/// One step on the line by a single left-to-right carrier sweep.
pub fn carrier_bbs_step(cells: &[bool]) -> Vec<bool> {
    let balls = cells.iter().filter(|&&b| b).count();
    let mut next = vec![false; cells.len() + balls];
    let mut load = 0usize;
    for i in 0..next.len() {
        if cells.get(i).copied().unwrap_or(false) {
            load += 1;
        } else if load > 0 {
            load -= 1;
            next[i] = true;
        }
    }
    next
}

pub fn render(cells: &[bool]) -> String {
    cells.iter().map(|&b| if b { '1' } else { '.' }).collect()
}

/// A periodic state with `3 ≤ L ≤ max_l` and fewer than `L/2` balls.
pub fn random_pbbs(rng: &mut impl Rng, max_l: usize) -> PbbsState {
    let l = rng.gen_range(3..=max_l);
    let balls = rng.gen_range(1..=(l - 1) / 2);
    let mut cells = vec![false; l];
    let mut placed = 0;
    while placed < balls {
        let i = rng.gen_range(0..l);
        if !cells[i] {
            cells[i] = true;
            placed += 1;
        }
    }
    PbbsState::new(cells).unwrap()
}

/// Polynomial `Σ c·q^e·y^n` stored as `(n, e, c)`.
pub type IntPoly = Vec<(usize, i64, i64)>;

/// Random polynomial in `y` whose coefficients are sums of one or two
/// monomials in `q`. The lowest `q`-power of every coefficient is `±1`, so
/// the leading magnitudes carry no large integer factors.
pub fn random_poly(rng: &mut impl Rng) -> IntPoly {
    loop {
        let degree = rng.gen_range(1..=8usize);
        let mut terms = Vec::new();
        for n in 0..=degree {
            if n != degree && rng.gen_bool(0.35) {
                continue;
            }
            let e = rng.gen_range(0..=10i64);
            terms.push((n, e, if rng.gen_bool(0.5) { 1 } else { -1 }));
            if rng.gen_bool(0.4) {
                terms.push((n, e + rng.gen_range(1..=4), rng.gen_range(-9..=9i64)));
            }
        }
        terms.retain(|t| t.2 != 0);
        if terms.iter().map(|t| t.0).min() < Some(degree) {
            return terms;
        }
    }
}

const BITS: u32 = 1024;

/// Nonzero roots of the polynomial at `q = q0`, by Aberth iteration.
pub fn numeric_roots(poly: &IntPoly, q0: &Float) -> Vec<Complex> {
    let degree = poly.iter().map(|t| t.0).max().unwrap();
    let mut coeffs = vec![Complex::new(BITS); degree + 1];
    for &(n, e, c) in poly {
        let v = Float::with_val(BITS, q0.pow(e as i32)) * c;
        coeffs[n] += v;
    }
    let low = coeffs.iter().position(|c| !c.is_zero()).unwrap();
    let coeffs = coeffs.split_off(low);
    let d = coeffs.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let eval = |z: &Complex| -> (Complex, Complex) {
        let mut p = Complex::new(BITS);
        let mut dp = Complex::new(BITS);
        for c in coeffs.iter().rev() {
            dp *= z;
            dp += &p;
            p *= z;
            p += c;
        }
        (p, dp)
    };
    let pi = Float::with_val(BITS, Constant::Pi);
    let mut roots: Vec<Complex> = (0..d)
        .map(|k| {
            let mut angle = Float::with_val(BITS, &pi * (2 * k as u32 + 1));
            angle /= d as u32 * 2;
            angle += 0.4;
            let (s, c) = angle.sin_cos(Float::new(BITS));
            Complex::with_val(BITS, (c, s)) * (1.0 + 0.1 * k as f64)
        })
        .collect();
    let tol = Float::with_val(BITS, 2).pow(-600i32);
    for _ in 0..20000 {
        let mut worst = Float::with_val(BITS, 0);
        for i in 0..d {
            let (p, dp) = eval(&roots[i]);
            if p.is_zero() {
                continue;
            }
            let newton = Complex::with_val(BITS, &p / &dp);
            let mut repel = Complex::new(BITS);
            for j in 0..d {
                if j != i {
                    repel += Complex::with_val(BITS, &roots[i] - &roots[j]).recip();
                }
            }
            let denom = Complex::with_val(BITS, 1 - Complex::with_val(BITS, &newton * &repel));
            let step = newton / denom;
            let rel = Float::with_val(BITS, step.abs_ref()) / Float::with_val(BITS, roots[i].abs_ref());
            worst = worst.max(&rel);
            roots[i] -= step;
        }
        if worst < tol {
            break;
        }
    }
    roots
}

/// `ln|y| / ln q0` for every numeric root, largest first.
pub fn numeric_valuations(poly: &IntPoly, q0: f64) -> Vec<f64> {
    let q = Float::with_val(BITS, q0);
    let lq = q0.ln();
    let mut v: Vec<f64> = numeric_roots(poly, &q)
        .iter()
        .map(|z| Float::with_val(BITS, z.abs_ref()).ln().to_f64() / lq)
        .collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

/// Slopes of the library's Newton polygon, one entry per root, largest first.
pub fn predicted_valuations(poly: &IntPoly) -> Vec<f64> {
    use rug::{Integer, Rational};
    use tropical_bbs::puiseux::{PuiPoly, PuiseuxConfig};
    let cfg = PuiseuxConfig::default();
    let f = PuiPoly::from_integer_terms(
        poly.iter().map(|&(n, e, c)| (n, Rational::from(e), Integer::from(c))),
        &cfg,
    );
    let mut v: Vec<f64> = f
        .newton_polygon()
        .unwrap()
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.valuation.to_f64(), s.multiplicity))
        .collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

/// Compares predicted and numeric root valuations at `q0`. The tolerance is
/// 10% of `|v·ln q0|`, and never less than 10% of `|ln q0|`.
pub fn check_newton(poly: &IntPoly, q0: f64) -> Result<(), String> {
    let predicted = predicted_valuations(poly);
    let measured = numeric_valuations(poly, q0);
    if predicted.len() != measured.len() {
        return Err(format!(
            "{poly:?}: {} slopes for {} roots",
            predicted.len(),
            measured.len()
        ));
    }
    for (p, m) in predicted.iter().zip(&measured) {
        if (p - m).abs() > 0.1 * p.abs().max(1.0) {
            return Err(format!("{poly:?}: slope {p} but root valuation {m}"));
        }
    }
    Ok(())
}
