//! The tropical theta function `Θ(z; B) = min_{m ∈ ℤ^g} ½⟨m, Bm⟩ + ⟨m, z⟩`,
//! the periodic solution built from it and the limit tau function of the
//! non-periodic system.

use rug::{Integer, Rational};

use crate::curve::CurveModel;
use crate::error::{Error, Result};
use crate::exact::{exact_cholesky, round_half_up, LdlFactor, RatMatrix, RatVector};

/// Largest genus for which `limit_tau` enumerates `{0,1}^g`.
pub const MAX_LIMIT_GENUS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaValue {
    pub value: Rational,
    /// Lexicographically smallest minimizer.
    pub argmin: Vec<Integer>,
    /// All minimizers, sorted.
    pub minimizers: Vec<Vec<Integer>>,
}

/// Exact evaluator for a fixed positive definite `B`.
#[derive(Clone, Debug)]
pub struct ThetaEvaluator {
    b: RatMatrix,
    factor: LdlFactor,
}

impl ThetaEvaluator {
    pub fn new(b: &RatMatrix) -> Result<Self> {
        let factor = exact_cholesky(b)?;
        Ok(ThetaEvaluator { b: b.clone(), factor })
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// Global minimum by Fincke–Pohst enumeration around the continuous
    /// minimizer `−B⁻¹z`, with every comparison exact.
    pub fn eval(&self, z: &RatVector) -> Result<ThetaValue> {
        let g = self.dim();
        if z.len() != g {
            return Err(Error::DimensionMismatch {
                expected: g,
                found: z.len(),
            });
        }
        if g == 0 {
            return Ok(ThetaValue {
                value: Rational::new(),
                argmin: vec![],
                minimizers: vec![vec![]],
            });
        }
        let center = self.factor.solve(z).neg();
        let mut search = Search {
            lower: &self.factor.lower,
            pivots: &self.factor.pivots,
            center: &center,
            m: vec![Integer::new(); g],
            diff: vec![Rational::new(); g],
            best: None,
            found: Vec::new(),
        };
        search.greedy();
        search.descend(g, Rational::new());
        let mut minimizers = search.found;
        minimizers.sort();
        let argmin = minimizers[0].clone();
        let value = (self.b.quad_form_int(&argmin) / 2) + z.dot_int(&argmin);
        Ok(ThetaValue {
            value,
            argmin,
            minimizers,
        })
    }

    pub fn value(&self, z: &RatVector) -> Result<Rational> {
        Ok(self.eval(z)?.value)
    }
}

struct Search<'a> {
    lower: &'a RatMatrix,
    pivots: &'a [Rational],
    center: &'a RatVector,
    m: Vec<Integer>,
    /// `m_j − center_j` for the levels already fixed.
    diff: Vec<Rational>,
    best: Option<Rational>,
    found: Vec<Vec<Integer>>,
}

impl Search<'_> {
    /// Conditional center of coordinate `k` given coordinates above it.
    fn level_center(&self, k: usize) -> Rational {
        let mut c = self.center[k].clone();
        for j in (k + 1)..self.m.len() {
            c -= Rational::from(self.lower.get(j, k) * &self.diff[j]);
        }
        c
    }

    fn fix(&mut self, k: usize, value: Integer) {
        self.diff[k] = Rational::from(&value - &self.center[k]);
        self.m[k] = value;
    }

    /// Sequential rounding gives a first upper bound.
    fn greedy(&mut self) {
        let mut q = Rational::new();
        for k in (0..self.m.len()).rev() {
            let c = self.level_center(k);
            let r = round_half_up(&c);
            let d = Rational::from(&r - &c);
            q += Rational::from(&d * &d) * &self.pivots[k];
            self.fix(k, r);
        }
        self.best = Some(q);
    }

    fn descend(&mut self, level: usize, partial: Rational) {
        if level == 0 {
            let best = self.best.as_ref().unwrap();
            if partial < *best {
                self.best = Some(partial);
                self.found.clear();
            }
            self.found.push(self.m.clone());
            return;
        }
        let k = level - 1;
        let c = self.level_center(k);
        let start = round_half_up(&c);
        for dir in [1i32, -1] {
            let mut v = if dir == 1 {
                start.clone()
            } else {
                Integer::from(&start - 1)
            };
            loop {
                let d = Rational::from(&v - &c);
                let q = Rational::from(&d * &d) * &self.pivots[k] + &partial;
                if q > *self.best.as_ref().unwrap() {
                    break;
                }
                self.fix(k, v.clone());
                self.descend(k, q);
                v += dir;
            }
        }
    }
}

/// `Θ(z; B)` and its lexicographically smallest minimizer.
pub fn theta(z: &RatVector, b: &RatMatrix) -> Result<(Rational, Vec<Integer>)> {
    let v = ThetaEvaluator::new(b)?.eval(z)?;
    Ok((v.value, v.argmin))
}

fn second_difference(a: &Rational, b: &Rational, c: &Rational, d: &Rational, n: i64, t: i64) -> Result<u8> {
    // a = (n, t), b = (n+1, t+1), c = (n, t+1), d = (n+1, t)
    let u = Rational::from(a + b) - c - d;
    if u == 0 {
        Ok(0)
    } else if u == 1 {
        Ok(1)
    } else {
        Err(Error::SolutionMismatch {
            n,
            t,
            value: u.to_string(),
        })
    }
}

/// Data of the periodic solution `Θ_n^t = Θ(μn + ωt + c₀; B)`.
#[derive(Clone, Debug)]
pub struct ThetaContext {
    size: i64,
    evaluator: ThetaEvaluator,
    mu: RatVector,
    omega: RatVector,
    c0: RatVector,
}

impl ThetaContext {
    pub fn new(size: i64, b: &RatMatrix, mu: RatVector, omega: RatVector, c0: RatVector) -> Result<Self> {
        let g = b.dim();
        for v in [&mu, &omega, &c0] {
            if v.len() != g {
                return Err(Error::DimensionMismatch {
                    expected: g,
                    found: v.len(),
                });
            }
        }
        Ok(ThetaContext {
            size,
            evaluator: ThetaEvaluator::new(b)?,
            mu,
            omega,
            c0,
        })
    }

    /// Context on the curve with the given `c₀`; genus zero gives the empty context.
    pub fn from_curve(curve: &CurveModel, c0: RatVector) -> Result<Self> {
        let b = if curve.genus() == 0 {
            RatMatrix::zeros(0)
        } else {
            curve.period_matrix()?
        };
        let (mu, omega) = curve.mu_omega();
        ThetaContext::new(curve.size(), &b, mu, omega, c0)
    }

    pub fn with_c0(&self, c0: RatVector) -> Result<Self> {
        ThetaContext::new(self.size, self.b(), self.mu.clone(), self.omega.clone(), c0)
    }

    pub fn genus(&self) -> usize {
        self.mu.len()
    }

    pub fn size(&self) -> i64 {
        self.size
    }

    pub fn b(&self) -> &RatMatrix {
        self.evaluator.matrix()
    }

    pub fn mu(&self) -> &RatVector {
        &self.mu
    }

    pub fn omega(&self) -> &RatVector {
        &self.omega
    }

    pub fn c0(&self) -> &RatVector {
        &self.c0
    }

    /// `μn + ωt + c₀`.
    pub fn argument(&self, n: i64, t: i64) -> RatVector {
        self.c0
            .add_scaled(&Rational::from(n), &self.mu)
            .add_scaled(&Rational::from(t), &self.omega)
    }

    pub fn theta_solution(&self, n: i64, t: i64) -> Result<Rational> {
        self.evaluator.value(&self.argument(n, t))
    }

    /// `U_n^t = Θ_n^t + Θ_{n+1}^{t+1} − Θ_n^{t+1} − Θ_{n+1}^t`.
    pub fn u_from_theta(&self, n: i64, t: i64) -> Result<u8> {
        let th = |dn, dt| self.theta_solution(n + dn, t + dt);
        second_difference(&th(0, 0)?, &th(1, 1)?, &th(0, 1)?, &th(1, 0)?, n, t)
    }

    /// Rows `t = t0..=t1` of `U` over `n ∈ [n0, n1)`.
    pub fn trajectory(&self, n0: i64, n1: i64, t0: i64, t1: i64) -> Result<Vec<Vec<u8>>> {
        grid_trajectory(n0, n1, t0, t1, |n, t| self.theta_solution(n, t))
    }

    /// `S = B − L·I` and `c = c₀ − (L/2)·(1, …, 1)`.
    pub fn limit(&self) -> Result<LimitContext> {
        let g = self.genus();
        let l = Rational::from(self.size);
        let s = self.b().sub(&RatMatrix::identity(g).scaled(&l));
        let c = self.c0.sub(&RatVector::filled(g, l / 2));
        LimitContext::new(s, self.mu.clone(), self.omega.clone(), c)
    }
}

/// Data of `T_n^t = min_{r ∈ {0,1}^g} ½⟨r, Sr⟩ − ⟨r, μn + ωt + c⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LimitContext {
    s: RatMatrix,
    mu: RatVector,
    omega: RatVector,
    c: RatVector,
    /// `½⟨r, Sr⟩` for every `r`, indexed by bit mask.
    offsets: Vec<Rational>,
}

impl LimitContext {
    pub fn new(s: RatMatrix, mu: RatVector, omega: RatVector, c: RatVector) -> Result<Self> {
        let g = s.dim();
        if g > MAX_LIMIT_GENUS {
            return Err(Error::GenusTooLarge(g));
        }
        for v in [&mu, &omega, &c] {
            if v.len() != g {
                return Err(Error::DimensionMismatch {
                    expected: g,
                    found: v.len(),
                });
            }
        }
        let offsets = (0..1usize << g)
            .map(|mask| {
                let r = bits(mask, g);
                s.quad_form_int(&r) / 2
            })
            .collect();
        Ok(LimitContext {
            s,
            mu,
            omega,
            c,
            offsets,
        })
    }

    pub fn genus(&self) -> usize {
        self.s.dim()
    }

    pub fn s(&self) -> &RatMatrix {
        &self.s
    }

    pub fn mu(&self) -> &RatVector {
        &self.mu
    }

    pub fn omega(&self) -> &RatVector {
        &self.omega
    }

    pub fn c(&self) -> &RatVector {
        &self.c
    }

    /// The affine forms `½⟨r, Sr⟩ − ⟨r, μn + ωt + c⟩` as `(n, t, constant)`
    /// coefficients, indexed by bit mask.
    pub fn terms(&self) -> Vec<(Rational, Rational, Rational)> {
        let g = self.genus();
        (0..self.offsets.len())
            .map(|mask| {
                let r = bits(mask, g);
                (
                    -self.mu.dot_int(&r),
                    -self.omega.dot_int(&r),
                    (&self.offsets[mask] - self.c.dot_int(&r)),
                )
            })
            .collect()
    }

    pub fn limit_tau(&self, n: i64, t: i64) -> Rational {
        let g = self.genus();
        let z = self
            .c
            .add_scaled(&Rational::from(n), &self.mu)
            .add_scaled(&Rational::from(t), &self.omega);
        // Entries of z once per mask via the lowest set bit.
        let mut sums = vec![Rational::new(); self.offsets.len()];
        let mut best = Rational::new();
        for mask in 1..self.offsets.len() {
            let low = mask.trailing_zeros() as usize;
            debug_assert!(low < g);
            sums[mask] = Rational::from(&sums[mask & (mask - 1)] + &z[low]);
            let v = Rational::from(&self.offsets[mask] - &sums[mask]);
            if v < best {
                best = v;
            }
        }
        best
    }

    pub fn u_from_tau(&self, n: i64, t: i64) -> Result<u8> {
        let ta = |dn, dt| self.limit_tau(n + dn, t + dt);
        second_difference(&ta(0, 0), &ta(1, 1), &ta(0, 1), &ta(1, 0), n, t)
    }

    pub fn trajectory(&self, n0: i64, n1: i64, t0: i64, t1: i64) -> Result<Vec<Vec<u8>>> {
        grid_trajectory(n0, n1, t0, t1, |n, t| Ok(self.limit_tau(n, t)))
    }
}

fn bits(mask: usize, g: usize) -> Vec<Integer> {
    (0..g).map(|i| Integer::from((mask >> i) & 1)).collect()
}

/// Evaluates the potential once per grid node and takes second differences.
fn grid_trajectory(
    n0: i64,
    n1: i64,
    t0: i64,
    t1: i64,
    mut potential: impl FnMut(i64, i64) -> Result<Rational>,
) -> Result<Vec<Vec<u8>>> {
    let width = (n1 - n0).max(0) as usize;
    let mut prev: Vec<Rational> = (n0..=n1).map(|n| potential(n, t0)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for t in t0..=t1 {
        let next: Vec<Rational> = (n0..=n1).map(|n| potential(n, t + 1)).collect::<Result<_>>()?;
        let row = (0..width)
            .map(|i| second_difference(&prev[i], &next[i + 1], &next[i], &prev[i + 1], n0 + i as i64, t))
            .collect::<Result<Vec<u8>>>()?;
        rows.push(row);
        prev = next;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b_example() -> RatMatrix {
        RatMatrix::from_ints(&[&[8, 2], &[2, 8]])
    }

    fn example() -> ThetaContext {
        ThetaContext::new(
            10,
            &b_example(),
            RatVector::from_ints(&[1, 1]),
            RatVector::from_ints(&[-1, -2]),
            RatVector::from_ints(&[0, 3]),
        )
        .unwrap()
    }

    fn ints(v: &[i64]) -> Vec<Integer> {
        v.iter().map(|&x| Integer::from(x)).collect()
    }

    fn brute(z: &RatVector, b: &RatMatrix, r: i64) -> Rational {
        let g = z.len();
        let mut best: Option<Rational> = None;
        let total = (2 * r + 1).pow(g as u32);
        for code in 0..total {
            let mut c = code;
            let m: Vec<Integer> = (0..g)
                .map(|_| {
                    let v = c % (2 * r + 1) - r;
                    c /= 2 * r + 1;
                    Integer::from(v)
                })
                .collect();
            let v = (b.quad_form_int(&m) / 2) + z.dot_int(&m);
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
        best.unwrap()
    }

    #[test]
    fn theta_at_origin_and_c0() {
        assert_eq!(
            theta(&RatVector::from_ints(&[0, 0]), &b_example()).unwrap(),
            (Rational::new(), ints(&[0, 0]))
        );
        assert_eq!(
            theta(&RatVector::from_ints(&[0, 3]), &b_example()).unwrap(),
            (Rational::new(), ints(&[0, 0]))
        );
    }

    #[test]
    fn theta_matches_brute_force() {
        let b = RatMatrix::from_ints(&[&[9, 2, 2], &[2, 7, 2], &[2, 2, 5]]);
        for z in [[13, -4, 7], [-20, 11, 3], [1, 1, 1], [0, 25, -9]] {
            let z = RatVector::from_ints(&z);
            assert_eq!(theta(&z, &b).unwrap().0, brute(&z, &b, 6));
        }
        let z = RatVector(vec![
            Rational::from((7, 3)),
            Rational::from((-11, 2)),
            Rational::from((5, 4)),
        ]);
        assert_eq!(theta(&z, &b).unwrap().0, brute(&z, &b, 6));
    }

    #[test]
    fn ties_report_all_minimizers() {
        let ev = ThetaEvaluator::new(&RatMatrix::from_ints(&[&[4]])).unwrap();
        let v = ev.eval(&RatVector::from_ints(&[2])).unwrap();
        assert_eq!(v.value, 0);
        assert_eq!(v.minimizers, vec![ints(&[-1]), ints(&[0])]);
        assert_eq!(v.argmin, ints(&[-1]));
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let b = RatMatrix::from_ints(&[&[1, 2], &[2, 1]]);
        assert!(matches!(
            theta(&RatVector::from_ints(&[0, 0]), &b),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn genus_zero() {
        let ctx = ThetaContext::new(
            5,
            &RatMatrix::zeros(0),
            RatVector::zeros(0),
            RatVector::zeros(0),
            RatVector::zeros(0),
        )
        .unwrap();
        assert_eq!(ctx.theta_solution(3, 4).unwrap(), 0);
        assert_eq!(ctx.u_from_theta(3, 4).unwrap(), 0);
        let lim = ctx.limit().unwrap();
        assert_eq!(lim.limit_tau(-7, 2), 0);
        assert_eq!(lim.u_from_tau(1, 1).unwrap(), 0);
    }

    #[test]
    fn worked_example_rows() {
        let rows = example().trajectory(0, 10, 0, 2).unwrap();
        let render = |r: &Vec<u8>| r.iter().map(|&u| if u == 1 { '1' } else { '.' }).collect::<String>();
        assert_eq!(render(&rows[0]), ".11...1...");
        assert_eq!(render(&rows[1]), "...11..1..");
        assert_eq!(example().u_from_theta(1, 0).unwrap(), 1);
    }

    #[test]
    fn limit_data_of_worked_example() {
        let lim = example().limit().unwrap();
        assert_eq!(lim.s(), &RatMatrix::from_ints(&[&[-2, 2], &[2, -2]]));
        assert_eq!(lim.c(), &RatVector::from_ints(&[-5, -2]));
        let render = |r: &Vec<u8>| r.iter().map(|&u| if u == 1 { '1' } else { '.' }).collect::<String>();
        assert_eq!(render(&lim.trajectory(-3, 10, 0, 0).unwrap()[0]), "....11...1...");
    }

    #[test]
    fn single_soliton_kink() {
        let lim = LimitContext::new(
            RatMatrix::from_ints(&[&[0]]),
            RatVector::from_ints(&[1]),
            RatVector::from_ints(&[-3]),
            RatVector::from_ints(&[0]),
        )
        .unwrap();
        for (n, t) in [(0, 0), (5, 1), (-4, 2), (9, 3)] {
            assert_eq!(lim.limit_tau(n, t), Rational::from((-(n - 3 * t)).min(0)));
        }
        let row: Vec<u8> = lim.trajectory(-2, 8, 1, 1).unwrap().remove(0);
        assert_eq!(row, vec![0, 0, 0, 0, 0, 1, 1, 1, 0, 0]);
    }

    #[test]
    fn mismatch_is_reported() {
        let ctx = example()
            .with_c0(RatVector(vec![Rational::from((1, 2)), Rational::from(3)]))
            .unwrap();
        let all: Result<Vec<u8>> = (0..10).map(|n| ctx.u_from_theta(n, 0)).collect();
        assert!(matches!(all, Err(Error::SolutionMismatch { .. })));
    }
}
