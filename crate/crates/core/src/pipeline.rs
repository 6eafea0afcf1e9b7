//! From a periodic state to its theta-function solution: soliton content,
//! curve, divisor points, `c₀`, and the comparisons against the automaton.

use std::cmp::Ordering;

use rug::Rational;

use crate::automata::{append_vacuum, bbs_step, pbbs_step, soliton_content, BbsState, PbbsState};
use crate::curve::{CurveModel, CurvePoint, Segment};
use crate::error::{Error, Result};
use crate::exact::{exact_cholesky, reduce_centered, ExtRational, RatVector};
use crate::puiseux::PuiseuxConfig;
use crate::spectral::{build_matrix, positive_divisor_points, DivisorPoint};
use crate::theta::{LimitContext, ThetaContext};

/// A divisor point together with its place on the curve and its image.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacedPoint {
    pub point: DivisorPoint,
    pub location: CurvePoint,
    /// Displacement along the `θ` copy, nonzero only on shared edges.
    pub shift: Rational,
    pub image: RatVector,
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub state: PbbsState,
    pub curve: CurveModel,
    pub points: Vec<PlacedPoint>,
    pub kappa: RatVector,
    /// `κ − Σ 𝒜₀(P_k)`, unreduced.
    pub c0: RatVector,
}

impl Analysis {
    /// Representative of `c₀` modulo `Bℤ^g` with centered `B`-coordinates.
    pub fn c0_reduced(&self) -> Result<RatVector> {
        let b = self.curve.period_matrix()?;
        let factor = exact_cholesky(&b)?;
        Ok(reduce_centered(&self.c0, &b, &factor).0)
    }

    pub fn theta_context(&self) -> Result<ThetaContext> {
        ThetaContext::from_curve(&self.curve, self.c0.clone())
    }

    pub fn limit_context(&self) -> Result<LimitContext> {
        self.theta_context()?.limit()
    }
}

pub fn analyze_state(state: &PbbsState, cfg: &PuiseuxConfig) -> Result<Analysis> {
    let solitons = soliton_content(state)?;
    let curve = CurveModel::new(&solitons, state.size())?;
    let points = if curve.genus() == 0 {
        Vec::new()
    } else {
        let m = build_matrix(state.cells());
        let mut cfg = cfg.clone();
        let (single, blocks) = loop {
            let placed = positive_divisor_points(&m, &cfg).and_then(|raw| split_blocks(&raw, &curve, &cfg));
            match placed {
                Err(Error::IncreaseDepth { .. }) if cfg.depth * 2 <= cfg.max_depth => cfg.depth *= 2,
                Err(Error::Precision(_)) if cfg.precision * 2 <= cfg.max_precision => cfg.precision *= 2,
                other => break other?,
            }
        };
        resolve_blocks(single, &blocks, &curve, state)?
    };
    let kappa = curve.riemann_constant();
    let c0 = compute_c0(&points, &curve);
    Ok(Analysis {
        state: state.clone(),
        curve,
        points,
        kappa,
        c0,
    })
}

/// Locates every point. Points inside an edge shared by several
/// equal-length solitons are dealt round the `θ` copies in order of
/// decreasing position, and every pair landing on different copies is pushed
/// apart by the order at which their roots `y*` separate, counted from the
/// height of the edge.
pub fn place_points(points: &[DivisorPoint], curve: &CurveModel, cfg: &PuiseuxConfig) -> Result<Vec<PlacedPoint>> {
    let (mut out, blocks) = split_blocks(points, curve, cfg)?;
    for block in &blocks {
        out.extend(block.place(&block.preferred(), curve));
    }
    Ok(out)
}

/// Points on an edge shared by `slots` coincident `θ` copies.
#[derive(Clone, Debug)]
struct Block {
    members: Vec<(DivisorPoint, Vec<CurvePoint>)>,
    /// `val(y*_a − y*_b)` above the height of the edge.
    gaps: Vec<Vec<Rational>>,
    pos: Vec<Rational>,
    slots: usize,
}

fn split_blocks(
    points: &[DivisorPoint],
    curve: &CurveModel,
    cfg: &PuiseuxConfig,
) -> Result<(Vec<PlacedPoint>, Vec<Block>)> {
    let mut out = Vec::with_capacity(points.len());
    let mut grouped: Vec<(Rational, Vec<(DivisorPoint, Vec<CurvePoint>)>)> = Vec::new();
    for p in points {
        let candidates = curve.locate(&p.x, &p.y)?;
        let copies: Vec<CurvePoint> = candidates
            .iter()
            .filter(|c| matches!(c.segment, Segment::Theta(_)))
            .cloned()
            .collect();
        if copies.len() > 1 {
            match grouped.iter_mut().find(|(y, _)| *y == p.y) {
                Some((_, members)) => members.push((p.clone(), copies)),
                None => grouped.push((p.y.clone(), vec![(p.clone(), copies)])),
            }
        } else {
            let location = candidates[0].clone();
            let image = curve.abel_jacobi(&location);
            out.push(PlacedPoint {
                point: p.clone(),
                location,
                shift: Rational::new(),
                image,
            });
        }
    }
    let mut blocks = Vec::with_capacity(grouped.len());
    for (y, members) in grouped {
        if members.iter().any(|(p, _)| p.multiplicity != 1) {
            return Err(Error::AmbiguousEdge(y.to_string()));
        }
        let k = members.len();
        let mut gaps = vec![vec![Rational::new(); k]; k];
        for a in 0..k {
            for b in a + 1..k {
                let gap = match members[a].0.series.add(&members[b].0.series.neg(), cfg).valuation()? {
                    ExtRational::Finite(v) => v - &y,
                    ExtRational::Infinity => return Err(Error::AmbiguousEdge(y.to_string())),
                };
                gaps[a][b] = gap.clone();
                gaps[b][a] = gap;
            }
        }
        let slots = members[0].1.len();
        let pos = members.iter().map(|m| m.1[0].t.clone()).collect();
        blocks.push(Block {
            members,
            gaps,
            pos,
            slots,
        });
    }
    Ok((out, blocks))
}

/// Cap on the placements tried before giving up on matching the state.
const MAX_PLACEMENT_TRIALS: usize = 4096;

/// Places the block points by the preferred dealing order. When the
/// resulting `c₀` does not reproduce the state at `t = 0`, other dealing
/// orders are tried until one does.
fn resolve_blocks(
    single: Vec<PlacedPoint>,
    blocks: &[Block],
    curve: &CurveModel,
    state: &PbbsState,
) -> Result<Vec<PlacedPoint>> {
    let assemble = |choice: &[&[usize]]| {
        let mut points = single.clone();
        for (block, order) in blocks.iter().zip(choice) {
            points.extend(block.place(order, curve));
        }
        points
    };
    let preferred: Vec<Vec<usize>> = blocks.iter().map(Block::preferred).collect();
    let first = assemble(&preferred.iter().map(Vec::as_slice).collect::<Vec<_>>());
    if blocks.is_empty() || reproduces(&first, curve, state)? {
        return Ok(first);
    }
    let options: Vec<Vec<Vec<usize>>> = blocks.iter().map(Block::alternatives).collect();
    let mut index = vec![0; blocks.len()];
    for _ in 0..MAX_PLACEMENT_TRIALS {
        let Some(i) = index.iter().zip(&options).position(|(&j, o)| j + 1 < o.len()) else {
            break;
        };
        index[i] += 1;
        index[..i].iter_mut().for_each(|j| *j = 0);
        let choice: Vec<&[usize]> = index.iter().zip(&options).map(|(&j, o)| o[j].as_slice()).collect();
        let points = assemble(&choice);
        if reproduces(&points, curve, state)? {
            return Ok(points);
        }
    }
    Ok(first)
}

/// Whether the theta solution built from `points` gives `state` at `t = 0`.
fn reproduces(points: &[PlacedPoint], curve: &CurveModel, state: &PbbsState) -> Result<bool> {
    let ctx = ThetaContext::from_curve(curve, compute_c0(points, curve))?;
    let l = state.size() as i64;
    match ctx.trajectory(0, l, 0, 0) {
        Ok(rows) => Ok((0..l).all(|n| rows[0][n as usize] == u8::from(state.get(n)))),
        Err(Error::SolutionMismatch { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

impl Block {
    fn place(&self, order: &[usize], curve: &CurveModel) -> Vec<PlacedPoint> {
        let shifts = order_shifts(order, &self.gaps, self.slots);
        order
            .iter()
            .enumerate()
            .map(|(r, &a)| {
                let (point, copies) = &self.members[a];
                let location = copies[r % self.slots].clone();
                let Segment::Theta(i) = location.segment else {
                    unreachable!()
                };
                let mut image = curve.abel_jacobi(&location);
                image.0[i] += &shifts[a];
                PlacedPoint {
                    point: point.clone(),
                    location,
                    shift: shifts[a].clone(),
                    image,
                }
            })
            .collect()
    }

    fn score(&self, order: &[usize]) -> (Vec<Rational>, Rational) {
        let shifts = order_shifts(order, &self.gaps, self.slots);
        let totals = copy_totals(order, &self.pos, &shifts, self.slots);
        let spread = totals
            .iter()
            .fold(Rational::new(), |acc, t| acc + Rational::from(t * t));
        (totals, spread)
    }

    /// Whether `order` keeps every point ahead of those further back, except
    /// that a block fitting on its copies may swap points closer than their gap.
    fn allowed(&self, order: &[usize]) -> bool {
        let loose = order.len() <= self.slots;
        order.iter().enumerate().all(|(r, &a)| {
            order[r + 1..].iter().all(|&b| {
                self.pos[a] >= self.pos[b] || (loose && Rational::from(&self.pos[b] - &self.pos[a]) <= self.gaps[a][b])
            })
        })
    }

    /// Order by decreasing position. Among the allowed reorderings the one
    /// spreading the copy totals furthest apart (largest sum of squares) wins;
    /// past `MAX_SEARCHED_BLOCK` points ties go by how far the others push them.
    fn preferred(&self) -> Vec<usize> {
        let k = self.pos.len();
        let push: Vec<Rational> = (0..k)
            .map(|a| {
                (0..k).fold(Rational::new(), |acc, b| match self.pos[a].cmp(&self.pos[b]) {
                    Ordering::Greater => acc + &self.gaps[a][b],
                    Ordering::Less => acc - &self.gaps[a][b],
                    Ordering::Equal => acc,
                })
            })
            .collect();
        let mut best: Vec<usize> = (0..k).collect();
        best.sort_by(|&a, &b| self.pos[b].cmp(&self.pos[a]).then_with(|| push[b].cmp(&push[a])));
        if k <= MAX_SEARCHED_BLOCK {
            let mut best_spread = self.score(&best).1;
            for perm in permutations(k) {
                if self.allowed(&perm) {
                    let spread = self.score(&perm).1;
                    if spread > best_spread {
                        best_spread = spread;
                        best = perm;
                    }
                }
            }
        }
        best
    }

    /// The preferred order followed by one order for every other assignment
    /// of copy totals.
    fn alternatives(&self) -> Vec<Vec<usize>> {
        let preferred = self.preferred();
        let mut seen = vec![self.score(&preferred).0];
        let mut out = vec![preferred];
        if self.pos.len() <= MAX_SEARCHED_BLOCK {
            for perm in permutations(self.pos.len()) {
                let totals = self.score(&perm).0;
                if !seen.contains(&totals) {
                    seen.push(totals);
                    out.push(perm);
                }
            }
        }
        out
    }
}

/// Per-point shifts for the points taken in `order`, dealt round `slots`
/// copies: each pair on different copies moves apart by its gap, the earlier
/// point forward.
fn order_shifts(order: &[usize], gaps: &[Vec<Rational>], slots: usize) -> Vec<Rational> {
    let mut shifts = vec![Rational::new(); order.len()];
    for (ra, &a) in order.iter().enumerate() {
        for (rb, &b) in order.iter().enumerate().skip(ra + 1) {
            if ra % slots != rb % slots {
                shifts[a] += &gaps[a][b];
                shifts[b] -= &gaps[a][b];
            }
        }
    }
    shifts
}

/// Copy totals `Σ (pos + shift)` for each copy.
fn copy_totals(order: &[usize], pos: &[Rational], shifts: &[Rational], slots: usize) -> Vec<Rational> {
    let mut totals = vec![Rational::new(); slots];
    for (r, &a) in order.iter().enumerate() {
        totals[r % slots] += Rational::from(&pos[a] + &shifts[a]);
    }
    totals
}

/// Largest block whose orderings are searched exhaustively.
const MAX_SEARCHED_BLOCK: usize = 8;

/// All permutations of `0..k` in lexicographic order.
fn permutations(k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = Some((0..k).collect::<Vec<usize>>());
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut p = current.clone();
        if let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) {
            let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
            p.swap(i - 1, j);
            p[i..].reverse();
            next = Some(p);
        }
        Some(current)
    })
}

/// `c₀ = κ − Σ_k 𝒜₀(P_k)`, counting multiplicity.
pub fn compute_c0(points: &[PlacedPoint], curve: &CurveModel) -> RatVector {
    points.iter().fold(curve.riemann_constant(), |acc, p| {
        acc.add_scaled(&Rational::from(-(p.point.multiplicity as i64)), &p.image)
    })
}

/// First cell `(n, t)` where the theta solution and the automaton differ,
/// comparing rows `t = 0..=steps` over one period.
pub fn verify_periodic(ctx: &ThetaContext, state: &PbbsState, steps: usize) -> Result<Option<(i64, i64)>> {
    let l = state.size() as i64;
    let rows = ctx.trajectory(0, l, 0, steps as i64)?;
    let mut current = state.clone();
    for (t, row) in rows.iter().enumerate() {
        if let Some(n) = (0..l).find(|&n| row[n as usize] != u8::from(current.get(n))) {
            return Ok(Some((n, t as i64)));
        }
        current = pbbs_step(&current)?;
    }
    Ok(None)
}

/// Rows `t = 0..=steps` of the limit solution over `[n0, n1)`.
pub fn limit_rows(lim: &LimitContext, n0: i64, n1: i64, steps: usize) -> Result<Vec<BbsState>> {
    let rows = lim.trajectory(n0, n1, 0, steps as i64)?;
    Ok(rows
        .into_iter()
        .map(|r| BbsState::new(n0, r.into_iter().map(|u| u == 1).collect()))
        .collect())
}

/// First cell where the limit solution breaks the non-periodic evolution,
/// or where balls reach the edge of the window.
pub fn verify_limit(lim: &LimitContext, n0: i64, n1: i64, steps: usize) -> Result<Option<(i64, i64)>> {
    let rows = limit_rows(lim, n0, n1, steps)?;
    for (t, row) in rows.iter().enumerate() {
        if row.get(n0) || row.get(n1 - 1) {
            let n = if row.get(n0) { n0 } else { n1 - 1 };
            return Ok(Some((n, t as i64)));
        }
        if let Some(next) = rows.get(t + 1) {
            let stepped = bbs_step(row);
            if let Some(n) = (n0..n1).find(|&n| stepped.get(n) != next.get(n)) {
                return Ok(Some((n, t as i64 + 1)));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityRow {
    pub m: usize,
    /// `Σ_k 𝒜₀(P_k[M])` for the state padded with `M` empty boxes.
    pub sum: RatVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    /// Smallest `m₀` with the sum constant for `M = m₀+1 ..= m₀+window`.
    pub m0: Option<usize>,
    pub window: usize,
}

/// Abel–Jacobi sums of the divisor of `𝒳[M]` for `M` in `ms`.
pub fn stability_scan(
    state: &PbbsState,
    ms: std::ops::RangeInclusive<usize>,
    window: usize,
    cfg: &PuiseuxConfig,
) -> Result<StabilityReport> {
    let mut rows = Vec::new();
    for m in ms {
        let a = analyze_state(&append_vacuum(state, m), cfg)?;
        let sum = a.kappa.sub(&a.c0);
        rows.push(StabilityRow { m, sum });
    }
    let m0 = detect_m0(&rows, window);
    Ok(StabilityReport { rows, m0, window })
}

fn detect_m0(rows: &[StabilityRow], window: usize) -> Option<usize> {
    let window = window.max(1);
    rows.windows(window)
        .filter(|w| w[0].m > 0)
        .find(|w| w.iter().all(|r| r.sum == w[0].sum) && w.windows(2).all(|p| p[1].m == p[0].m + 1))
        .map(|w| w[0].m - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::RatMatrix;

    fn analysis(s: &str) -> Analysis {
        analyze_state(&s.parse().unwrap(), &PuiseuxConfig::default()).unwrap()
    }

    #[test]
    fn worked_example() {
        let a = analysis(".11...1...");
        assert_eq!(a.curve.solitons(), &[1, 2]);
        let xy: Vec<(Rational, Rational)> = a
            .points
            .iter()
            .map(|p| (p.point.x.clone(), p.point.y.clone()))
            .collect();
        let mut xy = xy;
        xy.sort();
        assert_eq!(
            xy,
            vec![
                (Rational::from(2), Rational::from(1)),
                (Rational::from(5), Rational::from(1))
            ]
        );
        let mut images: Vec<RatVector> = a.points.iter().map(|p| p.image.clone()).collect();
        images.sort_by(|u, v| u.0.cmp(&v.0));
        assert_eq!(
            images,
            vec![RatVector::from_ints(&[1, 1]), RatVector::from_ints(&[4, 1])]
        );
        assert_eq!(a.c0, RatVector::from_ints(&[0, 3]));
        assert_eq!(a.c0_reduced().unwrap(), RatVector::from_ints(&[0, 3]));
        let ctx = a.theta_context().unwrap();
        assert_eq!(ctx.b(), &RatMatrix::from_ints(&[&[8, 2], &[2, 8]]));
        assert_eq!(verify_periodic(&ctx, &a.state, 30).unwrap(), None);
        assert_eq!(verify_limit(&a.limit_context().unwrap(), -20, 100, 30).unwrap(), None);
    }

    #[test]
    fn empty_state_has_genus_zero() {
        let a = analysis("......");
        assert_eq!(a.curve.genus(), 0);
        assert!(a.points.is_empty());
        assert_eq!(verify_periodic(&a.theta_context().unwrap(), &a.state, 5).unwrap(), None);
    }

    #[test]
    fn single_ball() {
        let a = analysis("1...");
        assert_eq!(a.curve.period_matrix().unwrap(), RatMatrix::from_ints(&[&[4]]));
        assert_eq!(verify_periodic(&a.theta_context().unwrap(), &a.state, 8).unwrap(), None);
    }

    #[test]
    fn equal_solitons() {
        for s in ["11..11......", "1.1.1.......", "1.11..111.....1..11.........1.."] {
            let a = analysis(s);
            assert_eq!(
                verify_periodic(&a.theta_context().unwrap(), &a.state, 20).unwrap(),
                None,
                "{s}"
            );
        }
    }

    #[test]
    fn m0_detection() {
        let row = |m, v| StabilityRow {
            m,
            sum: RatVector::from_ints(&[v]),
        };
        let rows = vec![row(1, 3), row(2, 4), row(3, 4), row(4, 4)];
        assert_eq!(detect_m0(&rows, 3), Some(1));
        assert_eq!(detect_m0(&rows, 4), None);
    }
}
