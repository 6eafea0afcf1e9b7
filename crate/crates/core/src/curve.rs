//! The tropical spectral curve of a periodic state with soliton content
//! `S_1 ≤ … ≤ S_g` and size `L`, as an explicit metric graph: the two chains
//! `γ⁺`, `γ⁻` from the base point `O`, one horizontal edge `θ_i` per soliton,
//! and four rays `σ_1 … σ_4`.
//!
//! Also computes the corner locus of a bivariate tropical polynomial
//! directly, so the graph can be checked against the characteristic
//! polynomial it is meant to describe.

use std::collections::BTreeSet;
use std::fmt;

use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::exact::{RatMatrix, RatVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    GammaPlus,
    GammaMinus,
    Theta(usize),
    /// Rays `σ_1 … σ_4`, numbered from 1.
    Sigma(u8),
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::GammaPlus => write!(f, "gamma+"),
            Segment::GammaMinus => write!(f, "gamma-"),
            Segment::Theta(i) => write!(f, "theta{}", i + 1),
            Segment::Sigma(k) => write!(f, "sigma{k}"),
        }
    }
}

/// A point of the curve given by segment and parameter.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CurvePoint {
    pub segment: Segment,
    pub t: Rational,
}

impl CurvePoint {
    pub fn new(segment: Segment, t: Rational) -> Self {
        CurvePoint { segment, t }
    }
}

impl fmt::Display for CurvePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.segment, self.t)
    }
}

/// A straight run along one segment, from parameter `from` to `to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathPiece {
    pub segment: Segment,
    pub from: Rational,
    pub to: Rational,
}

pub type Path = Vec<PathPiece>;

fn piece(segment: Segment, from: impl Into<Rational>, to: impl Into<Rational>) -> PathPiece {
    PathPiece {
        segment,
        from: from.into(),
        to: to.into(),
    }
}

pub fn reverse_path(path: &Path) -> Path {
    path.iter()
        .rev()
        .map(|p| PathPiece {
            segment: p.segment,
            from: p.to.clone(),
            to: p.from.clone(),
        })
        .collect()
}

pub type PlanePoint = (Rational, Rational);

/// A bounded edge (`to` set, `from < to`) or a ray from `from`, with its
/// primitive direction and weight.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaneEdge {
    pub from: PlanePoint,
    pub to: Option<PlanePoint>,
    pub direction: (i64, i64),
    pub weight: i64,
}

/// A weighted rectilinear graph in the `(X, Y)` plane.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlaneGraph {
    pub vertices: BTreeSet<PlanePoint>,
    pub edges: BTreeSet<PlaneEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveModel {
    size: i64,
    solitons: Vec<i64>,
    interaction: Vec<i64>,
}

fn q(v: i64) -> Rational {
    Rational::from(v)
}

impl CurveModel {
    /// Requires `L > 2·A_g` so that the top edge has positive length.
    pub fn new(solitons: &[usize], size: usize) -> Result<Self> {
        let mut s: Vec<i64> = solitons.iter().map(|&x| x as i64).collect();
        s.sort_unstable();
        let interaction: Vec<i64> = s.iter().map(|&si| s.iter().map(|&sk| si.min(sk)).sum()).collect();
        let size = size as i64;
        if let Some(&top) = interaction.iter().max() {
            if size <= 2 * top {
                return Err(Error::SystemTooSmall { size, bound: 2 * top });
            }
        }
        Ok(CurveModel {
            size,
            solitons: s,
            interaction,
        })
    }

    pub fn genus(&self) -> usize {
        self.solitons.len()
    }

    pub fn size(&self) -> i64 {
        self.size
    }

    pub fn solitons(&self) -> &[i64] {
        &self.solitons
    }

    /// `A_i = Σ_k min(S_i, S_k)`.
    pub fn interaction(&self) -> &[i64] {
        &self.interaction
    }

    fn top(&self) -> i64 {
        self.solitons.last().copied().unwrap_or(0)
    }

    /// Length of `θ_i`.
    pub fn theta_length(&self, i: usize) -> i64 {
        self.size - 2 * self.interaction[i]
    }

    fn min_sum(&self, t: &Rational) -> Rational {
        self.solitons.iter().map(|&s| t.clone().min(q(s))).sum()
    }

    /// `X` coordinate of `γ⁺(t)`.
    pub fn gamma_plus_x(&self, t: &Rational) -> Rational {
        self.min_sum(t)
    }

    /// `X` coordinate of `γ⁻(t)`.
    pub fn gamma_minus_x(&self, t: &Rational) -> Rational {
        let g = self.genus() as i64;
        let low = Rational::from(t * (self.size - g));
        let high = q(self.size) - self.min_sum(t);
        low.min(high)
    }

    /// Parameter domain; `None` as upper end for rays.
    pub fn domain(&self, seg: Segment) -> (Rational, Option<Rational>) {
        match seg {
            Segment::GammaPlus | Segment::GammaMinus => (q(0), Some(q(self.top()))),
            Segment::Theta(i) => (q(0), Some(q(self.theta_length(i)))),
            Segment::Sigma(_) => (q(0), None),
        }
    }

    pub fn coordinates(&self, p: &CurvePoint) -> PlanePoint {
        let t = &p.t;
        let g = self.genus() as i64;
        match p.segment {
            Segment::GammaPlus => (self.gamma_plus_x(t), t.clone()),
            Segment::GammaMinus => (self.gamma_minus_x(t), t.clone()),
            Segment::Theta(i) => (Rational::from(t + self.interaction[i]), q(self.solitons[i])),
            Segment::Sigma(1) => (Rational::from(t * -self.size), Rational::from(t * -2)),
            Segment::Sigma(2) => (Rational::from(t + (self.size - g)), q(1)),
            Segment::Sigma(3) => (q(self.interaction[g as usize - 1]), Rational::from(t + self.top())),
            Segment::Sigma(_) => (
                q(self.size - self.interaction[g as usize - 1]),
                Rational::from(t + self.top()),
            ),
        }
    }

    /// Lattice length per unit parameter.
    fn lattice_factor(&self, seg: Segment) -> i64 {
        match seg {
            Segment::Sigma(1) => gcd(self.size, 2),
            _ => 1,
        }
    }

    /// The basis cycle `β_i`: up `γ⁺` to `θ_i`, across it, back down `γ⁻`.
    pub fn cycle(&self, i: usize) -> Path {
        let s = self.solitons[i];
        vec![
            piece(Segment::GammaPlus, 0, s),
            piece(Segment::Theta(i), 0, self.theta_length(i)),
            piece(Segment::GammaMinus, s, 0),
        ]
    }

    /// Signed lattice length of the common part of two paths.
    pub fn pairing(&self, a: &Path, b: &Path) -> Rational {
        let mut total = Rational::new();
        for pa in a {
            for pb in b.iter().filter(|pb| pb.segment == pa.segment) {
                let (lo_a, hi_a, up_a) = span(pa);
                let (lo_b, hi_b, up_b) = span(pb);
                let lo = lo_a.max(lo_b);
                let hi = hi_a.min(hi_b);
                if hi > lo {
                    let len = (hi - lo) * self.lattice_factor(pa.segment);
                    if up_a == up_b {
                        total += len;
                    } else {
                        total -= len;
                    }
                }
            }
        }
        total
    }

    /// `B_ij = (L − 2A_i)·δ_ij + 2·min(S_i, S_j)`.
    pub fn period_matrix(&self) -> Result<RatMatrix> {
        let g = self.genus();
        if g == 0 {
            return Err(Error::GenusZero);
        }
        Ok(RatMatrix::from_fn(g, |i, j| {
            let diag = if i == j { self.theta_length(i) } else { 0 };
            q(diag + 2 * self.solitons[i].min(self.solitons[j]))
        }))
    }

    /// Gram matrix of the cycle basis under the pairing.
    pub fn gram_matrix(&self) -> RatMatrix {
        let cycles: Vec<Path> = (0..self.genus()).map(|i| self.cycle(i)).collect();
        RatMatrix::from_fn(self.genus(), |i, j| self.pairing(&cycles[i], &cycles[j]))
    }

    /// `S = B − L·E = −2·diag(A) + (2·min(S_i, S_j))`.
    pub fn limit_matrix(&self) -> RatMatrix {
        RatMatrix::from_fn(self.genus(), |i, j| {
            let diag = if i == j { -2 * self.interaction[i] } else { 0 };
            q(diag + 2 * self.solitons[i].min(self.solitons[j]))
        })
    }

    /// Path from `O` inside the complement of the points `Q_i`: via `γ⁺`, or
    /// via `γ⁻` for points past the middle of a `θ` edge.
    pub fn canonical_path(&self, p: &CurvePoint) -> Path {
        let t = p.t.clone();
        match p.segment {
            Segment::GammaPlus | Segment::GammaMinus => vec![PathPiece {
                segment: p.segment,
                from: q(0),
                to: t,
            }],
            Segment::Theta(i) => {
                let s = self.solitons[i];
                if self.on_plus_side(i, &t) {
                    vec![
                        piece(Segment::GammaPlus, 0, s),
                        PathPiece {
                            segment: p.segment,
                            from: q(0),
                            to: t,
                        },
                    ]
                } else {
                    vec![
                        piece(Segment::GammaMinus, 0, s),
                        PathPiece {
                            segment: p.segment,
                            from: q(self.theta_length(i)),
                            to: t,
                        },
                    ]
                }
            }
            Segment::Sigma(k) => {
                let mut path = match k {
                    1 => vec![],
                    2 => vec![piece(Segment::GammaMinus, 0, 1)],
                    3 => vec![piece(Segment::GammaPlus, 0, self.top())],
                    _ => vec![piece(Segment::GammaMinus, 0, self.top())],
                };
                path.push(PathPiece {
                    segment: p.segment,
                    from: q(0),
                    to: t,
                });
                path
            }
        }
    }

    /// `θ_i(t)` with `t ≤ L/2 − A_i` is reached through `γ⁺`; the midpoint
    /// `Q_i` itself is taken as the limit from that side.
    fn on_plus_side(&self, i: usize, t: &Rational) -> bool {
        let half = Rational::from((self.theta_length(i), 2));
        *t <= half
    }

    /// The branch `𝒜₀` of the Abel–Jacobi map, in closed form. At a cut
    /// point `Q_i` it takes the limit from the `γ⁺` side; the two one-sided
    /// limits there differ by the `i`-th column of `B`.
    pub fn abel_jacobi(&self, p: &CurvePoint) -> RatVector {
        let g = self.genus();
        let s = &self.solitons;
        let t = &p.t;
        RatVector(
            (0..g)
                .map(|j| match p.segment {
                    Segment::GammaPlus => t.clone().min(q(s[j])),
                    Segment::GammaMinus => -(t.clone().min(q(s[j]))),
                    Segment::Theta(i) => {
                        let base = q(s[i].min(s[j]));
                        if self.on_plus_side(i, t) {
                            if i == j {
                                base + t
                            } else {
                                base
                            }
                        } else if i == j {
                            -base - (q(self.theta_length(i)) - t)
                        } else {
                            -base
                        }
                    }
                    Segment::Sigma(1) => q(0),
                    Segment::Sigma(2) => q(-1.min(s[j])),
                    Segment::Sigma(3) => q(s[j]),
                    Segment::Sigma(_) => q(-s[j]),
                })
                .collect(),
        )
    }

    /// `𝒜₀` computed as pairings of the canonical path with the cycles.
    pub fn abel_jacobi_by_pairing(&self, p: &CurvePoint) -> RatVector {
        let path = self.canonical_path(p);
        RatVector((0..self.genus()).map(|j| self.pairing(&self.cycle(j), &path)).collect())
    }

    /// `μ = (1, …, 1)` and `ω = −(S_1, …, S_g)`: minus the images of the rays
    /// `σ_2` and `σ_3`.
    pub fn mu_omega(&self) -> (RatVector, RatVector) {
        let g = self.genus();
        if g == 0 {
            return (RatVector::zeros(0), RatVector::zeros(0));
        }
        let mu = self.abel_jacobi(&CurvePoint::new(Segment::Sigma(2), q(0))).neg();
        let omega = self.abel_jacobi(&CurvePoint::new(Segment::Sigma(3), q(0))).neg();
        (mu, omega)
    }

    /// `Q_i = θ_i(L/2 − A_i)`, the zeros of the pulled-back theta function.
    pub fn zero_points(&self) -> Vec<CurvePoint> {
        (0..self.genus())
            .map(|i| CurvePoint::new(Segment::Theta(i), Rational::from((self.theta_length(i), 2))))
            .collect()
    }

    /// `κ = (L/2, …, L/2)`.
    pub fn riemann_constant(&self) -> RatVector {
        RatVector::filled(self.genus(), Rational::from((self.size, 2)))
    }

    /// Every parametrization of `(x, y)`: `γ⁺` then `γ⁻` first, then `θ`
    /// edges, then rays.
    pub fn locate(&self, x: &Rational, y: &Rational) -> Result<Vec<CurvePoint>> {
        let g = self.genus();
        let top = q(self.top());
        let mut out = Vec::new();
        if *y >= 0 && *y <= top {
            if self.gamma_plus_x(y) == *x {
                out.push(CurvePoint::new(Segment::GammaPlus, y.clone()));
            }
            if self.gamma_minus_x(y) == *x {
                out.push(CurvePoint::new(Segment::GammaMinus, y.clone()));
            }
        }
        for i in 0..g {
            let a = q(self.interaction[i]);
            if *y == self.solitons[i] && *x >= a && *x <= q(self.size) - &a {
                out.push(CurvePoint::new(Segment::Theta(i), Rational::from(x - &a)));
            }
        }
        if *y <= 0 && Rational::from(y * self.size) == Rational::from(x * 2) {
            out.push(CurvePoint::new(Segment::Sigma(1), Rational::from(-y) / 2));
        }
        if g > 0 {
            let ag = q(self.interaction[g - 1]);
            let corner = q(self.size - g as i64);
            if *y == 1 && *x >= corner {
                out.push(CurvePoint::new(Segment::Sigma(2), Rational::from(x - &corner)));
            }
            if *y >= top && *x == ag {
                out.push(CurvePoint::new(Segment::Sigma(3), Rational::from(y - &top)));
            }
            if *y >= top && *x == q(self.size) - &ag {
                out.push(CurvePoint::new(Segment::Sigma(4), Rational::from(y - &top)));
            }
        }
        if out.is_empty() {
            return Err(Error::OffCurve {
                x: x.to_string(),
                y: y.to_string(),
                distance: self.distance(x, y).to_string(),
            });
        }
        Ok(out)
    }

    /// Horizontal distance to the nearest chain or edge at height `y`
    /// (vertical distance to the curve when `y` is out of range).
    fn distance(&self, x: &Rational, y: &Rational) -> Rational {
        let top = q(self.top());
        if *y < 0 || *y > top || self.genus() == 0 {
            let clamped = y.clone().max(q(0)).min(top);
            return Rational::from(y - &clamped).abs() + self.distance(x, &clamped);
        }
        let mut best = (x - self.gamma_plus_x(y)).abs();
        best = best.min((x - self.gamma_minus_x(y)).abs());
        best
    }

    /// `Γ⁰` as a weighted plane graph, with coincident `θ` edges merged.
    pub fn plane_graph(&self) -> PlaneGraph {
        let mut graph = PlaneGraph::default();
        let g = self.genus();
        let l = self.size;
        let heights: BTreeSet<i64> = self.solitons.iter().copied().collect();
        let mut plus: Vec<i64> = vec![0];
        plus.extend(heights.iter().copied());
        let mut minus: BTreeSet<i64> = heights.clone();
        minus.insert(0);
        minus.insert(1);
        let minus: Vec<i64> = minus.into_iter().collect();
        let mut add_segment = |a: PlanePoint, b: PlanePoint, weight: i64| {
            graph.vertices.insert(a.clone());
            graph.vertices.insert(b.clone());
            graph.edges.insert(bounded_edge(a, b, weight));
        };
        for w in plus.windows(2) {
            add_segment(self.plus_point(w[0]), self.plus_point(w[1]), 1);
        }
        for w in minus.windows(2) {
            add_segment(self.minus_point(w[0]), self.minus_point(w[1]), 1);
        }
        for &h in &heights {
            let i = self.solitons.iter().position(|&s| s == h).unwrap();
            let count = self.solitons.iter().filter(|&&s| s == h).count() as i64;
            let a = q(self.interaction[i]);
            add_segment((a.clone(), q(h)), (q(l) - a, q(h)), count);
        }
        let d = gcd(l, 2);
        let top = self.top();
        let ag = self.interaction.last().copied().unwrap_or(0);
        for (from, direction, weight) in [
            ((q(0), q(0)), (-l / d, -2 / d), d),
            ((q(l - g as i64), q(1)), (1, 0), l),
            ((q(ag), q(top)), (0, 1), 1),
            // With no solitons `γ⁻` still climbs to height 1.
            ((q(l - ag), q(top.max(1))), (0, 1), 1),
        ] {
            graph.vertices.insert(from.clone());
            graph.edges.insert(PlaneEdge {
                from,
                to: None,
                direction,
                weight,
            });
        }
        graph
    }

    fn plus_point(&self, t: i64) -> PlanePoint {
        (self.gamma_plus_x(&q(t)), q(t))
    }

    fn minus_point(&self, t: i64) -> PlanePoint {
        (self.gamma_minus_x(&q(t)), q(t))
    }

    /// SVG drawing of `Γ⁰` with `X` to the right and `Y` upward.
    pub fn to_svg(&self) -> String {
        let graph = self.plane_graph();
        let scale = 40.0;
        let ray = 1.5;
        let f = |r: &Rational| r.to_f64();
        let mut segments: Vec<((f64, f64), (f64, f64), i64)> = Vec::new();
        for e in &graph.edges {
            let a = (f(&e.from.0), f(&e.from.1));
            let b = match &e.to {
                Some(t) => (f(&t.0), f(&t.1)),
                None => {
                    let (dx, dy) = (e.direction.0 as f64, e.direction.1 as f64);
                    let n = (dx * dx + dy * dy).sqrt();
                    (a.0 + ray * dx / n, a.1 + ray * dy / n)
                }
            };
            segments.push((a, b, e.weight));
        }
        let xs = segments.iter().flat_map(|s| [s.0 .0, s.1 .0]);
        let ys = segments.iter().flat_map(|s| [s.0 .1, s.1 .1]);
        let (x0, x1) = xs.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let (y0, y1) = ys.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let pad = 1.0;
        let width = (x1 - x0 + 2.0 * pad) * scale;
        let height = (y1 - y0 + 2.0 * pad) * scale;
        let px = |x: f64| (x - x0 + pad) * scale;
        let py = |y: f64| (y1 - y + pad) * scale;
        let mut out =
            format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\">\n");
        for (a, b, w) in &segments {
            out.push_str(&format!(
                "  <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\" stroke-width=\"{}\"/>\n",
                px(a.0),
                py(a.1),
                px(b.0),
                py(b.1),
                1 + w.min(&4)
            ));
        }
        for v in &graph.vertices {
            out.push_str(&format!(
                "  <circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\"/>\n",
                px(f(&v.0)),
                py(f(&v.1))
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn span(p: &PathPiece) -> (Rational, Rational, bool) {
    if p.from <= p.to {
        (p.from.clone(), p.to.clone(), true)
    } else {
        (p.to.clone(), p.from.clone(), false)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn primitive(dx: &Rational, dy: &Rational) -> (i64, i64) {
    // Clear denominators, then divide by the content.
    let den = Integer::from(dx.denom().lcm_ref(dy.denom()));
    let nx = dx.numer() * Integer::from(&den / dx.denom());
    let ny = dy.numer() * Integer::from(&den / dy.denom());
    let c = Integer::from(nx.gcd_ref(&ny));
    ((nx / &c).to_i64().unwrap(), (ny / &c).to_i64().unwrap())
}

fn bounded_edge(a: PlanePoint, b: PlanePoint, weight: i64) -> PlaneEdge {
    let (from, to) = if a <= b { (a, b) } else { (b, a) };
    let direction = primitive(&Rational::from(&to.0 - &from.0), &Rational::from(&to.1 - &from.1));
    PlaneEdge {
        from,
        to: Some(to),
        direction,
        weight,
    }
}

/// Terms of a bivariate tropical polynomial: exponent `(a, b)` and value `v`,
/// standing for `v + a·X + b·Y`.
pub type TropicalSupport = [((i64, i64), i64)];

/// The locus where the minimum of the terms is attained at least twice, as
/// vertices and weighted edges (weight = lattice length of the dual edge).
pub fn corner_locus(terms: &TropicalSupport) -> PlaneGraph {
    let terms = prune_terms(terms);
    let value = |t: &((i64, i64), i64), p: &PlanePoint| -> Rational {
        Rational::from(t.1) + Rational::from(&p.0 * t.0 .0) + Rational::from(&p.1 * t.0 .1)
    };
    let mut vertices: BTreeSet<PlanePoint> = BTreeSet::new();
    let n = terms.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let (wi, vi) = terms[i];
                let (wj, vj) = terms[j];
                let (wk, vk) = terms[k];
                let (a1, b1, c1) = (wj.0 - wi.0, wj.1 - wi.1, vi - vj);
                let (a2, b2, c2) = (wk.0 - wi.0, wk.1 - wi.1, vi - vk);
                let det = a1 * b2 - a2 * b1;
                if det == 0 {
                    continue;
                }
                let p = (
                    Rational::from((c1 * b2 - c2 * b1, det)),
                    Rational::from((a1 * c2 - a2 * c1, det)),
                );
                let here = value(&terms[i], &p);
                if terms.iter().all(|t| value(t, &p) >= here) {
                    vertices.insert(p);
                }
            }
        }
    }
    let mut graph = PlaneGraph {
        vertices: vertices.clone(),
        edges: BTreeSet::new(),
    };
    for p in &vertices {
        let min = terms.iter().map(|t| value(t, p)).min().unwrap();
        let active: Vec<(i64, i64)> = terms.iter().filter(|t| value(t, p) == min).map(|t| t.0).collect();
        let hull = convex_hull(&active);
        for idx in 0..hull.len() {
            let u = hull[idx];
            let v = hull[(idx + 1) % hull.len()];
            let (ex, ey) = (v.0 - u.0, v.1 - u.1);
            let weight = gcd(ex, ey);
            // Inward normal of a counter-clockwise edge.
            let dir = (-ey / weight, ex / weight);
            let next = vertices
                .iter()
                .filter(|w| *w != p)
                .filter_map(|w| {
                    let dx = Rational::from(&w.0 - &p.0);
                    let dy = Rational::from(&w.1 - &p.1);
                    let cross = Rational::from(&dx * dir.1) - Rational::from(&dy * dir.0);
                    let along = Rational::from(&dx * dir.0) + Rational::from(&dy * dir.1);
                    (cross == 0 && along > 0).then_some((along, w.clone()))
                })
                .min();
            let edge = match next {
                Some((_, w)) => bounded_edge(p.clone(), w, weight),
                None => PlaneEdge {
                    from: p.clone(),
                    to: None,
                    direction: dir,
                    weight,
                },
            };
            graph.edges.insert(edge);
        }
    }
    graph
}

/// Within each `x`-degree class only lower-hull vertices of `(b, v)` can
/// attain the minimum alone; collinear interior terms tie exactly where the
/// hull vertices beside them do.
fn prune_terms(terms: &TropicalSupport) -> Vec<((i64, i64), i64)> {
    let mut by_a: std::collections::BTreeMap<i64, Vec<(i64, i64)>> = Default::default();
    for &((a, b), v) in terms {
        by_a.entry(a).or_default().push((b, v));
    }
    let mut out = Vec::new();
    for (a, mut pts) in by_a {
        pts.sort_unstable();
        pts.dedup_by_key(|p| p.0);
        let mut hull: Vec<(i64, i64)> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let (o, m) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (m.0 - o.0) as i128 * (p.1 - o.1) as i128 - (m.1 - o.1) as i128 * (p.0 - o.0) as i128;
                if cross <= 0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        out.extend(hull.into_iter().map(|(b, v)| ((a, b), v)));
    }
    out
}

/// Counter-clockwise convex hull without collinear points.
fn convex_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
