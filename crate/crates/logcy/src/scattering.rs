//! Scattering diagrams on the plane of the toric model and on B: the initial
//! diagram of the blowups, its completion, path-ordered products, the
//! pullback to the canonical diagram and log wall functions.
//!
//! Plane monomials use the total class, z^{(m, C)}, so no transport is needed
//! across the fan rays. Plane truncation is by L(m, C) = λ(C) - ℓ_μ(m), where
//! ℓ_μ is a convex combination of the linear pieces of λ∘φ̄; L is positive on
//! every generator of the initial diagram and bounded above by λ of the class
//! above φ̄, so completing up to L ≤ k is exact for all terms of order ≤ k.
//! B monomials use the class above φ in the chart of their cone.

use std::sync::Arc;

use num::{One, Signed, ToPrimitive, Zero};
use serde_json::json;

use crate::curve_classes::{exceptional_class, phi_bar, phi_value_linear, CurveClass, DegreeFunctional};
use crate::error::{Error, Result};
use crate::formal::{self, FormalWall, GenSpace, Series};
use crate::lattice::{angular_cmp, primitive, wedge, LatticeVector};
use crate::rational::{floor_to_i64, fmt_q, q, qf, Q};
use crate::series_ring::{apply_wall_crossing, exp_log, ExpLog, Monomial, TruncatedElement, Truncation, WallFunction};
use crate::series_ring::transport_exponent;
use crate::tropical_pair::{Side, TropicalPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Incoming,
    Outgoing,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Incoming => "in",
            Orientation::Outgoing => "out",
        }
    }
}

/// A wall on a ray through the origin. On the plane `support` is a plane
/// vector and `cone` the plane cone containing it; on B `support` is in the
/// basis of cone `cone`. Walls on the rays of the fan use cone i and support
/// (1, 0) on B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wall {
    pub cone: usize,
    pub support: LatticeVector,
    pub orientation: Orientation,
    pub f: WallFunction,
}

impl Wall {
    pub fn on_ray(&self, side: Side, pair: &TropicalPair) -> Option<usize> {
        match side {
            Side::B => (self.support == LatticeVector::new(1, 0)).then_some(self.cone),
            Side::Bbar => (0..pair.n).find(|i| pair.rays[*i] == self.support),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScatteringDiagram {
    pub side: Side,
    pub trunc: Arc<Truncation>,
    pub walls: Vec<Wall>,
}

impl ScatteringDiagram {
    pub fn order(&self) -> &Q {
        &self.trunc.order
    }

    pub fn functional(&self) -> &DegreeFunctional {
        &self.trunc.functional
    }

    pub fn to_json(&self, pair: &TropicalPair) -> serde_json::Value {
        let walls: Vec<serde_json::Value> = self
            .walls
            .iter()
            .map(|w| {
                json!({
                    "cone": w.cone,
                    "support": [w.support.x, w.support.y],
                    "orientation": w.orientation.as_str(),
                    "f": w.f.element.to_json(pair),
                })
            })
            .collect();
        json!({
            "side": match self.side { Side::B => "B", Side::Bbar => "plane" },
            "order": fmt_q(&self.trunc.order),
            "epsilon": fmt_q(&self.trunc.functional.epsilon),
            "walls": walls,
        })
    }
}

/// Formal generator t_ij of the initial diagram: the blowup E_ij on ray i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub ray: usize,
    pub index: usize,
    pub tangent: LatticeVector,
    pub class: CurveClass,
}

pub fn generators(pair: &TropicalPair) -> Vec<Generator> {
    let mut out = Vec::new();
    for i in 0..pair.n {
        for j in 0..pair.blowups[i] {
            let mut class = phi_bar(pair, pair.rays[i]);
            class.add_scaled(&exceptional_class(pair, i, j), -1);
            out.push(Generator { ray: i, index: j, tangent: pair.rays[i], class });
        }
    }
    out
}

/// Positive linear grading on the plane used for exact truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneGrading {
    /// Weights on the plane cones.
    pub mu: Vec<Q>,
    /// Covector w with L(m, C) = λ(C) + w(m).
    pub tangent_weight: (Q, Q),
    /// L of each generator.
    pub generator_weights: Vec<Q>,
    /// Further gradings λ + w' with nonnegative generator weights, each a
    /// lower bound for the degree of the class above a wall term.
    pub extra: Vec<ExtraGrading>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtraGrading {
    pub mu: Vec<Q>,
    pub tangent_weight: (Q, Q),
    pub generator_weights: Vec<Q>,
}

impl PlaneGrading {
    pub fn min_weight(&self) -> Option<Q> {
        self.generator_weights.iter().min().cloned()
    }
}

fn psi_piece(pair: &TropicalPair, f: &DegreeFunctional, cone: usize, m: LatticeVector) -> Q {
    f.degree(&phi_value_linear(pair, cone, m))
}

/// Matrix G_{σ,g} = ψ(m_g) - ℓ_σ(m_g) with ψ = λ∘φ̄ and ℓ_σ its linear piece
/// on cone σ, restricted to the generator rays; ε is subtracted separately.
fn bending_matrix(pair: &TropicalPair, f: &DegreeFunctional, gens: &[Generator]) -> Vec<Vec<Q>> {
    (0..pair.n)
        .map(|s| {
            gens.iter()
                .map(|g| f.degree(&phi_bar(pair, g.tangent)) - psi_piece(pair, f, s, g.tangent) - f.degree(&exceptional_class(pair, g.ray, g.index)))
                .collect()
        })
        .collect()
}

fn weights_for(g: &[Vec<Q>], mu: &[Q]) -> Vec<Q> {
    let cols = g.first().map(|r| r.len()).unwrap_or(0);
    (0..cols).map(|c| mu.iter().zip(g).map(|(m, row)| m * &row[c]).sum()).collect()
}

/// Approximate maximin strategy by fictitious play, rounded to rationals.
fn fictitious_play(g: &[Vec<Q>]) -> Vec<Q> {
    let rows = g.len();
    let cols = g[0].len();
    let gf: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect()).collect();
    let mut row_counts = vec![0u64; rows];
    let mut col_payoff = vec![0f64; cols];
    let mut row_payoff = vec![0f64; rows];
    for _ in 0..4000 {
        // column player answers the empirical row mixture
        let c = (0..cols)
            .min_by(|a, b| col_payoff[*a].partial_cmp(&col_payoff[*b]).unwrap())
            .unwrap();
        for (r, p) in row_payoff.iter_mut().enumerate() {
            *p += gf[r][c];
        }
        let r = (0..rows)
            .max_by(|a, b| row_payoff[*a].partial_cmp(&row_payoff[*b]).unwrap())
            .unwrap();
        row_counts[r] += 1;
        for (cc, p) in col_payoff.iter_mut().enumerate() {
            *p += gf[r][cc];
        }
    }
    let total: u64 = row_counts.iter().sum();
    let denom = 120i64;
    let mut mu: Vec<i64> = row_counts.iter().map(|c| ((*c as f64) * denom as f64 / total as f64).round() as i64).collect();
    let s: i64 = mu.iter().sum();
    let imax = (0..rows).max_by_key(|i| mu[*i]).unwrap();
    mu[imax] += denom - s;
    mu.into_iter().map(|m| qf(m.max(0), denom)).collect()
}

pub fn plane_grading(pair: &TropicalPair, f: &DegreeFunctional) -> PlaneGrading {
    let gens = generators(pair);
    let n = pair.n;
    let uniform: Vec<Q> = vec![qf(1, n as i64); n];
    let mu = if gens.is_empty() {
        uniform
    } else {
        let g = bending_matrix(pair, f, &gens);
        let mut cands = vec![uniform, fictitious_play(&g)];
        for s in 0..n {
            let mut e = vec![Q::zero(); n];
            e[s] = Q::one();
            cands.push(e);
        }
        let score = |mu: &Vec<Q>| weights_for(&g, mu).into_iter().min().expect("generators present");
        let mut best = cands[0].clone();
        let mut best_score = score(&best);
        for c in cands.into_iter().skip(1) {
            let sc = score(&c);
            if sc > best_score {
                best_score = sc;
                best = c;
            }
        }
        best
    };
    let (tangent_weight, generator_weights) = grading_for(pair, f, &gens, &mu);
    let extra = if gens.is_empty() {
        Vec::new()
    } else {
        extra_gradings(&bending_matrix(pair, f, &gens))
            .into_iter()
            .map(|mu| {
                let (tangent_weight, generator_weights) = grading_for(pair, f, &gens, &mu);
                ExtraGrading { mu, tangent_weight, generator_weights }
            })
            .collect()
    };
    PlaneGrading { mu, tangent_weight, generator_weights, extra }
}

/// Tangent covector w = -ℓ_μ, where ℓ_μ = Σ μ_σ ℓ_σ, and the generator weights.
fn grading_for(pair: &TropicalPair, f: &DegreeFunctional, gens: &[Generator], mu: &[Q]) -> ((Q, Q), Vec<Q>) {
    let e1 = LatticeVector::new(1, 0);
    let e2 = LatticeVector::new(0, 1);
    let l1: Q = (0..pair.n).map(|s| &mu[s] * psi_piece(pair, f, s, e1)).sum();
    let l2: Q = (0..pair.n).map(|s| &mu[s] * psi_piece(pair, f, s, e2)).sum();
    let tangent_weight = (-l1, -l2);
    let weights = gens
        .iter()
        .map(|g| f.degree(&g.class) + &tangent_weight.0 * q(g.tangent.x) + &tangent_weight.1 * q(g.tangent.y))
        .collect();
    (tangent_weight, weights)
}

/// Largest number of cones for which the vertex search runs.
const VERTEX_SEARCH_CONES: usize = 10;

/// Vertices of {μ ≥ 0, Σμ = 1, μᵀG ≥ 0}, found by solving every choice of
/// n-1 tight constraints.
fn feasible_vertices(g: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = g.len();
    let mut cols: Vec<Vec<Q>> = Vec::new();
    for c in 0..g[0].len() {
        let col: Vec<Q> = (0..n).map(|r| g[r][c].clone()).collect();
        if !cols.contains(&col) {
            cols.push(col);
        }
    }
    let mut cons: Vec<Vec<Q>> = (0..n)
        .map(|s| (0..n).map(|t| if s == t { Q::one() } else { Q::zero() }).collect())
        .collect();
    cons.extend(cols.iter().cloned());
    let mut out: Vec<Vec<Q>> = Vec::new();
    let mut pick: Vec<usize> = (0..n.saturating_sub(1)).collect();
    loop {
        let mut rows: Vec<Vec<Q>> = vec![vec![Q::one(); n + 1]];
        rows[0][n] = Q::one();
        for &p in &pick {
            let mut r = cons[p].clone();
            r.push(Q::zero());
            rows.push(r);
        }
        if let Some(mu) = solve_square(rows) {
            let feasible = mu.iter().all(|x| !x.is_negative())
                && cols.iter().all(|c| !c.iter().zip(&mu).map(|(a, b)| a * b).sum::<Q>().is_negative());
            if feasible && !out.contains(&mu) {
                out.push(mu);
            }
        }
        // next combination of n-1 out of cons.len()
        let k = pick.len();
        let mut i = k;
        while i > 0 && pick[i - 1] == cons.len() - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        pick[i - 1] += 1;
        for j in i..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
    out
}

/// Unique solution of a square system given as augmented rows.
fn solve_square(mut a: Vec<Vec<Q>>) -> Option<Vec<Q>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).find(|r| !a[*r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x /= &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let fct = a[r][col].clone();
                for c in col..=n {
                    let v = &a[col][c] * &fct;
                    a[r][c] -= v;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n].clone()).collect())
}

/// Vertex strategies that give some generator its largest weight, at most
/// LANES - 1 of them.
fn extra_gradings(g: &[Vec<Q>]) -> Vec<Vec<Q>> {
    if g.len() > VERTEX_SEARCH_CONES || g.len() < 2 {
        return Vec::new();
    }
    let verts = feasible_vertices(g);
    let mut chosen: Vec<Vec<Q>> = Vec::new();
    for c in 0..g[0].len() {
        let best = verts.iter().max_by(|a, b| {
            let wa: Q = a.iter().zip(g).map(|(m, row)| m * &row[c]).sum();
            let wb: Q = b.iter().zip(g).map(|(m, row)| m * &row[c]).sum();
            wa.cmp(&wb)
        });
        if let Some(v) = best {
            if !chosen.contains(v) && chosen.len() + 1 < formal::LANES {
                chosen.push(v.clone());
            }
        }
    }
    chosen
}

/// Degree functional for scattering. With the default ε, ε is halved until
/// the plane grading is positive on every generator; a user-supplied ε that
/// fails this is rejected.
pub fn scattering_functional(pair: &TropicalPair, epsilon: Option<Q>) -> Result<DegreeFunctional> {
    let user = epsilon.is_some();
    let mut f = DegreeFunctional::new(pair, epsilon)?;
    for _ in 0..32 {
        let g = plane_grading(pair, &f);
        match g.min_weight() {
            None => return Ok(f),
            Some(c) if c.is_positive() => return Ok(f),
            Some(_) if user => {
                return Err(Error::invalid("epsilon too large for a positive scattering grading"));
            }
            Some(_) => f.epsilon = &f.epsilon / q(2),
        }
    }
    Err(Error::internal("no positive scattering grading found"))
}

fn plane_truncation(pair: &TropicalPair, f: &DegreeFunctional, order: &Q) -> (PlaneGrading, Arc<Truncation>) {
    let g = plane_grading(pair, f);
    let t = Truncation {
        functional: f.clone(),
        tangent_weight: g.tangent_weight.clone(),
        order: order.clone(),
        extra: g.extra.iter().map(|x| (x.tangent_weight.clone(), order.clone())).collect(),
        cache: Default::default(),
    };
    (g, Arc::new(t))
}

fn one_for(pair: &TropicalPair, t: &Arc<Truncation>) -> TruncatedElement {
    TruncatedElement::one(t, pair.n, pair.n_exc())
}

/// One incoming wall per ray with blowups: ∏_j (1 + z^{(m̄_i, φ̄(m̄_i) - E_ij)}).
pub fn initial_diagram(pair: &TropicalPair, f: &DegreeFunctional, order: &Q) -> Result<ScatteringDiagram> {
    let (_, t) = plane_truncation(pair, f, order);
    let mut walls = Vec::new();
    for i in 0..pair.n {
        if pair.blowups[i] == 0 {
            continue;
        }
        let mut e = one_for(pair, &t);
        for j in 0..pair.blowups[i] {
            let mut c = phi_bar(pair, pair.rays[i]);
            c.add_scaled(&exceptional_class(pair, i, j), -1);
            let mut b = one_for(pair, &t);
            b.add_term(pair.rays[i], c, Q::one());
            e = crate::series_ring::mul_truncated(&e, &b)?;
        }
        walls.push(Wall {
            cone: i,
            support: pair.rays[i],
            orientation: Orientation::Incoming,
            f: WallFunction::new(e, pair.rays[i])?,
        });
    }
    Ok(ScatteringDiagram { side: Side::Bbar, trunc: t, walls })
}

/// Integer scaling of one grading: generator weights and the bound.
fn integer_weights(weights: &[Q], order: &Q) -> Result<(Vec<u32>, u32)> {
    let mut lcm = num::BigInt::one();
    for w in weights {
        lcm = num::integer::lcm(lcm, w.denom().clone());
    }
    let s = Q::from_integer(lcm);
    let too_big = || Error::invalid("scattering grading too fine for this order");
    let ws = weights
        .iter()
        .map(|w| (w * &s).to_integer().to_u32().ok_or_else(too_big))
        .collect::<Result<Vec<u32>>>()?;
    let k = floor_to_i64(&(order * &s)).max(0);
    let k = u32::try_from(k).ok().filter(|k| *k < u32::MAX / 4).ok_or_else(too_big)?;
    Ok((ws, k))
}

fn series_to_element(
    pair: &TropicalPair,
    gens: &[Generator],
    space: &GenSpace,
    s: &Series,
    t: &Arc<Truncation>,
) -> TruncatedElement {
    let mut e = TruncatedElement::zero(t);
    for (mono, c) in &s.terms {
        let kappa = space.decode(mono.code);
        let mut class = CurveClass::zero_for(pair);
        for (g, k) in kappa.iter().enumerate() {
            class.add_scaled(&gens[g].class, *k as i64);
        }
        e.add_term(mono.m, class, Q::from_integer((*c).into()));
    }
    e
}

/// Completes the initial diagram of `pair`: adds outgoing walls, one per
/// support direction, until the loop is the identity to the diagram's order.
pub fn scatter_complete(pair: &TropicalPair, diagram: &ScatteringDiagram) -> Result<ScatteringDiagram> {
    if diagram.side != Side::Bbar {
        return Err(Error::invalid("completion runs on the plane diagram"));
    }
    let f = diagram.functional();
    let expected = initial_diagram(pair, f, diagram.order())?;
    if expected.walls != diagram.walls || expected.trunc != diagram.trunc {
        return Err(Error::invalid("diagram is not the initial diagram of this pair"));
    }
    let gens = generators(pair);
    let grading = plane_grading(pair, f);
    if gens.is_empty() {
        return Ok(diagram.clone());
    }
    if !grading.min_weight().expect("generators present").is_positive() {
        return Err(Error::invalid("plane grading is not positive; lower epsilon"));
    }
    let mut lanes = Vec::new();
    let mut bounds = Vec::new();
    for w in std::iter::once(&grading.generator_weights).chain(grading.extra.iter().map(|x| &x.generator_weights)) {
        let (ws, k) = integer_weights(w, diagram.order())?;
        lanes.push(ws);
        bounds.push(k);
    }
    let space = GenSpace::with_lanes(gens.iter().map(|g| g.tangent).collect(), lanes, bounds)?;
    let mut incoming = Vec::new();
    for i in 0..pair.n {
        let mut s = Series::one();
        for (g, gen) in gens.iter().enumerate() {
            if gen.ray == i {
                let b = Series::from_terms(vec![(formal::Mono::ONE, 1), (space.generator(g), 1)])?;
                s = s.mul(&b, space.bound())?;
            }
        }
        if !s.is_one() {
            incoming.push(FormalWall { support: pair.rays[i], f: s });
        }
    }
    let outgoing = formal::complete(&space, &incoming)?;
    let mut out = diagram.clone();
    for w in outgoing {
        let e = series_to_element(pair, &gens, &space, &w.f, &diagram.trunc);
        out.walls.push(Wall {
            cone: pair.plane_cone_of(w.support),
            support: w.support,
            orientation: Orientation::Outgoing,
            f: WallFunction::new(e, -w.support)?,
        });
    }
    Ok(out)
}

/// Angular arc traversed by a path around the origin, given by plane
/// directions. `turns` extra full turns are added; the path goes
/// counterclockwise unless `clockwise`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcPath {
    pub start: LatticeVector,
    pub end: LatticeVector,
    pub turns: u32,
    pub clockwise: bool,
}

#[derive(Clone, Debug)]
enum Event<'a> {
    /// Crossing fan ray i (on B: chart change), with the walls on it.
    Ray(usize, Vec<&'a Wall>),
    /// Walls on one interior direction of cone `cone` (plane direction).
    Interior(usize, LatticeVector, Vec<&'a Wall>),
}

fn plane_dir(pair: &TropicalPair, side: Side, w: &Wall) -> LatticeVector {
    match side {
        Side::B => pair.plane_vector(w.cone, w.support),
        Side::Bbar => w.support,
    }
}

/// Events of one counterclockwise lap starting at ray 0.
fn lap_events<'a>(pair: &TropicalPair, d: &'a ScatteringDiagram) -> Result<Vec<Event<'a>>> {
    let mut ev = Vec::new();
    for c in 0..pair.n {
        let mut on_ray = Vec::new();
        let mut interior: Vec<(LatticeVector, Vec<&Wall>)> = Vec::new();
        for w in &d.walls {
            let dir = primitive(plane_dir(pair, d.side, w))?.0;
            if dir == pair.rays[c] {
                on_ray.push(w);
                continue;
            }
            let k = pair.plane_coords(c, dir);
            if k.x > 0 && k.y > 0 {
                match interior.iter_mut().find(|(x, _)| *x == dir) {
                    Some((_, v)) => v.push(w),
                    None => interior.push((dir, vec![w])),
                }
            }
        }
        ev.push(Event::Ray(c, on_ray));
        interior.sort_by(|a, b| angular_cmp(pair.rays[c], a.0, b.0));
        for (dir, ws) in interior {
            ev.push(Event::Interior(c, dir, ws));
        }
    }
    Ok(ev)
}

fn event_dir(pair: &TropicalPair, e: &Event) -> LatticeVector {
    match e {
        Event::Ray(c, _) => pair.rays[*c],
        Event::Interior(_, d, _) => *d,
    }
}

/// Index of the first event strictly counterclockwise after direction `v`
/// (within a lap starting at ray 0); errors when `v` lies on an event.
fn position(pair: &TropicalPair, ev: &[Event], v: LatticeVector) -> Result<usize> {
    let base = pair.rays[0];
    let (dir, _) = primitive(v)?;
    for (idx, e) in ev.iter().enumerate() {
        let ed = event_dir(pair, e);
        match angular_cmp(base, dir, ed) {
            std::cmp::Ordering::Less => return Ok(idx),
            std::cmp::Ordering::Equal => {
                return Err(Error::invalid(format!("path endpoint {v} lies on a wall or ray")));
            }
            std::cmp::Ordering::Greater => {}
        }
    }
    Ok(ev.len())
}

/// Cone of B (by plane direction) that contains the generic direction `v`.
pub fn chart_of(pair: &TropicalPair, v: LatticeVector) -> usize {
    pair.plane_cone_of(v)
}

fn transport_element(
    pair: &TropicalPair,
    side: Side,
    ray: usize,
    forward: bool,
    x: &TruncatedElement,
) -> Result<TruncatedElement> {
    let mut r = TruncatedElement::zero(&x.trunc);
    for ((m, p), c) in &x.terms {
        let mono = Monomial { coeff: c.clone(), m: *m, p: p.clone() };
        let t = transport_exponent(pair, side, ray, forward, &mono)?;
        r.add_term(t.m, t.p, t.coeff);
    }
    Ok(r)
}

fn cross_walls(
    pair: &TropicalPair,
    walls: &[&Wall],
    chart_dir: impl Fn(&Wall) -> LatticeVector,
    clockwise: bool,
    x: &TruncatedElement,
) -> Result<TruncatedElement> {
    let mut r = x.clone();
    for w in walls {
        let u = chart_dir(w);
        let mut n = LatticeVector::new(u.y, -u.x);
        if clockwise {
            n = -n;
        }
        r = apply_wall_crossing(&w.f, n, &r, pair.n, pair.n_exc())?;
    }
    Ok(r)
}

/// Path-ordered product along `path`. On the plane all monomials live in one
/// chart; on B, `x` is in the chart of the start cone and the result in the
/// chart of the end cone.
pub fn path_ordered_product(
    pair: &TropicalPair,
    diagram: &ScatteringDiagram,
    path: &ArcPath,
    x: &TruncatedElement,
) -> Result<TruncatedElement> {
    let ev = lap_events(pair, diagram)?;
    let side = diagram.side;
    let len = ev.len();
    let ps = position(pair, &ev, path.start)?;
    let pe = position(pair, &ev, path.end)?;
    // events strictly between start and end in the direction of travel
    let steps = if !path.clockwise {
        (pe + len - ps) % len + path.turns as usize * len
    } else {
        (ps + len - pe) % len + path.turns as usize * len
    };
    let mut r = x.clone();
    let chart = |w: &Wall| w.support;
    for s in 0..steps {
        let idx = if !path.clockwise { (ps + s) % len } else { (ps + len - 1 - (s % len)) % len };
        match &ev[idx] {
            Event::Ray(i, walls) => {
                if side == Side::B && !path.clockwise {
                    r = transport_element(pair, side, *i, true, &r)?;
                }
                r = cross_walls(pair, walls, chart, path.clockwise, &r)?;
                if side == Side::B && path.clockwise {
                    r = transport_element(pair, side, *i, false, &r)?;
                }
            }
            Event::Interior(_, _, walls) => {
                r = cross_walls(pair, walls, chart, path.clockwise, &r)?;
            }
        }
    }
    Ok(r)
}

/// Generic direction strictly inside cone c, away from every wall.
pub fn generic_direction(pair: &TropicalPair, diagram: &ScatteringDiagram, cone: usize) -> Result<LatticeVector> {
    let ev = lap_events(pair, diagram)?;
    let mut dirs: Vec<LatticeVector> = vec![pair.rays[cone]];
    for e in &ev {
        if let Event::Interior(c, d, _) = e {
            if *c == cone {
                dirs.push(*d);
            }
        }
    }
    dirs.push(pair.rays[pair.next(cone)]);
    // first gap; the sum of two adjacent directions lies strictly between them
    let v = dirs[0] + dirs[1];
    Ok(primitive(v)?.0)
}

/// Checks that the full counterclockwise loop on the plane acts as the
/// identity on both chart characters, to the diagram's order measured
/// relative to each character. Wall functions keep their own truncation, so
/// a character of negative degree still sees every wall term of order ≤ k.
pub fn loop_identity(pair: &TropicalPair, diagram: &ScatteringDiagram) -> Result<bool> {
    if diagram.side != Side::Bbar {
        return Err(Error::invalid("the loop identity is stated on the plane"));
    }
    let start = generic_direction(pair, diagram, 0)?;
    let path = ArcPath { start, end: start, turns: 1, clockwise: false };
    let empty = ScatteringDiagram { side: diagram.side, trunc: diagram.trunc.clone(), walls: Vec::new() };
    for e in [LatticeVector::new(1, 0), LatticeVector::new(0, 1)] {
        let zero = CurveClass::zero_for(pair);
        let t = Arc::new(diagram.trunc.shifted_for(e));
        let x = TruncatedElement::monomial(&t, Q::one(), e, zero);
        let got = path_ordered_product(pair, diagram, &path, &x)?;
        let want = path_ordered_product(pair, &empty, &path, &x)?;
        if got != want {
            return Err(Error::internal(format!(
                "loop defect on character {e}: {:?}",
                got.sub(&want).sorted_terms()
            )));
        }
    }
    Ok(true)
}

/// Pulls the completed plane diagram back to the canonical diagram on B.
/// On ray i the outgoing plane function ḡ_i and the incoming blowup factors
/// combine to ḡ_i·∏_j (1 + z^{E_ij} X_i^{-1}); interior walls move cone-wise
/// with their classes re-based against φ.
pub fn pull_back_canonical(pair: &TropicalPair, completed: &ScatteringDiagram) -> Result<ScatteringDiagram> {
    if completed.side != Side::Bbar {
        return Err(Error::invalid("pullback expects a plane diagram"));
    }
    let f = completed.functional().clone();
    let t = Truncation::new(f, completed.order().clone());
    let mut ray_fns: Vec<TruncatedElement> = (0..pair.n).map(|_| one_for(pair, &t)).collect();
    let mut interior: Vec<Wall> = Vec::new();
    for w in &completed.walls {
        match w.orientation {
            Orientation::Incoming => {
                let i = w.on_ray(Side::Bbar, pair).ok_or_else(|| Error::invalid("incoming wall off the fan"))?;
                for j in 0..pair.blowups[i] {
                    let mut b = one_for(pair, &t);
                    b.add_term(LatticeVector::new(-1, 0), exceptional_class(pair, i, j), Q::one());
                    ray_fns[i] = crate::series_ring::mul_truncated(&ray_fns[i], &b)?;
                }
            }
            Orientation::Outgoing => {
                let (u, _) = primitive(w.support)?;
                let cone = pair.plane_cone_of(u);
                let mut e = TruncatedElement::zero(&t);
                for ((m, c), coeff) in &w.f.element.terms {
                    let mut p = c.clone();
                    p.add_scaled(&phi_value_linear(pair, cone, *m), -1);
                    e.add_term(pair.plane_coords(cone, *m), p, coeff.clone());
                }
                let cu = pair.plane_coords(cone, u);
                if cu.y == 0 {
                    ray_fns[cone] = crate::series_ring::mul_truncated(&ray_fns[cone], &e)?;
                } else if e.len() > 1 {
                    interior.push(Wall {
                        cone,
                        support: cu,
                        orientation: Orientation::Outgoing,
                        f: WallFunction::new(e, -cu)?,
                    });
                }
            }
        }
    }
    let mut walls = Vec::new();
    for (i, e) in ray_fns.into_iter().enumerate() {
        if e.len() > 1 {
            walls.push(Wall {
                cone: i,
                support: LatticeVector::new(1, 0),
                orientation: Orientation::Outgoing,
                f: WallFunction::new(e, LatticeVector::new(-1, 0))?,
            });
        }
    }
    walls.extend(interior);
    walls.sort_by(|a, b| (a.cone, a.support.y.signum()).cmp(&(b.cone, b.support.y.signum())).then_with(|| {
        angular_cmp(LatticeVector::new(1, 0), a.support, b.support)
    }));
    Ok(ScatteringDiagram { side: Side::B, trunc: t, walls })
}

/// Canonical diagram on B at order k: initial diagram, completion, pullback.
pub fn canonical_diagram(pair: &TropicalPair, f: &DegreeFunctional, order: &Q) -> Result<ScatteringDiagram> {
    let init = initial_diagram(pair, f, order)?;
    let done = scatter_complete(pair, &init)?;
    pull_back_canonical(pair, &done)
}

/// Term of log f: class, multiplicity k of the tangent along the wall
/// direction, and the coefficient k·N.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Invariant {
    pub class: CurveClass,
    pub multiplicity: i64,
    pub value: Q,
}

pub fn extract_invariants(pair: &TropicalPair, wall: &Wall) -> Result<Vec<Invariant>> {
    let l = exp_log(&wall.f.element, ExpLog::Log, pair.n, pair.n_exc())?;
    let mut out: Vec<Invariant> = l
        .terms
        .iter()
        .map(|((m, c), v)| Invariant {
            class: c.clone(),
            multiplicity: primitive(*m).map(|(_, k)| k).unwrap_or(0),
            value: v.clone(),
        })
        .collect();
    out.sort_by(|a, b| (a.multiplicity, &a.class).cmp(&(b.multiplicity, &b.class)));
    Ok(out)
}

/// λ-orders of the terms of a wall, for reporting.
pub fn wall_degrees(wall: &Wall) -> Vec<Q> {
    wall.f.element.sorted_terms().into_iter().map(|(d, _, _, _)| d).collect()
}

/// Wedge of two plane directions, exposed for callers placing endpoints.
pub fn turning(u: LatticeVector, v: LatticeVector) -> i64 {
    wedge(u, v)
}
