//! Broken lines on B for a scattering diagram on B, their lifts, and the
//! consistency check between lifts at different endpoints.
//!
//! All walls are rays through the origin, so rescaling maps broken lines to
//! broken lines and a line is determined by its combinatorics: the walls it
//! meets and the terms it picks up there. Along a line the angular position
//! moves monotonically (the angular momentum wedge(x, travel) is constant and
//! nonzero), so the search runs forward from infinity over the angular events
//! of each cone chart. Positions are reconstructed afterwards, backward from
//! the endpoint.

use std::cell::RefCell;
use std::rc::Rc;
use std::sync::Arc;

use num::{BigInt, Integer, Signed, ToPrimitive, Zero};
use rustc_hash::FxHashMap;

use crate::curve_classes::{boundary_class, CurveClass, DegreeFunctional};
use crate::error::{Error, Result};
use crate::lattice::{angular_cmp, primitive, wedge, LatticeVector};
use crate::rational::{q, Q};
use crate::scattering::{path_ordered_product, ArcPath, ScatteringDiagram};
use crate::series_ring::{
    apply_wall_crossing, pow_truncated, transport_exponent, Monomial, TruncatedElement, Truncation,
};
use crate::tropical_pair::{ChartPoint, Side, TangentVector, TropicalPair};

/// Straight piece of a broken line in the chart of `cone`. `start` is `None`
/// for the unbounded first piece; `bent` marks a piece that begins with a bend.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub cone: usize,
    pub start: Option<(Q, Q)>,
    pub end: (Q, Q),
    pub mono: Monomial,
    pub bent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrokenLine {
    pub direction: TangentVector,
    pub endpoint: ChartPoint,
    pub segments: Vec<Segment>,
}

impl BrokenLine {
    pub fn final_monomial(&self) -> &Monomial {
        &self.segments.last().expect("a broken line has a segment").mono
    }

    pub fn bends(&self) -> usize {
        self.segments.iter().filter(|s| s.bent).count()
    }

    pub fn to_json(&self, pair: &TropicalPair) -> serde_json::Value {
        let pt = |cone: usize, p: &(Q, Q)| {
            let (x, y) = pair.nu_point_to_plane(&ChartPoint { cone, a: p.0.clone(), b: p.1.clone() });
            serde_json::json!({"chart": [p.0.to_string(), p.1.to_string()], "plane": [x.to_string(), y.to_string()]})
        };
        serde_json::json!({
            "direction": {"cone": self.direction.cone, "v": [self.direction.v.x, self.direction.v.y]},
            "endpoint": {"cone": self.endpoint.cone, "a": self.endpoint.a.to_string(), "b": self.endpoint.b.to_string()},
            "segments": self.segments.iter().map(|s| serde_json::json!({
                "cone": s.cone,
                "start": s.start.as_ref().map(|p| pt(s.cone, p)),
                "end": pt(s.cone, &s.end),
                "bent": s.bent,
                "coeff": s.mono.coeff.to_string(),
                "m": [s.mono.m.x, s.mono.m.y],
                "class": s.mono.p.to_json(pair),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Brings q into the form (cone c, v) with v.x > 0, v.y ≥ 0.
pub fn normalize_direction(pair: &TropicalPair, q: TangentVector) -> Result<TangentVector> {
    if q.cone >= pair.n {
        return Err(Error::invalid(format!("cone {} out of range", q.cone)));
    }
    let v = q.v;
    if v.is_zero() {
        return Err(Error::invalid("direction q must be nonzero"));
    }
    if v.x < 0 || v.y < 0 {
        return Err(Error::invalid(format!("direction {v} is outside cone {}", q.cone)));
    }
    if v.x == 0 {
        return Ok(TangentVector { cone: pair.next(q.cone), v: LatticeVector::new(v.y, 0) });
    }
    Ok(q)
}

/// Direction a + η·b with η a positive infinitesimal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Dir {
    a: LatticeVector,
    b: LatticeVector,
}

impl Dir {
    fn exact(a: LatticeVector) -> Dir {
        Dir { a, b: LatticeVector::ZERO }
    }
}

fn wedge_sign(u: Dir, v: Dir) -> i64 {
    let w0 = wedge(u.a, v.a);
    if w0 != 0 {
        return w0.signum();
    }
    let w1 = wedge(u.a, v.b) + wedge(u.b, v.a);
    if w1 != 0 {
        return w1.signum();
    }
    wedge(u.b, v.b).signum()
}

/// Endpoint for the search: a generic point, or a point infinitesimally
/// close to one of the two rays bounding the cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Near {
    Chamber,
    /// Just counterclockwise of ray `cone`.
    Plus,
    /// Just clockwise of ray `cone + 1`.
    Minus,
}

#[derive(Clone, Copy, Debug)]
struct Target {
    cone: usize,
    dir: Dir,
    near: Near,
}

#[derive(Clone, Debug)]
struct Term {
    lam: Q,
    m: LatticeVector,
    p: CurveClass,
    c: Q,
}

impl Term {
    fn is_const(&self) -> bool {
        self.m.is_zero() && self.p.is_zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Via {
    Start,
    Wall,
    Ccw,
    Cw,
}

#[derive(Clone, Debug)]
struct Piece {
    cone: usize,
    at: Option<LatticeVector>,
    mono: Monomial,
    via: Via,
    bent: bool,
}

struct ConeWalls {
    /// Interior directions sorted counterclockwise, with merged function ids.
    interior: Vec<(LatticeVector, usize)>,
    /// Merged function on the ray of this cone (support (1, 0)).
    ray: Option<usize>,
}

/// Walls of a diagram on B merged per direction, truncated to a lift order.
struct Search<'a> {
    pair: &'a TropicalPair,
    functional: DegreeFunctional,
    order: Q,
    cones: Vec<ConeWalls>,
    funcs: Vec<TruncatedElement>,
    pows: RefCell<FxHashMap<(usize, i64), Rc<Vec<Term>>>>,
    boundary_lam: Vec<Q>,
}

fn check_diagram(pair: &TropicalPair, diagram: &ScatteringDiagram, order: &Q) -> Result<()> {
    if diagram.side != Side::B {
        return Err(Error::invalid("broken lines are computed on B"));
    }
    if order > diagram.order() {
        return Err(Error::invalid(format!(
            "order {} exceeds the diagram order {}",
            order,
            diagram.order()
        )));
    }
    if order.is_negative() {
        return Err(Error::invalid("order must be nonnegative"));
    }
    for i in 0..pair.n {
        if !diagram.functional().degree(&boundary_class(pair, i)).is_positive() {
            return Err(Error::invalid(format!("the truncation functional is not positive on D_{i}")));
        }
    }
    Ok(())
}

impl<'a> Search<'a> {
    fn new(pair: &'a TropicalPair, diagram: &ScatteringDiagram, order: &Q) -> Result<Search<'a>> {
        check_diagram(pair, diagram, order)?;
        let functional = diagram.functional().clone();
        let trunc = Truncation::new(functional.clone(), order.clone());
        let mut funcs: Vec<TruncatedElement> = Vec::new();
        let mut cones: Vec<ConeWalls> = (0..pair.n).map(|_| ConeWalls { interior: Vec::new(), ray: None }).collect();
        let merge = |slot: Option<usize>, e: &TruncatedElement, funcs: &mut Vec<TruncatedElement>| -> Result<usize> {
            let mut t = TruncatedElement::zero(&trunc);
            for ((m, p), c) in &e.terms {
                t.add_term(*m, p.clone(), c.clone());
            }
            match slot {
                Some(i) => {
                    funcs[i] = crate::series_ring::mul_truncated(&funcs[i], &t)?;
                    Ok(i)
                }
                None => {
                    funcs.push(t);
                    Ok(funcs.len() - 1)
                }
            }
        };
        for w in &diagram.walls {
            let c = w.cone;
            if c >= pair.n {
                return Err(Error::invalid(format!("wall in cone {c} out of range")));
            }
            let (u, _) = primitive(w.support)?;
            if u == LatticeVector::new(1, 0) {
                let id = merge(cones[c].ray, &w.f.element, &mut funcs)?;
                cones[c].ray = Some(id);
            } else if u.x > 0 && u.y > 0 {
                let slot = cones[c].interior.iter().find(|(d, _)| *d == u).map(|(_, i)| *i);
                let id = merge(slot, &w.f.element, &mut funcs)?;
                if slot.is_none() {
                    cones[c].interior.push((u, id));
                }
            } else {
                return Err(Error::invalid(format!("wall support {} is not in cone {c}", w.support)));
            }
        }
        for cw in &mut cones {
            cw.interior.sort_by(|a, b| angular_cmp(LatticeVector::new(1, 0), a.0, b.0));
        }
        for f in &funcs {
            for ((m, p), _) in &f.terms {
                if !(m.is_zero() && p.is_zero()) && !functional.degree(p).is_positive() {
                    return Err(Error::internal("wall term of non-positive order"));
                }
            }
        }
        let boundary_lam = (0..pair.n).map(|i| functional.degree(&boundary_class(pair, i))).collect();
        Ok(Search {
            pair,
            functional,
            order: order.clone(),
            cones,
            funcs,
            pows: RefCell::new(FxHashMap::default()),
            boundary_lam,
        })
    }

    fn lam(&self, p: &CurveClass) -> Q {
        self.functional.degree(p)
    }

    /// Terms of f^e sorted by order, the constant term first.
    fn power(&self, id: usize, e: i64) -> Result<Rc<Vec<Term>>> {
        if let Some(t) = self.pows.borrow().get(&(id, e)) {
            return Ok(t.clone());
        }
        let f = pow_truncated(&self.funcs[id], e, self.pair.n, self.pair.n_exc())?;
        let mut terms: Vec<Term> = f
            .terms
            .iter()
            .map(|((m, p), c)| Term { lam: self.lam(p), m: *m, p: p.clone(), c: c.clone() })
            .collect();
        terms.sort_by(|a, b| (!a.is_const(), &a.lam).cmp(&(!b.is_const(), &b.lam)));
        let rc = Rc::new(terms);
        self.pows.borrow_mut().insert((id, e), rc.clone());
        Ok(rc)
    }

    fn constant_only(&self) -> Rc<Vec<Term>> {
        let zero = CurveClass::zero_for(self.pair);
        Rc::new(vec![Term { lam: Q::zero(), m: LatticeVector::ZERO, p: zero, c: q(1) }])
    }

    fn ray_options(&self, cone: usize, e: i64) -> Result<Rc<Vec<Term>>> {
        match self.cones[cone].ray {
            Some(id) if e != 0 => self.power(id, e),
            _ => Ok(self.constant_only()),
        }
    }

    fn times(mono: &Monomial, t: &Term) -> Monomial {
        Monomial { coeff: &mono.coeff * &t.c, m: mono.m + t.m, p: &mono.p + &t.p }
    }

    /// Order of the class measured against the function linear across the
    /// ray that the target sits next to.
    fn ray_lam(&self, target: &Target, mono: &Monomial) -> Q {
        let lam = self.lam(&mono.p);
        match target.near {
            Near::Chamber => lam,
            Near::Plus => lam + q(mono.m.y.min(0)) * &self.boundary_lam[target.cone],
            Near::Minus => lam + q(mono.m.x.min(0)) * &self.boundary_lam[self.pair.next(target.cone)],
        }
    }

    fn run(&self, q0: TangentVector, target: Target, emit: &mut dyn FnMut(&[Piece])) -> Result<()> {
        let q0 = normalize_direction(self.pair, q0)?;
        let (c, v) = (q0.cone, q0.v);
        let zero = CurveClass::zero_for(self.pair);
        let mono = Monomial { coeff: q(1), m: v, p: zero.clone() };
        let mut stack = vec![Piece { cone: c, at: None, mono: mono.clone(), via: Via::Start, bent: false }];
        self.sweep(c, v, 1, false, &target, &mut stack, emit)?;
        if v.y > 0 {
            self.sweep(c, v, -1, false, &target, &mut stack, emit)?;
        } else {
            let pc = self.pair.prev(c);
            let v2 = LatticeVector::new(0, v.x);
            let mut stack = vec![Piece {
                cone: pc,
                at: None,
                mono: Monomial { coeff: q(1), m: v2, p: zero },
                via: Via::Start,
                bent: false,
            }];
            self.sweep(pc, LatticeVector::new(0, 1), -1, false, &target, &mut stack, emit)?;
        }
        Ok(())
    }

    /// Continues the line on top of `stack` from angular position `at` in
    /// `cone`, moving counterclockwise for s = 1 and clockwise for s = -1.
    #[allow(clippy::too_many_arguments)]
    fn sweep(
        &self,
        cone: usize,
        at: LatticeVector,
        s: i64,
        exempt: bool,
        target: &Target,
        stack: &mut Vec<Piece>,
        emit: &mut dyn FnMut(&[Piece]),
    ) -> Result<()> {
        let mono = stack.last().expect("nonempty").mono.clone();
        let d = -mono.m;
        let reach = |e: Dir| s * wedge_sign(Dir::exact(at), e) > 0 && s * wedge_sign(e, Dir::exact(d)) > 0;
        let walls = &self.cones[cone].interior;
        let mut order: Vec<usize> = (0..walls.len()).filter(|&i| reach(Dir::exact(walls[i].0))).collect();
        if s < 0 {
            order.reverse();
        }
        let hit_q = target.cone == cone && reach(target.dir);
        let q_pos = if hit_q {
            order.iter().take_while(|&&i| s * wedge_sign(Dir::exact(walls[i].0), target.dir) > 0).count()
        } else {
            usize::MAX
        };
        if exempt {
            if hit_q && q_pos == 0 {
                emit(stack);
            }
            return Ok(());
        }
        let lam = self.lam(&mono.p);
        for (k, &i) in order.iter().enumerate() {
            if k == q_pos {
                emit(stack);
            }
            let (u, id) = walls[i];
            let e = wedge(u, mono.m).abs();
            let terms = self.power(id, e)?;
            for t in terms.iter().skip(1) {
                if &lam + &t.lam > self.order {
                    break;
                }
                stack.push(Piece { cone, at: Some(u), mono: Self::times(&mono, t), via: Via::Wall, bent: true });
                self.sweep(cone, u, s, false, target, stack, emit)?;
                stack.pop();
            }
        }
        if q_pos == order.len() {
            emit(stack);
        }
        let boundary = if s > 0 { LatticeVector::new(0, 1) } else { LatticeVector::new(1, 0) };
        if !reach(Dir::exact(boundary)) {
            return Ok(());
        }
        if s > 0 {
            let nc = self.pair.next(cone);
            let m1 = transport_exponent(self.pair, Side::B, nc, true, &mono)?;
            let opts = self.ray_options(nc, m1.m.y.abs())?;
            let eligible = target.near == Near::Plus && target.cone == nc;
            for t in opts.iter() {
                let m2 = Self::times(&m1, t);
                let ok = self.lam(&m2.p) <= self.order;
                let ex = !ok && eligible && self.ray_lam(target, &m2) <= self.order;
                if !ok && !ex {
                    break;
                }
                stack.push(Piece { cone: nc, at: Some(LatticeVector::new(1, 0)), mono: m2, via: Via::Ccw, bent: !t.is_const() });
                self.sweep(nc, LatticeVector::new(1, 0), s, ex, target, stack, emit)?;
                stack.pop();
            }
        } else {
            let pc = self.pair.prev(cone);
            let opts = self.ray_options(cone, mono.m.y.abs())?;
            let eligible = target.near == Near::Minus && target.cone == pc;
            for t in opts.iter() {
                let m2 = transport_exponent(self.pair, Side::B, cone, false, &Self::times(&mono, t))?;
                let ok = self.lam(&m2.p) <= self.order;
                let ex = !ok && eligible && self.ray_lam(target, &m2) <= self.order;
                if !ok && !ex {
                    break;
                }
                stack.push(Piece { cone: pc, at: Some(LatticeVector::new(0, 1)), mono: m2, via: Via::Cw, bent: !t.is_const() });
                self.sweep(pc, LatticeVector::new(0, 1), s, ex, target, stack, emit)?;
                stack.pop();
            }
        }
        Ok(())
    }

    fn lift_terms(&self, q0: TangentVector, target: Target) -> Result<FxHashMap<(LatticeVector, CurveClass), Q>> {
        let mut acc: FxHashMap<(LatticeVector, CurveClass), Q> = FxHashMap::default();
        self.run(q0, target, &mut |st: &[Piece]| {
            let m = &st.last().expect("nonempty").mono;
            *acc.entry((m.m, m.p.clone())).or_insert_with(Q::zero) += &m.coeff;
        })?;
        acc.retain(|_, c| !c.is_zero());
        Ok(acc)
    }
}

/// Integer direction of a chart point, validating that it is generic.
fn endpoint_target(pair: &TropicalPair, diagram: &ScatteringDiagram, endpoint: &ChartPoint) -> Result<Target> {
    if endpoint.cone >= pair.n {
        return Err(Error::invalid(format!("endpoint cone {} out of range", endpoint.cone)));
    }
    if !endpoint.a.is_positive() || !endpoint.b.is_positive() {
        return Err(Error::invalid("endpoint must lie in the interior of its cone, off the rays"));
    }
    let l: BigInt = endpoint.a.denom().lcm(endpoint.b.denom());
    let ai = (&endpoint.a * Q::from_integer(l.clone())).to_integer();
    let bi = (&endpoint.b * Q::from_integer(l)).to_integer();
    let g = ai.gcd(&bi);
    let (x, y) = ((ai / &g).to_i64(), (bi / &g).to_i64());
    let (Some(x), Some(y)) = (x, y) else {
        return Err(Error::invalid("endpoint coordinates are too large"));
    };
    let dir = LatticeVector::new(x, y);
    for w in &diagram.walls {
        if w.cone == endpoint.cone && wedge(w.support, dir) == 0 && w.support.dot(dir) > 0 {
            return Err(Error::invalid(format!("endpoint lies on the wall with support {}", w.support)));
        }
    }
    Ok(chamber_target(endpoint.cone, dir))
}

/// Lifts are constant on chambers but jump where a final travel direction
/// points at the endpoint; the endpoint is moved infinitesimally
/// counterclockwise so that every direction inside a chamber is usable.
fn chamber_target(cone: usize, dir: LatticeVector) -> Target {
    Target { cone, dir: Dir { a: dir, b: LatticeVector::new(-dir.y, dir.x) }, near: Near::Chamber }
}

fn qv(v: LatticeVector) -> (Q, Q) {
    (q(v.x), q(v.y))
}

fn qwedge(a: &(Q, Q), b: &(Q, Q)) -> Q {
    &a.0 * &b.1 - &a.1 * &b.0
}

/// Positions of the pieces, backward from the endpoint.
fn reconstruct(q0: TangentVector, endpoint: &ChartPoint, pieces: &[Piece]) -> Result<BrokenLine> {
    let mut end = (endpoint.a.clone(), endpoint.b.clone());
    let mut segs: Vec<Segment> = Vec::with_capacity(pieces.len());
    for (j, pc) in pieces.iter().enumerate().rev() {
        let start = match pc.at {
            None => None,
            Some(at) => {
                let m = qv(pc.mono.m);
                let a = qv(at);
                let t = -qwedge(&end, &a) / qwedge(&m, &a);
                if !t.is_positive() {
                    return Err(Error::invalid("endpoint is not generic: a broken line for q arrives parallel to it"));
                }
                let st = (&end.0 + &t * &m.0, &end.1 + &t * &m.1);
                if !(&st.0 * &a.0 + &st.1 * &a.1).is_positive() {
                    return Err(Error::invalid("endpoint is not generic: a broken line for q passes through the origin"));
                }
                Some(st)
            }
        };
        segs.push(Segment { cone: pc.cone, start: start.clone(), end: end.clone(), mono: pc.mono.clone(), bent: pc.bent });
        if j == 0 {
            break;
        }
        let s = start.expect("only the first piece is unbounded");
        end = match pc.via {
            Via::Ccw => {
                debug_assert!(s.1.is_zero());
                (Q::zero(), s.0)
            }
            Via::Cw => {
                debug_assert!(s.0.is_zero());
                (s.1, Q::zero())
            }
            Via::Wall | Via::Start => s,
        };
    }
    segs.reverse();
    Ok(BrokenLine { direction: q0, endpoint: endpoint.clone(), segments: segs })
}

/// All broken lines for q ending at `endpoint` whose final monomial has order ≤ `order`.
pub fn enumerate_broken_lines(
    pair: &TropicalPair,
    diagram: &ScatteringDiagram,
    q0: TangentVector,
    endpoint: &ChartPoint,
    order: &Q,
) -> Result<Vec<BrokenLine>> {
    let search = Search::new(pair, diagram, order)?;
    let target = endpoint_target(pair, diagram, endpoint)?;
    let qn = normalize_direction(pair, q0)?;
    let mut found: Vec<Vec<Piece>> = Vec::new();
    search.run(qn, target, &mut |st: &[Piece]| found.push(st.to_vec()))?;
    let mut lines = found.iter().map(|p| reconstruct(qn, endpoint, p)).collect::<Result<Vec<_>>>()?;
    lines.sort_by(|a, b| {
        (a.segments.len(), a.final_monomial()).cmp(&(b.segments.len(), b.final_monomial()))
    });
    Ok(lines)
}

/// Sum of the final monomials of the broken lines, in the chart of the endpoint's cone.
pub fn lift(
    pair: &TropicalPair,
    diagram: &ScatteringDiagram,
    q0: TangentVector,
    endpoint: &ChartPoint,
    order: &Q,
) -> Result<TruncatedElement> {
    let search = Search::new(pair, diagram, order)?;
    let target = endpoint_target(pair, diagram, endpoint)?;
    let acc = search.lift_terms(q0, target)?;
    let trunc = Truncation::new(search.functional.clone(), order.clone());
    let mut out = TruncatedElement::zero(&trunc);
    for ((m, p), c) in acc {
        out.add_term(m, p, c);
    }
    Ok(out)
}

/// Lifts at the generic points of the chambers of one cone, reused across calls.
pub struct Lifter<'a> {
    search: Search<'a>,
    trunc: Arc<Truncation>,
}

impl<'a> Lifter<'a> {
    pub fn new(pair: &'a TropicalPair, diagram: &ScatteringDiagram, order: &Q) -> Result<Lifter<'a>> {
        let search = Search::new(pair, diagram, order)?;
        let trunc = Truncation::new(search.functional.clone(), order.clone());
        Ok(Lifter { search, trunc })
    }

    pub fn truncation(&self) -> &Arc<Truncation> {
        &self.trunc
    }

    /// Interior wall directions of `cone`, counterclockwise.
    pub fn walls_of(&self, cone: usize) -> Vec<LatticeVector> {
        self.search.cones[cone].interior.iter().map(|(u, _)| *u).collect()
    }

    /// Integer direction inside chamber `k` of `cone` (chambers counted from ray `cone`).
    pub fn chamber_direction(&self, cone: usize, k: usize) -> LatticeVector {
        let w = self.walls_of(cone);
        let lo = if k == 0 { LatticeVector::new(1, 0) } else { w[k - 1] };
        let hi = if k == w.len() { LatticeVector::new(0, 1) } else { w[k] };
        primitive(lo + hi).expect("nonzero").0
    }

    /// Chamber of `cone` containing the direction `dir`.
    pub fn chamber_of(&self, cone: usize, dir: LatticeVector) -> usize {
        self.walls_of(cone).iter().filter(|u| wedge(**u, dir) > 0).count()
    }

    pub fn lift_dir(&self, q0: TangentVector, cone: usize, dir: LatticeVector) -> Result<TruncatedElement> {
        let target = chamber_target(cone, dir);
        let acc = self.search.lift_terms(q0, target)?;
        let mut out = TruncatedElement::zero(&self.trunc);
        for ((m, p), c) in acc {
            out.add_term(m, p, c);
        }
        Ok(out)
    }

    fn ray_lift(&self, q0: TangentVector, cone: usize, near: Near) -> Result<Vec<Monomial>> {
        let dir = match near {
            Near::Plus => Dir { a: LatticeVector::new(1, 0), b: LatticeVector::new(0, 1) },
            Near::Minus => Dir { a: LatticeVector::new(0, 1), b: LatticeVector::new(1, 0) },
            Near::Chamber => unreachable!("ray lifts sit next to a ray"),
        };
        let target = Target { cone, dir, near };
        let acc = self.search.lift_terms(q0, target)?;
        let mut out: Vec<Monomial> = acc.into_iter().map(|((m, p), coeff)| Monomial { coeff, m, p }).collect();
        out.sort();
        Ok(out)
    }
}

fn ray_walls<'d>(diagram: &'d ScatteringDiagram, ray: usize) -> impl Iterator<Item = &'d crate::scattering::Wall> {
    diagram.walls.iter().filter(move |w| w.cone == ray && primitive(w.support).map(|(u, _)| u == LatticeVector::new(1, 0)).unwrap_or(false))
}

/// Crosses ray `ray` counterclockwise: chart of cone ray-1 to chart of cone ray.
fn cross_ray_ccw(
    pair: &TropicalPair,
    diagram: &ScatteringDiagram,
    ray: usize,
    monos: &[Monomial],
    trunc: &Arc<Truncation>,
) -> Result<TruncatedElement> {
    let mut x = TruncatedElement::zero(trunc);
    for mono in monos {
        let t = transport_exponent(pair, Side::B, ray, true, mono)?;
        if trunc.degree(t.m, &t.p).is_negative() {
            return Err(Error::internal("lift monomial of negative order"));
        }
        x.add_term(t.m, t.p, t.coeff);
    }
    for w in ray_walls(diagram, ray) {
        x = apply_wall_crossing(&w.f, LatticeVector::new(0, -1), &x, pair.n, pair.n_exc())?;
    }
    Ok(x)
}

/// Crosses ray `ray` clockwise: chart of cone ray to chart of cone ray-1.
fn cross_ray_cw(
    pair: &TropicalPair,
    diagram: &ScatteringDiagram,
    ray: usize,
    monos: &[Monomial],
    trunc: &Arc<Truncation>,
) -> Result<TruncatedElement> {
    // order after the transport back, read in the chart of cone `ray`
    let dl = trunc.functional.degree(&boundary_class(pair, ray));
    let tw = Truncation::with_tangent_weight(trunc.functional.clone(), (Q::zero(), dl), trunc.order.clone());
    let mut x = TruncatedElement::zero(&tw);
    for mono in monos {
        if tw.degree(mono.m, &mono.p).is_negative() {
            return Err(Error::internal("lift monomial of negative order"));
        }
        x.add_term(mono.m, mono.p.clone(), mono.coeff.clone());
    }
    for w in ray_walls(diagram, ray) {
        x = apply_wall_crossing(&w.f, LatticeVector::new(0, 1), &x, pair.n, pair.n_exc())?;
    }
    let mut out = TruncatedElement::zero(trunc);
    for ((m, p), c) in &x.terms {
        let t = transport_exponent(pair, Side::B, ray, false, &Monomial { coeff: c.clone(), m: *m, p: p.clone() })?;
        out.add_term(t.m, t.p, t.coeff);
    }
    Ok(out)
}

fn chamber_point(cone: usize, dir: LatticeVector) -> ChartPoint {
    ChartPoint { cone, a: q(dir.x), b: q(dir.y) }
}

/// Checks that the lifts of q at the chambers met on the counterclockwise
/// walk from `qa` to `qb` are related by wall crossing. Across a ray of the
/// fan the lifts on both sides are formed to the order of the ring of the ray
/// and transported in both directions.
pub fn check_consistency(
    pair: &TropicalPair,
    diagram: &ScatteringDiagram,
    q0: TangentVector,
    qa: &ChartPoint,
    qb: &ChartPoint,
    order: &Q,
) -> Result<bool> {
    let lifter = Lifter::new(pair, diagram, order)?;
    let ta = endpoint_target(pair, diagram, qa)?;
    let tb = endpoint_target(pair, diagram, qb)?;
    let q0 = normalize_direction(pair, q0)?;
    let (ca, da) = (qa.cone, ta.dir.a);
    let (cb, db) = (qb.cone, tb.dir.a);
    let (ka, kb) = (lifter.chamber_of(ca, da), lifter.chamber_of(cb, db));
    let mut cur = lifter.lift_dir(q0, ca, da)?;
    if (ca, ka) == (cb, kb) {
        return Ok(cur == lifter.lift_dir(q0, cb, db)?);
    }
    let (mut cur_cone, mut cur_k, mut cur_dir) = (ca, ka, da);
    let steps: usize = (0..pair.n).map(|c| lifter.walls_of(c).len() + 1).sum();
    for _ in 0..=steps {
        let nwalls = lifter.walls_of(cur_cone).len();
        if cur_k < nwalls {
            let nd = if cur_cone == cb && cur_k + 1 == kb { db } else { lifter.chamber_direction(cur_cone, cur_k + 1) };
            let path = ArcPath {
                start: pair.plane_vector(cur_cone, cur_dir),
                end: pair.plane_vector(cur_cone, nd),
                turns: 0,
                clockwise: false,
            };
            let moved = path_ordered_product(pair, diagram, &path, &cur)?;
            let next = lifter.lift_dir(q0, cur_cone, nd)?;
            if moved != next {
                return Ok(false);
            }
            cur = next;
            cur_k += 1;
            cur_dir = nd;
        } else {
            let nc = pair.next(cur_cone);
            let nd = if nc == cb && kb == 0 { db } else { lifter.chamber_direction(nc, 0) };
            let next = lifter.lift_dir(q0, nc, nd)?;
            let minus = lifter.ray_lift(q0, cur_cone, Near::Minus)?;
            let plus = lifter.ray_lift(q0, nc, Near::Plus)?;
            if cross_ray_ccw(pair, diagram, nc, &minus, &lifter.trunc)? != next {
                return Ok(false);
            }
            if cross_ray_cw(pair, diagram, nc, &plus, &lifter.trunc)? != cur {
                return Ok(false);
            }
            cur = next;
            cur_cone = nc;
            cur_k = 0;
            cur_dir = nd;
        }
        if (cur_cone, cur_k) == (cb, kb) {
            return Ok(true);
        }
    }
    Err(Error::internal("consistency walk did not reach the second endpoint"))
}

/// The counterclockwise chain of chamber points of a diagram, one per chamber.
pub fn chamber_points(pair: &TropicalPair, diagram: &ScatteringDiagram, order: &Q) -> Result<Vec<ChartPoint>> {
    let lifter = Lifter::new(pair, diagram, order)?;
    let mut out = Vec::new();
    for c in 0..pair.n {
        for k in 0..=lifter.walls_of(c).len() {
            out.push(chamber_point(c, lifter.chamber_direction(c, k)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_classes::{boundary_weights, exceptional_class};
    use crate::rational::qf;
    use crate::scattering::{canonical_diagram, scattering_functional};
    use crate::series_ring::WallFunction;
    use crate::tropical_pair::{build_pair, PairSpec};

    fn setup(rays: &[[i64; 2]], blowups: &[u32], k: i64) -> (TropicalPair, ScatteringDiagram) {
        let p = build_pair(&PairSpec::new(rays, blowups)).unwrap();
        let f = scattering_functional(&p, None).unwrap();
        let d = canonical_diagram(&p, &f, &q(k)).unwrap();
        (p, d)
    }

    const M05: [[i64; 2]; 5] = [[1, 0], [1, 1], [0, 1], [-1, 0], [0, -1]];
    const SQUARE: [[i64; 2]; 4] = [[1, 0], [0, 1], [-1, 0], [0, -1]];

    fn tv(cone: usize, x: i64, y: i64) -> TangentVector {
        TangentVector { cone, v: LatticeVector::new(x, y) }
    }

    fn pt(cone: usize, a: Q, b: Q) -> ChartPoint {
        ChartPoint { cone, a, b }
    }

    #[test]
    fn toric_lines_are_straight() {
        let (p, d) = setup(&[[1, 0], [0, 1], [-1, -1]], &[0, 0, 0], 3);
        assert!(d.walls.is_empty());
        for (v, end) in [(tv(0, 1, 0), pt(1, q(2), q(1))), (tv(2, 1, 3), pt(0, q(1), q(5))), (tv(1, 2, 1), pt(1, q(1), q(1)))] {
            let lines = enumerate_broken_lines(&p, &d, v, &end, &q(3)).unwrap();
            assert_eq!(lines.len(), 1);
            assert_eq!(lines[0].bends(), 0);
            let l = lift(&p, &d, v, &end, &q(3)).unwrap();
            assert_eq!(l.len(), 1);
        }
        // a line through the origin makes the endpoint non-generic
        assert!(enumerate_broken_lines(&p, &d, tv(0, 1, 0), &pt(1, q(1), q(1)), &q(3)).is_err());
    }

    #[test]
    fn m05_lines_near_a_ray() {
        let (p, d) = setup(&M05, &[0, 0, 0, 1, 1], 4);
        for i in 0..5 {
            let end = pt(i, q(1), qf(1, 100));
            let lines = enumerate_broken_lines(&p, &d, tv(p.prev(i), 1, 0), &end, &q(4)).unwrap();
            assert_eq!(lines.len(), 2, "ray {i}");
            let straight = lines.iter().find(|l| l.bends() == 0).unwrap().final_monomial().clone();
            let bent = lines.iter().find(|l| l.bends() == 1).unwrap().final_monomial().clone();
            assert_eq!(straight.m, LatticeVector::new(1, -1));
            assert_eq!(straight.p, boundary_class(&p, i));
            assert_eq!(bent.m, LatticeVector::new(0, -1));
            let extra = &bent.p - &straight.p;
            let mut e = vec![0; 5];
            e[i] = 1;
            assert_eq!(boundary_weights(&p, &extra), e);
            if p.blowups[i] == 1 {
                assert_eq!(extra, exceptional_class(&p, i, 0));
            }
        }
        // q in the endpoint's cone: a single monomial
        for i in 0..5 {
            let l = lift(&p, &d, tv(i, 1, 0), &pt(i, q(3), q(1)), &q(4)).unwrap();
            assert_eq!(l.len(), 1);
            assert_eq!(l.terms.keys().next().unwrap().0, LatticeVector::new(1, 0));
            assert!(l.terms.keys().next().unwrap().1.is_zero());
        }
    }

    #[test]
    fn square_bent_line_carries_the_exceptional_class() {
        let (p, d) = setup(&SQUARE, &[1, 0, 0, 0], 3);
        let lines = enumerate_broken_lines(&p, &d, tv(3, 1, 0), &pt(0, q(1), q(1)), &q(3)).unwrap();
        assert_eq!(lines.len(), 2);
        let straight = lines.iter().find(|l| l.bends() == 0).unwrap().final_monomial();
        let bent = lines.iter().find(|l| l.bends() == 1).unwrap().final_monomial();
        assert_eq!(&bent.p - &straight.p, exceptional_class(&p, 0, 0));
    }

    #[test]
    fn line_invariants() {
        let (p, d) = setup(&[[1, 0], [0, 1], [-1, -1]], &[2, 2, 2], 2);
        let f = d.functional().clone();
        for (v, end) in [(tv(0, 1, 0), pt(1, q(3), q(1))), (tv(2, 1, 1), pt(0, q(2), q(7)))] {
            let lines = enumerate_broken_lines(&p, &d, v, &end, &q(2)).unwrap();
            assert!(lines.len() > 5);
            for l in &lines {
                let first = &l.segments[0];
                assert_eq!(first.mono.coeff, q(1));
                let other_chart = (p.prev(v.cone), LatticeVector::new(0, v.v.x));
                assert!((first.cone, first.mono.m) == (v.cone, v.v) || (v.v.y == 0 && (first.cone, first.mono.m) == other_chart));
                assert!(first.mono.p.is_zero());
                assert!(first.start.is_none());
                let last = l.segments.last().unwrap();
                assert_eq!(last.end, (end.a.clone(), end.b.clone()));
                let mut prev = Q::zero();
                for s in &l.segments {
                    let lam = f.degree(&s.mono.p);
                    assert!(lam >= prev);
                    if s.bent {
                        assert!(lam > prev || s.start.is_none());
                    }
                    prev = lam;
                    if let Some(st) = &s.start {
                        // travel direction is -m
                        let (dx, dy) = (&s.end.0 - &st.0, &s.end.1 - &st.1);
                        assert!((&dx * q(s.mono.m.y) - &dy * q(s.mono.m.x)).is_zero());
                        assert!((&dx * q(s.mono.m.x) + &dy * q(s.mono.m.y)).is_negative());
                    }
                }
            }
        }
    }

    #[test]
    fn lift_is_constant_on_chambers() {
        let (p, d) = setup(&[[1, 0], [0, 1], [-1, -1]], &[2, 2, 2], 2);
        let lf = Lifter::new(&p, &d, &q(2)).unwrap();
        let w = lf.walls_of(0);
        assert!(!w.is_empty());
        let a = lf.lift_dir(tv(1, 1, 0), 0, lf.chamber_direction(0, 0)).unwrap();
        let b = lf.lift_dir(tv(1, 1, 0), 0, LatticeVector::new(50, 1)).unwrap();
        assert_eq!(a, b);
        assert!(lift(&p, &d, tv(1, 1, 0), &pt(0, q(w[0].x), q(w[0].y)), &q(2)).is_err());
    }

    #[test]
    fn consistency_and_perturbation() {
        for (rays, bl) in [(&M05[..], &[0u32, 0, 0, 1, 1][..]), (&SQUARE[..], &[1, 0, 0, 0][..])] {
            let (p, d) = setup(rays, bl, 4);
            let pts = chamber_points(&p, &d, &q(4)).unwrap();
            let (a, b) = (&pts[0], &pts[pts.len() - 1]);
            for i in 0..p.n {
                assert!(check_consistency(&p, &d, tv(i, 1, 1), a, b, &q(4)).unwrap());
                assert!(check_consistency(&p, &d, tv(i, 1, 0), b, a, &q(4)).unwrap());
            }
            for wi in 0..d.walls.len() {
                let mut bad = d.clone();
                let mut e = bad.walls[wi].f.element.clone();
                let key = e.terms.keys().find(|k| !k.0.is_zero()).unwrap().clone();
                *e.terms.get_mut(&key).unwrap() += q(1);
                bad.walls[wi].f = WallFunction::new(e, bad.walls[wi].f.direction).unwrap();
                let detected = (0..p.n)
                    .flat_map(|i| [tv(i, 1, 0), tv(i, 1, 1)])
                    .any(|v| !check_consistency(&p, &bad, v, a, b, &q(4)).unwrap());
                assert!(detected, "wall {wi}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let (p, d) = setup(&M05, &[0, 0, 0, 1, 1], 3);
        assert!(lift(&p, &d, tv(0, 0, 0), &pt(0, q(1), q(2)), &q(3)).is_err());
        assert!(lift(&p, &d, tv(0, 1, 0), &pt(0, q(1), q(0)), &q(3)).is_err());
        assert!(lift(&p, &d, tv(0, 1, 0), &pt(0, q(1), q(2)), &q(4)).is_err());
        assert!(lift(&p, &d, tv(0, -1, 0), &pt(0, q(1), q(2)), &q(3)).is_err());
    }
}
