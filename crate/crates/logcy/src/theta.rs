//! Theta functions on B: structure constants from broken lines, products,
//! relations among generators and the local chart equations along the rays.
//!
//! Structure constants are read off chamber by chamber. For a point Q in a
//! chamber Z and r in the closure of Z, the only broken line with final
//! exponent r ending at Q is the straight line of θ_r, so the coefficient of
//! X^r in Lift_Q(θ_p)·Lift_Q(θ_q) is exactly α_r. Every point of B(ℤ) lies in
//! the half-open closure of exactly one chamber, so one sweep over the
//! chambers yields all structure constants. The constant term α_0 is the X^0
//! coefficient at any chamber.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::rc::Rc;
use std::sync::Arc;

use num::{One, Signed, Zero};
use rustc_hash::FxHashMap;
use serde_json::json;

use crate::broken_lines::{normalize_direction, Lifter};
use crate::curve_classes::{boundary_class, exceptional_class, format_boundary, CurveClass, DegreeFunctional};
use crate::error::{Error, Result};
use crate::lattice::LatticeVector;
use crate::rational::{fmt_q, q, Q};
use crate::scattering::ScatteringDiagram;
use crate::series_ring::{inverse, mul_truncated, TruncatedElement, Truncation};
use crate::tropical_pair::{TangentVector, TropicalPair};

/// The point 0 of B(ℤ).
pub fn origin() -> TangentVector {
    TangentVector { cone: 0, v: LatticeVector::ZERO }
}

/// The point v_i of B(ℤ).
pub fn ray_point(i: usize) -> TangentVector {
    TangentVector { cone: i, v: LatticeVector::new(1, 0) }
}

/// Canonical form of a point of B(ℤ): zero, or a·v_c + b·v_{c+1} with a > 0, b ≥ 0.
pub fn normalize_point(pair: &TropicalPair, p: TangentVector) -> Result<TangentVector> {
    if p.v.is_zero() {
        return Ok(origin());
    }
    normalize_direction(pair, p)
}

/// Human-readable point label: "0", "v2", "2v1+v2".
pub fn format_point(p: TangentVector, n: usize) -> String {
    if p.v.is_zero() {
        return "0".into();
    }
    let term = |k: i64, i: usize| if k == 1 { format!("v{}", i + 1) } else { format!("{k}v{}", i + 1) };
    let mut s = term(p.v.x, p.cone);
    if p.v.y != 0 {
        s.push('+');
        s.push_str(&term(p.v.y, (p.cone + 1) % n));
    }
    s
}

/// T^D weight of a point: the piecewise linear extension of v_i ↦ e_i.
pub fn point_weight(pair: &TropicalPair, p: TangentVector) -> Vec<i64> {
    let mut w = vec![0; pair.n];
    if !p.v.is_zero() {
        w[p.cone] += p.v.x;
        w[pair.next(p.cone)] += p.v.y;
    }
    w
}

/// Formats a polynomial in the curve classes, e.g. "z^{D2} + 2z^{D1+E4,1}".
pub fn format_coefficient(pair: &TropicalPair, c: &TruncatedElement) -> String {
    if c.is_zero() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, (_, _, class, coeff)) in c.sorted_terms().into_iter().enumerate() {
        let neg = coeff.is_negative();
        let a = coeff.abs();
        if i > 0 {
            s.push_str(if neg { " - " } else { " + " });
        } else if neg {
            s.push('-');
        }
        let unit = a.is_one();
        if class.is_zero() {
            s.push_str(&fmt_q(&a));
        } else {
            if !unit {
                s.push_str(&fmt_q(&a));
            }
            let _ = write!(s, "z^{{{}}}", format_boundary(pair, &class));
        }
    }
    s
}

fn coefficient_json(pair: &TropicalPair, c: &TruncatedElement) -> serde_json::Value {
    serde_json::Value::Array(
        c.sorted_terms()
            .into_iter()
            .map(|(d, _, class, coeff)| {
                json!({
                    "coeff": fmt_q(&coeff),
                    "class": class.to_json(pair),
                    "boundary": format_boundary(pair, &class),
                    "order": fmt_q(&d),
                })
            })
            .collect(),
    )
}

/// Σ_q c_q θ_q with coefficients polynomials in the curve classes.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ThetaElement {
    pub coeffs: BTreeMap<TangentVector, TruncatedElement>,
}

impl ThetaElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficient(&self, p: TangentVector) -> Option<&TruncatedElement> {
        self.coeffs.get(&p)
    }

    /// Adds c·θ_p; `p` must be normalized.
    pub fn add_term(&mut self, p: TangentVector, c: &TruncatedElement) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(p).or_insert_with(|| TruncatedElement::zero(&c.trunc));
        *e = e.add(c);
        if e.is_zero() {
            self.coeffs.remove(&p);
        }
    }

    pub fn add(&self, o: &ThetaElement) -> ThetaElement {
        let mut r = self.clone();
        for (p, c) in &o.coeffs {
            r.add_term(*p, c);
        }
        r
    }

    pub fn sub(&self, o: &ThetaElement) -> ThetaElement {
        let mut r = self.clone();
        for (p, c) in &o.coeffs {
            r.add_term(*p, &c.scale(&q(-1)));
        }
        r
    }

    /// Multiplies every coefficient by a class polynomial.
    pub fn scale_by(&self, c: &TruncatedElement) -> Result<ThetaElement> {
        let mut r = ThetaElement::zero();
        for (p, a) in &self.coeffs {
            r.add_term(*p, &mul_truncated(a, c)?);
        }
        Ok(r)
    }

    pub fn format(&self, pair: &TropicalPair) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(p, c)| format!("({})·θ[{}]", format_coefficient(pair, c), format_point(*p, pair.n)))
            .collect();
        parts.join(" + ")
    }

    pub fn to_json(&self, pair: &TropicalPair) -> serde_json::Value {
        serde_json::Value::Array(
            self.coeffs
                .iter()
                .map(|(p, c)| {
                    json!({
                        "point": {"cone": p.cone, "v": [p.v.x, p.v.y]},
                        "label": format_point(*p, pair.n),
                        "weight": point_weight(pair, *p),
                        "coeff": coefficient_json(pair, c),
                    })
                })
                .collect(),
        )
    }
}

type LiftTerms = Rc<Vec<(LatticeVector, CurveClass, Q)>>;
type Constants = Rc<BTreeMap<TangentVector, TruncatedElement>>;

/// Products of theta functions at a fixed order, with memoized lifts and
/// structure constants.
pub struct ThetaAlgebra<'a> {
    pair: &'a TropicalPair,
    lifter: Lifter<'a>,
    chambers: Vec<(usize, usize, LatticeVector)>,
    one: TruncatedElement,
    lifts: RefCell<FxHashMap<(TangentVector, usize), LiftTerms>>,
    constants: RefCell<FxHashMap<(TangentVector, TangentVector), Constants>>,
    expansions: RefCell<FxHashMap<Vec<u32>, Rc<ThetaElement>>>,
    in_generators: RefCell<FxHashMap<(TangentVector, Q), Rc<Polynomial>>>,
}

impl<'a> ThetaAlgebra<'a> {
    pub fn new(pair: &'a TropicalPair, diagram: &ScatteringDiagram, order: &Q) -> Result<Self> {
        let lifter = Lifter::new(pair, diagram, order)?;
        let mut chambers = Vec::new();
        for c in 0..pair.n {
            for k in 0..=lifter.walls_of(c).len() {
                chambers.push((c, k, lifter.chamber_direction(c, k)));
            }
        }
        let one = TruncatedElement::one(lifter.truncation(), pair.n, pair.n_exc());
        Ok(ThetaAlgebra {
            pair,
            lifter,
            chambers,
            one,
            lifts: RefCell::default(),
            constants: RefCell::default(),
            expansions: RefCell::default(),
            in_generators: RefCell::default(),
        })
    }

    pub fn pair(&self) -> &TropicalPair {
        self.pair
    }

    pub fn order(&self) -> &Q {
        &self.lifter.truncation().order
    }

    pub fn functional(&self) -> &DegreeFunctional {
        &self.lifter.truncation().functional
    }

    /// Truncation shared by all coefficients.
    pub fn truncation(&self) -> &Arc<Truncation> {
        self.lifter.truncation()
    }

    /// The class polynomial 1.
    pub fn unit(&self) -> &TruncatedElement {
        &self.one
    }

    /// The class polynomial z^C.
    pub fn class_monomial(&self, c: &CurveClass) -> TruncatedElement {
        TruncatedElement::monomial(self.truncation(), Q::one(), LatticeVector::ZERO, c.clone())
    }

    pub fn theta(&self, p: TangentVector) -> Result<ThetaElement> {
        let mut e = ThetaElement::zero();
        e.add_term(normalize_point(self.pair, p)?, &self.one);
        Ok(e)
    }

    /// The Landau–Ginzburg potential Σ_i θ_{v_i}.
    pub fn potential(&self) -> ThetaElement {
        let mut e = ThetaElement::zero();
        for i in 0..self.pair.n {
            e.add_term(ray_point(i), &self.one);
        }
        e
    }

    fn lift_terms(&self, p: TangentVector, chamber: usize) -> Result<LiftTerms> {
        if let Some(v) = self.lifts.borrow().get(&(p, chamber)) {
            return Ok(v.clone());
        }
        let (c, _, dir) = self.chambers[chamber];
        let l = self.lifter.lift_dir(p, c, dir)?;
        let v: LiftTerms = Rc::new(l.terms.into_iter().map(|((m, cl), co)| (m, cl, co)).collect());
        self.lifts.borrow_mut().insert((p, chamber), v.clone());
        Ok(v)
    }

    /// α_r for θ_p·θ_q = Σ_r α_r θ_r, keyed by normalized r.
    pub fn structure_constants(&self, p: TangentVector, q0: TangentVector) -> Result<Constants> {
        let p = normalize_point(self.pair, p)?;
        let q0 = normalize_point(self.pair, q0)?;
        if let Some(v) = self.constants.borrow().get(&(p, q0)) {
            return Ok(v.clone());
        }
        let mut out: BTreeMap<TangentVector, TruncatedElement> = BTreeMap::new();
        if p.v.is_zero() || q0.v.is_zero() {
            let r = if p.v.is_zero() { q0 } else { p };
            out.insert(r, self.one.clone());
        } else {
            let trunc = self.truncation();
            for idx in 0..self.chambers.len() {
                let (c, k, _) = self.chambers[idx];
                let lp = self.lift_terms(p, idx)?;
                let lq = self.lift_terms(q0, idx)?;
                for (ma, pa, ca) in lp.iter() {
                    for (mb, pb, cb) in lq.iter() {
                        let r = *ma + *mb;
                        let target = if r.is_zero() {
                            (idx == 0).then(origin)
                        } else if r.x > 0 && r.y >= 0 && self.lifter.chamber_of(c, r) == k {
                            Some(TangentVector { cone: c, v: r })
                        } else {
                            None
                        };
                        let Some(t) = target else { continue };
                        let class = pa + pb;
                        if !trunc.keeps(LatticeVector::ZERO, &class) {
                            continue;
                        }
                        out.entry(t)
                            .or_insert_with(|| TruncatedElement::zero(trunc))
                            .add_term(LatticeVector::ZERO, class, ca * cb);
                    }
                }
            }
            out.retain(|_, c| !c.is_zero());
        }
        let v = Rc::new(out);
        self.constants.borrow_mut().insert((p, q0), v.clone());
        Ok(v)
    }

    pub fn multiply(&self, a: &ThetaElement, b: &ThetaElement) -> Result<ThetaElement> {
        let mut out = ThetaElement::zero();
        for (p, ca) in &a.coeffs {
            for (q0, cb) in &b.coeffs {
                let cab = mul_truncated(ca, cb)?;
                if cab.is_zero() {
                    continue;
                }
                for (r, alpha) in self.structure_constants(*p, *q0)?.iter() {
                    out.add_term(*r, &mul_truncated(&cab, alpha)?);
                }
            }
        }
        Ok(out)
    }

    /// Left-to-right product of a list; the empty product is θ_0.
    pub fn multiply_expand(&self, elements: &[ThetaElement]) -> Result<ThetaElement> {
        let mut acc = self.theta(origin())?;
        for e in elements {
            acc = self.multiply(&acc, e)?;
        }
        Ok(acc)
    }

    /// Π_i θ_{g_i}^{e_i} expanded in the theta basis.
    pub fn monomial_expansion(&self, generators: &[TangentVector], e: &[u32]) -> Result<Rc<ThetaElement>> {
        let mut key: Vec<u32> = e.to_vec();
        // distinguish generator sets in the cache
        for g in generators {
            key.extend([g.cone as u32, g.v.x as u32, g.v.y as u32]);
        }
        if let Some(v) = self.expansions.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = match e.iter().position(|k| *k > 0) {
            None => Rc::new(self.theta(origin())?),
            Some(i) => {
                let mut lower = e.to_vec();
                lower[i] -= 1;
                let rest = self.monomial_expansion(generators, &lower)?;
                Rc::new(self.multiply(&rest, &self.theta(generators[i])?)?)
            }
        };
        self.expansions.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// θ_r as a polynomial in θ_{v_0}, …, θ_{v_{n-1}}, exact up to λ ≤ budget.
    fn theta_in_generators(&self, r: TangentVector, budget: &Q) -> Result<Rc<Polynomial>> {
        let n = self.pair.n;
        if budget.is_negative() {
            return Ok(Rc::new(Polynomial::new()));
        }
        if let Some(v) = self.in_generators.borrow().get(&(r, budget.clone())) {
            return Ok(v.clone());
        }
        let mut e = vec![0u32; n];
        if !r.v.is_zero() {
            e[r.cone] += r.v.x as u32;
            e[self.pair.next(r.cone)] += r.v.y as u32;
        }
        let mut out = Polynomial::new();
        if r.v.is_zero() || r.v.x + r.v.y == 1 {
            out.insert(e, self.one.clone());
        } else {
            let gens: Vec<TangentVector> = (0..n).map(ray_point).collect();
            let ex = self.monomial_expansion(&gens, &e)?;
            let cr = ex
                .coefficient(r)
                .ok_or_else(|| Error::internal("same-cone product lacks its leading theta function"))?;
            let inv = inverse(cr, n, self.pair.n_exc())?;
            out.insert(e, inv.clone());
            let f = self.functional();
            for (s, alpha) in &ex.coeffs {
                if *s == r {
                    continue;
                }
                let beta = mul_truncated(alpha, &inv)?.scale(&q(-1));
                let Some(delta) = beta.terms.keys().map(|(_, c)| f.degree(c)).min() else { continue };
                if !delta.is_positive() {
                    return Err(Error::internal("same-cone product has a second term of order zero"));
                }
                let sub = self.theta_in_generators(*s, &(budget - &delta))?;
                poly_add_scaled(&mut out, &sub, &beta)?;
            }
            for c in out.values_mut() {
                *c = c.truncate_to(budget);
            }
            out.retain(|_, c| !c.is_zero());
        }
        let v = Rc::new(out);
        self.in_generators.borrow_mut().insert((r, budget.clone()), v.clone());
        Ok(v)
    }

    /// Rewrites an element as a polynomial in θ_{v_0}, …, θ_{v_{n-1}}, using
    /// only monomials supported on two adjacent generators.
    pub fn to_generators(&self, x: &ThetaElement) -> Result<Polynomial> {
        let mut out = Polynomial::new();
        for (r, c) in &x.coeffs {
            let sub = self.theta_in_generators(*r, self.order())?;
            poly_add_scaled(&mut out, &sub, c)?;
        }
        Ok(out)
    }
}

/// Polynomial in generator symbols: exponent vector ↦ class polynomial.
pub type Polynomial = BTreeMap<Vec<u32>, TruncatedElement>;

fn poly_add_scaled(acc: &mut Polynomial, p: &Polynomial, s: &TruncatedElement) -> Result<()> {
    for (e, c) in p {
        let t = mul_truncated(c, s)?;
        if t.is_zero() {
            continue;
        }
        let slot = acc.entry(e.clone()).or_insert_with(|| TruncatedElement::zero(&t.trunc));
        *slot = slot.add(&t);
        if slot.is_zero() {
            acc.remove(e);
        }
    }
    Ok(())
}

fn format_monomial(e: &[u32], names: &[String]) -> String {
    let mut s = String::new();
    for (k, name) in e.iter().zip(names) {
        match k {
            0 => {}
            1 => s.push_str(name),
            _ => {
                let _ = write!(s, "{name}^{k}");
            }
        }
    }
    if s.is_empty() {
        s.push('1');
    }
    s
}

pub fn format_polynomial(pair: &TropicalPair, p: &Polynomial, names: &[String]) -> String {
    if p.is_empty() {
        return "0".into();
    }
    let mut terms: Vec<(&Vec<u32>, &TruncatedElement)> = p.iter().collect();
    terms.sort_by(|a, b| {
        let da: u32 = a.0.iter().sum();
        let db: u32 = b.0.iter().sum();
        db.cmp(&da).then_with(|| b.0.cmp(a.0))
    });
    terms
        .into_iter()
        .map(|(e, c)| {
            let m = format_monomial(e, names);
            let single = c.len() == 1 && c.terms.keys().all(|(_, cl)| cl.is_zero());
            let cs = format_coefficient(pair, c);
            if m == "1" {
                format!("({cs})")
            } else if single && cs == "1" {
                m
            } else {
                format!("({cs})·{m}")
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// lhs = rhs with lhs a monomial in the generators.
#[derive(Clone, Debug)]
pub struct Relation {
    pub lhs: Vec<u32>,
    pub rhs: Polynomial,
}

impl Relation {
    pub fn format(&self, pair: &TropicalPair, names: &[String]) -> String {
        format!("{} = {}", format_monomial(&self.lhs, names), format_polynomial(pair, &self.rhs, names))
    }

    pub fn to_json(&self, pair: &TropicalPair, names: &[String]) -> serde_json::Value {
        let rhs: Vec<serde_json::Value> = self
            .rhs
            .iter()
            .map(|(e, c)| json!({"monomial": e, "symbol": format_monomial(e, names), "coeff": coefficient_json(pair, c)}))
            .collect();
        json!({
            "lhs": self.lhs,
            "lhs_symbol": format_monomial(&self.lhs, names),
            "rhs": rhs,
            "text": self.format(pair, names),
        })
    }
}

/// Names θ1, …, θn of the generators θ_{v_i}.
pub fn ray_generator_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("θ{i}")).collect()
}

/// Defining relations among θ_{v_0}, …, θ_{v_{n-1}} (n ≥ 3): every monomial
/// not supported on two adjacent generators is rewritten in the basis of
/// adjacent monomials. The minimal such monomials are θ_{v_i}θ_{v_j} for
/// non-adjacent i, j, and θ_{v_0}θ_{v_1}θ_{v_2} when n = 3.
pub fn ray_relations(alg: &ThetaAlgebra) -> Result<Vec<Relation>> {
    let n = alg.pair.n;
    if n < 3 {
        return Err(Error::invalid("ray generators need at least three rays"));
    }
    let gens: Vec<TangentVector> = (0..n).map(ray_point).collect();
    let mut lhs_list: Vec<Vec<u32>> = Vec::new();
    if n == 3 {
        lhs_list.push(vec![1, 1, 1]);
    } else {
        for d in 2..=n / 2 {
            for i in 0..n {
                let j = (i + d) % n;
                if d * 2 == n && j < i {
                    continue;
                }
                let mut e = vec![0u32; n];
                e[i] = 1;
                e[j] = 1;
                lhs_list.push(e);
            }
        }
    }
    let mut out = Vec::new();
    for e in lhs_list {
        let ex = alg.monomial_expansion(&gens, &e)?;
        let rhs = alg.to_generators(&ex)?;
        out.push(Relation { lhs: e, rhs });
    }
    Ok(out)
}

/// Solves for the weights of the rays in `contracted` so that the weight
/// function is linear across them: w_{i-1} + w_{i+1} + D_i²·w_i = 0. The
/// remaining rays get unit vectors, in increasing order.
pub fn contracted_weights(pair: &TropicalPair, contracted: &[usize]) -> Result<Vec<Vec<Q>>> {
    let n = pair.n;
    if contracted.iter().any(|i| *i >= n) {
        return Err(Error::invalid("contracted ray index out of range"));
    }
    let kept: Vec<usize> = (0..n).filter(|i| !contracted.contains(i)).collect();
    if kept.is_empty() {
        return Err(Error::invalid("cannot contract every boundary component"));
    }
    let dim = kept.len();
    let mut w: Vec<Vec<Q>> = vec![vec![Q::zero(); dim]; n];
    for (j, i) in kept.iter().enumerate() {
        w[*i][j] = Q::one();
    }
    let m = contracted.len();
    if m == 0 {
        return Ok(w);
    }
    let pos = |i: usize| contracted.iter().position(|c| *c == i);
    // rows: equations for each contracted ray; columns: unknowns, then dim right-hand sides
    let mut a: Vec<Vec<Q>> = vec![vec![Q::zero(); m + dim]; m];
    for (row, &i) in contracted.iter().enumerate() {
        let terms = [(pair.prev(i), Q::one()), (pair.next(i), Q::one()), (i, q(pair.self_int[i]))];
        for (idx, coef) in terms {
            match pos(idx) {
                Some(col) => a[row][col] += &coef,
                None => {
                    for d in 0..dim {
                        let v = &coef * &w[idx][d];
                        a[row][m + d] -= v;
                    }
                }
            }
        }
    }
    let pivots = rref(&mut a, m);
    if pivots.len() < m {
        return Err(Error::invalid("contracted boundary components are not independent"));
    }
    for (row, &i) in contracted.iter().enumerate() {
        w[i] = a[row][m..].to_vec();
    }
    Ok(w)
}

/// Reduced row echelon form over the first `cols` columns; returns pivot columns.
fn rref(a: &mut [Vec<Q>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..a.len()).find(|r| !a[*r][col].is_zero()) else { continue };
        a.swap(row, p);
        let inv = Q::one() / &a[row][col];
        for x in a[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..a.len() {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..a[r].len() {
                    let v = &f * &a[row][c];
                    a[r][c] -= v;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == a.len() {
            break;
        }
    }
    pivots
}

fn in_contracted_span(pair: &TropicalPair, f: &DegreeFunctional, c: &CurveClass, contracted: &[usize]) -> bool {
    if c.is_zero() {
        return true;
    }
    fn go(pair: &TropicalPair, f: &DegreeFunctional, rest: &CurveClass, contracted: &[usize]) -> bool {
        if rest.is_zero() {
            return true;
        }
        let Some((&i, tail)) = contracted.split_first() else { return false };
        let d = boundary_class(pair, i);
        let ld = f.degree(&d);
        let mut cur = rest.clone();
        loop {
            if go(pair, f, &cur, tail) {
                return true;
            }
            cur = &cur - &d;
            if f.degree(&cur).is_negative() || !ld.is_positive() {
                return false;
            }
        }
    }
    go(pair, f, c, contracted)
}

/// Image in the fiber over the point where z^C = 1 for C a nonnegative
/// combination of the classes [D_i], i ∈ `contracted`, and z^C = 0 for all
/// other nonzero classes. With `contracted` empty this is the central fiber.
pub fn reduce_to_stratum(
    pair: &TropicalPair,
    f: &DegreeFunctional,
    x: &ThetaElement,
    contracted: &[usize],
) -> BTreeMap<TangentVector, Q> {
    let mut out = BTreeMap::new();
    for (p, c) in &x.coeffs {
        let mut s = Q::zero();
        for ((_, class), v) in &c.terms {
            if in_contracted_span(pair, f, class, contracted) {
                s += v;
            }
        }
        if !s.is_zero() {
            out.insert(*p, s);
        }
    }
    out
}

/// A relation Σ c_e x^e = 0 in the reduced fiber.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberRelation {
    pub terms: BTreeMap<Vec<u32>, Q>,
}

impl FiberRelation {
    pub fn format(&self, names: &[String]) -> String {
        let mut terms: Vec<(&Vec<u32>, &Q)> = self.terms.iter().collect();
        terms.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        let mut s = String::new();
        for (i, (e, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i > 0 {
                s.push_str(if neg { " - " } else { " + " });
            } else if neg {
                s.push('-');
            }
            let m = format_monomial(e, names);
            if !a.is_one() {
                s.push_str(&fmt_q(&a));
            } else if m == "1" {
                s.push('1');
                continue;
            }
            if m != "1" {
                s.push_str(&m);
            }
        }
        s
    }
}

fn monomials_up_to(k: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for e in &out {
            let used: u32 = e.iter().sum();
            for a in 0..=(d - used) {
                let mut f = e.clone();
                f.push(a);
                next.push(f);
            }
        }
        out = next;
    }
    out.sort_by(|a, b| a.iter().sum::<u32>().cmp(&b.iter().sum::<u32>()).then_with(|| a.cmp(b)));
    out
}

/// Relations among the given generators in the reduced fiber of
/// [`reduce_to_stratum`], up to polynomial degree `max_degree`: kernels of
/// the evaluation map on each weight space, modulo the multiples of
/// relations found in lower degree.
pub fn fiber_relations(
    alg: &ThetaAlgebra,
    generators: &[TangentVector],
    contracted: &[usize],
    max_degree: u32,
) -> Result<Vec<FiberRelation>> {
    let pair = alg.pair;
    let gens: Vec<TangentVector> =
        generators.iter().map(|g| normalize_point(pair, *g)).collect::<Result<_>>()?;
    if gens.iter().any(|g| g.v.is_zero()) {
        return Err(Error::invalid("θ_0 = 1 is not a generator"));
    }
    let w = contracted_weights(pair, contracted)?;
    let dim = w[0].len();
    let weight_of_point = |p: TangentVector| -> Vec<Q> {
        let mut out = vec![Q::zero(); dim];
        for d in 0..dim {
            out[d] = q(p.v.x) * &w[p.cone][d] + q(p.v.y) * &w[pair.next(p.cone)][d];
        }
        out
    };
    let gw: Vec<Vec<Q>> = gens.iter().map(|g| weight_of_point(*g)).collect();
    let mono_weight = |e: &[u32]| -> Vec<Q> {
        let mut out = vec![Q::zero(); dim];
        for (k, g) in e.iter().zip(&gw) {
            for d in 0..dim {
                out[d] += q(*k as i64) * &g[d];
            }
        }
        out
    };
    let mut groups: BTreeMap<Vec<Q>, Vec<Vec<u32>>> = BTreeMap::new();
    for e in monomials_up_to(gens.len(), max_degree) {
        if e.iter().all(|k| *k == 0) {
            continue;
        }
        groups.entry(mono_weight(&e)).or_default().push(e);
    }
    let mut found: Vec<FiberRelation> = Vec::new();
    // process groups by increasing degree of their smallest monomial so that
    // multiples of earlier relations are known
    let mut order: Vec<(Vec<Q>, Vec<Vec<u32>>)> = groups.into_iter().collect();
    order.sort_by(|a, b| {
        let da = a.1.iter().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0);
        let db = b.1.iter().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0);
        da.cmp(&db).then_with(|| a.0.cmp(&b.0))
    });
    for (_, monos) in order {
        let mut columns: Vec<BTreeMap<TangentVector, Q>> = Vec::new();
        for e in &monos {
            let ex = alg.monomial_expansion(&gens, e)?;
            columns.push(reduce_to_stratum(pair, alg.functional(), &ex, contracted));
        }
        let mut points: Vec<TangentVector> = columns.iter().flat_map(|c| c.keys().copied()).collect();
        points.sort();
        points.dedup();
        // kernel of the evaluation matrix (rows = points, cols = monomials)
        let nm = monos.len();
        let mut a: Vec<Vec<Q>> = points
            .iter()
            .map(|p| columns.iter().map(|c| c.get(p).cloned().unwrap_or_else(Q::zero)).collect())
            .collect();
        let pivots = rref(&mut a, nm);
        let free: Vec<usize> = (0..nm).filter(|c| !pivots.contains(c)).collect();
        let mut kernel: Vec<Vec<Q>> = Vec::new();
        for &fcol in &free {
            let mut v = vec![Q::zero(); nm];
            v[fcol] = Q::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][fcol].clone();
            }
            kernel.push(v);
        }
        if kernel.is_empty() {
            continue;
        }
        // multiples of known relations inside this group
        let index: BTreeMap<&Vec<u32>, usize> = monos.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let mut span: Vec<Vec<Q>> = Vec::new();
        for rel in &found {
            let lead = rel.terms.keys().next().expect("nonempty relation");
            for target in &monos {
                if !target.iter().zip(lead).all(|(t, l)| t >= l) {
                    continue;
                }
                let shift: Vec<u32> = target.iter().zip(lead).map(|(t, l)| t - l).collect();
                let mut v = vec![Q::zero(); nm];
                let mut ok = true;
                for (e, c) in &rel.terms {
                    let m: Vec<u32> = e.iter().zip(&shift).map(|(a, b)| a + b).collect();
                    match index.get(&m) {
                        Some(i) => v[*i] += c,
                        None => ok = false,
                    }
                }
                if ok {
                    span.push(v);
                }
            }
        }
        for v in kernel {
            let before = rank(&span, nm);
            span.push(v.clone());
            if rank(&span, nm) > before {
                let mut terms = BTreeMap::new();
                // normalize: the leading coefficient (highest degree, then largest exponent) is 1
                let mut idx: Vec<usize> = (0..nm).filter(|i| !v[*i].is_zero()).collect();
                idx.sort_by(|a, b| {
                    let da: u32 = monos[*a].iter().sum();
                    let db: u32 = monos[*b].iter().sum();
                    db.cmp(&da).then_with(|| monos[*b].cmp(&monos[*a]))
                });
                let lead = v[idx[0]].clone();
                for i in idx {
                    terms.insert(monos[i].clone(), &v[i] / &lead);
                }
                found.push(FiberRelation { terms });
            }
        }
    }
    Ok(found)
}

fn rank(rows: &[Vec<Q>], cols: usize) -> usize {
    let mut a: Vec<Vec<Q>> = rows.to_vec();
    if a.is_empty() {
        return 0;
    }
    rref(&mut a, cols).len()
}

/// Local equation of the mirror family along a ray of the fan:
/// X₋X₊ = z^{[D_i]} X^{-D_i²} f_i with f_i the product of the wall functions on
/// the ray, in X = X^{(1,0)} of the chart of cone i.
#[derive(Clone, Debug)]
pub struct ChartEquation {
    pub ray: usize,
    pub self_int: i64,
    pub boundary: CurveClass,
    pub f: TruncatedElement,
    /// Classes E_ij of the factors (1 + z^{E_ij} X^{-1}).
    pub factors: Vec<CurveClass>,
    /// f divided by the product of the factors.
    pub remainder: TruncatedElement,
}

impl ChartEquation {
    fn format_x_poly(pair: &TropicalPair, e: &TruncatedElement) -> String {
        let terms = e.sorted_terms();
        if terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (_, m, c, v) in terms {
            let mut s = String::new();
            if !v.is_one() || (c.is_zero() && m.is_zero()) {
                s.push_str(&fmt_q(&v));
            }
            if !c.is_zero() {
                let _ = write!(s, "z^{{{}}}", format_boundary(pair, &c));
            }
            if !m.is_zero() {
                let _ = write!(s, "X^{{{}}}", m.x);
            }
            parts.push(s);
        }
        parts.join(" + ")
    }

    pub fn format(&self, pair: &TropicalPair) -> String {
        let mut s = format!("X- X+ = z^{{{}}}", format_boundary(pair, &self.boundary));
        if self.self_int != 0 {
            let _ = write!(s, "·X^{{{}}}", -self.self_int);
        }
        for e in &self.factors {
            let _ = write!(s, "·(1 + z^{{{}}}X^{{-1}})", format_boundary(pair, e));
        }
        let g = Self::format_x_poly(pair, &self.remainder);
        if g != "1" {
            let _ = write!(s, "·({g})");
        }
        s
    }

    pub fn to_json(&self, pair: &TropicalPair) -> serde_json::Value {
        json!({
            "ray": self.ray,
            "self_intersection": self.self_int,
            "boundary_class": format_boundary(pair, &self.boundary),
            "f": self.f.to_json(pair),
            "factors": self.factors.iter().map(|c| format_boundary(pair, c)).collect::<Vec<_>>(),
            "remainder": self.remainder.to_json(pair),
            "text": self.format(pair),
        })
    }
}

pub fn chart_equation(pair: &TropicalPair, diagram: &ScatteringDiagram, ray: usize, order: &Q) -> Result<ChartEquation> {
    if ray >= pair.n {
        return Err(Error::invalid("ray index out of range"));
    }
    if order > diagram.order() {
        return Err(Error::invalid("order exceeds the order of the diagram"));
    }
    let walls: Vec<&crate::scattering::Wall> =
        diagram.walls.iter().filter(|w| w.on_ray(diagram.side, pair) == Some(ray)).collect();
    let trunc = match walls.first() {
        Some(w) => w.f.element.trunc.clone(),
        None => Truncation::new(diagram.functional().clone(), order.clone()),
    };
    let (n, ne) = (pair.n, pair.n_exc());
    let mut f = TruncatedElement::one(&trunc, n, ne);
    for w in &walls {
        f = mul_truncated(&f, &w.f.element)?;
    }
    let f = f.truncate_to(order);
    let mut factors = Vec::new();
    let mut remainder = f.clone();
    for j in 0..pair.blowups[ray] {
        let e = exceptional_class(pair, ray, j);
        let mut lin = TruncatedElement::one(&trunc, n, ne);
        lin.add_term(LatticeVector::new(-1, 0), e.clone(), Q::one());
        remainder = mul_truncated(&remainder, &inverse(&lin, n, ne)?)?;
        factors.push(e);
    }
    let remainder = remainder.truncate_to(order);
    Ok(ChartEquation { ray, self_int: pair.self_int[ray], boundary: boundary_class(pair, ray), f, factors, remainder })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_classes::boundary_weights;
    use crate::scattering::{canonical_diagram, scattering_functional};
    use crate::tropical_pair::{build_pair, PairSpec};

    fn setup(rays: &[[i64; 2]], blowups: &[u32], k: &Q) -> (TropicalPair, ScatteringDiagram) {
        let p = build_pair(&PairSpec::new(rays, blowups)).unwrap();
        let f = scattering_functional(&p, None).unwrap();
        let d = canonical_diagram(&p, &f, k).unwrap();
        (p, d)
    }

    const M05_RAYS: [[i64; 2]; 5] = [[1, 0], [1, 1], [0, 1], [-1, 0], [0, -1]];
    const M05_L: [u32; 5] = [0, 0, 0, 1, 1];

    #[test]
    fn m05_products_of_second_neighbours() {
        let k = q(4);
        let (p, d) = setup(&M05_RAYS, &M05_L, &k);
        let alg = ThetaAlgebra::new(&p, &d, &k).unwrap();
        for i in 0..5 {
            let sc = alg.structure_constants(ray_point(p.prev(i)), ray_point(p.next(i))).unwrap();
            let di = boundary_class(&p, i);
            let mut expected = BTreeMap::new();
            expected.insert(ray_point(i), alg.class_monomial(&di));
            let ei = if p.blowups[i] == 1 {
                exceptional_class(&p, i, 0)
            } else {
                // the unique interior (-1)-curve meeting D_i, read off the constant term
                let c = sc.get(&origin()).expect("constant term");
                let class = &c.terms.keys().next().unwrap().1 - &di;
                assert_eq!(boundary_weights(&p, &class).iter().filter(|w| **w != 0).collect::<Vec<_>>(), vec![&1]);
                class
            };
            expected.insert(origin(), alg.class_monomial(&(&di + &ei)));
            assert_eq!(*sc, expected, "i = {i}");
        }
    }

    #[test]
    fn same_cone_products_and_unit() {
        let k = q(3);
        let (p, d) = setup(&M05_RAYS, &M05_L, &k);
        let alg = ThetaAlgebra::new(&p, &d, &k).unwrap();
        let a = TangentVector { cone: 2, v: LatticeVector::new(2, 1) };
        let b = TangentVector { cone: 2, v: LatticeVector::new(1, 3) };
        let prod = alg.multiply(&alg.theta(a).unwrap(), &alg.theta(b).unwrap()).unwrap();
        assert_eq!(prod, alg.theta(TangentVector { cone: 2, v: LatticeVector::new(3, 4) }).unwrap());
        let w = alg.potential();
        assert_eq!(alg.multiply(&alg.theta(origin()).unwrap(), &w).unwrap(), w);
    }

    #[test]
    fn commutative_and_homogeneous() {
        let k = q(3);
        let (p, d) = setup(&[[1, 0], [0, 1], [-1, 0], [0, -1]], &[1, 0, 1, 0], &k);
        let alg = ThetaAlgebra::new(&p, &d, &k).unwrap();
        let pts = [
            TangentVector { cone: 0, v: LatticeVector::new(1, 1) },
            TangentVector { cone: 1, v: LatticeVector::new(2, 1) },
            TangentVector { cone: 3, v: LatticeVector::new(1, 0) },
            TangentVector { cone: 2, v: LatticeVector::new(1, 2) },
        ];
        for a in pts {
            for b in pts {
                let ab = alg.structure_constants(a, b).unwrap();
                assert_eq!(ab, alg.structure_constants(b, a).unwrap());
                let wa = point_weight(&p, a);
                let wb = point_weight(&p, b);
                for (r, c) in ab.iter() {
                    let wr = point_weight(&p, *r);
                    for (_, class) in c.terms.keys() {
                        let bw = boundary_weights(&p, class);
                        for i in 0..p.n {
                            assert_eq!(wa[i] + wb[i], wr[i] + bw[i]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn m05_ray_relations() {
        let k = q(4);
        let (p, d) = setup(&M05_RAYS, &M05_L, &k);
        let alg = ThetaAlgebra::new(&p, &d, &k).unwrap();
        let rels = ray_relations(&alg).unwrap();
        assert_eq!(rels.len(), 5);
        for r in &rels {
            assert_eq!(r.rhs.len(), 2);
            let i = (0..5).find(|i| r.lhs[p.prev(*i)] == 1 && r.lhs[p.next(*i)] == 1).unwrap();
            let mut lin = vec![0; 5];
            lin[i] = 1;
            assert_eq!(r.rhs[&lin], alg.class_monomial(&boundary_class(&p, i)));
        }
    }

    #[test]
    fn contracted_weights_linear_across_rays() {
        let p = build_pair(&PairSpec::new(&[[1, 0], [0, 1], [-1, -1]], &[0, 2, 3])).unwrap();
        let w = contracted_weights(&p, &[1, 2]).unwrap();
        assert_eq!(w, vec![vec![q(1)], vec![q(3)], vec![q(2)]]);
    }

    #[test]
    fn chart_equations() {
        let k = q(3);
        let (p, d) = setup(&M05_RAYS, &M05_L, &k);
        let eq = chart_equation(&p, &d, 3, &k).unwrap();
        assert_eq!(eq.self_int, -1);
        assert_eq!(eq.factors, vec![exceptional_class(&p, 3, 0)]);
        assert_eq!(eq.remainder, TruncatedElement::one(&eq.remainder.trunc, p.n, p.n_exc()));
        let (t, dt) = setup(&[[1, 0], [0, 1], [-1, -1]], &[0, 0, 0], &k);
        let eq = chart_equation(&t, &dt, 1, &k).unwrap();
        assert!(eq.factors.is_empty());
        assert_eq!(eq.f.len(), 1);
    }
}
