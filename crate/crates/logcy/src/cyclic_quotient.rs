//! Chains of toric boundary curves over the affine line: the deformation
//! equations of the associated cyclic quotient singularity, the P-resolution
//! cut out by ν⁻¹(n ≥ 1), and singularity types of the cones involved.

use std::fmt::Write as _;

use num::{Integer, One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::lattice::{primitive, wedge, LatticeVector};
use crate::rational::{fmt_q, q, Q};

/// Fan of a smooth toric surface proper over A¹: rays m_0..m_{n+1}
/// counterclockwise, m_{n+1} = -m_0, and blowups l_1..l_n on the interior rays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub fan_rays: Vec<LatticeVector>,
    pub blowups: Vec<u32>,
    #[serde(default)]
    pub proper_over_line: bool,
}

impl ChainSpec {
    pub fn new(rays: &[[i64; 2]], blowups: &[u32]) -> ChainSpec {
        ChainSpec {
            fan_rays: rays.iter().map(|r| LatticeVector::from(*r)).collect(),
            blowups: blowups.to_vec(),
            proper_over_line: true,
        }
    }
}

/// Validated chain data.
#[derive(Clone, Debug)]
pub struct Chain {
    /// Number n of proper boundary curves.
    pub n: usize,
    pub rays: Vec<LatticeVector>,
    /// l_i, indexed 0..=n+1 with l_0 = l_{n+1} = 0.
    pub blowups: Vec<u32>,
    /// Multiplicities α_i of D̄_i in the central fiber, α_0 = α_{n+1} = 0.
    pub alpha: Vec<i64>,
    /// D̄_i² for 1 ≤ i ≤ n (index 0 and n+1 unused, set to 0).
    pub toric_self_int: Vec<i64>,
    /// D_i² = D̄_i² - l_i.
    pub self_int: Vec<i64>,
}

pub fn build_chain(spec: &ChainSpec) -> Result<Chain> {
    let rays = spec.fan_rays.clone();
    if rays.len() < 3 {
        return Err(Error::invalid("a chain needs at least three rays"));
    }
    let n = rays.len() - 2;
    if spec.blowups.len() != n {
        return Err(Error::invalid(format!("blowups has length {}, expected {n}", spec.blowups.len())));
    }
    for (i, r) in rays.iter().enumerate() {
        if r.is_zero() || primitive(*r)?.1 != 1 {
            return Err(Error::invalid(format!("fan ray {i} = {r} is not primitive")));
        }
    }
    if rays[n + 1] != -rays[0] {
        return Err(Error::invalid("the last ray must be opposite to the first: the support is a half-plane"));
    }
    for i in 0..=n {
        if wedge(rays[i], rays[i + 1]) != 1 {
            return Err(Error::invalid(format!("rays {i},{} do not span a smooth counterclockwise cone", i + 1)));
        }
    }
    let alpha: Vec<i64> = rays.iter().map(|r| wedge(rays[0], *r)).collect();
    if alpha[1..=n].iter().any(|a| *a <= 0) {
        return Err(Error::invalid("interior rays must lie strictly inside the half-plane"));
    }
    let mut blowups = vec![0u32; n + 2];
    blowups[1..=n].copy_from_slice(&spec.blowups);
    let mut toric_self_int = vec![0i64; n + 2];
    let mut self_int = vec![0i64; n + 2];
    for i in 1..=n {
        let s = rays[i - 1] + rays[i + 1];
        // s = -D̄_i² m_i
        let k = if rays[i].x != 0 { s.x / rays[i].x } else { s.y / rays[i].y };
        if rays[i].scale(k) != s {
            return Err(Error::internal("neighbouring rays do not satisfy the toric relation"));
        }
        toric_self_int[i] = -k;
        self_int[i] = -k - blowups[i] as i64;
    }
    Ok(Chain { n, rays, blowups, alpha, toric_self_int, self_int })
}

/// Equation x_{i-1}x_{i+1} = x_i^{e}(x_i^{l} + a_{i1}x_i^{l-1} + … + a_{il})
/// with e = -D_i² - l_i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainEquation {
    pub index: usize,
    pub exponent: i64,
    pub l: u32,
}

impl ChainEquation {
    pub fn format(&self, single: bool) -> String {
        let i = self.index;
        let xi = format!("x{i}");
        let name = |j: u32| if single { format!("a{j}") } else { format!("a{i},{j}") };
        let pow = |k: i64| match k {
            0 => String::new(),
            1 => xi.clone(),
            _ => format!("{xi}^{k}"),
        };
        let mut inner = Vec::new();
        for j in 0..=self.l {
            let p = (self.l - j) as i64;
            let term = match (j, p) {
                (0, 0) => "1".to_string(),
                (0, _) => pow(p),
                (_, 0) => name(j),
                _ => format!("{}·{}", name(j), pow(p)),
            };
            inner.push(term);
        }
        let inner = inner.join(" + ");
        let lhs = format!("x{}·x{}", i - 1, i + 1);
        match (self.exponent, self.l) {
            (_, 0) => format!("{lhs} = {}", if self.exponent == 0 { "1".into() } else { pow(self.exponent) }),
            (0, _) => format!("{lhs} = {inner}"),
            _ => format!("{lhs} = {}·({inner})", pow(self.exponent)),
        }
    }

    /// Coefficients of the right-hand side in x_i, lowest degree first, with
    /// a_{ij} the elementary symmetric functions of `params`.
    pub fn coefficients(&self, params: &[Q]) -> Result<Vec<Q>> {
        if params.len() != self.l as usize {
            return Err(Error::invalid(format!("expected {} parameters", self.l)));
        }
        let e = elementary_symmetric(params);
        let deg = self.exponent as usize + self.l as usize;
        let mut out = vec![Q::zero(); deg + 1];
        for (j, a) in e.iter().enumerate() {
            out[deg - j] = a.clone();
        }
        Ok(out)
    }
}

/// e_0, …, e_k of the given values.
pub fn elementary_symmetric(t: &[Q]) -> Vec<Q> {
    let mut e = vec![Q::one()];
    for x in t {
        let mut next = e.clone();
        next.push(Q::zero());
        for j in 1..next.len() {
            next[j] += x * &e[j - 1];
        }
        e = next;
    }
    e
}

pub fn family_equations(spec: &ChainSpec) -> Result<Vec<ChainEquation>> {
    let c = build_chain(spec)?;
    let mut out = Vec::new();
    for i in 1..=c.n {
        let e = -c.self_int[i] - c.blowups[i] as i64;
        if e < 0 {
            return Err(Error::invalid(format!("negative exponent {e} at curve {i}")));
        }
        out.push(ChainEquation { index: i, exponent: e, l: c.blowups[i] });
    }
    Ok(out)
}

/// Cyclic quotient singularity 1/r(1, a) with 0 ≤ a < r, gcd(r, a) = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuotientType {
    pub r: i64,
    pub a: i64,
}

impl QuotientType {
    pub fn new(r: i64, a: i64) -> QuotientType {
        QuotientType { r, a: a.rem_euclid(r) }
    }

    /// Same singularity with the coordinates exchanged: 1/r(1, a⁻¹).
    pub fn swapped(self) -> QuotientType {
        if self.r == 1 {
            return self;
        }
        let inv = (1..self.r).find(|b| (b * self.a).rem_euclid(self.r) == 1).expect("a is a unit mod r");
        QuotientType::new(self.r, inv)
    }

    /// Equality as singularities, allowing the coordinate swap.
    pub fn isomorphic(self, o: QuotientType) -> bool {
        self == o || self.swapped() == o
    }

    pub fn format(self) -> String {
        format!("1/{}(1,{})", self.r, self.a)
    }
}

/// Normal form of a strictly convex cone ⟨u, w⟩: a basis in which it is
/// ⟨(0,1), (r,-a)⟩, with 0 ≤ a < r. As a cone of a fan this is 1/r(1,a).
pub fn cone_type(u: LatticeVector, w: LatticeVector) -> Result<QuotientType> {
    let (u, _) = primitive(u)?;
    let (w, _) = primitive(w)?;
    let d = wedge(w, u);
    if d == 0 {
        return Err(Error::invalid("cone is not strictly convex"));
    }
    // e1 with wedge(e1, u) = sign(d), then w = r e1 + y u
    let s = d.signum();
    let g = u.x.extended_gcd(&u.y);
    // g.x·u.x + g.y·u.y = 1, so e1 = s·(g.y, -g.x) has wedge(e1, u) = s
    let e1 = LatticeVector::new(s * g.y, -s * g.x);
    debug_assert_eq!(wedge(e1, u), s);
    let r = d.abs();
    // w = r e1 + y u; wedge(w, e1) = y wedge(u, e1) = -s y
    let y = -wedge(w, e1) * s;
    Ok(QuotientType::new(r, -y))
}

/// Type of the affine toric surface Spec k[C ∩ M] of a cone C of M.
pub fn semigroup_type(u: LatticeVector, w: LatticeVector) -> Result<QuotientType> {
    let t = cone_type(u, w)?;
    Ok(QuotientType::new(t.r, t.r - t.a))
}

/// Developed B: v_0 = m_0, v_1 = m_1 and v_{i-1} + v_{i+1} = -D_i² v_i.
pub fn develop(chain: &Chain) -> Vec<LatticeVector> {
    let mut v = vec![chain.rays[0], chain.rays[1]];
    for i in 1..=chain.n {
        let next = v[i].scale(-chain.self_int[i]) - v[i - 1];
        v.push(next);
    }
    v
}

/// Type (r, a) of the developed cone σ = ⟨v_0, v_{n+1}⟩ in the normal form
/// ⟨(0,1), (r,-a)⟩, i.e. the singularity obtained by contracting D_1..D_n.
/// The ring k[σ ∩ M] is then 1/r(1, r-a).
pub fn dual_singularity_type(spec: &ChainSpec) -> Result<QuotientType> {
    let c = build_chain(spec)?;
    if c.blowups.iter().all(|l| *l == 0) {
        return Err(Error::invalid("no blowups: the developed cone is a half-plane"));
    }
    let v = develop(&c);
    for (i, vi) in v.iter().enumerate().skip(1) {
        if wedge(v[0], *vi) <= 0 {
            return Err(Error::invalid(format!("developed cone is not strictly convex (ray {i})")));
        }
    }
    cone_type(v[0], v[c.n + 1])
}

/// T-singularity 1/(d n²)(1, d n a - 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TSingularity {
    pub d: i64,
    pub n: i64,
    pub a: i64,
}

impl TSingularity {
    pub fn quotient_type(self) -> QuotientType {
        let r = self.d * self.n * self.n;
        QuotientType::new(r, self.d * self.n * self.a - 1)
    }
}

#[derive(Clone, Debug)]
pub struct PResolution {
    /// Vertex of Ξ on ray ρ_i, as (i, developed point v_i/α_i).
    pub vertices: Vec<(usize, (Q, Q))>,
    pub singularities: Vec<TSingularity>,
    /// -E'_j² of the strict transforms of the exceptional curves on the
    /// minimal resolution, one per bounded edge.
    pub edge_self_int: Vec<i64>,
    /// K·C > 0 for each exceptional curve C (bounded edge).
    pub k_ample: Vec<bool>,
    pub pair_dim: i64,
    pub sing_dim: i64,
}

impl PResolution {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "vertices": self.vertices.iter().map(|(i, (x, y))| json!({"ray": i, "point": [fmt_q(x), fmt_q(y)]})).collect::<Vec<_>>(),
            "singularities": self.singularities.iter().map(|t| json!({
                "d": t.d, "n": t.n, "a": t.a, "type": t.quotient_type().format(),
            })).collect::<Vec<_>>(),
            "edge_self_intersections": self.edge_self_int.iter().map(|b| -b).collect::<Vec<_>>(),
            "k_ample": self.k_ample,
            "pair_dim": self.pair_dim,
            "sing_dim": self.sing_dim,
        })
    }

    pub fn format(&self) -> String {
        let mut s = String::new();
        for ((i, (x, y)), t) in self.vertices.iter().zip(&self.singularities) {
            let _ = writeln!(
                s,
                "vertex on ray {i} at ({}, {}): d={} n={} a={} type {}",
                fmt_q(x),
                fmt_q(y),
                t.d,
                t.n,
                t.a,
                t.quotient_type().format()
            );
        }
        let _ = writeln!(s, "exceptional curve self-intersections on the minimal resolution: {:?}", self.edge_self_int.iter().map(|b| -b).collect::<Vec<_>>());
        let _ = writeln!(s, "K relatively ample: {}", self.k_ample.iter().all(|b| *b));
        let _ = write!(s, "pair component dimension {}, singularity component dimension {}", self.pair_dim, self.sing_dim);
        s
    }
}

fn qpoint(v: LatticeVector, den: i64) -> (Q, Q) {
    (Q::new(v.x.into(), den.into()), Q::new(v.y.into(), den.into()))
}

fn qwedge(a: &(Q, Q), b: &(Q, Q)) -> Q {
    &a.0 * &b.1 - &a.1 * &b.0
}

/// Primitive integral vector along a rational direction.
fn primitive_direction(d: &(Q, Q)) -> Result<LatticeVector> {
    let l = d.0.denom().lcm(d.1.denom());
    let x = (&d.0 * Q::from_integer(l.clone())).to_integer();
    let y = (&d.1 * Q::from_integer(l)).to_integer();
    let to = |b: num::BigInt| -> Result<i64> { i64::try_from(b).map_err(|_| Error::invalid("coordinates too large")) };
    Ok(primitive(LatticeVector::new(to(x)?, to(y)?))?.0)
}

/// Neighbour of ray `b` inside the cone ⟨a, b⟩ (counterclockwise from a to b)
/// in its minimal resolution.
fn neighbour_of_end(a: LatticeVector, b: LatticeVector) -> LatticeVector {
    // points u with wedge(u, b) = 1 form u0 + t·b; take the least t with u in the cone
    let g = b.x.extended_gcd(&b.y);
    // wedge((g.y, -g.x), b) = g.y·b.y + g.x·b.x = 1
    let u0 = LatticeVector::new(g.y, -g.x);
    let det = wedge(a, b);
    let t = Integer::div_ceil(&-wedge(a, u0), &det);
    u0 + b.scale(t)
}

/// Neighbour of ray `a` inside ⟨a, b⟩.
fn neighbour_of_start(a: LatticeVector, b: LatticeVector) -> LatticeVector {
    let m = |v: LatticeVector| LatticeVector::new(v.x, -v.y);
    m(neighbour_of_end(m(b), m(a)))
}

pub fn p_resolution(spec: &ChainSpec) -> Result<PResolution> {
    let c = build_chain(spec)?;
    if c.blowups.iter().all(|l| *l == 0) {
        return Err(Error::invalid("all l_i = 0: no singularity to resolve"));
    }
    let v = develop(&c);
    for (i, vi) in v.iter().enumerate().skip(1) {
        if wedge(v[0], *vi) <= 0 {
            return Err(Error::invalid(format!("developed cone is not strictly convex (ray {i})")));
        }
    }
    let idx: Vec<usize> = (1..=c.n).filter(|i| c.blowups[*i] > 0).collect();
    let pts: Vec<(Q, Q)> = idx.iter().map(|i| qpoint(v[*i], c.alpha[*i])).collect();
    // the points v_i/α_i with l_i = 0 lie on the boundary edges
    for i in 1..=c.n {
        if c.blowups[i] > 0 {
            continue;
        }
        let p = qpoint(v[i], c.alpha[i]);
        let (Some(lo), Some(hi)) = (idx.iter().rposition(|j| *j < i), idx.iter().position(|j| *j > i)) else {
            continue;
        };
        let d1 = (&p.0 - &pts[lo].0, &p.1 - &pts[lo].1);
        let d2 = (&pts[hi].0 - &pts[lo].0, &pts[hi].1 - &pts[lo].1);
        if !qwedge(&d1, &d2).is_zero() {
            return Err(Error::internal("boundary of Ξ bends at a ray without blowups"));
        }
    }
    // oriented boundary directions: in from infinity along -v_0, out along v_{n+1}
    let r = idx.len();
    let mut dirs: Vec<LatticeVector> = vec![-v[0]];
    for k in 0..r.saturating_sub(1) {
        let d = (&pts[k + 1].0 - &pts[k].0, &pts[k + 1].1 - &pts[k].1);
        dirs.push(primitive_direction(&d)?);
    }
    dirs.push(v[c.n + 1]);
    // the boundary runs counterclockwise with Ξ on its right; inward normals
    // therefore turn clockwise, and the normal cone at vertex j is ⟨n_{j+1}, n_j⟩
    let normal = |d: LatticeVector| LatticeVector::new(d.y, -d.x);
    let normals: Vec<LatticeVector> = dirs.iter().map(|d| normal(*d)).collect();
    let mut singularities = Vec::new();
    let g = |m: LatticeVector| -m.dot(c.rays[0]);
    for i in &idx {
        let n_i = c.alpha[*i];
        let a_i = g(c.rays[*i]).rem_euclid(n_i);
        singularities.push(TSingularity { d: c.blowups[*i] as i64, n: n_i, a: a_i });
    }
    // bounded edge k joins vertices k and k+1; vertex k sits between edges k and k+1
    let mut edge_self_int = Vec::new();
    let mut k_ample = Vec::new();
    for k in 1..r {
        let e = normals[k];
        let before = neighbour_of_start(e, normals[k - 1]);
        let after = neighbour_of_end(normals[k + 1], e);
        let s = before + after;
        let b = if e.x != 0 { s.x / e.x } else { s.y / e.y };
        if e.scale(b) != s {
            return Err(Error::internal("resolution neighbours are not balanced"));
        }
        edge_self_int.push(b);
        k_ample.push(k_positive(&pts[k - 1], &pts[k], dirs[k - 1], dirs[k], dirs[k + 1]));
    }
    let pair_dim: i64 = singularities.iter().map(|t| t.d).sum();
    let s_count = singularities.iter().filter(|t| t.n == 1).count() as i64;
    let sing_dim = pair_dim - s_count + edge_self_int.iter().map(|b| b - 1).sum::<i64>();
    let vertices = idx.iter().copied().zip(pts).collect();
    Ok(PResolution { vertices, singularities, edge_self_int, k_ample, pair_dim, sing_dim })
}

/// K·C > 0 for the curve of the edge from p0 to p1: the lines
/// p0 + ℝ(u1 - u0) and p1 + ℝ(u2 - u1) meet strictly on the far side of the edge.
fn k_positive(p0: &(Q, Q), p1: &(Q, Q), u0: LatticeVector, u1: LatticeVector, u2: LatticeVector) -> bool {
    let a = u1 - u0;
    let b = u2 - u1;
    let det = wedge(a, b);
    if det == 0 {
        return false;
    }
    // p0 + s a = p1 + t b  ⇒  s = wedge(p1 - p0, b) / wedge(a, b)
    let d = (&p1.0 - &p0.0, &p1.1 - &p0.1);
    let s = qwedge(&d, &(q(b.x), q(b.y))) / q(det);
    let x = (&p0.0 + &s * q(a.x), &p0.1 + &s * q(a.y));
    // Ξ is to the right of the edge direction u1
    let rel = (&x.0 - &p0.0, &x.1 - &p0.1);
    qwedge(&(q(u1.x), q(u1.y)), &rel).is_positive()
}

/// r/q for the Hirzebruch–Jung continued fraction [b_1, …, b_k] = b_1 - 1/(b_2 - …).
pub fn hj_fraction(b: &[i64]) -> Option<(i64, i64)> {
    // evaluate from the end: x = b_k, x = b_{j} - 1/x
    let mut num: i64 = 1;
    let mut den: i64 = 0;
    for bj in b.iter().rev() {
        // new = bj - den/num = (bj·num - den)/num
        let nn = bj * num - den;
        den = num;
        num = nn;
        if num <= 0 {
            return None;
        }
    }
    Some((num, den))
}

/// Hirzebruch–Jung expansion of r/q with 0 < q < r.
pub fn hj_expansion(r: i64, qv: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let (mut a, mut b) = (r, qv);
    while b > 0 {
        let c = (a + b - 1) / b;
        out.push(c);
        let rem = c * b - a;
        a = b;
        b = rem;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_n1(l: u32) -> ChainSpec {
        ChainSpec::new(&[[1, 0], [0, 1], [-1, 0]], &[l])
    }

    #[test]
    fn single_curve_with_four_blowups() {
        let eqs = family_equations(&chain_n1(4)).unwrap();
        assert_eq!(eqs, vec![ChainEquation { index: 1, exponent: 0, l: 4 }]);
        assert_eq!(eqs[0].format(true), "x0·x2 = x1^4 + a1·x1^3 + a2·x1^2 + a3·x1 + a4");
        assert_eq!(dual_singularity_type(&chain_n1(4)).unwrap(), QuotientType { r: 4, a: 1 });
        let p = p_resolution(&chain_n1(4)).unwrap();
        assert_eq!(p.singularities, vec![TSingularity { d: 4, n: 1, a: 0 }]);
        assert_eq!(p.singularities[0].quotient_type(), QuotientType { r: 4, a: 3 });
        assert_eq!(p.pair_dim, 4);
        assert_eq!(p.sing_dim, 3);
        assert_eq!(dual_singularity_type(&chain_n1(1)).unwrap().r, 1);
        assert!(dual_singularity_type(&chain_n1(0)).is_err());
        assert!(p_resolution(&chain_n1(0)).is_err());
    }

    #[test]
    fn toric_chain_equations() {
        let spec = ChainSpec::new(&[[1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0]], &[0, 0, 0]);
        let eqs = family_equations(&spec).unwrap();
        let c = build_chain(&spec).unwrap();
        for e in &eqs {
            assert_eq!(e.exponent, -c.self_int[e.index]);
            assert_eq!(e.coefficients(&[]).unwrap().last().unwrap(), &Q::one());
        }
    }

    #[test]
    fn cone_normal_form() {
        assert_eq!(cone_type(LatticeVector::new(1, 0), LatticeVector::new(-1, 4)).unwrap(), QuotientType { r: 4, a: 1 });
        assert_eq!(cone_type(LatticeVector::new(1, 0), LatticeVector::new(-3, 5)).unwrap(), QuotientType { r: 5, a: 3 });
        assert_eq!(hj_fraction(&[2, 3]), Some((5, 3)));
        assert_eq!(hj_expansion(5, 3), vec![2, 3]);
    }

    #[test]
    fn elementary_symmetric_values() {
        let e = elementary_symmetric(&[q(1), q(2), q(3)]);
        assert_eq!(e, vec![q(1), q(6), q(11), q(6)]);
    }

    fn random_chains(count: usize, seed: u64) -> Vec<ChainSpec> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < count {
            let mut rays = vec![LatticeVector::new(1, 0), LatticeVector::new(0, 1), LatticeVector::new(-1, 0)];
            for _ in 0..rng.gen_range(0..4) {
                let i = rng.gen_range(0..rays.len() - 1);
                let m = rays[i] + rays[i + 1];
                rays.insert(i + 1, m);
            }
            let n = rays.len() - 2;
            let blowups: Vec<u32> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let spec = ChainSpec { fan_rays: rays, blowups, proper_over_line: true };
            if family_equations(&spec).is_ok() && p_resolution(&spec).is_ok() {
                out.push(spec);
            }
        }
        out
    }

    /// Tangent cone of Ξ at each vertex, read off the vertex coordinates.
    fn tangent_cone_types(p: &PResolution, v: &[LatticeVector]) -> Vec<QuotientType> {
        let pts: Vec<&(Q, Q)> = p.vertices.iter().map(|(_, x)| x).collect();
        let r = pts.len();
        let mut out = Vec::new();
        for j in 0..r {
            let back = if j == 0 {
                v[0]
            } else {
                primitive_direction(&(&pts[j - 1].0 - &pts[j].0, &pts[j - 1].1 - &pts[j].1)).unwrap()
            };
            let fwd = if j + 1 == r {
                *v.last().unwrap()
            } else {
                primitive_direction(&(&pts[j + 1].0 - &pts[j].0, &pts[j + 1].1 - &pts[j].1)).unwrap()
            };
            out.push(semigroup_type(back, fwd).unwrap());
        }
        out
    }

    #[test]
    fn vertex_singularities_match_tangent_cones() {
        for spec in random_chains(40, 7) {
            let c = build_chain(&spec).unwrap();
            let v = develop(&c);
            let p = p_resolution(&spec).unwrap();
            let cones = tangent_cone_types(&p, &v);
            for (t, cone) in p.singularities.iter().zip(cones) {
                let ty = t.quotient_type();
                if ty.r == 1 {
                    assert_eq!(cone.r, 1, "{spec:?}");
                } else {
                    assert!(ty.isomorphic(cone), "{spec:?}: {} vs {}", ty.format(), cone.format());
                }
            }
        }
    }

    #[test]
    fn resolution_chain_matches_continued_fraction() {
        for spec in random_chains(40, 11) {
            let c = build_chain(&spec).unwrap();
            let v = develop(&c);
            let z = semigroup_type(v[0], v[c.n + 1]).unwrap();
            let target = if z.r == 1 { vec![] } else { hj_expansion(z.r, z.a) };
            let p = p_resolution(&spec).unwrap();
            let chains: Vec<Vec<i64>> = p
                .singularities
                .iter()
                .map(|t| {
                    let ty = t.quotient_type();
                    if ty.r == 1 { vec![] } else { hj_expansion(ty.r, ty.a) }
                })
                .collect();
            let r = chains.len();
            let mut found = false;
            for mask in 0..(1u32 << r) {
                let mut full = Vec::new();
                for (j, ch) in chains.iter().enumerate() {
                    let mut ch = ch.clone();
                    if mask & (1 << j) != 0 {
                        ch.reverse();
                    }
                    full.extend(ch);
                    if j + 1 < r {
                        full.push(p.edge_self_int[j]);
                    }
                }
                let rev: Vec<i64> = full.iter().rev().copied().collect();
                if full == target || rev == target {
                    found = true;
                    break;
                }
            }
            assert!(found, "{spec:?}: chains {chains:?} edges {:?} target {target:?}", p.edge_self_int);
            assert_eq!(p.pair_dim, spec.blowups.iter().map(|l| *l as i64).sum::<i64>());
            assert!(p.k_ample.iter().all(|b| *b), "{spec:?}");
        }
    }

    #[test]
    fn contraction_type_matches_self_intersections() {
        for spec in random_chains(40, 3) {
            let c = build_chain(&spec).unwrap();
            let t = dual_singularity_type(&spec).unwrap();
            let b: Vec<i64> = (1..=c.n).map(|i| -c.self_int[i]).collect();
            let (r, a) = hj_fraction(&b).unwrap();
            assert_eq!((t.r, t.a), (r, a.rem_euclid(r.max(1))), "{spec:?}");
        }
    }

    #[test]
    fn two_curves_one_blowup_each() {
        let spec = ChainSpec::new(&[[1, 0], [0, 1], [-1, 1], [-1, 0]], &[1, 1]);
        let p = p_resolution(&spec).unwrap();
        assert_eq!(p.edge_self_int, vec![3]);
        assert_eq!(p.k_ample, vec![true]);
        assert_eq!(p.sing_dim, 2);
    }
}
