//! Curve classes H_2(Ȳ) ⊕ Z^{E}, the piecewise linear function φ̄ with values
//! in them, boundary weights and the truncation degree functional.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use num::Signed;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lattice::{wedge, LatticeVector};
use crate::rational::{fmt_q, q, qf, Q};
use crate::tropical_pair::TropicalPair;

/// Class p^*β̄ + Σ c_ij E_ij, with β̄ stored as its intersection numbers
/// with the toric boundary divisors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CurveClass {
    pub toric: Vec<i64>,
    pub exc: Vec<i64>,
}

impl CurveClass {
    pub fn zero(n: usize, n_exc: usize) -> Self {
        CurveClass { toric: vec![0; n], exc: vec![0; n_exc] }
    }

    pub fn zero_for(pair: &TropicalPair) -> Self {
        Self::zero(pair.n, pair.n_exc())
    }

    pub fn is_zero(&self) -> bool {
        self.toric.iter().all(|&a| a == 0) && self.exc.iter().all(|&c| c == 0)
    }

    pub fn scale(&self, k: i64) -> Self {
        CurveClass {
            toric: self.toric.iter().map(|a| a * k).collect(),
            exc: self.exc.iter().map(|c| c * k).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &CurveClass, k: i64) {
        if k == 0 {
            return;
        }
        for (a, b) in self.toric.iter_mut().zip(&other.toric) {
            *a += b * k;
        }
        for (a, b) in self.exc.iter_mut().zip(&other.exc) {
            *a += b * k;
        }
    }

    /// Number of exceptional curves subtracted, -Σ c_ij.
    pub fn exc_deficit(&self) -> i64 {
        -self.exc.iter().sum::<i64>()
    }
}

impl Add for &CurveClass {
    type Output = CurveClass;
    fn add(self, o: &CurveClass) -> CurveClass {
        let mut r = self.clone();
        r.add_scaled(o, 1);
        r
    }
}

impl Sub for &CurveClass {
    type Output = CurveClass;
    fn sub(self, o: &CurveClass) -> CurveClass {
        let mut r = self.clone();
        r.add_scaled(o, -1);
        r
    }
}

impl Neg for &CurveClass {
    type Output = CurveClass;
    fn neg(self) -> CurveClass {
        self.scale(-1)
    }
}

impl AddAssign<&CurveClass> for CurveClass {
    fn add_assign(&mut self, o: &CurveClass) {
        self.add_scaled(o, 1);
    }
}

#[derive(Deserialize)]
struct RawClass {
    toric: Vec<i64>,
    #[serde(default)]
    exc: BTreeMap<String, i64>,
}

impl CurveClass {
    /// JSON form {"toric":[..], "exc":{"i,j":c}}.
    pub fn to_json(&self, pair: &TropicalPair) -> serde_json::Value {
        let mut exc = serde_json::Map::new();
        for (k, c) in self.exc.iter().enumerate() {
            if *c != 0 {
                let (i, j) = pair.exc_label(k);
                exc.insert(format!("{i},{j}"), serde_json::json!(c));
            }
        }
        serde_json::json!({ "toric": self.toric, "exc": exc })
    }

    pub fn from_json(pair: &TropicalPair, v: &serde_json::Value) -> Result<CurveClass> {
        let raw: RawClass =
            serde_json::from_value(v.clone()).map_err(|e| Error::invalid(format!("class: {e}")))?;
        if raw.toric.len() != pair.n {
            return Err(Error::invalid("class: toric part has wrong length"));
        }
        let mut c = CurveClass { toric: raw.toric, exc: vec![0; pair.n_exc()] };
        for (key, val) in raw.exc {
            let (i, j) = key
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
                .ok_or_else(|| Error::invalid(format!("class: bad exceptional label {key:?}")))?;
            if i >= pair.n || j >= pair.blowups[i] {
                return Err(Error::invalid(format!("class: no exceptional curve {i},{j}")));
            }
            c.exc[pair.exc_index(i, j)] = val;
        }
        if !in_relation_kernel(pair, &c.toric) {
            return Err(Error::invalid("class: toric part violates the linear relations"));
        }
        Ok(c)
    }
}

fn in_relation_kernel(pair: &TropicalPair, a: &[i64]) -> bool {
    let s = a
        .iter()
        .zip(&pair.rays)
        .fold(LatticeVector::ZERO, |acc, (c, r)| acc + r.scale(*c));
    s.is_zero()
}

/// Class of the toric surface with intersection numbers `a` against the
/// toric boundary.
pub fn toric_class_from_relation(pair: &TropicalPair, a: &[i64]) -> Result<CurveClass> {
    if a.len() != pair.n {
        return Err(Error::invalid("tuple length differs from the number of rays"));
    }
    if !in_relation_kernel(pair, a) {
        return Err(Error::invalid("tuple is not a linear relation among the rays"));
    }
    Ok(CurveClass { toric: a.to_vec(), exc: vec![0; pair.n_exc()] })
}

/// p^*[D̄_k].
pub fn toric_boundary_class(pair: &TropicalPair, k: usize) -> CurveClass {
    let mut c = CurveClass::zero_for(pair);
    c.toric[pair.prev(k)] += 1;
    c.toric[pair.next(k)] += 1;
    c.toric[k] += pair.toric_self_int[k];
    c
}

/// [E_ij].
pub fn exceptional_class(pair: &TropicalPair, i: usize, j: usize) -> CurveClass {
    let mut c = CurveClass::zero_for(pair);
    c.exc[pair.exc_index(i, j)] = 1;
    c
}

/// [D_k] = p^*[D̄_k] - Σ_j E_kj.
pub fn boundary_class(pair: &TropicalPair, k: usize) -> CurveClass {
    let mut c = toric_boundary_class(pair, k);
    for j in 0..pair.blowups[k] {
        c.exc[pair.exc_index(k, j)] -= 1;
    }
    c
}

/// φ̄ on the plane cone `cone` evaluated at `m`, normalized to vanish on the
/// last cone ⟨m_{n-1}, m_0⟩. The linear extension is used, so `m` need not
/// lie in the cone.
pub fn phi_value_linear(pair: &TropicalPair, cone: usize, m: LatticeVector) -> CurveClass {
    let mut c = CurveClass::zero_for(pair);
    if cone == pair.n - 1 {
        return c;
    }
    for k in 0..=cone {
        let w = wedge(pair.rays[k], m);
        if w != 0 {
            c.add_scaled(&toric_boundary_class(pair, k), w);
        }
    }
    c
}

/// φ̄_σ(m) for m in the closed plane cone σ = ⟨m_i, m_{i+1}⟩.
pub fn phi_value(pair: &TropicalPair, cone: usize, m: LatticeVector) -> Result<CurveClass> {
    let k = pair.plane_coords(cone, m);
    if k.x < 0 || k.y < 0 {
        return Err(Error::invalid(format!("vector {m} is outside cone {cone}")));
    }
    Ok(phi_value_linear(pair, cone, m))
}

/// φ̄ evaluated at its own cone.
pub fn phi_bar(pair: &TropicalPair, m: LatticeVector) -> CurveClass {
    if m.is_zero() {
        return CurveClass::zero_for(pair);
    }
    phi_value_linear(pair, pair.plane_cone_of(m), m)
}

/// Intersection numbers with the boundary divisors D_i of Y.
pub fn boundary_weights(pair: &TropicalPair, c: &CurveClass) -> Vec<i64> {
    (0..pair.n)
        .map(|i| {
            let mut w = c.toric[i];
            for j in 0..pair.blowups[i] {
                w += c.exc[pair.exc_index(i, j)];
            }
            w
        })
        .collect()
}

/// λ(C) = C·p^*H̄ + ε Σ c_ij: positive on the relevant curve classes and used
/// as the truncation grading.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeFunctional {
    pub h: Vec<i64>,
    pub epsilon: Q,
}

impl DegreeFunctional {
    pub fn new(pair: &TropicalPair, epsilon: Option<Q>) -> Result<Self> {
        let eps = match epsilon {
            Some(e) => {
                if !e.is_positive() {
                    return Err(Error::invalid("epsilon must be positive"));
                }
                e
            }
            None => default_epsilon(pair),
        };
        Ok(DegreeFunctional { h: pair.ample.clone(), epsilon: eps })
    }

    pub fn degree(&self, c: &CurveClass) -> Q {
        let t: i64 = c.toric.iter().zip(&self.h).map(|(a, h)| a * h).sum();
        let e: i64 = c.exc.iter().sum();
        q(t) + &self.epsilon * q(e)
    }

    /// Degree of the toric part only.
    pub fn toric_degree(&self, c: &CurveClass) -> i64 {
        c.toric.iter().zip(&self.h).map(|(a, h)| a * h).sum()
    }
}

pub fn default_epsilon(pair: &TropicalPair) -> Q {
    qf(1, 1 + pair.total_blowups() as i64)
}

/// Expresses a class as Σ x_i [D_i] + Σ y_ij [E_ij] with minimal Σ|x| + Σ|y|
/// (ties broken lexicographically). The representation is unique up to the
/// rank-2 lattice of linear relations among the boundary divisors.
pub fn boundary_presentation(pair: &TropicalPair, c: &CurveClass) -> (Vec<i64>, Vec<i64>) {
    let n = pair.n;
    // Particular solution: the D̄_k with k ∉ {0, n-1} form a basis of H_2(Ȳ);
    // solve Σ x_k (D̄_k·D̄_ρ) = a_ρ by the recursion on the fan.
    let x0 = solve_toric_coordinates(pair, &c.toric);
    // C = Σ x_k D_k + Σ y_kj E_kj and D_k = p^*D̄_k - Σ_j E_kj, so y = exc + x.
    let mut y0 = c.exc.clone();
    for k in 0..n {
        for j in 0..pair.blowups[k] {
            y0[pair.exc_index(k, j)] += x0[k];
        }
    }
    // Σ⟨u,m_k⟩ D̄_k = 0 gives the kernel x_k = y_kj = ⟨u, m_k⟩.
    let cost = |u: LatticeVector| -> (i64, Vec<i64>, Vec<i64>) {
        let x: Vec<i64> = (0..n).map(|k| x0[k] + u.dot(pair.rays[k])).collect();
        let mut y = y0.clone();
        for k in 0..n {
            for j in 0..pair.blowups[k] {
                y[pair.exc_index(k, j)] += u.dot(pair.rays[k]);
            }
        }
        let s = x.iter().map(|v| v.abs()).sum::<i64>() + y.iter().map(|v| v.abs()).sum::<i64>();
        (s, x, y)
    };
    let bound = x0.iter().map(|v| v.abs()).max().unwrap_or(0) + 2;
    let mut best: Option<(i64, Vec<i64>, Vec<i64>)> = None;
    for ux in -bound..=bound {
        for uy in -bound..=bound {
            let cand = cost(LatticeVector::new(ux, uy));
            let better = match &best {
                None => true,
                Some(b) => (cand.0, &cand.1, &cand.2) < (b.0, &b.1, &b.2),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    let (_, x, y) = best.expect("nonempty search");
    (x, y)
}

/// Coefficients x with Σ x_k [D̄_k] having intersection tuple `a`, x_0 = x_{n-1} = 0.
fn solve_toric_coordinates(pair: &TropicalPair, a: &[i64]) -> Vec<i64> {
    let n = pair.n;
    // a_ρ = x_{ρ-1} + D̄_ρ^2 x_ρ + x_{ρ+1}; with x_{n-1} = x_0 = 0, the
    // equations for ρ = 0, 1, .. determine x_1, x_2, .. successively.
    let mut x = vec![0i64; n];
    // ρ = 0: a_0 = x_{n-1} + D̄_0^2 x_0 + x_1
    x[1] = a[0];
    for r in 1..n.saturating_sub(2) {
        x[r + 1] = a[r] - x[r - 1] - pair.toric_self_int[r] * x[r];
    }
    x
}

/// Pretty form in the boundary presentation, e.g. "D1+E4,1".
pub fn format_boundary(pair: &TropicalPair, c: &CurveClass) -> String {
    if c.is_zero() {
        return "0".to_string();
    }
    let (x, y) = boundary_presentation(pair, c);
    let mut parts: Vec<String> = Vec::new();
    let mut push = |coef: i64, name: String| {
        if coef == 0 {
            return;
        }
        let sign = if coef < 0 { "-" } else { "+" };
        let mag = coef.abs();
        let body = if mag == 1 { name } else { format!("{mag}{name}") };
        parts.push(format!("{sign}{body}"));
    };
    for (k, v) in x.iter().enumerate() {
        push(*v, format!("D{}", k + 1));
    }
    for (k, v) in y.iter().enumerate() {
        let (i, j) = pair.exc_label(k);
        push(*v, format!("E{}{}", i + 1, j + 1));
    }
    let s = parts.concat();
    s.strip_prefix('+').map(str::to_string).unwrap_or(s)
}

pub fn fmt_degree(d: &Q) -> String {
    fmt_q(d)
}

impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}|{:?}", self.toric, self.exc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tropical_pair::{build_pair, PairSpec};

    fn m05() -> TropicalPair {
        build_pair(&PairSpec::new(&[[1, 0], [1, 1], [0, 1], [-1, 0], [0, -1]], &[0, 0, 0, 1, 1])).unwrap()
    }

    fn p1p1(l: &[u32]) -> TropicalPair {
        build_pair(&PairSpec::new(&[[1, 0], [0, 1], [-1, 0], [0, -1]], l)).unwrap()
    }

    #[test]
    fn toric_classes() {
        let p2 = build_pair(&PairSpec::new(&[[1, 0], [0, 1], [-1, -1]], &[0, 0, 0])).unwrap();
        let h = toric_class_from_relation(&p2, &[1, 1, 1]).unwrap();
        assert_eq!(h.toric, vec![1, 1, 1]);
        assert!(toric_class_from_relation(&p2, &[1, 0, 0]).is_err());
        let p = p1p1(&[0, 0, 0, 0]);
        let f = toric_class_from_relation(&p, &[0, 1, 0, 1]).unwrap();
        assert_eq!(boundary_weights(&p, &f), vec![0, 1, 0, 1]);
        assert!(toric_class_from_relation(&p, &[0, 0, 0, 0]).unwrap().is_zero());
    }

    #[test]
    fn phi_base_cone_and_bending() {
        let p = m05();
        let last = p.n - 1;
        assert!(phi_value(&p, last, p.rays[last]).unwrap().is_zero());
        assert!(phi_value(&p, last, p.rays[0]).unwrap().is_zero());
        // bending across ray k: difference is ⟨n_k, m⟩ [D̄_k]
        for k in 0..p.n {
            let minus = p.prev(k);
            let m = LatticeVector::new(3, -7);
            let d = &phi_value_linear(&p, k, m) - &phi_value_linear(&p, minus, m);
            assert_eq!(d, toric_boundary_class(&p, k).scale(wedge(p.rays[k], m)));
        }
        // φ̄ takes values in the relation kernel and is linear on each cone
        for c in 0..p.n {
            let u = p.rays[c];
            let v = p.rays[p.next(c)];
            let s = &phi_value(&p, c, u).unwrap() + &phi_value(&p, c, v).unwrap();
            assert_eq!(s, phi_value(&p, c, u + v).unwrap());
            assert!(in_relation_kernel(&p, &s.toric));
        }
    }

    #[test]
    fn phi_p1p1_opposite_rays() {
        let p = p1p1(&[0, 0, 0, 0]);
        let s = &phi_bar(&p, p.rays[0]) + &phi_bar(&p, p.rays[2]);
        // φ̄(m_1) + φ̄(m_3) - φ̄(m_1 + m_3) is the class with tuple (1,0,1,0)
        assert_eq!(s.toric, vec![1, 0, 1, 0]);
    }

    #[test]
    fn weights_examples() {
        let p = m05();
        let e = exceptional_class(&p, 3, 0);
        assert_eq!(boundary_weights(&p, &e), vec![0, 0, 0, 1, 0]);
        assert_eq!(boundary_weights(&p, &CurveClass::zero_for(&p)), vec![0; 5]);
        let d0 = boundary_class(&p, 0);
        assert_eq!(boundary_weights(&p, &d0), vec![-1, 1, 0, 0, 1]);
        for k in 0..5 {
            let w = boundary_weights(&p, &boundary_class(&p, k));
            assert_eq!(w[k], -1);
        }
    }

    #[test]
    fn degree_examples() {
        let p = m05();
        let f = DegreeFunctional::new(&p, None).unwrap();
        assert_eq!(f.degree(&exceptional_class(&p, 4, 0)), f.epsilon);
        for k in 0..5 {
            let expect = q(p.ample_degrees[k]) - q(p.blowups[k] as i64) * &f.epsilon;
            assert_eq!(f.degree(&boundary_class(&p, k)), expect);
        }
        let p2 = build_pair(&PairSpec::new(&[[1, 0], [0, 1], [-1, -1]], &[0, 0, 0])).unwrap();
        let f2 = DegreeFunctional::new(&p2, None).unwrap();
        let h = toric_class_from_relation(&p2, &[1, 1, 1]).unwrap();
        assert_eq!(f2.degree(&h), q(1));
    }

    #[test]
    fn presentation_roundtrip() {
        let p = m05();
        for k in 0..5 {
            let c = boundary_class(&p, k);
            assert_eq!(format_boundary(&p, &c), format!("D{}", k + 1));
        }
        let c = &boundary_class(&p, 2) + &exceptional_class(&p, 3, 0);
        assert_eq!(format_boundary(&p, &c), "D3+E41");
        // reconstruct from the presentation
        let c = &boundary_class(&p, 0).scale(2) - &boundary_class(&p, 3);
        let (x, y) = boundary_presentation(&p, &c);
        let mut r = CurveClass::zero_for(&p);
        for k in 0..5 {
            r.add_scaled(&boundary_class(&p, k), x[k]);
        }
        for (k, v) in y.iter().enumerate() {
            let (i, j) = p.exc_label(k);
            r.add_scaled(&exceptional_class(&p, i, j), *v);
        }
        assert_eq!(r, c);
    }
}
