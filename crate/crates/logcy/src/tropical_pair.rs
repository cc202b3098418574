//! The integral affine surface of a Looijenga pair, built from a toric model:
//! cones, chart transitions, the cone-wise identification with the plane,
//! monodromy, positivity of the boundary and Looijenga factorizations.

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{angular_cmp, primitive, wedge, IntegralMatrix, LatticeVector};
use crate::rational::{q, Q};

/// Toric model input: fan rays of a smooth complete fan (counterclockwise),
/// number of interior blowups on each boundary divisor, optional ample
/// divisor given by its coefficients on the boundary divisors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec {
    pub fan_rays: Vec<LatticeVector>,
    pub blowups: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ample: Option<Vec<i64>>,
}

impl PairSpec {
    pub fn new(rays: &[[i64; 2]], blowups: &[u32]) -> PairSpec {
        PairSpec {
            fan_rays: rays.iter().map(|r| LatticeVector::from(*r)).collect(),
            blowups: blowups.to_vec(),
            ample: None,
        }
    }
}

/// Which of the two affine structures: the singular surface B of the pair or
/// the plane of its toric model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    B,
    Bbar,
}

/// Tropicalization of a pair with its toric model.
#[derive(Clone, Debug)]
pub struct TropicalPair {
    pub spec: PairSpec,
    pub n: usize,
    pub rays: Vec<LatticeVector>,
    pub blowups: Vec<usize>,
    /// Self-intersections of the toric boundary divisors.
    pub toric_self_int: Vec<i64>,
    /// Self-intersections D_i^2 = toric_self_int_i - l_i.
    pub self_int: Vec<i64>,
    /// Coefficients of the ample divisor on the toric boundary.
    pub ample: Vec<i64>,
    /// Intersection numbers of the ample divisor with the toric boundary.
    pub ample_degrees: Vec<i64>,
    exc_offset: Vec<usize>,
    n_exc: usize,
}

/// Point of B (or the plane) in cone `cone` with coordinates a·v_cone + b·v_{cone+1}.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChartPoint {
    pub cone: usize,
    pub a: Q,
    pub b: Q,
}

/// Integral tangent vector in the basis of cone `cone`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TangentVector {
    pub cone: usize,
    pub v: LatticeVector,
}

/// Crossing ray i from cone i-1 into cone i: (a,b) ↦ (b - a·S, -a) with S the
/// self-intersection attached to ray i.
pub fn transport_tangent(s: i64, v: LatticeVector) -> LatticeVector {
    LatticeVector::new(v.y - v.x * s, -v.x)
}

/// Inverse of [`transport_tangent`]: cone i back to cone i-1.
pub fn transport_tangent_back(s: i64, v: LatticeVector) -> LatticeVector {
    LatticeVector::new(-v.y, v.x - v.y * s)
}

/// Matrix of [`transport_tangent`] on column vectors.
pub fn transport_matrix(s: i64) -> IntegralMatrix {
    IntegralMatrix::new(-s, 1, -1, 0)
}

/// Boundary positivity type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryType {
    Positive,
    Semidefinite,
    Definite,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: BoundaryType,
    /// For positive boundaries, integer coefficients of a combination of the
    /// boundary divisors with positive square.
    pub witness: Option<Vec<i64>>,
    pub witness_square: Option<i64>,
}

pub fn build_pair(spec: &PairSpec) -> Result<TropicalPair> {
    let n = spec.fan_rays.len();
    if n < 3 {
        return Err(Error::invalid(format!(
            "a smooth complete fan has at least 3 rays, got {n}"
        )));
    }
    if spec.blowups.len() != n {
        return Err(Error::invalid(format!(
            "blowups has length {}, expected {n}",
            spec.blowups.len()
        )));
    }
    let rays = spec.fan_rays.clone();
    for (i, r) in rays.iter().enumerate() {
        if r.is_zero() || primitive(*r)?.1 != 1 {
            return Err(Error::invalid(format!("fan ray {i} = {r} is not primitive")));
        }
    }
    for i in 0..n {
        let w = wedge(rays[i], rays[(i + 1) % n]);
        if w != 1 {
            return Err(Error::invalid(format!(
                "fan is not smooth and counterclockwise at rays {i},{}: wedge = {w}",
                (i + 1) % n
            )));
        }
    }
    // The rays must wind around the origin exactly once.
    let base = rays[0];
    let mut descents = 0;
    for i in 0..n {
        let (u, v) = (rays[i], rays[(i + 1) % n]);
        if angular_cmp(base, v, u) != std::cmp::Ordering::Greater {
            descents += 1;
        }
    }
    if descents != 1 {
        return Err(Error::invalid("fan rays wind around the origin more than once"));
    }
    let toric_self_int: Vec<i64> = (0..n)
        .map(|i| -wedge(rays[(i + n - 1) % n], rays[(i + 1) % n]))
        .collect();
    let blowups: Vec<usize> = spec.blowups.iter().map(|&l| l as usize).collect();
    let self_int: Vec<i64> = (0..n).map(|i| toric_self_int[i] - blowups[i] as i64).collect();
    let mut exc_offset = Vec::with_capacity(n);
    let mut acc = 0;
    for &l in &blowups {
        exc_offset.push(acc);
        acc += l;
    }
    let ample = match &spec.ample {
        Some(h) => {
            if h.len() != n {
                return Err(Error::invalid(format!("ample has length {}, expected {n}", h.len())));
            }
            h.clone()
        }
        None => default_ample(&rays, &toric_self_int)?,
    };
    let ample_degrees: Vec<i64> = (0..n)
        .map(|i| ample[(i + n - 1) % n] + toric_self_int[i] * ample[i] + ample[(i + 1) % n])
        .collect();
    if let Some(i) = ample_degrees.iter().position(|&d| d <= 0) {
        return Err(Error::invalid(format!(
            "ample divisor is not strictly convex: degree {} on boundary divisor {i}",
            ample_degrees[i]
        )));
    }
    Ok(TropicalPair {
        spec: spec.clone(),
        n,
        rays,
        blowups,
        toric_self_int,
        self_int,
        ample,
        ample_degrees,
        exc_offset,
        n_exc: acc,
    })
}

/// Ample divisor with positive degrees ℓ_i: start from ℓ = 1 and correct the
/// closing condition Σ ℓ_i m_i = 0 inside the cone containing the defect.
fn default_ample(rays: &[LatticeVector], dbar2: &[i64]) -> Result<Vec<i64>> {
    let n = rays.len();
    let mut ell = vec![1i64; n];
    let s = rays.iter().fold(LatticeVector::ZERO, |acc, r| acc + *r);
    if !s.is_zero() {
        let target = -s;
        let mut done = false;
        for j in 0..n {
            let (u, v) = (rays[j], rays[(j + 1) % n]);
            let a = wedge(target, v);
            let b = wedge(u, target);
            if a >= 0 && b >= 0 {
                ell[j] += a;
                ell[(j + 1) % n] += b;
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::internal("default ample: no cone contains the defect"));
        }
    }
    // h_{i-1} + D_i^2 h_i + h_{i+1} = ℓ_i, normalized by h_0 = h_1 = 0.
    let mut h = vec![0i64; n];
    for i in 1..n - 1 {
        h[i + 1] = ell[i] - h[i - 1] - dbar2[i] * h[i];
    }
    for i in 0..n {
        let d = h[(i + n - 1) % n] + dbar2[i] * h[i] + h[(i + 1) % n];
        if d != ell[i] {
            return Err(Error::internal("default ample: closing condition failed"));
        }
    }
    Ok(h)
}

impl TropicalPair {
    pub fn n_exc(&self) -> usize {
        self.n_exc
    }

    /// Flat index of the exceptional curve E_ij.
    pub fn exc_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j < self.blowups[i]);
        self.exc_offset[i] + j
    }

    /// Inverse of [`exc_index`].
    pub fn exc_label(&self, k: usize) -> (usize, usize) {
        for i in (0..self.n).rev() {
            if self.exc_offset[i] <= k && self.blowups[i] > 0 {
                return (i, k - self.exc_offset[i]);
            }
        }
        unreachable!("exceptional index out of range")
    }

    pub fn total_blowups(&self) -> usize {
        self.n_exc
    }

    pub fn next(&self, i: usize) -> usize {
        (i + 1) % self.n
    }

    pub fn prev(&self, i: usize) -> usize {
        (i + self.n - 1) % self.n
    }

    /// Self-intersection governing the affine structure across ray i.
    pub fn ray_self_int(&self, side: Side, i: usize) -> i64 {
        match side {
            Side::B => self.self_int[i],
            Side::Bbar => self.toric_self_int[i],
        }
    }

    pub fn transport_across_ray(&self, side: Side, i: usize, v: LatticeVector) -> LatticeVector {
        transport_tangent(self.ray_self_int(side, i), v)
    }

    /// Coordinates in the basis (m_i, m_{i+1}) of the plane cone i.
    pub fn plane_coords(&self, cone: usize, v: LatticeVector) -> LatticeVector {
        let (u, w) = (self.rays[cone], self.rays[self.next(cone)]);
        LatticeVector::new(wedge(v, w), wedge(u, v))
    }

    pub fn plane_vector(&self, cone: usize, c: LatticeVector) -> LatticeVector {
        self.rays[cone].scale(c.x) + self.rays[self.next(cone)].scale(c.y)
    }

    /// Cone of the plane fan containing `v`; a vector on ray i is assigned to cone i.
    pub fn plane_cone_of(&self, v: LatticeVector) -> usize {
        for c in 0..self.n {
            let k = self.plane_coords(c, v);
            if k.x > 0 && k.y >= 0 {
                return c;
            }
        }
        0
    }

    /// Cone-wise identification B ↔ plane for points.
    pub fn nu_point_to_plane(&self, p: &ChartPoint) -> (Q, Q) {
        let (u, w) = (self.rays[p.cone], self.rays[self.next(p.cone)]);
        (
            &p.a * q(u.x) + &p.b * q(w.x),
            &p.a * q(u.y) + &p.b * q(w.y),
        )
    }

    pub fn nu_point_from_plane(&self, x: &Q, y: &Q) -> Result<ChartPoint> {
        if x.is_zero() && y.is_zero() {
            return Err(Error::invalid("origin is not a point of B_0"));
        }
        for c in 0..self.n {
            let (u, w) = (self.rays[c], self.rays[self.next(c)]);
            let a = x * q(w.y) - y * q(w.x);
            let b = y * q(u.x) - x * q(u.y);
            if a.is_positive() && !b.is_negative() {
                return Ok(ChartPoint { cone: c, a, b });
            }
        }
        Err(Error::internal("point not in any cone"))
    }

    pub fn nu_tangent_to_plane(&self, t: TangentVector) -> LatticeVector {
        self.plane_vector(t.cone, t.v)
    }

    pub fn nu_tangent_from_plane(&self, cone: usize, v: LatticeVector) -> TangentVector {
        TangentVector { cone, v: self.plane_coords(cone, v) }
    }

    /// Composite of the chart transports around the cycle, cone 0 back to cone 0.
    pub fn cycle_transport(&self, side: Side) -> IntegralMatrix {
        let mut m = IntegralMatrix::IDENTITY;
        for k in 1..=self.n {
            let i = k % self.n;
            m = transport_matrix(self.ray_self_int(side, i)) * m;
        }
        m
    }

    /// Monodromy T with T(v_0) = v_n, T(v_1) = v_{n+1}, in the basis (v_0, v_1).
    pub fn monodromy(&self) -> IntegralMatrix {
        self.cycle_transport(Side::B)
            .inverse()
            .expect("transport matrices are unimodular")
    }

    /// Intersection matrix of the boundary cycle.
    pub fn intersection_matrix(&self) -> Vec<Vec<i64>> {
        let n = self.n;
        let mut m = vec![vec![0i64; n]; n];
        for i in 0..n {
            m[i][i] = self.self_int[i];
            m[i][self.next(i)] += 1;
            m[self.next(i)][i] += 1;
        }
        m
    }

    pub fn classify_boundary(&self) -> Classification {
        classify_form(&self.intersection_matrix())
    }

    /// Factors (w, k) of the inverse monodromy read off the blowups, in
    /// counterclockwise order starting after the base cone.
    pub fn looijenga_factors(&self) -> Vec<(LatticeVector, i64)> {
        let mut out = Vec::new();
        for k in 1..=self.n {
            let i = k % self.n;
            if self.blowups[i] > 0 {
                out.push((self.rays[i], self.blowups[i] as i64));
            }
        }
        out
    }

    /// Inverse monodromy expressed in the plane coordinates via the base cone.
    pub fn monodromy_inverse_in_plane(&self) -> IntegralMatrix {
        let basis = IntegralMatrix::from_columns(self.rays[0], self.rays[1]);
        basis * self.cycle_transport(Side::B) * basis.inverse().expect("unimodular basis")
    }
}

/// Transvection x ↦ x - k (w ∧ x) w.
pub fn transvection(w: LatticeVector, k: i64) -> IntegralMatrix {
    let c0 = LatticeVector::new(1, 0) - w.scale(k * wedge(w, LatticeVector::new(1, 0)));
    let c1 = LatticeVector::new(0, 1) - w.scale(k * wedge(w, LatticeVector::new(0, 1)));
    IntegralMatrix::from_columns(c0, c1)
}

/// Checks T^{-1} = T_r ⋯ T_1 with T_i the transvection of (w_i, k_i).
pub fn looijenga_check(t_inverse: &IntegralMatrix, factors: &[(LatticeVector, i64)]) -> Result<bool> {
    let mut m = IntegralMatrix::IDENTITY;
    for (w, k) in factors {
        if w.is_zero() || primitive(*w)?.1 != 1 {
            return Err(Error::invalid(format!("factor direction {w} is not primitive")));
        }
        if *k <= 0 {
            return Err(Error::invalid("factor multiplicity must be positive"));
        }
        m = transvection(*w, *k) * m;
    }
    Ok(m == *t_inverse)
}

/// Classifies the symmetric form by exact elimination: negative definite,
/// negative semidefinite, or not (with an integral witness of positive square).
pub fn classify_form(m: &[Vec<i64>]) -> Classification {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    // basis[k] expresses the current k-th coordinate vector in original coordinates
    let mut basis: Vec<Vec<Q>> = (0..n)
        .map(|i| (0..n).map(|j| q(i64::from(i == j))).collect())
        .collect();
    let mut alive: Vec<bool> = vec![true; n];
    let mut kernel_found = false;
    let witness_of = |v: &Vec<Q>| -> Vec<i64> {
        let den = v.iter().fold(num::BigInt::from(1), |acc, x| num::integer::lcm(acc, x.denom().clone()));
        v.iter()
            .map(|x| {
                let y = x * Q::from_integer(den.clone());
                i64::try_from(y.to_integer()).unwrap_or(0)
            })
            .collect()
    };
    let square = |v: &[i64]| -> i64 {
        let mut s = 0;
        for i in 0..n {
            for j in 0..n {
                s += v[i] * m[i][j] * v[j];
            }
        }
        s
    };
    loop {
        let live: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
        if live.is_empty() {
            break;
        }
        if let Some(&i) = live.iter().find(|&&i| a[i][i].is_positive()) {
            let w = witness_of(&basis[i]);
            let s = square(&w);
            return Classification { kind: BoundaryType::Positive, witness: Some(w), witness_square: Some(s) };
        }
        if let Some(&p) = live.iter().find(|&&i| a[i][i].is_negative()) {
            // complete the square on coordinate p
            for &j in &live {
                if j == p || a[p][j].is_zero() {
                    continue;
                }
                let f = &a[p][j] / &a[p][p];
                for &k in &live {
                    let t = &f * &a[p][k];
                    a[j][k] = &a[j][k] - &t;
                }
                for k in 0..n {
                    let t = &f * &a[k][p];
                    a[k][j] = &a[k][j] - &t;
                }
                for k in 0..n {
                    let t = &f * &basis[p][k];
                    basis[j][k] = &basis[j][k] - &t;
                }
            }
            alive[p] = false;
            continue;
        }
        // all diagonal entries vanish
        let mut pair = None;
        for &i in &live {
            for &j in &live {
                if i != j && !a[i][j].is_zero() {
                    pair = Some((i, j));
                }
            }
        }
        match pair {
            Some((i, j)) => {
                let sign = if a[i][j].is_positive() { 1 } else { -1 };
                let v: Vec<Q> = (0..n).map(|k| &basis[i][k] + q(sign) * &basis[j][k]).collect();
                let w = witness_of(&v);
                let s = square(&w);
                return Classification { kind: BoundaryType::Positive, witness: Some(w), witness_square: Some(s) };
            }
            None => {
                kernel_found = true;
                break;
            }
        }
    }
    Classification {
        kind: if kernel_found { BoundaryType::Semidefinite } else { BoundaryType::Definite },
        witness: None,
        witness_square: None,
    }
}

/// Corner subdivision: inserts the ray m_i + m_{i+1} with no blowups.
pub fn toric_blowup(spec: &PairSpec, i: usize) -> Result<PairSpec> {
    let n = spec.fan_rays.len();
    if i >= n {
        return Err(Error::invalid("toric_blowup: ray index out of range"));
    }
    let mut out = spec.clone();
    let new = spec.fan_rays[i] + spec.fan_rays[(i + 1) % n];
    out.fan_rays.insert(i + 1, new);
    out.blowups.insert(i + 1, 0);
    out.ample = None;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qf;

    pub fn m05() -> PairSpec {
        PairSpec::new(&[[1, 0], [1, 1], [0, 1], [-1, 0], [0, -1]], &[0, 0, 0, 1, 1])
    }

    #[test]
    fn self_intersections() {
        let p2 = build_pair(&PairSpec::new(&[[1, 0], [0, 1], [-1, -1]], &[0, 0, 0])).unwrap();
        assert_eq!(p2.self_int, vec![1, 1, 1]);
        let p = build_pair(&m05()).unwrap();
        assert_eq!(p.self_int, vec![-1; 5]);
        let p = build_pair(&PairSpec::new(&[[1, 0], [0, 1], [-1, 0], [0, -1]], &[1, 0, 0, 0])).unwrap();
        assert_eq!(p.self_int, vec![-1, 0, 0, 0]);
    }

    #[test]
    fn rejects_bad_fans() {
        assert!(build_pair(&PairSpec::new(&[[1, 0], [1, 2], [-1, -1]], &[0, 0, 0])).is_err());
        assert!(build_pair(&PairSpec::new(&[[1, 0], [-1, -1], [0, 1]], &[0, 0, 0])).is_err());
        let twice = [[1, 0], [0, 1], [-1, -1], [1, 0], [0, 1], [-1, -1]];
        assert!(build_pair(&PairSpec::new(&twice, &[0; 6])).is_err());
        let mut s = m05();
        s.ample = Some(vec![0, 0, 0, 0, 0]);
        assert!(build_pair(&s).is_err());
    }

    #[test]
    fn default_ample_is_positive() {
        let p = build_pair(&m05()).unwrap();
        assert!(p.ample_degrees.iter().all(|&d| d > 0));
    }

    #[test]
    fn transport_examples() {
        assert_eq!(transport_tangent(-1, LatticeVector::new(1, 0)), LatticeVector::new(1, -1));
        for s in -3..3 {
            assert_eq!(transport_tangent(s, LatticeVector::new(0, 1)), LatticeVector::new(1, 0));
            let v = LatticeVector::new(3, -2);
            assert_eq!(transport_tangent_back(s, transport_tangent(s, v)), v);
            assert_eq!(transport_matrix(s).det(), 1);
        }
        assert_eq!(transport_tangent(0, LatticeVector::new(1, 0)), LatticeVector::new(0, -1));
    }

    #[test]
    fn nu_examples() {
        let p = build_pair(&m05()).unwrap();
        let x = ChartPoint { cone: 0, a: q(1), b: q(1) };
        assert_eq!(p.nu_point_to_plane(&x), (q(2), q(1)));
        let y = ChartPoint { cone: 3, a: qf(1, 3), b: qf(5, 2) };
        let (u, v) = p.nu_point_to_plane(&y);
        assert_eq!(p.nu_point_from_plane(&u, &v).unwrap(), y);
        // tangent (1,0) in cone 3 is m_3 = (-1,0)
        assert_eq!(
            p.nu_tangent_to_plane(TangentVector { cone: 3, v: LatticeVector::new(1, 0) }),
            LatticeVector::new(-1, 0)
        );
    }

    #[test]
    fn monodromy_examples() {
        // cycle of three (-2)-curves: P^2 with blowups (3,3,3)
        let p = build_pair(&PairSpec::new(&[[1, 0], [0, 1], [-1, -1]], &[3, 3, 3])).unwrap();
        assert_eq!(p.self_int, vec![-2, -2, -2]);
        let t = p.monodromy();
        assert_eq!(t.det(), 1);
        // in the developing coordinates where v_i = (i,1), i.e. basis (v_1 - v_0, v_0)
        let change = IntegralMatrix::new(-1, 1, 1, 0);
        let dev = change.inverse().unwrap() * t * change;
        assert_eq!(dev, IntegralMatrix::new(1, 3, 0, 1));

        let toric = build_pair(&PairSpec::new(&[[1, 0], [0, 1], [-1, -1]], &[0, 0, 0])).unwrap();
        assert_eq!(toric.monodromy(), IntegralMatrix::IDENTITY);

        // M05: T maps (v_0, v_1) to (v_5, v_6) on the unrolled cover
        let p = build_pair(&m05()).unwrap();
        let t = p.monodromy();
        // unrolled: v_{i+1} = -v_{i-1} - D_i^2 v_i in the developed plane with v_0, v_1 = e1, e2
        let mut dev = vec![LatticeVector::new(1, 0), LatticeVector::new(0, 1)];
        for i in 1..=5 {
            let d2 = p.self_int[i % 5];
            let nv = -dev[i - 1] - dev[i].scale(d2);
            dev.push(nv);
        }
        assert_eq!(t.apply(LatticeVector::new(1, 0)), dev[5]);
        assert_eq!(t.apply(LatticeVector::new(0, 1)), dev[6]);
    }

    #[test]
    fn classify_examples() {
        let p = build_pair(&m05()).unwrap();
        let c = p.classify_boundary();
        assert_eq!(c.kind, BoundaryType::Positive);
        assert!(c.witness_square.unwrap() > 0);
        let p = build_pair(&PairSpec::new(&[[1, 0], [0, 1], [-1, -1]], &[3, 3, 3])).unwrap();
        assert_eq!(p.classify_boundary().kind, BoundaryType::Semidefinite);
        let c = classify_form(&[
            vec![-3, 1, 0, 1],
            vec![1, -2, 1, 0],
            vec![0, 1, -2, 1],
            vec![1, 0, 1, -2],
        ]);
        assert_eq!(c.kind, BoundaryType::Definite);
    }

    #[test]
    fn looijenga_examples() {
        assert_eq!(transvection(LatticeVector::new(1, 0), 1), IntegralMatrix::new(1, -1, 0, 1));
        assert!(looijenga_check(&IntegralMatrix::IDENTITY, &[]).unwrap());
        assert!(looijenga_check(&IntegralMatrix::IDENTITY, &[(LatticeVector::new(2, 0), 1)]).is_err());
        // D^2 = (-2,-2,-3) from P^2 with blowups (3,3,4)
        let p = build_pair(&PairSpec::new(&[[1, 0], [0, 1], [-1, -1]], &[3, 3, 4])).unwrap();
        assert_eq!(p.self_int, vec![-2, -2, -3]);
        assert!(looijenga_check(&p.monodromy_inverse_in_plane(), &p.looijenga_factors()).unwrap());
    }

    #[test]
    fn corner_subdivision() {
        let s = toric_blowup(&PairSpec::new(&[[1, 0], [0, 1], [-1, -1]], &[0, 0, 0]), 0).unwrap();
        let p = build_pair(&s).unwrap();
        assert_eq!(p.n, 4);
        assert_eq!(p.self_int, vec![0, -1, 0, 1]);
    }
}
