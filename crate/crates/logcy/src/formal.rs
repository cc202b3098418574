//! Order-by-order completion of plane scattering diagrams whose functions are
//! power series in formal generators t_g, each attached to a tangent vector.
//! A monomial t^κ carries the tangent Σ κ_g m_g; monomials are packed into a
//! mixed-radix code so that multiplication is code addition. Truncation keeps
//! t^κ with Σ κ_g w_{l,g} ≤ wmax_l for every lane l of nonnegative integer
//! weights; lane 0 is strictly positive and orders the terms. Coefficients
//! are integers: the completion of integral input stays integral.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::lattice::{angular_cmp, primitive, wedge, LatticeVector};

/// Maximum number of weight lanes.
pub const LANES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mono {
    pub code: u128,
    pub w: [u32; LANES],
    pub d: u32,
    pub m: LatticeVector,
}

impl Mono {
    pub const ONE: Mono = Mono { code: 0, w: [0; LANES], d: 0, m: LatticeVector::ZERO };

    fn add(self, o: Mono) -> Mono {
        let mut w = self.w;
        for (a, b) in w.iter_mut().zip(o.w) {
            *a += b;
        }
        Mono { code: self.code + o.code, w, d: self.d + o.d, m: self.m + o.m }
    }
}

/// Lane bounds; a monomial is kept when every lane is within its bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bound {
    pub w: [u32; LANES],
    pub d: u32,
}

impl Bound {
    #[inline]
    fn fits(&self, a: &Mono, b: &Mono) -> bool {
        a.d + b.d <= self.d && (1..LANES).all(|l| a.w[l] + b.w[l] <= self.w[l])
    }

    #[inline]
    fn keeps(&self, a: &Mono) -> bool {
        a.d <= self.d && (0..LANES).all(|l| a.w[l] <= self.w[l])
    }

    fn with_degree(self, d: u32) -> Bound {
        Bound { d, ..self }
    }
}

#[derive(Clone, Debug)]
pub struct GenSpace {
    pub tangents: Vec<LatticeVector>,
    /// `lanes[l][g]`: weight of generator g in lane l.
    pub lanes: Vec<Vec<u32>>,
    pub wmax: Vec<u32>,
    strides: Vec<u128>,
    bounds: Vec<u64>,
    max_degree: u32,
}

impl GenSpace {
    /// Single-lane space.
    pub fn new(tangents: Vec<LatticeVector>, weights: Vec<u32>, wmax: u32) -> Result<GenSpace> {
        GenSpace::with_lanes(tangents, vec![weights], vec![wmax])
    }

    pub fn with_lanes(tangents: Vec<LatticeVector>, lanes: Vec<Vec<u32>>, wmax: Vec<u32>) -> Result<GenSpace> {
        if lanes.is_empty() || lanes.len() > LANES || lanes.len() != wmax.len() {
            return Err(Error::invalid(format!("between 1 and {LANES} weight lanes required")));
        }
        if lanes.iter().any(|l| l.len() != tangents.len()) {
            return Err(Error::invalid("generator tangents and weights differ in length"));
        }
        if lanes[0].iter().any(|w| *w == 0) {
            return Err(Error::invalid("generator weights must be positive"));
        }
        let bounds: Vec<u64> = (0..tangents.len())
            .map(|g| {
                (0..lanes.len())
                    .filter(|l| lanes[*l][g] > 0)
                    .map(|l| (wmax[l] / lanes[l][g]) as u64)
                    .min()
                    .expect("lane 0 is positive")
            })
            .collect();
        let mut strides = Vec::with_capacity(bounds.len());
        let mut s: u128 = 1;
        for b in &bounds {
            strides.push(s);
            s = s
                .checked_mul(*b as u128 + 1)
                .ok_or_else(|| Error::invalid("too many generators for this order"))?;
        }
        let mut space = GenSpace { tangents, lanes, wmax, strides, bounds, max_degree: 0 };
        space.max_degree = space.search_max_degree();
        Ok(space)
    }

    /// Bound on all lanes and on the t-degree.
    pub fn bound(&self) -> Bound {
        let mut w = [u32::MAX / 2; LANES];
        w[..self.wmax.len()].copy_from_slice(&self.wmax);
        Bound { w, d: self.max_degree }
    }

    /// Largest t-degree of a kept monomial, by depth-first search over the
    /// downward closed set of kept exponents.
    fn search_max_degree(&self) -> u32 {
        fn go(s: &GenSpace, g: usize, cur: Mono, best: &mut u32, budget: &mut u64) {
            if *budget == 0 {
                return;
            }
            *budget -= 1;
            *best = (*best).max(cur.d);
            for h in g..s.len() {
                let next = cur.add(s.generator(h));
                if s.bound_all().keeps(&next) {
                    go(s, h, next, best, budget);
                }
            }
        }
        let mut best = 0;
        let mut budget: u64 = 2_000_000;
        go(self, 0, Mono::ONE, &mut best, &mut budget);
        if budget == 0 {
            // search cut short: fall back to the lane-0 bound
            return self.lanes[0].iter().map(|w| self.wmax[0] / w).max().unwrap_or(0);
        }
        best
    }

    fn bound_all(&self) -> Bound {
        let mut w = [u32::MAX / 2; LANES];
        w[..self.wmax.len()].copy_from_slice(&self.wmax);
        Bound { w, d: u32::MAX / 2 }
    }

    pub fn len(&self) -> usize {
        self.tangents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tangents.is_empty()
    }

    pub fn generator(&self, g: usize) -> Mono {
        let mut w = [0; LANES];
        for (l, lane) in self.lanes.iter().enumerate() {
            w[l] = lane[g];
        }
        Mono { code: self.strides[g], w, d: 1, m: self.tangents[g] }
    }

    pub fn mono(&self, kappa: &[u32]) -> Mono {
        let mut r = Mono::ONE;
        for (g, k) in kappa.iter().enumerate() {
            for _ in 0..*k {
                r = r.add(self.generator(g));
            }
        }
        r
    }

    pub fn decode(&self, code: u128) -> Vec<u32> {
        let mut out = vec![0u32; self.len()];
        let mut c = code;
        for g in (0..self.len()).rev() {
            out[g] = (c / self.strides[g]) as u32;
            c %= self.strides[g];
        }
        debug_assert!(out.iter().zip(&self.bounds).all(|(k, b)| (*k as u64) <= *b));
        out
    }

    /// Largest t-degree of a monomial within the weight bound.
    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }
}

/// Series sorted by (lane-0 weight, code).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Series {
    pub terms: Vec<(Mono, i128)>,
}

fn overflow() -> Error {
    Error::internal("integer overflow in scattering coefficients")
}

type Acc = FxHashMap<u128, (Mono, i128)>;

fn acc_add(acc: &mut Acc, m: Mono, c: i128) -> Result<()> {
    let e = acc.entry(m.code).or_insert((m, 0));
    e.1 = e.1.checked_add(c).ok_or_else(overflow)?;
    Ok(())
}

fn from_acc(acc: Acc) -> Series {
    let mut terms: Vec<(Mono, i128)> = acc.into_values().filter(|(_, c)| *c != 0).collect();
    terms.sort_by(|a, b| (a.0.w[0], a.0.code).cmp(&(b.0.w[0], b.0.code)));
    Series { terms }
}

impl Series {
    pub fn one() -> Series {
        Series { terms: vec![(Mono::ONE, 1)] }
    }

    pub fn from_terms(terms: Vec<(Mono, i128)>) -> Result<Series> {
        let mut acc = Acc::default();
        for (m, c) in terms {
            acc_add(&mut acc, m, c)?;
        }
        Ok(from_acc(acc))
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0 == Mono::ONE && self.terms[0].1 == 1
    }

    pub fn coeff(&self, code: u128) -> i128 {
        self.terms.iter().find(|(m, _)| m.code == code).map(|(_, c)| *c).unwrap_or(0)
    }

    pub fn truncate(&self, b: Bound) -> Series {
        Series { terms: self.terms.iter().filter(|(m, _)| b.keeps(m)).cloned().collect() }
    }

    pub fn mul(&self, o: &Series, b: Bound) -> Result<Series> {
        let mut acc = Acc::default();
        let w0 = b.w[0];
        for (ma, ca) in &self.terms {
            if o.terms.is_empty() || ma.w[0] + o.terms[0].0.w[0] > w0 {
                break;
            }
            for (mb, cb) in &o.terms {
                if ma.w[0] + mb.w[0] > w0 {
                    break;
                }
                if !b.fits(ma, mb) {
                    continue;
                }
                let c = ca.checked_mul(*cb).ok_or_else(overflow)?;
                acc_add(&mut acc, ma.add(*mb), c)?;
            }
        }
        Ok(from_acc(acc))
    }

    /// Inverse of a series with constant term 1.
    pub fn inverse(&self, b: Bound) -> Result<Series> {
        if self.coeff(0) != 1 {
            return Err(Error::internal("inverting a series without constant term 1"));
        }
        let neg_u = Series {
            terms: self.terms.iter().filter(|(m, _)| m.code != 0).map(|(m, c)| (*m, -c)).collect(),
        };
        let mut acc = Acc::default();
        acc_add(&mut acc, Mono::ONE, 1)?;
        let mut p = Series::one();
        loop {
            p = p.mul(&neg_u, b)?;
            if p.terms.is_empty() {
                break;
            }
            for (m, c) in &p.terms {
                acc_add(&mut acc, *m, *c)?;
            }
        }
        Ok(from_acc(acc))
    }
}

/// Cached integer powers of one wall function.
struct Powers<'a> {
    f: &'a Series,
    b: Bound,
    pos: Vec<Series>,
    neg: Vec<Series>,
    inv: Option<Series>,
}

impl<'a> Powers<'a> {
    fn new(f: &'a Series, b: Bound) -> Self {
        Powers { f, b, pos: vec![Series::one()], neg: vec![Series::one()], inv: None }
    }

    fn get(&mut self, j: i64) -> Result<&Series> {
        if j >= 0 {
            while self.pos.len() <= j as usize {
                let next = self.pos.last().expect("nonempty").mul(self.f, self.b)?;
                self.pos.push(next);
            }
            Ok(&self.pos[j as usize])
        } else {
            if self.inv.is_none() {
                self.inv = Some(self.f.inverse(self.b)?);
            }
            let inv = self.inv.as_ref().expect("set");
            while self.neg.len() <= (-j) as usize {
                let next = self.neg.last().expect("nonempty").mul(inv, self.b)?;
                self.neg.push(next);
            }
            Ok(&self.neg[(-j) as usize])
        }
    }
}

/// Image of X^e·F under crossing, counterclockwise, a wall with support
/// direction `u` and function `f`: X^r ↦ X^r f^{r∧u}.
pub fn cross(
    e: LatticeVector,
    fser: &Series,
    u: LatticeVector,
    f: &Series,
    b: Bound,
) -> Result<Series> {
    let mut groups: BTreeMap<i64, Vec<(Mono, i128)>> = BTreeMap::new();
    for (m, c) in &fser.terms {
        groups.entry(wedge(e + m.m, u)).or_default().push((*m, *c));
    }
    let mut pw = Powers::new(f, b);
    let mut acc = Acc::default();
    for (j, terms) in groups {
        let s = Series { terms };
        if j == 0 {
            for (m, c) in &s.terms {
                acc_add(&mut acc, *m, *c)?;
            }
            continue;
        }
        let p = pw.get(j)?;
        for (m, c) in &s.mul(p, b)?.terms {
            acc_add(&mut acc, *m, *c)?;
        }
    }
    Ok(from_acc(acc))
}

/// A wall through the origin in the plane.
#[derive(Clone, Debug)]
pub struct FormalWall {
    pub support: LatticeVector,
    pub f: Series,
}

fn ccw_from_x_axis(a: LatticeVector, b: LatticeVector) -> Ordering {
    angular_cmp(LatticeVector::new(1, 0), a, b)
}

/// Merges walls per support direction (walls on a common support commute)
/// and sorts them counterclockwise.
pub fn merge_walls(walls: &[FormalWall], b: Bound) -> Result<Vec<FormalWall>> {
    let mut by_dir: Vec<FormalWall> = Vec::new();
    for w in walls {
        let (dir, _) = primitive(w.support)?;
        match by_dir.iter_mut().find(|x| x.support == dir) {
            Some(x) => x.f = x.f.mul(&w.f, b)?,
            None => by_dir.push(FormalWall { support: dir, f: w.f.truncate(b) }),
        }
    }
    by_dir.sort_by(|a, b| ccw_from_x_axis(a.support, b.support));
    Ok(by_dir)
}

/// Images of X^{(1,0)} and X^{(0,1)} under the counterclockwise loop, as the
/// series F with image X^e·F.
pub fn loop_images(merged: &[FormalWall], b: Bound) -> Result<(Series, Series)> {
    let run = |e: LatticeVector| -> Result<Series> {
        let mut fser = Series::one();
        for w in merged {
            fser = cross(e, &fser, w.support, &w.f, b)?;
        }
        Ok(fser)
    };
    let ex = LatticeVector::new(1, 0);
    let ey = LatticeVector::new(0, 1);
    Ok((run(ex)?, run(ey)?))
}

/// Adds outgoing walls to `incoming` until the loop is the identity modulo
/// the weight bound. Returns the outgoing walls, one per support direction,
/// sorted counterclockwise.
pub fn complete(space: &GenSpace, incoming: &[FormalWall]) -> Result<Vec<FormalWall>> {
    let bound = space.bound();
    let mut outgoing: BTreeMap<LatticeVector, Acc> = BTreeMap::new();
    for d in 1..=space.max_degree() {
        let mut walls: Vec<FormalWall> = incoming.to_vec();
        for (dir, acc) in &outgoing {
            walls.push(FormalWall { support: *dir, f: from_acc(acc.clone()) });
        }
        let merged = merge_walls(&walls, bound.with_degree(d))?;
        let (fx, fy) = loop_images(&merged, bound.with_degree(d))?;
        let mut defect: BTreeMap<u128, (Mono, i128, i128)> = BTreeMap::new();
        for (src, idx) in [(&fx, 0), (&fy, 1)] {
            for (m, c) in &src.terms {
                if m.code == 0 {
                    if *c != 1 {
                        return Err(Error::internal("loop changed the constant term"));
                    }
                    continue;
                }
                if m.d < d {
                    return Err(Error::internal(format!("loop defect at degree {} below current order {d}", m.d)));
                }
                let e = defect.entry(m.code).or_insert((*m, 0, 0));
                if idx == 0 {
                    e.1 = *c;
                } else {
                    e.2 = *c;
                }
            }
        }
        for (_, (m, dx, dy)) in defect {
            if m.m.is_zero() {
                return Err(Error::internal("loop defect with zero tangent"));
            }
            let (u, _) = primitive(-m.m)?;
            let (ux, uy) = (u.x as i128, u.y as i128);
            // crossing adds (e∧u)·a at leading order: δ_x + u_y a = 0, δ_y - u_x a = 0
            let a = if uy != 0 {
                if dx % uy != 0 {
                    return Err(Error::internal("non-integral wall correction"));
                }
                -dx / uy
            } else {
                if dy % ux != 0 {
                    return Err(Error::internal("non-integral wall correction"));
                }
                dy / ux
            };
            if dx + uy * a != 0 || dy - ux * a != 0 {
                return Err(Error::internal("loop defect not cancellable by an outgoing wall"));
            }
            let acc = outgoing.entry(u).or_insert_with(|| {
                let mut a = Acc::default();
                a.insert(0, (Mono::ONE, 1));
                a
            });
            acc_add(acc, m, a)?;
        }
    }
    let out: Vec<FormalWall> = outgoing.into_iter().map(|(dir, acc)| FormalWall { support: dir, f: from_acc(acc) }).collect();
    merge_walls(&out, bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: i64, y: i64) -> LatticeVector {
        LatticeVector::new(x, y)
    }

    fn binomial(space: &GenSpace, g: usize) -> Series {
        Series::from_terms(vec![(Mono::ONE, 1), (space.generator(g), 1)]).unwrap()
    }

    // Reference loop computation: compose single-term substitutions by hand
    // for two crossing lines, order 2 in (t1, t2).
    #[test]
    fn two_lines() {
        let space = GenSpace::new(vec![v(1, 0), v(0, 1)], vec![1, 1], 2).unwrap();
        let incoming = vec![
            FormalWall { support: v(1, 0), f: binomial(&space, 0) },
            FormalWall { support: v(0, 1), f: binomial(&space, 1) },
        ];
        let out = complete(&space, &incoming).unwrap();
        let dirs: Vec<LatticeVector> = out.iter().map(|w| w.support).collect();
        assert_eq!(dirs, vec![v(-1, 0), v(-1, -1), v(0, -1)]);
        assert_eq!(out[0].f, binomial(&space, 0));
        assert_eq!(out[2].f, binomial(&space, 1));
        let t1t2 = space.mono(&[1, 1]);
        assert_eq!(out[1].f, Series::from_terms(vec![(Mono::ONE, 1), (t1t2, 1)]).unwrap());
        // the full loop is the identity
        let mut all = incoming.clone();
        all.extend(out);
        let merged = merge_walls(&all, space.bound()).unwrap();
        let (fx, fy) = loop_images(&merged, space.bound()).unwrap();
        assert!(fx.is_one() && fy.is_one());
    }

    #[test]
    fn single_wall_reflects() {
        let space = GenSpace::new(vec![v(2, 1)], vec![1], 5).unwrap();
        let f = binomial(&space, 0);
        let out = complete(&space, &[FormalWall { support: v(2, 1), f: f.clone() }]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].support, v(-2, -1));
        assert_eq!(out[0].f, f);
    }

    #[test]
    fn crossing_forward_then_back_is_identity() {
        let space = GenSpace::new(vec![v(1, 0), v(0, 1)], vec![1, 1], 4).unwrap();
        let f = binomial(&space, 0);
        let g = binomial(&space, 1);
        let x = cross(v(0, 1), &g, v(1, 0), &f, space.bound()).unwrap();
        let back = cross(v(0, 1), &x, v(-1, 0), &f, space.bound()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn symmetric_pair_of_double_walls() {
        // (1+tx)^2 and (1+sy)^2: integral output, loop identity at order 4
        let space = GenSpace::new(vec![v(1, 0), v(1, 0), v(0, 1), v(0, 1)], vec![1, 1, 1, 1], 4).unwrap();
        let f = binomial(&space, 0).mul(&binomial(&space, 1), space.bound()).unwrap();
        let g = binomial(&space, 2).mul(&binomial(&space, 3), space.bound()).unwrap();
        let incoming =
            vec![FormalWall { support: v(1, 0), f }, FormalWall { support: v(0, 1), f: g }];
        let out = complete(&space, &incoming).unwrap();
        let mut all = incoming.clone();
        all.extend(out.clone());
        let merged = merge_walls(&all, space.bound()).unwrap();
        let (fx, fy) = loop_images(&merged, space.bound()).unwrap();
        assert!(fx.is_one() && fy.is_one());
        // the (1,1) wall starts with 4 t s xy summed over generator choices
        let diag = out.iter().find(|w| w.support == v(-1, -1)).unwrap();
        let lin: i128 = diag.f.terms.iter().filter(|(m, _)| m.d == 2).map(|(_, c)| *c).sum();
        assert_eq!(lin, 4);
    }
}
