//! Rank-2 lattice geometry: wedge products, primitive vectors, 2x2 integral
//! matrices and exact angular ordering of rays through the origin.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::integer::gcd;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element of the lattice M = Z^2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct LatticeVector {
    pub x: i64,
    pub y: i64,
}

impl From<[i64; 2]> for LatticeVector {
    fn from(a: [i64; 2]) -> Self {
        LatticeVector { x: a[0], y: a[1] }
    }
}

impl From<LatticeVector> for [i64; 2] {
    fn from(v: LatticeVector) -> Self {
        [v.x, v.y]
    }
}

impl LatticeVector {
    pub const ZERO: LatticeVector = LatticeVector { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        LatticeVector { x, y }
    }

    pub fn is_zero(self) -> bool {
        self.x == 0 && self.y == 0
    }

    pub fn scale(self, k: i64) -> Self {
        LatticeVector::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: LatticeVector) -> i64 {
        self.x * o.x + self.y * o.y
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl Add for LatticeVector {
    type Output = LatticeVector;
    fn add(self, o: LatticeVector) -> LatticeVector {
        LatticeVector::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for LatticeVector {
    type Output = LatticeVector;
    fn sub(self, o: LatticeVector) -> LatticeVector {
        LatticeVector::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for LatticeVector {
    type Output = LatticeVector;
    fn neg(self) -> LatticeVector {
        LatticeVector::new(-self.x, -self.y)
    }
}

/// `u ∧ v = x_u y_v - y_u x_v`.
pub fn wedge(u: LatticeVector, v: LatticeVector) -> i64 {
    u.x * v.y - u.y * v.x
}

/// Splits `v` into its primitive direction and lattice length.
pub fn primitive(v: LatticeVector) -> Result<(LatticeVector, i64)> {
    if v.is_zero() {
        return Err(Error::invalid("primitive: zero vector"));
    }
    let g = gcd(v.x.abs(), v.y.abs());
    Ok((LatticeVector::new(v.x / g, v.y / g), g))
}

/// A ray through the origin with primitive direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ray {
    pub direction: LatticeVector,
}

impl Ray {
    pub fn new(v: LatticeVector) -> Result<Ray> {
        Ok(Ray { direction: primitive(v)?.0 })
    }
}

/// Counterclockwise comparison of two nonzero vectors, measured from `base`.
/// Vectors on the same half-line compare equal.
pub fn angular_cmp(base: LatticeVector, u: LatticeVector, v: LatticeVector) -> Ordering {
    let half = |w: LatticeVector| -> u8 {
        let s = wedge(base, w);
        if s > 0 || (s == 0 && base.dot(w) > 0) {
            0
        } else {
            1
        }
    };
    let (hu, hv) = (half(u), half(v));
    if hu != hv {
        return hu.cmp(&hv);
    }
    // Within one half-plane the angle difference is below pi.
    let w = wedge(u, v);
    if w > 0 {
        Ordering::Less
    } else if w < 0 {
        Ordering::Greater
    } else if u.dot(v) > 0 {
        Ordering::Equal
    } else {
        // opposite directions only happen at the half-plane boundary
        hu.cmp(&hv)
    }
}

/// Sorts rays counterclockwise starting at `base` and groups rays with the
/// same support.
pub fn angular_order(rays: &[LatticeVector], base: LatticeVector) -> Result<Vec<Vec<LatticeVector>>> {
    for r in rays {
        if r.is_zero() {
            return Err(Error::invalid("angular_order: zero ray"));
        }
    }
    let mut sorted: Vec<LatticeVector> = rays.to_vec();
    sorted.sort_by(|a, b| {
        angular_cmp(base, *a, *b).then_with(|| primitive(*a).unwrap().1.cmp(&primitive(*b).unwrap().1))
    });
    let mut groups: Vec<Vec<LatticeVector>> = Vec::new();
    for r in sorted {
        match groups.last_mut() {
            Some(g) if angular_cmp(base, g[0], r) == Ordering::Equal => g.push(r),
            _ => groups.push(vec![r]),
        }
    }
    Ok(groups)
}

/// 2x2 integral matrix acting on column vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegralMatrix {
    pub entries: [[i64; 2]; 2],
}

impl IntegralMatrix {
    pub const IDENTITY: IntegralMatrix = IntegralMatrix { entries: [[1, 0], [0, 1]] };

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        IntegralMatrix { entries: [[a, b], [c, d]] }
    }

    /// Matrix whose columns are `c0`, `c1`.
    pub fn from_columns(c0: LatticeVector, c1: LatticeVector) -> Self {
        IntegralMatrix::new(c0.x, c1.x, c0.y, c1.y)
    }

    pub fn det(&self) -> i64 {
        let e = self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }

    pub fn apply(&self, v: LatticeVector) -> LatticeVector {
        let e = self.entries;
        LatticeVector::new(e[0][0] * v.x + e[0][1] * v.y, e[1][0] * v.x + e[1][1] * v.y)
    }

    /// Inverse of a unimodular matrix.
    pub fn inverse(&self) -> Result<IntegralMatrix> {
        let d = self.det();
        if d != 1 && d != -1 {
            return Err(Error::invalid("matrix is not unimodular"));
        }
        let e = self.entries;
        Ok(IntegralMatrix::new(e[1][1] * d, -e[0][1] * d, -e[1][0] * d, e[0][0] * d))
    }

    pub fn trace(&self) -> i64 {
        self.entries[0][0] + self.entries[1][1]
    }
}

impl Mul for IntegralMatrix {
    type Output = IntegralMatrix;
    fn mul(self, o: IntegralMatrix) -> IntegralMatrix {
        let a = self.entries;
        let b = o.entries;
        let mut r = [[0i64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        IntegralMatrix { entries: r }
    }
}

impl fmt::Display for IntegralMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.entries;
        write!(f, "[[{},{}],[{},{}]]", e[0][0], e[0][1], e[1][0], e[1][1])
    }
}
