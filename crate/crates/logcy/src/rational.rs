//! Exact rationals and their "p/q" text form.

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::invalid(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// "p/q" with q > 0, or "p" for integers.
pub fn fmt_q(x: &Q) -> String {
    x.to_string()
}

pub fn floor_to_i64(x: &Q) -> i64 {
    let f = x.floor().to_integer();
    i64::try_from(f).unwrap_or(if x.is_negative() { i64::MIN } else { i64::MAX })
}

pub fn is_one(x: &Q) -> bool {
    x.is_one()
}
