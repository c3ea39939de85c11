//! Exact rational scalars and their text form.
//!
//! Literals are `p/q` or bare integers `p`; decimal literals are rejected so
//! that files never silently round.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{OptError, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `p/q` or `p` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let err = || OptError::InvalidRational(text.to_string());
    let s = text.trim();
    if s.is_empty() || s.contains(['.', 'e', 'E']) {
        return Err(err());
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| err())?;
    let den: BigInt = den.parse().map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(num, den))
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn in_unit_interval(q: &Rational) -> bool {
    !q.is_negative() && *q <= one()
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued-fraction convergents and the admissible semiconvergent).
pub fn rationalize(x: f64, max_den: u64) -> Rational {
    if !x.is_finite() {
        return zero();
    }
    let negative = x < 0.0;
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1): (u128, u128, u128, u128) = (0, 1, 1, 0);
    let max_den = max_den.max(1) as u128;
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let q2 = a * q1 + q0;
        if q2 > max_den {
            // semiconvergent with the largest admissible partial quotient
            let k = (max_den - q0) / q1;
            let (ps, qs) = (k * p1 + p0, k * q1 + q0);
            let cand = ps as f64 / qs as f64;
            let conv = p1 as f64 / q1 as f64;
            if k > 0 && (cand - x.abs()).abs() < (conv - x.abs()).abs() {
                p1 = ps;
                q1 = qs;
            }
            break;
        }
        let p2 = a * p1 + p0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a as f64;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    let r = Rational::new(BigInt::from(p1), BigInt::from(q1));
    if negative {
        -r
    } else {
        r
    }
}
