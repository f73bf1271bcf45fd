//! Coefficient rings.
//!
//! Everything in the engine is exact. The default coefficients are
//! arbitrary-precision rationals; `Zp` gives integers modulo a prime for
//! the places where the theory allows an arbitrary commutative ring.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational numbers.
pub type Q = BigRational;

/// Build a rational from a small integer.
pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Build the rational `n/d`. Panics on `d == 0`.
pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// `(-1)^e` as a rational.
pub fn sign_q(e: i64) -> Q {
    if e.rem_euclid(2) == 0 {
        q(1)
    } else {
        q(-1)
    }
}

/// Render a rational as `p` or `p/q`.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parse `p`, `-p` or `p/q` (surrounding whitespace allowed).
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Q::new(n, d))
}

/// A commutative ring with unity, with optional division.
///
/// `inv` returns `None` for non-units, so the same elimination code runs
/// over fields and reports singularity otherwise.
pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn inv(&self) -> Option<Self>;
}

impl Coefficient for Q {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(n: i64) -> Self {
        q(n)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
}

/// Integers modulo `P`. `P` should be prime for `inv` to be total on
/// nonzero elements; for composite `P` non-units return `None`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Zp<const P: u64>(u64);

impl<const P: u64> Zp<P> {
    pub fn new(n: i64) -> Self {
        Zp((n as i128).rem_euclid(P as i128) as u64)
    }
    pub fn value(self) -> u64 {
        self.0
    }
    /// Reduce a rational into the field, if its denominator is a unit.
    pub fn from_q(x: &Q) -> Option<Self> {
        let p = BigInt::from(P);
        let n = (x.numer() % &p + &p) % &p;
        let d = (x.denom() % &p + &p) % &p;
        let d = Zp::<P>(d.to_u64()?).inv()?;
        Some(Zp::<P>(n.to_u64()?) * d)
    }
}

impl<const P: u64> fmt::Debug for Zp<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.0, P)
    }
}

impl<const P: u64> fmt::Display for Zp<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const P: u64> Add for Zp<P> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Zp(((self.0 as u128 + o.0 as u128) % P as u128) as u64)
    }
}

impl<const P: u64> Sub for Zp<P> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Zp(((self.0 as u128 + P as u128 - o.0 as u128) % P as u128) as u64)
    }
}

impl<const P: u64> Mul for Zp<P> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Zp(((self.0 as u128 * o.0 as u128) % P as u128) as u64)
    }
}

impl<const P: u64> Neg for Zp<P> {
    type Output = Self;
    fn neg(self) -> Self {
        Zp((P - self.0) % P)
    }
}

impl<const P: u64> Coefficient for Zp<P> {
    fn zero() -> Self {
        Zp(0)
    }
    fn one() -> Self {
        Zp(1 % P)
    }
    fn from_i64(n: i64) -> Self {
        Zp::new(n)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
    fn inv(&self) -> Option<Self> {
        // extended Euclid on (a, P)
        let (mut r0, mut r1) = (P as i128, self.0 as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let qt = r0 / r1;
            (r0, r1) = (r1, r0 - qt * r1);
            (t0, t1) = (t1, t0 - qt * t1);
        }
        if r0 != 1 {
            return None;
        }
        Some(Zp(t0.rem_euclid(P as i128) as u64))
    }
}

/// Binomial coefficient with the convention `C(n, m) = 0` unless `0 <= m <= n`.
pub fn binomial(n: i64, m: i64) -> Q {
    if n < 0 || m < 0 || m > n {
        return q(0);
    }
    let m = m.min(n - m);
    let mut acc = BigInt::one();
    for i in 0..m {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Q::from_integer(acc)
}

/// Sign of a rational as -1, 0 or 1.
pub fn signum(x: &Q) -> i32 {
    if Zero::is_zero(x) {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}
