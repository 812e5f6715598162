//! Exact integer arithmetic: p-adic valuations, binomial coefficients and
//! Gaussian (q-)binomial coefficients with arbitrary-precision coefficients.

use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Arbitrary-precision non-negative integer.
pub type Natural = BigUint;

/// A prime number, checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Prime(u64);

impl Prime {
    pub const TWO: Prime = Prime(2);
    pub const THREE: Prime = Prime(3);
    pub const FIVE: Prime = Prime(5);

    pub fn new(value: u64) -> Result<Self> {
        if is_prime(value) {
            Ok(Prime(value))
        } else {
            domain(format!("{value} is not prime"))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// `p^e`, failing on u64 overflow.
    pub fn pow(self, e: u32) -> Result<u64> {
        self.0
            .checked_pow(e)
            .ok_or_else(|| Error::Overflow(format!("{}^{e}", self.0)))
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;

    fn try_from(value: u64) -> Result<Self> {
        Prime::new(value)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

// serde goes through decimal strings, like every other number in the JSON
impl TryFrom<String> for Prime {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        let v = value
            .parse()
            .map_err(|_| Error::Malformed(format!("invalid prime {value:?}")))?;
        Prime::new(v)
    }
}

impl From<Prime> for String {
    fn from(p: Prime) -> String {
        p.0.to_string()
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Exponent of the highest power of `p` dividing `x`.
pub fn vp(x: &Natural, p: Prime) -> Result<u32> {
    if x.is_zero() {
        return domain("p-adic valuation of 0 is undefined");
    }
    let p = BigUint::from(p.get());
    let mut x = x.clone();
    let mut v = 0;
    loop {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            return Ok(v);
        }
        x = q;
        v += 1;
    }
}

/// [`vp`] for machine integers.
pub fn vp_u64(x: u64, p: Prime) -> Result<u32> {
    if x == 0 {
        return domain("p-adic valuation of 0 is undefined");
    }
    let p = p.get();
    let (mut x, mut v) = (x, 0);
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    Ok(v)
}

/// Binomial coefficient; zero when `k < 0` or `k > n`.
pub fn binom(n: u64, k: i64) -> Natural {
    if k < 0 || k as u64 > n {
        return Natural::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = Natural::one();
    for i in 1..=k {
        // acc * (n - k + i) is divisible by i at every step
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// `v_p(binom(n, k))` by counting the carries when adding `k` and `n - k`
/// in base `p`.
pub fn vp_binom(n: u64, k: u64, p: Prime) -> Result<u32> {
    if k > n {
        return domain(format!("binomial index {k} outside [0, {n}]"));
    }
    let p = p.get();
    let (mut a, mut b) = (k, n - k);
    let mut carry = 0;
    let mut carries = 0;
    while a > 0 || b > 0 || carry > 0 {
        let digit = a % p + b % p + carry;
        carry = u64::from(digit >= p);
        carries += carry as u32;
        a /= p;
        b /= p;
    }
    Ok(carries)
}

/// Polynomial in `q` with non-negative arbitrary-precision coefficients,
/// stored densely from the constant term upwards. The last stored
/// coefficient is nonzero; the zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct QPoly {
    coeffs: Vec<Natural>,
}

impl QPoly {
    pub fn zero() -> Self {
        QPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::monomial(0)
    }

    /// `q^s`.
    pub fn monomial(s: usize) -> Self {
        let mut coeffs = vec![Natural::zero(); s + 1];
        coeffs[s] = Natural::one();
        QPoly { coeffs }
    }

    pub fn from_coeffs(mut coeffs: Vec<Natural>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn from_u64s(coeffs: &[u64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| Natural::from(c)).collect())
    }

    pub fn coeffs(&self) -> &[Natural] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Natural {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Multiply by `q^s`.
    pub fn shift(&self, s: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Natural::zero(); s];
        coeffs.extend(self.coeffs.iter().cloned());
        QPoly { coeffs }
    }

    /// Value at `q = 1`, i.e. the sum of the coefficients.
    pub fn eval1(&self) -> Natural {
        self.coeffs.iter().sum()
    }

    /// Multiply every coefficient by `c`.
    pub fn scale(&self, c: &Natural) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|x| x * c).collect())
    }
}

impl Add for &QPoly {
    type Output = QPoly;

    fn add(self, rhs: &QPoly) -> QPoly {
        let (long, short) = if self.coeffs.len() >= rhs.coeffs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut coeffs = long.coeffs.clone();
        for (c, s) in coeffs.iter_mut().zip(&short.coeffs) {
            *c += s;
        }
        QPoly::from_coeffs(coeffs)
    }
}

impl Add for QPoly {
    type Output = QPoly;

    fn add(self, rhs: QPoly) -> QPoly {
        &self + &rhs
    }
}

impl Mul for &QPoly {
    type Output = QPoly;

    fn mul(self, rhs: &QPoly) -> QPoly {
        if self.is_zero() || rhs.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![Natural::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        QPoly::from_coeffs(coeffs)
    }
}

impl Mul for QPoly {
    type Output = QPoly;

    fn mul(self, rhs: QPoly) -> QPoly {
        &self * &rhs
    }
}

impl std::iter::Sum for QPoly {
    fn sum<I: Iterator<Item = QPoly>>(iter: I) -> QPoly {
        iter.fold(QPoly::zero(), |acc, x| &acc + &x)
    }
}

impl std::iter::Product for QPoly {
    fn product<I: Iterator<Item = QPoly>>(iter: I) -> QPoly {
        iter.fold(QPoly::one(), |acc, x| &acc * &x)
    }
}

impl<'a> std::iter::Product<&'a QPoly> for QPoly {
    fn product<I: Iterator<Item = &'a QPoly>>(iter: I) -> QPoly {
        iter.fold(QPoly::one(), |acc, x| &acc * x)
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, c.is_one()) {
                (0, _) => write!(f, "{c}")?,
                (1, true) => write!(f, "q")?,
                (1, false) => write!(f, "{c}q")?,
                (_, true) => write!(f, "q^{i}")?,
                (_, false) => write!(f, "{c}q^{i}")?,
            }
        }
        Ok(())
    }
}

/// Gaussian binomial coefficient `[n choose k]_q`, built row by row from
/// `[n k] = [n-1 k-1] + q^k [n-1 k]`.
pub fn gauss_binom(n: u64, k: i64) -> QPoly {
    if k < 0 || k as u64 > n {
        return QPoly::zero();
    }
    let k = k as usize;
    // row[j] holds [r choose j] for the current row r
    let mut row = vec![QPoly::zero(); k + 1];
    row[0] = QPoly::one();
    for r in 1..=n as usize {
        for j in (1..=k.min(r)).rev() {
            row[j] = &row[j - 1] + &row[j].shift(j);
        }
    }
    row.swap_remove(k)
}

/// Convert a natural number to `u64`, reporting overflow.
pub fn to_u64(x: &Natural) -> Result<u64> {
    x.to_u64()
        .ok_or_else(|| Error::Overflow(format!("{x} does not fit in 64 bits")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat(x: u64) -> Natural {
        Natural::from(x)
    }

    #[test]
    fn primes() {
        assert!(Prime::new(2).is_ok());
        assert!(Prime::new(97).is_ok());
        assert!(Prime::new(1).is_err());
        assert!(Prime::new(0).is_err());
        assert!(Prime::new(91).is_err());
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(vp(&nat(28), Prime::TWO).unwrap(), 2);
        assert_eq!(vp(&nat(1), Prime::FIVE).unwrap(), 0);
        for p in [Prime::TWO, Prime::THREE, Prime::FIVE] {
            for k in 0..=10 {
                let x = nat(p.get()).pow(k);
                assert_eq!(vp(&x, p).unwrap(), k);
                assert_eq!(vp_u64(p.pow(k).unwrap(), p).unwrap(), k);
            }
        }
    }

    #[test]
    fn valuation_of_zero_is_an_error() {
        assert!(matches!(vp(&nat(0), Prime::TWO), Err(Error::Domain(_))));
        assert!(vp_u64(0, Prime::TWO).is_err());
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binom(4, 2), nat(6));
        assert_eq!(binom(8, 2), nat(28));
        assert_eq!(binom(3, -1), nat(0));
        assert_eq!(binom(3, 4), nat(0));
        for n in 0..20 {
            assert_eq!(binom(n, 0), nat(1));
        }
    }

    #[test]
    fn binomial_exceeds_64_bits() {
        assert!(binom(729, 27).bits() > 64);
        assert_eq!(binom(729, 27).bits(), 163);
    }

    #[test]
    fn kummer_examples() {
        assert_eq!(vp_binom(8, 2, Prime::TWO).unwrap(), 2);
        assert_eq!(vp_binom(17, 0, Prime::THREE).unwrap(), 0);
        assert!(vp_binom(3, 4, Prime::TWO).is_err());
    }

    #[test]
    fn qpoly_examples() {
        let one_plus_q = QPoly::from_u64s(&[1, 1]);
        assert_eq!(one_plus_q.shift(2), QPoly::from_u64s(&[0, 0, 1, 1]));
        assert_eq!(
            &gauss_binom(2, 1) * &gauss_binom(2, 1),
            QPoly::from_u64s(&[1, 2, 1])
        );
        assert_eq!(gauss_binom(6, 3).eval1(), nat(20));
        assert_eq!(QPoly::from_u64s(&[1, 0, 0]).degree(), Some(0));
        assert_eq!(QPoly::from_u64s(&[0, 0]), QPoly::zero());
        assert_eq!(QPoly::zero().shift(3), QPoly::zero());
        assert_eq!(format!("{}", gauss_binom(4, 2)), "1 + q + 2q^2 + q^3 + q^4");
    }

    #[test]
    fn gauss_binom_examples() {
        assert_eq!(gauss_binom(4, 2), QPoly::from_u64s(&[1, 1, 2, 1, 1]));
        for n in 0..10 {
            assert_eq!(gauss_binom(n, n as i64), QPoly::one());
            assert_eq!(gauss_binom(n, 0), QPoly::one());
        }
        assert_eq!(gauss_binom(4, 2).eval1(), nat(6));
        assert!(gauss_binom(3, 4).is_zero());
        assert!(gauss_binom(3, -1).is_zero());
    }
}
