use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::arith::{crt, gcd, gl2_order_factored, inv_mod};
use crate::{Error, Result};

/// A 2x2 matrix over Z/NZ, stored row-major as `[a, b, c, d]` for `[[a,b],[c,d]]`.
///
/// Ordering and hashing are by `(modulus, entries)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat2 {
    n: u32,
    e: [u32; 4],
}

impl Mat2 {
    /// Builds a matrix from arbitrary integers, reducing them into `[0, n)`.
    pub fn new(entries: [i64; 4], n: u32) -> Mat2 {
        assert!(n >= 1, "modulus must be positive");
        let r = |x: i64| x.rem_euclid(n as i64) as u32;
        Mat2 {
            n,
            e: [r(entries[0]), r(entries[1]), r(entries[2]), r(entries[3])],
        }
    }

    /// Builds a matrix from entries already reduced into `[0, n)`.
    #[inline]
    pub fn from_reduced(e: [u32; 4], n: u32) -> Mat2 {
        debug_assert!(e.iter().all(|&x| x < n));
        Mat2 { n, e }
    }

    pub fn identity(n: u32) -> Mat2 {
        Mat2::scalar(1, n)
    }

    pub fn scalar(a: i64, n: u32) -> Mat2 {
        Mat2::new([a, 0, 0, a], n)
    }

    pub fn diag(a: i64, d: i64, n: u32) -> Mat2 {
        Mat2::new([a, 0, 0, d], n)
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn entries(&self) -> [u32; 4] {
        self.e
    }

    pub fn det(&self) -> u32 {
        let n = self.n as u64;
        let [a, b, c, d] = self.e.map(u64::from);
        ((a * d + n * n - (b * c) % (n * n)) % n) as u32
    }

    pub fn trace(&self) -> u32 {
        ((self.e[0] as u64 + self.e[3] as u64) % self.n as u64) as u32
    }

    pub fn is_invertible(&self) -> bool {
        gcd(self.det() as u64, self.n as u64) == 1
    }

    pub fn is_identity(&self) -> bool {
        self.e == Mat2::identity(self.n).e
    }

    pub fn is_scalar(&self) -> bool {
        self.e[1] == 0 && self.e[2] == 0 && self.e[0] == self.e[3]
    }

    /// Adjugate times the inverse determinant.
    pub fn inverse(&self) -> Result<Mat2> {
        let n = self.n as u64;
        let di = inv_mod(self.det() as u64, n).ok_or_else(|| Error::NotInvertible(self.to_string()))?;
        let [a, b, c, d] = self.e.map(u64::from);
        let neg = |x: u64| (n - x % n) % n;
        Ok(Mat2 {
            n: self.n,
            e: [
                (d * di % n) as u32,
                (neg(b) * di % n) as u32,
                (neg(c) * di % n) as u32,
                (a * di % n) as u32,
            ],
        })
    }

    /// Inverse of a matrix known to be invertible (group elements).
    #[inline]
    pub fn inv(&self) -> Mat2 {
        self.inverse().expect("group element is invertible")
    }

    pub fn pow(&self, mut k: u64) -> Mat2 {
        let mut acc = Mat2::identity(self.n);
        let mut base = *self;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    /// `self * other * self^-1`.
    #[inline]
    pub fn conj(&self, other: &Mat2) -> Mat2 {
        *self * *other * self.inv()
    }

    /// Entrywise reduction to a divisor `m` of the modulus.
    pub fn reduce(&self, m: u32) -> Result<Mat2> {
        if m == 0 || !self.n.is_multiple_of(m) {
            return Err(Error::NotDivisor(m, self.n));
        }
        Ok(Mat2 {
            n: m,
            e: self.e.map(|x| x % m),
        })
    }

    /// The same integer entries read modulo a multiple `n` of the modulus.
    pub fn lift_to(&self, n: u32) -> Result<Mat2> {
        if self.n == 0 || !n.is_multiple_of(self.n) {
            return Err(Error::NotDivisor(self.n, n));
        }
        Ok(Mat2 { n, e: self.e })
    }

    /// Packed index `((a*N + b)*N + c)*N + d`, injective for a fixed modulus.
    #[inline]
    pub fn code(&self) -> u64 {
        let n = self.n as u64;
        ((self.e[0] as u64 * n + self.e[1] as u64) * n + self.e[2] as u64) * n + self.e[3] as u64
    }

    pub fn from_code(mut code: u64, n: u32) -> Mat2 {
        let nn = n as u64;
        let mut e = [0u32; 4];
        for slot in e.iter_mut().rev() {
            *slot = (code % nn) as u32;
            code /= nn;
        }
        Mat2 { n, e }
    }

    /// Multiplicative order, found by descending from the exponent of GL2(Z/NZ).
    pub fn order(&self) -> Result<u64> {
        if !self.is_invertible() {
            return Err(Error::NotInvertible(self.to_string()));
        }
        let fac = gl2_order_factored(self.n as u64);
        Ok(self.order_dividing(&fac))
    }

    /// Order of an invertible matrix whose order divides `prod p^e` over `fac`.
    pub fn order_dividing(&self, fac: &[(u64, u32)]) -> u64 {
        let mut m: u64 = fac.iter().map(|&(p, e)| p.pow(e)).product();
        for &(p, _) in fac {
            while m.is_multiple_of(p) && self.pow(m / p).is_identity() {
                m /= p;
            }
        }
        m
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        debug_assert_eq!(self.n, o.n, "modulus mismatch");
        let n = self.n as u64;
        let [a, b, c, d] = self.e.map(u64::from);
        let [e, f, g, h] = o.e.map(u64::from);
        Mat2 {
            n: self.n,
            e: [
                ((a * e + b * g) % n) as u32,
                ((a * f + b * h) % n) as u32,
                ((c * e + d * g) % n) as u32,
                ((c * f + d * h) % n) as u32,
            ],
        }
    }
}

/// Checked product; fails on a modulus mismatch.
pub fn mat_mul(a: &Mat2, b: &Mat2) -> Result<Mat2> {
    if a.n != b.n {
        return Err(Error::ModulusMismatch { left: a.n, right: b.n });
    }
    Ok(*a * *b)
}

pub fn mat_inverse(a: &Mat2) -> Result<Mat2> {
    a.inverse()
}

pub fn element_order(a: &Mat2) -> Result<u64> {
    a.order()
}

/// The unique matrix mod `m*n` reducing to `a` mod `m` and `b` mod `n`.
pub fn crt_combine(a: &Mat2, b: &Mat2) -> Result<Mat2> {
    let (m, n) = (a.n as u64, b.n as u64);
    if gcd(m, n) != 1 {
        return Err(Error::NotCoprime(a.n, b.n));
    }
    let mut e = [0u32; 4];
    for i in 0..4 {
        e[i] = crt(a.e[i] as u64, m, b.e[i] as u64, n).ok_or(Error::NotCoprime(a.n, b.n))? as u32;
    }
    Ok(Mat2 { n: a.n * b.n, e })
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.e;
        write!(f, "[[{a},{b}],[{c},{d}]] mod {}", self.n)
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Mat2 {
    type Err = Error;

    /// Parses `[[a,b],[c,d]] mod N`; entries may be negative.
    fn from_str(s: &str) -> Result<Mat2> {
        let bad = || Error::Parse(format!("expected \"[[a,b],[c,d]] mod N\", got {s:?}"));
        let (body, modulus) = s.rsplit_once("mod").ok_or_else(bad)?;
        let n: u32 = modulus.trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        let nums: Vec<i64> = body
            .split(['[', ']', ','])
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let entries: [i64; 4] = nums.try_into().map_err(|_| bad())?;
        Ok(Mat2::new(entries, n))
    }
}

impl Serialize for Mat2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Mat2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Mat2, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
