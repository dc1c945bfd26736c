use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Exact rational number in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Rational> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::Zero);
        }
        Ok(Rational(BigRational::new(num.into(), den)))
    }

    pub fn int(n: impl Into<BigInt>) -> Rational {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Rational {
        Rational(BigRational::zero())
    }

    pub fn one() -> Rational {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn recip(&self) -> Result<Rational> {
        if self.is_zero() {
            return Err(Error::Zero);
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn pow(&self, e: i32) -> Rational {
        Rational(num_traits::Pow::pow(&self.0, e))
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn from_big(r: BigRational) -> Rational {
        Rational(r)
    }

    /// Reduction modulo a prime `q`, or `None` if `q` divides the denominator.
    pub fn mod_prime(&self, q: u64) -> Option<u64> {
        let qi = BigInt::from(q);
        let den = (self.denom() % &qi + &qi) % &qi;
        let den = den.to_u64()?;
        let inv = super::arith::inv_mod(den, q)?;
        let num = ((self.numer() % &qi + &qi) % &qi).to_u64()?;
        Some((num as u128 * inv as u128 % q as u128) as u64)
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $f(self, o: Rational) -> Rational {
                Rational($tr::$f(self.0, o.0))
            }
        }
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $f(self, o: &'a Rational) -> Rational {
                Rational($tr::$f(&self.0, &o.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Rational {
        Rational::int(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `p/q` or a bare integer.
    fn from_str(s: &str) -> Result<Rational> {
        let bad = || Error::Parse(format!("expected a rational \"p/q\", got {s:?}"));
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s.trim(), "1"),
        };
        let p: BigInt = p.parse().map_err(|_| bad())?;
        let q: BigInt = q.parse().map_err(|_| bad())?;
        Rational::new(p, q).map_err(|_| bad())
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A nonzero rational as `sign * prod p^e` with every listed exponent nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactoredRational {
    pub sign: i8,
    pub exponents: BTreeMap<BigUint, i64>,
}

impl FactoredRational {
    pub fn from_rational(r: &Rational) -> Result<FactoredRational> {
        if r.is_zero() {
            return Err(Error::Zero);
        }
        let mut exponents = BTreeMap::new();
        for (part, sign) in [(r.numer(), 1i64), (r.denom(), -1i64)] {
            let mag = part.magnitude().clone();
            if mag.is_one() {
                continue;
            }
            for (p, e) in num_prime::nt_funcs::factorize(mag) {
                *exponents.entry(p).or_insert(0) += sign * e as i64;
            }
        }
        exponents.retain(|_, e| *e != 0);
        Ok(FactoredRational {
            sign: if r.is_negative() { -1 } else { 1 },
            exponents,
        })
    }

    pub fn to_rational(&self) -> Rational {
        let mut num = BigInt::from(self.sign as i64);
        let mut den = BigInt::one();
        for (p, &e) in &self.exponents {
            let pb = BigInt::from_biguint(Sign::Plus, p.clone());
            let pow = num_traits::pow(pb, e.unsigned_abs() as usize);
            if e > 0 {
                num *= pow;
            } else {
                den *= pow;
            }
        }
        Rational::new(num, den).expect("denominator is a product of primes")
    }

    /// Exponent of `p` (zero when absent).
    pub fn exponent(&self, p: u64) -> i64 {
        self.exponents.get(&BigUint::from(p)).copied().unwrap_or(0)
    }

    /// Builds a class directly from small `(prime, exponent)` pairs.
    pub fn from_pairs(pairs: &[(u64, i64)]) -> FactoredRational {
        let mut exponents = BTreeMap::new();
        for &(p, e) in pairs {
            *exponents.entry(BigUint::from(p)).or_insert(0) += e;
        }
        exponents.retain(|_, e| *e != 0);
        FactoredRational { sign: 1, exponents }
    }

    /// Exponents reduced into `{1, 2}` mod 3 with the sign dropped.
    pub fn mod_cubes(&self) -> FactoredRational {
        let mut exponents = self.exponents.clone();
        for e in exponents.values_mut() {
            *e = e.rem_euclid(3);
        }
        exponents.retain(|_, e| *e != 0);
        FactoredRational { sign: 1, exponents }
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Primes with a nonzero exponent, where they fit in a machine word.
    pub fn support_u64(&self) -> Vec<u64> {
        self.exponents.keys().filter_map(|p| p.to_u64()).collect()
    }
}

impl fmt::Display for FactoredRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponents.is_empty() {
            return write!(f, "{}", self.sign);
        }
        if self.sign < 0 {
            write!(f, "-")?;
        }
        let parts: Vec<String> = self.exponents.iter().map(|(p, e)| format!("{p}^{e}")).collect();
        write!(f, "{}", parts.join("*"))
    }
}

impl Serialize for FactoredRational {
    /// `{"sign": s, "exponents": {"p": e, ...}}` with primes as decimal strings.
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let exps: BTreeMap<String, i64> = self.exponents.iter().map(|(p, e)| (p.to_string(), *e)).collect();
        let mut st = s.serialize_struct("FactoredRational", 2)?;
        st.serialize_field("sign", &self.sign)?;
        st.serialize_field("exponents", &exps)?;
        st.end()
    }
}

/// Class of `d` in Q^x / (Q^x)^3. Since -1 is a cube the sign is dropped.
pub fn cube_class(d: &Rational) -> Result<FactoredRational> {
    Ok(FactoredRational::from_rational(d)?.mod_cubes())
}
