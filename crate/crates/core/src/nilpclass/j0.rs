//! Mod-p images of `E_d: y^2 = x^3 + d` and the prime at which the p-division
//! field of `E_d` is nilpotent. Everything depends only on the class of `d`
//! modulo cubes (and modulo squares at p = 3).

use crate::cartan::{standard_group, CartanKind};
use crate::grouplat::MatGroup;
use crate::modmat::arith::is_prime;
use crate::modmat::{cube_class, FactoredRational, Mat2, Rational};
use crate::{Error, Result};

fn is_square(r: &Rational) -> bool {
    if r.is_negative() {
        return false;
    }
    match FactoredRational::from_rational(r) {
        Ok(f) => f.exponents.values().all(|e| e % 2 == 0),
        Err(_) => false,
    }
}

/// `16 p^e` modulo cubes, i.e. `{2: 1, p: e}`.
fn special_class(p: u64, e: i64) -> FactoredRational {
    FactoredRational::from_pairs(&[(2, 1), (p, e)]).mod_cubes()
}

/// The exponent `e` in the special class `16 p^e` for `p = 4, 7 mod 9` or `p = 2, 5 mod 9`.
fn special_exponent(p: u64) -> Option<i64> {
    match p % 9 {
        4 | 7 => Some((((p - 1) / 3) % 3) as i64),
        2 | 5 => Some((3 - ((p + 1) / 3) % 3) as i64 % 3),
        _ => None,
    }
}

fn set_group(elems: Vec<Mat2>, n: u32) -> Result<MatGroup> {
    MatGroup::from_elements(n, elems)
}

fn mod3_image(d: &Rational) -> Result<MatGroup> {
    let four_d = Rational::int(-4) * d.clone();
    let d_square = is_square(d);
    let minus3d_square = is_square(&(Rational::int(-3) * d.clone()));
    let mut elems = Vec::new();
    if cube_class(&four_d)?.is_trivial() {
        for b in 1..3 {
            if d_square || minus3d_square {
                elems.push(Mat2::diag(1, b, 3));
            } else {
                for a in 1..3 {
                    elems.push(Mat2::diag(a, b, 3));
                }
            }
        }
    } else {
        for a in 0..3 {
            for b in 1..3 {
                if d_square {
                    elems.push(Mat2::new([1, a, 0, b], 3));
                } else if minus3d_square {
                    elems.push(Mat2::new([b, a, 0, 1], 3));
                } else {
                    elems.push(Mat2::new([1, a, 0, b], 3));
                    elems.push(Mat2::new([-1, a, 0, b], 3));
                }
            }
        }
    }
    set_group(elems, 3)
}

/// The mod-p image of `E_d`, up to conjugacy.
pub fn j0_image(d: &Rational, p: u32) -> Result<MatGroup> {
    if d.is_zero() {
        return Err(Error::Zero);
    }
    if !is_prime(p as u64) {
        return Err(Error::Unsupported(format!("{p} is not prime")));
    }
    let class = cube_class(d)?;
    match p {
        2 => {
            if class.is_trivial() {
                MatGroup::generate(&[Mat2::new([1, 1, 0, 1], 2)], 2)
            } else {
                MatGroup::full_gl2(2)
            }
        }
        3 => mod3_image(d),
        _ => {
            let p64 = p as u64;
            let special = special_exponent(p64).map(|e| class == special_class(p64, e)).unwrap_or(false);
            let kind = match (p64 % 9, special) {
                (1, _) | (4 | 7, false) => CartanKind::SplitNormalizer,
                (8, _) | (2 | 5, false) => CartanKind::NonsplitNormalizer,
                (4 | 7, true) => CartanKind::SplitCubeRatio,
                (2 | 5, true) => CartanKind::NonsplitIndex3,
                _ => unreachable!("primes above 3 are not divisible by 3"),
            };
            standard_group(kind, p)
        }
    }
}

/// `p = 3 * 2^k + sign` for some `k >= 1`.
fn is_three_two_k(p: u64, sign: i64) -> bool {
    let q = p as i64 - sign;
    q > 3 && q % 3 == 0 && ((q / 3) as u64).is_power_of_two()
}

/// The unique prime `p`, if any, for which the p-division field of `E_d` is nilpotent.
///
/// Beyond p = 2 (d a cube) and p = 3 (d = 2 mod cubes), the condition is
/// `d = 16 p^e` mod cubes with `p = 3 * 2^k ± 1`, so `p` must be the odd
/// prime in the support of the cube class of `d`.
pub fn j0_nilpotent_prime(d: &Rational) -> Result<Option<u64>> {
    if d.is_zero() {
        return Err(Error::Zero);
    }
    let class = cube_class(d)?;
    if class.is_trivial() {
        return Ok(Some(2));
    }
    if class == FactoredRational::from_pairs(&[(2, 1)]) {
        return Ok(Some(3));
    }
    let support = class.support_u64();
    if support.len() != 2 || class.exponent(2) != 1 {
        return Ok(None);
    }
    let p = support.into_iter().find(|&q| q != 2).expect("two primes in the support");
    if !(is_three_two_k(p, 1) || is_three_two_k(p, -1)) {
        return Ok(None);
    }
    let e = special_exponent(p).expect("3 * 2^k ± 1 is 2, 4, 5 or 7 mod 9");
    Ok((class.exponent(p) == e).then_some(p))
}

/// Primes `p <= bound` for which `j0_image(d, p)` is nilpotent.
pub fn nilpotent_primes_up_to(d: &Rational, bound: u32) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for p in (2..=bound).filter(|&p| is_prime(p as u64)) {
        if j0_image(d, p)?.is_nilpotent() {
            out.push(p);
        }
    }
    Ok(out)
}
