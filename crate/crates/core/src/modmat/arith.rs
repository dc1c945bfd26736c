//! Small-integer number theory on machine words.

use num_prime::nt_funcs::{factorize64, is_prime64};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `n`, if it exists. `inv_mod(x, 1)` is `Some(0)`.
pub fn inv_mod(a: u64, n: u64) -> Option<u64> {
    if n == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (n as i128, (a % n) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(n as i128) as u64)
}

pub fn pow_mod(b: u64, mut e: u64, n: u64) -> u64 {
    let n128 = n as u128;
    let mut acc = 1u128 % n128;
    let mut b = (b % n) as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % n128;
        }
        b = b * b % n128;
        e >>= 1;
    }
    acc as u64
}

pub fn is_prime(n: u64) -> bool {
    is_prime64(n)
}

/// Prime factorisation as ascending `(prime, exponent)` pairs; empty for 0 and 1.
pub fn factor(n: u64) -> Vec<(u64, u32)> {
    if n < 2 {
        return Vec::new();
    }
    factorize64(n).into_iter().map(|(p, e)| (p, e as u32)).collect()
}

/// `Some((p, k))` when `n = p^k` with `k >= 1`.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    match factor(n).as_slice() {
        [(p, k)] => Some((*p, *k)),
        _ => None,
    }
}

pub fn euler_phi(n: u64) -> u64 {
    factor(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Least positive primitive root modulo the prime `p`.
pub fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let qs: Vec<u64> = factor(p - 1).into_iter().map(|(q, _)| q).collect();
    (2..p)
        .find(|&g| qs.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("a prime has a primitive root")
}

/// Multiplicative order of a unit `a` modulo `n`.
pub fn unit_order(a: u64, n: u64) -> u64 {
    let mut m = euler_phi(n);
    for (q, _) in factor(m) {
        while m.is_multiple_of(q) && pow_mod(a, m / q, n) == 1 {
            m /= q;
        }
    }
    m
}

/// A generating set of (Z/nZ)^x, chosen greedily by descending element order.
pub fn unit_group_gens(n: u64) -> Vec<u64> {
    if n <= 2 {
        return Vec::new();
    }
    let phi = euler_phi(n) as usize;
    let mut units: Vec<u64> = (1..n).filter(|&a| gcd(a, n) == 1).collect();
    units.sort_by_key(|&a| (std::cmp::Reverse(unit_order(a, n)), a));
    let mut inside = vec![false; n as usize];
    inside[1] = true;
    let mut span = vec![1u64];
    let mut gens = Vec::new();
    for a in units {
        if span.len() == phi {
            break;
        }
        if inside[a as usize] {
            continue;
        }
        gens.push(a);
        // the span is a subgroup, so multiplying by powers of `a` closes it
        let base = span.clone();
        let mut power = a;
        while !inside[power as usize] {
            for &x in &base {
                let y = x * power % n;
                if !inside[y as usize] {
                    inside[y as usize] = true;
                    span.push(y);
                }
            }
            power = power * a % n;
        }
    }
    gens
}

/// |GL2(Z/nZ)| = prod over p^k || n of p^{4(k-1)} (p^2-1)(p^2-p).
pub fn gl2_order(n: u64) -> u64 {
    factor(n)
        .into_iter()
        .map(|(p, k)| p.pow(4 * (k - 1)) * (p * p - 1) * (p * p - p))
        .product()
}

/// |SL2(Z/nZ)| = |GL2| / phi(n).
pub fn sl2_order(n: u64) -> u64 {
    gl2_order(n) / euler_phi(n)
}

/// Factorisation of |GL2(Z/nZ)| assembled from the small pieces.
pub fn gl2_order_factored(n: u64) -> Vec<(u64, u32)> {
    let mut acc = std::collections::BTreeMap::new();
    for (p, k) in factor(n) {
        *acc.entry(p).or_insert(0) += 4 * (k - 1) + 1;
        for (q, e) in factor(p - 1).into_iter().chain(factor(p * p - 1)) {
            *acc.entry(q).or_insert(0) += e;
        }
    }
    acc.into_iter().collect()
}

/// Kronecker symbol (d / p) for a prime `p`.
pub fn kronecker(d: i64, p: u64) -> i32 {
    if p == 2 {
        return match d.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    let r = d.rem_euclid(p as i64) as u64;
    if r == 0 {
        return 0;
    }
    if pow_mod(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Chinese remainder: the unique `x mod m*n` with `x = a mod m`, `x = b mod n`.
pub fn crt(a: u64, m: u64, b: u64, n: u64) -> Option<u64> {
    if gcd(m, n) != 1 {
        return None;
    }
    let mn = (m * n) as i128;
    let inv = inv_mod(m % n, n)? as i128;
    let t = ((b as i128 - a as i128) * inv).rem_euclid(n as i128);
    Some(((a as i128 + m as i128 * t).rem_euclid(mn)) as u64)
}
