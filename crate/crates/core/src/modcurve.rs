//! Invariants of the modular curve X_G: level, index, elliptic points,
//! cusps and genus, plus fibre products across coprime levels.

use serde::{Deserialize, Serialize};

use crate::grouplat::MatGroup;
use crate::modmat::arith::{gcd, gl2_order};
use crate::modmat::{crt_combine, Mat2};
use crate::{Error, Result};

/// Numerical invariants of X_G.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CurveInvariants {
    /// Least level at which G is defined.
    pub level: u32,
    /// `[GL2(Z/N) : G]`.
    pub index: u64,
    /// `[SL2(Z/N) : ±(G ∩ SL2)]`.
    pub index_sl: u64,
    pub nu2: u64,
    pub nu3: u64,
    pub cusps: u64,
    pub genus: u64,
    /// `"N.index.genus"`.
    pub label_prefix: String,
}

impl CurveInvariants {
    /// `(level, index, genus)`.
    pub fn triple(&self) -> (u32, u64, u64) {
        (self.level, self.index, self.genus)
    }
}

fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// The least `M | N` such that G contains the kernel of reduction to level `M`.
pub fn minimal_level(g: &MatGroup) -> Result<u32> {
    let n = g.modulus();
    for m in divisors(n) {
        if m == n {
            return Ok(n);
        }
        let kernel = gl2_order(n as u64) / if m == 1 { 1 } else { gl2_order(m as u64) };
        let image = if m == 1 { 1 } else { g.reduce(m)?.order() };
        if g.order() == image * kernel {
            return Ok(m);
        }
    }
    unreachable!("N divides N")
}

/// Right-coset permutation table for the action of SL2 on `H \ SL2`.
struct CosetTable {
    sl2: Vec<Mat2>,
    coset_of: Vec<u32>,
    reps: Vec<Mat2>,
}

impl CosetTable {
    fn new(h: &MatGroup) -> Result<CosetTable> {
        let sl2 = MatGroup::full_sl2(h.modulus())?.elements().to_vec();
        let mut coset_of = vec![u32::MAX; sl2.len()];
        let mut reps = Vec::new();
        for i in 0..sl2.len() {
            if coset_of[i] != u32::MAX {
                continue;
            }
            let c = reps.len() as u32;
            let x = sl2[i];
            for y in h.elements() {
                let j = sl2.binary_search(&(*y * x)).expect("H lies in SL2");
                coset_of[j] = c;
            }
            reps.push(x);
        }
        Ok(CosetTable { sl2, coset_of, reps })
    }

    fn permutation(&self, gamma: &Mat2) -> Vec<u32> {
        self.reps
            .iter()
            .map(|r| {
                let j = self.sl2.binary_search(&(*r * *gamma)).expect("closed under SL2");
                self.coset_of[j]
            })
            .collect()
    }
}

fn fixed_points(perm: &[u32]) -> u64 {
    perm.iter().enumerate().filter(|(i, &j)| *i as u32 == j).count() as u64
}

fn orbit_count(perm: &[u32]) -> u64 {
    let mut seen = vec![false; perm.len()];
    let mut orbits = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        orbits += 1;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i] as usize;
        }
    }
    orbits
}

/// Computes level, index, elliptic points, cusps and genus of X_G.
/// `-I` is adjoined before counting; the index is that of the raw group.
pub fn invariants(g: &MatGroup) -> Result<CurveInvariants> {
    if !g.is_det_surjective() {
        return Err(Error::DetNotSurjective(g.modulus()));
    }
    let level = minimal_level(g)?;
    let g = if level == g.modulus() {
        g.clone()
    } else if level == 1 {
        MatGroup::full_gl2(2)?
    } else {
        g.reduce(level)?
    };
    let n = g.modulus();
    let index = gl2_order(n as u64) / g.order();
    let h = g.intersect_sl2().extend(&Mat2::scalar(-1, n))?;
    let table = CosetTable::new(&h)?;
    let d = table.reps.len() as u64;
    let nu2 = fixed_points(&table.permutation(&Mat2::new([0, -1, 1, 0], n)));
    let nu3 = fixed_points(&table.permutation(&Mat2::new([0, -1, 1, -1], n)));
    let cusps = orbit_count(&table.permutation(&Mat2::new([1, 1, 0, 1], n)));
    let twelve_g = 12 + d as i64 - 3 * nu2 as i64 - 4 * nu3 as i64 - 6 * cusps as i64;
    if twelve_g < 0 || twelve_g % 12 != 0 {
        return Err(Error::Unsupported(format!(
            "genus formula gave 12g = {twelve_g} (d = {d}, nu2 = {nu2}, nu3 = {nu3}, cusps = {cusps})"
        )));
    }
    let genus = twelve_g as u64 / 12;
    let (level, index) = if level == 1 { (1, 1) } else { (level, index) };
    Ok(CurveInvariants {
        level,
        index,
        index_sl: d,
        nu2,
        nu3,
        cusps,
        genus,
        label_prefix: format!("{level}.{index}.{genus}"),
    })
}

/// `{M mod pq : M mod p in Gp, M mod q in Hq}`.
pub fn fiber_product(gp: &MatGroup, hq: &MatGroup) -> Result<MatGroup> {
    let (p, q) = (gp.modulus(), hq.modulus());
    if gcd(p as u64, q as u64) != 1 {
        return Err(Error::NotCoprime(p, q));
    }
    let mut elems = Vec::with_capacity((gp.order() * hq.order()) as usize);
    for a in gp.elements() {
        for b in hq.elements() {
            elems.push(crt_combine(a, b)?);
        }
    }
    MatGroup::from_elements(p * q, elems)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{standard_group, CartanKind};
    use proptest::prelude::*;

    fn check_formula(inv: &CurveInvariants) {
        let lhs = 12 * inv.genus as i64 - 12 + 3 * inv.nu2 as i64 + 4 * inv.nu3 as i64 + 6 * inv.cusps as i64;
        assert_eq!(lhs, inv.index_sl as i64);
    }

    #[test]
    fn nonsplit_normalizer_at_seven() {
        let inv = invariants(&standard_group(CartanKind::NonsplitNormalizer, 7).unwrap()).unwrap();
        assert_eq!(inv.triple(), (7, 21, 0));
        check_formula(&inv);
    }

    #[test]
    fn full_group_is_the_j_line() {
        for n in [2u32, 3, 4, 6] {
            let inv = invariants(&MatGroup::full_gl2(n).unwrap()).unwrap();
            assert_eq!((inv.index, inv.genus, inv.level), (1, 0, 1));
        }
    }

    /// Classical curves: X0(11) has genus 1, X0(N) for N in {2,3,5,7} genus 0.
    #[test]
    fn borel_genera() {
        let expected = [(2u32, 0u64, 3u64), (3, 0, 4), (5, 0, 6), (7, 0, 8), (11, 1, 12), (13, 0, 14)];
        for (p, genus, index) in expected {
            let inv = invariants(&standard_group(CartanKind::Borel, p).unwrap()).unwrap();
            assert_eq!((inv.genus, inv.index), (genus, index), "X0({p})");
            check_formula(&inv);
        }
    }

    #[test]
    fn fiber_product_rows() {
        let ns2 = standard_group(CartanKind::NonsplitCartan, 2).unwrap();
        let b2 = standard_group(CartanKind::Borel, 2).unwrap();
        let ns3 = standard_group(CartanKind::NonsplitNormalizer, 3).unwrap();
        let fp = fiber_product(&ns2, &ns3).unwrap();
        assert_eq!(fp.order(), ns2.order() * ns3.order());
        assert_eq!(invariants(&fp).unwrap().triple(), (6, 6, 1));
        assert_eq!(invariants(&fiber_product(&b2, &ns3).unwrap()).unwrap().triple(), (6, 9, 0));
        let s5 = standard_group(CartanKind::SplitNormalizer, 5).unwrap();
        let ns7 = standard_group(CartanKind::NonsplitNormalizer, 7).unwrap();
        let big = invariants(&fiber_product(&s5, &ns7).unwrap()).unwrap();
        assert_eq!(big.triple(), (35, 315, 19));
        check_formula(&big);
        assert!(fiber_product(&ns2, &b2).is_err());
    }

    #[test]
    fn rejects_non_surjective_det() {
        let g = MatGroup::full_sl2(5).unwrap();
        assert_eq!(invariants(&g), Err(Error::DetNotSurjective(5)));
    }

    #[test]
    fn lifted_group_keeps_its_level() {
        let b2 = standard_group(CartanKind::Borel, 2).unwrap();
        let gl4 = MatGroup::full_gl2(4).unwrap();
        let lifted: Vec<Mat2> = gl4.elements().iter().copied().filter(|x| b2.contains(&x.reduce(2).unwrap())).collect();
        let lifted = MatGroup::from_elements(4, lifted).unwrap();
        assert_eq!(invariants(&lifted).unwrap().triple(), (2, 3, 0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn conjugation_invariant(e in prop::array::uniform4(0i64..7), kind in 0usize..4) {
            let x = Mat2::new(e, 7);
            prop_assume!(x.is_invertible());
            let kind = [CartanKind::Borel, CartanKind::SplitCartan, CartanKind::SplitNormalizer, CartanKind::NonsplitNormalizer][kind];
            let g = standard_group(kind, 7).unwrap();
            let a = invariants(&g).unwrap();
            let b = invariants(&g.conjugate_by(&x)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn index_is_multiplicative(i in 0usize..3, j in 0usize..3) {
            let left = [CartanKind::Borel, CartanKind::NonsplitCartan, CartanKind::SplitCartan][i];
            let right = [CartanKind::Borel, CartanKind::SplitNormalizer, CartanKind::NonsplitNormalizer][j];
            let g = standard_group(left, 2).unwrap();
            let h = standard_group(right, 5).unwrap();
            let fp = invariants(&fiber_product(&g, &h).unwrap()).unwrap();
            let ig = gl2_order(2) / g.order();
            let ih = gl2_order(5) / h.order();
            prop_assert_eq!(fp.index, ig * ih);
            check_formula(&fp);
        }
    }
}
