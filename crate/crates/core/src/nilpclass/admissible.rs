//! Admissibility, projective classes and the nilpotent subgroup searches.

use serde::Serialize;

use crate::grouplat::{
    enumerate_subgroups, maximal_classes, Ambient, ConjClassRep, GroupSummary, MatGroup, Search, Strategy,
};
use crate::modcurve::{invariants, CurveInvariants};
use crate::modmat::arith::{gcd, is_prime, sl2_order};
use crate::modmat::Mat2;
use crate::{Error, Result};

fn fixes_point_of_full_order(m: &Mat2) -> bool {
    let n = m.modulus() as u64;
    let [a, b, c, d] = m.entries().map(|x| x as u64);
    (0..n).any(|x| {
        (0..n).any(|y| {
            gcd(gcd(x, y), n) == 1 && (a * x + b * y) % n == x && (c * x + d * y) % n == y
        })
    })
}

/// Full determinant image and an element of determinant -1 and trace 0
/// fixing a vector of exact order N.
pub fn is_admissible(g: &MatGroup) -> bool {
    let n = g.modulus();
    if !g.is_det_surjective() {
        return false;
    }
    let minus_one = n - 1;
    g.elements()
        .iter()
        .filter(|m| m.det() == minus_one % n && m.trace() == 0)
        .any(fixes_point_of_full_order)
}

/// Isomorphism type of the image in PGL2(F_p).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ProjectiveClass {
    ContainsSL2,
    BorelType,
    Cyclic(u64),
    /// Dihedral of order `2n`; `Dihedral(2)` is the Klein four-group.
    Dihedral(u64),
    A4,
    S4,
    A5,
}

/// Least `k` with `x^k` scalar.
fn projective_order(x: &Mat2) -> u64 {
    let mut k = 1;
    let mut y = *x;
    while !y.is_scalar() {
        y = y * *x;
        k += 1;
    }
    k
}

/// Order of `G / (G ∩ scalars)`.
pub fn projective_image_order(g: &MatGroup) -> u64 {
    g.order() / g.elements().iter().filter(|x| x.is_scalar()).count() as u64
}

/// Classifies the image of `G` in PGL2(F_p) for prime `p`.
pub fn projective_class(g: &MatGroup) -> Result<ProjectiveClass> {
    let p = g.modulus() as u64;
    if !is_prime(p) {
        return Err(Error::Unsupported(format!("projective classes need a prime modulus, got {p}")));
    }
    if g.order().is_multiple_of(p) {
        return Ok(if g.intersect_sl2().order() == sl2_order(p) {
            ProjectiveClass::ContainsSL2
        } else {
            ProjectiveClass::BorelType
        });
    }
    let m = projective_image_order(g);
    let max = g.elements().iter().map(projective_order).max().unwrap_or(1);
    Ok(match (m, max) {
        _ if max == m => ProjectiveClass::Cyclic(m),
        _ if 2 * max == m => ProjectiveClass::Dihedral(max),
        (12, 3) => ProjectiveClass::A4,
        (24, 4) => ProjectiveClass::S4,
        (60, 5) => ProjectiveClass::A5,
        _ => unreachable!("finite subgroups of PGL2 of order prime to p are cyclic, dihedral, A4, S4 or A5"),
    })
}

/// A class from a search together with its curve invariants.
#[derive(Clone, Debug, Serialize)]
pub struct ClassWithInvariants {
    pub class: ConjClassRep,
    pub invariants: CurveInvariants,
}

/// Primes at which the maximal nilpotent admissible search is supported.
pub const NILPOTENT_SEARCH_PRIMES: [u32; 4] = [2, 3, 5, 7];

/// Every nilpotent admissible subgroup class of GL2(F_p).
pub fn nilpotent_admissible_classes(p: u32) -> Result<Vec<ConjClassRep>> {
    let prune = |g: &MatGroup| g.is_nilpotent();
    let filter = |g: &MatGroup| is_admissible(g);
    enumerate_subgroups(Ambient::Full(p), &Search::new(Strategy::Full).prune(&prune).filter(&filter))
}

/// Classes maximal among nilpotent admissible subgroups of GL2(F_p).
/// Admissibility passes to overgroups, so maximality within the filtered list suffices.
pub fn maximal_nilpotent_admissible(p: u32) -> Result<Vec<ClassWithInvariants>> {
    if !NILPOTENT_SEARCH_PRIMES.contains(&p) {
        return Err(Error::Unsupported(format!("nilpotent search at p = {p}")));
    }
    let all = nilpotent_admissible_classes(p)?;
    maximal_classes(&all, Ambient::Full(p))
        .into_iter()
        .map(|class| Ok(ClassWithInvariants { invariants: invariants(&class.rep)?, class }))
        .collect()
}

/// Outcome of `two_adic_tower_check`.
#[derive(Clone, Debug, Serialize)]
pub struct TowerReport {
    pub k: u32,
    pub base_order: u64,
    pub preimage_order: u64,
    pub preimage_nilpotent: bool,
    /// Nilpotent admissible subgroups of the preimage mapping onto the base;
    /// searched only for bases of order 3.
    pub surjecting_lifts: Vec<GroupSummary>,
}

fn preimage(base: &MatGroup, n: u32) -> Result<MatGroup> {
    let m = base.modulus();
    let elems: Vec<Mat2> = MatGroup::full_gl2(n)?
        .elements()
        .iter()
        .copied()
        .filter(|x| base.contains(&x.reduce(m).unwrap()))
        .collect();
    MatGroup::from_elements(n, elems)
}

/// Behaviour of the 2-adic tower over a base subgroup of GL2(F_2) at level `2^k`.
pub fn two_adic_tower_check(base: &MatGroup, k: u32) -> Result<TowerReport> {
    if base.modulus() != 2 || !(2..=3).contains(&k) {
        return Err(Error::Unsupported(format!(
            "tower check needs a base mod 2 and k in 2..=3, got level {} and k = {k}",
            base.modulus()
        )));
    }
    let n = 2u32.pow(k);
    let pre = preimage(base, n)?;
    let mut surjecting_lifts = Vec::new();
    if base.order() == 3 {
        let filter = |g: &MatGroup| {
            g.is_nilpotent() && is_admissible(g) && g.reduce(2).map(|r| r == *base).unwrap_or(false)
        };
        let prune = |g: &MatGroup| g.is_nilpotent();
        surjecting_lifts = enumerate_subgroups(
            Ambient::Group(&pre),
            &Search::new(Strategy::Full).prune(&prune).filter(&filter),
        )?
        .iter()
        .map(|c| c.rep.summary())
        .collect();
    }
    Ok(TowerReport {
        k,
        base_order: base.order(),
        preimage_order: pre.order(),
        preimage_nilpotent: pre.is_nilpotent(),
        surjecting_lifts,
    })
}

/// Outcome of `verify_odd_prime_squared`.
#[derive(Clone, Debug, Serialize)]
pub struct OddSquareReport {
    pub p: u32,
    /// Nilpotent classes of GL2(Z/p^2) whose reduction has order prime to p.
    pub classes: usize,
    pub abelian: usize,
    pub scalar_kernel: usize,
    pub violations: Vec<GroupSummary>,
}

/// Whether the kernel of reduction mod p consists of scalars `αI`, `α = 1 mod p`.
pub fn kernel_is_scalar(g: &MatGroup, p: u32) -> Result<bool> {
    Ok(g.kernel_of_reduction(p)?.elements().iter().all(|x| x.is_scalar()))
}

/// `G` is nilpotent and `p` does not divide the order of its reduction mod p.
pub fn odd_square_qualifies(g: &MatGroup, p: u32) -> bool {
    g.is_nilpotent() && g.reduce(p).map(|r| r.order() % p as u64 != 0).unwrap_or(false)
}

/// Checks, over all qualifying subgroups of GL2(Z/p^2), that each is abelian
/// or has scalar kernel of reduction.
pub fn verify_odd_prime_squared(p: u32) -> Result<OddSquareReport> {
    if p != 3 {
        return Err(Error::Unsupported(format!(
            "GL2(Z/{}) is only enumerated for p = 3",
            p * p
        )));
    }
    let prune = move |g: &MatGroup| odd_square_qualifies(g, p);
    let classes = enumerate_subgroups(Ambient::Full(p * p), &Search::new(Strategy::Solvable).prune(&prune))?;
    let mut report = OddSquareReport { p, classes: classes.len(), abelian: 0, scalar_kernel: 0, violations: Vec::new() };
    for c in &classes {
        let ab = c.rep.is_abelian();
        let sc = kernel_is_scalar(&c.rep, p)?;
        report.abelian += ab as usize;
        report.scalar_kernel += sc as usize;
        if !ab && !sc {
            report.violations.push(c.rep.summary());
        }
    }
    Ok(report)
}
