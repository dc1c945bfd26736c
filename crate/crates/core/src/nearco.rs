//! Near coincidences: groups G mod n whose determinant-one part meets the
//! kernel of reduction mod m trivially, and the searches that find the
//! maximal ones at prime-power levels.
//!
//! Lift constraint. Let K = Ker(GL2(Z/p^k) -> GL2(Z/p^(k-1))) = I + p^(k-1) M2(F_p)
//! for k >= 2. On K the determinant is I + p^(k-1) X -> 1 + p^(k-1) tr X, so
//! the determinant-one part of K is the trace-zero part. If G represents a
//! near coincidence of level (p^k, p^(k-1)) then det is injective on G ∩ K,
//! whose image lies in 1 + p^(k-1) Z/p^k, a group of order p. Hence G ∩ K is
//! trivial or the span of one I + p^(k-1) X0 with tr X0 != 0, which may be
//! scaled to tr X0 = 1. Normality of G ∩ K in G makes that line stable under
//! conjugation by the image of G mod p, and since conjugation fixes traces the
//! line is fixed pointwise, i.e. X0 commutes with the image.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::grouplat::{
    enumerate_subgroups, maximal_classes, stable_trace_lines, Ambient, ConjClassRep, KernelChoice, MatGroup, Search,
    Strategy,
};
use crate::modcurve::{invariants, CurveInvariants};
use crate::modmat::Mat2;
use crate::nilpclass::is_admissible;
use crate::{Error, Result};

/// Levels `(n, m)` of a near coincidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct NearCoParams {
    pub n: u32,
    pub m: u32,
}

impl NearCoParams {
    pub fn new(n: u32, m: u32) -> Result<NearCoParams> {
        if m == 0 || !n.is_multiple_of(m) || m >= n {
            return Err(Error::NotDivisor(m, n));
        }
        Ok(NearCoParams { n, m })
    }
}

/// `(G ∩ SL2) ∩ Ker(mod m) = {I}`; subgroup closed, so usable as a prune.
pub fn kernel_condition(g: &MatGroup, m: u32) -> bool {
    let id = Mat2::identity(m);
    let one = 1 % g.modulus();
    g.elements()
        .iter()
        .filter(|x| x.det() == one && !x.is_identity())
        .all(|x| x.reduce(m).unwrap() != id)
}

/// Whether `G` represents a near coincidence of level `(N, m)`.
pub fn represents_nearco(g: &MatGroup, m: u32) -> Result<bool> {
    NearCoParams::new(g.modulus(), m)?;
    if !g.is_det_surjective() {
        return Err(Error::DetNotSurjective(g.modulus()));
    }
    Ok(kernel_condition(g, m))
}

/// One maximal class with its curve data.
#[derive(Clone, Debug, Serialize)]
pub struct NearCoClass {
    pub class: ConjClassRep,
    pub invariants: CurveInvariants,
    pub admissible: bool,
    /// `|G ∩ Ker(mod p^(k-1))|`.
    pub kernel_order: u64,
}

/// Levels supported by `maximal_nearco`.
pub const NEARCO_LEVELS: [(u32, u32); 5] = [(2, 2), (3, 2), (5, 2), (2, 3), (3, 3)];

fn kernel_choices(h: &MatGroup, p: u32) -> Vec<KernelChoice> {
    let mut out = vec![KernelChoice::Trivial];
    out.extend(stable_trace_lines(h, p).into_iter().map(KernelChoice::Line));
    out
}

/// All determinant-surjective near-coincidence classes at level
/// `(p^k, p^(k-1))` found by a pruned solvable enumeration.
pub fn nearco_classes_solvable(p: u32, k: u32) -> Result<Vec<ConjClassRep>> {
    let n = p.pow(k);
    let m = n / p;
    let prune = move |g: &MatGroup| kernel_condition(g, m);
    let filter = |g: &MatGroup| g.is_det_surjective();
    enumerate_subgroups(Ambient::Full(n), &Search::new(Strategy::Solvable).prune(&prune).filter(&filter))
}

/// The same classes by lifting `bases` (level `p^(k-1)`) under the kernel constraint.
pub fn nearco_classes_lifted(p: u32, k: u32, bases: &[MatGroup]) -> Result<Vec<ConjClassRep>> {
    let n = p.pow(k);
    let m = n / p;
    let kernels = move |h: &MatGroup| kernel_choices(h, p);
    let filter = move |g: &MatGroup| g.is_det_surjective() && kernel_condition(g, m);
    enumerate_subgroups(
        Ambient::Full(n),
        &Search::new(Strategy::LiftSearch { bases, kernels: &kernels }).filter(&filter),
    )
}

/// Determinant-surjective subgroup classes of GL2(Z/p^j).
fn det_surjective_classes(p: u32, j: u32) -> Result<Vec<MatGroup>> {
    let filter = |g: &MatGroup| g.is_det_surjective();
    let strategy = if p <= 3 { Strategy::Solvable } else { Strategy::Full };
    Ok(enumerate_subgroups(Ambient::Full(p.pow(j)), &Search::new(strategy).filter(&filter))?
        .into_iter()
        .map(|c| c.rep)
        .collect())
}

/// Lift bases for level `p^k`: every determinant-surjective class one level down.
/// At `(3, 3)` the bases are restricted to the `(9, 3)` near coincidences: if
/// `h` in G is `I + 3X mod 9` with `tr X = 0 mod 3` and `X != 0 mod 3`, then
/// `h^3 = I + 9X mod 27` is a nontrivial determinant-one kernel element.
pub fn lift_bases(p: u32, k: u32) -> Result<Vec<MatGroup>> {
    match (p, k) {
        (3, 3) => Ok(nearco_classes_solvable(3, 2)?.into_iter().map(|c| c.rep).collect()),
        _ => det_surjective_classes(p, k - 1),
    }
}

/// Maximal near-coincidence classes of level `(p^k, p^(k-1))`, with invariants.
pub fn maximal_nearco(p: u32, k: u32) -> Result<Vec<NearCoClass>> {
    if !NEARCO_LEVELS.contains(&(p, k)) {
        return Err(Error::Unsupported(format!("near-coincidence search at p = {p}, k = {k}")));
    }
    let n = p.pow(k);
    let all = match (p, k) {
        (2, _) | (3, 2) => nearco_classes_solvable(p, k)?,
        _ => nearco_classes_lifted(p, k, &lift_bases(p, k)?)?,
    };
    let maximal = maximal_classes(&all, Ambient::Full(n));
    maximal
        .into_par_iter()
        .map(|class| {
            let kernel_order = class.rep.kernel_of_reduction(n / p)?.order();
            Ok(NearCoClass {
                invariants: invariants(&class.rep)?,
                admissible: is_admissible(&class.rep),
                kernel_order,
                class,
            })
        })
        .collect()
}

/// Outcome of `lift_identity_check`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LiftIdentityReport {
    pub p: u32,
    pub n: u32,
    pub trials: usize,
    /// Random trials where `(I + p^n X)^p != I + p^(n+1) X mod p^(n+2)`.
    pub failures: usize,
    /// A failing `X` (entries mod p^2), searched exhaustively when `(p, n) = (2, 1)`.
    pub witness: Option<[u32; 4]>,
}

fn lift_identity_holds(x: [i64; 4], p: u32, n: u32) -> bool {
    let q = p.pow(n + 2);
    let pn = p.pow(n) as i64;
    let lhs = Mat2::new([1 + pn * x[0], pn * x[1], pn * x[2], 1 + pn * x[3]], q).pow(p as u64);
    let rhs = Mat2::new([1 + p as i64 * pn * x[0], p as i64 * pn * x[1], p as i64 * pn * x[2], 1 + p as i64 * pn * x[3]], q);
    lhs == rhs
}

/// Tests `(I + p^n X)^p = I + p^(n+1) X mod p^(n+2)` on random `X` over Z/p^2.
pub fn lift_identity_check(p: u32, n: u32, trials: usize, seed: u64) -> LiftIdentityReport {
    let p2 = (p * p) as i64;
    let mut rng = StdRng::seed_from_u64(seed);
    let failures = (0..trials)
        .filter(|_| {
            let x = [rng.gen_range(0..p2), rng.gen_range(0..p2), rng.gen_range(0..p2), rng.gen_range(0..p2)];
            !lift_identity_holds(x, p, n)
        })
        .count();
    let witness = if (p, n) == (2, 1) {
        (0..(p2 as u64).pow(4)).map(|c| Mat2::from_code(c, p2 as u32).entries()).find(|e| {
            let x = e.map(|v| v as i64);
            !lift_identity_holds(x, p, n)
        })
    } else {
        None
    };
    LiftIdentityReport { p, n, trials, failures, witness }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouplat::{are_conjugate, find_conjugator, Mode};
    use crate::modmat::arith::gl2_order;
    use proptest::prelude::*;

    fn prefixes(classes: &[NearCoClass]) -> Vec<String> {
        let mut v: Vec<String> = classes.iter().map(|c| c.invariants.label_prefix.clone()).collect();
        v.sort();
        v
    }

    #[test]
    fn full_group_is_not_a_near_coincidence() {
        let g = MatGroup::full_gl2(4).unwrap();
        assert!(!represents_nearco(&g, 2).unwrap());
        assert!(represents_nearco(&MatGroup::full_sl2(4).unwrap(), 2).is_err());
        assert!(represents_nearco(&g, 3).is_err());
    }

    /// Oracle: every determinant-surjective subgroup of GL2(Z/4) with trivial
    /// kernel of reduction passes, and such groups exist.
    #[test]
    fn trivial_kernel_is_a_near_coincidence() {
        let mut seen = 0;
        for g in det_surjective_classes(2, 2).unwrap() {
            if g.kernel_of_reduction(2).unwrap().order() == 1 {
                assert!(represents_nearco(&g, 2).unwrap());
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn level_four() {
        let classes = maximal_nearco(2, 2).unwrap();
        assert_eq!(prefixes(&classes), ["4.16.0", "4.16.0", "4.48.0"]);
        for c in &classes {
            assert!(represents_nearco(&c.class.rep, 2).unwrap());
            assert!(c.kernel_order <= 2);
        }
    }

    #[test]
    fn level_nine() {
        let classes = maximal_nearco(3, 2).unwrap();
        assert_eq!(prefixes(&classes), ["9.162.4", "9.27.0", "9.324.10"]);
        assert!(classes.iter().all(|c| c.kernel_order <= 3));
    }

    /// The lift search and the exhaustive solvable enumeration agree at (4,2) and (9,3).
    #[test]
    fn strategies_agree() {
        for p in [2u32, 3] {
            let n = p * p;
            let solv = nearco_classes_solvable(p, 2).unwrap();
            let lifted = nearco_classes_lifted(p, 2, &lift_bases(p, 2).unwrap()).unwrap();
            assert_eq!(solv.len(), lifted.len(), "p = {p}");
            let amb = MatGroup::full_gl2(n).unwrap();
            for c in &solv {
                assert_eq!(lifted.iter().filter(|d| are_conjugate(&c.rep, &d.rep, &amb)).count(), 1);
            }
        }
    }

    /// Every near-coincidence class lies in a reported maximal one, and none of
    /// the maximal ones lies in another.
    #[test]
    fn maximality() {
        for p in [2u32, 3] {
            let n = p * p;
            let all = nearco_classes_solvable(p, 2).unwrap();
            let max = maximal_nearco(p, 2).unwrap();
            for c in &all {
                assert!(max
                    .iter()
                    .any(|m| find_conjugator(&c.rep, &m.class.rep, Ambient::Full(n), Mode::Into).is_some()));
            }
            for (i, a) in max.iter().enumerate() {
                for (j, b) in max.iter().enumerate() {
                    if i != j {
                        assert!(find_conjugator(&a.class.rep, &b.class.rep, Ambient::Full(n), Mode::Into).is_none());
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_bound_on_all_classes() {
        for c in nearco_classes_solvable(3, 2).unwrap() {
            assert!(c.rep.kernel_of_reduction(3).unwrap().order() <= 3);
            assert!(gl2_order(9).is_multiple_of(c.rep.order()));
        }
    }

    #[test]
    fn lift_identity() {
        assert!(lift_identity_holds([1, 0, 0, 1], 3, 1));
        let r = lift_identity_check(5, 1, 500, 7);
        assert_eq!(r.failures, 0);
        assert!(r.witness.is_none());
        for (p, n) in [(3, 1), (3, 2), (2, 2), (2, 3), (7, 1)] {
            assert_eq!(lift_identity_check(p, n, 200, 1).failures, 0, "p = {p}, n = {n}");
        }
        let w = lift_identity_check(2, 1, 50, 3).witness.expect("p = 2, n = 1 fails somewhere");
        let x = w.map(|v| v as i64);
        // independent check: (I + 2X)^2 - (I + 4X) = 4X^2 mod 8
        let x2 = [x[0] * x[0] + x[1] * x[2], x[0] * x[1] + x[1] * x[3], x[2] * x[0] + x[3] * x[2], x[2] * x[1] + x[3] * x[3]];
        assert!(x2.iter().any(|v| (4 * v).rem_euclid(8) != 0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn nearco_is_conjugation_invariant(e in prop::array::uniform4(0i64..4), idx in 0usize..3) {
            let x = Mat2::new(e, 4);
            prop_assume!(x.is_invertible());
            let classes = nearco_classes_solvable(2, 2).unwrap();
            let g = &classes[idx * (classes.len() - 1) / 2].rep;
            prop_assert_eq!(kernel_condition(g, 2), kernel_condition(&g.conjugate_by(&x), 2));
        }
    }

    #[test]
    fn unsupported_level() {
        assert!(maximal_nearco(7, 2).is_err());
    }
}
