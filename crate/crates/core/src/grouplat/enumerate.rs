//! Subgroup enumeration up to conjugacy.
//!
//! Both exhaustive strategies grow subgroups one generator at a time from the
//! trivial group, keeping one representative per ambient conjugacy class:
//! - `Full` adjoins any element of the ambient and needs a small ambient.
//! - `Solvable` is the cyclic-extension method. Every nontrivial subgroup U of a
//!   solvable group has a normal subgroup V of prime index, so U = <V, g> with g
//!   normalising V and g of prime order modulo V.
//!
//! A user `prune` predicate must be inherited by subgroups; it cuts whole branches.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::conjugacy::{find_conjugator, Ambient, Mode};
use super::group::{Fingerprint, MatGroup};
use super::lift::{lift_search, KernelChoice};
use crate::modmat::arith::factor;
use crate::modmat::Mat2;
use crate::{Error, Result};

/// Largest ambient the `Full` strategy accepts.
pub const FULL_LIMIT: u64 = 10_000;

pub type Pred<'a> = &'a (dyn Fn(&MatGroup) -> bool + Sync);
pub type KernelFn<'a> = &'a (dyn Fn(&MatGroup) -> Vec<KernelChoice> + Sync);

pub enum Strategy<'a> {
    Full,
    Solvable,
    /// Lift each base class from level `m` to the ambient level, with the
    /// kernel intersection `G ∩ Ker(mod m)` restricted to the choices returned
    /// by `kernels` for that base.
    LiftSearch { bases: &'a [MatGroup], kernels: KernelFn<'a> },
}

impl Strategy<'_> {
    fn name(&self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::Solvable => "solvable",
            Strategy::LiftSearch { .. } => "lift_search",
        }
    }
}

/// Options for `enumerate_subgroups`.
pub struct Search<'a> {
    pub strategy: Strategy<'a>,
    /// Subgroup-closed condition; failing groups are never extended.
    pub prune: Option<Pred<'a>>,
    /// Condition on reported classes.
    pub filter: Option<Pred<'a>>,
}

impl<'a> Search<'a> {
    pub fn new(strategy: Strategy<'a>) -> Search<'a> {
        Search { strategy, prune: None, filter: None }
    }

    pub fn prune(mut self, p: Pred<'a>) -> Search<'a> {
        self.prune = Some(p);
        self
    }

    pub fn filter(mut self, p: Pred<'a>) -> Search<'a> {
        self.filter = Some(p);
        self
    }
}

/// A conjugacy class of subgroups, represented by its lexicographically least member found.
#[derive(Clone, Debug)]
pub struct ConjClassRep {
    pub rep: MatGroup,
    pub fingerprint: Fingerprint,
}

impl ConjClassRep {
    pub fn new(rep: MatGroup) -> ConjClassRep {
        let fingerprint = rep.fingerprint().clone();
        ConjClassRep { rep, fingerprint }
    }
}

impl Serialize for ConjClassRep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rep.summary().serialize(s)
    }
}

/// Class bookkeeping shared by all strategies.
pub(crate) struct Registry<'a> {
    ambient: Ambient<'a>,
    reps: Vec<MatGroup>,
    search_reps: Vec<MatGroup>,
    exact: HashMap<Vec<Mat2>, usize>,
    by_fp: HashMap<Fingerprint, Vec<usize>>,
}

impl<'a> Registry<'a> {
    pub(crate) fn new(ambient: Ambient<'a>) -> Registry<'a> {
        Registry { ambient, reps: Vec::new(), search_reps: Vec::new(), exact: HashMap::new(), by_fp: HashMap::new() }
    }

    /// Class index of `g` among the classes numbered `from` onwards.
    fn lookup(&self, g: &MatGroup, from: usize) -> Option<usize> {
        if let Some(&i) = self.exact.get(g.elements()) {
            return Some(i);
        }
        let cands = self.by_fp.get(g.fingerprint())?;
        cands
            .iter()
            .copied()
            .filter(|&i| i >= from)
            .find(|&i| find_conjugator(&self.search_reps[i], g, self.ambient, Mode::Equal).is_some())
    }

    /// Records `g` under class `i` (or a new class), returning `(index, is_new)`.
    fn record(&mut self, g: MatGroup, found: Option<usize>) -> (usize, bool) {
        match found {
            Some(i) => {
                if g.elements() < self.reps[i].elements() {
                    self.reps[i] = g.clone();
                }
                self.exact.insert(g.elements().to_vec(), i);
                (i, false)
            }
            None => {
                let i = self.reps.len();
                self.exact.insert(g.elements().to_vec(), i);
                self.by_fp.entry(g.fingerprint().clone()).or_default().push(i);
                self.reps.push(g.clone());
                self.search_reps.push(g);
                (i, true)
            }
        }
    }

    /// Inserts a batch: conjugacy lookups against existing classes run in
    /// parallel, then the batch is merged in order so the outcome is deterministic.
    pub(crate) fn insert_batch(&mut self, batch: Vec<MatGroup>) -> Vec<usize> {
        batch.par_iter().for_each(|g| {
            g.fingerprint();
        });
        let found: Vec<Option<usize>> = batch.par_iter().map(|g| self.lookup(g, 0)).collect();
        let start = self.reps.len();
        let mut fresh = Vec::new();
        for (g, f) in batch.into_iter().zip(found) {
            let f = f.or_else(|| self.lookup(&g, start));
            let (i, new) = self.record(g, f);
            if new {
                fresh.push(i);
            }
        }
        fresh
    }

    pub(crate) fn search_rep(&self, i: usize) -> &MatGroup {
        &self.search_reps[i]
    }

    pub(crate) fn into_reps(self) -> Vec<MatGroup> {
        self.reps
    }
}

fn is_solvable_order(order: u64) -> bool {
    // Burnside: groups of order p^a q^b are solvable
    factor(order).len() <= 2
}

fn materialize(ambient: Ambient<'_>) -> Result<std::borrow::Cow<'_, MatGroup>> {
    Ok(match ambient {
        Ambient::Full(n) => std::borrow::Cow::Owned(MatGroup::full_gl2(n)?),
        Ambient::Group(g) => std::borrow::Cow::Borrowed(g),
    })
}

/// Children of class representative `v` for the exhaustive strategies.
fn children(v: &MatGroup, amb: &MatGroup, solvable: bool, prune: Option<Pred<'_>>) -> Vec<MatGroup> {
    let mut out: Vec<MatGroup> = Vec::new();
    let mut marked = vec![false; amb.elements().len()];
    for x in v.elements() {
        marked[amb.position(x).expect("subgroup of the ambient")] = true;
    }
    for (i, g) in amb.elements().iter().enumerate() {
        if marked[i] {
            continue;
        }
        if solvable {
            if !v.is_normalized_by(g) {
                marked[i] = true;
                continue;
            }
            // order of g modulo v must be prime
            let mut j = 1u64;
            let mut y = *g;
            while !v.contains(&y) {
                y = y * *g;
                j += 1;
            }
            if factor(j).len() != 1 || factor(j)[0].1 != 1 {
                marked[i] = true;
                continue;
            }
        }
        let u = v.extend(g).expect("subgroup of the ambient stays in budget");
        if solvable {
            // every element of U \ V generates U over V
            for x in u.elements() {
                marked[amb.position(x).unwrap()] = true;
            }
        } else {
            // <V, g> = <V, g^e v> for units e modulo the order of g
            let o = amb.element_orders()[i];
            for e in 1..o {
                if crate::modmat::arith::gcd(e, o) != 1 {
                    continue;
                }
                let ge = g.pow(e);
                for x in v.elements() {
                    marked[amb.position(&(ge * *x)).unwrap()] = true;
                }
            }
        }
        if prune.is_none_or(|p| p(&u)) && !out.iter().any(|w| w == &u) {
            out.push(u);
        }
    }
    out
}

/// Conjugacy classes of subgroups of `ambient` passing the search filters.
///
/// Completeness holds for `Full` and `Solvable`; for `LiftSearch` it holds
/// among groups whose kernel intersection is one of the supplied choices.
pub fn enumerate_subgroups(ambient: Ambient<'_>, search: &Search<'_>) -> Result<Vec<ConjClassRep>> {
    let reps = match &search.strategy {
        Strategy::Full | Strategy::Solvable => {
            let amb = materialize(ambient)?;
            let solvable = matches!(search.strategy, Strategy::Solvable);
            if !solvable && amb.order() > FULL_LIMIT {
                return Err(Error::Strategy {
                    strategy: search.strategy.name(),
                    why: format!("ambient of order {} exceeds {FULL_LIMIT}", amb.order()),
                });
            }
            if solvable && !is_solvable_order(amb.order()) && amb.derived_length().is_none() {
                return Err(Error::Strategy {
                    strategy: search.strategy.name(),
                    why: "ambient group is not solvable".into(),
                });
            }
            exhaustive(&amb, solvable, search.prune)?
        }
        Strategy::LiftSearch { bases, kernels } => {
            let mut reg = Registry::new(ambient);
            let n = ambient.modulus();
            let lifted: Vec<Vec<MatGroup>> = bases
                .par_iter()
                .map(|h| lift_search(h, n, &kernels(h)))
                .collect::<Result<_>>()?;
            for batch in lifted {
                let keep: Vec<MatGroup> = batch.into_iter().filter(|g| search.prune.is_none_or(|p| p(g))).collect();
                reg.insert_batch(keep);
            }
            reg.into_reps()
        }
    };
    let mut out: Vec<ConjClassRep> = reps
        .into_par_iter()
        .filter(|g| search.filter.is_none_or(|f| f(g)))
        .map(ConjClassRep::new)
        .collect();
    sort_classes(&mut out);
    Ok(out)
}

fn exhaustive(amb: &MatGroup, solvable: bool, prune: Option<Pred<'_>>) -> Result<Vec<MatGroup>> {
    amb.element_orders();
    let mut reg = Registry::new(Ambient::Group(amb));
    let trivial = MatGroup::trivial(amb.modulus());
    if prune.is_some_and(|p| !p(&trivial)) {
        return Ok(Vec::new());
    }
    let mut frontier = reg.insert_batch(vec![trivial]);
    while !frontier.is_empty() {
        let kids: Vec<Vec<MatGroup>> = frontier
            .par_iter()
            .map(|&i| children(reg.search_rep(i), amb, solvable, prune))
            .collect();
        frontier = reg.insert_batch(kids.into_iter().flatten().collect());
    }
    Ok(reg.into_reps())
}

/// Canonical order: by group order, then fingerprint, then element list.
pub fn sort_classes(v: &mut [ConjClassRep]) {
    v.sort_by(|a, b| {
        (a.rep.order(), &a.fingerprint, a.rep.elements()).cmp(&(b.rep.order(), &b.fingerprint, b.rep.elements()))
    });
}

/// Classes not conjugate-contained in a strictly larger class of the list.
pub fn maximal_classes(classes: &[ConjClassRep], ambient: Ambient<'_>) -> Vec<ConjClassRep> {
    let mut idx: Vec<usize> = (0..classes.len()).collect();
    idx.sort_by_key(|&i| std::cmp::Reverse(classes[i].rep.order()));
    let mut kept: Vec<usize> = Vec::new();
    for i in idx {
        let c = &classes[i];
        let inside = kept.par_iter().any(|&j| {
            let d = &classes[j];
            d.rep.order() > c.rep.order()
                && c.fingerprint.could_embed_in(&d.fingerprint)
                && find_conjugator(&c.rep, &d.rep, ambient, Mode::Into).is_some()
        });
        if !inside {
            kept.push(i);
        }
    }
    let mut out: Vec<ConjClassRep> = kept.into_iter().map(|i| classes[i].clone()).collect();
    sort_classes(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmat::Mat2;

    /// Brute-force oracle: subsets of GL2(F2) closed under multiplication.
    fn subgroups_gl2_f2_brute() -> Vec<Vec<Mat2>> {
        let g = MatGroup::full_gl2(2).unwrap();
        let el = g.elements().to_vec();
        let mut out = Vec::new();
        for mask in 1u32..(1 << el.len()) {
            let s: Vec<Mat2> = (0..el.len()).filter(|i| mask >> i & 1 == 1).map(|i| el[i]).collect();
            if s.iter().all(|a| s.iter().all(|b| s.contains(&(*a * *b)))) {
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn gl2_f2_has_six_classes() {
        let brute = subgroups_gl2_f2_brute();
        assert_eq!(brute.len(), 6); // 1, three of order 2, one of order 3, S3
        let classes = enumerate_subgroups(Ambient::Full(2), &Search::new(Strategy::Full)).unwrap();
        let orders: Vec<u64> = classes.iter().map(|c| c.rep.order()).collect();
        assert_eq!(orders, vec![1, 2, 3, 6]);
        let solv = enumerate_subgroups(Ambient::Full(2), &Search::new(Strategy::Solvable)).unwrap();
        assert_eq!(solv.len(), classes.len());
    }

    #[test]
    fn strategies_agree_on_gl2_f3() {
        let full = enumerate_subgroups(Ambient::Full(3), &Search::new(Strategy::Full)).unwrap();
        let solv = enumerate_subgroups(Ambient::Full(3), &Search::new(Strategy::Solvable)).unwrap();
        assert_eq!(full.len(), 16);
        assert_eq!(solv.len(), 16);
        for (a, b) in full.iter().zip(&solv) {
            assert_eq!(a.fingerprint, b.fingerprint);
            assert!(find_conjugator(&a.rep, &b.rep, Ambient::Full(3), Mode::Equal).is_some());
        }
    }

    #[test]
    fn full_rejects_large_ambient() {
        let r = enumerate_subgroups(Ambient::Full(11), &Search::new(Strategy::Full));
        assert!(matches!(r, Err(Error::Strategy { .. })));
        let r = enumerate_subgroups(Ambient::Full(5), &Search::new(Strategy::Solvable));
        assert!(matches!(r, Err(Error::Strategy { .. })));
    }

    #[test]
    fn maximal_of_all_is_ambient() {
        let full = enumerate_subgroups(Ambient::Full(3), &Search::new(Strategy::Full)).unwrap();
        let max = maximal_classes(&full, Ambient::Full(3));
        assert_eq!(max.len(), 1);
        assert_eq!(max[0].rep.order(), 48);
    }
}
