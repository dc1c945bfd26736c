use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::modmat::arith::{euler_phi, factor, gcd, gl2_order, unit_group_gens};
use crate::modmat::Mat2;
use crate::{Error, Result};

/// Default cap on the number of elements a closure may produce.
pub const DEFAULT_BUDGET: usize = 1 << 22;

/// Membership set for packed matrix codes: a bitmap for small moduli, hashing otherwise.
pub(crate) enum CodeSet {
    Dense(Vec<u64>),
    Sparse(HashSet<u64>),
}

impl CodeSet {
    pub(crate) fn new(n: u32) -> CodeSet {
        let size = (n as u64).pow(4);
        if size <= 1 << 22 {
            CodeSet::Dense(vec![0; (size as usize).div_ceil(64)])
        } else {
            CodeSet::Sparse(HashSet::new())
        }
    }

    /// Inserts and reports whether the code was new.
    #[inline]
    pub(crate) fn insert(&mut self, c: u64) -> bool {
        match self {
            CodeSet::Dense(bits) => {
                let (w, b) = ((c >> 6) as usize, c & 63);
                let fresh = bits[w] & (1 << b) == 0;
                bits[w] |= 1 << b;
                fresh
            }
            CodeSet::Sparse(set) => set.insert(c),
        }
    }

    #[inline]
    pub(crate) fn contains(&self, c: u64) -> bool {
        match self {
            CodeSet::Dense(bits) => bits[(c >> 6) as usize] & (1 << (c & 63)) != 0,
            CodeSet::Sparse(set) => set.contains(&c),
        }
    }
}

/// Conjugacy invariant of a subgroup: order, derived length and the multiset
/// of `(element order, trace, det)` triples.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fingerprint {
    pub order: u64,
    /// `u32::MAX` for non-solvable groups.
    pub derived_length: u32,
    pub profile: Vec<((u64, u32, u32), u32)>,
}

impl Fingerprint {
    /// Whether a subgroup with this fingerprint could sit inside one with `other`.
    pub fn could_embed_in(&self, other: &Fingerprint) -> bool {
        if !other.order.is_multiple_of(self.order) || self.derived_length > other.derived_length {
            return false;
        }
        let theirs: BTreeMap<_, _> = other.profile.iter().cloned().collect();
        self.profile
            .iter()
            .all(|(key, c)| theirs.get(key).is_some_and(|d| d >= c))
    }
}

#[derive(Clone, Default)]
struct Caches {
    orders: OnceLock<Vec<u64>>,
    small_gens: OnceLock<Vec<Mat2>>,
    classes: OnceLock<Vec<(Mat2, usize)>>,
    fingerprint: OnceLock<Fingerprint>,
    nilpotent: OnceLock<bool>,
    derived_length: OnceLock<Option<u32>>,
}

/// A subgroup of GL2(Z/NZ) with its full element set.
///
/// Elements are kept sorted, which for a fixed modulus is the order of packed codes.
/// Structural data is computed on demand and cached write-once.
#[derive(Clone)]
pub struct MatGroup {
    n: u32,
    gens: Vec<Mat2>,
    elems: Vec<Mat2>,
    cache: Caches,
}

impl PartialEq for MatGroup {
    fn eq(&self, o: &MatGroup) -> bool {
        self.n == o.n && self.elems == o.elems
    }
}

impl Eq for MatGroup {}

impl fmt::Debug for MatGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatGroup(level {}, order {}, gens {:?})", self.n, self.order(), self.gens)
    }
}

/// Closure of `gens` over the known subgroup `base`, by coset enumeration.
///
/// The result is a sorted element list. `base` must be a subgroup containing I.
fn dimino(base: &[Mat2], extra: &[Mat2], all_gens: &[Mat2], n: u32, budget: usize) -> Result<Vec<Mat2>> {
    let mut seen = CodeSet::new(n);
    for x in base {
        seen.insert(x.code());
    }
    let mut elems: Vec<Mat2> = base.to_vec();
    let block = base.len();
    // new cosets x*base are discovered by left multiplication with generators
    let mut reps: Vec<Mat2> = vec![Mat2::identity(n)];
    let mut pending: Vec<Mat2> = extra.iter().copied().filter(|g| !seen.contains(g.code())).collect();
    let add_coset = |x: Mat2, seen: &mut CodeSet, elems: &mut Vec<Mat2>, reps: &mut Vec<Mat2>| -> Result<()> {
        for b in base {
            let y = x * *b;
            seen.insert(y.code());
            elems.push(y);
        }
        reps.push(x);
        if elems.len() > budget {
            return Err(Error::Budget(budget));
        }
        Ok(())
    };
    for g in pending.drain(..) {
        if !seen.contains(g.code()) {
            add_coset(g, &mut seen, &mut elems, &mut reps)?;
        }
    }
    let mut i = 0;
    while i < reps.len() {
        let x = reps[i];
        for s in all_gens {
            let y = *s * x;
            if !seen.contains(y.code()) {
                add_coset(y, &mut seen, &mut elems, &mut reps)?;
            }
        }
        i += 1;
    }
    debug_assert_eq!(elems.len() % block, 0);
    elems.sort_unstable();
    Ok(elems)
}

impl MatGroup {
    /// The trivial group at level `n`.
    pub fn trivial(n: u32) -> MatGroup {
        MatGroup {
            n,
            gens: Vec::new(),
            elems: vec![Mat2::identity(n)],
            cache: Caches::default(),
        }
    }

    /// Closure of `gens` with the default element budget.
    pub fn generate(gens: &[Mat2], n: u32) -> Result<MatGroup> {
        MatGroup::generate_with_budget(gens, n, DEFAULT_BUDGET)
    }

    pub fn generate_with_budget(gens: &[Mat2], n: u32, budget: usize) -> Result<MatGroup> {
        for g in gens {
            if g.modulus() != n {
                return Err(Error::ModulusMismatch { left: n, right: g.modulus() });
            }
            if !g.is_invertible() {
                return Err(Error::NotInvertible(g.to_string()));
            }
        }
        let mut group = MatGroup::trivial(n);
        for g in gens {
            group = group.extend_with_budget(g, budget)?;
        }
        group.gens = gens.iter().copied().filter(|g| !g.is_identity()).collect();
        group.gens.dedup();
        Ok(group)
    }

    /// `<self, g>`, reusing the known elements of `self`.
    pub fn extend(&self, g: &Mat2) -> Result<MatGroup> {
        self.extend_with_budget(g, DEFAULT_BUDGET)
    }

    pub fn extend_with_budget(&self, g: &Mat2, budget: usize) -> Result<MatGroup> {
        if g.modulus() != self.n {
            return Err(Error::ModulusMismatch { left: self.n, right: g.modulus() });
        }
        if self.contains(g) {
            return Ok(self.clone());
        }
        if !g.is_invertible() {
            return Err(Error::NotInvertible(g.to_string()));
        }
        let mut gens = self.gens.clone();
        gens.push(*g);
        let elems = dimino(&self.elems, &[*g], &gens, self.n, budget)?;
        Ok(MatGroup { n: self.n, gens, elems, cache: Caches::default() })
    }

    /// `<self, gs>`.
    pub fn extend_many(&self, gs: &[Mat2]) -> Result<MatGroup> {
        let mut g = self.clone();
        for x in gs {
            g = g.extend(x)?;
        }
        Ok(g)
    }

    /// Wraps a set known to be a group; generators are recomputed greedily.
    pub fn from_elements(n: u32, mut elems: Vec<Mat2>) -> Result<MatGroup> {
        elems.sort_unstable();
        elems.dedup();
        let mut g = MatGroup { n, gens: Vec::new(), elems, cache: Caches::default() };
        let gens = g.greedy_generators()?;
        g.gens = gens;
        Ok(g)
    }

    /// GL2(Z/nZ), generated by the two standard SL2 generators and `diag(u, 1)`
    /// for generators `u` of the unit group.
    pub fn full_gl2(n: u32) -> Result<MatGroup> {
        let mut gens = vec![Mat2::new([1, 1, 0, 1], n), Mat2::new([0, -1, 1, 0], n)];
        for u in unit_group_gens(n as u64) {
            gens.push(Mat2::diag(u as i64, 1, n));
        }
        let g = MatGroup::generate(&gens, n)?;
        debug_assert_eq!(g.order(), gl2_order(n as u64));
        Ok(g)
    }

    /// SL2(Z/nZ).
    pub fn full_sl2(n: u32) -> Result<MatGroup> {
        MatGroup::generate(&[Mat2::new([1, 1, 0, 1], n), Mat2::new([0, -1, 1, 0], n)], n)
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.n
    }

    pub fn generators(&self) -> &[Mat2] {
        &self.gens
    }

    #[inline]
    pub fn elements(&self) -> &[Mat2] {
        &self.elems
    }

    #[inline]
    pub fn order(&self) -> u64 {
        self.elems.len() as u64
    }

    pub fn index_in_gl2(&self) -> u64 {
        gl2_order(self.n as u64) / self.order()
    }

    #[inline]
    pub fn contains(&self, m: &Mat2) -> bool {
        m.modulus() == self.n && self.elems.binary_search(m).is_ok()
    }

    #[inline]
    pub fn position(&self, m: &Mat2) -> Option<usize> {
        self.elems.binary_search(m).ok()
    }

    pub fn is_subgroup_of(&self, other: &MatGroup) -> bool {
        self.n == other.n && other.order().is_multiple_of(self.order()) && self.gens.iter().all(|g| other.contains(g))
    }

    /// A short generating set, chosen greedily by descending element order.
    pub fn small_generators(&self) -> &[Mat2] {
        self.cache
            .small_gens
            .get_or_init(|| self.greedy_generators().expect("subgroup closure stays in budget"))
    }

    fn greedy_generators(&self) -> Result<Vec<Mat2>> {
        let orders = self.element_orders();
        let mut idx: Vec<usize> = (0..self.elems.len()).collect();
        idx.sort_by_key(|&i| (std::cmp::Reverse(orders[i]), self.elems[i]));
        let mut span = MatGroup::trivial(self.n);
        let mut gens = Vec::new();
        for i in idx {
            if span.order() == self.order() {
                break;
            }
            let x = self.elems[i];
            if !span.contains(&x) {
                span = span.extend(&x)?;
                gens.push(x);
            }
        }
        Ok(gens)
    }

    /// Factorisation of |G|.
    pub fn order_factored(&self) -> Vec<(u64, u32)> {
        factor(self.order())
    }

    /// Element orders aligned with `elements()`.
    pub fn element_orders(&self) -> &[u64] {
        self.cache.orders.get_or_init(|| {
            let fac = self.order_factored();
            self.elems.iter().map(|x| x.order_dividing(&fac)).collect()
        })
    }

    pub fn exponent(&self) -> u64 {
        self.element_orders().iter().fold(1, |acc, &o| acc / gcd(acc, o) * o)
    }

    pub fn is_abelian(&self) -> bool {
        let g = self.small_generators();
        g.iter().enumerate().all(|(i, a)| g[i + 1..].iter().all(|b| *a * *b == *b * *a))
    }

    pub fn commutes_with_all(&self, x: &Mat2) -> bool {
        self.small_generators().iter().all(|g| *g * *x == *x * *g)
    }

    pub fn center(&self) -> MatGroup {
        let elems: Vec<Mat2> = self.elems.iter().copied().filter(|x| self.commutes_with_all(x)).collect();
        MatGroup::from_elements(self.n, elems).expect("center is a subgroup")
    }

    /// Nilpotency by the Sylow criterion: for each prime q dividing |G| the
    /// q-elements number exactly |G|_q, i.e. the Sylow q-subgroup is unique.
    pub fn is_nilpotent(&self) -> bool {
        *self.cache.nilpotent.get_or_init(|| {
            let orders = self.element_orders();
            self.order_factored().into_iter().all(|(q, e)| {
                let qpart = q.pow(e);
                let count = orders.iter().filter(|&&o| qpart % o == 0).count() as u64;
                count == qpart
            })
        })
    }

    /// Nilpotency through the lower central series: G_{i+1} = [G_i, G] must reach {I}.
    pub fn is_nilpotent_lcs(&self) -> bool {
        let mut cur = self.clone();
        loop {
            if cur.order() == 1 {
                return true;
            }
            let next = self.commutator_with(&cur);
            if next.order() == cur.order() {
                return false;
            }
            cur = next;
        }
    }

    /// Nilpotency as "G is the direct product of one Sylow subgroup per prime":
    /// builds Sylow subgroups and checks that different ones commute elementwise.
    pub fn is_nilpotent_sylow_product(&self) -> bool {
        let sylows: Vec<MatGroup> = self.order_factored().into_iter().map(|(q, _)| self.sylow(q)).collect();
        for (i, a) in sylows.iter().enumerate() {
            for b in &sylows[i + 1..] {
                for x in a.small_generators() {
                    for y in b.small_generators() {
                        if *x * *y != *y * *x {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// A Sylow q-subgroup, grown one normalising q-element at a time.
    pub fn sylow(&self, q: u64) -> MatGroup {
        let target = self
            .order_factored()
            .into_iter()
            .find(|&(r, _)| r == q)
            .map_or(1, |(_, e)| q.pow(e));
        let orders = self.element_orders();
        let qelems: Vec<Mat2> = self
            .elems
            .iter()
            .zip(orders)
            .filter(|(_, &o)| o > 1 && target % o == 0)
            .map(|(x, _)| *x)
            .collect();
        let mut p = MatGroup::trivial(self.n);
        while p.order() < target {
            let next = qelems.iter().find(|x| {
                !p.contains(x) && p.is_normalized_by(x) && p.contains(&x.pow(q))
            });
            match next {
                Some(x) => p = p.extend(x).expect("q-subgroup closure"),
                None => unreachable!("a non-Sylow q-subgroup has a normalising q-element outside it"),
            }
        }
        p
    }

    pub fn is_normalized_by(&self, x: &Mat2) -> bool {
        let xi = x.inv();
        self.small_generators().iter().all(|g| self.contains(&(*x * *g * xi)))
    }

    pub fn is_normal_in(&self, ambient: &MatGroup) -> bool {
        ambient.small_generators().iter().all(|x| self.is_normalized_by(x))
    }

    /// Smallest subgroup containing `seeds` normalised by `self`.
    pub fn normal_closure(&self, seeds: &[Mat2]) -> MatGroup {
        let mut s = MatGroup::trivial(self.n);
        let mut queue: Vec<Mat2> = seeds.to_vec();
        while let Some(x) = queue.pop() {
            if s.contains(&x) {
                continue;
            }
            s = s.extend(&x).expect("subgroup of a finite group");
            for g in self.small_generators() {
                let gi = g.inv();
                for y in s.small_generators_or_gens() {
                    let c = *g * y * gi;
                    if !s.contains(&c) {
                        queue.push(c);
                    }
                }
            }
        }
        s
    }

    fn small_generators_or_gens(&self) -> Vec<Mat2> {
        if self.gens.len() <= 4 {
            self.gens.clone()
        } else {
            self.small_generators().to_vec()
        }
    }

    /// [self, other] for a subgroup `other` normalised by `self`.
    pub fn commutator_with(&self, other: &MatGroup) -> MatGroup {
        let mut seeds = Vec::new();
        for a in self.small_generators() {
            for b in other.small_generators() {
                let c = *a * *b * a.inv() * b.inv();
                if !c.is_identity() {
                    seeds.push(c);
                }
            }
        }
        self.normal_closure(&seeds)
    }

    pub fn derived_subgroup(&self) -> MatGroup {
        self.commutator_with(self)
    }

    /// Derived series G >= G' >= G'' >= ... down to the first repeat.
    pub fn derived_series(&self) -> Vec<MatGroup> {
        let mut series = vec![self.clone()];
        loop {
            let next = series.last().unwrap().derived_subgroup();
            if next.order() == series.last().unwrap().order() {
                break;
            }
            series.push(next);
        }
        series
    }

    /// Length of the derived series, `None` when G is not solvable.
    pub fn derived_length(&self) -> Option<u32> {
        *self.cache.derived_length.get_or_init(|| {
            let s = self.derived_series();
            (s.last().unwrap().order() == 1).then(|| s.len() as u32 - 1)
        })
    }

    /// Conjugacy classes as `(representative, size)`, by orbits under the generators.
    pub fn conjugacy_classes(&self) -> &[(Mat2, usize)] {
        self.cache.classes.get_or_init(|| {
            let gens = self.small_generators();
            let inv: Vec<Mat2> = gens.iter().map(Mat2::inv).collect();
            let mut seen = vec![false; self.elems.len()];
            let mut out = Vec::new();
            for start in 0..self.elems.len() {
                if seen[start] {
                    continue;
                }
                seen[start] = true;
                let mut stack = vec![start];
                let mut size = 0;
                while let Some(i) = stack.pop() {
                    size += 1;
                    let x = self.elems[i];
                    for (g, gi) in gens.iter().zip(&inv) {
                        let j = self.position(&(*g * x * *gi)).expect("closed under conjugation");
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
                out.push((self.elems[start], size));
            }
            out
        })
    }

    /// Multiset of `(order, trace, det)` over all elements.
    pub fn profile(&self) -> Vec<((u64, u32, u32), u32)> {
        let mut counts: BTreeMap<(u64, u32, u32), u32> = BTreeMap::new();
        for (x, &o) in self.elems.iter().zip(self.element_orders()) {
            *counts.entry((o, x.trace(), x.det())).or_insert(0) += 1;
        }
        counts.into_iter().collect()
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        self.cache.fingerprint.get_or_init(|| Fingerprint {
            order: self.order(),
            derived_length: self.derived_length().unwrap_or(u32::MAX),
            profile: self.profile(),
        })
    }

    /// Entrywise reduction to level `m`.
    pub fn reduce(&self, m: u32) -> Result<MatGroup> {
        if m == 0 || !self.n.is_multiple_of(m) {
            return Err(Error::NotDivisor(m, self.n));
        }
        if m == self.n {
            return Ok(self.clone());
        }
        let elems: Vec<Mat2> = self.elems.iter().map(|x| x.reduce(m).unwrap()).collect();
        let gens: Vec<Mat2> = self
            .gens
            .iter()
            .map(|x| x.reduce(m).unwrap())
            .filter(|x| !x.is_identity())
            .collect();
        let mut g = MatGroup { n: m, gens, elems, cache: Caches::default() };
        g.elems.sort_unstable();
        g.elems.dedup();
        Ok(g)
    }

    /// `{g in G : g = I mod m}`.
    pub fn kernel_of_reduction(&self, m: u32) -> Result<MatGroup> {
        if m == 0 || !self.n.is_multiple_of(m) {
            return Err(Error::NotDivisor(m, self.n));
        }
        let id = Mat2::identity(m);
        let elems: Vec<Mat2> = self.elems.iter().copied().filter(|x| x.reduce(m).unwrap() == id).collect();
        MatGroup::from_elements(self.n, elems)
    }

    /// `G ∩ SL2`.
    pub fn intersect_sl2(&self) -> MatGroup {
        let one = 1 % self.n;
        let elems: Vec<Mat2> = self.elems.iter().copied().filter(|x| x.det() == one).collect();
        MatGroup::from_elements(self.n, elems).expect("kernel of det")
    }

    pub fn intersect(&self, other: &MatGroup) -> MatGroup {
        let elems: Vec<Mat2> = self.elems.iter().copied().filter(|x| other.contains(x)).collect();
        MatGroup::from_elements(self.n, elems).expect("intersection of subgroups")
    }

    /// The image of det as a sorted list of units.
    pub fn det_image(&self) -> Vec<u32> {
        let n = self.n as u64;
        let mut img = vec![1 % self.n];
        let mut seen: HashSet<u32> = img.iter().copied().collect();
        let dets: Vec<u64> = self.gens.iter().map(|g| g.det() as u64).collect();
        let mut i = 0;
        while i < img.len() {
            for d in &dets {
                let y = (img[i] as u64 * d % n) as u32;
                if seen.insert(y) {
                    img.push(y);
                }
            }
            i += 1;
        }
        img.sort_unstable();
        img
    }

    pub fn is_det_surjective(&self) -> bool {
        self.det_image().len() as u64 == euler_phi(self.n as u64)
    }

    pub fn contains_minus_identity(&self) -> bool {
        self.contains(&Mat2::scalar(-1, self.n))
    }

    /// `x G x^-1`.
    pub fn conjugate_by(&self, x: &Mat2) -> MatGroup {
        let xi = x.inv();
        let mut elems: Vec<Mat2> = self.elems.iter().map(|g| *x * *g * xi).collect();
        elems.sort_unstable();
        let gens = self.gens.iter().map(|g| *x * *g * xi).collect();
        MatGroup { n: self.n, gens, elems, cache: Caches::default() }
    }

    /// Normaliser of `self` inside `ambient`.
    pub fn normalizer_in(&self, ambient: &MatGroup) -> MatGroup {
        let elems: Vec<Mat2> = ambient.elems.iter().copied().filter(|x| self.is_normalized_by(x)).collect();
        MatGroup::from_elements(self.n, elems).expect("normaliser is a subgroup")
    }

    /// Serializable summary `{level, generators, order}`.
    pub fn summary(&self) -> GroupSummary {
        GroupSummary {
            level: self.n,
            generators: self.small_generators().to_vec(),
            order: self.order(),
        }
    }
}

/// Wire form of a group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub level: u32,
    pub generators: Vec<Mat2>,
    pub order: u64,
}

impl GroupSummary {
    pub fn to_group(&self) -> Result<MatGroup> {
        let g = MatGroup::generate(&self.generators, self.level)?;
        if g.order() != self.order {
            return Err(Error::Parse(format!(
                "generators give order {} but {} was recorded",
                g.order(),
                self.order
            )));
        }
        Ok(g)
    }
}
