//! Exact conjugator search.
//!
//! To send a generator `a` of G onto an element `b` of H we solve the linear
//! system `X a = b X` over each prime-power factor of the modulus. Over Z/p^k the
//! 4x4 system is brought to Smith form, which parametrises the whole solution
//! module; we then walk its invertible members that lie in the ambient group.

use crate::modmat::arith::{crt, factor, inv_mod};
use crate::modmat::Mat2;

use super::group::MatGroup;

/// The group inside which conjugators are sought.
#[derive(Clone, Copy, Debug)]
pub enum Ambient<'a> {
    /// All of GL2(Z/NZ), never materialised.
    Full(u32),
    Group(&'a MatGroup),
}

impl<'a> Ambient<'a> {
    pub fn modulus(&self) -> u32 {
        match self {
            Ambient::Full(n) => *n,
            Ambient::Group(g) => g.modulus(),
        }
    }

    pub fn contains(&self, x: &Mat2) -> bool {
        match self {
            Ambient::Full(_) => x.is_invertible(),
            Ambient::Group(g) => g.contains(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `x G x^-1 = H`.
    Equal,
    /// `x G x^-1 ⊆ H`.
    Into,
}

/// Solutions of `T v = 0` over Z/p^k: `v = sum_i t_i * gens[i]`, `0 <= t_i < counts[i]`.
struct Lattice {
    q: u64,
    gens: Vec<[u64; 4]>,
    counts: Vec<u64>,
}

fn valuation(x: u64, p: u64, k: u32) -> u32 {
    if x == 0 {
        return k;
    }
    let mut v = 0;
    let mut x = x;
    while x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v
}

/// Kernel of a 4x4 matrix over Z/p^k via Smith normal form. Row operations are
/// discarded; column operations are tracked in `qm` so that `v = qm * w`.
fn kernel_prime_power(mut a: [[u64; 4]; 4], p: u64, k: u32) -> Lattice {
    let q = p.pow(k);
    let mut qm = [[0u64; 4]; 4];
    for (i, row) in qm.iter_mut().enumerate() {
        row[i] = 1;
    }
    let mut vals = [k; 4];
    for i in 0..4 {
        // pivot of minimal valuation in the remaining block
        let mut best: Option<(u32, usize, usize)> = None;
        for r in i..4 {
            for c in i..4 {
                let v = valuation(a[r][c], p, k);
                if v < k && best.is_none_or(|b| v < b.0) {
                    best = Some((v, r, c));
                }
            }
        }
        let Some((v, r, c)) = best else { break };
        a.swap(i, r);
        for row in a.iter_mut() {
            row.swap(i, c);
        }
        for row in qm.iter_mut() {
            row.swap(i, c);
        }
        let pv = p.pow(v);
        let unit = a[i][i] / pv;
        let ui = inv_mod(unit % q, q).expect("pivot cofactor is a unit");
        for x in a[i].iter_mut() {
            *x = (*x as u128 * ui as u128 % q as u128) as u64;
        }
        for r2 in i + 1..4 {
            let t = a[r2][i] / pv;
            if t != 0 {
                for c2 in 0..4 {
                    let sub = (t as u128 * a[i][c2] as u128 % q as u128) as u64;
                    a[r2][c2] = (a[r2][c2] + q - sub) % q;
                }
            }
        }
        for c2 in i + 1..4 {
            let t = a[i][c2] / pv;
            if t != 0 {
                for row in a.iter_mut() {
                    let sub = (t as u128 * row[i] as u128 % q as u128) as u64;
                    row[c2] = (row[c2] + q - sub) % q;
                }
                for row in qm.iter_mut() {
                    let sub = (t as u128 * row[i] as u128 % q as u128) as u64;
                    row[c2] = (row[c2] + q - sub) % q;
                }
            }
        }
        vals[i] = v;
    }
    // p^{v_i} w_i = 0 forces w_i in p^{k - v_i} Z / p^k Z, which has p^{v_i} elements
    let mut gens = Vec::new();
    let mut counts = Vec::new();
    for i in 0..4 {
        if vals[i] == 0 {
            continue;
        }
        let scale = p.pow(k - vals[i]);
        gens.push(std::array::from_fn(|r| qm[r][i] * scale % q));
        counts.push(p.pow(vals[i]));
    }
    Lattice { q, gens, counts }
}

/// Coefficient matrix of `X -> X a - b X` on `X = [x0, x1, x2, x3]` (row-major).
fn sylvester(a: &Mat2, b: &Mat2, q: u64) -> [[u64; 4]; 4] {
    let [a0, a1, a2, a3] = a.entries().map(|x| x as u64 % q);
    let [b0, b1, b2, b3] = b.entries().map(|x| x as u64 % q);
    let neg = |x: u64| (q - x % q) % q;
    let sub = |x: u64, y: u64| (x + q - y) % q;
    [
        [sub(a0, b0), a2, neg(b1), 0],
        [a1, sub(a3, b0), 0, neg(b1)],
        [neg(b2), 0, sub(a0, b3), a2],
        [0, neg(b2), a1, sub(a3, b3)],
    ]
}

/// All matrices `X` mod N with `X a = b X`, as per-prime-power lattices.
fn solution_lattices(a: &Mat2, b: &Mat2) -> Vec<Lattice> {
    factor(a.modulus() as u64)
        .into_iter()
        .map(|(p, k)| kernel_prime_power(sylvester(a, b, p.pow(k)), p, k))
        .collect()
}

fn lattice_size(ls: &[Lattice]) -> u128 {
    ls.iter().flat_map(|l| l.counts.iter()).map(|&c| c as u128).product()
}

/// Visits every member of the solution module until `f` returns `Some`.
fn walk<T>(ls: &[Lattice], n: u32, mut f: impl FnMut(Mat2) -> Option<T>) -> Option<T> {
    let mut digits: Vec<Vec<u64>> = ls.iter().map(|l| vec![0; l.counts.len()]).collect();
    loop {
        // assemble the current point, combining components by CRT
        let mut entries = [0u64; 4];
        let mut modulus = 1u64;
        for (l, d) in ls.iter().zip(&digits) {
            let mut v = [0u64; 4];
            for (g, &t) in l.gens.iter().zip(d) {
                for r in 0..4 {
                    v[r] = (v[r] + t * g[r]) % l.q;
                }
            }
            for r in 0..4 {
                entries[r] = crt(entries[r], modulus, v[r], l.q).expect("coprime components");
            }
            modulus *= l.q;
        }
        let x = Mat2::from_reduced(entries.map(|e| e as u32), n);
        if let Some(t) = f(x) {
            return Some(t);
        }
        // odometer step
        let mut carried = true;
        'outer: for (l, d) in ls.iter().zip(digits.iter_mut()) {
            for (slot, &c) in d.iter_mut().zip(&l.counts) {
                *slot += 1;
                if *slot < c {
                    carried = false;
                    break 'outer;
                }
                *slot = 0;
            }
        }
        if carried {
            return None;
        }
    }
}

/// Size of the centraliser module of `a` in M2(Z/NZ); smaller is a better pivot.
fn centralizer_size(a: &Mat2) -> u128 {
    lattice_size(&solution_lattices(a, a))
}

/// Element-level invariant used to pair generators with candidate images.
fn key(x: &Mat2, fac: &[(u64, u32)]) -> (u64, u32, u32) {
    (x.order_dividing(fac), x.trace(), x.det())
}

/// Finds `x` in `ambient` with `x g x^-1 = h` (or `⊆ h`), if one exists.
pub fn find_conjugator(g: &MatGroup, h: &MatGroup, ambient: Ambient<'_>, mode: Mode) -> Option<Mat2> {
    let n = ambient.modulus();
    if g.modulus() != n || h.modulus() != n {
        return None;
    }
    match mode {
        Mode::Equal => {
            if g.order() != h.order() || g.fingerprint().profile != h.fingerprint().profile {
                return None;
            }
            if g == h {
                return Some(Mat2::identity(n));
            }
        }
        Mode::Into => {
            if !h.order().is_multiple_of(g.order()) || !g.fingerprint().could_embed_in(h.fingerprint()) {
                return None;
            }
            if g.is_subgroup_of(h) {
                return Some(Mat2::identity(n));
            }
        }
    }
    let gens: Vec<Mat2> = g.small_generators().to_vec();
    // scalar generators are fixed by every conjugation
    let (scalars, rest): (Vec<Mat2>, Vec<Mat2>) = gens.iter().partition(|x| x.is_scalar());
    if scalars.iter().any(|s| !h.contains(s)) {
        return None;
    }
    if rest.is_empty() {
        return None;
    }
    let pivot = *rest.iter().min_by_key(|a| (centralizer_size(a), **a)).unwrap();
    let others: Vec<Mat2> = rest.iter().copied().filter(|x| *x != pivot).collect();
    let hfac = h.order_factored();
    let gfac = g.order_factored();
    let want = key(&pivot, &gfac);
    for &(b, _) in h.conjugacy_classes() {
        if key(&b, &hfac) != want {
            continue;
        }
        let ls = solution_lattices(&pivot, &b);
        let found = walk(&ls, n, |x| {
            if !x.is_invertible() || !ambient.contains(&x) {
                return None;
            }
            let xi = x.inv();
            others.iter().all(|y| h.contains(&(x * *y * xi))).then_some(x)
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Whether `g` and `h` are conjugate inside `ambient`.
pub fn are_conjugate(g: &MatGroup, h: &MatGroup, ambient: &MatGroup) -> bool {
    find_conjugator(g, h, Ambient::Group(ambient), Mode::Equal).is_some()
}

/// Whether some ambient conjugate of `g` lies inside `h`.
pub fn is_conjugate_into(g: &MatGroup, h: &MatGroup, ambient: Ambient<'_>) -> bool {
    find_conjugator(g, h, ambient, Mode::Into).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(e: [i64; 4], n: u32) -> Mat2 {
        Mat2::new(e, n)
    }

    /// Brute-force oracle: every invertible X with X a = b X.
    fn brute(a: &Mat2, b: &Mat2) -> usize {
        let n = a.modulus();
        (0..(n as u64).pow(4))
            .map(|c| Mat2::from_code(c, n))
            .filter(|x| *x * *a == *b * *x)
            .count()
    }

    #[test]
    fn lattice_matches_brute_force() {
        for n in [4u32, 6, 8, 9, 12] {
            for (a, b) in [
                (m([1, 1, 0, 1], n), m([1, 0, 1, 1], n)),
                (m([0, -1, 1, 0], n), m([0, -1, 1, 0], n)),
                (m([2, 0, 0, 1], n), m([1, 0, 0, 2], n)),
                (m([1, 2, 0, 1], n), m([1, 2, 0, 1], n)),
                (m([3, 1, 0, 3], n), m([3, 0, 0, 3], n)),
            ] {
                let ls = solution_lattices(&a, &b);
                assert_eq!(lattice_size(&ls) as usize, brute(&a, &b), "n = {n}, {a} -> {b}");
                walk(&ls, n, |x| {
                    assert_eq!(x * a, b * x);
                    None::<()>
                });
            }
        }
    }

    #[test]
    fn borel_mod_2_pair_is_conjugate() {
        let gl2 = MatGroup::full_gl2(2).unwrap();
        let u = MatGroup::generate(&[m([1, 1, 0, 1], 2)], 2).unwrap();
        let l = MatGroup::generate(&[m([1, 0, 1, 1], 2)], 2).unwrap();
        let x = find_conjugator(&u, &l, Ambient::Group(&gl2), Mode::Equal).unwrap();
        assert_eq!(u.conjugate_by(&x), l);
        let w = m([0, 1, 1, 0], 2);
        assert_eq!(u.conjugate_by(&w), l);
    }

    #[test]
    fn random_conjugates_are_found() {
        let gl = MatGroup::full_gl2(9).unwrap();
        let g = MatGroup::generate(&[m([1, 3, 0, 1], 9), m([2, 0, 0, 1], 9)], 9).unwrap();
        for (i, x) in gl.elements().iter().enumerate().step_by(97).take(12) {
            let h = g.conjugate_by(x);
            let y = find_conjugator(&g, &h, Ambient::Full(9), Mode::Equal).unwrap_or_else(|| panic!("case {i}"));
            assert_eq!(g.conjugate_by(&y), h);
        }
    }

    #[test]
    fn composite_modulus() {
        let g = MatGroup::generate(&[m([1, 1, 0, 1], 6)], 6).unwrap();
        let h = MatGroup::generate(&[m([1, 0, 5, 1], 6)], 6).unwrap();
        let x = find_conjugator(&g, &h, Ambient::Full(6), Mode::Equal).unwrap();
        assert_eq!(g.conjugate_by(&x), h);
    }

    #[test]
    fn containment_up_to_conjugacy() {
        let borel = MatGroup::generate(&[m([1, 1, 0, 1], 5), m([2, 0, 0, 1], 5), m([1, 0, 0, 2], 5)], 5).unwrap();
        let lower = MatGroup::generate(&[m([1, 0, 1, 1], 5)], 5).unwrap();
        assert!(is_conjugate_into(&lower, &borel, Ambient::Full(5)));
        let ns = MatGroup::generate(&[m([0, 2, 1, 0], 5)], 5).unwrap();
        assert!(!is_conjugate_into(&ns, &borel, Ambient::Full(5)));
    }
}
