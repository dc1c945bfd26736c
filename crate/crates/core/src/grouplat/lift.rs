//! Lifting a subgroup H of GL2(Z/p^{k-1}) to subgroups G of GL2(Z/p^k) with
//! π(G) = H and a prescribed intersection L = G ∩ K, where K = Ker(π).
//!
//! For k >= 2 the map X -> I + p^{k-1} X identifies K with the additive group
//! M2(F_p), and g ∈ GL2(Z/p^k) acts on it by conjugation through g mod p. Fix
//! lifts ŝ_j of generators s_j of H. Any such G is generated by L together with
//! g_j = ŝ_j (I + p^{k-1} y_j), and the y_j are determined modulo L. The words in
//! the g_j along a spanning tree of the Cayley graph of H fix a lift of every
//! h; each remaining edge gives an affine condition over F_p that says the two
//! words agree modulo L. Solutions up to the coboundaries y_j -> y_j + s̄_j^-1 m s̄_j - m
//! (conjugation by I + p^{k-1} m) give every G once per K-conjugacy class.

use super::group::MatGroup;
use crate::modmat::arith::{inv_mod, prime_power};
use crate::modmat::Mat2;
use crate::{Error, Result};

/// The intersection `G ∩ Ker(π)` a lift must have.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelChoice {
    Trivial,
    /// The line spanned by `I + p^{k-1} X0`, with `X0` given mod p (row-major).
    Line([u32; 4]),
}

/// A linear map on M2(F_p) in row-major coordinates: `out[r] = sum_c a[r][c] in[c]`.
type Lin = [[u64; 4]; 4];

/// `X -> s^-1 X s` over F_p.
fn conj_action(s: &Mat2, p: u64) -> Lin {
    let s = s.reduce(p as u32).expect("p divides the level");
    let si = s.inv();
    let mut a = [[0u64; 4]; 4];
    for c in 0..4 {
        let mut e = [0u32; 4];
        e[c] = 1;
        let img = (si * Mat2::from_reduced(e, p as u32) * s).entries();
        for r in 0..4 {
            a[r][c] = img[r] as u64;
        }
    }
    a
}

/// Quotient M2(F_p) -> M2/L in coordinates, and a section back.
struct Quotient {
    p: u64,
    pivot: Option<(usize, [u64; 4])>,
}

impl Quotient {
    fn dim(&self) -> usize {
        if self.pivot.is_some() {
            3
        } else {
            4
        }
    }

    fn coords(&self) -> Vec<usize> {
        (0..4).filter(|&i| self.pivot.is_none_or(|(j, _)| i != j)).collect()
    }

    /// Projection of an affine 4-vector family (rows = matrix coordinates).
    fn project(&self, v: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let p = self.p;
        match self.pivot {
            None => v.to_vec(),
            Some((i0, x0)) => {
                let inv = inv_mod(x0[i0], p).unwrap();
                let width = v[0].len();
                self.coords()
                    .into_iter()
                    .map(|r| {
                        (0..width)
                            .map(|c| {
                                let t = v[i0][c] * inv % p;
                                (v[r][c] + p * p - t * x0[r] % p) % p
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

/// Affine expression in the unknowns: 4 rows, `nvars` coefficients then a constant.
type Affine = Vec<Vec<u64>>;

fn apply_lin(a: &Lin, x: &Affine, p: u64) -> Affine {
    let width = x[0].len();
    (0..4)
        .map(|r| (0..width).map(|c| (0..4).map(|k| a[r][k] * x[k][c]).sum::<u64>() % p).collect())
        .collect()
}

/// Row reduction over F_p of `sum coeffs * z + const = 0`.
/// Returns a particular solution and a nullspace basis, or `None` if inconsistent.
fn solve_affine(mut rows: Vec<Vec<u64>>, nvars: usize, p: u64) -> Option<(Vec<u64>, Vec<Vec<u64>>)> {
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..nvars {
        let Some(k) = (r..rows.len()).find(|&k| rows[k][c] != 0) else { continue };
        rows.swap(r, k);
        let inv = inv_mod(rows[r][c], p).unwrap();
        for x in rows[r].iter_mut() {
            *x = *x * inv % p;
        }
        for k in 0..rows.len() {
            if k != r && rows[k][c] != 0 {
                let t = rows[k][c];
                for j in 0..=nvars {
                    rows[k][j] = (rows[k][j] + p * p - t * rows[r][j] % p) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if rows[r..].iter().any(|row| row[nvars] != 0) {
        return None;
    }
    let mut part = vec![0u64; nvars];
    for (i, &c) in pivots.iter().enumerate() {
        part[c] = (p - rows[i][nvars]) % p;
    }
    let free: Vec<usize> = (0..nvars).filter(|c| !pivots.contains(c)).collect();
    let null = free
        .iter()
        .map(|&f| {
            let mut v = vec![0u64; nvars];
            v[f] = 1;
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = (p - rows[i][f]) % p;
            }
            v
        })
        .collect();
    Some((part, null))
}

/// Echelon accumulator used to extend a spanning set to a complement.
struct Span {
    p: u64,
    rows: Vec<(usize, Vec<u64>)>,
}

impl Span {
    fn reduce(&self, v: &[u64]) -> Vec<u64> {
        let p = self.p;
        let mut v = v.to_vec();
        for (c, row) in &self.rows {
            let t = v[*c];
            if t != 0 {
                for j in 0..v.len() {
                    v[j] = (v[j] + p * p - t * row[j] % p) % p;
                }
            }
        }
        v
    }

    /// Adds `v` if independent; reports whether it was.
    fn push(&mut self, v: &[u64]) -> bool {
        let p = self.p;
        let mut w = self.reduce(v);
        let Some(c) = w.iter().position(|&x| x != 0) else { return false };
        let inv = inv_mod(w[c], p).unwrap();
        for x in w.iter_mut() {
            *x = *x * inv % p;
        }
        for (_, row) in self.rows.iter_mut() {
            let t = row[c];
            if t != 0 {
                for j in 0..row.len() {
                    row[j] = (row[j] + p * p - t * w[j] % p) % p;
                }
            }
        }
        self.rows.push((c, w));
        true
    }
}

/// All lifts of `h` to level `n` with kernel intersection `choice`, one per K-conjugacy class.
fn lifts_with(h: &MatGroup, n: u32, p: u64, choice: KernelChoice) -> Result<Vec<MatGroup>> {
    let m = h.modulus();
    let step = m as u64; // p^{k-1}
    let gens: Vec<Mat2> = h.small_generators().to_vec();
    let hats: Vec<Mat2> = gens.iter().map(|s| s.lift_to(n).unwrap()).collect();
    let quot = Quotient {
        p,
        pivot: match choice {
            KernelChoice::Trivial => None,
            KernelChoice::Line(x) => {
                let x = x.map(|e| e as u64 % p);
                let i0 = x.iter().position(|&e| e != 0).ok_or_else(|| Error::Unsupported("zero kernel line".into()))?;
                Some((i0, x))
            }
        },
    };
    let d = quot.dim();
    let coords = quot.coords();
    let nvars = gens.len() * d;
    let width = nvars + 1;
    let actions: Vec<Lin> = gens.iter().map(|s| conj_action(s, p)).collect();
    // S z_j as an affine expression
    let section = |j: usize| -> Affine {
        let mut a = vec![vec![0u64; width]; 4];
        for (t, &r) in coords.iter().enumerate() {
            a[r][j * d + t] = 1;
        }
        a
    };
    let zero: Affine = vec![vec![0u64; width]; 4];
    let size = h.elements().len();
    let mut lift: Vec<Option<Mat2>> = vec![None; size];
    let mut cval: Vec<Option<Affine>> = vec![None; size];
    let id = h.position(&Mat2::identity(m)).unwrap();
    lift[id] = Some(Mat2::identity(n));
    cval[id] = Some(zero.clone());
    let mut queue = vec![id];
    let mut eqs: Vec<Vec<u64>> = Vec::new();
    let mut qi = 0;
    while qi < queue.len() {
        let hi = queue[qi];
        qi += 1;
        let hx = h.elements()[hi];
        let hhat = lift[hi].unwrap();
        let ch = cval[hi].clone().unwrap();
        for j in 0..gens.len() {
            let t = h.position(&(hx * gens[j])).expect("closed");
            let val = hhat * hats[j];
            let mut expr = apply_lin(&actions[j], &ch, p);
            let sj = section(j);
            for r in 0..4 {
                for c in 0..width {
                    expr[r][c] = (expr[r][c] + sj[r][c]) % p;
                }
            }
            match lift[t] {
                None => {
                    lift[t] = Some(val);
                    cval[t] = Some(expr);
                    queue.push(t);
                }
                Some(that) => {
                    let f = (that.inv() * val).entries();
                    let one = [1u32, 0, 0, 1];
                    let ct = cval[t].as_ref().unwrap();
                    for r in 0..4 {
                        let diff = (f[r] as u64 + n as u64 - one[r] as u64) % n as u64;
                        debug_assert_eq!(diff % step, 0);
                        expr[r][nvars] = (expr[r][nvars] + diff / step) % p;
                        for c in 0..width {
                            expr[r][c] = (expr[r][c] + p - ct[r][c]) % p;
                        }
                    }
                    eqs.extend(quot.project(&expr));
                }
            }
        }
    }
    let eqs: Vec<Vec<u64>> = eqs.into_iter().filter(|e| e.iter().any(|&x| x != 0)).collect();
    let Some((part, null)) = solve_affine(eqs, nvars, p) else { return Ok(Vec::new()) };
    // coboundaries from conjugating by I + p^{k-1} E_c
    let mut span = Span { p, rows: Vec::new() };
    for c in 0..4 {
        let mut e: Affine = vec![vec![0u64; 1]; 4];
        e[c][0] = 1;
        let mut v = Vec::with_capacity(nvars);
        for a in &actions {
            let mut img = apply_lin(a, &e, p);
            for r in 0..4 {
                img[r][0] = (img[r][0] + p - e[r][0]) % p;
            }
            v.extend(quot.project(&img).into_iter().map(|row| row[0]));
        }
        span.push(&v);
    }
    let mut complement = Vec::new();
    for v in &null {
        if span.push(v) {
            complement.push(v.clone());
        }
    }
    let kernel_gen = match choice {
        KernelChoice::Trivial => None,
        KernelChoice::Line(x) => {
            let e: Vec<i64> = x.iter().zip([1i64, 0, 0, 1]).map(|(&a, i)| i + step as i64 * a as i64).collect();
            Some(Mat2::new([e[0], e[1], e[2], e[3]], n))
        }
    };
    let expected = h.order() * if kernel_gen.is_some() { p } else { 1 };
    let total = (p as usize).pow(complement.len() as u32);
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut z = part.clone();
        let mut rest = idx;
        for v in &complement {
            let c = (rest % p as usize) as u64;
            rest /= p as usize;
            for (zi, vi) in z.iter_mut().zip(v) {
                *zi = (*zi + c * vi) % p;
            }
        }
        let mut gs: Vec<Mat2> = Vec::with_capacity(gens.len() + 1);
        for j in 0..gens.len() {
            let mut y = [0i64; 4];
            for (t, &r) in coords.iter().enumerate() {
                y[r] = z[j * d + t] as i64;
            }
            let pert = Mat2::new(
                [1 + step as i64 * y[0], step as i64 * y[1], step as i64 * y[2], 1 + step as i64 * y[3]],
                n,
            );
            gs.push(hats[j] * pert);
        }
        gs.extend(kernel_gen);
        let g = MatGroup::generate(&gs, n)?;
        if g.order() != expected {
            return Err(Error::Unsupported(format!(
                "lift of order {} where {} was expected; cocycle system is inconsistent",
                g.order(),
                expected
            )));
        }
        out.push(g);
    }
    Ok(out)
}

/// All lifts of `h` (level p^{k-1}, k >= 2) to level `n = p^k` whose kernel
/// intersection is one of `kernels`, up to conjugacy by the kernel of reduction.
pub fn lift_search(h: &MatGroup, n: u32, kernels: &[KernelChoice]) -> Result<Vec<MatGroup>> {
    let (p, k) = prime_power(n as u64).ok_or_else(|| Error::Unsupported(format!("level {n} is not a prime power")))?;
    if k < 2 || h.modulus() as u64 * p != n as u64 {
        return Err(Error::Unsupported(format!(
            "lifting from level {} to {n} needs a single step p^(k-1) -> p^k with k >= 2",
            h.modulus()
        )));
    }
    let mut out = Vec::new();
    for &c in kernels {
        out.extend(lifts_with(h, n, p, c)?);
    }
    Ok(out)
}

/// Matrices `X0` mod p with trace 1 commuting with `h` mod p: each spans an
/// `h`-stable line of M2(F_p) on which the trace is nonzero.
pub fn stable_trace_lines(h: &MatGroup, p: u32) -> Vec<[u32; 4]> {
    let gens: Vec<Mat2> = h.small_generators().iter().map(|g| g.reduce(p).unwrap()).collect();
    let mut out = Vec::new();
    for code in 0..(p as u64).pow(4) {
        let x = Mat2::from_code(code, p);
        if x.trace() != 1 % p {
            continue;
        }
        if gens.iter().all(|g| *g * x == x * *g) {
            out.push(x.entries());
        }
    }
    out
}
