//! Weil descent of polynomials, points, and varieties along a private basis
//! of `K/k`, plus the secrecy toolkit built on top of it: recognizing global
//! descents, recovering a hidden basis from a leaked descent of a vital
//! term, and masking descended programs so no component leaks one.
//!
//! Variable layout: descending an `n`-variable polynomial over `K` produces
//! polynomials over `k` in `n*d` variables, where `y_{j,i}` (the i-th
//! coordinate of the j-th original variable) has index `j*d + i`.

use crate::field::{Basis, ExtensionField, FieldElement, MatExt, MatK};
use crate::mpoly::{Monomial, MultiPoly};
use crate::poly::{roots_in_field, KPoly};
use crate::{Error, Result};
use rand::Rng;
use std::collections::BTreeMap;

/// A tuple of `d` polynomials over `k`: the descent of one polynomial.
pub type DescentTuple = Vec<MultiPoly>;

/// Index of the descent variable `y_{j,i}`.
pub fn yvar(j: usize, i: usize, d: usize) -> u32 {
    (j * d + i) as u32
}

/// Products of basis elements expanded back into the basis: order-`m`
/// entries give `u_{i1}*...*u_{im} = sum_j delta[{i1..im}][j] u_j`, keyed by
/// the sorted index multiset. Order 1 is the identity layer; order 2 is
/// computed by field multiplication; higher orders come from the recurrence
/// `delta_{i..ks} = sum_r delta_{i..r} delta_{rks}`.
#[derive(Clone, Debug)]
pub struct DescentTable {
    basis: Basis,
    kmax: usize,
    delta: BTreeMap<Vec<u8>, Vec<u64>>,
}

impl DescentTable {
    pub fn build(kk: &ExtensionField, basis: Basis, kmax: usize) -> Result<Self> {
        if kmax < 2 {
            return Err(Error::pre("descent tables need order at least 2"));
        }
        let d = kk.degree();
        let mut delta: BTreeMap<Vec<u8>, Vec<u64>> = BTreeMap::new();
        for i in 0..d {
            let mut e = vec![0u64; d];
            e[i] = 1;
            delta.insert(vec![i as u8], e);
        }
        for i in 0..d {
            for j in i..d {
                let prod = kk.mul(&basis.element(kk, i), &basis.element(kk, j));
                delta.insert(vec![i as u8, j as u8], basis.coords_of(kk, &prod));
            }
        }
        let mut table = DescentTable {
            basis,
            kmax: 2,
            delta,
        };
        table.grow(kk, kmax);
        Ok(table)
    }

    fn grow(&mut self, kk: &ExtensionField, kmax: usize) {
        let d = kk.degree();
        let k = kk.base();
        for order in (self.kmax + 1)..=kmax {
            let prev: Vec<Vec<u8>> = self
                .delta
                .keys()
                .filter(|key| key.len() == order - 1)
                .cloned()
                .collect();
            for key in prev {
                for last in *key.last().unwrap()..d as u8 {
                    let mut full = key.clone();
                    full.push(last);
                    let head = &self.delta[&key];
                    let mut out = vec![0u64; d];
                    for (r, &hr) in head.iter().enumerate() {
                        if hr == 0 {
                            continue;
                        }
                        let mut pair = vec![r as u8, last];
                        pair.sort_unstable();
                        let tail = &self.delta[&pair];
                        for (j, &tj) in tail.iter().enumerate() {
                            out[j] = k.add(out[j], k.mul(hr, tj));
                        }
                    }
                    self.delta.insert(full, out);
                }
            }
        }
        self.kmax = self.kmax.max(kmax);
    }

    /// A copy able to descend total degree `kmax - 1` terms.
    pub fn extended(&self, kk: &ExtensionField, kmax: usize) -> DescentTable {
        let mut t = self.clone();
        t.grow(kk, kmax);
        t
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// Coordinates of a product of basis elements; `idx` must be sorted.
    pub fn delta(&self, idx: &[u8]) -> &[u64] {
        &self.delta[idx]
    }
}

/// Sorted index multisets of size `e` over `d` symbols, together with the
/// number of orderings of each (the multinomial coefficient), reduced mod p.
fn multisets_with_multiplicity(d: usize, e: u32, p: u64) -> Vec<(Vec<u8>, u64)> {
    fn fact(n: u32) -> u128 {
        (1..=n as u128).product::<u128>().max(1)
    }
    let mut out = vec![];
    let mut counts = vec![0u32; d];
    fn rec(
        sym: usize,
        left: u32,
        counts: &mut Vec<u32>,
        d: usize,
        e: u32,
        p: u64,
        out: &mut Vec<(Vec<u8>, u64)>,
    ) {
        if sym == d - 1 {
            counts[sym] = left;
            let mut key = vec![];
            let mut denom: u128 = 1;
            for (i, &c) in counts.iter().enumerate() {
                key.extend(std::iter::repeat(i as u8).take(c as usize));
                denom *= fact(c);
            }
            let mult = (fact(e) / denom) % p as u128;
            out.push((key, mult as u64));
            return;
        }
        for c in 0..=left {
            counts[sym] = c;
            rec(sym + 1, left - c, counts, d, e, p, out);
        }
        counts[sym] = 0;
    }
    fn fact_outer(n: u32) -> u128 {
        (1..=n as u128).product::<u128>().max(1)
    }
    let _ = fact_outer;
    rec(0, e, &mut counts, d, e, p, &mut out);
    out
}

/// Descend a polynomial over `K` in `n` variables to `d` polynomials over
/// `k` in `n*d` variables, term by term through the tables.
pub fn global_descent(
    kk: &ExtensionField,
    f: &MultiPoly,
    table: &DescentTable,
) -> Result<DescentTuple> {
    if !f.is_untagged() {
        return Err(Error::pre(
            "global descent is defined for untagged polynomials",
        ));
    }
    let d = kk.degree();
    let need = f.total_deg() as usize + 1;
    let ext;
    let table = if need > table.kmax() {
        ext = table.extended(kk, need);
        &ext
    } else {
        table
    };
    let p = kk.p();
    let mut out: DescentTuple = vec![MultiPoly::zero(); d];
    for (m, c) in &f.terms {
        let c_coords = table.basis.coords_of(kk, c);
        // Cross product over the variables of the term: sorted multiset of
        // basis indices consumed so far, the y-monomial built, and the
        // product of multinomial multiplicities mod p.
        let mut partial: Vec<(Vec<u8>, Monomial, u64)> = vec![(vec![], Monomial::one(), 1)];
        for &(j, _, e) in &m.0 {
            let choices = multisets_with_multiplicity(d, e, p);
            let mut next = vec![];
            for (mset, ymono, mult) in &partial {
                for (cset, cmult) in &choices {
                    if *cmult == 0 {
                        continue;
                    }
                    let mut ms = mset.clone();
                    ms.extend_from_slice(cset);
                    ms.sort_unstable();
                    let mut pairs = vec![];
                    for i in 0..d {
                        let cnt = cset.iter().filter(|&&x| x == i as u8).count() as u32;
                        if cnt > 0 {
                            pairs.push((yvar(j as usize, i, d), cnt));
                        }
                    }
                    let ym = ymono.mul(&Monomial::from_pairs(pairs));
                    let mm = (*mult as u128 * *cmult as u128 % p as u128) as u64;
                    if mm != 0 {
                        next.push((ms, ym, mm));
                    }
                }
            }
            partial = next;
        }
        for (mset, ymono, mult) in partial {
            for (s, &cs) in c_coords.iter().enumerate() {
                if cs == 0 {
                    continue;
                }
                let mut key = mset.clone();
                key.push(s as u8);
                key.sort_unstable();
                let coords = table.delta(&key);
                for (jj, &dj) in coords.iter().enumerate() {
                    let val = (mult as u128 * cs as u128 % p as u128) * dj as u128 % p as u128;
                    out[jj].add_term(kk, ymono.clone(), kk.embed(val as u64));
                }
            }
        }
    }
    Ok(out)
}

/// Concatenated coordinates of each entry of a `K`-point.
pub fn descend_point(kk: &ExtensionField, alpha: &[FieldElement], basis: &Basis) -> Vec<u64> {
    alpha.iter().flat_map(|a| basis.coords_of(kk, a)).collect()
}

/// Reassemble a `K`-point from descent coordinates (inverse of
/// [`descend_point`]).
pub fn ascend_point(kk: &ExtensionField, yhat: &[u64], basis: &Basis) -> Vec<FieldElement> {
    let d = kk.degree();
    assert_eq!(yhat.len() % d, 0, "descent coordinates come in blocks of d");
    yhat.chunks(d).map(|b| basis.to_value(kk, b)).collect()
}

/// `rho(v)_i = sum_j sigma^i(u_j) * v_j`: the conjugate-spreading map whose
/// restriction identifies descent coordinates with conjugate tuples.
pub fn rho(kk: &ExtensionField, basis: &Basis, v: &[FieldElement]) -> Vec<FieldElement> {
    let d = kk.degree();
    assert_eq!(v.len(), d);
    (0..d)
        .map(|i| {
            let mut acc = kk.zero();
            for (j, vj) in v.iter().enumerate() {
                let uj = kk.frob(&basis.element(kk, j), i);
                acc = kk.add(&acc, &kk.mul(&uj, vj));
            }
            acc
        })
        .collect()
}

/// Inverse of [`rho`] on `K`-vectors.
pub fn rho_inv(kk: &ExtensionField, basis: &Basis, w: &[FieldElement]) -> Vec<FieldElement> {
    let d = kk.degree();
    assert_eq!(w.len(), d);
    let mut r = MatExt::zero(kk, d, d);
    for i in 0..d {
        for j in 0..d {
            r[(i, j)] = kk.frob(&basis.element(kk, j), i);
        }
    }
    let inv = r.inverse(kk).expect("basis conjugate matrix is invertible");
    inv.matvec(kk, w)
}

/// Descent of a variety: the concatenated descents of its generators
/// (`m` generators become `m*d` polynomials over `k`).
pub fn descend_variety(
    kk: &ExtensionField,
    gens: &[MultiPoly],
    table: &DescentTable,
) -> Result<Vec<MultiPoly>> {
    let mut out = vec![];
    for g in gens {
        out.extend(global_descent(kk, g, table)?);
    }
    Ok(out)
}

/// Evaluate a descent tuple at a point over `k`; values must stay in `k`.
pub fn eval_tuple(kk: &ExtensionField, t: &[MultiPoly], yhat: &[u64]) -> Result<Vec<u64>> {
    let point: Vec<FieldElement> = yhat.iter().map(|&c| kk.embed(c)).collect();
    t.iter()
        .map(|f| {
            kk.as_base(&f.eval(kk, &point))
                .ok_or_else(|| Error::pre("descent tuple evaluated outside the prime field"))
        })
        .collect()
}

/// The `K`-monomial a descent-variable monomial came from: `y_{j,i}`
/// contributes to `x_j`. `None` when a Frobenius tag is present.
pub fn induced_monomial(y: &Monomial, d: usize) -> Option<Monomial> {
    let mut pairs: BTreeMap<u32, u32> = BTreeMap::new();
    for &(v, s, e) in &y.0 {
        if s != 0 {
            return None;
        }
        *pairs.entry(v / d as u32).or_insert(0) += e;
    }
    Some(Monomial(
        pairs.into_iter().map(|(v, e)| (v, 0, e)).collect(),
    ))
}

/// Partition a tuple's terms into sub-tuples by induced `K`-monomial.
pub fn split_blocks(
    kk: &ExtensionField,
    t: &[MultiPoly],
    d: usize,
) -> Option<BTreeMap<Monomial, DescentTuple>> {
    let mut blocks: BTreeMap<Monomial, DescentTuple> = BTreeMap::new();
    for (i, f) in t.iter().enumerate() {
        for (m, c) in &f.terms {
            let key = induced_monomial(m, d)?;
            let entry = blocks
                .entry(key)
                .or_insert_with(|| vec![MultiPoly::zero(); t.len()]);
            entry[i].add_term(kk, m.clone(), c.clone());
        }
    }
    Some(blocks)
}

/// Decide whether `t` is the descent of some polynomial over `K` with
/// respect to the table's basis, and recover that polynomial when it is.
/// Works block by block: within the block of a `K`-monomial `m` the
/// candidate coefficient `a` enters linearly, so its `d` coordinates are a
/// linear solve against the descents of `u_s * m`.
pub fn is_global_descent(
    kk: &ExtensionField,
    t: &[MultiPoly],
    table: &DescentTable,
) -> Option<MultiPoly> {
    let d = kk.degree();
    if t.len() != d {
        return None;
    }
    if !t.iter().all(|f| f.is_k_rational(kk) && f.is_untagged()) {
        return None;
    }
    let blocks = split_blocks(kk, t, d)?;
    let mut candidate = MultiPoly::zero();
    for (m, sub) in &blocks {
        let a = solve_block_coefficient(kk, m, sub, table)?;
        candidate.add_term(kk, m.clone(), a);
    }
    let check = global_descent(kk, &candidate, table).ok()?;
    (check == t).then_some(candidate)
}

/// Solve for `a` with `descent(a * m) = sub`, if it exists.
fn solve_block_coefficient(
    kk: &ExtensionField,
    m: &Monomial,
    sub: &DescentTuple,
    table: &DescentTable,
) -> Option<FieldElement> {
    let d = kk.degree();
    let k = kk.base();
    // Columns: descents of u_s * m.
    let cols: Vec<DescentTuple> = (0..d)
        .map(|s| {
            let us = table.basis().element(kk, s);
            let term = MultiPoly::from_terms(kk, vec![(m.clone(), us)]);
            global_descent(kk, &term, table).expect("single term descends")
        })
        .collect();
    let mut monos: std::collections::BTreeSet<Monomial> = std::collections::BTreeSet::new();
    for tuple in cols.iter().chain(std::iter::once(sub)) {
        for f in tuple {
            monos.extend(f.support().cloned());
        }
    }
    let rows = monos.len() * d;
    let mut mat = MatK::zero(rows, d);
    let mut rhs = vec![0u64; rows];
    for (r, ym) in monos.iter().enumerate() {
        for i in 0..d {
            let row = r * d + i;
            for (s, col) in cols.iter().enumerate() {
                mat[(row, s)] = kk.as_base(&col[i].coeff(kk, ym))?;
            }
            rhs[row] = kk.as_base(&sub[i].coeff(kk, ym))?;
        }
    }
    let coords = mat.solve(k, &rhs)?;
    Some(table.basis().to_value(kk, &coords))
}

/// Blocks of `t` that are global descents of a single term, excluding the
/// constant block: every constant vector is trivially the descent of exactly
/// one constant, so it carries no information about the basis.
pub fn leaking_blocks(
    kk: &ExtensionField,
    t: &[MultiPoly],
    table: &DescentTable,
) -> Vec<(Monomial, MultiPoly)> {
    let d = kk.degree();
    let Some(blocks) = split_blocks(kk, t, d) else {
        return vec![];
    };
    let mut out = vec![];
    for (m, sub) in &blocks {
        if m.0.is_empty() {
            continue;
        }
        if let Some(f) = is_global_descent(kk, sub, table) {
            out.push((m.clone(), f));
        }
    }
    out
}

/// Multiplication matrix of `a` on basis coordinates, rows defined by
/// `a * u_i = sum_j gamma[i][j] u_j`.
pub fn gamma_matrix(kk: &ExtensionField, a: &FieldElement, basis: &Basis) -> MatK {
    let d = kk.degree();
    let rows: Vec<Vec<u64>> = (0..d)
        .map(|i| basis.coords_of(kk, &kk.mul(a, &basis.element(kk, i))))
        .collect();
    MatK::from_rows(rows)
}

/// Apply a matrix over `k` to a tuple: `out_i = sum_j M[i][j] t_j`.
pub fn apply_matrix(kk: &ExtensionField, m: &MatK, t: &[MultiPoly]) -> DescentTuple {
    (0..m.rows)
        .map(|i| {
            let mut acc = MultiPoly::zero();
            for (j, f) in t.iter().enumerate() {
                acc = acc.add(kk, &f.scale(kk, &kk.embed(m[(i, j)])));
            }
            acc
        })
        .collect()
}

/// Recover a basis that reproduces the descent tuple of a vital term, up to
/// Galois conjugacy and scale.
///
/// Evaluates the tuple around a center point to polarize out the matrix of
/// multiplication by `b = e_v * a * u_1^(r-1)`, takes its minimal polynomial
/// (degree `d` exactly when `b` generates `K`), picks a root `beta`, and
/// rebuilds basis elements as polynomials in `beta` read off the Krylov
/// matrix. The result is validated by re-deciding the tuple against the
/// recovered basis; the reconstructed term is returned alongside.
pub fn recover_basis_from_descent(
    kk: &ExtensionField,
    t: &[MultiPoly],
    rng: &mut impl Rng,
) -> Result<(Basis, MultiPoly)> {
    let d = kk.degree();
    let p = kk.p();
    let k = kk.base();
    if t.len() != d {
        return Err(Error::pre("tuple length must match the extension degree"));
    }
    // The tuple must come from a single term: all induced monomials agree.
    let mut induced: std::collections::BTreeSet<Monomial> = std::collections::BTreeSet::new();
    for f in t {
        for ym in f.support() {
            induced.insert(
                induced_monomial(ym, d)
                    .ok_or_else(|| Error::pre("tuple has Frobenius-tagged variables"))?,
            );
        }
    }
    if induced.len() != 1 {
        return Err(Error::pre(
            "tuple is not the descent of a single term (mixed monomial blocks)",
        ));
    }
    let m = induced.into_iter().next().unwrap();
    let r = m.total_deg();
    if r == 0 {
        return Err(Error::NotVital(
            "a constant term determines no basis".into(),
        ));
    }
    // Polarization slot: an exponent usable for finite differences over F_p.
    let Some(&(v, _, ev)) =
        m.0.iter()
            .find(|&&(_, _, e)| e % p as u32 != 0 && e < p as u32)
    else {
        return Err(Error::pre(format!(
            "no exponent of the term is usable for polarization over F_{p}"
        )));
    };
    let nvars = (m.0.iter().map(|&(j, _, _)| j).max().unwrap() as usize + 1) * d;
    // Center: every variable block of the term at the first basis vector.
    let mut center = vec![0u64; nvars];
    for &(j, _, _) in &m.0 {
        center[yvar(j as usize, 0, d) as usize] = 1;
    }
    // Row 1 of the inverse Vandermonde on nodes 0..=ev extracts the linear
    // coefficient from ev+1 samples.
    let nodes = ev as usize + 1;
    let mut vand = MatK::zero(nodes, nodes);
    for (li, lam) in (0..nodes).enumerate() {
        for t_ in 0..nodes {
            vand[(t_, li)] = k.pow(lam as u64, t_ as u64);
        }
    }
    let vinv = vand
        .inverse(k)
        .expect("Vandermonde on distinct nodes is invertible");
    let weights: Vec<u64> = (0..nodes).map(|li| vinv[(li, 1)]).collect();
    // Column i of M_b: linear coefficient of lambda -> t(center + lambda*e_i).
    let mut mb = MatK::zero(d, d);
    for i in 0..d {
        let mut col = vec![0u64; d];
        for (lam, &w) in weights.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let mut pt = center.clone();
            let slot = yvar(v as usize, i, d);
            pt[slot as usize] = k.add(pt[slot as usize], lam as u64);
            let val = eval_tuple(kk, t, &pt)?;
            for (row, &vr) in val.iter().enumerate() {
                col[row] = k.add(col[row], k.mul(w, vr));
            }
        }
        for (row, &c) in col.iter().enumerate() {
            mb[(row, i)] = c;
        }
    }
    // Krylov chain from e_1 gives b^j * u_1 in coordinates; the first linear
    // dependence is the minimal polynomial of b.
    let mut chain: Vec<Vec<u64>> = vec![];
    let mut cur = vec![0u64; d];
    cur[0] = 1;
    for _ in 0..=d {
        chain.push(cur.clone());
        cur = mb.matvec(k, &cur);
    }
    let mut minpoly: Option<(usize, Vec<u64>)> = None;
    for deg in 1..=d {
        let mut mat = MatK::zero(d, deg);
        for (j, col) in chain.iter().take(deg).enumerate() {
            for i in 0..d {
                mat[(i, j)] = col[i];
            }
        }
        if let Some(c) = mat.solve(k, &chain[deg]) {
            let mut mp: Vec<u64> = c.iter().map(|&x| k.neg(x)).collect();
            mp.push(1);
            minpoly = Some((deg, mp));
            break;
        }
    }
    let (deg, mp) = minpoly.expect("a dependence exists by degree d");
    if deg < d {
        if r == 1 {
            return Err(Error::NotVital(format!(
                "linear term whose coefficient generates only a degree-{deg} subfield"
            )));
        }
        return Err(Error::NonGenerating { degree: deg, d });
    }
    // Any root of the minimal polynomial is a Galois conjugate of b.
    let mut roots = roots_in_field(kk, &KPoly::lift(kk, &mp), rng);
    roots.sort();
    let beta = roots
        .into_iter()
        .next()
        .ok_or_else(|| Error::internal("minimal polynomial has a root in K"))?;
    let kr = MatK::from_rows(
        (0..d)
            .map(|i| (0..d).map(|j| chain[j][i]).collect())
            .collect(),
    );
    let kr_inv = kr
        .inverse(k)
        .ok_or_else(|| Error::internal("Krylov matrix of a generator is invertible"))?;
    let mut rows = vec![];
    for j in 0..d {
        let mut e = vec![0u64; d];
        e[j] = 1;
        let c = kr_inv.matvec(k, &e);
        let mut val = kk.zero();
        let mut pw = kk.one();
        for &cl in &c {
            val = kk.add(&val, &kk.scale(&pw, cl));
            pw = kk.mul(&pw, &beta);
        }
        rows.push(val.c);
    }
    let basis = Basis::from_rows(kk, MatK::from_rows(rows))?;
    let table = DescentTable::build(kk, basis.clone(), r as usize + 1)?;
    let recovered = is_global_descent(kk, t, &table)
        .ok_or_else(|| Error::internal("recovered basis failed to reproduce the tuple"))?;
    Ok((basis, recovered))
}

/// Add a masked multiple of an ideal polynomial: `t + M * descent(f)`.
pub fn apply_mask(
    kk: &ExtensionField,
    t: &[MultiPoly],
    f: &MultiPoly,
    gamma: &MatK,
    table: &DescentTable,
) -> Result<DescentTuple> {
    let fd = global_descent(kk, f, table)?;
    let mixed = apply_matrix(kk, gamma, &fd);
    Ok(t.iter().zip(&mixed).map(|(a, b)| a.add(kk, b)).collect())
}

/// Rewrite a descent tuple so that no non-constant monomial block is itself
/// a global descent, without changing its values on the variety cut out by
/// `ideal_gens`. Each leaking block of monomial `m` is treated by adding
/// `Gamma * descent(b * (m/m') * g)` for an ideal generator `g` containing a
/// monomial `m'` dividing `m` (a constant term when one exists), a random
/// nonzero `b`, and a fresh random invertible `Gamma`.
pub fn mask_tuple(
    kk: &ExtensionField,
    t: &[MultiPoly],
    ideal_gens: &[MultiPoly],
    table: &DescentTable,
    rng: &mut impl Rng,
) -> Result<DescentTuple> {
    const MAX_ROUNDS: usize = 24;
    let d = kk.degree();
    let mut cur: DescentTuple = t.to_vec();
    for _ in 0..MAX_ROUNDS {
        let leaks = leaking_blocks(kk, &cur, table);
        if leaks.is_empty() {
            return Ok(cur);
        }
        for (m, _) in &leaks {
            let mut choice: Option<(&MultiPoly, Monomial)> = None;
            for g in ideal_gens {
                for mp in g.support() {
                    if mp.divides(m) {
                        let better = mp.0.is_empty() || choice.as_ref().is_none();
                        if better {
                            choice = Some((g, mp.clone()));
                        }
                        if mp.0.is_empty() {
                            break;
                        }
                    }
                }
            }
            let Some((g, mprime)) = choice else {
                return Err(Error::MaskingFailed(format!(
                    "no ideal generator contains a monomial dividing {m:?}"
                )));
            };
            let b = kk.rand_nonzero(rng);
            let f = g.mul_monomial(kk, &mprime.div_into(m), &b);
            let gamma = MatK::rand_invertible(kk.base(), d, rng);
            cur = apply_mask(kk, &cur, &f, &gamma, table)?;
        }
    }
    Err(Error::MaskingFailed(
        "masking failed to converge; every resampling round left a leaking block".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f4() -> ExtensionField {
        ExtensionField::make(2, 2, 0).unwrap()
    }

    fn theta_table(kk: &ExtensionField, kmax: usize) -> DescentTable {
        DescentTable::build(kk, Basis::theta(kk), kmax).unwrap()
    }

    fn rand_mpoly(
        kk: &ExtensionField,
        nvars: u32,
        nterms: usize,
        maxdeg: u32,
        rng: &mut impl Rng,
    ) -> MultiPoly {
        let mut p = MultiPoly::zero();
        for _ in 0..nterms {
            let pairs: Vec<(u32, u32)> = (0..nvars)
                .filter_map(|v| {
                    let e = rng.gen_range(0..=maxdeg);
                    (e > 0).then_some((v, e))
                })
                .collect();
            p.add_term(kk, Monomial::from_pairs(pairs), kk.rand(rng));
        }
        p
    }

    #[test]
    fn f4_delta_table_frozen_values() {
        let kk = f4();
        // Basis {1, w}: the power basis itself.
        let t = theta_table(&kk, 2);
        assert_eq!(t.delta(&[0, 0]), &[1, 0]);
        assert_eq!(t.delta(&[0, 1]), &[0, 1]);
        assert_eq!(t.delta(&[1, 1]), &[1, 1], "w^2 = 1 + w");
    }

    #[test]
    fn d1_table_single_entry() {
        let kk = ExtensionField::make(5, 1, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let b = Basis::random(&kk, &mut rng);
        let t = DescentTable::build(&kk, b.clone(), 2).unwrap();
        let u1 = b.element(&kk, 0);
        let sq = kk.mul(&u1, &u1);
        assert_eq!(t.delta(&[0, 0]), b.coords_of(&kk, &sq).as_slice());
    }

    #[test]
    fn delta_recurrence_matches_direct_products() {
        let kk = ExtensionField::make(7, 3, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let b = Basis::random(&kk, &mut rng);
        let t = DescentTable::build(&kk, b.clone(), 4).unwrap();
        let d = kk.degree();
        for i in 0..d as u8 {
            for j in i..d as u8 {
                for l in j..d as u8 {
                    let prod = kk.mul(
                        &kk.mul(&b.element(&kk, i as usize), &b.element(&kk, j as usize)),
                        &b.element(&kk, l as usize),
                    );
                    assert_eq!(
                        t.delta(&[i, j, l]),
                        b.coords_of(&kk, &prod).as_slice(),
                        "order-3 table must equal direct triple products"
                    );
                    for s in l..d as u8 {
                        let q = kk.mul(&prod, &b.element(&kk, s as usize));
                        assert_eq!(t.delta(&[i, j, l, s]), b.coords_of(&kk, &q).as_slice());
                    }
                }
            }
        }
    }

    #[test]
    fn f4_global_descent_frozen_examples() {
        let kk = f4();
        let t = theta_table(&kk, 3);
        let x = MultiPoly::var(&kk, 0);
        // F = x: identity on coordinates.
        let got = global_descent(&kk, &x, &t).unwrap();
        assert_eq!(got[0], MultiPoly::var(&kk, 0));
        assert_eq!(got[1], MultiPoly::var(&kk, 1));
        // F = x^2: (y1 + y2 w)^2 = y1^2 + y2^2 (w + 1).
        let got = global_descent(&kk, &x.pow(&kk, 2), &t).unwrap();
        let y = |i: u32| MultiPoly::var(&kk, i);
        assert_eq!(got[0], y(0).pow(&kk, 2).add(&kk, &y(1).pow(&kk, 2)));
        assert_eq!(got[1], y(1).pow(&kk, 2));
        // F = x_1 x_2 with blocks (y0,y1), (y2,y3).
        let f = MultiPoly::var(&kk, 0).mul(&kk, &MultiPoly::var(&kk, 1));
        let got = global_descent(&kk, &f, &t).unwrap();
        let m = |vs: &[u32]| {
            MultiPoly::from_terms(
                &kk,
                vec![(
                    Monomial::from_pairs(vs.iter().map(|&v| (v, 1)).collect()),
                    kk.one(),
                )],
            )
        };
        assert_eq!(got[0], m(&[0, 2]).add(&kk, &m(&[1, 3])));
        assert_eq!(
            got[1],
            m(&[0, 3]).add(&kk, &m(&[1, 2])).add(&kk, &m(&[1, 3]))
        );
    }

    #[test]
    fn descent_commutes_with_evaluation() {
        let kk = ExtensionField::make(7, 3, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let basis = Basis::random(&kk, &mut rng);
        let table = DescentTable::build(&kk, basis.clone(), 5).unwrap();
        for _ in 0..100 {
            let f = rand_mpoly(&kk, 2, 4, 2, &mut rng);
            let alpha: Vec<FieldElement> = (0..2).map(|_| kk.rand(&mut rng)).collect();
            let fd = global_descent(&kk, &f, &table).unwrap();
            let yhat = descend_point(&kk, &alpha, &basis);
            let lhs = eval_tuple(&kk, &fd, &yhat).unwrap();
            let rhs = descend_point(&kk, &[f.eval(&kk, &alpha)], &basis);
            assert_eq!(lhs, rhs, "descent must commute with evaluation");
        }
    }

    #[test]
    fn point_roundtrip_and_rho() {
        let kk = f4();
        let theta = Basis::theta(&kk);
        // rho on {1, w}: (x1 + x2 w, x1 + x2 (w+1)).
        let w = kk.gen();
        let v = vec![kk.one(), kk.one()];
        let r = rho(&kk, &theta, &v);
        assert_eq!(r[0], kk.add(&kk.one(), &w));
        assert_eq!(r[1], kk.add(&kk.one(), &kk.frob(&w, 1)));
        let kk7 = ExtensionField::make(7, 4, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let basis = Basis::random(&kk7, &mut rng);
        for _ in 0..100 {
            let alpha: Vec<FieldElement> = (0..3).map(|_| kk7.rand(&mut rng)).collect();
            let down = descend_point(&kk7, &alpha, &basis);
            assert_eq!(ascend_point(&kk7, &down, &basis), alpha);
        }
        // rho(descend(alpha)) = conjugates of alpha; rho_inv inverts.
        for _ in 0..20 {
            let alpha = kk7.rand(&mut rng);
            let down = descend_point(&kk7, &[alpha.clone()], &basis);
            let lifted: Vec<FieldElement> = down.iter().map(|&c| kk7.embed(c)).collect();
            let conj = rho(&kk7, &basis, &lifted);
            for (i, c) in conj.iter().enumerate() {
                assert_eq!(*c, kk7.frob(&alpha, i));
            }
            let back = rho_inv(&kk7, &basis, &conj);
            assert_eq!(back, lifted);
            // delta of rho_inv projects onto the first conjugate.
            let coords: Vec<u64> = back.iter().map(|x| kk7.as_base(x).unwrap()).collect();
            assert_eq!(basis.to_value(&kk7, &coords), alpha);
        }
        // Galois-fixed case: constants descend to multiples of the
        // coordinates of 1.
        let one_coords = basis.coords_of(&kk7, &kk7.one());
        let c = kk7.embed(5);
        let down = descend_point(&kk7, &[c], &basis);
        let scaled: Vec<u64> = one_coords.iter().map(|&x| kk7.base().mul(x, 5)).collect();
        assert_eq!(down, scaled);
    }

    #[test]
    fn variety_descent_membership() {
        let kk = f4();
        let theta = Basis::theta(&kk);
        let table = theta_table(&kk, 3);
        // V = Z(x): descends to Z(y1, y2).
        let x = MultiPoly::var(&kk, 0);
        let vd = descend_variety(&kk, &[x], &table).unwrap();
        assert_eq!(vd[0], MultiPoly::var(&kk, 0));
        assert_eq!(vd[1], MultiPoly::var(&kk, 1));
        // V = Z(x^2 + x + 1): roots w and w + 1; their descents satisfy
        // both output polynomials.
        let f = MultiPoly::from_terms(
            &kk,
            vec![
                (Monomial::from_pairs(vec![(0, 2)]), kk.one()),
                (Monomial::var(0), kk.one()),
                (Monomial::one(), kk.one()),
            ],
        );
        let vd = descend_variety(&kk, &[f.clone()], &table).unwrap();
        for root in [kk.gen(), kk.add(&kk.gen(), &kk.one())] {
            assert!(kk.is_zero(&f.eval(&kk, &[root.clone()])));
            let down = descend_point(&kk, &[root], &theta);
            let vals = eval_tuple(&kk, &vd, &down).unwrap();
            assert!(vals.iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn variety_descent_sampling_oracle() {
        // Two generators over F_{5^2}; membership transfers exactly.
        let kk = ExtensionField::make(5, 2, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let basis = Basis::random(&kk, &mut rng);
        let table = DescentTable::build(&kk, basis.clone(), 4).unwrap();
        // V = Z(x1*x2 - 1, x1 + x2 - x3): parametrized by x1 invertible.
        let x = |i: u32| MultiPoly::var(&kk, i);
        let g1 = x(0).mul(&kk, &x(1)).sub(&kk, &MultiPoly::one(&kk));
        let g2 = x(0).add(&kk, &x(1)).sub(&kk, &x(2));
        let vd = descend_variety(&kk, &[g1.clone(), g2.clone()], &table).unwrap();
        assert_eq!(vd.len(), 2 * kk.degree());
        for _ in 0..100 {
            let a = kk.rand_nonzero(&mut rng);
            let pt = vec![a.clone(), kk.inv(&a), kk.add(&a, &kk.inv(&a))];
            let down = descend_point(&kk, &pt, &basis);
            let vals = eval_tuple(&kk, &vd, &down).unwrap();
            assert!(vals.iter().all(|&v| v == 0));
            // An off-variety point violates some descended generator.
            let mut bad = pt;
            bad[2] = kk.add(&bad[2], &kk.one());
            let down = descend_point(&kk, &bad, &basis);
            let vals = eval_tuple(&kk, &vd, &down).unwrap();
            assert!(vals.iter().any(|&v| v != 0));
        }
    }

    #[test]
    fn is_global_descent_roundtrip() {
        let kk = ExtensionField::make(7, 2, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let basis = Basis::random(&kk, &mut rng);
        let table = DescentTable::build(&kk, basis, 4).unwrap();
        for _ in 0..100 {
            let f = rand_mpoly(&kk, 2, 3, 2, &mut rng);
            let fd = global_descent(&kk, &f, &table).unwrap();
            let got = is_global_descent(&kk, &fd, &table);
            assert_eq!(got.as_ref(), Some(&f), "round-trip must recover exactly");
        }
    }

    #[test]
    fn is_global_descent_rejects_perturbations() {
        let kk = ExtensionField::make(7, 2, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let basis = Basis::random(&kk, &mut rng);
        let table = DescentTable::build(&kk, basis, 4).unwrap();
        let mut rejected = 0;
        let trials = 100;
        for _ in 0..trials {
            let f = rand_mpoly(&kk, 2, 3, 2, &mut rng);
            if f.is_zero() {
                continue;
            }
            let mut fd = global_descent(&kk, &f, &table).unwrap();
            // Perturb one non-constant coefficient of one component. (The
            // constant block is excluded: every constant vector is the
            // descent of some constant, so bumps there never reject.)
            let slot = rng.gen_range(0..fd.len());
            let Some(target) = fd[slot]
                .support()
                .filter(|m| !m.0.is_empty())
                .last()
                .cloned()
            else {
                continue;
            };
            let bump = kk.embed(rng.gen_range(1..7));
            fd[slot].add_term(&kk, target, bump);
            if is_global_descent(&kk, &fd, &table).is_none() {
                rejected += 1;
            }
        }
        // A perturbation survives only if it lands back on a descent;
        // heuristically at most a 1/p fraction.
        assert!(
            rejected * 100 >= trials * 85,
            "only {rejected}/{trials} perturbations rejected"
        );
    }

    #[test]
    fn random_gamma_is_almost_never_a_descent() {
        let kk = ExtensionField::make(7, 2, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let basis = Basis::random(&kk, &mut rng);
        let table = DescentTable::build(&kk, basis.clone(), 4).unwrap();
        let mut hits = 0;
        let trials = 1000;
        for _ in 0..trials {
            let f = rand_mpoly(&kk, 2, 2, 2, &mut rng);
            if f.is_zero() || f.constant_value(&kk).is_some() {
                continue;
            }
            let fd = global_descent(&kk, &f, &table).unwrap();
            let gamma = MatK::rand_invertible(kk.base(), kk.degree(), &mut rng);
            let mixed = apply_matrix(&kk, &gamma, &fd);
            if is_global_descent(&kk, &mixed, &table).is_some() {
                hits += 1;
            }
        }
        // Expected hit fraction is about p^d / p^(d^2) = 1/49 here; the
        // planted identity below shows the detector is not blind.
        assert!(
            hits <= trials / 10,
            "too many random-gamma descents: {hits}"
        );
        let a = kk.rand_nonzero(&mut rng);
        let f = rand_mpoly(&kk, 2, 2, 2, &mut rng).add(&kk, &MultiPoly::var(&kk, 0));
        let fd = global_descent(&kk, &f, &table).unwrap();
        let planted = gamma_matrix(&kk, &a, &basis).transpose();
        let mixed = apply_matrix(&kk, &planted, &fd);
        let got = is_global_descent(&kk, &mixed, &table).expect("planted transpose leaks");
        assert_eq!(got, f.scale(&kk, &a), "planted gamma recovers a*F");
    }

    #[test]
    fn gamma_matrix_identities() {
        let kk = ExtensionField::make(7, 3, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let basis = Basis::random(&kk, &mut rng);
        let d = kk.degree();
        assert_eq!(gamma_matrix(&kk, &kk.one(), &basis), MatK::identity(d));
        assert!(gamma_matrix(&kk, &kk.zero(), &basis).is_zero());
        for _ in 0..20 {
            let a = kk.rand(&mut rng);
            let b = kk.rand(&mut rng);
            let gab = gamma_matrix(&kk, &kk.mul(&a, &b), &basis);
            let ga = gamma_matrix(&kk, &a, &basis);
            let gb = gamma_matrix(&kk, &b, &basis);
            assert_eq!(gab, gb.mul(kk.base(), &ga), "composition order");
        }
        // The transpose identity against descent of a scaled term.
        let table = DescentTable::build(&kk, basis.clone(), 4).unwrap();
        for _ in 0..20 {
            let a = kk.rand_nonzero(&mut rng);
            let term = MultiPoly::from_terms(
                &kk,
                vec![(
                    Monomial::from_pairs(vec![(0, 1), (1, 2)]),
                    kk.rand_nonzero(&mut rng),
                )],
            );
            let td = global_descent(&kk, &term, &table).unwrap();
            let lhs = apply_matrix(&kk, &gamma_matrix(&kk, &a, &basis).transpose(), &td);
            let rhs = global_descent(&kk, &term.scale(&kk, &a), &table).unwrap();
            assert_eq!(lhs, rhs, "transposed gamma times descent = descent of a*T");
        }
    }

    #[test]
    fn recover_basis_from_linear_generator_term() {
        let kk = ExtensionField::make(7, 3, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        // a = w generates K over k.
        let a = kk.gen();
        assert_eq!(kk.minimal_polynomial(&a).len() - 1, 3);
        for _ in 0..10 {
            let basis = Basis::random(&kk, &mut rng);
            let table = DescentTable::build(&kk, basis, 2).unwrap();
            let term = MultiPoly::from_terms(&kk, vec![(Monomial::var(0), a.clone())]);
            let t = global_descent(&kk, &term, &table).unwrap();
            let (rec, f) = recover_basis_from_descent(&kk, &t, &mut rng).unwrap();
            let table2 = DescentTable::build(&kk, rec, 2).unwrap();
            assert_eq!(
                global_descent(&kk, &f, &table2).unwrap(),
                t,
                "recovered basis and term must regenerate the tuple"
            );
        }
    }

    #[test]
    fn recover_basis_rejects_non_vital_terms() {
        let kk = ExtensionField::make(7, 3, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let basis = Basis::random(&kk, &mut rng);
        let table = DescentTable::build(&kk, basis, 2).unwrap();
        // T = x: coefficient 1 generates only k.
        let term = MultiPoly::var(&kk, 0);
        let t = global_descent(&kk, &term, &table).unwrap();
        match recover_basis_from_descent(&kk, &t, &mut rng) {
            Err(Error::NotVital(_)) => {}
            other => panic!("expected NotVital, got {other:?}"),
        }
    }

    #[test]
    fn recover_basis_from_quadratic_term_statistics() {
        let kk = ExtensionField::make(7, 3, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let term = MultiPoly::from_terms(
            &kk,
            vec![(Monomial::from_pairs(vec![(0, 1), (1, 1)]), kk.one())],
        );
        let mut ok = 0;
        let mut non_generating = 0;
        let trials = 100;
        for _ in 0..trials {
            let basis = Basis::random(&kk, &mut rng);
            let table = DescentTable::build(&kk, basis, 3).unwrap();
            let t = global_descent(&kk, &term, &table).unwrap();
            match recover_basis_from_descent(&kk, &t, &mut rng) {
                Ok((rec, f)) => {
                    let table2 = DescentTable::build(&kk, rec, 3).unwrap();
                    assert_eq!(global_descent(&kk, &f, &table2).unwrap(), t);
                    ok += 1;
                }
                Err(Error::NonGenerating { .. }) => non_generating += 1,
                Err(e) => panic!("unexpected failure: {e}"),
            }
        }
        assert!(ok >= 90, "recovery succeeded only {ok}/{trials} times");
        assert_eq!(ok + non_generating, trials);
    }

    #[test]
    fn masking_hides_blocks_and_preserves_values() {
        let kk = ExtensionField::make(7, 2, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let basis = Basis::random(&kk, &mut rng);
        let table = DescentTable::build(&kk, basis.clone(), 4).unwrap();
        // V = Z(x1*x2 - 3): the generator has a constant term.
        let c = kk.embed(3);
        let gen = MultiPoly::var(&kk, 0)
            .mul(&kk, &MultiPoly::var(&kk, 1))
            .sub(&kk, &MultiPoly::constant(&kk, c.clone()));
        // Program: descent of a vital linear map.
        let a = kk.rand_nonzero(&mut rng);
        let f = MultiPoly::from_terms(&kk, vec![(Monomial::var(0), a)]);
        let t = global_descent(&kk, &f, &table).unwrap();
        assert!(!leaking_blocks(&kk, &t, &table).is_empty());
        let masked = mask_tuple(&kk, &t, &[gen.clone()], &table, &mut rng).unwrap();
        assert!(leaking_blocks(&kk, &masked, &table).is_empty());
        // Values agree on 100 sampled variety points.
        for _ in 0..100 {
            let x1 = kk.rand_nonzero(&mut rng);
            let pt = vec![x1.clone(), kk.mul(&c, &kk.inv(&x1))];
            assert!(kk.is_zero(&gen.eval(&kk, &pt)));
            let down = descend_point(&kk, &pt, &basis);
            assert_eq!(
                eval_tuple(&kk, &t, &down).unwrap(),
                eval_tuple(&kk, &masked, &down).unwrap()
            );
        }
        // Already-clean tuples pass through unchanged.
        let again = mask_tuple(&kk, &masked, &[gen], &table, &mut rng).unwrap();
        assert_eq!(again, masked);
    }

    #[test]
    fn masking_with_planted_gamma_still_leaks() {
        let kk = ExtensionField::make(7, 2, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let basis = Basis::random(&kk, &mut rng);
        let table = DescentTable::build(&kk, basis.clone(), 4).unwrap();
        let gen = MultiPoly::var(&kk, 0)
            .mul(&kk, &MultiPoly::var(&kk, 1))
            .sub(&kk, &MultiPoly::constant(&kk, kk.embed(3)));
        let f = MultiPoly::from_terms(&kk, vec![(Monomial::var(0), kk.gen())]);
        let t = global_descent(&kk, &f, &table).unwrap();
        // Deliberately use a multiplication-matrix transpose as the mask
        // mixer: the sum of two descents with respect to the same basis is
        // again a descent, so the leak detector must still fire.
        let a = kk.rand_nonzero(&mut rng);
        let planted = gamma_matrix(&kk, &a, &basis).transpose();
        let b = kk.rand_nonzero(&mut rng);
        let mask_poly = gen.mul_monomial(&kk, &Monomial::one().div_into(&Monomial::var(0)), &b);
        let masked = apply_mask(&kk, &t, &mask_poly, &planted, &table).unwrap();
        assert!(
            !leaking_blocks(&kk, &masked, &table).is_empty(),
            "a planted multiplication matrix must not hide the descent"
        );
    }

    #[test]
    fn masking_reports_unmatchable_monomials() {
        let kk = ExtensionField::make(7, 2, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let basis = Basis::random(&kk, &mut rng);
        let table = DescentTable::build(&kk, basis, 4).unwrap();
        // Ideal generated by x2^3 alone: cannot match a leaking x1 block.
        let gen = MultiPoly::var(&kk, 1).pow(&kk, 3);
        let f = MultiPoly::from_terms(&kk, vec![(Monomial::var(0), kk.gen())]);
        let t = global_descent(&kk, &f, &table).unwrap();
        match mask_tuple(&kk, &t, &[gen], &table, &mut rng) {
            Err(Error::MaskingFailed(_)) => {}
            other => panic!("expected MaskingFailed, got {other:?}"),
        }
    }
}
