//! Prime fields `F_p`, dense polynomials over them, and matrices mod p.
//!
//! Elements of `F_p` are bare `u64` values in `[0, p)`; all operations take
//! the field context explicitly. `p` is capped below `2^31` so products fit
//! in `u64` without widening.

mod ext;

pub use ext::{change_basis, Basis, ExtensionField, FieldElement, MatExt};

use crate::{Error, Result};
use rand::Rng;

/// Largest admitted characteristic (exclusive).
pub const MAX_P: u64 = 1 << 31;

/// Deterministic trial-division primality check; `p < 2^31` keeps this cheap.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// The field `F_p` for a prime `p < 2^31`. Copy context for bare-`u64` elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p >= MAX_P {
            return Err(Error::pre(format!("p = {p} exceeds 2^31 cap")));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.p
    }

    /// Reduce a signed integer into `[0, p)`.
    #[inline]
    pub fn reduce_i64(&self, a: i64) -> u64 {
        a.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        // a, b < 2^31 so the product fits in u64.
        (a * b) % self.p
    }

    pub fn pow(&self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by extended Euclid. Panics on zero input: that
    /// is always a library bug, not a data condition.
    pub fn inv(&self, a: u64) -> u64 {
        assert!(a % self.p != 0, "inverse of zero mod {}", self.p);
        let (mut r0, mut r1) = (self.p as i64, (a % self.p) as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        t0.rem_euclid(self.p as i64) as u64
    }

    pub fn rand(&self, rng: &mut impl Rng) -> u64 {
        rng.gen_range(0..self.p)
    }

    pub fn rand_nonzero(&self, rng: &mut impl Rng) -> u64 {
        rng.gen_range(1..self.p)
    }
}

// ---------------------------------------------------------------------------
// Dense polynomials over F_p, used for extension moduli and minimal
// polynomials. Coefficient vectors are normalized: no trailing zeros, the
// zero polynomial is the empty vector.
// ---------------------------------------------------------------------------

pub(crate) fn ppoly_norm(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

/// Degree with the convention deg 0 = -1 (returned as `None`).
pub(crate) fn ppoly_deg(a: &[u64]) -> Option<usize> {
    if a.is_empty() {
        None
    } else {
        Some(a.len() - 1)
    }
}

pub(crate) fn ppoly_add(k: PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *o = k.add(x, y);
    }
    ppoly_norm(out)
}

pub(crate) fn ppoly_mul(k: PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = k.add(out[i + j], k.mul(x, y));
        }
    }
    ppoly_norm(out)
}

/// Euclidean division: returns (quotient, remainder). `b` must be nonzero.
pub(crate) fn ppoly_divrem(k: PrimeField, a: &[u64], b: &[u64]) -> (Vec<u64>, Vec<u64>) {
    assert!(!b.is_empty(), "division by zero polynomial");
    let mut r = a.to_vec();
    let db = b.len() - 1;
    if a.len() < b.len() {
        return (vec![], ppoly_norm(r));
    }
    let mut q = vec![0u64; a.len() - db];
    let lead_inv = k.inv(b[db]);
    for i in (db..r.len()).rev() {
        let c = k.mul(r[i], lead_inv);
        if c == 0 {
            continue;
        }
        q[i - db] = c;
        for (j, &bj) in b.iter().enumerate() {
            r[i - db + j] = k.sub(r[i - db + j], k.mul(c, bj));
        }
    }
    (ppoly_norm(q), ppoly_norm(r))
}

pub(crate) fn ppoly_rem(k: PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
    ppoly_divrem(k, a, b).1
}

pub(crate) fn ppoly_gcd(k: PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    while !b.is_empty() {
        let r = ppoly_rem(k, &a, &b);
        a = b;
        b = r;
    }
    if let Some(d) = ppoly_deg(&a) {
        let inv = k.inv(a[d]);
        for c in a.iter_mut() {
            *c = k.mul(*c, inv);
        }
    }
    a
}

pub(crate) fn ppoly_mulmod(k: PrimeField, a: &[u64], b: &[u64], m: &[u64]) -> Vec<u64> {
    ppoly_rem(k, &ppoly_mul(k, a, b), m)
}

/// `base^e mod m` by square and multiply.
pub(crate) fn ppoly_powmod(k: PrimeField, base: &[u64], mut e: u128, m: &[u64]) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut b = ppoly_rem(k, base, m);
    while e > 0 {
        if e & 1 == 1 {
            acc = ppoly_mulmod(k, &acc, &b, m);
        }
        b = ppoly_mulmod(k, &b, &b, m);
        e >>= 1;
    }
    acc
}

/// Irreducibility over `F_p` for monic `f` of degree `d >= 1`:
/// `x^(p^d) == x mod f` and `gcd(x^(p^(d/q)) - x, f) = 1` for prime `q | d`.
pub(crate) fn ppoly_is_irreducible(k: PrimeField, f: &[u64]) -> bool {
    let d = match ppoly_deg(f) {
        Some(d) if d >= 1 => d,
        _ => return false,
    };
    if d == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    let xq = ppoly_powmod(k, &x, (k.p() as u128).pow(d as u32), f);
    if xq != ppoly_rem(k, &x, f) {
        return false;
    }
    let mut m = d;
    let mut primes = vec![];
    let mut q = 2;
    while q * q <= m {
        if m % q == 0 {
            primes.push(q);
            while m % q == 0 {
                m /= q;
            }
        }
        q += 1;
    }
    if m > 1 {
        primes.push(m);
    }
    for q in primes {
        let e = (k.p() as u128).pow((d / q) as u32);
        let xe = ppoly_powmod(k, &x, e, f);
        // gcd(x^(p^(d/q)) - x, f) must be 1
        let diff = ppoly_add(k, &xe, &ppoly_scale(k, &x, k.neg(1)));
        let g = ppoly_gcd(k, &diff, f);
        if ppoly_deg(&g) != Some(0) {
            return false;
        }
    }
    true
}

pub(crate) fn ppoly_scale(k: PrimeField, a: &[u64], c: u64) -> Vec<u64> {
    ppoly_norm(a.iter().map(|&x| k.mul(x, c)).collect())
}

// ---------------------------------------------------------------------------
// Dense matrices over F_p (also used over F_ell in the protocol).
// ---------------------------------------------------------------------------

/// Row-major matrix over a prime field.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MatK {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<u64>,
}

impl MatK {
    pub fn zero(rows: usize, cols: usize) -> Self {
        MatK {
            rows,
            cols,
            a: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = MatK::zero(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        assert!(rows.iter().all(|v| v.len() == c));
        MatK {
            rows: r,
            cols: c,
            a: rows.into_iter().flatten().collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> MatK {
        let mut t = MatK::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, k: PrimeField, other: &MatK) -> MatK {
        assert_eq!(self.cols, other.rows);
        let mut out = MatK::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let x = self[(i, l)];
                if x == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = k.add(out[(i, j)], k.mul(x, other[(l, j)]));
                }
            }
        }
        out
    }

    pub fn matvec(&self, k: PrimeField, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(0u64, |acc, (&m, &x)| k.add(acc, k.mul(m, x)))
            })
            .collect()
    }

    pub fn add(&self, k: PrimeField, other: &MatK) -> MatK {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        MatK {
            rows: self.rows,
            cols: self.cols,
            a: self
                .a
                .iter()
                .zip(&other.a)
                .map(|(&x, &y)| k.add(x, y))
                .collect(),
        }
    }

    pub fn scale(&self, k: PrimeField, c: u64) -> MatK {
        MatK {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().map(|&x| k.mul(x, c)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|&x| x == 0)
    }

    /// Row-reduce in place; returns pivot column per reduced row.
    fn row_reduce(&mut self, k: PrimeField) -> Vec<usize> {
        let mut pivots = vec![];
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| self[(i, c)] != 0) else {
                continue;
            };
            for j in 0..self.cols {
                let t = self[(r, j)];
                self[(r, j)] = self[(pr, j)];
                self[(pr, j)] = t;
            }
            let inv = k.inv(self[(r, c)]);
            for j in c..self.cols {
                self[(r, j)] = k.mul(self[(r, j)], inv);
            }
            for i in 0..self.rows {
                if i != r && self[(i, c)] != 0 {
                    let f = self[(i, c)];
                    for j in c..self.cols {
                        let s = k.mul(f, self[(r, j)]);
                        self[(i, j)] = k.sub(self[(i, j)], s);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self, k: PrimeField) -> usize {
        let mut m = self.clone();
        m.row_reduce(k).len()
    }

    /// Inverse of a square matrix, `None` if singular.
    pub fn inverse(&self, k: PrimeField) -> Option<MatK> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = MatK::zero(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)];
            }
            aug[(i, n + i)] = 1;
        }
        let pivots = aug.row_reduce(k);
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
            return None;
        }
        let mut inv = MatK::zero(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = aug[(i, n + j)];
            }
        }
        Some(inv)
    }

    /// One solution of `self * x = b`, or `None` if inconsistent.
    pub fn solve(&self, k: PrimeField, b: &[u64]) -> Option<Vec<u64>> {
        assert_eq!(self.rows, b.len());
        let mut aug = MatK::zero(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)];
            }
            aug[(i, self.cols)] = b[i];
        }
        let pivots = aug.row_reduce(k);
        if pivots.contains(&self.cols) {
            return None; // pivot in the constant column
        }
        let mut x = vec![0u64; self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug[(r, self.cols)];
        }
        Some(x)
    }

    /// Basis of the right nullspace.
    pub fn nullspace(&self, k: PrimeField) -> Vec<Vec<u64>> {
        let mut m = self.clone();
        let pivots = m.row_reduce(k);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = vec![];
        for &fc in &free {
            let mut v = vec![0u64; self.cols];
            v[fc] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = k.neg(m[(r, fc)]);
            }
            basis.push(v);
        }
        basis
    }

    pub fn rand(k: PrimeField, rows: usize, cols: usize, rng: &mut impl Rng) -> MatK {
        MatK {
            rows,
            cols,
            a: (0..rows * cols).map(|_| k.rand(rng)).collect(),
        }
    }

    /// Random invertible square matrix (rejection sampling).
    pub fn rand_invertible(k: PrimeField, n: usize, rng: &mut impl Rng) -> MatK {
        loop {
            let m = MatK::rand(k, n, n, rng);
            if m.inverse(k).is_some() {
                return m;
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for MatK {
    type Output = u64;
    fn index(&self, (i, j): (usize, usize)) -> &u64 {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for MatK {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut u64 {
        &mut self.a[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn primality_small_table() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime(2147483647)); // 2^31 - 1
        assert!(!is_prime(2147483649));
    }

    #[test]
    fn prime_field_rejects_composite_and_large() {
        assert!(PrimeField::new(91).is_err());
        assert!(PrimeField::new(1 << 31).is_err());
        assert!(PrimeField::new(7).is_ok());
    }

    #[test]
    fn inverses_exhaustive_small_p() {
        for p in [2u64, 3, 5, 7, 31] {
            let k = PrimeField::new(p).unwrap();
            for a in 1..p {
                assert_eq!(k.mul(a, k.inv(a)), 1, "p={p} a={a}");
            }
        }
    }

    #[test]
    fn poly_divrem_roundtrip() {
        let k = PrimeField::new(13).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..200 {
            let a: Vec<u64> = (0..rng.gen_range(0..9)).map(|_| k.rand(&mut rng)).collect();
            let mut b: Vec<u64> = (0..rng.gen_range(1..6)).map(|_| k.rand(&mut rng)).collect();
            b.push(k.rand_nonzero(&mut rng));
            let a = ppoly_norm(a);
            let (q, r) = ppoly_divrem(k, &a, &b);
            let recomposed = ppoly_add(k, &ppoly_mul(k, &q, &b), &r);
            assert_eq!(recomposed, a);
            assert!(r.len() < b.len());
        }
    }

    #[test]
    fn irreducibility_matches_exhaustive_factor_search() {
        // Oracle: a monic degree-n poly over F_p is irreducible iff no monic
        // factor of degree 1..=n/2 divides it. Enumerate all monic polys of
        // degree <= 2 over F_3 and cross-check degree-4 candidates.
        let k = PrimeField::new(3).unwrap();
        let monic = |deg: usize| -> Vec<Vec<u64>> {
            let mut out = vec![];
            let n = 3u64.pow(deg as u32);
            for mut idx in 0..n {
                let mut c = vec![0u64; deg + 1];
                for slot in c.iter_mut().take(deg) {
                    *slot = idx % 3;
                    idx /= 3;
                }
                c[deg] = 1;
                out.push(c);
            }
            out
        };
        let low: Vec<Vec<u64>> = monic(1).into_iter().chain(monic(2)).collect();
        for f in monic(4) {
            let brute = !low.iter().any(|g| ppoly_rem(k, &f, g).is_empty());
            assert_eq!(ppoly_is_irreducible(k, &f), brute, "f = {f:?}");
        }
    }

    #[test]
    fn matrix_inverse_and_solve() {
        let k = PrimeField::new(31).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..50 {
            let m = MatK::rand_invertible(k, 4, &mut rng);
            let inv = m.inverse(k).unwrap();
            assert_eq!(m.mul(k, &inv), MatK::identity(4));
            let b: Vec<u64> = (0..4).map(|_| k.rand(&mut rng)).collect();
            let x = m.solve(k, &b).unwrap();
            assert_eq!(m.matvec(k, &x), b);
        }
    }

    #[test]
    fn nullspace_vectors_annihilate() {
        let k = PrimeField::new(7).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = MatK::rand(k, 3, 6, &mut rng);
            let ns = m.nullspace(k);
            assert_eq!(ns.len(), 6 - m.rank(k));
            for v in ns {
                assert!(m.matvec(k, &v).iter().all(|&x| x == 0));
            }
        }
    }
}
