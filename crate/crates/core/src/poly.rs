//! Univariate polynomials over an extension field: arithmetic, gcd chains,
//! the monic-resultant evaluation product, and root finding in the field.

use crate::field::{ExtensionField, FieldElement};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Dense univariate polynomial over `K`. Coefficients low-to-high with no
/// trailing zeros; the zero polynomial is the empty vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KPoly {
    pub c: Vec<FieldElement>,
}

impl KPoly {
    pub fn zero() -> Self {
        KPoly { c: vec![] }
    }

    pub fn from_coeffs(kk: &ExtensionField, c: Vec<FieldElement>) -> Self {
        let mut p = KPoly { c };
        p.normalize(kk);
        p
    }

    pub fn constant(kk: &ExtensionField, a: FieldElement) -> Self {
        KPoly::from_coeffs(kk, vec![a])
    }

    pub fn one(kk: &ExtensionField) -> Self {
        KPoly::constant(kk, kk.one())
    }

    /// The monomial `x`.
    pub fn x(kk: &ExtensionField) -> Self {
        KPoly {
            c: vec![kk.zero(), kk.one()],
        }
    }

    /// Lift a polynomial with prime-field coefficients.
    pub fn lift(kk: &ExtensionField, c: &[u64]) -> Self {
        KPoly::from_coeffs(kk, c.iter().map(|&a| kk.embed(a)).collect())
    }

    fn normalize(&mut self, kk: &ExtensionField) {
        while self.c.last().is_some_and(|a| kk.is_zero(a)) {
            self.c.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn deg(&self) -> Option<usize> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.c.len() - 1)
        }
    }

    /// Leading coefficient; panics on the zero polynomial.
    pub fn lc(&self) -> &FieldElement {
        self.c
            .last()
            .expect("leading coefficient of zero polynomial")
    }

    pub fn coeff(&self, kk: &ExtensionField, i: usize) -> FieldElement {
        self.c.get(i).cloned().unwrap_or_else(|| kk.zero())
    }

    pub fn is_monic(&self, kk: &ExtensionField) -> bool {
        self.c.last().is_some_and(|a| *a == kk.one())
    }

    pub fn add(&self, kk: &ExtensionField, other: &KPoly) -> KPoly {
        let n = self.c.len().max(other.c.len());
        let c = (0..n)
            .map(|i| kk.add(&self.coeff(kk, i), &other.coeff(kk, i)))
            .collect();
        KPoly::from_coeffs(kk, c)
    }

    pub fn sub(&self, kk: &ExtensionField, other: &KPoly) -> KPoly {
        let n = self.c.len().max(other.c.len());
        let c = (0..n)
            .map(|i| kk.sub(&self.coeff(kk, i), &other.coeff(kk, i)))
            .collect();
        KPoly::from_coeffs(kk, c)
    }

    pub fn neg(&self, kk: &ExtensionField) -> KPoly {
        KPoly {
            c: self.c.iter().map(|a| kk.neg(a)).collect(),
        }
    }

    pub fn scale(&self, kk: &ExtensionField, a: &FieldElement) -> KPoly {
        KPoly::from_coeffs(kk, self.c.iter().map(|x| kk.mul(x, a)).collect())
    }

    pub fn mul(&self, kk: &ExtensionField, other: &KPoly) -> KPoly {
        if self.is_zero() || other.is_zero() {
            return KPoly::zero();
        }
        let mut c = vec![kk.zero(); self.c.len() + other.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if kk.is_zero(a) {
                continue;
            }
            for (j, b) in other.c.iter().enumerate() {
                c[i + j] = kk.add(&c[i + j], &kk.mul(a, b));
            }
        }
        KPoly::from_coeffs(kk, c)
    }

    pub fn monic(&self, kk: &ExtensionField) -> KPoly {
        assert!(!self.is_zero());
        self.scale(kk, &kk.inv(self.lc()))
    }

    /// Quotient and remainder; the divisor must be nonzero.
    pub fn divrem(&self, kk: &ExtensionField, den: &KPoly) -> (KPoly, KPoly) {
        assert!(!den.is_zero(), "division by zero polynomial");
        let dd = den.deg().unwrap();
        let lc_inv = kk.inv(den.lc());
        let mut rem = self.c.clone();
        let mut quo = vec![kk.zero(); self.c.len().saturating_sub(dd)];
        while rem.len() > dd || (rem.len() == dd + 1 && dd == 0) {
            if rem.len() < dd + 1 {
                break;
            }
            let k_idx = rem.len() - 1 - dd;
            let f = kk.mul(&rem[rem.len() - 1], &lc_inv);
            if !kk.is_zero(&f) {
                quo[k_idx] = f.clone();
                for (j, dc) in den.c.iter().enumerate() {
                    let s = kk.mul(&f, dc);
                    rem[k_idx + j] = kk.sub(&rem[k_idx + j], &s);
                }
            }
            rem.pop();
        }
        (KPoly::from_coeffs(kk, quo), KPoly::from_coeffs(kk, rem))
    }

    pub fn rem(&self, kk: &ExtensionField, den: &KPoly) -> KPoly {
        self.divrem(kk, den).1
    }

    /// Exact division; panics if the remainder is nonzero.
    pub fn div_exact(&self, kk: &ExtensionField, den: &KPoly) -> KPoly {
        let (q, r) = self.divrem(kk, den);
        assert!(r.is_zero(), "division was not exact");
        q
    }

    pub fn eval(&self, kk: &ExtensionField, x: &FieldElement) -> FieldElement {
        let mut acc = kk.zero();
        for a in self.c.iter().rev() {
            acc = kk.add(&kk.mul(&acc, x), a);
        }
        acc
    }

    pub fn derivative(&self, kk: &ExtensionField) -> KPoly {
        if self.c.len() <= 1 {
            return KPoly::zero();
        }
        let c = self.c[1..]
            .iter()
            .enumerate()
            .map(|(i, a)| kk.scale(a, (i as u64 + 1) % kk.p()))
            .collect();
        KPoly::from_coeffs(kk, c)
    }

    /// Monic gcd.
    pub fn gcd(&self, kk: &ExtensionField, other: &KPoly) -> KPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(kk, &b);
            a = std::mem::replace(&mut b, r);
        }
        if a.is_zero() {
            a
        } else {
            a.monic(kk)
        }
    }

    /// Extended gcd: `(g, s, t)` with `s*self + t*other = g`, `g` monic
    /// (or zero when both inputs are zero).
    pub fn xgcd(&self, kk: &ExtensionField, other: &KPoly) -> (KPoly, KPoly, KPoly) {
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (KPoly::one(kk), KPoly::zero());
        let (mut t0, mut t1) = (KPoly::zero(), KPoly::one(kk));
        while !r1.is_zero() {
            let (q, r) = r0.divrem(kk, &r1);
            r0 = std::mem::replace(&mut r1, r);
            let ns = s0.sub(kk, &q.mul(kk, &s1));
            s0 = std::mem::replace(&mut s1, ns);
            let nt = t0.sub(kk, &q.mul(kk, &t1));
            t0 = std::mem::replace(&mut t1, nt);
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let inv = kk.inv(r0.lc());
        let inv_el = KPoly::constant(kk, inv);
        (r0.monic(kk), s0.mul(kk, &inv_el), t0.mul(kk, &inv_el))
    }

    pub fn pow_mod(&self, kk: &ExtensionField, mut e: u128, modulus: &KPoly) -> KPoly {
        let mut acc = KPoly::one(kk).rem(kk, modulus);
        let mut b = self.rem(kk, modulus);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(kk, &b).rem(kk, modulus);
            }
            b = b.mul(kk, &b).rem(kk, modulus);
            e >>= 1;
        }
        acc
    }

    /// Apply a Frobenius power to every coefficient.
    pub fn twist(&self, kk: &ExtensionField, s: usize) -> KPoly {
        KPoly {
            c: self.c.iter().map(|a| kk.frob(a, s)).collect(),
        }
    }
}

/// Product of `g` over the roots of the monic polynomial `f` (with
/// multiplicity, roots taken in a splitting field). Computed purely by
/// remainder swaps, so it never leaves `K`:
///
/// * `res(f, g) = lc(g)^deg(f) * (-1)^(deg f * deg g) * res(monic(g), f)`
///   once `g` has been reduced mod `f`,
/// * a constant `c` evaluates to `c^deg(f)`,
/// * `res(1, g) = 1` and `res(f, 0) = 0`.
pub fn res_monic(kk: &ExtensionField, f: &KPoly, g: &KPoly) -> FieldElement {
    assert!(f.is_monic(kk), "res_monic needs a monic left argument");
    let df = f.deg().unwrap();
    if df == 0 {
        return kk.one();
    }
    let r = g.rem(kk, f);
    if r.is_zero() {
        return kk.zero();
    }
    let dr = r.deg().unwrap();
    if dr == 0 {
        return kk.pow(&r.c[0], df as u128);
    }
    let lead = kk.pow(r.lc(), df as u128);
    let sign = if (df * dr) % 2 == 1 && kk.p() != 2 {
        kk.neg(&kk.one())
    } else {
        kk.one()
    };
    let sub = res_monic(kk, &r.monic(kk), f);
    kk.mul(&kk.mul(&lead, &sign), &sub)
}

/// Distinct roots of `f` in `K`, unordered. Uses gcd with `x^q - x` to cut
/// down to the product of linear factors, then equal-degree splitting
/// (odd q) or exhaustive scan (q <= 2^16, covering characteristic 2 sizes).
pub fn roots_in_field(kk: &ExtensionField, f: &KPoly, rng: &mut impl Rng) -> Vec<FieldElement> {
    if f.is_zero() || f.deg() == Some(0) {
        return vec![];
    }
    let x = KPoly::x(kk);
    let xq = x.pow_mod(kk, kk.q(), f);
    let lin = f.gcd(kk, &xq.sub(kk, &x));
    let mut out = vec![];
    split_linear_product(kk, &lin, rng, &mut out);
    out
}

fn split_linear_product(
    kk: &ExtensionField,
    f: &KPoly,
    rng: &mut impl Rng,
    out: &mut Vec<FieldElement>,
) {
    match f.deg() {
        None | Some(0) => {}
        Some(1) => {
            let root = kk.neg(&kk.mul(&f.c[0], &kk.inv(&f.c[1])));
            out.push(root);
        }
        Some(_) if kk.p() == 2 || kk.q() <= 1 << 16 => {
            for a in kk.elements() {
                if kk.is_zero(&f.eval(kk, &a)) {
                    out.push(a);
                }
            }
        }
        Some(_) => {
            // Equal-degree splitting: gcd(f, (x + a)^((q-1)/2) - 1) is a
            // proper factor with probability about 1/2 per trial.
            let e = (kk.q() - 1) / 2;
            loop {
                let a = kk.rand(rng);
                let shift = KPoly::from_coeffs(kk, vec![a, kk.one()]);
                let pw = shift.pow_mod(kk, e, f);
                let h = f.gcd(kk, &pw.sub(kk, &KPoly::one(kk)));
                let dh = h.deg().unwrap_or(0);
                if dh > 0 && dh < f.deg().unwrap() {
                    split_linear_product(kk, &h, rng, out);
                    split_linear_product(kk, &f.div_exact(kk, &h), rng, out);
                    return;
                }
            }
        }
    }
}
