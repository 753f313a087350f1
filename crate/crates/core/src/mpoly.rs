//! Sparse multivariate polynomials over an extension field. Variables are
//! plain indices; each variable occurrence may carry a Frobenius tag `s`,
//! meaning the factor is `sigma^s(x_v)` rather than `x_v`. Descent code
//! layers its own row/column meaning on top of the indices.

use crate::field::{ExtensionField, FieldElement};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Canonical monomial: `(variable, frobenius tag, exponent)` triples sorted
/// by `(variable, tag)`, exponents nonzero. The empty monomial is `1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial(pub Vec<(u32, u32, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(vec![])
    }

    pub fn var(i: u32) -> Self {
        Monomial(vec![(i, 0, 1)])
    }

    /// Untagged monomial from `(variable, exponent)` pairs.
    pub fn from_pairs(pairs: Vec<(u32, u32)>) -> Self {
        Monomial::from_tagged(pairs.into_iter().map(|(v, e)| (v, 0, e)).collect())
    }

    pub fn from_tagged(triples: Vec<(u32, u32, u32)>) -> Self {
        let mut m: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for (v, s, e) in triples {
            if e > 0 {
                *m.entry((v, s)).or_insert(0) += e;
            }
        }
        Monomial(m.into_iter().map(|((v, s), e)| (v, s, e)).collect())
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m: BTreeMap<(u32, u32), u32> =
            self.0.iter().map(|&(v, s, e)| ((v, s), e)).collect();
        for &(v, s, e) in &other.0 {
            *m.entry((v, s)).or_insert(0) += e;
        }
        Monomial(m.into_iter().map(|((v, s), e)| (v, s, e)).collect())
    }

    pub fn total_deg(&self) -> u32 {
        self.0.iter().map(|&(_, _, e)| e).sum()
    }

    /// Total degree in a variable across all tags.
    pub fn deg_in(&self, var: u32) -> u32 {
        self.0
            .iter()
            .filter(|&&(v, _, _)| v == var)
            .map(|&(_, _, e)| e)
            .sum()
    }

    pub fn is_untagged(&self) -> bool {
        self.0.iter().all(|&(_, s, _)| s == 0)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().all(|&(v, s, e)| {
            other
                .0
                .iter()
                .find(|&&(ov, os, _)| ov == v && os == s)
                .is_some_and(|&(_, _, oe)| oe >= e)
        })
    }

    /// `other / self`; caller must ensure divisibility.
    pub fn div_into(&self, other: &Monomial) -> Monomial {
        debug_assert!(self.divides(other));
        let mut m: BTreeMap<(u32, u32), u32> =
            other.0.iter().map(|&(v, s, e)| ((v, s), e)).collect();
        for &(v, s, e) in &self.0 {
            let slot = m.get_mut(&(v, s)).unwrap();
            *slot -= e;
            if *slot == 0 {
                m.remove(&(v, s));
            }
        }
        Monomial(m.into_iter().map(|((v, s), e)| (v, s, e)).collect())
    }

    pub fn eval(&self, kk: &ExtensionField, point: &[FieldElement]) -> FieldElement {
        let mut acc = kk.one();
        for &(v, s, e) in &self.0 {
            let x = kk.frob(&point[v as usize], s as usize);
            acc = kk.mul(&acc, &kk.pow(&x, e as u128));
        }
        acc
    }

    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|&(v, _, _)| v)
    }
}

/// Sparse polynomial: monomial -> nonzero coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPoly {
    pub terms: BTreeMap<Monomial, FieldElement>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(kk: &ExtensionField, a: FieldElement) -> Self {
        let mut p = MultiPoly::zero();
        if !kk.is_zero(&a) {
            p.terms.insert(Monomial::one(), a);
        }
        p
    }

    pub fn one(kk: &ExtensionField) -> Self {
        MultiPoly::constant(kk, kk.one())
    }

    pub fn var(kk: &ExtensionField, i: u32) -> Self {
        let mut p = MultiPoly::zero();
        p.terms.insert(Monomial::var(i), kk.one());
        p
    }

    pub fn from_terms(
        kk: &ExtensionField,
        terms: impl IntoIterator<Item = (Monomial, FieldElement)>,
    ) -> Self {
        let mut p = MultiPoly::zero();
        for (m, c) in terms {
            p.add_term(kk, m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, kk: &ExtensionField, m: Monomial, c: FieldElement) {
        if kk.is_zero(&c) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = kk.add(e.get(), &c);
                if kk.is_zero(&s) {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn coeff(&self, kk: &ExtensionField, m: &Monomial) -> FieldElement {
        self.terms.get(m).cloned().unwrap_or_else(|| kk.zero())
    }

    pub fn add(&self, kk: &ExtensionField, other: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(kk, m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, kk: &ExtensionField, other: &MultiPoly) -> MultiPoly {
        self.add(kk, &other.neg(kk))
    }

    pub fn neg(&self, kk: &ExtensionField) -> MultiPoly {
        MultiPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), kk.neg(c)))
                .collect(),
        }
    }

    pub fn scale(&self, kk: &ExtensionField, a: &FieldElement) -> MultiPoly {
        if kk.is_zero(a) {
            return MultiPoly::zero();
        }
        MultiPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), kk.mul(c, a)))
                .collect(),
        }
    }

    pub fn mul(&self, kk: &ExtensionField, other: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(kk, m1.mul(m2), kk.mul(c1, c2));
            }
        }
        out
    }

    pub fn mul_monomial(&self, kk: &ExtensionField, m: &Monomial, c: &FieldElement) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m1, c1) in &self.terms {
            out.add_term(kk, m1.mul(m), kk.mul(c1, c));
        }
        out
    }

    pub fn pow(&self, kk: &ExtensionField, e: u32) -> MultiPoly {
        let mut acc = MultiPoly::one(kk);
        for _ in 0..e {
            acc = acc.mul(kk, self);
        }
        acc
    }

    pub fn eval(&self, kk: &ExtensionField, point: &[FieldElement]) -> FieldElement {
        let mut acc = kk.zero();
        for (m, c) in &self.terms {
            acc = kk.add(&acc, &kk.mul(c, &m.eval(kk, point)));
        }
        acc
    }

    /// Simultaneously replace every variable `v` with `subs[v]`. Tagged
    /// occurrences are only supported when the substitution is a constant
    /// (the tag then acts on the value).
    pub fn substitute(&self, kk: &ExtensionField, subs: &[MultiPoly]) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, c) in &self.terms {
            let mut term = MultiPoly::constant(kk, c.clone());
            for &(v, s, e) in &m.0 {
                let g = &subs[v as usize];
                let g = if s == 0 {
                    g.clone()
                } else {
                    let cval = g
                        .constant_value(kk)
                        .expect("tagged variable substituted by a non-constant");
                    MultiPoly::constant(kk, kk.frob(&cval, s as usize))
                };
                term = term.mul(kk, &g.pow(kk, e));
            }
            out = out.add(kk, &term);
        }
        out
    }

    /// The value when the polynomial is a constant (including zero).
    pub fn constant_value(&self, kk: &ExtensionField) -> Option<FieldElement> {
        match self.terms.len() {
            0 => Some(kk.zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                (m.0.is_empty()).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Fix one variable to a constant (all tags of that variable).
    pub fn partial_eval(&self, kk: &ExtensionField, var: u32, value: &FieldElement) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, c) in &self.terms {
            let mut keep = vec![];
            let mut factor = kk.one();
            for &(v, s, e) in &m.0 {
                if v == var {
                    let x = kk.frob(value, s as usize);
                    factor = kk.mul(&factor, &kk.pow(&x, e as u128));
                } else {
                    keep.push((v, s, e));
                }
            }
            out.add_term(kk, Monomial(keep), kk.mul(c, &factor));
        }
        out
    }

    /// Apply a Frobenius power to every coefficient (variables untouched).
    pub fn twist(&self, kk: &ExtensionField, s: usize) -> MultiPoly {
        MultiPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), kk.frob(c, s)))
                .collect(),
        }
    }

    pub fn total_deg(&self) -> u32 {
        self.terms.keys().map(|m| m.total_deg()).max().unwrap_or(0)
    }

    pub fn max_var(&self) -> Option<u32> {
        self.terms.keys().flat_map(|m| m.vars()).max()
    }

    pub fn is_untagged(&self) -> bool {
        self.terms.keys().all(|m| m.is_untagged())
    }

    /// True when every coefficient lies in the prime field.
    pub fn is_k_rational(&self, kk: &ExtensionField) -> bool {
        self.terms.values().all(|c| kk.as_base(c).is_some())
    }

    pub fn support(&self) -> impl Iterator<Item = &Monomial> + '_ {
        self.terms.keys()
    }
}

/// JSON shape of one term: sparse exponent pairs, parallel Frobenius tags,
/// and the coefficient's coordinate vector.
#[derive(Serialize, Deserialize)]
struct TermJson {
    exps: Vec<(u32, u32)>,
    frob: Vec<u32>,
    coeff: Vec<u64>,
}

impl Serialize for MultiPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<TermJson> = self
            .terms
            .iter()
            .map(|(m, c)| TermJson {
                exps: m.0.iter().map(|&(v, _, e)| (v, e)).collect(),
                frob: m.0.iter().map(|&(_, s, _)| s).collect(),
                coeff: c.c.clone(),
            })
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<TermJson> = Vec::deserialize(d)?;
        let mut terms = BTreeMap::new();
        for t in v {
            if t.frob.len() != t.exps.len() {
                return Err(serde::de::Error::custom(
                    "frob tags must parallel the exponent list",
                ));
            }
            let triples = t
                .exps
                .iter()
                .zip(&t.frob)
                .map(|(&(v, e), &s)| (v, s, e))
                .collect();
            terms.insert(Monomial::from_tagged(triples), FieldElement { c: t.coeff });
        }
        Ok(MultiPoly { terms })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

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

    fn rand_point(kk: &ExtensionField, n: usize, rng: &mut impl Rng) -> Vec<FieldElement> {
        (0..n).map(|_| kk.rand(rng)).collect()
    }

    #[test]
    fn ring_identities_under_evaluation() {
        let kk = ExtensionField::make(7, 2, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..40 {
            let a = rand_mpoly(&kk, 3, 4, 2, &mut rng);
            let b = rand_mpoly(&kk, 3, 4, 2, &mut rng);
            let c = rand_mpoly(&kk, 3, 4, 2, &mut rng);
            let pt = rand_point(&kk, 3, &mut rng);
            let ev = |p: &MultiPoly| p.eval(&kk, &pt);
            assert_eq!(ev(&a.mul(&kk, &b)), kk.mul(&ev(&a), &ev(&b)));
            assert_eq!(ev(&a.add(&kk, &b)), kk.add(&ev(&a), &ev(&b)));
            assert_eq!(
                a.mul(&kk, &b.add(&kk, &c)),
                a.mul(&kk, &b).add(&kk, &a.mul(&kk, &c))
            );
            assert_eq!(a.mul(&kk, &b), b.mul(&kk, &a));
            assert_eq!(a.mul(&kk, &b).mul(&kk, &c), a.mul(&kk, &b.mul(&kk, &c)));
            assert_eq!(a.sub(&kk, &a), MultiPoly::zero());
        }
    }

    #[test]
    fn binomial_square_in_char_two() {
        let kk = ExtensionField::make(2, 2, 0).unwrap();
        let x = MultiPoly::var(&kk, 0);
        let y = MultiPoly::var(&kk, 1);
        let sq = x.add(&kk, &y).pow(&kk, 2);
        let expect = x.pow(&kk, 2).add(&kk, &y.pow(&kk, 2));
        assert_eq!(sq, expect, "(x+y)^2 = x^2 + y^2 in characteristic 2");
    }

    #[test]
    fn substitution_commutes_with_evaluation() {
        let kk = ExtensionField::make(5, 2, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..30 {
            let f = rand_mpoly(&kk, 2, 4, 3, &mut rng);
            let subs = vec![
                rand_mpoly(&kk, 3, 3, 2, &mut rng),
                rand_mpoly(&kk, 3, 3, 2, &mut rng),
            ];
            let pt = rand_point(&kk, 3, &mut rng);
            let inner: Vec<FieldElement> = subs.iter().map(|s| s.eval(&kk, &pt)).collect();
            assert_eq!(f.substitute(&kk, &subs).eval(&kk, &pt), f.eval(&kk, &inner));
        }
    }

    #[test]
    fn partial_eval_matches_full_eval() {
        let kk = ExtensionField::make(7, 3, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..30 {
            let f = rand_mpoly(&kk, 3, 5, 3, &mut rng);
            let pt = rand_point(&kk, 3, &mut rng);
            let g = f.partial_eval(&kk, 1, &pt[1]);
            assert_eq!(g.eval(&kk, &pt), f.eval(&kk, &pt));
            assert!(g.support().all(|m| m.deg_in(1) == 0));
        }
    }

    #[test]
    fn twist_is_frobenius_semilinear() {
        let kk = ExtensionField::make(3, 4, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..30 {
            let f = rand_mpoly(&kk, 2, 4, 2, &mut rng);
            let pt = rand_point(&kk, 2, &mut rng);
            for s in 0..4 {
                let tw: Vec<FieldElement> = pt.iter().map(|x| kk.frob(x, s)).collect();
                assert_eq!(
                    f.twist(&kk, s).eval(&kk, &tw),
                    kk.frob(&f.eval(&kk, &pt), s)
                );
            }
        }
    }

    #[test]
    fn tagged_variables_evaluate_through_frobenius() {
        let kk = ExtensionField::make(7, 3, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        // sigma^1(x_0)^2 * x_1
        let m = Monomial::from_tagged(vec![(0, 1, 2), (1, 0, 1)]);
        let f = MultiPoly::from_terms(&kk, vec![(m, kk.one())]);
        for _ in 0..20 {
            let pt = rand_point(&kk, 2, &mut rng);
            let expect = kk.mul(&kk.pow(&kk.frob(&pt[0], 1), 2), &pt[1]);
            assert_eq!(f.eval(&kk, &pt), expect);
        }
        // Same variable with different tags stays separate.
        let m2 = Monomial::from_tagged(vec![(0, 0, 1), (0, 1, 1)]);
        assert_eq!(m2.0.len(), 2);
        assert_eq!(m2.total_deg(), 2);
        assert_eq!(m2.deg_in(0), 2);
    }

    #[test]
    fn monomial_division() {
        let m1 = Monomial::from_pairs(vec![(0, 2), (2, 1)]);
        let m2 = Monomial::from_pairs(vec![(0, 3), (1, 1), (2, 1)]);
        assert!(m1.divides(&m2));
        assert!(!m2.divides(&m1));
        assert_eq!(m1.div_into(&m2), Monomial::from_pairs(vec![(0, 1), (1, 1)]));
        assert_eq!(m1.mul(&m1.div_into(&m2)), m2);
        // Tags must match for divisibility.
        let t = Monomial::from_tagged(vec![(0, 1, 1)]);
        assert!(!t.divides(&m2));
    }

    #[test]
    fn serde_roundtrip() {
        let kk = ExtensionField::make(7, 2, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let mut f = rand_mpoly(&kk, 3, 6, 3, &mut rng);
        f.add_term(
            &kk,
            Monomial::from_tagged(vec![(1, 2, 1)]),
            kk.rand_nonzero(&mut rng),
        );
        let s = serde_json::to_string(&f).unwrap();
        let g: MultiPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }
}
