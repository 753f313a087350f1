//! Sparse elements of the free associative algebra over `F_ℓ` on the
//! generator symbols `z_0 .. z_{n1-1}`, plus the switch rewriting that
//! rerandomizes encodings along published relations.
//!
//! Elements are kept in a canonical graded order (word length, then word)
//! with merged coefficients, so equal elements serialize to identical bytes.

use std::collections::HashMap;

use crate::field::{MatK, PrimeField};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrices::Relation;

/// One term: coefficient and word of generator indices. The empty word is
/// the algebra unit, so `{c: z, w: []}` is the constant `z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraTerm {
    pub c: u64,
    pub w: Vec<usize>,
}

/// Sparse algebra element. Invariants (maintained by every constructor):
/// coefficients in `[1, ℓ)`, no duplicate words, terms in graded
/// lexicographic order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlgebraElement {
    pub terms: Vec<AlgebraTerm>,
}

fn normalize(ell: u64, mut raw: Vec<AlgebraTerm>) -> Vec<AlgebraTerm> {
    raw.sort_by(|a, b| (a.w.len(), &a.w).cmp(&(b.w.len(), &b.w)));
    let mut out: Vec<AlgebraTerm> = Vec::with_capacity(raw.len());
    for t in raw {
        let c = t.c % ell;
        match out.last_mut() {
            Some(last) if last.w == t.w => {
                last.c = (last.c + c) % ell;
            }
            _ => out.push(AlgebraTerm { c, w: t.w }),
        }
    }
    out.retain(|t| t.c != 0);
    out
}

impl AlgebraElement {
    pub fn zero() -> Self {
        AlgebraElement { terms: vec![] }
    }

    /// The constant `z` (empty when `z ≡ 0`).
    pub fn constant(ell: u64, z: u64) -> Self {
        AlgebraElement {
            terms: normalize(
                ell,
                vec![AlgebraTerm {
                    c: z % ell,
                    w: vec![],
                }],
            ),
        }
    }

    /// Build from raw (coefficient, word) pairs, merging and ordering.
    pub fn from_terms(ell: u64, raw: Vec<(u64, Vec<usize>)>) -> Self {
        AlgebraElement {
            terms: normalize(
                ell,
                raw.into_iter()
                    .map(|(c, w)| AlgebraTerm { c, w })
                    .collect(),
            ),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Longest word length (0 for the zero element).
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.w.len()).max().unwrap_or(0)
    }

    /// Coefficient of the empty word.
    pub fn constant_term(&self) -> u64 {
        self.terms
            .iter()
            .find(|t| t.w.is_empty())
            .map_or(0, |t| t.c)
    }

    pub fn add(&self, other: &AlgebraElement, ell: u64) -> AlgebraElement {
        let mut raw = self.terms.clone();
        raw.extend(other.terms.iter().cloned());
        AlgebraElement {
            terms: normalize(ell, raw),
        }
    }

    pub fn scale(&self, c: u64, ell: u64) -> AlgebraElement {
        AlgebraElement {
            terms: normalize(
                ell,
                self.terms
                    .iter()
                    .map(|t| AlgebraTerm {
                        c: (t.c % ell) * (c % ell) % ell,
                        w: t.w.clone(),
                    })
                    .collect(),
            ),
        }
    }

    /// Left-multiply by a word: prepend `w` to every term.
    pub fn mul_word_left(&self, w: &[usize], ell: u64) -> AlgebraElement {
        AlgebraElement {
            terms: normalize(
                ell,
                self.terms
                    .iter()
                    .map(|t| {
                        let mut word = w.to_vec();
                        word.extend_from_slice(&t.w);
                        AlgebraTerm { c: t.c, w: word }
                    })
                    .collect(),
            ),
        }
    }

    /// Check the serializable invariants against a parameter set: canonical
    /// form, coefficients in `[1, ℓ)`, degree at most `n`, generator
    /// indices below `n1`.
    pub fn validate(&self, ell: u64, n: usize, n1: usize) -> Result<()> {
        for (idx, t) in self.terms.iter().enumerate() {
            if t.c == 0 || t.c >= ell {
                return Err(Error::Schema(format!(
                    "term {idx} coefficient {} outside [1, {ell})",
                    t.c
                )));
            }
            if t.w.len() > n {
                return Err(Error::Schema(format!(
                    "term {idx} has degree {} > bound {n}",
                    t.w.len()
                )));
            }
            if let Some(&g) = t.w.iter().find(|&&g| g >= n1) {
                return Err(Error::Schema(format!(
                    "term {idx} uses generator {g}, set has {n1}"
                )));
            }
            if idx > 0 {
                let prev = &self.terms[idx - 1];
                if (prev.w.len(), &prev.w) >= (t.w.len(), &t.w) {
                    return Err(Error::Schema(format!(
                        "terms out of canonical order at {idx}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Substitute matrices for generators: words become products (the empty
/// word the identity), and the element becomes a `d × d` matrix over `F_ℓ`.
pub fn psi_apply(elem: &AlgebraElement, mats: &[MatK], d: usize, ell: u64) -> Result<MatK> {
    let k = PrimeField::new(ell)?;
    let mut acc = MatK::zero(d, d);
    for t in &elem.terms {
        let mut prod = MatK::identity(d);
        for &i in &t.w {
            let m = mats
                .get(i)
                .ok_or_else(|| Error::pre(format!("generator {i} out of range")))?;
            prod = prod.mul(k, m);
        }
        acc = acc.add(k, &prod.scale(k, t.c % ell));
    }
    Ok(acc)
}

/// Every (term, position) slot whose adjacent generator pair has a
/// published rule. Scanned in canonical term order, so selection under a
/// seeded generator is deterministic.
fn switch_sites(
    elem: &AlgebraElement,
    index: &HashMap<(usize, usize), usize>,
) -> Vec<(usize, usize)> {
    let mut sites = vec![];
    for (ti, t) in elem.terms.iter().enumerate() {
        for pos in 0..t.w.len().saturating_sub(1) {
            if index.contains_key(&(t.w[pos], t.w[pos + 1])) {
                sites.push((ti, pos));
            }
        }
    }
    sites
}

/// Rewrite one adjacent pair along a published relation: the term
/// `c · w1 z_i z_j w2` becomes `c·r · w1 z_j z_i w2 + Σ_k c·l_k · w1 z_k w2`.
/// Because the relation is an exact matrix identity, the substitution image
/// of the element is unchanged — not merely congruent.
fn rewrite_at(
    elem: &AlgebraElement,
    ti: usize,
    pos: usize,
    rel: &Relation,
    ell: u64,
) -> AlgebraElement {
    let mut raw: Vec<AlgebraTerm> = elem
        .terms
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != ti)
        .map(|(_, t)| t.clone())
        .collect();
    let t = &elem.terms[ti];
    let (w1, rest) = t.w.split_at(pos);
    let w2 = &rest[2..];
    let mut swapped = w1.to_vec();
    swapped.push(rel.j);
    swapped.push(rel.i);
    swapped.extend_from_slice(w2);
    raw.push(AlgebraTerm {
        c: t.c * rel.r % ell,
        w: swapped,
    });
    for (k2, &lc) in rel.l.iter().enumerate() {
        if lc != 0 {
            let mut w = w1.to_vec();
            w.push(k2);
            w.extend_from_slice(w2);
            raw.push(AlgebraTerm {
                c: t.c * lc % ell,
                w,
            });
        }
    }
    AlgebraElement {
        terms: normalize(ell, raw),
    }
}

/// Apply `count` random switches. Draws that land on an element with no
/// eligible adjacent pair are consumed without effect.
pub fn apply_switches(
    elem: &AlgebraElement,
    relations: &[Relation],
    count: usize,
    ell: u64,
    rng: &mut impl Rng,
) -> AlgebraElement {
    let index: HashMap<(usize, usize), usize> = relations
        .iter()
        .enumerate()
        .map(|(idx, r)| ((r.i, r.j), idx))
        .collect();
    let mut cur = elem.clone();
    for _ in 0..count {
        let sites = switch_sites(&cur, &index);
        if sites.is_empty() {
            continue;
        }
        let (ti, pos) = sites[rng.gen_range(0..sites.len())];
        let t = &cur.terms[ti];
        let rel = &relations[index[&(t.w[pos], t.w[pos + 1])]];
        cur = rewrite_at(&cur, ti, pos, rel, ell);
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::super::matrices::{compute_relations, sample_matrices};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn normalization_merges_and_orders() {
        let e = AlgebraElement::from_terms(
            5,
            vec![
                (3, vec![1, 0]),
                (4, vec![]),
                (2, vec![1, 0]),
                (6, vec![2]),
                (5, vec![0]),
            ],
        );
        // 3 + 2 = 0 mod 5 kills the [1,0] word; 5 kills [0]; 6 ≡ 1.
        assert_eq!(
            e.terms,
            vec![
                AlgebraTerm { c: 4, w: vec![] },
                AlgebraTerm { c: 1, w: vec![2] },
            ]
        );
        assert_eq!(e.degree(), 1);
        assert_eq!(e.constant_term(), 4);
        e.validate(5, 4, 16).unwrap();
    }

    #[test]
    fn serde_shape_is_flat_term_list() {
        let e = AlgebraElement::from_terms(5, vec![(2, vec![0, 3]), (1, vec![])]);
        let js = serde_json::to_value(&e).unwrap();
        assert_eq!(
            js,
            serde_json::json!([{"c": 1, "w": []}, {"c": 2, "w": [0, 3]}])
        );
        let back: AlgebraElement = serde_json::from_value(js).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn validate_flags_broken_invariants() {
        let e = AlgebraElement {
            terms: vec![AlgebraTerm { c: 0, w: vec![] }],
        };
        assert!(e.validate(5, 4, 16).is_err());
        let e = AlgebraElement {
            terms: vec![AlgebraTerm {
                c: 1,
                w: vec![0, 1, 2, 3, 0],
            }],
        };
        assert!(e.validate(5, 4, 16).is_err());
        let e = AlgebraElement {
            terms: vec![AlgebraTerm { c: 1, w: vec![16] }],
        };
        assert!(e.validate(5, 4, 16).is_err());
        let e = AlgebraElement {
            terms: vec![
                AlgebraTerm { c: 1, w: vec![1] },
                AlgebraTerm { c: 1, w: vec![0] },
            ],
        };
        assert!(e.validate(5, 4, 16).is_err());
    }

    #[test]
    fn arithmetic_matches_hand_results() {
        let ell = 7;
        let a = AlgebraElement::from_terms(ell, vec![(3, vec![1]), (2, vec![])]);
        let b = AlgebraElement::from_terms(ell, vec![(5, vec![1]), (1, vec![0, 1])]);
        let s = a.add(&b, ell);
        assert_eq!(
            s.terms,
            vec![
                AlgebraTerm { c: 2, w: vec![] },
                AlgebraTerm { c: 1, w: vec![1] },
                AlgebraTerm {
                    c: 1,
                    w: vec![0, 1]
                },
            ]
        );
        let t = a.scale(3, ell);
        assert_eq!(
            t.terms,
            vec![
                AlgebraTerm { c: 6, w: vec![] },
                AlgebraTerm { c: 2, w: vec![1] },
            ]
        );
        let m = b.mul_word_left(&[2], ell);
        assert_eq!(
            m.terms,
            vec![
                AlgebraTerm {
                    c: 5,
                    w: vec![2, 1]
                },
                AlgebraTerm {
                    c: 1,
                    w: vec![2, 0, 1]
                },
            ]
        );
    }

    #[test]
    fn psi_is_multiplicative_on_words() {
        let ell = 5;
        let set = sample_matrices(4, 6, 9).unwrap();
        let k = PrimeField::new(ell).unwrap();
        // ψ(z_0 z_1) = M_0 M_1, ψ(1) = I, ψ(3·z_2) = 3 M_2.
        let e = AlgebraElement::from_terms(ell, vec![(1, vec![0, 1])]);
        let got = psi_apply(&e, &set.mats, 4, ell).unwrap();
        assert_eq!(got, set.mats[0].mul(k, &set.mats[1]));
        let unit = AlgebraElement::constant(ell, 1);
        assert_eq!(
            psi_apply(&unit, &set.mats, 4, ell).unwrap(),
            MatK::identity(4)
        );
        let scaled = AlgebraElement::from_terms(ell, vec![(3, vec![2])]);
        assert_eq!(
            psi_apply(&scaled, &set.mats, 4, ell).unwrap(),
            set.mats[2].scale(k, 3)
        );
    }

    #[test]
    fn switches_preserve_the_substitution_image() {
        let ell = 5;
        let d = 4;
        let set = sample_matrices(d, 10, 13).unwrap();
        let relations = compute_relations(&set, ell).unwrap();
        assert!(
            !relations.is_empty(),
            "sampled set published no relations; pick another seed"
        );
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for trial in 0..20 {
            // Random element with words over the full generator range.
            let raw: Vec<(u64, Vec<usize>)> = (0..6)
                .map(|_| {
                    let len = rng.gen_range(0..=4);
                    (
                        rng.gen_range(1..ell),
                        (0..len).map(|_| rng.gen_range(0..set.len())).collect(),
                    )
                })
                .collect();
            let e = AlgebraElement::from_terms(ell, raw);
            let before = psi_apply(&e, &set.mats, d, ell).unwrap();
            let switched = apply_switches(&e, &relations, 25, ell, &mut rng);
            let after = psi_apply(&switched, &set.mats, d, ell).unwrap();
            assert_eq!(before, after, "trial {trial}");
            assert!(switched.degree() <= e.degree().max(1));
        }
    }

    #[test]
    fn switching_actually_rewrites_some_element() {
        // At least one trial must change the sparse form, otherwise the
        // rewriting is vacuous and the preservation test proves nothing.
        let ell = 5;
        let set = sample_matrices(4, 10, 13).unwrap();
        let relations = compute_relations(&set, ell).unwrap();
        let (i, j) = (relations[0].i, relations[0].j);
        let e = AlgebraElement::from_terms(ell, vec![(2, vec![i, j])]);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let switched = apply_switches(&e, &relations, 1, ell, &mut rng);
        assert_ne!(switched, e);
    }
}
