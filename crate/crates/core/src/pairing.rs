//! Pairings on hyperelliptic jacobians: Miller's ladder accumulated as
//! principal-function traces, the Weil-reciprocity pairing with its
//! infinity correction, and the product pairing across the coordinates of
//! descended torsion points.

use crate::descent::{rho, rho_inv};
use crate::field::{Basis, ExtensionField, FieldElement, PrimeField};
use crate::jacobian::{
    add, add_with_trace, eval_trace_at, scalar_mul_u64, FunctionTrace, HyperellipticCurve,
    MumfordDivisor,
};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A function `f` with `div(f) = ℓD`, kept as a product of addition traces
/// with integer exponents (the squaring ladder never expands the product).
/// At infinity `f ~ f_inf · y^inf_r · x^inf_s`.
#[derive(Clone, Debug)]
pub struct MillerFunction {
    pub factors: Vec<(FunctionTrace, i64)>,
    pub f_inf: FieldElement,
    pub inf_r: i64,
    pub inf_s: i64,
}

impl MillerFunction {
    pub fn one(kk: &ExtensionField) -> Self {
        MillerFunction {
            factors: vec![],
            f_inf: kk.one(),
            inf_r: 0,
            inf_s: 0,
        }
    }
}

/// Build `f` with `div(f) = ℓD` by the doubling ladder: doubling squares
/// the accumulated product (exponents double), each Cantor addition
/// contributes one more trace.
pub fn miller_build(
    curve: &HyperellipticCurve,
    d: &MumfordDivisor,
    ell: u64,
) -> Result<MillerFunction> {
    let kk = &curve.kk;
    if ell == 0 {
        return Err(Error::pre("torsion order must be positive"));
    }
    if d.is_zero() {
        return Ok(MillerFunction::one(kk));
    }
    let mut factors: Vec<(FunctionTrace, i64)> = vec![];
    let mut t = d.clone();
    let bits = 64 - ell.leading_zeros() as u64;
    for i in (0..bits - 1).rev() {
        for (_, e) in factors.iter_mut() {
            *e *= 2;
        }
        let (tn, h) = add_with_trace(curve, &t, &t);
        factors.push((h, 1));
        t = tn;
        if (ell >> i) & 1 == 1 {
            let (tn, h) = add_with_trace(curve, &t, d);
            factors.push((h, 1));
            t = tn;
        }
    }
    if !t.is_zero() {
        return Err(Error::NonTorsion { ell });
    }
    let mut f_inf = kk.one();
    let (mut inf_r, mut inf_s) = (0i64, 0i64);
    for (h, e) in &factors {
        f_inf = kk.mul(&f_inf, &kk.pow_i(&h.h_inf, *e));
        inf_r -= e * h.exp_a;
        inf_s += e * h.exp_c;
    }
    Ok(MillerFunction {
        factors,
        f_inf,
        inf_r,
        inf_s,
    })
}

/// Evaluate the represented function at the affine part of a divisor.
pub fn miller_eval(
    curve: &HyperellipticCurve,
    f: &MillerFunction,
    d: &MumfordDivisor,
) -> Result<FieldElement> {
    let kk = &curve.kk;
    let mut acc = kk.one();
    for (h, e) in &f.factors {
        let v = eval_trace_at(curve, h, d)?;
        acc = kk.mul(&acc, &kk.pow_i(&v, *e));
    }
    Ok(acc)
}

/// True when `d2` lies in the cyclic group generated by `d1` (then the
/// pairing is 1 and direct evaluation would hit its own zeros).
fn proportional(
    curve: &HyperellipticCurve,
    d1: &MumfordDivisor,
    d2: &MumfordDivisor,
    ell: u64,
) -> bool {
    if d1.is_zero() || d2.is_zero() {
        return true;
    }
    if ell <= 1024 {
        let mut acc = d1.clone();
        for _ in 1..ell {
            if &acc == d2 {
                return true;
            }
            acc = add(curve, &acc, d1);
        }
        false
    } else {
        d2 == d1 || d2 == &d1.neg(&curve.kk)
    }
}

/// The pairing `e(D1, D2) = (f1(D2⁺)/f2(D1⁺)) · α^{-r2} β^{r1}` where
/// `div(f_i) = ℓD_i`, `α = (f1)_∞`, `β = (f2)_∞` and `D_i = D_i⁺ - r_i ∞`.
/// Values land in μ_ℓ; proportional inputs short-circuit to 1.
pub fn weil_pairing(
    curve: &HyperellipticCurve,
    d1: &MumfordDivisor,
    d2: &MumfordDivisor,
    ell: u64,
) -> Result<FieldElement> {
    let kk = &curve.kk;
    if !scalar_mul_u64(curve, ell, d1).is_zero() || !scalar_mul_u64(curve, ell, d2).is_zero() {
        return Err(Error::NonTorsion { ell });
    }
    if proportional(curve, d1, d2, ell) {
        return Ok(kk.one());
    }
    let f1 = miller_build(curve, d1, ell)?;
    let f2 = miller_build(curve, d2, ell)?;
    let num = miller_eval(curve, &f1, d2)?;
    let den = miller_eval(curve, &f2, d1)?;
    let r1 = d1.weight() as i64;
    let r2 = d2.weight() as i64;
    let mut val = kk.mul(&num, &kk.inv(&den));
    val = kk.mul(&val, &kk.pow_i(&f1.f_inf, -r2));
    val = kk.mul(&val, &kk.pow_i(&f2.f_inf, r1));
    if kk.pow(&val, ell as u128) != kk.one() {
        return Err(Error::internal("pairing value does not lie in mu_ell"));
    }
    Ok(val)
}

/// `weil_pairing` with the support-collision retry: on DegenerateSupport,
/// replace the slots by random plane combinations `T1 = c·D1 + e·D2` and
/// `T2 = b·D1 + a·D2`. Bilinearity and alternation give
/// `e(T1, T2) = e(D1, D2)^(ca - eb)`, so any computable draw with an
/// invertible exponent recovers the value exactly. Mixing both inputs into
/// both slots matters: when `D1` and `D2` generate the same cyclic line,
/// no split of a single argument ever separates the supports.
pub fn weil_pairing_robust(
    curve: &HyperellipticCurve,
    d1: &MumfordDivisor,
    d2: &MumfordDivisor,
    ell: u64,
    rng: &mut impl Rng,
) -> Result<FieldElement> {
    let kk = &curve.kk;
    let first = weil_pairing(curve, d1, d2, ell);
    let err = match first {
        Err(Error::DegenerateSupport(e)) if ell >= 3 => Error::DegenerateSupport(e),
        other => return other,
    };
    let k = PrimeField::new(ell)?;
    for _ in 0..24 {
        let (c, e) = (rng.gen_range(0..ell), rng.gen_range(0..ell));
        let (a, b) = (rng.gen_range(0..ell), rng.gen_range(0..ell));
        let m = k.sub(k.mul(c, a), k.mul(e, b));
        if m == 0 {
            continue;
        }
        let t1 = add(
            curve,
            &scalar_mul_u64(curve, c, d1),
            &scalar_mul_u64(curve, e, d2),
        );
        let t2 = add(
            curve,
            &scalar_mul_u64(curve, b, d1),
            &scalar_mul_u64(curve, a, d2),
        );
        if let Ok(v) = weil_pairing(curve, &t1, &t2, ell) {
            return Ok(kk.pow(&v, k.inv(m) as u128));
        }
    }
    Err(err)
}

/// Brute-force discrete logarithm in μ_ℓ: the `n < ℓ` with `base^n = value`.
pub fn mu_dlog(
    kk: &ExtensionField,
    base: &FieldElement,
    value: &FieldElement,
    ell: u64,
) -> Result<u64> {
    if ell > 1 << 20 {
        return Err(Error::pre(format!(
            "discrete logs are brute-forced; ell = {ell} exceeds 2^20"
        )));
    }
    let mut acc = kk.one();
    for n in 0..ell {
        if &acc == value {
            return Ok(n);
        }
        acc = kk.mul(&acc, base);
    }
    Err(Error::SearchExhausted {
        what: "discrete log in mu_ell".into(),
        attempts: ell as usize,
    })
}

/// A pairing value tagged with the torsion order it divides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingValue {
    pub value: FieldElement,
    pub order_divides: u64,
}

impl PairingValue {
    pub fn new(kk: &ExtensionField, value: FieldElement, ell: u64) -> Result<Self> {
        let v = PairingValue {
            value,
            order_divides: ell,
        };
        if !v.validate(kk) {
            return Err(Error::pre("value is not an ell-th root of unity"));
        }
        Ok(v)
    }

    pub fn validate(&self, kk: &ExtensionField) -> bool {
        kk.pow(&self.value, self.order_divides as u128) == kk.one()
    }
}

/// Which of the two private bases a descended point refers to. The product
/// pairing accepts only (alpha, beta) ordered slots, so neither group can
/// be paired against itself through the published machinery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisSide {
    Alpha,
    Beta,
}

/// Coordinates of a descended torsion point: `2g` blocks of `d` values,
/// block `s` holding `ρ^{-1}` of the Galois-twisted `s`-th Mumford
/// coefficients of the component divisors. The all-zero vector is the zero
/// point. Only the basis holder can map back to component divisors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentPoint {
    pub side: BasisSide,
    pub coords: Vec<FieldElement>,
}

impl DescentPoint {
    pub fn is_zero(&self, kk: &ExtensionField) -> bool {
        self.coords.iter().all(|c| kk.is_zero(c))
    }
}

fn slot_value(dv: &MumfordDivisor, slot: usize, g: usize, kk: &ExtensionField) -> FieldElement {
    if slot < g {
        dv.a.coeff(kk, g - 1 - slot)
    } else {
        dv.b.coeff(kk, 2 * g - 1 - slot)
    }
}

/// Pack a tuple of `d` component divisors into coordinates: for each
/// Mumford slot `s`, the block is `ρ^{-1}((σ^i(slot_s(V_i)))_i)`. Component
/// `i` is recovered as `σ^{-i}` of the `i`-th ρ-image, so constant tuples
/// land on base-field coordinates (descents of single divisors).
pub fn components_to_point(
    curve: &HyperellipticCurve,
    basis: &Basis,
    side: BasisSide,
    comps: &[MumfordDivisor],
) -> Result<DescentPoint> {
    let kk = &curve.kk;
    let d = kk.degree();
    let g = curve.genus;
    if comps.len() != d {
        return Err(Error::pre(format!(
            "expected {d} component divisors, got {}",
            comps.len()
        )));
    }
    if comps.iter().all(|c| c.is_zero()) {
        return Ok(DescentPoint {
            side,
            coords: vec![kk.zero(); 2 * g * d],
        });
    }
    for c in comps {
        if c.weight() != g {
            return Err(Error::DegenerateSupport(format!(
                "descent coordinates need full-weight components (weight {g}); got weight {} — \
                 re-randomize upstream",
                c.weight()
            )));
        }
        if !c.is_valid(curve) {
            return Err(Error::pre("component is not a divisor on the curve"));
        }
    }
    let mut coords = Vec::with_capacity(2 * g * d);
    for slot in 0..2 * g {
        let w: Vec<FieldElement> = comps
            .iter()
            .enumerate()
            .map(|(i, c)| kk.frob(&slot_value(c, slot, g, kk), i))
            .collect();
        coords.extend(rho_inv(kk, basis, &w));
    }
    Ok(DescentPoint { side, coords })
}

/// Coordinates of the descent of a single divisor: the constant tuple.
pub fn divisor_to_point(
    curve: &HyperellipticCurve,
    basis: &Basis,
    side: BasisSide,
    dv: &MumfordDivisor,
) -> Result<DescentPoint> {
    let comps = vec![dv.clone(); curve.kk.degree()];
    components_to_point(curve, basis, side, &comps)
}

/// Unpack a descended point into its `d` component divisors: per slot the
/// block maps through ρ, and component `i` takes `σ^{-i}` of entry `i`.
pub fn torsion_components(
    curve: &HyperellipticCurve,
    basis: &Basis,
    point: &DescentPoint,
) -> Result<Vec<MumfordDivisor>> {
    let kk = &curve.kk;
    let d = kk.degree();
    let g = curve.genus;
    if point.coords.len() != 2 * g * d {
        return Err(Error::pre(format!(
            "expected {} coordinates, got {}",
            2 * g * d,
            point.coords.len()
        )));
    }
    if point.is_zero(kk) {
        return Ok(vec![MumfordDivisor::zero(kk); d]);
    }
    let mut slots = vec![vec![kk.zero(); 2 * g]; d];
    for slot in 0..2 * g {
        let v = &point.coords[slot * d..(slot + 1) * d];
        let w = rho(kk, basis, v);
        for i in 0..d {
            slots[i][slot] = kk.frob_inv(&w[i], i);
        }
    }
    let mut comps = Vec::with_capacity(d);
    for vals in slots {
        let mut ac = vec![kk.zero(); g + 1];
        ac[g] = kk.one();
        for j in 0..g {
            ac[g - 1 - j] = vals[j].clone();
        }
        let mut bc = vec![kk.zero(); g];
        for j in 0..g {
            bc[g - 1 - j] = vals[g + j].clone();
        }
        let dv = MumfordDivisor {
            a: crate::poly::KPoly::from_coeffs(kk, ac),
            b: crate::poly::KPoly::from_coeffs(kk, bc),
        };
        if !dv.is_reduced(curve) {
            return Err(Error::pre(
                "coordinates do not ascend to a reduced divisor on the curve",
            ));
        }
        comps.push(dv);
    }
    Ok(comps)
}

/// The product pairing `E(P, Q) = Π_i e(V′_i, V_i)` over the component
/// divisors of the two descended points. The left slot requires an
/// alpha-side point and the right a beta-side one.
pub fn extended_pairing(
    curve: &HyperellipticCurve,
    ell: u64,
    alpha_basis: &Basis,
    left: &DescentPoint,
    beta_basis: &Basis,
    right: &DescentPoint,
    rng: &mut impl Rng,
) -> Result<FieldElement> {
    if left.side != BasisSide::Alpha {
        return Err(Error::pre(
            "left pairing slot accepts only alpha-side points",
        ));
    }
    if right.side != BasisSide::Beta {
        return Err(Error::pre(
            "right pairing slot accepts only beta-side points",
        ));
    }
    let ca = torsion_components(curve, alpha_basis, left)?;
    let cb = torsion_components(curve, beta_basis, right)?;
    extended_pairing_components(curve, ell, &ca, &cb, rng)
}

/// The same product pairing on already-unpacked component tuples. This is the
/// working form inside the protocol, where intermediate tuples may contain
/// components of weight below `g` and so cannot round-trip through
/// coordinates.
pub fn extended_pairing_components(
    curve: &HyperellipticCurve,
    ell: u64,
    left: &[MumfordDivisor],
    right: &[MumfordDivisor],
    rng: &mut impl Rng,
) -> Result<FieldElement> {
    let kk = &curve.kk;
    if left.len() != right.len() {
        return Err(Error::pre("component tuples must have equal length"));
    }
    let mut acc = kk.one();
    for (va, vb) in left.iter().zip(right.iter()) {
        let e = weil_pairing_robust(curve, va, vb, ell, rng)?;
        acc = kk.mul(&acc, &e);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobian::{
        ell_torsion_point, frobenius_one_multiplicity, random_divisor, CurveContext,
    };
    use crate::poly::KPoly;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::sync::OnceLock;

    /// Search prime-field quintics `x^5 + c2 x^2 + c1 x + c0` for a curve
    /// whose jacobian supports ℓ-torsion with a nondegenerate pair.
    fn find_fixture(p: u64, d: usize, ell: u64) -> (CurveContext, MumfordDivisor, MumfordDivisor) {
        let kk = ExtensionField::make(p, d, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for c3 in 0..p {
            for c2 in 0..p {
                for c1 in 0..p {
                    for c0 in 1..p {
                        let f = KPoly::lift(&kk, &[c0, c1, c2, c3, 0, 1]);
                        let Ok(curve) = HyperellipticCurve::new(kk.clone(), f) else {
                            continue;
                        };
                        // Two independent rational ell-torsion points require the
                        // eigenvalue 1 of Frobenius to have multiplicity >= 2;
                        // skip curves failing that cheap zeta check. (Sufficiency
                        // is settled by the sampling below: unipotent Frobenius
                        // blocks can make the rational plane isotropic.)
                        let Ok(m) = frobenius_one_multiplicity(&curve, ell) else {
                            continue;
                        };
                        if m < 2 {
                            continue;
                        }
                        let Ok(ctx) = CurveContext::new(curve, ell) else {
                            continue;
                        };
                        for _ in 0..8 {
                            let Ok(a) = ell_torsion_point(&ctx, &mut rng) else {
                                break;
                            };
                            let Ok(b) = ell_torsion_point(&ctx, &mut rng) else {
                                break;
                            };
                            let Ok(z) = weil_pairing(&ctx.curve, &a, &b, ell) else {
                                continue;
                            };
                            if z != kk.one() {
                                return (ctx, a, b);
                            }
                        }
                    }
                }
            }
        }
        panic!("no pairing fixture for p = {p}, d = {d}, ell = {ell}");
    }

    type Fixture = (CurveContext, MumfordDivisor, MumfordDivisor);

    fn fix_71() -> &'static Fixture {
        static F: OnceLock<Fixture> = OnceLock::new();
        F.get_or_init(|| find_fixture(7, 1, 3))
    }

    fn fix_72() -> &'static Fixture {
        static F: OnceLock<Fixture> = OnceLock::new();
        F.get_or_init(|| find_fixture(7, 2, 3))
    }

    fn fix_74() -> &'static Fixture {
        static F: OnceLock<Fixture> = OnceLock::new();
        F.get_or_init(|| find_fixture(7, 4, 5))
    }

    #[test]
    fn miller_build_shapes() {
        let (ctx, a, _) = fix_71();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        // Zero divisor: empty product.
        let f = miller_build(curve, &MumfordDivisor::zero(kk), 3).unwrap();
        assert!(f.factors.is_empty());
        assert_eq!(f.f_inf, kk.one());
        // Factor count bound: 2·⌊log2 ℓ⌋ + popcount(ℓ).
        let f = miller_build(curve, a, 3).unwrap();
        assert!(f.factors.len() <= 2 + 2);
        let (ctx4, a4, _) = fix_74();
        let f4 = miller_build(&ctx4.curve, a4, 5).unwrap();
        assert!(f4.factors.len() <= 2 * 2 + 2);
        // Non-torsion input rejected.
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let d = loop {
            let d = random_divisor(curve, &mut rng);
            if !scalar_mul_u64(curve, 3, &d).is_zero() {
                break d;
            }
        };
        assert!(matches!(
            miller_build(curve, &d, 3),
            Err(Error::NonTorsion { ell: 3 })
        ));
    }

    #[test]
    fn miller_order_two_divisor_single_trace() {
        // y^2 = x^5 + 1 over F_7 has the 2-torsion point (6, 0).
        let kk = ExtensionField::make(7, 1, 0).unwrap();
        let curve =
            HyperellipticCurve::new(kk.clone(), KPoly::lift(&kk, &[1, 0, 0, 0, 0, 1])).unwrap();
        let d = MumfordDivisor::from_point(&curve, &kk.embed(6), &kk.zero()).unwrap();
        assert!(scalar_mul_u64(&curve, 2, &d).is_zero());
        let f = miller_build(&curve, &d, 2).unwrap();
        assert_eq!(f.factors.len(), 1, "one doubling trace");
        assert_eq!(f.factors[0].1, 1);
    }

    #[test]
    fn miller_infinity_exponents_match_valuation() {
        // div(f) = ℓD forces ν∞(f) = -ℓ·weight(D), i.e. with
        // f ~ f_inf y^r x^s: (2g+1)·r + 2·s = ℓ·weight(D).
        for (fix, ell) in [(fix_71(), 3u64), (fix_74(), 5)] {
            let (ctx, a, b) = fix;
            let g = ctx.curve.genus as i64;
            for d in [a, b] {
                let f = miller_build(&ctx.curve, d, ell).unwrap();
                assert_eq!(
                    (2 * g + 1) * f.inf_r + 2 * f.inf_s,
                    ell as i64 * d.weight() as i64
                );
            }
        }
    }

    #[test]
    fn miller_eval_is_multiplicative() {
        let (ctx, a, b) = fix_71();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        let f1 = miller_build(curve, a, 3).unwrap();
        let f2 = miller_build(curve, b, 3).unwrap();
        let mut concat = f1.clone();
        concat.factors.extend(f2.factors.iter().cloned());
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mut checked = 0;
        for _ in 0..200 {
            let d = random_divisor(curve, &mut rng);
            let (Ok(v1), Ok(v2), Ok(vc)) = (
                miller_eval(curve, &f1, &d),
                miller_eval(curve, &f2, &d),
                miller_eval(curve, &concat, &d),
            ) else {
                continue;
            };
            assert_eq!(kk.mul(&v1, &v2), vc);
            checked += 1;
        }
        assert!(checked >= 30);
        // Empty product evaluates to 1.
        let d = random_divisor(curve, &mut rng);
        assert_eq!(
            miller_eval(curve, &MillerFunction::one(kk), &d).unwrap(),
            kk.one()
        );
    }

    #[test]
    fn weil_pairing_diagonal_and_skew() {
        let (ctx, a, b) = fix_71();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        assert_eq!(weil_pairing(curve, a, a, 3).unwrap(), kk.one());
        assert_eq!(weil_pairing(curve, b, b, 3).unwrap(), kk.one());
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 100 {
            let Ok(t1) = ell_torsion_point(ctx, &mut rng) else {
                continue;
            };
            let Ok(t2) = ell_torsion_point(ctx, &mut rng) else {
                continue;
            };
            let (Ok(e12), Ok(e21)) = (
                weil_pairing(curve, &t1, &t2, 3),
                weil_pairing(curve, &t2, &t1, 3),
            ) else {
                continue;
            };
            assert_eq!(kk.mul(&e12, &e21), kk.one(), "skew-symmetry");
            assert_eq!(kk.pow(&e12, 3), kk.one(), "mu_ell membership");
            checked += 1;
        }
    }

    #[test]
    fn weil_pairing_bilinear_exhaustive() {
        for (fix, ell) in [(fix_71(), 3u64), (fix_74(), 5)] {
            let (ctx, a, b) = fix;
            let curve = &ctx.curve;
            let kk = &curve.kk;
            let mut rng = ChaCha12Rng::seed_from_u64(4);
            let base = weil_pairing_robust(curve, a, b, ell, &mut rng).unwrap();
            assert_ne!(base, kk.one(), "fixture pair is nondegenerate");
            for m in 0..ell {
                let ma = scalar_mul_u64(curve, m, a);
                let mb = scalar_mul_u64(curve, m, b);
                let em = kk.pow(&base, m as u128);
                let left = weil_pairing_robust(curve, &ma, b, ell, &mut rng).unwrap();
                let right = weil_pairing_robust(curve, a, &mb, ell, &mut rng).unwrap();
                assert_eq!(left, em, "left slot, m = {m}");
                assert_eq!(right, em, "right slot, m = {m}");
            }
        }
    }

    #[test]
    fn weil_pairing_split_identity_and_retry() {
        // The retry contract computes e(D1, mD2)·e(D1, (1-m)D2); that
        // product must reproduce the direct value for every m.
        let (ctx, a, b) = fix_71();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        let ell = 3u64;
        let direct = weil_pairing(curve, a, b, ell).unwrap();
        for m in 2..ell {
            let ta = scalar_mul_u64(curve, m, b);
            let tb = scalar_mul_u64(curve, ell + 1 - m, b);
            let (Ok(x), Ok(y)) = (
                weil_pairing(curve, a, &ta, ell),
                weil_pairing(curve, a, &tb, ell),
            ) else {
                continue;
            };
            assert_eq!(kk.mul(&x, &y), direct, "split at m = {m}");
        }
        // The robust wrapper agrees with the plain pairing when it succeeds.
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        assert_eq!(
            weil_pairing_robust(curve, a, b, ell, &mut rng).unwrap(),
            direct
        );
    }

    #[test]
    fn weil_pairing_galois_equivariant() {
        let (ctx, a, b) = fix_72();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        let twist = |d: &MumfordDivisor, s: usize| MumfordDivisor {
            a: d.a.twist(kk, s),
            b: d.b.twist(kk, s),
        };
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let mut checked = 0;
        let mut pairs: Vec<(MumfordDivisor, MumfordDivisor)> = vec![(a.clone(), b.clone())];
        while pairs.len() < 12 {
            let (Ok(t1), Ok(t2)) = (
                ell_torsion_point(ctx, &mut rng),
                ell_torsion_point(ctx, &mut rng),
            ) else {
                continue;
            };
            pairs.push((t1, t2));
        }
        for (t1, t2) in &pairs {
            for s in 1..kk.degree() {
                let (Ok(base), Ok(tw)) = (
                    weil_pairing(curve, t1, t2, 3),
                    weil_pairing(curve, &twist(t1, s), &twist(t2, s), 3),
                ) else {
                    continue;
                };
                assert_eq!(tw, kk.frob(&base, s), "twist by sigma^{s}");
                checked += 1;
            }
        }
        assert!(checked >= 6);
    }

    #[test]
    fn mu_dlog_roundtrip() {
        let (ctx, a, b) = fix_74();
        let kk = &ctx.curve.kk;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let zeta = weil_pairing_robust(&ctx.curve, a, b, 5, &mut rng).unwrap();
        for n in 0..5u64 {
            let v = kk.pow(&zeta, n as u128);
            assert_eq!(mu_dlog(kk, &zeta, &v, 5).unwrap(), n);
        }
        assert!(mu_dlog(kk, &zeta, &kk.embed(3), 5).is_err());
        assert!(mu_dlog(kk, &zeta, &zeta, 2 << 20).is_err());
        // Tagged values validate exactly for roots of unity.
        assert!(PairingValue::new(kk, zeta, 5).is_ok());
        assert!(PairingValue::new(kk, kk.embed(3), 5).is_err());
    }

    #[test]
    fn descent_point_roundtrip_and_zero() {
        let (ctx, a, b) = fix_72();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        let d = kk.degree();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let basis = Basis::random(kk, &mut rng);
        // Random full-weight component tuples round-trip exactly.
        let mut done = 0;
        while done < 20 {
            let comps: Vec<MumfordDivisor> = (0..d)
                .map(|_| {
                    let mut m = rng.gen_range(1..3u64);
                    loop {
                        let t = scalar_mul_u64(curve, m, a);
                        let t = add(curve, &t, &scalar_mul_u64(curve, rng.gen_range(0..3), b));
                        if t.weight() == curve.genus {
                            return t;
                        }
                        m = rng.gen_range(1..3);
                    }
                })
                .collect();
            let p = components_to_point(curve, &basis, BasisSide::Beta, &comps).unwrap();
            assert_eq!(p.coords.len(), 2 * curve.genus * d);
            let back = torsion_components(curve, &basis, &p).unwrap();
            assert_eq!(back, comps);
            let again = components_to_point(curve, &basis, BasisSide::Beta, &back).unwrap();
            assert_eq!(again, p);
            done += 1;
        }
        // The zero point maps to d zero divisors and back.
        let z = components_to_point(
            curve,
            &basis,
            BasisSide::Beta,
            &vec![MumfordDivisor::zero(kk); d],
        )
        .unwrap();
        assert!(z.is_zero(kk));
        assert!(torsion_components(curve, &basis, &z)
            .unwrap()
            .iter()
            .all(|c| c.is_zero()));
        // Constant tuples are descents of single divisors: base-field coords.
        let p = divisor_to_point(curve, &basis, BasisSide::Beta, a).unwrap();
        assert!(p.coords.iter().all(|c| kk.as_base(c).is_some()));
        let back = torsion_components(curve, &basis, &p).unwrap();
        assert!(back.iter().all(|c| c == a));
        // Weight-deficient components are refused.
        let thin = MumfordDivisor::from_point(
            curve,
            &curve.random_point(&mut rng).0.clone(),
            &curve.random_point(&mut rng).1.clone(),
        );
        if let Ok(thin) = thin {
            let bad = vec![thin; d];
            assert!(matches!(
                components_to_point(curve, &basis, BasisSide::Beta, &bad),
                Err(Error::DegenerateSupport(_))
            ));
        }
    }

    #[test]
    fn extended_pairing_constant_tuple_is_power() {
        let (ctx, a, b) = fix_72();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        let d = kk.degree();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let ba = Basis::random(kk, &mut rng);
        let bb = Basis::random(kk, &mut rng);
        let pa = divisor_to_point(curve, &ba, BasisSide::Alpha, a).unwrap();
        let pb = divisor_to_point(curve, &bb, BasisSide::Beta, b).unwrap();
        let e = weil_pairing_robust(curve, a, b, 3, &mut rng).unwrap();
        let big = extended_pairing(curve, 3, &ba, &pa, &bb, &pb, &mut rng).unwrap();
        assert_eq!(big, kk.pow(&e, d as u128));
        assert_ne!(big, kk.one(), "d = {d} is coprime to ell = 3");
    }

    #[test]
    fn extended_pairing_slot_tags_enforced() {
        let (ctx, a, b) = fix_72();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let ba = Basis::random(kk, &mut rng);
        let bb = Basis::random(kk, &mut rng);
        let pa = divisor_to_point(curve, &ba, BasisSide::Alpha, a).unwrap();
        let pb = divisor_to_point(curve, &bb, BasisSide::Beta, b).unwrap();
        assert!(extended_pairing(curve, 3, &ba, &pb, &bb, &pb, &mut rng).is_err());
        assert!(extended_pairing(curve, 3, &ba, &pa, &bb, &pa, &mut rng).is_err());
    }

    #[test]
    fn extended_pairing_bilinear_on_random_tuples() {
        let (ctx, a, b) = fix_72();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        let d = kk.degree();
        let ell = 3u64;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let ba = Basis::random(kk, &mut rng);
        let bb = Basis::random(kk, &mut rng);
        // Random (generally incoherent) component tuples x_i·a + y_i·b.
        let sample_comps = |rng: &mut ChaCha12Rng| -> Vec<MumfordDivisor> {
            loop {
                let comps: Vec<MumfordDivisor> = (0..d)
                    .map(|_| {
                        let x = rng.gen_range(0..ell);
                        let y = rng.gen_range(0..ell);
                        add(
                            curve,
                            &scalar_mul_u64(curve, x, a),
                            &scalar_mul_u64(curve, y, b),
                        )
                    })
                    .collect();
                if comps.iter().all(|c| c.weight() == curve.genus) {
                    return comps;
                }
            }
        };
        let mut done = 0;
        while done < 10 {
            let ca = sample_comps(&mut rng);
            let cb = sample_comps(&mut rng);
            let pa = components_to_point(curve, &ba, BasisSide::Alpha, &ca).unwrap();
            let pb = components_to_point(curve, &bb, BasisSide::Beta, &cb).unwrap();
            let base = extended_pairing(curve, ell, &ba, &pa, &bb, &pb, &mut rng).unwrap();
            // Component-product oracle.
            let mut oracle = kk.one();
            for i in 0..d {
                let e = weil_pairing_robust(curve, &ca[i], &cb[i], ell, &mut rng).unwrap();
                oracle = kk.mul(&oracle, &e);
            }
            assert_eq!(base, oracle);
            // Scalar action in each slot.
            for m in [0u64, 2] {
                let cam: Vec<_> = ca.iter().map(|c| scalar_mul_u64(curve, m, c)).collect();
                if cam
                    .iter()
                    .any(|c| !c.is_zero() && c.weight() != curve.genus)
                {
                    continue;
                }
                let pam = components_to_point(curve, &ba, BasisSide::Alpha, &cam).unwrap();
                let got = extended_pairing(curve, ell, &ba, &pam, &bb, &pb, &mut rng).unwrap();
                assert_eq!(got, kk.pow(&base, m as u128), "left scalar {m}");
            }
            done += 1;
        }
    }

    #[test]
    fn extended_pairing_two_evaluation_paths_agree() {
        // Path 1: twisted components (σ^{-i} after ρ), paired directly.
        // Path 2: raw ρ images paired on the conjugate curves, then each
        // factor untwisted by σ^{-i}. Galois equivariance makes them equal.
        let (ctx, a, b) = fix_72();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        let d = kk.degree();
        let ell = 3u64;
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let ba = Basis::random(kk, &mut rng);
        let bb = Basis::random(kk, &mut rng);
        let mk = |rng: &mut ChaCha12Rng, t1: &MumfordDivisor, t2: &MumfordDivisor| loop {
            let comps: Vec<MumfordDivisor> = (0..d)
                .map(|_| {
                    add(
                        curve,
                        &scalar_mul_u64(curve, rng.gen_range(0..ell), t1),
                        &scalar_mul_u64(curve, rng.gen_range(0..ell), t2),
                    )
                })
                .collect();
            if comps.iter().all(|c| c.weight() == curve.genus) {
                return comps;
            }
        };
        for _ in 0..5 {
            let ca = mk(&mut rng, a, b);
            let cb = mk(&mut rng, a, b);
            let pa = components_to_point(curve, &ba, BasisSide::Alpha, &ca).unwrap();
            let pb = components_to_point(curve, &bb, BasisSide::Beta, &cb).unwrap();
            let path1 = extended_pairing(curve, ell, &ba, &pa, &bb, &pb, &mut rng).unwrap();
            // Path 2: rebuild the raw ρ images by re-twisting the components.
            let mut path2 = kk.one();
            for i in 0..d {
                let wa = MumfordDivisor {
                    a: ca[i].a.twist(kk, i),
                    b: ca[i].b.twist(kk, i),
                };
                let wb = MumfordDivisor {
                    a: cb[i].a.twist(kk, i),
                    b: cb[i].b.twist(kk, i),
                };
                let e = weil_pairing_robust(curve, &wa, &wb, ell, &mut rng).unwrap();
                path2 = kk.mul(&path2, &kk.frob_inv(&e, i));
            }
            assert_eq!(path1, path2);
        }
    }

    #[test]
    fn descent_point_serde_roundtrip() {
        let (ctx, a, _) = fix_72();
        let curve = &ctx.curve;
        let kk = &curve.kk;
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let basis = Basis::random(kk, &mut rng);
        let p = divisor_to_point(curve, &basis, BasisSide::Alpha, a).unwrap();
        let js = serde_json::to_string(&p).unwrap();
        let back: DescentPoint = serde_json::from_str(&js).unwrap();
        assert_eq!(back, p);
        assert!(js.contains("alpha"));
    }
}
