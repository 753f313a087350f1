//! Structured endomorphism matrices acting on descended torsion.
//!
//! The published generator maps act on a `d`-component divisor tuple through
//! square 0/1 matrices with exactly two entries per row: row `i` with entries
//! in columns `i1, i2` computes `W_i = V_{i1} + V_{i2}`. Every row must share
//! its pair of diagonal offsets `(i - i1, i - i2)` with at least one other
//! row — enforced with exact integer differences, not modulo `d` — so that no
//! published coordinate map isolates a single column of the private
//! conversion tables. The same matrices are the trapdoor substitution
//! targets: algebra words become matrix products over `F_ℓ`.

use crate::field::{MatK, PrimeField};
use crate::jacobian::{add, scalar_mul_u64, HyperellipticCurve, MumfordDivisor};
use crate::pairing::{components_to_point, torsion_components, BasisSide, DescentPoint};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// The generator matrices: `mats.len()` square 0/1 matrices of size `d`,
/// each satisfying [`validate_matrix`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndoMatrixSet {
    pub d: usize,
    pub mats: Vec<MatK>,
}

impl EndoMatrixSet {
    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// Validate every matrix in the set.
    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.mats.iter().enumerate() {
            validate_matrix(self.d, m)
                .map_err(|e| Error::pre(format!("matrix {i} invalid: {e}")))?;
        }
        Ok(())
    }
}

/// The two column positions of row `i`, increasing. Errors on entries
/// outside {0, 1} or a row count other than two.
fn row_columns(m: &MatK, i: usize) -> Result<(usize, usize)> {
    let mut cols = Vec::with_capacity(2);
    for j in 0..m.cols {
        match m[(i, j)] {
            0 => {}
            1 => cols.push(j),
            e => {
                return Err(Error::pre(format!("row {i} has entry {e}, want 0/1")));
            }
        }
    }
    if cols.len() != 2 {
        return Err(Error::pre(format!(
            "row {i} has {} entries, want exactly two",
            cols.len()
        )));
    }
    Ok((cols[0], cols[1]))
}

/// Sorted diagonal-offset pair of row `i`: `i - j` over its two columns.
fn row_offsets(m: &MatK, i: usize) -> Result<(i64, i64)> {
    let (j1, j2) = row_columns(m, i)?;
    let (o1, o2) = (i as i64 - j1 as i64, i as i64 - j2 as i64);
    Ok((o1.max(o2), o1.min(o2)))
}

/// Check one generator matrix: `d × d`, 0/1 entries, exactly two entries per
/// row, and every row's offset pair repeated on some other row.
pub fn validate_matrix(d: usize, m: &MatK) -> Result<()> {
    if m.rows != d || m.cols != d {
        return Err(Error::pre(format!(
            "matrix is {}x{}, want {d}x{d}",
            m.rows, m.cols
        )));
    }
    let offs: Vec<(i64, i64)> = (0..d).map(|i| row_offsets(m, i)).collect::<Result<_>>()?;
    for (i, o) in offs.iter().enumerate() {
        if !offs.iter().enumerate().any(|(j, oj)| j != i && oj == o) {
            return Err(Error::pre(format!(
                "row {i} has a unique offset pattern {o:?}"
            )));
        }
    }
    Ok(())
}

/// One random valid matrix: partition the rows into groups of two (one group
/// of three when `d` is odd), give each group a shared pair of distinct
/// diagonal offsets, and place the entries. A group with rows `R` admits
/// offsets exactly in `[max(R) - d + 1, min(R)]`, so the partition is
/// resampled until every group spans at most `d - 2`.
fn sample_one(d: usize, rng: &mut impl Rng) -> MatK {
    loop {
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(rng);
        let mut groups: Vec<Vec<usize>> = Vec::with_capacity(d / 2);
        let mut rest = order.as_slice();
        while !rest.is_empty() {
            // Absorb three rows at the end when d is odd.
            let take = if rest.len() == 3 { 3 } else { 2 };
            groups.push(rest[..take].to_vec());
            rest = &rest[take..];
        }
        let ok = groups.iter().all(|g| {
            let lo = *g.iter().min().unwrap();
            let hi = *g.iter().max().unwrap();
            hi - lo <= d - 2
        });
        if !ok {
            continue;
        }
        let mut rows = vec![vec![0u64; d]; d];
        for g in &groups {
            let lo = *g.iter().min().unwrap() as i64;
            let hi = *g.iter().max().unwrap() as i64;
            // Shared-offset interval for the whole group.
            let (a, b) = (hi - d as i64 + 1, lo);
            let o1 = rng.gen_range(a..=b);
            let o2 = loop {
                let o = rng.gen_range(a..=b);
                if o != o1 {
                    break o;
                }
            };
            for &i in g {
                rows[i][(i as i64 - o1) as usize] = 1;
                rows[i][(i as i64 - o2) as usize] = 1;
            }
        }
        return MatK::from_rows(rows);
    }
}

/// Sample `n1` generator matrices. Offsets are paired with exact integer
/// equality, which needs `d >= 4` to give every group a two-element offset
/// interval under every partition shape.
pub fn sample_matrices(d: usize, n1: usize, seed: u64) -> Result<EndoMatrixSet> {
    if d < 4 {
        return Err(Error::pre(format!(
            "generator sampling needs d >= 4 (offset intervals collapse below), got {d}"
        )));
    }
    if n1 == 0 {
        return Err(Error::pre("need at least one generator matrix"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x6d61_7472_6963_6573);
    let mats: Vec<MatK> = (0..n1).map(|_| sample_one(d, &mut rng)).collect();
    let set = EndoMatrixSet { d, mats };
    set.validate()
        .map_err(|e| Error::internal(format!("sampler produced an invalid matrix: {e}")))?;
    Ok(set)
}

/// Act on a component tuple with a general `F_ℓ` matrix under jacobian
/// arithmetic: output slot `r` is `Σ_j m[r][j] · comps[j]`.
pub fn matrix_tuple_apply(
    curve: &HyperellipticCurve,
    m: &MatK,
    comps: &[MumfordDivisor],
) -> Result<Vec<MumfordDivisor>> {
    if m.cols != comps.len() || m.rows != m.cols {
        return Err(Error::pre(format!(
            "matrix is {}x{}, tuple has {} components",
            m.rows,
            m.cols,
            comps.len()
        )));
    }
    let kk = &curve.kk;
    let mut out = Vec::with_capacity(m.rows);
    for r in 0..m.rows {
        let mut acc = MumfordDivisor::zero(kk);
        for (j, c) in comps.iter().enumerate() {
            let t = match m[(r, j)] {
                0 => continue,
                1 => c.clone(),
                e => scalar_mul_u64(curve, e, c),
            };
            acc = add(curve, &acc, &t);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Apply a matrix endomorphism to a descended point: unpack through the
/// basis, act with [`matrix_tuple_apply`], repack through the same basis.
/// General `F_ℓ` matrices are accepted (trapdoor-side use); the repack
/// requires every output component of full weight or all zero, so callers
/// feeding adversarial matrices see `DegenerateSupport` rather than wrong
/// coordinates.
pub fn phi_matrix_apply(
    curve: &HyperellipticCurve,
    basis: &crate::field::Basis,
    side: BasisSide,
    m: &MatK,
    point: &DescentPoint,
) -> Result<DescentPoint> {
    let comps = torsion_components(curve, basis, point)?;
    let out = matrix_tuple_apply(curve, m, &comps)?;
    components_to_point(curve, basis, side, &out)
}

/// The `2d × n1` system whose kernel is the annihilator search space: column
/// `i` stacks `M_i·v1` above `M_i·v2` over `F_ℓ`.
pub fn mu_system(set: &EndoMatrixSet, ell: u64, v1: &[u64], v2: &[u64]) -> Result<MatK> {
    let k = PrimeField::new(ell)?;
    let d = set.d;
    if v1.len() != d || v2.len() != d {
        return Err(Error::pre(format!(
            "coordinate vectors must have length {d}, got {} and {}",
            v1.len(),
            v2.len()
        )));
    }
    let n1 = set.len();
    let mut rows = vec![vec![0u64; n1]; 2 * d];
    for (i, m) in set.mats.iter().enumerate() {
        let a = m.matvec(k, v1);
        let b = m.matvec(k, v2);
        for r in 0..d {
            rows[r][i] = a[r];
            rows[d + r][i] = b[r];
        }
    }
    Ok(MatK::from_rows(rows))
}

/// Coefficients `z` with `Σ z_i M_i v1 = Σ z_i M_i v2 = 0 (mod ℓ)`, i.e. the
/// combination `Σ z_i φ_i` annihilates the published point. Requires the
/// underdetermined regime `n1 > 2d`, which guarantees a nonzero solution.
pub fn find_mu(set: &EndoMatrixSet, ell: u64, v1: &[u64], v2: &[u64]) -> Result<Vec<u64>> {
    if set.len() <= 2 * set.d {
        return Err(Error::pre(format!(
            "annihilator search needs more generators than equations: n1 = {} <= 2d = {}",
            set.len(),
            2 * set.d
        )));
    }
    let sys = mu_system(set, ell, v1, v2)?;
    let k = PrimeField::new(ell)?;
    let basis = sys.nullspace(k);
    basis
        .into_iter()
        .next()
        .ok_or_else(|| Error::internal("underdetermined system with empty nullspace"))
}

/// Nondegeneracy certificate for the combination pairing against the
/// published point: coefficients `c` with the matrix `Σ c_i M_i` sending
/// `(v1, v2)` to `(x′, y′)`, and the exponent `Σ_j (x′_j v2_j − y′_j v1_j)`
/// mod ℓ. The product pairing of the image tuple against the original tuple
/// is `e(a,b)` raised to exactly this exponent, so a nonzero exponent is the
/// published-pair nondegeneracy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaCertificate {
    pub coeffs: Vec<u64>,
    pub xprime: Vec<u64>,
    pub yprime: Vec<u64>,
    pub exponent: u64,
}

/// Draw random coefficients until the pairing exponent is nonzero mod ℓ.
/// Failure of a draw is the single multiplicative condition `exponent = 0`,
/// so the expected number of tries is O(1); the bound exists to surface
/// degenerate matrix sets instead of spinning.
pub fn find_lambda(
    set: &EndoMatrixSet,
    ell: u64,
    v1: &[u64],
    v2: &[u64],
    rng: &mut impl Rng,
    max_tries: usize,
) -> Result<LambdaCertificate> {
    let k = PrimeField::new(ell)?;
    let d = set.d;
    if v1.len() != d || v2.len() != d {
        return Err(Error::pre(format!(
            "coordinate vectors must have length {d}, got {} and {}",
            v1.len(),
            v2.len()
        )));
    }
    for _ in 0..max_tries {
        let coeffs: Vec<u64> = (0..set.len()).map(|_| k.rand(rng)).collect();
        if let Some(cert) = lambda_certificate(set, ell, v1, v2, &coeffs)? {
            return Ok(cert);
        }
    }
    Err(Error::SearchExhausted {
        what: "nondegenerate generator combination (every draw paired to 1)".into(),
        attempts: max_tries,
    })
}

/// Evaluate one coefficient draw: `None` when the exponent vanishes mod ℓ.
pub fn lambda_certificate(
    set: &EndoMatrixSet,
    ell: u64,
    v1: &[u64],
    v2: &[u64],
    coeffs: &[u64],
) -> Result<Option<LambdaCertificate>> {
    let k = PrimeField::new(ell)?;
    let d = set.d;
    if coeffs.len() != set.len() {
        return Err(Error::pre(format!(
            "expected {} coefficients, got {}",
            set.len(),
            coeffs.len()
        )));
    }
    let mut mc = MatK::zero(d, d);
    for (c, m) in coeffs.iter().zip(&set.mats) {
        if *c != 0 {
            mc = mc.add(k, &m.scale(k, *c));
        }
    }
    let xprime = mc.matvec(k, v1);
    let yprime = mc.matvec(k, v2);
    let mut exp = 0u64;
    for j in 0..d {
        exp = k.add(exp, k.sub(k.mul(xprime[j], v2[j]), k.mul(yprime[j], v1[j])));
    }
    if exp == 0 {
        return Ok(None);
    }
    Ok(Some(LambdaCertificate {
        coeffs: coeffs.to_vec(),
        xprime,
        yprime,
        exponent: exp,
    }))
}

/// A published rewriting rule `z_i z_j = r · z_j z_i + Σ_k l_k z_k`, valid
/// because the corresponding matrix identity holds exactly over `F_ℓ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub i: usize,
    pub j: usize,
    pub r: u64,
    #[serde(rename = "L")]
    pub l: Vec<u64>,
}

/// Solve `M_i M_j = r M_j M_i + Σ_k l_k M_k` for every ordered pair
/// `i ≠ j`; pairs with no solution are omitted rather than reported, since
/// rewriting simply has fewer rules available there.
pub fn compute_relations(set: &EndoMatrixSet, ell: u64) -> Result<Vec<Relation>> {
    let k = PrimeField::new(ell)?;
    let d = set.d;
    let n1 = set.len();
    let mut out = Vec::new();
    for i in 0..n1 {
        for j in 0..n1 {
            if i == j {
                continue;
            }
            let lhs = set.mats[i].mul(k, &set.mats[j]);
            let rev = set.mats[j].mul(k, &set.mats[i]);
            // Columns: vec(M_j M_i), then vec(M_k) for each k.
            let mut sys = MatK::zero(d * d, n1 + 1);
            for e in 0..d * d {
                sys[(e, 0)] = rev.a[e];
                for (c, m) in set.mats.iter().enumerate() {
                    sys[(e, c + 1)] = m.a[e];
                }
            }
            if let Some(sol) = sys.solve(k, &lhs.a) {
                out.push(Relation {
                    i,
                    j,
                    r: sol[0],
                    l: sol[1..].to_vec(),
                });
            }
        }
    }
    Ok(out)
}

/// Check one published relation against the matrices.
pub fn relation_holds(set: &EndoMatrixSet, ell: u64, rel: &Relation) -> bool {
    let Ok(k) = PrimeField::new(ell) else {
        return false;
    };
    if rel.i >= set.len() || rel.j >= set.len() || rel.l.len() != set.len() {
        return false;
    }
    let lhs = set.mats[rel.i].mul(k, &set.mats[rel.j]);
    let mut rhs = set.mats[rel.j].mul(k, &set.mats[rel.i]).scale(k, rel.r);
    for (c, m) in rel.l.iter().zip(&set.mats) {
        if *c != 0 {
            rhs = rhs.add(k, &m.scale(k, *c));
        }
    }
    lhs == rhs
}
