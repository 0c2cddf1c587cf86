//! ReKeyGen, ReEncrypt (paper and corrected modes), cross-domain keys and
//! decryption of re-encrypted ciphertexts.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;

use super::{
    Ciphertext, CrossDomainUserKey, KeygenSecrets, MasterSecretKey, PublicKey,
    ReEncryptedCiphertext, ReKey, ReRow, ReencMode, SchemeError, SymmetricKey, TargetKey,
    UserSecretKey,
};
use crate::groups::{Backend, FieldElem, GroupElem};
use crate::policy::{
    build_matrix, generate_shares_with, recon_coefficients, satisfying_rows, AccessMatrix,
    Attribute, PolicyNode, ShareVector,
};

/// `alpha, mu, t` for ReKeyGen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RekeyRandomness<S> {
    pub alpha: S,
    pub mu: S,
    pub t: S,
}

pub fn rekeygen_paper<B: Backend, R: RngCore + ?Sized>(
    usk: &UserSecretKey<B>,
    secrets: &KeygenSecrets<B>,
    target: &TargetKey<B>,
    pk: &PublicKey<B>,
    rng: &mut R,
) -> Result<ReKey<B>, SchemeError> {
    let b = &pk.backend;
    let rand = RekeyRandomness {
        alpha: b.random_scalar(rng),
        mu: b.random_scalar(rng),
        t: b.random_scalar(rng),
    };
    rekeygen_paper_with(usk, secrets, target, pk, &rand)
}

pub fn rekeygen_paper_with<B: Backend>(
    usk: &UserSecretKey<B>,
    secrets: &KeygenSecrets<B>,
    target: &TargetKey<B>,
    pk: &PublicKey<B>,
    rand: &RekeyRandomness<B::Scalar>,
) -> Result<ReKey<B>, SchemeError> {
    let b = &pk.backend;
    let target_g1 = target.g1.as_ref().ok_or(SchemeError::TargetKeyNotDual)?;
    let (g1, g2) = (b.g1(), b.g2());
    let ga1 = g1.exp(&rand.alpha);
    let ga2 = g2.exp(&rand.alpha);

    let mut rk3 = BTreeMap::new();
    for (a, pair) in &usk.sk3 {
        let k_i = secrets
            .k_i
            .get(a)
            .ok_or(SchemeError::MissingRetainedSecrets)?;
        if g2.exp(k_i) != pair.first {
            return Err(SchemeError::KeyMismatch);
        }
        rk3.insert(a.clone(), g1.exp(&(*k_i * rand.t)));
    }
    Ok(ReKey {
        rk1: ga1.op(target_g1),
        rk2: ga1.op(&pk.wb.g1.exp(&rand.mu)),
        rk3,
        rk1_g2: ga2.op(&target.g2),
        rk2_g2: ga2.op(&pk.wb.g2.exp(&rand.mu)),
        target: target.g2.clone(),
    })
}

/// `u' = (v', y'_2, ...)` and one `r'_i` per row of M'.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReencRandomness<S> {
    pub u: Vec<S>,
    pub r: Vec<S>,
}

impl<S> ReencRandomness<S> {
    pub fn sample<B, R>(backend: &B, policy: &PolicyNode, rng: &mut R) -> Result<Self, SchemeError>
    where
        B: Backend<Scalar = S>,
        R: RngCore + ?Sized,
    {
        let m = build_matrix(policy)?;
        Ok(ReencRandomness {
            u: (0..m.num_cols())
                .map(|_| backend.random_scalar(rng))
                .collect(),
            r: (0..m.num_rows())
                .map(|_| backend.random_scalar(rng))
                .collect(),
        })
    }
}

/// Randomness behind a re-encrypted ciphertext.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReencTrace<S> {
    pub v: S,
    pub shares: ShareVector<S>,
    pub r: Vec<S>,
}

struct Body<B: Backend> {
    a2p: B::G1,
    cb: ReRow<B>,
    rows: BTreeMap<usize, ReRow<B>>,
    matrix: AccessMatrix,
    trace: ReencTrace<B::Scalar>,
}

// CT'_2 and CT'_3: B'_i = g1^v'_i * H(rho'(i))^-r'_i, C'_i = g2^r'_i.
fn reencrypt_body<B: Backend>(
    b: &B,
    policy: &PolicyNode,
    rand: &ReencRandomness<B::Scalar>,
) -> Result<Body<B>, SchemeError> {
    let matrix = build_matrix(policy)?;
    assert_eq!(rand.r.len(), matrix.num_rows(), "one r' per row");
    let shares = generate_shares_with(b, &matrix, &rand.u);
    let (g1, g2) = (b.g1(), b.g2());
    let mut cb = None;
    let mut rows = BTreeMap::new();
    for (i, (v_i, r_i)) in shares.shares.iter().zip(&rand.r).enumerate() {
        let h = b.hash_to_g1(matrix.rho(i).as_str().as_bytes())?;
        let row = ReRow {
            b: g1.exp(v_i).op(&h.exp(r_i).inverse()),
            c: g2.exp(r_i),
        };
        if i == matrix.protection_row() {
            cb = Some(row);
        } else {
            rows.insert(i, row);
        }
    }
    let v = shares.secret;
    Ok(Body {
        a2p: g1.exp(&v),
        cb: cb.expect("matrix has a protection row"),
        rows,
        matrix,
        trace: ReencTrace {
            v,
            shares,
            r: rand.r.clone(),
        },
    })
}

pub fn reencrypt_paper<B: Backend, R: RngCore + ?Sized>(
    pk: &PublicKey<B>,
    rk: &ReKey<B>,
    ct: &Ciphertext<B>,
    policy2: &PolicyNode,
    rng: &mut R,
) -> Result<ReEncryptedCiphertext<B>, SchemeError> {
    let rand = ReencRandomness::sample(&pk.backend, policy2, rng)?;
    reencrypt_paper_with(pk, rk, ct, policy2, &rand).map(|(rct, _)| rct)
}

/// Paper-mode ReEncrypt.
///
/// `A'_1 = A1 * (g^beta')^s' * e(g^beta, rk3) * e(A2, rk1) / (e(A2, rk2) * e(A2, g^beta'))`
/// read as: `g^beta` and `g^beta'` are the target key, `s'` is `v'`, the
/// pairing with rk3 is a product over its entries, and G1-only factors are
/// lifted by pairing. The result does not decrypt.
pub fn reencrypt_paper_with<B: Backend>(
    pk: &PublicKey<B>,
    rk: &ReKey<B>,
    ct: &Ciphertext<B>,
    policy2: &PolicyNode,
    rand: &ReencRandomness<B::Scalar>,
) -> Result<(ReEncryptedCiphertext<B>, ReencTrace<B::Scalar>), SchemeError> {
    let b = &pk.backend;
    let body = reencrypt_body(b, policy2, rand)?;
    let mut num = ct.a1.op(&b.pair(&body.a2p, &rk.target)?);
    for rk3 in rk.rk3.values() {
        num = num.op(&b.pair(rk3, &rk.target)?);
    }
    num = num.op(&b.pair(&ct.a2, &rk.rk1_g2)?);
    let den = b.pair(&ct.a2, &rk.rk2_g2)?.op(&b.pair(&ct.a2, &rk.target)?);
    Ok(finish(num.div(&den), body, ReencMode::Paper))
}

fn finish<B: Backend>(
    a1p: B::Gt,
    body: Body<B>,
    mode: ReencMode,
) -> (ReEncryptedCiphertext<B>, ReencTrace<B::Scalar>) {
    (
        ReEncryptedCiphertext {
            a1p,
            a2p: body.a2p,
            cb: body.cb,
            rows: body.rows,
            matrix: body.matrix,
            mode,
        },
        body.trace,
    )
}

pub fn reencrypt_corrected<B: Backend, R: RngCore + ?Sized>(
    msk: &MasterSecretKey<B>,
    pk: &PublicKey<B>,
    target: &TargetKey<B>,
    ct: &Ciphertext<B>,
    policy2: &PolicyNode,
    rng: &mut R,
) -> Result<ReEncryptedCiphertext<B>, SchemeError> {
    let rand = ReencRandomness::sample(&pk.backend, policy2, rng)?;
    reencrypt_corrected_with(msk, pk, target, ct, policy2, &rand).map(|(rct, _)| rct)
}

/// Corrected ReEncrypt: the proxy strips `e(g,g)^(mv)` with msk and
/// re-blinds `K` under `e(g1, PK_A')^v'`.
pub fn reencrypt_corrected_with<B: Backend>(
    msk: &MasterSecretKey<B>,
    pk: &PublicKey<B>,
    target: &TargetKey<B>,
    ct: &Ciphertext<B>,
    policy2: &PolicyNode,
    rand: &ReencRandomness<B::Scalar>,
) -> Result<(ReEncryptedCiphertext<B>, ReencTrace<B::Scalar>), SchemeError> {
    let b = &pk.backend;
    if pk.h.g2 != b.g2().exp(&msk.n) || pk.egg_m != b.gt().exp(&msk.m) {
        return Err(SchemeError::KeyMismatch);
    }
    let n_inv = msk.n.invert().ok_or(SchemeError::KeyMismatch)?;
    let egg_mv = b.pair(&ct.a2, &b.g2())?.exp(&(msk.m * n_inv));
    let k = ct.a1.div(&egg_mv);
    let body = reencrypt_body(b, policy2, rand)?;
    let a1p = k.op(&b.pair(&body.a2p, &target.g2)?);
    Ok(finish(a1p, body, ReencMode::Corrected))
}

/// `K0 = g2^beta'`, `D[a] = H(a)^beta'` for each attribute, and `H("b")^beta'`.
pub fn issue_crossdomain_key<B: Backend>(
    backend: &B,
    beta: &B::Scalar,
    attrs: &BTreeSet<Attribute>,
) -> Result<CrossDomainUserKey<B>, SchemeError> {
    let hashed = |a: &Attribute| -> Result<B::G1, SchemeError> {
        Ok(backend.hash_to_g1(a.as_str().as_bytes())?.exp(beta))
    };
    let d = attrs
        .iter()
        .map(|a| Ok((a.clone(), hashed(a)?)))
        .collect::<Result<_, SchemeError>>()?;
    Ok(CrossDomainUserKey {
        backend: backend.clone(),
        k0: backend.g2().exp(beta),
        d,
        db: hashed(&Attribute::protection())?,
    })
}

pub fn decrypt_reencrypted<B: Backend>(
    cdk: &CrossDomainUserKey<B>,
    rct: &ReEncryptedCiphertext<B>,
) -> Result<SymmetricKey<B>, SchemeError> {
    if rct.mode != ReencMode::Corrected {
        return Err(SchemeError::UnsupportedMode);
    }
    let expected: Vec<usize> = rct.matrix.attribute_rows().collect();
    if !rct.rows.keys().copied().eq(expected) {
        return Err(SchemeError::MalformedCiphertext(
            "row components do not match the access matrix".into(),
        ));
    }
    let b = &cdk.backend;
    let rows = satisfying_rows(&rct.matrix, &cdk.attrs(), true)?;
    let plan = recon_coefficients(b, &rct.matrix, &rows.into_iter().collect())?;
    let mut f_w = b.gt().exp(&b.scalar_from_u64(0));
    for (r, omega) in &plan.coeffs {
        let (row, d) = if *r == rct.matrix.protection_row() {
            (&rct.cb, &cdk.db)
        } else {
            (&rct.rows[r], &cdk.d[rct.matrix.rho(*r)])
        };
        let f = b.pair(&row.b, &cdk.k0)?.op(&b.pair(d, &row.c)?);
        f_w = f_w.op(&f.exp(omega));
    }
    Ok(SymmetricKey {
        k: rct.a1p.div(&f_w),
    })
}
