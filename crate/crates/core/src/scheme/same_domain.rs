//! Setup, KeyGen, Encrypt and Decrypt.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;

use super::{
    check_known, Ciphertext, CtRow, EncryptTrace, KeyPair, KeygenSecrets, MasterSecretKey,
    PublicKey, SchemeError, SymmetricKey, UserSecretKey,
};
use crate::groups::{Backend, DualElem, FieldElem, GroupElem};
use crate::policy::{
    build_matrix, generate_shares_with, recon_coefficients, satisfying_rows, Attribute,
    PolicyError, PolicyNode,
};

pub fn setup<B: Backend, R: RngCore + ?Sized>(
    backend: B,
    universe: &[Attribute],
    rng: &mut R,
) -> Result<(MasterSecretKey<B>, PublicKey<B>), SchemeError> {
    let msk = MasterSecretKey {
        m: backend.random_scalar(rng),
        n: backend.random_scalar(rng),
    };
    setup_with(backend, universe, msk, rng)
}

/// Setup with a caller-chosen `(m, n)`; `p_i` and `p_b` are still drawn from
/// `rng`.
pub fn setup_with<B: Backend, R: RngCore + ?Sized>(
    backend: B,
    universe: &[Attribute],
    msk: MasterSecretKey<B>,
    rng: &mut R,
) -> Result<(MasterSecretKey<B>, PublicKey<B>), SchemeError> {
    let mut w = BTreeMap::new();
    for a in universe {
        if a.is_protection() {
            return Err(PolicyError::ReservedAttribute(a.to_string()).into());
        }
        let p_i = backend.random_scalar(rng);
        if w.insert(a.clone(), DualElem::from_exponent(&backend, &p_i))
            .is_some()
        {
            return Err(SchemeError::DuplicateAttribute(a.to_string()));
        }
    }
    let p_b = backend.random_scalar(rng);
    let pk = PublicKey {
        g: DualElem::generator(&backend),
        h: DualElem::from_exponent(&backend, &msk.n),
        egg_m: backend.gt().exp(&msk.m),
        w,
        wb: DualElem::from_exponent(&backend, &p_b),
        backend,
    };
    Ok((msk, pk))
}

pub fn keygen<B: Backend, R: RngCore + ?Sized>(
    msk: &MasterSecretKey<B>,
    pk: &PublicKey<B>,
    attrs: &BTreeSet<Attribute>,
    rng: &mut R,
) -> Result<UserSecretKey<B>, SchemeError> {
    keygen_retained(msk, pk, attrs, rng).map(|(usk, _)| usk)
}

/// KeyGen that also hands back `k, kb, k_i`.
pub fn keygen_retained<B: Backend, R: RngCore + ?Sized>(
    msk: &MasterSecretKey<B>,
    pk: &PublicKey<B>,
    attrs: &BTreeSet<Attribute>,
    rng: &mut R,
) -> Result<(UserSecretKey<B>, KeygenSecrets<B>), SchemeError> {
    let b = &pk.backend;
    let secrets = KeygenSecrets {
        k: b.random_scalar(rng),
        kb: b.random_scalar(rng),
        k_i: attrs
            .iter()
            .map(|a| (a.clone(), b.random_scalar(rng)))
            .collect(),
    };
    let usk = keygen_with(msk, pk, attrs, &secrets)?;
    Ok((usk, secrets))
}

pub fn keygen_with<B: Backend>(
    msk: &MasterSecretKey<B>,
    pk: &PublicKey<B>,
    attrs: &BTreeSet<Attribute>,
    secrets: &KeygenSecrets<B>,
) -> Result<UserSecretKey<B>, SchemeError> {
    let b = &pk.backend;
    let n_inv = msk.n.invert().ok_or(SchemeError::KeyMismatch)?;
    let g2 = b.g2();
    let gk = g2.exp(&secrets.k);
    let sk1 = g2.exp(&((msk.m + secrets.k) * n_inv));
    let sk2 = KeyPair {
        first: g2.exp(&secrets.kb),
        second: gk.op(&pk.wb.g2.exp(&secrets.kb)),
    };
    let mut sk3 = BTreeMap::new();
    for a in attrs {
        let w = pk.w_of(a)?;
        let k_i = secrets
            .k_i
            .get(a)
            .ok_or(SchemeError::MissingRetainedSecrets)?;
        sk3.insert(
            a.clone(),
            KeyPair {
                first: g2.exp(k_i),
                second: gk.op(&w.g2.exp(k_i)),
            },
        );
    }
    Ok(UserSecretKey {
        sk1,
        sk2: Some(sk2),
        sk3,
    })
}

pub fn encrypt<B: Backend, R: RngCore + ?Sized>(
    pk: &PublicKey<B>,
    policy: &PolicyNode,
    key: &SymmetricKey<B>,
    rng: &mut R,
) -> Result<Ciphertext<B>, SchemeError> {
    encrypt_traced(pk, policy, key, rng).map(|(ct, _)| ct)
}

/// Encrypt, also returning `v` and the row shares.
pub fn encrypt_traced<B: Backend, R: RngCore + ?Sized>(
    pk: &PublicKey<B>,
    policy: &PolicyNode,
    key: &SymmetricKey<B>,
    rng: &mut R,
) -> Result<(Ciphertext<B>, EncryptTrace<B::Scalar>), SchemeError> {
    let cols = build_matrix(policy)?.num_cols();
    let u: Vec<B::Scalar> = (0..cols).map(|_| pk.backend.random_scalar(rng)).collect();
    encrypt_with(pk, policy, key, &u)
}

/// Encrypt with an explicit `u = (v, y_2, ..., y_c)`.
///
/// # Panics
/// If `u` does not have one entry per matrix column.
pub fn encrypt_with<B: Backend>(
    pk: &PublicKey<B>,
    policy: &PolicyNode,
    key: &SymmetricKey<B>,
    u: &[B::Scalar],
) -> Result<(Ciphertext<B>, EncryptTrace<B::Scalar>), SchemeError> {
    let b = &pk.backend;
    let matrix = build_matrix(policy)?;
    check_known(pk, &matrix)?;
    let shares = generate_shares_with(b, &matrix, u);
    let v = shares.secret;
    let g1 = b.g1();

    let prot = matrix.protection_row();
    let vb = &shares.shares[prot];
    let cb = CtRow {
        b: g1.exp(vb),
        c: pk.wb.g1.exp(vb),
    };
    let mut rows = BTreeMap::new();
    for r in matrix.attribute_rows() {
        let w = pk.w_of(matrix.rho(r))?;
        let v_i = &shares.shares[r];
        rows.insert(
            r,
            CtRow {
                b: g1.exp(v_i),
                c: w.g1.exp(v_i),
            },
        );
    }
    let ct = Ciphertext {
        a1: key.k.op(&pk.egg_m.exp(&v)),
        a2: pk.h.g1.exp(&v),
        cb,
        rows,
        matrix,
    };
    Ok((ct, EncryptTrace { v, shares }))
}

fn check_shape<B: Backend>(ct: &Ciphertext<B>) -> Result<(), SchemeError> {
    let expected: Vec<usize> = ct.matrix.attribute_rows().collect();
    if !ct.rows.keys().copied().eq(expected) {
        return Err(SchemeError::MalformedCiphertext(
            "row components do not match the access matrix".into(),
        ));
    }
    Ok(())
}

fn row_factor<B: Backend>(
    backend: &B,
    row: &CtRow<B>,
    key: &KeyPair<B>,
) -> Result<B::Gt, SchemeError> {
    let num = backend.pair(&row.b, &key.second)?;
    let den = backend.pair(&row.c, &key.first)?;
    Ok(num.div(&den))
}

/// `F_i = e(B_i, SK3_i[1]) / e(C_i, SK3_i[0])` for every row the key can
/// open, including the protection row when SK2 is present.
pub fn leaf_factors<B: Backend>(
    pk: &PublicKey<B>,
    usk: &UserSecretKey<B>,
    ct: &Ciphertext<B>,
) -> Result<BTreeMap<usize, B::Gt>, SchemeError> {
    check_shape(ct)?;
    let b = &pk.backend;
    let mut out = BTreeMap::new();
    if let Some(sk2) = &usk.sk2 {
        out.insert(ct.matrix.protection_row(), row_factor(b, &ct.cb, sk2)?);
    }
    for (r, row) in &ct.rows {
        if let Some(key) = usk.sk3.get(ct.matrix.rho(*r)) {
            out.insert(*r, row_factor(b, row, key)?);
        }
    }
    Ok(out)
}

pub fn decrypt<B: Backend>(
    pk: &PublicKey<B>,
    usk: &UserSecretKey<B>,
    ct: &Ciphertext<B>,
) -> Result<SymmetricKey<B>, SchemeError> {
    check_shape(ct)?;
    let Some(sk2) = &usk.sk2 else {
        return Err(SchemeError::MissingProtectionKey);
    };
    let b = &pk.backend;
    let rows = satisfying_rows(&ct.matrix, &usk.attrs(), true)?;
    let plan = recon_coefficients(b, &ct.matrix, &rows.into_iter().collect())?;

    let mut f_w = b.gt().exp(&b.scalar_from_u64(0));
    for (r, omega) in &plan.coeffs {
        let f = if *r == ct.matrix.protection_row() {
            row_factor(b, &ct.cb, sk2)?
        } else {
            let key = &usk.sk3[ct.matrix.rho(*r)];
            row_factor(b, &ct.rows[r], key)?
        };
        f_w = f_w.op(&f.exp(omega));
    }
    let blind = b.pair(&ct.a2, &usk.sk1)?;
    Ok(SymmetricKey {
        k: ct.a1.op(&f_w).div(&blind),
    })
}
