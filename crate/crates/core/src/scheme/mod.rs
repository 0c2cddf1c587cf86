//! The six-phase CP-ABE proxy re-encryption scheme.
//!
//! Group placement on a Type-3 pairing: ciphertext-side components live in
//! G1, key-side components in G2, and `g`, `h`, `W_i`, `W_b` are published on
//! both sides as [`DualElem`]s.

mod dem;
mod reencrypt;
mod same_domain;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::groups::{Backend, DualElem, GroupError};
use crate::policy::{AccessMatrix, Attribute, PolicyError, ShareVector};

pub use dem::{dem_open, dem_seal, kdf, SymmetricKey, DEM_TAG_LEN};
pub use reencrypt::{
    decrypt_reencrypted, issue_crossdomain_key, reencrypt_corrected, reencrypt_corrected_with,
    reencrypt_paper, reencrypt_paper_with, rekeygen_paper, rekeygen_paper_with, ReencRandomness,
    ReencTrace, RekeyRandomness,
};
pub use same_domain::{
    decrypt, encrypt, encrypt_traced, encrypt_with, keygen, keygen_retained, keygen_with,
    leaf_factors, setup, setup_with,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("attribute {0} appears more than once in the universe")]
    DuplicateAttribute(String),
    #[error("attribute {0} is not in the public key universe")]
    UnknownAttribute(String),
    #[error("key has no usable protection component")]
    MissingProtectionKey,
    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),
    #[error("target public key has no G1 mirror")]
    TargetKeyNotDual,
    #[error("secret key material does not match its public counterpart")]
    KeyMismatch,
    #[error("retained key randomness does not cover the key's attributes")]
    MissingRetainedSecrets,
    #[error("paper-mode re-encrypted ciphertexts are not decryptable")]
    UnsupportedMode,
    #[error("integrity check failed")]
    IntegrityError,
}

impl SchemeError {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeError::Group(e) => e.name(),
            SchemeError::Policy(e) => e.name(),
            SchemeError::DuplicateAttribute(_) => "DuplicateAttribute",
            SchemeError::UnknownAttribute(_) => "UnknownAttribute",
            SchemeError::MissingProtectionKey => "MissingProtectionKey",
            SchemeError::MalformedCiphertext(_) => "MalformedCiphertext",
            SchemeError::TargetKeyNotDual => "TargetKeyNotDual",
            SchemeError::KeyMismatch => "KeyMismatch",
            SchemeError::MissingRetainedSecrets => "MissingRetainedSecrets",
            SchemeError::UnsupportedMode => "UnsupportedMode",
            SchemeError::IntegrityError => "IntegrityError",
        }
    }
}

/// `sk = {m, n}`. Held by the proxy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterSecretKey<B: Backend> {
    pub m: B::Scalar,
    pub n: B::Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey<B: Backend> {
    pub backend: B,
    pub g: DualElem<B>,
    /// `g^n` on both sides.
    pub h: DualElem<B>,
    /// `e(g, g)^m`.
    pub egg_m: B::Gt,
    pub w: BTreeMap<Attribute, DualElem<B>>,
    pub wb: DualElem<B>,
}

impl<B: Backend> PublicKey<B> {
    pub fn universe(&self) -> impl Iterator<Item = &Attribute> {
        self.w.keys()
    }

    pub(crate) fn w_of(&self, a: &Attribute) -> Result<&DualElem<B>, SchemeError> {
        self.w
            .get(a)
            .ok_or_else(|| SchemeError::UnknownAttribute(a.to_string()))
    }
}

/// A `(g^x, g^k * W^x)` pair in G2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair<B: Backend> {
    pub first: B::G2,
    pub second: B::G2,
}

/// `SK_A = {SK1, SK2, SK3}`. SK2 is optional only so that stripped keys
/// can be represented; keygen always fills it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserSecretKey<B: Backend> {
    pub sk1: B::G2,
    pub sk2: Option<KeyPair<B>>,
    pub sk3: BTreeMap<Attribute, KeyPair<B>>,
}

impl<B: Backend> UserSecretKey<B> {
    pub fn attrs(&self) -> BTreeSet<Attribute> {
        self.sk3.keys().cloned().collect()
    }
}

/// Key randomness `k, kb, k_i`. Kept by the data owner for ReKeyGen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeygenSecrets<B: Backend> {
    pub k: B::Scalar,
    pub kb: B::Scalar,
    pub k_i: BTreeMap<Attribute, B::Scalar>,
}

/// `(g1^s, W_1^s)` ciphertext row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtRow<B: Backend> {
    pub b: B::G1,
    pub c: B::G1,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext<B: Backend> {
    /// `K * e(g, g)^(m v)`.
    pub a1: B::Gt,
    /// `g1^(n v)`.
    pub a2: B::G1,
    /// Protection row.
    pub cb: CtRow<B>,
    /// Attribute rows keyed by matrix row.
    pub rows: BTreeMap<usize, CtRow<B>>,
    pub matrix: AccessMatrix,
}

/// Randomness behind a ciphertext.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptTrace<S> {
    pub v: S,
    pub shares: ShareVector<S>,
}

/// The data requester's public key `g^beta'`, optionally with its G1 mirror.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetKey<B: Backend> {
    pub g2: B::G2,
    pub g1: Option<B::G1>,
}

impl<B: Backend> TargetKey<B> {
    pub fn from_secret(backend: &B, beta: &B::Scalar) -> Self {
        let d = DualElem::from_exponent(backend, beta);
        TargetKey {
            g2: d.g2,
            g1: Some(d.g1),
        }
    }

    pub fn without_mirror(&self) -> Self {
        TargetKey {
            g2: self.g2.clone(),
            g1: None,
        }
    }
}

/// `rk_{A -> A'}`. The G2 mirrors of rk1/rk2 make the paper-mode pairings
/// well-typed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReKey<B: Backend> {
    pub rk1: B::G1,
    pub rk2: B::G1,
    pub rk3: BTreeMap<Attribute, B::G1>,
    pub rk1_g2: B::G2,
    pub rk2_g2: B::G2,
    pub target: B::G2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReencMode {
    Paper,
    Corrected,
}

impl ReencMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReencMode::Paper => "paper",
            ReencMode::Corrected => "corrected",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(ReencMode::Paper),
            "corrected" => Some(ReencMode::Corrected),
            _ => None,
        }
    }
}

/// `(g1^s * H(rho)^-r, g2^r)` re-encrypted row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReRow<B: Backend> {
    pub b: B::G1,
    pub c: B::G2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReEncryptedCiphertext<B: Backend> {
    pub a1p: B::Gt,
    pub a2p: B::G1,
    pub cb: ReRow<B>,
    pub rows: BTreeMap<usize, ReRow<B>>,
    pub matrix: AccessMatrix,
    pub mode: ReencMode,
}

/// Data-requester credential for re-encrypted ciphertexts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossDomainUserKey<B: Backend> {
    pub backend: B,
    /// `g2^beta'`.
    pub k0: B::G2,
    /// `H(a)^beta'` per attribute.
    pub d: BTreeMap<Attribute, B::G1>,
    /// `H("b")^beta'`, present in every key.
    pub db: B::G1,
}

impl<B: Backend> CrossDomainUserKey<B> {
    pub fn attrs(&self) -> BTreeSet<Attribute> {
        self.d.keys().cloned().collect()
    }
}

fn check_known<B: Backend>(pk: &PublicKey<B>, matrix: &AccessMatrix) -> Result<(), SchemeError> {
    matrix
        .attribute_rows()
        .try_for_each(|r| pk.w_of(matrix.rho(r)).map(|_| ()))
}

#[cfg(test)]
mod tests;
