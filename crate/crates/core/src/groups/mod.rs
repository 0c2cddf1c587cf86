//! Pairing-group abstraction.
//!
//! Two interchangeable backends implement [`Backend`]:
//!
//! * [`Bls12Backend`], an asymmetric (Type-3) pairing over BLS12-381;
//! * [`DebugBackend`], which represents every element by its discrete log
//!   modulo a small prime. Pairing multiplies exponents, so algebraic
//!   identities can be checked by plain modular arithmetic.
//!
//! Group operations are written multiplicatively (`op`, `exp`, `inverse`)
//! for all three groups, matching the usual notation for pairing-based
//! schemes.
//!
//! Every element has a canonical byte encoding:
//! `tag (1 byte) || backend id (1 byte) || big-endian payload`.

mod curve;
mod debug;

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigUint;
use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use curve::Bls12Backend;
pub use debug::{DebugBackend, DebugG1, DebugG2, DebugGt, DebugScalar, DEFAULT_DEBUG_PRIME};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("elements come from different backends")]
    BackendMismatch,
    #[error("hash label must not be empty")]
    EmptyLabel,
    #[error("message must not be empty")]
    EmptyMessage,
    #[error("decode error at byte {position}: {reason}")]
    DecodeError { position: usize, reason: String },
    #[error("invalid debug modulus {0}: must be a prime in [3, 2^32)")]
    InvalidModulus(u64),
}

impl GroupError {
    pub fn name(&self) -> &'static str {
        match self {
            GroupError::BackendMismatch => "BackendMismatch",
            GroupError::EmptyLabel => "EmptyLabel",
            GroupError::EmptyMessage => "EmptyMessage",
            GroupError::DecodeError { .. } => "DecodeError",
            GroupError::InvalidModulus(_) => "InvalidModulus",
        }
    }

    pub(crate) fn decode(position: usize, reason: impl Into<String>) -> Self {
        GroupError::DecodeError {
            position,
            reason: reason.into(),
        }
    }
}

/// Backend registry id, the second byte of every element encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BackendId {
    Debug = 0x00,
    Bls12_381 = 0x01,
}

impl BackendId {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x00 => Some(BackendId::Debug),
            0x01 => Some(BackendId::Bls12_381),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BackendId::Debug => "debug",
            BackendId::Bls12_381 => "bls12-381",
        }
    }
}

/// Type tag, the first byte of every element encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElemTag {
    G1 = 0x01,
    G2 = 0x02,
    Gt = 0x03,
    Scalar = 0x04,
}

/// An element of Z_p.
pub trait FieldElem:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn is_zero(&self) -> bool;
    /// Multiplicative inverse; `None` for zero.
    fn invert(&self) -> Option<Self>;
}

/// A cyclic group of prime order, written multiplicatively.
pub trait GroupElem<S>: Clone + Eq + Debug + Send + Sync + 'static {
    fn op(&self, other: &Self) -> Self;
    fn exp(&self, s: &S) -> Self;
    fn inverse(&self) -> Self;
    fn is_identity(&self) -> bool;

    fn div(&self, other: &Self) -> Self {
        self.op(&other.inverse())
    }
}

/// A bilinear group `e: G1 x G2 -> GT` of prime order `p`.
pub trait Backend: Clone + Debug + PartialEq + Send + Sync + 'static {
    type Scalar: FieldElem;
    type G1: GroupElem<Self::Scalar>;
    type G2: GroupElem<Self::Scalar>;
    type Gt: GroupElem<Self::Scalar>;

    fn id(&self) -> BackendId;
    /// The group order `p`.
    fn order(&self) -> BigUint;

    fn scalar_from_u64(&self, v: u64) -> Self::Scalar;
    /// Reduces `v` modulo `p`.
    fn scalar_from_biguint(&self, v: &BigUint) -> Self::Scalar;
    fn scalar_to_biguint(&self, s: &Self::Scalar) -> BigUint;
    /// Uniform sample from Z_p^* (never zero).
    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar;

    fn g1(&self) -> Self::G1;
    fn g2(&self) -> Self::G2;
    /// `e(g1, g2)`.
    fn gt(&self) -> Self::Gt;

    fn pair(&self, a: &Self::G1, b: &Self::G2) -> Result<Self::Gt, GroupError>;

    /// Hash a nonempty label onto G1.
    fn hash_to_g1(&self, label: &[u8]) -> Result<Self::G1, GroupError>;

    fn scalar_payload(&self, s: &Self::Scalar) -> Vec<u8>;
    fn g1_payload(&self, e: &Self::G1) -> Vec<u8>;
    fn g2_payload(&self, e: &Self::G2) -> Vec<u8>;
    fn gt_payload(&self, e: &Self::Gt) -> Vec<u8>;

    // `offset` is the absolute position of `payload` in the full encoding,
    // used only for error reporting.
    fn scalar_from_payload(
        &self,
        payload: &[u8],
        offset: usize,
    ) -> Result<Self::Scalar, GroupError>;
    fn g1_from_payload(&self, payload: &[u8], offset: usize) -> Result<Self::G1, GroupError>;
    fn g2_from_payload(&self, payload: &[u8], offset: usize) -> Result<Self::G2, GroupError>;
    fn gt_from_payload(&self, payload: &[u8], offset: usize) -> Result<Self::Gt, GroupError>;

    fn scalar_one(&self) -> Self::Scalar {
        self.scalar_from_u64(1)
    }

    fn scalar_pow(&self, base: &Self::Scalar, mut e: u64) -> Self::Scalar {
        let mut acc = self.scalar_one();
        let mut sq = *base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * sq;
            }
            sq = sq * sq;
            e >>= 1;
        }
        acc
    }

    /// Deterministic map into `[1, p)`: `1 + (SHA-256(data) mod (p - 1))`.
    fn hash_to_scalar(&self, data: &[u8]) -> Self::Scalar {
        let digest = BigUint::from_bytes_be(&Sha256::digest(data));
        let reduced = digest % (self.order() - 1u32) + 1u32;
        self.scalar_from_biguint(&reduced)
    }

    /// Messages live in GT: `encode(msg) = e(g1, g2)^{hash_to_scalar(msg)}`.
    fn encode_message(&self, msg: &[u8]) -> Result<Self::Gt, GroupError> {
        if msg.is_empty() {
            return Err(GroupError::EmptyMessage);
        }
        Ok(self.gt().exp(&self.hash_to_scalar(msg)))
    }

    /// Uniform element of GT.
    fn random_gt<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Gt {
        self.gt().exp(&self.random_scalar(rng))
    }

    fn encode_scalar(&self, s: &Self::Scalar) -> Vec<u8> {
        frame(ElemTag::Scalar, self.id(), self.scalar_payload(s))
    }
    fn encode_g1(&self, e: &Self::G1) -> Vec<u8> {
        frame(ElemTag::G1, self.id(), self.g1_payload(e))
    }
    fn encode_g2(&self, e: &Self::G2) -> Vec<u8> {
        frame(ElemTag::G2, self.id(), self.g2_payload(e))
    }
    fn encode_gt(&self, e: &Self::Gt) -> Vec<u8> {
        frame(ElemTag::Gt, self.id(), self.gt_payload(e))
    }

    fn decode_scalar(&self, bytes: &[u8]) -> Result<Self::Scalar, GroupError> {
        let payload = unframe(bytes, ElemTag::Scalar, self.id())?;
        self.scalar_from_payload(payload, 2)
    }
    fn decode_g1(&self, bytes: &[u8]) -> Result<Self::G1, GroupError> {
        let payload = unframe(bytes, ElemTag::G1, self.id())?;
        self.g1_from_payload(payload, 2)
    }
    fn decode_g2(&self, bytes: &[u8]) -> Result<Self::G2, GroupError> {
        let payload = unframe(bytes, ElemTag::G2, self.id())?;
        self.g2_from_payload(payload, 2)
    }
    fn decode_gt(&self, bytes: &[u8]) -> Result<Self::Gt, GroupError> {
        let payload = unframe(bytes, ElemTag::Gt, self.id())?;
        self.gt_from_payload(payload, 2)
    }
}

fn frame(tag: ElemTag, backend: BackendId, payload: Vec<u8>) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() + 2);
    out.push(tag as u8);
    out.push(backend as u8);
    out.extend_from_slice(&payload);
    out
}

fn unframe(bytes: &[u8], tag: ElemTag, backend: BackendId) -> Result<&[u8], GroupError> {
    match bytes.first() {
        None => return Err(GroupError::decode(0, "empty buffer")),
        Some(&t) if t != tag as u8 => {
            return Err(GroupError::decode(
                0,
                format!("expected tag {:#04x}, found {t:#04x}", tag as u8),
            ))
        }
        _ => {}
    }
    match bytes.get(1) {
        None => Err(GroupError::decode(1, "missing backend id")),
        Some(&b) if b == backend as u8 => Ok(&bytes[2..]),
        Some(&b) if BackendId::from_byte(b).is_some() => Err(GroupError::BackendMismatch),
        Some(&b) => Err(GroupError::decode(
            1,
            format!("unknown backend id {b:#04x}"),
        )),
    }
}

pub(crate) fn expect_len(payload: &[u8], len: usize, offset: usize) -> Result<(), GroupError> {
    if payload.len() < len {
        Err(GroupError::decode(
            offset + payload.len(),
            format!(
                "truncated payload: expected {len} bytes, found {}",
                payload.len()
            ),
        ))
    } else if payload.len() > len {
        Err(GroupError::decode(offset + len, "trailing bytes"))
    } else {
        Ok(())
    }
}

/// An element with the same discrete log published in both source groups.
///
/// Used for every public value that has to appear on either side of a
/// pairing (the generator, `h`, the attribute bases).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualElem<B: Backend> {
    pub g1: B::G1,
    pub g2: B::G2,
}

impl<B: Backend> DualElem<B> {
    pub fn generator(backend: &B) -> Self {
        DualElem {
            g1: backend.g1(),
            g2: backend.g2(),
        }
    }

    /// `(g1^s, g2^s)`.
    pub fn from_exponent(backend: &B, s: &B::Scalar) -> Self {
        DualElem {
            g1: backend.g1().exp(s),
            g2: backend.g2().exp(s),
        }
    }

    pub fn exp(&self, s: &B::Scalar) -> Self {
        DualElem {
            g1: self.g1.exp(s),
            g2: self.g2.exp(s),
        }
    }

    /// `e(g1_part, g2) == e(g1, g2_part)`.
    pub fn is_consistent(&self, backend: &B) -> Result<bool, GroupError> {
        Ok(backend.pair(&self.g1, &backend.g2())? == backend.pair(&backend.g1(), &self.g2)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn bilinearity<B: Backend>(backend: &B, rounds: usize) {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..rounds {
            let x = backend.random_scalar(&mut rng);
            let y = backend.random_scalar(&mut rng);
            let lhs = backend
                .pair(&backend.g1().exp(&x), &backend.g2().exp(&y))
                .unwrap();
            assert_eq!(lhs, backend.gt().exp(&(x * y)));
        }
    }

    fn exp_laws<B: Backend>(backend: &B) {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let a = backend.random_scalar(&mut rng);
        let b = backend.random_scalar(&mut rng);
        let x = backend.g1().exp(&a);
        assert_eq!(x.exp(&b), backend.g1().exp(&(a * b)));
        assert!(x.exp(&backend.scalar_from_u64(0)).is_identity());
        let id = backend.g2().exp(&backend.scalar_from_u64(0));
        assert!(id.exp(&b).is_identity());
        assert_eq!(a * a.invert().unwrap(), backend.scalar_one());
        assert!(backend.scalar_from_u64(0).invert().is_none());
    }

    fn encoding_round_trip<B: Backend>(backend: &B) {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..10 {
            let s = backend.random_scalar(&mut rng);
            let g1 = backend.g1().exp(&s);
            let g2 = backend.g2().exp(&s);
            let gt = backend.gt().exp(&s);

            let enc = backend.encode_scalar(&s);
            assert_eq!(backend.decode_scalar(&enc).unwrap(), s);
            let enc1 = backend.encode_g1(&g1);
            assert_eq!(backend.decode_g1(&enc1).unwrap(), g1);
            assert_eq!(backend.encode_g1(&backend.decode_g1(&enc1).unwrap()), enc1);
            let enc2 = backend.encode_g2(&g2);
            assert_eq!(backend.decode_g2(&enc2).unwrap(), g2);
            let enct = backend.encode_gt(&gt);
            assert_eq!(backend.decode_gt(&enct).unwrap(), gt);
            assert_eq!(backend.encode_gt(&backend.decode_gt(&enct).unwrap()), enct);
        }
    }

    fn truncated_and_wrong_tag<B: Backend>(backend: &B) {
        let enc = backend.encode_g1(&backend.g1());
        let err = backend.decode_g1(&enc[..enc.len() - 1]).unwrap_err();
        assert!(matches!(err, GroupError::DecodeError { .. }));
        assert!(matches!(
            backend.decode_g2(&enc).unwrap_err(),
            GroupError::DecodeError { position: 0, .. }
        ));
        assert!(matches!(
            backend.decode_g1(&[]).unwrap_err(),
            GroupError::DecodeError { position: 0, .. }
        ));
    }

    fn hashing<B: Backend>(backend: &B) {
        assert_eq!(
            backend.hash_to_g1(b"b").unwrap(),
            backend.hash_to_g1(b"b").unwrap()
        );
        assert_ne!(
            backend.hash_to_g1(b"Doctor").unwrap(),
            backend.hash_to_g1(b"Student").unwrap()
        );
        assert_eq!(backend.hash_to_g1(b"").unwrap_err(), GroupError::EmptyLabel);
        let s = backend.hash_to_scalar(b"OISP Symposium");
        assert_eq!(s, backend.hash_to_scalar(b"OISP Symposium"));
        assert!(!s.is_zero());
        assert_ne!(s, backend.hash_to_scalar(b"The 9th Student Conference"));
        let m0 = backend.encode_message(b"OISP Symposium").unwrap();
        assert_eq!(m0, backend.encode_message(b"OISP Symposium").unwrap());
        assert_ne!(
            m0,
            backend
                .encode_message(b"The 9th Student Conference")
                .unwrap()
        );
        assert_eq!(
            backend.encode_message(b"").unwrap_err(),
            GroupError::EmptyMessage
        );
    }

    #[test]
    fn debug_backend_laws() {
        let b = DebugBackend::default();
        bilinearity(&b, 100);
        exp_laws(&b);
        encoding_round_trip(&b);
        truncated_and_wrong_tag(&b);
        hashing(&DebugBackend::new(2_147_483_647).unwrap());
    }

    #[test]
    fn curve_backend_laws() {
        let b = Bls12Backend::new();
        bilinearity(&b, 100);
        exp_laws(&b);
        encoding_round_trip(&b);
        truncated_and_wrong_tag(&b);
        hashing(&b);
    }

    fn small_exponent_pairings<B: Backend>(b: &B) {
        let two = b.scalar_from_u64(2);
        let three = b.scalar_from_u64(3);
        assert_eq!(
            b.pair(&b.g1().exp(&two), &b.g2().exp(&three)).unwrap(),
            b.gt().exp(&b.scalar_from_u64(6))
        );
        let zero = b.scalar_from_u64(0);
        assert!(b
            .pair(&b.g1().exp(&zero), &b.g2().exp(&b.scalar_from_u64(45)))
            .unwrap()
            .is_identity());
        assert!(!b.gt().is_identity());
    }

    #[test]
    fn pairing_identity_and_small_exponents() {
        small_exponent_pairings(&DebugBackend::default());
        small_exponent_pairings(&Bls12Backend::new());
    }

    #[test]
    fn dual_elements_are_consistent() {
        let b = Bls12Backend::new();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = b.random_scalar(&mut rng);
        let d = DualElem::from_exponent(&b, &s);
        assert!(d.is_consistent(&b).unwrap());
        let bad = DualElem::<Bls12Backend> {
            g1: d.g1,
            g2: b.g2(),
        };
        assert!(!bad.is_consistent(&b).unwrap());
    }
}
