//! BLS12-381 backend.
//!
//! G1/G2 use the standard compressed point encodings (48 and 96 bytes,
//! big-endian with flag bits). GT is encoded as its 12 base-field
//! coefficients, 48 bytes big-endian each. Scalars are 32 bytes big-endian.

use ark_bls12_381::{g1, Bls12_381, Fq12, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::hashing::curve_maps::wb::WBMap;
use ark_ec::hashing::map_to_curve_hasher::MapToCurveBasedHasher;
use ark_ec::hashing::HashToCurve;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::short_weierstrass::{Projective, SWCurveConfig};
use ark_ec::{CurveGroup, Group};
use ark_ff::field_hashers::DefaultFieldHasher;
use ark_ff::{BigInteger, Field, One, PrimeField, UniformRand, Zero};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use num_bigint::BigUint;
use rand::RngCore;
use sha2::Sha256;

use super::{expect_len, Backend, BackendId, FieldElem, GroupElem, GroupError};

const HASH_TO_G1_DST: &[u8] = b"CDPRE-V01-CS01-with-BLS12381G1_XMD:SHA-256_SSWU_RO_";

const SCALAR_LEN: usize = 32;
const G1_LEN: usize = 48;
const G2_LEN: usize = 96;
const FQ_LEN: usize = 48;
const GT_LEN: usize = 12 * FQ_LEN;

pub type Gt = PairingOutput<Bls12_381>;

/// Type-3 pairing on BLS12-381.
#[derive(Debug, Clone)]
pub struct Bls12Backend {
    gt: Gt,
}

impl Bls12Backend {
    pub fn new() -> Self {
        Bls12Backend {
            gt: Bls12_381::pairing(G1Projective::generator(), G2Projective::generator()),
        }
    }
}

impl Default for Bls12Backend {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialEq for Bls12Backend {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl FieldElem for Fr {
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn invert(&self) -> Option<Self> {
        Field::inverse(self)
    }
}

impl GroupElem<Fr> for Gt {
    fn op(&self, other: &Self) -> Self {
        *self + other
    }

    fn exp(&self, s: &Fr) -> Self {
        *self * s
    }

    fn inverse(&self) -> Self {
        -*self
    }

    fn is_identity(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl<P: SWCurveConfig<ScalarField = Fr>> GroupElem<Fr> for Projective<P> {
    fn op(&self, other: &Self) -> Self {
        *self + other
    }

    fn exp(&self, s: &Fr) -> Self {
        *self * s
    }

    fn inverse(&self) -> Self {
        -*self
    }

    fn is_identity(&self) -> bool {
        Zero::is_zero(self)
    }
}

fn serialization_error(offset: usize, e: ark_serialize::SerializationError) -> GroupError {
    GroupError::decode(offset, format!("invalid encoding: {e}"))
}

impl Backend for Bls12Backend {
    type Scalar = Fr;
    type G1 = G1Projective;
    type G2 = G2Projective;
    type Gt = Gt;

    fn id(&self) -> BackendId {
        BackendId::Bls12_381
    }

    fn order(&self) -> BigUint {
        BigUint::from(Fr::MODULUS)
    }

    fn scalar_from_u64(&self, v: u64) -> Fr {
        Fr::from(v)
    }

    fn scalar_from_biguint(&self, v: &BigUint) -> Fr {
        Fr::from_be_bytes_mod_order(&v.to_bytes_be())
    }

    fn scalar_to_biguint(&self, s: &Fr) -> BigUint {
        BigUint::from_bytes_be(&s.into_bigint().to_bytes_be())
    }

    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Fr {
        loop {
            let s = Fr::rand(rng);
            if !Zero::is_zero(&s) {
                return s;
            }
        }
    }

    fn g1(&self) -> G1Projective {
        G1Projective::generator()
    }

    fn g2(&self) -> G2Projective {
        G2Projective::generator()
    }

    fn gt(&self) -> Gt {
        self.gt
    }

    fn pair(&self, a: &G1Projective, b: &G2Projective) -> Result<Gt, GroupError> {
        Ok(Bls12_381::pairing(*a, *b))
    }

    fn hash_to_g1(&self, label: &[u8]) -> Result<G1Projective, GroupError> {
        if label.is_empty() {
            return Err(GroupError::EmptyLabel);
        }
        let hasher = MapToCurveBasedHasher::<
            G1Projective,
            DefaultFieldHasher<Sha256, 128>,
            WBMap<g1::Config>,
        >::new(HASH_TO_G1_DST)
        .expect("static domain separation tag is valid");
        let point = hasher
            .hash(label)
            .expect("hash-to-curve is total for nonempty input");
        Ok(point.into())
    }

    fn scalar_payload(&self, s: &Fr) -> Vec<u8> {
        s.into_bigint().to_bytes_be()
    }

    fn g1_payload(&self, e: &G1Projective) -> Vec<u8> {
        let mut out = Vec::with_capacity(G1_LEN);
        e.into_affine()
            .serialize_compressed(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    fn g2_payload(&self, e: &G2Projective) -> Vec<u8> {
        let mut out = Vec::with_capacity(G2_LEN);
        e.into_affine()
            .serialize_compressed(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    fn gt_payload(&self, e: &Gt) -> Vec<u8> {
        let mut le = Vec::with_capacity(GT_LEN);
        e.0.serialize_uncompressed(&mut le)
            .expect("writing to a Vec cannot fail");
        // arkworks writes each coefficient little-endian
        le.chunks_mut(FQ_LEN).for_each(|c| c.reverse());
        le
    }

    fn scalar_from_payload(&self, payload: &[u8], offset: usize) -> Result<Fr, GroupError> {
        expect_len(payload, SCALAR_LEN, offset)?;
        let s = Fr::from_be_bytes_mod_order(payload);
        if self.scalar_payload(&s) != payload {
            return Err(GroupError::decode(offset, "scalar is not reduced"));
        }
        Ok(s)
    }

    fn g1_from_payload(&self, payload: &[u8], offset: usize) -> Result<G1Projective, GroupError> {
        expect_len(payload, G1_LEN, offset)?;
        let p = G1Affine::deserialize_compressed(payload)
            .map_err(|e| serialization_error(offset, e))?;
        let p: G1Projective = p.into();
        if self.g1_payload(&p) != payload {
            return Err(GroupError::decode(offset, "non-canonical G1 encoding"));
        }
        Ok(p)
    }

    fn g2_from_payload(&self, payload: &[u8], offset: usize) -> Result<G2Projective, GroupError> {
        expect_len(payload, G2_LEN, offset)?;
        let p = G2Affine::deserialize_compressed(payload)
            .map_err(|e| serialization_error(offset, e))?;
        let p: G2Projective = p.into();
        if self.g2_payload(&p) != payload {
            return Err(GroupError::decode(offset, "non-canonical G2 encoding"));
        }
        Ok(p)
    }

    fn gt_from_payload(&self, payload: &[u8], offset: usize) -> Result<Gt, GroupError> {
        expect_len(payload, GT_LEN, offset)?;
        let mut le = payload.to_vec();
        le.chunks_mut(FQ_LEN).for_each(|c| c.reverse());
        let f =
            Fq12::deserialize_uncompressed(&le[..]).map_err(|e| serialization_error(offset, e))?;
        // r-torsion check
        if !f.pow(Fr::MODULUS).is_one() {
            return Err(GroupError::decode(offset, "element is not in GT"));
        }
        Ok(PairingOutput(f))
    }
}
