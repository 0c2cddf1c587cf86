//! Exponent-tracking backend.
//!
//! Every element of G1, G2 and GT is stored as its discrete log with respect
//! to the fixed generator, modulo a small prime `p`. The group operation adds
//! exponents and the pairing multiplies them. There is no security here at
//! all; the point is that every intermediate value of the scheme can be read
//! off and checked by hand.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigUint;
use rand::{Rng, RngCore};
use sha2::{Digest, Sha256};

use super::{expect_len, Backend, BackendId, FieldElem, GroupElem, GroupError};

pub const DEFAULT_DEBUG_PRIME: u64 = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DebugBackend {
    p: u64,
}

impl Default for DebugBackend {
    fn default() -> Self {
        DebugBackend {
            p: DEFAULT_DEBUG_PRIME,
        }
    }
}

impl DebugBackend {
    pub fn new(p: u64) -> Result<Self, GroupError> {
        if !(3..1 << 32).contains(&p) || !is_prime(p) {
            return Err(GroupError::InvalidModulus(p));
        }
        Ok(DebugBackend { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn scalar(&self, v: u64) -> DebugScalar {
        DebugScalar {
            v: v % self.p,
            p: self.p,
        }
    }

    pub fn g1_from_exponent(&self, e: u64) -> DebugG1 {
        DebugG1 {
            e: e % self.p,
            p: self.p,
        }
    }

    pub fn g2_from_exponent(&self, e: u64) -> DebugG2 {
        DebugG2 {
            e: e % self.p,
            p: self.p,
        }
    }

    pub fn gt_from_exponent(&self, e: u64) -> DebugGt {
        DebugGt {
            e: e % self.p,
            p: self.p,
        }
    }

    fn read_u32(&self, payload: &[u8], offset: usize) -> Result<u64, GroupError> {
        expect_len(payload, 4, offset)?;
        let v = u32::from_be_bytes(payload.try_into().expect("length checked")) as u64;
        if v >= self.p {
            return Err(GroupError::decode(
                offset,
                format!("value {v} is not reduced modulo {}", self.p),
            ));
        }
        Ok(v)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

/// Element of Z_p for a small prime `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DebugScalar {
    v: u64,
    p: u64,
}

impl DebugScalar {
    pub fn value(&self) -> u64 {
        self.v
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.p, other.p, "debug scalars from different moduli");
    }
}

impl Add for DebugScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.check(&rhs);
        DebugScalar {
            v: (self.v + rhs.v) % self.p,
            p: self.p,
        }
    }
}

impl Sub for DebugScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.check(&rhs);
        DebugScalar {
            v: (self.v + self.p - rhs.v) % self.p,
            p: self.p,
        }
    }
}

impl Mul for DebugScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.check(&rhs);
        DebugScalar {
            v: mul_mod(self.v, rhs.v, self.p),
            p: self.p,
        }
    }
}

impl Neg for DebugScalar {
    type Output = Self;
    fn neg(self) -> Self {
        DebugScalar {
            v: (self.p - self.v) % self.p,
            p: self.p,
        }
    }
}

impl FieldElem for DebugScalar {
    fn is_zero(&self) -> bool {
        self.v == 0
    }

    fn invert(&self) -> Option<Self> {
        if self.v == 0 {
            return None;
        }
        // Fermat: v^(p-2)
        let mut acc = 1u64;
        let mut base = self.v;
        let mut e = self.p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_mod(acc, base, self.p);
            }
            base = mul_mod(base, base, self.p);
            e >>= 1;
        }
        Some(DebugScalar { v: acc, p: self.p })
    }
}

macro_rules! debug_group {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub struct $name {
            e: u64,
            p: u64,
        }

        impl $name {
            /// Discrete log with respect to the backend generator.
            pub fn exponent(&self) -> u64 {
                self.e
            }
        }

        impl GroupElem<DebugScalar> for $name {
            fn op(&self, other: &Self) -> Self {
                assert_eq!(self.p, other.p, "debug elements from different moduli");
                $name {
                    e: (self.e + other.e) % self.p,
                    p: self.p,
                }
            }

            fn exp(&self, s: &DebugScalar) -> Self {
                assert_eq!(self.p, s.p, "debug elements from different moduli");
                $name {
                    e: mul_mod(self.e, s.v, self.p),
                    p: self.p,
                }
            }

            fn inverse(&self) -> Self {
                $name {
                    e: (self.p - self.e) % self.p,
                    p: self.p,
                }
            }

            fn is_identity(&self) -> bool {
                self.e == 0
            }
        }
    };
}

debug_group!(DebugG1, "G1 element stored as its exponent.");
debug_group!(DebugG2, "G2 element stored as its exponent.");
debug_group!(DebugGt, "GT element stored as its exponent.");

impl Backend for DebugBackend {
    type Scalar = DebugScalar;
    type G1 = DebugG1;
    type G2 = DebugG2;
    type Gt = DebugGt;

    fn id(&self) -> BackendId {
        BackendId::Debug
    }

    fn order(&self) -> BigUint {
        BigUint::from(self.p)
    }

    fn scalar_from_u64(&self, v: u64) -> DebugScalar {
        self.scalar(v)
    }

    fn scalar_from_biguint(&self, v: &BigUint) -> DebugScalar {
        let r = v % self.p;
        self.scalar(r.iter_u64_digits().next().unwrap_or(0))
    }

    fn scalar_to_biguint(&self, s: &DebugScalar) -> BigUint {
        BigUint::from(s.v)
    }

    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> DebugScalar {
        self.scalar(rng.gen_range(1..self.p))
    }

    fn g1(&self) -> DebugG1 {
        self.g1_from_exponent(1)
    }

    fn g2(&self) -> DebugG2 {
        self.g2_from_exponent(1)
    }

    fn gt(&self) -> DebugGt {
        self.gt_from_exponent(1)
    }

    fn pair(&self, a: &DebugG1, b: &DebugG2) -> Result<DebugGt, GroupError> {
        if a.p != self.p || b.p != self.p {
            return Err(GroupError::BackendMismatch);
        }
        Ok(DebugGt {
            e: mul_mod(a.e, b.e, self.p),
            p: self.p,
        })
    }

    fn hash_to_g1(&self, label: &[u8]) -> Result<DebugG1, GroupError> {
        if label.is_empty() {
            return Err(GroupError::EmptyLabel);
        }
        let digest = BigUint::from_bytes_be(&Sha256::digest(label));
        let e = self.scalar_from_biguint(&digest);
        Ok(self.g1_from_exponent(e.v))
    }

    fn scalar_payload(&self, s: &DebugScalar) -> Vec<u8> {
        (s.v as u32).to_be_bytes().to_vec()
    }

    fn g1_payload(&self, e: &DebugG1) -> Vec<u8> {
        (e.e as u32).to_be_bytes().to_vec()
    }

    fn g2_payload(&self, e: &DebugG2) -> Vec<u8> {
        (e.e as u32).to_be_bytes().to_vec()
    }

    fn gt_payload(&self, e: &DebugGt) -> Vec<u8> {
        (e.e as u32).to_be_bytes().to_vec()
    }

    fn scalar_from_payload(
        &self,
        payload: &[u8],
        offset: usize,
    ) -> Result<DebugScalar, GroupError> {
        Ok(self.scalar(self.read_u32(payload, offset)?))
    }

    fn g1_from_payload(&self, payload: &[u8], offset: usize) -> Result<DebugG1, GroupError> {
        Ok(self.g1_from_exponent(self.read_u32(payload, offset)?))
    }

    fn g2_from_payload(&self, payload: &[u8], offset: usize) -> Result<DebugG2, GroupError> {
        Ok(self.g2_from_exponent(self.read_u32(payload, offset)?))
    }

    fn gt_from_payload(&self, payload: &[u8], offset: usize) -> Result<DebugGt, GroupError> {
        Ok(self.gt_from_exponent(self.read_u32(payload, offset)?))
    }
}
