//! KEM key type, KDF and a demo-grade DEM.
//!
//! The DEM is SHA-256 in counter mode plus a SHA-256 tag over
//! `key || ciphertext`. It is for demos only; it is not a vetted AEAD.

use rand::RngCore;
use sha2::{Digest, Sha256};

use super::SchemeError;
use crate::groups::Backend;

pub const DEM_TAG_LEN: usize = 32;

/// `K_sym`, a GT element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricKey<B: Backend> {
    pub k: B::Gt,
}

impl<B: Backend> SymmetricKey<B> {
    pub fn random<R: RngCore + ?Sized>(backend: &B, rng: &mut R) -> Self {
        SymmetricKey {
            k: backend.random_gt(rng),
        }
    }

    pub fn derive(&self, backend: &B) -> [u8; 32] {
        kdf(backend, self)
    }
}

/// SHA-256 of the canonical GT encoding.
pub fn kdf<B: Backend>(backend: &B, key: &SymmetricKey<B>) -> [u8; 32] {
    Sha256::digest(backend.encode_gt(&key.k)).into()
}

fn keystream_xor(key: &[u8; 32], data: &mut [u8]) {
    for (i, chunk) in data.chunks_mut(32).enumerate() {
        let block = Sha256::new()
            .chain_update(key)
            .chain_update((i as u64).to_be_bytes())
            .finalize();
        chunk.iter_mut().zip(block).for_each(|(d, k)| *d ^= k);
    }
}

fn tag(key: &[u8; 32], body: &[u8]) -> [u8; 32] {
    Sha256::new()
        .chain_update(key)
        .chain_update(body)
        .finalize()
        .into()
}

pub fn dem_seal(key: &[u8; 32], payload: &[u8]) -> Vec<u8> {
    let mut out = payload.to_vec();
    keystream_xor(key, &mut out);
    let t = tag(key, &out);
    out.extend_from_slice(&t);
    out
}

pub fn dem_open(key: &[u8; 32], sealed: &[u8]) -> Result<Vec<u8>, SchemeError> {
    if sealed.len() < DEM_TAG_LEN {
        return Err(SchemeError::IntegrityError);
    }
    let (body, t) = sealed.split_at(sealed.len() - DEM_TAG_LEN);
    // not constant-time; demo only
    if tag(key, body) != t {
        return Err(SchemeError::IntegrityError);
    }
    let mut out = body.to_vec();
    keystream_xor(key, &mut out);
    Ok(out)
}
