#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use cdpre_core::envelope::{from_json, to_json, EnvelopeBackend, EnvelopeObject, RetainedKey};
use cdpre_core::policy::{parse_attribute_set, parse_policy, Attribute};
use cdpre_core::scheme::{
    encrypt, issue_crossdomain_key, keygen_retained, reencrypt_corrected, rekeygen_paper, setup,
    Ciphertext, CrossDomainUserKey, MasterSecretKey, PublicKey, ReEncryptedCiphertext, ReKey,
    SymmetricKey, TargetKey,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub const GOLDEN_SEED: u64 = 20240601;

pub const OBJECT_TYPES: [&str; 8] = ["pk", "msk", "usk", "ct", "rk", "rct", "cdk", "tpk"];

pub fn attrs(s: &str) -> BTreeSet<Attribute> {
    parse_attribute_set(s).unwrap()
}

pub fn golden_dir(backend: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(backend)
}

/// One envelope per object type, all from a single seeded run.
pub fn golden_objects<B: EnvelopeBackend>(b: B, seed: u64) -> Vec<(&'static str, String)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let universe: Vec<Attribute> = attrs("Doctor,Professor,Researcher,Student")
        .into_iter()
        .collect();
    let (msk, pk) = setup(b.clone(), &universe, &mut rng).unwrap();
    let (usk, secrets) = keygen_retained(&msk, &pk, &attrs("Doctor,Professor"), &mut rng).unwrap();
    let key = SymmetricKey::random(&b, &mut rng);
    let ct = encrypt(
        &pk,
        &parse_policy("(Doctor AND Professor)").unwrap(),
        &key,
        &mut rng,
    )
    .unwrap();
    let beta = b.random_scalar(&mut rng);
    let target = TargetKey::from_secret(&b, &beta);
    let rk = rekeygen_paper(&usk, &secrets, &target, &pk, &mut rng).unwrap();
    let policy2 = parse_policy("(Engineer OR Inspector)").unwrap();
    let rct = reencrypt_corrected(&msk, &pk, &target, &ct, &policy2, &mut rng).unwrap();
    let cdk = issue_crossdomain_key(&b, &beta, &attrs("Engineer")).unwrap();
    let retained = RetainedKey {
        usk,
        secrets: Some(secrets),
    };
    vec![
        ("pk", to_json(&b, &pk)),
        ("msk", to_json(&b, &msk)),
        ("usk", to_json(&b, &retained)),
        ("ct", to_json(&b, &ct)),
        ("rk", to_json(&b, &rk)),
        ("rct", to_json(&b, &rct)),
        ("cdk", to_json(&b, &cdk)),
        ("tpk", to_json(&b, &target)),
    ]
}

fn reencode<B: EnvelopeBackend, T: EnvelopeObject<B>>(text: &str) -> String {
    let (b, obj) = from_json::<B, T>(text).unwrap();
    to_json(&b, &obj)
}

/// Decodes `text` as `kind` and encodes it again.
pub fn reencode_any<B: EnvelopeBackend>(kind: &str, text: &str) -> String {
    match kind {
        "pk" => reencode::<B, PublicKey<B>>(text),
        "msk" => reencode::<B, MasterSecretKey<B>>(text),
        "usk" => reencode::<B, RetainedKey<B>>(text),
        "ct" => reencode::<B, Ciphertext<B>>(text),
        "rk" => reencode::<B, ReKey<B>>(text),
        "rct" => reencode::<B, ReEncryptedCiphertext<B>>(text),
        "cdk" => reencode::<B, CrossDomainUserKey<B>>(text),
        "tpk" => reencode::<B, TargetKey<B>>(text),
        other => panic!("unknown object type {other}"),
    }
}
