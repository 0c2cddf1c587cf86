use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::groups::{Backend, DebugBackend, GroupElem};
use crate::policy::{parse_attribute_set, parse_policy, recon_coefficients, PolicyError};

fn attrs(s: &str) -> BTreeSet<Attribute> {
    parse_attribute_set(s).unwrap()
}

fn universe(s: &str) -> Vec<Attribute> {
    attrs(s).into_iter().collect()
}

fn rng() -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(11)
}

struct Fixture {
    b: DebugBackend,
    msk: MasterSecretKey<DebugBackend>,
    pk: PublicKey<DebugBackend>,
}

// p = 101, m = 3, n = 7
fn fixture() -> Fixture {
    let b = DebugBackend::default();
    let msk = MasterSecretKey {
        m: b.scalar(3),
        n: b.scalar(7),
    };
    let (msk, pk) = setup_with(
        b,
        &universe("Doctor,Professor,Researcher,Student"),
        msk,
        &mut rng(),
    )
    .unwrap();
    Fixture { b, msk, pk }
}

fn secrets(f: &Fixture, k: u64, attrs: &BTreeSet<Attribute>) -> KeygenSecrets<DebugBackend> {
    KeygenSecrets {
        k: f.b.scalar(k),
        kb: f.b.scalar(2),
        k_i: attrs
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), f.b.scalar(10 + i as u64)))
            .collect(),
    }
}

#[test]
fn setup_hand_trace() {
    let f = fixture();
    assert_eq!(f.pk.h.g2.exponent(), 7);
    assert_eq!(f.pk.h.g1.exponent(), 7);
    assert_eq!(f.pk.egg_m.exponent(), 3);
    assert_eq!(f.pk.w.len(), 4);
    for w in f.pk.w.values().chain([&f.pk.wb]) {
        assert!(w.is_consistent(&f.b).unwrap());
    }
}

#[test]
fn setup_errors() {
    let b = DebugBackend::default();
    let dup = vec![Attribute::new("A").unwrap(), Attribute::new("A").unwrap()];
    assert_eq!(
        setup(b, &dup, &mut rng()).unwrap_err(),
        SchemeError::DuplicateAttribute("A".into())
    );
    assert_eq!(
        setup(b, &[Attribute::protection()], &mut rng())
            .unwrap_err()
            .name(),
        "ReservedAttribute"
    );
    let (_, pk) = setup(b, &[], &mut rng()).unwrap();
    assert!(pk.w.is_empty());
}

#[test]
fn keygen_hand_trace() {
    let f = fixture();
    let a = attrs("Doctor");
    let usk = keygen_with(&f.msk, &f.pk, &a, &secrets(&f, 5, &a)).unwrap();
    // (3 + 5) * 7^-1 = 8 * 29 mod 101
    assert_eq!(usk.sk1.exponent(), 30);
    let pb = f.pk.wb.g2.exponent();
    let sk2 = usk.sk2.as_ref().unwrap();
    assert_eq!(sk2.first.exponent(), 2);
    assert_eq!(sk2.second.exponent(), (5 + pb * 2) % 101);
    assert_eq!(
        keygen(&f.msk, &f.pk, &attrs("Nurse"), &mut rng()).unwrap_err(),
        SchemeError::UnknownAttribute("Nurse".into())
    );
    let empty = keygen(&f.msk, &f.pk, &BTreeSet::new(), &mut rng()).unwrap();
    assert!(empty.sk3.is_empty() && empty.sk2.is_some());
}

#[test]
fn encrypt_decrypt_hand_trace() {
    let f = fixture();
    let b = f.b;
    let a = attrs("Doctor");
    let usk = keygen_with(&f.msk, &f.pk, &a, &secrets(&f, 5, &a)).unwrap();
    let key = SymmetricKey {
        k: b.gt_from_exponent(40),
    };
    let policy = parse_policy("Doctor").unwrap();
    let (ct, trace) = encrypt_with(&f.pk, &policy, &key, &[b.scalar(7), b.scalar(5)]).unwrap();
    assert_eq!(trace.shares.shares, vec![b.scalar(12), b.scalar(17)]);

    let p_doc = f.pk.w[&Attribute::new("Doctor").unwrap()].g1.exponent();
    assert_eq!(ct.rows[&1].b.exponent(), 17);
    assert_eq!(ct.rows[&1].c.exponent(), p_doc * 17 % 101);
    assert_eq!(ct.cb.b.exponent(), 12);
    assert_eq!(ct.a2.exponent(), 49);
    assert_eq!(ct.a1.exponent(), 61);

    let fs = leaf_factors(&f.pk, &usk, &ct).unwrap();
    assert_eq!(fs[&0].exponent(), 60);
    assert_eq!(fs[&1].exponent(), 85);
    let plan = recon_coefficients(&b, &ct.matrix, &BTreeSet::from([0, 1])).unwrap();
    let f_w = plan
        .coeffs
        .iter()
        .fold(0, |acc, (r, c)| (acc + fs[r].exponent() * c.value()) % 101);
    assert_eq!(f_w, 35);
    assert_eq!(b.pair(&ct.a2, &usk.sk1).unwrap().exponent(), 56);
    assert_eq!(decrypt(&f.pk, &usk, &ct).unwrap(), key);
}

#[test]
fn decrypt_failures() {
    let f = fixture();
    let mut r = rng();
    let usk = keygen(&f.msk, &f.pk, &attrs("Doctor"), &mut r).unwrap();
    let key = SymmetricKey::random(&f.b, &mut r);
    let policy = parse_policy("(Doctor AND Professor)").unwrap();
    let ct = encrypt(&f.pk, &policy, &key, &mut r).unwrap();
    assert!(matches!(
        decrypt(&f.pk, &usk, &ct),
        Err(SchemeError::Policy(PolicyError::PolicyNotSatisfied { .. }))
    ));

    let full = keygen(&f.msk, &f.pk, &attrs("Doctor,Professor"), &mut r).unwrap();
    let mut stripped = full.clone();
    stripped.sk2 = None;
    assert_eq!(
        decrypt(&f.pk, &stripped, &ct).unwrap_err(),
        SchemeError::MissingProtectionKey
    );

    let mut broken = ct.clone();
    broken.rows.remove(&1);
    assert_eq!(
        decrypt(&f.pk, &full, &broken).unwrap_err().name(),
        "MalformedCiphertext"
    );

    let unknown = parse_policy("Nurse").unwrap();
    assert_eq!(
        encrypt(&f.pk, &unknown, &key, &mut r).unwrap_err(),
        SchemeError::UnknownAttribute("Nurse".into())
    );
}

#[test]
fn rekeygen_hand_trace() {
    let f = fixture();
    let b = f.b;
    let a = attrs("Doctor,Professor");
    let s = secrets(&f, 5, &a);
    let usk = keygen_with(&f.msk, &f.pk, &a, &s).unwrap();
    let target = TargetKey::from_secret(&b, &b.scalar(9));
    let rand = RekeyRandomness {
        alpha: b.scalar(4),
        mu: b.scalar(3),
        t: b.scalar(2),
    };
    let rk = rekeygen_paper_with(&usk, &s, &target, &f.pk, &rand).unwrap();
    assert_eq!(rk.rk1.exponent(), 13);
    assert_eq!(rk.rk1_g2.exponent(), 13);
    assert_eq!(rk.rk2.exponent(), (4 + 3 * f.pk.wb.g1.exponent()) % 101);
    assert_eq!(rk.rk3.len(), 2);
    // k_i = 10, 11 in attribute order; t = 2
    let ks: Vec<u64> = rk.rk3.values().map(|e| e.exponent()).collect();
    assert_eq!(ks, vec![20, 22]);

    assert_eq!(
        rekeygen_paper_with(&usk, &s, &target.without_mirror(), &f.pk, &rand).unwrap_err(),
        SchemeError::TargetKeyNotDual
    );
    let other = secrets(&f, 5, &attrs("Doctor"));
    assert_eq!(
        rekeygen_paper_with(&usk, &other, &target, &f.pk, &rand).unwrap_err(),
        SchemeError::MissingRetainedSecrets
    );
}

#[test]
fn crossdomain_key_hand_trace() {
    let b = DebugBackend::default();
    // find a label whose hash exponent is 11
    let name = (0..)
        .map(|i| format!("attr{i}"))
        .find(|n| b.hash_to_g1(n.as_bytes()).unwrap().exponent() == 11)
        .unwrap();
    let a = attrs(&name);
    let cdk = issue_crossdomain_key(&b, &b.scalar(9), &a).unwrap();
    assert_eq!(cdk.d[&Attribute::new(name).unwrap()].exponent(), 99);
    assert_eq!(cdk.k0.exponent(), 9);
    assert_eq!(cdk.d.len(), 1);
    for (a, d) in &cdk.d {
        let h = b.hash_to_g1(a.as_str().as_bytes()).unwrap();
        assert_eq!(b.pair(d, &b.g2()).unwrap(), b.pair(&h, &cdk.k0).unwrap());
    }
}

#[test]
fn corrected_reencryption_hand_trace() {
    let f = fixture();
    let b = f.b;
    let mut r = rng();
    let key = SymmetricKey {
        k: b.gt_from_exponent(40),
    };
    let ct = encrypt(&f.pk, &parse_policy("Doctor").unwrap(), &key, &mut r).unwrap();
    let beta = b.scalar(9);
    let target = TargetKey::from_secret(&b, &beta).without_mirror();
    let policy2 = parse_policy("Engineer").unwrap();
    let rand = ReencRandomness {
        u: vec![b.scalar(4), b.scalar(6)],
        r: vec![b.scalar(3), b.scalar(8)],
    };
    let (rct, trace) =
        reencrypt_corrected_with(&f.msk, &f.pk, &target, &ct, &policy2, &rand).unwrap();
    assert_eq!(trace.v, b.scalar(4));
    assert_eq!(rct.a1p.exponent(), 40 + 36);
    assert_eq!(rct.a2p.exponent(), 4);
    assert_eq!(rct.mode, ReencMode::Corrected);
    assert!(rct.matrix.rho(0).is_protection());

    let cdk = issue_crossdomain_key(&b, &beta, &attrs("Engineer")).unwrap();
    assert_eq!(decrypt_reencrypted(&cdk, &rct).unwrap(), key);

    let outsider = issue_crossdomain_key(&b, &beta, &attrs("Clerk")).unwrap();
    assert!(matches!(
        decrypt_reencrypted(&outsider, &rct),
        Err(SchemeError::Policy(PolicyError::PolicyNotSatisfied { .. }))
    ));
}

#[test]
fn corrected_mode_rejects_foreign_msk() {
    let f = fixture();
    let mut r = rng();
    let key = SymmetricKey::random(&f.b, &mut r);
    let ct = encrypt(&f.pk, &parse_policy("Doctor").unwrap(), &key, &mut r).unwrap();
    let wrong = MasterSecretKey {
        m: f.b.scalar(4),
        n: f.b.scalar(7),
    };
    let target = TargetKey::from_secret(&f.b, &f.b.scalar(9));
    assert_eq!(
        reencrypt_corrected(
            &wrong,
            &f.pk,
            &target,
            &ct,
            &parse_policy("X").unwrap(),
            &mut r
        )
        .unwrap_err(),
        SchemeError::KeyMismatch
    );
}

#[test]
fn paper_mode_structure_and_determinism() {
    let f = fixture();
    let b = f.b;
    let mut r = rng();
    let a = attrs("Doctor,Professor");
    let (usk, s) = keygen_retained(&f.msk, &f.pk, &a, &mut r).unwrap();
    let key = SymmetricKey::random(&b, &mut r);
    let ct = encrypt(
        &f.pk,
        &parse_policy("(Doctor AND Professor)").unwrap(),
        &key,
        &mut r,
    )
    .unwrap();
    let beta = b.scalar(9);
    let target = TargetKey::from_secret(&b, &beta);
    let rk = rekeygen_paper(&usk, &s, &target, &f.pk, &mut r).unwrap();
    let policy2 = parse_policy("kofn(2, X, Y, Z)").unwrap();

    let run = |seed| {
        reencrypt_paper(
            &f.pk,
            &rk,
            &ct,
            &policy2,
            &mut ChaCha20Rng::seed_from_u64(seed),
        )
        .unwrap()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));

    let rand = ReencRandomness::sample(&b, &policy2, &mut r).unwrap();
    let (rct, trace) = reencrypt_paper_with(&f.pk, &rk, &ct, &policy2, &rand).unwrap();
    assert_eq!(rct.mode, ReencMode::Paper);
    for i in 0..rct.matrix.num_rows() {
        let row = if i == 0 { &rct.cb } else { &rct.rows[&i] };
        let h = b.hash_to_g1(rct.matrix.rho(i).as_str().as_bytes()).unwrap();
        let lhs = b
            .pair(&row.b, &b.g2())
            .unwrap()
            .op(&b.pair(&h, &row.c).unwrap());
        assert_eq!(lhs, b.gt().exp(&trace.shares.shares[i]));
    }
    let cdk = issue_crossdomain_key(&b, &beta, &attrs("X,Y,Z")).unwrap();
    assert_eq!(
        decrypt_reencrypted(&cdk, &rct).unwrap_err(),
        SchemeError::UnsupportedMode
    );
}

#[test]
fn paper_mode_a1p_follows_the_formula() {
    let f = fixture();
    let b = f.b;
    let a = attrs("Doctor");
    let s = secrets(&f, 5, &a);
    let usk = keygen_with(&f.msk, &f.pk, &a, &s).unwrap();
    let key = SymmetricKey {
        k: b.gt_from_exponent(40),
    };
    let (ct, _) = encrypt_with(
        &f.pk,
        &parse_policy("Doctor").unwrap(),
        &key,
        &[b.scalar(7), b.scalar(5)],
    )
    .unwrap();
    let target = TargetKey::from_secret(&b, &b.scalar(9));
    let rand = RekeyRandomness {
        alpha: b.scalar(4),
        mu: b.scalar(3),
        t: b.scalar(2),
    };
    let rk = rekeygen_paper_with(&usk, &s, &target, &f.pk, &rand).unwrap();
    let rr = ReencRandomness {
        u: vec![b.scalar(4), b.scalar(6)],
        r: vec![b.scalar(3), b.scalar(8)],
    };
    let (rct, _) = reencrypt_paper_with(&f.pk, &rk, &ct, &parse_policy("X").unwrap(), &rr).unwrap();
    // A1 = 61, v' = 4, beta' = 9, rk3 = 20, A2 = 49, rk1 = 13, rk2 = 4 + 3 p_b
    let pb = f.pk.wb.g1.exponent();
    let rk2 = (4 + 3 * pb) % 101;
    let expected = (61 + 36 + 20 * 9 + 49 * 13 + 101 * 101 - 49 * rk2 - 49 * 9) % 101;
    assert_eq!(rct.a1p.exponent(), expected);
}

#[test]
fn error_names() {
    assert_eq!(SchemeError::IntegrityError.name(), "IntegrityError");
    assert_eq!(
        SchemeError::from(PolicyError::NotAuthorized).name(),
        "NotAuthorized"
    );
    assert_eq!(
        SchemeError::from(crate::groups::GroupError::EmptyLabel).name(),
        "EmptyLabel"
    );
}
