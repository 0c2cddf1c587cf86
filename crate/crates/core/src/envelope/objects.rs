use std::collections::BTreeMap;

use super::{EnvelopeError, EnvelopeObject, Reader, Writer};
use crate::groups::{Backend, DualElem};
use crate::policy::Attribute;
use crate::scheme::{
    Ciphertext, CrossDomainUserKey, CtRow, KeyPair, KeygenSecrets, MasterSecretKey, PublicKey,
    ReEncryptedCiphertext, ReKey, ReRow, ReencMode, TargetKey, UserSecretKey,
};

fn write_dual<B: Backend>(w: &mut Writer<'_, B>, key: &str, d: &DualElem<B>) {
    w.object(key, |w| {
        w.g1("g1", &d.g1);
        w.g2("g2", &d.g2);
    });
}

fn read_dual<B: Backend>(r: &Reader<'_, B>, key: &str) -> Result<DualElem<B>, EnvelopeError> {
    let o = r.object(key)?;
    Ok(DualElem {
        g1: o.g1("g1")?,
        g2: o.g2("g2")?,
    })
}

fn attr(name: &str) -> Result<Attribute, EnvelopeError> {
    Ok(Attribute::new(name)?)
}

/// Reads an `{attribute: value}` object.
fn read_attr_map<B: Backend, T>(
    r: &Reader<'_, B>,
    key: &str,
    mut f: impl FnMut(&Reader<'_, B>, &str) -> Result<T, EnvelopeError>,
) -> Result<BTreeMap<Attribute, T>, EnvelopeError> {
    let o = r.object(key)?;
    o.keys().map(|k| Ok((attr(k)?, f(&o, k)?))).collect()
}

fn read_row_map<B: Backend, T>(
    r: &Reader<'_, B>,
    key: &str,
    mut f: impl FnMut(&Reader<'_, B>) -> Result<T, EnvelopeError>,
) -> Result<BTreeMap<usize, T>, EnvelopeError> {
    let o = r.object(key)?;
    o.keys()
        .map(|k| {
            let row = k
                .parse::<usize>()
                .map_err(|_| EnvelopeError::MissingField(format!("{key}.{k}")))?;
            Ok((row, f(&o.object(k)?)?))
        })
        .collect()
}

impl<B: Backend> EnvelopeObject<B> for PublicKey<B> {
    const OBJECT_TYPE: &'static str = "pk";

    fn write_fields(&self, w: &mut Writer<'_, B>) {
        write_dual(w, "g", &self.g);
        write_dual(w, "h", &self.h);
        w.gt("egg_m", &self.egg_m);
        w.object("w", |w| {
            for (a, d) in &self.w {
                write_dual(w, a.as_str(), d);
            }
        });
        write_dual(w, "wb", &self.wb);
    }

    fn read_fields(r: &Reader<'_, B>) -> Result<Self, EnvelopeError> {
        Ok(PublicKey {
            backend: r.backend().clone(),
            g: read_dual(r, "g")?,
            h: read_dual(r, "h")?,
            egg_m: r.gt("egg_m")?,
            w: read_attr_map(r, "w", |o, k| read_dual(o, k))?,
            wb: read_dual(r, "wb")?,
        })
    }
}

impl<B: Backend> EnvelopeObject<B> for MasterSecretKey<B> {
    const OBJECT_TYPE: &'static str = "msk";

    fn write_fields(&self, w: &mut Writer<'_, B>) {
        w.scalar("m", &self.m);
        w.scalar("n", &self.n);
    }

    fn read_fields(r: &Reader<'_, B>) -> Result<Self, EnvelopeError> {
        Ok(MasterSecretKey {
            m: r.scalar("m")?,
            n: r.scalar("n")?,
        })
    }
}

fn write_pair<B: Backend>(w: &mut Writer<'_, B>, key: &str, p: &KeyPair<B>) {
    w.object(key, |w| {
        w.g2("first", &p.first);
        w.g2("second", &p.second);
    });
}

fn read_pair<B: Backend>(r: &Reader<'_, B>) -> Result<KeyPair<B>, EnvelopeError> {
    Ok(KeyPair {
        first: r.g2("first")?,
        second: r.g2("second")?,
    })
}

/// A user key plus the optional key randomness a data owner keeps for
/// ReKeyGen. Shares the `usk` object type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetainedKey<B: Backend> {
    pub usk: UserSecretKey<B>,
    pub secrets: Option<KeygenSecrets<B>>,
}

impl<B: Backend> EnvelopeObject<B> for RetainedKey<B> {
    const OBJECT_TYPE: &'static str = "usk";

    fn write_fields(&self, w: &mut Writer<'_, B>) {
        self.usk.write_fields(w);
        if let Some(s) = &self.secrets {
            w.object("retained", |w| {
                w.scalar("k", &s.k);
                w.scalar("kb", &s.kb);
                w.object("k_i", |w| {
                    for (a, k) in &s.k_i {
                        w.scalar(a.as_str(), k);
                    }
                });
            });
        }
    }

    fn read_fields(r: &Reader<'_, B>) -> Result<Self, EnvelopeError> {
        let usk = UserSecretKey::read_fields(r)?;
        let secrets = if r.has("retained") {
            let o = r.object("retained")?;
            Some(KeygenSecrets {
                k: o.scalar("k")?,
                kb: o.scalar("kb")?,
                k_i: read_attr_map(&o, "k_i", |o, k| o.scalar(k))?,
            })
        } else {
            None
        };
        Ok(RetainedKey { usk, secrets })
    }
}

impl<B: Backend> EnvelopeObject<B> for UserSecretKey<B> {
    const OBJECT_TYPE: &'static str = "usk";

    fn write_fields(&self, w: &mut Writer<'_, B>) {
        w.g2("sk1", &self.sk1);
        match &self.sk2 {
            Some(p) => write_pair(w, "sk2", p),
            None => w.value("sk2", serde_json::Value::Null),
        }
        w.object("sk3", |w| {
            for (a, p) in &self.sk3 {
                write_pair(w, a.as_str(), p);
            }
        });
    }

    fn read_fields(r: &Reader<'_, B>) -> Result<Self, EnvelopeError> {
        let sk2 = if r.has("sk2") {
            Some(read_pair(&r.object("sk2")?)?)
        } else {
            None
        };
        Ok(UserSecretKey {
            sk1: r.g2("sk1")?,
            sk2,
            sk3: read_attr_map(r, "sk3", |o, k| read_pair(&o.object(k)?))?,
        })
    }
}

fn check_rows<T>(
    rows: &BTreeMap<usize, T>,
    matrix: &crate::policy::AccessMatrix,
) -> Result<(), EnvelopeError> {
    if !rows.keys().copied().eq(matrix.attribute_rows()) {
        return Err(EnvelopeError::MatrixMismatch);
    }
    Ok(())
}

impl<B: Backend> EnvelopeObject<B> for Ciphertext<B> {
    const OBJECT_TYPE: &'static str = "ct";

    fn write_fields(&self, w: &mut Writer<'_, B>) {
        w.gt("a1", &self.a1);
        w.g1("a2", &self.a2);
        w.object("cb", |w| {
            w.g1("b", &self.cb.b);
            w.g1("c", &self.cb.c);
        });
        w.object("rows", |w| {
            for (i, row) in &self.rows {
                w.object(&i.to_string(), |w| {
                    w.g1("b", &row.b);
                    w.g1("c", &row.c);
                });
            }
        });
        w.matrix("matrix", &self.matrix);
    }

    fn read_fields(r: &Reader<'_, B>) -> Result<Self, EnvelopeError> {
        let cb = r.object("cb")?;
        let rows = read_row_map(r, "rows", |o| {
            Ok(CtRow {
                b: o.g1("b")?,
                c: o.g1("c")?,
            })
        })?;
        let matrix = r.matrix("matrix")?;
        check_rows(&rows, &matrix)?;
        Ok(Ciphertext {
            a1: r.gt("a1")?,
            a2: r.g1("a2")?,
            cb: CtRow {
                b: cb.g1("b")?,
                c: cb.g1("c")?,
            },
            rows,
            matrix,
        })
    }
}

impl<B: Backend> EnvelopeObject<B> for ReKey<B> {
    const OBJECT_TYPE: &'static str = "rk";

    fn write_fields(&self, w: &mut Writer<'_, B>) {
        w.g1("rk1", &self.rk1);
        w.g1("rk2", &self.rk2);
        w.object("rk3", |w| {
            for (a, e) in &self.rk3 {
                w.g1(a.as_str(), e);
            }
        });
        w.g2("rk1_g2", &self.rk1_g2);
        w.g2("rk2_g2", &self.rk2_g2);
        w.g2("target", &self.target);
    }

    fn read_fields(r: &Reader<'_, B>) -> Result<Self, EnvelopeError> {
        Ok(ReKey {
            rk1: r.g1("rk1")?,
            rk2: r.g1("rk2")?,
            rk3: read_attr_map(r, "rk3", |o, k| o.g1(k))?,
            rk1_g2: r.g2("rk1_g2")?,
            rk2_g2: r.g2("rk2_g2")?,
            target: r.g2("target")?,
        })
    }
}

impl<B: Backend> EnvelopeObject<B> for ReEncryptedCiphertext<B> {
    const OBJECT_TYPE: &'static str = "rct";

    fn write_fields(&self, w: &mut Writer<'_, B>) {
        w.gt("a1p", &self.a1p);
        w.g1("a2p", &self.a2p);
        w.object("cb", |w| {
            w.g1("b", &self.cb.b);
            w.g2("c", &self.cb.c);
        });
        w.object("rows", |w| {
            for (i, row) in &self.rows {
                w.object(&i.to_string(), |w| {
                    w.g1("b", &row.b);
                    w.g2("c", &row.c);
                });
            }
        });
        w.matrix("matrix", &self.matrix);
        w.value("mode", serde_json::Value::String(self.mode.as_str().into()));
    }

    fn read_fields(r: &Reader<'_, B>) -> Result<Self, EnvelopeError> {
        let cb = r.object("cb")?;
        let rows = read_row_map(r, "rows", |o| {
            Ok(ReRow {
                b: o.g1("b")?,
                c: o.g2("c")?,
            })
        })?;
        let matrix = r.matrix("matrix")?;
        check_rows(&rows, &matrix)?;
        let mode = ReencMode::parse(r.str("mode")?)
            .ok_or_else(|| EnvelopeError::MissingField("mode".into()))?;
        Ok(ReEncryptedCiphertext {
            a1p: r.gt("a1p")?,
            a2p: r.g1("a2p")?,
            cb: ReRow {
                b: cb.g1("b")?,
                c: cb.g2("c")?,
            },
            rows,
            matrix,
            mode,
        })
    }
}

impl<B: Backend> EnvelopeObject<B> for CrossDomainUserKey<B> {
    const OBJECT_TYPE: &'static str = "cdk";

    fn write_fields(&self, w: &mut Writer<'_, B>) {
        w.g2("k0", &self.k0);
        w.object("d", |w| {
            for (a, e) in &self.d {
                w.g1(a.as_str(), e);
            }
        });
        w.g1("db", &self.db);
    }

    fn read_fields(r: &Reader<'_, B>) -> Result<Self, EnvelopeError> {
        Ok(CrossDomainUserKey {
            backend: r.backend().clone(),
            k0: r.g2("k0")?,
            d: read_attr_map(r, "d", |o, k| o.g1(k))?,
            db: r.g1("db")?,
        })
    }
}

impl<B: Backend> EnvelopeObject<B> for TargetKey<B> {
    const OBJECT_TYPE: &'static str = "tpk";

    fn write_fields(&self, w: &mut Writer<'_, B>) {
        w.g2("g2", &self.g2);
        if let Some(g1) = &self.g1 {
            w.g1("g1", g1);
        }
    }

    fn read_fields(r: &Reader<'_, B>) -> Result<Self, EnvelopeError> {
        Ok(TargetKey {
            g2: r.g2("g2")?,
            g1: if r.has("g1") { Some(r.g1("g1")?) } else { None },
        })
    }
}
