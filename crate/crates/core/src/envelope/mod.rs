//! Versioned JSON envelopes for keys and ciphertexts.
//!
//! ```json
//! {"format_version": 1, "backend_id": "debug", "debug_modulus": 101,
//!  "object_type": "ct", "fields": {...}}
//! ```
//!
//! Group elements are their canonical byte encodings as lowercase hex.
//! Matrices are stored as the policy text plus the matrix dump; the dump is
//! recompiled and compared on decode.

mod objects;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::groups::{Backend, BackendId, Bls12Backend, DebugBackend, GroupError};
use crate::policy::{build_matrix, parse_policy, AccessMatrix, PolicyError};

pub use objects::RetainedKey;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvelopeError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown backend {0:?}")]
    UnknownBackend(String),
    #[error("expected object type {expected}, found {found}")]
    WrongObjectType { expected: String, found: String },
    #[error("missing or mistyped field {0}")]
    MissingField(String),
    #[error("field {0} is not lowercase hex")]
    InvalidHex(String),
    #[error("field {field}: {source}")]
    Element { field: String, source: GroupError },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("embedded matrix does not match its policy")]
    MatrixMismatch,
}

impl EnvelopeError {
    pub fn name(&self) -> &'static str {
        match self {
            EnvelopeError::Json(_) => "DecodeError",
            EnvelopeError::UnsupportedVersion(_) => "UnsupportedVersion",
            EnvelopeError::UnknownBackend(_) => "UnknownBackend",
            EnvelopeError::WrongObjectType { .. } => "WrongObjectType",
            EnvelopeError::MissingField(_) => "MissingField",
            EnvelopeError::InvalidHex(_) => "DecodeError",
            EnvelopeError::Element { source, .. } => source.name(),
            EnvelopeError::Group(e) => e.name(),
            EnvelopeError::Policy(e) => e.name(),
            EnvelopeError::MatrixMismatch => "MatrixMismatch",
        }
    }
}

/// Envelope header without the payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub backend_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debug_modulus: Option<u64>,
    pub object_type: String,
}

impl Header {
    pub fn backend(&self) -> Result<BackendId, EnvelopeError> {
        match self.backend_id.as_str() {
            "debug" => Ok(BackendId::Debug),
            "bls12-381" => Ok(BackendId::Bls12_381),
            other => Err(EnvelopeError::UnknownBackend(other.to_string())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    #[serde(flatten)]
    header: Header,
    fields: Map<String, Value>,
}

/// Backends that can be rebuilt from an envelope header.
pub trait EnvelopeBackend: Backend {
    fn debug_modulus(&self) -> Option<u64>;
    fn from_header(header: &Header) -> Result<Self, EnvelopeError>;
}

impl EnvelopeBackend for DebugBackend {
    fn debug_modulus(&self) -> Option<u64> {
        Some(self.modulus())
    }

    fn from_header(header: &Header) -> Result<Self, EnvelopeError> {
        if header.backend()? != BackendId::Debug {
            return Err(GroupError::BackendMismatch.into());
        }
        let p = header
            .debug_modulus
            .ok_or_else(|| EnvelopeError::MissingField("debug_modulus".into()))?;
        Ok(DebugBackend::new(p)?)
    }
}

impl EnvelopeBackend for Bls12Backend {
    fn debug_modulus(&self) -> Option<u64> {
        None
    }

    fn from_header(header: &Header) -> Result<Self, EnvelopeError> {
        if header.backend()? != BackendId::Bls12_381 {
            return Err(GroupError::BackendMismatch.into());
        }
        Ok(Bls12Backend::new())
    }
}

/// An object with an envelope representation.
pub trait EnvelopeObject<B: Backend>: Sized {
    const OBJECT_TYPE: &'static str;
    fn write_fields(&self, w: &mut Writer<'_, B>);
    fn read_fields(r: &Reader<'_, B>) -> Result<Self, EnvelopeError>;
}

/// Serializes to pretty JSON with a trailing newline. Keys are sorted.
pub fn to_json<B: EnvelopeBackend, T: EnvelopeObject<B>>(backend: &B, obj: &T) -> String {
    let mut w = Writer {
        backend,
        map: Map::new(),
    };
    obj.write_fields(&mut w);
    let env = Envelope {
        header: Header {
            format_version: FORMAT_VERSION,
            backend_id: backend.id().as_str().to_string(),
            debug_modulus: backend.debug_modulus(),
            object_type: T::OBJECT_TYPE.to_string(),
        },
        fields: w.map,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("envelope is serializable");
    s.push('\n');
    s
}

pub fn peek_header(text: &str) -> Result<Header, EnvelopeError> {
    let env: Envelope =
        serde_json::from_str(text).map_err(|e| EnvelopeError::Json(e.to_string()))?;
    Ok(env.header)
}

pub fn from_json<B: EnvelopeBackend, T: EnvelopeObject<B>>(
    text: &str,
) -> Result<(B, T), EnvelopeError> {
    let env: Envelope =
        serde_json::from_str(text).map_err(|e| EnvelopeError::Json(e.to_string()))?;
    if env.header.format_version != FORMAT_VERSION {
        return Err(EnvelopeError::UnsupportedVersion(env.header.format_version));
    }
    let backend = B::from_header(&env.header)?;
    if env.header.object_type != T::OBJECT_TYPE {
        return Err(EnvelopeError::WrongObjectType {
            expected: T::OBJECT_TYPE.to_string(),
            found: env.header.object_type,
        });
    }
    let obj = T::read_fields(&Reader {
        backend: &backend,
        map: &env.fields,
        path: String::new(),
    })?;
    Ok((backend, obj))
}

pub struct Writer<'a, B> {
    backend: &'a B,
    map: Map<String, Value>,
}

impl<'a, B: Backend> Writer<'a, B> {
    pub fn backend(&self) -> &'a B {
        self.backend
    }

    pub fn bytes(&mut self, key: &str, bytes: &[u8]) {
        self.map
            .insert(key.into(), Value::String(hex::encode(bytes)));
    }

    pub fn value(&mut self, key: &str, v: Value) {
        self.map.insert(key.into(), v);
    }

    pub fn scalar(&mut self, key: &str, s: &B::Scalar) {
        self.bytes(key, &self.backend.encode_scalar(s));
    }

    pub fn g1(&mut self, key: &str, e: &B::G1) {
        self.bytes(key, &self.backend.encode_g1(e));
    }

    pub fn g2(&mut self, key: &str, e: &B::G2) {
        self.bytes(key, &self.backend.encode_g2(e));
    }

    pub fn gt(&mut self, key: &str, e: &B::Gt) {
        self.bytes(key, &self.backend.encode_gt(e));
    }

    /// Nested object.
    pub fn object(&mut self, key: &str, f: impl FnOnce(&mut Writer<'a, B>)) {
        let mut inner = Writer {
            backend: self.backend,
            map: Map::new(),
        };
        f(&mut inner);
        self.map.insert(key.into(), Value::Object(inner.map));
    }

    pub fn matrix(&mut self, key: &str, m: &AccessMatrix) {
        self.object(key, |w| {
            w.value("policy", Value::String(m.policy().to_string()));
            w.value("dump", Value::String(m.dump()));
        });
    }
}

pub struct Reader<'a, B> {
    backend: &'a B,
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a, B: Backend> Reader<'a, B> {
    pub fn backend(&self) -> &'a B {
        self.backend
    }

    fn field(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &'a String> {
        self.map.keys()
    }

    pub fn has(&self, key: &str) -> bool {
        self.map.get(key).is_some_and(|v| !v.is_null())
    }

    pub fn str(&self, key: &str) -> Result<&'a str, EnvelopeError> {
        self.map
            .get(key)
            .and_then(Value::as_str)
            .ok_or_else(|| EnvelopeError::MissingField(self.field(key)))
    }

    pub fn bytes(&self, key: &str) -> Result<Vec<u8>, EnvelopeError> {
        let s = self.str(key)?;
        if s.bytes().any(|c| c.is_ascii_uppercase()) {
            return Err(EnvelopeError::InvalidHex(self.field(key)));
        }
        hex::decode(s).map_err(|_| EnvelopeError::InvalidHex(self.field(key)))
    }

    fn elem<T>(
        &self,
        key: &str,
        decode: impl FnOnce(&B, &[u8]) -> Result<T, GroupError>,
    ) -> Result<T, EnvelopeError> {
        let bytes = self.bytes(key)?;
        decode(self.backend, &bytes).map_err(|source| EnvelopeError::Element {
            field: self.field(key),
            source,
        })
    }

    pub fn scalar(&self, key: &str) -> Result<B::Scalar, EnvelopeError> {
        self.elem(key, |b, x| b.decode_scalar(x))
    }

    pub fn g1(&self, key: &str) -> Result<B::G1, EnvelopeError> {
        self.elem(key, |b, x| b.decode_g1(x))
    }

    pub fn g2(&self, key: &str) -> Result<B::G2, EnvelopeError> {
        self.elem(key, |b, x| b.decode_g2(x))
    }

    pub fn gt(&self, key: &str) -> Result<B::Gt, EnvelopeError> {
        self.elem(key, |b, x| b.decode_gt(x))
    }

    pub fn object(&self, key: &str) -> Result<Reader<'a, B>, EnvelopeError> {
        let map = self
            .map
            .get(key)
            .and_then(Value::as_object)
            .ok_or_else(|| EnvelopeError::MissingField(self.field(key)))?;
        Ok(Reader {
            backend: self.backend,
            map,
            path: self.field(key),
        })
    }

    pub fn matrix(&self, key: &str) -> Result<AccessMatrix, EnvelopeError> {
        let r = self.object(key)?;
        let m = build_matrix(&parse_policy(r.str("policy")?)?)?;
        if m.dump() != r.str("dump")? {
            return Err(EnvelopeError::MatrixMismatch);
        }
        Ok(m)
    }
}
