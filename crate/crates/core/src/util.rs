//! Small serialisation helpers shared across modules.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// JSON with object keys sorted, for byte-stable persistence and hashing.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serialises to JSON");
    serde_json::to_string(&v).expect("JSON value serialises")
}

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}
