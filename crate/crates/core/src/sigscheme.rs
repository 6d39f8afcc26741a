//! Signatures and content hashing.
//!
//! Two interchangeable schemes sit behind [`KeyPair`]: Ed25519, and a keyed
//! HMAC-SHA256 mode for fast simulation runs. In MAC mode the verification
//! key equals the signing key, so it only models unforgeability against the
//! simulated adversary, which never sees correct processes' keys.

use std::fmt;

use ed25519_dalek::{Signer, Verifier};
use hmac::{Hmac, Mac};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::process::ProcessId;

type HmacSha256 = Hmac<Sha256>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Ed25519,
    Mac,
}

/// A 256-bit SHA-256 digest identifying a transaction.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransactionRef(pub [u8; 32]);

impl TransactionRef {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, String> {
        let bytes = hex::decode(s).map_err(|e| e.to_string())?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| "transaction ref must be 32 bytes".to_string())?;
        Ok(TransactionRef(arr))
    }

    /// First 8 hex digits, for logs.
    pub fn short(&self) -> String {
        hex::encode(&self.0[..4])
    }
}

impl fmt::Debug for TransactionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tx:{}", self.short())
    }
}

impl fmt::Display for TransactionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for TransactionRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for TransactionRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        TransactionRef::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

pub fn content_hash(message: &[u8]) -> TransactionRef {
    TransactionRef(Sha256::digest(message).into())
}

/// Opaque signature bytes: 64 for Ed25519, 32 for MAC mode.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature(pub Vec<u8>);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sig:{}", hex::encode(&self.0[..self.0.len().min(4)]))
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s)
            .map(Signature)
            .map_err(serde::de::Error::custom)
    }
}

/// Verification key, tagged with its scheme.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PublicKey {
    pub scheme: Scheme,
    #[serde(with = "hex_bytes")]
    pub bytes: Vec<u8>,
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{}", self.scheme, hex::encode(&self.bytes))
    }
}

impl PublicKey {
    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone)]
enum SecretKey {
    Ed25519(ed25519_dalek::SigningKey),
    Mac([u8; 32]),
}

/// A process's signing key and the matching verification key.
#[derive(Clone)]
pub struct KeyPair {
    secret: SecretKey,
    public: PublicKey,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn from_seed(scheme: Scheme, seed: [u8; 32]) -> Self {
        match scheme {
            Scheme::Ed25519 => {
                let sk = ed25519_dalek::SigningKey::from_bytes(&seed);
                let public = PublicKey {
                    scheme,
                    bytes: sk.verifying_key().to_bytes().to_vec(),
                };
                KeyPair {
                    secret: SecretKey::Ed25519(sk),
                    public,
                }
            }
            Scheme::Mac => {
                let key: [u8; 32] = Sha256::digest(seed).into();
                KeyPair {
                    secret: SecretKey::Mac(key),
                    public: PublicKey {
                        scheme,
                        bytes: key.to_vec(),
                    },
                }
            }
        }
    }

    /// Per-process key derived from a run-wide seed.
    pub fn derive(scheme: Scheme, run_seed: u64, p: ProcessId) -> Self {
        let mut h = Sha256::new();
        h.update(b"ksat-key");
        h.update(run_seed.to_be_bytes());
        h.update(p.0.to_be_bytes());
        KeyPair::from_seed(scheme, h.finalize().into())
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        match &self.secret {
            SecretKey::Ed25519(sk) => Signature(sk.sign(message).to_bytes().to_vec()),
            SecretKey::Mac(key) => Signature(mac(key, message)),
        }
    }
}

fn mac(key: &[u8; 32], message: &[u8]) -> Vec<u8> {
    let mut m = HmacSha256::new_from_slice(key).expect("any key length");
    m.update(message);
    m.finalize().into_bytes().to_vec()
}

pub fn sign(keys: &KeyPair, message: &[u8]) -> Signature {
    keys.sign(message)
}

pub fn verify(public: &PublicKey, message: &[u8], sig: &Signature) -> bool {
    match public.scheme {
        Scheme::Ed25519 => {
            let Ok(pk_bytes) = <[u8; 32]>::try_from(public.bytes.as_slice()) else {
                return false;
            };
            let Ok(vk) = ed25519_dalek::VerifyingKey::from_bytes(&pk_bytes) else {
                return false;
            };
            let Ok(sig) = ed25519_dalek::Signature::from_slice(&sig.0) else {
                return false;
            };
            vk.verify(message, &sig).is_ok()
        }
        Scheme::Mac => {
            let Ok(key) = <[u8; 32]>::try_from(public.bytes.as_slice()) else {
                return false;
            };
            let mut m = HmacSha256::new_from_slice(&key).expect("any key length");
            m.update(message);
            m.verify_slice(&sig.0).is_ok()
        }
    }
}

/// Public keys of every process, indexed by process id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyDirectory(pub Vec<PublicKey>);

impl KeyDirectory {
    pub fn get(&self, p: ProcessId) -> Option<&PublicKey> {
        self.0.get(p.index())
    }

    /// `false` for unknown processes.
    pub fn verify(&self, signer: ProcessId, message: &[u8], sig: &Signature) -> bool {
        self.get(signer)
            .is_some_and(|pk| verify(pk, message, sig))
    }
}
