//! Derivation of the consentpass and the two downstream tokens.
//!
//! All derivations are HMAC-SHA256 over a length-prefixed canonical
//! serialization:
//!
//! ```text
//! consentpass = HMAC(isp_key,     lp(isp_id) || lp(line_id) || u64be(epoch))
//! martechpass = HMAC(consentpass, lp("mar")  || lp(publisher_id))
//! adtechpass  = HMAC(consentpass, lp("adt"))
//! ```
//!
//! where `lp(x)` is a big-endian `u32` byte length followed by the bytes.

use std::fmt;
use std::str::FromStr;

use hmac::{Hmac, Mac};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::Sha256;

use crate::eligibility::EligibilityTable;
use crate::time::{Span, Timestamp};

type HmacSha256 = Hmac<Sha256>;

/// Token rotation period and cookie validity.
pub const VALIDITY_DAYS: i64 = 90;

const MARTECH_TAG: &[u8] = b"mar";
const ADTECH_TAG: &[u8] = b"adt";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenError {
    #[error("timestamp {timestamp} precedes genesis {genesis}")]
    InvalidTime {
        timestamp: Timestamp,
        genesis: Timestamp,
    },
    #[error("ISP {0:?} does not participate")]
    NotEligible(String),
    #[error("invalid publisher id {0:?}")]
    InvalidPublisher(String),
    #[error("invalid connection identity: {0}")]
    InvalidIdentity(&'static str),
    #[error("empty signing key")]
    EmptyKey,
    #[error("malformed token: {0}")]
    Malformed(String),
}

/// The subscriber connection a consentpass is rooted in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConnectionIdentity {
    pub isp_id: String,
    pub line_id: String,
}

impl ConnectionIdentity {
    pub fn new(isp_id: impl Into<String>, line_id: impl Into<String>) -> Result<Self, TokenError> {
        let id = ConnectionIdentity {
            isp_id: isp_id.into(),
            line_id: line_id.into(),
        };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<(), TokenError> {
        if self.line_id.is_empty() {
            return Err(TokenError::InvalidIdentity("line_id is empty"));
        }
        if self.isp_id.is_empty() {
            return Err(TokenError::InvalidIdentity("isp_id is empty"));
        }
        Ok(())
    }

    /// Stable key used by the consent engine for this subscriber.
    pub fn user_key(&self) -> String {
        format!("{}/{}", self.isp_id, self.line_id)
    }
}

/// Index of a 90-day rotation window counted from a configured genesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Epoch(pub u64);

impl Epoch {
    pub fn start(self, genesis: Timestamp) -> Timestamp {
        genesis + Span::days(VALIDITY_DAYS * self.0 as i64)
    }

    pub fn end(self, genesis: Timestamp) -> Timestamp {
        Epoch(self.0 + 1).start(genesis)
    }
}

pub fn epoch_of(timestamp: Timestamp, genesis: Timestamp) -> Result<Epoch, TokenError> {
    if timestamp < genesis {
        return Err(TokenError::InvalidTime { timestamp, genesis });
    }
    let window = Span::days(VALIDITY_DAYS).0;
    Ok(Epoch(((timestamp - genesis).0 / window) as u64))
}

/// A 256-bit opaque token, rendered as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(pub [u8; 32]);

impl Token {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Token({})", self.to_hex())
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Token {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|e| TokenError::Malformed(e.to_string()))?;
        Ok(Token(out))
    }
}

impl Serialize for Token {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Token {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Consentpass {
    pub value: Token,
    pub epoch: Epoch,
}

/// The pair handed to the page once every gate has passed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPass {
    pub martechpass: Token,
    pub adtechpass: Token,
    pub publisher_id: String,
    pub epoch: Epoch,
}

fn push_field(buf: &mut Vec<u8>, field: &[u8]) {
    buf.extend_from_slice(&(field.len() as u32).to_be_bytes());
    buf.extend_from_slice(field);
}

fn keyed_hash(key: &[u8], message: &[u8]) -> Token {
    let mut mac = HmacSha256::new_from_slice(key).expect("HMAC can take key of any size");
    mac.update(message);
    Token(mac.finalize().into_bytes().into())
}

/// Canonical byte layout hashed into the consentpass.
pub fn consentpass_message(identity: &ConnectionIdentity, epoch: Epoch) -> Vec<u8> {
    let mut buf = Vec::with_capacity(16 + identity.isp_id.len() + identity.line_id.len());
    push_field(&mut buf, identity.isp_id.as_bytes());
    push_field(&mut buf, identity.line_id.as_bytes());
    buf.extend_from_slice(&epoch.0.to_be_bytes());
    buf
}

pub fn derive_consentpass(
    identity: &ConnectionIdentity,
    eligibility: &EligibilityTable,
    isp_key: &[u8],
    epoch: Epoch,
) -> Result<Consentpass, TokenError> {
    identity.validate()?;
    if !eligibility.is_eligible(&identity.isp_id) {
        return Err(TokenError::NotEligible(identity.isp_id.clone()));
    }
    if isp_key.is_empty() {
        return Err(TokenError::EmptyKey);
    }
    Ok(Consentpass {
        value: keyed_hash(isp_key, &consentpass_message(identity, epoch)),
        epoch,
    })
}

fn validate_publisher(publisher_id: &str) -> Result<(), TokenError> {
    let ok = !publisher_id.is_empty()
        && publisher_id.contains('.')
        && !publisher_id.starts_with('.')
        && !publisher_id.ends_with('.')
        && publisher_id
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'.');
    if ok {
        Ok(())
    } else {
        Err(TokenError::InvalidPublisher(publisher_id.to_string()))
    }
}

pub fn derive_martechpass(cp: &Consentpass, publisher_id: &str) -> Result<Token, TokenError> {
    validate_publisher(publisher_id)?;
    let mut msg = Vec::with_capacity(11 + publisher_id.len());
    push_field(&mut msg, MARTECH_TAG);
    push_field(&mut msg, publisher_id.as_bytes());
    Ok(keyed_hash(cp.value.as_bytes(), &msg))
}

pub fn derive_adtechpass(cp: &Consentpass) -> Token {
    let mut msg = Vec::with_capacity(7);
    push_field(&mut msg, ADTECH_TAG);
    keyed_hash(cp.value.as_bytes(), &msg)
}

pub fn derive_token_pass(cp: &Consentpass, publisher_id: &str) -> Result<TokenPass, TokenError> {
    Ok(TokenPass {
        martechpass: derive_martechpass(cp, publisher_id)?,
        adtechpass: derive_adtechpass(cp),
        publisher_id: publisher_id.to_string(),
        epoch: cp.epoch,
    })
}
