//! Reference HMAC-SHA256 assembled from the bare hash, plus the token
//! layouts rebuilt by hand.

use sha2::{Digest, Sha256};

const BLOCK: usize = 64;

pub fn hmac_sha256(key: &[u8], message: &[u8]) -> [u8; 32] {
    let mut k = [0u8; BLOCK];
    if key.len() > BLOCK {
        k[..32].copy_from_slice(&Sha256::digest(key));
    } else {
        k[..key.len()].copy_from_slice(key);
    }
    let ipad: Vec<u8> = k.iter().map(|b| b ^ 0x36).collect();
    let opad: Vec<u8> = k.iter().map(|b| b ^ 0x5c).collect();

    let mut inner = Sha256::new();
    inner.update(&ipad);
    inner.update(message);
    let inner = inner.finalize();

    let mut outer = Sha256::new();
    outer.update(&opad);
    outer.update(inner);
    outer.finalize().into()
}

fn lp(out: &mut Vec<u8>, field: &[u8]) {
    out.extend_from_slice(&u32::try_from(field.len()).unwrap().to_be_bytes());
    out.extend_from_slice(field);
}

pub fn consentpass(isp_key: &[u8], isp_id: &str, line_id: &str, epoch: u64) -> [u8; 32] {
    let mut msg = Vec::new();
    lp(&mut msg, isp_id.as_bytes());
    lp(&mut msg, line_id.as_bytes());
    msg.extend_from_slice(&epoch.to_be_bytes());
    hmac_sha256(isp_key, &msg)
}

pub fn martechpass(cp: &[u8; 32], publisher: &str) -> [u8; 32] {
    let mut msg = Vec::new();
    lp(&mut msg, b"mar");
    lp(&mut msg, publisher.as_bytes());
    hmac_sha256(cp, &msg)
}

pub fn adtechpass(cp: &[u8; 32]) -> [u8; 32] {
    let mut msg = Vec::new();
    lp(&mut msg, b"adt");
    hmac_sha256(cp, &msg)
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
