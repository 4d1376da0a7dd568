//! Registration authority records, credential checks and tokens.
//!
//! Real deployments use a PKI; here a credential is a 256-bit secret shared
//! between the vehicle and the registration authority, and proofs are
//! HMAC-SHA256 tags.

use alloc::collections::BTreeMap;

use hmac::{Hmac, Mac};
use sha2::Sha256;

use super::RejectReason;
use crate::VehicleId;

type HmacSha256 = Hmac<Sha256>;

pub type Tag = [u8; 32];

fn mac(key: &[u8]) -> HmacSha256 {
    HmacSha256::new_from_slice(key).expect("HMAC accepts keys of any length")
}

fn keyed_tag(key: &[u8], domain: &[u8], parts: &[&[u8]]) -> Tag {
    let mut m = mac(key);
    m.update(domain);
    for p in parts {
        m.update(&(p.len() as u64).to_be_bytes());
        m.update(p);
    }
    m.finalize().into_bytes().into()
}

fn verify_tag(key: &[u8], domain: &[u8], parts: &[&[u8]], tag: &Tag) -> bool {
    let mut m = mac(key);
    m.update(domain);
    for p in parts {
        m.update(&(p.len() as u64).to_be_bytes());
        m.update(p);
    }
    m.verify_slice(tag).is_ok()
}

/// Half-open validity interval `[start, end)`, in session seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub start: f64,
    pub end: f64,
}

impl Validity {
    pub const ALWAYS: Validity = Validity {
        start: f64::NEG_INFINITY,
        end: f64::INFINITY,
    };

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }
}

/// What the vehicle holds.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleCredential {
    pub vehicle_id: VehicleId,
    pub secret: [u8; 32],
    pub validity: Validity,
}

/// Proof of possession sent over the radio link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Presentation {
    pub vehicle_id: VehicleId,
    pub nonce: u64,
    pub sent_at: f64,
    pub tag: Tag,
}

impl VehicleCredential {
    pub fn present(&self, nonce: u64, sent_at: f64) -> Presentation {
        Presentation {
            vehicle_id: self.vehicle_id,
            nonce,
            sent_at,
            tag: keyed_tag(
                &self.secret,
                b"nlos-presentation",
                &[
                    &self.vehicle_id.0.to_be_bytes(),
                    &nonce.to_be_bytes(),
                    &sent_at.to_bits().to_be_bytes(),
                ],
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Record {
    secret: [u8; 32],
    validity: Validity,
}

/// Issued after both factors pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuthToken {
    pub token_id: u128,
    pub vehicle_id: VehicleId,
    pub issued_at: f64,
    pub expires_at: f64,
    pub tag: Tag,
}

impl AuthToken {
    fn fields(
        token_id: u128,
        vehicle_id: VehicleId,
        issued_at: f64,
        expires_at: f64,
    ) -> [[u8; 16]; 4] {
        let pad = |b: [u8; 8]| {
            let mut out = [0u8; 16];
            out[8..].copy_from_slice(&b);
            out
        };
        [
            token_id.to_be_bytes(),
            pad(vehicle_id.0.to_be_bytes()),
            pad(issued_at.to_bits().to_be_bytes()),
            pad(expires_at.to_bits().to_be_bytes()),
        ]
    }
}

/// Backend holding enrolled vehicles and the token signing key.
#[derive(Debug, Clone)]
pub struct RegistrationAuthority {
    key: [u8; 32],
    records: BTreeMap<VehicleId, Record>,
    pub token_lifetime_s: f64,
}

impl RegistrationAuthority {
    pub const DEFAULT_TOKEN_LIFETIME_S: f64 = 300.0;

    pub fn new(key: [u8; 32]) -> Self {
        Self {
            key,
            records: BTreeMap::new(),
            token_lifetime_s: Self::DEFAULT_TOKEN_LIFETIME_S,
        }
    }

    /// Registers a vehicle and hands back the credential it should hold.
    pub fn enroll(
        &mut self,
        vehicle_id: VehicleId,
        secret: [u8; 32],
        validity: Validity,
    ) -> VehicleCredential {
        self.records.insert(vehicle_id, Record { secret, validity });
        VehicleCredential {
            vehicle_id,
            secret,
            validity,
        }
    }

    pub fn is_enrolled(&self, vehicle_id: VehicleId) -> bool {
        self.records.contains_key(&vehicle_id)
    }

    /// First factor: the presentation must come from an enrolled vehicle,
    /// inside its validity window, with a tag made from the enrolled secret.
    pub fn verify(&self, p: &Presentation, now: f64) -> Result<(), RejectReason> {
        let record = self
            .records
            .get(&p.vehicle_id)
            .ok_or(RejectReason::UnknownVehicle)?;
        if !record.validity.contains(now) {
            return Err(RejectReason::Expired);
        }
        let ok = verify_tag(
            &record.secret,
            b"nlos-presentation",
            &[
                &p.vehicle_id.0.to_be_bytes(),
                &p.nonce.to_be_bytes(),
                &p.sent_at.to_bits().to_be_bytes(),
            ],
            &p.tag,
        );
        if ok {
            Ok(())
        } else {
            Err(RejectReason::BadTag)
        }
    }

    pub fn mint_token(&self, token_id: u128, vehicle_id: VehicleId, now: f64) -> AuthToken {
        let expires_at = now + self.token_lifetime_s;
        let f = AuthToken::fields(token_id, vehicle_id, now, expires_at);
        AuthToken {
            token_id,
            vehicle_id,
            issued_at: now,
            expires_at,
            tag: keyed_tag(&self.key, b"auth-token", &[&f[0], &f[1], &f[2], &f[3]]),
        }
    }

    pub fn verify_token(&self, token: &AuthToken) -> bool {
        let f = AuthToken::fields(
            token.token_id,
            token.vehicle_id,
            token.issued_at,
            token.expires_at,
        );
        verify_tag(
            &self.key,
            b"auth-token",
            &[&f[0], &f[1], &f[2], &f[3]],
            &token.tag,
        )
    }
}
