//! Two-factor vehicle-to-infrastructure authentication over a radio link and
//! an optical camera link.
//!
//! A vehicle first proves it holds a registered credential over the radio
//! (non-line-of-sight) channel. The roadside unit then sends a random
//! challenge class, which the vehicle answers by flashing its two headlights
//! in a 7-flash security frame. A camera decodes the flashes, and a token is
//! issued only if both factors check out before the vehicle leaves the
//! camera's field of view.
//!
//! This crate is `no_std` (it needs `alloc`) and contains no IO.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod adversary;
pub mod channel;
pub mod decoder;
pub mod frame;
pub mod protocol;
pub mod rng;
pub mod stats;
pub mod timing;

use core::fmt;

/// Opaque vehicle identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VehicleId(pub u64);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "veh-{}", self.0)
    }
}

pub use channel::{ChannelParams, EmissionSchedule, LightingPreset, LuminanceTrace};
pub use decoder::{decode, DecodeResult, DecoderConfig};
pub use frame::{ClassIndex, ClassLabel, SecurityFrame, Symbol};
pub use timing::TimingParams;
