//! The three-phase scheme: radio credential check, optical challenge-response,
//! then the registration authority's check and token issuance.
//!
//! Time is simulated in seconds from the start of the session. The radio link
//! is reliable and confidential with a fixed one-way latency. The camera
//! starts recording when the challenge goes out and records for a fixed
//! window; decoding finishes `t_c` after the window closes.

mod credential;
mod session;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{
    self, sample_trace, ChannelError, ChannelParams, EmissionSchedule, Emitter, RoiOptions, Scene,
};
use crate::decoder::{decode_with, DecodeResult, DecoderConfig};
use crate::frame::{symbols_to_string, ClassIndex, ClassLabel, SecurityFrame, Symbol, CLASS_COUNT};
use crate::rng::SeedPath;
use crate::timing::TimingParams;
use crate::VehicleId;

pub use credential::{
    AuthToken, Presentation, RegistrationAuthority, Tag, Validity, VehicleCredential,
};
pub use session::{
    audit_transcript, parse_transcript, AuditError, AuditSummary, AuthSession, Message,
    MessageKind, Party, ProtocolError, RejectReason, SessionState,
};

/// A challenge sent to one vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Challenge {
    pub challenge_id: u128,
    pub class: ClassIndex,
    pub issued_at: f64,
    pub deadline: f64,
    pub target: VehicleId,
}

/// Roadside unit settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsuConfig {
    /// How long the camera records after issuing a challenge.
    pub capture_duration_s: f64,
    /// One-way radio latency.
    pub nlos_latency_s: f64,
    pub decoder: DecoderConfig,
}

impl Default for RsuConfig {
    fn default() -> Self {
        Self {
            capture_duration_s: 2.0,
            nlos_latency_s: 0.05,
            decoder: DecoderConfig::default(),
        }
    }
}

/// How a vehicle answers a challenge on the optical channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Responder {
    /// Flashes the frame for the challenged class.
    Honest,
    /// Flashes a previously recorded symbol sequence, whatever the challenge.
    Replay(Vec<Symbol>),
    /// Flashes a uniformly random valid frame.
    Guess,
    /// No usable emitter.
    Dark,
}

/// A vehicle (honest or not) taking part in a session.
#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub credential: VehicleCredential,
    pub responder: Responder,
    /// Delay between receiving the challenge and the first flash.
    pub reaction_delay_s: f64,
}

impl Vehicle {
    pub const DEFAULT_REACTION_DELAY_S: f64 = 0.3;

    pub fn honest(credential: VehicleCredential) -> Self {
        Self {
            credential,
            responder: Responder::Honest,
            reaction_delay_s: Self::DEFAULT_REACTION_DELAY_S,
        }
    }

    pub fn id(&self) -> VehicleId {
        self.credential.vehicle_id
    }
}

/// First factor. Returns the resulting state, `NlosVerified` or `Rejected`.
pub fn nlos_authenticate(
    session: &mut AuthSession,
    credential: &VehicleCredential,
    ra: &RegistrationAuthority,
    nonce: u64,
    now: f64,
    latency: f64,
) -> Result<SessionState, ProtocolError> {
    session.require(SessionState::Init)?;
    let p = credential.present(nonce, now);
    session.log(
        now,
        Party::Vehicle,
        Party::Ra,
        MessageKind::Credential,
        format!(
            "vehicle={} nonce={nonce:016x} tag={:02x}{:02x}{:02x}{:02x}",
            p.vehicle_id.0, p.tag[0], p.tag[1], p.tag[2], p.tag[3]
        ),
    );
    let at = now + latency;
    match ra.verify(&p, at) {
        Ok(()) => {
            session.advance(SessionState::NlosVerified)?;
            session.log(
                at,
                Party::Ra,
                Party::Rsu,
                MessageKind::NlosAccept,
                format!("vehicle={}", p.vehicle_id.0),
            );
        }
        Err(reason) => session.reject(at, reason),
    }
    Ok(session.state())
}

/// Draws a fresh challenge: uniform class, random 128-bit id, deadline at
/// `now + d / v`.
pub fn issue_challenge<R: Rng>(
    session: &mut AuthSession,
    rng: &mut R,
    timing: &TimingParams,
    now: f64,
) -> Result<Challenge, ProtocolError> {
    session.require(SessionState::NlosVerified)?;
    let class =
        ClassIndex::new(rng.random_range(1..=u32::from(CLASS_COUNT))).expect("drawn in range");
    let challenge_id: u128 = rng.random();
    let window = timing.auth_window().unwrap_or(0.0);
    let ch = Challenge {
        challenge_id,
        class,
        issued_at: now,
        deadline: now + window,
        target: session.vehicle_id,
    };
    session.advance(SessionState::ChallengeIssued)?;
    session.log(
        now,
        Party::Rsu,
        Party::Vehicle,
        MessageKind::Challenge,
        format!(
            "id={challenge_id:032x} class={} deadline={}",
            class.get(),
            ch.deadline
        ),
    );
    Ok(ch)
}

/// Sends an old challenge again with the same id and class. Only a broken
/// RSU does this; it exists to show what challenge freshness buys.
pub fn reissue_challenge(
    session: &mut AuthSession,
    old: &Challenge,
    timing: &TimingParams,
    now: f64,
) -> Result<Challenge, ProtocolError> {
    session.require(SessionState::NlosVerified)?;
    let window = timing.auth_window().unwrap_or(0.0);
    let ch = Challenge {
        issued_at: now,
        deadline: now + window,
        target: session.vehicle_id,
        ..*old
    };
    session.advance(SessionState::ChallengeIssued)?;
    session.log(
        now,
        Party::Rsu,
        Party::Vehicle,
        MessageKind::Challenge,
        format!(
            "id={:032x} class={} deadline={}",
            ch.challenge_id,
            ch.class.get(),
            ch.deadline
        ),
    );
    Ok(ch)
}

/// The honest answer: the challenged frame, starting `reaction_delay` after
/// the challenge is received.
pub fn vehicle_respond(
    ch: &Challenge,
    flash_s: f64,
    received_at: f64,
    reaction_delay_s: f64,
) -> EmissionSchedule {
    channel::build_schedule(
        &SecurityFrame::encode(ch.class),
        flash_s,
        received_at + reaction_delay_s,
    )
    .expect("flash duration validated with the timing parameters")
}

/// Logs the RSU's decode and moves to `Decoded`.
pub fn record_decode(
    session: &mut AuthSession,
    result: &DecodeResult,
    at: f64,
) -> Result<(), ProtocolError> {
    session.require(SessionState::ChallengeIssued)?;
    session.advance(SessionState::Decoded)?;
    session.log(
        at,
        Party::Rsu,
        Party::Ra,
        MessageKind::DecodeReport,
        format!(
            "label={} score={:.4} at={at}",
            result.label.numeric_code(),
            result.score
        ),
    );
    Ok(())
}

/// Second factor check. A token is issued only if the decoded label is the
/// challenged class and decoding finished before the deadline.
pub fn check_phase(
    session: &mut AuthSession,
    result: &DecodeResult,
    ch: &Challenge,
    decoded_at: f64,
    ra: &RegistrationAuthority,
    token_id: u128,
) -> Result<SessionState, ProtocolError> {
    session.require(SessionState::Decoded)?;
    let verdict = match result.label {
        ClassLabel::Valid(c) if c == ch.class => {
            if decoded_at < ch.deadline {
                Ok(())
            } else {
                Err(RejectReason::Late)
            }
        }
        ClassLabel::Valid(_) => Err(RejectReason::WrongClass),
        ClassLabel::RandomFlash | ClassLabel::AllZero => Err(RejectReason::Malformed),
    };
    match verdict {
        Ok(()) => {
            let token = ra.mint_token(token_id, session.vehicle_id, decoded_at);
            session.advance(SessionState::TokenIssued)?;
            session.log(
                decoded_at,
                Party::Ra,
                Party::Vehicle,
                MessageKind::Token,
                format!("id={token_id:032x} expires={}", token.expires_at),
            );
            session.token = Some(token);
        }
        Err(reason) => session.reject(decoded_at, reason),
    }
    Ok(session.state())
}

/// Everything a finished session produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub session: AuthSession,
    pub challenge: Option<Challenge>,
    /// What the vehicle actually flashed, if it got that far.
    pub emitted: Option<EmissionSchedule>,
    pub decode: Option<DecodeResult>,
    /// When decoding finished, session time.
    pub decoded_at: Option<f64>,
}

impl SessionRecord {
    pub fn state(&self) -> SessionState {
        self.session.state()
    }

    pub fn token_issued(&self) -> bool {
        self.session.token.is_some()
    }

    /// Label the camera should have produced for what was flashed.
    pub fn emitted_label(&self) -> Option<ClassLabel> {
        let sched = self.emitted.as_ref()?;
        let symbols = sched.symbols();
        Some(match <[Symbol; 7]>::try_from(symbols.as_slice()) {
            Ok(s) => crate::frame::decode_symbols(&s),
            Err(_) if symbols.iter().all(|s| s.is_off()) => ClassLabel::AllZero,
            Err(_) => ClassLabel::RandomFlash,
        })
    }
}

/// Radio phase plus challenge issuance and the vehicle's flash schedule.
fn open_session(
    vehicle: &Vehicle,
    rsu: &RsuConfig,
    ra: &RegistrationAuthority,
    timing: &TimingParams,
    root: SeedPath,
    reuse: Option<&Challenge>,
) -> SessionRecord {
    let mut session = AuthSession::new(vehicle.id());
    let nonce = root.named("nlos").seed();
    let state = nlos_authenticate(
        &mut session,
        &vehicle.credential,
        ra,
        nonce,
        0.0,
        rsu.nlos_latency_s,
    )
    .expect("fresh session starts in Init");
    let mut record = SessionRecord {
        session,
        challenge: None,
        emitted: None,
        decode: None,
        decoded_at: None,
    };
    if state != SessionState::NlosVerified {
        return record;
    }
    let now = rsu.nlos_latency_s;
    let ch = match reuse {
        None => issue_challenge(
            &mut record.session,
            &mut root.named("challenge").rng(),
            timing,
            now,
        )
        .expect("session is NlosVerified"),
        Some(old) => reissue_challenge(&mut record.session, old, timing, now)
            .expect("session is NlosVerified"),
    };
    let received_at = now + rsu.nlos_latency_s;
    let start = received_at + vehicle.reaction_delay_s;
    let schedule = match &vehicle.responder {
        Responder::Honest => {
            vehicle_respond(&ch, timing.flash_s, received_at, vehicle.reaction_delay_s)
        }
        Responder::Replay(symbols) => {
            EmissionSchedule::from_symbols(symbols, timing.flash_s, start)
                .expect("flash duration validated")
        }
        Responder::Guess => {
            let class = ClassIndex::new(
                root.named("guess")
                    .rng()
                    .random_range(1..=u32::from(CLASS_COUNT)),
            )
            .expect("drawn in range");
            channel::build_schedule(&SecurityFrame::encode(class), timing.flash_s, start)
                .expect("flash duration validated")
        }
        Responder::Dark => EmissionSchedule::dark(timing.flash_s),
    };
    let shown = if schedule.slots().is_empty() {
        alloc::string::String::from("none")
    } else {
        symbols_to_string(&schedule.symbols())
    };
    record.session.log(
        schedule.start().unwrap_or(start),
        Party::Vehicle,
        Party::Rsu,
        MessageKind::Flash,
        format!("frame={shown}"),
    );
    record.challenge = Some(ch);
    record.emitted = Some(schedule);
    record
}

/// Decode report and check phase for an opened session.
fn close_session(
    opened: &mut SessionRecord,
    result: DecodeResult,
    rsu: &RsuConfig,
    ra: &RegistrationAuthority,
    timing: &TimingParams,
    root: SeedPath,
) {
    let ch = opened
        .challenge
        .expect("closing a session that issued a challenge");
    let at = ch.issued_at + rsu.capture_duration_s + timing.compute_s;
    record_decode(&mut opened.session, &result, at).expect("session is ChallengeIssued");
    let token_id: u128 = root.named("token").rng().random();
    check_phase(&mut opened.session, &result, &ch, at, ra, token_id).expect("session is Decoded");
    opened.decode = Some(result);
    opened.decoded_at = Some(at);
}

/// Runs one vehicle through all three phases. Deterministic in `seed`.
///
/// `channel.seed` is ignored: the camera's noise stream is split from `seed`.
pub fn run_session(
    vehicle: &Vehicle,
    rsu: &RsuConfig,
    ra: &RegistrationAuthority,
    channel: &ChannelParams,
    timing: &TimingParams,
    seed: u64,
) -> Result<SessionRecord, ChannelError> {
    run_session_inner(vehicle, rsu, ra, channel, timing, seed, None)
}

/// [`run_session`] with an RSU that re-sends `old` instead of drawing a fresh
/// challenge.
pub fn run_session_reusing_challenge(
    vehicle: &Vehicle,
    old: &Challenge,
    rsu: &RsuConfig,
    ra: &RegistrationAuthority,
    channel: &ChannelParams,
    timing: &TimingParams,
    seed: u64,
) -> Result<SessionRecord, ChannelError> {
    run_session_inner(vehicle, rsu, ra, channel, timing, seed, Some(old))
}

fn run_session_inner(
    vehicle: &Vehicle,
    rsu: &RsuConfig,
    ra: &RegistrationAuthority,
    channel: &ChannelParams,
    timing: &TimingParams,
    seed: u64,
    reuse: Option<&Challenge>,
) -> Result<SessionRecord, ChannelError> {
    let root = SeedPath::new(seed);
    let mut record = open_session(vehicle, rsu, ra, timing, root, reuse);
    let Some(ch) = record.challenge else {
        return Ok(record);
    };
    let schedule = record
        .emitted
        .as_ref()
        .expect("set with the challenge")
        .shifted(-ch.issued_at);
    let params = ChannelParams {
        seed: root.named("channel").seed(),
        ..*channel
    };
    let trace = sample_trace(&schedule, &params, rsu.capture_duration_s)?;
    let result = decode_with(&trace, timing.flash_s, channel.mirror_view, &rsu.decoder);
    close_session(&mut record, result, rsu, ra, timing, root);
    Ok(record)
}

/// A vehicle in a multi-vehicle scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Participant {
    pub vehicle: Vehicle,
    pub lane_offset_m: f64,
    pub distance_m: f64,
}

/// Runs concurrent sessions for every participant in front of one camera.
/// Each vehicle's protocol randomness is split from `seed` by vehicle id, so
/// adding or removing other vehicles leaves it unchanged.
#[allow(clippy::too_many_arguments)]
pub fn run_scene(
    participants: &[Participant],
    camera_height_m: f64,
    rsu: &RsuConfig,
    ra: &RegistrationAuthority,
    channel: &ChannelParams,
    timing: &TimingParams,
    seed: u64,
    roi: &RoiOptions,
) -> Result<Vec<SessionRecord>, ChannelError> {
    let scene_root = SeedPath::new(seed);
    let origin = rsu.nlos_latency_s;
    let mut opened: Vec<SessionRecord> = Vec::with_capacity(participants.len());
    let mut emitters = Vec::new();
    for p in participants {
        let root = scene_root.child(p.vehicle.id().0);
        let o = open_session(&p.vehicle, rsu, ra, timing, root, None);
        let schedule = o.emitted.as_ref().map_or_else(
            || EmissionSchedule::dark(timing.flash_s),
            |s| s.shifted(-origin),
        );
        emitters.push(Emitter {
            vehicle_id: p.vehicle.id(),
            lane_offset_m: p.lane_offset_m,
            distance_m: p.distance_m,
            schedule,
        });
        opened.push(o);
    }
    let scene = Scene {
        emitters,
        camera_height_m,
    };
    let params = ChannelParams {
        seed: scene_root.named("channel").seed(),
        ..*channel
    };
    let rois = channel::extract_rois(&scene, &params, rsu.capture_duration_s, roi)?;
    for (record, p) in opened.iter_mut().zip(participants) {
        if record.challenge.is_none() {
            continue;
        }
        let trace = &rois[&p.vehicle.id()];
        let result = decode_with(trace, timing.flash_s, channel.mirror_view, &rsu.decoder);
        close_session(
            record,
            result,
            rsu,
            ra,
            timing,
            scene_root.child(p.vehicle.id().0),
        );
    }
    Ok(opened)
}

/// Lockout after repeated optical failures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FailureLedger {
    /// `None` disables lockout.
    pub max_failures: Option<u32>,
    failures: BTreeMap<VehicleId, u32>,
}

impl FailureLedger {
    pub const DEFAULT_MAX_FAILURES: u32 = 3;

    pub fn new(max_failures: Option<u32>) -> Self {
        Self {
            max_failures,
            failures: BTreeMap::new(),
        }
    }

    pub fn is_locked(&self, id: VehicleId) -> bool {
        self.max_failures
            .is_some_and(|k| self.failures.get(&id).copied().unwrap_or(0) >= k)
    }

    pub fn failures(&self, id: VehicleId) -> u32 {
        self.failures.get(&id).copied().unwrap_or(0)
    }

    /// Counts optical failures; a token resets the count.
    pub fn record(&mut self, record: &SessionRecord) {
        let id = record.session.vehicle_id;
        match record.state() {
            SessionState::TokenIssued => {
                self.failures.remove(&id);
            }
            SessionState::Rejected(r) if r.is_los_failure() => {
                *self.failures.entry(id).or_insert(0) += 1
            }
            _ => {}
        }
    }

    /// [`run_session`] behind the lockout check.
    pub fn run_session(
        &mut self,
        vehicle: &Vehicle,
        rsu: &RsuConfig,
        ra: &RegistrationAuthority,
        channel: &ChannelParams,
        timing: &TimingParams,
        seed: u64,
    ) -> Result<SessionRecord, ChannelError> {
        if self.is_locked(vehicle.id()) {
            let mut session = AuthSession::new(vehicle.id());
            session.log(
                0.0,
                Party::Vehicle,
                Party::Ra,
                MessageKind::Credential,
                format!("vehicle={}", vehicle.id().0),
            );
            session.reject(rsu.nlos_latency_s, RejectReason::LockedOut);
            return Ok(SessionRecord {
                session,
                challenge: None,
                emitted: None,
                decode: None,
                decoded_at: None,
            });
        }
        let record = run_session(vehicle, rsu, ra, channel, timing, seed)?;
        self.record(&record);
        Ok(record)
    }
}

#[cfg(test)]
mod tests;
