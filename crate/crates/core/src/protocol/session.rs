//! Session state machine and its audit transcript.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use super::credential::AuthToken;
use crate::frame::CLASS_COUNT;
use crate::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectReason {
    UnknownVehicle,
    Expired,
    BadTag,
    /// Too many failed optical responses for this vehicle.
    LockedOut,
    WrongClass,
    Late,
    /// The optical response was not a security frame (random flashing or darkness).
    Malformed,
}

impl RejectReason {
    pub const ALL: [RejectReason; 7] = [
        Self::UnknownVehicle,
        Self::Expired,
        Self::BadTag,
        Self::LockedOut,
        Self::WrongClass,
        Self::Late,
        Self::Malformed,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::UnknownVehicle => "unknown",
            Self::Expired => "expired",
            Self::BadTag => "tag_mismatch",
            Self::LockedOut => "locked_out",
            Self::WrongClass => "wrong_class",
            Self::Late => "late",
            Self::Malformed => "malformed",
        }
    }

    /// Whether this rejection happened on the optical factor.
    pub const fn is_los_failure(self) -> bool {
        matches!(self, Self::WrongClass | Self::Late | Self::Malformed)
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RejectReason {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| AuditError::Malformed(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Init,
    NlosVerified,
    ChallengeIssued,
    Decoded,
    TokenIssued,
    Rejected(RejectReason),
}

impl SessionState {
    pub const fn is_terminal(self) -> bool {
        matches!(self, Self::TokenIssued | Self::Rejected(_))
    }

    /// The transition relation.
    pub fn can_move_to(self, next: SessionState) -> bool {
        use SessionState::*;
        match (self, next) {
            (TokenIssued | Rejected(_), _) => false,
            (_, Rejected(_)) => true,
            (Init, NlosVerified)
            | (NlosVerified, ChallengeIssued)
            | (ChallengeIssued, Decoded)
            | (Decoded, TokenIssued) => true,
            _ => false,
        }
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Init => f.write_str("init"),
            Self::NlosVerified => f.write_str("nlos_verified"),
            Self::ChallengeIssued => f.write_str("challenge_issued"),
            Self::Decoded => f.write_str("decoded"),
            Self::TokenIssued => f.write_str("token_issued"),
            Self::Rejected(r) => write!(f, "rejected:{r}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Vehicle,
    Rsu,
    Ra,
}

impl Party {
    const fn as_str(self) -> &'static str {
        match self {
            Self::Vehicle => "vehicle",
            Self::Rsu => "rsu",
            Self::Ra => "ra",
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Party {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Self::Vehicle, Self::Rsu, Self::Ra]
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| AuditError::Malformed(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    /// Vehicle presents its credential (radio).
    Credential,
    /// RA tells the RSU the first factor passed.
    NlosAccept,
    /// RSU sends the challenge class (radio, confidential).
    Challenge,
    /// Vehicle flashes its headlights (optical). Payload is what was emitted.
    Flash,
    /// RSU forwards its decoded label to the RA.
    DecodeReport,
    Token,
    Reject,
}

impl MessageKind {
    const ALL: [MessageKind; 7] = [
        Self::Credential,
        Self::NlosAccept,
        Self::Challenge,
        Self::Flash,
        Self::DecodeReport,
        Self::Token,
        Self::Reject,
    ];

    const fn as_str(self) -> &'static str {
        match self {
            Self::Credential => "credential",
            Self::NlosAccept => "nlos_accept",
            Self::Challenge => "challenge",
            Self::Flash => "flash",
            Self::DecodeReport => "decode_report",
            Self::Token => "token",
            Self::Reject => "reject",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MessageKind {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| AuditError::Malformed(s.to_string()))
    }
}

/// One transcript entry. Payloads are space-separated `key=value` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub timestamp: f64,
    pub sender: Party,
    pub receiver: Party,
    pub kind: MessageKind,
    pub payload: String,
}

impl Message {
    /// Value of `key` in the payload.
    pub fn field(&self, key: &str) -> Option<&str> {
        self.payload
            .split(' ')
            .find_map(|kv| kv.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.6}\t{}\t{}\t{}\t{}",
            self.timestamp, self.sender, self.receiver, self.kind, self.payload
        )
    }
}

impl FromStr for Message {
    type Err = AuditError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let cols: Vec<&str> = line.split('\t').collect();
        let [ts, sender, receiver, kind, payload] = cols[..] else {
            return Err(AuditError::Malformed(line.to_string()));
        };
        Ok(Self {
            timestamp: ts
                .parse()
                .map_err(|_| AuditError::Malformed(ts.to_string()))?,
            sender: sender.parse()?,
            receiver: receiver.parse()?,
            kind: kind.parse()?,
            payload: payload.to_string(),
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("operation needs state {expected}, session is {actual}")]
    WrongState {
        expected: SessionState,
        actual: SessionState,
    },
    #[error("illegal transition {from} -> {to}")]
    IllegalTransition {
        from: SessionState,
        to: SessionState,
    },
}

/// Protocol state for one vehicle's authentication attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthSession {
    pub vehicle_id: VehicleId,
    state: SessionState,
    transcript: Vec<Message>,
    pub token: Option<AuthToken>,
}

impl AuthSession {
    pub fn new(vehicle_id: VehicleId) -> Self {
        Self {
            vehicle_id,
            state: SessionState::Init,
            transcript: Vec::new(),
            token: None,
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn transcript(&self) -> &[Message] {
        &self.transcript
    }

    pub fn require(&self, expected: SessionState) -> Result<(), ProtocolError> {
        if self.state == expected {
            Ok(())
        } else {
            Err(ProtocolError::WrongState {
                expected,
                actual: self.state,
            })
        }
    }

    pub(crate) fn advance(&mut self, to: SessionState) -> Result<(), ProtocolError> {
        if self.state.can_move_to(to) {
            self.state = to;
            Ok(())
        } else {
            Err(ProtocolError::IllegalTransition {
                from: self.state,
                to,
            })
        }
    }

    pub(crate) fn log(
        &mut self,
        timestamp: f64,
        sender: Party,
        receiver: Party,
        kind: MessageKind,
        payload: String,
    ) {
        self.transcript.push(Message {
            timestamp,
            sender,
            receiver,
            kind,
            payload,
        });
    }

    /// Moves to `Rejected(reason)` and records the rejection.
    pub(crate) fn reject(&mut self, now: f64, reason: RejectReason) {
        self.advance(SessionState::Rejected(reason))
            .expect("rejection is legal from any live state");
        self.log(
            now,
            Party::Ra,
            Party::Vehicle,
            MessageKind::Reject,
            alloc::format!("reason={reason}"),
        );
    }

    /// Tab-separated transcript, one message per line.
    pub fn transcript_tsv(&self) -> String {
        let mut out = String::new();
        for m in &self.transcript {
            out.push_str(&m.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("malformed transcript field {0:?}")]
    Malformed(String),
    #[error("message {index}: illegal transition {from} -> {to}")]
    IllegalTransition {
        index: usize,
        from: SessionState,
        to: SessionState,
    },
    #[error("message {index}: {kind} carries no {field}")]
    MissingField {
        index: usize,
        kind: MessageKind,
        field: &'static str,
    },
    #[error("token issued without both factors (nlos={nlos}, class match={class_match}, in time={in_time})")]
    UnsoundToken {
        nlos: bool,
        class_match: bool,
        in_time: bool,
    },
    #[error("both factors passed but no token was issued")]
    WithheldToken,
    #[error("timestamps go backwards at message {0}")]
    TimeTravel(usize),
    #[error("transcript does not end in a terminal state")]
    Unfinished,
}

/// What [`audit_transcript`] reconstructed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditSummary {
    pub final_state: SessionState,
    pub nlos_verified: bool,
    pub challenge_class: Option<u8>,
    pub decoded_code: Option<u8>,
    pub decoded_at: Option<f64>,
    pub deadline: Option<f64>,
    pub token_issued: bool,
}

pub fn parse_transcript(tsv: &str) -> Result<Vec<Message>, AuditError> {
    tsv.lines()
        .filter(|l| !l.is_empty())
        .map(str::parse)
        .collect()
}

fn number<T: FromStr>(m: &Message, index: usize, key: &'static str) -> Result<T, AuditError> {
    let v = m.field(key).ok_or(AuditError::MissingField {
        index,
        kind: m.kind,
        field: key,
    })?;
    v.parse().map_err(|_| AuditError::Malformed(v.to_string()))
}

/// Replays a transcript against the transition relation and re-derives the
/// token decision from the logged facts alone: a token must appear exactly
/// when the first factor passed, the decoded label equals the challenge
/// class, and decoding finished before the deadline.
pub fn audit_transcript(messages: &[Message]) -> Result<AuditSummary, AuditError> {
    let mut state = SessionState::Init;
    let mut s = AuditSummary {
        final_state: state,
        nlos_verified: false,
        challenge_class: None,
        decoded_code: None,
        decoded_at: None,
        deadline: None,
        token_issued: false,
    };
    let mut last_time = f64::NEG_INFINITY;
    for (index, m) in messages.iter().enumerate() {
        if m.timestamp < last_time {
            return Err(AuditError::TimeTravel(index));
        }
        last_time = m.timestamp;
        let next = match m.kind {
            MessageKind::Credential | MessageKind::Flash => None,
            MessageKind::NlosAccept => {
                s.nlos_verified = true;
                Some(SessionState::NlosVerified)
            }
            MessageKind::Challenge => {
                s.challenge_class = Some(number(m, index, "class")?);
                s.deadline = Some(number(m, index, "deadline")?);
                Some(SessionState::ChallengeIssued)
            }
            MessageKind::DecodeReport => {
                s.decoded_code = Some(number(m, index, "label")?);
                s.decoded_at = Some(number(m, index, "at")?);
                Some(SessionState::Decoded)
            }
            MessageKind::Token => {
                s.token_issued = true;
                Some(SessionState::TokenIssued)
            }
            MessageKind::Reject => {
                let reason: RejectReason = m
                    .field("reason")
                    .ok_or(AuditError::MissingField {
                        index,
                        kind: m.kind,
                        field: "reason",
                    })?
                    .parse()?;
                Some(SessionState::Rejected(reason))
            }
        };
        if let Some(to) = next {
            if !state.can_move_to(to) {
                return Err(AuditError::IllegalTransition {
                    index,
                    from: state,
                    to,
                });
            }
            state = to;
        }
    }
    if !state.is_terminal() {
        return Err(AuditError::Unfinished);
    }
    s.final_state = state;

    let class_match = matches!((s.challenge_class, s.decoded_code), (Some(c), Some(d)) if c == d && (1..=CLASS_COUNT).contains(&d));
    let in_time = matches!((s.decoded_at, s.deadline), (Some(at), Some(dl)) if at < dl);
    let should_issue = s.nlos_verified && class_match && in_time;
    if s.token_issued && !should_issue {
        return Err(AuditError::UnsoundToken {
            nlos: s.nlos_verified,
            class_match,
            in_time,
        });
    }
    if should_issue && !s.token_issued {
        return Err(AuditError::WithheldToken);
    }
    Ok(s)
}
