//! Attacker models and Monte Carlo campaigns against the protocol.
//!
//! * Remote impersonation: the attacker may hold a stolen credential but is
//!   not in front of the camera, so it cannot flash a response.
//! * Proximity replay: the attacker records an honest vehicle's flashes and
//!   plays them back against a new challenge.
//! * Uniform guessing: the attacker flashes a random valid frame.
//! * Camera obstruction: the attacker blocks the camera's view of one vehicle.
//!
//! With a fresh uniform challenge, replay and guessing both succeed with
//! probability 1/27. The campaigns measure that rate rather than assume it.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::channel::{ChannelError, ChannelParams, RoiOptions};
use crate::frame::Symbol;
use crate::protocol::{
    run_scene, run_session, run_session_reusing_challenge, FailureLedger, Participant,
    RegistrationAuthority, Responder, RsuConfig, SessionRecord, Validity, Vehicle,
    VehicleCredential,
};
use crate::rng::SeedPath;
use crate::stats::{RateEstimate, Z_95};
use crate::timing::TimingParams;
use crate::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    RemoteImpersonator,
    ProximityReplayer,
    UniformGuesser,
    CameraObstructor,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [
        Self::RemoteImpersonator,
        Self::ProximityReplayer,
        Self::UniformGuesser,
        Self::CameraObstructor,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Self::RemoteImpersonator => "remote",
            Self::ProximityReplayer => "replay",
            Self::UniformGuesser => "guess",
            Self::CameraObstructor => "obstruct",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Capabilities {
    pub holds_stolen_credential: bool,
    pub has_los_emitter: bool,
    pub can_record_los: bool,
    pub can_block_camera: bool,
}

impl Capabilities {
    /// All 16 combinations.
    pub fn grid() -> impl Iterator<Item = Capabilities> {
        (0u8..16).map(|m| Capabilities {
            holds_stolen_credential: m & 1 != 0,
            has_los_emitter: m & 2 != 0,
            can_record_los: m & 4 != 0,
            can_block_camera: m & 8 != 0,
        })
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ProfileError {
    #[error("a remote impersonator has no optical emitter in range")]
    RemoteWithEmitter,
    #[error("a proximity replayer must be able to record and emit")]
    ReplayerWithoutRecording,
    #[error("a camera obstructor must be able to block the camera")]
    ObstructorWithoutBlocking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AttackerProfile {
    kind: AttackKind,
    capabilities: Capabilities,
}

impl AttackerProfile {
    pub fn new(kind: AttackKind, capabilities: Capabilities) -> Result<Self, ProfileError> {
        match kind {
            AttackKind::RemoteImpersonator if capabilities.has_los_emitter => {
                Err(ProfileError::RemoteWithEmitter)
            }
            AttackKind::ProximityReplayer
                if !(capabilities.can_record_los && capabilities.has_los_emitter) =>
            {
                Err(ProfileError::ReplayerWithoutRecording)
            }
            AttackKind::CameraObstructor if !capabilities.can_block_camera => {
                Err(ProfileError::ObstructorWithoutBlocking)
            }
            _ => Ok(Self { kind, capabilities }),
        }
    }

    /// The standard profile for each kind: the strongest attacker the kind allows.
    pub fn standard(kind: AttackKind) -> Self {
        let capabilities = match kind {
            AttackKind::RemoteImpersonator => Capabilities {
                holds_stolen_credential: true,
                ..Default::default()
            },
            AttackKind::ProximityReplayer => Capabilities {
                holds_stolen_credential: true,
                has_los_emitter: true,
                can_record_los: true,
                can_block_camera: false,
            },
            AttackKind::UniformGuesser => Capabilities {
                holds_stolen_credential: true,
                has_los_emitter: true,
                ..Default::default()
            },
            AttackKind::CameraObstructor => Capabilities {
                can_block_camera: true,
                ..Default::default()
            },
        };
        Self::new(kind, capabilities).expect("standard profiles are consistent")
    }

    pub fn kind(&self) -> AttackKind {
        self.kind
    }

    pub fn capabilities(&self) -> Capabilities {
        self.capabilities
    }
}

/// The system under attack: one enrolled victim vehicle, its RA, RSU and
/// channel.
#[derive(Debug, Clone)]
pub struct World {
    pub ra: RegistrationAuthority,
    pub victim: VehicleCredential,
    pub rsu: RsuConfig,
    pub channel: ChannelParams,
    pub timing: TimingParams,
    /// Reaction delay of every vehicle in the world, attackers included.
    pub reaction_delay_s: f64,
}

impl World {
    pub const VICTIM: VehicleId = VehicleId(1);

    /// Keys and secrets are derived from `seed`.
    pub fn new(seed: u64, rsu: RsuConfig, channel: ChannelParams, timing: TimingParams) -> Self {
        let root = SeedPath::new(seed).named("world");
        let mut ra = RegistrationAuthority::new(key(root.named("ra-key")));
        let victim = ra.enroll(
            Self::VICTIM,
            key(root.named("victim-secret")),
            Validity::ALWAYS,
        );
        Self {
            ra,
            victim,
            rsu,
            channel,
            timing,
            reaction_delay_s: Vehicle::DEFAULT_REACTION_DELAY_S,
        }
    }

    /// Enrolls extra honest vehicles (ids `2..`) for multi-vehicle scenes.
    pub fn enroll_bystanders(&mut self, count: u64, seed: u64) -> Vec<VehicleCredential> {
        let root = SeedPath::new(seed).named("bystanders");
        (0..count)
            .map(|i| {
                let id = VehicleId(2 + i);
                self.ra.enroll(id, key(root.child(id.0)), Validity::ALWAYS)
            })
            .collect()
    }

    /// An honest vehicle holding `credential`.
    pub fn honest(&self, credential: VehicleCredential) -> Vehicle {
        Vehicle {
            reaction_delay_s: self.reaction_delay_s,
            ..Vehicle::honest(credential)
        }
    }

    pub fn honest_session(&self, seed: u64) -> Result<SessionRecord, ChannelError> {
        run_session(
            &self.honest(self.victim.clone()),
            &self.rsu,
            &self.ra,
            &self.channel,
            &self.timing,
            seed,
        )
    }
}

fn key(path: SeedPath) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, chunk) in out.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&path.child(i as u64).seed().to_le_bytes());
    }
    out
}

/// The attacker as a protocol participant. Without a stolen credential it
/// presents the victim's id with a secret of its own.
pub fn attacker_vehicle(
    profile: &AttackerProfile,
    world: &World,
    recorded: Option<&[Symbol]>,
    seed: u64,
) -> Vehicle {
    let caps = profile.capabilities();
    let credential = if caps.holds_stolen_credential {
        world.victim.clone()
    } else {
        VehicleCredential {
            secret: key(SeedPath::new(seed).named("forged")),
            ..world.victim.clone()
        }
    };
    let responder = if !caps.has_los_emitter {
        Responder::Dark
    } else {
        match (profile.kind(), recorded) {
            (AttackKind::ProximityReplayer, Some(symbols)) if caps.can_record_los => {
                Responder::Replay(symbols.to_vec())
            }
            _ => Responder::Guess,
        }
    };
    Vehicle {
        credential,
        responder,
        reaction_delay_s: world.reaction_delay_s,
    }
}

/// Remote impersonation: no optical response is possible.
pub fn attack_remote(
    profile: &AttackerProfile,
    world: &World,
    seed: u64,
) -> Result<SessionRecord, ChannelError> {
    let v = attacker_vehicle(profile, world, None, seed);
    run_session(
        &v,
        &world.rsu,
        &world.ra,
        &world.channel,
        &world.timing,
        seed,
    )
}

/// Replays `recorded` against a fresh challenge.
pub fn attack_replay(
    profile: &AttackerProfile,
    recorded: &[Symbol],
    world: &World,
    seed: u64,
) -> Result<SessionRecord, ChannelError> {
    let v = attacker_vehicle(profile, world, Some(recorded), seed);
    run_session(
        &v,
        &world.rsu,
        &world.ra,
        &world.channel,
        &world.timing,
        seed,
    )
}

/// Control: replays the recording of `original` against an RSU that re-sends
/// the same challenge.
pub fn attack_replay_reused(
    profile: &AttackerProfile,
    original: &SessionRecord,
    world: &World,
    seed: u64,
) -> Result<SessionRecord, ChannelError> {
    let recorded = original
        .emitted
        .as_ref()
        .map(|s| s.symbols())
        .unwrap_or_default();
    let v = attacker_vehicle(profile, world, Some(&recorded), seed);
    let old = original
        .challenge
        .expect("original session issued a challenge");
    run_session_reusing_challenge(
        &v,
        &old,
        &world.rsu,
        &world.ra,
        &world.channel,
        &world.timing,
        seed,
    )
}

/// Guessing attacker.
pub fn attack_guess(
    profile: &AttackerProfile,
    world: &World,
    seed: u64,
) -> Result<SessionRecord, ChannelError> {
    let v = attacker_vehicle(profile, world, None, seed);
    run_session(
        &v,
        &world.rsu,
        &world.ra,
        &world.channel,
        &world.timing,
        seed,
    )
}

/// Geometry for obstruction trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionScene {
    /// The victim plus honest bystanders, victim first.
    pub participants: Vec<Participant>,
    pub camera_height_m: f64,
    pub roi: RoiOptions,
}

impl ObstructionScene {
    /// Victim in lane 0, bystanders every 3.5 m.
    pub fn lanes(world: &World, bystanders: &[VehicleCredential], distance_m: f64) -> Self {
        let participants = core::iter::once(&world.victim)
            .chain(bystanders)
            .enumerate()
            .map(|(i, c)| Participant {
                vehicle: world.honest(c.clone()),
                lane_offset_m: 3.5 * i as f64,
                distance_m,
            })
            .collect();
        Self {
            participants,
            camera_height_m: 5.0,
            roi: RoiOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionOutcome {
    pub baseline: Vec<SessionRecord>,
    pub attacked: Vec<SessionRecord>,
}

impl ObstructionOutcome {
    /// Indices of bystanders whose attacked session differs from the baseline.
    pub fn disturbed_bystanders(&self, victims: &[VehicleId]) -> Vec<usize> {
        self.baseline
            .iter()
            .zip(&self.attacked)
            .enumerate()
            .filter(|(_, (b, _))| !victims.contains(&b.session.vehicle_id))
            .filter(|(_, (b, a))| {
                b.session.transcript_tsv() != a.session.transcript_tsv() || b.state() != a.state()
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Runs the scene once untouched and once with `victims` hidden from the
/// camera, under the same seed.
pub fn attack_obstruct(
    profile: &AttackerProfile,
    scene: &ObstructionScene,
    victims: &[VehicleId],
    world: &World,
    seed: u64,
) -> Result<ObstructionOutcome, ChannelError> {
    let run = |roi: &RoiOptions| {
        run_scene(
            &scene.participants,
            scene.camera_height_m,
            &world.rsu,
            &world.ra,
            &world.channel,
            &world.timing,
            seed,
            roi,
        )
    };
    let baseline = run(&scene.roi)?;
    let mut blocked = scene.roi.clone();
    if profile.capabilities().can_block_camera {
        blocked.obstructed.extend_from_slice(victims);
    }
    let attacked = run(&blocked)?;
    Ok(ObstructionOutcome { baseline, attacked })
}

/// Campaign totals.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub profile: AttackKind,
    pub estimate: RateEstimate,
}

impl CampaignResult {
    pub const CSV_HEADER: &'static str = "profile,trials,successes,rate,ci_low,ci_high";

    pub fn csv_row(&self) -> String {
        let e = &self.estimate;
        format!(
            "{},{},{},{:.6},{:.6},{:.6}",
            self.profile, e.trials, e.successes, e.rate, e.ci_low, e.ci_high
        )
    }
}

/// Monte Carlo over independent trials. Trial `i` uses seed
/// `master / "trial" / i`, so trials can run in any order or in parallel.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub profile: AttackerProfile,
    pub world: World,
    pub master_seed: u64,
    /// Lockout threshold. Trials then share a failure ledger and must run in order.
    pub lockout: Option<u32>,
    /// Honest bystanders for obstruction trials.
    pub bystanders: u64,
}

impl Campaign {
    pub fn new(profile: AttackerProfile, world: World, master_seed: u64) -> Self {
        Self {
            profile,
            world,
            master_seed,
            lockout: None,
            bystanders: 2,
        }
    }

    pub fn trial_seed(&self, index: u64) -> u64 {
        SeedPath::new(self.master_seed)
            .named("trial")
            .child(index)
            .seed()
    }

    /// The honest session whose flashes a replayer recorded.
    pub fn recording(&self) -> Result<SessionRecord, ChannelError> {
        self.world
            .honest_session(SeedPath::new(self.master_seed).named("recording").seed())
    }

    /// One attack trial. Obstruction trials return every session in the
    /// attacked scene, victim first; other kinds return the attacker's session.
    pub fn trial(
        &self,
        index: u64,
        recorded: &[Symbol],
    ) -> Result<Vec<SessionRecord>, ChannelError> {
        let seed = self.trial_seed(index);
        let p = &self.profile;
        Ok(match p.kind() {
            AttackKind::RemoteImpersonator => alloc::vec![attack_remote(p, &self.world, seed)?],
            AttackKind::ProximityReplayer => {
                alloc::vec![attack_replay(p, recorded, &self.world, seed)?]
            }
            AttackKind::UniformGuesser => alloc::vec![attack_guess(p, &self.world, seed)?],
            AttackKind::CameraObstructor => {
                let mut world = self.world.clone();
                let bystanders = world.enroll_bystanders(self.bystanders, self.master_seed);
                let scene = ObstructionScene::lanes(&world, &bystanders, world.timing.distance_m);
                attack_obstruct(p, &scene, &[World::VICTIM], &world, seed)?.attacked
            }
        })
    }

    /// An attack succeeds when the attacker's target (the victim identity)
    /// ends up holding a token it should not: for impersonation, replay and
    /// guessing that is any token; for obstruction, success means the victim
    /// was denied while unobstructed it would have passed.
    pub fn is_success(&self, sessions: &[SessionRecord]) -> bool {
        match self.profile.kind() {
            AttackKind::CameraObstructor => sessions.first().is_some_and(|v| !v.token_issued()),
            _ => sessions.iter().any(SessionRecord::token_issued),
        }
    }

    pub fn summarize(&self, successes: u64, trials: u64) -> CampaignResult {
        CampaignResult {
            profile: self.profile.kind(),
            estimate: RateEstimate::wilson(successes, trials, Z_95),
        }
    }

    /// Runs `trials` trials in order and returns the totals and all sessions.
    pub fn run(
        &self,
        trials: u64,
    ) -> Result<(CampaignResult, Vec<Vec<SessionRecord>>), ChannelError> {
        let recorded = self
            .recording()?
            .emitted
            .map(|s| s.symbols())
            .unwrap_or_default();
        let mut ledger = FailureLedger::new(self.lockout);
        let mut all = Vec::with_capacity(trials as usize);
        let mut successes = 0;
        for i in 0..trials {
            let sessions = match (self.lockout, self.profile.kind()) {
                (
                    Some(_),
                    AttackKind::ProximityReplayer
                    | AttackKind::UniformGuesser
                    | AttackKind::RemoteImpersonator,
                ) => {
                    let v = attacker_vehicle(
                        &self.profile,
                        &self.world,
                        Some(&recorded),
                        self.trial_seed(i),
                    );
                    let w = &self.world;
                    alloc::vec![ledger.run_session(
                        &v,
                        &w.rsu,
                        &w.ra,
                        &w.channel,
                        &w.timing,
                        self.trial_seed(i)
                    )?]
                }
                _ => self.trial(i, &recorded)?,
            };
            successes += u64::from(self.is_success(&sessions));
            all.push(sessions);
        }
        Ok((self.summarize(successes, trials), all))
    }
}
