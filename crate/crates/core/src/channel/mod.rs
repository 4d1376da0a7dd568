//! Line-of-sight optical camera channel.
//!
//! Headlights hold each symbol for one flash slot. The camera integrates the
//! emitter state over each exposure window (box filter), the on level falls
//! off with the square of distance, and ambient light, Gaussian sensor noise,
//! a single start-time jitter and independent frame drops are added on top.

mod scene;

use alloc::vec::Vec;
use core::fmt;

use libm::floor;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::frame::{SecurityFrame, Symbol};
use crate::rng::SeedPath;

pub use scene::{extract_rois, Emitter, LeakageModel, RoiOptions, Scene};

/// Slack used when converting `duration · fps` to a frame count.
const FRAME_COUNT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid channel parameters: {0}")]
    InvalidParams(Violations),
    #[error("flash duration must be positive, got {0} s")]
    NonPositiveFlash(f64),
    #[error("capture of {capture} s is shorter than the {span} s schedule")]
    CaptureTooShort { capture: f64, span: f64 },
    #[error("vehicles {0} and {1} are not laterally separable")]
    AmbiguousEmitters(u64, u64),
    #[error("vehicle {0} appears more than once in the scene")]
    DuplicateVehicle(u64),
}

/// One broken channel constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// `T_e` must equal `1 / fps`.
    ExposureNotFrameRate,
    /// `PW_s < T_e`.
    PulseExceedsExposure,
    /// `PW_s + PW_g < T_e`.
    PulseAndGuardExceedExposure,
    /// `DC_min = PW_s / T_e` must lie strictly between 0 and 1.
    DutyCycleOutOfRange,
    NonPositiveFrameRate,
    NegativeGuard,
    NonPositiveDistance,
    AmbientOutOfRange,
    NegativeNoise,
    NegativeJitter,
    DropProbabilityOutOfRange,
    BadPhotometry,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ExposureNotFrameRate => "T_e = 1/fps",
            Self::PulseExceedsExposure => "PW_s < T_e",
            Self::PulseAndGuardExceedExposure => "PW_s + PW_g < T_e",
            Self::DutyCycleOutOfRange => "0 < DC_min < 1",
            Self::NonPositiveFrameRate => "fps > 0",
            Self::NegativeGuard => "PW_g >= 0",
            Self::NonPositiveDistance => "distance_m > 0",
            Self::AmbientOutOfRange => "0 <= ambient_level <= 1",
            Self::NegativeNoise => "noise_sigma >= 0",
            Self::NegativeJitter => "jitter_sigma >= 0",
            Self::DropProbabilityOutOfRange => "0 <= frame_drop_prob <= 1",
            Self::BadPhotometry => "reference level and distance > 0",
        })
    }
}

/// Non-empty list of violations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "violated {v}")?;
        }
        Ok(())
    }
}

/// Inverse-square falloff: an emitter at `reference_distance_m` shows
/// `reference_level`, saturating at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Photometry {
    pub reference_level: f64,
    pub reference_distance_m: f64,
}

impl Default for Photometry {
    fn default() -> Self {
        Self {
            reference_level: 1.0,
            reference_distance_m: 20.0,
        }
    }
}

impl Photometry {
    pub fn on_level(&self, distance_m: f64) -> f64 {
        let r = self.reference_distance_m / distance_m;
        (self.reference_level * r * r).clamp(0.0, 1.0)
    }
}

/// Camera and environment parameters for one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub fps: f64,
    /// Exposure window `T_e`; [`ChannelParams::new`] sets it to `1 / fps`.
    pub exposure_s: f64,
    /// Symbol pulse width `PW_s`.
    pub pulse_width_s: f64,
    /// Guard width `PW_g`.
    pub guard_width_s: f64,
    pub distance_m: f64,
    pub ambient_level: f64,
    pub noise_sigma: f64,
    pub jitter_sigma: f64,
    pub frame_drop_prob: f64,
    /// Camera faces the vehicle, so left and right appear swapped.
    pub mirror_view: bool,
    pub seed: u64,
    pub photometry: Photometry,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::new(30.0)
    }
}

impl ChannelParams {
    /// Noiseless channel at `fps`, 25 m, with a pulse and guard that fit the
    /// exposure window.
    pub fn new(fps: f64) -> Self {
        let exposure = 1.0 / fps;
        Self {
            fps,
            exposure_s: exposure,
            pulse_width_s: 0.6 * exposure,
            guard_width_s: 0.3 * exposure,
            distance_m: 25.0,
            ambient_level: 0.0,
            noise_sigma: 0.0,
            jitter_sigma: 0.0,
            frame_drop_prob: 0.0,
            mirror_view: false,
            seed: 0,
            photometry: Photometry::default(),
        }
    }

    /// Same parameters at a different frame rate, rescaling `T_e`, `PW_s` and
    /// `PW_g` proportionally.
    pub fn with_fps(mut self, fps: f64) -> Self {
        let scale = self.fps / fps;
        self.fps = fps;
        self.exposure_s = 1.0 / fps;
        self.pulse_width_s *= scale;
        self.guard_width_s *= scale;
        self
    }

    pub fn with_lighting(mut self, preset: LightingPreset) -> Self {
        let (ambient, noise) = preset.levels();
        self.ambient_level = ambient;
        self.noise_sigma = noise;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / self.fps
    }

    /// `DC_min = PW_s / T_e`.
    pub fn min_duty_cycle(&self) -> f64 {
        self.pulse_width_s / self.exposure_s
    }

    pub fn on_level(&self) -> f64 {
        self.photometry.on_level(self.distance_m)
    }

    /// Every violated constraint; empty means the parameters are usable.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.fps > 0.0) {
            out.push(Violation::NonPositiveFrameRate);
        } else if (self.exposure_s - 1.0 / self.fps).abs() > 1e-9 * (1.0 / self.fps) {
            out.push(Violation::ExposureNotFrameRate);
        }
        if !(self.pulse_width_s < self.exposure_s) {
            out.push(Violation::PulseExceedsExposure);
        }
        if !(self.pulse_width_s + self.guard_width_s < self.exposure_s) {
            out.push(Violation::PulseAndGuardExceedExposure);
        }
        let dc = self.min_duty_cycle();
        if !(dc > 0.0 && dc < 1.0) {
            out.push(Violation::DutyCycleOutOfRange);
        }
        if !(self.guard_width_s >= 0.0) {
            out.push(Violation::NegativeGuard);
        }
        if !(self.distance_m > 0.0) {
            out.push(Violation::NonPositiveDistance);
        }
        if !(0.0..=1.0).contains(&self.ambient_level) {
            out.push(Violation::AmbientOutOfRange);
        }
        if !(self.noise_sigma >= 0.0) {
            out.push(Violation::NegativeNoise);
        }
        if !(self.jitter_sigma >= 0.0) {
            out.push(Violation::NegativeJitter);
        }
        if !(0.0..=1.0).contains(&self.frame_drop_prob) {
            out.push(Violation::DropProbabilityOutOfRange);
        }
        if !(self.photometry.reference_level > 0.0 && self.photometry.reference_distance_m > 0.0) {
            out.push(Violation::BadPhotometry);
        }
        out
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ChannelError::InvalidParams(Violations(v)))
        }
    }

    /// Number of camera frames in a capture of `duration_s`.
    pub fn frame_count(&self, duration_s: f64) -> usize {
        if duration_s <= 0.0 {
            return 0;
        }
        floor(duration_s * self.fps + FRAME_COUNT_EPS) as usize
    }
}

/// Qualitative lighting conditions mapped to `(ambient_level, noise_sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LightingPreset {
    DaySunny,
    DayCloudy,
    Sunset,
    Night,
}

impl LightingPreset {
    pub const ALL: [LightingPreset; 4] =
        [Self::DaySunny, Self::DayCloudy, Self::Sunset, Self::Night];

    /// Bright days raise the background; at night the sensor runs at high
    /// gain, so the background is dark but the noise is larger.
    pub const fn levels(self) -> (f64, f64) {
        match self {
            Self::DaySunny => (0.25, 0.04),
            Self::DayCloudy => (0.15, 0.05),
            Self::Sunset => (0.10, 0.08),
            Self::Night => (0.02, 0.12),
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Self::DaySunny => "day_sunny",
            Self::DayCloudy => "day_cloudy",
            Self::Sunset => "sunset",
            Self::Night => "night",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// One flash slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub start: f64,
    pub symbol: Symbol,
}

/// Timed flash sequence produced by a vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSchedule {
    slots: Vec<Slot>,
    slot_duration: f64,
}

impl EmissionSchedule {
    /// Consecutive slots of `slot_duration` starting at `start`.
    pub fn from_symbols(
        symbols: &[Symbol],
        slot_duration: f64,
        start: f64,
    ) -> Result<Self, ChannelError> {
        if !(slot_duration > 0.0) {
            return Err(ChannelError::NonPositiveFlash(slot_duration));
        }
        let slots = symbols
            .iter()
            .enumerate()
            .map(|(i, &symbol)| Slot {
                start: start + i as f64 * slot_duration,
                symbol,
            })
            .collect();
        Ok(Self {
            slots,
            slot_duration,
        })
    }

    /// A schedule that never lights up.
    pub fn dark(slot_duration: f64) -> Self {
        Self {
            slots: Vec::new(),
            slot_duration,
        }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        self.slots.iter().map(|s| s.symbol).collect()
    }

    pub fn start(&self) -> Option<f64> {
        self.slots.first().map(|s| s.start)
    }

    pub fn span(&self) -> f64 {
        self.slots.len() as f64 * self.slot_duration
    }

    pub fn end(&self) -> Option<f64> {
        self.start().map(|s| s + self.span())
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            slots: self
                .slots
                .iter()
                .map(|s| Slot {
                    start: s.start + dt,
                    ..*s
                })
                .collect(),
            slot_duration: self.slot_duration,
        }
    }

    /// Same symbols re-timed to begin at `start`.
    pub fn restarted(&self, start: f64) -> Self {
        match self.start() {
            Some(s) => self.shifted(start - s),
            None => self.clone(),
        }
    }

    /// Latest instant each pulse can fire and still end, with its guard, before
    /// the next slot begins: `T_i = st_{i+1} - (PW_s + PW_g)`.
    pub fn transmit_instants(
        &self,
        pulse_width_s: f64,
        guard_width_s: f64,
    ) -> impl Iterator<Item = f64> + '_ {
        self.slots
            .iter()
            .map(move |s| s.start + self.slot_duration - (pulse_width_s + guard_width_s))
    }

    /// Fraction of `[from, to)` during which each emitter is lit.
    pub fn on_fraction(&self, from: f64, to: f64) -> [f64; 2] {
        let width = to - from;
        if width <= 0.0 {
            return [0.0; 2];
        }
        let mut lit = [0.0; 2];
        for slot in &self.slots {
            let overlap = (slot.start + self.slot_duration).min(to) - slot.start.max(from);
            if overlap <= 0.0 {
                continue;
            }
            if slot.symbol.left {
                lit[0] += overlap;
            }
            if slot.symbol.right {
                lit[1] += overlap;
            }
        }
        [lit[0] / width, lit[1] / width]
    }
}

/// Schedule for a security frame.
pub fn build_schedule(
    frame: &SecurityFrame,
    slot_duration: f64,
    start: f64,
) -> Result<EmissionSchedule, ChannelError> {
    EmissionSchedule::from_symbols(frame.symbols(), slot_duration, start)
}

/// One camera frame of the two emitter regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceFrame {
    pub timestamp: f64,
    pub left: f64,
    pub right: f64,
    pub dropped: bool,
}

/// Per-frame brightness of the left and right emitter regions.
#[derive(Debug, Clone, PartialEq)]
pub struct LuminanceTrace {
    pub fps: f64,
    pub exposure_s: f64,
    pub frames: Vec<TraceFrame>,
}

impl LuminanceTrace {
    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Frames that reached the decoder.
    pub fn live(&self) -> impl Iterator<Item = &TraceFrame> {
        self.frames.iter().filter(|f| !f.dropped)
    }

    /// Left/right swapped copy.
    pub fn mirrored(&self) -> Self {
        Self {
            frames: self
                .frames
                .iter()
                .map(|f| TraceFrame {
                    left: f.right,
                    right: f.left,
                    ..*f
                })
                .collect(),
            ..*self
        }
    }
}

/// Noiseless lit level per frame, before ambient, noise and mirroring.
pub(crate) fn emission_levels(
    schedule: &EmissionSchedule,
    params: &ChannelParams,
    frames: usize,
) -> Vec<[f64; 2]> {
    let on = params.on_level();
    (0..frames)
        .map(|k| {
            let t = k as f64 / params.fps;
            let [l, r] = schedule.on_fraction(t, t + params.exposure_s);
            [on * l, on * r]
        })
        .collect()
}

pub(crate) fn draw_jitter(params: &ChannelParams) -> f64 {
    let z: f64 = StandardNormal.sample(&mut SeedPath::new(params.seed).named("jitter").rng());
    z * params.jitter_sigma
}

/// Adds ambient, noise, drops and mirroring to per-frame lit levels.
/// `extra` is per-frame additional background (cross-emitter leakage).
pub(crate) fn observe(
    levels: &[[f64; 2]],
    extra: Option<&[f64]>,
    params: &ChannelParams,
) -> LuminanceTrace {
    let frames_root = SeedPath::new(params.seed).named("frame");
    let frames = levels
        .iter()
        .enumerate()
        .map(|(k, lit)| {
            let mut rng = frames_root.child(k as u64).rng();
            let nl: f64 = StandardNormal.sample(&mut rng);
            let nr: f64 = StandardNormal.sample(&mut rng);
            let dropped = rng.random::<f64>() < params.frame_drop_prob;
            let background = params.ambient_level + extra.map_or(0.0, |e| e[k]);
            let (mut left, mut right) = (
                (lit[0] + background + params.noise_sigma * nl).clamp(0.0, 1.0),
                (lit[1] + background + params.noise_sigma * nr).clamp(0.0, 1.0),
            );
            if dropped {
                left = 0.0;
                right = 0.0;
            }
            if params.mirror_view {
                core::mem::swap(&mut left, &mut right);
            }
            TraceFrame {
                timestamp: k as f64 / params.fps,
                left,
                right,
                dropped,
            }
        })
        .collect();
    LuminanceTrace {
        fps: params.fps,
        exposure_s: params.exposure_s,
        frames,
    }
}

/// Camera observation of `schedule` over `[0, capture_duration)`.
pub fn sample_trace(
    schedule: &EmissionSchedule,
    params: &ChannelParams,
    capture_duration: f64,
) -> Result<LuminanceTrace, ChannelError> {
    params.validate()?;
    if capture_duration < schedule.span() {
        return Err(ChannelError::CaptureTooShort {
            capture: capture_duration,
            span: schedule.span(),
        });
    }
    let shifted = schedule.shifted(draw_jitter(params));
    let levels = emission_levels(&shifted, params, params.frame_count(capture_duration));
    Ok(observe(&levels, None, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::ClassIndex;
    use proptest::prelude::*;

    fn frame(c: u32) -> SecurityFrame {
        SecurityFrame::encode(ClassIndex::new(c).unwrap())
    }

    #[test]
    fn validate_examples() {
        let ok = ChannelParams {
            pulse_width_s: 0.020,
            guard_width_s: 0.010,
            ..ChannelParams::new(30.0)
        };
        assert!(ok.validate().is_ok());
        let wide = ChannelParams {
            pulse_width_s: 0.040,
            guard_width_s: 0.0,
            ..ok
        };
        assert!(wide.violations().contains(&Violation::PulseExceedsExposure));
        let guard = ChannelParams {
            guard_width_s: 0.015,
            ..ok
        };
        assert_eq!(guard.violations(), [Violation::PulseAndGuardExceedExposure]);
        assert_eq!(
            Violation::PulseAndGuardExceedExposure.to_string(),
            "PW_s + PW_g < T_e"
        );
        let bad_exposure = ChannelParams {
            exposure_s: 0.02,
            ..ok
        };
        assert!(bad_exposure
            .violations()
            .contains(&Violation::ExposureNotFrameRate));
    }

    #[test]
    fn schedule_layout() {
        let s = build_schedule(&frame(14), 0.15, 0.0).unwrap();
        let starts: Vec<f64> = s.slots().iter().map(|s| s.start).collect();
        for (i, st) in starts.iter().enumerate() {
            assert!((st - 0.15 * i as f64).abs() < 1e-12);
        }
        let total: f64 = s.slots().iter().map(|_| s.slot_duration()).sum();
        assert!((total - crate::timing::flash_schedule_duration(14, 0.15).unwrap()).abs() < 1e-12);
        let moved = build_schedule(&frame(14), 0.15, 2.0).unwrap();
        assert_eq!(moved.symbols(), s.symbols());
        for (a, b) in moved.slots().iter().zip(s.slots()) {
            assert!((a.start - b.start - 2.0).abs() < 1e-12);
        }
        let pw = (0.02, 0.01);
        for (i, t) in s.transmit_instants(pw.0, pw.1).enumerate() {
            let next = s.slots()[0].start + (i + 1) as f64 * 0.15;
            assert!((t - (next - 0.03)).abs() < 1e-12);
        }
        assert!(build_schedule(&frame(1), 0.0, 0.0).is_err());
    }

    #[test]
    fn dark_schedule_is_dark() {
        let sched = EmissionSchedule::from_symbols(&[Symbol::OFF; 7], 0.15, 0.0).unwrap();
        assert!((sched.span() - 1.05).abs() < 1e-12);
        let trace = sample_trace(&sched, &ChannelParams::new(30.0), 2.0).unwrap();
        let total: f64 = trace.frames.iter().map(|f| f.left + f.right).sum();
        assert_eq!(total, 0.0);
        let lit = ChannelParams {
            ambient_level: 0.1,
            ..ChannelParams::new(30.0)
        };
        let trace = sample_trace(&sched, &lit, 2.0).unwrap();
        assert!(trace.frames.iter().all(|f| f.left == 0.1 && f.right == 0.1));
    }

    #[test]
    fn frames_per_slot() {
        // Oracle: count frame timestamps falling into each slot.
        let p = ChannelParams::new(30.0);
        let sched = build_schedule(&frame(7), 0.15, 0.0).unwrap();
        let trace = sample_trace(&sched, &p, 1.05).unwrap();
        assert_eq!(trace.len(), 31);
        let mut counts = [0usize; 7];
        for f in &trace.frames {
            let slot = (f.timestamp / 0.15 + 1e-9) as usize;
            if slot < 7 {
                counts[slot] += 1;
            }
        }
        assert_eq!(counts.iter().sum::<usize>(), 31);
        assert!(counts.iter().all(|&c| c == 4 || c == 5), "{counts:?}");
        // averaged, 4.5 frames per slot
        let pairs = counts
            .chunks(2)
            .filter(|c| c.len() == 2)
            .map(|c| c[0] + c[1]);
        assert!(pairs.into_iter().all(|n| n == 9));
    }

    #[test]
    fn exposure_integration_and_attenuation() {
        let p = ChannelParams::new(30.0);
        let sched = build_schedule(&frame(1), 0.15, 0.0).unwrap();
        let trace = sample_trace(&sched, &p, 1.2).unwrap();
        let on = Photometry::default().on_level(25.0);
        assert!((on - 0.64).abs() < 1e-12);
        // frame 0 lies entirely in the first (both-on) slot
        assert!((trace.frames[0].left - on).abs() < 1e-12);
        // frame 4 covers [0.1333, 0.1667): half lit by slot 0
        assert!((trace.frames[4].left - on * 0.5).abs() < 1e-9);
        assert_eq!(Photometry::default().on_level(5.0), 1.0);
    }

    #[test]
    fn mirror_swaps_channels() {
        let sched = build_schedule(&frame(15), 0.15, 0.1).unwrap();
        let p = ChannelParams {
            noise_sigma: 0.03,
            seed: 4,
            ..ChannelParams::new(30.0)
        };
        let plain = sample_trace(&sched, &p, 2.0).unwrap();
        let mirrored = sample_trace(
            &sched,
            &ChannelParams {
                mirror_view: true,
                ..p
            },
            2.0,
        )
        .unwrap();
        assert_eq!(plain.mirrored(), mirrored);
    }

    #[test]
    fn seeds_and_errors() {
        let sched = build_schedule(&frame(9), 0.15, 0.2).unwrap();
        let p = ChannelParams {
            noise_sigma: 0.05,
            jitter_sigma: 0.01,
            frame_drop_prob: 0.05,
            seed: 11,
            ..ChannelParams::new(30.0)
        };
        let a = sample_trace(&sched, &p, 2.0).unwrap();
        assert_eq!(a, sample_trace(&sched, &p, 2.0).unwrap());
        assert_ne!(a, sample_trace(&sched, &p.with_seed(12), 2.0).unwrap());
        assert!(matches!(
            sample_trace(&sched, &p, 1.0),
            Err(ChannelError::CaptureTooShort { .. })
        ));
        let bad = ChannelParams {
            pulse_width_s: 1.0,
            ..p
        };
        assert!(matches!(
            sample_trace(&sched, &bad, 2.0),
            Err(ChannelError::InvalidParams(_))
        ));
    }

    #[test]
    fn dropped_frames_keep_timestamps() {
        let sched = build_schedule(&frame(2), 0.15, 0.2).unwrap();
        let p = ChannelParams {
            frame_drop_prob: 0.3,
            seed: 1,
            ..ChannelParams::new(30.0)
        };
        let t = sample_trace(&sched, &p, 2.0).unwrap();
        assert!(t.frames.iter().any(|f| f.dropped));
        for (k, f) in t.frames.iter().enumerate() {
            assert!((f.timestamp - k as f64 / 30.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn frame_count_conserved(
            capture in 1.05f64..5.0,
            fps in prop::sample::select(vec![15.0, 24.0, 30.0, 60.0]),
            noise in 0.0f64..0.3,
            drop in 0.0f64..1.0,
            jitter in 0.0f64..0.05,
            seed: u64,
        ) {
            let sched = build_schedule(&frame(5), 0.15, 0.0).unwrap();
            let p = ChannelParams { noise_sigma: noise, frame_drop_prob: drop, jitter_sigma: jitter, seed, ..ChannelParams::new(fps) };
            let t = sample_trace(&sched, &p, capture).unwrap();
            prop_assert_eq!(t.len(), floor(capture * fps + FRAME_COUNT_EPS) as usize);
            prop_assert!(t.frames.windows(2).all(|w| w[1].timestamp > w[0].timestamp));
            prop_assert!(t.frames.iter().all(|f| (0.0..=1.0).contains(&f.left) && (0.0..=1.0).contains(&f.right)));
        }
    }
}
