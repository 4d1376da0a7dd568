//! Classical decoder for camera traces.
//!
//! 1. Split all observed brightness values into two clusters (exact 1-D
//!    two-means) and threshold halfway between the cluster means.
//! 2. Slide the frame skeleton (dark lead-in, `11`, `00`, info, `00`, info,
//!    `00`, info, dark tail) over the start of the trace at quarter-frame
//!    steps and keep the best-matching start.
//! 3. Average each channel over every slot, weighting frames by how much of
//!    their exposure falls inside the slot, and threshold.

use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::channel::{EmissionSchedule, LuminanceTrace};
use crate::frame::{
    decode_symbols, mirror, ClassIndex, ClassLabel, SecurityFrame, Symbol, FRAME_SYMBOLS,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    /// Cluster means closer than this mean the trace carries no light signal.
    pub min_cluster_gap: f64,
    /// Fraction of the trace, from its start, searched for the frame start.
    pub search_fraction: f64,
    /// Alignment candidates per camera frame period.
    pub steps_per_frame: u32,
    /// Minimum skeleton match score for a start to count as found.
    pub match_floor: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            min_cluster_gap: 0.1,
            search_fraction: 0.4,
            steps_per_frame: 4,
            match_floor: 0.5,
        }
    }
}

/// Outcome of [`estimate_threshold`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Midpoint between the dark and lit cluster means; `gap` is their distance.
    Level { level: f64, gap: f64 },
    /// One cluster only: no emitter activity.
    AllOff,
}

impl Threshold {
    pub fn level(self) -> Option<f64> {
        match self {
            Self::Level { level, .. } => Some(level),
            Self::AllOff => None,
        }
    }
}

/// Decoder output.
///
/// `per_slot_symbols` holds the camera-side symbol estimates, before mirror
/// correction; it is `None` when no frame start could be located. When
/// present, `label` is always `decode_symbols` of the corrected symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeResult {
    pub label: ClassLabel,
    /// Skeleton match score in `[-1, 1]` at the chosen start; `1` for a dark trace.
    pub score: f64,
    /// Estimated frame start, seconds from the start of the trace.
    pub slot_alignment: Option<f64>,
    pub per_slot_symbols: Option<[Symbol; FRAME_SYMBOLS]>,
}

impl DecodeResult {
    pub const CSV_HEADER: &'static str = "label_code,score,alignment_s";

    /// `label_code,score,alignment_s`; the alignment is empty when unknown.
    pub fn to_csv_row(&self) -> alloc::string::String {
        let mut s = alloc::string::String::new();
        let _ = write!(s, "{},{:.6},", self.label.numeric_code(), self.score);
        if let Some(a) = self.slot_alignment {
            let _ = write!(s, "{a:.6}");
        }
        s
    }
}

/// Exact two-cluster split of every live brightness sample.
pub fn estimate_threshold(trace: &LuminanceTrace, config: &DecoderConfig) -> Threshold {
    let mut values: Vec<f64> = trace.live().flat_map(|f| [f.left, f.right]).collect();
    if values.len() < 2 {
        return Threshold::AllOff;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let total: f64 = values.iter().sum();
    let total_sq: f64 = values.iter().map(|v| v * v).sum();

    let (mut lo_sum, mut lo_sq) = (0.0, 0.0);
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 1..n {
        lo_sum += values[i - 1];
        lo_sq += values[i - 1] * values[i - 1];
        if values[i] == values[i - 1] {
            continue;
        }
        let (nl, nh) = (i as f64, (n - i) as f64);
        let hi_sum = total - lo_sum;
        let sse = (lo_sq - lo_sum * lo_sum / nl) + (total_sq - lo_sq - hi_sum * hi_sum / nh);
        if best.is_none_or(|(b, _, _)| sse < b) {
            best = Some((sse, lo_sum / nl, hi_sum / nh));
        }
    }
    match best {
        Some((_, lo, hi)) if hi - lo >= config.min_cluster_gap => Threshold::Level {
            level: 0.5 * (lo + hi),
            gap: hi - lo,
        },
        _ => Threshold::AllOff,
    }
}

/// Weighted mean brightness of each channel over `[from, to)`. Frames are
/// weighted by the square of the share of their exposure inside the interval.
fn interval_means(trace: &LuminanceTrace, from: f64, to: f64) -> Option<[f64; 2]> {
    let period = 1.0 / trace.fps;
    let first = libm::floor((from - trace.exposure_s) / period).max(0.0) as usize;
    let last = (libm::ceil(to / period).max(0.0) as usize).min(trace.frames.len());
    let (mut w_sum, mut l_sum, mut r_sum) = (0.0, 0.0, 0.0);
    for f in trace.frames.get(first..last).unwrap_or(&[]) {
        if f.dropped {
            continue;
        }
        let overlap = (f.timestamp + trace.exposure_s).min(to) - f.timestamp.max(from);
        if overlap <= 0.0 {
            continue;
        }
        let share = overlap / trace.exposure_s;
        let w = share * share;
        w_sum += w;
        l_sum += w * f.left;
        r_sum += w * f.right;
    }
    (w_sum > 0.0).then(|| [l_sum / w_sum, r_sum / w_sum])
}

#[derive(Clone, Copy, PartialEq)]
enum Expect {
    Dark,
    BothLit,
    AnyLit,
}

/// Slots `-1..=7` relative to a frame start: lead-in, the seven frame
/// slots, and the tail.
const SKELETON: [Expect; FRAME_SYMBOLS + 2] = [
    Expect::Dark,
    Expect::BothLit,
    Expect::Dark,
    Expect::AnyLit,
    Expect::Dark,
    Expect::AnyLit,
    Expect::Dark,
    Expect::AnyLit,
    Expect::Dark,
];

/// Mean clamped margin of each available skeleton slot, in units of half
/// the cluster gap.
fn skeleton_score(
    trace: &LuminanceTrace,
    start: f64,
    slot: f64,
    level: f64,
    half_gap: f64,
) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0u32;
    for (j, expect) in SKELETON.iter().enumerate() {
        let from = start + (j as f64 - 1.0) * slot;
        let Some([l, r]) = interval_means(trace, from, from + slot) else {
            continue;
        };
        let margin = match expect {
            Expect::Dark => level - l.max(r),
            Expect::BothLit => l.min(r) - level,
            Expect::AnyLit => l.max(r) - level,
        };
        total += (margin / half_gap).clamp(-1.0, 1.0);
        count += 1;
    }
    // The two lit-preamble slots must be observable.
    (count >= 3 && interval_means(trace, start, start + slot).is_some())
        .then(|| total / f64::from(count))
}

fn candidate_starts(trace: &LuminanceTrace, config: &DecoderConfig) -> impl Iterator<Item = f64> {
    let step = 1.0 / (trace.fps * f64::from(config.steps_per_frame.max(1)));
    let limit = config.search_fraction * trace.duration();
    let n = libm::floor(limit / step).max(0.0) as usize;
    (0..=n).map(move |i| i as f64 * step)
}

/// A located frame start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub start: f64,
    pub score: f64,
}

/// Best start for the frame skeleton. `Err` carries the best candidate seen
/// (if any) when nothing reaches the match floor.
pub fn find_preamble(
    trace: &LuminanceTrace,
    slot_duration: f64,
    threshold: Threshold,
    config: &DecoderConfig,
) -> Result<Alignment, Option<Alignment>> {
    let Threshold::Level { level, gap } = threshold else {
        return Err(None);
    };
    let mut best: Option<Alignment> = None;
    for start in candidate_starts(trace, config) {
        let Some(score) = skeleton_score(trace, start, slot_duration, level, 0.5 * gap) else {
            continue;
        };
        if best.is_none_or(|b| score > b.score + 1e-12) {
            best = Some(Alignment { start, score });
        }
    }
    match best {
        Some(b) if b.score >= config.match_floor => Ok(b),
        other => Err(other),
    }
}

/// Thresholded symbols for the seven slots following `start`. A slot with no
/// observed frames reads as `00`; a mean exactly at the threshold reads as off.
pub fn slot_symbols(
    trace: &LuminanceTrace,
    start: f64,
    slot_duration: f64,
    level: f64,
) -> [Symbol; FRAME_SYMBOLS] {
    core::array::from_fn(|i| {
        let from = start + i as f64 * slot_duration;
        match interval_means(trace, from, from + slot_duration) {
            Some([l, r]) => Symbol::new(l > level, r > level),
            None => Symbol::OFF,
        }
    })
}

/// Decodes one region-of-interest trace. Set `mirror_view` when the camera
/// sees the vehicle from the front.
pub fn decode(trace: &LuminanceTrace, slot_duration: f64, mirror_view: bool) -> DecodeResult {
    decode_with(trace, slot_duration, mirror_view, &DecoderConfig::default())
}

pub fn decode_with(
    trace: &LuminanceTrace,
    slot_duration: f64,
    mirror_view: bool,
    config: &DecoderConfig,
) -> DecodeResult {
    let threshold = estimate_threshold(trace, config);
    let Some(level) = threshold.level() else {
        return DecodeResult {
            label: ClassLabel::AllZero,
            score: 1.0,
            slot_alignment: None,
            per_slot_symbols: Some([Symbol::OFF; FRAME_SYMBOLS]),
        };
    };
    match find_preamble(trace, slot_duration, threshold, config) {
        Ok(a) => {
            let seen = slot_symbols(trace, a.start, slot_duration, level);
            let corrected = if mirror_view { mirror(seen) } else { seen };
            DecodeResult {
                label: decode_symbols(&corrected),
                score: a.score,
                slot_alignment: Some(a.start),
                per_slot_symbols: Some(seen),
            }
        }
        Err(best) => DecodeResult {
            label: ClassLabel::RandomFlash,
            score: best.map_or(-1.0, |b| b.score),
            slot_alignment: None,
            per_slot_symbols: None,
        },
    }
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        sxy / libm::sqrt(sxx * syy)
    }
}

/// Brute-force matched filter: correlates the trace against the ideal,
/// noiseless camera view of each of the 27 frames at every candidate start,
/// plus the dark template. Ranked best first.
///
/// The dark template has no variance to correlate with, so it scores 1 when
/// the trace is judged to carry no light and 0 otherwise.
pub fn template_correlate(trace: &LuminanceTrace, slot_duration: f64) -> Vec<(ClassLabel, f64)> {
    let config = DecoderConfig::default();
    let live: Vec<_> = trace.live().copied().collect();
    let observed: Vec<f64> = live
        .iter()
        .map(|f| f.left)
        .chain(live.iter().map(|f| f.right))
        .collect();
    let starts: Vec<f64> = candidate_starts(trace, &config).collect();

    let mut ranked: Vec<(ClassLabel, f64)> = ClassIndex::all()
        .map(|class| {
            let frame = SecurityFrame::encode(class);
            let best = starts
                .iter()
                .map(|&start| {
                    let sched =
                        EmissionSchedule::from_symbols(frame.symbols(), slot_duration, start)
                            .expect("slot duration checked by caller");
                    let lit: Vec<[f64; 2]> = live
                        .iter()
                        .map(|f| sched.on_fraction(f.timestamp, f.timestamp + trace.exposure_s))
                        .collect();
                    let template: Vec<f64> = lit
                        .iter()
                        .map(|v| v[0])
                        .chain(lit.iter().map(|v| v[1]))
                        .collect();
                    pearson(&observed, &template)
                })
                .fold(-1.0, f64::max);
            (ClassLabel::Valid(class), best)
        })
        .collect();
    let dark = match estimate_threshold(trace, &config) {
        Threshold::AllOff => 1.0,
        Threshold::Level { .. } => 0.0,
    };
    ranked.push((ClassLabel::AllZero, dark));
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}
