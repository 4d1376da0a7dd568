//! Synthetic clip datasets: PGM frames plus a `manifest.txt` per clip.
//!
//! Layout under the output directory:
//!
//! ```text
//! clips/class_15/clip_0000/frame_0000.pgm
//! clips/class_15/clip_0000/manifest.txt
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use occauth_core::channel::{build_schedule, sample_trace, EmissionSchedule, TraceFrame};
use occauth_core::decoder::decode_with;
use occauth_core::frame::{
    decode_symbols, ClassLabel, SecurityFrame, Symbol, CLASS_COUNT, FRAME_SYMBOLS,
};
use occauth_core::rng::SeedPath;
use occauth_core::LuminanceTrace;
use rand::Rng;
use rayon::prelude::*;

use crate::config::ScenarioConfig;

pub const FRAME_WIDTH: usize = 64;
pub const FRAME_HEIGHT: usize = 64;

/// All 29 labels: classes 1..=27, then random flashing, then all-zero.
pub fn labels() -> Vec<ClassLabel> {
    ClassLabel::all().collect()
}

/// A rendered-to-be clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub label: ClassLabel,
    pub index: u32,
    pub seed: u64,
    pub trace: LuminanceTrace,
    /// What the reference decoder reads from the trace.
    pub reference: ClassLabel,
}

impl Clip {
    pub fn dir_name(&self) -> PathBuf {
        PathBuf::from(format!("class_{:02}", self.label.numeric_code()))
            .join(format!("clip_{:04}", self.index))
    }
}

/// Seven random symbols that form neither a valid frame nor darkness.
fn random_flashing(rng: &mut impl Rng) -> [Symbol; FRAME_SYMBOLS] {
    loop {
        let s: [Symbol; FRAME_SYMBOLS] = std::array::from_fn(|_| Symbol {
            left: rng.random(),
            right: rng.random(),
        });
        if decode_symbols(&s) == ClassLabel::RandomFlash {
            return s;
        }
    }
}

/// Builds clip `index` of `label`. Deterministic in the config's master seed.
pub fn make_clip(cfg: &ScenarioConfig, label: ClassLabel, index: u32) -> anyhow::Result<Clip> {
    let root = SeedPath::new(cfg.master_seed)
        .named("export")
        .child(u64::from(label.numeric_code()))
        .child(u64::from(index));
    let mut rng = root.named("layout").rng();
    let t_f = cfg.timing.flash_s;
    let start = rng.random_range(0.1..0.5);
    let schedule = match label {
        ClassLabel::Valid(c) => build_schedule(&SecurityFrame::encode(c), t_f, start)?,
        ClassLabel::RandomFlash => {
            EmissionSchedule::from_symbols(&random_flashing(&mut rng), t_f, start)?
        }
        ClassLabel::AllZero => EmissionSchedule::dark(t_f),
    };
    let seed = root.named("channel").seed();
    let params = cfg.channel.with_seed(seed);
    let trace = sample_trace(&schedule, &params, cfg.rsu.capture_duration_s)?;
    let reference = decode_with(&trace, t_f, params.mirror_view, &cfg.rsu.decoder).label;
    Ok(Clip {
        label,
        index,
        seed,
        trace,
        reference,
    })
}

/// One frame as 8-bit grey pixels: two discs for the left and right lamps
/// over a background at the ambient level. Dropped frames are black.
pub fn render_frame(frame: &TraceFrame, ambient: f64) -> Vec<u8> {
    let grey = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    let mut pixels = vec![0u8; FRAME_WIDTH * FRAME_HEIGHT];
    if frame.dropped {
        return pixels;
    }
    let radius = FRAME_WIDTH as f64 / 8.0;
    let cy = FRAME_HEIGHT as f64 / 2.0;
    let lamps = [
        (0.3 * FRAME_WIDTH as f64, frame.left),
        (0.7 * FRAME_WIDTH as f64, frame.right),
    ];
    for (y, row) in pixels.chunks_mut(FRAME_WIDTH).enumerate() {
        for (x, px) in row.iter_mut().enumerate() {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            let level = lamps
                .iter()
                .find(|(cx, _)| (fx - cx).hypot(fy - cy) <= radius)
                .map_or(ambient, |&(_, l)| l);
            *px = grey(level);
        }
    }
    pixels
}

/// Binary PGM (P5, maxval 255).
pub fn pgm(pixels: &[u8], width: usize, height: usize) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn manifest(cfg: &ScenarioConfig, clip: &Clip) -> String {
    let c = &cfg.channel;
    let mut out = String::new();
    for (k, v) in [
        ("fps", c.fps.to_string()),
        ("t_f", cfg.timing.flash_s.to_string()),
        ("class", clip.label.numeric_code().to_string()),
        ("seed", clip.seed.to_string()),
        ("distance_m", c.distance_m.to_string()),
        ("mirror_view", c.mirror_view.to_string()),
        ("frames", clip.trace.len().to_string()),
        ("width", FRAME_WIDTH.to_string()),
        ("height", FRAME_HEIGHT.to_string()),
        ("reference_label", clip.reference.numeric_code().to_string()),
    ] {
        writeln!(out, "{k}={v}").expect("writing to a String");
    }
    out
}

pub fn write_clip(cfg: &ScenarioConfig, clip: &Clip, clips_dir: &Path) -> anyhow::Result<PathBuf> {
    let dir = clips_dir.join(clip.dir_name());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for (k, frame) in clip.trace.frames.iter().enumerate() {
        let bytes = pgm(
            &render_frame(frame, cfg.channel.ambient_level),
            FRAME_WIDTH,
            FRAME_HEIGHT,
        );
        fs::write(dir.join(format!("frame_{k:04}.pgm")), bytes)?;
    }
    fs::write(dir.join("manifest.txt"), manifest(cfg, clip))?;
    Ok(dir)
}

/// Writes `export.count` clips for each of the 29 labels under `out/clips`
/// and returns the clip directories in label order.
pub fn export_dataset(cfg: &ScenarioConfig, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    cfg.validate()?;
    let Some(spec) = &cfg.export else {
        bail!("scenario has no export.count")
    };
    let clips_dir = out.join("clips");
    fs::create_dir_all(&clips_dir).with_context(|| format!("creating {}", clips_dir.display()))?;
    let jobs: Vec<(ClassLabel, u32)> = labels()
        .into_iter()
        .flat_map(|l| (0..spec.count).map(move |i| (l, i)))
        .collect();
    debug_assert_eq!(
        jobs.len(),
        (usize::from(CLASS_COUNT) + 2) * spec.count as usize
    );
    jobs.into_par_iter()
        .map(|(label, i)| write_clip(cfg, &make_clip(cfg, label, i)?, &clips_dir))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_nine_labels_with_codes() {
        let codes: Vec<u8> = labels().iter().map(|l| l.numeric_code()).collect();
        assert_eq!(codes, (1..=29).collect::<Vec<u8>>());
    }

    #[test]
    fn random_flashing_never_conforms() {
        let mut rng = SeedPath::new(3).rng();
        for _ in 0..500 {
            assert_eq!(
                decode_symbols(&random_flashing(&mut rng)),
                ClassLabel::RandomFlash
            );
        }
    }

    #[test]
    fn pgm_header_and_size() {
        let f = TraceFrame {
            timestamp: 0.0,
            left: 1.0,
            right: 0.0,
            dropped: false,
        };
        let px = render_frame(&f, 0.25);
        let bytes = pgm(&px, FRAME_WIDTH, FRAME_HEIGHT);
        assert!(bytes.starts_with(b"P5\n64 64\n255\n"));
        assert_eq!(bytes.len(), 13 + 64 * 64);
        assert_eq!(px[32 * 64 + 19], 255);
        assert_eq!(px[32 * 64 + 44], 0);
        assert_eq!(px[0], 64);
        let dropped = render_frame(&TraceFrame { dropped: true, ..f }, 0.25);
        assert!(dropped.iter().all(|&p| p == 0));
    }

    #[test]
    fn clean_clips_decode_to_their_label() {
        let cfg = ScenarioConfig::default();
        for label in labels() {
            let clip = make_clip(&cfg, label, 0).unwrap();
            assert_eq!(clip.reference, label);
        }
    }
}
