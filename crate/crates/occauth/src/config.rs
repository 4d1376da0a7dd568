//! Scenario files: flat `key=value` lines with dotted section prefixes.
//!
//! ```text
//! # comment
//! name=sunny-baseline
//! trials=500
//! master_seed=7
//! lighting_preset=day_sunny
//! timing.d=25
//! channel.fps=30
//! ```
//!
//! `channel.fps` is applied first (it sets the exposure to `1/fps` and the
//! default pulse widths), then `lighting_preset`, then every other
//! `channel.*` key, so an explicit `channel.noise_sigma` overrides the preset.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use occauth_core::adversary::AttackKind;
use occauth_core::frame::{FRAME_BITS, FRAME_SYMBOLS};
use occauth_core::protocol::{RegistrationAuthority, RsuConfig, Vehicle};
use occauth_core::{ChannelParams, LightingPreset, TimingParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key {key}")]
    Duplicate { line: usize, key: String },
    #[error("unknown key {0}")]
    UnknownKey(String),
    #[error("{key}: cannot parse {value:?}")]
    Value { key: String, value: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Attack campaign settings.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub profile: AttackKind,
    /// Lock a vehicle out after this many failed optical responses.
    pub lockout: Option<u32>,
    /// Honest vehicles sharing the camera in obstruction trials.
    pub bystanders: u64,
}

/// Clip export settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportSpec {
    /// Clips per label.
    pub count: u32,
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub trials: u64,
    pub master_seed: u64,
    pub lighting: Option<LightingPreset>,
    pub timing: TimingParams,
    pub channel: ChannelParams,
    pub rsu: RsuConfig,
    pub reaction_delay_s: f64,
    pub token_lifetime_s: f64,
    pub attack: Option<AttackSpec>,
    pub export: Option<ExportSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            trials: 100,
            master_seed: 0,
            lighting: None,
            timing: TimingParams::default(),
            channel: ChannelParams::default(),
            rsu: RsuConfig::default(),
            reaction_delay_s: Vehicle::DEFAULT_REACTION_DELAY_S,
            token_lifetime_s: RegistrationAuthority::DEFAULT_TOKEN_LIFETIME_S,
            attack: None,
            export: None,
        }
    }
}

/// Every key the parser understands.
pub const KEYS: &[&str] = &[
    "name",
    "trials",
    "master_seed",
    "lighting_preset",
    "timing.d",
    "timing.v",
    "timing.t_f",
    "timing.t_c",
    "timing.n",
    "channel.fps",
    "channel.pw_s",
    "channel.pw_g",
    "channel.distance_m",
    "channel.ambient_level",
    "channel.noise_sigma",
    "channel.jitter_sigma",
    "channel.frame_drop_prob",
    "channel.mirror_view",
    "rsu.capture_duration",
    "rsu.nlos_latency",
    "protocol.reaction_delay",
    "protocol.token_lifetime",
    "attack.profile",
    "attack.lockout",
    "attack.bystanders",
    "export.count",
    "export.dir",
];

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(value) => value.parse().map(Some).map_err(|_| ConfigError::Value {
                key: key.into(),
                value,
            }),
        }
    }

    fn set<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<(), ConfigError> {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }
}

fn parse_entries(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.into(),
            });
        };
        let key = k.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(ConfigError::Duplicate { line: i + 1, key });
        }
    }
    Ok(Entries(map))
}

impl FromStr for ScenarioConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut e = parse_entries(text)?;
        let mut cfg = Self::default();
        e.set("name", &mut cfg.name)?;
        e.set("trials", &mut cfg.trials)?;
        e.set("master_seed", &mut cfg.master_seed)?;

        let t = &mut cfg.timing;
        e.set("timing.d", &mut t.distance_m)?;
        e.set("timing.v", &mut t.speed_mps)?;
        e.set("timing.t_f", &mut t.flash_s)?;
        e.set("timing.t_c", &mut t.compute_s)?;
        e.set("timing.n", &mut t.bits)?;

        if let Some(fps) = e.take::<f64>("channel.fps")? {
            cfg.channel = cfg.channel.with_fps(fps);
        }
        if let Some(name) = e.0.remove("lighting_preset") {
            let preset = LightingPreset::from_name(&name).ok_or_else(|| ConfigError::Value {
                key: "lighting_preset".into(),
                value: name,
            })?;
            cfg.lighting = Some(preset);
            cfg.channel = cfg.channel.with_lighting(preset);
        }
        let c = &mut cfg.channel;
        e.set("channel.pw_s", &mut c.pulse_width_s)?;
        e.set("channel.pw_g", &mut c.guard_width_s)?;
        e.set("channel.distance_m", &mut c.distance_m)?;
        e.set("channel.ambient_level", &mut c.ambient_level)?;
        e.set("channel.noise_sigma", &mut c.noise_sigma)?;
        e.set("channel.jitter_sigma", &mut c.jitter_sigma)?;
        e.set("channel.frame_drop_prob", &mut c.frame_drop_prob)?;
        e.set("channel.mirror_view", &mut c.mirror_view)?;

        e.set("rsu.capture_duration", &mut cfg.rsu.capture_duration_s)?;
        e.set("rsu.nlos_latency", &mut cfg.rsu.nlos_latency_s)?;
        e.set("protocol.reaction_delay", &mut cfg.reaction_delay_s)?;
        e.set("protocol.token_lifetime", &mut cfg.token_lifetime_s)?;

        if let Some(name) = e.0.remove("attack.profile") {
            let profile = AttackKind::from_name(&name).ok_or_else(|| ConfigError::Value {
                key: "attack.profile".into(),
                value: name,
            })?;
            let mut spec = AttackSpec {
                profile,
                lockout: None,
                bystanders: 2,
            };
            spec.lockout = e.take("attack.lockout")?;
            e.set("attack.bystanders", &mut spec.bystanders)?;
            cfg.attack = Some(spec);
        }
        if let Some(count) = e.take::<u32>("export.count")? {
            cfg.export = Some(ExportSpec {
                count,
                dir: e.take("export.dir")?,
            });
        }
        if let Some(key) = e.0.into_keys().next() {
            return Err(ConfigError::Invalid(format!(
                "{key} needs its section's primary key"
            )));
        }
        Ok(cfg)
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io {
                path: path.into(),
                source,
            })?
            .parse()
    }

    /// Checks every sub-configuration. Runs before any trial.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.timing
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.timing.bits as usize != FRAME_BITS {
            return invalid(format!(
                "timing.n must be {FRAME_BITS}, got {}",
                self.timing.bits
            ));
        }
        self.channel
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (key, v) in [
            ("rsu.nlos_latency", self.rsu.nlos_latency_s),
            ("protocol.reaction_delay", self.reaction_delay_s),
        ] {
            if !(v >= 0.0) {
                return invalid(format!("{key} must be non-negative, got {v}"));
            }
        }
        if !(self.token_lifetime_s > 0.0) {
            return invalid(format!(
                "protocol.token_lifetime must be positive, got {}",
                self.token_lifetime_s
            ));
        }
        // The flash begins this long after the camera starts recording.
        let offset = self.rsu.nlos_latency_s + self.reaction_delay_s;
        let needed = offset + (FRAME_SYMBOLS + 1) as f64 * self.timing.flash_s;
        if self.rsu.capture_duration_s < needed {
            return invalid(format!(
                "rsu.capture_duration {} s cannot hold a frame starting at {offset} s (needs {needed} s)",
                self.rsu.capture_duration_s
            ));
        }
        let window = self.rsu.decoder.search_fraction * self.rsu.capture_duration_s;
        if offset + self.timing.flash_s > window {
            return invalid(format!(
                "flash starts at {offset} s, past the decoder's {window} s search window"
            ));
        }
        if let Some(a) = &self.attack {
            if a.lockout == Some(0) {
                return invalid("attack.lockout must be at least 1".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_sections_and_preset_order() {
        let cfg: ScenarioConfig = "name=x\ntrials=5\nmaster_seed=9\nlighting_preset=night\nchannel.fps=60\n\
                                   channel.noise_sigma=0.01\ntiming.v=16.6\nattack.profile=guess\nattack.lockout=3\n"
            .parse()
            .unwrap();
        assert_eq!(cfg.trials, 5);
        assert_eq!(cfg.channel.fps, 60.0);
        assert!((cfg.channel.exposure_s - 1.0 / 60.0).abs() < 1e-15);
        assert_eq!(cfg.channel.ambient_level, LightingPreset::Night.levels().0);
        assert_eq!(cfg.channel.noise_sigma, 0.01);
        assert_eq!(cfg.timing.speed_mps, 16.6);
        assert_eq!(cfg.attack.as_ref().unwrap().lockout, Some(3));
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            "trials".parse::<ScenarioConfig>(),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            "foo=1".parse::<ScenarioConfig>(),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            "trials=1\ntrials=2".parse::<ScenarioConfig>(),
            Err(ConfigError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(
            "trials=-1".parse::<ScenarioConfig>(),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            "lighting_preset=dusk".parse::<ScenarioConfig>(),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            "attack.lockout=3".parse::<ScenarioConfig>(),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn validation_catches_each_sub_config() {
        for text in [
            "timing.v=0",
            "timing.n=12",
            "channel.pw_s=0.04",
            "channel.frame_drop_prob=1.5",
            "rsu.capture_duration=1.0",
            "protocol.reaction_delay=2",
            "protocol.token_lifetime=0",
            "attack.profile=replay\nattack.lockout=0",
        ] {
            let cfg: ScenarioConfig = text.parse().unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
    }
}
