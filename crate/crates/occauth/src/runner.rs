//! Monte Carlo scenario execution and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use occauth_core::adversary::{AttackerProfile, Campaign, CampaignResult, World};
use occauth_core::channel::ChannelError;
use occauth_core::frame::ClassLabel;
use occauth_core::protocol::{audit_transcript, AuditError, SessionRecord, SessionState};
use occauth_core::rng::SeedPath;
use rayon::prelude::*;

use crate::config::{ConfigError, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("trial {trial}: {source}")]
    Channel { trial: u64, source: ChannelError },
}

/// One session's line in `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: u64,
    pub record: SessionRecord,
}

impl TrialRow {
    pub const CSV_HEADER: &'static str =
        "trial,vehicle,challenge_class,emitted_label,decoded_label,decode_score,alignment_s,decode_latency_s,token,final_state";

    /// Time from challenge issue to the finished decode.
    pub fn decode_latency(&self) -> Option<f64> {
        Some(self.record.decoded_at? - self.record.challenge?.issued_at)
    }

    pub fn csv_row(&self) -> String {
        let r = &self.record;
        let code =
            |l: Option<ClassLabel>| l.map(|l| l.numeric_code().to_string()).unwrap_or_default();
        let decode = r.decode.as_ref();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            r.session.vehicle_id,
            r.challenge
                .map(|c| c.class.get().to_string())
                .unwrap_or_default(),
            code(r.emitted_label()),
            code(decode.map(|d| d.label)),
            decode
                .map(|d| format!("{:.6}", d.score))
                .unwrap_or_default(),
            decode
                .and_then(|d| d.slot_alignment)
                .map(|a| format!("{a:.6}"))
                .unwrap_or_default(),
            self.decode_latency()
                .map(|l| format!("{l:.6}"))
                .unwrap_or_default(),
            u8::from(r.token_issued()),
            r.state(),
        )
    }

    pub fn transcript_name(&self) -> String {
        format!(
            "trial_{:06}_{}.tsv",
            self.trial, self.record.session.vehicle_id
        )
    }
}

/// Aggregates over every session of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub sessions: u64,
    pub tokens: u64,
    /// Sessions that reached the camera.
    pub decoded: u64,
    /// Decoded sessions whose label matched what was flashed.
    pub decoded_correctly: u64,
    /// Per emitted label code: (correct, total).
    pub per_class: BTreeMap<u8, (u64, u64)>,
    pub latency_sum_s: f64,
    pub rejections: BTreeMap<&'static str, u64>,
}

impl Summary {
    pub fn from_rows(rows: &[TrialRow]) -> Self {
        let mut s = Self::default();
        for row in rows {
            let r = &row.record;
            s.sessions += 1;
            s.tokens += u64::from(r.token_issued());
            if let SessionState::Rejected(reason) = r.state() {
                *s.rejections.entry(reason.as_str()).or_default() += 1;
            }
            if let (Some(d), Some(emitted), Some(lat)) =
                (&r.decode, r.emitted_label(), row.decode_latency())
            {
                let ok = d.label == emitted;
                s.decoded += 1;
                s.decoded_correctly += u64::from(ok);
                s.latency_sum_s += lat;
                let e = s.per_class.entry(emitted.numeric_code()).or_default();
                e.0 += u64::from(ok);
                e.1 += 1;
            }
        }
        s
    }

    fn ratio(a: u64, b: u64) -> f64 {
        if b == 0 {
            0.0
        } else {
            a as f64 / b as f64
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        Self::ratio(self.tokens, self.sessions)
    }

    pub fn decode_accuracy(&self) -> f64 {
        Self::ratio(self.decoded_correctly, self.decoded)
    }

    pub fn mean_decode_latency(&self) -> f64 {
        if self.decoded == 0 {
            0.0
        } else {
            self.latency_sum_s / self.decoded as f64
        }
    }

    /// `metric,value` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        let mut line = |k: &str, v: String| writeln!(out, "{k},{v}").expect("writing to a String");
        line("sessions", self.sessions.to_string());
        line("tokens", self.tokens.to_string());
        line("acceptance_rate", format!("{:.6}", self.acceptance_rate()));
        line("decoded", self.decoded.to_string());
        line("decode_accuracy", format!("{:.6}", self.decode_accuracy()));
        line(
            "mean_decode_latency_s",
            format!("{:.6}", self.mean_decode_latency()),
        );
        for (code, (ok, n)) in &self.per_class {
            line(
                &format!("class_{code:02}_accuracy"),
                format!("{:.6}", Self::ratio(*ok, *n)),
            );
        }
        for (reason, n) in &self.rejections {
            line(&format!("rejected_{reason}"), n.to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub name: String,
    /// In trial order, then in scene order within a trial.
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
    pub campaign: Option<CampaignResult>,
}

impl MetricsReport {
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(TrialRow::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_row());
            out.push('\n');
        }
        out
    }

    /// Replays every transcript; returns the failures by file name.
    pub fn audit(&self) -> Vec<(String, AuditError)> {
        self.rows
            .iter()
            .filter_map(|row| {
                let messages = row.record.session.transcript();
                audit_transcript(messages)
                    .err()
                    .map(|e| (row.transcript_name(), e))
            })
            .collect()
    }

    /// Writes `metrics.csv`, `summary.csv`, `transcripts/` and, for attack
    /// runs, `attack.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let transcripts = dir.join("transcripts");
        fs::create_dir_all(&transcripts)
            .with_context(|| format!("creating {}", transcripts.display()))?;
        fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        fs::write(dir.join("summary.csv"), self.summary.to_csv())?;
        if let Some(c) = &self.campaign {
            fs::write(
                dir.join("attack.csv"),
                format!("{}\n{}\n", CampaignResult::CSV_HEADER, c.csv_row()),
            )?;
        }
        for row in &self.rows {
            fs::write(
                transcripts.join(row.transcript_name()),
                row.record.session.transcript_tsv(),
            )?;
        }
        Ok(())
    }
}

/// The simulated world a scenario runs in.
pub fn world(cfg: &ScenarioConfig) -> World {
    let mut w = World::new(cfg.master_seed, cfg.rsu, cfg.channel, cfg.timing);
    w.reaction_delay_s = cfg.reaction_delay_s;
    w.ra.token_lifetime_s = cfg.token_lifetime_s;
    w
}

/// Seed for honest trial `index`.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    SeedPath::new(master_seed)
        .named("trial")
        .child(index)
        .seed()
}

/// Validates `cfg`, then runs its trials: honest sessions, or attack trials
/// when an attack is configured. Trials run in parallel but results are
/// always in trial order.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsReport, RunError> {
    cfg.validate()?;
    let world = world(cfg);
    let (per_trial, campaign) = match &cfg.attack {
        None => {
            let sessions = (0..cfg.trials)
                .into_par_iter()
                .map(|i| {
                    world
                        .honest_session(trial_seed(cfg.master_seed, i))
                        .map(|r| vec![r])
                        .map_err(|source| RunError::Channel { trial: i, source })
                })
                .collect::<Result<Vec<_>, _>>()?;
            (sessions, None)
        }
        Some(spec) => {
            let campaign = Campaign {
                lockout: spec.lockout,
                bystanders: spec.bystanders,
                ..Campaign::new(
                    AttackerProfile::standard(spec.profile),
                    world,
                    cfg.master_seed,
                )
            };
            run_campaign(&campaign, cfg.trials)?
        }
    };
    let rows: Vec<TrialRow> = per_trial
        .into_iter()
        .enumerate()
        .flat_map(|(i, sessions)| {
            sessions.into_iter().map(move |record| TrialRow {
                trial: i as u64,
                record,
            })
        })
        .collect();
    Ok(MetricsReport {
        name: cfg.name.clone(),
        summary: Summary::from_rows(&rows),
        rows,
        campaign,
    })
}

/// A campaign with a lockout shares one failure ledger across trials, so it
/// runs sequentially; otherwise trials are independent.
pub fn run_campaign(
    campaign: &Campaign,
    trials: u64,
) -> Result<(Vec<Vec<SessionRecord>>, Option<CampaignResult>), RunError> {
    let channel = |source| RunError::Channel { trial: 0, source };
    if campaign.lockout.is_some() {
        let (result, sessions) = campaign.run(trials).map_err(channel)?;
        return Ok((sessions, Some(result)));
    }
    let recording = campaign.recording().map_err(channel)?;
    let recorded = recording.emitted.map(|s| s.symbols()).unwrap_or_default();
    let sessions = (0..trials)
        .into_par_iter()
        .map(|i| {
            campaign
                .trial(i, &recorded)
                .map_err(|source| RunError::Channel { trial: i, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let successes = sessions.iter().filter(|s| campaign.is_success(s)).count() as u64;
    Ok((sessions, Some(campaign.summarize(successes, trials))))
}
