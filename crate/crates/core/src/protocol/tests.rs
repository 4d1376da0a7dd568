use super::*;
use crate::channel::LightingPreset;
use crate::frame::parse_symbols;
use alloc::collections::BTreeSet;
use alloc::vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn authority() -> (RegistrationAuthority, VehicleCredential) {
    let mut ra = RegistrationAuthority::new([9; 32]);
    let cred = ra.enroll(
        VehicleId(1),
        [1; 32],
        Validity {
            start: 0.0,
            end: 3600.0,
        },
    );
    (ra, cred)
}

fn verified(ra: &RegistrationAuthority, cred: &VehicleCredential) -> AuthSession {
    let mut s = AuthSession::new(cred.vehicle_id);
    nlos_authenticate(&mut s, cred, ra, 1, 0.0, 0.05).unwrap();
    s
}

#[test]
fn nlos_phase() {
    let (ra, cred) = authority();
    let mut s = AuthSession::new(cred.vehicle_id);
    assert_eq!(
        nlos_authenticate(&mut s, &cred, &ra, 1, 0.0, 0.05),
        Ok(SessionState::NlosVerified)
    );
    assert_eq!(s.transcript().len(), 2);
    assert!(nlos_authenticate(&mut s, &cred, &ra, 1, 0.0, 0.05).is_err());

    let stranger = VehicleCredential {
        vehicle_id: VehicleId(77),
        ..cred.clone()
    };
    let mut s = AuthSession::new(stranger.vehicle_id);
    assert_eq!(
        nlos_authenticate(&mut s, &stranger, &ra, 1, 0.0, 0.05),
        Ok(SessionState::Rejected(RejectReason::UnknownVehicle))
    );

    let mut s = AuthSession::new(cred.vehicle_id);
    assert_eq!(
        nlos_authenticate(&mut s, &cred, &ra, 1, 5000.0, 0.05),
        Ok(SessionState::Rejected(RejectReason::Expired))
    );
}

#[test]
fn challenge_classes_are_uniform() {
    // chi-square, 26 degrees of freedom, 99th percentile
    let critical = 45.6417;
    {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let q = ChiSquared::new(26.0).unwrap().inverse_cdf(0.99);
        assert!((q - critical).abs() < 1e-3, "{q}");
    }
    let (ra, cred) = authority();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0u32; 27];
    let n = 10_000;
    for _ in 0..n {
        let mut s = verified(&ra, &cred);
        let ch = issue_challenge(&mut s, &mut rng, &TimingParams::default(), 0.05).unwrap();
        counts[usize::from(ch.class.get() - 1)] += 1;
    }
    let expected = f64::from(n) / 27.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (f64::from(c) - expected).powi(2) / expected)
        .sum();
    assert!(chi2 < critical, "chi2 = {chi2}");
}

#[test]
fn challenge_rules() {
    let (ra, cred) = authority();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut fresh = AuthSession::new(cred.vehicle_id);
    assert!(matches!(
        issue_challenge(&mut fresh, &mut rng, &TimingParams::default(), 0.0),
        Err(ProtocolError::WrongState { .. })
    ));
    let mut s = verified(&ra, &cred);
    let ch = issue_challenge(&mut s, &mut rng, &TimingParams::default(), 0.05).unwrap();
    assert!((ch.deadline - ch.issued_at - 25.0 / 8.3).abs() < 1e-12);
    assert!((ch.deadline - ch.issued_at - 3.01).abs() < 0.01);
    assert!(issue_challenge(&mut s, &mut rng, &TimingParams::default(), 0.05).is_err());
}

fn challenge(class: u32) -> Challenge {
    Challenge {
        challenge_id: 5,
        class: ClassIndex::new(class).unwrap(),
        issued_at: 0.05,
        deadline: 3.06,
        target: VehicleId(1),
    }
}

#[test]
fn vehicle_response() {
    let ch = challenge(14);
    let s = vehicle_respond(&ch, 0.15, 0.1, 0.0);
    assert_eq!(s.symbols(), parse_symbols("11-00-10-00-10-00-10").unwrap());
    assert_eq!(s.start(), Some(0.1));
    assert_eq!(s.span(), 1.05);
    assert_eq!(
        vehicle_respond(&ch, 0.15, 0.1, 0.3).start(),
        Some(0.1 + 0.3)
    );
}

fn decoded(session: &mut AuthSession, label: ClassLabel, at: f64) -> DecodeResult {
    let r = DecodeResult {
        label,
        score: 1.0,
        slot_alignment: Some(0.4),
        per_slot_symbols: None,
    };
    record_decode(session, &r, at).unwrap();
    r
}

#[test]
fn check_phase_outcomes() {
    let (ra, cred) = authority();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ch = challenge(15);

    let mut s = verified(&ra, &cred);
    issue_challenge(&mut s, &mut rng, &TimingParams::default(), 0.05).unwrap();
    let r = decoded(&mut s, ClassLabel::Valid(ch.class), 2.0);
    assert_eq!(
        check_phase(&mut s, &r, &ch, 2.0, &ra, 1),
        Ok(SessionState::TokenIssued)
    );
    assert!(ra.verify_token(&s.token.unwrap()));

    let mut s = verified(&ra, &cred);
    issue_challenge(&mut s, &mut rng, &TimingParams::default(), 0.05).unwrap();
    let r = decoded(&mut s, ClassLabel::valid(14).unwrap(), 2.0);
    assert_eq!(
        check_phase(&mut s, &r, &ch, 2.0, &ra, 1),
        Ok(SessionState::Rejected(RejectReason::WrongClass))
    );
    assert!(s.token.is_none());

    let mut s = verified(&ra, &cred);
    issue_challenge(&mut s, &mut rng, &TimingParams::default(), 0.05).unwrap();
    let r = decoded(&mut s, ClassLabel::Valid(ch.class), 3.5);
    assert_eq!(
        check_phase(&mut s, &r, &ch, 3.5, &ra, 1),
        Ok(SessionState::Rejected(RejectReason::Late))
    );

    let mut s = verified(&ra, &cred);
    issue_challenge(&mut s, &mut rng, &TimingParams::default(), 0.05).unwrap();
    let r = decoded(&mut s, ClassLabel::AllZero, 2.0);
    assert_eq!(
        check_phase(&mut s, &r, &ch, 2.0, &ra, 1),
        Ok(SessionState::Rejected(RejectReason::Malformed))
    );
    let r = DecodeResult {
        label: ClassLabel::AllZero,
        score: 1.0,
        slot_alignment: None,
        per_slot_symbols: None,
    };
    assert!(check_phase(&mut s, &r, &ch, 2.0, &ra, 1).is_err());
}

fn mild() -> ChannelParams {
    ChannelParams {
        jitter_sigma: 0.01,
        frame_drop_prob: 0.01,
        ..ChannelParams::new(30.0)
    }
    .with_lighting(LightingPreset::DayCloudy)
}

#[test]
fn honest_sessions_get_tokens() {
    let (ra, cred) = authority();
    let v = Vehicle::honest(cred);
    let mut tokens = 0;
    for seed in 0..200 {
        let r = run_session(
            &v,
            &RsuConfig::default(),
            &ra,
            &mild(),
            &TimingParams::default(),
            seed,
        )
        .unwrap();
        audit_transcript(r.session.transcript()).unwrap();
        tokens += usize::from(r.token_issued());
    }
    assert!(tokens >= 195, "{tokens}/200");
}

#[test]
fn dark_vehicle_is_rejected() {
    let (ra, cred) = authority();
    let v = Vehicle {
        responder: Responder::Dark,
        ..Vehicle::honest(cred)
    };
    let r = run_session(
        &v,
        &RsuConfig::default(),
        &ra,
        &mild(),
        &TimingParams::default(),
        8,
    )
    .unwrap();
    assert_eq!(r.state(), SessionState::Rejected(RejectReason::Malformed));
    assert_eq!(r.decode.unwrap().label, ClassLabel::AllZero);
}

#[test]
fn replayed_response_fails_26_of_27() {
    let (ra, cred) = authority();
    let honest = Vehicle::honest(cred.clone());
    let rsu = RsuConfig::default();
    let first = run_session(&honest, &rsu, &ra, &mild(), &TimingParams::default(), 1).unwrap();
    assert!(first.token_issued());
    let replayer = Vehicle {
        responder: Responder::Replay(first.emitted.unwrap().symbols()),
        ..honest
    };
    let n = 3000u64;
    let mut wrong = 0u64;
    for seed in 100..100 + n {
        let r = run_session(
            &replayer,
            &rsu,
            &ra,
            &mild(),
            &TimingParams::default(),
            seed,
        )
        .unwrap();
        wrong += u64::from(r.state() == SessionState::Rejected(RejectReason::WrongClass));
    }
    let p = 26.0 / 27.0;
    let rate = wrong as f64 / n as f64;
    assert!(
        (rate - p).abs() <= crate::stats::binomial_envelope(p, n, 3.0),
        "{rate}"
    );
}

#[test]
fn sessions_are_deterministic_and_fresh() {
    let (ra, cred) = authority();
    let v = Vehicle::honest(cred);
    let rsu = RsuConfig::default();
    let a = run_session(&v, &rsu, &ra, &mild(), &TimingParams::default(), 42).unwrap();
    let b = run_session(&v, &rsu, &ra, &mild(), &TimingParams::default(), 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.session.transcript_tsv(), b.session.transcript_tsv());
    let mut ids = BTreeSet::new();
    for seed in 0..500 {
        let r = run_session(&v, &rsu, &ra, &mild(), &TimingParams::default(), seed).unwrap();
        assert!(ids.insert(r.challenge.unwrap().challenge_id));
    }
}

#[test]
fn fast_vehicle_is_late() {
    let (ra, cred) = authority();
    let v = Vehicle::honest(cred);
    let fast = TimingParams {
        speed_mps: 16.6,
        ..Default::default()
    };
    let r = run_session(
        &v,
        &RsuConfig::default(),
        &ra,
        &ChannelParams::new(30.0),
        &fast,
        5,
    )
    .unwrap();
    assert_eq!(r.state(), SessionState::Rejected(RejectReason::Late));
    audit_transcript(&parse_transcript(&r.session.transcript_tsv()).unwrap()).unwrap();
}

#[test]
fn lockout_after_failures() {
    let (ra, cred) = authority();
    let v = Vehicle {
        responder: Responder::Dark,
        ..Vehicle::honest(cred.clone())
    };
    let mut ledger = FailureLedger::new(Some(FailureLedger::DEFAULT_MAX_FAILURES));
    let rsu = RsuConfig::default();
    for seed in 0..3 {
        let r = ledger
            .run_session(&v, &rsu, &ra, &mild(), &TimingParams::default(), seed)
            .unwrap();
        assert_eq!(r.state(), SessionState::Rejected(RejectReason::Malformed));
    }
    assert!(ledger.is_locked(cred.vehicle_id));
    let honest = Vehicle::honest(cred);
    let r = ledger
        .run_session(&honest, &rsu, &ra, &mild(), &TimingParams::default(), 9)
        .unwrap();
    assert_eq!(r.state(), SessionState::Rejected(RejectReason::LockedOut));
    audit_transcript(r.session.transcript()).unwrap();

    let mut open = FailureLedger::new(None);
    for seed in 0..5 {
        open.run_session(&v, &rsu, &ra, &mild(), &TimingParams::default(), seed)
            .unwrap();
    }
    assert!(!open.is_locked(VehicleId(1)));
    assert_eq!(open.failures(VehicleId(1)), 5);
}

#[test]
fn scene_sessions_decode_independently() {
    let mut ra = RegistrationAuthority::new([9; 32]);
    let participants: Vec<Participant> = (1..=3u64)
        .map(|id| Participant {
            vehicle: Vehicle::honest(ra.enroll(VehicleId(id), [id as u8; 32], Validity::ALWAYS)),
            lane_offset_m: 3.5 * id as f64,
            distance_m: 25.0,
        })
        .collect();
    let records = run_scene(
        &participants,
        0.0,
        &RsuConfig::default(),
        &ra,
        &ChannelParams::new(30.0),
        &TimingParams::default(),
        77,
        &RoiOptions::default(),
    )
    .unwrap();
    for r in &records {
        assert_eq!(r.decode.unwrap().label, r.emitted_label().unwrap());
        assert!(r.token_issued());
    }
    let overlapping = vec![
        participants[0].clone(),
        Participant {
            lane_offset_m: 3.5,
            ..participants[1].clone()
        },
    ];
    assert!(run_scene(
        &overlapping,
        0.0,
        &RsuConfig::default(),
        &ra,
        &ChannelParams::new(30.0),
        &TimingParams::default(),
        77,
        &RoiOptions::default()
    )
    .is_err());
}
