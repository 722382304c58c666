//! Statistical behaviour of full sessions.
//!
//! Expected values for runs with a probe come from exact enumeration of the
//! entangled signal ⊗ probe state (closed forms below, checked against a
//! brute-force state-vector computation): on a pulse the probe leaves the
//! signal intact with probability `1−E` (probe in `σ̂±`) and flips it with
//! probability `E` (probe in `w_b`, which carries no bit information and is
//! always conclusive under the USD receiver).

use fpb_core::probe::{eve_correct_prob_projective, overlap_q};
use fpb_core::sim::{run_session, sift, EveMode, SessionConfig, SessionStats, Tuning};

fn four_sigma(p: f64, n: u64) -> f64 {
    4.0 * (p * (1.0 - p) / n as f64).sqrt()
}

fn within(actual: Option<f64>, expected: f64, tol: f64) -> bool {
    actual.is_some_and(|a| (a - expected).abs() <= tol)
}

fn session(mode: EveMode, tuning: Option<Tuning>, n: u64, seed: u64) -> SessionConfig {
    SessionConfig {
        n_pulses: n,
        eve_mode: mode,
        tuning,
        seed,
        shards: 4,
        ..SessionConfig::default()
    }
}

fn run(cfg: &SessionConfig) -> SessionStats {
    run_session(cfg, false).unwrap().stats
}

#[test]
fn undisturbed_channel_has_zero_qber() {
    for seed in [1, 2, 3] {
        let stats = run(&session(EveMode::None, None, 100_000, seed));
        assert_eq!(stats.qber, Some(0.0));
        assert_eq!(stats.effective_transmission, 1.0);
        assert_eq!(stats.eve_accuracy, None);
        assert_eq!(stats.renyi_info_analytic, None);
    }
}

#[test]
fn uniform_bases_sift_half() {
    let out = run_session(&session(EveMode::None, None, 100_000, 8), true).unwrap();
    let log = out.log.unwrap();
    let frac = sift(&log).len() as f64 / log.len() as f64;
    assert!((frac - 0.5).abs() <= 0.005, "sifted fraction {frac}");
}

#[test]
fn projective_attack_at_e_0_2() {
    let n = 200_000;
    let stats = run(&session(
        EveMode::Projective,
        Some(Tuning::ErrorRate(0.2)),
        n,
        7,
    ));
    assert!(within(stats.qber, 0.2, 0.005), "qber {:?}", stats.qber);
    assert!(
        within(stats.eve_accuracy, 0.933_01, 0.005),
        "{:?}",
        stats.eve_accuracy
    );
    // over every sifted bit: 1/2 + (E(1−2E))^{1/2}
    let all = 0.5 + (0.2f64 * 0.6).sqrt();
    let sifted = stats.counts.sifted;
    assert!(within(
        stats.eve_accuracy_all_sifted,
        all,
        four_sigma(all, sifted)
    ));
    assert_eq!(stats.eve_conclusive_fraction, None);
    assert!((stats.renyi_info_analytic.unwrap() - 1.75f64.log2()).abs() < 1e-12);
}

#[test]
fn projective_attack_at_perfect_information() {
    let stats = run(&session(
        EveMode::Projective,
        Some(Tuning::ErrorRate(1.0 / 3.0)),
        100_000,
        9,
    ));
    assert!(
        within(stats.eve_accuracy, 1.0, 0.004),
        "{:?}",
        stats.eve_accuracy
    );
    assert_eq!(stats.renyi_info_analytic, Some(1.0));
}

#[test]
fn qber_tracks_configured_error_rate() {
    let n = 100_000;
    for (mode, e) in [
        (EveMode::Projective, 0.05),
        (EveMode::Projective, 0.3),
        (EveMode::Povm, 0.1),
        (EveMode::Povm, 0.25),
    ] {
        let stats = run(&session(mode, Some(Tuning::ErrorRate(e)), n, 21));
        let sifted = stats.counts.sifted;
        assert!(
            within(stats.qber, e, four_sigma(e, sifted)),
            "{mode:?} E={e}: {:?}",
            stats.qber
        );
    }
}

#[test]
fn projective_accuracy_tracks_dominant_correlation() {
    for e in [0.05, 0.15, 0.25] {
        let stats = run(&session(
            EveMode::Projective,
            Some(Tuning::ErrorRate(e)),
            100_000,
            5,
        ));
        let p = eve_correct_prob_projective(e).unwrap();
        let n = stats.counts.error_free_guessed;
        assert!(
            within(stats.eve_accuracy, p, four_sigma(p, n)),
            "E={e}: {:?}",
            stats.eve_accuracy
        );
    }
}

#[test]
fn povm_is_never_wrong_when_conclusive() {
    for seed in 0..5 {
        for e in [0.05, 0.2, 0.3] {
            let stats = run(&session(
                EveMode::Povm,
                Some(Tuning::ErrorRate(e)),
                20_000,
                seed,
            ));
            assert_eq!(
                stats.eve_conclusive_accuracy,
                Some(1.0),
                "seed {seed} E={e}"
            );
        }
    }
}

#[test]
fn povm_conclusive_fraction_and_policy_accuracy() {
    let r = 0.5;
    let stats = run(&session(
        EveMode::Povm,
        Some(Tuning::InconclusiveRate(r)),
        200_000,
        13,
    ));
    let n = stats.counts.error_free_guessed;
    assert!(within(
        stats.eve_conclusive_fraction,
        1.0 - r,
        four_sigma(1.0 - r, n)
    ));
    let expected = 1.0 - r / 2.0;
    assert_eq!(stats.eve_accuracy_expected, Some(expected));
    assert!(within(
        stats.eve_accuracy,
        expected,
        four_sigma(expected, n)
    ));
    // conclusive outcomes over all pulses: (1−E)(1−Q) + E = 3E
    let all = 3.0 * 0.2;
    assert!(within(
        stats.eve_conclusive_rate_all,
        all,
        four_sigma(all, stats.counts.sent)
    ));
}

#[test]
fn selective_relay_exact_rates() {
    let n = 200_000;
    let cfg = SessionConfig {
        selective_relay: true,
        ..session(EveMode::Povm, Some(Tuning::InconclusiveRate(0.5)), n, 7)
    };
    let out = run_session(&cfg, true).unwrap();
    let stats = out.stats;
    // the conclusive σ̂± branch plus the always-conclusive flipped branch: 2E + E
    let transmission = 0.6;
    assert!((stats.effective_transmission - transmission).abs() <= four_sigma(transmission, n));
    let sifted_fraction = sift(out.log.as_ref().unwrap()).len() as f64 / n as f64;
    assert!(
        (sifted_fraction - 0.3).abs() <= 0.005,
        "sifted fraction {sifted_fraction}"
    );
    // QBER among relayed pulses: E / 3E
    let qber = 1.0 / 3.0;
    assert!(within(
        stats.qber,
        qber,
        four_sigma(qber, stats.counts.sifted)
    ));
    // every error-free sifted bit is conclusive and identified
    assert_eq!(stats.eve_accuracy, Some(1.0));
    assert_eq!(stats.eve_conclusive_fraction, Some(1.0));
    assert_eq!(stats.eve_accuracy_expected, Some(1.0));
    // the flipped branch (0.2) splits evenly between the two conclusive
    // outcomes, so over all relayed bits Eve matches Alice on (0.4 + 0.1) / 0.6
    let all = 5.0 / 6.0;
    assert!(within(
        stats.eve_accuracy_all_sifted,
        all,
        four_sigma(all, stats.counts.sifted)
    ));
}

#[test]
fn selective_relay_transmission_versus_matching_loss() {
    // With R? = L the attack forwards 3E of the pulses while a lossy channel
    // forwards 1 − L = 1 − Q; they agree only at E = 0 and E = 1/3.
    for r in [0.0, 1.0] {
        let e = fpb_core::probe::error_rate_from_inconclusive(r).unwrap();
        assert!((3.0 * e - (1.0 - overlap_q(e).unwrap())).abs() < 1e-12);
    }
    let n = 100_000;
    let attack = run(&SessionConfig {
        selective_relay: true,
        require_loss_match: true,
        channel_loss: 0.0,
        ..session(EveMode::Povm, Some(Tuning::InconclusiveRate(0.0)), n, 3)
    });
    let plain = run(&SessionConfig {
        channel_loss: 0.0,
        ..session(EveMode::None, None, n, 4)
    });
    assert_eq!(attack.effective_transmission, plain.effective_transmission);
}

#[test]
fn runs_are_deterministic_per_seed_and_shards() {
    let cfg = session(EveMode::Povm, Some(Tuning::ErrorRate(0.2)), 30_000, 77);
    let a = run_session(&cfg, true).unwrap();
    let b = run_session(&cfg, true).unwrap();
    assert_eq!(a, b);

    let resharded = SessionConfig { shards: 7, ..cfg };
    let c = run(&resharded);
    assert_ne!(a.stats.counts, c.counts);
    let sifted = c.counts.sifted;
    assert!(within(c.qber, 0.2, four_sigma(0.2, sifted)));

    let reseeded = SessionConfig { seed: 78, ..cfg };
    assert_ne!(run(&reseeded).counts, a.stats.counts);
}

#[test]
fn lossy_channel_transmission() {
    let n = 100_000;
    let stats = run(&SessionConfig {
        channel_loss: 0.3,
        ..session(EveMode::Projective, Some(Tuning::ErrorRate(0.1)), n, 31)
    });
    assert!((stats.effective_transmission - 0.7).abs() <= four_sigma(0.7, n));
    assert!(within(
        stats.qber,
        0.1,
        four_sigma(0.1, stats.counts.sifted)
    ));
}
