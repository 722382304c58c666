//! Monte Carlo BB84 sessions with an optional entangling probe.
//!
//! Each pulse goes through: Alice's preparation, the probe interaction and
//! probe measurement, the channel (erasure or selective relay), Bob's
//! measurement, sifting, and finally Eve's bit assignment once the basis is
//! announced.
//!
//! The joint signal ⊗ probe statistics are exact: for every signal kind the
//! engine precomputes, from the entangled state, the probability of each probe
//! outcome and Bob's conditional outcome weights for both of his bases. The
//! probe operators act on the probe factor only, so sampling Eve first and
//! Bob conditionally on her outcome gives the same joint distribution as any
//! other ordering.
//!
//! Pulses are split into `shards` contiguous blocks; block `k` draws from
//! `RandomStream::new(seed, k)`. Changing the shard count changes which stream
//! each pulse draws from and therefore the sampled values, but not their
//! distribution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::povm::{build_usd_povm, infer_bit_povm, PovmOutcome};
use crate::probe::{
    entangle, eve_correct_prob_projective, infer_bit_projective, measurement_basis, renyi_info,
    signal_state, CnotConfig, ProbeDetector, ProbeTuning, SignalBasis, SignalKind,
};
use crate::quantum::{
    sample_weights, signal_projection, EffectSet, Operator, RandomStream, StateVec4, ALGEBRA_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveMode {
    None,
    Projective,
    Povm,
}

impl EveMode {
    pub fn label(self) -> &'static str {
        match self {
            EveMode::None => "none",
            EveMode::Projective => "projective",
            EveMode::Povm => "povm",
        }
    }
}

/// How the probe is tuned. Exactly one parameter is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuning {
    ErrorRate(f64),
    InconclusiveRate(f64),
}

impl Tuning {
    pub fn resolve(self) -> Result<ProbeTuning> {
        match self {
            Tuning::ErrorRate(e) => ProbeTuning::from_error_rate(e),
            Tuning::InconclusiveRate(r) => ProbeTuning::from_inconclusive_rate(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n_pulses: u64,
    pub eve_mode: EveMode,
    pub tuning: Option<Tuning>,
    /// Erasure probability of the channel to Bob.
    pub channel_loss: f64,
    /// Forward only pulses with a conclusive probe outcome. Replaces the
    /// channel erasure. Povm mode only.
    pub selective_relay: bool,
    /// Stealth check: with selective relay, require `R? = channel_loss`.
    pub require_loss_match: bool,
    pub seed: u64,
    pub shards: u32,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            n_pulses: 10_000,
            eve_mode: EveMode::None,
            tuning: None,
            channel_loss: 0.0,
            selective_relay: false,
            require_loss_match: false,
            seed: 0,
            shards: 1,
        }
    }
}

impl SessionConfig {
    /// Checks the configuration and resolves the probe tuning (`None` without a probe).
    pub fn validate(&self) -> Result<Option<ProbeTuning>> {
        let invalid = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_pulses == 0 {
            return invalid("n_pulses must be at least 1");
        }
        if self.shards == 0 {
            return invalid("shards must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.channel_loss) {
            return invalid("channel_loss must lie in [0, 1]");
        }
        if self.selective_relay && self.eve_mode != EveMode::Povm {
            return invalid("selective relay requires the povm probe mode");
        }
        if self.require_loss_match && !self.selective_relay {
            return invalid("the loss-match check applies to selective relay only");
        }
        let tuning = match (self.eve_mode, self.tuning) {
            (EveMode::None, None) => return Ok(None),
            (EveMode::None, Some(_)) => return invalid("probe tuning given without a probe"),
            (_, None) => return invalid("probe modes need an error rate or an inconclusive rate"),
            (_, Some(t)) => t.resolve()?,
        };
        if self.require_loss_match
            && (tuning.inconclusive_rate - self.channel_loss).abs() > ALGEBRA_TOL
        {
            return Err(Error::InvalidConfig(format!(
                "inconclusive rate {} does not match channel loss {}",
                tuning.inconclusive_rate, self.channel_loss
            )));
        }
        Ok(Some(tuning))
    }
}

/// What the probe's detector(s) reported for one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EveOutcome {
    Projective(ProbeDetector),
    Povm(PovmOutcome),
}

impl EveOutcome {
    pub fn label(self) -> &'static str {
        match self {
            EveOutcome::Projective(d) => d.label(),
            EveOutcome::Povm(o) => o.label(),
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        let out = match label {
            "w_plus" => EveOutcome::Projective(ProbeDetector::WPlus),
            "w_minus" => EveOutcome::Projective(ProbeDetector::WMinus),
            "conclusive_plus" => EveOutcome::Povm(PovmOutcome::ConclusivePlus),
            "conclusive_minus" => EveOutcome::Povm(PovmOutcome::ConclusiveMinus),
            "inconclusive" => EveOutcome::Povm(PovmOutcome::Inconclusive),
            _ => return None,
        };
        Some(out)
    }

    pub fn is_conclusive(self) -> bool {
        match self {
            EveOutcome::Projective(_) => true,
            EveOutcome::Povm(o) => o.is_conclusive(),
        }
    }

    /// Eve's bit for the announced basis, `None` when she has no information.
    pub fn infer_bit(self, basis: SignalBasis) -> Option<u8> {
        match self {
            EveOutcome::Projective(d) => Some(infer_bit_projective(d, basis)),
            EveOutcome::Povm(o) => infer_bit_povm(o, basis),
        }
    }
}

/// One pulse of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub idx: u64,
    pub alice_bit: u8,
    pub alice_basis: SignalBasis,
    pub eve_outcome: Option<EveOutcome>,
    /// Whether the probe (or the bare channel) forwarded the signal.
    pub relayed: bool,
    pub bob_received: bool,
    pub bob_basis: SignalBasis,
    pub bob_bit: Option<u8>,
    pub sifted: bool,
    /// Eve's bit after reconciliation (sifted pulses only), random guesses included.
    pub eve_guess: Option<u8>,
}

/// A pulse survives sifting when Bob received it and the bases agree.
pub fn is_sifted(rec: &PulseRecord) -> bool {
    rec.bob_received && rec.alice_basis == rec.bob_basis
}

/// Indices (into `log`) of the sifted pulses, in order.
pub fn sift(log: &[PulseRecord]) -> Vec<usize> {
    log.iter()
        .enumerate()
        .filter(|(_, r)| is_sifted(r))
        .map(|(i, _)| i)
        .collect()
}

/// Additive per-session tallies. Merging is associative and exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCounts {
    pub sent: u64,
    pub received: u64,
    pub sifted: u64,
    pub sifted_errors: u64,
    /// Probe measurements performed (all pulses when a probe is present).
    pub eve_measured: u64,
    /// Conclusive probe outcomes over all pulses.
    pub eve_conclusive: u64,
    /// Sifted pulses carrying a guess from Eve.
    pub eve_guessed: u64,
    pub eve_correct: u64,
    /// Sifted pulses where Bob's bit equals Alice's and Eve made a guess.
    pub error_free_guessed: u64,
    pub error_free_correct: u64,
    pub error_free_conclusive: u64,
    pub error_free_conclusive_correct: u64,
}

impl SessionCounts {
    pub fn record(&mut self, rec: &PulseRecord) {
        self.sent += 1;
        if let Some(outcome) = rec.eve_outcome {
            self.eve_measured += 1;
            if outcome.is_conclusive() {
                self.eve_conclusive += 1;
            }
        }
        if rec.bob_received {
            self.received += 1;
        }
        if !rec.sifted {
            return;
        }
        self.sifted += 1;
        let bob_correct = rec.bob_bit == Some(rec.alice_bit);
        if !bob_correct {
            self.sifted_errors += 1;
        }
        let Some(guess) = rec.eve_guess else {
            return;
        };
        let eve_correct = guess == rec.alice_bit;
        self.eve_guessed += 1;
        self.eve_correct += u64::from(eve_correct);
        if bob_correct {
            self.error_free_guessed += 1;
            self.error_free_correct += u64::from(eve_correct);
            if rec.eve_outcome.is_some_and(EveOutcome::is_conclusive) {
                self.error_free_conclusive += 1;
                self.error_free_conclusive_correct += u64::from(eve_correct);
            }
        }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            sent: self.sent + other.sent,
            received: self.received + other.received,
            sifted: self.sifted + other.sifted,
            sifted_errors: self.sifted_errors + other.sifted_errors,
            eve_measured: self.eve_measured + other.eve_measured,
            eve_conclusive: self.eve_conclusive + other.eve_conclusive,
            eve_guessed: self.eve_guessed + other.eve_guessed,
            eve_correct: self.eve_correct + other.eve_correct,
            error_free_guessed: self.error_free_guessed + other.error_free_guessed,
            error_free_correct: self.error_free_correct + other.error_free_correct,
            error_free_conclusive: self.error_free_conclusive + other.error_free_conclusive,
            error_free_conclusive_correct: self.error_free_conclusive_correct
                + other.error_free_conclusive_correct,
        }
    }

    pub fn from_log(log: &[PulseRecord]) -> Self {
        let mut counts = Self::default();
        for rec in log {
            counts.record(rec);
        }
        counts
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Aggregate statistics of a session. `None` marks an undefined value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub counts: SessionCounts,
    /// Fraction of sifted bits where Bob's bit differs from Alice's.
    pub qber: Option<f64>,
    /// Eve's accuracy on the error-free sifted bits, i.e. those where Bob
    /// holds the state correlated with the probe's `σ±`. This is the quantity
    /// the projective dominant-correlation probability describes.
    pub eve_accuracy: Option<f64>,
    /// Eve's accuracy over every sifted bit, errors included.
    pub eve_accuracy_all_sifted: Option<f64>,
    /// Analytic expectation of `eve_accuracy` under the guessing policy.
    pub eve_accuracy_expected: Option<f64>,
    /// Povm mode: conclusive fraction among the error-free sifted bits.
    pub eve_conclusive_fraction: Option<f64>,
    /// Povm mode: accuracy on conclusive, error-free sifted bits.
    pub eve_conclusive_accuracy: Option<f64>,
    /// Conclusive probe outcomes over all pulses.
    pub eve_conclusive_rate_all: Option<f64>,
    pub effective_transmission: f64,
    pub renyi_info_analytic: Option<f64>,
}

impl SessionStats {
    pub fn from_counts(
        counts: SessionCounts,
        cfg: &SessionConfig,
        tuning: Option<&ProbeTuning>,
    ) -> Result<Self> {
        let povm = cfg.eve_mode == EveMode::Povm;
        let expected = match (cfg.eve_mode, tuning) {
            (EveMode::Projective, Some(t)) => Some(eve_correct_prob_projective(t.error_rate)?),
            (EveMode::Povm, Some(_)) if cfg.selective_relay => Some(1.0),
            (EveMode::Povm, Some(t)) => Some(1.0 - t.inconclusive_rate / 2.0),
            _ => None,
        };
        Ok(Self {
            counts,
            qber: ratio(counts.sifted_errors, counts.sifted),
            eve_accuracy: ratio(counts.error_free_correct, counts.error_free_guessed),
            eve_accuracy_all_sifted: ratio(counts.eve_correct, counts.eve_guessed),
            eve_accuracy_expected: expected,
            eve_conclusive_fraction: if povm {
                ratio(counts.error_free_conclusive, counts.error_free_guessed)
            } else {
                None
            },
            eve_conclusive_accuracy: if povm {
                ratio(
                    counts.error_free_conclusive_correct,
                    counts.error_free_conclusive,
                )
            } else {
                None
            },
            eve_conclusive_rate_all: ratio(counts.eve_conclusive, counts.eve_measured),
            effective_transmission: ratio(counts.received, counts.sent).unwrap_or(0.0),
            renyi_info_analytic: tuning.map(|t| renyi_info(t.error_rate)).transpose()?,
        })
    }
}

/// Statistics of a pulse log under the configuration that produced it.
pub fn aggregate(log: &[PulseRecord], cfg: &SessionConfig) -> Result<SessionStats> {
    let tuning = cfg.validate()?;
    SessionStats::from_counts(SessionCounts::from_log(log), cfg, tuning.as_ref())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutput {
    pub stats: SessionStats,
    pub log: Option<Vec<PulseRecord>>,
}

fn kind_index(kind: SignalKind) -> usize {
    match kind {
        SignalKind::U => 0,
        SignalKind::UBar => 1,
        SignalKind::V => 2,
        SignalKind::VBar => 3,
    }
}

fn basis_index(basis: SignalBasis) -> usize {
    match basis {
        SignalBasis::U => 0,
        SignalBasis::V => 1,
    }
}

const BASES: [SignalBasis; 2] = [SignalBasis::U, SignalBasis::V];

/// Exact per-kind outcome tables for one session configuration.
#[derive(Debug, Clone)]
pub struct PulseModel {
    outcomes: Vec<EveOutcome>,
    /// `[kind][outcome]`: probe outcome probabilities.
    eve_probs: [Vec<f64>; 4],
    /// `[kind][outcome][bob basis][bob bit]`: unnormalized joint weights.
    bob_weights: [Vec<[[f64; 2]; 2]>; 4],
}

impl PulseModel {
    pub fn new(mode: EveMode, tuning: Option<&ProbeTuning>, cnot: &CnotConfig) -> Result<Self> {
        let g = cnot.geometry;
        let (outcomes, probe_effects): (Vec<EveOutcome>, Vec<Operator>) = match (mode, tuning) {
            (EveMode::None, _) => (Vec::new(), vec![Operator::identity(2)?]),
            (EveMode::Projective, Some(_)) => {
                let (wp, wm) = measurement_basis();
                (
                    vec![
                        EveOutcome::Projective(ProbeDetector::WPlus),
                        EveOutcome::Projective(ProbeDetector::WMinus),
                    ],
                    vec![Operator::outer(&wp), Operator::outer(&wm)],
                )
            }
            (EveMode::Povm, Some(t)) => {
                let povm = build_usd_povm(t.error_rate)?;
                (
                    PovmOutcome::ALL
                        .iter()
                        .map(|&o| EveOutcome::Povm(o))
                        .collect(),
                    PovmOutcome::ALL
                        .iter()
                        .map(|&o| povm.element(o).clone())
                        .collect(),
                )
            }
            _ => return Err(Error::InvalidConfig("probe mode without tuning".into())),
        };
        // probe effects lifted to the joint space, I ⊗ Π
        let identity = Operator::identity(2)?;
        let lifted = EffectSet::new(
            probe_effects
                .iter()
                .map(|e| Operator::kron(&identity, e))
                .collect::<std::result::Result<Vec<_>, _>>()?,
        )?;
        let mut eve_probs: [Vec<f64>; 4] = Default::default();
        let mut bob_weights: [Vec<[[f64; 2]; 2]>; 4] = Default::default();
        for kind in SignalKind::ALL {
            let joint: StateVec4 = match tuning {
                Some(t) if mode != EveMode::None => entangle(kind, t.error_rate, cnot)?,
                _ => crate::quantum::tensor_product(
                    &signal_state(kind, &g),
                    &crate::probe::probe_basis().0,
                ),
            };
            let k = kind_index(kind);
            eve_probs[k] = lifted.probabilities(&joint)?;
            bob_weights[k] = probe_effects
                .iter()
                .map(|effect| {
                    let mut w = [[0.0; 2]; 2];
                    for basis in BASES {
                        for bit in 0..2u8 {
                            let phi = signal_state(SignalKind::from_bit(basis, bit), &g);
                            let chi = signal_projection(&joint, &phi);
                            w[basis_index(basis)][bit as usize] =
                                effect.expectation(&chi).expect("2x2").max(0.0);
                        }
                    }
                    w
                })
                .collect();
        }
        Ok(Self {
            outcomes,
            eve_probs,
            bob_weights,
        })
    }

    /// Probability of each probe outcome given the signal kind.
    pub fn eve_probabilities(&self, kind: SignalKind) -> &[f64] {
        &self.eve_probs[kind_index(kind)]
    }

    /// Joint weight of (probe outcome `k`, Bob measuring `bit` in `basis`).
    pub fn joint_weight(&self, kind: SignalKind, k: usize, basis: SignalBasis, bit: u8) -> f64 {
        self.bob_weights[kind_index(kind)][k][basis_index(basis)][bit as usize]
    }

    pub fn outcomes(&self) -> &[EveOutcome] {
        &self.outcomes
    }
}

fn simulate_pulse(
    idx: u64,
    model: &PulseModel,
    cfg: &SessionConfig,
    rng: &mut RandomStream,
) -> PulseRecord {
    let alice_bit = u8::from(rng.bit());
    let alice_basis = if rng.bit() {
        SignalBasis::V
    } else {
        SignalBasis::U
    };
    let kind = SignalKind::from_bit(alice_basis, alice_bit);
    let k_idx = kind_index(kind);

    let (k, eve_outcome) = if model.outcomes.is_empty() {
        (0, None)
    } else {
        let k = sample_weights(&model.eve_probs[k_idx], rng);
        (k, Some(model.outcomes[k]))
    };

    let relayed = if cfg.selective_relay {
        eve_outcome.is_some_and(EveOutcome::is_conclusive)
    } else {
        true
    };
    let bob_received = if cfg.selective_relay {
        relayed
    } else {
        rng.uniform() >= cfg.channel_loss
    };

    let bob_basis = if rng.bit() {
        SignalBasis::V
    } else {
        SignalBasis::U
    };
    let bob_bit = bob_received.then(|| {
        let w = model.bob_weights[k_idx][k][basis_index(bob_basis)];
        sample_weights(&w, rng) as u8
    });

    let mut rec = PulseRecord {
        idx,
        alice_bit,
        alice_basis,
        eve_outcome,
        relayed,
        bob_received,
        bob_basis,
        bob_bit,
        sifted: false,
        eve_guess: None,
    };
    rec.sifted = is_sifted(&rec);
    if rec.sifted {
        rec.eve_guess = eve_outcome.map(|o| {
            o.infer_bit(alice_basis)
                .unwrap_or_else(|| u8::from(rng.bit()))
        });
    }
    rec
}

/// Contiguous pulse range of shard `k` out of `shards`.
fn shard_range(n: u64, shards: u64, k: u64) -> std::ops::Range<u64> {
    let lo = (n as u128 * k as u128 / shards as u128) as u64;
    let hi = (n as u128 * (k + 1) as u128 / shards as u128) as u64;
    lo..hi
}

/// Runs a full session. With `keep_log`, the per-pulse records are returned too.
pub fn run_session(cfg: &SessionConfig, keep_log: bool) -> Result<SessionOutput> {
    run_session_with(cfg, &CnotConfig::default(), keep_log)
}

pub fn run_session_with(
    cfg: &SessionConfig,
    cnot: &CnotConfig,
    keep_log: bool,
) -> Result<SessionOutput> {
    let tuning = cfg.validate()?;
    let model = PulseModel::new(cfg.eve_mode, tuning.as_ref(), cnot)?;
    let shards = u64::from(cfg.shards);

    let results: Vec<(SessionCounts, Vec<PulseRecord>)> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let mut rng = RandomStream::new(cfg.seed, k);
            let mut counts = SessionCounts::default();
            let mut log = Vec::new();
            for idx in shard_range(cfg.n_pulses, shards, k) {
                let rec = simulate_pulse(idx, &model, cfg, &mut rng);
                counts.record(&rec);
                if keep_log {
                    log.push(rec);
                }
            }
            (counts, log)
        })
        .collect();

    let mut counts = SessionCounts::default();
    let mut log = keep_log.then(|| Vec::with_capacity(cfg.n_pulses as usize));
    for (c, l) in results {
        counts = counts.merge(c);
        if let Some(log) = log.as_mut() {
            log.extend(l);
        }
    }
    Ok(SessionOutput {
        stats: SessionStats::from_counts(counts, cfg, tuning.as_ref())?,
        log,
    })
}
