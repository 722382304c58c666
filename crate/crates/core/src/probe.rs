//! The entangling probe: signal geometry, tuned probe states, the CNOT
//! entangler and the projective probe measurement, plus the closed-form
//! analytics that go with them.
//!
//! Probe states are stored in the reduced convention `σ̃ = σ/4`, so that
//! the entangler output reads `u ⊗ σ̃+ + ū ⊗ σ̃0` (and likewise for the
//! other three signals) without stray factors of four.
//!
//! Error rates live on the closed interval `[0, 1/3]`; `E = 1/3` is the
//! perfect-information limit where `σ̃+ ⊥ σ̃−`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use crate::error::{Error, Result};
use crate::povm::beamsplitter_reflectance;
use crate::quantum::{
    apply_operator, tensor_product, BasisLabel, EffectSet, Operator, StateVec2, StateVec4,
    ALGEBRA_TOL,
};
use serde::{Deserialize, Serialize};

/// Largest error rate the probe can induce.
pub const MAX_ERROR_RATE: f64 = 1.0 / 3.0;

pub(crate) fn check_range(quantity: &'static str, value: f64, min: f64, max: f64) -> Result<f64> {
    if value.is_nan() || value < min || value > max {
        return Err(Error::OutOfRange {
            quantity,
            value,
            min,
            max,
        });
    }
    Ok(value)
}

pub(crate) fn check_error_rate(e: f64) -> Result<f64> {
    check_range("error rate", e, 0.0, MAX_ERROR_RATE)
}

/// The four BB84 signal polarizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalKind {
    U,
    UBar,
    V,
    VBar,
}

/// One of the two conjugate BB84 bases, as announced during reconciliation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalBasis {
    U,
    V,
}

impl SignalBasis {
    pub fn label(self) -> &'static str {
        match self {
            SignalBasis::U => "u",
            SignalBasis::V => "v",
        }
    }
}

impl SignalKind {
    pub const ALL: [SignalKind; 4] = [
        SignalKind::U,
        SignalKind::UBar,
        SignalKind::V,
        SignalKind::VBar,
    ];

    /// Bit convention: `u`, `v` encode 0; `ū`, `v̄` encode 1.
    pub fn bit(self) -> u8 {
        match self {
            SignalKind::U | SignalKind::V => 0,
            SignalKind::UBar | SignalKind::VBar => 1,
        }
    }

    pub fn basis(self) -> SignalBasis {
        match self {
            SignalKind::U | SignalKind::UBar => SignalBasis::U,
            SignalKind::V | SignalKind::VBar => SignalBasis::V,
        }
    }

    pub fn from_bit(basis: SignalBasis, bit: u8) -> Self {
        match (basis, bit) {
            (SignalBasis::U, 0) => SignalKind::U,
            (SignalBasis::U, _) => SignalKind::UBar,
            (SignalBasis::V, 0) => SignalKind::V,
            (SignalBasis::V, _) => SignalKind::VBar,
        }
    }

    /// The orthogonal partner in the same basis.
    pub fn complement(self) -> Self {
        match self {
            SignalKind::U => SignalKind::UBar,
            SignalKind::UBar => SignalKind::U,
            SignalKind::V => SignalKind::VBar,
            SignalKind::VBar => SignalKind::V,
        }
    }
}

/// Orientation of `ū` and `v̄`, which are fixed by orthogonality only up to sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignConvention {
    /// `ū` at `angle_u − π/2`, `v̄` at `angle_v + π/2`. With the default
    /// geometry this makes the entangler output carry exactly the signs of
    /// the four entanglement relations, including the minus signs in the
    /// `v`/`v̄` cases.
    MatchEntanglementMap,
    /// Both complements rotated by `+π/2`.
    CounterClockwise,
}

/// Lab-frame linear-polarization angles (radians) of the signal states and the
/// CNOT control basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub angle_u: f64,
    pub angle_v: f64,
    pub angle_e0: f64,
    pub angle_e1: f64,
    pub sign_convention: SignConvention,
    /// Fixed restriction parameters of the probe family (`sin μ = cos μ`, `cos θ = 1`).
    pub mu: f64,
    pub theta: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            angle_u: -FRAC_PI_8,
            angle_v: -3.0 * FRAC_PI_8,
            angle_e0: 0.0,
            angle_e1: FRAC_PI_2,
            sign_convention: SignConvention::MatchEntanglementMap,
            mu: FRAC_PI_4,
            theta: 0.0,
        }
    }
}

/// Angle between two lines through the origin, in `[0, π/2]`.
fn line_angle(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (
                line_angle(self.angle_u, self.angle_v),
                FRAC_PI_4,
                "u and v must be π/4 apart",
            ),
            (
                line_angle(self.angle_e0, self.angle_e1),
                FRAC_PI_2,
                "e0 and e1 must be orthogonal",
            ),
            (
                line_angle(self.angle_e0, self.angle_u),
                FRAC_PI_8,
                "e0 must make π/8 with u",
            ),
            (
                line_angle(self.angle_e1, self.angle_v),
                FRAC_PI_8,
                "e1 must make π/8 with v",
            ),
        ];
        for (actual, expected, msg) in checks {
            if (actual - expected).abs() > ALGEBRA_TOL {
                return Err(Error::InvalidGeometry(format!(
                    "{msg} (got {actual}, expected {expected})"
                )));
            }
        }
        Ok(())
    }

    pub fn angle_of(&self, kind: SignalKind) -> f64 {
        let (ubar_turn, vbar_turn) = match self.sign_convention {
            SignConvention::MatchEntanglementMap => (-FRAC_PI_2, FRAC_PI_2),
            SignConvention::CounterClockwise => (FRAC_PI_2, FRAC_PI_2),
        };
        match kind {
            SignalKind::U => self.angle_u,
            SignalKind::UBar => self.angle_u + ubar_turn,
            SignalKind::V => self.angle_v,
            SignalKind::VBar => self.angle_v + vbar_turn,
        }
    }

    /// Coordinates in `{e0, e1}` of the polarization at lab angle `angle`.
    pub fn polarization(&self, angle: f64) -> StateVec2 {
        StateVec2::real(
            (angle - self.angle_e0).cos(),
            (angle - self.angle_e1).cos(),
            BasisLabel::Signal,
        )
    }
}

/// Normalized polarization state of `kind`, in `{e0, e1}` coordinates.
pub fn signal_state(kind: SignalKind, geometry: &Geometry) -> StateVec2 {
    geometry.polarization(geometry.angle_of(kind))
}

/// `(w_a, w_b)`: the probe's computational basis.
pub fn probe_basis() -> (StateVec2, StateVec2) {
    (
        StateVec2::basis_vector(0, BasisLabel::Probe),
        StateVec2::basis_vector(1, BasisLabel::Probe),
    )
}

/// `(w_+, w_−) = 2^{-1/2}(w_a ± w_b)`: the projective probe measurement basis.
pub fn measurement_basis() -> (StateVec2, StateVec2) {
    (
        StateVec2::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2, BasisLabel::Probe),
        StateVec2::real(FRAC_1_SQRT_2, -FRAC_1_SQRT_2, BasisLabel::Probe),
    )
}

/// Initial probe state `A2` and transition state `A1` for error rate `E`:
/// `(1−2E)^{1/2} w_a ± (2E)^{1/2} w_b`. Both have unit norm.
pub fn target_states(error_rate: f64) -> Result<(StateVec2, StateVec2)> {
    let e = check_error_rate(error_rate)?;
    let a = (1.0 - 2.0 * e).sqrt();
    let b = (2.0 * e).sqrt();
    Ok((
        StateVec2::real(a, b, BasisLabel::Probe),
        StateVec2::real(a, -b, BasisLabel::Probe),
    ))
}

/// `A2`, `A1` parameterized by the inconclusive rate, with the overall
/// `(3−R?)^{-1/2}` factor dropped: `(1+R?)^{1/2} w_a ± 2^{1/2}(1−R?)^{1/2} w_b`.
pub fn tuned_target_states(inconclusive_rate: f64) -> Result<(StateVec2, StateVec2)> {
    let r = check_range("inconclusive rate", inconclusive_rate, 0.0, 1.0)?;
    let a = (1.0 + r).sqrt();
    let b = (2.0 * (1.0 - r)).sqrt();
    Ok((
        StateVec2::real(a, b, BasisLabel::Probe),
        StateVec2::real(a, -b, BasisLabel::Probe),
    ))
}

/// Reduced probe states `σ̃+`, `σ̃−`, `σ̃0` (unnormalized).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaStates {
    pub sigma_plus: StateVec2,
    pub sigma_minus: StateVec2,
    pub sigma0: StateVec2,
}

/// `σ̃± = (1−2E)^{1/2} w_a ∓ E^{1/2} w_b`, `σ̃0 = E^{1/2} w_b`.
///
/// `‖σ̃±‖² = 1−E` and `‖σ̃0‖² = E`. The unreduced states are four times these.
pub fn sigma_states(error_rate: f64) -> Result<SigmaStates> {
    let e = check_error_rate(error_rate)?;
    let a = (1.0 - 2.0 * e).sqrt();
    let b = e.sqrt();
    Ok(SigmaStates {
        sigma_plus: StateVec2::real(a, -b, BasisLabel::Probe),
        sigma_minus: StateVec2::real(a, b, BasisLabel::Probe),
        sigma0: StateVec2::real(0.0, b, BasisLabel::Probe),
    })
}

/// Basis in which the controlled flip acts on the probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlipBasis {
    /// Exchange `w_a ↔ w_b`. Kept for exploration; it does not reproduce the
    /// entanglement relations for any signal orientation.
    WaWb,
    /// Exchange `w_+ ↔ w_−`, i.e. `diag(1, −1)` in `{w_a, w_b}`.
    WPlusMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnotConfig {
    pub geometry: Geometry,
    pub target_flip_basis: FlipBasis,
}

impl Default for CnotConfig {
    fn default() -> Self {
        Self {
            geometry: Geometry::default(),
            target_flip_basis: FlipBasis::WPlusMinus,
        }
    }
}

impl CnotConfig {
    /// Lab angles of the control states (flip on the first, identity on the second).
    pub fn control_basis(&self) -> (f64, f64) {
        (self.geometry.angle_e0, self.geometry.angle_e1)
    }

    pub fn sign_convention(&self) -> SignConvention {
        self.geometry.sign_convention
    }
}

/// The entangling gate on signal ⊗ probe: `|e0⟩⟨e0| ⊗ F + |e1⟩⟨e1| ⊗ I`.
///
/// Independent of the error rate; tuning enters only through the initial
/// probe state `A2`.
pub fn cnot_unitary(cfg: &CnotConfig) -> Operator {
    let (c0, c1) = cfg.control_basis();
    let flip = match cfg.target_flip_basis {
        FlipBasis::WaWb => Operator::from_real(2, &[0.0, 1.0, 1.0, 0.0]),
        FlipBasis::WPlusMinus => Operator::from_real(2, &[1.0, 0.0, 0.0, -1.0]),
    }
    .expect("2x2");
    let identity = Operator::identity(2).expect("2x2");
    let p0 = Operator::outer(&cfg.geometry.polarization(c0));
    let p1 = Operator::outer(&cfg.geometry.polarization(c1));
    let flipped = Operator::kron(&p0, &flip).expect("2x2 factors");
    let kept = Operator::kron(&p1, &identity).expect("2x2 factors");
    flipped.try_add(&kept).expect("4x4")
}

/// `U(signal ⊗ A2)`: the joint state right after the probe interacts with `kind`.
pub fn entangle(kind: SignalKind, error_rate: f64, cfg: &CnotConfig) -> Result<StateVec4> {
    let (a2, _) = target_states(error_rate)?;
    let input = tensor_product(&signal_state(kind, &cfg.geometry), &a2);
    Ok(apply_operator(&cnot_unitary(cfg), &input).expect("4x4 gate on 4-dim state"))
}

/// Detector of the projective probe measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProbeDetector {
    WPlus,
    WMinus,
}

impl ProbeDetector {
    pub fn label(self) -> &'static str {
        match self {
            ProbeDetector::WPlus => "w_plus",
            ProbeDetector::WMinus => "w_minus",
        }
    }
}

/// `{|w+⟩⟨w+|, |w−⟩⟨w−|}`, outcome 0 = `WPlus`, 1 = `WMinus`.
pub fn projective_effects() -> EffectSet {
    let (wp, wm) = measurement_basis();
    EffectSet::new(vec![Operator::outer(&wp), Operator::outer(&wm)]).expect("orthonormal basis")
}

/// Probability that the dominant-correlation detector fires for the
/// correlated σ-state: `1/2 + E^{1/2}(1−2E)^{1/2}/(1−E)`.
pub fn eve_correct_prob_projective(error_rate: f64) -> Result<f64> {
    let e = check_error_rate(error_rate)?;
    Ok(0.5 + (e * (1.0 - 2.0 * e)).sqrt() / (1.0 - e))
}

/// Maximum Rényi information gain of the probe, in bits:
/// `log₂[2 − ((1−3E)/(1−E))²]`.
pub fn renyi_info(error_rate: f64) -> Result<f64> {
    let q = overlap_q(error_rate)?;
    Ok((2.0 - q * q).log2())
}

/// Normalized overlap of `σ̃+` and `σ̃−`: `(1−3E)/(1−E)`. Also the inconclusive rate.
pub fn overlap_q(error_rate: f64) -> Result<f64> {
    let e = check_error_rate(error_rate)?;
    Ok((1.0 - 3.0 * e) / (1.0 - e))
}

/// Inverse of [`overlap_q`]: `E = (1−R?)/(3−R?)`.
pub fn error_rate_from_inconclusive(inconclusive_rate: f64) -> Result<f64> {
    let r = check_range("inconclusive rate", inconclusive_rate, 0.0, 1.0)?;
    Ok((1.0 - r) / (3.0 - r))
}

/// Bit Eve assigns from a projective outcome once the basis is announced.
///
/// `{u, v̄} ⇔ σ+ ⇔ w−` and `{ū, v} ⇔ σ− ⇔ w+`.
pub fn infer_bit_projective(outcome: ProbeDetector, basis: SignalBasis) -> u8 {
    let kind = match (outcome, basis) {
        (ProbeDetector::WMinus, SignalBasis::U) => SignalKind::U,
        (ProbeDetector::WPlus, SignalBasis::U) => SignalKind::UBar,
        (ProbeDetector::WPlus, SignalBasis::V) => SignalKind::V,
        (ProbeDetector::WMinus, SignalBasis::V) => SignalKind::VBar,
    };
    kind.bit()
}

/// The attack's full parameter bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeTuning {
    pub error_rate: f64,
    pub overlap: f64,
    pub inconclusive_rate: f64,
    pub conclusive_rate: f64,
    pub reflectance: f64,
    pub target_a2: StateVec2,
    pub target_a1: StateVec2,
}

impl ProbeTuning {
    pub fn from_error_rate(error_rate: f64) -> Result<Self> {
        let overlap = overlap_q(error_rate)?;
        let (target_a2, target_a1) = target_states(error_rate)?;
        Ok(Self {
            error_rate,
            overlap,
            inconclusive_rate: overlap,
            conclusive_rate: 1.0 - overlap,
            reflectance: beamsplitter_reflectance(overlap)?,
            target_a2,
            target_a1,
        })
    }

    /// Tuning for a set inconclusive rate. Keeps `R?` exact rather than
    /// recomputing it from the derived error rate.
    pub fn from_inconclusive_rate(inconclusive_rate: f64) -> Result<Self> {
        let error_rate = error_rate_from_inconclusive(inconclusive_rate)?;
        let mut tuning = Self::from_error_rate(error_rate)?;
        tuning.overlap = inconclusive_rate;
        tuning.inconclusive_rate = inconclusive_rate;
        tuning.conclusive_rate = 1.0 - inconclusive_rate;
        tuning.reflectance = beamsplitter_reflectance(inconclusive_rate)?;
        Ok(tuning)
    }
}
