//! Unambiguous state discrimination of the probe states `σ̃±`.
//!
//! The receiver is the optimal equal-prior USD measurement for the two
//! normalized states `σ̂± = σ̃± / ‖σ̃±‖` with overlap `Q`:
//!
//! ```text
//! Π+ = |σ̂−^⊥⟩⟨σ̂−^⊥| / (1+Q)
//! Π− = |σ̂+^⊥⟩⟨σ̂+^⊥| / (1+Q)
//! Π? = I − Π+ − Π−
//! ```
//!
//! Either input is identified with probability `1 − Q` and never
//! misidentified; the remaining `Q` is the inconclusive rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::{
    check_error_rate, check_range, overlap_q, sigma_states, SignalBasis, SignalKind, MAX_ERROR_RATE,
};
use crate::quantum::{EffectSet, Operator, StateVec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PovmOutcome {
    ConclusivePlus,
    ConclusiveMinus,
    Inconclusive,
}

impl PovmOutcome {
    /// Outcomes in effect-set order.
    pub const ALL: [PovmOutcome; 3] = [
        PovmOutcome::ConclusivePlus,
        PovmOutcome::ConclusiveMinus,
        PovmOutcome::Inconclusive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PovmOutcome::ConclusivePlus => "conclusive_plus",
            PovmOutcome::ConclusiveMinus => "conclusive_minus",
            PovmOutcome::Inconclusive => "inconclusive",
        }
    }

    pub fn is_conclusive(self) -> bool {
        self != PovmOutcome::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsdPovm {
    pub pi_plus: Operator,
    pub pi_minus: Operator,
    pub pi_inconclusive: Operator,
    /// Overlap `Q` of the discriminated states.
    pub overlap: f64,
}

impl UsdPovm {
    pub fn element(&self, outcome: PovmOutcome) -> &Operator {
        match outcome {
            PovmOutcome::ConclusivePlus => &self.pi_plus,
            PovmOutcome::ConclusiveMinus => &self.pi_minus,
            PovmOutcome::Inconclusive => &self.pi_inconclusive,
        }
    }

    /// Validated effect set, outcome `i` ↔ `PovmOutcome::ALL[i]`.
    pub fn effect_set(&self) -> Result<EffectSet> {
        Ok(EffectSet::new(
            PovmOutcome::ALL
                .iter()
                .map(|&o| self.element(o).clone())
                .collect(),
        )?)
    }

    /// Largest entry of `Π+ + Π− + Π? − I`.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self
            .pi_plus
            .try_add(&self.pi_minus)
            .and_then(|s| s.try_add(&self.pi_inconclusive))
            .expect("2x2 elements");
        sum.max_deviation(&Operator::identity(2).expect("2x2"))
            .expect("2x2")
    }

    /// Smallest eigenvalue over all three elements.
    pub fn min_eigenvalue(&self) -> f64 {
        PovmOutcome::ALL
            .iter()
            .map(|&o| self.element(o).min_eigenvalue())
            .fold(f64::INFINITY, f64::min)
    }

    /// `⟨ψ|Π|ψ⟩` for a normalized `ψ`.
    pub fn probability(&self, outcome: PovmOutcome, psi: &StateVec2) -> f64 {
        self.element(outcome)
            .expectation(psi)
            .expect("2x2 on 2-dim state")
    }
}

/// The USD POVM separating `σ̃+` and `σ̃−` at error rate `E`.
///
/// At `E = 0` the states coincide and the POVM is `Π± = 0`, `Π? = I`. At
/// `E = 1/3` they are orthogonal and it is the projective measurement onto
/// `σ̂±` with `Π? = 0`.
pub fn build_usd_povm(error_rate: f64) -> Result<UsdPovm> {
    let e = check_error_rate(error_rate)?;
    let identity = Operator::identity(2)?;
    let zero = Operator::zero(2)?;
    if e == 0.0 {
        return Ok(UsdPovm {
            pi_plus: zero.clone(),
            pi_minus: zero,
            pi_inconclusive: identity,
            overlap: 1.0,
        });
    }
    let s = sigma_states(e)?;
    let plus = s.sigma_plus.normalize().expect("nonzero for E <= 1/3");
    let minus = s.sigma_minus.normalize().expect("nonzero for E <= 1/3");
    if e == MAX_ERROR_RATE {
        return Ok(UsdPovm {
            pi_plus: Operator::outer(&plus),
            pi_minus: Operator::outer(&minus),
            pi_inconclusive: zero,
            overlap: 0.0,
        });
    }
    let q = overlap_q(e)?;
    let pi_plus = Operator::outer(&minus.orthogonal()).scale(1.0 / (1.0 + q));
    let pi_minus = Operator::outer(&plus.orthogonal()).scale(1.0 / (1.0 + q));
    let pi_inconclusive = identity.try_sub(&pi_plus)?.try_sub(&pi_minus)?;
    Ok(UsdPovm {
        pi_plus,
        pi_minus,
        pi_inconclusive,
        overlap: q,
    })
}

/// Normalized sum and difference of `σ̂+` and `σ̂−`: the two polarizations the
/// receiver's prism separates. Equal to `w_a` and `−w_b`.
pub fn separator_states(error_rate: f64) -> Result<(StateVec2, StateVec2)> {
    let e = check_error_rate(error_rate)?;
    if e == 0.0 {
        return Err(Error::Degenerate(
            "σ+ and σ− coincide at E = 0; the difference separator is undefined",
        ));
    }
    let s = sigma_states(e)?;
    let plus = s.sigma_plus.normalize().expect("nonzero");
    let minus = s.sigma_minus.normalize().expect("nonzero");
    let sum = (plus + minus).normalize().expect("σ̂+ ≠ −σ̂−");
    let diff = (plus - minus).normalize().expect("σ̂+ ≠ σ̂− for E > 0");
    Ok((sum, diff))
}

/// Reflectance of the receiver's first beamsplitter: `(1−Q)/(1+Q)`.
pub fn beamsplitter_reflectance(overlap: f64) -> Result<f64> {
    let q = check_range("overlap", overlap, 0.0, 1.0)?;
    Ok((1.0 - q) / (1.0 + q))
}

/// The same reflectance in trigonometric form, `tan²(½ arccos Q)`.
pub fn beamsplitter_reflectance_trig(overlap: f64) -> Result<f64> {
    let q = check_range("overlap", overlap, 0.0, 1.0)?;
    Ok((0.5 * q.acos()).tan().powi(2))
}

/// Optical settings of the USD receiver for error rate `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalParams {
    pub separator_sum: StateVec2,
    pub separator_diff: StateVec2,
    pub reflectance_r1: f64,
}

pub fn optical_params(error_rate: f64) -> Result<OpticalParams> {
    let (separator_sum, separator_diff) = separator_states(error_rate)?;
    Ok(OpticalParams {
        separator_sum,
        separator_diff,
        reflectance_r1: beamsplitter_reflectance(overlap_q(error_rate)?)?,
    })
}

/// Eve's bit once the basis is announced, or `None` when inconclusive.
///
/// `u ⇔ σ+`, `ū ⇔ σ−`, `v ⇔ σ−`, `v̄ ⇔ σ+`.
pub fn infer_bit_povm(outcome: PovmOutcome, basis: SignalBasis) -> Option<u8> {
    let kind = match (outcome, basis) {
        (PovmOutcome::Inconclusive, _) => return None,
        (PovmOutcome::ConclusivePlus, SignalBasis::U) => SignalKind::U,
        (PovmOutcome::ConclusivePlus, SignalBasis::V) => SignalKind::VBar,
        (PovmOutcome::ConclusiveMinus, SignalBasis::U) => SignalKind::UBar,
        (PovmOutcome::ConclusiveMinus, SignalBasis::V) => SignalKind::V,
    };
    Some(kind.bit())
}

/// Numerical self-check of the receiver at one error rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PovmReport {
    pub error_rate: f64,
    pub overlap: f64,
    pub completeness_residual: f64,
    pub min_eigenvalue: f64,
    /// `⟨σ̂−|Π+|σ̂−⟩`.
    pub misid_plus: f64,
    /// `⟨σ̂+|Π−|σ̂+⟩`.
    pub misid_minus: f64,
    pub conclusive_rate: f64,
    pub inconclusive_rate: f64,
    pub expected_inconclusive: f64,
    pub expected_conclusive: f64,
    pub reflectance: f64,
    pub reflectance_trig: f64,
    pub reflectance_expected: f64,
}

impl PovmReport {
    /// True when every residual is within the crate tolerances.
    pub fn passes(&self) -> bool {
        use crate::quantum::{ALGEBRA_TOL, COMPLETENESS_TOL};
        self.completeness_residual <= COMPLETENESS_TOL
            && self.min_eigenvalue >= -COMPLETENESS_TOL
            && self.misid_plus <= ALGEBRA_TOL
            && self.misid_minus <= ALGEBRA_TOL
            && (self.inconclusive_rate - self.expected_inconclusive).abs() <= ALGEBRA_TOL
            && (self.conclusive_rate - self.expected_conclusive).abs() <= ALGEBRA_TOL
            && (self.reflectance - self.reflectance_expected).abs() <= ALGEBRA_TOL
            && (self.reflectance_trig - self.reflectance_expected).abs() <= ALGEBRA_TOL
    }
}

/// Builds the POVM at `E` and measures it against the closed-form rates,
/// with `R?` given explicitly so inconclusive-rate inputs are checked exactly.
pub fn povm_report(error_rate: f64, inconclusive_rate: f64) -> Result<PovmReport> {
    let povm = build_usd_povm(error_rate)?;
    let s = sigma_states(error_rate)?;
    let (misid_plus, misid_minus, conclusive, inconclusive) =
        match (s.sigma_plus.normalize(), s.sigma_minus.normalize()) {
            (Some(plus), Some(minus)) => (
                povm.probability(PovmOutcome::ConclusivePlus, &minus).abs(),
                povm.probability(PovmOutcome::ConclusiveMinus, &plus).abs(),
                povm.probability(PovmOutcome::ConclusivePlus, &plus),
                povm.probability(PovmOutcome::Inconclusive, &plus),
            ),
            _ => unreachable!("σ± are nonzero on [0, 1/3]"),
        };
    let expected_r1 = (1.0 - inconclusive_rate) / (1.0 + inconclusive_rate);
    Ok(PovmReport {
        error_rate,
        overlap: povm.overlap,
        completeness_residual: povm.completeness_residual(),
        min_eigenvalue: povm.min_eigenvalue(),
        misid_plus,
        misid_minus,
        conclusive_rate: conclusive,
        inconclusive_rate: inconclusive,
        expected_inconclusive: inconclusive_rate,
        expected_conclusive: 1.0 - inconclusive_rate,
        reflectance: beamsplitter_reflectance(povm.overlap)?,
        reflectance_trig: beamsplitter_reflectance_trig(povm.overlap)?,
        reflectance_expected: expected_r1,
    })
}

/// Normalized `σ̂±` at `E`, for callers that need the discriminated states.
pub fn normalized_sigmas(error_rate: f64) -> Result<(StateVec2, StateVec2)> {
    let s = sigma_states(error_rate)?;
    Ok((
        s.sigma_plus.normalize().expect("nonzero"),
        s.sigma_minus.normalize().expect("nonzero"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::probe_basis;
    use crate::quantum::{Ket, RandomStream, ALGEBRA_TOL, COMPLETENESS_TOL};
    use proptest::prelude::*;

    const GRID: [f64; 8] = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 1.0 / 3.0];

    #[test]
    fn separator_cases() {
        let (wa, wb) = probe_basis();
        let (sum, diff) = separator_states(0.2).unwrap();
        assert!(sum.max_deviation(&wa) < 1e-12);
        assert!(diff.max_deviation(&(-wb)) < 1e-12);
        for e in &GRID[1..] {
            let (sum, diff) = separator_states(*e).unwrap();
            assert!(sum.inner(&diff).norm() < 1e-12);
        }
        let (sum, _) = separator_states(1.0 / 3.0).unwrap();
        assert!(sum.max_deviation(&wa) < 1e-12);
        assert!(matches!(separator_states(0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn povm_endpoints() {
        let p = build_usd_povm(1.0 / 3.0).unwrap();
        assert_eq!(p.pi_inconclusive, Operator::zero(2).unwrap());
        let (plus, minus) = normalized_sigmas(1.0 / 3.0).unwrap();
        assert!((p.probability(PovmOutcome::ConclusivePlus, &plus) - 1.0).abs() < 1e-12);
        assert!(p.probability(PovmOutcome::ConclusivePlus, &minus).abs() < 1e-12);

        let p = build_usd_povm(0.0).unwrap();
        assert_eq!(p.pi_plus, Operator::zero(2).unwrap());
        assert_eq!(p.pi_minus, Operator::zero(2).unwrap());
        assert_eq!(p.pi_inconclusive, Operator::identity(2).unwrap());
    }

    #[test]
    fn povm_rates_at_q_half() {
        let p = build_usd_povm(0.2).unwrap();
        let (plus, _) = normalized_sigmas(0.2).unwrap();
        assert!((p.probability(PovmOutcome::ConclusivePlus, &plus) - 0.5).abs() < 1e-12);
        assert!(p.probability(PovmOutcome::ConclusiveMinus, &plus).abs() < 1e-12);
        // independent route: Π+ = |σ̂−^⊥⟩⟨σ̂−^⊥|/(1+Q) gives |⟨σ̂−^⊥|σ̂+⟩|²/(1+Q) = (1−Q²)/(1+Q)
        let q = 0.5;
        assert!(((1.0 - q * q) / (1.0 + q) - 0.5f64).abs() < 1e-15);
    }

    #[test]
    fn povm_properties_over_grid() {
        for e in GRID {
            let p = build_usd_povm(e).unwrap();
            assert!(p.completeness_residual() <= COMPLETENESS_TOL);
            assert!(p.min_eigenvalue() >= -COMPLETENESS_TOL);
            p.effect_set().unwrap();
            let (plus, minus) = normalized_sigmas(e).unwrap();
            assert!(p.probability(PovmOutcome::ConclusivePlus, &minus).abs() <= ALGEBRA_TOL);
            assert!(p.probability(PovmOutcome::ConclusiveMinus, &plus).abs() <= ALGEBRA_TOL);
            let q = overlap_q(e).unwrap();
            assert!((p.probability(PovmOutcome::Inconclusive, &plus) - q).abs() <= ALGEBRA_TOL);
            assert!((p.probability(PovmOutcome::Inconclusive, &minus) - q).abs() <= ALGEBRA_TOL);
            let inner = plus.inner(&minus).re;
            assert!((inner - q).abs() <= ALGEBRA_TOL);
        }
    }

    #[test]
    fn reflectance_values() {
        assert_eq!(beamsplitter_reflectance(0.0).unwrap(), 1.0);
        assert_eq!(beamsplitter_reflectance(1.0).unwrap(), 0.0);
        assert!((beamsplitter_reflectance(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((beamsplitter_reflectance_trig(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(beamsplitter_reflectance(1.1).is_err());
        assert!(beamsplitter_reflectance(-0.1).is_err());
    }

    #[test]
    fn povm_inference_table() {
        use PovmOutcome::*;
        assert_eq!(infer_bit_povm(ConclusivePlus, SignalBasis::U), Some(0));
        assert_eq!(infer_bit_povm(ConclusivePlus, SignalBasis::V), Some(1));
        assert_eq!(infer_bit_povm(ConclusiveMinus, SignalBasis::U), Some(1));
        assert_eq!(infer_bit_povm(ConclusiveMinus, SignalBasis::V), Some(0));
        assert_eq!(infer_bit_povm(Inconclusive, SignalBasis::U), None);
        assert_eq!(infer_bit_povm(Inconclusive, SignalBasis::V), None);
    }

    #[test]
    fn sampling_on_sigma_plus() {
        let p = build_usd_povm(0.2).unwrap();
        let set = p.effect_set().unwrap();
        let (plus, _) = normalized_sigmas(0.2).unwrap();
        let mut rng = RandomStream::new(2024, 0);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[set.sample(&plus, &mut rng).unwrap()] += 1;
        }
        let f = |i: usize| counts[i] as f64 / n as f64;
        assert!((f(0) - 0.5).abs() <= 0.006, "conclusive plus {}", f(0));
        assert_eq!(counts[1], 0);
        assert!((f(2) - 0.5).abs() <= 0.006, "inconclusive {}", f(2));
    }

    #[test]
    fn report_passes_on_grid() {
        for e in GRID {
            let r = povm_report(e, overlap_q(e).unwrap()).unwrap();
            assert!(r.passes(), "{r:?}");
        }
    }

    proptest! {
        #[test]
        fn optical_consistency(r in 0.0f64..=1.0) {
            let e = crate::probe::error_rate_from_inconclusive(r).unwrap();
            let r1 = beamsplitter_reflectance(overlap_q(e).unwrap()).unwrap();
            prop_assert!((r1 - (1.0 - r) / (1.0 + r)).abs() <= 1e-12);
            let trig = beamsplitter_reflectance_trig(r).unwrap();
            prop_assert!((trig - (1.0 - r) / (1.0 + r)).abs() <= 1e-12);
        }
    }
}
