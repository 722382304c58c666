//! Minimal dense complex linear algebra for one- and two-qubit pure states.
//!
//! Two-qubit states are stored signal-major: the amplitude of
//! `|i⟩_signal ⊗ |j⟩_probe` lives at index `2 * i + j`. Every module in this
//! crate relies on that ordering.
//!
//! Unnormalized states are ordinary values here. Their normalization status is
//! recorded at construction time and can be queried with `is_normalized`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A complex probability amplitude.
pub type Amplitude = Complex64;

/// Tolerance for algebraic identities (norms, unitarity, inner products).
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Tolerance for completeness and positivity of effect sets.
pub const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported operator dimension {0} (only 2 and 4 are supported)")]
    UnsupportedDimension(usize),
    #[error("operator has {found} entries, expected {expected}")]
    BadEntryCount { expected: usize, found: usize },
    #[error("effect set is empty")]
    EmptyEffectSet,
    #[error("effects do not sum to identity (residual {residual:e})")]
    Incomplete { residual: f64 },
    #[error("effect {index} is not Hermitian (residual {residual:e})")]
    NotHermitian { index: usize, residual: f64 },
    #[error("effect {index} is not positive (minimum eigenvalue {min_eigenvalue:e})")]
    NotPositive { index: usize, min_eigenvalue: f64 },
    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
}

pub type Result<T> = std::result::Result<T, QuantumError>;

/// Which two-dimensional space a single-qubit state's coordinates refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisLabel {
    /// Signal polarization coordinates in `{e0, e1}`.
    Signal,
    /// Probe polarization coordinates in `{w_a, w_b}`.
    Probe,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Signal => write!(f, "signal {{e0,e1}}"),
            BasisLabel::Probe => write!(f, "probe {{w_a,w_b}}"),
        }
    }
}

/// Common view over state vectors of fixed dimension.
pub trait Ket: Sized {
    const DIM: usize;

    fn amplitudes(&self) -> &[Amplitude];

    /// Builds a state of the same kind (and basis label) as `self` from new amplitudes.
    fn with_amplitudes(&self, amps: &[Amplitude]) -> Self;

    fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum()
    }

    fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`.
    fn inner(&self, other: &Self) -> Amplitude {
        self.amplitudes()
            .iter()
            .zip(other.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest absolute amplitude difference.
    fn max_deviation(&self, other: &Self) -> f64 {
        self.amplitudes()
            .iter()
            .zip(other.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn within_unit_norm(norm_sqr: f64) -> bool {
    (norm_sqr - 1.0).abs() <= ALGEBRA_TOL
}

/// A single-qubit state in a declared orthonormal basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVec2 {
    amps: [Amplitude; 2],
    basis: BasisLabel,
    normalized: bool,
}

impl StateVec2 {
    pub fn new(a0: Amplitude, a1: Amplitude, basis: BasisLabel) -> Self {
        let amps = [a0, a1];
        let normalized = within_unit_norm(a0.norm_sqr() + a1.norm_sqr());
        Self {
            amps,
            basis,
            normalized,
        }
    }

    pub fn real(a0: f64, a1: f64, basis: BasisLabel) -> Self {
        Self::new(Amplitude::new(a0, 0.0), Amplitude::new(a1, 0.0), basis)
    }

    pub fn zero(basis: BasisLabel) -> Self {
        Self::real(0.0, 0.0, basis)
    }

    /// The first or second basis vector.
    pub fn basis_vector(index: usize, basis: BasisLabel) -> Self {
        match index {
            0 => Self::real(1.0, 0.0, basis),
            _ => Self::real(0.0, 1.0, basis),
        }
    }

    pub fn basis(&self) -> BasisLabel {
        self.basis
    }

    pub fn a0(&self) -> Amplitude {
        self.amps[0]
    }

    pub fn a1(&self) -> Amplitude {
        self.amps[1]
    }

    /// Whether the state had unit norm (within `ALGEBRA_TOL`) when it was built.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// The unit vector along `self`, or `None` for the zero vector.
    pub fn normalize(&self) -> Option<Self> {
        let n = self.norm();
        if n <= f64::EPSILON {
            return None;
        }
        Some(self.scale(Amplitude::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, c: Amplitude) -> Self {
        Self::new(self.amps[0] * c, self.amps[1] * c, self.basis)
    }

    /// A vector orthogonal to `self` with the same norm: `(-a1*, a0*)`.
    pub fn orthogonal(&self) -> Self {
        Self::new(-self.amps[1].conj(), self.amps[0].conj(), self.basis)
    }
}

impl Ket for StateVec2 {
    const DIM: usize = 2;

    fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    fn with_amplitudes(&self, amps: &[Amplitude]) -> Self {
        Self::new(amps[0], amps[1], self.basis)
    }
}

impl Add for StateVec2 {
    type Output = StateVec2;
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.amps[0] + rhs.amps[0],
            self.amps[1] + rhs.amps[1],
            self.basis,
        )
    }
}

impl Sub for StateVec2 {
    type Output = StateVec2;
    fn sub(self, rhs: Self) -> Self {
        Self::new(
            self.amps[0] - rhs.amps[0],
            self.amps[1] - rhs.amps[1],
            self.basis,
        )
    }
}

impl Neg for StateVec2 {
    type Output = StateVec2;
    fn neg(self) -> Self {
        Self::new(-self.amps[0], -self.amps[1], self.basis)
    }
}

impl Mul<StateVec2> for f64 {
    type Output = StateVec2;
    fn mul(self, rhs: StateVec2) -> StateVec2 {
        rhs.scale(Amplitude::new(self, 0.0))
    }
}

/// A signal ⊗ probe state, signal-major: `[c00, c01, c10, c11]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVec4 {
    amps: [Amplitude; 4],
    normalized: bool,
}

impl StateVec4 {
    pub fn new(amps: [Amplitude; 4]) -> Self {
        let normalized = within_unit_norm(amps.iter().map(|a| a.norm_sqr()).sum());
        Self { amps, normalized }
    }

    pub fn real(c: [f64; 4]) -> Self {
        Self::new(c.map(|x| Amplitude::new(x, 0.0)))
    }

    /// Amplitude of `|signal⟩ ⊗ |probe⟩`.
    pub fn get(&self, signal: usize, probe: usize) -> Amplitude {
        self.amps[2 * signal + probe]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn scale(&self, c: Amplitude) -> Self {
        Self::new(self.amps.map(|a| a * c))
    }
}

impl Ket for StateVec4 {
    const DIM: usize = 4;

    fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    fn with_amplitudes(&self, amps: &[Amplitude]) -> Self {
        Self::new([amps[0], amps[1], amps[2], amps[3]])
    }
}

impl Add for StateVec4 {
    type Output = StateVec4;
    fn add(self, rhs: Self) -> Self {
        let mut out = self.amps;
        for (o, r) in out.iter_mut().zip(rhs.amps) {
            *o += r;
        }
        Self::new(out)
    }
}

impl Sub for StateVec4 {
    type Output = StateVec4;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self.amps;
        for (o, r) in out.iter_mut().zip(rhs.amps) {
            *o -= r;
        }
        Self::new(out)
    }
}

/// `s ⊗ p` in signal-major order.
pub fn tensor_product(s: &StateVec2, p: &StateVec2) -> StateVec4 {
    StateVec4::new([
        s.amps[0] * p.amps[0],
        s.amps[0] * p.amps[1],
        s.amps[1] * p.amps[0],
        s.amps[1] * p.amps[1],
    ])
}

/// `⟨φ|_signal Ψ`: the unnormalized probe factor multiplying `φ` in `Ψ`.
///
/// Its squared norm is the probability that a signal-side projective
/// measurement onto `φ` succeeds.
pub fn signal_projection(joint: &StateVec4, phi: &StateVec2) -> StateVec2 {
    let f0 = phi.amps[0].conj();
    let f1 = phi.amps[1].conj();
    StateVec2::new(
        f0 * joint.amps[0] + f1 * joint.amps[2],
        f0 * joint.amps[1] + f1 * joint.amps[3],
        BasisLabel::Probe,
    )
}

/// A dense square operator of dimension 2 or 4, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<Amplitude>,
}

impl Operator {
    pub fn from_entries(dim: usize, entries: Vec<Amplitude>) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(QuantumError::UnsupportedDimension(dim));
        }
        if entries.len() != dim * dim {
            return Err(QuantumError::BadEntryCount {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::from_entries(
            dim,
            entries.iter().map(|&x| Amplitude::new(x, 0.0)).collect(),
        )
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::from_entries(dim, vec![Amplitude::new(0.0, 0.0); dim * dim])
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut op = Self::zero(dim)?;
        for i in 0..dim {
            op.entries[i * dim + i] = Amplitude::new(1.0, 0.0);
        }
        Ok(op)
    }

    /// `|ψ⟩⟨ψ|` (not rescaled, so unnormalized inputs give scaled projectors).
    pub fn outer<K: Ket>(psi: &K) -> Self {
        let a = psi.amplitudes();
        let dim = a.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(a[i] * a[j].conj());
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Amplitude] {
        &self.entries
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * c).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.entries[j * n + i].conj());
            }
        }
        Self { dim: n, entries }
    }

    fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim {
            return Err(QuantumError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Operator) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Operator) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut entries = vec![Amplitude::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                for j in 0..n {
                    entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        Ok(Self { dim: n, entries })
    }

    /// Kronecker product of two single-qubit operators, signal-major.
    pub fn kron(signal: &Operator, probe: &Operator) -> Result<Self> {
        for op in [signal, probe] {
            if op.dim != 2 {
                return Err(QuantumError::DimensionMismatch {
                    expected: 2,
                    found: op.dim,
                });
            }
        }
        let mut entries = vec![Amplitude::new(0.0, 0.0); 16];
        for si in 0..2 {
            for sj in 0..2 {
                for pi in 0..2 {
                    for pj in 0..2 {
                        entries[(2 * si + pi) * 4 + (2 * sj + pj)] =
                            signal.get(si, sj) * probe.get(pi, pj);
                    }
                }
            }
        }
        Ok(Self { dim: 4, entries })
    }

    /// Largest absolute entry difference.
    pub fn max_deviation(&self, other: &Operator) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest deviation of `U†U` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        let product = self.adjoint().matmul(self).expect("same dimension");
        let id = Self::identity(self.dim).expect("supported dimension");
        product.max_deviation(&id).expect("same dimension")
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.max_deviation(&self.adjoint()).expect("same dimension")
    }

    /// Eigenvalues of the Hermitian part `(A + A†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        if n == 2 {
            // closed form for 2x2 Hermitian
            let a = self.get(0, 0).re;
            let d = self.get(1, 1).re;
            let b = (self.get(0, 1) + self.get(1, 0).conj()) / 2.0;
            let mean = (a + d) / 2.0;
            let radius = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
            return vec![mean - radius, mean + radius];
        }
        let herm = DMatrix::from_fn(n, n, |i, j| {
            let z = (self.get(i, j) + self.get(j, i).conj()) / 2.0;
            Complex::new(z.re, z.im)
        });
        let mut eig: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|x, y| x.total_cmp(y));
        eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()[0]
    }

    /// `⟨ψ|A|ψ⟩` (real part; exact for Hermitian `A`).
    pub fn expectation<K: Ket>(&self, psi: &K) -> Result<f64> {
        let out = apply_operator(self, psi)?;
        Ok(psi.inner(&out).re)
    }
}

/// Matrix-vector product `Uψ`.
pub fn apply_operator<K: Ket>(op: &Operator, psi: &K) -> Result<K> {
    if op.dim != K::DIM {
        return Err(QuantumError::DimensionMismatch {
            expected: K::DIM,
            found: op.dim,
        });
    }
    let a = psi.amplitudes();
    let n = op.dim;
    let out: Vec<Amplitude> = (0..n)
        .map(|i| (0..n).map(|j| op.entries[i * n + j] * a[j]).sum())
        .collect();
    Ok(psi.with_amplitudes(&out))
}

/// A validated measurement: positive effects of equal dimension summing to identity.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectSet {
    effects: Vec<Operator>,
}

impl EffectSet {
    pub fn new(effects: Vec<Operator>) -> Result<Self> {
        let first = effects.first().ok_or(QuantumError::EmptyEffectSet)?;
        let dim = first.dim;
        let mut sum = Operator::zero(dim)?;
        for (index, e) in effects.iter().enumerate() {
            sum = sum.try_add(e)?;
            let residual = e.hermiticity_residual();
            if residual > COMPLETENESS_TOL {
                return Err(QuantumError::NotHermitian { index, residual });
            }
            let min_eigenvalue = e.min_eigenvalue();
            if min_eigenvalue < -COMPLETENESS_TOL {
                return Err(QuantumError::NotPositive {
                    index,
                    min_eigenvalue,
                });
            }
        }
        let residual = sum.max_deviation(&Operator::identity(dim)?)?;
        if residual > COMPLETENESS_TOL {
            return Err(QuantumError::Incomplete { residual });
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim
    }

    /// Born probabilities `⟨ψ|E_i|ψ⟩`, clamped at zero.
    pub fn probabilities<K: Ket>(&self, psi: &K) -> Result<Vec<f64>> {
        self.effects
            .iter()
            .map(|e| e.expectation(psi).map(|p| p.max(0.0)))
            .collect()
    }

    /// Draws one outcome index; consumes exactly one uniform draw.
    pub fn sample<K: Ket>(&self, psi: &K, rng: &mut RandomStream) -> Result<usize> {
        let norm_sqr = psi.norm_sqr();
        if !within_unit_norm(norm_sqr) {
            return Err(QuantumError::NotNormalized { norm_sqr });
        }
        let probs = self.probabilities(psi)?;
        Ok(sample_weights(&probs, rng))
    }
}

/// Born-rule sampling of `effects` on `psi`, validating the effect set first.
pub fn sample_outcome<K: Ket>(
    psi: &K,
    effects: &[Operator],
    rng: &mut RandomStream,
) -> Result<usize> {
    EffectSet::new(effects.to_vec())?.sample(psi, rng)
}

/// Picks index `i` with probability `weights[i] / Σ weights` using one uniform draw.
///
/// Never returns an index with zero weight unless every weight is zero.
pub fn sample_weights(weights: &[f64], rng: &mut RandomStream) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last_positive = i;
        if target < acc {
            return i;
        }
    }
    last_positive
}

/// A seeded, shard-addressable random stream. Identical `(seed, shard)` pairs
/// yield identical draw sequences.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    shard: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, shard: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shard);
        Self { seed, shard, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shard(&self) -> u64 {
        self.shard
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// A fair bit from one uniform draw.
    pub fn bit(&mut self) -> bool {
        self.uniform() < 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Amplitude {
        Amplitude::new(re, im)
    }

    fn probe(a0: f64, a1: f64) -> StateVec2 {
        StateVec2::real(a0, a1, BasisLabel::Probe)
    }

    fn computational_effects() -> Vec<Operator> {
        vec![
            Operator::outer(&probe(1.0, 0.0)),
            Operator::outer(&probe(0.0, 1.0)),
        ]
    }

    #[test]
    fn tensor_product_basis_cases() {
        let e0 = probe(1.0, 0.0);
        let out = tensor_product(&e0, &e0);
        assert_eq!(out, StateVec4::real([1.0, 0.0, 0.0, 0.0]));

        let p = StateVec2::new(c(0.3, 0.1), c(-0.2, 0.5), BasisLabel::Probe);
        let out = tensor_product(&probe(0.0, 1.0), &p);
        assert_eq!(
            out.amplitudes(),
            &[c(0.0, 0.0), c(0.0, 0.0), p.a0(), p.a1()]
        );
    }

    #[test]
    fn apply_identity_and_permutation() {
        let psi = StateVec4::real([0.0, 0.0, 0.6, 0.8]);
        let id = Operator::identity(4).unwrap();
        assert_eq!(apply_operator(&id, &psi).unwrap(), psi);

        #[rustfmt::skip]
        let swap = Operator::from_real(4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ]).unwrap();
        let out = apply_operator(&swap, &psi).unwrap();
        assert_eq!(out, StateVec4::real([0.0, 0.0, 0.8, 0.6]));
    }

    #[test]
    fn apply_operator_rejects_dimension_mismatch() {
        let op = Operator::identity(2).unwrap();
        let err = apply_operator(&op, &StateVec4::real([1.0, 0.0, 0.0, 0.0])).unwrap_err();
        assert_eq!(
            err,
            QuantumError::DimensionMismatch {
                expected: 4,
                found: 2
            }
        );
        assert!(matches!(
            Operator::identity(3),
            Err(QuantumError::UnsupportedDimension(3))
        ));
    }

    #[test]
    fn signal_projection_cases() {
        let p = probe(0.6, 0.8);
        let u = StateVec2::real(1.0, 0.0, BasisLabel::Signal);
        let u_perp = StateVec2::real(0.0, 1.0, BasisLabel::Signal);
        let joint = tensor_product(&u, &p);
        assert!(signal_projection(&joint, &u_perp).norm() < ALGEBRA_TOL);
        assert!(signal_projection(&joint, &u).max_deviation(&p) < ALGEBRA_TOL);

        let phi = StateVec2::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2, BasisLabel::Signal);
        let joint = tensor_product(&phi, &p);
        assert!(signal_projection(&joint, &phi).max_deviation(&p) < ALGEBRA_TOL);
    }

    #[test]
    fn unnormalized_states_are_flagged() {
        assert!(probe(0.6, 0.8).is_normalized());
        assert!(!probe(1.0, 1.0).is_normalized());
        assert!(probe(1.0, 1.0).normalize().unwrap().is_normalized());
        assert!(StateVec2::zero(BasisLabel::Probe).normalize().is_none());
    }

    #[test]
    fn sample_deterministic_outcome() {
        let mut rng = RandomStream::new(3, 0);
        for _ in 0..100 {
            let k = sample_outcome(&probe(1.0, 0.0), &computational_effects(), &mut rng).unwrap();
            assert_eq!(k, 0);
        }
    }

    #[test]
    fn sample_balanced_frequency() {
        let effects = EffectSet::new(computational_effects()).unwrap();
        let psi = probe(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let mut rng = RandomStream::new(11, 0);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| effects.sample(&psi, &mut rng).unwrap() == 0)
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.005, "frequency {freq}");
    }

    #[test]
    fn sample_consumes_one_draw() {
        let effects = EffectSet::new(computational_effects()).unwrap();
        let psi = probe(0.6, 0.8);
        let mut a = RandomStream::new(5, 2);
        let mut b = RandomStream::new(5, 2);
        effects.sample(&psi, &mut a).unwrap();
        b.uniform();
        assert_eq!(a.uniform(), b.uniform());
    }

    #[test]
    fn effect_set_validation_errors() {
        let half = Operator::outer(&probe(1.0, 0.0));
        assert!(matches!(
            EffectSet::new(vec![half.clone()]),
            Err(QuantumError::Incomplete { .. })
        ));
        let negative = Operator::from_real(2, &[-0.5, 0.0, 0.0, 0.0]).unwrap();
        let rest = Operator::from_real(2, &[1.5, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            EffectSet::new(vec![negative, rest]),
            Err(QuantumError::NotPositive { index: 0, .. })
        ));
        assert!(matches!(
            EffectSet::new(vec![]),
            Err(QuantumError::EmptyEffectSet)
        ));
        assert!(matches!(
            sample_outcome(
                &probe(1.0, 1.0),
                &computational_effects(),
                &mut RandomStream::new(0, 0)
            ),
            Err(QuantumError::NotNormalized { .. })
        ));
    }

    #[test]
    fn four_dim_eigenvalues() {
        let diag = Operator::from_real(
            4,
            &[
                0.1, 0.0, 0.0, 0.0, 0.0, -0.2, 0.0, 0.0, 0.0, 0.0, 0.7, 0.0, 0.0, 0.0, 0.0, 0.4,
            ],
        )
        .unwrap();
        let eig = diag.hermitian_eigenvalues();
        let expected = [-0.2, 0.1, 0.4, 0.7];
        for (e, x) in eig.iter().zip(expected) {
            assert!((e - x).abs() < 1e-12);
        }
    }

    #[test]
    fn random_stream_determinism() {
        let draws = |seed, shard| {
            let mut r = RandomStream::new(seed, shard);
            (0..32).map(|_| r.uniform()).collect::<Vec<_>>()
        };
        assert_eq!(draws(42, 1), draws(42, 1));
        assert_ne!(draws(42, 1), draws(42, 2));
        assert_ne!(draws(42, 1), draws(43, 1));
    }

    fn amp() -> impl Strategy<Value = Amplitude> {
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| c(re, im))
    }

    fn unit_state() -> impl Strategy<Value = StateVec2> {
        (amp(), amp())
            .prop_filter("nonzero", |(a, b)| a.norm_sqr() + b.norm_sqr() > 1e-3)
            .prop_map(|(a, b)| StateVec2::new(a, b, BasisLabel::Probe).normalize().unwrap())
    }

    /// Unitary from two orthonormal columns.
    fn unitary2(psi: &StateVec2) -> Operator {
        let perp = psi.orthogonal();
        Operator::from_entries(2, vec![psi.a0(), perp.a0(), psi.a1(), perp.a1()]).unwrap()
    }

    proptest! {
        #[test]
        fn tensor_norm_is_multiplicative(s in unit_state(), p in unit_state(), k in 0.1f64..3.0) {
            let out = tensor_product(&(k * s), &p);
            prop_assert!((out.norm() - k).abs() < ALGEBRA_TOL);
            prop_assert!(tensor_product(&s, &p).is_normalized());
        }

        #[test]
        fn unitaries_preserve_norm(a in unit_state(), b in unit_state(), s in unit_state(), p in unit_state()) {
            #[rustfmt::skip]
            let cnot = Operator::from_real(4, &[
                1.0, 0.0, 0.0, 0.0,
                0.0, 1.0, 0.0, 0.0,
                0.0, 0.0, 0.0, 1.0,
                0.0, 0.0, 1.0, 0.0,
            ]).unwrap();
            let u = Operator::kron(&unitary2(&a), &unitary2(&b)).unwrap().matmul(&cnot).unwrap();
            prop_assert!(u.is_unitary(ALGEBRA_TOL));
            let out = apply_operator(&u, &tensor_product(&s, &p)).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < ALGEBRA_TOL);
        }

        #[test]
        fn born_probabilities_sum_to_one(basis in unit_state(), psi in unit_state(), w in 0.0f64..1.0) {
            // A three-outcome POVM: w-weighted projective split plus (1-w) identity remainder.
            let perp = basis.orthogonal();
            let effects = vec![
                Operator::outer(&basis).scale(w),
                Operator::outer(&perp).scale(w),
                Operator::identity(2).unwrap().scale(1.0 - w),
            ];
            let set = EffectSet::new(effects).unwrap();
            let probs = set.probabilities(&psi).unwrap();
            prop_assert!(probs.iter().all(|&p| p >= 0.0));
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < COMPLETENESS_TOL);
        }
    }

    #[test]
    fn sampling_matches_born_within_four_sigma() {
        let psi = StateVec2::new(c(0.6, 0.0), c(0.0, 0.8), BasisLabel::Probe);
        let basis = probe(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let effects = EffectSet::new(vec![
            Operator::outer(&basis).scale(0.7),
            Operator::outer(&basis.orthogonal()).scale(0.7),
            Operator::identity(2).unwrap().scale(0.3),
        ])
        .unwrap();
        let probs = effects.probabilities(&psi).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 3];
        let mut rng = RandomStream::new(99, 7);
        for _ in 0..n {
            counts[effects.sample(&psi, &mut rng).unwrap()] += 1;
        }
        for (k, &p) in probs.iter().enumerate() {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let freq = counts[k] as f64 / n as f64;
            assert!(
                (freq - p).abs() <= 4.0 * sigma,
                "outcome {k}: {freq} vs {p}"
            );
        }
    }
}
