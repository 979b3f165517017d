//! Qubit and four-level state vectors, plus the exact SU(2) rotation used as
//! the analytic reference for the simulated protocol.
//!
//! Basis ordering is `|1⟩, |2⟩, |3⟩, |4⟩`; the qubit lives on `{|1⟩, |2⟩}`.
//! Pauli matrices follow `σx = |1⟩⟨2| + |2⟩⟨1|`, `σy = i(|2⟩⟨1| − |1⟩⟨2|)`,
//! `σz = |1⟩⟨1| − |2⟩⟨2|`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

/// Allowed deviation of a rotation axis from unit length.
pub const AXIS_NORM_TOLERANCE: f64 = 1e-9;
/// Below this magnitude both qubit amplitudes are treated as absent.
pub const DEGENERATE_AMPLITUDE: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("state has non-finite amplitudes")]
    NonFinite,
    #[error("rotation axis has norm {norm}, expected 1")]
    NonUnitAxis { norm: f64 },
    #[error("qubit components are both below {DEGENERATE_AMPLITUDE}; projection is undefined")]
    DegenerateProjection,
}

/// `α|1⟩ + β|2⟩`, always normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitState {
    alpha: C64,
    beta: C64,
}

impl QubitState {
    /// Builds a qubit state, normalizing the amplitudes.
    pub fn new(alpha: C64, beta: C64) -> Result<Self, StateError> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(StateError::NonFinite);
        }
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(StateError::ZeroNorm);
        }
        Ok(Self { alpha: alpha / norm, beta: beta / norm })
    }

    pub fn from_real(alpha: f64, beta: f64) -> Result<Self, StateError> {
        Self::new(C64::new(alpha, 0.0), C64::new(beta, 0.0))
    }

    /// Wraps amplitudes that are already normalized, without touching them.
    pub(crate) fn from_normalized(alpha: C64, beta: C64) -> Self {
        Self { alpha, beta }
    }

    /// `|1⟩`
    pub fn zero() -> Self {
        Self { alpha: ONE, beta: ZERO }
    }

    /// `|2⟩`
    pub fn one() -> Self {
        Self { alpha: ZERO, beta: ONE }
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        [self.alpha, self.beta]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &QubitState) -> C64 {
        self.alpha.conj() * other.alpha + self.beta.conj() * other.beta
    }

    /// Multiplies both amplitudes by a global phase `e^{iφ}`.
    pub fn with_phase(&self, phi: f64) -> Self {
        let p = C64::from_polar(1.0, phi);
        Self { alpha: self.alpha * p, beta: self.beta * p }
    }
}

/// Four complex amplitudes `⟨1|ψ⟩ … ⟨4|ψ⟩`.
///
/// Not renormalized on construction: the propagator treats norm drift as a
/// diagnostic, so this type carries whatever the integrator produced.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StateVector(pub [C64; 4]);

impl StateVector {
    pub fn zero() -> Self {
        StateVector([ZERO; 4])
    }

    /// Basis state `|k⟩` for `k` in `1..=4`.
    ///
    /// # Panics
    /// If `k` is outside `1..=4`.
    pub fn basis(k: usize) -> Self {
        assert!((1..=4).contains(&k), "basis index {k} outside 1..=4");
        let mut v = [ZERO; 4];
        v[k - 1] = ONE;
        StateVector(v)
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `(P1, P2, P3, P4)` with `Pi = |⟨i|ψ⟩|²`.
    pub fn populations(&self) -> [f64; 4] {
        self.0.map(|a| a.norm_sqr())
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.is_finite())
    }

    pub fn scale(&self, c: C64) -> Self {
        StateVector(self.0.map(|a| a * c))
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Add for StateVector {
    type Output = StateVector;
    fn add(self, rhs: StateVector) -> StateVector {
        StateVector(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for StateVector {
    type Output = StateVector;
    fn sub(self, rhs: StateVector) -> StateVector {
        StateVector(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Mul<C64> for StateVector {
    type Output = StateVector;
    fn mul(self, rhs: C64) -> StateVector {
        self.scale(rhs)
    }
}

/// Rotation parameters fixed by the lasers: the mixing angle `chi` and
/// relative phase `eta` of fields 1 and 2 set the axis, the field-3 phase
/// shift `delta` sets the angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationSpec {
    pub chi: f64,
    pub eta: f64,
    pub delta: f64,
}

impl RotationSpec {
    pub fn new(chi: f64, eta: f64, delta: f64) -> Self {
        Self { chi, eta, delta }
    }

    /// `n = (sin2χ cosη, sin2χ sinη, cos2χ)`
    pub fn axis(&self) -> [f64; 3] {
        let (s2, c2) = (2.0 * self.chi).sin_cos();
        let (se, ce) = self.eta.sin_cos();
        [s2 * ce, s2 * se, c2]
    }
}

/// Row-major 2×2 complex matrix acting on `(α, β)`.
pub type Mat2 = [[C64; 2]; 2];

pub fn apply(m: &Mat2, q: &QubitState) -> [C64; 2] {
    [m[0][0] * q.alpha + m[0][1] * q.beta, m[1][0] * q.alpha + m[1][1] * q.beta]
}

pub fn det(m: &Mat2) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// `n·σ` for a real 3-vector `n`.
pub fn pauli_dot(n: [f64; 3]) -> Mat2 {
    let [nx, ny, nz] = n;
    [[C64::new(nz, 0.0), C64::new(nx, -ny)], [C64::new(nx, ny), C64::new(-nz, 0.0)]]
}

fn check_axis(axis: [f64; 3]) -> Result<(), StateError> {
    let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > AXIS_NORM_TOLERANCE {
        return Err(StateError::NonUnitAxis { norm });
    }
    Ok(())
}

/// `R_n(ζ) = cos(ζ/2) − i (n·σ) sin(ζ/2)`.
pub fn rotation_matrix(axis: [f64; 3], angle: f64) -> Result<Mat2, StateError> {
    check_axis(axis)?;
    let ns = pauli_dot(axis);
    let (s, c) = (0.5 * angle).sin_cos();
    let diag = C64::new(c, 0.0);
    let off = -I * s;
    Ok([[diag + off * ns[0][0], off * ns[0][1]], [off * ns[1][0], diag + off * ns[1][1]]])
}

/// Applies the exact SU(2) rotation about `axis` through `angle`.
pub fn rotate_analytic(q: &QubitState, axis: [f64; 3], angle: f64) -> Result<QubitState, StateError> {
    let m = rotation_matrix(axis, angle)?;
    let [a, b] = apply(&m, q);
    Ok(QubitState::from_normalized(a, b))
}

/// Final qubit state expected from the two-process protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    /// `e^{−iδ/2} R_n(δ)|q⟩`, global phase included.
    pub state: QubitState,
    /// `R_n(δ)|q⟩` without the global phase.
    pub rotated: QubitState,
    /// The global phase, `−δ/2`.
    pub global_phase: f64,
}

/// Ideal final state `e^{−iδ/2} R_n(δ)|q⟩` with `n` from `(χ, η)`.
pub fn predicted_final(q: &QubitState, spec: &RotationSpec) -> Prediction {
    // The axis is unit by construction.
    let rotated = rotate_analytic(q, spec.axis(), spec.delta).expect("unit axis");
    let global_phase = -0.5 * spec.delta;
    let p = C64::from_polar(1.0, global_phase);
    Prediction { state: QubitState::from_normalized(rotated.alpha * p, rotated.beta * p), rotated, global_phase }
}

/// Places `α` on `|1⟩` and `β` on `|2⟩`.
pub fn embed(q: &QubitState) -> StateVector {
    StateVector([q.alpha, q.beta, ZERO, ZERO])
}

/// Renormalized qubit part of `s` and the population outside the qubit
/// subspace.
pub fn project_qubit(s: &StateVector) -> Result<(QubitState, f64), StateError> {
    let [a, b, c, d] = s.0;
    if a.norm() < DEGENERATE_AMPLITUDE && b.norm() < DEGENERATE_AMPLITUDE {
        return Err(StateError::DegenerateProjection);
    }
    let leakage = (c.norm_sqr() + d.norm_sqr()).clamp(0.0, 1.0);
    Ok((QubitState::new(a, b)?, leakage))
}
