//! RWA Hamiltonian of the four-level system and fixed-step RK4 propagation
//! of `dψ/dt = −i H(t) ψ` (ħ = 1).
//!
//! The norm is never corrected during propagation. Drift beyond
//! [`PropagatorConfig::max_norm_drift`] aborts the run.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::analysis::Trajectory;
use crate::pulses::{rabi_frequencies, PulseSchedule};
use crate::states::StateVector;

/// Steps per `min(τ, 1/Ω0)` in the default step rule.
pub const STEPS_PER_SCALE: f64 = 50.0;
/// Norm drift at which a run is declared failed.
pub const DEFAULT_MAX_NORM_DRIFT: f64 = 1e-6;
/// Tolerance on the normalization of an initial state.
pub const INITIAL_NORM_TOLERANCE: f64 = 1e-9;
/// Below this value of `Ω² + |Ω3|²` the instantaneous dark state is undefined.
pub const DARK_STATE_FLOOR: f64 = 1e-300;

const ZERO: C64 = C64::new(0.0, 0.0);
const MINUS_I: C64 = C64::new(0.0, -1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("norm drifted by {drift:e} at t = {t}; step {step} is too large")]
    IntegrationFailure { t: f64, drift: f64, step: f64 },
    #[error("non-finite amplitudes at t = {t}")]
    NumericalBlowup { t: f64 },
    #[error("initial state has norm² {0}, expected 1")]
    UnnormalizedInitialState(f64),
    #[error("invalid time range [{start}, {end}]")]
    InvalidRange { start: f64, end: f64 },
    #[error("sample time {0} lies outside the propagation range or is out of order")]
    InvalidSample(f64),
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("dark state undefined at t = {0}: all couplings vanish")]
    UndefinedDarkState(f64),
}

pub type Matrix4 = [[C64; 4]; 4];

/// `H(t)` in the basis `|1⟩ … |4⟩`. Only row and column 4 are populated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianSample {
    matrix: Matrix4,
}

impl HamiltonianSample {
    /// `Δ|4⟩⟨4| + ½ Σi (Ωi|i⟩⟨4| + h.c.)`
    pub fn from_couplings(omegas: [C64; 3], detuning: f64) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, om) in omegas.iter().enumerate() {
            m[i][3] = 0.5 * om;
            m[3][i] = 0.5 * om.conj();
        }
        m[3][3] = C64::new(detuning, 0.0);
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &Matrix4 {
        &self.matrix
    }

    /// The three couplings `Ωi`, read back from column 4.
    pub fn couplings(&self) -> [C64; 3] {
        [0, 1, 2].map(|i| 2.0 * self.matrix[i][3])
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let m = &self.matrix;
        let v = &psi.0;
        // Row i < 3 only couples to |4⟩.
        StateVector([
            m[0][3] * v[3],
            m[1][3] * v[3],
            m[2][3] * v[3],
            m[3][0] * v[0] + m[3][1] * v[1] + m[3][2] * v[2] + m[3][3] * v[3],
        ])
    }

    /// `max |H − H†|`
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((m[i][j] - m[j][i].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Anything that yields `H(t)`.
pub trait Hamiltonian: Sync {
    fn at(&self, t: f64) -> HamiltonianSample;
}

impl Hamiltonian for PulseSchedule {
    fn at(&self, t: f64) -> HamiltonianSample {
        hamiltonian_at(t, self)
    }
}

impl Hamiltonian for HamiltonianSample {
    fn at(&self, _t: f64) -> HamiltonianSample {
        *self
    }
}

pub fn hamiltonian_at(t: f64, sched: &PulseSchedule) -> HamiltonianSample {
    HamiltonianSample::from_couplings(rabi_frequencies(t, sched).as_array(), sched.detuning)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    /// Nominal RK4 step. Segments between sample times are split into
    /// equal steps no longer than this.
    pub step: f64,
    /// Largest tolerated `|‖ψ‖² − 1|` before the run is aborted.
    pub max_norm_drift: f64,
}

impl PropagatorConfig {
    pub fn with_step(step: f64) -> Self {
        Self { step, max_norm_drift: DEFAULT_MAX_NORM_DRIFT }
    }

    /// Default step `min(τ, 1/Ω0) / 50`.
    pub fn for_schedule(sched: &PulseSchedule) -> Self {
        Self::with_step(default_step(sched))
    }

    pub fn halved(&self) -> Self {
        Self { step: 0.5 * self.step, ..*self }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.step.is_finite() && self.step > 0.0 {
            Ok(())
        } else {
            Err(DynamicsError::InvalidStep(self.step))
        }
    }
}

pub fn default_step(sched: &PulseSchedule) -> f64 {
    let inv = if sched.omega0 > 0.0 { 1.0 / sched.omega0 } else { f64::INFINITY };
    sched.tau.min(inv) / STEPS_PER_SCALE
}

fn rhs(h: &HamiltonianSample, psi: &StateVector) -> StateVector {
    h.apply(psi) * MINUS_I
}

fn rk4_step<H: Hamiltonian + ?Sized>(ham: &H, t: f64, dt: f64, psi: &StateVector) -> StateVector {
    let h0 = ham.at(t);
    let hm = ham.at(t + 0.5 * dt);
    let h1 = ham.at(t + dt);
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let k1 = rhs(&h0, psi);
    let k2 = rhs(&hm, &(*psi + k1 * half));
    let k3 = rhs(&hm, &(*psi + k2 * half));
    let k4 = rhs(&h1, &(*psi + k3 * full));
    let sixth = C64::new(dt / 6.0, 0.0);
    *psi + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * sixth
}

/// Propagates `psi0` from `t_start` to `t_end` under `ham`.
///
/// `samples` must be strictly increasing and inside `[t_start, t_end]`; the
/// trajectory holds the state at exactly those times. The peak `|4⟩`
/// population is tracked at every internal step.
pub fn propagate_with<H: Hamiltonian + ?Sized>(
    psi0: &StateVector,
    ham: &H,
    cfg: &PropagatorConfig,
    t_start: f64,
    t_end: f64,
    samples: &[f64],
) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
        return Err(DynamicsError::InvalidRange { start: t_start, end: t_end });
    }
    let n0 = psi0.norm_sqr();
    if (n0 - 1.0).abs() > INITIAL_NORM_TOLERANCE {
        return Err(DynamicsError::UnnormalizedInitialState(n0));
    }
    let mut prev = f64::NEG_INFINITY;
    for &s in samples {
        if !(s > prev && s >= t_start && s <= t_end) {
            return Err(DynamicsError::InvalidSample(s));
        }
        prev = s;
    }

    let mut traj = Trajectory::with_capacity(samples.len());
    let mut psi = *psi0;
    let mut t = t_start;
    let mut peak_excited = psi.0[3].norm_sqr();
    let mut steps = 0usize;

    let record = |traj: &mut Trajectory, t: f64, psi: &StateVector| {
        let om = ham.at(t).couplings();
        traj.push(t, *psi, om.map(|z| z.norm()));
    };

    // Sample targets followed by the end point, which is always reached.
    let targets = samples.iter().map(|&s| (s, true)).chain(std::iter::once((t_end, false)));
    for (target, is_sample) in targets {
        let span = target - t;
        if span > 0.0 {
            let n = (span / cfg.step).ceil().max(1.0) as usize;
            let dt = span / n as f64;
            let seg_start = t;
            for k in 0..n {
                let tk = seg_start + k as f64 * dt;
                psi = rk4_step(ham, tk, dt, &psi);
                steps += 1;
                let t_next = if k + 1 == n { target } else { seg_start + (k + 1) as f64 * dt };
                if !psi.is_finite() {
                    return Err(DynamicsError::NumericalBlowup { t: t_next });
                }
                let drift = (psi.norm_sqr() - 1.0).abs();
                if drift > cfg.max_norm_drift {
                    return Err(DynamicsError::IntegrationFailure { t: t_next, drift, step: dt });
                }
                peak_excited = peak_excited.max(psi.0[3].norm_sqr());
            }
            t = target;
        }
        if is_sample {
            record(&mut traj, t, &psi);
        }
    }
    traj.set_final(psi, peak_excited, steps);
    Ok(traj)
}

/// Propagates under the pulse schedule's Hamiltonian.
pub fn propagate(
    psi0: &StateVector,
    sched: &PulseSchedule,
    cfg: &PropagatorConfig,
    t_start: f64,
    t_end: f64,
    samples: &[f64],
) -> Result<Trajectory, DynamicsError> {
    propagate_with(psi0, sched, cfg, t_start, t_end, samples)
}

/// Largest change in any final amplitude when the step is halved.
pub fn convergence_certificate<H: Hamiltonian + ?Sized>(
    psi0: &StateVector,
    ham: &H,
    cfg: &PropagatorConfig,
    t_start: f64,
    t_end: f64,
) -> Result<f64, DynamicsError> {
    let coarse = propagate_with(psi0, ham, cfg, t_start, t_end, &[])?;
    let fine = propagate_with(psi0, ham, &cfg.halved(), t_start, t_end, &[])?;
    Ok(coarse.final_state().max_abs_diff(&fine.final_state()))
}

/// Instantaneous dark state `∝ Ω3*(t)|C⟩ − Ω(t)|3⟩`, with `Ω` the shared
/// field-1/2 envelope and `|C⟩ = cosχ|1⟩ + e^{iη} sinχ|2⟩`.
///
/// Both envelopes are summed over the two processes, so `H(t)ψ_D = 0` holds
/// to roundoff at every time where the couplings do not all vanish.
pub fn dark_state_at(t: f64, sched: &PulseSchedule) -> Result<StateVector, DynamicsError> {
    let r = rabi_frequencies(t, sched);
    let omega = r.pump_pair;
    let om3 = r.omega3;
    let weight = omega * omega + om3.norm_sqr();
    if !(weight > DARK_STATE_FLOOR) {
        return Err(DynamicsError::UndefinedDarkState(t));
    }
    let norm = weight.sqrt();
    let a = om3.conj() / norm;
    let (sc, cc) = sched.chi.sin_cos();
    Ok(StateVector([a * cc, a * C64::from_polar(sc, sched.eta), C64::new(-omega / norm, 0.0), ZERO]))
}
