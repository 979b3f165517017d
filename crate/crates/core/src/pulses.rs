//! Pulse envelopes and the two-process counterintuitive schedule.
//!
//! Process 1 is centered at `−T/2`: field 3 (Stokes) peaks at `−T/2 − t0`,
//! fields 1 and 2 (pump) at `−T/2 + t0`. Process 2 is centered at `+T/2` with
//! the roles reversed: fields 1 and 2 peak first at `T/2 − t0`, field 3 at
//! `T/2 + t0` carrying the extra phase `e^{iδ}`. Fields 1 and 2 share one
//! real envelope `Ω(t)` split as `Ω cosχ` and `Ω e^{iη} sinχ` in both
//! processes.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sign of the phase carried by field 3 in the second process,
/// `Ω3 ∝ e^{+iδ}`. With this choice the bright component returns as
/// `e^{−iδ}|C⟩`.
pub const FIELD3_PHASE_SIGN: f64 = 1.0;

/// Extra margin, in units of `tau`, added on each side of the outermost
/// pulse centers to form the simulation window.
pub const WINDOW_MARGIN_WIDTHS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PulseError {
    #[error("pulse width tau must be positive and finite, got {0}")]
    NonPositiveWidth(f64),
    #[error("half pulse-pair offset t0 must be positive and finite, got {0}")]
    NonPositiveOffset(f64),
    #[error("process separation T = {big_t} must exceed 2·t0 = {}", 2.0 * .t0)]
    UnresolvedProcesses { big_t: f64, t0: f64 },
    #[error("peak Rabi frequency must be finite and non-negative, got {0}")]
    InvalidAmplitude(f64),
    #[error("parameter {name} is not finite")]
    NonFinite { name: &'static str },
}

/// Gaussian envelope `exp[−(t − center)² / 2τ²]`.
pub fn envelope(t: f64, center: f64, tau: f64) -> f64 {
    let x = (t - center) / tau;
    (-0.5 * x * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    #[default]
    Gaussian,
    /// `cos²(π(t − c)/w)` on `|t − c| ≤ w/2`, zero outside, with
    /// `w = 2√(2π) τ` so the area matches the Gaussian of the same `τ`.
    SinSquared,
}

impl PulseShape {
    /// Full support width of the sin² window for a given `tau`.
    pub fn sin_squared_width(tau: f64) -> f64 {
        2.0 * (2.0 * PI).sqrt() * tau
    }

    pub fn value(self, t: f64, center: f64, tau: f64) -> f64 {
        match self {
            PulseShape::Gaussian => envelope(t, center, tau),
            PulseShape::SinSquared => {
                let w = Self::sin_squared_width(tau);
                let x = t - center;
                if x.abs() > 0.5 * w {
                    0.0
                } else {
                    (PI * x / w).cos().powi(2)
                }
            }
        }
    }

    /// Time derivative of [`PulseShape::value`].
    pub fn derivative(self, t: f64, center: f64, tau: f64) -> f64 {
        match self {
            PulseShape::Gaussian => -(t - center) / (tau * tau) * envelope(t, center, tau),
            PulseShape::SinSquared => {
                let w = Self::sin_squared_width(tau);
                let x = t - center;
                if x.abs() > 0.5 * w {
                    0.0
                } else {
                    -(PI / w) * (2.0 * PI * x / w).sin()
                }
            }
        }
    }

    /// `∫ value dt` for a unit-peak pulse; `τ√(2π)` for both shapes.
    pub fn area(self, tau: f64) -> f64 {
        match self {
            PulseShape::Gaussian => tau * (2.0 * PI).sqrt(),
            PulseShape::SinSquared => 0.5 * Self::sin_squared_width(tau),
        }
    }
}

/// One of the two STIRAP processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    First,
    Second,
}

impl Process {
    pub const BOTH: [Process; 2] = [Process::First, Process::Second];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    /// Peak Rabi frequency `Ω0`.
    pub omega0: f64,
    pub tau: f64,
    pub t0: f64,
    /// Separation `T` between the two process centers.
    pub big_t: f64,
    pub chi: f64,
    pub eta: f64,
    pub delta: f64,
    pub detuning: f64,
    #[serde(default)]
    pub shape: PulseShape,
}

impl Default for PulseSchedule {
    fn default() -> Self {
        Self::fig2(std::f64::consts::PI)
    }
}

impl PulseSchedule {
    /// The reference parameter set: `τ = 2`, `t0 = 1.6`, `T = 20`, `Δ = 0`,
    /// `χ = −π/12`, `η = 0`, with `Ω0 = 20` and the given phase shift.
    pub fn fig2(delta: f64) -> Self {
        Self {
            omega0: 20.0,
            tau: 2.0,
            t0: 1.6,
            big_t: 20.0,
            chi: -PI / 12.0,
            eta: 0.0,
            delta,
            detuning: 0.0,
            shape: PulseShape::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<(), PulseError> {
        for (name, v) in [
            ("chi", self.chi),
            ("eta", self.eta),
            ("delta", self.delta),
            ("detuning", self.detuning),
            ("big_t", self.big_t),
        ] {
            if !v.is_finite() {
                return Err(PulseError::NonFinite { name });
            }
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(PulseError::NonPositiveWidth(self.tau));
        }
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(PulseError::NonPositiveOffset(self.t0));
        }
        if !(self.big_t > 2.0 * self.t0) {
            return Err(PulseError::UnresolvedProcesses { big_t: self.big_t, t0: self.t0 });
        }
        if !(self.omega0.is_finite() && self.omega0 >= 0.0) {
            return Err(PulseError::InvalidAmplitude(self.omega0));
        }
        Ok(())
    }

    pub fn rotation(&self) -> crate::states::RotationSpec {
        crate::states::RotationSpec::new(self.chi, self.eta, self.delta)
    }

    pub fn process_center(&self, p: Process) -> f64 {
        match p {
            Process::First => -0.5 * self.big_t,
            Process::Second => 0.5 * self.big_t,
        }
    }

    /// Peak time of the shared field-1/2 envelope in process `p`.
    pub fn pump_pair_center(&self, p: Process) -> f64 {
        match p {
            Process::First => self.process_center(p) + self.t0,
            Process::Second => self.process_center(p) - self.t0,
        }
    }

    /// Peak time of the field-3 envelope in process `p`.
    pub fn field3_center(&self, p: Process) -> f64 {
        match p {
            Process::First => self.process_center(p) - self.t0,
            Process::Second => self.process_center(p) + self.t0,
        }
    }

    /// `[t_start, t_end]` covering both processes with a margin of
    /// [`WINDOW_MARGIN_WIDTHS`] widths.
    pub fn window(&self) -> (f64, f64) {
        let half = 0.5 * self.big_t + self.t0 + WINDOW_MARGIN_WIDTHS * self.tau;
        (-half, half)
    }

    /// Interval of process `p` spanning both pulse peaks plus `margin` widths.
    pub fn process_window(&self, p: Process, margin: f64) -> (f64, f64) {
        let c = self.process_center(p);
        let half = self.t0 + margin * self.tau;
        (c - half, c + half)
    }

    /// Normalized overlap `∫g_a g_b / ∫g²` of the two envelopes in one
    /// process, `exp(−(2t0)²/4τ²)` for Gaussians.
    pub fn pulse_overlap(&self) -> f64 {
        match self.shape {
            PulseShape::Gaussian => {
                let d = 2.0 * self.t0;
                (-d * d / (4.0 * self.tau * self.tau)).exp()
            }
            PulseShape::SinSquared => {
                // Trapezoid over the support of the earlier pulse.
                let w = PulseShape::sin_squared_width(self.tau);
                let n = 4096;
                let h = w / n as f64;
                let (a, b) = (-self.t0, self.t0);
                let (mut cross, mut auto) = (0.0, 0.0);
                for k in 0..=n {
                    let t = a - 0.5 * w + k as f64 * h;
                    let wgt = if k == 0 || k == n { 0.5 } else { 1.0 };
                    let ga = self.shape.value(t, a, self.tau);
                    cross += wgt * ga * self.shape.value(t, b, self.tau);
                    auto += wgt * ga * ga;
                }
                cross / auto
            }
        }
    }

    /// Real envelope `Ω(t)` shared by fields 1 and 2, summed over both
    /// processes.
    pub fn pump_pair_envelope(&self, t: f64) -> f64 {
        Process::BOTH.iter().map(|&p| self.shape.value(t, self.pump_pair_center(p), self.tau)).sum::<f64>()
            * self.omega0
    }

    pub fn pump_pair_envelope_derivative(&self, t: f64) -> f64 {
        Process::BOTH.iter().map(|&p| self.shape.derivative(t, self.pump_pair_center(p), self.tau)).sum::<f64>()
            * self.omega0
    }

    /// Complex field-3 Rabi frequency, including the second-process phase.
    pub fn field3(&self, t: f64) -> C64 {
        let first = self.shape.value(t, self.field3_center(Process::First), self.tau);
        let second = self.shape.value(t, self.field3_center(Process::Second), self.tau);
        let phase = C64::from_polar(1.0, FIELD3_PHASE_SIGN * self.delta);
        (C64::new(first, 0.0) + phase * second) * self.omega0
    }

    /// Per-process field-3 envelope magnitude and its derivative.
    pub fn field3_process(&self, t: f64, p: Process) -> (f64, f64) {
        let c = self.field3_center(p);
        (self.omega0 * self.shape.value(t, c, self.tau), self.omega0 * self.shape.derivative(t, c, self.tau))
    }

    /// Per-process field-1/2 envelope and its derivative.
    pub fn pump_pair_process(&self, t: f64, p: Process) -> (f64, f64) {
        let c = self.pump_pair_center(p);
        (self.omega0 * self.shape.value(t, c, self.tau), self.omega0 * self.shape.derivative(t, c, self.tau))
    }
}

/// Instantaneous couplings of the three ground states to `|4⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiFrequencies {
    pub omega1: C64,
    pub omega2: C64,
    pub omega3: C64,
    /// Shared real envelope `Ω(t)` of fields 1 and 2.
    pub pump_pair: f64,
}

impl RabiFrequencies {
    pub fn as_array(&self) -> [C64; 3] {
        [self.omega1, self.omega2, self.omega3]
    }

    pub fn magnitudes(&self) -> [f64; 3] {
        [self.omega1.norm(), self.omega2.norm(), self.omega3.norm()]
    }
}

pub fn rabi_frequencies(t: f64, sched: &PulseSchedule) -> RabiFrequencies {
    let omega = sched.pump_pair_envelope(t);
    let (sc, cc) = sched.chi.sin_cos();
    RabiFrequencies {
        omega1: C64::new(omega * cc, 0.0),
        omega2: C64::from_polar(1.0, sched.eta) * (omega * sc),
        omega3: sched.field3(t),
        pump_pair: omega,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn envelope_values() {
        assert_eq!(envelope(3.0, 3.0, 2.0), 1.0);
        assert!((envelope(5.0, 3.0, 2.0) - 0.6065306597126334).abs() < 1e-15);
        assert!((envelope(1.0, 3.0, 2.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((envelope(9.0, 3.0, 2.0) - (-4.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn field3_peak_in_first_process() {
        let s = PulseSchedule::fig2(PI);
        let r = rabi_frequencies(-s.big_t / 2.0 - s.t0, &s);
        // numpy: second-process tail exp(−23.2²/8) ≈ 5e-30
        assert!((r.omega3.norm() - 20.0).abs() < 1e-12);
        assert!((r.pump_pair - 5.560746009063886).abs() < 1e-12);
    }

    #[test]
    fn vanishes_far_from_pulses() {
        let s = PulseSchedule::fig2(1.0);
        for t in [-200.0, 200.0] {
            let r = rabi_frequencies(t, &s);
            assert!(r.magnitudes().iter().all(|&m| m == 0.0));
        }
    }

    #[test]
    fn counterintuitive_ordering() {
        let s = PulseSchedule::fig2(0.3);
        assert!(s.field3_center(Process::First) < s.pump_pair_center(Process::First));
        assert!(s.pump_pair_center(Process::Second) < s.field3_center(Process::Second));
        assert_eq!(s.field3_center(Process::First), -11.6);
        assert_eq!(s.pump_pair_center(Process::First), -8.4);
        assert_eq!(s.pump_pair_center(Process::Second), 8.4);
        assert_eq!(s.field3_center(Process::Second), 11.6);
    }

    #[test]
    fn default_window() {
        let (a, b) = PulseSchedule::fig2(0.0).window();
        assert!((a + 21.6).abs() < 1e-12 && (b - 21.6).abs() < 1e-12);
    }

    #[test]
    fn default_pulses_overlap() {
        let s = PulseSchedule::fig2(PI);
        assert!((s.pulse_overlap() - 0.5272924240430485).abs() < 1e-12);
        assert!(s.pulse_overlap() > 0.3);
        let sin2 = PulseSchedule { shape: PulseShape::SinSquared, ..s };
        assert!(sin2.pulse_overlap() > 0.3);
    }

    #[test]
    fn validation() {
        let s = PulseSchedule::fig2(0.0);
        assert!(s.validate().is_ok());
        assert!(PulseSchedule { omega0: 0.0, ..s }.validate().is_ok());
        assert!(matches!(PulseSchedule { tau: 0.0, ..s }.validate(), Err(PulseError::NonPositiveWidth(_))));
        assert!(matches!(PulseSchedule { t0: -1.0, ..s }.validate(), Err(PulseError::NonPositiveOffset(_))));
        assert!(matches!(PulseSchedule { big_t: 3.0, ..s }.validate(), Err(PulseError::UnresolvedProcesses { .. })));
        assert!(matches!(PulseSchedule { omega0: -1.0, ..s }.validate(), Err(PulseError::InvalidAmplitude(_))));
        assert!(matches!(PulseSchedule { eta: f64::NAN, ..s }.validate(), Err(PulseError::NonFinite { name: "eta" })));
    }

    #[test]
    fn shapes_share_area() {
        let tau = 2.0;
        for shape in [PulseShape::Gaussian, PulseShape::SinSquared] {
            let (a, b, n) = (-40.0, 40.0, 200_000);
            let h = (b - a) / n as f64;
            let sum: f64 = (0..=n)
                .map(|k| {
                    let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                    w * shape.value(a + k as f64 * h, 0.0, tau)
                })
                .sum::<f64>()
                * h;
            assert!((sum - shape.area(tau)).abs() < 1e-6, "{shape:?}: {sum}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for shape in [PulseShape::Gaussian, PulseShape::SinSquared] {
            for &t in &[-3.1, -0.7, 0.0, 0.4, 2.5] {
                let fd = (shape.value(t + h, 0.2, 2.0) - shape.value(t - h, 0.2, 2.0)) / (2.0 * h);
                assert!((fd - shape.derivative(t, 0.2, 2.0)).abs() < 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn pump_pair_ratio_fixed(
            t in -30.0..30.0f64, chi in -1.5..1.5f64, eta in -3.0..3.0f64, delta in -3.0..3.0f64,
        ) {
            let s = PulseSchedule { chi, eta, delta, ..PulseSchedule::fig2(0.0) };
            let r = rabi_frequencies(t, &s);
            prop_assume!(r.omega1.norm() > 1e-300 && chi.abs() > 1e-6);
            let ratio = r.omega2 / r.omega1;
            prop_assert!((ratio.norm() - chi.tan().abs()).abs() < 1e-12 * chi.tan().abs().max(1.0));
            let expected_arg = if chi.tan() > 0.0 { eta } else { eta + PI };
            let diff = (ratio.arg() - expected_arg).rem_euclid(2.0 * PI);
            prop_assert!(diff.min(2.0 * PI - diff) < 1e-12);
        }

        #[test]
        fn zero_phase_schedule_is_real_and_mirrored(t in -30.0..30.0f64) {
            let s = PulseSchedule::fig2(0.0);
            let fwd = rabi_frequencies(t, &s);
            let back = rabi_frequencies(-t, &s);
            prop_assert_eq!(fwd.omega3.im, 0.0);
            prop_assert!((fwd.pump_pair - back.pump_pair).abs() < 1e-12);
            prop_assert!((fwd.omega3.re - back.omega3.re).abs() < 1e-12);
        }

        #[test]
        fn envelope_in_unit_interval(t in -50.0..50.0f64, c in -5.0..5.0f64, tau in 0.1..5.0f64) {
            let g = envelope(t, c, tau);
            prop_assert!((0.0..=1.0).contains(&g));
        }
    }
}
