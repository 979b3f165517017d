//! Fidelity and population diagnostics, the parameter sweep engine, and the
//! CSV formats for trajectories and sweeps.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{PropagatorConfig, DEFAULT_MAX_NORM_DRIFT};
use crate::pulses::{Process, PulseSchedule, PulseShape};
use crate::states::{embed, predicted_final, QubitState, StateVector};
use crate::stirap::{run_rotation_with, RunOptions};

/// Fidelity is only meaningful while less than this much population has
/// left the qubit subspace.
pub const LEAKAGE_FLAG: f64 = 0.5;
/// A perturbation axis counts as robust when fidelity stays above this.
pub const ROBUSTNESS_THRESHOLD: f64 = 0.999;
/// Relative perturbation used for robustness classification.
pub const ROBUSTNESS_SPAN: f64 = 0.2;
/// Pulse area above which a schedule is labelled adiabatic.
pub const DEFAULT_AREA_THRESHOLD: f64 = 10.0;
/// Points with `sin 2θ` below this are outside the active transfer region
/// when evaluating the local adiabaticity ratio.
pub const ACTIVE_MIXING: f64 = 0.1;

/// Time-ordered states of one propagation plus the coupling magnitudes at
/// the same instants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
    rabi: Vec<[f64; 3]>,
    final_state: StateVector,
    peak_excited: f64,
    steps: usize,
}

impl Trajectory {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            rabi: Vec::with_capacity(n),
            final_state: StateVector::zero(),
            peak_excited: 0.0,
            steps: 0,
        }
    }

    pub(crate) fn push(&mut self, t: f64, psi: StateVector, rabi: [f64; 3]) {
        self.times.push(t);
        self.states.push(psi);
        self.rabi.push(rabi);
    }

    pub(crate) fn set_final(&mut self, psi: StateVector, peak_excited: f64, steps: usize) {
        self.final_state = psi;
        self.peak_excited = peak_excited;
        self.steps = steps;
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    /// `(|Ω1|, |Ω2|, |Ω3|)` per sample.
    pub fn rabi(&self) -> &[[f64; 3]] {
        &self.rabi
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// State at the end of the propagation range, sampled or not.
    pub fn final_state(&self) -> StateVector {
        self.final_state
    }

    /// Largest `|4⟩` population over every integration step.
    pub fn peak_excited(&self) -> f64 {
        self.peak_excited
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// `F = |⟨ψ_f|ψ∞⟩|²` together with the population `ψ∞` lost from the qubit
/// subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fidelity {
    pub value: f64,
    pub leakage: f64,
    /// Set when leakage reaches [`LEAKAGE_FLAG`]; the value is then not a
    /// useful figure of merit.
    pub high_leakage: bool,
}

pub fn fidelity(predicted: &QubitState, simulated: &StateVector) -> Fidelity {
    let value = embed(predicted).inner(simulated).norm_sqr().clamp(0.0, 1.0);
    let [_, _, p3, p4] = simulated.populations();
    let leakage = (p3 + p4).clamp(0.0, 1.0);
    Fidelity { value, leakage, high_leakage: leakage >= LEAKAGE_FLAG }
}

pub fn populations(traj: &Trajectory) -> Vec<[f64; 4]> {
    traj.states().iter().map(StateVector::populations).collect()
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub const TRAJECTORY_HEADER: &str = "t,P1,P2,P3,P4,absOmega1,absOmega2,absOmega3";
pub const SWEEP_HEADER: &str = "param_value,fidelity,max_P4,leakage";

/// Writes every `stride`-th sample (and always the last one).
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, stride: usize, out: &mut W) -> io::Result<()> {
    let stride = stride.max(1);
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    let n = traj.len();
    for i in (0..n).filter(|i| i % stride == 0 || *i + 1 == n) {
        let [p1, p2, p3, p4] = traj.states()[i].populations();
        let [o1, o2, o3] = traj.rabi()[i];
        let row = [traj.times()[i], p1, p2, p3, p4, o1, o2, o3].map(fmt_f64).join(",");
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Parameter that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Omega0,
    Tau,
    T0,
    Delta,
    Chi,
    Eta,
    Detuning,
    /// `0` selects Gaussian envelopes, `1` sin² windows.
    Shape,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 8] = [
        SweepAxis::Omega0,
        SweepAxis::Tau,
        SweepAxis::T0,
        SweepAxis::Delta,
        SweepAxis::Chi,
        SweepAxis::Eta,
        SweepAxis::Detuning,
        SweepAxis::Shape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Omega0 => "omega0",
            SweepAxis::Tau => "tau",
            SweepAxis::T0 => "t0",
            SweepAxis::Delta => "delta",
            SweepAxis::Chi => "chi",
            SweepAxis::Eta => "eta",
            SweepAxis::Detuning => "detuning",
            SweepAxis::Shape => "shape",
        }
    }

    /// Axes that change the target rotation itself. Sweeping them moves the
    /// prediction along by default; every other axis is held against the
    /// base prediction.
    pub fn default_prediction(self) -> PredictionMode {
        match self {
            SweepAxis::Delta | SweepAxis::Chi | SweepAxis::Eta => PredictionMode::Tracking,
            _ => PredictionMode::Fixed,
        }
    }

    /// The base schedule with this axis set to `value`.
    pub fn apply(self, base: &PulseSchedule, value: f64) -> Result<PulseSchedule, String> {
        let mut s = *base;
        match self {
            SweepAxis::Omega0 => s.omega0 = value,
            SweepAxis::Tau => s.tau = value,
            SweepAxis::T0 => s.t0 = value,
            SweepAxis::Delta => s.delta = value,
            SweepAxis::Chi => s.chi = value,
            SweepAxis::Eta => s.eta = value,
            SweepAxis::Detuning => s.detuning = value,
            SweepAxis::Shape => {
                s.shape = if value == 0.0 {
                    PulseShape::Gaussian
                } else if value == 1.0 {
                    PulseShape::SinSquared
                } else {
                    return Err(format!("shape value must be 0 (gaussian) or 1 (sin2), got {value}"));
                }
            }
        }
        Ok(s)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepAxis::ALL.into_iter().find(|a| a.name().eq_ignore_ascii_case(s)).ok_or_else(|| {
            let names: Vec<_> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
            format!("unknown sweep axis `{s}`; expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PredictionMode {
    /// Compare each point against the rotation its own schedule encodes.
    Tracking,
    /// Compare every point against the base schedule's rotation.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBase {
    pub schedule: PulseSchedule,
    pub qubit: QubitState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Fixed RK4 step; `None` derives it per point from the swept schedule.
    pub step: Option<f64>,
    pub max_norm_drift: f64,
    /// Overrides the axis default.
    pub prediction: Option<PredictionMode>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { step: None, max_norm_drift: DEFAULT_MAX_NORM_DRIFT, prediction: None }
    }
}

/// Outcome of a sweep, one entry per input value in input order. Failed
/// points carry `NaN` metrics and an error message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub fidelities: Vec<f64>,
    pub max_excited: Vec<f64>,
    pub leakage: Vec<f64>,
    pub errors: Vec<Option<String>>,
}

impl SweepResult {
    pub fn min_fidelity(&self) -> f64 {
        self.fidelities.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_succeeded(&self) -> bool {
        self.errors.iter().all(Option::is_none)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{SWEEP_HEADER}")?;
        for i in 0..self.values.len() {
            let row = [self.values[i], self.fidelities[i], self.max_excited[i], self.leakage[i]].map(fmt_f64).join(",");
            writeln!(out, "{row}")?;
        }
        Ok(())
    }
}

struct PointOutcome {
    fidelity: f64,
    max_excited: f64,
    leakage: f64,
}

fn sweep_point(
    base: &SweepBase,
    axis: SweepAxis,
    value: f64,
    mode: PredictionMode,
    opts: &SweepOptions,
) -> Result<PointOutcome, String> {
    let sched = axis.apply(&base.schedule, value)?;
    sched.validate().map_err(|e| e.to_string())?;
    let mut cfg = PropagatorConfig::for_schedule(&sched);
    if let Some(h) = opts.step {
        cfg.step = h;
    }
    cfg.max_norm_drift = opts.max_norm_drift;
    let run = run_rotation_with(&base.qubit, &sched, &cfg, &RunOptions::sparse()).map_err(|e| e.to_string())?;
    let target = match mode {
        PredictionMode::Tracking => run.prediction.state,
        PredictionMode::Fixed => predicted_final(&base.qubit, &base.schedule.rotation()).state,
    };
    let f = fidelity(&target, &run.final_state);
    Ok(PointOutcome { fidelity: f.value, max_excited: run.report.max_excited_population, leakage: f.leakage })
}

/// Runs the protocol once per value of `axis`, in parallel, and collects
/// the results in input order.
pub fn sweep(base: &SweepBase, axis: SweepAxis, values: &[f64], opts: &SweepOptions) -> SweepResult {
    let mode = opts.prediction.unwrap_or_else(|| axis.default_prediction());
    let outcomes: Vec<Result<PointOutcome, String>> =
        values.par_iter().map(|&v| sweep_point(base, axis, v, mode, opts)).collect();
    let mut result = SweepResult {
        axis,
        values: values.to_vec(),
        fidelities: Vec::with_capacity(values.len()),
        max_excited: Vec::with_capacity(values.len()),
        leakage: Vec::with_capacity(values.len()),
        errors: Vec::with_capacity(values.len()),
    };
    for o in outcomes {
        match o {
            Ok(p) => {
                result.fidelities.push(p.fidelity);
                result.max_excited.push(p.max_excited);
                result.leakage.push(p.leakage);
                result.errors.push(None);
            }
            Err(e) => {
                result.fidelities.push(f64::NAN);
                result.max_excited.push(f64::NAN);
                result.leakage.push(f64::NAN);
                result.errors.push(Some(e));
            }
        }
    }
    result
}

/// `n` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..n).map(|k| if k + 1 == n { to } else { from + (to - from) * k as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Whether `axis` keeps fidelity above [`ROBUSTNESS_THRESHOLD`] over a ±20%
/// perturbation of its base value.
pub fn is_robust(base: &SweepBase, axis: SweepAxis, points: usize, opts: &SweepOptions) -> (bool, SweepResult) {
    let centre = match axis {
        SweepAxis::Omega0 => base.schedule.omega0,
        SweepAxis::Tau => base.schedule.tau,
        SweepAxis::T0 => base.schedule.t0,
        SweepAxis::Delta => base.schedule.delta,
        SweepAxis::Chi => base.schedule.chi,
        SweepAxis::Eta => base.schedule.eta,
        SweepAxis::Detuning => base.schedule.detuning,
        SweepAxis::Shape => 0.0,
    };
    let values = if axis == SweepAxis::Shape {
        vec![0.0, 1.0]
    } else {
        linspace(centre * (1.0 - ROBUSTNESS_SPAN), centre * (1.0 + ROBUSTNESS_SPAN), points)
    };
    let opts = SweepOptions { prediction: Some(PredictionMode::Fixed), ..*opts };
    let result = sweep(base, axis, &values, &opts);
    (result.all_succeeded() && result.min_fidelity() >= ROBUSTNESS_THRESHOLD, result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticityMetric {
    /// `Ω0 τ √(2π)`
    pub pulse_area: f64,
    /// Per process, the smallest ratio of the dark-state gap to the mixing
    /// angle rate `|dθ/dt|` over the active transfer region.
    pub min_gap_to_rate: [f64; 2],
    pub adiabatic: bool,
}

/// Pulse area and local adiabaticity of `sched`.
pub fn adiabaticity_metric(sched: &PulseSchedule) -> AdiabaticityMetric {
    adiabaticity_metric_with(sched, DEFAULT_AREA_THRESHOLD)
}

pub fn adiabaticity_metric_with(sched: &PulseSchedule, area_threshold: f64) -> AdiabaticityMetric {
    let pulse_area = sched.omega0 * sched.shape.area(sched.tau);
    let mut min_gap_to_rate = [0.0; 2];
    if sched.omega0 > 0.0 {
        for (slot, p) in Process::BOTH.into_iter().enumerate() {
            min_gap_to_rate[slot] = process_min_ratio(sched, p);
        }
    }
    AdiabaticityMetric { pulse_area, min_gap_to_rate, adiabatic: pulse_area > area_threshold }
}

fn process_min_ratio(sched: &PulseSchedule, p: Process) -> f64 {
    let (a, b) = sched.process_window(p, 3.0);
    let n = 4000;
    let mut best = f64::INFINITY;
    for k in 0..=n {
        let t = a + (b - a) * k as f64 / n as f64;
        let (om, dom) = sched.pump_pair_process(t, p);
        let (o3, do3) = sched.field3_process(t, p);
        let rms2 = om * om + o3 * o3;
        if rms2 <= 0.0 {
            continue;
        }
        // tanθ = Ω/Ω3, so sin2θ = 2ΩΩ3/(Ω²+Ω3²).
        if 2.0 * om * o3 / rms2 < ACTIVE_MIXING {
            continue;
        }
        let rate = ((dom * o3 - om * do3) / rms2).abs();
        let d = sched.detuning.abs();
        let gap = 0.5 * ((d * d + rms2).sqrt() - d);
        if rate > 0.0 {
            best = best.min(gap / rate);
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// `(Ω0, 1 − F)` at each `Ω0`, with the other schedule parameters fixed.
pub fn adiabatic_convergence(base: &SweepBase, omegas: &[f64]) -> Vec<(f64, f64)> {
    let opts = SweepOptions { prediction: Some(PredictionMode::Fixed), ..SweepOptions::default() };
    let res = sweep(base, SweepAxis::Omega0, omegas, &opts);
    res.values.iter().zip(&res.fidelities).map(|(&o, &f)| (o, 1.0 - f)).collect()
}

/// Whether `values` never rise by more than `floor` from one entry to the
/// next.
pub fn is_non_increasing(values: &[f64], floor: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + floor)
}
