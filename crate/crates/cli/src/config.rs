//! TOML simulation config.
//!
//! Every numeric field takes a number or a quoted arithmetic expression
//! (`"-pi/12"`, `"cos(pi/5)"`). Qubit amplitudes additionally accept inline
//! tables `{ re = .., im = .. }` or `{ abs = .., arg = .. }`. Errors carry
//! the 1-based line and the dotted field name.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use stirap_core::analysis::fmt_f64;
use stirap_core::dynamics::{PropagatorConfig, DEFAULT_MAX_NORM_DRIFT};
use stirap_core::pulses::{PulseError, PulseSchedule, PulseShape};
use stirap_core::states::QubitState;
use stirap_core::stirap::{
    RunOptions, DEFAULT_ALIGNMENT_THRESHOLD, DEFAULT_FIDELITY_THRESHOLD, DEFAULT_INTERMEDIATE_TOLERANCE,
    DEFAULT_SAMPLE_SPACING,
};
use stirap_core::C64;
use thiserror::Error;
use toml::{Spanned, Value};

use crate::expr;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}{message}", line_prefix(*.line))]
    Syntax { line: Option<usize>, message: String },
    #[error("{}field `{field}`: {message}", line_prefix(*.line))]
    Field { line: Option<usize>, field: String, message: String },
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Io { .. } => None,
            ConfigError::Syntax { line, .. } | ConfigError::Field { line, .. } => *line,
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Field { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsConfig {
    /// `None` picks `min(τ, 1/Ω0)/50`.
    pub step: Option<f64>,
    pub max_norm_drift: f64,
    pub fidelity_threshold: f64,
    pub intermediate_tolerance: f64,
    pub alignment_threshold: f64,
    pub sample_spacing: f64,
    pub adiabatic_area_threshold: f64,
    /// Rerun at half step and report the largest amplitude change.
    pub certificate: bool,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            step: None,
            max_norm_drift: DEFAULT_MAX_NORM_DRIFT,
            fidelity_threshold: DEFAULT_FIDELITY_THRESHOLD,
            intermediate_tolerance: DEFAULT_INTERMEDIATE_TOLERANCE,
            alignment_threshold: DEFAULT_ALIGNMENT_THRESHOLD,
            sample_spacing: DEFAULT_SAMPLE_SPACING,
            adiabatic_area_threshold: stirap_core::analysis::DEFAULT_AREA_THRESHOLD,
            certificate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub trajectory: String,
    pub summary: String,
    /// Write every `sample_stride`-th trajectory sample.
    pub sample_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            trajectory: "trajectory.csv".into(),
            summary: "summary.json".into(),
            sample_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Input amplitudes as written; normalized by [`SimulationConfig::qubit`].
    pub alpha: C64,
    pub beta: C64,
    pub schedule: PulseSchedule,
    pub numerics: NumericsConfig,
    pub output: OutputConfig,
}

impl Default for SimulationConfig {
    /// Rotation by `δ = π` of `cos(π/5)|1⟩ + sin(π/5)|2⟩`.
    fn default() -> Self {
        Self {
            alpha: C64::new((PI / 5.0).cos(), 0.0),
            beta: C64::new((PI / 5.0).sin(), 0.0),
            schedule: PulseSchedule::fig2(PI),
            numerics: NumericsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl SimulationConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&src)
    }

    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| ConfigError::Syntax {
            line: e.span().map(|s| line_of(src, s.start)),
            message: e.message().trim().to_string(),
        })?;
        Reader { src }.build(raw)
    }

    pub fn qubit(&self) -> QubitState {
        QubitState::new(self.alpha, self.beta).expect("validated at parse time")
    }

    pub fn propagator(&self) -> PropagatorConfig {
        let mut cfg = PropagatorConfig::for_schedule(&self.schedule);
        if let Some(h) = self.numerics.step {
            cfg.step = h;
        }
        cfg.max_norm_drift = self.numerics.max_norm_drift;
        cfg
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            sample_spacing: Some(self.numerics.sample_spacing),
            fidelity_threshold: self.numerics.fidelity_threshold,
            intermediate_tolerance: self.numerics.intermediate_tolerance,
            alignment_threshold: self.numerics.alignment_threshold,
        }
    }

    /// Re-emits the config with every value as a plain number, so that
    /// `parse(to_toml_string())` reproduces `self` exactly.
    pub fn to_toml_string(&self) -> String {
        let s = &self.schedule;
        let n = &self.numerics;
        let o = &self.output;
        let cplx = |z: C64| format!("{{ re = {}, im = {} }}", fmt_f64(z.re), fmt_f64(z.im));
        let text = |v: &str| Value::String(v.to_string()).to_string();
        let shape = match s.shape {
            PulseShape::Gaussian => "gaussian",
            PulseShape::SinSquared => "sin_squared",
        };
        let mut out = String::new();
        let _ = writeln!(out, "[qubit]\nalpha = {}\nbeta = {}\n", cplx(self.alpha), cplx(self.beta));
        let _ = writeln!(
            out,
            "[rotation]\nchi = {}\neta = {}\ndelta = {}\n",
            fmt_f64(s.chi),
            fmt_f64(s.eta),
            fmt_f64(s.delta)
        );
        let _ = writeln!(
            out,
            "[pulses]\nomega0 = {}\ntau = {}\nt0 = {}\nbig_t = {}\ndetuning = {}\nshape = {}\n",
            fmt_f64(s.omega0),
            fmt_f64(s.tau),
            fmt_f64(s.t0),
            fmt_f64(s.big_t),
            fmt_f64(s.detuning),
            text(shape)
        );
        let step = n.step.map(fmt_f64).unwrap_or_else(|| text("auto"));
        let _ = writeln!(
            out,
            "[numerics]\nstep = {step}\nmax_norm_drift = {}\nfidelity_threshold = {}\nintermediate_tolerance = {}\n\
             alignment_threshold = {}\nsample_spacing = {}\nadiabatic_area_threshold = {}\ncertificate = {}\n",
            fmt_f64(n.max_norm_drift),
            fmt_f64(n.fidelity_threshold),
            fmt_f64(n.intermediate_tolerance),
            fmt_f64(n.alignment_threshold),
            fmt_f64(n.sample_spacing),
            fmt_f64(n.adiabatic_area_threshold),
            n.certificate
        );
        let _ = write!(
            out,
            "[output]\ndir = {}\ntrajectory = {}\nsummary = {}\nsample_stride = {}\n",
            text(&o.dir.to_string_lossy()),
            text(&o.trajectory),
            text(&o.summary),
            o.sample_stride
        );
        out
    }
}

type Field = Option<Spanned<Value>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    qubit: Option<Spanned<RawQubit>>,
    rotation: Option<Spanned<RawRotation>>,
    pulses: Option<Spanned<RawPulses>>,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQubit {
    alpha: Field,
    beta: Field,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRotation {
    chi: Field,
    eta: Field,
    delta: Field,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulses {
    omega0: Field,
    tau: Field,
    t0: Field,
    big_t: Field,
    detuning: Field,
    shape: Field,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    step: Field,
    max_norm_drift: Field,
    fidelity_threshold: Field,
    intermediate_tolerance: Field,
    alignment_threshold: Field,
    sample_spacing: Field,
    adiabatic_area_threshold: Field,
    certificate: Field,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Field,
    trajectory: Field,
    summary: Field,
    sample_stride: Field,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

struct Reader<'a> {
    src: &'a str,
}

/// Where each field was read, for errors raised after parsing.
type Lines = BTreeMap<&'static str, usize>;

impl Reader<'_> {
    fn err(&self, span: Option<Range<usize>>, field: &str, message: impl fmt::Display) -> ConfigError {
        ConfigError::Field {
            line: span.map(|s| line_of(self.src, s.start)),
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    fn section<'r, T>(&self, sec: &'r Option<Spanned<T>>, name: &str) -> Result<(&'r T, Range<usize>), ConfigError> {
        sec.as_ref().map(|s| (s.get_ref(), s.span())).ok_or_else(|| self.err(None, name, "missing section"))
    }

    fn required<'r>(
        &self,
        f: &'r Field,
        name: &'static str,
        section: &Range<usize>,
        lines: &mut Lines,
    ) -> Result<&'r Spanned<Value>, ConfigError> {
        let v = f.as_ref().ok_or_else(|| self.err(Some(section.clone()), name, "missing required field"))?;
        lines.insert(name, line_of(self.src, v.span().start));
        Ok(v)
    }

    fn number(&self, v: &Spanned<Value>, name: &str) -> Result<f64, ConfigError> {
        scalar(v.get_ref()).map_err(|m| self.err(Some(v.span()), name, m))
    }

    fn req_number(
        &self,
        f: &Field,
        name: &'static str,
        section: &Range<usize>,
        lines: &mut Lines,
    ) -> Result<f64, ConfigError> {
        let v = self.required(f, name, section, lines)?;
        self.number(v, name)
    }

    fn opt_number(&self, f: &Field, name: &'static str, default: f64, lines: &mut Lines) -> Result<f64, ConfigError> {
        match f {
            Some(v) => {
                lines.insert(name, line_of(self.src, v.span().start));
                self.number(v, name)
            }
            None => Ok(default),
        }
    }

    fn positive(&self, f: &Field, name: &'static str, default: f64, lines: &mut Lines) -> Result<f64, ConfigError> {
        let x = self.opt_number(f, name, default, lines)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.err(f.as_ref().map(|v| v.span()), name, format_args!("must be positive, got {x}")))
        }
    }

    fn opt_string(&self, f: &Field, name: &str, default: &str) -> Result<String, ConfigError> {
        match f {
            None => Ok(default.to_string()),
            Some(v) => match v.get_ref() {
                Value::String(s) if !s.is_empty() => Ok(s.clone()),
                Value::String(_) => Err(self.err(Some(v.span()), name, "must not be empty")),
                other => {
                    Err(self.err(Some(v.span()), name, format_args!("expected a string, found {}", other.type_str())))
                }
            },
        }
    }

    fn amplitude(&self, v: &Spanned<Value>, name: &str) -> Result<C64, ConfigError> {
        let fail = |m: String| self.err(Some(v.span()), name, m);
        let Value::Table(t) = v.get_ref() else {
            return scalar(v.get_ref()).map(|x| C64::new(x, 0.0)).map_err(fail);
        };
        let get = |k: &str| t.get(k).map(|x| scalar(x).map_err(|m| fail(format!("{k}: {m}")))).transpose();
        if let Some(bad) = t.keys().find(|k| !["re", "im", "abs", "arg"].contains(&k.as_str())) {
            return Err(fail(format!("unknown key `{bad}`; use {{ re, im }} or {{ abs, arg }}")));
        }
        let cart = t.contains_key("re") || t.contains_key("im");
        let polar = t.contains_key("abs") || t.contains_key("arg");
        match (cart, polar) {
            (true, false) => Ok(C64::new(get("re")?.unwrap_or(0.0), get("im")?.unwrap_or(0.0))),
            (false, true) => {
                let r = get("abs")?.ok_or_else(|| fail("polar form needs `abs`".into()))?;
                if r < 0.0 {
                    return Err(fail(format!("abs must be non-negative, got {r}")));
                }
                Ok(C64::from_polar(r, get("arg")?.unwrap_or(0.0)))
            }
            (true, true) => Err(fail("mixes { re, im } with { abs, arg }".into())),
            (false, false) => Err(fail("empty amplitude table".into())),
        }
    }

    fn build(&self, raw: RawConfig) -> Result<SimulationConfig, ConfigError> {
        let mut lines = Lines::new();

        let (q, q_span) = self.section(&raw.qubit, "qubit")?;
        let alpha_v = self.required(&q.alpha, "qubit.alpha", &q_span, &mut lines)?;
        let beta_v = self.required(&q.beta, "qubit.beta", &q_span, &mut lines)?;
        let alpha = self.amplitude(alpha_v, "qubit.alpha")?;
        let beta = self.amplitude(beta_v, "qubit.beta")?;
        if let Err(e) = QubitState::new(alpha, beta) {
            return Err(self.err(Some(alpha_v.span()), "qubit", e));
        }

        let (r, r_span) = self.section(&raw.rotation, "rotation")?;
        let chi = self.req_number(&r.chi, "rotation.chi", &r_span, &mut lines)?;
        let eta = self.req_number(&r.eta, "rotation.eta", &r_span, &mut lines)?;
        let delta = self.req_number(&r.delta, "rotation.delta", &r_span, &mut lines)?;

        let (p, p_span) = self.section(&raw.pulses, "pulses")?;
        let omega0 = self.req_number(&p.omega0, "pulses.omega0", &p_span, &mut lines)?;
        let tau = self.req_number(&p.tau, "pulses.tau", &p_span, &mut lines)?;
        let t0 = self.req_number(&p.t0, "pulses.t0", &p_span, &mut lines)?;
        let big_t = self.req_number(&p.big_t, "pulses.big_t", &p_span, &mut lines)?;
        let detuning = self.opt_number(&p.detuning, "pulses.detuning", 0.0, &mut lines)?;
        let shape = match &p.shape {
            None => PulseShape::Gaussian,
            Some(v) => match v.get_ref() {
                Value::String(s) if s == "gaussian" => PulseShape::Gaussian,
                Value::String(s) if s == "sin_squared" => PulseShape::SinSquared,
                other => {
                    return Err(self.err(
                        Some(v.span()),
                        "pulses.shape",
                        format_args!("expected \"gaussian\" or \"sin_squared\", found {other}"),
                    ))
                }
            },
        };
        let schedule = PulseSchedule { omega0, tau, t0, big_t, chi, eta, delta, detuning, shape };
        schedule.validate().map_err(|e| {
            let field = match e {
                PulseError::NonPositiveWidth(_) => "pulses.tau",
                PulseError::NonPositiveOffset(_) => "pulses.t0",
                PulseError::UnresolvedProcesses { .. } => "pulses.big_t",
                PulseError::InvalidAmplitude(_) => "pulses.omega0",
                PulseError::NonFinite { name } => match name {
                    "chi" => "rotation.chi",
                    "eta" => "rotation.eta",
                    "delta" => "rotation.delta",
                    "detuning" => "pulses.detuning",
                    _ => "pulses.big_t",
                },
            };
            ConfigError::Field { line: lines.get(field).copied(), field: field.into(), message: e.to_string() }
        })?;

        let n = &raw.numerics;
        let defaults = NumericsConfig::default();
        let step = match &n.step {
            None => None,
            Some(v) if matches!(v.get_ref(), Value::String(s) if s == "auto") => None,
            Some(_) => Some(self.positive(&n.step, "numerics.step", 0.0, &mut lines)?),
        };
        let fidelity_threshold = self.opt_number(
            &n.fidelity_threshold,
            "numerics.fidelity_threshold",
            defaults.fidelity_threshold,
            &mut lines,
        )?;
        if !(0.0..=1.0).contains(&fidelity_threshold) {
            return Err(self.err(
                n.fidelity_threshold.as_ref().map(|v| v.span()),
                "numerics.fidelity_threshold",
                format_args!("must lie in [0, 1], got {fidelity_threshold}"),
            ));
        }
        let certificate = match &n.certificate {
            None => defaults.certificate,
            Some(v) => match v.get_ref() {
                Value::Boolean(b) => *b,
                other => {
                    return Err(self.err(
                        Some(v.span()),
                        "numerics.certificate",
                        format_args!("expected true or false, found {}", other.type_str()),
                    ))
                }
            },
        };
        let numerics = NumericsConfig {
            step,
            max_norm_drift: self.positive(
                &n.max_norm_drift,
                "numerics.max_norm_drift",
                defaults.max_norm_drift,
                &mut lines,
            )?,
            fidelity_threshold,
            intermediate_tolerance: self.positive(
                &n.intermediate_tolerance,
                "numerics.intermediate_tolerance",
                defaults.intermediate_tolerance,
                &mut lines,
            )?,
            alignment_threshold: self.positive(
                &n.alignment_threshold,
                "numerics.alignment_threshold",
                defaults.alignment_threshold,
                &mut lines,
            )?,
            sample_spacing: self.positive(
                &n.sample_spacing,
                "numerics.sample_spacing",
                defaults.sample_spacing,
                &mut lines,
            )?,
            adiabatic_area_threshold: self.positive(
                &n.adiabatic_area_threshold,
                "numerics.adiabatic_area_threshold",
                defaults.adiabatic_area_threshold,
                &mut lines,
            )?,
            certificate,
        };

        let o = &raw.output;
        let od = OutputConfig::default();
        let sample_stride = match &o.sample_stride {
            None => od.sample_stride,
            Some(v) => match v.get_ref() {
                Value::Integer(k) if *k >= 1 => *k as usize,
                other => {
                    return Err(self.err(
                        Some(v.span()),
                        "output.sample_stride",
                        format_args!("expected a positive integer, found {other}"),
                    ))
                }
            },
        };
        let output = OutputConfig {
            dir: PathBuf::from(self.opt_string(&o.dir, "output.dir", &od.dir.to_string_lossy())?),
            trajectory: self.opt_string(&o.trajectory, "output.trajectory", &od.trajectory)?,
            summary: self.opt_string(&o.summary, "output.summary", &od.summary)?,
            sample_stride,
        };

        Ok(SimulationConfig { alpha, beta, schedule, numerics, output })
    }
}

/// A number or an expression string.
fn scalar(v: &Value) -> Result<f64, String> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(x) if x.is_finite() => Ok(*x),
        Value::Float(x) => Err(format!("must be finite, got {x}")),
        Value::String(s) => expr::eval(s).map_err(|e| format!("in expression \"{s}\": {e}")),
        other => Err(format!("expected a number or expression, found {}", other.type_str())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHIPPED: &str = include_str!("../../../configs/fig2_rotation.toml");

    #[test]
    fn shipped_config_is_default() {
        let cfg = SimulationConfig::parse(SHIPPED).unwrap();
        let def = SimulationConfig::default();
        assert_eq!(
            (cfg.alpha, cfg.beta, cfg.schedule, cfg.numerics),
            (def.alpha, def.beta, def.schedule, def.numerics)
        );
        assert_eq!(cfg.output.dir, PathBuf::from("out/fig2_rotation"));
    }

    #[test]
    fn emitted_default_round_trips() {
        let cfg = SimulationConfig::default();
        assert_eq!(SimulationConfig::parse(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn amplitude_forms() {
        let base = |a: &str| {
            format!(
                "[qubit]\nalpha = {a}\nbeta = 0\n[rotation]\nchi = 0\neta = 0\ndelta = 0\n\
                 [pulses]\nomega0 = 1\ntau = 1\nt0 = 1\nbig_t = 10\n"
            )
        };
        let alpha = |a: &str| SimulationConfig::parse(&base(a)).unwrap().alpha;
        assert_eq!(alpha("2"), C64::new(2.0, 0.0));
        assert_eq!(alpha("\"sqrt(2)\""), C64::new(2f64.sqrt(), 0.0));
        assert_eq!(alpha("{ re = 0.5, im = \"-1/2\" }"), C64::new(0.5, -0.5));
        assert_eq!(alpha("{ abs = 1, arg = \"pi/2\" }"), C64::from_polar(1.0, PI / 2.0));
        for bad in ["{ re = 1, arg = 2 }", "{ x = 1 }", "{}", "{ abs = -1 }", "true"] {
            let err = SimulationConfig::parse(&base(bad)).unwrap_err();
            assert_eq!(err.field(), Some("qubit.alpha"), "{bad}: {err}");
            assert_eq!(err.line(), Some(2), "{bad}: {err}");
        }
    }
}
