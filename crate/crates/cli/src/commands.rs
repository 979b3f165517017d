//! `simulate`, `sweep` and `verify`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use stirap_core::analysis::{
    adiabaticity_metric_with, linspace, sweep, write_trajectory_csv, AdiabaticityMetric, SweepAxis, SweepBase,
    SweepOptions, SweepResult,
};
use stirap_core::dynamics::convergence_certificate;
use stirap_core::states::embed;
use stirap_core::stirap::{run_rotation_with, RotationReport};
use stirap_core::verification::{run_all, CriterionReport};
use stirap_core::C64;
use thiserror::Error;

use crate::config::{ConfigError, SimulationConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl CliError {
    /// 2 for bad input, 1 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Argument(_) => 2,
            CliError::Io { .. } | CliError::Simulation(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    #[serde(flatten)]
    pub report: RotationReport,
    /// `|⟨q|ψ_f⟩|²` against the untouched input.
    pub initial_overlap: f64,
    pub predicted_final: [C64; 2],
    pub simulated_final: [C64; 4],
    pub adiabaticity: AdiabaticityMetric,
    /// Largest final-amplitude change under step halving.
    pub convergence_certificate: Option<f64>,
    pub step: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub trajectory_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: Summary,
}

fn create<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err)
}

/// Runs one rotation and writes the trajectory CSV and JSON summary.
pub fn cmd_simulate(config: &Path, out_dir: Option<&Path>) -> Result<SimulateOutput, CliError> {
    let cfg = SimulationConfig::load(config)?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let q = cfg.qubit();
    let sched = cfg.schedule;
    let prop = cfg.propagator();

    let run =
        run_rotation_with(&q, &sched, &prop, &cfg.run_options()).map_err(|e| CliError::Simulation(e.to_string()))?;
    let certificate = if cfg.numerics.certificate {
        let (a, b) = sched.window();
        let c = convergence_certificate(&embed(&q), &sched, &prop, a, b)
            .map_err(|e| CliError::Simulation(e.to_string()))?;
        Some(c)
    } else {
        None
    };
    let initial = embed(&q).inner(&run.final_state).norm_sqr();
    let summary = Summary {
        report: run.report.clone(),
        initial_overlap: initial,
        predicted_final: run.prediction.state.amplitudes(),
        simulated_final: run.final_state.0,
        adiabaticity: adiabaticity_metric_with(&sched, cfg.numerics.adiabatic_area_threshold),
        convergence_certificate: certificate,
        step: prop.step,
        steps: run.trajectory.steps(),
    };

    let trajectory_path = dir.join(&cfg.output.trajectory);
    let summary_path = dir.join(&cfg.output.summary);
    create(&trajectory_path, |w| write_trajectory_csv(&run.trajectory, cfg.output.sample_stride, w))?;
    create(&summary_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &summary).map_err(io::Error::from)?;
        writeln!(w)
    })?;
    Ok(SimulateOutput { trajectory_path, summary_path, summary })
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub path: PathBuf,
    pub result: SweepResult,
}

/// Sweeps `axis` over `points` evenly spaced values and writes
/// `sweep_<axis>.csv`. Points that fail are reported in `result.errors`
/// and appear in the CSV as NaN rows.
pub fn cmd_sweep(
    config: &Path,
    axis: &str,
    from: f64,
    to: f64,
    points: usize,
    out_dir: Option<&Path>,
) -> Result<SweepOutput, CliError> {
    let cfg = SimulationConfig::load(config)?;
    let axis: SweepAxis = axis.parse().map_err(CliError::Argument)?;
    if points == 0 {
        return Err(CliError::Argument("--points must be at least 1".into()));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(CliError::Argument(format!("range bounds must be finite, got {from} .. {to}")));
    }
    let base = SweepBase { schedule: cfg.schedule, qubit: cfg.qubit() };
    let opts = SweepOptions { step: cfg.numerics.step, max_norm_drift: cfg.numerics.max_norm_drift, prediction: None };
    let result = sweep(&base, axis, &linspace(from, to, points), &opts);

    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let path = dir.join(format!("sweep_{}.csv", axis.name()));
    create(&path, |w| result.write_csv(w))?;
    Ok(SweepOutput { path, result })
}

/// The acceptance table; `quick` trims the random-tuple check.
pub fn cmd_verify(quick: bool) -> Vec<CriterionReport> {
    run_all(quick)
}
