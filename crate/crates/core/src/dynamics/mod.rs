//! Exact numerical propagation of engine ⊗ system through the Otto cycle.
//!
//! Composite states are ordered engine ⊗ system (index e·d_S + s). The default
//! stepper never forms the composite density matrix: the engine starts in a
//! Gibbs mixture, so the state is kept as a weighted ensemble of pure states
//! per engine block, written in the eigenbasis of V_R ⊗ V_S where the coupling
//! is diagonal. Each step is a Strang splitting of the midpoint exponential.

mod dense;
mod engine;
mod split;
mod witness;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use dense::{apply_impulse, partial_trace_engine, partial_trace_system, run_cycle_dense, thermal_reset};
pub use engine::Backend;
pub use witness::adiabaticity_witness;

use crate::analytics::WorkRecord;
use crate::error::{Error, Result};
use crate::hilbert::QuantumState;
use crate::protocols::{harmonic_system, CouplingSchedule, EngineParams, ExternalSystem, Statistics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    /// Strang splitting of exp(−iH(t+dt/2)dt) into free and coupling factors.
    #[default]
    SplitMidpoint,
    /// Dense exp(−iH(t+dt/2)dt) on the composite density matrix.
    ExponentialMidpoint,
    /// Dense second-order Magnus step with two Gauss points.
    Magnus2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagatorConfig {
    pub stepper: Stepper,
    /// Largest step; `None` applies the default rule of [`max_step`].
    pub dt: Option<f64>,
    pub unitarity_tol: f64,
    pub leakage_tol: f64,
    /// Rebuilds a truncated-oscillator system with this many levels.
    pub truncation_dim: Option<usize>,
    pub backend: Backend,
    /// Ensemble members lighter than this are dropped (their weight is
    /// reported as `pruned_weight`).
    pub prune_tol: f64,
    pub record_trace: bool,
    pub witness: bool,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            stepper: Stepper::SplitMidpoint,
            dt: None,
            unitarity_tol: 1e-10,
            leakage_tol: 1e-6,
            truncation_dim: None,
            backend: Backend::Auto,
            prune_tol: 1e-15,
            record_trace: false,
            witness: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest norm (or U†U) defect accumulated over one stroke.
    pub unitarity_drift: f64,
    /// |tr ρ − 1| at the end of the cycle, pruned weight included.
    pub trace_error: f64,
    pub hermiticity_error: f64,
    /// Largest population of the top two levels seen at a checkpoint.
    pub truncation_leakage: f64,
    pub adiabaticity_witness: Option<f64>,
    pub pruned_weight: f64,
    pub dt: f64,
    /// Steps taken with the coupling on.
    pub coupled_steps: usize,
    pub backend: Backend,
    pub stepper: Stepper,
}

impl Diagnostics {
    fn new(dt: f64, backend: Backend, stepper: Stepper) -> Self {
        Diagnostics {
            unitarity_drift: 0.0,
            trace_error: 0.0,
            hermiticity_error: 0.0,
            truncation_leakage: 0.0,
            adiabaticity_witness: None,
            pruned_weight: 0.0,
            dt,
            coupled_steps: 0,
            backend,
            stepper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub tr_rho: f64,
    pub leakage: f64,
    pub h_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    pub work: WorkRecord,
    /// Reduced state of the external system at t = T.
    pub final_state: QuantumState,
    /// ⟨H_S⟩ at the end of each stroke.
    pub per_stroke_energies: Vec<f64>,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
}

/// Default step: min(0.01/E_max, 0.01/ε_max) with E_max = N·max_t E_t.
pub fn max_step(params: &EngineParams, system: &ExternalSystem, config: &PropagatorConfig) -> Result<f64> {
    if let Some(dt) = config.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        return Ok(dt);
    }
    let e_max = params.n as f64 * params.max_gap()?;
    let eps_max = system.energies.iter().copied().fold(0.0_f64, f64::max);
    let mut dt = 0.01 / e_max;
    if eps_max > 0.0 {
        dt = dt.min(0.01 / eps_max);
    }
    Ok(dt)
}

fn resolve_system(system: &ExternalSystem, config: &PropagatorConfig) -> Result<ExternalSystem> {
    match config.truncation_dim {
        None => Ok(system.clone()),
        Some(d) if system.is_truncated_oscillator() => harmonic_system(system.energies[1], d),
        Some(_) => Err(Error::Config("truncation_dim applies only to oscillator systems".into())),
    }
}

/// Runs one full cycle and measures the energy deposited in the system.
pub fn run_cycle(
    params: &EngineParams,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
    statistics: Statistics,
    config: &PropagatorConfig,
) -> Result<CycleResult> {
    params.validate()?;
    schedule.validate(params.period)?;
    for tol in [config.unitarity_tol, config.leakage_tol] {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Config(format!("tolerances must be positive, got {tol}")));
        }
    }
    if !(config.prune_tol >= 0.0 && config.prune_tol < 1e-6) {
        return Err(Error::Config(format!("prune_tol must lie in [0, 1e-6), got {}", config.prune_tol)));
    }
    let system = resolve_system(system, config)?;
    let mut result = match config.stepper {
        Stepper::SplitMidpoint => split::run(params, schedule, &system, statistics, config)?,
        Stepper::ExponentialMidpoint | Stepper::Magnus2 => {
            dense::run(params, schedule, &system, statistics, config)?
        }
    };
    if config.witness {
        result.diagnostics.adiabaticity_witness = Some(adiabaticity_witness(params, config)?);
    }
    let d = &result.diagnostics;
    if d.unitarity_drift > config.unitarity_tol {
        return Err(Error::NumericalFailure(format!(
            "unitarity drift {:.3e} exceeds {:.1e} (dt = {:.3e}); reduce dt",
            d.unitarity_drift, config.unitarity_tol, d.dt
        )));
    }
    if system.is_truncated_oscillator() && d.truncation_leakage > config.leakage_tol {
        return Err(Error::TruncationLeakage {
            leakage: d.truncation_leakage,
            tolerance: config.leakage_tol,
            dim: system.dim(),
        });
    }
    Ok(result)
}

/// Writes `t, tr_rho, leakage, <H_S>` rows.
pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "t,tr_rho,leakage,h_s")?;
    for r in rows {
        writeln!(f, "{:.16e},{:.16e},{:.16e},{:.16e}", r.t, r.tr_rho, r.leakage, r.h_s)?;
    }
    f.flush()?;
    Ok(())
}

/// Work record and final reduced state from σ_S(T).
fn finish(
    system: &ExternalSystem,
    sigma: ndarray::Array2<crate::linalg::C64>,
    per_stroke_energies: Vec<f64>,
    mut diagnostics: Diagnostics,
    trace: Vec<TraceRow>,
    statistics: Statistics,
) -> Result<CycleResult> {
    let tr: f64 = sigma.diag().iter().map(|z| z.re).sum();
    diagnostics.trace_error = diagnostics.trace_error.max((tr - 1.0).abs());
    let p = (1..system.dim()).map(|i| (i, sigma[[i, i]].re)).collect();
    let work = WorkRecord::from_probabilities(&system.energies, p, statistics, crate::analytics::Method::ExactNumerical)?;
    let space = system.v_s.space.clone();
    Ok(CycleResult {
        work,
        final_state: QuantumState { space, rho: sigma },
        per_stroke_energies,
        diagnostics,
        trace,
    })
}

/// Population of the two highest levels.
fn top_leakage(pops: &[f64]) -> f64 {
    pops.iter().rev().take(2).sum()
}
