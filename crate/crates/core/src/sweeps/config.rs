//! The JSON run document and its resolution into model objects.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Backend, PropagatorConfig, Stepper};
use crate::error::{Error, Result};
use crate::fermi::FermiEnsemble;
use crate::hilbert::{DenseOperator, SpaceKind};
use crate::linalg::C64;
use crate::protocols::{harmonic_system, CouplingSchedule, EngineParams, ExternalSystem, GapDirection, Statistics};

/// Parameter names accepted by sweep axes and `--set`.
pub const PARAMETERS: &[&str] = &[
    "n",
    "omega0",
    "delta",
    "delta_over_omega0",
    "v",
    "period",
    "beta_c_e0",
    "beta_h_ehalf",
    "g",
    "t1_over_half_period",
    "delta_t",
    "alpha_t",
    "omega_t",
    "dim",
    "omega_trap",
    "beta_com_omega",
    "dt",
    "truncation_dim",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub n: u32,
    pub omega0: f64,
    pub delta: f64,
    pub v: f64,
    pub period: f64,
    pub beta_c_e0: f64,
    pub beta_h_ehalf: f64,
    pub statistics: Statistics,
    pub gap_direction: GapDirection,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection {
            n: 1,
            omega0: 1.0,
            delta: 0.0,
            v: 0.1,
            period: 20.0,
            beta_c_e0: 2.0,
            beta_h_ehalf: 0.25,
            statistics: Statistics::Bose,
            gap_direction: GapDirection::Increasing,
        }
    }
}

/// Coupling profile with times given relative to the period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSection {
    /// Kick at t1 = t1_over_half_period · T/2.
    Impulse { g: f64, t1_over_half_period: f64 },
    /// Plateau schedule with switching rate α = alpha_t / T.
    SmoothPlateau { g: f64, delta_t: f64, alpha_t: f64 },
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl Default for CouplingSection {
    fn default() -> Self {
        CouplingSection::Impulse {
            g: 0.01,
            t1_over_half_period: 0.35,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSection {
    /// Oscillator of frequency ω = omega_t / T truncated to `dim` levels.
    Harmonic { omega_t: f64, dim: usize },
    /// Energies ε_0 = 0 < ε_1 ≤ … and V_S as rows of [re, im] pairs.
    Custom { energies: Vec<f64>, v_s: Vec<Vec<[f64; 2]>> },
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection::Harmonic {
            omega_t: 2.0 * std::f64::consts::PI * 0.05,
            dim: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FermiSection {
    pub omega_trap: f64,
    pub beta_com_omega: f64,
    /// Trap levels; chosen from the tail bound when absent.
    pub level_count: Option<usize>,
}

impl Default for FermiSection {
    fn default() -> Self {
        FermiSection {
            omega_trap: 1.0,
            beta_com_omega: 4.0,
            level_count: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    #[default]
    Analytic,
    Numerical,
    Both,
}

impl Evaluation {
    pub fn analytic(self) -> bool {
        matches!(self, Evaluation::Analytic | Evaluation::Both)
    }

    pub fn numerical(self) -> bool {
        matches!(self, Evaluation::Numerical | Evaluation::Both)
    }
}

impl std::str::FromStr for Evaluation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Evaluation::Analytic),
            "numerical" => Ok(Evaluation::Numerical),
            "both" => Ok(Evaluation::Both),
            other => Err(Error::Config(format!("unknown method {other:?} (analytic, numerical, both)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

/// One sweep dimension: explicit values or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<LinearRange>,
}

impl Axis {
    pub fn values(name: &str, values: Vec<f64>) -> Self {
        Axis {
            name: name.into(),
            values: Some(values),
            range: None,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        match (&self.values, &self.range) {
            (Some(v), None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(r)) if r.steps >= 1 => Ok((0..r.steps)
                .map(|k| {
                    if r.steps == 1 {
                        r.start
                    } else {
                        r.start + (r.stop - r.start) * k as f64 / (r.steps - 1) as f64
                    }
                })
                .collect()),
            _ => Err(Error::Config(format!(
                "axis {:?} needs exactly one of a nonempty `values` list or a `range` with steps ≥ 1",
                self.name
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub method: Evaluation,
    pub seed: u64,
}

/// The whole run document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub engine: EngineSection,
    pub coupling: CouplingSection,
    pub system: SystemSection,
    pub fermi: FermiSection,
    pub propagator: PropagatorConfig,
    pub sweep: SweepSpec,
}

/// Resolved model objects for one cell.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: EngineParams,
    pub schedule: CouplingSchedule,
    pub system: ExternalSystem,
    pub propagator: PropagatorConfig,
}

impl Config {
    /// Parses a run document or a manifest written by a previous run.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let cfg: Config = match value.get("config") {
            Some(inner) if value.get("tool").is_some() => {
                serde_json::from_value(inner.clone()).map_err(|e| Error::Config(format!("manifest config: {e}")))?
            }
            _ => serde_json::from_str(text)
                .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks axis names and point lists.
    pub fn validate(&self) -> Result<()> {
        for axis in &self.sweep.axes {
            if !PARAMETERS.contains(&axis.name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown sweep parameter {:?}; expected one of {}",
                    axis.name,
                    PARAMETERS.join(", ")
                )));
            }
            let mut probe = self.clone();
            for x in axis.points()? {
                probe.set(&axis.name, x)?;
            }
        }
        let mut names: Vec<&str> = self.sweep.axes.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("a parameter appears on two sweep axes".into()));
        }
        Ok(())
    }

    /// Sets a numeric parameter by name.
    pub fn set(&mut self, name: &str, x: f64) -> Result<()> {
        let count = |x: f64| -> Result<usize> {
            if x.fract() == 0.0 && (0.0..1e9).contains(&x) {
                Ok(x as usize)
            } else {
                Err(Error::Config(format!("{name} must be a nonnegative integer, got {x}")))
            }
        };
        let e = &mut self.engine;
        match name {
            "n" => e.n = count(x)? as u32,
            "omega0" => e.omega0 = x,
            "delta" => e.delta = x,
            "delta_over_omega0" => e.delta = x * e.omega0,
            "v" => e.v = x,
            "period" => e.period = x,
            "beta_c_e0" => e.beta_c_e0 = x,
            "beta_h_ehalf" => e.beta_h_ehalf = x,
            "g" => match &mut self.coupling {
                CouplingSection::Impulse { g, .. } | CouplingSection::SmoothPlateau { g, .. } => *g = x,
                CouplingSection::Sampled { .. } => {
                    return Err(Error::Config("g cannot be set on a sampled schedule".into()));
                }
            },
            "t1_over_half_period" => match &mut self.coupling {
                CouplingSection::Impulse { t1_over_half_period, .. } => *t1_over_half_period = x,
                _ => return Err(Error::Config("t1_over_half_period needs an impulse schedule".into())),
            },
            "delta_t" | "alpha_t" => match &mut self.coupling {
                CouplingSection::SmoothPlateau { delta_t, alpha_t, .. } => {
                    if name == "delta_t" {
                        *delta_t = x
                    } else {
                        *alpha_t = x
                    }
                }
                _ => return Err(Error::Config(format!("{name} needs a smooth_plateau schedule"))),
            },
            "omega_t" | "dim" => match &mut self.system {
                SystemSection::Harmonic { omega_t, dim } => {
                    if name == "omega_t" {
                        *omega_t = x
                    } else {
                        *dim = count(x)?
                    }
                }
                SystemSection::Custom { .. } => return Err(Error::Config(format!("{name} needs a harmonic system"))),
            },
            "omega_trap" => self.fermi.omega_trap = x,
            "beta_com_omega" => self.fermi.beta_com_omega = x,
            "dt" => self.propagator.dt = Some(x),
            "truncation_dim" => self.propagator.truncation_dim = Some(count(x)?),
            other => {
                return Err(Error::Config(format!(
                    "unknown parameter {other:?}; expected one of {}",
                    PARAMETERS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// `name=value` assignment; a few names take words instead of numbers.
    pub fn assign(&mut self, spec: &str) -> Result<()> {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected name=value, got {spec:?}")))?;
        let (name, value) = (name.trim(), value.trim());
        let word = |v: &str| serde_json::Value::String(v.to_string());
        let bad = |e: serde_json::Error| Error::Config(format!("{name}: {e}"));
        match name {
            "statistics" => self.engine.statistics = serde_json::from_value(word(value)).map_err(bad)?,
            "gap_direction" => self.engine.gap_direction = serde_json::from_value(word(value)).map_err(bad)?,
            "stepper" => self.propagator.stepper = serde_json::from_value::<Stepper>(word(value)).map_err(bad)?,
            "backend" => self.propagator.backend = serde_json::from_value::<Backend>(word(value)).map_err(bad)?,
            "method" => self.sweep.method = value.parse()?,
            _ => {
                let x: f64 = value
                    .parse()
                    .map_err(|_| Error::Config(format!("{name}: {value:?} is not a number")))?;
                self.set(name, x)?;
            }
        }
        Ok(())
    }

    pub fn engine_params(&self) -> Result<EngineParams> {
        let e = &self.engine;
        let mut p = EngineParams::with_bath_products(
            e.n,
            e.omega0,
            e.delta,
            e.v,
            e.period,
            e.beta_c_e0,
            e.beta_h_ehalf,
            e.statistics,
        )?;
        p.gap_direction = e.gap_direction;
        p.set_bath_products(e.beta_c_e0, e.beta_h_ehalf)?;
        p.validate()?;
        Ok(p)
    }

    pub fn schedule(&self) -> Result<CouplingSchedule> {
        let period = self.engine.period;
        let s = match &self.coupling {
            CouplingSection::Impulse { g, t1_over_half_period } => CouplingSchedule::Impulse {
                g: *g,
                t1: t1_over_half_period * 0.5 * period,
            },
            CouplingSection::SmoothPlateau { g, delta_t, alpha_t } => {
                CouplingSchedule::smooth_plateau(*g, *delta_t, alpha_t / period, period)?
            }
            CouplingSection::Sampled { times, values } => CouplingSchedule::sampled(times.clone(), values.clone())?,
        };
        s.validate(period)?;
        Ok(s)
    }

    pub fn system(&self) -> Result<ExternalSystem> {
        match &self.system {
            SystemSection::Harmonic { omega_t, dim } => harmonic_system(omega_t / self.engine.period, *dim),
            SystemSection::Custom { energies, v_s } => {
                let d = energies.len();
                if v_s.len() != d || v_s.iter().any(|r| r.len() != d) {
                    return Err(Error::Config(format!("v_s must be {d} × {d}")));
                }
                let m = Array2::from_shape_fn((d, d), |(i, j)| C64::new(v_s[i][j][0], v_s[i][j][1]));
                ExternalSystem::new(energies.clone(), DenseOperator::new(SpaceKind::Generic(d), m)?, "custom")
            }
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario {
            params: self.engine_params()?,
            schedule: self.schedule()?,
            system: self.system()?,
            propagator: self.propagator.clone(),
        })
    }

    /// Fermionic ensemble of `engine.n` atoms with single-atom internal
    /// parameters from the engine section.
    pub fn fermi_ensemble(&self) -> Result<FermiEnsemble> {
        let mut p = self.engine_params()?;
        p.n = 1;
        let f = &self.fermi;
        let beta = f.beta_com_omega / f.omega_trap;
        let mut ens = FermiEnsemble::new(self.engine.n, f.omega_trap, beta, p)?;
        if let Some(l) = f.level_count {
            ens.level_count = l;
            ens.validate()?;
        }
        Ok(ens)
    }
}
