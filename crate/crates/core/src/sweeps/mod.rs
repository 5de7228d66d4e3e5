//! Configuration ingestion, Cartesian parameter sweeps, figure presets and
//! the CSV/JSON outputs behind the command line tool.

pub mod config;
pub mod figures;
pub mod verify;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{Axis, Config, CouplingSection, Evaluation, LinearRange, Scenario, SweepSpec, SystemSection};
pub use figures::{run_figure, FigureId, FigureOutput};

use crate::analytics::compare;
use crate::analytics::region::{enhancement_region, RegionSpec};
use crate::dynamics::{run_cycle, write_trace_csv, CycleResult, TraceRow};
use crate::error::{Error, Result};
use crate::fermi::{f_n_asymptotic, fermi_outcoupled_work, fermi_work};
use crate::protocols::Statistics;

pub const MAX_ANALYTIC_CELLS: usize = 100_000;
pub const MAX_NUMERICAL_CELLS: usize = 1_000;
/// Fraction of failed cells above which a sweep counts as failed.
pub const FAILED_FRACTION: f64 = 0.01;

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Num(x) if x.is_nan() => write!(f, "nan"),
            Field::Num(x) if x.is_infinite() => write!(f, "{}", if *x > 0.0 { "inf" } else { "-inf" }),
            Field::Num(x) => write!(f, "{x:.16e}"),
            Field::Int(i) => write!(f, "{i}"),
            Field::Text(s) => write!(f, "{}", s.replace([',', '\n', '"'], ";")),
            Field::Empty => Ok(()),
        }
    }
}

impl Field {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Field::Num(x) => Some(*x),
            Field::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

/// Rows in deterministic order plus the per-run extras.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Field>>,
    pub cells: usize,
    pub failed: usize,
    pub trace: Vec<TraceRow>,
}

impl Dataset {
    pub fn new(header: &[&str]) -> Self {
        Dataset {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|f| f.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric value of `name` in `row`.
    pub fn num(&self, row: usize, name: &str) -> Option<f64> {
        self.rows.get(row)?.get(self.column(name)?)?.as_f64()
    }

    pub fn failed_too_many(&self) -> bool {
        self.failed as f64 > FAILED_FRACTION * self.cells.max(1) as f64
    }
}

/// A named pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Assertion {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Config,
    pub threads: usize,
    pub cells: usize,
    pub failed: usize,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<Assertion>,
}

impl Manifest {
    pub fn new(command: &str, config: &Config, data: &Dataset, started: Instant) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            threads: rayon::current_num_threads(),
            cells: data.cells,
            failed: data.failed,
            wall_time_s: started.elapsed().as_secs_f64(),
            assertions: Vec::new(),
        }
    }
}

/// Writes `data.csv`, `manifest.json` and, when present, `trace.csv`.
pub fn write_outputs(dir: &Path, data: &Dataset, manifest: &Manifest) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("data.csv"))?);
    f.write_all(data.to_csv().as_bytes())?;
    f.flush()?;
    let json = serde_json::to_string_pretty(manifest)?;
    std::fs::write(dir.join("manifest.json"), json + "\n")?;
    if !data.trace.is_empty() {
        write_trace_csv(&dir.join("trace.csv"), &data.trace)?;
    }
    Ok(())
}

/// What each cell computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Work of both statistics and the enhancement ratio.
    Work,
    /// λ for fermionic engines.
    Fermi,
}

/// Cartesian product of the axes, first axis slowest. Each cell carries its
/// axis values and the config they produce.
pub fn cells(config: &Config) -> Result<Vec<(Vec<f64>, Config)>> {
    config.validate()?;
    let mut out = vec![(Vec::new(), config.clone())];
    for axis in &config.sweep.axes {
        let points = axis.points()?;
        let mut next = Vec::with_capacity(out.len() * points.len());
        for (vals, cfg) in &out {
            for &x in &points {
                let mut c = cfg.clone();
                c.set(&axis.name, x)?;
                let mut v = vals.clone();
                v.push(x);
                next.push((v, c));
            }
        }
        out = next;
    }
    Ok(out)
}

fn cell_count(config: &Config) -> Result<usize> {
    config
        .sweep
        .axes
        .iter()
        .try_fold(1usize, |acc, a| Ok(acc.saturating_mul(a.points()?.len())))
}

fn check_cap(config: &Config) -> Result<usize> {
    let n = cell_count(config)?;
    let cap = if config.sweep.method.numerical() {
        MAX_NUMERICAL_CELLS
    } else {
        MAX_ANALYTIC_CELLS
    };
    if n > cap {
        return Err(Error::ResourceLimit {
            what: format!("sweep of {n} cells"),
            cap,
        });
    }
    Ok(n)
}

const WORK_COLUMNS: &[&str] = &[
    "w_indist_analytic",
    "w_dist_analytic",
    "E_analytic",
    "w_indist_numeric",
    "w_dist_numeric",
    "E_numeric",
    "unitarity_drift",
    "truncation_leakage",
    "error",
];

const FERMI_COLUMNS: &[&str] = &["N", "beta_com_omega", "lambda", "lambda_asymptotic", "method", "error"];

/// Evaluates every cell in parallel and gathers rows in cell order.
pub fn run_sweep(config: &Config, kind: SweepKind) -> Result<Dataset> {
    let count = check_cap(config)?;
    let cells = cells(config)?;
    let single = count == 1;
    let axis_names: Vec<&str> = config.sweep.axes.iter().map(|a| a.name.as_str()).collect();
    let mut data = match kind {
        SweepKind::Work => {
            let mut h = axis_names.clone();
            h.extend_from_slice(WORK_COLUMNS);
            Dataset::new(&h)
        }
        SweepKind::Fermi => {
            let mut h: Vec<&str> = axis_names
                .iter()
                .copied()
                .filter(|n| *n != "n" && *n != "beta_com_omega")
                .collect();
            h.extend_from_slice(FERMI_COLUMNS);
            Dataset::new(&h)
        }
    };
    let results: Vec<(Vec<Vec<Field>>, bool, Vec<TraceRow>)> = cells
        .par_iter()
        .map(|(vals, cfg)| match kind {
            SweepKind::Work => work_cell(&axis_names, vals, cfg, single),
            SweepKind::Fermi => fermi_cell(&axis_names, vals, cfg),
        })
        .collect();
    data.cells = results.len();
    for (rows, failed, trace) in results {
        data.rows.extend(rows);
        data.failed += failed as usize;
        if single {
            data.trace = trace;
        }
    }
    Ok(data)
}

fn num_or_empty(x: Option<f64>) -> Field {
    x.map_or(Field::Empty, Field::Num)
}

fn work_cell(_axes: &[&str], vals: &[f64], cfg: &Config, keep_trace: bool) -> (Vec<Vec<Field>>, bool, Vec<TraceRow>) {
    let mut row: Vec<Field> = vals.iter().map(|&v| Field::Num(v)).collect();
    let mut errors = Vec::new();
    let mut trace = Vec::new();
    let scenario = match cfg.scenario() {
        Ok(s) => s,
        Err(e) => {
            row.extend(std::iter::repeat(Field::Empty).take(WORK_COLUMNS.len() - 1));
            row.push(Field::Text(e.to_string()));
            return (vec![row], true, trace);
        }
    };
    let method = cfg.sweep.method;
    let mut analytic = [None; 3];
    if method.analytic() {
        match compare(&scenario.params, &scenario.schedule, &scenario.system) {
            Ok(c) => analytic = [Some(c.indist.avg_work), Some(c.dist.avg_work), Some(c.ratio)],
            Err(e) => errors.push(format!("analytic: {e}")),
        }
    }
    let mut numeric = [None; 5];
    if method.numerical() {
        let mut pc = scenario.propagator.clone();
        let run = |stats: Statistics, pc: &crate::dynamics::PropagatorConfig| -> Result<CycleResult> {
            let mut p = scenario.params.clone();
            p.statistics = stats;
            run_cycle(&p, &scenario.schedule, &scenario.system, stats, pc)
        };
        pc.record_trace = pc.record_trace && keep_trace;
        let mut no_trace = pc.clone();
        no_trace.record_trace = false;
        let own = cfg.engine.statistics;
        let bose = run(Statistics::Bose, if own == Statistics::Bose { &pc } else { &no_trace });
        let dist = run(
            Statistics::Distinguishable,
            if own == Statistics::Distinguishable { &pc } else { &no_trace },
        );
        match (bose, dist) {
            (Ok(b), Ok(d)) => {
                let wi = b.work.avg_work;
                let wd = d.work.avg_work;
                numeric = [
                    Some(wi),
                    Some(wd),
                    Some(crate::analytics::work::enhancement_ratio(wi, wd)),
                    Some(b.diagnostics.unitarity_drift.max(d.diagnostics.unitarity_drift)),
                    Some(b.diagnostics.truncation_leakage.max(d.diagnostics.truncation_leakage)),
                ];
                trace = if own == Statistics::Bose { b.trace } else { d.trace };
            }
            (Err(e), _) | (_, Err(e)) => errors.push(format!("numerical: {e}")),
        }
    }
    row.extend(analytic.iter().map(|x| num_or_empty(*x)));
    row.extend(numeric.iter().map(|x| num_or_empty(*x)));
    let failed = !errors.is_empty();
    row.push(if failed { Field::Text(errors.join("; ")) } else { Field::Empty });
    (vec![row], failed, trace)
}

fn fermi_cell(axes: &[&str], vals: &[f64], cfg: &Config) -> (Vec<Vec<Field>>, bool, Vec<TraceRow>) {
    let prefix: Vec<Field> = axes
        .iter()
        .zip(vals)
        .filter(|(n, _)| **n != "n" && **n != "beta_com_omega")
        .map(|(_, &v)| Field::Num(v))
        .collect();
    let bw = cfg.fermi.beta_com_omega;
    let n = cfg.engine.n;
    let asym = f_n_asymptotic(n, bw);
    let mut rows = Vec::new();
    let mut failed = false;
    let mut push = |label: &str, lam: Result<f64>| {
        let mut row = prefix.clone();
        row.push(Field::Int(n as i64));
        row.push(Field::Num(bw));
        match lam {
            Ok(l) => {
                row.extend([Field::Num(l), Field::Num(asym), Field::Text(label.into()), Field::Empty]);
            }
            Err(e) => {
                failed = true;
                row.extend([Field::Empty, Field::Num(asym), Field::Text(label.into()), Field::Text(e.to_string())]);
            }
        }
        rows.push(row);
    };
    let method = cfg.sweep.method;
    let ens = cfg.fermi_ensemble();
    if method.analytic() {
        push(
            "analytic",
            ens.clone().and_then(|e| fermi_work(&e)).map(|r| r.enhancement_ratio.unwrap_or(f64::NAN)),
        );
    }
    if method.numerical() {
        let lam = ens.and_then(|e| {
            let s = cfg.scenario()?;
            fermi_outcoupled_work(&e, &s.schedule, &s.system, &s.propagator)
        });
        push("numerical", lam.map(|r| r.enhancement_ratio.unwrap_or(f64::NAN)));
    }
    (rows, failed, Vec::new())
}

/// Region map spec from a config: axes `delta_over_omega0`, `omega_t` and
/// `n` (each optional, defaulting to the config's single value) over a
/// plateau schedule.
pub fn region_spec(config: &Config) -> Result<RegionSpec> {
    config.validate()?;
    let CouplingSection::SmoothPlateau { g, delta_t, alpha_t } = config.coupling else {
        return Err(Error::Config("region maps need a smooth_plateau coupling".into()));
    };
    let SystemSection::Harmonic { omega_t, .. } = config.system else {
        return Err(Error::Config("region maps need a harmonic system".into()));
    };
    let e = &config.engine;
    let mut spec = RegionSpec {
        omega0: e.omega0,
        v: e.v,
        period: e.period,
        beta_c_e0: e.beta_c_e0,
        beta_h_ehalf: e.beta_h_ehalf,
        g,
        delta_t,
        alpha: alpha_t / e.period,
        delta_over_omega0: vec![if e.omega0 != 0.0 { e.delta / e.omega0 } else { 0.0 }],
        omega_t: vec![omega_t],
        ns: vec![e.n],
    };
    if e.gap_direction != crate::protocols::GapDirection::Increasing || e.omega0 == 0.0 {
        return Err(Error::Config("region maps need Ω(0) ≠ 0 and an increasing gap".into()));
    }
    for axis in &config.sweep.axes {
        let pts = axis.points()?;
        match axis.name.as_str() {
            "delta_over_omega0" => spec.delta_over_omega0 = pts,
            "omega_t" => spec.omega_t = pts,
            "n" => spec.ns = pts.iter().map(|&x| x as u32).collect(),
            other => {
                return Err(Error::Config(format!(
                    "region maps sweep only delta_over_omega0, omega_t and n, not {other:?}"
                )))
            }
        }
    }
    let cells = spec.delta_over_omega0.len() * spec.omega_t.len() * spec.ns.len();
    if cells > MAX_ANALYTIC_CELLS {
        return Err(Error::ResourceLimit {
            what: format!("region map of {cells} cells"),
            cap: MAX_ANALYTIC_CELLS,
        });
    }
    Ok(spec)
}

/// Enhancement map as a dataset.
pub fn run_region(spec: &RegionSpec) -> Result<Dataset> {
    let cells = enhancement_region(spec)?;
    let mut data = Dataset::new(&["delta_over_omega0", "omega_t", "N", "enhanced", "w_indist", "w_dist"]);
    data.cells = cells.len();
    for c in cells {
        data.rows.push(vec![
            Field::Num(c.delta_over_omega0),
            Field::Num(c.omega_t),
            Field::Int(c.n as i64),
            Field::Int(c.enhanced as i64),
            Field::Num(c.w_indist),
            Field::Num(c.w_dist),
        ]);
    }
    Ok(data)
}
