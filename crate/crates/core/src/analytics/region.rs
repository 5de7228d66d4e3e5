//! Binary enhancement maps over (Δ/Ω(0), ωT).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::work::{all_amplitudes, work_from_amplitudes};
use crate::error::Result;
use crate::protocols::{harmonic_system, CouplingSchedule, EngineParams, Statistics};

/// Fixed inputs of a map; Δ and ω vary per cell, β_c and β_h follow from the
/// bath products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub omega0: f64,
    pub v: f64,
    pub period: f64,
    pub beta_c_e0: f64,
    pub beta_h_ehalf: f64,
    pub g: f64,
    pub delta_t: f64,
    pub alpha: f64,
    pub delta_over_omega0: Vec<f64>,
    pub omega_t: Vec<f64>,
    pub ns: Vec<u32>,
}

impl RegionSpec {
    /// The supplementary-figure window with a `nd × nw` grid.
    pub fn fig_s1(nd: usize, nw: usize, ns: Vec<u32>) -> Self {
        let period = 20.0;
        let lin = |a: f64, b: f64, k: usize, n: usize| if n == 1 { a } else { a + (b - a) * k as f64 / (n - 1) as f64 };
        RegionSpec {
            omega0: 1.0,
            v: 0.1,
            period,
            beta_c_e0: 2.0,
            beta_h_ehalf: 0.25,
            g: 0.01,
            delta_t: 0.9,
            alpha: 2142.0 / period,
            delta_over_omega0: (0..nd).map(|k| lin(0.0, 4.0, k, nd)).collect(),
            omega_t: (0..nw).map(|k| lin(0.1, 10.0 * std::f64::consts::PI, k, nw)).collect(),
            ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub delta_over_omega0: f64,
    pub omega_t: f64,
    pub n: u32,
    pub enhanced: bool,
    pub w_indist: f64,
    pub w_dist: f64,
}

/// Enhancement = ⟨w⟩^indist ≥ ⟨w⟩^dist, ties within 1e-12 of the scale
/// counted as enhancement. Cells are ordered Δ-major, then ωT, then N.
pub fn enhancement_region(spec: &RegionSpec) -> Result<Vec<RegionCell>> {
    let pairs: Vec<(f64, f64)> = spec
        .delta_over_omega0
        .iter()
        .flat_map(|&d| spec.omega_t.iter().map(move |&w| (d, w)))
        .collect();
    let blocks: Vec<Result<Vec<RegionCell>>> = pairs
        .par_iter()
        .map(|&(d, wt)| region_block(spec, d, wt))
        .collect();
    let mut out = Vec::with_capacity(pairs.len() * spec.ns.len());
    for b in blocks {
        out.extend(b?);
    }
    Ok(out)
}

fn region_block(spec: &RegionSpec, d: f64, wt: f64) -> Result<Vec<RegionCell>> {
    let system = harmonic_system(wt / spec.period, 2)?;
    let schedule = CouplingSchedule::smooth_plateau(spec.g, spec.delta_t, spec.alpha, spec.period)?;
    let base = EngineParams::with_bath_products(
        1,
        spec.omega0,
        d * spec.omega0,
        spec.v,
        spec.period,
        spec.beta_c_e0,
        spec.beta_h_ehalf,
        Statistics::Bose,
    )?;
    // Amplitudes do not depend on N.
    let amps = all_amplitudes(&base, &schedule, &system)?;
    let mut cells = Vec::with_capacity(spec.ns.len());
    for &n in &spec.ns {
        let p = EngineParams { n, ..base.clone() };
        let wi = work_from_amplitudes(&p, &schedule, &system, &amps, Statistics::Bose)?.avg_work;
        let wd = work_from_amplitudes(&p, &schedule, &system, &amps, Statistics::Distinguishable)?.avg_work;
        let scale = wi.abs().max(wd.abs());
        cells.push(RegionCell {
            delta_over_omega0: d,
            omega_t: wt,
            n,
            enhanced: wi - wd >= -1e-12 * scale,
            w_indist: wi,
            w_dist: wd,
        });
    }
    Ok(cells)
}
