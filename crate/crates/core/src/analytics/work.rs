//! Work records and the leading-order excitation probabilities for impulse
//! and general coupling schedules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::amplitudes::{compute_amplitudes, Amplitudes};
use super::moments::MomentSet;
use crate::error::{Error, Result};
use crate::protocols::{CouplingSchedule, EngineParams, ExternalSystem, Statistics, Stroke};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ImpulseClosedForm,
    GeneralPerturbative,
    ExactNumerical,
    /// Isolated-engine fermionic work from the COM enumeration.
    FermiEnumeration,
}

/// Above this total excitation probability the perturbative record is flagged.
pub const PERTURBATIVE_WARN: f64 = 0.1;
/// Above this total excitation probability the perturbative result is refused.
pub const PERTURBATIVE_FAIL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkRecord {
    /// Excitation probability of each level i ≥ 1.
    pub p_excite: BTreeMap<usize, f64>,
    pub avg_work: f64,
    pub statistics: Statistics,
    pub method: Method,
    pub enhancement_ratio: Option<f64>,
    #[serde(default)]
    pub perturbative_warning: bool,
    /// The coupling is not negligible at the reset instant T/2.
    #[serde(default)]
    pub thermalization_overlap: bool,
}

impl WorkRecord {
    /// Builds a record with ⟨w⟩ = Σ_{i≥1} ε_i p_i.
    pub fn from_probabilities(
        energies: &[f64],
        p_excite: BTreeMap<usize, f64>,
        statistics: Statistics,
        method: Method,
    ) -> Result<Self> {
        let total: f64 = p_excite.values().sum();
        if method != Method::ExactNumerical && total.is_finite() && total > PERTURBATIVE_FAIL {
            return Err(Error::PerturbationBreakdown(total));
        }
        let mut avg = 0.0;
        for (&i, &p) in &p_excite {
            if i == 0 || i >= energies.len() {
                return Err(Error::InvalidArgument(format!("level {i} is not an excited level")));
            }
            if !(p.is_finite() && (-1e-12..=1.0 + 1e-12).contains(&p)) {
                return Err(Error::NumericalFailure(format!("probability p_{i} = {p} outside [0, 1]")));
            }
            avg += energies[i] * p;
        }
        let perturbative_warning = method != Method::ExactNumerical && total > PERTURBATIVE_WARN;
        Ok(WorkRecord {
            p_excite,
            avg_work: avg,
            statistics,
            method,
            enhancement_ratio: None,
            perturbative_warning,
            thermalization_overlap: false,
        })
    }

    pub fn total_excitation(&self) -> f64 {
        self.p_excite.values().sum()
    }
}

/// ℰ = ⟨w⟩^indist / ⟨w⟩^dist; 1 when both vanish.
pub fn enhancement_ratio(indist: f64, dist: f64) -> f64 {
    if indist == dist {
        1.0
    } else {
        indist / dist
    }
}

/// ⟨[V_R^{(I)}(t1)]²⟩ for impulse coupling at angle θ_{t1}.
pub fn impulse_second_moment(n: u32, x: f64, cos_theta: f64, statistics: Statistics) -> Result<f64> {
    let c2 = cos_theta * cos_theta;
    let s2 = 1.0 - c2;
    let nf = n as f64;
    // One atom has a single ensemble, so both branches share one formula.
    if n == 1 || statistics == Statistics::Distinguishable {
        let th = if x.is_infinite() { 1.0 } else { x.tanh() };
        return Ok(nf * s2 + (nf + nf * (nf - 1.0) * th * th) * c2);
    }
    let f = MomentSet::new(n, x)?.f;
    Ok((0.5 * nf * (nf + 2.0) - 2.0 * f) * s2 + 4.0 * f * c2)
}

/// Impulse-coupling work ⟨w⟩ = g² ⟨V_R²⟩ Σ ε_i |⟨i|V_S|0⟩|².
pub fn impulse_work(
    params: &EngineParams,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
    statistics: Statistics,
) -> Result<WorkRecord> {
    let CouplingSchedule::Impulse { g, t1 } = *schedule else {
        return Err(Error::InvalidVariant("impulse_work needs an impulse schedule".into()));
    };
    params.validate()?;
    schedule.validate(params.period)?;
    let stroke = Stroke::containing(t1, params.period);
    let (c, _) = params.angle_cos_sin(t1)?;
    let moment = impulse_second_moment(params.n, params.stroke_x(stroke)?, c, statistics)?;
    let mut p = BTreeMap::new();
    for i in 1..system.dim() {
        let v = system.v_s.matrix[[i, 0]].norm_sqr();
        if v > 0.0 {
            p.insert(i, g * g * moment * v);
        }
    }
    WorkRecord::from_probabilities(&system.energies, p, statistics, Method::ImpulseClosedForm)
}

/// Statistics-dependent factors multiplying |d|², |c̃+|², |c̃−|² for one
/// stroke, and the one-time factor entering the cross term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketFactors {
    pub d: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub cross: f64,
}

pub fn bracket_factors(n: u32, x: f64, statistics: Statistics) -> Result<BracketFactors> {
    let nf = n as f64;
    if n == 1 || statistics == Statistics::Distinguishable {
        let th = if x.is_infinite() { 1.0 } else { x.tanh() };
        return Ok(BracketFactors {
            d: nf + nf * (nf - 1.0) * th * th,
            c_plus: 0.5 * nf * (1.0 + th),
            c_minus: 0.5 * nf * (1.0 - th),
            cross: nf * th,
        });
    }
    let m = MomentSet::new(n, x)?;
    let j = m.casimir();
    Ok(BracketFactors {
        d: 4.0 * m.f,
        c_plus: j - m.f_plus,
        c_minus: j - m.f_minus,
        cross: 2.0 * m.h_paper(),
    })
}

/// p_i assembled from the amplitudes of both strokes.
pub fn probability_from_amplitudes(
    n: u32,
    x_c: f64,
    x_h: f64,
    a0: &Amplitudes,
    ah: &Amplitudes,
    statistics: Statistics,
) -> Result<f64> {
    let b0 = bracket_factors(n, x_c, statistics)?;
    let bh = bracket_factors(n, x_h, statistics)?;
    let stroke = |a: &Amplitudes, b: &BracketFactors| {
        a.d.norm_sqr() * b.d + a.c_plus.norm_sqr() * b.c_plus + a.c_minus.norm_sqr() * b.c_minus
    };
    let cross = 2.0 * (a0.d * ah.d.conj()).re * b0.cross * bh.cross;
    Ok(stroke(a0, &b0) + stroke(ah, &bh) + cross)
}

/// Leading-order p_i for level `i`.
pub fn general_probability(
    params: &EngineParams,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
    statistics: Statistics,
    i: usize,
) -> Result<f64> {
    let a0 = compute_amplitudes(params, schedule, system, i, Stroke::Compression)?;
    let ah = compute_amplitudes(params, schedule, system, i, Stroke::Expansion)?;
    probability_from_amplitudes(
        params.n,
        params.stroke_x(Stroke::Compression)?,
        params.stroke_x(Stroke::Expansion)?,
        &a0,
        &ah,
        statistics,
    )
}

/// Amplitudes of every excited level that couples to the ground state.
pub fn all_amplitudes(
    params: &EngineParams,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
) -> Result<Vec<(usize, Amplitudes, Amplitudes)>> {
    let mut out = Vec::new();
    for i in 1..system.dim() {
        if system.v_s.matrix[[i, 0]].norm() == 0.0 {
            continue;
        }
        out.push((
            i,
            compute_amplitudes(params, schedule, system, i, Stroke::Compression)?,
            compute_amplitudes(params, schedule, system, i, Stroke::Expansion)?,
        ));
    }
    Ok(out)
}

/// Leading-order work for any schedule; impulse schedules give the same
/// numbers as [`impulse_work`] but are labelled perturbative.
pub fn general_work(
    params: &EngineParams,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
    statistics: Statistics,
) -> Result<WorkRecord> {
    params.validate()?;
    schedule.validate(params.period)?;
    let amps = all_amplitudes(params, schedule, system)?;
    work_from_amplitudes(params, schedule, system, &amps, statistics)
}

pub fn work_from_amplitudes(
    params: &EngineParams,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
    amps: &[(usize, Amplitudes, Amplitudes)],
    statistics: Statistics,
) -> Result<WorkRecord> {
    let x_c = params.stroke_x(Stroke::Compression)?;
    let x_h = params.stroke_x(Stroke::Expansion)?;
    let mut p = BTreeMap::new();
    for (i, a0, ah) in amps {
        p.insert(*i, probability_from_amplitudes(params.n, x_c, x_h, a0, ah, statistics)?);
    }
    let mut rec = WorkRecord::from_probabilities(&system.energies, p, statistics, Method::GeneralPerturbative)?;
    rec.thermalization_overlap = thermalization_overlap(schedule, params.period)?;
    Ok(rec)
}

/// True when g_C(T/2) exceeds 1e-3 of the schedule's peak.
pub fn thermalization_overlap(schedule: &CouplingSchedule, period: f64) -> Result<bool> {
    match schedule {
        CouplingSchedule::Impulse { .. } => Ok(false),
        CouplingSchedule::SmoothPlateau { g, delta_t, .. } => {
            let plateau = 2.0 * g.abs() / (delta_t * period);
            Ok(schedule.g_of_t(0.5 * period)?.abs() > 1e-3 * plateau)
        }
        CouplingSchedule::Sampled { values, .. } => {
            let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            Ok(schedule.g_of_t(0.5 * period)?.abs() > 1e-3 * peak)
        }
    }
}

/// Both statistics and their ratio for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub indist: WorkRecord,
    pub dist: WorkRecord,
    pub ratio: f64,
}

pub fn compare(
    params: &EngineParams,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
) -> Result<Comparison> {
    let (mut indist, mut dist) = if schedule.is_impulse() {
        (
            impulse_work(params, schedule, system, Statistics::Bose)?,
            impulse_work(params, schedule, system, Statistics::Distinguishable)?,
        )
    } else {
        params.validate()?;
        schedule.validate(params.period)?;
        let amps = all_amplitudes(params, schedule, system)?;
        (
            work_from_amplitudes(params, schedule, system, &amps, Statistics::Bose)?,
            work_from_amplitudes(params, schedule, system, &amps, Statistics::Distinguishable)?,
        )
    };
    let ratio = enhancement_ratio(indist.avg_work, dist.avg_work);
    indist.enhancement_ratio = Some(ratio);
    dist.enhancement_ratio = Some(ratio);
    Ok(Comparison { indist, dist, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::harmonic_system;
    use proptest::prelude::*;

    fn fig2(n: u32, delta: f64) -> EngineParams {
        EngineParams::with_bath_products(n, 1.0, delta, 0.1, 20.0, 2.0, 0.25, Statistics::Bose).unwrap()
    }

    fn impulse() -> CouplingSchedule {
        CouplingSchedule::Impulse { g: 0.01, t1: 0.35 * 10.0 }
    }

    #[test]
    fn single_atom_ratio_is_one() {
        let sys = harmonic_system(2.0 * std::f64::consts::PI * 0.05 / 20.0, 4).unwrap();
        for delta in [0.0, 1.4, 4.2] {
            let c = compare(&fig2(1, delta), &impulse(), &sys).unwrap();
            assert_eq!(c.ratio, 1.0);
            let smooth = CouplingSchedule::smooth_plateau(0.01, 0.9, 107.1, 20.0).unwrap();
            let c = compare(&fig2(1, delta), &smooth, &sys).unwrap();
            assert_eq!(c.ratio, 1.0);
        }
    }

    #[test]
    fn distinguishable_delta_zero_work() {
        let omega = 0.3;
        let sys = harmonic_system(omega, 6).unwrap();
        for n in 1..10 {
            let r = impulse_work(&fig2(n, 0.0), &impulse(), &sys, Statistics::Distinguishable).unwrap();
            assert!((r.avg_work - omega * 1e-4 * n as f64).abs() < 1e-15);
            assert_eq!(r.method, Method::ImpulseClosedForm);
        }
    }

    #[test]
    fn impulse_needs_impulse_schedule() {
        let sys = harmonic_system(0.3, 3).unwrap();
        let smooth = CouplingSchedule::smooth_plateau(0.01, 0.9, 107.1, 20.0).unwrap();
        assert!(matches!(
            impulse_work(&fig2(2, 0.0), &smooth, &sys, Statistics::Bose),
            Err(Error::InvalidVariant(_))
        ));
    }

    #[test]
    fn general_reduces_to_impulse_for_impulse_schedule() {
        let sys = harmonic_system(0.2, 3).unwrap();
        for delta in [0.0, 1.4] {
            for st in [Statistics::Bose, Statistics::Distinguishable] {
                let a = impulse_work(&fig2(5, delta), &impulse(), &sys, st).unwrap();
                let b = general_work(&fig2(5, delta), &impulse(), &sys, st).unwrap();
                assert!((a.avg_work / b.avg_work - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fig2a_ordering() {
        let sys = harmonic_system(2.0 * std::f64::consts::PI * 0.05 / 20.0, 4).unwrap();
        for n in 1..=8 {
            let e: Vec<f64> = [0.0, 1.4, 4.2]
                .iter()
                .map(|&d| compare(&fig2(n, d), &impulse(), &sys).unwrap().ratio)
                .collect();
            assert!(e.iter().all(|&r| r >= 1.0 - 1e-12), "N = {n}: {e:?}");
            if n == 1 {
                assert!(e.iter().all(|&r| (r - 1.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn perturbative_guard() {
        let sys = harmonic_system(0.2, 3).unwrap();
        let big = CouplingSchedule::Impulse { g: 0.5, t1: 3.5 };
        assert!(matches!(
            impulse_work(&fig2(8, 0.0), &big, &sys, Statistics::Bose),
            Err(Error::PerturbationBreakdown(_))
        ));
        let e = [0.0, 1.0];
        let rec = |p: f64, m| WorkRecord::from_probabilities(&e, BTreeMap::from([(1, p)]), Statistics::Bose, m);
        assert!(rec(0.2, Method::GeneralPerturbative).unwrap().perturbative_warning);
        assert!(!rec(0.05, Method::GeneralPerturbative).unwrap().perturbative_warning);
        assert!(!rec(0.7, Method::ExactNumerical).unwrap().perturbative_warning);
    }

    proptest! {
        #[test]
        fn impulse_indist_dominates(n in 1u32..40, x in 0.0..20.0f64, c in -1.0..1.0f64) {
            let a = impulse_second_moment(n, x, c, Statistics::Bose).unwrap();
            let b = impulse_second_moment(n, x, c, Statistics::Distinguishable).unwrap();
            prop_assert!(a >= b * (1.0 - 1e-13));
        }
    }
}
