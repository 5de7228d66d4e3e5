//! Trapped two-level fermions: conserved COM occupations, Pauli blocking and
//! the work ratio λ = ⟨w_N⟩/⟨w_1⟩.
//!
//! Only singly occupied trap levels can change their internal state. A level
//! holding one atom has two internal states, so it enters the COM canonical
//! weight with multiplicity 2.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{Method, WorkRecord};
use crate::dynamics::{run_cycle, PropagatorConfig};
use crate::error::{Error, Result};
use crate::hilbert::Beta;
use crate::linalg::compensated_sum;
use crate::protocols::{CouplingSchedule, EngineParams, ExternalSystem, Statistics};

/// Default cap on the number of enumerated configurations.
pub const DEFAULT_CONFIG_CAP: usize = 1_000_000;
/// Configurations lighter than this fraction of the heaviest are dropped.
pub const PRUNE_RATIO: f64 = 1e-14;
/// Bound on the canonical weight that could sit beyond the last trap level.
pub const TAIL_TOL: f64 = 1e-10;
/// Largest number of active engines propagated in an outcoupled run.
pub const MAX_OUTCOUPLED_ACTIVE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermiEnsemble {
    pub n: u32,
    pub omega_trap: f64,
    pub beta_com: Beta,
    /// Number of trap levels L kept in the enumeration.
    pub level_count: usize,
    /// Internal two-level parameters; `engine.n` is ignored.
    pub engine: EngineParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationConfig {
    /// n_l ∈ {0, 1, 2} for each level.
    pub occupations: Vec<u8>,
    /// ω_trap Σ (l + 1/2) n_l.
    pub energy: f64,
    pub weight: f64,
    pub active: usize,
}

impl FermiEnsemble {
    /// Picks the smallest level count whose tail bound is below [`TAIL_TOL`],
    /// plus two levels of margin.
    pub fn new(n: u32, omega_trap: f64, beta_com: impl Into<Beta>, engine: EngineParams) -> Result<Self> {
        let beta_com = beta_com.into();
        let mut ens = FermiEnsemble {
            n,
            omega_trap,
            beta_com,
            level_count: n as usize,
            engine,
        };
        ens.check_scalars()?;
        while ens.tail_bound() >= TAIL_TOL {
            ens.level_count += 1;
        }
        ens.level_count += 2;
        Ok(ens)
    }

    /// β_COM·ω_trap, infinite at zero COM temperature.
    pub fn beta_omega(&self) -> f64 {
        match self.beta_com {
            Beta::Finite(b) => b * self.omega_trap,
            Beta::Infinite => f64::INFINITY,
        }
    }

    fn check_scalars(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if !(self.omega_trap.is_finite() && self.omega_trap > 0.0) {
            return Err(Error::InvalidArgument(format!("ω_trap must be positive, got {}", self.omega_trap)));
        }
        if let Beta::Finite(b) = self.beta_com {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidArgument(format!("β_COM must be positive, got {b}")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_scalars()?;
        if self.level_count < self.n as usize {
            return Err(Error::Config(format!(
                "level_count = {} is below N = {}",
                self.level_count, self.n
            )));
        }
        let tail = self.tail_bound();
        if tail >= TAIL_TOL {
            return Err(Error::Config(format!(
                "level_count = {} leaves a canonical tail up to {tail:.2e}; add levels",
                self.level_count
            )));
        }
        Ok(())
    }

    /// 2^N e^{−βΔE} for the cheapest configuration that puts an atom on
    /// level L, relative to the ground configuration.
    fn tail_bound(&self) -> f64 {
        let bw = self.beta_omega();
        let l = self.level_count;
        let n = self.n as usize;
        // Ground: pairs on the lowest levels. Cheapest with level L occupied:
        // the ground configuration of N − 1 atoms plus one atom on L.
        let de = (l as f64 + 0.5) + ground_units(n - 1) - ground_units(n);
        if bw.is_infinite() {
            return if de > 0.0 { 0.0 } else { 1.0 };
        }
        (n as f64 * std::f64::consts::LN_2 - bw * de).exp()
    }
}

/// Σ (l + 1/2) n_l of the ground configuration of `n` atoms.
fn ground_units(n: usize) -> f64 {
    (0..n).map(|i| (i / 2) as f64 + 0.5).sum()
}

/// All occupations with Σ n_l = N over the L levels, weighted by
/// 2^active · e^{−β_COM E_COM} and normalized.
pub fn enumerate_configs(ens: &FermiEnsemble) -> Result<Vec<OccupationConfig>> {
    enumerate_configs_capped(ens, DEFAULT_CONFIG_CAP)
}

pub fn enumerate_configs_capped(ens: &FermiEnsemble, cap: usize) -> Result<Vec<OccupationConfig>> {
    ens.validate()?;
    let n = ens.n as usize;
    let bw = ens.beta_omega();
    let e0 = ground_units(n);
    // Anything above this excitation (in units of ω_trap) weighs less than
    // PRUNE_RATIO of the ground configuration even with full multiplicity.
    let window = if bw.is_infinite() {
        1e-9
    } else {
        (n as f64 * std::f64::consts::LN_2 - PRUNE_RATIO.ln()) / bw
    };
    let mut raw: Vec<(Vec<u8>, f64, usize)> = Vec::new();
    let mut occ = vec![0u8; ens.level_count];
    let mut search = Search {
        levels: ens.level_count,
        limit: e0 + window,
        cap,
        out: &mut raw,
    };
    search.descend(0, n, 0.0, &mut occ)?;

    let log_w: Vec<f64> = raw
        .iter()
        .map(|(_, e, a)| {
            let boltz = if bw.is_infinite() { 0.0 } else { -bw * (e - e0) };
            *a as f64 * std::f64::consts::LN_2 + boltz
        })
        .collect();
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let keep: Vec<usize> = (0..raw.len()).filter(|&i| log_w[i] - top >= PRUNE_RATIO.ln()).collect();
    let z = compensated_sum(keep.iter().map(|&i| (log_w[i] - top).exp()));
    Ok(keep
        .into_iter()
        .map(|i| {
            let (occupations, e, active) = raw[i].clone();
            OccupationConfig {
                occupations,
                energy: e * ens.omega_trap,
                weight: (log_w[i] - top).exp() / z,
                active,
            }
        })
        .collect())
}

struct Search<'a> {
    levels: usize,
    limit: f64,
    cap: usize,
    out: &'a mut Vec<(Vec<u8>, f64, usize)>,
}

impl Search<'_> {
    /// Depth-first over levels; `e` is the energy (units of ω_trap) placed so
    /// far and `left` the atoms still to place on levels ≥ `l`.
    fn descend(&mut self, l: usize, left: usize, e: f64, occ: &mut [u8]) -> Result<()> {
        if left == 0 {
            if self.out.len() >= self.cap {
                return Err(Error::ResourceLimit {
                    what: "fermionic configuration enumeration (lower L or raise β_COM)".into(),
                    cap: self.cap,
                });
            }
            let active = occ.iter().filter(|&&x| x == 1).count();
            self.out.push((occ.to_vec(), e, active));
            return Ok(());
        }
        if l >= self.levels || 2 * (self.levels - l) < left {
            return Ok(());
        }
        // Cheapest completion: pairs from level l upward.
        let floor: f64 = (0..left).map(|i| (l + i / 2) as f64 + 0.5).sum();
        if e + floor > self.limit + 1e-12 {
            return Ok(());
        }
        for k in (0..=2u8.min(left as u8)).rev() {
            occ[l] = k;
            self.descend(l + 1, left - k as usize, e + k as f64 * (l as f64 + 0.5), occ)?;
        }
        occ[l] = 0;
        Ok(())
    }
}

/// Expected number of singly occupied levels.
pub fn f_n(ens: &FermiEnsemble) -> Result<f64> {
    let configs = enumerate_configs(ens)?;
    Ok(compensated_sum(configs.iter().map(|c| c.weight * c.active as f64)))
}

/// Low-temperature asymptote: 8e^{−βω} for even N, 1 + 8e^{−2βω} for odd N.
pub fn f_n_asymptotic(n: u32, beta_omega: f64) -> f64 {
    if n % 2 == 0 {
        8.0 * (-beta_omega).exp()
    } else {
        1.0 + 8.0 * (-2.0 * beta_omega).exp()
    }
}

/// (ε_h − ε_c)(tanh β_cε_c − tanh β_hε_h), the work of one isolated engine.
pub fn single_engine_work(engine: &EngineParams) -> Result<f64> {
    let eps_c = engine.gap(0.0)?;
    let eps_h = engine.gap(0.5 * engine.period)?;
    Ok((eps_h - eps_c) * ((engine.beta_c * eps_c).tanh() - (engine.beta_h * eps_h).tanh()))
}

/// ⟨w_N⟩ = f_N · ⟨w_1⟩ for isolated engines; λ = f_N is stored as the
/// enhancement ratio.
pub fn fermi_work(ens: &FermiEnsemble) -> Result<WorkRecord> {
    ens.engine.validate()?;
    let f = f_n(ens)?;
    Ok(WorkRecord {
        p_excite: Default::default(),
        avg_work: single_engine_work(&ens.engine)? * f,
        statistics: Statistics::Distinguishable,
        method: Method::FermiEnumeration,
        enhancement_ratio: Some(f),
        perturbative_warning: false,
        thermalization_overlap: false,
    })
}

/// Probability of each active count 0..=N.
pub fn active_distribution(ens: &FermiEnsemble) -> Result<Vec<f64>> {
    let mut by_active = vec![0.0; ens.n as usize + 1];
    for c in enumerate_configs(ens)? {
        by_active[c.active] += c.weight;
    }
    Ok(by_active)
}

/// Outcoupled work of k = 1..=k_max distinguishable engines with the
/// internal parameters of `engine`; entry 0 is the idle value 0.
pub fn active_cycle_works(
    engine: &EngineParams,
    k_max: usize,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
    config: &PropagatorConfig,
) -> Result<Vec<f64>> {
    let k_max = k_max.min(MAX_OUTCOUPLED_ACTIVE);
    let mut works = vec![0.0];
    let runs: Vec<f64> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let mut p = engine.clone();
            p.n = k as u32;
            p.statistics = Statistics::Distinguishable;
            run_cycle(&p, schedule, system, Statistics::Distinguishable, config).map(|r| r.work.avg_work)
        })
        .collect::<Result<_>>()?;
    works.extend(runs);
    Ok(works)
}

/// λ = Σ_k P(k) w_k / w_1 from an active-count distribution and the works
/// of [`active_cycle_works`]; returns (⟨w_N⟩, λ).
pub fn outcoupled_average(by_active: &[f64], works: &[f64]) -> Result<(f64, f64)> {
    let deficit: f64 = by_active.iter().skip(works.len()).sum();
    if deficit > 1e-3 {
        return Err(Error::ResourceLimit {
            what: format!("configurations with more active atoms than the cap (weight {deficit:.2e})"),
            cap: MAX_OUTCOUPLED_ACTIVE,
        });
    }
    let avg = compensated_sum(by_active.iter().zip(works).map(|(p, w)| p * w));
    let w1 = works.get(1).copied().unwrap_or(0.0);
    Ok((avg, if w1 != 0.0 { avg / w1 } else { f64::NAN }))
}

/// Outcoupled work averaged over COM configurations. Each configuration
/// runs its active atoms as distinguishable engines driving the shared
/// system; λ = ⟨w_N⟩/⟨w_1⟩ is stored as the enhancement ratio.
pub fn fermi_outcoupled_work(
    ens: &FermiEnsemble,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
    config: &PropagatorConfig,
) -> Result<WorkRecord> {
    if ens.beta_omega() < 2.0 {
        return Err(Error::Domain(format!(
            "outcoupled fermionic runs need β_COM ω_trap ≥ 2, got {}",
            ens.beta_omega()
        )));
    }
    let by_active = active_distribution(ens)?;
    let k_max = by_active.iter().rposition(|&p| p > 0.0).unwrap_or(0).max(1);
    let works = active_cycle_works(&ens.engine, k_max, schedule, system, config)?;
    let (avg, lambda) = outcoupled_average(&by_active, &works)?;
    Ok(WorkRecord {
        p_excite: Default::default(),
        avg_work: avg,
        statistics: Statistics::Distinguishable,
        method: Method::ExactNumerical,
        enhancement_ratio: Some(lambda),
        perturbative_warning: false,
        thermalization_overlap: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn engine() -> EngineParams {
        EngineParams::with_bath_products(1, 0.0, 1.0, 0.5, 20.0, 1.0, 0.125, Statistics::Distinguishable).unwrap()
    }

    fn ens(n: u32, bw: f64) -> FermiEnsemble {
        FermiEnsemble::new(n, 1.0, bw, engine()).unwrap()
    }

    #[test]
    fn zero_temperature_ground_configs() {
        let c = enumerate_configs(&ens(2, f64::INFINITY)).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(&c[0].occupations[..2], &[2, 0]);
        assert_eq!(c[0].active, 0);
        let c = enumerate_configs(&ens(3, f64::INFINITY)).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(&c[0].occupations[..3], &[2, 1, 0]);
        assert_eq!(c[0].active, 1);
        for n in 1..=7 {
            assert_eq!(f_n(&ens(n, f64::INFINITY)).unwrap(), (n % 2) as f64);
        }
    }

    #[test]
    fn two_atom_weights_by_hand() {
        // Relative to [2,0,..]: [1,1] at +1 with 4 internal states,
        // [1,0,1] at +2 (×4), [0,2] at +2 (×1), [1,0,0,1] and [0,1,1] at +3 (×4).
        let bw = 3.0;
        let c = enumerate_configs(&ens(2, bw)).unwrap();
        let find = |occ: &[u8]| c.iter().find(|x| x.occupations.starts_with(occ)).unwrap().weight;
        let x = (-bw).exp();
        let w0 = find(&[2, 0, 0]);
        assert!((find(&[1, 1, 0]) / w0 - 4.0 * x).abs() < 1e-14);
        assert!((find(&[1, 0, 1]) / w0 - 4.0 * x * x).abs() < 1e-14);
        assert!((find(&[0, 2, 0]) / w0 - x * x).abs() < 1e-14);
        assert!((find(&[0, 1, 1]) / w0 - 4.0 * x * x * x).abs() < 1e-14);
        let total: f64 = c.iter().map(|x| x.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_atom_is_always_active() {
        for bw in [0.5, 2.0, 4.0, 10.0] {
            assert!((f_n(&ens(1, bw)).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn parity_law() {
        for n in 2..=5 {
            for bw in [5.0, 6.0, 8.0] {
                let f = f_n(&ens(n, bw)).unwrap();
                if n % 2 == 0 {
                    assert!((f / (8.0 * (-bw).exp()) - 1.0).abs() < 0.1, "N={n} βω={bw} f={f}");
                } else {
                    assert!(((f - 1.0) / (8.0 * (-2.0 * bw).exp()) - 1.0).abs() < 0.2, "N={n} βω={bw} f={f}");
                }
            }
        }
    }

    #[test]
    fn fig4_asymptote_tolerances() {
        let f = f_n(&ens(2, 4.0)).unwrap();
        assert!((f / (8.0 * (-4.0f64).exp()) - 1.0).abs() < 0.15);
        let f = f_n(&ens(3, 4.0)).unwrap();
        assert!(((f - 1.0) / (8.0 * (-8.0f64).exp()) - 1.0).abs() < 0.25);
    }

    #[test]
    fn level_count_is_stable() {
        for n in 1..=6 {
            for bw in [2.0, 3.0, 5.0] {
                let mut e = ens(n, bw);
                let a = f_n(&e).unwrap();
                e.level_count += 2;
                let b = f_n(&e).unwrap();
                assert!((a - b).abs() < 1e-10, "N={n} βω={bw}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn short_trap_is_rejected() {
        let mut e = ens(4, 2.0);
        e.level_count = 3;
        assert!(matches!(enumerate_configs(&e), Err(Error::Config(_))));
        e.level_count = 5;
        assert!(matches!(enumerate_configs(&e), Err(Error::Config(_))));
    }

    #[test]
    fn cap_is_enforced() {
        let e = ens(6, 2.0);
        assert!(matches!(enumerate_configs_capped(&e, 10), Err(Error::ResourceLimit { .. })));
    }

    #[test]
    fn unbiased_baths_give_no_work() {
        let mut p = engine();
        let eh = p.gap(10.0).unwrap();
        let ec = p.gap(0.0).unwrap();
        p.beta_c = 0.7 / ec;
        p.beta_h = 0.7 / eh;
        let e = FermiEnsemble::new(3, 1.0, 4.0, p).unwrap();
        assert!(fermi_work(&e).unwrap().avg_work.abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn lambda_ignores_bath_temperatures(n in 1u32..6, bw in 2.0f64..8.0, bc in 0.1f64..5.0, bh in 0.01f64..1.0) {
            let mut p = engine();
            let base = fermi_work(&FermiEnsemble::new(n, 1.0, bw, p.clone()).unwrap()).unwrap();
            p.set_bath_products(bc, bh).unwrap();
            let other = fermi_work(&FermiEnsemble::new(n, 1.0, bw, p.clone()).unwrap()).unwrap();
            prop_assert!((base.enhancement_ratio.unwrap() - other.enhancement_ratio.unwrap()).abs() < 1e-12);
            let single = fermi_work(&FermiEnsemble::new(1, 1.0, bw, p).unwrap()).unwrap();
            prop_assert!((other.avg_work - other.enhancement_ratio.unwrap() * single.avg_work).abs() <= 1e-12 * single.avg_work.abs());
        }

        #[test]
        fn f_n_is_bounded(n in 1u32..8, bw in 1.0f64..10.0) {
            let f = f_n(&ens(n, bw)).unwrap();
            prop_assert!((-1e-12..=n as f64 + 1e-12).contains(&f));
        }
    }

    #[test]
    fn outcoupled_zero_temperature_parity() {
        let p = engine();
        let sched = CouplingSchedule::smooth_plateau(0.05, 0.98, 100.0, 20.0).unwrap();
        let sys = crate::protocols::harmonic_system(2.0 * std::f64::consts::PI * 0.05 / 20.0, 6).unwrap();
        let cfg = PropagatorConfig::default();
        let even = fermi_outcoupled_work(&FermiEnsemble::new(2, 1.0, f64::INFINITY, p.clone()).unwrap(), &sched, &sys, &cfg).unwrap();
        assert_eq!(even.avg_work, 0.0);
        let odd = fermi_outcoupled_work(&FermiEnsemble::new(3, 1.0, f64::INFINITY, p.clone()).unwrap(), &sched, &sys, &cfg).unwrap();
        let one = fermi_outcoupled_work(&FermiEnsemble::new(1, 1.0, f64::INFINITY, p).unwrap(), &sched, &sys, &cfg).unwrap();
        assert!(one.avg_work > 0.0);
        assert!((odd.avg_work - one.avg_work).abs() < 1e-15);
        assert_eq!(odd.enhancement_ratio, Some(1.0));
    }
}
