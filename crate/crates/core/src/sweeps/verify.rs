//! The built-in verification battery behind `qstat verify`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::figures::{run_figure, FigureId};
use super::Assertion;
use crate::analytics::checks::{asymptotic_checks, verify_inequalities, verify_inequalities_random};
use crate::analytics::moments::{moment_f, moment_h};
use crate::analytics::work::general_probability;
use crate::error::Result;
use crate::hilbert::{DenseOperator, SpaceKind};
use crate::linalg::{compensated_sum, C64};
use crate::protocols::{CouplingSchedule, EngineParams, ExternalSystem, Statistics};

/// Which parts of the battery to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Battery {
    /// Also regenerate the figures that need time evolution (minutes).
    pub numerical_figures: bool,
    pub seed: u64,
}

impl Default for Battery {
    fn default() -> Self {
        Battery {
            numerical_figures: true,
            seed: 7,
        }
    }
}

fn outcome(name: &str, r: Result<(bool, String)>) -> Assertion {
    match r {
        Ok((pass, detail)) => Assertion::new(name, pass, detail),
        Err(e) => Assertion::new(name, false, format!("error: {e}")),
    }
}

/// Runs every check and returns one assertion per check.
pub fn run_battery(b: Battery) -> Vec<Assertion> {
    let mut out = vec![
        outcome("thermal moments match direct summation", moment_oracle()),
        outcome("inequalities on a 60 x 40 grid", grid_inequalities()),
        outcome("inequalities on 10^4 random draws", random_inequalities(b.seed)),
        outcome("second-moment asymptotics", asymptotics()),
        outcome("Delta = 0 dominance on random instances", dominance(b.seed, 200)),
    ];
    for id in FigureId::ALL {
        let numerical = matches!(id, FigureId::Fig3a | FigureId::Fig3b);
        if numerical && !b.numerical_figures {
            continue;
        }
        match run_figure(id, None) {
            Ok(f) => out.extend(f.assertions.into_iter().map(|mut a| {
                a.name = format!("{}: {}", id.as_str(), a.name);
                a
            })),
            Err(e) => out.push(Assertion::new(id.as_str(), false, format!("error: {e}"))),
        }
    }
    out
}

/// ⟨m⟩ and ⟨m²⟩ of e^{−2xm} over m = −N/2..N/2, summed term by term.
pub fn direct_moments(n: u32, x: f64) -> (f64, f64) {
    let ms: Vec<f64> = (0..=n).map(|k| k as f64 - n as f64 / 2.0).collect();
    let shift = ms.iter().map(|m| -2.0 * x * m).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ms.iter().map(|m| (-2.0 * x * m - shift).exp()).collect();
    let z = compensated_sum(w.iter().copied());
    let h = compensated_sum(ms.iter().zip(&w).map(|(m, w)| m * w)) / z;
    let f = compensated_sum(ms.iter().zip(&w).map(|(m, w)| m * m * w)) / z;
    (h, f)
}

fn moment_oracle() -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for n in 1..=60 {
        for x in [1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 50.0] {
            let (h, f) = direct_moments(n, x);
            worst = worst.max((moment_h(n, x)? - h).abs()).max((moment_f(n, x)? - f).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max absolute deviation {worst:.2e}")))
}

fn grid_inequalities() -> Result<(bool, String)> {
    let grid: Vec<f64> = (0..40).map(|k| 1e-3 * (5e4f64).powf(k as f64 / 39.0)).collect();
    let r = verify_inequalities(60, &grid)?;
    Ok((
        r.n1_max_deviation < 1e-12,
        format!("{} cells, N = 1 equality to {:.1e}", r.cells, r.n1_max_deviation),
    ))
}

fn random_inequalities(seed: u64) -> Result<(bool, String)> {
    let r = verify_inequalities_random(60, 10_000, seed)?;
    Ok((true, format!("{} cells", r.cells)))
}

fn asymptotics() -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for x in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let r = asymptotic_checks(x, &[500])?;
        worst = worst.max((r.slope_exact / r.slope_coth - 1.0).abs());
    }
    Ok((worst < 1e-3, format!("large-N slope within {worst:.2e} of coth")))
}

/// A random Δ = 0 instance: engine, schedule and a generic driven system.
pub fn random_instance(rng: &mut impl Rng) -> Result<(EngineParams, CouplingSchedule, ExternalSystem)> {
    let n = rng.gen_range(2..=6);
    let period = rng.gen_range(5.0..40.0);
    let (omega0, v) = (rng.gen_range(0.5..2.0), rng.gen_range(0.01..0.2));
    let beta_c_e0 = rng.gen_range(0.1..4.0);
    // Keep β_h below β_c.
    let stretch = (omega0 + v * period / 2.0) / omega0;
    let beta_h_ehalf = beta_c_e0 * stretch * rng.gen_range(0.05..0.9);
    let params =
        EngineParams::with_bath_products(n, omega0, 0.0, v, period, beta_c_e0, beta_h_ehalf, Statistics::Bose)?;
    let schedule = if rng.gen_bool(0.5) {
        CouplingSchedule::smooth_plateau(
            rng.gen_range(0.001..0.1),
            rng.gen_range(0.3..0.9),
            rng.gen_range(1000.0..3000.0) / period,
            period,
        )?
    } else {
        let k = rng.gen_range(3..12);
        let times: Vec<f64> = (0..k).map(|j| period * j as f64 / (k - 1) as f64).collect();
        let values: Vec<f64> = (0..k)
            .map(|j| if j == 0 || j == k - 1 { 0.0 } else { rng.gen_range(-0.02..0.02) })
            .collect();
        CouplingSchedule::sampled(times, values)?
    };
    let d = rng.gen_range(2..=5);
    let mut energies = vec![0.0];
    for _ in 1..d {
        let last = *energies.last().expect("nonempty");
        energies.push(last + rng.gen_range(0.01..3.0));
    }
    let mut v = Array2::<C64>::zeros((d, d));
    for i in 0..d {
        v[[i, i]] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in 0..i {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            v[[i, j]] = z;
            v[[j, i]] = z.conj();
        }
    }
    let system = ExternalSystem::new(energies, DenseOperator::new(SpaceKind::Generic(d), v)?, "random")?;
    Ok((params, schedule, system))
}

/// p_i(indistinguishable) ≥ p_i(distinguishable) at every level of
/// `draws` random Δ = 0 instances.
pub fn dominance(seed: u64, draws: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut levels = 0;
    for _ in 0..draws {
        let (p, s, sys) = random_instance(&mut rng)?;
        for i in 1..sys.dim() {
            let pi = general_probability(&p, &s, &sys, Statistics::Bose, i)?;
            let pd = general_probability(&p, &s, &sys, Statistics::Distinguishable, i)?;
            worst = worst.min(pi - pd);
            levels += 1;
        }
    }
    Ok((
        worst >= -1e-12,
        format!("{levels} levels, min p_indist - p_dist = {worst:.3e}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_moments_of_one_atom() {
        let x: f64 = 0.7;
        let (h, f) = direct_moments(1, x);
        assert!((h + 0.5 * x.tanh()).abs() < 1e-15);
        assert!((f - 0.25).abs() < 1e-15);
    }

    #[test]
    fn analytic_battery_passes() {
        for a in run_battery(Battery {
            numerical_figures: false,
            seed: 3,
        }) {
            assert!(a.pass, "{a}");
        }
    }
}
