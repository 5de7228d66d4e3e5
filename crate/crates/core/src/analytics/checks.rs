//! Inequality battery and large-/small-N asymptotics of the second moment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::moments::MomentSet;
use super::work::impulse_second_moment;
use crate::error::{Error, Result};
use crate::protocols::Statistics;

/// Margins (lhs − rhs) of the four inequalities at one (N, x, y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// N²/4 − f.
    pub f_upper: f64,
    /// 4f − [N + N(N−1)tanh²x].
    pub f_lower: f64,
    /// N/2(N/2+1) − (f + |h|) − N/2(1 − tanh x).
    pub ladder_plus: f64,
    /// N/2(N/2+1) − (f − |h|) − N/2(1 + tanh x).
    pub ladder_minus: f64,
    /// 4|h(x)||h(y)| − N² tanh x tanh y.
    pub cross: f64,
}

pub fn margins(n: u32, x: f64, y: f64) -> Result<Margins> {
    let mx = MomentSet::new(n, x)?;
    let my = MomentSet::new(n, y)?;
    let nf = n as f64;
    let (tx, ty) = (x.tanh(), y.tanh());
    let j = mx.casimir();
    let hp = mx.h_paper();
    Ok(Margins {
        f_upper: nf * nf / 4.0 - mx.f,
        f_lower: 4.0 * mx.f - (nf + nf * (nf - 1.0) * tx * tx),
        ladder_plus: j - (mx.f + hp) - 0.5 * nf * (1.0 - tx),
        ladder_minus: j - (mx.f - hp) - 0.5 * nf * (1.0 + tx),
        cross: 4.0 * hp * my.h_paper() - nf * nf * tx * ty,
    })
}

impl Margins {
    fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("f <= N^2/4", self.f_upper),
            ("4f >= N + N(N-1)tanh^2", self.f_lower),
            ("ladder(+)", self.ladder_plus),
            ("ladder(-)", self.ladder_minus),
            ("cross 4hh >= N^2 tanh tanh", self.cross),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub cells: usize,
    /// Smallest margin of each inequality over N ≥ 2 and its witness (N, x, y).
    pub worst: Vec<(String, f64, u32, f64, f64)>,
    /// Largest |margin| over N = 1, where every inequality is an equality.
    pub n1_max_deviation: f64,
}

/// Allowed rounding slack on a margin whose terms are of size `scale`.
fn slack(scale: f64) -> f64 {
    1e-13 * scale.max(1.0)
}

fn check_cell(report: &mut InequalityReport, n: u32, x: f64, y: f64) -> Result<()> {
    let m = margins(n, x, y)?;
    let scale = (n as f64).powi(2);
    for (k, (name, v)) in m.named().into_iter().enumerate() {
        if n == 1 {
            report.n1_max_deviation = report.n1_max_deviation.max(v.abs());
            continue;
        }
        if v < -slack(scale) {
            return Err(Error::InequalityViolation {
                name: name.to_string(),
                n,
                x,
                y,
                margin: v,
            });
        }
        if v < report.worst[k].1 {
            report.worst[k] = (name.to_string(), v, n, x, y);
        }
    }
    report.cells += 1;
    Ok(())
}

fn empty_report() -> InequalityReport {
    InequalityReport {
        cells: 0,
        worst: Margins {
            f_upper: 0.0,
            f_lower: 0.0,
            ladder_plus: 0.0,
            ladder_minus: 0.0,
            cross: 0.0,
        }
        .named()
        .iter()
        .map(|(n, _)| (n.to_string(), f64::INFINITY, 0, 0.0, 0.0))
        .collect(),
        n1_max_deviation: 0.0,
    }
}

/// Checks all inequalities for N ∈ [1, n_max] and every pair x, y of the grid.
pub fn verify_inequalities(n_max: u32, x_grid: &[f64]) -> Result<InequalityReport> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("N_max must be at least 2".into()));
    }
    if x_grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain("x grid must lie in (0, ∞)".into()));
    }
    let mut report = empty_report();
    for n in 1..=n_max {
        for &x in x_grid {
            for &y in x_grid {
                check_cell(&mut report, n, x, y)?;
            }
        }
    }
    Ok(report)
}

/// Same battery on `draws` random (N, x, y), with x, y log-uniform in
/// [1e-3, 50].
pub fn verify_inequalities_random(n_max: u32, draws: usize, seed: u64) -> Result<InequalityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = empty_report();
    let lo = 1e-3_f64.ln();
    let hi = 50.0_f64.ln();
    for _ in 0..draws {
        let n = rng.gen_range(1..=n_max);
        let x = rng.gen_range(lo..hi).exp();
        let y = rng.gen_range(lo..hi).exp();
        check_cell(&mut report, n, x, y)?;
    }
    Ok(report)
}

/// f₁(x) = x(x coth x − 1) cosh x / sinh³ x.
pub fn f1(x: f64) -> f64 {
    x * (x / x.tanh() - 1.0) * x.cosh() / x.sinh().powi(3)
}

/// f₂(x) = 1 − (x coth x − 1)/sinh² x.
pub fn f2(x: f64) -> f64 {
    1.0 - (x / x.tanh() - 1.0) / x.sinh().powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub n: u32,
    pub exact: f64,
    pub large_n: f64,
    pub small_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub x: f64,
    pub rows: Vec<AsymptoticRow>,
    /// Exact ⟨V²⟩(N+1) − ⟨V²⟩(N) at the largest N.
    pub slope_exact: f64,
    pub slope_coth: f64,
    /// f₁(x) + f₂(x), the small-N form at N = 1.
    pub small_n_at_one: f64,
    /// N at which N·x = 1.
    pub crossover_n: f64,
}

/// Exact Δ = 0 indistinguishable second moment against its large-N line and
/// small-N quadratic.
pub fn asymptotic_checks(x: f64, ns: &[u32]) -> Result<AsymptoticReport> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    let coth = 1.0 / x.tanh();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let nf = n as f64;
        rows.push(AsymptoticRow {
            n,
            exact: impulse_second_moment(n, x, 0.0, Statistics::Bose)?,
            large_n: coth * nf - (coth - 1.0) * coth,
            small_n: f1(x) * nf * nf + f2(x) * nf,
        });
    }
    let n_top = ns.iter().copied().max().unwrap_or(1);
    let slope_exact =
        impulse_second_moment(n_top + 1, x, 0.0, Statistics::Bose)? - impulse_second_moment(n_top, x, 0.0, Statistics::Bose)?;
    Ok(AsymptoticReport {
        x,
        rows,
        slope_exact,
        slope_coth: coth,
        small_n_at_one: f1(x) + f2(x),
        crossover_n: 1.0 / x,
    })
}
