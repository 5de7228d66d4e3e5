//! Time-parameterized descriptions of the Otto cycle: the gap drive Ω(t),
//! the engine–system coupling profile g_C(t), and the driven external system.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DenseOperator, SpaceKind};
use crate::linalg::{c, hermiticity_error};

/// Exchange statistics of the engine ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistics {
    /// Indistinguishable bosons: dynamics confined to the symmetric (Dicke) sector.
    Bose,
    /// Distinguishable atoms on the full tensor-product space.
    Distinguishable,
}

/// Direction in which the gap |Ω| moves during the first (compression) stroke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapDirection {
    #[default]
    Increasing,
    Decreasing,
}

/// The two unitary strokes of the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stroke {
    /// `0 ≤ t ≤ T/2`, engine prepared by the cold bath.
    Compression,
    /// `T/2 ≤ t ≤ T`, engine prepared by the hot bath.
    Expansion,
}

impl Stroke {
    pub fn start(self, period: f64) -> f64 {
        match self {
            Stroke::Compression => 0.0,
            Stroke::Expansion => 0.5 * period,
        }
    }

    pub fn end(self, period: f64) -> f64 {
        self.start(period) + 0.5 * period
    }

    /// Stroke containing `t`; the instant `T/2` belongs to the compression stroke.
    pub fn containing(t: f64, period: f64) -> Stroke {
        if t <= 0.5 * period {
            Stroke::Compression
        } else {
            Stroke::Expansion
        }
    }

    pub const BOTH: [Stroke; 2] = [Stroke::Compression, Stroke::Expansion];
}

/// Drive protocol, gap parameters and bath temperatures of the N-engine ensemble.
///
/// Energies are in units with ħ = 1. `v` is the magnitude of the linear sweep
/// speed; its direction is set by `gap_direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    pub n: u32,
    pub omega0: f64,
    pub delta: f64,
    pub v: f64,
    pub period: f64,
    pub beta_c: f64,
    pub beta_h: f64,
    pub statistics: Statistics,
    #[serde(default)]
    pub gap_direction: GapDirection,
}

impl EngineParams {
    /// Builds parameters with the bath temperatures fixed through the
    /// dimensionless products `β_c E_0` and `β_h E_{T/2}`.
    #[allow(clippy::too_many_arguments)]
    pub fn with_bath_products(
        n: u32,
        omega0: f64,
        delta: f64,
        v: f64,
        period: f64,
        beta_c_e0: f64,
        beta_h_ehalf: f64,
        statistics: Statistics,
    ) -> Result<Self> {
        let mut p = EngineParams {
            n,
            omega0,
            delta,
            v,
            period,
            beta_c: 1.0,
            beta_h: 0.0,
            statistics,
            gap_direction: GapDirection::Increasing,
        };
        p.set_bath_products(beta_c_e0, beta_h_ehalf)?;
        Ok(p)
    }

    /// Re-derives `beta_c`, `beta_h` from `β_c E_0` and `β_h E_{T/2}` using the
    /// current drive.
    pub fn set_bath_products(&mut self, beta_c_e0: f64, beta_h_ehalf: f64) -> Result<()> {
        let e0 = self.gap(0.0)?;
        let eh = self.gap(0.5 * self.period)?;
        if e0 <= 0.0 || eh <= 0.0 {
            return Err(Error::DegenerateHamiltonian(
                "bath products need a nonzero gap at t = 0 and t = T/2".into(),
            ));
        }
        self.beta_c = beta_c_e0 / e0;
        self.beta_h = beta_h_ehalf / eh;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidArgument(format!("period must be positive, got {}", self.period)));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("Δ must be non-negative, got {}", self.delta)));
        }
        if !self.omega0.is_finite() || !self.v.is_finite() {
            return Err(Error::InvalidArgument("Ω(0) and v must be finite".into()));
        }
        if !(self.beta_h >= 0.0 && self.beta_c > self.beta_h) {
            return Err(Error::InvalidArgument(format!(
                "engine regime needs β_c > β_h ≥ 0, got β_c = {}, β_h = {}",
                self.beta_c, self.beta_h
            )));
        }
        if self.delta == 0.0 {
            // Ω is linear on each stroke, so a sign change strictly inside
            // the stroke is detected from its endpoint values.
            let a = self.omega_of_t(0.0)?;
            let b = self.omega_of_t(0.5 * self.period)?;
            if a * b < 0.0 || (a == 0.0 && b == 0.0) {
                return Err(Error::DegenerateHamiltonian(
                    "with Δ = 0 the drive closes the gap inside a stroke".into(),
                ));
            }
        }
        Ok(())
    }

    fn slope(&self) -> f64 {
        match self.gap_direction {
            GapDirection::Increasing => self.v.abs(),
            GapDirection::Decreasing => -self.v.abs(),
        }
    }

    /// Piecewise-linear drive: Ω(0) + s·t on the compression stroke and
    /// Ω(0) + s·(T − t) on the expansion stroke, so that Ω(T) = Ω(0).
    pub fn omega_of_t(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.period).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.period)));
        }
        let s = self.slope();
        Ok(if t <= 0.5 * self.period {
            self.omega0 + s * t
        } else {
            self.omega0 + s * (self.period - t)
        })
    }

    /// dΩ/dt on the stroke containing `t`.
    pub fn omega_rate(&self, stroke: Stroke) -> f64 {
        match stroke {
            Stroke::Compression => self.slope(),
            Stroke::Expansion => -self.slope(),
        }
    }

    /// Instantaneous gap parameter E_t = √(Ω(t)² + Δ²).
    pub fn gap(&self, t: f64) -> Result<f64> {
        Ok(self.omega_of_t(t)?.hypot(self.delta))
    }

    /// `(cos θ_t, sin θ_t)` with tan θ_t = −Ω(t)/Δ and θ ∈ [−π/2, π/2].
    pub fn angle_cos_sin(&self, t: f64) -> Result<(f64, f64)> {
        let omega = self.omega_of_t(t)?;
        let e = omega.hypot(self.delta);
        if e == 0.0 {
            return Err(Error::DegenerateHamiltonian(format!("Ω = Δ = 0 at t = {t}")));
        }
        Ok((self.delta / e, -omega / e))
    }

    pub fn theta(&self, t: f64) -> Result<f64> {
        let (cos, sin) = self.angle_cos_sin(t)?;
        Ok(sin.atan2(cos))
    }

    /// Inverse temperature of the bath that prepared the stroke.
    pub fn stroke_beta(&self, stroke: Stroke) -> f64 {
        match stroke {
            Stroke::Compression => self.beta_c,
            Stroke::Expansion => self.beta_h,
        }
    }

    /// `β_{t0} E_{t0}` for the stroke starting at t0.
    pub fn stroke_x(&self, stroke: Stroke) -> Result<f64> {
        Ok(self.stroke_beta(stroke) * self.gap(stroke.start(self.period))?)
    }

    /// Adiabatic phase φ(t, t0) = ∫_{t0}^{t} 2E_{t'} dt' with t0 the start of
    /// the stroke containing `t`, in closed form for the linear sweep.
    pub fn phase(&self, t: f64) -> Result<f64> {
        self.phase_in(Stroke::containing(t, self.period), t)
    }

    /// φ(t, t0) measured from the start of `stroke`; `t` must lie in it.
    pub fn phase_in(&self, stroke: Stroke, t: f64) -> Result<f64> {
        let t0 = stroke.start(self.period);
        if t < t0 - 1e-12 * self.period || t > stroke.end(self.period) + 1e-12 * self.period {
            return Err(Error::Domain(format!("t = {t} is outside the {stroke:?} stroke")));
        }
        if t == t0 {
            return Ok(0.0);
        }
        let rate = self.omega_rate(stroke);
        let wa = self.omega_of_t(t0)?;
        if rate == 0.0 {
            return Ok(2.0 * wa.hypot(self.delta) * (t - t0));
        }
        let wb = wa + rate * (t - t0);
        Ok(2.0 * (gap_antiderivative(wb, self.delta) - gap_antiderivative(wa, self.delta)) / rate)
    }

    /// Largest gap E_t over the cycle.
    pub fn max_gap(&self) -> Result<f64> {
        Ok(self.gap(0.0)?.max(self.gap(0.5 * self.period)?))
    }
}

/// Antiderivative of √(Ω² + Δ²) with respect to Ω.
fn gap_antiderivative(omega: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        0.5 * omega * omega.abs()
    } else {
        0.5 * (omega * omega.hypot(delta) + delta * delta * (omega / delta).asinh())
    }
}

/// Time profile g_C(t) of the engine–system coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingSchedule {
    /// g δ(t − t1).
    Impulse { g: f64, t1: f64 },
    /// Two tanh-switched plateaus of area `g` each, one per stroke.
    SmoothPlateau {
        g: f64,
        delta_t: f64,
        alpha: f64,
        t_on: f64,
        t_off: f64,
        period: f64,
    },
    /// Piecewise-linear interpolation of samples; zero outside the sampled span.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl CouplingSchedule {
    /// Plateau schedule with the standard switching times
    /// t_on = (1 − δ_t)T/4 and t_off = t_on + δ_t T/2.
    pub fn smooth_plateau(g: f64, delta_t: f64, alpha: f64, period: f64) -> Result<Self> {
        let t_on = (1.0 - delta_t) * period / 4.0;
        let s = CouplingSchedule::SmoothPlateau {
            g,
            delta_t,
            alpha,
            t_on,
            t_off: t_on + delta_t * period / 2.0,
            period,
        };
        s.validate(period)?;
        Ok(s)
    }

    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidArgument(
                "sampled schedule needs at least two (time, value) pairs".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("sample times must increase strictly".into()));
        }
        Ok(CouplingSchedule::Sampled { times, values })
    }

    pub fn validate(&self, period: f64) -> Result<()> {
        match self {
            CouplingSchedule::Impulse { g, t1 } => {
                if !g.is_finite() {
                    return Err(Error::InvalidArgument("impulse strength must be finite".into()));
                }
                if !(*t1 > 0.0 && *t1 < period) || *t1 == 0.5 * period {
                    return Err(Error::InvalidArgument(format!(
                        "impulse time must lie in (0, T) away from T/2, got {t1}"
                    )));
                }
            }
            CouplingSchedule::SmoothPlateau {
                g,
                delta_t,
                alpha,
                t_on,
                t_off,
                period: own,
            } => {
                if (*own - period).abs() > 1e-12 * period {
                    return Err(Error::InvalidArgument(format!(
                        "schedule period {own} differs from engine period {period}"
                    )));
                }
                if !(*delta_t > 0.0 && *delta_t < 1.0) || !(*alpha > 0.0) || !g.is_finite() {
                    return Err(Error::InvalidArgument(
                        "plateau needs 0 < δ_t < 1, α > 0 and finite g".into(),
                    ));
                }
                if !(*t_on < *t_off) {
                    return Err(Error::InvalidArgument("t_on must precede t_off".into()));
                }
                let plateau = 2.0 * g.abs() / (delta_t * period);
                let edge = self.g_of_t(0.0)?.abs().max(self.g_of_t(period)?.abs());
                if plateau > 0.0 && edge >= 1e-6 * plateau / 2.0 {
                    return Err(Error::InvalidArgument(format!(
                        "coupling is not switched off at the cycle endpoints (g_C = {edge:.3e})"
                    )));
                }
            }
            CouplingSchedule::Sampled { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(Error::InvalidArgument("malformed sampled schedule".into()));
                }
            }
        }
        Ok(())
    }

    /// Pointwise coupling rate; not defined for the impulse variant.
    pub fn g_of_t(&self, t: f64) -> Result<f64> {
        match self {
            CouplingSchedule::Impulse { .. } => Err(Error::InvalidVariant(
                "an impulse has no pointwise value; apply it as a finite kick".into(),
            )),
            CouplingSchedule::SmoothPlateau {
                g,
                delta_t,
                alpha,
                t_on,
                t_off,
                period,
            } => {
                if !(0.0..=*period).contains(&t) {
                    return Err(Error::Domain(format!("t = {t} outside [0, {period}]")));
                }
                let mut sum = 0.0;
                for n in 0..2 {
                    let shift = n as f64 * period / 2.0;
                    sum += (alpha * (t - t_on - shift)).tanh() - (alpha * (t - t_off - shift)).tanh();
                }
                Ok(g / (delta_t * period) * sum)
            }
            CouplingSchedule::Sampled { times, values } => {
                let last = times.len() - 1;
                if t < times[0] || t > times[last] {
                    return Ok(0.0);
                }
                let k = times.partition_point(|&s| s <= t).min(last).max(1);
                let (ta, tb) = (times[k - 1], times[k]);
                let w = (t - ta) / (tb - ta);
                Ok(values[k - 1] * (1.0 - w) + values[k] * w)
            }
        }
    }

    /// Points inside `[a, b]` where the profile changes character (switching
    /// edges, sample nodes, the impulse instant); used to split integrals.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = vec![a, b];
        match self {
            CouplingSchedule::Impulse { t1, .. } => pts.push(*t1),
            CouplingSchedule::SmoothPlateau {
                alpha,
                t_on,
                t_off,
                period,
                ..
            } => {
                let w = 8.0 / alpha;
                for n in 0..2 {
                    let shift = n as f64 * period / 2.0;
                    for edge in [t_on + shift, t_off + shift] {
                        pts.extend([edge - w, edge - w / 4.0, edge, edge + w / 4.0, edge + w]);
                    }
                }
            }
            CouplingSchedule::Sampled { times, .. } => pts.extend(times.iter().copied()),
        }
        pts.retain(|&t| t >= a && t <= b);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
        pts
    }

    /// Integrated coupling over `[0, period]`.
    pub fn total_area(&self, period: f64) -> Result<f64> {
        match self {
            CouplingSchedule::Impulse { g, .. } => Ok(*g),
            CouplingSchedule::Sampled { times, values } => Ok(times
                .windows(2)
                .zip(values.windows(2))
                .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
                .sum()),
            CouplingSchedule::SmoothPlateau {
                g,
                delta_t,
                alpha,
                t_on,
                t_off,
                period: own,
            } => {
                // ∫ tanh(α(t − c)) dt = ln cosh(α(t − c)) / α, evaluated stably.
                let lncosh = |y: f64| y.abs() + (-2.0 * y.abs()).exp().ln_1p() - std::f64::consts::LN_2;
                let prim = |t: f64| -> f64 {
                    let mut s = 0.0;
                    for n in 0..2 {
                        let shift = n as f64 * own / 2.0;
                        s += (lncosh(alpha * (t - t_on - shift)) - lncosh(alpha * (t - t_off - shift))) / alpha;
                    }
                    s
                };
                Ok(g / (delta_t * own) * (prim(period) - prim(0.0)))
            }
        }
    }

    pub fn is_impulse(&self) -> bool {
        matches!(self, CouplingSchedule::Impulse { .. })
    }
}

/// The driven system S: its spectrum (ε_0 = 0, ascending) and coupling operator V_S
/// written in the energy eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSystem {
    pub energies: Vec<f64>,
    pub v_s: DenseOperator,
    pub label: String,
}

impl ExternalSystem {
    pub fn new(energies: Vec<f64>, v_s: DenseOperator, label: impl Into<String>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::InvalidArgument("external system needs at least two levels".into()));
        }
        if energies[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "ground energy must be 0, got {}",
                energies[0]
            )));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) || energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("energies must be finite and ascending".into()));
        }
        if v_s.dim() != energies.len() {
            return Err(Error::InvalidArgument(format!(
                "V_S has dimension {} but the spectrum has {} levels",
                v_s.dim(),
                energies.len()
            )));
        }
        if hermiticity_error(&v_s.matrix.view()) > 1e-12 {
            return Err(Error::InvalidArgument("V_S must be Hermitian".into()));
        }
        Ok(ExternalSystem {
            energies,
            v_s,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn is_truncated_oscillator(&self) -> bool {
        matches!(self.v_s.space, SpaceKind::HoTruncated(_))
    }
}

/// Harmonic oscillator H_S = ω c†c truncated to `dim` levels, with V_S = c† + c.
pub fn harmonic_system(omega: f64, dim: usize) -> Result<ExternalSystem> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("oscillator truncation must be ≥ 2, got {dim}")));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidArgument(format!("oscillator frequency must be positive, got {omega}")));
    }
    let mut v = Array2::zeros((dim, dim));
    for i in 1..dim {
        let amp = c((i as f64).sqrt());
        v[[i, i - 1]] = amp;
        v[[i - 1, i]] = amp;
    }
    let energies = (0..dim).map(|i| i as f64 * omega).collect();
    ExternalSystem::new(
        energies,
        DenseOperator::new(SpaceKind::HoTruncated(dim), v)?,
        format!("harmonic oscillator ω = {omega}"),
    )
}
