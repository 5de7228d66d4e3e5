//! Two-time correlators and one-time averages of V_R in the interaction
//! picture, under the adiabatic engine propagator.

use serde::{Deserialize, Serialize};

use super::moments::MomentSet;
use crate::error::Result;
use crate::linalg::{C64, I};
use crate::protocols::{EngineParams, Statistics, Stroke};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorValue {
    pub value: C64,
    /// True when t and t' straddle the reset at T/2 and the value is the
    /// product of one-time averages.
    pub factorized: bool,
}

/// Which printed form of the indistinguishable one-time average to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingleAvgVariant {
    /// 2 cos θ_t ⟨m⟩ and −N cos θ_t tanh x: the trace of V_R against the
    /// thermal state.
    FirstMoment,
    /// 2 cos θ_t ⟨m²⟩ and +N cos θ_t tanh x, literally as printed.
    AsPrinted,
}

/// The variant used by every composite formula in this crate; it is the
/// one that reproduces the Dicke-sector trace.
pub const SINGLE_AVG_DEFAULT: SingleAvgVariant = SingleAvgVariant::FirstMoment;

fn tanh_x(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        x.tanh()
    }
}

/// ⟨V_R^{(I)}(t')V_R^{(I)}(t)⟩ for `statistics`.
pub fn correlator(params: &EngineParams, t: f64, t_prime: f64, statistics: Statistics) -> Result<CorrelatorValue> {
    let s = Stroke::containing(t, params.period);
    let sp = Stroke::containing(t_prime, params.period);
    if s != sp {
        let a = single_avg(params, t, statistics)?;
        let b = single_avg(params, t_prime, statistics)?;
        return Ok(CorrelatorValue {
            value: C64::new(a * b, 0.0),
            factorized: true,
        });
    }
    let (c, sn) = params.angle_cos_sin(t)?;
    let (cp, snp) = params.angle_cos_sin(t_prime)?;
    let phi = params.phase_in(s, t_prime)? - params.phase_in(s, t)?;
    let x = params.stroke_x(s)?;
    let n = params.n;
    let value = match statistics {
        Statistics::Bose => {
            let m = MomentSet::new(n, x)?;
            let j = m.casimir();
            let ladder = (-I * phi).exp() * (j - m.f_plus) + (I * phi).exp() * (j - m.f_minus);
            4.0 * c * cp * m.f + sn * snp * ladder
        }
        Statistics::Distinguishable => {
            let nf = n as f64;
            let th = tanh_x(x);
            let ladder = (I * phi).exp() * (1.0 - th) + (-I * phi).exp() * (1.0 + th);
            c * cp * (nf + nf * (nf - 1.0) * th * th) + 0.5 * nf * sn * snp * ladder
        }
    };
    Ok(CorrelatorValue {
        value,
        factorized: false,
    })
}

pub fn correlator_indist(params: &EngineParams, t: f64, t_prime: f64) -> Result<CorrelatorValue> {
    correlator(params, t, t_prime, Statistics::Bose)
}

pub fn correlator_dist(params: &EngineParams, t: f64, t_prime: f64) -> Result<CorrelatorValue> {
    correlator(params, t, t_prime, Statistics::Distinguishable)
}

/// ⟨V_R^{(I)}(t)⟩ against the state that opened the stroke containing t.
pub fn single_avg(params: &EngineParams, t: f64, statistics: Statistics) -> Result<f64> {
    single_avg_variant(params, t, statistics, SINGLE_AVG_DEFAULT)
}

pub fn single_avg_as_printed(params: &EngineParams, t: f64, statistics: Statistics) -> Result<f64> {
    single_avg_variant(params, t, statistics, SingleAvgVariant::AsPrinted)
}

pub fn single_avg_variant(
    params: &EngineParams,
    t: f64,
    statistics: Statistics,
    variant: SingleAvgVariant,
) -> Result<f64> {
    let s = Stroke::containing(t, params.period);
    let (c, _) = params.angle_cos_sin(t)?;
    let x = params.stroke_x(s)?;
    let n = params.n;
    Ok(match (statistics, variant) {
        (Statistics::Bose, SingleAvgVariant::FirstMoment) => 2.0 * c * MomentSet::new(n, x)?.h,
        (Statistics::Bose, SingleAvgVariant::AsPrinted) => 2.0 * c * MomentSet::new(n, x)?.f,
        (Statistics::Distinguishable, SingleAvgVariant::FirstMoment) => -(n as f64) * c * tanh_x(x),
        (Statistics::Distinguishable, SingleAvgVariant::AsPrinted) => n as f64 * c * tanh_x(x),
    })
}
