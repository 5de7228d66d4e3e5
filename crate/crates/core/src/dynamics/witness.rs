use ndarray::linalg::general_mat_mul;

use super::engine::Block;
use super::PropagatorConfig;
use crate::error::{Error, Result};
use crate::linalg::{dagger, C64};
use crate::protocols::{EngineParams, Stroke};

/// max over t, m and both strokes of 1 − |⟨m,θ_t|ψ_m(t)⟩|², with ψ_m started
/// in |m,θ_{t0}⟩ at the beginning of each stroke and evolved by the engine
/// Hamiltonian alone.
pub fn adiabaticity_witness(params: &EngineParams, config: &PropagatorConfig) -> Result<f64> {
    params.validate()?;
    let dt_max = match config.dt {
        Some(dt) if dt.is_finite() && dt > 0.0 => dt,
        Some(dt) => return Err(Error::Config(format!("dt must be positive, got {dt}"))),
        None => 0.01 / (params.n as f64 * params.max_gap()?),
    };
    let block = Block::spin(params.n, 1.0)?;
    let mut worst = 0.0_f64;
    for stroke in Stroke::BOTH {
        let (t0, t1) = (stroke.start(params.period), stroke.end(params.period));
        let n = ((t1 - t0) / dt_max).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        let (_, mut m) = block.eigen(params, t0)?;
        let mut tmp = m.clone();
        for k in 0..n {
            let f = block.free_factor(params, t0 + (k as f64 + 0.5) * h, h)?;
            general_mat_mul(C64::new(1.0, 0.0), &f, &m, C64::new(0.0, 0.0), &mut tmp);
            std::mem::swap(&mut m, &mut tmp);
            let (_, v) = block.eigen(params, t0 + (k + 1) as f64 * h)?;
            let ov = dagger(&v.view()).dot(&m);
            for i in 0..block.dim {
                worst = worst.max(1.0 - ov[[i, i]].norm_sqr());
            }
        }
    }
    Ok(worst.max(0.0))
}
