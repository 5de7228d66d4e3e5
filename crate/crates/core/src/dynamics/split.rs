//! Ensemble propagation with the Strang-split midpoint step.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3, Axis};

use super::engine::{blocks_for, gibbs_ensemble, Block};
#[cfg(test)]
use super::engine::Backend;
use super::{finish, max_step, top_leakage, CycleResult, Diagnostics, PropagatorConfig, TraceRow};
use crate::error::Result;
use crate::hilbert::Beta;
use crate::linalg::{dagger, eigh, hermiticity_error, polish_unitary, C64, I};
use crate::protocols::{CouplingSchedule, EngineParams, ExternalSystem, Statistics, Stroke};

/// V_S eigenbasis and H_S spectrum.
struct SystemFrame {
    energies: Vec<f64>,
    w: Array2<C64>,
    w_dag: Array2<C64>,
    s: Vec<f64>,
}

impl SystemFrame {
    fn new(system: &ExternalSystem) -> Result<Self> {
        let (s, w) = eigh(&system.v_s.matrix.view())?;
        Ok(SystemFrame {
            energies: system.energies.clone(),
            w_dag: dagger(&w.view()),
            w,
            s: s.to_vec(),
        })
    }

    fn dim(&self) -> usize {
        self.energies.len()
    }

    /// S_f^T with S_f = W† exp(−iH_S dt) W.
    fn step_transposed(&self, dt: f64) -> Array2<C64> {
        let ph = Array1::from_iter(self.energies.iter().map(|e| (-I * e * dt).exp()));
        let sf = self.w_dag.dot(&(&self.w * &ph.insert_axis(Axis(1))));
        polish_unitary(sf).t().to_owned()
    }

    fn free(&self, sigma: &mut Array2<C64>, tau: f64) {
        if tau == 0.0 {
            return;
        }
        let ph: Vec<C64> = self.energies.iter().map(|e| (-I * e * tau).exp()).collect();
        for ((i, j), z) in sigma.indexed_iter_mut() {
            *z *= ph[i] * ph[j].conj();
        }
    }
}

/// Pure states of one engine block paired with system vectors, in the
/// V_R ⊗ V_S eigenbasis.
struct Ensemble {
    weights: Vec<f64>,
    psi: Array3<C64>,
    buf: Array3<C64>,
}

struct Runner<'a> {
    params: &'a EngineParams,
    schedule: &'a CouplingSchedule,
    blocks: Vec<Block>,
    sys: SystemFrame,
    config: &'a PropagatorConfig,
    dt_max: f64,
    truncated: bool,
    diag: Diagnostics,
    trace: Vec<TraceRow>,
}

pub(super) fn run(
    params: &EngineParams,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
    statistics: Statistics,
    config: &PropagatorConfig,
) -> Result<CycleResult> {
    let (backend, blocks) = blocks_for(params.n, statistics, config.backend)?;
    let dt_max = max_step(params, system, config)?;
    let mut runner = Runner {
        params,
        schedule,
        blocks,
        sys: SystemFrame::new(system)?,
        config,
        dt_max,
        truncated: system.is_truncated_oscillator(),
        diag: Diagnostics::new(dt_max, backend, config.stepper),
        trace: Vec::new(),
    };
    let d = system.dim();
    let mut sigma = Array2::<C64>::zeros((d, d));
    sigma[[0, 0]] = C64::new(1.0, 0.0);
    let mut energies = Vec::with_capacity(2);
    for stroke in Stroke::BOTH {
        sigma = runner.stroke(stroke, sigma)?;
        energies.push(runner.observe(params.period * stroke_end_fraction(stroke), &sigma));
    }
    finish(system, sigma, energies, runner.diag, runner.trace, statistics)
}

fn stroke_end_fraction(stroke: Stroke) -> f64 {
    match stroke {
        Stroke::Compression => 0.5,
        Stroke::Expansion => 1.0,
    }
}

impl<'a> Runner<'a> {
    fn stroke(&mut self, stroke: Stroke, mut sigma: Array2<C64>) -> Result<Array2<C64>> {
        let period = self.params.period;
        let (t0, t1) = (stroke.start(period), stroke.end(period));
        let beta: Beta = self.params.stroke_beta(stroke).into();

        if let CouplingSchedule::Impulse { g, t1: tk } = *self.schedule {
            if Stroke::containing(tk, period) != stroke {
                self.sys.free(&mut sigma, t1 - t0);
                return Ok(sigma);
            }
            let n = steps_for(tk - t0, self.dt_max);
            let engine = self.engine_only(t0, beta, n, (tk - t0) / n.max(1) as f64)?;
            self.sys.free(&mut sigma, tk - t0);
            let mut ens = self.lift(engine, &sigma)?;
            for (blk, e) in self.blocks.iter().zip(ens.iter_mut()) {
                kick(blk, &self.sys, e, g);
            }
            let mut sigma = self.reduce(&ens)?;
            self.norm_drift(&ens);
            self.checkpoint(tk, &sigma);
            self.sys.free(&mut sigma, t1 - tk);
            return Ok(sigma);
        }

        let n = steps_for(t1 - t0, self.dt_max);
        let h = (t1 - t0) / n as f64;
        let g: Vec<f64> = (0..n)
            .map(|k| self.schedule.g_of_t(t0 + (k as f64 + 0.5) * h))
            .collect::<Result<_>>()?;
        let peak = g.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let cut = 1e-15 * peak;
        let (Some(first), Some(last)) = (g.iter().position(|x| x.abs() > cut), g.iter().rposition(|x| x.abs() > cut))
        else {
            self.sys.free(&mut sigma, t1 - t0);
            return Ok(sigma);
        };

        let engine = self.engine_only(t0, beta, first, h)?;
        self.sys.free(&mut sigma, first as f64 * h);
        let mut ens = self.lift(engine, &sigma)?;
        let sf_t = self.sys.step_transposed(h);
        let every = ((last + 1 - first) / 64).max(1);
        for k in first..=last {
            let tm = t0 + (k as f64 + 0.5) * h;
            for (blk, e) in self.blocks.iter().zip(ens.iter_mut()) {
                strang(blk, self.params, &self.sys, &sf_t, e, tm, h, g[k])?;
            }
            if (k - first + 1) % every == 0 && k != last {
                let sig = self.reduce(&ens)?;
                self.checkpoint(t0 + (k + 1) as f64 * h, &sig);
            }
        }
        self.diag.coupled_steps += last + 1 - first;
        let mut sigma = self.reduce(&ens)?;
        self.norm_drift(&ens);
        self.checkpoint(t0 + (last + 1) as f64 * h, &sigma);
        self.sys.free(&mut sigma, (n - 1 - last) as f64 * h);
        Ok(sigma)
    }

    /// Gibbs members at t0 evolved by `n` engine-only steps of size h. Per
    /// block: weights and members as columns.
    fn engine_only(&mut self, t0: f64, beta: Beta, n: usize, h: f64) -> Result<Vec<(Vec<f64>, Array2<C64>)>> {
        let gibbs = gibbs_ensemble(&self.blocks, self.params, t0, beta)?;
        let mut out = Vec::with_capacity(gibbs.len());
        for (blk, (w, v)) in self.blocks.iter().zip(gibbs) {
            let keep: Vec<usize> = (0..w.len()).filter(|&i| w[i] > self.config.prune_tol).collect();
            self.diag.pruned_weight += w.iter().enumerate().filter(|(i, _)| !keep.contains(i)).map(|(_, x)| x).sum::<f64>();
            let mut m = v.select(Axis(1), &keep);
            let weights: Vec<f64> = keep.iter().map(|&i| w[i]).collect();
            let mut tmp = m.clone();
            for k in 0..n {
                let f = blk.free_factor(self.params, t0 + (k as f64 + 0.5) * h, h)?;
                general_mat_mul(C64::new(1.0, 0.0), &f, &m, C64::new(0.0, 0.0), &mut tmp);
                std::mem::swap(&mut m, &mut tmp);
            }
            let drift = m
                .columns()
                .into_iter()
                .map(|c| (c.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs())
                .fold(0.0, f64::max);
            self.diag.unitarity_drift = self.diag.unitarity_drift.max(drift);
            out.push((weights, m));
        }
        Ok(out)
    }

    /// Pairs engine members with the eigenvectors of σ_S.
    fn lift(&mut self, engine: Vec<(Vec<f64>, Array2<C64>)>, sigma: &Array2<C64>) -> Result<Vec<Ensemble>> {
        let (lam, chi) = eigh(&sigma.view())?;
        let chi_w = self.sys.w_dag.dot(&chi);
        let ds = self.sys.dim();
        let mut out = Vec::with_capacity(engine.len());
        for (w, m) in engine {
            let de = m.nrows();
            let mut pairs = Vec::new();
            for (i, wi) in w.iter().enumerate() {
                for (j, lj) in lam.iter().enumerate() {
                    let wt = wi * lj;
                    if wt > self.config.prune_tol {
                        pairs.push((i, j, wt));
                    } else {
                        self.diag.pruned_weight += wt.max(0.0);
                    }
                }
            }
            let mut psi = Array3::<C64>::zeros((pairs.len(), de, ds));
            for (r, &(i, j, _)) in pairs.iter().enumerate() {
                let mut slab = psi.index_axis_mut(Axis(0), r);
                for a in 0..de {
                    let ea = m[[a, i]];
                    for b in 0..ds {
                        slab[[a, b]] = ea * chi_w[[b, j]];
                    }
                }
            }
            out.push(Ensemble {
                weights: pairs.iter().map(|p| p.2).collect(),
                buf: psi.clone(),
                psi,
            });
        }
        Ok(out)
    }

    /// σ_S in the energy basis.
    fn reduce(&mut self, ens: &[Ensemble]) -> Result<Array2<C64>> {
        let ds = self.sys.dim();
        let mut sig_w = Array2::<C64>::zeros((ds, ds));
        for e in ens {
            let (r, de, _) = e.psi.dim();
            if r == 0 {
                continue;
            }
            let mut a = e.psi.to_owned().into_shape((r * de, ds)).expect("contiguous ensemble");
            for (row, mut line) in a.rows_mut().into_iter().enumerate() {
                let sw = e.weights[row / de].sqrt();
                line.mapv_inplace(|z| z * sw);
            }
            let ac = a.mapv(|z| z.conj());
            general_mat_mul(C64::new(1.0, 0.0), &a.t(), &ac, C64::new(1.0, 0.0), &mut sig_w);
        }
        let sigma = self.sys.w.dot(&sig_w).dot(&self.sys.w_dag);
        self.diag.hermiticity_error = self.diag.hermiticity_error.max(hermiticity_error(&sigma.view()));
        Ok((&sigma + &dagger(&sigma.view())).mapv(|z| z * 0.5))
    }

    fn norm_drift(&mut self, ens: &[Ensemble]) {
        for e in ens {
            for slab in e.psi.outer_iter() {
                let n: f64 = slab.iter().map(|z| z.norm_sqr()).sum();
                self.diag.unitarity_drift = self.diag.unitarity_drift.max((n - 1.0).abs());
            }
        }
    }

    fn checkpoint(&mut self, t: f64, sigma: &Array2<C64>) {
        let pops: Vec<f64> = sigma.diag().iter().map(|z| z.re).collect();
        let leak = if self.truncated { top_leakage(&pops) } else { 0.0 };
        self.diag.truncation_leakage = self.diag.truncation_leakage.max(leak);
        if self.config.record_trace {
            self.trace.push(TraceRow {
                t,
                tr_rho: pops.iter().sum(),
                leakage: leak,
                h_s: pops.iter().zip(&self.sys.energies).map(|(p, e)| p * e).sum(),
            });
        }
    }

    fn observe(&mut self, t: f64, sigma: &Array2<C64>) -> f64 {
        self.checkpoint(t, sigma);
        sigma.diag().iter().zip(&self.sys.energies).map(|(p, e)| p.re * e).sum()
    }
}

fn steps_for(span: f64, dt_max: f64) -> usize {
    if span <= 0.0 {
        0
    } else {
        ((span / dt_max).ceil() as usize).max(1)
    }
}

/// Exact kick exp(−i g V_R ⊗ V_S), diagonal in the working basis.
fn kick(blk: &Block, sys: &SystemFrame, e: &mut Ensemble, g: f64) {
    let ph = coupling_phases(blk, sys, g);
    for mut slab in e.psi.outer_iter_mut() {
        slab *= &ph;
    }
}

fn coupling_phases(blk: &Block, sys: &SystemFrame, angle: f64) -> Array2<C64> {
    Array2::from_shape_fn((blk.dim, sys.dim()), |(a, b)| (-I * angle * blk.vr[a] * sys.s[b]).exp())
}

#[allow(clippy::too_many_arguments)]
fn strang(
    blk: &Block,
    params: &EngineParams,
    sys: &SystemFrame,
    sf_t: &Array2<C64>,
    e: &mut Ensemble,
    tm: f64,
    h: f64,
    g: f64,
) -> Result<()> {
    let (r, de, ds) = e.psi.dim();
    if r == 0 {
        return Ok(());
    }
    let half = coupling_phases(blk, sys, 0.5 * g * h);
    let f = blk.free_factor(params, tm, h)?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    for i in 0..r {
        let mut slab = e.psi.index_axis_mut(Axis(0), i);
        slab *= &half;
        general_mat_mul(one, &f, &slab, zero, &mut e.buf.slice_mut(s![i, .., ..]));
    }
    {
        let flat_in = e.buf.view().into_shape((r * de, ds)).expect("contiguous ensemble");
        let mut flat_out = e.psi.view_mut().into_shape((r * de, ds)).expect("contiguous ensemble");
        general_mat_mul(one, &flat_in, sf_t, zero, &mut flat_out);
    }
    for mut slab in e.psi.outer_iter_mut() {
        slab *= &half;
    }
    Ok(())
}
