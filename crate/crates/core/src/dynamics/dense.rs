//! Reference propagation of the full composite density matrix.

use ndarray::{s, Array2};

use super::engine::Backend;
use super::{finish, max_step, top_leakage, CycleResult, Diagnostics, PropagatorConfig, Stepper, TraceRow};
use crate::error::{Error, Result};
use crate::hilbert::{
    collective_spin_ops, engine_hamiltonian, product_spin_ops_capped, thermal_state, Beta, DenseOperator,
    QuantumState, SpaceKind, MAX_DENSE_DIM,
};
use crate::linalg::{dagger, expm_hermitian, hermiticity_error, identity, kron, trace, unitarity_error, C64};
use crate::protocols::{CouplingSchedule, EngineParams, ExternalSystem, Statistics, Stroke};

/// Tr_E of an engine ⊗ system matrix.
pub fn partial_trace_engine(rho: &Array2<C64>, d_e: usize, d_s: usize) -> Array2<C64> {
    let mut out = Array2::zeros((d_s, d_s));
    for e in 0..d_e {
        out += &rho.slice(s![e * d_s..(e + 1) * d_s, e * d_s..(e + 1) * d_s]);
    }
    out
}

/// Tr_S of an engine ⊗ system matrix.
pub fn partial_trace_system(rho: &Array2<C64>, d_e: usize, d_s: usize) -> Array2<C64> {
    Array2::from_shape_fn((d_e, d_e), |(a, b)| (0..d_s).map(|s| rho[[a * d_s + s, b * d_s + s]]).sum())
}

fn split_dims(state: &QuantumState) -> Result<(SpaceKind, SpaceKind)> {
    match &state.space {
        SpaceKind::Composite(e, s) => Ok(((**e).clone(), (**s).clone())),
        other => Err(Error::InvalidSpace(format!("expected an engine ⊗ system state, got {other:?}"))),
    }
}

/// ρ → UρU† with U = exp(−i g V_R ⊗ V_S), the integrated delta pulse at
/// the kick time in the Schrödinger picture.
pub fn apply_impulse(state: &QuantumState, g: f64, v_r: &DenseOperator, v_s: &DenseOperator) -> Result<QuantumState> {
    let (e, s) = split_dims(state)?;
    if v_r.space != e || v_s.space != s {
        return Err(Error::InvalidSpace("coupling operators do not match the state's factors".into()));
    }
    if g == 0.0 {
        return Ok(state.clone());
    }
    let v = kron(&v_r.matrix.view(), &v_s.matrix.view());
    let u = expm_hermitian(&v.view(), g)?;
    let err = unitarity_error(&u.view());
    if err > 1e-10 {
        return Err(Error::NumericalFailure(format!("kick unitarity defect {err:.3e}")));
    }
    let rho = u.dot(&state.rho).dot(&dagger(&u.view()));
    Ok(QuantumState {
        space: state.space.clone(),
        rho,
    })
}

/// ρ → Gibbs(β, H_E) ⊗ Tr_E ρ.
pub fn thermal_reset(state: &QuantumState, h_e: &DenseOperator, beta: impl Into<Beta>) -> Result<QuantumState> {
    let (e, s) = split_dims(state)?;
    if h_e.space != e {
        return Err(Error::InvalidSpace("engine Hamiltonian does not match the state's engine factor".into()));
    }
    let sigma = partial_trace_engine(&state.rho, e.dim(), s.dim());
    let gibbs = thermal_state(h_e, beta)?;
    Ok(QuantumState {
        space: state.space.clone(),
        rho: kron(&gibbs.rho.view(), &sigma.view()),
    })
}

struct Model {
    engine: SpaceKind,
    d_s: usize,
    /// 2S_x ⊗ 1, S_z ⊗ 1, 1 ⊗ H_S, V_R ⊗ V_S.
    x: Array2<C64>,
    z: Array2<C64>,
    hs: Array2<C64>,
    v: Array2<C64>,
    v_r: DenseOperator,
}

impl Model {
    fn new(n: u32, statistics: Statistics, system: &ExternalSystem) -> Result<Self> {
        let (engine, (sx, sz)) = match statistics {
            Statistics::Bose => (SpaceKind::DickeSector(n), collective_spin_ops(n)?),
            Statistics::Distinguishable => (SpaceKind::FullProduct(n), product_spin_ops_capped(n, 8)?),
        };
        let d_e = engine.dim();
        let d_s = system.dim();
        if d_e * d_s > MAX_DENSE_DIM {
            return Err(Error::ResourceLimit {
                what: format!("dense composite of dimension {}", d_e * d_s),
                cap: MAX_DENSE_DIM,
            });
        }
        let ids = identity(d_s);
        let hs = Array2::from_diag(&ndarray::Array1::from_iter(system.energies.iter().map(|e| C64::new(*e, 0.0))));
        let v_r = DenseOperator::new(engine.clone(), sx.matrix.mapv(|z| z * 2.0))?;
        Ok(Model {
            x: kron(&v_r.matrix.view(), &ids.view()),
            z: kron(&sz.matrix.view(), &ids.view()),
            hs: kron(&identity(d_e).view(), &hs.view()),
            v: kron(&v_r.matrix.view(), &system.v_s.matrix.view()),
            engine,
            d_s,
            v_r,
        })
    }

    fn hamiltonian(&self, params: &EngineParams, t: f64, g: f64) -> Result<Array2<C64>> {
        let omega = params.omega_of_t(t)?;
        let mut h = &self.hs + &self.z.mapv(|z| z * 2.0 * omega);
        h.scaled_add(C64::new(params.delta, 0.0), &self.x);
        if g != 0.0 {
            h.scaled_add(C64::new(g, 0.0), &self.v);
        }
        Ok(h)
    }
}

fn coupling(schedule: &CouplingSchedule, t: f64) -> Result<f64> {
    match schedule {
        CouplingSchedule::Impulse { .. } => Ok(0.0),
        other => other.g_of_t(t),
    }
}

/// Full cycle with dense steps; statistics select the Dicke sector or the
/// full product space.
pub fn run_cycle_dense(
    params: &EngineParams,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
    statistics: Statistics,
    config: &PropagatorConfig,
) -> Result<CycleResult> {
    let cfg = match config.stepper {
        Stepper::SplitMidpoint => PropagatorConfig {
            stepper: Stepper::ExponentialMidpoint,
            ..config.clone()
        },
        _ => config.clone(),
    };
    super::run_cycle(params, schedule, system, statistics, &cfg)
}

pub(super) fn run(
    params: &EngineParams,
    schedule: &CouplingSchedule,
    system: &ExternalSystem,
    statistics: Statistics,
    config: &PropagatorConfig,
) -> Result<CycleResult> {
    let model = Model::new(params.n, statistics, system)?;
    let dt_max = max_step(params, system, config)?;
    let backend = match model.engine {
        SpaceKind::DickeSector(_) => Backend::Dicke,
        _ => Backend::FullProduct,
    };
    let mut diag = Diagnostics::new(dt_max, backend, config.stepper);
    let mut rows = Vec::new();
    let d_s = model.d_s;
    let space = SpaceKind::composite(model.engine.clone(), system.v_s.space.clone());

    let h0 = engine_hamiltonian(params, 0.0, &model.engine)?;
    let mut ground = Array2::zeros((d_s, d_s));
    ground[[0, 0]] = C64::new(1.0, 0.0);
    let mut state = QuantumState {
        space: space.clone(),
        rho: kron(&thermal_state(&h0, params.beta_c)?.rho.view(), &ground.view()),
    };
    let mut energies = Vec::new();
    for stroke in Stroke::BOTH {
        let (t0, t1) = (stroke.start(params.period), stroke.end(params.period));
        if stroke == Stroke::Expansion {
            let he = engine_hamiltonian(params, t0, &model.engine)?;
            state = thermal_reset(&state, &he, params.beta_h)?;
        }
        let mut drift = 0.0_f64;
        let segments: Vec<(f64, f64, Option<f64>)> = match *schedule {
            CouplingSchedule::Impulse { g, t1: tk } if Stroke::containing(tk, params.period) == stroke => {
                vec![(t0, tk, Some(g)), (tk, t1, None)]
            }
            _ => vec![(t0, t1, None)],
        };
        for (a, b, kick) in segments {
            let n = if b > a { ((b - a) / dt_max).ceil().max(1.0) as usize } else { 0 };
            let h = if n > 0 { (b - a) / n as f64 } else { 0.0 };
            for k in 0..n {
                let tm = a + (k as f64 + 0.5) * h;
                let hm = match config.stepper {
                    Stepper::Magnus2 => {
                        let off = h / (2.0 * 3f64.sqrt());
                        let h1 = model.hamiltonian(params, tm - off, coupling(schedule, tm - off)?)?;
                        let h2 = model.hamiltonian(params, tm + off, coupling(schedule, tm + off)?)?;
                        (h1 + h2).mapv(|z| z * 0.5)
                    }
                    _ => model.hamiltonian(params, tm, coupling(schedule, tm)?)?,
                };
                let u = expm_hermitian(&hm.view(), h)?;
                drift += unitarity_error(&u.view());
                state.rho = u.dot(&state.rho).dot(&dagger(&u.view()));
                if (k + 1) % (n / 16).max(1) == 0 {
                    record(&mut diag, &mut rows, config, a + (k + 1) as f64 * h, &state, system)?;
                }
            }
            if let Some(g) = kick {
                state = apply_impulse(&state, g, &model.v_r, &system.v_s)?;
                record(&mut diag, &mut rows, config, b, &state, system)?;
            }
        }
        diag.unitarity_drift = diag.unitarity_drift.max(drift);
        energies.push(record(&mut diag, &mut rows, config, t1, &state, system)?);
    }
    let sigma = partial_trace_engine(&state.rho, model.engine.dim(), d_s);
    diag.trace_error = (trace(&state.rho.view()).re - 1.0).abs();
    finish(system, sigma, energies, diag, rows, statistics)
}

fn record(
    diag: &mut Diagnostics,
    rows: &mut Vec<TraceRow>,
    config: &PropagatorConfig,
    t: f64,
    state: &QuantumState,
    system: &ExternalSystem,
) -> Result<f64> {
    let (e, s) = split_dims(state)?;
    diag.hermiticity_error = diag.hermiticity_error.max(hermiticity_error(&state.rho.view()));
    let sigma = partial_trace_engine(&state.rho, e.dim(), s.dim());
    let pops: Vec<f64> = sigma.diag().iter().map(|z| z.re).collect();
    let leak = if system.is_truncated_oscillator() { top_leakage(&pops) } else { 0.0 };
    diag.truncation_leakage = diag.truncation_leakage.max(leak);
    let h_s = pops.iter().zip(&system.energies).map(|(p, e)| p * e).sum();
    if config.record_trace {
        rows.push(TraceRow {
            t,
            tr_rho: trace(&state.rho.view()).re,
            leakage: leak,
            h_s,
        });
    }
    Ok(h_s)
}
