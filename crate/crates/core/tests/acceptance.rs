//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Oracles here are computed independently of the library.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qstat::analytics::checks::{verify_inequalities, verify_inequalities_random};
use qstat::analytics::moments::{moment_f, moment_h};
use qstat::analytics::{compare, general_work, impulse_work};
use qstat::dynamics::{run_cycle, Backend, CycleResult, Diagnostics, PropagatorConfig};
use qstat::fermi::{enumerate_configs, f_n, fermi_work, FermiEnsemble};
use qstat::hilbert::Beta;
use qstat::protocols::{harmonic_system, CouplingSchedule, EngineParams, ExternalSystem, Statistics};
use qstat::sweeps::verify::random_instance;
use qstat::sweeps::{run_figure, Evaluation, FigureId};

const T: f64 = 20.0;

// ---------------------------------------------------------------- oracles

/// Neumaier-compensated sum.
fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0_f64, 0.0_f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Gibbs populations of m = −N/2..N/2 under weights e^{−2xm}.
fn dicke_populations(n: u32, x: f64) -> Vec<(f64, f64)> {
    let ms: Vec<f64> = (0..=n).map(|k| k as f64 - n as f64 / 2.0).collect();
    let top = ms.iter().map(|m| -2.0 * x * m).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ms.iter().map(|m| (-2.0 * x * m - top).exp()).collect();
    let z = sum(w.iter().copied());
    ms.into_iter().zip(w).map(|(m, w)| (m, w / z)).collect()
}

/// (⟨m⟩, ⟨m²⟩) by direct summation.
fn direct_moments(n: u32, x: f64) -> (f64, f64) {
    let p = dicke_populations(n, x);
    (sum(p.iter().map(|(m, w)| m * w)), sum(p.iter().map(|(m, w)| m * m * w)))
}

/// ⟨(2S_x)²⟩ in a thermal state of an N-spin engine whose field makes angle
/// cos θ with the x axis: diagonal elements of (cos θ S_n + sin θ S_⊥)² are
/// cos²θ m² + sin²θ (J(J+1) − m²)/2.
fn vr_second_moment(n: u32, x: f64, cos_theta: f64, stats: Statistics) -> f64 {
    let c2 = cos_theta * cos_theta;
    let s2 = 1.0 - c2;
    match stats {
        Statistics::Bose => {
            let j = n as f64 / 2.0;
            4.0 * sum(
                dicke_populations(n, x)
                    .into_iter()
                    .map(|(m, p)| p * (c2 * m * m + 0.5 * s2 * (j * (j + 1.0) - m * m))),
            )
        }
        Statistics::Distinguishable => {
            // Independent spins: ⟨σ_n σ_n'⟩ = tanh²x off the diagonal.
            let nf = n as f64;
            let th = x.tanh();
            nf * s2 + c2 * (nf + nf * (nf - 1.0) * th * th)
        }
    }
}

/// Work deposited by one kick of strength g into an oscillator starting in
/// its ground state: g²ω⟨V_R²⟩.
fn impulse_oracle(p: &EngineParams, g: f64, t1: f64, omega: f64, stats: Statistics) -> f64 {
    let e = p.omega0.hypot(p.delta);
    let om = p.omega0 + p.v * t1;
    let cos = p.delta / om.hypot(p.delta);
    g * g * omega * vr_second_moment(p.n, p.beta_c * e, cos, stats)
}

/// Brute-force fermion occupations over `levels` trap levels, each holding
/// 0, 1 or 2 atoms; returns ⟨number of singly occupied levels⟩.
fn fermi_oracle(n: u32, bw: f64, levels: usize) -> f64 {
    let mut num = Vec::new();
    let mut den = Vec::new();
    let mut occ = vec![0u8; levels];
    let total = 3usize.pow(levels as u32);
    let e_ground: f64 = (0..n as usize).map(|i| (i / 2) as f64 + 0.5).sum();
    for code in 0..total {
        let mut c = code;
        for o in occ.iter_mut() {
            *o = (c % 3) as u8;
            c /= 3;
        }
        if occ.iter().map(|&o| o as u32).sum::<u32>() != n {
            continue;
        }
        let e: f64 = occ.iter().enumerate().map(|(l, &o)| (l as f64 + 0.5) * o as f64).sum();
        let active = occ.iter().filter(|&&o| o == 1).count();
        let w = 2f64.powi(active as i32) * (-bw * (e - e_ground)).exp();
        num.push(w * active as f64);
        den.push(w);
    }
    sum(num) / sum(den)
}

fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

// ------------------------------------------------------------ scenarios

fn fig2_engine(n: u32, delta: f64, stats: Statistics) -> EngineParams {
    EngineParams::with_bath_products(n, 1.0, delta, 0.1, T, 2.0, 0.25, stats).unwrap()
}

fn fig4_engine(n: u32) -> EngineParams {
    EngineParams::with_bath_products(n, 0.0, 1.0, 0.5, T, 1.0, 0.125, Statistics::Distinguishable).unwrap()
}

fn ho_omega() -> f64 {
    2.0 * PI * 0.05 / T
}

fn ho(dim: usize) -> ExternalSystem {
    harmonic_system(ho_omega(), dim).unwrap()
}

fn impulse_fig2() -> CouplingSchedule {
    CouplingSchedule::Impulse { g: 0.01, t1: 0.35 * T / 2.0 }
}

fn plateau(g: f64, delta_t: f64, alpha_t: f64) -> CouplingSchedule {
    CouplingSchedule::smooth_plateau(g, delta_t, alpha_t / T, T).unwrap()
}

fn backend_for(stats: Statistics) -> Backend {
    match stats {
        Statistics::Bose => Backend::Dicke,
        Statistics::Distinguishable => Backend::Auto,
    }
}

/// Diagnostics of every propagation in the suite, for criterion 10.
#[derive(Default)]
struct Hygiene {
    runs: usize,
    worst_trace: f64,
    worst_herm: f64,
    worst_drift: f64,
}

impl Hygiene {
    fn record(&mut self, d: &Diagnostics) {
        self.runs += 1;
        self.worst_trace = self.worst_trace.max(d.trace_error);
        self.worst_herm = self.worst_herm.max(d.hermiticity_error);
        self.worst_drift = self.worst_drift.max(d.unitarity_drift);
    }
}

fn evolve(
    h: &mut Hygiene,
    p: &EngineParams,
    s: &CouplingSchedule,
    sys: &ExternalSystem,
    stats: Statistics,
    cfg: &PropagatorConfig,
) -> Result<CycleResult, String> {
    let r = run_cycle(p, s, sys, stats, cfg).map_err(|e| e.to_string())?;
    h.record(&r.diagnostics);
    Ok(r)
}

// ------------------------------------------------------------- criteria

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_moments() -> Outcome {
    let xs = [1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 50.0];
    let mut worst = 0.0_f64;
    for n in 1..=60 {
        for &x in &xs {
            let (h, f) = direct_moments(n, x);
            let lh = moment_h(n, x).map_err(|e| e.to_string())?;
            let lf = moment_f(n, x).map_err(|e| e.to_string())?;
            worst = worst.max((lh - h).abs()).max((lf - f).abs());
        }
    }
    check(worst <= 1e-12, format!("max |closed form - direct sum| = {worst:.2e}"))
}

/// Inequality margins from oracle moments; returns the smallest margin over
/// N ≥ 2 and the largest |margin| at N = 1.
fn oracle_margins(n: u32, x: f64, y: f64) -> [f64; 5] {
    let (hx, fx) = direct_moments(n, x);
    let (hy, _) = direct_moments(n, y);
    let nf = n as f64;
    let j = 0.5 * nf * (0.5 * nf + 1.0);
    let (tx, ty) = (x.tanh(), y.tanh());
    [
        nf * nf / 4.0 - fx,
        4.0 * fx - (nf + nf * (nf - 1.0) * tx * tx),
        j - (fx + hx.abs()) - 0.5 * nf * (1.0 - tx),
        j - (fx - hx.abs()) - 0.5 * nf * (1.0 + tx),
        4.0 * hx.abs() * hy.abs() - nf * nf * tx * ty,
    ]
}

fn c2_inequalities() -> Outcome {
    let grid: Vec<f64> = (0..40).map(|k| 1e-3 * 5e4f64.powf(k as f64 / 39.0)).collect();
    let lib = verify_inequalities(60, &grid).map_err(|e| e.to_string())?;
    let rnd = verify_inequalities_random(60, 10_000, 20240601).map_err(|e| e.to_string())?;
    let (mut min_margin, mut n1) = (f64::INFINITY, 0.0_f64);
    let mut oracle_cells = 0;
    for n in 1..=60 {
        for &x in &grid {
            // The cross term pairs x with every y; the others only depend on x.
            for &y in &grid {
                let m = oracle_margins(n, x, y);
                for v in m {
                    if n == 1 {
                        n1 = n1.max(v.abs());
                    } else {
                        min_margin = min_margin.min(v / (n as f64).powi(2));
                    }
                }
                oracle_cells += 1;
            }
        }
    }
    let n1_lib = lib.n1_max_deviation.max(rnd.n1_max_deviation);
    check(
        min_margin >= -1e-13 && n1 <= 1e-12 && n1_lib <= 1e-12,
        format!(
            "library: {} grid + {} random cells hold; oracle: {oracle_cells} cells, min scaled margin {min_margin:.2e}, N = 1 equality to {:.1e}",
            lib.cells,
            rnd.cells,
            n1.max(n1_lib)
        ),
    )
}

fn c3_impulse(h: &mut Hygiene) -> Outcome {
    let sys = ho(10);
    let s = impulse_fig2();
    let (mut min_e, mut n1_dev, mut worst_num, mut worst_oracle) = (f64::INFINITY, 0.0_f64, 0.0_f64, 0.0_f64);
    for delta in [0.0, 1.4, 4.2] {
        for n in 1..=8 {
            let mut w = [0.0; 2];
            let mut wn = [0.0; 2];
            for (k, st) in [Statistics::Bose, Statistics::Distinguishable].into_iter().enumerate() {
                let p = fig2_engine(n, delta, st);
                let lib = impulse_work(&p, &s, &sys, st).map_err(|e| e.to_string())?.avg_work;
                let oracle = impulse_oracle(&p, 0.01, 0.35 * T / 2.0, ho_omega(), st);
                worst_oracle = worst_oracle.max((lib / oracle - 1.0).abs());
                w[k] = oracle;
                let cfg = PropagatorConfig {
                    backend: backend_for(st),
                    ..Default::default()
                };
                wn[k] = evolve(h, &p, &s, &sys, st, &cfg)?.work.avg_work;
            }
            let e = w[0] / w[1];
            let en = wn[0] / wn[1];
            min_e = min_e.min(e);
            if n == 1 {
                n1_dev = n1_dev.max((e - 1.0).abs());
            }
            worst_num = worst_num.max((en / e - 1.0).abs());
        }
    }
    check(
        min_e >= 1.0 - 1e-12 && n1_dev <= 1e-12 && worst_num < 0.02 && worst_oracle < 1e-10,
        format!(
            "min E = {min_e:.6}, |E(N=1) - 1| = {n1_dev:.1e}, numeric vs analytic E {worst_num:.2e}, library vs oracle work {worst_oracle:.1e}"
        ),
    )
}

fn c4_quadratic() -> Outcome {
    let out = run_figure(FigureId::Fig2b, None).map_err(|e| e.to_string())?;
    // Library surface against the oracle, then the fit on oracle values.
    let d = &out.data;
    let mut worst_lib = 0.0_f64;
    for r in 0..d.rows.len() {
        let (n, b, w) = (d.num(r, "N").unwrap(), d.num(r, "beta_c_e0").unwrap(), d.num(r, "w_indist").unwrap());
        let p = EngineParams::with_bath_products(n as u32, 1.0, 0.0, 0.1, T, b, 0.25, Statistics::Bose).unwrap();
        let oracle = impulse_oracle(&p, 0.01, 0.35 * T / 2.0, ho_omega(), Statistics::Bose);
        worst_lib = worst_lib.max((w / oracle - 1.0).abs());
    }
    let mut fits = Vec::new();
    for k in 0..16 {
        let b = 0.25 + 0.25 * k as f64;
        let ns: Vec<f64> = (1..=40).map(f64::from).filter(|n| n * b <= 1.0 + 1e-12).collect();
        if ns.len() < 3 {
            continue;
        }
        let w1 = vr_second_moment(1, b, 0.0, Statistics::Bose);
        let ys: Vec<f64> = ns.iter().map(|&n| (vr_second_moment(n as u32, b, 0.0, Statistics::Bose) / w1).sqrt()).collect();
        fits.push(r_squared(&ns, &ys));
    }
    let min_r2 = fits.iter().copied().fold(f64::INFINITY, f64::min);
    let mut worst_slope = 0.0_f64;
    for x in [0.25, 0.5, 1.0, 2.0, 4.0] {
        // Second moment ⟨V_R²⟩ at Δ = 0 and its increment N → N + 1.
        let slope = vr_second_moment(501, x, 0.0, Statistics::Bose) - vr_second_moment(500, x, 0.0, Statistics::Bose);
        worst_slope = worst_slope.max((slope * x.tanh() - 1.0).abs());
    }
    let lib_ok = out.assertions.iter().all(|a| a.pass);
    check(
        !fits.is_empty() && min_r2 > 0.99 && worst_slope < 1e-3 && worst_lib < 1e-10 && lib_ok,
        format!(
            "{} columns fitted, min R^2 = {min_r2:.5}; slope at N = 500 within {worst_slope:.1e} of coth; library surface vs oracle {worst_lib:.1e}",
            fits.len()
        ),
    )
}

fn c5_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    let mut levels = 0;
    let mut smooth = 0;
    for _ in 0..200 {
        let (p, s, sys) = random_instance(&mut rng).map_err(|e| e.to_string())?;
        smooth += matches!(s, CouplingSchedule::SmoothPlateau { .. }) as usize;
        let wi = general_work(&p, &s, &sys, Statistics::Bose).map_err(|e| e.to_string())?;
        let wd = general_work(&p, &s, &sys, Statistics::Distinguishable).map_err(|e| e.to_string())?;
        for i in 1..sys.dim() {
            let pi = wi.p_excite.get(&i).copied().unwrap_or(0.0);
            let pd = wd.p_excite.get(&i).copied().unwrap_or(0.0);
            worst = worst.min(pi - pd);
            levels += 1;
        }
    }
    check(
        worst >= -1e-12,
        format!("200 instances ({smooth} plateau, {} sampled), {levels} levels, min p_indist - p_dist = {worst:.2e}", 200 - smooth),
    )
}

fn c6_nonperturbative(h: &mut Hygiene) -> Outcome {
    let sys = ho(16);
    let s = plateau(0.5, 0.9, 2142.0);
    let cfg = PropagatorConfig::default();
    let mut w = Vec::new();
    for n in 1..=6 {
        let wi = evolve(h, &fig2_engine(n, 0.0, Statistics::Bose), &s, &sys, Statistics::Bose, &cfg)?.work.avg_work;
        let wd = evolve(h, &fig2_engine(n, 0.0, Statistics::Distinguishable), &s, &sys, Statistics::Distinguishable, &cfg)?
            .work
            .avg_work;
        w.push((wi, wd));
    }
    let sqrt: Vec<f64> = w.iter().map(|(wi, _)| (wi / w[0].0).sqrt()).collect();
    let e: Vec<f64> = w.iter().map(|(wi, wd)| wi / wd).collect();
    let mono = sqrt.windows(2).all(|p| p[1] > p[0]);
    let enhanced = e[1..].iter().all(|&x| x > 1.0);
    check(mono && enhanced, format!("E(N=2..6) = {:.4?}, sqrt ratio = {sqrt:.4?}", &e[1..]))
}

fn c7_region() -> Outcome {
    let out = run_figure(FigureId::FigS1, None).map_err(|e| e.to_string())?;
    let d = &out.data;
    // Grid bounds and a spot check of the map against direct comparisons.
    let dmax = (0..d.rows.len()).filter_map(|r| d.num(r, "delta_over_omega0")).fold(0.0, f64::max);
    let wmin = (0..d.rows.len()).filter_map(|r| d.num(r, "omega_t")).fold(f64::INFINITY, f64::min);
    let wmax = (0..d.rows.len()).filter_map(|r| d.num(r, "omega_t")).fold(0.0, f64::max);
    let grid_ok = dmax == 4.0 && (wmin - 0.1).abs() < 1e-12 && (wmax - 10.0 * PI).abs() < 1e-12;
    let mut spot_ok = true;
    for r in (0..d.rows.len()).step_by(997) {
        let (ratio, om, n) = (d.num(r, "delta_over_omega0").unwrap(), d.num(r, "omega_t").unwrap(), d.num(r, "N").unwrap());
        let p = fig2_engine(n as u32, ratio, Statistics::Bose);
        let c = compare(&p, &plateau(0.01, 0.9, 2142.0), &harmonic_system(om / T, 2).unwrap()).map_err(|e| e.to_string())?;
        spot_ok &= (c.indist.avg_work > c.dist.avg_work) == (d.num(r, "enhanced") == Some(1.0));
    }
    let detail: Vec<String> = out.assertions.iter().map(|a| format!("{}: {}", a.name, a.detail)).collect();
    check(
        out.assertions.iter().all(|a| a.pass) && grid_ok && spot_ok,
        format!("{}; grid {grid_ok}, spot checks {spot_ok}", detail.join("; ")),
    )
}

fn c8_fermi() -> Outcome {
    let engine = fig4_engine(1);
    let mut worst_oracle = 0.0_f64;
    let (mut worst_even, mut worst_odd) = (0.0_f64, 0.0_f64);
    for n in 2..=5u32 {
        for k in 0..=8 {
            let bw = 4.0 + 0.25 * k as f64;
            let ens = FermiEnsemble::new(n, 1.0, bw, engine.clone()).map_err(|e| e.to_string())?;
            let lib = f_n(&ens).map_err(|e| e.to_string())?;
            let oracle = fermi_oracle(n, bw, 12);
            worst_oracle = worst_oracle.max((lib - oracle).abs());
            if n % 2 == 0 {
                worst_even = worst_even.max((oracle / (8.0 * (-bw).exp()) - 1.0).abs());
            } else {
                worst_odd = worst_odd.max(((oracle - 1.0) / (8.0 * (-2.0 * bw).exp()) - 1.0).abs());
            }
        }
    }
    // λ from the work record must not see the bath temperatures.
    let mut spread = 0.0_f64;
    for n in 2..=5 {
        let mut lams = Vec::new();
        for (bc, bh) in [(1.0, 0.125), (3.0, 0.5), (0.2, 0.05)] {
            let e = EngineParams::with_bath_products(1, 0.0, 1.0, 0.5, T, bc, bh, Statistics::Distinguishable).unwrap();
            let ens = FermiEnsemble::new(n, 1.0, 5.0, e).map_err(|e| e.to_string())?;
            lams.push(fermi_work(&ens).map_err(|e| e.to_string())?.enhancement_ratio.unwrap());
        }
        spread = spread.max(lams.iter().map(|l| (l - lams[0]).abs()).fold(0.0, f64::max));
    }
    let mut limits_ok = true;
    for n in 1..=8u32 {
        let mut ens = FermiEnsemble::new(n, 1.0, 5.0, engine.clone()).map_err(|e| e.to_string())?;
        ens.beta_com = Beta::Infinite;
        let cfgs = enumerate_configs(&ens).map_err(|e| e.to_string())?;
        limits_ok &= cfgs.len() == 1 && f_n(&ens).map_err(|e| e.to_string())? == (n % 2) as f64;
    }
    check(
        worst_even < 0.1 && worst_odd < 0.2 && spread <= 1e-12 && limits_ok && worst_oracle < 1e-10,
        format!(
            "even {worst_even:.4} < 0.1, odd {worst_odd:.4} < 0.2 on [4, 6]; lambda spread over baths {spread:.1e}; zero-temperature limits {limits_ok}; enumeration vs brute force {worst_oracle:.1e}"
        ),
    )
}

fn c9_backends(h: &mut Hygiene) -> Outcome {
    let sys = ho(10);
    let mut worst: f64 = 0.0;
    let mut label = String::new();
    for (name, s) in [("impulse", impulse_fig2()), ("plateau", plateau(0.01, 0.9, 2142.0))] {
        for n in 1..=4 {
            for delta in [0.0, 1.4] {
                for (st, backend) in [(Statistics::Distinguishable, Backend::FullProduct), (Statistics::Bose, Backend::Dicke)] {
                    let p = fig2_engine(n, delta, st);
                    let closed = match s {
                        CouplingSchedule::Impulse { g, t1 } => impulse_oracle(&p, g, t1, ho_omega(), st),
                        _ => general_work(&p, &s, &sys, st).map_err(|e| e.to_string())?.avg_work,
                    };
                    let cfg = PropagatorConfig {
                        backend,
                        ..Default::default()
                    };
                    let r = evolve(h, &p, &s, &sys, st, &cfg)?;
                    if r.diagnostics.backend != backend {
                        return Err(format!("asked for {backend:?}, ran {:?}", r.diagnostics.backend));
                    }
                    let rel = (r.work.avg_work / closed - 1.0).abs();
                    if rel > worst {
                        worst = rel;
                        label = format!("{name} N = {n} Delta = {delta} {backend:?}");
                    }
                }
            }
        }
    }
    check(worst < 0.02, format!("worst relative deviation {worst:.2e} ({label})"))
}

fn c10_hygiene(h: &mut Hygiene) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // Step-size convergence on the nonperturbative plateau, where the step
    // error dominates rounding.
    let p = fig2_engine(2, 1.4, Statistics::Bose);
    let s = plateau(0.5, 0.9, 2142.0);
    let sys = ho(24);
    let dt0 = 0.02;
    let work = |h: &mut Hygiene, dt: f64| -> Result<f64, String> {
        let cfg = PropagatorConfig {
            dt: Some(dt),
            ..Default::default()
        };
        Ok(evolve(h, &p, &s, &sys, Statistics::Bose, &cfg)?.work.avg_work)
    };
    let reference = work(h, dt0 / 16.0)?;
    let e1 = (work(h, dt0)? - reference).abs();
    let e2 = (work(h, dt0 / 2.0)? - reference).abs();
    let ratio = e1 / e2;
    ok &= ratio >= 4.0;
    notes.push(format!("dt halving reduces the error {ratio:.2}x"));

    // Oscillator truncation doubling at every preset.
    let presets: Vec<(&str, EngineParams, CouplingSchedule, ExternalSystem, Statistics)> = vec![
        ("fig2a", fig2_engine(8, 4.2, Statistics::Bose), impulse_fig2(), ho(10), Statistics::Bose),
        ("fig2a", fig2_engine(4, 1.4, Statistics::Distinguishable), impulse_fig2(), ho(10), Statistics::Distinguishable),
        ("fig3", fig2_engine(6, 0.0, Statistics::Bose), plateau(0.5, 0.9, 2142.0), ho(16), Statistics::Bose),
        ("fig3", fig2_engine(3, 0.0, Statistics::Distinguishable), plateau(0.5, 0.9, 2142.0), ho(16), Statistics::Distinguishable),
        ("fig4", fig4_engine(4), plateau(0.5, 0.98, 2000.0), ho(16), Statistics::Distinguishable),
        (
            "figS1",
            fig2_engine(20, 0.0, Statistics::Bose),
            plateau(0.01, 0.9, 2142.0),
            harmonic_system(10.0 * PI / T, 4).unwrap(),
            Statistics::Bose,
        ),
        (
            "figS1",
            fig2_engine(2, 4.0, Statistics::Distinguishable),
            plateau(0.01, 0.9, 2142.0),
            harmonic_system(0.1 / T, 4).unwrap(),
            Statistics::Distinguishable,
        ),
    ];
    let mut worst_trunc = 0.0_f64;
    let mut worst_label = "";
    for (name, p, s, sys, st) in &presets {
        let cfg = PropagatorConfig {
            backend: backend_for(*st),
            ..Default::default()
        };
        let a = evolve(h, p, s, sys, *st, &cfg)?.work.avg_work;
        let doubled = PropagatorConfig {
            truncation_dim: Some(2 * sys.dim()),
            ..cfg
        };
        let b = evolve(h, p, s, sys, *st, &doubled)?.work.avg_work;
        let rel = (a / b - 1.0).abs();
        if rel >= worst_trunc {
            worst_trunc = rel;
            worst_label = name;
        }
    }
    ok &= worst_trunc < 1e-6;
    notes.push(format!("truncation doubling changes work by at most {worst_trunc:.1e} ({worst_label})"));

    ok &= h.worst_trace <= 1e-10 && h.worst_herm <= 1e-10 && h.worst_drift < 1e-10;
    notes.push(format!(
        "{} runs: trace {:.1e}, hermiticity {:.1e}, unitarity drift {:.1e}",
        h.runs, h.worst_trace, h.worst_herm, h.worst_drift
    ));
    check(ok, notes.join("; "))
}

fn fig_presets() -> Outcome {
    // The figure presets must carry the caption values exactly.
    let s = FigureId::Fig2a.preset().scenario().map_err(|e| e.to_string())?;
    let mut ok = s.params == fig2_engine(1, 0.0, Statistics::Bose) && s.schedule == impulse_fig2();
    ok &= (s.system.energies[1] - ho_omega()).abs() < 1e-18 && s.system.dim() >= 10;
    let s = FigureId::Fig3a.preset().scenario().map_err(|e| e.to_string())?;
    ok &= s.schedule == plateau(0.5, 0.9, 2142.0);
    let s = FigureId::Fig4even.preset().scenario().map_err(|e| e.to_string())?;
    let mut e4 = fig4_engine(1);
    e4.statistics = s.params.statistics;
    ok &= s.params == e4 && s.schedule == plateau(0.5, 0.98, 2000.0);
    ok &= FigureId::Fig2a.preset().sweep.method == Evaluation::Both;
    check(ok, "fig2a, fig3, fig4 presets match".into())
}

fn main() -> ExitCode {
    let mut h = Hygiene::default();
    let criteria: Vec<(&str, Duration, Box<dyn FnMut(&mut Hygiene) -> Outcome>)> = vec![
        ("1 moment oracles", Duration::from_secs(1), Box::new(|_| c1_moments())),
        ("2 inequality battery", Duration::from_secs(10), Box::new(|_| c2_inequalities())),
        ("3 impulse enhancement", Duration::from_secs(300), Box::new(c3_impulse)),
        ("4 quadratic scaling", Duration::from_secs(30), Box::new(|_| c4_quadratic())),
        ("5 Delta = 0 dominance", Duration::from_secs(60), Box::new(|_| c5_dominance())),
        ("6 nonperturbative regime", Duration::from_secs(600), Box::new(c6_nonperturbative)),
        ("7 enhancement region", Duration::from_secs(120), Box::new(|_| c7_region())),
        ("8 fermionic parity law", Duration::from_secs(60), Box::new(|_| c8_fermi())),
        ("9 statistical oracles", Duration::from_secs(300), Box::new(c9_backends)),
        ("10 numerical hygiene", Duration::from_secs(600), Box::new(c10_hygiene)),
        ("presets", Duration::from_secs(5), Box::new(|_| fig_presets())),
    ];
    let mut failed = 0;
    for (name, limit, mut f) in criteria {
        let start = Instant::now();
        let outcome = f(&mut h);
        let took = start.elapsed();
        let timely = took <= limit;
        let (pass, detail) = match outcome {
            Ok(d) => (timely, d),
            Err(d) => (false, d),
        };
        failed += !pass as usize;
        println!(
            "{} criterion {name}: {detail} [{:.2} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
