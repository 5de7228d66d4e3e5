//! Adaptive Gauss–Kronrod (7/15) quadrature for complex vector integrands.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::linalg::C64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Vec<C64>,
    pub error: f64,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<C64>,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F>(f: &F, a: f64, b: f64, m: usize) -> Result<Piece>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![C64::new(0.0, 0.0); m];
    let mut gauss = vec![C64::new(0.0, 0.0); m];
    let fc = f(c)?;
    for k in 0..m {
        kron[k] = fc[k] * WGK[7];
        gauss[k] = fc[k] * WG[3];
    }
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let f1 = f(c - h * x)?;
        let f2 = f(c + h * x)?;
        for k in 0..m {
            let s = f1[k] + f2[k];
            kron[k] += s * WGK[j];
            if j % 2 == 1 {
                gauss[k] += s * WG[j / 2];
            }
        }
    }
    let mut error: f64 = 0.0;
    for k in 0..m {
        kron[k] *= h;
        gauss[k] *= h;
        error = error.max((kron[k] - gauss[k]).norm());
    }
    if kron.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok(Piece {
        a,
        b,
        value: kron,
        error,
    })
}

/// Integrates a length-`m` complex vector function over consecutive
/// subintervals defined by `points` (ascending). The error target is
/// `max(abs_tol, rel_tol·‖I‖)` on the largest component.
pub fn integrate<F>(f: F, points: &[f64], m: usize, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    if points.len() < 2 {
        return Ok(QuadResult {
            value: vec![C64::new(0.0, 0.0); m],
            error: 0.0,
            intervals: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let mut total = vec![C64::new(0.0, 0.0); m];
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let p = gk15(&f, w[0], w[1], m)?;
            for k in 0..m {
                total[k] += p.value[k];
            }
            total_err += p.error;
            heap.push(p);
        }
    }
    let mut since_resum = 0usize;
    loop {
        let scale = total.iter().fold(0.0_f64, |s, z| s.max(z.norm()));
        if total_err <= opts.abs_tol.max(opts.rel_tol * scale) {
            // Re-sum once so the returned value carries no drift from the
            // incremental updates.
            let mut value = vec![C64::new(0.0, 0.0); m];
            for p in heap.iter() {
                for k in 0..m {
                    value[k] += p.value[k];
                }
            }
            return Ok(QuadResult {
                value,
                error: heap.iter().map(|p| p.error).sum(),
                intervals: heap.len(),
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::NumericalFailure(format!(
                "quadrature did not converge: error estimate {total_err:.3e} with {} intervals (|I| = {scale:.3e})",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::NumericalFailure(format!(
                "quadrature interval [{}, {}] cannot be split further",
                worst.a, worst.b
            )));
        }
        let left = gk15(&f, worst.a, mid, m)?;
        let right = gk15(&f, mid, worst.b, m)?;
        for k in 0..m {
            total[k] += left.value[k] + right.value[k] - worst.value[k];
        }
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        since_resum += 1;
        if since_resum >= 1000 {
            since_resum = 0;
            total_err = heap.iter().map(|p| p.error).sum();
            total.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for p in heap.iter() {
                for k in 0..m {
                    total[k] += p.value[k];
                }
            }
        }
    }
}

/// Inserts evenly spaced points into each interval of `points` so that no
/// interval is longer than `max_len`.
pub fn refine(points: &[f64], max_len: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let len = w[1] - w[0];
        let pieces = if max_len > 0.0 && max_len.is_finite() {
            ((len / max_len).ceil() as usize).max(1)
        } else {
            1
        };
        for k in 0..pieces {
            out.push(w[0] + len * k as f64 / pieces as f64);
        }
    }
    if let Some(&last) = points.last() {
        out.push(last);
    }
    out
}
