//! Thermal moments of m over the Dicke ladder, weight e^{−2xm}.
//!
//! With L(y) = coth y − 1/y and K(y) = 1/y² − csch² y,
//!   ⟨m⟩   = −[(N+1) L((N+1)x) − L(x)] / 2,
//!   Var m = [(N+1)² K((N+1)x) − K(x)] / 4,
//! which stay finite and accurate down to x = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SERIES_CUTOFF: f64 = 2.0;

/// `y cosh y − sinh y` and `sinh y − y` for |y| < 2 by their Taylor series.
fn small_y_parts(y: f64) -> (f64, f64) {
    let y2 = y * y;
    let mut term = y; // y^{2k+1}/(2k+1)!
    let mut a = 0.0;
    let mut b = 0.0;
    for k in 1..40 {
        let kf = k as f64;
        term *= y2 / ((2.0 * kf) * (2.0 * kf + 1.0));
        a += 2.0 * kf * term;
        b += term;
        if term.abs() < 1e-18 * b.abs() {
            break;
        }
    }
    (a, b)
}

/// Langevin function coth y − 1/y, y ≥ 0.
pub fn langevin(y: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else if y.is_infinite() {
        1.0
    } else if y < SERIES_CUTOFF {
        let (num, _) = small_y_parts(y);
        num / (y * y.sinh())
    } else {
        1.0 + 2.0 / (2.0 * y).exp_m1() - 1.0 / y
    }
}

/// 1/y² − csch² y, y ≥ 0 (the derivative of the Langevin function).
pub fn langevin_slope(y: f64) -> f64 {
    if y == 0.0 {
        1.0 / 3.0
    } else if y.is_infinite() {
        0.0
    } else if y < SERIES_CUTOFF {
        let (_, smy) = small_y_parts(y);
        let s = y.sinh();
        smy * (s + y) / (y * y * s * s)
    } else {
        let q = (-2.0 * y).exp();
        1.0 / (y * y) - 4.0 * q / ((1.0 - q) * (1.0 - q))
    }
}

fn check_args(n: u32, x: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("x must be ≥ 0, got {x}")));
    }
    Ok(())
}

/// Thermal ⟨m⟩ (≤ 0 for x ≥ 0).
pub fn moment_h(n: u32, x: f64) -> Result<f64> {
    check_args(n, x)?;
    let n1 = n as f64 + 1.0;
    if x.is_infinite() {
        return Ok(-(n as f64) / 2.0);
    }
    Ok(-0.5 * (n1 * langevin(n1 * x) - langevin(x)))
}

/// Thermal ⟨m²⟩.
pub fn moment_f(n: u32, x: f64) -> Result<f64> {
    let h = moment_h(n, x)?;
    if x.is_infinite() {
        return Ok(h * h);
    }
    let n1 = n as f64 + 1.0;
    let var = 0.25 * (n1 * n1 * langevin_slope(n1 * x) - langevin_slope(x));
    Ok(var + h * h)
}

/// ⟨m⟩ magnitude, the sign convention under which the cross-term and
/// F_± inequalities read with positive factors.
pub fn moment_h_paper(n: u32, x: f64) -> Result<f64> {
    Ok(moment_h(n, x)?.abs())
}

/// Moments of one thermal Dicke state. `h` is the raw ⟨m⟩ and
/// `f_plus`, `f_minus` are ⟨m²⟩ ± ⟨m⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub n: u32,
    pub x: f64,
    pub f: f64,
    pub h: f64,
    pub f_plus: f64,
    pub f_minus: f64,
}

impl MomentSet {
    pub fn new(n: u32, x: f64) -> Result<Self> {
        let f = moment_f(n, x)?;
        let h = moment_h(n, x)?;
        Ok(MomentSet {
            n,
            x,
            f,
            h,
            f_plus: f + h,
            f_minus: f - h,
        })
    }

    /// N/2 (N/2 + 1).
    pub fn casimir(&self) -> f64 {
        let j = self.n as f64 / 2.0;
        j * (j + 1.0)
    }

    /// F_σ for σ = ±1.
    pub fn f_sigma(&self, sigma: i8) -> f64 {
        if sigma > 0 {
            self.f_plus
        } else {
            self.f_minus
        }
    }

    pub fn h_paper(&self) -> f64 {
        self.h.abs()
    }
}

/// The sinh-ratio expression for ⟨m²⟩ exactly as printed; overflows for
/// (N+3)x ≳ 700 and loses accuracy as x → 0.
pub fn moment_f_printed(n: u32, x: f64) -> f64 {
    let nf = n as f64;
    let num = nf * nf * ((nf + 3.0) * x).sinh() + (nf + 2.0).powi(2) * ((nf - 1.0) * x).sinh()
        - 2.0 * (nf * nf + 2.0 * nf - 2.0) * ((nf + 1.0) * x).sinh();
    num / (16.0 * ((nf + 1.0) * x).sinh() * x.sinh().powi(2))
}

/// The sinh-ratio expression for ⟨m⟩ exactly as printed.
pub fn moment_h_printed(n: u32, x: f64) -> f64 {
    let nf = n as f64;
    0.25 * ((nf + 2.0) * (nf * x).sinh() - nf * ((nf + 2.0) * x).sinh()) / (x.sinh() * ((nf + 1.0) * x).sinh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::compensated_sum;
    use proptest::prelude::*;

    fn direct(n: u32, x: f64) -> (f64, f64) {
        let j = n as f64 / 2.0;
        let ms: Vec<f64> = (0..=n).map(|k| -j + k as f64).collect();
        let w: Vec<f64> = ms.iter().map(|m| (-2.0 * x * (m + j)).exp()).collect();
        let z = compensated_sum(w.iter().copied());
        let h = compensated_sum(ms.iter().zip(&w).map(|(m, w)| m * w)) / z;
        let f = compensated_sum(ms.iter().zip(&w).map(|(m, w)| m * m * w)) / z;
        (f, h)
    }

    #[test]
    fn single_atom() {
        for x in [0.0, 1e-3, 0.3, 2.0, 40.0, 800.0] {
            assert!((moment_f(1, x).unwrap() - 0.25).abs() < 1e-15);
            assert!((moment_h(1, x).unwrap() + 0.5 * x.tanh()).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn infinite_temperature() {
        for n in 1..40u32 {
            let nf = n as f64;
            assert!((moment_f(n, 0.0).unwrap() - nf * (nf + 2.0) / 12.0).abs() < 1e-12);
            assert_eq!(moment_h(n, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_temperature() {
        for n in [1, 2, 7, 30] {
            let nf = n as f64;
            assert!((moment_f(n, 400.0).unwrap() - nf * nf / 4.0).abs() < 1e-12);
            assert_eq!(moment_f(n, f64::INFINITY).unwrap(), nf * nf / 4.0);
        }
    }

    #[test]
    fn direct_sum_spot_values() {
        let (f, _) = direct(5, 0.3);
        assert!((moment_f(5, 0.3).unwrap() - f).abs() < 1e-12);
        let (_, h) = direct(4, 1.2);
        assert!((moment_h(4, 1.2).unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn printed_forms_agree_at_moderate_x() {
        for n in 1..=20u32 {
            for x in [0.05, 0.3, 1.0, 3.0] {
                let f = moment_f(n, x).unwrap();
                let h = moment_h(n, x).unwrap();
                assert!((moment_f_printed(n, x) / f - 1.0).abs() < 1e-9, "f N={n} x={x}");
                if h.abs() > 1e-8 {
                    assert!((moment_h_printed(n, x) / h - 1.0).abs() < 1e-9, "h N={n} x={x}");
                }
            }
        }
    }

    #[test]
    fn langevin_branches_join() {
        for y in [SERIES_CUTOFF * (1.0 - 1e-12), SERIES_CUTOFF] {
            let l = 1.0 / y.tanh() - 1.0 / y;
            assert!((langevin(y) - l).abs() < 1e-15);
            let k = 1.0 / (y * y) - 1.0 / y.sinh().powi(2);
            assert!((langevin_slope(y) - k).abs() < 1e-15);
        }
        let y = 1e-6_f64;
        assert!((langevin(y) / (y / 3.0 - y.powi(3) / 45.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(moment_f(0, 1.0).is_err());
        assert!(matches!(moment_h(3, -0.1), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn closed_forms_match_direct_sums(n in 1u32..=60, x in 1e-4..50.0f64) {
            let (f, h) = direct(n, x);
            prop_assert!((moment_f(n, x).unwrap() - f).abs() < 1e-12);
            prop_assert!((moment_h(n, x).unwrap() - h).abs() < 1e-12);
        }

        #[test]
        fn moment_bounds(n in 1u32..=80, x in 0.0..100.0f64) {
            let m = MomentSet::new(n, x).unwrap();
            let nf = n as f64;
            prop_assert!(m.f >= 0.25 - 1e-12 && m.f <= nf * nf / 4.0 + 1e-12);
            prop_assert!(m.h <= 0.0 && m.h >= -nf / 2.0 - 1e-12);
            prop_assert_eq!(m.f_plus, m.f + m.h);
        }
    }
}
