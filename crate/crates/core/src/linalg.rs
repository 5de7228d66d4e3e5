//! Dense complex linear-algebra helpers shared by the operator and
//! propagation layers.

use ndarray::{Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag(&Array1::from_elem(n, c(1.0)))
}

pub fn dagger(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Largest absolute element of `a - a†`.
pub fn hermiticity_error(a: &ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "eigh needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    // LAPACK only reads one triangle; symmetrize first so that tiny
    // asymmetries from accumulated rounding do not bias the result.
    let sym = (a.to_owned() + dagger(a)).mapv(|z| z * 0.5);
    // Column-major storage: a row-major complex input reaches LAPACK as its
    // transpose, i.e. the conjugate matrix.
    let mut f = Array2::zeros(sym.raw_dim().f());
    f.assign(&sym);
    let (vals, vecs) = f.eigh(UPLO::Lower)?;
    Ok((vals, vecs.as_standard_layout().to_owned()))
}

/// `V diag(f(λ)) V†` for a Hermitian `a`.
pub fn hermitian_function(
    vals: &Array1<f64>,
    vecs: &Array2<C64>,
    f: impl Fn(f64) -> C64,
) -> Array2<C64> {
    let scaled = vecs * &vals.mapv(f).insert_axis(Axis(0));
    scaled.dot(&dagger(&vecs.view()))
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn expm_hermitian(h: &ArrayView2<C64>, t: f64) -> Result<Array2<C64>> {
    let (vals, vecs) = eigh(h)?;
    Ok(hermitian_function(&vals, &vecs, |e| (-I * e * t).exp()))
}

pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            block.zip_mut_with(b, |o, &bv| *o = aij * bv);
        }
    }
    out
}

/// `u ⊗ u ⊗ … ⊗ u` with `n` factors.
pub fn kron_power(u: &ArrayView2<C64>, n: u32) -> Array2<C64> {
    let mut out = identity(1);
    for _ in 0..n {
        out = kron(&out.view(), u);
    }
    out
}

/// Unitarity defect `max |U†U - I|`.
pub fn unitarity_error(u: &ArrayView2<C64>) -> f64 {
    let prod = dagger(u).dot(u);
    let id = identity(u.nrows());
    max_abs(&(prod - id).view())
}

/// One Newton–Schulz polar step U(3 − U†U)/2; squares the unitarity defect
/// of a nearly unitary matrix.
pub fn polish_unitary(u: Array2<C64>) -> Array2<C64> {
    let mut m = dagger(&u.view()).dot(&u).mapv(|z| -z);
    m.diag_mut().mapv_inplace(|z| z + 3.0);
    u.dot(&m).mapv(|z| z * 0.5)
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
