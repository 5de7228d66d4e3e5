//! Hilbert spaces, spin operators and thermal states for collective (Dicke)
//! and product-space engine ensembles.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eigh, hermiticity_error, kron, trace, C64, I};
use crate::protocols::EngineParams;

/// Largest N accepted by [`product_spin_ops`] unless a larger cap is passed.
pub const PRODUCT_CAP: u32 = 12;

/// Largest dense dimension any operator may have.
pub const MAX_DENSE_DIM: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    /// Symmetric sector of N two-level atoms, dimension N+1.
    DickeSector(u32),
    /// Tensor product of N two-level atoms, dimension 2^N.
    FullProduct(u32),
    /// Harmonic oscillator truncated to the lowest `dim` Fock states.
    HoTruncated(usize),
    /// Unstructured space of the given dimension.
    Generic(usize),
    Composite(Box<SpaceKind>, Box<SpaceKind>),
}

impl SpaceKind {
    pub fn dim(&self) -> usize {
        match self {
            SpaceKind::DickeSector(n) => *n as usize + 1,
            SpaceKind::FullProduct(n) => 1usize << n,
            SpaceKind::HoTruncated(d) | SpaceKind::Generic(d) => *d,
            SpaceKind::Composite(a, b) => a.dim() * b.dim(),
        }
    }

    pub fn composite(engine: SpaceKind, system: SpaceKind) -> SpaceKind {
        SpaceKind::Composite(Box::new(engine), Box::new(system))
    }

    fn check(&self) -> Result<()> {
        match self {
            SpaceKind::DickeSector(0) | SpaceKind::FullProduct(0) => {
                Err(Error::InvalidArgument("spin spaces need N ≥ 1".into()))
            }
            SpaceKind::FullProduct(n) if *n > 20 => Err(Error::ResourceLimit {
                what: format!("product space with N = {n}"),
                cap: 20,
            }),
            SpaceKind::HoTruncated(0) | SpaceKind::Generic(0) => {
                Err(Error::InvalidArgument("space dimension must be positive".into()))
            }
            SpaceKind::Composite(a, b) => {
                a.check()?;
                b.check()
            }
            _ => Ok(()),
        }
    }
}

/// A square complex matrix tagged with the space it acts on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseOperator {
    pub space: SpaceKind,
    pub matrix: Array2<C64>,
}

impl DenseOperator {
    pub fn new(space: SpaceKind, matrix: Array2<C64>) -> Result<Self> {
        space.check()?;
        let d = space.dim();
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != d {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{} but the space has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if d > MAX_DENSE_DIM {
            return Err(Error::ResourceLimit {
                what: format!("dense dimension {d}"),
                cap: MAX_DENSE_DIM,
            });
        }
        Ok(DenseOperator { space, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix.view())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= 1e-12
    }

    pub fn assert_hermitian(&self) -> Result<()> {
        let err = self.hermiticity_error();
        if err > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "operator is not Hermitian (max |A - A†| = {err:.3e})"
            )));
        }
        Ok(())
    }

    /// Hermitian eigen-decomposition, eigenvalues ascending.
    pub fn eigh(&self) -> Result<(Array1<f64>, Array2<C64>)> {
        eigh(&self.matrix.view())
    }
}

/// Density matrix over a declared space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    pub space: SpaceKind,
    pub rho: Array2<C64>,
}

impl QuantumState {
    pub const TRACE_TOL: f64 = 1e-10;
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-9;

    /// Validates trace, Hermiticity and positivity.
    pub fn new(space: SpaceKind, rho: Array2<C64>) -> Result<Self> {
        let op = DenseOperator::new(space, rho)?;
        let state = QuantumState {
            space: op.space,
            rho: op.matrix,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        let tr = trace(&self.rho.view());
        if (tr - c(1.0)).norm() > Self::TRACE_TOL {
            return Err(Error::NumericalFailure(format!("state trace is {tr}")));
        }
        let herm = hermiticity_error(&self.rho.view());
        if herm > Self::HERMITICITY_TOL {
            return Err(Error::NumericalFailure(format!(
                "state is not Hermitian (max |ρ - ρ†| = {herm:.3e})"
            )));
        }
        let (vals, _) = eigh(&self.rho.view())?;
        if vals[0] < -Self::POSITIVITY_TOL {
            return Err(Error::NumericalFailure(format!(
                "state has negative eigenvalue {:.3e}",
                vals[0]
            )));
        }
        Ok(())
    }

    pub fn pure(space: SpaceKind, psi: &Array1<C64>) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let psi = psi.mapv(|z| z / norm);
        let d = psi.len();
        let rho = Array2::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj());
        QuantumState::new(space, rho)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// `Tr[ρ A]`.
    pub fn expectation(&self, a: &Array2<C64>) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                s += self.rho[[i, j]] * a[[j, i]];
            }
        }
        s
    }

    pub fn populations(&self) -> Vec<f64> {
        self.rho.diag().iter().map(|z| z.re).collect()
    }
}

/// Spin matrices `(S_x, S_y, S_z)` of spin j = two_j/2 in the S_z basis,
/// m ascending from −j.
pub fn spin_matrices(two_j: u32) -> (Array2<C64>, Array2<C64>, Array2<C64>) {
    let d = two_j as usize + 1;
    let j = two_j as f64 / 2.0;
    let mut sx = Array2::zeros((d, d));
    let mut sy = Array2::zeros((d, d));
    let mut sz = Array2::zeros((d, d));
    for k in 0..d {
        let m = -j + k as f64;
        sz[[k, k]] = c(m);
        if k + 1 < d {
            // ⟨m+1|S+|m⟩
            let up = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
            sx[[k + 1, k]] = c(0.5 * up);
            sx[[k, k + 1]] = c(0.5 * up);
            sy[[k + 1, k]] = -I * 0.5 * up;
            sy[[k, k + 1]] = I * 0.5 * up;
        }
    }
    (sx, sy, sz)
}

/// Collective spin operators S_x, S_z on the Dicke sector of N atoms.
pub fn collective_spin_ops(n: u32) -> Result<(DenseOperator, DenseOperator)> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let (sx, _, sz) = spin_matrices(n);
    let space = SpaceKind::DickeSector(n);
    Ok((DenseOperator::new(space.clone(), sx)?, DenseOperator::new(space, sz)?))
}

/// `Σ_j σ_{j,x}/2` and `Σ_j σ_{j,z}/2` on the 2^N product space.
pub fn product_spin_ops(n: u32) -> Result<(DenseOperator, DenseOperator)> {
    product_spin_ops_capped(n, PRODUCT_CAP)
}

pub fn product_spin_ops_capped(n: u32, cap: u32) -> Result<(DenseOperator, DenseOperator)> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if n > cap {
        return Err(Error::ResourceLimit {
            what: format!("product space with N = {n}"),
            cap: cap as usize,
        });
    }
    let (sx1, _, sz1) = spin_matrices(1);
    let space = SpaceKind::FullProduct(n);
    Ok((
        DenseOperator::new(space.clone(), embed_sum(&sx1, n))?,
        DenseOperator::new(space, embed_sum(&sz1, n))?,
    ))
}

/// `Σ_j 1⊗…⊗a_j⊗…⊗1` for a single-site operator `a`.
fn embed_sum(a: &Array2<C64>, n: u32) -> Array2<C64> {
    let d = 1usize << n;
    let mut out = Array2::zeros((d, d));
    for site in 0..n {
        let left = crate::linalg::identity(1usize << site);
        let right = crate::linalg::identity(1usize << (n - site - 1));
        out += &kron(&kron(&left.view(), &a.view()).view(), &right.view());
    }
    out
}

/// H_E(t) = 2Ω(t) Z + 2Δ X with (X, Z) the total spin operators of `kind`.
pub fn engine_hamiltonian(params: &EngineParams, t: f64, kind: &SpaceKind) -> Result<DenseOperator> {
    let (x, z) = match kind {
        SpaceKind::DickeSector(n) => collective_spin_ops(*n)?,
        SpaceKind::FullProduct(n) => product_spin_ops(*n)?,
        other => {
            return Err(Error::InvalidSpace(format!(
                "engine Hamiltonian is defined on spin spaces, not {other:?}"
            )))
        }
    };
    let omega = params.omega_of_t(t)?;
    let h = z.matrix.mapv(|v| v * 2.0 * omega) + x.matrix.mapv(|v| v * 2.0 * params.delta);
    DenseOperator::new(kind.clone(), h)
}

/// Inverse temperature; `Infinite` selects the ground-space projector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl From<f64> for Beta {
    fn from(b: f64) -> Self {
        if b.is_infinite() && b > 0.0 {
            Beta::Infinite
        } else {
            Beta::Finite(b)
        }
    }
}

/// Boltzmann weights of an ascending spectrum, normalized; ground-space
/// uniform mixture for β = ∞.
pub fn gibbs_weights(energies: &[f64], beta: Beta) -> Result<Vec<f64>> {
    if energies.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    let emin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = match beta {
        Beta::Finite(b) => {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::InvalidArgument(format!("β must be finite and ≥ 0, got {b}")));
            }
            energies.iter().map(|e| (-b * (e - emin)).exp()).collect()
        }
        Beta::Infinite => {
            let scale = energies.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
            energies
                .iter()
                .map(|e| if e - emin <= 1e-12 * scale { 1.0 } else { 0.0 })
                .collect()
        }
    };
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / z).collect())
}

/// Gibbs state exp(−βH)/Z built in the eigenbasis of `h`.
pub fn thermal_state(h: &DenseOperator, beta: impl Into<Beta>) -> Result<QuantumState> {
    h.assert_hermitian()?;
    let (vals, vecs) = h.eigh()?;
    let w = gibbs_weights(vals.as_slice().unwrap_or(&vals.to_vec()), beta.into())?;
    let d = h.dim();
    let mut rho = Array2::<C64>::zeros((d, d));
    for (k, wk) in w.iter().enumerate() {
        if *wk == 0.0 {
            continue;
        }
        let v = vecs.column(k);
        for i in 0..d {
            let a = v[i] * *wk;
            for j in 0..d {
                rho[[i, j]] += a * v[j].conj();
            }
        }
    }
    QuantumState::new(h.space.clone(), rho)
}

/// Rotation exp(−iβS_y) on spin two_j/2, returned as a real matrix with
/// columns phase-fixed so that the first nonzero entry is positive.
pub fn rotation_y(two_j: u32, beta: f64) -> Result<Array2<f64>> {
    let (_, sy, _) = spin_matrices(two_j);
    let u = crate::linalg::expm_hermitian(&sy.view(), beta)?;
    let mut r = u.mapv(|z| z.re);
    fix_column_phases(&mut r);
    Ok(r)
}

pub(crate) fn fix_column_phases(r: &mut Array2<f64>) {
    for mut col in r.columns_mut() {
        let scale = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12 * scale).copied() {
            if first < 0.0 {
                col.mapv_inplace(|v| -v);
            }
        }
    }
}

/// θ_t, E_t and the matrix whose columns are |m, θ_t⟩ (m ascending) in the
/// Dicke sector of N atoms.
pub fn instantaneous_eigenbasis(params: &EngineParams, t: f64, n: u32) -> Result<(f64, f64, DenseOperator)> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let theta = params.theta(t)?;
    let e = params.gap(t)?;
    let r = rotation_y(n, theta + std::f64::consts::FRAC_PI_2)?;
    let basis = DenseOperator::new(SpaceKind::DickeSector(n), r.mapv(c))?;
    Ok((theta, e, basis))
}
