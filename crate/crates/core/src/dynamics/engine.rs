//! Engine blocks in the eigenbasis of V_R. Every block carries the collective
//! drive 2ΩS_z + 2ΔS_x and the coupling operator V_R = 2S_x.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::hilbert::{spin_matrices, Beta, PRODUCT_CAP};
use crate::linalg::{dagger, eigh, hermitian_function, kron_power, polish_unitary, C64, I};
use crate::protocols::EngineParams;

/// exp(−iβS_y) from a cached eigendecomposition of S_y.
#[derive(Debug, Clone)]
pub(crate) struct Rotor {
    vecs: Array2<C64>,
    vals: Array1<f64>,
}

impl Rotor {
    pub fn new(two_j: u32) -> Result<Self> {
        let (_, sy, _) = spin_matrices(two_j);
        let (vals, vecs) = eigh(&sy.view())?;
        Ok(Rotor { vecs, vals })
    }

    pub fn rot(&self, beta: f64) -> Array2<C64> {
        hermitian_function(&self.vals, &self.vecs, |e| (-I * e * beta).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Layout {
    /// One spin-j irrep, stored as 2j.
    Spin(u32),
    /// N spin-1/2 factors.
    Product(u32),
}

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub layout: Layout,
    /// Number of copies of this irrep inside the physical space.
    pub multiplicity: f64,
    pub dim: usize,
    /// Eigenvalues of V_R, in the order of the working basis.
    pub vr: Vec<f64>,
    rotor: Rotor,
    /// Columns: V_R eigenvectors of one factor (the whole irrep or one site).
    p: Array2<C64>,
}

impl Block {
    pub fn spin(two_j: u32, multiplicity: f64) -> Result<Self> {
        let rotor = Rotor::new(two_j)?;
        let p = rotor.rot(std::f64::consts::FRAC_PI_2);
        let j = two_j as f64 / 2.0;
        Ok(Block {
            layout: Layout::Spin(two_j),
            multiplicity,
            dim: two_j as usize + 1,
            vr: (0..=two_j).map(|k| 2.0 * (k as f64 - j)).collect(),
            rotor,
            p,
        })
    }

    pub fn product(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if n > PRODUCT_CAP {
            return Err(Error::ResourceLimit {
                what: format!("product space with N = {n}"),
                cap: PRODUCT_CAP as usize,
            });
        }
        let rotor = Rotor::new(1)?;
        let p = rotor.rot(std::f64::consts::FRAC_PI_2);
        let dim = 1usize << n;
        Ok(Block {
            layout: Layout::Product(n),
            multiplicity: 1.0,
            dim,
            vr: (0..dim).map(|a| site_sum(a, n, [-1.0, 1.0])).collect(),
            rotor,
            p,
        })
    }

    fn factor_levels(&self) -> Vec<f64> {
        let two_j = match self.layout {
            Layout::Spin(t) => t,
            Layout::Product(_) => 1,
        };
        let j = two_j as f64 / 2.0;
        (0..=two_j).map(|k| k as f64 - j).collect()
    }

    /// Eigenvector matrix of one factor at time t expressed in the V_R basis,
    /// with factor energies 2E·m.
    fn factor_eigen(&self, params: &EngineParams, t: f64) -> Result<(Vec<f64>, Array2<C64>)> {
        let theta = params.theta(t)?;
        let e = params.gap(t)?;
        let r = self.rotor.rot(theta + std::f64::consts::FRAC_PI_2);
        let vecs = dagger(&self.p.view()).dot(&r);
        Ok((self.factor_levels().iter().map(|m| 2.0 * e * m).collect(), vecs))
    }

    /// Energies and eigenvectors (columns, V_R basis) of H_E(t) on the block.
    pub fn eigen(&self, params: &EngineParams, t: f64) -> Result<(Vec<f64>, Array2<C64>)> {
        let (levels, vecs) = self.factor_eigen(params, t)?;
        match self.layout {
            Layout::Spin(_) => Ok((levels, vecs)),
            Layout::Product(n) => {
                let energies = (0..self.dim).map(|a| site_sum(a, n, [levels[0], levels[1]])).collect();
                Ok((energies, kron_power(&vecs.view(), n)))
            }
        }
    }

    /// exp(−iH_E(t)dt) in the V_R basis.
    pub fn free_factor(&self, params: &EngineParams, t: f64, dt: f64) -> Result<Array2<C64>> {
        let (levels, vecs) = self.factor_eigen(params, t)?;
        let phases = Array1::from_iter(levels.iter().map(|e| (-I * e * dt).exp()));
        let u = polish_unitary((&vecs * &phases.insert_axis(ndarray::Axis(0))).dot(&dagger(&vecs.view())));
        Ok(match self.layout {
            Layout::Spin(_) => u,
            Layout::Product(n) => kron_power(&u.view(), n),
        })
    }

    /// Maps a vector in the V_R basis back to the native basis (Dicke states
    /// ascending in m, or the computational product basis).
    #[cfg(test)]
    pub fn to_native(&self) -> Array2<C64> {
        match self.layout {
            Layout::Spin(_) => self.p.clone(),
            Layout::Product(n) => kron_power(&self.p.view(), n),
        }
    }
}

/// Σ over the n bits of `a` (site 0 = most significant) of `vals[bit]`.
fn site_sum(a: usize, n: u32, vals: [f64; 2]) -> f64 {
    (0..n).map(|s| vals[(a >> (n - 1 - s)) & 1]).sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// How the engine space is represented during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Dicke sector for bosons; product space up to four atoms, spin sectors
    /// beyond, for distinguishable atoms.
    #[default]
    Auto,
    Dicke,
    FullProduct,
    SpinSectors,
}


/// Resolves the backend and builds the engine blocks.
pub(crate) fn blocks_for(
    n: u32,
    statistics: crate::protocols::Statistics,
    backend: Backend,
) -> Result<(Backend, Vec<Block>)> {
    use crate::protocols::Statistics;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let resolved = match (backend, statistics) {
        (Backend::Auto, Statistics::Bose) => Backend::Dicke,
        (Backend::Auto, Statistics::Distinguishable) if n <= 4 => Backend::FullProduct,
        (Backend::Auto, Statistics::Distinguishable) => Backend::SpinSectors,
        (b, _) => b,
    };
    match (resolved, statistics) {
        (Backend::Dicke, Statistics::Distinguishable) if n > 1 => {
            return Err(Error::InvalidArgument(
                "the Dicke sector alone does not describe distinguishable atoms".into(),
            ))
        }
        (Backend::FullProduct | Backend::SpinSectors, Statistics::Bose) if n > 1 => {
            return Err(Error::InvalidArgument(
                "bosonic engines live in the Dicke sector; use the dicke backend".into(),
            ))
        }
        _ => {}
    }
    let blocks = match resolved {
        Backend::Dicke => vec![Block::spin(n, 1.0)?],
        Backend::FullProduct => {
            if n > 8 {
                return Err(Error::ResourceLimit {
                    what: format!("full product space with N = {n}"),
                    cap: 8,
                });
            }
            vec![Block::product(n)?]
        }
        Backend::SpinSectors => (0..=n / 2)
            .map(|k| {
                let mult = binomial(n, k) - if k == 0 { 0.0 } else { binomial(n, k - 1) };
                Block::spin(n - 2 * k, mult)
            })
            .collect::<Result<_>>()?,
        Backend::Auto => unreachable!(),
    };
    Ok((resolved, blocks))
}

/// Gibbs ensemble of the blocks at time t: per block, (weights, eigenvectors
/// as columns). Weights are normalized over all blocks including
/// multiplicities.
pub(crate) fn gibbs_ensemble(
    blocks: &[Block],
    params: &EngineParams,
    t: f64,
    beta: Beta,
) -> Result<Vec<(Vec<f64>, Array2<C64>)>> {
    let mut eig = Vec::with_capacity(blocks.len());
    let mut emin = f64::INFINITY;
    let mut scale = 1.0_f64;
    for b in blocks {
        let (e, v) = b.eigen(params, t)?;
        for x in &e {
            emin = emin.min(*x);
            scale = scale.max(x.abs());
        }
        eig.push((e, v));
    }
    let mut out = Vec::with_capacity(blocks.len());
    let mut z = 0.0;
    for (b, (e, v)) in blocks.iter().zip(eig) {
        let w: Vec<f64> = match beta {
            Beta::Finite(bt) => {
                if !(bt.is_finite() && bt >= 0.0) {
                    return Err(Error::InvalidArgument(format!("β must be finite and ≥ 0, got {bt}")));
                }
                e.iter().map(|x| b.multiplicity * (-bt * (x - emin)).exp()).collect()
            }
            Beta::Infinite => e
                .iter()
                .map(|x| if x - emin <= 1e-12 * scale { b.multiplicity } else { 0.0 })
                .collect(),
        };
        z += w.iter().sum::<f64>();
        out.push((w, v));
    }
    for (w, _) in out.iter_mut() {
        for x in w.iter_mut() {
            *x /= z;
        }
    }
    Ok(out)
}
