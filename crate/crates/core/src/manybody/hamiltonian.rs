use serde::{Deserialize, Serialize};

use crate::error::{CdftError, Result};
use crate::lattice::{curl, Curl, Grid, NeighborTable, ScalarField, VectorField};
use crate::manybody::operator::TensorOperator;
use crate::manybody::wavefunction::{tensor_inner, WaveFunction};
use crate::pair::DensityPair;
use crate::scalar::{Complex, Real};

/// External fields `(v, A)` and the Coulomb softening length.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials<T: Real> {
    pub v: ScalarField<T>,
    pub a: VectorField<T>,
    pub eta: T,
}

impl<T: Real> Potentials<T> {
    pub fn new(v: ScalarField<T>, a: VectorField<T>, eta: T) -> Result<Self> {
        v.grid().same_as(a.grid())?;
        if !(eta >= T::zero()) {
            return Err(CdftError::InvalidArgument("softening eta must be >= 0".into()));
        }
        Ok(Self { v, a, eta })
    }

    /// `A = 0` and the default softening `eta = h/2`.
    pub fn scalar(v: ScalarField<T>) -> Self {
        let eta = Self::default_eta(v.grid());
        let a = VectorField::zeros(v.grid());
        Self { v, a, eta }
    }

    pub fn zero(grid: &Grid<T>) -> Self {
        Self::scalar(ScalarField::zeros(grid))
    }

    pub fn default_eta(grid: &Grid<T>) -> T {
        grid.spacing()[0] * T::lit(0.5)
    }

    pub fn with_eta(mut self, eta: T) -> Self {
        self.eta = eta;
        self
    }

    pub fn grid(&self) -> &Grid<T> {
        self.v.grid()
    }

    /// `B = curl A`; `None` in 1D.
    pub fn magnetic_field(&self) -> Option<Curl<T>> {
        curl(&self.a).ok()
    }

    /// `v + |A|^2`.
    pub fn effective_scalar(&self) -> ScalarField<T> {
        let a2 = self.a.magnitude_sq();
        let vals = self.v.values().iter().zip(a2.values()).map(|(&v, &q)| v + q).collect();
        ScalarField::new(self.grid().clone(), vals).expect("same grid")
    }

    pub fn has_vector_potential(&self) -> bool {
        self.a.values().iter().any(|&x| x != T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    /// `H(v, A)`: kinetic, fields and interaction.
    Full,
    /// `H'(v, A)`: no interaction.
    NonInteracting,
    /// `H_0 = K + W`.
    H0,
    /// `K = -sum Delta_k`.
    Kinetic,
}

/// Matrix-free operator for the selected Hamiltonian.
pub fn hamiltonian_operator<T: Real>(p: &Potentials<T>, n: usize, kind: HamiltonianKind) -> Result<TensorOperator<T>> {
    let op = TensorOperator::new(p.grid(), n)?.with_kinetic();
    Ok(match kind {
        HamiltonianKind::Kinetic => op,
        HamiltonianKind::H0 => op.with_interaction(p.eta),
        HamiltonianKind::Full | HamiltonianKind::NonInteracting => {
            let mut op = op.with_scalar(&p.effective_scalar())?;
            if p.has_vector_potential() {
                op = op.with_current(&p.a.map(|x| x * T::lit(2.0)))?;
            }
            if kind == HamiltonianKind::Full {
                op = op.with_interaction(p.eta);
            }
            op
        }
    })
}

/// `H psi` as a full (not normalized) tensor.
pub fn apply_hamiltonian<T: Real>(p: &Potentials<T>, psi: &WaveFunction<T>, kind: HamiltonianKind) -> Result<Vec<Complex<T>>> {
    p.grid().same_as(psi.grid())?;
    let op = hamiltonian_operator(p, psi.n_particles(), kind)?;
    Ok(op.apply_vec(psi.amplitudes()))
}

/// `<psi, H psi>` for the given kind.
pub fn expectation<T: Real>(p: &Potentials<T>, psi: &WaveFunction<T>, kind: HamiltonianKind) -> Result<T> {
    let h = apply_hamiltonian(p, psi, kind)?;
    Ok(tensor_inner(psi.grid(), psi.n_particles(), psi.amplitudes(), &h).re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyDecomposition<T> {
    /// `<psi, H(v, A) psi>` by direct application.
    pub total: T,
    pub h0_part: T,
    /// `2 sum j . A h^d`.
    pub current_coupling: T,
    /// `sum rho (v + |A|^2) h^d`.
    pub density_coupling: T,
}

impl<T: Real> EnergyDecomposition<T> {
    /// `|total - (h0 + current + density)| / |total|`.
    pub fn relative_defect(&self) -> T {
        let parts = self.h0_part + self.current_coupling + self.density_coupling;
        let scale = self.total.abs().max(T::lit(1e-300));
        (self.total - parts).abs() / scale
    }
}

pub fn energy<T: Real>(p: &Potentials<T>, psi: &WaveFunction<T>) -> Result<EnergyDecomposition<T>> {
    let total = expectation(p, psi, HamiltonianKind::Full)?;
    let h0_part = expectation(p, psi, HamiltonianKind::H0)?;
    let pair = density_pair(psi);
    let (current_coupling, density_coupling) = couplings(p, &pair)?;
    Ok(EnergyDecomposition { total, h0_part, current_coupling, density_coupling })
}

/// `(2 sum j . A h^d, sum rho (v + |A|^2) h^d)`.
pub fn couplings<T: Real>(p: &Potentials<T>, pair: &DensityPair<T>) -> Result<(T, T)> {
    p.grid().same_as(pair.grid())?;
    let cur = crate::lattice::integrate_dot(&pair.jp, &p.a)? * T::lit(2.0);
    let den = crate::lattice::integrate_product(&pair.rho, &p.effective_scalar())?;
    Ok((cur, den))
}

/// One-body marginals `(rho, j)` of a full antisymmetric tensor normalized to 1.
pub fn tensor_marginals<T: Real>(grid: &Grid<T>, n: usize, amps: &[Complex<T>]) -> (Vec<T>, Vec<T>) {
    let m = grid.len();
    let d = grid.dim();
    let rest = amps.len() / m;
    let table = grid.neighbor_table();
    let w = grid.cell_volume().powi(n as i32 - 1) * T::from_usize_lossy(n);
    let mut rho = vec![T::zero(); m];
    let mut jp = vec![T::zero(); m * d];
    for x in 0..m {
        let base = x * rest;
        let mut r = T::zero();
        for k in 0..rest {
            r += amps[base + k].norm_sqr();
        }
        rho[x] = r * w;
        for axis in 0..d {
            let inv2h = T::one() / (T::lit(2.0) * grid.spacing()[axis]);
            let nb = table.get(axis, x);
            let mut s = T::zero();
            for k in 0..rest {
                let here = amps[base + k];
                let at = |q: u32| {
                    if q == NeighborTable::GHOST {
                        Complex::new(T::zero(), T::zero())
                    } else {
                        amps[q as usize * rest + k]
                    }
                };
                let dpsi = (at(nb[1]) - at(nb[0])) * inv2h;
                s += (here.conj() * dpsi).im;
            }
            jp[x * d + axis] = s * w;
        }
    }
    (rho, jp)
}

/// `(rho, j^p)` of a wavefunction.
pub fn density_pair<T: Real>(psi: &WaveFunction<T>) -> DensityPair<T> {
    let g = psi.grid();
    let (rho, jp) = tensor_marginals(g, psi.n_particles(), psi.amplitudes());
    DensityPair::new(
        ScalarField::new(g.clone(), rho).expect("shape"),
        VectorField::new(g.clone(), jp).expect("shape"),
        psi.n_particles(),
    )
    .expect("same grid")
}
