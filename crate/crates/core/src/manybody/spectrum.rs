use serde::Serialize;

use crate::error::{CdftError, Result};
use crate::manybody::eigen::{lowest_pairs, EigenOptions, LinearMap, ShiftedCg, SolverInfo};
use crate::manybody::hamiltonian::{hamiltonian_operator, HamiltonianKind, Potentials};
use crate::manybody::operator::TensorOperator;
use crate::manybody::sector::Sector;
use crate::manybody::wavefunction::WaveFunction;
use crate::scalar::{czero, Complex, Real};

/// Default cap on the antisymmetric sector dimension.
pub const DEFAULT_BUDGET: usize = 200_000;

/// Tensor operator restricted to the antisymmetric sector (orthonormal
/// coordinates): expand, apply in full space, compress.
pub struct SectorOperator<'a, T: Real> {
    pub op: &'a TensorOperator<T>,
    pub sector: &'a Sector<T>,
}

impl<T: Real> LinearMap<T> for SectorOperator<'_, T> {
    fn dim(&self) -> usize {
        self.sector.dim()
    }

    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        let full = self.sector.expand_vec(x);
        self.op.apply_rows(&full, self.sector.representatives(), self.sector.tuples(), y);
        let s = self.sector.scale();
        for v in y.iter_mut() {
            *v = *v * s;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult<T: Real> {
    pub e0: T,
    pub e1: T,
    pub ground_state: WaveFunction<T>,
    pub gap: T,
    pub degenerate: bool,
    pub residual: T,
    pub solver: SolverInfo,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub e0: f64,
    pub gap: f64,
    pub degenerate: bool,
    pub solver: SolverInfo,
}

impl<T: Real> SpectrumResult<T> {
    pub fn summary(&self) -> SpectrumSummary {
        SpectrumSummary { e0: self.e0.as_f64(), gap: self.gap.as_f64(), degenerate: self.degenerate, solver: self.solver }
    }

    /// Refuses flagged results; CDFT consumers call this first.
    pub fn require_nondegenerate(&self) -> Result<&Self> {
        if self.degenerate {
            Err(CdftError::DegenerateGroundState { gap: self.gap.as_f64() })
        } else {
            Ok(self)
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateOptions {
    pub budget: usize,
    pub eigen: EigenOptions,
    /// CG steps of the kinetic preconditioner in the iterative solver.
    pub preconditioner_steps: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, eigen: EigenOptions::default(), preconditioner_steps: 12 }
    }
}

/// Ground state of an arbitrary tensor operator in the antisymmetric sector.
pub fn ground_state_of<T: Real>(op: &TensorOperator<T>, tol: T, opts: &GroundStateOptions) -> Result<SpectrumResult<T>> {
    let sector = Sector::new(op.grid(), op.n_particles(), opts.budget)?;
    let map = SectorOperator { op, sector: &sector };
    if sector.dim() == 1 {
        let x = vec![Complex::new(T::one(), T::zero())];
        let mut y = vec![czero(); 1];
        map.apply(&x, &mut y);
        let gs = WaveFunction::from_sector(&sector, op.grid(), &x)?;
        let inf = T::max_value().unwrap();
        return Ok(SpectrumResult {
            e0: y[0].re,
            e1: inf,
            ground_state: gs,
            gap: inf,
            degenerate: false,
            residual: T::zero(),
            solver: SolverInfo { kind: crate::manybody::eigen::SolverKind::Dense, iterations: 1, tol: tol.as_f64() },
        });
    }
    let kinetic = TensorOperator::new(op.grid(), op.n_particles())?.with_kinetic();
    let kmap = SectorOperator { op: &kinetic, sector: &sector };
    let pc = ShiftedCg { k: &kmap, steps: opts.preconditioner_steps };
    let pairs = lowest_pairs(&map, tol, &opts.eigen, Some(&pc))?;
    let (e0, e1) = (pairs.values[0], pairs.values[1]);
    let gap = e1 - e0;
    let gs = WaveFunction::from_sector(&sector, op.grid(), &pairs.vectors[0])?.canonical_phase();
    Ok(SpectrumResult {
        e0,
        e1,
        ground_state: gs,
        gap,
        degenerate: gap < tol * T::lit(100.0),
        residual: pairs.residuals[0],
        solver: pairs.info,
    })
}

/// Lowest eigenpair of `H(v, A)` or `H'(v, A)` for `n` fermions.
pub fn ground_state<T: Real>(p: &Potentials<T>, n: usize, kind: HamiltonianKind, tol: T) -> Result<SpectrumResult<T>> {
    ground_state_with(p, n, kind, tol, &GroundStateOptions::default())
}

pub fn ground_state_with<T: Real>(
    p: &Potentials<T>,
    n: usize,
    kind: HamiltonianKind,
    tol: T,
    opts: &GroundStateOptions,
) -> Result<SpectrumResult<T>> {
    let op = hamiltonian_operator(p, n, kind)?;
    ground_state_of(&op, tol, opts)
}
