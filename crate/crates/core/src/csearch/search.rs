//! Constrained search over wavefunctions or determinants pinned to a target
//! density pair, by an augmented Lagrangian with quasi-Newton inner solves.
//!
//! Both spaces are Stiefel frames with the Euclidean inner product: one column
//! of orthonormal sector coordinates, or `N` orbital columns scaled by
//! `sqrt(h^d)`. With `u = lambda_rho + mu c_rho` and `a = lambda_j + mu c_j`
//! the Lagrangian gradient is `2 (O + V[u] + J[a]) x`, so every evaluation is
//! one operator application.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csearch::phase::CURL_TOL;
use crate::csearch::yn::{validate_pair, NORMALIZATION_TOL};
use crate::error::{CdftError, Result};
use crate::lattice::{Boundary, ComplexField, Grid, ScalarField, VectorField};
use crate::manybody::determinant::orbital_marginals;
use crate::manybody::eigen::{lowest_dense, EigenOptions};
use crate::manybody::hamiltonian::tensor_marginals;
use crate::manybody::operator::pair_table;
use crate::manybody::spectrum::{ground_state_of, GroundStateOptions, SectorOperator, DEFAULT_BUDGET};
use crate::manybody::{Determinant, Sector, TensorOperator, WaveFunction};
use crate::optim::{minimize, Frame, LbfgsOptions};
use crate::pair::DensityPair;
use crate::scalar::{czero, Complex, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `K + W`.
    H0,
    Kinetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchSpace {
    Wavefunctions,
    Determinants,
}

#[derive(Debug, Clone)]
pub enum Minimizer<T: Real> {
    Wave(WaveFunction<T>),
    Det(Determinant<T>),
}

impl<T: Real> Minimizer<T> {
    pub fn wavefunction(&self) -> &WaveFunction<T> {
        match self {
            Minimizer::Wave(w) => w,
            Minimizer::Det(d) => d.wavefunction(),
        }
    }

    pub fn density_pair(&self) -> DensityPair<T> {
        match self {
            Minimizer::Wave(w) => crate::manybody::density_pair(w),
            Minimizer::Det(d) => d.density_pair(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintResidual {
    pub rho_l1: f64,
    pub jp_l1: f64,
}

impl ConstraintResidual {
    pub fn max(&self) -> f64 {
        self.rho_l1.max(self.jp_l1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub lower_bound: f64,
    pub source: String,
}

#[derive(Debug, Clone)]
pub struct CsearchProblem<T: Real> {
    pub target: DensityPair<T>,
    pub objective: Objective,
    pub space: SearchSpace,
    /// Constrain rho only (Levy-Lieb mode).
    pub ignore_current: bool,
    pub penalty_schedule: Vec<T>,
    pub multiplier_update: bool,
    /// Projected-gradient tolerance of each inner solve.
    pub inner_tol: T,
    /// L1 tolerance on both constraint residuals.
    pub constraint_tol: T,
    pub seed: u64,
    pub max_restarts: usize,
    /// Softening of the pair interaction (objective `h0`).
    pub eta: T,
    pub budget: usize,
    /// Multiplier updates per penalty stage.
    pub max_outer: usize,
    pub max_inner: usize,
    pub curl_tol: f64,
    /// Tried first, in order, before seeded random starts.
    pub warm_starts: Vec<Minimizer<T>>,
    pub certificate: bool,
}

impl<T: Real> CsearchProblem<T> {
    pub fn new(target: DensityPair<T>, objective: Objective, space: SearchSpace) -> Self {
        let eta = crate::manybody::Potentials::default_eta(target.grid());
        Self {
            target,
            objective,
            space,
            ignore_current: false,
            penalty_schedule: [1e1, 1e2, 1e3, 1e4].iter().map(|&m| T::lit(m)).collect(),
            multiplier_update: true,
            inner_tol: T::lit(1e-8),
            constraint_tol: T::lit(1e-6),
            seed: 0,
            max_restarts: 8,
            eta,
            budget: DEFAULT_BUDGET,
            max_outer: 25,
            max_inner: 3000,
            curl_tol: CURL_TOL,
            warm_starts: Vec::new(),
            certificate: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CdftError::InvalidArgument(m.into()));
        if self.penalty_schedule.is_empty() || !(self.penalty_schedule[0] > T::zero()) {
            return bad("penalty schedule must be nonempty and positive");
        }
        if self.penalty_schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("penalty weights must be strictly increasing");
        }
        if !(self.inner_tol > T::zero()) || !(self.constraint_tol > T::zero()) {
            return bad("tolerances must be positive");
        }
        if self.max_restarts == 0 && self.warm_starts.is_empty() {
            return bad("need at least one start");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CsearchResult<T: Real> {
    pub value: T,
    pub minimizer: Minimizer<T>,
    pub constraint_residual: ConstraintResidual,
    pub converged: bool,
    pub restarts_used: usize,
    pub certificate: Option<Certificate>,
    /// Index of the winning start (warm starts first; one past the last start
    /// when an exact one-particle chain orbital wins unmodified).
    pub best_start: usize,
    /// Residual (max of the two L1 norms) at the end of each penalty stage.
    pub stage_residuals: Vec<f64>,
    /// Final multipliers, approximations of `v + |A|^2 - e` and `2A`.
    pub multiplier_rho: ScalarField<T>,
    pub multiplier_jp: VectorField<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CsearchSummary {
    pub value: f64,
    pub constraint_residual: ConstraintResidual,
    pub converged: bool,
    pub restarts_used: usize,
    pub certificate: Option<Certificate>,
    pub best_start: usize,
    pub stage_residuals: Vec<f64>,
}

impl<T: Real> CsearchResult<T> {
    pub fn summary(&self) -> CsearchSummary {
        CsearchSummary {
            value: self.value.as_f64(),
            constraint_residual: self.constraint_residual,
            converged: self.converged,
            restarts_used: self.restarts_used,
            certificate: self.certificate.clone(),
            best_start: self.best_start,
            stage_residuals: self.stage_residuals.clone(),
        }
    }
}

/// One evaluation: marginals, `<x, O_eff x>` and `O_eff x`.
struct Eval<T: Real> {
    rho: Vec<T>,
    jp: Vec<T>,
    energy: T,
    grad: Frame<T>,
}

enum Param<T: Real> {
    Wave { sector: Sector<T>, base: TensorOperator<T> },
    Det { one_body: TensorOperator<T>, pair: Option<Arc<Vec<T>>>, n: usize },
}

impl<T: Real> Param<T> {
    fn shape(&self, grid: &Grid<T>) -> (usize, usize) {
        match self {
            Param::Wave { sector, .. } => (sector.dim(), 1),
            Param::Det { n, .. } => (grid.len(), *n),
        }
    }

    /// `potentials` maps the marginals to `(u, a)`; `a` is `None` when no current term applies.
    fn eval(
        &self,
        grid: &Grid<T>,
        x: &Frame<T>,
        potentials: &dyn Fn(&[T], &[T]) -> (Vec<T>, Option<Vec<T>>),
    ) -> Eval<T> {
        let hd = grid.cell_volume();
        match self {
            Param::Wave { sector, base } => {
                let full = sector.expand_vec(x.col(0));
                let (rho, jp) = tensor_marginals(grid, sector.n_particles(), &full);
                let (u, a) = potentials(&rho, &jp);
                let mut op = base.clone().with_scalar_values(u);
                if let Some(a) = a {
                    op = op.with_current_values(&a);
                }
                let mut y = vec![czero(); sector.dim()];
                op.apply_rows(&full, sector.representatives(), sector.tuples(), &mut y);
                let s = sector.scale();
                let mut energy = T::zero();
                for (yv, xv) in y.iter_mut().zip(x.col(0)) {
                    *yv = *yv * s;
                    energy += (xv.conj() * *yv).re;
                    *yv = *yv * T::lit(2.0);
                }
                Eval { rho, jp, energy, grad: Frame::new(x.rows, 1, y) }
            }
            Param::Det { one_body, pair, n } => {
                let m = grid.len();
                let cols: Vec<&[Complex<T>]> = (0..*n).map(|k| x.col(k)).collect();
                let (mut rho, mut jp) = orbital_marginals(grid, &cols);
                let inv = T::one() / hd;
                rho.iter_mut().chain(jp.iter_mut()).for_each(|v| *v = *v * inv);
                let (u, a) = potentials(&rho, &jp);
                let mut op = one_body.clone().with_scalar_values(u);
                if let Some(a) = a {
                    op = op.with_current_values(&a);
                }
                let mut grad = vec![czero::<T>(); m * n];
                let mut energy = T::zero();
                for k in 0..*n {
                    let out = &mut grad[k * m..(k + 1) * m];
                    op.apply(cols[k], out);
                    energy += cols[k].iter().zip(out.iter()).fold(T::zero(), |s, (a, b)| s + (a.conj() * b).re);
                }
                if let Some(w) = pair {
                    let fock = fock_apply(w, &cols, m);
                    for k in 0..*n {
                        for p in 0..m {
                            let f = fock[k * m + p];
                            energy += (cols[k][p].conj() * f).re * T::lit(0.5);
                            grad[k * m + p] += f;
                        }
                    }
                }
                grad.iter_mut().for_each(|g| *g = *g * T::lit(2.0));
                Eval { rho, jp, energy, grad: Frame::new(m, *n, grad) }
            }
        }
    }

    fn marginals(&self, grid: &Grid<T>, x: &Frame<T>) -> (Vec<T>, Vec<T>) {
        match self {
            Param::Wave { sector, .. } => tensor_marginals(grid, sector.n_particles(), &sector.expand_vec(x.col(0))),
            Param::Det { n, .. } => {
                let cols: Vec<&[Complex<T>]> = (0..*n).map(|k| x.col(k)).collect();
                let (mut rho, mut jp) = orbital_marginals(grid, &cols);
                let inv = T::one() / grid.cell_volume();
                rho.iter_mut().chain(jp.iter_mut()).for_each(|v| *v = *v * inv);
                (rho, jp)
            }
        }
    }

    fn minimizer(&self, grid: &Grid<T>, x: &Frame<T>) -> Result<Minimizer<T>> {
        match self {
            Param::Wave { sector, .. } => Ok(Minimizer::Wave(WaveFunction::from_sector(sector, grid, x.col(0))?)),
            Param::Det { n, .. } => {
                let inv = T::one() / grid.cell_volume().sqrt();
                let orbitals = (0..*n)
                    .map(|k| ComplexField::new(grid.clone(), x.col(k).iter().map(|z| *z * inv).collect()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Minimizer::Det(Determinant::new(orbitals)?))
            }
        }
    }

    fn frame_of(&self, grid: &Grid<T>, start: &Minimizer<T>) -> Result<Frame<T>> {
        let (rows, cols) = self.shape(grid);
        match (self, start) {
            (Param::Wave { sector, .. }, m) => {
                let w = m.wavefunction();
                grid.same_as(w.grid())?;
                if w.n_particles() != sector.n_particles() {
                    return Err(CdftError::InvalidArgument("warm start has wrong particle number".into()));
                }
                Frame::new(rows, 1, sector.compress_vec(w.amplitudes())).orthonormalized()
            }
            (Param::Det { .. }, Minimizer::Det(d)) => {
                grid.same_as(d.grid())?;
                if d.n_particles() != cols {
                    return Err(CdftError::InvalidArgument("warm start has wrong particle number".into()));
                }
                let s = grid.cell_volume().sqrt();
                let data = d.orbitals().iter().flat_map(|f| f.values().iter().map(move |z| *z * s)).collect();
                Frame::new(rows, cols, data).orthonormalized()
            }
            (Param::Det { .. }, Minimizer::Wave(_)) => {
                Err(CdftError::InvalidArgument("a wavefunction cannot seed a determinant search".into()))
            }
        }
    }
}

/// One particle on an open chain: the density fixes `|f|`, the current fixes
/// every bond current `b_k = Im(conj f_k f_(k+1))` by forward recursion, and
/// each bond phase has two branches of which `cos >= 0` has lower kinetic
/// energy. The feasible set is finite, so this is the exact minimizer.
/// `None` when the target admits no such orbital.
fn open_chain_orbital<T: Real>(target: &DensityPair<T>, tol: f64) -> Option<Vec<Complex<T>>> {
    let g = target.grid();
    if target.n_particles != 1 || g.dim() != 1 || g.boundary() != Boundary::Dirichlet {
        return None;
    }
    let m = g.len();
    let two_h = T::lit(2.0) * g.spacing()[0];
    let mag: Vec<T> = target.rho.values().iter().map(|r| r.sqrt()).collect();
    let jp = target.jp.values();
    let mut f = vec![Complex::new(mag[0], T::zero())];
    let (mut b, mut theta) = (T::zero(), T::zero());
    for k in 0..m - 1 {
        b = two_h * jp[k] - b;
        let a = mag[k] * mag[k + 1];
        let s = if a > T::zero() { b / a } else { T::zero() };
        if s.abs().as_f64() > 1.0 + 1e-9 || (a == T::zero() && b.abs().as_f64() > tol) {
            return None;
        }
        theta += s.max(-T::one()).min(T::one()).asin();
        f.push(Complex::new(mag[k + 1] * theta.cos(), mag[k + 1] * theta.sin()));
    }
    // the last site has no forward bond
    ((two_h * jp[m - 1] - b).abs().as_f64() <= tol).then_some(f)
}

/// `(J - X) Phi_k` for Euclidean-orthonormal orbital columns.
fn fock_apply<T: Real>(w: &[T], cols: &[&[Complex<T>]], m: usize) -> Vec<Complex<T>> {
    let n = cols.len();
    let dens: Vec<T> = (0..m).map(|y| cols.iter().fold(T::zero(), |s, c| s + c[y].norm_sqr())).collect();
    let mut out = vec![czero::<T>(); n * m];
    let mut pk = vec![czero::<T>(); m];
    for x in 0..m {
        let row = &w[x * m..(x + 1) * m];
        let hartree = row.iter().zip(&dens).fold(T::zero(), |s, (&a, &b)| s + a * b);
        for k in 0..n {
            out[k * m + x] = cols[k][x] * hartree;
        }
    }
    // exchange: sum_l Phi_l(x) sum_y W(x, y) conj(Phi_l(y)) Phi_k(y)
    for l in 0..n {
        for k in 0..n {
            for x in 0..m {
                let row = &w[x * m..(x + 1) * m];
                pk[x] = row
                    .iter()
                    .zip(cols[l].iter().zip(cols[k]))
                    .fold(czero::<T>(), |s, (&wxy, (a, b))| s + a.conj() * b * wxy);
            }
            for x in 0..m {
                out[k * m + x] -= cols[l][x] * pk[x];
            }
        }
    }
    out
}

struct RunOutcome<T: Real> {
    x: Frame<T>,
    value: T,
    residual: ConstraintResidual,
    stage_residuals: Vec<f64>,
    lam_rho: Vec<T>,
    lam_jp: Vec<T>,
    inner_converged: bool,
}

struct Search<'a, T: Real> {
    problem: &'a CsearchProblem<T>,
    param: Param<T>,
}

impl<T: Real> Search<'_, T> {
    fn grid(&self) -> &Grid<T> {
        self.problem.target.grid()
    }

    fn residual(&self, rho: &[T], jp: &[T]) -> ConstraintResidual {
        let g = self.grid();
        let d = g.dim();
        let hd = g.cell_volume();
        let t = &self.problem.target;
        let r = rho.iter().zip(t.rho.values()).fold(T::zero(), |s, (&a, &b)| s + (a - b).abs()) * hd;
        let j = if self.problem.ignore_current {
            T::zero()
        } else {
            jp.chunks(d)
                .zip(t.jp.values().chunks(d))
                .fold(T::zero(), |s, (a, b)| s + a.iter().zip(b).fold(T::zero(), |q, (&x, &y)| q + (x - y) * (x - y)).sqrt())
                * hd
        };
        ConstraintResidual { rho_l1: r.as_f64(), jp_l1: j.as_f64() }
    }

    /// Lagrangian value, gradient and the bare objective.
    fn lagrangian(&self, x: &Frame<T>, lam_rho: &[T], lam_jp: &[T], mu: T) -> (T, Frame<T>, T, Vec<T>, Vec<T>) {
        let p = self.problem;
        let hd = self.grid().cell_volume();
        let tr = p.target.rho.values();
        let tj = p.target.jp.values();
        let with_current = !p.ignore_current;
        let pot = |rho: &[T], jp: &[T]| {
            let u = rho.iter().zip(tr).zip(lam_rho).map(|((&r, &t), &l)| l + mu * (r - t)).collect();
            let a = with_current.then(|| jp.iter().zip(tj).zip(lam_jp).map(|((&j, &t), &l)| l + mu * (j - t)).collect());
            (u, a)
        };
        let ev = self.param.eval(self.grid(), x, &pot);
        let half = T::lit(0.5);
        let mut coupling = T::zero();
        let mut penalty = T::zero();
        for ((&r, &t), &l) in ev.rho.iter().zip(tr).zip(lam_rho) {
            let c = r - t;
            coupling += (l + mu * c) * r;
            penalty += l * c + half * mu * c * c;
        }
        if with_current {
            for ((&j, &t), &l) in ev.jp.iter().zip(tj).zip(lam_jp) {
                let c = j - t;
                coupling += (l + mu * c) * j;
                penalty += l * c + half * mu * c * c;
            }
        }
        let objective = ev.energy - coupling * hd;
        (objective + penalty * hd, ev.grad, objective, ev.rho, ev.jp)
    }

    fn run(&self, mut x: Frame<T>) -> RunOutcome<T> {
        let p = self.problem;
        let g = self.grid();
        let (m, d) = (g.len(), g.dim());
        let mut lam_rho = vec![T::zero(); m];
        let mut lam_jp = vec![T::zero(); m * d];
        let tol = p.constraint_tol.as_f64();
        let mut stage_residuals = Vec::new();
        let mut value = T::zero();
        let mut residual = ConstraintResidual { rho_l1: f64::INFINITY, jp_l1: f64::INFINITY };
        let mut inner_converged = false;
        let stages = p.penalty_schedule.len();
        'stages: for (stage, &mu) in p.penalty_schedule.iter().enumerate() {
            // escalate on a slow contraction; at the final weight keep going while it contracts at all
            let factor = if stage + 1 == stages { 0.9 } else { 0.25 };
            // a value-based line search cannot resolve gradients below ~sqrt(eps mu)
            let floor = (T::epsilon() * mu).sqrt();
            let opts = LbfgsOptions { grad_tol: p.inner_tol.max(floor), max_iter: p.max_inner, ..LbfgsOptions::default() };
            let mut prev = f64::INFINITY;
            for _ in 0..p.max_outer.max(1) {
                let out = {
                    let mut f = |y: &Frame<T>| {
                        let (l, grad, ..) = self.lagrangian(y, &lam_rho, &lam_jp, mu);
                        (l, grad)
                    };
                    minimize(&mut f, x, &opts)
                };
                x = out.x;
                inner_converged = out.converged;
                let (_, _, obj, rho, jp) = self.lagrangian(&x, &lam_rho, &lam_jp, mu);
                value = obj;
                residual = self.residual(&rho, &jp);
                if p.multiplier_update {
                    for ((l, &r), &t) in lam_rho.iter_mut().zip(&rho).zip(p.target.rho.values()) {
                        *l += mu * (r - t);
                    }
                    if !p.ignore_current {
                        for ((l, &j), &t) in lam_jp.iter_mut().zip(&jp).zip(p.target.jp.values()) {
                            *l += mu * (j - t);
                        }
                    }
                }
                let res = residual.max();
                if res <= tol {
                    stage_residuals.push(res);
                    break 'stages;
                }
                if !p.multiplier_update || res > factor * prev {
                    break;
                }
                prev = res;
            }
            stage_residuals.push(residual.max());
        }
        if residual.max() > tol {
            x = self.polish(x);
            let last = *p.penalty_schedule.last().expect("nonempty");
            let (_, _, obj, rho, jp) = self.lagrangian(&x, &lam_rho, &lam_jp, last);
            value = obj;
            residual = self.residual(&rho, &jp);
        }
        RunOutcome { x, value, residual, stage_residuals, lam_rho, lam_jp, inner_converged }
    }

    /// Constraint vector weighted so that its Euclidean norm is the L2 residual.
    fn constraint_vector(&self, rho: &[T], jp: &[T]) -> Vec<T> {
        let w = self.grid().cell_volume().sqrt();
        let t = &self.problem.target;
        let mut c: Vec<T> = rho.iter().zip(t.rho.values()).map(|(&a, &b)| (a - b) * w).collect();
        if !self.problem.ignore_current {
            c.extend(jp.iter().zip(t.jp.values()).map(|(&a, &b)| (a - b) * w));
        }
        c
    }

    /// Gauss-Newton feasibility restoration in the tangent space. Marginals
    /// are quadratic, so central differences give the Jacobian exactly. Needed
    /// where the constraint Jacobian is rank deficient at the solution (one
    /// particle with current: the phase is overdetermined), which leaves the
    /// multiplier iteration sublinear.
    fn polish(&self, mut x: Frame<T>) -> Frame<T> {
        let g = self.grid();
        let tol = self.problem.constraint_tol.as_f64();
        let (rows, cols) = (x.rows, x.cols);
        let n_par = 2 * rows * cols;
        let (mut rho, mut jp) = self.param.marginals(g, &x);
        let mut c = self.constraint_vector(&rho, &jp);
        let n_con = c.len();
        if n_par * n_con > 40_000_000 {
            return x;
        }
        let norm = |v: &[T]| v.iter().fold(T::zero(), |s, &a| s + a * a).sqrt();
        let mut cn = norm(&c);
        for _ in 0..60 {
            if self.residual(&rho, &jp).max() <= 1e-3 * tol {
                break;
            }
            let mut dirs = Vec::with_capacity(n_par);
            let mut jac = DMatrix::<T>::zeros(n_con, n_par);
            for k in 0..n_par {
                let mut e = Frame::new(rows, cols, vec![czero(); rows * cols]);
                e.data[k / 2] = if k % 2 == 0 { Complex::new(T::one(), T::zero()) } else { Complex::new(T::zero(), T::one()) };
                let t = x.project(&e);
                let (rp, jpp) = self.param.marginals(g, &x.axpy(T::one(), &t));
                let (rm, jpm) = self.param.marginals(g, &x.axpy(-T::one(), &t));
                let cp = self.constraint_vector(&rp, &jpp);
                let cm = self.constraint_vector(&rm, &jpm);
                for i in 0..n_con {
                    jac[(i, k)] = (cp[i] - cm[i]) * T::lit(0.5);
                }
                dirs.push(t);
            }
            let rhs = DVector::from_iterator(n_con, c.iter().map(|&v| -v));
            let svd = jac.svd(true, true);
            let smax = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
            let Ok(coef) = svd.solve(&rhs, smax * T::lit(1e-10)) else { break };
            let mut step = Frame::new(rows, cols, vec![czero(); rows * cols]);
            for (k, t) in dirs.iter().enumerate() {
                step = step.axpy(coef[k], t);
            }
            let mut alpha = T::one();
            let mut accepted = false;
            for _ in 0..8 {
                if let Ok(xn) = x.axpy(alpha, &step).orthonormalized() {
                    let (r, j) = self.param.marginals(g, &xn);
                    let cnew = self.constraint_vector(&r, &j);
                    let nn = norm(&cnew);
                    if nn < cn {
                        x = xn;
                        rho = r;
                        jp = j;
                        c = cnew;
                        cn = nn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= T::lit(0.5);
            }
            if !accepted {
                break;
            }
        }
        x
    }

    fn random_start(&self, index: usize) -> Result<Frame<T>> {
        let (rows, cols) = self.param.shape(self.grid());
        let mut rng = ChaCha8Rng::seed_from_u64(self.problem.seed);
        rng.set_stream(index as u64);
        let data = (0..rows * cols)
            .map(|_| Complex::new(T::lit(rng.gen::<f64>() * 2.0 - 1.0), T::lit(rng.gen::<f64>() * 2.0 - 1.0)))
            .collect();
        Frame::new(rows, cols, data).orthonormalized()
    }

    /// `e0(O + V[lambda_rho] + J[lambda_j]) - sum lambda_rho rho h^d - sum lambda_j . j h^d`.
    fn certificate(&self, lam_rho: &[T], lam_jp: &[T]) -> Option<Certificate> {
        let p = self.problem;
        let g = self.grid();
        let n = p.target.n_particles;
        let hd = g.cell_volume();
        let mut shift = lam_rho.iter().zip(p.target.rho.values()).fold(T::zero(), |s, (&l, &r)| s + l * r);
        let mut op = TensorOperator::new(g, 1).ok()?.with_kinetic().with_scalar_values(lam_rho.to_vec());
        if !p.ignore_current {
            shift += lam_jp.iter().zip(p.target.jp.values()).fold(T::zero(), |s, (&l, &j)| s + l * j);
            op = op.with_current_values(lam_jp);
        }
        let opts = GroundStateOptions { budget: p.budget, ..GroundStateOptions::default() };
        let e0 = if p.objective == Objective::Kinetic || n == 1 {
            // noninteracting: fill the lowest orbitals
            if g.len() > EigenOptions::default().dense_max {
                return None;
            }
            let sector = Sector::new(g, 1, p.budget).ok()?;
            let map = SectorOperator { op: &op, sector: &sector };
            let pairs = lowest_dense(&map, n);
            pairs.values.iter().take(n).fold(T::zero(), |s, &e| s + e)
        } else {
            let mut op = TensorOperator::new(g, n).ok()?.with_kinetic().with_interaction(p.eta).with_scalar_values(lam_rho.to_vec());
            if !p.ignore_current {
                op = op.with_current_values(lam_jp);
            }
            ground_state_of(&op, T::lit(1e-10), &opts).ok()?.e0
        };
        Some(Certificate { lower_bound: (e0 - shift * hd).as_f64(), source: "lieb_dual".into() })
    }
}

/// Minimizes the chosen objective over the chosen space subject to the target pair.
pub fn csearch_minimize<T: Real>(problem: &CsearchProblem<T>) -> Result<CsearchResult<T>> {
    problem.validate()?;
    let target = &problem.target;
    validate_pair(target, NORMALIZATION_TOL)?;
    let grid = target.grid();
    let n = target.n_particles;
    if problem.space == SearchSpace::Determinants && n < 4 && !problem.ignore_current {
        let curl = target.diagnostics.curl_of_velocity;
        if !(curl <= problem.curl_tol) {
            return Err(CdftError::NotCurlFree { curl });
        }
    }
    let interacting = problem.objective == Objective::H0 && n > 1;
    let pair = interacting.then(|| Arc::new(pair_table(grid, problem.eta)));
    let param = match problem.space {
        SearchSpace::Wavefunctions => {
            let sector = Sector::new(grid, n, problem.budget)?;
            let mut base = TensorOperator::new(grid, n)?.with_kinetic();
            if let Some(w) = &pair {
                base = base.with_shared_pair_table(w.clone());
            }
            Param::Wave { sector, base }
        }
        SearchSpace::Determinants => {
            if grid.len() * n > problem.budget {
                return Err(CdftError::BudgetExceeded { needed: grid.len() * n, budget: problem.budget });
            }
            if n > grid.len() {
                return Err(CdftError::InvalidArgument(format!("{n} orbitals on {} points", grid.len())));
            }
            Param::Det { one_body: TensorOperator::new(grid, 1)?.with_kinetic(), pair, n }
        }
    };
    let search = Search { problem, param };

    let mut warm = problem.warm_starts.clone();
    let chain = if problem.ignore_current { None } else { open_chain_orbital(target, problem.constraint_tol.as_f64()) };
    if let Some(f) = &chain {
        let start = match problem.space {
            SearchSpace::Wavefunctions => Minimizer::Wave(WaveFunction::normalized(grid, 1, f.clone())?),
            SearchSpace::Determinants => {
                Minimizer::Det(Determinant::from_independent(&[ComplexField::new(grid.clone(), f.clone())?])?)
            }
        };
        warm.insert(0, start);
    }
    let n_starts = warm.len() + problem.max_restarts;
    let outcomes: Vec<Result<RunOutcome<T>>> = (0..n_starts)
        .into_par_iter()
        .map(|i| {
            let x0 = match warm.get(i) {
                Some(w) => search.param.frame_of(grid, w)?,
                None => search.random_start(i)?,
            };
            Ok(search.run(x0))
        })
        .collect();
    let mut outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    if chain.is_some() {
        // the exact orbital competes unmodified, carrying the multipliers of the run it seeded
        let x = search.param.frame_of(grid, &warm[0])?;
        let zeros = (vec![T::zero(); grid.len()], vec![T::zero(); grid.len()]);
        let (_, _, value, rho, jp) = search.lagrangian(&x, &zeros.0, &zeros.1, T::one());
        let residual = search.residual(&rho, &jp);
        let seeded = &outcomes[0];
        outcomes.push(RunOutcome {
            x,
            value,
            residual,
            stage_residuals: vec![residual.max()],
            lam_rho: seeded.lam_rho.clone(),
            lam_jp: seeded.lam_jp.clone(),
            inner_converged: true,
        });
    }

    let tol = problem.constraint_tol.as_f64();
    let best = (0..outcomes.len())
        .filter(|&i| outcomes[i].residual.max() <= tol)
        .min_by(|&a, &b| {
            outcomes[a].value.partial_cmp(&outcomes[b].value).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
    let Some(best) = best else {
        let residual = outcomes.iter().map(|o| o.residual.max()).fold(f64::INFINITY, f64::min);
        return Err(CdftError::InfeasibleConstraints { residual, tol });
    };
    let out = outcomes.into_iter().nth(best).expect("index");
    let certificate = if problem.certificate { search.certificate(&out.lam_rho, &out.lam_jp) } else { None };
    Ok(CsearchResult {
        value: out.value,
        minimizer: search.param.minimizer(grid, &out.x)?,
        constraint_residual: out.residual,
        converged: out.inner_converged,
        restarts_used: n_starts,
        certificate,
        best_start: best,
        stage_residuals: out.stage_residuals,
        multiplier_rho: ScalarField::new(grid.clone(), out.lam_rho)?,
        multiplier_jp: VectorField::new(grid.clone(), out.lam_jp)?,
    })
}
