//! The N-representable Kohn-Sham scheme: the energy functional on
//! determinants built from constrained searches, its minimization, and an
//! orbital self-consistent-field loop for model exchange-correlation choices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csearch::{csearch_minimize, CsearchProblem, CsearchResult, Minimizer, Objective, SearchSpace, CURL_TOL};
use crate::error::{CdftError, Result};
use crate::lattice::{ComplexField, ScalarField};
use crate::manybody::eigen::{lowest_dense, EigenOptions};
use crate::manybody::{
    couplings, density_pair, expectation, ground_state, hamiltonian_operator, pair_table, soft_coulomb, Determinant,
    HamiltonianKind, Potentials, SpectrumSummary, TensorOperator,
};
use crate::optim::{minimize, Frame, LbfgsOptions};
use crate::pair::DensityPair;
use crate::scalar::{czero, Complex, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XcKind {
    /// No exchange-correlation: Hartree with self-interaction.
    Zero,
    /// `v_xc = -v_H`: the noninteracting closure.
    CancelHartree,
    /// `Delta T` and `E_xc^W` from two constrained searches per determinant.
    ConstrainedOracle,
}

/// Limits for the constrained searches behind the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    pub budget: usize,
    pub max_restarts: usize,
    pub constraint_tol: f64,
    pub inner_tol: f64,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { budget: crate::manybody::spectrum::DEFAULT_BUDGET, max_restarts: 2, constraint_tol: 1e-9, inner_tol: 1e-9, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XcModel {
    pub kind: XcKind,
    #[serde(default)]
    pub oracle_budget: OracleOptions,
}

impl XcModel {
    pub fn new(kind: XcKind) -> Self {
        Self { kind, oracle_budget: OracleOptions::default() }
    }
}

/// `(1/2) sum_x sum_y rho(x) rho(y) W(x - y) h^{2d}` with the softened kernel.
pub fn hartree_energy<T: Real>(rho: &ScalarField<T>, eta: T) -> Result<T> {
    if !(eta > T::zero()) {
        return Err(CdftError::InvalidArgument("Hartree energy needs a positive softening".into()));
    }
    let v = hartree_potential(rho, eta)?;
    let hd = rho.grid().cell_volume();
    Ok(v.iter().zip(rho.values()).fold(T::zero(), |s, (&a, &r)| s + a * r) * hd * T::lit(0.5))
}

/// `v_H(x) = sum_y W(x - y) rho(y) h^d`.
fn hartree_potential<T: Real>(rho: &ScalarField<T>, eta: T) -> Result<Vec<T>> {
    if let Some((index, &value)) = rho.values().iter().enumerate().find(|(_, &r)| !(r >= T::zero())) {
        return Err(CdftError::NegativeDensity { index, value: value.as_f64() });
    }
    let g = rho.grid();
    let hd = g.cell_volume();
    Ok((0..g.len())
        .map(|x| {
            (0..g.len()).fold(T::zero(), |s, y| s + soft_coulomb(g.distance_sq(x, y), eta) * rho.values()[y]) * hd
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct OracleTerms<T: Real> {
    pub delta_t: T,
    pub exc_w: T,
    /// Minimizer of `K + W` over wavefunctions at the determinant's pair.
    pub psi_m: CsearchResult<T>,
    /// Minimizer of `K` over determinants at the same pair.
    pub phi_m: CsearchResult<T>,
}

fn oracle_problem<T: Real>(
    target: DensityPair<T>,
    objective: Objective,
    space: SearchSpace,
    eta: T,
    opts: &OracleOptions,
) -> CsearchProblem<T> {
    let mut p = CsearchProblem::new(target, objective, space);
    p.eta = eta;
    p.budget = opts.budget;
    p.max_restarts = opts.max_restarts;
    p.constraint_tol = T::lit(opts.constraint_tol);
    p.inner_tol = T::lit(opts.inner_tol);
    p.seed = opts.seed;
    p.certificate = false;
    p
}

/// `Delta T = <psi_m, K psi_m> - <phi_m, K phi_m>` and
/// `E_xc^W = <psi_m, W psi_m> - Hartree(rho_phi)` at the pair of `phi`.
pub fn delta_t_and_excw<T: Real>(phi: &Determinant<T>, eta: T, opts: &OracleOptions) -> Result<OracleTerms<T>> {
    let target = phi.density_pair();
    let hartree = hartree_energy(&target.rho, eta)?;
    let mut det = oracle_problem(target.clone(), Objective::Kinetic, SearchSpace::Determinants, eta, opts);
    det.warm_starts = vec![Minimizer::Det(phi.clone())];
    if phi.n_particles() == 1 {
        // one particle: both spaces coincide and there are no pairs
        let r = csearch_minimize(&det)?;
        return Ok(OracleTerms { delta_t: T::zero(), exc_w: -hartree, psi_m: r.clone(), phi_m: r });
    }
    let mut wave = oracle_problem(target, Objective::H0, SearchSpace::Wavefunctions, eta, opts);
    wave.warm_starts = vec![Minimizer::Wave(phi.wavefunction().clone())];
    let (q, t) = rayon::join(|| csearch_minimize(&wave), || csearch_minimize(&det));
    let (q, t) = (q?, t?);
    let psi = q.minimizer.wavefunction();
    let k_psi = expectation(&Potentials::zero(psi.grid()).with_eta(eta), psi, HamiltonianKind::Kinetic)?;
    Ok(OracleTerms { delta_t: k_psi - t.value, exc_w: (q.value - k_psi) - hartree, psi_m: q, phi_m: t })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GEvaluation {
    pub kinetic_det: f64,
    pub delta_t: f64,
    pub current_coupling: f64,
    pub density_coupling: f64,
    pub exc_w: f64,
    pub hartree: f64,
    pub total: f64,
}

/// The energy functional on determinants.
pub fn g_energy<T: Real>(p: &Potentials<T>, phi: &Determinant<T>, xc: &XcModel) -> Result<GEvaluation> {
    p.grid().same_as(phi.grid())?;
    let pair = phi.density_pair();
    let kinetic = phi.kinetic();
    let (cur, den) = couplings(p, &pair)?;
    let (dt, xw, hartree) = match xc.kind {
        XcKind::ConstrainedOracle => {
            let o = delta_t_and_excw(phi, p.eta, &xc.oracle_budget)?;
            (o.delta_t, o.exc_w, hartree_energy(&pair.rho, p.eta)?)
        }
        XcKind::Zero => (T::zero(), T::zero(), hartree_energy(&pair.rho, p.eta)?),
        XcKind::CancelHartree => (T::zero(), T::zero(), T::zero()),
    };
    let parts = [kinetic, dt, cur, den, xw, hartree].map(|x| x.as_f64());
    Ok(GEvaluation {
        kinetic_det: parts[0],
        delta_t: parts[1],
        current_coupling: parts[2],
        density_coupling: parts[3],
        exc_w: parts[4],
        hartree: parts[5],
        total: parts.iter().sum(),
    })
}

#[derive(Debug, Clone)]
pub struct MinimizeGOptions {
    pub seed: u64,
    pub max_restarts: usize,
    pub curl_tol: f64,
    /// Ground pair tolerances (L1) for the oracle assertion.
    pub pair_tol: f64,
}

impl Default for MinimizeGOptions {
    fn default() -> Self {
        Self { seed: 0, max_restarts: 4, curl_tol: CURL_TOL, pair_tol: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeGResult<T: Real> {
    pub phi_m: Determinant<T>,
    pub evaluation: GEvaluation,
    pub pair: DensityPair<T>,
    /// Exact ground state, when it was computed.
    pub ground: Option<SpectrumSummary>,
    /// `(||rho - rho_0||_1, ||j - j_0||_1)` against the exact ground pair.
    pub pair_error: Option<(f64, f64)>,
    /// "exact ground pair" when validated against the oracle, else "upper bound only".
    pub certificate: String,
}

/// Minimizes the energy functional over determinants.
///
/// With the constrained oracle the functional splits exactly as
/// `<phi, K phi> - T_det(P_phi) + [Q(P_phi) + couplings(P_phi)]`; the bracket
/// is minimized jointly over wavefunctions by the ground-state solve, and the
/// remaining orbital problem is the determinant search at the ground pair.
/// Model functionals are minimized directly over orthonormal orbitals.
pub fn minimize_g<T: Real>(p: &Potentials<T>, n: usize, xc: &XcModel, opts: &MinimizeGOptions) -> Result<MinimizeGResult<T>> {
    match xc.kind {
        XcKind::ConstrainedOracle => minimize_g_oracle(p, n, xc, opts),
        _ => minimize_g_model(p, n, xc, opts),
    }
}

fn minimize_g_oracle<T: Real>(p: &Potentials<T>, n: usize, xc: &XcModel, opts: &MinimizeGOptions) -> Result<MinimizeGResult<T>> {
    let gs = ground_state(p, n, HamiltonianKind::Full, T::lit(1e-12))?;
    gs.require_nondegenerate()?;
    let pair0 = density_pair(&gs.ground_state);
    let curl = pair0.diagnostics.curl_of_velocity;
    if n < 4 && !(curl <= opts.curl_tol) {
        return Err(CdftError::CurlConditionViolated { curl });
    }
    let mut oracle = xc.oracle_budget.clone();
    oracle.seed = opts.seed;
    let mut prob = oracle_problem(pair0.clone(), Objective::Kinetic, SearchSpace::Determinants, p.eta, &oracle);
    prob.max_restarts = opts.max_restarts.max(1);
    let t = csearch_minimize(&prob)?;
    let Minimizer::Det(phi) = t.minimizer else { unreachable!("determinant search") };
    let evaluation = g_energy(p, &phi, &XcModel { kind: XcKind::ConstrainedOracle, oracle_budget: oracle })?;
    let pair = phi.density_pair();
    let (dr, dj) = pair.l1_distance(&pair0)?;
    let (dr, dj) = (dr.as_f64(), dj.as_f64());
    let ok = dr <= opts.pair_tol && dj <= opts.pair_tol;
    Ok(MinimizeGResult {
        phi_m: phi,
        evaluation,
        pair,
        ground: Some(gs.summary()),
        pair_error: Some((dr, dj)),
        certificate: if ok { "exact ground pair" } else { "upper bound only" }.into(),
    })
}

/// `H'` one-body operator in Euclidean-orthonormal coordinates.
fn one_body<T: Real>(p: &Potentials<T>) -> Result<TensorOperator<T>> {
    hamiltonian_operator(p, 1, HamiltonianKind::NonInteracting)
}

fn frame_density<T: Real>(x: &Frame<T>) -> Vec<T> {
    (0..x.rows).map(|r| (0..x.cols).fold(T::zero(), |s, k| s + x.col(k)[r].norm_sqr())).collect()
}

fn frame_determinant<T: Real>(p: &Potentials<T>, x: &Frame<T>) -> Result<Determinant<T>> {
    let g = p.grid();
    let inv = T::one() / g.cell_volume().sqrt();
    let orbitals = (0..x.cols)
        .map(|k| ComplexField::new(g.clone(), x.col(k).iter().map(|z| *z * inv).collect()))
        .collect::<Result<Vec<_>>>()?;
    Determinant::new(orbitals)
}

fn minimize_g_model<T: Real>(p: &Potentials<T>, n: usize, xc: &XcModel, opts: &MinimizeGOptions) -> Result<MinimizeGResult<T>> {
    let g = p.grid();
    let m = g.len();
    if n == 0 || n > m {
        return Err(CdftError::InvalidArgument(format!("{n} orbitals on {m} points")));
    }
    let h1 = one_body(p)?;
    let with_hartree = xc.kind == XcKind::Zero;
    let w = with_hartree.then(|| pair_table(g, p.eta));
    let f = |x: &Frame<T>| {
        let mut grad = vec![czero::<T>(); m * n];
        let mut e = T::zero();
        let dens = frame_density(x);
        let vh: Option<Vec<T>> = w.as_ref().map(|w| {
            (0..m).map(|a| w[a * m..(a + 1) * m].iter().zip(&dens).fold(T::zero(), |s, (&k, &r)| s + k * r)).collect()
        });
        for k in 0..n {
            let out = &mut grad[k * m..(k + 1) * m];
            h1.apply(x.col(k), out);
            e += x.col(k).iter().zip(out.iter()).fold(T::zero(), |s, (a, b)| s + (a.conj() * b).re);
            if let Some(vh) = &vh {
                for ((o, z), &v) in out.iter_mut().zip(x.col(k)).zip(vh) {
                    *o += *z * v;
                }
            }
        }
        if let Some(vh) = &vh {
            e += vh.iter().zip(&dens).fold(T::zero(), |s, (&v, &r)| s + v * r) * T::lit(0.5);
        }
        grad.iter_mut().for_each(|z| *z = *z * T::lit(2.0));
        (e, Frame::new(m, n, grad))
    };
    let lbfgs = LbfgsOptions { grad_tol: T::lit(1e-9), max_iter: 20_000, ..LbfgsOptions::default() };
    let mut best: Option<(T, Frame<T>)> = None;
    for r in 0..opts.max_restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let data = (0..m * n)
            .map(|_| Complex::new(T::lit(rng.gen::<f64>() * 2.0 - 1.0), T::lit(rng.gen::<f64>() * 2.0 - 1.0)))
            .collect();
        let x0 = Frame::new(m, n, data).orthonormalized()?;
        let mut ff = &f;
        let out = minimize(&mut ff, x0, &lbfgs);
        if best.as_ref().is_none_or(|(v, _)| out.value < *v) {
            best = Some((out.value, out.x));
        }
    }
    let (_, x) = best.expect("at least one restart");
    let phi = frame_determinant(p, &x)?;
    let evaluation = g_energy(p, &phi, xc)?;
    let pair = phi.density_pair();
    Ok(MinimizeGResult { phi_m: phi, evaluation, pair, ground: None, pair_error: None, certificate: "upper bound only".into() })
}

#[derive(Debug, Clone)]
pub struct ScfOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Linear density mixing coefficient in (0, 1].
    pub mixing: f64,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, mixing: 0.3 }
    }
}

#[derive(Debug, Clone)]
pub struct ScfResult<T: Real> {
    pub orbitals: Determinant<T>,
    pub energy: T,
    pub iterations: usize,
    /// Max orbital-equation residual `||F f_k - sum_l Lambda_lk f_l||`.
    pub residual: T,
    /// Real part of `Lambda_kl = <f_k, F f_l>`.
    pub lagrange_matrix: Vec<Vec<f64>>,
    pub converged: bool,
    /// Energies of the accepted iterates.
    pub energies: Vec<T>,
}

/// Self-consistent orbitals for the model functionals
/// `sum_k <f_k, H' f_k> + Hartree` (zero) or `sum_k <f_k, H' f_k>` (cancel_hartree).
pub fn ks_scf<T: Real>(p: &Potentials<T>, n: usize, xc: &XcModel, opts: &ScfOptions) -> Result<ScfResult<T>> {
    if xc.kind == XcKind::ConstrainedOracle {
        return Err(CdftError::InvalidArgument("the SCF loop takes the zero or cancel_hartree model".into()));
    }
    if !(opts.mixing > 0.0 && opts.mixing <= 1.0) {
        return Err(CdftError::InvalidArgument(format!("mixing {} outside (0, 1]", opts.mixing)));
    }
    let g = p.grid();
    let m = g.len();
    let dense_max = EigenOptions::default().dense_max;
    if m > dense_max {
        return Err(CdftError::BudgetExceeded { needed: m, budget: dense_max });
    }
    if n == 0 || n > m {
        return Err(CdftError::InvalidArgument(format!("{n} orbitals on {m} points")));
    }
    let hd = g.cell_volume();
    let h1 = one_body(p)?;
    let with_hartree = xc.kind == XcKind::Zero;
    let w = with_hartree.then(|| pair_table(g, p.eta));
    let tol = T::lit(opts.tol);

    // Fock-like operator for a given density (per unit volume)
    let fock = |rho: &[T]| -> Vec<T> {
        match &w {
            Some(w) => (0..m).map(|a| w[a * m..(a + 1) * m].iter().zip(rho).fold(T::zero(), |s, (&k, &r)| s + k * r) * hd).collect(),
            None => vec![T::zero(); m],
        }
    };
    let apply = |vh: &[T], x: &[Complex<T>], y: &mut [Complex<T>]| {
        h1.apply(x, y);
        for ((o, z), &v) in y.iter_mut().zip(x).zip(vh) {
            *o += *z * v;
        }
    };
    // lowest n orbitals of F[rho_in], their density and energy
    let step = |rho_in: &[T]| -> Result<(Vec<Vec<Complex<T>>>, Vec<T>, T)> {
        let vh = fock(rho_in);
        let map = (m, |x: &[Complex<T>], y: &mut [Complex<T>]| apply(&vh, x, y));
        let pairs = lowest_dense(&map, (n + 1).min(m));
        if n < m {
            let gap = pairs.values[n] - pairs.values[n - 1];
            if gap < tol * T::lit(100.0) {
                return Err(CdftError::AufbauAmbiguity { gap: gap.as_f64() });
            }
        }
        let orbs: Vec<Vec<Complex<T>>> = pairs.vectors.into_iter().take(n).collect();
        let mut rho = vec![T::zero(); m];
        for o in &orbs {
            for (r, z) in rho.iter_mut().zip(o) {
                *r += z.norm_sqr() / hd;
            }
        }
        let mut e = T::zero();
        let mut y = vec![czero::<T>(); m];
        for o in &orbs {
            h1.apply(o, &mut y);
            e += o.iter().zip(&y).fold(T::zero(), |s, (a, b)| s + (a.conj() * b).re);
        }
        if with_hartree {
            let vh_out = fock(&rho);
            e += vh_out.iter().zip(&rho).fold(T::zero(), |s, (&v, &r)| s + v * r) * hd * T::lit(0.5);
        }
        Ok((orbs, rho, e))
    };
    // residual and Lagrange matrix at self-consistency with the output density
    let residual = |orbs: &[Vec<Complex<T>>], rho: &[T]| -> (T, Vec<Vec<f64>>) {
        let vh = fock(rho);
        let fo: Vec<Vec<Complex<T>>> = orbs
            .iter()
            .map(|o| {
                let mut y = vec![czero::<T>(); m];
                apply(&vh, o, &mut y);
                y
            })
            .collect();
        let lam: Vec<Vec<Complex<T>>> = (0..n)
            .map(|k| (0..n).map(|l| orbs[k].iter().zip(&fo[l]).fold(czero::<T>(), |s, (a, b)| s + a.conj() * b)).collect())
            .collect();
        let mut worst = T::zero();
        for l in 0..n {
            let mut r = fo[l].clone();
            for k in 0..n {
                for (ri, z) in r.iter_mut().zip(&orbs[k]) {
                    *ri -= *z * lam[k][l];
                }
            }
            // Euclidean norm of scaled orbitals equals the L2 norm of the residual
            worst = worst.max(r.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt());
        }
        (worst, lam.iter().map(|row| row.iter().map(|z| z.re.as_f64()).collect()).collect())
    };

    let (mut orbs, mut rho_out, mut energy) = step(&vec![T::zero(); m])?;
    let mut rho_in = rho_out.clone();
    let mut energies = vec![energy];
    let mut alpha = T::lit(opts.mixing);
    let (mut res, mut lam) = residual(&orbs, &rho_out);
    let mut iterations = 1;
    let noise = |e: T| T::epsilon() * T::lit(64.0) * e.abs().max(T::one());
    while res > tol && iterations < opts.max_iter {
        iterations += 1;
        let trial: Vec<T> = rho_in.iter().zip(&rho_out).map(|(&a, &b)| (T::one() - alpha) * a + alpha * b).collect();
        let (o, r, e) = step(&trial)?;
        if e > energy + noise(energy) {
            alpha *= T::lit(0.5);
            if alpha < T::lit(1e-8) {
                break;
            }
            continue;
        }
        rho_in = trial;
        orbs = o;
        rho_out = r;
        energy = e;
        energies.push(e);
        (res, lam) = residual(&orbs, &rho_out);
    }
    let converged = res <= tol;
    if !converged && iterations >= opts.max_iter {
        return Err(CdftError::NoConvergence { iterations, residual: res.as_f64() });
    }
    let x = Frame::new(m, n, orbs.concat());
    Ok(ScfResult {
        orbitals: frame_determinant(p, &x)?,
        energy,
        iterations,
        residual: res,
        lagrange_matrix: lam,
        converged,
        energies,
    })
}
