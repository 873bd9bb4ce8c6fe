use cdft::csearch::*;
use cdft::lattice::{Boundary, Grid, ScalarField, VectorField};
use cdft::manybody::*;
use cdft::pair::DensityPair;
use cdft::scalar::Complex;
use cdft::CdftError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth random confining potentials on a 16-point line.
fn smooth_instance(seed: u64) -> Potentials<f64> {
    let g = Grid::<f64>::line(16, 0.4, -3.0, Boundary::Dirichlet).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c1, c2, s1, a0, a1): (f64, f64, f64, f64, f64) = (
        rng.gen_range(-0.5..0.5),
        rng.gen_range(-0.5..0.5),
        rng.gen_range(0.5..1.5),
        rng.gen_range(-0.8..0.8),
        rng.gen_range(-0.5..0.5),
    );
    let v = ScalarField::from_fn(&g, |x| 0.3 * x[0] * x[0] + c1 * (s1 * x[0]).sin() + c2 * (0.7 * x[0]).cos());
    let a = VectorField::from_fn(&g, |x| vec![a0 + a1 * (0.9 * x[0]).sin()]);
    Potentials::new(v, a, 0.2).unwrap()
}

/// `sqrt(rho) e^{i theta}` for a smooth rho and curl-free phase.
fn phase_state(g: &Grid<f64>, seed: u64) -> WaveFunction<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, c, k) = (rng.gen_range(0.6..1.4), rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0));
    let amps = (0..g.len())
        .map(|p| {
            let x = g.coords(p);
            let r2: f64 = x.iter().map(|t| t * t).sum();
            let mag = (-w * r2 / 2.0).exp() * (1.0 + c * x[0]).abs().max(0.2);
            let th = k * x.iter().sum::<f64>() + 0.2 * (x[0]).sin();
            Complex::from_polar(mag, th)
        })
        .collect();
    WaveFunction::normalized(g, 1, amps).unwrap()
}

fn quick(target: DensityPair<f64>, objective: Objective, space: SearchSpace) -> CsearchProblem<f64> {
    let mut p = CsearchProblem::new(target, objective, space);
    p.max_restarts = 1;
    p.constraint_tol = 1e-9;
    p.inner_tol = 1e-9;
    p
}

#[test]
fn one_particle_search_matches_closed_form() {
    let g = Grid::<f64>::line(24, 0.3, -3.45, Boundary::Dirichlet).unwrap();
    for seed in 0..2 {
        let pair = density_pair(&phase_state(&g, seed));
        let exact = n1_closed_form(&pair).unwrap();
        for objective in [Objective::Kinetic, Objective::H0] {
            for space in [SearchSpace::Wavefunctions, SearchSpace::Determinants] {
                let r = csearch_minimize(&quick(pair.clone(), objective, space)).unwrap();
                let tol = 1e-6f64.max(10.0 * 0.3 * 0.3);
                assert!((r.value - exact).abs() <= tol, "{objective:?} {space:?}: {} vs {exact}", r.value);
                assert!(r.constraint_residual.max() <= 1e-9);
                let cert = r.certificate.unwrap();
                assert!(cert.lower_bound <= r.value + 1e-8, "{} > {}", cert.lower_bound, r.value);
            }
        }
    }
}

#[test]
fn ground_pair_search_recovers_interacting_ground_state() {
    let p = smooth_instance(1);
    let gs = ground_state(&p, 2, HamiltonianKind::Full, 1e-12).unwrap();
    assert!(!gs.degenerate);
    let target = density_pair(&gs.ground_state);
    let h0 = expectation(&p, &gs.ground_state, HamiltonianKind::H0).unwrap();
    let mut prob = quick(target, Objective::H0, SearchSpace::Wavefunctions);
    prob.eta = p.eta;
    let r = csearch_minimize(&prob).unwrap();
    assert!(r.converged);
    assert!((r.value - h0).abs() <= 1e-5, "{} vs {h0}", r.value);
    let ov = r.minimizer.wavefunction().inner(&gs.ground_state).unwrap().norm();
    assert!(ov >= 1.0 - 1e-4, "overlap {ov}");
}


fn gaussian_pair(g: &Grid<f64>, sigma: f64) -> DensityPair<f64> {
    let rho = ScalarField::from_fn(g, |x| (-x.iter().map(|t| t * t).sum::<f64>() / (sigma * sigma)).exp());
    let rho = rho.scale(1.0 / cdft::lattice::integrate(&rho));
    yn_check(rho, VectorField::zeros(g), 1).unwrap()
}

#[test]
fn yn_check_examples() {
    let g = Grid::<f64>::line(64, 0.1, -3.15, Boundary::Dirichlet).unwrap();
    let pair = gaussian_pair(&g, 1.0);
    assert_eq!(pair.diagnostics.kinetic_bound, 0.0);
    assert!((pair.diagnostics.total - 1.0).abs() < 1e-12);

    let mut bad = pair.rho.clone();
    bad.values_mut()[7] = -1e-3;
    assert!(matches!(
        yn_check(bad, VectorField::zeros(&g), 1),
        Err(CdftError::NegativeDensity { index: 7, .. })
    ));
    let heavy = pair.rho.scale(1.0 + 1e-6);
    let err = yn_check(heavy, VectorField::zeros(&g), 1).unwrap_err();
    assert_eq!(err.name(), "wrong_normalization");

    let psi = WaveFunction::random(&g, 2, 3).unwrap();
    let from_psi = density_pair(&psi);
    let report = yn_check_with(from_psi.rho.clone(), from_psi.jp.clone(), 2, &YnOptions { kinetic_warn: 0.0, ..Default::default() })
        .unwrap();
    let k = expectation(&Potentials::zero(&g), &psi, HamiltonianKind::Kinetic).unwrap();
    assert!(report.pair.diagnostics.kinetic_bound <= k + 10.0 * 0.01);
    assert_eq!(report.warnings.len(), 1);
}

#[test]
fn phase_examples() {
    let g = Grid::<f64>::line(32, 0.2, -3.1, Boundary::Dirichlet).unwrap();
    let sol = phase_from_current(&gaussian_pair(&g, 1.5)).unwrap();
    assert!(sol.theta.values().iter().all(|t| t.abs() < 1e-14));

    // ring with commensurate constant velocity
    let n = 40;
    let l = 4.0;
    let ring = Grid::<f64>::line(n, l / n as f64, 0.0, Boundary::Periodic).unwrap();
    let rho = ScalarField::constant(&ring, 1.0 / l);
    let c = 2.0 * std::f64::consts::PI * 3.0 / l;
    let pair = yn_check(rho.clone(), VectorField::from_fn(&ring, |_| vec![c / l]), 1).unwrap();
    let sol = phase_from_current(&pair).unwrap();
    assert_eq!(sol.windings, vec![3]);
    for p in 0..n {
        assert!((sol.theta.values()[p] - c * ring.coord(p, 0)).abs() < 1e-12);
    }
    assert!(sol.residual < 1e-12);

    let off = yn_check(rho, VectorField::from_fn(&ring, |_| vec![1.1 * c / l]), 1).unwrap();
    match phase_from_current(&off) {
        Err(CdftError::IncompatibleCirculation { axis: 0, winding }) => assert!((winding - 3.3).abs() < 1e-9),
        other => panic!("{other:?}"),
    }

    // a smooth phase is recovered up to the stencil mismatch
    let psi = phase_state(&g, 5);
    let pair = density_pair(&psi);
    let sol = phase_from_current(&pair).unwrap();
    assert_eq!(sol.theta.values()[0], 0.0);
    assert!(sol.residual < 0.05, "{}", sol.residual);

    let mut hole = gaussian_pair(&g, 1.0);
    hole.rho.values_mut()[0] = 0.0;
    assert!(matches!(phase_from_current(&hole), Err(CdftError::DensityVanishes { .. })));
}

fn swirl_pair() -> DensityPair<f64> {
    let g = Grid::<f64>::periodic_box(&[-1.0, -1.0], &[1.0, 1.0], 0.25).unwrap();
    let rho = ScalarField::constant(&g, 0.25);
    let jp = VectorField::from_fn(&g, |x| vec![-0.25 * x[1], 0.25 * x[0]]);
    yn_check(rho, jp, 1).unwrap()
}

#[test]
fn rotational_velocity_is_not_curl_free() {
    let pair = swirl_pair();
    assert!(matches!(phase_from_current(&pair), Err(CdftError::NotCurlFree { .. })));
    assert!(matches!(n1_closed_form(&pair), Err(CdftError::NotCurlFree { .. })));
    let det = quick(pair.clone(), Objective::Kinetic, SearchSpace::Determinants);
    assert!(matches!(csearch_minimize(&det), Err(CdftError::NotCurlFree { .. })));
    // not reachable by any one-particle wavefunction either
    let wave = quick(pair, Objective::Kinetic, SearchSpace::Wavefunctions);
    assert!(matches!(csearch_minimize(&wave), Err(CdftError::InfeasibleConstraints { .. })));
}

#[test]
fn closed_form_examples() {
    let g = Grid::<f64>::dirichlet_box(&[-16.0], &[16.0], 0.01).unwrap();
    let sigma = 2.0;
    let pair = gaussian_pair(&g, sigma);
    // sqrt(rho)' = -x / sigma^2 sqrt(rho)
    let quad: f64 = pair.rho.values().iter().enumerate().map(|(p, r)| {
        let x = g.coord(p, 0);
        x * x / sigma.powi(4) * r
    }).sum::<f64>() * 0.01;
    let v = n1_closed_form(&pair).unwrap();
    assert!((v - quad).abs() <= 1e-6, "{v} vs {quad}");

    let theta = |x: f64| 0.3 * x + 0.1 * x.sin();
    let dtheta = |x: f64| 0.3 + 0.1 * x.cos();
    let jp = VectorField::from_fn(&g, |x| vec![0.0 * x[0]]);
    let mut jp = jp;
    let mut extra = 0.0;
    for p in 0..g.len() {
        let x = g.coord(p, 0);
        let r = pair.rho.values()[p];
        jp.values_mut()[p] = r * dtheta(x);
        extra += r * dtheta(x) * dtheta(x) * 0.01;
    }
    let _ = theta;
    let with_current = yn_check(pair.rho.clone(), jp, 1).unwrap();
    let v2 = n1_closed_form(&with_current).unwrap();
    assert!(((v2 - v) - extra).abs() <= 1e-12 * extra);

    let ring = Grid::<f64>::line(20, 0.5, 0.0, Boundary::Periodic).unwrap();
    let flat = yn_check(ScalarField::constant(&ring, 0.1), VectorField::zeros(&ring), 1).unwrap();
    assert!(n1_closed_form(&flat).unwrap().abs() < 1e-14);
}

fn ground_pair(p: &Potentials<f64>, kind: HamiltonianKind) -> (SpectrumResult<f64>, DensityPair<f64>) {
    let gs = ground_state(p, 2, kind, 1e-12).unwrap();
    assert!(!gs.degenerate);
    let pair = density_pair(&gs.ground_state);
    (gs, pair)
}

#[test]
fn orderings_between_functionals() {
    for seed in [2, 3] {
        let p = smooth_instance(seed);
        let (_, target) = ground_pair(&p, HamiltonianKind::Full);
        let run = |objective, space| {
            let mut prob = quick(target.clone(), objective, space);
            prob.eta = p.eta;
            csearch_minimize(&prob).unwrap()
        };
        let q = run(Objective::H0, SearchSpace::Wavefunctions);
        let qp = run(Objective::Kinetic, SearchSpace::Wavefunctions);
        let t = run(Objective::Kinetic, SearchSpace::Determinants);
        assert!(q.value >= qp.value - 1e-8, "Q {} < Q' {}", q.value, qp.value);
        assert!(t.value >= qp.value - 1e-8, "T_det {} < Q' {}", t.value, qp.value);
        for r in [&q, &qp, &t] {
            let cert = r.certificate.as_ref().unwrap();
            assert_eq!(cert.source, "lieb_dual");
            assert!(cert.lower_bound <= r.value + 1e-7);
        }
    }
}

#[test]
fn determinant_search_collapses_onto_noninteracting_ground_pair() {
    let p = smooth_instance(4);
    let (gs, target) = ground_pair(&p, HamiltonianKind::NonInteracting);
    let k = expectation(&p, &gs.ground_state, HamiltonianKind::Kinetic).unwrap();
    let qp = csearch_minimize(&quick(target.clone(), Objective::Kinetic, SearchSpace::Wavefunctions)).unwrap();
    let t = csearch_minimize(&quick(target, Objective::Kinetic, SearchSpace::Determinants)).unwrap();
    assert!((t.value - qp.value).abs() <= 1e-5, "{} vs {}", t.value, qp.value);
    assert!((t.value - k).abs() <= 1e-5);
    let ov = t.minimizer.wavefunction().inner(&gs.ground_state).unwrap().norm();
    assert!(ov >= 1.0 - 1e-4);
}

#[test]
fn variational_bound_over_sampled_pairs() {
    let g = Grid::<f64>::line(16, 0.4, -3.0, Boundary::Dirichlet).unwrap();
    for seed in 0..3u64 {
        let p = smooth_instance(10 + seed);
        let e0 = ground_state(&p, 2, HamiltonianKind::Full, 1e-12).unwrap().e0;
        let pair = density_pair(&WaveFunction::random(&g, 2, 100 + seed).unwrap());
        let mut prob = quick(pair.clone(), Objective::H0, SearchSpace::Wavefunctions);
        prob.eta = p.eta;
        let q = csearch_minimize(&prob).unwrap().value;
        let (cur, den) = couplings(&p, &pair).unwrap();
        assert!(q + cur + den >= e0 - 1e-5, "{} < {e0}", q + cur + den);
    }
}

#[test]
fn levy_lieb_mode_drops_current_constraint() {
    let g = Grid::<f64>::line(24, 0.3, -3.45, Boundary::Dirichlet).unwrap();
    let pair = density_pair(&phase_state(&g, 1));
    let mut prob = quick(pair.clone(), Objective::Kinetic, SearchSpace::Wavefunctions);
    prob.ignore_current = true;
    let r = csearch_minimize(&prob).unwrap();
    assert_eq!(r.constraint_residual.jp_l1, 0.0);
    let mut plain = pair.clone();
    plain.jp = VectorField::zeros(&g);
    let vw = n1_closed_form(&plain).unwrap();
    assert!((r.value - vw).abs() <= 1e-7, "{} vs {vw}", r.value);
    let full = csearch_minimize(&quick(pair, Objective::Kinetic, SearchSpace::Wavefunctions)).unwrap();
    assert!(r.value <= full.value + 1e-8);
}

#[test]
fn penalty_stages_reduce_residual_monotonically() {
    let p = smooth_instance(5);
    let (_, target) = ground_pair(&p, HamiltonianKind::Full);
    for update in [true, false] {
        let mut prob = quick(target.clone(), Objective::H0, SearchSpace::Wavefunctions);
        prob.eta = p.eta;
        prob.multiplier_update = update;
        prob.constraint_tol = 1e-12;
        prob.penalty_schedule = vec![1.0, 1e1, 1e2, 1e3];
        let res = match csearch_minimize(&prob) {
            Ok(r) => r.stage_residuals,
            Err(CdftError::InfeasibleConstraints { .. }) => {
                prob.constraint_tol = 1.0;
                prob.penalty_schedule = vec![1.0, 1e1, 1e2, 1e3];
                csearch_minimize(&prob).unwrap().stage_residuals
            }
            Err(e) => panic!("{e}"),
        };
        assert!(res.windows(2).all(|w| w[1] <= w[0]), "{res:?}");
    }
}

#[test]
fn identical_seed_gives_identical_result() {
    let p = smooth_instance(6);
    let (_, target) = ground_pair(&p, HamiltonianKind::Full);
    let mut prob = quick(target, Objective::Kinetic, SearchSpace::Determinants);
    prob.max_restarts = 3;
    prob.seed = 42;
    let a = csearch_minimize(&prob).unwrap();
    let b = csearch_minimize(&prob).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.best_start, b.best_start);
    assert_eq!(a.minimizer.wavefunction().amplitudes(), b.minimizer.wavefunction().amplitudes());
    assert_eq!(a.restarts_used, 3);
}

#[test]
fn warm_start_and_problem_validation() {
    let p = smooth_instance(7);
    let (gs, target) = ground_pair(&p, HamiltonianKind::Full);
    let mut prob = quick(target.clone(), Objective::H0, SearchSpace::Wavefunctions);
    prob.eta = p.eta;
    prob.max_restarts = 0;
    prob.warm_starts = vec![Minimizer::Wave(gs.ground_state.clone())];
    let r = csearch_minimize(&prob).unwrap();
    assert_eq!(r.best_start, 0);
    let h0 = expectation(&p, r.minimizer.wavefunction(), HamiltonianKind::H0).unwrap();
    assert!((r.value - h0).abs() < 1e-8);

    let mut det = quick(target.clone(), Objective::Kinetic, SearchSpace::Determinants);
    det.warm_starts = vec![Minimizer::Wave(gs.ground_state)];
    assert!(matches!(csearch_minimize(&det), Err(CdftError::InvalidArgument(_))));

    let mut bad = quick(target.clone(), Objective::H0, SearchSpace::Wavefunctions);
    bad.penalty_schedule = vec![10.0, 10.0];
    assert!(matches!(csearch_minimize(&bad), Err(CdftError::InvalidArgument(_))));
    bad.penalty_schedule = vec![10.0];
    bad.constraint_tol = 0.0;
    assert!(matches!(csearch_minimize(&bad), Err(CdftError::InvalidArgument(_))));

    let mut tight = quick(target, Objective::H0, SearchSpace::Wavefunctions);
    tight.budget = 10;
    assert!(matches!(csearch_minimize(&tight), Err(CdftError::BudgetExceeded { .. })));
}

#[test]
fn rough_one_particle_targets_on_a_chain_are_solved() {
    let g = Grid::<f64>::dirichlet_box(&[-4.0], &[4.0], 0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let amps = (0..g.len()).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let psi = WaveFunction::normalized(&g, 1, amps).unwrap();
        let target = density_pair(&psi);
        let kin = expectation(&Potentials::zero(&g), &psi, HamiltonianKind::Kinetic).unwrap();
        let mut values = Vec::new();
        for space in [SearchSpace::Wavefunctions, SearchSpace::Determinants] {
            let r = csearch_minimize(&quick(target.clone(), Objective::Kinetic, space)).unwrap();
            assert!(r.constraint_residual.max() <= 1e-9);
            assert!(r.value <= kin + 1e-9, "{} > {kin}", r.value);
            let back = r.minimizer.density_pair();
            assert!(back.rho.values().iter().zip(target.rho.values()).all(|(a, b)| (a - b).abs() < 1e-8));
            values.push(r.value);
        }
        assert!((values[0] - values[1]).abs() <= 1e-9, "{values:?}");
    }
}
