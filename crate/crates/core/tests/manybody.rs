use approx::assert_abs_diff_eq;
use cdft::lattice::{inner, integrate, Boundary, ComplexField, Grid, ScalarField, VectorField};
use cdft::manybody::*;
use cdft::scalar::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn harmonic(h: f64) -> Potentials<f64> {
    let g = Grid::dirichlet_box(&[-8.0], &[8.0], h).unwrap();
    Potentials::scalar(ScalarField::from_fn(&g, |x| x[0] * x[0]))
}

fn random_potentials(g: &Grid<f64>, seed: u64) -> Potentials<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vv: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let av: Vec<f64> = (0..g.len() * g.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Potentials::new(
        ScalarField::new(g.clone(), vv).unwrap(),
        VectorField::new(g.clone(), av).unwrap(),
        0.5 * g.spacing()[0],
    )
    .unwrap()
}

#[test]
fn harmonic_oscillator_single_particle() {
    let r = ground_state(&harmonic(0.05), 1, HamiltonianKind::Full, 1e-9).unwrap();
    assert!((r.e0 - 1.0).abs() <= 2e-3, "e0 = {}", r.e0);
    assert!(!r.degenerate);
    assert!(r.residual <= 1e-8);
}

#[test]
fn harmonic_oscillator_two_noninteracting_fermions() {
    let p = harmonic(0.05);
    let r = ground_state(&p, 2, HamiltonianKind::NonInteracting, 1e-8).unwrap();
    assert!((r.e0 - 4.0).abs() <= 5e-3, "e0 = {}", r.e0);
    assert_eq!(r.solver.kind, SolverKind::Krylov);
    let full = ground_state(&harmonic(0.1), 2, HamiltonianKind::Full, 1e-8).unwrap();
    let free = ground_state(&harmonic(0.1), 2, HamiltonianKind::NonInteracting, 1e-8).unwrap();
    assert!(full.e0 > free.e0);
}

#[test]
fn ring_plane_wave_symbol_with_constant_vector_potential() {
    let n = 16;
    let l = 2.0 * std::f64::consts::PI;
    let h = l / n as f64;
    let g = Grid::<f64>::line(n, h, 0.0, Boundary::Periodic).unwrap();
    let a = 0.37;
    let p = Potentials::new(ScalarField::zeros(&g), VectorField::from_fn(&g, |_| vec![a]), 0.0).unwrap();
    for kk in -3i32..=3 {
        let k = kk as f64;
        let f = ComplexField::from_fn(&g, |x| Complex::from_polar(1.0, k * x[0]));
        let norm = inner(&f, &f).unwrap().re.sqrt();
        let psi = WaveFunction::new(&g, 1, f.values().iter().map(|z| z / norm).collect()).unwrap();
        let hpsi = apply_hamiltonian(&p, &psi, HamiltonianKind::Full).unwrap();
        let sym = (2.0 - 2.0 * (k * h).cos()) / (h * h) + 2.0 * a * (k * h).sin() / h + a * a;
        for (y, x) in hpsi.iter().zip(psi.amplitudes()) {
            assert!((y - x * sym).norm() < 1e-11);
        }
    }
}

#[test]
fn h0_equals_kinetic_for_one_particle_and_interaction_is_positive() {
    let g = Grid::<f64>::line(9, 0.3, -1.2, Boundary::Dirichlet).unwrap();
    let p = random_potentials(&g, 4);
    let psi = WaveFunction::random(&g, 1, 1).unwrap();
    assert_eq!(
        apply_hamiltonian(&p, &psi, HamiltonianKind::H0).unwrap(),
        apply_hamiltonian(&p, &psi, HamiltonianKind::Kinetic).unwrap()
    );
    let psi2 = WaveFunction::random(&g, 2, 2).unwrap();
    let h0 = expectation(&p, &psi2, HamiltonianKind::H0).unwrap();
    let k = expectation(&p, &psi2, HamiltonianKind::Kinetic).unwrap();
    assert!(h0 > k);
}

#[test]
fn energy_decomposition_identity() {
    for (seed, g) in [
        Grid::<f64>::line(10, 0.4, 0.0, Boundary::Dirichlet).unwrap(),
        Grid::<f64>::new(vec![4, 3], vec![0.5, 0.7], vec![0.0, 0.0], Boundary::Periodic).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        for n in 1..=2 {
            let p = random_potentials(&g, seed as u64 + 10 * n as u64);
            let psi = WaveFunction::random(&g, n, 77 + seed as u64).unwrap();
            let e = energy(&p, &psi).unwrap();
            assert!(e.relative_defect() <= 1e-12, "defect {}", e.relative_defect());
            assert!(e.current_coupling.abs() > 1e-6);
        }
    }
}

#[test]
fn real_wavefunction_carries_no_current() {
    let g = Grid::<f64>::line(10, 0.4, 0.0, Boundary::Dirichlet).unwrap();
    let p = random_potentials(&g, 3);
    let r = ground_state(&Potentials::scalar(p.v.clone()), 2, HamiltonianKind::Full, 1e-10).unwrap();
    let psi = r.ground_state;
    assert!(psi.amplitudes().iter().all(|z| z.im.abs() < 1e-14));
    let pair = density_pair(&psi);
    assert!(pair.jp.values().iter().all(|&j| j.abs() < 1e-13));
    let e = energy(&p, &psi).unwrap();
    assert!(e.current_coupling.abs() < 1e-12);
    assert!(e.relative_defect() < 1e-12);
    assert_abs_diff_eq!(integrate(&pair.rho), 2.0, epsilon = 1e-10);
}

#[test]
fn hermiticity_of_every_kind() {
    let g = Grid::<f64>::new(vec![3, 4], vec![0.5, 0.4], vec![0.0, 0.0], Boundary::Dirichlet).unwrap();
    let p = random_potentials(&g, 8);
    let a = WaveFunction::random(&g, 2, 1).unwrap();
    let b = WaveFunction::random(&g, 2, 2).unwrap();
    for kind in [HamiltonianKind::Full, HamiltonianKind::NonInteracting, HamiltonianKind::H0, HamiltonianKind::Kinetic] {
        let hb = apply_hamiltonian(&p, &b, kind).unwrap();
        let ha = apply_hamiltonian(&p, &a, kind).unwrap();
        let w = g.cell_volume().powi(2);
        let ab: Complex<f64> = a.amplitudes().iter().zip(&hb).map(|(x, y)| x.conj() * y).sum::<Complex<f64>>() * w;
        let ba: Complex<f64> = b.amplitudes().iter().zip(&ha).map(|(x, y)| x.conj() * y).sum::<Complex<f64>>() * w;
        assert!((ab - ba.conj()).norm() < 1e-12 * ab.norm().max(1.0));
    }
}

#[test]
fn variational_principle_against_random_states() {
    let g = Grid::<f64>::line(8, 0.5, 0.0, Boundary::Dirichlet).unwrap();
    let p = random_potentials(&g, 21);
    let gs = ground_state(&p, 2, HamiltonianKind::Full, 1e-10).unwrap();
    for s in 0..20 {
        let psi = WaveFunction::random(&g, 2, s).unwrap();
        assert!(energy(&p, &psi).unwrap().total >= gs.e0 - 1e-10);
    }
    let e = energy(&p, &gs.ground_state).unwrap();
    assert!((e.total - gs.e0).abs() < 1e-9);
}

#[test]
fn determinant_examples() {
    let g = Grid::<f64>::dirichlet_box(&[0.0], &[1.0], 0.1).unwrap();
    let l = 1.0;
    let sine = |k: f64| {
        let f = ComplexField::from_fn(&g, |x| Complex::new((k * std::f64::consts::PI * x[0] / l).sin(), 0.0));
        f.scale(1.0 / inner(&f, &f).unwrap().re.sqrt())
    };
    let (f1, f2) = (sine(1.0), sine(2.0));
    let det = Determinant::new(vec![f1.clone(), f2.clone()]).unwrap();
    let h = 0.1f64;
    let stencil = |k: f64| (2.0 - 2.0 * (k * std::f64::consts::PI * h).cos()) / (h * h);
    assert_abs_diff_eq!(det.kinetic(), stencil(1.0) + stencil(2.0), epsilon = 1e-10);
    let p = Potentials::zero(&g);
    let direct = expectation(&p, det.wavefunction(), HamiltonianKind::Kinetic).unwrap();
    assert_abs_diff_eq!(direct, det.kinetic(), epsilon = 1e-10);
    assert!(det.wavefunction().antisymmetry_defect() < 1e-14);
    assert_abs_diff_eq!(det.wavefunction().norm_sq(), 1.0, epsilon = 1e-12);

    let from_det = det.density_pair();
    let from_psi = density_pair(det.wavefunction());
    for p in 0..g.len() {
        let expect = f1.values()[p].norm_sqr() + f2.values()[p].norm_sqr();
        assert!((from_psi.rho.values()[p] - expect).abs() < 1e-12);
        assert!((from_det.rho.values()[p] - expect).abs() < 1e-12);
    }

    let single = Determinant::new(vec![f1.clone()]).unwrap();
    assert!(single.wavefunction().max_abs_diff(&WaveFunction::new(&g, 1, f1.values().to_vec()).unwrap()) < 1e-12);
}

#[test]
fn complex_determinant_pair_matches_tensor_marginals() {
    let g = Grid::<f64>::new(vec![4, 4], vec![0.5, 0.5], vec![0.0, 0.0], Boundary::Periodic).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let orbs: Vec<_> = (0..2)
        .map(|_| ComplexField::from_fn(&g, |_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let det = Determinant::from_independent(&orbs).unwrap();
    let a = det.density_pair();
    let b = density_pair(det.wavefunction());
    let (dr, dj) = a.l1_distance(&b).unwrap();
    assert!(dr < 1e-12 && dj < 1e-12);
    let p = random_potentials(&g, 1);
    let k = expectation(&p, det.wavefunction(), HamiltonianKind::Kinetic).unwrap();
    assert!((k - det.kinetic()).abs() < 1e-10 * k);
}

#[test]
fn current_of_phase_modulated_state_converges_at_second_order() {
    let err = |h: f64| {
        let g = Grid::dirichlet_box(&[-6.0], &[6.0], h).unwrap();
        let theta = |x: f64| 0.7 * x + 0.2 * x * x;
        let f = ComplexField::from_fn(&g, |x| Complex::from_polar((-x[0] * x[0] / 2.0).exp(), theta(x[0])));
        let norm = inner(&f, &f).unwrap().re.sqrt();
        let psi = WaveFunction::new(&g, 1, f.values().iter().map(|z| z / norm).collect()).unwrap();
        let pair = density_pair(&psi);
        (0..g.len())
            .map(|p| {
                let x = g.coord(p, 0);
                (pair.jp.values()[p] - pair.rho.values()[p] * (0.7 + 0.4 * x)).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(0.1), err(0.05));
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn current_bounds_hold_for_random_states() {
    let g = Grid::<f64>::line(12, 0.3, 0.0, Boundary::Dirichlet).unwrap();
    let p = Potentials::zero(&g);
    for s in 0..10 {
        for n in 1..=2 {
            let psi = WaveFunction::random(&g, n, s).unwrap();
            let k = expectation(&p, &psi, HamiltonianKind::Kinetic).unwrap();
            let h0 = expectation(&p, &psi, HamiltonianKind::H0).unwrap();
            assert!(h0 >= k);
            let pair = density_pair(&psi);
            assert!(pair.diagnostics.kinetic_bound <= k + 1e-12);
            if n == 1 {
                let modulus: Vec<_> = psi.amplitudes().iter().map(|z| Complex::new(z.norm(), 0.0)).collect();
                let m = WaveFunction::new(&g, 1, modulus).unwrap();
                assert!(expectation(&p, &m, HamiltonianKind::Kinetic).unwrap() <= k + 1e-12);
            }
        }
    }
}

#[test]
fn sector_budget_is_enforced() {
    let g = Grid::<f64>::line(100, 0.1, 0.0, Boundary::Dirichlet).unwrap();
    let opts = GroundStateOptions { budget: 1000, ..Default::default() };
    let err = ground_state_with(&Potentials::zero(&g), 2, HamiltonianKind::Full, 1e-8, &opts).unwrap_err();
    assert_eq!(err.name(), "budget_exceeded");
}

#[test]
fn degenerate_spectrum_is_flagged() {
    // free particle on a ring: +k and -k are degenerate for N = 2 ground state
    let g = Grid::<f64>::line(8, 0.5, 0.0, Boundary::Periodic).unwrap();
    let r = ground_state(&Potentials::zero(&g).with_eta(0.0), 2, HamiltonianKind::NonInteracting, 1e-9).unwrap();
    assert!(r.degenerate);
    assert_eq!(r.require_nondegenerate().unwrap_err().name(), "degenerate_ground_state");
}
