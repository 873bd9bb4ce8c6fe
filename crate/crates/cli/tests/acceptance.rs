//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use cdft::csearch::*;
use cdft::io::{read_complex_field, read_scalar_field, write_complex_field, write_scalar_field};
use cdft::kohnsham::*;
use cdft::lattice::{integrate, Boundary, ComplexField, Grid, ScalarField, VectorField};
use cdft::manybody::*;
use cdft::pair::DensityPair;
use cdft::scalar::Complex;
use cdft::vrep::*;
use cdft::CdftError;
use cdft_cli::{Command, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: CdftError) -> String {
    format!("{} ({})", e, e.name())
}

fn random_potentials(g: &Grid<f64>, seed: u64) -> Potentials<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vv: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let av: Vec<f64> = (0..g.len() * g.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Potentials::new(ScalarField::new(g.clone(), vv).unwrap(), VectorField::new(g.clone(), av).unwrap(), 0.5 * g.spacing()[0])
        .unwrap()
}

/// Smooth random confining potentials on a line, with a vector potential.
fn smooth_instance(m: usize, h: f64, seed: u64, eta: f64, with_a: bool) -> Potentials<f64> {
    let x0 = -0.5 * h * (m as f64 - 1.0);
    let g = Grid::<f64>::line(m, h, x0, Boundary::Dirichlet).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c1, c2, s1, a0, a1): (f64, f64, f64, f64, f64) = (
        rng.gen_range(-0.5..0.5),
        rng.gen_range(-0.5..0.5),
        rng.gen_range(0.5..1.5),
        rng.gen_range(-0.8..0.8),
        rng.gen_range(-0.5..0.5),
    );
    let v = ScalarField::from_fn(&g, |x| 0.3 * x[0] * x[0] + c1 * (s1 * x[0]).sin() + c2 * (0.7 * x[0]).cos());
    let a = if with_a { VectorField::from_fn(&g, |x| vec![a0 + a1 * (0.9 * x[0]).sin()]) } else { VectorField::zeros(&g) };
    Potentials::new(v, a, eta).unwrap()
}

fn random_orbitals(g: &Grid<f64>, n: usize, rng: &mut ChaCha8Rng) -> Vec<ComplexField<f64>> {
    (0..n)
        .map(|_| {
            let vals = (0..g.len()).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            ComplexField::new(g.clone(), vals).unwrap()
        })
        .collect()
}

fn phase_state(g: &Grid<f64>, seed: u64) -> WaveFunction<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, c, k) = (rng.gen_range(0.6..1.4), rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0));
    let amps = (0..g.len())
        .map(|p| {
            let x = g.coord(p, 0);
            let mag = (-w * x * x / 2.0).exp() * (1.0 + c * x).abs().max(0.2);
            Complex::from_polar(mag, k * x + 0.2 * x.sin())
        })
        .collect();
    WaveFunction::normalized(g, 1, amps).unwrap()
}

fn quick(target: DensityPair<f64>, objective: Objective, space: SearchSpace, eta: f64) -> CsearchProblem<f64> {
    let mut p = CsearchProblem::new(target, objective, space);
    p.max_restarts = 1;
    p.constraint_tol = 1e-9;
    p.inner_tol = 1e-9;
    p.eta = eta;
    p
}

fn criterion_1() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = if seed % 2 == 0 {
            Grid::<f64>::line(rng.gen_range(6..14), rng.gen_range(0.2..0.6), -1.0, Boundary::Dirichlet).unwrap()
        } else {
            let b = if seed % 4 == 1 { Boundary::Periodic } else { Boundary::Dirichlet };
            Grid::<f64>::new(vec![rng.gen_range(3..5), rng.gen_range(3..5)], vec![0.5, 0.7], vec![0.0, 0.0], b).unwrap()
        };
        let n = 1 + (seed as usize / 2) % 2;
        let p = random_potentials(&g, 1000 + seed);
        let psi = WaveFunction::random(&g, n, seed).map_err(err)?;
        let d = energy(&p, &psi).map_err(err)?;
        worst = worst.max(d.relative_defect());
    }
    ensure(worst <= 1e-12, || format!("max relative defect {worst:e}"))?;
    Ok(format!("max relative defect {worst:.2e} over 50 instances"))
}

fn criterion_2() -> Check {
    let g = Grid::<f64>::dirichlet_box(&[-8.0], &[8.0], 0.05).unwrap();
    let p = Potentials::scalar(ScalarField::from_fn(&g, |x| x[0] * x[0]));
    let e1 = ground_state(&p, 1, HamiltonianKind::Full, 1e-10).map_err(err)?.e0;
    let e2 = ground_state(&p, 2, HamiltonianKind::NonInteracting, 1e-9).map_err(err)?.e0;
    ensure((e1 - 1.0).abs() <= 2e-3 && (e2 - 4.0).abs() <= 5e-3, || format!("e0 = {e1}, {e2}"))?;
    Ok(format!("N=1 e0 = {e1:.6}, N=2 e0 = {e2:.6}"))
}

fn criterion_3() -> Check {
    let g = Grid::<f64>::dirichlet_box(&[-5.04], &[5.04], 0.02).unwrap();
    let rho = ScalarField::from_fn(&g, |x| (-x[0] * x[0]).exp());
    let rho = rho.scale(1.0 / integrate(&rho));
    let inv = invert_potential(&rho, 1.0).map_err(err)?;
    let dev = (0..g.len())
        .filter(|&p| g.coord(p, 0).abs() <= 2.52)
        .map(|p| (inv.v.values()[p] - g.coord(p, 0).powi(2)).abs())
        .fold(0.0, f64::max);
    let chk = vrep_check(&rho).map_err(err)?;
    ensure(dev <= 5e-3 && inv.eigen_residual <= 1e-10 && chk.ground_state_confirmed && chk.verdict == Some(true), || {
        format!("dev {dev:e}, residual {:e}, confirmed {}", inv.eigen_residual, chk.ground_state_confirmed)
    })?;
    Ok(format!("interior deviation {dev:.2e}, eigen residual {:.1e}, C = {:.3}", inv.eigen_residual, chk.ratio_bound))
}

fn criterion_4() -> Check {
    let hs: Vec<f64> = (0..5).map(|k| 0.02 / 2f64.powi(k)).collect();
    let mut summary = Vec::new();
    for eps in [0.25, 0.45] {
        let t = refinement_scan(&CounterexampleSpec::new(-1.0, -1.0, eps), &hs).map_err(err)?;
        let slopes: Vec<f64> = t.rows[1..].iter().map(|r| r.slope_estimate).collect();
        ensure(slopes.iter().all(|s| (s - (2.0 - 2.0 * eps)).abs() <= 0.3), || format!("eps {eps}: slopes {slopes:?}"))?;
        ensure(t.coupling_decreasing, || format!("eps {eps}: coupling not decreasing"))?;
        summary.push(format!("eps {eps}: slopes {}", slopes.iter().map(|s| format!("{s:.2}")).collect::<Vec<_>>().join("/")));
    }
    let control = scan_density(&hs, |h| {
        let g = Grid::cell_centered(&[-8.0], &[8.0], h, Boundary::Dirichlet)?;
        let r = ScalarField::from_fn(&g, |x| (-x[0] * x[0]).exp());
        Ok(r.scale(1.0 / integrate(&r)))
    })
    .map_err(err)?;
    let last = control.rows.last().unwrap().slope_estimate;
    ensure(last.abs() < 1e-3, || format!("control slope {last}"))?;
    Ok(format!("{}; control slope {last:.1e}", summary.join("; ")))
}

fn criterion_5() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let h = 0.3;
        let g = Grid::<f64>::line(24, h, -3.45, Boundary::Dirichlet).unwrap();
        let pair = density_pair(&phase_state(&g, seed));
        let exact = n1_closed_form(&pair).map_err(err)?;
        let tol = 1e-6f64.max(10.0 * h * h);
        for objective in [Objective::Kinetic, Objective::H0] {
            for space in [SearchSpace::Wavefunctions, SearchSpace::Determinants] {
                let r = csearch_minimize(&quick(pair.clone(), objective, space, 0.15)).map_err(err)?;
                let d = (r.value - exact).abs();
                ensure(d <= tol, || format!("seed {seed} {objective:?}/{space:?}: {} vs {exact}", r.value))?;
                worst = worst.max(d);
            }
        }
    }
    Ok(format!("max |search - closed form| = {worst:.2e} over 10 pairs x 4 modes"))
}

fn criterion_6() -> Check {
    let (mut dv, mut ov) = (0.0f64, 1.0f64);
    for seed in 0..5u64 {
        let p = smooth_instance(16, 0.4, 20 + seed, 0.2, true);
        let gs = ground_state(&p, 2, HamiltonianKind::Full, 1e-12).map_err(err)?;
        gs.require_nondegenerate().map_err(err)?;
        let target = density_pair(&gs.ground_state);
        let h0 = expectation(&p, &gs.ground_state, HamiltonianKind::H0).map_err(err)?;
        let r = csearch_minimize(&quick(target, Objective::H0, SearchSpace::Wavefunctions, p.eta)).map_err(err)?;
        let o = r.minimizer.wavefunction().inner(&gs.ground_state).map_err(err)?.norm();
        ensure((r.value - h0).abs() <= 1e-5 && o >= 1.0 - 1e-4, || format!("seed {seed}: Q {} vs {h0}, overlap {o}", r.value))?;
        dv = dv.max((r.value - h0).abs());
        ov = ov.min(o);
    }
    Ok(format!("max |Q - <H0>| = {dv:.2e}, min overlap {ov:.8}"))
}

fn criterion_7() -> Check {
    let mut margin = f64::INFINITY;
    let mut order = f64::INFINITY;
    for k in 0..20u64 {
        let p = smooth_instance(16, 0.4, 40 + k, 0.2, k % 2 == 0);
        let e0 = ground_state(&p, 2, HamiltonianKind::Full, 1e-12).map_err(err)?.e0;
        let g = p.grid().clone();
        let pair = if k % 4 == 3 {
            density_pair(&ground_state(&p, 2, HamiltonianKind::Full, 1e-12).map_err(err)?.ground_state)
        } else {
            density_pair(&WaveFunction::random(&g, 2, 500 + k).map_err(err)?)
        };
        let run = |o, s| csearch_minimize(&quick(pair.clone(), o, s, p.eta)).map_err(err);
        let q = run(Objective::H0, SearchSpace::Wavefunctions)?.value;
        let qp = run(Objective::Kinetic, SearchSpace::Wavefunctions)?.value;
        let t = run(Objective::Kinetic, SearchSpace::Determinants)?.value;
        ensure(q >= qp - 1e-8 && t >= qp - 1e-8, || format!("sample {k}: Q {q}, Q' {qp}, T_det {t}"))?;
        let (cur, den) = couplings(&p, &pair).map_err(err)?;
        ensure(q + cur + den >= e0 - 1e-5, || format!("sample {k}: {} < {e0}", q + cur + den))?;
        margin = margin.min(q + cur + den - e0);
        order = order.min((q - qp).min(t - qp));
    }
    Ok(format!("20 samples; min ordering gap {order:.2e}, min variational margin {margin:.2e}"))
}

/// Random determinants that keep j/rho curl free on the 2D instance:
/// x-dependent orbitals times one shared real y-profile.
fn curl_free_determinant_2d(g: &Grid<f64>, rng: &mut ChaCha8Rng) -> Determinant<f64> {
    let (nx, ny) = (g.shape()[0], g.shape()[1]);
    let chi: Vec<f64> = (0..ny).map(|_| rng.gen_range(0.5..1.5)).collect();
    let orbs: Vec<_> = (0..2)
        .map(|_| {
            let f: Vec<Complex<f64>> = (0..nx).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let vals = (0..g.len())
                .map(|q| {
                    let i = g.multi_index(q);
                    f[i[0]] * chi[i[1]]
                })
                .collect();
            ComplexField::new(g.clone(), vals).unwrap()
        })
        .collect();
    Determinant::from_independent(&orbs).unwrap()
}

fn criterion_8() -> Check {
    let mut xc = XcModel::new(XcKind::ConstrainedOracle);
    xc.oracle_budget.max_restarts = 1;
    let harmonic = {
        let g = Grid::<f64>::dirichlet_box(&[-4.0], &[4.0], 0.25).unwrap();
        Potentials::scalar(ScalarField::from_fn(&g, |x| x[0] * x[0]))
    };
    let line = smooth_instance(12, 0.5, 3, 0.5, false);
    let plane = {
        let g = Grid::<f64>::periodic_box(&[0.0, 0.0], &[3.0, 3.0], 0.5).unwrap();
        let k = 2.0 * std::f64::consts::PI / 3.0;
        let v = ScalarField::from_fn(&g, |x| 3.0 * (k * x[0]).cos() + 0.3 * (2.0 * k * x[0]).sin());
        Potentials::new(v, VectorField::from_fn(&g, |_| vec![0.4, 0.0]), 0.5).unwrap()
    };
    let mut lines = Vec::new();
    for (name, p, n) in [("N=1 1D", &harmonic, 1usize), ("N=2 1D", &line, 2), ("N=2 2D", &plane, 2)] {
        let e0 = ground_state(p, n, HamiltonianKind::Full, 1e-12).map_err(err)?.e0;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut low = f64::INFINITY;
        for _ in 0..20 {
            let det = if p.grid().dim() == 2 {
                curl_free_determinant_2d(p.grid(), &mut rng)
            } else {
                Determinant::from_independent(&random_orbitals(p.grid(), n, &mut rng)).map_err(err)?
            };
            let e = g_energy(p, &det, &xc).map_err(|e| format!("{name}: {}", err(e)))?;
            ensure(e.total >= e0 - 1e-5, || format!("{name}: G = {} < e0 = {e0}", e.total))?;
            low = low.min(e.total - e0);
        }
        let r = minimize_g(p, n, &xc, &MinimizeGOptions { max_restarts: 2, ..Default::default() })
            .map_err(|e| format!("{name}: minimize_g: {}", err(e)))?;
        let (dr, dj) = r.pair_error.unwrap();
        let de = (r.evaluation.total - e0).abs();
        ensure(de <= 1e-4 && dr <= 1e-3 && dj <= 1e-3, || format!("{name}: |G - e0| {de:e}, rho {dr:e}, j {dj:e}"))?;
        lines.push(format!("{name}: min G-e0 {low:.2e}, attained {de:.1e}, pair err {dr:.1e}/{dj:.1e}"));
    }
    Ok(lines.join("; "))
}

fn criterion_9() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let p = smooth_instance(14, 0.4, 60 + seed, 0.4, true);
        let e0 = ground_state(&p, 2, HamiltonianKind::NonInteracting, 1e-12).map_err(err)?.e0;
        let r = ks_scf(&p, 2, &XcModel::new(XcKind::CancelHartree), &ScfOptions::default()).map_err(err)?;
        ensure((r.energy - e0).abs() <= 1e-8, || format!("seed {seed}: {} vs {e0}", r.energy))?;
        worst = worst.max((r.energy - e0).abs());
        let z = ks_scf(&p, 2, &XcModel::new(XcKind::Zero), &ScfOptions::default()).map_err(err)?;
        for seq in [&r.energies, &z.energies] {
            ensure(seq.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)), || format!("seed {seed}: energies {seq:?}"))?;
        }
        ensure(z.converged, || format!("seed {seed}: zero model not converged"))?;
    }
    Ok(format!("max |E_scf - e0| = {worst:.2e}; energy sequences non-increasing"))
}

fn criterion_10() -> Check {
    let g = Grid::<f64>::new(vec![5, 4], vec![0.3, 0.45], vec![-1.0, 0.2], Boundary::Periodic).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let s = ScalarField::from_fn(&g, |_| rng.gen::<f64>() * 10f64.powi(rng.gen_range(-20..20)));
    let c = ComplexField::from_fn(&g, |_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_scalar_field(&s, &mut a).map_err(err)?;
    write_complex_field(&c, &mut b).map_err(err)?;
    let s2 = read_scalar_field(&g, a.as_slice()).map_err(err)?;
    let c2 = read_complex_field(&g, b.as_slice()).map_err(err)?;
    let bitwise = s.values().iter().zip(s2.values()).all(|(x, y)| x.to_bits() == y.to_bits())
        && c.values().iter().zip(c2.values()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
    ensure(bitwise, || "CSV round trip not bitwise".into())?;

    let text = r#"{
        "grid": { "lo": [-2.0], "hi": [2.0], "h": 0.4, "boundary": "dirichlet" },
        "potentials": { "v": { "family": "harmonic" }, "a": { "family": "random", "amplitude": 0.5 } },
        "particles": 2, "eta": 0.3, "seed": 9,
        "csearch": { "objective": "kinetic", "space": "determinants", "max_restarts": 3 }
    }"#;
    let mut scalars = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut cfg = RunConfig::from_json(text).map_err(err)?;
        cfg.output_dir = Some(dir.path().to_path_buf());
        let (code, m) = cdft_cli::run_config(Command::Csearch, &cfg, Instant::now());
        ensure(code == 0, || format!("csearch run failed: {:?}", m.error))?;
        scalars.push(serde_json::to_string(&m.scalars).unwrap());
    }
    ensure(scalars[0] == scalars[1], || format!("manifest scalars differ: {} vs {}", scalars[0], scalars[1]))?;

    let ring = Grid::<f64>::periodic_box(&[0.0], &[3.0], 0.5).unwrap();
    let p = Potentials::zero(&ring).with_eta(0.5);
    let rejected = minimize_g(&p, 2, &XcModel::new(XcKind::ConstrainedOracle), &MinimizeGOptions::default());
    ensure(matches!(rejected, Err(CdftError::DegenerateGroundState { .. })), || format!("degenerate input gave {rejected:?}"))?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig::from_json(&format!(
        r#"{{ "grid": {{ "lo": [0.0], "hi": [3.0], "h": 0.5, "boundary": "periodic" }}, "particles": 2,
             "csearch": {{ "objective": "h0", "space": "wavefunctions" }}, "output_dir": {:?} }}"#,
        dir.path()
    ))
    .map_err(err)?;
    let (code, m) = cdft_cli::run_config(Command::Csearch, &cfg, Instant::now());
    let name = m.error.map(|e| e.name).unwrap_or_default();
    ensure(code == 3 && name == "degenerate_ground_state", || format!("exit {code}, error {name}"))?;
    Ok("CSV bitwise, manifest scalars bitwise, degenerate input -> degenerate_ground_state (exit 3)".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 10] = [
        ("energy decomposition", criterion_1, Duration::from_secs(10)),
        ("harmonic oracle", criterion_2, Duration::from_secs(30)),
        ("Gaussian inversion", criterion_3, Duration::from_secs(10)),
        ("counterexample refinement", criterion_4, Duration::from_secs(30)),
        ("one-particle constrained search", criterion_5, Duration::from_secs(300)),
        ("ground-pair exactness", criterion_6, Duration::from_secs(600)),
        ("orderings and variational bound", criterion_7, Duration::from_secs(600)),
        ("determinant functional minimum", criterion_8, Duration::from_secs(1800)),
        ("SCF closure", criterion_9, Duration::from_secs(300)),
        ("infrastructure", criterion_10, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let dt = t.elapsed();
        let outcome = match outcome {
            Ok(detail) if dt > *budget => Err(format!("{detail}; over runtime budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{:.1}s]: {detail}", i + 1, dt.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{:.1}s]: {why}", i + 1, dt.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
