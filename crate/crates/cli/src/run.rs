//! Command execution: validate, compute, then write artifacts and the
//! manifest (last, via rename, as the completion marker).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use cdft::csearch::{csearch_minimize, yn_check_with, CsearchProblem, Minimizer, YnOptions};
use cdft::io::{write_complex_field, write_scalar_field, write_vector_field, write_wavefunction};
use cdft::kohnsham::{g_energy, ks_scf, minimize_g, MinimizeGOptions, ScfOptions, XcKind, XcModel};
use cdft::lattice::{ComplexField, Grid, ScalarField, VectorField};
use cdft::manybody::{
    density_pair, energy, ground_state_with, Determinant, GroundStateOptions, HamiltonianKind, Potentials, WaveFunction,
};
use cdft::pair::DensityPair;
use cdft::scalar::Complex;
use cdft::vrep::{invert_potential, refinement_scan, vrep_check, CounterexampleSpec};
use cdft::{CdftError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, DeterminantSource, RunConfig, WaveSource};
use crate::families::{generate_scalar, generate_vector, FieldSpec};

pub const MANIFEST: &str = "manifest.json";
pub const DEFAULT_OUTPUT_DIR: &str = "cdft-out";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub name: String,
    pub module: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub status: String,
    pub exit_code: i32,
    pub config: Value,
    pub versions: BTreeMap<String, String>,
    pub wall_time_s: f64,
    /// Every file written next to the manifest.
    pub artifacts: Vec<String>,
    /// Key results; reproducible bitwise for identical config and seed.
    pub scalars: BTreeMap<String, Value>,
    pub metadata: BTreeMap<String, Value>,
    pub error: Option<ErrorRecord>,
}

/// Exit code for an error: 3 for numerical outcomes, 2 for invalid input.
pub fn exit_code(e: &CdftError) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

#[derive(Default)]
struct Outcome {
    files: Vec<(String, Vec<u8>)>,
    scalars: BTreeMap<String, Value>,
    metadata: BTreeMap<String, Value>,
}

impl Outcome {
    fn scalar(&mut self, k: &str, v: impl Serialize) {
        self.scalars.insert(k.into(), json!(v));
    }

    fn json(&mut self, name: &str, v: &impl Serialize) -> Result<()> {
        let text = serde_json::to_vec_pretty(v).map_err(|e| CdftError::Io(e.to_string()))?;
        self.files.push((name.into(), text));
        Ok(())
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.into(), buf));
        Ok(())
    }

    fn pair(&mut self, pair: &DensityPair<f64>) -> Result<()> {
        self.csv("rho.csv", |b| write_scalar_field(&pair.rho, b))?;
        self.csv("jp.csv", |b| write_vector_field(&pair.jp, b))
    }

    fn orbitals(&mut self, det: &Determinant<f64>) -> Result<()> {
        for (k, f) in det.orbitals().iter().enumerate() {
            self.csv(&format!("orbital_{k}.csv"), |b| write_complex_field(f, b))?;
        }
        Ok(())
    }
}

/// Validated inputs shared by the commands.
struct Ctx<'a> {
    cfg: &'a RunConfig,
    command: Command,
    grid: Option<Grid<f64>>,
    pot: Option<Potentials<f64>>,
}

impl Ctx<'_> {
    fn grid(&self) -> &Grid<f64> {
        self.grid.as_ref().expect("validated")
    }

    fn pot(&self) -> &Potentials<f64> {
        self.pot.as_ref().expect("validated")
    }

    fn n(&self) -> usize {
        self.cfg.particles
    }

    fn gs_opts(&self) -> GroundStateOptions {
        GroundStateOptions::default()
    }

    fn ground(&self, kind: HamiltonianKind) -> Result<cdft::manybody::SpectrumResult<f64>> {
        ground_state_with(self.pot(), self.n(), kind, self.cfg.tolerances.eigen, &self.gs_opts())
    }

    fn scalar_field(&self, spec: &FieldSpec) -> Result<ScalarField<f64>> {
        generate_scalar(spec, self.grid(), self.n(), self.cfg.seed)
    }

    fn target(&self) -> Result<DensityPair<f64>> {
        match &self.cfg.density {
            Some(d) => {
                let rho = self.scalar_field(d)?;
                let jp = match &self.cfg.current {
                    Some(c) => generate_vector(c, self.grid(), self.cfg.seed)?,
                    None => VectorField::zeros(self.grid()),
                };
                Ok(yn_check_with(rho, jp, self.n(), &YnOptions::default())?.pair)
            }
            None => {
                let gs = self.ground(HamiltonianKind::Full)?;
                gs.require_nondegenerate()?;
                Ok(density_pair(&gs.ground_state))
            }
        }
    }

    fn wavefunction(&self, default: WaveSource) -> Result<WaveFunction<f64>> {
        match self.cfg.wavefunction.clone().unwrap_or(default) {
            WaveSource::GroundState => {
                let gs = self.ground(HamiltonianKind::Full)?;
                gs.require_nondegenerate()?;
                Ok(gs.ground_state)
            }
            WaveSource::Random => WaveFunction::random(self.grid(), self.n(), self.cfg.seed),
            WaveSource::File { path } => cdft::io::load_wavefunction(self.grid(), self.n(), path),
        }
    }

    fn determinant(&self) -> Result<Determinant<f64>> {
        let g = self.grid();
        let orbitals = match self.cfg.determinant.clone().unwrap_or(DeterminantSource::Random) {
            DeterminantSource::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
                (0..self.n())
                    .map(|_| {
                        let v = (0..g.len()).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                        ComplexField::new(g.clone(), v)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            DeterminantSource::Files { paths } => {
                if paths.len() != self.n() {
                    return Err(CdftError::InvalidArgument(format!("{} orbital files for {} particles", paths.len(), self.n())));
                }
                paths.iter().map(|p| cdft::io::load_complex_field(g, p)).collect::<Result<Vec<_>>>()?
            }
        };
        Determinant::from_independent(&orbitals)
    }

    fn xc(&self) -> XcModel {
        let mut xc = self.cfg.xc.clone().expect("validated");
        xc.oracle_budget.seed = self.cfg.seed;
        xc
    }
}

fn prepare(cfg: &RunConfig, command: Command) -> Result<Ctx<'_>> {
    cfg.validate(command)?;
    let grid = cfg.grid.as_ref().map(|g| g.build()).transpose()?;
    let pot = match &grid {
        Some(g) => {
            let v = generate_scalar(&cfg.potentials.v, g, cfg.particles, cfg.seed)?;
            let a = generate_vector(&cfg.potentials.a, g, cfg.seed)?;
            Some(Potentials::new(v, a, cfg.eta.unwrap_or_else(|| Potentials::default_eta(g)))?)
        }
        None => None,
    };
    Ok(Ctx { cfg, command, grid, pot })
}

fn compute(ctx: &Ctx) -> Result<Outcome> {
    let mut out = Outcome::default();
    let cfg = ctx.cfg;
    match ctx.command {
        Command::Solve => {
            let kind = cfg.hamiltonian.unwrap_or(HamiltonianKind::Full);
            let gs = ctx.ground(kind)?;
            let s = gs.summary();
            out.scalar("e0", s.e0);
            out.scalar("gap", s.gap);
            out.scalar("degenerate", s.degenerate);
            out.scalar("residual", gs.residual);
            out.json("spectrum.json", &s)?;
            out.csv("ground_state.csv", |b| write_wavefunction(&gs.ground_state, b))?;
            out.pair(&density_pair(&gs.ground_state))?;
        }
        Command::Densities => {
            let psi = ctx.wavefunction(WaveSource::GroundState)?;
            let pair = density_pair(&psi);
            out.scalar("total", pair.diagnostics.total);
            out.scalar("jp_l1", pair.diagnostics.jp_l1);
            out.scalar("curl_of_velocity", pair.diagnostics.curl_of_velocity);
            out.json("pair.json", &pair.diagnostics)?;
            out.pair(&pair)?;
        }
        Command::DecompCheck => {
            let psi = ctx.wavefunction(WaveSource::Random)?;
            let d = energy(ctx.pot(), &psi)?;
            out.scalar("total", d.total);
            out.scalar("h0_part", d.h0_part);
            out.scalar("current_coupling", d.current_coupling);
            out.scalar("density_coupling", d.density_coupling);
            out.scalar("relative_defect", d.relative_defect());
            out.json("decomposition.json", &json!({ "decomposition": d, "relative_defect": d.relative_defect() }))?;
        }
        Command::InvertV => {
            let rho = ctx.scalar_field(cfg.density.as_ref().expect("validated"))?;
            let r = invert_potential(&rho, cfg.energy.unwrap_or(0.0))?;
            let s = r.summary();
            out.scalar("e", s.e);
            out.scalar("ratio_bound", s.ratio_bound);
            out.scalar("positivity_ok", s.positivity_ok);
            out.json("inversion.json", &s)?;
            out.csv("v.csv", |b| write_scalar_field(&r.v, b))?;
        }
        Command::VrepCheck => {
            let rho = ctx.scalar_field(cfg.density.as_ref().expect("validated"))?;
            let r = vrep_check(&rho)?;
            let s = r.summary();
            out.scalar("verdict", s.verdict);
            out.scalar("ratio_bound", s.ratio_bound);
            out.scalar("eigen_residual", s.eigen_residual);
            out.scalar("ground_state_confirmed", s.ground_state_confirmed);
            out.json("vrep.json", &s)?;
            out.csv("v.csv", |b| write_scalar_field(&r.v, b))?;
        }
        Command::CounterexampleScan => {
            let c = cfg.counterexample.as_ref().expect("validated");
            let mut spec = CounterexampleSpec::new(c.a, c.b, c.eps);
            if let Some(hw) = c.half_width {
                spec.half_width = hw;
                spec.cutoff = 0.25 * hw;
            }
            let t = refinement_scan(&spec, &c.hs)?;
            out.scalar("slopes", t.rows.iter().skip(1).map(|r| r.slope_estimate).collect::<Vec<_>>());
            out.scalar("lap_growing", t.lap_growing);
            out.scalar("coupling_decreasing", t.coupling_decreasing);
            out.files.push(("scan.csv".into(), t.to_csv().into_bytes()));
            out.json("scan.json", &t)?;
        }
        Command::YnCheck => {
            let rho = ctx.scalar_field(cfg.density.as_ref().expect("validated"))?;
            let jp = match &cfg.current {
                Some(c) => generate_vector(c, ctx.grid(), cfg.seed)?,
                None => VectorField::zeros(ctx.grid()),
            };
            let r = yn_check_with(rho, jp, ctx.n(), &YnOptions::default())?;
            out.scalar("accepted", true);
            out.scalar("kinetic_bound", r.pair.diagnostics.kinetic_bound);
            out.json("yn.json", &json!({ "diagnostics": r.pair.diagnostics, "warnings": r.warnings }))?;
        }
        Command::Csearch => {
            let spec = cfg.csearch.as_ref().expect("validated");
            let target = ctx.target()?;
            let mut p = CsearchProblem::new(target, spec.objective, spec.space);
            p.ignore_current = spec.ignore_current;
            p.eta = ctx.pot().eta;
            p.seed = cfg.seed;
            p.constraint_tol = cfg.tolerances.constraint;
            p.inner_tol = cfg.tolerances.inner;
            p.curl_tol = cfg.tolerances.curl;
            if let Some(r) = spec.max_restarts {
                p.max_restarts = r;
            }
            let r = csearch_minimize(&p)?;
            let s = r.summary();
            out.scalar("value", s.value);
            out.scalar("constraint_residual", s.constraint_residual.max());
            out.scalar("lower_bound", s.certificate.as_ref().map(|c| c.lower_bound));
            out.json("csearch.json", &s)?;
            out.csv("minimizer.csv", |b| write_wavefunction(r.minimizer.wavefunction(), b))?;
            if let Minimizer::Det(d) = &r.minimizer {
                out.orbitals(d)?;
            }
            out.csv("multiplier_rho.csv", |b| write_scalar_field(&r.multiplier_rho, b))?;
            out.csv("multiplier_jp.csv", |b| write_vector_field(&r.multiplier_jp, b))?;
        }
        Command::KsScf => {
            let spec = cfg.scf.clone().unwrap_or_default();
            let opts = ScfOptions { tol: cfg.tolerances.scf, max_iter: spec.max_iter, mixing: spec.mixing };
            let r = ks_scf(ctx.pot(), ctx.n(), &ctx.xc(), &opts)?;
            out.scalar("energy", r.energy);
            out.scalar("iterations", r.iterations);
            out.scalar("residual", r.residual);
            out.scalar("converged", r.converged);
            out.json(
                "scf.json",
                &json!({
                    "energy": r.energy, "iterations": r.iterations, "residual": r.residual,
                    "converged": r.converged, "lagrange_matrix": r.lagrange_matrix, "energies": r.energies,
                }),
            )?;
            out.orbitals(&r.orbitals)?;
        }
        Command::MinimizeG => {
            let xc = ctx.xc();
            let opts = MinimizeGOptions {
                seed: cfg.seed,
                max_restarts: xc.oracle_budget.max_restarts.max(1),
                curl_tol: cfg.tolerances.curl,
                ..MinimizeGOptions::default()
            };
            let r = minimize_g(ctx.pot(), ctx.n(), &xc, &opts)?;
            out.scalar("total", r.evaluation.total);
            out.scalar("e0", r.ground.as_ref().map(|g| g.e0));
            out.scalar("pair_error", r.pair_error);
            out.scalar("certificate", &r.certificate);
            out.json(
                "minimize_g.json",
                &json!({ "evaluation": r.evaluation, "ground": r.ground, "pair_error": r.pair_error, "certificate": r.certificate }),
            )?;
            out.orbitals(&r.phi_m)?;
            out.pair(&r.pair)?;
        }
        Command::GEval => {
            let det = ctx.determinant()?;
            let e = g_energy(ctx.pot(), &det, &ctx.xc())?;
            out.scalar("total", e.total);
            out.scalar("delta_t", e.delta_t);
            out.scalar("exc_w", e.exc_w);
            out.scalar("hartree", e.hartree);
            out.json("g_eval.json", &e)?;
        }
    }
    if let Some(g) = &ctx.grid {
        out.metadata.insert("grid_shape".into(), json!(g.shape()));
        out.metadata.insert("grid_spacing".into(), json!(g.spacing()));
        out.metadata.insert("grid_origin".into(), json!(g.origin()));
        out.metadata.insert("boundary".into(), json!(g.boundary()));
    }
    if let Some(p) = &ctx.pot {
        out.metadata.insert("eta".into(), json!(p.eta));
    }
    if let Some(xc) = &cfg.xc {
        out.metadata.insert("xc_kind".into(), json!(xc.kind));
        if xc.kind == XcKind::ConstrainedOracle {
            out.metadata.insert("oracle_terms".into(), json!("minimizer-dependent"));
        }
    }
    Ok(out)
}

fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("cdft".into(), env!("CARGO_PKG_VERSION").into()),
        ("manifest_format".into(), "1".into()),
    ])
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| CdftError::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, dir.join(name)).map_err(|e| CdftError::Io(e.to_string()))
}

/// One invocation of the binary.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Runs an invocation end to end; returns the exit code and the manifest
/// (also written to `<output_dir>/manifest.json`).
pub fn run(inv: &Invocation) -> (i32, RunManifest) {
    let start = Instant::now();
    let parsed = fs::read_to_string(&inv.config)
        .map_err(|e| CdftError::Io(format!("{}: {e}", inv.config.display())))
        .and_then(|t| RunConfig::from_json(&t));
    let mut cfg = match parsed {
        Ok(c) => Some(c),
        Err(e) => {
            let dir = inv.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
            return finish(inv.command, &dir, Value::Null, Err(e), start);
        }
    };
    let c = cfg.as_mut().expect("parsed");
    if let Some(d) = &inv.output_dir {
        c.output_dir = Some(d.clone());
    }
    if let Some(s) = inv.seed {
        c.seed = s;
    }
    let cfg = cfg.expect("parsed");
    run_config(inv.command, &cfg, start)
}

pub fn run_config(command: Command, cfg: &RunConfig, start: Instant) -> (i32, RunManifest) {
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let echo = serde_json::to_value(cfg).unwrap_or(Value::Null);
    let result = prepare(cfg, command).and_then(|ctx| compute(&ctx));
    finish(command, &dir, echo, result, start)
}

fn finish(command: Command, dir: &Path, config: Value, result: Result<Outcome>, start: Instant) -> (i32, RunManifest) {
    let mut manifest = RunManifest {
        command: command.name().into(),
        status: "ok".into(),
        exit_code: 0,
        config,
        versions: versions(),
        wall_time_s: 0.0,
        artifacts: Vec::new(),
        scalars: BTreeMap::new(),
        metadata: BTreeMap::new(),
        error: None,
    };
    let fail = |m: &mut RunManifest, e: &CdftError| {
        m.status = "error".into();
        m.exit_code = exit_code(e);
        m.artifacts.clear();
        m.error = Some(ErrorRecord { name: e.name().into(), module: e.module().into(), message: e.to_string() });
    };
    if let Err(e) = fs::create_dir_all(dir) {
        let e = CdftError::Io(format!("{}: {e}", dir.display()));
        fail(&mut manifest, &e);
        return (manifest.exit_code, manifest);
    }
    match result {
        Ok(out) => {
            let written = out.files.iter().try_for_each(|(name, bytes)| write_atomic(dir, name, bytes));
            manifest.artifacts = out.files.iter().map(|(n, _)| n.clone()).collect();
            manifest.scalars = out.scalars;
            manifest.metadata = out.metadata;
            if let Err(e) = written {
                fail(&mut manifest, &e);
            }
        }
        Err(e) => fail(&mut manifest, &e),
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = write_atomic(dir, MANIFEST, &text) {
        eprintln!("cannot write manifest: {e}");
        return (exit_code(&e).max(2), manifest);
    }
    (manifest.exit_code, manifest)
}
