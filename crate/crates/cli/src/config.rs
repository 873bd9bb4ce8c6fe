use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use cdft::csearch::{Objective, SearchSpace};
use cdft::kohnsham::XcModel;
use cdft::lattice::{Boundary, Grid};
use cdft::manybody::HamiltonianKind;
use cdft::{CdftError, Result};

use crate::families::FieldSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Densities,
    DecompCheck,
    InvertV,
    VrepCheck,
    CounterexampleScan,
    YnCheck,
    Csearch,
    KsScf,
    MinimizeG,
    GEval,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Densities => "densities",
            Command::DecompCheck => "decomp-check",
            Command::InvertV => "invert-v",
            Command::VrepCheck => "vrep-check",
            Command::CounterexampleScan => "counterexample-scan",
            Command::YnCheck => "yn-check",
            Command::Csearch => "csearch",
            Command::KsScf => "ks-scf",
            Command::MinimizeG => "minimize-g",
            Command::GEval => "g-eval",
        }
    }
}

/// Box `[lo, hi]` with spacing `h`. Dirichlet boxes exclude the walls,
/// periodic boxes are half-open; `cell_centered` puts points at cell midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub h: f64,
    pub boundary: Boundary,
    #[serde(default)]
    pub cell_centered: bool,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid<f64>> {
        if self.lo.len() != self.hi.len() {
            return Err(CdftError::InvalidGrid("lo and hi differ in length".into()));
        }
        if !(self.h > 0.0) {
            return Err(CdftError::InvalidGrid(format!("spacing {} must be positive", self.h)));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(b > a)) {
            return Err(CdftError::InvalidGrid("need lo < hi on every axis".into()));
        }
        match (self.cell_centered, self.boundary) {
            (true, b) => Grid::cell_centered(&self.lo, &self.hi, self.h, b),
            (false, Boundary::Dirichlet) => Grid::dirichlet_box(&self.lo, &self.hi, self.h),
            (false, Boundary::Periodic) => Grid::periodic_box(&self.lo, &self.hi, self.h),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default = "zero_field")]
    pub v: FieldSpec,
    #[serde(default = "zero_field")]
    pub a: FieldSpec,
}

fn zero_field() -> FieldSpec {
    FieldSpec::named("zero")
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self { v: zero_field(), a: zero_field() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub eigen: f64,
    pub constraint: f64,
    pub inner: f64,
    pub scf: f64,
    pub curl: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eigen: 1e-10, constraint: 1e-6, inner: 1e-8, scf: 1e-8, curl: cdft::csearch::CURL_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveSource {
    GroundState,
    Random,
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeterminantSource {
    Random,
    /// One complex-field CSV per orbital; orthonormalized on load.
    Files { paths: Vec<PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub hs: Vec<f64>,
    #[serde(default)]
    pub half_width: Option<f64>,
}

/// Target is the ground pair of the configured potentials unless a
/// `density` (and optionally `current`) is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsearchSpec {
    pub objective: Objective,
    pub space: SearchSpace,
    #[serde(default)]
    pub ignore_current: bool,
    #[serde(default)]
    pub max_restarts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfSpec {
    pub mixing: f64,
    pub max_iter: usize,
}

impl Default for ScfSpec {
    fn default() -> Self {
        Self { mixing: 0.3, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub potentials: PotentialSpec,
    #[serde(default = "one")]
    pub particles: usize,
    /// Softening length; `h/2` when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,

    #[serde(default)]
    pub hamiltonian: Option<HamiltonianKind>,
    #[serde(default)]
    pub wavefunction: Option<WaveSource>,
    #[serde(default)]
    pub density: Option<FieldSpec>,
    #[serde(default)]
    pub current: Option<FieldSpec>,
    /// Eigenvalue for `invert-v`.
    #[serde(default)]
    pub energy: Option<f64>,
    #[serde(default)]
    pub counterexample: Option<ScanSpec>,
    #[serde(default)]
    pub csearch: Option<CsearchSpec>,
    #[serde(default)]
    pub xc: Option<XcModel>,
    #[serde(default)]
    pub scf: Option<ScfSpec>,
    #[serde(default)]
    pub determinant: Option<DeterminantSource>,
}

fn one() -> usize {
    1
}

fn missing(command: Command, field: &str) -> CdftError {
    CdftError::InvalidArgument(format!("command {} requires '{field}'", command.name()))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CdftError::ParseError { line: e.line(), message: e.to_string() })
    }

    /// Command-specific required fields; checked before anything runs.
    pub fn validate(&self, command: Command) -> Result<()> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CdftError::InvalidArgument(format!(
                    "config is for command {}, invoked as {}",
                    c.name(),
                    command.name()
                )));
            }
        }
        if command != Command::CounterexampleScan && self.grid.is_none() {
            return Err(missing(command, "grid"));
        }
        if self.particles == 0 {
            return Err(CdftError::InvalidArgument("particles must be positive".into()));
        }
        if let Some(eta) = self.eta {
            if !(eta >= 0.0) {
                return Err(CdftError::InvalidArgument(format!("eta {eta} must be >= 0")));
            }
        }
        let t = &self.tolerances;
        if [t.eigen, t.constraint, t.inner, t.scf, t.curl].iter().any(|&x| !(x > 0.0)) {
            return Err(CdftError::InvalidArgument("tolerances must be positive".into()));
        }
        match command {
            Command::InvertV | Command::VrepCheck | Command::YnCheck if self.density.is_none() => {
                Err(missing(command, "density"))
            }
            Command::CounterexampleScan if self.counterexample.is_none() => Err(missing(command, "counterexample")),
            Command::Csearch if self.csearch.is_none() => Err(missing(command, "csearch")),
            Command::KsScf | Command::MinimizeG | Command::GEval if self.xc.is_none() => Err(missing(command, "xc")),
            _ => Ok(()),
        }
    }
}
