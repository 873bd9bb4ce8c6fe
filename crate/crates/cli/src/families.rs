//! Named analytic field families.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use cdft::io::{load_scalar_field, load_vector_field};
use cdft::lattice::{Grid, ScalarField, VectorField};
use cdft::vrep::{englisch_density, CounterexampleSpec};
use cdft::{CdftError, Result};

/// A field given by family name plus parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl FieldSpec {
    pub fn named(family: &str) -> Self {
        Self { family: family.into(), ..Self::default() }
    }

    fn given(&self) -> Vec<&'static str> {
        let mut g = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $( if self.$f.is_some() { g.push(stringify!($f)); } )* };
        }
        check!(omega, depth, width, center, value, matrix, sigma, amplitude, a, b, eps, path);
        g
    }

    fn allow(&self, allowed: &[&str]) -> Result<()> {
        match self.given().into_iter().find(|p| !allowed.contains(p)) {
            Some(p) => Err(CdftError::BadParameters(format!("'{p}' is not a parameter of family '{}'", self.family))),
            None => Ok(()),
        }
    }

    fn positive(&self, name: &str, x: Option<f64>, default: Option<f64>) -> Result<f64> {
        match x.or(default) {
            Some(v) if v > 0.0 && v.is_finite() => Ok(v),
            Some(v) => Err(CdftError::BadParameters(format!("{}: {name} = {v} must be positive", self.family))),
            None => Err(CdftError::BadParameters(format!("{}: missing {name}", self.family))),
        }
    }

    fn point(&self, x: &Option<Vec<f64>>, name: &str, d: usize) -> Result<Vec<f64>> {
        match x {
            None => Ok(vec![0.0; d]),
            Some(c) if c.len() == d => Ok(c.clone()),
            Some(c) => Err(CdftError::BadParameters(format!("{}: {name} has {} entries, grid has dimension {d}", self.family, c.len()))),
        }
    }

    fn path(&self) -> Result<&PathBuf> {
        self.path.as_ref().ok_or_else(|| CdftError::BadParameters(format!("{}: missing path", self.family)))
    }
}

/// Smooth seeded random profile along each axis.
fn random_profile(grid: &Grid<f64>, amplitude: f64, rng: &mut ChaCha8Rng) -> ScalarField<f64> {
    let d = grid.dim();
    let coef: Vec<[f64; 4]> =
        (0..d).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(0.3..1.5), rng.gen_range(-1.0..1.0), rng.gen_range(0.3..1.5)]).collect();
    ScalarField::from_fn(grid, |x| {
        amplitude * x.iter().zip(&coef).map(|(&t, c)| c[0] * (c[1] * t).sin() + c[2] * (c[3] * t).cos()).sum::<f64>()
    })
}

/// Scalar families: `zero`, `harmonic` (`omega^2 |x - center|^2`),
/// `gaussian_well` (`-depth exp(-|x - center|^2 / 2 width^2)`), `random`,
/// densities `gaussian` and `englisch` (normalized to `n`), and `custom` CSV.
pub fn generate_scalar(spec: &FieldSpec, grid: &Grid<f64>, n: usize, seed: u64) -> Result<ScalarField<f64>> {
    let d = grid.dim();
    match spec.family.as_str() {
        "zero" => {
            spec.allow(&[])?;
            Ok(ScalarField::zeros(grid))
        }
        "harmonic" => {
            spec.allow(&["omega", "center"])?;
            let w = spec.positive("omega", spec.omega, Some(1.0))?;
            let c = spec.point(&spec.center, "center", d)?;
            Ok(ScalarField::from_fn(grid, |x| w * w * x.iter().zip(&c).map(|(t, c)| (t - c) * (t - c)).sum::<f64>()))
        }
        "gaussian_well" => {
            spec.allow(&["depth", "width", "center"])?;
            let depth = spec.positive("depth", spec.depth, None)?;
            let width = spec.positive("width", spec.width, Some(1.0))?;
            let c = spec.point(&spec.center, "center", d)?;
            Ok(ScalarField::from_fn(grid, |x| {
                let r2: f64 = x.iter().zip(&c).map(|(t, c)| (t - c) * (t - c)).sum();
                -depth * (-r2 / (2.0 * width * width)).exp()
            }))
        }
        "random" => {
            spec.allow(&["amplitude"])?;
            let amp = spec.positive("amplitude", spec.amplitude, Some(1.0))?;
            Ok(random_profile(grid, amp, &mut ChaCha8Rng::seed_from_u64(seed)))
        }
        "gaussian" => {
            spec.allow(&["sigma", "center"])?;
            let s = spec.positive("sigma", spec.sigma, Some(1.0))?;
            let c = spec.point(&spec.center, "center", d)?;
            let raw = ScalarField::from_fn(grid, |x| {
                (-x.iter().zip(&c).map(|(t, c)| (t - c) * (t - c)).sum::<f64>() / (2.0 * s * s)).exp()
            });
            let total: f64 = raw.values().iter().sum::<f64>() * grid.cell_volume();
            Ok(raw.scale(n as f64 / total))
        }
        "englisch" => {
            spec.allow(&["a", "b", "eps"])?;
            let (a, b, eps) = match (spec.a, spec.b, spec.eps) {
                (Some(a), Some(b), Some(e)) => (a, b, e),
                _ => return Err(CdftError::BadParameters("englisch: needs a, b and eps".into())),
            };
            let rho = englisch_density(&CounterexampleSpec::new(a, b, eps), grid)?;
            Ok(rho.scale(n as f64))
        }
        "custom" => {
            spec.allow(&["path"])?;
            load_scalar_field(grid, spec.path()?)
        }
        other => Err(CdftError::UnknownFamily(other.into())),
    }
}

/// Vector families: `zero`, `constant_a` (`value`), `linear_a`
/// (`A(x) = matrix x + value`), `random`, and `custom` CSV.
pub fn generate_vector(spec: &FieldSpec, grid: &Grid<f64>, seed: u64) -> Result<VectorField<f64>> {
    let d = grid.dim();
    match spec.family.as_str() {
        "zero" => {
            spec.allow(&[])?;
            Ok(VectorField::zeros(grid))
        }
        "constant_a" => {
            spec.allow(&["value"])?;
            let c = spec.point(&spec.value, "value", d)?;
            Ok(VectorField::from_fn(grid, |_| c.clone()))
        }
        "linear_a" => {
            spec.allow(&["matrix", "value"])?;
            let c = spec.point(&spec.value, "value", d)?;
            let m = spec.matrix.clone().ok_or_else(|| CdftError::BadParameters("linear_a: missing matrix".into()))?;
            if m.len() != d || m.iter().any(|r| r.len() != d) {
                return Err(CdftError::BadParameters(format!("linear_a: matrix must be {d}x{d}")));
            }
            Ok(VectorField::from_fn(grid, |x| {
                (0..d).map(|l| c[l] + m[l].iter().zip(x).map(|(a, t)| a * t).sum::<f64>()).collect()
            }))
        }
        "random" => {
            spec.allow(&["amplitude"])?;
            let amp = spec.positive("amplitude", spec.amplitude, Some(1.0))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let comps: Vec<_> = (0..d).map(|_| random_profile(grid, amp, &mut rng)).collect();
            VectorField::from_components(&comps)
        }
        "custom" => {
            spec.allow(&["path"])?;
            load_vector_field(grid, spec.path()?)
        }
        other => Err(CdftError::UnknownFamily(other.into())),
    }
}
