use crate::error::{CdftError, Result};
use crate::lattice::{ScalarField, VectorField};
use crate::pair::DensityPair;
use crate::scalar::Real;

/// Tolerance on `|int rho - N|`.
pub const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct YnOptions {
    pub norm_tol: f64,
    /// Warn when `int |j|^2/rho` exceeds this.
    pub kinetic_warn: f64,
}

impl Default for YnOptions {
    fn default() -> Self {
        Self { norm_tol: NORMALIZATION_TOL, kinetic_warn: f64::INFINITY }
    }
}

#[derive(Debug, Clone)]
pub struct YnReport<T: Real> {
    pub pair: DensityPair<T>,
    pub warnings: Vec<String>,
}

/// Accepts `(rho, j)` as an N-representable pair: `rho >= 0` and `int rho = N`.
pub fn yn_check<T: Real>(rho: ScalarField<T>, jp: VectorField<T>, n: usize) -> Result<DensityPair<T>> {
    yn_check_with(rho, jp, n, &YnOptions::default()).map(|r| r.pair)
}

pub fn yn_check_with<T: Real>(rho: ScalarField<T>, jp: VectorField<T>, n: usize, opts: &YnOptions) -> Result<YnReport<T>> {
    if n == 0 {
        return Err(CdftError::InvalidArgument("N must be positive".into()));
    }
    if let Some((index, &value)) = rho.values().iter().enumerate().find(|(_, &r)| !(r >= T::zero())) {
        return Err(CdftError::NegativeDensity { index, value: value.as_f64() });
    }
    let pair = DensityPair::new(rho, jp, n)?;
    validate_pair(&pair, opts.norm_tol)?;
    let mut warnings = Vec::new();
    let kb = pair.diagnostics.kinetic_bound;
    if kb > opts.kinetic_warn {
        warnings.push(format!("kinetic bound {kb:.6e} exceeds warn threshold {:.6e}", opts.kinetic_warn));
    }
    Ok(YnReport { pair, warnings })
}

/// Re-checks an already assembled pair.
pub fn validate_pair<T: Real>(pair: &DensityPair<T>, norm_tol: f64) -> Result<()> {
    if let Some((index, &value)) = pair.rho.values().iter().enumerate().find(|(_, &r)| !(r >= T::zero())) {
        return Err(CdftError::NegativeDensity { index, value: value.as_f64() });
    }
    let total = pair.diagnostics.total;
    let expected = pair.n_particles as f64;
    if !((total - expected).abs() <= norm_tol) {
        return Err(CdftError::WrongNormalization { total, expected });
    }
    Ok(())
}
