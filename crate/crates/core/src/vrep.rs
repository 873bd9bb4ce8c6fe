//! One-electron v-representability: density inversion, the sufficient
//! conditions for ground-state status, and a density whose potential is not
//! integrable against it.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CdftError, Result};
use crate::lattice::{integrate, laplacian_values, Boundary, Grid, ScalarField};
use crate::manybody::{ground_state, HamiltonianKind, Potentials};
use crate::pair::DEFAULT_FLOOR;
use crate::scalar::Real;

/// Required `|int rho - 1|`.
pub const NORM_TOL: f64 = 1e-8;
/// Required `|<psi_0, sqrt(rho)>|` for ground-state confirmation.
pub const OVERLAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct VrepReport<T: Real> {
    /// Discrete `Delta sqrt(rho)`.
    pub phi0: ScalarField<T>,
    pub e: T,
    pub v: ScalarField<T>,
    /// `C = max phi0 / sqrt(rho)`.
    pub ratio_bound: T,
    pub lap_l2: T,
    /// `sum 1/rho h^d` over the box.
    pub inv_loc_integrable: T,
    pub positivity_ok: bool,
    pub eigen_residual: T,
    pub ground_state_confirmed: bool,
    /// `|<psi_0, sqrt(rho)>|`, when the eigensolver was run.
    pub overlap: Option<T>,
    pub verdict: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VrepSummary {
    pub e: f64,
    pub ratio_bound: f64,
    pub lap_l2: f64,
    pub inv_loc_integrable: f64,
    pub positivity_ok: bool,
    pub eigen_residual: f64,
    pub ground_state_confirmed: bool,
    pub overlap: Option<f64>,
    pub verdict: Option<bool>,
}

impl<T: Real> VrepReport<T> {
    pub fn summary(&self) -> VrepSummary {
        VrepSummary {
            e: self.e.as_f64(),
            ratio_bound: self.ratio_bound.as_f64(),
            lap_l2: self.lap_l2.as_f64(),
            inv_loc_integrable: self.inv_loc_integrable.as_f64(),
            positivity_ok: self.positivity_ok,
            eigen_residual: self.eigen_residual.as_f64(),
            ground_state_confirmed: self.ground_state_confirmed,
            overlap: self.overlap.map(|o| o.as_f64()),
            verdict: self.verdict,
        }
    }
}

fn check_density<T: Real>(rho: &ScalarField<T>, floor: f64) -> Result<()> {
    let min = rho.min().as_f64();
    if !(min > floor) {
        return Err(CdftError::DensityVanishes { min, floor });
    }
    let total = integrate(rho).as_f64();
    if !((total - 1.0).abs() <= NORM_TOL) {
        return Err(CdftError::NotNormalized { total, expected: 1.0 });
    }
    Ok(())
}

/// `v = Delta sqrt(rho) / sqrt(rho) + e`, so that `(-Delta + v) sqrt(rho) = e sqrt(rho)`.
pub fn invert_potential<T: Real>(rho: &ScalarField<T>, e: T) -> Result<VrepReport<T>> {
    invert_potential_with(rho, e, DEFAULT_FLOOR)
}

pub fn invert_potential_with<T: Real>(rho: &ScalarField<T>, e: T, floor: f64) -> Result<VrepReport<T>> {
    check_density(rho, floor)?;
    let g = rho.grid();
    let hd = g.cell_volume();
    let s: Vec<T> = rho.values().iter().map(|r| r.sqrt()).collect();
    let lap = laplacian_values(g, &s);
    let ratio: Vec<T> = lap.iter().zip(&s).map(|(&l, &q)| l / q).collect();
    let v: Vec<T> = ratio.iter().map(|&r| r + e).collect();
    let c = ratio.iter().fold(T::min_value().unwrap(), |a, &b| a.max(b));
    let lap_l2 = (lap.iter().fold(T::zero(), |a, &l| a + l * l) * hd).sqrt();
    let inv = rho.values().iter().fold(T::zero(), |a, &r| a + T::one() / r) * hd;
    // (-Delta + v) s - e s
    let res = (0..g.len()).fold(T::zero(), |a, p| {
        let r = -lap[p] + v[p] * s[p] - e * s[p];
        a + r * r
    });
    Ok(VrepReport {
        phi0: ScalarField::new(g.clone(), lap)?,
        e,
        v: ScalarField::new(g.clone(), v)?,
        ratio_bound: c,
        lap_l2,
        inv_loc_integrable: inv,
        positivity_ok: true,
        eigen_residual: (res * hd).sqrt(),
        ground_state_confirmed: false,
        overlap: None,
        verdict: None,
    })
}

/// Inverts with `e` chosen so that `min v = 0`, then confirms that `sqrt(rho)`
/// is the ground state of `-Delta + v`.
pub fn vrep_check<T: Real>(rho: &ScalarField<T>) -> Result<VrepReport<T>> {
    vrep_check_with(rho, DEFAULT_FLOOR)
}

pub fn vrep_check_with<T: Real>(rho: &ScalarField<T>, floor: f64) -> Result<VrepReport<T>> {
    let base = invert_potential_with(rho, T::zero(), floor)?;
    let e = -base.v.min();
    let mut report = invert_potential_with(rho, e, floor)?;
    let gs = ground_state(&Potentials::scalar(report.v.clone()), 1, HamiltonianKind::Full, T::lit(1e-10))?;
    gs.require_nondegenerate()?;
    let hd = rho.grid().cell_volume();
    let ov = gs
        .ground_state
        .amplitudes()
        .iter()
        .zip(rho.values())
        .fold(crate::scalar::czero::<T>(), |a, (z, &r)| a + z.conj() * r.sqrt())
        * hd;
    let ov = crate::scalar::cabs(ov);
    report.ground_state_confirmed = ov >= T::one() - T::lit(OVERLAP_TOL);
    report.overlap = Some(ov);
    let finite = [report.ratio_bound, report.lap_l2, report.inv_loc_integrable].iter().all(|x| x.as_f64().is_finite());
    report.verdict = Some(report.positivity_ok && finite && report.ground_state_confirmed);
    Ok(report)
}

/// Profile `(a + b |x_1|^{eps + 1/2})^2` near the hyperplane `x_1 = 0`.
#[derive(Debug, Clone)]
pub struct CounterexampleSpec<T: Real> {
    pub a: T,
    pub b: T,
    pub eps: T,
    /// Factor in the remaining coordinates (same grid); a normalized
    /// Gaussian `exp(-|x_perp|^2)` when absent.
    pub transverse: Option<ScalarField<T>>,
    /// `|x_1|` beyond which the profile is continued by a Gaussian tail.
    pub cutoff: T,
    /// Width parameter of the tail `A exp(-beta (|x_1| - x_0)^2)`.
    pub tail_beta: T,
    /// Half-width of the box used by [`refinement_scan`].
    pub half_width: T,
}

impl<T: Real> CounterexampleSpec<T> {
    pub fn new(a: T, b: T, eps: T) -> Self {
        let half_width = T::lit(8.0);
        Self { a, b, eps, transverse: None, cutoff: half_width * T::lit(0.25), tail_beta: T::lit(0.5), half_width }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.eps.as_f64();
        if !(eps > 0.0 && eps < 0.5) {
            return Err(CdftError::BadEpsilon(eps));
        }
        if self.a == T::zero() || self.b == T::zero() || (self.a > T::zero()) != (self.b > T::zero()) {
            return Err(CdftError::InvalidArgument("a and b must be nonzero with the same sign".into()));
        }
        if !(self.cutoff > T::zero()) || !(self.tail_beta > T::zero()) || !(self.half_width > T::zero()) {
            return Err(CdftError::InvalidArgument("cutoff, tail width and half-width must be positive".into()));
        }
        Ok(())
    }

    /// Unnormalized `sqrt(rho_1)` along `x_1`, C^1 across the cutoff.
    pub fn amplitude(&self, x1: T) -> T {
        let alpha = self.eps + T::lit(0.5);
        let (a, b) = (self.a.abs(), self.b.abs());
        let ax = x1.abs();
        let c = self.cutoff;
        if ax <= c {
            return a + b * ax.powf(alpha);
        }
        let pc = a + b * c.powf(alpha);
        let dpc = b * alpha * c.powf(alpha - T::one());
        let beta = self.tail_beta;
        let x0 = c + dpc / (T::lit(2.0) * beta * pc);
        let amp = pc * (beta * (c - x0) * (c - x0)).exp();
        amp * (-beta * (ax - x0) * (ax - x0)).exp()
    }
}

/// The counterexample density on `grid`, normalized to one.
pub fn englisch_density<T: Real>(spec: &CounterexampleSpec<T>, grid: &Grid<T>) -> Result<ScalarField<T>> {
    spec.validate()?;
    if let Some(t) = &spec.transverse {
        grid.same_as(t.grid())?;
    }
    let d = grid.dim();
    let vals = (0..grid.len())
        .map(|p| {
            let s = spec.amplitude(grid.coord(p, 0));
            let perp = match &spec.transverse {
                Some(t) => t.values()[p],
                None => (1..d).fold(T::one(), |acc, k| {
                    let x = grid.coord(p, k);
                    acc * (-x * x).exp()
                }),
            };
            s * s * perp
        })
        .collect();
    let rho = ScalarField::new(grid.clone(), vals)?;
    let total = integrate(&rho);
    Ok(rho.scale(T::one() / total))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub h: f64,
    pub lap_l2_sq: f64,
    /// `sum v rho h` with `e = 0`, over points whose stencil does not straddle `x_1 = 0`.
    pub coupling: f64,
    /// `log2` growth of `lap_l2_sq` against the previous row; NaN on the first.
    pub slope_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// `lap_l2_sq` strictly increasing along the sequence.
    pub lap_growing: bool,
    /// `coupling` strictly decreasing along the sequence.
    pub coupling_decreasing: bool,
}

impl ScanTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,lap_l2_sq,coupling,slope_estimate\n");
        for r in &self.rows {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", r.h, r.lap_l2_sq, r.coupling, r.slope_estimate));
        }
        out
    }
}

/// Refines the 1D counterexample along `hs` on a cell-centred box.
pub fn refinement_scan<T: Real>(spec: &CounterexampleSpec<T>, hs: &[T]) -> Result<ScanTable> {
    spec.validate()?;
    let hw = spec.half_width;
    scan_density(hs, |h| {
        let g = Grid::cell_centered(&[-hw], &[hw], h, Boundary::Dirichlet)?;
        englisch_density(spec, &g)
    })
}

/// Same scan for any one-dimensional density family `h -> rho_h`.
pub fn scan_density<T: Real>(hs: &[T], density: impl Fn(T) -> Result<ScalarField<T>> + Sync) -> Result<ScanTable> {
    if hs.len() < 4 || hs.windows(2).any(|w| !(w[1] < w[0])) || !(hs[hs.len() - 1] > T::zero()) {
        return Err(CdftError::InvalidArgument("need at least 4 strictly decreasing positive spacings".into()));
    }
    let raw: Vec<(f64, f64, f64)> = hs
        .par_iter()
        .map(|&h| {
            let rho = density(h)?;
            let g = rho.grid();
            if g.dim() != 1 {
                return Err(CdftError::DimensionUnsupported(g.dim()));
            }
            let s: Vec<T> = rho.values().iter().map(|r| r.max(T::zero()).sqrt()).collect();
            let lap = laplacian_values(g, &s);
            let hh = g.spacing()[0];
            let l2 = lap.iter().fold(T::zero(), |a, &l| a + l * l) * hh;
            let reach = hh * T::lit(1.01);
            let coupling = (0..g.len())
                .filter(|&p| g.coord(p, 0).abs() > reach)
                .fold(T::zero(), |a, p| a + lap[p] * s[p])
                * hh;
            Ok((h.as_f64(), l2.as_f64(), coupling.as_f64()))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ScanRow> = raw
        .iter()
        .enumerate()
        .map(|(i, &(h, l2, c))| ScanRow {
            h,
            lap_l2_sq: l2,
            coupling: c,
            slope_estimate: if i == 0 { f64::NAN } else { (l2 / raw[i - 1].1).log2() / (raw[i - 1].0 / h).log2() },
        })
        .collect();
    let lap_growing = rows.windows(2).all(|w| w[1].lap_l2_sq > w[0].lap_l2_sq);
    let coupling_decreasing = rows.windows(2).all(|w| w[1].coupling < w[0].coupling);
    Ok(ScanTable { rows, lap_growing, coupling_decreasing })
}
