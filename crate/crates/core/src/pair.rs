//! The density pair `(rho, j^p)` and the diagnostics every consumer reports.

use serde::Serialize;

use crate::error::Result;
use crate::lattice::{curl, integrate, Grid, ScalarField, VectorField};
use crate::scalar::Real;

/// Density floor below which `j/rho` is not formed.
pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairDiagnostics {
    pub min_rho: f64,
    pub total: f64,
    /// `||sqrt(rho)||_{H^1}`.
    pub h1_of_sqrt_rho: f64,
    pub jp_l1: f64,
    /// `sum |j|^2 / rho h^d`; lower bound for the kinetic energy of any preimage.
    pub kinetic_bound: f64,
    /// Max `|curl(j/rho)|` over points with rho above the floor; 0 in 1D.
    pub curl_of_velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityPair<T: Real> {
    pub rho: ScalarField<T>,
    pub jp: VectorField<T>,
    pub n_particles: usize,
    pub diagnostics: PairDiagnostics,
}

/// Velocity `j/rho`, zero where rho is at or below `floor`.
pub fn velocity<T: Real>(rho: &ScalarField<T>, jp: &VectorField<T>, floor: T) -> VectorField<T> {
    let d = rho.grid().dim();
    let mut u = jp.clone();
    for (k, val) in u.values_mut().iter_mut().enumerate() {
        let r = rho.values()[k / d];
        *val = if r > floor { *val / r } else { T::zero() };
    }
    u
}

/// `sum |j|^2 / rho h^d` (infinite if current flows where rho vanishes).
pub fn kinetic_bound<T: Real>(rho: &ScalarField<T>, jp: &VectorField<T>) -> T {
    let j2 = jp.magnitude_sq();
    let mut s = T::zero();
    for (&r, &q) in rho.values().iter().zip(j2.values()) {
        if q > T::zero() {
            if r > T::zero() {
                s += q / r;
            } else {
                return T::max_value().unwrap();
            }
        }
    }
    s * rho.grid().cell_volume()
}

pub fn curl_of_velocity<T: Real>(rho: &ScalarField<T>, jp: &VectorField<T>, floor: T) -> T {
    if rho.grid().dim() == 1 {
        return T::zero();
    }
    let u = velocity(rho, jp, floor);
    let c = curl(&u).expect("d >= 2");
    c.max_abs_where(|p| rho.values()[p] > floor)
}

impl<T: Real> DensityPair<T> {
    pub fn new(rho: ScalarField<T>, jp: VectorField<T>, n_particles: usize) -> Result<Self> {
        rho.grid().same_as(jp.grid())?;
        let diagnostics = Self::diagnose(&rho, &jp);
        Ok(Self { rho, jp, n_particles, diagnostics })
    }

    fn diagnose(rho: &ScalarField<T>, jp: &VectorField<T>) -> PairDiagnostics {
        let sqrt_rho = rho.map(|r| r.max(T::zero()).sqrt());
        let w = rho.grid().cell_volume();
        let jp_l1 = jp.magnitude_sq().values().iter().fold(T::zero(), |s, &q| s + q.sqrt()) * w;
        PairDiagnostics {
            min_rho: rho.min().as_f64(),
            total: integrate(rho).as_f64(),
            h1_of_sqrt_rho: sqrt_rho.norms().h1.as_f64(),
            jp_l1: jp_l1.as_f64(),
            kinetic_bound: kinetic_bound(rho, jp).as_f64(),
            curl_of_velocity: curl_of_velocity(rho, jp, T::lit(DEFAULT_FLOOR)).as_f64(),
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        self.rho.grid()
    }

    /// `(||rho - other.rho||_1, ||j - other.j||_1)`, Euclidean pointwise norm for j.
    pub fn l1_distance(&self, other: &Self) -> Result<(T, T)> {
        self.grid().same_as(other.grid())?;
        let w = self.grid().cell_volume();
        let dr = self
            .rho
            .values()
            .iter()
            .zip(other.rho.values())
            .fold(T::zero(), |s, (&a, &b)| s + (a - b).abs())
            * w;
        let d = self.grid().dim();
        let dj = self
            .jp
            .values()
            .chunks(d)
            .zip(other.jp.values().chunks(d))
            .fold(T::zero(), |s, (a, b)| {
                s + a.iter().zip(b).fold(T::zero(), |q, (&x, &y)| q + (x - y) * (x - y)).sqrt()
            })
            * w;
        Ok((dr, dj))
    }
}
