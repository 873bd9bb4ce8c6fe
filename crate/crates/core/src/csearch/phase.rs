//! Phase reconstruction `grad theta = j/rho` and the N = 1 closed form.

use std::f64::consts::PI;

use crate::error::{CdftError, Result};
use crate::lattice::{laplacian_values, Boundary, Grid, ScalarField};
use crate::pair::{velocity, DensityPair, DEFAULT_FLOOR};
use crate::scalar::Real;

/// Default bound on `|curl(j/rho)|` for pairs treated as curl free.
pub const CURL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct PhaseOptions {
    pub floor: f64,
    pub curl_tol: f64,
    /// Allowed distance of a circulation from a multiple of `2 pi`, in turns.
    pub winding_tol: f64,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self { floor: DEFAULT_FLOOR, curl_tol: CURL_TOL, winding_tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseSolution<T: Real> {
    /// Lifted (not wrapped) phase with `theta(origin) = 0`.
    pub theta: ScalarField<T>,
    /// `||G theta - j/rho||_2` with the stencil gradient `G`.
    pub residual: T,
    /// Winding numbers per axis; empty unless periodic.
    pub windings: Vec<i64>,
}

/// Gradient stencil used for the least-squares fit: central, one-sided at
/// Dirichlet edges, wrapped on periodic axes. Rows are `point * d + axis`.
fn gradient_stencil<T: Real>(grid: &Grid<T>) -> Vec<(usize, usize, T)> {
    let d = grid.dim();
    let mut out = Vec::with_capacity(grid.len() * d * 2);
    for p in 0..grid.len() {
        for axis in 0..d {
            let h = grid.spacing()[axis];
            let row = p * d + axis;
            match (grid.neighbor(p, axis, false), grid.neighbor(p, axis, true)) {
                (Some(b), Some(f)) => {
                    let c = T::one() / (T::lit(2.0) * h);
                    out.push((row, f, c));
                    out.push((row, b, -c));
                }
                (None, Some(f)) => {
                    out.push((row, f, T::one() / h));
                    out.push((row, p, -T::one() / h));
                }
                (Some(b), None) => {
                    out.push((row, p, T::one() / h));
                    out.push((row, b, -T::one() / h));
                }
                (None, None) => {}
            }
        }
    }
    out
}

fn apply_g<T: Real>(st: &[(usize, usize, T)], x: &[T], rows: usize) -> Vec<T> {
    let mut y = vec![T::zero(); rows];
    for &(r, c, w) in st {
        y[r] += w * x[c];
    }
    y
}

fn apply_gt<T: Real>(st: &[(usize, usize, T)], y: &[T], cols: usize) -> Vec<T> {
    let mut x = vec![T::zero(); cols];
    for &(r, c, w) in st {
        x[c] += w * y[r];
    }
    x
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// Conjugate gradients on `G^T G x = G^T u`, started from zero.
fn least_squares<T: Real>(st: &[(usize, usize, T)], u: &[T], cols: usize) -> Vec<T> {
    let rows = u.len();
    let b = apply_gt(st, u, cols);
    let mut x = vec![T::zero(); cols];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = dot(&b, &b) * T::lit(1e-28).max(T::epsilon() * T::epsilon() * T::lit(100.0));
    for _ in 0..(10 * cols + 100) {
        if rr <= stop {
            break;
        }
        let ap = apply_gt(st, &apply_g(st, &p, rows), cols);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rr / pap;
        for k in 0..cols {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..cols {
            p[k] = r[k] + beta * p[k];
        }
    }
    x
}

fn check_curl<T: Real>(pair: &DensityPair<T>, tol: f64) -> Result<()> {
    let curl = pair.diagnostics.curl_of_velocity;
    if pair.grid().dim() >= 2 && !(curl <= tol) {
        return Err(CdftError::NotCurlFree { curl });
    }
    Ok(())
}

pub fn phase_from_current<T: Real>(pair: &DensityPair<T>) -> Result<PhaseSolution<T>> {
    phase_from_current_with(pair, &PhaseOptions::default())
}

pub fn phase_from_current_with<T: Real>(pair: &DensityPair<T>, opts: &PhaseOptions) -> Result<PhaseSolution<T>> {
    let grid = pair.grid();
    let (m, d) = (grid.len(), grid.dim());
    let min = pair.rho.min();
    if !(min.as_f64() > opts.floor) {
        return Err(CdftError::DensityVanishes { min: min.as_f64(), floor: opts.floor });
    }
    check_curl(pair, opts.curl_tol)?;
    let mut u = velocity(&pair.rho, &pair.jp, T::lit(opts.floor)).values().to_vec();

    // strip the winding part c.x on periodic axes
    let mut slope = vec![T::zero(); d];
    let mut windings = Vec::new();
    if grid.boundary() == Boundary::Periodic {
        for axis in 0..d {
            let h = grid.spacing()[axis];
            let n_axis = grid.shape()[axis];
            let lines: Vec<usize> = (0..m).filter(|&p| grid.axis_index(p, axis) == 0).collect();
            let turns: Vec<f64> = lines
                .iter()
                .map(|&start| {
                    let mut p = start;
                    let mut s = T::zero();
                    for _ in 0..n_axis {
                        s += u[p * d + axis] * h;
                        p = grid.neighbor(p, axis, true).expect("periodic");
                    }
                    s.as_f64() / (2.0 * PI)
                })
                .collect();
            let mean = turns.iter().sum::<f64>() / turns.len() as f64;
            let w = mean.round();
            if let Some(&bad) = turns.iter().find(|&&t| !((t - w).abs() <= opts.winding_tol)) {
                return Err(CdftError::IncompatibleCirculation { axis, winding: bad });
            }
            windings.push(w as i64);
            slope[axis] = T::lit(2.0 * PI * w) / grid.extent(axis);
        }
        for p in 0..m {
            for axis in 0..d {
                u[p * d + axis] -= slope[axis];
            }
        }
    }

    let st = gradient_stencil(grid);
    let theta = least_squares(&st, &u, m);
    let g = apply_g(&st, &theta, m * d);
    let residual = (g.iter().zip(&u).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b)) * grid.cell_volume()).sqrt();

    let x0 = grid.coords(0);
    let t0 = theta[0];
    let vals = (0..m)
        .map(|p| {
            let lin = (0..d).fold(T::zero(), |s, a| s + slope[a] * (grid.coord(p, a) - x0[a]));
            theta[p] - t0 + lin
        })
        .collect();
    Ok(PhaseSolution { theta: ScalarField::new(grid.clone(), vals)?, residual, windings })
}

/// `<sqrt(rho), -Delta sqrt(rho)> + sum |j|^2/rho h^d` for one particle.
pub fn n1_closed_form<T: Real>(pair: &DensityPair<T>) -> Result<T> {
    n1_closed_form_with(pair, CURL_TOL)
}

pub fn n1_closed_form_with<T: Real>(pair: &DensityPair<T>, curl_tol: f64) -> Result<T> {
    if pair.n_particles != 1 {
        return Err(CdftError::InvalidArgument(format!("closed form needs N = 1, got {}", pair.n_particles)));
    }
    check_curl(pair, curl_tol)?;
    let grid = pair.grid();
    let s: Vec<T> = pair.rho.values().iter().map(|&r| r.max(T::zero()).sqrt()).collect();
    let lap = laplacian_values(grid, &s);
    let vw = s.iter().zip(&lap).fold(T::zero(), |acc, (&a, &l)| acc - a * l) * grid.cell_volume();
    Ok(vw + crate::pair::kinetic_bound(&pair.rho, &pair.jp))
}
