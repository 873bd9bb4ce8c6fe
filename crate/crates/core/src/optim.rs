//! L-BFGS on the complex Stiefel manifold `{X in C^{n x p} : X^H X = I}`.
//!
//! Objectives here are invariant under `X -> X U` for unitary `U` (a global
//! phase for one column, an orbital rotation for several), so the search runs
//! on the Grassmannian: gradients are projected with `G - X X^H G` and steps
//! are retracted with the polar (Loewdin) factor. Old curvature pairs are
//! transported by re-projection.

use nalgebra::DMatrix;
use std::collections::VecDeque;

use crate::error::{CdftError, Result};
use crate::scalar::{czero, Complex, Real};

/// Column-major `rows x cols` block of column vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T: Real> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Real> Frame<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn col(&self, k: usize) -> &[Complex<T>] {
        &self.data[k * self.rows..(k + 1) * self.rows]
    }

    /// `Re tr(A^H B)`.
    pub fn inner(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |s, (a, b)| s + (a.conj() * b).re)
    }

    pub fn norm(&self) -> T {
        self.inner(self).sqrt()
    }

    pub fn axpy(&self, alpha: T, other: &Self) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a + *b * alpha).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| *a * alpha).collect() }
    }

    /// `X^H Y` (cols x cols).
    fn gram_with(&self, other: &Self) -> DMatrix<Complex<T>> {
        DMatrix::from_fn(self.cols, other.cols, |k, l| {
            self.col(k).iter().zip(other.col(l)).fold(czero::<T>(), |s, (a, b)| s + a.conj() * b)
        })
    }

    /// `X C` for a cols x q coefficient matrix.
    fn times(&self, c: &DMatrix<Complex<T>>) -> Self {
        let q = c.ncols();
        let mut data = vec![czero::<T>(); self.rows * q];
        for l in 0..q {
            for k in 0..self.cols {
                let coef = c[(k, l)];
                for (o, x) in data[l * self.rows..(l + 1) * self.rows].iter_mut().zip(self.col(k)) {
                    *o += *x * coef;
                }
            }
        }
        Self { rows: self.rows, cols: q, data }
    }

    /// Tangent projection at `self` (assumed orthonormal): `G - X X^H G`.
    pub fn project(&self, g: &Self) -> Self {
        let c = self.gram_with(g);
        let xc = self.times(&c);
        g.axpy(-T::one(), &xc)
    }

    /// Polar factor `Y (Y^H Y)^{-1/2}`.
    pub fn orthonormalized(&self) -> Result<Self> {
        let g = self.gram_with(self);
        let eig = g.symmetric_eigen();
        let max = eig.eigenvalues.iter().fold(T::zero(), |a, &b| a.max(b));
        let min = eig.eigenvalues.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b));
        if !(min > max * T::lit(1e-14)) || !(max > T::zero()) {
            return Err(CdftError::NotOrthonormalizable("rank-deficient frame".into()));
        }
        let u = &eig.eigenvectors;
        let p = self.cols;
        let m = DMatrix::from_fn(p, p, |k, l| {
            (0..p).fold(czero::<T>(), |s, q| s + u[(k, q)] * u[(l, q)].conj() / eig.eigenvalues[q].sqrt())
        });
        Ok(self.times(&m))
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOptions<T> {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient norm is at most this.
    pub grad_tol: T,
    pub armijo: T,
    pub max_backtracks: usize,
}

impl<T: Real> Default for LbfgsOptions<T> {
    fn default() -> Self {
        Self { memory: 10, max_iter: 3000, grad_tol: T::lit(1e-9), armijo: T::lit(1e-4), max_backtracks: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome<T: Real> {
    pub x: Frame<T>,
    pub value: T,
    pub grad_norm: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` (returning value and Euclidean gradient with respect to the
/// real and imaginary parts, packed as complex) from the orthonormal `x0`.
pub fn minimize<T: Real>(
    f: &mut dyn FnMut(&Frame<T>) -> (T, Frame<T>),
    x0: Frame<T>,
    opts: &LbfgsOptions<T>,
) -> LbfgsOutcome<T> {
    let mut x = x0;
    let (mut fx, g_e) = f(&x);
    let mut g = x.project(&g_e);
    let mut hist: VecDeque<(Frame<T>, Frame<T>, T)> = VecDeque::new();
    let mut iterations = 0;
    let mut stall = 0;
    loop {
        let gn = g.norm();
        if gn <= opts.grad_tol {
            return LbfgsOutcome { x, value: fx, grad_norm: gn, iterations, converged: true };
        }
        if iterations >= opts.max_iter || stall >= 5 {
            return LbfgsOutcome { x, value: fx, grad_norm: gn, iterations, converged: false };
        }
        iterations += 1;

        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = *rho * s.inner(&q);
            q = q.axpy(-a, y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = s.inner(y) / y.inner(y);
            q = q.scaled(gamma);
        } else {
            q = q.scaled(T::one() / gn.max(T::one()));
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = *rho * y.inner(&q);
            q = q.axpy(a - b, s);
        }
        let mut d = x.project(&q).scaled(-T::one());
        let mut slope = g.inner(&d);
        if !(slope < T::zero()) {
            hist.clear();
            d = g.scaled(-T::one() / gn.max(T::one()));
            slope = g.inner(&d);
        }

        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            if let Ok(xn) = x.axpy(alpha, &d).orthonormalized() {
                let (fn_, gn_e) = f(&xn);
                let noise = T::epsilon() * T::lit(16.0) * fx.abs().max(T::one());
                // at roundoff level fall back to gradient decrease
                if fn_ <= fx + opts.armijo * alpha * slope
                    || (fn_ <= fx + noise && xn.project(&gn_e).norm() < gn)
                {
                    accepted = Some((xn, fn_, gn_e));
                    break;
                }
            }
            alpha *= T::lit(0.5);
        }
        let Some((xn, fn_, gn_e)) = accepted else {
            // no decrease along the best direction: restart from steepest descent once
            if hist.is_empty() {
                return LbfgsOutcome { x, value: fx, grad_norm: gn, iterations, converged: false };
            }
            hist.clear();
            stall += 1;
            continue;
        };
        let g_new = xn.project(&gn_e);
        let s = xn.project(&d.scaled(alpha));
        let y = g_new.axpy(-T::one(), &xn.project(&g));
        let sy = s.inner(&y);
        if sy > T::epsilon() * s.norm() * y.norm() {
            hist.push_back((s, y, T::one() / sy));
            if hist.len() > opts.memory {
                hist.pop_front();
            }
        }
        let transported: VecDeque<_> =
            hist.into_iter().map(|(s, y, r)| (xn.project(&s), xn.project(&y), r)).collect();
        hist = transported;
        let noise = T::epsilon() * T::lit(16.0) * fx.abs().max(T::one());
        if fn_ > fx - noise && g_new.norm() >= gn {
            stall += 1;
        } else {
            stall = 0;
        }
        x = xn;
        fx = fn_;
        g = g_new;
    }
}
