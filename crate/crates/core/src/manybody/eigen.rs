//! Lowest eigenpairs of Hermitian operators given only as `x -> A x`.
//!
//! Small problems are assembled and diagonalized densely. Large ones use a
//! block-2 restarted Krylov iteration: the search space grows by the residuals
//! of the two lowest Ritz pairs, is re-orthogonalized with DGKS
//! Gram-Schmidt, and is thick-restarted onto the leading Ritz vectors.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CdftError, Result};
use crate::scalar::{czero, Complex, Real};

/// Hermitian operator on `C^dim` with the Euclidean inner product.
pub trait LinearMap<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]);
}

impl<T: Real, F: Fn(&[Complex<T>], &mut [Complex<T>]) + Sync> LinearMap<T> for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        (self.1)(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverInfo {
    pub kind: SolverKind,
    pub iterations: usize,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Largest dimension solved densely.
    pub dense_max: usize,
    pub max_basis: usize,
    pub keep: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { dense_max: 2000, max_basis: 48, keep: 8, max_iter: 20_000, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs<T: Real> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<Complex<T>>>,
    pub residuals: Vec<T>,
    pub info: SolverInfo,
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    let mut s = czero::<T>();
    for (x, y) in a.iter().zip(b) {
        s += x.conj() * y;
    }
    s
}

fn norm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
}

fn residual_norm<T: Real>(op: &dyn LinearMap<T>, v: &[Complex<T>], e: T) -> T {
    let mut hv = vec![czero(); v.len()];
    op.apply(v, &mut hv);
    let r: Vec<_> = hv.iter().zip(v).map(|(a, b)| *a - *b * e).collect();
    norm(&r)
}

/// Hermitian eigen-decomposition, ascending; uses the real solver when the
/// matrix has no imaginary part.
pub fn hermitian_eigen<T: Real>(h: &DMatrix<Complex<T>>) -> (Vec<T>, DMatrix<Complex<T>>) {
    let n = h.nrows();
    let (vals, vecs): (Vec<T>, DMatrix<Complex<T>>) = if h.iter().all(|z| z.im == T::zero()) {
        let re = h.map(|z| z.re);
        let e = re.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|x| Complex::new(x, T::zero())))
    } else {
        let e = h.clone().symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = DMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    (sorted_vals, sorted_vecs)
}

/// Lowest `k` eigenpairs by assembling the full matrix.
pub fn lowest_dense<T: Real>(op: &dyn LinearMap<T>, k: usize) -> EigenPairs<T> {
    let n = op.dim();
    let mut h = DMatrix::from_element(n, n, czero::<T>());
    let mut e = vec![czero::<T>(); n];
    let mut col = vec![czero::<T>(); n];
    for j in 0..n {
        e[j] = Complex::new(T::one(), T::zero());
        op.apply(&e, &mut col);
        for i in 0..n {
            h[(i, j)] = col[i];
        }
        e[j] = czero();
    }
    // symmetrize away roundoff
    for i in 0..n {
        h[(i, i)] = Complex::new(h[(i, i)].re, T::zero());
        for j in i + 1..n {
            let avg = (h[(i, j)] + h[(j, i)].conj()) * T::lit(0.5);
            h[(i, j)] = avg;
            h[(j, i)] = avg.conj();
        }
    }
    let (vals, vecs) = hermitian_eigen(&h);
    let k = k.min(n);
    let vectors: Vec<Vec<Complex<T>>> = (0..k).map(|c| vecs.column(c).iter().copied().collect()).collect();
    let residuals = vectors.iter().zip(&vals).map(|(v, &e)| residual_norm(op, v, e)).collect();
    EigenPairs {
        values: vals[..k].to_vec(),
        vectors,
        residuals,
        info: SolverInfo { kind: SolverKind::Dense, iterations: 1, tol: 0.0 },
    }
}

/// Orthogonalizes `w` against `basis` twice (DGKS); returns the remaining norm.
fn orthogonalize<T: Real>(basis: &[Vec<Complex<T>>], w: &mut [Complex<T>]) -> T {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, w);
            for (x, y) in w.iter_mut().zip(b) {
                *x -= *y * c;
            }
        }
    }
    norm(w)
}

/// Approximate inverse used to precondition residuals; receives the current
/// lowest Ritz value.
pub trait Preconditioner<T: Real> {
    fn precondition(&self, ritz: T, r: &[Complex<T>]) -> Vec<Complex<T>>;
}

/// `(K + sigma)^{-1}` by a fixed number of conjugate-gradient steps, with
/// `sigma = max(1, |ritz|)`. `K` must be Hermitian positive semidefinite.
pub struct ShiftedCg<'a, T: Real> {
    pub k: &'a dyn LinearMap<T>,
    pub steps: usize,
}

impl<T: Real> Preconditioner<T> for ShiftedCg<'_, T> {
    fn precondition(&self, ritz: T, r: &[Complex<T>]) -> Vec<Complex<T>> {
        let sigma = ritz.abs().max(T::one());
        let n = r.len();
        let mut x = vec![czero::<T>(); n];
        let mut res = r.to_vec();
        let mut p = res.clone();
        let mut ap = vec![czero::<T>(); n];
        let mut rr = dot(&res, &res).re;
        let r0 = rr;
        for _ in 0..self.steps {
            if !(rr > r0 * T::lit(1e-20)) {
                break;
            }
            self.k.apply(&p, &mut ap);
            for (a, q) in ap.iter_mut().zip(&p) {
                *a += *q * sigma;
            }
            let alpha = rr / dot(&p, &ap).re;
            for i in 0..n {
                x[i] += p[i] * alpha;
                res[i] -= ap[i] * alpha;
            }
            let rr_new = dot(&res, &res).re;
            let beta = rr_new / rr;
            for i in 0..n {
                p[i] = res[i] + p[i] * beta;
            }
            rr = rr_new;
        }
        x
    }
}

/// Two lowest eigenpairs by block-2 restarted Krylov (Davidson) iteration;
/// converged when both residuals are at most `tol`.
pub fn lowest_krylov<T: Real>(
    op: &dyn LinearMap<T>,
    tol: T,
    opts: &EigenOptions,
    precond: Option<&dyn Preconditioner<T>>,
) -> Result<EigenPairs<T>> {
    let n = op.dim();
    let block = 2usize.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<Complex<T>>> = Vec::new();
    let mut images: Vec<Vec<Complex<T>>> = Vec::new();
    let mut applies = 0usize;

    let push = |basis: &mut Vec<Vec<Complex<T>>>, images: &mut Vec<Vec<Complex<T>>>, mut w: Vec<Complex<T>>, applies: &mut usize| -> bool {
        let before = norm(&w);
        let after = orthogonalize(basis, &mut w);
        if !(after > before * T::lit(1e-10)) || after == T::zero() {
            return false;
        }
        for x in &mut w {
            *x = *x / after;
        }
        let mut hw = vec![czero(); n];
        op.apply(&w, &mut hw);
        *applies += 1;
        basis.push(w);
        images.push(hw);
        true
    };

    for _ in 0..block {
        let w: Vec<Complex<T>> = (0..n)
            .map(|_| Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
            .collect();
        push(&mut basis, &mut images, w, &mut applies);
    }

    loop {
        let k = basis.len();
        let mut h = DMatrix::from_element(k, k, czero::<T>());
        for i in 0..k {
            for j in i..k {
                let v = dot(&basis[i], &images[j]);
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
            h[(i, i)] = Complex::new(h[(i, i)].re, T::zero());
        }
        let (vals, y) = hermitian_eigen(&h);
        let combine = |src: &[Vec<Complex<T>>], c: usize| -> Vec<Complex<T>> {
            let mut out = vec![czero::<T>(); n];
            for (i, s) in src.iter().enumerate() {
                let coef = y[(i, c)];
                if coef != czero() {
                    for (o, x) in out.iter_mut().zip(s) {
                        *o += *x * coef;
                    }
                }
            }
            out
        };
        let mut ritz = Vec::with_capacity(block);
        let mut residuals = Vec::with_capacity(block);
        let mut res_vecs = Vec::with_capacity(block);
        for c in 0..block.min(k) {
            let x = combine(&basis, c);
            let hx = combine(&images, c);
            let r: Vec<_> = hx.iter().zip(&x).map(|(a, b)| *a - *b * vals[c]).collect();
            residuals.push(norm(&r));
            res_vecs.push(r);
            ritz.push(x);
        }
        let last_res = residuals.iter().fold(T::zero(), |a, &b| a.max(b));
        if last_res <= tol || k >= n {
            return Ok(EigenPairs {
                values: vals[..ritz.len()].to_vec(),
                vectors: ritz,
                residuals,
                info: SolverInfo { kind: SolverKind::Krylov, iterations: applies, tol: tol.as_f64() },
            });
        }
        if applies >= opts.max_iter {
            return Err(CdftError::NoConvergence { iterations: applies, residual: last_res.as_f64() });
        }
        if k + block > opts.max_basis {
            let keep = opts.keep.max(block).min(k);
            let new_basis: Vec<_> = (0..keep).map(|c| combine(&basis, c)).collect();
            let new_images: Vec<_> = (0..keep).map(|c| combine(&images, c)).collect();
            basis = new_basis;
            images = new_images;
        }
        let mut added = false;
        for (c, r) in res_vecs.into_iter().enumerate() {
            if residuals[c] > tol * T::lit(1e-3) {
                let t = match precond {
                    Some(pc) => pc.precondition(vals[0], &r),
                    None => r,
                };
                added |= push(&mut basis, &mut images, t, &mut applies);
            }
        }
        if !added {
            let w: Vec<Complex<T>> = (0..n)
                .map(|_| Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
                .collect();
            if !push(&mut basis, &mut images, w, &mut applies) {
                return Err(CdftError::NoConvergence { iterations: applies, residual: last_res.as_f64() });
            }
        }
    }
}

/// Lowest two eigenpairs, dense or Krylov by dimension.
pub fn lowest_pairs<T: Real>(
    op: &dyn LinearMap<T>,
    tol: T,
    opts: &EigenOptions,
    precond: Option<&dyn Preconditioner<T>>,
) -> Result<EigenPairs<T>> {
    if op.dim() <= opts.dense_max {
        let mut r = lowest_dense(op, 2);
        r.info.tol = tol.as_f64();
        Ok(r)
    } else {
        lowest_krylov(op, tol, opts, precond)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Dirichlet Laplacian, eigenvalues 2 - 2 cos(k pi / (n + 1)).
    fn laplacian(n: usize) -> (usize, impl Fn(&[Complex<f64>], &mut [Complex<f64>]) + Sync) {
        (n, move |x: &[Complex<f64>], y: &mut [Complex<f64>]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { czero() };
                let r = if i + 1 < n { x[i + 1] } else { czero() };
                y[i] = x[i] * 2.0 - l - r;
            }
        })
    }

    #[test]
    fn dense_and_krylov_agree_with_exact_spectrum() {
        let n = 300;
        let op = laplacian(n);
        let exact = |k: usize| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
        let d = lowest_dense(&op, 2);
        assert!((d.values[0] - exact(1)).abs() < 1e-12);
        assert!((d.values[1] - exact(2)).abs() < 1e-12);
        let opts = EigenOptions { dense_max: 0, ..Default::default() };
        let k = lowest_krylov(&op, 1e-9, &opts, None).unwrap();
        assert!((k.values[0] - exact(1)).abs() < 1e-12);
        assert!((k.values[1] - exact(2)).abs() < 1e-12);
        assert!(k.residuals[0] <= 1e-9);
        let pc = ShiftedCg { k: &op, steps: 10 };
        let kp = lowest_krylov(&op, 1e-9, &opts, Some(&pc)).unwrap();
        assert!((kp.values[1] - exact(2)).abs() < 1e-12);
        assert!(kp.info.iterations < k.info.iterations);
    }
}
