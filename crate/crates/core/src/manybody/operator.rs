//! Matrix-free many-body operators on the full tensor `grid^N`.
//!
//! Every operator here is a sum of one-body terms acting slot by slot plus a
//! diagonal pair interaction, so it commutes with particle exchange and maps
//! antisymmetric tensors to antisymmetric tensors.

use std::sync::Arc;

use crate::error::Result;
use crate::lattice::{Grid, NeighborTable, ScalarField, VectorField};
use crate::scalar::{czero, Complex, Real};

/// Softened Coulomb kernel `1 / sqrt(r^2 + eta^2)`. With `eta = 0` the
/// coincident-point value is set to zero; it never enters fermionic
/// expectation values.
pub fn soft_coulomb<T: Real>(r2: T, eta: T) -> T {
    let d = r2 + eta * eta;
    if d > T::zero() {
        T::one() / d.sqrt()
    } else {
        T::zero()
    }
}

/// Pair table `W[i * M + j]` over grid points, minimum-image distances on
/// periodic grids.
pub fn pair_table<T: Real>(grid: &Grid<T>, eta: T) -> Vec<T> {
    let m = grid.len();
    let mut w = vec![T::zero(); m * m];
    for i in 0..m {
        for j in 0..m {
            w[i * m + j] = soft_coulomb(grid.distance_sq(i, j), eta);
        }
    }
    w
}

/// Slot digit storage (`usize` while iterating, `u32` in sector tables).
trait Digit: Copy {
    fn idx(self) -> usize;
}

impl Digit for usize {
    #[inline]
    fn idx(self) -> usize {
        self
    }
}

impl Digit for u32 {
    #[inline]
    fn idx(self) -> usize {
        self as usize
    }
}

/// `-Delta` plus optional scalar `u`, current operator `J[a]`, and pair
/// interaction, applied to each of the `n` particle slots.
///
/// `J[a] = -(i/2) sum_l (a_l D_l + D_l a_l)` is the Hermitian operator with
/// `<psi, J[a] psi> = sum_x a(x) . j_psi(x) h^d`; the minimal-coupling
/// Hamiltonian is `-Delta + J[2A] + (v + |A|^2) + W`.
#[derive(Debug, Clone)]
pub struct TensorOperator<T: Real> {
    grid: Grid<T>,
    table: NeighborTable,
    n: usize,
    m: usize,
    full_len: usize,
    kinetic: bool,
    inv_h2: Vec<T>,
    scalar: Option<Vec<T>>,
    /// Link coefficients `(a(p) + a(q)) / 4h` toward backward/forward neighbours.
    links: Option<Vec<[T; 2]>>,
    pair: Option<Arc<Vec<T>>>,
}

impl<T: Real> TensorOperator<T> {
    pub fn new(grid: &Grid<T>, n: usize) -> Result<Self> {
        let full_len = grid.tensor_len(n)?;
        Ok(Self {
            table: grid.neighbor_table(),
            inv_h2: grid.spacing().iter().map(|&h| T::one() / (h * h)).collect(),
            grid: grid.clone(),
            n,
            m: grid.len(),
            full_len,
            kinetic: false,
            scalar: None,
            links: None,
            pair: None,
        })
    }

    pub fn with_kinetic(mut self) -> Self {
        self.kinetic = true;
        self
    }

    pub fn with_scalar(mut self, u: &ScalarField<T>) -> Result<Self> {
        self.grid.same_as(u.grid())?;
        self.scalar = Some(u.values().to_vec());
        Ok(self)
    }

    pub fn with_scalar_values(mut self, u: Vec<T>) -> Self {
        assert_eq!(u.len(), self.m);
        self.scalar = Some(u);
        self
    }

    /// Adds `J[a]`.
    pub fn with_current(mut self, a: &VectorField<T>) -> Result<Self> {
        self.grid.same_as(a.grid())?;
        self.links = Some(Self::link_coefficients(&self.grid, &self.table, a.values()));
        Ok(self)
    }

    pub fn with_current_values(mut self, a: &[T]) -> Self {
        assert_eq!(a.len(), self.m * self.grid.dim());
        self.links = Some(Self::link_coefficients(&self.grid, &self.table, a));
        self
    }

    pub fn with_pair_table(self, w: Vec<T>) -> Self {
        self.with_shared_pair_table(Arc::new(w))
    }

    pub fn with_shared_pair_table(mut self, w: Arc<Vec<T>>) -> Self {
        assert_eq!(w.len(), self.m * self.m);
        if self.n > 1 {
            self.pair = Some(w);
        }
        self
    }

    pub fn with_interaction(self, eta: T) -> Self {
        if self.n > 1 {
            let w = pair_table(&self.grid, eta);
            self.with_pair_table(w)
        } else {
            self
        }
    }

    fn link_coefficients(grid: &Grid<T>, table: &NeighborTable, a: &[T]) -> Vec<[T; 2]> {
        let d = grid.dim();
        let m = grid.len();
        let mut links = vec![[T::zero(); 2]; m * d];
        for p in 0..m {
            for axis in 0..d {
                let inv4h = T::one() / (T::lit(4.0) * grid.spacing()[axis]);
                let nb = table.get(axis, p);
                let ap = a[p * d + axis];
                for dir in 0..2 {
                    if nb[dir] != NeighborTable::GHOST {
                        links[p * d + axis][dir] = (ap + a[nb[dir] as usize * d + axis]) * inv4h;
                    }
                }
            }
        }
        links
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    pub fn full_len(&self) -> usize {
        self.full_len
    }

    fn slot_strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.n];
        for k in (0..self.n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.m;
        }
        strides
    }

    /// `(Op psi)[idx]`, where `digits` are the per-slot point indices of `idx`.
    #[inline]
    fn entry<D: Digit>(&self, psi: &[Complex<T>], idx: usize, digits: &[D], strides: &[usize]) -> Complex<T> {
        let (n, m, d) = (self.n, self.m, self.grid.dim());
        let two = T::lit(2.0);
        let here = psi[idx];
        let mut acc = czero::<T>();
        for k in 0..n {
            let p: usize = digits[k].idx();
            let s = strides[k];
            if let Some(u) = &self.scalar {
                acc += here * u[p];
            }
            let base = idx - p * s;
            for axis in 0..d {
                let nb = self.table.get(axis, p);
                let get = |dir: usize| -> Complex<T> {
                    if nb[dir] == NeighborTable::GHOST {
                        czero()
                    } else {
                        psi[base + nb[dir] as usize * s]
                    }
                };
                let (bwd, fwd) = (get(0), get(1));
                if self.kinetic {
                    acc += (here * two - fwd - bwd) * self.inv_h2[axis];
                }
                if let Some(links) = &self.links {
                    let [cb, cf] = links[p * d + axis];
                    let t = fwd * cf - bwd * cb;
                    // -i * t
                    acc += Complex::new(t.im, -t.re);
                }
            }
        }
        if let Some(w) = &self.pair {
            let mut e = T::zero();
            for k in 0..n {
                let pk: usize = digits[k].idx();
                for l in k + 1..n {
                    e += w[pk * m + digits[l].idx()];
                }
            }
            acc += here * e;
        }
        acc
    }

    /// `out = Op psi` on full tensors.
    pub fn apply(&self, psi: &[Complex<T>], out: &mut [Complex<T>]) {
        assert_eq!(psi.len(), self.full_len);
        assert_eq!(out.len(), self.full_len);
        let (n, m) = (self.n, self.m);
        let strides = self.slot_strides();
        let mut digits = vec![0usize; n];
        for (idx, o) in out.iter_mut().enumerate() {
            *o = self.entry(psi, idx, &digits, &strides);
            for k in (0..n).rev() {
                digits[k] += 1;
                if digits[k] < m {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    /// `out[r] = (Op psi)[rows[r]]`, with `tuples[r * n..]` the slot digits of row r.
    pub fn apply_rows(&self, psi: &[Complex<T>], rows: &[u32], tuples: &[u32], out: &mut [Complex<T>]) {
        assert_eq!(psi.len(), self.full_len);
        let strides = self.slot_strides();
        let n = self.n;
        for (r, o) in out.iter_mut().enumerate() {
            let digits = &tuples[r * n..(r + 1) * n];
            *o = self.entry(psi, rows[r] as usize, digits, &strides);
        }
    }

    pub fn apply_vec(&self, psi: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![czero(); self.full_len];
        self.apply(psi, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dot(a: &[Complex<f64>], b: &[Complex<f64>]) -> Complex<f64> {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn operator_is_hermitian_on_random_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &b in &[Boundary::Dirichlet, Boundary::Periodic] {
            let g = Grid::<f64>::new(vec![4, 3], vec![0.4, 0.6], vec![0.0, 0.0], b).unwrap();
            let u = ScalarField::from_fn(&g, |x| x[0] - x[1] * x[1]);
            let a = VectorField::from_fn(&g, |x| vec![x[1].sin(), 0.3 + x[0]]);
            let op = TensorOperator::new(&g, 2)
                .unwrap()
                .with_kinetic()
                .with_scalar(&u)
                .unwrap()
                .with_current(&a)
                .unwrap()
                .with_interaction(0.3);
            let len = op.full_len();
            let mut rnd = || -> Vec<Complex<f64>> {
                (0..len).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
            };
            let (x, y) = (rnd(), rnd());
            let lhs = dot(&x, &op.apply_vec(&y));
            let rhs = dot(&y, &op.apply_vec(&x)).conj();
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0));
        }
    }
}
