//! Central-difference calculus and midpoint quadrature.
//!
//! `D_l f(x) = (f(x + h e_l) - f(x - h e_l)) / 2h` with zero extension outside
//! Dirichlet boxes and index wrap on periodic ones. Both choices keep `D_l`
//! antisymmetric under the plain `h^d` inner product, which is what makes the
//! many-body energy decomposition exact on the grid.

use serde::Serialize;

use crate::error::{CdftError, Result};
use crate::lattice::field::{Field, ScalarField, VecField, VectorField};
use crate::lattice::grid::Grid;
use crate::scalar::{czero, Amplitude, Complex, Real};

#[inline]
fn value_at<T: Real, V: Amplitude<T>>(values: &[V], idx: Option<usize>) -> V {
    idx.map_or(V::zero(), |i| values[i])
}

/// Central difference of raw values along one axis.
pub fn partial_values<T: Real, V: Amplitude<T>>(grid: &Grid<T>, values: &[V], axis: usize) -> Vec<V> {
    let inv2h = T::one() / (T::lit(2.0) * grid.spacing()[axis]);
    (0..grid.len())
        .map(|p| {
            let fwd = value_at::<T, V>(values, grid.neighbor(p, axis, true));
            let bwd = value_at::<T, V>(values, grid.neighbor(p, axis, false));
            (fwd - bwd) * inv2h
        })
        .collect()
}

/// (2d+1)-point Laplacian of raw values.
pub fn laplacian_values<T: Real, V: Amplitude<T>>(grid: &Grid<T>, values: &[V]) -> Vec<V> {
    let mut out = vec![V::zero(); grid.len()];
    for axis in 0..grid.dim() {
        let h = grid.spacing()[axis];
        let inv_h2 = T::one() / (h * h);
        let two = T::lit(2.0);
        for (p, o) in out.iter_mut().enumerate() {
            let fwd = value_at::<T, V>(values, grid.neighbor(p, axis, true));
            let bwd = value_at::<T, V>(values, grid.neighbor(p, axis, false));
            *o += (fwd + bwd - values[p] * two) * inv_h2;
        }
    }
    out
}

impl<T: Real, V: Amplitude<T>> Field<T, V> {
    pub fn partial(&self, axis: usize) -> Field<T, V> {
        Field::new(self.grid().clone(), partial_values(self.grid(), self.values(), axis))
            .expect("shape preserved")
    }

    pub fn gradient(&self) -> VecField<T, V> {
        let comps: Vec<_> = (0..self.grid().dim()).map(|a| self.partial(a)).collect();
        VecField::from_components(&comps).expect("components share grid")
    }

    pub fn laplacian(&self) -> Field<T, V> {
        Field::new(self.grid().clone(), laplacian_values(self.grid(), self.values()))
            .expect("shape preserved")
    }

    /// Sum of squared moduli times h^d.
    pub fn l2_sq(&self) -> T {
        self.values().iter().fold(T::zero(), |s, v| s + v.modulus_sqr()) * self.grid().cell_volume()
    }

    pub fn norms(&self) -> Norms<T> {
        let w = self.grid().cell_volume();
        let l1 = self.values().iter().fold(T::zero(), |s, v| s + v.modulus_sqr().sqrt()) * w;
        let l2_sq = self.l2_sq();
        let grad_sq = self
            .gradient()
            .values()
            .iter()
            .fold(T::zero(), |s, v| s + v.modulus_sqr())
            * w;
        Norms { l1, l2: l2_sq.sqrt(), h1: (l2_sq + grad_sq).sqrt() }
    }
}

impl<T: Real, V: Amplitude<T>> VecField<T, V> {
    pub fn divergence(&self) -> Field<T, V> {
        let g = self.grid();
        let mut out = vec![V::zero(); g.len()];
        for a in 0..g.dim() {
            let comp = self.component(a);
            for (o, v) in out.iter_mut().zip(partial_values(g, comp.values(), a)) {
                *o += v;
            }
        }
        Field::new(g.clone(), out).expect("shape preserved")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms<T> {
    pub l1: T,
    pub l2: T,
    pub h1: T,
}

/// Result of a discrete curl: scalar in 2D, vector in 3D.
#[derive(Debug, Clone, PartialEq)]
pub enum Curl<T: Real> {
    Scalar(ScalarField<T>),
    Vector(VectorField<T>),
}

impl<T: Real> Curl<T> {
    /// Largest pointwise magnitude.
    pub fn max_abs(&self) -> T {
        match self {
            Curl::Scalar(s) => s.values().iter().fold(T::zero(), |m, v| m.max(v.abs())),
            Curl::Vector(v) => v.magnitude_sq().values().iter().fold(T::zero(), |m, x| m.max(x.sqrt())),
        }
    }

    /// Largest magnitude over points selected by `mask`.
    pub fn max_abs_where(&self, mask: impl Fn(usize) -> bool) -> T {
        match self {
            Curl::Scalar(s) => s
                .values()
                .iter()
                .enumerate()
                .filter(|(p, _)| mask(*p))
                .fold(T::zero(), |m, (_, v)| m.max(v.abs())),
            Curl::Vector(v) => v
                .magnitude_sq()
                .values()
                .iter()
                .enumerate()
                .filter(|(p, _)| mask(*p))
                .fold(T::zero(), |m, (_, x)| m.max(x.sqrt())),
        }
    }
}

/// Central-difference curl. In 1D the operation is undefined.
pub fn curl<T: Real>(u: &VectorField<T>) -> Result<Curl<T>> {
    let g = u.grid();
    match g.dim() {
        2 => {
            let d1u2 = u.component(1).partial(0);
            let d2u1 = u.component(0).partial(1);
            let values = d1u2.values().iter().zip(d2u1.values()).map(|(&a, &b)| a - b).collect();
            Ok(Curl::Scalar(Field::new(g.clone(), values)?))
        }
        3 => {
            let c = |i: usize, j: usize| u.component(i).partial(j);
            let (d1u2, d2u1) = (c(1, 0), c(0, 1));
            let (d2u3, d3u2) = (c(2, 1), c(1, 2));
            let (d3u1, d1u3) = (c(0, 2), c(2, 0));
            let sub = |a: &ScalarField<T>, b: &ScalarField<T>| -> ScalarField<T> {
                let v = a.values().iter().zip(b.values()).map(|(&x, &y)| x - y).collect();
                Field::new(g.clone(), v).expect("shape preserved")
            };
            let comps = [sub(&d2u3, &d3u2), sub(&d3u1, &d1u3), sub(&d1u2, &d2u1)];
            Ok(Curl::Vector(VecField::from_components(&comps)?))
        }
        d => Err(CdftError::DimensionUnsupported(d)),
    }
}

/// Midpoint quadrature `sum f * h^d`.
pub fn integrate<T: Real>(f: &ScalarField<T>) -> T {
    f.values().iter().copied().fold(T::zero(), |a, b| a + b) * f.grid().cell_volume()
}

/// `sum conj(f) g h^d`.
pub fn inner<T: Real>(f: &Field<T, Complex<T>>, g: &Field<T, Complex<T>>) -> Result<Complex<T>> {
    f.grid().same_as(g.grid())?;
    let s = f
        .values()
        .iter()
        .zip(g.values())
        .fold(czero::<T>(), |acc, (a, b)| acc + a.conj() * b);
    Ok(s * f.grid().cell_volume())
}

/// Pointwise product integrated: `sum f g h^d`.
pub fn integrate_product<T: Real>(f: &ScalarField<T>, g: &ScalarField<T>) -> Result<T> {
    f.grid().same_as(g.grid())?;
    Ok(f.values().iter().zip(g.values()).fold(T::zero(), |s, (&a, &b)| s + a * b) * f.grid().cell_volume())
}

/// `sum u . w h^d` for two real vector fields.
pub fn integrate_dot<T: Real>(u: &VectorField<T>, w: &VectorField<T>) -> Result<T> {
    u.grid().same_as(w.grid())?;
    Ok(u.values().iter().zip(w.values()).fold(T::zero(), |s, (&a, &b)| s + a * b) * u.grid().cell_volume())
}
