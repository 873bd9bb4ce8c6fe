use nalgebra::DMatrix;

use crate::error::{CdftError, Result};
use crate::lattice::{inner, laplacian_values, partial_values, ComplexField, Grid, ScalarField, VectorField};
use crate::manybody::wavefunction::WaveFunction;
use crate::pair::DensityPair;
use crate::scalar::{cabs, czero, Complex, Real};

/// How far from orthonormal an orbital set may be before it is rejected.
pub const ORTHONORMAL_SLACK: f64 = 1e-6;

/// Slater determinant of N orthonormal orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct Determinant<T: Real> {
    orbitals: Vec<ComplexField<T>>,
    wave: WaveFunction<T>,
}

/// Gram matrix `<f_k, f_l>`.
pub fn gram<T: Real>(orbitals: &[ComplexField<T>]) -> Result<DMatrix<Complex<T>>> {
    let n = orbitals.len();
    let mut g = DMatrix::from_element(n, n, czero());
    for k in 0..n {
        for l in k..n {
            let v = inner(&orbitals[k], &orbitals[l])?;
            g[(k, l)] = v;
            g[(l, k)] = v.conj();
        }
    }
    Ok(g)
}

/// Symmetric (Loewdin) orthonormalization `F G^{-1/2}` of any linearly
/// independent set.
pub fn lowdin<T: Real>(orbitals: &[ComplexField<T>]) -> Result<Vec<ComplexField<T>>> {
    let g = gram(orbitals)?;
    let eig = g.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(T::zero(), |a, &b| a.max(b));
    let min = eig.eigenvalues.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b));
    if !(min > max * T::lit(1e-10)) || !(max > T::zero()) {
        return Err(CdftError::NotOrthonormalizable(format!("Gram matrix singular (eigenvalues {min:e}..{max:e})")));
    }
    let u = &eig.eigenvectors;
    let n = orbitals.len();
    let mut inv_sqrt = DMatrix::from_element(n, n, czero::<T>());
    for k in 0..n {
        for l in 0..n {
            let mut s = czero::<T>();
            for q in 0..n {
                s += u[(k, q)] * u[(l, q)].conj() / eig.eigenvalues[q].sqrt();
            }
            inv_sqrt[(k, l)] = s;
        }
    }
    let grid = orbitals[0].grid().clone();
    Ok((0..n)
        .map(|l| {
            let mut vals = vec![czero::<T>(); grid.len()];
            for (k, f) in orbitals.iter().enumerate() {
                let c = inv_sqrt[(k, l)];
                for (o, &x) in vals.iter_mut().zip(f.values()) {
                    *o += x * c;
                }
            }
            ComplexField::new(grid.clone(), vals).expect("shape")
        })
        .collect())
}

/// All permutations of `0..n` with their signs.
pub(crate) fn permutations(n: usize) -> Vec<(Vec<usize>, i8)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, i8)>) {
        let n = used.len();
        if prefix.len() == n {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if prefix[i] > prefix[j] {
                        inv += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inv % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for k in 0..n {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// `(N!)^{-1/2} det[f_k(x_l)]` over the full tensor.
pub fn slater_amplitudes<T: Real>(grid: &Grid<T>, orbitals: &[&[Complex<T>]]) -> Result<Vec<Complex<T>>> {
    let n = orbitals.len();
    let m = grid.len();
    let full = grid.tensor_len(n)?;
    let perms = permutations(n);
    let norm = T::one() / T::from_usize_lossy(perms.len()).sqrt();
    let mut out = vec![czero::<T>(); full];
    let mut digits = vec![0usize; n];
    for o in out.iter_mut() {
        let mut s = czero::<T>();
        for (perm, sign) in &perms {
            let mut prod = Complex::new(T::one(), T::zero());
            for (l, &k) in perm.iter().enumerate() {
                prod = prod * orbitals[k][digits[l]];
            }
            if *sign > 0 {
                s += prod;
            } else {
                s -= prod;
            }
        }
        *o = s * norm;
        for k in (0..n).rev() {
            digits[k] += 1;
            if digits[k] < m {
                break;
            }
            digits[k] = 0;
        }
    }
    Ok(out)
}

/// `(rho, j)` of an orthonormal orbital set: `sum_k |f_k|^2`, `sum_k Im(conj f_k D f_k)`.
pub fn orbital_marginals<T: Real>(grid: &Grid<T>, orbitals: &[&[Complex<T>]]) -> (Vec<T>, Vec<T>) {
    let (m, d) = (grid.len(), grid.dim());
    let mut rho = vec![T::zero(); m];
    let mut jp = vec![T::zero(); m * d];
    for f in orbitals {
        for (r, z) in rho.iter_mut().zip(f.iter()) {
            *r += z.norm_sqr();
        }
        for axis in 0..d {
            let df = partial_values(grid, f, axis);
            for p in 0..m {
                jp[p * d + axis] += (f[p].conj() * df[p]).im;
            }
        }
    }
    (rho, jp)
}

/// `<f, -Delta f>` summed over orbitals.
pub fn orbital_kinetic<T: Real>(grid: &Grid<T>, orbitals: &[&[Complex<T>]]) -> T {
    let mut s = T::zero();
    for f in orbitals {
        let lap = laplacian_values(grid, f);
        for (z, l) in f.iter().zip(&lap) {
            s -= (z.conj() * l).re;
        }
    }
    s * grid.cell_volume()
}

impl<T: Real> Determinant<T> {
    /// Accepts orbitals within [`ORTHONORMAL_SLACK`] of orthonormal and
    /// symmetrically orthonormalizes them.
    pub fn new(orbitals: Vec<ComplexField<T>>) -> Result<Self> {
        let first = orbitals.first().ok_or_else(|| CdftError::InvalidArgument("no orbitals".into()))?;
        let grid = first.grid().clone();
        for f in &orbitals {
            grid.same_as(f.grid())?;
        }
        let g = gram(&orbitals)?;
        let n = orbitals.len();
        let mut dev = T::zero();
        for k in 0..n {
            for l in 0..n {
                let target = if k == l { T::one() } else { T::zero() };
                dev = dev.max(cabs(g[(k, l)] - Complex::new(target, T::zero())));
            }
        }
        if dev > T::lit(ORTHONORMAL_SLACK) {
            return Err(CdftError::NotOrthonormalizable(format!("Gram deviation {dev:e} exceeds {ORTHONORMAL_SLACK:e}")));
        }
        Self::from_independent(&orbitals)
    }

    /// Orthonormalizes any linearly independent set.
    pub fn from_independent(orbitals: &[ComplexField<T>]) -> Result<Self> {
        let orbitals = lowdin(orbitals)?;
        let grid = orbitals[0].grid().clone();
        let refs: Vec<&[Complex<T>]> = orbitals.iter().map(|f| f.values()).collect();
        let amps = slater_amplitudes(&grid, &refs)?;
        let wave = WaveFunction::from_parts_unchecked(&grid, orbitals.len(), amps);
        Ok(Self { orbitals, wave })
    }

    pub fn orbitals(&self) -> &[ComplexField<T>] {
        &self.orbitals
    }

    pub fn n_particles(&self) -> usize {
        self.orbitals.len()
    }

    pub fn grid(&self) -> &Grid<T> {
        self.orbitals[0].grid()
    }

    pub fn wavefunction(&self) -> &WaveFunction<T> {
        &self.wave
    }

    fn refs(&self) -> Vec<&[Complex<T>]> {
        self.orbitals.iter().map(|f| f.values()).collect()
    }

    /// `<phi, K phi> = sum_k <f_k, -Delta f_k>`.
    pub fn kinetic(&self) -> T {
        orbital_kinetic(self.grid(), &self.refs())
    }

    pub fn density_pair(&self) -> DensityPair<T> {
        let g = self.grid();
        let (rho, jp) = orbital_marginals(g, &self.refs());
        DensityPair::new(
            ScalarField::new(g.clone(), rho).expect("shape"),
            VectorField::new(g.clone(), jp).expect("shape"),
            self.n_particles(),
        )
        .expect("same grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    #[test]
    fn permutation_signs() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p.iter().map(|(_, s)| *s as i32).sum::<i32>(), 0);
    }

    #[test]
    fn duplicated_orbital_rejected() {
        let g = Grid::<f64>::line(8, 0.5, 0.0, Boundary::Dirichlet).unwrap();
        let f = ComplexField::from_fn(&g, |x| Complex::new((-x[0] * x[0]).exp(), 0.0));
        let f = f.scale(1.0 / inner(&f, &f).unwrap().re.sqrt());
        assert!(matches!(
            Determinant::new(vec![f.clone(), f]),
            Err(CdftError::NotOrthonormalizable(_))
        ));
    }
}
