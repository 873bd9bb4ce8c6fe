use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CdftError, Result};
use crate::lattice::Grid;
use crate::manybody::sector::Sector;
use crate::scalar::{cabs, czero, Complex, Real};

/// Antisymmetric, normalized N-particle amplitude over `grid^N`, stored in full.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<T: Real> {
    grid: Grid<T>,
    n: usize,
    amps: Vec<Complex<T>>,
}

pub const ANTISYMMETRY_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-10;

/// `sum conj(a) b h^{dN}` over full tensors.
pub fn tensor_inner<T: Real>(grid: &Grid<T>, n: usize, a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    let w = grid.cell_volume().powi(n as i32);
    let mut acc = czero::<T>();
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc * w
}

impl<T: Real> WaveFunction<T> {
    /// Validates antisymmetry and unit norm.
    pub fn new(grid: &Grid<T>, n: usize, amps: Vec<Complex<T>>) -> Result<Self> {
        let full = grid.tensor_len(n)?;
        if amps.len() != full {
            return Err(CdftError::ShapeMismatch { expected: full, found: amps.len() });
        }
        let wf = Self { grid: grid.clone(), n, amps };
        let defect = wf.antisymmetry_defect();
        if defect > T::lit(ANTISYMMETRY_TOL) {
            return Err(CdftError::InvalidArgument(format!("amplitudes not antisymmetric (defect {defect:e})")));
        }
        let norm = wf.norm_sq();
        if (norm - T::one()).abs() > T::lit(NORM_TOL) {
            return Err(CdftError::NotNormalized { total: norm.as_f64(), expected: 1.0 });
        }
        Ok(wf)
    }

    /// Normalizes an antisymmetric tensor.
    pub fn normalized(grid: &Grid<T>, n: usize, mut amps: Vec<Complex<T>>) -> Result<Self> {
        let norm = tensor_inner(grid, n, &amps, &amps).re.sqrt();
        if !(norm > T::zero()) {
            return Err(CdftError::InvalidArgument("zero wavefunction".into()));
        }
        for a in &mut amps {
            *a = *a / norm;
        }
        Self::new(grid, n, amps)
    }

    pub fn from_sector(sector: &Sector<T>, grid: &Grid<T>, coords: &[Complex<T>]) -> Result<Self> {
        Self::normalized(grid, sector.n_particles(), sector.expand_vec(coords))
    }

    /// Seeded random antisymmetric state; all sector amplitudes nonzero.
    pub fn random(grid: &Grid<T>, n: usize, seed: u64) -> Result<Self> {
        let sector = Sector::new(grid, n, usize::MAX)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords: Vec<Complex<T>> = (0..sector.dim())
            .map(|_| Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
            .collect();
        Self::from_sector(&sector, grid, &coords)
    }

    /// Used internally where antisymmetry holds by construction.
    pub(crate) fn from_parts_unchecked(grid: &Grid<T>, n: usize, amps: Vec<Complex<T>>) -> Self {
        Self { grid: grid.clone(), n, amps }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    /// Amplitude at per-particle flat point indices.
    pub fn at(&self, points: &[usize]) -> Complex<T> {
        let m = self.grid.len();
        self.amps[points.iter().fold(0, |acc, &p| acc * m + p)]
    }

    pub fn norm_sq(&self) -> T {
        tensor_inner(&self.grid, self.n, &self.amps, &self.amps).re
    }

    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.grid.same_as(&other.grid)?;
        if self.n != other.n {
            return Err(CdftError::InvalidArgument("particle numbers differ".into()));
        }
        Ok(tensor_inner(&self.grid, self.n, &self.amps, &other.amps))
    }

    /// Largest `|psi(..x_k..x_{k+1}..) + psi(..x_{k+1}..x_k..)|` relative to max |psi|.
    pub fn antisymmetry_defect(&self) -> T {
        let (n, m) = (self.n, self.grid.len());
        if n < 2 {
            return T::zero();
        }
        let scale = self.amps.iter().fold(T::zero(), |a, z| a.max(cabs(*z)));
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        let mut digits = vec![0usize; n];
        for idx in 0..self.amps.len() {
            let mut r = idx;
            for k in (0..n).rev() {
                digits[k] = r % m;
                r /= m;
            }
            for k in 0..n - 1 {
                digits.swap(k, k + 1);
                let j = digits.iter().fold(0, |acc, &p| acc * m + p);
                digits.swap(k, k + 1);
                worst = worst.max(cabs(self.amps[idx] + self.amps[j]));
            }
        }
        worst / scale
    }

    /// Multiplies by a global phase.
    pub fn with_phase(mut self, phase: Complex<T>) -> Self {
        for a in &mut self.amps {
            *a = *a * phase;
        }
        self
    }

    /// Largest-modulus amplitude made real positive (first such index).
    pub fn canonical_phase(self) -> Self {
        let mut best = (T::zero(), czero());
        for a in &self.amps {
            if cabs(*a) > best.0 * (T::one() + T::lit(1e-9)) {
                best = (cabs(*a), *a);
            }
        }
        if best.0 == T::zero() {
            return self;
        }
        let ph = best.1.conj() / best.0;
        self.with_phase(ph)
    }

    pub fn is_real(&self) -> bool {
        self.amps.iter().all(|a| a.im == T::zero())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.amps.iter().zip(&other.amps).fold(T::zero(), |a, (x, y)| a.max(cabs(*x - *y)))
    }
}
