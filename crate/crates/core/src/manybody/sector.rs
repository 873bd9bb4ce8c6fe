//! Indexing of the antisymmetric sector of `grid^N`.
//!
//! Full tensor index: particle slot 0 is the most significant base-M digit.
//! Sector coordinates are amplitudes on strictly increasing index tuples,
//! scaled so that the Euclidean inner product of sector vectors equals the
//! `h^{dN}`-weighted L2 inner product of the full antisymmetric tensors.

use crate::error::{CdftError, Result};
use crate::lattice::Grid;
use crate::scalar::{czero, Complex, Real};

#[derive(Debug, Clone)]
pub struct Sector<T: Real> {
    n: usize,
    m: usize,
    full_len: usize,
    tuples: Vec<u32>,
    /// Full index of each sorted tuple.
    reps: Vec<u32>,
    /// For each full index: sector index and permutation sign (0 on coincident points).
    full_map: Vec<(u32, i8)>,
    /// sqrt(N! h^{dN}); sector coordinate = full amplitude * scale.
    scale: T,
}

fn binomial(m: usize, n: usize) -> Option<usize> {
    if n > m {
        return Some(0);
    }
    let mut r: usize = 1;
    for k in 0..n {
        r = r.checked_mul(m - k)? / (k + 1);
    }
    Some(r)
}

/// Sign of the permutation sorting `idx`, or 0 if two entries coincide.
fn sort_sign(idx: &mut [u32]) -> i8 {
    let mut sign = 1i8;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        0
    } else {
        sign
    }
}

impl<T: Real> Sector<T> {
    /// Builds the index maps; fails with `budget_exceeded` when the sector
    /// dimension is above `budget`.
    pub fn new(grid: &Grid<T>, n: usize, budget: usize) -> Result<Self> {
        if n == 0 {
            return Err(CdftError::InvalidArgument("particle number must be >= 1".into()));
        }
        let m = grid.len();
        let full_len = grid.tensor_len(n)?;
        let dim = binomial(m, n).ok_or(CdftError::BudgetExceeded { needed: usize::MAX, budget })?;
        if dim > budget {
            return Err(CdftError::BudgetExceeded { needed: dim, budget });
        }
        if dim == 0 {
            return Err(CdftError::InvalidArgument(format!("{n} fermions do not fit on {m} points")));
        }
        let mut tuples = Vec::with_capacity(dim * n);
        let mut cur: Vec<u32> = (0..n as u32).collect();
        loop {
            tuples.extend_from_slice(&cur);
            // next strictly increasing tuple
            let mut k = n;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                if (cur[k] as usize) < m - n + k {
                    cur[k] += 1;
                    for j in k + 1..n {
                        cur[j] = cur[j - 1] + 1;
                    }
                    k = usize::MAX;
                    break;
                }
            }
            if k != usize::MAX {
                break;
            }
        }
        debug_assert_eq!(tuples.len(), dim * n);

        let mut full_map = vec![(0u32, 0i8); full_len];
        let mut digits = vec![0u32; n];
        let mut sorted = vec![0u32; n];
        for (idx, slot) in full_map.iter_mut().enumerate() {
            let mut r = idx;
            for k in (0..n).rev() {
                digits[k] = (r % m) as u32;
                r /= m;
            }
            sorted.copy_from_slice(&digits);
            let sign = sort_sign(&mut sorted);
            if sign != 0 {
                *slot = (Self::rank(&sorted, m) as u32, sign);
            }
        }
        let mut nfact = T::one();
        for k in 2..=n {
            nfact *= T::from_usize_lossy(k);
        }
        let w = grid.cell_volume().powi(n as i32);
        let reps = tuples.chunks(n).map(|t| t.iter().fold(0usize, |acc, &x| acc * m + x as usize) as u32).collect();
        Ok(Self { n, m, full_len, tuples, reps, full_map, scale: (nfact * w).sqrt() })
    }

    /// Lexicographic rank of a strictly increasing tuple.
    fn rank(tuple: &[u32], m: usize) -> usize {
        let n = tuple.len();
        let mut r = 0usize;
        let mut prev: i64 = -1;
        for (k, &t) in tuple.iter().enumerate() {
            for v in (prev + 1) as usize..t as usize {
                r += binomial(m - v - 1, n - k - 1).unwrap_or(0);
            }
            prev = t as i64;
        }
        r
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    pub fn n_points(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.tuples.len() / self.n
    }

    pub fn full_len(&self) -> usize {
        self.full_len
    }

    pub fn tuple(&self, r: usize) -> &[u32] {
        &self.tuples[r * self.n..(r + 1) * self.n]
    }

    /// Full index of the sorted representative of sector element `r`.
    pub fn representative(&self, r: usize) -> usize {
        self.reps[r] as usize
    }

    pub fn representatives(&self) -> &[u32] {
        &self.reps
    }

    pub fn tuples(&self) -> &[u32] {
        &self.tuples
    }

    pub fn full_entry(&self, full: usize) -> (usize, i8) {
        let (r, s) = self.full_map[full];
        (r as usize, s)
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// Sector coordinates to full antisymmetric amplitudes.
    pub fn expand(&self, coords: &[Complex<T>], full: &mut [Complex<T>]) {
        let inv = T::one() / self.scale;
        for (out, &(r, s)) in full.iter_mut().zip(&self.full_map) {
            *out = match s {
                0 => czero(),
                1 => coords[r as usize] * inv,
                _ => -coords[r as usize] * inv,
            };
        }
    }

    pub fn expand_vec(&self, coords: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut full = vec![czero(); self.full_len];
        self.expand(coords, &mut full);
        full
    }

    /// Full tensor (assumed antisymmetric) to sector coordinates.
    pub fn compress(&self, full: &[Complex<T>], coords: &mut [Complex<T>]) {
        for (c, &r) in coords.iter_mut().zip(&self.reps) {
            *c = full[r as usize] * self.scale;
        }
    }

    pub fn compress_vec(&self, full: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut c = vec![czero(); self.dim()];
        self.compress(full, &mut c);
        c
    }

    /// Antisymmetrizer applied to an arbitrary full tensor, in sector coordinates.
    pub fn project(&self, full: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut acc = vec![czero::<T>(); self.dim()];
        for (amp, &(r, s)) in full.iter().zip(&self.full_map) {
            match s {
                1 => acc[r as usize] += *amp,
                -1 => acc[r as usize] -= *amp,
                _ => {}
            }
        }
        let mut nfact = T::one();
        for k in 2..=self.n {
            nfact *= T::from_usize_lossy(k);
        }
        // (1/N!) sum_sigma sign * psi(sigma x) at the representative, times scale
        let f = self.scale / nfact;
        acc.iter().map(|a| *a * f).collect()
    }
}
