use serde::{Deserialize, Serialize};

use crate::error::{CdftError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Field is extended by zero outside the box.
    Dirichlet,
    /// Indices wrap around.
    Periodic,
}

/// Uniform rectangular lattice in one to three dimensions.
///
/// Point `i` along an axis sits at `origin + i * spacing`; flat indices are
/// row-major over the multi-index (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T: Real> {
    shape: Vec<usize>,
    spacing: Vec<T>,
    origin: Vec<T>,
    boundary: Boundary,
    strides: Vec<usize>,
}

impl<T: Real> Grid<T> {
    pub fn new(shape: Vec<usize>, spacing: Vec<T>, origin: Vec<T>, boundary: Boundary) -> Result<Self> {
        let dim = shape.len();
        if !(1..=3).contains(&dim) {
            return Err(CdftError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if spacing.len() != dim || origin.len() != dim {
            return Err(CdftError::InvalidGrid("shape/spacing/origin lengths differ".into()));
        }
        if let Some(n) = shape.iter().find(|&&n| n < 3) {
            return Err(CdftError::InvalidGrid(format!("axis with {n} points (need >= 3)")));
        }
        if spacing.iter().any(|&h| !(h > T::zero())) {
            return Err(CdftError::InvalidGrid("spacing must be positive".into()));
        }
        let mut total: usize = 1;
        for &n in &shape {
            total = total
                .checked_mul(n)
                .ok_or_else(|| CdftError::InvalidGrid("point count overflows".into()))?;
        }
        let mut strides = vec![1; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        Ok(Self { shape, spacing, origin, boundary, strides })
    }

    /// 1D grid with `n` points starting at `x0`.
    pub fn line(n: usize, h: T, x0: T, boundary: Boundary) -> Result<Self> {
        Self::new(vec![n], vec![h], vec![x0], boundary)
    }

    /// Dirichlet box `[lo, hi]` with the wall points themselves excluded:
    /// interior points `lo + h, ..., hi - h`, zero at the walls.
    pub fn dirichlet_box(lo: &[T], hi: &[T], h: T) -> Result<Self> {
        let mut shape = Vec::with_capacity(lo.len());
        let mut origin = Vec::with_capacity(lo.len());
        for (&a, &b) in lo.iter().zip(hi) {
            let cells = ((b - a) / h).round().as_f64() as usize;
            shape.push(cells.saturating_sub(1));
            origin.push(a + h);
        }
        let spacing = vec![h; lo.len()];
        Self::new(shape, spacing, origin, Boundary::Dirichlet)
    }

    /// Periodic box `[lo, hi)` with points `lo + i h`.
    pub fn periodic_box(lo: &[T], hi: &[T], h: T) -> Result<Self> {
        let shape = lo
            .iter()
            .zip(hi)
            .map(|(&a, &b)| ((b - a) / h).round().as_f64() as usize)
            .collect();
        Self::new(shape, vec![h; lo.len()], lo.to_vec(), Boundary::Periodic)
    }

    /// Cell-centred points `lo + (i + 1/2) h` covering `[lo, hi]`.
    pub fn cell_centered(lo: &[T], hi: &[T], h: T, boundary: Boundary) -> Result<Self> {
        let half = T::lit(0.5);
        let shape = lo
            .iter()
            .zip(hi)
            .map(|(&a, &b)| ((b - a) / h).round().as_f64() as usize)
            .collect();
        let origin = lo.iter().map(|&a| a + half * h).collect();
        Self::new(shape, vec![h; lo.len()], origin, boundary)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    /// Total number of points M.
    #[inline]
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing
    }

    pub fn origin(&self) -> &[T] {
        &self.origin
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Quadrature weight h^d.
    pub fn cell_volume(&self) -> T {
        self.spacing.iter().fold(T::one(), |a, &h| a * h)
    }

    /// Box length along an axis (period for periodic grids).
    pub fn extent(&self, axis: usize) -> T {
        T::from_usize_lossy(self.shape[axis]) * self.spacing[axis]
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in 0..self.dim() {
            idx[a] = flat / self.strides[a];
            flat %= self.strides[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    #[inline]
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.shape[axis]
    }

    pub fn coord(&self, flat: usize, axis: usize) -> T {
        self.origin[axis] + T::from_usize_lossy(self.axis_index(flat, axis)) * self.spacing[axis]
    }

    pub fn coords(&self, flat: usize) -> Vec<T> {
        (0..self.dim()).map(|a| self.coord(flat, a)).collect()
    }

    /// Neighbour one step along `axis` in direction `forward`; `None` when it
    /// falls outside a Dirichlet box.
    #[inline]
    pub fn neighbor(&self, flat: usize, axis: usize, forward: bool) -> Option<usize> {
        let i = self.axis_index(flat, axis);
        let n = self.shape[axis];
        let s = self.strides[axis];
        match (forward, self.boundary) {
            (true, _) if i + 1 < n => Some(flat + s),
            (false, _) if i > 0 => Some(flat - s),
            (true, Boundary::Periodic) => Some(flat + s - n * s),
            (false, Boundary::Periodic) => Some(flat + (n - 1) * s),
            _ => None,
        }
    }

    /// Precomputed neighbour table, `[axis][point] -> (backward, forward)`.
    pub fn neighbor_table(&self) -> NeighborTable {
        let m = self.len();
        let axes = (0..self.dim())
            .map(|a| {
                (0..m)
                    .map(|p| {
                        let enc = |o: Option<usize>| o.map_or(u32::MAX, |v| v as u32);
                        [enc(self.neighbor(p, a, false)), enc(self.neighbor(p, a, true))]
                    })
                    .collect()
            })
            .collect();
        NeighborTable { axes }
    }

    /// Displacement `x_i - x_j`, minimum image on periodic grids.
    pub fn displacement(&self, i: usize, j: usize) -> Vec<T> {
        (0..self.dim())
            .map(|a| {
                let mut d = self.coord(i, a) - self.coord(j, a);
                if self.boundary == Boundary::Periodic {
                    let l = self.extent(a);
                    let half = l * T::lit(0.5);
                    if d > half {
                        d -= l;
                    } else if d < -half {
                        d += l;
                    }
                }
                d
            })
            .collect()
    }

    pub fn distance_sq(&self, i: usize, j: usize) -> T {
        self.displacement(i, j).into_iter().fold(T::zero(), |s, x| s + x * x)
    }

    /// Refuses particle counts whose tensor space M^N overflows.
    pub fn tensor_len(&self, n_particles: usize) -> Result<usize> {
        let m = self.len();
        let mut total: usize = 1;
        for _ in 0..n_particles {
            total = total
                .checked_mul(m)
                .filter(|&t| t <= u32::MAX as usize)
                .ok_or_else(|| CdftError::InvalidGrid(format!("M^N overflows for N = {n_particles}")))?;
        }
        Ok(total)
    }

    pub fn same_as(&self, other: &Grid<T>) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(CdftError::GridMismatch)
        }
    }
}

/// Neighbour lookup without boundary logic in the hot loops. `u32::MAX` marks
/// a Dirichlet ghost point.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    axes: Vec<Vec<[u32; 2]>>,
}

impl NeighborTable {
    pub const GHOST: u32 = u32::MAX;

    #[inline]
    pub fn get(&self, axis: usize, point: usize) -> [u32; 2] {
        self.axes[axis][point]
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_axes_and_bad_spacing() {
        assert!(Grid::<f64>::line(2, 0.1, 0.0, Boundary::Dirichlet).is_err());
        assert!(Grid::<f64>::line(5, 0.0, 0.0, Boundary::Dirichlet).is_err());
        assert!(Grid::<f64>::new(vec![3; 4], vec![1.0; 4], vec![0.0; 4], Boundary::Periodic).is_err());
    }

    #[test]
    fn index_roundtrip_and_neighbors() {
        let g = Grid::<f64>::new(vec![3, 4, 5], vec![0.1, 0.2, 0.3], vec![0.0; 3], Boundary::Periodic).unwrap();
        for p in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(p)), p);
        }
        let p = g.flat_index(&[2, 3, 4]);
        assert_eq!(g.multi_index(g.neighbor(p, 2, true).unwrap()), vec![2, 3, 0]);
        assert_eq!(g.multi_index(g.neighbor(p, 0, true).unwrap()), vec![0, 3, 4]);
        let q = g.flat_index(&[0, 0, 0]);
        assert_eq!(g.multi_index(g.neighbor(q, 1, false).unwrap()), vec![0, 3, 0]);

        let d = Grid::<f64>::line(4, 1.0, 0.0, Boundary::Dirichlet).unwrap();
        assert_eq!(d.neighbor(0, 0, false), None);
        assert_eq!(d.neighbor(3, 0, true), None);
    }

    #[test]
    fn box_constructors() {
        let g = Grid::<f64>::dirichlet_box(&[-8.0], &[8.0], 0.05).unwrap();
        assert_eq!(g.len(), 319);
        assert!((g.coord(0, 0) + 7.95).abs() < 1e-12);
        let r = Grid::<f64>::periodic_box(&[0.0], &[1.0], 0.1).unwrap();
        assert_eq!(r.len(), 10);
        assert!((r.displacement(9, 0)[0] + 0.1).abs() < 1e-12);
    }
}
