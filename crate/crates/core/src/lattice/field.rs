use crate::error::{CdftError, Result};
use crate::lattice::grid::Grid;
use crate::scalar::{Amplitude, Complex, Real};

/// One value per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: Real, V> {
    grid: Grid<T>,
    values: Vec<V>,
}

/// `d` components per grid point, stored point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VecField<T: Real, V> {
    grid: Grid<T>,
    values: Vec<V>,
}

pub type ScalarField<T> = Field<T, T>;
pub type ComplexField<T> = Field<T, Complex<T>>;
pub type VectorField<T> = VecField<T, T>;
pub type ComplexVectorField<T> = VecField<T, Complex<T>>;

impl<T: Real, V: Amplitude<T>> Field<T, V> {
    pub fn new(grid: Grid<T>, values: Vec<V>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CdftError::ShapeMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self { values: vec![V::zero(); grid.len()], grid: grid.clone() }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &Grid<T>, mut f: impl FnMut(&[T]) -> V) -> Self {
        let values = (0..grid.len()).map(|p| f(&grid.coords(p))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [V] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<V> {
        self.values
    }

    pub fn map<W: Amplitude<T>>(&self, f: impl Fn(V) -> W) -> Field<T, W> {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn to_complex(&self) -> ComplexField<T> {
        self.map(|v| v.into_complex())
    }
}

impl<T: Real, V: Amplitude<T>> VecField<T, V> {
    pub fn new(grid: Grid<T>, values: Vec<V>) -> Result<Self> {
        let expected = grid.len() * grid.dim();
        if values.len() != expected {
            return Err(CdftError::ShapeMismatch { expected, found: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self { values: vec![V::zero(); grid.len() * grid.dim()], grid: grid.clone() }
    }

    pub fn from_fn(grid: &Grid<T>, mut f: impl FnMut(&[T]) -> Vec<V>) -> Self {
        let d = grid.dim();
        let mut values = Vec::with_capacity(grid.len() * d);
        for p in 0..grid.len() {
            let v = f(&grid.coords(p));
            assert_eq!(v.len(), d, "vector field closure must return d components");
            values.extend(v);
        }
        Self { grid: grid.clone(), values }
    }

    /// Assembles a vector field from per-axis component fields.
    pub fn from_components(components: &[Field<T, V>]) -> Result<Self> {
        let grid = components
            .first()
            .ok_or_else(|| CdftError::InvalidArgument("no components".into()))?
            .grid
            .clone();
        if components.len() != grid.dim() {
            return Err(CdftError::InvalidArgument("component count must equal grid dimension".into()));
        }
        for c in components {
            grid.same_as(&c.grid)?;
        }
        let d = grid.dim();
        let mut values = vec![V::zero(); grid.len() * d];
        for (a, c) in components.iter().enumerate() {
            for (p, &v) in c.values.iter().enumerate() {
                values[p * d + a] = v;
            }
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [V] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, point: usize, axis: usize) -> V {
        self.values[point * self.grid.dim() + axis]
    }

    pub fn component(&self, axis: usize) -> Field<T, V> {
        let d = self.grid.dim();
        Field {
            grid: self.grid.clone(),
            values: (0..self.grid.len()).map(|p| self.values[p * d + axis]).collect(),
        }
    }

    /// Pointwise squared Euclidean length.
    pub fn magnitude_sq(&self) -> ScalarField<T> {
        let d = self.grid.dim();
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .chunks(d)
                .map(|c| c.iter().fold(T::zero(), |s, v| s + v.modulus_sqr()))
                .collect(),
        }
    }

    pub fn map<W: Amplitude<T>>(&self, f: impl Fn(V) -> W) -> VecField<T, W> {
        VecField { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

impl<T: Real> ScalarField<T> {
    pub fn constant(grid: &Grid<T>, c: T) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b))
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::min_value().unwrap(), |a, b| a.max(b))
    }
}

impl<T: Real> VectorField<T> {
    /// Divides every component by a scalar field pointwise.
    pub fn divide_by(&self, s: &ScalarField<T>) -> Result<Self> {
        self.grid.same_as(s.grid())?;
        let d = self.grid.dim();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| v / s.values()[k / d])
            .collect();
        Ok(Self { grid: self.grid.clone(), values })
    }
}
