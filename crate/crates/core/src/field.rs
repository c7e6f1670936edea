//! Field containers and boundary descriptions.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// One value per cell centre.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    grid: Grid<T>,
    data: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &Grid<T>, value: T) -> Self {
        Self {
            grid: *grid,
            data: vec![value; grid.cell_count()],
        }
    }

    pub fn from_vec(grid: &Grid<T>, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.cell_count() {
            return Err(Error::InvalidArgument(format!(
                "scalar field needs {} values, got {}",
                grid.cell_count(),
                data.len()
            )));
        }
        Ok(Self { grid: *grid, data })
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn([T; 3]) -> T) -> Self {
        Self {
            grid: *grid,
            data: grid.cell_centers().map(f).collect(),
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_grids(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    pub fn min(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Midpoint-rule integral over the box.
    pub fn integral(&self) -> T {
        self.data.iter().copied().sum::<T>() * self.grid.cell_volume()
    }
}

/// Velocity-like field with `dim` components per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    grid: Grid<T>,
    comps: Vec<Vec<T>>,
}

impl<T: Real> VectorField<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self {
            grid: *grid,
            comps: vec![vec![T::zero(); grid.cell_count()]; grid.dim()],
        }
    }

    pub fn from_components(grid: &Grid<T>, comps: Vec<Vec<T>>) -> Result<Self> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.cell_count()) {
            return Err(Error::InvalidArgument(format!(
                "vector field needs {} components of {} values",
                grid.dim(),
                grid.cell_count()
            )));
        }
        Ok(Self { grid: *grid, comps })
    }

    /// Samples `f` at every cell centre; only the first `dim` entries are kept.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn([T; 3]) -> [T; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for (idx, x) in grid.cell_centers().enumerate() {
            let v = f(x);
            for c in 0..grid.dim() {
                out.comps[c][idx] = v[c];
            }
        }
        out
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[T] {
        &self.comps[c]
    }

    #[inline]
    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<T>] {
        &self.comps
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [T; 3] {
        let mut v = [T::zero(); 3];
        for (c, comp) in self.comps.iter().enumerate() {
            v[c] = comp[idx];
        }
        v
    }

    /// Largest Euclidean norm over the cells.
    pub fn max_norm(&self) -> T {
        (0..self.grid.cell_count())
            .map(|idx| self.comps.iter().map(|c| c[idx] * c[idx]).sum::<T>().sqrt())
            .fold(T::zero(), T::max)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_grids(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x - y).collect())
                .collect(),
        })
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|&v| v * s).collect())
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    /// Cellwise squared norm as a scalar field.
    pub fn norm_squared(&self) -> ScalarField<T> {
        let data = (0..self.grid.cell_count())
            .map(|idx| self.comps.iter().map(|c| c[idx] * c[idx]).sum())
            .collect();
        ScalarField {
            grid: self.grid,
            data,
        }
    }
}

/// Director field: three components per cell in every dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectorField<T> {
    grid: Grid<T>,
    comps: [Vec<T>; 3],
}

impl<T: Real> DirectorField<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, [T::zero(); 3])
    }

    pub fn constant(grid: &Grid<T>, d: [T; 3]) -> Self {
        let n = grid.cell_count();
        Self {
            grid: *grid,
            comps: [vec![d[0]; n], vec![d[1]; n], vec![d[2]; n]],
        }
    }

    pub fn from_fn(grid: &Grid<T>, f: impl Fn([T; 3]) -> [T; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for (idx, x) in grid.cell_centers().enumerate() {
            out.set(idx, f(x));
        }
        out
    }

    pub fn from_components(grid: &Grid<T>, comps: [Vec<T>; 3]) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.cell_count()) {
            return Err(Error::InvalidArgument(format!(
                "director field needs 3 components of {} values",
                grid.cell_count()
            )));
        }
        Ok(Self { grid: *grid, comps })
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[T] {
        &self.comps[c]
    }

    #[inline]
    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<T>; 3] {
        &self.comps
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [T; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, d: [T; 3]) {
        for c in 0..3 {
            self.comps[c][idx] = d[c];
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_grids(&self.grid, &other.grid)?;
        let diff = |c: usize| -> Vec<T> {
            self.comps[c]
                .iter()
                .zip(&other.comps[c])
                .map(|(&a, &b)| a - b)
                .collect()
        };
        Ok(Self {
            grid: self.grid,
            comps: [diff(0), diff(1), diff(2)],
        })
    }

    pub fn max_norm(&self) -> T {
        (0..self.grid.cell_count())
            .map(|idx| norm3(self.at(idx)))
            .fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }
}

#[inline]
pub(crate) fn dot3<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm3<T: Real>(a: [T; 3]) -> T {
    dot3(a, a).sqrt()
}

pub(crate) fn check_grids<T: Real>(a: &Grid<T>, b: &Grid<T>) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Dirichlet data on the boundary faces, `ncomp` values per face.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletTrace<T> {
    grid: Grid<T>,
    ncomp: usize,
    // [2 * axis + side][comp][face slot]
    faces: Vec<Vec<Vec<T>>>,
}

impl<T: Real> DirichletTrace<T> {
    /// Samples `g` at every boundary face centre.
    pub fn from_fn(grid: &Grid<T>, ncomp: usize, g: impl Fn([T; 3]) -> [T; 3]) -> Self {
        assert!((1..=3).contains(&ncomp));
        let mut faces = Vec::with_capacity(2 * grid.dim());
        for axis in 0..grid.dim() {
            for side in 0..2 {
                let nf = grid.face_count(axis);
                let mut per_comp = vec![Vec::with_capacity(nf); ncomp];
                for slot in 0..nf {
                    let v = g(grid.face_center(axis, side, slot));
                    for (c, pc) in per_comp.iter_mut().enumerate() {
                        pc.push(v[c]);
                    }
                }
                faces.push(per_comp);
            }
        }
        Self {
            grid: *grid,
            ncomp,
            faces,
        }
    }

    /// Director trace equal to `d` on every face.
    pub fn constant(grid: &Grid<T>, d: [T; 3]) -> Self {
        Self::from_fn(grid, 3, |_| d)
    }

    pub fn zero(grid: &Grid<T>, ncomp: usize) -> Self {
        Self::from_fn(grid, ncomp, |_| [T::zero(); 3])
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn components(&self) -> usize {
        self.ncomp
    }

    #[inline]
    pub fn value(&self, axis: usize, side: usize, comp: usize, slot: usize) -> T {
        self.faces[2 * axis + side][comp][slot]
    }

    /// Largest Euclidean norm of the trace over all faces.
    pub fn max_norm(&self) -> T {
        let mut best = T::zero();
        for side in &self.faces {
            for slot in 0..side[0].len() {
                let n2: T = side.iter().map(|c| c[slot] * c[slot]).sum();
                best = best.max(n2.sqrt());
            }
        }
        best
    }
}

/// Boundary condition attached to one component of a field.
#[derive(Clone, Copy, Debug)]
pub enum ComponentBc<'a, T> {
    /// Zero normal derivative: ghost value mirrors the cell value.
    Neumann,
    /// Zero value on the boundary face.
    Zero,
    /// Prescribed face value taken from a trace.
    Dirichlet {
        trace: &'a DirichletTrace<T>,
        comp: usize,
    },
}

impl<T: Real> ComponentBc<'_, T> {
    /// Value on the boundary face normal to `axis` touching cell `m`.
    #[inline]
    pub fn face_value(&self, axis: usize, side: usize, m: [usize; 3], cell: T) -> T {
        match *self {
            ComponentBc::Neumann => cell,
            ComponentBc::Zero => T::zero(),
            ComponentBc::Dirichlet { trace, comp } => {
                trace.value(axis, side, comp, trace.grid().face_slot(axis, m))
            }
        }
    }

    /// Ghost value beyond the boundary face: mirror for Neumann, linear
    /// extrapolation through the face value for Dirichlet.
    #[inline]
    pub fn ghost(&self, axis: usize, side: usize, m: [usize; 3], cell: T) -> T {
        match *self {
            ComponentBc::Neumann => cell,
            _ => T::lit(2.0) * self.face_value(axis, side, m, cell) - cell,
        }
    }

    #[inline]
    pub fn is_dirichlet(&self) -> bool {
        !matches!(self, ComponentBc::Neumann)
    }
}

/// Boundary kind of a whole field.
#[derive(Clone, Debug)]
pub enum BoundarySpec<T> {
    /// Homogeneous Neumann (density).
    Neumann,
    /// Homogeneous Dirichlet (velocity).
    ZeroDirichlet,
    /// Dirichlet with a prescribed trace (director).
    Dirichlet(DirichletTrace<T>),
}

impl<T: Real> BoundarySpec<T> {
    pub fn component(&self, c: usize) -> ComponentBc<'_, T> {
        match self {
            BoundarySpec::Neumann => ComponentBc::Neumann,
            BoundarySpec::ZeroDirichlet => ComponentBc::Zero,
            BoundarySpec::Dirichlet(trace) => ComponentBc::Dirichlet {
                trace,
                comp: c.min(trace.components() - 1),
            },
        }
    }
}
