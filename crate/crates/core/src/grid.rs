//! Uniform cell-centred box grid.
//!
//! Cells are stored row-major with the x index running fastest. In two
//! dimensions the third axis has a single cell so that all loops can be
//! written for three axes.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MIN_CELLS_PER_AXIS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    extent: [T; 3],
    count: [usize; 3],
    spacing: [T; 3],
}

impl<T: Real> Grid<T> {
    /// Builds a `dim`-dimensional box `[0, extent[0]] x ...` split into
    /// `counts[i]` cells along axis `i`.
    pub fn new(dim: usize, extents: &[T], counts: &[usize]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if extents.len() != dim || counts.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} extents and counts, got {} and {}",
                extents.len(),
                counts.len()
            )));
        }
        let mut extent = [T::one(); 3];
        let mut count = [1usize; 3];
        let mut spacing = [T::one(); 3];
        for axis in 0..dim {
            if !(extents[axis] > T::zero()) || !extents[axis].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "extent along axis {axis} must be positive, got {}",
                    extents[axis]
                )));
            }
            if counts[axis] < MIN_CELLS_PER_AXIS {
                return Err(Error::InvalidGrid(format!(
                    "need at least {MIN_CELLS_PER_AXIS} cells along axis {axis}, got {}",
                    counts[axis]
                )));
            }
            extent[axis] = extents[axis];
            count[axis] = counts[axis];
            spacing[axis] = extents[axis] / T::from_usize_lossy(counts[axis]);
        }
        Ok(Self {
            dim,
            extent,
            count,
            spacing,
        })
    }

    /// Unit square (or cube) with `n` cells per axis.
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, &vec![T::one(); dim], &vec![n; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn extent(&self, axis: usize) -> T {
        self.extent[axis]
    }

    #[inline]
    pub fn count(&self, axis: usize) -> usize {
        self.count[axis]
    }

    #[inline]
    pub fn counts(&self) -> [usize; 3] {
        self.count
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> T {
        self.spacing[axis]
    }

    pub fn min_spacing(&self) -> T {
        (0..self.dim)
            .map(|a| self.spacing[a])
            .fold(T::infinity(), T::min)
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.count[0] * self.count[1] * self.count[2]
    }

    #[inline]
    pub fn cell_volume(&self) -> T {
        (0..self.dim).fold(T::one(), |v, a| v * self.spacing[a])
    }

    pub fn volume(&self) -> T {
        (0..self.dim).fold(T::one(), |v, a| v * self.extent[a])
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.count[0],
            _ => self.count[0] * self.count[1],
        }
    }

    #[inline]
    pub fn index(&self, m: [usize; 3]) -> usize {
        m[0] + self.count[0] * (m[1] + self.count[1] * m[2])
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.count[0];
        let rest = idx / self.count[0];
        [i, rest % self.count[1], rest / self.count[1]]
    }

    /// Coordinate of the centre of cell `i` along `axis`.
    #[inline]
    pub fn center_coord(&self, axis: usize, i: usize) -> T {
        (T::from_usize_lossy(i) + T::lit(0.5)) * self.spacing[axis]
    }

    /// Cell centre position; unused axes are reported as zero.
    pub fn center(&self, m: [usize; 3]) -> [T; 3] {
        let mut x = [T::zero(); 3];
        for (axis, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.center_coord(axis, m[axis]);
        }
        x
    }

    pub fn cell_centers(&self) -> impl Iterator<Item = [T; 3]> + '_ {
        (0..self.cell_count()).map(move |idx| self.center(self.multi_index(idx)))
    }

    /// True when the cell touches the domain boundary.
    pub fn is_boundary_cell(&self, m: [usize; 3]) -> bool {
        (0..self.dim).any(|a| m[a] == 0 || m[a] + 1 == self.count[a])
    }

    /// Number of boundary faces normal to `axis` on one side.
    pub fn face_count(&self, axis: usize) -> usize {
        self.cell_count() / self.count[axis]
    }

    /// Slot of the boundary face normal to `axis` that touches the cell with
    /// multi-index `m` (the axis coordinate itself is ignored).
    #[inline]
    pub fn face_slot(&self, axis: usize, m: [usize; 3]) -> usize {
        match axis {
            0 => m[1] + self.count[1] * m[2],
            1 => m[0] + self.count[0] * m[2],
            _ => m[0] + self.count[0] * m[1],
        }
    }

    /// Centre of boundary face `slot` on `side` (0 = low, 1 = high) of `axis`.
    pub fn face_center(&self, axis: usize, side: usize, slot: usize) -> [T; 3] {
        let mut m = [0usize; 3];
        let (b, c) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        m[b] = slot % self.count[b];
        m[c] = slot / self.count[b];
        let mut x = self.center(m);
        x[axis] = if side == 0 {
            T::zero()
        } else {
            self.extent[axis]
        };
        if self.dim == 2 {
            x[2] = T::zero();
        }
        x
    }

    /// Same extents and dimension, twice the cells per axis.
    pub fn refined(&self) -> Result<Self> {
        let counts: Vec<usize> = (0..self.dim).map(|a| 2 * self.count[a]).collect();
        Self::new(self.dim, &self.extent[..self.dim], &counts)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.count == other.count && self.extent == other.extent
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_from_counts() {
        let g = Grid::<f64>::new(2, &[1.0, 1.0], &[64, 64]).unwrap();
        assert_eq!(g.spacing(0), 1.0 / 64.0);
        assert_eq!(g.spacing(1), 1.0 / 64.0);
        assert_eq!(g.cell_count(), 4096);
    }

    #[test]
    fn three_dimensional_cell_count() {
        let g = Grid::<f64>::new(3, &[1.0; 3], &[16, 16, 16]).unwrap();
        assert_eq!(g.cell_count(), 4096);
        assert_eq!(g.cell_volume(), 1.0 / 4096.0);
    }

    #[test]
    fn rejects_small_counts_and_bad_dims() {
        assert!(matches!(
            Grid::<f64>::new(2, &[1.0, 1.0], &[4, 4]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(Grid::<f64>::new(1, &[1.0], &[16]).is_err());
        assert!(Grid::<f64>::new(4, &[1.0; 4], &[16; 4]).is_err());
        assert!(Grid::<f64>::new(2, &[0.0, 1.0], &[16, 16]).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::<f32>::new(3, &[1.0, 2.0, 3.0], &[8, 9, 10]).unwrap();
        for idx in 0..g.cell_count() {
            assert_eq!(g.index(g.multi_index(idx)), idx);
        }
    }

    #[test]
    fn face_centres_lie_on_boundary() {
        let g = Grid::<f64>::new(2, &[2.0, 1.0], &[8, 16]).unwrap();
        for slot in 0..g.face_count(0) {
            let x = g.face_center(0, 1, slot);
            assert_eq!(x[0], 2.0);
            assert!(x[1] > 0.0 && x[1] < 1.0);
        }
        let m = [3, 0, 0];
        let x = g.face_center(1, 0, g.face_slot(1, m));
        assert_eq!(x, [g.center_coord(0, 3), 0.0, 0.0]);
    }
}
