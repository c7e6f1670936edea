//! Tensor sine basis for velocities vanishing on the boundary.
//!
//! Mode `i = c * m^dim + flat(k)` is `prod_a sin(k_a pi x_a / L_a)` placed in
//! velocity component `c`, with `k_a = 1..=m` and `flat` running over the
//! first axis fastest. Modes are sampled at cell centres; all integrals are
//! midpoint sums, evaluated axis by axis through one-dimensional tables.
//! Gram, stiffness and density-weighted mass matrices are block diagonal
//! with one identical `m^dim` block per component.

use crate::error::{Error, Result};
use crate::field::{check_grids, ScalarField, VectorField};
use crate::grid::Grid;
use crate::linalg::{Cholesky, DenseMatrix};
use crate::scalar::Real;

/// Largest admissible number of basis functions.
pub const MAX_MODES: usize = 4096;

#[derive(Clone, Debug)]
pub struct GalerkinBasis<T> {
    grid: Grid<T>,
    m: usize,
    block: usize,
    // per axis, `[mode][cell]` and `[cell][mode]`
    sine: [Vec<Vec<T>>; 3],
    sine_t: [Vec<Vec<T>>; 3],
    deriv: [Vec<Vec<T>>; 3],
    deriv_t: [Vec<Vec<T>>; 3],
    // per axis, `[k + m l][cell] = sin_k sin_l`
    pair: [Vec<Vec<T>>; 3],
    gram: DenseMatrix<T>,
    stiffness: DenseMatrix<T>,
    gram_factor: Cholesky<T>,
}

fn transpose<T: Real>(rows: &[Vec<T>]) -> Vec<Vec<T>> {
    let cols = rows.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect()
}

/// Contracts axis `axis` of a `shape`-shaped array (first axis fastest)
/// with `table[row][entry]`; the axis length becomes `table.len()`.
pub(crate) fn contract_axis<T: Real>(
    data: &[T],
    shape: [usize; 3],
    axis: usize,
    table: &[Vec<T>],
) -> (Vec<T>, [usize; 3]) {
    let rows = table.len();
    let mut out_shape = shape;
    out_shape[axis] = rows;
    let mut out = vec![T::zero(); out_shape.iter().product()];
    let len = shape[axis];
    // view as [pre, len, post] with `pre` fastest
    let pre: usize = shape[..axis].iter().product();
    let post: usize = shape[axis + 1..].iter().product();
    for j in 0..post {
        let src = &data[j * pre * len..(j + 1) * pre * len];
        let dst = &mut out[j * pre * rows..(j + 1) * pre * rows];
        if pre == 1 {
            for (o, row) in dst.iter_mut().zip(table) {
                *o = row.iter().zip(src).map(|(&t, &v)| t * v).sum();
            }
        } else {
            for (r, row) in table.iter().enumerate() {
                let o = &mut dst[r * pre..(r + 1) * pre];
                for (a, &t) in row.iter().enumerate() {
                    if t == T::zero() {
                        continue;
                    }
                    for (x, &v) in o.iter_mut().zip(&src[a * pre..(a + 1) * pre]) {
                        *x = *x + t * v;
                    }
                }
            }
        }
    }
    (out, out_shape)
}

impl<T: Real> GalerkinBasis<T> {
    pub fn new(grid: &Grid<T>, modes_per_axis: usize) -> Result<Self> {
        let dim = grid.dim();
        let m = modes_per_axis;
        if m == 0 {
            return Err(Error::InvalidArgument(
                "need at least one mode per axis".into(),
            ));
        }
        for axis in 0..dim {
            if m >= grid.count(axis) {
                return Err(Error::InvalidArgument(format!(
                    "{m} modes per axis need more than {m} cells along axis {axis}"
                )));
            }
        }
        let block = m.pow(dim as u32);
        let n = dim * block;
        if n > MAX_MODES {
            return Err(Error::InvalidArgument(format!(
                "basis of {n} modes exceeds the limit of {MAX_MODES}"
            )));
        }
        let unit = vec![vec![T::one()]];
        let mut sine: [Vec<Vec<T>>; 3] = [unit.clone(), unit.clone(), unit.clone()];
        let mut deriv: [Vec<Vec<T>>; 3] = [unit.clone(), unit.clone(), unit.clone()];
        let mut pair: [Vec<Vec<T>>; 3] = [unit.clone(), unit.clone(), unit];
        for axis in 0..dim {
            let len = grid.extent(axis);
            let cells = grid.count(axis);
            let wave = |k: usize| T::from_usize_lossy(k + 1) * T::PI() / len;
            sine[axis] = (0..m)
                .map(|k| {
                    (0..cells)
                        .map(|i| (wave(k) * grid.center_coord(axis, i)).sin())
                        .collect()
                })
                .collect();
            deriv[axis] = (0..m)
                .map(|k| {
                    (0..cells)
                        .map(|i| wave(k) * (wave(k) * grid.center_coord(axis, i)).cos())
                        .collect()
                })
                .collect();
            let s = &sine[axis];
            pair[axis] = (0..m * m)
                .map(|kl| {
                    let (k, l) = (kl % m, kl / m);
                    s[k].iter().zip(&s[l]).map(|(&a, &b)| a * b).collect()
                })
                .collect();
        }
        let sine_t = [
            transpose(&sine[0]),
            transpose(&sine[1]),
            transpose(&sine[2]),
        ];
        let deriv_t = [
            transpose(&deriv[0]),
            transpose(&deriv[1]),
            transpose(&deriv[2]),
        ];

        // one-dimensional overlap integrals
        let overlap = |a: &[Vec<T>], b: &[Vec<T>], axis: usize| -> Vec<Vec<T>> {
            let h = if axis < dim {
                grid.spacing(axis)
            } else {
                T::one()
            };
            a.iter()
                .map(|ra| {
                    b.iter()
                        .map(|rb| ra.iter().zip(rb).map(|(&x, &y)| x * y).sum::<T>() * h)
                        .collect()
                })
                .collect()
        };
        let ss: Vec<_> = (0..3).map(|a| overlap(&sine[a], &sine[a], a)).collect();
        let dd: Vec<_> = (0..3).map(|a| overlap(&deriv[a], &deriv[a], a)).collect();
        let mut gram = DenseMatrix::zeros(block);
        let mut stiffness = DenseMatrix::zeros(block);
        let ms = Self::mode_shape_for(dim, m);
        for p in 0..block {
            let kp = unflatten(p, ms);
            for q in 0..block {
                let kq = unflatten(q, ms);
                let g: T = (0..3)
                    .map(|a| ss[a][kp[a]][kq[a]])
                    .fold(T::one(), |x, y| x * y);
                let mut s = T::zero();
                for b in 0..dim {
                    let mut term = T::one();
                    for a in 0..3 {
                        term = term
                            * if a == b {
                                dd[a][kp[a]][kq[a]]
                            } else {
                                ss[a][kp[a]][kq[a]]
                            };
                    }
                    s = s + term;
                }
                gram[(p, q)] = g;
                stiffness[(p, q)] = s;
            }
        }
        let gram_factor = gram.cholesky()?;
        Ok(Self {
            grid: *grid,
            m,
            block,
            sine,
            sine_t,
            deriv,
            deriv_t,
            pair,
            gram,
            stiffness,
            gram_factor,
        })
    }

    fn mode_shape_for(dim: usize, m: usize) -> [usize; 3] {
        let mut s = [1usize; 3];
        for x in s.iter_mut().take(dim) {
            *x = m;
        }
        s
    }

    fn mode_shape(&self) -> [usize; 3] {
        Self::mode_shape_for(self.grid.dim(), self.m)
    }

    fn cell_shape(&self) -> [usize; 3] {
        self.grid.counts()
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Total number of basis functions.
    #[inline]
    pub fn len(&self) -> usize {
        self.grid.dim() * self.block
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn modes_per_axis(&self) -> usize {
        self.m
    }

    /// Number of scalar modes per velocity component.
    #[inline]
    pub fn block_size(&self) -> usize {
        self.block
    }

    /// Component and wave numbers (starting at 1) of basis function `i`.
    pub fn mode_index(&self, i: usize) -> (usize, [usize; 3]) {
        let c = i / self.block;
        let k = unflatten(i % self.block, self.mode_shape());
        let mut waves = [0usize; 3];
        for a in 0..self.grid.dim() {
            waves[a] = k[a] + 1;
        }
        (c, waves)
    }

    /// Basis function `i` sampled at cell centres.
    pub fn mode(&self, i: usize) -> VectorField<T> {
        let mut coeffs = vec![T::zero(); self.len()];
        coeffs[i] = T::one();
        self.realize(&coeffs)
    }

    /// Gram block `int phi_k phi_l` shared by every component.
    pub fn gram_block(&self) -> &DenseMatrix<T> {
        &self.gram
    }

    /// Stiffness block `int grad phi_k . grad phi_l`.
    pub fn stiffness_block(&self) -> &DenseMatrix<T> {
        &self.stiffness
    }

    /// Full `n x n` Gram matrix.
    pub fn gram(&self) -> DenseMatrix<T> {
        self.block_diagonal(&self.gram)
    }

    /// Full `n x n` stiffness matrix.
    pub fn stiffness(&self) -> DenseMatrix<T> {
        self.block_diagonal(&self.stiffness)
    }

    pub(crate) fn block_diagonal(&self, b: &DenseMatrix<T>) -> DenseMatrix<T> {
        let n = self.len();
        let mut out = DenseMatrix::zeros(n);
        for c in 0..self.grid.dim() {
            let o = c * self.block;
            for p in 0..self.block {
                for q in 0..self.block {
                    out[(o + p, o + q)] = b[(p, q)];
                }
            }
        }
        out
    }

    /// Applies a block-diagonal operator given by its block.
    pub(crate) fn apply_block(&self, b: &DenseMatrix<T>, x: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(x.len());
        for chunk in x.chunks(self.block) {
            out.extend(b.mul_vec(chunk));
        }
        out
    }

    /// Solves a block-diagonal system given the factor of its block.
    pub(crate) fn solve_block(&self, f: &Cholesky<T>, rhs: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(rhs.len());
        for chunk in rhs.chunks(self.block) {
            out.extend(f.solve(chunk));
        }
        out
    }

    /// Contracts cell data against the product of one table per axis,
    /// `derivative_axis` taking the derivative table.
    fn contract_cells(&self, weighted: &[T], derivative_axis: Option<usize>) -> Vec<T> {
        let mut data = weighted.to_vec();
        let mut shape = self.cell_shape();
        for axis in 0..3 {
            let table = if Some(axis) == derivative_axis {
                &self.deriv[axis]
            } else {
                &self.sine[axis]
            };
            let (d, s) = contract_axis(&data, shape, axis, table);
            data = d;
            shape = s;
        }
        data
    }

    /// Expands modal coefficients of one component to cell values.
    fn expand_modes(&self, coeffs: &[T], derivative_axis: Option<usize>) -> Vec<T> {
        let mut data = coeffs.to_vec();
        let mut shape = self.mode_shape();
        for axis in 0..3 {
            let table = if Some(axis) == derivative_axis {
                &self.deriv_t[axis]
            } else {
                &self.sine_t[axis]
            };
            let (d, s) = contract_axis(&data, shape, axis, table);
            data = d;
            shape = s;
        }
        data
    }

    fn check_coeffs(&self, coeffs: &[T]) {
        assert_eq!(
            coeffs.len(),
            self.len(),
            "coefficient vector has the wrong length"
        );
    }

    /// `int v . eta_i` for every basis function.
    pub fn load(&self, v: &VectorField<T>) -> Result<Vec<T>> {
        check_grids(&self.grid, v.grid())?;
        let vol = self.grid.cell_volume();
        let mut out = Vec::with_capacity(self.len());
        for c in 0..self.grid.dim() {
            let w: Vec<T> = v.component(c).iter().map(|&x| x * vol).collect();
            out.extend(self.contract_cells(&w, None));
        }
        Ok(out)
    }

    /// `int sum_b G_cb d_b eta_i,c` for a cellwise `dim x dim` tensor
    /// `tensor[c][b][cell]`.
    pub fn gradient_load(&self, tensor: &[Vec<Vec<T>>]) -> Vec<T> {
        let dim = self.grid.dim();
        let vol = self.grid.cell_volume();
        let mut out = vec![T::zero(); self.len()];
        for (c, row) in tensor.iter().enumerate().take(dim) {
            for (b, entry) in row.iter().enumerate().take(dim) {
                let w: Vec<T> = entry.iter().map(|&x| x * vol).collect();
                let part = self.contract_cells(&w, Some(b));
                for (o, p) in out[c * self.block..(c + 1) * self.block]
                    .iter_mut()
                    .zip(part)
                {
                    *o = *o + p;
                }
            }
        }
        out
    }

    /// `int p div eta_i`.
    pub fn divergence_load(&self, p: &[T]) -> Vec<T> {
        let vol = self.grid.cell_volume();
        let w: Vec<T> = p.iter().map(|&x| x * vol).collect();
        let mut out = Vec::with_capacity(self.len());
        for c in 0..self.grid.dim() {
            out.extend(self.contract_cells(&w, Some(c)));
        }
        out
    }

    /// `L^2` projection onto the span of the basis.
    pub fn project(&self, v: &VectorField<T>) -> Result<Vec<T>> {
        let rhs = self.load(v)?;
        Ok(self.solve_block(&self.gram_factor, &rhs))
    }

    /// `sum_i c_i eta_i` at the cell centres.
    pub fn realize(&self, coeffs: &[T]) -> VectorField<T> {
        self.check_coeffs(coeffs);
        let comps = coeffs
            .chunks(self.block)
            .map(|c| self.expand_modes(c, None))
            .collect();
        VectorField::from_components(&self.grid, comps).expect("shape preserved")
    }

    /// Exact gradient of the realized field: entry `c` holds `grad u_c`.
    pub fn realize_gradient(&self, coeffs: &[T]) -> Vec<VectorField<T>> {
        self.check_coeffs(coeffs);
        let dim = self.grid.dim();
        coeffs
            .chunks(self.block)
            .map(|c| {
                let comps = (0..dim).map(|b| self.expand_modes(c, Some(b))).collect();
                VectorField::from_components(&self.grid, comps).expect("shape preserved")
            })
            .collect()
    }

    /// Block of the density-weighted mass matrix `int rho phi_k phi_l`.
    pub fn mass_block(&self, rho: &ScalarField<T>) -> Result<DenseMatrix<T>> {
        check_grids(&self.grid, rho.grid())?;
        let vol = self.grid.cell_volume();
        let mut data: Vec<T> = rho.values().iter().map(|&r| r * vol).collect();
        let mut shape = self.cell_shape();
        for axis in 0..3 {
            let (d, s) = contract_axis(&data, shape, axis, &self.pair[axis]);
            data = d;
            shape = s;
        }
        // data index: (k0 + m l0) + shape0 * ((k1 + m l1) + shape1 * (k2 + m l2))
        let ms = self.mode_shape();
        let mut out = DenseMatrix::zeros(self.block);
        for p in 0..self.block {
            let kp = unflatten(p, ms);
            for q in 0..self.block {
                let kq = unflatten(q, ms);
                let at: [usize; 3] = std::array::from_fn(|a| kp[a] + ms[a] * kq[a]);
                out[(p, q)] = data[at[0] + shape[0] * (at[1] + shape[1] * at[2])];
            }
        }
        Ok(out)
    }

    /// `||u||_G^2 = c^T G c`.
    pub fn gram_norm_sq(&self, coeffs: &[T]) -> T {
        let gc = self.apply_block(&self.gram, coeffs);
        gc.iter().zip(coeffs).map(|(&a, &b)| a * b).sum()
    }

    /// `c^T K c = int |grad u|^2`.
    pub fn stiffness_norm_sq(&self, coeffs: &[T]) -> T {
        let kc = self.apply_block(&self.stiffness, coeffs);
        kc.iter().zip(coeffs).map(|(&a, &b)| a * b).sum()
    }
}

fn unflatten(p: usize, shape: [usize; 3]) -> [usize; 3] {
    [
        p % shape[0],
        (p / shape[0]) % shape[1],
        p / (shape[0] * shape[1]),
    ]
}

/// Builds the basis with `modes_per_axis` sine modes along every axis.
pub fn build_basis<T: Real>(grid: &Grid<T>, modes_per_axis: usize) -> Result<GalerkinBasis<T>> {
    GalerkinBasis::new(grid, modes_per_axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid<f64> {
        Grid::unit(2, n).unwrap()
    }

    #[test]
    fn single_mode_gram_is_a_quarter() {
        let b = build_basis(&grid(16), 1).unwrap();
        assert_eq!(b.len(), 2);
        let g = b.gram();
        assert!((g[(0, 0)] - 0.25).abs() < 1e-14);
        assert!((g[(1, 1)] - 0.25).abs() < 1e-14);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn stiffness_is_laplace_eigenvalue_times_gram() {
        let b = build_basis(&grid(32), 4).unwrap();
        let (g, k) = (b.gram(), b.stiffness());
        assert_eq!(g.asymmetry(), 0.0);
        assert_eq!(k.asymmetry(), 0.0);
        for i in 0..b.len() {
            let (_, w) = b.mode_index(i);
            let lam = PI * PI * ((w[0] * w[0] + w[1] * w[1]) as f64);
            assert!((k[(i, i)] - lam * g[(i, i)]).abs() < 1e-10 * k[(i, i)]);
        }
    }

    #[test]
    fn modes_match_direct_sampling() {
        let g = Grid::<f64>::new(2, &[2.0, 1.0], &[16, 12]).unwrap();
        let b = build_basis(&g, 3).unwrap();
        let i = b.block_size() + 5;
        let (c, w) = b.mode_index(i);
        assert_eq!(c, 1);
        let eta = b.mode(i);
        for idx in 0..g.cell_count() {
            let x = g.center(g.multi_index(idx));
            let exact = (w[0] as f64 * PI * x[0] / 2.0).sin() * (w[1] as f64 * PI * x[1]).sin();
            assert!((eta.component(1)[idx] - exact).abs() < 1e-14);
            assert_eq!(eta.component(0)[idx], 0.0);
        }
    }

    #[test]
    fn project_reproduces_modes() {
        let b = build_basis(&grid(16), 3).unwrap();
        for i in [0, 4, 11, 17] {
            let c = b.project(&b.mode(i)).unwrap();
            for (j, v) in c.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-10);
            }
        }
        let zero = b.project(&VectorField::zeros(b.grid())).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn projection_residual_is_orthogonal() {
        let g = grid(16);
        let b = build_basis(&g, 3).unwrap();
        let v = VectorField::from_fn(&g, |x| [1.0, x[0] * x[1], 0.0]);
        let c = b.project(&v).unwrap();
        let r = v.sub(&b.realize(&c)).unwrap();
        for l in b.load(&r).unwrap() {
            assert!(l.abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_and_mass_match_direct_quadrature() {
        let g = Grid::<f64>::new(2, &[1.0, 1.5], &[12, 10]).unwrap();
        let b = build_basis(&g, 3).unwrap();
        let coeffs: Vec<f64> = (0..b.len())
            .map(|i| ((i * 7 % 5) as f64 - 2.0) / 3.0)
            .collect();
        let grad = b.realize_gradient(&coeffs);
        let k_direct: f64 = grad
            .iter()
            .flat_map(|gc| gc.components().iter().flatten())
            .map(|v| v * v)
            .sum::<f64>()
            * g.cell_volume();
        assert!((k_direct - b.stiffness_norm_sq(&coeffs)).abs() < 1e-10 * k_direct);

        let rho = ScalarField::from_fn(&g, |x| 1.0 + x[0] + x[1] * x[1]);
        let mb = b.mass_block(&rho).unwrap();
        for p in [0, 3, 8] {
            for q in [0, 2, 7] {
                let (ep, eq) = (b.mode(p), b.mode(q));
                let direct: f64 = (0..g.cell_count())
                    .map(|i| rho.values()[i] * ep.component(0)[i] * eq.component(0)[i])
                    .sum::<f64>()
                    * g.cell_volume();
                assert!((mb[(p, q)] - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn divergence_load_matches_integration() {
        let g = grid(12);
        let b = build_basis(&g, 2).unwrap();
        let p: Vec<f64> = g.cell_centers().map(|x| x[0] * x[0] + x[1]).collect();
        let load = b.divergence_load(&p);
        for i in 0..b.len() {
            let (c, _) = b.mode_index(i);
            let mut coeffs = vec![0.0; b.len()];
            coeffs[i] = 1.0;
            let grad = b.realize_gradient(&coeffs);
            let direct: f64 = (0..g.cell_count())
                .map(|idx| p[idx] * grad[c].component(c)[idx])
                .sum::<f64>()
                * g.cell_volume();
            assert!((load[i] - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn guards() {
        assert!(build_basis(&grid(8), 8).is_err());
        assert!(build_basis(&grid(8), 0).is_err());
        let big = Grid::<f64>::unit(3, 64).unwrap();
        assert!(build_basis(&big, 13).is_err());
        assert!(build_basis(&Grid::<f64>::unit(3, 16).unwrap(), 3).is_ok());
    }
}
