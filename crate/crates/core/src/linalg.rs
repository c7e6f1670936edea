//! Small linear-algebra kernels: Jacobi-preconditioned conjugate gradients
//! for the matrix-free stencil systems and a dense Cholesky factorisation
//! for the Galerkin systems.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct CgOptions<T> {
    /// Stop when `||b - A x|| <= rel_tol * ||b||`.
    pub rel_tol: T,
    pub max_iters: usize,
}

impl<T: Real> Default for CgOptions<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-10),
            max_iters: 5000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats<T> {
    pub iterations: usize,
    pub rel_residual: T,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from
/// `x = 0`. `apply(v, out)` writes `A v` into `out`; `diag` is the diagonal
/// of `A`, used as preconditioner.
pub fn conjugate_gradient<T: Real>(
    apply: impl Fn(&[T], &mut [T]),
    diag: &[T],
    b: &[T],
    opts: CgOptions<T>,
) -> Result<(Vec<T>, CgStats<T>)> {
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let scale = b.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if !scale.is_finite() {
        return Err(Error::NonFinite("linear system right-hand side".into()));
    }
    if scale == T::zero() {
        return Ok((
            x,
            CgStats {
                iterations: 0,
                rel_residual: T::zero(),
            },
        ));
    }
    // unit-scaled right-hand side keeps squared norms clear of underflow
    let mut r: Vec<T> = b.iter().map(|&v| v / scale).collect();
    let b_norm = dot(&r, &r).sqrt();
    let mut z: Vec<T> = r.iter().zip(diag).map(|(&ri, &di)| ri / di).collect();
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let target = opts.rel_tol * b_norm;
    for it in 1..=opts.max_iters {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::NotPositiveDefinite(format!(
                "conjugate gradient curvature {pap} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        let r_norm = dot(&r, &r).sqrt();
        if !r_norm.is_finite() {
            return Err(Error::NonFinite("conjugate gradient residual".into()));
        }
        if r_norm <= target {
            for v in &mut x {
                *v = *v * scale;
            }
            return Ok((
                x,
                CgStats {
                    iterations: it,
                    rel_residual: r_norm / b_norm,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let r_norm = dot(&r, &r).sqrt();
    Err(Error::NoConvergence {
        solver: "conjugate gradient",
        iterations: opts.max_iters,
        residual: (r_norm / b_norm).to_f64_lossy(),
    })
}

/// Dense row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], x))
            .collect()
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    pub fn cholesky(&self) -> Result<Cholesky<T>> {
        let n = self.n;
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut s = self[(j, j)];
            for k in 0..j {
                s = s - l[j * n + k] * l[j * n + k];
            }
            if !(s > T::zero()) {
                return Err(Error::NotPositiveDefinite(format!(
                    "pivot {j} of {n} is {s}"
                )));
            }
            let d = s.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Cholesky { n, l })
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular factor `A = L L^T`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}
