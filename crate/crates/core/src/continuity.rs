//! Regularized continuity equation `rho_t + div(rho u) = eps Delta rho`
//! with a zero normal derivative on the boundary.
//!
//! A step is an explicit upwind flux update followed by an implicit
//! diffusion solve. Face velocities are the average of the two adjacent
//! cells and boundary faces carry no flux, so both stages conserve mass
//! exactly up to rounding.

use crate::error::{Error, Result};
use crate::field::{check_grids, ComponentBc, ScalarField, VectorField};
use crate::grid::Grid;
use crate::linalg::{conjugate_gradient, CgOptions};
use crate::ops::{for_each_cell, laplacian_component};
use crate::scalar::Real;

/// Artificial viscosity `eps` and artificial pressure `delta * rho^beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizationParams<T> {
    pub eps: T,
    pub delta: T,
    pub beta: T,
}

impl<T: Real> RegularizationParams<T> {
    pub fn new(eps: T, delta: T, beta: T) -> Result<Self> {
        let p = Self { eps, delta, beta };
        if !(eps >= T::zero()) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "eps must be nonnegative, got {eps}"
            )));
        }
        if !(delta >= T::zero()) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "delta must be nonnegative, got {delta}"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta must be finite, got {beta}"
            )));
        }
        Ok(p)
    }

    /// No regularization at all.
    pub fn none() -> Self {
        Self {
            eps: T::zero(),
            delta: T::zero(),
            beta: T::lit(5.0),
        }
    }

    /// Checks `beta` against the adiabatic exponent. With `delta > 0`,
    /// `beta > max(4, gamma)` is required; `beta <= 6 gamma / (2 gamma - 3)`
    /// is accepted but returned as a warning, since the vanishing viscosity
    /// limit asks for more integrability than that.
    pub fn check_exponents(&self, gamma: T) -> Result<Option<String>> {
        if self.delta == T::zero() {
            return Ok(None);
        }
        let floor = T::lit(4.0).max(gamma);
        if !(self.beta > floor) {
            return Err(Error::Config(format!(
                "beta = {} must exceed max(4, gamma) = {floor} when delta > 0",
                self.beta
            )));
        }
        let two_gamma_minus_3 = T::lit(2.0) * gamma - T::lit(3.0);
        if two_gamma_minus_3 > T::zero() {
            let limit = T::lit(6.0) * gamma / two_gamma_minus_3;
            if self.beta <= limit {
                return Ok(Some(format!(
                    "beta = {} does not exceed 6 gamma / (2 gamma - 3) = {limit}; \
                     the vanishing viscosity limit assumes it does",
                    self.beta
                )));
            }
        }
        Ok(None)
    }
}

/// Velocity component `axis` on the interior face above cell `idx`.
#[inline]
fn face_velocity<T: Real>(ua: &[T], idx: usize, s: usize) -> T {
    (ua[idx] + ua[idx + s]) * T::lit(0.5)
}

/// Conservative upwind `div(q u)`: face fluxes `w q_upwind`, zero on the
/// boundary.
pub fn upwind_flux_divergence<T: Real>(grid: &Grid<T>, q: &[T], u: &VectorField<T>) -> Vec<T> {
    let mut out = vec![T::zero(); q.len()];
    for axis in 0..grid.dim() {
        let inv = T::one() / grid.spacing(axis);
        let s = grid.stride(axis);
        let n = grid.count(axis);
        let ua = u.component(axis);
        for_each_cell(grid, |idx, m| {
            if m[axis] + 1 < n {
                let w = face_velocity(ua, idx, s);
                let flux = if w > T::zero() {
                    w * q[idx]
                } else {
                    w * q[idx + s]
                } * inv;
                out[idx] = out[idx] + flux;
                out[idx + s] = out[idx + s] - flux;
            }
        });
    }
    out
}

/// `div u` from face-averaged velocities, zero normal velocity on the
/// boundary. Matches [`upwind_flux_divergence`] with `q = 1`.
pub fn face_divergence<T: Real>(u: &VectorField<T>) -> Vec<T> {
    let grid = u.grid();
    let ones = vec![T::one(); grid.cell_count()];
    upwind_flux_divergence(grid, &ones, u)
}

/// Largest outflow rate `sum_faces max(w_out, 0) / h` over all cells. The
/// upwind update keeps `rho >= 0` iff `dt * rate <= 1`.
pub fn outflow_rate<T: Real>(u: &VectorField<T>) -> T {
    let grid = u.grid();
    let mut rate = vec![T::zero(); grid.cell_count()];
    for axis in 0..grid.dim() {
        let inv = T::one() / grid.spacing(axis);
        let s = grid.stride(axis);
        let n = grid.count(axis);
        let ua = u.component(axis);
        for_each_cell(grid, |idx, m| {
            if m[axis] + 1 < n {
                let w = face_velocity(ua, idx, s);
                if w > T::zero() {
                    rate[idx] = rate[idx] + w * inv;
                } else {
                    rate[idx + s] = rate[idx + s] - w * inv;
                }
            }
        });
    }
    rate.into_iter().fold(T::zero(), T::max)
}

const TINY: f64 = 1e-12;

/// `safety * min h / (max |u| + tiny)`.
pub fn cfl_dt<T: Real>(u: &VectorField<T>, safety: T) -> Result<T> {
    if !(safety > T::zero() && safety <= T::one()) {
        return Err(Error::InvalidArgument(format!(
            "CFL safety must lie in (0, 1], got {safety}"
        )));
    }
    Ok(safety * u.grid().min_spacing() / (u.max_norm() + T::lit(TINY)))
}

/// Largest step the continuity update accepts for `u`.
pub fn max_stable_dt<T: Real>(u: &VectorField<T>) -> T {
    let cfl = u.grid().min_spacing() / (u.max_norm() + T::lit(TINY));
    let rate = outflow_rate(u);
    if rate > T::zero() {
        cfl.min(T::one() / rate)
    } else {
        cfl
    }
}

/// Diagonal of `I - c Delta` for one boundary kind.
pub(crate) fn shifted_laplacian_diagonal<T: Real>(
    grid: &Grid<T>,
    c: T,
    bc: ComponentBc<'_, T>,
) -> Vec<T> {
    let mut diag = vec![T::one(); grid.cell_count()];
    let edge = if bc.is_dirichlet() {
        T::lit(3.0)
    } else {
        T::one()
    };
    for axis in 0..grid.dim() {
        let h = grid.spacing(axis);
        let inv = c / (h * h);
        let n = grid.count(axis);
        for_each_cell(grid, |idx, m| {
            let lo = if m[axis] == 0 { edge } else { T::one() };
            let hi = if m[axis] + 1 == n { edge } else { T::one() };
            diag[idx] = diag[idx] + (lo + hi) * inv;
        });
    }
    diag
}

/// Solves `(I - c Delta_bc) x = b` where the ghost rule of `bc` is taken
/// homogeneous (the increment of a field with fixed boundary data).
pub(crate) fn solve_shifted<T: Real>(
    grid: &Grid<T>,
    c: T,
    bc: ComponentBc<'_, T>,
    b: &[T],
    opts: CgOptions<T>,
) -> Result<Vec<T>> {
    let hom = if bc.is_dirichlet() {
        ComponentBc::Zero
    } else {
        ComponentBc::Neumann
    };
    let diag = shifted_laplacian_diagonal(grid, c, hom);
    let apply = |x: &[T], out: &mut [T]| {
        let lap = laplacian_component(grid, x, hom);
        for ((o, &xi), li) in out.iter_mut().zip(x).zip(lap) {
            *o = xi - c * li;
        }
    };
    conjugate_gradient(apply, &diag, b, opts).map(|(x, _)| x)
}

/// Relative undershoot below zero tolerated in a density.
pub const NEGATIVE_DENSITY_TOLERANCE: f64 = 1e-14;

pub(crate) fn check_density<T: Real>(rho: &ScalarField<T>) -> Result<()> {
    if !rho.is_finite() {
        return Err(Error::NonFinite("density".into()));
    }
    let (min, max) = (rho.min(), rho.max());
    if min < -T::lit(NEGATIVE_DENSITY_TOLERANCE) * max.max(T::zero()) {
        return Err(Error::NegativeDensity {
            min: min.to_f64_lossy(),
        });
    }
    Ok(())
}

/// One step of the regularized continuity equation.
pub fn continuity_step<T: Real>(
    rho: &ScalarField<T>,
    u: &VectorField<T>,
    eps: T,
    dt: T,
) -> Result<ScalarField<T>> {
    continuity_step_with(rho, u, eps, dt, CgOptions::default())
}

pub fn continuity_step_with<T: Real>(
    rho: &ScalarField<T>,
    u: &VectorField<T>,
    eps: T,
    dt: T,
    cg: CgOptions<T>,
) -> Result<ScalarField<T>> {
    check_grids(rho.grid(), u.grid())?;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(eps >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "eps must be nonnegative, got {eps}"
        )));
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("velocity".into()));
    }
    check_density(rho)?;
    let limit = max_stable_dt(u);
    if dt > limit {
        return Err(Error::Cfl {
            dt: dt.to_f64_lossy(),
            limit: limit.to_f64_lossy(),
        });
    }
    let grid = rho.grid();
    let flux = upwind_flux_divergence(grid, rho.values(), u);
    let mut next: Vec<T> = rho
        .values()
        .iter()
        .zip(&flux)
        .map(|(&r, &f)| r - dt * f)
        .collect();

    if eps > T::zero() {
        let c = dt * eps;
        let lap = laplacian_component(grid, &next, ComponentBc::Neumann);
        let rhs: Vec<T> = lap.into_iter().map(|l| c * l).collect();
        let mut inc = solve_shifted(grid, c, ComponentBc::Neumann, &rhs, cg)?;
        // The exact increment has zero mean: constants are eigenvectors of
        // the operator and the right-hand side is orthogonal to them.
        let mean = inc.iter().copied().sum::<T>() / T::from_usize_lossy(inc.len());
        for (x, i) in next.iter_mut().zip(inc.iter_mut()) {
            *x = *x + (*i - mean);
        }
    }
    let out = ScalarField::from_vec(grid, next)?;
    check_density(&out)?;
    Ok(out)
}

/// Cellwise defect `(rho1 - rho0) / dt + div_up(rho0 u) - eps Delta rho1` of
/// one continuity step; zero up to the linear solver tolerance for the
/// output of [`continuity_step`].
pub fn continuity_defect<T: Real>(
    rho0: &ScalarField<T>,
    rho1: &ScalarField<T>,
    u: &VectorField<T>,
    eps: T,
    dt: T,
) -> Result<ScalarField<T>> {
    check_grids(rho0.grid(), rho1.grid())?;
    check_grids(rho0.grid(), u.grid())?;
    let grid = rho0.grid();
    let flux = upwind_flux_divergence(grid, rho0.values(), u);
    let lap = laplacian_component(grid, rho1.values(), ComponentBc::Neumann);
    let out = (0..grid.cell_count())
        .map(|i| (rho1.values()[i] - rho0.values()[i]) / dt + flux[i] - eps * lap[i])
        .collect();
    ScalarField::from_vec(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid<f64> {
        Grid::unit(2, n).unwrap()
    }

    fn swirl(g: &Grid<f64>, amp: f64) -> VectorField<f64> {
        VectorField::from_fn(g, |x| {
            let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
            [
                amp * sx * sx * (2.0 * PI * x[1]).sin(),
                -amp * sy * sy * (2.0 * PI * x[0]).sin(),
                0.0,
            ]
        })
    }

    #[test]
    fn rest_is_identity() {
        let g = grid(16);
        let rho = ScalarField::constant(&g, 1.3);
        let u = VectorField::zeros(&g);
        let out = continuity_step(&rho, &u, 0.1, 0.01).unwrap();
        assert_eq!(out, rho);
        let bumpy = ScalarField::from_fn(&g, |x| 1.0 + x[0] * x[1]);
        assert_eq!(continuity_step(&bumpy, &u, 0.0, 0.01).unwrap(), bumpy);
    }

    #[test]
    fn diffusion_conserves_mass_and_lowers_peak() {
        let g = grid(32);
        let mut rho = ScalarField::constant(&g, 0.0);
        rho.values_mut()[g.index([10, 20, 0])] = 100.0;
        let u = VectorField::zeros(&g);
        let out = continuity_step(&rho, &u, 0.05, 0.01).unwrap();
        let (m0, m1) = (rho.integral(), out.integral());
        assert!(((m1 - m0) / m0).abs() < 1e-12);
        assert!(out.max() < rho.max());
        assert!(out.min() >= -1e-14 * out.max());
    }

    #[test]
    fn transport_conserves_mass_and_positivity() {
        let g = grid(32);
        let rho = ScalarField::from_fn(&g, |x| {
            (-40.0 * ((x[0] - 0.3).powi(2) + (x[1] - 0.6).powi(2))).exp()
        });
        let u = swirl(&g, 1.5);
        let dt = 0.9 * max_stable_dt(&u);
        let mut r = rho.clone();
        for _ in 0..50 {
            r = continuity_step(&r, &u, 0.0, dt).unwrap();
            assert!(r.min() >= 0.0);
        }
        assert!(((r.integral() - rho.integral()) / rho.integral()).abs() < 1e-12);
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let g = grid(16);
        let rho = ScalarField::constant(&g, 1.0);
        let u = VectorField::from_fn(&g, |_| [2.0, 0.0, 0.0]);
        assert!(matches!(
            continuity_step(&rho, &u, 0.0, 1.0),
            Err(Error::Cfl { .. })
        ));
    }

    #[test]
    fn cfl_dt_arithmetic() {
        let g = grid(64);
        let u = VectorField::from_fn(&g, |_| [2.0, 0.0, 0.0]);
        let dt = cfl_dt(&u, 0.5).unwrap();
        assert!((dt - 1.0 / 256.0).abs() < 1e-12);
        assert!(cfl_dt(&u, 0.0).is_err());
        assert!(cfl_dt(&u, 1.5).is_err());
        let zero = VectorField::zeros(&g);
        assert!(cfl_dt(&zero, 1.0).unwrap() > 1e9);
    }

    #[test]
    fn step_has_vanishing_defect() {
        let g = grid(24);
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.3 * (PI * x[0]).cos());
        let u = swirl(&g, 0.7);
        let dt = 0.5 * max_stable_dt(&u);
        let out = continuity_step(&rho, &u, 0.02, dt).unwrap();
        let defect = continuity_defect(&rho, &out, &u, 0.02, dt).unwrap();
        let scale = rho.max() / dt;
        assert!(defect.values().iter().all(|v| v.abs() < 1e-9 * scale));
    }

    #[test]
    fn manufactured_transport_converges() {
        // rho = 1 + 0.5 sin(pi x) sin(pi y) carried by a divergence free
        // swirl; the exact time derivative is -u . grad rho.
        let err = |n: usize| {
            let g = grid(n);
            let rho =
                ScalarField::from_fn(&g, |x| 1.0 + 0.5 * (PI * x[0]).sin() * (PI * x[1]).sin());
            let u = swirl(&g, 1.0);
            let dt = 0.25 / n as f64;
            let out = continuity_step(&rho, &u, 0.0, dt).unwrap();
            let mut worst = 0.0f64;
            for idx in 0..g.cell_count() {
                let x = g.center(g.multi_index(idx));
                let (gx, gy) = (
                    0.5 * PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                    0.5 * PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
                );
                let w = u.at(idx);
                let exact = -(w[0] * gx + w[1] * gy);
                let approx = (out.values()[idx] - rho.values()[idx]) / dt;
                worst = worst.max((approx - exact).abs());
            }
            worst
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < e1 && e1 / e2 > 1.7, "{e1} {e2}");
    }

    #[test]
    fn exponent_checks() {
        let r = RegularizationParams::new(0.01, 0.01, 13.0).unwrap();
        assert_eq!(r.check_exponents(2.0).unwrap(), None);
        let w = RegularizationParams::new(0.01, 0.01, 5.0).unwrap();
        assert!(w.check_exponents(5.0 / 3.0).unwrap().is_some());
        let bad = RegularizationParams::new(0.01, 0.01, 3.0).unwrap();
        assert!(bad.check_exponents(2.0).is_err());
        assert!(RegularizationParams::new(-1.0, 0.0, 5.0).is_err());
        let off = RegularizationParams::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(off.check_exponents(2.0).unwrap(), None);
    }
}
