//! Faedo–Galerkin momentum update.
//!
//! With `M_rho = int rho eta_i . eta_j` and `K = int grad eta_i : grad eta_j`
//! one step solves
//!
//! ```text
//! (M_rho_new + dt mu K) c_new = M_rho_old c_old + dt F
//! ```
//!
//! where `F` collects convection, pressure and artificial friction at the
//! old state and the elastic forcing of the new director. Convection and
//! pressure are integrated by parts onto the modes.

use crate::continuity::RegularizationParams;
use crate::director::DirectorState;
use crate::error::{Error, Result};
use crate::field::{check_grids, BoundarySpec, ScalarField, VectorField};
use crate::galerkin::GalerkinBasis;
use crate::ops::{ericksen_force, gradient};
use crate::penalty::Penalty;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams<T> {
    /// Pressure constant in `P = a rho^gamma`.
    pub a: T,
    pub gamma: T,
    /// Viscosity.
    pub mu: T,
    /// Elastic coupling.
    pub lambda: T,
    /// Director relaxation rate; only `1` is supported.
    pub theta: T,
}

impl<T: Real> FluidParams<T> {
    pub fn new(a: T, gamma: T, mu: T, lambda: T) -> Result<Self> {
        let p = Self {
            a,
            gamma,
            mu,
            lambda,
            theta: T::one(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > T::lit(1.5)) {
            return Err(Error::Config(format!(
                "gamma must exceed 3/2, got {}",
                self.gamma
            )));
        }
        if !(self.a > T::zero()) {
            return Err(Error::Config(format!("a must be positive, got {}", self.a)));
        }
        if !(self.mu > T::zero()) {
            return Err(Error::Config(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if !(self.lambda > T::zero()) {
            return Err(Error::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.theta != T::one() {
            return Err(Error::Config(format!(
                "only theta = 1 is supported, got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// `a rho^gamma + delta rho^beta`.
    #[inline]
    pub fn pressure(&self, reg: &RegularizationParams<T>, rho: T) -> T {
        let r = rho.max(T::zero());
        let mut p = self.a * r.powf(self.gamma);
        if reg.delta > T::zero() {
            p = p + reg.delta * r.powf(reg.beta);
        }
        p
    }
}

impl<T: Real> Default for FluidParams<T> {
    fn default() -> Self {
        Self {
            a: T::one(),
            gamma: T::lit(2.0),
            mu: T::one(),
            lambda: T::one(),
            theta: T::one(),
        }
    }
}

/// Coefficients of a momentum step together with the relative residual of
/// the Galerkin equations recomputed by direct quadrature.
#[derive(Clone, Debug)]
pub struct MomentumUpdate<T> {
    pub coeffs: Vec<T>,
    pub residual: T,
}

/// Coefficients `c` with `M_rho c = int m . eta_i`.
pub fn initial_coefficients<T: Real>(
    basis: &GalerkinBasis<T>,
    rho: &ScalarField<T>,
    momentum: &VectorField<T>,
) -> Result<Vec<T>> {
    let rhs = basis.load(momentum)?;
    let m = basis.mass_block(rho)?;
    if rhs.iter().all(|&v| v == T::zero()) {
        return Ok(rhs);
    }
    let factor = m.cholesky()?;
    Ok(basis.solve_block(&factor, &rhs))
}

/// Explicit part `F` of the Galerkin system for the given old state.
pub fn momentum_forcing<T: Real, P: Penalty<T> + ?Sized>(
    basis: &GalerkinBasis<T>,
    rho_old: &ScalarField<T>,
    u_old: &VectorField<T>,
    grad_u_old: &[VectorField<T>],
    d_new: &DirectorState<T>,
    params: &FluidParams<T>,
    reg: &RegularizationParams<T>,
    penalty: &P,
) -> Result<Vec<T>> {
    let g = basis.grid();
    check_grids(g, rho_old.grid())?;
    check_grids(g, u_old.grid())?;
    check_grids(g, d_new.grid())?;
    let dim = g.dim();
    let n = g.cell_count();
    let rho = rho_old.values();

    let conv: Vec<Vec<Vec<T>>> = (0..dim)
        .map(|c| {
            (0..dim)
                .map(|b| {
                    let (uc, ub) = (u_old.component(c), u_old.component(b));
                    (0..n).map(|i| rho[i] * uc[i] * ub[i]).collect()
                })
                .collect()
        })
        .collect();
    let mut f = basis.gradient_load(&conv);

    // The midpoint sums of the mode divergences vanish, so a constant
    // pressure does no work; removing the mean keeps that exact in
    // floating point.
    let mut p: Vec<T> = rho.iter().map(|&r| params.pressure(reg, r)).collect();
    let lo = p.iter().copied().fold(T::infinity(), T::min);
    let mean = lo + p.iter().map(|&v| v - lo).sum::<T>() / T::from_usize_lossy(n);
    for v in &mut p {
        *v = *v - mean;
    }
    for (fi, pi) in f.iter_mut().zip(basis.divergence_load(&p)) {
        *fi = *fi + pi;
    }

    if reg.eps > T::zero() {
        let grad_rho = gradient(rho_old, &BoundarySpec::Neumann);
        let comps = (0..dim)
            .map(|c| {
                (0..n)
                    .map(|i| {
                        let s: T = (0..dim)
                            .map(|b| grad_u_old[c].component(b)[i] * grad_rho.component(b)[i])
                            .sum();
                        -reg.eps * s
                    })
                    .collect()
            })
            .collect();
        let friction = VectorField::from_components(g, comps)?;
        for (fi, li) in f.iter_mut().zip(basis.load(&friction)?) {
            *fi = *fi + li;
        }
    }

    let elastic = ericksen_force(d_new.d(), d_new.bc(), penalty).scaled(-params.lambda);
    for (fi, li) in f.iter_mut().zip(basis.load(&elastic)?) {
        *fi = *fi + li;
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("momentum forcing".into()));
    }
    Ok(f)
}

/// One backward-Euler step of the Galerkin momentum equation.
#[allow(clippy::too_many_arguments)]
pub fn momentum_step<T: Real, P: Penalty<T> + ?Sized>(
    rho_old: &ScalarField<T>,
    rho_new: &ScalarField<T>,
    coeffs_old: &[T],
    d_new: &DirectorState<T>,
    params: &FluidParams<T>,
    reg: &RegularizationParams<T>,
    basis: &GalerkinBasis<T>,
    penalty: &P,
    dt: T,
) -> Result<MomentumUpdate<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if coeffs_old.len() != basis.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} coefficients, got {}",
            basis.len(),
            coeffs_old.len()
        )));
    }
    check_grids(basis.grid(), rho_new.grid())?;
    let u_old = basis.realize(coeffs_old);
    let grad_u_old = basis.realize_gradient(coeffs_old);
    let f = momentum_forcing(
        basis,
        rho_old,
        &u_old,
        &grad_u_old,
        d_new,
        params,
        reg,
        penalty,
    )?;
    let m_old = basis.mass_block(rho_old)?;
    let m_new = basis.mass_block(rho_new)?;
    let lhs = m_new.add_scaled(dt * params.mu, basis.stiffness_block());
    let mut rhs = basis.apply_block(&m_old, coeffs_old);
    for (r, fi) in rhs.iter_mut().zip(&f) {
        *r = *r + dt * *fi;
    }
    let factor = lhs.cholesky()?;
    let coeffs = basis.solve_block(&factor, &rhs);
    if coeffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("velocity coefficients".into()));
    }
    // Size of the individual contributions to the pressure and convection
    // integrals, which cancel almost completely near rest.
    let wave = (0..basis.grid().dim())
        .map(|a| T::from_usize_lossy(basis.modes_per_axis()) * T::PI() / basis.grid().extent(a))
        .fold(T::zero(), T::max);
    let vol = basis.grid().cell_volume();
    let gross: T = (0..rho_old.values().len())
        .map(|i| {
            let r = rho_old.values()[i];
            params.pressure(reg, r) + r * u_old.at(i).iter().map(|&v| v * v).sum::<T>()
        })
        .sum::<T>()
        * vol
        * wave
        * dt;
    let residual = galerkin_residual(
        basis, rho_old, rho_new, coeffs_old, &u_old, &coeffs, &f, params.mu, dt, gross,
    )?;
    Ok(MomentumUpdate { coeffs, residual })
}

/// Relative residual of the Galerkin equations for `coeffs_new`, with every
/// matrix product replaced by quadrature of the realized velocity against
/// the modes. `floor` bounds the scale from below.
#[allow(clippy::too_many_arguments)]
pub fn galerkin_residual<T: Real>(
    basis: &GalerkinBasis<T>,
    rho_old: &ScalarField<T>,
    rho_new: &ScalarField<T>,
    coeffs_old: &[T],
    u_old: &VectorField<T>,
    coeffs_new: &[T],
    forcing: &[T],
    mu: T,
    dt: T,
    floor: T,
) -> Result<T> {
    let g = basis.grid();
    let dim = g.dim();
    let weigh = |rho: &ScalarField<T>, u: &VectorField<T>| -> Result<VectorField<T>> {
        let comps = (0..dim)
            .map(|c| {
                u.component(c)
                    .iter()
                    .zip(rho.values())
                    .map(|(&a, &r)| a * r)
                    .collect()
            })
            .collect();
        VectorField::from_components(g, comps)
    };
    let u_new = basis.realize(coeffs_new);
    let inertia_new = basis.load(&weigh(rho_new, &u_new)?)?;
    let inertia_old = basis.load(&weigh(rho_old, u_old)?)?;
    let grad = basis.realize_gradient(coeffs_new);
    let tensor: Vec<Vec<Vec<T>>> = (0..dim)
        .map(|c| (0..dim).map(|b| grad[c].component(b).to_vec()).collect())
        .collect();
    let visc = basis.gradient_load(&tensor);
    debug_assert_eq!(coeffs_old.len(), coeffs_new.len());
    let mut scale = floor;
    let mut worst = T::zero();
    for i in 0..basis.len() {
        let terms = [
            inertia_new[i],
            dt * mu * visc[i],
            inertia_old[i],
            dt * forcing[i],
        ];
        for t in terms {
            scale = scale.max(t.abs());
        }
        let r = terms[0] + terms[1] - terms[2] - terms[3];
        worst = worst.max(r.abs());
    }
    Ok(if scale > T::zero() {
        worst / scale
    } else {
        T::zero()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{DirectorField, DirichletTrace};
    use crate::galerkin::build_basis;
    use crate::grid::Grid;
    use crate::penalty::GinzburgLandau;

    fn setup(n: usize, m: usize) -> (Grid<f64>, GalerkinBasis<f64>, DirectorState<f64>) {
        let g = Grid::unit(2, n).unwrap();
        let b = build_basis(&g, m).unwrap();
        let e = [1.0, 0.0, 0.0];
        let d = DirectorState::new(
            DirectorField::constant(&g, e),
            DirichletTrace::constant(&g, e),
        )
        .unwrap();
        (g, b, d)
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let (g, b, d) = setup(16, 4);
        let rho = ScalarField::constant(&g, 1.0);
        let reg = RegularizationParams::new(0.1, 0.01, 13.0).unwrap();
        let gl = GinzburgLandau::new(1.0).unwrap();
        let c0 = vec![0.0; b.len()];
        let out = momentum_step(
            &rho,
            &rho,
            &c0,
            &d,
            &FluidParams::default(),
            &reg,
            &b,
            &gl,
            0.01,
        )
        .unwrap();
        assert!(
            out.coeffs.iter().all(|v| v.abs() < 1e-14),
            "{:?}",
            out.coeffs
        );
        assert!(out.residual <= 1e-9);
    }

    #[test]
    fn flow_leaves_high_pressure() {
        let (g, b, d) = setup(32, 6);
        let bump =
            |x: [f64; 3]| 1.0 + 0.3 * (-30.0 * ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2))).exp();
        let rho = ScalarField::from_fn(&g, bump);
        let c0 = vec![0.0; b.len()];
        let gl = GinzburgLandau::new(1.0).unwrap();
        let out = momentum_step(
            &rho,
            &rho,
            &c0,
            &d,
            &FluidParams::default(),
            &RegularizationParams::none(),
            &b,
            &gl,
            0.01,
        )
        .unwrap();
        let u = b.realize(&out.coeffs);
        let grad = gradient(&rho, &BoundarySpec::Neumann);
        let idx = g.index([20, 16, 0]);
        let dot = u.component(0)[idx] * grad.component(0)[idx]
            + u.component(1)[idx] * grad.component(1)[idx];
        assert!(dot < 0.0);
        assert!(out.residual <= 1e-9);
    }

    #[test]
    fn viscosity_damps_without_forcing() {
        let (g, b, d) = setup(16, 3);
        let rho = ScalarField::constant(&g, 1.0);
        let c0: Vec<f64> = (0..b.len())
            .map(|i| if i % 3 == 0 { 0.5 } else { -0.2 })
            .collect();
        let params = FluidParams::new(1.0, 2.0, 50.0, 1.0).unwrap();
        let out = momentum_step(
            &rho,
            &rho,
            &c0,
            &d,
            &params,
            &RegularizationParams::none(),
            &b,
            &gl(),
            0.01,
        )
        .unwrap();
        assert!(b.gram_norm_sq(&out.coeffs) < b.gram_norm_sq(&c0));
        assert!(out.residual <= 1e-9);
    }

    fn gl() -> GinzburgLandau<f64> {
        GinzburgLandau::new(1.0).unwrap()
    }

    #[test]
    fn initial_coefficients_reproduce_projected_momentum() {
        let (g, b, _) = setup(16, 3);
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.5 * x[0]);
        let c = (0..b.len()).map(|i| (i as f64).sin()).collect::<Vec<_>>();
        let u = b.realize(&c);
        let m = VectorField::from_components(
            &g,
            (0..2)
                .map(|k| {
                    u.component(k)
                        .iter()
                        .zip(rho.values())
                        .map(|(a, r)| a * r)
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let back = initial_coefficients(&b, &rho, &m).unwrap();
        for (x, y) in back.iter().zip(&c) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(FluidParams::new(1.0, 1.4, 1.0, 1.0).is_err());
        assert!(FluidParams::new(1.0, 2.0, 0.0, 1.0).is_err());
        assert!(FluidParams::new(1.0, 2.0, 1.0, -1.0).is_err());
        let p = FluidParams::<f64> {
            theta: 2.0,
            ..FluidParams::default()
        };
        assert!(p.validate().is_err());
    }
}
