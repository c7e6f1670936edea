//! Snapshot of the coupled system at one instant.

use crate::director::DirectorState;
use crate::error::{Error, Result};
use crate::field::{check_grids, BoundarySpec, ScalarField, VectorField};
use crate::galerkin::GalerkinBasis;
use crate::grid::Grid;
use crate::ops::gradient;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct FlowState<T> {
    pub t: T,
    pub rho: ScalarField<T>,
    /// Galerkin coefficients of `u`, when the velocity lives in a basis.
    pub coeffs: Option<Vec<T>>,
    pub u: VectorField<T>,
    /// `grad_u[c]` is the gradient of velocity component `c`.
    pub grad_u: Vec<VectorField<T>>,
    pub director: DirectorState<T>,
}

impl<T: Real> FlowState<T> {
    /// State whose velocity is `sum_i coeffs_i eta_i`; the velocity gradient
    /// is the exact gradient of the modes.
    pub fn from_coeffs(
        t: T,
        rho: ScalarField<T>,
        coeffs: Vec<T>,
        basis: &GalerkinBasis<T>,
        director: DirectorState<T>,
    ) -> Result<Self> {
        check_grids(rho.grid(), basis.grid())?;
        check_grids(rho.grid(), director.grid())?;
        if coeffs.len() != basis.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                basis.len(),
                coeffs.len()
            )));
        }
        let u = basis.realize(&coeffs);
        let grad_u = basis.realize_gradient(&coeffs);
        Ok(Self {
            t,
            rho,
            coeffs: Some(coeffs),
            u,
            grad_u,
            director,
        })
    }

    /// State with a grid velocity; its gradient is taken by central
    /// differences with zero boundary values.
    pub fn from_fields(
        t: T,
        rho: ScalarField<T>,
        u: VectorField<T>,
        director: DirectorState<T>,
    ) -> Result<Self> {
        check_grids(rho.grid(), u.grid())?;
        check_grids(rho.grid(), director.grid())?;
        let grad_u = (0..u.dim())
            .map(|c| {
                let comp = ScalarField::from_vec(u.grid(), u.component(c).to_vec())
                    .expect("shape preserved");
                gradient(&comp, &BoundarySpec::ZeroDirichlet)
            })
            .collect();
        Ok(Self {
            t,
            rho,
            coeffs: None,
            u,
            grad_u,
            director,
        })
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        self.rho.grid()
    }
}
