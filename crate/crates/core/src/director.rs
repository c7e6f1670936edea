//! Director flow `d_t + u . grad d = Delta d - f(d)` with Dirichlet data,
//! the steady problem `Delta d = f(d)`, and a probe of how the solution
//! depends on the advecting velocity.

use crate::continuity::solve_shifted;
use crate::error::{Error, Result};
use crate::field::{
    check_grids, BoundarySpec, ComponentBc, DirectorField, DirichletTrace, VectorField,
};
use crate::grid::Grid;
use crate::linalg::CgOptions;
use crate::ops::{
    advect_director, director_laplacian, face_seminorm_sq, for_each_cell, l2_norm_director,
    laplacian_component,
};
use crate::penalty::Penalty;
use crate::scalar::Real;

/// A director field together with its boundary data.
#[derive(Clone, Debug)]
pub struct DirectorState<T> {
    d: DirectorField<T>,
    bc: BoundarySpec<T>,
}

impl<T: Real> DirectorState<T> {
    pub fn new(d: DirectorField<T>, trace: DirichletTrace<T>) -> Result<Self> {
        check_grids(d.grid(), trace.grid())?;
        if trace.components() != 3 {
            return Err(Error::InvalidArgument(format!(
                "director trace needs 3 components, got {}",
                trace.components()
            )));
        }
        if !d.is_finite() {
            return Err(Error::NonFinite("director".into()));
        }
        Ok(Self {
            d,
            bc: BoundarySpec::Dirichlet(trace),
        })
    }

    #[inline]
    pub fn d(&self) -> &DirectorField<T> {
        &self.d
    }

    pub fn into_director(self) -> DirectorField<T> {
        self.d
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        self.d.grid()
    }

    #[inline]
    pub fn bc(&self) -> &BoundarySpec<T> {
        &self.bc
    }

    pub fn trace(&self) -> &DirichletTrace<T> {
        match &self.bc {
            BoundarySpec::Dirichlet(t) => t,
            _ => unreachable!("director states always carry a trace"),
        }
    }

    pub fn with_director(&self, d: DirectorField<T>) -> Result<Self> {
        Self::new(d, self.trace().clone())
    }

    /// `Delta d - f(d)` with the ghost values of the trace.
    pub fn residual<P: Penalty<T> + ?Sized>(&self, penalty: &P) -> DirectorField<T> {
        let mut r = director_laplacian(&self.d, &self.bc);
        for idx in 0..self.grid().cell_count() {
            let f = penalty.force(self.d.at(idx));
            let l = r.at(idx);
            r.set(idx, [l[0] - f[0], l[1] - f[1], l[2] - f[2]]);
        }
        r
    }

    /// Squared `H^1` seminorm against the trace.
    pub fn grad_norm_sq(&self) -> T {
        (0..3)
            .map(|k| face_seminorm_sq(self.grid(), self.d.component(k), self.bc.component(k)))
            .sum()
    }
}

/// Largest upwind rate `sum_a |u_a| / h_a`, counting a boundary cell's
/// half-cell distance to its face twice.
pub fn advection_rate<T: Real>(u: &VectorField<T>) -> T {
    let g = u.grid();
    let mut worst = T::zero();
    for_each_cell(g, |idx, m| {
        let mut rate = T::zero();
        for axis in 0..g.dim() {
            let w = u.component(axis)[idx];
            let at_face =
                (w > T::zero() && m[axis] == 0) || (w < T::zero() && m[axis] + 1 == g.count(axis));
            let k = if at_face { T::lit(2.0) } else { T::one() };
            rate = rate + k * w.abs() / g.spacing(axis);
        }
        worst = worst.max(rate);
    });
    worst
}

/// Semi-implicit step: solves
/// `(I - dt Delta) d_new = d_old - dt (u . grad d_old + f(d_old))`
/// componentwise, written for the increment `d_new - d_old` so that a
/// steady state is reproduced without drift.
pub fn director_step<T: Real, P: Penalty<T> + ?Sized>(
    state: &DirectorState<T>,
    u: &VectorField<T>,
    penalty: &P,
    dt: T,
) -> Result<DirectorState<T>> {
    director_step_with(state, u, penalty, dt, CgOptions::default())
}

pub fn director_step_with<T: Real, P: Penalty<T> + ?Sized>(
    state: &DirectorState<T>,
    u: &VectorField<T>,
    penalty: &P,
    dt: T,
    cg: CgOptions<T>,
) -> Result<DirectorState<T>> {
    let g = state.grid();
    check_grids(g, u.grid())?;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("velocity".into()));
    }
    let rate = advection_rate(u);
    if dt * rate > T::one() {
        return Err(Error::Cfl {
            dt: dt.to_f64_lossy(),
            limit: (T::one() / rate).to_f64_lossy(),
        });
    }
    let d = &state.d;
    let adv = advect_director(d, &state.bc, u)?;
    let mut comps: [Vec<T>; 3] = Default::default();
    for (k, out) in comps.iter_mut().enumerate() {
        let bc = state.bc.component(k);
        let lap = laplacian_component(g, d.component(k), bc);
        let rhs: Vec<T> = (0..g.cell_count())
            .map(|idx| {
                let f = penalty.force(d.at(idx))[k];
                dt * (lap[idx] - adv.component(k)[idx] - f)
            })
            .collect();
        let inc = solve_shifted(g, dt, bc, &rhs, cg)?;
        *out = d
            .component(k)
            .iter()
            .zip(inc)
            .map(|(&a, b)| a + b)
            .collect();
    }
    let next = DirectorField::from_components(g, comps)?;
    if !next.is_finite() {
        return Err(Error::NonFinite("director after step".into()));
    }
    Ok(DirectorState {
        d: next,
        bc: state.bc.clone(),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct SteadyOptions<T> {
    /// Target `L^2` norm of `Delta d - f(d)`.
    pub tol: T,
    pub max_iters: usize,
    pub dt0: T,
    pub dt_max: T,
}

impl<T: Real> Default for SteadyOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-8),
            max_iters: 2000,
            dt0: T::lit(0.1),
            dt_max: T::lit(10.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyStats<T> {
    pub iterations: usize,
    pub residual: T,
    pub final_dt: T,
}

/// Mean of the trace over all boundary faces, used as the default guess.
fn trace_mean<T: Real>(trace: &DirichletTrace<T>) -> [T; 3] {
    let g = trace.grid();
    let mut sum = [T::zero(); 3];
    let mut count = 0usize;
    for axis in 0..g.dim() {
        for side in 0..2 {
            for slot in 0..g.face_count(axis) {
                for (k, s) in sum.iter_mut().enumerate() {
                    *s = *s + trace.value(axis, side, k, slot);
                }
                count += 1;
            }
        }
    }
    let n = T::from_usize_lossy(count);
    [sum[0] / n, sum[1] / n, sum[2] / n]
}

/// Pseudo-time marching to `Delta d = f(d)` with the given trace. The step
/// grows by 1.5 while the residual decreases and a step that increases it
/// is rejected and retried at half the size.
pub fn solve_steady_director<T: Real, P: Penalty<T> + ?Sized>(
    trace: &DirichletTrace<T>,
    penalty: &P,
    initial: Option<&DirectorField<T>>,
    opts: SteadyOptions<T>,
) -> Result<(DirectorField<T>, SteadyStats<T>)> {
    if !(opts.tol > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "steady tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let g = trace.grid();
    let d0 = match initial {
        Some(d) => d.clone(),
        None => DirectorField::constant(g, trace_mean(trace)),
    };
    let mut state = DirectorState::new(d0, trace.clone())?;
    let zero = VectorField::zeros(g);
    let mut res = l2_norm_director(&state.residual(penalty));
    let mut dt = opts.dt0;
    let floor = T::lit(1e-12);
    for it in 0..opts.max_iters {
        if res <= opts.tol {
            return Ok((
                state.d,
                SteadyStats {
                    iterations: it,
                    residual: res,
                    final_dt: dt,
                },
            ));
        }
        let cand = director_step(&state, &zero, penalty, dt)?;
        let r = l2_norm_director(&cand.residual(penalty));
        if r < res {
            state = cand;
            res = r;
            dt = (dt * T::lit(1.5)).min(opts.dt_max);
        } else {
            dt = dt * T::lit(0.5);
            if dt < floor {
                break;
            }
        }
    }
    if res <= opts.tol {
        return Ok((
            state.d,
            SteadyStats {
                iterations: opts.max_iters,
                residual: res,
                final_dt: dt,
            },
        ));
    }
    Err(Error::NoConvergence {
        solver: "steady director",
        iterations: opts.max_iters,
        residual: res.to_f64_lossy(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorProbe<T> {
    /// `max |u1 - u2|` over cells.
    pub velocity_distance: T,
    /// `sup_t ||grad (d1 - d2)||_{L^2}`.
    pub sup_grad_distance: T,
    /// `int_0^T ||Delta (d1 - d2)||^2_{L^2} dt`.
    pub laplacian_distance: T,
}

/// Evolves `d[u1]` and `d[u2]` from the same state up to `t_end` and measures
/// how far apart they drift.
pub fn probe_solution_operator_continuity<T: Real, P: Penalty<T> + ?Sized>(
    u1: &VectorField<T>,
    u2: &VectorField<T>,
    initial: &DirectorState<T>,
    penalty: &P,
    t_end: T,
    dt: T,
) -> Result<OperatorProbe<T>> {
    check_grids(u1.grid(), u2.grid())?;
    check_grids(u1.grid(), initial.grid())?;
    if !(dt > T::zero()) || !(t_end >= T::zero()) {
        return Err(Error::InvalidArgument(
            "probe needs dt > 0 and t_end >= 0".into(),
        ));
    }
    let g = initial.grid();
    let velocity_distance = u1.sub(u2)?.max_norm();
    let zero_bc = BoundarySpec::ZeroDirichlet;
    let mut a = initial.clone();
    let mut b = initial.clone();
    let mut sup = T::zero();
    let mut integral = T::zero();
    let mut t = T::zero();
    let slack = dt * T::lit(1e-9);
    while t < t_end - slack {
        let h = dt.min(t_end - t);
        a = director_step(&a, u1, penalty, h)?;
        b = director_step(&b, u2, penalty, h)?;
        t = t + h;
        let diff = a.d.sub(&b.d)?;
        let grad_sq: T = (0..3)
            .map(|k| face_seminorm_sq(g, diff.component(k), ComponentBc::Zero))
            .sum();
        sup = sup.max(grad_sq.sqrt());
        let lap = director_laplacian(&diff, &zero_bc);
        let l2 = l2_norm_director(&lap);
        integral = integral + h * l2 * l2;
    }
    Ok(OperatorProbe {
        velocity_distance,
        sup_grad_distance: sup,
        laplacian_distance: integral,
    })
}
