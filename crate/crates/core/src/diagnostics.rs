//! Energy budget, mass, director bounds, renormalized continuity residuals
//! and distances to the steady state.

use crate::continuity::{face_divergence, upwind_flux_divergence, RegularizationParams};
use crate::director::{solve_steady_director, DirectorState, SteadyOptions, SteadyStats};
use crate::error::{Error, Result};
use crate::field::{
    check_grids, ComponentBc, DirectorField, DirichletTrace, ScalarField, VectorField,
};
use crate::grid::Grid;
use crate::momentum::FluidParams;
use crate::ops::{
    divergence, ericksen_force, ericksen_stress_divergence, face_seminorm_sq, for_each_cell,
    l2_norm_director, l2_norm_vector, laplacian_component, lp_norm_values,
};
use crate::penalty::Penalty;
use crate::scalar::Real;
use crate::state::FlowState;

pub fn total_mass<T: Real>(rho: &ScalarField<T>) -> T {
    rho.integral()
}

pub fn max_director_norm<T: Real>(d: &DirectorField<T>) -> T {
    d.max_norm()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyReport<T> {
    /// `int rho |u|^2 / 2`.
    pub kinetic: T,
    /// `int a rho^gamma / (gamma - 1)`.
    pub pressure_potential: T,
    /// `int delta rho^beta / (beta - 1)`.
    pub artificial_potential: T,
    /// `lambda / 2 int |grad d|^2`.
    pub elastic: T,
    /// `lambda int F(d)`.
    pub penalty_potential: T,
    pub total: T,
    /// `mu int |grad u|^2`.
    pub dissipation_viscous: T,
    /// `lambda int |Delta d - f(d)|^2`.
    pub dissipation_director: T,
    /// `eps int (a gamma rho^(gamma-2) + delta beta rho^(beta-2)) |grad rho|^2`.
    pub dissipation_artificial: T,
}

impl<T: Real> EnergyReport<T> {
    pub fn dissipation(&self) -> T {
        self.dissipation_viscous + self.dissipation_director + self.dissipation_artificial
    }

    /// Sum of the energy parts.
    pub fn parts_sum(&self) -> T {
        self.kinetic
            + self.pressure_potential
            + self.artificial_potential
            + self.elastic
            + self.penalty_potential
    }
}

/// Derivative of the pressure potential, `a gamma rho^(gamma-1) / (gamma-1)
/// + delta beta rho^(beta-1) / (beta-1)`.
fn potential_slope<T: Real>(params: &FluidParams<T>, reg: &RegularizationParams<T>, r: T) -> T {
    let r = r.max(T::zero());
    let g = params.gamma;
    let mut s = params.a * g * r.powf(g - T::one()) / (g - T::one());
    if reg.delta > T::zero() {
        let b = reg.beta;
        s = s + reg.delta * b * r.powf(b - T::one()) / (b - T::one());
    }
    s
}

/// Energy and dissipation of a state.
///
/// The gradient terms use face differences: the elastic energy is the
/// quadratic form of the director Laplacian and the artificial dissipation
/// pairs differences of the potential slope with differences of `rho` on
/// every interior face.
pub fn energy<T: Real, P: Penalty<T> + ?Sized>(
    state: &FlowState<T>,
    params: &FluidParams<T>,
    reg: &RegularizationParams<T>,
    penalty: &P,
) -> Result<EnergyReport<T>> {
    if !(params.gamma > T::one()) {
        return Err(Error::InvalidArgument(format!(
            "gamma must exceed 1 for the pressure potential, got {}",
            params.gamma
        )));
    }
    if reg.delta > T::zero() && !(reg.beta > T::one()) {
        return Err(Error::InvalidArgument(format!(
            "beta must exceed 1 for the artificial potential, got {}",
            reg.beta
        )));
    }
    let g = state.grid();
    check_grids(g, state.u.grid())?;
    check_grids(g, state.director.grid())?;
    let vol = g.cell_volume();
    let rho = state.rho.values();
    let d = state.director.d();
    let n = g.cell_count();

    let mut kinetic = T::zero();
    let mut press = T::zero();
    let mut art = T::zero();
    let mut pen = T::zero();
    let mut visc = T::zero();
    for i in 0..n {
        let r = rho[i].max(T::zero());
        let u2: T = state.u.components().iter().map(|c| c[i] * c[i]).sum();
        kinetic = kinetic + r * u2;
        press = press + r.powf(params.gamma);
        if reg.delta > T::zero() {
            art = art + r.powf(reg.beta);
        }
        pen = pen + penalty.energy(d.at(i));
        let g2: T = state
            .grad_u
            .iter()
            .flat_map(|gc| gc.components().iter().map(move |c| c[i] * c[i]))
            .sum();
        visc = visc + g2;
    }
    let half = T::lit(0.5);
    let kinetic = half * kinetic * vol;
    let pressure_potential = params.a * press * vol / (params.gamma - T::one());
    let artificial_potential = if reg.delta > T::zero() {
        reg.delta * art * vol / (reg.beta - T::one())
    } else {
        T::zero()
    };
    let grad_sq: T = (0..3)
        .map(|k| face_seminorm_sq(g, d.component(k), state.director.bc().component(k)))
        .sum();
    let elastic = half * params.lambda * grad_sq;
    let penalty_potential = params.lambda * pen * vol;
    let dissipation_viscous = params.mu * visc * vol;
    let residual = state.director.residual(penalty);
    let res_norm = l2_norm_director(&residual);
    let dissipation_director = params.lambda * res_norm * res_norm;

    let mut dart = T::zero();
    if reg.eps > T::zero() {
        for axis in 0..g.dim() {
            let h = g.spacing(axis);
            let s = g.stride(axis);
            let cnt = g.count(axis);
            let mut acc = T::zero();
            for_each_cell(g, |idx, m| {
                if m[axis] + 1 < cnt {
                    let (l, r) = (rho[idx], rho[idx + s]);
                    let ds = potential_slope(params, reg, r) - potential_slope(params, reg, l);
                    acc = acc + ds * (r - l);
                }
            });
            dart = dart + acc / (h * h);
        }
        dart = reg.eps * dart * vol;
    }

    let mut report = EnergyReport {
        kinetic,
        pressure_potential,
        artificial_potential,
        elastic,
        penalty_potential,
        total: T::zero(),
        dissipation_viscous,
        dissipation_director,
        dissipation_artificial: dart,
    };
    report.total = report.parts_sum();
    Ok(report)
}

/// Defect `|(E_{k+1} - E_k) / dt + D_{k+1}|` of the discrete energy
/// equality between consecutive states.
pub fn energy_balance_residual<T: Real>(
    before: &EnergyReport<T>,
    after: &EnergyReport<T>,
    dt: T,
) -> T {
    ((after.total - before.total) / dt + after.dissipation()).abs()
}

/// `a rho^gamma + delta rho^beta - mu div u`.
pub fn effective_viscous_flux<T: Real>(
    rho: &ScalarField<T>,
    u: &VectorField<T>,
    params: &FluidParams<T>,
    reg: &RegularizationParams<T>,
) -> Result<ScalarField<T>> {
    check_grids(rho.grid(), u.grid())?;
    let div = divergence(u);
    let out = rho
        .values()
        .iter()
        .zip(div.values())
        .map(|(&r, &dv)| params.pressure(reg, r) - params.mu * dv)
        .collect();
    ScalarField::from_vec(rho.grid(), out)
}

/// Admissible renormalizations `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Renormalization<T> {
    Identity,
    /// `T_k(z) = k T(z / k)` with `T(z) = z` on `[0, 1]`,
    /// `z - (z - 1)^2 / 4` on `[1, 3]` and `2` beyond.
    Truncation(T),
    /// `z log(z + 1e-12)`.
    EntropyLog,
}

const LOG_SHIFT: f64 = 1e-12;

impl<T: Real> Renormalization<T> {
    pub fn parse(name: &str, k: Option<T>) -> Result<Self> {
        match (name, k) {
            ("identity", _) => Ok(Self::Identity),
            ("zlogz", _) => Ok(Self::EntropyLog),
            ("truncation", Some(k)) if k > T::zero() => Ok(Self::Truncation(k)),
            ("truncation", _) => Err(Error::InvalidArgument(
                "truncation needs a positive level k".into(),
            )),
            _ => Err(Error::InvalidArgument(format!(
                "unknown renormalization `{name}`"
            ))),
        }
    }

    pub fn value(&self, z: T) -> T {
        match *self {
            Self::Identity => z,
            Self::Truncation(k) => {
                if z <= k {
                    z
                } else if z <= T::lit(3.0) * k {
                    let e = z - k;
                    z - e * e / (T::lit(4.0) * k)
                } else {
                    T::lit(2.0) * k
                }
            }
            Self::EntropyLog => z * (z + T::lit(LOG_SHIFT)).ln(),
        }
    }

    pub fn slope(&self, z: T) -> T {
        match *self {
            Self::Identity => T::one(),
            Self::Truncation(k) => {
                if z <= k {
                    T::one()
                } else if z <= T::lit(3.0) * k {
                    T::one() - (z - k) / (T::lit(2.0) * k)
                } else {
                    T::zero()
                }
            }
            Self::EntropyLog => {
                let s = z + T::lit(LOG_SHIFT);
                s.ln() + z / s
            }
        }
    }
}

/// `|int phi [(b(rho1) - b(rho0)) / dt + div_up(b(rho0) u)
///  + (b'(rho0) rho0 - b(rho0)) div u - eps b'(rho1) Delta rho1]|`
/// for one continuity step from `rho0` to `rho1`.
#[allow(clippy::too_many_arguments)]
pub fn renormalized_residual<T: Real>(
    rho0: &ScalarField<T>,
    rho1: &ScalarField<T>,
    u: &VectorField<T>,
    b: Renormalization<T>,
    test_fn: &ScalarField<T>,
    dt: T,
    eps: T,
) -> Result<T> {
    let g = rho0.grid();
    check_grids(g, rho1.grid())?;
    check_grids(g, u.grid())?;
    check_grids(g, test_fn.grid())?;
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let (r0, r1) = (rho0.values(), rho1.values());
    let b0: Vec<T> = r0.iter().map(|&z| b.value(z)).collect();
    let transport = upwind_flux_divergence(g, &b0, u);
    let lap = laplacian_component(g, r1, ComponentBc::Neumann);
    let compress = match b {
        Renormalization::Identity => None,
        _ => Some(face_divergence(u)),
    };
    let mut sum = T::zero();
    for i in 0..g.cell_count() {
        let mut v = (b.value(r1[i]) - b0[i]) / dt + transport[i] - eps * b.slope(r1[i]) * lap[i];
        if let Some(div) = &compress {
            v = v + (b.slope(r0[i]) * r0[i] - b0[i]) * div[i];
        }
        sum = sum + test_fn.values()[i] * v;
    }
    Ok((sum * g.cell_volume()).abs())
}

/// Plain weak residual `|int phi [(rho1 - rho0) / dt + div_up(rho0 u) -
/// eps Delta rho1]|` of the continuity equation.
pub fn continuity_residual<T: Real>(
    rho0: &ScalarField<T>,
    rho1: &ScalarField<T>,
    u: &VectorField<T>,
    test_fn: &ScalarField<T>,
    dt: T,
    eps: T,
) -> Result<T> {
    let defect = crate::continuity::continuity_defect(rho0, rho1, u, eps, dt)?;
    check_grids(rho0.grid(), test_fn.grid())?;
    let s: T = defect
        .values()
        .iter()
        .zip(test_fn.values())
        .map(|(&a, &b)| a * b)
        .sum();
    Ok((s * rho0.grid().cell_volume()).abs())
}

/// `int rho^(gamma + sigma)`.
pub fn density_integrability<T: Real>(rho: &ScalarField<T>, gamma: T, sigma: T) -> Result<T> {
    if !(sigma > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let e = gamma + sigma;
    Ok(rho
        .values()
        .iter()
        .map(|&r| r.max(T::zero()).powf(e))
        .sum::<T>()
        * rho.grid().cell_volume())
}

/// Constant density, zero velocity and the steady director for a given
/// mass and boundary trace.
#[derive(Clone, Debug)]
pub struct SteadyReference<T> {
    pub mass: T,
    pub rho_s: T,
    pub d_s: DirectorState<T>,
    pub stats: SteadyStats<T>,
    /// `||lambda (grad d_s)^T (Delta d_s - f(d_s))||_{L^2}`; bounded by
    /// `tol * lambda * max |grad d_s|`.
    pub force_residual: T,
    /// Bound on [`Self::force_residual`] implied by the solver tolerance.
    pub force_bound: T,
    /// `||lambda div(stress(d_s))||_{L^2}` with the stress tensor assembled
    /// and differentiated; carries the discretization error of the product
    /// rule.
    pub stress_residual: T,
}

impl<T: Real> SteadyReference<T> {
    pub fn build<P: Penalty<T> + ?Sized>(
        grid: &Grid<T>,
        mass: T,
        trace: &DirichletTrace<T>,
        penalty: &P,
        lambda: T,
        opts: SteadyOptions<T>,
    ) -> Result<Self> {
        check_grids(grid, trace.grid())?;
        let (d, stats) = solve_steady_director(trace, penalty, None, opts)?;
        Self::from_solution(
            mass,
            DirectorState::new(d, trace.clone())?,
            stats,
            penalty,
            lambda,
        )
    }

    /// Reference around an already computed steady director.
    pub fn from_solution<P: Penalty<T> + ?Sized>(
        mass: T,
        d_s: DirectorState<T>,
        stats: SteadyStats<T>,
        penalty: &P,
        lambda: T,
    ) -> Result<Self> {
        let grid = *d_s.grid();
        let force = ericksen_force(d_s.d(), d_s.bc(), penalty).scaled(lambda);
        let stress = ericksen_stress_divergence(d_s.d(), d_s.bc(), penalty).scaled(lambda);
        let grads = crate::ops::director_gradient(d_s.d(), d_s.bc());
        let mut grad_max = T::zero();
        for idx in 0..grid.cell_count() {
            for gk in &grads {
                grad_max = grad_max.max(crate::field::norm3(gk.at(idx)));
            }
        }
        // |(grad d)^T r| <= sqrt(3) max_k |grad d_k| |r|
        let force_bound = lambda * T::lit(3.0).sqrt() * grad_max * stats.residual;
        Ok(Self {
            mass,
            rho_s: mass / grid.volume(),
            force_residual: l2_norm_vector(&force),
            force_bound,
            stress_residual: l2_norm_vector(&stress),
            d_s,
            stats,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LargeTimeMetrics<T> {
    /// `||rho - rho_s||_{L^gamma}`.
    pub rho_distance: T,
    /// `||u||_{L^2}`.
    pub velocity_norm: T,
    /// `||d - d_s||_{L^2} + ||grad (d - d_s)||_{L^2}`.
    pub director_distance: T,
}

pub const MASS_MATCH_TOLERANCE: f64 = 1e-8;

pub fn large_time_metrics<T: Real>(
    state: &FlowState<T>,
    steady: &SteadyReference<T>,
    gamma: T,
) -> Result<LargeTimeMetrics<T>> {
    let g = state.grid();
    check_grids(g, steady.d_s.grid())?;
    let mass = total_mass(&state.rho);
    let scale = steady.mass.abs().max(T::min_positive_value());
    if (mass - steady.mass).abs() > T::lit(MASS_MATCH_TOLERANCE) * scale {
        return Err(Error::MassMismatch {
            state: mass.to_f64_lossy(),
            reference: steady.mass.to_f64_lossy(),
        });
    }
    let diff: Vec<T> = state
        .rho
        .values()
        .iter()
        .map(|&r| r - steady.rho_s)
        .collect();
    let rho_distance = lp_norm_values(g, &diff, gamma)?;
    let dd = state.director.d().sub(steady.d_s.d())?;
    let grad_sq: T = (0..3)
        .map(|k| face_seminorm_sq(g, dd.component(k), ComponentBc::Zero))
        .sum();
    Ok(LargeTimeMetrics {
        rho_distance,
        velocity_norm: l2_norm_vector(&state.u),
        director_distance: l2_norm_director(&dd) + grad_sq.sqrt(),
    })
}

/// Default exponent gain for [`density_integrability`].
pub fn default_integrability_sigma<T: Real>(gamma: T) -> T {
    T::lit(2.0) * gamma / T::lit(3.0) - T::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuity::{continuity_step, max_stable_dt};
    use crate::penalty::GinzburgLandau;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid<f64> {
        Grid::unit(2, n).unwrap()
    }

    fn rest(g: &Grid<f64>, rho: f64, d: [f64; 3]) -> FlowState<f64> {
        let ds = DirectorState::new(
            DirectorField::constant(g, d),
            DirichletTrace::constant(g, d),
        )
        .unwrap();
        FlowState::from_fields(
            0.0,
            ScalarField::constant(g, rho),
            VectorField::zeros(g),
            ds,
        )
        .unwrap()
    }

    #[test]
    fn mass_examples() {
        let g = grid(16);
        assert!((total_mass(&ScalarField::constant(&g, 1.0)) - 1.0).abs() < 1e-14);
        let half = Grid::<f64>::new(2, &[1.0, 0.5], &[16, 16]).unwrap();
        assert!((total_mass(&ScalarField::constant(&half, 2.0f64)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rest_state_energy() {
        let g = grid(16);
        let s = rest(&g, 1.0, [1.0, 0.0, 0.0]);
        let gl = GinzburgLandau::new(1.0).unwrap();
        let e = energy(
            &s,
            &FluidParams::default(),
            &RegularizationParams::none(),
            &gl,
        )
        .unwrap();
        assert!((e.total - 1.0).abs() < 1e-14);
        assert_eq!(e.dissipation(), 0.0);
        assert_eq!(e.total, e.parts_sum());
    }

    #[test]
    fn zero_director_penalty_energy() {
        let g = grid(16);
        let s = rest(&g, 0.0, [0.0; 3]);
        let gl = GinzburgLandau::new(1.0).unwrap();
        let e = energy(
            &s,
            &FluidParams::default(),
            &RegularizationParams::none(),
            &gl,
        )
        .unwrap();
        assert!((e.penalty_potential - 0.25).abs() < 1e-14);
        assert_eq!(e.kinetic, 0.0);
        assert_eq!(e.pressure_potential, 0.0);
    }

    #[test]
    fn all_zero_state_has_zero_energy() {
        let g = grid(16);
        let s = rest(&g, 0.0, [0.0; 3]);
        let e = energy(
            &s,
            &FluidParams::default(),
            &RegularizationParams::none(),
            &crate::penalty::NoPenalty,
        )
        .unwrap();
        assert_eq!(e, EnergyReport::default());
        let bad = FluidParams {
            gamma: 1.0,
            ..FluidParams::default()
        };
        assert!(energy(
            &s,
            &bad,
            &RegularizationParams::none(),
            &crate::penalty::NoPenalty
        )
        .is_err());
    }

    #[test]
    fn effective_flux_examples() {
        let g = grid(16);
        let rho = ScalarField::constant(&g, 1.0);
        let u = VectorField::from_fn(&g, |x| [x[0], -x[1], 0.0]);
        let f = effective_viscous_flux(
            &rho,
            &u,
            &FluidParams::default(),
            &RegularizationParams::none(),
        )
        .unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let reg = RegularizationParams::new(0.0, 0.5, 6.0).unwrap();
        let c = effective_viscous_flux(
            &ScalarField::constant(&g, 2.0),
            &VectorField::zeros(&g),
            &FluidParams::default(),
            &reg,
        )
        .unwrap();
        assert!(c
            .values()
            .iter()
            .all(|v| (v - (4.0 + 0.5 * 64.0)).abs() < 1e-12));
    }

    #[test]
    fn truncation_shape() {
        let t = Renormalization::Truncation(2.0f64);
        assert_eq!(t.value(1.5), 1.5);
        assert_eq!(t.value(6.0), 4.0);
        assert_eq!(t.value(100.0), 4.0);
        assert!(t.slope(6.0f64).abs() < 1e-15);
        // concave: slope non-increasing
        let mut last = f64::INFINITY;
        for i in 0..100 {
            let s = t.slope(i as f64 * 0.1);
            assert!(s <= last);
            last = s;
        }
        assert!(Renormalization::<f64>::parse("truncation", None).is_err());
        assert!(Renormalization::<f64>::parse("cubic", None).is_err());
    }

    fn bump_case(
        n: usize,
    ) -> (
        ScalarField<f64>,
        ScalarField<f64>,
        VectorField<f64>,
        ScalarField<f64>,
        f64,
    ) {
        let g = grid(n);
        let rho = ScalarField::from_fn(&g, |x| {
            1.0 + 0.5 * (-20.0 * ((x[0] - 0.4).powi(2) + (x[1] - 0.5).powi(2))).exp()
        });
        let u = VectorField::from_fn(&g, |x| {
            let s = (PI * x[0]).sin() * (PI * x[1]).sin();
            [s, 0.5 * s, 0.0]
        });
        let phi = ScalarField::from_fn(&g, |x| ((PI * x[0]).sin() * (PI * x[1]).sin()).powi(2));
        let dt = 0.25 * max_stable_dt(&u);
        let next = continuity_step(&rho, &u, 0.01, dt).unwrap();
        (rho, next, u, phi, dt)
    }

    #[test]
    fn identity_matches_continuity_residual() {
        let (r0, r1, u, phi, dt) = bump_case(32);
        let a =
            renormalized_residual(&r0, &r1, &u, Renormalization::Identity, &phi, dt, 0.01).unwrap();
        let b = continuity_residual(&r0, &r1, &u, &phi, dt, 0.01).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a < 1e-9);
        let high = renormalized_residual(
            &r0,
            &r1,
            &u,
            Renormalization::Truncation(10.0),
            &phi,
            dt,
            0.01,
        )
        .unwrap();
        assert!((high - a).abs() < 1e-12);
    }

    #[test]
    fn rest_density_has_zero_residual() {
        let g = grid(16);
        let rho = ScalarField::constant(&g, 1.2);
        let u = VectorField::zeros(&g);
        let phi = ScalarField::constant(&g, 1.0);
        for b in [
            Renormalization::Identity,
            Renormalization::Truncation(1.0),
            Renormalization::EntropyLog,
        ] {
            assert_eq!(
                renormalized_residual(&rho, &rho, &u, b, &phi, 0.1, 0.3).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn integrability_examples() {
        let g = grid(16);
        let one = ScalarField::constant(&g, 1.0);
        assert!((density_integrability(&one, 2.0, 0.3).unwrap() - 1.0).abs() < 1e-14);
        let two = ScalarField::constant(&g, 2.0);
        assert!((density_integrability(&two, 2.0, 1.0).unwrap() - 8.0).abs() < 1e-12);
        assert!(density_integrability(&two, 2.0, 0.0).is_err());
    }

    #[test]
    fn metrics_vanish_at_steady_state() {
        let g = grid(16);
        let trace = DirichletTrace::from_fn(&g, 3, |x| {
            let a = 0.5 * PI * x[0];
            [a.cos(), a.sin(), 0.0]
        });
        let gl = GinzburgLandau::new(1.0).unwrap();
        let steady =
            SteadyReference::build(&g, 1.0, &trace, &gl, 1.0, SteadyOptions::default()).unwrap();
        assert!(steady.force_residual <= steady.force_bound);
        let s = FlowState::from_fields(
            0.0,
            ScalarField::constant(&g, steady.rho_s),
            VectorField::zeros(&g),
            steady.d_s.clone(),
        )
        .unwrap();
        let m = large_time_metrics(&s, &steady, 2.0).unwrap();
        assert_eq!(m, LargeTimeMetrics::default());

        let pert = ScalarField::from_fn(&g, |x| 1.0 + 0.1 * (2.0 * PI * x[0]).cos());
        let p = FlowState::from_fields(
            0.0,
            pert.clone(),
            VectorField::zeros(&g),
            steady.d_s.clone(),
        )
        .unwrap();
        let m = large_time_metrics(&p, &steady, 2.0).unwrap();
        let direct = crate::ops::lp_norm(&pert.map(|r| r - 1.0), 2.0).unwrap();
        assert!((m.rho_distance - direct).abs() < 1e-14);

        let heavy = FlowState::from_fields(
            0.0,
            ScalarField::constant(&g, 2.0),
            VectorField::zeros(&g),
            steady.d_s.clone(),
        )
        .unwrap();
        assert!(matches!(
            large_time_metrics(&heavy, &steady, 2.0),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn max_director_examples() {
        let g = grid(8);
        assert_eq!(
            max_director_norm(&DirectorField::constant(&g, [1.0, 0.0, 0.0])),
            1.0
        );
        assert_eq!(max_director_norm(&DirectorField::zeros(&g)), 0.0);
        let mut d = DirectorField::zeros(&g);
        d.set(5, [0.0, 0.0, 2.0]);
        assert_eq!(max_director_norm(&d), 2.0);
    }
}
