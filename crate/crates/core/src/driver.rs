//! Coupled time loop and the continuation over the regularization
//! parameters.
//!
//! Every step is a Lie splitting: the density is transported by the old
//! velocity, the director is advanced with the old velocity, and the
//! velocity is solved with the new density and the new director. With
//! `picard_iters > 1` the density and director updates are repeated with
//! the latest velocity iterate.

use std::path::Path;

use log::{debug, info, warn};

use crate::config::SimConfig;
use crate::continuity::{cfl_dt, continuity_step, outflow_rate};
use crate::diagnostics::{
    density_integrability, energy, energy_balance_residual, large_time_metrics, total_mass,
    EnergyReport, LargeTimeMetrics, SteadyReference,
};
use crate::director::{advection_rate, director_step, DirectorState};
use crate::error::{Error, Result};
use crate::field::BoundarySpec;
use crate::galerkin::GalerkinBasis;
use crate::initial::{build_initial_data, InitialData};
use crate::momentum::{initial_coefficients, momentum_step};
use crate::ops::{h1_seminorm, l2_norm_director, l2_norm_vector, lp_norm_values};
use crate::output;
use crate::scalar::Real;
use crate::state::FlowState;

/// Relative mass drift allowed by the mass check.
pub const MASS_DRIFT_TOLERANCE: f64 = 1e-10;
/// Slack of the director maximum principle.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-6;
/// Relative energy growth allowed between the first and last state.
pub const ENERGY_GROWTH_TOLERANCE: f64 = 1e-3;
/// Bound on the relative Galerkin residual of every step.
pub const GALERKIN_TOLERANCE: f64 = 1e-9;

/// One line of the time series.
#[derive(Clone, Debug)]
pub struct DiagnosticRow<T> {
    pub step: usize,
    pub t: T,
    pub dt: T,
    pub mass: T,
    pub energy: EnergyReport<T>,
    /// Energy balance defect of the step that produced this row; zero for
    /// the initial row.
    pub balance_residual: T,
    pub max_d: T,
    pub galerkin_residual: T,
    /// `int rho^(gamma + sigma)`.
    pub rho_integrability: T,
    pub metrics: LargeTimeMetrics<T>,
}

/// Outcome of one named invariant check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            passed: value <= limit,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary<T> {
    pub steps: usize,
    pub t_final: T,
    pub initial_energy: EnergyReport<T>,
    pub final_energy: EnergyReport<T>,
    /// Largest `|mass(t) - mass(0)| / mass(0)` over all steps.
    pub max_mass_drift: T,
    /// Largest energy balance defect over all steps.
    pub max_balance_residual: T,
    pub max_galerkin_residual: T,
    /// Largest `|d|` over all steps.
    pub max_director_norm: T,
    /// `max(c0, max |d0|, max |trace|)`.
    pub director_bound: T,
    pub max_velocity_norm: T,
    pub final_metrics: LargeTimeMetrics<T>,
    pub steady_iterations: usize,
    pub steady_residual: T,
    pub steady_force_residual: T,
    pub steady_force_bound: T,
    pub clamped_measure: T,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
}

impl<T> RunSummary<T> {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub rows: Vec<DiagnosticRow<T>>,
    pub summary: RunSummary<T>,
    pub initial: InitialData<T>,
    pub steady: SteadyReference<T>,
    pub final_state: FlowState<T>,
    /// `(step, state)` every `snapshot_every` steps, including step 0.
    pub snapshots: Vec<(usize, FlowState<T>)>,
}

/// Time step for the current velocity: the configured cap, the CFL limit,
/// and the positivity and upwind limits of the transport steps.
pub fn choose_dt<T: Real>(config: &SimConfig<T>, state: &FlowState<T>, remaining: T) -> Result<T> {
    let s = config.time.safety;
    let mut dt = config.time.dt_max.min(remaining);
    dt = dt.min(cfl_dt(&state.u, s)?);
    let out = outflow_rate(&state.u);
    if out > T::zero() {
        dt = dt.min(s / out);
    }
    let adv = advection_rate(&state.u);
    if adv > T::zero() {
        dt = dt.min(s / adv);
    }
    Ok(dt)
}

struct Stepper<'a, T: Real> {
    config: &'a SimConfig<T>,
    basis: GalerkinBasis<T>,
    penalty: crate::penalty::GinzburgLandau<T>,
}

impl<T: Real> Stepper<'_, T> {
    fn step(&self, state: &FlowState<T>, dt: T) -> Result<(FlowState<T>, T)> {
        let c = self.config;
        let coeffs_old = state
            .coeffs
            .as_deref()
            .expect("driver states carry coefficients");
        let mut u = state.u.clone();
        let mut last = None;
        for _ in 0..c.picard_iters {
            let rho = continuity_step(&state.rho, &u, c.reg.eps, dt)?;
            let dir = director_step(&state.director, &u, &self.penalty, dt)?;
            let m = momentum_step(
                &state.rho,
                &rho,
                coeffs_old,
                &dir,
                &c.fluid,
                &c.reg,
                &self.basis,
                &self.penalty,
                dt,
            )?;
            u = self.basis.realize(&m.coeffs);
            last = Some((rho, dir, m));
        }
        let (rho, dir, m) = last.expect("at least one iteration");
        let next = FlowState::from_coeffs(state.t + dt, rho, m.coeffs, &self.basis, dir)?;
        Ok((next, m.residual))
    }
}

fn row<T: Real>(
    config: &SimConfig<T>,
    steady: &SteadyReference<T>,
    state: &FlowState<T>,
    step: usize,
    dt: T,
    report: EnergyReport<T>,
    balance: T,
    galerkin: T,
) -> Result<DiagnosticRow<T>> {
    Ok(DiagnosticRow {
        step,
        t: state.t,
        dt,
        mass: total_mass(&state.rho),
        energy: report,
        balance_residual: balance,
        max_d: state.director.d().max_norm(),
        galerkin_residual: galerkin,
        rho_integrability: density_integrability(
            &state.rho,
            config.fluid.gamma,
            config.integrability_sigma(),
        )?,
        metrics: large_time_metrics(state, steady, config.fluid.gamma)?,
    })
}

/// Runs the coupled system from the configured initial data up to `t_end`.
///
/// On a solver error the partial time series and the last good state are
/// written to the output directory (when one is configured) and the error
/// is returned wrapped with the failing step.
pub fn run_simulation<T: Real>(config: &SimConfig<T>) -> Result<RunOutput<T>> {
    let grid = config.grid()?;
    let penalty = config.penalty();
    let basis = GalerkinBasis::new(&grid, config.modes_per_axis)?;
    let initial = build_initial_data(config, &grid)?;
    for w in &config.warnings {
        warn!("{w}");
    }
    info!(
        "steady director: {} iterations, residual {:e}",
        initial.steady_stats.iterations,
        initial.steady_stats.residual.to_f64_lossy()
    );
    let mass0 = total_mass(&initial.rho0_delta);
    let steady = SteadyReference::from_solution(
        mass0,
        DirectorState::new(initial.d_steady.clone(), initial.trace.clone())?,
        initial.steady_stats,
        &penalty,
        config.fluid.lambda,
    )?;
    let coeffs0 = initial_coefficients(&basis, &initial.rho0_delta, &initial.m0_delta)?;
    let director0 = DirectorState::new(initial.d0.clone(), initial.trace.clone())?;
    let mut state = FlowState::from_coeffs(
        T::zero(),
        initial.rho0_delta.clone(),
        coeffs0,
        &basis,
        director0,
    )?;
    let stepper = Stepper {
        config,
        basis,
        penalty,
    };

    let e0 = energy(&state, &config.fluid, &config.reg, &penalty)?;
    let mut rows = vec![row(
        config,
        &steady,
        &state,
        0,
        T::zero(),
        e0,
        T::zero(),
        T::zero(),
    )?];
    let mut snapshots = Vec::new();
    if config.snapshot_every > 0 {
        snapshots.push((0, state.clone()));
    }
    let director_bound = config
        .c0
        .max(initial.d0.max_norm())
        .max(initial.trace.max_norm());
    let mut max_drift = T::zero();
    let mut max_balance = T::zero();
    let mut max_galerkin = T::zero();
    let mut max_d = state.director.d().max_norm();
    let mut max_u = rows[0].metrics.velocity_norm;
    let mut e_prev = e0;
    let mut step = 0usize;
    let t_end = config.time.t_end;
    // steps shorter than this fraction of dt_max are not taken
    let tiny = T::lit(1e-9) * config.time.dt_max;

    while t_end - state.t > tiny {
        let attempt = choose_dt(config, &state, t_end - state.t)
            .and_then(|dt| stepper.step(&state, dt).map(|r| (dt, r)));
        let (dt, (next, galerkin)) = match attempt {
            Ok(v) => v,
            Err(e) => {
                let err = Error::Step {
                    step: step + 1,
                    time: state.t.to_f64_lossy(),
                    source: Box::new(e),
                };
                if let Some(dir) = &config.output_dir {
                    dump_failure(dir, &rows, &state, step);
                }
                return Err(err);
            }
        };
        step += 1;
        let e = energy(&next, &config.fluid, &config.reg, &penalty)?;
        let balance = energy_balance_residual(&e_prev, &e, dt);
        let mass = total_mass(&next.rho);
        let drift = ((mass - mass0) / mass0.abs().max(T::min_positive_value())).abs();
        max_drift = max_drift.max(drift);
        max_balance = max_balance.max(balance);
        max_galerkin = max_galerkin.max(galerkin);
        max_d = max_d.max(next.director.d().max_norm());
        max_u = max_u.max(l2_norm_vector(&next.u));
        e_prev = e;
        state = next;
        let last = t_end - state.t <= tiny;
        if step.is_multiple_of(config.time.log_every) || last {
            let r = row(config, &steady, &state, step, dt, e, balance, galerkin)?;
            debug!(
                "step {step} t {:.6} E {:.9e} balance {:.3e}",
                r.t.to_f64_lossy(),
                r.energy.total.to_f64_lossy(),
                balance.to_f64_lossy()
            );
            rows.push(r);
        }
        if config.snapshot_every > 0 && step.is_multiple_of(config.snapshot_every) {
            snapshots.push((step, state.clone()));
        }
    }

    let final_energy = e_prev;
    let final_metrics = rows.last().expect("initial row").metrics;
    let f = |v: T| v.to_f64_lossy();
    let e0_scale = e0.total.abs();
    let checks = vec![
        Check::at_most("mass_drift", f(max_drift), MASS_DRIFT_TOLERANCE),
        Check::at_most(
            "max_principle",
            f(max_d),
            f(director_bound) + MAX_PRINCIPLE_SLACK,
        ),
        Check::at_most(
            "energy_growth",
            f(final_energy.total - e0.total),
            ENERGY_GROWTH_TOLERANCE * f(e0_scale),
        ),
        Check::at_most("galerkin_residual", f(max_galerkin), GALERKIN_TOLERANCE),
        Check::at_most(
            "steady_consistency",
            f(steady.force_residual),
            f(steady.force_bound) * (1.0 + 1e-9) + 1e-300,
        ),
    ];
    for c in checks.iter().filter(|c| !c.passed) {
        warn!("check {} failed: {:e} > {:e}", c.name, c.value, c.limit);
    }
    let summary = RunSummary {
        steps: step,
        t_final: state.t,
        initial_energy: e0,
        final_energy,
        max_mass_drift: max_drift,
        max_balance_residual: max_balance,
        max_galerkin_residual: max_galerkin,
        max_director_norm: max_d,
        director_bound,
        max_velocity_norm: max_u,
        final_metrics,
        steady_iterations: steady.stats.iterations,
        steady_residual: steady.stats.residual,
        steady_force_residual: steady.force_residual,
        steady_force_bound: steady.force_bound,
        clamped_measure: initial.clamped_measure,
        warnings: config.warnings.clone(),
        checks,
    };
    Ok(RunOutput {
        rows,
        summary,
        initial,
        steady,
        final_state: state,
        snapshots,
    })
}

fn dump_failure<T: Real>(dir: &Path, rows: &[DiagnosticRow<T>], state: &FlowState<T>, step: usize) {
    let res = std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(dir, e))
        .and_then(|_| output::write_csv(&dir.join("diagnostics.csv"), rows))
        .and_then(|_| output::write_state_snapshot(&dir.join(format!("failure_{step:06}")), state));
    if let Err(e) = res {
        warn!("could not save the failing state: {e}");
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// `eps` halved at fixed `delta`.
    Eps,
    /// `delta` halved at the smallest `eps`.
    Delta,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Eps => "eps",
            Phase::Delta => "delta",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ContinuationRow<T> {
    pub phase: Phase,
    pub level: usize,
    pub eps: T,
    pub delta: T,
    /// Distance to the next level at `t_end`; `None` on the last level.
    pub distance: Option<T>,
    /// `int delta rho^beta` at `t_end`.
    pub artificial_pressure: T,
    pub mass: T,
    pub energy: T,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct ContinuationTable<T> {
    pub rows: Vec<ContinuationRow<T>>,
    pub checks: Vec<Check>,
}

impl<T> ContinuationTable<T> {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `||rho_a - rho_b||_{L^gamma} + ||u_a - u_b||_{L^2} + ||d_a - d_b||_{H^1}`.
pub fn state_distance<T: Real>(a: &FlowState<T>, b: &FlowState<T>, gamma: T) -> Result<T> {
    let g = a.grid();
    let dr = a.rho.sub(&b.rho)?;
    let du = a.u.sub(&b.u)?;
    let dd = a.director.d().sub(b.director.d())?;
    Ok(lp_norm_values(g, dr.values(), gamma)?
        + l2_norm_vector(&du)
        + l2_norm_director(&dd)
        + h1_seminorm(&dd, &BoundarySpec::ZeroDirichlet))
}

fn run_levels<T: Real>(config: &SimConfig<T>, params: &[(T, T)]) -> Vec<Result<RunOutput<T>>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = params
            .iter()
            .map(|&(eps, delta)| {
                let mut c = config.clone();
                c.reg.eps = eps;
                c.reg.delta = delta;
                c.output_dir = None;
                c.snapshot_every = 0;
                s.spawn(move || c.validated().and_then(|c| run_simulation(&c)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("continuation member panicked"))
            .collect()
    })
}

fn phase_rows<T: Real>(
    config: &SimConfig<T>,
    phase: Phase,
    params: &[(T, T)],
    runs: &[RunOutput<T>],
) -> Result<Vec<ContinuationRow<T>>> {
    let mut rows = Vec::with_capacity(runs.len());
    for (j, run) in runs.iter().enumerate() {
        let distance = match runs.get(j + 1) {
            Some(next) => Some(state_distance(
                &run.final_state,
                &next.final_state,
                config.fluid.gamma,
            )?),
            None => None,
        };
        let (eps, delta) = params[j];
        let art = if delta > T::zero() {
            run.final_state
                .rho
                .values()
                .iter()
                .map(|&r| delta * r.max(T::zero()).powf(config.reg.beta))
                .sum::<T>()
                * run.final_state.grid().cell_volume()
        } else {
            T::zero()
        };
        rows.push(ContinuationRow {
            phase,
            level: j,
            eps,
            delta,
            distance,
            artificial_pressure: art,
            mass: total_mass(&run.final_state.rho),
            energy: run.summary.final_energy.total,
            passed: run.summary.passed(),
        });
    }
    Ok(rows)
}

/// `D_{j+1} <= D_j` for the last `levels - 2` comparisons of a phase.
fn trend_check<T: Real>(name: &'static str, rows: &[ContinuationRow<T>]) -> Check {
    let d: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.distance.map(|v| v.to_f64_lossy()))
        .collect();
    // worst ratio D_{j+1} / D_j; zero distances count as decreasing
    let worst = d
        .windows(2)
        .map(|w| if w[1] <= w[0] { 0.0 } else { w[1] - w[0] })
        .fold(0.0, f64::max);
    Check::at_most(name, worst, 0.0)
}

/// Halves `eps` from `eps0` at fixed `delta0`, then halves `delta` from
/// `delta0` at the smallest `eps`, running every level to `t_end`.
///
/// When a member run fails the rows already computed are written to the
/// output directory before the error is returned.
pub fn run_continuation<T: Real>(
    config: &SimConfig<T>,
    levels: usize,
) -> Result<ContinuationTable<T>> {
    if levels < 3 {
        return Err(Error::Config(format!(
            "continuation needs at least 3 levels, got {levels}"
        )));
    }
    let half = T::lit(0.5);
    let scale = |x0: T, j: usize| x0 * half.powi(j as i32);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let phases = [Phase::Eps, Phase::Delta];
    for phase in phases {
        let params: Vec<(T, T)> = (0..levels)
            .map(|j| match phase {
                Phase::Eps => (scale(config.eps0, j), config.delta0),
                Phase::Delta => (scale(config.eps0, levels - 1), scale(config.delta0, j)),
            })
            .collect();
        info!("continuation phase {}: {} levels", phase.name(), levels);
        let results = run_levels(config, &params);
        let mut runs = Vec::with_capacity(levels);
        for (j, r) in results.into_iter().enumerate() {
            match r {
                Ok(run) => runs.push(run),
                Err(e) => {
                    // keep the levels that finished before the failing one
                    if let Ok(mut partial) = phase_rows(config, phase, &params[..j], &runs) {
                        if let Some(last) = partial.last_mut() {
                            last.distance = None;
                        }
                        rows.extend(partial);
                    }
                    if let Some(dir) = &config.output_dir {
                        let table = ContinuationTable { rows, checks };
                        let res = std::fs::create_dir_all(dir)
                            .map_err(|e| Error::io(dir, e))
                            .and_then(|_| {
                                output::write_continuation_csv(
                                    &dir.join("continuation.csv"),
                                    &table,
                                )
                            });
                        if let Err(io) = res {
                            warn!("could not save the partial table: {io}");
                        }
                    }
                    return Err(Error::Step {
                        step: j,
                        time: 0.0,
                        source: Box::new(e),
                    });
                }
            }
        }
        let prows = phase_rows(config, phase, &params, &runs)?;
        checks.push(trend_check(
            match phase {
                Phase::Eps => "eps_distance_trend",
                Phase::Delta => "delta_distance_trend",
            },
            &prows,
        ));
        if phase == Phase::Delta {
            let first = prows[0].artificial_pressure.to_f64_lossy();
            let values: Vec<f64> = prows
                .iter()
                .map(|r| r.artificial_pressure.to_f64_lossy())
                .collect();
            let decreasing = values.windows(2).all(|w| w[1] <= w[0]);
            let last = *values.last().expect("levels >= 3");
            let ratio = if first > 0.0 { last / first } else { 0.0 };
            // value is the last-to-first ratio; the check itself is the trend
            checks.push(Check {
                name: "artificial_pressure_trend",
                value: ratio,
                limit: 1.0,
                passed: decreasing,
            });
        }
        checks.push(Check {
            name: match phase {
                Phase::Eps => "eps_member_checks",
                Phase::Delta => "delta_member_checks",
            },
            value: prows.iter().filter(|r| !r.passed).count() as f64,
            limit: 0.0,
            passed: prows.iter().all(|r| r.passed),
        });
        rows.extend(prows);
    }
    Ok(ContinuationTable { rows, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> SimConfig<f64> {
        SimConfig::parse(&format!(
            "grid.counts = 16 16\ngalerkin.modes_per_axis = 4\ntime.dt_max = 0.01\n{text}"
        ))
        .unwrap()
    }

    #[test]
    fn rest_state_is_stationary() {
        let c = config("time.t_end = 0.2\ninit.profile = rest\n");
        let out = run_simulation(&c).unwrap();
        assert_eq!(out.summary.steps, 20);
        assert!(out.summary.max_mass_drift <= 1e-12);
        assert!(out.final_state.u.max_norm() <= 1e-10);
        let m = out.summary.final_metrics;
        assert_eq!(
            (m.rho_distance, m.velocity_norm, m.director_distance),
            (0.0, 0.0, 0.0)
        );
        assert!(out.summary.passed(), "{:?}", out.summary.checks);
    }

    #[test]
    fn empty_run_logs_initial_row_only() {
        let out = run_simulation(&config("time.t_end = 0\n")).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.summary.steps, 0);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let c = config("time.t_end = 0.05\ninit.profile = bump\ninit.director_amp = 0.3\n");
        let a = run_simulation(&c).unwrap();
        let b = run_simulation(&c).unwrap();
        assert_eq!(a.final_state.rho.values(), b.final_state.rho.values());
        assert_eq!(a.final_state.coeffs, b.final_state.coeffs);
        assert_eq!(
            a.final_state.director.d().components(),
            b.final_state.director.d().components()
        );
    }

    #[test]
    fn bump_sets_fluid_in_motion() {
        let c = config("time.t_end = 0.1\ninit.profile = bump\ntime.log_every = 1\n");
        let out = run_simulation(&c).unwrap();
        assert!(out.summary.max_velocity_norm > 1e-4);
        assert!(out.summary.passed(), "{:?}", out.summary.checks);
        assert_eq!(out.rows.len(), out.summary.steps + 1);
    }

    #[test]
    fn log_every_keeps_final_row() {
        let c = config("time.t_end = 0.055\ntime.log_every = 2\n");
        let out = run_simulation(&c).unwrap();
        assert_eq!(out.summary.steps, 6);
        let steps: Vec<usize> = out.rows.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 2, 4, 6]);
        assert!((out.summary.t_final - 0.055).abs() < 1e-15);
    }

    #[test]
    fn continuation_on_rest_has_zero_distances() {
        let c = config("time.t_end = 0.03\n");
        let table = run_continuation(&c, 3).unwrap();
        assert_eq!(table.rows.len(), 6);
        for r in &table.rows {
            if let Some(d) = r.distance {
                assert_eq!(d, 0.0);
            }
        }
        assert!(run_continuation(&c, 2).is_err());
    }
}
