//! Initial data for the named profiles and its modification by the
//! artificial-pressure cutoffs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Profile, SimConfig, TraceKind};
use crate::director::{solve_steady_director, SteadyStats};
use crate::error::{Error, Result};
use crate::field::{check_grids, DirectorField, DirichletTrace, ScalarField, VectorField};
use crate::grid::Grid;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct InitialData<T> {
    pub rho0: ScalarField<T>,
    /// Momentum `rho0 u0`.
    pub m0: VectorField<T>,
    pub d0: DirectorField<T>,
    pub trace: DirichletTrace<T>,
    /// `clamp(rho0, delta, delta^(-1/(2 beta)))`, or `rho0` when `delta = 0`.
    pub rho0_delta: ScalarField<T>,
    /// `m0`, zeroed wherever the clamp lowered the density.
    pub m0_delta: VectorField<T>,
    /// Measure of `{rho0_delta < rho0}`.
    pub clamped_measure: T,
    /// Steady director for the trace, also the base of every profile.
    pub d_steady: DirectorField<T>,
    pub steady_stats: SteadyStats<T>,
}

/// Boundary trace of the configuration.
pub fn build_trace<T: Real>(config: &SimConfig<T>, grid: &Grid<T>) -> DirichletTrace<T> {
    match config.init.trace {
        TraceKind::Constant => DirichletTrace::constant(grid, config.init.trace_dir),
        TraceKind::Rotate => {
            let l = grid.extent(0);
            DirichletTrace::from_fn(grid, 3, |x| {
                let phi = T::PI() * x[0] / (T::lit(2.0) * l);
                [phi.cos(), phi.sin(), T::zero()]
            })
        }
    }
}

/// Smooth random field vanishing on the boundary with `max |theta| = 1`
/// (or identically zero when `modes` is zero).
fn random_angle<T: Real>(grid: &Grid<T>, modes: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let dim = grid.dim();
    let m3 = if dim == 3 { modes } else { 1 };
    let mut terms = Vec::new();
    for k in 1..=modes {
        for l in 1..=modes {
            for n in 1..=m3 {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let waves = (k * k + l * l + if dim == 3 { n * n } else { 0 }) as f64;
                terms.push(([k, l, n], T::lit(a / waves)));
            }
        }
    }
    let mut out: Vec<T> = grid
        .cell_centers()
        .map(|x| {
            let mut s = T::zero();
            for (w, a) in &terms {
                let mut p = *a;
                for axis in 0..dim {
                    p = p
                        * (T::from_usize_lossy(w[axis]) * T::PI() * x[axis] / grid.extent(axis))
                            .sin();
                }
                s = s + p;
            }
            s
        })
        .collect();
    let peak = out.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if peak > T::zero() {
        for v in &mut out {
            *v = *v / peak;
        }
    }
    out
}

/// Rotates every director about `z` by `amp theta1^3` and then about `x` by
/// `amp theta2^3`. Cubing makes the rotation vanish to third order at the
/// boundary, so `Delta d - f(d)` of the rotated field still vanishes there
/// when it does for `d`, and the flow starts without a boundary layer.
fn rotate_randomly<T: Real>(
    d: &DirectorField<T>,
    amp: T,
    modes: usize,
    seed: u64,
) -> DirectorField<T> {
    let g = d.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cube = |v: Vec<T>| v.into_iter().map(|x| x * x * x).collect::<Vec<T>>();
    let t1 = cube(random_angle(g, modes, &mut rng));
    let t2 = cube(random_angle(g, modes, &mut rng));
    let mut out = d.clone();
    for idx in 0..g.cell_count() {
        let v = d.at(idx);
        let (s1, c1) = (amp * t1[idx]).sin_cos();
        let w = [c1 * v[0] - s1 * v[1], s1 * v[0] + c1 * v[1], v[2]];
        let (s2, c2) = (amp * t2[idx]).sin_cos();
        out.set(idx, [w[0], c2 * w[1] - s2 * w[2], s2 * w[1] + c2 * w[2]]);
    }
    out
}

/// Builds the profile named in the configuration and its modified version.
pub fn build_initial_data<T: Real>(
    config: &SimConfig<T>,
    grid: &Grid<T>,
) -> Result<InitialData<T>> {
    let init = &config.init;
    let trace = build_trace(config, grid);
    let penalty = config.penalty();
    let (d_steady, steady_stats) =
        solve_steady_director(&trace, &penalty, None, config.steady_options())?;
    let dim = grid.dim();

    let mut rho0 = match init.profile {
        Profile::Bump => {
            let w2 = init.bump_width * init.bump_width;
            ScalarField::from_fn(grid, |x| {
                let r2: T = (0..dim).map(|a| (x[a] - init.bump_center[a]).powi(2)).sum();
                init.rho * (T::one() + init.bump_amp * (-r2 / w2).exp())
            })
        }
        _ => ScalarField::constant(grid, init.rho),
    };
    if let Some((c, r)) = &init.vacuum {
        let r2 = *r * *r;
        for (idx, x) in grid.cell_centers().enumerate() {
            let dist: T = (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum();
            if dist < r2 {
                rho0.values_mut()[idx] = T::zero();
            }
        }
    }
    if !rho0.is_finite() || rho0.min() < T::zero() {
        return Err(Error::Config(format!(
            "profile `{}` yields a negative density ({})",
            init.profile.name(),
            rho0.min()
        )));
    }

    let mut m0 = match init.profile {
        Profile::Shear => {
            let (lx, ly) = (grid.extent(0), grid.extent(1));
            let lz = if dim == 3 { grid.extent(2) } else { T::one() };
            VectorField::from_fn(grid, |x| {
                let mut s = init.shear_amp
                    * (T::PI() * x[0] / lx).sin()
                    * (T::lit(2.0) * T::PI() * x[1] / ly).sin();
                if dim == 3 {
                    s = s * (T::PI() * x[2] / lz).sin();
                }
                [s, T::zero(), T::zero()]
            })
        }
        _ => VectorField::zeros(grid),
    };
    for c in 0..dim {
        for (m, &r) in m0.component_mut(c).iter_mut().zip(rho0.values()) {
            *m = *m * r;
        }
    }

    let amp = match init.profile {
        Profile::RandomDirector if init.director_amp == T::zero() => T::one(),
        _ => init.director_amp,
    };
    let d0 = if amp == T::zero() {
        d_steady.clone()
    } else {
        rotate_randomly(&d_steady, amp, init.director_modes, init.seed)
    };

    let (lo, hi) = cutoffs(config);
    let rho0_delta = match (lo, hi) {
        (Some(lo), Some(hi)) => rho0.map(|r| r.max(lo).min(hi)),
        _ => rho0.clone(),
    };
    let mut m0_delta = m0.clone();
    let mut lowered = 0usize;
    for idx in 0..grid.cell_count() {
        if rho0_delta.values()[idx] < rho0.values()[idx] {
            lowered += 1;
            for c in 0..dim {
                m0_delta.component_mut(c)[idx] = T::zero();
            }
        }
    }
    let data = InitialData {
        rho0,
        m0,
        d0,
        trace,
        rho0_delta,
        m0_delta,
        clamped_measure: T::from_usize_lossy(lowered) * grid.cell_volume(),
        d_steady,
        steady_stats,
    };
    check_initial_data(config, &data)?;
    Ok(data)
}

/// `(delta, delta^(-1/(2 beta)))` when the artificial pressure is active.
fn cutoffs<T: Real>(config: &SimConfig<T>) -> (Option<T>, Option<T>) {
    let reg = &config.reg;
    if reg.delta > T::zero() {
        let hi = reg.delta.powf(-T::one() / (T::lit(2.0) * reg.beta));
        (Some(reg.delta), Some(hi))
    } else {
        (None, None)
    }
}

/// Pointwise checks of the modified data: the cutoff bounds, vanishing
/// momentum wherever the density was lowered, and vanishing momentum on
/// vacuum.
pub fn check_initial_data<T: Real>(config: &SimConfig<T>, data: &InitialData<T>) -> Result<()> {
    check_grids(data.rho0.grid(), data.rho0_delta.grid())?;
    let dim = data.rho0.grid().dim();
    let (lo, hi) = cutoffs(config);
    for idx in 0..data.rho0.values().len() {
        let r0 = data.rho0.values()[idx];
        let r = data.rho0_delta.values()[idx];
        if let (Some(lo), Some(hi)) = (lo, hi) {
            if r < lo || r > hi {
                return Err(Error::Config(format!(
                    "modified density {r} at cell {idx} leaves [{lo}, {hi}]"
                )));
            }
        }
        let m_delta = (0..dim).any(|c| data.m0_delta.component(c)[idx] != T::zero());
        if r < r0 && m_delta {
            return Err(Error::Config(format!(
                "modified momentum nonzero at cell {idx} where the density was lowered"
            )));
        }
        let m = (0..dim).any(|c| data.m0.component(c)[idx] != T::zero());
        if r0 == T::zero() && m {
            return Err(Error::Config(format!(
                "momentum nonzero on vacuum at cell {idx}"
            )));
        }
    }
    Ok(())
}
