//! Run configuration.
//!
//! The file format is line oriented UTF-8: `section.key = value`, with `#`
//! starting a comment. Lists are separated by spaces or commas. Every key
//! is optional; see [`KEYS`] for the full list and defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::continuity::RegularizationParams;
use crate::director::SteadyOptions;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::momentum::FluidParams;
use crate::penalty::GinzburgLandau;
use crate::scalar::Real;

/// Recognized keys with their defaults.
pub const KEYS: &[(&str, &str)] = &[
    ("grid.dim", "2"),
    ("grid.counts", "64 64"),
    ("grid.extents", "1 1"),
    ("fluid.a", "1"),
    ("fluid.gamma", "2"),
    ("fluid.mu", "1"),
    ("fluid.lambda", "1"),
    ("fluid.theta", "1"),
    ("reg.eps", "0.01"),
    ("reg.delta", "0.01"),
    ("reg.beta", "13"),
    ("penalty.sigma0", "1"),
    ("penalty.c0", "1"),
    ("galerkin.modes_per_axis", "8"),
    ("galerkin.picard_iters", "1"),
    ("time.t_end", "1"),
    ("time.safety", "0.25"),
    ("time.dt_max", "0.002"),
    ("time.log_every", "10"),
    ("director.steady_tol", "1e-8"),
    ("director.max_iters", "2000"),
    ("init.profile", "rest"),
    ("init.rho", "1"),
    ("init.bump_amp", "0.15"),
    ("init.bump_width", "0.15"),
    ("init.bump_center", "0.5 0.5"),
    ("init.shear_amp", "0.1"),
    ("init.director_amp", "0"),
    ("init.director_modes", "3"),
    ("init.seed", "1"),
    ("init.trace", "constant"),
    ("init.trace_dir", "1 0 0"),
    ("init.vacuum", ""),
    ("diag.sigma", ""),
    ("continuation.eps0", "0.01"),
    ("continuation.delta0", "0.01"),
    ("output.dir", ""),
    ("output.snapshot_every", "0"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Uniform density, no flow, steady director.
    Rest,
    /// Gaussian density bump at rest.
    Bump,
    /// Uniform density with a shear flow vanishing on the boundary.
    Shear,
    /// Uniform density at rest with a smooth random rotation of the
    /// steady director.
    RandomDirector,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rest" => Some(Self::Rest),
            "bump" => Some(Self::Bump),
            "shear" => Some(Self::Shear),
            "random-director" => Some(Self::RandomDirector),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rest => "rest",
            Self::Bump => "bump",
            Self::Shear => "shear",
            Self::RandomDirector => "random-director",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    /// `d0 = init.trace_dir` on the whole boundary.
    Constant,
    /// `d0 = (cos(pi x / 2L), sin(pi x / 2L), 0)`, turning by a right angle
    /// across the first axis.
    Rotate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig<T> {
    pub profile: Profile,
    pub rho: T,
    pub bump_amp: T,
    pub bump_width: T,
    pub bump_center: Vec<T>,
    pub shear_amp: T,
    /// Largest rotation angle (radians) applied to the steady director.
    pub director_amp: T,
    pub director_modes: usize,
    pub seed: u64,
    pub trace: TraceKind,
    pub trace_dir: [T; 3],
    /// Ball `(centre, radius)` where the initial density vanishes.
    pub vacuum: Option<(Vec<T>, T)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeConfig<T> {
    pub t_end: T,
    pub safety: T,
    pub dt_max: T,
    /// Steps between logged rows; the first and last step are always logged.
    pub log_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<T> {
    pub dim: usize,
    pub counts: Vec<usize>,
    pub extents: Vec<T>,
    pub fluid: FluidParams<T>,
    pub reg: RegularizationParams<T>,
    pub sigma0: T,
    pub c0: T,
    pub modes_per_axis: usize,
    pub picard_iters: usize,
    pub time: TimeConfig<T>,
    pub steady_tol: T,
    pub steady_max_iters: usize,
    pub init: InitConfig<T>,
    /// Exponent gain of the integrability monitor; `None` picks
    /// `2 gamma / 3 - 1`.
    pub diag_sigma: Option<T>,
    pub eps0: T,
    pub delta0: T,
    pub output_dir: Option<PathBuf>,
    /// Steps between snapshots; 0 writes none.
    pub snapshot_every: usize,
    /// Non-fatal findings of validation.
    pub warnings: Vec<String>,
}

struct Entries {
    values: HashMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> (usize, &str) {
        match self.values.get(key) {
            Some((line, v)) => (*line, v.as_str()),
            None => (
                0,
                KEYS.iter()
                    .find(|(k, _)| *k == key)
                    .map(|(_, d)| *d)
                    .expect("key is registered"),
            ),
        }
    }

    fn get<V: std::str::FromStr>(&self, key: &str) -> Result<V> {
        let (line, v) = self.raw(key);
        v.parse().map_err(|_| bad(line, key, v))
    }

    fn list<V: std::str::FromStr>(&self, key: &str) -> Result<Vec<V>> {
        let (line, v) = self.raw(key);
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| bad(line, key, s)))
            .collect()
    }

    fn optional<V: std::str::FromStr>(&self, key: &str) -> Result<Option<V>> {
        let (line, v) = self.raw(key);
        if v.is_empty() {
            Ok(None)
        } else {
            v.parse().map(Some).map_err(|_| bad(line, key, v))
        }
    }
}

fn bad(line: usize, key: &str, v: &str) -> Error {
    let msg = format!("cannot parse `{v}` for {key}");
    if line == 0 {
        Error::Config(msg)
    } else {
        Error::Parse { line, msg }
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut values = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Parse {
                line,
                msg: format!("unknown key `{key}`"),
            });
        }
        if values
            .insert(key.to_string(), (line, value.trim().to_string()))
            .is_some()
        {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(Entries { values })
}

impl<T: Real> SimConfig<T> {
    /// Parses and validates a configuration.
    pub fn parse(text: &str) -> Result<Self> {
        let e = tokenize(text)?;
        let dim: usize = e.get("grid.dim")?;
        let mut counts: Vec<usize> = e.list("grid.counts")?;
        let mut extents: Vec<T> = e.list("grid.extents")?;
        // a single entry applies to every axis
        if counts.len() == 1 {
            counts = vec![counts[0]; dim];
        }
        if extents.len() == 1 {
            extents = vec![extents[0]; dim];
        }
        let fluid = FluidParams {
            a: e.get("fluid.a")?,
            gamma: e.get("fluid.gamma")?,
            mu: e.get("fluid.mu")?,
            lambda: e.get("fluid.lambda")?,
            theta: e.get("fluid.theta")?,
        };
        let reg = RegularizationParams {
            eps: e.get("reg.eps")?,
            delta: e.get("reg.delta")?,
            beta: e.get("reg.beta")?,
        };
        let profile_name: String = e.get("init.profile")?;
        let profile = Profile::parse(&profile_name).ok_or_else(|| {
            let (line, v) = e.raw("init.profile");
            let msg =
                format!("unknown profile `{v}` (expected rest, bump, shear or random-director)");
            if line == 0 {
                Error::Config(msg)
            } else {
                Error::Parse { line, msg }
            }
        })?;
        let trace = match e.raw("init.trace").1 {
            "constant" => TraceKind::Constant,
            "rotate" => TraceKind::Rotate,
            other => {
                return Err(bad(e.raw("init.trace").0, "init.trace", other));
            }
        };
        let dir: Vec<T> = e.list("init.trace_dir")?;
        if dir.len() != 3 {
            return Err(Error::Config(
                "init.trace_dir needs three components".into(),
            ));
        }
        let vac: Vec<T> = e.list("init.vacuum")?;
        let vacuum = match vac.len() {
            0 => None,
            n if n == dim + 1 => Some((vac[..dim].to_vec(), vac[dim])),
            _ => {
                return Err(Error::Config(format!(
                    "init.vacuum needs {dim} centre coordinates and a radius"
                )))
            }
        };
        let output_dir: Option<String> = e.optional("output.dir")?;
        let cfg = Self {
            dim,
            counts,
            extents,
            fluid,
            reg,
            sigma0: e.get("penalty.sigma0")?,
            c0: e.get("penalty.c0")?,
            modes_per_axis: e.get("galerkin.modes_per_axis")?,
            picard_iters: e.get("galerkin.picard_iters")?,
            time: TimeConfig {
                t_end: e.get("time.t_end")?,
                safety: e.get("time.safety")?,
                dt_max: e.get("time.dt_max")?,
                log_every: e.get("time.log_every")?,
            },
            steady_tol: e.get("director.steady_tol")?,
            steady_max_iters: e.get("director.max_iters")?,
            init: InitConfig {
                profile,
                rho: e.get("init.rho")?,
                bump_amp: e.get("init.bump_amp")?,
                bump_width: e.get("init.bump_width")?,
                bump_center: e.list("init.bump_center")?,
                shear_amp: e.get("init.shear_amp")?,
                director_amp: e.get("init.director_amp")?,
                director_modes: e.get("init.director_modes")?,
                seed: e.get("init.seed")?,
                trace,
                trace_dir: [dir[0], dir[1], dir[2]],
                vacuum,
            },
            diag_sigma: e.optional("diag.sigma")?,
            eps0: e.get("continuation.eps0")?,
            delta0: e.get("continuation.delta0")?,
            output_dir: output_dir.map(PathBuf::from),
            snapshot_every: e.get("output.snapshot_every")?,
            warnings: Vec::new(),
        };
        cfg.validated()
    }

    /// Reads and parses a configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks every hypothesis and collects warnings.
    pub fn validated(mut self) -> Result<Self> {
        self.warnings.clear();
        self.grid()?;
        self.fluid.validate()?;
        RegularizationParams::new(self.reg.eps, self.reg.delta, self.reg.beta)
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(w) = self.reg.check_exponents(self.fluid.gamma)? {
            self.warnings.push(w);
        }
        GinzburgLandau::with_threshold(self.sigma0, self.c0)
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.modes_per_axis == 0 {
            return Err(Error::Config(
                "galerkin.modes_per_axis must be positive".into(),
            ));
        }
        if self.picard_iters == 0 {
            return Err(Error::Config(
                "galerkin.picard_iters must be positive".into(),
            ));
        }
        let t = &self.time;
        if !(t.t_end >= T::zero()) || !t.t_end.is_finite() {
            return Err(Error::Config(format!(
                "t_end must be nonnegative, got {}",
                t.t_end
            )));
        }
        if !(t.safety > T::zero() && t.safety <= T::one()) {
            return Err(Error::Config(format!(
                "time.safety must lie in (0, 1], got {}",
                t.safety
            )));
        }
        if !(t.dt_max > T::zero()) {
            return Err(Error::Config(format!(
                "time.dt_max must be positive, got {}",
                t.dt_max
            )));
        }
        if t.log_every == 0 {
            return Err(Error::Config("time.log_every must be positive".into()));
        }
        if !(self.steady_tol > T::zero()) {
            return Err(Error::Config("director.steady_tol must be positive".into()));
        }
        let init = &self.init;
        if !(init.rho >= T::zero()) {
            return Err(Error::Config(format!(
                "init.rho must be nonnegative, got {}",
                init.rho
            )));
        }
        if init.profile == Profile::Bump {
            if init.bump_center.len() != self.dim {
                return Err(Error::Config(format!(
                    "init.bump_center needs {} coordinates",
                    self.dim
                )));
            }
            if !(init.bump_width > T::zero()) {
                return Err(Error::Config("init.bump_width must be positive".into()));
            }
            if init.bump_amp < -T::one() {
                return Err(Error::Config(
                    "init.bump_amp below -1 makes the density negative".into(),
                ));
            }
        }
        if init.director_modes == 0 {
            return Err(Error::Config("init.director_modes must be positive".into()));
        }
        if let Some(s) = self.diag_sigma {
            if !(s > T::zero()) {
                return Err(Error::Config(format!(
                    "diag.sigma must be positive, got {s}"
                )));
            }
        }
        if !(self.eps0 >= T::zero()) || !(self.delta0 >= T::zero()) {
            return Err(Error::Config(
                "continuation.eps0 and delta0 must be nonnegative".into(),
            ));
        }
        Ok(self)
    }

    pub fn grid(&self) -> Result<Grid<T>> {
        Grid::new(self.dim, &self.extents, &self.counts).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn penalty(&self) -> GinzburgLandau<T> {
        GinzburgLandau::with_threshold(self.sigma0, self.c0).expect("validated")
    }

    pub fn steady_options(&self) -> SteadyOptions<T> {
        SteadyOptions {
            tol: self.steady_tol,
            max_iters: self.steady_max_iters,
            ..SteadyOptions::default()
        }
    }

    pub fn integrability_sigma(&self) -> T {
        self.diag_sigma
            .unwrap_or_else(|| crate::diagnostics::default_integrability_sigma(self.fluid.gamma))
    }
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self::parse("").expect("defaults are valid")
    }
}
