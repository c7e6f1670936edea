//! Files written by a run: the diagnostics time series, field snapshots,
//! the run summary and continuation tables.
//!
//! Layout of an output directory:
//!
//! ```text
//! diagnostics.csv            one row per logged step
//! summary.txt                `key = value` lines
//! state_NNNNNN_rho.snap      snapshots every `snapshot_every` steps
//! state_NNNNNN_u.snap
//! state_NNNNNN_d.snap
//! continuation.csv           continuation runs only
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::driver::{ContinuationTable, DiagnosticRow, RunOutput, RunSummary};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::snapshot::Snapshot;
use crate::state::FlowState;

pub const CSV_HEADER: &str = "t,mass,E_total,E_kin,E_press,E_art,E_elastic,E_penalty,D_visc,D_dir,D_art,balance_res,max_d,rho_lg_int,u_L2,rho_dist,d_H1dist";

pub const CONTINUATION_HEADER: &str =
    "phase,level,eps,delta,distance,art_pressure_int,mass,E_total,checks";

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Formats the time series with [`CSV_HEADER`].
pub fn csv_text<T: Real>(rows: &[DiagnosticRow<T>]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let e = &r.energy;
        let m = &r.metrics;
        let cols = [
            r.t,
            r.mass,
            e.total,
            e.kinetic,
            e.pressure_potential,
            e.artificial_potential,
            e.elastic,
            e.penalty_potential,
            e.dissipation_viscous,
            e.dissipation_director,
            e.dissipation_artificial,
            r.balance_residual,
            r.max_d,
            r.rho_integrability,
            m.velocity_norm,
            m.rho_distance,
            m.director_distance,
        ];
        let line: Vec<String> = cols.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn write_csv<T: Real>(path: &Path, rows: &[DiagnosticRow<T>]) -> Result<()> {
    write_file(path, &csv_text(rows))
}

/// Writes `{stem}_rho.snap`, `{stem}_u.snap` and `{stem}_d.snap` next to
/// each other; `path` is the stem.
pub fn write_state_snapshot<T: Real>(path: &Path, state: &FlowState<T>) -> Result<()> {
    let stem = path.to_string_lossy();
    Snapshot::from_scalar(&state.rho, state.t).save(format!("{stem}_rho.snap"))?;
    Snapshot::from_vector(&state.u, state.t).save(format!("{stem}_u.snap"))?;
    Snapshot::from_director(state.director.d(), state.t).save(format!("{stem}_d.snap"))
}

/// Run summary as `key = value` lines.
pub fn summary_text<T: Real>(s: &RunSummary<T>) -> String {
    let mut out = String::new();
    let f = |v: T| v.to_f64_lossy();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("status", if s.passed() { "pass" } else { "fail" }.into());
    kv("steps", s.steps.to_string());
    kv("t_final", format!("{:e}", f(s.t_final)));
    kv("energy.initial", format!("{:e}", f(s.initial_energy.total)));
    kv("energy.final", format!("{:e}", f(s.final_energy.total)));
    kv(
        "energy.final.kinetic",
        format!("{:e}", f(s.final_energy.kinetic)),
    );
    kv(
        "energy.final.pressure",
        format!("{:e}", f(s.final_energy.pressure_potential)),
    );
    kv(
        "energy.final.artificial",
        format!("{:e}", f(s.final_energy.artificial_potential)),
    );
    kv(
        "energy.final.elastic",
        format!("{:e}", f(s.final_energy.elastic)),
    );
    kv(
        "energy.final.penalty",
        format!("{:e}", f(s.final_energy.penalty_potential)),
    );
    kv("mass.max_drift", format!("{:e}", f(s.max_mass_drift)));
    kv(
        "balance.max_residual",
        format!("{:e}", f(s.max_balance_residual)),
    );
    kv(
        "galerkin.max_residual",
        format!("{:e}", f(s.max_galerkin_residual)),
    );
    kv("director.max_norm", format!("{:e}", f(s.max_director_norm)));
    kv("director.bound", format!("{:e}", f(s.director_bound)));
    kv("velocity.max_l2", format!("{:e}", f(s.max_velocity_norm)));
    kv(
        "metrics.rho_distance",
        format!("{:e}", f(s.final_metrics.rho_distance)),
    );
    kv(
        "metrics.velocity_norm",
        format!("{:e}", f(s.final_metrics.velocity_norm)),
    );
    kv(
        "metrics.director_distance",
        format!("{:e}", f(s.final_metrics.director_distance)),
    );
    kv("steady.iterations", s.steady_iterations.to_string());
    kv("steady.residual", format!("{:e}", f(s.steady_residual)));
    kv(
        "steady.force_residual",
        format!("{:e}", f(s.steady_force_residual)),
    );
    kv(
        "steady.force_bound",
        format!("{:e}", f(s.steady_force_bound)),
    );
    kv(
        "initial.clamped_measure",
        format!("{:e}", f(s.clamped_measure)),
    );
    for c in &s.checks {
        kv(
            &format!("check.{}", c.name),
            format!(
                "{} {:e} <= {:e}",
                if c.passed { "pass" } else { "fail" },
                c.value,
                c.limit
            ),
        );
    }
    for w in &s.warnings {
        kv("warning", w.clone());
    }
    out
}

pub fn continuation_text<T: Real>(table: &ContinuationTable<T>) -> String {
    let mut s = String::from(CONTINUATION_HEADER);
    s.push('\n');
    for r in &table.rows {
        let dist = r
            .distance
            .map(|d| format!("{:e}", d.to_f64_lossy()))
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{},{:e},{:e},{:e},{}",
            r.phase.name(),
            r.level,
            r.eps.to_f64_lossy(),
            r.delta.to_f64_lossy(),
            dist,
            r.artificial_pressure.to_f64_lossy(),
            r.mass.to_f64_lossy(),
            r.energy.to_f64_lossy(),
            if r.passed { "pass" } else { "fail" }
        );
    }
    s
}

pub fn write_continuation_csv<T: Real>(path: &Path, table: &ContinuationTable<T>) -> Result<()> {
    write_file(path, &continuation_text(table))
}

/// Writes the time series, the summary and every snapshot of a run.
pub fn write_outputs<T: Real>(run: &RunOutput<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(&dir.join("diagnostics.csv"), &run.rows)?;
    write_file(&dir.join("summary.txt"), &summary_text(&run.summary))?;
    for (step, state) in &run.snapshots {
        write_state_snapshot(&dir.join(format!("state_{step:06}")), state)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::driver::run_simulation;

    fn run(text: &str) -> RunOutput<f64> {
        let c = SimConfig::parse(&format!(
            "grid.counts = 8 8\ngalerkin.modes_per_axis = 3\ntime.dt_max = 0.01\n{text}"
        ))
        .unwrap();
        run_simulation(&c).unwrap()
    }

    #[test]
    fn empty_run_writes_header_and_initial_row() {
        let out = run("time.t_end = 0\n");
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&out, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), 17);
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 2, "{names:?}");
    }

    #[test]
    fn snapshots_round_trip() {
        let out = run("time.t_end = 0.03\noutput.snapshot_every = 2\ninit.profile = bump\n");
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&out, dir.path()).unwrap();
        assert_eq!(out.snapshots.len(), 2);
        let (step, state) = &out.snapshots[1];
        let base = dir.path().join(format!("state_{step:06}"));
        let rho = Snapshot::<f64>::load(format!("{}_rho.snap", base.display())).unwrap();
        let d = Snapshot::<f64>::load(format!("{}_d.snap", base.display())).unwrap();
        assert_eq!(rho.components[0], state.rho.values());
        assert_eq!(&d.components[..], &state.director.d().components()[..]);
        let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(summary.starts_with("status = pass"), "{summary}");
    }

    #[test]
    fn unwritable_directory_reports_path() {
        let out = run("time.t_end = 0\n");
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_outputs(&out, &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
