use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};

use ermakov_core::analytic::verify_solution;
use ermakov_core::dynamics::{ErmakovPotential, Potential};
use ermakov_core::integrate::{integrate, StopReason, Trajectory};
use ermakov_core::invariants::{drift_report_with, ermakov_i0, Invariant, InvariantSet};
use ermakov_core::noether::{
    default_grid, homothetic_algebra, integrals_from_scan, scan, snap, ConditionResult,
    FittedConstants, NoetherCase, SymmetryVector,
};
use ermakov_core::reduce::{solve_rho_at, two_path_check};
use ermakov_core::Error as CoreError;

use crate::config::{ReductionConfig, Scenario};
use crate::csvio::{read_states, write_table, STATE_COLUMNS};
use crate::error::CliError;
use crate::report::{Check, Report};

/// Invariants that may appear as trajectory CSV columns, in column order.
pub const CSV_INVARIANTS: [Invariant; 4] = [
    Invariant::Hamiltonian,
    Invariant::Ermakov,
    Invariant::I2,
    Invariant::I3,
];

/// Where one scenario's results go. `None` for the main output of a command
/// means standard output.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub name: String,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub trajectory: Option<PathBuf>,
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn table_bytes(header: &[&str], rows: &[Vec<f64>]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_table(&mut buf, header, rows)?;
    Ok(buf)
}

fn complete(traj: &Trajectory) -> Result<(), CliError> {
    match traj.stop() {
        StopReason::Completed => Ok(()),
        StopReason::Singularity { reason } => Err(CliError::Runtime(format!(
            "integration stopped at t = {}: {reason}",
            traj.last().time
        ))),
    }
}

fn run_trajectory(sc: &Scenario) -> Result<Trajectory, CliError> {
    let traj = integrate(&sc.spec, &sc.initial, sc.t_end, &sc.control)?;
    complete(&traj)?;
    Ok(traj)
}

fn state_row(s: &ermakov_core::CartesianState) -> Vec<f64> {
    vec![s.time, s.x, s.y, s.vx, s.vy]
}

fn stop_json(traj: &Trajectory) -> Value {
    match traj.stop() {
        StopReason::Completed => json!("completed"),
        StopReason::Singularity { reason } => json!({ "singularity": reason }),
    }
}

fn tolerance(ctx: &Context, default: f64) -> f64 {
    ctx.tolerance.unwrap_or(default)
}

/// Integrates and writes the trajectory CSV. A run cut short by a
/// singularity still writes the samples it has, then fails.
pub fn simulate(sc: &Scenario, ctx: &Context) -> Result<bool, CliError> {
    let columns: Vec<Invariant> = CSV_INVARIANTS
        .into_iter()
        .filter(|i| sc.invariants.contains(i))
        .collect();
    for inv in sc.invariants.iter().filter(|i| !CSV_INVARIANTS.contains(i)) {
        eprintln!(
            "{}: {inv} is not a trajectory column; use `invariants` to report it",
            ctx.name
        );
    }
    let set = InvariantSet::new(&sc.spec, &columns, sc.gradient_kv)?;
    let traj = integrate(&sc.spec, &sc.initial, sc.t_end, &sc.control)?;

    let mut header: Vec<&str> = STATE_COLUMNS.to_vec();
    header.extend(columns.iter().map(|i| i.name()));
    let rows = traj
        .samples()
        .iter()
        .map(|s| {
            let mut row = state_row(s);
            row.extend(set.evaluate(s)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    emit(ctx.out.as_deref(), &table_bytes(&header, &rows)?)?;

    if let Some(path) = &ctx.report {
        let stats = traj.stats();
        let details = json!({
            "samples": traj.samples().len(),
            "t_final": traj.last().time,
            "stop": stop_json(&traj),
            "accepted_steps": stats.accepted,
            "rejected_steps": stats.rejected,
        });
        let report = Report::new("simulate", ctx.name.clone(), Vec::new(), details);
        emit(Some(path), report.to_json().as_bytes())?;
    }
    complete(&traj)?;
    Ok(true)
}

/// Drift of each requested invariant along an integrated or supplied
/// trajectory.
pub fn invariants(sc: &Scenario, ctx: &Context) -> Result<bool, CliError> {
    if sc.invariants.is_empty() {
        return Err(CliError::Config("invariants: the list is empty".into()));
    }
    let set = InvariantSet::new(&sc.spec, &sc.invariants, sc.gradient_kv)?;
    let traj = match &ctx.trajectory {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            Trajectory::from_samples(sc.spec.clone(), read_states(file)?, sc.control.method)?
        }
        None => run_trajectory(sc)?,
    };
    let tol = tolerance(ctx, sc.checks.drift);
    let drift = drift_report_with(&traj, &set, tol)?;

    let checks = drift
        .series
        .iter()
        .map(|s| Check::at_most(format!("drift {}", s.invariant), s.max_rel_drift, tol))
        .collect();
    let series: Vec<Value> = drift
        .series
        .iter()
        .map(|s| {
            json!({
                "invariant": s.invariant.name(),
                "reference": s.reference,
                "max_abs_drift": s.max_abs_drift,
                "max_rel_drift": s.max_rel_drift,
            })
        })
        .collect();
    let details = json!({
        "samples": traj.samples().len(),
        "t_first": traj.first().time,
        "t_last": traj.last().time,
        "series": series,
    });
    let report = Report::new("invariants", ctx.name.clone(), checks, details);
    emit(ctx.report.as_deref(), report.to_json().as_bytes())?;
    Ok(report.passes)
}

/// Maps the trajectory to the autonomous frame and compares with a direct
/// autonomous integration.
pub fn reduce(sc: &Scenario, ctx: &Context) -> Result<bool, CliError> {
    let r = sc.reduction.unwrap_or(ReductionConfig {
        rho0: 1.0,
        rhodot0: 0.0,
    });
    let traj = run_trajectory(sc)?;
    let t0 = traj.first().time;
    let times: Vec<f64> = traj.samples()[1..].iter().map(|s| s.time).collect();
    if times.is_empty() {
        return Err(CliError::Config("reduce needs at least two samples".into()));
    }
    let rho = solve_rho_at(sc.spec.omega(), r.rho0, r.rhodot0, t0, &times, &sc.control)?;
    let check = two_path_check(&traj, &rho, &sc.control)?;
    let auto = check.reduced.spec();

    let header = [
        "time",
        "x",
        "y",
        "vx",
        "vy",
        "rho",
        "rhodot",
        "T",
        "X",
        "Y",
        "VX",
        "VY",
        "I0_residual",
    ];
    let rows = traj
        .samples()
        .iter()
        .zip(check.reduced.samples())
        .map(|(s, m)| {
            let p = rho.at(s.time)?;
            let residual = ermakov_i0(&sc.spec, s)? - ermakov_i0(auto, m)?;
            let mut row = state_row(s);
            row.extend([p.rho, p.rhodot, m.time, m.x, m.y, m.vx, m.vy, residual]);
            Ok(row)
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    emit(ctx.out.as_deref(), &table_bytes(&header, &rows)?)?;

    let checks = vec![
        Check::at_most(
            "two-path state error",
            check.max_state_error,
            tolerance(ctx, sc.checks.two_path),
        ),
        Check::at_most("I0 frame mismatch", check.max_i0_mismatch, sc.checks.frame),
    ];
    let details = json!({
        "rho0": r.rho0,
        "rhodot0": r.rhodot0,
        "samples": rows.len(),
        "T_final": check.reduced.last().time,
    });
    let report = Report::new("reduce", ctx.name.clone(), checks, details);
    if let Some(path) = &ctx.report {
        emit(Some(path), report.to_json().as_bytes())?;
    }
    Ok(report.passes)
}

/// Compares the trajectory with the closed-form `r^2(T)` and `theta(T)`.
pub fn analytic_compare(sc: &Scenario, ctx: &Context) -> Result<bool, CliError> {
    let traj = run_trajectory(sc)?;
    let tol = tolerance(ctx, sc.checks.analytic);
    let a = verify_solution(&traj, tol)?;
    let checks = vec![
        Check::at_most("radial residual", a.max_radial_residual, tol),
        Check::at_most("theta residual", a.max_theta_residual, tol),
    ];
    let turning = a.turning_point.map(|t| {
        json!({
            "time_from": t.time_from,
            "time_to": t.time_to,
            "theta_from": t.theta_from,
            "theta_to": t.theta_to,
        })
    });
    let details = json!({
        "H": a.constants.h,
        "I0": a.constants.i0,
        "I2": a.constants.i2,
        "sign": a.sign,
        "samples": traj.samples().len(),
        "theta_samples": a.theta_samples,
        "turning_point": turning,
    });
    let report = Report::new("analytic-compare", ctx.name.clone(), checks, details);
    emit(ctx.report.as_deref(), report.to_json().as_bytes())?;
    Ok(report.passes)
}

fn condition_json(c: &ConditionResult) -> Value {
    let constants = match c.constants {
        FittedConstants::Case2 { c1 } => json!({ "c1": snap(c1, c.tolerance) }),
        FittedConstants::Case3 { c2, c3 } => {
            json!({ "c2": snap(c2, c.tolerance), "c3": snap(c3, c.tolerance) })
        }
    };
    json!({
        "pass": c.passes,
        "constants": constants,
        "max_residual": c.max_residual,
    })
}

/// Checks the Noether conditions for the homothetic algebra (plus the
/// configured gradient Killing vector) and the drift of every integral the
/// passing conditions produce. The matrix itself is informational: a failing
/// condition is a result, not a failed check.
pub fn noether_scan(sc: &Scenario, ctx: &Context) -> Result<bool, CliError> {
    let auto = sc.spec.autonomous();
    let potential: Arc<dyn Potential> =
        Arc::new(ErmakovPotential::of_spec(&auto).ok_or(CoreError::NotConservative)?);
    let mut vectors = homothetic_algebra();
    if let Some((b1, b2)) = sc.gradient_kv {
        vectors.push(SymmetryVector::gradient_kv(b1, b2));
    }
    let tol = tolerance(ctx, sc.checks.noether);
    let entries = scan(potential.as_ref(), &vectors, &default_grid(), tol)?;
    let integrals = integrals_from_scan(&entries, Arc::clone(&potential))?;

    let traj = integrate(&auto, &sc.initial, sc.t_end, &sc.control)?;
    complete(&traj)?;
    let mut checks = Vec::new();
    for fi in &integrals {
        let values = traj
            .samples()
            .iter()
            .map(|s| fi.evaluate(s))
            .collect::<Result<Vec<_>, _>>()?;
        let reference = values[0];
        let drift = values
            .iter()
            .map(|v| (v - reference).abs())
            .fold(0.0, f64::max)
            / reference.abs().max(1.0);
        let case = match fi.case() {
            NoetherCase::Case2 { .. } => 2,
            NoetherCase::Case3 { .. } => 3,
        };
        checks.push(Check::at_most(
            format!("drift {} case {case}", fi.vector().name),
            drift,
            sc.checks.noether_drift,
        ));
    }
    let matrix: Vec<Value> = entries
        .iter()
        .map(|e| {
            json!({
                "vector": e.vector.name,
                "case2": condition_json(&e.case2),
                "case3": e.case3.as_ref().map(condition_json),
            })
        })
        .collect();
    let details = json!({
        "condition_tolerance": tol,
        "grid_points": default_grid().len(),
        "matrix": matrix,
        "integrals": integrals.len(),
    });
    let report = Report::new("noether-scan", ctx.name.clone(), checks, details);
    emit(ctx.report.as_deref(), report.to_json().as_bytes())?;
    Ok(report.passes)
}
