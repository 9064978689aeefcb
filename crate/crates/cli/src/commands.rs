//! Command bodies: each returns the resolved configuration, the JSON result
//! and, for tabular commands, the CSV text.

use gapforge::calibrate::{calibrate, CalibrationBox, CalibrationOptions};
use gapforge::design::{design, shift_for_zero_target, weights_r_real, GapTargets};
use gapforge::io::{bands_csv, convergence_csv};
use gapforge::{
    component_stats, gap_endpoints, lambda0, limit_endpoints, validate_cell, validate_decomposition, BandScanner,
    ComponentStats, CouplingSpec, Decomposition, InputSpec, ScanConfig, ValidationReport,
};
use serde_json::{json, Value};

use crate::{CliError, CliResult, Command, MeshArgs, Output, ScanArgs};

/// Relative round-trip tolerance for `A` (closed form).
const ROUNDTRIP_TOL_A: f64 = 1e-12;
/// Relative round-trip tolerance for `B` (matrix eigenvalues).
const ROUNDTRIP_TOL_B: f64 = 1e-8;

pub(crate) fn execute(command: &Command, spec: &InputSpec<f64>) -> CliResult<Output> {
    match command {
        Command::Limit { .. } => limit(spec),
        Command::Design { .. } => design_cmd(spec),
        Command::Lambda0 { mesh, .. } => lambda0_cmd(spec, mesh),
        Command::Bands { epsilon, scan, .. } => bands(spec, *epsilon, scan),
        Command::Convergence { epsilon_list, scan, .. } => convergence(spec, epsilon_list, scan),
        Command::Calibrate { epsilon, scan, tol, delta, max_sweeps, .. } => {
            calibrate_cmd(spec, *epsilon, scan, *tol, *delta, *max_sweeps)
        }
    }
}

/// Cell and decomposition checks, merged into one report.
fn validated(spec: &InputSpec<f64>) -> CliResult<(&Decomposition, ComponentStats<f64>)> {
    let d = spec.require_decomposition()?;
    let mut violations = validate_cell(&spec.cell).violations;
    for v in validate_decomposition(&spec.cell, d)?.violations {
        if !violations.contains(&v) {
            violations.push(v);
        }
    }
    let report = ValidationReport { violations };
    if !report.is_ok() {
        return Err(CliError::Invalid(report));
    }
    Ok((d, component_stats(&spec.cell, d)?))
}

fn positive(name: &str, x: f64) -> CliResult<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be positive and finite")))
    }
}

fn relative_error(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs() / 1f64.max(a.abs())).fold(0.0, f64::max)
}

/// Targets after the zero-target shift, with the designed couplings.
fn designed(targets: &GapTargets<f64>, stats: &ComponentStats<f64>) -> CliResult<(f64, GapTargets<f64>, CouplingSpec<f64>)> {
    let (shift, shifted) = shift_for_zero_target(targets)?;
    let c = design(&shifted, stats)?;
    Ok((shift, shifted, c))
}

/// Couplings from the input, or designed from the targets when absent.
fn resolve_couplings(spec: &InputSpec<f64>, stats: &ComponentStats<f64>) -> CliResult<(CouplingSpec<f64>, Value)> {
    if let Some(c) = &spec.couplings {
        c.check()?;
        return Ok((c.clone(), json!({ "source": "input" })));
    }
    let targets = spec.require_targets()?;
    let (shift, shifted, c) = designed(targets, stats)?;
    Ok((c, json!({ "source": "designed", "shift": shift, "targets": shifted })))
}

fn scan_config(spec: &InputSpec<f64>, m: usize, args: &ScanArgs) -> ScanConfig {
    let k_max = args.kmax.unwrap_or(6.max(m + 2));
    let mut config = ScanConfig::for_dim(spec.cell.dim(), k_max);
    config.mesh = args.mesh.mesh;
    config.richardson = !args.mesh.no_richardson;
    if let Some(grid) = &args.grid {
        config.grid = grid.clone();
    }
    config
}

fn limit(spec: &InputSpec<f64>) -> CliResult<Output> {
    let (_, stats) = validated(spec)?;
    let c = spec.require_couplings()?;
    let ends = limit_endpoints(&stats, c)?;
    Ok(Output {
        config: json!({}),
        result: json!({
            "A": ends.a,
            "B": ends.b,
            "interlaced": ends.interlaced,
            "a_components": ends.a_components,
            "b_matrix": ends.b_matrix,
            "oracle_discrepancy": ends.oracle_discrepancy,
            "couplings": c,
            "stats": stats,
        }),
        csv: None,
    })
}

fn design_cmd(spec: &InputSpec<f64>) -> CliResult<Output> {
    let (_, stats) = validated(spec)?;
    let targets = spec.require_targets()?;
    let (shift, shifted, c) = designed(targets, &stats)?;
    let r = weights_r_real(&shifted)?;
    let ends = limit_endpoints(&stats, &c)?;
    let a_error = relative_error(&ends.a, &shifted.a);
    let b_error = relative_error(&ends.b_matrix, &shifted.b);
    Ok(Output {
        config: json!({ "roundtrip_tol_a": ROUNDTRIP_TOL_A, "roundtrip_tol_b": ROUNDTRIP_TOL_B }),
        result: json!({
            "shift": shift,
            "targets": shifted,
            "r": r,
            "couplings": c,
            "stats": stats,
            "roundtrip": {
                "A": ends.a,
                "B": ends.b_matrix,
                "a_error": a_error,
                "b_error": b_error,
                "ok": a_error <= ROUNDTRIP_TOL_A && b_error <= ROUNDTRIP_TOL_B,
            },
        }),
        csv: None,
    })
}

fn lambda0_cmd(spec: &InputSpec<f64>, mesh: &MeshArgs) -> CliResult<Output> {
    let (d, _) = validated(spec)?;
    let l0 = lambda0(&spec.cell, d, mesh.mesh, !mesh.no_richardson)?;
    Ok(Output {
        config: json!({ "mesh": mesh.mesh, "richardson": !mesh.no_richardson }),
        result: json!(l0),
        csv: None,
    })
}

fn bands(spec: &InputSpec<f64>, epsilon: f64, args: &ScanArgs) -> CliResult<Output> {
    positive("epsilon", epsilon)?;
    let (d, stats) = validated(spec)?;
    let (c, source) = resolve_couplings(spec, &stats)?;
    let config = scan_config(spec, stats.m(), args);
    let scanner = BandScanner::new(spec.cell.clone(), d.clone(), config.clone())?;
    let bs = scanner.bands(&c, epsilon)?;
    let (endpoints, endpoints_error) = match gap_endpoints(&bs, stats.m()) {
        Ok(e) => (json!(e), Value::Null),
        Err(e) if !e.is_validation() => (Value::Null, json!(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let table: Vec<Value> = bs
        .bands
        .iter()
        .zip(&bs.resolution)
        .enumerate()
        .map(|(k, ((lo, hi), res))| json!({ "k": k + 1, "min": lo, "max": hi, "resolution": res }))
        .collect();
    Ok(Output {
        config: json!({ "epsilon": epsilon, "scan": config }),
        result: json!({
            "couplings": c,
            "couplings_origin": source,
            "lambda0": scanner.lambda0(),
            "window_top": bs.window_top,
            "theta_points": bs.theta.len(),
            "bands": table,
            "gaps": bs.gaps,
            "endpoints": endpoints,
            "endpoints_error": endpoints_error,
        }),
        csv: Some(bands_csv(&bs)?),
    })
}

fn convergence(spec: &InputSpec<f64>, epsilons: &[f64], args: &ScanArgs) -> CliResult<Output> {
    for &e in epsilons {
        positive("epsilon-list", e)?;
    }
    let (d, stats) = validated(spec)?;
    let (c, source) = resolve_couplings(spec, &stats)?;
    let config = scan_config(spec, stats.m(), args);
    let scanner = BandScanner::new(spec.cell.clone(), d.clone(), config.clone())?;
    let report = scanner.convergence_study(&c, epsilons)?;
    Ok(Output {
        config: json!({ "epsilon_list": epsilons, "scan": config }),
        result: json!({
            "couplings": c,
            "couplings_origin": source,
            "lambda0": scanner.lambda0(),
            "min_rate": report.min_rate(),
            "report": report,
        }),
        csv: Some(convergence_csv(&report)?),
    })
}

fn calibrate_cmd(
    spec: &InputSpec<f64>,
    epsilon: f64,
    args: &ScanArgs,
    tol: f64,
    delta: Option<f64>,
    max_sweeps: usize,
) -> CliResult<Output> {
    positive("epsilon", epsilon)?;
    positive("tol", tol)?;
    let (d, stats) = validated(spec)?;
    let targets = spec.require_targets()?;
    let (shift, shifted, c) = designed(targets, &stats)?;
    let config = scan_config(spec, stats.m(), args);
    let scanner = BandScanner::new(spec.cell.clone(), d.clone(), config.clone())?;
    let bounds = delta.map(|delta| CalibrationBox::new(c.alpha.clone(), delta)).transpose()?;
    let options = CalibrationOptions { tol, max_sweeps, ..Default::default() };
    let report = calibrate(&scanner, &shifted, &c, epsilon, bounds, &options)?;
    Ok(Output {
        config: json!({ "epsilon": epsilon, "scan": config, "calibration": options, "delta": delta }),
        result: json!({
            "shift": shift,
            "targets": shifted,
            "designed": c,
            "alpha": report.alpha,
            "max_residual": report.max_residual(),
            "max_doubled_residual": report.max_doubled_residual(),
            "report": report,
        }),
        csv: None,
    })
}
