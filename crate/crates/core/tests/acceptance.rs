//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p gapforge --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gapforge::bands::{theta_grid, BandScanner, ScanConfig};
use gapforge::calibrate::{band_edge_a, calibrate, CalibrationBox, CalibrationOptions};
use gapforge::design::{design, GapTargets};
use gapforge::fiber::{Boundary, FiberSolver, VertexModel};
use gapforge::graph::fixtures::{line, twin_chain};
use gapforge::graph::{
    component_stats, validate_cell, validate_decomposition, BoundaryPair, ComponentStats, Decomposition, Edge,
    PeriodCell, Vertex, Violation,
};
use gapforge::limit::{is_interlaced, limit_endpoints, CouplingSpec};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    check(elapsed < limit, format!("{detail}; {:.2} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs()))
}

fn random_stats(rng: &mut ChaCha8Rng, m: usize) -> ComponentStats<f64> {
    let l = (0..=m).map(|_| rng.gen_range(0.2..3.0)).collect();
    let n = (0..m).map(|_| rng.gen_range(1..=4)).collect();
    ComponentStats::new(l, n).unwrap()
}

fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let x = rng.gen_range(lo..hi);
    if rng.gen_bool(0.5) {
        x
    } else {
        -x
    }
}

fn relative(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs()
}

fn twin_designed() -> (PeriodCell<f64>, Decomposition, GapTargets<f64>, CouplingSpec<f64>) {
    let (cell, d) = twin_chain::<f64>();
    let stats = component_stats(&cell, &d).unwrap();
    let targets = GapTargets::new(vec![1.0], vec![0.0, 1.5]).unwrap();
    let c = design(&targets, &stats).unwrap();
    (cell, d, targets, c)
}

/// Roots of the secular equation against eigenvalues of the limit matrix.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut not_interlaced = 0;
    for case in 0..100 {
        let m = 1 + case % 3;
        let stats = random_stats(&mut rng, m);
        let c = CouplingSpec::new(
            (0..m).map(|_| signed(&mut rng, 0.1, 5.0)).collect(),
            (0..m).map(|_| signed(&mut rng, 0.2, 3.0)).collect(),
            rng.gen_range(-5.0..5.0),
        )
        .unwrap();
        let ends = limit_endpoints(&stats, &c).map_err(|e| format!("case {case}: {e}"))?;
        for (s, q) in ends.b.iter().zip(&ends.b_matrix) {
            worst = worst.max(relative(*s, *q));
        }
        if !is_interlaced(&ends.a, &ends.b) || !is_interlaced(&ends.a, &ends.b_matrix) {
            not_interlaced += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-8 && not_interlaced == 0,
        format!("max relative root/eigenvalue gap {worst:.1e} over 100 cases, {not_interlaced} not interlaced"),
    )
    .and_then(|d| within(elapsed, Duration::from_secs(1), d))
}

/// Design followed by the limit model reproduces the targets.
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut cases = 0;
    while cases < 100 {
        let m = 1 + cases % 3;
        let mut points: Vec<f64> = (0..2 * m + 1).map(|_| rng.gen_range(-5.0..5.0)).collect();
        points.sort_by(f64::total_cmp);
        if points.windows(2).any(|w| w[1] - w[0] < 0.05) {
            continue;
        }
        let a: Vec<f64> = (0..m).map(|j| points[2 * j + 1]).collect();
        let b: Vec<f64> = (0..=m).map(|j| points[2 * j]).collect();
        let Ok(targets) = GapTargets::new(a, b) else { continue };
        cases += 1;
        let stats = random_stats(&mut rng, m);
        let c = design(&targets, &stats).map_err(|e| format!("case {cases}: {e}"))?;
        let ends = limit_endpoints(&stats, &c).map_err(|e| format!("case {cases}: {e}"))?;
        for (x, t) in ends.a.iter().zip(&targets.a) {
            worst = worst.max(relative(*x, *t));
        }
        for ((x, y), t) in ends.b.iter().zip(&ends.b_matrix).zip(&targets.b) {
            worst = worst.max(relative(*x, *t)).max(relative(*y, *t));
        }
    }
    let elapsed = start.elapsed();
    check(worst <= 1e-8, format!("max relative target error {worst:.1e} over 100 designs, every radicand positive"))
        .and_then(|d| within(elapsed, Duration::from_secs(1), d))
}

/// `A = (1)`, `B = (0, 3/2)` for `α = ½, β = 1, γ = 0`.
fn criterion_3() -> Outcome {
    let (cell, d) = twin_chain::<f64>();
    let stats = component_stats(&cell, &d).unwrap();
    let ends = limit_endpoints(&stats, &CouplingSpec::new(vec![0.5], vec![1.0], 0.0).unwrap()).unwrap();
    let err = (ends.a[0] - 1.0).abs().max(ends.b[0].abs()).max((ends.b[1] - 1.5).abs());
    let err_matrix = ends.b_matrix[0].abs().max((ends.b_matrix[1] - 1.5).abs());
    // The roots of λ(3 − 2λ) = 0.
    let quadratic = |x: f64| x * (3.0 - 2.0 * x);
    let residual = quadratic(ends.b[0]).abs().max(quadratic(ends.b[1]).abs());
    let (qcell, qd) = twin_chain::<Rational64>();
    let qstats = component_stats(&qcell, &qd).unwrap();
    let qa = gapforge::limit::limit_a(
        &qstats,
        &CouplingSpec::new(vec![Rational64::new(1, 2)], vec![Rational64::new(1, 1)], Rational64::new(0, 1)).unwrap(),
    )
    .unwrap();
    let exact_a = qa.values == vec![Rational64::new(1, 1)];
    check(
        err <= 1e-12 && err_matrix <= 1e-12 && exact_a,
        format!(
            "A = {:?}, B = {:?}; max abs error {err:.1e} (matrix {err_matrix:.1e}), quadratic residual {residual:.1e}, exact A = 1: {exact_a}",
            ends.a, ends.b
        ),
    )
}

/// `π²` at every grid θ with decoupled components; order 2 on a Dirichlet edge.
fn criterion_4() -> Outcome {
    let (cell, d) = twin_chain::<f64>();
    let target = PI * PI;
    let mut worst = 0.0f64;
    let models = [
        ("zero couplings", VertexModel::coupled(&cell, &d, CouplingSpec::zero(1)).unwrap()),
        ("kirchhoff", VertexModel::Kirchhoff),
    ];
    for (_, model) in &models {
        let solver = FiberSolver::new(&cell, model, 1.0, 64, true).map_err(|e| e.to_string())?;
        for phi in theta_grid::<f64>(&[64]) {
            let ev = solver.eigenvalues(&Boundary::from_turns(&phi), 8).map_err(|e| e.to_string())?;
            let nearest = ev.iter().map(|x| relative(*x, target)).fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
    }

    let edge = line(1.0f64);
    let meshes = [8, 16, 32, 64];
    let errors: Vec<f64> = meshes
        .iter()
        .map(|&mesh| {
            let s = FiberSolver::new(&edge, &VertexModel::Kirchhoff, 1.0, mesh, false).unwrap();
            (s.eigenvalues(&Boundary::Dirichlet, 1).unwrap()[0] - target).abs()
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let orders_ok = orders.iter().all(|p| (p - 2.0).abs() <= 0.5);
    check(
        worst <= 1e-5 && orders_ok,
        format!(
            "max relative distance to π² {worst:.1e} over 64 θ for both models; Dirichlet orders {:?}",
            orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()
        ),
    )
}

/// `λ_k(N) ≤ λ_k(θ) ≤ λ_k(D)` for `k ≤ 6`.
fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (cell, d, _, c) = twin_designed();
    let scanner = BandScanner::new(cell, d, ScanConfig::for_dim(1, 6)).map_err(|e| e.to_string())?;
    let eps = 0.05;
    let bs = scanner.bands(&c, eps).map_err(|e| e.to_string())?;
    let neumann = scanner.comparison(&c, eps, &Boundary::Neumann).map_err(|e| e.to_string())?;
    let dirichlet = scanner.comparison(&c, eps, &Boundary::Dirichlet).map_err(|e| e.to_string())?;
    let slack = |x: f64| 1e-9 * x.abs().max(1.0);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for values in &bs.eigenvalues {
        for k in 0..6 {
            let (lo, x, hi) = (neumann[k], values[k], dirichlet[k]);
            worst = worst.max((lo - x) / x.abs().max(1.0)).max((x - hi) / x.abs().max(1.0));
            if x < lo - slack(x) || x > hi + slack(x) {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        violations == 0 && bs.theta.len() == 64,
        format!("{violations} violations over 64 θ × 6 bands; largest signed excursion {worst:.1e}"),
    )
    .and_then(|d| within(elapsed, Duration::from_secs(60), d))
}

/// One gap, one-sided errors, monotone decay and rate at least 0.4.
fn criterion_6() -> Outcome {
    let start = Instant::now();
    let (cell, d, _, c) = twin_designed();
    let scanner = BandScanner::new(cell, d, ScanConfig::for_dim(1, 6)).map_err(|e| e.to_string())?;
    let report = scanner.convergence_study(&c, &[0.1, 0.05, 0.025, 0.0125]).map_err(|e| e.to_string())?;
    let gap_counts: Vec<usize> = report.rows.iter().map(|r| r.gap_count).collect();
    let resolved = report.rows.iter().all(|r| r.failure.is_none());
    let one_sided_tol = 1e-8;
    let series: Vec<(String, Vec<f64>)> = (0..report.fits_a.len())
        .map(|j| (format!("A_{}", j + 1), report.rows.iter().filter_map(|r| r.errors_a.as_ref().map(|e| e[j])).collect()))
        .chain((0..report.fits_b.len()).map(|j| {
            (format!("B_{j}"), report.rows.iter().filter_map(|r| r.errors_b.as_ref().map(|e| e[j])).collect())
        }))
        .collect();
    let one_sided = series.iter().all(|(_, s)| s.iter().all(|&e| e >= -one_sided_tol));
    let monotone = series.iter().all(|(_, s)| s.windows(2).all(|w| w[1] <= w[0] + one_sided_tol));
    let rates: Vec<(String, Option<f64>)> = series
        .iter()
        .zip(report.fits_a.iter().chain(&report.fits_b))
        .map(|((name, _), f)| (name.clone(), f.rate))
        .collect();
    let rates_ok = rates.iter().all(|(_, r)| r.is_none_or(|r| r >= 0.4)) && rates.iter().any(|(_, r)| r.is_some());
    let elapsed = start.elapsed();
    let shown: Vec<String> = rates
        .iter()
        .map(|(n, r)| match r {
            Some(r) => format!("{n} {r:.3}"),
            None => format!("{n} exact"),
        })
        .collect();
    check(
        resolved && gap_counts.iter().all(|&g| g == 1) && one_sided && monotone && rates_ok,
        format!(
            "gaps per ε {gap_counts:?}; one-sided {one_sided}; monotone {monotone} (within 1e-8); slopes [{}]",
            shown.join(", ")
        ),
    )
    .and_then(|d| within(elapsed, Duration::from_secs(300), d))
}

/// Calibration hits `Ã_1 = 1` at `ε = 0.05`.
fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (cell, d, targets, c) = twin_designed();
    let scanner = BandScanner::new(cell, d, ScanConfig::for_dim(1, 2)).map_err(|e| e.to_string())?;
    let r = calibrate(&scanner, &targets, &c, 0.05, None, &CalibrationOptions::default()).map_err(|e| e.to_string())?;
    let above = r.alpha.iter().zip(&r.alpha_tilde).all(|(a, t)| a >= t);
    let elapsed = start.elapsed();
    check(
        r.max_residual() <= 1e-6 && r.max_doubled_residual() <= 1e-5 && above,
        format!(
            "α = {:?} (α̃ = {:?}); residual {:.1e} on grid {:?}, {:.1e} on grid {:?}",
            r.alpha,
            r.alpha_tilde,
            r.max_residual(),
            r.grid,
            r.max_doubled_residual(),
            r.doubled_grid
        ),
    )
    .and_then(|d| within(elapsed, Duration::from_secs(300), d))
}

/// `F_1` is monotone on random ordered pairs in the calibration box.
fn criterion_8() -> Outcome {
    let (cell, d, _, c) = twin_designed();
    let scanner = BandScanner::new(cell, d, ScanConfig::for_dim(1, 2)).map_err(|e| e.to_string())?;
    let bounds = CalibrationBox::around(c.alpha.clone()).map_err(|e| e.to_string())?;
    let grid = scanner.config().grid.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let x: f64 = rng.gen_range(bounds.lower(0)..bounds.upper(0));
        let y: f64 = rng.gen_range(bounds.lower(0)..bounds.upper(0));
        let (lo, hi) = (x.min(y), x.max(y));
        let f = |a: f64| band_edge_a(&scanner, 1, &[a], &c.beta, c.gamma, 0.05, &grid);
        let (f_lo, f_hi) = (f(lo).map_err(|e| e.to_string())?, f(hi).map_err(|e| e.to_string())?);
        worst = worst.max(f_lo - f_hi);
        if f_lo > f_hi + 1e-10 {
            violations += 1;
        }
    }
    check(violations == 0, format!("{violations} violations in 20 pairs; max F(α) − F(α′) = {worst:.1e}"))
}

fn interior(id: &str) -> Vertex {
    Vertex::interior(id)
}

/// Twin chain accepted, line rejected, one mutant per condition (ii)–(v).
fn criterion_9() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let (cell, d) = twin_chain::<f64>();
    let accepted = validate_cell(&cell).is_ok() && validate_decomposition(&cell, &d).unwrap().is_ok();
    ok &= accepted;
    notes.push(format!("twin chain accepted: {accepted}"));

    // Line b0–x–y–b1: every partition with nonempty Y_1 fails.
    let line_cell = PeriodCell::new(
        1,
        vec![Vertex::boundary("b0"), interior("x"), interior("y"), Vertex::boundary("b1")],
        vec![Edge::new("b0x", "b0", "x", 1.0), Edge::new("xy", "x", "y", 1.0), Edge::new("yb1", "y", "b1", 1.0)],
        vec![BoundaryPair::new("b0", "b1", vec![1])],
    )
    .unwrap();
    let cell_flags_line = validate_cell(&line_cell).violations.contains(&Violation::GraphIsLine);
    let canonical = Decomposition::new(1, [("b0x", 0), ("xy", 1), ("yb1", 0)].map(|(e, j)| (e.to_string(), j)).into(), "x");
    let canonical_i = validate_decomposition(&line_cell, &canonical).unwrap().violates_condition(1);
    let mut all_rejected = true;
    for mask in 1u8..8 {
        let comps: Vec<(String, usize)> =
            ["b0x", "xy", "yb1"].iter().enumerate().map(|(i, e)| (e.to_string(), ((mask >> i) & 1) as usize)).collect();
        for tv in ["x", "y"] {
            let dd = Decomposition::new(1, comps.iter().cloned().collect(), tv);
            all_rejected &= !validate_decomposition(&line_cell, &dd).unwrap().is_ok();
        }
    }
    ok &= cell_flags_line && canonical_i && all_rejected;
    notes.push(format!("line: graph-is-line {cell_flags_line}, Y_0 disconnected (i) {canonical_i}, all partitions rejected {all_rejected}"));

    let only = |report: gapforge::graph::ValidationReport, c: u8| {
        report.violates_condition(c) && (1..=5).filter(|&k| k != c).all(|k| !report.violates_condition(k))
    };

    // (ii): the boundary edge w–b1 moved into Y_1.
    let mut dm = d.clone();
    dm.edge_component.insert("wb1".into(), 1);
    let ii = only(validate_decomposition(&cell, &dm).unwrap(), 2);

    // (iii): a second attached edge v–w as Y_2 shares v and w with Y_1.
    let mut edges = cell.edges().to_vec();
    edges.push(Edge::new("vw2", "v", "w", 1.0));
    let cell3 = PeriodCell::new(1, cell.vertices().to_vec(), edges, cell.boundary_pairs().to_vec()).unwrap();
    let mut d3 = d.clone();
    d3.m = 2;
    d3.edge_component.insert("vw2".into(), 2);
    let iii = only(validate_decomposition(&cell3, &d3).unwrap(), 3);

    // (iv): a detached edge x–y as Y_2 never meets Y_0.
    let mut vertices = cell.vertices().to_vec();
    vertices.extend([interior("x"), interior("y")]);
    let mut edges = cell.edges().to_vec();
    edges.push(Edge::new("xy", "x", "y", 1.0));
    let cell4 = PeriodCell::new(1, vertices, edges, cell.boundary_pairs().to_vec()).unwrap();
    let mut d4 = d.clone();
    d4.m = 2;
    d4.edge_component.insert("xy".into(), 2);
    let iv = only(validate_decomposition(&cell4, &d4).unwrap(), 4);

    // (v): ṽ moved onto the attachment vertex v.
    let mut d5 = d.clone();
    d5.tilde_v = "v".into();
    let v = only(validate_decomposition(&cell, &d5).unwrap(), 5);

    ok &= ii && iii && iv && v;
    notes.push(format!("single-condition mutants (ii) {ii}, (iii) {iii}, (iv) {iv}, (v) {v}"));
    check(ok, notes.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("limit-model oracle equivalence", criterion_1),
        ("design round trip", criterion_2),
        ("closed-form twin-chain values", criterion_3),
        ("fiber solver analytic oracle", criterion_4),
        ("Neumann/Dirichlet enclosure", criterion_5),
        ("gap structure and convergence rate", criterion_6),
        ("fixed-epsilon calibration", criterion_7),
        ("monotonicity of band edges in alpha", criterion_8),
        ("decomposition validator", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}: {name}: {detail} [{secs:.2} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}: {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
