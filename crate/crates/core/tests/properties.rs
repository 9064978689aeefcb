use gapforge::design::{design, weights_r, GapTargets};
use gapforge::fiber::{Boundary, FiberModel, FiberSolver, VertexModel};
use gapforge::graph::fixtures::{hexagonal, twin_chain};
use gapforge::graph::{component_stats, tile_cell, tile_decomposition, validate_cell, validate_decomposition, ComponentStats};
use gapforge::limit::{is_interlaced, limit_a, limit_endpoints, CouplingSpec};
use num_rational::Rational64;
use proptest::prelude::*;

fn stats_strategy(m: usize) -> impl Strategy<Value = ComponentStats<f64>> {
    (prop::collection::vec(0.2f64..3.0, m + 1), prop::collection::vec(1usize..5, m))
        .prop_map(|(l, n)| ComponentStats::new(l, n).unwrap())
}

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(x, neg)| if neg { -x } else { x })
}

fn couplings_strategy(m: usize) -> impl Strategy<Value = CouplingSpec<f64>> {
    (prop::collection::vec(nonzero(0.1, 5.0), m), prop::collection::vec(nonzero(0.2, 3.0), m), -5.0f64..5.0)
        .prop_map(|(a, b, g)| CouplingSpec::new(a, b, g).unwrap())
}

fn limit_case() -> impl Strategy<Value = (ComponentStats<f64>, CouplingSpec<f64>)> {
    (1usize..4).prop_flat_map(|m| (stats_strategy(m), couplings_strategy(m)))
}

/// Strictly increasing `B_0 < A_1 < … < A_m < B_m` with spacing at least 0.05.
fn targets_strategy(m: usize) -> impl Strategy<Value = GapTargets<f64>> {
    (-5.0f64..5.0, prop::collection::vec(0.05f64..2.0, 2 * m)).prop_filter_map("zero target", move |(start, gaps)| {
        let mut points = vec![start];
        for g in gaps {
            points.push(points.last().unwrap() + g);
        }
        let a = (0..m).map(|j| points[2 * j + 1]).collect();
        let b = (0..=m).map(|j| points[2 * j]).collect();
        GapTargets::new(a, b).ok()
    })
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn limit_endpoints_interlace((stats, c) in limit_case()) {
        let ends = limit_endpoints(&stats, &c).unwrap();
        prop_assert!(is_interlaced(&ends.a, &ends.b));
        prop_assert!(is_interlaced(&ends.a, &ends.b_matrix));
    }

    #[test]
    fn secular_roots_match_matrix_eigenvalues((stats, c) in limit_case()) {
        let ends = limit_endpoints(&stats, &c).unwrap();
        for (s, q) in ends.b.iter().zip(&ends.b_matrix) {
            prop_assert!(rel(*s, *q) <= 1e-10, "{s} vs {q}");
        }
    }

    #[test]
    fn scaling_alpha_and_gamma_scales_endpoints((stats, c) in limit_case(), s in 0.1f64..10.0) {
        let scaled = CouplingSpec::new(c.alpha.iter().map(|a| a * s).collect(), c.beta.clone(), c.gamma * s).unwrap();
        let base = limit_endpoints(&stats, &c).unwrap();
        let big = limit_endpoints(&stats, &scaled).unwrap();
        for (x, y) in base.a.iter().chain(&base.b).zip(big.a.iter().chain(&big.b)) {
            prop_assert!((x * s - y).abs() <= 1e-9 * y.abs().max(1.0), "{} vs {y}", x * s);
        }
    }

    #[test]
    fn endpoints_increase_with_gamma((stats, c) in limit_case(), dg in 0.01f64..3.0) {
        let mut up = c.clone();
        up.gamma += dg;
        let lo = limit_endpoints(&stats, &c).unwrap();
        let hi = limit_endpoints(&stats, &up).unwrap();
        prop_assert_eq!(&lo.a, &hi.a);
        for (x, y) in lo.b.iter().zip(&hi.b) {
            prop_assert!(x < y, "{x} !< {y}");
        }
    }

    #[test]
    fn design_round_trip(t in (1usize..4).prop_flat_map(targets_strategy), seed in any::<u64>()) {
        let m = t.m();
        let l: Vec<f64> = (0..=m).map(|j| 0.3 + ((seed >> (4 * j)) & 15) as f64 / 5.0).collect();
        let n: Vec<usize> = (0..m).map(|j| 1 + ((seed >> (32 + 2 * j)) & 3) as usize).collect();
        let stats = ComponentStats::new(l, n).unwrap();
        let c = design(&t, &stats).unwrap();
        let ends = limit_endpoints(&stats, &c).unwrap();
        for (x, y) in ends.a.iter().zip(&t.a) {
            prop_assert!(rel(*x, *y) <= 1e-12);
        }
        for (x, y) in ends.b_matrix.iter().zip(&t.b) {
            prop_assert!(rel(*x, *y) <= 1e-8);
        }
    }

    #[test]
    fn exact_weights_reproduce_exact_a(nums in prop::collection::vec(1i64..40, 3)) {
        // B_0 < A_1 < B_1 with rational spacings.
        let q = |k: i64| Rational64::new(k, 7);
        let b0 = q(nums[0]);
        let a1 = b0 + q(nums[1]);
        let b1 = a1 + q(nums[2]);
        let t = GapTargets::new(vec![a1], vec![b0, b1]).unwrap();
        let r = weights_r(&t).unwrap();
        prop_assert_eq!(r[0], (b1 - a1) / a1);
        let stats = ComponentStats::new(vec![Rational64::new(2, 1), Rational64::new(1, 1)], vec![2]).unwrap();
        // α chosen from the closed form with β = 1 reproduces A exactly.
        let alpha = a1 * stats.l[1] / Rational64::from_integer(2);
        let c = CouplingSpec::new(vec![alpha], vec![Rational64::from_integer(1)], Rational64::from_integer(0)).unwrap();
        prop_assert_eq!(limit_a(&stats, &c).unwrap().values, vec![a1]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tiling_scales_lengths_and_stays_valid(r in 1usize..4) {
        let (cell, d) = twin_chain::<Rational64>();
        let tiled = tile_cell(&cell, &[r]).unwrap();
        let td = tile_decomposition(&d, 1, &[r]).unwrap();
        prop_assert!(validate_cell(&tiled).is_ok());
        prop_assert!(validate_decomposition(&tiled, &td).unwrap().is_ok());
        let stats = component_stats(&cell, &d).unwrap();
        let tstats = component_stats(&tiled, &td).unwrap();
        prop_assert_eq!(tstats.m(), r);
        prop_assert_eq!(tstats.l[0], stats.l[0] * Rational64::from_integer(r as i64));
        for j in 1..=r {
            prop_assert_eq!(tstats.l[j], stats.l[1]);
            prop_assert_eq!(tstats.n[j - 1], stats.n[0]);
        }
    }

    #[test]
    fn tiled_periodic_spectrum_folds(r in 2usize..4, alpha in 0.2f64..2.0, beta in 0.5f64..2.0) {
        let (cell, d) = twin_chain::<f64>();
        let tiled = tile_cell(&cell, &[r]).unwrap();
        let td = tile_decomposition(&d, 1, &[r]).unwrap();
        let c = CouplingSpec::new(vec![alpha], vec![beta], 0.0).unwrap();
        let tc = CouplingSpec::new(vec![alpha; r], vec![beta; r], 0.0).unwrap();
        let base = FiberSolver::new(&cell, &VertexModel::coupled(&cell, &d, c).unwrap(), 0.5, 16, false).unwrap();
        let big = FiberSolver::new(&tiled, &VertexModel::coupled(&tiled, &td, tc).unwrap(), 0.5, 16, false).unwrap();
        let k = 4;
        let mut folded: Vec<f64> = (0..r)
            .flat_map(|t| base.eigenvalues(&Boundary::from_turns(&[t as f64 / r as f64]), k).unwrap())
            .collect();
        folded.sort_by(f64::total_cmp);
        let direct = big.eigenvalues(&Boundary::periodic(1), k).unwrap();
        for (x, y) in direct.iter().zip(&folded) {
            prop_assert!(rel(*x, *y) <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn enclosure_between_neumann_and_dirichlet(phi in 0.0f64..1.0, alpha in 0.1f64..3.0, gamma in -2.0f64..2.0) {
        let (cell, d) = twin_chain::<f64>();
        let c = CouplingSpec::new(vec![alpha], vec![1.3], gamma).unwrap();
        let s = FiberSolver::new(&cell, &VertexModel::coupled(&cell, &d, c).unwrap(), 0.1, 16, false).unwrap();
        let k = 6;
        let n = s.eigenvalues(&Boundary::Neumann, k).unwrap();
        let q = s.eigenvalues(&Boundary::from_turns(&[phi]), k).unwrap();
        let dd = s.eigenvalues(&Boundary::Dirichlet, k).unwrap();
        for i in 0..k {
            let slack = 1e-9 * q[i].abs().max(1.0);
            prop_assert!(n[i] <= q[i] + slack && q[i] <= dd[i] + slack, "k={i}: {} {} {}", n[i], q[i], dd[i]);
        }
    }

    #[test]
    fn conjugate_quasimomentum_has_same_spectrum(p1 in 0.0f64..1.0, p2 in 0.0f64..1.0) {
        let hex = hexagonal::<f64>();
        let s = FiberSolver::new(&hex, &VertexModel::Kirchhoff, 1.0, 8, false).unwrap();
        let b = Boundary::from_turns(&[p1, p2]);
        let x = s.eigenvalues(&b, 5).unwrap();
        let y = s.eigenvalues(&b.conjugate(), 5).unwrap();
        for (u, v) in x.iter().zip(&y) {
            prop_assert!(rel(*u, *v) <= 1e-10);
        }
    }

    #[test]
    fn band_edges_increase_with_alpha(phi in 0.0f64..1.0, a in 0.1f64..2.0, da in 0.01f64..1.0) {
        let (cell, d) = twin_chain::<f64>();
        let solve = |alpha: f64| {
            let c = CouplingSpec::new(vec![alpha], vec![1.0], 0.3).unwrap();
            FiberSolver::new(&cell, &VertexModel::coupled(&cell, &d, c).unwrap(), 0.1, 16, false)
                .unwrap()
                .eigenvalues(&Boundary::from_turns(&[phi]), 4)
                .unwrap()
        };
        let (lo, hi) = (solve(a), solve(a + da));
        for (x, y) in lo.iter().zip(&hi) {
            prop_assert!(*x <= y + 1e-10 * y.abs().max(1.0));
        }
    }

    #[test]
    fn inertia_agrees_with_dense_eigenvalues(phi in 0.0f64..1.0, alpha in -2.0f64..2.0) {
        prop_assume!(alpha.abs() > 1e-3);
        let (cell, d) = twin_chain::<f64>();
        let c = CouplingSpec::new(vec![alpha], vec![0.8], -0.5).unwrap();
        let model = FiberModel::new(&cell, &VertexModel::coupled(&cell, &d, c).unwrap(), 0.2, 8, 1).unwrap();
        let b = Boundary::from_turns(&[phi]);
        let fast = model.eigenvalues(&b, 6).unwrap();
        let dense = gapforge::fiber::fiber_eigenvalues(&model.assemble(&b).unwrap(), 6).unwrap();
        for (x, y) in fast.iter().zip(&dense) {
            prop_assert!(rel(*x, *y) <= 1e-9, "{x} vs {y}");
        }
    }
}
