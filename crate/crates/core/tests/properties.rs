#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use proptest::prelude::*;

use mod1_core::angular::{embed, lemma2_bound, project_to_mod1, reduce_mod1, wrap_distance, Mod1Series, RealEmbedding};
use mod1_core::eval::{rmse, shifted_rmse, wrap_rmse};
use mod1_core::grid::{build_graph, fiedler_lower_bound, NeighborGraph};
use mod1_core::signals::measure_delta;
use mod1_core::trs::{certify, solve_trs_equality, SmoothnessOperator, TrsProblem};
use mod1_core::unwrap::{build_difference_system, ols_unwrap, quotient_tracker, OlsSolver};

fn graph_and_k() -> impl Strategy<Value = (usize, usize)> {
    (2usize..40).prop_flat_map(|n| (Just(n), 1..n))
}

fn residues(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quad_form_is_edge_sum((n, k) in graph_and_k(), seed in any::<u64>()) {
        let g = build_graph(n, k).unwrap();
        let l = g.laplacian();
        let v: Vec<f64> = (0..n).map(|i| ((i as u64).wrapping_mul(seed | 1) % 1000) as f64 / 100.0 - 5.0).collect();
        let lv = l.apply(&v);
        let dense: f64 = v.iter().zip(&lv).map(|(a, b)| a * b).sum();
        let edges: f64 = g.edges().map(|(i, j)| (v[i] - v[j]).powi(2)).sum();
        prop_assert!((dense - edges).abs() <= 1e-9 * (1.0 + edges));
        prop_assert!((l.quad_form(&v) - edges).abs() <= 1e-9 * (1.0 + edges));
        prop_assert!(lv.iter().sum::<f64>().abs() < 1e-9 * (1.0 + edges));
    }

    #[test]
    fn difference_gram_is_laplacian((n, k) in graph_and_k()) {
        let g = build_graph(n, k).unwrap();
        let y = Mod1Series::new(vec![0.0; n]).unwrap();
        let sys = build_difference_system(&y, &g, 0.5).unwrap();
        let l = g.laplacian();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = sys.apply_transpose(&sys.apply(&e));
            for i in 0..n {
                prop_assert!((col[i] - l.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrap_distance_is_a_metric(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let d = |x, y| wrap_distance(x, y).unwrap();
        prop_assert!(d(a, b) >= 0.0 && d(a, b) <= 0.5);
        prop_assert_eq!(d(a, b), d(b, a));
        prop_assert_eq!(d(a, a), 0.0);
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-15);
    }

    #[test]
    fn chord_matches_arc(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let s = Mod1Series::new(vec![a, b]).unwrap();
        let e = embed(&s);
        let chord = ((e.re()[0] - e.re()[1]).powi(2) + (e.im()[0] - e.im()[1]).powi(2)).sqrt();
        let want = 2.0 * (PI * wrap_distance(a, b).unwrap()).sin();
        prop_assert!((chord - want).abs() < 1e-12);
    }

    #[test]
    fn lemma2_perturbation(r in 0.0f64..1.0, eps in 0.01f64..0.49, angle in 0.0f64..(2.0 * PI), scale in 0.0f64..1.0) {
        let e = embed(&Mod1Series::new(vec![r]).unwrap());
        let g = RealEmbedding::from_parts(&[e.re()[0] + eps * scale * angle.cos()], &[e.im()[0] + eps * scale * angle.sin()]).unwrap();
        let p = project_to_mod1(&g);
        prop_assert!(wrap_distance(p.series.values()[0], r).unwrap() <= lemma2_bound(eps).unwrap() + 1e-12);
    }

    #[test]
    fn embedding_round_trip(v in prop::collection::vec(0.0f64..1.0, 1..30)) {
        let s = Mod1Series::new(v).unwrap();
        let back = project_to_mod1(&embed(&s)).series;
        prop_assert!(wrap_rmse(&back, &s).unwrap() < 1e-12);
    }

    #[test]
    fn wrap_rmse_symmetric((a, b) in (1usize..30).prop_flat_map(|n| (residues(n), residues(n)))) {
        let (a, b) = (Mod1Series::new(a).unwrap(), Mod1Series::new(b).unwrap());
        let ab = wrap_rmse(&a, &b).unwrap();
        prop_assert_eq!(ab, wrap_rmse(&b, &a).unwrap());
        prop_assert!((0.0..=0.5).contains(&ab));
        prop_assert!(measure_delta(&a, &b).unwrap() <= 2.0 + 1e-12);
    }

    #[test]
    fn shifted_rmse_properties(
        (f, fhat) in (1usize..30).prop_flat_map(|n| (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(-5.0f64..5.0, n))),
        c in -10.0f64..10.0,
    ) {
        let s = shifted_rmse(&fhat, &f).unwrap();
        prop_assert!(s.rmse <= rmse(&fhat, &f).unwrap() + 1e-12);
        prop_assert!(s.integer_rmse + 1e-12 >= s.rmse);
        let moved: Vec<f64> = fhat.iter().map(|x| x + c).collect();
        prop_assert!((shifted_rmse(&moved, &f).unwrap().rmse - s.rmse).abs() < 1e-9);
        let moved: Vec<f64> = f.iter().map(|x| x + c).collect();
        prop_assert!((shifted_rmse(&fhat, &moved).unwrap().rmse - s.rmse).abs() < 1e-9);
    }

    #[test]
    fn ols_orientation_invariant(v in (3usize..25).prop_flat_map(residues), k in 1usize..3) {
        let n = v.len();
        let k = k.min(n - 1);
        let y = Mod1Series::new(v).unwrap();
        let g = build_graph(n, k).unwrap();
        let sys = build_difference_system(&y, &g, 0.5).unwrap();
        // flip every row: (j, i) with negated rhs, solved through the normal equations
        let flipped_rhs: Vec<f64> = sys.rhs.iter().map(|b| -b).collect();
        let mut atb = vec![0.0; n];
        for (&(i, j), &b) in sys.edges.iter().zip(&flipped_rhs) {
            atb[j] += b;
            atb[i] -= b;
        }
        let flipped = OlsSolver::new(&g).unwrap().solve_normal(&atb);
        let direct = ols_unwrap(&y, &g, 0.5).unwrap().samples;
        for (a, b) in flipped.iter().zip(&direct) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn qt_equals_ols_on_consistent_paths(steps in prop::collection::vec(-0.45f64..0.45, 2..40), start in -3.0f64..3.0) {
        let mut f = vec![start];
        for s in &steps {
            f.push(f.last().unwrap() + s);
        }
        let y = Mod1Series::from_reals(&f);
        let qt = quotient_tracker(&y, 0.5).unwrap().samples;
        let ols = ols_unwrap(&y, &build_graph(f.len(), 1).unwrap(), 0.5).unwrap().samples;
        prop_assert!(shifted_rmse(&qt, &ols).unwrap().rmse < 1e-9);
        prop_assert!(shifted_rmse(&qt, &f).unwrap().rmse < 1e-9);
    }

    #[test]
    fn integer_shift_gauge(v in (2usize..30).prop_flat_map(|n| prop::collection::vec(-4.0f64..4.0, n)), c in -5i32..5) {
        let g = build_graph(v.len(), 1).unwrap();
        let y1 = Mod1Series::from_reals(&v);
        let y2 = Mod1Series::from_reals(&v.iter().map(|x| x + c as f64).collect::<Vec<_>>());
        let a = ols_unwrap(&y1, &g, 0.5).unwrap().samples;
        let b = ols_unwrap(&y2, &g, 0.5).unwrap().samples;
        prop_assert!(shifted_rmse(&a, &b).unwrap().rmse < 1e-9);
    }

    #[test]
    fn reduce_mod1_lands_in_unit_interval(x in -1e6f64..1e6) {
        let r = reduce_mod1(x);
        prop_assert!((0.0..1.0).contains(&r));
        let q = (x - r).round();
        prop_assert!((q + r - x).abs() <= 1e-9 * (1.0 + x.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trs_certificate_holds((n, k) in (2usize..24).prop_flat_map(|n| (Just(n), 1..=n.min(5) - 1)), lambda in 0.0f64..2.0, v in prop::collection::vec(0.0f64..1.0, 24)) {
        let op = SmoothnessOperator::for_grid(n, k, lambda).unwrap();
        let z = embed(&Mod1Series::new(v[..n].to_vec()).unwrap());
        let p = TrsProblem::new(&op, z).unwrap();
        let sol = solve_trs_equality(&p).unwrap();
        let cert = certify(&sol, &p).unwrap();
        prop_assert!(cert.passed(), "{:?}", cert);
        prop_assert!(sol.mu <= 2.0 + 1e-10);
    }
}

#[test]
fn spectral_bounds_small_grids() {
    for n in 2..=60 {
        for k in 1..n.min(6) {
            let g = NeighborGraph::new(n, k).unwrap();
            let spec = g.laplacian().spectrum().unwrap();
            let beta = &spec.eigenvalues;
            assert!(beta[0].abs() < 1e-9);
            assert!(beta[n - 1] <= 4.0 * k as f64 + 1e-9, "n={n} k={k}");
            assert!(beta[1] >= fiedler_lower_bound(n, k) - 1e-9, "n={n} k={k}");
        }
    }
}
