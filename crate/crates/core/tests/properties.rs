//! Property tests for the structural invariants: restriction semantics,
//! energy homogeneity and absolute-value compatibility, simplified-energy
//! term positivity, capacity monotonicity, best-constant scaling and
//! monotonicity, and Cheeger scaling.

use hardy_graph::capacity::{capacity, CapacityVariant};
use hardy_graph::cheeger::{cheeger_constant, CheegerOptions};
use hardy_graph::corpus::{
    random_connected_graph, random_instance, random_positive_function, random_test_function,
    PotentialKind,
};
use hardy_graph::energy::energy;
use hardy_graph::graph::{combinatorial_distance, restrict, EdgeTable, VertexFunction};
use hardy_graph::hardy::hardy_constant;
use hardy_graph::simplified::{simplified_terms, simplified_energy_value};
use hardy_graph::solver::SolverOptions;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> SolverOptions {
    SolverOptions { max_iter: 2000, restarts: 4, ..SolverOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn restriction_composes(seed in 0u64..1000, n in 4usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(&mut rng, n, 2.0);
        let outer: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
        prop_assume!(outer.len() >= 2);
        let inner_rel: Vec<usize> =
            (0..outer.len()).filter(|_| rng.gen_bool(0.6)).collect();
        prop_assume!(!inner_rel.is_empty());
        let inner_abs: Vec<usize> = inner_rel.iter().map(|&k| outer[k]).collect();
        let once = restrict(&restrict(&g, &outer).unwrap(), &inner_rel).unwrap();
        let direct = restrict(&g, &inner_abs).unwrap();
        // identical up to the association order of the killed-edge sums
        let a = once.to_data();
        let b = direct.to_data();
        prop_assert_eq!(&a.edges, &b.edges);
        prop_assert_eq!(a.vertices.len(), b.vertices.len());
        for (x, y) in a.vertices.iter().zip(&b.vertices) {
            prop_assert_eq!(&x.0, &y.0);
            prop_assert_eq!(x.1, y.1);
            prop_assert!((x.2 - y.2).abs() <= 1e-12 * (1.0 + y.2.abs()));
        }
    }

    #[test]
    fn killing_adds_positive_potential(seed in 0u64..1000, n in 3usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(&mut rng, n, 2.0);
        let keep: Vec<usize> = (0..n - 1).collect(); // drop the last vertex
        let sub = restrict(&g, &keep).unwrap();
        let total: f64 = sub.potentials().iter().sum();
        // connected graph: the dropped vertex has at least one edge
        prop_assert!(total > 0.0);
    }

    #[test]
    fn distance_satisfies_triangle_inequality(seed in 0u64..500, n in 3usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(&mut rng, n, 2.0);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let xy = combinatorial_distance(&g, x, y).unwrap();
                    let yz = combinatorial_distance(&g, y, z).unwrap();
                    let xz = combinatorial_distance(&g, x, z).unwrap();
                    prop_assert!(xz <= xy + yz);
                }
            }
        }
    }

    #[test]
    fn energy_homogeneity_and_absolute_value(
        seed in 0u64..1000,
        t in -3.0f64..3.0,
        p_idx in 0usize..3,
    ) {
        let p = [1.5, 2.0, 3.0][p_idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..10);
        let (g, _) = random_instance(&mut rng, n, p, PotentialKind::Killing);
        let phi = random_test_function(&mut rng, &g);
        let e = energy(&g, &phi).total;
        let scaled = energy(&g, &phi.scale(t)).total;
        prop_assert!((scaled - t.abs().powf(p) * e).abs() <= 1e-10 * (1.0 + e.abs()));
        let abs_e = energy(&g, &phi.abs()).total;
        prop_assert!(abs_e <= e + 1e-12 * (1.0 + e.abs()));
        // nonnegative potential keeps the energy nonnegative
        prop_assert!(e >= 0.0);
    }

    #[test]
    fn gradient_is_operator_times_measure(seed in 0u64..1000, p_idx in 0usize..3) {
        let p = [1.5, 2.0, 3.0][p_idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..10);
        let (g, _) = random_instance(&mut rng, n, p, PotentialKind::Subcritical);
        let phi = random_test_function(&mut rng, &g);
        let grad = hardy_graph::energy::energy_gradient(&g, &phi);
        let res = hardy_graph::energy::schrodinger(&g, &phi);
        for i in 0..g.vertex_count() {
            let expect = p * g.measure(i) * res.get(i);
            prop_assert!((grad.get(i) - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn simplified_terms_nonnegative_and_homogeneous(
        seed in 0u64..1000,
        t in -2.0f64..2.0,
        p_idx in 0usize..3,
    ) {
        let p = [1.5, 2.0, 3.0][p_idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..10);
        let (g, _) = random_instance(&mut rng, n, p, PotentialKind::Zero);
        let u = random_positive_function(&mut rng, &g, 0.2, 2.0);
        let phi = random_test_function(&mut rng, &g);
        let terms = simplified_terms(&g, &u, &phi).unwrap();
        for (_, v) in terms.terms.iter() {
            prop_assert!(v >= 0.0);
        }
        let base = simplified_energy_value(&g, u.values(), phi.values());
        let scaled = simplified_energy_value(&g, u.values(), phi.scale(t).values());
        prop_assert!((scaled - t.abs().powf(p) * base).abs() <= 1e-9 * (1.0 + base.abs()));
    }

    #[test]
    fn sandwich_middle_nonnegative_for_supersolutions(seed in 0u64..1000, p_idx in 0usize..3) {
        let p = [1.5, 2.0, 3.0][p_idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..10);
        let (g, u) = random_instance(&mut rng, n, p, PotentialKind::Subcritical);
        let phi = random_test_function(&mut rng, &g);
        let terms = simplified_terms(&g, &u, &phi).unwrap();
        prop_assert!(terms.total >= 0.0);
        prop_assert!(terms.supersolution_term >= -1e-10);
    }

    #[test]
    fn capacity_monotone_in_the_set(seed in 0u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
        let n = rng.gen_range(3..8);
        let (g, u) = random_instance(&mut rng, n, p, PotentialKind::Killing);
        let small: Vec<usize> = vec![0];
        let large: Vec<usize> = vec![0, rng.gen_range(1..n)];
        let o = opts();
        // seed the larger problem's minimizer into the smaller one: the
        // feasible cone only grows when the set shrinks
        let cap_large = capacity(&g, &u, &large, CapacityVariant::Standard, &o).unwrap();
        let cap_small = hardy_graph::capacity::capacity_with_starts(
            &g, &u, &small, CapacityVariant::Standard, &o,
            &[cap_large.minimizer.values().to_vec()],
        ).unwrap();
        prop_assert!(cap_small.value <= cap_large.value + 1e-8 * (1.0 + cap_large.value));
    }

    #[test]
    fn hardy_constant_scales_inversely(seed in 0u64..300, t in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..10);
        let (g, _) = random_instance(&mut rng, n, 2.0, PotentialKind::Killing);
        let w = random_positive_function(&mut rng, &g, 0.1, 2.0);
        let o = opts();
        let a = hardy_constant(&g, &w, &o).unwrap();
        let b = hardy_constant(&g, &w.scale(t), &o).unwrap();
        prop_assert!((b.lambda0 - a.lambda0 / t).abs() <= 1e-9 * (1.0 + a.lambda0.abs()));
    }

    #[test]
    fn hardy_constant_monotone_in_weight(seed in 0u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..10);
        let (g, _) = random_instance(&mut rng, n, 2.0, PotentialKind::Killing);
        let w1 = random_positive_function(&mut rng, &g, 0.1, 1.0);
        let bump = random_positive_function(&mut rng, &g, 0.0, 1.0);
        let w2 = VertexFunction::new(
            (0..n).map(|i| w1.get(i) + bump.get(i)).collect::<Vec<f64>>(),
        );
        let o = opts();
        let a = hardy_constant(&g, &w1, &o).unwrap();
        let b = hardy_constant(&g, &w2, &o).unwrap();
        prop_assert!(a.lambda0 >= b.lambda0 - 1e-9 * (1.0 + b.lambda0.abs()));
    }

    #[test]
    fn restriction_raises_the_best_constant(seed in 0u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..10);
        let (g, _) = random_instance(&mut rng, n, 2.0, PotentialKind::Killing);
        let keep: Vec<usize> = (0..n - 1).collect();
        let sub = restrict(&g, &keep).unwrap();
        let w = VertexFunction::constant(&g, 1.0);
        let w_sub = VertexFunction::constant(&sub, 1.0);
        let o = opts();
        let full = hardy_constant(&g, &w, &o).unwrap();
        let small = hardy_constant(&sub, &w_sub, &o).unwrap();
        prop_assert!(small.lambda0 >= full.lambda0 - 1e-9);
    }

    #[test]
    fn cheeger_scales_in_weights_and_measure(seed in 0u64..300, t in 0.1f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..9);
        let g = random_connected_graph(&mut rng, n, 2.0);
        let a = EdgeTable::from_graph(&g);
        let mu: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let copts = CheegerOptions { size_cap: n, ..CheegerOptions::default() };
        let base = cheeger_constant(g.ids(), &a, &mu, &copts).unwrap();
        let scaled_a =
            cheeger_constant(g.ids(), &a.map_values(|v| t * v), &mu, &copts).unwrap();
        prop_assert!((scaled_a.h - t * base.h).abs() <= 1e-12 * (1.0 + base.h));
        prop_assert_eq!(&scaled_a.argmin_set, &base.argmin_set);
        let scaled_mu: Vec<f64> = mu.iter().map(|&v| t * v).collect();
        let scaled_m = cheeger_constant(g.ids(), &a, &scaled_mu, &copts).unwrap();
        prop_assert!((scaled_m.h - base.h / t).abs() <= 1e-12 * (1.0 + base.h));
    }

    #[test]
    fn graph_files_round_trip(seed in 0u64..1000, n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = [1.5, 2.0, 2.7, 3.0][rng.gen_range(0..4)];
        let (g, _) = random_instance(&mut rng, n, p, PotentialKind::Subcritical);
        let text = hardy_graph::io::save_graph(&g);
        let back = hardy_graph::io::load_graph(&text).unwrap();
        prop_assert_eq!(back, g);
    }
}

/// Ground-state transform invariance of the p = 2 quotient: reweighting the
/// edges by a positive harmonic function and dividing the test function by
/// it leaves the quotient unchanged.
#[test]
fn gst_quotient_invariance_p2() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let n = rng.gen_range(3..9);
        let (g, u) = random_instance(&mut rng, n, 2.0, PotentialKind::Critical);
        let w = random_positive_function(&mut rng, &g, 0.2, 2.0);
        let phi = random_test_function(&mut rng, &g);
        let table = hardy_graph::cheeger::ground_state_transform(&g, &u).unwrap();
        let transformed = g
            .with_edge_table(&table, Some(vec![0.0; n]))
            .unwrap();
        let num_orig = energy(&g, &phi).total;
        let den_orig: f64 =
            (0..n).map(|i| g.measure(i) * w.get(i) * phi.get(i).powi(2)).sum();
        let ratio_orig = num_orig / den_orig;
        let phi_over_u =
            VertexFunction::new((0..n).map(|i| phi.get(i) / u.get(i)).collect::<Vec<f64>>());
        let num_t = energy(&transformed, &phi_over_u).total;
        let den_t: f64 = (0..n)
            .map(|i| {
                g.measure(i) * u.get(i).powi(2) * w.get(i) * phi_over_u.get(i).powi(2)
            })
            .sum();
        let ratio_t = num_t / den_t;
        assert!(
            (ratio_orig - ratio_t).abs() <= 1e-10 * (1.0 + ratio_orig.abs()),
            "{ratio_orig} vs {ratio_t}"
        );
    }
}

/// For p != 2 the returned best constant must upper-bound a brute-force
/// random sample of the quotient.
#[test]
fn descent_upper_bounds_random_quotient_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for &p in &[1.5, 3.0] {
        let (g, _) = random_instance(&mut rng, 7, p, PotentialKind::Killing);
        let w = random_positive_function(&mut rng, &g, 0.2, 2.0);
        let est = hardy_constant(&g, &w, &opts()).unwrap();
        let mut sample_min = f64::INFINITY;
        for _ in 0..100_000 {
            let phi = VertexFunction::new(
                (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>(),
            );
            let q = hardy_graph::hardy::rayleigh_quotient(&g, &w, &phi);
            if q.is_finite() {
                sample_min = sample_min.min(q);
            }
        }
        assert!(
            est.lambda0 <= sample_min + 1e-6,
            "p = {p}: descent {} vs sample {sample_min}",
            est.lambda0
        );
    }
}

/// Every enforced bound in the Cheeger report holds on a randomized corpus
/// of killed truncations; violations are hard failures.
#[test]
fn cheeger_bound_reports_hold_on_random_killed_instances() {
    use hardy_graph::cheeger::{cheeger_bounds_report, CheegerBoundsVariant, CheegerOptions};
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let o = opts();
    let mut checked = 0;
    for _ in 0..60 {
        let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
        let n = rng.gen_range(4..9);
        let g = random_connected_graph(&mut rng, n, p);
        // kill the last vertex to make the truncation subcritical
        let keep: Vec<usize> = (0..n - 1).collect();
        let sub = restrict(&g, &keep).unwrap();
        let interior: Vec<usize> =
            (0..sub.vertex_count()).filter(|&i| sub.potential(i) == 0.0).collect();
        if interior.len() < 2 || !sub.is_connected() {
            continue;
        }
        let w = random_positive_function(&mut rng, &sub, 0.2, 2.0);
        let copts = CheegerOptions {
            size_cap: interior.len(),
            connected_only: false,
            exclude_full: true,
            admissible: Some(interior),
        };
        let report =
            cheeger_bounds_report(&sub, &w, &CheegerBoundsVariant::GeneralP, &copts, &o)
                .unwrap();
        checked += 1;
        for a in report.bounds.iter().chain(&report.gst_extra) {
            assert!(!a.enforced || a.passed, "bound {} violated: {a:?}", a.name);
        }
    }
    assert!(checked > 20, "too few usable instances: {checked}");
}

/// Point-source solutions stay strictly positive on random subcritical
/// instances.
#[test]
fn green_functions_are_positive_on_subcritical_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let o = opts();
    for _ in 0..100 {
        let n = rng.gen_range(2..10);
        let (g, _) = random_instance(&mut rng, n, 2.0, PotentialKind::Subcritical);
        let pole = rng.gen_range(0..n);
        let green = hardy_graph::hardy::green_function(&g, pole, &o).unwrap();
        assert!(green.u.is_strictly_positive());
        assert!(green.flux > 0.0);
    }
}

/// Tail best-constant estimates never decrease along a plan.
#[test]
fn tail_estimates_are_monotone_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let o = opts();
    for _ in 0..50 {
        let n = rng.gen_range(4..10);
        let (g, _) = random_instance(&mut rng, n, 2.0, PotentialKind::Killing);
        let w = random_positive_function(&mut rng, &g, 0.1, 2.0);
        let plan =
            hardy_graph::graph::ExhaustionPlan::prefixes(&g, &[1, n / 2, n - 1]).unwrap();
        let tail = hardy_graph::hardy::lambda_infty(&g, &w, &plan, &o).unwrap();
        for pair in tail.values.windows(2) {
            assert!(pair[0] <= pair[1] + 1e-9 * (1.0 + pair[0].abs()), "{:?}", tail.values);
        }
    }
}

/// Null-sequence minimizers are monotone under growing truncations: the
/// same stage on a larger segment spends less energy.
#[test]
fn null_sequence_energies_decrease_with_truncation_growth() {
    let o = opts();
    let mut previous = f64::INFINITY;
    for half in [6usize, 9, 12] {
        let g = hardy_graph::generate::path(2 * half + 1, false, false).unwrap();
        let plan =
            hardy_graph::graph::ExhaustionPlan::balls(&g, half, &[1, half - 1]).unwrap();
        let report = hardy_graph::hardy::null_sequence(&g, &plan, None, &o).unwrap();
        let first_stage = report.energies[0];
        assert!(first_stage <= previous + 1e-10);
        previous = first_stage;
    }
}
