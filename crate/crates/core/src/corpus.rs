//! Seeded random instances for property tests and the randomized check
//! corpus. The potential is built backwards from a prescribed strictly
//! positive function: choosing `c = m (f - L u) / u^{p-1}` with `f >= 0`
//! makes `u` a supersolution, so the functional is nonnegative by
//! construction — with `f = 0` the instance is critical with ground state
//! `u`, with `f` positive somewhere it is subcritical. The potential is
//! sign-changing in general, which is the hard case everywhere.

use crate::energy::p_laplacian;
use crate::graph::{VertexFunction, WeightedGraph};
use crate::numeric::signed_pow;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    /// c = 0; critical with constant ground state.
    Zero,
    /// Nonnegative killing-style potential; subcritical.
    Killing,
    /// Built from a supersolution with strict residual; subcritical,
    /// sign-changing c.
    Subcritical,
    /// Built from an exact positive solution; critical, sign-changing c.
    Critical,
}

/// Random connected graph: a random spanning tree plus extra edges, with
/// `b in (0, 2]` and `m in (0.5, 2]`.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> WeightedGraph {
    assert!(n >= 1);
    let vertices: Vec<(String, f64, f64)> = (0..n)
        .map(|i| (format!("v{i}"), rng.gen_range(0.5..=2.0), 0.0))
        .collect();
    let mut edges = Vec::new();
    let mut present = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        present.insert((j, i));
        edges.push((format!("v{j}"), format!("v{i}"), rng.gen_range(0.05..=2.0)));
    }
    let extra = if n > 2 { rng.gen_range(0..n) } else { 0 };
    for _ in 0..extra {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let key = (i.min(j), i.max(j));
        if i != j && !present.contains(&key) {
            present.insert(key);
            edges.push((
                format!("v{}", key.0),
                format!("v{}", key.1),
                rng.gen_range(0.05..=2.0),
            ));
        }
    }
    WeightedGraph::build(p, vertices, edges).expect("random instance is structurally valid")
}

/// Strictly positive random function with values in [lo, hi].
pub fn random_positive_function(
    rng: &mut ChaCha8Rng,
    g: &WeightedGraph,
    lo: f64,
    hi: f64,
) -> VertexFunction {
    VertexFunction::new((0..g.vertex_count()).map(|_| rng.gen_range(lo..=hi)).collect())
}

/// Random sign-changing function, bounded away from zero to dodge the
/// p < 2 kinks in finite-difference checks.
pub fn random_test_function(rng: &mut ChaCha8Rng, g: &WeightedGraph) -> VertexFunction {
    VertexFunction::new(
        (0..g.vertex_count())
            .map(|_| {
                let mag = rng.gen_range(0.1..=2.0);
                if rng.gen_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect(),
    )
}

/// Instance with the requested potential kind; returns the graph together
/// with the designed supersolution (constant 1 for `Zero` and `Killing`).
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: f64,
    kind: PotentialKind,
) -> (WeightedGraph, VertexFunction) {
    let base = random_connected_graph(rng, n, p);
    match kind {
        PotentialKind::Zero => {
            let u = VertexFunction::constant(&base, 1.0);
            (base, u)
        }
        PotentialKind::Killing => {
            let mut data = base.to_data();
            for v in data.vertices.iter_mut() {
                if rng.gen_bool(0.4) {
                    v.2 = rng.gen_range(0.0..=1.5);
                }
            }
            let g = WeightedGraph::from_data(data).expect("killing potential is valid");
            let u = VertexFunction::constant(&g, 1.0);
            (g, u)
        }
        PotentialKind::Subcritical | PotentialKind::Critical => {
            let u = random_positive_function(rng, &base, 0.3, 2.0);
            let lap = p_laplacian(&base, &u);
            let n_v = base.vertex_count();
            let strict = kind == PotentialKind::Subcritical;
            let mut data = base.to_data();
            for i in 0..n_v {
                let f = if strict && rng.gen_bool(0.5) {
                    rng.gen_range(0.0..=0.5)
                } else {
                    0.0
                };
                let denom = signed_pow(u.get(i), base.p() - 1.0);
                data.vertices[i].2 = base.measure(i) * (f - lap.get(i)) / denom;
            }
            // guarantee strictness somewhere for the subcritical kind
            if strict {
                let denom = signed_pow(u.get(0), base.p() - 1.0);
                let lap0 = lap.get(0);
                data.vertices[0].2 = base.measure(0) * (0.4 - lap0) / denom;
            }
            let g = WeightedGraph::from_data(data).expect("designed potential is valid");
            (g, u)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{is_supersolution_global, SolutionClass};
    use rand::SeedableRng;

    #[test]
    fn designed_supersolutions_classify_correctly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [1.5, 2.0, 3.0] {
            for kind in [PotentialKind::Critical, PotentialKind::Subcritical] {
                let (g, u) = random_instance(&mut rng, 8, p, kind);
                let rep = is_supersolution_global(&g, &u, Some(1e-9)).unwrap();
                match kind {
                    PotentialKind::Critical => assert_eq!(rep.class, SolutionClass::Solution),
                    PotentialKind::Subcritical => {
                        assert_ne!(rep.class, SolutionClass::Neither);
                        assert!(rep.max_abs_residual > 1e-3);
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    #[test]
    fn critical_instances_have_zero_best_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (g, u) = random_instance(&mut rng, 7, 2.0, PotentialKind::Critical);
        let est = crate::hardy::hardy_constant(
            &g,
            &VertexFunction::constant(&g, 1.0),
            &crate::solver::SolverOptions::default(),
        )
        .unwrap();
        assert!(est.lambda0.abs() < 1e-9, "lambda0 = {}", est.lambda0);
        // and the designed u spans the kernel
        let q = crate::energy::energy(&g, &u).total;
        assert!(q.abs() < 1e-9);
    }

    #[test]
    fn graphs_are_connected_and_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let ga = random_connected_graph(&mut a, 10, 2.0);
        let gb = random_connected_graph(&mut b, 10, 2.0);
        assert_eq!(ga, gb);
        assert!(ga.is_connected());
    }
}
