//! Generalized capacities of a vertex set K relative to a strictly positive
//! function u: the unconstrained-above variant (`phi >= u on K, >= 0 off K`),
//! the box variant (`u >= phi >= 1_K u`), and the simplified-energy variant
//! (`phi >= 1_K`, objective = simplified total + supersolution term). On
//! finite truncations the outermost killed boundary lives in the potential,
//! so feasible functions are automatically "compactly supported" in the
//! represented infinite graph.

use crate::energy::{
    energy, energy_gradient, energy_hessian, is_supersolution_global, quadratic_form_matrix,
    SolutionClass,
};
use crate::error::{Error, Result};
use crate::graph::{VertexFunction, WeightedGraph};
use crate::numeric::abs_pow;
use crate::simplified::{simplified_energy_value, simplified_objective_gradient};
use crate::solver::{
    minimize_box, random_feasible, solve_linear, Diagnostics, Objective, SolverOptions,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityVariant {
    /// inf Q(phi) over phi >= 1_K u.
    Standard,
    /// inf Q(phi) over u >= phi >= 1_K u.
    Tilde,
    /// inf of the simplified objective over phi >= 1_K; requires a
    /// supersolution u so every term is nonnegative.
    Sim,
}

impl CapacityVariant {
    pub fn name(&self) -> &'static str {
        match self {
            CapacityVariant::Standard => "standard",
            CapacityVariant::Tilde => "tilde",
            CapacityVariant::Sim => "sim",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CapacityResult {
    pub value: f64,
    pub minimizer: VertexFunction,
    pub variant: CapacityVariant,
    pub diagnostics: Diagnostics,
    /// True when the objective was convex (c >= 0, or p = 2 for the
    /// simplified variant) and first-order stationarity was reached.
    pub certified: bool,
}

fn check_set(g: &WeightedGraph, set: &[usize]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::EmptyVertexSet());
    }
    for &i in set {
        if i >= g.vertex_count() {
            return Err(Error::UnknownVertex(format!("#{i}")));
        }
    }
    Ok(())
}

pub fn capacity(
    g: &WeightedGraph,
    u: &VertexFunction,
    set: &[usize],
    variant: CapacityVariant,
    opts: &SolverOptions,
) -> Result<CapacityResult> {
    capacity_with_starts(g, u, set, variant, opts, &[])
}

/// Same as [`capacity`] with caller-provided extra feasible starts (used to
/// chain solves so provable orderings survive solver slack).
pub fn capacity_with_starts(
    g: &WeightedGraph,
    u: &VertexFunction,
    set: &[usize],
    variant: CapacityVariant,
    opts: &SolverOptions,
    extra_starts: &[Vec<f64>],
) -> Result<CapacityResult> {
    check_set(g, set)?;
    if let Some(i) = u.first_nonpositive() {
        return Err(Error::NotStrictlyPositive("u", g.id(i).to_string()));
    }
    let n = g.vertex_count();
    let in_set = {
        let mut mask = vec![false; n];
        for &i in set {
            mask[i] = true;
        }
        mask
    };

    let mut lo = vec![0.0; n];
    let mut hi = vec![f64::INFINITY; n];
    match variant {
        CapacityVariant::Standard => {
            for i in 0..n {
                if in_set[i] {
                    lo[i] = u.get(i);
                }
            }
        }
        CapacityVariant::Tilde => {
            for i in 0..n {
                if in_set[i] {
                    lo[i] = u.get(i);
                }
                hi[i] = u.get(i);
            }
        }
        CapacityVariant::Sim => {
            let sup = is_supersolution_global(g, u, None)?;
            if sup.class == SolutionClass::Neither {
                return Err(Error::NotSupersolution(sup.min_residual));
            }
            for i in 0..n {
                if in_set[i] {
                    lo[i] = 1.0;
                }
            }
        }
    }

    let mut starts: Vec<Vec<f64>> = Vec::new();
    match variant {
        CapacityVariant::Standard | CapacityVariant::Tilde => {
            let level = set.iter().map(|&i| u.get(i)).fold(0.0f64, f64::max);
            starts.push(vec![level; n]); // constant extension
            starts.push(lo.clone()); // the indicator-style corner
            starts.push(u.values().to_vec());
        }
        CapacityVariant::Sim => {
            starts.push(vec![1.0; n]);
            starts.push(lo.clone());
        }
    }
    starts.extend_from_slice(extra_starts);
    let convex = match variant {
        CapacityVariant::Standard | CapacityVariant::Tilde => {
            g.potentials().iter().all(|&c| c >= 0.0)
        }
        CapacityVariant::Sim => (g.p() - 2.0).abs() < 1e-12,
    };
    // every start reaches the global minimum of a convex objective; random
    // restarts only matter for sign-changing potentials
    if !convex {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let spread = 1.0 + u.max_value();
        while starts.len() < opts.restarts.max(starts.len()) {
            starts.push(random_feasible(&mut rng, &lo, &hi, spread));
        }
    }

    let (x, diagnostics) = match variant {
        CapacityVariant::Standard | CapacityVariant::Tilde => {
            let value = |x: &[f64]| energy(g, &VertexFunction::new(x.to_vec())).total;
            let gradient =
                |x: &[f64]| energy_gradient(g, &VertexFunction::new(x.to_vec())).values().to_vec();
            let hessian = |x: &[f64]| energy_hessian(g, x);
            let obj = Objective { value: &value, gradient: &gradient, hessian: Some(&hessian) };
            minimize_box(&obj, &lo, &hi, &starts, opts)
        }
        CapacityVariant::Sim => {
            let p = g.p();
            let uv = u.values().to_vec();
            let res = crate::energy::schrodinger(g, u);
            let source: Vec<f64> =
                (0..n).map(|i| g.measure(i) * u.get(i) * res.get(i)).collect();
            let value = |x: &[f64]| {
                simplified_energy_value(g, &uv, x)
                    + x.iter()
                        .zip(&source)
                        .map(|(&v, &s)| s * abs_pow(v, p))
                        .sum::<f64>()
            };
            let gradient = |x: &[f64]| simplified_objective_gradient(g, &uv, &source, x);
            let hessian = |x: &[f64]| sim_hessian_p2(g, &uv, &source, x);
            let obj = Objective {
                value: &value,
                gradient: &gradient,
                hessian: if convex { Some(&hessian) } else { None },
            };
            minimize_box(&obj, &lo, &hi, &starts, opts)
        }
    };

    let minimizer = VertexFunction::new(x);
    let value = match variant {
        CapacityVariant::Standard | CapacityVariant::Tilde => energy(g, &minimizer).total,
        CapacityVariant::Sim => {
            let res = crate::energy::schrodinger(g, u);
            simplified_energy_value(g, u.values(), minimizer.values())
                + (0..n)
                    .map(|i| {
                        g.measure(i)
                            * u.get(i)
                            * res.get(i)
                            * abs_pow(minimizer.get(i), g.p())
                    })
                    .sum::<f64>()
        }
    };
    let certified = convex && diagnostics.converged;
    Ok(CapacityResult { value, minimizer, variant, diagnostics, certified })
}

/// p = 2 Hessian of the simplified objective (quadratic in that case).
fn sim_hessian_p2(g: &WeightedGraph, u: &[f64], source: &[f64], _x: &[f64]) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut h = DMatrix::zeros(n, n);
    for &(i, j, b) in g.edges() {
        // ordered-pair normalization: 2 * b u(x) u(y) |d phi|^2 per unordered edge
        let w = 4.0 * b * u[i] * u[j];
        h[(i, i)] += w;
        h[(j, j)] += w;
        h[(i, j)] -= w;
        h[(j, i)] -= w;
    }
    for i in 0..n {
        h[(i, i)] += 2.0 * source[i];
    }
    h
}

/// Equivalent reformulation of the standard capacity by substitution:
/// inf Q(psi * u) over psi >= 1_K.
pub fn capacity_via_substitution(
    g: &WeightedGraph,
    u: &VertexFunction,
    set: &[usize],
    opts: &SolverOptions,
) -> Result<CapacityResult> {
    check_set(g, set)?;
    if let Some(i) = u.first_nonpositive() {
        return Err(Error::NotStrictlyPositive("u", g.id(i).to_string()));
    }
    let n = g.vertex_count();
    let mut lo = vec![0.0; n];
    for &i in set {
        lo[i] = 1.0;
    }
    let hi = vec![f64::INFINITY; n];
    let uv = u.values().to_vec();
    let product = |x: &[f64]| {
        VertexFunction::new(x.iter().zip(&uv).map(|(&a, &b)| a * b).collect::<Vec<f64>>())
    };
    let value = |x: &[f64]| energy(g, &product(x)).total;
    let gradient = |x: &[f64]| {
        let grad = energy_gradient(g, &product(x));
        (0..n).map(|i| grad.get(i) * uv[i]).collect::<Vec<f64>>()
    };
    let hessian = |x: &[f64]| {
        let mut h = energy_hessian(g, product(x).values());
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] *= uv[i] * uv[j];
            }
        }
        h
    };
    let obj = Objective { value: &value, gradient: &gradient, hessian: Some(&hessian) };
    let mut starts = vec![vec![1.0; n], lo.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.restarts.max(2) {
        starts.push(random_feasible(&mut rng, &lo, &hi, 2.0));
    }
    let (x, diagnostics) = minimize_box(&obj, &lo, &hi, &starts, opts);
    let minimizer = product(&x);
    let value = energy(g, &minimizer).total;
    let certified = g.potentials().iter().all(|&c| c >= 0.0) && diagnostics.converged;
    Ok(CapacityResult {
        value,
        minimizer,
        variant: CapacityVariant::Standard,
        diagnostics,
        certified,
    })
}

/// Equilibrium-potential oracle at p = 2 with c >= 0 and u = 1: pins phi = 1
/// on K and solves the linear stationarity system off K. Exact up to the
/// linear solve, so it serves as ground truth for the iterative solver.
pub fn capacity_oracle_p2(g: &WeightedGraph, set: &[usize]) -> Result<CapacityResult> {
    check_set(g, set)?;
    if (g.p() - 2.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("oracle requires p = 2".into()));
    }
    if g.potentials().iter().any(|&c| c < 0.0) {
        return Err(Error::InvalidParameter("oracle requires c >= 0".into()));
    }
    let n = g.vertex_count();
    let mut in_set = vec![false; n];
    for &i in set {
        in_set[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !in_set[i]).collect();
    let a = quadratic_form_matrix(g);
    let mut phi = vec![1.0; n];
    if !free.is_empty() {
        let k = free.len();
        let mut aff = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                aff[(r, s)] = a[(i, j)];
            }
            let mut b = 0.0;
            for &j in set {
                b -= a[(i, j)];
            }
            rhs[r] = b;
        }
        let x = solve_linear(&aff, &rhs).ok_or(Error::SingularSystem)?;
        for (r, &i) in free.iter().enumerate() {
            phi[i] = x[r];
        }
    }
    let minimizer = VertexFunction::new(phi);
    let value = energy(g, &minimizer).total;
    Ok(CapacityResult {
        value,
        minimizer,
        variant: CapacityVariant::Standard,
        diagnostics: Diagnostics {
            converged: true,
            iterations: 0,
            grad_norm: 0.0,
            starts: 1,
            best_start: 0,
        },
        certified: true,
    })
}

/// All three variants plus the capacity relative to 1, with the provable
/// ordering and the zero-set agreement checked and the pairwise ratios
/// recorded.
#[derive(Debug, Clone)]
pub struct CapacityEquivalence {
    pub standard: CapacityResult,
    pub tilde: CapacityResult,
    pub sim: CapacityResult,
    pub cap_one: CapacityResult,
    pub substitution: CapacityResult,
    pub ordering_ok: bool,
    pub zero_sets_agree: bool,
    pub zero_threshold: f64,
    pub ratio_tilde: f64,
    pub ratio_sim: f64,
    pub ratio_substitution: f64,
}

pub fn equivalence_report(
    g: &WeightedGraph,
    u: &VertexFunction,
    set: &[usize],
    opts: &SolverOptions,
) -> Result<CapacityEquivalence> {
    let sup = is_supersolution_global(g, u, None)?;
    if sup.class == SolutionClass::Neither {
        return Err(Error::NotSupersolution(sup.min_residual));
    }
    let tilde = capacity(g, u, set, CapacityVariant::Tilde, opts)?;
    // the tilde minimizer is feasible for the standard variant, so the
    // inclusion ordering survives solver slack
    let standard = capacity_with_starts(
        g,
        u,
        set,
        CapacityVariant::Standard,
        opts,
        &[tilde.minimizer.values().to_vec()],
    )?;
    let sim = capacity(g, u, set, CapacityVariant::Sim, opts)?;
    let ones = VertexFunction::constant(g, 1.0);
    let cap_one = capacity(g, &ones, set, CapacityVariant::Standard, opts)?;
    let substitution = capacity_via_substitution(g, u, set, opts)?;
    let zero_threshold = 1e-7;
    let ordering_ok = standard.value <= tilde.value + 1e-9 * (1.0 + tilde.value.abs());
    let zero_sets_agree =
        (standard.value < zero_threshold) == (cap_one.value < zero_threshold);
    let ratio = |a: f64, b: f64| if b != 0.0 { a / b } else { f64::INFINITY };
    Ok(CapacityEquivalence {
        ratio_tilde: ratio(tilde.value, standard.value),
        ratio_sim: ratio(sim.value, standard.value),
        ratio_substitution: ratio(substitution.value, standard.value),
        standard,
        tilde,
        sim,
        cap_one,
        substitution,
        ordering_ok,
        zero_sets_agree,
        zero_threshold,
    })
}
