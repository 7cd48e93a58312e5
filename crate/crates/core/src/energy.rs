//! The energy functional, the weighted p-Laplacian, the quasilinear
//! Schrödinger operator and its residual classification.
//!
//! With gradient difference `grad_xy f = f(x) - f(y)` the energy is
//! `Q(phi) = 1/2 sum_{x,y} b(x,y) |grad_xy phi|^p + sum_x c(x) |phi(x)|^p`,
//! summed over ordered pairs; the stored edge list holds each unordered pair
//! once, so the kinetic part is a plain sum over it.

use crate::error::{Error, Result};
use crate::graph::{VertexFunction, WeightedGraph};
use crate::numeric::{abs_pow, signed_pow};
use nalgebra::DMatrix;

/// Energy split into kinetic and potential parts. `positive_part` is the
/// energy with the potential replaced by its positive part, used as the norm
/// backbone for limit spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    pub positive_part: f64,
}

pub fn energy(g: &WeightedGraph, phi: &VertexFunction) -> EnergyBreakdown {
    let p = g.p();
    let mut kinetic = 0.0;
    for &(i, j, b) in g.edges() {
        kinetic += b * abs_pow(phi.get(i) - phi.get(j), p);
    }
    let mut potential = 0.0;
    let mut potential_pos = 0.0;
    for i in 0..g.vertex_count() {
        let v = abs_pow(phi.get(i), p);
        potential += g.potential(i) * v;
        potential_pos += g.potential(i).max(0.0) * v;
    }
    EnergyBreakdown {
        kinetic,
        potential,
        total: kinetic + potential,
        positive_part: kinetic + potential_pos,
    }
}

/// The weighted p-Laplacian
/// `L f(x) = (1/m(x)) sum_y b(x,y) |grad_xy f|^{p-2} grad_xy f`,
/// with `|t|^{p-2} t` read as `sign(t) |t|^{p-1}` so t = 0 contributes 0 for
/// every p in (1, inf).
pub fn p_laplacian(g: &WeightedGraph, f: &VertexFunction) -> VertexFunction {
    let p = g.p();
    let mut out = vec![0.0; g.vertex_count()];
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for &(j, b) in g.neighbors(i) {
            s += b * signed_pow(f.get(i) - f.get(j), p - 1.0);
        }
        *o = s / g.measure(i);
    }
    VertexFunction::new(out)
}

/// The quasilinear Schrödinger operator `L f + (c/m) |f|^{p-2} f`.
pub fn schrodinger(g: &WeightedGraph, f: &VertexFunction) -> VertexFunction {
    let p = g.p();
    let lap = p_laplacian(g, f);
    let mut out = lap.values().to_vec();
    for (i, o) in out.iter_mut().enumerate() {
        *o += g.potential(i) / g.measure(i) * signed_pow(f.get(i), p - 1.0);
    }
    VertexFunction::new(out)
}

/// Exact gradient of `phi -> energy(g, phi).total`. Computed literally as
/// `p * m(x) * schrodinger(g, phi)(x)`, which is the same expression tree as
/// the operator itself.
pub fn energy_gradient(g: &WeightedGraph, phi: &VertexFunction) -> VertexFunction {
    let p = g.p();
    let res = schrodinger(g, phi);
    let out =
        (0..g.vertex_count()).map(|i| p * g.measure(i) * res.get(i)).collect();
    VertexFunction::new(out)
}

/// Hessian of the energy. For p < 2 the curvature blows up at vanishing
/// increments; those entries come out infinite so the polish phase backs
/// off instead of taking a bogus step.
pub fn energy_hessian(g: &WeightedGraph, phi: &[f64]) -> DMatrix<f64> {
    let p = g.p();
    let curv = |t: f64| {
        if t == 0.0 && p < 2.0 {
            f64::INFINITY
        } else {
            abs_pow(t, p - 2.0)
        }
    };
    let n = g.vertex_count();
    let mut h = DMatrix::zeros(n, n);
    for &(i, j, b) in g.edges() {
        let w = p * (p - 1.0) * b * curv(phi[i] - phi[j]);
        h[(i, i)] += w;
        h[(j, j)] += w;
        h[(i, j)] -= w;
        h[(j, i)] -= w;
    }
    for i in 0..n {
        if g.potential(i) != 0.0 {
            h[(i, i)] += p * (p - 1.0) * g.potential(i) * curv(phi[i]);
        }
    }
    h
}

/// Whether the Hessian at this point is safe to use (p >= 2, or all
/// increments and potential-weighted values bounded away from zero).
pub fn hessian_usable(g: &WeightedGraph, phi: &[f64]) -> bool {
    if g.p() >= 2.0 {
        return true;
    }
    let floor = 1e-7;
    for &(i, j, _) in g.edges() {
        if (phi[i] - phi[j]).abs() < floor {
            return false;
        }
    }
    for i in 0..g.vertex_count() {
        if g.potential(i) != 0.0 && phi[i].abs() < floor {
            return false;
        }
    }
    true
}

/// The p = 2 stiffness-plus-potential matrix: `x' A x = Q(x)` at p = 2.
pub fn quadratic_form_matrix(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut a = DMatrix::zeros(n, n);
    for &(i, j, b) in g.edges() {
        a[(i, i)] += b;
        a[(j, j)] += b;
        a[(i, j)] -= b;
        a[(j, i)] -= b;
    }
    for i in 0..n {
        a[(i, i)] += g.potential(i);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionClass {
    Solution,
    Supersolution,
    Neither,
}

#[derive(Debug, Clone)]
pub struct SupersolutionReport {
    pub class: SolutionClass,
    pub min_residual: f64,
    pub max_abs_residual: f64,
    pub residual: VertexFunction,
    pub tolerance: f64,
}

/// Classify `u` on the region: solution when the operator residual vanishes
/// there (within `tol`), supersolution when it is nonnegative. Requires
/// `u > 0` on the region.
pub fn is_supersolution(
    g: &WeightedGraph,
    u: &VertexFunction,
    region: &[usize],
    tol: Option<f64>,
) -> Result<SupersolutionReport> {
    let tol = tol.unwrap_or(1e-10);
    for &i in region {
        if !(u.get(i) > 0.0) {
            return Err(Error::NotStrictlyPositive("u", g.id(i).to_string()));
        }
    }
    let res = schrodinger(g, u);
    let mut min_residual = f64::INFINITY;
    let mut max_abs = 0.0f64;
    for &i in region {
        min_residual = min_residual.min(res.get(i));
        max_abs = max_abs.max(res.get(i).abs());
    }
    let class = if max_abs <= tol {
        SolutionClass::Solution
    } else if min_residual >= -tol {
        SolutionClass::Supersolution
    } else {
        SolutionClass::Neither
    };
    Ok(SupersolutionReport { class, min_residual, max_abs_residual: max_abs, residual: res, tolerance: tol })
}

/// Convenience: classify on the full vertex set.
pub fn is_supersolution_global(
    g: &WeightedGraph,
    u: &VertexFunction,
    tol: Option<f64>,
) -> Result<SupersolutionReport> {
    let all: Vec<usize> = (0..g.vertex_count()).collect();
    is_supersolution(g, u, &all, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::path;

    #[test]
    fn single_edge_indicator_energy() {
        for p in [1.5, 2.0, 3.0] {
            let g = path(2, false, false).unwrap().with_exponent(p).unwrap();
            let phi = VertexFunction::new(vec![1.0, 0.0]);
            let e = energy(&g, &phi);
            assert!((e.total - 1.0).abs() < 1e-15);
            assert_eq!(e.potential, 0.0);
        }
    }

    #[test]
    fn zero_function_zero_energy() {
        let g = path(3, true, true).unwrap();
        let e = energy(&g, &VertexFunction::zero(&g));
        assert_eq!(e.total, 0.0);
        assert_eq!(e.kinetic, 0.0);
        assert_eq!(e.positive_part, 0.0);
    }

    #[test]
    fn killed_single_vertex_energy() {
        let g = path(1, true, true).unwrap(); // c = 2
        let phi = VertexFunction::new(vec![3.0]);
        let e = energy(&g, &phi);
        assert!((e.total - 18.0).abs() < 1e-12);
    }

    #[test]
    fn constant_functions_are_p_harmonic() {
        let g = path(4, false, false).unwrap().with_exponent(2.5).unwrap();
        let lap = p_laplacian(&g, &VertexFunction::constant(&g, 7.0));
        assert!(lap.values().iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn single_edge_p3_laplacian() {
        let g = path(2, false, false).unwrap().with_exponent(3.0).unwrap();
        let lap = p_laplacian(&g, &VertexFunction::new(vec![1.0, 0.0]));
        assert_eq!(lap.values(), &[1.0, -1.0]);
    }

    #[test]
    fn path_stencil_p2() {
        let g = path(3, false, false).unwrap();
        let lap = p_laplacian(&g, &VertexFunction::new(vec![0.0, 1.0, 0.0]));
        assert_eq!(lap.values(), &[-1.0, 2.0, -1.0]);
    }

    #[test]
    fn schrodinger_reduces_to_laplacian_without_potential() {
        let g = path(5, false, false).unwrap().with_exponent(1.7).unwrap();
        let f = VertexFunction::new(vec![0.3, -1.2, 0.0, 2.0, 0.7]);
        assert_eq!(schrodinger(&g, &f).values(), p_laplacian(&g, &f).values());
    }

    #[test]
    fn schrodinger_on_killed_vertices() {
        let g = path(1, true, true).unwrap();
        let out = schrodinger(&g, &VertexFunction::new(vec![5.0]));
        assert!((out.get(0) - 10.0).abs() < 1e-12);

        let g2 = path(2, true, true).unwrap();
        let out2 = schrodinger(&g2, &VertexFunction::new(vec![1.0, 1.0]));
        assert!((out2.get(0) - 1.0).abs() < 1e-12);
        assert!((out2.get(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_identity_with_operator() {
        let g = path(3, false, false).unwrap();
        let phi = VertexFunction::new(vec![0.0, 1.0, 0.0]);
        let grad = energy_gradient(&g, &phi);
        assert_eq!(grad.values(), &[-2.0, 4.0, -2.0]);
        // p * m * Q'[phi] with bit-equal values
        let res = schrodinger(&g, &phi);
        for i in 0..3 {
            assert_eq!(grad.get(i), 2.0 * g.measure(i) * res.get(i));
        }
    }

    #[test]
    fn gradient_of_zero_is_zero() {
        let g = path(4, true, false).unwrap().with_exponent(1.5).unwrap();
        let grad = energy_gradient(&g, &VertexFunction::zero(&g));
        assert!(grad.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn supersolution_classification() {
        // constants are harmonic when c = 0
        let g = path(3, false, false).unwrap();
        let ones = VertexFunction::constant(&g, 1.0);
        let all: Vec<usize> = (0..3).collect();
        let rep = is_supersolution(&g, &ones, &all, None).unwrap();
        assert_eq!(rep.class, SolutionClass::Solution);

        let killed = path(2, true, true).unwrap();
        let rep = is_supersolution(&killed, &VertexFunction::constant(&killed, 1.0), &[0, 1], None)
            .unwrap();
        assert_eq!(rep.class, SolutionClass::Supersolution);
        assert!((rep.min_residual - 1.0).abs() < 1e-12);

        // a deep negative well makes constants fail both ways
        let mut data = path(2, false, false).unwrap().to_data();
        data.vertices[0].2 = -5.0;
        data.vertices[1].2 = 5.0;
        let g = WeightedGraph::from_data(data).unwrap();
        let rep = is_supersolution(&g, &VertexFunction::constant(&g, 1.0), &[0, 1], None).unwrap();
        assert_eq!(rep.class, SolutionClass::Neither);
    }

    #[test]
    fn supersolution_requires_positivity() {
        let g = path(2, false, false).unwrap();
        let u = VertexFunction::new(vec![1.0, 0.0]);
        assert!(is_supersolution(&g, &u, &[0, 1], None).is_err());
    }
}
