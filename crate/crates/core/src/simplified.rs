//! The simplified energy built from a strictly positive reference function
//! `u`: every term is nonnegative, the total is two-sidedly comparable to
//! the energy of `u * phi` plus a supersolution term, and the functional is
//! monotone under suitable normal contractions. This is the workhorse behind
//! the capacity equivalences and the Hardy-weight characterization.

use crate::energy::{energy, is_supersolution_global, SolutionClass};
use crate::error::{Error, Result};
use crate::graph::{EdgeTable, VertexFunction, WeightedGraph};
use crate::numeric::{abs_pow, signed_pow};
use crate::report::Assertion;

/// Termwise simplified energy. `total` sums over ordered pairs, i.e. twice
/// the unordered table sum. `supersolution_term` is
/// `sum_x m(x) u(x) R[u](x) |phi(x)|^p` with `R` the Schrödinger operator;
/// it is nonnegative whenever `u` is a supersolution.
#[derive(Debug, Clone)]
pub struct SimplifiedTerms {
    pub terms: EdgeTable,
    pub total: f64,
    pub supersolution_term: f64,
}

/// One unordered term
/// `b(x,y) u(x) u(y) |d phi|^2 [ |d u| (|phi(x)|+|phi(y)|)/2 + sqrt(u(x)u(y)) |d phi| ]^{p-2}`.
/// The convention 0 * inf = 0 applies when `d phi = 0`; a vanishing bracket
/// with `d phi != 0` and p < 2 saturates to +inf.
fn term(p: f64, b: f64, ux: f64, uy: f64, phix: f64, phiy: f64, du: f64) -> f64 {
    let dphi = phix - phiy;
    if dphi == 0.0 || b == 0.0 {
        return 0.0;
    }
    let bracket = du.abs() * 0.5 * (phix.abs() + phiy.abs()) + (ux * uy).sqrt() * dphi.abs();
    if bracket == 0.0 {
        return if p < 2.0 { f64::INFINITY } else { 0.0 };
    }
    b * ux * uy * dphi * dphi * bracket.powf(p - 2.0)
}

fn check_positive(g: &WeightedGraph, u: &VertexFunction) -> Result<()> {
    if let Some(i) = u.first_nonpositive() {
        return Err(Error::NotStrictlyPositive("u", g.id(i).to_string()));
    }
    Ok(())
}

pub fn simplified_terms(
    g: &WeightedGraph,
    u: &VertexFunction,
    phi: &VertexFunction,
) -> Result<SimplifiedTerms> {
    check_positive(g, u)?;
    let p = g.p();
    let mut table = EdgeTable::new();
    let mut unordered = 0.0f64;
    for &(i, j, b) in g.edges() {
        let t = term(p, b, u.get(i), u.get(j), phi.get(i), phi.get(j), u.get(i) - u.get(j));
        table.set(g.id(i), g.id(j), t);
        unordered += t;
    }
    Ok(SimplifiedTerms {
        terms: table,
        total: 2.0 * unordered,
        supersolution_term: supersolution_term(g, u, phi),
    })
}

/// Fast total without building the table (ordered-pair normalization).
pub fn simplified_energy_value(g: &WeightedGraph, u: &[f64], phi: &[f64]) -> f64 {
    let p = g.p();
    let mut s = 0.0;
    for &(i, j, b) in g.edges() {
        s += term(p, b, u[i], u[j], phi[i], phi[j], u[i] - u[j]);
    }
    2.0 * s
}

/// `sum_x m(x) u(x) R[u](x) |phi(x)|^p`.
pub fn supersolution_term(g: &WeightedGraph, u: &VertexFunction, phi: &VertexFunction) -> f64 {
    let p = g.p();
    let res = crate::energy::schrodinger(g, u);
    (0..g.vertex_count())
        .map(|i| g.measure(i) * u.get(i) * res.get(i) * abs_pow(phi.get(i), p))
        .sum()
}

/// Gradient of `phi -> simplified total + supersolution term` at points of
/// differentiability; used by the simplified-capacity solver.
pub fn simplified_objective_gradient(
    g: &WeightedGraph,
    u: &[f64],
    source: &[f64],
    phi: &[f64],
) -> Vec<f64> {
    let p = g.p();
    let mut grad = vec![0.0; g.vertex_count()];
    for &(i, j, b) in g.edges() {
        let dphi = phi[i] - phi[j];
        if dphi == 0.0 || b == 0.0 {
            continue;
        }
        let a = (u[i] - u[j]).abs();
        let root = (u[i] * u[j]).sqrt();
        let bracket = a * 0.5 * (phi[i].abs() + phi[j].abs()) + root * dphi.abs();
        if bracket <= 0.0 {
            continue;
        }
        let front = b * u[i] * u[j];
        let wp2 = bracket.powf(p - 2.0);
        let wp3 = bracket.powf(p - 3.0);
        let common = 2.0 * dphi * wp2;
        let bracket_term = dphi * dphi * (p - 2.0) * wp3;
        // d bracket / d phi(i) and / d phi(j)
        let dbi = a * 0.5 * sgn0(phi[i]) + root * dphi.signum();
        let dbj = a * 0.5 * sgn0(phi[j]) - root * dphi.signum();
        // ordered-pair normalization doubles every unordered term
        grad[i] += 2.0 * front * (common + bracket_term * dbi);
        grad[j] += 2.0 * front * (-common + bracket_term * dbj);
    }
    for i in 0..g.vertex_count() {
        grad[i] += p * source[i] * signed_pow(phi[i], p - 1.0);
    }
    grad
}

fn sgn0(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum()
    }
}

/// A normal contraction: a map with C(0) = 0 and Lipschitz constant 1.
#[derive(Debug, Clone, PartialEq)]
pub enum ContractionSpec {
    AbsoluteValue,
    /// Realizes `(-alpha) v phi ^ beta` with alpha, beta >= 0.
    Clamp { alpha: f64, beta: f64 },
    /// Slopes on the intervals split by the (strictly increasing)
    /// breakpoints; slopes.len() = breakpoints.len() + 1, all |slope| <= 1.
    /// Anchored at C(0) = 0.
    PiecewiseLinear { breakpoints: Vec<f64>, slopes: Vec<f64> },
}

impl ContractionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ContractionSpec::AbsoluteValue => Ok(()),
            ContractionSpec::Clamp { alpha, beta } => {
                if *alpha >= 0.0 && *beta >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidContraction(
                        "clamp bounds must be nonnegative".into(),
                    ))
                }
            }
            ContractionSpec::PiecewiseLinear { breakpoints, slopes } => {
                if slopes.len() != breakpoints.len() + 1 {
                    return Err(Error::InvalidContraction(
                        "need one slope per interval".into(),
                    ));
                }
                if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidContraction(
                        "breakpoints must be strictly increasing".into(),
                    ));
                }
                if slopes.iter().any(|s| !(s.abs() <= 1.0 + 1e-12)) {
                    return Err(Error::InvalidContraction("slope exceeds 1".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ContractionSpec::AbsoluteValue => s.abs(),
            ContractionSpec::Clamp { alpha, beta } => s.min(*beta).max(-*alpha),
            ContractionSpec::PiecewiseLinear { breakpoints, slopes } => {
                // integrate the slope field from 0 to s
                let (lo, hi) = (0.0f64.min(s), 0.0f64.max(s));
                let sign = if s >= 0.0 { 1.0 } else { -1.0 };
                let mut acc = 0.0;
                for (k, &slope) in slopes.iter().enumerate() {
                    let left = if k == 0 { f64::NEG_INFINITY } else { breakpoints[k - 1] };
                    let right =
                        if k == breakpoints.len() { f64::INFINITY } else { breakpoints[k] };
                    let a = lo.max(left);
                    let b = hi.min(right);
                    if b > a {
                        acc += slope * (b - a);
                    }
                }
                sign * acc
            }
        }
    }
}

/// Pointwise composition `C o phi` after validating the spec.
pub fn apply_contraction(phi: &VertexFunction, spec: &ContractionSpec) -> Result<VertexFunction> {
    spec.validate()?;
    Ok(VertexFunction::new(phi.values().iter().map(|&v| spec.eval(v)).collect()))
}

/// Contraction-monotonicity report: the simplified total never increases
/// under absolute value or clamps for any p, and under arbitrary normal
/// contractions for p >= 2. For p < 2 with a general contraction the
/// comparison is recorded but not asserted.
#[derive(Debug, Clone)]
pub struct ContractionCheck {
    pub before: f64,
    pub after: f64,
    pub asserted: bool,
    pub holds: bool,
    pub slack: f64,
}

pub fn contraction_monotonicity_check(
    g: &WeightedGraph,
    u: &VertexFunction,
    phi: &VertexFunction,
    spec: &ContractionSpec,
) -> Result<ContractionCheck> {
    check_positive(g, u)?;
    spec.validate()?;
    let before = simplified_energy_value(g, u.values(), phi.values());
    let contracted = apply_contraction(phi, spec)?;
    let after = simplified_energy_value(g, u.values(), contracted.values());
    let asserted = match spec {
        ContractionSpec::AbsoluteValue | ContractionSpec::Clamp { .. } => true,
        ContractionSpec::PiecewiseLinear { .. } => g.p() >= 2.0,
    };
    let tol = 1e-12 * (1.0 + before.abs());
    let holds = after <= before + tol;
    Ok(ContractionCheck { before, after, asserted, holds, slack: before - after })
}

/// Two-sided comparison data: the energy of `u * phi` against the
/// simplified total plus supersolution term. The quotient
/// `middle / Q(u phi)` is bounded above and below by p-dependent constants;
/// at p = 2 the exact identity `Q(u phi) = total/2 + supersolution term`
/// pins it inside [1, 2].
#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub energy_u_phi: f64,
    pub simplified_total: f64,
    pub supersolution_term: f64,
    pub middle: f64,
    pub ratio: f64,
    pub inconsistent: bool,
}

pub fn sandwich_report(
    g: &WeightedGraph,
    u: &VertexFunction,
    phi: &VertexFunction,
) -> Result<SandwichReport> {
    check_positive(g, u)?;
    let sup = is_supersolution_global(g, u, None)?;
    if sup.class == SolutionClass::Neither {
        return Err(Error::NotSupersolution(sup.min_residual));
    }
    let product = VertexFunction::new(
        (0..g.vertex_count()).map(|i| u.get(i) * phi.get(i)).collect(),
    );
    let q = energy(g, &product).total;
    let terms = simplified_terms(g, u, phi)?;
    let middle = terms.total + terms.supersolution_term;
    let (ratio, inconsistent) = if q != 0.0 {
        (middle / q, false)
    } else {
        (f64::NAN, middle.abs() > 1e-10 * (1.0 + terms.total.abs()))
    };
    Ok(SandwichReport {
        energy_u_phi: q,
        simplified_total: terms.total,
        supersolution_term: terms.supersolution_term,
        middle,
        ratio,
        inconsistent,
    })
}

/// Cutoff comparison `Q(0 v phi ^ u)` against `Q(phi)` for a strictly
/// positive supersolution `u`. At p = 2 the ratio is asserted <= 2; for
/// other p only finiteness is asserted and the empirical constant recorded.
#[derive(Debug, Clone)]
pub struct CutoffReport {
    pub cutoff_energy: f64,
    pub energy: f64,
    pub ratio: f64,
    pub assertion: Assertion,
}

pub fn cutoff_energy_check(
    g: &WeightedGraph,
    u: &VertexFunction,
    phi: &VertexFunction,
) -> Result<CutoffReport> {
    check_positive(g, u)?;
    let sup = is_supersolution_global(g, u, None)?;
    if sup.class == SolutionClass::Neither {
        return Err(Error::NotSupersolution(sup.min_residual));
    }
    let cutoff = VertexFunction::new(
        (0..g.vertex_count())
            .map(|i| phi.get(i).max(0.0).min(u.get(i)))
            .collect(),
    );
    let e_phi = energy(g, phi).total;
    let e_cut = energy(g, &cutoff).total;
    let ratio = e_cut / e_phi;
    let assertion = if (g.p() - 2.0).abs() < 1e-12 {
        Assertion::le("cutoff_ratio_le_2", e_cut, 2.0 * e_phi, 1e-9)
    } else {
        Assertion::holds("cutoff_ratio_finite", ratio.is_finite(), ratio, f64::INFINITY)
    };
    Ok(CutoffReport { cutoff_energy: e_cut, energy: e_phi, ratio, assertion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::path;

    #[test]
    fn p2_terms_drop_the_bracket() {
        let g = path(2, false, false).unwrap();
        let u = VertexFunction::new(vec![2.0, 3.0]);
        let phi = VertexFunction::new(vec![1.0, -1.0]);
        let t = simplified_terms(&g, &u, &phi).unwrap();
        // b u(x) u(y) |d phi|^2 = 1 * 6 * 4
        assert!((t.terms.get("v0", "v1") - 24.0).abs() < 1e-12);
        assert!((t.total - 48.0).abs() < 1e-12);
    }

    #[test]
    fn zero_phi_zero_terms() {
        let g = path(3, true, false).unwrap().with_exponent(1.5).unwrap();
        let u = VertexFunction::constant(&g, 1.0);
        let t = simplified_terms(&g, &u, &VertexFunction::zero(&g)).unwrap();
        assert_eq!(t.total, 0.0);
        assert!(t.terms.iter().all(|(_, v)| v == 0.0));
    }

    #[test]
    fn single_edge_p3_term_by_hand() {
        // u = (1,1) so the u-increment vanishes and the bracket is |d phi|
        let g = path(2, false, false).unwrap().with_exponent(3.0).unwrap();
        let u = VertexFunction::constant(&g, 1.0);
        let phi = VertexFunction::new(vec![1.0, 0.0]);
        let t = simplified_terms(&g, &u, &phi).unwrap();
        assert!((t.terms.get("v0", "v1") - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_u() {
        let g = path(2, false, false).unwrap();
        let u = VertexFunction::new(vec![1.0, -1.0]);
        assert!(simplified_terms(&g, &u, &VertexFunction::constant(&g, 1.0)).is_err());
    }

    #[test]
    fn contraction_eval_cases() {
        let spec = ContractionSpec::Clamp { alpha: 0.0, beta: 1.0 };
        assert_eq!(spec.eval(-0.5), 0.0);
        assert_eq!(spec.eval(0.7), 0.7);
        assert_eq!(spec.eval(3.0), 1.0);

        // through (0,0), (1,1), (2,1): slope 1 before 1, then 0
        let pl = ContractionSpec::PiecewiseLinear {
            breakpoints: vec![1.0],
            slopes: vec![1.0, 0.0],
        };
        pl.validate().unwrap();
        assert_eq!(pl.eval(1.5), 1.0);
        assert_eq!(pl.eval(0.5), 0.5);
        assert_eq!(pl.eval(-2.0), -2.0);
        assert_eq!(pl.eval(0.0), 0.0);
    }

    #[test]
    fn contraction_validation_rejects_bad_specs() {
        assert!(ContractionSpec::Clamp { alpha: -1.0, beta: 0.0 }.validate().is_err());
        assert!(ContractionSpec::PiecewiseLinear {
            breakpoints: vec![0.0],
            slopes: vec![1.0, 1.5]
        }
        .validate()
        .is_err());
        assert!(ContractionSpec::PiecewiseLinear {
            breakpoints: vec![1.0, 0.5],
            slopes: vec![0.1, 0.2, 0.3]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn apply_contraction_examples() {
        let phi = VertexFunction::new(vec![-1.0, 2.0]);
        let abs = apply_contraction(&phi, &ContractionSpec::AbsoluteValue).unwrap();
        assert_eq!(abs.values(), &[1.0, 2.0]);

        let phi3 = VertexFunction::new(vec![-0.5, 0.7, 3.0]);
        let clamped =
            apply_contraction(&phi3, &ContractionSpec::Clamp { alpha: 0.0, beta: 1.0 }).unwrap();
        assert_eq!(clamped.values(), &[0.0, 0.7, 1.0]);
    }

    #[test]
    fn identity_contraction_keeps_energy() {
        let g = path(4, false, false).unwrap().with_exponent(3.0).unwrap();
        let u = VertexFunction::new(vec![1.0, 2.0, 1.5, 0.5]);
        let phi = VertexFunction::new(vec![0.2, -1.0, 0.8, 0.0]);
        let ident = ContractionSpec::PiecewiseLinear { breakpoints: vec![], slopes: vec![1.0] };
        let check = contraction_monotonicity_check(&g, &u, &phi, &ident).unwrap();
        assert!((check.before - check.after).abs() < 1e-12 * (1.0 + check.before));
        assert!(check.holds && check.asserted);
    }

    #[test]
    fn sandwich_no_edge_graph() {
        // single killed vertex: middle = supersolution term = c |phi|^p = Q(u phi)
        let g = path(1, true, true).unwrap();
        let u = VertexFunction::constant(&g, 1.0);
        let phi = VertexFunction::new(vec![1.0]);
        let rep = sandwich_report(&g, &u, &phi).unwrap();
        assert!((rep.middle - rep.supersolution_term).abs() < 1e-15);
        assert!((rep.middle - rep.energy_u_phi).abs() < 1e-12);
        assert!((rep.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_degenerate_when_phi_already_between() {
        let g = path(3, true, true).unwrap();
        let u = VertexFunction::constant(&g, 1.0);
        let phi = VertexFunction::new(vec![0.0, 0.5, 0.25]);
        let rep = cutoffcheck(&g, &u, &phi);
        assert!((rep.cutoff_energy - rep.energy).abs() < 1e-14);
    }

    fn cutoffcheck(
        g: &crate::graph::WeightedGraph,
        u: &VertexFunction,
        phi: &VertexFunction,
    ) -> CutoffReport {
        cutoff_energy_check(g, u, phi).unwrap()
    }

    #[test]
    fn cutoff_of_twice_u() {
        let g = path(3, true, true).unwrap();
        let u = VertexFunction::constant(&g, 1.0);
        let phi = u.scale(2.0);
        let rep = cutoff_energy_check(&g, &u, &phi).unwrap();
        // cutoff is u itself
        assert!((rep.cutoff_energy - energy(&g, &u).total).abs() < 1e-14);
        assert!(rep.assertion.passed);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = path(4, true, false).unwrap().with_exponent(2.5).unwrap();
        let u = vec![1.0, 2.0, 1.5, 0.7];
        let source: Vec<f64> = (0..4).map(|i| 0.3 * (i as f64 + 1.0)).collect();
        let phi = vec![0.4, -0.9, 1.3, 0.2];
        let grad = simplified_objective_gradient(&g, &u, &source, &phi);
        let p = g.p();
        let f = |x: &[f64]| {
            simplified_energy_value(&g, &u, x)
                + x.iter()
                    .zip(&source)
                    .map(|(&v, &s)| s * abs_pow(v, p))
                    .sum::<f64>()
        };
        for i in 0..4 {
            let h = 1e-6;
            let mut hi = phi.clone();
            let mut lo = phi.clone();
            hi[i] += h;
            lo[i] -= h;
            let fd = (f(&hi) - f(&lo)) / (2.0 * h);
            assert!(
                (fd - grad[i]).abs() <= 1e-5 * (1.0 + fd.abs()),
                "coordinate {i}: fd {fd} vs analytic {}",
                grad[i]
            );
        }
    }
}
