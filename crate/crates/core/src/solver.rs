//! Numerical backbone: projected gradient descent on box constraints with
//! backtracking line search and an active-set Newton polish, a dense linear
//! solve, and the symmetric generalized eigensolver used by the p = 2 paths.
//!
//! Multi-start runs are reduced with a deterministic tie-break by start
//! index, so identical inputs give identical outputs.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Projected-gradient stationarity tolerance.
    pub grad_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iter: 20_000, grad_tol: 1e-9, restarts: 8, seed: 0, polish: true }
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub starts: usize,
    pub best_start: usize,
}

/// Objective with optional Hessian for the polish phase.
pub struct Objective<'a> {
    pub value: &'a dyn Fn(&[f64]) -> f64,
    pub gradient: &'a dyn Fn(&[f64]) -> Vec<f64>,
    pub hessian: Option<&'a dyn Fn(&[f64]) -> DMatrix<f64>>,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].max(lo[i]).min(hi[i]);
    }
}

/// Euclidean norm of the projected gradient step x - P(x - g).
fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        let step = x[i] - (x[i] - g[i]).max(lo[i]).min(hi[i]);
        s += step * step;
    }
    s.sqrt()
}

/// Minimize over the box [lo, hi] from the given starts; returns the best
/// minimizer found. Infinite bounds are allowed.
pub fn minimize_box(
    obj: &Objective,
    lo: &[f64],
    hi: &[f64],
    starts: &[Vec<f64>],
    opts: &SolverOptions,
) -> (Vec<f64>, Diagnostics) {
    assert!(!starts.is_empty(), "need at least one start");
    let mut best: Option<(f64, Vec<f64>, Diagnostics)> = None;
    for (s, start) in starts.iter().enumerate() {
        let mut x = start.clone();
        project(&mut x, lo, hi);
        let (x, diag) = descend(obj, lo, hi, x, s, opts);
        let f = (obj.value)(&x);
        let better = match &best {
            None => true,
            Some((fb, _, _)) => f < *fb,
        };
        if better {
            best = Some((f, x, diag));
        }
    }
    let (_, x, diag) = best.expect("at least one start");
    (x, diag)
}

fn descend(
    obj: &Objective,
    lo: &[f64],
    hi: &[f64],
    mut x: Vec<f64>,
    start_index: usize,
    opts: &SolverOptions,
) -> (Vec<f64>, Diagnostics) {
    let mut f = (obj.value)(&x);
    let mut step = 1.0f64;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    // short projected-gradient bursts interleaved with Newton polish rounds;
    // plain descent alone crawls on ill-conditioned boxes
    let burst = if opts.polish && obj.hessian.is_some() { 250 } else { opts.max_iter };
    let mut rounds = 0usize;
    'outer: while iterations < opts.max_iter && rounds < 12 {
        rounds += 1;
        let round_start = f;
        let mut stalled = false;
        for _ in 0..burst {
            if iterations >= opts.max_iter {
                break;
            }
            iterations += 1;
            let g = (obj.gradient)(&x);
            grad_norm = projected_gradient_norm(&x, &g, lo, hi);
            if grad_norm <= opts.grad_tol {
                converged = true;
                break 'outer;
            }
            // backtracking with sufficient decrease on the projected step
            let mut accepted = false;
            for _ in 0..60 {
                let mut cand = x.clone();
                for i in 0..cand.len() {
                    cand[i] -= step * g[i];
                }
                project(&mut cand, lo, hi);
                let fc = (obj.value)(&cand);
                let decrease: f64 =
                    x.iter().zip(&cand).zip(&g).map(|((&a, &b), &gi)| gi * (a - b)).sum();
                if fc.is_finite() && fc <= f - 1e-4 * decrease.max(0.0) && fc <= f {
                    x = cand;
                    f = fc;
                    step = (step * 1.5).min(1e8);
                    accepted = true;
                    break;
                }
                step *= 0.5;
                if step < 1e-18 {
                    break;
                }
            }
            if !accepted {
                stalled = true;
                break;
            }
        }
        let mut polished = false;
        if opts.polish {
            if let Some(hess) = obj.hessian {
                let before = f;
                newton_polish(obj, hess, lo, hi, &mut x, &mut f);
                polished = f < before - 1e-16 * (1.0 + before.abs());
            }
        }
        let g = (obj.gradient)(&x);
        grad_norm = projected_gradient_norm(&x, &g, lo, hi);
        if grad_norm <= opts.grad_tol {
            converged = true;
            break;
        }
        if stalled && !polished {
            converged = grad_norm <= opts.grad_tol * 1e3;
            break;
        }
        if round_start - f <= 1e-13 * (1.0 + round_start.abs()) {
            converged = grad_norm <= opts.grad_tol * 1e3;
            break;
        }
    }
    (
        x,
        Diagnostics {
            converged,
            iterations,
            grad_norm,
            starts: 1,
            best_start: start_index,
        },
    )
}

/// Active-set Newton refinement: fix coordinates pinned at a bound with an
/// outward-pointing gradient, solve the reduced Newton system, backtrack on
/// the projected step. Falls back silently when the Hessian is unusable.
fn newton_polish(
    obj: &Objective,
    hess: &dyn Fn(&[f64]) -> DMatrix<f64>,
    lo: &[f64],
    hi: &[f64],
    x: &mut Vec<f64>,
    f: &mut f64,
) {
    let n = x.len();
    let eps = 1e-12;
    for _ in 0..40 {
        let g = (obj.gradient)(x);
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let at_lo = x[i] - lo[i] <= eps * (1.0 + lo[i].abs());
                let at_hi = hi[i] - x[i] <= eps * (1.0 + hi[i].abs());
                !(at_lo && g[i] > 0.0) && !(at_hi && g[i] < 0.0)
            })
            .collect();
        if free.is_empty() {
            return;
        }
        let gf: Vec<f64> = free.iter().map(|&i| g[i]).collect();
        let gf_norm = gf.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gf_norm < 1e-14 * (1.0 + f.abs()) {
            return;
        }
        let h = hess(x);
        let k = free.len();
        let mut hff = DMatrix::zeros(k, k);
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                hff[(a, b)] = h[(i, j)];
            }
        }
        if hff.iter().any(|v| !v.is_finite()) {
            return;
        }
        let rhs = DVector::from_iterator(k, gf.iter().map(|&v| -v));
        let dir = match hff.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => match hff.lu().solve(&rhs) {
                Some(d) => d,
                None => return,
            },
        };
        // require a descent direction
        let slope: f64 = dir.iter().zip(&gf).map(|(d, g)| d * g).sum();
        if !(slope < 0.0) {
            return;
        }
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let mut cand = x.clone();
            for (a, &i) in free.iter().enumerate() {
                cand[i] += t * dir[a];
            }
            project(&mut cand, lo, hi);
            let fc = (obj.value)(&cand);
            if fc.is_finite() && fc <= *f + 1e-12 * f.abs() && fc <= *f {
                let progress = (*f - fc).abs();
                *x = cand;
                *f = fc;
                improved = progress > 1e-16 * (1.0 + f.abs());
                break;
            }
            t *= 0.5;
        }
        if !improved {
            return;
        }
    }
}

/// Random feasible point in the box, component-wise uniform; unbounded sides
/// get a bounded spread around the finite bound (or zero).
pub fn random_feasible(rng: &mut impl Rng, lo: &[f64], hi: &[f64], spread: f64) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(&l, &h)| {
            let low = if l.is_finite() { l } else { h.min(0.0) - spread };
            let high = if h.is_finite() { h.min(low + spread) } else { low + spread };
            if high > low {
                rng.gen_range(low..=high)
            } else {
                low
            }
        })
        .collect()
}

/// Dense linear solve; `None` when the matrix is singular to working
/// precision.
pub fn solve_linear(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = a.clone().lu();
    let x = lu.solve(rhs)?;
    // reject solutions of numerically singular systems
    let residual = (a * &x - rhs).norm();
    let scale = a.norm() * x.norm() + rhs.norm();
    if residual.is_finite() && residual <= 1e-8 * (1.0 + scale) {
        Some(x)
    } else {
        None
    }
}

/// All eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub fn sym_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = a.nrows();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Smallest generalized eigenvalue of (A, diag(d)) with d >= 0, together
/// with a minimizing vector of the quotient x'Ax / x'diag(d)x, normalized to
/// x'diag(d)x = 1. Zero-weight coordinates are eliminated by a Schur
/// complement; when that block is singular the kernel of A is inspected
/// directly.
pub fn generalized_rayleigh_min(
    a: &DMatrix<f64>,
    d: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let n = a.nrows();
    assert_eq!(d.len(), n);
    let support: Vec<usize> = (0..n).filter(|&i| d[i] > 0.0).collect();
    let rest: Vec<usize> = (0..n).filter(|&i| d[i] == 0.0).collect();
    if support.is_empty() {
        return Err(Error::InvalidParameter("weight vanishes identically".into()));
    }
    let k = support.len();
    let m = if rest.is_empty() {
        a.clone()
    } else {
        let r = rest.len();
        let mut a_tt = DMatrix::zeros(r, r);
        for (x, &i) in rest.iter().enumerate() {
            for (y, &j) in rest.iter().enumerate() {
                a_tt[(x, y)] = a[(i, j)];
            }
        }
        let mut a_ts = DMatrix::zeros(r, k);
        for (x, &i) in rest.iter().enumerate() {
            for (y, &j) in support.iter().enumerate() {
                a_ts[(x, y)] = a[(i, j)];
            }
        }
        let solved = match a_tt.clone().cholesky() {
            Some(ch) => Some(ch.solve(&a_ts)),
            None => a_tt.lu().solve(&a_ts),
        };
        match solved {
            Some(x_block) => {
                // Schur complement A_SS - A_ST A_TT^{-1} A_TS
                let mut a_ss = DMatrix::zeros(k, k);
                for (x, &i) in support.iter().enumerate() {
                    for (y, &j) in support.iter().enumerate() {
                        a_ss[(x, y)] = a[(i, j)];
                    }
                }
                a_ss - a_ts.transpose() * x_block
            }
            None => {
                // The zero-weight block has a null direction. If A itself has a
                // kernel vector with positive weight norm the quotient minimum
                // is zero; otherwise give up.
                let (vals, vecs) = sym_eigen(a);
                if vals[0].abs() <= 1e-10 * (1.0 + vals[vals.len() - 1].abs()) {
                    let v = vecs.column(0);
                    let wnorm: f64 = (0..n).map(|i| d[i] * v[i] * v[i]).sum();
                    if wnorm > 1e-14 {
                        let scale = wnorm.sqrt();
                        let vec: Vec<f64> = (0..n).map(|i| v[i] / scale).collect();
                        return Ok((0.0, vec));
                    }
                }
                return Err(Error::SingularSystem);
            }
        }
    };
    // symmetric whitening by the weight on the support
    let mut w = m;
    for (x, &i) in support.iter().enumerate() {
        for (y, &j) in support.iter().enumerate() {
            w[(x, y)] /= (d[i] * d[j]).sqrt();
        }
    }
    // enforce exact symmetry against rounding
    let w = (&w + w.transpose()) * 0.5;
    let (vals, vecs) = sym_eigen(&w);
    let lambda = vals[0];
    let y = vecs.column(0);
    let mut x = vec![0.0; n];
    for (row, &i) in support.iter().enumerate() {
        x[i] = y[row] / d[i].sqrt();
    }
    if !rest.is_empty() {
        // back-substitute the eliminated block: x_T = -A_TT^{-1} A_TS x_S
        let r = rest.len();
        let mut a_tt = DMatrix::zeros(r, r);
        for (u, &i) in rest.iter().enumerate() {
            for (v, &j) in rest.iter().enumerate() {
                a_tt[(u, v)] = a[(i, j)];
            }
        }
        let mut rhs = DVector::zeros(r);
        for (u, &i) in rest.iter().enumerate() {
            let mut s = 0.0;
            for &j in &support {
                s += a[(i, j)] * x[j];
            }
            rhs[u] = -s;
        }
        if let Some(xt) = a_tt.lu().solve(&rhs) {
            for (u, &i) in rest.iter().enumerate() {
                x[i] = xt[u];
            }
        }
    }
    // normalize the weighted norm and fix the sign deterministically
    let wnorm: f64 = (0..n).map(|i| d[i] * x[i] * x[i]).sum();
    let scale = wnorm.sqrt();
    if scale > 0.0 {
        for v in &mut x {
            *v /= scale;
        }
    }
    if let Some(first) = x.iter().find(|v| v.abs() > 1e-12) {
        if *first < 0.0 {
            for v in &mut x {
                *v = -*v;
            }
        }
    }
    Ok((lambda, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_minimization_quadratic() {
        // min (x-2)^2 + (y+1)^2 on [0,1] x [0,1] -> (1, 0)
        let value = |x: &[f64]| (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2);
        let gradient = |x: &[f64]| vec![2.0 * (x[0] - 2.0), 2.0 * (x[1] + 1.0)];
        let hessian = |_: &[f64]| DMatrix::from_diagonal_element(2, 2, 2.0);
        let obj = Objective { value: &value, gradient: &gradient, hessian: Some(&hessian) };
        let (x, diag) = minimize_box(
            &obj,
            &[0.0, 0.0],
            &[1.0, 1.0],
            &[vec![0.5, 0.5]],
            &SolverOptions::default(),
        );
        assert!(diag.converged);
        assert!((x[0] - 1.0).abs() < 1e-10 && x[1].abs() < 1e-10);
    }

    #[test]
    fn unbounded_above_box() {
        let value = |x: &[f64]| (x[0] - 3.0).powi(2);
        let gradient = |x: &[f64]| vec![2.0 * (x[0] - 3.0)];
        let obj = Objective { value: &value, gradient: &gradient, hessian: None };
        let (x, _) = minimize_box(
            &obj,
            &[1.0],
            &[f64::INFINITY],
            &[vec![1.0]],
            &SolverOptions::default(),
        );
        assert!((x[0] - 3.0).abs() < 1e-7);
    }

    #[test]
    fn rayleigh_min_matches_plain_eigen() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let d = vec![1.0; 3];
        let (lambda, x) = generalized_rayleigh_min(&a, &d).unwrap();
        let expect = 2.0 - std::f64::consts::SQRT_2;
        assert!((lambda - expect).abs() < 1e-12);
        let wnorm: f64 = x.iter().map(|v| v * v).sum();
        assert!((wnorm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rayleigh_min_with_partial_support() {
        // Dirichlet path of length 2, weight only on the first vertex:
        // minimize (2a^2 + 2b^2 - 2ab) / a^2 -> Schur: 2 - 1/2 = 3/2.
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let d = vec![1.0, 0.0];
        let (lambda, x) = generalized_rayleigh_min(&a, &d).unwrap();
        assert!((lambda - 1.5).abs() < 1e-12);
        assert!((x[1] - 0.5 * x[0]).abs() < 1e-10);
    }
}
