//! Box-constrained quasi-Newton minimizer and an augmented-Lagrangian
//! wrapper for equality constraints.
//!
//! The minimizer is a projected BFGS method: bound-active variables are
//! frozen, the inverse-Hessian approximation acts on the free ones, and the
//! step is found by a weak Wolfe bracketing search along the projected path.
//! The Wolfe condition keeps the curvature pairs informative on objectives
//! with kinks, where plain backtracking stalls.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest infinity-norm of a single trial step.
const MAX_STEP: f64 = 0.5;
const ARMIJO: f64 = 1e-4;
const WOLFE: f64 = 0.9;
const MAX_BACKTRACKS: usize = 40;

pub trait Objective {
    /// Returns the value at `x` and writes the gradient into `grad`.
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64;

    /// Trial points failing this predicate are rejected by the line search.
    fn feasible(&mut self, _x: &[f64]) -> bool {
        true
    }
}

impl<F> Objective for F
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Tolerance on the projected-gradient infinity norm; also used as the
    /// step-size / relative-decrease tolerance for stalled iterations.
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    /// No trial step along steepest descent decreases the objective.
    NoDescent,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

impl Solution {
    pub fn converged(&self) -> bool {
        self.termination != Termination::IterationLimit
    }
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*l, *u);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Projected-gradient mask: true where the variable sits on a bound and the
/// gradient pushes outward.
fn bound_active(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64], i: usize) -> bool {
    (x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)
}

/// Minimizes `objective` over the box `[lower, upper]` starting from `x0`
/// (clamped into the box).
pub fn minimize_bounded<O: Objective + ?Sized>(
    objective: &mut O,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: &SolverOptions,
) -> Result<Solution> {
    let n = x0.len();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut g = vec![0.0; n];
    let mut f = objective.evaluate(&x, &mut g);
    let mut evaluations = 1;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective);
    }

    let mut h = DMatrix::<f64>::identity(n, n);
    let mut h_is_identity = true;
    let mut scaled = false;
    let mut d = vec![0.0; n];
    let mut xt = vec![0.0; n];
    let mut gt = vec![0.0; n];
    let mut xa = vec![0.0; n];
    let mut ga = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut free = vec![false; n];

    let mut termination = Termination::IterationLimit;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        let mut pg_norm = 0.0f64;
        for i in 0..n {
            free[i] = !bound_active(&x, &g, lower, upper, i);
            if free[i] {
                pg_norm = pg_norm.max(g[i].abs());
            }
        }
        if pg_norm < options.tolerance {
            termination = Termination::GradientTolerance;
            break;
        }
        iterations += 1;

        for i in 0..n {
            d[i] = if free[i] {
                -(0..n).filter(|&j| free[j]).map(|j| h[(i, j)] * g[j]).sum::<f64>()
            } else {
                0.0
            };
        }
        if dot(&d, &g) >= 0.0 {
            h.fill_with_identity();
            h_is_identity = true;
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
        }
        let dn = inf_norm(&d);
        if dn > MAX_STEP {
            d.iter_mut().for_each(|v| *v *= MAX_STEP / dn);
        }

        // weak Wolfe bracketing along the projected path
        let t_max = MAX_STEP / inf_norm(&d);
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        let mut t = 1.0f64.min(t_max);
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                xt[i] = x[i] + t * d[i];
            }
            project(&mut xt, lower, upper);
            for i in 0..n {
                s[i] = xt[i] - x[i];
            }
            if inf_norm(&s) == 0.0 {
                break;
            }
            let mut sufficient = None;
            if objective.feasible(&xt) {
                let ft = objective.evaluate(&xt, &mut gt);
                evaluations += 1;
                if ft.is_finite() && ft <= f + ARMIJO * dot(&g, &s) {
                    sufficient = Some(ft);
                }
            }
            match sufficient {
                None => hi = t,
                Some(ft) => {
                    accepted = Some(ft);
                    xa.copy_from_slice(&xt);
                    ga.copy_from_slice(&gt);
                    if dot(&gt, &s) >= WOLFE * dot(&g, &s) || t >= t_max {
                        break;
                    }
                    lo = t;
                }
            }
            t = if hi.is_finite() { 0.5 * (lo + hi) } else { (2.0 * t).min(t_max) };
        }
        let Some(ft) = accepted else {
            if h_is_identity {
                termination = Termination::NoDescent;
                break;
            }
            h.fill_with_identity();
            h_is_identity = true;
            continue;
        };
        if ga.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective);
        }

        for i in 0..n {
            s[i] = xa[i] - x[i];
            y[i] = ga[i] - g[i];
        }
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * yy.sqrt() && sy > 0.0 {
            if !scaled {
                h.fill_with_identity();
                h *= sy / yy;
                scaled = true;
            }
            bfgs_update(&mut h, &s, &y, sy);
            h_is_identity = false;
        }

        let step = inf_norm(&s);
        let decrease = f - ft;
        x.copy_from_slice(&xa);
        g.copy_from_slice(&ga);
        f = ft;
        if step < options.tolerance && decrease <= options.tolerance * (1.0 + f.abs()) {
            termination = Termination::StepTolerance;
            break;
        }
    }

    Ok(Solution {
        x,
        value: f,
        iterations,
        evaluations,
        termination,
    })
}

/// Inverse BFGS update `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &mut DMatrix<f64>, s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[(i, j)] * y[j]).sum()).collect();
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Equality constraints `h(x) = 0` with a dense Jacobian.
pub trait Constraints {
    fn count(&self) -> usize;
    /// Writes constraint values into `values` and the row-major
    /// `count × n` Jacobian into `jacobian`.
    fn evaluate(&mut self, x: &[f64], values: &mut [f64], jacobian: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedLagrangianOptions {
    pub inner: SolverOptions,
    pub feasibility_tol: f64,
    pub max_outer: usize,
    pub initial_penalty: f64,
}

/// Minimizes `objective` subject to `constraints(x) = 0` and box bounds by
/// an augmented-Lagrangian outer loop around [`minimize_bounded`].
pub fn minimize_augmented_lagrangian<O, C>(
    objective: &mut O,
    constraints: &mut C,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: &AugmentedLagrangianOptions,
) -> Result<Solution>
where
    O: Objective + ?Sized,
    C: Constraints + ?Sized,
{
    let n = x0.len();
    let m = constraints.count();
    let mut multipliers = vec![0.0; m];
    let mut penalty = options.initial_penalty;
    let mut x = x0.to_vec();
    let mut values = vec![0.0; m];
    let mut jac = vec![0.0; m * n];
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut prev_violation = f64::INFINITY;

    for _ in 0..options.max_outer {
        let lambda = multipliers.clone();
        let mu = penalty;
        let mut cv = vec![0.0; m];
        let mut cj = vec![0.0; m * n];
        let mut merit = |z: &[f64], grad: &mut [f64]| {
            let f = objective.evaluate(z, grad);
            constraints.evaluate(z, &mut cv, &mut cj);
            let mut total = f;
            for r in 0..m {
                let w = lambda[r] + mu * cv[r];
                total += lambda[r] * cv[r] + 0.5 * mu * cv[r] * cv[r];
                for c in 0..n {
                    grad[c] += w * cj[r * n + c];
                }
            }
            total
        };
        let inner = minimize_bounded(&mut merit, &x, lower, upper, &options.inner)?;
        iterations += inner.iterations;
        evaluations += inner.evaluations;
        let inner_converged = inner.converged();
        let inner_termination = inner.termination;
        x = inner.x;

        constraints.evaluate(&x, &mut values, &mut jac);
        let violation = inf_norm(&values);
        if violation < options.feasibility_tol && inner_converged {
            let mut g = vec![0.0; n];
            let value = objective.evaluate(&x, &mut g);
            return Ok(Solution {
                x,
                value,
                iterations,
                evaluations: evaluations + 1,
                termination: inner_termination,
            });
        }
        for r in 0..m {
            multipliers[r] += penalty * values[r];
        }
        if violation > 0.25 * prev_violation {
            penalty *= 10.0;
        }
        prev_violation = violation;
    }

    let mut g = vec![0.0; n];
    let value = objective.evaluate(&x, &mut g);
    Ok(Solution {
        x,
        value,
        iterations,
        evaluations: evaluations + 1,
        termination: Termination::IterationLimit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn unconstrained_rosenbrock() {
        let opts = SolverOptions {
            max_iterations: 500,
            tolerance: 1e-9,
        };
        let sol = minimize_bounded(&mut rosenbrock, &[-1.2, 1.0], &[-5.0; 2], &[5.0; 2], &opts).unwrap();
        assert!(sol.converged());
        assert!((sol.x[0] - 1.0).abs() < 1e-6 && (sol.x[1] - 1.0).abs() < 1e-6, "{:?}", sol.x);
    }

    #[test]
    fn bound_is_respected_and_active() {
        // minimum of (x - 2)^2 over [−1, 1] is at the upper bound
        let mut f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 2.0);
            (x[0] - 2.0).powi(2)
        };
        let opts = SolverOptions {
            max_iterations: 50,
            tolerance: 1e-10,
        };
        let sol = minimize_bounded(&mut f, &[0.0], &[-1.0], &[1.0], &opts).unwrap();
        assert_eq!(sol.x[0], 1.0);
        assert_eq!(sol.termination, Termination::GradientTolerance);
    }

    #[test]
    fn nonfinite_start_is_an_error() {
        let mut f = |_: &[f64], _: &mut [f64]| f64::NAN;
        let opts = SolverOptions {
            max_iterations: 5,
            tolerance: 1e-6,
        };
        assert!(matches!(
            minimize_bounded(&mut f, &[0.0], &[-1.0], &[1.0], &opts),
            Err(Error::NonFiniteObjective)
        ));
    }

    struct OnCircle;
    impl Constraints for OnCircle {
        fn count(&self) -> usize {
            1
        }
        fn evaluate(&mut self, x: &[f64], v: &mut [f64], j: &mut [f64]) {
            v[0] = x[0] * x[0] + x[1] * x[1] - 1.0;
            j[0] = 2.0 * x[0];
            j[1] = 2.0 * x[1];
        }
    }

    #[test]
    fn augmented_lagrangian_on_circle() {
        // min x + y on the unit circle → (−1/√2, −1/√2)
        let f = |_: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            g[1] = 1.0;
            0.0
        };
        let mut f = |x: &[f64], g: &mut [f64]| f(x, g) + x[0] + x[1];
        let opts = AugmentedLagrangianOptions {
            inner: SolverOptions {
                max_iterations: 200,
                tolerance: 1e-10,
            },
            feasibility_tol: 1e-10,
            max_outer: 30,
            initial_penalty: 10.0,
        };
        let sol = minimize_augmented_lagrangian(&mut f, &mut OnCircle, &[0.5, 0.0], &[-2.0; 2], &[2.0; 2], &opts)
            .unwrap();
        let r = -(0.5f64).sqrt();
        assert!((sol.x[0] - r).abs() < 1e-6 && (sol.x[1] - r).abs() < 1e-6, "{:?}", sol.x);
    }
}
