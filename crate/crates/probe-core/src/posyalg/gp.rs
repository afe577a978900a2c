//! Geometric-program solver on the log-transformed convex problem.
//!
//! With `y = ln x` every posynomial constraint `f(x) <= 1` becomes a
//! log-sum-exp inequality `F(y) = ln sum_k exp(b_k + a_k . y) <= 0`, which is
//! smooth and convex. The solver runs a log-barrier Newton method over these
//! functions: a phase-I pass finds a strictly feasible point when the caller's
//! start violates a constraint, then the barrier parameter is increased until
//! the duality gap estimate drops below the requested tolerance. The contract
//! is a KKT residual bound, not a particular descent method.
//!
//! Variables are floored at [`VAR_FLOOR`] during the transform so `ln` stays
//! defined; this is a solver artifact, not a modeling choice.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::expr::{Assignment, Posynomial};

/// Lower bound imposed on every variable inside the solver.
pub const VAR_FLOOR: f64 = 1e-12;

/// Geometric program in standard form: minimize a posynomial subject to
/// posynomial constraints `f_i(x) <= 1` and per-variable positive upper
/// bounds.
#[derive(Debug, Clone)]
pub struct GpProblem {
    pub objective: Posynomial,
    pub constraints: Vec<Posynomial>,
    pub upper_bounds: BTreeMap<String, f64>,
}

impl GpProblem {
    /// Sorted list of all variables referenced by the problem.
    pub fn variables(&self) -> Vec<String> {
        let mut names = self.objective.variables();
        for c in &self.constraints {
            names.extend(c.variables());
        }
        names.extend(self.upper_bounds.keys().cloned());
        names.sort();
        names.dedup();
        names
    }
}

#[derive(Debug, Error)]
pub enum GpError {
    #[error("geometric program infeasible: max constraint violation {max_violation:.3e} at best point found")]
    Infeasible { max_violation: f64 },
    #[error("solver did not converge within {iterations} Newton iterations (residual {residual:.3e})")]
    IterationCap { iterations: usize, residual: f64 },
    #[error("start assignment missing variable `{0}`")]
    MissingStart(String),
    #[error("problem has no variables")]
    Degenerate,
}

#[derive(Debug, Clone, Copy)]
pub struct GpOptions {
    /// Target duality-gap / KKT tolerance.
    pub tol: f64,
    /// Cap on total Newton iterations across all barrier stages.
    pub max_newton: usize,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_newton: 200,
        }
    }
}

/// Solves the GP starting from `start` (values are clamped to the variable
/// bounds; the start need not satisfy the posynomial constraints).
pub fn solve_gp(problem: &GpProblem, start: &Assignment, tol: f64) -> Result<Assignment, GpError> {
    solve_gp_with(
        problem,
        start,
        GpOptions {
            tol,
            ..GpOptions::default()
        },
    )
}

pub fn solve_gp_with(
    problem: &GpProblem,
    start: &Assignment,
    opts: GpOptions,
) -> Result<Assignment, GpError> {
    let vars = problem.variables();
    if vars.is_empty() {
        return Err(GpError::Degenerate);
    }
    let index: BTreeMap<&str, usize> = vars.iter().map(|n| n.as_str()).zip(0..).collect();

    let objective = LogSumExp::from_posynomial(&problem.objective, &index);
    let mut constraints: Vec<LogSumExp> = problem
        .constraints
        .iter()
        .map(|c| LogSumExp::from_posynomial(c, &index))
        .collect();
    // Box constraints in log space: y_v <= ln ub_v and ln FLOOR <= y_v,
    // expressed as single-term log-sum-exp rows.
    for (v, i) in &index {
        if let Some(ub) = problem.upper_bounds.get(*v) {
            constraints.push(LogSumExp::linear(vars.len(), *i, 1.0, -ub.ln()));
        }
        constraints.push(LogSumExp::linear(vars.len(), *i, -1.0, VAR_FLOOR.ln()));
    }

    let mut y = DVector::zeros(vars.len());
    for (v, i) in &index {
        let mut x = *start
            .get(*v)
            .ok_or_else(|| GpError::MissingStart(v.to_string()))?;
        let ub = problem.upper_bounds.get(*v).copied().unwrap_or(f64::MAX);
        x = x.clamp(VAR_FLOOR, ub);
        y[*i] = x.ln();
    }

    let mut budget = opts.max_newton;
    // warm starts from a previous condensation round sit a hair inside the
    // boundary, which the barrier handles directly; phase I only runs for
    // genuinely violated starts
    if max_violation(&constraints, &y) >= -1e-14 {
        y = phase_one(&constraints, &y, &mut budget)?;
    }
    let y = barrier_minimize(&objective, &constraints, y, opts.tol, &mut budget)?;

    let mut out = Assignment::new();
    for (v, i) in &index {
        out.insert(v.to_string(), y[*i].exp());
    }
    Ok(out)
}

fn max_violation(constraints: &[LogSumExp], y: &DVector<f64>) -> f64 {
    constraints
        .iter()
        .map(|c| c.value(y))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One posynomial in log space: rows `(offset_k, coeffs_k)` so that
/// `F(y) = ln sum_k exp(offset_k + coeffs_k . y)`.
struct LogSumExp {
    offsets: Vec<f64>,
    coeffs: Vec<DVector<f64>>,
}

impl LogSumExp {
    fn from_posynomial(p: &Posynomial, index: &BTreeMap<&str, usize>) -> Self {
        assert!(!p.is_empty(), "empty posynomial has no log-space form");
        let n = index.len();
        let mut offsets = Vec::with_capacity(p.terms().len());
        let mut coeffs = Vec::with_capacity(p.terms().len());
        for t in p.terms() {
            offsets.push(t.coefficient().ln());
            let mut a = DVector::zeros(n);
            for (name, e) in t.exponents() {
                a[index[name.as_str()]] = *e;
            }
            coeffs.push(a);
        }
        Self { offsets, coeffs }
    }

    /// Single-term row `sign * y_i + offset <= 0`.
    fn linear(n: usize, i: usize, sign: f64, offset: f64) -> Self {
        let mut a = DVector::zeros(n);
        a[i] = sign;
        Self {
            offsets: vec![offset],
            coeffs: vec![a],
        }
    }

    fn value(&self, y: &DVector<f64>) -> f64 {
        let m = self
            .offsets
            .iter()
            .zip(&self.coeffs)
            .map(|(b, a)| b + a.dot(y))
            .fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self
            .offsets
            .iter()
            .zip(&self.coeffs)
            .map(|(b, a)| (b + a.dot(y) - m).exp())
            .sum();
        m + s.ln()
    }

    /// Value, gradient and Hessian in one pass.
    fn eval(&self, y: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = y.len();
        let rows: Vec<f64> = self
            .offsets
            .iter()
            .zip(&self.coeffs)
            .map(|(b, a)| b + a.dot(y))
            .collect();
        let m = rows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = rows.iter().map(|r| (r - m).exp()).collect();
        let total: f64 = weights.iter().sum();
        let value = m + total.ln();

        let mut grad = DVector::zeros(n);
        for (w, a) in weights.iter().zip(&self.coeffs) {
            grad.axpy(w / total, a, 1.0);
        }
        let mut hess = DMatrix::zeros(n, n);
        for (w, a) in weights.iter().zip(&self.coeffs) {
            hess.syger(w / total, a, a, 1.0);
        }
        hess.syger(-1.0, &grad, &grad, 1.0);
        // syger fills the lower triangle; mirror it
        for i in 0..n {
            for j in (i + 1)..n {
                hess[(i, j)] = hess[(j, i)];
            }
        }
        (value, grad, hess)
    }
}

/// Phase I: minimize the slack `s` in `F_i(y) <= s`, stopping as soon as a
/// strictly feasible `y` appears. A persistent `s >= 0` optimum certifies
/// infeasibility.
fn phase_one(
    constraints: &[LogSumExp],
    y0: &DVector<f64>,
    budget: &mut usize,
) -> Result<DVector<f64>, GpError> {
    let n = y0.len();
    let mut y = y0.clone();
    let mut s = max_violation(constraints, &y) + 1.0;
    let mut t = 1.0;
    let m = constraints.len() as f64;

    loop {
        // Newton on  t*s - sum ln(s - F_i(y))
        let mut converged_stage = false;
        for _ in 0..50 {
            if *budget == 0 {
                break;
            }
            *budget -= 1;
            let mut grad = DVector::zeros(n + 1);
            let mut hess = DMatrix::zeros(n + 1, n + 1);
            grad[n] = t;
            let mut feasible_now = true;
            for c in constraints {
                let (v, g, h) = c.eval(&y);
                if v >= -1e-9 {
                    feasible_now = false;
                }
                let d = s - v;
                let inv = 1.0 / d;
                let inv2 = inv * inv;
                for i in 0..n {
                    grad[i] += inv * g[i];
                    for j in 0..n {
                        hess[(i, j)] += inv * h[(i, j)] + inv2 * g[i] * g[j];
                    }
                    hess[(i, n)] -= inv2 * g[i];
                    hess[(n, i)] -= inv2 * g[i];
                }
                grad[n] -= inv;
                hess[(n, n)] += inv2;
            }
            if feasible_now && s < -1e-11 {
                return Ok(y);
            }
            let step = newton_step(&hess, &grad);
            let decrement = -0.5 * grad.dot(&step);
            if decrement.abs() < 1e-12 {
                converged_stage = true;
                break;
            }
            let mut alpha = 1.0;
            loop {
                let y_new = &y + alpha * step.rows(0, n);
                let s_new = s + alpha * step[n];
                let ok = constraints.iter().all(|c| c.value(&y_new) < s_new);
                if ok {
                    let phi_old = t * s
                        - constraints
                            .iter()
                            .map(|c| (s - c.value(&y)).ln())
                            .sum::<f64>();
                    let phi_new = t * s_new
                        - constraints
                            .iter()
                            .map(|c| (s_new - c.value(&y_new)).ln())
                            .sum::<f64>();
                    if phi_new <= phi_old + 1e-12 {
                        y = y_new;
                        s = s_new;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-14 {
                    converged_stage = true;
                    break;
                }
            }
            if converged_stage {
                break;
            }
            if s < -1e-6 {
                return Ok(y);
            }
        }
        if s < -1e-11 {
            return Ok(y);
        }
        if (m / t < 1e-10 && converged_stage) || t > 1e14 || *budget == 0 {
            break;
        }
        t *= 20.0;
    }
    // a feasible region with a hairline interior still admits the barrier
    if max_violation(constraints, &y) < 0.0 {
        return Ok(y);
    }
    Err(GpError::Infeasible {
        max_violation: max_violation(constraints, &y).exp() - 1.0,
    })
}

/// Barrier stages over a strictly feasible start. Intermediate stages are
/// centered loosely; only the stage that already meets the gap target is
/// polished to full Newton accuracy.
fn barrier_minimize(
    objective: &LogSumExp,
    constraints: &[LogSumExp],
    mut y: DVector<f64>,
    tol: f64,
    budget: &mut usize,
) -> Result<DVector<f64>, GpError> {
    let m = constraints.len() as f64;
    let mut t = 10.0;
    loop {
        let final_stage = m / t < tol;
        let newton_tol = if final_stage { 1e-12 } else { 1e-6 };
        center(objective, constraints, &mut y, t, newton_tol, final_stage, budget)?;
        if final_stage {
            return Ok(y);
        }
        t *= 50.0;
    }
}

/// Damped Newton descent on `t * F0 - sum ln(-F_i)` down to the given
/// decrement tolerance.
fn center(
    objective: &LogSumExp,
    constraints: &[LogSumExp],
    y: &mut DVector<f64>,
    t: f64,
    newton_tol: f64,
    strict: bool,
    budget: &mut usize,
) -> Result<(), GpError> {
    let n = y.len();
    let phi = |yy: &DVector<f64>| -> Option<f64> {
        let mut val = t * objective.value(yy);
        for c in constraints {
            let cv = c.value(yy);
            if cv >= 0.0 {
                return None;
            }
            val -= (-cv).ln();
        }
        Some(val)
    };
    let mut last_decrement = f64::INFINITY;
    for _ in 0..60 {
        if *budget == 0 {
            if strict && last_decrement > 1e-6 {
                return Err(GpError::IterationCap {
                    iterations: 0,
                    residual: last_decrement,
                });
            }
            return Ok(());
        }
        *budget -= 1;
        let (_, g0, h0) = objective.eval(y);
        let mut grad = g0 * t;
        let mut hess = h0 * t;
        for c in constraints {
            let (v, g, h) = c.eval(y);
            let inv = -1.0 / v;
            let inv2 = inv * inv;
            grad.axpy(inv, &g, 1.0);
            hess += h * inv;
            hess.syger(inv2, &g, &g, 1.0);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                hess[(i, j)] = hess[(j, i)];
            }
        }
        let step = newton_step(&hess, &grad);
        let decrement = -0.5 * grad.dot(&step);
        last_decrement = decrement.abs();
        if decrement.abs() < newton_tol {
            return Ok(());
        }
        let phi_old = phi(y).expect("current iterate must be strictly feasible");
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha >= 1e-14 {
            let y_new = &*y + alpha * &step;
            if let Some(phi_new) = phi(&y_new) {
                if phi_new <= phi_old - 1e-4 * alpha * 2.0 * decrement.max(0.0) {
                    *y = y_new;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            return Ok(());
        }
    }
    Ok(())
}

fn newton_step(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let n = grad.len();
    let mut ridge = 0.0;
    loop {
        let mut h = hess.clone();
        if ridge > 0.0 {
            for i in 0..n {
                h[(i, i)] += ridge;
            }
        }
        if let Some(ch) = h.cholesky() {
            return -ch.solve(grad);
        }
        ridge = if ridge == 0.0 { 1e-10 } else { ridge * 100.0 };
        if ridge > 1e6 {
            // fall back to steepest descent
            return -grad.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posyalg::expr::Monomial;

    fn assignment(pairs: &[(&str, f64)]) -> Assignment {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn bound_active_minimum() {
        // minimize x subject to 2/x <= 1 and x <= 10  ->  x* = 2
        let problem = GpProblem {
            objective: Posynomial::new([Monomial::single(1.0, "x", 1.0)]),
            constraints: vec![Posynomial::new([Monomial::single(2.0, "x", -1.0)])],
            upper_bounds: [("x".to_string(), 10.0)].into(),
        };
        let sol = solve_gp(&problem, &assignment(&[("x", 5.0)]), 1e-9).unwrap();
        assert!((sol["x"] - 2.0).abs() / 2.0 < 1e-6, "got {}", sol["x"]);
    }

    #[test]
    fn symmetric_product_constraint() {
        // minimize x + y subject to 1/(x*y) <= 1  ->  x* = y* = 1
        let problem = GpProblem {
            objective: Posynomial::new([
                Monomial::single(1.0, "x", 1.0),
                Monomial::single(1.0, "y", 1.0),
            ]),
            constraints: vec![Posynomial::new([Monomial::new(
                1.0,
                [("x".into(), -1.0), ("y".into(), -1.0)],
            )])],
            upper_bounds: BTreeMap::new(),
        };
        let sol = solve_gp(&problem, &assignment(&[("x", 3.0), ("y", 0.7)]), 1e-9).unwrap();
        let obj = sol["x"] + sol["y"];
        assert!((obj - 2.0).abs() < 1e-6, "objective {obj}");
        assert!((sol["x"] - 1.0).abs() < 1e-4, "x = {}", sol["x"]);
        assert!((sol["y"] - 1.0).abs() < 1e-4, "y = {}", sol["y"]);
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        // minimize x subject to 3/x <= 1 and x <= 2 -> infeasible
        let problem = GpProblem {
            objective: Posynomial::new([Monomial::single(1.0, "x", 1.0)]),
            constraints: vec![Posynomial::new([Monomial::single(3.0, "x", -1.0)])],
            upper_bounds: [("x".to_string(), 2.0)].into(),
        };
        let err = solve_gp(&problem, &assignment(&[("x", 1.0)]), 1e-9).unwrap_err();
        assert!(matches!(err, GpError::Infeasible { .. }), "got {err:?}");
    }

    #[test]
    fn infeasible_start_recovers_via_phase_one() {
        // start violates 2/x <= 1 (x=0.5) but the problem is feasible
        let problem = GpProblem {
            objective: Posynomial::new([Monomial::single(1.0, "x", 1.0)]),
            constraints: vec![Posynomial::new([Monomial::single(2.0, "x", -1.0)])],
            upper_bounds: [("x".to_string(), 10.0)].into(),
        };
        let sol = solve_gp(&problem, &assignment(&[("x", 0.5)]), 1e-9).unwrap();
        assert!((sol["x"] - 2.0).abs() / 2.0 < 1e-6);
    }

    #[test]
    fn solution_invariant_under_variable_rescaling() {
        // substituting x = 10 x' must rescale the solution by exactly 10
        let problem = GpProblem {
            objective: Posynomial::new([
                Monomial::single(1.0, "x", 1.0),
                Monomial::single(1.0, "y", 1.0),
            ]),
            constraints: vec![Posynomial::new([Monomial::new(
                1.0,
                [("x".into(), -1.0), ("y".into(), -1.0)],
            )])],
            upper_bounds: BTreeMap::new(),
        };
        let scaled = GpProblem {
            objective: Posynomial::new([
                Monomial::single(10.0, "x", 1.0),
                Monomial::single(1.0, "y", 1.0),
            ]),
            constraints: vec![Posynomial::new([Monomial::new(
                0.1,
                [("x".into(), -1.0), ("y".into(), -1.0)],
            )])],
            upper_bounds: BTreeMap::new(),
        };
        let a = solve_gp(&problem, &assignment(&[("x", 2.0), ("y", 2.0)]), 1e-10).unwrap();
        let b = solve_gp(&scaled, &assignment(&[("x", 0.2), ("y", 2.0)]), 1e-10).unwrap();
        assert!((a["x"] - 10.0 * b["x"]).abs() < 1e-5);
        assert!((a["y"] - b["y"]).abs() < 1e-5);
    }
}
