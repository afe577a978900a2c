//! Dense two-phase simplex for the small linear programs that appear in the
//! alternating optimizers (power minimization at fixed combiners, and the
//! large-sensor-count power allocation).
//!
//! Variables are non-negative; constraints may be `<=`, `>=` or `=`. Phase one
//! minimizes the sum of artificials with Bland's rule, so cycling cannot
//! occur; a positive phase-one optimum certifies infeasibility.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpConstraint {
    pub coeffs: Vec<f64>,
    pub rel: Relation,
    pub rhs: f64,
}

impl LpConstraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            rel: Relation::Le,
            rhs,
        }
    }
    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            rel: Relation::Ge,
            rhs,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("linear program infeasible (residual infeasibility {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("linear program unbounded below")]
    Unbounded,
    #[error("constraint has {got} coefficients, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

const PIVOT_EPS: f64 = 1e-11;

/// Minimizes `objective . x` over `x >= 0` subject to the constraints and
/// optional per-variable upper bounds. Returns the optimal vertex.
pub fn solve_lp(
    objective: &[f64],
    constraints: &[LpConstraint],
    upper_bounds: &[Option<f64>],
) -> Result<Vec<f64>, LpError> {
    let n = objective.len();
    for c in constraints {
        if c.coeffs.len() != n {
            return Err(LpError::DimensionMismatch {
                got: c.coeffs.len(),
                expected: n,
            });
        }
    }
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.rel, c.rhs))
        .collect();
    for (i, ub) in upper_bounds.iter().enumerate() {
        if let Some(ub) = ub {
            let mut coeffs = vec![0.0; n];
            coeffs[i] = 1.0;
            rows.push((coeffs, Relation::Le, *ub));
        }
    }

    // Standard form with rhs >= 0: flip rows with negative rhs.
    for (coeffs, rel, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            for c in coeffs.iter_mut() {
                *c = -*c;
            }
            *rhs = -*rhs;
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    if m == 0 {
        if objective.iter().any(|c| *c < 0.0) {
            return Err(LpError::Unbounded);
        }
        return Ok(vec![0.0; n]);
    }
    let n_slack = rows
        .iter()
        .filter(|(_, rel, _)| *rel != Relation::Eq)
        .count();
    let n_art = m;
    let width = n + n_slack + n_art + 1; // + rhs column
    let mut tab = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];

    let mut slack_col = n;
    for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        tab[r][..n].copy_from_slice(coeffs);
        match rel {
            Relation::Le => {
                tab[r][slack_col] = 1.0;
                slack_col += 1;
            }
            Relation::Ge => {
                tab[r][slack_col] = -1.0;
                slack_col += 1;
            }
            Relation::Eq => {}
        }
        let art = n + n_slack + r;
        tab[r][art] = 1.0;
        basis[r] = art;
        tab[r][width - 1] = *rhs;
    }

    // Phase 1: minimize sum of artificials.
    let mut cost1 = vec![0.0; width];
    for a in 0..n_art {
        cost1[n + n_slack + a] = 1.0;
    }
    let phase1 = run_simplex(&mut tab, &mut basis, &cost1, n + n_slack + n_art)?;
    if phase1 > 1e-8 {
        return Err(LpError::Infeasible { residual: phase1 });
    }
    // Drive any artificial still in the basis out (degenerate rows).
    for r in 0..m {
        if basis[r] >= n + n_slack {
            let pivot_col = (0..n + n_slack).find(|&c| tab[r][c].abs() > PIVOT_EPS);
            match pivot_col {
                Some(c) => pivot(&mut tab, &mut basis, r, c),
                None => {
                    // all-zero row: redundant constraint, harmless
                }
            }
        }
    }

    // Phase 2: original objective over structural + slack columns only.
    let mut cost2 = vec![0.0; width];
    cost2[..n].copy_from_slice(objective);
    let _ = run_simplex(&mut tab, &mut basis, &cost2, n + n_slack)?;

    let mut x = vec![0.0; n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = tab[r][width - 1];
        }
    }
    Ok(x)
}

/// Simplex iterations with Bland's rule over columns `0..active`. Returns the
/// achieved objective value.
fn run_simplex(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    active: usize,
) -> Result<f64, LpError> {
    let m = tab.len();
    let width = tab[0].len();
    loop {
        // reduced costs: c_j - c_B . B^{-1} A_j
        let mut entering = None;
        for j in 0..active {
            if basis.contains(&j) {
                continue;
            }
            let mut reduced = cost[j];
            for r in 0..m {
                reduced -= cost[basis[r]] * tab[r][j];
            }
            if reduced < -1e-9 {
                entering = Some(j);
                break; // Bland: smallest index
            }
        }
        let Some(j) = entering else {
            let mut obj = 0.0;
            for r in 0..m {
                obj += cost[basis[r]] * tab[r][width - 1];
            }
            return Ok(obj);
        };
        let mut leaving: Option<(usize, f64)> = None;
        for r in 0..m {
            if tab[r][j] > PIVOT_EPS {
                let ratio = tab[r][width - 1] / tab[r][j];
                match leaving {
                    None => leaving = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-12
                            || ((ratio - lratio).abs() <= 1e-12 && basis[r] < basis[lr])
                        {
                            leaving = Some((r, ratio));
                        }
                    }
                }
            }
        }
        let Some((r, _)) = leaving else {
            return Err(LpError::Unbounded);
        };
        pivot(tab, basis, r, j);
    }
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let width = tab[0].len();
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    for r in 0..tab.len() {
        if r != row && tab[r][col].abs() > 0.0 {
            let factor = tab[r][col];
            for c in 0..width {
                tab[r][c] -= factor * tab[row][c];
            }
        }
    }
    basis[row] = col;
}
