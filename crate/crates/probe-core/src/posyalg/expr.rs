//! Monomial / posynomial / signomial algebra over named positive variables.
//!
//! A monomial is `c * x1^a1 * ... * xn^an` with real exponents and a nonzero
//! coefficient (the sign lives on the coefficient). A posynomial is a sum of
//! monomials with positive coefficients, and a signomial is the difference of
//! two posynomials. These are the building blocks of geometric and signomial
//! programs: posynomial constraints become convex after the log-variable
//! transform, and signomial constraints are handled by condensing the
//! subtracted part with the arithmetic-geometric mean inequality.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Positive assignment of named variables, e.g. `{"p1": 0.3, "alpha2": 1.7}`.
pub type Assignment = BTreeMap<String, f64>;

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("variable `{0}` missing from assignment")]
    MissingVariable(String),
    #[error("variable `{name}` must be positive, got {value}")]
    NonPositiveVariable { name: String, value: f64 },
}

/// Single power-law term `coefficient * prod_v v^exponent`.
///
/// The coefficient carries the sign and must be nonzero; zero exponents are
/// dropped so structurally equal terms compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    coefficient: f64,
    exponents: BTreeMap<String, f64>,
}

impl Monomial {
    pub fn new(coefficient: f64, exponents: impl IntoIterator<Item = (String, f64)>) -> Self {
        assert!(
            coefficient != 0.0 && coefficient.is_finite(),
            "monomial coefficient must be finite and nonzero, got {coefficient}"
        );
        let exponents = exponents.into_iter().filter(|(_, e)| *e != 0.0).collect();
        Self {
            coefficient,
            exponents,
        }
    }

    /// Constant term (empty exponent map).
    pub fn constant(value: f64) -> Self {
        Self::new(value, [])
    }

    /// Convenience constructor: `c * var^exp`.
    pub fn single(coefficient: f64, var: &str, exp: f64) -> Self {
        Self::new(coefficient, [(var.to_string(), exp)])
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn exponents(&self) -> &BTreeMap<String, f64> {
        &self.exponents
    }

    pub fn evaluate(&self, point: &Assignment) -> Result<f64, ExprError> {
        let mut value = self.coefficient;
        for (name, &exp) in &self.exponents {
            let x = *point
                .get(name)
                .ok_or_else(|| ExprError::MissingVariable(name.clone()))?;
            if x <= 0.0 {
                return Err(ExprError::NonPositiveVariable {
                    name: name.clone(),
                    value: x,
                });
            }
            value *= x.powf(exp);
        }
        Ok(value)
    }

    /// Reciprocal monomial; requires a positive coefficient so the result can
    /// participate in posynomials.
    pub fn inverse(&self) -> Self {
        assert!(self.coefficient > 0.0, "cannot invert a negative monomial");
        Self {
            coefficient: 1.0 / self.coefficient,
            exponents: self.exponents.iter().map(|(n, e)| (n.clone(), -e)).collect(),
        }
    }

    /// Product of two monomials (coefficients multiply, exponents add).
    pub fn mul(&self, other: &Self) -> Self {
        let mut exps = self.exponents.clone();
        for (name, e) in &other.exponents {
            *exps.entry(name.clone()).or_insert(0.0) += e;
        }
        exps.retain(|_, e| *e != 0.0);
        Self {
            coefficient: self.coefficient * other.coefficient,
            exponents: exps,
        }
    }

    /// Fixes a subset of variables to given positive values, folding them into
    /// the coefficient.
    pub fn substitute(&self, fixed: &Assignment) -> Self {
        let mut coeff = self.coefficient;
        let mut exps = BTreeMap::new();
        for (name, &e) in &self.exponents {
            match fixed.get(name) {
                Some(&v) => {
                    assert!(v > 0.0, "substituted value for `{name}` must be positive");
                    coeff *= v.powf(e);
                }
                None => {
                    exps.insert(name.clone(), e);
                }
            }
        }
        Self {
            coefficient: coeff,
            exponents: exps,
        }
    }

    fn exponent_key(&self) -> Vec<(String, u64)> {
        self.exponents
            .iter()
            .map(|(n, e)| (n.clone(), e.to_bits()))
            .collect()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e}", self.coefficient)?;
        for (name, e) in &self.exponents {
            write!(f, "*{name}^{e}")?;
        }
        Ok(())
    }
}

/// Sum of monomials with positive coefficients; strictly positive on the
/// positive orthant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    /// Builds a posynomial, merging terms with identical exponents. All
    /// coefficients must be positive.
    pub fn new(terms: impl IntoIterator<Item = Monomial>) -> Self {
        let merged = merge_terms(terms);
        for t in &merged {
            assert!(
                t.coefficient > 0.0,
                "posynomial terms must have positive coefficients, got {}",
                t.coefficient
            );
        }
        Self { terms: merged }
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn evaluate(&self, point: &Assignment) -> Result<f64, ExprError> {
        let mut sum = 0.0;
        for t in &self.terms {
            sum += t.evaluate(point)?;
        }
        Ok(sum)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.terms.iter().chain(other.terms.iter()).cloned())
    }

    /// Multiplies every term by a positive scalar.
    pub fn scale(&self, factor: f64) -> Self {
        assert!(factor > 0.0, "posynomial scale factor must be positive");
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Monomial {
                    coefficient: t.coefficient * factor,
                    exponents: t.exponents.clone(),
                })
                .collect(),
        }
    }

    /// Multiplies every term by a (positive-coefficient) monomial. Dividing by
    /// a monomial is `mul_monomial(&m.inverse())`.
    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        Self::new(self.terms.iter().map(|t| t.mul(m)))
    }

    pub fn substitute(&self, fixed: &Assignment) -> Self {
        Self::new(self.terms.iter().map(|t| t.substitute(fixed)))
    }

    /// Variable names appearing in any term, sorted.
    pub fn variables(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .terms
            .iter()
            .flat_map(|t| t.exponents.keys().cloned())
            .collect();
        names.sort();
        names.dedup();
        names
    }
}

/// Difference of two posynomials, `plus - minus`. The canonical split puts
/// positive-coefficient terms in `plus` and the magnitudes of
/// negative-coefficient terms in `minus`; exactly cancelling terms vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct Signomial {
    plus: Posynomial,
    minus: Posynomial,
}

impl Signomial {
    /// Canonical split of a list of signed monomials.
    pub fn from_monomials(terms: impl IntoIterator<Item = Monomial>) -> Self {
        let merged = merge_terms(terms);
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for t in merged {
            if t.coefficient > 0.0 {
                plus.push(t);
            } else {
                minus.push(Monomial {
                    coefficient: -t.coefficient,
                    exponents: t.exponents,
                });
            }
        }
        Self {
            plus: Posynomial::new(plus),
            minus: Posynomial::new(minus),
        }
    }

    pub fn from_parts(plus: Posynomial, minus: Posynomial) -> Self {
        Self::from_monomials(plus.terms.iter().cloned().chain(minus.terms.iter().map(
            |t| Monomial {
                coefficient: -t.coefficient,
                exponents: t.exponents.clone(),
            },
        )))
    }

    pub fn plus(&self) -> &Posynomial {
        &self.plus
    }

    pub fn minus(&self) -> &Posynomial {
        &self.minus
    }

    pub fn evaluate(&self, point: &Assignment) -> Result<f64, ExprError> {
        Ok(self.plus.evaluate(point)? - self.minus.evaluate(point)?)
    }
}

fn merge_terms(terms: impl IntoIterator<Item = Monomial>) -> Vec<Monomial> {
    let mut by_key: BTreeMap<Vec<(String, u64)>, Monomial> = BTreeMap::new();
    for t in terms {
        let key = t.exponent_key();
        match by_key.get_mut(&key) {
            Some(existing) => existing.coefficient += t.coefficient,
            None => {
                by_key.insert(key, t);
            }
        }
    }
    by_key
        .into_values()
        .filter(|t| t.coefficient != 0.0)
        .collect()
}

/// Arithmetic-geometric mean condensation of a posynomial at an expansion
/// point: with weights `c_k = term_k(point) / p(point)` the monomial
/// `prod_k (term_k / c_k)^{c_k}` under-approximates `p` everywhere on the
/// positive orthant and touches it at `point`.
pub fn condense(p: &Posynomial, point: &Assignment) -> Result<Monomial, ExprError> {
    assert!(!p.is_empty(), "cannot condense an empty posynomial");
    let total = p.evaluate(point)?;
    let mut log_coeff = 0.0;
    let mut exponents: BTreeMap<String, f64> = BTreeMap::new();
    for term in p.terms() {
        let weight = term.evaluate(point)? / total;
        // weight > 0 because all inputs are strictly positive
        log_coeff += weight * (term.coefficient().ln() - weight.ln());
        for (name, e) in term.exponents() {
            *exponents.entry(name.clone()).or_insert(0.0) += weight * e;
        }
    }
    exponents.retain(|_, e| *e != 0.0);
    Ok(Monomial::new(log_coeff.exp(), exponents))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(pairs: &[(&str, f64)]) -> Assignment {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn monomial_evaluation() {
        // 3 * x^2 * y^-1 at (x=2, y=4) = 3
        let m = Monomial::new(3.0, [("x".into(), 2.0), ("y".into(), -1.0)]);
        assert_eq!(m.evaluate(&pt(&[("x", 2.0), ("y", 4.0)])).unwrap(), 3.0);
    }

    #[test]
    fn monomial_missing_and_nonpositive() {
        let m = Monomial::single(1.0, "x", 1.0);
        assert_eq!(
            m.evaluate(&pt(&[])),
            Err(ExprError::MissingVariable("x".into()))
        );
        assert!(matches!(
            m.evaluate(&pt(&[("x", -1.0)])),
            Err(ExprError::NonPositiveVariable { .. })
        ));
    }

    #[test]
    fn posynomial_evaluation() {
        let p = Posynomial::new([Monomial::single(1.0, "x", 1.0), Monomial::single(1.0, "y", 1.0)]);
        assert_eq!(p.evaluate(&pt(&[("x", 1.0), ("y", 3.0)])).unwrap(), 4.0);
    }

    #[test]
    fn signomial_evaluation_and_split() {
        let s = Signomial::from_monomials([
            Monomial::single(1.0, "x", 1.0),
            Monomial::single(-1.0, "y", 1.0),
        ]);
        assert_eq!(s.evaluate(&pt(&[("x", 1.0), ("y", 3.0)])).unwrap(), -2.0);
        assert_eq!(s.plus().terms().len(), 1);
        assert_eq!(s.minus().terms().len(), 1);
        assert!(s.minus().terms()[0].coefficient() > 0.0);
    }

    #[test]
    fn signomial_cancellation() {
        let s = Signomial::from_monomials([
            Monomial::single(2.0, "x", 1.0),
            Monomial::single(-2.0, "x", 1.0),
        ]);
        assert!(s.plus().is_empty());
        assert!(s.minus().is_empty());
    }

    #[test]
    fn merge_combines_equal_exponents() {
        let p = Posynomial::new([Monomial::single(1.0, "x", 1.0), Monomial::single(2.5, "x", 1.0)]);
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].coefficient(), 3.5);
    }

    #[test]
    fn condense_equality_at_point() {
        // p = x + 3y at (1,1): weights (0.25, 0.75), condensed(1,1) = 4 = p(1,1)
        let p = Posynomial::new([Monomial::single(1.0, "x", 1.0), Monomial::single(3.0, "y", 1.0)]);
        let point = pt(&[("x", 1.0), ("y", 1.0)]);
        let m = condense(&p, &point).unwrap();
        let at_point = m.evaluate(&point).unwrap();
        assert!((at_point - 4.0).abs() < 1e-12, "got {at_point}");
        // exponent of x is the weight 0.25, of y the weight 0.75
        assert!((m.exponents()["x"] - 0.25).abs() < 1e-14);
        assert!((m.exponents()["y"] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn condense_is_global_lower_bound() {
        let p = Posynomial::new([
            Monomial::new(2.0, [("x".into(), 1.0), ("y".into(), -0.5)]),
            Monomial::single(0.7, "y", 2.0),
            Monomial::constant(0.3),
        ]);
        let point = pt(&[("x", 0.8), ("y", 1.9)]);
        let m = condense(&p, &point).unwrap();
        for probe in [
            pt(&[("x", 0.1), ("y", 0.1)]),
            pt(&[("x", 5.0), ("y", 0.3)]),
            pt(&[("x", 2.2), ("y", 7.7)]),
        ] {
            let lhs = m.evaluate(&probe).unwrap();
            let rhs = p.evaluate(&probe).unwrap();
            assert!(lhs <= rhs + 1e-12, "bound violated: {lhs} > {rhs}");
        }
        let tight = m.evaluate(&point).unwrap() / p.evaluate(&point).unwrap();
        assert!((tight - 1.0).abs() < 1e-10);
    }

    #[test]
    fn forced_uniform_weights_leave_slack() {
        // p = x + 3y at (1,1) with weights forced to (0.5, 0.5):
        // bound = sqrt(2) * sqrt(6) = sqrt(12) ~ 3.4641 <= 4
        let bound = (2.0f64).sqrt() * (6.0f64).sqrt();
        assert!((bound - 12.0f64.sqrt()).abs() < 1e-12);
        assert!(bound <= 4.0);
    }

    #[test]
    fn substitute_folds_constants() {
        let m = Monomial::new(2.0, [("x".into(), 2.0), ("y".into(), 1.0)]);
        let s = m.substitute(&pt(&[("y", 3.0)]));
        assert_eq!(s.coefficient(), 6.0);
        assert!(s.exponents().contains_key("x"));
        assert!(!s.exponents().contains_key("y"));
    }
}
