//! Producer profit maximization and the influence-augmented aim function.
//!
//! Revenue, cost and influence curves are [`Polynomial`]s in the quantity
//! `Q`. The aim function `A(Q) = TR(Q) - TC(Q) + I(Q)` is maximized over a
//! closed [`Domain`] by collecting every stationary point inside it together
//! with both endpoints and keeping the best candidate. A positive marginal
//! influence at the aim optimum pushes marginal revenue below marginal cost,
//! which [`deviation_check`] verifies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::polynomial::Polynomial;

/// Tolerance on first-order-condition residuals.
pub const FOC_TOLERANCE: f64 = 1e-8;

/// Number of sub-intervals scanned for sign changes of the marginal objective.
pub const ROOT_SCAN_INTERVALS: usize = 1024;

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("invalid domain [{lo}, {hi}]: need finite 0 <= lo < hi")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("{name} must have degree >= 1")]
    DegreeTooLow { name: &'static str },
    #[error("polynomial `{name}` has non-finite coefficients")]
    NonFiniteCoefficients { name: &'static str },
    #[error("objective is constant on the domain")]
    DegenerateObjective,
    #[error("q = {q_star} is not an interior aim optimum (dA/dQ = {residual})")]
    NotAnAimOptimum { q_star: f64, residual: f64 },
    #[error("technology set has no production plans")]
    EmptyTechnology,
    #[error("production plan {index} has a negative or non-finite coordinate")]
    InvalidPlan { index: usize },
    #[error("prices must be finite and non-negative (p = {output}, w = {input})")]
    NegativePrice { output: f64, input: f64 },
    #[error("firm parameter `{name}` must be finite and strictly positive, got {value}")]
    InvalidFirmParameter { name: &'static str, value: f64 },
    #[error("inputs must be strictly positive (K = {capital}, L = {labor})")]
    NonPositiveInput { capital: f64, labor: f64 },
}

/// Closed search interval for the quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Domain {
    lo: f64,
    hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self, OptimizeError> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return Err(OptimizeError::InvalidDomain { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, q: f64) -> bool {
        self.lo <= q && q <= self.hi
    }
}

impl TryFrom<(f64, f64)> for Domain {
    type Error = OptimizeError;
    fn try_from((lo, hi): (f64, f64)) -> Result<Self, Self::Error> {
        Self::new(lo, hi)
    }
}

impl From<Domain> for (f64, f64) {
    fn from(d: Domain) -> Self {
        (d.lo, d.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub q_star: f64,
    pub objective_value: f64,
    /// Marginal objective at `q_star`.
    pub foc_residual: f64,
    pub is_interior: bool,
    /// Objective is strictly concave at an interior optimum.
    pub second_order_ok: bool,
}

/// All real roots of `p` inside `dom`, ascending.
///
/// Degree one and two use closed forms. Higher degrees scan
/// [`ROOT_SCAN_INTERVALS`] equal sub-intervals for sign changes and bisect
/// each bracket down to [`BISECTION_TOLERANCE`]. Roots of even multiplicity
/// that do not change sign are not reported by the scan.
pub fn real_roots_in(p: &Polynomial, dom: Domain) -> Vec<f64> {
    let c = p.coefficients();
    let mut roots = match p.degree() {
        None | Some(0) => Vec::new(),
        Some(1) => vec![-c[0] / c[1]],
        Some(2) => quadratic_roots(c[2], c[1], c[0]),
        Some(_) => scan_roots(p, dom),
    };
    roots.retain(|&r| dom.contains(r));
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    // Cancellation-free form.
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

fn scan_roots(p: &Polynomial, dom: Domain) -> Vec<f64> {
    let n = ROOT_SCAN_INTERVALS;
    let width = dom.hi - dom.lo;
    let grid = |k: usize| {
        if k == n {
            dom.hi
        } else {
            dom.lo + width * (k as f64) / (n as f64)
        }
    };
    let mut roots = Vec::new();
    let mut x0 = grid(0);
    let mut f0 = p.eval(x0);
    if f0 == 0.0 {
        roots.push(x0);
    }
    for k in 1..=n {
        let x1 = grid(k);
        let f1 = p.eval(x1);
        if f1 == 0.0 {
            roots.push(x1);
        } else if f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
            roots.push(bisect(p, x0, x1, f0));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

fn bisect(p: &Polynomial, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while b - a > BISECTION_TOLERANCE {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = p.eval(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn ensure_finite(p: &Polynomial, name: &'static str) -> Result<(), OptimizeError> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(OptimizeError::NonFiniteCoefficients { name })
    }
}

fn maximize_objective(objective: &Polynomial, dom: Domain) -> Result<OptimumReport, OptimizeError> {
    let marginal = objective.derivative();
    if marginal.is_zero() {
        return Err(OptimizeError::DegenerateObjective);
    }
    let curvature = marginal.derivative();

    let mut candidates = real_roots_in(&marginal, dom);
    candidates.push(dom.lo);
    candidates.push(dom.hi);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // Strict improvement only, so ties keep the smallest quantity.
    let mut best_q = candidates[0];
    let mut best_value = objective.eval(best_q);
    for &q in &candidates[1..] {
        let value = objective.eval(q);
        if value > best_value {
            best_q = q;
            best_value = value;
        }
    }

    let is_interior = dom.lo < best_q && best_q < dom.hi;
    Ok(OptimumReport {
        q_star: best_q,
        objective_value: best_value,
        foc_residual: marginal.eval(best_q),
        is_interior,
        second_order_ok: is_interior && curvature.eval(best_q) < 0.0,
    })
}

fn check_curves(tr: &Polynomial, tc: &Polynomial) -> Result<(), OptimizeError> {
    ensure_finite(tr, "tr")?;
    ensure_finite(tc, "tc")?;
    if tr.degree().unwrap_or(0) < 1 {
        return Err(OptimizeError::DegreeTooLow { name: "tr" });
    }
    if tc.degree().unwrap_or(0) < 1 {
        return Err(OptimizeError::DegreeTooLow { name: "tc" });
    }
    Ok(())
}

/// Maximizes `π(Q) = TR(Q) - TC(Q)`; the residual is `MR - MC` at `q_star`.
pub fn maximize_profit(tr: &Polynomial, tc: &Polynomial, dom: Domain) -> Result<OptimumReport, OptimizeError> {
    check_curves(tr, tc)?;
    maximize_objective(&(tr - tc), dom)
}

/// Maximizes `A(Q) = TR(Q) - TC(Q) + I(Q)`; the residual is
/// `MR - MC + dI/dQ` at `q_star`.
pub fn maximize_aim(
    tr: &Polynomial,
    tc: &Polynomial,
    infl: &Polynomial,
    dom: Domain,
) -> Result<OptimumReport, OptimizeError> {
    check_curves(tr, tc)?;
    ensure_finite(infl, "infl")?;
    maximize_objective(&(&(tr - tc) + infl), dom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    /// `MR(q*) - MC(q*)`.
    pub gap: f64,
    /// `dI/dQ(q*)`.
    pub marginal_influence: f64,
    /// `gap = -dI/dQ` within tolerance, and `gap < 0` whenever the marginal
    /// influence is positive.
    pub deviation_holds: bool,
}

/// Confirms that at an aim optimum the profit margin is pulled negative by
/// exactly the marginal influence.
pub fn deviation_check(
    tr: &Polynomial,
    tc: &Polynomial,
    infl: &Polynomial,
    q_star: f64,
) -> Result<DeviationReport, OptimizeError> {
    let gap = tr.derivative().eval(q_star) - tc.derivative().eval(q_star);
    let marginal_influence = infl.derivative().eval(q_star);
    let residual = gap + marginal_influence;
    if residual.is_nan() || residual.abs() > FOC_TOLERANCE {
        return Err(OptimizeError::NotAnAimOptimum { q_star, residual });
    }
    let deviation_holds = marginal_influence <= 0.0 || gap < 0.0;
    Ok(DeviationReport { gap, marginal_influence, deviation_holds })
}

/// Finite set of `(input, output)` production plans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologySet {
    plans: Vec<(f64, f64)>,
}

impl TechnologySet {
    pub fn new(plans: Vec<(f64, f64)>) -> Result<Self, OptimizeError> {
        if plans.is_empty() {
            return Err(OptimizeError::EmptyTechnology);
        }
        let bad = |v: f64| !v.is_finite() || v < 0.0;
        if let Some(index) = plans.iter().position(|&(x, y)| bad(x) || bad(y)) {
            return Err(OptimizeError::InvalidPlan { index });
        }
        Ok(Self { plans })
    }

    pub fn plans(&self) -> &[(f64, f64)] {
        &self.plans
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProducerChoice {
    pub plan_index: usize,
    pub profit: f64,
}

/// Best plan under `p·y - w·x`; the lowest index wins ties.
pub fn producer_profit(tech: &TechnologySet, p: f64, w: f64) -> Result<ProducerChoice, OptimizeError> {
    if !(p.is_finite() && w.is_finite() && p >= 0.0 && w >= 0.0) {
        return Err(OptimizeError::NegativePrice { output: p, input: w });
    }
    let mut best = ProducerChoice { plan_index: 0, profit: f64::NEG_INFINITY };
    for (index, &(x, y)) in tech.plans.iter().enumerate() {
        let profit = p * y - w * x;
        if profit > best.profit {
            best = ProducerChoice { plan_index: index, profit };
        }
    }
    Ok(best)
}

/// Cobb-Douglas firm `Q = c·K^α·L^β` facing prices `p` (output), `m`
/// (capital) and `n` (labor) with a budget for inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirmSpec {
    pub scale: f64,
    pub alpha: f64,
    pub beta: f64,
    pub output_price: f64,
    pub capital_price: f64,
    pub labor_price: f64,
    pub budget: f64,
}

impl FirmSpec {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let fields = [
            ("scale", self.scale),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("output_price", self.output_price),
            ("capital_price", self.capital_price),
            ("labor_price", self.labor_price),
            ("budget", self.budget),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(OptimizeError::InvalidFirmParameter { name, value });
            }
        }
        Ok(())
    }
}

fn check_inputs(capital: f64, labor: f64) -> Result<(), OptimizeError> {
    if capital > 0.0 && labor > 0.0 && capital.is_finite() && labor.is_finite() {
        Ok(())
    } else {
        Err(OptimizeError::NonPositiveInput { capital, labor })
    }
}

pub fn cobb_douglas(firm: &FirmSpec, capital: f64, labor: f64) -> Result<f64, OptimizeError> {
    check_inputs(capital, labor)?;
    Ok(firm.scale * capital.powf(firm.alpha) * labor.powf(firm.beta))
}

/// `p·Q(K, L) - m·K - n·L`.
pub fn firm_profit(firm: &FirmSpec, capital: f64, labor: f64) -> Result<f64, OptimizeError> {
    let q = cobb_douglas(firm, capital, labor)?;
    Ok(firm.output_price * q - firm.capital_price * capital - firm.labor_price * labor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangeSolution {
    pub capital: f64,
    pub labor: f64,
    /// Shadow value of the budget: `(∂Q/∂K) / m` at the optimum.
    pub multiplier: f64,
    pub output: f64,
}

/// Output maximization on the budget line `m·K + n·L = C`.
pub fn lagrange_optimize(firm: &FirmSpec) -> Result<LagrangeSolution, OptimizeError> {
    firm.validate()?;
    let returns = firm.alpha + firm.beta;
    let capital = firm.alpha * firm.budget / (firm.capital_price * returns);
    let labor = firm.beta * firm.budget / (firm.labor_price * returns);
    let output = cobb_douglas(firm, capital, labor)?;
    let multiplier = firm.alpha * output / capital / firm.capital_price;
    Ok(LagrangeSolution { capital, labor, multiplier, output })
}
