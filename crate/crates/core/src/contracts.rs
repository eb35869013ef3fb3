//! Outcome-contingent payments built from the tangent hyperplane of a
//! preference curve.
//!
//! If the expert reports `r`, the payment for outcome `i` is the tangent
//! hyperplane at `r` evaluated at the vertex `e_i`:
//!
//! ```text
//! pay_i(r) = P_β(r) − ⟨∇P_β(r), r⟩ + ∂_i P_β(r)
//! ```
//!
//! so the expected payment under belief `q` is the hyperplane's value at `q`.
//! Convexity makes that hyperplane a support, which is what makes truthful
//! reporting optimal.

use thiserror::Error;

use crate::curves::ShiftedCurve;
use crate::simplex::{grid_parts, simplex_grid, Posterior, SimplexError};

/// Slack for the expected-payment identity and properness comparisons.
pub const PAYMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContractError {
    #[error("alternative pays {alt} in expectation at the report, the curve is {curve}")]
    ExpectedPaymentMismatch { alt: f64, curve: f64 },
    #[error("payment vector has {found} entries, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Grid(#[from] SimplexError),
}

/// The contract corresponding to `P_β`.
#[derive(Debug, Clone, Copy)]
pub struct Contract<'a> {
    curve: ShiftedCurve<'a>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaymentVector {
    pub payments: Vec<f64>,
    pub report: Posterior,
}

impl PaymentVector {
    pub fn payment(&self, outcome: usize) -> f64 {
        self.payments[outcome]
    }
}

/// Anything that maps a report to per-outcome payments.
pub trait PaymentRule {
    fn payments(&self, report: &Posterior) -> Vec<f64>;
}

impl<'a> Contract<'a> {
    pub fn new(curve: ShiftedCurve<'a>) -> Self {
        Contract { curve }
    }

    pub fn curve(&self) -> ShiftedCurve<'a> {
        self.curve
    }

    pub fn beta(&self) -> f64 {
        self.curve.beta()
    }
}

impl PaymentRule for Contract<'_> {
    fn payments(&self, report: &Posterior) -> Vec<f64> {
        payment_vector(self, report).payments
    }
}

pub fn payment_vector(contract: &Contract<'_>, report: &Posterior) -> PaymentVector {
    let value = contract.curve.eval(report);
    let grad = contract.curve.gradient(report);
    let intercept = value - report.dot(&grad);
    PaymentVector {
        payments: grad.iter().map(|g| intercept + g).collect(),
        report: report.clone(),
    }
}

pub fn expected_payment(pv: &PaymentVector, belief: &Posterior) -> f64 {
    expected_payment_raw(&pv.payments, belief)
}

pub fn expected_payment_raw(payments: &[f64], belief: &Posterior) -> f64 {
    belief.dot(payments)
}

/// `L(ρ) = P_β(r) + ⟨∇P_β(r), ρ − r⟩`.
pub fn tangent_value(contract: &Contract<'_>, report: &Posterior, at: &Posterior) -> f64 {
    let grad = contract.curve.gradient(report);
    let shift: f64 = grad
        .iter()
        .zip(at.probs().iter().zip(report.probs()))
        .map(|(g, (a, r))| g * (a - r))
        .sum();
    contract.curve.eval(report) + shift
}

/// Pays `alt` when the report is exactly `report`, and the tangent contract otherwise.
#[derive(Debug, Clone)]
pub struct PatchedContract<'a> {
    pub base: Contract<'a>,
    pub report: Posterior,
    pub alt: Vec<f64>,
}

impl PaymentRule for PatchedContract<'_> {
    fn payments(&self, report: &Posterior) -> Vec<f64> {
        if *report == self.report {
            self.alt.clone()
        } else {
            self.base.payments(report)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProperAudit {
    pub pairs: usize,
    /// Largest `E_belief[pay(report)] − E_belief[pay(belief)]` over grid pairs.
    pub worst_gain: f64,
    /// `(belief, report)` attaining `worst_gain`.
    pub witness: Option<(Posterior, Posterior)>,
    /// Largest `|E_report[pay(report)] − P_β(report)|`.
    pub worst_identity_gap: f64,
}

impl ProperAudit {
    pub fn passed(&self) -> bool {
        self.worst_gain <= PAYMENT_TOLERANCE && self.worst_identity_gap <= PAYMENT_TOLERANCE
    }
}

pub fn check_properness(contract: &Contract<'_>, step: f64) -> Result<ProperAudit, ContractError> {
    audit_properness(contract, contract.curve(), step)
}

/// Grid audit of `rule` against the curve it claims to implement.
pub fn audit_properness<R: PaymentRule + ?Sized>(
    rule: &R,
    curve: ShiftedCurve<'_>,
    step: f64,
) -> Result<ProperAudit, ContractError> {
    let grid = simplex_grid(curve.dim(), step)?;
    let table: Vec<Vec<f64>> = grid.iter().map(|r| rule.payments(r)).collect();

    let mut worst_gain = f64::NEG_INFINITY;
    let mut witness = None;
    let mut worst_identity_gap: f64 = 0.0;
    for (bi, belief) in grid.iter().enumerate() {
        let truthful = belief.dot(&table[bi]);
        worst_identity_gap = worst_identity_gap.max((truthful - curve.eval(belief)).abs());
        for (ri, report) in grid.iter().enumerate() {
            let gain = belief.dot(&table[ri]) - truthful;
            if gain > worst_gain {
                worst_gain = gain;
                witness = Some((belief.clone(), report.clone()));
            }
        }
    }
    Ok(ProperAudit {
        pairs: grid.len() * grid.len(),
        worst_gain,
        witness,
        worst_identity_gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Uniqueness {
    EqualsTangent,
    /// A belief that prefers to report `report` under the alternative payments.
    Counterexample { belief: Posterior, gain: f64 },
    /// The alternative differs but no grid belief profits; the grid is too coarse.
    Undetected { max_gain: f64 },
}

/// Checks whether `alt` can replace the tangent payments at `report` without
/// breaking truthfulness.
pub fn verify_uniqueness(
    contract: &Contract<'_>,
    report: &Posterior,
    alt: &[f64],
    step: f64,
) -> Result<Uniqueness, ContractError> {
    let n = contract.curve.dim();
    if alt.len() != n {
        return Err(ContractError::DimensionMismatch { expected: n, found: alt.len() });
    }
    grid_parts(step)?;
    let promised = contract.curve.eval(report);
    let offered = report.dot(alt);
    if (offered - promised).abs() > PAYMENT_TOLERANCE {
        return Err(ContractError::ExpectedPaymentMismatch { alt: offered, curve: promised });
    }
    let tangent = payment_vector(contract, report);
    let distance = tangent
        .payments
        .iter()
        .zip(alt)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if distance <= PAYMENT_TOLERANCE {
        return Ok(Uniqueness::EqualsTangent);
    }

    let mut best: Option<(Posterior, f64)> = None;
    for belief in simplex_grid(n, step)? {
        // truthful reporting earns P_β(belief) in expectation
        let gain = belief.dot(alt) - contract.curve.eval(&belief);
        if best.as_ref().is_none_or(|(_, g)| gain > *g) {
            best = Some((belief, gain));
        }
    }
    let (belief, gain) = best.expect("grid is never empty");
    if gain > PAYMENT_TOLERANCE {
        Ok(Uniqueness::Counterexample { belief, gain })
    } else {
        Ok(Uniqueness::Undetected { max_gain: gain })
    }
}
