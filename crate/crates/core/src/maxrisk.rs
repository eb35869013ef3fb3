//! Budget caps on both sides of the contract.
//!
//! `φ_p` bounds what the principal may pay for any outcome and `φ_e` what the
//! expert may lose. A report is admissible only if every vertex payment of
//! its tangent hyperplane lies in `[−φ_e, φ_p]`, which in turn restricts the
//! technologies an expert can run at a given `β` (the set `M(β)`).
//!
//! For a binary event, write `ρ` for the probability of outcome 1. The
//! payment for outcome 1 is the tangent line at `ρ = 1`, non-decreasing in
//! the report; the payment for outcome 2 is the tangent line at `ρ = 0`,
//! non-increasing. Each cap therefore cuts the report range at one point,
//! found by bisection.

use thiserror::Error;

use crate::contracts::{payment_vector, Contract};
use crate::curves::{PreferenceCurve, ShiftedCurve};
use crate::experts::{best_among, Expert};
use crate::simplex::Posterior;

/// Width at which report-bound bisection stops.
pub const BOUND_TOLERANCE: f64 = 1e-10;
/// A restricted value at or above `−BREAK_EVEN_SLACK` counts as break-even.
pub const BREAK_EVEN_SLACK: f64 = 1e-12;
/// Default `β` grid resolution for restricted bids.
pub const DEFAULT_BETA_STEP: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaxRiskError {
    #[error("report bounds are defined for binary events only (got {0} outcomes)")]
    NotBinary(usize),
    #[error("vertex payments are not finite near ρ = {0}")]
    NoBracket(f64),
    #[error("no technology is admissible at any grid β")]
    EmptyFeasibleSet,
    #[error("risk limit {0} must be nonnegative")]
    InvalidLimit(f64),
    #[error("β grid must be nonempty, ascending and contain 0")]
    InvalidGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskLimits {
    phi_p: f64,
    phi_e: f64,
}

impl RiskLimits {
    /// Either cap may be `f64::INFINITY`.
    pub fn new(phi_p: f64, phi_e: f64) -> Result<Self, MaxRiskError> {
        for v in [phi_p, phi_e] {
            if v.is_nan() || v < 0.0 {
                return Err(MaxRiskError::InvalidLimit(v));
            }
        }
        Ok(RiskLimits { phi_p, phi_e })
    }

    pub fn unlimited() -> Self {
        RiskLimits { phi_p: f64::INFINITY, phi_e: f64::INFINITY }
    }

    pub fn phi_p(&self) -> f64 {
        self.phi_p
    }

    pub fn phi_e(&self) -> f64 {
        self.phi_e
    }

    pub fn admits(&self, payments: &[f64]) -> bool {
        payments.iter().all(|&x| x >= -self.phi_e && x <= self.phi_p)
    }
}

/// Admissible probabilities for outcome 1 in a binary event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReportInterval {
    Empty,
    Range { min: f64, max: f64 },
}

impl ReportInterval {
    pub fn contains(&self, rho: f64) -> bool {
        match *self {
            ReportInterval::Empty => false,
            ReportInterval::Range { min, max } => min <= rho && rho <= max,
        }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            ReportInterval::Empty => None,
            ReportInterval::Range { min, max } => Some((min, max)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedBid {
    pub beta_prime: f64,
    pub technology: usize,
}

/// Which `β` the restricted optimization reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BidObjective {
    /// Largest `β` whose best admissible technology still breaks even.
    #[default]
    BreakEven,
    /// `argmax_β` of the best admissible value, taken literally. With the
    /// do-nothing test admissible this is `β = 0`.
    LiteralArgmax,
}

pub fn is_report_allowed(curve: ShiftedCurve<'_>, report: &Posterior, limits: RiskLimits) -> bool {
    limits.admits(&payment_vector(&Contract::new(curve), report).payments)
}

/// Indices of the technologies whose whole support is admissible at `β`.
pub fn restricted_technologies(
    expert: &Expert,
    curve: &PreferenceCurve,
    beta: f64,
    limits: RiskLimits,
) -> Vec<usize> {
    let shifted = curve.shifted(beta);
    expert
        .technologies()
        .iter()
        .enumerate()
        .filter(|(_, mu)| {
            mu.support()
                .iter()
                .all(|(rho, _)| is_report_allowed(shifted, rho, limits))
        })
        .map(|(i, _)| i)
        .collect()
}

fn binary_payments(curve: ShiftedCurve<'_>, rho: f64) -> Result<[f64; 2], MaxRiskError> {
    let report = Posterior::binary(rho.clamp(0.0, 1.0)).expect("clamped scalar is a binary posterior");
    let pv = payment_vector(&Contract::new(curve), &report);
    let pair = [pv.payments[0], pv.payments[1]];
    if pair.iter().all(|x| x.is_finite()) {
        Ok(pair)
    } else {
        Err(MaxRiskError::NoBracket(rho))
    }
}

/// Where a predicate that flips once along `[0, 1]` changes value.
///
/// `holds_below` is true when the predicate holds for small `ρ` and fails for
/// large `ρ`. Returns the last point where it holds (upper cut) or the first
/// (lower cut), `None` if it holds nowhere.
fn cut<F>(holds: F, holds_below: bool) -> Result<Option<f64>, MaxRiskError>
where
    F: Fn(f64) -> Result<bool, MaxRiskError>,
{
    let (inside, outside) = if holds_below { (0.0, 1.0) } else { (1.0, 0.0) };
    if holds(outside)? {
        return Ok(Some(outside));
    }
    if !holds(inside)? {
        return Ok(None);
    }
    let (mut good, mut bad) = (inside, outside);
    while (bad - good).abs() > BOUND_TOLERANCE {
        let mid = 0.5 * (good + bad);
        if holds(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Some(good))
}

/// Admissible report range for a binary event at contract `β`.
///
/// Solves `pay_2(ρ_max) = −φ_e` and `pay_1(ρ_min) = −φ_e`, the analogous
/// `φ_p` equations, and intersects. A cap that never binds leaves the range
/// open to the corresponding vertex.
pub fn binary_report_bounds(
    curve: &PreferenceCurve,
    beta: f64,
    limits: RiskLimits,
) -> Result<ReportInterval, MaxRiskError> {
    if curve.dim() != 2 {
        return Err(MaxRiskError::NotBinary(curve.dim()));
    }
    let shifted = curve.shifted(beta);
    let pay = |rho: f64| binary_payments(shifted, rho);
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 1.0;

    if limits.phi_e.is_finite() {
        // outcome-2 payment falls as ρ rises
        match cut(|r| Ok(pay(r)?[1] >= -limits.phi_e), true)? {
            Some(r) => hi = hi.min(r),
            None => return Ok(ReportInterval::Empty),
        }
        match cut(|r| Ok(pay(r)?[0] >= -limits.phi_e), false)? {
            Some(r) => lo = lo.max(r),
            None => return Ok(ReportInterval::Empty),
        }
    }
    if limits.phi_p.is_finite() {
        match cut(|r| Ok(pay(r)?[0] <= limits.phi_p), true)? {
            Some(r) => hi = hi.min(r),
            None => return Ok(ReportInterval::Empty),
        }
        match cut(|r| Ok(pay(r)?[1] <= limits.phi_p), false)? {
            Some(r) => lo = lo.max(r),
            None => return Ok(ReportInterval::Empty),
        }
    }
    if lo > hi {
        Ok(ReportInterval::Empty)
    } else {
        Ok(ReportInterval::Range { min: lo, max: hi })
    }
}

/// Best admissible value `max_{μ∈M(β)} E_μ P_β(ρ) − C(μ)`, with its technology.
pub fn restricted_value(
    expert: &Expert,
    curve: &PreferenceCurve,
    beta: f64,
    limits: RiskLimits,
) -> Option<(f64, usize)> {
    let allowed = restricted_technologies(expert, curve, beta, limits);
    best_among(expert, curve, allowed).map(|v| (v.u - beta, v.best))
}

/// Break-even bid under risk caps, refined between grid points by bisection.
pub fn restricted_bid(
    expert: &Expert,
    curve: &PreferenceCurve,
    limits: RiskLimits,
    beta_grid: &[f64],
) -> Result<RestrictedBid, MaxRiskError> {
    restricted_bid_with(expert, curve, limits, beta_grid, BidObjective::BreakEven)
}

pub fn restricted_bid_with(
    expert: &Expert,
    curve: &PreferenceCurve,
    limits: RiskLimits,
    beta_grid: &[f64],
    objective: BidObjective,
) -> Result<RestrictedBid, MaxRiskError> {
    if beta_grid.is_empty()
        || !beta_grid.contains(&0.0)
        || beta_grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(MaxRiskError::InvalidGrid);
    }
    let values: Vec<Option<(f64, usize)>> = beta_grid
        .iter()
        .map(|&b| restricted_value(expert, curve, b, limits))
        .collect();

    match objective {
        BidObjective::LiteralArgmax => {
            let mut best: Option<RestrictedBid> = None;
            let mut best_value = f64::NEG_INFINITY;
            for (&beta, v) in beta_grid.iter().zip(&values) {
                if let Some((value, technology)) = *v {
                    if value > best_value {
                        best_value = value;
                        best = Some(RestrictedBid { beta_prime: beta, technology });
                    }
                }
            }
            best.ok_or(MaxRiskError::EmptyFeasibleSet)
        }
        BidObjective::BreakEven => {
            let feasible = |v: &Option<(f64, usize)>| v.is_some_and(|(value, _)| value >= -BREAK_EVEN_SLACK);
            let last = values
                .iter()
                .rposition(feasible)
                .ok_or(MaxRiskError::EmptyFeasibleSet)?;
            let mut good = beta_grid[last];
            let mut technology = values[last].expect("feasible entry").1;
            if let Some(&next) = beta_grid.get(last + 1) {
                let mut bad = next;
                while bad - good > BOUND_TOLERANCE {
                    let mid = 0.5 * (good + bad);
                    match restricted_value(expert, curve, mid, limits) {
                        Some((value, t)) if value >= -BREAK_EVEN_SLACK => {
                            good = mid;
                            technology = t;
                        }
                        _ => bad = mid,
                    }
                }
            }
            Ok(RestrictedBid { beta_prime: good, technology })
        }
    }
}

/// `0, step, 2·step, …` up to and including the first point at or past `upper`.
pub fn beta_grid(upper: f64, step: f64) -> Vec<f64> {
    let steps = (upper.max(0.0) / step).ceil() as usize;
    (0..=steps).map(|k| k as f64 * step).collect()
}

/// Smallest reserve `β′ ≥ 0` with `P_β′(e_i) ≤ φ_p` at every vertex.
pub fn min_beta_reserve(curve: &PreferenceCurve, phi_p: f64) -> f64 {
    let n = curve.dim();
    let top = (0..n)
        .map(|i| curve.eval(&Posterior::vertex(n, i)))
        .fold(f64::NEG_INFINITY, f64::max);
    (top - phi_p).max(0.0)
}
