//! Brute-force ground truth.
//!
//! Nothing here calls into `contracts`, `experts` or `maxrisk`; payments are
//! recomputed from the curve through the hyperplane's vertex values
//! `P(r) + ⟨∇P(r), e_i − r⟩`, a different algebraic route from the one the
//! contract module uses.

use thiserror::Error;

use crate::curves::{PreferenceCurve, ShiftedCurve};
use crate::experts::{Expert, ExpertValue};
use crate::maxrisk::{ReportInterval, RiskLimits};
use crate::simplex::{grid_parts, simplex_grid, Posterior, SimplexError};

const TIE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("finite differences need every coordinate ≥ h; {0:?} is too close to the boundary")]
    BoundaryPoint(Vec<f64>),
    #[error("report bounds are defined for binary events only (got {0} outcomes)")]
    NotBinary(usize),
    #[error(transparent)]
    Grid(#[from] SimplexError),
}

/// Vertex values of the tangent hyperplane at `report`.
pub fn vertex_payments(curve: ShiftedCurve<'_>, report: &Posterior) -> Vec<f64> {
    let r = report.probs();
    let grad = curve.gradient(report);
    let value = curve.eval(report);
    (0..r.len())
        .map(|i| {
            let mut acc = value;
            for (j, g) in grad.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                acc += g * (e - r[j]);
            }
            acc
        })
        .collect()
}

/// Best grid report for `belief` under the tangent contract of `curve`.
pub fn brute_force_best_report(
    curve: ShiftedCurve<'_>,
    belief: &Posterior,
    step: f64,
) -> Result<(Posterior, f64), OracleError> {
    brute_force_best_report_with(|r| vertex_payments(curve, r), belief, step)
}

/// Exhaustive search over grid reports for an arbitrary payment rule.
/// Near-ties go to the report closest to the belief.
pub fn brute_force_best_report_with<F>(
    payments: F,
    belief: &Posterior,
    step: f64,
) -> Result<(Posterior, f64), OracleError>
where
    F: Fn(&Posterior) -> Vec<f64>,
{
    let mut best: Option<(Posterior, f64, f64)> = None;
    for report in simplex_grid(belief.dim(), step)? {
        let pay = payments(&report);
        let value: f64 = belief.probs().iter().zip(&pay).map(|(b, x)| b * x).sum();
        let distance = report.max_abs_diff(belief);
        let better = match &best {
            None => true,
            Some((_, v, d)) => value > v + TIE_SLACK || (value >= v - TIE_SLACK && distance < *d),
        };
        if better {
            best = Some((report, value, distance));
        }
    }
    let (report, value, _) = best.expect("grid is never empty");
    Ok((report, value))
}

/// `U_i` by plain enumeration of every technology.
pub fn brute_force_expert_value(expert: &Expert, curve: &PreferenceCurve) -> ExpertValue {
    let values: Vec<f64> = expert
        .technologies()
        .iter()
        .map(|mu| {
            let mut total = 0.0;
            for (rho, w) in mu.support() {
                total += w * curve.eval(rho);
            }
            total - mu.cost()
        })
        .collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    ExpertValue { u: values[best], best }
}

/// Central differences of `P_0` along each ambient coordinate.
pub fn finite_difference_gradient(curve: &PreferenceCurve, rho: &Posterior, h: f64) -> Result<Vec<f64>, OracleError> {
    let x = rho.probs();
    if x.iter().any(|&v| v < h) {
        return Err(OracleError::BoundaryPoint(x.to_vec()));
    }
    Ok((0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (curve.eval_ambient(&up) - curve.eval_ambient(&down)) / (2.0 * h)
        })
        .collect())
}

/// Hull of admissible scalar reports on a grid of spacing `step`.
pub fn brute_force_report_bounds(
    curve: &PreferenceCurve,
    beta: f64,
    limits: RiskLimits,
    step: f64,
) -> Result<ReportInterval, OracleError> {
    if curve.dim() != 2 {
        return Err(OracleError::NotBinary(curve.dim()));
    }
    let k = grid_parts(step)?;
    let shifted = curve.shifted(beta);
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    for i in 0..=k {
        let rho = i as f64 / k as f64;
        let report = Posterior::binary(rho)?;
        let pay = vertex_payments(shifted, &report);
        if pay.iter().all(|&x| x >= -limits.phi_e() && x <= limits.phi_p()) {
            lo.get_or_insert(rho);
            hi = Some(rho);
        }
    }
    Ok(match (lo, hi) {
        (Some(min), Some(max)) => ReportInterval::Range { min, max },
        _ => ReportInterval::Empty,
    })
}
