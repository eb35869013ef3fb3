//! CSV data for curve, tangent-line, and admissible-report plots.

use std::path::Path;

use super::{fmt_num, CliError, PlotKind};
use crate::contracts::{payment_vector, tangent_value, Contract};
use crate::maxrisk::{is_report_allowed, RiskLimits};
use crate::scenario::Scenario;
use crate::simplex::{grid_parts, Posterior};

pub(super) struct PlotRequest {
    pub what: PlotKind,
    pub betas: Vec<f64>,
    pub beta: f64,
    pub report: Option<f64>,
    pub step: f64,
    pub limits: RiskLimits,
}

pub(super) fn cmd_plot(scenario: &Scenario, req: &PlotRequest, path: &Path) -> Result<(), CliError> {
    if scenario.outcomes() != 2 {
        return Err(CliError::UnsupportedForN(scenario.outcomes()));
    }
    let k = grid_parts(req.step)?;
    let xs: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
    let curve = &scenario.curve;
    let mut w = csv::Writer::from_path(path)?;

    match req.what {
        PlotKind::Curves => {
            let mut header = vec!["rho".to_string()];
            header.extend(req.betas.iter().map(|b| format!("P_{b}")));
            w.write_record(&header)?;
            for &x in &xs {
                let rho = Posterior::binary(x)?;
                let mut row = vec![fmt_num(x)];
                row.extend(req.betas.iter().map(|&b| fmt_num(curve.shifted(b).eval(&rho))));
                w.write_record(&row)?;
            }
        }
        PlotKind::Payments => {
            let r = req
                .report
                .ok_or_else(|| CliError::Usage("--report is required for payments".into()))?;
            let report = Posterior::binary(r)?;
            let contract = Contract::new(curve.shifted(req.beta));
            w.write_record(["rho", "tangent", "curve"])?;
            for &x in &xs {
                let at = Posterior::binary(x)?;
                w.write_record([
                    fmt_num(x),
                    fmt_num(tangent_value(&contract, &report, &at)),
                    fmt_num(curve.shifted(req.beta).eval(&at)),
                ])?;
            }
        }
        PlotKind::Maxrisk => {
            let shifted = curve.shifted(req.beta);
            let contract = Contract::new(shifted);
            w.write_record(["rho", "payment_outcome1", "payment_outcome2", "allowed"])?;
            for &x in &xs {
                let report = Posterior::binary(x)?;
                let pv = payment_vector(&contract, &report);
                w.write_record([
                    fmt_num(x),
                    fmt_num(pv.payments[0]),
                    fmt_num(pv.payments[1]),
                    is_report_allowed(shifted, &report, req.limits).to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
