//! The `verify` subcommand: each suite re-derives a property by brute force
//! and reports its worst violation.

use std::io::Write;

use clap::ValueEnum;

use super::{CliError, EXIT_OK, EXIT_VERIFY_FAILED};
use crate::auction::{check_dominant_strategy, Mechanism};
use crate::contracts::{check_properness, payment_vector, verify_uniqueness, Contract, Uniqueness, PAYMENT_TOLERANCE};
use crate::curves::{check_convexity, CONVEXITY_TOLERANCE};
use crate::maxrisk::{binary_report_bounds, min_beta_reserve, ReportInterval, RiskLimits};
use crate::oracle::{brute_force_best_report, brute_force_report_bounds};
use crate::scenario::Scenario;
use crate::simplex::{simplex_grid, Posterior};
use crate::streams::{derive_seed, Stream};

const CONVEXITY_SAMPLES: usize = 10_000;
const BOUNDS_STEP: f64 = 1e-4;
const UNIQUENESS_OFFSET: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Convexity,
    Identity,
    Properness,
    Dominance,
    Uniqueness,
    Maxrisk,
}

const ALL: [Suite; 6] = [
    Suite::Convexity,
    Suite::Identity,
    Suite::Properness,
    Suite::Dominance,
    Suite::Uniqueness,
    Suite::Maxrisk,
];

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Convexity => "convexity",
            Suite::Identity => "identity",
            Suite::Properness => "properness",
            Suite::Dominance => "dominance",
            Suite::Uniqueness => "uniqueness",
            Suite::Maxrisk => "maxrisk",
        }
    }
}

enum Verdict {
    Pass { worst: f64, detail: String },
    Fail { worst: f64, detail: String },
    Skipped(String),
}

fn judge(worst: f64, tolerance: f64, detail: String) -> Verdict {
    if worst <= tolerance {
        Verdict::Pass { worst, detail }
    } else {
        Verdict::Fail { worst, detail }
    }
}

/// Grid spacing that keeps pairwise scans at desk scale.
fn default_step(n: usize) -> f64 {
    match n {
        2 => 0.01,
        3 => 0.05,
        4..=6 => 0.1,
        7 => 0.2,
        _ => 0.25,
    }
}

pub(super) fn cmd_verify(
    scenario: &Scenario,
    suites: &[Suite],
    grid_step: Option<f64>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let step = grid_step.unwrap_or_else(|| default_step(scenario.outcomes()));
    let selected: Vec<Suite> = if suites.is_empty() { ALL.to_vec() } else { suites.to_vec() };
    let mechanism = Mechanism::new(scenario)?;
    let mut betas = vec![0.0];
    betas.extend(mechanism.bids().iter().map(|b| b.amount));

    let mut failed = false;
    for suite in ALL.into_iter().filter(|s| selected.contains(s)) {
        let verdict = match suite {
            Suite::Convexity => convexity(scenario),
            Suite::Identity => identity(scenario, &betas, step)?,
            Suite::Properness => properness(scenario, &betas, step)?,
            Suite::Dominance => dominance(scenario, &mechanism)?,
            Suite::Uniqueness => uniqueness(scenario, step)?,
            Suite::Maxrisk => maxrisk(scenario, &betas)?,
        };
        let line = match verdict {
            Verdict::Pass { worst, detail } => format!("PASS  worst {worst:.3e}  {detail}"),
            Verdict::Fail { worst, detail } => {
                failed = true;
                format!("FAIL  worst {worst:.3e}  {detail}")
            }
            Verdict::Skipped(why) => format!("SKIP  {why}"),
        };
        writeln!(out, "{:<11} {line}", suite.name())?;
    }
    Ok(if failed { EXIT_VERIFY_FAILED } else { EXIT_OK })
}

fn convexity(scenario: &Scenario) -> Verdict {
    let seed = derive_seed(scenario.seed, 0, Stream::Audit);
    let audit = check_convexity(&scenario.curve, CONVEXITY_SAMPLES, seed);
    judge(
        audit.worst_violation,
        CONVEXITY_TOLERANCE,
        format!("{} random chords", audit.samples),
    )
}

fn identity(scenario: &Scenario, betas: &[f64], step: f64) -> Result<Verdict, CliError> {
    let grid = simplex_grid(scenario.outcomes(), step)?;
    let mut worst: f64 = 0.0;
    for &beta in betas {
        let curve = scenario.curve.shifted(beta);
        let contract = Contract::new(curve);
        for r in &grid {
            let pv = payment_vector(&contract, r);
            worst = worst.max((r.dot(&pv.payments) - curve.eval(r)).abs());
        }
    }
    Ok(judge(worst, PAYMENT_TOLERANCE, format!("{} reports x {} shifts", grid.len(), betas.len())))
}

fn properness(scenario: &Scenario, betas: &[f64], step: f64) -> Result<Verdict, CliError> {
    let mut worst = f64::NEG_INFINITY;
    let mut pairs = 0;
    for &beta in betas {
        let audit = check_properness(&Contract::new(scenario.curve.shifted(beta)), step)?;
        worst = worst.max(audit.worst_gain).max(audit.worst_identity_gap);
        pairs += audit.pairs;
    }
    let grid = simplex_grid(scenario.outcomes(), step)?;
    let mut misses = 0;
    if grid.len() <= 500 {
        let curve = scenario.curve.shifted(0.0);
        for belief in &grid {
            let (best, _) = brute_force_best_report(curve, belief, step)?;
            if best.max_abs_diff(belief) > step / 2.0 {
                misses += 1;
            }
        }
    }
    if misses > 0 {
        return Ok(Verdict::Fail {
            worst,
            detail: format!("{misses} beliefs whose best grid report is not themselves"),
        });
    }
    Ok(judge(worst, PAYMENT_TOLERANCE, format!("{pairs} belief/report pairs")))
}

fn dominance(scenario: &Scenario, mechanism: &Mechanism<'_>) -> Result<Verdict, CliError> {
    let top = mechanism.bids().iter().map(|b| b.amount).fold(0.0, f64::max);
    let mut grid = vec![0.0, scenario.reserve, 2.0 * top + 1.0];
    for b in mechanism.bids() {
        grid.extend([b.amount, (b.amount - 0.05).max(0.0), b.amount + 0.05]);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut worst = f64::NEG_INFINITY;
    let mut profiles = 0;
    for target in 0..scenario.experts.len() {
        let report = check_dominant_strategy(scenario, target, &grid)?;
        worst = worst.max(report.max_gain);
        profiles += report.profiles;
    }
    Ok(judge(
        worst,
        PAYMENT_TOLERANCE,
        format!("{} bid levels, {profiles} opponent profiles", grid.len()),
    ))
}

/// Payment perturbations that keep the expected payment at `report`.
fn rotations(report: &Posterior) -> Vec<Vec<f64>> {
    let r = report.probs();
    let n = r.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut d = vec![0.0; n];
            d[i] = r[j];
            d[j] = -r[i];
            let scale = UNIQUENESS_OFFSET / r[i].max(r[j]);
            out.push(d.iter().map(|x| x * scale).collect::<Vec<_>>());
            out.push(d.iter().map(|x| -x * scale).collect());
        }
    }
    out
}

fn uniqueness(scenario: &Scenario, step: f64) -> Result<Verdict, CliError> {
    if !scenario.curve.is_differentiable() {
        return Ok(Verdict::Skipped("curve has kinks; supporting hyperplanes are not unique there".into()));
    }
    let mut reports: Vec<Posterior> = scenario
        .experts
        .iter()
        .flat_map(|e| e.technologies().iter().flat_map(|mu| mu.support().iter().map(|(p, _)| p.clone())))
        .filter(|p| p.probs().iter().all(|&x| x > 0.0))
        .collect();
    reports.dedup();
    if reports.is_empty() {
        reports.push(scenario.prior.posterior().clone());
    }
    let contract = Contract::new(scenario.curve.shifted(0.0));
    let mut checked = 0;
    let mut least_gain = f64::INFINITY;
    for report in &reports {
        let tangent = payment_vector(&contract, report).payments;
        for d in rotations(report) {
            let alt: Vec<f64> = tangent.iter().zip(&d).map(|(t, x)| t + x).collect();
            checked += 1;
            match verify_uniqueness(&contract, report, &alt, step)? {
                Uniqueness::Counterexample { gain, .. } => least_gain = least_gain.min(gain),
                _ => {
                    return Ok(Verdict::Fail {
                        worst: 0.0,
                        detail: format!("alternative {alt:?} at {:?} found no profitable deviation", report.probs()),
                    })
                }
            }
        }
    }
    Ok(Verdict::Pass {
        worst: -least_gain,
        detail: format!("{checked} alternative payment vectors all exploitable"),
    })
}

fn maxrisk(scenario: &Scenario, betas: &[f64]) -> Result<Verdict, CliError> {
    let configs: Vec<RiskLimits> = match scenario.risk_limits {
        Some(l) => vec![l],
        None => vec![
            RiskLimits::new(f64::INFINITY, 0.5)?,
            RiskLimits::new(f64::INFINITY, 1.5)?,
            RiskLimits::new(0.3, 0.5)?,
        ],
    };
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();

    if scenario.outcomes() == 2 {
        for &limits in &configs {
            for &beta in betas {
                let solved = binary_report_bounds(&scenario.curve, beta, limits)?;
                let scanned = brute_force_report_bounds(&scenario.curve, beta, limits, BOUNDS_STEP)
                    ?;
                worst = worst.max(interval_gap(solved, scanned));
            }
        }
        detail.push(format!("{} bound comparisons", configs.len() * betas.len()));
    }

    // every vertex payment under the vertex reserve stays within φ_p
    let mut excess = f64::NEG_INFINITY;
    for limits in configs.iter().filter(|l| l.phi_p().is_finite()) {
        let reserve = min_beta_reserve(&scenario.curve, limits.phi_p());
        let contract = Contract::new(scenario.curve.shifted(reserve));
        let grid = simplex_grid(scenario.outcomes(), default_step(scenario.outcomes()))?;
        for r in &grid {
            let top = payment_vector(&contract, r).payments.into_iter().fold(f64::NEG_INFINITY, f64::max);
            excess = excess.max(top - limits.phi_p());
        }
        detail.push(format!("vertex reserve {reserve:.6} for phi_p {}", limits.phi_p()));
    }
    if detail.is_empty() {
        return Ok(Verdict::Skipped("no finite principal cap and not a binary event".into()));
    }
    if excess > PAYMENT_TOLERANCE {
        return Ok(Verdict::Fail {
            worst: excess,
            detail: "a payment exceeds phi_p under the vertex reserve".into(),
        });
    }
    // the scan can sit one full step inside the bisected bound
    Ok(judge(worst, BOUNDS_STEP + 1e-9, detail.join(", ")))
}

/// Disagreement between the root-solved and scanned intervals, allowing the
/// scan to miss slivers narrower than one grid step.
pub(crate) fn interval_gap(solved: ReportInterval, scanned: ReportInterval) -> f64 {
    match (solved.bounds(), scanned.bounds()) {
        (None, None) => 0.0,
        (Some((lo, hi)), None) | (None, Some((lo, hi))) => hi - lo,
        (Some((a, b)), Some((c, d))) => (a - c).abs().max((b - d).abs()),
    }
}
