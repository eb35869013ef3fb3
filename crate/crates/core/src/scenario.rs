//! Scenario files: everything one mechanism run needs, loaded from JSON.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "outcomes": 2,
//!   "prior": [0.5, 0.5],
//!   "curve": { "kind": "quadratic" },
//!   "experts": [
//!     { "id": "A",
//!       "technologies": [
//!         { "support": [ { "posterior": [0.9, 0.1], "weight": 0.5 },
//!                        { "posterior": [0.1, 0.9], "weight": 0.5 } ],
//!           "cost": 0.2 } ] }
//!   ],
//!   "reserve": 0.0,
//!   "risk_limits": { "phi_p": null, "phi_e": 1.5 },
//!   "seed": 20240601,
//!   "samples": 100000
//! }
//! ```
//!
//! `curve.kind` is `quadratic`, `action_set` (with `actions`: one payoff
//! vector per action) or `concave_probe` (non-convex, for audit self-tests).
//! A missing or `null` risk limit means no cap.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::curves::{from_action_set, PreferenceCurve};
use crate::experts::Expert;
use crate::maxrisk::RiskLimits;
use crate::simplex::{validate_technology, Posterior, Prior, Technology};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{location}: {message}")]
    Validation { location: String, message: String },
}

fn invalid(location: impl Into<String>, message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Validation { location: location.into(), message: message.to_string() }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub prior: Prior,
    pub curve: PreferenceCurve,
    pub experts: Vec<Expert>,
    pub reserve: f64,
    pub risk_limits: Option<RiskLimits>,
    pub seed: u64,
    pub samples: usize,
}

impl Scenario {
    /// Zero reserve, no risk caps, default sample count.
    pub fn new(prior: Prior, curve: PreferenceCurve, experts: Vec<Expert>, seed: u64) -> Self {
        Scenario {
            prior,
            curve,
            experts,
            reserve: 0.0,
            risk_limits: None,
            seed,
            samples: DEFAULT_SAMPLES,
        }
    }

    pub fn outcomes(&self) -> usize {
        self.prior.dim()
    }

    pub fn expert_index(&self, id: &str) -> Option<usize> {
        self.experts.iter().position(|e| e.id() == id)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    format_version: Option<u32>,
    outcomes: Option<usize>,
    prior: Option<Vec<f64>>,
    curve: Option<RawCurve>,
    experts: Option<Vec<RawExpert>>,
    reserve: Option<f64>,
    risk_limits: Option<RawLimits>,
    seed: Option<u64>,
    samples: Option<usize>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawCurve {
    Quadratic,
    ActionSet { actions: Vec<Vec<f64>> },
    ConcaveProbe,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    phi_p: Option<f64>,
    phi_e: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpert {
    id: String,
    technologies: Vec<RawTechnology>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTechnology {
    support: Vec<RawPoint>,
    cost: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    posterior: Vec<f64>,
    weight: f64,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = serde_json::from_str(text)?;
    match raw.format_version {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(invalid("format_version", format!("unsupported version {v}"))),
        None => return Err(invalid("format_version", "missing")),
    }
    let seed = raw.seed.ok_or_else(|| invalid("seed", "missing"))?;
    let prior_values = raw.prior.ok_or_else(|| invalid("prior", "missing"))?;
    let prior = Prior::new(Posterior::new(prior_values).map_err(|e| invalid("prior", e))?);
    let n = prior.dim();
    if let Some(outcomes) = raw.outcomes {
        if outcomes != n {
            return Err(invalid("outcomes", format!("{outcomes} but prior has {n} entries")));
        }
    }

    let curve = match raw.curve.ok_or_else(|| invalid("curve", "missing"))? {
        RawCurve::Quadratic => PreferenceCurve::quadratic(prior.clone()),
        RawCurve::ConcaveProbe => PreferenceCurve::ConcaveProbe { prior: prior.clone() },
        RawCurve::ActionSet { actions } => {
            from_action_set(actions, &prior).map_err(|e| invalid("curve.actions", e))?
        }
    };

    let raw_experts = raw.experts.ok_or_else(|| invalid("experts", "missing"))?;
    if raw_experts.is_empty() {
        return Err(invalid("experts", "at least one expert is required"));
    }
    let mut experts = Vec::with_capacity(raw_experts.len());
    for (ei, re) in raw_experts.into_iter().enumerate() {
        let here = format!("experts[{ei}]");
        if experts.iter().any(|e: &Expert| e.id() == re.id) {
            return Err(invalid(format!("{here}.id"), format!("duplicate id {:?}", re.id)));
        }
        let mut technologies = Vec::with_capacity(re.technologies.len());
        for (ti, rt) in re.technologies.into_iter().enumerate() {
            let tech_here = format!("{here}.technologies[{ti}]");
            let mut support = Vec::with_capacity(rt.support.len());
            for (si, pt) in rt.support.into_iter().enumerate() {
                let point = Posterior::new(pt.posterior)
                    .map_err(|e| invalid(format!("{tech_here}.support[{si}].posterior"), e))?;
                if point.dim() != n {
                    return Err(invalid(
                        format!("{tech_here}.support[{si}].posterior"),
                        format!("{} outcomes, expected {n}", point.dim()),
                    ));
                }
                support.push((point, pt.weight));
            }
            let mu = Technology::from_parts(support, rt.cost);
            let report = validate_technology(&mu, &prior);
            if !report.passed() {
                let msg = report
                    .violations
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; ");
                return Err(invalid(format!("{tech_here}.support"), msg));
            }
            technologies.push(mu);
        }
        experts.push(Expert::new(re.id, technologies, &prior).map_err(|e| invalid(&here, e))?);
    }

    let reserve = raw.reserve.unwrap_or(0.0);
    if !reserve.is_finite() || reserve < 0.0 {
        return Err(invalid("reserve", format!("{reserve} must be finite and nonnegative")));
    }
    let risk_limits = match raw.risk_limits {
        None => None,
        Some(l) => Some(
            RiskLimits::new(l.phi_p.unwrap_or(f64::INFINITY), l.phi_e.unwrap_or(f64::INFINITY))
                .map_err(|e| invalid("risk_limits", e))?,
        ),
    };
    let samples = raw.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }

    Ok(Scenario { prior, curve, experts, reserve, risk_limits, seed, samples })
}
