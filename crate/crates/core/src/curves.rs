//! The principal's preference curves `P_β(ρ)`.
//!
//! A base curve `P_0` is normalized to vanish at the prior. Shifting by `β`
//! lowers it uniformly, so every contract in the mechanism is a translate of
//! the same surface and shares its gradients.
//!
//! Curves are defined on the ambient nonnegative orthant, so partial
//! derivatives are ambient partials. Evaluating the tangent hyperplane at the
//! simplex vertices is what turns a curve into outcome payments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::simplex::{Posterior, Prior};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("an action set needs at least one action")]
    EmptyActionSet,
    #[error("action {index} has {found} payoffs, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("action {index} has a non-finite payoff")]
    NonFinitePayoff { index: usize },
}

/// Payoff vectors for the decisions the principal can take after learning `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    actions: Vec<Vec<f64>>,
    normalizer: f64,
}

impl ActionSet {
    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    /// `max_a ⟨ρ0, a⟩`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Index of the maximizing action; lowest index wins ties.
    fn best_action(&self, rho: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, a) in self.actions.iter().enumerate() {
            let v = dot(rho, a);
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreferenceCurve {
    /// `Σ ρ_i² − Σ ρ0_i²`.
    Quadratic { prior: Prior },
    /// `max_a ⟨ρ, a⟩ − max_a ⟨ρ0, a⟩`.
    ActionSet(ActionSet),
    /// `−‖ρ − ρ0‖²`. Deliberately concave; exists so the convexity and
    /// properness audits have something to reject.
    ConcaveProbe { prior: Prior },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

impl PreferenceCurve {
    pub fn quadratic(prior: Prior) -> Self {
        PreferenceCurve::Quadratic { prior }
    }

    pub fn dim(&self) -> usize {
        match self {
            PreferenceCurve::Quadratic { prior } | PreferenceCurve::ConcaveProbe { prior } => {
                prior.dim()
            }
            PreferenceCurve::ActionSet(set) => set.actions[0].len(),
        }
    }

    /// True for families with a unique gradient everywhere on the simplex.
    pub fn is_differentiable(&self) -> bool {
        !matches!(self, PreferenceCurve::ActionSet(_))
    }

    /// `P_0` at an arbitrary ambient point (not necessarily on the simplex).
    pub fn eval_ambient(&self, rho: &[f64]) -> f64 {
        match self {
            PreferenceCurve::Quadratic { prior } => norm_sq(rho) - norm_sq(prior.posterior().probs()),
            PreferenceCurve::ActionSet(set) => set.best_action(rho).1 - set.normalizer,
            PreferenceCurve::ConcaveProbe { prior } => {
                let p0 = prior.posterior().probs();
                -rho.iter().zip(p0).map(|(r, q)| (r - q) * (r - q)).sum::<f64>()
            }
        }
    }

    /// Ambient gradient of `P_0`; for action sets, the maximizing payoff vector.
    pub fn gradient_ambient(&self, rho: &[f64]) -> Vec<f64> {
        match self {
            PreferenceCurve::Quadratic { .. } => rho.iter().map(|r| 2.0 * r).collect(),
            PreferenceCurve::ActionSet(set) => set.actions[set.best_action(rho).0].clone(),
            PreferenceCurve::ConcaveProbe { prior } => rho
                .iter()
                .zip(prior.posterior().probs())
                .map(|(r, q)| -2.0 * (r - q))
                .collect(),
        }
    }

    pub fn eval(&self, rho: &Posterior) -> f64 {
        self.eval_ambient(rho.probs())
    }

    pub fn gradient(&self, rho: &Posterior) -> Vec<f64> {
        self.gradient_ambient(rho.probs())
    }

    pub fn shifted(&self, beta: f64) -> ShiftedCurve<'_> {
        ShiftedCurve { base: self, beta }
    }
}

/// `P_β = P_0 − β`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedCurve<'a> {
    base: &'a PreferenceCurve,
    beta: f64,
}

impl<'a> ShiftedCurve<'a> {
    pub fn new(base: &'a PreferenceCurve, beta: f64) -> Self {
        ShiftedCurve { base, beta }
    }

    pub fn base(&self) -> &'a PreferenceCurve {
        self.base
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn eval(&self, rho: &Posterior) -> f64 {
        self.base.eval(rho) - self.beta
    }

    pub fn eval_ambient(&self, rho: &[f64]) -> f64 {
        self.base.eval_ambient(rho) - self.beta
    }

    /// Independent of `β`.
    pub fn gradient(&self, rho: &Posterior) -> Vec<f64> {
        self.base.gradient(rho)
    }
}

pub fn from_action_set(actions: Vec<Vec<f64>>, prior: &Prior) -> Result<PreferenceCurve, CurveError> {
    if actions.is_empty() {
        return Err(CurveError::EmptyActionSet);
    }
    let n = prior.dim();
    for (index, a) in actions.iter().enumerate() {
        if a.len() != n {
            return Err(CurveError::DimensionMismatch { index, expected: n, found: a.len() });
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(CurveError::NonFinitePayoff { index });
        }
    }
    let mut set = ActionSet { actions, normalizer: 0.0 };
    set.normalizer = set.best_action(prior.posterior().probs()).1;
    Ok(PreferenceCurve::ActionSet(set))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityAudit {
    pub samples: usize,
    /// `max of P(tρ′+(1−t)ρ″) − [tP(ρ′)+(1−t)P(ρ″)]`; negative means slack.
    pub worst_violation: f64,
    pub witness: Option<(Posterior, Posterior, f64)>,
    pub tolerance: f64,
}

impl ConvexityAudit {
    pub fn passed(&self) -> bool {
        self.worst_violation <= self.tolerance
    }
}

pub const CONVEXITY_TOLERANCE: f64 = 1e-9;

/// Uniform draw from the simplex (flat Dirichlet).
pub(crate) fn random_posterior<R: Rng>(n: usize, rng: &mut R) -> Posterior {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    let mut probs: Vec<f64> = draws.iter().map(|x| x / total).collect();
    // absorb rounding so the sum check never trips
    let drift: f64 = 1.0 - probs.iter().sum::<f64>();
    probs[n - 1] = (probs[n - 1] + drift).max(0.0);
    Posterior::new(probs).expect("normalized exponential draws lie on the simplex")
}

pub fn check_convexity(curve: &PreferenceCurve, samples: usize, seed: u64) -> ConvexityAudit {
    assert!(samples >= 1, "convexity audit needs at least one sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = curve.dim();
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        let a = random_posterior(n, &mut rng);
        let b = random_posterior(n, &mut rng);
        let t: f64 = rng.random();
        let mix: Vec<f64> = a
            .probs()
            .iter()
            .zip(b.probs())
            .map(|(x, y)| t * x + (1.0 - t) * y)
            .collect();
        let chord = t * curve.eval(&a) + (1.0 - t) * curve.eval(&b);
        let violation = curve.eval_ambient(&mix) - chord;
        if violation > worst {
            worst = violation;
            witness = Some((a, b, t));
        }
    }
    ConvexityAudit {
        samples,
        worst_violation: worst,
        witness,
        tolerance: CONVEXITY_TOLERANCE,
    }
}
