//! Points on the probability simplex, finite research technologies, and
//! lattice enumeration used by the brute-force checks.

use thiserror::Error;

/// Tolerance on `|Σ p − 1|` for a posterior.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Tolerance on `|E_μ ρ − ρ0|` for a mean-preserving technology.
pub const MEAN_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("a distribution needs at least 2 outcomes, got {0}")]
    TooFewOutcomes(usize),
    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entry {index} is not finite")]
    NonFiniteEntry { index: usize },
    #[error("entries sum to {0}, expected 1")]
    SumNotOne(f64),
    #[error("grid step {0} does not divide 1 into a whole number of parts")]
    InvalidStep(f64),
}

/// A distribution over the `n` outcomes of the forecast event.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior(Vec<f64>);

impl Posterior {
    /// Validates without renormalizing.
    pub fn new(values: Vec<f64>) -> Result<Self, SimplexError> {
        if values.len() < 2 {
            return Err(SimplexError::TooFewOutcomes(values.len()));
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(SimplexError::NonFiniteEntry { index });
            }
            if value < 0.0 {
                return Err(SimplexError::NegativeEntry { index, value });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(SimplexError::SumNotOne(sum));
        }
        Ok(Posterior(values))
    }

    /// The degenerate belief that outcome `i` occurs for certain.
    pub fn vertex(n: usize, i: usize) -> Self {
        assert!(n >= 2 && i < n, "vertex {i} out of range for {n} outcomes");
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Posterior(v)
    }

    /// `(p, 1 − p)` for a binary event.
    pub fn binary(p: f64) -> Result<Self, SimplexError> {
        Posterior::new(vec![p, 1.0 - p])
    }

    pub fn uniform(n: usize) -> Result<Self, SimplexError> {
        if n < 2 {
            return Err(SimplexError::TooFewOutcomes(n));
        }
        Ok(Posterior(vec![1.0 / n as f64; n]))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(self.0.len(), v.len());
        self.0.iter().zip(v).map(|(p, x)| p * x).sum()
    }

    /// Largest coordinate-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Posterior) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl AsRef<[f64]> for Posterior {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Validated `[0.5, 0.5]`-style input.
pub fn make_posterior(values: Vec<f64>) -> Result<Posterior, SimplexError> {
    Posterior::new(values)
}

/// The common public belief before any research.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior(Posterior);

impl Prior {
    pub fn new(value: Posterior) -> Self {
        Prior(value)
    }

    pub fn posterior(&self) -> &Posterior {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// A research test: a finite distribution over posteriors plus its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Technology {
    support: Vec<(Posterior, f64)>,
    cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TechnologyViolation {
    EmptySupport,
    NegativeWeight { index: usize, weight: f64 },
    WeightSum(f64),
    DuplicatePosterior { first: usize, second: usize },
    DimensionMismatch { index: usize, expected: usize, found: usize },
    InvalidCost(f64),
    NotMeanPreserving { max_deviation: f64 },
}

impl std::fmt::Display for TechnologyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::EmptySupport => write!(f, "support is empty"),
            Self::NegativeWeight { index, weight } => {
                write!(f, "support[{index}] has negative weight {weight}")
            }
            Self::WeightSum(s) => write!(f, "weights sum to {s}, expected 1"),
            Self::DuplicatePosterior { first, second } => {
                write!(f, "support[{first}] and support[{second}] are the same posterior")
            }
            Self::DimensionMismatch { index, expected, found } => write!(
                f,
                "support[{index}] has {found} outcomes, expected {expected}"
            ),
            Self::InvalidCost(c) => write!(f, "cost {c} must be finite and nonnegative"),
            Self::NotMeanPreserving { max_deviation } => write!(
                f,
                "mean differs from the prior by {max_deviation:e}"
            ),
        }
    }
}

/// Outcome of [`validate_technology`]; collects every violation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TechnologyReport {
    pub violations: Vec<TechnologyViolation>,
}

impl TechnologyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Technology {
    /// Checks every invariant except mean preservation, which needs the prior.
    pub fn new(support: Vec<(Posterior, f64)>, cost: f64) -> Result<Self, Vec<TechnologyViolation>> {
        let tech = Technology { support, cost };
        let violations = tech.structural_violations();
        if violations.is_empty() {
            Ok(tech)
        } else {
            Err(violations)
        }
    }

    /// No validation; pair with [`validate_technology`].
    pub fn from_parts(support: Vec<(Posterior, f64)>, cost: f64) -> Self {
        Technology { support, cost }
    }

    /// μ0: stay at the prior for free.
    pub fn do_nothing(prior: &Prior) -> Self {
        Technology {
            support: vec![(prior.posterior().clone(), 1.0)],
            cost: 0.0,
        }
    }

    pub fn support(&self) -> &[(Posterior, f64)] {
        &self.support
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn is_do_nothing(&self, prior: &Prior) -> bool {
        self.cost == 0.0
            && self.support.len() == 1
            && self.support[0].0.max_abs_diff(prior.posterior()) <= SUM_TOLERANCE
    }

    fn structural_violations(&self) -> Vec<TechnologyViolation> {
        let mut out = Vec::new();
        if self.support.is_empty() {
            out.push(TechnologyViolation::EmptySupport);
            return out;
        }
        let n = self.support[0].0.dim();
        for (index, (p, w)) in self.support.iter().enumerate() {
            if p.dim() != n {
                out.push(TechnologyViolation::DimensionMismatch {
                    index,
                    expected: n,
                    found: p.dim(),
                });
            }
            if *w < 0.0 || !w.is_finite() {
                out.push(TechnologyViolation::NegativeWeight { index, weight: *w });
            }
        }
        let total: f64 = self.support.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            out.push(TechnologyViolation::WeightSum(total));
        }
        for i in 0..self.support.len() {
            for j in i + 1..self.support.len() {
                if self.support[i].0 == self.support[j].0 {
                    out.push(TechnologyViolation::DuplicatePosterior { first: i, second: j });
                }
            }
        }
        if !(self.cost.is_finite() && self.cost >= 0.0) {
            out.push(TechnologyViolation::InvalidCost(self.cost));
        }
        out
    }
}

/// `Σ weight · posterior`, without checking that it matches any prior.
pub fn technology_mean(mu: &Technology) -> Posterior {
    let n = mu.support.first().map_or(0, |(p, _)| p.dim());
    let mut mean = vec![0.0; n];
    for (p, w) in &mu.support {
        for (m, x) in mean.iter_mut().zip(p.probs()) {
            *m += w * x;
        }
    }
    Posterior(mean)
}

pub fn validate_technology(mu: &Technology, prior: &Prior) -> TechnologyReport {
    let mut violations = mu.structural_violations();
    let dims_ok = !mu.support.is_empty() && mu.support.iter().all(|(p, _)| p.dim() == prior.dim());
    if dims_ok {
        let dev = technology_mean(mu).max_abs_diff(prior.posterior());
        if dev > MEAN_TOLERANCE {
            violations.push(TechnologyViolation::NotMeanPreserving { max_deviation: dev });
        }
    } else if !mu.support.is_empty() && !violations
        .iter()
        .any(|v| matches!(v, TechnologyViolation::DimensionMismatch { .. }))
    {
        violations.push(TechnologyViolation::DimensionMismatch {
            index: 0,
            expected: prior.dim(),
            found: mu.support[0].0.dim(),
        });
    }
    TechnologyReport { violations }
}

/// Number of parts `1/step`, if `step` divides 1 evenly.
pub fn grid_parts(step: f64) -> Result<usize, SimplexError> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(SimplexError::InvalidStep(step));
    }
    let k = (1.0 / step).round();
    if (k * step - 1.0).abs() > 1e-9 {
        return Err(SimplexError::InvalidStep(step));
    }
    Ok(k as usize)
}

/// Every posterior whose coordinates are multiples of `step`.
///
/// Points are emitted in lexicographic order of their integer coordinates.
pub fn simplex_grid(n: usize, step: f64) -> Result<Vec<Posterior>, SimplexError> {
    if n < 2 {
        return Err(SimplexError::TooFewOutcomes(n));
    }
    let k = grid_parts(step)?;
    let mut out = Vec::new();
    let mut counts = vec![0usize; n];
    fill(&mut counts, 0, k, k, &mut out);
    Ok(out)
}

fn fill(counts: &mut [usize], pos: usize, remaining: usize, k: usize, out: &mut Vec<Posterior>) {
    let n = counts.len();
    if pos == n - 1 {
        counts[pos] = remaining;
        out.push(Posterior(
            counts.iter().map(|&c| c as f64 / k as f64).collect(),
        ));
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        fill(counts, pos + 1, remaining - c, k, out);
    }
}
