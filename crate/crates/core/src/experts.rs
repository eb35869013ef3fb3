//! Experts, their research technologies, and the value `U_i` each can deliver.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use thiserror::Error;

use crate::curves::PreferenceCurve;
use crate::simplex::{validate_technology, Posterior, Prior, Technology, TechnologyViolation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpertError {
    #[error("technology index {index} out of range ({count} technologies)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("technology {index} is invalid: {violations:?}")]
    InvalidTechnology { index: usize, violations: Vec<TechnologyViolation> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expert {
    id: String,
    technologies: Vec<Technology>,
}

impl Expert {
    /// Validates every technology against `prior` and inserts the free
    /// do-nothing test at index 0 when it is missing.
    pub fn new(id: impl Into<String>, technologies: Vec<Technology>, prior: &Prior) -> Result<Self, ExpertError> {
        for (index, mu) in technologies.iter().enumerate() {
            let report = validate_technology(mu, prior);
            if !report.passed() {
                return Err(ExpertError::InvalidTechnology { index, violations: report.violations });
            }
        }
        let mut technologies = technologies;
        if !technologies.iter().any(|mu| mu.is_do_nothing(prior)) {
            technologies.insert(0, Technology::do_nothing(prior));
        }
        Ok(Expert { id: id.into(), technologies })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn technologies(&self) -> &[Technology] {
        &self.technologies
    }

    pub fn technology(&self, index: usize) -> Result<&Technology, ExpertError> {
        self.technologies.get(index).ok_or(ExpertError::IndexOutOfRange {
            index,
            count: self.technologies.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertValue {
    /// `U_i = max_μ [E_μ P_0(ρ) − C(μ)]`.
    pub u: f64,
    /// Index of the maximizing technology.
    pub best: usize,
}

/// `E_μ P_0(ρ) − C(μ)`.
pub fn technology_value(curve: &PreferenceCurve, mu: &Technology) -> f64 {
    let expected: f64 = mu.support().iter().map(|(rho, w)| w * curve.eval(rho)).sum();
    expected - mu.cost()
}

/// Best technology among `candidates`; lowest index wins ties.
pub fn best_among(
    expert: &Expert,
    curve: &PreferenceCurve,
    candidates: impl IntoIterator<Item = usize>,
) -> Option<ExpertValue> {
    let mut best: Option<ExpertValue> = None;
    for i in candidates {
        let u = technology_value(curve, &expert.technologies[i]);
        if best.is_none_or(|b| u > b.u) {
            best = Some(ExpertValue { u, best: i });
        }
    }
    best
}

pub fn expert_value(expert: &Expert, curve: &PreferenceCurve) -> ExpertValue {
    best_among(expert, curve, 0..expert.technologies.len())
        .expect("an expert always has at least the do-nothing technology")
}

/// The highest `β` at which the expert still breaks even, i.e. `U_i`.
pub fn truthful_bid(expert: &Expert, curve: &PreferenceCurve) -> f64 {
    expert_value(expert, curve).u
}

/// Samples `ρ ∼ μ` for the chosen technology.
pub fn realize_posterior<R: Rng + ?Sized>(
    expert: &Expert,
    technology: usize,
    rng: &mut R,
) -> Result<Posterior, ExpertError> {
    let mu = expert.technology(technology)?;
    let support = mu.support();
    if support.len() == 1 {
        return Ok(support[0].0.clone());
    }
    let dist = WeightedIndex::new(support.iter().map(|(_, w)| *w))
        .expect("validated technology weights are nonnegative and sum to one");
    Ok(support[dist.sample(rng)].0.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(v: &[f64]) -> Posterior {
        Posterior::new(v.to_vec()).unwrap()
    }

    fn prior() -> Prior {
        Prior::new(p(&[0.5, 0.5]))
    }

    fn mu1() -> Technology {
        Technology::new(vec![(p(&[0.9, 0.1]), 0.5), (p(&[0.1, 0.9]), 0.5)], 0.2).unwrap()
    }

    fn mu2() -> Technology {
        Technology::new(vec![(p(&[0.8, 0.2]), 0.5), (p(&[0.2, 0.8]), 0.5)], 0.05).unwrap()
    }

    #[test]
    fn technology_value_examples() {
        let q = PreferenceCurve::quadratic(prior());
        assert_eq!(technology_value(&q, &Technology::do_nothing(&prior())), 0.0);
        assert!((technology_value(&q, &mu1()) - 0.12).abs() < 1e-12);
        assert!((technology_value(&q, &mu2()) - 0.13).abs() < 1e-12);
    }

    #[test]
    fn expert_value_examples() {
        let q = PreferenceCurve::quadratic(prior());
        let a = Expert::new("A", vec![mu1()], &prior()).unwrap();
        assert_eq!(a.technologies().len(), 2);
        let va = expert_value(&a, &q);
        assert!((va.u - 0.12).abs() < 1e-12);
        assert_eq!(va.best, 1);

        let idle = Expert::new("idle", vec![], &prior()).unwrap();
        assert_eq!(expert_value(&idle, &q), ExpertValue { u: 0.0, best: 0 });
        assert_eq!(truthful_bid(&idle, &q), 0.0);

        let b = Expert::new("B", vec![mu2()], &prior()).unwrap();
        let vb = expert_value(&b, &q);
        assert!((vb.u - 0.13).abs() < 1e-12);
        assert_eq!(vb.best, 1);
        assert_eq!(truthful_bid(&b, &q), vb.u);
        assert_eq!(truthful_bid(&a, &q), va.u);
    }

    #[test]
    fn do_nothing_is_not_duplicated() {
        let a = Expert::new("A", vec![mu1(), Technology::do_nothing(&prior())], &prior()).unwrap();
        assert_eq!(a.technologies().len(), 2);
    }

    #[test]
    fn rejects_biased_technology() {
        let biased = Technology::from_parts(vec![(p(&[0.9, 0.1]), 1.0)], 0.0);
        assert!(matches!(
            Expert::new("X", vec![mu1(), biased], &prior()),
            Err(ExpertError::InvalidTechnology { index: 1, .. })
        ));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let q = PreferenceCurve::quadratic(prior());
        // both worth 0.12
        let twin = Technology::new(vec![(p(&[0.1, 0.9]), 0.5), (p(&[0.9, 0.1]), 0.5)], 0.2).unwrap();
        let e = Expert::new("T", vec![mu1(), twin], &prior()).unwrap();
        assert_eq!(expert_value(&e, &q).best, 1);
    }

    #[test]
    fn realize_posterior_examples() {
        let a = Expert::new("A", vec![mu1()], &prior()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            assert_eq!(realize_posterior(&a, 0, &mut rng).unwrap(), p(&[0.5, 0.5]));
        }

        let draws = 100_000;
        let high = (0..draws)
            .filter(|_| realize_posterior(&a, 1, &mut rng).unwrap().probs()[0] == 0.9)
            .count();
        let freq = high as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.01, "frequency {freq}");

        assert_eq!(
            realize_posterior(&a, 7, &mut rng),
            Err(ExpertError::IndexOutOfRange { index: 7, count: 2 })
        );
    }

    #[test]
    fn realize_posterior_is_deterministic() {
        let a = Expert::new("A", vec![mu1()], &prior()).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| realize_posterior(&a, 1, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
    }
}
