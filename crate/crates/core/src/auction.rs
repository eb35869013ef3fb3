//! Second-price auction over contract shifts, and the end-to-end mechanism.
//!
//! Experts bid the `β` they can afford. The highest bidder wins the contract
//! for `P_β` with `β` set by the second-highest bid (or the reserve, which
//! acts as a virtual bid). The winner then runs her best technology, reports
//! the realized posterior, and is paid for the observed outcome.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::contracts::{payment_vector, Contract};
use crate::experts::{best_among, expert_value, realize_posterior, ExpertValue};
use crate::maxrisk::{beta_grid, restricted_bid, restricted_technologies, MaxRiskError, DEFAULT_BETA_STEP};
use crate::scenario::Scenario;
use crate::simplex::Posterior;
use crate::streams::RunStreams;

/// Two-sided 99% standard normal quantile.
const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuctionError {
    #[error("scenario has no experts")]
    NoExperts,
    #[error("expert index {0} out of range")]
    UnknownExpert(usize),
    #[error("bid grid is empty")]
    EmptyGrid,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("restricted bid for expert {expert}: {source}")]
    RestrictedBid { expert: String, source: MaxRiskError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bid {
    pub expert: String,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriceSetter {
    /// Index into the bid list.
    Bid(usize),
    Reserve,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuctionOutcome {
    NoSale,
    Sale {
        /// Index into the bid list.
        winner: usize,
        winner_id: String,
        contract_beta: f64,
        price_setter: PriceSetter,
    },
}

impl AuctionOutcome {
    pub fn contract_beta(&self) -> Option<f64> {
        match self {
            AuctionOutcome::NoSale => None,
            AuctionOutcome::Sale { contract_beta, .. } => Some(*contract_beta),
        }
    }

    pub fn winner(&self) -> Option<usize> {
        match self {
            AuctionOutcome::NoSale => None,
            AuctionOutcome::Sale { winner, .. } => Some(*winner),
        }
    }
}

/// Highest bid strictly above the reserve wins; ties among top bids are
/// broken uniformly with `rng`. A top bid equal to the reserve is no sale.
pub fn run_second_price<R: Rng + ?Sized>(bids: &[Bid], reserve: f64, rng: &mut R) -> AuctionOutcome {
    debug_assert!(bids.iter().all(|b| b.amount.is_finite()));
    let top = bids.iter().map(|b| b.amount).fold(f64::NEG_INFINITY, f64::max);
    if bids.is_empty() || top <= reserve {
        return AuctionOutcome::NoSale;
    }
    let leaders: Vec<usize> = (0..bids.len()).filter(|&i| bids[i].amount == top).collect();
    let winner = if leaders.len() == 1 {
        leaders[0]
    } else {
        leaders[rng.random_range(0..leaders.len())]
    };

    let runner_up = (0..bids.len())
        .filter(|&i| i != winner)
        .max_by(|&a, &b| bids[a].amount.total_cmp(&bids[b].amount).then(b.cmp(&a)));
    let (contract_beta, price_setter) = match runner_up {
        Some(j) if bids[j].amount >= reserve => (bids[j].amount, PriceSetter::Bid(j)),
        _ => (reserve, PriceSetter::Reserve),
    };
    AuctionOutcome::Sale {
        winner,
        winner_id: bids[winner].expert.clone(),
        contract_beta,
        price_setter,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismResult {
    pub outcome: AuctionOutcome,
    pub technology: Option<usize>,
    pub report: Option<Posterior>,
    /// Index of the realized outcome of the event.
    pub event: Option<usize>,
    pub payment: f64,
    /// `P_0(report) − payment`; zero when nothing is sold.
    pub principal_utility: f64,
    /// `payment − C(μ)`; zero when nothing is sold.
    pub expert_profit: f64,
}

/// Bids and values computed once per scenario; runs are then cheap.
#[derive(Debug, Clone)]
pub struct Mechanism<'s> {
    scenario: &'s Scenario,
    values: Vec<ExpertValue>,
    bids: Vec<Bid>,
}

impl<'s> Mechanism<'s> {
    /// Truthful bids: `U_i`, or the break-even restricted bid when the
    /// scenario carries risk limits.
    pub fn new(scenario: &'s Scenario) -> Result<Self, AuctionError> {
        if scenario.experts.is_empty() {
            return Err(AuctionError::NoExperts);
        }
        let values: Vec<ExpertValue> = scenario
            .experts
            .iter()
            .map(|e| expert_value(e, &scenario.curve))
            .collect();
        let mut bids = Vec::with_capacity(values.len());
        for (expert, value) in scenario.experts.iter().zip(&values) {
            let amount = match scenario.risk_limits {
                None => value.u,
                Some(limits) => {
                    let grid = beta_grid(value.u, DEFAULT_BETA_STEP);
                    restricted_bid(expert, &scenario.curve, limits, &grid)
                        .map_err(|source| AuctionError::RestrictedBid {
                            expert: expert.id().to_string(),
                            source,
                        })?
                        .beta_prime
                }
            };
            bids.push(Bid { expert: expert.id().to_string(), amount });
        }
        Ok(Mechanism { scenario, values, bids })
    }

    pub fn scenario(&self) -> &'s Scenario {
        self.scenario
    }

    pub fn values(&self) -> &[ExpertValue] {
        &self.values
    }

    pub fn bids(&self) -> &[Bid] {
        &self.bids
    }

    /// Technology the winner runs under a contract at `beta`: the best one
    /// under `P_0`, restricted to `M(β)` when risk limits apply.
    pub fn winner_technology(&self, expert: usize, beta: f64) -> usize {
        match self.scenario.risk_limits {
            None => self.values[expert].best,
            Some(limits) => {
                let e = &self.scenario.experts[expert];
                let allowed = restricted_technologies(e, &self.scenario.curve, beta, limits);
                // the contract cannot be declined, so fall back to the unrestricted choice
                best_among(e, &self.scenario.curve, allowed).map_or(self.values[expert].best, |v| v.best)
            }
        }
    }

    /// Expected principal utility with truthful bids: the clearing `β`.
    pub fn predicted_principal_utility(&self) -> f64 {
        let mut amounts: Vec<f64> = self.bids.iter().map(|b| b.amount).collect();
        amounts.sort_by(|a, b| b.total_cmp(a));
        if amounts[0] <= self.scenario.reserve {
            0.0
        } else {
            amounts.get(1).copied().unwrap_or(f64::NEG_INFINITY).max(self.scenario.reserve)
        }
    }

    pub fn run(&self, streams: &mut RunStreams) -> MechanismResult {
        let outcome = run_second_price(&self.bids, self.scenario.reserve, &mut streams.ties);
        let (winner, beta) = match &outcome {
            AuctionOutcome::NoSale => {
                return MechanismResult {
                    outcome,
                    technology: None,
                    report: None,
                    event: None,
                    payment: 0.0,
                    principal_utility: 0.0,
                    expert_profit: 0.0,
                }
            }
            AuctionOutcome::Sale { winner, contract_beta, .. } => (*winner, *contract_beta),
        };
        let expert = &self.scenario.experts[winner];
        let technology = self.winner_technology(winner, beta);
        let report = realize_posterior(expert, technology, &mut streams.posterior)
            .expect("winner technology index is in range");
        let event = draw_event(&report, &mut streams.outcome);
        let curve = &self.scenario.curve;
        let payment = payment_vector(&Contract::new(curve.shifted(beta)), &report).payment(event);
        let cost = expert.technologies()[technology].cost();
        MechanismResult {
            outcome,
            technology: Some(technology),
            principal_utility: curve.eval(&report) - payment,
            expert_profit: payment - cost,
            report: Some(report),
            event: Some(event),
            payment,
        }
    }

    /// Exact expected profit of `target` when the full bid profile is `bids`.
    pub fn expected_profit(&self, target: usize, bids: &[f64]) -> f64 {
        let own = bids[target];
        let top = bids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if own < top || own <= self.scenario.reserve {
            return 0.0;
        }
        let ties = bids.iter().filter(|&&b| b == top).count();
        let price = if ties > 1 {
            top
        } else {
            bids.iter()
                .enumerate()
                .filter(|&(i, _)| i != target)
                .map(|(_, &b)| b)
                .fold(self.scenario.reserve, f64::max)
        };
        self.contract_profit(target, price) / ties as f64
    }

    /// `Σ_ρ μ(ρ) ⟨ρ, pay_β(ρ)⟩ − C(μ)` for the technology the expert would run.
    pub fn contract_profit(&self, expert: usize, beta: f64) -> f64 {
        let technology = self.winner_technology(expert, beta);
        let mu = &self.scenario.experts[expert].technologies()[technology];
        let contract = Contract::new(self.scenario.curve.shifted(beta));
        let expected: f64 = mu
            .support()
            .iter()
            .map(|(rho, w)| w * rho.dot(&payment_vector(&contract, rho).payments))
            .sum();
        expected - mu.cost()
    }
}

fn draw_event<R: Rng + ?Sized>(report: &Posterior, rng: &mut R) -> usize {
    let probs = report.probs();
    if let Some(i) = probs.iter().position(|&p| p == 1.0) {
        return i;
    }
    WeightedIndex::new(probs.iter().copied())
        .expect("posterior has positive mass")
        .sample(rng)
}

pub fn run_mechanism(scenario: &Scenario, streams: &mut RunStreams) -> Result<MechanismResult, AuctionError> {
    Ok(Mechanism::new(scenario)?.run(streams))
}

/// Independent runs `0..samples`, each with its own streams, in run order.
pub fn simulate(scenario: &Scenario, samples: usize, seed: u64) -> Result<Vec<MechanismResult>, AuctionError> {
    let mechanism = Mechanism::new(scenario)?;
    Ok((0..samples as u64)
        .into_par_iter()
        .map(|run| mechanism.run(&mut RunStreams::new(seed, run)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityEstimate {
    pub mean: f64,
    /// Half-width of the normal-approximation 99% confidence interval.
    pub half_width: f64,
    pub std_dev: f64,
    pub samples: usize,
}

impl UtilityEstimate {
    pub fn covers(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.half_width
    }
}

/// Neumaier-compensated sum; deterministic for a fixed input order.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn summarize(samples: &[f64]) -> UtilityEstimate {
    let n = samples.len();
    let mean = compensated_sum(samples.iter().copied()) / n as f64;
    let (std_dev, half_width) = if n > 1 {
        let var = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
        let sd = var.sqrt();
        (sd, Z_99 * sd / (n as f64).sqrt())
    } else {
        (0.0, f64::INFINITY)
    };
    UtilityEstimate { mean, half_width, std_dev, samples: n }
}

pub fn estimate_principal_utility(scenario: &Scenario, samples: usize, seed: u64) -> Result<UtilityEstimate, AuctionError> {
    if samples == 0 {
        return Err(AuctionError::NoSamples);
    }
    let utilities: Vec<f64> = simulate(scenario, samples, seed)?
        .into_iter()
        .map(|r| r.principal_utility)
        .collect();
    Ok(summarize(&utilities))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    /// Largest `profit(deviation) − profit(truthful)` over all profiles.
    pub max_gain: f64,
    /// `(opponent bids, deviating bid)` attaining `max_gain`.
    pub witness: Option<(Vec<f64>, f64)>,
    pub profiles: usize,
}

/// Enumerates every opponent profile drawn from `grid` and every deviation in
/// `grid`, comparing exact expected profits against the truthful bid.
pub fn check_dominant_strategy(
    scenario: &Scenario,
    target: usize,
    grid: &[f64],
) -> Result<DominanceReport, AuctionError> {
    if grid.is_empty() {
        return Err(AuctionError::EmptyGrid);
    }
    if target >= scenario.experts.len() {
        return Err(AuctionError::UnknownExpert(target));
    }
    let mechanism = Mechanism::new(scenario)?;
    let truthful = mechanism.bids()[target].amount;
    let k = scenario.experts.len();

    let mut report = DominanceReport { max_gain: f64::NEG_INFINITY, witness: None, profiles: 0 };
    let mut digits = vec![0usize; k - 1];
    loop {
        let mut profile = vec![0.0; k];
        let mut others = Vec::with_capacity(k - 1);
        for (slot, j) in (0..k).filter(|&j| j != target).enumerate() {
            profile[j] = grid[digits[slot]];
            others.push(profile[j]);
        }
        profile[target] = truthful;
        let honest = mechanism.expected_profit(target, &profile);
        for &deviation in grid {
            profile[target] = deviation;
            let gain = mechanism.expected_profit(target, &profile) - honest;
            if gain > report.max_gain {
                report.max_gain = gain;
                report.witness = Some((others.clone(), deviation));
            }
        }
        report.profiles += 1;

        // odometer over grid^(k-1)
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return Ok(report);
            }
            digits[pos] += 1;
            if digits[pos] < grid.len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}
