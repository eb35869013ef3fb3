//! Hiring a forecasting expert whose research costs are private.
//!
//! The principal publishes a convex preference curve `P_0` over posteriors.
//! Experts bid how far below it they can deliver, a second-price auction
//! picks the winner and her contract shift `β`, and the contract pays by the
//! tangent hyperplane of `P_β` at the reported posterior, which makes
//! truthful reporting optimal. Risk caps restrict which reports and research
//! technologies remain admissible.

pub mod auction;
pub mod cli;
pub mod contracts;
pub mod curves;
pub mod experts;
pub mod maxrisk;
pub mod oracle;
pub mod scenario;
pub mod simplex;
pub mod streams;

pub use auction::{
    check_dominant_strategy, estimate_principal_utility, run_mechanism, run_second_price, AuctionOutcome, Bid,
    Mechanism, MechanismResult, UtilityEstimate,
};
pub use contracts::{expected_payment, payment_vector, tangent_value, Contract, PaymentVector};
pub use curves::{from_action_set, PreferenceCurve, ShiftedCurve};
pub use experts::{expert_value, truthful_bid, Expert, ExpertValue};
pub use maxrisk::{binary_report_bounds, min_beta_reserve, restricted_bid, ReportInterval, RiskLimits};
pub use scenario::{load_scenario, Scenario};
pub use simplex::{make_posterior, simplex_grid, Posterior, Prior, Technology};
