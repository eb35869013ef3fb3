//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification suite failed, 2 usage or
//! validation error.

mod plot;
mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::auction::{simulate, summarize, AuctionError, AuctionOutcome, Mechanism, PriceSetter};
use crate::contracts::{expected_payment, payment_vector, Contract};
use crate::maxrisk::{
    beta_grid, binary_report_bounds, min_beta_reserve, restricted_bid_with, BidObjective, MaxRiskError,
    ReportInterval, RiskLimits, DEFAULT_BETA_STEP,
};
use crate::scenario::{load_scenario, Scenario, ScenarioError};
use crate::simplex::{Posterior, SimplexError};

pub use verify::Suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error(transparent)]
    MaxRisk(#[from] MaxRiskError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Contract(#[from] crate::contracts::ContractError),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error("{0}")]
    Usage(String),
    #[error("scalar sweeps need a binary event, scenario has {0} outcomes")]
    UnsupportedForN(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(name = "expert-auction", version, about = "Truthful contracts and auctions for hiring a forecasting expert")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the mechanism and compare principal utility with its prediction.
    Auction {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo runs (overrides the scenario).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        samples: Option<u64>,
        /// Per-run CSV records.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the brute-force verification suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Restrict to the named suites (repeatable).
        #[arg(long = "suite", value_enum)]
        suites: Vec<Suite>,
        /// Simplex grid spacing for properness and identity checks.
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Emit plot data as CSV.
    Plot {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        what: PlotKind,
        #[arg(long)]
        out: PathBuf,
        /// Shifts to plot for `curves`.
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2")]
        betas: Vec<f64>,
        /// Contract shift for `payments` and `maxrisk`.
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Probability of outcome 1 reported, for `payments`.
        #[arg(long)]
        report: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Admissible report range and restricted bids under risk caps.
    Maxrisk {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[command(flatten)]
        limits: LimitArgs,
        /// β spacing for the sweep written by --out.
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
        /// Largest β in the sweep.
        #[arg(long, default_value_t = 1.0)]
        beta_max: f64,
        /// CSV sweep of (beta, rho_min, rho_max).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the payment vector for a report.
    Contract {
        #[command(flatten)]
        common: Common,
        /// Comma-separated posterior, e.g. 0.9,0.1.
        #[arg(long, value_delimiter = ',', required = true)]
        report: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
    },
}

#[derive(Debug, Args)]
struct LimitArgs {
    /// Principal's cap (default: scenario value, else none).
    #[arg(long)]
    phi_p: Option<f64>,
    /// Expert's cap (default: scenario value, else none).
    #[arg(long)]
    phi_e: Option<f64>,
}

impl LimitArgs {
    fn resolve(&self, scenario: &Scenario) -> Result<RiskLimits, CliError> {
        let base = scenario.risk_limits.unwrap_or_else(RiskLimits::unlimited);
        Ok(RiskLimits::new(
            self.phi_p.unwrap_or(base.phi_p()),
            self.phi_e.unwrap_or(base.phi_e()),
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Curves,
    Payments,
    Maxrisk,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Reports go to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn load(common: &Common) -> Result<Scenario, CliError> {
    let mut scenario = load_scenario(&common.scenario)?;
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Auction { common, samples, out: csv_path } => {
            let mut scenario = load(&common)?;
            if let Some(n) = samples {
                scenario.samples = n as usize;
            }
            cmd_auction(&scenario, csv_path.as_deref(), out)
        }
        Command::Verify { common, suites, grid_step } => {
            let scenario = load(&common)?;
            verify::cmd_verify(&scenario, &suites, grid_step, out)
        }
        Command::Plot { common, what, out: path, betas, beta, report, grid_step, limits } => {
            let scenario = load(&common)?;
            let limits = limits.resolve(&scenario)?;
            let request = plot::PlotRequest { what, betas, beta, report, step: grid_step, limits };
            plot::cmd_plot(&scenario, &request, &path)?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(EXIT_OK)
        }
        Command::Maxrisk { common, beta, limits, grid_step, beta_max, out: path } => {
            let scenario = load(&common)?;
            let limits = limits.resolve(&scenario)?;
            cmd_maxrisk(&scenario, beta, limits, grid_step, beta_max, path.as_deref(), out)
        }
        Command::Contract { common, report, beta } => {
            let scenario = load(&common)?;
            cmd_contract(&scenario, report, beta, out)
        }
    }
}

pub(crate) fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn cmd_auction(scenario: &Scenario, csv_path: Option<&Path>, out: &mut dyn Write) -> Result<i32, CliError> {
    let mechanism = Mechanism::new(scenario)?;
    writeln!(
        out,
        "scenario: {} outcomes, {} experts, reserve {}, seed {}, {} samples",
        scenario.outcomes(),
        scenario.experts.len(),
        scenario.reserve,
        scenario.seed,
        scenario.samples
    )?;
    for ((expert, value), bid) in scenario.experts.iter().zip(mechanism.values()).zip(mechanism.bids()) {
        writeln!(
            out,
            "expert {}: U = {:.6}, bid = {:.6}, best technology #{}",
            expert.id(),
            value.u,
            bid.amount,
            value.best
        )?;
    }

    let runs = simulate(scenario, scenario.samples, scenario.seed)?;
    match &runs[0].outcome {
        AuctionOutcome::NoSale => writeln!(out, "outcome: NoSale")?,
        AuctionOutcome::Sale { winner_id, contract_beta, price_setter, .. } => {
            let setter = match price_setter {
                PriceSetter::Bid(j) => format!("bid of {}", mechanism.bids()[*j].expert),
                PriceSetter::Reserve => "reserve".to_string(),
            };
            writeln!(out, "outcome: winner {winner_id}, contract beta {contract_beta:.6} (set by {setter})")?;
        }
    }
    let predicted = mechanism.predicted_principal_utility();
    let utilities: Vec<f64> = runs.iter().map(|r| r.principal_utility).collect();
    let estimate = summarize(&utilities);
    writeln!(out, "predicted principal utility: {predicted:.6}")?;
    writeln!(
        out,
        "empirical principal utility: {:.6} ± {:.6} (99% CI, {} runs)",
        estimate.mean, estimate.half_width, estimate.samples
    )?;
    writeln!(
        out,
        "interval covers prediction: {}",
        if estimate.covers(predicted) { "yes" } else { "no" }
    )?;

    if let Some(path) = csv_path {
        write_runs_csv(scenario, &runs, path)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(EXIT_OK)
}

fn write_runs_csv(scenario: &Scenario, runs: &[crate::auction::MechanismResult], path: &Path) -> Result<(), CliError> {
    let n = scenario.outcomes();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["run", "winner", "contract_beta", "technology"].map(String::from).to_vec();
    header.extend((0..n).map(|i| format!("report_{i}")));
    header.extend(["event", "payment", "principal_utility", "expert_profit"].map(String::from));
    w.write_record(&header)?;
    for (i, r) in runs.iter().enumerate() {
        let mut row = vec![i.to_string()];
        match &r.outcome {
            AuctionOutcome::NoSale => row.extend(["NoSale".to_string(), String::new()]),
            AuctionOutcome::Sale { winner_id, contract_beta, .. } => {
                row.extend([winner_id.clone(), fmt_num(*contract_beta)])
            }
        }
        row.push(r.technology.map(|t| t.to_string()).unwrap_or_default());
        match &r.report {
            Some(rep) => row.extend(rep.probs().iter().map(|&x| fmt_num(x))),
            None => row.extend(std::iter::repeat_n(String::new(), n)),
        }
        row.push(r.event.map(|e| e.to_string()).unwrap_or_default());
        row.extend([r.payment, r.principal_utility, r.expert_profit].map(fmt_num));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn describe_interval(interval: ReportInterval) -> String {
    match interval {
        ReportInterval::Empty => "empty".to_string(),
        ReportInterval::Range { min, max } => format!("[{min:.8}, {max:.8}]"),
    }
}

fn cmd_maxrisk(
    scenario: &Scenario,
    beta: f64,
    limits: RiskLimits,
    step: f64,
    beta_max: f64,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    writeln!(out, "limits: phi_p = {}, phi_e = {}", limits.phi_p(), limits.phi_e())?;
    if scenario.outcomes() == 2 {
        let interval = binary_report_bounds(&scenario.curve, beta, limits)?;
        writeln!(out, "admissible reports at beta {beta}: {}", describe_interval(interval))?;
    } else {
        writeln!(out, "admissible report interval: not defined for {} outcomes", scenario.outcomes())?;
    }
    if limits.phi_p().is_finite() {
        writeln!(out, "vertex reserve: {:.8}", min_beta_reserve(&scenario.curve, limits.phi_p()))?;
    }
    for expert in &scenario.experts {
        let upper = crate::experts::expert_value(expert, &scenario.curve).u;
        let grid = beta_grid(upper, DEFAULT_BETA_STEP);
        let even = restricted_bid_with(expert, &scenario.curve, limits, &grid, BidObjective::BreakEven);
        let literal = restricted_bid_with(expert, &scenario.curve, limits, &grid, BidObjective::LiteralArgmax);
        match (even, literal) {
            (Ok(e), Ok(l)) => writeln!(
                out,
                "expert {}: restricted bid {:.8} (technology #{}), literal argmax {:.8}",
                expert.id(),
                e.beta_prime,
                e.technology,
                l.beta_prime
            )?,
            (Err(e), _) | (_, Err(e)) => writeln!(out, "expert {}: {e}", expert.id())?,
        }
    }

    if let Some(path) = path {
        if scenario.outcomes() != 2 {
            return Err(CliError::UnsupportedForN(scenario.outcomes()));
        }
        if step.is_nan() || step <= 0.0 {
            return Err(CliError::Usage("--grid-step must be positive".into()));
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["beta", "rho_min", "rho_max"])?;
        for beta in beta_grid(beta_max, step).into_iter().filter(|b| *b <= beta_max + 1e-12) {
            let interval = binary_report_bounds(&scenario.curve, beta, limits)?;
            let (lo, hi) = interval
                .bounds()
                .map(|(a, b)| (fmt_num(a), fmt_num(b)))
                .unwrap_or_default();
            w.write_record([fmt_num(beta), lo, hi])?;
        }
        w.flush()?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(EXIT_OK)
}

fn cmd_contract(scenario: &Scenario, report: Vec<f64>, beta: f64, out: &mut dyn Write) -> Result<i32, CliError> {
    let report = Posterior::new(report)?;
    if report.dim() != scenario.outcomes() {
        return Err(CliError::Usage(format!(
            "report has {} outcomes, scenario has {}",
            report.dim(),
            scenario.outcomes()
        )));
    }
    let contract = Contract::new(scenario.curve.shifted(beta));
    let pv = payment_vector(&contract, &report);
    writeln!(out, "beta: {beta}")?;
    for (i, p) in pv.payments.iter().enumerate() {
        writeln!(out, "payment[{i}]: {}", fmt_num(*p))?;
    }
    writeln!(out, "expected payment at report: {}", fmt_num(expected_payment(&pv, &report)))?;
    Ok(EXIT_OK)
}
