//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use expert_auction::auction::{check_dominant_strategy, estimate_principal_utility, simulate};
use expert_auction::contracts::{
    check_properness, expected_payment_raw, payment_vector, verify_uniqueness, Contract, Uniqueness,
};
use expert_auction::curves::{check_convexity, from_action_set, PreferenceCurve};
use expert_auction::maxrisk::{binary_report_bounds, min_beta_reserve, ReportInterval, RiskLimits};
use expert_auction::oracle::{brute_force_best_report, brute_force_report_bounds};
use expert_auction::scenario::{load_scenario, Scenario};
use expert_auction::simplex::{simplex_grid, Posterior, Prior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn scenario(name: &str) -> Scenario {
    load_scenario(scenario_path(name)).expect("fixture loads")
}

fn p(v: &[f64]) -> Posterior {
    Posterior::new(v.to_vec()).unwrap()
}

/// Quadratic and action-set curves on two and three outcomes, with the grid
/// step used for each dimension.
fn curve_families() -> Vec<(&'static str, PreferenceCurve, f64)> {
    let prior2 = Prior::new(p(&[0.5, 0.5]));
    let prior3 = Prior::new(p(&[0.5, 0.3, 0.2]));
    vec![
        ("quadratic n=2", PreferenceCurve::quadratic(prior2.clone()), 0.01),
        ("quadratic n=3", PreferenceCurve::quadratic(prior3.clone()), 0.05),
        (
            "action-set n=2",
            from_action_set(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.6]], &prior2).unwrap(),
            0.01,
        ),
        (
            "action-set n=3",
            from_action_set(
                vec![
                    vec![1.0, 0.0, 0.0],
                    vec![0.0, 1.0, 0.0],
                    vec![0.0, 0.0, 1.0],
                    vec![0.5, 0.5, 0.4],
                ],
                &prior3,
            )
            .unwrap(),
            0.05,
        ),
    ]
}

const BETAS: [f64; 3] = [0.0, 0.1, 0.37];

fn fixed_contract_table() -> Outcome {
    let belief = p(&[0.1, 0.9]);
    let a = expected_payment_raw(&[-8000.0, 1000.0], &belief);
    let b = expected_payment_raw(&[-8_000_000.0, 889_000.0], &belief);
    verdict(
        (a - 100.0).abs() <= TOL && (b - 100.0).abs() <= TOL,
        format!("contract A pays {a}, contract B pays {b}"),
    )
}

fn expected_payment_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (_, curve, step) in curve_families() {
        let grid = simplex_grid(curve.dim(), step).unwrap();
        for beta in BETAS {
            let shifted = curve.shifted(beta);
            let contract = Contract::new(shifted);
            for r in &grid {
                let pv = payment_vector(&contract, r);
                worst = worst.max((r.dot(&pv.payments) - shifted.eval(r)).abs());
                checked += 1;
            }
        }
    }
    verdict(worst <= TOL, format!("worst gap {worst:.3e} over {checked} reports"))
}

fn properness() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut misses = Vec::new();
    for (name, curve, step) in curve_families() {
        for beta in BETAS {
            let audit = check_properness(&Contract::new(curve.shifted(beta)), step).unwrap();
            worst = worst.max(audit.worst_gain);
            for belief in simplex_grid(curve.dim(), step).unwrap() {
                let (best, _) = brute_force_best_report(curve.shifted(beta), &belief, step).unwrap();
                if best.max_abs_diff(&belief) > 1e-12 {
                    misses.push(format!("{name} beta {beta}: {:?} -> {:?}", belief.probs(), best.probs()));
                }
            }
        }
    }
    verdict(
        worst <= TOL && misses.is_empty(),
        format!(
            "worst deviation gain {worst:.3e}, {} beliefs whose best report is elsewhere{}",
            misses.len(),
            misses.first().map(|m| format!(" (first: {m})")).unwrap_or_default()
        ),
    )
}

fn convexity() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (i, (name, curve, _)) in curve_families().into_iter().enumerate() {
        let audit = check_convexity(&curve, 10_000, 0xC0_4E_C5 + i as u64);
        worst = worst.max(audit.worst_violation);
        if !audit.passed() {
            failures.push(name);
        }
    }
    verdict(
        failures.is_empty(),
        format!("10^4 triples per family, worst violation {worst:.3e}, failing: {failures:?}"),
    )
}

fn truthfulness() -> Outcome {
    let s = scenario("two_experts.json");
    let grid = [0.0, 0.05, 0.1, 0.12, 0.13, 0.2];
    let mut worst = f64::NEG_INFINITY;
    let mut profiles = 0;
    for target in 0..s.experts.len() {
        let report = check_dominant_strategy(&s, target, &grid).unwrap();
        worst = worst.max(report.max_gain);
        profiles += report.profiles;
    }
    verdict(worst <= TOL, format!("max deviation gain {worst:.3e} over {profiles} opponent profiles"))
}

fn principal_utility() -> Outcome {
    let s = scenario("two_experts.json");
    let mut misses = Vec::new();
    let mut widths = Vec::new();
    for seed in 1..=5u64 {
        let est = estimate_principal_utility(&s, 100_000, seed).unwrap();
        widths.push(format!("{:.4}±{:.4}", est.mean, est.half_width));
        if !est.covers(0.12) {
            misses.push(seed);
        }
    }
    verdict(misses.is_empty(), format!("99% CIs {} (seeds missing 0.12: {misses:?})", widths.join(", ")))
}

fn uniqueness() -> Outcome {
    let prior = Prior::new(p(&[0.5, 0.5]));
    let curve = PreferenceCurve::quadratic(prior);
    let contract = Contract::new(curve.shifted(0.0));
    let report = p(&[0.9, 0.1]);
    let tangent = payment_vector(&contract, &report).payments;
    // the only direction that keeps the expected payment at the report
    let direction = [0.1 / 0.9, -1.0];

    let mut rng = ChaCha8Rng::seed_from_u64(0x0051_0E55);
    let mut undetected = Vec::new();
    for _ in 0..100 {
        let distance = 10f64.powf(rng.random_range(-2.0..=0.0));
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let alt: Vec<f64> = tangent.iter().zip(direction).map(|(t, d)| t + sign * distance * d).collect();
        match verify_uniqueness(&contract, &report, &alt, 0.01).unwrap() {
            Uniqueness::Counterexample { .. } => {}
            _ => undetected.push(distance),
        }
    }
    undetected.sort_by(f64::total_cmp);
    let largest = undetected.last().copied().unwrap_or(0.0);
    verdict(
        undetected.is_empty(),
        format!(
            "{} of 100 alternatives (L-inf distance log-uniform on [0.01, 1]) undetected; largest undetected distance {largest:.4}",
            undetected.len()
        ),
    )
}

fn gap(a: ReportInterval, b: ReportInterval) -> f64 {
    match (a.bounds(), b.bounds()) {
        (None, None) => 0.0,
        (Some((lo, hi)), None) | (None, Some((lo, hi))) => hi - lo,
        (Some((a, b)), Some((c, d))) => (a - c).abs().max((b - d).abs()),
    }
}

fn report_bounds() -> Outcome {
    let curve = PreferenceCurve::quadratic(Prior::new(p(&[0.5, 0.5])));
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0_0D5);
    let mut worst: f64 = 0.0;
    let mut closed_worst: f64 = 0.0;
    let mut closed_checked = 0;
    for _ in 0..50 {
        let beta = rng.random_range(0.0..0.5);
        let phi_e = rng.random_range(0.0..2.0);
        let phi_p = if rng.random_bool(0.3) { f64::INFINITY } else { rng.random_range(0.0..1.0) };
        let limits = RiskLimits::new(phi_p, phi_e).unwrap();
        let solved = binary_report_bounds(&curve, beta, limits).unwrap();
        let scanned = brute_force_report_bounds(&curve, beta, limits, 1e-4).unwrap();
        worst = worst.max(gap(solved, scanned));

        // the expert cap binds the upper end when the root lies in the
        // simplex and the principal cap is slack there
        let root = ((phi_e + 0.5 - beta) / 2.0).sqrt();
        let principal_payment = 2.0 * root - root * root - (1.0 - root) * (1.0 - root) - 0.5 - beta;
        if let Some((_, hi)) = solved.bounds() {
            if (0.5..=1.0).contains(&root) && principal_payment <= phi_p {
                closed_worst = closed_worst.max((hi - root).abs());
                closed_checked += 1;
            }
        }
    }
    verdict(
        worst <= 1e-4 && closed_worst <= 1e-6,
        format!(
            "worst scan gap {worst:.3e} over 50 configs; closed-form upper bound off by {closed_worst:.3e} on {closed_checked}"
        ),
    )
}

fn vertex_reserve() -> Outcome {
    let mut s = scenario("capped_principal.json");
    let phi_p = s.risk_limits.expect("fixture has caps").phi_p();
    s.reserve = min_beta_reserve(&s.curve, phi_p);
    let runs = simulate(&s, 10_000, s.seed).unwrap();
    let worst = runs.iter().map(|r| r.payment).fold(f64::NEG_INFINITY, f64::max);
    let sales = runs.iter().filter(|r| r.outcome.winner().is_some()).count();
    verdict(
        worst <= phi_p + TOL && sales > 0,
        format!("reserve {:.6}, largest payment {worst:.6} vs cap {phi_p} over {sales} sales", s.reserve),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_expert-auction"))
            .args(["auction", "--scenario"])
            .arg(scenario_path("two_experts.json"))
            .args(["--seed", "11", "--samples", "20000", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "auction failed: {}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(out).unwrap()
    };
    let first = run("first.csv");
    let second = run("second.csv");
    verdict(
        !first.is_empty() && first == second,
        format!("{} and {} bytes, identical: {}", first.len(), second.len(), first == second),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("fixed contract table", fixed_contract_table),
        ("expected-payment identity", expected_payment_identity),
        ("properness", properness),
        ("convexity", convexity),
        ("truthful bidding", truthfulness),
        ("principal utility", principal_utility),
        ("uniqueness of tangent payments", uniqueness),
        ("binary report bounds", report_bounds),
        ("vertex reserve caps payments", vertex_reserve),
        ("byte-identical reruns", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "acceptance {:>2} {status} {name}: {} [{:.2}s]",
            i + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
