//! Acceptance battery: criteria 1 to 9, one pass/fail line each.
//!
//! Criteria 1-8 run the items of `canonical_battery(0, 100_000)` in process,
//! grouped by name prefix; criterion 9 runs `polya verify canonical` twice
//! with different worker counts and compares the reports byte for byte.
//! Tolerances, sample sizes and runtime budgets are pinned below.

use std::f64::consts::E;
use std::process::Command;
use std::time::{Duration, Instant};

use polya_cli::RayonExecutor;
use polya_core::analytic::MomentSet;
use polya_core::numerics::DEFAULT_FD_STEP;
use polya_core::verify::{
    canonical_battery, pde_cases, Check, DeterministicSuite, SuiteItem, CANONICAL_ENSEMBLE_SIZE,
    CANONICAL_WINDOW_TRIALS, DEFAULT_Z,
};

const SEED: u64 = 0;

struct Outcome {
    id: u32,
    title: &'static str,
    checks: Vec<Check>,
    problems: Vec<String>,
    elapsed: Duration,
    budget: Duration,
}

impl Outcome {
    fn pass(&self) -> bool {
        self.problems.is_empty()
            && self.checks.iter().all(|c| c.pass)
            && self.elapsed <= self.budget
    }

    fn line(&self) -> String {
        let failing = self.checks.iter().filter(|c| !c.pass).count();
        let budget = if self.budget == Duration::MAX {
            String::from("no budget")
        } else {
            format!("{:.0} s budget", self.budget.as_secs_f64())
        };
        let mut s = format!(
            "criterion {} [{}]: {} ({} checks, {} failing, {:.1} s, {budget})",
            self.id,
            self.title,
            if self.pass() { "PASS" } else { "FAIL" },
            self.checks.len(),
            failing,
            self.elapsed.as_secs_f64(),
        );
        for c in self.checks.iter().filter(|c| !c.pass) {
            s += &format!(
                "\n    {}: observed {} expected {} statistic {:.4} threshold {}",
                c.name, c.observed, c.expected, c.statistic, c.threshold
            );
        }
        for p in &self.problems {
            s += &format!("\n    {p}");
        }
        s
    }
}

fn group<'a>(battery: &'a [SuiteItem], prefix: &str) -> Vec<&'a SuiteItem> {
    battery
        .iter()
        .filter(|it| it.name() == prefix || it.name().starts_with(&format!("{prefix}/")))
        .collect()
}

fn run_group(
    id: u32,
    title: &'static str,
    items: &[&SuiteItem],
    budget_s: u64,
    pinned: Vec<String>,
) -> Outcome {
    let executor = RayonExecutor::new(1).unwrap();
    let mut problems = pinned;
    let mut checks = Vec::new();
    let start = Instant::now();
    if items.is_empty() {
        problems.push("no battery items in this group".into());
    }
    for item in items {
        match item.run(&executor, DEFAULT_Z) {
            Ok(c) => checks.extend(c),
            Err(e) => problems.push(format!("{} errored: {e}", item.name())),
        }
    }
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_s);
    if elapsed > budget {
        problems.push(format!(
            "runtime {:.1} s exceeds {budget_s} s",
            elapsed.as_secs_f64()
        ));
    }
    Outcome {
        id,
        title,
        checks,
        problems,
        elapsed,
        budget,
    }
}

fn require(problems: &mut Vec<String>, ok: bool, what: &str) {
    if !ok {
        problems.push(format!("pinned setting violated: {what}"));
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn thresholds_are(checks: &[Check], contains: &str, tol: f64) -> bool {
    let sel: Vec<_> = checks
        .iter()
        .filter(|c| c.name.contains(contains))
        .collect();
    !sel.is_empty() && sel.iter().all(|c| c.threshold == tol)
}

fn mc_config(item: &SuiteItem) -> Option<&polya_core::model::ScenarioConfig> {
    match item {
        SuiteItem::Moments { config, .. }
        | SuiteItem::Limit { config, .. }
        | SuiteItem::Conservation { config, .. }
        | SuiteItem::MgfGrid { config, .. } => Some(config),
        _ => None,
    }
}

fn expected_moments<'a>(battery: &'a [SuiteItem], name: &str) -> &'a [(f64, MomentSet)] {
    battery
        .iter()
        .find_map(|it| match it {
            SuiteItem::Moments {
                name: n, expected, ..
            } if n == name => Some(expected.as_slice()),
            _ => None,
        })
        .unwrap_or(&[])
}

fn moment_at(expected: &[(f64, MomentSet)], t: f64) -> Option<&MomentSet> {
    expected.iter().find(|(s, _)| *s == t).map(|(_, m)| m)
}

fn deterministic_suite(items: &[&SuiteItem]) -> Option<DeterministicSuite> {
    items.iter().find_map(|it| match it {
        SuiteItem::Deterministic { suite, .. } => Some(*suite),
        _ => None,
    })
}

fn criteria_1_to_8(battery: &[SuiteItem]) -> Vec<Outcome> {
    let mut out = Vec::new();

    // 1: five MGFs, h = 1e-5, >= 20 points each, relative residual <= 1e-6
    let items = group(battery, "pde");
    let mut pins = Vec::new();
    let cases = pde_cases();
    require(&mut pins, cases.len() == 5, "five closed-form MGFs");
    require(
        &mut pins,
        cases.iter().all(|c| c.points.len() >= 20),
        ">= 20 grid points per scheme",
    );
    require(
        &mut pins,
        DEFAULT_FD_STEP == 1e-5,
        "finite-difference step 1e-5",
    );
    let mut o = run_group(1, "PDE residual suite", &items, 5, pins);
    let ok = o.checks.len() == 5 && o.checks.iter().all(|c| c.threshold == 1e-6);
    require(&mut o.problems, ok, "five residual checks at 1e-6");
    out.push(o);

    // 2: i in {1, 2, 3.5}, delta in {1, 2}, t in {0.5, 1, 2, 5}, ell <= 50
    let items = group(battery, "kolmogorov");
    let mut o = run_group(2, "Kolmogorov oracle equivalence", &items, 10, Vec::new());
    let mut ok = o.checks.len() == 48;
    for i in ["1", "2", "3.5"] {
        for d in ["1", "2"] {
            for t in ["0.5", "1", "2", "5"] {
                ok &= o
                    .checks
                    .iter()
                    .any(|c| c.name.contains(&format!("i={i},delta={d},t={t}/")));
            }
        }
    }
    require(
        &mut o.problems,
        ok,
        "3 x 2 x 4 parameter grid with error and mass checks",
    );
    let ok = thresholds_are(&o.checks, "max-abs-error", 1e-8)
        && thresholds_are(&o.checks, "/mass", 1e-8);
    require(&mut o.problems, ok, "max-abs 1e-8 and mass 1e-8");
    out.push(o);

    // 3: 20 draws per scheme, 1e-8 relative
    let items = group(battery, "mean");
    let mut pins = Vec::new();
    let ok = deterministic_suite(&items) == Some(DeterministicSuite::MeanAgreement { draws: 20 });
    require(&mut pins, ok, "20 draws per scheme");
    let mut o = run_group(3, "mean agreement", &items, 5, pins);
    let ok = o.checks.len() == 10 && o.checks.iter().all(|c| c.threshold == 1e-8);
    require(
        &mut o.problems,
        ok,
        "matrix-exp and ODE checks for five schemes at 1e-8",
    );
    out.push(o);

    // 4: 10 draws, alpha < delta <= 3, t <= 2, 1e-7 relative
    let items = group(battery, "second-moments");
    let mut pins = Vec::new();
    let ok = deterministic_suite(&items) == Some(DeterministicSuite::SecondMoments { draws: 10 });
    require(&mut pins, ok, "10 draws");
    let mut o = run_group(4, "second-moment oracle", &items, 10, pins);
    let ok = o.checks.len() == 10 && o.checks.iter().all(|c| c.threshold == 1e-7);
    require(&mut o.problems, ok, "ten draws at 1e-7");
    out.push(o);

    // 5: N = 1e5, z = 4, with closed-form targets pinned independently
    let items = group(battery, "mc");
    let mut pins = Vec::new();
    let ok = items
        .iter()
        .all(|it| mc_config(it).is_some_and(|c| c.ensemble_size == 100_000));
    require(
        &mut pins,
        ok && CANONICAL_ENSEMBLE_SIZE == 100_000,
        "N = 10^5",
    );
    require(&mut pins, DEFAULT_Z == 4.0, "z threshold 4");
    let dc = expected_moments(battery, "mc/diag-constant");
    for t in [0.5, 1.0] {
        let ok = moment_at(dc, t).is_some_and(|m| close(m.means[0], t.exp()));
        require(&mut pins, ok, &format!("diag-constant mean e^t at t={t}"));
    }
    let eh = expected_moments(battery, "mc/ehrenfest");
    for t in [1.0, 10.0] {
        let ok = moment_at(eh, t).is_some_and(|m| close(m.means[0], 4.0 - (-2.0 * t).exp()));
        require(
            &mut pins,
            ok,
            &format!("Ehrenfest mean 4 + (3 - 4) e^(-2t) at t={t}"),
        );
    }
    let ok = battery.iter().any(|it| {
        matches!(it, SuiteItem::Conservation { name, quantity: polya_core::verify::Conserved::Sum, config }
            if name == "mc/ehrenfest-conservation" && config.init.coords() == [3.0, 5.0])
    });
    require(&mut pins, ok, "Ehrenfest X + Y = 8 on every path");
    let hill = moment_at(expected_moments(battery, "mc/hill"), 2.0);
    let ok = hill.is_some_and(|m| close(m.means[0], 5.0) && close(m.variance(0), 16.0));
    require(&mut pins, ok, "Hill mean 5, variance 16 at t=2");
    let tri = moment_at(expected_moments(battery, "mc/triangular"), 1.0);
    let ok = tri.is_some_and(|m| {
        close(m.means[0], E)
            && close(m.means[1], 2.0 * E * E - E)
            && close(m.covariance(0, 1), E.powi(3) - E * E)
    });
    require(
        &mut pins,
        ok,
        "triangular mean_X e, mean_Y 2e^2 - e, covariance e^3 - e^2 at t=1",
    );
    let mut o = run_group(5, "Monte Carlo moment battery", &items, 180, pins);
    let ok = o
        .checks
        .iter()
        .filter(|c| c.name.contains("/mean[") || c.name.contains("/var["))
        .all(|c| c.threshold == 4.0);
    require(&mut o.problems, ok, "moment checks at z = 4");
    out.push(o);

    // 6: limits at N = 1e5, z = 4
    let items = group(battery, "limit");
    let mut pins = Vec::new();
    let ok = items
        .iter()
        .all(|it| mc_config(it).is_some_and(|c| c.ensemble_size == 100_000));
    require(&mut pins, ok, "N = 10^5");
    for (name, t) in [
        ("limit/ehrenfest", 10.0),
        ("limit/diag-constant", 8.0),
        ("limit/hill", 50.0),
        ("limit/diag-exponential", 8.0),
    ] {
        let ok = items
            .iter()
            .any(|it| it.name() == name && mc_config(it).is_some_and(|c| c.horizon == t));
        require(&mut pins, ok, &format!("{name} at t={t}"));
    }
    let mut o = run_group(6, "limit battery", &items, 180, pins);
    let targets = [
        ("limit/ehrenfest/t=10/scaled-mean[", 4.0),
        ("limit/ehrenfest/t=10/scaled-var[", 2.0),
        ("limit/diag-constant/t=8/scaled-mean[1]", 2.0),
        ("limit/diag-constant/t=8/scaled-var[1]", 2.0),
        ("limit/hill/t=50/scaled-mean[1]", 2.0),
        ("limit/hill/t=50/scaled-var[1]", 2.0),
        ("limit/diag-exponential/t=8/scaled-mean[1]", 1.0),
    ];
    for (prefix, want) in targets {
        let sel: Vec<_> = o
            .checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .collect();
        let ok = !sel.is_empty()
            && sel
                .iter()
                .all(|c| close(c.expected, want) && c.threshold == 4.0);
        require(
            &mut o.problems,
            ok,
            &format!("{prefix} targets {want} at z = 4"),
        );
    }
    let lattice = o
        .checks
        .iter()
        .filter(|c| c.name.contains("ehrenfest/t=10/off-lattice"))
        .count()
        == 2;
    require(
        &mut o.problems,
        lattice,
        "exact lattice support for both Ehrenfest coordinates",
    );
    out.push(o);

    // 7: coords (3,5), dt = 0.01, 1e6 trials
    let items = group(battery, "window");
    let mut pins = Vec::new();
    let ok = items.iter().any(|it| {
        matches!(it, SuiteItem::EventWindow { coords, delta_t, trials, .. }
            if coords == &[3.0, 5.0] && *delta_t == 0.01 && *trials == 1_000_000)
    });
    require(
        &mut pins,
        ok && CANONICAL_WINDOW_TRIALS == 1_000_000,
        "coords (3,5), dt 0.01, 10^6 trials",
    );
    let mut o = run_group(7, "event-window test", &items, 30, pins);
    let ok = o.checks.len() == 4
        && o.checks
            .iter()
            .any(|c| c.name.ends_with("p-zero") && close(c.expected, (-0.08f64).exp()));
    require(
        &mut o.problems,
        ok,
        "P(0), P(1 of each type), P(>= 2) with P(0) = e^(-0.08)",
    );
    out.push(o);

    // 8: kernels
    let items = group(battery, "kernels");
    let mut o = run_group(8, "numerics kernels", &items, 2, Vec::new());
    let ok = thresholds_are(&o.checks, "lambert-identity", 1e-12)
        && thresholds_are(&o.checks, "matrix-exp-semigroup", 1e-10)
        && thresholds_are(&o.checks, "hyp2f1-vs-series", 1e-10)
        && thresholds_are(&o.checks, "rising-factorial-exact", 0.0);
    require(
        &mut o.problems,
        ok,
        "Lambert 1e-12, semigroup 1e-10, hyp2f1 1e-10, exact rising factorials",
    );
    out.push(o);

    out
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let mut problems = Vec::new();
    let mut reports = Vec::new();
    for workers in ["1", "8"] {
        let path = dir.path().join(format!("report-{workers}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_polya"))
            .args(["verify", "canonical", "--workers", workers, "--output"])
            .arg(&path)
            .status()
            .expect("run polya");
        // exit 1 means some check failed, which criteria 1-8 report; only
        // usage errors stop the comparison
        if !matches!(status.code(), Some(0) | Some(1)) {
            problems.push(format!("--workers {workers} exited with {status}"));
        }
        reports.push(std::fs::read(&path).unwrap_or_default());
    }
    if reports[0].is_empty() {
        problems.push("empty report".into());
    }
    if reports[0] != reports[1] {
        problems.push("reports for --workers 1 and --workers 8 differ".into());
    }
    Outcome {
        id: 9,
        title: "determinism across worker counts",
        checks: Vec::new(),
        problems,
        elapsed: start.elapsed(),
        budget: Duration::MAX,
    }
}

#[test]
fn acceptance() {
    let battery = canonical_battery(SEED, CANONICAL_ENSEMBLE_SIZE);
    let mut outcomes = criteria_1_to_8(&battery);
    outcomes.push(criterion_9());
    let mut failed = Vec::new();
    for o in &outcomes {
        println!("{}", o.line());
        if !o.pass() {
            failed.push(o.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
