//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion with its runtime and budget, and exits non-zero if any fails.
//!
//! Run alone with `cargo test -p bimcheck-cli --test acceptance`.

#[path = "../../core/tests/support/properties.rs"]
mod properties;
mod support;

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use bimcheck_core::building_model::{
    load_model_str, BuildingModel, Category, ElementBuilder as E, ElementId, ModelBuilder,
};
use bimcheck_core::checkscript::{execute, parse_for_rule, reference_script};
use bimcheck_core::evalharness::{run_eval, EvalOptions, Timing};
use bimcheck_core::orchestrator::{
    generate_check, success_rate, FixtureProvider, Outcome, Provider,
};
use bimcheck_core::rules::{
    check_rule, rule_spec, CheckResult, Finding, Quantity, RuleConfig, Status, Subject,
};

type Verdict = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

const KEY_VARS: [&str; 5] = [
    "ANTHROPIC_API_KEY",
    "OPENAI_API_KEY",
    "GEMINI_API_KEY",
    "XAI_API_KEY",
    "COPILOT_API_KEY",
];

fn fixtures() -> String {
    support::fixtures()
}

fn model(name: &str) -> BuildingModel {
    load_model_str(&std::fs::read_to_string(format!("{}/models/{name}.json", fixtures())).unwrap())
        .unwrap()
}

fn mock(name: &str) -> FixtureProvider {
    FixtureProvider::new(format!("{}/providers", fixtures()), name)
}

fn status_of(r: &CheckResult, id: u64) -> Option<Status> {
    r.findings
        .iter()
        .find(|f| f.subject == Subject::element(ElementId(id)))
        .map(|f| f.status)
}

fn success_rates() -> Verdict {
    for (corrections, want) in [
        (6, 14.3),
        (2, 33.3),
        (0, 100.0),
        (4, 20.0),
        (7, 12.5),
        (9, 10.0),
    ] {
        let got = success_rate(true, corrections + 1);
        ensure!(
            format!("{got:.1}") == format!("{want:.1}"),
            "{corrections} corrections gave {got}, expected {want}"
        );
    }
    Ok(())
}

fn metrics_table() -> Verdict {
    let providers = [mock("claude-mock"), mock("gemini-mock")];
    let refs: Vec<&dyn Provider> = providers.iter().map(|p| p as &dyn Provider).collect();
    let rules: Vec<_> = (1..=5)
        .map(|i| rule_spec(i, &RuleConfig::default()).unwrap())
        .collect();
    let opts = EvalOptions {
        timing: Timing::Stepped(1.0),
        ..EvalOptions::default()
    };
    let table = run_eval(&refs, &rules, &model("residential"), &opts).table;
    let claude = &table.rows[0];
    let corrections: Vec<usize> = claude
        .records
        .iter()
        .map(|r| r.correction_attempts)
        .collect();
    ensure!(
        corrections == [4, 2, 3, 4, 4],
        "claude corrections {corrections:?}"
    );
    let c = claude.averages.correction_attempts.unwrap_or(f64::NAN);
    ensure!((c - 3.4).abs() <= 0.05, "claude average corrections {c}");
    let s = claude.averages.success_rate_percent;
    ensure!((s - 23.7).abs() <= 0.05, "claude average success {s}");
    let gemini = &table.rows[1];
    let rates: Vec<f64> = gemini
        .records
        .iter()
        .map(|r| r.success_rate_percent)
        .collect();
    ensure!(
        rates == [25.0, 12.5, 0.0, 11.1, 0.0],
        "gemini rates {rates:?}"
    );
    let g = gemini.averages.success_rate_percent;
    ensure!((g - 9.7).abs() <= 0.05, "gemini average success {g}");
    Ok(())
}

fn figure_behaviors() -> Verdict {
    let m = model("residential");
    let r1 = check_rule(&m, 1).unwrap();
    ensure!(
        status_of(&r1, 311001) == Some(Status::Compliant),
        "36 x 80 in door 311001 is not compliant"
    );
    for id in [311005, 311006, 311010] {
        ensure!(
            status_of(&r1, id) == Some(Status::NonCompliant),
            "30 in door {id} is not non-compliant"
        );
    }
    ensure!(
        status_of(&check_rule(&m, 2).unwrap(), 311101) == Some(Status::Compliant),
        "36 in stair is not compliant"
    );
    let r3 = check_rule(&m, 3).unwrap();
    let guard = r3
        .findings
        .iter()
        .find(|f| f.subject == Subject::element(ElementId(654321)))
        .ok_or("guard 654321 missing")?;
    ensure!(
        guard.status == Status::NonCompliant,
        "35 in guard is {:?}",
        guard.status
    );
    let surface = guard
        .measured
        .get("walking_surface_height")
        .ok_or("walking surface not measured")?;
    ensure!(
        surface.exceeds(&Quantity::inches(30.0)),
        "guarded surface is not above 30 in"
    );
    let r4 = check_rule(&m, 4).unwrap();
    let living = r4
        .findings
        .iter()
        .find(|f| f.subject == Subject::element(ElementId(410001)))
        .ok_or("living room missing")?;
    let ceiling = living.measured["ceiling_height"].display();
    ensure!(
        living.status == Status::Compliant,
        "living room ceiling is {:?}",
        living.status
    );
    ensure!(
        (living.measured["ceiling_height"].canonical() / 304.8 - 9.84).abs() < 0.005,
        "living room ceiling is {ceiling}"
    );
    ensure!(
        status_of(&check_rule(&m, 9).unwrap(), 410003) == Some(Status::NonCompliant),
        "sinkless kitchen passes"
    );
    Ok(())
}

fn oracle_equivalence() -> Verdict {
    for name in ["residential", "office"] {
        let m = model(name);
        for id in 1..=12u8 {
            let source =
                reference_script(id).ok_or(format!("no reference script for rule {id}"))?;
            let prog = parse_for_rule(source, id).map_err(|e| format!("rule {id}: {e:?}"))?;
            let got = execute(&prog, &m).map_err(|e| format!("{name} rule {id}: {e:?}"))?;
            let want = check_rule(&m, u32::from(id)).unwrap();
            ensure!(
                got.equivalent(&want),
                "{name} rule {id}: script verdicts differ from the oracle"
            );
            let (mut a, mut b) = (got.findings.clone(), want.findings.clone());
            a.sort_by(|x, y| x.subject.cmp(&y.subject));
            b.sort_by(|x, y| x.subject.cmp(&y.subject));
            for (x, y) in a.iter().zip(&b) {
                ensure!(same_finding(x, y), "{name} rule {id}: {x:?} != {y:?}");
            }
        }
    }
    Ok(())
}

/// Same subject and status, and every quantity both sides report is equal
/// in canonical units up to its kind's tolerance. A script may report
/// extra context quantities; notes are prose and may differ.
fn same_finding(a: &Finding, b: &Finding) -> bool {
    let agree = |x: &BTreeMap<String, Quantity>, y: &BTreeMap<String, Quantity>| {
        x.iter()
            .filter_map(|(k, q)| y.get(k).map(|r| (q, r)))
            .all(|(q, r)| {
                q.kind() == r.kind()
                    && (q.canonical() - r.canonical()).abs() <= Quantity::tolerance(q.kind())
            })
    };
    let shared = a
        .measured
        .keys()
        .filter(|k| b.measured.contains_key(*k))
        .count();
    a.subject == b.subject
        && a.status == b.status
        && (shared > 0 || a.measured.is_empty() || b.measured.is_empty())
        && agree(&a.measured, &b.measured)
        && agree(&a.required, &b.required)
}

fn repair_loop() -> Verdict {
    let spec = rule_spec(1, &RuleConfig::default()).unwrap();
    let s = generate_check(&mock("repair-demo"), &spec, &model("residential"), 10);
    ensure!(s.status, "session failed");
    ensure!(
        s.attempts_used() == 3,
        "attempts_used {}",
        s.attempts_used()
    );
    ensure!(
        s.correction_attempts == 2,
        "correction_attempts {}",
        s.correction_attempts
    );
    ensure!(
        s.success_rate_percent == 33.3,
        "success rate {}",
        s.success_rate_percent
    );
    let outcomes: Vec<Outcome> = s.attempts.iter().map(|a| a.outcome).collect();
    ensure!(
        outcomes == [Outcome::ParseError, Outcome::TypeError, Outcome::Ok],
        "outcomes {outcomes:?}"
    );
    let t = s.transcript();
    for block in s.attempts[..2]
        .iter()
        .map(|a| a.feedback.clone().unwrap_or_default())
    {
        ensure!(
            block
                .lines()
                .last()
                .is_some_and(|l| l.trim_end().ends_with('^')),
            "feedback has no caret line:\n{block}"
        );
        ensure!(t.contains(&block), "transcript lacks a feedback block");
    }
    Ok(())
}

fn ventilation_arithmetic() -> Verdict {
    // 20 ft by 25 ft, exactly 500 ft².
    let (w, d) = (20.0 * 304.8, 25.0 * 304.8);
    let expected = 5.0 * 4.0 + 0.06 * 500.0;
    ensure!(
        (expected - 50.0f64).abs() < 1e-12,
        "hand arithmetic gives {expected}"
    );
    for (supplied, want) in [(50.0, Status::Compliant), (49.9, Status::NonCompliant)] {
        let m = ModelBuilder::new("office")
            .level(1, "L1", 0.0)
            .element(
                E::new(1, Category::Room, "Office", 1)
                    .rect(0.0, 0.0, w, d)
                    .count("occupants", 4),
            )
            .element(
                E::new(2, Category::AirTerminal, "Diffuser", 1)
                    .flow("flow", supplied)
                    .location(w / 2.0, d / 2.0, 2400.0),
            )
            .build();
        let r = check_rule(&m, 12).unwrap();
        let f = r
            .findings
            .iter()
            .find(|f| f.subject == Subject::element(ElementId(1)))
            .ok_or("room finding missing")?;
        let required = f.required["outdoor_air"].canonical();
        ensure!(
            (required - expected).abs() < 1e-9,
            "required {required} CFM"
        );
        ensure!(f.status == want, "{supplied} CFM gave {:?}", f.status);
    }
    Ok(())
}

fn property_suites() -> Verdict {
    properties::ast_round_trip(1000)?;
    properties::unit_round_trip(1000)?;
    properties::monotonicity(100)?;
    properties::polygon_distance_agrees(250)?;
    Ok(())
}

fn deterministic_reports() -> Verdict {
    let model = format!("{}/models/residential.json", fixtures());
    let dirs = [
        support::scratch("acceptance-a"),
        support::scratch("acceptance-b"),
    ];
    for dir in &dirs {
        let out = support::bimcheck(&[
            "check",
            "--model",
            &model,
            "--out",
            dir.to_str().unwrap(),
            "--timestamp",
            support::TS,
        ]);
        ensure!(
            out.code == 2,
            "exit code {} ({})",
            out.code,
            out.stderr.trim()
        );
    }
    for file in ["report.json", "report.txt"] {
        let a = std::fs::read(dirs[0].join(file)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].join(file)).map_err(|e| e.to_string())?;
        ensure!(a == b, "{file} differs between runs");
    }
    Ok(())
}

struct Criterion {
    number: u8,
    name: &'static str,
    budget: Duration,
    run: fn() -> Verdict,
}

fn main() {
    // Nothing below may need a key or the network: keys are removed and
    // any proxied request would hit a closed local port.
    for var in KEY_VARS {
        std::env::remove_var(var);
    }
    for var in [
        "HTTP_PROXY",
        "HTTPS_PROXY",
        "ALL_PROXY",
        "http_proxy",
        "https_proxy",
        "all_proxy",
    ] {
        std::env::set_var(var, "http://127.0.0.1:9");
    }
    std::panic::set_hook(Box::new(|_| {}));

    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            number: 1,
            name: "success-rate rounding reproduces the published values",
            budget: secs(1),
            run: success_rates,
        },
        Criterion {
            number: 2,
            name: "metrics table averages from scripted providers",
            budget: secs(5),
            run: metrics_table,
        },
        Criterion {
            number: 3,
            name: "residential fixture behaviors",
            budget: secs(5),
            run: figure_behaviors,
        },
        Criterion {
            number: 4,
            name: "reference scripts equal the oracle on both fixtures",
            budget: secs(10),
            run: oracle_equivalence,
        },
        Criterion {
            number: 5,
            name: "repair loop: parse error, type error, success",
            budget: secs(2),
            run: repair_loop,
        },
        Criterion {
            number: 6,
            name: "outdoor-air arithmetic at 50.0 and 49.9 CFM",
            budget: secs(1),
            run: ventilation_arithmetic,
        },
        Criterion {
            number: 7,
            name: "property suites",
            budget: secs(60),
            run: property_suites,
        },
        Criterion {
            number: 9,
            name: "check reports are byte-identical across runs",
            budget: secs(10),
            run: deterministic_reports,
        },
    ];

    let mut stderr = std::io::stderr();
    let mut failed = 0;
    let mut others_passed = true;
    let total = Instant::now();
    let _ = writeln!(stderr, "\nacceptance criteria");
    for c in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or("panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|()| {
            if elapsed <= c.budget {
                Ok(())
            } else {
                Err(format!(
                    "took {:.2} s, budget {} s",
                    elapsed.as_secs_f64(),
                    c.budget.as_secs()
                ))
            }
        });
        report(&mut stderr, c.number, c.name, elapsed, c.budget, &result);
        if result.is_err() {
            failed += 1;
            others_passed = false;
        }
    }

    // Offline: everything above ran with no keys and no reachable proxy.
    let keys_absent = KEY_VARS.iter().all(|v| std::env::var_os(v).is_none());
    let offline: Verdict = if !keys_absent {
        Err("a provider key is still set".into())
    } else if !others_passed {
        Err("another criterion failed under offline conditions".into())
    } else {
        Ok(())
    };
    report(
        &mut stderr,
        8,
        "all criteria pass with no network and no API keys",
        total.elapsed(),
        secs(90),
        &offline,
    );
    if offline.is_err() {
        failed += 1;
    }
    let _ = writeln!(stderr, "{} of 9 criteria passed\n", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn report(
    w: &mut dyn Write,
    number: u8,
    name: &str,
    elapsed: Duration,
    budget: Duration,
    result: &Verdict,
) {
    let verdict = if result.is_ok() { "PASS" } else { "FAIL" };
    let _ = writeln!(
        w,
        "  [{verdict}] criterion {number}: {name} ({:.2} s, budget {} s)",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    if let Err(e) = result {
        let _ = writeln!(w, "         {e}");
    }
}
