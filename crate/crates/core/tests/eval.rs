//! Evaluation over the scripted providers. Expected averages are computed
//! here from each scenario's success attempt, independently of the
//! harness.

use bimcheck_core::building_model::{load_model_str, BuildingModel};
use bimcheck_core::evalharness::{render_eval, run_eval, EvalFormat, EvalOptions, EvalRun, Timing};
use bimcheck_core::orchestrator::{FixtureProvider, Provider};
use bimcheck_core::rules::{rule_spec, RuleConfig, RuleSpec};

const PROVIDERS: [&str; 5] = [
    "claude-mock",
    "gemini-mock",
    "chatgpt-mock",
    "grok-mock",
    "copilot-mock",
];

/// Attempt on which each provider's rule 1..=5 succeeds; `None` if never.
const SCENARIOS: [[Option<usize>; 5]; 5] = [
    [Some(5), Some(3), Some(4), Some(5), Some(5)],
    [Some(4), Some(8), None, Some(9), None],
    [Some(7), None, None, None, None],
    [Some(1), Some(1), None, None, None],
    [None, None, None, None, None],
];

fn root() -> String {
    format!("{}/fixtures", env!("CARGO_MANIFEST_DIR"))
}

fn residential() -> BuildingModel {
    load_model_str(&std::fs::read_to_string(format!("{}/models/residential.json", root())).unwrap())
        .unwrap()
}

fn specs() -> Vec<RuleSpec> {
    (1..=5)
        .map(|i| rule_spec(i, &RuleConfig::default()).unwrap())
        .collect()
}

fn evaluate(parallel: bool) -> EvalRun {
    let mocks: Vec<FixtureProvider> = PROVIDERS
        .iter()
        .map(|n| FixtureProvider::new(format!("{}/providers", root()), *n))
        .collect();
    let providers: Vec<&dyn Provider> = mocks.iter().map(|p| p as &dyn Provider).collect();
    let opts = EvalOptions {
        timing: Timing::Stepped(2.5),
        parallel,
        ..EvalOptions::default()
    };
    run_eval(&providers, &specs(), &residential(), &opts)
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

#[test]
fn cells_match_the_scenarios() {
    let run = evaluate(true);
    assert_eq!(run.table.rules, [1, 2, 3, 4, 5]);
    for (row, scenario) in run.table.rows.iter().zip(SCENARIOS) {
        for (rec, success_at) in row.records.iter().zip(scenario) {
            assert_eq!(
                rec.status,
                success_at.is_some(),
                "{} rule {}",
                row.provider,
                rec.rule_id
            );
            match success_at {
                Some(k) => {
                    assert_eq!(rec.correction_attempts, k - 1);
                    assert_eq!(rec.success_rate_percent, round1(100.0 / k as f64));
                    assert_eq!(rec.processing_time, Some(2.5));
                }
                None => {
                    assert_eq!(
                        (
                            rec.correction_attempts,
                            rec.success_rate_percent,
                            rec.processing_time
                        ),
                        (10, 0.0, None)
                    );
                }
            }
        }
        let ok: Vec<usize> = scenario.iter().flatten().copied().collect();
        let a = &row.averages;
        let expected_rate = scenario
            .iter()
            .map(|s| s.map_or(0.0, |k| round1(100.0 / k as f64)))
            .sum::<f64>()
            / 5.0;
        assert!(
            (a.success_rate_percent - expected_rate).abs() < 1e-9,
            "{}",
            row.provider
        );
        if ok.is_empty() {
            assert_eq!(a.correction_attempts, None);
        } else {
            let expected = ok.iter().map(|k| (k - 1) as f64).sum::<f64>() / ok.len() as f64;
            assert!((a.correction_attempts.unwrap() - expected).abs() < 1e-9);
        }
    }
}

#[test]
fn headline_averages() {
    let run = evaluate(true);
    let avg = |name: &str| {
        run.table
            .rows
            .iter()
            .find(|r| r.provider == name)
            .unwrap()
            .averages
            .clone()
    };
    let claude = avg("claude-mock");
    assert_eq!(
        (
            round1(claude.correction_attempts.unwrap()),
            round1(claude.success_rate_percent)
        ),
        (3.4, 23.7)
    );
    assert_eq!(round1(avg("gemini-mock").success_rate_percent), 9.7);
    assert_eq!(avg("chatgpt-mock").successes, 1);
    let copilot = avg("copilot-mock");
    assert_eq!(
        (
            copilot.successes,
            copilot.success_rate_percent,
            copilot.processing_time
        ),
        (0, 0.0, None)
    );
}

#[test]
fn parallel_and_serial_runs_agree() {
    let (a, b) = (evaluate(true), evaluate(false));
    assert_eq!(a.table, b.table);
    assert_eq!(
        render_eval(&a.table, EvalFormat::Text),
        render_eval(&b.table, EvalFormat::Text)
    );
    assert_eq!(a.sessions.len(), 25);
}

#[test]
fn text_table_matches_golden() {
    let run = evaluate(true);
    let actual = render_eval(&run.table, EvalFormat::Text);
    let path = format!("{}/tests/golden/eval_table.txt", env!("CARGO_MANIFEST_DIR"));
    let expected = std::fs::read(&path).unwrap();
    if expected != actual {
        std::fs::write(format!("{path}.actual"), &actual).unwrap();
        panic!("eval table differs from its golden; see {path}.actual");
    }
    let json: serde_json::Value =
        serde_json::from_slice(&render_eval(&run.table, EvalFormat::Json)).unwrap();
    assert_eq!(
        json["rows"][4]["averages"]["processing_time"],
        serde_json::Value::Null
    );
}
