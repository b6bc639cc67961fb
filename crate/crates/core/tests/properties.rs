mod support;

use support::properties as p;

#[test]
fn parse_render_round_trip() {
    p::ast_round_trip(1000).unwrap();
}

#[test]
fn unit_conversions_round_trip() {
    p::unit_round_trip(1000).unwrap();
}

#[test]
fn enlarging_never_adds_violations() {
    p::monotonicity(200).unwrap();
}

#[test]
fn polygon_distance_matches_segment_oracle() {
    p::polygon_distance_agrees(500).unwrap();
}

#[test]
fn oracle_sanity() {
    use bimcheck_core::geometry::Point2;
    let sq = |x: f64, y: f64| {
        vec![
            Point2::new(x, y),
            Point2::new(x + 1000.0, y),
            Point2::new(x + 1000.0, y + 1000.0),
            Point2::new(x, y + 1000.0),
        ]
    };
    assert!((p::oracle_distance(&sq(0.0, 0.0), &sq(1500.0, 0.0)) - 500.0).abs() < 1e-9);
    assert!((p::oracle_distance(&sq(0.0, 0.0), &sq(1300.0, 1400.0)) - 500.0).abs() < 1e-9);
    assert_eq!(p::oracle_distance(&sq(0.0, 0.0), &sq(200.0, 200.0)), 0.0);
}

mod metrics {
    use bimcheck_core::building_model::{ElementId, ModelBuilder};
    use bimcheck_core::orchestrator::{success_rate, DEFAULT_MAX_ATTEMPTS};
    use bimcheck_core::report::{build_report, render_report, ReportFormat};
    use bimcheck_core::rules::{CheckResult, Finding, Status, Subject};
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn status() -> impl Strategy<Value = Status> {
        prop_oneof![Just(Status::Compliant), Just(Status::NonCompliant), Just(Status::NotApplicable)]
    }

    fn results() -> impl Strategy<Value = Vec<CheckResult>> {
        prop::collection::vec((1u8..=12, prop::collection::vec((1u64..50, status()), 0..12)), 0..6).prop_map(|rules| {
            rules
                .into_iter()
                .map(|(id, fs)| {
                    let findings = fs
                        .into_iter()
                        .map(|(e, s)| Finding::new(Subject::element(ElementId(e)), s))
                        .collect();
                    CheckResult::new(id, findings)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn success_rate_is_within_rounding_of_the_exact_ratio(n in 1usize..100_000) {
            let r = success_rate(true, n);
            prop_assert!((r - 100.0 / n as f64).abs() <= 0.05 + 1e-12);
            prop_assert!(success_rate(true, n + 1) <= r);
            prop_assert_eq!(success_rate(false, n), 0.0);
        }

        #[test]
        fn report_counts_and_recommendations_are_conserved(results in results()) {
            let m = ModelBuilder::new("generated").build();
            let at = Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap();
            let r = build_report(&m, &results, at);
            let mut total = 0;
            for (rule, res) in r.per_rule.iter().zip(&results) {
                let n = |s: Status| res.findings.iter().filter(|f| f.status == s).count();
                prop_assert_eq!(rule.counts.compliant, n(Status::Compliant));
                prop_assert_eq!(rule.counts.non_compliant, n(Status::NonCompliant));
                prop_assert_eq!(rule.counts.not_applicable, n(Status::NotApplicable));
                total += n(Status::NonCompliant);
            }
            prop_assert_eq!(r.summary.counts.non_compliant, total);
            prop_assert_eq!(r.recommendations.len(), total);
            prop_assert_eq!(render_report(&r, ReportFormat::Text), render_report(&r.clone(), ReportFormat::Text));
        }
    }

    #[test]
    fn success_rate_strictly_decreases_within_the_budget() {
        let rates: Vec<f64> = (1..=DEFAULT_MAX_ATTEMPTS).map(|n| success_rate(true, n)).collect();
        assert!(rates.windows(2).all(|w| w[0] > w[1]), "{rates:?}");
    }
}
