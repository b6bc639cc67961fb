//! Runs the repair loop for every provider and rule, collects per-cell
//! metrics, and renders the comparison table.

use std::fmt::Write;
use std::thread;

use serde::Serialize;

use crate::building_model::BuildingModel;
use crate::checkscript::ExecOptions;
use crate::orchestrator::{
    generate_check_with, Clock, Provider, RepairOptions, RepairSession, SteppingClock, WallClock,
    DEFAULT_MAX_ATTEMPTS,
};
use crate::rules::{trim_number, RuleConfig, RuleSpec};

/// Metrics of one provider on one rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub provider: String,
    pub rule_id: u8,
    /// Seconds taken by the successful attempt; absent on failure.
    pub processing_time: Option<f64>,
    pub correction_attempts: usize,
    pub status: bool,
    pub success_rate_percent: f64,
}

impl EvalRecord {
    pub fn from_session(s: &RepairSession) -> Self {
        Self {
            provider: s.provider.clone(),
            rule_id: s.rule_id,
            processing_time: s.processing_time_secs(),
            correction_attempts: s.correction_attempts,
            status: s.status,
            success_rate_percent: s.success_rate_percent,
        }
    }
}

/// Per-provider averages. Time and corrections are taken over successful
/// rules only; the success rate counts failures as 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Averages {
    pub processing_time: Option<f64>,
    pub correction_attempts: Option<f64>,
    pub successes: usize,
    pub rules: usize,
    pub success_rate_percent: f64,
}

impl Averages {
    pub fn of(records: &[&EvalRecord]) -> Self {
        let ok: Vec<&&EvalRecord> = records.iter().filter(|r| r.status).collect();
        let mean = |xs: Vec<f64>| {
            if xs.is_empty() {
                None
            } else {
                Some(xs.iter().sum::<f64>() / xs.len() as f64)
            }
        };
        Self {
            processing_time: mean(ok.iter().filter_map(|r| r.processing_time).collect()),
            correction_attempts: mean(ok.iter().map(|r| r.correction_attempts as f64).collect()),
            successes: ok.len(),
            rules: records.len(),
            success_rate_percent: mean(records.iter().map(|r| r.success_rate_percent).collect())
                .unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProviderRow {
    pub provider: String,
    /// One record per rule, in the table's rule order.
    pub records: Vec<EvalRecord>,
    pub averages: Averages,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalTable {
    pub rules: Vec<u8>,
    pub rows: Vec<ProviderRow>,
}

impl EvalTable {
    /// Group records by provider in first-seen order; each row follows
    /// `rules`. Missing cells are an error.
    pub fn assemble(rules: &[u8], records: &[EvalRecord]) -> Result<Self, String> {
        let mut providers: Vec<&str> = Vec::new();
        for r in records {
            if !providers.contains(&r.provider.as_str()) {
                providers.push(&r.provider);
            }
        }
        let rows = providers
            .into_iter()
            .map(|p| {
                let row: Vec<EvalRecord> = rules
                    .iter()
                    .map(|id| {
                        records
                            .iter()
                            .find(|r| r.provider == p && r.rule_id == *id)
                            .cloned()
                            .ok_or_else(|| format!("no record for provider {p} on rule {id}"))
                    })
                    .collect::<Result<_, _>>()?;
                let averages = Averages::of(&row.iter().collect::<Vec<_>>());
                Ok(ProviderRow {
                    provider: p.to_string(),
                    records: row,
                    averages,
                })
            })
            .collect::<Result<_, String>>()?;
        Ok(Self {
            rules: rules.to_vec(),
            rows,
        })
    }
}

/// How latencies are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Timing {
    Wall,
    /// Every provider call takes exactly this many seconds.
    Stepped(f64),
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub max_attempts: usize,
    pub config: RuleConfig,
    pub exec: ExecOptions,
    pub timing: Timing,
    /// One thread per provider when set.
    pub parallel: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            config: RuleConfig::default(),
            exec: ExecOptions::default(),
            timing: Timing::Wall,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalRun {
    pub table: EvalTable,
    /// Every session, provider-major in input order.
    pub sessions: Vec<RepairSession>,
}

fn run_provider(
    provider: &dyn Provider,
    rules: &[RuleSpec],
    model: &BuildingModel,
    opts: &EvalOptions,
) -> Vec<RepairSession> {
    rules
        .iter()
        .map(|rule| {
            // A fresh clock per session keeps stepped timings independent
            // of scheduling.
            let clock: Box<dyn Clock> = match opts.timing {
                Timing::Wall => Box::new(WallClock::default()),
                Timing::Stepped(step) => Box::new(SteppingClock::new(step)),
            };
            let repair = RepairOptions {
                max_attempts: opts.max_attempts,
                config: &opts.config,
                exec: opts.exec.clone(),
                clock: clock.as_ref(),
            };
            generate_check_with(provider, rule, model, &repair)
        })
        .collect()
}

/// Evaluate every provider on every rule. Output order does not depend on
/// thread scheduling.
pub fn run_eval(
    providers: &[&dyn Provider],
    rules: &[RuleSpec],
    model: &BuildingModel,
    opts: &EvalOptions,
) -> EvalRun {
    let per_provider: Vec<Vec<RepairSession>> = if opts.parallel {
        thread::scope(|scope| {
            let handles: Vec<_> = providers
                .iter()
                .map(|p| scope.spawn(move || run_provider(*p, rules, model, opts)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("evaluation thread panicked"))
                .collect()
        })
    } else {
        providers
            .iter()
            .map(|p| run_provider(*p, rules, model, opts))
            .collect()
    };
    let sessions: Vec<RepairSession> = per_provider.into_iter().flatten().collect();
    let records: Vec<EvalRecord> = sessions.iter().map(EvalRecord::from_session).collect();
    let ids: Vec<u8> = rules.iter().map(|r| r.id).collect();
    let table = EvalTable::assemble(&ids, &records).expect("every cell was evaluated");
    EvalRun { table, sessions }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalFormat {
    Json,
    Text,
}

fn one_decimal(x: f64) -> String {
    format!("{:.1}", (x * 10.0).round() / 10.0)
}

fn seconds(x: f64) -> String {
    trim_number(x)
}

fn text_table(t: &EvalTable) -> String {
    let mut grid: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["Model".to_string(), "Metric".to_string()];
    header.extend(t.rules.iter().map(|r| format!("Rule {r}")));
    header.push("Avg".to_string());
    grid.push(header);
    for row in &t.rows {
        let a = &row.averages;
        let dash = || "-".to_string();
        let metrics: [(&str, Vec<String>, String); 4] = [
            (
                "Processing time (s)",
                row.records
                    .iter()
                    .map(|r| {
                        r.processing_time
                            .filter(|_| r.status)
                            .map_or_else(dash, seconds)
                    })
                    .collect(),
                a.processing_time.map_or_else(dash, seconds),
            ),
            (
                "Correction attempts",
                row.records
                    .iter()
                    .map(|r| {
                        if r.status {
                            r.correction_attempts.to_string()
                        } else {
                            dash()
                        }
                    })
                    .collect(),
                a.correction_attempts.map_or_else(dash, one_decimal),
            ),
            (
                "Status",
                row.records
                    .iter()
                    .map(|r| if r.status { "✓" } else { "✗" }.to_string())
                    .collect(),
                format!("{}/{}", a.successes, a.rules),
            ),
            (
                "Success rate (%)",
                row.records
                    .iter()
                    .map(|r| one_decimal(r.success_rate_percent))
                    .collect(),
                one_decimal(a.success_rate_percent),
            ),
        ];
        for (i, (name, cells, avg)) in metrics.into_iter().enumerate() {
            let mut line = vec![
                if i == 0 {
                    row.provider.clone()
                } else {
                    String::new()
                },
                name.to_string(),
            ];
            line.extend(cells);
            line.push(avg);
            grid.push(line);
        }
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, line) in grid.iter().enumerate() {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, w))| {
                let pad = w - cell.chars().count();
                // Names left-aligned, numbers right-aligned.
                if c < 2 {
                    format!("{cell}{}", " ".repeat(pad))
                } else {
                    format!("{}{cell}", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 && grid.len() > 1 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            let _ = writeln!(out, "{}", "-".repeat(total));
        }
    }
    out
}

pub fn render_eval(t: &EvalTable, format: EvalFormat) -> Vec<u8> {
    match format {
        EvalFormat::Json => {
            let v = serde_json::to_value(t).expect("tables serialize");
            let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
            s.push('\n');
            s
        }
        EvalFormat::Text => text_table(t),
    }
    .into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(provider: &str, rule_id: u8, status: bool, corrections: usize, rate: f64) -> EvalRecord {
        EvalRecord {
            provider: provider.into(),
            rule_id,
            processing_time: status.then_some(1.5),
            correction_attempts: corrections,
            status,
            success_rate_percent: rate,
        }
    }

    #[test]
    fn failures_are_excluded_from_time_and_corrections_only() {
        let rows = [
            rec("p", 1, true, 1, 50.0),
            rec("p", 2, false, 10, 0.0),
            rec("p", 3, true, 3, 25.0),
        ];
        let a = Averages::of(&rows.iter().collect::<Vec<_>>());
        assert_eq!(a.correction_attempts, Some(2.0));
        assert_eq!(a.processing_time, Some(1.5));
        assert_eq!(a.success_rate_percent, 25.0);
        assert_eq!((a.successes, a.rules), (2, 3));
    }

    #[test]
    fn all_failed_has_no_time_average() {
        let rows = [rec("p", 1, false, 10, 0.0)];
        let a = Averages::of(&rows.iter().collect::<Vec<_>>());
        assert_eq!(
            (
                a.processing_time,
                a.correction_attempts,
                a.success_rate_percent
            ),
            (None, None, 0.0)
        );
    }

    #[test]
    fn assembly_orders_by_rule_and_rejects_gaps() {
        let recs = [
            rec("b", 2, true, 0, 100.0),
            rec("a", 1, true, 0, 100.0),
            rec("b", 1, true, 1, 50.0),
            rec("a", 2, false, 10, 0.0),
        ];
        let t = EvalTable::assemble(&[1, 2], &recs).unwrap();
        assert_eq!(t.rows[0].provider, "b");
        assert_eq!(
            t.rows[0]
                .records
                .iter()
                .map(|r| r.rule_id)
                .collect::<Vec<_>>(),
            [1, 2]
        );
        assert!(EvalTable::assemble(&[1, 2, 3], &recs)
            .unwrap_err()
            .contains("rule 3"));
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = EvalTable::assemble(&[1, 2], &[]).unwrap();
        assert_eq!(
            String::from_utf8(render_eval(&t, EvalFormat::Text)).unwrap(),
            "Model  Metric  Rule 1  Rule 2  Avg\n"
        );
    }

    #[test]
    fn text_cells_mark_failures() {
        let recs = [rec("p", 1, true, 1, 50.0), rec("p", 2, false, 10, 0.0)];
        let text = String::from_utf8(render_eval(
            &EvalTable::assemble(&[1, 2], &recs).unwrap(),
            EvalFormat::Text,
        ))
        .unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("Model  Metric"));
        assert!(
            lines[2].starts_with("p      Processing time (s)")
                && lines[2].ends_with("1.5       -   1.5"),
            "{text}"
        );
        assert!(lines[4].ends_with("✓       ✗   1/2"), "{text}");
        assert!(lines[5].ends_with("50.0     0.0  25.0"), "{text}");
    }
}
