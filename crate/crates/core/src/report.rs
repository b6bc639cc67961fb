//! Compliance reports: aggregation of rule results, template
//! recommendations, structured and human-readable rendering, and optional
//! provider-written narration.

use std::fmt::Write;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;

use crate::building_model::{BuildingModel, ElementId};
use crate::orchestrator::{Message, Provider, Task};
use crate::rules::{
    rule_spec, trim_number, CheckResult, Finding, Quantity, RuleConfig, Status, StatusCounts,
    Subject,
};
use crate::units::AreaUnit;

/// How many findings the summary lists as the worst.
pub const WORST_FINDINGS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleReport {
    pub rule_id: u8,
    pub title: String,
    pub description: String,
    pub overall: Status,
    pub counts: StatusCounts,
    pub findings: Vec<Finding>,
}

/// A non-compliant finding ranked by how far it misses its requirement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstFinding {
    pub rule_id: u8,
    pub subject: Subject,
    /// Largest relative miss over the finding's compared values, in percent.
    pub shortfall_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub total_rules: usize,
    pub rules_failed: usize,
    pub counts: StatusCounts,
    pub worst_findings: Vec<WorstFinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub rule_id: u8,
    pub subject: Subject,
    /// Elements to act on; empty for building-wide requirements.
    pub element_ids: Vec<ElementId>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NarrativeSource {
    Provider,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Narrative {
    pub source: NarrativeSource,
    pub provider: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceReport {
    pub model_name: String,
    pub generated_at: DateTime<Utc>,
    pub per_rule: Vec<RuleReport>,
    pub summary: Summary,
    pub recommendations: Vec<Recommendation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub narrative: Option<Narrative>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

fn add_counts(total: &mut StatusCounts, c: StatusCounts) {
    total.compliant += c.compliant;
    total.non_compliant += c.non_compliant;
    total.not_applicable += c.not_applicable;
}

/// Aggregate rule results. The timestamp is an input so that output is
/// reproducible.
pub fn build_report(
    model: &BuildingModel,
    results: &[CheckResult],
    generated_at: DateTime<Utc>,
) -> ComplianceReport {
    let config = RuleConfig::default();
    let mut counts = StatusCounts::default();
    let mut worst = Vec::new();
    let mut recommendations = Vec::new();
    let per_rule: Vec<RuleReport> = results
        .iter()
        .map(|r| {
            let spec = rule_spec(r.rule_id, &config);
            let c = r.counts();
            add_counts(&mut counts, c);
            for f in r.with_status(Status::NonCompliant) {
                worst.push(WorstFinding {
                    rule_id: r.rule_id,
                    subject: f.subject.clone(),
                    shortfall_percent: shortfall(f),
                });
                recommendations.push(Recommendation {
                    rule_id: r.rule_id,
                    subject: f.subject.clone(),
                    element_ids: f.subject.element_ids(),
                    text: recommend(model, r.rule_id, f),
                });
            }
            RuleReport {
                rule_id: r.rule_id,
                title: spec
                    .as_ref()
                    .map_or_else(|| format!("Rule {}", r.rule_id), |s| s.title.to_string()),
                description: spec.map(|s| s.description.to_string()).unwrap_or_default(),
                overall: r.overall,
                counts: c,
                findings: r.findings.clone(),
            }
        })
        .collect();
    worst.sort_by(|a, b| {
        b.shortfall_percent
            .total_cmp(&a.shortfall_percent)
            .then(a.rule_id.cmp(&b.rule_id))
            .then_with(|| a.subject.cmp(&b.subject))
    });
    worst.truncate(WORST_FINDINGS);
    ComplianceReport {
        model_name: model.name.clone(),
        generated_at,
        summary: Summary {
            total_rules: per_rule.len(),
            rules_failed: per_rule
                .iter()
                .filter(|r| r.overall == Status::NonCompliant)
                .count(),
            counts,
            worst_findings: worst,
        },
        per_rule,
        recommendations,
        narrative: None,
    }
}

fn shortfall(f: &Finding) -> f64 {
    let miss = f
        .compared_names()
        .into_iter()
        .map(|n| {
            let (m, r) = (f.measured[n].canonical(), f.required[n].canonical());
            if r == 0.0 {
                0.0
            } else {
                (m - r).abs() / r.abs() * 100.0
            }
        })
        .fold(0.0, f64::max);
    (miss * 10.0).round() / 10.0
}

/// `q` in the unit `like` was stated in.
fn show_like(q: &Quantity, like: &Quantity) -> String {
    match (q, like) {
        (Quantity::Length(l), Quantity::Length(u)) => {
            format!(
                "{} {}",
                trim_number(l.convert(u.unit).value),
                u.unit.symbol()
            )
        }
        (Quantity::Area(a), _) => format!(
            "{} sq ft",
            trim_number(a.convert(AreaUnit::SquareFoot).value)
        ),
        _ => q.display(),
    }
}

fn element_label(model: &BuildingModel, noun: &str, id: ElementId) -> String {
    match model.element(id) {
        Some(e) if !e.name.is_empty() => format!("{noun} {id} ({})", e.name),
        _ => format!("{noun} {id}"),
    }
}

fn pair(f: &Finding, name: &str) -> Option<(String, String)> {
    let m = f.measured.get(name)?;
    let r = f.required.get(name)?;
    Some((show_like(m, r), show_like(r, r)))
}

fn recommend(model: &BuildingModel, rule_id: u8, f: &Finding) -> String {
    let label = |noun: &str| match &f.subject {
        Subject::Element { id } => element_label(model, noun, *id),
        other => other.to_string(),
    };
    let raise = |noun: &str, verb: &str, names: &[&str]| {
        let parts: Vec<String> = names
            .iter()
            .filter_map(|n| {
                pair(f, n).map(|(m, r)| format!("{} from {m} to at least {r}", n.replace('_', " ")))
            })
            .collect();
        format!("{verb} {} {}.", label(noun), parts.join(" and "))
    };
    match (rule_id, &f.subject) {
        (1, _) => {
            let failing: Vec<&str> = f
                .compared_names()
                .into_iter()
                .filter(|n| !f.measured[*n].meets_min(&f.required[*n]))
                .collect();
            raise("door", "Increase", &failing)
        }
        (2, _) => raise("stair", "Widen", &["width"]),
        (3, _) => {
            let surface = f.measured.get("walking_surface_height").map(|s| format!(" The walking surface is {} above the floor or grade.", show_like(s, &Quantity::inches(0.0))));
            let base = raise("guard", "Raise", &["height"]);
            format!("{base}{}", surface.unwrap_or_default())
        }
        (4, _) => format!(
            "{} Alternatively reduce the floor or ceiling assembly depth.",
            raise("room", "Raise the ceiling of", &["ceiling_height"]).replace("ceiling height from", "from")
        ),
        (5, _) => match (f.measured.get("ratio"), f.required.get("ratio")) {
            (Some(m), Some(r)) => format!(
                "Reduce glazing or add exterior wall area: the window-to-wall ratio is {}% against a maximum of {}%.",
                trim_number(m.canonical() * 100.0),
                trim_number(r.canonical() * 100.0)
            ),
            _ => "Reduce the window-to-wall ratio.".to_string(),
        },
        (6, Subject::Building { .. }) => match pair(f, "largest_area") {
            Some((m, r)) => format!("Provide at least one habitable room of {r} or more; the largest has {m}."),
            None => "Provide a habitable room that meets the primary area minimum.".to_string(),
        },
        (6, _) => raise("room", "Enlarge", &["area"]),
        (7, _) => match pair(f, "clear_depth") {
            Some((m, r)) => format!("Clear the space in front of {}: {m} is available, {r} is required.", label("fixture")),
            None => format!("Clear the space in front of {}.", label("fixture")),
        },
        (8, Subject::Building { key }) => format!("Add a {} to the dwelling unit.", key.replace("_or_", " or ").replace('_', " ")),
        (9, _) => format!("Install a sink in {}.", label("kitchen")),
        (10, _) => format!("Correct {}: {}.", label("floor"), f.note),
        (11, Subject::Pair { a, b }) => match pair(f, "distance") {
            Some((m, r)) => format!(
                "Move {} and {} apart: they are {m} apart, at least {r} is required.",
                element_label(model, "footing", *a),
                element_label(model, "footing", *b)
            ),
            None => format!("Move footings {a} and {b} apart."),
        },
        (12, _) => raise("room", "Increase outdoor air to", &["outdoor_air"]).replace("outdoor air from", "from"),
        _ => {
            let note = if f.note.is_empty() { "see the finding details".to_string() } else { f.note.clone() };
            format!("Resolve {}: {note}.", f.subject)
        }
    }
}

fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn structured(r: &ComplianceReport) -> String {
    // Going through `Value` sorts every object's keys.
    let v = serde_json::to_value(r).expect("reports serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

fn subject_line(f: &Finding) -> String {
    let mut line = f.subject.to_string();
    let names = f.compared_names();
    if !names.is_empty() {
        let parts: Vec<String> = names
            .iter()
            .map(|n| {
                format!(
                    "{} {} (required {})",
                    n,
                    show_like(&f.measured[*n], &f.required[*n]),
                    show_like(&f.required[*n], &f.required[*n])
                )
            })
            .collect();
        let _ = write!(line, ": {}", parts.join("; "));
    }
    if !f.note.is_empty() {
        let _ = write!(line, " [{}]", f.note);
    }
    line
}

fn human(r: &ComplianceReport) -> String {
    let mut out = String::new();
    let c = &r.summary.counts;
    let _ = writeln!(out, "Compliance report: {}", r.model_name);
    let _ = writeln!(out, "Generated: {}", timestamp(&r.generated_at));
    let _ = writeln!(out);
    let _ = writeln!(out, "Summary");
    let _ = writeln!(out, "  Rules checked: {}", r.summary.total_rules);
    let _ = writeln!(out, "  Rules failed: {}", r.summary.rules_failed);
    let _ = writeln!(
        out,
        "  Findings: {} compliant, {} non-compliant, {} not applicable",
        c.compliant, c.non_compliant, c.not_applicable
    );
    if !r.summary.worst_findings.is_empty() {
        let _ = writeln!(out, "  Largest shortfalls:");
        for w in &r.summary.worst_findings {
            let _ = writeln!(
                out,
                "    rule {}, {}: {}% short",
                w.rule_id,
                w.subject,
                trim_number(w.shortfall_percent)
            );
        }
    }
    for rule in &r.per_rule {
        let _ = writeln!(out);
        let overall = match rule.overall {
            Status::Compliant => "compliant",
            Status::NonCompliant => "non-compliant",
            Status::NotApplicable => "not applicable",
        };
        let _ = writeln!(out, "Rule {}: {} ({overall})", rule.rule_id, rule.title);
        if !rule.description.is_empty() {
            let _ = writeln!(out, "  {}", rule.description);
        }
        for (status, heading) in [
            (Status::Compliant, "Compliant"),
            (Status::NonCompliant, "Non-compliant"),
            (Status::NotApplicable, "Not applicable"),
        ] {
            let list: Vec<&Finding> = rule
                .findings
                .iter()
                .filter(|f| f.status == status)
                .collect();
            if list.is_empty() {
                continue;
            }
            let _ = writeln!(out, "  {heading} ({}):", list.len());
            for f in list {
                let _ = writeln!(out, "    - {}", subject_line(f));
            }
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Recommendations");
    if r.recommendations.is_empty() {
        let _ = writeln!(out, "  None. Every checked requirement is met.");
    }
    for (i, rec) in r.recommendations.iter().enumerate() {
        let _ = writeln!(out, "  {}. [rule {}] {}", i + 1, rec.rule_id, rec.text);
    }
    if let Some(n) = &r.narrative {
        let _ = writeln!(out);
        match n.source {
            NarrativeSource::Provider => {
                let _ = writeln!(out, "Narrative (written by {})", n.provider);
            }
            NarrativeSource::Fallback => {
                let _ = writeln!(out, "Narrative (fallback)");
            }
        }
        for line in n.text.trim_end().lines() {
            let _ = writeln!(out, "  {line}");
        }
    }
    out
}

pub fn render_report(r: &ComplianceReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => structured(r),
        ReportFormat::Text => human(r),
    }
    .into_bytes()
}

const NARRATION_INSTRUCTIONS: &str = "You are a building-code compliance reviewer. Using only the JSON compliance report \
provided, write a short report for the design team: summarize the key issues, describe each non-compliant element by \
its id, give corrective recommendations, and explain their impact on safety and functionality. If nothing is \
non-compliant, confirm that the model adheres to every checked rule. Plain prose, no code.";

fn fallback_text(r: &ComplianceReport, why: &str) -> String {
    let mut out =
        format!("Narration was unavailable ({why}); the template recommendations follow.\n");
    if r.recommendations.is_empty() {
        out.push_str("Every checked rule is satisfied; no corrective action is needed.\n");
    }
    for rec in &r.recommendations {
        let _ = writeln!(out, "- {}", rec.text);
    }
    out
}

/// Ask the provider for a prose narrative of the report. Provider
/// failures fall back to the template recommendations with a notice.
pub fn narrate_report(provider: &dyn Provider, r: &ComplianceReport) -> Narrative {
    let mut plain = r.clone();
    plain.narrative = None;
    let messages = [
        Message::system(NARRATION_INSTRUCTIONS),
        Message::user(structured(&plain)),
    ];
    match provider.complete(&messages, Task::Narrate) {
        Ok(text) if !text.trim().is_empty() => Narrative {
            source: NarrativeSource::Provider,
            provider: provider.name().to_string(),
            text: text.trim().to_string(),
        },
        Ok(_) => Narrative {
            source: NarrativeSource::Fallback,
            provider: provider.name().to_string(),
            text: fallback_text(r, "the provider returned an empty response"),
        },
        Err(e) => Narrative {
            source: NarrativeSource::Fallback,
            provider: provider.name().to_string(),
            text: fallback_text(r, &format!("provider error: {e}")),
        },
    }
}

impl ComplianceReport {
    pub fn with_narrative(mut self, n: Narrative) -> Self {
        self.narrative = Some(n);
        self
    }

    /// Whether any rule has a non-compliant finding.
    pub fn has_violations(&self) -> bool {
        self.summary.counts.non_compliant > 0
    }
}
